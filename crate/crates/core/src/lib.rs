//! Reconciliation of satisfaction conditions over AND/OR goal models.
//!
//! Artefacts (goals, tasks, resources) carry *immediate* conditions: what
//! becomes true when the artefact is achieved, on its own. The engine folds
//! these bottom-up into *cumulative* conditions, reports where a node's
//! immediate conditions are not established (entailment) or contradicted
//! (consistency), and proposes local refactorings that fix each finding.
//!
//! ```
//! use afscr_core::{analyze, parse_model, KnowledgeBase, DEFAULT_CAP};
//!
//! let model = parse_model(r#"
//!     actor A "Actor" {
//!         goal G "Goal" ie { p, w };
//!         task T1 "First" ie { p };
//!         task T2 "Second" ie { q };
//!         and G -> T1, T2;
//!     }
//! "#).unwrap();
//! let (annotated, report) = analyze(&model, &KnowledgeBase::default(), DEFAULT_CAP).unwrap();
//! assert_eq!(annotated.ce("G").unwrap().to_string(), "{ p, q }");
//! assert_eq!(report.findings[0].id, "entailment@G");
//! ```

pub mod condition;
pub mod dot;
pub mod error;
pub mod kb;
pub mod model;
pub mod orgmod;
pub mod reconcile;
pub mod resolve;

pub use condition::{conflict_set, entails, negate_set, rec, AltConditions, ConditionSet, Literal};
pub use dot::export_dot;
pub use error::{Error, Result};
pub use kb::{kb_consistent, kb_reduce, parse_kb, KnowledgeBase, Rule};
pub use model::{
    from_document_json, parse_model, serialize_model, to_document_json, validate_model, Actor,
    Artefact, ArtefactKind, DecompositionLink, DependencyLink, Diagnostic, Endpoint, GoalModel,
    LinkKind, ModelDocument,
};
pub use orgmod::{
    count_orgmods, derive_routine_labels, extract_dsos, orgmod_labels, traverse_paths,
    RoutineLabel, TraversalPath, DEFAULT_CAP,
};
pub use reconcile::{
    analyze, run_sra, AnnotatedModel, ConflictReport, Finding, FindingKind, Warning,
};
pub use resolve::{
    apply_plan, availability, deficiency, resolve, AvailabilityTuple, DeficiencyList, Edit,
    RefactoringPlan, ResolutionContext,
};
