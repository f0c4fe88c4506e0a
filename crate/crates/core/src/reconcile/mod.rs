//! Satisfaction reconciliation and conflict detection.

mod engine;
mod operators;
mod report;

pub use engine::{analyze, run_sra};
pub use operators::{
    and_rec, check_commutativity, dep_rec, dep_step, dependency_chain, detect_consistency,
    detect_entailment, minimality_rank, or_rec, rec_kb, state_update, ConsistencyHit,
};
pub use report::{
    AnnotatedModel, ConflictReport, Contribution, Deficiency, Finding, FindingKind, Warning,
};
