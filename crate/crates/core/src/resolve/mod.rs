//! Entailment and consistency resolution by model refactoring.

mod cra;
mod deficiency;
mod era;
mod plan;

use crate::error::{Error, Result};
use crate::kb::KnowledgeBase;
use crate::model::GoalModel;
use crate::reconcile::{analyze, AnnotatedModel, ConflictReport, Finding, FindingKind};

pub use cra::{cra_resolve_hierarchic, cra_resolve_sibling};
pub use deficiency::{
    availability, deficiency, AvailabilityTuple, DeficiencyEntry, DeficiencyList,
};
pub use era::era_resolve;
pub use plan::{apply_edits, apply_plan, Edit, RefactoringPlan};

/// A model together with its analysis, the input every resolver works on.
#[derive(Clone, Debug)]
pub struct ResolutionContext<'a> {
    pub model: &'a GoalModel,
    pub kb: &'a KnowledgeBase,
    pub cap: usize,
    pub annotated: AnnotatedModel,
    pub report: ConflictReport,
}

impl<'a> ResolutionContext<'a> {
    pub fn analyze(model: &'a GoalModel, kb: &'a KnowledgeBase, cap: usize) -> Result<Self> {
        let (annotated, report) = analyze(model, kb, cap)?;
        Ok(ResolutionContext {
            model,
            kb,
            cap,
            annotated,
            report,
        })
    }

    pub fn finding(&self, id: &str) -> Result<&Finding> {
        self.report
            .get(id)
            .ok_or_else(|| Error::UnknownFinding(id.to_string()))
    }

    /// Candidate plans for one finding: one for entailment and hierarchic
    /// findings, two for sibling findings.
    pub fn plans_for(&self, finding_id: &str) -> Result<Vec<RefactoringPlan>> {
        let finding = self.finding(finding_id)?;
        match finding.kind {
            FindingKind::Entailment => Ok(vec![era_resolve(self, finding)?]),
            FindingKind::Hierarchic => Ok(vec![cra_resolve_hierarchic(self, finding)?]),
            FindingKind::Sibling => {
                let (a, b) = cra_resolve_sibling(self, finding)?;
                Ok(vec![a, b])
            }
        }
    }

    /// Every finding paired with its candidate plans, in report order.
    pub fn all_plans(&self) -> Result<Vec<(Finding, Vec<RefactoringPlan>)>> {
        self.report
            .findings
            .iter()
            .map(|f| Ok((f.clone(), self.plans_for(&f.id)?)))
            .collect()
    }
}

/// Analyzes `model` and returns the candidate plans for `finding_id`.
pub fn resolve(
    model: &GoalModel,
    kb: &KnowledgeBase,
    finding_id: &str,
    cap: usize,
) -> Result<Vec<RefactoringPlan>> {
    ResolutionContext::analyze(model, kb, cap)?.plans_for(finding_id)
}
