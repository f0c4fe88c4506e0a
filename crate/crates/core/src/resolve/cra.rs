use crate::error::{Error, Result};
use crate::reconcile::{Finding, FindingKind};

use super::era::era_edits;
use super::plan::{apply_edits, Edit, IdAllocator, RefactoringPlan};
use super::ResolutionContext;

/// Strips the offending literal from the flagged child, then carries the
/// parent's now-unmet condition with an entailment resolution computed on
/// the stripped model.
pub fn cra_resolve_hierarchic(
    ctx: &ResolutionContext<'_>,
    finding: &Finding,
) -> Result<RefactoringPlan> {
    let child = match (finding.kind, finding.children.first()) {
        (FindingKind::Hierarchic, Some(c)) if !finding.conflicting.is_empty() => c,
        _ => return Err(Error::NotHierarchic(finding.id.clone())),
    };
    let strip = Edit::ReplaceChildIe {
        artefact: child.clone(),
        removed: finding.conflicting.clone(),
    };
    let stripped = apply_edits(ctx.model, std::slice::from_ref(&strip))?;
    let next = ResolutionContext::analyze(&stripped, ctx.kb, ctx.cap)?;

    let mut edits = vec![strip];
    if let Some(unmet) = next.report.get(&format!("entailment@{}", finding.at)) {
        let mut ids = IdAllocator::new(&stripped);
        edits.extend(era_edits(&next, unmet, &mut ids)?);
    }
    Ok(RefactoringPlan::new(
        ctx.model.revision(),
        &finding.id,
        "Strip and carry",
        edits,
    ))
}

/// The two alternative fixes for a sibling conflict: drop the first
/// contribution (Solution 1) or the second (Solution 2).
pub fn cra_resolve_sibling(
    ctx: &ResolutionContext<'_>,
    finding: &Finding,
) -> Result<(RefactoringPlan, RefactoringPlan)> {
    let [first, second] = finding.contributions.as_slice() else {
        return Err(Error::NotSibling(finding.id.clone()));
    };
    if finding.kind != FindingKind::Sibling {
        return Err(Error::NotSibling(finding.id.clone()));
    }
    let revision = ctx.model.revision();
    let plan = |label: &str, c: &crate::reconcile::Contribution| {
        RefactoringPlan::new(
            revision.clone(),
            &finding.id,
            label,
            vec![Edit::ReplaceChildIe {
                artefact: c.child.clone(),
                removed: [c.literal.clone()].into_iter().collect(),
            }],
        )
    };
    Ok((plan("Solution 1", first), plan("Solution 2", second)))
}
