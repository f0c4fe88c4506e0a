use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use afscr_core::reconcile::minimality_rank;
use afscr_core::{
    AnnotatedModel, ConflictReport, Finding, GoalModel, RefactoringPlan, RoutineLabel,
};
use serde_json::{json, Value};

use crate::Format;

/// Output sink: stdout, or a file written in one go on [`Out::finish`].
pub struct Out {
    buf: Vec<u8>,
    path: Option<PathBuf>,
}

impl Out {
    pub fn open(path: Option<&Path>) -> io::Result<Self> {
        Ok(Self {
            buf: Vec::new(),
            path: path.map(Path::to_path_buf),
        })
    }

    pub fn write_str(&mut self, s: &str) -> io::Result<()> {
        self.buf.write_all(s.as_bytes())
    }

    fn line(&mut self, s: impl AsRef<str>) -> io::Result<()> {
        self.buf.write_all(s.as_ref().as_bytes())?;
        self.buf.write_all(b"\n")
    }

    fn record(&mut self, v: Value) -> io::Result<()> {
        self.line(v.to_string())
    }

    pub fn finish(self) -> io::Result<()> {
        match self.path {
            Some(p) => fs::write(p, self.buf),
            None => io::stdout().lock().write_all(&self.buf),
        }
    }
}

pub fn labels(
    out: &mut Out,
    format: Format,
    root: &str,
    labels: &[RoutineLabel],
) -> io::Result<()> {
    if format == Format::Structured {
        for (i, l) in labels.iter().enumerate() {
            out.record(json!({
                "record": "orgmod",
                "root": root,
                "index": i + 1,
                "label": l.canonical(),
                "exclusions": l.exclusions(),
                "choices": l.choices(),
                "tree": l.to_structured(),
            }))?;
        }
        return out.record(json!({ "record": "summary", "root": root, "orgmods": labels.len() }));
    }
    out.line(format!("{} ORGMod(s) below {root}", labels.len()))?;
    for (i, l) in labels.iter().enumerate() {
        out.line(format!("Routine {}: {}", i + 1, l.canonical()))?;
        for (parent, excluded) in l.exclusions() {
            out.line(format!("  excludes [{parent},{}]", excluded.join(",")))?;
        }
    }
    Ok(())
}

pub fn report(
    out: &mut Out,
    format: Format,
    model: &GoalModel,
    ann: &AnnotatedModel,
    report: &ConflictReport,
) -> io::Result<()> {
    let structured = format == Format::Structured;
    for actor in model.actors.values() {
        if !structured {
            out.line(format!("actor {} \"{}\"", actor.id, actor.name))?;
        }
        for a in model.artefacts.values().filter(|a| a.actor == actor.id) {
            let Some(ce) = ann.ce(&a.id) else { continue };
            let order = minimality_rank(&a.ie.core(), ce);
            if structured {
                let alts: Vec<Value> = order
                    .iter()
                    .map(|&i| json!({ "index": i + 1, "conditions": ce[i].to_string() }))
                    .collect();
                out.record(json!({
                    "record": "ce",
                    "actor": actor.id,
                    "artefact": a.id,
                    "ie": a.ie.to_string(),
                    "alternatives": alts,
                }))?;
            } else {
                out.line(format!("  {}  IE {}", a.id, a.ie))?;
                for (k, &i) in order.iter().enumerate() {
                    let lead = if k == 0 { "CE" } else { "  " };
                    out.line(format!("      {lead} [{}] {}", i + 1, ce[i]))?;
                }
            }
        }
    }
    if structured {
        for f in &report.findings {
            out.record(finding_record(f))?;
        }
        for w in &report.warnings {
            out.record(json!({ "record": "warning", "at": w.at, "message": w.message }))?;
        }
        return out.record(json!({
            "record": "summary",
            "findings": report.findings.len(),
            "warnings": report.warnings.len(),
        }));
    }
    if report.findings.is_empty() {
        out.line("no findings")?;
    } else {
        out.line(format!("{} finding(s)", report.findings.len()))?;
        for f in &report.findings {
            out.line(format!("  {f}"))?;
        }
    }
    for w in &report.warnings {
        out.line(format!("warning at {}: {}", w.at, w.message))?;
    }
    Ok(())
}

fn finding_record(f: &Finding) -> Value {
    let mut v = serde_json::to_value(f).expect("findings serialize");
    v["record"] = json!("finding");
    v
}

pub fn nothing_to_resolve(out: &mut Out, format: Format) -> io::Result<()> {
    if format == Format::Structured {
        out.record(json!({ "record": "summary", "findings": 0, "message": "nothing to resolve" }))
    } else {
        out.line("nothing to resolve")
    }
}

pub fn plans(
    out: &mut Out,
    format: Format,
    selected: &[(Finding, Vec<RefactoringPlan>)],
) -> io::Result<()> {
    for (finding, plans) in selected {
        if format == Format::Structured {
            for p in plans {
                let mut v = serde_json::to_value(p).expect("plans serialize");
                v["record"] = json!("plan");
                out.record(v)?;
            }
            continue;
        }
        out.line(format!("{finding}"))?;
        for p in plans {
            out.line(format!("  {}  digest {}", p.label, p.digest))?;
            for e in &p.edits {
                out.line(format!("    - {e}"))?;
            }
        }
    }
    Ok(())
}

pub fn applied(
    out: &mut Out,
    format: Format,
    plan: &RefactoringPlan,
    path: &Path,
    revision: &str,
    report: &ConflictReport,
) -> io::Result<()> {
    if format == Format::Structured {
        out.record(json!({
            "record": "applied",
            "finding": plan.finding,
            "label": plan.label,
            "digest": plan.digest,
            "written": path,
            "revision": revision,
        }))?;
        for f in &report.findings {
            out.record(finding_record(f))?;
        }
        return out.record(json!({ "record": "summary", "findings": report.findings.len() }));
    }
    out.line(format!("applied {} to {}", plan.label, plan.finding))?;
    out.line(format!("wrote {} (revision {revision})", path.display()))?;
    if report.findings.is_empty() {
        out.line("re-analysis: no findings")
    } else {
        out.line(format!("re-analysis: {} finding(s)", report.findings.len()))?;
        for f in &report.findings {
            out.line(format!("  {}", f.id))?;
        }
        Ok(())
    }
}
