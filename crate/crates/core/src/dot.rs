//! Graphviz export.

use std::collections::BTreeSet;
use std::fmt::Write;

use crate::model::{ArtefactKind, GoalModel, LinkKind};
use crate::reconcile::{AnnotatedModel, ConflictReport};

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Renders the model as a `digraph`: one cluster per actor, decomposition
/// edges tagged `AND`/`OR`, dependency edges dotted. When an analysis is
/// given, cumulative conditions are added to the labels and artefacts with
/// findings carry `conflict=true`.
pub fn export_dot(
    model: &GoalModel,
    annotated: Option<&AnnotatedModel>,
    report: Option<&ConflictReport>,
) -> String {
    let conflicted: BTreeSet<&str> = report
        .map(|r| r.findings.iter().map(|f| f.at.as_str()).collect())
        .unwrap_or_default();
    let mut out = String::from("digraph afscr {\n");
    for actor in model.actors.values() {
        if actor.members.is_empty() {
            continue;
        }
        let _ = writeln!(
            out,
            "  subgraph {} {{",
            quote(&format!("cluster_{}", actor.id))
        );
        let _ = writeln!(out, "    label={};", quote(&actor.name));
        for id in &actor.members {
            let Some(a) = model.artefact(id) else {
                continue;
            };
            let shape = match a.kind {
                ArtefactKind::Goal => "ellipse",
                ArtefactKind::Task => "hexagon",
                ArtefactKind::Resource => "box",
            };
            let mut label = format!("{}\\n{}\\nIE: {}", a.id, a.name, a.ie);
            if let Some(ce) = annotated.and_then(|m| m.ce(id)) {
                let _ = write!(label, "\\nCE: {ce}");
            }
            let mut attrs = vec![format!("label={}", quote(&label)), format!("shape={shape}")];
            if a.temp {
                attrs.push("style=dashed".into());
            }
            if conflicted.contains(id.as_str()) {
                attrs.push("conflict=true".into());
                attrs.push("color=red".into());
            }
            let _ = writeln!(out, "    {} [{}];", quote(id), attrs.join(", "));
        }
        out.push_str("  }\n");
    }
    for link in model.decompositions.values() {
        let arrow = match link.kind {
            LinkKind::And => "none",
            LinkKind::Or => "empty",
        };
        for c in &link.children {
            let _ = writeln!(
                out,
                "  {} -> {} [kind={}, arrowhead={arrow}];",
                quote(&link.parent),
                quote(c),
                quote(&link.kind.to_string())
            );
        }
    }
    for d in &model.dependencies {
        let _ = writeln!(
            out,
            "  {} -> {} [kind=\"depends\", style=dotted];",
            quote(&d.depender.artefact),
            quote(&d.dependee.artefact)
        );
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;

    #[test]
    fn empty_model_is_header_only() {
        assert_eq!(
            export_dot(&GoalModel::default(), None, None),
            "digraph afscr {\n}\n"
        );
    }

    #[test]
    fn nodes_edges_and_conflicts() {
        let m = parse_model(
            r#"actor A "a" {
                goal G "g" ie { p, w };
                temp goal T "t" ie { p };
                and G -> T;
            }"#,
        )
        .unwrap();
        let (ann, rep) = crate::reconcile::analyze(&m, &Default::default(), 16).unwrap();
        let dot = export_dot(&m, Some(&ann), Some(&rep));
        assert!(dot.contains("\"G\" -> \"T\" [kind=\"AND\""), "{dot}");
        assert!(dot.contains("conflict=true"));
        assert!(dot.contains("style=dashed"));
        assert!(dot.contains("CE: { p }"));
    }
}
