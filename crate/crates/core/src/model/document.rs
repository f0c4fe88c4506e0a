//! Lossless JSON document form of a [`GoalModel`], used by the service.

use serde::{Deserialize, Serialize};

use super::{Artefact, DecompositionLink, DependencyLink, GoalModel};
use crate::error::{Error, Result};

pub const DOCUMENT_FORMAT: &str = "afscr-model/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActorRecord {
    pub id: String,
    pub name: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format: String,
    pub actors: Vec<ActorRecord>,
    pub artefacts: Vec<Artefact>,
    pub decompositions: Vec<DecompositionLink>,
    #[serde(default)]
    pub dependencies: Vec<DependencyLink>,
}

impl From<&GoalModel> for ModelDocument {
    fn from(model: &GoalModel) -> Self {
        Self {
            format: DOCUMENT_FORMAT.to_string(),
            actors: model
                .actors
                .values()
                .map(|a| ActorRecord {
                    id: a.id.clone(),
                    name: a.name.clone(),
                })
                .collect(),
            artefacts: model.artefacts.values().cloned().collect(),
            decompositions: model.decompositions.values().cloned().collect(),
            dependencies: model.dependencies.iter().cloned().collect(),
        }
    }
}

impl TryFrom<ModelDocument> for GoalModel {
    type Error = Error;

    fn try_from(doc: ModelDocument) -> Result<Self> {
        if doc.format != DOCUMENT_FORMAT {
            return Err(Error::InvalidEdit(format!(
                "unsupported document format `{}`",
                doc.format
            )));
        }
        let mut model = GoalModel::default();
        for a in doc.actors {
            if model.actors.contains_key(&a.id) {
                return Err(Error::DuplicateId(a.id));
            }
            model.add_actor(a.id, a.name);
        }
        for a in doc.artefacts {
            model.add_artefact(a)?;
        }
        for link in doc.decompositions {
            model.add_link(&link.parent, link.kind, link.children)?;
        }
        for dep in doc.dependencies {
            for ep in [&dep.depender, &dep.dependee] {
                if !model.artefacts.contains_key(&ep.artefact) {
                    return Err(Error::UnknownId(ep.artefact.clone()));
                }
            }
            model.dependencies.insert(dep);
        }
        Ok(model)
    }
}

pub fn to_document_json(model: &GoalModel) -> String {
    serde_json::to_string_pretty(&ModelDocument::from(model)).expect("document serializes")
}

pub fn from_document_json(text: &str) -> Result<GoalModel> {
    let doc: ModelDocument = serde_json::from_str(text)?;
    GoalModel::try_from(doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;

    #[test]
    fn json_round_trip_is_lossless() {
        let m = parse_model(
            r#"actor A "a" {
                 temp goal G "g" ie { {p}, {!q} } mask { r };
                 task T "t" ie { p };
                 or G -> T;
               }
               actor B "b" { resource R "r" ie { s }; }
               depends A.T -> B.R;"#,
        )
        .unwrap();
        let json = to_document_json(&m);
        assert!(json.contains("\"!q\""));
        assert_eq!(from_document_json(&json).unwrap(), m);
    }

    #[test]
    fn rejects_unknown_link_target() {
        let mut doc = ModelDocument::from(&parse_model(r#"actor A "a" { goal G "g"; }"#).unwrap());
        doc.decompositions.push(DecompositionLink {
            parent: "G".into(),
            kind: crate::model::LinkKind::And,
            children: vec!["X".into()],
        });
        let err = GoalModel::try_from(doc).unwrap_err();
        assert!(matches!(err, Error::UnknownId(id) if id == "X"));
    }
}
