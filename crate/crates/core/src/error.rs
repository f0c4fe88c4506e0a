use crate::model::Diagnostic;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("unknown id `{0}`")]
    UnknownId(String),

    #[error("mixed decomposition kinds under {0}")]
    MixedKinds(String),

    #[error("invalid model: {}", join_diagnostics(.0))]
    Invalid(Vec<Diagnostic>),

    #[error("dependency cycle: {}", .0.join(","))]
    DependencyCycle(Vec<String>),

    #[error("enumeration cap of {cap} alternatives exceeded at {at}")]
    CapExceeded { cap: usize, at: String },

    #[error("unknown finding `{0}`")]
    UnknownFinding(String),

    #[error("finding `{0}` is not hierarchic")]
    NotHierarchic(String),

    #[error("finding `{0}` is not a sibling conflict")]
    NotSibling(String),

    #[error("nothing to resolve for `{0}`")]
    NothingToResolve(String),

    #[error("stale plan: built against revision {expected}, model is at {actual}")]
    StaleRevision { expected: String, actual: String },

    #[error("id collision: `{0}` already exists")]
    IdCollision(String),

    #[error("edit rejected: {0}")]
    InvalidEdit(String),

    #[error("malformed document: {0}")]
    Document(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }
}

fn join_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| d.message.as_str())
        .collect::<Vec<_>>()
        .join("; ")
}
