use crate::model::ValidationReport;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    Validation(ValidationReport),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("unknown gadget `{0}`")]
    UnknownGadget(String),
    #[error("invalid matching: {0}")]
    InvalidMatching(String),
    #[error("matching is not fair: ({applicant}, {project}) has justified envy")]
    Unfair { applicant: String, project: String },
    #[error("matching is infeasible under the supervisor budgets")]
    Infeasible,
    #[error("project order is not a permutation of the projects: {0}")]
    BadOrder(String),
    #[error("size guard exceeded: {what} = {actual} > {limit}")]
    SizeGuard {
        what: &'static str,
        actual: usize,
        limit: usize,
    },
    #[error("invalid generator settings: {0}")]
    Generator(String),
    #[error("regions do not partition the hospitals: {0}")]
    Regions(String),
    #[error("invalid targets: {0}")]
    Targets(String),
    #[error("invalid SMTI instance: {0}")]
    Smti(String),
    #[error("branch-and-bound node limit of {0} reached before optimality was proven")]
    NodeLimit(usize),
    #[error("self-check failed: {0}")]
    Verification(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
