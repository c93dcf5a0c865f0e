use std::path::PathBuf;

/// Errors produced by the membrane toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parameter domain violation: {0}")]
    Parameter(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),

    #[error("ray overrun at mass coordinate {m}: discriminant {discriminant} < 0")]
    RayOverrun { m: f64, discriminant: f64 },

    #[error("transversality violated at node {node}: nu . theta = {value}")]
    Transversality { node: usize, value: f64 },

    #[error("minimization diverged at iteration {iteration}: {reason}")]
    Diverged { iteration: usize, reason: String },

    #[error("no admissible bump support: {0}")]
    NoBumpSupport(String),

    #[error("singular mass Jacobian: |det A| = {0:e}")]
    SingularJacobian(f64),

    #[error("curve perturbation is not an immersion at parameter {s}")]
    Immersion { s: f64 },

    #[error("Newton solve failed: {0}")]
    Newton(String),

    #[error("malformed input{}: {msg}", .path.as_ref().map(|p| format!(" in {}", p.display())).unwrap_or_default())]
    Parse { path: Option<PathBuf>, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse {
            path: None,
            msg: msg.into(),
        }
    }

    pub(crate) fn with_path(self, path: &std::path::Path) -> Self {
        match self {
            Error::Parse { msg, .. } => Error::Parse {
                path: Some(path.to_path_buf()),
                msg,
            },
            other => other,
        }
    }
}
