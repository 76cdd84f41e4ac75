use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain where the operation is defined.
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    /// A candidate symplectic potential failed the convexity margin check.
    #[error("non-convex potential: x(1-x)G''(x) = {value} at x = {x}")]
    NonConvex { x: f64, value: f64 },

    /// Two algebraically equivalent routes disagreed beyond tolerance.
    #[error(
        "internal consistency failure ({check}) at N = {n}, t = {t}, rho = {rho}, k = {k:?}: \
         relative gap {gap:e} exceeds {tol:e}"
    )]
    Consistency {
        check: &'static str,
        n: usize,
        t: f64,
        rho: f64,
        k: Option<usize>,
        gap: f64,
        tol: f64,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            op,
            detail: detail.into(),
        }
    }

    /// Short machine-readable tag for the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "domain",
            Error::NonConvex { .. } => "non_convex",
            Error::Consistency { .. } => "consistency",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
        }
    }
}
