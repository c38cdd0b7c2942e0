use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("transfer function composition failed: {0}")]
    Composition(String),

    #[error("ill-posed loop: {0}")]
    WellPosedness(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("shape mismatch: expected {expected}, got {got} ({what})")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite learning signal: e_c={e_c}, t_r_output={t_r_output}")]
    Signal { e_c: f64, t_r_output: f64 },

    #[error("numeric abort at layer {layer}, weight ({row}, {col}): delta={delta} (eta={eta}, phi={phi}, input={input})")]
    Numeric {
        layer: usize,
        row: usize,
        col: usize,
        delta: f64,
        eta: f64,
        phi: f64,
        input: f64,
    },

    #[error("lost the line: off track for {steps} consecutive steps at step {at}")]
    LostLine { at: usize, steps: usize },

    #[error("invalid track: {0}")]
    Track(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(what: &'static str, expected: usize, got: usize) -> Self {
        Error::Shape {
            what,
            expected,
            got,
        }
    }
}
