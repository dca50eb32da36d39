//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("mesh file error: {0}")]
    MeshFormat(String),

    #[error("degenerate geometry: {0}")]
    Geometry(String),

    #[error("constitutive law violation: {0}")]
    Constitutive(String),

    #[error("coefficient not SPD at ({x:.6}, {y:.6}): sigma=[[{s00:.6e},{s01:.6e}],[{s01:.6e},{s11:.6e}]], eigenvalues ({e0:.6e}, {e1:.6e})")]
    CoefficientNotSpd {
        x: f64,
        y: f64,
        s00: f64,
        s01: f64,
        s11: f64,
        e0: f64,
        e1: f64,
    },

    #[error("singular local system on element {element}: {detail}")]
    SingularElement { element: usize, detail: String },

    #[error("linear solver failure: {detail} (n={n}, nnz={nnz})")]
    Factorization { detail: String, n: usize, nnz: usize },

    #[error("solve residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    ResidualTooLarge { residual: f64, tol: f64 },

    #[error("fixed-point iteration did not converge in {max_iter} sweeps; successive-difference norms: {history:?}")]
    PicardDiverged { max_iter: usize, history: Vec<f64> },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable category, used for CLI exit codes.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Mesh(_) | Error::MeshFormat(_) | Error::Geometry(_) => "mesh",
            Error::Constitutive(_) | Error::CoefficientNotSpd { .. } => "constitutive",
            Error::SingularElement { .. }
            | Error::Factorization { .. }
            | Error::ResidualTooLarge { .. }
            | Error::PicardDiverged { .. } => "solver",
            Error::Config(_) => "config",
            Error::Io(_) | Error::Json(_) => "io",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.category() {
            "config" => 2,
            "mesh" => 3,
            "constitutive" => 4,
            "solver" => 5,
            _ => 6,
        }
    }
}
