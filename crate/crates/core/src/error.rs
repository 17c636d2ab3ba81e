use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One named residual of a verification run, with the limit it was held to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub name: String,
    pub value: f64,
    pub limit: f64,
}

impl Residual {
    pub fn new(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
        }
    }

    /// NaN counts as a failure.
    pub fn passed(&self) -> bool {
        self.value <= self.limit
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("rank deficient: rank {rank}, need {required}")]
    RankDeficient { rank: usize, required: usize },

    #[error("numerical failure: {reason} (bracket [{lower}, {upper}])")]
    NumericalFailure {
        reason: String,
        lower: f64,
        upper: f64,
    },

    #[error("outside the domain: {0}")]
    Domain(String),

    #[error("wrong norm kind: expected {expected}")]
    WrongNormKind { expected: &'static str },

    #[error("no norm-one extension found; best extension norms {best_norms:?}")]
    Infeasible { best_norms: Vec<f64> },

    #[error("not an isometry: {0}")]
    NotAnIsometry(String),

    #[error("vanishing property violated: column {k} has support row {row}, but entry ({row}, {l}) has modulus {modulus:e}")]
    VanishingViolation {
        k: usize,
        l: usize,
        row: usize,
        modulus: f64,
    },

    #[error("composition with the projection is not linear: coefficient {alpha:?} has modulus {modulus:e}")]
    LinearityViolation { alpha: Vec<u32>, modulus: f64 },

    #[error("verification failed: {}", failed_names(.0))]
    VerificationFailure(Vec<Residual>),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

fn failed_names(residuals: &[Residual]) -> String {
    residuals
        .iter()
        .filter(|r| !r.passed())
        .map(|r| format!("{}={:e} (limit {:e})", r.name, r.value, r.limit))
        .collect::<Vec<_>>()
        .join(", ")
}

pub type Result<T> = std::result::Result<T, Error>;
