use thiserror::Error;

/// Named admissibility conditions that a configuration can violate.
///
/// The display strings are part of the CLI contract: scripts grep for them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    /// Ordinary-smooth noise: `|t|^β |φ_θ(t)| → B > 0`.
    A3,
    /// Bandwidth: `b_n → 0`, `|Λ_n| b_n → ∞`, `|Λ_n| b_n^{2β+1} → ∞`.
    A5,
    /// Mixing summability `Σ m^{2d-1} α_{1,∞}(m) < ∞`.
    MixingSummability,
    /// Physical-dependence summability `Σ |i|^{5d/2} δ_i < ∞`.
    DependenceSummability,
    /// Evaluation points must be pairwise distinct.
    DistinctPoints,
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Condition::A3 => "A3",
            Condition::A5 => "A5",
            Condition::MixingSummability => "condition (7)",
            Condition::DependenceSummability => "condition (8)",
            Condition::DistinctPoints => "distinct points",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("{condition} violated: {detail}")]
    Violation { condition: Condition, detail: String },

    #[error("config: {0}")]
    Config(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn violation(condition: Condition, detail: impl Into<String>) -> Self {
        Error::Violation {
            condition,
            detail: detail.into(),
        }
    }

    /// The violated condition, if this error is an admissibility failure.
    pub fn condition(&self) -> Option<Condition> {
        match self {
            Error::Violation { condition, .. } => Some(*condition),
            _ => None,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
