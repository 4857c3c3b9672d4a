use thiserror::Error;

/// Errors reported by the library.
///
/// Preconditions of the numeric operations surface here rather than as
/// panics: the estimation drivers run thousands of replicates and a bad
/// configuration must fail fast and cleanly.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Hurst parameter outside the open unit interval.
    #[error("hurst parameter must lie strictly between 0 and 1, got {0}")]
    InvalidHurst(f64),

    /// Anti-persistent noise rejected by an estimation driver.
    #[error("estimation requires hurst >= 1/2 (white or persistent noise), got {0}")]
    AntiPersistentHurst(f64),

    /// Circulant eigenvalue too negative to be rounding noise.
    #[error("circulant embedding failed: eigenvalue {min_eigenvalue:e} below clipping tolerance")]
    EmbeddingFailure { min_eigenvalue: f64 },

    /// Index range violated `1 <= from <= to <= n`.
    #[error("index range [{from}, {to}] invalid for walk of length {len}")]
    IndexRange { from: usize, to: usize, len: usize },

    /// First-passage level of zero has no well-defined side.
    #[error("first passage level must be nonzero")]
    ZeroLevel,

    /// Generating function argument outside `[0, 1]`.
    #[error("pgf argument {0} outside [0, 1]")]
    PgfDomain(f64),

    /// Offspring mean not positive or not finite.
    #[error("offspring mean must be positive and finite, got {0}")]
    InvalidMean(f64),

    /// Binomial mean cannot exceed the number of trials.
    #[error("binomial mean {mean} exceeds n_max = {n_max}")]
    BinomialMeanRange { mean: f64, n_max: u32 },

    /// Environment entry maps to a mean outside the family's range.
    #[error("environment value {value} at index {index} is below -log(n_max); binomial mean would exceed n_max")]
    EnvOutOfDomain { index: usize, value: f64 },

    /// Unrecognised offspring family string.
    #[error("unknown offspring family {0:?} (expected \"geometric\", \"poisson\" or \"binomial:<n_max>\")")]
    ParseFamily(String),

    /// Horizon exceeds the available environment.
    #[error("horizon {n} exceeds environment length {len}")]
    Horizon { n: usize, len: usize },

    /// Decomposition horizon above the supported cap.
    #[error("decomposition horizon {n} exceeds cap {cap}; per-term output is only meaningful at short range")]
    DecompositionCap { n: usize, cap: usize },

    /// Survival probability underflowed past any representable value.
    #[error("survival probability underflowed below 1e-300 at horizon {n}")]
    Precision { n: usize },

    /// Invalid estimator configuration.
    #[error("config: {0}")]
    Config(String),

    /// Too few usable points for a fit.
    #[error("fit needs at least {min} usable points, found {found}")]
    InsufficientData { min: usize, found: usize },

    /// All tail estimates equal; the fit is undefined.
    #[error("tail estimates are constant; slope is undefined")]
    DegenerateData,

    /// No common thresholds between estimates to compare.
    #[error("estimates share no aligned thresholds")]
    Alignment,
}

impl Error {
    /// Shorthand for [`Error::Config`].
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
