//! Simulation and estimation toolkit for critical branching processes whose
//! reproduction law is driven by a correlated Gaussian environment.
//!
//! The model: a population starts with a single individual and individuals of
//! generation `n` reproduce independently according to a common law with
//! probability generating function `f_n`. The sequence of means is coupled to
//! a stationary Gaussian sequence `X_1, X_2, ...` (fractional Gaussian noise
//! with Hurst parameter `H`) through
//!
//! ```text
//!     f_n'(1) = exp(-X_{n+1}),      S_n = X_1 + ... + X_n .
//! ```
//!
//! Since `E[X] = 0` the process is critical: conditioned on the environment
//! the population mean after `n` generations is `exp(-S_n)`, and the walk
//! `S_n` decides whether an epoch is favourable or hostile.
//!
//! The crate is organised around that decomposition:
//!
//! - [`env`]: exact sampling of the noise via circulant embedding, the
//!   associated random walk, and its path functionals.
//! - [`offspring`]: the supported reproduction families (geometric, Poisson,
//!   binomial), their generating functions, and aggregate sampling.
//! - [`quenched`]: conditional-on-environment quantities computed exactly,
//!   such as survival probabilities and martingale moments.
//! - [`sim`]: Monte Carlo estimators for tail probabilities of extinction
//!   time, maximal population and total progeny.
//! - [`analysis`]: power-law fits of estimated tails and comparison against
//!   the predicted exponents.
//! - [`report`]: deterministic CSV/JSON/SVG emission of results.
//!
//! Numeric kernels are generic over the scalar type through [`Scalar`];
//! `f64` aliases for the main types are exported at the crate root and are
//! what the estimation drivers use.

pub mod analysis;
pub mod env;
pub mod error;
pub mod offspring;
pub mod quenched;
pub mod report;
mod scalar;
pub mod seeds;
pub mod sim;

pub use error::Error;
pub use scalar::Scalar;

/// Scalar type used by the estimation drivers and all I/O.
pub type Real = f64;

/// `f64` environment path, the form produced by the drivers.
pub type EnvPath64 = env::EnvPath<Real>;
/// `f64` noise sampler.
pub type FgnSampler64 = env::FgnSampler<Real>;
/// `f64` offspring law.
pub type OffspringLaw64 = offspring::OffspringLaw<Real>;
/// `f64` quenched survival curve.
pub type SurvivalCurve64<'a> = quenched::QuenchedSurvivalCurve<'a, Real>;

/// Convenience result alias for fallible crate operations.
pub type Result<T, E = Error> = std::result::Result<T, E>;
