//! Quantities computed exactly, conditional on one environment realization.
//!
//! With `f_i` the reproduction pgf of generation `i` (mean `exp(-X_{i+1})`),
//! survival beyond generation `n` is
//!
//! ```text
//!     q_n = P(T > n | env) = 1 - f_0(f_1(... f_{n-1}(0) ...)) .
//! ```
//!
//! Everything here works in the survival coordinate `t = 1 - s`: iterating
//! `t -> 1 - f(1 - t)` innermost-first keeps full relative precision when
//! survival drops to the 1e-300 range, where the extinction coordinate has
//! long rounded to 1.
//!
//! Two independent evaluation routes are kept for cross-checking: the
//! iterated per-family maps, and (for the geometric family, whose pgfs are
//! linear fractional) a product of 2x2 matrices. Survival also decomposes
//! into a leading term `exp(S_n)` plus weighted corrections
//!
//! ```text
//!     1 / q_n = exp(S_n) + sum_k exp(S_k) * eta_k ,
//!     eta_k   = 1/(1 - f_k(u)) - 1/(f_k'(1)(1 - u)) ,   u = f_{k+1}(...f_{n-1}(0)),
//! ```
//!
//! with `0 <= eta_k <= f_k''(1)/f_k'(1)^2`, which exposes how much of the
//! survival cost is carried by the walk alone.

use crate::env::EnvPath;
use crate::error::Error;
use crate::offspring::{OffspringFamily, OffspringLaw};
use crate::scalar::Scalar;
use crate::Result;

/// Horizon cap for [`gk_decompose`]; per-term output is only meaningful at
/// short range and the term count is quadratic in inspection cost.
pub const DECOMPOSITION_CAP: usize = 50;

/// Survival floor below which the decomposition refuses to continue.
const SURVIVAL_FLOOR: f64 = 1e-300;

/// Survival probabilities `q[k] = P(T > k | env)` for `k = 0..=n`.
#[derive(Clone, Debug)]
pub struct QuenchedSurvivalCurve<'a, F> {
    q: Vec<F>,
    env: &'a EnvPath<F>,
    family: OffspringFamily,
}

impl<'a, F: Scalar> QuenchedSurvivalCurve<'a, F> {
    /// The curve; index `k` holds `P(T > k | env)`.
    pub fn q(&self) -> &[F] {
        &self.q
    }

    /// Largest horizon `n`.
    pub fn horizon(&self) -> usize {
        self.q.len() - 1
    }

    pub fn env(&self) -> &'a EnvPath<F> {
        self.env
    }

    pub fn family(&self) -> OffspringFamily {
        self.family
    }
}

/// Per-generation means `exp(-x[i])`, validated for the family.
///
/// For the binomial family a mean above `n_max` has no law; the offending
/// environment entry is reported rather than clamped.
pub(crate) fn generation_means<F: Scalar>(
    env: &EnvPath<F>,
    family: OffspringFamily,
    n: usize,
) -> Result<Vec<F>> {
    if n > env.len() {
        return Err(Error::Horizon { n, len: env.len() });
    }
    let means: Vec<F> = env.x()[..n].iter().map(|x| (-*x).exp()).collect();
    if let OffspringFamily::Binomial { n_max } = family {
        let cap = F::of_usize(n_max as usize);
        for (i, m) in means.iter().enumerate() {
            if *m > cap {
                return Err(Error::EnvOutOfDomain {
                    index: i,
                    value: env.x()[i].to_f64().unwrap_or(f64::NAN),
                });
            }
        }
    }
    Ok(means)
}

#[inline]
fn step<F: Scalar>(family: OffspringFamily, mean: F, q: F) -> F {
    OffspringLaw { family, mean }.survival_step(q)
}

/// Survival probability at a single horizon, `P(T > n | env)`.
///
/// One backward pass over the first `n` generations, innermost map first.
pub fn survival_at<F: Scalar>(env: &EnvPath<F>, family: OffspringFamily, n: usize) -> Result<F> {
    let means = generation_means(env, family, n)?;
    Ok(survival_with_means(family, &means, n))
}

/// Survival at several horizons, sharing the mean precomputation.
pub fn survival_at_horizons<F: Scalar>(
    env: &EnvPath<F>,
    family: OffspringFamily,
    horizons: &[usize],
) -> Result<Vec<F>> {
    let deepest = horizons.iter().copied().max().unwrap_or(0);
    let means = generation_means(env, family, deepest)?;
    Ok(horizons.iter().map(|&n| survival_with_means(family, &means, n)).collect())
}

fn survival_with_means<F: Scalar>(family: OffspringFamily, means: &[F], n: usize) -> F {
    let mut q = F::one();
    for i in (0..n).rev() {
        q = step(family, means[i], q);
    }
    q
}

/// The whole curve `q[0..=n]`. Each horizon composes from the inside, so
/// this costs O(n^2) map evaluations; use [`survival_at_horizons`] when only
/// a few horizons are needed.
pub fn survival_curve<'a, F: Scalar>(
    env: &'a EnvPath<F>,
    family: OffspringFamily,
    n: usize,
) -> Result<QuenchedSurvivalCurve<'a, F>> {
    let means = generation_means(env, family, n)?;
    let mut q = Vec::with_capacity(n + 1);
    q.push(F::one());
    for k in 1..=n {
        q.push(survival_with_means(family, &means, k));
    }
    Ok(QuenchedSurvivalCurve { q, env, family })
}

/// Survival at horizon `n` for the geometric family, via linear-fractional
/// composition.
///
/// In the survival coordinate each geometric pgf acts as the Moebius map of
/// `[[m, 0], [m, 1]]`, so the `n`-fold composition is a matrix product; all
/// entries stay nonnegative, which is what makes this route sharp enough to
/// cross-check the iterated maps at 1e-12. Matrices are rescaled by their
/// largest entry as the product grows; the common scale cancels in the final
/// ratio, so it is dropped rather than tracked.
pub fn mobius_compose_geometric<F: Scalar>(env: &EnvPath<F>, n: usize) -> Result<F> {
    let means = generation_means(env, OffspringFamily::Geometric, n)?;
    // product applied to t = 1: survival starts certain at the inner end
    let (mut a, mut b) = (F::one(), F::zero());
    let (mut c, mut d) = (F::zero(), F::one());
    for &m in &means {
        // right-multiply by [[m, 0], [m, 1]]
        let a2 = (a + b) * m;
        let c2 = (c + d) * m;
        a = a2;
        c = c2;
        let scale = a.max(b).max(c).max(d);
        a = a / scale;
        b = b / scale;
        c = c / scale;
        d = d / scale;
    }
    Ok((a + b) / (c + d))
}

/// Survival decomposition into the walk's leading term and per-generation
/// corrections.
#[derive(Clone, Debug)]
pub struct GkDecomposition<F> {
    /// `exp(S_n)`, the reciprocal of the quenched mean at the horizon.
    pub leading: F,
    /// Correction `eta_k` for each generation `k < n`.
    pub eta: Vec<F>,
    /// Weight `exp(S_k)` attached to `eta_k`.
    pub weights: Vec<F>,
    /// `leading + sum_k weights[k] * eta[k]`; equals `1 / q_n`.
    pub total: F,
}

/// Decomposes `1 / q_n` at horizon `n <= DECOMPOSITION_CAP`.
pub fn gk_decompose<F: Scalar>(
    env: &EnvPath<F>,
    family: OffspringFamily,
    n: usize,
) -> Result<GkDecomposition<F>> {
    if n > DECOMPOSITION_CAP {
        return Err(Error::DecompositionCap { n, cap: DECOMPOSITION_CAP });
    }
    let means = generation_means(env, family, n)?;
    let floor = F::of(SURVIVAL_FLOOR);

    // suffix survival t[k] = 1 - f_k(...f_{n-1}(0)), t[n] = 1
    let mut t = vec![F::one(); n + 1];
    for k in (0..n).rev() {
        t[k] = step(family, means[k], t[k + 1]);
        if t[k] < floor {
            return Err(Error::Precision { n });
        }
    }

    let mut eta = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut total = env.s()[n].exp();
    let leading = total;
    for k in 0..n {
        // eta_k = 1/t_k - 1/(m_k t_{k+1}); forming the reciprocals would
        // cancel catastrophically for small t, the closed form does not
        let e = OffspringLaw { family, mean: means[k] }.survival_excess(t[k + 1]);
        let w = env.s()[k].exp();
        total = total + w * e;
        eta.push(e);
        weights.push(w);
    }
    Ok(GkDecomposition { leading, eta, weights, total })
}

/// Conditional population mean after `m` generations, `exp(-S_m)`.
pub fn quenched_mean<F: Scalar>(env: &EnvPath<F>, m: usize) -> Result<F> {
    if m > env.len() {
        return Err(Error::Horizon { n: m, len: env.len() });
    }
    Ok((-env.s()[m]).exp())
}

/// Conditional second moment of the normalized population
/// `W_n = Z_n exp(S_n)`:
///
/// ```text
///     E[W_n^2 | env] = 1 + sum_{k=0}^{n-1} sigma^2(f_k) exp(S_{k+1} + X_{k+1}) .
/// ```
///
/// The variance envelope constants of the family give the coarser bound
/// `1 + a + (a+b) sum exp(S_k) + c sum exp(S_k + X_k)`, which is asserted
/// against the exact value on every call.
pub fn w_second_moment<F: Scalar>(
    env: &EnvPath<F>,
    family: OffspringFamily,
    n: usize,
) -> Result<F> {
    let means = generation_means(env, family, n)?;
    let s = env.s();
    let x = env.x();

    let mut moment = F::one();
    for k in 0..n {
        let sigma2 = OffspringLaw { family, mean: means[k] }.variance();
        moment = moment + sigma2 * (s[k + 1] + x[k]).exp();
    }

    let consts = family.assumption_a_constants();
    let (a, b, c) = (F::of(consts.a), F::of(consts.b), F::of(consts.c));
    let mut walk_sum = F::zero();
    let mut tilted_sum = F::zero();
    for k in 1..=n {
        walk_sum = walk_sum + s[k].exp();
        tilted_sum = tilted_sum + (s[k] + x[k - 1]).exp();
    }
    let envelope = F::one() + a + (a + b) * walk_sum + c * tilted_sum;
    assert!(
        moment <= envelope * F::of(1.0 + 1e-9),
        "variance envelope violated: moment {moment} > envelope {envelope}"
    );

    Ok(moment)
}
