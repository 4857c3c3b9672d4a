//! Reproduction laws: generating functions, moments, aggregate sampling.
//!
//! Three families are supported, each parameterized by its mean `m`:
//!
//! ```text
//!     geometric      f(s) = 1 / (1 + m(1-s))          on {0, 1, 2, ...}
//!     poisson        f(s) = exp(m(s-1))
//!     binomial:n     f(s) = (1 - p(1-s))^n ,  p = m/n  on {0, ..., n}
//! ```
//!
//! All three satisfy a uniform variance envelope `sigma^2(m) <= a m^2 + b m + c`
//! with small integer constants, which is what the second-moment bounds on
//! the population martingale rely on.
//!
//! Aggregate sampling draws the sum of `z` i.i.d. offspring counts in O(1):
//! the z-fold geometric convolution is negative binomial, realized exactly as
//! a Gamma(z, m)-mixed Poisson; Poisson and binomial convolve within their
//! family.

use std::fmt;
use std::str::FromStr;

use rand::distributions::Standard;
use rand::Rng;
use rand_distr::{Binomial, Distribution, Exp1, Gamma, Open01, Poisson, StandardNormal};

use crate::error::Error;
use crate::scalar::Scalar;
use crate::Result;

/// Offspring family, without its mean.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OffspringFamily {
    Geometric,
    Poisson,
    /// Binomial with a fixed number of trials; the mean sets the success
    /// probability `p = m / n_max`.
    Binomial { n_max: u32 },
}

/// Constants of the variance envelope `sigma^2(m) <= a m^2 + b m + c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AssumptionAConstants {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl OffspringFamily {
    /// Envelope constants; exact for geometric and Poisson, and an equality
    /// bound for binomial where `sigma^2 = m(1 - p) <= m`.
    pub fn assumption_a_constants(self) -> AssumptionAConstants {
        match self {
            OffspringFamily::Geometric => AssumptionAConstants { a: 1.0, b: 1.0, c: 0.0 },
            OffspringFamily::Poisson | OffspringFamily::Binomial { .. } => {
                AssumptionAConstants { a: 0.0, b: 1.0, c: 0.0 }
            }
        }
    }

    /// Law of this family with mean `m`.
    pub fn law<F: Scalar>(self, m: F) -> Result<OffspringLaw<F>> {
        if !(m.is_finite() && m > F::zero()) {
            return Err(Error::InvalidMean(m.to_f64().unwrap_or(f64::NAN)));
        }
        if let OffspringFamily::Binomial { n_max } = self {
            // p = m/n_max must stay within [0, 1]; the degenerate p = 1 law
            // (every individual leaves exactly n_max children) is allowed.
            if m.to_f64().unwrap_or(f64::INFINITY) > n_max as f64 {
                return Err(Error::BinomialMeanRange {
                    mean: m.to_f64().unwrap_or(f64::NAN),
                    n_max,
                });
            }
        }
        Ok(OffspringLaw { family: self, mean: m })
    }

    /// Law at environment value `x`, i.e. with mean `exp(-x)`.
    pub fn law_at<F: Scalar>(self, x: F) -> Result<OffspringLaw<F>> {
        self.law((-x).exp())
    }
}

impl fmt::Display for OffspringFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OffspringFamily::Geometric => write!(f, "geometric"),
            OffspringFamily::Poisson => write!(f, "poisson"),
            OffspringFamily::Binomial { n_max } => write!(f, "binomial:{n_max}"),
        }
    }
}

impl FromStr for OffspringFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geometric" => Ok(OffspringFamily::Geometric),
            "poisson" => Ok(OffspringFamily::Poisson),
            _ => {
                if let Some(rest) = s.strip_prefix("binomial:") {
                    let n_max: u32 =
                        rest.parse().map_err(|_| Error::ParseFamily(s.to_string()))?;
                    if n_max == 0 {
                        return Err(Error::ParseFamily(s.to_string()));
                    }
                    Ok(OffspringFamily::Binomial { n_max })
                } else {
                    Err(Error::ParseFamily(s.to_string()))
                }
            }
        }
    }
}

/// A reproduction law: family plus mean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OffspringLaw<F> {
    pub(crate) family: OffspringFamily,
    pub(crate) mean: F,
}

impl<F: Scalar> OffspringLaw<F> {
    pub fn family(&self) -> OffspringFamily {
        self.family
    }

    pub fn mean(&self) -> F {
        self.mean
    }

    /// Generating function `f(s) = E[s^children]` on `[0, 1]`.
    pub fn pgf(&self, s: F) -> Result<F> {
        if !(s >= F::zero() && s <= F::one()) {
            return Err(Error::PgfDomain(s.to_f64().unwrap_or(f64::NAN)));
        }
        let m = self.mean;
        Ok(match self.family {
            OffspringFamily::Geometric => F::one() / (F::one() + m * (F::one() - s)),
            OffspringFamily::Poisson => (m * (s - F::one())).exp(),
            OffspringFamily::Binomial { n_max } => {
                let p = m / F::of_usize(n_max as usize);
                (F::one() - p * (F::one() - s)).powi(n_max as i32)
            }
        })
    }

    /// Offspring variance `sigma^2 = f''(1) + f'(1) - f'(1)^2`.
    pub fn variance(&self) -> F {
        let m = self.mean;
        match self.family {
            OffspringFamily::Geometric => m * m + m,
            OffspringFamily::Poisson => m,
            OffspringFamily::Binomial { n_max } => {
                m * (F::one() - m / F::of_usize(n_max as usize))
            }
        }
    }

    /// Second derivative of the generating function at 1.
    pub fn second_derivative_at_one(&self) -> F {
        let m = self.mean;
        match self.family {
            OffspringFamily::Geometric => F::of(2.0) * m * m,
            OffspringFamily::Poisson => m * m,
            OffspringFamily::Binomial { n_max } => {
                let p = m / F::of_usize(n_max as usize);
                m * p * F::of_usize(n_max as usize - 1)
            }
        }
    }

    /// One survival step `q -> 1 - f(1 - q)`, evaluated in a form that stays
    /// accurate when `q` is tiny: the naive route loses all precision once
    /// `f(1-q)` rounds to 1.
    pub fn survival_step(&self, q: F) -> F {
        debug_assert!(q >= F::zero() && q <= F::one());
        let m = self.mean;
        match self.family {
            OffspringFamily::Geometric => {
                let mq = m * q;
                mq / (F::one() + mq)
            }
            OffspringFamily::Poisson => -(-m * q).exp_m1(),
            OffspringFamily::Binomial { n_max } => {
                let p = m / F::of_usize(n_max as usize);
                -(F::of_usize(n_max as usize) * (-p * q).ln_1p()).exp_m1()
            }
        }
    }

    /// The gap `1/(1 - f(1-t)) - 1/(f'(1) t)` between the reciprocal of one
    /// exact survival step and the reciprocal of its linearization.
    ///
    /// Lies in `[0, f''(1)/f'(1)^2]` for every `t` in `(0, 1]` and tends to
    /// `f''(1)/(2 f'(1)^2)` as `t -> 0`. Forming the two reciprocals and
    /// subtracting loses `eps/t` of absolute accuracy, which is fatal
    /// exactly where the gap matters, so each family gets a closed form.
    pub fn survival_excess(&self, t: F) -> F {
        debug_assert!(t > F::zero() && t <= F::one());
        let m = self.mean;
        match self.family {
            // 1 - f(1-t) = mt/(1+mt), so the gap is identically 1
            OffspringFamily::Geometric => F::one(),
            OffspringFamily::Poisson => recip_expm1_gap(m * t),
            OffspringFamily::Binomial { n_max } => {
                let n = F::of_usize(n_max as usize);
                let p = m / n;
                let v = p * t;
                if v >= F::one() {
                    // degenerate branch: f(1-t) = 0, survival is certain
                    return F::one() - F::one() / (m * t);
                }
                // 1 - f(1-t) = 1 - exp(-u) with u = -n log(1-v), and
                // 1/u - 1/(mt) = n (v + log(1-v)) / (u m t)
                let u = -(n * (-v).ln_1p());
                recip_expm1_gap(u) + n * log1p_gap(v) / (u * m * t)
            }
        }
    }

    /// Draws the total offspring of `z` independent individuals.
    ///
    /// Exact in distribution and O(1) in `z`: geometric aggregates are
    /// negative binomial via a Gamma-Poisson mixture, Poisson and binomial
    /// aggregates stay in their family.
    pub fn sample_aggregate<R: Rng + ?Sized>(&self, z: u64, rng: &mut R) -> u64
    where
        StandardNormal: Distribution<F>,
        Exp1: Distribution<F>,
        Open01: Distribution<F>,
        Standard: Distribution<F>,
    {
        if z == 0 {
            return 0;
        }
        match self.family {
            OffspringFamily::Geometric => {
                let shape = F::from_u64(z).expect("population fits the scalar");
                let gamma = Gamma::new(shape, self.mean).expect("validated law");
                let rate: F = gamma.sample(rng);
                sample_poisson(rate, rng)
            }
            OffspringFamily::Poisson => {
                let rate = self.mean * F::from_u64(z).expect("population fits the scalar");
                sample_poisson(rate, rng)
            }
            OffspringFamily::Binomial { n_max } => {
                let trials = z
                    .checked_mul(n_max as u64)
                    .expect("aggregate trial count fits u64");
                let p = (self.mean / F::of_usize(n_max as usize))
                    .to_f64()
                    .expect("success probability fits f64");
                Binomial::new(trials, p.min(1.0)).expect("validated law").sample(rng)
            }
        }
    }
}

/// `1/(1 - exp(-u)) - 1/u` for `u > 0`: increases from 1/2 to 1. The direct
/// form cancels below the crossover, where the Laurent series takes over.
fn recip_expm1_gap<F: Scalar>(u: F) -> F {
    if u < F::of(0.05) {
        // 1/(1 - e^{-u}) = 1/u + 1/2 + u/12 - u^3/720 + u^5/30240 - ...
        let u2 = u * u;
        F::of(0.5)
            + u * (F::of(1.0 / 12.0)
                - u2 * (F::of(1.0 / 720.0) - u2 * F::of(1.0 / 30240.0)))
    } else {
        F::one() / -(-u).exp_m1() - F::one() / u
    }
}

/// `v + log(1 - v)` for `0 <= v < 1`: the quadratic remainder of the
/// logarithm, kept accurate through the cancellation near 0.
fn log1p_gap<F: Scalar>(v: F) -> F {
    if v < F::of(0.001) {
        // v + log(1-v) = -(v^2/2 + v^3/3 + v^4/4 + v^5/5 + ...)
        let v2 = v * v;
        -(v2 * (F::of(0.5) + v * (F::of(1.0 / 3.0) + v * (F::of(0.25) + v * F::of(0.2)))))
    } else {
        v + (-v).ln_1p()
    }
}

fn sample_poisson<F, R>(rate: F, rng: &mut R) -> u64
where
    F: Scalar,
    R: Rng + ?Sized,
    Standard: Distribution<F>,
{
    if rate <= F::zero() {
        return 0;
    }
    let draw: F = Poisson::new(rate).expect("positive finite rate").sample(rng);
    draw.to_u64().expect("count fits u64")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const GEO: OffspringFamily = OffspringFamily::Geometric;
    const POI: OffspringFamily = OffspringFamily::Poisson;

    fn binom(n_max: u32) -> OffspringFamily {
        OffspringFamily::Binomial { n_max }
    }

    #[test]
    fn family_strings_round_trip() {
        for f in [GEO, POI, binom(16)] {
            assert_eq!(f.to_string().parse::<OffspringFamily>().unwrap(), f);
        }
        assert!("binomial:0".parse::<OffspringFamily>().is_err());
        assert!("binomial:".parse::<OffspringFamily>().is_err());
        assert!("binomial:-3".parse::<OffspringFamily>().is_err());
        assert!("harmonic".parse::<OffspringFamily>().is_err());
    }

    #[test]
    fn law_construction_guards() {
        assert!(GEO.law(0.0).is_err());
        assert!(GEO.law(-1.0).is_err());
        assert!(GEO.law(f64::NAN).is_err());
        assert!(GEO.law(f64::INFINITY).is_err());
        assert!(binom(4).law(4.0).is_ok());
        assert!(matches!(
            binom(4).law(4.0 + 1e-9),
            Err(Error::BinomialMeanRange { .. })
        ));
        // law_at maps x -> exp(-x)
        assert_eq!(GEO.law_at(0.0).unwrap().mean(), 1.0);
        assert!(binom(4).law_at(-2.0).is_err());
    }

    #[test]
    fn pgf_fixed_values() {
        assert_eq!(GEO.law(1.0).unwrap().pgf(0.0).unwrap(), 0.5);
        assert_eq!(binom(2).law(1.0).unwrap().pgf(0.0).unwrap(), 0.25);
        let poi = POI.law(1.0).unwrap();
        assert_eq!(poi.pgf(1.0).unwrap(), 1.0);
        assert!((poi.pgf(0.0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        for law in [GEO.law(2.5f64).unwrap(), POI.law(0.3).unwrap(), binom(7).law(3.0).unwrap()] {
            assert!((law.pgf(1.0).unwrap() - 1.0).abs() < 1e-12);
            assert!(law.pgf(1.5).is_err());
            assert!(law.pgf(-0.1).is_err());
            assert!(law.pgf(f64::NAN).is_err());
        }
    }

    #[test]
    fn variance_fixed_values() {
        assert_eq!(GEO.law(1.0).unwrap().variance(), 2.0);
        assert_eq!(POI.law(0.5).unwrap().variance(), 0.5);
        assert_eq!(binom(4).law(2.0).unwrap().variance(), 1.0);
        // degenerate binomial: deterministic n_max children
        assert_eq!(binom(1).law(1.0).unwrap().variance(), 0.0);
    }

    #[test]
    fn envelope_constants_hold_across_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10_000 {
            let logm: f64 = rng.gen_range(-6.0..6.0);
            let m = logm.exp();
            for family in [GEO, POI, binom(1_000_000)] {
                let law = match family.law(m) {
                    Ok(l) => l,
                    Err(_) => continue,
                };
                let k = family.assumption_a_constants();
                assert!(
                    law.variance() <= k.a * m * m + k.b * m + k.c,
                    "{family} m={m}"
                );
            }
        }
        assert_eq!(GEO.assumption_a_constants(), AssumptionAConstants { a: 1.0, b: 1.0, c: 0.0 });
        assert_eq!(POI.assumption_a_constants(), AssumptionAConstants { a: 0.0, b: 1.0, c: 0.0 });
    }

    #[test]
    fn pgf_slope_at_one_matches_mean() {
        let eps = 1e-6;
        for family in [GEO, POI, binom(64)] {
            for &m in &[0.3f64, 1.0, 3.0] {
                let law = family.law(m).unwrap();
                let slope = (law.pgf(1.0).unwrap() - law.pgf(1.0 - eps).unwrap()) / eps;
                assert!(
                    (slope - m).abs() <= 1e-4 * m,
                    "{family} m={m}: slope {slope}"
                );
            }
        }
    }

    #[test]
    fn survival_step_agrees_with_direct_evaluation() {
        for family in [GEO, POI, binom(8)] {
            for &m in &[0.2f64, 1.0, 2.0] {
                let law = family.law(m).unwrap();
                for &q in &[1.0, 0.5, 1e-3, 1e-8] {
                    let direct = 1.0 - law.pgf(1.0 - q).unwrap();
                    let stable = law.survival_step(q);
                    // the direct route cancels near s = 1 and keeps only
                    // eps-level absolute accuracy there; the stable route is
                    // the one under test
                    assert!(
                        (stable - direct).abs() <= 1e-9 * stable + 1e-13,
                        "{family} m={m} q={q}: {stable} vs {direct}"
                    );
                }
                // far below the naive route's resolution
                let tiny = law.survival_step(1e-200);
                assert!(tiny > 0.0 && tiny < 1e-190);
            }
        }
        // degenerate boundary: p = 1 binomial never dies
        assert_eq!(binom(1).law(1.0).unwrap().survival_step(1.0), 1.0);
    }

    #[test]
    fn survival_excess_matches_the_direct_gap_at_moderate_t() {
        for family in [GEO, POI, binom(8), binom(1000)] {
            for &m in &[0.2f64, 1.0, 2.0, 6.5] {
                let law = match family.law(m) {
                    Ok(l) => l,
                    Err(_) => continue,
                };
                for &t in &[1.0, 0.7, 0.3, 0.06] {
                    let direct = 1.0 / law.survival_step(t) - 1.0 / (m * t);
                    let excess = law.survival_excess(t);
                    assert!(
                        (excess - direct).abs() <= 1e-10 * excess.abs().max(1e-3),
                        "{family} m={m} t={t}: {excess} vs {direct}"
                    );
                }
            }
        }
    }

    #[test]
    fn survival_excess_stays_inside_its_bounds() {
        // 0 <= gap <= f''(1)/f'(1)^2 down to values of t where the direct
        // difference of reciprocals has no correct digits left
        for family in [GEO, POI, binom(2), binom(1000)] {
            for &m in &[0.1f64, 1.0, 4.0] {
                let law = match family.law(m) {
                    Ok(l) => l,
                    Err(_) => continue,
                };
                let bound = law.second_derivative_at_one() / (m * m);
                for exp in 0..300 {
                    let t = 0.9f64.powi(exp * 3);
                    let excess = law.survival_excess(t);
                    assert!(
                        excess >= -1e-12 && excess <= bound * (1.0 + 1e-12) + 1e-12,
                        "{family} m={m} t={t}: {excess} not in [0, {bound}]"
                    );
                }
            }
        }
    }

    #[test]
    fn survival_excess_small_t_limit_is_half_the_bound() {
        for family in [GEO, POI, binom(3), binom(1000)] {
            for &m in &[0.5f64, 1.0, 2.0] {
                let law = match family.law(m) {
                    Ok(l) => l,
                    Err(_) => continue,
                };
                let limit = law.second_derivative_at_one() / (2.0 * m * m);
                let excess = law.survival_excess(1e-13);
                assert!(
                    (excess - limit).abs() <= 1e-9 * limit.max(1e-6),
                    "{family} m={m}: {excess} vs limit {limit}"
                );
            }
        }
    }

    #[test]
    fn survival_excess_degenerate_binomial_boundary() {
        // p = 1: every individual has exactly n_max children, the gap hits
        // its upper endpoint (n-1)/n at t = 1
        for n_max in [1u32, 2, 5] {
            let law = binom(n_max).law(n_max as f64).unwrap();
            let expect = 1.0 - 1.0 / n_max as f64;
            assert!((law.survival_excess(1.0) - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn aggregate_of_zero_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for family in [GEO, POI, binom(4)] {
            let law = family.law(1.0).unwrap();
            assert_eq!(law.sample_aggregate(0, &mut rng), 0);
        }
    }

    #[test]
    fn aggregate_moments_match_family() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let reps = 40_000;
        for (family, m, z) in [
            (GEO, 1.3, 7u64),
            (GEO, 0.4, 1),
            (POI, 2.0, 5),
            (binom(6), 2.5, 9),
        ] {
            let law = family.law(m).unwrap();
            let draws: Vec<f64> =
                (0..reps).map(|_| law.sample_aggregate(z, &mut rng) as f64).collect();
            let n = reps as f64;
            let mean = draws.iter().sum::<f64>() / n;
            let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let want_mean = z as f64 * m;
            let want_var = z as f64 * law.variance();
            let mean_se = (want_var / n).sqrt();
            assert!(
                (mean - want_mean).abs() < 5.0 * mean_se,
                "{family} m={m} z={z}: mean {mean} vs {want_mean}"
            );
            assert!(
                (var - want_var).abs() < 0.08 * want_var,
                "{family} m={m} z={z}: var {var} vs {want_var}"
            );
        }
    }

    /// Chi-square p-value against a discrete pmf, lumping the upper tail.
    fn chi_square_p(draws: &[u64], pmf: impl Fn(u64) -> f64, support_cap: u64) -> f64 {
        use statrs::distribution::{ChiSquared, ContinuousCDF};

        let n = draws.len() as f64;
        let mut cells: Vec<(f64, f64)> = Vec::new();
        let mut tail_expect = 1.0;
        for k in 0..support_cap {
            let p = pmf(k);
            let observed = draws.iter().filter(|d| **d == k).count() as f64;
            cells.push((observed, n * p));
            tail_expect -= p;
        }
        let tail_observed = draws.iter().filter(|d| **d >= support_cap).count() as f64;
        cells.push((tail_observed, n * tail_expect.max(0.0)));

        // merge sparse cells so every expectation is at least 5
        let mut merged: Vec<(f64, f64)> = Vec::new();
        let (mut obs_acc, mut exp_acc) = (0.0, 0.0);
        for (obs, exp) in cells {
            obs_acc += obs;
            exp_acc += exp;
            if exp_acc >= 5.0 {
                merged.push((obs_acc, exp_acc));
                obs_acc = 0.0;
                exp_acc = 0.0;
            }
        }
        if exp_acc > 0.0 {
            if let Some(last) = merged.last_mut() {
                last.0 += obs_acc;
                last.1 += exp_acc;
            }
        }

        let stat: f64 = merged.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
        let df = (merged.len() - 1) as f64;
        1.0 - ChiSquared::new(df).unwrap().cdf(stat)
    }

    #[test]
    fn geometric_aggregate_is_negative_binomial() {
        // z-fold geometric(m=1) sum: NB with index 5 and success probability
        // 1/2, pmf built by its recurrence.
        let z = 5u64;
        let law = GEO.law(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let draws: Vec<u64> = (0..100_000).map(|_| law.sample_aggregate(z, &mut rng)).collect();

        let p = 0.5f64;
        let mut pmf_cache = vec![p.powi(z as i32)];
        for k in 0..40 {
            let last = pmf_cache[k];
            pmf_cache.push(last * (k as f64 + z as f64) / (k as f64 + 1.0) * (1.0 - p));
        }
        let pval = chi_square_p(&draws, |k| pmf_cache[k as usize], 30);
        assert!(pval > 0.001, "chi-square p = {pval}");
    }

    #[test]
    fn poisson_aggregate_is_poisson() {
        let law = POI.law(0.6).unwrap();
        let z = 5u64;
        let lambda = 3.0f64;
        let mut rng = ChaCha8Rng::seed_from_u64(72);
        let draws: Vec<u64> = (0..100_000).map(|_| law.sample_aggregate(z, &mut rng)).collect();

        let mut pmf_cache = vec![(-lambda).exp()];
        for k in 0..30 {
            let last = pmf_cache[k];
            pmf_cache.push(last * lambda / (k as f64 + 1.0));
        }
        let pval = chi_square_p(&draws, |k| pmf_cache[k as usize], 20);
        assert!(pval > 0.001, "chi-square p = {pval}");
    }

    #[test]
    fn binomial_aggregate_is_binomial() {
        let law = binom(3).law(1.2).unwrap();
        let z = 4u64;
        // 12 trials at p = 0.4
        let (n, p) = (12u64, 0.4f64);
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        let draws: Vec<u64> = (0..100_000).map(|_| law.sample_aggregate(z, &mut rng)).collect();

        let mut pmf_cache = vec![(1.0 - p).powi(n as i32)];
        for k in 0..n {
            let last = pmf_cache[k as usize];
            pmf_cache.push(last * (n - k) as f64 / (k as f64 + 1.0) * p / (1.0 - p));
        }
        let pval = chi_square_p(&draws, |k| pmf_cache[k as usize], n);
        assert!(pval > 0.001, "chi-square p = {pval}");
    }
}
