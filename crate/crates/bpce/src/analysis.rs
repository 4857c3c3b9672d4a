//! Tail-exponent extraction and cross-estimate consistency checks.
//!
//! The model predicts power-law tails whose exponents depend only on the
//! Hurst parameter of the environment:
//!
//! ```text
//! P(T > n)            ~  n^{-(1-H)}                extinction time
//! P(max_m S_m <= x)   ~  n^{-(1-H)}                walk persistence
//! P(max_k Z_k > N)    ~  (log N)^{-(1-H)/H}        maximal population
//! P(sum_k Z_k > N)    ~  (log N)^{-(1-H)/H}        total population
//! ```
//!
//! A fitted slope of `log p` against the matching abscissa (`log n` for the
//! first group, `log log N` for the second) therefore estimates minus the
//! exponent. Fits are weighted least squares with inverse-variance weights
//! on the log scale, and the reported slope error comes from the residual
//! spread, not from the nominal weights alone.

use serde::Serialize;

use crate::env::HurstParam;
use crate::error::Error;
use crate::sim::{TailEstimate, TailMode};
use crate::Result;

/// Predicted tail exponents at a given Hurst parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TheoreticalExponents {
    pub extinction_time: f64,
    pub persistence: f64,
    pub max_population: f64,
    pub total_population: f64,
}

pub fn theoretical_exponents(hurst: HurstParam<f64>) -> TheoreticalExponents {
    let h = hurst.value();
    TheoreticalExponents {
        extinction_time: 1.0 - h,
        persistence: 1.0 - h,
        max_population: (1.0 - h) / h,
        total_population: (1.0 - h) / h,
    }
}

impl TheoreticalExponents {
    /// The slope a log-log fit should recover for `mode`, on the abscissa
    /// given by [`default_transform`].
    pub fn expected_slope(&self, mode: TailMode) -> f64 {
        -match mode {
            TailMode::ExtinctionTime => self.extinction_time,
            TailMode::Persistence => self.persistence,
            TailMode::MaxPopulation => self.max_population,
            TailMode::TotalPopulation => self.total_population,
        }
    }
}

/// Abscissa for the power-law fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum XTransform {
    /// `x = log t`: tails that decay polynomially in the threshold.
    Log,
    /// `x = log log t`: tails that decay polynomially in `log` threshold.
    LogLog,
}

impl XTransform {
    pub fn apply(self, threshold: u64) -> f64 {
        let t = threshold as f64;
        match self {
            XTransform::Log => t.ln(),
            XTransform::LogLog => t.ln().ln(),
        }
    }
}

/// The abscissa under which `mode` is predicted to be log-linear.
pub fn default_transform(mode: TailMode) -> XTransform {
    match mode {
        TailMode::ExtinctionTime | TailMode::Persistence => XTransform::Log,
        TailMode::MaxPopulation | TailMode::TotalPopulation => XTransform::LogLog,
    }
}

/// Weighted least-squares line through `(x(threshold), log p_hat)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PowerLawFit {
    pub slope: f64,
    pub intercept: f64,
    /// Residual-based standard error of the slope.
    pub slope_std_err: f64,
    /// Thresholds actually fitted, inclusive.
    pub window: (u64, u64),
    pub r_squared: f64,
    /// Points entering the fit after windowing and usability filtering.
    pub points: usize,
}

/// Fits `log p = intercept + slope * x(threshold)`.
///
/// `window` restricts to thresholds in the inclusive range; by default the
/// smallest tenth of the grid (rounded up) is dropped, since pre-asymptotic
/// curvature lives there. Points with `p_hat = 0` or a non-finite abscissa
/// are unusable and skipped. Weights are `(p/se)^2`, the inverse variance of
/// `log p`; if any usable point reports `se = 0` the fit falls back to
/// unweighted so that a single exact point cannot dominate.
pub fn fit_power_law(
    est: &TailEstimate,
    transform: XTransform,
    window: Option<(u64, u64)>,
) -> Result<PowerLawFit> {
    let kept: Vec<usize> = match window {
        Some((lo, hi)) => (0..est.len())
            .filter(|&j| est.thresholds[j] >= lo && est.thresholds[j] <= hi)
            .collect(),
        None => {
            let drop = est.len().div_ceil(10);
            (drop..est.len()).collect()
        }
    };

    // (threshold, x, log p, sd of log p)
    let mut pts: Vec<(u64, f64, f64, f64)> = Vec::with_capacity(kept.len());
    for j in kept {
        let x = transform.apply(est.thresholds[j]);
        let p = est.p_hat[j];
        let se = est.std_err[j];
        if !x.is_finite() || !(p > 0.0) || !se.is_finite() {
            continue;
        }
        pts.push((est.thresholds[j], x, p.ln(), se / p));
    }
    if pts.len() < 4 {
        return Err(Error::InsufficientData { min: 4, found: pts.len() });
    }

    let weighted = pts.iter().all(|p| p.3 > 0.0);
    let w: Vec<f64> = if weighted {
        pts.iter().map(|p| 1.0 / (p.3 * p.3)).collect()
    } else {
        vec![1.0; pts.len()]
    };

    let wsum: f64 = w.iter().sum();
    let xbar = w.iter().zip(&pts).map(|(w, p)| w * p.1).sum::<f64>() / wsum;
    let ybar = w.iter().zip(&pts).map(|(w, p)| w * p.2).sum::<f64>() / wsum;
    let sxx: f64 = w.iter().zip(&pts).map(|(w, p)| w * (p.1 - xbar).powi(2)).sum();
    let syy: f64 = w.iter().zip(&pts).map(|(w, p)| w * (p.2 - ybar).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateData);
    }
    let sxy: f64 = w
        .iter()
        .zip(&pts)
        .map(|(w, p)| w * (p.1 - xbar) * (p.2 - ybar))
        .sum();

    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ss_res: f64 = w
        .iter()
        .zip(&pts)
        .map(|(w, p)| w * (p.2 - intercept - slope * p.1).powi(2))
        .sum();
    let dof = (pts.len() - 2) as f64;
    let slope_std_err = (ss_res / dof / sxx).sqrt();

    Ok(PowerLawFit {
        slope,
        intercept,
        slope_std_err,
        window: (pts[0].0, pts[pts.len() - 1].0),
        r_squared: 1.0 - ss_res / syy,
        points: pts.len(),
    })
}

/// One inequality between tail estimates, checked with statistical slack.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SandwichCheck {
    pub relation: SandwichRelation,
    pub threshold: u64,
    pub lhs: f64,
    pub rhs: f64,
    /// Three pooled standard errors.
    pub slack: f64,
    pub holds: bool,
}

/// Pathwise inequalities every consistent trio of tail estimates obeys.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SandwichRelation {
    /// `P(sum Z > N) >= P(max Z > N)`: the total includes every generation.
    TotalDominatesMax,
    /// `P(sum Z > N^2) <= P(max Z > N) + P(T > N)`: an extinct line with
    /// `max <= N` and `T <= N` totals at most `N^2`.
    SquareTotalBounded,
}

#[derive(Clone, Debug, Serialize)]
pub struct SandwichReport {
    pub checks: Vec<SandwichCheck>,
}

impl SandwichReport {
    pub fn violations(&self) -> usize {
        self.checks.iter().filter(|c| !c.holds).count()
    }

    pub fn all_hold(&self) -> bool {
        self.violations() == 0
    }
}

/// Cross-checks extinction, maximum and total tails against each other.
///
/// Estimates may live on different grids; each relation is evaluated only
/// where its thresholds align, and at least one relation must align
/// somewhere. Slack is three pooled standard errors per check, so a correct
/// implementation fails a check with probability well under a percent even
/// across a whole grid.
pub fn sandwich_report(
    extinction: &TailEstimate,
    max: &TailEstimate,
    total: &TailEstimate,
) -> Result<SandwichReport> {
    for (est, mode) in [
        (extinction, TailMode::ExtinctionTime),
        (max, TailMode::MaxPopulation),
        (total, TailMode::TotalPopulation),
    ] {
        if est.mode != mode {
            return Err(Error::config(format!(
                "sandwich roles are fixed: expected {mode:?}, got {:?}",
                est.mode
            )));
        }
    }

    let mut checks = Vec::new();
    for (j, n) in max.thresholds.iter().enumerate() {
        if let Some((pt, set)) = total.at_threshold(*n) {
            let (pm, sem) = (max.p_hat[j], max.std_err[j]);
            let slack = 3.0 * (set * set + sem * sem).sqrt();
            checks.push(SandwichCheck {
                relation: SandwichRelation::TotalDominatesMax,
                threshold: *n,
                lhs: pt,
                rhs: pm,
                slack,
                holds: pt >= pm - slack,
            });
        }
        let Some(square) = n.checked_mul(*n) else { continue };
        if let (Some((pt, set)), Some((pe, see))) =
            (total.at_threshold(square), extinction.at_threshold(*n))
        {
            let (pm, sem) = (max.p_hat[j], max.std_err[j]);
            let slack = 3.0 * (set * set + sem * sem + see * see).sqrt();
            checks.push(SandwichCheck {
                relation: SandwichRelation::SquareTotalBounded,
                threshold: *n,
                lhs: pt,
                rhs: pm + pe,
                slack,
                holds: pt <= pm + pe + slack,
            });
        }
    }
    if checks.is_empty() {
        return Err(Error::Alignment);
    }
    Ok(SandwichReport { checks })
}
