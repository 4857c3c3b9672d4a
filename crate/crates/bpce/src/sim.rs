//! Monte Carlo estimators over replicated environments.
//!
//! Each estimator draws `env_replicates` independent environments from
//! replicate-indexed random streams (see [`crate::seeds`]), computes a
//! per-replicate statistic, and merges by count-weighted averaging in
//! replicate order. Results therefore depend only on `(config, master_seed)`
//! and never on the worker count.
//!
//! Extinction tails use the conditional survival probability itself rather
//! than a survival indicator: averaging `P(T > n | env)` over environments
//! estimates the same quantity with strictly smaller variance than averaging
//! simulated outcomes (Rao-Blackwell), and one exact backward pass per
//! environment replaces any number of population simulations.
//!
//! Population tails (maximal and total size) have no such shortcut and are
//! simulated. Trajectories stop early once the population passes the largest
//! threshold: tail events at every threshold are then decided, and the
//! astronomical supercritical excursions that follow a deep dip of the walk
//! are never instantiated.

use rayon::prelude::*;
use serde::Serialize;

use crate::env::{EnvPath, FgnSampler, HurstParam};
use crate::error::Error;
use crate::offspring::{OffspringFamily, OffspringLaw};
use crate::quenched;
use crate::seeds::replica_rng;
use crate::Result;

/// What a tail estimate is a tail of.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMode {
    /// `P(T > n)`: extinction later than generation `n`.
    ExtinctionTime,
    /// `P(max_k Z_k > N)`.
    MaxPopulation,
    /// `P(sum_k Z_k > N)`.
    TotalPopulation,
    /// `P(max_{1<=m<=n} S_m <= x)`: the walk stays below a level.
    Persistence,
}

impl std::fmt::Display for TailMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TailMode::ExtinctionTime => "extinction_time",
            TailMode::MaxPopulation => "max_population",
            TailMode::TotalPopulation => "total_population",
            TailMode::Persistence => "persistence",
        })
    }
}

/// A population statistic observed under a cap.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PopStat {
    /// Observed value; a lower bound if the trajectory was cut at the
    /// horizon while still alive.
    Exact(u64),
    /// Statistic passed the population cap; its exact value was not
    /// resolved, but every tail event at thresholds up to the cap is decided.
    ExceededCap,
}

impl PopStat {
    /// Whether the statistic is known to exceed `threshold` (valid for
    /// thresholds up to the cap the trajectory ran with).
    pub fn exceeds(self, threshold: u64) -> bool {
        match self {
            PopStat::Exact(v) => v > threshold,
            PopStat::ExceededCap => true,
        }
    }
}

/// One simulated population path under a fixed environment.
#[derive(Clone, Debug)]
pub struct Trajectory {
    z: Vec<u64>,
    extinction_time: Option<usize>,
    max_z: PopStat,
    total_z: PopStat,
}

impl Trajectory {
    /// Population sizes `Z_0..Z_T` as far as observed.
    pub fn z(&self) -> &[u64] {
        &self.z
    }

    /// First generation with no survivors; `None` while censored (cap or
    /// horizon cut the observation short).
    pub fn extinction_time(&self) -> Option<usize> {
        self.extinction_time
    }

    pub fn max_z(&self) -> PopStat {
        self.max_z
    }

    pub fn total_z(&self) -> PopStat {
        self.total_z
    }

    /// True when the population itself outgrew the cap.
    pub fn cap_escaped(&self) -> bool {
        matches!(self.max_z, PopStat::ExceededCap)
    }

    /// True when the horizon ended with the line still alive and the cap
    /// never hit: tail statistics are lower bounds.
    pub fn censored_alive(&self) -> bool {
        self.extinction_time.is_none() && !self.cap_escaped()
    }

    /// Whether the line is known to survive beyond generation `n`.
    pub fn survived_beyond(&self, n: usize) -> bool {
        match self.extinction_time {
            Some(t) => t > n,
            None => true,
        }
    }
}

/// Simulates `Z_0 = 1, Z_{k+1} = aggregate offspring of Z_k` along `env`.
///
/// Stops at extinction, at the horizon, or as soon as `Z` passes `pop_cap`
/// (the population explodes double-exponentially once the walk dips, so a
/// supercritical excursion is abandoned the moment every threshold is
/// decided). A running total above the cap only marks the total statistic:
/// the maximum is still being resolved, and the remaining cost is bounded by
/// the horizon.
pub fn simulate_trajectory<R: rand::Rng + ?Sized>(
    env: &EnvPath<f64>,
    family: OffspringFamily,
    pop_cap: u64,
    horizon: usize,
    rng: &mut R,
) -> Result<Trajectory> {
    if pop_cap == 0 {
        return Err(Error::config("population cap must be at least 1"));
    }
    if horizon == 0 {
        return Err(Error::config("horizon must be at least 1"));
    }
    let means = quenched::generation_means(env, family, horizon)?;

    let mut z_seq = Vec::with_capacity(horizon.min(1024) + 1);
    let mut z = 1u64;
    z_seq.push(z);
    let mut max_z = 1u64;
    let mut total = 1u64;
    let mut extinction_time = None;
    let mut z_escaped = false;
    let mut total_exceeded = false;

    for (k, mean) in means.iter().enumerate() {
        z = OffspringLaw { family, mean: *mean }.sample_aggregate(z, rng);
        z_seq.push(z);
        if z == 0 {
            extinction_time = Some(k + 1);
            break;
        }
        if z > max_z {
            max_z = z;
        }
        total = total.saturating_add(z);
        if total > pop_cap {
            total_exceeded = true;
        }
        if z > pop_cap {
            z_escaped = true;
            break;
        }
    }

    Ok(Trajectory {
        z: z_seq,
        extinction_time,
        max_z: if z_escaped { PopStat::ExceededCap } else { PopStat::Exact(max_z) },
        total_z: if z_escaped || total_exceeded {
            PopStat::ExceededCap
        } else {
            PopStat::Exact(total)
        },
    })
}

/// Tail probabilities at a grid of thresholds, with replicate bookkeeping.
#[derive(Clone, Debug, Serialize)]
pub struct TailEstimate {
    pub mode: TailMode,
    /// Horizons (extinction, persistence) or population thresholds.
    pub thresholds: Vec<u64>,
    pub p_hat: Vec<f64>,
    /// Standard error of `p_hat`, from the spread across replicates.
    pub std_err: Vec<f64>,
    /// Per threshold: samples cut at the horizon while undecided, counted as
    /// not exceeding. The negative bias this causes must stay small relative
    /// to `p_hat` for the estimate to be trusted.
    pub n_censored: Vec<u64>,
    /// Independent environment replicates.
    pub replicates: u64,
    /// Samples per replicate (trajectories per environment; 1 when the
    /// per-replicate statistic is exact).
    pub samples_per_replicate: u64,
}

impl TailEstimate {
    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }

    /// Total samples behind each tail point.
    pub fn total_samples(&self) -> u64 {
        self.replicates * self.samples_per_replicate
    }

    /// Fraction of samples censored while undecided at threshold `j`.
    pub fn censored_fraction(&self, j: usize) -> f64 {
        self.n_censored[j] as f64 / self.total_samples() as f64
    }

    /// The censoring rule accepts a point when undecided samples are below
    /// ten percent of the estimate itself.
    pub fn censoring_acceptable(&self, j: usize) -> bool {
        self.n_censored[j] == 0 || self.censored_fraction(j) < 0.1 * self.p_hat[j]
    }

    /// `(p_hat, std_err)` at an exact threshold value, if present.
    pub fn at_threshold(&self, threshold: u64) -> Option<(f64, f64)> {
        let j = self.thresholds.iter().position(|t| *t == threshold)?;
        Some((self.p_hat[j], self.std_err[j]))
    }
}

/// Mean and standard error per column from per-replicate rows.
fn merge_rows(rows: &[Vec<f64>], columns: usize) -> (Vec<f64>, Vec<f64>) {
    let r = rows.len() as f64;
    let mut mean = vec![0.0; columns];
    for row in rows {
        for (acc, v) in mean.iter_mut().zip(row) {
            *acc += v;
        }
    }
    for m in &mut mean {
        *m /= r;
    }
    let mut var = vec![0.0; columns];
    for row in rows {
        for (acc, (v, m)) in var.iter_mut().zip(row.iter().zip(&mean)) {
            *acc += (v - m) * (v - m);
        }
    }
    let se = var.iter().map(|v| (v / (r - 1.0) / r).sqrt()).collect();
    (mean, se)
}

fn check_replicates(env_replicates: u64) -> Result<()> {
    if env_replicates < 100 {
        return Err(Error::config(format!(
            "need at least 100 environment replicates, got {env_replicates}"
        )));
    }
    Ok(())
}

fn check_driver_hurst(hurst: HurstParam<f64>) -> Result<()> {
    if hurst.value() < 0.5 {
        return Err(Error::AntiPersistentHurst(hurst.value()));
    }
    Ok(())
}

fn check_ascending<T: PartialOrd + Copy>(values: &[T], what: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::config(format!("{what} must be nonempty")));
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config(format!("{what} must be strictly ascending")));
    }
    Ok(())
}

/// Estimates `P(T > n)` at each horizon by averaging the exact conditional
/// survival probability over sampled environments.
pub fn estimate_tail_extinction(
    hurst: HurstParam<f64>,
    family: OffspringFamily,
    horizons: &[usize],
    env_replicates: u64,
    master_seed: u64,
) -> Result<TailEstimate> {
    check_driver_hurst(hurst)?;
    check_replicates(env_replicates)?;
    check_ascending(horizons, "horizons")?;
    if horizons[0] == 0 {
        return Err(Error::config("horizons must start at 1 or later"));
    }

    let deepest = *horizons.last().expect("nonempty");
    let sampler = FgnSampler::new(hurst, deepest)?;

    let rows: Vec<Vec<f64>> = (0..env_replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(master_seed, r);
            let env = sampler.sample(&mut rng);
            quenched::survival_at_horizons(&env, family, horizons)
        })
        .collect::<Result<_>>()?;

    let (p_hat, std_err) = merge_rows(&rows, horizons.len());
    Ok(TailEstimate {
        mode: TailMode::ExtinctionTime,
        thresholds: horizons.iter().map(|n| *n as u64).collect(),
        p_hat,
        std_err,
        n_censored: vec![0; horizons.len()],
        replicates: env_replicates,
        samples_per_replicate: 1,
    })
}

/// Simulation horizon for population-tail runs: generous relative to the
/// largest threshold so that alive-at-horizon censoring stays rare.
fn population_horizon(largest_threshold: u64) -> usize {
    let cube = (largest_threshold as f64).log2().ceil().powi(3);
    4096usize.max(cube as usize)
}

fn estimate_tail_population(
    mode: TailMode,
    hurst: HurstParam<f64>,
    family: OffspringFamily,
    thresholds: &[u64],
    env_replicates: u64,
    traj_per_env: u64,
    master_seed: u64,
) -> Result<TailEstimate> {
    check_driver_hurst(hurst)?;
    check_replicates(env_replicates)?;
    check_ascending(thresholds, "thresholds")?;
    if thresholds[0] == 0 {
        return Err(Error::config("thresholds must start at 1 or later"));
    }
    if traj_per_env == 0 {
        return Err(Error::config("need at least one trajectory per environment"));
    }

    let pop_cap = *thresholds.last().expect("nonempty");
    let horizon = population_horizon(pop_cap);
    let sampler = FgnSampler::new(hurst, horizon)?;

    struct Row {
        exceed_share: Vec<f64>,
        censored: Vec<u64>,
    }

    let rows: Vec<Row> = (0..env_replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(master_seed, r);
            let env = sampler.sample(&mut rng);
            let mut exceed_counts = vec![0u64; thresholds.len()];
            let mut censored = vec![0u64; thresholds.len()];
            for _ in 0..traj_per_env {
                let traj = simulate_trajectory(&env, family, pop_cap, horizon, &mut rng)?;
                let stat = match mode {
                    TailMode::MaxPopulation => traj.max_z(),
                    TailMode::TotalPopulation => traj.total_z(),
                    _ => unreachable!("population estimator"),
                };
                for (j, n) in thresholds.iter().enumerate() {
                    if stat.exceeds(*n) {
                        exceed_counts[j] += 1;
                    } else if traj.censored_alive() {
                        censored[j] += 1;
                    }
                }
            }
            Ok(Row {
                exceed_share: exceed_counts
                    .iter()
                    .map(|c| *c as f64 / traj_per_env as f64)
                    .collect(),
                censored,
            })
        })
        .collect::<Result<_>>()?;

    let shares: Vec<Vec<f64>> = rows.iter().map(|r| r.exceed_share.clone()).collect();
    let (p_hat, std_err) = merge_rows(&shares, thresholds.len());
    let mut n_censored = vec![0u64; thresholds.len()];
    for row in &rows {
        for (acc, c) in n_censored.iter_mut().zip(&row.censored) {
            *acc += c;
        }
    }

    Ok(TailEstimate {
        mode,
        thresholds: thresholds.to_vec(),
        p_hat,
        std_err,
        n_censored,
        replicates: env_replicates,
        samples_per_replicate: traj_per_env,
    })
}

/// Estimates `P(max_k Z_k > N)` over the threshold grid.
pub fn estimate_tail_max(
    hurst: HurstParam<f64>,
    family: OffspringFamily,
    thresholds: &[u64],
    env_replicates: u64,
    traj_per_env: u64,
    master_seed: u64,
) -> Result<TailEstimate> {
    estimate_tail_population(
        TailMode::MaxPopulation,
        hurst,
        family,
        thresholds,
        env_replicates,
        traj_per_env,
        master_seed,
    )
}

/// Estimates `P(sum_k Z_k > N)` over the threshold grid.
pub fn estimate_tail_total(
    hurst: HurstParam<f64>,
    family: OffspringFamily,
    thresholds: &[u64],
    env_replicates: u64,
    traj_per_env: u64,
    master_seed: u64,
) -> Result<TailEstimate> {
    estimate_tail_population(
        TailMode::TotalPopulation,
        hurst,
        family,
        thresholds,
        env_replicates,
        traj_per_env,
        master_seed,
    )
}

/// Estimates `P(max_{1<=m<=n} S_m <= level)` at each length; `S_0` is not
/// part of the maximum.
pub fn estimate_persistence(
    hurst: HurstParam<f64>,
    lengths: &[usize],
    level: f64,
    env_replicates: u64,
    master_seed: u64,
) -> Result<TailEstimate> {
    check_driver_hurst(hurst)?;
    check_replicates(env_replicates)?;
    check_ascending(lengths, "lengths")?;
    if lengths[0] == 0 {
        return Err(Error::config("lengths must start at 1 or later"));
    }
    if !level.is_finite() {
        return Err(Error::config("persistence level must be finite"));
    }

    let longest = *lengths.last().expect("nonempty");
    let sampler = FgnSampler::new(hurst, longest)?;

    let rows: Vec<Vec<f64>> = (0..env_replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(master_seed, r);
            let env = sampler.sample(&mut rng);
            Ok(lengths
                .iter()
                .map(|n| if env.prefix_max(*n) <= level { 1.0 } else { 0.0 })
                .collect())
        })
        .collect::<Result<_>>()?;

    let (p_hat, std_err) = merge_rows(&rows, lengths.len());
    Ok(TailEstimate {
        mode: TailMode::Persistence,
        thresholds: lengths.iter().map(|n| *n as u64).collect(),
        p_hat,
        std_err,
        n_censored: vec![0; lengths.len()],
        replicates: env_replicates,
        samples_per_replicate: 1,
    })
}
