//! Configuration file handling and defaults.
//!
//! Settings resolve in three layers: built-in defaults, then the TOML file
//! given with `--config`, then command-line flags. Unknown keys in the file
//! are rejected rather than ignored, so a typo cannot silently fall back to
//! a default.

use std::path::Path;

use serde::Deserialize;

/// Fully resolved run settings after defaults and file merging.
#[derive(Clone, Debug)]
pub struct Settings {
    pub hurst: f64,
    pub family: String,
    pub seed: u64,
    pub env_replicates: u64,
    pub traj_per_env: u64,
    /// Extinction-time horizons, generations.
    pub horizons: Vec<u64>,
    /// Population thresholds for the maximum and total tails.
    pub thresholds: Vec<u64>,
    /// Walk lengths for persistence probabilities.
    pub lengths: Vec<u64>,
    /// Barrier level for persistence.
    pub level: f64,
    pub transform: Option<String>,
    pub window: Option<(u64, u64)>,
}

fn doubling(from: u64, to: u64) -> Vec<u64> {
    std::iter::successors(Some(from), |v| (*v < to).then(|| v * 2)).collect()
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            hurst: 0.5,
            family: "geometric".to_string(),
            seed: 1,
            env_replicates: 100_000,
            traj_per_env: 1,
            horizons: doubling(16, 4096),
            thresholds: doubling(16, 1 << 20),
            lengths: doubling(64, 16_384),
            level: 0.0,
            transform: None,
            window: None,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default)]
    experiment: ExperimentSection,
    #[serde(default)]
    fit: FitSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentSection {
    hurst: Option<f64>,
    family: Option<String>,
    seed: Option<u64>,
    env_replicates: Option<u64>,
    traj_per_env: Option<u64>,
    horizons: Option<Vec<u64>>,
    thresholds: Option<Vec<u64>>,
    lengths: Option<Vec<u64>>,
    level: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FitSection {
    transform: Option<String>,
    window: Option<[u64; 2]>,
}

impl Settings {
    /// Overlays the TOML file at `path` onto these settings.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let file: FileConfig = toml::from_str(&text)
            .map_err(|e| format!("bad config {}: {e}", path.display()))?;

        let exp = file.experiment;
        merge(&mut self.hurst, exp.hurst);
        merge(&mut self.family, exp.family);
        merge(&mut self.seed, exp.seed);
        merge(&mut self.env_replicates, exp.env_replicates);
        merge(&mut self.traj_per_env, exp.traj_per_env);
        merge(&mut self.horizons, exp.horizons);
        merge(&mut self.thresholds, exp.thresholds);
        merge(&mut self.lengths, exp.lengths);
        merge(&mut self.level, exp.level);
        if file.fit.transform.is_some() {
            self.transform = file.fit.transform;
        }
        if let Some([lo, hi]) = file.fit.window {
            self.window = Some((lo, hi));
        }
        Ok(())
    }
}

fn merge<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}
