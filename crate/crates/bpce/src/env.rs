//! Correlated Gaussian environment: fractional Gaussian noise and its walk.
//!
//! The noise `X_1, X_2, ...` is stationary, standard normal in the margin,
//! with autocovariance
//!
//! ```text
//!     r(j) = ((j+1)^{2H} - 2 j^{2H} + (j-1)^{2H}) / 2 ,       r(0) = 1 ,
//! ```
//!
//! the increment covariance of fractional Brownian motion with Hurst
//! parameter `H`. Summing over a block telescopes exactly:
//!
//! ```text
//!     sum_{i,j=1..n} r(i-j) = Var(S_n) = n^{2H} .
//! ```
//!
//! Sampling is exact in distribution via circulant embedding: the covariance
//! sequence is mirrored onto a circulant of power-of-two length `M >= 2(n-1)`
//! whose eigenvalues are the FFT of that first row. For this covariance the
//! embedding of `M/2 + 1` points is nonnegative definite at every `H`, so the
//! eigenvalues are nonnegative up to rounding noise, which is clipped.

use std::io::{self, Read, Write};
use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftNum, FftPlanner};

use crate::error::Error;
use crate::scalar::Scalar;
use crate::Result;

/// Validated Hurst parameter, strictly inside the unit interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HurstParam<F>(F);

impl<F: Scalar> HurstParam<F> {
    /// Accepts `0 < h < 1`.
    pub fn new(h: F) -> Result<Self> {
        if h.is_finite() && h > F::zero() && h < F::one() {
            Ok(HurstParam(h))
        } else {
            Err(Error::InvalidHurst(h.to_f64().unwrap_or(f64::NAN)))
        }
    }

    pub fn value(self) -> F {
        self.0
    }

    /// True for `h = 1/2`, where the noise degenerates to white noise.
    pub fn is_white(self) -> bool {
        self.0 == F::of(0.5)
    }
}

/// Autocovariance of fractional Gaussian noise at lag `j`.
///
/// `r(0) = 1`; `r(j) = 0` for `j >= 1` at `h = 1/2`; positive lags carry
/// positive correlation for `h > 1/2` and negative for `h < 1/2`.
pub fn fgn_covariance<F: Scalar>(j: usize, h: HurstParam<F>) -> F {
    if j == 0 {
        return F::one();
    }
    let two_h = F::of(2.0) * h.value();
    let j = F::of_usize(j);
    let half = F::of(0.5);
    half * ((j + F::one()).powf(two_h) - F::of(2.0) * j.powf(two_h) + (j - F::one()).powf(two_h))
}

/// Parameters identifying one environment draw.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FgnSpec<F> {
    pub hurst: HurstParam<F>,
    pub length: usize,
    pub seed: u64,
}

/// One environment realization: the noise `X_1..X_n`, its walk
/// `S_0..S_n`, and the walk's running maximum.
///
/// The walk is stored as produced by cumulative summation, so
/// `s[k] - s[k-1] == x[k-1]` holds exactly in floating point.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvPath<F> {
    x: Vec<F>,
    s: Vec<F>,
    smax: Vec<F>,
}

impl<F: Scalar> EnvPath<F> {
    /// Builds the walk from its increments.
    pub fn from_increments(x: Vec<F>) -> Self {
        let mut s = Vec::with_capacity(x.len() + 1);
        let mut smax = Vec::with_capacity(x.len() + 1);
        s.push(F::zero());
        smax.push(F::neg_infinity());
        for (k, xi) in x.iter().enumerate() {
            let next = s[k] + *xi;
            s.push(next);
            smax.push(if next > smax[k] { next } else { smax[k] });
        }
        EnvPath { x, s, smax }
    }

    /// Number of noise terms `n`.
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Noise values; index `i` holds `X_{i+1}`.
    pub fn x(&self) -> &[F] {
        &self.x
    }

    /// Walk values `S_0..S_n`; index `k` holds `S_k`.
    pub fn s(&self) -> &[F] {
        &self.s
    }

    /// `max(S_1..S_k)`, excluding `S_0`. Negative infinity at `k = 0`.
    pub fn prefix_max(&self, k: usize) -> F {
        self.smax[k]
    }

    /// `max(S_from..S_to)` over `1 <= from <= to <= n`.
    pub fn running_max(&self, from: usize, to: usize) -> Result<F> {
        if from < 1 || from > to || to > self.len() {
            return Err(Error::IndexRange { from, to, len: self.len() });
        }
        let mut best = self.s[from];
        for k in from + 1..=to {
            if self.s[k] > best {
                best = self.s[k];
            }
        }
        Ok(best)
    }

    /// First index `k >= 1` where the walk crosses `level`: reaches
    /// `S_k >= level` for positive levels, `S_k <= level` for negative ones.
    /// `None` when the walk never crosses within the path.
    pub fn first_passage(&self, level: F) -> Result<Option<usize>> {
        if level > F::zero() {
            Ok(self.s.iter().skip(1).position(|sk| *sk >= level).map(|p| p + 1))
        } else if level < F::zero() {
            Ok(self.s.iter().skip(1).position(|sk| *sk <= level).map(|p| p + 1))
        } else {
            Err(Error::ZeroLevel)
        }
    }

    /// Writes the increments as a binary dump: an 8-byte magic `BPCEENV1`,
    /// the length as a little-endian `u32`, a reserved `u32` of zero, then
    /// each value as a little-endian `f64`.
    pub fn write_binary<W: Write>(&self, w: &mut W) -> io::Result<()> {
        let n = u32::try_from(self.x.len())
            .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "path too long for dump"))?;
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&n.to_le_bytes())?;
        w.write_all(&0u32.to_le_bytes())?;
        for xi in &self.x {
            let v = xi.to_f64().expect("scalar converts to f64");
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }
}

const DUMP_MAGIC: &[u8; 8] = b"BPCEENV1";

impl EnvPath<f64> {
    /// Reads a dump produced by [`EnvPath::write_binary`].
    pub fn read_binary<R: Read>(r: &mut R) -> io::Result<Self> {
        let mut header = [0u8; 16];
        r.read_exact(&mut header)?;
        if &header[..8] != DUMP_MAGIC {
            return Err(io::Error::new(io::ErrorKind::InvalidData, "bad magic"));
        }
        let n = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        let mut x = Vec::with_capacity(n);
        let mut buf = [0u8; 8];
        for _ in 0..n {
            r.read_exact(&mut buf)?;
            x.push(f64::from_le_bytes(buf));
        }
        Ok(EnvPath::from_increments(x))
    }
}

/// Exact-in-distribution sampler for fixed `(hurst, length)`, reusable
/// across replicates. Construction pays for the eigenvalue spectrum and the
/// FFT plan once; each draw costs one complex FFT of the embedding length.
#[derive(Clone)]
pub struct FgnSampler<F> {
    hurst: HurstParam<F>,
    n: usize,
    // sqrt(eigenvalue / M) per frequency; premultiplying standard complex
    // Gaussians by this makes the DFT output have covariance r in both the
    // real and the imaginary component.
    scale: Vec<F>,
    fft: Arc<dyn Fft<F>>,
}

impl<F: Scalar + FftNum> FgnSampler<F> {
    pub fn new(hurst: HurstParam<F>, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::config("environment length must be at least 1"));
        }
        let m = 2 * (n.max(2) - 1);
        let m = m.next_power_of_two();
        let half = m / 2;

        // Covariance is mirrored onto the circulant's first row; extending r
        // out to lag M/2 makes this the minimal embedding of M/2 + 1 points.
        let h64 = HurstParam::new(hurst.value().to_f64().expect("finite"))?;
        let mut row: Vec<Complex<f64>> = Vec::with_capacity(m);
        row.resize(m, Complex::new(0.0, 0.0));
        for j in 0..=half {
            row[j].re = fgn_covariance(j, h64);
        }
        for j in 1..half {
            row[m - j].re = row[j].re;
        }

        let mut planner64 = FftPlanner::<f64>::new();
        planner64.plan_fft_forward(m).process(&mut row);

        let max_eig = row.iter().map(|c| c.re).fold(f64::MIN, f64::max);
        let tolerance = -1e-9 * max_eig;
        let min_eig = row.iter().map(|c| c.re).fold(f64::MAX, f64::min);
        if min_eig < tolerance {
            return Err(Error::EmbeddingFailure { min_eigenvalue: min_eig });
        }

        let m_f = m as f64;
        let scale: Vec<F> = row
            .iter()
            .map(|c| F::of((c.re.max(0.0) / m_f).sqrt()))
            .collect();

        let fft = FftPlanner::<F>::new().plan_fft_forward(m);
        Ok(FgnSampler { hurst, n, scale, fft })
    }

    pub fn hurst(&self) -> HurstParam<F> {
        self.hurst
    }

    /// Environment length `n` of each draw.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Draws one path. Consumes exactly `2M` standard normals from `rng`,
    /// where `M` is the embedding length, so replicate streams stay aligned.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> EnvPath<F>
    where
        StandardNormal: Distribution<F>,
    {
        let mut buf: Vec<Complex<F>> = self
            .scale
            .iter()
            .map(|s| {
                let re: F = StandardNormal.sample(rng);
                let im: F = StandardNormal.sample(rng);
                Complex::new(*s * re, *s * im)
            })
            .collect();
        self.fft.process(&mut buf);
        let x: Vec<F> = buf[..self.n].iter().map(|c| c.re).collect();
        EnvPath::from_increments(x)
    }
}

/// Draws the path identified by `spec`, seeding a dedicated ChaCha stream
/// from `spec.seed`. Same spec, same path, bit for bit.
pub fn sample_fgn<F: Scalar + FftNum>(spec: &FgnSpec<F>) -> Result<EnvPath<F>>
where
    StandardNormal: Distribution<F>,
{
    let sampler = FgnSampler::new(spec.hurst, spec.length)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    Ok(sampler.sample(&mut rng))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(v: f64) -> HurstParam<f64> {
        HurstParam::new(v).unwrap()
    }

    #[test]
    fn hurst_param_validates() {
        assert!(HurstParam::new(0.5).is_ok());
        assert!(matches!(HurstParam::new(0.0), Err(Error::InvalidHurst(_))));
        assert!(matches!(HurstParam::new(1.0), Err(Error::InvalidHurst(_))));
        assert!(matches!(HurstParam::new(f64::NAN), Err(Error::InvalidHurst(_))));
        assert!(h(0.5).is_white());
        assert!(!h(0.7).is_white());
    }

    #[test]
    fn covariance_fixed_values() {
        assert_eq!(fgn_covariance(0, h(0.7)), 1.0);
        // 0.5 * (2^1.4 - 2)
        assert!((fgn_covariance(1, h(0.7)) - 0.31951).abs() < 1e-5);
        // white noise: exactly zero at every positive lag
        for j in 1..64 {
            assert_eq!(fgn_covariance(j, h(0.5)), 0.0);
        }
        // anti-persistent side is negative at lag 1
        assert!(fgn_covariance(1, h(0.3)) < 0.0);
    }

    #[test]
    fn covariance_nonnegative_in_persistent_range() {
        for &hv in &[0.5, 0.6, 0.7, 0.85, 0.95] {
            for j in 0..10_000 {
                assert!(
                    fgn_covariance(j, h(hv)) >= 0.0,
                    "r({j}) < 0 at H={hv}"
                );
            }
        }
    }

    #[test]
    fn covariance_block_sum_telescopes() {
        for &n in &[16usize, 64, 256] {
            for &hv in &[0.55, 0.7, 0.9] {
                let mut total = 0.0;
                for i in 1..=n as i64 {
                    for j in 1..=n as i64 {
                        total += fgn_covariance((i - j).unsigned_abs() as usize, h(hv));
                    }
                }
                let expect = (n as f64).powf(2.0 * hv);
                assert!(
                    (total - expect).abs() <= 1e-8 * expect,
                    "n={n} H={hv}: {total} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn walk_prefix_sums_accumulate_bit_for_bit() {
        let path = EnvPath::from_increments(vec![0.1, -0.7, 3.3, 0.025]);
        assert_eq!(path.s()[0], 0.0);
        let mut acc = 0.0;
        for k in 1..=path.len() {
            acc += path.x()[k - 1];
            assert_eq!(path.s()[k], acc);
        }
    }

    #[test]
    fn running_max_and_prefix_max() {
        // s = (0, -1, -2, -3)
        let path = EnvPath::from_increments(vec![-1.0, -1.0, -1.0]);
        assert_eq!(path.running_max(1, 3).unwrap(), -1.0);
        assert_eq!(path.running_max(2, 3).unwrap(), -2.0);
        assert_eq!(path.prefix_max(3), -1.0);
        assert_eq!(path.prefix_max(0), f64::NEG_INFINITY);
        assert!(matches!(
            path.running_max(0, 2),
            Err(Error::IndexRange { .. })
        ));
        assert!(matches!(
            path.running_max(3, 2),
            Err(Error::IndexRange { .. })
        ));
        assert!(matches!(
            path.running_max(1, 4),
            Err(Error::IndexRange { .. })
        ));
    }

    #[test]
    fn first_passage_both_sides() {
        // s = (0, 1, 2)
        let path = EnvPath::from_increments(vec![1.0, 1.0]);
        assert_eq!(path.first_passage(1.5).unwrap(), Some(2));
        assert_eq!(path.first_passage(1.0).unwrap(), Some(1));
        assert_eq!(path.first_passage(-0.5).unwrap(), None);
        assert!(matches!(path.first_passage(0.0), Err(Error::ZeroLevel)));
        assert!(matches!(path.first_passage(f64::NAN), Err(Error::ZeroLevel)));

        let down = EnvPath::from_increments(vec![-0.25, -0.25, -0.25]);
        assert_eq!(down.first_passage(-0.5).unwrap(), Some(2));
        assert_eq!(down.first_passage(0.1).unwrap(), None);
    }

    #[test]
    fn sampler_is_reproducible() {
        let spec = FgnSpec { hurst: h(0.7), length: 257, seed: 42 };
        let a = sample_fgn(&spec).unwrap();
        let b = sample_fgn(&spec).unwrap();
        let bits = |p: &EnvPath<f64>| p.x().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));

        let c = sample_fgn(&FgnSpec { seed: 43, ..spec }).unwrap();
        assert_ne!(bits(&a), bits(&c));
    }

    #[test]
    fn sampler_handles_tiny_lengths() {
        for n in 1..=4 {
            let spec = FgnSpec { hurst: h(0.8), length: n, seed: 9 };
            let path = sample_fgn(&spec).unwrap();
            assert_eq!(path.len(), n);
            assert!(path.x().iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn sampler_rejects_empty() {
        assert!(FgnSampler::<f64>::new(h(0.7), 0).is_err());
    }

    #[test]
    fn f32_instantiation_samples() {
        let hurst = HurstParam::<f32>::new(0.7).unwrap();
        let sampler = FgnSampler::new(hurst, 64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let path = sampler.sample(&mut rng);
        assert_eq!(path.len(), 64);
        let mut acc = 0.0f32;
        for k in 1..=path.len() {
            acc += path.x()[k - 1];
            assert_eq!(path.s()[k], acc);
        }
    }

    /// Mean and standard error of a per-path statistic over replicates.
    fn replicate_stats(values: &[f64]) -> (f64, f64) {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    }

    #[test]
    fn sampled_noise_matches_covariance() {
        let sampler = FgnSampler::new(h(0.7), 2048).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let reps = 200;

        let mut lag0 = Vec::with_capacity(reps);
        let mut lag1 = Vec::with_capacity(reps);
        let mut lag4 = Vec::with_capacity(reps);
        for _ in 0..reps {
            let p = sampler.sample(&mut rng);
            let x = p.x();
            let n = x.len();
            lag0.push(x.iter().map(|v| v * v).sum::<f64>() / n as f64);
            lag1.push((0..n - 1).map(|i| x[i] * x[i + 1]).sum::<f64>() / (n - 1) as f64);
            lag4.push((0..n - 4).map(|i| x[i] * x[i + 4]).sum::<f64>() / (n - 4) as f64);
        }

        for (vals, lag) in [(lag0, 0usize), (lag1, 1), (lag4, 4)] {
            let (mean, se) = replicate_stats(&vals);
            let expect = fgn_covariance(lag, h(0.7));
            assert!(
                (mean - expect).abs() < 4.0 * se,
                "lag {lag}: {mean} vs {expect} (se {se})"
            );
        }
    }

    #[test]
    fn white_noise_case_is_uncorrelated_unit_variance() {
        let sampler = FgnSampler::new(h(0.5), 1024).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let reps = 300;
        let mut lag0 = Vec::with_capacity(reps);
        let mut lag1 = Vec::with_capacity(reps);
        let mut means = Vec::with_capacity(reps);
        for _ in 0..reps {
            let p = sampler.sample(&mut rng);
            let x = p.x();
            let n = x.len() as f64;
            means.push(x.iter().sum::<f64>() / n);
            lag0.push(x.iter().map(|v| v * v).sum::<f64>() / n);
            lag1.push((0..x.len() - 1).map(|i| x[i] * x[i + 1]).sum::<f64>() / (n - 1.0));
        }
        let (m, m_se) = replicate_stats(&means);
        let (v, v_se) = replicate_stats(&lag0);
        let (c, c_se) = replicate_stats(&lag1);
        assert!(m.abs() < 4.0 * m_se + 1e-12, "mean {m} (se {m_se})");
        assert!((v - 1.0).abs() < 4.0 * v_se, "variance {v} (se {v_se})");
        assert!(c.abs() < 4.0 * c_se + 1e-12, "lag-1 {c} (se {c_se})");
    }

    #[test]
    fn walk_variance_matches_block_identity() {
        // Var(S_n) = n^{2H}; checked at two horizons with empirical error bars.
        let sampler = FgnSampler::new(h(0.7), 256).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(777);
        let reps = 2000;
        let mut s16 = Vec::with_capacity(reps);
        let mut s256 = Vec::with_capacity(reps);
        for _ in 0..reps {
            let p = sampler.sample(&mut rng);
            s16.push(p.s()[16]);
            s256.push(p.s()[256]);
        }
        for (vals, n) in [(s16, 16usize), (s256, 256)] {
            let sq: Vec<f64> = vals.iter().map(|v| v * v).collect();
            let (var, se) = replicate_stats(&sq);
            let expect = (n as f64).powf(1.4);
            assert!(
                (var - expect).abs() < 4.0 * se,
                "Var(S_{n}) = {var} vs {expect} (se {se})"
            );
        }
    }

    #[test]
    fn dump_round_trips_and_header_is_stable() {
        let path = EnvPath::from_increments(vec![1.0, -0.5, 0.25]);
        let mut bytes = Vec::new();
        path.write_binary(&mut bytes).unwrap();
        assert_eq!(&bytes[..8], b"BPCEENV1");
        assert_eq!(&bytes[8..12], &3u32.to_le_bytes());
        assert_eq!(&bytes[12..16], &[0, 0, 0, 0]);
        assert_eq!(bytes.len(), 16 + 3 * 8);
        assert_eq!(&bytes[16..24], &1.0f64.to_le_bytes());

        let back = EnvPath::read_binary(&mut bytes.as_slice()).unwrap();
        assert_eq!(back, path);

        bytes[0] = b'X';
        assert!(EnvPath::read_binary(&mut bytes.as_slice()).is_err());
    }
}
