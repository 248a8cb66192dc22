//! Synthetic samples with known cluster structure: sums of Gaussian bumps
//! with random amplitudes, composed with random exponential warpings.
//!
//! Every function `i` draws from its own ChaCha8 stream (`seed`, stream `i`)
//! in a fixed order: cluster, warping parameter, then the bump amplitudes.
//! A sample is therefore reproducible from `(config, seed)` alone, and
//! function `i` does not depend on `N`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::srvf::{Func, FunctionSample, Grid};
use crate::warping::Warping;

/// Default number of grid points for generated data.
pub const DEFAULT_GRID_LEN: usize = 201;

/// Range of the warping parameter `α ~ Uniform[-3, 3]`.
pub const WARP_ALPHA_RANGE: f64 = 3.0;

/// Bumps per coordinate for each cluster of the two-dimensional generator.
pub const SIM2_PEAKS: [[usize; 2]; 3] = [[2, 1], [1, 2], [2, 2]];

/// How `τ` sets the spread of the bump amplitudes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseScale {
    /// `z ~ N(1, τ)` with `τ` the variance.
    #[default]
    Variance,
    /// `z ~ N(1, τ²)`.
    StdDev,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub tau: f64,
    pub k_star: usize,
    #[serde(default = "default_grid_len")]
    pub grid_len: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub noise_scale: NoiseScale,
}

fn default_grid_len() -> usize {
    DEFAULT_GRID_LEN
}

impl SimConfig {
    pub fn new(n: usize, tau: f64, k_star: usize, seed: u64) -> Self {
        Self { n, tau, k_star, grid_len: DEFAULT_GRID_LEN, seed, noise_scale: NoiseScale::Variance }
    }

    fn amplitude_distribution(&self) -> Result<Normal<f64>> {
        let sd = match self.noise_scale {
            NoiseScale::Variance => self.tau.sqrt(),
            NoiseScale::StdDev => self.tau,
        };
        Normal::new(1.0, sd).map_err(|e| Error::Config(e.to_string()))
    }

    fn validate(&self, max_k: usize) -> Result<()> {
        if self.k_star == 0 || self.k_star > max_k {
            return Err(Error::Config(format!("K* must be in 1..={max_k}, got {}", self.k_star)));
        }
        if !(self.tau > 0.0) {
            return Err(Error::Config("tau must be > 0".into()));
        }
        if self.n < self.k_star {
            return Err(Error::TooFewObservations { n: self.n, k: self.k_star });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub sample: FunctionSample,
    /// 0-based true cluster (`p_i - 1`).
    pub labels: Vec<usize>,
    pub warpings: Vec<Warping>,
}

/// Unnormalized Gaussian bump `exp(-(t - μ)² / (2σ²))`.
pub fn bump(t: f64, mu: f64, sigma: f64) -> f64 {
    (-(t - mu) * (t - mu) / (2.0 * sigma * sigma)).exp()
}

/// `Σ_j z_j φ(t; (2j-1)/(2p), 1/(3p))` with `p = amplitudes.len()`.
pub fn bump_sum(t: f64, amplitudes: &[f64]) -> f64 {
    let p = amplitudes.len() as f64;
    amplitudes
        .iter()
        .enumerate()
        .map(|(j, z)| z * bump(t, (2.0 * j as f64 + 1.0) / (2.0 * p), 1.0 / (3.0 * p)))
        .sum()
}

fn exp_warp_value(t: f64, alpha: f64) -> f64 {
    if alpha.abs() < 1e-12 {
        t
    } else {
        (alpha * t).exp_m1() / alpha.exp_m1()
    }
}

/// `γ(t) = (e^{αt} - 1) / (e^α - 1)`, the identity at `α = 0`.
pub fn random_warping(grid: &Grid, alpha: f64) -> Result<Warping> {
    Warping::from_fn(grid.clone(), |t| exp_warp_value(t, alpha))
}

fn function_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

struct Draw {
    cluster: usize,
    alpha: f64,
}

fn draw_common(rng: &mut ChaCha8Rng, k_star: usize) -> Draw {
    let cluster = rng.random_range(0..k_star);
    let alpha = Uniform::new_inclusive(-WARP_ALPHA_RANGE, WARP_ALPHA_RANGE).unwrap().sample(rng);
    Draw { cluster, alpha }
}

/// Scalar functions with `p_i ~ Uniform{1..K*}` bumps.
pub fn generate_sim1(cfg: &SimConfig) -> Result<LabeledSample> {
    cfg.validate(usize::MAX)?;
    let grid = Grid::uniform(cfg.grid_len)?;
    let amp = cfg.amplitude_distribution()?;
    let mut funcs = Vec::with_capacity(cfg.n);
    let mut labels = Vec::with_capacity(cfg.n);
    let mut warpings = Vec::with_capacity(cfg.n);
    for i in 0..cfg.n {
        let mut rng = function_rng(cfg.seed, i);
        let d = draw_common(&mut rng, cfg.k_star);
        let z: Vec<f64> = (0..=d.cluster).map(|_| amp.sample(&mut rng)).collect();
        funcs.push(Func::from_fn(grid.clone(), 1, |t, o| o[0] = bump_sum(exp_warp_value(t, d.alpha), &z))?);
        labels.push(d.cluster);
        warpings.push(random_warping(&grid, d.alpha)?);
    }
    Ok(LabeledSample { sample: FunctionSample::new(funcs)?, labels, warpings })
}

/// Two-dimensional functions; coordinate `l` of a cluster-`k` function has
/// `SIM2_PEAKS[k][l]` bumps. Both coordinates share one warping.
pub fn generate_sim2(cfg: &SimConfig) -> Result<LabeledSample> {
    cfg.validate(SIM2_PEAKS.len())?;
    let grid = Grid::uniform(cfg.grid_len)?;
    let amp = cfg.amplitude_distribution()?;
    let mut funcs = Vec::with_capacity(cfg.n);
    let mut labels = Vec::with_capacity(cfg.n);
    let mut warpings = Vec::with_capacity(cfg.n);
    for i in 0..cfg.n {
        let mut rng = function_rng(cfg.seed, i);
        let d = draw_common(&mut rng, cfg.k_star);
        let z: Vec<Vec<f64>> = SIM2_PEAKS[d.cluster]
            .iter()
            .map(|&b| (0..b).map(|_| amp.sample(&mut rng)).collect())
            .collect();
        funcs.push(Func::from_fn(grid.clone(), 2, |t, o| {
            let s = exp_warp_value(t, d.alpha);
            o[0] = bump_sum(s, &z[0]);
            o[1] = bump_sum(s, &z[1]);
        })?);
        labels.push(d.cluster);
        warpings.push(random_warping(&grid, d.alpha)?);
    }
    Ok(LabeledSample { sample: FunctionSample::new(funcs)?, labels, warpings })
}

/// Interior local maxima exceeding `min + rel · (max - min)`.
pub fn count_peaks(values: &[f64], rel: f64) -> usize {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let threshold = lo + rel * (hi - lo);
    values.windows(3).filter(|w| w[1] > w[0] && w[1] >= w[2] && w[1] > threshold).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::{dp_align, DpConfig};
    use approx::assert_abs_diff_eq;

    #[test]
    fn warping_formula() {
        let grid = Grid::uniform(201).unwrap();
        let w = random_warping(&grid, 3.0).unwrap();
        assert_abs_diff_eq!(w.values()[100], 1.5f64.exp_m1() / 3f64.exp_m1(), epsilon = 1e-15);
        assert_abs_diff_eq!(w.values()[100], 0.18242, epsilon = 1e-5);
        let id = random_warping(&grid, 0.0).unwrap();
        assert_eq!(id.values(), grid.points());
        for a in [-3.0, -1e-9, 1e-7, 2.5] {
            assert!(random_warping(&grid, a).is_ok());
        }
    }

    #[test]
    fn reproducible() {
        let cfg = SimConfig::new(30, 0.05, 3, 42);
        assert_eq!(generate_sim1(&cfg).unwrap(), generate_sim1(&cfg).unwrap());
        assert_eq!(generate_sim2(&cfg).unwrap(), generate_sim2(&cfg).unwrap());
        let other = SimConfig { seed: 43, ..cfg };
        assert_ne!(generate_sim1(&cfg).unwrap().sample, generate_sim1(&other).unwrap().sample);
    }

    #[test]
    fn config_validation() {
        assert!(generate_sim1(&SimConfig::new(10, 0.05, 0, 1)).is_err());
        assert!(generate_sim1(&SimConfig::new(10, 0.0, 1, 1)).is_err());
        assert!(generate_sim1(&SimConfig::new(2, 0.05, 3, 1)).is_err());
        assert!(generate_sim2(&SimConfig::new(10, 0.05, 4, 1)).is_err());
    }

    #[test]
    fn labels_roughly_uniform() {
        let s = generate_sim1(&SimConfig { grid_len: 11, ..SimConfig::new(1200, 0.05, 3, 5) }).unwrap();
        for c in 0..3 {
            let count = s.labels.iter().filter(|&&l| l == c).count() as f64;
            // binomial(1200, 1/3): mean 400, sd 16.3
            assert!((count - 400.0).abs() <= 3.0 * 16.33, "cluster {c}: {count}");
        }
    }

    #[test]
    fn peak_count_matches_cluster() {
        let grid = Grid::uniform(201).unwrap();
        for p in 1..=4 {
            let g: Vec<f64> = grid.points().iter().map(|&t| bump_sum(t, &vec![1.0; p])).collect();
            assert_eq!(count_peaks(&g, 0.1), p);
        }
        let s = generate_sim1(&SimConfig::new(40, 0.05, 4, 9)).unwrap();
        for (f, &l) in s.sample.funcs().iter().zip(&s.labels) {
            assert_eq!(count_peaks(f.values(), 0.1), l + 1);
        }
    }

    #[test]
    fn sim2_peak_table() {
        let s = generate_sim2(&SimConfig::new(60, 0.05, 3, 4)).unwrap();
        assert_eq!(s.sample.dim(), 2);
        for (f, &l) in s.sample.funcs().iter().zip(&s.labels) {
            assert_eq!(count_peaks(&f.component(0), 0.1), SIM2_PEAKS[l][0]);
            assert_eq!(count_peaks(&f.component(1), 0.1), SIM2_PEAKS[l][1]);
        }
        let one = generate_sim2(&SimConfig::new(10, 0.05, 1, 4)).unwrap();
        assert!(one.labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn sim2_coordinates_share_warping() {
        let s = generate_sim2(&SimConfig::new(8, 0.05, 1, 2)).unwrap();
        let grid = s.sample.grid().clone();
        for (f, w) in s.sample.funcs().iter().zip(&s.warpings) {
            // the single bump of coordinate 1 sits at γ⁻¹(0.5); coordinate 0
            // has its trough between bumps at the same location
            let inv = w.inverse().unwrap().eval(0.5);
            let c1 = f.component(1);
            let peak = grid.points()[c1.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0];
            assert!((peak - inv).abs() <= 0.02, "{peak} vs {inv}");
        }
    }

    #[test]
    fn noise_scale_reading() {
        let var = SimConfig::new(1, 0.04, 1, 0).amplitude_distribution().unwrap();
        let sd = SimConfig { noise_scale: NoiseScale::StdDev, ..SimConfig::new(1, 0.04, 1, 0) }
            .amplitude_distribution()
            .unwrap();
        assert_abs_diff_eq!(var.std_dev(), 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(sd.std_dev(), 0.04, epsilon = 1e-15);
    }

    #[test]
    fn amplitude_draws_have_requested_moments() {
        let amp = Normal::new(1.0, 0.1f64.sqrt()).unwrap();
        let mut rng = function_rng(11, 0);
        let z: Vec<f64> = (0..20000).map(|_| amp.sample(&mut rng)).collect();
        let mean = z.iter().sum::<f64>() / z.len() as f64;
        let var = z.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (z.len() - 1) as f64;
        assert!((mean - 1.0).abs() <= 4.0 * 0.1f64.sqrt() / (z.len() as f64).sqrt());
        assert!((var - 0.1).abs() <= 0.02);
    }

    #[test]
    fn noiseless_single_cluster_is_one_orbit() {
        let s = generate_sim1(&SimConfig::new(4, 1e-12, 1, 3)).unwrap();
        let qs = s.sample.srvfs().unwrap();
        for q in &qs[1..] {
            let d = dp_align(&qs[0], q, &DpConfig::default()).unwrap().distance;
            assert!(d <= 0.05 * qs[0].norm(), "residual {d}");
        }
    }
}
