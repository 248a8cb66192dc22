//! Pairwise elastic alignment by dynamic programming over a lattice of
//! piecewise-linear warpings.
//!
//! Lattice nodes sit on a (possibly strided) subset of the grid indices on
//! both axes. A path moves from node `(i - a, j - b)` to `(i, j)` with a
//! coprime step `(a, b)`; along that segment `γ` is linear and the cost is
//! the trapezoidal integral of `|q1(t) - q2(γ(t)) sqrt(γ'(t))|²` over the
//! lattice nodes the segment spans, with `q2` interpolated linearly between
//! nodes.

use serde::{Deserialize, Serialize};

use super::polish::polish;
use crate::error::{Error, Result};
use crate::srvf::{check_same_shape, l2_distance, warp_srvf, Grid, Srvf};
use crate::warping::Warping;

/// Smallest lattice the DP accepts (nodes per axis).
pub const MIN_LATTICE_NODES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpConfig {
    /// Grid points between consecutive lattice nodes.
    pub stride: usize,
    /// Steps `(a, b)` range over coprime pairs with `1 ≤ a, b ≤ max_step`.
    pub max_step: usize,
    /// Report the smaller of the two alignment directions in
    /// [`amplitude_distance`].
    pub symmetric: bool,
    /// Half-width (in grid points) of the full-resolution band searched
    /// around a strided solution; `0` keeps the strided path.
    #[serde(default)]
    pub refine: usize,
    /// Cosine modes used to refine the final warping continuously; `0`
    /// returns the lattice warping.
    #[serde(default)]
    pub polish: usize,
}

impl Default for DpConfig {
    fn default() -> Self {
        Self { stride: 1, max_step: 7, symmetric: false, refine: 0, polish: 0 }
    }
}

impl DpConfig {
    pub fn new(stride: usize, max_step: usize) -> Self {
        Self { stride, max_step, symmetric: false, refine: 0, polish: 0 }
    }

    pub fn refined(mut self, band: usize) -> Self {
        self.refine = band;
        self
    }

    pub fn polished(mut self, terms: usize) -> Self {
        self.polish = terms;
        self
    }

    /// The same lattice search without continuous refinement.
    pub fn lattice_only(mut self) -> Self {
        self.polish = 0;
        self
    }

    pub fn symmetric(mut self, on: bool) -> Self {
        self.symmetric = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.stride == 0 {
            return Err(Error::Config("DP stride must be ≥ 1".into()));
        }
        if self.max_step == 0 {
            return Err(Error::Config("DP max step must be ≥ 1".into()));
        }
        Ok(())
    }

    /// Coprime steps, `(1, 1)` first so the diagonal wins ties.
    pub fn steps(&self) -> Vec<(usize, usize)> {
        let mut steps = vec![(1, 1)];
        for a in 1..=self.max_step {
            for b in 1..=self.max_step {
                if (a, b) != (1, 1) && gcd(a, b) == 1 {
                    steps.push((a, b));
                }
            }
        }
        steps
    }

    /// Fine-grid index of every lattice node for a grid of `len` points.
    pub fn lattice(&self, len: usize) -> Vec<usize> {
        let segments = (len - 1).div_ceil(self.stride).max(1);
        (0..=segments)
            .map(|c| ((c * (len - 1)) as f64 / segments as f64).round() as usize)
            .collect()
    }
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseAlignment {
    pub gamma: Warping,
    /// `warp_srvf(q2, gamma)`.
    pub q_aligned: Srvf,
    /// `‖q1 - q_aligned‖`.
    pub distance: f64,
}

/// Interpolation table for one step `(a, b)`: for each of the `a + 1`
/// sample points along the segment, the lower node offset into `q2`, the
/// fractional part, and the trapezoid weight.
struct StepTable {
    a: usize,
    b: usize,
    root_slope: f64,
    samples: Vec<(usize, f64, f64)>,
}

impl StepTable {
    fn new(a: usize, b: usize) -> Self {
        let slope = b as f64 / a as f64;
        let samples = (0..=a)
            .map(|u| {
                let num = u * b;
                let (k, rem) = (num / a, num % a);
                let (k, frac) = if u == a { (b - 1, 1.0) } else { (k, rem as f64 / a as f64) };
                let w = if u == 0 || u == a { 0.5 } else { 1.0 };
                (k, frac, w)
            })
            .collect();
        Self { a, b, root_slope: slope.sqrt(), samples }
    }

    /// Squared cost of mapping node rows `u0..=u0 + a` of `q1` linearly onto
    /// `p0..=p0 + b` of `q2`, both sampled at lattice nodes. Stops early with
    /// a partial sum once it exceeds `budget`.
    #[inline]
    fn cost(&self, q1: &[f64], q2: &[f64], dim: usize, u0: usize, p0: usize, budget: f64) -> f64 {
        let mut sum = 0.0;
        if dim == 1 {
            let (r, q) = (&q1[u0..=u0 + self.a], &q2[p0..=p0 + self.b]);
            for (&x, &(k, frac, w)) in r.iter().zip(&self.samples) {
                let e = x - self.root_slope * (q[k] + frac * (q[k + 1] - q[k]));
                sum += w * e * e;
                if sum > budget {
                    return sum;
                }
            }
            return sum;
        }
        for (u, &(k, frac, w)) in self.samples.iter().enumerate() {
            let lo = &q2[(p0 + k) * dim..(p0 + k + 1) * dim];
            let hi = &q2[(p0 + k + 1) * dim..(p0 + k + 2) * dim];
            let r = &q1[(u0 + u) * dim..(u0 + u + 1) * dim];
            let mut e2 = 0.0;
            for d in 0..dim {
                let e = r[d] - self.root_slope * (lo[d] + frac * (hi[d] - lo[d]));
                e2 += e * e;
            }
            sum += w * e2;
            if sum > budget {
                return sum;
            }
        }
        sum
    }
}

fn subsample(values: &[f64], dim: usize, nodes: &[usize]) -> Vec<f64> {
    nodes.iter().flat_map(|&i| values[i * dim..(i + 1) * dim].iter().copied()).collect()
}

/// Shortest path over an `n × n` node grid from `(0, 0)` to `(n-1, n-1)`.
/// Row `i` may only use columns in `ranges[i]` (inclusive). Returns the cost
/// and the path in node indices.
fn solve(
    v1: &[f64],
    v2: &[f64],
    dim: usize,
    n: usize,
    steps: &[StepTable],
    ranges: &[(usize, usize)],
) -> Result<(f64, Vec<(usize, usize)>)> {
    let dh = 1.0 / (n - 1) as f64;
    let mut cost = vec![f64::INFINITY; n * n];
    let mut back = vec![u8::MAX; n * n];
    cost[0] = 0.0;
    for i in 1..n {
        let (lo, hi) = ranges[i];
        for j in lo.max(1)..=hi {
            let mut best = f64::INFINITY;
            let mut arg = u8::MAX;
            for (s, step) in steps.iter().enumerate() {
                if step.a > i || step.b > j {
                    continue;
                }
                let prev = cost[(i - step.a) * n + (j - step.b)];
                if !(prev < best) {
                    continue;
                }
                let c = prev + dh * step.cost(v1, v2, dim, i - step.a, j - step.b, (best - prev) / dh);
                if c < best {
                    best = c;
                    arg = s as u8;
                }
            }
            cost[i * n + j] = best;
            back[i * n + j] = arg;
        }
    }

    let total = cost[n * n - 1];
    if !total.is_finite() {
        return Err(Error::Numerical("no admissible lattice path".into()));
    }
    let mut path = vec![(n - 1, n - 1)];
    let (mut i, mut j) = (n - 1, n - 1);
    while i > 0 || j > 0 {
        let step = &steps[back[i * n + j] as usize];
        i -= step.a;
        j -= step.b;
        path.push((i, j));
    }
    path.reverse();
    Ok((total, path))
}

/// Column ranges within `band` grid points of the piecewise-linear `path`.
fn band_around(path: &[(usize, usize)], len: usize, band: usize) -> Vec<(usize, usize)> {
    let mut ranges = vec![(0, 0); len];
    for w in path.windows(2) {
        let ((u0, p0), (u1, p1)) = (w[0], w[1]);
        let slope = (p1 - p0) as f64 / (u1 - u0) as f64;
        for (u, r) in ranges.iter_mut().enumerate().take(u1 + 1).skip(u0) {
            let centre = p0 as f64 + slope * (u - u0) as f64;
            let lo = (centre - band as f64).ceil().max(0.0) as usize;
            let hi = ((centre + band as f64).floor() as usize).min(len - 1);
            *r = (lo, hi);
        }
    }
    ranges
}

/// Lattice DP result: minimal cost and the node path (fine indices on both
/// axes) from `(0, 0)` to `(T-1, T-1)`.
///
/// Both SRVFs are sampled at the lattice nodes and segment integrals use
/// those samples, so with `stride > 1` the cost is a coarse-grid quadrature.
/// With `refine > 0` the coarse path is then re-optimized on the full grid
/// inside a band of that many grid points around it.
pub(crate) fn lattice_dp(q1: &Srvf, q2: &Srvf, config: &DpConfig) -> Result<(f64, Vec<(usize, usize)>)> {
    config.validate()?;
    check_same_shape(q1.grid(), q1.dim(), q2.grid(), q2.dim())?;
    if !q1.grid().is_uniform() {
        return Err(Error::NonUniformGrid);
    }
    let nodes = config.lattice(q1.len());
    let n = nodes.len();
    if n < MIN_LATTICE_NODES {
        return Err(Error::GridTooShort { min: MIN_LATTICE_NODES, got: n });
    }
    let steps: Vec<StepTable> = config.steps().into_iter().map(|(a, b)| StepTable::new(a, b)).collect();
    let dim = q1.dim();
    let v1 = subsample(q1.values(), dim, &nodes);
    let v2 = subsample(q2.values(), dim, &nodes);
    let (cost, path) = solve(&v1, &v2, dim, n, &steps, &vec![(1, n - 1); n])?;
    let path: Vec<(usize, usize)> = path.into_iter().map(|(i, j)| (nodes[i], nodes[j])).collect();
    if config.refine == 0 || config.stride == 1 {
        return Ok((cost, path));
    }
    let len = q1.len();
    let ranges = band_around(&path, len, config.refine);
    solve(q1.values(), q2.values(), dim, len, &steps, &ranges)
}

fn path_to_warping(grid: &Grid, path: &[(usize, usize)]) -> Result<Warping> {

    let len = grid.len();
    let scale = 1.0 / (len - 1) as f64;
    let mut gamma = vec![0.0; len];
    for w in path.windows(2) {
        let ((u0, p0), (u1, p1)) = (w[0], w[1]);
        let slope = (p1 - p0) as f64 / (u1 - u0) as f64;
        for u in u0..=u1 {
            gamma[u] = (p0 as f64 + slope * (u - u0) as f64) * scale;
        }
    }
    Warping::new(grid.clone(), gamma)
}

/// Minimal lattice-path cost `min_γ ‖q1 - (q2, γ)‖²` as computed by the DP.
pub fn dp_cost(q1: &Srvf, q2: &Srvf, config: &DpConfig) -> Result<f64> {
    lattice_dp(q1, q2, config).map(|(c, _)| c)
}

/// Aligns `q2` to `q1`: finds `γ*` so that `(q2, γ*)` is closest to `q1`.
///
/// The returned distance is measured with [`warp_srvf`] on the full grid.
/// The identity is kept whenever it does at least as well. With
/// `config.polish > 0` the winner is then refined continuously and replaced
/// only if that strictly lowers the distance.
pub fn dp_align(q1: &Srvf, q2: &Srvf, config: &DpConfig) -> Result<PairwiseAlignment> {
    let (_, path) = lattice_dp(q1, q2, config)?;
    let gamma = path_to_warping(q1.grid(), &path)?;
    let q_aligned = warp_srvf(q2, &gamma)?;
    let distance = l2_distance(q1, &q_aligned)?;
    let unwarped = l2_distance(q1, q2)?;
    let best = if unwarped <= distance {
        PairwiseAlignment { gamma: Warping::identity(q1.grid().clone()), q_aligned: q2.clone(), distance: unwarped }
    } else {
        PairwiseAlignment { gamma, q_aligned, distance }
    };
    Ok(polish_alignment(q1, q2, best, config.polish))
}

/// Continuous refinement of an existing alignment of `q2` to `q1`; a no-op
/// for `terms == 0` or when it does not help.
pub(crate) fn polish_alignment(q1: &Srvf, q2: &Srvf, start: PairwiseAlignment, terms: usize) -> PairwiseAlignment {
    if terms == 0 {
        return start;
    }
    match polish(q1, q2, &start.gamma, start.distance, terms) {
        Some((gamma, q_aligned, distance)) => PairwiseAlignment { gamma, q_aligned, distance },
        None => start,
    }
}

/// Amplitude distance `inf_γ ‖q1 - (q2, γ)‖`; with `config.symmetric` the
/// smaller of both directions.
pub fn amplitude_distance(q1: &Srvf, q2: &Srvf, config: &DpConfig) -> Result<f64> {
    let forward = dp_align(q1, q2, config)?.distance;
    if config.symmetric {
        Ok(forward.min(dp_align(q2, q1, config)?.distance))
    } else {
        Ok(forward)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::srvf::{to_srvf, warp_func, Func};
    use std::f64::consts::TAU;

    fn sine(len: usize) -> Func {
        Func::from_fn(Grid::uniform(len).unwrap(), 1, |t, o| o[0] = (TAU * t).sin()).unwrap()
    }

    #[test]
    fn coprime_steps() {
        let s = DpConfig::new(1, 7).steps();
        assert_eq!(s.len(), 35);
        assert_eq!(s[0], (1, 1));
        assert!(!s.contains(&(2, 4)));
        assert_eq!(DpConfig::new(1, 1).steps(), vec![(1, 1)]);
    }

    #[test]
    fn lattice_nodes() {
        assert_eq!(DpConfig::new(2, 3).lattice(9), vec![0, 2, 4, 6, 8]);
        let l = DpConfig::new(4, 3).lattice(11);
        assert_eq!((l[0], *l.last().unwrap(), l.len()), (0, 10, 4));
    }

    #[test]
    fn self_alignment_is_identity() {
        let q = to_srvf(&sine(101)).unwrap();
        let a = dp_align(&q, &q, &DpConfig::new(1, 5)).unwrap();
        assert!(a.distance <= 1e-8);
        assert!(a.gamma.sup_distance_to_identity() <= 0.01);
    }

    #[test]
    fn rejects_bad_input() {
        let q = to_srvf(&sine(101)).unwrap();
        let r = to_srvf(&sine(51)).unwrap();
        assert!(dp_align(&q, &r, &DpConfig::default()).is_err());
        assert!(dp_align(&q, &q, &DpConfig::new(0, 3)).is_err());
        assert!(matches!(dp_align(&q, &q, &DpConfig::new(100, 3)), Err(Error::GridTooShort { .. })));
        let nonuni = Func::scalar(Grid::new(vec![0.0, 0.1, 0.5, 1.0]).unwrap(), vec![0.0, 1.0, 2.0, 0.0]).unwrap();
        let qn = to_srvf(&nonuni).unwrap();
        assert_eq!(dp_align(&qn, &qn, &DpConfig::default()), Err(Error::NonUniformGrid));
    }

    #[test]
    fn removes_phase() {
        let f = sine(201);
        let grid = f.grid().clone();
        let c = 1.5f64;
        let gamma = Warping::from_fn(grid, |t| ((c * t).exp() - 1.0) / (c.exp() - 1.0)).unwrap();
        let q1 = to_srvf(&f).unwrap();
        let q2 = to_srvf(&warp_func(&f, &gamma).unwrap()).unwrap();
        let a = dp_align(&q1, &q2, &DpConfig::default()).unwrap();
        assert!(a.distance <= 0.05 * q1.norm(), "residual {}", a.distance);
        // q2 ∘ γ* ≈ q1 requires γ* ≈ γ⁻¹
        let truth = gamma.inverse().unwrap();
        assert!(a.gamma.sup_distance(&truth) <= 0.03, "sup {}", a.gamma.sup_distance(&truth));
        let sym = amplitude_distance(&q1, &q2, &DpConfig::default().symmetric(true)).unwrap();
        assert!(sym <= a.distance + 1e-15);
    }

    #[test]
    fn never_worse_than_unwarped() {
        let grid = Grid::uniform(61).unwrap();
        let f1 = Func::from_fn(grid.clone(), 1, |t, o| o[0] = (3.0 * t).sin() + t).unwrap();
        let f2 = Func::from_fn(grid, 1, |t, o| o[0] = (5.0 * t).cos()).unwrap();
        let (q1, q2) = (to_srvf(&f1).unwrap(), to_srvf(&f2).unwrap());
        let a = dp_align(&q1, &q2, &DpConfig::new(3, 2)).unwrap();
        assert!(a.distance <= l2_distance(&q1, &q2).unwrap() + 1e-12);
        assert_eq!(a.q_aligned, warp_srvf(&q2, &a.gamma).unwrap());
    }

    #[test]
    fn vector_valued_alignment() {
        let grid = Grid::uniform(101).unwrap();
        let f = Func::from_fn(grid.clone(), 2, |t, o| {
            o[0] = (TAU * t).sin();
            o[1] = (-40.0 * (t - 0.5) * (t - 0.5)).exp();
        })
        .unwrap();
        let gamma = Warping::from_fn(grid, |t| t * t * 0.5 + 0.5 * t).unwrap();
        let q1 = to_srvf(&f).unwrap();
        let q2 = to_srvf(&warp_func(&f, &gamma).unwrap()).unwrap();
        let a = dp_align(&q1, &q2, &DpConfig::default()).unwrap();
        assert!(a.distance < 0.05 * q1.norm());
    }
}
