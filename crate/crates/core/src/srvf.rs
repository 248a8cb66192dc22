//! Discretized functions, their square-root velocity representation, and the
//! basic operations (transform, inverse, warping actions, L² distance) that
//! every other module is built on.
//!
//! Values are stored row-major: row `i` holds the `m` coordinates of the
//! function at grid point `t_i`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::warping::Warping;

/// Minimum number of grid points for a usable discretization.
pub const MIN_GRID_LEN: usize = 3;

/// `|f'|` below this is treated as zero velocity when forming the SRVF.
pub const DERIVATIVE_FLOOR: f64 = 1e-12;

const UNIFORM_RTOL: f64 = 1e-9;

/// Ordered evaluation points on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct Grid {
    points: Arc<[f64]>,
    uniform: bool,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.points, &other.points) || self.points[..] == other.points[..]
    }
}

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < MIN_GRID_LEN {
            return Err(Error::GridTooShort { min: MIN_GRID_LEN, got: points.len() });
        }
        let first = points[0];
        let last = points[points.len() - 1];
        if first != 0.0 || last != 1.0 || points.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid);
        }
        let h = 1.0 / (points.len() - 1) as f64;
        let uniform = points
            .iter()
            .enumerate()
            .all(|(i, &t)| (t - i as f64 * h).abs() <= UNIFORM_RTOL * h);
        Ok(Self { points: points.into(), uniform })
    }

    /// `len` equally spaced points with `t_0 = 0` and `t_{len-1} = 1`.
    pub fn uniform(len: usize) -> Result<Self> {
        if len < MIN_GRID_LEN {
            return Err(Error::GridTooShort { min: MIN_GRID_LEN, got: len });
        }
        let h = 1.0 / (len - 1) as f64;
        let mut points: Vec<f64> = (0..len).map(|i| i as f64 * h).collect();
        points[len - 1] = 1.0;
        Ok(Self { points: points.into(), uniform: true })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    /// `Δt` for uniform grids.
    pub fn spacing(&self) -> Option<f64> {
        self.uniform.then(|| 1.0 / (self.len() - 1) as f64)
    }

    /// Trapezoidal quadrature weights; they sum to one.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let t = &self.points;
        let n = t.len();
        let mut w = vec![0.0; n];
        for i in 0..n - 1 {
            let h = 0.5 * (t[i + 1] - t[i]);
            w[i] += h;
            w[i + 1] += h;
        }
        w
    }

    /// Locates `x` for linear interpolation: returns `(i, frac)` with
    /// `x = t_i + frac (t_{i+1} - t_i)` and `i ≤ len - 2`.
    pub(crate) fn locate(&self, x: f64) -> (usize, f64) {
        let t = &self.points;
        let n = t.len();
        let x = x.clamp(0.0, 1.0);
        let i = if self.uniform {
            let mut i = ((x * (n - 1) as f64).floor() as usize).min(n - 2);
            if i + 2 < n && t[i + 1] <= x {
                i += 1;
            } else if i > 0 && x < t[i] {
                i -= 1;
            }
            i
        } else {
            match t.binary_search_by(|p| p.partial_cmp(&x).unwrap()) {
                Ok(i) => i.min(n - 2),
                Err(i) => i.saturating_sub(1).min(n - 2),
            }
        };
        let frac = ((x - t[i]) / (t[i + 1] - t[i])).clamp(0.0, 1.0);
        (i, frac)
    }
}

macro_rules! sampled_common {
    ($name:ident) => {
        impl $name {
            /// Builds from row-major `grid.len() × dim` values.
            pub fn new(grid: Grid, dim: usize, values: Vec<f64>) -> Result<Self> {
                if dim == 0 {
                    return Err(Error::ShapeMismatch("codomain dimension must be ≥ 1".into()));
                }
                if values.len() != grid.len() * dim {
                    return Err(Error::ShapeMismatch(format!(
                        "expected {} values ({} points × {} dims), got {}",
                        grid.len() * dim,
                        grid.len(),
                        dim,
                        values.len()
                    )));
                }
                if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
                    return Err(Error::NonFinite { row: pos / dim });
                }
                Ok(Self { grid, dim, values })
            }

            /// Scalar-valued constructor.
            pub fn scalar(grid: Grid, values: Vec<f64>) -> Result<Self> {
                Self::new(grid, 1, values)
            }

            /// Evaluates `g` at every grid point; `g` writes the `dim` coordinates.
            pub fn from_fn(grid: Grid, dim: usize, mut g: impl FnMut(f64, &mut [f64])) -> Result<Self> {
                let mut values = vec![0.0; grid.len() * dim];
                for (row, &t) in values.chunks_mut(dim.max(1)).zip(grid.points()) {
                    g(t, row);
                }
                Self::new(grid, dim, values)
            }

            pub fn grid(&self) -> &Grid {
                &self.grid
            }

            pub fn dim(&self) -> usize {
                self.dim
            }

            pub fn len(&self) -> usize {
                self.grid.len()
            }

            pub fn is_empty(&self) -> bool {
                self.grid.is_empty()
            }

            pub fn values(&self) -> &[f64] {
                &self.values
            }

            pub fn into_values(self) -> Vec<f64> {
                self.values
            }

            pub fn row(&self, i: usize) -> &[f64] {
                &self.values[i * self.dim..(i + 1) * self.dim]
            }

            /// Values of coordinate `d` along the grid.
            pub fn component(&self, d: usize) -> Vec<f64> {
                self.values.iter().skip(d).step_by(self.dim).copied().collect()
            }

            /// Linear interpolation at `x ∈ [0, 1]`, written into `out`.
            pub fn eval_into(&self, x: f64, out: &mut [f64]) {
                let (i, frac) = self.grid.locate(x);
                let lo = self.row(i);
                let hi = self.row(i + 1);
                for d in 0..self.dim {
                    out[d] = (1.0 - frac) * lo[d] + frac * hi[d];
                }
            }

            /// Squared L² norm by trapezoidal quadrature.
            pub fn norm_squared(&self) -> f64 {
                self.grid
                    .trapezoid_weights()
                    .iter()
                    .zip(self.values.chunks(self.dim))
                    .map(|(w, row)| w * row.iter().map(|v| v * v).sum::<f64>())
                    .sum()
            }

            pub fn norm(&self) -> f64 {
                self.norm_squared().sqrt()
            }

            /// Cross-sectional (pointwise) mean. All inputs must share grid and dim.
            pub fn mean_of<'a>(items: impl IntoIterator<Item = &'a $name>) -> Result<Self> {
                let mut iter = items.into_iter();
                let first = iter.next().ok_or(Error::Empty("mean of zero functions"))?;
                let mut acc = first.values.clone();
                let mut count = 1usize;
                for item in iter {
                    check_same_shape(&first.grid, first.dim, &item.grid, item.dim)?;
                    for (a, v) in acc.iter_mut().zip(&item.values) {
                        *a += v;
                    }
                    count += 1;
                }
                let scale = 1.0 / count as f64;
                acc.iter_mut().for_each(|a| *a *= scale);
                Self::new(first.grid.clone(), first.dim, acc)
            }
        }
    };
}

/// A discretized function `f: [0,1] → R^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Func {
    grid: Grid,
    dim: usize,
    values: Vec<f64>,
}

/// Discretized square-root velocity function `q = f' / sqrt(|f'|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Srvf {
    grid: Grid,
    dim: usize,
    values: Vec<f64>,
}

sampled_common!(Func);
sampled_common!(Srvf);

pub(crate) fn check_same_shape(g1: &Grid, d1: usize, g2: &Grid, d2: usize) -> Result<()> {
    if d1 != d2 {
        return Err(Error::ShapeMismatch(format!("dimension {d1} vs {d2}")));
    }
    if g1 != g2 {
        return Err(Error::ShapeMismatch("functions live on different grids".into()));
    }
    Ok(())
}

impl Func {
    /// Re-evaluates on another grid by linear interpolation.
    pub fn resample(&self, grid: &Grid) -> Func {
        let mut values = vec![0.0; grid.len() * self.dim];
        for (row, &t) in values.chunks_mut(self.dim).zip(grid.points()) {
            self.eval_into(t, row);
        }
        Func { grid: grid.clone(), dim: self.dim, values }
    }
}

/// Central-difference derivative (one-sided at the endpoints), row-major.
pub(crate) fn derivative(grid: &Grid, dim: usize, values: &[f64]) -> Vec<f64> {
    let t = grid.points();
    let n = t.len();
    let mut out = vec![0.0; values.len()];
    for i in 0..n {
        let (lo, hi) = if i == 0 {
            (0, 1)
        } else if i == n - 1 {
            (n - 2, n - 1)
        } else {
            (i - 1, i + 1)
        };
        let h = t[hi] - t[lo];
        for d in 0..dim {
            out[i * dim + d] = (values[hi * dim + d] - values[lo * dim + d]) / h;
        }
    }
    out
}

/// SRVF of `f`; rows where `|f'|` falls below [`DERIVATIVE_FLOOR`] become zero.
pub fn to_srvf(f: &Func) -> Result<Srvf> {
    if f.len() < MIN_GRID_LEN {
        return Err(Error::GridTooShort { min: MIN_GRID_LEN, got: f.len() });
    }
    let dim = f.dim;
    let mut q = derivative(&f.grid, dim, &f.values);
    for row in q.chunks_mut(dim) {
        let speed = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if speed < DERIVATIVE_FLOOR {
            row.iter_mut().for_each(|v| *v = 0.0);
        } else {
            let s = speed.sqrt();
            row.iter_mut().for_each(|v| *v /= s);
        }
    }
    Ok(Srvf { grid: f.grid.clone(), dim, values: q })
}

/// Inverse of [`to_srvf`]: `f(t) = f0 + ∫_0^t q|q| ds` with cumulative trapezoid.
pub fn from_srvf(q: &Srvf, f0: &[f64]) -> Result<Func> {
    let dim = q.dim;
    if f0.len() != dim {
        return Err(Error::ShapeMismatch(format!("initial value has {} coords, expected {dim}", f0.len())));
    }
    let t = q.grid.points();
    let velocity: Vec<f64> = q
        .values
        .chunks(dim)
        .flat_map(|row| {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            row.iter().map(move |v| v * norm)
        })
        .collect();
    let mut values = vec![0.0; q.values.len()];
    values[..dim].copy_from_slice(f0);
    for i in 1..t.len() {
        let h = 0.5 * (t[i] - t[i - 1]);
        for d in 0..dim {
            values[i * dim + d] =
                values[(i - 1) * dim + d] + h * (velocity[(i - 1) * dim + d] + velocity[i * dim + d]);
        }
    }
    Func::new(q.grid.clone(), dim, values)
}

/// `f ∘ γ` by piecewise-linear interpolation of `f`.
pub fn warp_func(f: &Func, gamma: &Warping) -> Result<Func> {
    if f.grid != *gamma.grid() {
        return Err(Error::ShapeMismatch("function and warping grids differ".into()));
    }
    let dim = f.dim;
    let mut values = vec![0.0; f.values.len()];
    for (row, &g) in values.chunks_mut(dim).zip(gamma.values()) {
        f.eval_into(g, row);
    }
    Ok(Func { grid: f.grid.clone(), dim, values })
}

/// The SRVF group action `(q ∘ γ) sqrt(γ')`.
pub fn warp_srvf(q: &Srvf, gamma: &Warping) -> Result<Srvf> {
    if q.grid != *gamma.grid() {
        return Err(Error::ShapeMismatch("SRVF and warping grids differ".into()));
    }
    let dim = q.dim;
    let slope = gamma.derivative();
    let mut values = vec![0.0; q.values.len()];
    for ((row, &g), &ds) in values.chunks_mut(dim).zip(gamma.values()).zip(&slope) {
        q.eval_into(g, row);
        let s = ds.max(0.0).sqrt();
        row.iter_mut().for_each(|v| *v *= s);
    }
    Ok(Srvf { grid: q.grid.clone(), dim, values })
}

/// L² distance by trapezoidal quadrature.
pub fn l2_distance(q1: &Srvf, q2: &Srvf) -> Result<f64> {
    check_same_shape(&q1.grid, q1.dim, &q2.grid, q2.dim)?;
    let dim = q1.dim;
    let w = q1.grid.trapezoid_weights();
    let sum: f64 = w
        .iter()
        .zip(q1.values.chunks(dim).zip(q2.values.chunks(dim)))
        .map(|(w, (a, b))| w * a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
        .sum();
    Ok(sum.sqrt())
}

/// A sample of functions sharing one grid and codomain dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionSample {
    funcs: Vec<Func>,
}

impl FunctionSample {
    pub fn new(funcs: Vec<Func>) -> Result<Self> {
        let first = funcs.first().ok_or(Error::Empty("function sample"))?;
        for f in &funcs[1..] {
            check_same_shape(&first.grid, first.dim, &f.grid, f.dim)?;
        }
        Ok(Self { funcs })
    }

    pub fn funcs(&self) -> &[Func] {
        &self.funcs
    }

    pub fn into_funcs(self) -> Vec<Func> {
        self.funcs
    }

    pub fn len(&self) -> usize {
        self.funcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.funcs.is_empty()
    }

    pub fn grid(&self) -> &Grid {
        &self.funcs[0].grid
    }

    pub fn dim(&self) -> usize {
        self.funcs[0].dim
    }

    /// Resamples every function onto a uniform grid of `len` points.
    pub fn to_uniform(&self, len: usize) -> Result<Self> {
        let grid = Grid::uniform(len)?;
        if *self.grid() == grid {
            return Ok(self.clone());
        }
        Ok(Self { funcs: self.funcs.iter().map(|f| f.resample(&grid)).collect() })
    }

    pub fn srvfs(&self) -> Result<Vec<Srvf>> {
        self.funcs.iter().map(to_srvf).collect()
    }

    /// `N × (T·m)` matrix rows, each function flattened row-major.
    pub fn flattened(&self) -> Vec<Vec<f64>> {
        self.funcs.iter().map(|f| f.values.clone()).collect()
    }
}
