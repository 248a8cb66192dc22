//! Boundary-pinned, strictly increasing reparameterizations of `[0, 1]`.

use crate::error::{Error, Result};
use crate::srvf::{derivative, Grid};

/// Endpoint values within this distance of 0 / 1 are snapped exactly.
const ENDPOINT_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Warping {
    grid: Grid,
    gamma: Vec<f64>,
}

impl Warping {
    pub fn new(grid: Grid, mut gamma: Vec<f64>) -> Result<Self> {
        let n = grid.len();
        if gamma.len() != n {
            return Err(Error::ShapeMismatch(format!("warping has {} values for {} grid points", gamma.len(), n)));
        }
        if gamma[0].abs() > ENDPOINT_SNAP || (gamma[n - 1] - 1.0).abs() > ENDPOINT_SNAP {
            return Err(Error::InvalidWarping(format!(
                "endpoints must be 0 and 1, got {} and {}",
                gamma[0],
                gamma[n - 1]
            )));
        }
        gamma[0] = 0.0;
        gamma[n - 1] = 1.0;
        if let Some(i) = gamma.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidWarping(format!("not strictly increasing at index {i}")));
        }
        Ok(Self { grid, gamma })
    }

    pub fn identity(grid: Grid) -> Self {
        let gamma = grid.points().to_vec();
        Self { grid, gamma }
    }

    pub fn from_fn(grid: Grid, g: impl Fn(f64) -> f64) -> Result<Self> {
        let gamma = grid.points().iter().map(|&t| g(t)).collect();
        Self::new(grid, gamma)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.gamma
    }

    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    /// `γ(x)` by linear interpolation.
    pub fn eval(&self, x: f64) -> f64 {
        let (i, frac) = self.grid.locate(x);
        (1.0 - frac) * self.gamma[i] + frac * self.gamma[i + 1]
    }

    /// `γ'` at the grid points (central differences, one-sided at the ends).
    pub fn derivative(&self) -> Vec<f64> {
        derivative(&self.grid, 1, &self.gamma)
    }

    /// `self ∘ inner`, i.e. `t ↦ self(inner(t))`.
    pub fn compose(&self, inner: &Warping) -> Result<Warping> {
        if self.grid != inner.grid {
            return Err(Error::ShapeMismatch("warpings live on different grids".into()));
        }
        let gamma = inner.gamma.iter().map(|&x| self.eval(x)).collect();
        Warping::new(self.grid.clone(), gamma)
    }

    /// Numerical inverse from the `(γ(t), t)` pairs.
    pub fn inverse(&self) -> Result<Warping> {
        let t = self.grid.points();
        let g = &self.gamma;
        let mut out = Vec::with_capacity(t.len());
        let mut j = 0;
        for &x in t {
            while j + 2 < g.len() && g[j + 1] <= x {
                j += 1;
            }
            let frac = ((x - g[j]) / (g[j + 1] - g[j])).clamp(0.0, 1.0);
            out.push(t[j] + frac * (t[j + 1] - t[j]));
        }
        Warping::new(self.grid.clone(), out)
    }

    /// Re-evaluates on another grid (used to lift coarse lattice paths).
    pub fn resample(&self, grid: &Grid) -> Result<Warping> {
        let gamma = grid.points().iter().map(|&x| self.eval(x)).collect();
        Warping::new(grid.clone(), gamma)
    }

    pub fn sup_distance(&self, other: &Warping) -> f64 {
        self.gamma.iter().zip(&other.gamma).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn sup_distance_to_identity(&self) -> f64 {
        self.gamma.iter().zip(self.grid.points()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Square-root slope `ψ = sqrt(γ')` on each grid interval. Satisfies
    /// `Σ ψ_i² Δt_i = 1` exactly, placing `γ` on the unit Hilbert sphere.
    pub fn sqrt_slopes(&self) -> Vec<f64> {
        let t = self.grid.points();
        self.gamma
            .windows(2)
            .zip(t.windows(2))
            .map(|(g, t)| ((g[1] - g[0]) / (t[1] - t[0])).sqrt())
            .collect()
    }

    /// Inverse of [`Warping::sqrt_slopes`] after normalizing `ψ` to unit norm.
    pub fn from_sqrt_slopes(grid: Grid, psi: &[f64]) -> Result<Warping> {
        let t = grid.points();
        if psi.len() + 1 != t.len() {
            return Err(Error::ShapeMismatch("ψ needs one value per grid interval".into()));
        }
        let norm2: f64 = psi.iter().zip(t.windows(2)).map(|(p, w)| p * p * (w[1] - w[0])).sum();
        if !(norm2 > 0.0) || !norm2.is_finite() {
            return Err(Error::Numerical("mean square-root slope has zero norm".into()));
        }
        let mut gamma = Vec::with_capacity(t.len());
        gamma.push(0.0);
        let mut acc = 0.0;
        for (p, w) in psi.iter().zip(t.windows(2)) {
            acc += p * p * (w[1] - w[0]) / norm2;
            gamma.push(acc);
        }
        *gamma.last_mut().unwrap() = 1.0;
        Warping::new(grid, gamma)
    }

    /// Extrinsic mean on the Hilbert sphere: average `ψ_i`, renormalize,
    /// integrate `ψ̄²`.
    pub fn mean<'a>(warpings: impl IntoIterator<Item = &'a Warping>) -> Result<Warping> {
        let mut iter = warpings.into_iter();
        let first = iter.next().ok_or(Error::Empty("mean of zero warpings"))?;
        let mut acc = first.sqrt_slopes();
        for w in iter {
            if w.grid != first.grid {
                return Err(Error::ShapeMismatch("warpings live on different grids".into()));
            }
            for (a, p) in acc.iter_mut().zip(w.sqrt_slopes()) {
                *a += p;
            }
        }
        Warping::from_sqrt_slopes(first.grid.clone(), &acc)
    }
}
