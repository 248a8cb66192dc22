//! Continuous refinement of a lattice warping.
//!
//! Lattice paths only take slopes `b / a` with small integers, so
//! `sqrt(γ')` of a DP warping is a staircase and the aligned SRVFs carry a
//! small, spatially spread residual. Here the warping is written as
//! `γ(t) = ∫₀ᵗ e^{s} / ∫₀¹ e^{s}` with `s(t) = Σₖ cₖ cos(πkt)`, initialized
//! from the log-slopes of the lattice warping, and the coefficients are
//! fitted by Levenberg-Marquardt to the discretized `‖q1 - (q2, γ)‖²`.

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::{DMatrix, DVector, Dyn, Owned};

use crate::srvf::{derivative, l2_distance, warp_srvf, Grid, Srvf};
use crate::warping::Warping;

/// Log-slopes are clamped here when projecting a lattice warping.
const MIN_SLOPE: f64 = 1e-4;
/// Larger exponents are rejected as a numerically broken warping.
const MAX_LOG_SLOPE: f64 = 30.0;

struct WarpFit<'a> {
    grid: &'a Grid,
    q1: &'a Srvf,
    q2: &'a Srvf,
    /// Row-major `len × terms`, `cos(πkt_j)`.
    basis: Vec<f64>,
    root_w: Vec<f64>,
    terms: usize,
    coef: DVector<f64>,
}

/// `γ`, `∂γ/∂c` (row-major `len × terms`) for the current coefficients.
struct Evaluated {
    gamma: Vec<f64>,
    jac: Vec<f64>,
}

impl<'a> WarpFit<'a> {
    fn new(q1: &'a Srvf, q2: &'a Srvf, coef: DVector<f64>) -> Self {
        let grid = q1.grid();
        let terms = coef.len();
        let basis = grid
            .points()
            .iter()
            .flat_map(|&x| (1..=terms).map(move |k| (std::f64::consts::PI * k as f64 * x).cos()))
            .collect();
        let root_w = grid.trapezoid_weights().into_iter().map(f64::sqrt).collect();
        Self { grid, q1, q2, basis, root_w, terms, coef }
    }

    fn evaluate(&self, with_jacobian: bool) -> Option<Evaluated> {
        let t = self.grid.points();
        let (n, m) = (t.len(), self.terms);
        let mut e = Vec::with_capacity(n);
        for j in 0..n {
            let s: f64 = (0..m).map(|k| self.coef[k] * self.basis[j * m + k]).sum();
            if !(s.abs() <= MAX_LOG_SLOPE) {
                return None;
            }
            e.push(s.exp());
        }
        let mut cum = vec![0.0; n];
        let mut dcum = vec![0.0; if with_jacobian { n * m } else { 0 }];
        for j in 1..n {
            let h = 0.5 * (t[j] - t[j - 1]);
            cum[j] = cum[j - 1] + h * (e[j - 1] + e[j]);
            if with_jacobian {
                for k in 0..m {
                    dcum[j * m + k] = dcum[(j - 1) * m + k]
                        + h * (e[j - 1] * self.basis[(j - 1) * m + k] + e[j] * self.basis[j * m + k]);
                }
            }
        }
        let z = cum[n - 1];
        let gamma: Vec<f64> = cum.iter().map(|c| c / z).collect();
        let mut jac = Vec::new();
        if with_jacobian {
            jac = vec![0.0; n * m];
            for j in 0..n {
                for k in 0..m {
                    jac[j * m + k] = (dcum[j * m + k] - gamma[j] * dcum[(n - 1) * m + k]) / z;
                }
            }
        }
        Some(Evaluated { gamma, jac })
    }
}

impl LeastSquaresProblem<f64, Dyn, Dyn> for WarpFit<'_> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, Dyn>;
    type ParameterStorage = Owned<f64, Dyn>;

    fn set_params(&mut self, x: &DVector<f64>) {
        self.coef.copy_from(x);
    }

    fn params(&self) -> DVector<f64> {
        self.coef.clone()
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        let ev = self.evaluate(false)?;
        let dim = self.q1.dim();
        let slope = derivative(self.grid, 1, &ev.gamma);
        let mut r = DVector::zeros(ev.gamma.len() * dim);
        let mut row = vec![0.0; dim];
        for (j, (&g, &ds)) in ev.gamma.iter().zip(&slope).enumerate() {
            self.q2.eval_into(g, &mut row);
            let root = ds.max(0.0).sqrt();
            let target = self.q1.row(j);
            for d in 0..dim {
                r[j * dim + d] = self.root_w[j] * (target[d] - root * row[d]);
            }
        }
        Some(r)
    }

    fn jacobian(&self) -> Option<DMatrix<f64>> {
        let ev = self.evaluate(true)?;
        let (n, m, dim) = (ev.gamma.len(), self.terms, self.q1.dim());
        let t = self.grid.points();
        let slope = derivative(self.grid, 1, &ev.gamma);
        let dslope = derivative(self.grid, m, &ev.jac);
        let mut jac = DMatrix::zeros(n * dim, m);
        for j in 0..n {
            let (i, frac) = self.grid.locate(ev.gamma[j]);
            let (lo, hi) = (self.q2.row(i), self.q2.row(i + 1));
            let h = t[i + 1] - t[i];
            let root = slope[j].max(f64::MIN_POSITIVE).sqrt();
            for d in 0..dim {
                let value = (1.0 - frac) * lo[d] + frac * hi[d];
                let dq = (hi[d] - lo[d]) / h;
                for k in 0..m {
                    let dg = ev.jac[j * m + k];
                    let ds = dslope[j * m + k];
                    jac[(j * dim + d, k)] = -self.root_w[j] * (dq * dg * root + value * ds / (2.0 * root));
                }
            }
        }
        Some(jac)
    }
}

/// Coefficients of `log γ'` of `gamma` in the cosine basis (constant dropped).
fn project(gamma: &Warping, terms: usize) -> DVector<f64> {
    let t = gamma.grid().points();
    let g = gamma.values();
    let mut coef = DVector::zeros(terms);
    for i in 0..t.len() - 1 {
        let h = t[i + 1] - t[i];
        let log_slope = ((g[i + 1] - g[i]) / h).max(MIN_SLOPE).ln();
        let mid = 0.5 * (t[i] + t[i + 1]);
        for k in 0..terms {
            coef[k] += 2.0 * h * log_slope * (std::f64::consts::PI * (k + 1) as f64 * mid).cos();
        }
    }
    coef
}

/// Refines `start` as an alignment of `q2` to `q1` using `terms` cosine
/// modes. Returns `None` unless the refined warping is valid and strictly
/// closer than `start`.
pub(crate) fn polish(q1: &Srvf, q2: &Srvf, start: &Warping, start_distance: f64, terms: usize) -> Option<(Warping, Srvf, f64)> {
    let problem = WarpFit::new(q1, q2, project(start, terms));
    let (fitted, _) = LevenbergMarquardt::new().minimize(problem);
    let ev = fitted.evaluate(false)?;
    let gamma = Warping::new(q1.grid().clone(), ev.gamma).ok()?;
    let aligned = warp_srvf(q2, &gamma).ok()?;
    let distance = l2_distance(q1, &aligned).ok()?;
    (distance < start_distance).then_some((gamma, aligned, distance))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::{dp_align, DpConfig};
    use crate::srvf::{to_srvf, warp_func, Func};
    use std::f64::consts::TAU;

    fn bump_srvf(grid: &Grid, alpha: f64) -> Srvf {
        let f = Func::from_fn(grid.clone(), 1, |t, o| o[0] = (TAU * t).sin() + 0.5 * (-(t - 0.3f64).powi(2) * 40.0).exp())
            .unwrap();
        if alpha == 0.0 {
            return to_srvf(&f).unwrap();
        }
        let g = Warping::from_fn(grid.clone(), |t| ((alpha * t).exp() - 1.0) / (alpha.exp() - 1.0)).unwrap();
        to_srvf(&warp_func(&f, &g).unwrap()).unwrap()
    }

    fn fit<'a>(q1: &'a Srvf, q2: &'a Srvf, coef: &[f64]) -> WarpFit<'a> {
        WarpFit::new(q1, q2, DVector::from_column_slice(coef))
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let grid = Grid::uniform(101).unwrap();
        let (q1, q2) = (bump_srvf(&grid, 0.0), bump_srvf(&grid, 1.3));
        let coef = [0.3, -0.2, 0.1, 0.05];
        let mut problem = fit(&q1, &q2, &coef);
        let jac = problem.jacobian().unwrap();
        let h = 1e-6;
        for k in 0..coef.len() {
            let mut plus = coef;
            plus[k] += h;
            problem.set_params(&DVector::from_column_slice(&plus));
            let rp = problem.residuals().unwrap();
            let mut minus = coef;
            minus[k] -= h;
            problem.set_params(&DVector::from_column_slice(&minus));
            let rm = problem.residuals().unwrap();
            let numeric = (rp - rm) / (2.0 * h);
            let err = (&numeric - jac.column(k)).amax();
            assert!(err < 1e-3 * numeric.amax().max(1.0), "column {k}: {err}");
        }
    }

    #[test]
    fn zero_coefficients_give_the_identity() {
        let grid = Grid::uniform(51).unwrap();
        let q = bump_srvf(&grid, 0.0);
        let ev = fit(&q, &q, &[0.0; 3]).evaluate(false).unwrap();
        for (g, t) in ev.gamma.iter().zip(grid.points()) {
            assert!((g - t).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_recovers_smooth_log_slope() {
        let grid = Grid::uniform(401).unwrap();
        let gamma = Warping::from_fn(grid.clone(), |t| 0.5 * t * t + 0.5 * t).unwrap();
        let coef = project(&gamma, 6);
        let q = bump_srvf(&grid, 0.0);
        let ev = fit(&q, &q, coef.as_slice()).evaluate(false).unwrap();
        let max_err = ev.gamma.iter().zip(gamma.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(max_err < 5e-3, "{max_err}");
    }

    #[test]
    fn refinement_beats_the_lattice() {
        let grid = Grid::uniform(201).unwrap();
        let (q1, q2) = (bump_srvf(&grid, 0.0), bump_srvf(&grid, 1.5));
        let lattice = dp_align(&q1, &q2, &DpConfig::new(1, 7)).unwrap();
        let refined = dp_align(&q1, &q2, &DpConfig::new(1, 7).polished(24)).unwrap();
        assert!(refined.distance < 0.5 * lattice.distance, "{} vs {}", refined.distance, lattice.distance);
        assert_eq!(refined.q_aligned, warp_srvf(&q2, &refined.gamma).unwrap());
    }

    #[test]
    fn never_worse_than_the_start() {
        let grid = Grid::uniform(101).unwrap();
        for alpha in [-2.0, -0.5, 0.7, 2.5] {
            let (q1, q2) = (bump_srvf(&grid, 0.0), bump_srvf(&grid, alpha));
            let cfg = DpConfig::new(2, 5);
            let lattice = dp_align(&q1, &q2, &cfg).unwrap();
            let refined = dp_align(&q1, &q2, &cfg.polished(8)).unwrap();
            assert!(refined.distance <= lattice.distance);
        }
    }
}
