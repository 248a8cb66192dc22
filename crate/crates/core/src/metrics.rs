//! Partition agreement and pointwise summary bands.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::srvf::{check_same_shape, Func, Grid};

fn choose2(n: u64) -> f64 {
    (n * n.saturating_sub(1)) as f64 / 2.0
}

/// Hubert–Arabie adjusted Rand index between two labelings of the same
/// items. Labels are arbitrary integers; only the induced partitions matter.
///
/// When the chance-corrected denominator vanishes (both partitions are all
/// singletons, or both a single block) the result is 1 for identical
/// partitions and 0 otherwise.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!("partitions of {} and {} items", a.len(), b.len())));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::TooFewObservations { n, k: 2 });
    }
    let mut table: HashMap<(usize, usize), u64> = HashMap::new();
    let mut rows: HashMap<usize, u64> = HashMap::new();
    let mut cols: HashMap<usize, u64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&c| choose2(c)).sum();
    let sum_a: f64 = rows.values().map(|&c| choose2(c)).sum();
    let sum_b: f64 = cols.values().map(|&c| choose2(c)).sum();
    let expected = sum_a * sum_b / choose2(n as u64);
    let max = 0.5 * (sum_a + sum_b);
    let denom = max - expected;
    if denom.abs() < 1e-12 {
        return Ok(if (index - max).abs() < 1e-12 { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / denom)
}

/// Cross-sectional mean with `mean ± n_sd · sd` envelopes.
#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseBand {
    pub grid: Grid,
    pub dim: usize,
    /// Row-major `T × m`, like [`Func`] values.
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl PointwiseBand {
    /// Largest `upper - lower` over grid points, per dimension.
    pub fn max_width(&self) -> Vec<f64> {
        let mut out = vec![0.0f64; self.dim];
        for (i, (u, l)) in self.upper.iter().zip(&self.lower).enumerate() {
            let d = i % self.dim;
            out[d] = out[d].max(u - l);
        }
        out
    }

    pub fn widths(&self) -> Vec<f64> {
        self.upper.iter().zip(&self.lower).map(|(u, l)| u - l).collect()
    }
}

/// Pointwise mean and `n_sd` standard-deviation band (sample SD, `1/(N-1)`).
pub fn pointwise_band(funcs: &[&Func], n_sd: f64) -> Result<PointwiseBand> {
    if funcs.len() < 2 {
        return Err(Error::TooFewObservations { n: funcs.len(), k: 2 });
    }
    let first = funcs[0];
    for f in &funcs[1..] {
        check_same_shape(first.grid(), first.dim(), f.grid(), f.dim())?;
    }
    let count = funcs.len() as f64;
    let len = first.values().len();
    // Welford updates keep the mean and variance of identical values exact.
    let mut mean = vec![0.0; len];
    let mut var = vec![0.0; len];
    for (seen, f) in funcs.iter().enumerate() {
        let seen = (seen + 1) as f64;
        for ((m, s), v) in mean.iter_mut().zip(var.iter_mut()).zip(f.values()) {
            let delta = v - *m;
            *m += delta / seen;
            *s += delta * (v - *m);
        }
    }
    let (lower, upper) = mean
        .iter()
        .zip(&var)
        .map(|(m, s)| {
            let half = n_sd * (s / (count - 1.0)).sqrt();
            (m - half, m + half)
        })
        .unzip();
    Ok(PointwiseBand { grid: first.grid().clone(), dim: first.dim(), mean, lower, upper })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Pair-counting Rand quantities by direct enumeration of all item pairs.
    fn ari_by_pairs(a: &[usize], b: &[usize]) -> f64 {
        let n = a.len();
        let (mut both, mut in_a, mut in_b, mut pairs) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..n {
            for j in i + 1..n {
                let sa = a[i] == a[j];
                let sb = b[i] == b[j];
                pairs += 1.0;
                if sa && sb {
                    both += 1.0;
                }
                if sa {
                    in_a += 1.0;
                }
                if sb {
                    in_b += 1.0;
                }
            }
        }
        let expected = in_a * in_b / pairs;
        (both - expected) / (0.5 * (in_a + in_b) - expected)
    }

    #[test]
    fn identical_and_relabeled() {
        let a = [1, 1, 2, 2, 3];
        assert_eq!(adjusted_rand_index(&a, &a).unwrap(), 1.0);
        assert_abs_diff_eq!(adjusted_rand_index(&[1, 1, 2, 2], &[2, 2, 1, 1]).unwrap(), 1.0);
    }

    #[test]
    fn known_value() {
        let a = [1, 1, 1, 2, 2, 2];
        let b = [1, 1, 2, 2, 3, 3];
        let v = adjusted_rand_index(&a, &b).unwrap();
        // contingency table [[2, 1, 0], [0, 1, 2]]: (2 - 6·3/15) / (4.5 - 6·3/15)
        assert_abs_diff_eq!(v, 8.0 / 33.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v, ari_by_pairs(&a, &b), epsilon = 1e-12);
    }

    #[test]
    fn errors() {
        assert!(adjusted_rand_index(&[1, 2], &[1]).is_err());
        assert!(adjusted_rand_index(&[1], &[1]).is_err());
    }

    #[test]
    fn degenerate_single_cluster() {
        let truth = [1, 1, 2, 2, 3, 3];
        let lumped = [1; 6];
        let v = adjusted_rand_index(&truth, &lumped).unwrap();
        assert!(v.is_finite() && v <= 0.0 + 1e-12);
        assert_eq!(adjusted_rand_index(&lumped, &lumped).unwrap(), 1.0);
        let singletons = [1, 2, 3, 4];
        assert_eq!(adjusted_rand_index(&singletons, &singletons).unwrap(), 1.0);
        assert_eq!(adjusted_rand_index(&singletons, &[1, 1, 1, 1]).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn invariant_under_relabeling(a in proptest::collection::vec(0usize..4, 2..30), shift in 1usize..10) {
            let b: Vec<usize> = a.iter().map(|x| (x * 7 + 3) % 4).collect();
            let relabeled: Vec<usize> = a.iter().map(|x| x + shift * 100).collect();
            let v1 = adjusted_rand_index(&a, &b).unwrap();
            let v2 = adjusted_rand_index(&relabeled, &b).unwrap();
            prop_assert!((v1 - v2).abs() < 1e-12);
            prop_assert!(v1 <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn band_cases() {
        let g = Grid::uniform(5).unwrap();
        let f = Func::scalar(g.clone(), vec![0.1, 0.8674232255940173, 3.3, -2.7, 1e-9]).unwrap();
        let band = pointwise_band(&[&f, &f, &f, &f, &f], 2.0).unwrap();
        assert!(band.widths().iter().all(|&w| w == 0.0));

        let zero = Func::scalar(g.clone(), vec![0.0; 5]).unwrap();
        let two = Func::scalar(g, vec![2.0; 5]).unwrap();
        let band = pointwise_band(&[&zero, &two], 2.0).unwrap();
        let sd = 2f64.sqrt();
        assert_abs_diff_eq!(band.mean[0], 1.0);
        assert_abs_diff_eq!(band.lower[2], 1.0 - 2.0 * sd, epsilon = 1e-12);
        assert_abs_diff_eq!(band.upper[4], 1.0 + 2.0 * sd, epsilon = 1e-12);
        assert!(pointwise_band(&[&zero], 2.0).is_err());
    }

    #[test]
    fn band_shifts_with_constant() {
        let g = Grid::uniform(11).unwrap();
        let fs: Vec<Func> = (0..4)
            .map(|k| Func::from_fn(g.clone(), 1, |t, o| o[0] = (t * (k + 1) as f64).sin()).unwrap())
            .collect();
        let shifted: Vec<Func> = fs
            .iter()
            .map(|f| Func::scalar(g.clone(), f.values().iter().map(|v| v + 3.0).collect()).unwrap())
            .collect();
        let b1 = pointwise_band(&fs.iter().collect::<Vec<_>>(), 2.0).unwrap();
        let b2 = pointwise_band(&shifted.iter().collect::<Vec<_>>(), 2.0).unwrap();
        for (x, y) in b1.lower.iter().zip(&b2.lower) {
            assert_abs_diff_eq!(x + 3.0, *y, epsilon = 1e-12);
        }
    }
}
