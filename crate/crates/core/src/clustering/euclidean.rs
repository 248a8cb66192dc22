use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::assign::argmin;
use crate::error::{Error, Result};

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd's algorithm on the rows of `data`, started from `k` distinct random
/// rows, best of `n_restarts` by within-cluster sum of squares. Labels are
/// 0-based.
pub fn kmeans_euclidean(data: &[Vec<f64>], k: usize, n_restarts: usize, seed: u64) -> Result<Vec<usize>> {
    let n = data.len();
    if k == 0 {
        return Err(Error::Config("k must be ≥ 1".into()));
    }
    if n < k {
        return Err(Error::TooFewObservations { n, k });
    }
    let width = data[0].len();
    if data.iter().any(|r| r.len() != width) {
        return Err(Error::ShapeMismatch("ragged data matrix".into()));
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    for restart in 0..n_restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(restart as u64);
        let (wcss, labels) = lloyd(data, k, &mut rng);
        if best.as_ref().is_none_or(|(b, _)| wcss < *b) {
            best = Some((wcss, labels));
        }
    }
    Ok(best.map(|(_, l)| l).unwrap())
}

const MAX_LLOYD_ITER: usize = 300;

fn lloyd(data: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> (f64, Vec<usize>) {
    let n = data.len();
    let width = data[0].len();
    let mut centers: Vec<Vec<f64>> = sample(rng, n, k).into_iter().map(|i| data[i].clone()).collect();
    let mut labels = vec![usize::MAX; n];
    for _ in 0..MAX_LLOYD_ITER {
        let mut changed = false;
        for (i, row) in data.iter().enumerate() {
            let d: Vec<f64> = centers.iter().map(|c| sq_dist(row, c)).collect();
            let l = argmin(&d);
            if l != labels[i] {
                labels[i] = l;
                changed = true;
            }
        }
        let mut sums = vec![vec![0.0; width]; k];
        let mut counts = vec![0usize; k];
        for (row, &l) in data.iter().zip(&labels) {
            counts[l] += 1;
            sums[l].iter_mut().zip(row).for_each(|(s, v)| *s += v);
        }
        for c in 0..k {
            if counts[c] == 0 {
                // re-seed an empty cluster at the point farthest from its center
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = sq_dist(&data[a], &centers[labels[a]]);
                        let db = sq_dist(&data[b], &centers[labels[b]]);
                        da.total_cmp(&db).then(b.cmp(&a))
                    })
                    .unwrap();
                centers[c] = data[far].clone();
                labels[far] = c;
                changed = true;
            } else {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        if !changed {
            break;
        }
    }
    let wcss = data.iter().zip(&labels).map(|(r, &l)| sq_dist(r, &centers[l])).sum();
    (wcss, labels)
}
