//! Independent reference implementations shared by the integration tests.

#![allow(dead_code)]

use elastic_kmeans::{to_srvf, Func, Grid, Srvf};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

/// Cost of mapping rows `u0..=u1` of `q1` linearly onto `p0..=p1` of `q2`,
/// written from the definition: trapezoid over the rows, `q2` interpolated
/// at the real-valued position and scaled by the square-root slope.
pub fn oracle_segment(q1: &[f64], q2: &[f64], h: f64, (u0, p0): (usize, usize), (u1, p1): (usize, usize)) -> f64 {
    let slope = (p1 - p0) as f64 / (u1 - u0) as f64;
    (u0..=u1)
        .map(|u| {
            let x = p0 as f64 + slope * (u - u0) as f64;
            let lo = x.floor() as usize;
            let v = if lo + 1 < q2.len() { q2[lo] + (x - lo as f64) * (q2[lo + 1] - q2[lo]) } else { q2[lo] };
            let e = q1[u] - slope.sqrt() * v;
            let w = if u == u0 || u == u1 { 0.5 } else { 1.0 };
            w * e * e * h
        })
        .sum()
}

/// Enumerates every monotone path with steps in `{1..=max}²` by depth-first
/// search and returns the cheapest total cost.
pub fn brute_force_lattice(q1: &[f64], q2: &[f64], max: usize) -> f64 {
    fn go(q1: &[f64], q2: &[f64], h: f64, max: usize, at: (usize, usize), acc: f64, best: &mut f64) {
        let end = q1.len() - 1;
        if at == (end, end) {
            *best = best.min(acc);
            return;
        }
        for a in 1..=max {
            for b in 1..=max {
                let next = (at.0 + a, at.1 + b);
                if next.0 <= end && next.1 <= end {
                    go(q1, q2, h, max, next, acc + oracle_segment(q1, q2, h, at, next), best);
                }
            }
        }
    }
    let mut best = f64::INFINITY;
    go(q1, q2, 1.0 / (q1.len() - 1) as f64, max, (0, 0), 0.0, &mut best);
    best
}

pub fn random_srvf(len: usize, rng: &mut ChaCha8Rng) -> Srvf {
    let c: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
    let f = Func::from_fn(Grid::uniform(len).unwrap(), 1, |t, o| {
        o[0] = c[0] * (TAU * t).sin() + c[1] * (TAU * t * 1.5).cos() + c[2] * t + c[3] * t * t
    })
    .unwrap();
    to_srvf(&f).unwrap()
}

/// Adjusted Rand index from explicit pair counting; the degenerate case
/// follows the library convention (1 for identical partitions, else 0).
pub fn ari_by_pairs(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let (mut both, mut in_a, mut in_b, mut pairs) = (0.0, 0.0, 0.0, 0.0);
    let mut identical = true;
    for i in 0..n {
        for j in i + 1..n {
            let (sa, sb) = (a[i] == a[j], b[i] == b[j]);
            pairs += 1.0;
            identical &= sa == sb;
            both += f64::from(u8::from(sa && sb));
            in_a += f64::from(u8::from(sa));
            in_b += f64::from(u8::from(sb));
        }
    }
    let expected = in_a * in_b / pairs;
    let denom = 0.5 * (in_a + in_b) - expected;
    if denom.abs() < 1e-12 {
        return if identical { 1.0 } else { 0.0 };
    }
    (both - expected) / denom
}

/// Every set partition of `n` items as a restricted growth string.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        let next = prefix.iter().max().map_or(0, |m| m + 1);
        for label in 0..=next {
            prefix.push(label);
            go(prefix, n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), n, &mut out);
    out
}

pub fn assignment_cost(dist: &[Vec<f64>], labels: &[usize]) -> f64 {
    labels.iter().enumerate().map(|(i, &l)| dist[i][l] * dist[i][l]).sum()
}

/// Minimum squared-distance cost over all `K^N` labelings with no empty cluster.
pub fn brute_force_assignment(dist: &[Vec<f64>]) -> f64 {
    let (n, k) = (dist.len(), dist[0].len());
    let mut best = f64::INFINITY;
    for code in 0..k.pow(n as u32) {
        let labels: Vec<usize> = (0..n).map(|i| code / k.pow(i as u32) % k).collect();
        let mut seen = vec![false; k];
        labels.iter().for_each(|&l| seen[l] = true);
        if seen.iter().all(|&s| s) {
            best = best.min(assignment_cost(dist, &labels));
        }
    }
    best
}

/// BIC of a labeled diagonal Gaussian mixture from the joint density of
/// `(label, coefficients)`: weights `|M_k| / N`, per-cluster means and
/// `1/|M_k|` variances.
pub fn reference_bic(labels: &[usize], x: &[Vec<f64>], k: usize) -> f64 {
    let (n, d) = (x.len(), x[0].len());
    let mut clusters = Vec::new();
    for c in 0..k {
        let rows: Vec<&Vec<f64>> = x.iter().zip(labels).filter(|(_, &l)| l == c).map(|(r, _)| r).collect();
        let m = rows.len() as f64;
        let mu: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / m).collect();
        let var: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| (r[j] - mu[j]).powi(2)).sum::<f64>() / m).collect();
        clusters.push((m / n as f64, mu, var));
    }
    let mut loglik = 0.0;
    for (row, &l) in x.iter().zip(labels) {
        let (w, mu, var) = &clusters[l];
        let mut p = *w;
        for j in 0..d {
            p *= (-(row[j] - mu[j]).powi(2) / (2.0 * var[j])).exp() / (TAU * var[j]).sqrt();
        }
        loglik += p.ln();
    }
    -2.0 * loglik + (n as f64).ln() * ((2 * d + 1) * k - 1) as f64
}
