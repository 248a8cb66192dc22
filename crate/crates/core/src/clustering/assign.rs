//! Cluster assignment with every cluster receiving at least one member.
//!
//! The constrained problem is a transportation problem: each function ships
//! one unit to some cluster, each cluster must receive at least one unit.
//! It is solved exactly as a min-cost flow with successive shortest paths.

use crate::error::{Error, Result};

/// Index of the smallest entry, lowest index on ties.
pub(crate) fn argmin(row: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in row.iter().enumerate().skip(1) {
        if v < row[best] {
            best = k;
        }
    }
    best
}

/// Minimizes `Σ_i dist[i][label_i]²` subject to no empty cluster.
///
/// `dist` is `N × K`; labels are 0-based. When the row-wise argmin already
/// covers every cluster it is returned as is.
pub fn assign_non_empty(dist: &[Vec<f64>]) -> Result<Vec<usize>> {
    let n = dist.len();
    let k = dist.first().map_or(0, Vec::len);
    if k == 0 {
        return Err(Error::Empty("distance matrix"));
    }
    if dist.iter().any(|r| r.len() != k) {
        return Err(Error::ShapeMismatch("ragged distance matrix".into()));
    }
    if dist.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite distance".into()));
    }
    if n < k {
        return Err(Error::TooFewObservations { n, k });
    }
    let labels: Vec<usize> = dist.iter().map(|r| argmin(r)).collect();
    let mut seen = vec![false; k];
    labels.iter().for_each(|&l| seen[l] = true);
    if seen.iter().all(|&s| s) {
        return Ok(labels);
    }
    Ok(min_cost_assignment(dist, n, k))
}

struct Edge {
    to: usize,
    cap: i64,
    cost: f64,
}

struct Network {
    edges: Vec<Edge>,
    adj: Vec<Vec<usize>>,
}

impl Network {
    fn new(nodes: usize) -> Self {
        Self { edges: Vec::new(), adj: vec![Vec::new(); nodes] }
    }

    fn add(&mut self, from: usize, to: usize, cap: i64, cost: f64) -> usize {
        let id = self.edges.len();
        self.edges.push(Edge { to, cap, cost });
        self.adj[from].push(id);
        self.edges.push(Edge { to: from, cap: 0, cost: -cost });
        self.adj[to].push(id + 1);
        id
    }

    /// Bellman–Ford (queue based) shortest path in the residual graph;
    /// returns the incoming edge of every node on the path tree.
    fn shortest_path(&self, source: usize) -> Vec<Option<usize>> {
        let nodes = self.adj.len();
        let mut dist = vec![f64::INFINITY; nodes];
        let mut prev = vec![None; nodes];
        let mut queued = vec![false; nodes];
        let mut queue = std::collections::VecDeque::new();
        dist[source] = 0.0;
        queue.push_back(source);
        queued[source] = true;
        while let Some(u) = queue.pop_front() {
            queued[u] = false;
            for &e in &self.adj[u] {
                let edge = &self.edges[e];
                if edge.cap <= 0 {
                    continue;
                }
                let nd = dist[u] + edge.cost;
                if nd < dist[edge.to] - 1e-12 {
                    dist[edge.to] = nd;
                    prev[edge.to] = Some(e);
                    if !queued[edge.to] {
                        queued[edge.to] = true;
                        queue.push_back(edge.to);
                    }
                }
            }
        }
        prev
    }
}

fn min_cost_assignment(dist: &[Vec<f64>], n: usize, k: usize) -> Vec<usize> {
    let source = 0;
    let sink = n + k + 1;
    let func = |i: usize| 1 + i;
    let cluster = |c: usize| 1 + n + c;
    let total: f64 = dist.iter().flatten().map(|d| d * d).sum();
    // Reward large enough that every cluster's first unit is always worth taking.
    let reward = 1.0 + 2.0 * total;

    let mut net = Network::new(n + k + 2);
    let mut arcs = vec![vec![0usize; k]; n];
    for (i, row) in dist.iter().enumerate() {
        net.add(source, func(i), 1, 0.0);
        for (c, d) in row.iter().enumerate() {
            arcs[i][c] = net.add(func(i), cluster(c), 1, d * d);
        }
    }
    for c in 0..k {
        net.add(cluster(c), sink, 1, -reward);
        net.add(cluster(c), sink, (n - k) as i64, 0.0);
    }

    for _ in 0..n {
        let prev = net.shortest_path(source);
        let mut v = sink;
        while v != source {
            let e = prev[v].expect("every function can reach the sink");
            net.edges[e].cap -= 1;
            net.edges[e ^ 1].cap += 1;
            v = net.edges[e ^ 1].to;
        }
    }

    arcs.iter()
        .map(|row| row.iter().position(|&e| net.edges[e].cap == 0).expect("each function ships one unit"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cost(dist: &[Vec<f64>], labels: &[usize]) -> f64 {
        labels.iter().enumerate().map(|(i, &l)| dist[i][l] * dist[i][l]).sum()
    }

    /// Minimum over all K^N labelings that leave no cluster empty.
    fn brute_force(dist: &[Vec<f64>]) -> f64 {
        let n = dist.len();
        let k = dist[0].len();
        let mut best = f64::INFINITY;
        let mut labels = vec![0usize; n];
        loop {
            let mut seen = vec![false; k];
            labels.iter().for_each(|&l| seen[l] = true);
            if seen.iter().all(|&s| s) {
                best = best.min(cost(dist, &labels));
            }
            let mut pos = 0;
            loop {
                if pos == n {
                    return best;
                }
                labels[pos] += 1;
                if labels[pos] < k {
                    break;
                }
                labels[pos] = 0;
                pos += 1;
            }
        }
    }

    #[test]
    fn smallest_margin_moves() {
        let dist = vec![vec![1.0, 3.0], vec![1.0, 1.2], vec![0.5, 2.0]];
        let labels = assign_non_empty(&dist).unwrap();
        assert_eq!(labels, vec![0, 1, 0]);
        assert!((cost(&dist, &labels) - brute_force(&dist)).abs() < 1e-12);
    }

    #[test]
    fn unconstrained_argmin_is_kept() {
        let dist = vec![vec![0.1, 2.0, 3.0], vec![2.0, 0.1, 3.0], vec![3.0, 2.0, 0.1], vec![0.2, 2.0, 3.0]];
        assert_eq!(assign_non_empty(&dist).unwrap(), vec![0, 1, 2, 0]);
    }

    #[test]
    fn too_few_rows() {
        assert!(matches!(assign_non_empty(&[vec![1.0, 2.0]]), Err(Error::TooFewObservations { .. })));
        assert!(assign_non_empty(&[vec![f64::NAN, 2.0], vec![1.0, 1.0]]).is_err());
    }

    fn permutations(k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(k - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, k - 1);
                out.push(q);
            }
        }
        out
    }

    proptest! {
        #[test]
        fn matches_enumeration(n in 1usize..=8, k in 1usize..=3, seed in proptest::collection::vec(0.0f64..5.0, 24)) {
            prop_assume!(n >= k);
            // bias every row toward cluster 0 so the constraint is often active
            let dist: Vec<Vec<f64>> = (0..n)
                .map(|i| (0..k).map(|c| seed[i * 3 + c] + if c == 0 { 0.0 } else { 3.0 }).collect())
                .collect();
            let labels = assign_non_empty(&dist).unwrap();
            let mut seen = vec![false; k];
            labels.iter().for_each(|&l| seen[l] = true);
            prop_assert!(seen.iter().all(|&s| s));
            prop_assert!((cost(&dist, &labels) - brute_force(&dist)).abs() < 1e-9);
        }

        #[test]
        fn square_case_is_optimal_matching(k in 1usize..=6, seed in proptest::collection::vec(0.0f64..5.0, 36)) {
            let dist: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|c| seed[i * 6 + c]).collect()).collect();
            let labels = assign_non_empty(&dist).unwrap();
            let mut sorted = labels.clone();
            sorted.sort_unstable();
            prop_assert_eq!(sorted, (0..k).collect::<Vec<_>>());
            let best = permutations(k).iter().map(|p| cost(&dist, p)).fold(f64::INFINITY, f64::min);
            prop_assert!((cost(&dist, &labels) - best).abs() < 1e-9);
        }
    }
}
