use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::assign::assign_non_empty;
use crate::alignment::{align_with_candidate, initial_template, polish_members, reconstruct_template, relative_change, template_step, DpConfig, PairwiseAlignment};
use crate::error::{Error, Result};
use crate::srvf::{l2_distance, warp_func, Func, FunctionSample, Srvf};
use crate::warping::Warping;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KmeansConfig {
    pub k: usize,
    pub n_restarts: usize,
    pub max_iter: usize,
    /// Threshold on the mean relative template change.
    pub epsilon: f64,
    pub dp: DpConfig,
    pub seed: u64,
}

/// Relative slack allowed when checking that an iteration does not raise
/// the cost; the template update falls back to uncentered alignments
/// whenever centering would raise it, so only rounding remains.
pub const MONOTONE_RTOL: f64 = 1e-9;

impl KmeansConfig {
    pub fn new(k: usize) -> Self {
        Self { k, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("K must be ≥ 1".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config("epsilon must be > 0".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be ≥ 1".into()));
        }
        self.dp.validate()
    }
}

impl Default for KmeansConfig {
    fn default() -> Self {
        Self { k: 1, n_restarts: 10, max_iter: 50, epsilon: 1e-3, dp: DpConfig::default(), seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    pub k: usize,
    /// 0-based cluster index per function.
    pub labels: Vec<usize>,
    /// Template SRVFs `η_k`.
    pub templates: Vec<Srvf>,
    /// Templates integrated back to function space.
    pub template_funcs: Vec<Func>,
    pub warpings: Vec<Warping>,
    pub aligned_funcs: Vec<Func>,
    pub aligned_srvfs: Vec<Srvf>,
    /// `L(η⁽ⁿ⁻¹⁾, δ⁽ⁿ⁾)`: cost after the assignment step of each iteration.
    pub cost_trace: Vec<f64>,
    /// `Σ ‖η_{δ_i} - q_i*‖²` after the template update of each iteration.
    pub update_trace: Vec<f64>,
    /// `Σ ‖η_{δ_i} - q_i*‖²` for the returned templates and alignments.
    pub final_cost: f64,
    pub converged: bool,
    pub iterations: usize,
    /// All functions coincide while `K > 1`; the partition is arbitrary.
    pub degenerate: bool,
    /// Which random initialization produced this result.
    pub restart: usize,
}

impl ClusteringResult {
    pub fn members(&self, cluster: usize) -> Vec<usize> {
        self.labels.iter().enumerate().filter(|(_, &l)| l == cluster).map(|(i, _)| i).collect()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        self.labels.iter().for_each(|&l| sizes[l] += 1);
        sizes
    }
}

struct RunState {
    labels: Vec<usize>,
    templates: Vec<Srvf>,
    warpings: Vec<Warping>,
    aligned: Vec<Srvf>,
    cost_trace: Vec<f64>,
    update_trace: Vec<f64>,
    converged: bool,
    iterations: usize,
}

impl RunState {
    fn final_cost(&self) -> f64 {
        *self.update_trace.last().unwrap_or(&f64::INFINITY)
    }
}

fn run_once(qs: &[Srvf], init: Vec<Srvf>, config: &KmeansConfig) -> Result<RunState> {
    let n = qs.len();
    let k = init.len();
    let mut templates = init;
    let mut state: Option<(Vec<usize>, Vec<Warping>, Vec<Srvf>)> = None;
    let mut cost_trace = Vec::new();
    let mut update_trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let dp = config.dp.lattice_only();

    while iterations < config.max_iter {
        iterations += 1;
        // (a) align every function to every template
        let prev = state.as_ref().map(|(l, w, _)| (l, w));
        let pairs: Vec<PairwiseAlignment> = (0..n * k)
            .into_par_iter()
            .map(|idx| {
                let (i, c) = (idx / k, idx % k);
                let candidate = prev.and_then(|(l, w)| (l[i] == c).then(|| &w[i]));
                align_with_candidate(&templates[c], &qs[i], &dp, candidate)
            })
            .collect::<Result<_>>()?;
        let dist: Vec<Vec<f64>> = pairs.chunks(k).map(|row| row.iter().map(|a| a.distance).collect()).collect();

        // (b) assignment with no empty cluster
        let labels = assign_non_empty(&dist)?;
        cost_trace.push(labels.iter().enumerate().map(|(i, &l)| dist[i][l] * dist[i][l]).sum());

        // (c) centering and (d) template update, per cluster
        let mut warpings = vec![None; n];
        let mut aligned = vec![None; n];
        let mut new_templates = Vec::with_capacity(k);
        let mut update_cost = 0.0;
        for c in 0..k {
            let members: Vec<usize> = (0..n).filter(|&i| labels[i] == c).collect();
            let qs_c: Vec<&Srvf> = members.iter().map(|&i| &qs[i]).collect();
            let alignments = members.iter().map(|&i| pairs[i * k + c].clone()).collect();
            let step = template_step(&templates[c], &qs_c, alignments)?;
            update_cost += step.cost_after;
            for ((g, q), &i) in step.warpings.into_iter().zip(step.aligned).zip(&members) {
                warpings[i] = Some(g);
                aligned[i] = Some(q);
            }
            new_templates.push(step.template);
        }
        update_trace.push(update_cost);

        // (e) stopping rule
        let change = new_templates
            .iter()
            .zip(&templates)
            .map(|(new, old)| relative_change(new, old))
            .sum::<Result<f64>>()?
            / k as f64;
        templates = new_templates;
        state = Some((
            labels,
            warpings.into_iter().map(Option::unwrap).collect(),
            aligned.into_iter().map(Option::unwrap).collect(),
        ));
        if change < config.epsilon {
            converged = true;
            break;
        }
    }

    let (labels, warpings, aligned) = state.expect("at least one iteration");
    Ok(RunState { labels, templates, warpings, aligned, cost_trace, update_trace, converged, iterations })
}

/// Clusters `sample` into `config.k` amplitude clusters.
///
/// Each of the `n_restarts` runs starts from `K` distinct randomly chosen
/// SRVFs as templates and iterates alignment, non-empty assignment, orbit
/// centering and template averaging until the mean relative template change
/// falls below `epsilon` or `max_iter` is reached. The run with the lowest
/// final cost is returned.
///
/// With `K = 1` there is nothing to initialize at random: a single run starts
/// from the SRVF nearest the cross-sectional mean, which makes the result
/// identical to [`crate::alignment::karcher_mean`] with `tol = epsilon`.
pub fn elastic_kmeans(sample: &FunctionSample, config: &KmeansConfig) -> Result<ClusteringResult> {
    config.validate()?;
    let n = sample.len();
    let k = config.k;
    if n < k {
        return Err(Error::TooFewObservations { n, k });
    }
    let qs = sample.srvfs()?;
    let degenerate = k > 1 && qs.iter().all(|q| q.values() == qs[0].values());

    let restarts = if k == 1 { 1 } else { config.n_restarts.max(1) };
    let runs = (0..restarts)
        .into_par_iter()
        .map(|restart| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(restart as u64);
            let init = if k == 1 {
                vec![initial_template(&qs)?]
            } else {
                sample_indices(&mut rng, n, k).into_iter().map(|i| qs[i].clone()).collect()
            };
            run_once(&qs, init, config)
        })
        .collect::<Result<Vec<_>>>()?;
    let (restart, best) = runs
        .into_iter()
        .enumerate()
        .reduce(|a, b| if b.1.final_cost() < a.1.final_cost() { b } else { a })
        .expect("at least one restart");
    let mut best = best;
    let mut final_cost = best.final_cost();
    if config.dp.polish > 0 {
        final_cost = 0.0;
        for c in 0..k {
            let members = (0..n).filter(|&i| best.labels[i] == c).collect::<Vec<_>>();
            let qs_c: Vec<&Srvf> = members.iter().map(|&i| &qs[i]).collect();
            let warpings = members.iter().map(|&i| best.warpings[i].clone()).collect();
            let aligned = members.iter().map(|&i| best.aligned[i].clone()).collect();
            let (template, warpings, aligned) =
                polish_members(&best.templates[c], &qs_c, warpings, aligned, config.dp.polish)?;
            for ((&i, g), q) in members.iter().zip(warpings).zip(aligned) {
                final_cost += l2_distance(&template, &q)?.powi(2);
                best.warpings[i] = g;
                best.aligned[i] = q;
            }
            best.templates[c] = template;
        }
    }

    let aligned_funcs = sample
        .funcs()
        .iter()
        .zip(&best.warpings)
        .map(|(f, g)| warp_func(f, g))
        .collect::<Result<Vec<_>>>()?;
    let template_funcs = (0..k)
        .map(|c| {
            let members: Vec<Func> = (0..n).filter(|&i| best.labels[i] == c).map(|i| aligned_funcs[i].clone()).collect();
            reconstruct_template(&best.templates[c], &members)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ClusteringResult {
        k,
        labels: best.labels,
        templates: best.templates,
        template_funcs,
        warpings: best.warpings,
        aligned_funcs,
        aligned_srvfs: best.aligned,
        cost_trace: best.cost_trace,
        update_trace: best.update_trace,
        final_cost,
        converged: best.converged,
        iterations: best.iterations,
        degenerate,
        restart,
    })
}

fn sample_indices(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    sample(rng, n, k).into_vec()
}
