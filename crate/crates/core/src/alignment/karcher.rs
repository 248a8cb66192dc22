use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dp::{dp_align, polish_alignment, DpConfig, PairwiseAlignment};
use crate::error::{Error, Result};
use crate::srvf::{l2_distance, warp_func, warp_srvf, Func, FunctionSample, Srvf};
use crate::warping::Warping;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KarcherConfig {
    pub dp: DpConfig,
    pub max_iter: usize,
    /// Stop once `‖q̄ⁿ - q̄ⁿ⁻¹‖ / ‖q̄ⁿ⁻¹‖` drops below this.
    pub tol: f64,
}

impl Default for KarcherConfig {
    fn default() -> Self {
        Self { dp: DpConfig::default(), max_iter: 20, tol: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultipleAlignmentResult {
    pub template: Srvf,
    pub warpings: Vec<Warping>,
    pub aligned: Vec<Srvf>,
    pub iterations: usize,
    /// `Σ d²([q̄], [q_i])` against the template entering each iteration.
    pub cost_trace: Vec<f64>,
    pub converged: bool,
}

/// Moves a template to the representative of its orbit for which the mean
/// of `warpings` is the identity.
///
/// With `γ̄` the mean warping, the template becomes `(template, γ̄⁻¹)` and
/// each `γ_i` becomes `γ_i ∘ γ̄⁻¹`, so that `(q_i, γ_i)` and the template
/// stay matched.
pub fn center_orbit(template: &Srvf, warpings: &[Warping]) -> Result<(Srvf, Vec<Warping>)> {
    let mean = Warping::mean(warpings)?;
    let inv = mean
        .inverse()
        .map_err(|e| Error::Numerical(format!("mean warping is not invertible: {e}")))?;
    let template = warp_srvf(template, &inv)?;
    let warpings = warpings.iter().map(|g| g.compose(&inv)).collect::<Result<Vec<_>>>()?;
    Ok((template, warpings))
}

/// Aligns `q` to `template` by DP, also trying `previous` (the warping that
/// matched `q` to this template's predecessor) and keeping the better one.
pub(crate) fn align_with_candidate(
    template: &Srvf,
    q: &Srvf,
    dp: &DpConfig,
    previous: Option<&Warping>,
) -> Result<PairwiseAlignment> {
    let best = dp_align(template, q, dp)?;
    if let Some(gamma) = previous {
        let q_aligned = warp_srvf(q, gamma)?;
        let distance = l2_distance(template, &q_aligned)?;
        if distance < best.distance {
            return Ok(PairwiseAlignment { gamma: gamma.clone(), q_aligned, distance });
        }
    }
    Ok(best)
}

fn align_all(template: &Srvf, qs: &[Srvf], dp: &DpConfig, previous: Option<&[Warping]>) -> Result<Vec<PairwiseAlignment>> {
    qs.par_iter()
        .enumerate()
        .map(|(i, q)| align_with_candidate(template, q, dp, previous.map(|p| &p[i])))
        .collect()
}

/// Relative change used by the stopping rules; falls back to the absolute
/// change for a zero-norm reference.
pub(crate) fn relative_change(new: &Srvf, old: &Srvf) -> Result<f64> {
    let diff = l2_distance(new, old)?;
    let base = old.norm();
    Ok(if base > 0.0 { diff / base } else { diff })
}

/// Continuously refines the final alignments of `qs` to `template` and
/// re-averages. Returns `(template, warpings, aligned)`; unchanged for
/// `terms == 0`. No distance increases, so neither does the cost.
pub(crate) fn polish_members(
    template: &Srvf,
    qs: &[&Srvf],
    warpings: Vec<Warping>,
    aligned: Vec<Srvf>,
    terms: usize,
) -> Result<(Srvf, Vec<Warping>, Vec<Srvf>)> {
    if terms == 0 || qs.is_empty() {
        return Ok((template.clone(), warpings, aligned));
    }
    let polished = qs
        .par_iter()
        .zip(warpings.into_par_iter().zip(aligned))
        .map(|(q, (gamma, q_aligned))| {
            let distance = l2_distance(template, &q_aligned)?;
            Ok(polish_alignment(template, q, PairwiseAlignment { gamma, q_aligned, distance }, terms))
        })
        .collect::<Result<Vec<_>>>()?;
    let (warpings, aligned): (Vec<_>, Vec<_>) = polished.into_iter().map(|a| (a.gamma, a.q_aligned)).unzip();
    Ok((Srvf::mean_of(&aligned)?, warpings, aligned))
}

/// The cross-sectional SRVF mean nearest (in L²) to the sample mean.
pub(crate) fn initial_template(qs: &[Srvf]) -> Result<Srvf> {
    let mean = Srvf::mean_of(qs)?;
    let mut best = (f64::INFINITY, 0);
    for (i, q) in qs.iter().enumerate() {
        let d = l2_distance(q, &mean)?;
        if d < best.0 {
            best = (d, i);
        }
    }
    Ok(qs[best.1].clone())
}

/// One centered template update: align, center, average.
pub(crate) struct TemplateStep {
    pub template: Srvf,
    pub warpings: Vec<Warping>,
    pub aligned: Vec<Srvf>,
    /// `Σ ‖template_in - (q_i, γ_i)‖²` before the update.
    pub cost_before: f64,
    /// `Σ ‖template - aligned_i‖²` after the update.
    pub cost_after: f64,
}

fn mean_and_cost(aligned: &[Srvf]) -> Result<(Srvf, f64)> {
    let mean = Srvf::mean_of(aligned)?;
    let cost = aligned.iter().map(|q| l2_distance(&mean, q).map(|d| d * d)).sum::<Result<f64>>()?;
    Ok((mean, cost))
}

/// Centers the orbit, then averages. Centering re-samples the warped SRVFs,
/// which preserves distances only in the continuum; when it would raise the
/// cost, the uncentered alignments are averaged instead, so the cost never
/// rises.
pub(crate) fn template_step(template: &Srvf, qs: &[&Srvf], alignments: Vec<PairwiseAlignment>) -> Result<TemplateStep> {
    let cost_before = alignments.iter().map(|a| a.distance * a.distance).sum();
    let (warpings, plain): (Vec<Warping>, Vec<Srvf>) = alignments.into_iter().map(|a| (a.gamma, a.q_aligned)).unzip();
    let (_, centered) = center_orbit(template, &warpings)?;
    let aligned = qs
        .par_iter()
        .zip(&centered)
        .map(|(q, g)| warp_srvf(q, g))
        .collect::<Result<Vec<_>>>()?;
    let (mean, cost) = mean_and_cost(&aligned)?;
    let (plain_mean, plain_cost) = mean_and_cost(&plain)?;
    Ok(if cost <= plain_cost {
        TemplateStep { template: mean, warpings: centered, aligned, cost_before, cost_after: cost }
    } else {
        TemplateStep { template: plain_mean, warpings, aligned: plain, cost_before, cost_after: plain_cost }
    })
}

/// Karcher mean of the amplitude orbits of `qs`, by alternating alignment
/// to the current template with cross-sectional averaging; each iteration
/// re-centers the orbit. Iterations use the lattice search only; a
/// `config.dp.polish` refinement is applied once to the final alignments.
pub fn karcher_mean(qs: &[Srvf], config: &KarcherConfig) -> Result<MultipleAlignmentResult> {
    if qs.is_empty() {
        return Err(Error::Empty("karcher mean of zero functions"));
    }
    let init = initial_template(qs)?;
    karcher_mean_from(qs, init, config)
}

fn karcher_mean_from(qs: &[Srvf], init: Srvf, config: &KarcherConfig) -> Result<MultipleAlignmentResult> {
    config.dp.validate()?;
    if config.max_iter == 0 {
        return Err(Error::Config("max_iter must be ≥ 1".into()));
    }
    let mut template = init;
    let mut cost_trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut state: Option<TemplateStep> = None;
    let dp = config.dp.lattice_only();
    while iterations < config.max_iter {
        iterations += 1;
        let previous = state.as_ref().map(|s| s.warpings.as_slice());
        let alignments = align_all(&template, qs, &dp, previous)?;
        let step = template_step(&template, &qs.iter().collect::<Vec<_>>(), alignments)?;
        cost_trace.push(step.cost_before);
        let change = relative_change(&step.template, &template)?;
        template = step.template.clone();
        state = Some(step);
        if change < config.tol {
            converged = true;
            break;
        }
    }
    let step = state.expect("at least one iteration");
    let members: Vec<&Srvf> = qs.iter().collect();
    let (template, warpings, aligned) =
        polish_members(&template, &members, step.warpings, step.aligned, config.dp.polish)?;
    Ok(MultipleAlignmentResult {
        template,
        warpings,
        aligned,
        iterations,
        cost_trace,
        converged,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultipleAlignment {
    pub result: MultipleAlignmentResult,
    /// `f_i ∘ γ_i*`.
    pub aligned_funcs: Vec<Func>,
    /// Template reconstructed from its SRVF, started at the mean initial value.
    pub template_func: Func,
}

/// Registers a whole sample to its Karcher-mean template.
pub fn multiple_align(sample: &FunctionSample, config: &KarcherConfig) -> Result<MultipleAlignment> {
    let qs = sample.srvfs()?;
    let result = karcher_mean(&qs, config)?;
    let aligned_funcs = sample
        .funcs()
        .iter()
        .zip(&result.warpings)
        .map(|(f, g)| warp_func(f, g))
        .collect::<Result<Vec<_>>>()?;
    let template_func = reconstruct_template(&result.template, &aligned_funcs)?;
    Ok(MultipleAlignment { result, aligned_funcs, template_func })
}

/// Integrates a template SRVF starting from the mean initial value of `members`.
pub(crate) fn reconstruct_template(template: &Srvf, members: &[Func]) -> Result<Func> {
    let dim = template.dim();
    let mut f0 = vec![0.0; dim];
    for f in members {
        for (a, v) in f0.iter_mut().zip(f.row(0)) {
            *a += v;
        }
    }
    if !members.is_empty() {
        f0.iter_mut().for_each(|a| *a /= members.len() as f64);
    }
    crate::srvf::from_srvf(template, &f0)
}
