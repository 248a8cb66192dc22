//! Choosing the number of clusters: per-cluster functional PCA of aligned
//! SRVFs, a diagonal Gaussian mixture on the leading PC coefficients, and
//! BIC over `K = 1..=K_max`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::clustering::{elastic_kmeans, ClusteringResult, KmeansConfig};
use crate::error::{Error, Result};
use crate::srvf::{FunctionSample, Srvf};

/// Lower bound on fitted mixture variances.
pub const VARIANCE_FLOOR: f64 = 1e-8;

/// Principal components of one cluster. Vectors use the row-major layout of
/// [`Srvf::values`] (length `T·m`).
#[derive(Debug, Clone, PartialEq)]
pub struct FpcaResult {
    pub mean: Vec<f64>,
    /// Weight functions `w_j`, orthonormal under `Δt · (a · b)`.
    pub components: Vec<Vec<f64>>,
    /// PC variances, non-increasing.
    pub variances: Vec<f64>,
    pub dt: f64,
}

impl FpcaResult {
    pub fn total_variance(&self) -> f64 {
        self.variances.iter().sum()
    }

    /// Cumulative explained-variance fractions (all ones for a zero-variance
    /// cluster).
    pub fn explained(&self) -> Vec<f64> {
        let total = self.total_variance();
        let mut acc = 0.0;
        self.variances
            .iter()
            .map(|v| {
                acc += v;
                if total > 0.0 { acc / total } else { 1.0 }
            })
            .collect()
    }

    /// Smallest `r` whose cumulative fraction reaches `rho`.
    pub fn dimension_for(&self, rho: f64) -> usize {
        let total = self.total_variance();
        if !(total > 0.0) {
            return 1;
        }
        let mut acc = 0.0;
        for (r, v) in self.variances.iter().enumerate() {
            acc += v;
            if acc >= rho * total * (1.0 - 1e-12) {
                return r + 1;
            }
        }
        self.variances.len()
    }
}

fn grid_spacing(q: &Srvf) -> Result<f64> {
    q.grid().spacing().ok_or(Error::NonUniformGrid)
}

/// Thin SVD of the centered `|M| × T·m` matrix of aligned SRVFs.
pub fn cluster_fpca(aligned: &[&Srvf]) -> Result<FpcaResult> {
    let first = aligned.first().ok_or(Error::Empty("fPCA of an empty cluster"))?;
    let dt = grid_spacing(first)?;
    let width = first.values().len();
    if aligned.iter().any(|q| q.grid() != first.grid() || q.dim() != first.dim()) {
        return Err(Error::ShapeMismatch("cluster members live on different grids".into()));
    }
    let rows = aligned.len();
    let mut mean = vec![0.0; width];
    for q in aligned {
        mean.iter_mut().zip(q.values()).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= rows as f64);
    let centered = DMatrix::from_fn(rows, width, |i, j| aligned[i].values()[j] - mean[j]);

    // decompose in the tall orientation; the wide one loses accuracy
    let (singular_values, directions) = if rows <= width {
        let svd = centered.transpose().svd(true, false);
        let u = svd.u.ok_or_else(|| Error::Numerical("SVD did not return singular vectors".into()))?;
        (svd.singular_values, u)
    } else {
        let svd = centered.svd(false, true);
        let v_t = svd.v_t.ok_or_else(|| Error::Numerical("SVD did not return singular vectors".into()))?;
        (svd.singular_values, v_t.transpose())
    };
    let mut order: Vec<usize> = (0..singular_values.len()).collect();
    order.sort_by(|&a, &b| singular_values[b].total_cmp(&singular_values[a]));
    let scale = 1.0 / dt.sqrt();
    let components = order.iter().map(|&j| directions.column(j).iter().map(|v| v * scale).collect()).collect();
    let variances = order
        .iter()
        .map(|&j| dt / rows as f64 * singular_values[j] * singular_values[j])
        .collect();
    Ok(FpcaResult { mean, components, variances, dt })
}

/// One `d` shared by every cluster of every candidate `K`: the largest
/// per-cluster requirement to explain at least `rho` of its variance.
pub fn choose_dimension<'a>(fits: impl IntoIterator<Item = &'a FpcaResult>, rho: f64) -> Result<usize> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Config(format!("rho must lie in (0, 1), got {rho}")));
    }
    Ok(fits.into_iter().map(|f| f.dimension_for(rho)).max().unwrap_or(1))
}

/// `c_j = Δt · (q* - mean) · w_j` for `j < d`.
pub fn pc_coefficients(q: &Srvf, fpca: &FpcaResult, d: usize) -> Result<Vec<f64>> {
    if d > fpca.components.len() {
        return Err(Error::TooManyComponents { requested: d, available: fpca.components.len() });
    }
    if q.values().len() != fpca.mean.len() {
        return Err(Error::ShapeMismatch("function does not match the fPCA basis".into()));
    }
    Ok(fpca.components[..d]
        .iter()
        .map(|w| fpca.dt * q.values().iter().zip(&fpca.mean).zip(w).map(|((v, m), w)| (v - m) * w).sum::<f64>())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmFit {
    pub k: usize,
    pub d: usize,
    pub alphas: Vec<f64>,
    pub mus: Vec<Vec<f64>>,
    pub sigmas: Vec<Vec<f64>>,
    pub loglik: f64,
    /// Some variance was raised to [`VARIANCE_FLOOR`].
    pub floored: bool,
}

/// Number of free parameters of a `K`-component diagonal mixture in `R^d`.
pub fn parameter_count(k: usize, d: usize) -> usize {
    (2 * d + 1) * k - 1
}

/// Closed-form mixture MLEs given hard labels, and
/// `BIC = -2 loglik + ln(N) · ((2d + 1)K - 1)`.
pub fn gmm_bic(labels: &[usize], coefficients: &[Vec<f64>], k: usize) -> Result<(GmmFit, f64)> {
    let n = labels.len();
    if n == 0 {
        return Err(Error::Empty("mixture fit with no observations"));
    }
    if coefficients.len() != n {
        return Err(Error::ShapeMismatch(format!("{} labels but {} coefficient rows", n, coefficients.len())));
    }
    let d = coefficients[0].len();
    if coefficients.iter().any(|c| c.len() != d) {
        return Err(Error::ShapeMismatch("ragged coefficient matrix".into()));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
        return Err(Error::Config(format!("label {bad} out of range for K = {k}")));
    }
    let mut counts = vec![0usize; k];
    labels.iter().for_each(|&l| counts[l] += 1);
    if counts.contains(&0) {
        return Err(Error::Config("every cluster needs at least one member".into()));
    }

    let mut mus = vec![vec![0.0; d]; k];
    for (c, &l) in coefficients.iter().zip(labels) {
        mus[l].iter_mut().zip(c).for_each(|(m, v)| *m += v);
    }
    for (m, &cnt) in mus.iter_mut().zip(&counts) {
        m.iter_mut().for_each(|v| *v /= cnt as f64);
    }
    let mut sigmas = vec![vec![0.0; d]; k];
    for (c, &l) in coefficients.iter().zip(labels) {
        for j in 0..d {
            sigmas[l][j] += (c[j] - mus[l][j]).powi(2);
        }
    }
    let mut floored = false;
    for (s, &cnt) in sigmas.iter_mut().zip(&counts) {
        for v in s.iter_mut() {
            *v /= cnt as f64;
            if *v < VARIANCE_FLOOR {
                *v = VARIANCE_FLOOR;
                floored = true;
            }
        }
    }
    let alphas: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();

    let log_2pi = (2.0 * std::f64::consts::PI).ln();
    let loglik = coefficients
        .iter()
        .zip(labels)
        .map(|(c, &l)| {
            let quad: f64 = (0..d).map(|j| (c[j] - mus[l][j]).powi(2) / sigmas[l][j]).sum();
            let log_det: f64 = sigmas[l].iter().map(|s| s.ln()).sum();
            alphas[l].ln() - 0.5 * (d as f64 * log_2pi + log_det + quad)
        })
        .sum::<f64>();
    let bic = -2.0 * loglik + (n as f64).ln() * parameter_count(k, d) as f64;
    Ok((GmmFit { k, d, alphas, mus, sigmas, loglik, floored }, bic))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BicEntry {
    pub k: usize,
    pub bic: f64,
    pub loglik: f64,
    pub d: usize,
    /// `ln(N) · ((2d + 1)K - 1)`.
    pub penalty: f64,
    pub floored: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BicReport {
    pub per_k: Vec<BicEntry>,
    pub chosen_k: usize,
    pub rho: f64,
    pub d: usize,
    /// `explained_variance[K - 1][k]`: cumulative fractions for cluster `k`.
    pub explained_variance: Vec<Vec<Vec<f64>>>,
}

/// Index of the smallest BIC; ties go to the smaller `K`.
fn argmin_bic(entries: &[BicEntry]) -> usize {
    entries
        .iter()
        .min_by(|a, b| a.bic.total_cmp(&b.bic).then(a.k.cmp(&b.k)))
        .map(|e| e.k)
        .expect("at least one candidate K")
}

/// Builds the BIC report from finished clusterings for `K = 1, 2, ...`.
///
/// A coefficient index beyond the components a cluster actually has (a
/// cluster with fewer members than `d`) is set to zero, which the mixture
/// fit then floors.
pub fn bic_report(clusterings: &[ClusteringResult], rho: f64) -> Result<BicReport> {
    if clusterings.is_empty() {
        return Err(Error::Empty("no clusterings to compare"));
    }
    let fits: Vec<Vec<FpcaResult>> = clusterings
        .iter()
        .map(|res| {
            (0..res.k)
                .map(|c| {
                    let members: Vec<&Srvf> = res.members(c).into_iter().map(|i| &res.aligned_srvfs[i]).collect();
                    cluster_fpca(&members)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let d = choose_dimension(fits.iter().flatten(), rho)?;
    let n = clusterings[0].labels.len();

    let mut per_k = Vec::with_capacity(clusterings.len());
    for (res, cluster_fits) in clusterings.iter().zip(&fits) {
        let coefficients = res
            .aligned_srvfs
            .iter()
            .zip(&res.labels)
            .map(|(q, &l)| {
                let fit = &cluster_fits[l];
                let available = d.min(fit.components.len());
                let mut c = pc_coefficients(q, fit, available)?;
                c.resize(d, 0.0);
                Ok(c)
            })
            .collect::<Result<Vec<_>>>()?;
        let (gmm, bic) = gmm_bic(&res.labels, &coefficients, res.k)?;
        per_k.push(BicEntry {
            k: res.k,
            bic,
            loglik: gmm.loglik,
            d,
            penalty: (n as f64).ln() * parameter_count(res.k, d) as f64,
            floored: gmm.floored,
        });
    }
    let chosen_k = argmin_bic(&per_k);
    let explained_variance = fits.iter().map(|fs| fs.iter().map(FpcaResult::explained).collect()).collect();
    Ok(BicReport { per_k, chosen_k, rho, d, explained_variance })
}

/// Runs elastic k-means for every `K` in `1..=k_max` (with the other
/// settings of `config`) and picks `K` by BIC.
pub fn select_k(
    sample: &FunctionSample,
    k_max: usize,
    rho: f64,
    config: &KmeansConfig,
) -> Result<(BicReport, Vec<ClusteringResult>)> {
    if k_max == 0 {
        return Err(Error::Config("K_max must be ≥ 1".into()));
    }
    if k_max > sample.len() {
        return Err(Error::TooFewObservations { n: sample.len(), k: k_max });
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Config(format!("rho must lie in (0, 1), got {rho}")));
    }
    let clusterings = (1..=k_max)
        .map(|k| elastic_kmeans(sample, &KmeansConfig { k, ..*config }))
        .collect::<Result<Vec<_>>>()?;
    let report = bic_report(&clusterings, rho)?;
    Ok((report, clusterings))
}
