use std::fmt::Write as _;
use std::path::Path;

use elastic_kmeans::alignment::multiple_align;
use elastic_kmeans::clustering::{elastic_kmeans, kmeans_euclidean, ClusteringResult};
use elastic_kmeans::metrics::{adjusted_rand_index, pointwise_band};
use elastic_kmeans::model_selection::{select_k, BicReport};
use elastic_kmeans::simulation::SimConfig;
use elastic_kmeans::{Func, FunctionSample, Grid, Warping};
use serde::Serialize;

use crate::args::{AlgoArgs, ClusterArgs, ImportArgs, ReplicateArgs, SelectKArgs, SimulateArgs, SummarizeArgs};
use crate::error::{CliError, Result};
use crate::experiment::{generate, generator_name, Cell, ExperimentGrid, Method};
use crate::plot::{band_csv, band_svg};
use crate::sample_file::{write_text, SampleFile};

/// Band half-width used in result bundles.
const BUNDLE_N_SD: f64 = 2.0;

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let Some(config) = &args.config else {
        let sim = SimConfig {
            grid_len: args.grid_size,
            noise_scale: args.noise_scale.into(),
            ..SimConfig::new(args.n, args.tau, args.k_star, args.seed)
        };
        let data = generate(args.generator, &sim)?;
        SampleFile::new(data.sample, Some(data.labels))?.write(&args.out)?;
        println!("wrote {}", args.out.display());
        return Ok(());
    };
    let grid = ExperimentGrid::read(config)?;
    let mut count = 0;
    for cell in grid.cells() {
        for rep in 0..grid.replicates {
            let data = generate(grid.generator, &grid.sim_config(&cell, rep))?;
            SampleFile::new(data.sample, Some(data.labels))?.write(&args.out.join(grid.file_name(&cell, rep)))?;
            count += 1;
        }
    }
    println!("wrote {count} files to {}", args.out.display());
    Ok(())
}

fn load(path: &Path, algo: &AlgoArgs) -> Result<SampleFile> {
    let file = SampleFile::read(path)?;
    match algo.grid_size {
        Some(len) => Ok(SampleFile { sample: file.sample.to_uniform(len)?, labels: file.labels }),
        None => Ok(file),
    }
}

fn warping_func(gamma: &Warping) -> Result<Func> {
    Ok(Func::new(gamma.grid().clone(), 1, gamma.values().to_vec())?)
}

fn labels_csv(labels: &[usize]) -> String {
    let mut out = String::from("index,label\n");
    for (i, l) in labels.iter().enumerate() {
        writeln!(out, "{},{}", i + 1, l + 1).unwrap();
    }
    out
}

fn read_labels_csv(path: &Path, n: usize) -> Result<Vec<usize>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::format(path, e.to_string()))?;
    let mut labels = vec![None; n];
    for record in reader.records() {
        let record = record.map_err(|e| CliError::format(path, e.to_string()))?;
        let field = |j: usize| -> Result<usize> {
            record
                .get(j)
                .and_then(|s| s.trim().parse::<usize>().ok())
                .filter(|&v| v >= 1)
                .ok_or_else(|| CliError::format(path, format!("expected positive integers `index,label`, got {record:?}")))
        };
        let (i, l) = (field(0)?, field(1)?);
        if i > n {
            return Err(CliError::format(path, format!("index {i} exceeds sample size {n}")));
        }
        labels[i - 1] = Some(l - 1);
    }
    labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| l.ok_or_else(|| CliError::format(path, format!("no label for function {}", i + 1))))
        .collect()
}

/// Writes `band_<stem>.csv` and `band_<stem>.svg` for `members`; groups
/// with fewer than two functions have no band and are skipped.
fn write_band(dir: &Path, stem: &str, title: &str, members: &[&Func], n_sd: f64) -> Result<Option<Vec<f64>>> {
    if members.len() < 2 {
        eprintln!("skipping band {stem}: fewer than two functions");
        return Ok(None);
    }
    let band = pointwise_band(members, n_sd)?;
    write_text(&dir.join(format!("band_{stem}.csv")), &band_csv(&band))?;
    write_text(&dir.join(format!("band_{stem}.svg")), &band_svg(&band, members, title))?;
    Ok(Some(band.max_width()))
}

#[derive(Serialize)]
struct ClusterSummary {
    k: usize,
    n: usize,
    converged: bool,
    iterations: usize,
    final_cost: f64,
    restart: usize,
    degenerate: bool,
    cluster_sizes: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ari: Option<f64>,
}

/// Files: `labels.csv`, `templates.csv`, `warpings.csv`, `aligned.csv`,
/// `cost_trace.csv`, `summary.json`, and band CSV/SVG pairs for the input
/// (`band_input`) and for each aligned cluster (`band_cluster<k>`).
fn write_bundle(dir: &Path, input: &FunctionSample, result: &ClusteringResult, ari: Option<f64>) -> Result<()> {
    write_text(&dir.join("labels.csv"), &labels_csv(&result.labels))?;
    let templates = FunctionSample::new(result.template_funcs.clone())?;
    SampleFile::new(templates, Some((0..result.k).collect()))?.write(&dir.join("templates.csv"))?;
    let warpings = result.warpings.iter().map(warping_func).collect::<Result<Vec<_>>>()?;
    SampleFile::new(FunctionSample::new(warpings)?, Some(result.labels.clone()))?.write(&dir.join("warpings.csv"))?;
    let aligned = FunctionSample::new(result.aligned_funcs.clone())?;
    SampleFile::new(aligned, Some(result.labels.clone()))?.write(&dir.join("aligned.csv"))?;
    let mut trace = String::from("iteration,assignment_cost,update_cost\n");
    for (i, (c, u)) in result.cost_trace.iter().zip(&result.update_trace).enumerate() {
        writeln!(trace, "{},{c},{u}", i + 1).unwrap();
    }
    write_text(&dir.join("cost_trace.csv"), &trace)?;
    write_band(dir, "input", "input", &input.funcs().iter().collect::<Vec<_>>(), BUNDLE_N_SD)?;
    for c in 0..result.k {
        let members: Vec<&Func> = result.members(c).into_iter().map(|i| &result.aligned_funcs[i]).collect();
        write_band(dir, &format!("cluster{}", c + 1), &format!("cluster {} aligned", c + 1), &members, BUNDLE_N_SD)?;
    }
    let summary = ClusterSummary {
        k: result.k,
        n: result.labels.len(),
        converged: result.converged,
        iterations: result.iterations,
        final_cost: result.final_cost,
        restart: result.restart,
        degenerate: result.degenerate,
        cluster_sizes: result.cluster_sizes(),
        ari,
    };
    write_text(&dir.join("summary.json"), &to_json(&summary))
}

fn to_json(value: &impl Serialize) -> String {
    serde_json::to_string_pretty(value).expect("serializable") + "\n"
}

pub fn cluster(args: &ClusterArgs) -> Result<()> {
    let file = load(&args.input, &args.algo)?;
    let truth = match (&file.labels, args.emit_ari) {
        (Some(l), true) => Some(l),
        (None, true) => return Err(CliError::format(&args.input, "--emit-ari needs labels embedded in the input")),
        _ => None,
    };
    let result = elastic_kmeans(&file.sample, &args.algo.kmeans(args.k))?;
    let ari = truth.map(|t| adjusted_rand_index(&result.labels, t)).transpose()?;
    write_bundle(&args.out, &file.sample, &result, ari)?;
    println!(
        "K={} cost={} iterations={} converged={} sizes={:?}",
        result.k,
        result.final_cost,
        result.iterations,
        result.converged,
        result.cluster_sizes()
    );
    if let Some(a) = ari {
        println!("ARI {a}");
    }
    if result.converged {
        Ok(())
    } else {
        Err(CliError::NotConverged)
    }
}

fn bic_csv(report: &BicReport) -> String {
    let mut out = String::from("k,bic,loglik,d,penalty,floored\n");
    for e in &report.per_k {
        writeln!(out, "{},{},{},{},{},{}", e.k, e.bic, e.loglik, e.d, e.penalty, e.floored).unwrap();
    }
    out
}

pub fn select_k_cmd(args: &SelectKArgs) -> Result<()> {
    let file = load(&args.input, &args.algo)?;
    let (report, clusterings) = select_k(&file.sample, args.kmax, args.rho, &args.algo.kmeans(1))?;
    write_text(&args.out.join("bic_report.json"), &to_json(&report))?;
    write_text(&args.out.join("bic.csv"), &bic_csv(&report))?;
    for c in &clusterings {
        write_text(&args.out.join(format!("labels_k{}.csv", c.k)), &labels_csv(&c.labels))?;
    }
    println!("chosen K={} (d={})", report.chosen_k, report.d);
    if clusterings.iter().all(|c| c.converged) {
        Ok(())
    } else {
        Err(CliError::NotConverged)
    }
}

/// Outcome of one method on one replicate.
struct Run {
    method: &'static str,
    value: std::result::Result<f64, String>,
}

fn run_method(method: Method, sample: &FunctionSample, truth: &[usize], k: usize, algo: &AlgoArgs) -> Result<f64> {
    let labels = match method {
        Method::Elastic => elastic_kmeans(sample, &algo.kmeans(k))?.labels,
        Method::EuclidRaw => kmeans_euclidean(&sample.flattened(), k, algo.restarts, algo.seed)?,
        Method::EuclidAligned => {
            let aligned = multiple_align(sample, &algo.karcher())?;
            let rows: Vec<Vec<f64>> = aligned.aligned_funcs.iter().map(|f| f.values().to_vec()).collect();
            kmeans_euclidean(&rows, k, algo.restarts, algo.seed)?
        }
    };
    Ok(adjusted_rand_index(&labels, truth)?)
}

fn replicate_runs(grid: &ExperimentGrid, cell: &Cell, rep: usize, algo: &AlgoArgs) -> Vec<Run> {
    let data = match generate(grid.generator, &grid.sim_config(cell, rep)) {
        Ok(d) => d,
        Err(e) => {
            let mut names: Vec<&'static str> = grid.methods.iter().map(|m| m.name()).collect();
            if grid.select_k {
                names.push("select_k");
            }
            return names.into_iter().map(|method| Run { method, value: Err(e.to_string()) }).collect();
        }
    };
    let mut runs: Vec<Run> = grid
        .methods
        .iter()
        .map(|&m| Run {
            method: m.name(),
            value: run_method(m, &data.sample, &data.labels, cell.k_star, algo).map_err(|e| e.to_string()),
        })
        .collect();
    if grid.select_k {
        let chosen = select_k(&data.sample, grid.k_max, grid.rho, &algo.kmeans(1));
        runs.push(Run { method: "select_k", value: chosen.map(|(r, _)| r.chosen_k as f64).map_err(|e| e.to_string()) });
    }
    runs
}

fn write_record<I: IntoIterator<Item = T>, T: AsRef<[u8]>>(writer: &mut csv::Writer<Vec<u8>>, row: I) {
    writer.write_record(row).expect("in-memory writer");
}

fn mean_sd(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 { (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    Some((mean, sd))
}

/// Writes `replicates.csv` (one row per replicate and method), `table.csv`
/// (mean and sample SD of the ARI per cell and method) and, when the grid
/// asks for it, `selection.csv` (fraction of replicates choosing `K*`).
pub fn replicate(args: &ReplicateArgs) -> Result<()> {
    let grid = ExperimentGrid::read(&args.config)?;
    let generator = generator_name(grid.generator);
    let mut long = csv::Writer::from_writer(Vec::new());
    write_record(&mut long, ["generator", "n", "tau", "k_star", "replicate", "data_seed", "method", "value", "status"]);
    let mut table = String::from("generator,n,tau,k_star");
    for m in &grid.methods {
        write!(table, ",{0}_mean,{0}_sd,{0}_failed", m.name()).unwrap();
    }
    table.push('\n');
    let mut selection = String::from("generator,n,tau,k_star,rate,selected,replicates,failed\n");
    for cell in grid.cells() {
        let runs: Vec<Vec<Run>> = (0..grid.replicates).map(|rep| replicate_runs(&grid, &cell, rep, &args.algo)).collect();
        for (rep, rs) in runs.iter().enumerate() {
            for r in rs {
                let (value, status) = match &r.value {
                    Ok(v) => (v.to_string(), "ok".to_string()),
                    Err(e) => (String::new(), format!("failed: {e}")),
                };
                let row = [
                    generator.to_string(),
                    cell.n.to_string(),
                    cell.tau.to_string(),
                    cell.k_star.to_string(),
                    rep.to_string(),
                    grid.data_seed(&cell, rep).to_string(),
                    r.method.to_string(),
                    value,
                    status,
                ];
                write_record(&mut long, row);
            }
        }
        let column = |name: &str| -> (Vec<f64>, usize) {
            let all: Vec<&Run> = runs.iter().flatten().filter(|r| r.method == name).collect();
            let ok: Vec<f64> = all.iter().filter_map(|r| r.value.as_ref().ok().copied()).collect();
            let failed = all.len() - ok.len();
            (ok, failed)
        };
        write!(table, "{generator},{},{},{}", cell.n, cell.tau, cell.k_star).unwrap();
        for m in &grid.methods {
            let (ok, failed) = column(m.name());
            match mean_sd(&ok) {
                Some((mean, sd)) => write!(table, ",{mean},{sd},{failed}").unwrap(),
                None => write!(table, ",NA,NA,{failed}").unwrap(),
            }
        }
        table.push('\n');
        if grid.select_k {
            let (ok, failed) = column("select_k");
            let selected = ok.iter().filter(|&&k| k as usize == cell.k_star).count();
            let rate = if ok.is_empty() { "NA".to_string() } else { (selected as f64 / ok.len() as f64).to_string() };
            writeln!(selection, "{generator},{},{},{},{rate},{selected},{},{failed}", cell.n, cell.tau, cell.k_star, ok.len())
                .unwrap();
        }
        println!("cell {} (N={}, tau={}, K*={}) done", cell.index + 1, cell.n, cell.tau, cell.k_star);
    }
    let long = String::from_utf8(long.into_inner().expect("in-memory writer")).expect("utf-8 fields");
    write_text(&args.out.join("replicates.csv"), &long)?;
    write_text(&args.out.join("table.csv"), &table)?;
    if grid.select_k {
        write_text(&args.out.join("selection.csv"), &selection)?;
    }
    print!("{table}");
    Ok(())
}

pub fn summarize(args: &SummarizeArgs) -> Result<()> {
    let file = SampleFile::read(&args.input)?;
    let n = file.sample.len();
    let labels = match (&args.labels, args.single_group) {
        (Some(path), _) => read_labels_csv(path, n)?,
        (None, false) => file.labels.clone().unwrap_or_else(|| vec![0; n]),
        (None, true) => vec![0; n],
    };
    let groups = labels.iter().max().map_or(0, |m| m + 1);
    for g in 0..groups {
        let members: Vec<&Func> = labels.iter().zip(file.sample.funcs()).filter(|(&l, _)| l == g).map(|(_, f)| f).collect();
        if members.is_empty() {
            continue;
        }
        let stem = format!("group{}", g + 1);
        let title = if groups > 1 { format!("group {}", g + 1) } else { "sample".to_string() };
        if let Some(widths) = write_band(&args.out, &stem, &title, &members, args.n_sd)? {
            println!("group {} (n={}): max band width {:?}", g + 1, members.len(), widths);
        }
    }
    Ok(())
}

pub fn import(args: &ImportArgs) -> Result<()> {
    let path = &args.input;
    if args.dim == 0 {
        return Err(CliError::Config("--dim must be ≥ 1".into()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(args.has_header)
        .from_path(path)
        .map_err(|e| CliError::format(path, e.to_string()))?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::format(path, e.to_string()))?;
        let row = record
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| CliError::format(path, format!("row {}: {e}", i + 1)))?;
        rows.push(row);
    }
    let width = rows.first().map(Vec::len).ok_or_else(|| CliError::format(path, "no data rows"))?;
    let values = width - usize::from(args.label_column);
    if values == 0 || values % args.dim != 0 {
        return Err(CliError::format(path, format!("{values} value columns do not split into {} coordinates", args.dim)));
    }
    let t = values / args.dim;
    let grid = Grid::uniform(t)?;
    let mut funcs = Vec::with_capacity(rows.len());
    let mut labels = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        if args.label_column {
            let l = row[values];
            if !(l >= 1.0 && l.fract() == 0.0) {
                return Err(CliError::format(path, format!("row {}: label must be a positive integer", i + 1)));
            }
            labels.push(l as usize - 1);
        }
        let mut v = vec![0.0; values];
        for d in 0..args.dim {
            for j in 0..t {
                v[j * args.dim + d] = row[d * t + j];
            }
        }
        funcs.push(Func::new(grid.clone(), args.dim, v).map_err(|e| CliError::format(path, format!("row {}: {e}", i + 1)))?);
    }
    let sample = FunctionSample::new(funcs)?;
    SampleFile::new(sample, args.label_column.then_some(labels))?.write(&args.out)?;
    println!("imported {} functions (T={t}, m={}) to {}", rows.len(), args.dim, args.out.display());
    Ok(())
}
