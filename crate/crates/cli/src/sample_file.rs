//! Sample files: UTF-8 CSV with a `#`-prefixed JSON header line, the grid
//! as the first data row, then one row per function holding the `T·m`
//! values dimension by dimension (all of coordinate 0, then coordinate 1,
//! ...). When the header says `"labels": true`, each function row ends with
//! a 1-based cluster label.
//!
//! Values are written with Rust's shortest round-trip formatting, so reading
//! back a written file reproduces every finite value exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use elastic_kmeans::{Func, FunctionSample, Grid};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub version: u32,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub m: usize,
    #[serde(default)]
    pub labels: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleFile {
    pub sample: FunctionSample,
    /// 0-based in memory, 1-based on disk.
    pub labels: Option<Vec<usize>>,
}

impl SampleFile {
    pub fn new(sample: FunctionSample, labels: Option<Vec<usize>>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != sample.len() {
                return Err(CliError::Config(format!("{} labels for {} functions", l.len(), sample.len())));
            }
        }
        Ok(Self { sample, labels })
    }

    pub fn header(&self) -> Header {
        Header {
            version: FORMAT_VERSION,
            n: self.sample.len(),
            t: self.sample.grid().len(),
            m: self.sample.dim(),
            labels: self.labels.is_some(),
        }
    }

    pub fn to_csv(&self) -> String {
        let header = serde_json::to_string(&self.header()).expect("header serializes");
        let mut out = format!("# {header}\n");
        push_row(&mut out, self.sample.grid().points().iter().copied(), None);
        for (i, f) in self.sample.funcs().iter().enumerate() {
            let values = (0..f.dim()).flat_map(|d| f.component(d));
            push_row(&mut out, values, self.labels.as_ref().map(|l| l[i] + 1));
        }
        out
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let bad = |message: String| CliError::format(path, message);
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let first = lines.next().ok_or_else(|| bad("empty file".into()))?;
        let json = first.strip_prefix('#').ok_or_else(|| bad("missing `#` header line".into()))?;
        let header: Header = serde_json::from_str(json.trim()).map_err(|e| bad(format!("header: {e}")))?;
        if header.version != FORMAT_VERSION {
            return Err(bad(format!("unsupported format version {}", header.version)));
        }
        if header.m == 0 {
            return Err(bad("m must be ≥ 1".into()));
        }
        let points = parse_row(lines.next().ok_or_else(|| bad("missing grid row".into()))?)
            .map_err(|e| bad(format!("grid row: {e}")))?;
        if points.len() != header.t {
            return Err(bad(format!("grid row has {} values, header says T={}", points.len(), header.t)));
        }
        let grid = Grid::new(points).map_err(|e| bad(format!("grid row: {e}")))?;
        let width = header.t * header.m + usize::from(header.labels);
        let mut funcs = Vec::with_capacity(header.n);
        let mut labels = Vec::new();
        for (i, line) in lines.enumerate() {
            let row = parse_row(line).map_err(|e| bad(format!("function {}: {e}", i + 1)))?;
            if row.len() != width {
                return Err(bad(format!("function {} has {} columns, expected {width}", i + 1, row.len())));
            }
            if header.labels {
                let label = row[width - 1];
                if !(label >= 1.0 && label.fract() == 0.0) {
                    return Err(bad(format!("function {}: label must be a positive integer", i + 1)));
                }
                labels.push(label as usize - 1);
            }
            let mut values = vec![0.0; header.t * header.m];
            for d in 0..header.m {
                for j in 0..header.t {
                    values[j * header.m + d] = row[d * header.t + j];
                }
            }
            funcs.push(Func::new(grid.clone(), header.m, values).map_err(|e| bad(format!("function {}: {e}", i + 1)))?);
        }
        if funcs.len() != header.n {
            return Err(bad(format!("found {} functions, header says N={}", funcs.len(), header.n)));
        }
        let sample = FunctionSample::new(funcs).map_err(|e| bad(e.to_string()))?;
        Ok(Self { sample, labels: header.labels.then_some(labels) })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &self.to_csv())
    }
}

fn push_row(out: &mut String, values: impl Iterator<Item = f64>, label: Option<usize>) {
    for (j, v) in values.enumerate() {
        if j > 0 {
            out.push(',');
        }
        write!(out, "{v}").unwrap();
    }
    if let Some(l) = label {
        write!(out, ",{l}").unwrap();
    }
    out.push('\n');
}

fn parse_row(line: &str) -> std::result::Result<Vec<f64>, String> {
    line.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| format!("`{}` is not a number", s.trim())))
        .collect()
}

/// Writes `text`, creating parent directories as needed.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}
