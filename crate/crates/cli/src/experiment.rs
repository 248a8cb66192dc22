//! Experiment grids: every combination of `N`, `τ` and `K*` is a cell, and
//! each cell is replicated with its own data seed.

use std::path::Path;

use elastic_kmeans::simulation::{generate_sim1, generate_sim2, LabeledSample, NoiseScale, SimConfig, DEFAULT_GRID_LEN};
use serde::{Deserialize, Serialize};

use crate::args::Generator;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Elastic k-means with `K = K*`.
    Elastic,
    /// Euclidean k-means on the raw functions.
    EuclidRaw,
    /// Euclidean k-means after aligning the whole sample to one template.
    EuclidAligned,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Elastic, Method::EuclidRaw, Method::EuclidAligned];

    pub fn name(self) -> &'static str {
        match self {
            Method::Elastic => "elastic",
            Method::EuclidRaw => "euclid_raw",
            Method::EuclidAligned => "euclid_aligned",
        }
    }
}

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

fn default_rho() -> f64 {
    0.95
}

fn default_k_max() -> usize {
    6
}

fn default_grid_len() -> usize {
    DEFAULT_GRID_LEN
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentGrid {
    pub generator: Generator,
    pub n: Vec<usize>,
    pub tau: Vec<f64>,
    pub k_star: Vec<usize>,
    pub replicates: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    /// Also run BIC selection of `K` on every replicate.
    #[serde(default)]
    pub select_k: bool,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    /// Base of the per-replicate data seeds.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_grid_len")]
    pub grid_len: usize,
    #[serde(default)]
    pub noise_scale: NoiseScale,
}

/// Keeps data seeds of different cells apart.
pub const MAX_REPLICATES: usize = 1_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub n: usize,
    pub tau: f64,
    pub k_star: usize,
}

impl ExperimentGrid {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let grid: Self = serde_json::from_str(&text).map_err(|e| CliError::format(path, e.to_string()))?;
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n.is_empty() || self.tau.is_empty() || self.k_star.is_empty() {
            return Err(CliError::Config("n, tau and k_star lists must be non-empty".into()));
        }
        if self.replicates == 0 || self.replicates > MAX_REPLICATES {
            return Err(CliError::Config(format!("replicates must be in 1..={MAX_REPLICATES}")));
        }
        if self.methods.is_empty() && !self.select_k {
            return Err(CliError::Config("nothing to run: no methods and select_k is off".into()));
        }
        if self.select_k && self.k_max == 0 {
            return Err(CliError::Config("k_max must be ≥ 1".into()));
        }
        Ok(())
    }

    /// Cells in row-major order over `(n, tau, k_star)`.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for &n in &self.n {
            for &tau in &self.tau {
                for &k_star in &self.k_star {
                    cells.push(Cell { index: cells.len(), n, tau, k_star });
                }
            }
        }
        cells
    }

    /// Data seed of replicate `rep` in `cell`.
    pub fn data_seed(&self, cell: &Cell, rep: usize) -> u64 {
        self.seed.wrapping_add((MAX_REPLICATES * cell.index + rep) as u64)
    }

    pub fn sim_config(&self, cell: &Cell, rep: usize) -> SimConfig {
        SimConfig {
            grid_len: self.grid_len,
            noise_scale: self.noise_scale,
            ..SimConfig::new(cell.n, cell.tau, cell.k_star, self.data_seed(cell, rep))
        }
    }

    /// File name for replicate `rep` of `cell`, unique within the grid.
    pub fn file_name(&self, cell: &Cell, rep: usize) -> String {
        format!("{}_n{}_tau{}_k{}_r{}.csv", generator_name(self.generator), cell.n, cell.tau, cell.k_star, rep)
    }
}

pub fn generator_name(g: Generator) -> &'static str {
    match g {
        Generator::Sim1 => "sim1",
        Generator::Sim2 => "sim2",
    }
}

pub fn generate(generator: Generator, config: &SimConfig) -> Result<LabeledSample> {
    Ok(match generator {
        Generator::Sim1 => generate_sim1(config)?,
        Generator::Sim2 => generate_sim2(config)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(json: &str) -> std::result::Result<ExperimentGrid, String> {
        let g: ExperimentGrid = serde_json::from_str(json).map_err(|e| e.to_string())?;
        g.validate().map_err(|e| e.to_string())?;
        Ok(g)
    }

    #[test]
    fn defaults_fill_in() {
        let g = grid(r#"{"generator":"sim1","n":[120],"tau":[0.05],"k_star":[2],"replicates":3}"#).unwrap();
        assert_eq!(g.methods, Method::ALL.to_vec());
        assert_eq!((g.rho, g.k_max, g.grid_len), (0.95, 6, DEFAULT_GRID_LEN));
    }

    #[test]
    fn rejects_empty_lists_and_zero_replicates() {
        assert!(grid(r#"{"generator":"sim1","n":[],"tau":[0.05],"k_star":[2],"replicates":3}"#).is_err());
        assert!(grid(r#"{"generator":"sim2","n":[10],"tau":[0.05],"k_star":[2],"replicates":0}"#).is_err());
    }

    #[test]
    fn cells_and_seeds_are_distinct() {
        let g = grid(r#"{"generator":"sim1","n":[10,20],"tau":[0.05,0.1],"k_star":[1,2,3],"replicates":4}"#).unwrap();
        let cells = g.cells();
        assert_eq!(cells.len(), 12);
        let mut seeds: Vec<u64> = cells.iter().flat_map(|c| (0..4).map(|r| g.data_seed(c, r)).collect::<Vec<_>>()).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 48);
    }
}
