//! Experiment grids, run configurations, fingerprints and seed assignment.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::knn_avg::KnnConfig;
use crate::metrics::{DEFAULT_FRONT_SIZE, DEFAULT_REFERENCE};
use crate::nsga2::{Evaluator, GaConfig};
use crate::problems::ZdtVariant;
use crate::rng::derive_seed;

/// Variation operator settings shared by every run of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaSettings {
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    pub eta_crossover: f64,
    pub eta_mutation: f64,
}

impl Default for GaSettings {
    fn default() -> Self {
        Self {
            crossover_prob: GaConfig::DEFAULT_CROSSOVER_PROB,
            mutation_prob: GaConfig::DEFAULT_MUTATION_PROB,
            eta_crossover: GaConfig::DEFAULT_ETA_CROSSOVER,
            eta_mutation: GaConfig::DEFAULT_ETA_MUTATION,
        }
    }
}

/// The Cartesian product of benchmark and algorithm settings to execute.
///
/// Every `(problem, n_vars, sigma, pop_size)` cell runs the baseline arm plus
/// one kNN arm per `(k, max_dist)` pair, each `repetitions` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentGrid {
    pub problems: Vec<ZdtVariant>,
    pub n_vars: Vec<usize>,
    pub sigmas: Vec<f64>,
    pub pop_sizes: Vec<usize>,
    pub ks: Vec<usize>,
    pub max_dists: Vec<f64>,
    pub repetitions: u32,
    pub generations: usize,
    pub base_seed: u64,
    pub ga: GaSettings,
    pub reference_point: [f64; 2],
    pub front_size: usize,
    /// Persist each run's full result (including history) as JSON.
    pub save_runs: bool,
}

impl Default for ExperimentGrid {
    /// The full benchmark grid: 3 problems, 3 sizes, 5 noise levels,
    /// 2 population sizes, 5 × 5 kNN settings, 30 repetitions.
    fn default() -> Self {
        Self {
            problems: ZdtVariant::ALL.to_vec(),
            n_vars: vec![2, 4, 10],
            sigmas: vec![0.0, 0.05, 0.1, 0.25, 0.5],
            pop_sizes: vec![10, 20],
            ks: vec![10, 25, 50, 100, 1000],
            max_dists: vec![0.25, 0.5, 1.0, 2.0, 4.0],
            repetitions: 30,
            generations: 100,
            base_seed: 2021,
            ga: GaSettings::default(),
            reference_point: DEFAULT_REFERENCE,
            front_size: DEFAULT_FRONT_SIZE,
            save_runs: false,
        }
    }
}

/// On-disk layout of a grid file (TOML). Every key is optional and falls
/// back to [`ExperimentGrid::default`].
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFile {
    #[serde(default)]
    grid: GridSection,
    #[serde(default)]
    ga: Option<GaSettings>,
    #[serde(default)]
    metrics: MetricsSection,
    #[serde(default)]
    output: OutputSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    problems: Option<Vec<String>>,
    n_vars: Option<Vec<usize>>,
    sigmas: Option<Vec<f64>>,
    pop_sizes: Option<Vec<usize>>,
    ks: Option<Vec<usize>>,
    max_dists: Option<Vec<f64>>,
    repetitions: Option<u32>,
    generations: Option<usize>,
    base_seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricsSection {
    reference_point: Option<[f64; 2]>,
    front_size: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    save_runs: Option<bool>,
}

impl ExperimentGrid {
    /// Parses and validates a TOML grid file.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: GridFile = toml::from_str(text)?;
        let d = ExperimentGrid::default();
        let g = file.grid;
        let problems = match g.problems {
            Some(names) => names.iter().map(|n| n.parse()).collect::<Result<Vec<_>>>()?,
            None => d.problems,
        };
        let grid = ExperimentGrid {
            problems,
            n_vars: g.n_vars.unwrap_or(d.n_vars),
            sigmas: g.sigmas.unwrap_or(d.sigmas),
            pop_sizes: g.pop_sizes.unwrap_or(d.pop_sizes),
            ks: g.ks.unwrap_or(d.ks),
            max_dists: g.max_dists.unwrap_or(d.max_dists),
            repetitions: g.repetitions.unwrap_or(d.repetitions),
            generations: g.generations.unwrap_or(d.generations),
            base_seed: g.base_seed.unwrap_or(d.base_seed),
            ga: file.ga.unwrap_or(d.ga),
            reference_point: file.metrics.reference_point.unwrap_or(d.reference_point),
            front_size: file.metrics.front_size.unwrap_or(d.front_size),
            save_runs: file.output.save_runs.unwrap_or(d.save_runs),
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        let empty = [
            ("problems", self.problems.is_empty()),
            ("n_vars", self.n_vars.is_empty()),
            ("sigmas", self.sigmas.is_empty()),
            ("pop_sizes", self.pop_sizes.is_empty()),
            ("ks", self.ks.is_empty()),
            ("max_dists", self.max_dists.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::contract(format!("grid dimension `{name}` is empty")));
        }
        if let Some(n) = self.n_vars.iter().find(|&&n| n < 2) {
            return Err(Error::contract(format!("n_vars must be >= 2, got {n}")));
        }
        if let Some(s) = self.sigmas.iter().find(|s| !(**s >= 0.0) || !s.is_finite()) {
            return Err(Error::contract(format!("sigma must be finite and >= 0, got {s}")));
        }
        for &k in &self.ks {
            for &md in &self.max_dists {
                KnnConfig::new(k, md)?;
            }
        }
        for &p in &self.pop_sizes {
            self.ga_config(p)?;
        }
        if self.repetitions == 0 {
            return Err(Error::contract("repetitions must be at least 1"));
        }
        if self.generations == 0 {
            return Err(Error::contract("generations must be at least 1"));
        }
        if self.front_size < 2 {
            return Err(Error::contract("front_size must be at least 2"));
        }
        if self.reference_point.iter().any(|r| !r.is_finite()) {
            return Err(Error::contract("reference point must be finite"));
        }
        Ok(())
    }

    fn ga_config(&self, pop_size: usize) -> Result<GaConfig> {
        GaConfig {
            pop_size,
            generations: self.generations,
            crossover_prob: self.ga.crossover_prob,
            mutation_prob: self.ga.mutation_prob,
            eta_crossover: self.ga.eta_crossover,
            eta_mutation: self.ga.eta_mutation,
        }
        .validated()
    }

    pub fn cell_count(&self) -> u128 {
        [self.problems.len(), self.n_vars.len(), self.sigmas.len(), self.pop_sizes.len()]
            .iter()
            .map(|&n| n as u128)
            .product()
    }

    /// kNN runs only (one per cell, setting and repetition).
    pub fn knn_run_count(&self) -> u128 {
        self.cell_count() * (self.ks.len() * self.max_dists.len()) as u128 * u128::from(self.repetitions)
    }

    /// Baseline runs only (one per cell and repetition).
    pub fn baseline_run_count(&self) -> u128 {
        self.cell_count() * u128::from(self.repetitions)
    }

    pub fn run_count(&self) -> u128 {
        self.knn_run_count() + self.baseline_run_count()
    }
}

/// The algorithm variant of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Arm {
    /// Plain noisy evaluation (equivalent to `k = 1`).
    Baseline,
    Knn { k: usize, max_dist: f64 },
}

impl Arm {
    pub fn evaluator(&self) -> Result<Evaluator> {
        Ok(match *self {
            Arm::Baseline => Evaluator::PlainNoisy,
            Arm::Knn { k, max_dist } => Evaluator::KnnAveraged(KnnConfig::new(k, max_dist)?),
        })
    }

    /// `k` as reported in tables; the baseline counts as `k = 1`.
    pub fn k(&self) -> usize {
        match *self {
            Arm::Baseline => 1,
            Arm::Knn { k, .. } => k,
        }
    }

    pub fn max_dist(&self) -> Option<f64> {
        match *self {
            Arm::Baseline => None,
            Arm::Knn { max_dist, .. } => Some(max_dist),
        }
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arm::Baseline => f.write_str("baseline"),
            Arm::Knn { k, max_dist } => write!(f, "knn({k}, {max_dist})"),
        }
    }
}

/// Identifies a benchmark cell independently of the algorithm arm, so all
/// arms of one cell share seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    pub problem: ZdtVariant,
    pub n_vars: usize,
    pub sigma: f64,
    pub pop_size: usize,
    pub generations: usize,
}

impl CellKey {
    pub fn canonical(&self) -> String {
        format!(
            "problem={};n_vars={};sigma={};pop={};gens={}",
            self.problem, self.n_vars, self.sigma, self.pop_size, self.generations
        )
    }
}

impl fmt::Display for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}(n={}, sigma={}, pop={}, gens={})",
            self.problem, self.n_vars, self.sigma, self.pop_size, self.generations
        )
    }
}

fn sha256_u64(text: &str) -> u64 {
    let digest = Sha256::digest(text.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_be_bytes(bytes)
}

/// Seed of repetition `rep` in a cell:
/// `derive_seed(base_seed, [first 8 bytes of SHA-256(cell), rep])`.
pub fn cell_seed(base_seed: u64, cell: &CellKey, rep: u32) -> u64 {
    derive_seed(base_seed, &[sha256_u64(&cell.canonical()), u64::from(rep)])
}

/// Everything needed to execute one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub problem: ZdtVariant,
    pub n_vars: usize,
    pub sigma: f64,
    pub pop_size: usize,
    pub generations: usize,
    pub arm: Arm,
    pub repetition: u32,
    pub seed: u64,
    pub ga: GaSettings,
    pub reference_point: [f64; 2],
    pub front_size: usize,
}

impl RunConfig {
    pub fn cell(&self) -> CellKey {
        CellKey {
            problem: self.problem,
            n_vars: self.n_vars,
            sigma: self.sigma,
            pop_size: self.pop_size,
            generations: self.generations,
        }
    }

    pub fn ga_config(&self) -> Result<GaConfig> {
        GaConfig {
            pop_size: self.pop_size,
            generations: self.generations,
            crossover_prob: self.ga.crossover_prob,
            mutation_prob: self.ga.mutation_prob,
            eta_crossover: self.ga.eta_crossover,
            eta_mutation: self.ga.eta_mutation,
        }
        .validated()
    }

    /// 16 hex digits of SHA-256 over the canonical description of the run.
    pub fn fingerprint(&self) -> String {
        let arm = match self.arm {
            Arm::Baseline => "baseline".to_string(),
            Arm::Knn { k, max_dist } => format!("knn:{k}:{max_dist}"),
        };
        let text = format!(
            "{};arm={arm};rep={};seed={};cx={};mut={};eta_c={};eta_m={};ref={},{};front={}",
            self.cell().canonical(),
            self.repetition,
            self.seed,
            self.ga.crossover_prob,
            self.ga.mutation_prob,
            self.ga.eta_crossover,
            self.ga.eta_mutation,
            self.reference_point[0],
            self.reference_point[1],
            self.front_size,
        );
        format!("{:016x}", sha256_u64(&text))
    }
}

/// All runs of `grid` in a fixed order: problems, n_vars, sigmas,
/// pop_sizes, then arms (baseline first, then ks × max_dists), then
/// repetitions.
pub fn expand_grid(grid: &ExperimentGrid) -> Result<Vec<RunConfig>> {
    grid.validate()?;
    let mut arms = vec![Arm::Baseline];
    for &k in &grid.ks {
        for &max_dist in &grid.max_dists {
            arms.push(Arm::Knn { k, max_dist });
        }
    }
    let total = usize::try_from(grid.run_count())
        .map_err(|_| Error::contract("grid is too large to expand"))?;
    let mut runs = Vec::with_capacity(total.min(1 << 20));
    for &problem in &grid.problems {
        for &n_vars in &grid.n_vars {
            for &sigma in &grid.sigmas {
                for &pop_size in &grid.pop_sizes {
                    let cell = CellKey {
                        problem,
                        n_vars,
                        sigma,
                        pop_size,
                        generations: grid.generations,
                    };
                    for &arm in &arms {
                        for repetition in 0..grid.repetitions {
                            runs.push(RunConfig {
                                problem,
                                n_vars,
                                sigma,
                                pop_size,
                                generations: grid.generations,
                                arm,
                                repetition,
                                seed: cell_seed(grid.base_seed, &cell, repetition),
                                ga: grid.ga,
                                reference_point: grid.reference_point,
                                front_size: grid.front_size,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(runs)
}
