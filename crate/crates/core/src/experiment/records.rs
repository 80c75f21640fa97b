//! Persisted run outputs: full JSON results and one-line CSV records.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::grid::{Arm, GaSettings, RunConfig};
use crate::knn_avg::EvaluationHistory;
use crate::metrics::MetricReport;
use crate::nsga2::GenerationStats;
use crate::problems::ZdtVariant;
use crate::solution::Solution;

/// Complete outcome of one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunResult {
    pub fingerprint: String,
    pub config: RunConfig,
    pub seed: u64,
    /// Final non-dominated set with variables, raw and reported objectives.
    pub final_set: Vec<Solution>,
    pub report: MetricReport,
    pub trace: Vec<GenerationStats>,
    pub duration_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub history: Option<EvaluationHistory>,
}

impl RunResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses a run file and checks that it is internally consistent.
    pub fn from_json(text: &str) -> Result<Self> {
        let run: RunResult = serde_json::from_str(text)?;
        if run.config.seed != run.seed {
            return Err(Error::contract("run file seed disagrees with its config"));
        }
        if run.config.fingerprint() != run.fingerprint {
            return Err(Error::contract(format!(
                "run file fingerprint {} does not match its config ({})",
                run.fingerprint,
                run.config.fingerprint()
            )));
        }
        if let Some(h) = &run.history {
            if h.n_vars().is_some_and(|n| n != run.config.n_vars) {
                return Err(Error::contract("history variable count disagrees with the config"));
            }
        }
        Ok(run)
    }

    pub fn record(&self) -> RunRecord {
        RunRecord::new(&self.config, &self.report, self.final_set.len(), self.duration_ms)
    }

    pub fn write_history_csv<W: Write>(&self, out: W) -> Result<()> {
        match &self.history {
            Some(h) => h.write_csv(out),
            None => Err(Error::contract(format!(
                "run {} was stored without its evaluation history",
                self.fingerprint
            ))),
        }
    }
}

/// One CSV row per run: configuration columns followed by metric columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub fingerprint: String,
    pub problem: ZdtVariant,
    pub n_vars: usize,
    pub sigma: f64,
    pub pop_size: usize,
    pub generations: usize,
    pub arm: String,
    pub k: usize,
    pub max_dist: Option<f64>,
    pub repetition: u32,
    pub seed: u64,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    pub eta_crossover: f64,
    pub eta_mutation: f64,
    pub ref_f1: f64,
    pub ref_f2: f64,
    pub front_size: usize,
    pub final_size: usize,
    pub hv: f64,
    pub igd: f64,
    pub delta_f: f64,
    pub duration_ms: u64,
}

impl RunRecord {
    pub fn new(config: &RunConfig, report: &MetricReport, final_size: usize, duration_ms: u64) -> Self {
        let arm = match config.arm {
            Arm::Baseline => "baseline",
            Arm::Knn { .. } => "knn",
        };
        Self {
            fingerprint: config.fingerprint(),
            problem: config.problem,
            n_vars: config.n_vars,
            sigma: config.sigma,
            pop_size: config.pop_size,
            generations: config.generations,
            arm: arm.to_string(),
            k: config.arm.k(),
            max_dist: config.arm.max_dist(),
            repetition: config.repetition,
            seed: config.seed,
            crossover_prob: config.ga.crossover_prob,
            mutation_prob: config.ga.mutation_prob,
            eta_crossover: config.ga.eta_crossover,
            eta_mutation: config.ga.eta_mutation,
            ref_f1: report.reference_point[0],
            ref_f2: report.reference_point[1],
            front_size: report.front_sample_size,
            final_size,
            hv: report.hv_mean_adjusted,
            igd: report.igd_mean_adjusted,
            delta_f: report.delta_f,
            duration_ms,
        }
    }

    pub fn arm(&self) -> Result<Arm> {
        match (self.arm.as_str(), self.max_dist) {
            ("baseline", None) if self.k == 1 => Ok(Arm::Baseline),
            ("knn", Some(max_dist)) => Ok(Arm::Knn { k: self.k, max_dist }),
            _ => Err(Error::contract(format!(
                "record {}: inconsistent arm {:?} with k = {} and max_dist = {:?}",
                self.fingerprint, self.arm, self.k, self.max_dist
            ))),
        }
    }

    pub fn config(&self) -> Result<RunConfig> {
        Ok(RunConfig {
            problem: self.problem,
            n_vars: self.n_vars,
            sigma: self.sigma,
            pop_size: self.pop_size,
            generations: self.generations,
            arm: self.arm()?,
            repetition: self.repetition,
            seed: self.seed,
            ga: GaSettings {
                crossover_prob: self.crossover_prob,
                mutation_prob: self.mutation_prob,
                eta_crossover: self.eta_crossover,
                eta_mutation: self.eta_mutation,
            },
            reference_point: [self.ref_f1, self.ref_f2],
            front_size: self.front_size,
        })
    }

    pub fn report(&self) -> MetricReport {
        MetricReport {
            hv_mean_adjusted: self.hv,
            igd_mean_adjusted: self.igd,
            delta_f: self.delta_f,
            reference_point: [self.ref_f1, self.ref_f2],
            front_sample_size: self.front_size,
        }
    }

    /// Checks the arm columns and that the fingerprint matches the config columns.
    pub fn validate(&self) -> Result<()> {
        let expected = self.config()?.fingerprint();
        if expected != self.fingerprint {
            return Err(Error::contract(format!(
                "record fingerprint {} does not match its columns ({expected})",
                self.fingerprint
            )));
        }
        Ok(())
    }
}

/// Writes records with a header row. Floats use the shortest representation
/// that parses back to the same value.
pub fn write_records<W: Write>(out: W, records: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<records>", e))?;
    Ok(())
}

/// Reads and validates a records CSV.
pub fn read_records<R: Read>(input: R) -> Result<Vec<RunRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    let mut records = Vec::new();
    for row in reader.deserialize::<RunRecord>() {
        let record = row?;
        record.validate()?;
        records.push(record);
    }
    Ok(records)
}

/// Reads the valid prefix of a records CSV that may end in a torn row.
/// Returns the records and the byte offset where the valid prefix ends.
pub(crate) fn read_records_prefix(bytes: &[u8]) -> (Vec<RunRecord>, u64) {
    let mut reader = csv::Reader::from_reader(bytes);
    let mut records = Vec::new();
    let mut valid_end = match reader.byte_headers() {
        Ok(_) => reader.position().byte(),
        Err(_) => return (records, 0),
    };
    let mut row = csv::ByteRecord::new();
    loop {
        match reader.read_byte_record(&mut row) {
            Ok(false) => break,
            Ok(true) => {
                let parsed = row
                    .deserialize::<RunRecord>(reader.byte_headers().ok())
                    .map_err(Error::from)
                    .and_then(|r| r.validate().map(|_| r));
                // a torn final row has no trailing newline
                let complete = (reader.position().byte() as usize)
                    .checked_sub(1)
                    .and_then(|i| bytes.get(i))
                    == Some(&b'\n');
                match parsed {
                    Ok(r) if complete => {
                        records.push(r);
                        valid_end = reader.position().byte();
                    }
                    _ => break,
                }
            }
            Err(_) => break,
        }
    }
    (records, valid_end)
}
