//! Verdict tables comparing every kNN setting against the baseline.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiment::grid::{Arm, CellKey, RunConfig};
use crate::experiment::records::RunRecord;
use crate::stats::{vargha_delaney_a12, verdict_from_samples, ComparisonVerdict, Metric, Verdict, MIN_PAIRS};

/// Which runs a table pools.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scope {
    Sigma(f64),
    /// Every noise level above zero.
    AllNoisy,
}

impl Scope {
    pub fn label(&self) -> String {
        match self {
            Scope::Sigma(s) => format!("sigma = {s}"),
            Scope::AllNoisy => "all sigma > 0".to_string(),
        }
    }

    fn key(&self) -> String {
        match self {
            Scope::Sigma(s) => s.to_string(),
            Scope::AllNoisy => "all".to_string(),
        }
    }

    fn contains(&self, sigma: f64) -> bool {
        match *self {
            Scope::Sigma(s) => s == sigma,
            Scope::AllNoisy => sigma > 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerdictRow {
    pub k: usize,
    pub max_dist: f64,
    /// One verdict per entry of [`Metric::ALL`].
    pub verdicts: Vec<ComparisonVerdict>,
}

impl VerdictRow {
    pub fn get(&self, metric: Metric) -> &ComparisonVerdict {
        self.verdicts.iter().find(|v| v.metric == metric).expect("every metric is present")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerdictTable {
    pub scope: Scope,
    pub rows: Vec<VerdictRow>,
}

impl VerdictTable {
    pub fn row(&self, k: usize, max_dist: f64) -> Option<&VerdictRow> {
        self.rows.iter().find(|r| r.k == k && r.max_dist == max_dist)
    }
}

/// Per-arm mean indicators for one cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub problem: String,
    pub n_vars: usize,
    pub sigma: f64,
    pub pop_size: usize,
    pub generations: usize,
    pub arm: String,
    pub k: usize,
    pub max_dist: Option<f64>,
    pub runs: usize,
    pub hv_mean: f64,
    pub igd_mean: f64,
    pub delta_f_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub alpha: f64,
    /// One table per noise level in ascending order, then the pooled table
    /// (present only when some noise level is above zero).
    pub tables: Vec<VerdictTable>,
    pub summary: Vec<SummaryRow>,
    /// Runs in input order, for plotting metric triples by setting.
    pub runs: Vec<RunRecord>,
}

impl Report {
    pub fn table(&self, scope: Scope) -> Option<&VerdictTable> {
        self.tables.iter().find(|t| t.scope == scope)
    }
}

/// Record indices by seed, for each arm of a cell (`None` is the baseline).
type ArmRuns = BTreeMap<Option<(usize, u64)>, BTreeMap<u64, usize>>;

struct Pair<'a> {
    knn: &'a RunRecord,
    baseline: &'a RunRecord,
}

fn arm_key(arm: Arm) -> Option<(usize, u64)> {
    match arm {
        Arm::Baseline => None,
        Arm::Knn { k, max_dist } => Some((k, max_dist.to_bits())),
    }
}

/// Builds verdict tables from run records.
///
/// Runs are paired by cell and repetition: each kNN run is matched with
/// the baseline run of the same cell and seed. Every cell needs a baseline,
/// and every kNN setting present anywhere needs a run for each baseline
/// repetition of every cell.
pub fn report(records: &[RunRecord], alpha: f64) -> Result<Report> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::contract(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if records.is_empty() {
        return Err(Error::contract("no run records to report on"));
    }
    let mut configs = Vec::with_capacity(records.len());
    for r in records {
        r.validate()?;
        configs.push(r.config()?);
    }

    // cells keyed by canonical text, each with its arms and seeds
    let mut cells: BTreeMap<String, (CellKey, ArmRuns)> = BTreeMap::new();
    let mut settings: BTreeMap<(usize, u64), f64> = BTreeMap::new();
    for (i, c) in configs.iter().enumerate() {
        let cell = c.cell();
        let entry = cells.entry(cell.canonical()).or_insert_with(|| (cell, BTreeMap::new()));
        let by_seed = entry.1.entry(arm_key(c.arm)).or_default();
        if by_seed.insert(c.seed, i).is_some() {
            return Err(Error::contract(format!(
                "duplicate run {} for {} in cell {}",
                records[i].fingerprint, c.arm, entry.0
            )));
        }
        if let Arm::Knn { k, max_dist } = c.arm {
            settings.insert((k, max_dist.to_bits()), max_dist);
        }
    }

    let mut missing = Vec::new();
    for (cell, arms) in cells.values() {
        let Some(baseline) = arms.get(&None) else {
            return Err(Error::contract(format!("cell {cell} has no baseline runs")));
        };
        for (&(k, bits), &max_dist) in &settings {
            let runs = arms.get(&Some((k, bits)));
            for (&seed, &bi) in baseline {
                if runs.is_none_or(|r| !r.contains_key(&seed)) {
                    let expected = RunConfig {
                        arm: Arm::Knn { k, max_dist },
                        ..configs[bi].clone()
                    };
                    missing.push(format!("{} ({} in {cell})", expected.fingerprint(), expected.arm));
                }
            }
            if let Some(runs) = runs {
                if let Some((_, &i)) = runs.iter().find(|(s, _)| !baseline.contains_key(s)) {
                    return Err(Error::contract(format!(
                        "run {} in cell {cell} has no baseline run with seed {}",
                        records[i].fingerprint, configs[i].seed
                    )));
                }
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::contract(format!(
            "{} kNN runs are missing: {}",
            missing.len(),
            missing.join(", ")
        )));
    }

    let mut sigmas: Vec<f64> = cells.values().map(|(c, _)| c.sigma).collect();
    sigmas.sort_by(f64::total_cmp);
    sigmas.dedup();
    let mut scopes: Vec<Scope> = sigmas.iter().map(|&s| Scope::Sigma(s)).collect();
    if sigmas.iter().any(|&s| s > 0.0) {
        scopes.push(Scope::AllNoisy);
    }

    let mut tables = Vec::with_capacity(scopes.len());
    for scope in scopes {
        let mut rows = Vec::with_capacity(settings.len());
        for (&(k, bits), &max_dist) in &settings {
            let mut pairs = Vec::new();
            for (cell, arms) in cells.values() {
                if !scope.contains(cell.sigma) {
                    continue;
                }
                let baseline = &arms[&None];
                for (seed, &i) in &arms[&Some((k, bits))] {
                    pairs.push(Pair {
                        knn: &records[i],
                        baseline: &records[baseline[seed]],
                    });
                }
            }
            let verdicts = Metric::ALL
                .iter()
                .map(|&m| compare_pairs(&pairs, k, max_dist, m, alpha))
                .collect::<Result<Vec<_>>>()?;
            rows.push(VerdictRow { k, max_dist, verdicts });
        }
        tables.push(VerdictTable { scope, rows });
    }

    let mut summary = Vec::new();
    for (cell, arms) in cells.values() {
        for runs in arms.values() {
            let rs: Vec<&RunRecord> = runs.values().map(|&i| &records[i]).collect();
            let n = rs.len() as f64;
            let first = rs[0];
            summary.push(SummaryRow {
                problem: cell.problem.to_string(),
                n_vars: cell.n_vars,
                sigma: cell.sigma,
                pop_size: cell.pop_size,
                generations: cell.generations,
                arm: first.arm.clone(),
                k: first.k,
                max_dist: first.max_dist,
                runs: rs.len(),
                hv_mean: rs.iter().map(|r| r.hv).sum::<f64>() / n,
                igd_mean: rs.iter().map(|r| r.igd).sum::<f64>() / n,
                delta_f_mean: rs.iter().map(|r| r.delta_f).sum::<f64>() / n,
            });
        }
    }

    Ok(Report {
        alpha,
        tables,
        summary,
        runs: records.to_vec(),
    })
}

fn compare_pairs(pairs: &[Pair<'_>], k: usize, max_dist: f64, metric: Metric, alpha: f64) -> Result<ComparisonVerdict> {
    let knn: Vec<f64> = pairs.iter().map(|p| metric.of(&p.knn.report())).collect();
    let base: Vec<f64> = pairs.iter().map(|p| metric.of(&p.baseline.report())).collect();
    if knn.len() < MIN_PAIRS {
        let a12 = if knn.is_empty() { 0.5 } else { vargha_delaney_a12(&knn, &base)? };
        return Ok(ComparisonVerdict {
            metric,
            k,
            max_dist,
            p_value: 1.0,
            a12,
            verdict: Verdict::Equivalent,
            pairs: knn.len(),
            insufficient_data: true,
        });
    }
    verdict_from_samples(&knn, &base, k, max_dist, metric, alpha)
}

/// Aligned text rendering: rows `knn(k, MD)`, columns HV, IGD, DeltaF,
/// cells ✓ (better), ≡ (no significant difference), ✗ (worse). A trailing
/// `*` marks a verdict based on too few non-zero differences.
pub fn render_table(table: &VerdictTable) -> String {
    let labels: Vec<String> = table.rows.iter().map(|r| format!("knn({}, {})", r.k, r.max_dist)).collect();
    let width = labels.iter().map(|l| l.chars().count()).max().unwrap_or(0).max(7);
    let mut out = String::new();
    let _ = writeln!(out, "{}", table.scope.label());
    let _ = write!(out, "{:width$}", "setting");
    for m in Metric::ALL {
        let _ = write!(out, "  {:>6}", m.label());
    }
    out.push('\n');
    for (row, label) in table.rows.iter().zip(&labels) {
        let _ = write!(out, "{label:width$}");
        for m in Metric::ALL {
            let v = row.get(m);
            let mark = format!("{}{}", v.verdict.symbol(), if v.insufficient_data { "*" } else { "" });
            let _ = write!(out, "  {mark:>6}");
        }
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct VerdictCsvRow<'a> {
    table: String,
    k: usize,
    max_dist: f64,
    metric: &'a str,
    verdict: &'a str,
    p_value: f64,
    a12: f64,
    pairs: usize,
    insufficient_data: bool,
    alpha: f64,
    zero_differences: &'a str,
}

#[derive(Serialize)]
struct PairplotRow<'a> {
    setting: String,
    problem: String,
    n_vars: usize,
    sigma: f64,
    pop_size: usize,
    repetition: u32,
    fingerprint: &'a str,
    hv: f64,
    igd: f64,
    delta_f: f64,
}

pub const VERDICTS_CSV: &str = "verdicts.csv";
pub const VERDICTS_TXT: &str = "verdicts.txt";
pub const PAIRPLOT_CSV: &str = "pairplot.csv";
pub const SUMMARY_CSV: &str = "summary.csv";

impl Report {
    pub fn render(&self) -> String {
        let mut out = format!("alpha = {}\n\n", self.alpha);
        for t in &self.tables {
            out.push_str(&render_table(t));
            out.push('\n');
        }
        out
    }

    pub fn verdicts_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for t in &self.tables {
            for row in &t.rows {
                for v in &row.verdicts {
                    w.serialize(VerdictCsvRow {
                        table: t.scope.key(),
                        k: row.k,
                        max_dist: row.max_dist,
                        metric: v.metric.label(),
                        verdict: v.verdict.as_str(),
                        p_value: v.p_value,
                        a12: v.a12,
                        pairs: v.pairs,
                        insufficient_data: v.insufficient_data,
                        alpha: self.alpha,
                        zero_differences: "excluded",
                    })?;
                }
            }
        }
        into_string(w)
    }

    pub fn pairplot_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.runs {
            let setting = match r.max_dist {
                Some(md) => format!("knn({}, {md})", r.k),
                None => "baseline".to_string(),
            };
            w.serialize(PairplotRow {
                setting,
                problem: r.problem.to_string(),
                n_vars: r.n_vars,
                sigma: r.sigma,
                pop_size: r.pop_size,
                repetition: r.repetition,
                fingerprint: &r.fingerprint,
                hv: r.hv,
                igd: r.igd,
                delta_f: r.delta_f,
            })?;
        }
        into_string(w)
    }

    pub fn summary_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for s in &self.summary {
            w.serialize(s)?;
        }
        into_string(w)
    }

    /// Writes `verdicts.csv`, `verdicts.txt`, `pairplot.csv` and `summary.csv`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let files = [
            (VERDICTS_CSV, self.verdicts_csv()?),
            (VERDICTS_TXT, self.render()),
            (PAIRPLOT_CSV, self.pairplot_csv()?),
            (SUMMARY_CSV, self.summary_csv()?),
        ];
        for (name, text) in files {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

fn into_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::io("<csv buffer>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
