//! kNN-averaged fitness evaluation.
//!
//! Every noisy sample drawn during a run is appended to an
//! [`EvaluationHistory`]. When a population is evaluated, its samples are
//! appended first; then each member's reported objectives become the
//! weighted mean of the raw samples of its nearest history records, where
//! "nearest" is measured by the standardized Euclidean distance (SED) over
//! the decision variables:
//!
//! 1. SED from the member to every record, using the per-variable population
//!    variance of the whole history.
//! 2. Records farther than `max_dist` are dropped.
//! 3. The `k` closest survivors are kept. Ties are broken in favour of the
//!    member's own record, then by insertion order.
//! 4. Each neighbour is weighted `max(max_dist - sed², 0)`.
//! 5. Each objective dimension is averaged independently.
//!
//! A just-sampled member is always its own neighbour at distance zero with
//! the largest weight, so `k = 1` reproduces plain noisy evaluation exactly.

use std::io::Write;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solution::Solution;

/// Variances below this are treated as zero: the dimension is dropped from SED.
pub const ZERO_VARIANCE: f64 = 1e-12;

/// How a neighbour's distance turns into its averaging weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightShape {
    /// `max(max_dist - sed², 0)`.
    #[default]
    Squared,
    /// `max(max_dist - sed, 0)`.
    Linear,
    /// Every neighbour weighs 1.
    Uniform,
}

impl WeightShape {
    fn weight(self, sed: f64, max_dist: f64) -> f64 {
        match self {
            WeightShape::Squared => (max_dist - sed * sed).max(0.0),
            WeightShape::Linear => (max_dist - sed).max(0.0),
            WeightShape::Uniform => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnnConfig {
    pub k: usize,
    pub max_dist: f64,
    #[serde(default)]
    pub weight: WeightShape,
}

impl KnnConfig {
    pub fn new(k: usize, max_dist: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::contract("k must be at least 1"));
        }
        if !(max_dist > 0.0) || !max_dist.is_finite() {
            return Err(Error::contract(format!("max_dist must be positive and finite, got {max_dist}")));
        }
        Ok(Self {
            k,
            max_dist,
            weight: WeightShape::Squared,
        })
    }

    pub fn with_weight(mut self, weight: WeightShape) -> Self {
        self.weight = weight;
        self
    }
}

/// Standardized Euclidean distance. Dimensions whose variance is below
/// [`ZERO_VARIANCE`] contribute nothing.
pub fn sed(a: &[f64], b: &[f64], variances: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() != variances.len() {
        return Err(Error::contract(format!(
            "sed needs equal lengths, got {}, {} and {} variances",
            a.len(),
            b.len(),
            variances.len()
        )));
    }
    Ok(sed_unchecked(a, b, variances))
}

#[inline]
fn sed_unchecked(a: &[f64], b: &[f64], variances: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(variances)
        .filter(|(_, &var)| var >= ZERO_VARIANCE)
        .map(|((x, y), var)| (x - y) * (x - y) / var)
        .sum::<f64>()
        .sqrt()
}

/// One sampled point as stored in the history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    pub generation: usize,
    pub variables: Vec<f64>,
    pub raw_objectives: Vec<f64>,
    /// Objectives reported to the search after evaluation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub averaged_objectives: Option<Vec<f64>>,
}

/// A selected neighbour of a history record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub sed: f64,
    pub weight: f64,
}

/// Append-only store of every sample drawn in one run.
///
/// Per-variable means and sums of squared deviations are maintained with
/// Welford's update on every append, so the population variances are
/// always available without a pass over the records.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(try_from = "HistoryData", into = "HistoryData")]
pub struct EvaluationHistory {
    records: Vec<HistoryRecord>,
    means: Vec<f64>,
    sq_devs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct HistoryData {
    records: Vec<HistoryRecord>,
}

impl TryFrom<HistoryData> for EvaluationHistory {
    type Error = Error;

    fn try_from(data: HistoryData) -> Result<Self> {
        let mut history = EvaluationHistory::new();
        for record in data.records {
            history.push_record(record)?;
        }
        Ok(history)
    }
}

impl From<EvaluationHistory> for HistoryData {
    fn from(h: EvaluationHistory) -> Self {
        HistoryData { records: h.records }
    }
}

impl EvaluationHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[HistoryRecord] {
        &self.records
    }

    pub fn n_vars(&self) -> Option<usize> {
        self.records.first().map(|r| r.variables.len())
    }

    fn push_record(&mut self, record: HistoryRecord) -> Result<()> {
        if let Some(first) = self.records.first() {
            if record.variables.len() != first.variables.len()
                || record.raw_objectives.len() != first.raw_objectives.len()
            {
                return Err(Error::contract(format!(
                    "history record has {} variables / {} objectives, expected {} / {}",
                    record.variables.len(),
                    record.raw_objectives.len(),
                    first.variables.len(),
                    first.raw_objectives.len()
                )));
            }
        } else {
            self.means = vec![0.0; record.variables.len()];
            self.sq_devs = vec![0.0; record.variables.len()];
        }
        if let Some(avg) = &record.averaged_objectives {
            if avg.len() != record.raw_objectives.len() {
                return Err(Error::contract("averaged and raw objective lengths differ"));
            }
        }
        let n = (self.records.len() + 1) as f64;
        for ((mean, m2), &x) in self.means.iter_mut().zip(&mut self.sq_devs).zip(&record.variables) {
            let delta = x - *mean;
            *mean += delta / n;
            *m2 += delta * (x - *mean);
        }
        self.records.push(record);
        Ok(())
    }

    /// Appends sampled solutions (each must carry `raw_objectives`) and
    /// returns the index range they occupy.
    pub fn append(&mut self, solutions: &[Solution], generation: usize) -> Result<Range<usize>> {
        if let Some(i) = solutions.iter().position(|s| s.raw_objectives.is_none()) {
            return Err(Error::contract(format!(
                "solution {i} has no raw sample; only sampled solutions enter the history"
            )));
        }
        let start = self.records.len();
        for s in solutions {
            let raw = s.raw_objectives.clone().unwrap_or_default();
            self.push_record(HistoryRecord {
                generation,
                variables: s.variables.clone(),
                raw_objectives: raw,
                averaged_objectives: None,
            })?;
        }
        Ok(start..self.records.len())
    }

    pub(crate) fn set_averaged(&mut self, index: usize, objectives: Vec<f64>) {
        self.records[index].averaged_objectives = Some(objectives);
    }

    /// Population variance of each variable dimension over all records.
    pub fn variances(&self) -> Result<Vec<f64>> {
        if self.records.is_empty() {
            return Err(Error::contract("variances of an empty history"));
        }
        let n = self.records.len() as f64;
        Ok(self.sq_devs.iter().map(|m2| (m2 / n).max(0.0)).collect())
    }

    /// Neighbours of record `query` selected under `cfg`, closest first.
    pub fn neighbors(&self, query: usize, variances: &[f64], cfg: &KnnConfig) -> Result<Vec<Neighbor>> {
        let Some(target) = self.records.get(query) else {
            return Err(Error::contract(format!(
                "record {query} out of range for history of {}",
                self.records.len()
            )));
        };
        if variances.len() != target.variables.len() {
            return Err(Error::contract("variance vector length differs from variable count"));
        }
        let mut close: Vec<(usize, f64)> = self
            .records
            .iter()
            .enumerate()
            .map(|(j, r)| (j, sed_unchecked(&target.variables, &r.variables, variances)))
            .filter(|&(_, d)| d <= cfg.max_dist)
            .collect();
        close.sort_by(|a, b| {
            a.1.total_cmp(&b.1)
                .then((a.0 != query).cmp(&(b.0 != query)))
                .then(a.0.cmp(&b.0))
        });
        close.truncate(cfg.k);
        Ok(close
            .into_iter()
            .map(|(index, sed)| Neighbor {
                index,
                sed,
                weight: cfg.weight.weight(sed, cfg.max_dist),
            })
            .collect())
    }

    /// kNN-averaged objectives of record `query`.
    pub fn averaged_objectives(&self, query: usize, variances: &[f64], cfg: &KnnConfig) -> Result<Vec<f64>> {
        let neighbors = self.neighbors(query, variances, cfg)?;
        let own = &self.records[query].raw_objectives;
        let total: f64 = neighbors.iter().map(|n| n.weight).sum();
        if !(total > 0.0) {
            return Ok(own.clone());
        }
        let mut avg = vec![0.0; own.len()];
        for n in &neighbors {
            let share = n.weight / total;
            for (acc, f) in avg.iter_mut().zip(&self.records[n.index].raw_objectives) {
                *acc += share * f;
            }
        }
        Ok(avg)
    }

    /// CSV dump: generation, variables, raw and averaged objectives.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let n = self.n_vars().unwrap_or(0);
        let m = self.records.first().map(|r| r.raw_objectives.len()).unwrap_or(0);
        let mut header = vec!["generation".to_string()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        header.extend((1..=m).map(|i| format!("raw_f{i}")));
        header.extend((1..=m).map(|i| format!("avg_f{i}")));
        w.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![r.generation.to_string()];
            row.extend(r.variables.iter().map(f64::to_string));
            row.extend(r.raw_objectives.iter().map(f64::to_string));
            match &r.averaged_objectives {
                Some(avg) => row.extend(avg.iter().map(f64::to_string)),
                None => row.extend(std::iter::repeat_n(String::new(), m)),
            }
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<history csv>", e))?;
        Ok(())
    }
}

/// Appends `population` to `history` and returns it with kNN-averaged
/// objectives. Variables and raw samples are preserved.
///
/// Variances are computed once, after the append, and shared by every
/// member of the population.
pub fn knn_evaluate(
    population: &[Solution],
    history: &mut EvaluationHistory,
    cfg: &KnnConfig,
    generation: usize,
) -> Result<Vec<Solution>> {
    if population.is_empty() {
        return Ok(Vec::new());
    }
    let range = history.append(population, generation)?;
    let variances = history.variances()?;
    let mut out = Vec::with_capacity(population.len());
    for (s, idx) in population.iter().zip(range) {
        let avg = history.averaged_objectives(idx, &variances, cfg)?;
        history.set_averaged(idx, avg.clone());
        out.push(Solution {
            variables: s.variables.clone(),
            objectives: avg,
            raw_objectives: s.raw_objectives.clone(),
        });
    }
    Ok(out)
}

/// Population variances of the history's variable dimensions.
pub fn history_variances(history: &EvaluationHistory) -> Result<Vec<f64>> {
    history.variances()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use proptest::prelude::*;

    fn sampled(vars: &[f64], raw: &[f64]) -> Solution {
        Solution::sampled(vars.to_vec(), raw.to_vec())
    }

    #[test]
    fn sed_examples() {
        assert_eq!(sed(&[0.3, 0.7], &[0.3, 0.7], &[0.5, 2.0]).unwrap(), 0.0);
        assert_eq!(sed(&[0.0, 0.0], &[1.0, 1.0], &[1.0, 1.0]).unwrap(), 2f64.sqrt());
        assert_eq!(sed(&[0.0, 0.0], &[2.0, 0.0], &[4.0, 1.0]).unwrap(), 1.0);
        assert!(sed(&[0.0], &[1.0, 1.0], &[1.0, 1.0]).is_err());
        assert!(sed(&[0.0, 0.0], &[1.0, 1.0], &[1.0]).is_err());
    }

    #[test]
    fn sed_ignores_zero_variance_dimensions() {
        assert_eq!(sed(&[0.0, 5.0], &[2.0, 9.0], &[4.0, 0.0]).unwrap(), 1.0);
        assert_eq!(sed(&[0.0, 5.0], &[2.0, 9.0], &[4.0, 1e-13]).unwrap(), 1.0);
    }

    #[test]
    fn variance_examples() {
        let mut h = EvaluationHistory::new();
        assert!(h.variances().unwrap_err().is_contract_violation());
        h.append(&[sampled(&[0.4, 0.1], &[1.0, 1.0])], 0).unwrap();
        assert_eq!(h.variances().unwrap(), vec![0.0, 0.0]);

        let mut h = EvaluationHistory::new();
        h.append(&[sampled(&[0.0, 0.0], &[1.0, 1.0]), sampled(&[2.0, 2.0], &[1.0, 1.0])], 0)
            .unwrap();
        assert_eq!(history_variances(&h).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn variances_match_two_pass_oracle() {
        let mut rng = RngStream::new(11);
        let mut h = EvaluationHistory::new();
        let mut rows = Vec::new();
        for g in 0..100 {
            let batch: Vec<Solution> = (0..10)
                .map(|_| {
                    let v: Vec<f64> = (0..3).map(|d| rng.uniform() * 10f64.powi(d)).collect();
                    rows.push(v.clone());
                    sampled(&v, &[0.0, 0.0])
                })
                .collect();
            h.append(&batch, g).unwrap();
        }
        let n = rows.len() as f64;
        let got = h.variances().unwrap();
        for d in 0..3 {
            let mean = rows.iter().map(|r| r[d]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[d] - mean).powi(2)).sum::<f64>() / n;
            assert!(((got[d] - var) / var).abs() < 1e-12, "dim {d}: {} vs {var}", got[d]);
        }
    }

    #[test]
    fn append_requires_raw_samples_and_uniform_shape() {
        let mut h = EvaluationHistory::new();
        let err = h.append(&[Solution::new(vec![0.0], vec![1.0, 2.0])], 0).unwrap_err();
        assert!(err.is_contract_violation());
        h.append(&[sampled(&[0.0, 0.0], &[1.0, 1.0])], 0).unwrap();
        assert!(h.append(&[sampled(&[0.0], &[1.0, 1.0])], 0).is_err());
        assert!(h.append(&[sampled(&[0.0, 1.0], &[1.0])], 0).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(KnnConfig::new(0, 1.0).is_err());
        assert!(KnnConfig::new(1, 0.0).is_err());
        assert!(KnnConfig::new(1, f64::INFINITY).is_err());
        assert!(KnnConfig::new(10, 0.25).is_ok());
    }

    #[test]
    fn k_one_returns_raw_samples() {
        let mut rng = RngStream::new(3);
        let mut h = EvaluationHistory::new();
        let cfg = KnnConfig::new(1, 4.0).unwrap();
        for g in 0..5 {
            let pop: Vec<Solution> = (0..6)
                .map(|_| sampled(&[rng.uniform(), rng.uniform()], &[rng.gaussian(), rng.gaussian()]))
                .collect();
            let out = knn_evaluate(&pop, &mut h, &cfg, g).unwrap();
            for (o, p) in out.iter().zip(&pop) {
                assert_eq!(Some(&o.objectives), p.raw_objectives.as_ref());
            }
        }
    }

    #[test]
    fn k_one_prefers_self_over_earlier_duplicates() {
        let mut h = EvaluationHistory::new();
        let cfg = KnnConfig::new(1, 1.0).unwrap();
        knn_evaluate(&[sampled(&[0.5, 0.5], &[9.0, 9.0]), sampled(&[0.1, 0.2], &[0.0, 0.0])], &mut h, &cfg, 0)
            .unwrap();
        let out = knn_evaluate(&[sampled(&[0.5, 0.5], &[1.0, 2.0])], &mut h, &cfg, 1).unwrap();
        assert_eq!(out[0].objectives, vec![1.0, 2.0]);
    }

    #[test]
    fn single_record_history() {
        let mut h = EvaluationHistory::new();
        let cfg = KnnConfig::new(10, 1.0).unwrap();
        let out = knn_evaluate(&[sampled(&[0.2, 0.8], &[0.3, 0.4])], &mut h, &cfg, 0).unwrap();
        assert_eq!(out[0].objectives, vec![0.3, 0.4]);
        let n = h.neighbors(0, &h.variances().unwrap(), &cfg).unwrap();
        assert_eq!(n, vec![Neighbor { index: 0, sed: 0.0, weight: 1.0 }]);
    }

    #[test]
    fn co_located_samples_average_equally() {
        let mut h = EvaluationHistory::new();
        let cfg = KnnConfig::new(10, 1.0).unwrap();
        let pop = vec![
            sampled(&[0.5, 0.5], &[0.0]),
            sampled(&[0.5, 0.5], &[0.1]),
            sampled(&[0.5, 0.5], &[0.2]),
        ];
        let out = knn_evaluate(&pop, &mut h, &cfg, 0).unwrap();
        for o in &out {
            assert!((o.objectives[0] - 0.1).abs() < 1e-15, "{:?}", o.objectives);
        }
        assert_eq!(out[1].raw_objectives, Some(vec![0.1]));
    }

    #[test]
    fn empty_population_is_a_no_op() {
        let mut h = EvaluationHistory::new();
        let out = knn_evaluate(&[], &mut h, &KnnConfig::new(3, 1.0).unwrap(), 0).unwrap();
        assert!(out.is_empty());
        assert!(h.is_empty());
    }

    #[test]
    fn weights_clamp_at_zero_for_large_cutoffs() {
        // variances (1, 0): sed is |dx| on the first dimension.
        let mut h = EvaluationHistory::new();
        h.append(&[sampled(&[1.0, 0.0], &[10.0]), sampled(&[-1.0, 0.0], &[10.0])], 0).unwrap();
        let idx = h.append(&[sampled(&[0.0, 0.0], &[1.0])], 0).unwrap().start;
        let mut var = h.variances().unwrap();
        var[0] = 1.0;
        let cfg = KnnConfig::new(5, 4.0).unwrap();
        // |dx| = 1 -> weight 4 - 1 = 3 for the outer records
        let n = h.neighbors(idx, &var, &cfg).unwrap();
        assert_eq!(n.iter().map(|n| n.weight).collect::<Vec<_>>(), vec![4.0, 3.0, 3.0]);
        let cfg = KnnConfig::new(5, 1.0).unwrap();
        // sed 1 == max_dist is kept, but with weight 1 - 1 = 0
        let n = h.neighbors(idx, &var, &cfg).unwrap();
        assert_eq!(n.iter().map(|n| n.weight).collect::<Vec<_>>(), vec![1.0, 0.0, 0.0]);
        assert_eq!(h.averaged_objectives(idx, &var, &cfg).unwrap(), vec![1.0]);
    }

    #[test]
    fn weight_shapes() {
        assert_eq!(WeightShape::Squared.weight(0.5, 1.0), 0.75);
        assert_eq!(WeightShape::Linear.weight(0.5, 1.0), 0.5);
        assert_eq!(WeightShape::Uniform.weight(0.5, 1.0), 1.0);
        assert_eq!(WeightShape::Squared.weight(1.9, 2.0), 0.0);
    }

    #[test]
    fn averaging_reduces_noise_variance() {
        let sigma = 0.1;
        let mut rng = RngStream::new(77);
        let cfg = KnnConfig::new(10, 0.5).unwrap();
        let trials = 10_000;
        let outputs: Vec<f64> = (0..trials)
            .map(|_| {
                let mut h = EvaluationHistory::new();
                let prior: Vec<Solution> =
                    (0..4).map(|_| sampled(&[0.3, 0.6], &[sigma * rng.gaussian()])).collect();
                h.append(&prior, 0).unwrap();
                let query = sampled(&[0.3, 0.6], &[sigma * rng.gaussian()]);
                knn_evaluate(&[query], &mut h, &cfg, 1).unwrap()[0].objectives[0]
            })
            .collect();
        let mean = outputs.iter().sum::<f64>() / trials as f64;
        let var = outputs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / trials as f64;
        // five equally weighted samples: sigma² / 5
        assert!(var < sigma * sigma, "variance {var}");
        assert!((var - sigma * sigma / 5.0).abs() < 0.2 * sigma * sigma / 5.0);
    }

    #[test]
    fn history_csv_layout() {
        let mut h = EvaluationHistory::new();
        let cfg = KnnConfig::new(2, 1.0).unwrap();
        h.append(&[sampled(&[0.5, 0.25], &[1.0, 2.0])], 0).unwrap();
        knn_evaluate(&[sampled(&[0.5, 0.25], &[3.0, 4.0])], &mut h, &cfg, 1).unwrap();
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "generation,x1,x2,raw_f1,raw_f2,avg_f1,avg_f2\n0,0.5,0.25,1,2,,\n1,0.5,0.25,3,4,2,3\n"
        );
    }

    #[test]
    fn serde_round_trip_rebuilds_variances() {
        let mut rng = RngStream::new(8);
        let mut h = EvaluationHistory::new();
        let pop: Vec<Solution> =
            (0..7).map(|_| sampled(&[rng.uniform(), rng.uniform()], &[rng.uniform(), 0.0])).collect();
        knn_evaluate(&pop, &mut h, &KnnConfig::new(3, 2.0).unwrap(), 0).unwrap();
        let json = serde_json::to_string(&h).unwrap();
        let back: EvaluationHistory = serde_json::from_str(&json).unwrap();
        assert_eq!(back.records(), h.records());
        assert_eq!(back.variances().unwrap(), h.variances().unwrap());
        let ragged = r#"{"records":[{"generation":0,"variables":[0.1],"raw_objectives":[1,2]},
                                    {"generation":0,"variables":[0.1,0.2],"raw_objectives":[1,2]}]}"#;
        assert!(serde_json::from_str::<EvaluationHistory>(ragged).is_err());
    }

    fn history_strategy() -> impl Strategy<Value = Vec<(Vec<f64>, Vec<f64>)>> {
        prop::collection::vec(
            (prop::collection::vec(0.0..1.0f64, 3), prop::collection::vec(-2.0..2.0f64, 2)),
            2..40,
        )
    }

    proptest! {
        #[test]
        fn sed_is_a_symmetric_metric(
            a in prop::collection::vec(-5.0..5.0f64, 3),
            b in prop::collection::vec(-5.0..5.0f64, 3),
            c in prop::collection::vec(-5.0..5.0f64, 3),
            var in prop::collection::vec(0.01..10.0f64, 3),
        ) {
            let ab = sed(&a, &b, &var).unwrap();
            prop_assert_eq!(ab, sed(&b, &a, &var).unwrap());
            let ac = sed(&a, &c, &var).unwrap();
            let cb = sed(&c, &b, &var).unwrap();
            prop_assert!(ab <= ac + cb + 1e-12);
        }

        #[test]
        fn neighbor_selection_invariants(
            rows in history_strategy(),
            k in 1usize..8,
            max_dist in 0.1..4.0f64,
        ) {
            let mut h = EvaluationHistory::new();
            let pop: Vec<Solution> = rows.iter().map(|(v, f)| sampled(v, f)).collect();
            let cfg = KnnConfig::new(k, max_dist).unwrap();
            let out = knn_evaluate(&pop, &mut h, &cfg, 0).unwrap();
            let var = h.variances().unwrap();
            for (i, o) in out.iter().enumerate() {
                let n = h.neighbors(i, &var, &cfg).unwrap();
                prop_assert!(n.len() <= k);
                prop_assert!(n.iter().all(|n| n.sed <= max_dist));
                prop_assert_eq!(n[0].index, i);
                prop_assert_eq!(n[0].weight, max_dist);
                prop_assert!(n.iter().all(|x| x.weight <= n[0].weight));
                for d in 0..2 {
                    let vals = n.iter().map(|n| h.records()[n.index].raw_objectives[d]);
                    let lo = vals.clone().fold(f64::INFINITY, f64::min);
                    let hi = vals.fold(f64::NEG_INFINITY, f64::max);
                    prop_assert!(o.objectives[d] >= lo - 1e-12 && o.objectives[d] <= hi + 1e-12);
                }
            }
        }

        #[test]
        fn rescaling_a_dimension_leaves_output_unchanged(
            rows in history_strategy(),
            scale in 0.001..1000.0f64,
            dim in 0usize..3,
        ) {
            let cfg = KnnConfig::new(5, 1.0).unwrap();
            let pop: Vec<Solution> = rows.iter().map(|(v, f)| sampled(v, f)).collect();
            let scaled: Vec<Solution> = pop
                .iter()
                .map(|s| {
                    let mut s = s.clone();
                    s.variables[dim] *= scale;
                    s
                })
                .collect();
            let a = knn_evaluate(&pop, &mut EvaluationHistory::new(), &cfg, 0).unwrap();
            let b = knn_evaluate(&scaled, &mut EvaluationHistory::new(), &cfg, 0).unwrap();
            for (x, y) in a.iter().zip(&b) {
                for (p, q) in x.objectives.iter().zip(&y.objectives) {
                    prop_assert!((p - q).abs() <= 1e-9);
                }
            }
        }
    }
}
