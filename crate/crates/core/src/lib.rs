//! kNN-averaged fitness evaluation for noisy multi-objective optimization.
//!
//! The crate bundles everything needed to study how averaging over the
//! nearest previously evaluated neighbours affects an evolutionary search on
//! noisy benchmarks:
//!
//! * [`solution`] and [`rng`]: domain types, Pareto dominance and seeded randomness.
//! * [`problems`]: ZDT1/2/3, additive Gaussian noise and analytic Pareto fronts.
//! * [`knn_avg`]: the evaluation history, standardized Euclidean distance and
//!   the kNN-averaged objective computation.
//! * [`nsga2`]: an NSGA-II engine with a pluggable evaluation strategy.
//! * [`metrics`]: hypervolume, IGD and the mean offset between reported and
//!   expected objectives.
//! * [`stats`]: Wilcoxon signed-rank test, Vargha-Delaney A12 and verdicts.
//! * [`experiment`]: grid expansion, seeded execution, persistence and reports.
//!
//! Everything minimizes. A run is a pure function of its configuration and seed.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod knn_avg;
pub mod metrics;
pub mod nsga2;
pub mod problems;
pub mod rng;
pub mod solution;
pub mod stats;

pub use error::{Error, Result};
pub use knn_avg::{knn_evaluate, sed, EvaluationHistory, KnnConfig, WeightShape};
pub use metrics::{delta_f, hypervolume_2d, igd, MetricReport};
pub use nsga2::{run_optimization, Evaluator, GaConfig, OptimizationRun};
pub use problems::{NoiseSpec, NoisyProblem, ParetoFrontSample, Problem, ZdtProblem, ZdtVariant};
pub use rng::RngStream;
pub use solution::{dominates, non_dominated_filter, ProblemSpec, Solution};
pub use stats::{compare_setting, vargha_delaney_a12, wilcoxon_signed_rank, ComparisonVerdict, Verdict};
