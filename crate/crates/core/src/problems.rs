//! ZDT benchmarks, additive Gaussian noise and analytic Pareto fronts.
//!
//! The ZDT functions follow the usual Zitzler-Deb-Thiele definitions on
//! `[0, 1]^n` with `g(x) = 1 + 9 * sum(x[1..]) / (n - 1)`.
//!
//! Noise is additive and zero-mean, drawn independently for each objective.
//! Whether the objectives' noise terms should be correlated is left open by
//! the model; independence is what this module assumes.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::solution::{non_dominated_indices, ProblemSpec, Solution};

/// A deterministic multi-objective function over a box.
pub trait Problem {
    fn spec(&self) -> &ProblemSpec;

    /// Noise-free objective vector of `x`.
    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZdtVariant {
    Zdt1,
    Zdt2,
    Zdt3,
}

impl ZdtVariant {
    pub const ALL: [ZdtVariant; 3] = [ZdtVariant::Zdt1, ZdtVariant::Zdt2, ZdtVariant::Zdt3];

    pub fn as_str(self) -> &'static str {
        match self {
            ZdtVariant::Zdt1 => "zdt1",
            ZdtVariant::Zdt2 => "zdt2",
            ZdtVariant::Zdt3 => "zdt3",
        }
    }

    /// `f2` as a function of `f1` and `g`.
    fn h(self, f1: f64, g: f64) -> f64 {
        let r = f1 / g;
        match self {
            ZdtVariant::Zdt1 => g * (1.0 - r.sqrt()),
            ZdtVariant::Zdt2 => g * (1.0 - r * r),
            ZdtVariant::Zdt3 => {
                g * (1.0 - r.sqrt() - r * (10.0 * std::f64::consts::PI * f1).sin())
            }
        }
    }

    /// The front curve (`g = 1`) at `f1`.
    pub fn front_f2(self, f1: f64) -> f64 {
        self.h(f1, 1.0)
    }
}

impl fmt::Display for ZdtVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ZdtVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "zdt1" => Ok(ZdtVariant::Zdt1),
            "zdt2" => Ok(ZdtVariant::Zdt2),
            "zdt3" => Ok(ZdtVariant::Zdt3),
            other => Err(Error::Config(format!("unknown problem {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZdtProblem {
    variant: ZdtVariant,
    spec: ProblemSpec,
}

impl ZdtProblem {
    pub fn new(variant: ZdtVariant, n_vars: usize) -> Result<Self> {
        if n_vars < 2 {
            return Err(Error::contract(format!(
                "ZDT problems need at least 2 variables, got {n_vars}"
            )));
        }
        let spec = ProblemSpec::new(variant.as_str(), 2, vec![0.0; n_vars], vec![1.0; n_vars])?;
        Ok(Self { variant, spec })
    }

    pub fn variant(&self) -> ZdtVariant {
        self.variant
    }

    pub fn n_vars(&self) -> usize {
        self.spec.n_vars
    }
}

impl Problem for ZdtProblem {
    fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.spec.check_variables(x)?;
        let f1 = x[0];
        let tail: f64 = x[1..].iter().sum();
        let g = 1.0 + 9.0 * tail / (x.len() - 1) as f64;
        Ok(vec![f1, self.variant.h(f1, g)])
    }
}

/// Standard deviation of the additive zero-mean Gaussian noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma: f64,
    /// Overrides `sigma` per objective when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_objective: Option<Vec<f64>>,
}

impl NoiseSpec {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::contract(format!("noise sigma must be finite and >= 0, got {sigma}")));
        }
        Ok(Self {
            sigma,
            per_objective: None,
        })
    }

    pub fn noiseless() -> Self {
        Self {
            sigma: 0.0,
            per_objective: None,
        }
    }

    pub fn per_objective(sigmas: Vec<f64>) -> Result<Self> {
        if sigmas.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(Error::contract("noise sigmas must be finite and >= 0"));
        }
        Ok(Self {
            sigma: sigmas.first().copied().unwrap_or(0.0),
            per_objective: Some(sigmas),
        })
    }

    pub fn sigma_for(&self, objective: usize) -> f64 {
        match &self.per_objective {
            Some(s) => s.get(objective).copied().unwrap_or(self.sigma),
            None => self.sigma,
        }
    }
}

/// A problem observed through additive Gaussian noise.
#[derive(Debug, Clone)]
pub struct NoisyProblem<P> {
    inner: P,
    noise: NoiseSpec,
}

impl<P: Problem> NoisyProblem<P> {
    pub fn new(inner: P, noise: NoiseSpec) -> Self {
        Self { inner, noise }
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }

    pub fn noise(&self) -> &NoiseSpec {
        &self.noise
    }

    pub fn spec(&self) -> &ProblemSpec {
        self.inner.spec()
    }

    /// One noisy sample of `x`. Always consumes exactly `n_objs` Gaussian
    /// draws, even when sigma is zero, so streams stay aligned across noise levels.
    pub fn sample(&self, x: &[f64], rng: &mut RngStream) -> Result<Solution> {
        let mut raw = self.inner.evaluate(x)?;
        for (i, f) in raw.iter_mut().enumerate() {
            let delta = rng.gaussian();
            *f += self.noise.sigma_for(i) * delta;
        }
        Ok(Solution::sampled(x.to_vec(), raw))
    }

    /// Expected objectives of `s` under the noise model. The noise is
    /// additive and zero-mean, so this is the noise-free evaluation.
    pub fn mean_objectives(&self, s: &Solution) -> Result<Vec<f64>> {
        self.inner.evaluate(&s.variables)
    }
}

pub fn evaluate_true(problem: &ZdtProblem, x: &[f64]) -> Result<Vec<f64>> {
    problem.evaluate(x)
}

pub fn evaluate_noisy(
    problem: &ZdtProblem,
    noise: &NoiseSpec,
    x: &[f64],
    rng: &mut RngStream,
) -> Result<Solution> {
    NoisyProblem::new(problem.clone(), noise.clone()).sample(x, rng)
}

pub fn mean_objectives(problem: &ZdtProblem, s: &Solution) -> Result<Vec<f64>> {
    problem.evaluate(&s.variables)
}

/// Points sampled from a problem's true Pareto front.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoFrontSample {
    pub points: Vec<[f64; 2]>,
}

impl ParetoFrontSample {
    pub fn count(&self) -> usize {
        self.points.len()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["f1", "f2"])?;
        for p in &self.points {
            w.write_record([p[0].to_string(), p[1].to_string()])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::io("<memory>", e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

const ZDT3_SWEEP: usize = 100_001;

/// Non-dominated `f1` intervals of a front curve on `[0, 1]`, found by
/// filtering a dense sweep. Each interval spans the first and last
/// non-dominated sweep point of a run, so it lies inside the true segment.
fn front_segments(variant: ZdtVariant) -> &'static [(f64, f64)] {
    static ZDT3: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    const FULL: &[(f64, f64)] = &[(0.0, 1.0)];
    match variant {
        ZdtVariant::Zdt1 | ZdtVariant::Zdt2 => FULL,
        ZdtVariant::Zdt3 => ZDT3.get_or_init(|| {
            let step = 1.0 / (ZDT3_SWEEP - 1) as f64;
            let sweep: Vec<[f64; 2]> = (0..ZDT3_SWEEP)
                .map(|i| {
                    let f1 = i as f64 * step;
                    [f1, variant.front_f2(f1)]
                })
                .collect();
            let keep = non_dominated_indices(&sweep).expect("uniform 2-d sweep");
            let mut segments = Vec::new();
            let mut iter = keep.into_iter();
            if let Some(first) = iter.next() {
                let (mut start, mut prev) = (first, first);
                for i in iter {
                    if i != prev + 1 {
                        segments.push((sweep[start][0], sweep[prev][0]));
                        start = i;
                    }
                    prev = i;
                }
                segments.push((sweep[start][0], sweep[prev][0]));
            }
            segments
        }),
    }
}

/// `count` points on the analytic front, evenly spaced in `f1` across its
/// non-dominated segments (endpoints included).
pub fn true_front(variant: ZdtVariant, count: usize) -> Result<ParetoFrontSample> {
    if count < 2 {
        return Err(Error::contract(format!("front sample needs count >= 2, got {count}")));
    }
    let segments = front_segments(variant);
    let total: f64 = segments.iter().map(|(a, b)| b - a).sum();
    let mut points = Vec::with_capacity(count);
    for j in 0..count {
        let mut t = total * j as f64 / (count - 1) as f64;
        let mut f1 = segments.last().map(|s| s.1).unwrap_or(1.0);
        for &(a, b) in segments {
            let len = b - a;
            if t <= len {
                f1 = a + t;
                break;
            }
            t -= len;
        }
        if j == count - 1 {
            f1 = segments.last().map(|s| s.1).unwrap_or(1.0);
        }
        points.push([f1, variant.front_f2(f1)]);
    }
    Ok(ParetoFrontSample { points })
}
