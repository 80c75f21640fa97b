//! Quality indicators and the mean offset between reported and expected objectives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::{true_front, NoisyProblem, ParetoFrontSample, Problem, ZdtProblem};
use crate::solution::Solution;

pub const DEFAULT_REFERENCE: [f64; 2] = [11.0, 11.0];
pub const DEFAULT_FRONT_SIZE: usize = 1000;

/// Indicators of one finished run, all computed on the adjusted set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub hv_mean_adjusted: f64,
    pub igd_mean_adjusted: f64,
    pub delta_f: f64,
    pub reference_point: [f64; 2],
    pub front_sample_size: usize,
}

/// Copies of `set` whose objectives are their expected (noise-free) values.
pub fn adjusted_set<P: Problem>(set: &[Solution], problem: &NoisyProblem<P>) -> Result<Vec<Solution>> {
    set.iter()
        .map(|s| {
            Ok(Solution {
                variables: s.variables.clone(),
                objectives: problem.mean_objectives(s)?,
                raw_objectives: s.raw_objectives.clone(),
            })
        })
        .collect()
}

/// Exact 2-D hypervolume by sort-and-sweep. Points not strictly better than
/// `reference` in both objectives contribute nothing.
pub fn hypervolume_2d(points: &[[f64; 2]], reference: [f64; 2]) -> f64 {
    let mut inside: Vec<[f64; 2]> = points
        .iter()
        .filter(|p| p[0] < reference[0] && p[1] < reference[1])
        .copied()
        .collect();
    inside.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut area = 0.0;
    let mut ceiling = reference[1];
    for p in inside {
        if p[1] < ceiling {
            area += (reference[0] - p[0]) * (ceiling - p[1]);
            ceiling = p[1];
        }
    }
    area
}

/// Inverted generational distance: mean distance from each front point to
/// its closest member of `set`.
pub fn igd(front: &ParetoFrontSample, set: &[[f64; 2]]) -> Result<f64> {
    if front.points.is_empty() || set.is_empty() {
        return Err(Error::contract("igd needs a non-empty front and a non-empty solution set"));
    }
    let total: f64 = front
        .points
        .iter()
        .map(|p| {
            set.iter()
                .map(|s| ((p[0] - s[0]).powi(2) + (p[1] - s[1]).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    Ok(total / front.points.len() as f64)
}

/// Mean Euclidean distance between positionally paired objective vectors.
pub fn delta_f(set: &[Solution], adjusted: &[Solution]) -> Result<f64> {
    if set.len() != adjusted.len() || set.is_empty() {
        return Err(Error::contract(format!(
            "delta_f needs equally sized non-empty sets, got {} and {}",
            set.len(),
            adjusted.len()
        )));
    }
    let mut total = 0.0;
    for (s, a) in set.iter().zip(adjusted) {
        if s.objectives.len() != a.objectives.len() {
            return Err(Error::contract("paired solutions differ in objective dimension"));
        }
        total += s
            .objectives
            .iter()
            .zip(&a.objectives)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
    }
    Ok(total / set.len() as f64)
}

fn as_points(set: &[Solution]) -> Result<Vec<[f64; 2]>> {
    set.iter()
        .map(|s| match s.objectives.as_slice() {
            [a, b] => Ok([*a, *b]),
            other => Err(Error::contract(format!(
                "2-d indicators need two objectives, got {}",
                other.len()
            ))),
        })
        .collect()
}

/// Builds the adjusted set of `final_set` and evaluates all indicators on it.
pub fn evaluate_run(
    final_set: &[Solution],
    problem: &NoisyProblem<ZdtProblem>,
    reference: [f64; 2],
    front_size: usize,
) -> Result<MetricReport> {
    let adjusted = adjusted_set(final_set, problem)?;
    let front = true_front(problem.inner().variant(), front_size)?;
    let points = as_points(&adjusted)?;
    Ok(MetricReport {
        hv_mean_adjusted: hypervolume_2d(&points, reference),
        igd_mean_adjusted: igd(&front, &points)?,
        delta_f: delta_f(final_set, &adjusted)?,
        reference_point: reference,
        front_sample_size: front_size,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{NoiseSpec, ZdtVariant};
    use crate::rng::RngStream;
    use proptest::prelude::*;

    fn sol(objs: &[f64]) -> Solution {
        Solution::new(vec![0.0, 0.0], objs.to_vec())
    }

    #[test]
    fn hypervolume_examples() {
        assert_eq!(hypervolume_2d(&[[0.0, 0.0]], [1.0, 1.0]), 1.0);
        assert_eq!(hypervolume_2d(&[[0.0, 0.5], [0.5, 0.0]], [1.0, 1.0]), 0.75);
        assert_eq!(hypervolume_2d(&[], [1.0, 1.0]), 0.0);
        assert_eq!(hypervolume_2d(&[[1.0, 0.0], [0.0, 2.0]], [1.0, 1.0]), 0.0);
        // dominated and duplicate points change nothing
        assert_eq!(hypervolume_2d(&[[0.0, 0.5], [0.5, 0.0], [0.6, 0.6], [0.5, 0.0]], [1.0, 1.0]), 0.75);
    }

    #[test]
    fn hypervolume_matches_monte_carlo() {
        let mut rng = RngStream::new(12);
        let pts: Vec<[f64; 2]> = (0..20).map(|_| [rng.uniform(), rng.uniform()]).collect();
        let n = 1_000_000;
        let hits = (0..n)
            .filter(|_| {
                let (x, y) = (rng.uniform(), rng.uniform());
                pts.iter().any(|p| p[0] <= x && p[1] <= y)
            })
            .count();
        let p = hits as f64 / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((hypervolume_2d(&pts, [1.0, 1.0]) - p).abs() < 3.0 * se);
    }

    #[test]
    fn igd_examples() {
        let front = ParetoFrontSample {
            points: vec![[0.0, 1.0], [1.0, 0.0]],
        };
        assert_eq!(igd(&front, &front.points).unwrap(), 0.0);
        assert_eq!(igd(&front, &[[0.0, 1.0]]).unwrap(), 2f64.sqrt() / 2.0);
        assert!(igd(&front, &[]).unwrap_err().is_contract_violation());
        let empty = ParetoFrontSample { points: vec![] };
        assert!(igd(&empty, &[[0.0, 0.0]]).is_err());
    }

    #[test]
    fn igd_of_generated_fronts_is_zero() {
        for v in ZdtVariant::ALL {
            let f = true_front(v, 200).unwrap();
            assert_eq!(igd(&f, &f.points).unwrap(), 0.0);
        }
    }

    #[test]
    fn delta_f_examples() {
        let a = vec![sol(&[1.0, 2.0])];
        assert_eq!(delta_f(&a, &a).unwrap(), 0.0);
        assert_eq!(delta_f(&[sol(&[0.0, 0.0])], &[sol(&[3.0, 4.0])]).unwrap(), 5.0);
        let s = vec![sol(&[0.0, 0.0]), sol(&[0.0, 0.0])];
        let t = vec![sol(&[1.0, 0.0]), sol(&[0.0, 3.0])];
        assert_eq!(delta_f(&s, &t).unwrap(), 2.0);
        assert!(delta_f(&s, &t[..1]).unwrap_err().is_contract_violation());
    }

    #[test]
    fn adjusted_set_uses_expected_objectives() {
        let p = NoisyProblem::new(ZdtProblem::new(ZdtVariant::Zdt1, 2).unwrap(), NoiseSpec::new(0.3).unwrap());
        let s = p.sample(&[0.0, 0.0], &mut RngStream::new(1)).unwrap();
        let adj = adjusted_set(std::slice::from_ref(&s), &p).unwrap();
        assert_eq!(adj.len(), 1);
        assert_eq!(adj[0].objectives, vec![0.0, 1.0]);
        assert_eq!(adj[0].variables, s.variables);

        let quiet = NoisyProblem::new(ZdtProblem::new(ZdtVariant::Zdt2, 3).unwrap(), NoiseSpec::noiseless());
        let s = quiet.sample(&[0.4, 0.5, 0.6], &mut RngStream::new(1)).unwrap();
        let adj = adjusted_set(std::slice::from_ref(&s), &quiet).unwrap();
        assert_eq!(adj[0].objectives, s.objectives);
    }

    #[test]
    fn report_for_a_perfect_set() {
        let p = NoisyProblem::new(ZdtProblem::new(ZdtVariant::Zdt1, 2).unwrap(), NoiseSpec::noiseless());
        let set: Vec<Solution> = (0..=10)
            .map(|i| {
                let x = [i as f64 / 10.0, 0.0];
                Solution::new(x.to_vec(), p.inner().evaluate(&x).unwrap())
            })
            .collect();
        let r = evaluate_run(&set, &p, DEFAULT_REFERENCE, 11).unwrap();
        assert_eq!(r.delta_f, 0.0);
        assert!(r.igd_mean_adjusted < 1e-15);
        assert!(r.hv_mean_adjusted > 120.0 && r.hv_mean_adjusted < 121.0 - 1.0 / 3.0);
    }

    fn pt() -> impl Strategy<Value = [f64; 2]> {
        (0.0..1.0f64, 0.0..1.0f64).prop_map(|(a, b)| [a, b])
    }

    proptest! {
        #[test]
        fn hypervolume_is_monotone_and_order_free(pts in prop::collection::vec(pt(), 0..30), extra in pt()) {
            let r = [1.0, 1.0];
            let base = hypervolume_2d(&pts, r);
            let mut more = pts.clone();
            more.push(extra);
            prop_assert!(hypervolume_2d(&more, r) >= base);
            let mut rev = pts.clone();
            rev.reverse();
            prop_assert!((hypervolume_2d(&rev, r) - base).abs() < 1e-15);
            let nd = crate::solution::non_dominated_indices(&pts).unwrap();
            let kept: Vec<[f64; 2]> = nd.into_iter().map(|i| pts[i]).collect();
            prop_assert!((hypervolume_2d(&kept, r) - base).abs() < 1e-15);
        }

        #[test]
        fn igd_never_increases_with_more_points(set in prop::collection::vec(pt(), 1..20), extra in pt()) {
            let front = true_front(ZdtVariant::Zdt1, 50).unwrap();
            let a = igd(&front, &set).unwrap();
            let mut more = set.clone();
            more.push(extra);
            prop_assert!(igd(&front, &more).unwrap() <= a);
        }

        #[test]
        fn delta_f_symmetric_and_translation_invariant(
            pairs in prop::collection::vec((pt(), pt()), 1..20),
            shift in pt(),
        ) {
            let s: Vec<Solution> = pairs.iter().map(|(a, _)| sol(a)).collect();
            let t: Vec<Solution> = pairs.iter().map(|(_, b)| sol(b)).collect();
            let d = delta_f(&s, &t).unwrap();
            prop_assert_eq!(d, delta_f(&t, &s).unwrap());
            let mv = |v: &[Solution]| -> Vec<Solution> {
                v.iter().map(|x| sol(&[x.objectives[0] + shift[0], x.objectives[1] + shift[1]])).collect()
            };
            prop_assert!((delta_f(&mv(&s), &mv(&t)).unwrap() - d).abs() < 1e-12);
        }
    }
}
