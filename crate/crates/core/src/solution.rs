//! Solutions, problem descriptors and Pareto dominance (minimization only).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in decision space together with its objective values.
///
/// `objectives` holds what the search sees (possibly kNN-averaged);
/// `raw_objectives` keeps the noisy sample that was actually drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub variables: Vec<f64>,
    pub objectives: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_objectives: Option<Vec<f64>>,
}

impl Solution {
    pub fn new(variables: Vec<f64>, objectives: Vec<f64>) -> Self {
        Self {
            variables,
            objectives,
            raw_objectives: None,
        }
    }

    /// A freshly sampled solution: objectives start out equal to the raw sample.
    pub fn sampled(variables: Vec<f64>, raw: Vec<f64>) -> Self {
        Self {
            variables,
            objectives: raw.clone(),
            raw_objectives: Some(raw),
        }
    }

    /// The raw sample if present, otherwise the reported objectives.
    pub fn raw_or_reported(&self) -> &[f64] {
        self.raw_objectives.as_deref().unwrap_or(&self.objectives)
    }
}

/// Shape of a problem: dimensions and box bounds of the decision space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub name: String,
    pub n_vars: usize,
    pub n_objs: usize,
    pub lower_bounds: Vec<f64>,
    pub upper_bounds: Vec<f64>,
}

impl ProblemSpec {
    pub fn new(
        name: impl Into<String>,
        n_objs: usize,
        lower_bounds: Vec<f64>,
        upper_bounds: Vec<f64>,
    ) -> Result<Self> {
        let n_vars = lower_bounds.len();
        if n_vars == 0 {
            return Err(Error::contract("a problem needs at least one variable"));
        }
        if upper_bounds.len() != n_vars {
            return Err(Error::contract(format!(
                "{} lower bounds but {} upper bounds",
                n_vars,
                upper_bounds.len()
            )));
        }
        if n_objs < 2 {
            return Err(Error::contract(format!(
                "multi-objective problems need at least 2 objectives, got {n_objs}"
            )));
        }
        if let Some(i) = (0..n_vars).find(|&i| !(lower_bounds[i] < upper_bounds[i])) {
            return Err(Error::contract(format!(
                "bound {i}: lower {} is not below upper {}",
                lower_bounds[i], upper_bounds[i]
            )));
        }
        Ok(Self {
            name: name.into(),
            n_vars,
            n_objs,
            lower_bounds,
            upper_bounds,
        })
    }

    /// Checks length and bounds of a decision vector.
    pub fn check_variables(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_vars {
            return Err(Error::contract(format!(
                "{} expects {} variables, got {}",
                self.name,
                self.n_vars,
                x.len()
            )));
        }
        for (i, &v) in x.iter().enumerate() {
            if !(v >= self.lower_bounds[i] && v <= self.upper_bounds[i]) {
                return Err(Error::contract(format!(
                    "{}: variable {i} = {v} outside [{}, {}]",
                    self.name, self.lower_bounds[i], self.upper_bounds[i]
                )));
            }
        }
        Ok(())
    }

    /// Checks that a solution matches the declared dimensions.
    pub fn check_solution(&self, s: &Solution) -> Result<()> {
        self.check_variables(&s.variables)?;
        if s.objectives.len() != self.n_objs {
            return Err(Error::contract(format!(
                "{} has {} objectives, solution carries {}",
                self.name,
                self.n_objs,
                s.objectives.len()
            )));
        }
        if let Some(raw) = &s.raw_objectives {
            if raw.len() != s.objectives.len() {
                return Err(Error::contract("raw and reported objective lengths differ"));
            }
        }
        Ok(())
    }
}

/// `a ≺ b` on raw objective vectors of equal length.
#[inline]
pub fn objectives_dominate(a: &[f64], b: &[f64]) -> bool {
    debug_assert_eq!(a.len(), b.len());
    let mut strictly_better = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly_better = true;
        }
    }
    strictly_better
}

/// True iff `a` is no worse than `b` in every objective and strictly better in one.
pub fn dominates(a: &Solution, b: &Solution) -> Result<bool> {
    if a.objectives.len() != b.objectives.len() {
        return Err(Error::contract(format!(
            "cannot compare {}-objective and {}-objective solutions",
            a.objectives.len(),
            b.objectives.len()
        )));
    }
    Ok(objectives_dominate(&a.objectives, &b.objectives))
}

/// Indices of the points not dominated by any other point, in input order.
///
/// Two objectives use a sort-and-sweep in `O(n log n)`; higher dimensions
/// fall back to the pairwise scan. Identical points never dominate each other,
/// so duplicates survive together.
pub fn non_dominated_indices<P: AsRef<[f64]>>(points: &[P]) -> Result<Vec<usize>> {
    let Some(first) = points.first() else {
        return Ok(Vec::new());
    };
    let m = first.as_ref().len();
    if let Some(bad) = points.iter().position(|p| p.as_ref().len() != m) {
        return Err(Error::contract(format!(
            "point {bad} has {} objectives, expected {m}",
            points[bad].as_ref().len()
        )));
    }
    let keep = if m == 2 {
        sweep_2d(points)
    } else {
        pairwise_scan(points)
    };
    Ok((0..points.len()).filter(|&i| keep[i]).collect())
}

fn pairwise_scan<P: AsRef<[f64]>>(points: &[P]) -> Vec<bool> {
    (0..points.len())
        .map(|i| {
            !points
                .iter()
                .enumerate()
                .any(|(j, q)| j != i && objectives_dominate(q.as_ref(), points[i].as_ref()))
        })
        .collect()
}

fn sweep_2d<P: AsRef<[f64]>>(points: &[P]) -> Vec<bool> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (points[a].as_ref(), points[b].as_ref());
        pa[0].total_cmp(&pb[0]).then(pa[1].total_cmp(&pb[1]))
    });
    let mut keep = vec![false; points.len()];
    let mut best_f2 = f64::INFINITY;
    let mut start = 0;
    while start < order.len() {
        // group of equal f1, sorted by f2 ascending
        let f1 = points[order[start]].as_ref()[0];
        let mut end = start;
        while end < order.len() && points[order[end]].as_ref()[0] == f1 {
            end += 1;
        }
        let group_min = points[order[start]].as_ref()[1];
        if group_min < best_f2 {
            for &i in &order[start..end] {
                if points[i].as_ref()[1] == group_min {
                    keep[i] = true;
                }
            }
            best_f2 = group_min;
        }
        start = end;
    }
    keep
}

/// Members of `set` not dominated by any other member, in input order.
pub fn non_dominated_filter(set: &[Solution]) -> Result<Vec<Solution>> {
    let objs: Vec<&[f64]> = set.iter().map(|s| s.objectives.as_slice()).collect();
    Ok(non_dominated_indices(&objs)?
        .into_iter()
        .map(|i| set[i].clone())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sol(objs: &[f64]) -> Solution {
        Solution::new(vec![0.0], objs.to_vec())
    }

    fn objs(set: &[Solution]) -> Vec<Vec<f64>> {
        set.iter().map(|s| s.objectives.clone()).collect()
    }

    #[test]
    fn dominance_examples() {
        assert!(dominates(&sol(&[1.0, 1.0]), &sol(&[2.0, 2.0])).unwrap());
        assert!(!dominates(&sol(&[1.0, 1.0]), &sol(&[1.0, 1.0])).unwrap());
        assert!(!dominates(&sol(&[1.0, 3.0]), &sol(&[3.0, 1.0])).unwrap());
        assert!(!dominates(&sol(&[3.0, 1.0]), &sol(&[1.0, 3.0])).unwrap());
        assert!(dominates(&sol(&[1.0, 2.0]), &sol(&[1.0, 3.0])).unwrap());
    }

    #[test]
    fn dominance_dimension_mismatch() {
        let err = dominates(&sol(&[1.0, 1.0]), &sol(&[1.0, 1.0, 1.0])).unwrap_err();
        assert!(err.is_contract_violation());
    }

    #[test]
    fn filter_examples() {
        let single = vec![sol(&[1.0, 1.0])];
        assert_eq!(objs(&non_dominated_filter(&single).unwrap()), vec![vec![1.0, 1.0]]);

        let set = vec![sol(&[1.0, 1.0]), sol(&[2.0, 2.0]), sol(&[0.0, 3.0])];
        assert_eq!(
            objs(&non_dominated_filter(&set).unwrap()),
            vec![vec![1.0, 1.0], vec![0.0, 3.0]]
        );

        let dup = vec![sol(&[1.0, 1.0]), sol(&[1.0, 1.0])];
        assert_eq!(non_dominated_filter(&dup).unwrap().len(), 2);

        assert!(non_dominated_filter(&[]).unwrap().is_empty());
    }

    #[test]
    fn filter_rejects_ragged_input() {
        let set = vec![sol(&[1.0, 1.0]), sol(&[1.0])];
        assert!(non_dominated_filter(&set).is_err());
    }

    #[test]
    fn equal_f1_ties_in_sweep() {
        // (1,2) dominates (1,3); (0,2) dominates both; (0,2) twice survives twice.
        let pts = vec![
            vec![1.0, 3.0],
            vec![1.0, 2.0],
            vec![0.0, 2.0],
            vec![0.0, 2.0],
            vec![2.0, 1.0],
        ];
        assert_eq!(non_dominated_indices(&pts).unwrap(), vec![2, 3, 4]);
    }

    #[test]
    fn three_objectives_use_pairwise_scan() {
        let pts = vec![vec![1.0, 1.0, 1.0], vec![2.0, 2.0, 2.0], vec![0.0, 3.0, 1.0]];
        assert_eq!(non_dominated_indices(&pts).unwrap(), vec![0, 2]);
    }

    #[test]
    fn spec_validation() {
        assert!(ProblemSpec::new("p", 2, vec![0.0], vec![1.0]).is_ok());
        assert!(ProblemSpec::new("p", 1, vec![0.0], vec![1.0]).is_err());
        assert!(ProblemSpec::new("p", 2, vec![1.0], vec![1.0]).is_err());
        assert!(ProblemSpec::new("p", 2, vec![0.0, 0.0], vec![1.0]).is_err());
        let spec = ProblemSpec::new("p", 2, vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert!(spec.check_variables(&[0.5, 1.0]).is_ok());
        assert!(spec.check_variables(&[0.5, 1.5]).is_err());
        assert!(spec.check_variables(&[f64::NAN, 0.5]).is_err());
        assert!(spec.check_variables(&[0.5]).is_err());
    }

    fn small_vec(m: usize) -> impl Strategy<Value = Vec<f64>> {
        // coarse grid so ties and equalities show up often
        prop::collection::vec((0u8..5).prop_map(f64::from), m)
    }

    proptest! {
        #[test]
        fn dominance_is_a_strict_partial_order(a in small_vec(3), b in small_vec(3), c in small_vec(3)) {
            prop_assert!(!objectives_dominate(&a, &a));
            prop_assert!(!(objectives_dominate(&a, &b) && objectives_dominate(&b, &a)));
            if objectives_dominate(&a, &b) && objectives_dominate(&b, &c) {
                prop_assert!(objectives_dominate(&a, &c));
            }
        }

        #[test]
        fn filter_output_is_mutually_non_dominated_and_idempotent(
            pts in prop::collection::vec(small_vec(2), 1..40)
        ) {
            let set: Vec<Solution> = pts.iter().map(|p| sol(p)).collect();
            let front = non_dominated_filter(&set).unwrap();
            for a in &front {
                for b in &front {
                    prop_assert!(!dominates(a, b).unwrap());
                }
            }
            // every dropped point is dominated by someone in the input
            for s in &set {
                if !front.contains(s) {
                    prop_assert!(set.iter().any(|q| dominates(q, s).unwrap()));
                }
            }
            prop_assert_eq!(non_dominated_filter(&front).unwrap(), front);
        }

        #[test]
        fn sweep_matches_pairwise_scan(pts in prop::collection::vec(small_vec(2), 0..60)) {
            let keep = pairwise_scan(&pts);
            let expected: Vec<usize> = (0..pts.len()).filter(|&i| keep[i]).collect();
            prop_assert_eq!(non_dominated_indices(&pts).unwrap(), expected);
        }
    }
}
