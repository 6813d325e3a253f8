//! Finite real random variables and their (ε,δ)-deterministic values.

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{param, Error, Result};
use crate::numeric::{compensated_sum, nearly_equal, CompensatedSum};

const MERGE_REL: f64 = 1e-12;
const MERGE_ABS: f64 = 1e-14;

/// A law on finitely many reals. Values strictly increasing, probabilities positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct DiscreteRandomVariable {
    values: Vec<f64>,
    probs: Vec<f64>,
}

impl TryFrom<Vec<(f64, f64)>> for DiscreteRandomVariable {
    type Error = Error;
    fn try_from(v: Vec<(f64, f64)>) -> Result<Self> {
        DiscreteRandomVariable::new(v)
    }
}

impl From<DiscreteRandomVariable> for Vec<(f64, f64)> {
    fn from(x: DiscreteRandomVariable) -> Self {
        x.values.into_iter().zip(x.probs).collect()
    }
}

impl DiscreteRandomVariable {
    /// Sorts, drops zero-probability atoms and merges values equal within relative 1e-12.
    pub fn new(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        for &(v, p) in &atoms {
            if !v.is_finite() {
                return param(format!("atom value {v} is not finite"));
            }
            if !(p.is_finite() && p >= 0.0) {
                return param(format!("atom probability {p} is invalid"));
            }
        }
        atoms.retain(|a| a.1 > 0.0);
        if atoms.is_empty() {
            return param("random variable has no mass");
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let x = Self::merge_sorted(atoms);
        let total = compensated_sum(x.probs.iter().copied());
        let dev = (total - 1.0).abs();
        if dev <= 1e-12 {
            Ok(x)
        } else if dev <= 1e-9 {
            Ok(DiscreteRandomVariable { probs: x.probs.iter().map(|p| p / total).collect(), ..x })
        } else {
            param(format!("atom probabilities sum to {total}"))
        }
    }

    fn merge_sorted(atoms: Vec<(f64, f64)>) -> Self {
        let mut values: Vec<f64> = Vec::with_capacity(atoms.len());
        let mut probs: Vec<f64> = Vec::with_capacity(atoms.len());
        let mut acc = CompensatedSum::new();
        for (v, p) in atoms {
            match values.last() {
                Some(&rep) if nearly_equal(rep, v, MERGE_REL, MERGE_ABS) => acc.add(p),
                _ => {
                    if !values.is_empty() {
                        probs.push(acc.value());
                    }
                    values.push(v);
                    acc = CompensatedSum::new();
                    acc.add(p);
                }
            }
        }
        probs.push(acc.value());
        DiscreteRandomVariable { values, probs }
    }

    pub fn point_mass(v: f64) -> Self {
        DiscreteRandomVariable { values: vec![v], probs: vec![1.0] }
    }

    /// Empirical law of samples.
    pub fn from_samples(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return param("no samples");
        }
        samples.sort_by(f64::total_cmp);
        let w = 1.0 / samples.len() as f64;
        Self::new(samples.into_iter().map(|v| (v, w)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn expectation(&self, f: impl Fn(f64) -> f64) -> f64 {
        compensated_sum(self.atoms().map(|(v, p)| p * f(v)))
    }

    pub fn mean(&self) -> f64 {
        self.expectation(|v| v)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.expectation(|v| (v - m) * (v - m)).max(0.0)
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// `P(X ≤ x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        let k = self.values.partition_point(|&v| v <= x);
        compensated_sum(self.probs[..k].iter().copied())
    }

    /// Law of `-X`.
    pub fn negate(&self) -> Self {
        DiscreteRandomVariable {
            values: self.values.iter().rev().map(|v| -v).collect(),
            probs: self.probs.iter().rev().copied().collect(),
        }
    }

    pub fn shift(&self, c: f64) -> Self {
        Self::merge_sorted(self.atoms().map(|(v, p)| (v + c, p)).collect())
    }

    /// Law of `X + Y` for independent `X`, `Y`. Fails when more than `cap` atoms survive merging.
    pub fn convolve(&self, other: &Self, cap: usize) -> Result<Self> {
        let (a, b) = if self.len() >= other.len() { (self, other) } else { (other, self) };
        // each row a_i + b_j is sorted in j; merge rows through a heap
        use std::cmp::Reverse;
        use std::collections::BinaryHeap;
        #[derive(PartialEq)]
        struct Key(f64);
        impl Eq for Key {}
        impl PartialOrd for Key {
            fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
                Some(self.cmp(o))
            }
        }
        impl Ord for Key {
            fn cmp(&self, o: &Self) -> std::cmp::Ordering {
                self.0.total_cmp(&o.0)
            }
        }
        let rows = b.len();
        let mut heap = BinaryHeap::with_capacity(rows);
        for j in 0..rows {
            heap.push(Reverse((Key(a.values[0] + b.values[j]), j, 0usize)));
        }
        let mut values: Vec<f64> = Vec::new();
        let mut probs: Vec<f64> = Vec::new();
        let mut acc = CompensatedSum::new();
        while let Some(Reverse((Key(v), j, i))) = heap.pop() {
            let p = a.probs[i] * b.probs[j];
            match values.last() {
                Some(&rep) if nearly_equal(rep, v, MERGE_REL, MERGE_ABS) => acc.add(p),
                _ => {
                    if !values.is_empty() {
                        probs.push(acc.value());
                        if values.len() >= cap {
                            return Err(Error::AtomCapExceeded { atoms: values.len() + 1, cap });
                        }
                    }
                    values.push(v);
                    acc = CompensatedSum::new();
                    acc.add(p);
                }
            }
            if i + 1 < a.len() {
                heap.push(Reverse((Key(a.values[i + 1] + b.values[j]), j, i + 1)));
            }
        }
        probs.push(acc.value());
        Ok(DiscreteRandomVariable { values, probs })
    }
}

/// `Δ_δ^ε(X)` as sorted disjoint closed intervals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaSetResult {
    pub intervals: Vec<(f64, f64)>,
    /// `+inf` when the set is empty.
    #[serde(serialize_with = "ser_extended")]
    pub infimum: f64,
}

fn ser_extended<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if *v > 0.0 {
        s.serialize_str("+inf")
    } else {
        s.serialize_str("-inf")
    }
}

impl DeltaSetResult {
    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// `-inf` when empty.
    pub fn supremum(&self) -> f64 {
        self.intervals.last().map_or(f64::NEG_INFINITY, |iv| iv.1)
    }

    /// Largest member of the set inside `[lo, hi]`.
    pub fn largest_in(&self, lo: f64, hi: f64) -> Option<f64> {
        self.intervals.iter().rev().find(|&&(a, b)| a <= hi && b >= lo).map(|&(_, b)| b.min(hi))
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| a <= x && x <= b)
    }

    /// Every interval of `self` lies inside some interval of `other`.
    pub fn is_subset_of(&self, other: &DeltaSetResult) -> bool {
        self.intervals.iter().all(|&(a, b)| other.intervals.iter().any(|&(c, d)| c <= a && b <= d))
    }
}

fn prefix_sums(p: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(p.len() + 1);
    let mut acc = CompensatedSum::new();
    out.push(0.0);
    for &x in p {
        acc.add(x);
        out.push(acc.value());
    }
    out
}

/// `{x : P(|X-x| ≤ δ) > 1-ε}`.
pub fn delta_set(x: &DiscreteRandomVariable, eps: f64, delta: f64) -> Result<DeltaSetResult> {
    if !(eps > 0.0 && eps < 1.0) {
        return param(format!("epsilon must lie in (0,1), got {eps}"));
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return param(format!("delta must be finite and non-negative, got {delta}"));
    }
    let threshold = 1.0 - eps;
    // atom i is in the window at x iff enter_i ≤ x ≤ exit_i
    let enter: Vec<f64> = x.values.iter().map(|a| a - delta).collect();
    let exit: Vec<f64> = x.values.iter().map(|a| a + delta).collect();
    let prefix = prefix_sums(&x.probs);
    let mut cand: Vec<f64> = enter.iter().chain(exit.iter()).copied().collect();
    cand.sort_by(f64::total_cmp);
    cand.dedup();

    let mut pieces: Vec<(f64, f64)> = Vec::new();
    for (j, &v) in cand.iter().enumerate() {
        let entered = enter.partition_point(|&e| e <= v);
        let left_before = exit.partition_point(|&e| e < v);
        if prefix[entered] - prefix[left_before] > threshold {
            pieces.push((v, v));
        }
        if j + 1 < cand.len() {
            // open gap (v, next): nothing enters or leaves inside it
            let left = exit.partition_point(|&e| e <= v);
            if prefix[entered] - prefix[left] > threshold {
                pieces.push((v, cand[j + 1]));
            }
        }
    }
    let mut intervals: Vec<(f64, f64)> = Vec::new();
    for (a, b) in pieces {
        match intervals.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => intervals.push((a, b)),
        }
    }
    let infimum = intervals.first().map_or(f64::INFINITY, |iv| iv.0);
    Ok(DeltaSetResult { intervals, infimum })
}

/// `P(|X-x| ≤ δ)`, with the window widened by `tol` on each side.
pub fn mass_within(x: &DiscreteRandomVariable, center: f64, delta: f64, tol: f64) -> f64 {
    let lo = x.values.partition_point(|&v| v < center - delta - tol);
    let hi = x.values.partition_point(|&v| v <= center + delta + tol);
    compensated_sum(x.probs[lo..hi].iter().copied())
}

/// `Max^ε(X) = inf{x : P(X ≤ x) > 1-ε}`.
pub fn max_eps(x: &DiscreteRandomVariable, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return param(format!("epsilon must lie in (0,1), got {eps}"));
    }
    let mut acc = CompensatedSum::new();
    for (v, p) in x.atoms() {
        acc.add(p);
        if acc.value() > 1.0 - eps {
            return Ok(v);
        }
    }
    Ok(x.max())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rv(a: &[(f64, f64)]) -> DiscreteRandomVariable {
        DiscreteRandomVariable::new(a.to_vec()).unwrap()
    }

    #[test]
    fn point_mass_delta_set() {
        let x = DiscreteRandomVariable::point_mass(5.0);
        let d = delta_set(&x, 0.3, 0.25).unwrap();
        assert_eq!(d.intervals, vec![(4.75, 5.25)]);
        assert_eq!(d.infimum, 4.75);
    }

    #[test]
    fn two_point_delta_sets() {
        let x = rv(&[(0.0, 0.5), (1.0, 0.5)]);
        let d = delta_set(&x, 0.4, 0.1).unwrap();
        assert!(d.is_empty());
        assert_eq!(d.infimum, f64::INFINITY);
        let d = delta_set(&x, 0.6, 0.1).unwrap();
        assert_eq!(d.infimum, -0.1);
        assert_eq!(d.intervals, vec![(-0.1, 0.1), (0.9, 1.1)]);
    }

    #[test]
    fn overlapping_windows_join() {
        // windows of radius 0.6 around 0 and 1 overlap on [0.4, 0.6]
        let x = rv(&[(0.0, 0.5), (1.0, 0.5)]);
        let d = delta_set(&x, 0.4, 0.6).unwrap();
        assert_eq!(d.intervals.len(), 1);
        let (a, b) = d.intervals[0];
        assert!((a - 0.4).abs() < 1e-15 && (b - 0.6).abs() < 1e-15);
    }

    #[test]
    fn max_eps_examples() {
        assert_eq!(max_eps(&DiscreteRandomVariable::point_mass(2.5), 0.1).unwrap(), 2.5);
        let u4 = rv(&[(0.0, 0.25), (1.0, 0.25), (2.0, 0.25), (3.0, 0.25)]);
        assert_eq!(max_eps(&u4, 0.2).unwrap(), 3.0);
        let u2 = rv(&[(0.0, 0.5), (1.0, 0.5)]);
        assert_eq!(max_eps(&u2, 0.6).unwrap(), 0.0);
    }

    #[test]
    fn merging_and_convolution() {
        let x = rv(&[(0.1 + 0.2, 0.5), (0.3, 0.5)]);
        assert_eq!(x.len(), 1);
        let y = rv(&[(0.0, 0.5), (1.0, 0.5)]);
        let s = y.convolve(&y, 100).unwrap();
        assert_eq!(s.values(), &[0.0, 1.0, 2.0]);
        assert_eq!(s.probs(), &[0.25, 0.5, 0.25]);
        assert!(matches!(y.convolve(&y, 2), Err(Error::AtomCapExceeded { .. })));
    }

    #[test]
    fn rejects_bad_atoms() {
        assert!(DiscreteRandomVariable::new(vec![(0.0, 0.5)]).is_err());
        assert!(DiscreteRandomVariable::new(vec![(f64::NAN, 1.0)]).is_err());
        assert!(DiscreteRandomVariable::new(vec![]).is_err());
    }
}
