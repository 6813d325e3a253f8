//! Distributions, energy levels, the bath, and equilibrium quantities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, log_sum_exp};

const NORM_TOL: f64 = 1e-12;
const RENORM_TOL: f64 = 1e-9;

/// Heat bath at fixed temperature. Energies are absolute; `kT` carries the unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BathRepr", into = "BathRepr")]
pub struct Bath {
    beta: f64,
    kt: f64,
}

#[derive(Serialize, Deserialize)]
struct BathRepr {
    #[serde(rename = "kT")]
    kt: f64,
}

impl TryFrom<BathRepr> for Bath {
    type Error = Error;
    fn try_from(r: BathRepr) -> Result<Self> {
        Bath::with_kt(r.kt)
    }
}

impl From<Bath> for BathRepr {
    fn from(b: Bath) -> Self {
        BathRepr { kt: b.kt }
    }
}

impl Bath {
    pub fn with_kt(kt: f64) -> Result<Self> {
        if !(kt.is_finite() && kt > 0.0) {
            return Err(Error::InvalidBath(format!("kT must be positive and finite, got {kt}")));
        }
        Ok(Bath { beta: 1.0 / kt, kt })
    }

    pub fn with_beta(beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidBath(format!("beta must be positive and finite, got {beta}")));
        }
        Ok(Bath { beta, kt: 1.0 / beta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn kt(&self) -> f64 {
        self.kt
    }
}

impl Default for Bath {
    fn default() -> Self {
        Bath { beta: 1.0, kt: 1.0 }
    }
}

/// Probability vector over `N >= 1` states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Distribution {
    probs: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Distribution {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Distribution::new(v)
    }
}

impl From<Distribution> for Vec<f64> {
    fn from(d: Distribution) -> Self {
        d.probs
    }
}

impl Distribution {
    /// Accepts vectors summing to 1 within 1e-12; renormalizes up to 1e-9, rejects beyond.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("no states".into()));
        }
        if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidDistribution(format!("entry {i} is {p}")));
        }
        let total = compensated_sum(probs.iter().copied());
        let dev = (total - 1.0).abs();
        if dev <= NORM_TOL {
            Ok(Distribution { probs })
        } else if dev <= RENORM_TOL {
            Ok(Distribution { probs: probs.iter().map(|p| p / total).collect() })
        } else {
            Err(Error::InvalidDistribution(format!("entries sum to {total}")))
        }
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDistribution("no states".into()));
        }
        Ok(Distribution { probs: vec![1.0 / n as f64; n] })
    }

    pub fn point_mass(n: usize, s: usize) -> Result<Self> {
        if s >= n {
            return Err(Error::IndexOutOfRange { index: s, n });
        }
        let mut probs = vec![0.0; n];
        probs[s] = 1.0;
        Ok(Distribution { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn has_full_support(&self) -> bool {
        self.probs.iter().all(|&p| p > 0.0)
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.probs[i] > 0.0).collect()
    }
}

/// Finite energies of `N >= 1` levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EnergyLevels {
    levels: Vec<f64>,
}

impl TryFrom<Vec<f64>> for EnergyLevels {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        EnergyLevels::new(v)
    }
}

impl From<EnergyLevels> for Vec<f64> {
    fn from(h: EnergyLevels) -> Self {
        h.levels
    }
}

impl EnergyLevels {
    pub fn new(levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidLevels("no levels".into()));
        }
        if let Some((i, h)) = levels.iter().enumerate().find(|(_, h)| !h.is_finite()) {
            return Err(Error::InvalidLevels(format!("level {i} is {h}")));
        }
        Ok(EnergyLevels { levels })
    }

    pub fn degenerate(n: usize, r: f64) -> Result<Self> {
        Self::new(vec![r; n])
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn shifted(&self, c: f64) -> Result<Self> {
        Self::new(self.levels.iter().map(|h| h + c).collect())
    }

    /// `(1-x) self + x other`.
    pub fn interpolate(&self, other: &EnergyLevels, x: f64) -> Result<Self> {
        check_dim(self.len(), other.len())?;
        Self::new(self.levels.iter().zip(&other.levels).map(|(a, b)| (1.0 - x) * a + x * b).collect())
    }

    pub fn min(&self) -> f64 {
        self.levels.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.levels.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// A subset of state indices. Indices are 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventSet {
    members: Vec<usize>,
}

impl EventSet {
    pub fn new(mut members: Vec<usize>, n: usize) -> Result<Self> {
        members.sort_unstable();
        for w in members.windows(2) {
            if w[0] == w[1] {
                return Err(Error::InvalidParameter(format!("duplicate index {}", w[0])));
            }
        }
        if let Some(&i) = members.last() {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, n });
            }
        }
        Ok(EventSet { members })
    }

    pub fn full(n: usize) -> Self {
        EventSet { members: (0..n).collect() }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.binary_search(&i).is_ok()
    }

    pub fn complement(&self, n: usize) -> EventSet {
        EventSet { members: (0..n).filter(|i| !self.contains(*i)).collect() }
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// `ln Z(h)`.
pub fn log_partition(h: &EnergyLevels, bath: &Bath) -> f64 {
    log_sum_exp(h.levels().iter().map(|e| -bath.beta() * e))
}

pub fn partition_function(h: &EnergyLevels, bath: &Bath) -> f64 {
    log_partition(h, bath).exp()
}

/// `ln G_n(h)` for every level.
pub fn log_gibbs(h: &EnergyLevels, bath: &Bath) -> Vec<f64> {
    let lz = log_partition(h, bath);
    h.levels().iter().map(|e| -bath.beta() * e - lz).collect()
}

pub fn gibbs(h: &EnergyLevels, bath: &Bath) -> Distribution {
    let probs: Vec<f64> = log_gibbs(h, bath).into_iter().map(f64::exp).collect();
    let total = compensated_sum(probs.iter().copied());
    Distribution { probs: probs.into_iter().map(|p| p / total).collect() }
}

pub fn free_energy(h: &EnergyLevels, bath: &Bath) -> f64 {
    -bath.kt() * log_partition(h, bath)
}

pub fn log_truncated_partition(h: &EnergyLevels, event: &EventSet, bath: &Bath) -> Result<f64> {
    if event.is_empty() {
        return Err(Error::EmptyEvent);
    }
    if let Some(&i) = event.members().last() {
        if i >= h.len() {
            return Err(Error::IndexOutOfRange { index: i, n: h.len() });
        }
    }
    Ok(log_sum_exp(event.members().iter().map(|&n| -bath.beta() * h.levels()[n])))
}

pub fn truncated_partition(h: &EnergyLevels, event: &EventSet, bath: &Bath) -> Result<f64> {
    Ok(log_truncated_partition(h, event, bath)?.exp())
}

pub fn event_probability(q: &Distribution, event: &EventSet) -> f64 {
    compensated_sum(event.members().iter().filter(|&&n| n < q.len()).map(|&n| q.probs()[n]))
}
