//! Processes: alternating level transformations and thermalizations.

mod build;
mod law;
mod paths;
mod sample;

pub use build::{
    build_eps_erasure, build_eps_extraction, build_erasure, build_erasure_with_path, build_expected_extraction,
    build_expected_extraction_with_path, build_itr, itr_schedule, predicted_yields, EpsErasure, ItrPath,
};
pub use law::{
    exact_work_distribution, exact_work_distribution_with, exact_work_moments, lt_increment_laws, Provenance,
    WorkDistribution, WorkMoments, DEFAULT_ATOM_CAP,
};
pub use paths::{enumerate_paths, path_count, path_law, DEFAULT_PATH_CAP};
pub use sample::{sample_work, sample_work_values, CHUNK_SIZE, GENERATOR};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::thermo::{check_dim, gibbs, Bath, Distribution, EnergyLevels};

/// One primitive operation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProcessStep {
    /// Level transformation to the given configuration.
    Lt(EnergyLevels),
    Therm,
}

/// Initial levels plus a sequence of steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProcessRepr", into = "ProcessRepr")]
pub struct Process {
    initial_levels: EnergyLevels,
    steps: Vec<ProcessStep>,
}

#[derive(Serialize, Deserialize)]
struct ProcessRepr {
    initial_levels: EnergyLevels,
    steps: Vec<ProcessStep>,
}

impl TryFrom<ProcessRepr> for Process {
    type Error = Error;
    fn try_from(r: ProcessRepr) -> Result<Self> {
        Process::new(r.initial_levels, r.steps)
    }
}

impl From<Process> for ProcessRepr {
    fn from(p: Process) -> Self {
        ProcessRepr { initial_levels: p.initial_levels, steps: p.steps }
    }
}

impl Process {
    pub fn new(initial_levels: EnergyLevels, steps: Vec<ProcessStep>) -> Result<Self> {
        let n = initial_levels.len();
        for s in &steps {
            if let ProcessStep::Lt(h) = s {
                check_dim(n, h.len())?;
            }
        }
        Ok(Process { initial_levels, steps })
    }

    pub fn initial_levels(&self) -> &EnergyLevels {
        &self.initial_levels
    }

    pub fn steps(&self) -> &[ProcessStep] {
        &self.steps
    }

    pub fn dim(&self) -> usize {
        self.initial_levels.len()
    }

    pub fn is_normalized(&self) -> bool {
        self.steps.windows(2).all(|w| {
            !matches!(
                (&w[0], &w[1]),
                (ProcessStep::Lt(_), ProcessStep::Lt(_)) | (ProcessStep::Therm, ProcessStep::Therm)
            )
        })
    }

    /// Merges consecutive LTs into the last one and consecutive thermalizations into one.
    pub fn normalize(&self) -> Process {
        let mut steps: Vec<ProcessStep> = Vec::with_capacity(self.steps.len());
        for s in &self.steps {
            match (steps.last_mut(), s) {
                (Some(ProcessStep::Lt(prev)), ProcessStep::Lt(h)) => *prev = h.clone(),
                (Some(ProcessStep::Therm), ProcessStep::Therm) => {}
                _ => steps.push(s.clone()),
            }
        }
        Process { initial_levels: self.initial_levels.clone(), steps }
    }

    /// Configuration in force before each step, followed by the final one.
    pub fn configurations(&self) -> Vec<&EnergyLevels> {
        let mut out = Vec::with_capacity(self.steps.len() + 1);
        let mut cur = &self.initial_levels;
        out.push(cur);
        for s in &self.steps {
            if let ProcessStep::Lt(h) = s {
                cur = h;
            }
            out.push(cur);
        }
        out
    }

    pub fn final_levels(&self) -> &EnergyLevels {
        self.steps
            .iter()
            .rev()
            .find_map(|s| match s {
                ProcessStep::Lt(h) => Some(h),
                ProcessStep::Therm => None,
            })
            .unwrap_or(&self.initial_levels)
    }

    /// Levels at the last thermalization, if any.
    pub fn last_thermalization_levels(&self) -> Option<&EnergyLevels> {
        let configs = self.configurations();
        self.steps.iter().enumerate().rev().find_map(|(i, s)| matches!(s, ProcessStep::Therm).then(|| configs[i]))
    }

    pub fn thermalization_count(&self) -> usize {
        self.steps.iter().filter(|s| matches!(s, ProcessStep::Therm)).count()
    }

    pub fn lt_count(&self) -> usize {
        self.steps.len() - self.thermalization_count()
    }

    /// Law of the final state.
    pub fn final_state_distribution(&self, q0: &Distribution, bath: &Bath) -> Result<Distribution> {
        check_dim(self.dim(), q0.len())?;
        Ok(match self.last_thermalization_levels() {
            Some(h) => gibbs(h, bath),
            None => q0.clone(),
        })
    }

    /// Runs the configuration sequence backwards.
    pub fn reverse(&self) -> Process {
        let configs = self.configurations();
        let steps = self
            .steps
            .iter()
            .enumerate()
            .rev()
            .map(|(i, s)| match s {
                ProcessStep::Lt(_) => ProcessStep::Lt(configs[i].clone()),
                ProcessStep::Therm => ProcessStep::Therm,
            })
            .collect();
        Process { initial_levels: self.final_levels().clone(), steps }
    }

    /// `self` followed by `other`; `other` must start where `self` ends.
    pub fn then(&self, other: &Process) -> Result<Process> {
        if self.final_levels() != other.initial_levels() {
            return Err(Error::InvalidParameter("processes do not join: final and initial levels differ".into()));
        }
        let mut steps = self.steps.clone();
        steps.extend(other.steps.iter().cloned());
        Ok(Process { initial_levels: self.initial_levels.clone(), steps })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lv(v: &[f64]) -> EnergyLevels {
        EnergyLevels::new(v.to_vec()).unwrap()
    }

    #[test]
    fn normalize_merges_runs() {
        let p = Process::new(lv(&[0.0, 0.0]), vec![ProcessStep::Lt(lv(&[1.0, 0.0])), ProcessStep::Lt(lv(&[2.0, 0.0]))])
            .unwrap();
        assert_eq!(p.normalize().steps(), &[ProcessStep::Lt(lv(&[2.0, 0.0]))]);
        let t = Process::new(lv(&[0.0]), vec![ProcessStep::Therm, ProcessStep::Therm]).unwrap();
        assert_eq!(t.normalize().steps(), &[ProcessStep::Therm]);
        assert!(t.normalize().is_normalized());
    }

    #[test]
    fn final_state_rules() {
        let b = Bath::default();
        let q0 = Distribution::new(vec![0.2, 0.8]).unwrap();
        let pure = Process::new(lv(&[0.0, 0.0]), vec![ProcessStep::Lt(lv(&[1.0, 3.0]))]).unwrap();
        assert_eq!(pure.final_state_distribution(&q0, &b).unwrap(), q0);
        let hp = lv(&[0.0, 1.0]);
        let ends =
            Process::new(lv(&[0.0, 0.0]), vec![ProcessStep::Lt(hp.clone()), ProcessStep::Therm]).unwrap();
        assert_eq!(ends.final_state_distribution(&q0, &b).unwrap(), gibbs(&hp, &b));
        let after = Process::new(
            lv(&[0.0, 0.0]),
            vec![ProcessStep::Lt(hp.clone()), ProcessStep::Therm, ProcessStep::Lt(lv(&[5.0, -2.0]))],
        )
        .unwrap();
        assert_eq!(after.final_state_distribution(&q0, &b).unwrap(), gibbs(&hp, &b));
    }

    #[test]
    fn reverse_single_lt_and_involution() {
        let p = Process::new(lv(&[0.0, 0.0]), vec![ProcessStep::Lt(lv(&[0.0, 1.0]))]).unwrap();
        let r = p.reverse();
        assert_eq!(r.initial_levels(), &lv(&[0.0, 1.0]));
        assert_eq!(r.steps(), &[ProcessStep::Lt(lv(&[0.0, 0.0]))]);
        let q = Process::new(
            lv(&[0.0, 0.5, 1.0]),
            vec![ProcessStep::Therm, ProcessStep::Lt(lv(&[1.0, 0.0, 2.0])), ProcessStep::Therm, ProcessStep::Lt(lv(&[3.0, 1.0, 0.0]))],
        )
        .unwrap();
        assert_eq!(q.reverse().reverse(), q);
    }

    #[test]
    fn json_shape() {
        let p = Process::new(lv(&[0.0, 1.0]), vec![ProcessStep::Lt(lv(&[1.0, 1.0])), ProcessStep::Therm]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"initial_levels":[0.0,1.0],"steps":[{"lt":[1.0,1.0]},"therm"]}"#);
        let back: Process = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<Process>(r#"{"initial_levels":[0.0],"steps":[{"lt":[1.0,1.0]}]}"#).is_err());
    }
}
