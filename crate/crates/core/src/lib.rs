//! Work extraction and erasure against a heat bath, for finite classical systems.
//!
//! Energy levels, bath and distributions live in [`thermo`]; divergences, `F^ε` and
//! (ε,δ)-sets in [`entropy`]; processes and their work laws in [`process`].
//! [`fluctuation`] and [`asymptotics`] check the bounds, and [`scenario`] runs
//! declarative experiments for the command line.

pub mod asymptotics;
pub mod csv;
pub mod entropy;
mod error;
pub mod fluctuation;
pub mod numeric;
pub mod process;
pub mod scenario;
pub mod thermo;

pub use entropy::{Certificate, DeltaSetResult, DiscreteRandomVariable, SubsetSolution};
pub use error::{Error, Result};
pub use process::{Process, ProcessStep, WorkDistribution};
pub use thermo::{Bath, Distribution, EnergyLevels, EventSet};
