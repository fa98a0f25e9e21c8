//! Entanglement dynamics of two dipolar-coupled qubits in a spatially
//! correlated dissipative environment.

pub mod dynamics;
pub mod entanglement;
pub mod error;
pub mod experiments;
pub mod master_equation;
pub mod observables;
pub mod spin;

pub use dynamics::{integrate, IntegrateOptions, Sampling, SteadyState, TimeUnit, Trajectory};
pub use entanglement::{concurrence_guard, ConcurrenceResult};
pub use error::{Error, Result};
pub use master_equation::{DipolarCoupling, PhysicalParams, RateSet, ScaledRates, Superoperator};
pub use observables::{BlockSystem, ObservableVector};
