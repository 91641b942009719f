//! Data-generating processes and Monte Carlo studies of size, power and
//! local power.

mod dgp;
mod drift;
mod study;

pub use dgp::{correlation_matrix, generate, BreakSpec, DgpSpec, InnovationLaw, BURN_IN};
pub use drift::{drift_c, StepComponent, StepFunctionG};
pub use study::{
    changepoint_study, local_power_study, rejection_study, LocalPowerOutcome, RejectionRate,
};
