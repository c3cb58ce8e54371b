//! Integration of the flow from a characteristic seed and interpretation of
//! its fate: finite-time collapse of a coordinate, or convergence to the
//! dominant equilibrium.

mod classify;
mod integrate;
mod refine;
mod stepper;

pub use classify::{classify, Analysis, ClassifyOptions, InconclusiveReason, Outcome};
pub use integrate::{
    integrate_characteristic, integrate_from, Event, EventKind, Flow, FlowState,
    IntegrationOptions, RawOutcome, Sample, Trajectory,
};
pub use refine::{refine_equilibrium, REFINE_TOL};
