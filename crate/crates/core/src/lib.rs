//! Existence, computation and long-term stability of voltage equilibria in
//! power networks with constant power loads.
//!
//! Every supported network reduces to `A x + stack(b_i / x_i) = w` on the
//! positive orthant ([`model::SystemData`]). The associated flow
//! `dx/dt = -A x - stack(b_i / x_i) + w` is monotone; started inside the
//! characteristic set it either drives a coordinate to zero in finite time
//! (no equilibrium) or converges to the componentwise largest equilibrium,
//! which is then certified by [`stability::assess`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

#[cfg(test)]
#[macro_use]
mod test_macros;

pub mod adapters;
pub mod error;
pub mod input;
pub mod model;
pub mod ode;
pub mod oracle;
pub mod report;
pub mod seed;
pub mod stability;
pub mod sweep;

pub use error::{Error, Result};
pub use model::{
    characteristic_margin, eval_jacobian, eval_rhs, in_characteristic_set, validate_system,
    SystemData, ValidationReport,
};
pub use ode::{classify, Analysis, ClassifyOptions, IntegrationOptions, Outcome};
pub use seed::{build_characteristic_seed, find_positive_cone_point, CharacteristicSeed};
pub use stability::{assess, StabilityReport};
