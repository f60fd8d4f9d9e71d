//! Certificates, performance specifications, trigger rules and the
//! exponential-case MIET analysis.

mod certificate;
mod class_k;
mod lipschitz;
mod miet;
mod policy;
mod spec;
mod trigger;

pub use certificate::{GradFn, IssCertificate, PairFn, QuadConstants, ScalarFn, Surrogate};
pub use class_k::ClassK;
pub use lipschitz::{estimate_lipschitz, LipschitzEstimate, LIPSCHITZ_SAFETY};
pub use miet::{
    exp_barrier_condition, general_d, gronwall_bound, miet_deriv_exp, miet_deriv_general_bound, miet_exp_barrier,
    phi, tau_star, xi, xi_integral, EXP_GRID_POINTS,
};
pub use policy::{Beta, ConsensusInit, TriggerPolicy};
pub use spec::{spec_value, PerformanceSpec, SpecContext};
pub use trigger::{trigger_value_barrier, trigger_value_deriv, trigger_value_dynamic, DynamicState};
