//! Network model for unbalanced three-phase feeders and the per-component
//! electrical formulas used by both solvers.

mod distributed;
mod loads;
mod model;
mod validate;

pub use distributed::{lump_distributed_load, LumpedFragment};
pub use loads::{capacitor_current, load_current, phase_power, MIN_VOLTAGE_PU};
pub use model::*;
pub use validate::{validate_network, Violation};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("voltage collapsed at {component} (|V| = {magnitude:e} pu)")]
    ZeroVoltage { component: String, magnitude: f64 },
}
