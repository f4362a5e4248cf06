//! Analytic models of the device under test.

mod expr;
mod network;
mod rational;
mod transient;

pub use expr::{parse_cell, preset, preset_names, redox_dummy, resolve_cell, DECADE_RC_CELLS};
pub use network::{
    impedance_at, parallel_rc_magnitude, parallel_rc_phase, CellNetwork, ComplexImpedance,
};
pub use transient::{settling_time_constant, time_domain_current, InitialState};
