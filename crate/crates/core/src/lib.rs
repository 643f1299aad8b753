//! Simulation and calibration toolkit for microwave-activated controlled-phase
//! gates on capacitively coupled fluxonium qubits.
//!
//! The crate is organized around a pipeline:
//!
//! 1. [`spectrum`] diagonalizes single fluxonium circuits,
//! 2. [`coupled`] builds and labels the coupled two-qubit spectrum,
//! 3. [`stark`] carries the closed-form differential ac-Stark / ZZ model,
//! 4. [`pulse`] generates flat-top + DRAG drive envelopes,
//! 5. [`dynamics`] time-evolves the driven system (unitary, RWA, Lindblad),
//! 6. [`metrics`] scores controlled-phase gates,
//! 7. [`calibrate`] tunes pulse parameters with Nelder-Mead,
//! 8. [`benchmarking`] simulates RB / XEB and readout correction,
//! 9. [`tomography`] implements state/process tomography,
//! 10. [`config`] parses device and experiment descriptions.

pub mod benchmarking;
pub mod calibrate;
pub mod config;
pub mod coupled;
pub mod dynamics;
pub mod error;
pub mod fit;
pub mod linalg;
pub mod metrics;
pub mod pulse;
pub mod rwa;
pub mod spectrum;
pub mod stark;
pub mod tomography;



pub use error::{Error, Result};
pub use linalg::C64;



pub use spectrum::{FluxoniumSpec, QubitEigenSystem};

