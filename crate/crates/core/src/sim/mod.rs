//! Circuit execution on statevector and density-matrix backends, with
//! generator-exponential gates, depolarizing noise, bitstring sampling,
//! Hadamard-test estimation and readout-error calibration.

mod hadamard;
mod readout;
mod state;

pub use hadamard::{hadamard_test, run_hadamard_pattern, CtrlOp, HtEvent, HtRun};
pub use readout::{build_readout_calibration, correct_readout, ReadoutCalibration};
pub use state::{
    sample_bitstrings, write_histogram_csv, Circuit, DensityMatrix, Gate, NoiseMode, NoiseModel,
    StateVector,
};
