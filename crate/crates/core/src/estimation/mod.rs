//! Parameter extraction from spectroscopy, saturation and time-domain
//! calibration data.

pub mod calibration;
pub mod circle;
pub mod lm;
pub mod qubit_fit;
pub mod saturation;
pub mod synth;

pub use calibration::{
    calibrate_transmission, calibrate_transmission_batch, solve_line_budget, LineBudget, LineBudgetInput,
    SteadyWindow, TransmissionCalibration,
};
pub use circle::{circle_fit, CircleFitResult};
pub use qubit_fit::{extract_qubit_params, QubitFitReport};
pub use saturation::{fit_saturation, SaturationCurve, SaturationReport};
