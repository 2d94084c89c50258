//! Reproduction harnesses: noiseless phase transitions, noisy SNR sweeps and
//! wavelet-frame image recovery.

mod grid;
mod image;
mod instance;
mod metrics;
mod output;
mod ptc;

pub use grid::{
    default_methods, desk_noisy_methods, run_noisy_sweep, run_phase_transition, tune_noisy_lambda, CellRate,
    ExperimentGrid, Method, NoisyReport, NoisySweep, PhaseTransitionReport, TrialResult, DESK_NOISY_LAMBDA,
    DESK_NOISY_SHAPE,
};
pub use image::{
    calibrate_image_nu, default_image_methods, run_image_recovery, synthetic_phantom, GrayImage,
    ImageExperiment, ImageMethod, ImageReport, DESK_IMAGE_LAMBDA,
};
pub use instance::{calibrate_nu, gen_instance, Instance, MATRIX_STREAM, NOISE_STREAM, SIGNAL_STREAM};
pub use metrics::{metrics, MetricReport};
pub use output::{
    write_image_plot_data, write_noisy_plot_data, write_ptc_csv, write_ptc_plot_data, write_rates_csv,
    write_results_csv, RunManifest,
};
pub use ptc::{column_crossing, extract_ptc, PtcPoint};
