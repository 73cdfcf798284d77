//! Quantum-noise modelling for a detuned dual-recycled Fabry-Perot Michelson
//! interferometer: two-photon algebra, interferometer transfer functions,
//! filter-cavity synthesis, coupled-cavity equivalence, EPR squeezing and
//! horizon metrics.

pub mod config;
pub mod coupled_equivalence;
pub mod epr_scheme;
pub mod error;
pub mod filter_synthesis;
pub mod ifo_model;
pub mod metrics_cli;
pub mod two_photon_core;

pub use config::IfoConfig;
pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Speed of light [m/s].
pub const C_LIGHT: f64 = 299_792_458.0;
/// Reduced Planck constant [J s].
pub const HBAR: f64 = 1.054_571_817e-34;

/// Angular frequencies for `points` log-spaced frequencies in [fmin, fmax] Hz.
pub fn log_grid(fmin: f64, fmax: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![2.0 * std::f64::consts::PI * fmin];
    }
    let (a, b) = (fmin.log10(), fmax.log10());
    (0..points)
        .map(|i| {
            let x = a + (b - a) * i as f64 / (points - 1) as f64;
            2.0 * std::f64::consts::PI * 10f64.powf(x)
        })
        .collect()
}

/// Default analysis grid: 200 log points over 1-100 Hz.
pub fn default_grid() -> Vec<f64> {
    log_grid(1.0, 100.0, 200)
}
