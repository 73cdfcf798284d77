//! Horizon reach, scheme comparison, CSV emission and the command-line tool.

pub mod cli;
pub mod table;

use std::f64::consts::PI;

use crate::config::IfoConfig;
use crate::epr_scheme::{nearest_solution, sensitivity_curve, solve_epr_params, NoiseCurve, Scheme, SchemeKind};
use crate::error::{Error, Result};
use crate::filter_synthesis::{synthesize_filters, FilterSolution};
use crate::ifo_model::IfoModel;
use crate::C_LIGHT;

/// Solar gravitational parameter G M_sun [m^3/s^2].
pub const GM_SUN: f64 = 1.327_124_400_18e20;
/// One megaparsec [m].
pub const MPC: f64 = 3.085_677_581_491_367e22;

/// Flat Lambda-CDM background.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cosmology {
    /// Hubble constant [km/s/Mpc].
    pub h0: f64,
    pub omega_m: f64,
}

impl Default for Cosmology {
    fn default() -> Self {
        Self { h0: 67.9, omega_m: 0.3065 }
    }
}

impl Cosmology {
    fn e(&self, z: f64) -> f64 {
        (self.omega_m * (1.0 + z).powi(3) + 1.0 - self.omega_m).sqrt()
    }

    /// Hubble distance c/H0 [Mpc].
    pub fn hubble_distance_mpc(&self) -> f64 {
        C_LIGHT / 1e3 / self.h0
    }

    /// Line-of-sight comoving distance [Mpc], Simpson's rule in ln(1+z).
    pub fn comoving_distance_mpc(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        const N: usize = 512;
        let umax = z.ln_1p();
        let h = umax / N as f64;
        let f = |u: f64| {
            let zp = u.exp();
            zp / self.e(zp - 1.0)
        };
        let mut s = f(0.0) + f(umax);
        for i in 1..N {
            s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        self.hubble_distance_mpc() * s * h / 3.0
    }

    /// Luminosity distance [Mpc].
    pub fn luminosity_distance_mpc(&self, z: f64) -> f64 {
        (1.0 + z) * self.comoving_distance_mpc(z)
    }
}

/// Assumptions of the horizon calculation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HorizonSettings {
    /// Network SNR threshold.
    pub snr_threshold: f64,
    pub detector_count: usize,
    /// Interferometer opening angle [rad].
    pub opening_angle: f64,
    pub cosmology: Cosmology,
    /// Integration band [Hz].
    pub fmin: f64,
    pub fmax: f64,
}

impl Default for HorizonSettings {
    fn default() -> Self {
        Self {
            snr_threshold: 8.0,
            detector_count: 3,
            opening_angle: PI / 3.0,
            cosmology: Cosmology::default(),
            fmin: 1.0,
            fmax: 100.0,
        }
    }
}

impl HorizonSettings {
    /// One-line statement of every assumption, for output headers.
    pub fn describe(&self) -> String {
        format!(
            "flat LCDM H0={} km/s/Mpc Omega_m={}; network SNR threshold {}; {} detectors, opening angle {:.1} deg, optimal orientation; restricted PN inspiral to redshifted ISCO; band {}-{} Hz; quantum noise only",
            self.cosmology.h0,
            self.cosmology.omega_m,
            self.snr_threshold,
            self.detector_count,
            self.opening_angle.to_degrees(),
            self.fmin,
            self.fmax
        )
    }
}

/// Strain PSD interpolated linearly in log-log space.
#[derive(Clone, Debug, PartialEq)]
pub struct PsdModel {
    pub freq_hz: Vec<f64>,
    pub psd: Vec<f64>,
}

impl PsdModel {
    pub fn from_curve(curve: &NoiseCurve) -> Result<Self> {
        Self::new(curve.freq_hz.clone(), curve.psd_total())
    }

    pub fn new(freq_hz: Vec<f64>, psd: Vec<f64>) -> Result<Self> {
        if freq_hz.len() < 2 || freq_hz.len() != psd.len() {
            return Err(Error::Config("noise curve needs at least two points".into()));
        }
        if freq_hz.windows(2).any(|w| w[1] <= w[0]) || freq_hz[0] <= 0.0 {
            return Err(Error::Config("noise curve frequencies must be positive and increasing".into()));
        }
        if psd.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::Numerical("noise curve PSD must be positive and finite".into()));
        }
        Ok(Self { freq_hz, psd })
    }

    pub fn covers(&self, fmin: f64, fmax: f64) -> bool {
        let tol = 1e-9;
        self.freq_hz[0] <= fmin * (1.0 + tol) && *self.freq_hz.last().unwrap() >= fmax * (1.0 - tol)
    }

    /// PSD at `f`, clamped to the end points outside the grid.
    pub fn at(&self, f: f64) -> f64 {
        let n = self.freq_hz.len();
        let i = match self.freq_hz.partition_point(|&x| x <= f) {
            0 => return self.psd[0],
            k if k >= n => return self.psd[n - 1],
            k => k - 1,
        };
        let (f0, f1) = (self.freq_hz[i], self.freq_hz[i + 1]);
        let a = (self.psd[i + 1] / self.psd[i]).ln() / (f1 / f0).ln();
        self.psd[i] * (f / f0).powf(a)
    }

    /// Integral of f^(-7/3) / S(f) over [a, b], exact for the log-log
    /// interpolant.
    pub fn inspiral_integral(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let mut edges = vec![a];
        edges.extend(self.freq_hz.iter().copied().filter(|&f| f > a && f < b));
        edges.push(b);
        edges
            .windows(2)
            .map(|w| {
                let (lo, hi) = (w[0], w[1]);
                let (s_lo, s_hi) = (self.at(lo), self.at(hi));
                let x = (hi / lo).ln();
                let alpha = (s_hi / s_lo).ln() / x;
                let p = -4.0 / 3.0 - alpha;
                let g = if (p * x).abs() < 1e-12 { x } else { (p * x).exp_m1() / p };
                lo.powf(-4.0 / 3.0) / s_lo * g
            })
            .sum()
    }
}

/// Source-frame ISCO gravitational-wave frequency for total mass [M_sun].
pub fn isco_frequency(total_mass_msun: f64) -> f64 {
    C_LIGHT.powi(3) / (6f64.powf(1.5) * PI * GM_SUN * total_mass_msun)
}

/// Chirp mass of an equal-mass binary [M_sun].
pub fn equal_mass_chirp(total_mass_msun: f64) -> f64 {
    total_mass_msun * 0.25f64.powf(0.6)
}

/// Squared amplitude prefactor: |h(f)|^2 = A f^(-7/3) for an optimally
/// oriented source at luminosity distance `d_mpc` with redshifted chirp
/// mass `mc_z` [M_sun].
pub fn inspiral_amplitude_sq(mc_z: f64, d_mpc: f64) -> f64 {
    let d = d_mpc * MPC;
    let tc = GM_SUN * mc_z / C_LIGHT.powi(3);
    5.0 / 24.0 * PI.powf(-4.0 / 3.0) * (C_LIGHT / d).powi(2) * tc.powf(5.0 / 3.0)
}

/// Upper frequency of the inspiral integral at redshift z [Hz].
pub fn upper_frequency(total_mass_msun: f64, z: f64, settings: &HorizonSettings) -> f64 {
    (isco_frequency(total_mass_msun) / (1.0 + z)).min(settings.fmax)
}

/// Network SNR of an equal-mass inspiral at redshift z.
pub fn network_snr(psd: &PsdModel, total_mass_msun: f64, z: f64, settings: &HorizonSettings) -> f64 {
    let d = settings.cosmology.luminosity_distance_mpc(z);
    let fu = upper_frequency(total_mass_msun, z, settings);
    let a = inspiral_amplitude_sq(equal_mass_chirp(total_mass_msun) * (1.0 + z), d);
    let f = settings.opening_angle.sin();
    let single = 4.0 * f * f * a * psd.inspiral_integral(settings.fmin, fu);
    (settings.detector_count as f64 * single).sqrt()
}

/// Horizon of one noise curve over a mass grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Horizon {
    pub label: String,
    pub redshift: Vec<f64>,
    pub distance_mpc: Vec<f64>,
}

/// Horizons of several schemes on a common mass grid.
#[derive(Clone, Debug, PartialEq)]
pub struct HorizonCurve {
    /// Total source-frame mass [M_sun].
    pub mass_msun: Vec<f64>,
    pub horizons: Vec<Horizon>,
    pub settings: HorizonSettings,
}

const Z_MIN: f64 = 1e-6;
const Z_MAX: f64 = 1e3;
const Z_SCAN: usize = 240;

/// Largest redshift at which the source reaches the SNR threshold; zero
/// when it is undetectable even at `Z_MIN`, `Z_MAX` when never lost.
pub fn horizon_redshift(psd: &PsdModel, total_mass_msun: f64, settings: &HorizonSettings) -> f64 {
    let snr = |z: f64| network_snr(psd, total_mass_msun, z, settings);
    let thr = settings.snr_threshold;
    let zs: Vec<f64> = (0..Z_SCAN).map(|i| Z_MIN * (Z_MAX / Z_MIN).powf(i as f64 / (Z_SCAN - 1) as f64)).collect();
    let Some(last) = zs.iter().rposition(|&z| snr(z) >= thr) else {
        return 0.0;
    };
    if last == Z_SCAN - 1 {
        return Z_MAX;
    }
    let (mut lo, mut hi) = (zs[last].ln(), zs[last + 1].ln());
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if snr(mid.exp()) >= thr {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo.exp()
}

/// Horizon of a noise curve for every mass of the grid.
pub fn horizon_reach(
    curve: &NoiseCurve,
    mass_grid: &[f64],
    settings: &HorizonSettings,
    label: &str,
) -> Result<Horizon> {
    horizon_reach_psd(&PsdModel::from_curve(curve)?, mass_grid, settings, label)
}

pub fn horizon_reach_psd(
    psd: &PsdModel,
    mass_grid: &[f64],
    settings: &HorizonSettings,
    label: &str,
) -> Result<Horizon> {
    if !psd.covers(settings.fmin, settings.fmax) {
        return Err(Error::Config(format!(
            "noise curve spans {}-{} Hz but the horizon band is {}-{} Hz",
            psd.freq_hz[0],
            psd.freq_hz.last().unwrap(),
            settings.fmin,
            settings.fmax
        )));
    }
    if let Some(m) = mass_grid.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
        return Err(Error::Config(format!("mass {m} outside the valid range")));
    }
    let redshift: Vec<f64> = mass_grid.iter().map(|&m| horizon_redshift(psd, m, settings)).collect();
    let distance_mpc = redshift.iter().map(|&z| settings.cosmology.luminosity_distance_mpc(z)).collect();
    Ok(Horizon { label: label.to_string(), redshift, distance_mpc })
}

/// Log-spaced mass grid [M_sun].
pub fn mass_grid(min: f64, max: f64, points: usize) -> Vec<f64> {
    crate::log_grid(min, max, points).into_iter().map(|w| w / (2.0 * PI)).collect()
}

/// Largest relative luminosity-distance gain of `a` over `b` for masses in
/// [lo, hi]; returns (mass, gain).
pub fn peak_improvement(masses: &[f64], a: &Horizon, b: &Horizon, lo: f64, hi: f64) -> Option<(f64, f64)> {
    masses
        .iter()
        .zip(a.distance_mpc.iter().zip(&b.distance_mpc))
        .filter(|(m, (_, db))| **m >= lo && **m <= hi && **db > 0.0)
        .map(|(m, (da, db))| (*m, da / db - 1.0))
        .max_by(|x, y| x.1.total_cmp(&y.1))
}

/// Contiguous frequency range where one scheme has the lowest noise.
#[derive(Clone, Debug, PartialEq)]
pub struct DominanceBand {
    pub label: String,
    pub f_lo: f64,
    pub f_hi: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub freq_hz: Vec<f64>,
    pub labels: Vec<String>,
    /// ASD of each scheme [1/sqrt(Hz)].
    pub asd: Vec<Vec<f64>>,
    pub bands: Vec<DominanceBand>,
}

/// Relative margin a scheme needs to count as strictly better.
const DOMINANCE_MARGIN: f64 = 1e-9;

/// Aligns curves on their common grid and finds dominance bands.
pub fn compare_curves(curves: &[(String, NoiseCurve)]) -> Result<Comparison> {
    if curves.len() < 2 {
        return Err(Error::Config("comparison needs at least two schemes".into()));
    }
    let freq_hz = curves[0].1.freq_hz.clone();
    if curves.iter().any(|(_, c)| c.freq_hz != freq_hz) {
        return Err(Error::Config("curves must share a frequency grid".into()));
    }
    let asd: Vec<Vec<f64>> = curves.iter().map(|(_, c)| c.asd_total()).collect();
    let winner = |k: usize| {
        (0..asd.len()).find(|&i| (0..asd.len()).all(|j| j == i || asd[i][k] < asd[j][k] * (1.0 - DOMINANCE_MARGIN)))
    };
    let mut bands: Vec<DominanceBand> = Vec::new();
    let mut prev: Option<usize> = None;
    for k in 0..freq_hz.len() {
        let w = winner(k);
        match (w, prev) {
            (Some(i), Some(p)) if i == p => bands.last_mut().unwrap().f_hi = freq_hz[k],
            (Some(i), _) => {
                bands.push(DominanceBand { label: curves[i].0.clone(), f_lo: freq_hz[k], f_hi: freq_hz[k] })
            }
            (None, _) => {}
        }
        prev = w;
    }
    Ok(Comparison { freq_hz, labels: curves.iter().map(|(l, _)| l.clone()).collect(), asd, bands })
}

/// Builds and compares the requested schemes on one grid.
pub fn compare_schemes(cfg: &IfoConfig, schemes: &[SchemeKind], grid: &[f64]) -> Result<Comparison> {
    let curves = schemes
        .iter()
        .map(|&k| {
            let (c, s) = build_scheme(cfg, k, crate::epr_scheme::DEFAULT_MAX_LSRC)?;
            Ok((k.name().to_string(), sensitivity_curve(&c, &s, grid)?))
        })
        .collect::<Result<Vec<_>>>()?;
    compare_curves(&curves)
}

/// Human-readable dominance summary.
pub fn format_comparison(c: &Comparison) -> String {
    let mut s = String::from("dominance bands (lowest noise):\n");
    if c.bands.is_empty() {
        s += "  none\n";
    }
    for b in &c.bands {
        s += &format!("  {:<12} {:>10.4} - {:<10.4} Hz\n", b.label, b.f_lo, b.f_hi);
    }
    s
}

/// Filters realizing the frequency-dependent rotation of `cfg`, synthesized
/// on the default grid with the single-mode model.
pub fn design_filters(cfg: &IfoConfig, degree: usize) -> Result<FilterSolution> {
    Ok(synthesize_filters(cfg, &crate::default_grid(), degree, IfoModel::SingleMode)?.1)
}

/// Configuration and scheme ready for `sensitivity_curve`. The EPR scheme
/// takes the solution nearest to the configured offset and SRC length.
pub fn build_scheme(cfg: &IfoConfig, kind: SchemeKind, max_lsrc: f64) -> Result<(IfoConfig, Scheme)> {
    match kind {
        SchemeKind::Unsqueezed => Ok((cfg.clone(), Scheme::Unsqueezed)),
        SchemeKind::TwoFilter => Ok((cfg.clone(), Scheme::TwoFilter(design_filters(cfg, 2)?))),
        SchemeKind::Epr => {
            let target = design_filters(cfg, 2)?;
            let p = nearest_solution(cfg, &solve_epr_params(cfg, &target, max_lsrc)?)?;
            Ok((p.apply(cfg), Scheme::Epr(p)))
        }
    }
}
