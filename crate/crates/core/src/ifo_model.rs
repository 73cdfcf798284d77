//! Sideband transfer functions of the detuned DRFPMI, radiation-pressure
//! coupling and the signal response.
//!
//! Fields are propagated in a "raw" quadrature frame and handed out in the
//! readout frame, obtained by a quarter-turn of both quadratures followed by
//! complex conjugation. Conjugation maps every sideband response f(W) onto
//! conj f(-W): spectra are unchanged, and a phase-quadrature readout sits at
//! zeta = pi/2.

use std::f64::consts::PI;

use crate::config::IfoConfig;
use crate::two_photon_core::{lift, rotation, Mat2, QuadTransfer, Row2, Vec2};
use crate::{C64, C_LIGHT, HBAR};

/// One optical cavity: input mirror, far mirror, detuning and round-trip loss.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CavitySpec {
    pub length: f64,
    pub t_in: f64,
    pub t_out: f64,
    /// Detuning [rad/s]; round-trip phase is 2(detuning + W)L/c.
    pub detuning: f64,
    pub loss: f64,
}

impl CavitySpec {
    pub fn lossless(length: f64, t_in: f64, detuning: f64) -> Self {
        Self { length, t_in, t_out: 0.0, detuning, loss: 0.0 }
    }

    /// Over-coupled filter with half-bandwidth `gamma`, T = 4 gamma L / c.
    pub fn filter(gamma: f64, detuning: f64, length: f64, loss: f64) -> Self {
        Self { length, t_in: 4.0 * gamma * length / C_LIGHT, t_out: 0.0, detuning, loss }
    }

    pub fn gamma(&self) -> f64 {
        C_LIGHT * self.t_in / (4.0 * self.length)
    }

    pub fn round_trip_phase(&self, omega: f64) -> f64 {
        2.0 * (self.detuning + omega) * self.length / C_LIGHT
    }

    /// (r1, r2, e^{i phi}, 1 - r1 r2 e^{i phi}), the denominator formed
    /// without cancellation for high-finesse cavities.
    fn loop_parts(&self, omega: f64) -> (f64, f64, C64, C64) {
        let r1 = (1.0 - self.t_in).sqrt();
        let back = (self.t_out + self.loss).min(1.0);
        let r2 = (1.0 - back).sqrt();
        let phi = self.round_trip_phase(omega);
        let e = C64::from_polar(1.0, phi);
        let rr = r1 * r2;
        let one_minus_rr = (self.t_in + back - self.t_in * back) / (1.0 + rr);
        let half = (phi / 2.0).sin();
        let one_minus_e = C64::new(2.0 * half * half, -phi.sin());
        (r1, r2, e, one_minus_e * rr + one_minus_rr)
    }
}

/// Amplitude reflection of a cavity, exact (no small-phase expansion).
pub fn cavity_reflection(spec: &CavitySpec, omega: f64) -> C64 {
    let (r1, r2, _, den) = spec.loop_parts(omega);
    // r2 e - r1 = (r2 - r1) - r2 (1 - e)
    let back = (spec.t_out + spec.loss).min(1.0);
    let dr = if r1 + r2 > 0.0 { (spec.t_in - back) / (r1 + r2) } else { 0.0 };
    let phi = spec.round_trip_phase(omega);
    let half = (phi / 2.0).sin();
    let one_minus_e = C64::new(2.0 * half * half, -phi.sin());
    (-one_minus_e * r2 + dr) / den
}

/// Amplitude from the internal loss port to the reflected field.
pub fn cavity_loss_transmission(spec: &CavitySpec, omega: f64) -> C64 {
    let (_, _, _, den) = spec.loop_parts(omega);
    let half = C64::from_polar(1.0, spec.round_trip_phase(omega) / 2.0);
    half * (spec.t_in * spec.loss).sqrt() / den
}

/// Amplitude transmitted through the far mirror.
pub fn cavity_transmission(spec: &CavitySpec, omega: f64) -> C64 {
    let (_, _, _, den) = spec.loop_parts(omega);
    let half = C64::from_polar(1.0, spec.round_trip_phase(omega) / 2.0);
    half * (spec.t_in * spec.t_out).sqrt() / den
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Beam {
    Signal,
    Idler,
}

/// Which interferometer model produces the signal-beam transfer matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IfoModel {
    /// Full sideband model with radiation pressure and optical spring.
    Exact,
    /// Single-mode (narrow-band arm) approximation.
    SingleMode,
}

/// Where a vacuum field enters the interferometer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Port {
    Input,
    Src,
    Arm,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SidebandTransfers {
    pub a_to_out: C64,
    pub a_to_e2: C64,
    pub e3_to_out: C64,
    pub e3_to_e2: C64,
    pub e4_to_out: C64,
    pub e4_to_e2: C64,
}

/// Carrier-frame offset seen by a beam: zero for the signal, Delta for the idler.
fn beam_offset(cfg: &IfoConfig, beam: Beam) -> f64 {
    match beam {
        Beam::Signal => 0.0,
        Beam::Idler => cfg.delta,
    }
}

fn arm_phase(cfg: &IfoConfig, omega: f64, beam: Beam) -> f64 {
    2.0 * (beam_offset(cfg, beam) + omega) * cfg.l_arm / C_LIGHT
}

/// SRC round-trip phase; phi_SRC is measured from the broadband point.
fn src_phase(cfg: &IfoConfig, omega: f64, beam: Beam) -> f64 {
    PI - cfg.phi_src + 2.0 * (beam_offset(cfg, beam) + omega) * cfg.l_src / C_LIGHT
}

fn arm_denominator(cfg: &IfoConfig, omega: f64, beam: Beam) -> C64 {
    let ri = (1.0 - cfg.t_itm).sqrt();
    let re = (1.0 - cfg.eps_arm).sqrt();
    C64::from(1.0) - C64::from_polar(ri * re, arm_phase(cfg, omega, beam))
}

/// Arm reflectivity seen from the SRC side of the ITM.
pub fn arm_reflectivity(cfg: &IfoConfig, omega: f64, beam: Beam) -> C64 {
    let ri = (1.0 - cfg.t_itm).sqrt();
    let re = (1.0 - cfg.eps_arm).sqrt();
    let e = C64::from_polar(re, arm_phase(cfg, omega, beam));
    -ri + e * cfg.t_itm / arm_denominator(cfg, omega, beam)
}

/// Arm transmissivity between the SRC side of the ITM and the ETM.
pub fn arm_transmissivity(cfg: &IfoConfig, omega: f64, beam: Beam) -> C64 {
    C64::from_polar(cfg.t_itm.sqrt(), arm_phase(cfg, omega, beam) / 2.0) / arm_denominator(cfg, omega, beam)
}

/// Compound SRC mirror reflectivity seen from inside the arm, at a
/// given SRC round-trip phase.
pub fn src_compound_reflectivity(cfg: &IfoConfig, psi: f64) -> C64 {
    let ri = (1.0 - cfg.t_itm).sqrt();
    let rs = (1.0 - cfg.t_srm).sqrt();
    let ls = (1.0 - cfg.eps_src).sqrt();
    let e = C64::from_polar(rs * ls, psi);
    ri + e * cfg.t_itm / (C64::from(1.0) + e * ri)
}

pub fn src_arm_sideband_transfers(cfg: &IfoConfig, omega: f64, beam: Beam) -> SidebandTransfers {
    let rs = (1.0 - cfg.t_srm).sqrt();
    let ts = cfg.t_srm.sqrt();
    let ls = (1.0 - cfg.eps_src).sqrt();
    let re = (1.0 - cfg.eps_arm).sqrt();
    let psi = src_phase(cfg, omega, beam);
    let es = C64::from_polar(1.0, psi);
    let half = C64::from_polar(1.0, psi / 2.0);
    let ra = arm_reflectivity(cfg, omega, beam);
    let ta = arm_transmissivity(cfg, omega, beam);
    let d = C64::from(1.0) - ra * es * (rs * ls);

    let rc = src_compound_reflectivity(cfg, psi);
    let ea = C64::from_polar(1.0, arm_phase(cfg, omega, beam));

    SidebandTransfers {
        a_to_out: -rs + ra * es * (cfg.t_srm * ls) / d,
        a_to_e2: half * ta * ts / d,
        e3_to_out: half * ta * (ts * ls) / d,
        e3_to_e2: rc * ea / (C64::from(1.0) - rc * ea * re),
        e4_to_out: half * ts / d,
        e4_to_e2: es * ta * rs / d,
    }
}

/// Circulating arm power for the configured input power [W].
pub fn arm_power(cfg: &IfoConfig) -> f64 {
    let ri = (1.0 - cfg.t_itm).sqrt();
    0.5 * cfg.power * cfg.t_itm / ((1.0 - ri) * (1.0 - ri))
}

fn to_readout_m(m: &Mat2) -> Mat2 {
    let u = rotation(-PI / 2.0);
    (u * m * u.transpose()).map(|z| z.conj())
}

fn to_readout_v(v: &Vec2) -> Vec2 {
    (rotation(-PI / 2.0) * v).map(|z| z.conj())
}

/// Raw-frame signal-beam blocks at one frequency.
struct SignalRaw {
    shot_input: Mat2,
    shot_src: Mat2,
    shot_arm: Mat2,
    /// Open-loop displacement-to-output vector [1/m].
    resp_open: Vec2,
    /// Closed-loop displacement-to-output vector [1/m].
    resp: Vec2,
    /// Susceptibility with the optical spring closed [m/N].
    chi_eff: C64,
    force_input: Row2,
    force_src: Row2,
    force_arm: Row2,
}

impl SignalRaw {
    fn rp(&self, port: Port) -> Mat2 {
        let f = match port {
            Port::Input => self.force_input,
            Port::Src => self.force_src,
            Port::Arm => self.force_arm,
        };
        self.resp_open * f * self.chi_eff
    }
}

fn signal_raw(cfg: &IfoConfig, omega: f64) -> SignalRaw {
    let tp = src_arm_sideband_transfers(cfg, omega, Beam::Signal);
    let tm = src_arm_sideband_transfers(cfg, -omega, Beam::Signal);
    let l =
        |sel: fn(&SidebandTransfers) -> C64| crate::two_photon_core::lift_scalar_transfer(sel(&tp), sel(&tm).conj());

    let w0 = cfg.omega0();
    let p_arm = arm_power(cfg);
    let kappa_r = 2.0 * (w0 / C_LIGHT) * (p_arm / (HBAR * w0)).sqrt();
    let kappa_f = 8.0 * (HBAR * w0 * p_arm).sqrt() / C_LIGHT;

    let shot_arm = l(|t| t.e3_to_out);
    let resp_open = shot_arm * Vec2::new(C64::from(0.0), C64::from(kappa_r));
    let row = |m: Mat2| Row2::new(m[(0, 0)], m[(0, 1)]) * C64::from(kappa_f);
    let to_e2_arm = l(|t| t.e3_to_e2);
    let spring = to_e2_arm[(0, 1)] * (kappa_f * kappa_r);
    let chi = C64::from(-1.0 / (cfg.mass * omega * omega));
    let loop_gain = C64::from(1.0) - chi * spring;

    SignalRaw {
        shot_input: l(|t| t.a_to_out),
        shot_src: l(|t| t.e4_to_out),
        shot_arm,
        resp_open,
        resp: resp_open / loop_gain,
        chi_eff: chi / loop_gain,
        force_input: row(l(|t| t.a_to_e2)),
        force_src: row(l(|t| t.e4_to_e2)),
        force_arm: row(to_e2_arm),
    }
}

/// Radiation-pressure contribution R chi F for a vacuum entering at `port`
/// (readout frame, without the port's loss amplitude).
pub fn ponderomotive_block(cfg: &IfoConfig, omega: f64, port: Port) -> Mat2 {
    to_readout_m(&signal_raw(cfg, omega).rp(port))
}

/// Signal-beam response to differential arm displacement [1/m].
pub fn response_vector(cfg: &IfoConfig, omega: f64) -> Vec2 {
    to_readout_v(&signal_raw(cfg, omega).resp)
}

/// Quadrature transfer matrices of the interferometer for one beam.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IfoChannels {
    /// Dark-port input to output.
    pub input: Mat2,
    /// SRC-loss vacuum to output, including sqrt(eps_SRC).
    pub src: Mat2,
    /// Arm-loss vacuum to output, including sqrt(eps_arm).
    pub arm: Mat2,
    /// Signal response [1/m]; zero for the idler.
    pub resp: Vec2,
}

pub fn ifo_channels(cfg: &IfoConfig, omega: f64, beam: Beam) -> IfoChannels {
    let (ls, la) = (cfg.eps_src.sqrt(), cfg.eps_arm.sqrt());
    match beam {
        Beam::Signal => {
            let s = signal_raw(cfg, omega);
            IfoChannels {
                input: to_readout_m(&(s.shot_input + s.rp(Port::Input))),
                src: to_readout_m(&((s.shot_src + s.rp(Port::Src)) * C64::from(ls))),
                arm: to_readout_m(&((s.shot_arm + s.rp(Port::Arm)) * C64::from(la))),
                resp: to_readout_v(&s.resp),
            }
        }
        Beam::Idler => {
            let tp = src_arm_sideband_transfers(cfg, omega, Beam::Idler);
            let tm = src_arm_sideband_transfers(cfg, -omega, Beam::Idler);
            let l = |a: C64, b: C64| crate::two_photon_core::lift_scalar_transfer(a, b.conj());
            IfoChannels {
                input: to_readout_m(&l(tp.a_to_out, tm.a_to_out)),
                src: to_readout_m(&(l(tp.e4_to_out, tm.e4_to_out) * C64::from(ls))),
                arm: to_readout_m(&(l(tp.e3_to_out, tm.e3_to_out) * C64::from(la))),
                resp: Vec2::zeros(),
            }
        }
    }
}

/// Dark-port-to-output transfer matrix (readout frame). The idler carries
/// no radiation-pressure term.
pub fn interferometer_quad_transfer(cfg: &IfoConfig, omega: f64, beam: Beam) -> QuadTransfer {
    QuadTransfer::new(ifo_channels(cfg, omega, beam).input, omega)
}

/// Single-mode transfer matrix and response [1/m] (readout frame).
pub fn single_mode_transfer(cfg: &IfoConfig, omega: f64) -> (Mat2, Vec2) {
    let w0 = cfg.omega0();
    let l = cfg.l_arm;
    let gamma = cfg.t_itm * C_LIGHT / (4.0 * l);
    let k = 8.0 * cfg.power * w0 / (cfg.mass * l * l * omega * omega * (gamma * gamma + omega * omega));
    let beta = (omega / gamma).atan();
    let rho = (1.0 - cfg.t_srm).sqrt();
    let tau2 = cfg.t_srm;
    let phi = PI / 2.0 - cfg.phi_src / 2.0;
    let (s2, c2) = (2.0 * phi).sin_cos();
    let e2b = C64::from_polar(1.0, 2.0 * beta);
    let mm = C64::from(1.0) + e2b * e2b * (rho * rho) - e2b * (2.0 * rho * (c2 + 0.5 * k * s2));
    let c11 = C64::from((1.0 + rho * rho) * (c2 + 0.5 * k * s2) - 2.0 * rho * (2.0 * beta).cos());
    let c12 = C64::from(-tau2 * (s2 + k * phi.sin().powi(2)));
    let c21 = C64::from(tau2 * (s2 - k * phi.cos().powi(2)));
    let t = Mat2::new(c11, c12, c21, c11) * (e2b / mm);
    let d = Vec2::new(-(C64::from(1.0) + e2b * rho) * phi.sin(), -(C64::from(-1.0) + e2b * rho) * phi.cos());
    let h_sql = (8.0 * HBAR / (cfg.mass * omega * omega * l * l)).sqrt();
    let resp = d * (C64::from_polar((2.0 * k).sqrt() * tau2.sqrt(), beta) / (mm * h_sql * l));
    (to_readout_m(&t), to_readout_v(&resp))
}

/// Signal-beam transfer matrix and response [1/m] for the chosen model.
pub fn signal_transfer(cfg: &IfoConfig, omega: f64, model: IfoModel) -> (QuadTransfer, Vec2) {
    match model {
        IfoModel::Exact => {
            let ch = ifo_channels(cfg, omega, Beam::Signal);
            (QuadTransfer::new(ch.input, omega), ch.resp)
        }
        IfoModel::SingleMode => {
            let (t, r) = single_mode_transfer(cfg, omega);
            (QuadTransfer::new(t, omega), r)
        }
    }
}

/// Lift a cavity into a readout-frame quadrature matrix.
pub fn cavity_block(spec: &CavitySpec, omega: f64) -> Mat2 {
    to_readout_m(&lift(|w| cavity_reflection(spec, w), omega))
}

/// Readout-frame quadrature matrix from a cavity's internal loss port.
pub fn cavity_loss_block(spec: &CavitySpec, omega: f64) -> Mat2 {
    to_readout_m(&lift(|w| cavity_loss_transmission(spec, w), omega))
}
