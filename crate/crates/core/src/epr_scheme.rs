//! One-filter EPR configuration: parameter solver, lossy output fields of
//! the signal and idler beams, Wiener combination, sensitivity and budget.
//! The two-filter and unsqueezed references share the same loss model.

use std::f64::consts::PI;

use crate::config::IfoConfig;
use crate::error::{Error, Result};
use crate::filter_synthesis::{FilterCavity, FilterSolution};
use crate::ifo_model::{cavity_block, cavity_loss_block, ifo_channels, src_compound_reflectivity, Beam, CavitySpec};
use crate::two_photon_core::{Homodyne, Mat2, Row2, SqueezerState, Vec2};
use crate::{C64, C_LIGHT};

/// Relative tolerance on the interferometer bandwidth match.
pub const GAMMA_TOLERANCE: f64 = 0.02;
/// Default upper bound on the SRC length [m].
pub const DEFAULT_MAX_LSRC: f64 = 200.0;
const N1_BOUND: i64 = 64;
const LSRC_STEP: f64 = 0.01;
const NOMINAL_ARM: f64 = 10_000.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EprParams {
    /// Idler offset [rad/s].
    pub delta: f64,
    /// Carrier offset in units of half a filter free spectral range;
    /// odd values are the anti-resonant solutions.
    pub half_fsr: i64,
    /// Filter order n1 when `half_fsr` is odd.
    pub n1: Option<i64>,
    /// Arm order n2 of the resonance condition.
    pub n2: i64,
    pub l_src: f64,
    pub l_arm: f64,
    /// External filter cavity (readout-frame detuning for the idler).
    pub filter: FilterCavity,
    /// Interferometer bandwidth achieved for the idler [rad/s].
    pub gamma2: f64,
    /// Distance of the signal carrier from anti-resonance [rad].
    pub filter_residual: f64,
    /// Residual of the arm resonance condition [rad].
    pub arm_residual: f64,
}

impl EprParams {
    pub fn is_anti_resonant(&self) -> bool {
        self.n1.is_some()
    }

    /// Configuration with the solved lengths and offset substituted.
    pub fn apply(&self, cfg: &IfoConfig) -> IfoConfig {
        IfoConfig { l_src: self.l_src, l_arm: self.l_arm, delta: self.delta, ..cfg.clone() }
    }
}

/// SRC transmissivity and interferometer bandwidth seen by the idler.
pub fn idler_bandwidth(cfg: &IfoConfig, delta: f64, l_src: f64) -> f64 {
    let psi = PI - cfg.phi_src + 2.0 * delta * l_src / C_LIGHT;
    let ri = (1.0 - cfg.t_itm).sqrt();
    let rs = (1.0 - cfg.t_srm).sqrt();
    let t = (cfg.t_itm * cfg.t_srm).sqrt() / (C64::from(1.0) + C64::from_polar(ri * rs, psi)).norm();
    C_LIGHT * t * t / (4.0 * cfg.l_arm)
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 || (b - a) < 1e-13 * b.abs() {
            return m;
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Search filter orders and SRC lengths for which the interferometer acts
/// as the second filter for the idler; the arm length is fine-tuned to the
/// required detuning. Solutions are sorted by SRC length.
pub fn solve_epr_params(cfg: &IfoConfig, target: &FilterSolution, max_lsrc: f64) -> Result<Vec<EprParams>> {
    let [c1, c2] = match target.cavities.as_slice() {
        [a, b] => [*a, *b],
        other => return Err(Error::Config(format!("EPR solve needs 2 target cavities, got {}", other.len()))),
    };
    if !(max_lsrc > LSRC_STEP) {
        return Err(Error::Config("maximum SRC length must exceed 1 cm".into()));
    }
    let half = PI * C_LIGHT / (2.0 * c1.length);
    let steps = (max_lsrc / LSRC_STEP).floor() as usize;
    let mut out = Vec::new();
    for m in -(2 * N1_BOUND + 1)..=(2 * N1_BOUND + 1) {
        // physical filter detuning is the negative of the readout-frame one
        let delta = -c1.detuning + m as f64 * half;
        if delta <= 0.0 {
            continue;
        }
        let resid = |l: f64| idler_bandwidth(cfg, delta, l) - c2.gamma;
        let mut prev = (LSRC_STEP, resid(LSRC_STEP));
        for k in 2..=steps {
            let l = k as f64 * LSRC_STEP;
            let r = resid(l);
            if (r > 0.0) != (prev.1 > 0.0) {
                let l_src = bisect(resid, prev.0, l);
                let gamma2 = idler_bandwidth(cfg, delta, l_src);
                if ((gamma2 - c2.gamma) / c2.gamma).abs() <= GAMMA_TOLERANCE {
                    out.push(tune_arm(cfg, delta, m, l_src, gamma2, &c1, &c2));
                }
            }
            prev = (l, r);
        }
    }
    if out.is_empty() {
        return Err(Error::NoSolution(format!("no SRC length below {max_lsrc} m matches the idler bandwidth")));
    }
    out.sort_by(|a, b| a.l_src.partial_cmp(&b.l_src).unwrap().then(a.delta.partial_cmp(&b.delta).unwrap()));
    Ok(out)
}

fn tune_arm(
    cfg: &IfoConfig,
    delta: f64,
    m: i64,
    l_src: f64,
    gamma2: f64,
    c1: &FilterCavity,
    c2: &FilterCavity,
) -> EprParams {
    let psi = PI - cfg.phi_src + 2.0 * delta * l_src / C_LIGHT;
    let arg_r = src_compound_reflectivity(cfg, psi).arg();
    let k = 2.0 * (delta + c2.detuning) / C_LIGHT;
    let n2 = ((k * NOMINAL_ARM + arg_r) / (2.0 * PI)).round();
    let l_arm = (2.0 * PI * n2 - arg_r) / k;
    let arm_phase = k * l_arm + arg_r - 2.0 * PI * n2;
    // distance of the offset from the nearest anti-resonance, as a phase
    let x = (delta + c1.detuning) / (PI * C_LIGHT / (2.0 * c1.length));
    let odd = 2.0 * ((x - 1.0) / 2.0).round() + 1.0;
    let filter_residual = PI * (x - odd).abs();
    EprParams {
        delta,
        half_fsr: m,
        n1: if m.rem_euclid(2) == 1 { Some((m - 1) / 2) } else { None },
        n2: n2 as i64,
        l_src,
        l_arm,
        filter: *c1,
        gamma2,
        filter_residual,
        arm_residual: arm_phase,
    }
}

/// Anti-resonant solution closest to the configured offset and SRC length
/// (relative distance in both).
pub fn nearest_solution(cfg: &IfoConfig, sols: &[EprParams]) -> Result<EprParams> {
    let dist = |p: &EprParams| ((p.delta - cfg.delta) / cfg.delta).abs() + ((p.l_src - cfg.l_src) / cfg.l_src).abs();
    sols.iter()
        .filter(|p| p.is_anti_resonant())
        .min_by(|a, b| dist(a).partial_cmp(&dist(b)).unwrap())
        .copied()
        .ok_or_else(|| Error::NoSolution("no anti-resonant EPR solution".into()))
}

/// Where a vacuum enters the readout chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossPort {
    Input,
    Filter,
    Src,
    Arm,
    Readout,
}

/// Quadrature transfer from the squeezed input and from every vacuum port
/// to one detected beam (readout frame).
#[derive(Clone, Debug, PartialEq)]
pub struct LossChannelSet {
    pub main: Mat2,
    pub channels: Vec<(LossPort, Mat2)>,
}

impl LossChannelSet {
    /// Output covariance for an input covariance on the main port.
    pub fn output_covariance(&self, input: &Mat2) -> Mat2 {
        self.channels.iter().fold(self.main * input * self.main.adjoint(), |acc, (_, m)| acc + m * m.adjoint())
    }
}

/// Both detected beams and the strain response of the signal beam.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputFields {
    pub signal: LossChannelSet,
    /// Signal-beam response to strain, after readout loss.
    pub response: Vec2,
    pub idler: LossChannelSet,
}

/// Filter applied before the interferometer: reflection and internal
/// loss ports, in propagation order.
struct FilterStage {
    refl: Mat2,
    losses: Vec<Mat2>,
}

fn cascade_stage(specs: &[CavitySpec], omega: f64) -> FilterStage {
    let mut refl = Mat2::identity();
    let mut losses: Vec<Mat2> = Vec::new();
    for s in specs {
        let r = cavity_block(s, omega);
        losses = losses.into_iter().map(|l| r * l).collect();
        if s.loss > 0.0 {
            losses.push(cavity_loss_block(s, omega));
        }
        refl = r * refl;
    }
    FilterStage { refl, losses }
}

fn beam_channels(cfg: &IfoConfig, omega: f64, beam: Beam, stage: &FilterStage) -> (LossChannelSet, Vec2) {
    let ifo = ifo_channels(cfg, omega, beam);
    let keep = (1.0 - cfg.eps_r).sqrt();
    let k = |m: Mat2| m * C64::from(keep);
    let path = ifo.input * stage.refl;
    let mut channels = vec![(LossPort::Input, k(path * C64::from(cfg.eps_i.sqrt())))];
    channels.extend(stage.losses.iter().map(|l| (LossPort::Filter, k(ifo.input * l))));
    channels.push((LossPort::Src, k(ifo.src)));
    channels.push((LossPort::Arm, k(ifo.arm)));
    channels.push((LossPort::Readout, Mat2::identity() * C64::from(cfg.eps_r.sqrt())));
    let main = k(path * C64::from((1.0 - cfg.eps_i).sqrt()));
    (LossChannelSet { main, channels }, ifo.resp * C64::from(keep * cfg.l_arm))
}

fn epr_filters(p: &EprParams, loss: f64, err: f64) -> (CavitySpec, CavitySpec) {
    let f = &p.filter;
    let anti = PI * C_LIGHT / (2.0 * f.length);
    (
        CavitySpec::filter(f.gamma, anti + err, f.length, loss),
        CavitySpec::filter(f.gamma, anti + p.delta + err, f.length, loss),
    )
}

/// Detuning error of a filter from its length error [rad/s].
pub fn length_error_detuning(cfg: &IfoConfig, length: f64) -> f64 {
    cfg.omega0() * cfg.dl_f / length
}

/// Signal and idler output fields of the EPR configuration. `cfg` must
/// already carry the solved lengths (see [`EprParams::apply`]).
pub fn assemble_output_fields(cfg: &IfoConfig, params: &EprParams, omega: f64, detuning_error: f64) -> OutputFields {
    let (fs, fi) = epr_filters(params, cfg.eps_f, detuning_error);
    let (signal, response) = beam_channels(cfg, omega, Beam::Signal, &cascade_stage(&[fs], omega));
    let (idler, _) = beam_channels(cfg, omega, Beam::Idler, &cascade_stage(&[fi], omega));
    OutputFields { signal, response, idler }
}

/// Signal-beam fields behind a filter cascade (two-filter and unsqueezed).
pub fn assemble_signal_fields(
    cfg: &IfoConfig,
    filters: &FilterSolution,
    omega: f64,
    detuning_error: f64,
) -> (LossChannelSet, Vec2) {
    let specs: Vec<CavitySpec> = filters.cavities.iter().map(|c| c.cavity_spec(cfg.eps_f, detuning_error)).collect();
    beam_channels(cfg, omega, Beam::Signal, &cascade_stage(&specs, omega))
}

/// Two-mode squeezed covariance blocks (V_aa = V_bb, V_ab).
pub fn epr_covariance(r: f64) -> (Mat2, Mat2) {
    let (c, s) = ((2.0 * r).cosh(), (2.0 * r).sinh());
    (Mat2::identity() * C64::from(c), Mat2::new(C64::from(s), C64::from(0.0), C64::from(0.0), C64::from(-s)))
}

/// Optimal linear combination of two photocurrents.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CombinedReadout {
    pub g: C64,
    /// Combined PSD (photocurrent units).
    pub s_gg: f64,
}

/// g = -S_AB / S_BB and the resulting PSD.
pub fn wiener_combine(s_aa: f64, s_bb: f64, s_ab: C64) -> CombinedReadout {
    if s_bb <= 0.0 {
        return CombinedReadout { g: C64::from(0.0), s_gg: s_aa };
    }
    let g = -s_ab / s_bb;
    let s = s_aa + g.norm_sqr() * s_bb + (g.conj() * s_ab).re * 2.0;
    CombinedReadout { g, s_gg: s.max(0.0) }
}

/// PSD of A + g B for a fixed (not necessarily optimal) filter.
pub fn combined_psd(s_aa: f64, s_bb: f64, s_ab: C64, g: C64) -> f64 {
    s_aa + g.norm_sqr() * s_bb + (g.conj() * s_ab).re * 2.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchemeKind {
    TwoFilter,
    Epr,
    Unsqueezed,
}

impl SchemeKind {
    pub fn name(&self) -> &'static str {
        match self {
            SchemeKind::TwoFilter => "two-filter",
            SchemeKind::Epr => "epr",
            SchemeKind::Unsqueezed => "unsqueezed",
        }
    }
}

impl std::str::FromStr for SchemeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-filter" => Ok(SchemeKind::TwoFilter),
            "epr" => Ok(SchemeKind::Epr),
            "unsqueezed" => Ok(SchemeKind::Unsqueezed),
            _ => Err(Error::Config(format!("unknown scheme '{s}'"))),
        }
    }
}

/// A fully specified readout scheme.
#[derive(Clone, Debug, PartialEq)]
pub enum Scheme {
    TwoFilter(FilterSolution),
    Epr(EprParams),
    Unsqueezed,
}

impl Scheme {
    pub fn kind(&self) -> SchemeKind {
        match self {
            Scheme::TwoFilter(_) => SchemeKind::TwoFilter,
            Scheme::Epr(_) => SchemeKind::Epr,
            Scheme::Unsqueezed => SchemeKind::Unsqueezed,
        }
    }
}

/// Strain-referred noise at one frequency, split by vacuum port. All
/// entries are one-sided PSDs [1/Hz]; the parts sum to `total`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NoisePoint {
    pub total: f64,
    pub squeezed: f64,
    pub input_loss: f64,
    pub readout_loss: f64,
    pub src_loss: f64,
    pub arm_loss: f64,
    pub filter_loss: f64,
}

impl NoisePoint {
    fn add(&mut self, port: LossPort, v: f64) {
        match port {
            LossPort::Input => self.input_loss += v,
            LossPort::Filter => self.filter_loss += v,
            LossPort::Src => self.src_loss += v,
            LossPort::Arm => self.arm_loss += v,
            LossPort::Readout => self.readout_loss += v,
        }
    }

    pub fn parts(&self) -> [f64; 6] {
        [self.squeezed, self.input_loss, self.readout_loss, self.src_loss, self.arm_loss, self.filter_loss]
    }

    fn scaled(mut self, k: f64) -> Self {
        for x in [
            &mut self.total,
            &mut self.squeezed,
            &mut self.input_loss,
            &mut self.readout_loss,
            &mut self.src_loss,
            &mut self.arm_loss,
            &mut self.filter_loss,
        ] {
            *x *= k;
        }
        self
    }
}

/// Noise of a scheme over a frequency grid.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseCurve {
    pub scheme: SchemeKind,
    pub freq_hz: Vec<f64>,
    pub points: Vec<NoisePoint>,
}

impl NoiseCurve {
    pub fn asd_total(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.total.sqrt()).collect()
    }

    pub fn psd_total(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.total).collect()
    }
}

fn signal_strength(h: &Row2, resp: &Vec2) -> Result<f64> {
    let s = (h * resp)[0].norm_sqr();
    if s <= 1e-24 * resp.norm_squared() || s == 0.0 {
        return Err(Error::SignalNull(s.sqrt()));
    }
    Ok(s)
}

fn single_beam_point(set: &LossChannelSet, resp: &Vec2, input: &Mat2, h: &Row2) -> Result<NoisePoint> {
    let sig = signal_strength(h, resp)?;
    let q = |m: &Mat2, v: &Mat2| {
        let u = h * m;
        (u * v * u.adjoint())[0].re
    };
    let mut p = NoisePoint { squeezed: q(&set.main, input), ..Default::default() };
    for (port, m) in &set.channels {
        p.add(*port, q(m, &Mat2::identity()));
    }
    p.total = p.parts().iter().sum();
    Ok(p.scaled(1.0 / sig))
}

fn epr_point(fields: &OutputFields, cfg: &IfoConfig) -> Result<NoisePoint> {
    let ha = Homodyne::new(cfg.zeta_s).vector();
    let hb = Homodyne::new(cfg.zeta_i).vector();
    let sig = signal_strength(&ha, &fields.response)?;
    let (vaa, vab) = epr_covariance(cfg.r);
    let u = ha * fields.signal.main;
    let w = hb * fields.idler.main;
    let quad = |x: &Row2, v: &Mat2, y: &Row2| (x * v * y.adjoint())[0];
    let vac = |set: &LossChannelSet, h: &Row2| set.channels.iter().map(|(_, m)| (h * m).norm_squared()).sum::<f64>();
    let s_aa = quad(&u, &vaa, &u).re + vac(&fields.signal, &ha);
    let s_bb = quad(&w, &vaa, &w).re + vac(&fields.idler, &hb);
    let s_ab = quad(&u, &vab, &w);
    let g = wiener_combine(s_aa, s_bb, s_ab).g;
    // each independent port contributes |h_a X + g h_b Y|^2
    let mut p = NoisePoint {
        squeezed: quad(&u, &vaa, &u).re + g.norm_sqr() * quad(&w, &vaa, &w).re + 2.0 * (g.conj() * s_ab).re,
        ..Default::default()
    };
    for (port, m) in &fields.signal.channels {
        p.add(*port, (ha * m).norm_squared());
    }
    for (port, m) in &fields.idler.channels {
        p.add(*port, g.norm_sqr() * (hb * m).norm_squared());
    }
    p.total = p.parts().iter().sum();
    Ok(p.scaled(1.0 / sig))
}

/// Noise of one scheme at one frequency for a given filter detuning error.
pub fn noise_point(cfg: &IfoConfig, scheme: &Scheme, omega: f64, detuning_error: f64) -> Result<NoisePoint> {
    let h = Homodyne::new(cfg.zeta_s).vector();
    match scheme {
        Scheme::Unsqueezed => {
            let (set, resp) =
                assemble_signal_fields(cfg, &FilterSolution { cavities: vec![], injection_angle: 0.0 }, omega, 0.0);
            single_beam_point(&set, &resp, &Mat2::identity(), &h)
        }
        Scheme::TwoFilter(sol) => {
            let (set, resp) = assemble_signal_fields(cfg, sol, omega, detuning_error);
            let v = SqueezerState::new(cfg.r, sol.injection_angle).covariance();
            single_beam_point(&set, &resp, &v, &h)
        }
        Scheme::Epr(p) => epr_point(&assemble_output_fields(cfg, p, omega, detuning_error), cfg),
    }
}

/// Strain noise over a grid of angular frequencies. Filter length errors
/// are applied with whichever sign is worse at each frequency. For the EPR
/// scheme `cfg` must carry the solved lengths.
pub fn sensitivity_curve(cfg: &IfoConfig, scheme: &Scheme, grid: &[f64]) -> Result<NoiseCurve> {
    let length = match scheme {
        Scheme::TwoFilter(sol) => sol.cavities.first().map(|c| c.length),
        Scheme::Epr(p) => Some(p.filter.length),
        Scheme::Unsqueezed => None,
    };
    let err = length.map(|l| length_error_detuning(cfg, l)).unwrap_or(0.0);
    let points = grid
        .iter()
        .map(|&w| {
            let a = noise_point(cfg, scheme, w, err)?;
            if err == 0.0 {
                return Ok(a);
            }
            let b = noise_point(cfg, scheme, w, -err)?;
            Ok(if b.total > a.total { b } else { a })
        })
        .collect::<Result<Vec<_>>>()?;
    if points.iter().any(|p| !p.total.is_finite()) {
        return Err(Error::Numerical("non-finite noise".into()));
    }
    Ok(NoiseCurve { scheme: scheme.kind(), freq_hz: grid.iter().map(|w| w / (2.0 * PI)).collect(), points })
}

/// 10 log10(unsqueezed / scheme) at each grid point [dB].
pub fn detected_squeezing(cfg: &IfoConfig, scheme: &Scheme, grid: &[f64]) -> Result<Vec<f64>> {
    let base = sensitivity_curve(cfg, &Scheme::Unsqueezed, grid)?;
    let s = sensitivity_curve(cfg, scheme, grid)?;
    Ok(base.points.iter().zip(&s.points).map(|(a, b)| 10.0 * (a.total / b.total).log10()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter_synthesis::synthesize_filters;
    use crate::ifo_model::IfoModel;
    use proptest::prelude::*;

    const TAU: f64 = 2.0 * PI;

    fn target() -> FilterSolution {
        FilterSolution {
            cavities: vec![
                FilterCavity { gamma: TAU * 4.248, detuning: TAU * 19.519, length: 1000.0 },
                FilterCavity { gamma: TAU * 1.632, detuning: -TAU * 7.610, length: 1000.0 },
            ],
            injection_angle: 0.0,
        }
    }

    #[test]
    fn table_solutions_found() {
        let cfg = IfoConfig::et_lf();
        let sols = solve_epr_params(&cfg, &target(), 200.0).unwrap();
        let a =
            sols.iter().find(|p| (p.l_src - 152.0).abs() < 1.0 && (p.delta / TAU / 1.27e6 - 1.0).abs() < 0.02).unwrap();
        assert!(a.is_anti_resonant());
        assert_eq!(nearest_solution(&cfg, &sols).unwrap(), *a);
        assert!((a.l_arm - 10000.3).abs() < 0.1, "{}", a.l_arm);
        let b =
            sols.iter().find(|p| (p.l_src - 86.0).abs() < 1.0 && (p.delta / TAU / 2.25e6 - 1.0).abs() < 0.02).unwrap();
        assert!((b.l_arm - 10000.2).abs() < 0.1, "{}", b.l_arm);
        assert!(!b.is_anti_resonant());
        assert!(a.arm_residual.abs() < 1e-6 && b.arm_residual.abs() < 1e-6);
    }

    #[test]
    fn bandwidth_inversion_oracle() {
        let mut cfg = IfoConfig::et_lf();
        cfg.phi_src = 0.0;
        let half = PI * C_LIGHT / 2000.0;
        let delta = 3.0 * half;
        let want = 120.0;
        let mut t = target();
        t.cavities[0].detuning = 0.0;
        t.cavities[1].gamma = idler_bandwidth(&cfg, delta, want);
        let sols = solve_epr_params(&cfg, &t, 200.0).unwrap();
        let p = sols.iter().find(|p| p.half_fsr == 3 && (p.l_src - want).abs() < 0.5).unwrap();
        assert!((idler_bandwidth(&cfg, p.delta, p.l_src) / t.cavities[1].gamma - 1.0).abs() < 1e-10);
        assert!((p.l_src - want).abs() < 1e-6, "{}", p.l_src);
    }

    #[test]
    fn zero_detuning_offset_is_half_fsr() {
        let mut t = target();
        t.cavities[0].detuning = 0.0;
        let sols = solve_epr_params(&IfoConfig::et_lf(), &t, 200.0).unwrap_or_default();
        for p in sols.iter().filter(|p| p.n1 == Some(0)) {
            assert_eq!(p.delta, PI * C_LIGHT / 2000.0);
        }
        let p = tune_arm(&IfoConfig::et_lf(), PI * C_LIGHT / 2000.0, 1, 150.0, 1.0, &t.cavities[0], &t.cavities[1]);
        assert_eq!(p.n1, Some(0));
        assert!(p.filter_residual < 1e-9);
    }

    fn lossless_epr() -> (IfoConfig, EprParams) {
        let cfg = IfoConfig::et_lf().lossless();
        let sols = solve_epr_params(&cfg, &target(), 200.0).unwrap();
        let p = nearest_solution(&cfg, &sols).unwrap();
        (p.apply(&cfg), p)
    }

    #[test]
    fn lossless_fields_unitary() {
        let (mut cfg, p) = lossless_epr();
        cfg.power = 0.0;
        let f = assemble_output_fields(&cfg, &p, TAU * 8.0, 0.0);
        for set in [&f.signal, &f.idler] {
            assert!((set.main * set.main.adjoint() - Mat2::identity()).norm() < 1e-10);
            for (port, m) in &set.channels {
                assert!(m.norm() < 1e-12, "{port:?}");
            }
        }
    }

    #[test]
    fn budget_closes() {
        let cfg0 = IfoConfig::et_lf();
        let p = nearest_solution(&cfg0, &solve_epr_params(&cfg0, &target(), 200.0).unwrap()).unwrap();
        let cfg = p.apply(&cfg0);
        let grid = crate::log_grid(2.0, 90.0, 12);
        for scheme in [Scheme::Epr(p), Scheme::TwoFilter(target()), Scheme::Unsqueezed] {
            let c = sensitivity_curve(&cfg, &scheme, &grid).unwrap();
            for q in &c.points {
                let sum: f64 = q.parts().iter().sum();
                assert!((sum - q.total).abs() <= 1e-10 * q.total);
                assert!(q.parts().iter().all(|x| *x <= q.total * (1.0 + 1e-12)));
            }
        }
    }

    #[test]
    fn no_squeezing_all_schemes_coincide() {
        let cfg0 = IfoConfig { r: 0.0, ..IfoConfig::et_lf() };
        let p = nearest_solution(&cfg0, &solve_epr_params(&cfg0, &target(), 200.0).unwrap()).unwrap();
        let cfg = p.apply(&cfg0);
        let grid = crate::log_grid(1.0, 100.0, 15);
        let base = sensitivity_curve(&cfg, &Scheme::Unsqueezed, &grid).unwrap();
        for scheme in [Scheme::Epr(p), Scheme::TwoFilter(target())] {
            let c = sensitivity_curve(&cfg, &scheme, &grid).unwrap();
            for (a, b) in base.points.iter().zip(&c.points) {
                assert!((a.total / b.total - 1.0).abs() < 1e-12);
            }
            for d in detected_squeezing(&cfg, &scheme, &grid).unwrap() {
                assert!(d.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn epr_penalty_is_three_db() {
        let (mut cfg, p) = lossless_epr();
        cfg.r = crate::two_photon_core::db_to_r(10.0);
        let grid = crate::log_grid(3.0, 60.0, 10);
        for d in detected_squeezing(&cfg, &Scheme::Epr(p), &grid).unwrap() {
            assert!((d - 7.0).abs() < 0.3, "{d}");
        }
    }

    #[test]
    fn ideal_two_filter_reaches_input_level() {
        // single-mode interferometer with its own filters and no loss
        let mut cfg = IfoConfig::et_lf().lossless();
        cfg.r = crate::two_photon_core::db_to_r(10.0);
        let grid = crate::default_grid();
        let (_, sol) = synthesize_filters(&cfg, &grid, 2, IfoModel::SingleMode).unwrap();
        let h = Homodyne::new(cfg.zeta_s);
        for &w in grid.iter().step_by(10) {
            let (t, resp) = crate::ifo_model::signal_transfer(&cfg, w, IfoModel::SingleMode);
            let m = t.m * sol.cascade(w, 0.0, 0.0);
            let sq = crate::two_photon_core::psd_with_covariance(
                &m,
                &SqueezerState::new(cfg.r, sol.injection_angle).covariance(),
                &resp,
                &h,
            )
            .unwrap();
            let vac = crate::two_photon_core::psd_with_covariance(&t.m, &Mat2::identity(), &resp, &h).unwrap();
            assert!((10.0 * (vac / sq).log10() - 10.0).abs() < 0.01);
        }
    }

    #[test]
    fn arm_loss_raises_combined_noise() {
        let (cfg, p) = lossless_epr();
        let mut last = 0.0;
        for eps in [0.0, 1e-5, 5e-5, 1e-4, 5e-4] {
            let c = IfoConfig { eps_arm: eps, ..cfg.clone() };
            let n = noise_point(&c, &Scheme::Epr(p), TAU * 8.0, 0.0).unwrap().total;
            assert!(n > last);
            last = n;
        }
    }

    #[test]
    fn dephasing_degrades_with_squeezing() {
        // two-filter scheme at the detuning of the narrow filter
        let (_, sol) =
            synthesize_filters(&IfoConfig::et_lf(), &crate::default_grid(), 2, IfoModel::SingleMode).unwrap();
        let w = sol.cavities.iter().map(|c| c.detuning.abs()).fold(f64::MAX, f64::min);
        let mut last = f64::INFINITY;
        for r in [0.5, 1.15, 1.73] {
            let cfg = IfoConfig { r, ..IfoConfig::et_lf() };
            let d = detected_squeezing(&cfg, &Scheme::TwoFilter(sol.clone()), &[w]).unwrap()[0];
            assert!(d < last, "r {r}: {d} dB");
            last = d;
        }
    }

    #[test]
    fn wiener_limits() {
        let c = wiener_combine(2.0, 3.0, C64::from(0.0));
        assert_eq!(c.g, C64::from(0.0));
        assert_eq!(c.s_gg, 2.0);
        let c = wiener_combine(2.0, 2.0, C64::from(2.0));
        assert!(c.s_gg.abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn wiener_is_optimal(saa in 0.1..10.0f64, sbb in 0.1..10.0f64, re in -1.0..1.0f64, im in -1.0..1.0f64, gr in -3.0..3.0f64, gi in -3.0..3.0f64) {
            // keep the cross spectrum physical: |S_AB|^2 <= S_AA S_BB
            let s_ab = C64::new(re, im) * (saa * sbb).sqrt() * 0.7;
            let best = wiener_combine(saa, sbb, s_ab);
            prop_assert!(combined_psd(saa, sbb, s_ab, C64::new(gr, gi)) >= best.s_gg - 1e-12);
            prop_assert!(best.s_gg <= saa + 1e-12);
        }
    }
}
