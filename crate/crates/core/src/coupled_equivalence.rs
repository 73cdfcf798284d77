//! Two cascaded filter cavities versus one three-mirror coupled cavity:
//! exact and second-order transfer functions, the analytic parameter map,
//! a Levenberg-Marquardt fitter and the SRC-arm feasibility test.
//!
//! Detunings here follow the sideband convention of the transfer functions:
//! a cavity round-trip phase is 2(detuning + W)L/c.

use std::f64::consts::PI;

use nalgebra::{Matrix4, Vector4};

use crate::config::IfoConfig;
use crate::error::{Error, Result};
use crate::filter_synthesis::{FilterCavity, FilterSolution};
use crate::ifo_model::{cavity_reflection, CavitySpec};
use crate::two_photon_core::{lift, rotation_angle, unwrap_mod_pi, wrap_half_pi};
use crate::{C64, C_LIGHT};

/// Default manufacturability floor on the middle-mirror transmissivity.
pub const T_FLOOR: f64 = 1e-5;
/// Rotation agreement required for a feasible verdict [rad].
pub const ROTATION_TOLERANCE: f64 = 0.02;
const MAX_ITERATIONS: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoupledCavitySpec {
    /// Length of the cavity between input and middle mirror [m].
    pub l1: f64,
    /// Length of the cavity behind the middle mirror [m].
    pub l2: f64,
    /// Input-mirror power transmissivity.
    pub t1: f64,
    /// Middle-mirror power transmissivity.
    pub t2: f64,
    pub detuning1: f64,
    pub detuning2: f64,
}

impl CoupledCavitySpec {
    /// Build from half-bandwidth and splitting frequency.
    pub fn from_rates(l1: f64, l2: f64, gamma1: f64, omega_s: f64, detuning1: f64, detuning2: f64) -> Self {
        Self {
            l1,
            l2,
            t1: 4.0 * gamma1 * l1 / C_LIGHT,
            t2: 4.0 * omega_s * omega_s * l1 * l2 / (C_LIGHT * C_LIGHT),
            detuning1,
            detuning2,
        }
    }

    pub fn gamma1(&self) -> f64 {
        C_LIGHT * self.t1 / (4.0 * self.l1)
    }

    /// Splitting frequency of the two normal modes [rad/s].
    pub fn omega_s(&self) -> f64 {
        C_LIGHT * self.t2.sqrt() / (2.0 * (self.l1 * self.l2).sqrt())
    }

    fn phases(&self, omega: f64) -> (f64, f64) {
        (2.0 * (self.detuning1 + omega) * self.l1 / C_LIGHT, 2.0 * (self.detuning2 + omega) * self.l2 / C_LIGHT)
    }

    /// Whether the second-order expansion is trustworthy.
    pub fn in_approx_regime(&self, omega: f64) -> bool {
        let (p1, p2) = self.phases(omega);
        self.t1 <= 0.1 && self.t2 <= 0.1 && p1.abs() <= 0.3 && p2.abs() <= 0.3
    }
}

fn round_trip(spec: &CavitySpec, omega: f64) -> f64 {
    spec.round_trip_phase(omega)
}

/// Product of the two exact single-cavity reflections.
pub fn two_cavity_transfer_exact(c1: &CavitySpec, c2: &CavitySpec, omega: f64) -> C64 {
    cavity_reflection(c1, omega) * cavity_reflection(c2, omega)
}

/// Second-order expansion of the cascade.
pub fn two_cavity_transfer_approx(c1: &CavitySpec, c2: &CavitySpec, omega: f64) -> C64 {
    let (p1, p2) = (round_trip(c1, omega), round_trip(c2, omega));
    let re = 0.25 * c1.t_in * c2.t_in - p1 * p2;
    let im = 0.5 * (c2.t_in * p1 + c1.t_in * p2);
    C64::new(re, im) / C64::new(re, -im)
}

/// Whether the cascade expansion is trustworthy at `omega`.
pub fn two_cavity_in_approx_regime(c1: &CavitySpec, c2: &CavitySpec, omega: f64) -> bool {
    c1.t_in <= 0.1 && c2.t_in <= 0.1 && round_trip(c1, omega).abs() <= 0.3 && round_trip(c2, omega).abs() <= 0.3
}

/// Exact three-mirror transfer: the inner cavity (middle mirror plus a
/// perfect end mirror) acts as a compound mirror for the outer one.
pub fn coupled_cavity_transfer_exact(spec: &CoupledCavitySpec, omega: f64) -> C64 {
    let (p1, p2) = spec.phases(omega);
    // everything is expressed through small quantities 1 - r and 1 - e^{i phi}
    // so that highly reflective mirrors keep full precision
    let one_minus_r = |t: f64| t / (1.0 + (1.0 - t).sqrt());
    let one_minus_e = |p: f64| {
        let h = (p / 2.0).sin();
        C64::new(2.0 * h * h, -p.sin())
    };
    let (c1, a) = (one_minus_r(spec.t1), one_minus_r(spec.t2));
    let (b1, b2) = (one_minus_e(p1), one_minus_e(p2));
    let r1 = 1.0 - c1;
    // w = 1 - e1 (r2 - e2) / (1 - r2 e2), the round trip through the inner cavity
    let n = (C64::from(2.0) - b1 - b2) * a + b1 * b2;
    let d = b2 * (1.0 - a) + a;
    let w = n / d;
    (w - c1) / (w * r1 + c1)
}

/// Second-order expansion keeping (T2')^2 and T2' phi1' terms.
pub fn coupled_cavity_transfer_second_order(spec: &CoupledCavitySpec, omega: f64) -> C64 {
    let (p1, p2) = spec.phases(omega);
    let re = spec.t2 * spec.t2 + spec.t2 - p1 * p2;
    let im = 0.5 * (spec.t1 * p2 + spec.t2 * p1);
    C64::new(re, im) / C64::new(re, -im)
}

/// Simplified expansion valid for (T2')^2 << T2' << T1'.
pub fn coupled_cavity_transfer_approx(spec: &CoupledCavitySpec, omega: f64) -> C64 {
    let (p1, p2) = spec.phases(omega);
    let re = spec.t2 - p1 * p2;
    let im = 0.5 * spec.t1 * p2;
    C64::new(re, im) / C64::new(re, -im)
}

/// Quadrature rotation produced by a sideband transfer function.
pub fn transfer_rotation<F: Fn(f64) -> C64>(f: F, grid: &[f64]) -> Vec<f64> {
    let mut th: Vec<f64> = grid.iter().map(|&w| rotation_angle(&lift(&f, w))).collect();
    unwrap_mod_pi(&mut th);
    th
}

/// Largest |a - b| between two rotation curves, modulo pi.
pub fn max_rotation_discrepancy(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| wrap_half_pi(x - y).abs()).fold(0.0, f64::max)
}

/// Lossless cavity matching one synthesized filter, sideband convention.
pub fn filter_as_cavity(c: &FilterCavity) -> CavitySpec {
    CavitySpec::lossless(c.length, c.transmissivity(), c.detuning)
}

/// Analytic two-cavity to coupled-cavity map; lengths are kept so that
/// L1' L2' = L1 L2. Returns the coupled cavity and the splitting frequency.
pub fn two_to_coupled_params(c1: &FilterCavity, c2: &FilterCavity) -> (CoupledCavitySpec, f64) {
    let (g1, g2) = (c1.gamma, c2.gamma);
    let (d1, d2) = (c1.detuning, c2.detuning);
    let g = g1 + g2;
    let dd = (d1 - d2) / g;
    let omega_s = ((1.0 + dd * dd) * g1 * g2).sqrt();
    let spec = CoupledCavitySpec::from_rates(
        c1.length,
        c2.length,
        g,
        omega_s,
        (g1 * d1 + g2 * d2) / g,
        (g2 * d1 + g1 * d2) / g,
    );
    (spec, omega_s)
}

/// Invert the coefficient-matching equations: the two (gamma, detuning)
/// pairs reproduced by a coupled cavity, sorted by descending gamma.
pub fn coupled_to_two_params(spec: &CoupledCavitySpec) -> [(f64, f64); 2] {
    // z_j = detuning_j + i gamma_j are the roots of
    // z^2 - (d1' + d2' + i g1') z + (d1' d2' - ws^2 + i g1' d2') = 0
    let (g, ws) = (spec.gamma1(), spec.omega_s());
    let b = C64::new(spec.detuning1 + spec.detuning2, g);
    let c = C64::new(spec.detuning1 * spec.detuning2 - ws * ws, g * spec.detuning2);
    let disc = (b * b - c * 4.0).sqrt();
    let z1 = (b + disc) * 0.5;
    let z2 = (b - disc) * 0.5;
    let mut out = [(z1.im, z1.re), (z2.im, z2.re)];
    if out[1].0 > out[0].0 {
        out.swap(0, 1);
    }
    out
}

/// Outcome of a least-squares fit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoupledFit {
    pub spec: CoupledCavitySpec,
    pub iterations: usize,
    pub gradient_norm: f64,
    /// Sum of squared complex residuals.
    pub cost: f64,
}

const HZ: f64 = 2.0 * PI;

fn spec_from_params(p: &Vector4<f64>, l1: f64, l2: f64) -> CoupledCavitySpec {
    CoupledCavitySpec::from_rates(l1, l2, p[2].abs() * HZ, p[3].abs() * HZ, p[0] * HZ, p[1] * HZ)
}

/// Levenberg-Marquardt over (d1', d2', g1', ws) in Hz, minimizing
/// sum |target - f'|^2 of the complex transfer functions.
pub fn fit_coupled_with<F>(target: &[C64], grid: &[f64], init: &CoupledCavitySpec, model: F) -> Result<CoupledFit>
where
    F: Fn(&CoupledCavitySpec, f64) -> C64,
{
    let (l1, l2) = (init.l1, init.l2);
    let residuals = |p: &Vector4<f64>| -> Vec<f64> {
        let s = spec_from_params(p, l1, l2);
        let mut r = Vec::with_capacity(2 * grid.len());
        for (&w, t) in grid.iter().zip(target) {
            let d = t - model(&s, w);
            r.push(d.re);
            r.push(d.im);
        }
        r
    };
    let cost = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>();
    let jacobian = |p: &Vector4<f64>| -> Vec<[f64; 4]> {
        let mut j = vec![[0.0; 4]; 2 * grid.len()];
        for k in 0..4 {
            let h = 1e-6 * p[k].abs().max(1e-3);
            let mut pp = *p;
            let mut pm = *p;
            pp[k] += h;
            pm[k] -= h;
            let (rp, rm) = (residuals(&pp), residuals(&pm));
            for i in 0..j.len() {
                // residual is target - model, so J of the model is the negative
                j[i][k] = -(rp[i] - rm[i]) / (2.0 * h);
            }
        }
        j
    };

    let mut p = Vector4::new(init.detuning1 / HZ, init.detuning2 / HZ, init.gamma1() / HZ, init.omega_s() / HZ);
    let mut r = residuals(&p);
    let mut c = cost(&r);
    let mut lambda = 1e-3;
    let mut gnorm = f64::INFINITY;
    for it in 1..=MAX_ITERATIONS {
        let j = jacobian(&p);
        let mut jtj = Matrix4::<f64>::zeros();
        let mut jtr = Vector4::<f64>::zeros();
        for (row, ri) in j.iter().zip(&r) {
            for a in 0..4 {
                jtr[a] += row[a] * ri;
                for b in 0..4 {
                    jtj[(a, b)] += row[a] * row[b];
                }
            }
        }
        gnorm = jtr.norm();
        if gnorm < 1e-10 {
            return Ok(CoupledFit {
                spec: spec_from_params(&p, l1, l2),
                iterations: it - 1,
                gradient_norm: gnorm,
                cost: c,
            });
        }
        let mut stepped = false;
        for _ in 0..60 {
            let mut a = jtj;
            for d in 0..4 {
                a[(d, d)] += lambda * jtj[(d, d)].max(1e-30);
            }
            let Some(step) = a.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let trial = p + step;
            let rt = residuals(&trial);
            let ct = cost(&rt);
            if ct <= c {
                let small = step.norm() <= 1e-12 * (p.norm() + 1e-12);
                p = trial;
                r = rt;
                let done = small || (c - ct) <= 1e-15 * c.max(1e-300);
                c = ct;
                lambda = (lambda * 0.1).max(1e-15);
                stepped = true;
                if done {
                    return Ok(CoupledFit {
                        spec: spec_from_params(&p, l1, l2),
                        iterations: it,
                        gradient_norm: gnorm,
                        cost: c,
                    });
                }
                break;
            }
            lambda *= 10.0;
        }
        if !stepped {
            // no descent direction left: at a minimum to working precision
            return Ok(CoupledFit {
                spec: spec_from_params(&p, l1, l2),
                iterations: it,
                gradient_norm: gnorm,
                cost: c,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: MAX_ITERATIONS,
        gradient_norm: gnorm,
        best: Box::new(spec_from_params(&p, l1, l2)),
    })
}

/// Fit the coupled cavity to a two-cavity target over the grid, using the
/// exact three-mirror transfer.
pub fn fit_coupled_params(target: &[C64], grid: &[f64], init: &CoupledCavitySpec) -> Result<CoupledFit> {
    fit_coupled_with(target, grid, init, coupled_cavity_transfer_exact)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceReport {
    pub analytic: CoupledCavitySpec,
    pub fitted: Option<CoupledFit>,
    /// Largest rotation mismatch against the two-cavity target [rad].
    pub max_discrepancy: f64,
    /// Middle-mirror (or ITM) transmissivity the map requires.
    pub required_t: f64,
    /// Transmissivity actually available, when a physical system is tested.
    pub actual_t: Option<f64>,
    pub t_floor: f64,
    pub feasible: bool,
}

impl EquivalenceReport {
    pub fn verdict(&self) -> &'static str {
        if self.feasible {
            "feasible"
        } else {
            "infeasible"
        }
    }
}

fn two_cavity_target(target: &FilterSolution) -> Result<(CavitySpec, CavitySpec)> {
    match target.cavities.as_slice() {
        [a, b] => Ok((filter_as_cavity(a), filter_as_cavity(b))),
        other => Err(Error::Config(format!("coupled-cavity map needs exactly 2 filter cavities, got {}", other.len()))),
    }
}

/// Two-cavity versus coupled-cavity comparison: analytic map, numeric fit
/// and the rotation agreement of the analytic solution.
pub fn equivalence_report(target: &FilterSolution, grid: &[f64]) -> Result<EquivalenceReport> {
    let (c1, c2) = two_cavity_target(target)?;
    let (analytic, _) = two_to_coupled_params(&target.cavities[0], &target.cavities[1]);
    let f: Vec<C64> = grid.iter().map(|&w| two_cavity_transfer_exact(&c1, &c2, w)).collect();
    let fitted = fit_coupled_params(&f, grid, &analytic)?;
    let th_target = transfer_rotation(|w| two_cavity_transfer_exact(&c1, &c2, w), grid);
    let th_coupled = transfer_rotation(|w| coupled_cavity_transfer_exact(&analytic, w), grid);
    let max_discrepancy = max_rotation_discrepancy(&th_target, &th_coupled);
    Ok(EquivalenceReport {
        analytic,
        fitted: Some(fitted),
        max_discrepancy,
        required_t: analytic.t2,
        actual_t: None,
        t_floor: T_FLOOR,
        feasible: analytic.t2 >= T_FLOOR && max_discrepancy < ROTATION_TOLERANCE,
    })
}

/// SRC-arm three-mirror cavity with the configured mirrors and lengths,
/// detuned as the analytic map requires for the idler.
pub fn src_arm_spec(cfg: &IfoConfig, analytic: &CoupledCavitySpec) -> CoupledCavitySpec {
    CoupledCavitySpec {
        l1: cfg.l_src,
        l2: cfg.l_arm,
        t1: cfg.t_srm,
        t2: cfg.t_itm,
        detuning1: analytic.detuning1,
        detuning2: analytic.detuning2,
    }
}

/// Can the SRC-arm cavity replace both filter cavities for the idler?
pub fn src_arm_feasibility(cfg: &IfoConfig, target: &FilterSolution, grid: &[f64]) -> Result<EquivalenceReport> {
    src_arm_feasibility_with_floor(cfg, target, grid, T_FLOOR)
}

pub fn src_arm_feasibility_with_floor(
    cfg: &IfoConfig,
    target: &FilterSolution,
    grid: &[f64],
    floor: f64,
) -> Result<EquivalenceReport> {
    let (c1, c2) = two_cavity_target(target)?;
    let (analytic, omega_s) = two_to_coupled_params(&target.cavities[0], &target.cavities[1]);
    // matching splitting frequencies with L_SRC L_arm = L1' L2'
    let required_t = 4.0 * omega_s * omega_s * analytic.l1 * analytic.l2 / (C_LIGHT * C_LIGHT);
    let sa = src_arm_spec(cfg, &analytic);
    let th_target = transfer_rotation(|w| two_cavity_transfer_exact(&c1, &c2, w), grid);
    let th_sa = transfer_rotation(|w| coupled_cavity_transfer_exact(&sa, w), grid);
    let max_discrepancy = max_rotation_discrepancy(&th_target, &th_sa);
    let t_match = (cfg.t_itm - required_t).abs() <= 0.05 * required_t;
    Ok(EquivalenceReport {
        analytic,
        fitted: None,
        max_discrepancy,
        required_t,
        actual_t: Some(cfg.t_itm),
        t_floor: floor,
        feasible: required_t >= floor && t_match && max_discrepancy < ROTATION_TOLERANCE,
    })
}

/// Human-readable comparison table in Hz.
pub fn format_report(rep: &EquivalenceReport) -> String {
    let hz = |x: f64| x / (2.0 * PI);
    let row = |name: &str, a: f64, b: Option<f64>| match b {
        Some(b) => format!("{name:<12} {:>12.4} {:>12.4}\n", a, b),
        None => format!("{name:<12} {:>12.4}\n", a),
    };
    let a = &rep.analytic;
    let f = rep.fitted.map(|f| f.spec);
    let mut s = String::from("parameter       analytic[Hz]  fitted[Hz]\n");
    s += &row("delta1'", hz(a.detuning1), f.map(|f| hz(f.detuning1)));
    s += &row("delta2'", hz(a.detuning2), f.map(|f| hz(f.detuning2)));
    s += &row("gamma1'", hz(a.gamma1()), f.map(|f| hz(f.gamma1())));
    s += &row("delta_s'", hz(a.omega_s()), f.map(|f| hz(f.omega_s())));
    s += &format!("required T: {:.4e}", rep.required_t);
    if let Some(t) = rep.actual_t {
        s += &format!(" (available {t:.4e})");
    }
    s += &format!("\nmanufacturability floor: {:.1e}\n", rep.t_floor);
    s += &format!("max rotation discrepancy [rad]: {:.4e}\n", rep.max_discrepancy);
    s += &format!("verdict: {}\n", rep.verdict());
    s
}
