//! Required squeeze rotation and its realization by cascaded filter cavities.
//!
//! tan(theta) is fitted as a ratio of real polynomials in W^2; the complex
//! polynomial sum (A_k + i B_k) W^2k then factors into one pole pair per
//! cavity, whose root W = detuning + i gamma (gamma > 0) fixes the cavity.

use nalgebra::DMatrix;
use std::f64::consts::PI;

use crate::config::IfoConfig;
use crate::error::{Error, Result};
use crate::ifo_model::{cavity_block, signal_transfer, CavitySpec, IfoModel};
use crate::two_photon_core::{optimal_rotation_angle, rotation_angle, unwrap_mod_pi, wrap_half_pi, Homodyne, Mat2};
use crate::{C64, C_LIGHT};

pub const FIT_RESIDUAL_LIMIT: f64 = 1e-6;
const CONDITION_LIMIT: f64 = 1e12;

/// tan(theta) = sum B_k W^2k / sum A_k W^2k, W in rad/s.
#[derive(Clone, Debug, PartialEq)]
pub struct RotationPolynomial {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Smallest over largest singular value of the fit system.
    pub residual: f64,
}

impl RotationPolynomial {
    pub fn degree(&self) -> usize {
        self.a.len() - 1
    }

    pub fn angle(&self, omega: f64) -> f64 {
        let x = omega * omega;
        let (mut num, mut den, mut p) = (0.0, 0.0, 1.0);
        for k in 0..self.a.len() {
            den += self.a[k] * p;
            num += self.b[k] * p;
            p *= x;
        }
        num.atan2(den)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterCavity {
    /// Half-bandwidth [rad/s].
    pub gamma: f64,
    /// Detuning [rad/s] in the readout-frame convention.
    pub detuning: f64,
    pub length: f64,
}

impl FilterCavity {
    pub fn transmissivity(&self) -> f64 {
        4.0 * self.gamma * self.length / C_LIGHT
    }

    /// Physical cavity. The readout frame conjugates sidebands, so the
    /// physical detuning is the negative of the reported one.
    pub fn cavity_spec(&self, loss: f64, detuning_error: f64) -> CavitySpec {
        CavitySpec::filter(self.gamma, -self.detuning + detuning_error, self.length, loss)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FilterSolution {
    pub cavities: Vec<FilterCavity>,
    /// Constant squeeze angle set at the squeezer [rad].
    pub injection_angle: f64,
}

impl FilterSolution {
    /// Rotation of the lossless cascade alone (no injection angle).
    pub fn cascade_angle(&self, omega: f64) -> f64 {
        rotation_angle(&self.cascade(omega, 0.0, 0.0))
    }

    /// Readout-frame quadrature matrix of the cascade.
    pub fn cascade(&self, omega: f64, loss: f64, detuning_error: f64) -> Mat2 {
        self.cavities
            .iter()
            .fold(Mat2::identity(), |m, c| cavity_block(&c.cavity_spec(loss, detuning_error), omega) * m)
    }
}

/// Unwrapped noise-minimizing squeeze angle over the grid.
pub fn required_rotation(cfg: &IfoConfig, grid: &[f64], model: IfoModel) -> Vec<f64> {
    let h = Homodyne::new(cfg.zeta_s);
    let mut th: Vec<f64> =
        grid.iter().map(|&w| optimal_rotation_angle(&signal_transfer(cfg, w, model).0, &h)).collect();
    unwrap_mod_pi(&mut th);
    th
}

/// Homogeneous least-squares fit of A(x) sin(theta) - B(x) cos(theta) = 0.
pub fn fit_angles(grid: &[f64], theta: &[f64], n: usize) -> Result<RotationPolynomial> {
    if n == 0 || grid.len() < 4 * n + 4 || grid.len() != theta.len() {
        return Err(Error::Config(format!("degree {n} needs at least {} grid points", 4 * n + 4)));
    }
    let scale = grid.iter().map(|w| w * w).fold(0.0, f64::max);
    let cols = 2 * n + 2;
    let mut m = DMatrix::<f64>::zeros(grid.len(), cols);
    for (i, (&w, &t)) in grid.iter().zip(theta).enumerate() {
        let x = w * w / scale;
        let (s, c) = t.sin_cos();
        let mut p = 1.0;
        for k in 0..=n {
            m[(i, k)] = p * s;
            m[(i, n + 1 + k)] = -p * c;
            p *= x;
        }
    }
    let svd = m.svd(false, true);
    let vt = svd.v_t.ok_or_else(|| Error::Numerical("SVD failed".into()))?;
    let sv = &svd.singular_values;
    let (imin, smin) =
        sv.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    let smax = sv.max();
    let v = vt.row(imin);
    let mut a = Vec::with_capacity(n + 1);
    let mut b = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let sk = scale.powi(k as i32);
        a.push(v[k] / sk);
        b.push(v[n + 1 + k] / sk);
    }
    // fix the overall sign so the constant term points along +A where possible
    if a[0] < 0.0 || (a[0] == 0.0 && b[0] < 0.0) {
        a.iter_mut().chain(b.iter_mut()).for_each(|x| *x = -*x);
    }
    Ok(RotationPolynomial { a, b, residual: smin / smax })
}

pub fn fit_rotation_polynomial_with(
    cfg: &IfoConfig,
    grid: &[f64],
    n: usize,
    model: IfoModel,
) -> Result<RotationPolynomial> {
    let th = required_rotation(cfg, grid, model);
    let p = fit_angles(grid, &th, n)?;
    if p.residual > FIT_RESIDUAL_LIMIT {
        return Err(Error::ResidualExceeded { residual: p.residual, limit: FIT_RESIDUAL_LIMIT, degree: n });
    }
    Ok(p)
}

/// Fit with the single-mode interferometer model.
pub fn fit_rotation_polynomial(cfg: &IfoConfig, grid: &[f64], n: usize) -> Result<RotationPolynomial> {
    fit_rotation_polynomial_with(cfg, grid, n, IfoModel::SingleMode)
}

/// Roots of sum c_k y^k (ascending coefficients) from the companion matrix.
pub fn polynomial_roots(coeffs: &[C64]) -> Result<Vec<C64>> {
    let mut c: Vec<C64> = coeffs.to_vec();
    while c.len() > 1 && c.last().unwrap().norm() == 0.0 {
        c.pop();
    }
    let n = c.len() - 1;
    if n == 0 {
        return Ok(vec![]);
    }
    let lead = c[n];
    let mut comp = DMatrix::<C64>::zeros(n, n);
    for i in 1..n {
        comp[(i, i - 1)] = C64::from(1.0);
    }
    for k in 0..n {
        comp[(k, n - 1)] = -c[k] / lead;
    }
    let sv = comp.clone().singular_values();
    let smin = sv.min();
    let cond = if smin > 0.0 { sv.max() / smin } else { f64::INFINITY };
    if cond > CONDITION_LIMIT {
        return Err(Error::IllConditioned(cond));
    }
    let eig =
        comp.schur().eigenvalues().ok_or_else(|| Error::Numerical("companion eigen-decomposition failed".into()))?;
    Ok(eig.iter().copied().collect())
}

/// Filter cavities from the rotation polynomial, one per pole pair.
pub fn extract_filter_params(p: &RotationPolynomial, length: f64) -> Result<FilterSolution> {
    let n = p.degree();
    // Roots in x = W^2, rescaled for conditioning.
    let c: Vec<C64> = (0..=n).map(|k| C64::new(p.a[k], p.b[k])).collect();
    if c[n].norm() == 0.0 {
        return Err(Error::Numerical("leading coefficient vanishes".into()));
    }
    let scale = (c[0].norm() / c[n].norm()).powf(1.0 / n as f64);
    let scale = if scale.is_finite() && scale > 0.0 { scale } else { 1.0 };
    let scaled: Vec<C64> = c.iter().enumerate().map(|(k, z)| z * scale.powi(k as i32)).collect();
    let mut cavities = Vec::with_capacity(n);
    for y in polynomial_roots(&scaled)? {
        // each root is W^2 = (detuning + i gamma)^2
        let z = (y * scale).sqrt();
        let z = if z.im < 0.0 { -z } else { z };
        if z.im <= 0.0 {
            return Err(Error::NoPositiveRoot);
        }
        cavities.push(FilterCavity { gamma: z.im, detuning: z.re, length });
    }
    cavities.sort_by(|a, b| {
        b.gamma.partial_cmp(&a.gamma).unwrap().then(a.detuning.abs().partial_cmp(&b.detuning.abs()).unwrap())
    });
    Ok(FilterSolution { cavities, injection_angle: 0.0 })
}

/// Constant angle that best aligns the cascade with the required rotation.
pub fn fit_injection_angle(sol: &FilterSolution, grid: &[f64], required: &[f64]) -> f64 {
    let z: C64 = grid.iter().zip(required).map(|(&w, &t)| C64::from_polar(1.0, 2.0 * (t - sol.cascade_angle(w)))).sum();
    wrap_half_pi(0.5 * z.arg())
}

/// Fit, factor and align: the complete filter design for a configuration.
pub fn synthesize_filters(
    cfg: &IfoConfig,
    grid: &[f64],
    n: usize,
    model: IfoModel,
) -> Result<(RotationPolynomial, FilterSolution)> {
    let required = required_rotation(cfg, grid, model);
    let p = fit_angles(grid, &required, n)?;
    if p.residual > FIT_RESIDUAL_LIMIT {
        return Err(Error::ResidualExceeded { residual: p.residual, limit: FIT_RESIDUAL_LIMIT, degree: n });
    }
    let mut sol = extract_filter_params(&p, cfg.l_f)?;
    sol.injection_angle = fit_injection_angle(&sol, grid, &required);
    Ok((p, sol))
}

/// Largest |achieved - required| squeeze angle over the grid [rad].
pub fn verify_rotation_against(sol: &FilterSolution, grid: &[f64], required: &[f64]) -> f64 {
    grid.iter()
        .zip(required)
        .map(|(&w, &t)| wrap_half_pi(sol.injection_angle + sol.cascade_angle(w) - t).abs())
        .fold(0.0, f64::max)
}

pub fn verify_rotation(sol: &FilterSolution, cfg: &IfoConfig, grid: &[f64], model: IfoModel) -> f64 {
    verify_rotation_against(sol, grid, &required_rotation(cfg, grid, model))
}

/// Polynomial whose roots are the given (gamma, detuning) pairs.
pub fn polynomial_from_cavities(cavities: &[(f64, f64)], phase: f64) -> RotationPolynomial {
    // prod (x - (d_j + i g_j)^2) in x = W^2.
    let mut c = vec![C64::from_polar(1.0, phase)];
    for &(g, d) in cavities {
        let r = C64::new(d, g) * C64::new(d, g);
        let mut next = vec![C64::from(0.0); c.len() + 1];
        for (k, z) in c.iter().enumerate() {
            next[k + 1] += z;
            next[k] -= z * r;
        }
        c = next;
    }
    RotationPolynomial { a: c.iter().map(|z| z.re).collect(), b: c.iter().map(|z| z.im).collect(), residual: 0.0 }
}

/// Readable summary table.
pub fn format_solution(sol: &FilterSolution) -> String {
    let mut s = String::from("cavity  gamma/2pi[Hz]  detuning/2pi[Hz]  T_in          L[m]\n");
    for (j, c) in sol.cavities.iter().enumerate() {
        s += &format!(
            "{:<7} {:<14.4} {:<17.4} {:<13.4e} {}\n",
            j + 1,
            c.gamma / (2.0 * PI),
            c.detuning / (2.0 * PI),
            c.transmissivity(),
            c.length
        );
    }
    s += &format!("injection angle [rad]: {:.6}\n", sol.injection_angle);
    s
}
