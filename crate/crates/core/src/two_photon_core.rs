//! Two-photon quadrature algebra and the homodyne noise engine.
//!
//! Quadrature vectors are ordered (amplitude, phase). A squeezer with r > 0
//! shrinks the phase quadrature.

use nalgebra::{Matrix2, RowVector2, Vector2};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};
use crate::C64;

pub type Mat2 = Matrix2<C64>;
pub type Vec2 = Vector2<C64>;
pub type Row2 = RowVector2<C64>;

/// Relative size of |H.R| below which the readout counts as signal-blind.
const SIGNAL_NULL: f64 = 1e-12;

/// Upper sideband and conjugated lower sideband at one sideband frequency.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SidebandPair {
    pub upper: C64,
    pub lower_conjugate: C64,
    pub omega: f64,
}

/// A 2x2 quadrature transfer matrix at one sideband frequency.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadTransfer {
    pub m: Mat2,
    pub omega: f64,
}

impl QuadTransfer {
    pub fn new(m: Mat2, omega: f64) -> Self {
        Self { m, omega }
    }

    pub fn identity(omega: f64) -> Self {
        Self::new(Mat2::identity(), omega)
    }

    pub fn det(&self) -> C64 {
        self.m.determinant()
    }

    pub fn then(&self, next: &QuadTransfer) -> QuadTransfer {
        QuadTransfer::new(next.m * self.m, self.omega)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SqueezerState {
    pub r: f64,
    pub theta: f64,
}

impl SqueezerState {
    pub fn new(r: f64, theta: f64) -> Self {
        assert!(r >= 0.0, "squeezing factor must be non-negative");
        Self { r, theta }
    }

    /// Squeezing factor for a given injected level in dB.
    pub fn from_db(db: f64, theta: f64) -> Self {
        Self::new(db_to_r(db), theta)
    }

    /// Input quadrature covariance (vacuum = identity).
    pub fn covariance(&self) -> Mat2 {
        let p = rotation(self.theta);
        let d = Mat2::from_diagonal(&Vec2::new(C64::from((2.0 * self.r).exp()), C64::from((-2.0 * self.r).exp())));
        p * d * p.adjoint()
    }
}

pub fn db_to_r(db: f64) -> f64 {
    0.5 * 10f64.powf(db / 10.0).ln()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Homodyne {
    pub zeta: f64,
}

impl Homodyne {
    pub fn new(zeta: f64) -> Self {
        Self { zeta }
    }

    pub fn vector(&self) -> Row2 {
        Row2::new(C64::from(self.zeta.cos()), C64::from(self.zeta.sin()))
    }
}

/// The sideband-to-quadrature matrix (1/sqrt2)[[1, 1], [-i, i]].
pub fn m_matrix() -> Mat2 {
    let s = FRAC_1_SQRT_2;
    Mat2::new(C64::new(s, 0.0), C64::new(s, 0.0), C64::new(0.0, -s), C64::new(0.0, s))
}

pub fn m_inverse() -> Mat2 {
    m_matrix().adjoint()
}

pub fn quad_from_sideband(pair: &SidebandPair) -> Vec2 {
    m_matrix() * Vec2::new(pair.upper, pair.lower_conjugate)
}

pub fn sideband_from_quad(q: &Vec2, omega: f64) -> SidebandPair {
    let s = m_inverse() * q;
    SidebandPair { upper: s[0], lower_conjugate: s[1], omega }
}

/// Quadrature matrix of a sideband-diagonal element,
/// M diag(f(+W), conj f(-W)) M^-1.
pub fn lift_scalar_transfer(f_plus: C64, f_minus_conj: C64) -> Mat2 {
    let i = C64::i();
    let s = (f_plus + f_minus_conj) * 0.5;
    let d = (f_plus - f_minus_conj) * 0.5;
    Mat2::new(s, i * d, -i * d, s)
}

/// Lift a scalar response evaluated at +W and -W.
pub fn lift<F: Fn(f64) -> C64>(f: F, omega: f64) -> Mat2 {
    lift_scalar_transfer(f(omega), f(-omega).conj())
}

/// Real rotation [[cos, -sin], [sin, cos]].
pub fn rotation(theta: f64) -> Mat2 {
    let (s, c) = theta.sin_cos();
    Mat2::new(c.into(), (-s).into(), s.into(), c.into())
}

/// Rotation angle of a matrix of the form e^{ia} Rot(x), in (-pi/2, pi/2].
pub fn rotation_angle(m: &Mat2) -> f64 {
    let num = m[(1, 0)] - m[(0, 1)];
    let den = m[(0, 0)] + m[(1, 1)];
    if den.norm() == 0.0 {
        return PI / 2.0;
    }
    // num/den is real for a pure rotation; the real part drops round-off.
    wrap_half_pi((num / den).re.atan())
}

/// Homodyne PSD of an arbitrary Gaussian input through `t`, normalized
/// by the signal response.
pub fn psd_with_covariance(t: &Mat2, cov: &Mat2, resp: &Vec2, h: &Homodyne) -> Result<f64> {
    let hv = h.vector();
    let signal = (hv * resp)[0].norm();
    if signal <= SIGNAL_NULL * resp.norm() {
        return Err(Error::SignalNull(signal));
    }
    let u = hv * t;
    let noise = (u * cov * u.adjoint())[0].re;
    Ok(noise / (signal * signal))
}

pub fn quantum_noise_psd(t: &QuadTransfer, resp: &Vec2, sq: &SqueezerState, h: &Homodyne) -> Result<f64> {
    psd_with_covariance(&t.m, &sq.covariance(), resp, h)
}

/// Pointwise noise-minimizing squeeze angle, in (-pi/2, pi/2].
pub fn optimal_rotation_angle(t: &QuadTransfer, h: &Homodyne) -> f64 {
    let v = h.vector() * t.m;
    let (v1, v2) = (v[0], v[1]);
    0.5 * (-2.0 * (v1 * v2.conj()).re).atan2(v2.norm_sqr() - v1.norm_sqr())
}

/// Make a sequence of angles defined mod pi continuous, anchored at the first.
pub fn unwrap_mod_pi(angles: &mut [f64]) {
    for k in 1..angles.len() {
        let d = angles[k] - angles[k - 1];
        angles[k] -= PI * (d / PI).round();
    }
}

/// Wrap an angle difference into (-pi/2, pi/2].
pub fn wrap_half_pi(x: f64) -> f64 {
    let y = x - PI * (x / PI).round();
    if y <= -PI / 2.0 {
        y + PI
    } else {
        y
    }
}
