//! Interferometer parameter set and its flat `key = value` file format.
//!
//! Keys: M, I, L_SRC, L_arm, T_SRM, T_ITM, phi_SRC, Delta, zeta_s, zeta_i, r,
//! eps_i, eps_r, eps_SRC, eps_arm, eps_f, dL_f, lambda, L_f. `Delta` is given
//! in Hz (cyclic); everything else in SI units and radians. `#` starts a
//! comment. Unknown or repeated keys are errors; missing keys keep their
//! default values.

use std::f64::consts::PI;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct IfoConfig {
    /// Test-mass mass [kg].
    pub mass: f64,
    /// Laser power at the beam splitter [W].
    pub power: f64,
    pub l_src: f64,
    pub l_arm: f64,
    pub t_srm: f64,
    pub t_itm: f64,
    /// SRC round-trip detuning [rad].
    pub phi_src: f64,
    /// Idler offset [rad/s].
    pub delta: f64,
    pub zeta_s: f64,
    pub zeta_i: f64,
    pub r: f64,
    pub eps_i: f64,
    pub eps_r: f64,
    pub eps_src: f64,
    pub eps_arm: f64,
    pub eps_f: f64,
    /// Filter-cavity length deviation [m].
    pub dl_f: f64,
    pub lambda: f64,
    /// Filter-cavity length [m].
    pub l_f: f64,
}

impl Default for IfoConfig {
    fn default() -> Self {
        Self::et_lf()
    }
}

pub const KEYS: [&str; 19] = [
    "M", "I", "L_SRC", "L_arm", "T_SRM", "T_ITM", "phi_SRC", "Delta", "zeta_s", "zeta_i", "r", "eps_i", "eps_r",
    "eps_SRC", "eps_arm", "eps_f", "dL_f", "lambda", "L_f",
];

impl IfoConfig {
    /// ET low-frequency detector parameters.
    pub fn et_lf() -> Self {
        Self {
            mass: 211.0,
            power: 63.0,
            l_src: 152.0,
            l_arm: 10000.3,
            t_srm: 0.2,
            t_itm: 0.007,
            phi_src: 0.75,
            delta: 2.0 * PI * 1.27e6,
            zeta_s: PI / 2.0,
            zeta_i: PI / 2.0 + 0.1,
            r: 1.15,
            eps_i: 0.04,
            eps_r: 0.03,
            eps_src: 1000e-6,
            eps_arm: 45e-6,
            eps_f: 20e-6,
            dl_f: 1e-12,
            lambda: 1550e-9,
            l_f: 1000.0,
        }
    }

    /// Same interferometer with every optical loss and length error removed.
    pub fn lossless(&self) -> Self {
        Self { eps_i: 0.0, eps_r: 0.0, eps_src: 0.0, eps_arm: 0.0, eps_f: 0.0, dl_f: 0.0, ..self.clone() }
    }

    /// Carrier angular frequency [rad/s].
    pub fn omega0(&self) -> f64 {
        2.0 * PI * crate::C_LIGHT / self.lambda
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        Some(match key {
            "M" => self.mass,
            "I" => self.power,
            "L_SRC" => self.l_src,
            "L_arm" => self.l_arm,
            "T_SRM" => self.t_srm,
            "T_ITM" => self.t_itm,
            "phi_SRC" => self.phi_src,
            "Delta" => self.delta / (2.0 * PI),
            "zeta_s" => self.zeta_s,
            "zeta_i" => self.zeta_i,
            "r" => self.r,
            "eps_i" => self.eps_i,
            "eps_r" => self.eps_r,
            "eps_SRC" => self.eps_src,
            "eps_arm" => self.eps_arm,
            "eps_f" => self.eps_f,
            "dL_f" => self.dl_f,
            "lambda" => self.lambda,
            "L_f" => self.l_f,
            _ => return None,
        })
    }

    pub fn set(&mut self, key: &str, v: f64) -> Result<()> {
        match key {
            "M" => self.mass = v,
            "I" => self.power = v,
            "L_SRC" => self.l_src = v,
            "L_arm" => self.l_arm = v,
            "T_SRM" => self.t_srm = v,
            "T_ITM" => self.t_itm = v,
            "phi_SRC" => self.phi_src = v,
            "Delta" => self.delta = 2.0 * PI * v,
            "zeta_s" => self.zeta_s = v,
            "zeta_i" => self.zeta_i = v,
            "r" => self.r = v,
            "eps_i" => self.eps_i = v,
            "eps_r" => self.eps_r = v,
            "eps_SRC" => self.eps_src = v,
            "eps_arm" => self.eps_arm = v,
            "eps_f" => self.eps_f = v,
            "dL_f" => self.dl_f = v,
            "lambda" => self.lambda = v,
            "L_f" => self.l_f = v,
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |k: &str, why: &str| Err(Error::Config(format!("{k}: {why}")));
        for (k, v) in KEYS.iter().map(|k| (*k, self.get(k).unwrap())) {
            if !v.is_finite() {
                return bad(k, "not finite");
            }
        }
        for k in ["M", "L_SRC", "L_arm", "lambda", "L_f"] {
            if self.get(k).unwrap() <= 0.0 {
                return bad(k, "must be positive");
            }
        }
        for k in ["I", "r", "dL_f"] {
            if self.get(k).unwrap() < 0.0 {
                return bad(k, "must be non-negative");
            }
        }
        for k in ["T_SRM", "T_ITM"] {
            let v = self.get(k).unwrap();
            if !(0.0..=1.0).contains(&v) {
                return bad(k, "transmissivity outside [0, 1]");
            }
        }
        for k in ["eps_i", "eps_r", "eps_SRC", "eps_arm", "eps_f"] {
            let v = self.get(k).unwrap();
            if !(0.0..1.0).contains(&v) {
                return bad(k, "loss outside [0, 1)");
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::et_lf();
        let mut seen = std::collections::HashSet::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) =
                line.split_once('=').ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            let x: f64 = v.parse().map_err(|_| Error::Config(format!("line {}: '{v}' is not a number", n + 1)))?;
            if !seen.insert(k.to_string()) {
                return Err(Error::Config(format!("line {}: duplicate key '{k}'", n + 1)));
            }
            cfg.set(k, x).map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Serialize in the same `key = value` format.
    pub fn to_text(&self) -> String {
        KEYS.iter().map(|k| format!("{k} = {:?}\n", self.get(k).unwrap())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_values_load() {
        let text = "M = 211\nI = 63\nL_SRC = 152\nL_arm = 10000.3\nDelta = 1.27e6\nT_SRM = 0.2\nT_ITM = 0.007\n\
                    phi_SRC = 0.75\nr = 1.15\neps_i = 0.04\neps_r = 0.03\neps_SRC = 1e-3\neps_arm = 45e-6\n\
                    eps_f = 20e-6\ndL_f = 1e-12 # m\n";
        let cfg = IfoConfig::parse(text).unwrap();
        assert_eq!(cfg, IfoConfig::et_lf());
    }

    #[test]
    fn unknown_key_is_error() {
        assert!(matches!(IfoConfig::parse("Mass = 3"), Err(Error::Config(_))));
        assert!(matches!(IfoConfig::parse("M = 3\nM = 4"), Err(Error::Config(_))));
        assert!(matches!(IfoConfig::parse("M = heavy"), Err(Error::Config(_))));
        assert!(matches!(IfoConfig::parse("eps_f = 1.5"), Err(Error::Config(_))));
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = IfoConfig::et_lf();
        cfg.delta = 2.0 * PI * 2_248_423.9;
        let back = IfoConfig::parse(&cfg.to_text()).unwrap();
        for k in KEYS {
            let (a, b) = (cfg.get(k).unwrap(), back.get(k).unwrap());
            assert!((a - b).abs() <= 1e-15 * a.abs(), "{k}");
        }
    }
}
