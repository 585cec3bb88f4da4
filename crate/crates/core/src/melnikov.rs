//! Melnikov layer near a saddle-centre fold: the saddle exponent of the slow
//! pendulum, its separatrix, and the splitting function
//! `M(t0) = A cos(w t0) + B`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Params;

/// Prefactors of the slow Hamiltonian `w0 I + mu^{1/2} (a0 I^2 - b0 cos phi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlowCoeffs {
    pub omega0: f64,
    pub alpha0: f64,
    pub beta0: f64,
    /// Amplitude factor of `A`; a structural constant, not calibrated.
    pub alpha_m: f64,
    /// Distance past the fold, `f - f_sc`.
    pub mu: f64,
}

impl SlowCoeffs {
    pub fn new(omega0: f64, alpha0: f64, beta0: f64, alpha_m: f64, mu: f64) -> Result<Self> {
        let c = Self { omega0, alpha0, beta0, alpha_m, mu };
        c.validate()?;
        Ok(c)
    }

    /// Unit prefactors with `alpha_m = 1`.
    pub fn unit(mu: f64) -> Result<Self> {
        Self::new(1.0, 1.0, 1.0, 1.0, mu)
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("omega0", self.omega0),
            ("alpha0", self.alpha0),
            ("beta0", self.beta0),
            ("alpha_m", self.alpha_m),
            ("mu", self.mu),
        ];
        for (name, v) in named {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!("{name} = {v} must be finite and positive")));
            }
        }
        Ok(())
    }
}

/// Leading-order saddle exponent `mu^{1/4} sqrt(4 a0 b0)`.
pub fn lambda_star(c: &SlowCoeffs) -> f64 {
    c.mu.powf(0.25) * (4.0 * c.alpha0 * c.beta0).sqrt()
}

/// Separatrix `phi(s) = pi - 2 atan(sinh(l s))`,
/// `I(s) - I_sad = -2 mu^{1/2} a0 sech(l s)` with `l = lambda_star`.
pub fn homoclinic_profile(c: &SlowCoeffs, s: f64) -> (f64, f64) {
    let l = lambda_star(c);
    let phi = PI - 2.0 * (l * s).sinh().atan();
    let d_i = -2.0 * c.mu.sqrt() * c.alpha0 / (l * s).cosh();
    (phi, d_i)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MelnikovResult {
    pub lambda_star: f64,
    pub a: f64,
    pub b: f64,
    /// `integral of sech(lambda_star s) ds = pi / lambda_star`.
    pub j0: f64,
    pub has_transverse_zeros: bool,
    /// Roots of `M` in `[0, T)`.
    pub zero_phases: Vec<f64>,
    pub omega: f64,
}

impl MelnikovResult {
    pub fn value(&self, t0: f64) -> f64 {
        self.a * (self.omega * t0).cos() + self.b
    }

    pub fn derivative(&self, t0: f64) -> f64 {
        -self.a * self.omega * (self.omega * t0).sin()
    }
}

/// `A` and `B` for a given saddle exponent.
pub fn melnikov_ab_with_lambda(p: &Params, lambda: f64, alpha_m: f64) -> MelnikovResult {
    let (w, r) = (p.omega, p.gap());
    let a = (2.0 * PI * p.forcing / r) * (w / lambda) / (PI * w / (2.0 * lambda)).sinh() * alpha_m;
    let j0 = PI / lambda;
    let b = -(2.0 * p.friction / r) * j0;
    let mut zero_phases = Vec::new();
    if a.abs() >= b.abs() && a != 0.0 {
        let theta = (-b / a).clamp(-1.0, 1.0).acos();
        let period = p.period();
        zero_phases.push(theta / w);
        let other = (2.0 * PI - theta) / w;
        if (other - theta / w).abs() > 1e-15 * period && other < period {
            zero_phases.push(other);
        }
    }
    MelnikovResult { lambda_star: lambda, a, b, j0, has_transverse_zeros: a.abs() > b.abs(), zero_phases, omega: w }
}

pub fn melnikov_ab(p: &Params, c: &SlowCoeffs) -> MelnikovResult {
    melnikov_ab_with_lambda(p, lambda_star(c), c.alpha_m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_star_plug_in_values() {
        assert_eq!(lambda_star(&SlowCoeffs::unit(1.0).unwrap()), 2.0);
        let c = SlowCoeffs::new(1.0, 0.5, 2.0, 1.0, 1e-4).unwrap();
        assert!((lambda_star(&c) - 0.2).abs() < 1e-15);
        let a = lambda_star(&SlowCoeffs::unit(0.3).unwrap());
        let b = lambda_star(&SlowCoeffs::unit(4.8).unwrap());
        assert!((b / a - 2.0).abs() < 1e-15);
    }

    #[test]
    fn profile_at_the_origin_and_limits() {
        let c = SlowCoeffs::new(1.0, 0.7, 1.3, 1.0, 0.04).unwrap();
        let (phi, di) = homoclinic_profile(&c, 0.0);
        assert_eq!(phi, PI);
        assert!((di + 2.0 * 0.2 * 0.7).abs() < 1e-15);
        assert!(homoclinic_profile(&c, 1e3).0 < 1e-10);
        assert!((homoclinic_profile(&c, -1e3).0 - 2.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn amplitude_at_unit_exponent() {
        let m = melnikov_ab_with_lambda(&Params::baseline(), 1.0, 1.0);
        assert!((m.a - PI / (PI / 2.0).sinh()).abs() < 1e-14);
        assert!((m.b + 2.0 * 0.4 * PI / 2.0).abs() < 1e-15);
        assert!(m.has_transverse_zeros);
        assert_eq!(m.zero_phases.len(), 2);
        for &t in &m.zero_phases {
            assert!(m.value(t).abs() < 1e-14);
            assert!(m.derivative(t).abs() > 0.0);
        }
    }

    #[test]
    fn no_zeros_when_offset_dominates() {
        let m = melnikov_ab_with_lambda(&Params::baseline(), 0.1, 1.0);
        assert!(m.a.abs() < m.b.abs());
        assert!(!m.has_transverse_zeros);
        assert!(m.zero_phases.is_empty());
    }

    #[test]
    fn rejects_non_positive_coefficients() {
        assert!(SlowCoeffs::new(1.0, 0.0, 1.0, 1.0, 0.1).is_err());
        assert!(SlowCoeffs::unit(-1e-3).is_err());
    }
}
