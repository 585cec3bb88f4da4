//! Viscous and inelastic perturbation of the oscillator:
//! `x'' + mu_v x' + f sgn(x') = F cos(wt)` with walls `v -> -e v`, `e = 1 - eps`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{flight_propagate, Dynamics, EventKind, EventOptions, Params};
use crate::orbits::{newton_fixed_point_with, NewtonOptions};
use crate::strobomap::{period_trace, saltation_product, strobo_map_with, wall_saltation, Jacobian2};

/// Below this value of `mu_v * dt` the second flight integral uses its series.
const SERIES_CUTOFF: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbedParams {
    pub base: Params,
    /// Restitution defect `eps = 1 - e`.
    pub epsilon: f64,
    /// Viscous coefficient.
    pub mu_v: f64,
}

impl PerturbedParams {
    pub fn new(base: Params, epsilon: f64, mu_v: f64) -> Result<Self> {
        let pp = Self { base, epsilon, mu_v };
        pp.validate()?;
        Ok(pp)
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(Error::InvalidParams(format!("epsilon = {} must lie in [0, 1)", self.epsilon)));
        }
        if !(self.mu_v >= 0.0 && self.mu_v.is_finite()) {
            return Err(Error::InvalidParams(format!("mu_v = {} must be finite and non-negative", self.mu_v)));
        }
        Ok(())
    }

    pub fn restitution_coeff(&self) -> f64 {
        1.0 - self.epsilon
    }
}

/// `phi1 = (1 - e^{-mu dt}) / mu` and `phi2 = (dt - phi1) / mu`, both finite at `mu = 0`.
fn flight_integrals(mu: f64, dt: f64) -> (f64, f64) {
    let z = mu * dt;
    if z.abs() < SERIES_CUTOFF {
        let mut phi1 = 0.0;
        let mut phi2 = 0.0;
        let mut term = dt;
        for k in 1..=18 {
            phi1 += term;
            let t2 = term * dt / (k + 1) as f64;
            phi2 += t2;
            term *= -z / (k + 1) as f64;
        }
        (phi1, phi2)
    } else {
        let phi1 = -(-z).exp_m1() / mu;
        (phi1, (dt - phi1) / mu)
    }
}

/// Closed-form damped flight from `(t0, x0, v0)` with friction sign `s`.
pub fn viscous_flight(pp: &PerturbedParams, t0: f64, x0: f64, v0: f64, s: f64, t: f64) -> (f64, f64) {
    let p = &pp.base;
    let mu = pp.mu_v;
    if mu == 0.0 {
        return flight_propagate(p, t0, x0, v0, s, t);
    }
    let (w, big_f, f) = (p.omega, p.forcing, p.friction);
    let dt = t - t0;
    let decay = (-mu * dt).exp();
    let (phi1, phi2) = flight_integrals(mu, dt);
    let den = mu * mu + w * w;
    let (s0, c0) = (w * t0).sin_cos();
    let (s1, c1) = (w * t).sin_cos();
    let k0 = mu * c0 + w * s0;
    let k1 = mu * c1 + w * s1;
    let v = decay * v0 + big_f * (k1 - decay * k0) / den - s * f * phi1;
    let x = x0 + phi1 * v0 + big_f * ((mu / w) * (s1 - s0) - (c1 - c0) - k0 * phi1) / den - s * f * phi2;
    (x, v)
}

/// Fundamental matrix of the damped flight over `dt`.
pub fn viscous_variational(mu: f64, dt: f64) -> [[f64; 2]; 2] {
    let (phi1, _) = flight_integrals(mu, dt);
    [[1.0, phi1], [0.0, (-mu * dt).exp()]]
}

impl Dynamics for PerturbedParams {
    fn params(&self) -> &Params {
        &self.base
    }

    fn flight(&self, t0: f64, x0: f64, v0: f64, s: f64, t: f64) -> (f64, f64) {
        viscous_flight(self, t0, x0, v0, s, t)
    }

    fn accel(&self, t: f64, v: f64, s: f64) -> f64 {
        self.base.drive(t) - self.mu_v * v - s * self.base.friction
    }

    fn restitution(&self) -> f64 {
        self.restitution_coeff()
    }

    fn flight_variational(&self, dt: f64) -> [[f64; 2]; 2] {
        viscous_variational(self.mu_v, dt)
    }
}

/// Wall saltation with restitution `e = 1 - eps`; its determinant is `e^2`.
pub fn inelastic_saltation(t: f64, v_minus: f64, pp: &PerturbedParams) -> Jacobian2 {
    wall_saltation(&pp.base, t, v_minus, pp.restitution_coeff())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rho {
    /// First-order law `1 - 2 n eps - mu_v T`.
    pub leading: f64,
    /// Exact product `e^{-mu_v T} (1 - eps)^{2n}`.
    pub exact: f64,
}

pub fn rho(pp: &PerturbedParams, n_star: usize, period: f64) -> Rho {
    let n = n_star as f64;
    Rho {
        leading: 1.0 - 2.0 * n * pp.epsilon - pp.mu_v * period,
        exact: (-pp.mu_v * period).exp() * (1.0 - pp.epsilon).powi(2 * n_star as i32),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersistenceReport {
    pub z: (f64, f64),
    pub n_star: usize,
    pub rho_predicted: Rho,
    pub det_measured: f64,
    pub trace: f64,
    pub eigenvalue_moduli: (f64, f64),
    pub jacobian: Jacobian2,
}

/// Newton-continues the fixed point near `seed` into the perturbed system and
/// measures the spectrum of the saltation-product Jacobian.
pub fn perturbed_spectrum(pp: &PerturbedParams, seed: (f64, f64), opts: &NewtonOptions) -> Result<PersistenceReport> {
    pp.validate()?;
    let fp = newton_fixed_point_with(pp, seed, opts)?;
    let ev = EventOptions::default();
    let trace = period_trace(pp, fp.z, &ev)?;
    let (j, _) = saltation_product(pp, &trace)?;
    let n_star = trace.events.iter().filter(|e| e.kind.is_wall()).count();
    let [(r1, i1), (r2, i2)] = j.eigenvalues();
    if i1 == 0.0 && i2 == 0.0 {
        return Err(Error::EigenvaluesReal((r1, r2)));
    }
    debug_assert!(trace.events.iter().all(|e| matches!(e.kind, EventKind::WallHitLeft | EventKind::WallHitRight | EventKind::TurningTransverse)));
    Ok(PersistenceReport {
        z: fp.z,
        n_star,
        rho_predicted: rho(pp, n_star, pp.base.period()),
        det_measured: j.det(),
        trace: j.trace(),
        eigenvalue_moduli: (r1.hypot(i1), r2.hypot(i2)),
        jacobian: j,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasinReport {
    pub samples: usize,
    pub converged: usize,
    pub max_final_distance: f64,
}

/// Iterates `samples` random points within `radius` of `z_star` and reports
/// how many end within `tol` of it after `iterations` periods.
pub fn basin_check(
    pp: &PerturbedParams,
    z_star: (f64, f64),
    samples: usize,
    radius: f64,
    iterations: usize,
    tol: f64,
    seed: u64,
) -> Result<BasinReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ev = EventOptions::default();
    let mut converged = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let r = radius * rng.gen::<f64>().sqrt();
        let a = rng.gen::<f64>() * std::f64::consts::TAU;
        let mut z = (
            (z_star.0 + r * a.cos()).clamp(pp.base.left, pp.base.right),
            z_star.1 + r * a.sin(),
        );
        for _ in 0..iterations {
            z = strobo_map_with(pp, z, &ev)?;
        }
        let d = (z.0 - z_star.0).hypot(z.1 - z_star.1);
        worst = worst.max(d);
        if d < tol {
            converged += 1;
        }
    }
    Ok(BasinReport { samples, converged, max_final_distance: worst })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> Params {
        Params::baseline()
    }

    #[test]
    fn zero_viscosity_is_bit_exact() {
        let pp = PerturbedParams::new(base(), 0.0, 0.0).unwrap();
        let a = viscous_flight(&pp, 0.3, 0.1, 0.5, 1.0, 1.7);
        let b = flight_propagate(&pp.base, 0.3, 0.1, 0.5, 1.0, 1.7);
        assert_eq!(a, b);
    }

    #[test]
    fn small_viscosity_approaches_conservative_flight() {
        let pp = PerturbedParams::new(base(), 0.0, 1e-12).unwrap();
        let a = viscous_flight(&pp, 0.3, 0.1, 0.5, -1.0, 1.7);
        let b = flight_propagate(&pp.base, 0.3, 0.1, 0.5, -1.0, 1.7);
        assert!((a.0 - b.0).abs() < 1e-11 && (a.1 - b.1).abs() < 1e-11);
    }

    #[test]
    fn series_and_closed_form_integrals_agree_at_cutoff() {
        let dt = 1.3;
        let mu = SERIES_CUTOFF / dt;
        let (a1, a2) = flight_integrals(mu * (1.0 - 1e-9), dt);
        let (b1, b2) = flight_integrals(mu * (1.0 + 1e-9), dt);
        assert!((a1 - b1).abs() < 1e-9 && (a2 - b2).abs() < 1e-9);
    }

    #[test]
    fn variational_determinant_is_exponential() {
        let m = viscous_variational(0.3, 2.0);
        assert!((m[0][0] * m[1][1] - m[0][1] * m[1][0] - (-0.6f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn inelastic_saltation_determinant() {
        let pp = PerturbedParams::new(base(), 0.1, 0.0).unwrap();
        let m = inelastic_saltation(1.1, 0.7, &pp);
        assert!((m.det() - 0.81).abs() < 1e-15);
        let elastic = PerturbedParams::new(base(), 0.0, 0.0).unwrap();
        assert_eq!(inelastic_saltation(1.1, 0.7, &elastic), wall_saltation(&base(), 1.1, 0.7, 1.0));
    }

    #[test]
    fn rho_values() {
        let t = base().period();
        let r0 = rho(&PerturbedParams::new(base(), 0.0, 0.0).unwrap(), 2, t);
        assert_eq!((r0.leading, r0.exact), (1.0, 1.0));
        let r = rho(&PerturbedParams::new(base(), 1e-4, 1e-4).unwrap(), 2, t);
        assert!((r.leading - (1.0 - 4e-4 - t * 1e-4)).abs() < 1e-15);
        assert!((r.exact - (-1e-4 * t).exp() * (1.0f64 - 1e-4).powi(4)).abs() < 1e-15);
    }

    #[test]
    fn rejects_invalid_perturbations() {
        assert!(PerturbedParams::new(base(), 1.0, 0.0).is_err());
        assert!(PerturbedParams::new(base(), 0.0, -1e-3).is_err());
    }
}
