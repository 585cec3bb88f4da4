//! The time-`T` stroboscopic map, its Jacobian by finite differences and by
//! saltation products, orbit classification and the triangular-wave lift.

use std::f64::consts::PI;
use std::ops::Mul;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{simulate_from, Dynamics, EventKind, EventOptions, OrbitTrace, Params, Regime, State};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jacobian2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Jacobian2 {
    pub const IDENTITY: Self = Self { a11: 1.0, a12: 0.0, a21: 0.0, a22: 1.0 };

    pub fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Self { a11, a12, a21, a22 }
    }

    pub fn from_rows(m: [[f64; 2]; 2]) -> Self {
        Self::new(m[0][0], m[0][1], m[1][0], m[1][1])
    }

    pub fn rows(&self) -> [[f64; 2]; 2] {
        [[self.a11, self.a12], [self.a21, self.a22]]
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn apply(&self, w: [f64; 2]) -> [f64; 2] {
        [self.a11 * w[0] + self.a12 * w[1], self.a21 * w[0] + self.a22 * w[1]]
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(Self::new(self.a22 / d, -self.a12 / d, -self.a21 / d, self.a11 / d))
    }

    pub fn sub_identity(&self) -> Self {
        Self::new(self.a11 - 1.0, self.a12, self.a21, self.a22 - 1.0)
    }

    /// Eigenvalues as `(re, im)` pairs.
    pub fn eigenvalues(&self) -> [(f64, f64); 2] {
        let tr = self.trace();
        let disc = 0.25 * tr * tr - self.det();
        if disc >= 0.0 {
            let r = disc.sqrt();
            [(0.5 * tr + r, 0.0), (0.5 * tr - r, 0.0)]
        } else {
            let i = (-disc).sqrt();
            [(0.5 * tr, i), (0.5 * tr, -i)]
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        [
            self.a11 - other.a11,
            self.a12 - other.a12,
            self.a21 - other.a21,
            self.a22 - other.a22,
        ]
        .iter()
        .fold(0.0, |m, d| m.max(d.abs()))
    }
}

impl Mul for Jacobian2 {
    type Output = Jacobian2;

    fn mul(self, b: Jacobian2) -> Jacobian2 {
        Jacobian2::new(
            self.a11 * b.a11 + self.a12 * b.a21,
            self.a11 * b.a12 + self.a12 * b.a22,
            self.a21 * b.a11 + self.a22 * b.a21,
            self.a21 * b.a12 + self.a22 * b.a22,
        )
    }
}

/// Integrates one forcing period from `z` at phase zero.
pub fn period_trace<D: Dynamics + ?Sized>(d: &D, z: (f64, f64), opts: &EventOptions) -> Result<OrbitTrace> {
    let t = d.params().period();
    simulate_from(d, State::new(0.0, z.0, z.1), t, None, opts)
}

/// `Phi(z)`: the state at `t = T` of the trajectory starting at `z` at `t = 0`.
pub fn strobo_map(p: &Params, z: (f64, f64)) -> Result<(f64, f64)> {
    strobo_map_with(p, z, &EventOptions::default())
}

pub fn strobo_map_with<D: Dynamics + ?Sized>(d: &D, z: (f64, f64), opts: &EventOptions) -> Result<(f64, f64)> {
    let tr = period_trace(d, z, opts)?;
    Ok((tr.final_state.x, tr.final_state.v))
}

/// `n` iterates of the stroboscopic map, including `z` itself.
pub fn strobo_orbit(p: &Params, z: (f64, f64), n: usize) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(n + 1);
    let mut cur = z;
    out.push(cur);
    for _ in 0..n {
        cur = strobo_map(p, cur)?;
        out.push(cur);
    }
    Ok(out)
}

/// The half-period map `sigma(x, v)`: the flow over `[T/2, T]` started at
/// `(-x, -v)`. With symmetric walls it squares to the stroboscopic map.
pub fn sigma(p: &Params, z: (f64, f64)) -> Result<(f64, f64)> {
    let t = p.period();
    let tr = simulate_from(p, State::new(0.5 * t, -z.0, -z.1), t, None, &EventOptions::default())?;
    Ok((tr.final_state.x, tr.final_state.v))
}

/// Central-difference Jacobian of `Phi` together with the itinerary all five
/// stencil points share.
pub fn jacobian_fd(p: &Params, z: (f64, f64), h: f64) -> Result<Jacobian2> {
    jacobian_fd_with(p, z, h, &EventOptions::default()).map(|(j, _)| j)
}

/// As [`jacobian_fd`] for any dynamics. On an itinerary mismatch the step is
/// halved down to `1e-8` before giving up.
pub fn jacobian_fd_with<D: Dynamics + ?Sized>(
    d: &D,
    z: (f64, f64),
    h: f64,
    opts: &EventOptions,
) -> Result<(Jacobian2, Vec<EventKind>)> {
    let center = period_trace(d, z, opts)?;
    let itin = center.itinerary();
    let mut h = h;
    loop {
        match fd_stencil(d, z, h, &itin, opts)? {
            Some(j) => return Ok((j, itin)),
            None if h * 0.5 >= 1e-8 * (1.0 - 1e-12) => h *= 0.5,
            None => return Err(Error::ItineraryMismatch { h }),
        }
    }
}

fn fd_stencil<D: Dynamics + ?Sized>(
    d: &D,
    z: (f64, f64),
    h: f64,
    itin: &[EventKind],
    opts: &EventOptions,
) -> Result<Option<Jacobian2>> {
    let offsets = [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)];
    let mut img = [(0.0, 0.0); 4];
    for (k, (dx, dv)) in offsets.iter().enumerate() {
        let tr = period_trace(d, (z.0 + dx, z.1 + dv), opts)?;
        if tr.itinerary() != itin {
            return Ok(None);
        }
        img[k] = (tr.final_state.x, tr.final_state.v);
    }
    let s = 0.5 / h;
    Ok(Some(Jacobian2::new(
        (img[0].0 - img[1].0) * s,
        (img[2].0 - img[3].0) * s,
        (img[0].1 - img[1].1) * s,
        (img[2].1 - img[3].1) * s,
    )))
}

/// One factor of the saltation product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventFactor {
    pub kind: EventKind,
    pub time: f64,
    pub matrix: Jacobian2,
    pub det: f64,
}

/// Saltation matrix at a wall: `[[-e, 0], [alpha, -e]]` with
/// `alpha = ((1 + e) F cos(wt) + (1 - e) s f) / v_minus`, `s = sgn(v_minus)`.
pub fn wall_saltation(p: &Params, t: f64, v_minus: f64, restitution: f64) -> Jacobian2 {
    let e = restitution;
    let s = v_minus.signum();
    let alpha = ((1.0 + e) * p.drive(t) + (1.0 - e) * s * p.friction) / v_minus;
    Jacobian2::new(-e, 0.0, alpha, -e)
}

/// Saltation matrix at a transverse turning point.
pub fn turning_saltation(p: &Params, t: f64) -> Jacobian2 {
    let a = p.drive(t).abs();
    Jacobian2::new(1.0, 0.0, 0.0, (a - p.friction) / (a + p.friction))
}

/// `Phi'(z)` as an ordered product of flight and event factors.
pub fn jacobian_saltation(p: &Params, z: (f64, f64)) -> Result<(Jacobian2, Vec<EventFactor>)> {
    jacobian_saltation_with(p, z, &EventOptions::default())
}

pub fn jacobian_saltation_with<D: Dynamics + ?Sized>(
    d: &D,
    z: (f64, f64),
    opts: &EventOptions,
) -> Result<(Jacobian2, Vec<EventFactor>)> {
    let tr = period_trace(d, z, opts)?;
    saltation_product(d, &tr)
}

/// Saltation product along an already computed trace.
pub fn saltation_product<D: Dynamics + ?Sized>(d: &D, tr: &OrbitTrace) -> Result<(Jacobian2, Vec<EventFactor>)> {
    let p = d.params();
    if let Some(iv) = tr.regime_intervals.iter().find(|iv| iv.2 == Regime::Sticking) {
        return Err(Error::StickingOnPath { t: iv.0 });
    }
    let mut j = Jacobian2::IDENTITY;
    let mut factors = Vec::with_capacity(tr.events.len());
    let mut t_prev = tr.regime_intervals.first().map(|iv| iv.0).unwrap_or(0.0);
    for ev in &tr.events {
        let m = match ev.kind {
            EventKind::WallHitRight | EventKind::WallHitLeft => wall_saltation(p, ev.time, ev.before.v, d.restitution()),
            EventKind::TurningTransverse => turning_saltation(p, ev.time),
            _ => return Err(Error::StickingOnPath { t: ev.time }),
        };
        j = m * (Jacobian2::from_rows(d.flight_variational(ev.time - t_prev)) * j);
        factors.push(EventFactor { kind: ev.kind, time: ev.time, matrix: m, det: m.det() });
        t_prev = ev.time;
    }
    j = Jacobian2::from_rows(d.flight_variational(tr.final_state.t - t_prev)) * j;
    Ok((j, factors))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrbitKind {
    NonSticking,
    Turning,
    Sticking,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitClass {
    pub kind: OrbitKind,
    pub wall_hits_right: usize,
    pub wall_hits_left: usize,
    pub turnings: usize,
    pub stick_intervals: usize,
}

impl OrbitClass {
    pub fn from_trace(tr: &OrbitTrace) -> Self {
        let turnings = tr.count(EventKind::TurningTransverse);
        let stick_intervals = tr.regime_intervals.iter().filter(|iv| iv.2 == Regime::Sticking).count();
        let kind = if stick_intervals > 0 {
            OrbitKind::Sticking
        } else if turnings > 0 {
            OrbitKind::Turning
        } else {
            OrbitKind::NonSticking
        };
        Self {
            kind,
            wall_hits_right: tr.count(EventKind::WallHitRight),
            wall_hits_left: tr.count(EventKind::WallHitLeft),
            turnings,
            stick_intervals,
        }
    }
}

/// Classifies the trajectory from `z` over `n_periods` forcing periods.
pub fn classify_orbit(p: &Params, z: (f64, f64), n_periods: usize) -> Result<OrbitClass> {
    let t = p.period() * n_periods.max(1) as f64;
    let tr = simulate_from(p, State::new(0.0, z.0, z.1), t, None, &EventOptions::default())?;
    Ok(OrbitClass::from_trace(&tr))
}

/// `theta* = arccos(tr / 2)` and `theta* / 2 pi`.
pub fn rotation_number(j: &Jacobian2) -> Result<(f64, f64)> {
    let tr = j.trace();
    if !(tr.abs() < 2.0) {
        return Err(Error::NotElliptic { trace: tr });
    }
    let theta = (0.5 * tr).acos();
    Ok((theta, theta / (2.0 * PI)))
}

/// Period-2 triangular wave: `q` on `[0, 1)`, `2 - q` on `[1, 2)`.
pub fn triangular_wave(q: f64) -> f64 {
    let m = q.rem_euclid(2.0);
    if m < 1.0 {
        m
    } else {
        2.0 - m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiftSample {
    pub t: f64,
    pub q: f64,
    pub p_lift: f64,
    pub residual: f64,
}

/// Lifted coordinates along a non-sticking trace: on each flight `q` is the
/// affine preimage of `x` on the branch of `W` the particle is travelling on,
/// and the branch index advances by one at every wall hit.
pub fn lift(tr: &OrbitTrace, p: &Params) -> Result<Vec<LiftSample>> {
    if !tr.is_non_sticking() {
        return Err(Error::NotNonSticking);
    }
    let r = p.gap();
    let mut out = Vec::with_capacity(tr.samples.len());
    let mut ev = tr.events.iter().peekable();
    let first_v = tr.samples.first().map(|s| s.v).unwrap_or(0.0);
    let mut branch: i64 = if first_v >= 0.0 { 0 } else { 1 };
    for s in &tr.samples {
        while let Some(e) = ev.peek() {
            if e.time <= s.t {
                branch += 1;
                ev.next();
            } else {
                break;
            }
        }
        let u = (s.x - p.left) / r;
        let q = if branch.rem_euclid(2) == 0 { branch as f64 + u } else { branch as f64 + 1.0 - u };
        let residual = (r * triangular_wave(q) + p.left - s.x).abs();
        out.push(LiftSample { t: s.t, q, p_lift: s.v.abs() / r, residual });
    }
    Ok(out)
}

/// Maximum projection residual `|R W(q) + l - x|` and strict monotonicity of `q`.
pub fn lift_check(tr: &OrbitTrace, p: &Params) -> Result<(f64, bool)> {
    let samples = lift(tr, p)?;
    let max_res = samples.iter().fold(0.0f64, |m, s| m.max(s.residual));
    let monotone = samples.windows(2).all(|w| w[1].q > w[0].q);
    Ok((max_res, monotone))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangular_wave_values() {
        assert_eq!(triangular_wave(0.5), 0.5);
        assert_eq!(triangular_wave(1.5), 0.5);
        assert_eq!(triangular_wave(2.5), 0.5);
        assert_eq!(triangular_wave(-0.25), 0.25);
    }

    #[test]
    fn rotation_number_edges() {
        let j = Jacobian2::new(0.0, 1.0, -1.0, 0.0);
        assert!((rotation_number(&j).unwrap().0 - PI / 2.0).abs() < 1e-15);
        let j = Jacobian2::new(1.0, 1.0, 0.0, 1.0);
        assert!(matches!(rotation_number(&j), Err(Error::NotElliptic { .. })));
    }

    #[test]
    fn turning_factor_value() {
        let p = Params::baseline();
        let m = turning_saltation(&p, 0.9f64.acos());
        assert!((m.det() - 0.5 / 1.3).abs() < 1e-14);
    }

    #[test]
    fn wall_factor_is_unimodular() {
        let p = Params::baseline();
        for &(t, v) in &[(0.3, 0.7), (2.0, -1.1), (4.0, 0.05)] {
            assert!((wall_saltation(&p, t, v, 1.0).det() - 1.0).abs() < 1e-15);
        }
    }
}
