//! `N` ordered particles in the same gap, each obeying
//! `m_i x_i'' + f sgn(x_i') = F cos(wt)`, with elastic binary collisions and
//! elastic outer walls.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{classify_vzero, flight_propagate, stick_release_time, EventOptions, Params, Trichotomy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MPParams {
    pub base: Params,
    pub masses: Vec<f64>,
}

impl MPParams {
    pub fn new(base: Params, masses: Vec<f64>) -> Result<Self> {
        let mp = Self { base, masses };
        mp.validate()?;
        Ok(mp)
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.masses.is_empty() {
            return Err(Error::InvalidParams("at least one particle is required".into()));
        }
        if let Some(m) = self.masses.iter().find(|m| !(**m > 0.0 && m.is_finite())) {
            return Err(Error::InvalidParams(format!("mass {m} must be finite and positive")));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.masses.len()
    }

    /// Single-particle parameters of particle `i`: forcing and friction divided by the mass.
    pub fn particle(&self, i: usize) -> Params {
        let m = self.masses[i];
        Params { forcing: self.base.forcing / m, friction: self.base.friction / m, ..self.base }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ParticleRegime {
    Flight(i8),
    Sticking { release: f64, exit_sign: i8 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MPState {
    pub t: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub regimes: Vec<ParticleRegime>,
}

impl MPState {
    /// State at `t` with regimes derived from the velocities.
    pub fn new(mp: &MPParams, t: f64, x: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if x.len() != mp.n() || v.len() != mp.n() {
            return Err(Error::InvalidParams("state length does not match the number of particles".into()));
        }
        if x.windows(2).any(|w| w[0] > w[1]) || x.iter().any(|&xi| xi < mp.base.left || xi > mp.base.right) {
            return Err(Error::OrderingViolated { t });
        }
        let regimes = (0..mp.n()).map(|i| regime_from_velocity(mp, i, t, x[i], v[i])).collect::<Result<_>>()?;
        Ok(Self { t, x, v, regimes })
    }
}

/// Mass-weighted coordinates `xi_i = sqrt(m_i) x_i`, `eta_i = sqrt(m_i) v_i`.
pub fn mass_weighted(mp: &MPParams, st: &MPState) -> (Vec<f64>, Vec<f64>) {
    let r: Vec<f64> = mp.masses.iter().map(|m| m.sqrt()).collect();
    (
        st.x.iter().zip(&r).map(|(x, r)| r * x).collect(),
        st.v.iter().zip(&r).map(|(v, r)| r * v).collect(),
    )
}

/// Elastic collision of masses `mi`, `mj` with velocities `vi`, `vj`.
pub fn collision_map(mi: f64, mj: f64, vi: f64, vj: f64) -> (f64, f64) {
    if mi == mj {
        return (vj, vi);
    }
    let m = mi + mj;
    ((mi - mj) / m * vi + 2.0 * mj / m * vj, 2.0 * mi / m * vi + (mj - mi) / m * vj)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MPEventKind {
    WallLeft,
    WallRight,
    /// Collision of particles `i` and `i + 1`.
    Collision(usize),
    Turning(usize),
    StickOnset(usize),
    Release(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MPEvent {
    pub kind: MPEventKind,
    pub time: f64,
    pub v_before: Vec<f64>,
    pub v_after: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MPTrace {
    pub events: Vec<MPEvent>,
    pub samples: Vec<MPState>,
    pub final_state: MPState,
}

impl MPTrace {
    pub fn kinds(&self) -> Vec<MPEventKind> {
        self.events.iter().map(|e| e.kind).collect()
    }

    /// True if no particle turned or stuck.
    pub fn is_non_sticking(&self) -> bool {
        self.events.iter().all(|e| {
            matches!(e.kind, MPEventKind::WallLeft | MPEventKind::WallRight | MPEventKind::Collision(_))
        }) && self.final_state.regimes.iter().all(|r| matches!(r, ParticleRegime::Flight(_)))
    }
}

fn regime_from_velocity(mp: &MPParams, i: usize, t: f64, x: f64, v: f64) -> Result<ParticleRegime> {
    if v > 0.0 {
        return Ok(ParticleRegime::Flight(1));
    }
    if v < 0.0 {
        return Ok(ParticleRegime::Flight(-1));
    }
    let p = mp.particle(i);
    match classify_vzero(&p, t, EventOptions::default().tangent_tol) {
        Trichotomy::Transverse(s) => Ok(ParticleRegime::Flight(s)),
        _ => {
            let (release, exit_sign) = stick_release_time(&p, t)?;
            let blocked = (x >= p.right && exit_sign > 0) || (x <= p.left && exit_sign < 0);
            if blocked {
                Ok(ParticleRegime::Sticking { release: release + std::f64::consts::PI / p.omega, exit_sign: -exit_sign })
            } else {
                Ok(ParticleRegime::Sticking { release, exit_sign })
            }
        }
    }
}

/// Position and velocity of particle `i` at time `t` within the current segment.
fn particle_at(mp: &MPParams, st: &MPState, i: usize, t: f64) -> (f64, f64) {
    match st.regimes[i] {
        ParticleRegime::Flight(s) => flight_propagate(&mp.particle(i), st.t, st.x[i], st.v[i], s as f64, t),
        ParticleRegime::Sticking { .. } => (st.x[i], 0.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Candidate {
    WallLeft,
    WallRight,
    Collision(usize),
    Turning(usize),
}

/// Event function, negative before the event and crossing zero at it.
fn candidate_value(mp: &MPParams, st: &MPState, c: Candidate, t: f64) -> f64 {
    match c {
        Candidate::WallLeft => mp.base.left - particle_at(mp, st, 0, t).0,
        Candidate::WallRight => particle_at(mp, st, mp.n() - 1, t).0 - mp.base.right,
        Candidate::Collision(i) => particle_at(mp, st, i, t).0 - particle_at(mp, st, i + 1, t).0,
        Candidate::Turning(i) => match st.regimes[i] {
            ParticleRegime::Flight(s) => -(s as f64) * particle_at(mp, st, i, t).1,
            ParticleRegime::Sticking { .. } => -1.0,
        },
    }
}

/// Time derivative of [`candidate_value`].
fn candidate_rate(mp: &MPParams, st: &MPState, c: Candidate, t: f64) -> f64 {
    let vel = |i: usize| particle_at(mp, st, i, t).1;
    match c {
        Candidate::WallLeft => -vel(0),
        Candidate::WallRight => vel(mp.n() - 1),
        Candidate::Collision(i) => vel(i) - vel(i + 1),
        Candidate::Turning(i) => match st.regimes[i] {
            ParticleRegime::Flight(s) => {
                let p = mp.particle(i);
                let s = s as f64;
                -s * (p.drive(t) - s * p.friction)
            }
            ParticleRegime::Sticking { .. } => 0.0,
        },
    }
}

fn candidates(mp: &MPParams, st: &MPState) -> Vec<Candidate> {
    let n = mp.n();
    let flying = |i: usize| matches!(st.regimes[i], ParticleRegime::Flight(_));
    let mut out = Vec::with_capacity(2 * n + 1);
    if flying(0) {
        out.push(Candidate::WallLeft);
    }
    for i in 0..n.saturating_sub(1) {
        if flying(i) || flying(i + 1) {
            out.push(Candidate::Collision(i));
        }
    }
    if flying(n - 1) {
        out.push(Candidate::WallRight);
    }
    for i in 0..n {
        if flying(i) {
            out.push(Candidate::Turning(i));
        }
    }
    out
}

fn bisect(mp: &MPParams, st: &MPState, c: Candidate, mut a: f64, mut b: f64, opts: &EventOptions) -> f64 {
    for _ in 0..opts.max_bisect {
        if b - a <= opts.t_bisect_tol {
            break;
        }
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if candidate_value(mp, st, c, m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    let mut t = b;
    let mut g = candidate_value(mp, st, c, t);
    for _ in 0..3 {
        let dg = candidate_rate(mp, st, c, t);
        if dg == 0.0 || g == 0.0 {
            break;
        }
        let tn = t - g / dg;
        if !(tn >= a - opts.t_bisect_tol && tn <= b + opts.t_bisect_tol) {
            break;
        }
        let gn = candidate_value(mp, st, c, tn);
        if gn.abs() >= g.abs() {
            break;
        }
        t = tn;
        g = gn;
    }
    t
}

/// Earliest event in `(st.t, t_limit]`, if any.
fn next_event(mp: &MPParams, st: &MPState, t_limit: f64, opts: &EventOptions) -> Option<(Candidate, f64)> {
    let cands = candidates(mp, st);
    let h = mp.base.period() / opts.scan_divisions as f64;
    let mut ta = st.t;
    let mut ga: Vec<f64> = cands.iter().map(|&c| candidate_value(mp, st, c, ta)).collect();
    while ta < t_limit {
        let tb = (ta + h).min(t_limit);
        let gb: Vec<f64> = cands.iter().map(|&c| candidate_value(mp, st, c, tb)).collect();
        let mut best: Option<(Candidate, f64)> = None;
        for (k, &c) in cands.iter().enumerate() {
            if ga[k] < 0.0 && gb[k] >= 0.0 {
                let root = bisect(mp, st, c, ta, tb, opts);
                if best.is_none_or(|(_, t)| root < t - opts.t_bisect_tol) {
                    best = Some((c, root));
                }
            }
        }
        if best.is_some() {
            return best;
        }
        ta = tb;
        ga = gb;
    }
    None
}

fn advance(mp: &MPParams, st: &MPState, t: f64) -> MPState {
    let mut x = Vec::with_capacity(mp.n());
    let mut v = Vec::with_capacity(mp.n());
    for i in 0..mp.n() {
        let (xi, vi) = particle_at(mp, st, i, t);
        x.push(xi.clamp(mp.base.left, mp.base.right));
        v.push(vi);
    }
    MPState { t, x, v, regimes: st.regimes.clone() }
}

fn apply(mp: &MPParams, st: &mut MPState, c: Candidate) -> Result<MPEventKind> {
    let t = st.t;
    let kind = match c {
        Candidate::WallLeft => {
            st.x[0] = mp.base.left;
            st.v[0] = -st.v[0];
            st.regimes[0] = regime_from_velocity(mp, 0, t, st.x[0], st.v[0])?;
            MPEventKind::WallLeft
        }
        Candidate::WallRight => {
            let i = mp.n() - 1;
            st.x[i] = mp.base.right;
            st.v[i] = -st.v[i];
            st.regimes[i] = regime_from_velocity(mp, i, t, st.x[i], st.v[i])?;
            MPEventKind::WallRight
        }
        Candidate::Collision(i) => {
            let xc = 0.5 * (st.x[i] + st.x[i + 1]);
            st.x[i] = xc;
            st.x[i + 1] = xc;
            let (a, b) = collision_map(mp.masses[i], mp.masses[i + 1], st.v[i], st.v[i + 1]);
            st.v[i] = a;
            st.v[i + 1] = b;
            st.regimes[i] = regime_from_velocity(mp, i, t, st.x[i], a)?;
            st.regimes[i + 1] = regime_from_velocity(mp, i + 1, t, st.x[i + 1], b)?;
            MPEventKind::Collision(i)
        }
        Candidate::Turning(i) => {
            st.v[i] = 0.0;
            st.regimes[i] = regime_from_velocity(mp, i, t, st.x[i], 0.0)?;
            if matches!(st.regimes[i], ParticleRegime::Sticking { .. }) {
                MPEventKind::StickOnset(i)
            } else {
                MPEventKind::Turning(i)
            }
        }
    };
    if st.x.windows(2).any(|w| w[0] > w[1] + 1e-9) {
        return Err(Error::OrderingViolated { t });
    }
    for k in 0..st.x.len().saturating_sub(1) {
        if st.x[k] > st.x[k + 1] {
            let m = 0.5 * (st.x[k] + st.x[k + 1]);
            st.x[k] = m;
            st.x[k + 1] = m;
        }
    }
    Ok(kind)
}

/// Event-driven integration over `[z0.t, z0.t + t_span]`, sampling every
/// `sample_dt` when positive.
pub fn mp_simulate(mp: &MPParams, z0: &MPState, t_span: f64, sample_dt: f64) -> Result<MPTrace> {
    mp.validate()?;
    let opts = EventOptions::default();
    let t_end = z0.t + t_span;
    let mut st = z0.clone();
    let mut events = Vec::new();
    let mut samples = Vec::new();
    let mut next_sample = z0.t;
    let push_samples = |st: &MPState, upto: f64, samples: &mut Vec<MPState>, next_sample: &mut f64| {
        if sample_dt <= 0.0 {
            return;
        }
        while *next_sample <= upto + 1e-15 && *next_sample <= t_end {
            samples.push(advance(mp, st, *next_sample));
            *next_sample += sample_dt;
        }
    };
    loop {
        if events.len() >= opts.max_events {
            return Err(Error::EventBudgetExceeded { limit: opts.max_events, t: st.t });
        }
        let release = st
            .regimes
            .iter()
            .enumerate()
            .filter_map(|(i, r)| match r {
                ParticleRegime::Sticking { release, .. } => Some((i, *release)),
                _ => None,
            })
            .min_by(|a, b| a.1.total_cmp(&b.1));
        let t_limit = release.map_or(t_end, |(_, t)| t.min(t_end));
        match next_event(mp, &st, t_limit, &opts) {
            Some((c, te)) => {
                push_samples(&st, te, &mut samples, &mut next_sample);
                let v_before = particle_velocities(mp, &st, te);
                st = advance(mp, &st, te);
                let kind = apply(mp, &mut st, c)?;
                events.push(MPEvent { kind, time: te, v_before, v_after: st.v.clone() });
            }
            None => {
                push_samples(&st, t_limit, &mut samples, &mut next_sample);
                st = advance(mp, &st, t_limit);
                match release {
                    Some((i, tr)) if tr <= t_end => {
                        let v_before = st.v.clone();
                        let ParticleRegime::Sticking { exit_sign, .. } = st.regimes[i] else { unreachable!() };
                        st.regimes[i] = ParticleRegime::Flight(exit_sign);
                        events.push(MPEvent { kind: MPEventKind::Release(i), time: tr, v_before, v_after: st.v.clone() });
                    }
                    _ => break,
                }
            }
        }
    }
    Ok(MPTrace { events, samples, final_state: st })
}

fn particle_velocities(mp: &MPParams, st: &MPState, t: f64) -> Vec<f64> {
    (0..mp.n()).map(|i| particle_at(mp, st, i, t).1).collect()
}

/// Flattened `(x_1..x_N, v_1..v_N)`.
pub fn flatten(st: &MPState) -> Vec<f64> {
    st.x.iter().chain(&st.v).copied().collect()
}

/// Stroboscopic map over one period from `t = 0`.
pub fn mp_strobo_map(mp: &MPParams, z: &[f64]) -> Result<(Vec<f64>, MPTrace)> {
    let n = mp.n();
    let st = MPState::new(mp, 0.0, z[..n].to_vec(), z[n..].to_vec())?;
    let tr = mp_simulate(mp, &st, mp.base.period(), 0.0)?;
    Ok((flatten(&tr.final_state), tr))
}

/// First collision that changes the sign of a particle velocity, if any.
pub fn sign_preserving_check(trace: &MPTrace) -> (bool, Option<MPEvent>) {
    for e in &trace.events {
        if let MPEventKind::Collision(i) = e.kind {
            let flipped = (i..=i + 1).any(|k| e.v_before[k].signum() != e.v_after[k].signum());
            if flipped {
                return (false, Some(e.clone()));
            }
        }
    }
    (true, None)
}

/// Product of the turning factors `(|a| - f) / (|a| + f)` over all turnings in
/// the trace, where `a = F cos(wt)` at the turning time.
pub fn turning_factor_product(mp: &MPParams, trace: &MPTrace) -> f64 {
    trace
        .events
        .iter()
        .filter(|e| matches!(e.kind, MPEventKind::Turning(_)))
        .map(|e| {
            let a = mp.base.drive(e.time).abs();
            (a - mp.base.friction) / (a + mp.base.friction)
        })
        .product()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MPJacobianReport {
    pub jacobian: Vec<Vec<f64>>,
    pub det: f64,
    pub sign_preserving: bool,
    pub non_sticking: bool,
    /// Determinant predicted from the event factors along the orbit: the
    /// turning-factor product, or zero when a particle sticks.
    pub predicted_det: f64,
}

/// Central-difference step of the `2N`-dimensional Jacobian.
pub const MP_FD_STEP: f64 = 1e-6;

/// Richardson-extrapolated central-difference Jacobian of the `2N`-dimensional
/// stroboscopic map with the itinerary held fixed across the stencil (the step is reduced tenfold
/// down to `1e-8` before giving up).
pub fn mp_strobo_jacobian(mp: &MPParams, z0: &[f64]) -> Result<MPJacobianReport> {
    let dim = 2 * mp.n();
    let (_, base) = mp_strobo_map(mp, z0)?;
    let kinds = base.kinds();
    let mut h = MP_FD_STEP;
    let jac = loop {
        match mp_fd(mp, z0, h, &kinds).and_then(|coarse| Ok((coarse, mp_fd(mp, z0, 0.5 * h, &kinds)?))) {
            Ok((coarse, fine)) => {
                break coarse
                    .iter()
                    .zip(&fine)
                    .map(|(rc, rf)| rc.iter().zip(rf).map(|(c, f)| (4.0 * f - c) / 3.0).collect())
                    .collect::<Vec<Vec<f64>>>()
            }
            Err(Error::ItineraryMismatch { .. }) if h > 1e-8 => h *= 0.1,
            Err(e) => return Err(e),
        }
    };
    let m = DMatrix::from_fn(dim, dim, |i, j| jac[i][j]);
    Ok(MPJacobianReport {
        det: m.determinant(),
        jacobian: jac,
        sign_preserving: sign_preserving_check(&base).0,
        non_sticking: base.is_non_sticking(),
        predicted_det: if sticks(&base) { 0.0 } else { turning_factor_product(mp, &base) },
    })
}

fn sticks(trace: &MPTrace) -> bool {
    trace.events.iter().any(|e| matches!(e.kind, MPEventKind::StickOnset(_)))
        || trace.final_state.regimes.iter().any(|r| matches!(r, ParticleRegime::Sticking { .. }))
}

fn mp_fd(mp: &MPParams, z0: &[f64], h: f64, kinds: &[MPEventKind]) -> Result<Vec<Vec<f64>>> {
    let dim = z0.len();
    let mut jac = vec![vec![0.0; dim]; dim];
    for j in 0..dim {
        let mut zp = z0.to_vec();
        let mut zm = z0.to_vec();
        zp[j] += h;
        zm[j] -= h;
        let (fp, tp) = mp_strobo_map(mp, &zp)?;
        let (fm, tm) = mp_strobo_map(mp, &zm)?;
        if tp.kinds() != kinds || tm.kinds() != kinds {
            return Err(Error::ItineraryMismatch { h });
        }
        for i in 0..dim {
            jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_masses_swap() {
        assert_eq!(collision_map(1.0, 1.0, 0.3, -0.7), (-0.7, 0.3));
    }

    #[test]
    fn collision_is_an_involution() {
        let (a, b) = collision_map(1.0, 0.9, 1.0, -1.0);
        let (c, d) = collision_map(1.0, 0.9, a, b);
        assert!((c - 1.0).abs() < 1e-14 && (d + 1.0).abs() < 1e-14);
    }

    #[test]
    fn heavy_particle_pushes_light_one_forward() {
        let (a, b) = collision_map(100.0, 1.0, 1.0, 0.01);
        assert!(a > 0.0 && (b - 2.0 * 100.0 / 101.0 + 0.01 * 99.0 / 101.0).abs() < 1e-14 && b > 1.9);
    }

    #[test]
    fn rejects_unordered_state() {
        let mp = MPParams::new(Params::baseline(), vec![1.0, 1.0]).unwrap();
        assert!(matches!(MPState::new(&mp, 0.0, vec![0.2, 0.1], vec![0.5, 0.5]), Err(Error::OrderingViolated { .. })));
    }
}
