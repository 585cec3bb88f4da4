//! Periodic orbits of the stroboscopic map: damped Newton, grid surveys,
//! natural continuation with fold refinement, the closed-form symmetric branch
//! and the `(f, R)` existence map.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dynamics, EventOptions, Params};
use crate::strobomap::{
    classify_orbit, jacobian_fd_with, period_trace, rotation_number, strobo_map_with, Jacobian2, OrbitClass,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    Elliptic,
    Saddle,
    StableFocus,
    UnstableFocus,
    Degenerate,
}

/// Stability label from `(tr, det)`; `det_tol` separates the area-preserving
/// case from the dissipative one.
pub fn classify_stability(j: &Jacobian2, det_tol: f64) -> Stability {
    let (tr, det) = (j.trace(), j.det());
    if (det - 1.0).abs() < det_tol {
        if tr.abs() < 2.0 - det_tol {
            Stability::Elliptic
        } else if tr.abs() > 2.0 + det_tol {
            Stability::Saddle
        } else {
            Stability::Degenerate
        }
    } else {
        let [(r1, i1), (r2, i2)] = j.eigenvalues();
        let m1 = r1.hypot(i1);
        let m2 = r2.hypot(i2);
        let (lo, hi) = (m1.min(m2), m1.max(m2));
        if lo < 1.0 && hi > 1.0 {
            Stability::Saddle
        } else if hi < 1.0 {
            Stability::StableFocus
        } else if lo > 1.0 {
            Stability::UnstableFocus
        } else {
            Stability::Degenerate
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iters: usize,
    pub damping: f64,
    pub max_backtracks: usize,
    pub fd_step: f64,
    pub det_tol: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-11, max_iters: 60, damping: 0.5, max_backtracks: 12, fd_step: 1e-6, det_tol: 1e-6 }
    }
}

/// Largest accepted move of the fixed point between consecutive branch points;
/// larger moves are treated as a jump to another branch and the step is halved.
pub const BRANCH_MAX_MOVE: f64 = 0.02;

fn moved(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub z: (f64, f64),
    pub residual: f64,
    pub jac: Jacobian2,
    pub stability: Stability,
    pub orbit_class: OrbitClass,
    pub iterations: usize,
}

impl FixedPoint {
    pub fn trace(&self) -> f64 {
        self.jac.trace()
    }

    pub fn det(&self) -> f64 {
        self.jac.det()
    }

    /// `|tr| < 2`, the survey criterion (no condition on the determinant).
    pub fn is_elliptic_by_trace(&self) -> bool {
        self.trace().abs() < 2.0
    }
}

fn residual<D: Dynamics + ?Sized>(p: &D, z: (f64, f64), opts: &EventOptions) -> Result<((f64, f64), f64)> {
    let img = strobo_map_with(p, z, opts)?;
    let g = (img.0 - z.0, img.1 - z.1);
    Ok((g, g.0.hypot(g.1)))
}

/// FD Jacobian for Newton steps: itinerary-checked when possible, plain
/// central differences otherwise (Newton only needs a descent direction).
fn newton_jacobian<D: Dynamics + ?Sized>(p: &D, z: (f64, f64), h: f64, opts: &EventOptions) -> Result<Jacobian2> {
    match jacobian_fd_with(p, z, h, opts) {
        Ok((j, _)) => Ok(j),
        Err(Error::ItineraryMismatch { .. }) => {
            let f = |dx: f64, dv: f64| strobo_map_with(p, (z.0 + dx, z.1 + dv), opts);
            let (a, b, c, d) = (f(h, 0.0)?, f(-h, 0.0)?, f(0.0, h)?, f(0.0, -h)?);
            let s = 0.5 / h;
            Ok(Jacobian2::new((a.0 - b.0) * s, (c.0 - d.0) * s, (a.1 - b.1) * s, (c.1 - d.1) * s))
        }
        Err(e) => Err(e),
    }
}

fn clamp_state(p: &Params, z: (f64, f64)) -> (f64, f64) {
    (z.0.clamp(p.left, p.right), z.1)
}

/// Damped Newton on `G(z) = Phi(z) - z`.
pub fn newton_fixed_point(p: &Params, seed: (f64, f64), opts: &NewtonOptions) -> Result<FixedPoint> {
    newton_fixed_point_with(p, seed, opts)
}

/// Damped Newton for any [`Dynamics`] implementation.
pub fn newton_fixed_point_with<D: Dynamics + ?Sized>(
    d: &D,
    seed: (f64, f64),
    opts: &NewtonOptions,
) -> Result<FixedPoint> {
    let p = d;
    p.params().validate()?;
    let ev = EventOptions::default();
    let mut z = clamp_state(p.params(), seed);
    let (mut g, mut res) = residual(p, z, &ev)?;
    for it in 0..opts.max_iters {
        if res < opts.tol {
            return finish_fixed_point(p, z, res, it, opts);
        }
        let a = newton_jacobian(p, z, opts.fd_step, &ev)?.sub_identity();
        if a.det().abs() < 1e-12 {
            return Err(Error::SingularJacobian { det: a.det() });
        }
        let inv = a.inverse().ok_or(Error::SingularJacobian { det: a.det() })?;
        let d = inv.apply([-g.0, -g.1]);
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            let zn = clamp_state(p.params(), (z.0 + lambda * d[0], z.1 + lambda * d[1]));
            if let Ok((gn, rn)) = residual(p, zn, &ev) {
                if rn < res {
                    accepted = Some((zn, gn, rn));
                    break;
                }
            }
            lambda *= opts.damping;
        }
        match accepted {
            Some((zn, gn, rn)) => {
                z = zn;
                g = gn;
                res = rn;
            }
            None => return Err(Error::NoConvergence { iters: it + 1, residual: res }),
        }
    }
    if res < opts.tol {
        return finish_fixed_point(p, z, res, opts.max_iters, opts);
    }
    Err(Error::NoConvergence { iters: opts.max_iters, residual: res })
}

fn finish_fixed_point<D: Dynamics + ?Sized>(p: &D, z: (f64, f64), res: f64, iters: usize, opts: &NewtonOptions) -> Result<FixedPoint> {
    let ev = EventOptions::default();
    let jac = newton_jacobian(p, z, opts.fd_step, &ev)?;
    let orbit_class = OrbitClass::from_trace(&period_trace(p, z, &ev)?);
    Ok(FixedPoint {
        z,
        residual: res,
        jac,
        stability: classify_stability(&jac, opts.det_tol),
        orbit_class,
        iterations: iters,
    })
}

/// Rectangular grid of seeds (cell-centred when `centered`, corner-to-corner
/// otherwise).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_range: (f64, f64),
    pub v_range: (f64, f64),
    pub nx: usize,
    pub nv: usize,
    pub centered: bool,
}

impl GridSpec {
    pub fn new(x_range: (f64, f64), v_range: (f64, f64), nx: usize, nv: usize) -> Self {
        Self { x_range, v_range, nx, nv, centered: false }
    }

    /// Box `|x - cx| <= hx`, `|v - cv| <= hv` sampled at `n x n` cell centres.
    pub fn centered_box(center: (f64, f64), half: (f64, f64), nx: usize, nv: usize) -> Self {
        Self {
            x_range: (center.0 - half.0, center.0 + half.0),
            v_range: (center.1 - half.1, center.1 + half.1),
            nx,
            nv,
            centered: true,
        }
    }

    fn axis(range: (f64, f64), n: usize, centered: bool) -> Vec<f64> {
        let w = range.1 - range.0;
        (0..n)
            .map(|i| {
                if centered {
                    range.0 + (i as f64 + 0.5) * w / n as f64
                } else if n == 1 {
                    0.5 * (range.0 + range.1)
                } else {
                    range.0 + i as f64 * w / (n - 1) as f64
                }
            })
            .collect()
    }

    pub fn xs(&self) -> Vec<f64> {
        Self::axis(self.x_range, self.nx, self.centered)
    }

    pub fn vs(&self) -> Vec<f64> {
        Self::axis(self.v_range, self.nv, self.centered)
    }

    /// Points in row-major order (`v` outer, `x` inner).
    pub fn points(&self) -> Vec<(f64, f64)> {
        let xs = self.xs();
        self.vs().into_iter().flat_map(|v| xs.iter().map(move |&x| (x, v))).collect()
    }

    pub fn len(&self) -> usize {
        self.nx * self.nv
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurveyFilters {
    /// Keep `|x*| < max_abs_x` (the right wall by default).
    pub max_abs_x: Option<f64>,
    pub min_abs_v: f64,
    pub det_range: (f64, f64),
}

impl SurveyFilters {
    pub fn standard(p: &Params) -> Self {
        Self { max_abs_x: Some(p.right), min_abs_v: 0.05, det_range: (0.1, 5.0) }
    }

    pub fn none() -> Self {
        Self { max_abs_x: None, min_abs_v: 0.0, det_range: (f64::NEG_INFINITY, f64::INFINITY) }
    }

    fn keep(&self, fp: &FixedPoint) -> bool {
        let x_ok = self.max_abs_x.map_or(true, |m| fp.z.0.abs() < m);
        let det = fp.det();
        x_ok && fp.z.1.abs() > self.min_abs_v && det >= self.det_range.0 && det <= self.det_range.1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Survey {
    pub points: Vec<FixedPoint>,
    pub elliptic: usize,
    pub saddle: usize,
}

/// Newton from every grid seed, filtered and deduplicated per coordinate.
pub fn grid_newton(
    p: &Params,
    grid: &GridSpec,
    dedup_tol: f64,
    filters: &SurveyFilters,
    opts: &NewtonOptions,
) -> Survey {
    let converged: Vec<FixedPoint> = grid
        .points()
        .par_iter()
        .filter_map(|&seed| newton_fixed_point(p, seed, opts).ok())
        .collect();
    let mut kept: Vec<FixedPoint> = Vec::new();
    for fp in converged.into_iter().filter(|fp| filters.keep(fp)) {
        let dup = kept
            .iter()
            .any(|k| (k.z.0 - fp.z.0).abs() < dedup_tol && (k.z.1 - fp.z.1).abs() < dedup_tol);
        if !dup {
            kept.push(fp);
        }
    }
    kept.sort_by(|a, b| a.z.0.total_cmp(&b.z.0).then(a.z.1.total_cmp(&b.z.1)));
    let elliptic = kept.iter().filter(|f| f.is_elliptic_by_trace()).count();
    let saddle = kept.len() - elliptic;
    Survey { points: kept, elliptic, saddle }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContinuationParam {
    Forcing,
    Friction,
    Omega,
    Gap,
}

impl ContinuationParam {
    pub fn set(&self, p: &Params, value: f64) -> Params {
        match self {
            ContinuationParam::Forcing => p.with_forcing(value),
            ContinuationParam::Friction => p.with_friction(value),
            ContinuationParam::Omega => p.with_omega(value),
            ContinuationParam::Gap => {
                let mid = 0.5 * (p.left + p.right);
                Params { left: mid - 0.5 * value, right: mid + 0.5 * value, ..*p }
            }
        }
    }

    pub fn get(&self, p: &Params) -> f64 {
        match self {
            ContinuationParam::Forcing => p.forcing,
            ContinuationParam::Friction => p.friction,
            ContinuationParam::Omega => p.omega,
            ContinuationParam::Gap => p.gap(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub param_value: f64,
    pub z: (f64, f64),
    pub trace: f64,
    pub det: f64,
    pub theta_star: Option<f64>,
    pub fold_flag: bool,
}

impl BranchPoint {
    fn from_fp(value: f64, fp: &FixedPoint, fold: bool) -> Self {
        Self {
            param_value: value,
            z: fp.z,
            trace: fp.trace(),
            det: fp.det(),
            theta_star: rotation_number(&fp.jac).ok().map(|r| r.0),
            fold_flag: fold,
        }
    }
}

/// Natural continuation from `seed` (a converged fixed point at `range.0`)
/// towards `range.1`. The branch ends at a fold, located by bisection on the
/// parameter between the last converged value and the first failure.
pub fn continue_branch(
    p: &Params,
    param: ContinuationParam,
    range: (f64, f64),
    step: f64,
    seed: &FixedPoint,
    opts: &NewtonOptions,
) -> Result<Vec<BranchPoint>> {
    let mut out = vec![BranchPoint::from_fp(range.0, seed, false)];
    if range.1 == range.0 {
        return Ok(out);
    }
    let dir = (range.1 - range.0).signum();
    let step = step.abs().max(1e-12) * dir;
    let mut last = *seed;
    let mut value = range.0;
    let alive = |fp: &FixedPoint, prev: &FixedPoint| {
        fp.trace().abs() < 2.0 || (prev.trace().abs() >= 2.0 && fp.trace().abs() >= 2.0)
    };
    let mut slope: Option<f64> = None;
    loop {
        if (value - range.1) * dir >= 0.0 {
            return Ok(out);
        }
        let mut h = step;
        let mut advanced = false;
        for _ in 0..6 {
            let next = if (value + h - range.1) * dir > 0.0 { range.1 } else { value + h };
            let pn = param.set(p, next);
            match newton_fixed_point(&pn, last.z, opts) {
                Ok(fp)
                    if alive(&fp, &last)
                        && moved(fp.z, last.z) <= BRANCH_MAX_MOVE
                        && trace_consistent(slope, last.trace(), fp.trace(), next - value) =>
                {
                    slope = Some((fp.trace() - last.trace()) / (next - value));
                    out.push(BranchPoint::from_fp(next, &fp, false));
                    last = fp;
                    value = next;
                    advanced = true;
                    break;
                }
                _ => h *= 0.5,
            }
        }
        if advanced {
            continue;
        }
        let failed = value + h * 2.0;
        if 2.0 - last.trace().abs() > 0.5 {
            return Err(Error::BranchLost { param: value });
        }
        let fold = refine_fold(p, param, value, failed, &last, slope, opts);
        out.push(BranchPoint { fold_flag: true, ..fold });
        return Ok(out);
    }
}

/// Rejects a continuation step whose trace jumps against the local trend,
/// which is the signature of Newton landing on a neighbouring branch.
fn trace_consistent(slope: Option<f64>, tr_prev: f64, tr_new: f64, dp: f64) -> bool {
    let Some(s) = slope else { return true };
    if 2.0 - tr_prev.abs() < 0.05 && s * dp * tr_prev > 0.0 && (tr_new - tr_prev) * tr_prev < 0.0 {
        return false;
    }
    let predicted = s * dp;
    let actual = tr_new - tr_prev;
    let tol = (0.5 * predicted.abs()).max(2e-2);
    if (actual - predicted).abs() <= tol {
        return true;
    }
    let approaching_fold = (2.0 - tr_prev.abs()) < 0.25 && predicted * tr_prev > 0.0;
    approaching_fold && actual * predicted > 0.0 && (actual.abs() <= predicted.abs() + tol)
}

/// Bisection on the parameter: the fold is where Newton from the last good
/// point stops converging or the trace leaves `(-2, 2)`.
fn refine_fold(
    p: &Params,
    param: ContinuationParam,
    good: f64,
    bad: f64,
    last: &FixedPoint,
    slope: Option<f64>,
    opts: &NewtonOptions,
) -> BranchPoint {
    let (mut lo, mut hi) = (good, bad);
    let mut best = BranchPoint::from_fp(good, last, true);
    let mut seed = *last;
    let trend = slope.map(|s| s * (bad - good)).unwrap_or(0.0);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        match newton_fixed_point(&param.set(p, mid), seed.z, opts) {
            Ok(fp)
                if fp.trace().abs() < 2.0
                    && moved(fp.z, seed.z) <= BRANCH_MAX_MOVE
                    && (fp.trace() - seed.trace()) * trend >= 0.0 =>
            {
                lo = mid;
                best = BranchPoint::from_fp(mid, &fp, true);
                seed = fp;
            }
            _ => hi = mid,
        }
    }
    best
}

/// Existence residual of the symmetric branch,
/// `Psi = F pi sin(theta) - 2F - R w^2 + f pi^2 / 2 - f theta (pi - theta)`.
pub fn psi(theta: f64, f: f64, p: &Params) -> f64 {
    let w2 = p.omega * p.omega;
    p.forcing * PI * theta.sin() - 2.0 * p.forcing - p.gap() * w2 + 0.5 * f * PI * PI - f * theta * (PI - theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalFrictions {
    /// Saddle-centre friction `max(0, 4 (2F + R w^2 - F pi) / pi^2)`.
    pub f_sc: f64,
    /// Impulse bound `2F / pi`.
    pub f_imp: f64,
}

pub fn critical_frictions(p: &Params) -> CriticalFrictions {
    let raw = 4.0 * (2.0 * p.forcing + p.gap() * p.omega * p.omega - p.forcing * PI) / (PI * PI);
    CriticalFrictions { f_sc: raw.max(0.0), f_imp: 2.0 * p.forcing / PI }
}

/// Forcing at which the saddle-centre value equals `f`.
pub fn forcing_sc(f: f64, p: &Params) -> f64 {
    (f * PI * PI - 4.0 * p.gap() * p.omega * p.omega) / (4.0 * (2.0 - PI))
}

/// Roots of `Psi(.; f)` on `(0, pi)` with their transversality flags
/// `|F cos(theta)| > f`.
pub fn symmetric_roots(p: &Params, f: f64) -> Vec<(f64, bool)> {
    let peak = psi(0.5 * PI, f, p);
    let scale = p.forcing * PI + p.gap() * p.omega * p.omega;
    let transverse = |th: f64| (p.forcing * th.cos()).abs() > f;
    if peak < -1e-15 * scale {
        return Vec::new();
    }
    if peak <= 1e-15 * scale {
        return vec![(0.5 * PI, transverse(0.5 * PI))];
    }
    if psi(0.0, f, p) >= 0.0 {
        return Vec::new();
    }
    // Psi is increasing on (0, pi/2) and symmetric about pi/2.
    let (mut lo, mut hi) = (0.0, 0.5 * PI);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if psi(mid, f, p) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let th = if psi(lo, f, p).abs() < psi(hi, f, p).abs() { lo } else { hi };
    vec![(th, transverse(th)), (PI - th, transverse(PI - th))]
}

/// Closed-form half-period orbit for a turning phase `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetricOrbit {
    pub theta: f64,
    pub tau: f64,
    pub a1: f64,
    pub b1: f64,
    pub a2: f64,
    pub b2: f64,
    pub transverse: bool,
    params: Params,
}

pub fn build_symmetric_orbit(p: &Params, theta: f64) -> SymmetricOrbit {
    let w = p.omega;
    let (fa, f) = (p.forcing, p.friction);
    let tau = theta / w;
    let a1 = -(fa / w) * theta.sin() - f * tau;
    let b1 = p.right + fa / (w * w);
    SymmetricOrbit {
        theta,
        tau,
        a1,
        b1,
        a2: a1 + 2.0 * f * tau,
        b2: b1 - f * tau * tau,
        transverse: (fa * theta.cos()).abs() > f,
        params: *p,
    }
}

impl SymmetricOrbit {
    /// `(x, v)` on the first piece (`t <= tau`) or the second.
    pub fn piece(&self, first: bool, t: f64) -> (f64, f64) {
        let p = &self.params;
        let w = p.omega;
        let fw2 = p.forcing / (w * w);
        let (sign, a, b) = if first { (1.0, self.a1, self.b1) } else { (-1.0, self.a2, self.b2) };
        let x = -fw2 * (w * t).cos() + sign * 0.5 * p.friction * t * t + a * t + b;
        let v = p.forcing / w * (w * t).sin() + sign * p.friction * t + a;
        (x, v)
    }

    pub fn state(&self, t: f64) -> (f64, f64) {
        self.piece(t <= self.tau, t)
    }

    /// Residuals of the four defining conditions: wall at `t = 0`, velocity
    /// zero at `tau` from both sides, continuity at `tau`, wall at `T/2`.
    pub fn residuals(&self) -> [f64; 5] {
        let p = &self.params;
        let half = 0.5 * p.period();
        let (x1_0, _) = self.piece(true, 0.0);
        let (x1_tau, v1_tau) = self.piece(true, self.tau);
        let (x2_tau, v2_tau) = self.piece(false, self.tau);
        let (x2_half, _) = self.piece(false, half);
        [x1_0 - p.right, v1_tau, v2_tau, x1_tau - x2_tau, x2_half - p.left]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AnalyticRegion {
    /// No symmetric-branch orbit predicted.
    Empty,
    /// `f_sc <= 0 < f < f_imp`.
    EllipticOnly,
    /// `f_sc < f < f_imp`.
    Coexistence,
}

pub fn analytic_region(f: f64, gap: f64, base: &Params) -> AnalyticRegion {
    let cf = critical_frictions(&ContinuationParam::Gap.set(base, gap));
    let raw = 4.0 * (2.0 * base.forcing + gap * base.omega * base.omega - base.forcing * PI) / (PI * PI);
    if f >= cf.f_imp {
        AnalyticRegion::Empty
    } else if raw <= 0.0 {
        AnalyticRegion::EllipticOnly
    } else if f > cf.f_sc {
        AnalyticRegion::Coexistence
    } else {
        AnalyticRegion::Empty
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerifyLabel {
    EllipticOnly,
    SaddleOnly,
    Both,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyPoint {
    pub friction: f64,
    pub gap: f64,
    pub label: VerifyLabel,
    pub elliptic: usize,
    pub saddle: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionMap {
    pub frictions: Vec<f64>,
    pub gaps: Vec<f64>,
    /// `analytic[j][i]` for `gaps[j]`, `frictions[i]`.
    pub analytic: Vec<Vec<AnalyticRegion>>,
    pub verification: Vec<VerifyPoint>,
}

/// Seeds and Newton settings for the sparse verification of the region map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifySettings {
    /// Seed box as fractions of the right wall (x) and absolute velocities.
    pub x_frac: (f64, f64),
    pub v_range: (f64, f64),
    pub n_seeds: (usize, usize),
    pub newton: NewtonOptions,
    /// Accepted determinant band; the default keeps area-preserving
    /// (non-sticking) orbits only.
    pub det_range: (f64, f64),
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self {
            x_frac: (-0.25, 0.25),
            v_range: (-1.0, 1.0),
            n_seeds: (2, 2),
            newton: NewtonOptions { tol: 1e-7, max_iters: 12, ..NewtonOptions::default() },
            det_range: (0.99, 1.01),
        }
    }
}

/// Labels one `(f, R)` point by Newton from a small seed grid.
pub fn verify_point(base: &Params, f: f64, gap: f64, settings: &VerifySettings) -> VerifyPoint {
    let p = ContinuationParam::Gap.set(&base.with_friction(f), gap);
    let grid = GridSpec::new(
        (settings.x_frac.0 * p.right, settings.x_frac.1 * p.right),
        settings.v_range,
        settings.n_seeds.0,
        settings.n_seeds.1,
    );
    let filters = SurveyFilters { det_range: settings.det_range, ..SurveyFilters::none() };
    let survey = grid_newton(&p, &grid, 0.025, &filters, &settings.newton);
    let label = match (survey.elliptic > 0, survey.saddle > 0) {
        (true, true) => VerifyLabel::Both,
        (true, false) => VerifyLabel::EllipticOnly,
        (false, true) => VerifyLabel::SaddleOnly,
        (false, false) => VerifyLabel::None,
    };
    VerifyPoint { friction: f, gap, label, elliptic: survey.elliptic, saddle: survey.saddle }
}

/// Analytic shading over an `nf x nr` grid plus Newton verification at the
/// given `(f, R)` points.
pub fn region_map(
    f_range: (f64, f64),
    r_range: (f64, f64),
    base: &Params,
    analytic_grid: (usize, usize),
    verify_points: &[(f64, f64)],
    settings: &VerifySettings,
) -> RegionMap {
    let lin = |r: (f64, f64), n: usize| -> Vec<f64> {
        (0..n).map(|i| if n == 1 { r.0 } else { r.0 + (r.1 - r.0) * i as f64 / (n - 1) as f64 }).collect()
    };
    let frictions = lin(f_range, analytic_grid.0);
    let gaps = lin(r_range, analytic_grid.1);
    let analytic = gaps
        .iter()
        .map(|&g| frictions.iter().map(|&f| analytic_region(f, g, base)).collect())
        .collect();
    let verification = verify_points.par_iter().map(|&(f, g)| verify_point(base, f, g, settings)).collect();
    RegionMap { frictions, gaps, analytic, verification }
}

/// Orbit class over one period, re-exported for convenience in reports.
pub fn orbit_class(p: &Params, z: (f64, f64)) -> Result<OrbitClass> {
    classify_orbit(p, z, 1)
}
