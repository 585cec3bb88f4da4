//! Exact event-driven integration of `x'' = F cos(wt) - f sgn(x')` between two
//! elastic walls.
//!
//! Free flights are closed-form, so the only numerical work is locating event
//! times: a uniform scan brackets sign changes of `x - r`, `x - l` and `v`, and
//! bisection (followed by a short Newton polish) pins the root down.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants of the oscillator. `R` and `T` are derived on demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Forcing amplitude `F`.
    pub forcing: f64,
    /// Forcing angular frequency `w`.
    pub omega: f64,
    /// Kinetic friction level `f`.
    pub friction: f64,
    /// Left wall `l`.
    pub left: f64,
    /// Right wall `r`.
    pub right: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self::baseline()
    }
}

impl Params {
    pub fn new(forcing: f64, omega: f64, friction: f64, left: f64, right: f64) -> Result<Self> {
        let p = Self { forcing, omega, friction, left, right };
        p.validate()?;
        Ok(p)
    }

    /// `F = 1, w = 1, f = 0.4` on `[-1, 1]`.
    pub const fn baseline() -> Self {
        Self { forcing: 1.0, omega: 1.0, friction: 0.4, left: -1.0, right: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.forcing, self.omega, self.friction, self.left, self.right];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("non-finite value".into()));
        }
        if self.forcing <= 0.0 {
            return Err(Error::InvalidParams(format!("forcing must be > 0, got {}", self.forcing)));
        }
        if self.omega <= 0.0 {
            return Err(Error::InvalidParams(format!("omega must be > 0, got {}", self.omega)));
        }
        if self.friction < 0.0 {
            return Err(Error::InvalidParams(format!("friction must be >= 0, got {}", self.friction)));
        }
        if self.left >= self.right {
            return Err(Error::InvalidParams(format!(
                "walls must satisfy left < right, got [{}, {}]",
                self.left, self.right
            )));
        }
        Ok(())
    }

    /// Gap `R = r - l`.
    pub fn gap(&self) -> f64 {
        self.right - self.left
    }

    /// Forcing period `T = 2 pi / w`.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    pub fn with_forcing(mut self, forcing: f64) -> Self {
        self.forcing = forcing;
        self
    }

    pub fn with_friction(mut self, friction: f64) -> Self {
        self.friction = friction;
        self
    }

    /// Symmetric walls `[-R/2, R/2]`.
    pub fn with_gap(mut self, gap: f64) -> Self {
        self.left = -0.5 * gap;
        self.right = 0.5 * gap;
        self
    }

    pub fn with_omega(mut self, omega: f64) -> Self {
        self.omega = omega;
        self
    }

    /// Applied force `F cos(wt)`.
    #[inline]
    pub fn drive(&self, t: f64) -> f64 {
        self.forcing * (self.omega * t).cos()
    }
}

/// A timestamped phase point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub t: f64,
    pub x: f64,
    pub v: f64,
}

impl State {
    pub fn new(t: f64, x: f64, v: f64) -> Self {
        Self { t, x, v }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// Free flight with friction sign `s` (equal to `sgn v` whenever `v != 0`).
    Flight(i8),
    Sticking,
}

impl Regime {
    pub fn sign(&self) -> Option<f64> {
        match self {
            Regime::Flight(s) => Some(*s as f64),
            Regime::Sticking => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    WallHitRight,
    WallHitLeft,
    TurningTransverse,
    StickOnset,
    StickRelease,
    TangentialTouch,
}

impl EventKind {
    pub fn is_wall(&self) -> bool {
        matches!(self, EventKind::WallHitRight | EventKind::WallHitLeft)
    }

    pub fn name(&self) -> &'static str {
        match self {
            EventKind::WallHitRight => "wall_right",
            EventKind::WallHitLeft => "wall_left",
            EventKind::TurningTransverse => "turning",
            EventKind::StickOnset => "stick_onset",
            EventKind::StickRelease => "stick_release",
            EventKind::TangentialTouch => "tangential_touch",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Warning {
    /// `|F cos wt| = f` within `tangent_tol`; continued as sticking.
    Tangential,
    /// Wall reached with `|v| < graze_tol`.
    Grazing,
    /// Impacts accumulating at a wall the drive presses against; continued as
    /// rest at the wall.
    Zeno,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub time: f64,
    pub before: State,
    pub after: State,
    /// Regime entered after the event.
    pub regime: Regime,
    pub warning: Option<Warning>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Trichotomy {
    Transverse(i8),
    StickOnset,
    TangentialTouch,
}

/// Numerical knobs of the event locator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventOptions {
    pub scan_divisions: usize,
    pub t_bisect_tol: f64,
    pub tangent_tol: f64,
    pub graze_tol: f64,
    /// Wall impact speed below which a particle pressed into the wall by the
    /// drive is set to rest there instead of resolving further bounces.
    pub zeno_tol: f64,
    pub max_events: usize,
    pub max_bisect: usize,
}

impl Default for EventOptions {
    fn default() -> Self {
        Self {
            scan_divisions: 2000,
            t_bisect_tol: 1e-13,
            tangent_tol: 1e-10,
            graze_tol: 1e-10,
            zeno_tol: 1e-6,
            max_events: 1_000_000,
            max_bisect: 200,
        }
    }
}

/// Anything that can be integrated by the event engine: a closed-form flight
/// for each friction sign plus the wall restitution.
pub trait Dynamics: Sync {
    fn params(&self) -> &Params;

    /// State at `t` of the flight started at `(t0, x0, v0)` with friction sign `s`.
    fn flight(&self, t0: f64, x0: f64, v0: f64, s: f64, t: f64) -> (f64, f64);

    /// Acceleration in flight with friction sign `s`.
    fn accel(&self, t: f64, v: f64, s: f64) -> f64;

    /// Coefficient `e` in `v -> -e v` at the walls.
    fn restitution(&self) -> f64 {
        1.0
    }

    /// Derivative of the flight map with respect to `(x0, v0)` over a duration `dt`.
    fn flight_variational(&self, dt: f64) -> [[f64; 2]; 2] {
        [[1.0, dt], [0.0, 1.0]]
    }
}

impl Dynamics for Params {
    fn params(&self) -> &Params {
        self
    }

    fn flight(&self, t0: f64, x0: f64, v0: f64, s: f64, t: f64) -> (f64, f64) {
        flight_propagate(self, t0, x0, v0, s, t)
    }

    fn accel(&self, t: f64, _v: f64, s: f64) -> f64 {
        self.drive(t) - s * self.friction
    }
}

/// Closed-form solution of `x'' = F cos(wt) - s f` from `(x0, v0)` at `t0`.
pub fn flight_propagate(p: &Params, t0: f64, x0: f64, v0: f64, s: f64, t: f64) -> (f64, f64) {
    let w = p.omega;
    let dt = t - t0;
    let (s0, c0) = (w * t0).sin_cos();
    let (s1, c1) = (w * t).sin_cos();
    let fw = p.forcing / w;
    let v = v0 + fw * (s1 - s0) - s * p.friction * dt;
    let x = x0 + v0 * dt - fw / w * (c1 - c0) - fw * s0 * dt - 0.5 * s * p.friction * dt * dt;
    (x, v)
}

/// Classifies a velocity zero at time `t` in the interior of the gap.
pub fn classify_vzero(p: &Params, t: f64, tangent_tol: f64) -> Trichotomy {
    let a = p.drive(t);
    if a.abs() > p.friction + tangent_tol {
        Trichotomy::Transverse(if a > 0.0 { 1 } else { -1 })
    } else if a.abs() < p.friction - tangent_tol {
        Trichotomy::StickOnset
    } else {
        Trichotomy::TangentialTouch
    }
}

/// First time after `t_onset` at which `|F cos wt| = f`, together with the sign
/// of `F cos wt` there.
pub fn stick_release_time(p: &Params, t_onset: f64) -> Result<(f64, i8)> {
    if p.friction >= p.forcing {
        return Err(Error::PermanentRest { forcing: p.forcing, friction: p.friction });
    }
    // Release phases are pi - a + k pi with a = arccos(f/F); at even k the force is
    // negative, at odd k positive.
    let a = (p.friction / p.forcing).acos();
    let phase0 = p.omega * t_onset;
    let base = PI - a;
    let mut k = ((phase0 - base) / PI).floor() + 1.0;
    let mut t = (base + k * PI) / p.omega;
    while t <= t_onset {
        k += 1.0;
        t = (base + k * PI) / p.omega;
    }
    while k > 0.0 && (base + (k - 1.0) * PI) / p.omega > t_onset {
        k -= 1.0;
        t = (base + k * PI) / p.omega;
    }
    let sign = if (k as i64).rem_euclid(2) == 0 { -1 } else { 1 };
    Ok((t, sign))
}

/// Release time from rest at position `x`; a release pushing into a wall the
/// particle is resting against is skipped.
fn release_from(p: &Params, t_onset: f64, x: f64) -> Result<(f64, i8)> {
    let (mut t, mut s) = stick_release_time(p, t_onset)?;
    for _ in 0..2 {
        let blocked = (x >= p.right && s > 0) || (x <= p.left && s < 0);
        if !blocked {
            break;
        }
        // The next release crossing with the opposite sign is half a period later.
        t += PI / p.omega;
        s = -s;
    }
    Ok((t, s))
}

/// Regime at a given state: the velocity sign, or the velocity-zero trichotomy.
pub fn initial_regime(p: &Params, st: &State, opts: &EventOptions) -> (Regime, Option<Warning>) {
    if st.v > 0.0 {
        return (Regime::Flight(1), None);
    }
    if st.v < 0.0 {
        return (Regime::Flight(-1), None);
    }
    match classify_vzero(p, st.t, opts.tangent_tol) {
        Trichotomy::Transverse(s) => {
            let into_wall = (st.x >= p.right && s > 0) || (st.x <= p.left && s < 0);
            if into_wall {
                (Regime::Sticking, None)
            } else {
                (Regime::Flight(s), None)
            }
        }
        Trichotomy::StickOnset => (Regime::Sticking, None),
        Trichotomy::TangentialTouch => (Regime::Sticking, Some(Warning::Tangential)),
    }
}

/// Applies the event rule for `kind` to the state at the event time.
pub fn apply_event(p: &Params, kind: EventKind, st: &State, opts: &EventOptions) -> Result<(State, Regime)> {
    apply_event_with(p, 1.0, kind, st, opts).map(|(s, r, _)| (s, r))
}

fn apply_event_with(
    p: &Params,
    restitution: f64,
    kind: EventKind,
    st: &State,
    opts: &EventOptions,
) -> Result<(State, Regime, Option<Warning>)> {
    match kind {
        EventKind::WallHitRight | EventKind::WallHitLeft => {
            let (wall, inward) = if kind == EventKind::WallHitRight { (p.right, -1) } else { (p.left, 1) };
            if (st.x - wall).abs() > 1e-9 * (1.0 + wall.abs()) {
                return Err(Error::InconsistentEvent(format!(
                    "{} with x = {} away from the wall",
                    kind.name(),
                    st.x
                )));
            }
            if st.v.abs() < opts.graze_tol {
                let at_wall = State::new(st.t, wall, 0.0);
                let regime = match classify_vzero(p, st.t, opts.tangent_tol) {
                    Trichotomy::Transverse(s) if s == inward => Regime::Flight(s),
                    _ => Regime::Sticking,
                };
                return Ok((at_wall, regime, Some(Warning::Grazing)));
            }
            if st.v.abs() < opts.zeno_tol && p.drive(st.t) * (inward as f64) < -(p.friction + opts.tangent_tol) {
                return Ok((State::new(st.t, wall, 0.0), Regime::Sticking, Some(Warning::Zeno)));
            }
            if st.v * inward as f64 > 0.0 {
                return Err(Error::InconsistentEvent(format!(
                    "{} with velocity {} already pointing inward",
                    kind.name(),
                    st.v
                )));
            }
            Ok((State::new(st.t, wall, -restitution * st.v), Regime::Flight(inward), None))
        }
        EventKind::TurningTransverse => match classify_vzero(p, st.t, opts.tangent_tol) {
            Trichotomy::Transverse(s) => Ok((State::new(st.t, st.x, 0.0), Regime::Flight(s), None)),
            other => Err(Error::InconsistentEvent(format!("turning event classified as {other:?}"))),
        },
        EventKind::StickOnset => Ok((State::new(st.t, st.x, 0.0), Regime::Sticking, None)),
        EventKind::TangentialTouch => {
            Ok((State::new(st.t, st.x, 0.0), Regime::Sticking, Some(Warning::Tangential)))
        }
        EventKind::StickRelease => {
            let a = p.drive(st.t);
            let s = if a >= 0.0 { 1 } else { -1 };
            Ok((State::new(st.t, st.x, 0.0), Regime::Flight(s), None))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NextEvent {
    Event(Event),
    NoEventBefore(f64),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Root {
    Right,
    Left,
    VZero,
}

/// Earliest event in `(st.t, t_max]` for the given regime.
pub fn next_event<D: Dynamics + ?Sized>(
    d: &D,
    st: &State,
    regime: Regime,
    t_max: f64,
    opts: &EventOptions,
) -> Result<NextEvent> {
    let p = d.params();
    match regime {
        Regime::Sticking => {
            let (t_rel, s) = match release_from(p, st.t, st.x) {
                Ok(r) => r,
                Err(Error::PermanentRest { .. }) => return Ok(NextEvent::NoEventBefore(t_max)),
                Err(e) => return Err(e),
            };
            if t_rel > t_max {
                return Ok(NextEvent::NoEventBefore(t_max));
            }
            let before = State::new(t_rel, st.x, 0.0);
            Ok(NextEvent::Event(Event {
                kind: EventKind::StickRelease,
                time: t_rel,
                before,
                after: before,
                regime: Regime::Flight(s),
                warning: None,
            }))
        }
        Regime::Flight(s) => {
            let sf = s as f64;
            let Some((root, t)) = locate_flight_root(d, st, sf, t_max, opts)? else {
                return Ok(NextEvent::NoEventBefore(t_max));
            };
            let (x, v) = d.flight(st.t, st.x, st.v, sf, t);
            let (kind, before) = match root {
                Root::Right => (EventKind::WallHitRight, State::new(t, p.right, v)),
                Root::Left => (EventKind::WallHitLeft, State::new(t, p.left, v)),
                Root::VZero => {
                    let x = x.clamp(p.left, p.right);
                    let kind = match classify_vzero(p, t, opts.tangent_tol) {
                        Trichotomy::Transverse(_) => EventKind::TurningTransverse,
                        Trichotomy::StickOnset => EventKind::StickOnset,
                        Trichotomy::TangentialTouch => EventKind::TangentialTouch,
                    };
                    (kind, State::new(t, x, 0.0))
                }
            };
            let (after, regime, warning) = apply_event_with(p, d.restitution(), kind, &before, opts)?;
            Ok(NextEvent::Event(Event { kind, time: t, before, after, regime, warning }))
        }
    }
}

/// Scans the flight for the first sign change of `x - r`, `x - l` or `s v` and
/// refines it.
fn locate_flight_root<D: Dynamics + ?Sized>(
    d: &D,
    st: &State,
    s: f64,
    t_max: f64,
    opts: &EventOptions,
) -> Result<Option<(Root, f64)>> {
    let p = d.params();
    let dt = p.period() / opts.scan_divisions as f64;
    let mut ta = st.t;
    let mut k = 0usize;
    while ta < t_max {
        k += 1;
        let tb = (st.t + k as f64 * dt).min(t_max);
        let (xb, vb) = d.flight(st.t, st.x, st.v, s, tb);
        let hit_r = xb >= p.right;
        let hit_l = xb <= p.left;
        let hit_v = s * vb <= 0.0;
        if hit_r || hit_l || hit_v {
            let mut best: Option<(Root, f64)> = None;
            let candidates = [(Root::Right, hit_r), (Root::Left, hit_l), (Root::VZero, hit_v)];
            for (root, hit) in candidates {
                if !hit {
                    continue;
                }
                let t = refine_root(d, st, s, root, ta, tb, opts)?;
                best = match best {
                    None => Some((root, t)),
                    Some((broot, bt)) => {
                        let wall_first = root != Root::VZero && broot == Root::VZero;
                        if t < bt - opts.t_bisect_tol || ((t - bt).abs() <= opts.t_bisect_tol && wall_first) {
                            Some((root, t))
                        } else {
                            Some((broot, bt))
                        }
                    }
                };
            }
            return Ok(best);
        }
        ta = tb;
    }
    Ok(None)
}

fn root_fn<D: Dynamics + ?Sized>(d: &D, st: &State, s: f64, root: Root, t: f64) -> (f64, f64) {
    let (x, v) = d.flight(st.t, st.x, st.v, s, t);
    let p = d.params();
    match root {
        Root::Right => (x - p.right, v),
        Root::Left => (p.left - x, -v),
        Root::VZero => (-s * v, -s * d.accel(t, v, s)),
    }
}

/// Bisection on `g <= 0 -> g >= 0` (all three roots are cast in that form),
/// then up to three Newton steps kept inside the final bracket.
fn refine_root<D: Dynamics + ?Sized>(
    d: &D,
    st: &State,
    s: f64,
    root: Root,
    ta: f64,
    tb: f64,
    opts: &EventOptions,
) -> Result<f64> {
    let (mut lo, mut hi) = (ta, tb);
    let mut iters = 0;
    while hi - lo >= opts.t_bisect_tol {
        if iters >= opts.max_bisect {
            return Err(Error::BracketFailure { t: lo, iters });
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if root_fn(d, st, s, root, mid).0 >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        iters += 1;
    }
    let mut t = hi;
    let (mut g, mut dg) = root_fn(d, st, s, root, t);
    for _ in 0..3 {
        if dg == 0.0 || g == 0.0 {
            break;
        }
        let tn = t - g / dg;
        if !(tn >= lo - opts.t_bisect_tol && tn <= hi + opts.t_bisect_tol) {
            break;
        }
        let (gn, dgn) = root_fn(d, st, s, root, tn);
        if gn.abs() >= g.abs() {
            break;
        }
        t = tn;
        g = gn;
        dg = dgn;
    }
    Ok(t.max(st.t))
}

/// Output of an integration window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitTrace {
    pub samples: Vec<State>,
    pub events: Vec<Event>,
    pub regime_intervals: Vec<(f64, f64, Regime)>,
    pub final_state: State,
    pub final_regime: Regime,
    pub warnings: Vec<(f64, Warning)>,
}

impl OrbitTrace {
    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    /// True if no turning, sticking or tangential event occurred.
    pub fn is_non_sticking(&self) -> bool {
        self.events.iter().all(|e| e.kind.is_wall() && e.regime != Regime::Sticking)
            && self.regime_intervals.iter().all(|r| r.2 != Regime::Sticking)
    }

    pub fn has_sticking(&self) -> bool {
        self.regime_intervals.iter().any(|r| r.2 == Regime::Sticking)
    }

    pub fn itinerary(&self) -> Vec<EventKind> {
        self.events.iter().map(|e| e.kind).collect()
    }
}

/// Integrates from `(x, v)` at `t = 0` over `[0, t_span]`, sampling every
/// `sample_dt` (no samples if `sample_dt <= 0`).
pub fn simulate(p: &Params, z0: (f64, f64), t_span: f64, sample_dt: f64) -> Result<OrbitTrace> {
    p.validate()?;
    let dt = (sample_dt > 0.0).then_some(sample_dt);
    simulate_from(p, State::new(0.0, z0.0, z0.1), t_span, dt, &EventOptions::default())
}

/// General driver: integrates any [`Dynamics`] from `start` to `t_end`.
pub fn simulate_from<D: Dynamics + ?Sized>(
    d: &D,
    start: State,
    t_end: f64,
    sample_dt: Option<f64>,
    opts: &EventOptions,
) -> Result<OrbitTrace> {
    let p = d.params();
    if !(start.x >= p.left && start.x <= p.right) {
        return Err(Error::InvalidParams(format!(
            "initial position {} outside [{}, {}]",
            start.x, p.left, p.right
        )));
    }
    let mut st = start;
    // A state on a wall with outward velocity is reflected before integration.
    if (st.x >= p.right && st.v > 0.0) || (st.x <= p.left && st.v < 0.0) {
        st.v = -d.restitution() * st.v;
    }
    let (mut regime, w0) = initial_regime(p, &st, opts);
    let mut trace = OrbitTrace {
        samples: Vec::new(),
        events: Vec::new(),
        regime_intervals: Vec::new(),
        final_state: st,
        final_regime: regime,
        warnings: Vec::new(),
    };
    if let Some(w) = w0 {
        trace.warnings.push((st.t, w));
    }
    let mut next_sample = 0usize;
    let sample_at = |k: usize| start.t + k as f64 * sample_dt.unwrap_or(f64::INFINITY);
    loop {
        let ne = next_event(d, &st, regime, t_end, opts)?;
        let seg_end = match ne {
            NextEvent::Event(e) => e.time,
            NextEvent::NoEventBefore(t) => t,
        };
        if sample_dt.is_some() {
            while sample_at(next_sample) <= seg_end && sample_at(next_sample) <= t_end {
                let ts = sample_at(next_sample);
                trace.samples.push(eval_segment(d, &st, regime, ts));
                next_sample += 1;
            }
        }
        trace.regime_intervals.push((st.t, seg_end, regime));
        match ne {
            NextEvent::NoEventBefore(_) => {
                trace.final_state = eval_segment(d, &st, regime, t_end);
                trace.final_regime = regime;
                return Ok(trace);
            }
            NextEvent::Event(e) => {
                if trace.events.len() >= opts.max_events {
                    return Err(Error::EventBudgetExceeded { limit: opts.max_events, t: e.time });
                }
                if let Some(w) = e.warning {
                    trace.warnings.push((e.time, w));
                }
                st = e.after;
                regime = e.regime;
                trace.events.push(e);
            }
        }
    }
}

fn eval_segment<D: Dynamics + ?Sized>(d: &D, st: &State, regime: Regime, t: f64) -> State {
    match regime {
        Regime::Sticking => State::new(t, st.x, 0.0),
        Regime::Flight(s) => {
            let (x, v) = d.flight(st.t, st.x, st.v, s as f64, t);
            let p = d.params();
            State::new(t, x.clamp(p.left, p.right), v)
        }
    }
}
