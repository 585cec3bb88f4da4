//! Validated numerics for the stroboscopic map: interval enclosures of one
//! period, Krawczyk fixed-point certification and the low-order
//! non-resonance certificate.

pub mod interval;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EventKind, EventOptions, Params};
use crate::strobomap::{jacobian_saltation_with, period_trace};

pub use interval::{IMat2, Interval};

/// Target width of a bracketed event time (a few ulps at the event times of
/// interest); bisection also stops once the predicate can no longer decide.
pub const EVENT_WIDTH: f64 = 1e-15;
/// Maximum halvings per event-time bisection.
pub const MAX_HALVINGS: usize = 50;
/// Maximum subdivision depth of the sign checks along a flight.
const MAX_SPLIT_DEPTH: usize = 40;

/// Resonances of order at most four as `(p, q)` with rotation `p / q`.
pub const LOW_ORDER_RESONANCES: [(u32, u32); 7] = [(1, 4), (1, 3), (2, 5), (1, 2), (3, 5), (2, 3), (3, 4)];

/// Interval state of a free flight started at an interval time.
#[derive(Debug, Clone, Copy)]
struct Flight {
    t0: Interval,
    x0: Interval,
    v0: Interval,
    s: f64,
}

struct Consts {
    big_f: Interval,
    w: Interval,
    f: Interval,
    left: f64,
    right: f64,
}

impl Consts {
    fn new(p: &Params) -> Self {
        Self { big_f: p.forcing.into(), w: p.omega.into(), f: p.friction.into(), left: p.left, right: p.right }
    }

    fn drive(&self, t: Interval) -> Interval {
        self.big_f * (self.w * t).cos()
    }
}

impl Flight {
    fn x(&self, c: &Consts, t: Interval) -> Interval {
        let d = t - self.t0;
        let w2 = c.w.sqr();
        let fw2 = (c.big_f / w2).expect("omega is nonzero");
        let fw = (c.big_f / c.w).expect("omega is nonzero");
        let cos_term = (c.w * t).cos() - (c.w * self.t0).cos();
        self.x0 + self.v0 * d - fw2 * cos_term - fw * (c.w * self.t0).sin() * d - c.f * d.sqr() * (0.5 * self.s)
    }

    fn v(&self, c: &Consts, t: Interval) -> Interval {
        let d = t - self.t0;
        let fw = (c.big_f / c.w).expect("omega is nonzero");
        self.v0 + fw * ((c.w * t).sin() - (c.w * self.t0).sin()) - c.f * d * self.s
    }

    fn a(&self, c: &Consts, t: Interval) -> Interval {
        c.drive(t) - c.f * self.s
    }
}

/// True if `pred` holds on every piece of an adaptive subdivision of `[a, b]`.
fn holds_on(a: f64, b: f64, depth: usize, pred: &dyn Fn(Interval) -> bool) -> bool {
    if a > b {
        return true;
    }
    if pred(Interval::new(a, b)) {
        return true;
    }
    if depth == 0 || b - a < 1e-15 {
        return false;
    }
    let m = 0.5 * (a + b);
    holds_on(a, m, depth - 1, pred) && holds_on(m, b, depth - 1, pred)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalEvent {
    pub kind: EventKind,
    pub time: Interval,
    pub v_minus: Interval,
}

/// Interval image of a box under one period, the interval Jacobian over the
/// box and the bracketed event times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalPeriod {
    pub image: [Interval; 2],
    pub jacobian: IMat2,
    pub events: Vec<IntervalEvent>,
}

/// Brackets the zero of an increasing function `g` near `guess`.
fn bracket_event(g: &dyn Fn(Interval) -> Interval, guess: f64, after: f64, kind: EventKind) -> Result<Interval> {
    let mut delta = 1e-7;
    let (mut a, mut b);
    loop {
        a = (guess - delta).max(after);
        b = guess + delta;
        if g(Interval::point(a)).is_negative() && g(Interval::point(b)).is_positive() {
            break;
        }
        delta *= 4.0;
        if delta > 1e-2 {
            return Err(Error::ItineraryAmbiguous(format!("cannot bracket {} near t = {guess}", kind.name())));
        }
    }
    let (mut lo, mut hi) = (a, b);
    for _ in 0..MAX_HALVINGS {
        if hi - lo < 0.5 * EVENT_WIDTH {
            break;
        }
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        if g(Interval::point(m)).is_negative() {
            lo = m;
        } else {
            hi = m;
        }
    }
    let lower = lo;
    let (mut lo, mut hi) = (lower, b);
    for _ in 0..MAX_HALVINGS {
        if hi - lo < 0.5 * EVENT_WIDTH {
            break;
        }
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        if g(Interval::point(m)).is_positive() {
            hi = m;
        } else {
            lo = m;
        }
    }
    Ok(Interval::new(lower, hi))
}

fn ambiguous(what: &str, t: f64) -> Error {
    Error::ItineraryAmbiguous(format!("{what} near t = {t}"))
}

/// Propagates the box `[x] x [v]` over one period along the itinerary of the
/// float orbit from `guess`, verifying on the way that every point of the box
/// follows that itinerary (sign-definite velocities between events,
/// transverse turnings, no missed wall contact).
pub fn interval_period(p: &Params, zbox: [Interval; 2], guess: (f64, f64)) -> Result<IntervalPeriod> {
    p.validate()?;
    let opts = EventOptions::default();
    let float_trace = period_trace(p, guess, &opts)?;
    let c = Consts::new(p);
    if !(zbox[0].lo > p.left && zbox[0].hi < p.right) {
        return Err(ambiguous("initial box touches a wall", 0.0));
    }
    let s0 = if zbox[1].is_positive() {
        1.0
    } else if zbox[1].is_negative() {
        -1.0
    } else {
        return Err(ambiguous("initial velocity interval contains zero", 0.0));
    };
    let period = (Interval::pi() * 2.0 / c.w).expect("omega is nonzero");
    let mut fl = Flight { t0: Interval::point(0.0), x0: zbox[0], v0: zbox[1], s: s0 };
    let mut from_turning = false;
    let mut jac = IMat2::identity();
    let mut events = Vec::new();

    for ev in &float_trace.events {
        let kind = ev.kind;
        let s = fl.s;
        let cur = fl;
        let cr = &c;
        let g: Box<dyn Fn(Interval) -> Interval> = match kind {
            EventKind::WallHitRight if s > 0.0 => Box::new(move |t| cur.x(cr, t) - cr.right),
            EventKind::WallHitLeft if s < 0.0 => Box::new(move |t| Interval::point(cr.left) - cur.x(cr, t)),
            EventKind::TurningTransverse => Box::new(move |t| cur.v(cr, t) * (-s)),
            _ => return Err(ambiguous(&format!("event {} is not interval-separable", kind.name()), ev.time)),
        };
        let start = verify_departure(&c, &fl, from_turning)?;
        let te = bracket_event(&*g, ev.time, fl.t0.hi, kind)?;
        let moving = |t: Interval| (fl.v(&c, t) * s).is_positive();
        let check_to = if kind == EventKind::TurningTransverse { te.lo } else { te.hi };
        if !holds_on(start, check_to, MAX_SPLIT_DEPTH, &moving) {
            return Err(ambiguous("velocity changes sign inside a flight", ev.time));
        }
        let dt = te - fl.t0;
        let shear = IMat2::new(1.0.into(), dt, 0.0.into(), 1.0.into());
        let (salt, next, v_minus) = match kind {
            EventKind::TurningTransverse => {
                let transverse = (c.drive(te) * (-s) - c.f).is_positive();
                let x_peak = fl.x(&c, te);
                let inside = if s > 0.0 { x_peak.hi < c.right } else { x_peak.lo > c.left };
                if !transverse || !inside {
                    return Err(ambiguous("turning is not certifiably transverse", ev.time));
                }
                let a = c.drive(te).abs();
                let ratio = ((a - c.f) / (a + c.f))?;
                let salt = IMat2::new(1.0.into(), 0.0.into(), 0.0.into(), ratio);
                let next = Flight { t0: te, x0: x_peak, v0: Interval::point(0.0), s: -s };
                (salt, next, Interval::point(0.0))
            }
            _ => {
                let vm = fl.v(&c, te);
                let wall = if kind == EventKind::WallHitRight { c.right } else { c.left };
                let alpha = ((c.drive(te) * 2.0) / vm)?;
                let salt = IMat2::new((-1.0).into(), 0.0.into(), alpha, (-1.0).into());
                let next = Flight { t0: te, x0: Interval::point(wall), v0: -vm, s: -s };
                (salt, next, vm)
            }
        };
        jac = salt * (shear * jac);
        events.push(IntervalEvent { kind, time: te, v_minus });
        from_turning = kind == EventKind::TurningTransverse;
        fl = next;
    }

    let start = verify_departure(&c, &fl, from_turning)?;
    let s = fl.s;
    let moving = |t: Interval| (fl.v(&c, t) * s).is_positive();
    if !holds_on(start, period.hi, MAX_SPLIT_DEPTH, &moving) {
        return Err(ambiguous("velocity changes sign before the end of the period", period.lo));
    }
    let x_end = fl.x(&c, period);
    let inside = if s > 0.0 { x_end.hi < c.right } else { x_end.lo > c.left };
    if !inside {
        return Err(ambiguous("final flight reaches a wall", period.lo));
    }
    let dt = period - fl.t0;
    jac = IMat2::new(1.0.into(), dt, 0.0.into(), 1.0.into()) * jac;
    Ok(IntervalPeriod { image: [x_end, fl.v(&c, period)], jacobian: jac, events })
}

/// Start of the window on which the velocity must be sign-definite. After a
/// turning the velocity starts at zero, so the first stretch is covered by a
/// sign-definite acceleration instead.
fn verify_departure(c: &Consts, fl: &Flight, from_turning: bool) -> Result<f64> {
    if !from_turning {
        return Ok(fl.t0.lo);
    }
    let mut h = 1e-9_f64.max(4.0 * fl.t0.width());
    for _ in 0..30 {
        let window = Interval::new(fl.t0.lo, fl.t0.hi + h);
        let pushes = (fl.a(c, window) * fl.s).is_positive();
        if !pushes {
            return Err(ambiguous("friction does not release after a turning", fl.t0.lo));
        }
        if (fl.v(c, Interval::point(fl.t0.hi + h)) * fl.s).is_positive() {
            return Ok(fl.t0.hi + h);
        }
        h *= 2.0;
    }
    Err(ambiguous("velocity does not leave zero after a turning", fl.t0.lo))
}

/// Interval Jacobian over one period for the box `fp_box` (the float orbit from
/// its midpoint fixes the itinerary).
pub fn interval_variational(p: &Params, fp_box: [Interval; 2]) -> Result<IntervalPeriod> {
    interval_period(p, fp_box, (fp_box[0].mid(), fp_box[1].mid()))
}

/// A map `G` on `R^N` with interval extensions of `G` and of its Jacobian.
pub trait IntervalMap<const N: usize> {
    fn eval(&self, z: &[Interval; N]) -> Result<[Interval; N]>;
    fn jacobian(&self, z: &[Interval; N]) -> Result<[[Interval; N]; N]>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    UniqueFixedPointInBox,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub center: Vec<f64>,
    pub radius: f64,
    pub preconditioner: Vec<Vec<f64>>,
    pub krawczyk_image: Vec<Interval>,
    pub verdict: Verdict,
    /// Smallest gap between the Krawczyk image and the box boundary
    /// (negative when the image leaves the box).
    pub margin: f64,
}

impl Certificate {
    pub fn certified(&self) -> bool {
        self.verdict == Verdict::UniqueFixedPointInBox
    }
}

/// Krawczyk operator image of the box `center +- radius`.
pub fn krawczyk_image<const N: usize, G: IntervalMap<N>>(
    g: &G,
    zbox: &[Interval; N],
    center: [f64; N],
    c: [[f64; N]; N],
) -> Result<[Interval; N]> {
    let gc = g.eval(&center.map(Interval::point))?;
    let jb = g.jacobian(zbox)?;
    let mut out = [Interval::point(0.0); N];
    for i in 0..N {
        let mut acc = Interval::point(center[i]);
        for k in 0..N {
            acc = acc - Interval::point(c[i][k]) * gc[k];
        }
        for j in 0..N {
            let mut m = Interval::point(if i == j { 1.0 } else { 0.0 });
            for k in 0..N {
                m = m - Interval::point(c[i][k]) * jb[k][j];
            }
            acc = acc + m * (zbox[j] - center[j]);
        }
        out[i] = acc;
    }
    Ok(out)
}

/// Krawczyk test `K([z]) subset int([z])` on the box `center +- radius` with
/// the preconditioner `c` treated as exact.
pub fn krawczyk_certify<const N: usize, G: IntervalMap<N>>(
    g: &G,
    center: [f64; N],
    radius: f64,
    c: [[f64; N]; N],
) -> Certificate {
    let zbox = center.map(|x| Interval::centered(x, radius));
    let image = krawczyk_image(g, &zbox, center, c);
    let (verdict, margin, image) = match image {
        Ok(k) => {
            let margin = (0..N)
                .map(|i| (k[i].lo - zbox[i].lo).min(zbox[i].hi - k[i].hi))
                .fold(f64::INFINITY, f64::min);
            let inside = (0..N).all(|i| k[i].interior_of(&zbox[i]));
            (if inside { Verdict::UniqueFixedPointInBox } else { Verdict::Inconclusive }, margin, k.to_vec())
        }
        Err(_) => (Verdict::Inconclusive, f64::NEG_INFINITY, Vec::new()),
    };
    Certificate {
        center: center.to_vec(),
        radius,
        preconditioner: c.iter().map(|r| r.to_vec()).collect(),
        krawczyk_image: image,
        verdict,
        margin,
    }
}

/// `G(z) = Phi(z) - z` for the stroboscopic map, with the itinerary of the
/// float orbit from `guess`.
pub struct StroboResidual {
    pub params: Params,
    pub guess: (f64, f64),
}

impl IntervalMap<2> for StroboResidual {
    fn eval(&self, z: &[Interval; 2]) -> Result<[Interval; 2]> {
        let r = interval_period(&self.params, *z, self.guess)?;
        Ok([r.image[0] - z[0], r.image[1] - z[1]])
    }

    fn jacobian(&self, z: &[Interval; 2]) -> Result<[[Interval; 2]; 2]> {
        Ok(interval_period(&self.params, *z, self.guess)?.jacobian.sub_identity().m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonResonance {
    pub theta: Interval,
    pub rotation: Interval,
    /// Lower bound of the distance from the rotation interval to the nearest
    /// low-order resonance.
    pub min_distance: f64,
    pub nearest: (u32, u32),
    pub certified: bool,
}

/// `theta = acos(tr / 2)`, rotation `theta / (2 pi)` and the distance to the
/// resonances of order at most four.
pub fn nonresonance_check(trace: Interval) -> Result<NonResonance> {
    if trace.lo <= -2.0 || trace.hi >= 2.0 {
        return Err(Error::NotCertifiablyElliptic { lo: trace.lo, hi: trace.hi });
    }
    let theta = (trace * 0.5).acos()?;
    let rotation = (theta / (Interval::pi() * 2.0))?;
    let mut best = (f64::INFINITY, (0, 1));
    for &(num, den) in &LOW_ORDER_RESONANCES {
        let q = (Interval::point(num as f64) / Interval::point(den as f64))?;
        let d = if rotation.hi < q.lo {
            (q.lo - rotation.hi).next_down().max(0.0)
        } else if rotation.lo > q.hi {
            (rotation.lo - q.hi).next_down().max(0.0)
        } else {
            0.0
        };
        if d < best.0 {
            best = (d, (num, den));
        }
    }
    let certified = best.0 > 0.0 && best.0 > rotation.width();
    Ok(NonResonance { theta, rotation, min_distance: best.0, nearest: best.1, certified })
}

/// Full certification of a fixed point of the stroboscopic map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointCertificate {
    pub certificate: Certificate,
    /// Box after intersecting with repeated Krawczyk images.
    pub contracted_box: [Interval; 2],
    pub jacobian: IMat2,
    pub det: Interval,
    pub trace: Interval,
    pub events: Vec<IntervalEvent>,
    pub nonresonance: Option<NonResonance>,
}

/// Certifies a unique fixed point in `center +- radius`, contracts the box and
/// encloses the linearization there.
pub fn certify_fixed_point(p: &Params, center: (f64, f64), radius: f64) -> Result<FixedPointCertificate> {
    let (j, _) = jacobian_saltation_with(p, center, &EventOptions::default())?;
    let a = j.sub_identity();
    let inv = a.inverse().ok_or(Error::SingularJacobian { det: a.det() })?;
    let c = inv.rows();
    let g = StroboResidual { params: *p, guess: center };
    let z = [center.0, center.1];
    let certificate = krawczyk_certify(&g, z, radius, c);
    let mut zbox = z.map(|x| Interval::centered(x, radius));
    if certificate.certified() {
        for _ in 0..20 {
            let k = krawczyk_image(&g, &zbox, z, c)?;
            let next = [
                k[0].intersect(&zbox[0]).unwrap_or(zbox[0]),
                k[1].intersect(&zbox[1]).unwrap_or(zbox[1]),
            ];
            let shrunk = next[0].width() < 0.5 * zbox[0].width() || next[1].width() < 0.5 * zbox[1].width();
            zbox = next;
            if !shrunk {
                break;
            }
        }
    }
    let period = interval_period(p, zbox, center)?;
    let det = period.jacobian.det();
    let trace = period.jacobian.trace();
    let nonresonance = nonresonance_check(trace).ok();
    Ok(FixedPointCertificate {
        certificate,
        contracted_box: zbox,
        jacobian: period.jacobian,
        det,
        trace,
        events: period.events,
        nonresonance,
    })
}

/// Exact decimal expansion of a finite `f64`.
pub fn exact_decimal(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, exp) = if exp_bits == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp_bits - 1075) };
    if mant == 0 {
        return format!("{sign}0");
    }
    if exp >= 0 {
        return format!("{sign}{}", BigUint::from(mant) << exp as usize);
    }
    let k = (-exp) as u32;
    let digits = (BigUint::from(mant) * BigUint::from(5u32).pow(k)).to_string();
    let k = k as usize;
    let (int_part, frac_part) = if digits.len() > k {
        (digits[..digits.len() - k].to_string(), digits[digits.len() - k..].to_string())
    } else {
        ("0".to_string(), format!("{}{}", "0".repeat(k - digits.len()), digits))
    };
    let frac_part = frac_part.trim_end_matches('0');
    if frac_part.is_empty() {
        format!("{sign}{int_part}")
    } else {
        format!("{sign}{int_part}.{frac_part}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecimalInterval {
    pub lo: String,
    pub hi: String,
}

impl From<Interval> for DecimalInterval {
    fn from(x: Interval) -> Self {
        Self { lo: exact_decimal(x.lo), hi: exact_decimal(x.hi) }
    }
}

/// JSON-ready record of a certification with every number as an exact decimal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofLog {
    pub verdict: Verdict,
    pub center: Vec<String>,
    pub radius: String,
    pub preconditioner: Vec<Vec<String>>,
    pub krawczyk_image: Vec<DecimalInterval>,
    pub margin: String,
    pub contracted_box: Vec<DecimalInterval>,
    pub event_times: Vec<(String, DecimalInterval)>,
    pub jacobian: Vec<Vec<DecimalInterval>>,
    pub det: DecimalInterval,
    pub trace: DecimalInterval,
    pub theta: Option<DecimalInterval>,
    pub rotation: Option<DecimalInterval>,
    pub min_resonance_distance: Option<String>,
    pub nonresonant: bool,
}

impl FixedPointCertificate {
    pub fn proof_log(&self) -> ProofLog {
        let c = &self.certificate;
        ProofLog {
            verdict: c.verdict,
            center: c.center.iter().map(|&x| exact_decimal(x)).collect(),
            radius: exact_decimal(c.radius),
            preconditioner: c.preconditioner.iter().map(|r| r.iter().map(|&x| exact_decimal(x)).collect()).collect(),
            krawczyk_image: c.krawczyk_image.iter().map(|&x| x.into()).collect(),
            margin: exact_decimal(c.margin),
            contracted_box: self.contracted_box.iter().map(|&x| x.into()).collect(),
            event_times: self.events.iter().map(|e| (e.kind.name().to_string(), e.time.into())).collect(),
            jacobian: self.jacobian.m.iter().map(|r| r.iter().map(|&x| x.into()).collect()).collect(),
            det: self.det.into(),
            trace: self.trace.into(),
            theta: self.nonresonance.map(|n| n.theta.into()),
            rotation: self.nonresonance.map(|n| n.rotation.into()),
            min_resonance_distance: self.nonresonance.map(|n| exact_decimal(n.min_distance)),
            nonresonant: self.nonresonance.is_some_and(|n| n.certified),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Sqrt2;

    impl IntervalMap<1> for Sqrt2 {
        fn eval(&self, z: &[Interval; 1]) -> Result<[Interval; 1]> {
            Ok([z[0].sqr() - 2.0])
        }
        fn jacobian(&self, z: &[Interval; 1]) -> Result<[[Interval; 1]; 1]> {
            Ok([[z[0] * 2.0]])
        }
    }

    #[test]
    fn scalar_root_is_certified_in_small_box() {
        let c = [[1.0 / (2.0 * 1.41421356)]];
        let cert = krawczyk_certify(&Sqrt2, [1.41421356], 1e-6, c);
        assert!(cert.certified());
        assert!(cert.margin > 0.0);
    }

    #[test]
    fn scalar_root_is_inconclusive_in_large_box() {
        let c = [[1.0 / (2.0 * 1.41421356)]];
        assert_eq!(krawczyk_certify(&Sqrt2, [1.41421356], 2.0, c).verdict, Verdict::Inconclusive);
    }

    #[test]
    fn exact_resonance_is_not_certified() {
        let n = nonresonance_check(Interval::point(0.0)).unwrap();
        assert!(n.theta.contains(std::f64::consts::FRAC_PI_2));
        assert!(n.min_distance < 1e-15);
        assert_eq!(n.nearest, (1, 4));
        assert!(!n.certified);
    }

    #[test]
    fn trace_touching_minus_two_is_rejected() {
        assert!(matches!(
            nonresonance_check(Interval::new(-2.1, -1.9)),
            Err(Error::NotCertifiablyElliptic { .. })
        ));
    }

    #[test]
    fn exact_decimal_expansions() {
        assert_eq!(exact_decimal(0.5), "0.5");
        assert_eq!(exact_decimal(-3.0), "-3");
        assert_eq!(exact_decimal(0.1), "0.1000000000000000055511151231257827021181583404541015625");
        assert_eq!(exact_decimal(2f64.powi(60)), "1152921504606846976");
    }
}
