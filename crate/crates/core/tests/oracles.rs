//! Cross-checks against independent oracles: adaptive Runge-Kutta integration,
//! brute-force event scans and high-precision arithmetic.

use std::f64::consts::PI;

use astro_float::{BigFloat, Consts, RoundingMode};
use ode_solvers::{Dopri5, System, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vibro::model::{flight_propagate, simulate_from, Dynamics, EventKind, EventOptions};
use vibro::orbits::{newton_fixed_point, psi, symmetric_roots, critical_frictions, NewtonOptions};
use vibro::perturbed::{viscous_flight, PerturbedParams};
use vibro::rigorous::certify_fixed_point;
use vibro::rigorous::interval::Interval;
use vibro::strobomap::{jacobian_fd, jacobian_saltation, strobo_map};
use vibro::{Params, State};

/// `x'' = F cos(wt) - s f - mu x'` with the friction sign frozen.
struct FrozenSign {
    p: Params,
    mu: f64,
    s: f64,
}

impl System<f64, Vector2<f64>> for FrozenSign {
    fn system(&self, t: f64, y: &Vector2<f64>, dy: &mut Vector2<f64>) {
        dy[0] = y[1];
        dy[1] = self.p.drive(t) - self.s * self.p.friction - self.mu * y[1];
    }
}

fn rk(p: &Params, mu: f64, s: f64, t0: f64, z0: (f64, f64), t1: f64) -> (f64, f64) {
    if t1 <= t0 {
        return z0;
    }
    let sys = FrozenSign { p: *p, mu, s };
    let mut stepper = Dopri5::new(sys, t0, t1, t1 - t0, Vector2::new(z0.0, z0.1), 1e-10, 1e-10);
    stepper.integrate().expect("integration succeeds");
    let y = stepper.y_out().last().expect("final state");
    (y[0], y[1])
}

#[test]
fn closed_form_flight_matches_rk45() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let p = Params::new(rng.gen_range(0.2..4.0), rng.gen_range(0.5..2.0), rng.gen_range(0.0..1.0), -1.0, 1.0)
            .unwrap();
        let s = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let t0 = rng.gen_range(0.0..10.0);
        let t1 = t0 + rng.gen_range(0.0..3.0);
        let (x0, v0) = (rng.gen_range(-1.0..1.0), rng.gen_range(-3.0..3.0));
        let got = flight_propagate(&p, t0, x0, v0, s, t1);
        let want = rk(&p, 0.0, s, t0, (x0, v0), t1);
        assert!((got.0 - want.0).abs() < 1e-10 && (got.1 - want.1).abs() < 1e-10, "{got:?} vs {want:?}");
    }
}

#[test]
fn viscous_flight_matches_rk45() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for i in 0..200 {
        let mu = if i % 2 == 0 { 10f64.powf(rng.gen_range(-12.0..-1.0)) } else { rng.gen_range(0.0..0.8) };
        let base = Params::new(rng.gen_range(0.2..4.0), 1.0, rng.gen_range(0.0..1.0), -1.0, 1.0).unwrap();
        let pp = PerturbedParams::new(base, 0.0, mu).unwrap();
        let s = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let t0 = rng.gen_range(0.0..10.0);
        let t1 = t0 + rng.gen_range(0.0..3.0);
        let (x0, v0) = (rng.gen_range(-1.0..1.0), rng.gen_range(-3.0..3.0));
        let got = viscous_flight(&pp, t0, x0, v0, s, t1);
        let want = rk(&base, mu, s, t0, (x0, v0), t1);
        assert!((got.0 - want.0).abs() < 1e-10 && (got.1 - want.1).abs() < 1e-10, "mu {mu}: {got:?} vs {want:?}");
    }
}

/// Event-by-event reference integrator: fixed scan step, Runge-Kutta flights
/// and bisection on the integrated state.
struct BruteForce {
    p: Params,
    mu: f64,
    restitution: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mode {
    Flight(f64),
    Stuck,
}

impl BruteForce {
    const SCAN: f64 = 2e-3;

    fn run(&self, z0: (f64, f64), t_end: f64) -> (Vec<(EventKind, f64)>, (f64, f64)) {
        let p = &self.p;
        let mut t = 0.0;
        let mut z = z0;
        let mut mode = Mode::Flight(z0.1.signum());
        let mut events = Vec::new();
        while t < t_end {
            match mode {
                Mode::Flight(s) => {
                    let t1 = (t + Self::SCAN).min(t_end);
                    let z1 = rk(p, self.mu, s, t, z, t1);
                    let out = |w: (f64, f64)| w.0 > p.right || w.0 < p.left;
                    let reversed = |w: (f64, f64)| s * w.1 < 0.0;
                    if !out(z1) && !reversed(z1) {
                        t = t1;
                        z = z1;
                        continue;
                    }
                    let (mut a, mut b) = (t, t1);
                    for _ in 0..60 {
                        let m = 0.5 * (a + b);
                        let zm = rk(p, self.mu, s, t, z, m);
                        if out(zm) || reversed(zm) {
                            b = m;
                        } else {
                            a = m;
                        }
                    }
                    let zb = rk(p, self.mu, s, t, z, b);
                    let za = rk(p, self.mu, s, t, z, a);
                    t = b;
                    if out(zb) {
                        let wall = if zb.0 > p.right { p.right } else { p.left };
                        let kind = if wall == p.right { EventKind::WallHitRight } else { EventKind::WallHitLeft };
                        events.push((kind, b));
                        z = (wall, -self.restitution * za.1);
                        mode = Mode::Flight(-s);
                    } else if p.drive(b).abs() > p.friction {
                        events.push((EventKind::TurningTransverse, b));
                        z = (zb.0, 0.0);
                        mode = Mode::Flight(p.drive(b).signum());
                    } else {
                        events.push((EventKind::StickOnset, b));
                        z = (zb.0, 0.0);
                        mode = Mode::Stuck;
                    }
                }
                Mode::Stuck => {
                    let excess = |u: f64| p.drive(u).abs() - p.friction;
                    let mut a = t;
                    while a < t_end && excess(a + Self::SCAN) <= 0.0 {
                        a += Self::SCAN;
                    }
                    if a >= t_end {
                        t = t_end;
                        break;
                    }
                    let mut b = a + Self::SCAN;
                    for _ in 0..60 {
                        let m = 0.5 * (a + b);
                        if excess(m) > 0.0 {
                            b = m;
                        } else {
                            a = m;
                        }
                    }
                    events.push((EventKind::StickRelease, b));
                    t = b;
                    mode = Mode::Flight(p.drive(b).signum());
                }
            }
        }
        let _ = t;
        (events, z)
    }
}

fn compare_with_engine<D: Dynamics>(d: &D, brute: &BruteForce, z0: (f64, f64), t_end: f64, tol: f64) -> bool {
    let trace = simulate_from(d, State::new(0.0, z0.0, z0.1), t_end, None, &EventOptions::default()).unwrap();
    let (events, z) = brute.run(z0, t_end);
    let spacing = events.windows(2).map(|w| w[1].1 - w[0].1).fold(f64::INFINITY, f64::min);
    if spacing < 1e-2 || trace.warnings.len() > 0 {
        return false;
    }
    assert_eq!(trace.itinerary(), events.iter().map(|e| e.0).collect::<Vec<_>>(), "z0 = {z0:?}");
    for (e, (_, t)) in trace.events.iter().zip(&events) {
        assert!((e.time - t).abs() < tol, "z0 = {z0:?}: event at {} vs {t}", e.time);
    }
    let fin = trace.final_state;
    assert!((fin.x - z.0).abs() < tol && (fin.v - z.1).abs() < tol, "z0 = {z0:?}: {fin:?} vs {z:?}");
    true
}

#[test]
fn event_engine_matches_brute_force_scan() {
    let brute = |p: Params| BruteForce { p, mu: 0.0, restitution: 1.0 };
    let base = Params::baseline();
    assert!(compare_with_engine(&base, &brute(base), (0.1002798898, 0.5419433068), base.period(), 1e-9));
    let chatter = base.with_forcing(0.55);
    assert!(compare_with_engine(&chatter, &brute(chatter), (0.0, 1.5), 12.0, 1e-9));

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut compared = 0;
    for _ in 0..40 {
        let p = Params::new(rng.gen_range(0.3..3.0), 1.0, rng.gen_range(0.0..0.6), -1.0, 1.0).unwrap();
        let z0 = (rng.gen_range(-0.95..0.95), rng.gen_range(-2.5..2.5));
        if compare_with_engine(&p, &brute(p), z0, p.period(), 1e-9) {
            compared += 1;
        }
    }
    assert!(compared >= 30, "only {compared} nondegenerate samples");
}

#[test]
fn perturbed_event_engine_matches_brute_force_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut compared = 0;
    for _ in 0..20 {
        let base = Params::new(rng.gen_range(0.5..2.0), 1.0, rng.gen_range(0.0..0.5), -1.0, 1.0).unwrap();
        let pp = PerturbedParams::new(base, rng.gen_range(0.0..0.2), rng.gen_range(0.0..0.2)).unwrap();
        let brute = BruteForce { p: base, mu: pp.mu_v, restitution: pp.restitution_coeff() };
        let z0 = (rng.gen_range(-0.95..0.95), rng.gen_range(-2.5..2.5));
        if compare_with_engine(&pp, &brute, z0, base.period(), 1e-9) {
            compared += 1;
        }
    }
    assert!(compared >= 15, "only {compared} nondegenerate samples");
}

#[test]
fn newton_agrees_with_brute_force_residual_minimum() {
    let p = Params::baseline();
    let residual = |z: (f64, f64)| {
        let w = strobo_map(&p, z).unwrap();
        (w.0 - z.0).hypot(w.1 - z.1)
    };
    let (mut center, mut half) = ((0.1, 0.55), (0.05, 0.05));
    for _ in 0..12 {
        let n = 20;
        let mut best = (f64::INFINITY, center);
        for i in 0..=n {
            for j in 0..=n {
                let z = (
                    center.0 - half.0 + 2.0 * half.0 * i as f64 / n as f64,
                    center.1 - half.1 + 2.0 * half.1 * j as f64 / n as f64,
                );
                let r = residual(z);
                if r < best.0 {
                    best = (r, z);
                }
            }
        }
        center = best.1;
        half = (half.0 * 0.3, half.1 * 0.3);
    }
    let fp = newton_fixed_point(&p, (0.1, 0.54), &NewtonOptions::default()).unwrap();
    assert!((fp.z.0 - center.0).abs() < 1e-8 && (fp.z.1 - center.1).abs() < 1e-8, "{:?} vs {center:?}", fp.z);
}

#[test]
fn symmetric_roots_match_a_dense_scan() {
    let p = Params::baseline();
    let cf = critical_frictions(&p);
    for k in 1..10 {
        let f = cf.f_sc + (cf.f_imp - cf.f_sc) * k as f64 / 10.0;
        let g = |th: f64| psi(th, f, &p);
        let n = 100_000;
        let mut scanned = Vec::new();
        for i in 0..n {
            let (mut a, mut b) = (PI * i as f64 / n as f64, PI * (i + 1) as f64 / n as f64);
            if g(a) * g(b) < 0.0 {
                for _ in 0..80 {
                    let m = 0.5 * (a + b);
                    if g(a) * g(m) <= 0.0 {
                        b = m;
                    } else {
                        a = m;
                    }
                }
                scanned.push(0.5 * (a + b));
            }
        }
        let roots: Vec<f64> = symmetric_roots(&p, f).into_iter().map(|r| r.0).collect();
        assert_eq!(roots.len(), scanned.len(), "f = {f}");
        for (r, s) in roots.iter().zip(&scanned) {
            assert!((r - s).abs() < 1e-12, "f = {f}: {r} vs {s}");
        }
    }
}

#[test]
fn certificate_contains_float_fixed_point_and_jacobian_spectrum() {
    let p = Params::baseline();
    let fp = newton_fixed_point(&p, (0.1, 0.54), &NewtonOptions::default()).unwrap();
    let cert = certify_fixed_point(&p, fp.z, 1e-9).unwrap();
    let c = &cert.certificate;
    assert!(c.certified());
    for k in 0..2 {
        let z = [fp.z.0, fp.z.1][k];
        assert!(Interval::centered(c.center[k], c.radius).contains(z));
        assert!(cert.contracted_box[k].hull(&Interval::point(z)).width() < 1e-10);
    }
    let (salt, _) = jacobian_saltation(&p, fp.z).unwrap();
    assert!(cert.det.contains(salt.det()) && cert.trace.contains(salt.trace()));
    let fd = jacobian_fd(&p, fp.z, 1e-6).unwrap();
    let gap = |iv: Interval, x: f64| (iv.lo - x).max(x - iv.hi).max(0.0);
    assert!(gap(cert.det, fd.det()) < 1e-8, "{} vs {}", cert.det, fd.det());
    assert!(gap(cert.trace, fd.trace()) < 1e-8, "{} vs {}", cert.trace, fd.trace());
}

#[test]
fn jacobian_enclosure_agrees_with_published_ten_digit_intervals() {
    let p = Params::baseline();
    let fp = newton_fixed_point(&p, (0.1, 0.54), &NewtonOptions::default()).unwrap();
    let cert = certify_fixed_point(&p, fp.z, 1e-9).unwrap();
    let published = [
        [(1.1201046956, 1.1201046957), (-3.2877320427, -3.2877320425)],
        [(0.8425881240, 0.8425881240), (-1.5803915302, -1.5803915302)],
    ];
    let half_digit = 5e-11;
    for i in 0..2 {
        for j in 0..2 {
            let ours = cert.jacobian.m[i][j];
            let (lo, hi) = published[i][j];
            assert!(ours.width() < 1e-8);
            assert!(ours.lo <= hi + half_digit && ours.hi >= lo - half_digit, "a{}{} = {} vs [{lo}, {hi}]", i + 1, j + 1, ours);
        }
    }
}

const PREC: usize = 320;
const RM: RoundingMode = RoundingMode::ToEven;

fn big(x: f64) -> BigFloat {
    BigFloat::from_f64(x, PREC)
}

/// `sum_k sin(k x) exp(-k / n) / k` evaluated in interval arithmetic.
fn interval_series(x: Interval, n: usize) -> Interval {
    (1..=n).fold(Interval::point(0.0), |acc, k| {
        let k = k as f64;
        let term = (x * Interval::point(k)).sin() * Interval::point(-k / n as f64).exp();
        acc + (term / Interval::point(k)).unwrap()
    })
}

fn exact_series(x: f64, n: usize, cc: &mut Consts) -> BigFloat {
    (1..=n).fold(BigFloat::from_f64(0.0, PREC), |acc, k| {
        let kb = big(k as f64);
        let arg = big(-(k as f64)).div(&big(n as f64), PREC, RM);
        let term = big(x).mul(&kb, PREC, RM).sin(PREC, RM, cc).mul(&arg.exp(PREC, RM, cc), PREC, RM);
        acc.add(&term.div(&kb, PREC, RM), PREC, RM)
    })
}

fn encloses(iv: Interval, exact: &BigFloat) -> bool {
    big(iv.lo) <= *exact && *exact <= big(iv.hi)
}

#[test]
fn thousand_term_series_encloses_the_high_precision_value() {
    let mut cc = Consts::new().unwrap();
    for x in [0.1002798898, 1.0, -2.5, 3.0] {
        let iv = interval_series(Interval::point(x), 1000);
        assert!(encloses(iv, &exact_series(x, 1000, &mut cc)), "x = {x}: {iv}");
        assert!(iv.width() < 1e-10, "x = {x}: width {}", iv.width());
    }
}

#[test]
fn interval_range_contains_sampled_exact_values() {
    let mut cc = Consts::new().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let c = rng.gen_range(-3.0..3.0);
        let x = Interval::centered(c, rng.gen_range(1e-6..1e-2));
        let iv = interval_series(x, 50);
        for _ in 0..20 {
            let s = rng.gen_range(x.lo..=x.hi);
            assert!(encloses(iv, &exact_series(s, 50, &mut cc)), "sample {s} escapes {iv}");
        }
    }
}

#[test]
fn critical_friction_matches_high_precision_formula() {
    let mut cc = Consts::new().unwrap();
    let pi = cc.pi(PREC, RM);
    let exact = big(16.0).sub(&big(4.0).mul(&pi, PREC, RM), PREC, RM).div(&pi.mul(&pi, PREC, RM), PREC, RM);
    let got = critical_frictions(&Params::baseline()).f_sc;
    let diff = big(got).sub(&exact, PREC, RM).abs();
    assert!(diff <= big(2.0 * f64::EPSILON * got), "f_sc = {got}");
}
