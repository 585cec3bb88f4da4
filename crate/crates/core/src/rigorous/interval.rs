//! Outward-rounded interval arithmetic on `f64`.
//!
//! Every basic operation is evaluated in round-to-nearest and then widened by
//! one ulp on each side, which encloses the exact result. Library
//! transcendental functions are widened by [`LIBM_ULPS`] ulps.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ulps of widening applied to `sin`, `cos`, `exp`, `acos` and `sqrt` results.
pub const LIBM_ULPS: usize = 3;

fn down(x: f64) -> f64 {
    x.next_down()
}

fn up(x: f64) -> f64 {
    x.next_up()
}

fn down_n(mut x: f64, n: usize) -> f64 {
    for _ in 0..n {
        x = x.next_down();
    }
    x
}

fn up_n(mut x: f64, n: usize) -> f64 {
    for _ in 0..n {
        x = x.next_up();
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    /// Panics on NaN or reversed endpoints.
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(!lo.is_nan() && !hi.is_nan(), "NaN interval endpoint");
        assert!(lo <= hi, "reversed interval [{lo}, {hi}]");
        Self { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Self::new(x, x)
    }

    /// `[c - r, c + r]` rounded outward.
    pub fn centered(c: f64, r: f64) -> Self {
        Self::new(down(c - r), up(c + r))
    }

    /// Enclosure of pi.
    pub fn pi() -> Self {
        Self::new(std::f64::consts::PI, up(std::f64::consts::PI))
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * self.lo + 0.5 * self.hi
    }

    pub fn rad(&self) -> f64 {
        up(0.5 * self.width())
    }

    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    pub fn subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    /// Strict inclusion in the interior of `other`.
    pub fn interior_of(&self, other: &Interval) -> bool {
        other.lo < self.lo && self.hi < other.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then(|| Interval::new(lo, hi))
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }

    pub fn is_positive(&self) -> bool {
        self.lo > 0.0
    }

    pub fn is_negative(&self) -> bool {
        self.hi < 0.0
    }

    pub fn abs(&self) -> Interval {
        if self.lo >= 0.0 {
            *self
        } else if self.hi <= 0.0 {
            -*self
        } else {
            Interval::new(0.0, self.mag())
        }
    }

    pub fn sqr(&self) -> Interval {
        let a = self.abs();
        Interval::new(down(a.lo * a.lo).max(0.0), up(a.hi * a.hi))
    }

    pub fn scale(&self, k: f64) -> Interval {
        *self * Interval::point(k)
    }

    pub fn recip(&self) -> Result<Interval> {
        Interval::point(1.0) / *self
    }

    pub fn sqrt(&self) -> Result<Interval> {
        if self.lo < 0.0 {
            return Err(Error::DomainError(format!("sqrt of [{}, {}]", self.lo, self.hi)));
        }
        Ok(Interval::new(down_n(self.lo.sqrt(), LIBM_ULPS).max(0.0), up_n(self.hi.sqrt(), LIBM_ULPS)))
    }

    pub fn exp(&self) -> Interval {
        Interval::new(down_n(self.lo.exp(), LIBM_ULPS).max(0.0), up_n(self.hi.exp(), LIBM_ULPS))
    }

    /// Arc cosine; the argument must lie in `[-1, 1]`.
    pub fn acos(&self) -> Result<Interval> {
        if self.lo < -1.0 || self.hi > 1.0 {
            return Err(Error::DomainError(format!("acos of [{}, {}]", self.lo, self.hi)));
        }
        let lo = down_n(self.hi.acos(), LIBM_ULPS).max(0.0);
        let hi = up_n(self.lo.acos(), LIBM_ULPS).min(up(std::f64::consts::PI));
        Ok(Interval::new(lo, hi))
    }

    pub fn sin(&self) -> Interval {
        self.periodic(f64::sin, std::f64::consts::FRAC_PI_2)
    }

    pub fn cos(&self) -> Interval {
        self.periodic(f64::cos, 0.0)
    }

    /// Range of `sin` or `cos` given the phase `peak` of a maximum; minima sit
    /// half a period later. Critical points are included with a small slack,
    /// which can only widen the result.
    fn periodic(&self, f: fn(f64) -> f64, peak: f64) -> Interval {
        let tau = std::f64::consts::TAU;
        if self.width() >= tau {
            return Interval::new(-1.0, 1.0);
        }
        let a = f(self.lo);
        let b = f(self.hi);
        let mut lo = down_n(a.min(b), LIBM_ULPS);
        let mut hi = up_n(a.max(b), LIBM_ULPS);
        let slack = 1e-15 * (1.0 + self.mag());
        let hits = |phase: f64| {
            let k0 = ((self.lo - phase) / tau).floor() - 1.0;
            (0..4).any(|j| {
                let c = phase + (k0 + j as f64) * tau;
                c >= self.lo - slack && c <= self.hi + slack
            })
        };
        if hits(peak) {
            hi = 1.0;
        }
        if hits(peak + std::f64::consts::PI) {
            lo = -1.0;
        }
        Interval::new(lo.max(-1.0), hi.min(1.0))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

impl From<f64> for Interval {
    fn from(x: f64) -> Self {
        Interval::point(x)
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval::new(-self.hi, -self.lo)
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, o: Interval) -> Interval {
        Interval::new(down(self.lo + o.lo), up(self.hi + o.hi))
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, o: Interval) -> Interval {
        Interval::new(down(self.lo - o.hi), up(self.hi - o.lo))
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, o: Interval) -> Interval {
        let p = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval::new(down(lo), up(hi))
    }
}

impl Div for Interval {
    type Output = Result<Interval>;
    fn div(self, o: Interval) -> Result<Interval> {
        if o.contains_zero() {
            return Err(Error::DivisionByZeroInterval);
        }
        let q = [self.lo / o.lo, self.lo / o.hi, self.hi / o.lo, self.hi / o.hi];
        let lo = q.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Interval::new(down(lo), up(hi)))
    }
}

impl Add<f64> for Interval {
    type Output = Interval;
    fn add(self, o: f64) -> Interval {
        self + Interval::point(o)
    }
}

impl Sub<f64> for Interval {
    type Output = Interval;
    fn sub(self, o: f64) -> Interval {
        self - Interval::point(o)
    }
}

impl Mul<f64> for Interval {
    type Output = Interval;
    fn mul(self, o: f64) -> Interval {
        self * Interval::point(o)
    }
}

/// 2x2 interval matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IMat2 {
    pub m: [[Interval; 2]; 2],
}

impl IMat2 {
    pub fn new(a11: Interval, a12: Interval, a21: Interval, a22: Interval) -> Self {
        Self { m: [[a11, a12], [a21, a22]] }
    }

    pub fn identity() -> Self {
        Self::from_f64([[1.0, 0.0], [0.0, 1.0]])
    }

    pub fn from_f64(a: [[f64; 2]; 2]) -> Self {
        Self::new(a[0][0].into(), a[0][1].into(), a[1][0].into(), a[1][1].into())
    }

    pub fn det(&self) -> Interval {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> Interval {
        self.m[0][0] + self.m[1][1]
    }

    pub fn apply(&self, v: [Interval; 2]) -> [Interval; 2] {
        [self.m[0][0] * v[0] + self.m[0][1] * v[1], self.m[1][0] * v[0] + self.m[1][1] * v[1]]
    }

    pub fn sub_identity(&self) -> Self {
        let mut r = *self;
        r.m[0][0] = r.m[0][0] - 1.0;
        r.m[1][1] = r.m[1][1] - 1.0;
        r
    }

    pub fn contains(&self, a: [[f64; 2]; 2]) -> bool {
        (0..2).all(|i| (0..2).all(|j| self.m[i][j].contains(a[i][j])))
    }

    pub fn max_width(&self) -> f64 {
        self.m.iter().flatten().map(|x| x.width()).fold(0.0, f64::max)
    }
}

impl Mul for IMat2 {
    type Output = IMat2;
    fn mul(self, o: IMat2) -> IMat2 {
        let e = |i: usize, j: usize| self.m[i][0] * o.m[0][j] + self.m[i][1] * o.m[1][j];
        IMat2::new(e(0, 0), e(0, 1), e(1, 0), e(1, 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn addition_is_tight() {
        let s = Interval::point(1.0) + Interval::point(2.0);
        assert!(s.contains(3.0));
        assert!(s.width() <= 2.0 * f64::EPSILON * 4.0);
    }

    #[test]
    fn sine_over_half_turn() {
        let s = Interval::new(0.0, std::f64::consts::PI).sin();
        assert!(s.lo <= 0.0 && s.hi == 1.0);
        let c = Interval::new(3.0, 3.5).cos();
        assert_eq!(c.lo, -1.0);
    }

    #[test]
    fn division_by_zero_interval_fails() {
        assert_eq!(Interval::point(1.0) / Interval::new(-1.0, 1.0), Err(Error::DivisionByZeroInterval));
    }

    #[test]
    fn acos_domain() {
        assert!(Interval::new(-1.1, 0.0).acos().is_err());
        let a = Interval::point(0.0).acos().unwrap();
        assert!(a.contains(std::f64::consts::FRAC_PI_2));
    }

    #[test]
    fn pi_enclosure_brackets_the_constant() {
        let p = Interval::pi();
        assert!(p.lo <= std::f64::consts::PI && p.hi > std::f64::consts::PI);
        assert_eq!(p.width(), p.lo.next_up() - p.lo);
    }

    #[test]
    fn matrix_product_encloses_point_product() {
        let a = IMat2::from_f64([[1.0, 2.0], [3.0, 4.0]]);
        let b = IMat2::from_f64([[0.5, -1.0], [2.0, 0.25]]);
        assert!((a * b).contains([[4.5, -0.5], [9.5, -2.0]]));
        assert!((a * b).det().contains(-2.0 * (0.125 + 2.0)));
    }
}
