//! Trapezoidal fuzzy numbers on the unit interval.
//!
//! A [`UnitFuzzyNumber`] is a possibility function over proportions: zero
//! outside its support `[a, d]`, one on its core `[b, c]`, and linear on the
//! two ramps in between. All arithmetic is alpha-cut interval arithmetic whose
//! result is rebuilt as the trapezoid through the support cut and the core cut,
//! clamped to `[0, 1]`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FuzzyError {
    #[error("value {0} lies outside the unit interval")]
    OutOfDomain(f64),
    #[error("corners must satisfy 0 <= a <= b <= c <= d <= 1, got ({a}, {b}, {c}, {d})")]
    Unordered { a: f64, b: f64, c: f64, d: f64 },
    #[error("alpha must lie in (0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("interval bounds must satisfy 0 <= lo <= hi <= 1, got [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
}

/// Closed sub-interval of `[0, 1]`; the carrier of alpha-cuts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, FuzzyError> {
        if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || hi > 1.0 || lo > hi {
            return Err(FuzzyError::InvalidInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    /// Builds an interval from arbitrary reals, clamping both ends into `[0, 1]`.
    fn clamped(lo: f64, hi: f64) -> Self {
        let lo = lo.clamp(0.0, 1.0);
        let hi = hi.clamp(0.0, 1.0).max(lo);
        Self { lo, hi }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    /// Interval product, clamped to the unit interval.
    pub fn mul(&self, other: &Interval) -> Interval {
        let p = [
            self.lo * other.lo,
            self.lo * other.hi,
            self.hi * other.lo,
            self.hi * other.hi,
        ];
        let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval::clamped(lo, hi)
    }

    /// Interval sum, clamped at one.
    pub fn add(&self, other: &Interval) -> Interval {
        Interval::clamped(self.lo + other.lo, self.hi + other.hi)
    }

    /// Interval difference `self - other`, clamped at zero.
    pub fn sub_bounded(&self, other: &Interval) -> Interval {
        Interval::clamped(self.lo - other.hi, self.hi - other.lo)
    }

    pub fn complement(&self) -> Interval {
        Interval::clamped(1.0 - self.hi, 1.0 - self.lo)
    }

    pub fn min(&self, other: &Interval) -> Interval {
        Interval::clamped(self.lo.min(other.lo), self.hi.min(other.hi))
    }

    pub fn max(&self, other: &Interval) -> Interval {
        Interval::clamped(self.lo.max(other.lo), self.hi.max(other.hi))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hedge {
    /// Halves both ramps toward the core ("very").
    Intensify,
    /// Doubles both ramps away from the core ("somewhat").
    Dilate,
}

#[derive(Serialize, Deserialize)]
struct Corners {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

/// Trapezoidal possibility function `(a, b, c, d)` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Corners", into = "Corners")]
pub struct UnitFuzzyNumber {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl TryFrom<Corners> for UnitFuzzyNumber {
    type Error = FuzzyError;

    fn try_from(k: Corners) -> Result<Self, Self::Error> {
        UnitFuzzyNumber::new(k.a, k.b, k.c, k.d)
    }
}

impl From<UnitFuzzyNumber> for Corners {
    fn from(f: UnitFuzzyNumber) -> Self {
        Corners {
            a: f.a,
            b: f.b,
            c: f.c,
            d: f.d,
        }
    }
}

impl UnitFuzzyNumber {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self, FuzzyError> {
        let finite = a.is_finite() && b.is_finite() && c.is_finite() && d.is_finite();
        if !finite || !(0.0 <= a && a <= b && b <= c && c <= d && d <= 1.0) {
            return Err(FuzzyError::Unordered { a, b, c, d });
        }
        Ok(Self { a, b, c, d })
    }

    /// Zero-width fuzzy number at `x`.
    pub fn crisp(x: f64) -> Result<Self, FuzzyError> {
        if !(0.0..=1.0).contains(&x) {
            return Err(FuzzyError::OutOfDomain(x));
        }
        Ok(Self {
            a: x,
            b: x,
            c: x,
            d: x,
        })
    }

    /// Rebuilds a trapezoid from its support and core cuts. The core is
    /// forced inside the support so rounding noise cannot break the ordering.
    pub fn from_cuts(support: Interval, core: Interval) -> Self {
        let a = support.lo;
        let d = support.hi.max(a);
        let b = core.lo.clamp(a, d);
        let c = core.hi.clamp(b, d);
        Self { a, b, c, d }
    }

    /// Corners clamped into the unit interval and put in order.
    pub fn from_corners_clamped(corners: [f64; 4]) -> Self {
        let mut k = corners.map(|v| v.clamp(0.0, 1.0));
        k.sort_by(f64::total_cmp);
        Self {
            a: k[0],
            b: k[1],
            c: k[2],
            d: k[3],
        }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn corners(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn is_crisp(&self) -> bool {
        self.a == self.d
    }

    pub fn support(&self) -> Interval {
        Interval {
            lo: self.a,
            hi: self.d,
        }
    }

    pub fn core(&self) -> Interval {
        Interval {
            lo: self.b,
            hi: self.c,
        }
    }

    pub fn membership(&self, x: f64) -> Result<f64, FuzzyError> {
        if !(0.0..=1.0).contains(&x) {
            return Err(FuzzyError::OutOfDomain(x));
        }
        Ok(self.membership_unchecked(x))
    }

    pub(crate) fn membership_unchecked(&self, x: f64) -> f64 {
        if x < self.a || x > self.d {
            0.0
        } else if x >= self.b && x <= self.c {
            1.0
        } else if x < self.b {
            (x - self.a) / (self.b - self.a)
        } else {
            (self.d - x) / (self.d - self.c)
        }
    }

    pub fn alpha_cut(&self, alpha: f64) -> Result<Interval, FuzzyError> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(FuzzyError::InvalidAlpha(alpha));
        }
        Ok(self.cut(alpha))
    }

    // alpha = 0 yields the support
    fn cut(&self, alpha: f64) -> Interval {
        Interval::clamped(
            self.a + alpha * (self.b - self.a),
            self.d - alpha * (self.d - self.c),
        )
    }

    fn combine(&self, other: &Self, op: impl Fn(&Interval, &Interval) -> Interval) -> Self {
        Self::from_cuts(
            op(&self.support(), &other.support()),
            op(&self.core(), &other.core()),
        )
    }

    /// Fuzzy product. Exact on the support and core; the ramps between are
    /// the linear interpolation of those two cuts.
    pub fn mul(&self, other: &Self) -> Self {
        self.combine(other, Interval::mul)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, Interval::add)
    }

    pub fn sub_bounded(&self, other: &Self) -> Self {
        self.combine(other, Interval::sub_bounded)
    }

    pub fn complement(&self) -> Self {
        Self {
            a: 1.0 - self.d,
            b: 1.0 - self.c,
            c: 1.0 - self.b,
            d: 1.0 - self.a,
        }
    }

    /// Cut-wise minimum of two fuzzy numbers (corner-wise for trapezoids).
    pub fn fuzzy_min(&self, other: &Self) -> Self {
        self.combine(other, Interval::min)
    }

    /// Cut-wise maximum of two fuzzy numbers (corner-wise for trapezoids).
    pub fn fuzzy_max(&self, other: &Self) -> Self {
        self.combine(other, Interval::max)
    }

    /// Midpoint of the core.
    pub fn median(&self) -> f64 {
        (self.b + self.c) / 2.0
    }

    /// Area under the membership function.
    pub fn area(&self) -> f64 {
        ((self.d - self.a) + (self.c - self.b)) / 2.0
    }

    /// L1 distance between membership functions plus the distance between
    /// medians. The median term keeps zero-width numbers apart.
    pub fn distance(&self, other: &Self) -> f64 {
        membership_l1(self, other) + (self.median() - other.median()).abs()
    }

    pub fn hedge(&self, kind: Hedge) -> Self {
        match kind {
            Hedge::Intensify => Self {
                a: (self.a + self.b) / 2.0,
                b: self.b,
                c: self.c,
                d: (self.c + self.d) / 2.0,
            },
            Hedge::Dilate => Self {
                a: (self.b - 2.0 * (self.b - self.a)).max(0.0),
                b: self.b,
                c: self.c,
                d: (self.c + 2.0 * (self.d - self.c)).min(1.0),
            },
        }
    }
}

impl fmt::Display for UnitFuzzyNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.a, self.b, self.c, self.d)
    }
}

/// Integral of |mu_f - mu_g| over [0, 1] in closed form.
///
/// Between consecutive corners of either operand both memberships are linear,
/// so the difference is linear on each open segment. Its one-sided end values
/// are recovered from two interior samples, which sidesteps the jumps that
/// vertical ramps produce at the segment ends.
fn membership_l1(f: &UnitFuzzyNumber, g: &UnitFuzzyNumber) -> f64 {
    let mut knots: Vec<f64> = f.corners().into_iter().chain(g.corners()).collect();
    knots.push(0.0);
    knots.push(1.0);
    knots.sort_by(f64::total_cmp);
    knots.dedup();

    let diff = |x: f64| f.membership_unchecked(x) - g.membership_unchecked(x);
    let mut total = 0.0;
    for w in knots.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        let width = x1 - x0;
        if width <= 0.0 {
            continue;
        }
        let q1 = diff(x0 + 0.25 * width);
        let q3 = diff(x0 + 0.75 * width);
        let h0 = 1.5 * q1 - 0.5 * q3;
        let h1 = 1.5 * q3 - 0.5 * q1;
        total += if h0 * h1 >= 0.0 {
            0.5 * (h0.abs() + h1.abs()) * width
        } else {
            width * (h0 * h0 + h1 * h1) / (2.0 * (h0.abs() + h1.abs()))
        };
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tfn(a: f64, b: f64, c: f64, d: f64) -> UnitFuzzyNumber {
        UnitFuzzyNumber::new(a, b, c, d).unwrap()
    }

    fn crisp(x: f64) -> UnitFuzzyNumber {
        UnitFuzzyNumber::crisp(x).unwrap()
    }

    fn assert_close(f: &UnitFuzzyNumber, expected: [f64; 4]) {
        for (got, want) in f.corners().iter().zip(expected) {
            assert!((got - want).abs() < 1e-12, "{f} vs {expected:?}");
        }
    }

    #[test]
    fn rejects_unordered_corners() {
        assert!(UnitFuzzyNumber::new(0.5, 0.4, 0.6, 0.7).is_err());
        assert!(UnitFuzzyNumber::new(-0.1, 0.0, 0.1, 0.2).is_err());
        assert!(UnitFuzzyNumber::new(0.1, 0.2, 0.3, f64::NAN).is_err());
        assert!(UnitFuzzyNumber::crisp(1.5).is_err());
    }

    #[test]
    fn membership_examples() {
        let f = tfn(0.4, 0.5, 0.5, 0.6);
        assert_eq!(f.membership(0.5).unwrap(), 1.0);
        assert!((f.membership(0.45).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(f.membership(0.39).unwrap(), 0.0);
        assert_eq!(f.membership(1.2), Err(FuzzyError::OutOfDomain(1.2)));
    }

    #[test]
    fn crisp_membership_is_an_indicator() {
        let f = crisp(0.3);
        assert_eq!(f.membership(0.3).unwrap(), 1.0);
        assert_eq!(f.membership(0.3001).unwrap(), 0.0);
    }

    #[test]
    fn alpha_cut_examples() {
        let f = tfn(0.2, 0.4, 0.6, 0.8);
        let core = f.alpha_cut(1.0).unwrap();
        assert!((core.lo() - 0.4).abs() < 1e-12 && (core.hi() - 0.6).abs() < 1e-12);
        let half = f.alpha_cut(0.5).unwrap();
        assert!((half.lo() - 0.3).abs() < 1e-12 && (half.hi() - 0.7).abs() < 1e-12);
        let p = crisp(0.5).alpha_cut(0.7).unwrap();
        assert_eq!((p.lo(), p.hi()), (0.5, 0.5));
        assert_eq!(f.alpha_cut(0.0), Err(FuzzyError::InvalidAlpha(0.0)));
        assert!(f.alpha_cut(1.1).is_err());
    }

    #[test]
    fn mul_examples() {
        assert_eq!(crisp(0.5).mul(&crisp(0.4)), crisp(0.2));
        let p = tfn(0.6, 0.7, 0.7, 0.8).mul(&tfn(0.8, 0.9, 0.9, 1.0));
        assert_close(&p, [0.48, 0.63, 0.63, 0.80]);
    }

    #[test]
    fn add_sub_complement_examples() {
        assert_close(&crisp(0.3).complement(), [0.7; 4]);
        let f = tfn(0.1, 0.2, 0.4, 0.5);
        assert_eq!(crisp(0.0).add(&f), f);
        assert_eq!(crisp(0.2).sub_bounded(&crisp(0.5)), crisp(0.0));
        assert_eq!(crisp(0.8).add(&crisp(0.7)), crisp(1.0));
    }

    #[test]
    fn median_examples() {
        assert!((tfn(0.2, 0.4, 0.6, 0.8).median() - 0.5).abs() < 1e-12);
        assert_eq!(crisp(0.7).median(), 0.7);
        assert!((tfn(0.0, 0.1, 0.3, 0.4).median() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn distance_examples() {
        let f = tfn(0.1, 0.2, 0.4, 0.5);
        assert_eq!(f.distance(&f), 0.0);
        assert!((crisp(0.0).distance(&crisp(1.0)) - 1.0).abs() < 1e-12);
        let d = tfn(0.0, 0.0, 0.0, 0.2).distance(&tfn(0.0, 0.0, 0.0, 0.4));
        assert!((d - 0.1).abs() < 1e-12, "{d}");
    }

    #[test]
    fn distance_of_disjoint_trapezoids_adds_both_areas() {
        let f = tfn(0.0, 0.1, 0.2, 0.3);
        let g = tfn(0.5, 0.6, 0.7, 0.8);
        let expected = f.area() + g.area() + 0.5;
        assert!((f.distance(&g) - expected).abs() < 1e-12);
    }

    #[test]
    fn distance_handles_crossing_ramps() {
        // triangles meeting halfway: each contributes 0.1 of unshared area
        let f = tfn(0.0, 0.2, 0.2, 0.4);
        let g = tfn(0.2, 0.4, 0.4, 0.6);
        // overlap triangle under both: base 0.2, height 0.5 -> 0.05
        let l1 = (f.area() - 0.05) + (g.area() - 0.05);
        assert!((f.distance(&g) - (l1 + 0.2)).abs() < 1e-12);
    }

    #[test]
    fn hedge_examples() {
        let f = tfn(0.2, 0.4, 0.6, 0.8);
        assert_close(&f.hedge(Hedge::Intensify), [0.3, 0.4, 0.6, 0.7]);
        assert_close(&tfn(0.3, 0.4, 0.6, 0.7).hedge(Hedge::Dilate), [0.2, 0.4, 0.6, 0.8]);
        assert_eq!(crisp(0.5).hedge(Hedge::Intensify), crisp(0.5));
        assert_close(&tfn(0.05, 0.1, 0.9, 0.95).hedge(Hedge::Dilate), [0.0, 0.1, 0.9, 1.0]);
    }

    #[test]
    fn json_uses_corner_object() {
        let f = tfn(0.1, 0.2, 0.3, 0.4);
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"{"a":0.1,"b":0.2,"c":0.3,"d":0.4}"#);
        let back: UnitFuzzyNumber = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        let bad = serde_json::from_str::<UnitFuzzyNumber>(r#"{"a":0.5,"b":0.2,"c":0.3,"d":0.4}"#);
        assert!(bad.is_err());
    }
}
