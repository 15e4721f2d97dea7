//! Double-double arithmetic, just enough to compare integer combinations
//! of two logarithms without rounding ambiguity.

use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    /// Exact product of two doubles.
    pub fn product(a: f64, b: f64) -> Dd {
        let p = a * b;
        let e = a.mul_add(b, -p);
        Dd { hi: p, lo: e }
    }

    /// `k * x` for an integer `k`, exact as long as `|k| < 2^53`.
    pub fn scaled(k: i64, x: f64) -> Dd {
        Dd::product(k as f64, x)
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Dd {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    pub fn total_cmp(self, other: Dd) -> Ordering {
        let d = self - other;
        if d.hi > 0.0 || (d.hi == 0.0 && d.lo > 0.0) {
            Ordering::Greater
        } else if d.hi < 0.0 || (d.hi == 0.0 && d.lo < 0.0) {
            Ordering::Less
        } else {
            Ordering::Equal
        }
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let p = Dd::product(self.hi, o.hi);
        let (hi, lo) = quick_two_sum(p.hi, p.lo + (self.hi * o.lo + self.lo * o.hi));
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::from_f64(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Dd::from_f64(q2);
        let (hi, lo) = quick_two_sum(q1, q2 + r.hi / o.hi);
        Dd { hi, lo }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

/// Sum of `k_i * x_i` carried in double-double.
pub fn lin_comb(terms: &[(i64, f64)]) -> Dd {
    terms
        .iter()
        .fold(Dd::ZERO, |acc, &(k, x)| acc + Dd::scaled(k, x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_is_exact() {
        let a = 1.0 + f64::EPSILON;
        let p = Dd::product(a, a);
        assert_eq!(p.hi, 1.0 + 2.0 * f64::EPSILON);
        assert_eq!(p.lo, f64::EPSILON * f64::EPSILON);
    }

    #[test]
    fn cancellation_keeps_low_part() {
        let x = 0.1_f64;
        let d = lin_comb(&[(3, x), (-1, 3.0 * x)]);
        // 3 * 0.1 rounds; the residue survives in the low word
        assert_eq!(d.to_f64(), 3.0f64.mul_add(x, -(3.0 * x)));
    }

    #[test]
    fn division_inverts_multiplication() {
        let a = Dd { hi: 1.0, lo: 1e-20 };
        let b = Dd::from_f64(3.0);
        let q = a / b;
        let back = q * b - a;
        assert!(back.to_f64().abs() < 1e-31);
    }

    #[test]
    fn ordering() {
        let a = lin_comb(&[(7, std::f64::consts::LN_2)]);
        let b = lin_comb(&[(4, std::f64::consts::LN_10)]);
        assert_eq!(a.total_cmp(b), Ordering::Less);
        assert_eq!(a.total_cmp(a), Ordering::Equal);
    }
}
