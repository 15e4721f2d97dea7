//! Prototile metric, similarity motions and the planar realization of tiles.

use std::cmp::Ordering;
use std::f64::consts::{FRAC_PI_2, TAU};
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::dd::{lin_comb, Dd};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Point {
        Point { x, y }
    }

    pub fn polar(r: f64, angle: f64) -> Point {
        let (s, c) = angle.sin_cos();
        Point::new(r * c, r * s)
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    pub fn midpoint(self, o: Point) -> Point {
        Point::new(0.5 * (self.x + o.x), 0.5 * (self.y + o.y))
    }

    /// Counter-clockwise quarter turn.
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }
}

impl From<[f64; 2]> for Point {
    fn from(v: [f64; 2]) -> Point {
        Point::new(v[0], v[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> [f64; 2] {
        [p.x, p.y]
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Reduce an angle to `[0, 2π)`.
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Distance between two angles on the circle.
pub fn angle_distance(x: f64, y: f64) -> f64 {
    let d = wrap_angle(x - y);
    d.min(TAU - d)
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Rationality {
    Rational { p: u32, q: u32 },
    Irrational,
}

/// Metric data of the right-triangle prototile.
///
/// `a` is the short (altitude) leg, `b` the long leg and `theta` the small
/// angle, opposite `a`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TriangleShape {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub theta: f64,
    /// `a / c`, the linear factor of the fifth daughter.
    #[serde(rename = "A")]
    pub big_a: f64,
    /// `b / 2c`, the linear factor of the four medial daughters.
    #[serde(rename = "B")]
    pub big_b: f64,
    pub alpha: f64,
    pub beta: f64,
    pub z: f64,
    pub mu: f64,
    pub rationality: Rationality,
    pub r: Option<f64>,
}

impl TriangleShape {
    /// Shape with small angle `theta` and hypotenuse `c`, tagged irrational.
    pub fn from_theta(theta: f64, c: f64) -> Result<TriangleShape> {
        if !(theta.is_finite() && theta > 0.0 && theta < FRAC_PI_2) {
            return Err(Error::Domain(format!(
                "angle {theta} is outside the open interval (0, pi/2)"
            )));
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::Domain(format!("hypotenuse {c} must be positive")));
        }
        let (s, co) = theta.sin_cos();
        let a = c * s;
        let b = c * co;
        let big_a = s;
        let big_b = 0.5 * co;
        let alpha = -big_a.ln();
        let beta = -big_b.ln();
        Ok(TriangleShape {
            a,
            b,
            c,
            theta,
            big_a,
            big_b,
            alpha,
            beta,
            z: alpha / beta,
            mu: alpha.max(beta),
            rationality: Rationality::Irrational,
            r: None,
        })
    }

    /// The unique shape with `sin(θ)^q = (cos(θ)/2)^p`, normalized to `c = 1`.
    pub fn from_pq(p: u32, q: u32) -> Result<TriangleShape> {
        if p == 0 || q == 0 {
            return Err(Error::Argument(format!("p/q = {p}/{q} must be positive")));
        }
        if gcd(p as u64, q as u64) != 1 {
            return Err(Error::Argument(format!("p/q = {p}/{q} is not in lowest terms")));
        }
        let theta = if p == q {
            (0.5f64).atan()
        } else {
            let (pf, qf) = (p as f64, q as f64);
            // increasing from -inf at 0 to +inf at pi/2
            let g = |t: f64| qf * t.sin().ln() - pf * (0.5 * t.cos()).ln();
            let (mut lo, mut hi) = (f64::MIN_POSITIVE, FRAC_PI_2 - 1e-15);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if g(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let mut shape = TriangleShape::from_theta(theta, 1.0)?;
        shape.rationality = Rationality::Rational { p, q };
        shape.r = Some(shape.big_a.powf(1.0 / p as f64));
        let gap = (q as f64 * shape.alpha - p as f64 * shape.beta).abs();
        if gap >= 1e-10 * shape.beta {
            return Err(Error::Numeric {
                message: format!("bisection for p/q = {p}/{q} did not reach the rational shape"),
                residual: gap,
            });
        }
        Ok(shape)
    }

    /// Same shape with a different hypotenuse.
    pub fn with_hypotenuse(&self, c: f64) -> Result<TriangleShape> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::Domain(format!("hypotenuse {c} must be positive")));
        }
        let k = c / self.c;
        Ok(TriangleShape {
            a: self.a * k,
            b: self.b * k,
            c,
            ..self.clone()
        })
    }

    pub fn pq(&self) -> Option<(u32, u32)> {
        match self.rationality {
            Rationality::Rational { p, q } => Some((p, q)),
            Rationality::Irrational => None,
        }
    }

    /// Number of size classes in the limit, `max(p, q)`, for rational shapes.
    pub fn class_count(&self) -> Option<u32> {
        self.pq().map(|(p, q)| p.max(q))
    }

    pub fn area(&self) -> f64 {
        0.5 * self.a * self.b
    }

    pub fn is_pinwheel(&self) -> bool {
        matches!(self.rationality, Rationality::Rational { p: 1, q: 1 })
            || (self.b - 2.0 * self.a).abs() <= 1e-12 * self.c
    }

    /// Integer size key `i p + j q`; larger key means smaller tile.
    pub fn size_key(&self, e: SizeExp) -> Option<u64> {
        self.pq()
            .map(|(p, q)| e.i as u64 * p as u64 + e.j as u64 * q as u64)
    }

    /// Size parameter `s = i α + j β` in double-double.
    pub fn size_param_dd(&self, e: SizeExp) -> Dd {
        lin_comb(&[(e.i as i64, self.alpha), (e.j as i64, self.beta)])
    }

    pub fn size_param(&self, e: SizeExp) -> f64 {
        self.size_param_dd(e).to_f64()
    }

    /// Linear scale `A^i B^j` of a tile relative to the root.
    pub fn scale(&self, e: SizeExp) -> f64 {
        match (self.r, self.size_key(e)) {
            (Some(r), Some(k)) => r.powi(k as i32),
            _ => (-self.size_param(e)).exp(),
        }
    }

    pub fn hypotenuse_at(&self, e: SizeExp) -> f64 {
        self.c * self.scale(e)
    }

    /// Orders two exponent pairs by size parameter, smallest `s` (largest
    /// tile) first. Irrational shapes refuse near-ties between distinct pairs.
    pub fn compare_sizes(&self, e1: SizeExp, e2: SizeExp) -> Result<Ordering> {
        if e1 == e2 {
            return Ok(Ordering::Equal);
        }
        if let (Some(k1), Some(k2)) = (self.size_key(e1), self.size_key(e2)) {
            return Ok(k1.cmp(&k2));
        }
        let d = lin_comb(&[
            (e1.i as i64 - e2.i as i64, self.alpha),
            (e1.j as i64 - e2.j as i64, self.beta),
        ]);
        if d.abs().to_f64() < 1e-9 {
            return Err(Error::Numeric {
                message: format!(
                    "size parameters of ({}, {}) and ({}, {}) are indistinguishable",
                    e1.i, e1.j, e2.i, e2.j
                ),
                residual: d.to_f64(),
            });
        }
        Ok(d.total_cmp(Dd::ZERO))
    }
}

/// Exponents `(i, j)`: a tile has linear scale `A^i B^j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct SizeExp {
    pub i: u32,
    pub j: u32,
}

impl SizeExp {
    pub const ROOT: SizeExp = SizeExp { i: 0, j: 0 };

    pub const fn new(i: u32, j: u32) -> SizeExp {
        SizeExp { i, j }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Handedness {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Handedness {
    pub fn sign(self) -> f64 {
        match self {
            Handedness::Plus => 1.0,
            Handedness::Minus => -1.0,
        }
    }

    pub fn times(self, o: Handedness) -> Handedness {
        if self == o {
            Handedness::Plus
        } else {
            Handedness::Minus
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Handedness::Plus => '+',
            Handedness::Minus => '-',
        }
    }
}

/// Element `R_φ P^k` of O(2), where `P` reflects across the x-axis and
/// `k = 1` for negative handedness. Reflection acts first.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Orientation {
    pub handedness: Handedness,
    pub phi: f64,
}

impl Orientation {
    pub const IDENTITY: Orientation = Orientation {
        handedness: Handedness::Plus,
        phi: 0.0,
    };

    pub fn new(handedness: Handedness, phi: f64) -> Orientation {
        Orientation {
            handedness,
            phi: wrap_angle(phi),
        }
    }

    pub fn rotation(phi: f64) -> Orientation {
        Orientation::new(Handedness::Plus, phi)
    }

    pub fn reflection(phi: f64) -> Orientation {
        Orientation::new(Handedness::Minus, phi)
    }

    /// `self ∘ inner`, using `P R_x = R_{-x} P`.
    pub fn compose(self, inner: Orientation) -> Orientation {
        Orientation::new(
            self.handedness.times(inner.handedness),
            self.phi + self.handedness.sign() * inner.phi,
        )
    }

    pub fn inverse(self) -> Orientation {
        match self.handedness {
            Handedness::Plus => Orientation::rotation(-self.phi),
            Handedness::Minus => self,
        }
    }

    pub fn apply(self, v: Point) -> Point {
        let y = self.handedness.sign() * v.y;
        let (s, c) = self.phi.sin_cos();
        Point::new(c * v.x - s * y, s * v.x + c * y)
    }

    pub fn approx_eq(self, o: Orientation, tol: f64) -> bool {
        self.handedness == o.handedness && angle_distance(self.phi, o.phi) <= tol
    }
}

/// Exact orientation `R_{mθ + kπ/2} P^h` for a fixed shape angle θ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OrientationWord {
    pub handedness: Handedness,
    pub m: i64,
    pub quarter: u8,
}

impl OrientationWord {
    pub const IDENTITY: OrientationWord = OrientationWord {
        handedness: Handedness::Plus,
        m: 0,
        quarter: 0,
    };

    pub fn compose(self, inner: OrientationWord) -> OrientationWord {
        let (m, k) = match self.handedness {
            Handedness::Plus => (self.m + inner.m, self.quarter + inner.quarter),
            Handedness::Minus => (self.m - inner.m, self.quarter + 4 - inner.quarter),
        };
        OrientationWord {
            handedness: self.handedness.times(inner.handedness),
            m,
            quarter: k % 4,
        }
    }

    pub fn angle(self, theta: f64) -> f64 {
        wrap_angle(self.m as f64 * theta + self.quarter as f64 * FRAC_PI_2)
    }

    pub fn realize(self, theta: f64) -> Orientation {
        Orientation::new(self.handedness, self.angle(theta))
    }
}

/// Similarity `x ↦ shift + scale · orientation(x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Motion {
    pub orientation: Orientation,
    pub scale: f64,
    pub shift: Point,
}

impl Motion {
    pub const IDENTITY: Motion = Motion {
        orientation: Orientation::IDENTITY,
        scale: 1.0,
        shift: Point::ORIGIN,
    };

    pub fn apply(&self, v: Point) -> Point {
        self.shift + self.orientation.apply(v) * self.scale
    }

    pub fn inverse(&self) -> Motion {
        let inv = self.orientation.inverse();
        Motion {
            orientation: inv,
            scale: 1.0 / self.scale,
            shift: -inv.apply(self.shift) * (1.0 / self.scale),
        }
    }
}

/// `outer ∘ inner`.
pub fn compose(outer: &Motion, inner: &Motion) -> Motion {
    Motion {
        orientation: outer.orientation.compose(inner.orientation),
        scale: outer.scale * inner.scale,
        shift: outer.apply(inner.shift),
    }
}

/// Where a tile sits: orientation of its small-angle-to-right-angle ray,
/// position of its small-angle vertex and its size exponents.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub handedness: Handedness,
    pub phi: f64,
    pub origin: Point,
    pub size_exp: SizeExp,
}

impl Placement {
    pub const ROOT: Placement = Placement {
        handedness: Handedness::Plus,
        phi: 0.0,
        origin: Point::ORIGIN,
        size_exp: SizeExp::ROOT,
    };

    pub fn orientation(&self) -> Orientation {
        Orientation {
            handedness: self.handedness,
            phi: self.phi,
        }
    }

    /// Motion carrying the root tile onto this one.
    pub fn motion(&self, shape: &TriangleShape) -> Motion {
        Motion {
            orientation: self.orientation(),
            scale: shape.scale(self.size_exp),
            shift: self.origin,
        }
    }
}

pub type TileId = u64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tile {
    pub id: TileId,
    pub parent: Option<TileId>,
    pub placement: Placement,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TileVertices {
    pub small: Point,
    pub right: Point,
    pub other: Point,
    pub long_mid: Point,
}

impl TileVertices {
    pub fn corners(&self) -> [Point; 3] {
        [self.small, self.right, self.other]
    }

    /// The four marked boundary points: three corners and the long-leg midpoint.
    pub fn marked(&self) -> [Point; 4] {
        [self.small, self.long_mid, self.right, self.other]
    }

    pub fn signed_area(&self) -> f64 {
        0.5 * (self.right - self.small).cross(self.other - self.small)
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }
}

/// Corners of the root tile in its own frame.
pub fn standard_corners(shape: &TriangleShape) -> [Point; 3] {
    [Point::ORIGIN, Point::new(shape.b, 0.0), Point::new(shape.b, shape.a)]
}

pub fn vertices_of(shape: &TriangleShape, placement: &Placement) -> TileVertices {
    let s = shape.scale(placement.size_exp);
    let u = Point::polar(1.0, placement.phi);
    let small = placement.origin;
    let right = small + u * (s * shape.b);
    let other = right + u.perp() * (s * shape.a * placement.handedness.sign());
    TileVertices {
        small,
        right,
        other,
        long_mid: small + u * (0.5 * s * shape.b),
    }
}

pub fn vertices(shape: &TriangleShape, tile: &Tile) -> TileVertices {
    vertices_of(shape, &tile.placement)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, PI, SQRT_2};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn isosceles_shape() {
        let s = TriangleShape::from_theta(FRAC_PI_4, SQRT_2).unwrap();
        assert!(close(s.a, 1.0, 1e-14) && close(s.b, 1.0, 1e-14));
        assert!(close(s.z, 1.0 / 3.0, 1e-14));
    }

    #[test]
    fn pinwheel_from_theta() {
        let s = TriangleShape::from_theta((0.5f64).atan(), 5f64.sqrt()).unwrap();
        assert!(close(s.a, 1.0, 1e-14) && close(s.b, 2.0, 1e-14));
        assert!(close(s.big_a, s.big_b, 1e-14));
        assert!(close(s.big_b, 1.0 / 5f64.sqrt(), 1e-14));
        assert!(close(s.z, 1.0, 1e-13));
        assert!(s.is_pinwheel());
    }

    #[test]
    fn sixty_degrees() {
        let s = TriangleShape::from_theta(FRAC_PI_3, 1.0).unwrap();
        assert!(close(s.a, 3f64.sqrt() / 2.0, 1e-15));
        assert!(close(s.b, 0.5, 1e-15));
        let z = (3f64.sqrt() / 2.0).ln() / (0.25f64).ln();
        assert!(close(s.z, z, 1e-14));
    }

    #[test]
    fn theta_domain() {
        for t in [0.0, FRAC_PI_2, -1.0, 2.0, f64::NAN] {
            assert!(matches!(TriangleShape::from_theta(t, 1.0), Err(Error::Domain(_))));
        }
        assert!(TriangleShape::from_theta(0.3, 0.0).is_err());
    }

    #[test]
    fn pq_examples() {
        let s13 = TriangleShape::from_pq(1, 3).unwrap();
        assert!(close(s13.theta, FRAC_PI_4, 1e-12));

        let s12 = TriangleShape::from_pq(1, 2).unwrap();
        let rt = 17f64.sqrt();
        assert!(close(s12.a, (2.0 * (rt - 1.0)).sqrt() / 4.0, 1e-12));
        assert!(close(s12.b, (rt - 1.0) / 4.0, 1e-12));

        let s21 = TriangleShape::from_pq(2, 1).unwrap();
        let a = 5f64.sqrt() - 2.0;
        assert!(close(s21.a, a, 1e-12));
        assert!(close(s21.b, 2.0 * a.sqrt(), 1e-12));
        assert_eq!(s21.c, 1.0);
    }

    #[test]
    fn pq_rejects_common_factor() {
        assert!(matches!(TriangleShape::from_pq(2, 4), Err(Error::Argument(_))));
        assert!(matches!(TriangleShape::from_pq(3, 3), Err(Error::Argument(_))));
        assert!(TriangleShape::from_pq(0, 1).is_err());
    }

    #[test]
    fn rational_scale_matches_exponential() {
        let s = TriangleShape::from_pq(2, 5).unwrap();
        for (i, j) in [(0, 0), (3, 1), (7, 9), (20, 2)] {
            let e = SizeExp::new(i, j);
            let direct = (-(i as f64 * s.alpha + j as f64 * s.beta)).exp();
            assert!(close(s.scale(e), direct, 1e-12), "{i},{j}");
        }
    }

    #[test]
    fn compare_sizes_rational_and_irrational() {
        let s = TriangleShape::from_pq(1, 2).unwrap();
        // 2α = β for this shape
        assert_eq!(
            s.compare_sizes(SizeExp::new(2, 0), SizeExp::new(0, 1)).unwrap(),
            Ordering::Equal
        );
        let t = TriangleShape::from_theta(1.0, 1.0).unwrap();
        assert_eq!(
            t.compare_sizes(SizeExp::new(1, 0), SizeExp::new(0, 1)).unwrap(),
            Ordering::Less
        );
    }

    #[test]
    fn vertices_identity_pinwheel() {
        let s = TriangleShape::from_theta((0.5f64).atan(), 5f64.sqrt()).unwrap();
        let v = vertices_of(&s, &Placement::ROOT);
        assert!(v.right.dist(Point::new(2.0, 0.0)) < 1e-14);
        assert!(v.other.dist(Point::new(2.0, 1.0)) < 1e-14);
        assert!(close(v.area(), 1.0, 1e-14));
        assert!(v.long_mid.dist(Point::new(1.0, 0.0)) < 1e-14);
    }

    #[test]
    fn half_turn_negates() {
        let s = TriangleShape::from_pq(1, 2).unwrap();
        let a = vertices_of(&s, &Placement::ROOT);
        let b = vertices_of(&s, &Placement { phi: PI, ..Placement::ROOT });
        for (p, q) in a.marked().iter().zip(b.marked().iter()) {
            assert!((*p + *q).norm() < 1e-14);
        }
    }

    #[test]
    fn til12_root_area() {
        let s = TriangleShape::from_pq(1, 2).unwrap().with_hypotenuse(4.0).unwrap();
        let rt = 17f64.sqrt();
        let expected = (rt - 1.0) * (2.0 * (rt - 1.0)).sqrt() / 2.0;
        assert!(close(vertices_of(&s, &Placement::ROOT).area(), expected, 1e-13));
    }

    #[test]
    fn orientation_composition() {
        let t = 0.4;
        let g = Orientation::reflection(t);
        assert!(g.compose(g).approx_eq(Orientation::IDENTITY, 1e-15));
        let r = Orientation::rotation(t);
        assert!(r.compose(r).approx_eq(Orientation::rotation(2.0 * t), 1e-15));
        let h = Orientation::reflection(2.1);
        assert_eq!(Orientation::IDENTITY.compose(h), h);
    }

    #[test]
    fn motion_composition_matches_application() {
        let m1 = Motion {
            orientation: Orientation::reflection(0.7),
            scale: 0.3,
            shift: Point::new(1.0, -2.0),
        };
        let m2 = Motion {
            orientation: Orientation::rotation(2.2),
            scale: 1.7,
            shift: Point::new(0.5, 0.25),
        };
        let p = Point::new(0.9, 0.1);
        let c = compose(&m1, &m2);
        assert!(c.apply(p).dist(m1.apply(m2.apply(p))) < 1e-14);
        assert!(compose(&c, &c.inverse()).apply(p).dist(p) < 1e-13);
        assert!(compose(&Motion::IDENTITY, &m1).apply(p).dist(m1.apply(p)) < 1e-15);
    }

    #[test]
    fn orientation_word_matches_float() {
        let theta = 0.37;
        let w1 = OrientationWord { handedness: Handedness::Minus, m: 3, quarter: 1 };
        let w2 = OrientationWord { handedness: Handedness::Plus, m: -2, quarter: 3 };
        let exact = w1.compose(w2).realize(theta);
        let float = w1.realize(theta).compose(w2.realize(theta));
        assert!(exact.approx_eq(float, 1e-12));
    }
}
