//! Size and orientation classification of a shape, with empirical counts.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;
use serde::Serialize;

use crate::geometry::{angle_distance, wrap_angle, Handedness, Orientation, Rationality, TriangleShape};
use crate::substitution::{Tiling, DAUGHTER_WORDS};

pub const ORIENTATION_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeCount {
    Finite(u32),
    Infinite,
}

/// `Undetermined` is reported for irrational shapes when the caller does not
/// assert whether `θ/π` is rational.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OrientationCount {
    Finite,
    Infinite,
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub z: f64,
    pub rationality: Rationality,
    pub theta_over_pi_rational: Option<bool>,
    pub size_count_predicted: SizeCount,
    pub orientation_count_predicted: OrientationCount,
    pub is_pinwheel: bool,
    pub is_exceptional_13: bool,
    /// Closest continued-fraction convergents `(h, k)` of `z`, for irrational
    /// shapes only.
    pub convergents: Vec<(i64, i64)>,
}

pub fn classify(shape: &TriangleShape, theta_pi_rational: Option<bool>) -> ClassificationReport {
    let pq = shape.pq();
    let size_count_predicted = match pq {
        Some((p, q)) => SizeCount::Finite(p.max(q)),
        None => SizeCount::Infinite,
    };
    let orientation_count_predicted = match (theta_pi_rational, pq) {
        (Some(true), _) => OrientationCount::Finite,
        (Some(false), _) => OrientationCount::Infinite,
        (None, Some((1, 3))) => OrientationCount::Finite,
        (None, Some(_)) => OrientationCount::Infinite,
        (None, None) => OrientationCount::Undetermined,
    };
    ClassificationReport {
        z: shape.z,
        rationality: shape.rationality,
        theta_over_pi_rational: theta_pi_rational,
        size_count_predicted,
        orientation_count_predicted,
        is_pinwheel: shape.is_pinwheel(),
        is_exceptional_13: pq == Some((1, 3)) || (shape.theta - FRAC_PI_4).abs() < 1e-12,
        convergents: if pq.is_none() {
            nearest_convergents(shape.z, 3)
        } else {
            Vec::new()
        },
    }
}

/// Continued-fraction convergents of `x` up to denominators of 1e9.
pub fn convergents(x: f64) -> Vec<(i64, i64)> {
    let (mut h0, mut h1) = (1i64, x.floor() as i64);
    let (mut k0, mut k1) = (0i64, 1i64);
    let mut out = vec![(h1, k1)];
    let mut frac = x - x.floor();
    while frac.abs() > 1e-12 && out.len() < 40 {
        let y = 1.0 / frac;
        let a = y.floor() as i64;
        frac = y - y.floor();
        let (h2, k2) = (a * h1 + h0, a * k1 + k0);
        if k2 > 1_000_000_000 {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        out.push((h1, k1));
        if (x - h1 as f64 / k1 as f64).abs() < 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    out
}

/// The last `count` convergents, i.e. the closest ones found.
pub fn nearest_convergents(x: f64, count: usize) -> Vec<(i64, i64)> {
    let all = convergents(x);
    all[all.len().saturating_sub(count)..].to_vec()
}

/// `|2^q (x+x̄)^p − 2^{2p} (−i)^q (x−x̄)^q|` at `x = e^{iθ}`, relative to the
/// larger side.
pub fn eq21_residual(p: u32, q: u32, theta: f64) -> f64 {
    let x = Complex64::from_polar(1.0, theta);
    let lhs = 2f64.powi(q as i32) * (x + x.conj()).powu(p);
    let rhs = 2f64.powi(2 * p as i32) * Complex64::new(0.0, -1.0).powu(q) * (x - x.conj()).powu(q);
    (lhs - rhs).norm() / lhs.norm().max(rhs.norm()).max(1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RationalAngleHit {
    pub p: u32,
    pub q: u32,
    pub k: u32,
    pub n: u32,
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Coprime `(p, q)` with `p, q ≤ max_pq` whose angle lies within `tol` of
/// some `kπ/n`, `n ≤ max_n`.
pub fn rational_angle_sweep(max_pq: u32, max_n: u32, tol: f64) -> crate::Result<Vec<RationalAngleHit>> {
    let mut hits = Vec::new();
    for p in 1..=max_pq {
        for q in 1..=max_pq {
            if gcd(p, q) != 1 {
                continue;
            }
            let s = TriangleShape::from_pq(p, q)?;
            'found: for n in 1..=max_n {
                for k in 1..n {
                    if (s.theta - k as f64 * PI / n as f64).abs() < tol {
                        hits.push(RationalAngleHit { p, q, k, n });
                        break 'found;
                    }
                }
            }
        }
    }
    Ok(hits)
}

/// Size of the group generated by the five daughter orientations, or `None`
/// once it exceeds `limit`.
pub fn orientation_closure(shape: &TriangleShape, limit: usize) -> Option<usize> {
    let gens: Vec<Orientation> = DAUGHTER_WORDS.iter().map(|w| w.realize(shape.theta)).collect();
    let mut group = vec![Orientation::IDENTITY];
    let mut frontier = vec![Orientation::IDENTITY];
    while let Some(g) = frontier.pop() {
        for h in &gens {
            let x = h.compose(g);
            if !group.iter().any(|y| y.approx_eq(x, ORIENTATION_TOL)) {
                if group.len() == limit {
                    return None;
                }
                group.push(x);
                frontier.push(x);
            }
        }
    }
    Some(group.len())
}

/// Distinct size classes present: size keys for rational shapes, exponent
/// pairs otherwise.
pub fn verify_size_count(t: &Tiling) -> usize {
    let shape = t.shape();
    match shape.pq() {
        Some(_) => t
            .tiles()
            .iter()
            .filter_map(|x| shape.size_key(x.placement.size_exp))
            .collect::<std::collections::BTreeSet<_>>()
            .len(),
        None => t.size_classes().len(),
    }
}

/// Distinct `(handedness, φ)` pairs, angles merged within 1e-9 on the circle.
pub fn verify_orientation_count(t: &Tiling) -> usize {
    let mut total = 0;
    for h in [Handedness::Plus, Handedness::Minus] {
        let mut phis: Vec<f64> = t
            .tiles()
            .iter()
            .filter(|x| x.placement.handedness == h)
            .map(|x| wrap_angle(x.placement.phi))
            .collect();
        total += distinct_angles(&mut phis, ORIENTATION_TOL);
    }
    total
}

fn distinct_angles(phis: &mut [f64], tol: f64) -> usize {
    if phis.is_empty() {
        return 0;
    }
    phis.sort_by(f64::total_cmp);
    let mut count = 1;
    for w in phis.windows(2) {
        if w[1] - w[0] > tol {
            count += 1;
        }
    }
    if count > 1 && angle_distance(phis[0], phis[phis.len() - 1]) <= tol {
        count -= 1;
    }
    count
}
