//! Empirical size and orientation statistics compared with their limits,
//! and the exact binomial count of tiles in a size window.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::f64::consts::TAU;

use serde::Serialize;

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::geometry::{vertices, wrap_angle, Handedness, OrientationWord, SizeExp, TriangleShape};
use crate::spectral::{class_counts, eigen};
use crate::substitution::{Tiling, DAUGHTER_WORDS};

pub const DEFAULT_ORIENTATION_BINS: usize = 64;
pub const DEFAULT_S_BINS: usize = 64;
pub const SIZE_TOLERANCE: f64 = 0.02;
pub const AREA_LIMIT_TOLERANCE: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    Count,
    Area,
}

/// Bin of a size histogram: a class index `k ≥ 1` (largest tiles first) for
/// rational shapes, or `[lo, hi)` in the size parameter measured from the
/// largest tile present.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SizeBin {
    Class { k: u32 },
    Interval { lo: f64, hi: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SizeHistogram {
    pub weighting: Weighting,
    pub bins: Vec<SizeBin>,
    pub weights: Vec<f64>,
}

fn normalize(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    }
}

/// Size distribution of the tiles of `t`; area weights come from the tile
/// polygons themselves.
pub fn size_histogram(t: &Tiling, weighting: Weighting) -> Result<SizeHistogram> {
    let shape = t.shape();
    let weight = |tile: &crate::geometry::Tile| match weighting {
        Weighting::Count => 1.0,
        Weighting::Area => vertices(shape, tile).area(),
    };
    if let Some((p, q)) = shape.pq() {
        let m = p.max(q) as usize;
        let min_key = t
            .tiles()
            .iter()
            .filter_map(|x| shape.size_key(x.placement.size_exp))
            .min()
            .unwrap_or(0);
        let mut w = vec![0.0; m];
        for tile in t.tiles() {
            let k = (shape.size_key(tile.placement.size_exp).unwrap_or(0) - min_key) as usize;
            if k >= m {
                return Err(Error::Internal(format!("size class {} beyond {m}", k + 1)));
            }
            w[k] += weight(tile);
        }
        normalize(&mut w);
        return Ok(SizeHistogram {
            weighting,
            bins: (1..=m as u32).map(|k| SizeBin::Class { k }).collect(),
            weights: w,
        });
    }
    let width = shape.mu / DEFAULT_S_BINS as f64;
    let s_min = t
        .size_classes()
        .iter()
        .map(|&e| shape.size_param(e))
        .fold(f64::INFINITY, f64::min);
    let mut w = vec![0.0; DEFAULT_S_BINS];
    for tile in t.tiles() {
        let s = shape.size_param(tile.placement.size_exp) - s_min;
        let b = ((s / width).floor() as usize).min(DEFAULT_S_BINS - 1);
        w[b] += weight(tile);
    }
    normalize(&mut w);
    Ok(SizeHistogram {
        weighting,
        bins: (0..DEFAULT_S_BINS)
            .map(|b| SizeBin::Interval {
                lo: b as f64 * width,
                hi: (b + 1) as f64 * width,
            })
            .collect(),
        weights: w,
    })
}

/// Size distribution from exact class counts (largest class first), with
/// area weights `r^{2k}`.
pub fn size_histogram_from_counts(shape: &TriangleShape, counts: &[u128], weighting: Weighting) -> Result<SizeHistogram> {
    let r = shape
        .r
        .ok_or_else(|| Error::Argument("class counts need a rational shape".into()))?;
    let mut w: Vec<f64> = counts
        .iter()
        .enumerate()
        .map(|(k, &c)| match weighting {
            Weighting::Count => c as f64,
            Weighting::Area => c as f64 * r.powi(2 * k as i32),
        })
        .collect();
    normalize(&mut w);
    Ok(SizeHistogram {
        weighting,
        bins: (1..=counts.len() as u32).map(|k| SizeBin::Class { k }).collect(),
        weights: w,
    })
}

pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Aggregated orientation and size states `(word, exponents) → count` of
/// `T_n`, evolved exactly without geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct OrientationCensus {
    pub shape: TriangleShape,
    pub generation: u32,
    pub states: BTreeMap<(OrientationWord, SizeExp), u128>,
}

impl OrientationCensus {
    pub fn root(shape: &TriangleShape) -> OrientationCensus {
        let mut states = BTreeMap::new();
        states.insert((OrientationWord::IDENTITY, SizeExp::ROOT), 1);
        OrientationCensus {
            shape: shape.clone(),
            generation: 0,
            states,
        }
    }

    fn largest(&self) -> Result<Vec<SizeExp>> {
        let exps: std::collections::BTreeSet<SizeExp> = self.states.keys().map(|k| k.1).collect();
        if self.shape.pq().is_some() {
            let key = exps.iter().filter_map(|&e| self.shape.size_key(e)).min();
            return Ok(exps
                .into_iter()
                .filter(|&e| self.shape.size_key(e) == key)
                .collect());
        }
        let mut best: Option<SizeExp> = None;
        for &e in &exps {
            best = match best {
                Some(b) if self.shape.compare_sizes(e, b)? != Ordering::Less => Some(b),
                _ => Some(e),
            };
        }
        Ok(best.into_iter().collect())
    }

    pub fn deflate(&self) -> Result<OrientationCensus> {
        let chosen = self.largest()?;
        let mut states = BTreeMap::new();
        for (&(w, e), &c) in &self.states {
            if chosen.contains(&e) {
                for (k, dw) in DAUGHTER_WORDS.iter().enumerate() {
                    let de = if k < 4 {
                        SizeExp::new(e.i, e.j + 1)
                    } else {
                        SizeExp::new(e.i + 1, e.j)
                    };
                    *states.entry((w.compose(*dw), de)).or_insert(0) += c;
                }
            } else {
                *states.entry((w, e)).or_insert(0) += c;
            }
        }
        Ok(OrientationCensus {
            shape: self.shape.clone(),
            generation: self.generation + 1,
            states,
        })
    }

    pub fn tile_count(&self) -> u128 {
        self.states.values().sum()
    }
}

pub fn orientation_census(shape: &TriangleShape, n: u32) -> Result<OrientationCensus> {
    let mut c = OrientationCensus::root(shape);
    for _ in 0..n {
        c = c.deflate()?;
    }
    Ok(c)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrientationClassHistogram {
    /// Size class (`k ≥ 1` rational) or the exponent pair of the class.
    pub class: String,
    pub total: u128,
    /// `bins` counts for positive handedness followed by `bins` for negative.
    pub counts: Vec<u128>,
    /// `max_b |2·bins·frac_b − 1|`.
    pub max_deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrientationHistogram {
    pub bins: usize,
    pub classes: Vec<OrientationClassHistogram>,
    /// Largest per-class deviation from the uniform distribution.
    pub max_deviation: f64,
}

fn class_label(shape: &TriangleShape, e: SizeExp, min_key: u64) -> (u64, String) {
    match shape.size_key(e) {
        Some(k) => (k, format!("{}", k - min_key + 1)),
        None => (0, format!("({},{})", e.i, e.j)),
    }
}

/// Left-closed bins; angles within 1e-9 of a bin edge count as on it.
fn bin_of(phi: f64, bins: usize) -> usize {
    let x = wrap_angle(phi) / TAU * bins as f64 + 1e-9;
    (x.floor() as usize) % bins
}

fn build_orientation_histogram(
    shape: &TriangleShape,
    items: impl Iterator<Item = (Handedness, f64, SizeExp, u128)> + Clone,
    bins: usize,
) -> Result<OrientationHistogram> {
    if bins == 0 {
        return Err(Error::Argument("bins must be positive".into()));
    }
    let min_key = items
        .clone()
        .filter_map(|x| shape.size_key(x.2))
        .min()
        .unwrap_or(0);
    let mut per: BTreeMap<(u64, String), Vec<u128>> = BTreeMap::new();
    for (h, phi, e, c) in items {
        let row = per
            .entry(class_label(shape, e, min_key))
            .or_insert_with(|| vec![0; 2 * bins]);
        let offset = if h == Handedness::Plus { 0 } else { bins };
        row[offset + bin_of(phi, bins)] += c;
    }
    let classes: Vec<OrientationClassHistogram> = per
        .into_iter()
        .map(|((_, class), counts)| {
            let total: u128 = counts.iter().sum();
            let max_deviation = counts
                .iter()
                .map(|&x| (x as f64 / total as f64 * (2 * bins) as f64 - 1.0).abs())
                .fold(0.0, f64::max);
            OrientationClassHistogram {
                class,
                total,
                counts,
                max_deviation,
            }
        })
        .collect();
    let max_deviation = classes.iter().map(|c| c.max_deviation).fold(0.0, f64::max);
    Ok(OrientationHistogram {
        bins,
        classes,
        max_deviation,
    })
}

/// Orientation histogram of a tiling, per size class.
pub fn orientation_histogram(t: &Tiling, bins: usize) -> Result<OrientationHistogram> {
    build_orientation_histogram(
        t.shape(),
        t.tiles()
            .iter()
            .map(|x| (x.placement.handedness, x.placement.phi, x.placement.size_exp, 1)),
        bins,
    )
}

/// Orientation histogram of `T_n` computed from the exact census.
pub fn orientation_histogram_census(c: &OrientationCensus, bins: usize) -> Result<OrientationHistogram> {
    let theta = c.shape.theta;
    build_orientation_histogram(
        &c.shape,
        c.states
            .iter()
            .map(|(&(w, e), &n)| (w.handedness, w.angle(theta), e, n)),
        bins,
    )
}

/// The cut parameter: the size of a given exponent class, or a raw value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cut {
    Exp(SizeExp),
    Value(f64),
}

pub fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i + 1) as u128;
    }
    Some(acc)
}

/// Where `s = iα + jβ − t` falls relative to the window `[0, μ)`.
enum Window {
    Free,
    LastB,
    LastA,
}

fn window(shape: &TriangleShape, cut: Cut, e: SizeExp) -> Result<Window> {
    let (alpha_lt_beta, s_cmp_min, s_cmp_mu);
    if let (Some((p, q)), Cut::Exp(c)) = (shape.pq(), cut) {
        // exact in size-key units, where α ↔ p and β ↔ q
        let s = shape.size_key(e).unwrap_or(0) as i64 - shape.size_key(c).unwrap_or(0) as i64;
        if s < 0 {
            return Err(Error::Domain(format!("class ({},{}) lies before the cut", e.i, e.j)));
        }
        alpha_lt_beta = p < q;
        s_cmp_min = s.cmp(&(p.min(q) as i64));
        s_cmp_mu = s.cmp(&(p.max(q) as i64));
    } else {
        let t = match cut {
            Cut::Exp(c) => shape.size_param_dd(c),
            Cut::Value(v) => Dd::from_f64(v),
        };
        let s = shape.size_param_dd(e) - t;
        let tol = 1e-9 * shape.mu;
        let cmp = |x: Dd, y: f64| {
            let d = (x - Dd::from_f64(y)).to_f64();
            if d.abs() < tol && d != 0.0 {
                Err(Error::Numeric {
                    message: "size window boundary is a near tie".into(),
                    residual: d.abs(),
                })
            } else {
                Ok(x.total_cmp(Dd::from_f64(y)))
            }
        };
        if cmp(s, 0.0)? == Ordering::Less {
            return Err(Error::Domain(format!("class ({},{}) lies before the cut", e.i, e.j)));
        }
        alpha_lt_beta = shape.alpha < shape.beta;
        s_cmp_min = cmp(s, shape.alpha.min(shape.beta))?;
        s_cmp_mu = cmp(s, shape.mu)?;
    }
    if s_cmp_mu != Ordering::Less {
        return Err(Error::Domain(format!("class ({},{}) lies beyond the window", e.i, e.j)));
    }
    Ok(match (s_cmp_min, alpha_lt_beta) {
        (Ordering::Less, _) => Window::Free,
        (_, true) => Window::LastB,
        (_, false) => Window::LastA,
    })
}

/// Number of tiles with exponents `(i, j)` in the cut at `t`, counting
/// daughter sequences with `i` steps of type A and `j` of type B.
pub fn count_oracle(shape: &TriangleShape, cut: Cut, e: SizeExp) -> Result<u128> {
    let (n1, n2) = (e.i as u64, e.j as u64);
    let c = match window(shape, cut, e)? {
        Window::Free => binomial(n1 + n2, n1),
        Window::LastB if n2 == 0 => Some(0),
        Window::LastB => binomial(n1 + n2 - 1, n1),
        Window::LastA if n1 == 0 => Some(0),
        Window::LastA => binomial(n1 + n2 - 1, n2),
    };
    c.and_then(|c| c.checked_mul(4u128.checked_pow(e.j)?))
        .ok_or(Error::Resource {
            what: "oracle count",
            requested: u128::MAX,
            cap: u128::MAX,
        })
}

/// The cut of `T_n`: its largest tile class.
pub fn cut_of(t: &Tiling) -> Result<Cut> {
    let shape = t.shape();
    let mut best: Option<SizeExp> = None;
    for e in t.size_classes() {
        best = match best {
            Some(b) if shape.compare_sizes(e, b)? != Ordering::Less => Some(b),
            _ => Some(e),
        };
    }
    best.map(Cut::Exp)
        .ok_or_else(|| Error::Argument("empty tiling".into()))
}

/// Compares the oracle with enumeration for every class of `t`; returns the
/// mismatches as `(class, enumerated, predicted)`.
pub fn oracle_mismatches(t: &Tiling) -> Result<Vec<(SizeExp, u128, u128)>> {
    let cut = cut_of(t)?;
    let mut counts: BTreeMap<SizeExp, u128> = BTreeMap::new();
    for tile in t.tiles() {
        *counts.entry(tile.placement.size_exp).or_insert(0) += 1;
    }
    let mut bad = Vec::new();
    for (e, n) in counts {
        let o = count_oracle(t.shape(), cut, e)?;
        if o != n {
            bad.push((e, n, o));
        }
    }
    Ok(bad)
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n + 1];
    for k in 1..=n {
        v[k] = v[k - 1] + (k as f64).ln();
    }
    v
}

/// Fraction of the root area covered by cut tiles with `s ∈ [lo, hi)`,
/// summed in log space so large `t` stays finite.
pub fn area_fraction_cut(shape: &TriangleShape, t: f64, lo: f64, hi: f64) -> Result<f64> {
    let (alpha, beta) = (shape.alpha, shape.beta);
    let max_i = ((t + shape.mu) / alpha).ceil() as u64 + 1;
    let max_j = ((t + shape.mu) / beta).ceil() as u64 + 1;
    let lf = ln_factorials((max_i + max_j) as usize + 1);
    let ln_binom = |n: u64, k: u64| lf[n as usize] - lf[k as usize] - lf[(n - k) as usize];
    let (la, lb) = (2.0 * shape.big_a.ln(), 2.0 * shape.big_b.ln() + 4f64.ln());
    let mut total = 0.0;
    for i in 0..=max_i {
        let j_lo = ((t - i as f64 * alpha) / beta).floor().max(0.0) as u64;
        for j in j_lo..=max_j {
            let s = i as f64 * alpha + j as f64 * beta - t;
            if s < 0.0 {
                continue;
            }
            if s >= shape.mu {
                break;
            }
            if s < lo || s >= hi {
                continue;
            }
            let lc = if s < alpha.min(beta) {
                ln_binom(i + j, i)
            } else if alpha < beta {
                if j == 0 {
                    continue;
                }
                ln_binom(i + j - 1, i)
            } else {
                if i == 0 {
                    continue;
                }
                ln_binom(i + j - 1, j)
            };
            total += (lc + i as f64 * la + j as f64 * lb).exp();
        }
    }
    Ok(total)
}

/// Limiting area fraction for `s ∈ [lo, hi) ∩ [0, μ)`.
pub fn area_fraction_limit(shape: &TriangleShape, lo: f64, hi: f64) -> Result<f64> {
    if lo.is_nan() || hi.is_nan() || lo > hi || lo < 0.0 {
        return Err(Error::Argument(format!("bad interval [{lo}, {hi})")));
    }
    let overlap = |end: f64| (hi.min(end) - lo.min(end)).max(0.0);
    let (a2, b2) = (shape.a * shape.a, shape.b * shape.b);
    Ok((a2 * overlap(shape.alpha) + b2 * overlap(shape.beta)) / (a2 * shape.alpha + b2 * shape.beta))
}

/// Largest `|freq − length|` over `intervals` for `frac(k·x)`, `k = 1..=samples`.
pub fn equidistribution_error(x: f64, samples: usize, intervals: &[(f64, f64)]) -> f64 {
    let mut hits = vec![0usize; intervals.len()];
    for k in 1..=samples {
        let f = (k as f64 * x).fract();
        for (h, &(lo, hi)) in hits.iter_mut().zip(intervals) {
            if f >= lo && f < hi {
                *h += 1;
            }
        }
    }
    hits.iter()
        .zip(intervals)
        .map(|(&h, &(lo, hi))| (h as f64 / samples as f64 - (hi - lo)).abs())
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub bin: SizeBin,
    pub analytic_count: Option<f64>,
    pub empirical_count: f64,
    pub analytic_area: f64,
    pub empirical_area: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StatsReport {
    pub generation: u32,
    pub tiles: usize,
    pub rows: Vec<ComparisonRow>,
    pub count_l1: Option<f64>,
    pub area_l1: f64,
    pub tolerance: f64,
    pub orientation_max_deviation: f64,
    pub pass: bool,
}

/// Empirical against limiting size distributions for a generated tiling.
pub fn compare(t: &Tiling) -> Result<StatsReport> {
    let shape = t.shape();
    let counts = size_histogram(t, Weighting::Count)?;
    let areas = size_histogram(t, Weighting::Area)?;
    let orient = orientation_histogram(t, DEFAULT_ORIENTATION_BINS)?;
    let (nu, rho, tol): (Option<Vec<f64>>, Vec<f64>, f64) = match shape.pq() {
        Some((p, q)) => {
            let rep = eigen(p, q)?;
            (Some(rep.nu), rep.rho, SIZE_TOLERANCE)
        }
        None => {
            let rho = areas
                .bins
                .iter()
                .map(|b| match *b {
                    SizeBin::Interval { lo, hi } => area_fraction_limit(shape, lo, hi),
                    SizeBin::Class { .. } => unreachable!("irrational bins are intervals"),
                })
                .collect::<Result<Vec<_>>>()?;
            (None, rho, AREA_LIMIT_TOLERANCE)
        }
    };
    let rows = (0..counts.bins.len())
        .map(|k| ComparisonRow {
            bin: counts.bins[k],
            analytic_count: nu.as_ref().map(|v| v[k]),
            empirical_count: counts.weights[k],
            analytic_area: rho[k],
            empirical_area: areas.weights[k],
        })
        .collect();
    let count_l1 = nu.as_ref().map(|v| l1_distance(v, &counts.weights));
    let area_l1 = l1_distance(&rho, &areas.weights);
    let pass = area_l1 < tol && count_l1.is_none_or(|d| d < tol);
    Ok(StatsReport {
        generation: t.generation(),
        tiles: t.len(),
        rows,
        count_l1,
        area_l1,
        tolerance: tol,
        orientation_max_deviation: orient.max_deviation,
        pass,
    })
}

/// Count- and area-weighted class distributions of `T_n` from exact matrix
/// powers, against the limits.
pub fn matrix_power_distances(p: u32, q: u32, n: u32) -> Result<(f64, f64)> {
    let shape = TriangleShape::from_pq(p, q)?;
    let rep = eigen(p, q)?;
    let counts = class_counts(p, q, n)?;
    let c = size_histogram_from_counts(&shape, &counts, Weighting::Count)?;
    let a = size_histogram_from_counts(&shape, &counts, Weighting::Area)?;
    Ok((l1_distance(&c.weights, &rep.nu), l1_distance(&a.weights, &rep.rho)))
}
