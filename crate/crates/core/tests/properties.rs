//! Property tests over random shapes and generations.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use proptest::prelude::*;

use tilelab::boundary::{
    derive_sigma0_til12, derive_til13_rule, derive_til2_rule, f_of_n, sigma0_til12, sigma_til12,
    til13_fault_line, til13_rule, til2_fault_line, til2_rule, Letter, SubstitutionRule1D, Word,
    TIL12, TIL12_SIGNED, TIL13, TIL2,
};
use tilelab::classify::{eq21_residual, orientation_closure, rational_angle_sweep};
use tilelab::geometry::{vertices, Point};
use tilelab::render::{parse_polygons, render_svg, RenderOptions};
use tilelab::spectral::{char_poly, class_counts, eigen, poly_eval};
use tilelab::stats::{
    count_oracle, cut_of, equidistribution_error, l1_distance, size_histogram, Weighting,
};
use tilelab::substitution::{
    first_subdivision, subcollection_matches, trace_edge, EdgeKind, RootEdge, Sign, TilingRecord,
};
use tilelab::{build_tn, Tiling, TriangleShape};

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn coprime_pq(max: u32) -> impl Strategy<Value = (u32, u32)> {
    (1..=max, 1..=max).prop_filter("coprime", |&(p, q)| gcd(p, q) == 1)
}

fn theta() -> impl Strategy<Value = f64> {
    0.05..(FRAC_PI_2 - 0.05)
}

/// Marked boundary pieces of a tile: the hypotenuse, the short leg and the
/// two halves of the long leg.
fn marked_segments(s: &TriangleShape, t: &tilelab::geometry::Tile) -> [(Point, Point); 4] {
    let v = vertices(s, t);
    let mid = (v.small + v.right) * 0.5;
    [(v.small, v.other), (v.right, v.other), (v.small, mid), (mid, v.right)]
}

fn collinear_overlap(x: (Point, Point), y: (Point, Point), tol: f64) -> f64 {
    let d = x.1 - x.0;
    let len = d.norm();
    let off = |p: Point| d.cross(p - x.0).abs() / len;
    if off(y.0) > tol || off(y.1) > tol {
        return 0.0;
    }
    let (t0, t1) = (d.dot(y.0 - x.0) / len, d.dot(y.1 - x.0) / len);
    (t0.max(t1).min(len) - t0.min(t1).max(0.0)).max(0.0)
}

fn same_segment(x: (Point, Point), y: (Point, Point), tol: f64) -> bool {
    (x.0.dist(y.0) < tol && x.1.dist(y.1) < tol) || (x.0.dist(y.1) < tol && x.1.dist(y.0) < tol)
}

fn rule_word(rule: &SubstitutionRule1D, text: &str) -> Word {
    Word::parse(rule.alphabet, text).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn area_identity(th in theta()) {
        let s = TriangleShape::from_theta(th, 1.0).unwrap();
        prop_assert!((s.big_a * s.big_a + 4.0 * s.big_b * s.big_b - 1.0).abs() <= 1e-12);
        let t = build_tn(&s, 1).unwrap();
        prop_assert!((t.total_area() - s.area()).abs() <= 1e-12 * s.area());
    }

    #[test]
    fn pq_round_trip((p, q) in coprime_pq(12)) {
        let s = TriangleShape::from_pq(p, q).unwrap();
        let want = p as f64 / q as f64;
        prop_assert!((s.z - want).abs() <= 1e-10 * want);
    }

    #[test]
    fn hypotenuse_ratio_bound(th in theta(), n in 0u32..7) {
        let s = TriangleShape::from_theta(th, 1.0).unwrap();
        let t = build_tn(&s, n).unwrap();
        let bound = (s.c / s.a).max(2.0 * s.c / s.b);
        prop_assert!(t.hypotenuse_ratio() < bound);
    }

    #[test]
    fn every_tile_is_eventually_subdivided(th in theta(), n in 0u32..=6, pick in any::<prop::sample::Index>()) {
        let s = TriangleShape::from_theta(th, 1.0).unwrap();
        let t = build_tn(&s, n).unwrap();
        let tile = pick.get(t.tiles());
        let big = first_subdivision(&t, tile.id, 2_000_000).unwrap();
        prop_assert!(big > n);
        let before = build_tn(&s, big - 1).unwrap();
        let largest = *before.size_classes().iter().min_by(|a, b| s.compare_sizes(**a, **b).unwrap()).unwrap();
        prop_assert_eq!(tile.placement.size_exp, largest);
    }

    #[test]
    fn sub_collections_become_first_and_second_generation(th in 0.3f64..1.2, n in 0u32..=3, pick in any::<prop::sample::Index>()) {
        let s = TriangleShape::from_theta(th, 1.0).unwrap();
        let t = build_tn(&s, n).unwrap();
        let anchor = *pick.get(t.tiles());
        let first = first_subdivision(&t, anchor.id, 1_000_000).unwrap();
        let mut t = build_tn(&s, first).unwrap();
        prop_assert!(subcollection_matches(&t, &anchor, &build_tn(&s, 1).unwrap()));
        let second = build_tn(&s, 2).unwrap();
        while !subcollection_matches(&t, &anchor, &second) {
            t = t.deflate_with_cap(1_000_000).unwrap();
        }
    }

    #[test]
    fn siblings_meet_edge_to_edge(th in theta()) {
        let s = TriangleShape::from_theta(th, 1.0).unwrap();
        let t = build_tn(&s, 1).unwrap();
        let tol = 1e-9 * s.c;
        let tiles = t.tiles();
        for i in 0..tiles.len() {
            for j in (i + 1)..tiles.len() {
                for x in marked_segments(&s, &tiles[i]) {
                    for y in marked_segments(&s, &tiles[j]) {
                        if collinear_overlap(x, y, tol) > tol {
                            prop_assert!(same_segment(x, y, tol), "daughters {} and {} overlap partially", i, j);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn tile_count_matches_matrix_powers((p, q) in coprime_pq(5), n in 0u32..8) {
        let s = TriangleShape::from_pq(p, q).unwrap();
        let t = build_tn(&s, n).unwrap();
        let want: u128 = class_counts(p, q, n).unwrap().iter().sum();
        prop_assert_eq!(t.len() as u128, want);
    }

    #[test]
    fn char_poly_vanishes_on_eigenvalues((p, q) in coprime_pq(10)) {
        let r = eigen(p, q).unwrap();
        let coeffs: Vec<f64> = char_poly(p, q).unwrap().iter().map(|&c| c as f64).collect();
        for z in &r.eigenvalues {
            let z = num_complex::Complex64::new(z.re, z.im);
            prop_assert!(poly_eval(&coeffs, z).norm() < 1e-8);
        }
        for (k, x) in r.eigenvalues.iter().enumerate() {
            for y in &r.eigenvalues[k + 1..] {
                prop_assert!(((x.re - y.re).powi(2) + (x.im - y.im).powi(2)).sqrt() > 1e-6);
            }
        }
        prop_assert_eq!(r.second_modulus > 1.0, q > 1);
    }

    #[test]
    fn counting_oracle_matches_enumeration(th in theta(), n in 0u32..9) {
        let s = TriangleShape::from_theta(th, 1.0).unwrap();
        let t = build_tn(&s, n).unwrap();
        let cut = cut_of(&t).unwrap();
        let mut seen = std::collections::BTreeMap::new();
        for tile in t.tiles() {
            *seen.entry(tile.placement.size_exp).or_insert(0u128) += 1;
        }
        for (e, count) in seen {
            prop_assert_eq!(count_oracle(&s, cut, e).unwrap(), count);
        }
    }

    #[test]
    fn area_histogram_reweights_counts(th in theta(), n in 1u32..9) {
        let s = TriangleShape::from_theta(th, 1.0).unwrap();
        let t = build_tn(&s, n).unwrap();
        let area = size_histogram(&t, Weighting::Area).unwrap();
        let mut by_exp = std::collections::BTreeMap::new();
        for tile in t.tiles() {
            *by_exp.entry(tile.placement.size_exp).or_insert(0.0) += (-2.0 * s.size_param(tile.placement.size_exp)).exp();
        }
        let total: f64 = by_exp.values().sum();
        let mut want = vec![0.0; area.weights.len()];
        let s_min = by_exp.keys().map(|&e| s.size_param(e)).fold(f64::INFINITY, f64::min);
        let width = s.mu / area.weights.len() as f64;
        for (e, w) in by_exp {
            let b = (((s.size_param(e) - s_min) / width).floor() as usize).min(want.len() - 1);
            want[b] += w / total;
        }
        for (g, w) in area.weights.iter().zip(&want) {
            prop_assert!((g - w).abs() <= 1e-12, "{} vs {}", g, w);
        }
    }

    #[test]
    fn rational_area_histogram_reweights_counts((p, q) in coprime_pq(4), n in 1u32..9) {
        let s = TriangleShape::from_pq(p, q).unwrap();
        let t = build_tn(&s, n).unwrap();
        let count = size_histogram(&t, Weighting::Count).unwrap();
        let area = size_histogram(&t, Weighting::Area).unwrap();
        let r = s.r.unwrap();
        let raw: Vec<f64> = count.weights.iter().enumerate().map(|(k, w)| w * r.powi(2 * k as i32)).collect();
        let total: f64 = raw.iter().sum();
        for (g, w) in area.weights.iter().zip(&raw) {
            prop_assert!((g - w / total).abs() <= 1e-12);
        }
    }

    #[test]
    fn equidistribution_of_irrational_multiples(x in 0.1f64..10.0, lo in 0.0f64..0.9, width in 0.05f64..0.1) {
        let frac = x.fract();
        prop_assume!((frac * 1000.0 - (frac * 1000.0).round()).abs() > 1e-3);
        let err = equidistribution_error(x.sqrt() + 1e-3 * x, 100_000, &[(lo, lo + width)]);
        prop_assert!(err < 0.01, "{}", err);
    }

    #[test]
    fn svg_polygons_round_trip(th in theta(), n in 0u32..6) {
        let s = TriangleShape::from_theta(th, 1.0).unwrap();
        let t = build_tn(&s, n).unwrap();
        let polys = parse_polygons(&render_svg(&t, &RenderOptions::default()));
        prop_assert_eq!(polys.len(), t.len());
        for (tile, poly) in t.tiles().iter().zip(&polys) {
            for (a, b) in vertices(&s, tile).corners().iter().zip(poly) {
                prop_assert!(a.dist(*b) <= 1e-9 * s.c);
            }
        }
    }

    #[test]
    fn tiling_record_round_trip(th in theta(), n in 0u32..5) {
        let s = TriangleShape::from_theta(th, 1.0).unwrap();
        let t = build_tn(&s, n).unwrap();
        let text = serde_json::to_string(&t.to_record()).unwrap();
        let rec: TilingRecord = serde_json::from_str(&text).unwrap();
        let back = Tiling::from_record(&rec).unwrap();
        prop_assert_eq!(back.len(), t.len());
        prop_assert_eq!(back.generation(), t.generation());
        for (x, y) in t.tiles().iter().zip(back.tiles()) {
            prop_assert_eq!(x.placement.size_exp, y.placement.size_exp);
            for (a, b) in vertices(&s, x).corners().iter().zip(vertices(&s, y).corners().iter()) {
                prop_assert!(a.dist(*b) <= 1e-12);
            }
        }
    }

    #[test]
    fn stream_and_prefix_counts_match_materialized(sys in 0usize..4, n in 0u32..9, k in any::<prop::sample::Index>()) {
        let (rule, seed) = match sys {
            0 => (sigma_til12(), "H+"),
            1 => (sigma0_til12(), "L+ L- H+"),
            2 => (til2_rule(), "H+ S-"),
            _ => (til13_rule(), "H+ L-"),
        };
        let seed = rule_word(&rule, seed);
        let word = rule.iterate(&seed, n).unwrap();
        let streamed: Vec<Letter> = rule.stream(&seed, n).collect();
        prop_assert_eq!(&streamed, &word.letters);
        let cut = k.index(word.len() + 1);
        let mut want = vec![0u128; rule.alphabet.symbols.len()];
        for l in &word.letters[..cut] {
            want[l.symbol as usize] += 1;
        }
        prop_assert_eq!(rule.prefix_counts(&seed, n, cut as u128), want);
        let total: Vec<u128> = word.counts().iter().map(|&c| c as u128).collect();
        prop_assert_eq!(rule.counts_after(&seed, n), total);
    }
}

#[test]
fn z_decreases_in_theta() {
    let zs: Vec<f64> = (1..1000)
        .map(|k| TriangleShape::from_theta(k as f64 * FRAC_PI_2 / 1000.0, 1.0).unwrap().z)
        .collect();
    assert!(zs.windows(2).all(|w| w[0] > w[1]));
}

#[test]
fn orientation_group_at_quarter_turn_is_finite() {
    let s = TriangleShape::from_theta(FRAC_PI_4, 1.0).unwrap();
    let order = orientation_closure(&s, 1000).unwrap();
    assert!(order <= 16, "{order}");
}

#[test]
fn only_one_third_gives_a_rational_angle() {
    let hits = rational_angle_sweep(12, 100, 1e-9).unwrap();
    assert!(!hits.is_empty());
    assert!(hits.iter().all(|h| (h.p, h.q) == (1, 3)), "{hits:?}");
}

#[test]
fn quarter_turn_solves_the_angle_relation() {
    assert!(eq21_residual(1, 3, PI / 4.0) <= 1e-12);
}

#[test]
fn hypotenuse_trace_follows_sigma0() {
    let s = TriangleShape::from_pq(1, 2).unwrap();
    let rule = sigma0_til12();
    let seed = Word::new(&TIL12_SIGNED, vec![Letter::plus(0)]).unwrap();
    for k in 1..=5 {
        let t = build_tn(&s, 2 * k).unwrap();
        let letters: Vec<Letter> = trace_edge(&t, RootEdge::Hypotenuse)
            .unwrap()
            .letters()
            .into_iter()
            .map(|(kind, sign)| {
                let sym = match kind {
                    EdgeKind::H => 0,
                    EdgeKind::L => 1,
                    EdgeKind::S => panic!("short leg on the hypotenuse"),
                };
                Letter::new(sym, sign)
            })
            .collect();
        assert_eq!(letters, rule.iterate(&seed, k).unwrap().letters, "k = {k}");
    }
}

#[test]
fn growth_bounds_on_f() {
    let f: Vec<i128> = (1..=31).map(|n| f_of_n(n).unwrap()).collect();
    for n in 0..30 {
        if f[n].abs() > 6 {
            assert!(f[n + 1].abs() >= f[n].abs() + 2, "n = {}", n + 1);
        }
    }
    for n in 7..=30 {
        assert!(f[n - 1].abs() >= n as i128 + 2, "n = {n}");
    }
}

fn offset_values(offsets: &[f64]) -> Vec<i64> {
    offsets.iter().map(|x| (x * 1e9).round() as i64).collect()
}

#[test]
fn offsets_settle_for_finite_systems() {
    let til2: Vec<_> = (6..=12).map(|n| offset_values(&til2_fault_line(n).unwrap().offsets)).collect();
    assert!(til2.windows(2).all(|w| w[0] == w[1]), "{til2:?}");
    let til13: Vec<_> = (6..=18).map(|n| offset_values(&til13_fault_line(n).unwrap().offsets)).collect();
    assert!(til13.windows(2).all(|w| w[0] == w[1]), "{til13:?}");
}

#[test]
fn derived_rules_equal_frozen_rules() {
    assert_eq!(derive_sigma0_til12().unwrap(), sigma0_til12());
    assert_eq!(derive_til2_rule().unwrap(), til2_rule());
    assert_eq!(derive_til13_rule().unwrap(), til13_rule());
}

#[test]
fn alphabets_close_under_the_rules() {
    for (rule, alphabet) in [(sigma_til12(), &TIL12), (til2_rule(), &TIL2), (til13_rule(), &TIL13)] {
        let w = rule.iterate(&Word::new(alphabet, vec![Letter::new(0, Sign::Minus)]).unwrap(), 4).unwrap();
        assert!(Word::new(alphabet, w.letters).is_ok());
    }
}

#[test]
fn count_vectors_converge_to_nu() {
    let mut failures = Vec::new();
    for p in 1..=10u32 {
        for q in 1..=10u32 {
            if gcd(p, q) != 1 {
                continue;
            }
            let nu = eigen(p, q).unwrap().nu;
            let d: Vec<f64> = (0..=30)
                .map(|n| {
                    let c = class_counts(p, q, n).unwrap();
                    let total: f64 = c.iter().map(|&x| x as f64).sum();
                    let v: Vec<f64> = c.iter().map(|&x| x as f64 / total).collect();
                    l1_distance(&v, &nu)
                })
                .collect();
            let decreasing = d.windows(2).all(|w| w[1] <= w[0] || w[1] < 1e-12);
            if !decreasing || d[30] >= 0.02 {
                failures.push((p, q, decreasing, d[30]));
            }
        }
    }
    assert!(failures.is_empty(), "{} pairs miss the bound: {failures:?}", failures.len());
}
