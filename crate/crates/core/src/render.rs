//! Deterministic SVG output with size or orientation coloring and an
//! optional fault-line overlay.

use std::cmp::Ordering;
use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use crate::geometry::{vertices, Handedness, Point, SizeExp, TileId};
use crate::substitution::{tile_edges, Tiling};

pub const SIZE_PALETTE: [&str; 12] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7",
    "#9c755f", "#bab0ac", "#86bcb6", "#d37295",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColorMode {
    Size,
    Phi,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenderOptions {
    pub color: ColorMode,
    pub faults: bool,
    /// Width of the canvas in user units.
    pub width: f64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            color: ColorMode::Size,
            faults: false,
            width: 800.0,
        }
    }
}

/// `x` with 9 significant digits, trailing zeros removed.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = 8 - mag;
    let mut s = if (0..=20).contains(&decimals) {
        format!("{:.*}", decimals as usize, x)
    } else if decimals < 0 {
        // round to the 9th significant digit
        let step = 10f64.powi(-decimals);
        format!("{:.0}", (x / step).round() * step)
    } else {
        return format!("{x:.8e}");
    };
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

fn hsl_to_hex(h: f64, s: f64, l: f64) -> String {
    let c = (1.0 - (2.0 * l - 1.0).abs()) * s;
    let hp = h / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = l - c / 2.0;
    let to = |v: f64| ((v + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    format!("#{:02x}{:02x}{:02x}", to(r), to(g), to(b))
}

/// Hue follows `φ`; negative tiles are drawn darker.
pub fn phi_color(h: Handedness, phi: f64) -> String {
    let hue = (phi.rem_euclid(TAU) / TAU * 360.0).min(359.999);
    match h {
        Handedness::Plus => hsl_to_hex(hue, 0.65, 0.62),
        Handedness::Minus => hsl_to_hex(hue, 0.65, 0.38),
    }
}

fn size_ranks(t: &Tiling) -> Vec<(SizeExp, usize)> {
    let shape = t.shape();
    let mut classes: Vec<SizeExp> = t.size_classes().into_iter().collect();
    match shape.pq() {
        Some(_) => {
            let min = classes.iter().filter_map(|&e| shape.size_key(e)).min().unwrap_or(0);
            classes
                .into_iter()
                .map(|e| (e, (shape.size_key(e).unwrap_or(0) - min) as usize))
                .collect()
        }
        None => {
            classes.sort_by(|&x, &y| shape.size_param(x).total_cmp(&shape.size_param(y)));
            classes.into_iter().enumerate().map(|(k, e)| (e, k)).collect()
        }
    }
}

/// Maximal segment along which collinear edges of several tiles line up.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FaultSegment {
    pub start: Point,
    pub end: Point,
    pub edges: usize,
}

struct LineEdge {
    angle: f64,
    offset: f64,
    lo: f64,
    hi: f64,
    side: bool,
    parent: Option<TileId>,
}

/// Straight segments covered by edges from tiles on both sides, longer than
/// any single member edge, and not all from one parent.
pub fn fault_segments(t: &Tiling) -> Vec<FaultSegment> {
    let shape = t.shape();
    let tol = 1e-9 * shape.c;
    let mut edges: Vec<LineEdge> = Vec::with_capacity(3 * t.len());
    for tile in t.tiles() {
        let v = vertices(shape, tile);
        let [p0, p1, p2] = v.corners();
        let centroid = (p0 + p1 + p2) * (1.0 / 3.0);
        for (_, a, b) in tile_edges(&v) {
            let d = b - a;
            let mut angle = d.y.atan2(d.x);
            if angle < 0.0 {
                angle += PI;
            }
            if angle >= PI - 1e-12 {
                angle -= PI;
            }
            let u = Point::polar(1.0, angle);
            let n = u.perp();
            let offset = n.dot(a);
            let (ta, tb) = (u.dot(a), u.dot(b));
            edges.push(LineEdge {
                angle,
                offset,
                lo: ta.min(tb),
                hi: ta.max(tb),
                side: n.dot(centroid) > offset,
                parent: tile.parent,
            });
        }
    }
    edges.sort_by(|x, y| x.angle.total_cmp(&y.angle));
    let mut out = Vec::new();
    for line_group in split_by(&mut edges, |e| e.angle, 1e-9) {
        line_group.sort_by(|x, y| x.offset.total_cmp(&y.offset));
        for line in split_by(line_group, |e| e.offset, tol) {
            line.sort_by(|x, y| x.lo.total_cmp(&y.lo).then(x.hi.total_cmp(&y.hi)));
            let angle = line[0].angle;
            let offset = line[0].offset;
            let mut k = 0;
            while k < line.len() {
                let (mut hi, mut longest) = (line[k].hi, line[k].hi - line[k].lo);
                let lo = line[k].lo;
                let mut sides = [false; 2];
                let mut parents = Vec::new();
                let mut m = k;
                while m < line.len() && line[m].lo <= hi + tol {
                    hi = hi.max(line[m].hi);
                    longest = longest.max(line[m].hi - line[m].lo);
                    sides[line[m].side as usize] = true;
                    if !parents.contains(&line[m].parent) {
                        parents.push(line[m].parent);
                    }
                    m += 1;
                }
                let count = m - k;
                if count >= 2 && sides[0] && sides[1] && parents.len() > 1 && hi - lo > longest + tol {
                    let u = Point::polar(1.0, angle);
                    let base = u.perp() * offset;
                    out.push(FaultSegment {
                        start: base + u * lo,
                        end: base + u * hi,
                        edges: count,
                    });
                }
                k = m;
            }
        }
    }
    out.sort_by(|a, b| {
        (a.start.x, a.start.y, a.end.x, a.end.y)
            .partial_cmp(&(b.start.x, b.start.y, b.end.x, b.end.y))
            .unwrap_or(Ordering::Equal)
    });
    out
}

/// Splits a sorted slice into runs whose consecutive keys differ by at most
/// `tol`.
fn split_by<T>(v: &mut [T], key: impl Fn(&T) -> f64, tol: f64) -> Vec<&mut [T]> {
    if v.is_empty() {
        return Vec::new();
    }
    let mut cuts = vec![0];
    for k in 1..v.len() {
        if key(&v[k]) - key(&v[k - 1]) > tol {
            cuts.push(k);
        }
    }
    cuts.push(v.len());
    let mut out = Vec::new();
    let mut rest = v;
    for w in cuts.windows(2).rev() {
        let (head, tail) = rest.split_at_mut(w[0]);
        out.push(tail);
        rest = head;
    }
    out.reverse();
    out
}

/// The world-to-canvas map as `(scale, min_x, max_y, height)`.
pub fn viewport(t: &Tiling, width: f64) -> (f64, f64, f64, f64) {
    let shape = t.shape();
    let (mut minx, mut maxx, mut miny, mut maxy) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for tile in t.tiles() {
        for p in vertices(shape, tile).corners() {
            minx = minx.min(p.x);
            maxx = maxx.max(p.x);
            miny = miny.min(p.y);
            maxy = maxy.max(p.y);
        }
    }
    if !minx.is_finite() {
        return (1.0, 0.0, 0.0, width);
    }
    let span = (maxx - minx).max(maxy - miny).max(f64::MIN_POSITIVE);
    let scale = width / span;
    (scale, minx, maxy, (maxy - miny) * scale)
}

pub fn render_svg(t: &Tiling, options: &RenderOptions) -> String {
    let shape = t.shape();
    let (scale, minx, maxy, height) = viewport(t, options.width);
    let ranks = size_ranks(t);
    let smallest = t
        .size_classes()
        .into_iter()
        .map(|e| shape.hypotenuse_at(e))
        .fold(shape.c, f64::min);
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">",
        w = fmt_num(options.width),
        h = fmt_num(height)
    );
    let _ = writeln!(
        s,
        "<g transform=\"matrix({} 0 0 {} {} {})\" stroke=\"#222222\" stroke-width=\"{}\" stroke-linejoin=\"round\">",
        fmt_num(scale),
        fmt_num(-scale),
        fmt_num(-scale * minx),
        fmt_num(scale * maxy),
        fmt_num(0.02 * smallest)
    );
    for tile in t.tiles() {
        let e = tile.placement.size_exp;
        let fill = match options.color {
            ColorMode::Size => {
                let k = ranks.iter().find(|r| r.0 == e).map_or(0, |r| r.1);
                SIZE_PALETTE[k % SIZE_PALETTE.len()].to_string()
            }
            ColorMode::Phi => phi_color(tile.placement.handedness, tile.placement.phi),
        };
        let pts: Vec<String> = vertices(shape, tile)
            .corners()
            .iter()
            .map(|p| format!("{},{}", fmt_num(p.x), fmt_num(p.y)))
            .collect();
        let _ = writeln!(s, "<polygon points=\"{}\" fill=\"{}\"/>", pts.join(" "), fill);
    }
    s.push_str("</g>\n");
    if options.faults {
        let _ = writeln!(
            s,
            "<g class=\"faults\" transform=\"matrix({} 0 0 {} {} {})\" stroke=\"#d62728\" stroke-width=\"{}\" stroke-linecap=\"round\">",
            fmt_num(scale),
            fmt_num(-scale),
            fmt_num(-scale * minx),
            fmt_num(scale * maxy),
            fmt_num(0.08 * smallest)
        );
        for f in fault_segments(t) {
            let _ = writeln!(
                s,
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>",
                fmt_num(f.start.x),
                fmt_num(f.start.y),
                fmt_num(f.end.x),
                fmt_num(f.end.y)
            );
        }
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    s
}

/// Polygon vertex lists of a document produced by [`render_svg`].
pub fn parse_polygons(svg: &str) -> Vec<Vec<Point>> {
    let mut out = Vec::new();
    for chunk in svg.split("<polygon points=\"").skip(1) {
        let Some(end) = chunk.find('"') else { continue };
        let pts = chunk[..end]
            .split_whitespace()
            .filter_map(|pair| {
                let (x, y) = pair.split_once(',')?;
                Some(Point::new(x.parse().ok()?, y.parse().ok()?))
            })
            .collect();
        out.push(pts);
    }
    out
}

/// Fault-overlay segments of a document produced by [`render_svg`].
pub fn parse_fault_lines(svg: &str) -> Vec<(Point, Point)> {
    let attr = |chunk: &str, name: &str| -> Option<f64> {
        let start = chunk.find(&format!("{name}=\""))? + name.len() + 2;
        let len = chunk[start..].find('"')?;
        chunk[start..start + len].parse().ok()
    };
    svg.split("<line ")
        .skip(1)
        .filter_map(|c| {
            Some((
                Point::new(attr(c, "x1")?, attr(c, "y1")?),
                Point::new(attr(c, "x2")?, attr(c, "y2")?),
            ))
        })
        .collect()
}
