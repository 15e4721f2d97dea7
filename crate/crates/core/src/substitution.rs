//! The five-daughter subdivision rule, largest-first deflation, boundary
//! tracing and nested supertile chains.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    compose, vertices, Handedness, Motion, Orientation, OrientationWord, Placement, Point,
    Rationality, SizeExp, Tile, TileId, TriangleShape,
};

pub const DEFAULT_MAX_TILES: usize = 10_000_000;
pub const MAX_TILES_ENV: &str = "TILELAB_MAX_TILES";
pub const TILING_FORMAT: &str = "tilelab-tiling/1";

/// Tile cap from the environment, falling back to the default.
pub fn max_tiles() -> usize {
    std::env::var(MAX_TILES_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&v| v > 0)
        .unwrap_or(DEFAULT_MAX_TILES)
}

/// Orientations of the daughters relative to their parent, in emission order:
/// corner at the right angle, corner at the small angle, the two halves of the
/// flipped rectangle, and the `a`-scaled daughter.
pub const DAUGHTER_WORDS: [OrientationWord; 5] = [
    OrientationWord { handedness: Handedness::Minus, m: 1, quarter: 0 },
    OrientationWord { handedness: Handedness::Minus, m: 1, quarter: 0 },
    OrientationWord { handedness: Handedness::Plus, m: 1, quarter: 0 },
    OrientationWord { handedness: Handedness::Plus, m: 1, quarter: 2 },
    OrientationWord { handedness: Handedness::Minus, m: 1, quarter: 1 },
];

/// Daughter motions relative to a parent in its own frame at scale 1.
pub fn daughter_frames(shape: &TriangleShape) -> [Motion; 5] {
    let (a, b, c) = (shape.a, shape.b, shape.c);
    // the b-leg half: small corner at the origin, right angle at the altitude foot
    let tb = Motion {
        orientation: Orientation::reflection(shape.theta),
        scale: b / c,
        shift: Point::ORIGIN,
    };
    let half = |h: Handedness, phi: f64, shift: Point| Motion {
        orientation: Orientation::new(h, phi),
        scale: 0.5,
        shift,
    };
    let centre = Point::new(0.5 * b, 0.5 * a);
    let medial = [
        half(Handedness::Plus, 0.0, centre),
        half(Handedness::Plus, 0.0, Point::ORIGIN),
        half(Handedness::Minus, 0.0, centre),
        half(Handedness::Minus, PI, Point::new(b, 0.0)),
    ];
    let ta = Motion {
        orientation: Orientation::reflection(FRAC_PI_2 + shape.theta),
        scale: a / c,
        shift: Point::new(b, 0.0),
    };
    [
        compose(&tb, &medial[0]),
        compose(&tb, &medial[1]),
        compose(&tb, &medial[2]),
        compose(&tb, &medial[3]),
        ta,
    ]
}

fn daughter_exp(e: SizeExp, k: usize) -> SizeExp {
    if k < 4 {
        SizeExp::new(e.i, e.j + 1)
    } else {
        SizeExp::new(e.i + 1, e.j)
    }
}

fn place_daughters(
    shape: &TriangleShape,
    frames: &[Motion; 5],
    tile: &Tile,
    first_id: TileId,
) -> [Tile; 5] {
    let m = tile.placement.motion(shape);
    std::array::from_fn(|k| {
        let d = compose(&m, &frames[k]);
        Tile {
            id: first_id + k as TileId,
            parent: Some(tile.id),
            placement: Placement {
                handedness: d.orientation.handedness,
                phi: d.orientation.phi,
                origin: d.shift,
                size_exp: daughter_exp(tile.placement.size_exp, k),
            },
        }
    })
}

/// Splits one tile into its five daughters, numbered from `first_id`.
pub fn subdivide(shape: &TriangleShape, tile: &Tile, first_id: TileId) -> Result<[Tile; 5]> {
    let s = shape.scale(tile.placement.size_exp);
    if !(s.is_finite() && s > 0.0) || !(tile.placement.origin.x.is_finite()) {
        return Err(Error::Geometry(format!("tile {} has zero area", tile.id)));
    }
    Ok(place_daughters(shape, &daughter_frames(shape), tile, first_id))
}

/// Either a tile passed through unchanged or its five daughters.
struct Brood {
    buf: [Tile; 5],
    len: u8,
    pos: u8,
}

impl Iterator for Brood {
    type Item = Tile;
    fn next(&mut self) -> Option<Tile> {
        if self.pos < self.len {
            self.pos += 1;
            Some(self.buf[self.pos as usize - 1])
        } else {
            None
        }
    }
}

/// A finite patch of tiles grown from the root by repeated deflation.
#[derive(Clone, Debug)]
pub struct Tiling {
    shape: TriangleShape,
    tiles: Vec<Tile>,
    generation: u32,
    parents: Vec<Option<TileId>>,
}

impl Tiling {
    /// `T_0`: the root tile alone.
    pub fn root(shape: &TriangleShape) -> Tiling {
        Tiling {
            shape: shape.clone(),
            tiles: vec![Tile {
                id: 0,
                parent: None,
                placement: Placement::ROOT,
            }],
            generation: 0,
            parents: vec![None],
        }
    }

    pub fn shape(&self) -> &TriangleShape {
        &self.shape
    }

    pub fn tiles(&self) -> &[Tile] {
        &self.tiles
    }

    pub fn len(&self) -> usize {
        self.tiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }

    pub fn generation(&self) -> u32 {
        self.generation
    }

    pub fn parent_of(&self, id: TileId) -> Option<TileId> {
        self.parents.get(id as usize).copied().flatten()
    }

    pub fn tile(&self, id: TileId) -> Option<&Tile> {
        self.tiles
            .binary_search_by_key(&id, |t| t.id)
            .ok()
            .map(|k| &self.tiles[k])
            .or_else(|| self.tiles.iter().find(|t| t.id == id))
    }

    /// Whether `id` is `ancestor` or lies below it.
    pub fn descends_from(&self, id: TileId, ancestor: TileId) -> bool {
        let mut cur = Some(id);
        while let Some(c) = cur {
            if c == ancestor {
                return true;
            }
            if c < ancestor {
                return false;
            }
            cur = self.parent_of(c);
        }
        false
    }

    /// Current tiles whose union is the tile `ancestor` of an earlier generation.
    pub fn descendants_of(&self, ancestor: TileId) -> Vec<&Tile> {
        self.tiles
            .iter()
            .filter(|t| self.descends_from(t.id, ancestor))
            .collect()
    }

    /// Exponent pairs present, in lexicographic order.
    pub fn size_classes(&self) -> BTreeSet<SizeExp> {
        self.tiles.iter().map(|t| t.placement.size_exp).collect()
    }

    /// Predicate selecting the tiles the next deflation subdivides.
    fn largest_selector(&self) -> Result<Selector> {
        if let Some((p, q)) = self.shape.pq() {
            let key = self
                .tiles
                .iter()
                .map(|t| t.placement.size_exp.i as u64 * p as u64 + t.placement.size_exp.j as u64 * q as u64)
                .min()
                .ok_or_else(|| Error::Argument("cannot deflate an empty tiling".into()))?;
            return Ok(Selector::Key { p, q, key });
        }
        let classes = self.size_classes();
        let mut iter = classes.iter().copied();
        let mut best = iter
            .next()
            .ok_or_else(|| Error::Argument("cannot deflate an empty tiling".into()))?;
        for e in iter {
            if self.shape.compare_sizes(e, best)? == Ordering::Less {
                best = e;
            }
        }
        for &e in &classes {
            self.shape.compare_sizes(e, best)?;
        }
        Ok(Selector::Exp(best))
    }

    /// Subdivides every tile of maximal size, with the default tile cap.
    pub fn deflate(&self) -> Result<Tiling> {
        self.deflate_with_cap(max_tiles())
    }

    pub fn deflate_with_cap(&self, cap: usize) -> Result<Tiling> {
        let sel = self.largest_selector()?;
        let chosen: Vec<bool> = self.tiles.iter().map(|t| sel.matches(t.placement.size_exp)).collect();
        let count = chosen.iter().filter(|&&c| c).count();
        let requested = self.tiles.len() + 4 * count;
        if requested > cap {
            return Err(Error::Resource {
                what: "tile count",
                requested: requested as u128,
                cap: cap as u128,
            });
        }
        let next_id = self.parents.len() as TileId;
        let mut rank = Vec::with_capacity(self.tiles.len());
        let mut k = 0u64;
        for &c in &chosen {
            rank.push(if c { Some(k) } else { None });
            if c {
                k += 1;
            }
        }
        if let Some(t) = self.tiles.iter().zip(&chosen).find(|(_, &c)| c).map(|(t, _)| t) {
            // every chosen tile shares one scale
            subdivide(&self.shape, t, 0)?;
        }
        let frames = daughter_frames(&self.shape);
        let shape = &self.shape;
        let expand = |(t, r): (&Tile, &Option<u64>)| match r {
            Some(k) => Brood {
                buf: place_daughters(shape, &frames, t, next_id + 5 * k),
                len: 5,
                pos: 0,
            },
            None => Brood {
                buf: [*t; 5],
                len: 1,
                pos: 0,
            },
        };
        let tiles: Vec<Tile> = if self.tiles.len() >= 4096 {
            self.tiles.par_iter().zip(rank.par_iter()).flat_map_iter(expand).collect()
        } else {
            self.tiles.iter().zip(rank.iter()).flat_map(expand).collect()
        };
        let mut parents = Vec::with_capacity(self.parents.len() + 5 * count);
        parents.extend_from_slice(&self.parents);
        for (t, c) in self.tiles.iter().zip(&chosen) {
            if *c {
                parents.extend(std::iter::repeat_n(Some(t.id), 5));
            }
        }
        Ok(Tiling {
            shape: self.shape.clone(),
            tiles,
            generation: self.generation + 1,
            parents,
        })
    }

    pub fn total_area(&self) -> f64 {
        self.tiles
            .iter()
            .map(|t| vertices(&self.shape, t).area())
            .sum()
    }

    /// Largest over smallest hypotenuse.
    pub fn hypotenuse_ratio(&self) -> f64 {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for e in self.size_classes() {
            let h = self.shape.hypotenuse_at(e);
            lo = lo.min(h);
            hi = hi.max(h);
        }
        hi / lo
    }

    pub fn to_record(&self) -> TilingRecord {
        TilingRecord {
            format: TILING_FORMAT.to_string(),
            shape: ShapeRecord::from(&self.shape),
            generation: self.generation,
            tiles: self
                .tiles
                .iter()
                .map(|t| TileRecord {
                    id: t.id,
                    parent: t.parent,
                    handedness: t.placement.handedness,
                    phi: t.placement.phi,
                    origin: t.placement.origin.into(),
                    i: t.placement.size_exp.i,
                    j: t.placement.size_exp.j,
                })
                .collect(),
        }
    }

    pub fn from_record(rec: &TilingRecord) -> Result<Tiling> {
        if rec.format != TILING_FORMAT {
            return Err(Error::Argument(format!(
                "unsupported tiling format {:?}, expected {TILING_FORMAT:?}",
                rec.format
            )));
        }
        let shape = rec.shape.to_shape()?;
        let mut tiles = Vec::with_capacity(rec.tiles.len());
        let mut max_id = 0;
        for t in &rec.tiles {
            if !(t.phi.is_finite() && t.origin[0].is_finite() && t.origin[1].is_finite()) {
                return Err(Error::Argument(format!("tile {} has non-finite placement", t.id)));
            }
            max_id = max_id.max(t.id).max(t.parent.unwrap_or(0));
            tiles.push(Tile {
                id: t.id,
                parent: t.parent,
                placement: Placement {
                    handedness: t.handedness,
                    phi: crate::geometry::wrap_angle(t.phi),
                    origin: Point::from(t.origin),
                    size_exp: SizeExp::new(t.i, t.j),
                },
            });
        }
        let mut parents = vec![None; if tiles.is_empty() { 0 } else { max_id as usize + 1 }];
        for t in &tiles {
            parents[t.id as usize] = t.parent;
        }
        Ok(Tiling {
            shape,
            tiles,
            generation: rec.generation,
            parents,
        })
    }
}

#[derive(Clone, Copy, Debug)]
enum Selector {
    Key { p: u32, q: u32, key: u64 },
    Exp(SizeExp),
}

impl Selector {
    fn matches(&self, e: SizeExp) -> bool {
        match *self {
            Selector::Key { p, q, key } => e.i as u64 * p as u64 + e.j as u64 * q as u64 == key,
            Selector::Exp(x) => x == e,
        }
    }
}

/// `T_n`, refusing to exceed the tile cap.
pub fn build_tn(shape: &TriangleShape, n: u32) -> Result<Tiling> {
    build_tn_with_cap(shape, n, max_tiles())
}

pub fn build_tn_with_cap(shape: &TriangleShape, n: u32, cap: usize) -> Result<Tiling> {
    let mut t = Tiling::root(shape);
    for _ in 0..n {
        t = t.deflate_with_cap(cap)?;
    }
    Ok(t)
}

/// Generation at which tile `id` of `t` is first split.
pub fn first_subdivision(t: &Tiling, id: TileId, cap: usize) -> Result<u32> {
    if t.tile(id).is_none() {
        return Err(Error::Argument(format!("tile {id} is not present")));
    }
    let mut cur = t.clone();
    loop {
        cur = cur.deflate_with_cap(cap)?;
        if cur.tile(id).is_none() {
            return Ok(cur.generation);
        }
    }
}

/// Whether the tiles now covering `anchor` (a tile of an earlier generation)
/// reproduce `reference` under the motion carrying the root onto `anchor`.
pub fn subcollection_matches(t: &Tiling, anchor: &Tile, reference: &Tiling) -> bool {
    let desc = t.descendants_of(anchor.id);
    if desc.len() != reference.len() {
        return false;
    }
    let shape = t.shape();
    let inv = anchor.placement.motion(shape).inverse();
    let base = anchor.placement.size_exp;
    let ratio = shape.c / reference.shape().c;
    let tol = 1e-7 * shape.c;
    let key = |h: Handedness, e: SizeExp, p: Point| {
        (e, h, (p.x / tol).round() as i64, (p.y / tol).round() as i64)
    };
    let mut mine = Vec::with_capacity(desc.len());
    for d in &desc {
        let e = d.placement.size_exp;
        if e.i < base.i || e.j < base.j {
            return false;
        }
        let rel = SizeExp::new(e.i - base.i, e.j - base.j);
        let m = compose(&inv, &d.placement.motion(shape));
        mine.push((key(m.orientation.handedness, rel, m.shift), m));
    }
    let mut theirs: Vec<_> = reference
        .tiles()
        .iter()
        .map(|r| {
            let m = r.placement.motion(reference.shape());
            let shift = m.shift * ratio;
            (key(m.orientation.handedness, r.placement.size_exp, shift), m)
        })
        .collect();
    mine.sort_by_key(|x| x.0);
    theirs.sort_by_key(|x| x.0);
    mine.iter().zip(&theirs).all(|((ka, ma), (kb, mb))| {
        ka.0 == kb.0
            && ka.1 == kb.1
            && ma.shift.dist(mb.shift * ratio) <= 10.0 * tol
            && ma.orientation.approx_eq(mb.orientation, 1e-9)
    })
}

/// One nested supertile: `tiling` is `T_order`, placed in the plane by `embedding`.
#[derive(Clone, Debug)]
pub struct SupertileLevel {
    pub requested: u32,
    pub order: u32,
    pub tile: Option<TileId>,
    pub tiling: Tiling,
    pub embedding: Motion,
}

#[derive(Clone, Debug)]
pub struct SupertileChain {
    pub levels: Vec<SupertileLevel>,
    pub choices: Vec<(u32, usize)>,
}

impl SupertileChain {
    /// Motions placing each tile of level `k` in the plane of the chain.
    pub fn placed_motions(&self, k: usize) -> Vec<Motion> {
        let lvl = &self.levels[k];
        let shape = lvl.tiling.shape();
        lvl.tiling
            .tiles()
            .iter()
            .map(|t| compose(&lvl.embedding, &t.placement.motion(shape)))
            .collect()
    }
}

/// Nested supertiles `S_1 ⊂ S_2 ⊂ …`, where `choices[k] = (n, index)` picks the
/// tile at position `index` of `T_n`.
pub fn grow_supertile(shape: &TriangleShape, choices: &[(u32, usize)]) -> Result<SupertileChain> {
    grow_supertile_with_cap(shape, choices, max_tiles())
}

pub fn grow_supertile_with_cap(
    shape: &TriangleShape,
    choices: &[(u32, usize)],
    cap: usize,
) -> Result<SupertileChain> {
    let mut levels = vec![SupertileLevel {
        requested: 0,
        order: 0,
        tile: None,
        tiling: Tiling::root(shape),
        embedding: Motion::IDENTITY,
    }];
    for (k, &(n, index)) in choices.iter().enumerate() {
        let mut t = build_tn_with_cap(shape, n, cap)?;
        let tile = *t.tiles().get(index).ok_or_else(|| {
            Error::Argument(format!("T_{n} has {} tiles, no position {index}", t.len()))
        })?;
        let prev = levels.last().expect("chain starts with T_0");
        if k > 0 {
            loop {
                if subcollection_matches(&t, &tile, &prev.tiling) {
                    break;
                }
                let d = t.descendants_of(tile.id).len();
                if d > prev.tiling.len() {
                    return Err(Error::Internal(format!(
                        "tile {index} of T_{n} outgrew T_{} without matching it",
                        prev.order
                    )));
                }
                t = t.deflate_with_cap(cap)?;
            }
        }
        let inv = tile.placement.motion(shape).inverse();
        let embedding = compose(&prev.embedding, &inv);
        levels.push(SupertileLevel {
            requested: n,
            order: t.generation(),
            tile: Some(tile.id),
            tiling: t,
            embedding,
        });
    }
    Ok(SupertileChain {
        levels,
        choices: choices.to_vec(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RootEdge {
    Hypotenuse,
    LongLeg,
    ShortLeg,
}

/// Edge of a single tile: hypotenuse, long leg or short leg.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    H,
    L,
    S,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

/// Directed edges of a tile. Hypotenuses run small → other, long legs
/// small → right and short legs right → other.
pub fn tile_edges(v: &crate::geometry::TileVertices) -> [(EdgeKind, Point, Point); 3] {
    [
        (EdgeKind::H, v.small, v.other),
        (EdgeKind::L, v.small, v.right),
        (EdgeKind::S, v.right, v.other),
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EdgeSegment {
    pub tile: TileId,
    pub kind: EdgeKind,
    pub sign: Sign,
    pub start: f64,
    pub length: f64,
    pub size_exp: SizeExp,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeTrace {
    pub edge: RootEdge,
    pub length: f64,
    pub segments: Vec<EdgeSegment>,
}

impl EdgeTrace {
    pub fn letters(&self) -> Vec<(EdgeKind, Sign)> {
        self.segments.iter().map(|s| (s.kind, s.sign)).collect()
    }
}

/// Tile edges lying on one edge of the root, ordered from its start vertex.
pub fn trace_edge(t: &Tiling, edge: RootEdge) -> Result<EdgeTrace> {
    let shape = t.shape();
    let root = crate::geometry::vertices_of(shape, &Placement::ROOT);
    let (p0, p1) = match edge {
        RootEdge::Hypotenuse => (root.small, root.other),
        RootEdge::LongLeg => (root.small, root.right),
        RootEdge::ShortLeg => (root.right, root.other),
    };
    let len = p0.dist(p1);
    let dir = (p1 - p0) * (1.0 / len);
    let tol = 1e-9 * shape.c;
    let mut segments = Vec::new();
    for tile in t.tiles() {
        let v = vertices(shape, tile);
        for (kind, a, b) in tile_edges(&v) {
            let (da, db) = (dir.cross(a - p0), dir.cross(b - p0));
            let (ta, tb) = (dir.dot(a - p0), dir.dot(b - p0));
            if da.abs() <= tol && db.abs() <= tol {
                let (lo, hi) = (ta.min(tb), ta.max(tb));
                if hi <= tol || lo >= len - tol {
                    continue;
                }
                if lo < -tol || hi > len + tol {
                    return Err(Error::Internal(format!(
                        "edge of tile {} runs past the root edge",
                        tile.id
                    )));
                }
                segments.push(EdgeSegment {
                    tile: tile.id,
                    kind,
                    sign: if tb > ta { Sign::Plus } else { Sign::Minus },
                    start: lo,
                    length: hi - lo,
                    size_exp: tile.placement.size_exp,
                });
            } else if (da > tol && db < -tol) || (da < -tol && db > tol) {
                let x = ta + (tb - ta) * da / (da - db);
                if x > tol && x < len - tol {
                    return Err(Error::Internal(format!(
                        "edge of tile {} crosses the root edge",
                        tile.id
                    )));
                }
            }
        }
    }
    segments.sort_by(|x, y| x.start.total_cmp(&y.start));
    let mut pos = 0.0;
    for s in &segments {
        if (s.start - pos).abs() > 1e-8 * shape.c {
            return Err(Error::Internal(format!(
                "root edge coverage breaks at {pos} (next segment starts at {})",
                s.start
            )));
        }
        pos = s.start + s.length;
    }
    if (pos - len).abs() > 1e-9 * shape.c {
        return Err(Error::Internal(format!("root edge covered to {pos} of {len}")));
    }
    Ok(EdgeTrace {
        edge,
        length: len,
        segments,
    })
}

/// Shape parameters as stored in a tiling file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeRecord {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub theta: f64,
    pub rationality: Rationality,
}

impl From<&TriangleShape> for ShapeRecord {
    fn from(s: &TriangleShape) -> ShapeRecord {
        ShapeRecord {
            a: s.a,
            b: s.b,
            c: s.c,
            theta: s.theta,
            rationality: s.rationality,
        }
    }
}

impl ShapeRecord {
    pub fn to_shape(&self) -> Result<TriangleShape> {
        let shape = match self.rationality {
            Rationality::Rational { p, q } => {
                let s = TriangleShape::from_pq(p, q)?.with_hypotenuse(self.c)?;
                if (s.theta - self.theta).abs() > 1e-9 {
                    return Err(Error::Argument(format!(
                        "stored angle {} does not match p/q = {p}/{q}",
                        self.theta
                    )));
                }
                s
            }
            Rationality::Irrational => TriangleShape::from_theta(self.theta, self.c)?,
        };
        Ok(shape)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TileRecord {
    pub id: TileId,
    pub parent: Option<TileId>,
    pub handedness: Handedness,
    pub phi: f64,
    pub origin: [f64; 2],
    pub i: u32,
    pub j: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TilingRecord {
    pub format: String,
    pub shape: ShapeRecord,
    pub generation: u32,
    pub tiles: Vec<TileRecord>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn til12() -> TriangleShape {
        TriangleShape::from_pq(1, 2).unwrap()
    }

    fn hyp_census(t: &Tiling) -> BTreeMap<u64, usize> {
        let mut m = BTreeMap::new();
        for tile in t.tiles() {
            let h = t.shape().hypotenuse_at(tile.placement.size_exp);
            *m.entry((h * 1e9).round() as u64).or_insert(0) += 1;
        }
        m
    }

    #[test]
    fn daughter_orientations_form_the_expected_multiset() {
        for shape in [til12(), TriangleShape::from_theta(1.0, 1.0).unwrap()] {
            let th = shape.theta;
            let frames = daughter_frames(&shape);
            let mut got: Vec<_> = frames.iter().map(|f| f.orientation).collect();
            let want = [
                Orientation::reflection(th),
                Orientation::reflection(th),
                Orientation::rotation(th),
                Orientation::rotation(PI + th),
                Orientation::reflection(FRAC_PI_2 + th),
            ];
            for w in want {
                let k = got.iter().position(|g| g.approx_eq(w, 1e-12)).expect("missing orientation");
                got.remove(k);
            }
            for (f, w) in frames.iter().zip(DAUGHTER_WORDS) {
                assert!(f.orientation.approx_eq(w.realize(th), 1e-12));
            }
        }
    }

    #[test]
    fn daughters_cover_parent_area() {
        let shape = til12();
        let root = Tiling::root(&shape);
        let kids = subdivide(&shape, &root.tiles()[0], 1).unwrap();
        let area: f64 = kids.iter().map(|k| vertices(&shape, k).area()).sum();
        assert!((area - shape.area()).abs() < 1e-12 * shape.area());
        let exps: Vec<_> = kids.iter().map(|k| k.placement.size_exp).collect();
        assert_eq!(exps.iter().filter(|e| **e == SizeExp::new(0, 1)).count(), 4);
        assert_eq!(exps[4], SizeExp::new(1, 0));
    }

    #[test]
    fn daughter_corners_land_on_construction_points() {
        let shape = TriangleShape::from_theta(0.6, 1.0).unwrap();
        let (a, b, c) = (shape.a, shape.b, shape.c);
        let f = Point::new(b * b * b / (c * c), a * b * b / (c * c));
        let cr = Point::new(b, 0.0);
        let m1 = f.midpoint(cr);
        let m2 = Point::ORIGIN.midpoint(cr);
        let m3 = Point::ORIGIN.midpoint(f);
        let kids = subdivide(&shape, &Tiling::root(&shape).tiles()[0], 1).unwrap();
        let tri = |k: usize| {
            let v = vertices(&shape, &kids[k]);
            let mut c = v.corners().to_vec();
            c.sort_by(|p, q| p.x.total_cmp(&q.x).then(p.y.total_cmp(&q.y)));
            c
        };
        let same = |got: Vec<Point>, mut want: Vec<Point>| {
            want.sort_by(|p, q| p.x.total_cmp(&q.x).then(p.y.total_cmp(&q.y)));
            got.iter().zip(&want).all(|(p, q)| p.dist(*q) < 1e-12)
        };
        assert!(same(tri(0), vec![cr, m1, m2]));
        assert!(same(tri(1), vec![m2, m3, Point::ORIGIN]));
        assert!(same(tri(2), vec![m1, f, m2]));
        assert!(same(tri(3), vec![f, m3, m2]));
        assert!(same(tri(4), vec![cr, f, Point::new(b, a)]));
    }

    #[test]
    fn census_of_second_generation() {
        // a > b/2
        let wide = TriangleShape::from_theta(0.8, 1.0).unwrap();
        let t2 = build_tn(&wide, 2).unwrap();
        assert_eq!(t2.len(), 9);
        let (a, b, c) = (wide.a, wide.b, wide.c);
        let mut want = BTreeMap::new();
        for (h, n) in [(a * a / c, 1), (a * b / (2.0 * c), 4), (b / 2.0, 4)] {
            *want.entry((h * 1e9).round() as u64).or_insert(0) += n;
        }
        assert_eq!(hyp_census(&t2), want);

        let narrow = TriangleShape::from_theta(0.3, 1.0).unwrap();
        let t2 = build_tn(&narrow, 2).unwrap();
        assert_eq!(t2.len(), 21);
        let (a, b, c) = (narrow.a, narrow.b, narrow.c);
        let mut want = BTreeMap::new();
        for (h, n) in [(b * b / (4.0 * c), 16), (a * b / (2.0 * c), 4), (a, 1)] {
            *want.entry((h * 1e9).round() as u64).or_insert(0) += n;
        }
        assert_eq!(hyp_census(&t2), want);
    }

    #[test]
    fn pinwheel_counts() {
        let p = TriangleShape::from_pq(1, 1).unwrap();
        assert_eq!(build_tn(&p, 0).unwrap().len(), 1);
        assert_eq!(build_tn(&p, 2).unwrap().len(), 25);
        assert_eq!(build_tn(&p, 3).unwrap().len(), 125);
        let t1 = build_tn(&p.with_hypotenuse(5f64.sqrt()).unwrap(), 1).unwrap();
        for tile in t1.tiles() {
            assert!((t1.shape().hypotenuse_at(tile.placement.size_exp) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn til12_second_generation_classes() {
        let t2 = build_tn(&til12(), 2).unwrap();
        let mut by_key = BTreeMap::new();
        for tile in t2.tiles() {
            *by_key.entry(t2.shape().size_key(tile.placement.size_exp).unwrap()).or_insert(0) += 1;
        }
        // keys count in units of α
        assert_eq!(by_key, BTreeMap::from([(2, 5), (3, 4)]));
    }

    #[test]
    fn cap_is_enforced() {
        let err = build_tn_with_cap(&til12(), 10, 100).unwrap_err();
        assert!(matches!(err, Error::Resource { .. }));
    }

    #[test]
    fn sigma0_from_first_generation() {
        let t = build_tn(&til12().with_hypotenuse(4.0).unwrap(), 2).unwrap();
        let tr = trace_edge(&t, RootEdge::Hypotenuse).unwrap();
        assert_eq!(
            tr.letters(),
            vec![(EdgeKind::L, Sign::Plus), (EdgeKind::L, Sign::Minus), (EdgeKind::H, Sign::Plus)]
        );
        let s = t.shape();
        let lens: Vec<f64> = tr.segments.iter().map(|x| x.length).collect();
        let want = [s.b * s.b / (2.0 * s.c), s.b * s.b / (2.0 * s.c), s.b / 2.0];
        for (g, w) in lens.iter().zip(want) {
            assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn trace_of_root_is_single_segment() {
        let s = TriangleShape::from_theta(0.5, 2.0).unwrap();
        let t = Tiling::root(&s);
        for (e, len) in [(RootEdge::Hypotenuse, s.c), (RootEdge::LongLeg, s.b), (RootEdge::ShortLeg, s.a)] {
            let tr = trace_edge(&t, e).unwrap();
            assert_eq!(tr.segments.len(), 1);
            assert!((tr.segments[0].length - len).abs() < 1e-14);
            assert_eq!(tr.segments[0].sign, Sign::Plus);
        }
    }

    #[test]
    fn til2_hypotenuse_after_two_steps() {
        let t = build_tn(&TriangleShape::from_pq(2, 1).unwrap(), 2).unwrap();
        let tr = trace_edge(&t, RootEdge::Hypotenuse).unwrap();
        let h = tr.segments.iter().filter(|s| s.kind == EdgeKind::H).count();
        let sh = tr.segments.iter().filter(|s| s.kind == EdgeKind::S).count();
        assert_eq!((h, sh), (4, 1));
    }

    #[test]
    fn supertile_chain_basics() {
        let s = til12();
        let empty = grow_supertile(&s, &[]).unwrap();
        assert_eq!(empty.levels.len(), 1);
        assert_eq!(empty.levels[0].tiling.len(), 1);

        let one = grow_supertile(&s, &[(1, 4)]).unwrap();
        assert_eq!(one.levels[1].order, 1);
        // the chosen fifth daughter is carried onto the root triangle
        let placed = one.placed_motions(1);
        let m = placed[4];
        assert!(m.orientation.approx_eq(Orientation::IDENTITY, 1e-12));
        assert!((m.scale - 1.0).abs() < 1e-12);
        assert!(m.shift.norm() < 1e-12);
    }

    #[test]
    fn pinwheel_chain_orders_accumulate() {
        // every tile splits every step, so t_i needs N_{i-1} further steps
        let p = TriangleShape::from_pq(1, 1).unwrap();
        let ch = grow_supertile(&p, &[(1, 3), (2, 7), (1, 2)]).unwrap();
        let orders: Vec<u32> = ch.levels.iter().skip(1).map(|l| l.order).collect();
        assert_eq!(orders, vec![1, 3, 4]);
    }

    #[test]
    fn first_subdivision_of_fifth_daughter() {
        let t1 = build_tn(&til12(), 1).unwrap();
        let id = t1.tiles()[4].id;
        // the fifth daughter is the larger class in T_1 and splits next
        let n = first_subdivision(&t1, id, 1000).unwrap();
        assert_eq!(n, 2);
        let t = build_tn(&TriangleShape::from_pq(1, 3).unwrap(), 1).unwrap();
        assert_eq!(first_subdivision(&t, 5, 1000).unwrap(), 2);
        let medial = t1.tiles()[0].id;
        assert_eq!(first_subdivision(&t1, medial, 1000).unwrap(), 3);
    }

    #[test]
    fn record_round_trip() {
        let t = build_tn(&til12(), 3).unwrap();
        let rec = t.to_record();
        let json = serde_json::to_string(&rec).unwrap();
        let back = Tiling::from_record(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back.len(), t.len());
        assert_eq!(back.shape(), t.shape());
        for (x, y) in back.tiles().iter().zip(t.tiles()) {
            assert_eq!(x, y);
        }
    }
}
