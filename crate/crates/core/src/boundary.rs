//! One-dimensional boundary substitutions and fault-line slippage.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use serde::Serialize;

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::geometry::TriangleShape;
use crate::substitution::{build_tn, trace_edge, EdgeKind, RootEdge, Sign};

pub const DEFAULT_MAX_LETTERS: u128 = 100_000_000;

/// Symbols of a rule. Unsigned symbols are their own reversal.
#[derive(Debug, PartialEq, Eq)]
pub struct Alphabet {
    pub name: &'static str,
    pub symbols: &'static [&'static str],
    pub signed: &'static [bool],
}

/// `{H±, L±}`, the uncontracted boundary alphabet of `Til(1/2)`.
pub static TIL12_SIGNED: Alphabet = Alphabet {
    name: "til12-signed",
    symbols: &["H", "L"],
    signed: &[true, true],
};

/// `{H±, L}` with `L` the contracted pair `L⁺L⁻`.
pub static TIL12: Alphabet = Alphabet {
    name: "til12",
    symbols: &["H", "L"],
    signed: &[true, false],
};

/// `{H, S}` for `Til(2)`, carried with signs.
pub static TIL2: Alphabet = Alphabet {
    name: "til2",
    symbols: &["H", "S"],
    signed: &[true, true],
};

/// `{H, L, h}` for `Til(1/3)`, carried with signs.
pub static TIL13: Alphabet = Alphabet {
    name: "til13",
    symbols: &["H", "L", "h"],
    signed: &[true, true, true],
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter {
    pub symbol: u8,
    pub sign: Sign,
}

impl Letter {
    pub const fn new(symbol: u8, sign: Sign) -> Letter {
        Letter { symbol, sign }
    }

    pub const fn plus(symbol: u8) -> Letter {
        Letter::new(symbol, Sign::Plus)
    }

    pub const fn minus(symbol: u8) -> Letter {
        Letter::new(symbol, Sign::Minus)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Word {
    pub alphabet: &'static Alphabet,
    pub letters: Vec<Letter>,
}

impl Word {
    pub fn new(alphabet: &'static Alphabet, letters: Vec<Letter>) -> Result<Word> {
        for l in &letters {
            let ok = (l.symbol as usize) < alphabet.symbols.len()
                && (alphabet.signed[l.symbol as usize] || l.sign == Sign::Plus);
            if !ok {
                return Err(Error::Argument(format!(
                    "letter {l:?} is not in alphabet {}",
                    alphabet.name
                )));
            }
        }
        Ok(Word { alphabet, letters })
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Whitespace separated tokens such as `H+ L H-`.
    pub fn parse(alphabet: &'static Alphabet, text: &str) -> Result<Word> {
        let mut letters = Vec::new();
        for tok in text.split_whitespace() {
            let (name, sign) = match tok.strip_suffix('+') {
                Some(n) => (n, Sign::Plus),
                None => match tok.strip_suffix('-') {
                    Some(n) => (n, Sign::Minus),
                    None => (tok, Sign::Plus),
                },
            };
            let k = alphabet
                .symbols
                .iter()
                .position(|s| *s == name)
                .ok_or_else(|| Error::Argument(format!("unknown letter {tok:?}")))?;
            letters.push(Letter::new(k as u8, sign));
        }
        Word::new(alphabet, letters)
    }

    pub fn counts(&self) -> Vec<u64> {
        let mut c = vec![0u64; self.alphabet.symbols.len()];
        for l in &self.letters {
            c[l.symbol as usize] += 1;
        }
        c
    }
}

fn write_letter(f: &mut fmt::Formatter<'_>, a: &Alphabet, l: Letter) -> fmt::Result {
    write!(f, "{}", a.symbols[l.symbol as usize])?;
    if a.signed[l.symbol as usize] {
        write!(f, "{}", l.sign.symbol())?;
    }
    Ok(())
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, l) in self.letters.iter().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            write_letter(f, self.alphabet, *l)?;
        }
        Ok(())
    }
}

/// A substitution on signed letters: `σ(x⁻)` is `σ(x⁺)` reversed with every
/// sign flipped.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubstitutionRule1D {
    pub alphabet: &'static Alphabet,
    images: Vec<Vec<Letter>>,
    pub abelianization: Vec<Vec<u64>>,
}

impl SubstitutionRule1D {
    pub fn new(alphabet: &'static Alphabet, images: Vec<Vec<Letter>>) -> Result<Self> {
        let n = alphabet.symbols.len();
        if images.len() != n {
            return Err(Error::Argument("one image per symbol required".into()));
        }
        let mut ab = vec![vec![0u64; n]; n];
        for (j, img) in images.iter().enumerate() {
            let w = Word::new(alphabet, img.clone())?;
            for (i, c) in w.counts().into_iter().enumerate() {
                ab[i][j] = c;
            }
        }
        Ok(SubstitutionRule1D {
            alphabet,
            images,
            abelianization: ab,
        })
    }

    pub fn flip(&self, l: Letter) -> Letter {
        if self.alphabet.signed[l.symbol as usize] {
            Letter::new(l.symbol, l.sign.flip())
        } else {
            l
        }
    }

    pub fn image(&self, l: Letter) -> Vec<Letter> {
        let img = &self.images[l.symbol as usize];
        match l.sign {
            Sign::Plus => img.clone(),
            Sign::Minus => img.iter().rev().map(|&x| self.flip(x)).collect(),
        }
    }

    fn image_into(&self, l: Letter, out: &mut Vec<Letter>) {
        let img = &self.images[l.symbol as usize];
        match l.sign {
            Sign::Plus => out.extend_from_slice(img),
            Sign::Minus => out.extend(img.iter().rev().map(|&x| self.flip(x))),
        }
    }

    pub fn apply(&self, w: &Word) -> Word {
        let mut out = Vec::new();
        for &l in &w.letters {
            self.image_into(l, &mut out);
        }
        Word {
            alphabet: self.alphabet,
            letters: out,
        }
    }

    /// Letter counts of `σⁿ(seed)` by symbol, exact up to saturation at
    /// `u128::MAX`.
    pub fn counts_after(&self, seed: &Word, n: u32) -> Vec<u128> {
        let mut v: Vec<u128> = seed.counts().into_iter().map(u128::from).collect();
        for _ in 0..n {
            v = self
                .abelianization
                .iter()
                .map(|row| row.iter().zip(&v).fold(0u128, |acc, (&a, &x)| acc.saturating_add((a as u128).saturating_mul(x))))
                .collect();
        }
        v
    }

    pub fn iterate(&self, seed: &Word, n: u32) -> Result<Word> {
        self.iterate_with_cap(seed, n, DEFAULT_MAX_LETTERS)
    }

    pub fn iterate_with_cap(&self, seed: &Word, n: u32, cap: u128) -> Result<Word> {
        let total = self.counts_after(seed, n).iter().fold(0u128, |a, &x| a.saturating_add(x));
        if total > cap {
            return Err(Error::Resource {
                what: "word length",
                requested: total,
                cap,
            });
        }
        let mut w = seed.clone();
        for _ in 0..n {
            w = self.apply(&w);
        }
        Ok(w)
    }

    /// Letters of `σⁿ(seed)` in order, without storing the word.
    pub fn stream<'a>(&'a self, seed: &Word, n: u32) -> LetterStream<'a> {
        LetterStream {
            rule: self,
            stack: seed.letters.iter().rev().map(|&l| (l, n)).collect(),
            buf: Vec::new(),
        }
    }

    /// Per-level tables: total length and symbol counts of `σ^k(x⁺)`.
    fn tables(&self, n: u32) -> (Vec<Vec<u128>>, Vec<Vec<Vec<u128>>>) {
        let s = self.alphabet.symbols.len();
        let mut len = vec![vec![1u128; s]];
        let mut cnt = vec![(0..s)
            .map(|k| (0..s).map(|j| u128::from(j == k)).collect())
            .collect::<Vec<Vec<u128>>>()];
        for lvl in 1..=n as usize {
            let mut l = vec![0u128; s];
            let mut c = vec![vec![0u128; s]; s];
            for (x, img) in self.images.iter().enumerate() {
                for y in img {
                    l[x] = l[x].saturating_add(len[lvl - 1][y.symbol as usize]);
                    for j in 0..s {
                        c[x][j] = c[x][j].saturating_add(cnt[lvl - 1][y.symbol as usize][j]);
                    }
                }
            }
            len.push(l);
            cnt.push(c);
        }
        (len, cnt)
    }

    /// Symbol counts among the first `k` letters of `σⁿ(seed)`, by recursive
    /// descent over the level tables.
    pub fn prefix_counts(&self, seed: &Word, n: u32, mut k: u128) -> Vec<u128> {
        let (len, cnt) = self.tables(n);
        let s = self.alphabet.symbols.len();
        let mut out = vec![0u128; s];
        let mut stack: Vec<(Letter, u32)> = seed.letters.iter().rev().map(|&l| (l, n)).collect();
        while k > 0 {
            let Some((l, lvl)) = stack.pop() else { break };
            let sym = l.symbol as usize;
            let full = len[lvl as usize][sym];
            if full <= k {
                for j in 0..s {
                    out[j] += cnt[lvl as usize][sym][j];
                }
                k -= full;
            } else {
                for &y in self.image(l).iter().rev() {
                    stack.push((y, lvl - 1));
                }
            }
        }
        out
    }
}

pub struct LetterStream<'a> {
    rule: &'a SubstitutionRule1D,
    stack: Vec<(Letter, u32)>,
    buf: Vec<Letter>,
}

impl Iterator for LetterStream<'_> {
    type Item = Letter;
    fn next(&mut self) -> Option<Letter> {
        loop {
            let (l, lvl) = self.stack.pop()?;
            if lvl == 0 {
                return Some(l);
            }
            self.buf.clear();
            self.rule.image_into(l, &mut self.buf);
            for &y in self.buf.iter().rev() {
                self.stack.push((y, lvl - 1));
            }
        }
    }
}

const H: u8 = 0;
const L: u8 = 1;

/// `σ₀(H⁺) = L⁺L⁻H⁺`, `σ₀(L⁺) = H⁺H⁺`.
pub fn sigma0_til12() -> SubstitutionRule1D {
    SubstitutionRule1D::new(
        &TIL12_SIGNED,
        vec![
            vec![Letter::plus(L), Letter::minus(L), Letter::plus(H)],
            vec![Letter::plus(H), Letter::plus(H)],
        ],
    )
    .expect("valid rule")
}

/// `σ(H⁺) = L H⁺`, `σ(L) = H⁺H⁺H⁻H⁻`.
pub fn sigma_til12() -> SubstitutionRule1D {
    SubstitutionRule1D::new(
        &TIL12,
        vec![
            vec![Letter::plus(L), Letter::plus(H)],
            vec![Letter::plus(H), Letter::plus(H), Letter::minus(H), Letter::minus(H)],
        ],
    )
    .expect("valid rule")
}

/// Boundary rule of `Til(2)`, as recovered from the hypotenuse of `T_{2k}`.
pub fn til2_rule() -> SubstitutionRule1D {
    const S: u8 = 1;
    SubstitutionRule1D::new(
        &TIL2,
        vec![
            vec![
                Letter::plus(H),
                Letter::plus(H),
                Letter::minus(H),
                Letter::minus(H),
                Letter::plus(S),
            ],
            vec![Letter::plus(H)],
        ],
    )
    .expect("valid rule")
}

/// Boundary rule of `Til(1/3)`, as recovered from the hypotenuse of `T_{2k}`.
pub fn til13_rule() -> SubstitutionRule1D {
    const SH: u8 = 2;
    SubstitutionRule1D::new(
        &TIL13,
        vec![
            vec![Letter::plus(L), Letter::minus(L), Letter::plus(H)],
            vec![Letter::plus(SH), Letter::plus(SH)],
            vec![Letter::plus(H)],
        ],
    )
    .expect("valid rule")
}

/// Recovers a boundary rule from the root hypotenuse of `T_{step·k}`.
///
/// `classes[x] = (kind, offset)` names the tile edges that stand for symbol
/// `x`: edges of that kind on tiles whose size key exceeds the smallest key
/// of their tiling by `offset`.
pub fn derive_rule(
    shape: &TriangleShape,
    alphabet: &'static Alphabet,
    classes: &[(EdgeKind, u64)],
    step: u32,
    max_rounds: u32,
) -> Result<SubstitutionRule1D> {
    if shape.pq().is_none() {
        return Err(Error::Argument("rule recovery needs a rational shape".into()));
    }
    let classify = |t: &crate::substitution::Tiling| -> Result<Vec<(Letter, f64, f64)>> {
        let tr = trace_edge(t, RootEdge::Hypotenuse)?;
        let min_key = t
            .tiles()
            .iter()
            .filter_map(|x| shape.size_key(x.placement.size_exp))
            .min()
            .unwrap_or(0);
        tr.segments
            .iter()
            .map(|s| {
                let off = shape.size_key(s.size_exp).unwrap_or(0) - min_key;
                let sym = classes
                    .iter()
                    .position(|&(k, o)| k == s.kind && o == off)
                    .ok_or_else(|| {
                        Error::Internal(format!("edge {:?} at key offset {off} has no symbol", s.kind))
                    })?;
                Ok((Letter::new(sym as u8, s.sign), s.start, s.start + s.length))
            })
            .collect()
    };
    let mut images: Vec<Option<Vec<Letter>>> = vec![None; alphabet.symbols.len()];
    let mut coarse_t = build_tn(shape, 0)?;
    let mut coarse = classify(&coarse_t)?;
    let tol = 1e-9 * shape.c;
    for _ in 0..max_rounds {
        let fine_t = build_tn(shape, coarse_t.generation() + step)?;
        let fine = classify(&fine_t)?;
        for &(cl, lo, hi) in &coarse {
            let inside: Vec<Letter> = fine
                .iter()
                .filter(|&&(_, a, b)| a >= lo - tol && b <= hi + tol)
                .map(|&(l, _, _)| l)
                .collect();
            let flip = |l: Letter| {
                if alphabet.signed[l.symbol as usize] {
                    Letter::new(l.symbol, l.sign.flip())
                } else {
                    l
                }
            };
            let positive: Vec<Letter> = match cl.sign {
                Sign::Plus => inside,
                Sign::Minus => inside.into_iter().rev().map(flip).collect(),
            };
            match &images[cl.symbol as usize] {
                Some(prev) if *prev != positive => {
                    return Err(Error::Internal(format!(
                        "symbol {} has two different images",
                        alphabet.symbols[cl.symbol as usize]
                    )));
                }
                Some(_) => {}
                None => images[cl.symbol as usize] = Some(positive),
            }
        }
        if images.iter().all(Option::is_some) {
            break;
        }
        coarse_t = fine_t;
        coarse = fine;
    }
    let images = images
        .into_iter()
        .enumerate()
        .map(|(k, i)| {
            i.ok_or_else(|| {
                Error::Internal(format!("symbol {} never appeared", alphabet.symbols[k]))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    SubstitutionRule1D::new(alphabet, images)
}

pub fn derive_sigma0_til12() -> Result<SubstitutionRule1D> {
    let s = TriangleShape::from_pq(1, 2)?;
    derive_rule(&s, &TIL12_SIGNED, &[(EdgeKind::H, 0), (EdgeKind::L, 0)], 2, 4)
}

pub fn derive_til2_rule() -> Result<SubstitutionRule1D> {
    let s = TriangleShape::from_pq(2, 1)?;
    derive_rule(&s, &TIL2, &[(EdgeKind::H, 0), (EdgeKind::S, 0)], 2, 4)
}

pub fn derive_til13_rule() -> Result<SubstitutionRule1D> {
    let s = TriangleShape::from_pq(1, 3)?;
    derive_rule(
        &s,
        &TIL13,
        &[(EdgeKind::H, 0), (EdgeKind::L, 1), (EdgeKind::H, 2)],
        2,
        4,
    )
}

/// `f(n)`: `L`s in the first half of `σⁿ(H⁺)` minus `L`s in the second half.
pub fn f_of_n(n: u32) -> Result<i128> {
    if n == 0 {
        return Err(Error::Argument("f is defined for n >= 1".into()));
    }
    let rule = sigma_til12();
    let seed = Word::new(&TIL12, vec![Letter::plus(H)])?;
    let total = rule.counts_after(&seed, n).iter().fold(0u128, |a, &x| a.saturating_add(x));
    if total > i128::MAX as u128 {
        return Err(Error::Resource {
            what: "word length",
            requested: total,
            cap: i128::MAX as u128,
        });
    }
    if total % 2 == 1 {
        return Err(Error::Internal(format!("σ^{n}(H+) has odd length {total}")));
    }
    let first = rule.prefix_counts(&seed, n, total / 2)[L as usize] as i128;
    let all = rule.counts_after(&seed, n)[L as usize] as i128;
    Ok(2 * first - all)
}

/// Streaming scan for `LL`, `H⁻H⁺` and runs of more than six `H`s.
pub fn forbidden_subwords_absent(letters: impl IntoIterator<Item = Letter>) -> bool {
    let mut prev: Option<Letter> = None;
    let mut run = 0u32;
    for l in letters {
        if l.symbol == H {
            run += 1;
            if run > 6 {
                return false;
            }
        } else {
            run = 0;
        }
        if let Some(p) = prev {
            if p.symbol == L && l.symbol == L {
                return false;
            }
            if p == Letter::minus(H) && l == Letter::plus(H) {
                return false;
            }
        }
        prev = Some(l);
    }
    true
}

pub fn forbidden_subwords_check(word: &Word) -> bool {
    forbidden_subwords_absent(word.letters.iter().copied())
}

const MAX_SYMBOLS: usize = 4;
type Pos = [i64; MAX_SYMBOLS];

/// Vertex bookkeeping on one side of a fault line.
struct Side<'a> {
    stream: LetterStream<'a>,
    pos: Pos,
    next: Option<(Letter, Pos)>,
    count: i64,
}

impl<'a> Side<'a> {
    fn new(stream: LetterStream<'a>) -> Side<'a> {
        let mut s = Side {
            stream,
            pos: [0; MAX_SYMBOLS],
            next: None,
            count: 0,
        };
        s.pull();
        s
    }

    fn pull(&mut self) {
        self.next = self.stream.next().map(|l| {
            let mut e = self.pos;
            e[l.symbol as usize] += 1;
            (l, e)
        });
    }

    fn advance(&mut self, counted: u8) {
        if let Some((l, end)) = self.next.take() {
            if l.symbol == counted {
                self.count += 1;
            }
            self.pos = end;
            self.pull();
        }
    }
}

#[inline]
fn value(v: &Pos, lengths: &[f64; MAX_SYMBOLS]) -> Dd {
    let mut acc = Dd::ZERO;
    for k in 0..MAX_SYMBOLS {
        if v[k] != 0 {
            acc = acc + Dd::scaled(v[k], lengths[k]);
        }
    }
    acc
}

#[inline]
fn diff(a: &Pos, b: &Pos) -> Pos {
    std::array::from_fn(|k| a[k] - b[k])
}

/// Contact data along a straight edge shared by two tiles whose boundary
/// words are `σⁿ(seed)` read in opposite directions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FaultLine {
    pub n: u32,
    pub letters_per_side: u128,
    /// Distinct distances from a vertex on one side to the nearest vertex on
    /// the other, reduced modulo the modulus, ascending.
    pub offsets: Vec<f64>,
    /// The same distances as integer combinations of the letter lengths.
    pub offset_combinations: Vec<Vec<i64>>,
    /// Largest `|imbalance|` of complete counted letters over all vertices.
    pub max_abs_imbalance: i64,
    /// Imbalance at the midpoint of the edge.
    pub midpoint_imbalance: i64,
}

/// Letter lengths are in units of the level-`n` hypotenuse scale.
pub fn fault_line(
    rule: &SubstitutionRule1D,
    seed: Letter,
    n: u32,
    lengths: &[f64],
    counted: u8,
    modulus: f64,
    cap: u128,
) -> Result<FaultLine> {
    let fwd_seed = Word::new(rule.alphabet, vec![seed])?;
    let rev_seed = Word::new(rule.alphabet, vec![rule.flip(seed)])?;
    let total_counts = rule.counts_after(&fwd_seed, n);
    let letters = total_counts.iter().fold(0u128, |a, &x| a.saturating_add(x));
    if letters > cap {
        return Err(Error::Resource {
            what: "word length",
            requested: letters,
            cap,
        });
    }
    let syms = rule.alphabet.symbols.len();
    if syms > MAX_SYMBOLS || lengths.len() != syms {
        return Err(Error::Argument("one length per symbol, at most four symbols".into()));
    }
    let mut lens = [0.0; MAX_SYMBOLS];
    lens[..syms].copy_from_slice(lengths);
    let mut total: Pos = [0; MAX_SYMBOLS];
    for (k, &c) in total_counts.iter().enumerate() {
        total[k] = c as i64;
    }
    // side A reads σⁿ(seed) from P; side B is the same word read from R
    let mut a = Side::new(rule.stream(&fwd_seed, n));
    let mut b = Side::new(rule.stream(&rev_seed, n));
    let mut combos: BTreeSet<Pos> = BTreeSet::new();
    combos.insert([0; MAX_SYMBOLS]);
    let mut max_abs = 0i64;
    let mut mid: Option<i64> = None;
    let below_mid = |v: &Pos| {
        let d: Pos = std::array::from_fn(|k| 2 * v[k] - total[k]);
        value(&d, &lens).total_cmp(Dd::ZERO) != Ordering::Greater
    };
    let nearest = |me: &Pos, other: &Side| {
        let best = diff(me, &other.pos);
        match &other.next {
            Some((_, e)) => {
                let alt = diff(e, me);
                if value(&alt, &lens).total_cmp(value(&best, &lens)) == Ordering::Less {
                    alt
                } else {
                    best
                }
            }
            None => best,
        }
    };
    loop {
        let (order, next_end) = match (&a.next, &b.next) {
            (None, None) => break,
            (Some((_, ea)), None) => (Ordering::Less, *ea),
            (None, Some((_, eb))) => (Ordering::Greater, *eb),
            (Some((_, ea)), Some((_, eb))) => {
                let o = value(&diff(ea, eb), &lens).total_cmp(Dd::ZERO);
                (o, if o == Ordering::Greater { *eb } else { *ea })
            }
        };
        if mid.is_none() && !below_mid(&next_end) {
            mid = Some(b.count - a.count);
        }
        match order {
            Ordering::Less => {
                a.advance(counted);
                combos.insert(nearest(&a.pos, &b));
            }
            Ordering::Greater => {
                b.advance(counted);
                combos.insert(nearest(&b.pos, &a));
            }
            Ordering::Equal => {
                a.advance(counted);
                b.advance(counted);
            }
        }
        max_abs = max_abs.max((b.count - a.count).abs());
    }
    let mut vals: Vec<f64> = combos
        .iter()
        .map(|v| {
            let x = value(v, &lens).to_f64().rem_euclid(modulus);
            if modulus - x < 1e-9 * modulus {
                0.0
            } else {
                x
            }
        })
        .collect();
    vals.sort_by(f64::total_cmp);
    let mut offsets: Vec<f64> = Vec::new();
    for v in vals {
        if offsets.last().is_none_or(|&l| v - l > 1e-9 * modulus) {
            offsets.push(v);
        }
    }
    Ok(FaultLine {
        n,
        letters_per_side: letters,
        offsets,
        offset_combinations: combos.into_iter().map(|v| v[..syms].to_vec()).collect(),
        max_abs_imbalance: max_abs,
        midpoint_imbalance: mid.unwrap_or(b.count - a.count),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlippageProfile {
    pub n: u32,
    pub f: i128,
    pub g_at_q: i64,
    pub distinct_offsets: Vec<f64>,
}

/// Slippage across the primary fault line of `Til(1/2)`, in units with
/// hypotenuse `c = 1` and long leg `b/c`.
pub fn slippage_til12(n: u32) -> Result<SlippageProfile> {
    slippage_til12_with_cap(n, DEFAULT_MAX_LETTERS)
}

pub fn slippage_til12_with_cap(n: u32, cap: u128) -> Result<SlippageProfile> {
    let s = TriangleShape::from_pq(1, 2)?;
    let rule = sigma0_til12();
    let fl = fault_line(&rule, Letter::plus(H), n, &[1.0, s.b / s.c], L, 1.0, cap)?;
    Ok(SlippageProfile {
        n,
        f: if n == 0 { 0 } else { f_of_n(n)? },
        g_at_q: fl.midpoint_imbalance,
        distinct_offsets: fl.offsets,
    })
}

/// Fault-line data for `Til(2)` with `H = 1` and `S = a/c`.
pub fn til2_fault_line(n: u32) -> Result<FaultLine> {
    til2_fault_line_with_cap(n, DEFAULT_MAX_LETTERS)
}

pub fn til2_fault_line_with_cap(n: u32, cap: u128) -> Result<FaultLine> {
    let s = TriangleShape::from_pq(2, 1)?;
    fault_line(&til2_rule(), Letter::plus(H), n, &[1.0, s.a / s.c], 1, 1.0, cap)
}

/// `max |f_n(E)|` over every vertex `E` of both sides.
pub fn til2_slippage_bound(n: u32) -> Result<i64> {
    Ok(til2_fault_line(n)?.max_abs_imbalance)
}

/// Fault-line data for `Til(1/3)` with `H = 1` and `L = h = 1/2`.
pub fn til13_fault_line(n: u32) -> Result<FaultLine> {
    til13_fault_line_with_cap(n, DEFAULT_MAX_LETTERS)
}

pub fn til13_fault_line_with_cap(n: u32, cap: u128) -> Result<FaultLine> {
    fault_line(&til13_rule(), Letter::plus(H), n, &[1.0, 0.5, 0.5], 1, 1.0, cap)
}

/// Exact `(H_n, S_n)` letter counts of `σⁿ(H)` for `Til(2)`.
pub fn til2_counts(n: u32) -> (u128, u128) {
    let seed = Word::new(&TIL2, vec![Letter::plus(H)]).expect("valid");
    let c = til2_rule().counts_after(&seed, n);
    (c[0], c[1])
}

/// `(x, y)` with `(2 − √5)^k = x + y√5`.
pub fn two_minus_sqrt5_pow(k: u32) -> (i128, i128) {
    let (mut x, mut y) = (1i128, 0i128);
    for _ in 0..k {
        (x, y) = (2 * x - 5 * y, 2 * y - x);
    }
    (x, y)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Til2Identity {
    pub n: u32,
    pub h: u128,
    pub s: u128,
    pub exact: bool,
    /// `|(√5−2)H − S + (2−√5)^{n+1}|` with the left side evaluated as
    /// `(5H² − (2H+S)²) / (√5H + 2H + S)`: an exact integer over a sum
    /// without cancellation, carried in double-double.
    pub float_residual: f64,
}

/// `(√5−2)H_n − S_n = −(2−√5)^{n+1}`, checked exactly in `Z[√5]`.
pub fn til2_identity(n: u32) -> Result<Til2Identity> {
    if n > 40 {
        return Err(Error::Argument(format!("n = {n} exceeds 40")));
    }
    let (h, s) = til2_counts(n);
    let (x, y) = two_minus_sqrt5_pow(n + 1);
    // −S − 2H + H√5 = −x − y√5
    let exact = h as i128 == -y && 2 * h as i128 + s as i128 == x;
    let (hb, sb) = (BigInt::from(h), BigInt::from(s));
    let t = BigInt::from(2) * &hb + &sb;
    let norm = BigInt::from(5) * &hb * &hb - &t * &t;
    let norm = i64::try_from(&norm).ok().filter(|v| v.unsigned_abs() < 1 << 53).ok_or_else(|| Error::Numeric {
        message: format!("5H² − (2H+S)² at n = {n} is not small"),
        residual: f64::INFINITY,
    })?;
    let rt5 = Dd {
        hi: 5f64.sqrt(),
        lo: -1.086_423_040_736_501_2e-16,
    };
    let denom = mul_dd_u(rt5, h) + mul_dd_u(Dd::from_f64(2.0), h) + mul_dd_u(Dd::from_f64(1.0), s);
    let lhs = Dd::from_f64(norm as f64) / denom;
    let base = Dd::from_f64(2.0) - rt5;
    let pow = (0..=n).fold(Dd::from_f64(1.0), |acc, _| acc * base);
    Ok(Til2Identity {
        n,
        h,
        s,
        exact,
        float_residual: (lhs + pow).to_f64().abs(),
    })
}

/// Exact agreement in `Z[√5]` and a floating residual below 1e-9.
pub fn til2_identity_check(n: u32) -> Result<bool> {
    let id = til2_identity(n)?;
    Ok(id.exact && id.float_residual < 1e-9)
}

fn mul_dd_u(x: Dd, k: u128) -> Dd {
    // 32-bit limbs keep every partial product exact
    (0..4).fold(Dd::ZERO, |acc, limb| {
        let m = ((k >> (32 * limb)) & 0xffff_ffff) as f64 * 2f64.powi(32 * limb);
        acc + Dd::product(x.hi, m) + Dd::product(x.lo, m)
    })
}

/// `#H − #L` in `σⁿ(H)` for `Til(1/3)`.
pub fn til13_fluctuation(n: u32) -> Result<i128> {
    if n > 40 {
        return Err(Error::Argument(format!("n = {n} exceeds 40")));
    }
    let seed = Word::new(&TIL13, vec![Letter::plus(H)])?;
    let c = til13_rule().counts_after(&seed, n);
    Ok(c[0] as i128 - c[1] as i128)
}

/// Least-squares slope of `ln|v|` against the index, skipping zeros.
pub fn log_growth_rate(points: &[(u32, i128)]) -> f64 {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, v)| *v != 0)
        .map(|&(n, v)| (n as f64, (v.unsigned_abs() as f64).ln()))
        .collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}
