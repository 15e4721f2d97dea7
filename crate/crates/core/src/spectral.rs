//! Population matrices and their spectra, orientation transfer matrices and
//! the transcendental spectrum of irrational shapes.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Rationality, TriangleShape};

/// Heaviside step with `H(0) = 1`.
pub fn heaviside(n: i64) -> f64 {
    if n >= 0 {
        1.0
    } else {
        0.0
    }
}

fn check_pq(p: u32, q: u32) -> Result<()> {
    if p == 0 || q == 0 {
        return Err(Error::Argument(format!("p/q = {p}/{q} must be positive")));
    }
    let (mut a, mut b) = (p, q);
    while b != 0 {
        (a, b) = (b, a % b);
    }
    if a != 1 {
        return Err(Error::Argument(format!("p/q = {p}/{q} is not in lowest terms")));
    }
    Ok(())
}

/// Size-class transition matrix: column `j` holds the classes produced from
/// one tile of class `j` by one unit step of the size key.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PopulationMatrix {
    pub p: u32,
    pub q: u32,
    pub m: usize,
    pub entries: Vec<Vec<u64>>,
}

impl PopulationMatrix {
    /// Entry at 1-based `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.entries[i - 1][j - 1]
    }

    /// `M v`, exact; fails once an entry leaves the `u128` range.
    pub fn apply(&self, v: &[u128]) -> Result<Vec<u128>> {
        self.entries
            .iter()
            .map(|row| {
                row.iter()
                    .zip(v)
                    .try_fold(0u128, |acc, (&a, &x)| (a as u128).checked_mul(x).and_then(|y| acc.checked_add(y)))
                    .ok_or(Error::Resource {
                        what: "class count",
                        requested: u128::MAX,
                        cap: u128::MAX,
                    })
            })
            .collect()
    }

    /// `M^n v`, exact.
    pub fn power_apply(&self, v: &[u128], n: u32) -> Result<Vec<u128>> {
        let mut v = v.to_vec();
        for _ in 0..n {
            v = self.apply(&v)?;
        }
        Ok(v)
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.m, self.m, |i, j| self.entries[i][j] as f64)
    }
}

pub fn population_matrix(p: u32, q: u32) -> Result<PopulationMatrix> {
    check_pq(p, q)?;
    let m = p.max(q) as usize;
    let mut e = vec![vec![0u64; m]; m];
    for i in 1..m {
        e[i - 1][i] = 1;
    }
    e[p as usize - 1][0] += 1;
    e[q as usize - 1][0] += 4;
    Ok(PopulationMatrix { p, q, m, entries: e })
}

/// Size-class counts of `T_n` for a rational shape, indexed from the largest
/// class present. Steps with an empty leading class shift without deflating.
pub fn class_counts(p: u32, q: u32, n: u32) -> Result<Vec<u128>> {
    let mat = population_matrix(p, q)?;
    let mut v = vec![0u128; mat.m];
    v[0] = 1;
    for _ in 0..n {
        v = mat.apply(&v)?;
        while v[0] == 0 {
            v = mat.apply(&v)?;
        }
    }
    Ok(v)
}

/// Coefficients of the characteristic polynomial, lowest degree first:
/// `λ^q − λ^{q−p} − 4` when `p < q`, `λ^p − 4λ^{p−q} − 1` when `p > q`.
pub fn char_poly(p: u32, q: u32) -> Result<Vec<i64>> {
    check_pq(p, q)?;
    let m = p.max(q) as usize;
    let mut c = vec![0i64; m + 1];
    c[m] = 1;
    if p < q {
        c[(q - p) as usize] -= 1;
        c[0] -= 4;
    } else if p > q {
        c[(p - q) as usize] -= 4;
        c[0] -= 1;
    } else {
        c[0] = -5;
    }
    Ok(c)
}

/// Characteristic polynomial `det(λI − M)` of an integer matrix by the
/// Faddeev–LeVerrier recursion; `None` on overflow.
pub fn faddeev_leverrier(mat: &[Vec<u64>]) -> Option<Vec<i128>> {
    let n = mat.len();
    let a: Vec<Vec<i128>> = mat.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let mut coeffs = vec![0i128; n + 1];
    coeffs[n] = 1;
    let mut mk = vec![vec![0i128; n]; n];
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        let mut next = vec![vec![0i128; n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0i128;
                for l in 0..n {
                    s = s.checked_add(a[i][l].checked_mul(mk[l][j])?)?;
                }
                next[i][j] = s;
            }
            next[i][i] = next[i][i].checked_add(coeffs[n - k + 1])?;
        }
        mk = next;
        let mut tr = 0i128;
        for i in 0..n {
            for l in 0..n {
                tr = tr.checked_add(a[i][l].checked_mul(mk[l][i])?)?;
            }
        }
        if tr % k as i128 != 0 {
            return None;
        }
        coeffs[n - k] = -tr / k as i128;
    }
    Some(coeffs)
}

pub fn poly_eval(coeffs: &[f64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

fn poly_eval_deriv(coeffs: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut d = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        d = d * z + p;
        p = p * z + c;
    }
    (p, d)
}

/// `|p(z)|` relative to the sum of term magnitudes.
pub fn relative_residual(coeffs: &[f64], z: Complex64) -> f64 {
    let scale: f64 = coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| c.abs() * z.norm().powi(k as i32))
        .sum();
    poly_eval(coeffs, z).norm() / scale.max(f64::MIN_POSITIVE)
}

/// Roots of a real polynomial (lowest degree first) from the eigenvalues of
/// its companion matrix, each refined by one Newton step and merged at 1e-9.
pub fn poly_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let deg = coeffs.len() - 1;
    let lead = coeffs[deg];
    if lead == 0.0 {
        return Err(Error::Argument("leading coefficient vanishes".into()));
    }
    if deg == 0 {
        return Ok(Vec::new());
    }
    let comp = DMatrix::from_fn(deg, deg, |i, j| {
        if i == 0 {
            -coeffs[deg - 1 - j] / lead
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let raw = comp.complex_eigenvalues();
    let mut roots: Vec<Complex64> = Vec::with_capacity(deg);
    let mut worst = 0.0f64;
    for z in raw.iter() {
        let mut z = *z;
        let (p, d) = poly_eval_deriv(coeffs, z);
        if d.norm() > 0.0 {
            let step = p / d;
            if step.norm().is_finite() {
                z -= step;
            }
        }
        if z.im.abs() < 1e-14 * z.norm().max(1.0) {
            z.im = 0.0;
        }
        worst = worst.max(relative_residual(coeffs, z));
        if !roots.iter().any(|r| (r - z).norm() < 1e-9) {
            roots.push(z);
        }
    }
    if worst.is_nan() || worst >= 1e-8 {
        return Err(Error::Numeric {
            message: "companion eigenvalues failed to converge".into(),
            residual: worst,
        });
    }
    sort_by_modulus(&mut roots);
    Ok(roots)
}

/// Descending modulus, then descending real part, then ascending imaginary part.
pub fn sort_by_modulus(v: &mut [Complex64]) {
    v.sort_by(|a, b| {
        b.norm()
            .total_cmp(&a.norm())
            .then(b.re.total_cmp(&a.re))
            .then(a.im.total_cmp(&b.im))
    });
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
    pub modulus: f64,
}

impl From<Complex64> for ComplexValue {
    fn from(z: Complex64) -> ComplexValue {
        ComplexValue {
            re: z.re,
            im: z.im,
            modulus: z.norm(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralReport {
    pub p: u32,
    pub q: u32,
    pub matrix: PopulationMatrix,
    pub char_poly: Vec<i64>,
    pub eigenvalues: Vec<ComplexValue>,
    pub leading: f64,
    pub r: f64,
    pub count_outside_unit: usize,
    pub second_modulus: f64,
    pub nu: Vec<f64>,
    pub rho: Vec<f64>,
    pub psi_leading: Vec<f64>,
    pub max_residual: f64,
}

/// Eigen-analysis of the population matrix of `Til(p/q)`.
pub fn eigen(p: u32, q: u32) -> Result<SpectralReport> {
    check_pq(p, q)?;
    let m = p.max(q) as usize;
    if m > 64 {
        return Err(Error::Argument(format!("max(p, q) = {m} exceeds 64")));
    }
    let matrix = population_matrix(p, q)?;
    let cp = char_poly(p, q)?;
    let cf: Vec<f64> = cp.iter().map(|&c| c as f64).collect();
    let roots = poly_roots(&cf)?;
    if roots.len() != m {
        return Err(Error::Numeric {
            message: format!("expected {m} distinct roots, found {}", roots.len()),
            residual: 0.0,
        });
    }
    let leading = roots
        .iter()
        .filter(|z| z.im == 0.0)
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let shape = TriangleShape::from_pq(p, q)?;
    let r = shape.r.expect("rational shape has r");
    let (a2, b2, c2) = (shape.a * shape.a, shape.b * shape.b, shape.c * shape.c);
    let r2 = r * r;
    let h = |n: i64| heaviside(n);
    let (pi, qi) = (p as i64, q as i64);
    let nu = (1..=m as i64)
        .map(|k| (1.0 - r2) / (4.0 * c2) * (a2 * h(pi - k) + b2 * h(qi - k)) * r2.powi(-(k as i32)))
        .collect();
    let denom = p as f64 * a2 + q as f64 * b2;
    let rho = (1..=m as i64)
        .map(|k| (a2 * h(pi - k) + b2 * h(qi - k)) / denom)
        .collect();
    let psi_leading = (1..=m as i64)
        .map(|k| {
            leading.powi(k as i32)
                - leading.powi((k - pi) as i32) * h(k - pi - 1)
                - 4.0 * leading.powi((k - qi) as i32) * h(k - qi - 1)
        })
        .collect();
    let max_residual = roots
        .iter()
        .map(|z| relative_residual(&cf, *z))
        .fold(0.0, f64::max);
    Ok(SpectralReport {
        p,
        q,
        matrix,
        char_poly: cp,
        count_outside_unit: roots.iter().filter(|z| z.norm() > 1.0 + 1e-12).count(),
        second_modulus: roots.get(1).map(|z| z.norm()).unwrap_or(0.0),
        eigenvalues: roots.into_iter().map(ComplexValue::from).collect(),
        leading,
        r,
        nu,
        rho,
        psi_leading,
        max_residual,
    })
}

/// `lim r^{2n} N_k(n)` for the descendants of one class-`k` tile, with `c = 1`.
pub fn descendant_limit(p: u32, q: u32, k: usize) -> Result<f64> {
    check_pq(p, q)?;
    let m = p.max(q) as usize;
    if k == 0 || k > m {
        return Err(Error::Argument(format!("class {k} outside 1..={m}")));
    }
    let s = TriangleShape::from_pq(p, q)?;
    let r2 = s.r.expect("rational") * s.r.expect("rational");
    let (a2, b2, c2) = (s.a * s.a, s.b * s.b, s.c * s.c);
    Ok(4.0 * c2 * r2.powi(k as i32) / ((1.0 - r2) * (p as f64 * a2 + q as f64 * b2)))
}

/// `1ᵀ Mⁿ e_k`, exact.
pub fn descendant_count(p: u32, q: u32, k: usize, n: u32) -> Result<u128> {
    let mat = population_matrix(p, q)?;
    if k == 0 || k > mat.m {
        return Err(Error::Argument(format!("class {k} outside 1..={}", mat.m)));
    }
    let mut v = vec![0u128; mat.m];
    v[k - 1] = 1;
    Ok(mat.power_apply(&v, n)?.iter().sum())
}

type C2 = [[Complex64; 2]; 2];

/// Fourier-mode orientation transfer matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct OrientationMatrix {
    pub n: i64,
    pub a2: C2,
    pub b2: C2,
    pub e: DMatrix<Complex64>,
}

fn cis(x: f64) -> Complex64 {
    Complex64::from_polar(1.0, x)
}

fn rational_pq(shape: &TriangleShape) -> Result<(u32, u32)> {
    match shape.rationality {
        Rationality::Rational { p, q } => Ok((p, q)),
        Rationality::Irrational => Err(Error::Argument(
            "orientation matrices need a rational shape".into(),
        )),
    }
}

pub fn orientation_matrices(shape: &TriangleShape, n: i64) -> Result<OrientationMatrix> {
    let (p, q) = rational_pq(shape)?;
    let th = shape.theta;
    let nf = n as f64;
    let z = Complex64::new(0.0, 0.0);
    let a2 = [
        [z, cis(-nf * (th + std::f64::consts::FRAC_PI_2))],
        [cis(nf * (th + std::f64::consts::FRAC_PI_2)), z],
    ];
    let pi = std::f64::consts::PI;
    let b2 = [
        [cis(nf * th) + cis(nf * (th + pi)), cis(-nf * th) * 2.0],
        [cis(nf * th) * 2.0, cis(-nf * th) + cis(nf * (pi - th))],
    ];
    let m = p.max(q) as usize;
    let mut e = DMatrix::from_element(2 * m, 2 * m, z);
    for i in 1..m {
        e[(2 * i, 2 * (i - 1))] = Complex64::new(1.0, 0.0);
        e[(2 * i + 1, 2 * (i - 1) + 1)] = Complex64::new(1.0, 0.0);
    }
    for (blk, col) in [(a2, p as usize - 1), (b2, q as usize - 1)] {
        for r in 0..2 {
            for c in 0..2 {
                e[(r, 2 * col + c)] += blk[r][c];
            }
        }
    }
    Ok(OrientationMatrix { n, a2, b2, e })
}

/// Closed-form characteristic polynomial of `E` at mode `n`.
pub fn orientation_char_poly(p: u32, q: u32, theta: f64, n: i64, lambda: Complex64) -> Complex64 {
    let m = p.max(q) as i32;
    let (p, q) = (p as i32, q as i32);
    let nf = n as f64;
    let pi = std::f64::consts::PI;
    let l = |k: i32| lambda.powi(k);
    l(2 * m) - l(2 * m - q) * (2.0 * (nf * theta).cos() + 2.0 * (nf * pi + nf * theta).cos())
        + l(2 * m - 2 * q) * (2.0 * (nf * pi).cos() - 2.0)
        - l(2 * m - 2 * p)
        - l(2 * m - p - q) * (4.0 * (nf * pi / 2.0).cos())
}

fn orientation_poly_scale(p: u32, q: u32, lambda: Complex64) -> f64 {
    let m = p.max(q) as i32;
    let r = lambda.norm();
    let (p, q) = (p as i32, q as i32);
    r.powi(2 * m) + 4.0 * r.powi(2 * m - q) + 4.0 * r.powi(2 * m - 2 * q) + r.powi(2 * m - 2 * p)
        + 4.0 * r.powi(2 * m - p - q)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrientationSpectrumCheck {
    pub n: i64,
    pub max_modulus: f64,
    pub r_inv: f64,
    pub r_inv2: f64,
    pub max_poly_residual: f64,
    pub pass: bool,
}

/// Eigenvalues of `E` at a nonzero mode against the bounds `r^{-2}` (even
/// modes, strict) and `r^{-1}` (odd modes, attained).
pub fn orientation_spectrum_check(shape: &TriangleShape, n: i64) -> Result<OrientationSpectrumCheck> {
    if n == 0 {
        return Err(Error::Argument("mode 0 carries the size spectrum; pick n != 0".into()));
    }
    let (p, q) = rational_pq(shape)?;
    let om = orientation_matrices(shape, n)?;
    let eig = om
        .e
        .clone()
        .schur()
        .eigenvalues()
        .ok_or_else(|| Error::Numeric {
            message: "Schur decomposition of E failed".into(),
            residual: f64::NAN,
        })?;
    let r = shape.r.expect("rational");
    let (r_inv, r_inv2) = (1.0 / r, 1.0 / (r * r));
    let mut max_modulus = 0.0f64;
    let mut max_poly_residual = 0.0f64;
    for z in eig.iter() {
        max_modulus = max_modulus.max(z.norm());
        let res = orientation_char_poly(p, q, shape.theta, n, *z).norm()
            / orientation_poly_scale(p, q, *z).max(f64::MIN_POSITIVE);
        max_poly_residual = max_poly_residual.max(res);
    }
    let bound_ok = if n % 2 == 0 {
        max_modulus < r_inv2 * (1.0 - 1e-9)
    } else {
        (max_modulus - r_inv).abs() <= 1e-8 * r_inv
    };
    Ok(OrientationSpectrumCheck {
        n,
        max_modulus,
        r_inv,
        r_inv2,
        max_poly_residual,
        pass: bound_ok && max_poly_residual < 1e-6,
    })
}

/// Continuous-size spectrum data for a shape with `α/β` irrational.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IrrationalSpectrum {
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub real_eigenvalue: f64,
    pub lower_bound: f64,
}

/// `e^{μλ} − e^{(μ−α)λ} − 4e^{(μ−β)λ}`.
pub fn irrational_char(shape: &TriangleShape, lambda: Complex64) -> Complex64 {
    let (al, be, mu) = (shape.alpha, shape.beta, shape.mu);
    (lambda * mu).exp() - (lambda * (mu - al)).exp() - (lambda * (mu - be)).exp() * 4.0
}

/// Auxiliary function whose real root bounds the real parts of all roots.
pub fn lower_bound_aux(shape: &TriangleShape, x: f64) -> f64 {
    let (al, be) = (shape.alpha, shape.beta);
    if al < be {
        (be * x).exp() + ((be - al) * x).exp() - 4.0
    } else {
        (al * x).exp() + 4.0 * ((al - be) * x).exp() - 1.0
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let (flo, _) = (f(lo), f(hi));
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) < 0.0) == (flo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn irrational_bounds(shape: &TriangleShape) -> (f64, f64) {
    let f = |x: f64| lower_bound_aux(shape, x);
    // both auxiliaries are increasing; widen until the sign changes
    let (mut lo, mut hi) = (-1.0, 1.0);
    while f(lo) > 0.0 {
        lo *= 2.0;
    }
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    (2.0, bisect(f, lo, hi))
}

impl IrrationalSpectrum {
    pub fn new(shape: &TriangleShape) -> IrrationalSpectrum {
        let (_, lower) = irrational_bounds(shape);
        IrrationalSpectrum {
            alpha: shape.alpha,
            beta: shape.beta,
            mu: shape.mu,
            a: shape.a,
            b: shape.b,
            c: shape.c,
            real_eigenvalue: 2.0,
            lower_bound: lower,
        }
    }

    fn step(x: f64) -> f64 {
        if x >= 0.0 {
            1.0
        } else {
            0.0
        }
    }

    /// Count and area densities at local size `s ∈ [0, μ)`.
    pub fn density(&self, s: f64) -> Result<(f64, f64)> {
        if !(s >= 0.0 && s < self.mu) {
            return Err(Error::Domain(format!("size {s} outside [0, {})", self.mu)));
        }
        let (a2, b2) = (self.a * self.a, self.b * self.b);
        let w = a2 * Self::step(self.alpha - s) + b2 * Self::step(self.beta - s);
        let nu = w * (2.0 * s).exp() / (2.0 * self.c * self.c);
        let rho = w / (a2 * self.alpha + b2 * self.beta);
        Ok((nu, rho))
    }

    /// `e^{λs} − e^{λ(s−α)}h(s−α) − 4e^{λ(s−β)}h(s−β)`.
    pub fn eigenfunction(&self, lambda: Complex64, s: f64) -> Complex64 {
        (lambda * s).exp()
            - (lambda * (s - self.alpha)).exp() * Self::step(s - self.alpha)
            - (lambda * (s - self.beta)).exp() * 4.0 * Self::step(s - self.beta)
    }

    fn overlaps(&self, lo: f64, hi: f64) -> (f64, f64) {
        let len = |end: f64| (hi.min(end) - lo.max(0.0)).max(0.0);
        (len(self.alpha), len(self.beta))
    }

    /// Exact integral of the count density over `[lo, hi)`.
    pub fn nu_integral(&self, lo: f64, hi: f64) -> f64 {
        let (a2, b2) = (self.a * self.a, self.b * self.b);
        let seg = |end: f64| {
            let (x, y) = (lo.max(0.0), hi.min(end));
            if y > x {
                0.5 * ((2.0 * y).exp() - (2.0 * x).exp())
            } else {
                0.0
            }
        };
        (a2 * seg(self.alpha) + b2 * seg(self.beta)) / (2.0 * self.c * self.c)
    }

    /// Exact integral of the area density over `[lo, hi)`.
    pub fn rho_integral(&self, lo: f64, hi: f64) -> f64 {
        let (a2, b2) = (self.a * self.a, self.b * self.b);
        let (la, lb) = self.overlaps(lo, hi);
        (a2 * la + b2 * lb) / (a2 * self.alpha + b2 * self.beta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn population_matrix_examples() {
        assert_eq!(population_matrix(1, 2).unwrap().entries, vec![vec![1, 1], vec![4, 0]]);
        assert_eq!(population_matrix(2, 1).unwrap().entries, vec![vec![4, 1], vec![1, 0]]);
        assert_eq!(population_matrix(1, 1).unwrap().entries, vec![vec![5]]);
        assert!(population_matrix(2, 2).is_err());
    }

    #[test]
    fn char_poly_examples() {
        assert_eq!(char_poly(1, 2).unwrap(), vec![-4, -1, 1]);
        assert_eq!(char_poly(2, 1).unwrap(), vec![-1, -4, 1]);
        assert_eq!(char_poly(1, 3).unwrap(), vec![-4, 0, -1, 1]);
        assert!(matches!(char_poly(3, 3), Err(Error::Argument(_))));
    }

    #[test]
    fn integer_char_poly_agrees() {
        for p in 1..=10u32 {
            for q in 1..=10u32 {
                let Ok(m) = population_matrix(p, q) else { continue };
                let fl = faddeev_leverrier(&m.entries).expect("no overflow at this size");
                let cp: Vec<i128> = char_poly(p, q).unwrap().iter().map(|&c| c as i128).collect();
                assert_eq!(fl, cp, "p/q = {p}/{q}");
            }
        }
    }

    #[test]
    fn eigen_til12() {
        let rep = eigen(1, 2).unwrap();
        let rt = 17f64.sqrt();
        assert!((rep.eigenvalues[0].re - (1.0 + rt) / 2.0).abs() < 1e-12);
        assert!((rep.eigenvalues[1].re - (1.0 - rt) / 2.0).abs() < 1e-12);
        assert_eq!(rep.count_outside_unit, 2);
        assert!((rep.rho[0] - (17.0 + rt) / 34.0).abs() < 1e-12);
        assert!((rep.rho[1] - (18.0 - 2.0 * rt) / (34.0 - 2.0 * rt)).abs() < 1e-12);
        // ψ ∝ (λ, 4)
        assert!((rep.psi_leading[0] / rep.psi_leading[1] - rep.leading / 4.0).abs() < 1e-12);
    }

    #[test]
    fn eigen_til2() {
        let rep = eigen(2, 1).unwrap();
        let rt = 5f64.sqrt();
        assert!((rep.eigenvalues[0].re - (2.0 + rt)).abs() < 1e-12);
        assert!((rep.eigenvalues[1].re - (2.0 - rt)).abs() < 1e-12);
        assert_eq!(rep.count_outside_unit, 1);
    }

    #[test]
    fn psi_is_a_right_eigenvector() {
        for (p, q) in [(1, 2), (2, 1), (3, 5), (5, 3), (1, 7)] {
            let rep = eigen(p, q).unwrap();
            let m = rep.matrix.to_f64();
            let psi = nalgebra::DVector::from_vec(rep.psi_leading.clone());
            let lhs = &m * &psi;
            let err = (lhs - &psi * rep.leading).norm() / psi.norm();
            assert!(err < 1e-10, "{p}/{q}: {err}");
        }
    }

    #[test]
    fn descendant_limits() {
        let l1 = descendant_limit(1, 2, 1).unwrap();
        let l2 = descendant_limit(1, 2, 2).unwrap();
        let r = TriangleShape::from_pq(1, 2).unwrap().r.unwrap();
        assert!((l2 / l1 - r * r).abs() < 1e-14);
        assert!((descendant_limit(1, 1, 1).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(descendant_count(1, 1, 1, 7).unwrap(), 5u128.pow(7));
    }

    #[test]
    fn orientation_matrices_at_mode_zero() {
        let s = TriangleShape::from_pq(1, 2).unwrap();
        let om = orientation_matrices(&s, 0).unwrap();
        let one = Complex64::new(1.0, 0.0);
        assert!((om.a2[0][1] - one).norm() < 1e-15 && om.a2[0][0].norm() == 0.0);
        for r in 0..2 {
            for c in 0..2 {
                assert!((om.b2[r][c] - one * 2.0).norm() < 1e-14);
            }
        }
        let v = om.b2[0][0] - om.b2[0][1];
        assert!(v.norm() < 1e-14);
        let odd = orientation_matrices(&s, 3).unwrap();
        assert!(odd.b2[0][0].norm() < 1e-14 && odd.b2[1][1].norm() < 1e-14);
    }

    #[test]
    fn orientation_spectrum_til12() {
        let s = TriangleShape::from_pq(1, 2).unwrap();
        let odd = orientation_spectrum_check(&s, 1).unwrap();
        assert!(odd.pass, "{odd:?}");
        assert!((odd.max_modulus - odd.r_inv).abs() < 1e-9);
        let even = orientation_spectrum_check(&s, 2).unwrap();
        assert!(even.pass && even.max_modulus < even.r_inv2, "{even:?}");
        assert!(orientation_spectrum_check(&s, 0).is_err());
    }

    #[test]
    fn closed_form_matches_determinant() {
        // det(λ^m − λ^{m−q}B − λ^{m−p}A), evaluated directly
        let s = TriangleShape::from_pq(2, 5).unwrap();
        let (p, q) = (2u32, 5u32);
        for n in [1i64, 2, 3, 6] {
            let om = orientation_matrices(&s, n).unwrap();
            for lam in [Complex64::new(1.3, 0.4), Complex64::new(-0.7, 2.1)] {
                let m = 5;
                let mut k = [[Complex64::new(0.0, 0.0); 2]; 2];
                for (r, row) in k.iter_mut().enumerate() {
                    for (c, cell) in row.iter_mut().enumerate() {
                        let id = if r == c { lam.powi(m) } else { Complex64::new(0.0, 0.0) };
                        *cell = id - lam.powi(m - q as i32) * om.b2[r][c] - lam.powi(m - p as i32) * om.a2[r][c];
                    }
                }
                let det = k[0][0] * k[1][1] - k[0][1] * k[1][0];
                let cf = orientation_char_poly(p, q, s.theta, n, lam);
                assert!((det - cf).norm() < 1e-10 * det.norm().max(1.0), "n={n}");
            }
        }
    }

    #[test]
    fn irrational_char_values() {
        let s = TriangleShape::from_theta(1.0, 1.0).unwrap();
        assert!(irrational_char(&s, Complex64::new(2.0, 0.0)).norm() < 1e-10);
        assert!((irrational_char(&s, Complex64::new(0.0, 0.0)).re + 4.0).abs() < 1e-15);
        assert!(irrational_char(&s, Complex64::new(2.001, 0.0)).re > 0.0);
    }

    #[test]
    fn lower_bound_is_a_root_below_two() {
        for th in [std::f64::consts::FRAC_PI_3, 0.2, 1.0, 1.4] {
            let s = TriangleShape::from_theta(th, 1.0).unwrap();
            let (up, lo) = irrational_bounds(&s);
            assert_eq!(up, 2.0);
            assert!(lower_bound_aux(&s, lo).abs() < 1e-10, "{th}");
            assert!(lo < 2.0);
        }
    }

    #[test]
    fn density_jump_and_extent() {
        let s = TriangleShape::from_theta(1.0, 1.0).unwrap();
        let sp = IrrationalSpectrum::new(&s);
        assert!(sp.alpha < sp.beta);
        let below = sp.density(sp.alpha - 1e-12).unwrap().1;
        let above = sp.density(sp.alpha + 1e-12).unwrap().1;
        let jump = s.a * s.a / (s.a * s.a * sp.alpha + s.b * s.b * sp.beta);
        assert!((below - above - jump).abs() < 1e-12);
        assert!(sp.density(sp.mu).is_err());
        assert!(sp.density(-0.1).is_err());
        let l = Complex64::new(2.0, 0.0);
        assert!(sp.eigenfunction(l, sp.mu + 1e-6).norm() < 1e-9);
        assert!((sp.rho_integral(0.0, sp.mu) - 1.0).abs() < 1e-14);
        assert!((sp.nu_integral(0.0, sp.mu) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn class_counts_skip_empty_steps() {
        // (3, 2): the leading class can drain
        let v = class_counts(3, 2, 2).unwrap();
        assert!(v[0] > 0);
        assert_eq!(class_counts(1, 2, 2).unwrap(), vec![5, 4]);
        assert!(matches!(class_counts(4, 3, 400), Err(Error::Resource { .. })));
    }
}
