//! Fourier-multiplier operators: Riesz transforms of first and higher order,
//! homogeneous harmonic-polynomial transforms, the Kurokawa decomposition of
//! composed Riesz symbols, generic smooth multipliers and the odd/even rank
//! condition.
//!
//! All symbols are homogeneous of degree zero and take the value 0 at the
//! zero frequency, so every operator output is mean-free.

use crate::error::{MhError, Result};
use crate::expr::Expr;
use crate::field::{apply_frequency_multiplier, ScalarField};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Index word (j_1, ..., j_m) with entries in {0, ..., n}; 0 is the identity
/// factor, so k = #nonzero entries is the order of the composed transform.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RieszIndexWord {
    word: Vec<usize>,
    dim: usize,
}

impl RieszIndexWord {
    pub fn new(word: Vec<usize>, dim: usize) -> Result<Self> {
        if let Some(&bad) = word.iter().find(|&&j| j > dim) {
            return Err(MhError::Parameter(format!(
                "word entry {bad} out of range 0..={dim}"
            )));
        }
        Ok(Self { word, dim })
    }

    pub fn entries(&self) -> &[usize] {
        &self.word
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.word.len()
    }

    /// Number of nonzero entries.
    pub fn k(&self) -> usize {
        self.word.iter().filter(|&&j| j != 0).count()
    }

    /// Product symbol Π (-i ξ_j / |ξ|) at frequency ξ; 0 at ξ = 0.
    pub fn symbol(&self, xi: &[f64]) -> Complex64 {
        let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let mut out = Complex64::new(1.0, 0.0);
        for &j in &self.word {
            if j != 0 {
                out *= Complex64::new(0.0, -xi[j - 1] / norm);
            }
        }
        out
    }
}

/// j-th Riesz transform (1-based axis), symbol -i ξ_j / |ξ|.
pub fn riesz_transform(f: &ScalarField, j: usize) -> Result<ScalarField> {
    let n = f.grid().dim();
    if j == 0 || j > n {
        return Err(MhError::Parameter(format!("axis {j} out of range 1..={n}")));
    }
    let word = RieszIndexWord::new(vec![j], n)?;
    Ok(apply_frequency_multiplier(f, |xi| word.symbol(xi)))
}

/// Composed Riesz transform in a single spectral pass.
pub fn compose_riesz(f: &ScalarField, word: &RieszIndexWord) -> Result<ScalarField> {
    if word.dim() != f.grid().dim() {
        return Err(MhError::Parameter(format!(
            "word dimension {} does not match field dimension {}",
            word.dim(),
            f.grid().dim()
        )));
    }
    Ok(apply_frequency_multiplier(f, |xi| word.symbol(xi)))
}

/// Homogeneous polynomial with a symbolically verified harmonicity check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HarmonicPolynomial {
    dim: usize,
    degree: usize,
    /// (exponent multi-index, coefficient) per monomial.
    terms: Vec<(Vec<usize>, f64)>,
}

impl HarmonicPolynomial {
    pub fn new(dim: usize, degree: usize, terms: Vec<(Vec<usize>, f64)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(MhError::InvalidPolynomial("empty polynomial".into()));
        }
        let scale = terms.iter().map(|(_, c)| c.abs()).fold(0.0, f64::max);
        if scale == 0.0 {
            return Err(MhError::InvalidPolynomial("zero polynomial".into()));
        }
        for (e, _) in &terms {
            if e.len() != dim {
                return Err(MhError::InvalidPolynomial(
                    "exponent arity does not match dimension".into(),
                ));
            }
            if e.iter().sum::<usize>() != degree {
                return Err(MhError::InvalidPolynomial(format!(
                    "monomial of total degree {} in a degree-{} polynomial",
                    e.iter().sum::<usize>(),
                    degree
                )));
            }
        }
        let p = Self { dim, degree, terms };
        // Symbolic Laplacian on the coefficient table.
        let mut lap: std::collections::HashMap<Vec<usize>, f64> = std::collections::HashMap::new();
        for (e, c) in &p.terms {
            for a in 0..dim {
                if e[a] >= 2 {
                    let mut d = e.clone();
                    d[a] -= 2;
                    *lap.entry(d).or_insert(0.0) += c * (e[a] * (e[a] - 1)) as f64;
                }
            }
        }
        let worst = lap.values().map(|v| v.abs()).fold(0.0, f64::max);
        if worst > 1e-10 * scale {
            return Err(MhError::InvalidPolynomial(format!(
                "polynomial is not harmonic (Laplacian coefficient {worst:.3e})"
            )));
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> &[(Vec<usize>, f64)] {
        &self.terms
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                c * e
                    .iter()
                    .enumerate()
                    .map(|(a, &p)| y[a].powi(p as i32))
                    .product::<f64>()
            })
            .sum()
    }
}

/// Symbol of the degree-k transform for harmonic P: (-i)^k P(ξ/|ξ|).
///
/// The normalization is calibrated, not transcribed: (-i)^1 y_j reproduces
/// the first-order Riesz symbol, and the same power law makes the Kurokawa
/// reconstruction of composed words close (each composed factor carries one
/// -i).
fn harmonic_symbol(p: &HarmonicPolynomial, xi: &[f64]) -> Complex64 {
    let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let u: Vec<f64> = xi.iter().map(|v| v / norm).collect();
    minus_i_pow(p.degree) * p.eval(&u)
}

fn minus_i_pow(k: usize) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

/// Riesz transform of degree k associated with the harmonic polynomial P.
pub fn harmonic_poly_riesz(f: &ScalarField, p: &HarmonicPolynomial) -> Result<ScalarField> {
    if p.dim() != f.grid().dim() {
        return Err(MhError::Parameter(
            "polynomial dimension does not match field".into(),
        ));
    }
    Ok(apply_frequency_multiplier(f, |xi| harmonic_symbol(p, xi)))
}

/// All exponent multi-indices of total degree `degree` in `dim` variables.
fn monomials(dim: usize, degree: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; dim];
    fn rec(a: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if a + 1 == cur.len() {
            cur[a] = left;
            out.push(cur.clone());
            return;
        }
        for v in 0..=left {
            cur[a] = v;
            rec(a + 1, left - v, cur, out);
        }
    }
    if dim == 0 {
        return out;
    }
    rec(0, degree, &mut cur, &mut out);
    out
}

/// Nullspace basis of a small matrix by Gauss-Jordan elimination. Entries of
/// the Laplacian matrix are small integers, so the reduction is essentially
/// exact and the resulting polynomials pass the symbolic harmonicity check.
fn nullspace(rows: usize, cols: usize, a: &mut [f64]) -> Vec<Vec<f64>> {
    let mut pivots: Vec<usize> = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        // Partial pivot.
        let (mut best, mut best_row) = (0.0f64, r);
        for rr in r..rows {
            if a[rr * cols + c].abs() > best {
                best = a[rr * cols + c].abs();
                best_row = rr;
            }
        }
        if best < 1e-12 {
            continue;
        }
        for cc in 0..cols {
            a.swap(r * cols + cc, best_row * cols + cc);
        }
        let piv = a[r * cols + c];
        for cc in 0..cols {
            a[r * cols + cc] /= piv;
        }
        for rr in 0..rows {
            if rr != r {
                let factor = a[rr * cols + c];
                if factor != 0.0 {
                    for cc in 0..cols {
                        a[rr * cols + cc] -= factor * a[r * cols + cc];
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&fc| {
            let mut v = vec![0.0; cols];
            v[fc] = 1.0;
            for (ri, &pc) in pivots.iter().enumerate() {
                v[pc] = -a[ri * cols + fc];
            }
            v
        })
        .collect()
}

/// Basis of homogeneous harmonic polynomials of the given degree.
pub fn harmonic_basis(dim: usize, degree: usize) -> Result<Vec<HarmonicPolynomial>> {
    let monos = monomials(dim, degree);
    if degree < 2 {
        return monos
            .into_iter()
            .map(|e| HarmonicPolynomial::new(dim, degree, vec![(e, 1.0)]))
            .collect();
    }
    let lower = monomials(dim, degree - 2);
    let index_of = |e: &[usize]| lower.iter().position(|l| l[..] == *e).unwrap();
    let (rows, cols) = (lower.len(), monos.len());
    let mut lap = vec![0.0f64; rows * cols];
    for (ci, e) in monos.iter().enumerate() {
        for a in 0..dim {
            if e[a] >= 2 {
                let mut d = e.clone();
                d[a] -= 2;
                lap[index_of(&d) * cols + ci] += (e[a] * (e[a] - 1)) as f64;
            }
        }
    }
    nullspace(rows, cols, &mut lap)
        .into_iter()
        .map(|v| {
            let terms: Vec<(Vec<usize>, f64)> = monos
                .iter()
                .zip(&v)
                .filter(|(_, &c)| c != 0.0)
                .map(|(e, &c)| (e.clone(), c))
                .collect();
            HarmonicPolynomial::new(dim, degree, terms)
        })
        .collect()
}

/// Deterministic quasi-uniform point set on S^{n-1} for n in {1, 2, 3}.
pub fn sphere_points(dim: usize, m: usize) -> Result<Vec<Vec<f64>>> {
    match dim {
        1 => Ok(vec![vec![1.0], vec![-1.0]]),
        2 => Ok((0..m)
            .map(|i| {
                let th = 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / m as f64;
                vec![th.cos(), th.sin()]
            })
            .collect()),
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
            Ok((0..m)
                .map(|i| {
                    let z = 1.0 - (2.0 * i as f64 + 1.0) / m as f64;
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    let th = golden * i as f64;
                    vec![r * th.cos(), r * th.sin(), z]
                })
                .collect())
        }
        _ => Err(MhError::Parameter(format!(
            "sphere sampling supports dimensions 1..=3, got {dim}"
        ))),
    }
}

/// Least-squares solve of the (tall) system A x = b via normal equations with
/// Gauss-Jordan; A has orthogonal-ish columns by construction, so this is
/// well conditioned.
fn solve_least_squares(m: usize, cols: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut ata = vec![0.0f64; cols * (cols + 1)];
    for i in 0..cols {
        for j in 0..cols {
            let mut s = 0.0;
            for r in 0..m {
                s += a[r * cols + i] * a[r * cols + j];
            }
            ata[i * (cols + 1) + j] = s;
        }
        let mut s = 0.0;
        for r in 0..m {
            s += a[r * cols + i] * b[r];
        }
        ata[i * (cols + 1) + cols] = s;
    }
    // Gauss-Jordan on the augmented system.
    for c in 0..cols {
        let mut best_row = c;
        for rr in c..cols {
            if ata[rr * (cols + 1) + c].abs() > ata[best_row * (cols + 1) + c].abs() {
                best_row = rr;
            }
        }
        for cc in 0..=cols {
            ata.swap(c * (cols + 1) + cc, best_row * (cols + 1) + cc);
        }
        let piv = ata[c * (cols + 1) + c];
        for cc in 0..=cols {
            ata[c * (cols + 1) + cc] /= piv;
        }
        for rr in 0..cols {
            if rr != c {
                let factor = ata[rr * (cols + 1) + c];
                for cc in 0..=cols {
                    ata[rr * (cols + 1) + cc] -= factor * ata[c * (cols + 1) + cc];
                }
            }
        }
    }
    (0..cols).map(|i| ata[i * (cols + 1) + cols]).collect()
}

/// Decomposes a composed Riesz symbol into a constant plus harmonic-
/// polynomial transforms of degrees k, k-2, ...
///
/// Writes the direction monomial Π ξ_{j_l} as a combination of harmonic
/// polynomials restricted to the sphere (least squares on a quasi-uniform
/// point set, 4x oversampled), then reads the constant and per-polynomial
/// coefficients off the power of -i carried by each degree. The constant C is
/// zero for odd k by parity.
pub fn kurokawa_decompose(
    word: &RieszIndexWord,
) -> Result<(f64, Vec<(HarmonicPolynomial, f64)>)> {
    let dim = word.dim();
    let k = word.k();
    if k == 0 {
        return Ok((1.0, Vec::new()));
    }
    // Basis polynomials for each admissible degree (same parity as k).
    let mut basis: Vec<HarmonicPolynomial> = Vec::new();
    let mut d = k;
    loop {
        if d == 0 {
            break; // handled by the constant column
        }
        basis.extend(harmonic_basis(dim, d)?);
        if d < 2 {
            break;
        }
        d -= 2;
    }
    let has_const = k % 2 == 0;
    let cols = basis.len() + usize::from(has_const);
    let m = (4 * cols).max(500);
    let pts = sphere_points(dim, m)?;
    let m = pts.len();

    let mut a = vec![0.0f64; m * cols];
    let mut b = vec![0.0f64; m];
    for (r, u) in pts.iter().enumerate() {
        for (c, p) in basis.iter().enumerate() {
            a[r * cols + c] = p.eval(u);
        }
        if has_const {
            a[r * cols + cols - 1] = 1.0;
        }
        b[r] = word
            .entries()
            .iter()
            .filter(|&&j| j != 0)
            .map(|&j| u[j - 1])
            .product();
    }
    let x = solve_least_squares(m, cols, &a, &b);

    // Residual on the sample points.
    let mut worst = 0.0f64;
    for r in 0..m {
        let mut rec = 0.0;
        for c in 0..cols {
            rec += a[r * cols + c] * x[c];
        }
        worst = worst.max((rec - b[r]).abs());
    }
    if worst > 1e-8 {
        return Err(MhError::Decomposition(format!(
            "sphere reconstruction residual {worst:.3e} exceeds 1e-8"
        )));
    }

    // θ = (-i)^k Σ a_P P(u): the degree-d component picks up (-i)^{k-d},
    // which is (-1)^{(k-d)/2} since k-d is even.
    let constant = if has_const {
        let sign = if k % 4 == 0 { 1.0 } else { -1.0 };
        sign * x[cols - 1]
    } else {
        0.0
    };
    let mut components = Vec::new();
    for (p, &c) in basis.into_iter().zip(&x) {
        if c.abs() > 1e-10 {
            let sign = if (k - p.degree()) % 4 == 0 { 1.0 } else { -1.0 };
            components.push((p, sign * c));
        }
    }
    Ok((constant, components))
}

/// A bounded multiplier symbol on the unit sphere.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum MultiplierFunction {
    /// θ(u) = re(u) + i·im(u) in the unit-direction variables x1..xn.
    Expression { re: Expr, im: Option<Expr> },
    /// Composed Riesz product symbol.
    Word(RieszIndexWord),
}

impl MultiplierFunction {
    pub fn eval(&self, u: &[f64]) -> Complex64 {
        match self {
            Self::Expression { re, im } => Complex64::new(
                re.eval(u, 0.0),
                im.as_ref().map_or(0.0, |e| e.eval(u, 0.0)),
            ),
            Self::Word(w) => w.symbol(u),
        }
    }
}

/// Applies θ(ξ/|ξ|) in frequency space; the zero frequency maps to 0.
///
/// The symbol is screened for boundedness (|θ| ≤ 1e6) on a sphere sample
/// before any transform runs.
pub fn apply_multiplier(f: &ScalarField, theta: &MultiplierFunction) -> Result<ScalarField> {
    let dim = f.grid().dim();
    for u in sphere_points(dim, 257)? {
        let v = theta.eval(&u);
        if !v.re.is_finite() || !v.im.is_finite() || v.norm() > 1e6 {
            return Err(MhError::InvalidSymbol(format!(
                "symbol value {v} at direction {u:?} is not bounded"
            )));
        }
    }
    Ok(apply_frequency_multiplier(f, |xi| {
        let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let u: Vec<f64> = xi.iter().map(|v| v / norm).collect();
        theta.eval(&u)
    }))
}

/// Minimum numerical rank over sphere samples of the 2×(n+1) matrix with
/// rows (θ_i(ξ)) and (θ_i(-ξ)) for the family {1} ∪ {(-i ξ_j)^k}.
/// Rank 2 exactly when k is odd.
pub fn rank_condition(k: usize, n: usize, sphere_samples: usize) -> Result<usize> {
    if k == 0 || n == 0 {
        return Err(MhError::Parameter("rank condition needs k >= 1, n >= 1".into()));
    }
    let pts = sphere_points(n, sphere_samples)?;
    let mut min_rank = usize::MAX;
    for u in &pts {
        let row = |sign: f64| -> Vec<Complex64> {
            let mut r = vec![Complex64::new(1.0, 0.0)];
            for j in 0..n {
                r.push((Complex64::new(0.0, -sign * u[j])).powu(k as u32));
            }
            r
        };
        let (r1, r2) = (row(1.0), row(-1.0));
        // Singular values via the 2x2 Gram matrix.
        let dot = |a: &[Complex64], b: &[Complex64]| -> Complex64 {
            a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
        };
        let g11 = dot(&r1, &r1).re;
        let g22 = dot(&r2, &r2).re;
        let g12 = dot(&r1, &r2);
        let tr = g11 + g22;
        let det = (g11 * g22 - g12.norm_sqr()).max(0.0);
        let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
        let l1 = 0.5 * (tr + disc);
        let l2 = 0.5 * (tr - disc).max(0.0);
        let rank = [l1.sqrt(), l2.sqrt()]
            .iter()
            .filter(|s| **s > 1e-10)
            .count();
        min_rank = min_rank.min(rank);
    }
    Ok(min_rank)
}
