//! Poisson and conjugate-Poisson extension to the upper half-space
//! `R^n x (0, inf)`, harmonic vectors and rank-m tensor fields, generalized
//! Cauchy-Riemann residuals, and subharmonicity / harmonic-majorant checks.
//!
//! Extensions are computed spectrally: the Poisson kernel acts as the
//! frequency multiplier `exp(-2 pi t |xi|)` and the j-th conjugate kernel as
//! `(-i xi_j/|xi|) exp(-2 pi t |xi|)`. Slices of such extensions are exactly
//! band-limited, so t-derivatives in the residual checks use the exact
//! spectral relation `d/dt <-> -2 pi |xi|`; x-derivatives in the
//! Cauchy-Riemann residuals use centered differences so that discretization
//! orders can be measured. The subharmonicity check expands `Lap |F|^q` by
//! the chain rule through exact spectral derivatives of the components,
//! which keeps its sign free of stencil error.

use crate::error::{MhError, Result};
use crate::exec;
use crate::field::{self, apply_frequency_multiplier, PeriodicGrid, ScalarField};
use crate::multipliers::RieszIndexWord;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

/// Memory budget for tensor-field construction, in bytes.
const TENSOR_BUDGET: u128 = 1 << 27;

/// Strictly increasing list of heights t > 0 above the boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeLevels {
    values: Vec<f64>,
}

impl TimeLevels {
    /// Validates an explicit list of levels; the smallest must stay at or
    /// above a quarter of the grid spacing so slices remain resolvable.
    pub fn new(values: Vec<f64>, grid_spacing: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(MhError::Parameter("at least one time level required".into()));
        }
        if values.iter().any(|t| !t.is_finite() || *t <= 0.0) {
            return Err(MhError::Parameter("time levels must be finite and positive".into()));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MhError::Parameter("time levels must be strictly increasing".into()));
        }
        if values[0] < grid_spacing / 4.0 {
            return Err(MhError::Parameter(format!(
                "smallest level {} is below h/4 = {}",
                values[0],
                grid_spacing / 4.0
            )));
        }
        Ok(Self { values })
    }

    /// `count` log-spaced levels covering `[h/2, L]`.
    pub fn log_spaced(grid: &PeriodicGrid, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(MhError::Parameter("need at least two log-spaced levels".into()));
        }
        let lo = grid.spacing() / 2.0;
        let hi = grid.half_width();
        if lo >= hi {
            return Err(MhError::Parameter("grid too coarse for the default level range".into()));
        }
        let (a, b) = (lo.ln(), hi.ln());
        let values = (0..count)
            .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
            .collect();
        Self::new(values, grid.spacing())
    }

    /// Default resolution: 16 log-spaced levels in `[h/2, L]`.
    pub fn default_for(grid: &PeriodicGrid) -> Self {
        Self::log_spaced(grid, 16).expect("default level range is valid")
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of a level matching `t` to relative precision 1e-9, if any.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.values
            .iter()
            .position(|&v| (v - t).abs() <= 1e-9 * v.max(t))
    }
}

/// One scalar slice per time level, all on a common grid.
#[derive(Debug, Clone)]
pub struct HalfSpaceField {
    grid: PeriodicGrid,
    levels: TimeLevels,
    slices: Vec<ScalarField>,
}

impl HalfSpaceField {
    pub fn new(levels: TimeLevels, slices: Vec<ScalarField>) -> Result<Self> {
        if slices.len() != levels.len() {
            return Err(MhError::Parameter(format!(
                "{} slices for {} levels",
                slices.len(),
                levels.len()
            )));
        }
        let grid = slices[0].grid().clone();
        if slices.iter().any(|s| s.grid() != &grid) {
            return Err(MhError::Grid("all slices must share one grid".into()));
        }
        Ok(Self { grid, levels, slices })
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn levels(&self) -> &TimeLevels {
        &self.levels
    }

    pub fn slice(&self, level: usize) -> &ScalarField {
        &self.slices[level]
    }

    pub fn slices(&self) -> &[ScalarField] {
        &self.slices
    }
}

fn extend_with_symbol(
    f: &ScalarField,
    levels: &TimeLevels,
    sym: impl Fn(f64, f64, &[f64]) -> Complex64 + Sync + Send,
) -> HalfSpaceField {
    let slices = levels
        .values()
        .iter()
        .map(|&t| {
            apply_frequency_multiplier(f, |xi| {
                let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
                sym(t, norm, xi)
            })
        })
        .collect();
    HalfSpaceField::new(levels.clone(), slices).expect("one slice per level")
}

/// Harmonic extension `u(., t) = f * P_t`, one slice per level. The zero
/// frequency passes unchanged (the kernel has unit mass).
pub fn poisson_extend(f: &ScalarField, levels: &TimeLevels) -> HalfSpaceField {
    extend_with_symbol(f, levels, |t, norm, _| {
        Complex64::new((-2.0 * PI * t * norm).exp(), 0.0)
    })
}

/// Conjugate extension `f * Q_t^(j)` for a 1-based axis j, spectral symbol
/// `(-i xi_j/|xi|) exp(-2 pi t |xi|)`; the zero frequency is annihilated.
pub fn conjugate_poisson_extend(
    f: &ScalarField,
    j: usize,
    levels: &TimeLevels,
) -> Result<HalfSpaceField> {
    let n = f.grid().dim();
    if j == 0 || j > n {
        return Err(MhError::Parameter(format!("axis {j} out of range 1..={n}")));
    }
    Ok(extend_with_symbol(f, levels, move |t, norm, xi| {
        if norm == 0.0 {
            Complex64::ZERO
        } else {
            Complex64::new(0.0, -xi[j - 1] / norm) * (-2.0 * PI * t * norm).exp()
        }
    }))
}

/// Rank-m tensor of Poisson-extended composed Riesz transforms. Components
/// are indexed by words over `{0, .., n}` (0 = identity factor); the symbols
/// commute, so only the sorted representative of each word is stored.
#[derive(Debug, Clone)]
pub struct HarmonicTensorField {
    rank: usize,
    dim: usize,
    levels: TimeLevels,
    components: BTreeMap<Vec<usize>, HalfSpaceField>,
    symmetry_flag: bool,
    trace_zero_flag: bool,
}

/// Nondecreasing words of the given length over `{0, .., dim}`.
fn canonical_words(dim: usize, rank: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; rank];
    'outer: loop {
        out.push(cur.clone());
        for i in (0..rank).rev() {
            if cur[i] < dim {
                let v = cur[i] + 1;
                for c in cur[i..].iter_mut() {
                    *c = v;
                }
                continue 'outer;
            }
        }
        return out;
    }
}

/// Number of distinct orderings of a sorted word: m! / prod(count_v!).
fn multiplicity(word: &[usize]) -> f64 {
    let mut fact = vec![1.0f64; word.len() + 1];
    for i in 1..=word.len() {
        fact[i] = fact[i - 1] * i as f64;
    }
    let mut out = fact[word.len()];
    let mut i = 0;
    while i < word.len() {
        let mut j = i;
        while j < word.len() && word[j] == word[i] {
            j += 1;
        }
        out /= fact[j - i];
        i = j;
    }
    out
}

impl HarmonicTensorField {
    /// Assembles a tensor from explicit components keyed by sorted words; the
    /// key set must be exactly the canonical words of one common rank.
    /// Symmetry is structural under deduplicated storage; the trace-zero flag
    /// is re-verified numerically.
    pub fn from_components(components: BTreeMap<Vec<usize>, HalfSpaceField>) -> Result<Self> {
        let first = components
            .keys()
            .next()
            .ok_or_else(|| MhError::Parameter("tensor needs at least one component".into()))?;
        let rank = first.len();
        if rank == 0 {
            return Err(MhError::Parameter("tensor rank must be >= 1".into()));
        }
        let any = components.values().next().unwrap();
        let dim = any.grid().dim();
        let grid = any.grid().clone();
        let levels = any.levels().clone();
        let expected = canonical_words(dim, rank);
        if components.len() != expected.len()
            || !expected.iter().all(|w| components.contains_key(w))
        {
            return Err(MhError::Parameter(
                "component keys must be exactly the sorted words of one rank".into(),
            ));
        }
        for f in components.values() {
            if f.grid() != &grid || f.levels() != &levels {
                return Err(MhError::Grid("components must share grid and levels".into()));
            }
        }
        let mut out = Self {
            rank,
            dim,
            levels,
            components,
            symmetry_flag: true,
            trace_zero_flag: false,
        };
        out.trace_zero_flag = out.verify_trace_zero();
        Ok(out)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn levels(&self) -> &TimeLevels {
        &self.levels
    }

    pub fn grid(&self) -> &PeriodicGrid {
        self.components.values().next().unwrap().grid()
    }

    /// True when component storage respects index permutations (always, for
    /// deduplicated storage built from commuting symbols).
    pub fn is_symmetric(&self) -> bool {
        self.symmetry_flag
    }

    /// True when every contraction over the first two indices vanished at
    /// tolerance `1e-10 * max(1, scale)`; vacuously true for rank 1.
    pub fn is_trace_zero(&self) -> bool {
        self.trace_zero_flag
    }

    pub fn canonical_words(&self) -> Vec<Vec<usize>> {
        canonical_words(self.dim, self.rank)
    }

    /// Component for an arbitrary word; lookup is by sorted representative.
    pub fn component(&self, word: &[usize]) -> Result<&HalfSpaceField> {
        if word.len() != self.rank {
            return Err(MhError::Parameter(format!(
                "word length {} does not match rank {}",
                word.len(),
                self.rank
            )));
        }
        if let Some(&bad) = word.iter().find(|&&j| j > self.dim) {
            return Err(MhError::Parameter(format!(
                "word entry {bad} out of range 0..={}",
                self.dim
            )));
        }
        let mut key = word.to_vec();
        key.sort_unstable();
        Ok(&self.components[&key])
    }

    /// Pointwise norm `|F|` at one level: the Euclidean norm over all
    /// `(n+1)^m` components, accounting for permutation multiplicity.
    pub fn norm_values(&self, level: usize) -> Vec<f64> {
        let parts: Vec<(&[Complex64], f64)> = self
            .components
            .iter()
            .map(|(w, f)| (f.slice(level).values(), multiplicity(w)))
            .collect();
        exec::par_collect(self.grid().len(), |i| {
            parts
                .iter()
                .map(|(v, m)| m * v[i].norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
    }

    fn verify_trace_zero(&self) -> bool {
        if self.rank < 2 {
            return true;
        }
        let scale = self
            .components
            .values()
            .flat_map(|f| f.slices())
            .map(|s| s.max_abs())
            .fold(1.0, f64::max);
        let tol = 1e-10 * scale;
        let n_pts = self.grid().len();
        for rest in canonical_words(self.dim, self.rank - 2) {
            for level in 0..self.levels.len() {
                let mut sum = vec![Complex64::ZERO; n_pts];
                for j in 0..=self.dim {
                    let mut key = rest.clone();
                    key.push(j);
                    key.push(j);
                    key.sort_unstable();
                    for (acc, v) in sum.iter_mut().zip(self.components[&key].slice(level).values())
                    {
                        *acc += v;
                    }
                }
                if sum.iter().any(|v| v.norm() > tol) {
                    return false;
                }
            }
        }
        true
    }

    /// Interpolated `|F|` at an arbitrary height inside the level range,
    /// cubic Lagrange in log t (exact at stored levels).
    pub fn norm_at(&self, t: f64) -> Result<Vec<f64>> {
        let ts = self.levels.values();
        if t < ts[0] * (1.0 - 1e-12) || t > ts[ts.len() - 1] * (1.0 + 1e-12) {
            return Err(MhError::Parameter(format!(
                "height {t} outside level range [{}, {}]",
                ts[0],
                ts[ts.len() - 1]
            )));
        }
        if let Some(l) = self.levels.index_of(t) {
            return Ok(self.norm_values(l));
        }
        let hi = ts.partition_point(|&v| v < t);
        let lo = hi.saturating_sub(2);
        let hi = (lo + 4).min(ts.len());
        let lo = hi.saturating_sub(4).min(lo);
        let nodes: Vec<f64> = ts[lo..hi].iter().map(|v| v.ln()).collect();
        let z = t.ln();
        let mut out = vec![0.0; self.grid().len()];
        for (a, &za) in nodes.iter().enumerate() {
            let mut w = 1.0;
            for (b, &zb) in nodes.iter().enumerate() {
                if a != b {
                    w *= (z - zb) / (za - zb);
                }
            }
            for (acc, v) in out.iter_mut().zip(self.norm_values(lo + a)) {
                *acc += w * v;
            }
        }
        Ok(out)
    }
}

/// The harmonic vector `(u_0, .., u_n)` with `u_0 = f * P_t` and
/// `u_j = (R_j f) * P_t = f * Q_t^(j)`.
pub fn build_harmonic_vector(f: &ScalarField, levels: &TimeLevels) -> Result<HarmonicTensorField> {
    build_tensor_field(f, 1, levels)
}

/// Rank-m tensor `F_word = (R_word f) * P_t` over all words in `{0,..,n}^m`,
/// with `R_0` the identity; stored once per sorted word.
pub fn build_tensor_field(
    f: &ScalarField,
    m: usize,
    levels: &TimeLevels,
) -> Result<HarmonicTensorField> {
    if m == 0 {
        return Err(MhError::Parameter("tensor rank must be >= 1".into()));
    }
    let n = f.grid().dim();
    let mut count: u128 = 1;
    for i in 1..=m as u128 {
        count = count * (n as u128 + i) / i;
    }
    let bytes = count * levels.len() as u128 * f.grid().len() as u128 * 16;
    if bytes > TENSOR_BUDGET {
        return Err(MhError::Resource(format!(
            "rank-{m} tensor needs {bytes} bytes, budget is {TENSOR_BUDGET}"
        )));
    }
    let mut components = BTreeMap::new();
    for word in canonical_words(n, m) {
        // The all-identity word must keep the mean, which the product symbol
        // (zero at the zero frequency) would drop.
        let base = if word.iter().all(|&j| j == 0) {
            f.clone()
        } else {
            let w = RieszIndexWord::new(word.clone(), n)?;
            apply_frequency_multiplier(f, |xi| w.symbol(xi))
        };
        components.insert(word, poisson_extend(&base, levels));
    }
    HarmonicTensorField::from_components(components)
}

/// Exact t-derivative of a band-limited extension slice: multiplication by
/// `-2 pi |xi|` on the spectral side.
fn dt_spectral(f: &ScalarField) -> ScalarField {
    apply_frequency_multiplier(f, |xi| {
        let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        Complex64::new(-2.0 * PI * norm, 0.0)
    })
}

/// Centered first difference along a 0-based axis, periodic wrap.
fn derivative_x(f: &ScalarField, axis: usize) -> ScalarField {
    let grid = f.grid().clone();
    let n = grid.points_per_axis();
    let dim = grid.dim();
    let two_h = 2.0 * grid.spacing();
    let vals = f.values();
    let values = exec::par_collect(grid.len(), |idx| {
        let mut multi = [0isize; 9];
        let mut rem = idx;
        for a in (0..dim).rev() {
            multi[a] = (rem % n) as isize;
            rem /= n;
        }
        let orig = multi[axis];
        multi[axis] = orig + 1;
        let up = vals[grid.flat_index(&multi[..dim])];
        multi[axis] = orig - 1;
        let dn = vals[grid.flat_index(&multi[..dim])];
        (up - dn) / two_h
    });
    ScalarField::from_values(grid, values).expect("same grid")
}

/// Max-norms of the generalized Cauchy-Riemann residuals of a rank-1 tensor:
/// the divergence `d_t u_0 + sum_j d_j u_j` and the worst symmetry defect
/// `d_a u_b - d_b u_a` over index pairs (with `d_0 = d_t`). t-derivatives are
/// spectral, x-derivatives are centered differences.
pub fn cr_residual(f: &HarmonicTensorField) -> Result<(f64, f64)> {
    if f.rank() != 1 {
        return Err(MhError::Parameter(format!("rank-1 tensor required, got {}", f.rank())));
    }
    if f.levels().len() < 3 {
        return Err(MhError::Parameter("need at least three time levels".into()));
    }
    let n = f.dim();
    let mut div_max = 0.0f64;
    let mut curl_max = 0.0f64;
    for level in 0..f.levels().len() {
        let u: Vec<&ScalarField> = (0..=n)
            .map(|j| f.component(&[j]).map(|c| c.slice(level)))
            .collect::<Result<_>>()?;
        let mut div = dt_spectral(u[0]);
        for j in 1..=n {
            let d = derivative_x(u[j], j - 1);
            div = ScalarField::from_values(
                div.grid().clone(),
                div.values().iter().zip(d.values()).map(|(a, b)| a + b).collect(),
            )?;
        }
        div_max = div_max.max(div.max_abs());
        for j in 1..=n {
            let a = dt_spectral(u[j]);
            let b = derivative_x(u[0], j - 1);
            curl_max = curl_max.max(a.max_abs_diff(&b));
        }
        for j in 1..=n {
            for k in j + 1..=n {
                let a = derivative_x(u[k], j - 1);
                let b = derivative_x(u[j], k - 1);
                curl_max = curl_max.max(a.max_abs_diff(&b));
            }
        }
    }
    Ok((div_max, curl_max))
}

/// Spectral x-derivative along a 0-based axis: multiplication by `2 pi i xi_a`.
fn dx_spectral(f: &ScalarField, axis: usize) -> ScalarField {
    apply_frequency_multiplier(f, move |xi| Complex64::new(0.0, 2.0 * PI * xi[axis]))
}

/// Minimum over interior nodes of the (n+1)-dimensional Laplacian of `|F|^q`,
/// paired with the maximum Laplacian magnitude ("scale") for relative
/// tolerancing.
///
/// A centered-difference Laplacian of `|F|^q` is useless here: at the
/// critical exponent the true Laplacian nearly vanishes on large regions, so
/// O(h^2) stencil error would dominate the sign. Instead the Laplacian is
/// expanded by the chain rule through `G = |F|^2`,
///
/// ```text
/// Lap G^{q/2} = (q/2) G^{q/2-1} Lap G + (q/2)(q/2-1) G^{q/2-2} |grad G|^2,
/// Lap G = 2 sum |grad u_w|^2   (the components are harmonic),
/// ```
///
/// with every component derivative (in x and in t) evaluated exactly on the
/// spectral side. The sign of the result is then the genuine pointwise
/// inequality between `sum |grad u_w|^2` and `|grad |F||^2`, which fails for
/// q below the critical exponent. Nodes where `G` sits below roundoff
/// (1e-24 of the level maximum) carry no information and are skipped.
pub fn subharmonic_defect(f: &HarmonicTensorField, q: f64) -> Result<(f64, f64)> {
    if !(q > 0.0) {
        return Err(MhError::Parameter("exponent q must be positive".into()));
    }
    if f.levels().len() < 3 {
        return Err(MhError::Parameter("need at least three time levels".into()));
    }
    let grid = f.grid().clone();
    let n = grid.dim();
    let words: Vec<(Vec<usize>, f64)> = f
        .canonical_words()
        .into_iter()
        .map(|w| {
            let m = multiplicity(&w);
            (w, m)
        })
        .collect();
    let mut defect = f64::INFINITY;
    let mut scale = 0.0f64;
    for level in 1..f.levels().len() - 1 {
        let mut parts = Vec::new();
        for (w, mult) in &words {
            let u = f.component(w)?.slice(level);
            let mut ders = vec![dt_spectral(u)];
            for a in 0..n {
                ders.push(dx_spectral(u, a));
            }
            parts.push((*mult, u.values().to_vec(), ders));
        }
        let g_max = parts
            .iter()
            .map(|(m, u, _)| m * u.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        let g_floor = 1e-24 * g_max;
        for i in 0..grid.len() {
            let mut g = 0.0;
            let mut lap_g = 0.0;
            let mut grad_g = [0.0f64; 10];
            for (mult, u, ders) in &parts {
                let ui = u[i];
                g += mult * ui.norm_sqr();
                for (a, d) in ders.iter().enumerate() {
                    let di = d.values()[i];
                    lap_g += 2.0 * mult * di.norm_sqr();
                    grad_g[a] += 2.0 * mult * (ui.conj() * di).re;
                }
            }
            if g <= g_floor {
                continue;
            }
            let grad2: f64 = grad_g[..=n].iter().map(|v| v * v).sum();
            let lap = 0.5 * q * g.powf(0.5 * q - 1.0) * lap_g
                + 0.5 * q * (0.5 * q - 1.0) * g.powf(0.5 * q - 2.0) * grad2;
            defect = defect.min(lap);
            scale = scale.max(lap.abs());
        }
    }
    Ok((defect, scale))
}

/// Minimum over x of `(|F(., a)|^q * P_t)(x) - |F(x, a+t)|^q`, paired with
/// the maximum of the majorant for relative tolerancing; both heights are
/// read off the stored levels (interpolating in log t where needed).
pub fn harmonic_majorant_gap(
    f: &HarmonicTensorField,
    q: f64,
    a: f64,
    t: f64,
) -> Result<(f64, f64)> {
    if !(q > 0.0) || !(a > 0.0) || !(t > 0.0) {
        return Err(MhError::Parameter("q, a and t must be positive".into()));
    }
    let grid = f.grid().clone();
    let base: Vec<f64> = f.norm_at(a)?.into_iter().map(|v| v.powf(q)).collect();
    let target: Vec<f64> = f.norm_at(a + t)?.into_iter().map(|v| v.powf(q)).collect();
    let base = ScalarField::from_real_values(grid.clone(), base)?;
    let conv_levels = TimeLevels::new(vec![t], grid.spacing())?;
    let conv = poisson_extend(&base, &conv_levels);
    let conv = conv.slice(0).values();
    let mut gap = f64::INFINITY;
    let mut scale = 0.0f64;
    for (c, g) in conv.iter().zip(&target) {
        gap = gap.min(c.re - g);
        scale = scale.max(c.re.abs());
    }
    Ok((gap, scale))
}

#[derive(Serialize, Deserialize)]
struct HalfSpaceManifest {
    levels: Vec<f64>,
    slices: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct TensorComponentEntry {
    word: Vec<usize>,
    files: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct TensorManifest {
    rank: usize,
    dim: usize,
    levels: Vec<f64>,
    symmetric: bool,
    trace_zero: bool,
    components: Vec<TensorComponentEntry>,
}

/// Writes one field file per level plus a JSON manifest into `dir`.
pub fn save_half_space_field(dir: &Path, f: &HalfSpaceField) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut names = Vec::new();
    for (l, slice) in f.slices().iter().enumerate() {
        let name = format!("slice_{l:03}.fld");
        let mut file = std::fs::File::create(dir.join(&name))?;
        field::write_field(&mut file, slice)?;
        names.push(name);
    }
    let manifest = HalfSpaceManifest {
        levels: f.levels().values().to_vec(),
        slices: names,
    };
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| MhError::Config(e.to_string()))?;
    std::fs::write(dir.join("manifest.json"), json)?;
    Ok(())
}

pub fn load_half_space_field(dir: &Path) -> Result<HalfSpaceField> {
    let json = std::fs::read_to_string(dir.join("manifest.json"))?;
    let manifest: HalfSpaceManifest =
        serde_json::from_str(&json).map_err(|e| MhError::Config(e.to_string()))?;
    let slices: Vec<ScalarField> = manifest
        .slices
        .iter()
        .map(|name| {
            let mut file = std::fs::File::open(dir.join(name))?;
            field::read_field(&mut file)
        })
        .collect::<Result<_>>()?;
    if slices.is_empty() {
        return Err(MhError::Config("manifest lists no slices".into()));
    }
    let levels = TimeLevels::new(manifest.levels, slices[0].grid().spacing())?;
    HalfSpaceField::new(levels, slices)
}

/// Writes one field file per (component, level) plus a JSON manifest.
pub fn save_tensor_field(dir: &Path, f: &HarmonicTensorField) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut entries = Vec::new();
    for word in f.canonical_words() {
        let comp = f.component(&word)?;
        let tag: Vec<String> = word.iter().map(|j| j.to_string()).collect();
        let tag = tag.join("-");
        let mut files = Vec::new();
        for (l, slice) in comp.slices().iter().enumerate() {
            let name = format!("comp_{tag}_lvl_{l:03}.fld");
            let mut file = std::fs::File::create(dir.join(&name))?;
            field::write_field(&mut file, slice)?;
            files.push(name);
        }
        entries.push(TensorComponentEntry { word, files });
    }
    let manifest = TensorManifest {
        rank: f.rank(),
        dim: f.dim(),
        levels: f.levels().values().to_vec(),
        symmetric: f.is_symmetric(),
        trace_zero: f.is_trace_zero(),
        components: entries,
    };
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| MhError::Config(e.to_string()))?;
    std::fs::write(dir.join("manifest.json"), json)?;
    Ok(())
}

pub fn load_tensor_field(dir: &Path) -> Result<HarmonicTensorField> {
    let json = std::fs::read_to_string(dir.join("manifest.json"))?;
    let manifest: TensorManifest =
        serde_json::from_str(&json).map_err(|e| MhError::Config(e.to_string()))?;
    let mut components = BTreeMap::new();
    for entry in manifest.components {
        let slices: Vec<ScalarField> = entry
            .files
            .iter()
            .map(|name| {
                let mut file = std::fs::File::open(dir.join(name))?;
                field::read_field(&mut file)
            })
            .collect::<Result<_>>()?;
        if slices.is_empty() {
            return Err(MhError::Config("component with no slices".into()));
        }
        let levels = TimeLevels::new(manifest.levels.clone(), slices[0].grid().spacing())?;
        components.insert(entry.word, HalfSpaceField::new(levels, slices)?);
    }
    HarmonicTensorField::from_components(components)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::field::build_field;
    use crate::multipliers::riesz_transform;

    fn gaussian(dim: usize, l: f64, n: usize) -> ScalarField {
        let g = PeriodicGrid::new(dim, l, n).unwrap();
        build_field(&g, &Expr::parse("exp(-|x|^2)").unwrap()).unwrap()
    }

    fn mean_subtracted(f: &ScalarField) -> ScalarField {
        let m = f.mean();
        f.map(move |v| v - m)
    }

    #[test]
    fn time_level_validation() {
        assert!(TimeLevels::new(vec![], 0.1).is_err());
        assert!(TimeLevels::new(vec![0.5, 0.5], 0.1).is_err());
        assert!(TimeLevels::new(vec![0.5, 0.2], 0.1).is_err());
        assert!(TimeLevels::new(vec![0.01], 0.1).is_err());
        assert!(TimeLevels::new(vec![-1.0, 1.0], 0.1).is_err());
        assert!(TimeLevels::new(vec![0.5, 1.0], 0.1).is_ok());
    }

    #[test]
    fn default_levels_span_near_boundary_to_half_width() {
        let g = PeriodicGrid::new(1, 4.0, 64).unwrap();
        let lv = TimeLevels::default_for(&g);
        assert_eq!(lv.len(), 16);
        assert!((lv.values()[0] - g.spacing() / 2.0).abs() < 1e-12);
        assert!((lv.values()[15] - 4.0).abs() < 1e-12);
        for w in lv.values().windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn poisson_preserves_constants() {
        let g = PeriodicGrid::new(1, 4.0, 32).unwrap();
        let f = build_field(&g, &Expr::parse("2.5").unwrap()).unwrap();
        let u = poisson_extend(&f, &TimeLevels::default_for(&g));
        for slice in u.slices() {
            assert!(slice.values().iter().all(|v| (v.re - 2.5).abs() < 1e-13));
        }
    }

    #[test]
    fn poisson_semigroup() {
        let f = gaussian(2, 8.0, 64);
        let h = f.grid().spacing();
        let s = 0.3;
        let t = 0.7;
        let u = poisson_extend(&f, &TimeLevels::new(vec![s, s + t], h).unwrap());
        let mid = u.slice(0).clone();
        let again = poisson_extend(&mid, &TimeLevels::new(vec![t], h).unwrap());
        assert!(again.slice(0).max_abs_diff(u.slice(1)) <= 1e-10);
    }

    #[test]
    fn poisson_maximum_principle() {
        let f = gaussian(1, 8.0, 128);
        let top = f.max_abs();
        let u = poisson_extend(&f, &TimeLevels::default_for(f.grid()));
        for slice in u.slices() {
            assert!(slice.max_abs() <= top + 1e-12);
        }
    }

    #[test]
    fn poisson_matches_spatial_quadrature_1d() {
        // Direct quadrature of P_t * f with the periodization images of the
        // slowly decaying Cauchy tail summed explicitly, plus the analytic
        // remainder of the image series.
        let l = 8.0;
        let n = 256usize;
        let t = 0.5;
        let f = gaussian(1, l, n);
        let g = f.grid().clone();
        let h = g.spacing();
        let u = poisson_extend(&f, &TimeLevels::new(vec![t], h).unwrap());
        let p = |z: f64| t / (PI * (t * t + z * z));
        let mass: f64 = f.values().iter().map(|v| v.re).sum::<f64>() * h;
        let m_max = 512i64;
        for &i in &[128usize, 100, 140, 192] {
            let x = g.coords_vec(i)[0];
            let mut acc = 0.0;
            for (jy, v) in f.values().iter().enumerate() {
                let y = g.coords_vec(jy)[0];
                for m in -m_max..=m_max {
                    acc += p(x - y - 2.0 * l * m as f64) * v.re * h;
                }
            }
            // Tail of the image series, approximated by point masses:
            // sum_{|m|>M} mass * t/(pi (2Lm)^2) via the digamma expansion.
            let mm = m_max as f64;
            acc += 2.0 * mass * t / (PI * 4.0 * l * l) * (1.0 / mm - 1.0 / (2.0 * mm * mm));
            let got = u.slice(0).values()[i].re;
            assert!((got - acc).abs() <= 1e-6, "x={x} got={got} oracle={acc}");
        }
    }

    #[test]
    fn conjugate_constant_is_zero() {
        let g = PeriodicGrid::new(2, 4.0, 16).unwrap();
        let f = build_field(&g, &Expr::parse("3").unwrap()).unwrap();
        let u = conjugate_poisson_extend(&f, 1, &TimeLevels::default_for(&g)).unwrap();
        for slice in u.slices() {
            assert!(slice.max_abs() <= 1e-14);
        }
    }

    #[test]
    fn conjugate_axis_out_of_range() {
        let g = PeriodicGrid::new(2, 4.0, 16).unwrap();
        let f = build_field(&g, &Expr::parse("1").unwrap()).unwrap();
        let lv = TimeLevels::default_for(&g);
        assert!(matches!(
            conjugate_poisson_extend(&f, 0, &lv),
            Err(MhError::Parameter(_))
        ));
        assert!(matches!(
            conjugate_poisson_extend(&f, 3, &lv),
            Err(MhError::Parameter(_))
        ));
    }

    #[test]
    fn conjugate_single_mode_closed_form() {
        // cos(3x) on [-pi, pi): xi = 3/(2pi), so the damped conjugate slice
        // is exp(-3t) sin(3x).
        let g = PeriodicGrid::new(1, PI, 64).unwrap();
        let f = build_field(&g, &Expr::parse("cos(3*x1)").unwrap()).unwrap();
        let lv = TimeLevels::new(vec![0.25, 0.5, 1.0], g.spacing()).unwrap();
        let u = conjugate_poisson_extend(&f, 1, &lv).unwrap();
        for (slice, &t) in u.slices().iter().zip(lv.values()) {
            let damp = (-3.0 * t).exp();
            for (i, v) in slice.values().iter().enumerate() {
                let x = g.coords_vec(i)[0];
                assert!((v.re - damp * (3.0 * x).sin()).abs() <= 1e-12);
                assert!(v.im.abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn conjugate_matches_spatial_quadrature_2d() {
        // Near part: true-displacement quadrature of the kernel
        // C x_j/(t^2+|x|^2)^{3/2} against the Gaussian. Far part: the dipole
        // tail of the kernel picked up by periodization, approximated by
        // point masses at the image centers.
        let l = 8.0;
        let n = 128usize;
        let t = 0.5;
        let f = gaussian(2, l, n);
        let g = f.grid().clone();
        let h = g.spacing();
        let u = conjugate_poisson_extend(&f, 1, &TimeLevels::new(vec![t], h).unwrap()).unwrap();
        let c = 1.0 / (2.0 * PI);
        let kern = |z0: f64, z1: f64| c * z0 / (t * t + z0 * z0 + z1 * z1).powf(1.5);
        let mass: f64 = f.values().iter().map(|v| v.re).sum::<f64>() * h * h;
        for &idx in &[(72usize, 64usize), (80, 80), (64, 50)] {
            let i = idx.0 * n + idx.1;
            let x = g.coords_vec(i);
            let mut acc = 0.0;
            for (jy, v) in f.values().iter().enumerate() {
                let y = g.coords_vec(jy);
                acc += kern(x[0] - y[0], x[1] - y[1]) * v.re * h * h;
            }
            for m0 in -64i64..=64 {
                for m1 in -64i64..=64 {
                    if m0 == 0 && m1 == 0 {
                        continue;
                    }
                    acc += mass * kern(x[0] - 2.0 * l * m0 as f64, x[1] - 2.0 * l * m1 as f64);
                }
            }
            let got = u.slice(0).values()[i].re;
            assert!((got - acc).abs() <= 1e-4, "x={x:?} got={got} oracle={acc}");
        }
    }

    #[test]
    fn conjugacy_identity() {
        let f = gaussian(2, 8.0, 64);
        let lv = TimeLevels::new(vec![0.25, 1.0], f.grid().spacing()).unwrap();
        for j in 1..=2 {
            let a = conjugate_poisson_extend(&f, j, &lv).unwrap();
            let rj = riesz_transform(&f, j).unwrap();
            let b = poisson_extend(&rj, &lv);
            for l in 0..lv.len() {
                assert!(a.slice(l).max_abs_diff(b.slice(l)) <= 1e-12);
            }
        }
    }

    #[test]
    fn harmonic_vector_of_constant() {
        let g = PeriodicGrid::new(2, 4.0, 16).unwrap();
        let f = build_field(&g, &Expr::parse("1.5").unwrap()).unwrap();
        let v = build_harmonic_vector(&f, &TimeLevels::default_for(&g)).unwrap();
        for slice in v.component(&[0]).unwrap().slices() {
            assert!(slice.values().iter().all(|z| (z.re - 1.5).abs() < 1e-13));
        }
        for j in 1..=2 {
            for slice in v.component(&[j]).unwrap().slices() {
                assert!(slice.max_abs() <= 1e-13);
            }
        }
    }

    #[test]
    fn harmonic_vector_single_mode_closed_form() {
        let g = PeriodicGrid::new(1, PI, 64).unwrap();
        let f = build_field(&g, &Expr::parse("cos(2*x1)").unwrap()).unwrap();
        let lv = TimeLevels::new(vec![0.5, 1.0, 2.0], g.spacing()).unwrap();
        let v = build_harmonic_vector(&f, &lv).unwrap();
        for (l, &t) in lv.values().iter().enumerate() {
            let damp = (-2.0 * t).exp();
            let u0 = v.component(&[0]).unwrap().slice(l);
            let u1 = v.component(&[1]).unwrap().slice(l);
            for i in 0..g.len() {
                let x = g.coords_vec(i)[0];
                assert!((u0.values()[i].re - damp * (2.0 * x).cos()).abs() <= 1e-12);
                assert!((u1.values()[i].re - damp * (2.0 * x).sin()).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn cr_residual_single_mode() {
        // The t-derivatives are spectral (exact for band-limited slices), so
        // the residual is purely the centered-difference error in x,
        // (1 - sinc(h)) per derivative, about 4e-4 at this resolution.
        let g = PeriodicGrid::new(2, PI, 128).unwrap();
        let f = build_field(&g, &Expr::parse("cos(x1)").unwrap()).unwrap();
        let lv = TimeLevels::new(vec![0.25, 0.5, 1.0], g.spacing()).unwrap();
        let v = build_harmonic_vector(&f, &lv).unwrap();
        let (div, curl) = cr_residual(&v).unwrap();
        assert!(div <= 1e-3, "div={div}");
        assert!(curl <= 1e-3, "curl={curl}");
    }

    #[test]
    fn cr_residual_convergence_order() {
        let mut errs = Vec::new();
        for n in [64usize, 128, 256] {
            let f = gaussian(2, 8.0, n);
            let lv =
                TimeLevels::new(vec![0.25, 0.5, 1.0, 2.0], f.grid().spacing()).unwrap();
            let v = build_harmonic_vector(&f, &lv).unwrap();
            let (div, curl) = cr_residual(&v).unwrap();
            errs.push(div.max(curl));
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order >= 1.8, "order {order}, residuals {errs:?}");
        }
    }

    #[test]
    fn cr_residual_detects_violation() {
        let f = gaussian(2, 8.0, 64);
        let lv = TimeLevels::new(vec![0.25, 0.5, 1.0], f.grid().spacing()).unwrap();
        let v = build_harmonic_vector(&f, &lv).unwrap();
        let zero = ScalarField::zeros(f.grid().clone());
        let zeros =
            HalfSpaceField::new(lv.clone(), vec![zero.clone(), zero.clone(), zero]).unwrap();
        let mut comps = BTreeMap::new();
        for j in 0..=2usize {
            comps.insert(vec![j], v.component(&[j]).unwrap().clone());
        }
        comps.insert(vec![1], zeros);
        let broken = HarmonicTensorField::from_components(comps).unwrap();
        let (div, _) = cr_residual(&broken).unwrap();
        assert!(div > 1e-3, "div={div}");
    }

    #[test]
    fn cr_residual_needs_three_levels() {
        let f = gaussian(2, 8.0, 32);
        let lv = TimeLevels::new(vec![0.5, 1.0], f.grid().spacing()).unwrap();
        let v = build_harmonic_vector(&f, &lv).unwrap();
        assert!(matches!(cr_residual(&v), Err(MhError::Parameter(_))));
    }

    #[test]
    fn tensor_rank_one_matches_harmonic_vector() {
        let f = gaussian(2, 8.0, 32);
        let lv = TimeLevels::new(vec![0.5, 1.0], f.grid().spacing()).unwrap();
        let a = build_harmonic_vector(&f, &lv).unwrap();
        let b = build_tensor_field(&f, 1, &lv).unwrap();
        for j in 0..=2usize {
            for l in 0..lv.len() {
                let d = a
                    .component(&[j])
                    .unwrap()
                    .slice(l)
                    .max_abs_diff(b.component(&[j]).unwrap().slice(l));
                assert!(d <= 1e-14);
            }
        }
    }

    #[test]
    fn tensor_trace_vanishes_for_mean_zero_seed() {
        let f = mean_subtracted(&gaussian(2, 8.0, 64));
        let lv = TimeLevels::new(vec![0.25, 0.5, 1.0], f.grid().spacing()).unwrap();
        let v = build_tensor_field(&f, 2, &lv).unwrap();
        assert!(v.is_symmetric());
        assert!(v.is_trace_zero());
        for l in 0..lv.len() {
            let mut worst = 0.0f64;
            for i in 0..f.grid().len() {
                let mut s = Complex64::ZERO;
                for j in 0..=2usize {
                    s += v.component(&[j, j]).unwrap().slice(l).values()[i];
                }
                worst = worst.max(s.norm());
            }
            assert!(worst <= 1e-10, "trace {worst} at level {l}");
        }
    }

    #[test]
    fn tensor_trace_flag_catches_mean_leak() {
        // With R_0 the true identity, the contraction picks up exactly the
        // mean of the seed, so a seed with appreciable mean must fail the
        // trace-zero verification.
        let f = gaussian(2, 4.0, 32);
        let lv = TimeLevels::new(vec![0.5, 1.0], f.grid().spacing()).unwrap();
        let v = build_tensor_field(&f, 2, &lv).unwrap();
        assert!(!v.is_trace_zero());
    }

    #[test]
    fn tensor_symmetry_of_component_lookup() {
        let f = mean_subtracted(&gaussian(2, 8.0, 32));
        let lv = TimeLevels::new(vec![0.5, 1.0], f.grid().spacing()).unwrap();
        let v = build_tensor_field(&f, 2, &lv).unwrap();
        let a = v.component(&[1, 2]).unwrap();
        let b = v.component(&[2, 1]).unwrap();
        for l in 0..lv.len() {
            assert!(a.slice(l).max_abs_diff(b.slice(l)) == 0.0);
        }
        // The stored representative agrees with the explicitly reordered
        // spectral composition.
        let w = RieszIndexWord::new(vec![2, 1], 2).unwrap();
        let alt = poisson_extend(
            &apply_frequency_multiplier(&f, |xi| w.symbol(xi)),
            &lv,
        );
        for l in 0..lv.len() {
            assert!(a.slice(l).max_abs_diff(alt.slice(l)) <= 1e-13);
        }
    }

    #[test]
    fn tensor_budget_is_enforced() {
        let f = gaussian(2, 8.0, 64);
        let lv = TimeLevels::default_for(f.grid());
        assert!(matches!(
            build_tensor_field(&f, 16, &lv),
            Err(MhError::Resource(_))
        ));
    }

    #[test]
    fn subharmonic_defect_rank_one() {
        let f = gaussian(2, 8.0, 64);
        let lv = TimeLevels::default_for(f.grid());
        let v = build_harmonic_vector(&f, &lv).unwrap();
        // q = (n-1)/n = 1/2 is the critical exponent for rank 1 in n = 2.
        let (defect, scale) = subharmonic_defect(&v, 0.5).unwrap();
        assert!(defect >= -1e-6 * scale, "defect={defect} scale={scale}");
        let (defect, scale) = subharmonic_defect(&v, 1.0).unwrap();
        assert!(defect >= -1e-6 * scale, "defect={defect} scale={scale}");
    }

    #[test]
    fn subharmonic_defect_rank_two_critical_exponent() {
        let f = mean_subtracted(&gaussian(2, 8.0, 64));
        let lv = TimeLevels::default_for(f.grid());
        let v = build_tensor_field(&f, 2, &lv).unwrap();
        // q = (n-1)/(n+m-1) = 1/3 for n = 2, m = 2.
        let (defect, scale) = subharmonic_defect(&v, 1.0 / 3.0).unwrap();
        assert!(defect >= -1e-6 * scale, "defect={defect} scale={scale}");
    }

    #[test]
    fn subharmonic_defect_square_norm() {
        let f = gaussian(2, 8.0, 64);
        let lv = TimeLevels::default_for(f.grid());
        let v = build_harmonic_vector(&f, &lv).unwrap();
        let (defect, scale) = subharmonic_defect(&v, 2.0).unwrap();
        assert!(defect >= -1e-8 * scale, "defect={defect} scale={scale}");
    }

    #[test]
    fn subharmonic_defect_fails_below_critical_exponent() {
        // The check must discriminate: well below q = 1/2 the pointwise
        // inequality breaks in the far field where |F| behaves like the
        // fundamental solution.
        let f = gaussian(2, 8.0, 64);
        let lv = TimeLevels::default_for(f.grid());
        let v = build_harmonic_vector(&f, &lv).unwrap();
        let (defect, scale) = subharmonic_defect(&v, 0.3).unwrap();
        assert!(defect < -1e-4 * scale, "defect={defect} scale={scale}");
    }

    #[test]
    fn majorant_equality_for_constant_seed() {
        let g = PeriodicGrid::new(2, 4.0, 32).unwrap();
        let f = build_field(&g, &Expr::parse("2").unwrap()).unwrap();
        let lv = TimeLevels::new(vec![0.25, 0.5, 1.0], g.spacing()).unwrap();
        let v = build_harmonic_vector(&f, &lv).unwrap();
        let (gap, _) = harmonic_majorant_gap(&v, 0.5, 0.25, 0.25).unwrap();
        assert!(gap.abs() <= 1e-12, "gap={gap}");
    }

    #[test]
    fn majorant_gap_gaussian() {
        let f = gaussian(2, 8.0, 64);
        let lv = TimeLevels::new(vec![0.125, 0.25, 0.5, 1.0], f.grid().spacing()).unwrap();
        let v = build_harmonic_vector(&f, &lv).unwrap();
        for q in [0.5, 2.0] {
            let (gap, scale) = harmonic_majorant_gap(&v, q, 0.25, 0.25).unwrap();
            assert!(gap >= -1e-6 * scale, "q={q} gap={gap} scale={scale}");
        }
    }

    #[test]
    fn majorant_rejects_heights_outside_levels() {
        let f = gaussian(2, 8.0, 32);
        let lv = TimeLevels::new(vec![0.5, 1.0, 2.0], f.grid().spacing()).unwrap();
        let v = build_harmonic_vector(&f, &lv).unwrap();
        assert!(matches!(
            harmonic_majorant_gap(&v, 1.0, 1.5, 1.0),
            Err(MhError::Parameter(_))
        ));
    }

    #[test]
    fn norm_interpolation_matches_direct_level() {
        // Interpolate |F| at a height strictly between levels and compare
        // against a rebuild with that height stored exactly.
        let f = gaussian(2, 8.0, 32);
        let dense = TimeLevels::log_spaced(f.grid(), 24).unwrap();
        let v = build_harmonic_vector(&f, &dense).unwrap();
        let t = (dense.values()[10] * dense.values()[11]).sqrt();
        let interp = v.norm_at(t).unwrap();
        let exact_lv = TimeLevels::new(vec![t], f.grid().spacing()).unwrap();
        let exact = build_harmonic_vector(&f, &exact_lv).unwrap().norm_values(0);
        let err = interp
            .iter()
            .zip(&exact)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-5, "err={err}");
    }

    #[test]
    fn half_space_serialization_round_trip() {
        let f = gaussian(2, 4.0, 16);
        let lv = TimeLevels::new(vec![0.5, 1.0], f.grid().spacing()).unwrap();
        let u = poisson_extend(&f, &lv);
        let dir = std::env::temp_dir().join(format!("mh_hs_{}", std::process::id()));
        save_half_space_field(&dir, &u).unwrap();
        let back = load_half_space_field(&dir).unwrap();
        assert_eq!(back.levels(), u.levels());
        for l in 0..lv.len() {
            assert!(back.slice(l).max_abs_diff(u.slice(l)) == 0.0);
        }
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn tensor_serialization_round_trip() {
        let f = mean_subtracted(&gaussian(2, 4.0, 16));
        let lv = TimeLevels::new(vec![0.5, 1.0], f.grid().spacing()).unwrap();
        let v = build_tensor_field(&f, 2, &lv).unwrap();
        let dir = std::env::temp_dir().join(format!("mh_tf_{}", std::process::id()));
        save_tensor_field(&dir, &v).unwrap();
        let back = load_tensor_field(&dir).unwrap();
        assert_eq!(back.rank(), 2);
        assert_eq!(back.is_trace_zero(), v.is_trace_zero());
        for word in v.canonical_words() {
            for l in 0..lv.len() {
                let d = back
                    .component(&word)
                    .unwrap()
                    .slice(l)
                    .max_abs_diff(v.component(&word).unwrap().slice(l));
                assert!(d == 0.0);
            }
        }
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn multiplicity_counts_orderings() {
        assert_eq!(multiplicity(&[0, 0, 0]), 1.0);
        assert_eq!(multiplicity(&[0, 1]), 2.0);
        assert_eq!(multiplicity(&[0, 1, 2]), 6.0);
        assert_eq!(multiplicity(&[1, 1, 2]), 3.0);
        assert_eq!(canonical_words(2, 2).len(), 6);
        assert_eq!(canonical_words(3, 1).len(), 4);
    }
}
