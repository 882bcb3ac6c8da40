//! Discretization substrate: periodic grids, scalar fields, spectral
//! transforms and discrete differential operators.
//!
//! The torus `[-L, L)^n` stands in for `R^n`; test functions are chosen to
//! decay below roundoff at the seam so wrap-around is negligible. One Fourier
//! normalization is fixed project-wide: the *unitary* DFT, so energy is
//! preserved exactly between `values` and `coefficients`. The frequency
//! lattice is `{k/(2L) : k in [-N/2, N/2)}` per axis and plane waves are
//! `exp(2 pi i xi . x)`.

use crate::error::{MhError, Result};
use crate::exec;
use crate::expr::Expr;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::io::{Read, Write};
use std::sync::{Arc, Mutex, OnceLock};

/// Largest permitted total point count.
const MAX_POINTS: usize = 1 << 24;

/// Uniform grid on the torus `[-L, L)^n`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PeriodicGrid {
    dim: usize,
    half_width: f64,
    points_per_axis: usize,
}

impl PeriodicGrid {
    pub fn new(dim: usize, half_width: f64, points_per_axis: usize) -> Result<Self> {
        if dim < 1 {
            return Err(MhError::Grid("dimension must be >= 1".into()));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(MhError::Grid("half width must be positive".into()));
        }
        if points_per_axis < 8 || points_per_axis % 2 != 0 {
            return Err(MhError::Grid("points per axis must be an even integer >= 8".into()));
        }
        let total = (points_per_axis as u128).pow(dim as u32);
        if total > MAX_POINTS as u128 {
            return Err(MhError::Resource(format!(
                "grid has {total} points, budget is {MAX_POINTS}"
            )));
        }
        Ok(Self { dim, half_width, points_per_axis })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    /// Grid spacing h = 2L/N.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points_per_axis as f64
    }

    /// Total number of grid points N^n.
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell volume h^n.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Writes the coordinates of the node with flat index `idx` into `out`.
    pub fn coords(&self, idx: usize, out: &mut [f64]) {
        let n = self.points_per_axis;
        let h = self.spacing();
        let mut rem = idx;
        for a in (0..self.dim).rev() {
            let i = rem % n;
            rem /= n;
            out[a] = -self.half_width + i as f64 * h;
        }
    }

    /// Coordinates of the node with flat index `idx`, allocated.
    pub fn coords_vec(&self, idx: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.coords(idx, &mut out);
        out
    }

    /// Writes the per-axis indices of flat index `idx` into `out`.
    pub fn multi_index(&self, idx: usize, out: &mut [usize]) {
        let n = self.points_per_axis;
        let mut rem = idx;
        for a in (0..self.dim).rev() {
            out[a] = rem % n;
            rem /= n;
        }
    }

    /// Flat index from per-axis indices (wrapped periodically).
    pub fn flat_index(&self, multi: &[isize]) -> usize {
        let n = self.points_per_axis as isize;
        let mut idx = 0usize;
        for a in 0..self.dim {
            let i = multi[a].rem_euclid(n) as usize;
            idx = idx * self.points_per_axis + i;
        }
        idx
    }

    /// Writes the frequency vector xi = k/(2L) of spectral bin `idx` into `out`.
    pub fn frequency(&self, idx: usize, out: &mut [f64]) {
        let n = self.points_per_axis;
        let two_l = 2.0 * self.half_width;
        let mut rem = idx;
        for a in (0..self.dim).rev() {
            let i = rem % n;
            rem /= n;
            let k = if i < n / 2 { i as isize } else { i as isize - n as isize };
            out[a] = k as f64 / two_l;
        }
    }

    /// Signed offset coordinate of difference-index `m` on one axis:
    /// `m*h` for `m < N/2`, else `(m-N)*h`.
    pub fn offset_coord(&self, m: usize) -> f64 {
        let n = self.points_per_axis;
        let h = self.spacing();
        if m < n / 2 {
            m as f64 * h
        } else {
            (m as isize - n as isize) as f64 * h
        }
    }

    /// Periodic (minimum-image) distance between two nodes.
    pub fn node_distance(&self, a: usize, b: usize) -> f64 {
        let n = self.points_per_axis;
        let h = self.spacing();
        let half = self.half_width;
        let mut ra = a;
        let mut rb = b;
        let mut d2 = 0.0;
        for _ in 0..self.dim {
            let ia = (ra % n) as f64;
            let ib = (rb % n) as f64;
            ra /= n;
            rb /= n;
            let mut d = (ia - ib) * h;
            if d > half {
                d -= 2.0 * half;
            } else if d < -half {
                d += 2.0 * half;
            }
            d2 += d * d;
        }
        d2.sqrt()
    }
}

/// Complex- or real-valued samples on a [`PeriodicGrid`].
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: PeriodicGrid,
    values: Vec<Complex64>,
    real: bool,
    mean: Complex64,
}

impl ScalarField {
    pub fn from_values(grid: PeriodicGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(MhError::Grid(format!(
                "value count {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        let real = values.iter().all(|v| v.im == 0.0);
        let mean = values.iter().sum::<Complex64>() / values.len() as f64;
        Ok(Self { grid, values, real, mean })
    }

    pub fn from_real_values(grid: PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        let values = values.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
        Self::from_values(grid, values)
    }

    pub fn zeros(grid: PeriodicGrid) -> Self {
        let n = grid.len();
        Self { grid, values: vec![Complex64::ZERO; n], real: true, mean: Complex64::ZERO }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn mean(&self) -> Complex64 {
        self.mean
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    /// Real parts of the samples.
    pub fn real_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Max-norm of the difference.
    pub fn max_abs_diff(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Pointwise map producing a new field on the same grid.
    pub fn map(&self, f: impl Fn(Complex64) -> Complex64 + Sync + Send) -> ScalarField {
        let values = exec::par_collect(self.values.len(), |i| f(self.values[i]));
        ScalarField::from_values(self.grid.clone(), values).expect("same grid")
    }

    /// L2 norm with the h^n quadrature weight.
    pub fn l2_norm(&self) -> f64 {
        let s = exec::par_sum(self.values.len(), |i| self.values[i].norm_sqr());
        (s * self.grid.cell_volume()).sqrt()
    }
}

/// Builds a field by sampling `spec` at every grid node.
pub fn build_field(grid: &PeriodicGrid, spec: &Expr) -> Result<ScalarField> {
    build_field_offset(grid, spec, 0.0)
}

/// Like [`build_field`] but samples at `node + offset_cells * h` on every
/// axis. Singular weights use `offset_cells = 0.5` so `|x|^a` is never
/// evaluated at the origin.
pub fn build_field_offset(grid: &PeriodicGrid, spec: &Expr, offset_cells: f64) -> Result<ScalarField> {
    spec.check_vars(grid.dim(), false)?;
    let n = grid.len();
    let h = grid.spacing();
    let shift = offset_cells * h;
    let values = exec::par_collect(n, |i| {
        let mut x = [0.0f64; 9];
        grid.coords(i, &mut x[..grid.dim()]);
        for v in x[..grid.dim()].iter_mut() {
            *v += shift;
        }
        Complex64::new(spec.eval(&x[..grid.dim()], 0.0), 0.0)
    });
    if let Some(bad) = values.iter().position(|v| !v.re.is_finite()) {
        let mut x = vec![0.0; grid.dim()];
        grid.coords(bad, &mut x);
        return Err(MhError::Domain(format!("non-finite sample at node {x:?}")));
    }
    ScalarField::from_values(grid.clone(), values)
}

/// Fourier coefficients of a field, unitary normalization.
#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: PeriodicGrid,
    coefficients: Vec<Complex64>,
}

impl SpectralField {
    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coefficients
    }
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    static PLANS: OnceLock<Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>> = OnceLock::new();
    let cache = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut cache = cache.lock().unwrap();
    cache
        .entry((n, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            }
        })
        .clone()
}

/// In-place n-dimensional DFT over a row-major array with equal axis lengths.
fn ndfft(grid: &PeriodicGrid, data: &mut [Complex64], inverse: bool) {
    let n = grid.points_per_axis();
    let dim = grid.dim();
    let total = grid.len();
    let fft = plan(n, inverse);
    let mut line = vec![Complex64::ZERO; n];
    let mut scratch = vec![Complex64::ZERO; fft.get_inplace_scratch_len()];
    for axis in 0..dim {
        let stride = n.pow((dim - 1 - axis) as u32);
        let lines = total / n;
        for l in 0..lines {
            let outer = l / stride;
            let inner = l % stride;
            let base = outer * n * stride + inner;
            for i in 0..n {
                line[i] = data[base + i * stride];
            }
            fft.process_with_scratch(&mut line, &mut scratch);
            for i in 0..n {
                data[base + i * stride] = line[i];
            }
        }
    }
    // Unitary scaling, applied once per full transform.
    let scale = 1.0 / (total as f64).sqrt();
    for v in data.iter_mut() {
        *v *= scale;
    }
}

pub fn to_spectral(f: &ScalarField) -> SpectralField {
    let mut data = f.values().to_vec();
    ndfft(f.grid(), &mut data, false);
    SpectralField { grid: f.grid().clone(), coefficients: data }
}

pub fn from_spectral(spec: &SpectralField) -> ScalarField {
    let mut data = spec.coefficients.clone();
    ndfft(&spec.grid, &mut data, true);
    ScalarField::from_values(spec.grid.clone(), data).expect("same grid")
}

/// Applies a frequency-side multiplier `g(xi)`; the zero-frequency bin is
/// passed through `g(0)` like any other (callers fix their own convention).
///
/// Nyquist bins (axis index N/2) have no +/− partner, so a symbol with odd
/// dependence on such an axis would break the Hermitian symmetry that keeps
/// real inputs real. The multiplier is therefore symmetrized over sign flips
/// of every Nyquist axis, which drops exactly the odd part there and leaves
/// all other bins untouched.
pub fn apply_frequency_multiplier(
    f: &ScalarField,
    g: impl Fn(&[f64]) -> Complex64 + Sync + Send,
) -> ScalarField {
    let spec = to_spectral(f);
    let grid = spec.grid().clone();
    let dim = grid.dim();
    let half = grid.points_per_axis() / 2;
    let coefficients = exec::par_collect(spec.coefficients.len(), |i| {
        let mut xi = [0.0f64; 9];
        grid.frequency(i, &mut xi[..dim]);
        let mut mi = [0usize; 9];
        grid.multi_index(i, &mut mi[..dim]);
        let nyquist: Vec<usize> = (0..dim).filter(|&a| mi[a] == half).collect();
        let value = if nyquist.is_empty() {
            g(&xi[..dim])
        } else {
            let mut acc = Complex64::new(0.0, 0.0);
            let combos = 1usize << nyquist.len();
            for c in 0..combos {
                let mut flipped = xi;
                for (b, &a) in nyquist.iter().enumerate() {
                    if c >> b & 1 == 1 {
                        flipped[a] = -flipped[a];
                    }
                }
                acc += g(&flipped[..dim]);
            }
            acc / combos as f64
        };
        spec.coefficients[i] * value
    });
    from_spectral(&SpectralField { grid, coefficients })
}

/// Centered second-difference Laplacian with periodic wrap.
pub fn discrete_laplacian(f: &ScalarField) -> ScalarField {
    let grid = f.grid().clone();
    let n = grid.points_per_axis();
    let dim = grid.dim();
    let h2 = grid.spacing() * grid.spacing();
    let vals = f.values();
    let values = exec::par_collect(grid.len(), |idx| {
        let mut multi = [0isize; 9];
        {
            let mut rem = idx;
            for a in (0..dim).rev() {
                multi[a] = (rem % n) as isize;
                rem /= n;
            }
        }
        let mut acc = Complex64::ZERO;
        for a in 0..dim {
            let orig = multi[a];
            multi[a] = orig + 1;
            let up = vals[grid.flat_index(&multi[..dim])];
            multi[a] = orig - 1;
            let dn = vals[grid.flat_index(&multi[..dim])];
            multi[a] = orig;
            acc += up + dn - 2.0 * vals[idx];
        }
        acc / h2
    });
    ScalarField::from_values(grid, values).expect("same grid")
}

/// Circular convolution `f * kern` with the h^n quadrature weight, where
/// `kern` is stored in difference-index (offset) order.
pub fn convolve_offset_kernel(f: &ScalarField, kern: &[Complex64]) -> Result<ScalarField> {
    if kern.len() != f.grid().len() {
        return Err(MhError::Grid("kernel length does not match grid".into()));
    }
    let grid = f.grid().clone();
    let mut khat = kern.to_vec();
    ndfft(&grid, &mut khat, false);
    let fhat = to_spectral(f);
    let scale = grid.cell_volume() * (grid.len() as f64).sqrt();
    let coefficients = exec::par_collect(khat.len(), |i| fhat.coefficients[i] * khat[i] * scale);
    Ok(from_spectral(&SpectralField { grid, coefficients }))
}

/// Samples a spatial kernel in difference-index order: entry `m` holds
/// `k(delta(m))` with `delta` the signed minimum-image offset.
pub fn sample_offset_kernel(
    grid: &PeriodicGrid,
    k: impl Fn(&[f64]) -> f64 + Sync + Send,
) -> Vec<Complex64> {
    let n = grid.points_per_axis();
    let dim = grid.dim();
    exec::par_collect(grid.len(), |idx| {
        let mut x = [0.0f64; 9];
        let mut rem = idx;
        for a in (0..dim).rev() {
            let m = rem % n;
            rem /= n;
            x[a] = grid.offset_coord(m);
        }
        Complex64::new(k(&x[..dim]), 0.0)
    })
}

const MAGIC: &[u8; 6] = b"MHFLD1";

/// Writes the 32-byte header plus little-endian f64 samples.
pub fn write_field<W: Write>(w: &mut W, f: &ScalarField) -> Result<()> {
    let mut header = [0u8; 32];
    header[..6].copy_from_slice(MAGIC);
    header[6] = if f.is_real() { 1 } else { 0 };
    header[7] = f.grid().dim() as u8;
    header[8..12].copy_from_slice(&(f.grid().points_per_axis() as u32).to_le_bytes());
    header[16..24].copy_from_slice(&f.grid().half_width().to_le_bytes());
    w.write_all(&header)?;
    if f.is_real() {
        for v in f.values() {
            w.write_all(&v.re.to_le_bytes())?;
        }
    } else {
        for v in f.values() {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_field<R: Read>(r: &mut R) -> Result<ScalarField> {
    let mut header = [0u8; 32];
    r.read_exact(&mut header)?;
    if &header[..6] != MAGIC {
        return Err(MhError::Domain("bad field file magic".into()));
    }
    let real = header[6] == 1;
    let dim = header[7] as usize;
    let n = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let l = f64::from_le_bytes(header[16..24].try_into().unwrap());
    let grid = PeriodicGrid::new(dim, l, n)?;
    let total = grid.len();
    let floats = if real { total } else { 2 * total };
    let mut buf = vec![0u8; floats * 8];
    r.read_exact(&mut buf)?;
    let mut values = Vec::with_capacity(total);
    if real {
        for c in buf.chunks_exact(8) {
            values.push(Complex64::new(f64::from_le_bytes(c.try_into().unwrap()), 0.0));
        }
    } else {
        for c in buf.chunks_exact(16) {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            values.push(Complex64::new(re, im));
        }
    }
    ScalarField::from_values(grid, values)
}

/// CSV export: one row per node, index tuple then value.
pub fn write_field_csv<W: Write>(w: &mut W, f: &ScalarField) -> Result<()> {
    let dim = f.grid().dim();
    let mut multi = vec![0usize; dim];
    for (idx, v) in f.values().iter().enumerate() {
        f.grid().multi_index(idx, &mut multi);
        for m in &multi {
            write!(w, "{m},")?;
        }
        if f.is_real() {
            writeln!(w, "{}", v.re)?;
        } else {
            writeln!(w, "{}{}{}i", v.re, if v.im >= 0.0 { "+" } else { "" }, v.im)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid1(n: usize, l: f64) -> PeriodicGrid {
        PeriodicGrid::new(1, l, n).unwrap()
    }

    #[test]
    fn zero_field() {
        let g = grid1(8, std::f64::consts::PI);
        let f = build_field(&g, &Expr::parse("0").unwrap()).unwrap();
        assert!(f.values().iter().all(|v| v.norm() == 0.0));
        assert_eq!(f.mean(), Complex64::ZERO);
    }

    #[test]
    fn cosine_mean_vanishes() {
        let g = grid1(64, std::f64::consts::PI);
        let f = build_field(&g, &Expr::parse("cos(x1)").unwrap()).unwrap();
        assert!(f.mean().norm() < 1e-14);
    }

    #[test]
    fn gaussian_matches_pointwise() {
        let g = PeriodicGrid::new(2, 8.0, 64).unwrap();
        let f = build_field(&g, &Expr::parse("exp(-|x|^2)").unwrap()).unwrap();
        let mut x = [0.0; 2];
        for (i, v) in f.values().iter().enumerate() {
            g.coords(i, &mut x);
            let expect = (-(x[0] * x[0] + x[1] * x[1])).exp();
            assert!((v.re - expect).abs() <= 1e-15 * (1.0 + expect));
        }
    }

    #[test]
    fn non_finite_sample_is_domain_error() {
        let g = grid1(8, 1.0);
        let e = Expr::parse("1/x1").unwrap();
        assert!(matches!(build_field(&g, &e), Err(MhError::Domain(_))));
    }

    #[test]
    fn constant_spectrum_concentrates_at_zero() {
        let g = grid1(16, 2.0);
        let f = build_field(&g, &Expr::parse("3.5").unwrap()).unwrap();
        let s = to_spectral(&f);
        // Unitary DFT puts c*sqrt(N) at bin 0.
        assert!((s.coefficients()[0].re - 3.5 * 4.0).abs() < 1e-12);
        assert!(s.coefficients()[1..].iter().all(|c| c.norm() <= 1e-14));
    }

    #[test]
    fn cosine_has_two_modes() {
        let g = grid1(64, std::f64::consts::PI);
        let f = build_field(&g, &Expr::parse("cos(x1)").unwrap()).unwrap();
        let s = to_spectral(&f);
        let big: Vec<usize> = (0..64).filter(|&i| s.coefficients()[i].norm() > 1e-10).collect();
        assert_eq!(big, vec![1, 63]);
        let m0 = s.coefficients()[1].norm();
        let m1 = s.coefficients()[63].norm();
        assert!((m0 - m1).abs() < 1e-12);
    }

    #[test]
    fn round_trip_identity() {
        let g = PeriodicGrid::new(2, 3.0, 16).unwrap();
        let vals: Vec<f64> = (0..g.len()).map(|i| ((i * 37 % 101) as f64 - 50.0) / 17.0).collect();
        let f = ScalarField::from_real_values(g, vals).unwrap();
        let back = from_spectral(&to_spectral(&f));
        assert!(f.max_abs_diff(&back) <= 1e-12 * f.max_abs());
        let dust = back.values().iter().map(|v| v.im.abs()).fold(0.0, f64::max);
        assert!(dust <= 1e-12 * f.max_abs());
    }

    #[test]
    fn parseval() {
        let g = grid1(128, 2.5);
        let f = build_field(&g, &Expr::parse("exp(-x1^2)*cos(3*x1)").unwrap()).unwrap();
        let s = to_spectral(&f);
        let e_phys: f64 = f.values().iter().map(|v| v.norm_sqr()).sum::<f64>() * g.cell_volume();
        let e_spec: f64 = s.coefficients().iter().map(|c| c.norm_sqr()).sum::<f64>()
            * (2.0 * g.half_width()).powi(1)
            / g.len() as f64;
        assert!((e_phys - e_spec).abs() <= 1e-12 * e_phys);
    }

    #[test]
    fn laplacian_constant_is_zero() {
        let g = grid1(16, 1.0);
        let f = build_field(&g, &Expr::parse("7").unwrap()).unwrap();
        let lap = discrete_laplacian(&f);
        assert!(lap.max_abs() == 0.0);
    }

    #[test]
    fn laplacian_cosine() {
        let g = grid1(128, std::f64::consts::PI);
        let f = build_field(&g, &Expr::parse("cos(x1)").unwrap()).unwrap();
        let lap = discrete_laplacian(&f);
        let err = lap
            .values()
            .iter()
            .zip(f.values())
            .map(|(l, v)| (l + v).norm())
            .fold(0.0, f64::max);
        assert!(err <= 1e-3, "err={err}");
    }

    #[test]
    fn laplacian_exact_on_quadratics_away_from_seam() {
        let g = grid1(64, 4.0);
        let f = build_field(&g, &Expr::parse("x1^2").unwrap()).unwrap();
        let lap = discrete_laplacian(&f);
        // Interior nodes only; the wrap seam sees the jump.
        let mut x = [0.0];
        for (i, v) in lap.values().iter().enumerate() {
            g.coords(i, &mut x);
            if x[0].abs() < 2.0 {
                assert!((v.re - 2.0).abs() < 1e-9, "at x={} got {}", x[0], v.re);
            }
        }
    }

    #[test]
    fn laplacian_convergence_order() {
        let mut errs = Vec::new();
        for n in [32usize, 64, 128] {
            let g = grid1(n, std::f64::consts::PI);
            let f = build_field(&g, &Expr::parse("cos(x1)").unwrap()).unwrap();
            let lap = discrete_laplacian(&f);
            let err = lap
                .values()
                .iter()
                .zip(f.values())
                .map(|(l, v)| (l + v).norm())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order >= 1.8, "order {order}");
        }
    }

    #[test]
    fn serialization_round_trip() {
        let g = PeriodicGrid::new(2, 2.0, 8).unwrap();
        let f = build_field(&g, &Expr::parse("sin(x1)+cos(x2)").unwrap()).unwrap();
        let mut buf = Vec::new();
        write_field(&mut buf, &f).unwrap();
        assert_eq!(buf.len(), 32 + 8 * g.len());
        let back = read_field(&mut buf.as_slice()).unwrap();
        assert_eq!(back.grid(), f.grid());
        assert!(f.max_abs_diff(&back) == 0.0);
    }

    #[test]
    fn convolve_with_unit_mass_kernel_preserves_constants() {
        let g = grid1(64, 4.0);
        let f = build_field(&g, &Expr::parse("2.5").unwrap()).unwrap();
        // Gaussian bump, normalized to unit grid mass.
        let mut kern = sample_offset_kernel(&g, |x| (-x[0] * x[0] * 4.0).exp());
        let mass: f64 = kern.iter().map(|v| v.re).sum::<f64>() * g.cell_volume();
        for v in kern.iter_mut() {
            *v /= mass;
        }
        let out = convolve_offset_kernel(&f, &kern).unwrap();
        assert!(out.values().iter().all(|v| (v.re - 2.5).abs() < 1e-12));
    }

    #[test]
    fn grid_validation() {
        assert!(PeriodicGrid::new(1, 1.0, 7).is_err());
        assert!(PeriodicGrid::new(1, 1.0, 6).is_err());
        assert!(PeriodicGrid::new(1, -1.0, 8).is_err());
        assert!(PeriodicGrid::new(0, 1.0, 8).is_err());
        assert!(PeriodicGrid::new(4, 1.0, 512).is_err());
    }
}
