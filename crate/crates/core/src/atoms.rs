//! Construction and validation of atoms: compactly supported bumps with
//! vanishing moments and a Musielak-Orlicz size bound, used as canonical
//! seeds for the characterization experiments.
//!
//! The profile space is a fixed `C^infinity` bump times polynomials of
//! degree `s + 2` in ball-scaled coordinates; the moment conditions carve
//! out a nullspace that is guaranteed nonempty with that degree margin.

use crate::error::{MhError, Result};
use crate::exec;
use crate::field::{PeriodicGrid, ScalarField};
use crate::maximal::multi_indices;
use crate::musielak::{luxembourg_norm, MusielakFunction};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Number of points in the default log t-grid of the size functional.
const T_GRID_POINTS: usize = 64;
const T_GRID_LO: f64 = 1e-4;
const T_GRID_HI: f64 = 1e4;

/// Ball, size exponent and moment order of an atom.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtomSpec {
    pub center: Vec<f64>,
    pub radius: f64,
    /// Size exponent in `[1, inf]`; `f64::INFINITY` selects the sup bound.
    pub q: f64,
    /// All moments of order `<= s` vanish.
    pub s: usize,
}

impl AtomSpec {
    fn validate(&self, grid: &PeriodicGrid) -> Result<()> {
        if self.center.len() != grid.dim() {
            return Err(MhError::Parameter(format!(
                "center has {} coordinates for dimension {}",
                self.center.len(),
                grid.dim()
            )));
        }
        if !(self.radius >= 4.0 * grid.spacing()) {
            return Err(MhError::Parameter(format!(
                "radius {} is below 4h = {}",
                self.radius,
                4.0 * grid.spacing()
            )));
        }
        if !(self.q >= 1.0) {
            return Err(MhError::Parameter(format!("size exponent {} must be >= 1", self.q)));
        }
        Ok(())
    }
}

/// Minimum-image displacement of node `idx` from the point `center`.
fn centered_offset(grid: &PeriodicGrid, idx: usize, center: &[f64], out: &mut [f64]) {
    let l = grid.half_width();
    grid.coords(idx, out);
    for (o, &c) in out.iter_mut().zip(center) {
        let mut d = *o - c;
        while d >= l {
            d -= 2.0 * l;
        }
        while d < -l {
            d += 2.0 * l;
        }
        *o = d;
    }
}

/// Node indices inside the ball.
fn ball_nodes(grid: &PeriodicGrid, center: &[f64], radius: f64) -> Vec<usize> {
    let dim = grid.dim();
    (0..grid.len())
        .filter(|&i| {
            let mut d = [0.0f64; 9];
            centered_offset(grid, i, center, &mut d[..dim]);
            d[..dim].iter().map(|v| v * v).sum::<f64>().sqrt() < radius
        })
        .collect()
}

/// The profile bump `exp(-1/(1 - r^2))` for `r < 1`, zero outside.
fn bump(r2: f64) -> f64 {
    if r2 < 1.0 {
        (-1.0 / (1.0 - r2)).exp()
    } else {
        0.0
    }
}

/// Size functional values over a log t-grid:
/// `[phi(B,t)^{-1} int_B |a|^q phi(x,t) dx]^{1/q}` per t. For `q = inf` the
/// single pair `(nan, sup_B |a|)` is returned.
pub fn atom_size_profile(
    a: &ScalarField,
    center: &[f64],
    radius: f64,
    q: f64,
    phi: &MusielakFunction,
    t_points: usize,
) -> Result<Vec<(f64, f64)>> {
    let grid = a.grid();
    let nodes = ball_nodes(grid, center, radius);
    if nodes.is_empty() {
        return Err(MhError::Parameter("ball contains no grid nodes".into()));
    }
    if !(q >= 1.0) {
        return Err(MhError::Parameter(format!("size exponent {q} must be >= 1")));
    }
    if q.is_infinite() {
        let sup = nodes.iter().map(|&i| a.values()[i].norm()).fold(0.0, f64::max);
        return Ok(vec![(f64::NAN, sup)]);
    }
    let absq: Vec<f64> = nodes.iter().map(|&i| a.values()[i].norm().powf(q)).collect();
    let coords: Vec<Vec<f64>> = nodes.iter().map(|&i| grid.coords_vec(i)).collect();
    let ratio = (T_GRID_HI / T_GRID_LO).ln();
    let profile = exec::par_collect(t_points, |k| {
        let t = T_GRID_LO * (ratio * k as f64 / (t_points - 1) as f64).exp();
        let mut mass = 0.0;
        let mut num = 0.0;
        for (x, &aq) in coords.iter().zip(&absq) {
            let p = phi.evaluate(x, t).unwrap_or(f64::NAN);
            mass += p;
            num += aq * p;
        }
        (t, (num / mass).powf(1.0 / q))
    });
    if profile.iter().any(|(_, v)| !v.is_finite()) {
        return Err(MhError::Domain("size functional is not finite on the t-grid".into()));
    }
    Ok(profile)
}

/// Sup of the size functional over the default 64-point t-grid, with the
/// height at which it is attained (NaN for `q = inf`).
pub fn atom_size_norm_with_arg(
    a: &ScalarField,
    center: &[f64],
    radius: f64,
    q: f64,
    phi: &MusielakFunction,
) -> Result<(f64, f64)> {
    let profile = atom_size_profile(a, center, radius, q, phi, T_GRID_POINTS)?;
    let (t, v) = profile
        .iter()
        .fold((f64::NAN, f64::NEG_INFINITY), |acc, &(t, v)| if v > acc.1 { (t, v) } else { acc });
    Ok((v, t))
}

/// Sup of the size functional over the default t-grid.
pub fn atom_size_norm(
    a: &ScalarField,
    center: &[f64],
    radius: f64,
    q: f64,
    phi: &MusielakFunction,
) -> Result<f64> {
    atom_size_norm_with_arg(a, center, radius, q, phi).map(|(v, _)| v)
}

/// Indicator field of the ball.
pub fn ball_indicator(grid: &PeriodicGrid, center: &[f64], radius: f64) -> Result<ScalarField> {
    let nodes = ball_nodes(grid, center, radius);
    if nodes.is_empty() {
        return Err(MhError::Parameter("ball contains no grid nodes".into()));
    }
    let mut v = vec![0.0f64; grid.len()];
    for i in nodes {
        v[i] = 1.0;
    }
    ScalarField::from_real_values(grid.clone(), v)
}

fn make_atom_with_degree(
    grid: &PeriodicGrid,
    spec: &AtomSpec,
    phi: &MusielakFunction,
    profile_degree: usize,
) -> Result<ScalarField> {
    spec.validate(grid)?;
    let dim = grid.dim();
    let nodes = ball_nodes(grid, &spec.center, spec.radius);
    if nodes.is_empty() {
        return Err(MhError::Parameter("ball contains no grid nodes".into()));
    }
    // Scaled in-ball coordinates u = (x - c)/radius.
    let scaled: Vec<Vec<f64>> = nodes
        .iter()
        .map(|&i| {
            let mut d = [0.0f64; 9];
            centered_offset(grid, i, &spec.center, &mut d[..dim]);
            d[..dim].iter().map(|v| v / spec.radius).collect()
        })
        .collect();
    let basis_pows = multi_indices(dim, profile_degree);
    let moment_pows = multi_indices(dim, spec.s);
    if basis_pows.len() <= moment_pows.len() {
        return Err(MhError::Construction(format!(
            "profile space of dimension {} cannot satisfy {} moment conditions",
            basis_pows.len(),
            moment_pows.len()
        )));
    }
    let monomial = |u: &[f64], pow: &[usize]| -> f64 {
        pow.iter().zip(u).map(|(&p, &v)| v.powi(p as i32)).product()
    };
    // Basis samples: bump times scaled monomials.
    let basis: Vec<Vec<f64>> = basis_pows
        .iter()
        .map(|pow| {
            scaled
                .iter()
                .map(|u| {
                    let r2: f64 = u.iter().map(|v| v * v).sum();
                    bump(r2) * monomial(u, pow)
                })
                .collect()
        })
        .collect();
    // Moment matrix in scaled coordinates; constant factors do not change
    // the nullspace.
    let m = DMatrix::from_fn(moment_pows.len(), basis_pows.len(), |r, c| {
        scaled
            .iter()
            .zip(&basis[c])
            .map(|(u, &b)| b * monomial(u, &moment_pows[r]))
            .sum::<f64>()
    });
    let gram = m.transpose() * &m;
    let eig = gram.symmetric_eigen();
    let (best, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0usize, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    let coeffs = eig.eigenvectors.column(best).clone_owned();
    let residual = (&m * &coeffs).amax();
    let scale = m.amax().max(1.0);
    if residual > 1e-8 * scale {
        return Err(MhError::Construction(format!(
            "moment system has no nullspace (residual {residual:e})"
        )));
    }
    let mut values = vec![0.0f64; grid.len()];
    for (k, &node) in nodes.iter().enumerate() {
        let mut v = 0.0;
        for (c, b) in coeffs.iter().zip(&basis) {
            v += c * b[k];
        }
        values[node] = v;
    }
    let raw = ScalarField::from_real_values(grid.clone(), values)?;
    if raw.max_abs() < 1e-12 {
        return Err(MhError::Construction("moment solution collapsed to zero".into()));
    }
    // Normalize so the size bound holds with factor 0.99.
    let chi = ball_indicator(grid, &spec.center, spec.radius)?;
    let chi_norm = luxembourg_norm(phi, &chi, 1e-12)?;
    let current = atom_size_norm(&raw, &spec.center, spec.radius, spec.q, phi)?;
    if !(current > 0.0) || !(chi_norm > 0.0) {
        return Err(MhError::Construction("degenerate size normalization".into()));
    }
    let target = 0.99 / chi_norm;
    let factor = target / current;
    Ok(raw.map(move |v| v * factor))
}

/// Builds an atom for the given ball, size exponent and moment order: a
/// bump-profile field supported in the ball, with all moments of order
/// `<= s` vanishing, normalized so the size bound holds with factor 0.99 of
/// the reciprocal Luxembourg norm of the ball indicator.
pub fn make_atom(
    grid: &PeriodicGrid,
    spec: &AtomSpec,
    phi: &MusielakFunction,
) -> Result<ScalarField> {
    make_atom_with_degree(grid, spec, phi, spec.s + 2)
}

/// Per-item validation outcome with measured values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtomReport {
    pub support_ok: bool,
    /// Largest sample magnitude outside the ball, relative to the max.
    pub support_leak: f64,
    pub size_ok: bool,
    pub size_value: f64,
    pub size_bound: f64,
    /// Height at which the size sup is attained (NaN for q = inf).
    pub size_arg_t: f64,
    pub moments_ok: bool,
    pub moment_max: f64,
}

impl AtomReport {
    pub fn all_ok(&self) -> bool {
        self.support_ok && self.size_ok && self.moments_ok
    }
}

/// Checks the three atom conditions: support inside the ball, the t-uniform
/// size bound against `(1 + tol)` times the reciprocal indicator norm, and
/// vanishing moments up to order s.
pub fn validate_atom(
    a: &ScalarField,
    spec: &AtomSpec,
    phi: &MusielakFunction,
    tol: f64,
) -> Result<AtomReport> {
    let grid = a.grid();
    spec.validate(grid)?;
    let dim = grid.dim();
    let inside = {
        let mut mask = vec![false; grid.len()];
        for i in ball_nodes(grid, &spec.center, spec.radius) {
            mask[i] = true;
        }
        mask
    };
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    let leak = a
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| !inside[*i])
        .map(|(_, v)| v.norm())
        .fold(0.0, f64::max)
        / scale;
    let support_ok = leak <= 1e-13;
    let chi = ball_indicator(grid, &spec.center, spec.radius)?;
    let chi_norm = luxembourg_norm(phi, &chi, 1e-12)?;
    let (size_value, size_arg_t) =
        atom_size_norm_with_arg(a, &spec.center, spec.radius, spec.q, phi)?;
    let size_bound = (1.0 + tol) / chi_norm;
    let size_ok = size_value <= size_bound;
    let mut moment_max = 0.0f64;
    let vol = grid.cell_volume();
    for pow in multi_indices(dim, spec.s) {
        let mut acc = 0.0;
        let mut d = [0.0f64; 9];
        for (i, v) in a.values().iter().enumerate() {
            if !inside[i] {
                continue;
            }
            centered_offset(grid, i, &spec.center, &mut d[..dim]);
            let mon: f64 = pow.iter().zip(&d[..dim]).map(|(&p, &x)| x.powi(p as i32)).product();
            acc += v.re * mon;
        }
        moment_max = moment_max.max((acc * vol).abs());
    }
    let moments_ok = moment_max <= tol;
    Ok(AtomReport {
        support_ok,
        support_leak: leak,
        size_ok,
        size_value,
        size_bound,
        size_arg_t,
        moments_ok,
        moment_max,
    })
}
