//! Musielak-Orlicz growth functions: evaluation, type-exponent estimation,
//! critical weight exponent, regularization, power rescaling, modular and
//! Luxembourg-Nakano quasi-norm.
//!
//! Type indices are infima/suprema over all admissible exponents in the
//! continuum; here they are estimated on finite sample lattices with a capped
//! comparison constant, so every index is an estimate with a fitted constant
//! attached, not a certified value.

use crate::error::{MhError, Result};
use crate::exec;
use crate::expr::Expr;
use crate::field::{PeriodicGrid, ScalarField};
use crate::weights::{self, BallFamily, WeightField};
use serde::{Deserialize, Serialize};

/// A Musielak-Orlicz function φ(x, t).
///
/// The log-perturbed family is `t^α / ([ln(e+|x|)]^β + [ln(e+t)]^γ)` with the
/// convention that a zero exponent removes its term entirely (an absent
/// perturbation is no perturbation); when both β and γ are zero the
/// denominator is the constant 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum MusielakFunction {
    Separable { weight: Expr, orlicz: Expr },
    LogPerturbed { alpha: f64, beta: f64, gamma: f64 },
    Custom { expr: Expr },
    Regularized { inner: Box<MusielakFunction> },
    Rescaled { inner: Box<MusielakFunction>, q: f64 },
}

impl MusielakFunction {
    pub fn separable(weight: Expr, orlicz: Expr) -> Result<Self> {
        if weight.uses_t() {
            return Err(MhError::Parameter(
                "separable weight factor must not depend on t".into(),
            ));
        }
        orlicz.check_vars(0, true)?;
        Ok(Self::Separable { weight, orlicz })
    }

    pub fn log_perturbed(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        if alpha <= 0.0 {
            return Err(MhError::Parameter("log_perturbed needs alpha > 0".into()));
        }
        if beta < 0.0 || gamma < 0.0 {
            return Err(MhError::Parameter("log exponents must be nonnegative".into()));
        }
        Ok(Self::LogPerturbed { alpha, beta, gamma })
    }

    pub fn custom(expr: Expr) -> Self {
        Self::Custom { expr }
    }

    /// φ(x, t); errors on negative t.
    pub fn evaluate(&self, x: &[f64], t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(MhError::Parameter(format!("t must be nonnegative, got {t}")));
        }
        Ok(self.eval_unchecked(x, t))
    }

    fn eval_unchecked(&self, x: &[f64], t: f64) -> f64 {
        match self {
            Self::Separable { weight, orlicz } => weight.eval(x, 0.0) * orlicz.eval(&[], t),
            Self::LogPerturbed { alpha, beta, gamma } => {
                let norm_x = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                let mut denom = 0.0;
                if *beta > 0.0 {
                    denom += (std::f64::consts::E + norm_x).ln().powf(*beta);
                }
                if *gamma > 0.0 {
                    denom += (std::f64::consts::E + t).ln().powf(*gamma);
                }
                if denom == 0.0 {
                    denom = 1.0;
                }
                t.powf(*alpha) / denom
            }
            Self::Custom { expr } => expr.eval(x, t),
            Self::Regularized { inner } => inner.regularized_value(x, t),
            Self::Rescaled { inner, q } => inner.eval_unchecked(x, t.powf(1.0 / q)),
        }
    }

    /// φ̃(x,t) = ∫_0^t φ(x,s)/s ds via s = t e^{-u}: ∫_0^∞ φ(x, t e^{-u}) du,
    /// composite Simpson on a truncated u-range.
    fn regularized_value(&self, x: &[f64], t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        let u_max = 60.0;
        let steps = 1200usize; // even
        let h = u_max / steps as f64;
        let mut total = 0.0;
        let mut tail = 0.0;
        for k in 0..=steps {
            let u = k as f64 * h;
            let v = self.eval_unchecked(x, t * (-u).exp());
            let w = if k == 0 || k == steps {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            total += w * v;
            if u >= u_max - 5.0 {
                tail += w * v;
            }
        }
        total *= h / 3.0;
        tail *= h / 3.0;
        // A non-decaying integrand means φ(x,s)/s is not integrable near 0.
        if !(total.is_finite()) || (total > 0.0 && tail > 1e-3 * total) {
            return f64::NAN;
        }
        total
    }

    /// φ̃ with the same type indices as φ.
    pub fn regularize(self) -> Self {
        Self::Regularized { inner: Box::new(self) }
    }

    /// φ_q(x,t) = φ(x, t^{1/q}).
    pub fn power_rescale(self, q: f64) -> Result<Self> {
        if q <= 0.0 {
            return Err(MhError::Parameter(format!("rescale power must be positive, got {q}")));
        }
        Ok(Self::Rescaled { inner: Box::new(self), q })
    }
}

/// Estimated type and critical indices.
///
/// `q_phi` defaults to 1 (and `m_phi` to the matching order) until
/// [`critical_weight_exponent`] refines it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalIndices {
    pub i_phi: f64,
    #[serde(rename = "I_phi")]
    pub upper_i_phi: f64,
    pub fitted_c_lower: f64,
    pub fitted_c_upper: f64,
    pub q_phi: f64,
    pub m_phi: u32,
}

/// Sample lattice and fit parameters for type-index estimation.
#[derive(Debug, Clone)]
pub struct SampleSpec {
    pub x_samples: usize,
    /// t-levels as quarter-exponents of 2 (t = 2^{m/4}).
    pub t_quarter_exponents: Vec<i32>,
    /// |ln s| range as quarter-exponents; s runs over 2^{-m/4} (lower type)
    /// and 2^{m/4} (upper type) for m = 1..=this.
    pub s_quarter_exponent_max: i32,
    pub p_step: f64,
    pub p_max: f64,
    pub c_max: f64,
}

impl Default for SampleSpec {
    fn default() -> Self {
        Self {
            x_samples: 64,
            t_quarter_exponents: (-16..=16).map(|j| 2 * j).collect(), // 2^-8 .. 2^8
            s_quarter_exponent_max: 40,                               // down to 2^-10
            p_step: 0.01,
            p_max: 6.0,
            c_max: 1.1,
        }
    }
}

/// Log-values of φ on the quarter-exponent lattice, per x-sample.
struct PhiTable {
    /// ln φ(x_i, 2^{m/4}), index [i][m - m_lo].
    log_phi: Vec<Vec<f64>>,
    m_lo: i32,
}

impl PhiTable {
    fn get(&self, xi: usize, m: i32) -> f64 {
        self.log_phi[xi][(m - self.m_lo) as usize]
    }
}

fn build_phi_table(
    phi: &MusielakFunction,
    grid: &PeriodicGrid,
    spec: &SampleSpec,
) -> Result<PhiTable> {
    let t_lo = *spec.t_quarter_exponents.iter().min().unwrap();
    let t_hi = *spec.t_quarter_exponents.iter().max().unwrap();
    let m_lo = t_lo - spec.s_quarter_exponent_max;
    let m_hi = t_hi + spec.s_quarter_exponent_max;
    let stride = (grid.len() / spec.x_samples).max(1);
    let h = grid.spacing();
    let mut log_phi = Vec::new();
    for idx in (0..grid.len()).step_by(stride) {
        // Half-cell offset keeps |x|-singular weights off the origin node.
        let x: Vec<f64> = grid.coords_vec(idx).iter().map(|c| c + 0.5 * h).collect();
        let mut row = Vec::with_capacity((m_hi - m_lo + 1) as usize);
        let mut prev = 0.0_f64;
        for m in m_lo..=m_hi {
            let t = 2.0_f64.powf(m as f64 / 4.0);
            let v = phi.evaluate(&x, t)?;
            if !v.is_finite() || v <= 0.0 {
                return Err(MhError::InvalidFunction(format!(
                    "phi must be positive and finite for t > 0; got {v} at t = {t}"
                )));
            }
            if m > m_lo && v < prev * (1.0 - 1e-12) {
                return Err(MhError::InvalidFunction(format!(
                    "phi must be nondecreasing in t; decrease found near t = {t}"
                )));
            }
            prev = v;
            row.push(v.ln());
        }
        log_phi.push(row);
    }
    Ok(PhiTable { log_phi, m_lo })
}

/// Fitted constant for candidate exponent p:
/// `sup φ(x, s t) / (s^p φ(x, t))` over the lattice, with s = 2^{sign·k/4}.
fn fitted_constant(table: &PhiTable, spec: &SampleSpec, p: f64, lower: bool) -> f64 {
    let ln2_4 = std::f64::consts::LN_2 / 4.0;
    let nx = table.log_phi.len();
    exec::par_max(nx, |xi| {
        let mut worst = f64::NEG_INFINITY;
        for &mt in &spec.t_quarter_exponents {
            for k in 1..=spec.s_quarter_exponent_max {
                let dk = if lower { -k } else { k };
                let ln_s = dk as f64 * ln2_4;
                let v = table.get(xi, mt + dk) - table.get(xi, mt) - p * ln_s;
                worst = worst.max(v);
            }
        }
        worst
    })
    .exp()
}

/// Estimates the lower and upper type exponents of φ.
///
/// `i_phi` is the largest p on the p-grid with
/// `φ(x, st) ≤ C s^p φ(x, t)` for all sampled s ≤ 1 and some `C ≤ c_max`;
/// `upper_i_phi` is the smallest such p for s ≥ 1. With the default lattice
/// the cap `c_max = 1.1` resolves a pure power `t^p` to within 0.014.
pub fn estimate_type_indices(
    phi: &MusielakFunction,
    grid: &PeriodicGrid,
    spec: &SampleSpec,
) -> Result<CriticalIndices> {
    let table = build_phi_table(phi, grid, spec)?;
    let cap = spec.c_max;
    let steps = (spec.p_max / spec.p_step).round() as usize;
    let p_at = |k: usize| (k + 1) as f64 * spec.p_step;

    // fitted_constant is monotone increasing in p for the lower family and
    // decreasing for the upper, so binary-search both predicates.
    let accept_lower = |p: f64| fitted_constant(&table, spec, p, true) <= cap;
    let accept_upper = |p: f64| fitted_constant(&table, spec, p, false) <= cap;

    if !accept_lower(p_at(0)) {
        return Err(MhError::InvalidFunction(
            "no positive lower type fits the sample lattice".into(),
        ));
    }
    if !accept_upper(p_at(steps - 1)) {
        return Err(MhError::InvalidFunction(
            "no finite upper type fits the sample lattice".into(),
        ));
    }

    // Largest k accepted by the lower predicate.
    let (mut lo, mut hi) = (0usize, steps - 1);
    while lo < hi {
        let mid = (lo + hi + 1) / 2;
        if accept_lower(p_at(mid)) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    let mut i_phi = p_at(lo);
    // Smallest k accepted by the upper predicate.
    let (mut lo2, mut hi2) = (0usize, steps - 1);
    while lo2 < hi2 {
        let mid = (lo2 + hi2) / 2;
        if accept_upper(p_at(mid)) {
            hi2 = mid;
        } else {
            lo2 = mid + 1;
        }
    }
    let mut upper = p_at(lo2);

    // Estimation error can invert the pair by up to one cap-width; the true
    // indices satisfy i ≤ I, so reconcile to the midpoint.
    if i_phi > upper {
        let mid = 0.5 * (i_phi + upper);
        i_phi = mid;
        upper = mid;
    }
    let c_lower = fitted_constant(&table, spec, i_phi, true);
    let c_upper = fitted_constant(&table, spec, upper, false);
    Ok(CriticalIndices {
        i_phi,
        upper_i_phi: upper,
        fitted_c_lower: c_lower,
        fitted_c_upper: c_upper,
        q_phi: 1.0,
        m_phi: critical_order(i_phi, 1.0, grid.dim()),
    })
}

/// Smallest q in `q_grid` such that every slice weight φ(·, t), t in
/// `t_grid`, has a uniformly bounded A_q constant over the ball family.
/// `None` means "above grid".
pub fn critical_weight_exponent(
    phi: &MusielakFunction,
    grid: &PeriodicGrid,
    t_grid: &[f64],
    q_grid: &[f64],
    threshold: f64,
    balls: &BallFamily,
) -> Result<Option<f64>> {
    if t_grid.is_empty() || q_grid.is_empty() {
        return Err(MhError::Parameter("empty t or q grid".into()));
    }
    let h = grid.spacing();
    let mut slices = Vec::new();
    for &t in t_grid {
        let mut samples = Vec::with_capacity(grid.len());
        for idx in 0..grid.len() {
            let x: Vec<f64> = grid.coords_vec(idx).iter().map(|c| c + 0.5 * h).collect();
            samples.push(phi.evaluate(&x, t)?);
        }
        slices.push(WeightField::from_samples(grid.clone(), samples)?);
    }
    for &q in q_grid {
        let ok = slices
            .iter()
            .map(|w| weights::critical_weight_index(w, &[q], threshold, balls))
            .collect::<Result<Vec<_>>>()?
            .iter()
            .all(|r| r.is_some());
        if ok {
            return Ok(Some(q));
        }
    }
    Ok(None)
}

/// ⌊n(q/i − 1)⌋, floored at 0.
pub fn critical_order(i_phi: f64, q_phi: f64, n: usize) -> u32 {
    let v = (n as f64 * (q_phi / i_phi - 1.0)).floor();
    if v <= 0.0 {
        0
    } else {
        v as u32
    }
}

/// Grid quadrature of ∫ φ(x, |f(x)|) dx.
pub fn modular(phi: &MusielakFunction, f: &ScalarField) -> Result<f64> {
    let grid = f.grid();
    let values = f.values();
    let sum = exec::par_sum(grid.len(), |i| {
        phi.eval_unchecked(&grid.coords_vec(i), values[i].norm())
    });
    let out = sum * grid.cell_volume();
    if !out.is_finite() {
        return Err(MhError::Domain("modular quadrature is not finite".into()));
    }
    Ok(out)
}

/// Luxembourg-Nakano quasi-norm: inf{λ > 0 : modular(φ, f/λ) ≤ 1}, by
/// bracket expansion plus bisection in log λ. At return the modular sits in
/// `[1 - tol, 1]` (0 for f ≡ 0).
pub fn luxembourg_norm(phi: &MusielakFunction, f: &ScalarField, tol: f64) -> Result<f64> {
    if tol <= 0.0 {
        return Err(MhError::Parameter("tolerance must be positive".into()));
    }
    let scale = f.max_abs();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let modular_at = |lambda: f64| -> Result<f64> {
        let scaled = f.map(|v| v / lambda);
        modular(phi, &scaled)
    };
    let mut lo = 1e-8 * scale;
    let mut hi = 1e8 * scale;
    for _ in 0..5 {
        if modular_at(hi)? <= 1.0 {
            break;
        }
        hi *= 10.0;
    }
    if modular_at(hi)? > 1.0 {
        return Err(MhError::Convergence {
            iterations: 5,
            message: "could not bracket the Luxembourg norm from above".into(),
        });
    }
    for _ in 0..5 {
        if modular_at(lo)? > 1.0 {
            break;
        }
        lo /= 10.0;
    }
    if modular_at(lo)? <= 1.0 {
        // The norm is below the smallest bracket; report the bracket edge.
        return Ok(lo);
    }
    for iterations in 0..200 {
        let mid = (lo * hi).sqrt();
        let m = modular_at(mid)?;
        if m > 1.0 {
            lo = mid;
        } else if m >= 1.0 - tol {
            return Ok(mid);
        } else {
            hi = mid;
        }
        let _ = iterations;
    }
    Err(MhError::Convergence {
        iterations: 200,
        message: "Luxembourg bisection did not land in [1 - tol, 1]".into(),
    })
}
