//! Muckenhoupt weight diagnostics: A_q constants, reverse Hölder constants,
//! critical weight index, doubling exponents and the B_{r'} ratio.
//!
//! Discrete balls are grid-point sets `{y : |y - x| < r}` in the
//! minimum-image metric and averages are arithmetic means over those points,
//! so the constant weight has A_q constant exactly 1. The supremum over all
//! balls of `R^n` is approximated by a finite [`BallFamily`]; the critical
//! index uses stability under one refinement level as the proxy for
//! "uniformly bounded as balls shrink", and is an estimate, not a certified
//! value.

use crate::error::{MhError, Result};
use crate::exec;
use crate::expr::Expr;
use crate::field::{build_field_offset, PeriodicGrid, ScalarField};
use serde::{Deserialize, Serialize};

/// Nonnegative real field with weight diagnostics.
#[derive(Debug, Clone)]
pub struct WeightField {
    field: ScalarField,
    positivity_floor: f64,
}

impl WeightField {
    pub fn new(field: ScalarField) -> Result<Self> {
        if !field.is_real() {
            return Err(MhError::Parameter("weight field must be real".into()));
        }
        let mut floor = f64::INFINITY;
        let mut all_zero = true;
        for v in field.values() {
            if v.re < 0.0 {
                return Err(MhError::Parameter("weight field must be nonnegative".into()));
            }
            if v.re > 0.0 {
                all_zero = false;
            }
            floor = floor.min(v.re);
        }
        if all_zero {
            return Err(MhError::Parameter("weight field must not vanish identically".into()));
        }
        Ok(Self { field, positivity_floor: floor })
    }

    /// Samples a weight expression, optionally shifted by half a cell so
    /// singular weights like `|x|^a` are never evaluated at the origin.
    pub fn from_expr(grid: &PeriodicGrid, expr: &Expr, half_cell_offset: bool) -> Result<Self> {
        let offset = if half_cell_offset { 0.5 } else { 0.0 };
        Self::new(build_field_offset(grid, expr, offset)?)
    }

    pub fn from_samples(grid: PeriodicGrid, samples: Vec<f64>) -> Result<Self> {
        Self::new(ScalarField::from_real_values(grid, samples)?)
    }

    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    pub fn grid(&self) -> &PeriodicGrid {
        self.field.grid()
    }

    pub fn positivity_floor(&self) -> f64 {
        self.positivity_floor
    }

    fn samples(&self) -> Vec<f64> {
        self.field.real_values()
    }
}

/// Centers and dyadic radii defining the finite ball family.
#[derive(Debug, Clone)]
pub struct BallFamily {
    centers: Vec<usize>,
    radii: Vec<f64>,
}

impl BallFamily {
    /// Radii `{2^-j L : j = 0..=j_max}` clipped to `r >= 2h`.
    pub fn dyadic(grid: &PeriodicGrid, centers: Vec<usize>, j_max: usize) -> Result<Self> {
        let l = grid.half_width();
        let h = grid.spacing();
        let radii: Vec<f64> =
            (0..=j_max).map(|j| l / (1u64 << j) as f64).filter(|&r| r >= 2.0 * h).collect();
        Self::with_radii(grid, centers, radii)
    }

    pub fn dyadic_all_centers(grid: &PeriodicGrid, j_max: usize) -> Result<Self> {
        Self::dyadic(grid, (0..grid.len()).collect(), j_max)
    }

    /// Every `stride`-th node on each axis.
    pub fn dyadic_strided(grid: &PeriodicGrid, j_max: usize, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(MhError::Parameter("stride must be positive".into()));
        }
        let n = grid.points_per_axis();
        let centers = (0..grid.len())
            .filter(|&idx| {
                let mut rem = idx;
                for _ in 0..grid.dim() {
                    if rem % n % stride != 0 {
                        return false;
                    }
                    rem /= n;
                }
                true
            })
            .collect();
        Self::dyadic(grid, centers, j_max)
    }

    pub fn with_radii(grid: &PeriodicGrid, centers: Vec<usize>, radii: Vec<f64>) -> Result<Self> {
        if centers.is_empty() || radii.is_empty() {
            return Err(MhError::Parameter("ball family must be nonempty".into()));
        }
        let h = grid.spacing();
        if radii.iter().any(|&r| r < 2.0 * h) {
            return Err(MhError::Parameter("every radius must be >= 2h".into()));
        }
        if centers.iter().any(|&c| c >= grid.len()) {
            return Err(MhError::Parameter("center index out of range".into()));
        }
        let mut radii = radii;
        radii.sort_by(|a, b| b.partial_cmp(a).unwrap());
        Ok(Self { centers, radii })
    }

    /// Adds one finer dyadic level (half the smallest radius).
    pub fn refined(&self, grid: &PeriodicGrid) -> Result<Self> {
        let smallest = *self.radii.last().unwrap();
        let next = smallest / 2.0;
        if next < 2.0 * grid.spacing() {
            return Err(MhError::Parameter(
                "cannot refine: next radius would drop below 2h".into(),
            ));
        }
        let mut radii = self.radii.clone();
        radii.push(next);
        Ok(Self { centers: self.centers.clone(), radii })
    }

    pub fn centers(&self) -> &[usize] {
        &self.centers
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }
}

/// Lattice offsets with `|d| h < r`, one entry per ball point.
pub(crate) fn ball_offsets(grid: &PeriodicGrid, r: f64) -> Vec<[isize; 9]> {
    let h = grid.spacing();
    let dim = grid.dim();
    let k = (r / h).ceil() as isize;
    let mut out = Vec::new();
    let mut d = [0isize; 9];
    fn rec(
        a: usize,
        dim: usize,
        k: isize,
        h: f64,
        r: f64,
        d: &mut [isize; 9],
        out: &mut Vec<[isize; 9]>,
    ) {
        if a == dim {
            let n2: f64 = d[..dim].iter().map(|&v| (v as f64 * h).powi(2)).sum();
            if n2.sqrt() < r {
                out.push(*d);
            }
            return;
        }
        for v in -k..=k {
            d[a] = v;
            rec(a + 1, dim, k, h, r, d, out);
        }
    }
    rec(0, dim, k, h, r, &mut d, &mut out);
    out
}

/// Per-ball statistics handed to the reducers: arithmetic means of the two
/// sample arrays and the minimum of the first over the ball.
struct BallStats {
    avg_w: f64,
    avg_aux: f64,
    min_w: f64,
}

/// Supremum over the family of `stat` applied to each ball.
fn sup_over_balls(
    grid: &PeriodicGrid,
    balls: &BallFamily,
    w: &[f64],
    aux: &[f64],
    stat: impl Fn(&BallStats) -> f64 + Sync + Send,
) -> f64 {
    let offsets: Vec<Vec<[isize; 9]>> =
        balls.radii.iter().map(|&r| ball_offsets(grid, r)).collect();
    let dim = grid.dim();
    let n = grid.points_per_axis();
    exec::par_max(balls.centers.len(), |ci| {
        let c = balls.centers[ci];
        let mut cm = [0isize; 9];
        {
            let mut rem = c;
            for a in (0..dim).rev() {
                cm[a] = (rem % n) as isize;
                rem /= n;
            }
        }
        let mut best = f64::NEG_INFINITY;
        let mut m = [0isize; 9];
        for offs in &offsets {
            let mut sum_w = 0.0;
            let mut sum_aux = 0.0;
            let mut min_w = f64::INFINITY;
            for d in offs {
                for a in 0..dim {
                    m[a] = cm[a] + d[a];
                }
                let idx = grid.flat_index(&m[..dim]);
                let wv = w[idx];
                sum_w += wv;
                sum_aux += aux[idx];
                min_w = min_w.min(wv);
            }
            let cnt = offs.len() as f64;
            let s = stat(&BallStats { avg_w: sum_w / cnt, avg_aux: sum_aux / cnt, min_w });
            best = best.max(s);
        }
        best
    })
}

/// Estimated `[w]_{A_q}` over the ball family.
///
/// For `q > 1` this is `sup_B (avg_B w)(avg_B w^{1-q'})^{q-1}` with
/// `q' = q/(q-1)`; for `q = 1` it is `sup_B (avg_B w) max_B w^{-1}`, which is
/// `+inf` when a ball contains a zero sample.
pub fn a_q_constant(w: &WeightField, q: f64, balls: &BallFamily) -> Result<f64> {
    if q < 1.0 {
        return Err(MhError::Parameter(format!("A_q needs q >= 1, got {q}")));
    }
    let samples = w.samples();
    if (q - 1.0).abs() < 1e-12 {
        let aux = vec![0.0; samples.len()];
        let sup = sup_over_balls(w.grid(), balls, &samples, &aux, |s| {
            if s.min_w == 0.0 {
                f64::INFINITY
            } else {
                s.avg_w / s.min_w
            }
        });
        return Ok(sup);
    }
    let exponent = 1.0 - q / (q - 1.0); // 1 - q'
    let aux: Vec<f64> = samples.iter().map(|&v| v.powf(exponent)).collect();
    let sup = sup_over_balls(w.grid(), balls, &samples, &aux, |s| {
        s.avg_w * s.avg_aux.powf(q - 1.0)
    });
    Ok(sup)
}

/// `sup_B (avg_B w^r)^{1/r} / (avg_B w)` for `r > 1`.
pub fn reverse_holder_constant(w: &WeightField, r: f64, balls: &BallFamily) -> Result<f64> {
    if r <= 1.0 {
        return Err(MhError::Parameter(format!("reverse Hölder needs r > 1, got {r}")));
    }
    let samples = w.samples();
    let aux: Vec<f64> = samples.iter().map(|&v| v.powf(r)).collect();
    Ok(sup_over_balls(w.grid(), balls, &samples, &aux, |s| {
        s.avg_aux.powf(1.0 / r) / s.avg_w
    }))
}

/// A_q sup restricted to each radius level, largest radius first.
pub fn a_q_per_radius(w: &WeightField, q: f64, balls: &BallFamily) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(balls.radii.len());
    for &r in &balls.radii {
        let single = BallFamily { centers: balls.centers.clone(), radii: vec![r] };
        out.push((r, a_q_constant(w, q, &single)?));
    }
    Ok(out)
}

/// Successive-difference contraction cut for the refinement oracle. A
/// convergent sequence `s(h) = I - c h^beta` has difference ratio
/// `(s(h) - s(2h)) / (s(2h) - s(4h)) = 2^{-beta} < 1`, while a divergent
/// power or log sequence keeps the ratio at or above 1. The cut sits below 1
/// with enough room to accept exponents one q-grid step past critical
/// (`beta ~ 0.09` gives ratio `2^{-0.09} ~ 0.94`).
const REFINEMENT_RATIO_CUT: f64 = 0.97;
/// Relative difference below which a level sequence counts as converged
/// outright. Ball membership `|d| h < r` picks up different boundary cells at
/// each resolution, which injects non-contracting wiggle of a few parts per
/// thousand; a genuine divergence moves the averages by several percent per
/// level, so one percent separates the two cleanly.
const REFINEMENT_CONVERGED_REL: f64 = 1e-2;

/// Halves the resolution by averaging 2^dim adjacent samples per coarse cell.
fn block_average(samples: &[f64], grid: &PeriodicGrid) -> Result<(Vec<f64>, PeriodicGrid)> {
    let dim = grid.dim();
    let n = grid.points_per_axis();
    let coarse = PeriodicGrid::new(dim, grid.half_width(), n / 2)?;
    let m = coarse.points_per_axis();
    let mut out = vec![0.0; coarse.len()];
    let corners = 1usize << dim;
    let mut fine = [0isize; 9];
    for (ci, slot) in out.iter_mut().enumerate() {
        let mut coords = [0usize; 9];
        let mut rem = ci;
        for a in (0..dim).rev() {
            coords[a] = rem % m;
            rem /= m;
        }
        let mut sum = 0.0;
        for corner in 0..corners {
            for a in 0..dim {
                fine[a] = (2 * coords[a] + ((corner >> a) & 1)) as isize;
            }
            sum += samples[grid.flat_index(&fine[..dim])];
        }
        *slot = sum / corners as f64;
    }
    Ok((out, coarse))
}

/// Whether a three-level refinement sequence (finest first) looks bounded.
fn refinement_converges(seq: [f64; 3]) -> bool {
    if seq.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let scale = seq[0].abs().max(f64::MIN_POSITIVE);
    let d01 = seq[0] - seq[1];
    let d12 = seq[1] - seq[2];
    if d01.abs() <= REFINEMENT_CONVERGED_REL * scale {
        return true;
    }
    if d01 * d12 <= 0.0 {
        return false;
    }
    d01 / d12 <= REFINEMENT_RATIO_CUT
}

/// Smallest q in `q_grid` whose A_q constant stays below `threshold` and
/// looks bounded under refinement. `None` means "above grid".
///
/// On a fixed grid the spacing h regularizes every continuum divergence, so a
/// failing A_q shows up not as an infinity but as growth under refinement:
/// for `|x|^a` and q below critical, the dual average `avg_B w^{1-q'}` scales
/// like `h^{n + a(1-q')}` with a negative exponent. The oracle evaluates the
/// A_q sup at three resolutions (the given samples and two block-averaged
/// coarsenings, which double the effective regularization length each step)
/// and accepts q only when the sequence contracts geometrically. Requires
/// `points_per_axis` divisible by 8 (two even coarsenings) and at least one
/// radius of 32h or more; centers are snapped to the coarsest sub-lattice.
pub fn critical_weight_index(
    w: &WeightField,
    q_grid: &[f64],
    threshold: f64,
    balls: &BallFamily,
) -> Result<Option<f64>> {
    if q_grid.is_empty() {
        return Err(MhError::Parameter("empty q grid".into()));
    }
    let g0 = w.grid();
    let n0 = g0.points_per_axis();
    let dim = g0.dim();
    if n0 % 8 != 0 || n0 < 32 {
        return Err(MhError::Parameter(format!(
            "critical index needs points_per_axis divisible by 8 and >= 32, got {n0}"
        )));
    }
    let h0 = g0.spacing();
    // Two coarsenings divide r/h by 4; below 32h the coarsest ball holds
    // fewer than eight points per axis and its difference ratios are noise.
    let radii: Vec<f64> = balls.radii().iter().copied().filter(|&r| r >= 32.0 * h0).collect();
    if radii.is_empty() {
        return Err(MhError::Parameter(
            "critical index needs at least one ball radius >= 32h".into(),
        ));
    }
    let s0 = w.samples();
    let (s1, g1) = block_average(&s0, g0)?;
    let (s2, g2) = block_average(&s1, &g1)?;

    // Centers snapped to the coarsest sub-lattice so every level shares them.
    let mut centers: Vec<Vec<usize>> = balls
        .centers()
        .iter()
        .map(|&c| {
            let mut coords = vec![0usize; dim];
            let mut rem = c;
            for a in (0..dim).rev() {
                coords[a] = (rem % n0) & !3;
                rem /= n0;
            }
            coords
        })
        .collect();
    centers.sort_unstable();
    centers.dedup();
    let level_family = |grids: &PeriodicGrid, shift: usize| -> Result<BallFamily> {
        let flat: Vec<usize> = centers
            .iter()
            .map(|coords| {
                let signed: Vec<isize> =
                    coords.iter().map(|&c| (c >> shift) as isize).collect();
                grids.flat_index(&signed)
            })
            .collect();
        BallFamily::with_radii(grids, flat, radii.clone())
    };
    let fam0 = level_family(g0, 0)?;
    let fam1 = level_family(&g1, 1)?;
    let fam2 = level_family(&g2, 2)?;
    let w1 = WeightField::from_samples(g1.clone(), s1)?;
    let w2 = WeightField::from_samples(g2.clone(), s2)?;

    for &q in q_grid {
        let seq = [
            a_q_constant(w, q, &fam0)?,
            a_q_constant(&w1, q, &fam1)?,
            a_q_constant(&w2, q, &fam2)?,
        ];
        if !seq[0].is_finite() || seq[0] > threshold {
            continue;
        }
        if refinement_converges(seq) {
            return Ok(Some(q));
        }
    }
    Ok(None)
}

/// Fits the doubling exponents of the weight measure over nested
/// (same-center, adjacent-radius) ball pairs: `p_fit` is the largest observed
/// mass-growth exponent, `delta_fit` the smallest.
pub fn doubling_check(w: &WeightField, balls: &BallFamily) -> Result<(f64, f64)> {
    if balls.radii.len() < 3 {
        return Err(MhError::Parameter("doubling check needs >= 3 nested scales".into()));
    }
    let grid = w.grid();
    let samples = w.samples();
    let dim = grid.dim();
    let n = grid.points_per_axis();
    let offsets: Vec<Vec<[isize; 9]>> =
        balls.radii.iter().map(|&r| ball_offsets(grid, r)).collect();
    let exps: Vec<(f64, f64)> = exec::par_collect(balls.centers.len(), |ci| {
        let c = balls.centers[ci];
        let mut cm = [0isize; 9];
        let mut rem = c;
        for a in (0..dim).rev() {
            cm[a] = (rem % n) as isize;
            rem /= n;
        }
        let mut m = [0isize; 9];
        // Mass and point count per radius (radii sorted descending).
        let masses: Vec<(f64, f64)> = offsets
            .iter()
            .map(|offs| {
                let mut sum = 0.0;
                for d in offs {
                    for a in 0..dim {
                        m[a] = cm[a] + d[a];
                    }
                    sum += samples[grid.flat_index(&m[..dim])];
                }
                (sum, offs.len() as f64)
            })
            .collect();
        let mut p_max = f64::NEG_INFINITY;
        let mut d_min = f64::INFINITY;
        for pair in masses.windows(2) {
            let (big_mass, big_vol) = pair[0];
            let (small_mass, small_vol) = pair[1];
            if small_mass <= 0.0 || big_mass <= 0.0 {
                continue;
            }
            let e = (big_mass / small_mass).ln() / (big_vol / small_vol).ln();
            p_max = p_max.max(e);
            d_min = d_min.min(e);
        }
        (p_max, d_min)
    });
    let p_fit = exps.iter().map(|e| e.0).fold(f64::NEG_INFINITY, f64::max);
    let delta_fit = exps.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
    if !p_fit.is_finite() || !delta_fit.is_finite() {
        return Err(MhError::Parameter("degenerate ball family for doubling fit".into()));
    }
    Ok((p_fit, delta_fit))
}

/// The B_{r'} ratio: full-space decaying-kernel mass of w around `center`
/// against the local ball mass, both by grid quadrature.
pub fn b_r_condition_ratio(
    w: &WeightField,
    r_prime: f64,
    center: usize,
    t: f64,
) -> Result<f64> {
    if r_prime <= 1.0 {
        return Err(MhError::Parameter("B_{r'} needs r' > 1".into()));
    }
    let grid = w.grid();
    if t < 2.0 * grid.spacing() {
        return Err(MhError::Parameter("radius t must be >= 2h".into()));
    }
    let samples = w.samples();
    let nrp = grid.dim() as f64 * r_prime;
    let hv = grid.cell_volume();
    let numer = exec::par_sum(samples.len(), |i| {
        let d = grid.node_distance(center, i);
        samples[i] / (t + d).powf(nrp)
    }) * hv;
    let local = exec::par_sum(samples.len(), |i| {
        if grid.node_distance(center, i) < t {
            samples[i]
        } else {
            0.0
        }
    }) * hv;
    if local <= 0.0 {
        return Err(MhError::Parameter("weight vanishes on the local ball".into()));
    }
    Ok(numer / (t.powf(-nrp) * local))
}

/// Diagnostics document emitted by `mh weights diag`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightDiagnostics {
    pub a_q_constant: Vec<(f64, f64)>,
    pub rh_constant: Vec<(f64, f64)>,
    pub critical_index: Option<f64>,
    pub doubling_exponents: (f64, f64),
    pub infinite_a1: bool,
}

pub fn diagnose(
    w: &WeightField,
    q_grid: &[f64],
    rh_grid: &[f64],
    threshold: f64,
    balls: &BallFamily,
) -> Result<WeightDiagnostics> {
    let mut a_q = Vec::new();
    for &q in q_grid {
        a_q.push((q, a_q_constant(w, q, balls)?));
    }
    let mut rh = Vec::new();
    for &r in rh_grid {
        rh.push((r, reverse_holder_constant(w, r, balls)?));
    }
    let critical = critical_weight_index(w, q_grid, threshold, balls)?;
    let doubling = doubling_check(w, balls)?;
    let infinite_a1 = a_q.iter().any(|&(q, c)| (q - 1.0).abs() < 1e-12 && c.is_infinite());
    Ok(WeightDiagnostics {
        a_q_constant: a_q,
        rh_constant: rh,
        critical_index: critical,
        doubling_exponents: doubling,
        infinite_a1,
    })
}
