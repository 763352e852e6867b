//! The rotation action `(σ_a u)(x) = u(x + a)` and the geometry of its orbits.
//!
//! Because the sup norm is rotation invariant, the Hausdorff distance between
//! two group orbits collapses to `min_a ‖u − σ_a v‖`, which is what
//! [`orbit_distance`] evaluates.

use num_complex::Complex64;

use crate::forcing::{hull_distance, HullMetric, HullPoint, SignalFamily};
use crate::spectral::{CircleGrid, Field};

const GOLDEN_ITERATIONS: usize = 90;

fn grid_steps(grid: &CircleGrid, a: f64) -> Option<usize> {
    let r = a / grid.spacing();
    let m = r.round();
    if (r - m).abs() <= 1e-12 * r.abs().max(1.0) {
        Some((m as i64).rem_euclid(grid.n_points() as i64) as usize)
    } else {
        None
    }
}

fn rotate(values: &[f64], m: usize) -> Vec<f64> {
    let n = values.len();
    (0..n).map(|i| values[(i + m) % n]).collect()
}

fn phase_shift(grid: &CircleGrid, coeffs: &[Complex64], a: f64) -> Vec<Complex64> {
    let nyq = grid.nyquist();
    coeffs
        .iter()
        .enumerate()
        .map(|(idx, c)| {
            let k = grid.wavenumber(idx) as f64;
            if idx == nyq {
                c * (k * a).cos()
            } else {
                c * Complex64::from_polar(1.0, k * a)
            }
        })
        .collect()
}

/// `σ_a u`. Grid-aligned shifts rotate the samples exactly; other shifts use
/// a Fourier phase factor.
pub fn shift(u: &Field, a: f64) -> Field {
    let grid = u.grid();
    match grid_steps(grid, a) {
        Some(m) => Field::new(grid, rotate(u.values(), m)).expect("rotation preserves finiteness"),
        None => Field::from_spectrum(grid, &phase_shift(grid, &u.spectrum(), a)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitDistanceResult {
    pub distance: f64,
    /// Shift `a ∈ [0, 2π)` of the second argument realising the distance.
    pub best_shift: f64,
}

/// Exact `min_m ‖u − σ_{m h} v‖` over the `n` grid rotations, i.e. the
/// Hausdorff distance between the discrete orbits.
pub fn orbit_distance_grid(u: &Field, v: &Field) -> OrbitDistanceResult {
    let (uv, vv) = (u.values(), v.values());
    let n = uv.len();
    let mut best = (f64::INFINITY, 0usize);
    for m in 0..n {
        let mut d = 0.0f64;
        for i in 0..n {
            d = d.max((uv[i] - vv[(i + m) % n]).abs());
            if d >= best.0 {
                break;
            }
        }
        if d < best.0 {
            best = (d, m);
        }
    }
    OrbitDistanceResult {
        distance: best.0,
        best_shift: u.grid().node(best.1),
    }
}

/// Continuous extrema of a field's interpolant, cached for cheap orbit screens.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitInvariants {
    pub max: f64,
    pub min: f64,
}

impl OrbitInvariants {
    pub fn of(u: &Field) -> Self {
        let p = u.interpolant();
        let vals = u.values();
        // sup of (u − c) for c outside the range picks out max and min
        let c = u.mean();
        let shifted: Vec<f64> = vals.iter().map(|v| v - c).collect();
        let pos: Vec<f64> = shifted.iter().map(|v| v.max(0.0)).collect();
        let neg: Vec<f64> = shifted.iter().map(|v| (-v).max(0.0)).collect();
        let max = if pos.iter().any(|&v| v > 0.0) {
            refine_side(&p, &pos, 1.0)
        } else {
            u.max()
        };
        let min = if neg.iter().any(|&v| v > 0.0) {
            refine_side(&p, &neg, -1.0)
        } else {
            u.min()
        };
        Self { max, min }
    }

    /// `|max u − max v|` and `|min u − min v|` both bound the orbit distance from below.
    pub fn lower_bound(&self, other: &Self) -> f64 {
        (self.max - other.max).abs().max((self.min - other.min).abs())
    }
}

fn refine_side(p: &crate::spectral::TrigInterpolant, side: &[f64], sign: f64) -> f64 {
    let n = side.len();
    let h = std::f64::consts::TAU / n as f64;
    let top = side.iter().copied().fold(0.0, f64::max);
    let mut best = f64::NEG_INFINITY;
    for i in 0..n {
        let a = side[i];
        if a < 0.5 * top {
            continue;
        }
        let l = side[(i + n - 1) % n];
        let r = side[(i + 1) % n];
        if a >= l && a >= r {
            let (_, v) = p.refine_extremum(h * i as f64, h, sign);
            best = best.max(sign * v);
        }
    }
    sign * best
}

/// Lower bound on [`orbit_distance`] from rotation-invariant quantities.
pub fn orbit_distance_lower_bound(u: &Field, v: &Field) -> f64 {
    OrbitInvariants::of(u).lower_bound(&OrbitInvariants::of(v))
}

/// `min_a sup_x |u(x) − v(x + a)|` for the trigonometric interpolants: a scan
/// over all grid rotations, then golden-section refinement within one cell of
/// the best rotation with the sup taken over the continuous interpolant.
///
/// Candidates are measured as `sup |σ_{−a/2} u − σ_{a/2} v|`, so swapping the
/// arguments mirrors the search exactly.
pub fn orbit_distance(u: &Field, v: &Field) -> OrbitDistanceResult {
    let grid = u.grid();
    let coarse = orbit_distance_grid(u, v);
    if coarse.distance == 0.0 {
        return coarse;
    }
    let cu = u.spectrum();
    let cv = v.spectrum();
    let nyq = grid.nyquist();
    let mut buf = vec![Complex64::default(); cu.len()];
    let mut eval = |a: f64| -> f64 {
        for (idx, b) in buf.iter_mut().enumerate() {
            let k = grid.wavenumber(idx) as f64;
            let half = 0.5 * k * a;
            *b = if idx == nyq {
                (cu[idx] - cv[idx]) * half.cos()
            } else {
                cu[idx] * Complex64::from_polar(1.0, -half) - cv[idx] * Complex64::from_polar(1.0, half)
            };
        }
        let values = grid.synthesize(&buf);
        crate::spectral::TrigInterpolant::from_coeffs(grid, buf.clone()).sup_abs(&values)
    };
    let h = grid.spacing();
    let center = coarse.best_shift;
    // keep the window symmetric around zero so the mirrored pair searches mirrored points
    let center = if center > std::f64::consts::PI {
        center - std::f64::consts::TAU
    } else {
        center
    };
    let (mut lo, mut hi) = (center - h, center + h);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = eval(x1);
    let mut f2 = eval(x2);
    for _ in 0..GOLDEN_ITERATIONS {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = eval(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = eval(x2);
        }
    }
    let f_center = eval(center);
    let (a, fa) = [(x1, f1), (x2, f2), (center, f_center)]
        .into_iter()
        .fold((center, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best });
    OrbitDistanceResult {
        distance: fa,
        best_shift: a.rem_euclid(std::f64::consts::TAU),
    }
}

/// `d̃(([u], g1), ([v], g2)) = orbit distance + hull distance`.
pub fn quotient_distance<F: SignalFamily + ?Sized>(
    u: &Field,
    g1: HullPoint,
    v: &Field,
    g2: HullPoint,
    family: &F,
    metric: &HullMetric,
) -> f64 {
    orbit_distance(u, v).distance + hull_distance(family, g1, g2, metric)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodReport {
    /// Smallest common spatial period, `2π / gcd(active modes)`.
    pub period: f64,
    pub homogeneous: bool,
    pub active_modes: Vec<usize>,
}

/// Default relative amplitude threshold for [`spatial_period`].
pub const DEFAULT_AMP_TOL: f64 = 1e-8;

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn spatial_period(u: &Field, amp_tol: f64) -> PeriodReport {
    let n = u.len();
    let c = u.spectrum();
    let amp = |k: usize| -> f64 {
        if k == 0 {
            c[0].norm()
        } else if k == n / 2 {
            c[k].norm()
        } else {
            c[k].norm() + c[n - k].norm()
        }
    };
    let amps: Vec<f64> = (0..=n / 2).map(amp).collect();
    let max = amps.iter().copied().fold(0.0, f64::max);
    let active: Vec<usize> = if max > 0.0 {
        (1..=n / 2).filter(|&k| amps[k] >= amp_tol * max).collect()
    } else {
        Vec::new()
    };
    let period = match active.iter().copied().reduce(gcd) {
        Some(g) => std::f64::consts::TAU / g as f64,
        None => std::f64::consts::TAU,
    };
    PeriodReport {
        period,
        homogeneous: active.is_empty(),
        active_modes: active,
    }
}

/// `max u − min u < tol · (1 + sup |u|)`.
pub fn is_homogeneous(u: &Field, tol: f64) -> bool {
    u.max() - u.min() < tol * (1.0 + u.sup_norm())
}
