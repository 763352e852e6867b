//! Zero counting on the circle and the Sturm non-increase monitor.
//!
//! Zeros are counted as sign changes of the trigonometric interpolant, read
//! off a 4× upsampled grid. Cells whose endpoints sit below the tolerance are
//! subdivided 8-fold up to four times; anything still unresolved marks the
//! count as ambiguous instead of guessing.

use std::io::{self, Write};

use crate::error::{LabError, Result};
use crate::spectral::{Field, Trajectory, TrigInterpolant};

/// Fine-grid oversampling before sign inspection.
pub const UPSAMPLE: usize = 4;
/// Subdivision factor of an unresolved cell.
pub const REFINE_FACTOR: usize = 8;
/// Maximum number of nested refinements.
pub const REFINE_DEPTH: u32 = 4;
/// Default tolerance relative to `sup |u|`.
pub const DEFAULT_REL_TOL: f64 = 1e-9;
/// Differences below this fraction of the larger state are treated as
/// integration noise and their counts reported as ambiguous.
pub const NOISE_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroCount {
    pub count: usize,
    pub all_simple: bool,
    /// Smallest `|u_x|` over located crossings (`+∞` without crossings).
    pub min_crossing_slope: f64,
    pub ambiguous: bool,
}

/// Absolute tolerance `DEFAULT_REL_TOL · sup |u|`.
pub fn default_tol(u: &Field) -> f64 {
    DEFAULT_REL_TOL * u.sup_norm()
}

#[derive(Clone, Copy)]
struct Point {
    x: f64,
    v: f64,
}

fn sign(v: f64, tol: f64) -> i8 {
    if v >= tol {
        1
    } else if v <= -tol {
        -1
    } else {
        0
    }
}

/// Appends interior points of `[a, b]` (exclusive of `a`, inclusive of `b`
/// handled by the caller) refining where both ends are below tolerance.
fn refine(p: &TrigInterpolant, a: Point, b: Point, tol: f64, depth: u32, out: &mut Vec<Point>, ambiguous: &mut bool) {
    let near_a = a.v.abs() < tol;
    let near_b = b.v.abs() < tol;
    if !(near_a || near_b) {
        return;
    }
    if depth >= REFINE_DEPTH {
        if near_a && near_b {
            *ambiguous = true;
        }
        return;
    }
    let h = (b.x - a.x) / REFINE_FACTOR as f64;
    let mut prev = a;
    for s in 1..=REFINE_FACTOR {
        let cur = if s == REFINE_FACTOR {
            b
        } else {
            let x = a.x + h * s as f64;
            Point { x, v: p.eval(x) }
        };
        refine(p, prev, cur, tol, depth + 1, out, ambiguous);
        if s < REFINE_FACTOR {
            out.push(cur);
        }
        prev = cur;
    }
}

fn bisect(p: &TrigInterpolant, mut lo: Point, mut hi: Point) -> f64 {
    for _ in 0..60 {
        let mid = 0.5 * (lo.x + hi.x);
        if mid <= lo.x || mid >= hi.x {
            break;
        }
        let v = p.eval(mid);
        if v == 0.0 {
            return mid;
        }
        if (v > 0.0) == (lo.v > 0.0) {
            lo = Point { x: mid, v };
        } else {
            hi = Point { x: mid, v };
        }
    }
    0.5 * (lo.x + hi.x)
}

/// Counts the zeros of `u` on the circle at absolute tolerance `tol`.
pub fn zero_number(u: &Field, tol: f64) -> Result<ZeroCount> {
    if !(tol > 0.0) {
        return Err(LabError::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let sup = u.sup_norm();
    if sup < tol || sup == 0.0 {
        return Err(LabError::DegenerateField { sup, tol });
    }
    let p = u.interpolant();
    let fine = p.upsample(UPSAMPLE);
    let m = fine.len();
    let h = std::f64::consts::TAU / m as f64;

    let mut pts: Vec<Point> = Vec::with_capacity(m + 16);
    let mut ambiguous = false;
    for j in 0..m {
        let a = Point {
            x: h * j as f64,
            v: fine[j],
        };
        let b = Point {
            x: h * (j + 1) as f64,
            v: fine[(j + 1) % m],
        };
        pts.push(a);
        refine(&p, a, b, tol, 0, &mut pts, &mut ambiguous);
    }

    // cyclic sign changes between consecutive resolved points
    let Some(first) = pts.iter().position(|q| sign(q.v, tol) != 0) else {
        return Err(LabError::DegenerateField { sup, tol });
    };
    let len = pts.len();
    let mut count = 0;
    let mut min_slope = f64::INFINITY;
    let mut last = pts[first];
    for step in 1..=len {
        let idx = (first + step) % len;
        let wrap = if first + step >= len {
            std::f64::consts::TAU
        } else {
            0.0
        };
        let mut cur = pts[idx];
        cur.x += wrap;
        let s = sign(cur.v, tol);
        if s == 0 {
            continue;
        }
        if s != sign(last.v, tol) {
            count += 1;
            let x = bisect(&p, last, cur);
            min_slope = min_slope.min(p.eval_derivative(x, 1).abs());
        }
        last = cur;
    }
    let all_simple = !ambiguous && min_slope >= tol;
    Ok(ZeroCount {
        count,
        all_simple,
        min_crossing_slope: min_slope,
        ambiguous,
    })
}

/// Simple-zero certificate: whether every crossing is transversal, the
/// smallest crossing slope, and the radius `δ = min_slope · cell / 4` within
/// which smooth perturbations keep the count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimpleZeroCertificate {
    pub simple: bool,
    pub min_slope: f64,
    pub radius: f64,
}

pub fn simple_zero_certificate(u: &Field, tol: f64) -> Result<SimpleZeroCertificate> {
    let z = zero_number(u, tol)?;
    let cell = u.grid().spacing();
    let radius = if z.min_crossing_slope.is_finite() {
        z.min_crossing_slope * cell / 4.0
    } else {
        // no crossings: the field keeps one sign, bounded away by its minimum modulus
        u.values().iter().fold(f64::INFINITY, |m, v| m.min(v.abs()))
    };
    Ok(SimpleZeroCertificate {
        simple: z.all_simple,
        min_slope: z.min_crossing_slope,
        radius,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropEvent {
    pub t: f64,
    pub from: usize,
    pub to: usize,
}

/// Zero counts of a solution difference over time.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ZeroSeries {
    pub times: Vec<f64>,
    pub counts: Vec<ZeroCount>,
    pub drop_events: Vec<DropEvent>,
    /// Increases between consecutive non-ambiguous samples; must stay empty.
    pub violations: Vec<DropEvent>,
}

impl ZeroSeries {
    pub fn is_monotone(&self) -> bool {
        self.violations.is_empty()
    }

    /// Time of the last observed drop, an empirical settling time.
    pub fn last_drop_time(&self) -> Option<f64> {
        self.drop_events.last().map(|d| d.t)
    }

    /// CSV with header `t,count,all_simple,ambiguous`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,count,all_simple,ambiguous")?;
        for (t, c) in self.times.iter().zip(&self.counts) {
            writeln!(
                w,
                "{},{},{},{}",
                crate::lab::fmt_f64(*t),
                c.count,
                c.all_simple as u8,
                c.ambiguous as u8
            )?;
        }
        Ok(())
    }
}

fn check_compatible(a: &Trajectory, b: &Trajectory) -> Result<()> {
    let mismatch = |what: &str| Err(LabError::MismatchedTrajectories(what.to_string()));
    if a.grid != b.grid {
        return mismatch("grid sizes differ");
    }
    if a.forcing != b.forcing || a.nonlinearity != b.nonlinearity {
        return mismatch("forcing differs");
    }
    if a.dt != b.dt {
        return mismatch("time steps differ");
    }
    if a.len() != b.len() || a.times().zip(b.times()).any(|(x, y)| x != y) {
        return mismatch("sample times differ");
    }
    Ok(())
}

/// Tracks `z(φ(t; u¹) − φ(t; u²))` along two runs with identical metadata.
/// `rel_tol` scales with the sup norm of each difference; differences at the
/// [`NOISE_FLOOR`] give ambiguous samples.
pub fn monitor_difference(traj1: &Trajectory, traj2: &Trajectory, rel_tol: f64) -> Result<ZeroSeries> {
    check_compatible(traj1, traj2)?;
    let mut series = ZeroSeries::default();
    let mut last_resolved: Option<usize> = None;
    for (s1, s2) in traj1.samples.iter().zip(&traj2.samples) {
        let diff = s1.state.sub(&s2.state);
        let floor = NOISE_FLOOR * s1.state.sup_norm().max(s2.state.sup_norm());
        let tol = (rel_tol * diff.sup_norm()).max(floor);
        let z = match zero_number(&diff, tol) {
            Ok(z) => z,
            Err(LabError::DegenerateField { .. }) if floor > 0.0 => ZeroCount {
                count: 0,
                all_simple: false,
                min_crossing_slope: f64::INFINITY,
                ambiguous: true,
            },
            Err(e) => return Err(e),
        };
        if !z.ambiguous {
            if let Some(prev) = last_resolved {
                let ev = DropEvent {
                    t: s1.t,
                    from: prev,
                    to: z.count,
                };
                if z.count < prev {
                    series.drop_events.push(ev);
                } else if z.count > prev {
                    series.violations.push(ev);
                }
            }
            last_resolved = Some(z.count);
        }
        series.times.push(s1.t);
        series.counts.push(z);
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::CircleGrid;
    use crate::symmetry::shift;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid() -> CircleGrid {
        CircleGrid::new(64).unwrap()
    }

    fn count(u: &Field) -> ZeroCount {
        zero_number(u, default_tol(u)).unwrap()
    }

    #[test]
    fn sin3x_has_six_simple_zeros() {
        let z = count(&Field::from_fn(&grid(), |x| (3.0 * x).sin()));
        assert_eq!(z.count, 6);
        assert!(z.all_simple && !z.ambiguous);
        assert!((z.min_crossing_slope - 3.0).abs() < 1e-6);
    }

    #[test]
    fn constant_has_no_zeros() {
        let z = count(&Field::constant(&grid(), 1.0));
        assert_eq!(z.count, 0);
        assert!(z.all_simple);
    }

    #[test]
    fn offset_sine_has_two_zeros() {
        assert_eq!(count(&Field::from_fn(&grid(), |x| x.sin() + 0.5)).count, 2);
    }

    #[test]
    fn zero_field_is_degenerate() {
        assert!(matches!(
            zero_number(&Field::zeros(&grid()), 1e-9),
            Err(LabError::DegenerateField { .. })
        ));
    }

    #[test]
    fn certificate_for_sine() {
        let c = simple_zero_certificate(&Field::from_fn(&grid(), f64::sin), 1e-9).unwrap();
        assert!(c.simple);
        assert!((c.min_slope - 1.0).abs() < 1e-9);
    }

    #[test]
    fn near_tangency_has_small_slope() {
        let eps = 1e-4;
        let u = Field::from_fn(&grid(), |x| x.sin().powi(2) - eps);
        let c = simple_zero_certificate(&u, default_tol(&u)).unwrap();
        // zeros at sin x = ±√ε where |u_x| = 2 √ε √(1 − ε)
        let expected = 2.0 * eps.sqrt() * (1.0 - eps).sqrt();
        assert!(
            (c.min_slope - expected).abs() < 1e-6 * expected.max(1.0),
            "{}",
            c.min_slope
        );
        assert_eq!(zero_number(&u, default_tol(&u)).unwrap().count, 4);
    }

    #[test]
    fn double_zero_is_not_certified() {
        let u = Field::from_fn(&grid(), |x| 1.0 - x.cos());
        let z = zero_number(&u, default_tol(&u)).unwrap();
        assert!(!z.all_simple || z.ambiguous);
        assert!(z.ambiguous);
    }

    fn smooth_random(g: &CircleGrid, rng: &mut ChaCha8Rng, modes: usize) -> Field {
        let coeffs: Vec<(f64, f64)> = (0..=modes)
            .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        Field::from_fn(g, |x| {
            coeffs
                .iter()
                .enumerate()
                .map(|(k, (a, b))| a * (k as f64 * x).cos() + b * (k as f64 * x).sin())
                .sum()
        })
    }

    #[test]
    fn counts_stable_within_certified_radius() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for u in [
            Field::from_fn(&g, f64::sin),
            Field::from_fn(&g, |x| (2.0 * x).cos() + 0.3 * x.sin()),
            Field::from_fn(&g, |x| (3.0 * x).sin() + 0.5),
        ] {
            let base = count(&u);
            let cert = simple_zero_certificate(&u, default_tol(&u)).unwrap();
            assert!(cert.simple);
            for _ in 0..50 {
                let v = smooth_random(&g, &mut rng, 3);
                let v = v.scale(0.99 * cert.radius / v.sup_norm());
                let z = count(&u.add(&v));
                assert_eq!(z.count, base.count);
            }
        }
    }

    #[test]
    fn parity_and_shift_invariance() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let u = smooth_random(&g, &mut rng, 6);
            let z = count(&u);
            if z.all_simple {
                assert_eq!(z.count % 2, 0);
            }
            for a in [1usize, 5, 17, 40] {
                let s = shift(&u, g.node(a));
                assert_eq!(count(&s).count, z.count);
            }
        }
    }
}
