//! The circle-flow picture of an inhomogeneous solution: a profile moving
//! rigidly, `φ(t, x) = u_{g·t}(x + c(t))`, with the normalisation that the
//! profile peaks at the origin. The phase obeys `ċ = G(t, c)` where
//!
//! `G(t, z) = f_p + (φ_xxx + f_u φ_x) / φ_xx`, evaluated at `x = −z`.
//!
//! Whether `ċ` is almost periodic or only almost automorphic is not decided
//! here; [`almost_period_scan`] produces gap statistics as evidence.

use std::io::{self, Write};

use crate::error::{LabError, Result};
use crate::forcing::{hull_distance, HullMetric, Nonlinearity};
use crate::lab::fmt_f64;
use crate::spectral::{Field, Trajectory};
use crate::symmetry::{is_homogeneous, orbit_distance};

/// Homogeneity tolerance below which the argmax is declared undefined.
pub const FLAT_TOL: f64 = 1e-10;
/// Guard on `|φ_xx|` relative to `sup |φ|`.
pub const DEFAULT_GUARD_FACTOR: f64 = 1e-6;
/// Residuals above this multiple of the median are reported as spikes.
pub const SPIKE_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxValue {
    pub m: f64,
    /// Location of the maximum in `[0, 2π)`.
    pub x_max: f64,
    pub phixx: f64,
}

fn max_value_at(u: &Field, t: Option<f64>) -> Result<MaxValue> {
    if is_homogeneous(u, FLAT_TOL) {
        return Err(LabError::FlatField { t });
    }
    let vals = u.values();
    let n = vals.len();
    let h = u.grid().spacing();
    let i = (0..n).fold(0, |best, j| if vals[j] > vals[best] { j } else { best });
    let (l, c, r) = (vals[(i + n - 1) % n], vals[i], vals[(i + 1) % n]);
    let denom = l - 2.0 * c + r;
    let off = if denom < 0.0 {
        (0.5 * (l - r) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    let p = u.interpolant();
    let (x, m) = p.refine_extremum(h * (i as f64 + off), h, 1.0);
    Ok(MaxValue {
        m,
        x_max: x.rem_euclid(std::f64::consts::TAU),
        phixx: p.eval_derivative(x, 2),
    })
}

/// `m(u) = max u` over the trigonometric interpolant and its location: grid
/// argmax, three-point parabola, then Newton on `u_x`.
pub fn max_value(u: &Field) -> Result<MaxValue> {
    max_value_at(u, None)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTrack {
    pub times: Vec<f64>,
    /// Unwrapped phase `c = −x_max`, in units of `x`.
    pub c: Vec<f64>,
    /// Spatial period used for the reduction.
    pub period: f64,
    /// Centered differences inside, second-order one-sided at the ends.
    pub cdot: Vec<f64>,
    pub max_values: Vec<f64>,
    pub phixx_at_max: Vec<f64>,
}

impl PhaseTrack {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Recomputes `cdot` after `c` was edited.
    pub fn recompute_cdot(&mut self) {
        self.cdot = differentiate(&self.times, &self.c);
    }

    /// CSV with header `t,c,cdot,m,phixx_at_max`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,c,cdot,m,phixx_at_max")?;
        for k in 0..self.len() {
            writeln!(
                w,
                "{},{},{},{},{}",
                fmt_f64(self.times[k]),
                fmt_f64(self.c[k]),
                fmt_f64(self.cdot[k]),
                fmt_f64(self.max_values[k]),
                fmt_f64(self.phixx_at_max[k])
            )?;
        }
        Ok(())
    }
}

fn differentiate(t: &[f64], c: &[f64]) -> Vec<f64> {
    let n = t.len();
    if n < 2 {
        return vec![0.0; n];
    }
    if n == 2 {
        let d = (c[1] - c[0]) / (t[1] - t[0]);
        return vec![d, d];
    }
    (0..n)
        .map(|k| {
            if k == 0 {
                (-3.0 * c[0] + 4.0 * c[1] - c[2]) / (t[2] - t[0])
            } else if k == n - 1 {
                (3.0 * c[n - 1] - 4.0 * c[n - 2] + c[n - 3]) / (t[n - 1] - t[n - 3])
            } else {
                (c[k + 1] - c[k - 1]) / (t[k + 1] - t[k - 1])
            }
        })
        .collect()
}

/// Phase track of `traj` for spatial period `period`.
pub fn extract_phase(traj: &Trajectory, period: f64) -> Result<PhaseTrack> {
    if !(period > 0.0) {
        return Err(LabError::InvalidArgument(format!(
            "period must be positive, got {period}"
        )));
    }
    if traj.is_empty() {
        return Err(LabError::InsufficientData("empty trajectory".into()));
    }
    let n = traj.len();
    let mut track = PhaseTrack {
        times: Vec::with_capacity(n),
        c: Vec::with_capacity(n),
        period,
        cdot: Vec::new(),
        max_values: Vec::with_capacity(n),
        phixx_at_max: Vec::with_capacity(n),
    };
    let mut prev_raw = 0.0;
    for s in &traj.samples {
        let mv = max_value_at(&s.state, Some(s.t))?;
        let raw = (-mv.x_max).rem_euclid(period);
        let c = match track.c.last() {
            None => raw,
            Some(&last) => {
                let mut jump = raw - prev_raw;
                jump -= period * (jump / period).round();
                if jump.abs() >= 0.25 * period {
                    return Err(LabError::UnwrapFailure {
                        t0: *track.times.last().expect("times track c"),
                        t1: s.t,
                        jump,
                    });
                }
                last + jump
            }
        };
        prev_raw = raw;
        track.times.push(s.t);
        track.c.push(c);
        track.max_values.push(mv.m);
        track.phixx_at_max.push(mv.phixx);
    }
    track.recompute_cdot();
    Ok(track)
}

/// `G(t, z)` for the state `u` at absolute forcing time `t`, with guard
/// `|φ_xx| ≥ 1e-6 · sup |u|`.
pub fn reduced_rhs(u: &Field, t: f64, z: f64, nl: &Nonlinearity) -> Result<f64> {
    reduced_rhs_with_guard(u, t, z, nl, DEFAULT_GUARD_FACTOR * u.sup_norm())
}

pub fn reduced_rhs_with_guard(u: &Field, t: f64, z: f64, nl: &Nonlinearity, guard: f64) -> Result<f64> {
    let p = u.interpolant();
    let x = -z;
    let phixx = p.eval_derivative(x, 2);
    if !(phixx.abs() >= guard) || phixx == 0.0 {
        return Err(LabError::NearSingular {
            t,
            phixx: phixx.abs(),
            guard,
        });
    }
    let phi = p.eval(x);
    let phix = p.eval_derivative(x, 1);
    let phixxx = p.eval_derivative(x, 3);
    let (_, f_u, f_p) = nl.coefficients(t).eval(phi, phix);
    Ok(f_p + (phixxx + f_u * phix) / phixx)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberPair {
    pub i: usize,
    pub j: usize,
    pub hull_distance: f64,
    pub orbit_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionReport {
    /// `|ċ − G(t, c)|` per sample.
    pub residuals: Vec<f64>,
    /// Largest residual over interior samples.
    pub ode_residual: f64,
    /// Times whose residual exceeds `SPIKE_FACTOR ·` median (and roundoff).
    pub spikes: Vec<f64>,
    /// Sample pairs with nearby hull points and the orbit distance of their states.
    pub fiber_pairs: Vec<FiberPair>,
    pub max_fiber_orbit_distance: f64,
}

/// Upper bound on states compared for fibre consistency.
const FIBER_PICKS: usize = 200;

/// Checks the reduced ODE along `track` and compares states over nearby
/// hull points.
pub fn verify_reduction(traj: &Trajectory, track: &PhaseTrack, hull_eps: f64) -> Result<ReductionReport> {
    if track.len() != traj.len() || track.times.iter().zip(traj.times()).any(|(a, b)| *a != b) {
        return Err(LabError::MismatchedTrajectories(
            "phase track does not belong to trajectory".into(),
        ));
    }
    let nl = &traj.nonlinearity;
    let residuals = traj
        .samples
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let g = reduced_rhs(&s.state, traj.forcing.offset + s.t, track.c[k], nl)?;
            Ok((track.cdot[k] - g).abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = residuals.len();
    let interior = if n > 2 { &residuals[1..n - 1] } else { &residuals[..] };
    let ode_residual = interior.iter().copied().fold(0.0, f64::max);
    let mut sorted = residuals.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let median = sorted.get(n / 2).copied().unwrap_or(0.0);
    let spike_floor = SPIKE_FACTOR * median + 1e-9;
    let spikes = residuals
        .iter()
        .zip(&track.times)
        .filter(|(r, _)| **r > spike_floor)
        .map(|(_, t)| *t)
        .collect();

    let metric = HullMetric::default();
    let picks: Vec<usize> = if n <= FIBER_PICKS {
        (0..n).collect()
    } else {
        (0..FIBER_PICKS).map(|k| k * (n - 1) / (FIBER_PICKS - 1)).collect()
    };
    let sigs: Vec<_> = picks
        .iter()
        .map(|&i| metric.signature(nl, traj.hull_point(i)))
        .collect();
    let mut fiber_pairs = Vec::new();
    for a in 0..picks.len() {
        for b in a + 1..picks.len() {
            let hd = metric.distance_between(&sigs[a], &sigs[b]);
            if hd < hull_eps {
                let (i, j) = (picks[a], picks[b]);
                fiber_pairs.push(FiberPair {
                    i,
                    j,
                    hull_distance: hd,
                    orbit_distance: orbit_distance(&traj.samples[i].state, &traj.samples[j].state).distance,
                });
            }
        }
    }
    let max_fiber_orbit_distance = fiber_pairs.iter().map(|p| p.orbit_distance).fold(0.0, f64::max);
    Ok(ReductionReport {
        residuals,
        ode_residual,
        spikes,
        fiber_pairs,
        max_fiber_orbit_distance,
    })
}

/// Bohr-type scan of a uniformly sampled series.
#[derive(Debug, Clone, PartialEq)]
pub struct AlmostPeriodScan {
    pub eps: f64,
    /// Accepted `τ` on the sampling grid, ascending.
    pub accepted: Vec<f64>,
    /// Largest gap between consecutive accepted `τ`, counting `τ = 0`.
    pub max_gap: f64,
}

/// Accepts `τ = k·dt ≤ max_period` when `sup |x(t + τ) − x(t)| ≤ eps` over the
/// overlap of the series with its translate.
pub fn almost_period_scan(series: &[f64], dt: f64, eps: f64, max_period: f64) -> Result<AlmostPeriodScan> {
    if series.len() < 2 || !(dt > 0.0) {
        return Err(LabError::InsufficientData(
            "need at least two uniformly spaced samples".into(),
        ));
    }
    let k_max = (max_period / dt).floor() as usize;
    if k_max == 0 || k_max >= series.len() {
        return Err(LabError::InsufficientData(format!(
            "max period {max_period} does not fit the {} samples",
            series.len()
        )));
    }
    let mut accepted = Vec::new();
    for k in 1..=k_max {
        let ok = series[k..].iter().zip(series).all(|(a, b)| (a - b).abs() <= eps);
        if ok {
            accepted.push(k as f64 * dt);
        }
    }
    let mut max_gap = 0.0f64;
    let mut last = 0.0;
    for &tau in &accepted {
        max_gap = max_gap.max(tau - last);
        last = tau;
    }
    max_gap = max_gap.max(k_max as f64 * dt - last);
    Ok(AlmostPeriodScan { eps, accepted, max_gap })
}

/// Hull distance between two samples of a trajectory under the default metric.
pub fn sample_hull_distance(traj: &Trajectory, i: usize, j: usize) -> f64 {
    hull_distance(
        &traj.nonlinearity,
        traj.hull_point(i),
        traj.hull_point(j),
        &HullMetric::default(),
    )
}
