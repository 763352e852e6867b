//! Checks on the amplitude `φ(t) = e^{F(t)}` of the dyadic example, where
//! `F` is the integral of the built-in series. No PDE solve is involved.

use std::fmt::Write as _;

use crate::forcing::{integral_signal, QuasiPeriodicSignal};

/// `e^{−2π−2}`, the lower bound for `φ(2ⁿ)`.
pub fn dyadic_bound() -> f64 {
    (-2.0 * std::f64::consts::PI - 2.0).exp()
}

/// Largest accepted `n_max`.
pub const MAX_DEPTH: u32 = 30;
/// Running minima are reported for windows `[0, 2^m]` with `m` up to this.
pub const MAX_WINDOW_EXP: u32 = 14;
/// Scan points per unit time before local refinement.
const SCAN_DENSITY: f64 = 16.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DyadicCheck {
    pub n: u32,
    pub t: f64,
    pub integral: f64,
    pub phi: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunningMinimum {
    pub m: u32,
    /// Minimiser of `φ` on `[0, 2^m]`.
    pub t_min: f64,
    pub phi_min: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AppendixReport {
    pub bound: f64,
    pub checks: Vec<DyadicCheck>,
    pub running_minima: Vec<RunningMinimum>,
}

impl AppendixReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    /// Running minima never increase and end strictly below where they started.
    pub fn minima_decrease(&self) -> bool {
        let m = &self.running_minima;
        m.windows(2).all(|w| w[1].phi_min <= w[0].phi_min) && (m.len() < 2 || m[m.len() - 1].phi_min < m[0].phi_min)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "bound e^(-2pi-2) = {:.6e}", self.bound);
        let _ = writeln!(s, "{:>3} {:>12} {:>14} {:>14} ok", "n", "t", "F(t)", "phi(t)");
        for c in &self.checks {
            let _ = writeln!(
                s,
                "{:>3} {:>12} {:>14.10} {:>14.6e} {}",
                c.n,
                c.t,
                c.integral,
                c.phi,
                if c.holds { "yes" } else { "NO" }
            );
        }
        if !self.running_minima.is_empty() {
            let _ = writeln!(s, "running minimum of phi over [0, 2^m]");
            let _ = writeln!(s, "{:>3} {:>14} {:>14}", "m", "argmin", "min phi");
            for r in &self.running_minima {
                let _ = writeln!(s, "{:>3} {:>14.6} {:>14.6e}", r.m, r.t_min, r.phi_min);
            }
        }
        s
    }
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..60 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Minimum of `F` on `[lo, hi]`: dense scan, then golden refinement around
/// the best scan point.
fn window_min(signal: &QuasiPeriodicSignal, lo: f64, hi: f64) -> (f64, f64) {
    let steps = ((hi - lo) * SCAN_DENSITY).ceil().max(1.0) as usize;
    let h = (hi - lo) / steps as f64;
    let mut best = (lo, integral_signal(signal, lo));
    for k in 1..=steps {
        let t = lo + k as f64 * h;
        let v = integral_signal(signal, t);
        if v < best.1 {
            best = (t, v);
        }
    }
    let a = (best.0 - h).max(lo);
    let b = (best.0 + h).min(hi);
    let refined = golden_min(|t| integral_signal(signal, t), a, b);
    if refined.1 < best.1 {
        refined
    } else {
        best
    }
}

/// Evaluates `φ(2ⁿ)` for `n = 1..=n_max` against the bound, and the running
/// minimum of `φ` over `[0, 2^m]` for `m = 0..=min(n_max, MAX_WINDOW_EXP)`.
///
/// `n_max` above [`MAX_DEPTH`] is clamped.
pub fn verify_appendix(n_max: u32) -> AppendixReport {
    let n_max = n_max.min(MAX_DEPTH);
    let signal = QuasiPeriodicSignal::appendix();
    let bound = dyadic_bound();
    let checks = (1..=n_max)
        .map(|n| {
            let t = 2f64.powi(n as i32);
            let integral = integral_signal(&signal, t);
            let phi = integral.exp();
            DyadicCheck {
                n,
                t,
                integral,
                phi,
                holds: phi >= bound,
            }
        })
        .collect();
    let mut running_minima = Vec::new();
    if n_max > 0 {
        let mut best = window_min(&signal, 0.0, 1.0);
        running_minima.push(RunningMinimum {
            m: 0,
            t_min: best.0,
            phi_min: best.1.exp(),
        });
        for m in 1..=n_max.min(MAX_WINDOW_EXP) {
            let lo = 2f64.powi(m as i32 - 1);
            let w = window_min(&signal, lo, 2.0 * lo);
            if w.1 < best.1 {
                best = w;
            }
            running_minima.push(RunningMinimum {
                m,
                t_min: best.0,
                phi_min: best.1.exp(),
            });
        }
    }
    AppendixReport {
        bound,
        checks,
        running_minima,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_for_zero_depth() {
        let r = verify_appendix(0);
        assert!(r.checks.is_empty() && r.running_minima.is_empty());
        assert!(r.all_hold());
    }

    #[test]
    fn golden_section_finds_parabola_vertex() {
        let (x, v) = golden_min(|x| (x - 0.3).powi(2) + 1.0, 0.0, 1.0);
        assert!((x - 0.3).abs() < 1e-7 && (v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn depth_is_clamped() {
        assert_eq!(verify_appendix(40).checks.len(), MAX_DEPTH as usize);
    }
}
