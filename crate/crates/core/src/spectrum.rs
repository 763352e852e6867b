//! Lyapunov exponent estimates of the variational equation along a base
//! trajectory (discrete QR method), their unstable/center/stable counts, and
//! zero-number bounds on Fourier bands of the constant-coefficient model.
//!
//! Exponents stand in for the endpoints of the dichotomy spectrum. The two
//! coincide only under regularity, so reports call them exponent estimates.

use std::io::{self, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{LabError, Result};
use crate::lab::fmt_f64;
use crate::spectral::{CircleGrid, Field, LinearizedStepper, Trajectory};
use crate::zeronum::{zero_number, DEFAULT_REL_TOL};

pub const DEFAULT_CENTER_BAND: f64 = 0.05;
pub const DEFAULT_WINDOW: f64 = 2000.0;
pub const DEFAULT_REORTH_EVERY: usize = 10;
pub const DEFAULT_FRAME_SIZE: usize = 5;
/// Norm below which a frame vector counts as collapsed.
pub const COLLAPSE_NORM: f64 = 1e-300;

/// Orthonormal tangent vectors in the discrete L² inner product, stored as
/// Fourier coefficients (`(1/n) Σ u v = Re Σ conj(û_k) v̂_k`).
#[derive(Debug, Clone, PartialEq)]
pub struct TangentFrame {
    grid: CircleGrid,
    coeffs: Vec<Vec<Complex64>>,
}

fn inner(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

impl TangentFrame {
    /// Random frame with grid values uniform in `[−1, 1]`, then orthonormalised.
    pub fn random(grid: &CircleGrid, m: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs = (0..m)
            .map(|_| {
                let vals: Vec<f64> = (0..grid.n_points()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                grid.analyze(&vals)
            })
            .collect();
        let mut frame = Self {
            grid: grid.clone(),
            coeffs,
        };
        frame.orthonormalize(0.0)?;
        Ok(frame)
    }

    pub fn from_fields(fields: &[Field]) -> Result<Self> {
        let grid = fields
            .first()
            .ok_or_else(|| LabError::InvalidArgument("empty frame".into()))?
            .grid()
            .clone();
        let mut frame = Self {
            coeffs: fields.iter().map(Field::spectrum).collect(),
            grid,
        };
        frame.orthonormalize(0.0)?;
        Ok(frame)
    }

    pub fn size(&self) -> usize {
        self.coeffs.len()
    }

    pub fn vectors(&self) -> Vec<Field> {
        self.coeffs
            .iter()
            .map(|c| Field::from_spectrum(&self.grid, c))
            .collect()
    }

    /// Modified Gram–Schmidt; returns the diagonal of `R`.
    pub fn orthonormalize(&mut self, t: f64) -> Result<Vec<f64>> {
        let m = self.coeffs.len();
        let mut diag = Vec::with_capacity(m);
        for k in 0..m {
            crate::spectral::project_real(&mut self.coeffs[k]);
            for j in 0..k {
                let (done, rest) = self.coeffs.split_at_mut(k);
                let p = inner(&done[j], &rest[0]);
                for (x, q) in rest[0].iter_mut().zip(&done[j]) {
                    *x -= q * p;
                }
            }
            let norm = inner(&self.coeffs[k], &self.coeffs[k]).sqrt();
            if !(norm > COLLAPSE_NORM) || !norm.is_finite() {
                return Err(LabError::Degenerate { t });
            }
            for x in self.coeffs[k].iter_mut() {
                *x /= norm;
            }
            diag.push(norm);
        }
        Ok(diag)
    }

    /// Largest `|⟨v_i, v_j⟩ − δ_ij|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let m = self.coeffs.len();
        let mut worst = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((inner(&self.coeffs[i], &self.coeffs[j]) - target).abs());
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpectrumCounts {
    pub dim_u: usize,
    pub dim_c: usize,
    /// `dim_u` rounded up to even.
    pub n_u: usize,
}

/// Counts exponents above `eps_c` and within `[−eps_c, eps_c]`.
pub fn classify_spectrum(exponents: &[f64], eps_c: f64) -> SpectrumCounts {
    let dim_u = exponents.iter().filter(|&&l| l > eps_c).count();
    let dim_c = exponents.iter().filter(|&&l| l.abs() <= eps_c).count();
    SpectrumCounts {
        dim_u,
        dim_c,
        n_u: dim_u + dim_u % 2,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumEstimate {
    /// Descending.
    pub exponents: Vec<f64>,
    /// `|λ(last half) − λ(full window)|` per exponent.
    pub stderr: Vec<f64>,
    pub window: f64,
    pub reorth_every: usize,
    pub eps_c: f64,
    pub dim_u: usize,
    pub dim_c: usize,
    pub n_u: usize,
}

impl SpectrumEstimate {
    /// CSV with header `rank,exponent,stderr`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "rank,exponent,stderr")?;
        for (k, (l, e)) in self.exponents.iter().zip(&self.stderr).enumerate() {
            writeln!(w, "{},{},{}", k + 1, fmt_f64(*l), fmt_f64(*e))?;
        }
        Ok(())
    }

    /// CSV with header `dim_u,dim_c,N_u`.
    pub fn write_summary_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "dim_u,dim_c,N_u")?;
        writeln!(w, "{},{},{}", self.dim_u, self.dim_c, self.n_u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovOptions {
    pub frame_size: usize,
    pub reorth_every: usize,
    pub window: f64,
    pub eps_c: f64,
    pub seed: u64,
}

impl Default for LyapunovOptions {
    fn default() -> Self {
        Self {
            frame_size: DEFAULT_FRAME_SIZE,
            reorth_every: DEFAULT_REORTH_EVERY,
            window: DEFAULT_WINDOW,
            eps_c: DEFAULT_CENTER_BAND,
            seed: 0,
        }
    }
}

/// Leading exponents of the variational equation along `base` (sampled at
/// every step) over the first `window` time units.
pub fn lyapunov_exponents(base: &Trajectory, opts: &LyapunovOptions) -> Result<SpectrumEstimate> {
    let n = base.grid.n_points();
    if opts.frame_size == 0 || opts.frame_size > n / 4 {
        return Err(LabError::InvalidArgument(format!(
            "frame size must be in 1..={}, got {}",
            n / 4,
            opts.frame_size
        )));
    }
    if opts.reorth_every == 0 {
        return Err(LabError::InvalidArgument("reorth_every must be positive".into()));
    }
    let mut stepper = LinearizedStepper::new(base)?;
    let steps = (opts.window / base.dt).round() as usize;
    if steps == 0 || steps > stepper.steps() {
        return Err(LabError::InsufficientData(format!(
            "window {} needs {steps} steps, base has {}",
            opts.window,
            stepper.steps()
        )));
    }
    let mut frame = TangentFrame::random(&base.grid, opts.frame_size, opts.seed)?;
    let m = opts.frame_size;
    let mut sums = vec![0.0; m];
    let mut half_sums: Option<(f64, Vec<f64>)> = None;
    let half_step = steps / 2;
    let t0 = base.samples[0].t;
    for i in 0..steps {
        stepper.step_spectral(i, &mut frame.coeffs);
        let done = i + 1;
        if done % opts.reorth_every == 0 || done == steps {
            let diag = frame.orthonormalize(base.samples[done].t)?;
            for (s, r) in sums.iter_mut().zip(&diag) {
                *s += r.ln();
            }
            if half_sums.is_none() && done >= half_step {
                half_sums = Some((base.samples[done].t - t0, sums.clone()));
            }
        }
    }
    let total = base.samples[steps].t - t0;
    let full: Vec<f64> = sums.iter().map(|s| s / total).collect();
    let (t_half, at_half) = half_sums.expect("reorthonormalised at least once");
    let stderr: Vec<f64> = if total > t_half {
        full.iter()
            .zip(sums.iter().zip(&at_half))
            .map(|(f, (s, h))| ((s - h) / (total - t_half) - f).abs())
            .collect()
    } else {
        vec![0.0; m]
    };
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| full[b].total_cmp(&full[a]));
    let exponents: Vec<f64> = order.iter().map(|&k| full[k]).collect();
    let stderr = order.iter().map(|&k| stderr[k]).collect();
    let counts = classify_spectrum(&exponents, opts.eps_c);
    Ok(SpectrumEstimate {
        exponents,
        stderr,
        window: total,
        reorth_every: opts.reorth_every,
        eps_c: opts.eps_c,
        dim_u: counts.dim_u,
        dim_c: counts.dim_c,
        n_u: counts.n_u,
    })
}

/// `dim V^{0,k}` for the constant-coefficient model: modes `0..=k`.
fn dim_low_modes(k: i64) -> usize {
    if k < 0 {
        0
    } else {
        (2 * k + 1) as usize
    }
}

/// Zero-number bounds `(N₁, N₂)` for the band of modes `n1..=n2`.
pub fn band_zero_bounds(n1: usize, n2: usize) -> (usize, usize) {
    let lo = dim_low_modes(n1 as i64 - 1);
    let hi = dim_low_modes(n2 as i64);
    (lo + lo % 2, hi - hi % 2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroBoundsReport {
    pub n1: usize,
    pub n2: usize,
    pub lower: usize,
    pub upper: usize,
    pub trials: usize,
    /// `(zero count, occurrences)` ascending.
    pub observed: Vec<(usize, usize)>,
    /// Draws whose count was ambiguous at the resolution used.
    pub ambiguous: usize,
    pub violations: usize,
    pub passed: bool,
}

/// Draws random nonzero combinations of `cos kx, sin kx` for `n1 ≤ k ≤ n2`
/// and checks `N₁ ≤ z ≤ N₂`.
pub fn mode_zero_bounds_check(n1: usize, n2: usize, trials: usize, seed: u64) -> Result<ZeroBoundsReport> {
    if n1 > n2 || n2 > 6 {
        return Err(LabError::InvalidArgument(format!(
            "need 0 <= n1 <= n2 <= 6, got {{{n1}, {n2}}}"
        )));
    }
    let grid = CircleGrid::new(64)?;
    let (lower, upper) = band_zero_bounds(n1, n2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut observed = std::collections::BTreeMap::new();
    let (mut ambiguous, mut violations) = (0, 0);
    for _ in 0..trials {
        let coeffs: Vec<(f64, f64)> = (n1..=n2)
            .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let u = Field::from_fn(&grid, |x| {
            coeffs
                .iter()
                .zip(n1..=n2)
                .map(|((a, b), k)| {
                    let kx = k as f64 * x;
                    if k == 0 {
                        *a
                    } else {
                        a * kx.cos() + b * kx.sin()
                    }
                })
                .sum()
        });
        let z = zero_number(&u, DEFAULT_REL_TOL * u.sup_norm())?;
        if z.ambiguous {
            ambiguous += 1;
            continue;
        }
        *observed.entry(z.count).or_insert(0) += 1;
        if z.count < lower || z.count > upper {
            violations += 1;
        }
    }
    Ok(ZeroBoundsReport {
        n1,
        n2,
        lower,
        upper,
        trials,
        observed: observed.into_iter().collect(),
        ambiguous,
        violations,
        passed: violations == 0,
    })
}
