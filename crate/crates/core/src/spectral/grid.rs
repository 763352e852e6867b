use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{LabError, Result};

pub(crate) struct Plans {
    pub fwd: Arc<dyn Fft<f64>>,
    pub inv: Arc<dyn Fft<f64>>,
    pub fwd_pad: Arc<dyn Fft<f64>>,
    pub inv_pad: Arc<dyn Fft<f64>>,
}

/// Uniform grid `x_i = 2π i / n` on the circle, with cached FFT plans for
/// `n` points and for the 3/2-padded dealiasing grid.
#[derive(Clone)]
pub struct CircleGrid {
    n: usize,
    pub(crate) plans: Arc<Plans>,
}

impl fmt::Debug for CircleGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CircleGrid").field("n", &self.n).finish()
    }
}

impl PartialEq for CircleGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

impl CircleGrid {
    pub const MIN_POINTS: usize = 16;

    pub fn new(n: usize) -> Result<Self> {
        if n < Self::MIN_POINTS || !n.is_power_of_two() {
            return Err(LabError::InvalidArgument(format!(
                "grid size must be a power of two >= {}, got {n}",
                Self::MIN_POINTS
            )));
        }
        let mut planner = FftPlanner::new();
        let pad = 3 * n / 2;
        let plans = Plans {
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
            fwd_pad: planner.plan_fft_forward(pad),
            inv_pad: planner.plan_fft_inverse(pad),
        };
        Ok(Self {
            n,
            plans: Arc::new(plans),
        })
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn padded_points(&self) -> usize {
        3 * self.n / 2
    }

    pub fn spacing(&self) -> f64 {
        std::f64::consts::TAU / self.n as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        std::f64::consts::TAU * i as f64 / self.n as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.node(i))
    }

    /// Signed wavenumber of FFT slot `idx`; the Nyquist slot reports `n/2`.
    pub fn wavenumber(&self, idx: usize) -> i64 {
        let n = self.n as i64;
        let i = idx as i64;
        if i <= n / 2 {
            i
        } else {
            i - n
        }
    }

    pub fn nyquist(&self) -> usize {
        self.n / 2
    }

    /// Normalised coefficients `c_k = (1/n) Σ u_j e^{-i k x_j}`.
    pub fn analyze(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.plans.fwd.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        for c in buf.iter_mut() {
            *c *= scale;
        }
        buf
    }

    /// Grid values of `Σ c_k e^{i k x}` (real part).
    pub fn synthesize(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = coeffs.to_vec();
        self.plans.inv.process(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }
}

/// Real samples of a function on a [`CircleGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: CircleGrid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: &CircleGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(LabError::InvalidArgument(format!(
                "field has {} values, grid has {} points",
                values.len(),
                grid.n_points()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LabError::InvalidArgument("field contains non-finite values".into()));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub(crate) fn from_parts_unchecked(grid: &CircleGrid, values: Vec<f64>) -> Self {
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn from_fn(grid: &CircleGrid, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: grid.clone(),
            values: grid.nodes().map(f).collect(),
        }
    }

    pub fn constant(grid: &CircleGrid, c: f64) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![c; grid.n_points()],
        }
    }

    pub fn zeros(grid: &CircleGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn from_spectrum(grid: &CircleGrid, coeffs: &[Complex64]) -> Self {
        Self {
            grid: grid.clone(),
            values: grid.synthesize(coeffs),
        }
    }

    pub fn grid(&self) -> &CircleGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spectrum(&self) -> Vec<Complex64> {
        self.grid.analyze(&self.values)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Discrete L² inner product `(1/n) Σ u_i v_i`.
    pub fn dot(&self, other: &Field) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>() / self.values.len() as f64
    }

    pub fn l2_norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// `sup |self − other|`.
    pub fn sup_distance(&self, other: &Field) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Field) -> Field {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn scale(&self, s: f64) -> Field {
        self.map(|v| v * s)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        debug_assert_eq!(self.grid, other.grid);
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// Trigonometric interpolant through the grid values.
    pub fn interpolant(&self) -> TrigInterpolant {
        TrigInterpolant::from_coeffs(&self.grid, self.spectrum())
    }
}

/// Multiplier `(i k)^order` for FFT slot `idx`; odd derivatives drop the Nyquist mode.
pub(crate) fn derivative_symbol(grid: &CircleGrid, idx: usize, order: u32) -> Complex64 {
    let k = grid.wavenumber(idx) as f64;
    if idx == grid.nyquist() && order % 2 == 1 {
        return Complex64::new(0.0, 0.0);
    }
    Complex64::new(0.0, k).powu(order)
}

/// Fourier derivative of order 1, 2 or 3.
pub fn derivative(u: &Field, order: u32) -> Result<Field> {
    if !(1..=3).contains(&order) {
        return Err(LabError::InvalidArgument(format!(
            "derivative order must be 1, 2 or 3, got {order}"
        )));
    }
    let grid = u.grid();
    let mut c = u.spectrum();
    for (idx, ck) in c.iter_mut().enumerate() {
        *ck *= derivative_symbol(grid, idx, order);
    }
    Ok(Field::from_spectrum(grid, &c))
}

/// Band-limited interpolant `Σ_{|k|<n/2} c_k e^{ikx} + c_{n/2} cos(n x / 2)`.
#[derive(Debug, Clone)]
pub struct TrigInterpolant {
    /// (k, c_k) for 0 ≤ k < n/2; the negative modes are conjugates.
    half: Vec<Complex64>,
    nyquist: f64,
    n: usize,
}

impl TrigInterpolant {
    pub fn from_coeffs(grid: &CircleGrid, coeffs: Vec<Complex64>) -> Self {
        let n = grid.n_points();
        let half: Vec<Complex64> = (0..n / 2)
            .map(|k| {
                if k == 0 {
                    coeffs[0]
                } else {
                    // symmetrise against roundoff in the conjugate slot
                    0.5 * (coeffs[k] + coeffs[n - k].conj())
                }
            })
            .collect();
        Self {
            half,
            nyquist: coeffs[n / 2].re,
            n,
        }
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    /// Value of the `order`-th derivative at `x`.
    pub fn eval_derivative(&self, x: f64, order: u32) -> f64 {
        let mut acc = if order == 0 { self.half[0].re } else { 0.0 };
        for (k, c) in self.half.iter().enumerate().skip(1) {
            let kf = k as f64;
            let z = c * Complex64::new(0.0, kf).powu(order) * Complex64::from_polar(1.0, kf * x);
            acc += 2.0 * z.re;
        }
        let nq = (self.n / 2) as f64;
        // d^m/dx^m cos(Nx)
        let nyq = match order % 4 {
            0 => (nq * x).cos(),
            1 => -(nq * x).sin(),
            2 => -(nq * x).cos(),
            _ => (nq * x).sin(),
        } * nq.powi(order as i32);
        acc + self.nyquist * nyq
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_derivative(x, 0)
    }

    /// Refines a local maximum (`sign = 1`) or minimum (`sign = −1`) near `x0`
    /// by Newton steps on the derivative, staying within `radius` of the
    /// start. Returns `(x, value)`.
    pub fn refine_extremum(&self, x0: f64, radius: f64, sign: f64) -> (f64, f64) {
        let mut x = x0;
        for _ in 0..30 {
            let d1 = self.eval_derivative(x, 1);
            let d2 = self.eval_derivative(x, 2);
            if d2 == 0.0 {
                break;
            }
            let next = (x - d1 / d2).clamp(x0 - radius, x0 + radius);
            if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) {
                x = next;
                break;
            }
            x = next;
        }
        let v = self.eval(x);
        let v0 = self.eval(x0);
        // Newton may drift to an extremum of the wrong kind; keep the better point
        if sign * v >= sign * v0 {
            (x, v)
        } else {
            (x0, v0)
        }
    }

    /// Sup of `|p|` over the circle: grid peaks refined on the interpolant.
    pub fn sup_abs(&self, values: &[f64]) -> f64 {
        let n = values.len();
        let h = std::f64::consts::TAU / n as f64;
        let grid_max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if grid_max == 0.0 {
            return 0.0;
        }
        let mut best = grid_max;
        for i in 0..n {
            let a = values[i].abs();
            if a < 0.5 * grid_max {
                continue;
            }
            let l = values[(i + n - 1) % n].abs();
            let r = values[(i + 1) % n].abs();
            if a >= l && a >= r {
                // parabola vertex through the three nodes as Newton start
                let denom = l - 2.0 * a + r;
                let off = if denom != 0.0 { 0.5 * (l - r) / denom } else { 0.0 };
                let x0 = h * (i as f64 + off.clamp(-0.5, 0.5));
                let (_, v) = self.refine_extremum(x0, h, values[i].signum());
                best = best.max(v.abs());
            }
        }
        best
    }

    /// Samples on a grid `factor` times finer, by zero padding.
    pub fn upsample(&self, factor: usize) -> Vec<f64> {
        let m = self.n * factor;
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        buf[0] = self.half[0];
        for (k, c) in self.half.iter().enumerate().skip(1) {
            buf[k] = *c;
            buf[m - k] = c.conj();
        }
        if factor == 1 {
            buf[self.n / 2] = Complex64::new(self.nyquist, 0.0);
        } else {
            let h = Complex64::new(0.5 * self.nyquist, 0.0);
            buf[self.n / 2] = h;
            buf[m - self.n / 2] = h;
        }
        let mut planner = FftPlanner::new();
        planner.plan_fft_inverse(m).process(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }
}
