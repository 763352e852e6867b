//! Fourth-order exponential time differencing (Cox–Matthews ETDRK4) with the
//! φ-function weights evaluated by contour averages, plus the 3/2-rule
//! transforms used for every pointwise product.

use num_complex::Complex64;

use super::grid::CircleGrid;

const CONTOUR_POINTS: usize = 32;

/// `L_k = −k² + i k a₀ + b₀`; the Nyquist slot carries no drift.
pub(crate) fn linear_symbol(grid: &CircleGrid, drift0: f64, linear0: f64) -> Vec<Complex64> {
    (0..grid.n_points())
        .map(|idx| {
            let k = grid.wavenumber(idx) as f64;
            let im = if idx == grid.nyquist() { 0.0 } else { k * drift0 };
            Complex64::new(-k * k + linear0, im)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub(crate) struct EtdCoefficients {
    pub e: Vec<Complex64>,
    pub e2: Vec<Complex64>,
    pub q: Vec<Complex64>,
    pub f1: Vec<Complex64>,
    pub f2: Vec<Complex64>,
    pub f3: Vec<Complex64>,
}

impl EtdCoefficients {
    pub fn new(symbol: &[Complex64], h: f64) -> Self {
        let n = symbol.len();
        let mut out = Self {
            e: Vec::with_capacity(n),
            e2: Vec::with_capacity(n),
            q: Vec::with_capacity(n),
            f1: Vec::with_capacity(n),
            f2: Vec::with_capacity(n),
            f3: Vec::with_capacity(n),
        };
        let roots: Vec<Complex64> = (0..CONTOUR_POINTS)
            .map(|j| {
                let theta = std::f64::consts::TAU * (j as f64 + 0.5) / CONTOUR_POINTS as f64;
                Complex64::from_polar(1.0, theta)
            })
            .collect();
        let inv = 1.0 / CONTOUR_POINTS as f64;
        for &l in symbol {
            let lh = l * h;
            out.e.push(lh.exp());
            out.e2.push((lh * 0.5).exp());
            let (mut q, mut f1, mut f2, mut f3) = (
                Complex64::default(),
                Complex64::default(),
                Complex64::default(),
                Complex64::default(),
            );
            for r0 in &roots {
                let r = lh + r0;
                let er = r.exp();
                let r3 = r * r * r;
                q += ((r * 0.5).exp() - 1.0) / r;
                f1 += (-4.0 - r + er * (4.0 - 3.0 * r + r * r)) / r3;
                f2 += (2.0 + r + er * (r - 2.0)) / r3;
                f3 += (-4.0 - 3.0 * r - r * r + er * (4.0 - r)) / r3;
            }
            out.q.push(q * (h * inv));
            out.f1.push(f1 * (h * inv));
            out.f2.push(f2 * (h * inv));
            out.f3.push(f3 * (h * inv));
        }
        out
    }
}

/// Projects coefficients onto those of a real field: `c_{−k} = conj(c_k)`,
/// real mean and Nyquist slots.
pub(crate) fn make_hermitian(v: &mut [Complex64]) {
    let n = v.len();
    v[0].im = 0.0;
    v[n / 2].im = 0.0;
    for k in 1..n / 2 {
        let avg = 0.5 * (v[k] + v[n - k].conj());
        v[k] = avg;
        v[n - k] = avg.conj();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Stage {
    Start,
    Mid,
    End,
}

/// One ETDRK4 step of `v' = L v + N(v)`; `nonlinear` receives the stage
/// position so callers can evaluate time-dependent terms.
pub(crate) fn etdrk4_step<F>(coef: &EtdCoefficients, v: &mut [Complex64], mut nonlinear: F)
where
    F: FnMut(&[Complex64], Stage) -> Vec<Complex64>,
{
    let n = v.len();
    let nu = nonlinear(v, Stage::Start);
    let a: Vec<Complex64> = (0..n).map(|k| coef.e2[k] * v[k] + coef.q[k] * nu[k]).collect();
    let na = nonlinear(&a, Stage::Mid);
    let b: Vec<Complex64> = (0..n).map(|k| coef.e2[k] * v[k] + coef.q[k] * na[k]).collect();
    let nb = nonlinear(&b, Stage::Mid);
    let c: Vec<Complex64> = (0..n)
        .map(|k| coef.e2[k] * a[k] + coef.q[k] * (2.0 * nb[k] - nu[k]))
        .collect();
    let nc = nonlinear(&c, Stage::End);
    for k in 0..n {
        v[k] = coef.e[k] * v[k] + coef.f1[k] * nu[k] + 2.0 * coef.f2[k] * (na[k] + nb[k]) + coef.f3[k] * nc[k];
    }
}

/// Transforms between `n` Fourier slots and the `3n/2` padded physical grid.
pub(crate) struct Dealiaser {
    grid: CircleGrid,
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Dealiaser {
    pub fn new(grid: &CircleGrid) -> Self {
        let m = grid.padded_points();
        let scratch_len = grid
            .plans
            .fwd_pad
            .get_inplace_scratch_len()
            .max(grid.plans.inv_pad.get_inplace_scratch_len());
        Self {
            grid: grid.clone(),
            buf: vec![Complex64::default(); m],
            scratch: vec![Complex64::default(); scratch_len],
        }
    }

    pub fn padded_len(&self) -> usize {
        self.buf.len()
    }

    /// Fills `u` and `u_x` on the padded grid from coefficients `v`.
    pub fn load_physical(&mut self, v: &[Complex64], u: &mut [f64], ux: &mut [f64]) {
        let m = self.buf.len();
        let nyq = self.grid.nyquist();
        self.buf.iter_mut().for_each(|c| *c = Complex64::default());
        for (idx, &c) in v.iter().enumerate() {
            if idx == nyq {
                continue;
            }
            let k = self.grid.wavenumber(idx);
            let slot = k.rem_euclid(m as i64) as usize;
            // u + i u_x in one transform: c_k + i (i k c_k) = (1 − k) c_k
            self.buf[slot] = c * (1.0 - k as f64);
        }
        self.grid
            .plans
            .inv_pad
            .process_with_scratch(&mut self.buf, &mut self.scratch);
        for j in 0..m {
            u[j] = self.buf[j].re;
            ux[j] = self.buf[j].im;
        }
    }

    /// Coefficients of the padded-grid samples `g`, truncated to `|k| < n/2`.
    pub fn store_spectral(&mut self, g: &[f64], out: &mut [Complex64]) {
        let m = self.buf.len();
        for (b, &x) in self.buf.iter_mut().zip(g) {
            *b = Complex64::new(x, 0.0);
        }
        self.grid
            .plans
            .fwd_pad
            .process_with_scratch(&mut self.buf, &mut self.scratch);
        let nyq = self.grid.nyquist();
        let scale = 1.0 / m as f64;
        for (idx, o) in out.iter_mut().enumerate() {
            if idx == nyq {
                *o = Complex64::default();
                continue;
            }
            let k = self.grid.wavenumber(idx);
            *o = self.buf[k.rem_euclid(m as i64) as usize] * scale;
        }
    }
}
