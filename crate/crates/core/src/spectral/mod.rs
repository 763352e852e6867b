//! Pseudo-spectral integration of `u_t = u_xx + f(t, u, u_x)` on the circle
//! and of its variational equation `ψ_t = ψ_xx + a ψ_x + b ψ` along a stored
//! base trajectory.
//!
//! The constant parts of the drift and linear coefficients join the diffusion
//! in the exactly integrated linear operator; everything else is advanced by
//! ETDRK4 with 3/2-rule dealiased products.

mod etd;
mod grid;

pub use grid::{derivative, CircleGrid, Field, TrigInterpolant};

use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::forcing::{HullPoint, Nonlinearity};
pub(crate) use etd::make_hermitian as project_real;
use etd::{etdrk4_step, linear_symbol, make_hermitian, Dealiaser, EtdCoefficients, Stage};

/// Default sup-norm ceiling above which a run is declared blown up.
pub const DEFAULT_BLOWUP_CEILING: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub blowup_ceiling: f64,
    /// Keep the state in the odd harmonics, `u(x + π) = −u(x)`.
    ///
    /// That subspace is invariant when `f` is odd in `(u, u_x)`, i.e. without
    /// source and convective terms. Projecting after each step stops roundoff
    /// from seeding even modes that the dynamics would amplify.
    pub odd_harmonics: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            blowup_ceiling: DEFAULT_BLOWUP_CEILING,
            odd_harmonics: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchemeInfo {
    pub order: u32,
    pub dealiased: bool,
    pub odd_harmonics: bool,
}

const ETDRK4: SchemeInfo = SchemeInfo {
    order: 4,
    dealiased: true,
    odd_harmonics: false,
};

/// Relative size of even-mode content tolerated in an odd-harmonic initial state.
const ODD_HARMONIC_TOL: f64 = 1e-12;

fn check_odd_harmonics(u0: &Field, nl: &Nonlinearity, coeffs: &[Complex64]) -> Result<()> {
    let zero = crate::forcing::QuasiPeriodicSignal::default();
    if nl.source != zero || nl.convective != zero {
        return Err(LabError::InvalidArgument(
            "odd-harmonic constraint needs a nonlinearity without source and convective terms".into(),
        ));
    }
    let n = coeffs.len();
    let even = (0..n).step_by(2).map(|k| coeffs[k].norm()).fold(0.0, f64::max);
    if even > ODD_HARMONIC_TOL * u0.sup_norm().max(f64::MIN_POSITIVE) {
        return Err(LabError::InvalidArgument(format!(
            "initial state has even-mode content {even:e} but the odd-harmonic constraint is on"
        )));
    }
    Ok(())
}

fn drop_even_modes(v: &mut [Complex64]) {
    for c in v.iter_mut().step_by(2) {
        *c = Complex64::default();
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Time since the start of the run; the hull point is `forcing.flow(t)`.
    pub t: f64,
    pub state: Field,
}

/// Time-stamped states of one run together with everything needed to
/// reproduce or extend it.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: CircleGrid,
    pub forcing: HullPoint,
    pub nonlinearity: Nonlinearity,
    pub dt: f64,
    /// Steps between consecutive samples.
    pub stride: usize,
    pub samples: Vec<Sample>,
    pub scheme: SchemeInfo,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    pub fn states(&self) -> impl Iterator<Item = &Field> + '_ {
        self.samples.iter().map(|s| &s.state)
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    pub fn hull_point(&self, i: usize) -> HullPoint {
        self.forcing.flow(self.samples[i].t)
    }

    /// Same samples with every state transformed.
    pub fn map_states(&self, f: impl Fn(&Field) -> Field) -> Trajectory {
        Trajectory {
            samples: self
                .samples
                .iter()
                .map(|s| Sample {
                    t: s.t,
                    state: f(&s.state),
                })
                .collect(),
            ..self.clone()
        }
    }
}

fn step_count(t_end: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(LabError::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(LabError::InvalidArgument(format!(
            "t_end must be finite and nonnegative, got {t_end}"
        )));
    }
    Ok((t_end / dt).round() as usize)
}

struct NonlinearTerm<'a> {
    nl: &'a Nonlinearity,
    drift0: f64,
    linear0: f64,
    dealias: Dealiaser,
    u: Vec<f64>,
    ux: Vec<f64>,
    g: Vec<f64>,
}

impl<'a> NonlinearTerm<'a> {
    fn new(grid: &CircleGrid, nl: &'a Nonlinearity) -> Self {
        let dealias = Dealiaser::new(grid);
        let m = dealias.padded_len();
        Self {
            nl,
            drift0: nl.drift.mean,
            linear0: nl.linear.mean,
            dealias,
            u: vec![0.0; m],
            ux: vec![0.0; m],
            g: vec![0.0; m],
        }
    }

    fn eval(&mut self, v: &[Complex64], time: f64) -> Vec<Complex64> {
        let c = self.nl.coefficients(time);
        self.dealias.load_physical(v, &mut self.u, &mut self.ux);
        for j in 0..self.g.len() {
            let (f, _, _) = c.eval(self.u[j], self.ux[j]);
            self.g[j] = f - self.drift0 * self.ux[j] - self.linear0 * self.u[j];
        }
        let mut out = vec![Complex64::default(); v.len()];
        self.dealias.store_spectral(&self.g, &mut out);
        out
    }
}

/// Integrates from `u0` at hull point `g` for `t_end` time units, keeping every
/// `stride`-th step (and the initial state).
pub fn evolve(u0: &Field, g: HullPoint, nl: &Nonlinearity, t_end: f64, dt: f64, stride: usize) -> Result<Trajectory> {
    evolve_with(u0, g, nl, t_end, dt, stride, &SolverOptions::default())
}

pub fn evolve_with(
    u0: &Field,
    g: HullPoint,
    nl: &Nonlinearity,
    t_end: f64,
    dt: f64,
    stride: usize,
    options: &SolverOptions,
) -> Result<Trajectory> {
    let steps = step_count(t_end, dt)?;
    if stride == 0 {
        return Err(LabError::InvalidArgument("stride must be positive".into()));
    }
    let grid = u0.grid().clone();
    let symbol = linear_symbol(&grid, nl.drift.mean, nl.linear.mean);
    let coef = EtdCoefficients::new(&symbol, dt);
    let mut term = NonlinearTerm::new(&grid, nl);
    let mut v = u0.spectrum();
    if options.odd_harmonics {
        check_odd_harmonics(u0, nl, &v)?;
        drop_even_modes(&mut v);
    }
    let mut samples = Vec::with_capacity(steps / stride + 1);
    samples.push(Sample {
        t: 0.0,
        state: u0.clone(),
    });
    for step in 0..steps {
        let t0 = step as f64 * dt;
        let abs0 = g.offset + t0;
        etdrk4_step(&coef, &mut v, |w, stage| {
            let time = match stage {
                Stage::Start => abs0,
                Stage::Mid => abs0 + 0.5 * dt,
                Stage::End => abs0 + dt,
            };
            term.eval(w, time)
        });
        // roundoff must not seed non-real components the products would misread
        make_hermitian(&mut v);
        if options.odd_harmonics {
            drop_even_modes(&mut v);
        }
        let t1 = (step + 1) as f64 * dt;
        let values = grid.synthesize(&v);
        let mut sup = 0.0f64;
        for &x in &values {
            if !x.is_finite() {
                return Err(LabError::NonFinite { t: t1 });
            }
            sup = sup.max(x.abs());
        }
        if sup > options.blowup_ceiling {
            return Err(LabError::Blowup { t: t1, sup });
        }
        if (step + 1) % stride == 0 {
            samples.push(Sample {
                t: t1,
                state: Field::from_parts_unchecked(&grid, values),
            });
        }
    }
    Ok(Trajectory {
        grid,
        forcing: g,
        nonlinearity: nl.clone(),
        dt,
        stride,
        samples,
        scheme: SchemeInfo {
            odd_harmonics: options.odd_harmonics,
            ..ETDRK4
        },
    })
}

/// Advances tangent vectors along a base trajectory sampled at every step.
///
/// Coefficients `a = f_p`, `b = f_u` are evaluated on the padded grid at the
/// three stage times; the base state at the half step comes from cubic
/// interpolation in time (linear at the ends of the record).
pub struct LinearizedStepper<'a> {
    base: &'a Trajectory,
    coef: EtdCoefficients,
    dealias: Dealiaser,
    drift0: f64,
    linear0: f64,
    // per stage: (a − a₀, b − b₀) on the padded grid
    stage_a: [Vec<f64>; 3],
    stage_b: [Vec<f64>; 3],
    work_u: Vec<f64>,
    work_ux: Vec<f64>,
}

impl<'a> LinearizedStepper<'a> {
    pub fn new(base: &'a Trajectory) -> Result<Self> {
        if base.stride != 1 {
            return Err(LabError::InvalidArgument(format!(
                "linearized propagation needs a base sampled every step (stride {})",
                base.stride
            )));
        }
        if base.len() < 2 {
            return Err(LabError::InsufficientData(
                "base trajectory has fewer than two samples".into(),
            ));
        }
        let grid = &base.grid;
        let nl = &base.nonlinearity;
        let symbol = linear_symbol(grid, nl.drift.mean, nl.linear.mean);
        let dealias = Dealiaser::new(grid);
        let m = dealias.padded_len();
        Ok(Self {
            base,
            coef: EtdCoefficients::new(&symbol, base.dt),
            dealias,
            drift0: nl.drift.mean,
            linear0: nl.linear.mean,
            stage_a: [vec![0.0; m], vec![0.0; m], vec![0.0; m]],
            stage_b: [vec![0.0; m], vec![0.0; m], vec![0.0; m]],
            work_u: vec![0.0; m],
            work_ux: vec![0.0; m],
        })
    }

    /// Number of steps available.
    pub fn steps(&self) -> usize {
        self.base.len() - 1
    }

    fn fill_stage(&mut self, stage: usize, coeffs: &[Complex64], time: f64) {
        let c = self.base.nonlinearity.coefficients(time);
        self.dealias.load_physical(coeffs, &mut self.work_u, &mut self.work_ux);
        for j in 0..self.work_u.len() {
            let (_, fu, fp) = c.eval(self.work_u[j], self.work_ux[j]);
            self.stage_a[stage][j] = fp - self.drift0;
            self.stage_b[stage][j] = fu - self.linear0;
        }
    }

    fn prepare(&mut self, i: usize) {
        let s = &self.base.samples;
        let spec = |k: usize| s[k].state.spectrum();
        let c0 = spec(i);
        let c1 = spec(i + 1);
        let mid: Vec<Complex64> = if i >= 1 && i + 2 < s.len() {
            let cm = spec(i - 1);
            let cp = spec(i + 2);
            (0..c0.len())
                .map(|k| (-cm[k] + 9.0 * c0[k] + 9.0 * c1[k] - cp[k]) / 16.0)
                .collect()
        } else {
            c0.iter().zip(&c1).map(|(a, b)| 0.5 * (a + b)).collect()
        };
        let t0 = self.base.forcing.offset + s[i].t;
        let dt = self.base.dt;
        self.fill_stage(0, &c0, t0);
        self.fill_stage(1, &mid, t0 + 0.5 * dt);
        self.fill_stage(2, &c1, t0 + dt);
    }

    /// Advances every vector (given as Fourier coefficients) across step `i`.
    pub fn step_spectral(&mut self, i: usize, vectors: &mut [Vec<Complex64>]) {
        self.prepare(i);
        let m = self.work_u.len();
        let n = self.base.grid.n_points();
        let mut psi = vec![0.0; m];
        let mut psix = vec![0.0; m];
        let mut g = vec![0.0; m];
        for v in vectors.iter_mut() {
            let Self {
                coef,
                dealias,
                stage_a,
                stage_b,
                ..
            } = self;
            etdrk4_step(coef, v, |w, stage| {
                let s = match stage {
                    Stage::Start => 0,
                    Stage::Mid => 1,
                    Stage::End => 2,
                };
                dealias.load_physical(w, &mut psi, &mut psix);
                for j in 0..m {
                    g[j] = stage_a[s][j] * psix[j] + stage_b[s][j] * psi[j];
                }
                let mut out = vec![Complex64::default(); n];
                dealias.store_spectral(&g, &mut out);
                out
            });
            make_hermitian(v);
        }
    }
}

/// Propagates `psi0` through the variational equation along `base`.
pub fn evolve_linearized(base: &Trajectory, psi0: &Field) -> Result<Trajectory> {
    let mut stepper = LinearizedStepper::new(base)?;
    let grid = base.grid.clone();
    let mut vecs = vec![psi0.spectrum()];
    let mut samples = Vec::with_capacity(base.len());
    samples.push(Sample {
        t: base.samples[0].t,
        state: psi0.clone(),
    });
    for i in 0..stepper.steps() {
        stepper.step_spectral(i, &mut vecs);
        let values = grid.synthesize(&vecs[0]);
        let t = base.samples[i + 1].t;
        if values.iter().any(|x| !x.is_finite()) {
            return Err(LabError::NonFinite { t });
        }
        samples.push(Sample {
            t,
            state: Field::from_parts_unchecked(&grid, values),
        });
    }
    Ok(Trajectory {
        grid,
        forcing: base.forcing,
        nonlinearity: base.nonlinearity.clone(),
        dt: base.dt,
        stride: 1,
        samples,
        scheme: ETDRK4,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forcing::QuasiPeriodicSignal;

    fn grid(n: usize) -> CircleGrid {
        CircleGrid::new(n).unwrap()
    }

    fn appendix_exact(g: &CircleGrid, t: f64) -> Field {
        let amp = QuasiPeriodicSignal::appendix().integral(t).exp();
        Field::from_fn(g, |x| amp * (x + t).sin())
    }

    #[test]
    fn zero_stays_zero_without_source() {
        let g = grid(32);
        let nl = Nonlinearity {
            linear: QuasiPeriodicSignal::from_modes(0.5, &[(1.0, 1.0, 0.0)]).unwrap(),
            cubic: QuasiPeriodicSignal::constant(-1.0),
            convective: QuasiPeriodicSignal::constant(1.0),
            ..Default::default()
        };
        let traj = evolve(&Field::zeros(&g), HullPoint::default(), &nl, 2.0, 0.01, 10).unwrap();
        assert!(traj.states().all(|s| s.sup_norm() == 0.0));
        assert_eq!(traj.len(), 21);
    }

    #[test]
    fn appendix_solution_short_run() {
        let g = grid(32);
        let u0 = Field::from_fn(&g, f64::sin);
        let traj = evolve(&u0, HullPoint::default(), &Nonlinearity::appendix(), 2.0, 0.01, 50).unwrap();
        for s in &traj.samples {
            let exact = appendix_exact(&g, s.t);
            assert!(s.state.sup_distance(&exact) <= 1e-8 * exact.sup_norm(), "t={}", s.t);
        }
    }

    #[test]
    fn blowup_is_detected() {
        let g = grid(16);
        let nl = Nonlinearity {
            cubic: QuasiPeriodicSignal::constant(1.0),
            ..Default::default()
        };
        let u0 = Field::constant(&g, 2.0);
        let opts = SolverOptions {
            blowup_ceiling: 1e6,
            ..SolverOptions::default()
        };
        match evolve_with(&u0, HullPoint::default(), &nl, 1.0, 1e-3, 1, &opts) {
            // u' = u³ from 2 blows up at t = 1/8
            Err(LabError::Blowup { t, .. }) => assert!(t > 0.1 && t < 0.13, "{t}"),
            other => panic!("expected blowup, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let g = grid(16);
        let u0 = Field::zeros(&g);
        let nl = Nonlinearity::default();
        assert!(evolve(&u0, HullPoint::default(), &nl, 1.0, 0.0, 1).is_err());
        assert!(evolve(&u0, HullPoint::default(), &nl, 1.0, 0.1, 0).is_err());
        let traj = evolve(&u0, HullPoint::default(), &nl, 1.0, 0.1, 2).unwrap();
        assert!(evolve_linearized(&traj, &u0).is_err());
    }

    #[test]
    fn odd_harmonic_constraint() {
        let g = CircleGrid::new(16).unwrap();
        let nl = Nonlinearity::appendix();
        let opts = SolverOptions {
            odd_harmonics: true,
            ..SolverOptions::default()
        };
        let u0 = Field::from_fn(&g, f64::sin);
        let traj = evolve_with(&u0, HullPoint::default(), &nl, 5.0, 1e-2, 100, &opts).unwrap();
        assert!(traj.scheme.odd_harmonics);
        let amp = crate::forcing::integral_signal(&crate::QuasiPeriodicSignal::appendix(), 5.0).exp();
        let exact = Field::from_fn(&g, |x| amp * (x + 5.0).sin());
        assert!(traj.last().unwrap().state.sup_distance(&exact) < 1e-6 * amp);
        let even = Field::from_fn(&g, |x| x.sin() + 0.1);
        assert!(matches!(
            evolve_with(&even, HullPoint::default(), &nl, 1.0, 1e-2, 1, &opts),
            Err(LabError::InvalidArgument(_))
        ));
        assert!(matches!(
            evolve_with(
                &u0,
                HullPoint::default(),
                &Nonlinearity::burgers(0.0),
                1.0,
                1e-2,
                1,
                &opts
            ),
            Err(LabError::InvalidArgument(_))
        ));
    }

    #[test]
    fn deterministic_runs_are_bit_identical() {
        let g = grid(32);
        let u0 = Field::from_fn(&g, |x| x.sin() + 0.3 * (2.0 * x).cos());
        let nl = Nonlinearity::burgers(0.1);
        let a = evolve(&u0, HullPoint::new(1.5), &nl, 1.0, 0.01, 5).unwrap();
        let b = evolve(&u0, HullPoint::new(1.5), &nl, 1.0, 0.01, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn linearized_constant_coefficients() {
        // a = 0, b = c0: ψ = e^{(c0 − n²) t} sin(n x)
        let g = grid(32);
        let c0 = 0.7;
        let nl = Nonlinearity {
            linear: QuasiPeriodicSignal::constant(c0),
            ..Default::default()
        };
        let base = evolve(&Field::zeros(&g), HullPoint::default(), &nl, 1.0, 0.01, 1).unwrap();
        for n in 1..4 {
            let nf = n as f64;
            let psi0 = Field::from_fn(&g, |x| (nf * x).sin());
            let out = evolve_linearized(&base, &psi0).unwrap();
            let exact = psi0.scale(((c0 - nf * nf) * 1.0).exp());
            let got = &out.last().unwrap().state;
            assert!(got.sup_distance(&exact) <= 1e-8 * exact.sup_norm());
        }
    }

    #[test]
    fn linearized_appendix_about_zero() {
        let g = grid(32);
        let base = evolve(
            &Field::zeros(&g),
            HullPoint::default(),
            &Nonlinearity::appendix(),
            3.0,
            0.01,
            1,
        )
        .unwrap();
        let psi0 = Field::from_fn(&g, f64::sin);
        let out = evolve_linearized(&base, &psi0).unwrap();
        for s in out.samples.iter().step_by(50) {
            let exact = appendix_exact(&g, s.t);
            assert!(s.state.sup_distance(&exact) <= 1e-8 * exact.sup_norm());
        }
    }

    #[test]
    fn linearized_response_is_linear() {
        let g = grid(32);
        let nl = Nonlinearity {
            linear: QuasiPeriodicSignal::constant(0.5),
            cubic: QuasiPeriodicSignal::constant(-1.0),
            convective: QuasiPeriodicSignal::constant(-1.0),
            ..Default::default()
        };
        let u0 = Field::from_fn(&g, |x| x.sin() + 0.5 * (2.0 * x).cos());
        let base = evolve(&u0, HullPoint::default(), &nl, 1.0, 0.01, 1).unwrap();
        let p0 = Field::from_fn(&g, |x| x.cos());
        let p1 = Field::from_fn(&g, |x| (3.0 * x).sin() + 0.2);
        let (alpha, beta) = (1.7, -0.4);
        let r0 = evolve_linearized(&base, &p0).unwrap();
        let r1 = evolve_linearized(&base, &p1).unwrap();
        let rc = evolve_linearized(&base, &p0.scale(alpha).add(&p1.scale(beta))).unwrap();
        let combo = r0
            .last()
            .unwrap()
            .state
            .scale(alpha)
            .add(&r1.last().unwrap().state.scale(beta));
        let got = &rc.last().unwrap().state;
        assert!(got.sup_distance(&combo) <= 1e-10 * combo.sup_norm());
    }
}
