//! Recurrent time forcing.
//!
//! A [`QuasiPeriodicSignal`] is a constant plus a finite trigonometric sum,
//! optionally extended by the dyadic series
//! `-scale * Σ_k 2^{-k} π sin(2^{-k} π (t + τ))`, which is almost periodic but
//! not quasi-periodic. Time translates of a signal are the points of its hull;
//! [`HullPoint`] records only the accumulated offset and [`HullMetric`] turns
//! the compact-open topology into a computable metric.
//!
//! Phases are stored in turns (fractions of a full cycle) so that shifts by
//! large dyadic times stay exact in floating point.

use crate::error::{LabError, Result};

/// Number of dyadic terms used when evaluating the adaptive series.
pub const DYADIC_VALUE_DEPTH: u32 = 60;
/// Extra dyadic terms added beyond `log2(t)` when integrating the adaptive series.
pub const DYADIC_INTEGRAL_GUARD: u32 = 30;

/// `sin(2π x)` with `x` reduced to one period first.
#[inline]
fn sin_turns(x: f64) -> f64 {
    let r = x - x.round();
    (std::f64::consts::TAU * r).sin()
}

#[inline]
fn frac(x: f64) -> f64 {
    x.rem_euclid(1.0)
}

/// A single term `amplitude * sin(frequency * t + phase)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    pub amplitude: f64,
    /// Angular frequency in radians per unit time.
    pub frequency: f64,
    cycles: f64,
    phase_turns: f64,
}

impl Mode {
    pub fn new(amplitude: f64, frequency: f64, phase: f64) -> Result<Self> {
        if !(frequency > 0.0) || !frequency.is_finite() {
            return Err(LabError::InvalidArgument(format!(
                "mode frequency must be positive and finite, got {frequency}"
            )));
        }
        if !amplitude.is_finite() || !phase.is_finite() {
            return Err(LabError::InvalidArgument(
                "mode amplitude and phase must be finite".into(),
            ));
        }
        Ok(Self {
            amplitude,
            frequency,
            cycles: frequency / std::f64::consts::TAU,
            phase_turns: frac(phase / std::f64::consts::TAU),
        })
    }

    /// Phase in radians, reduced to `[0, 2π)`.
    pub fn phase(&self) -> f64 {
        self.phase_turns * std::f64::consts::TAU
    }

    fn eval(&self, t: f64) -> f64 {
        self.amplitude * sin_turns(frac(self.cycles * t) + self.phase_turns)
    }

    // (a/ω)(cos θ − cos(ωt+θ)) = (2a/ω) sin(ωt/2 + θ) sin(ωt/2)
    fn integral(&self, t: f64) -> f64 {
        let half = frac(0.5 * self.cycles * t);
        2.0 * self.amplitude / self.frequency * sin_turns(half + self.phase_turns) * sin_turns(half)
    }

    fn translated(&self, tau: f64) -> Self {
        Self {
            phase_turns: frac(self.phase_turns + frac(self.cycles * tau)),
            ..self.clone()
        }
    }
}

/// `-scale * Σ_{k=1}^{K} 2^{-k} π sin(2^{-k} π (t + offset))`.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicSeries {
    pub scale: f64,
    /// `None` selects adaptive truncation.
    pub depth: Option<u32>,
    pub offset: f64,
}

impl DyadicSeries {
    // Cycles per unit time of term k: 2^{-k} π / 2π = 2^{-k-1}, exact in binary.
    #[inline]
    fn cycles(k: u32) -> f64 {
        (-(k as f64) - 1.0).exp2()
    }

    fn value_depth(&self) -> u32 {
        self.depth.unwrap_or(DYADIC_VALUE_DEPTH)
    }

    fn integral_depth(&self, t: f64) -> u32 {
        self.depth.unwrap_or_else(|| {
            let span = t.abs().max(2.0);
            span.log2().ceil() as u32 + DYADIC_INTEGRAL_GUARD
        })
    }

    fn eval(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        // smallest terms first
        for k in (1..=self.value_depth()).rev() {
            let nu = Self::cycles(k);
            let amp = (-(k as f64)).exp2() * std::f64::consts::PI;
            acc += amp * sin_turns(frac(nu * t) + frac(nu * self.offset));
        }
        -self.scale * acc
    }

    // cos(2πν(t+τ)) − cos(2πντ) = −2 sin(π(νt + 2ντ)) sin(πνt)
    fn integral(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for k in (1..=self.integral_depth(t)).rev() {
            let nu = Self::cycles(k);
            let half = frac(0.5 * nu * t);
            acc += -2.0 * sin_turns(half + frac(nu * self.offset)) * sin_turns(half);
        }
        self.scale * acc
    }
}

/// Constant plus a finite trigonometric sum plus an optional dyadic series.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QuasiPeriodicSignal {
    pub mean: f64,
    modes: Vec<Mode>,
    dyadic: Option<DyadicSeries>,
}

impl QuasiPeriodicSignal {
    pub fn constant(mean: f64) -> Self {
        Self {
            mean,
            ..Self::default()
        }
    }

    /// Builds `mean + Σ a sin(ω t + θ)` from `(a, ω, θ)` triples.
    pub fn from_modes(mean: f64, triples: &[(f64, f64, f64)]) -> Result<Self> {
        if !mean.is_finite() {
            return Err(LabError::InvalidArgument("signal mean must be finite".into()));
        }
        let modes = triples
            .iter()
            .map(|&(a, w, p)| Mode::new(a, w, p))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            mean,
            modes,
            dyadic: None,
        })
    }

    /// The almost periodic series `-Σ_{k≥1} 2^{-k} π sin(2^{-k} π t)` with
    /// adaptive truncation.
    pub fn appendix() -> Self {
        Self {
            mean: 0.0,
            modes: Vec::new(),
            dyadic: Some(DyadicSeries {
                scale: 1.0,
                depth: None,
                offset: 0.0,
            }),
        }
    }

    /// The same series cut at a fixed number of terms; periodic with period `2^{K+1}`.
    pub fn appendix_truncated(depth: u32) -> Self {
        let mut s = Self::appendix();
        if let Some(d) = s.dyadic.as_mut() {
            d.depth = Some(depth.max(1));
        }
        s
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn dyadic(&self) -> Option<&DyadicSeries> {
        self.dyadic.as_ref()
    }

    /// True when the dyadic part uses adaptive truncation.
    pub fn is_adaptive(&self) -> bool {
        matches!(&self.dyadic, Some(d) if d.depth.is_none())
    }

    /// Number of dyadic terms used for values (0 without a dyadic part).
    pub fn truncation_count(&self) -> u32 {
        self.dyadic.as_ref().map_or(0, |d| d.value_depth())
    }

    /// True when the signal does not depend on time.
    pub fn is_constant(&self) -> bool {
        self.modes.iter().all(|m| m.amplitude == 0.0) && self.dyadic.as_ref().is_none_or(|d| d.scale == 0.0)
    }

    /// Largest frequency present, in cycles per unit time.
    pub fn max_cycles(&self) -> f64 {
        let modes = self.modes.iter().map(|m| m.cycles).fold(0.0, f64::max);
        let dyadic = if self.dyadic.is_some() {
            DyadicSeries::cycles(1)
        } else {
            0.0
        };
        modes.max(dyadic)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            mean: self.mean * factor,
            modes: self
                .modes
                .iter()
                .map(|m| Mode {
                    amplitude: m.amplitude * factor,
                    ..m.clone()
                })
                .collect(),
            dyadic: self.dyadic.as_ref().map(|d| DyadicSeries {
                scale: d.scale * factor,
                ..d.clone()
            }),
        }
    }

    /// Pointwise sum. Two dyadic parts can only be merged when they share
    /// truncation and offset.
    pub fn sum(&self, other: &Self) -> Result<Self> {
        let dyadic = match (&self.dyadic, &other.dyadic) {
            (None, None) => None,
            (Some(d), None) | (None, Some(d)) => Some(d.clone()),
            (Some(a), Some(b)) if a.depth == b.depth && a.offset == b.offset => Some(DyadicSeries {
                scale: a.scale + b.scale,
                ..a.clone()
            }),
            _ => {
                return Err(LabError::InvalidArgument(
                    "cannot add dyadic series with different truncation or offset".into(),
                ))
            }
        };
        let mut modes = self.modes.clone();
        modes.extend(other.modes.iter().cloned());
        Ok(Self {
            mean: self.mean + other.mean,
            modes,
            dyadic,
        })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let mut acc = self.mean;
        for m in &self.modes {
            acc += m.eval(t);
        }
        if let Some(d) = &self.dyadic {
            acc += d.eval(t);
        }
        acc
    }

    /// `∫_0^t signal(s) ds` in closed form, term by term.
    pub fn integral(&self, t: f64) -> f64 {
        let mut acc = self.mean * t;
        for m in &self.modes {
            acc += m.integral(t);
        }
        if let Some(d) = &self.dyadic {
            acc += d.integral(t);
        }
        acc
    }

    /// The translate `t ↦ signal(t + τ)`, realised as a phase shift.
    pub fn translate(&self, tau: f64) -> Self {
        Self {
            mean: self.mean,
            modes: self.modes.iter().map(|m| m.translated(tau)).collect(),
            dyadic: self.dyadic.as_ref().map(|d| DyadicSeries {
                offset: d.offset + tau,
                ..d.clone()
            }),
        }
    }
}

/// `signal(t)`.
pub fn eval_signal(sig: &QuasiPeriodicSignal, t: f64) -> f64 {
    sig.eval(t)
}

/// `∫_0^t signal(s) ds`.
pub fn integral_signal(sig: &QuasiPeriodicSignal, t: f64) -> f64 {
    sig.integral(t)
}

pub fn translate_signal(sig: &QuasiPeriodicSignal, tau: f64) -> QuasiPeriodicSignal {
    sig.translate(tau)
}

/// A point `g = f·τ` of the hull, stored as its time offset from the
/// generating family.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HullPoint {
    pub offset: f64,
}

impl HullPoint {
    pub fn new(offset: f64) -> Self {
        Self { offset }
    }

    /// The base flow `g·t`.
    pub fn flow(self, t: f64) -> Self {
        Self {
            offset: self.offset + t,
        }
    }
}

/// Anything whose hull is generated by a fixed list of signals.
pub trait SignalFamily {
    fn signals(&self) -> Vec<&QuasiPeriodicSignal>;
}

impl SignalFamily for QuasiPeriodicSignal {
    fn signals(&self) -> Vec<&QuasiPeriodicSignal> {
        vec![self]
    }
}

/// Weighted-window sup metric on the hull:
/// `Σ_{j=1..depth} 2^{-j} min(1, sup_{|t| ≤ j·window/depth} |g1(t) − g2(t)|)`,
/// with the sup taken over a fixed sample grid shared by all points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HullMetric {
    pub window: f64,
    pub depth: usize,
    /// Samples per period of the fastest mode.
    pub samples_per_cycle: usize,
}

impl Default for HullMetric {
    fn default() -> Self {
        Self {
            window: 20.0,
            depth: 8,
            samples_per_cycle: 16,
        }
    }
}

/// Samples of every time-dependent family member around one hull point.
#[derive(Debug, Clone, PartialEq)]
pub struct HullSignature {
    values: Vec<f64>,
    n_signals: usize,
    rings: std::sync::Arc<Vec<usize>>,
    depth: usize,
}

impl HullMetric {
    fn grid<F: SignalFamily + ?Sized>(&self, family: &F) -> (Vec<f64>, Vec<usize>) {
        let depth = self.depth.max(1);
        let ring_width = self.window / depth as f64;
        let max_cycles = family.signals().iter().map(|s| s.max_cycles()).fold(0.0, f64::max);
        let per_ring = if max_cycles > 0.0 {
            let step = 1.0 / (self.samples_per_cycle.max(2) as f64 * max_cycles);
            (ring_width / step).ceil().max(1.0) as usize
        } else {
            1
        };
        let step = ring_width / per_ring as f64;
        let half = (depth * per_ring) as i64;
        let mut times = Vec::with_capacity(2 * half as usize + 1);
        let mut rings = Vec::with_capacity(times.capacity());
        for i in -half..=half {
            times.push(i as f64 * step);
            let ring = (i.unsigned_abs() as usize).div_ceil(per_ring);
            rings.push(ring.max(1));
        }
        (times, rings)
    }

    pub fn signature<F: SignalFamily + ?Sized>(&self, family: &F, g: HullPoint) -> HullSignature {
        let (times, rings) = self.grid(family);
        let active: Vec<&QuasiPeriodicSignal> = family.signals().into_iter().filter(|s| !s.is_constant()).collect();
        let mut values = Vec::with_capacity(active.len() * times.len());
        for s in &active {
            let shifted = s.translate(g.offset);
            values.extend(times.iter().map(|&t| shifted.eval(t)));
        }
        HullSignature {
            values,
            n_signals: active.len(),
            rings: std::sync::Arc::new(rings),
            depth: self.depth.max(1),
        }
    }

    pub fn distance_between(&self, a: &HullSignature, b: &HullSignature) -> f64 {
        debug_assert_eq!(a.values.len(), b.values.len());
        let n_t = a.rings.len();
        let mut ring_sup = vec![0.0f64; a.depth + 1];
        for s in 0..a.n_signals {
            let base = s * n_t;
            for i in 0..n_t {
                let d = (a.values[base + i] - b.values[base + i]).abs();
                let r = a.rings[i];
                if d > ring_sup[r] {
                    ring_sup[r] = d;
                }
            }
        }
        let mut running = 0.0f64;
        let mut total = 0.0;
        for (j, sup) in ring_sup.iter().enumerate().skip(1) {
            running = running.max(*sup);
            total += (-(j as f64)).exp2() * running.min(1.0);
        }
        total
    }
}

/// Compact-open metric surrogate between two translates of the same family.
pub fn hull_distance<F: SignalFamily + ?Sized>(family: &F, g1: HullPoint, g2: HullPoint, metric: &HullMetric) -> f64 {
    if g1.offset == g2.offset {
        return 0.0;
    }
    let a = metric.signature(family, g1);
    let b = metric.signature(family, g2);
    metric.distance_between(&a, &b)
}

/// Values of the five coefficients at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub drift: f64,
    pub linear: f64,
    pub cubic: f64,
    pub source: f64,
    pub convective: f64,
}

impl Coefficients {
    /// `(f, f_u, f_p)` at `(u, p)`.
    #[inline]
    pub fn eval(&self, u: f64, p: f64) -> (f64, f64, f64) {
        let f = self.source + self.linear * u + self.cubic * u * u * u + self.drift * p + self.convective * u * p;
        let f_u = self.linear + 3.0 * self.cubic * u * u + self.convective * p;
        let f_p = self.drift + self.convective * u;
        (f, f_u, f_p)
    }
}

/// `f(t, u, p) = D(t) + B(t) u + C(t) u³ + A(t) p + E(t) u p`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Nonlinearity {
    /// A: coefficient of `u_x`.
    pub drift: QuasiPeriodicSignal,
    /// B: coefficient of `u`.
    pub linear: QuasiPeriodicSignal,
    /// C: coefficient of `u³`.
    pub cubic: QuasiPeriodicSignal,
    /// D: state-independent source.
    pub source: QuasiPeriodicSignal,
    /// E: coefficient of `u u_x`.
    pub convective: QuasiPeriodicSignal,
}

impl Nonlinearity {
    /// `u_t = u_xx + u_x + (f(t) + 1) u` with `f` the dyadic series.
    pub fn appendix() -> Self {
        Self {
            drift: QuasiPeriodicSignal::constant(1.0),
            linear: QuasiPeriodicSignal::appendix()
                .sum(&QuasiPeriodicSignal::constant(1.0))
                .expect("constant has no dyadic part"),
            ..Self::default()
        }
    }

    /// `u_t = u_xx + b u − u u_x`.
    pub fn burgers(linear: f64) -> Self {
        Self {
            linear: QuasiPeriodicSignal::constant(linear),
            convective: QuasiPeriodicSignal::constant(-1.0),
            ..Self::default()
        }
    }

    pub fn coefficients(&self, t: f64) -> Coefficients {
        Coefficients {
            drift: self.drift.eval(t),
            linear: self.linear.eval(t),
            cubic: self.cubic.eval(t),
            source: self.source.eval(t),
            convective: self.convective.eval(t),
        }
    }

    /// True when no coefficient depends on `u_x`.
    pub fn is_reaction_only(&self) -> bool {
        self.drift == QuasiPeriodicSignal::default() && self.convective == QuasiPeriodicSignal::default()
    }
}

impl SignalFamily for Nonlinearity {
    fn signals(&self) -> Vec<&QuasiPeriodicSignal> {
        vec![&self.drift, &self.linear, &self.cubic, &self.source, &self.convective]
    }
}

/// `(f, f_u, f_p)` of `nl` at `(t, u, p)`.
pub fn nl_eval(nl: &Nonlinearity, t: f64, u: f64, p: f64) -> (f64, f64, f64) {
    nl.coefficients(t).eval(u, p)
}
