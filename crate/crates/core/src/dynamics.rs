//! Finite-horizon surrogates for ω-limit sets: post-transient snapshots,
//! clustering in the quotient metric, recurrence and fibre statistics,
//! proximality scans and homogeneity classification.
//!
//! Everything here is evidence at a stated resolution. Backward-time notions
//! (α-limits, negative proximality) are out of reach because backward
//! parabolic integration is ill posed.

use std::fmt;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{LabError, Result};
use crate::forcing::{HullMetric, HullPoint, HullSignature, Nonlinearity};
use crate::lab::{fmt_f64, snapshot};
use crate::spectral::{evolve_with, Field, SolverOptions};
use crate::symmetry::{is_homogeneous, orbit_distance, OrbitInvariants};
use crate::zeronum::{zero_number, DEFAULT_REL_TOL};

/// Relative factor for the default clustering threshold.
pub const DEFAULT_CLUSTER_FACTOR: f64 = 1e-3;
/// Default homogeneity tolerance for snapshot flags.
pub const DEFAULT_HOMOG_TOL: f64 = 1e-6;
/// Minimum snapshot count for recurrence and fibre statistics.
pub const MIN_SNAPSHOTS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub state: Field,
    pub hull: HullPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OmegaOptions {
    /// Quotient-distance threshold; `None` uses `1e-3 ·` median snapshot norm.
    pub cluster_eps: Option<f64>,
    pub homog_tol: f64,
    /// Zero counts are taken of `u − reference`; `None` means the zero field.
    pub reference: Option<Field>,
    pub metric: HullMetric,
    pub solver: SolverOptions,
}

impl Default for OmegaOptions {
    fn default() -> Self {
        Self {
            cluster_eps: None,
            homog_tol: DEFAULT_HOMOG_TOL,
            reference: None,
            metric: HullMetric::default(),
            solver: SolverOptions::default(),
        }
    }
}

/// Post-transient samples of one forward orbit in the skew-product flow.
#[derive(Debug, Clone)]
pub struct OmegaSample {
    pub snapshots: Vec<Snapshot>,
    pub transient: f64,
    pub nonlinearity: Nonlinearity,
    pub metric: HullMetric,
    pub cluster_eps: f64,
    pub cluster_labels: Vec<usize>,
    pub homogeneous: Vec<bool>,
    pub homog_tol: f64,
    /// `z(u − reference)`, `None` when the difference vanishes or the count is ambiguous.
    pub zero_counts: Vec<Option<usize>>,
    signatures: Vec<HullSignature>,
    invariants: Vec<OrbitInvariants>,
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}

impl OmegaSample {
    /// Builds a sample from existing snapshots and computes all per-snapshot
    /// diagnostics.
    pub fn from_snapshots(
        snapshots: Vec<Snapshot>,
        transient: f64,
        nonlinearity: &Nonlinearity,
        opts: &OmegaOptions,
    ) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(LabError::InsufficientData("no snapshots after the transient".into()));
        }
        let cluster_eps = match opts.cluster_eps {
            Some(e) if e > 0.0 => e,
            Some(e) => {
                return Err(LabError::InvalidArgument(format!(
                    "cluster threshold must be positive, got {e}"
                )))
            }
            None => {
                let mut norms: Vec<f64> = snapshots.iter().map(|s| s.state.sup_norm()).collect();
                (DEFAULT_CLUSTER_FACTOR * median(&mut norms)).max(f64::MIN_POSITIVE)
            }
        };
        let signatures = snapshots
            .iter()
            .map(|s| opts.metric.signature(nonlinearity, s.hull))
            .collect();
        let invariants = snapshots.iter().map(|s| OrbitInvariants::of(&s.state)).collect();
        let homogeneous = snapshots
            .iter()
            .map(|s| is_homogeneous(&s.state, opts.homog_tol))
            .collect();
        let zero_counts = snapshots
            .iter()
            .map(|s| {
                let diff = match &opts.reference {
                    Some(r) => s.state.sub(r),
                    None => s.state.clone(),
                };
                let tol = DEFAULT_REL_TOL * diff.sup_norm();
                zero_number(&diff, tol).ok().filter(|z| !z.ambiguous).map(|z| z.count)
            })
            .collect();
        let mut sample = Self {
            snapshots,
            transient,
            nonlinearity: nonlinearity.clone(),
            metric: opts.metric,
            cluster_eps,
            cluster_labels: Vec::new(),
            homogeneous,
            homog_tol: opts.homog_tol,
            zero_counts,
            signatures,
            invariants,
        };
        sample.cluster_labels = sample.cluster(cluster_eps);
        Ok(sample)
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn n_clusters(&self) -> usize {
        self.cluster_labels.iter().max().map_or(0, |m| m + 1)
    }

    pub fn hull_distance(&self, i: usize, j: usize) -> f64 {
        if self.snapshots[i].hull == self.snapshots[j].hull {
            return 0.0;
        }
        self.metric.distance_between(&self.signatures[i], &self.signatures[j])
    }

    /// `d̃` between two snapshots.
    pub fn quotient_distance(&self, i: usize, j: usize) -> f64 {
        self.hull_distance(i, j) + orbit_distance(&self.snapshots[i].state, &self.snapshots[j].state).distance
    }

    /// Whether `d̃(i, j) < eps`, skipping the orbit search when cheap bounds decide.
    fn within(&self, i: usize, j: usize, eps: f64) -> bool {
        let hd = self.hull_distance(i, j);
        if hd >= eps {
            return false;
        }
        if hd + self.invariants[i].lower_bound(&self.invariants[j]) >= eps {
            return false;
        }
        hd + orbit_distance(&self.snapshots[i].state, &self.snapshots[j].state).distance < eps
    }

    /// Greedy leader clustering in the quotient metric: each snapshot joins
    /// the first leader closer than `eps`, otherwise founds a new cluster.
    pub fn cluster(&self, eps: f64) -> Vec<usize> {
        let mut leaders: Vec<usize> = Vec::new();
        let mut labels = Vec::with_capacity(self.len());
        for i in 0..self.len() {
            match leaders.iter().position(|&l| self.within(i, l, eps)) {
                Some(c) => labels.push(c),
                None => {
                    labels.push(leaders.len());
                    leaders.push(i);
                }
            }
        }
        labels
    }

    /// Writes one snapshot file per sample plus `index.csv` with columns
    /// `t,tau,cluster,homog,zcount` (empty `zcount` when undefined).
    pub fn write_dir(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::with_capacity(self.len() + 1);
        let index_path = dir.join("index.csv");
        let mut index = BufWriter::new(fs::File::create(&index_path)?);
        writeln!(index, "t,tau,cluster,homog,zcount")?;
        for (i, s) in self.snapshots.iter().enumerate() {
            let path = dir.join(format!("snap_{i:06}.bin"));
            let mut w = BufWriter::new(fs::File::create(&path)?);
            snapshot::write_snapshot(&mut w, s.t, s.hull.offset, &s.state)?;
            w.flush()?;
            written.push(path);
            let z = self.zero_counts[i].map_or(String::new(), |z| z.to_string());
            writeln!(
                index,
                "{},{},{},{},{}",
                fmt_f64(s.t),
                fmt_f64(s.hull.offset),
                self.cluster_labels[i],
                self.homogeneous[i] as u8,
                z
            )?;
        }
        index.flush()?;
        written.push(index_path);
        Ok(written)
    }
}

/// Runs `u0` from hull point `g` up to `horizon` and keeps the samples with
/// `t > transient`.
#[allow(clippy::too_many_arguments)]
pub fn sample_omega(
    u0: &Field,
    g: HullPoint,
    nl: &Nonlinearity,
    transient: f64,
    horizon: f64,
    dt: f64,
    stride: usize,
    opts: &OmegaOptions,
) -> Result<OmegaSample> {
    if !(transient >= 0.0 && transient < horizon) {
        return Err(LabError::InvalidArgument(format!(
            "need 0 <= transient < horizon, got {transient} and {horizon}"
        )));
    }
    let traj = evolve_with(u0, g, nl, horizon, dt, stride, &opts.solver)?;
    let snapshots = traj
        .samples
        .iter()
        .filter(|s| s.t > transient)
        .map(|s| Snapshot {
            t: s.t,
            state: s.state.clone(),
            hull: g.flow(s.t),
        })
        .collect();
    OmegaSample::from_snapshots(snapshots, transient, nl, opts)
}

fn require(s: &OmegaSample, what: &str) -> Result<()> {
    if s.len() < MIN_SNAPSHOTS {
        return Err(LabError::InsufficientData(format!(
            "{what} needs at least {MIN_SNAPSHOTS} snapshots, got {}",
            s.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterReturns {
    pub cluster: usize,
    pub gaps: Vec<f64>,
    /// `(bin lower edge, count)` over `[min gap, max gap]`.
    pub histogram: Vec<(f64, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecurrenceReport {
    pub eps: f64,
    /// Time to the next `eps`-return of each snapshot, if observed.
    pub next_return: Vec<Option<f64>>,
    pub min_gap: Option<f64>,
    pub median_gap: Option<f64>,
    pub max_gap: Option<f64>,
    pub unreturned: usize,
    pub per_cluster: Vec<ClusterReturns>,
    /// Every snapshot in the first half of the sample returns within half the span.
    pub minimal_like: bool,
}

const HISTOGRAM_BINS: usize = 10;

fn histogram(gaps: &[f64]) -> Vec<(f64, usize)> {
    if gaps.is_empty() {
        return Vec::new();
    }
    let lo = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return vec![(lo, gaps.len())];
    }
    let w = (hi - lo) / HISTOGRAM_BINS as f64;
    let mut counts = vec![0usize; HISTOGRAM_BINS];
    for g in gaps {
        let b = (((g - lo) / w) as usize).min(HISTOGRAM_BINS - 1);
        counts[b] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(b, c)| (lo + w * b as f64, c))
        .collect()
}

/// Gaps between `eps`-returns in the quotient metric.
///
/// The sample is called minimal-like when every snapshot from the first half
/// of the observed span comes back within half the span, the finite-window
/// reading of relatively dense returns.
pub fn recurrence_diagnostic(s: &OmegaSample, eps: f64) -> Result<RecurrenceReport> {
    require(s, "recurrence diagnostic")?;
    if !(eps > 0.0) {
        return Err(LabError::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let n = s.len();
    let next_return: Vec<Option<f64>> = (0..n)
        .map(|i| {
            ((i + 1)..n)
                .find(|&j| s.within(i, j, eps))
                .map(|j| s.snapshots[j].t - s.snapshots[i].t)
        })
        .collect();
    let mut found: Vec<f64> = next_return.iter().flatten().copied().collect();
    let unreturned = next_return.iter().filter(|r| r.is_none()).count();
    let (min_gap, max_gap) = if found.is_empty() {
        (None, None)
    } else {
        (
            Some(found.iter().copied().fold(f64::INFINITY, f64::min)),
            Some(found.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
        )
    };
    let median_gap = (!found.is_empty()).then(|| median(&mut found));

    let n_clusters = s.n_clusters();
    let per_cluster = (0..n_clusters)
        .map(|c| {
            let gaps: Vec<f64> = (0..n)
                .filter(|&i| s.cluster_labels[i] == c)
                .filter_map(|i| next_return[i])
                .collect();
            ClusterReturns {
                cluster: c,
                histogram: histogram(&gaps),
                gaps,
            }
        })
        .collect();

    let t0 = s.snapshots[0].t;
    let half = 0.5 * (s.snapshots[n - 1].t - t0);
    let minimal_like = (0..n)
        .filter(|&i| s.snapshots[i].t <= t0 + half)
        .all(|i| next_return[i].is_some_and(|g| g <= half));

    Ok(RecurrenceReport {
        eps,
        next_return,
        min_gap,
        median_gap,
        max_gap,
        unreturned,
        per_cluster,
        minimal_like,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiberBin {
    /// Hull point of the bin leader.
    pub center: HullPoint,
    pub members: Vec<usize>,
    /// Distinct quotient classes among the members.
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiberReport {
    pub hull_eps: f64,
    pub orbit_eps: f64,
    pub base_bins: Vec<FiberBin>,
    pub max_multiplicity: usize,
    pub singleton_fraction: f64,
}

/// Bins snapshots by hull distance (greedy leaders at `hull_eps`) and counts
/// distinct orbit classes per bin at `orbit_eps`.
pub fn fiber_multiplicity(s: &OmegaSample, hull_eps: f64, orbit_eps: f64) -> Result<FiberReport> {
    require(s, "fibre multiplicity")?;
    if !(hull_eps > 0.0 && orbit_eps > 0.0) {
        return Err(LabError::InvalidArgument("fibre thresholds must be positive".into()));
    }
    let mut leaders: Vec<usize> = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for i in 0..s.len() {
        match leaders.iter().position(|&l| s.hull_distance(i, l) < hull_eps) {
            Some(b) => members[b].push(i),
            None => {
                leaders.push(i);
                members.push(vec![i]);
            }
        }
    }
    let base_bins: Vec<FiberBin> = leaders
        .iter()
        .zip(members)
        .map(|(&l, m)| {
            let mut classes: Vec<usize> = Vec::new();
            for &i in &m {
                let known = classes.iter().any(|&c| {
                    s.invariants[i].lower_bound(&s.invariants[c]) < orbit_eps
                        && orbit_distance(&s.snapshots[i].state, &s.snapshots[c].state).distance < orbit_eps
                });
                if !known {
                    classes.push(i);
                }
            }
            FiberBin {
                center: s.snapshots[l].hull,
                members: m,
                multiplicity: classes.len(),
            }
        })
        .collect();
    let max_multiplicity = base_bins.iter().map(|b| b.multiplicity).max().unwrap_or(0);
    let singles = base_bins.iter().filter(|b| b.multiplicity == 1).count();
    Ok(FiberReport {
        hull_eps,
        orbit_eps,
        singleton_fraction: singles as f64 / base_bins.len() as f64,
        max_multiplicity,
        base_bins,
    })
}

/// Lower quantile of hull distances between evenly spread snapshots, a
/// scale-aware default for `hull_eps`.
pub fn default_hull_eps(s: &OmegaSample, quantile: f64) -> f64 {
    let picks: Vec<usize> = if s.len() <= 200 {
        (0..s.len()).collect()
    } else {
        (0..200).map(|k| k * (s.len() - 1) / 199).collect()
    };
    let mut d = Vec::new();
    for (a, &i) in picks.iter().enumerate() {
        for &j in &picks[a + 1..] {
            d.push(s.hull_distance(i, j));
        }
    }
    if d.is_empty() {
        return 0.0;
    }
    d.sort_by(|a, b| a.total_cmp(b));
    d[((d.len() - 1) as f64 * quantile.clamp(0.0, 1.0)).round() as usize]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProximalityReport {
    pub forward_proximal: bool,
    /// Lag of the first `eps`-approach.
    pub first_lag: Option<f64>,
    pub min_distance: f64,
    pub lag_at_min: f64,
    /// Hull distance of the starting pair.
    pub initial_hull_distance: f64,
}

/// Scans `a[i + k]` against `b[j + k]` for `k ≥ 0`, i.e. both orbits
/// advanced by equal times, looking for quotient distance below `eps`.
pub fn proximality_between(
    a: &OmegaSample,
    i: usize,
    b: &OmegaSample,
    j: usize,
    eps: f64,
) -> Result<ProximalityReport> {
    if i >= a.len() || j >= b.len() {
        return Err(LabError::InsufficientData(format!(
            "snapshot index out of range ({i}, {j})"
        )));
    }
    let steps = (a.len() - i).min(b.len() - j);
    if steps < 2 {
        return Err(LabError::InsufficientData("no forward samples to scan".into()));
    }
    let dist = |k: usize| {
        let (x, y) = (i + k, j + k);
        let hd = if a.snapshots[x].hull == b.snapshots[y].hull {
            0.0
        } else {
            a.metric.distance_between(&a.signatures[x], &b.signatures[y])
        };
        hd + orbit_distance(&a.snapshots[x].state, &b.snapshots[y].state).distance
    };
    let t0 = a.snapshots[i].t;
    let mut report = ProximalityReport {
        forward_proximal: false,
        first_lag: None,
        min_distance: f64::INFINITY,
        lag_at_min: 0.0,
        initial_hull_distance: 0.0,
    };
    for k in 0..steps {
        let d = dist(k);
        if k == 0 {
            report.initial_hull_distance = if a.snapshots[i].hull == b.snapshots[j].hull {
                0.0
            } else {
                a.metric.distance_between(&a.signatures[i], &b.signatures[j])
            };
        }
        let lag = a.snapshots[i + k].t - t0;
        if d < report.min_distance {
            report.min_distance = d;
            report.lag_at_min = lag;
        }
        if d < eps && report.first_lag.is_none() {
            report.first_lag = Some(lag);
            report.forward_proximal = true;
        }
    }
    Ok(report)
}

/// [`proximality_between`] for two snapshots of one sample.
pub fn proximality(s: &OmegaSample, i: usize, j: usize, eps: f64) -> Result<ProximalityReport> {
    proximality_between(s, i, s, j, eps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Homogeneity {
    Homogeneous,
    Inhomogeneous,
    Mixed,
}

impl fmt::Display for Homogeneity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Homogeneous => "HOMOGENEOUS",
            Self::Inhomogeneous => "INHOMOGENEOUS",
            Self::Mixed => "MIXED",
        })
    }
}

pub fn classify_homogeneity(s: &OmegaSample, tol: f64) -> Homogeneity {
    let flags: Vec<bool> = s.snapshots.iter().map(|x| is_homogeneous(&x.state, tol)).collect();
    match (flags.iter().any(|&h| h), flags.iter().any(|&h| !h)) {
        (true, true) => Homogeneity::Mixed,
        (true, false) => Homogeneity::Homogeneous,
        _ => Homogeneity::Inhomogeneous,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowMinimum {
    pub m: i32,
    pub t_lo: f64,
    pub t_hi: f64,
    pub min_sup: f64,
    pub samples: usize,
}

/// Minimum snapshot sup norm over each dyadic window `[2^m, 2^{m+1}]`
/// that contains samples.
pub fn dyadic_window_minima(s: &OmegaSample) -> Vec<WindowMinimum> {
    let mut out: Vec<WindowMinimum> = Vec::new();
    for snap in s.snapshots.iter().filter(|x| x.t >= 1.0) {
        let m = snap.t.log2().floor() as i32;
        let sup = snap.state.sup_norm();
        match out.last_mut() {
            Some(w) if w.m == m => {
                w.min_sup = w.min_sup.min(sup);
                w.samples += 1;
            }
            _ => out.push(WindowMinimum {
                m,
                t_lo: 2f64.powi(m),
                t_hi: 2f64.powi(m + 1),
                min_sup: sup,
                samples: 1,
            }),
        }
    }
    out
}

/// `min_{t_k ≤ t} ‖u(t_k)‖_∞` at every snapshot time.
pub fn running_minimum(s: &OmegaSample) -> Vec<(f64, f64)> {
    let mut m = f64::INFINITY;
    s.snapshots
        .iter()
        .map(|x| {
            m = m.min(x.state.sup_norm());
            (x.t, m)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forcing::QuasiPeriodicSignal;
    use crate::spectral::CircleGrid;
    use crate::symmetry::shift;

    fn wave_snapshots(g: &CircleGrid, amps: &[f64], dt: f64) -> Vec<Snapshot> {
        amps.iter()
            .enumerate()
            .map(|(k, &a)| {
                let t = dt * (k + 1) as f64;
                Snapshot {
                    t,
                    state: Field::from_fn(g, |x| a * (x + t).sin()),
                    hull: HullPoint::new(t),
                }
            })
            .collect()
    }

    #[test]
    fn classification_of_flags() {
        let g = CircleGrid::new(16).unwrap();
        let nl = Nonlinearity::default();
        let snaps = wave_snapshots(&g, &[1.0, 1e-9, 0.5], 1.0);
        let s = OmegaSample::from_snapshots(snaps, 0.0, &nl, &OmegaOptions::default()).unwrap();
        assert_eq!(classify_homogeneity(&s, 1e-6), Homogeneity::Mixed);
        assert_eq!(s.homogeneous, vec![false, true, false]);
        assert_eq!(s.zero_counts, vec![Some(2), Some(2), Some(2)]);
        let snaps = wave_snapshots(&g, &[1.0, 0.5], 1.0);
        let s = OmegaSample::from_snapshots(snaps, 0.0, &nl, &OmegaOptions::default()).unwrap();
        assert_eq!(classify_homogeneity(&s, 1e-6), Homogeneity::Inhomogeneous);
        assert_eq!(Homogeneity::Mixed.to_string(), "MIXED");
    }

    #[test]
    fn shifted_copies_share_a_cluster() {
        // autonomous nonlinearity: hull distance vanishes, so rotating waves of
        // equal amplitude form one quotient class
        let g = CircleGrid::new(32).unwrap();
        let nl = Nonlinearity::burgers(0.0);
        let snaps = wave_snapshots(&g, &[1.0; 20], 0.37);
        let s = OmegaSample::from_snapshots(snaps, 0.0, &nl, &OmegaOptions::default()).unwrap();
        assert_eq!(s.n_clusters(), 1);
        let half = s.cluster(0.5 * s.cluster_eps);
        assert!(half.iter().all(|&l| l == 0));
    }

    #[test]
    fn clustering_ignores_representative_choice() {
        let g = CircleGrid::new(32).unwrap();
        let nl = Nonlinearity::burgers(0.0);
        let amps: Vec<f64> = (0..30).map(|k| 1.0 + 0.01 * (k % 3) as f64).collect();
        let snaps = wave_snapshots(&g, &amps, 0.5);
        let a = OmegaSample::from_snapshots(snaps.clone(), 0.0, &nl, &OmegaOptions::default()).unwrap();
        let rotated: Vec<Snapshot> = snaps
            .into_iter()
            .enumerate()
            .map(|(k, s)| Snapshot {
                state: shift(&s.state, g.node(k % 32)),
                ..s
            })
            .collect();
        let b = OmegaSample::from_snapshots(rotated, 0.0, &nl, &OmegaOptions::default()).unwrap();
        assert_eq!(a.cluster_labels, b.cluster_labels);
        assert_eq!(a.n_clusters(), 3);
    }

    #[test]
    fn small_samples_are_rejected() {
        let g = CircleGrid::new(16).unwrap();
        let s = OmegaSample::from_snapshots(
            wave_snapshots(&g, &[1.0; 10], 1.0),
            0.0,
            &Nonlinearity::default(),
            &OmegaOptions::default(),
        )
        .unwrap();
        assert!(matches!(
            recurrence_diagnostic(&s, 0.1),
            Err(LabError::InsufficientData(_))
        ));
        assert!(matches!(
            fiber_multiplicity(&s, 0.1, 0.1),
            Err(LabError::InsufficientData(_))
        ));
    }

    #[test]
    fn homogeneous_attractor_is_minimal_like_one_cover() {
        // u_t = u_xx − u + 0.2 relaxes to the constant 0.2
        let g = CircleGrid::new(16).unwrap();
        let nl = Nonlinearity {
            linear: QuasiPeriodicSignal::constant(-1.0),
            source: QuasiPeriodicSignal::constant(0.2),
            ..Nonlinearity::default()
        };
        let u0 = Field::from_fn(&g, |x| 0.5 * x.sin() + 0.1 * (2.0 * x).cos());
        let s = sample_omega(
            &u0,
            HullPoint::default(),
            &nl,
            20.0,
            40.0,
            0.01,
            10,
            &OmegaOptions::default(),
        )
        .unwrap();
        assert!(s.len() >= MIN_SNAPSHOTS);
        for snap in &s.snapshots {
            assert!(snap.state.values().iter().all(|v| (v - 0.2).abs() < 1e-4));
        }
        assert_eq!(classify_homogeneity(&s, 1e-6), Homogeneity::Homogeneous);
        let r = recurrence_diagnostic(&s, 1e-3).unwrap();
        assert!(r.minimal_like);
        let f = fiber_multiplicity(&s, 0.05, 1e-3).unwrap();
        assert_eq!(f.max_multiplicity, 1);
        assert_eq!(f.singleton_fraction, 1.0);
        let p = proximality(&s, 0, 10, 1e-3).unwrap();
        assert!(p.forward_proximal);
    }

    #[test]
    fn periodic_returns_cluster_at_the_period() {
        // homogeneous forced relaxation u' = −u + sin t has period 2π
        let g = CircleGrid::new(16).unwrap();
        let nl = Nonlinearity {
            linear: QuasiPeriodicSignal::constant(-1.0),
            source: QuasiPeriodicSignal::from_modes(0.0, &[(1.0, 1.0, 0.0)]).unwrap(),
            ..Nonlinearity::default()
        };
        let period = std::f64::consts::TAU;
        let dt = period / 6400.0;
        let u0 = Field::constant(&g, 0.3);
        let s = sample_omega(
            &u0,
            HullPoint::default(),
            &nl,
            6.0 * period,
            10.0 * period,
            dt,
            100,
            &OmegaOptions::default(),
        )
        .unwrap();
        let r = recurrence_diagnostic(&s, 1e-3).unwrap();
        let gaps: Vec<f64> = r.next_return.iter().flatten().copied().collect();
        assert!(!gaps.is_empty());
        assert!(gaps.iter().all(|g| (g - period).abs() < 1e-9), "{gaps:?}");
        assert!(r.minimal_like);
    }

    #[test]
    fn running_minimum_is_non_increasing() {
        let g = CircleGrid::new(16).unwrap();
        let amps: Vec<f64> = (0..40).map(|k| 1.0 + (k as f64).sin()).collect();
        let s = OmegaSample::from_snapshots(
            wave_snapshots(&g, &amps, 0.5),
            0.0,
            &Nonlinearity::default(),
            &OmegaOptions::default(),
        )
        .unwrap();
        let rm = running_minimum(&s);
        assert!(rm.windows(2).all(|w| w[1].1 <= w[0].1));
        let w = dyadic_window_minima(&s);
        assert_eq!(w[0].m, 0);
        assert_eq!(w.iter().map(|x| x.samples).sum::<usize>(), 39);
    }

    #[test]
    fn persisted_directory_lists_every_snapshot() {
        let g = CircleGrid::new(16).unwrap();
        let s = OmegaSample::from_snapshots(
            wave_snapshots(&g, &[1.0, 0.5, 0.25], 1.0),
            0.0,
            &Nonlinearity::default(),
            &OmegaOptions::default(),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = s.write_dir(dir.path()).unwrap();
        assert_eq!(files.len(), 4);
        let index = fs::read_to_string(dir.path().join("index.csv")).unwrap();
        let lines: Vec<&str> = index.lines().collect();
        assert_eq!(lines[0], "t,tau,cluster,homog,zcount");
        assert_eq!(lines.len(), 4);
        let rec = snapshot::read_snapshot(fs::File::open(&files[1]).unwrap()).unwrap();
        assert_eq!(rec.t, 2.0);
        assert_eq!(rec.into_field(&g).unwrap(), s.snapshots[1].state);
    }
}
