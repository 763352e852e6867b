//! Scenario execution: evolve, run the enabled diagnostics, persist.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::config::{ScenarioConfig, SpectrumBase};
use super::fmt_f64;
use super::manifest::{sha256_hex, unix_now, RunManifest, RunStatus};
use super::snapshot::write_snapshot;
use crate::circleflow::{extract_phase, verify_reduction};
use crate::dynamics::{
    classify_homogeneity, dyadic_window_minima, fiber_multiplicity, recurrence_diagnostic, OmegaOptions, OmegaSample,
    Snapshot,
};
use crate::error::LabError;
use crate::spectral::{evolve_with, Field, SolverOptions, Trajectory};
use crate::spectrum::{lyapunov_exponents, LyapunovOptions};
use crate::zeronum::monitor_difference;

pub const SCENARIO_FILE: &str = "scenario.cfg";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const SNAPSHOT_DIR: &str = "snapshots";

#[derive(Debug, Error)]
enum RunError {
    #[error(transparent)]
    Lab(#[from] LabError),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

struct Run<'a> {
    cfg: &'a ScenarioConfig,
    root: PathBuf,
    manifest: RunManifest,
    summary: String,
}

/// Runs the scenario into `cfg.output_dir` and writes `manifest.json` there.
///
/// Module errors do not escape: they end up in the manifest with status
/// [`RunStatus::Failed`]. Everything except the manifest's wall times is a
/// function of the configuration.
pub fn run_scenario(cfg: &ScenarioConfig) -> RunManifest {
    let text = cfg.serialize();
    let mut run = Run {
        cfg,
        root: PathBuf::from(&cfg.output_dir),
        manifest: RunManifest::new(sha256_hex(cfg.experiment_text().as_bytes())),
        summary: String::new(),
    };
    let outcome = run.execute(&text);
    if let Err(e) = &outcome {
        run.manifest.status = RunStatus::Failed;
        run.manifest.error = Some(e.to_string());
        let _ = writeln!(run.summary, "\nFAILED: {e}");
    } else if !run.manifest.violations.is_empty() {
        run.manifest.status = RunStatus::Violation;
    }
    if run.root.is_dir() {
        if let Err(e) = run.finish() {
            run.manifest.status = RunStatus::Failed;
            run.manifest.error.get_or_insert_with(|| format!("i/o error: {e}"));
        }
    }
    run.manifest.finished_unix = unix_now();
    if run.root.is_dir() {
        let _ = run.manifest.write(&run.root);
    }
    run.manifest
}

fn create(path: &Path) -> io::Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path)?))
}

/// Wraps into `(−π, π]`.
fn wrap(x: f64) -> f64 {
    let r = (x + PI).rem_euclid(TAU) - PI;
    if r == -PI {
        PI
    } else {
        r
    }
}

impl Run<'_> {
    fn solver(&self) -> SolverOptions {
        SolverOptions {
            blowup_ceiling: self.cfg.tolerances.blowup,
            odd_harmonics: self.cfg.odd_harmonics,
        }
    }

    fn record(&mut self, path: &Path) -> io::Result<()> {
        self.manifest.add_artifact(&self.root, path)
    }

    fn write_file(&mut self, name: &str, f: impl FnOnce(&mut BufWriter<fs::File>) -> io::Result<()>) -> io::Result<()> {
        let path = self.root.join(name);
        let mut w = create(&path)?;
        f(&mut w)?;
        w.flush()?;
        drop(w);
        self.record(&path)
    }

    fn finish(&mut self) -> io::Result<()> {
        let path = self.root.join(SUMMARY_FILE);
        fs::write(&path, &self.summary)?;
        self.record(&path)
    }

    fn execute(&mut self, text: &str) -> Result<(), RunError> {
        let cfg = self.cfg;
        fs::create_dir_all(&self.root)?;
        self.write_file(SCENARIO_FILE, |w| w.write_all(text.as_bytes()))?;
        let _ = writeln!(
            self.summary,
            "scenario {}\ngrid n = {}, dt = {}, t_end = {}, stride = {}, odd harmonics = {}",
            &self.manifest.config_hash[..16],
            cfg.n,
            cfg.dt,
            cfg.t_end,
            cfg.stride,
            cfg.odd_harmonics
        );

        let nl = cfg.nonlinearity();
        let g = cfg.hull_point();
        let u0 = cfg.initial_state();
        let traj = evolve_with(&u0, g, &nl, cfg.t_end, cfg.dt, cfg.stride, &self.solver())?;
        self.write_trajectory(&traj)?;

        if cfg.diagnostics.zeros {
            self.zeros(&traj)?;
        }
        if cfg.diagnostics.phase {
            self.phase(&traj)?;
        }
        if cfg.diagnostics.omega {
            self.omega(&traj)?;
        }
        if cfg.diagnostics.spectrum {
            self.spectrum()?;
        }
        Ok(())
    }

    fn write_trajectory(&mut self, traj: &Trajectory) -> Result<(), RunError> {
        let dir = self.root.join(SNAPSHOT_DIR);
        fs::create_dir_all(&dir)?;
        self.manifest.snapshot_dir = Some(SNAPSHOT_DIR.to_string());
        for (i, s) in traj.samples.iter().enumerate() {
            let path = dir.join(format!("snap_{i:06}.bin"));
            let mut w = create(&path)?;
            write_snapshot(&mut w, s.t, traj.hull_point(i).offset, &s.state)?;
            w.flush()?;
            drop(w);
            self.record(&path)?;
        }
        self.write_file("trajectory.csv", |w| {
            writeln!(w, "t,tau,max,min,sup")?;
            for (i, s) in traj.samples.iter().enumerate() {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    fmt_f64(s.t),
                    fmt_f64(traj.hull_point(i).offset),
                    fmt_f64(s.state.max()),
                    fmt_f64(s.state.min()),
                    fmt_f64(s.state.sup_norm())
                )?;
            }
            Ok(())
        })?;
        let last = traj.last().expect("trajectory has its initial sample");
        let _ = writeln!(
            self.summary,
            "samples = {}, final t = {:.6}, final sup norm = {:.6e}",
            traj.len(),
            last.t,
            last.state.sup_norm()
        );
        Ok(())
    }

    fn zeros(&mut self, traj: &Trajectory) -> Result<(), RunError> {
        let cfg = self.cfg;
        let v0 = cfg.companion.field(&cfg.grid(), 1.0);
        let other = evolve_with(
            &v0,
            cfg.hull_point(),
            &cfg.nonlinearity(),
            cfg.t_end,
            cfg.dt,
            cfg.stride,
            &self.solver(),
        )?;
        let series = monitor_difference(traj, &other, cfg.tolerances.zero_rel)?;
        self.write_file("zeros.csv", |w| series.write_csv(w))?;
        let resolved: Vec<usize> = series.counts.iter().filter(|c| !c.ambiguous).map(|c| c.count).collect();
        let ambiguous = series.counts.len() - resolved.len();
        let _ = writeln!(self.summary, "\n[zeros] companion = {}", cfg.companion);
        let _ = writeln!(
            self.summary,
            "z(u - v): first = {}, last = {}, drops = {}, ambiguous samples = {}",
            resolved.first().map_or("-".into(), |z| z.to_string()),
            resolved.last().map_or("-".into(), |z| z.to_string()),
            series.drop_events.len(),
            ambiguous
        );
        if series.is_monotone() {
            let _ = writeln!(self.summary, "zero number non-increasing: yes");
        } else {
            let _ = writeln!(
                self.summary,
                "zero number non-increasing: NO ({} increases)",
                series.violations.len()
            );
            for v in &series.violations {
                self.manifest
                    .violations
                    .push(format!("zero number rose from {} to {} at t = {}", v.from, v.to, v.t));
            }
        }
        Ok(())
    }

    fn phase(&mut self, traj: &Trajectory) -> Result<(), RunError> {
        let tol = &self.cfg.tolerances;
        let track = extract_phase(traj, TAU)?;
        let report = verify_reduction(traj, &track, tol.hull_eps)?;
        self.write_file("phase.csv", |w| track.write_csv(w))?;
        let c0 = track.c[0];
        let deviation = track
            .times
            .iter()
            .zip(&track.c)
            .map(|(t, c)| wrap(c - c0 - t).abs())
            .fold(0.0, f64::max);
        let t_last = track.times.last().copied().unwrap_or(0.0);
        let verdict = if deviation <= tol.phase { "yes" } else { "no" };
        let _ = writeln!(self.summary, "\n[phase]");
        let _ = writeln!(
            self.summary,
            "c(t) - c(0) = t (mod 2pi): {verdict}, max deviation {deviation:.3e} on [0, {t_last}] (tolerance {})",
            tol.phase
        );
        let _ = writeln!(
            self.summary,
            "reduced ODE residual = {:.3e}, spikes = {}, fibre pairs = {}, max fibre orbit distance = {:.3e}",
            report.ode_residual,
            report.spikes.len(),
            report.fiber_pairs.len(),
            report.max_fiber_orbit_distance
        );
        Ok(())
    }

    fn omega(&mut self, traj: &Trajectory) -> Result<(), RunError> {
        let cfg = self.cfg;
        let tol = &cfg.tolerances;
        let snapshots: Vec<Snapshot> = traj
            .samples
            .iter()
            .enumerate()
            .filter(|(_, s)| s.t > cfg.transient)
            .map(|(i, s)| Snapshot {
                t: s.t,
                state: s.state.clone(),
                hull: traj.hull_point(i),
            })
            .collect();
        let opts = OmegaOptions {
            cluster_eps: tol.cluster,
            homog_tol: tol.homog,
            solver: self.solver(),
            ..OmegaOptions::default()
        };
        let sample = OmegaSample::from_snapshots(snapshots, cfg.transient, &traj.nonlinearity, &opts)?;
        for path in sample.write_dir(&self.root.join("omega"))? {
            self.record(&path)?;
        }
        let s = &mut self.summary;
        let _ = writeln!(s, "\n[omega] transient = {}", cfg.transient);
        let _ = writeln!(
            s,
            "snapshots = {}, clusters = {} at eps = {:.3e}, homogeneity = {}",
            sample.len(),
            sample.n_clusters(),
            sample.cluster_eps,
            classify_homogeneity(&sample, tol.homog)
        );
        let orbit_eps = tol.orbit_eps.unwrap_or(sample.cluster_eps);
        match fiber_multiplicity(&sample, tol.hull_eps, orbit_eps) {
            Ok(f) => {
                let _ = writeln!(
                    s,
                    "fibre multiplicity: max = {}, singleton fraction = {:.3}, bins = {} (hull eps {}, orbit eps {:.3e})",
                    f.max_multiplicity,
                    f.singleton_fraction,
                    f.base_bins.len(),
                    f.hull_eps,
                    f.orbit_eps
                );
            }
            Err(LabError::InsufficientData(why)) => {
                let _ = writeln!(s, "fibre multiplicity: skipped, {why}");
            }
            Err(e) => return Err(e.into()),
        }
        match recurrence_diagnostic(&sample, sample.cluster_eps) {
            Ok(r) => {
                let gap = |g: Option<f64>| g.map_or("-".to_string(), |x| format!("{x:.4}"));
                let _ = writeln!(
                    s,
                    "recurrence: gaps min/median/max = {}/{}/{}, unreturned = {}, minimal-like = {}",
                    gap(r.min_gap),
                    gap(r.median_gap),
                    gap(r.max_gap),
                    r.unreturned,
                    if r.minimal_like { "yes" } else { "no" }
                );
            }
            Err(LabError::InsufficientData(why)) => {
                let _ = writeln!(s, "recurrence: skipped, {why}");
            }
            Err(e) => return Err(e.into()),
        }
        let minima = dyadic_window_minima(&sample);
        if !minima.is_empty() {
            let _ = writeln!(s, "minimum sup norm per window [2^m, 2^(m+1)]:");
            for w in minima {
                let _ = writeln!(s, "  m = {:>2}: {:.6e} ({} samples)", w.m, w.min_sup, w.samples);
            }
        }
        Ok(())
    }

    fn spectrum(&mut self) -> Result<(), RunError> {
        let cfg = self.cfg;
        let sp = &cfg.spectrum;
        let grid = crate::spectral::CircleGrid::new(sp.n)?;
        let u0 = match sp.base {
            SpectrumBase::Zero => Field::zeros(&grid),
            SpectrumBase::Trajectory => cfg.ic.field(&grid, cfg.ic_scale),
        };
        let base = evolve_with(
            &u0,
            cfg.hull_point(),
            &cfg.nonlinearity(),
            sp.window,
            sp.dt,
            1,
            &self.solver(),
        )?;
        let est = lyapunov_exponents(
            &base,
            &LyapunovOptions {
                frame_size: sp.frame,
                reorth_every: sp.reorth_every,
                window: sp.window,
                eps_c: cfg.tolerances.center_band,
                seed: cfg.seed,
            },
        )?;
        self.write_file("spectrum.csv", |w| est.write_csv(w))?;
        self.write_file("spectrum_summary.csv", |w| est.write_summary_csv(w))?;
        let s = &mut self.summary;
        let base_name = match sp.base {
            SpectrumBase::Zero => "zero solution",
            SpectrumBase::Trajectory => "scenario solution",
        };
        let _ = writeln!(
            s,
            "\n[spectrum] about the {base_name}, n = {}, dt = {}, window = {}, reorthonormalise every {} steps",
            sp.n, sp.dt, sp.window, sp.reorth_every
        );
        let _ = writeln!(s, "{:>4} {:>14} {:>12}", "rank", "exponent", "stderr");
        for (k, (l, e)) in est.exponents.iter().zip(&est.stderr).enumerate() {
            let _ = writeln!(s, "{:>4} {:>14.6} {:>12.3e}", k + 1, l, e);
        }
        let _ = writeln!(
            s,
            "dim_u = {}, dim_c = {}, N_u = {} (centre band {})",
            est.dim_u, est.dim_c, est.n_u, est.eps_c
        );
        Ok(())
    }
}
