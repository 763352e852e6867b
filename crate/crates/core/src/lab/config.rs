//! Scenario files: `[section]` headers, one `key = value` per line, `#`
//! comments. Parsing fills defaults, so [`ScenarioConfig::serialize`] always
//! writes the complete canonical form.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::forcing::{HullPoint, Nonlinearity, QuasiPeriodicSignal};
use crate::spectral::{CircleGrid, Field};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("invalid value for `{key}`: {reason}")]
    Validation { key: String, reason: String },
}

fn parse_err(line: usize, reason: impl Into<String>) -> ConfigError {
    ConfigError::Parse {
        line,
        reason: reason.into(),
    }
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        key: key.to_string(),
        reason: reason.into(),
    }
}

/// `(amplitude, angular frequency, phase)` of `a sin(ω t + θ)`.
pub type ModeTriple = (f64, f64, f64);

#[derive(Debug, Clone, PartialEq)]
pub enum ForcingKind {
    /// No shared forcing signal.
    None,
    /// The dyadic series, adaptive or truncated after `depth` terms.
    Appendix {
        depth: Option<u32>,
    },
    Modes(Vec<ModeTriple>),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoefficientSpec {
    pub mean: f64,
    /// Multiple of the shared forcing signal added to the coefficient.
    pub forcing: f64,
    pub modes: Vec<ModeTriple>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    Zero,
    /// `sin(k x)`.
    Sin(u32),
    Const(f64),
    /// Uniform random Fourier coefficients for modes `0..=modes`.
    Random {
        seed: u64,
        modes: u32,
    },
}

impl InitialCondition {
    pub fn field(&self, grid: &CircleGrid, scale: f64) -> Field {
        let f = match self {
            Self::Zero => Field::zeros(grid),
            Self::Sin(k) => {
                let k = *k as f64;
                Field::from_fn(grid, |x| (k * x).sin())
            }
            Self::Const(c) => Field::constant(grid, *c),
            Self::Random { seed, modes } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let coeffs: Vec<(f64, f64)> = (0..=*modes)
                    .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                Field::from_fn(grid, |x| {
                    coeffs
                        .iter()
                        .enumerate()
                        .map(|(k, (a, b))| {
                            let kx = k as f64 * x;
                            if k == 0 {
                                *a
                            } else {
                                a * kx.cos() + b * kx.sin()
                            }
                        })
                        .sum()
                })
            }
        };
        if scale == 1.0 {
            f
        } else {
            f.scale(scale)
        }
    }
}

impl std::fmt::Display for InitialCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Zero => write!(f, "zero"),
            Self::Sin(1) => write!(f, "sin"),
            Self::Sin(k) => write!(f, "sin_k:{k}"),
            Self::Const(c) => write!(f, "const:{c}"),
            Self::Random { seed, modes } => write!(f, "random:{seed}:{modes}"),
        }
    }
}

fn parse_ic(key: &str, s: &str) -> Result<InitialCondition, ConfigError> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let num = |v: &str| {
        v.parse::<f64>()
            .map_err(|_| invalid(key, format!("`{v}` is not a number")))
    };
    let int = |v: &str| {
        v.parse::<u64>()
            .map_err(|_| invalid(key, format!("`{v}` is not a nonnegative integer")))
    };
    match parts.as_slice() {
        ["zero"] => Ok(InitialCondition::Zero),
        ["sin"] => Ok(InitialCondition::Sin(1)),
        ["sin_k", k] => {
            let k = int(k)?;
            if k == 0 || k > u32::MAX as u64 {
                return Err(invalid(key, "sin_k needs a positive wavenumber"));
            }
            Ok(InitialCondition::Sin(k as u32))
        }
        ["const", c] => {
            let c = num(c)?;
            if !c.is_finite() {
                return Err(invalid(key, "constant must be finite"));
            }
            Ok(InitialCondition::Const(c))
        }
        ["random", seed, modes] => {
            let modes = int(modes)?;
            if modes > u32::MAX as u64 {
                return Err(invalid(key, "too many modes"));
            }
            Ok(InitialCondition::Random {
                seed: int(seed)?,
                modes: modes as u32,
            })
        }
        _ => Err(invalid(
            key,
            format!("unknown preset `{s}` (expected sin, sin_k:K, const:c, random:seed:modes or zero)"),
        )),
    }
}

fn parse_modes(key: &str, s: &str) -> Result<Vec<ModeTriple>, ConfigError> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|item| {
            let p: Vec<&str> = item.split(':').map(str::trim).collect();
            if p.len() != 3 {
                return Err(invalid(key, format!("mode `{}` is not amp:freq:phase", item.trim())));
            }
            let v = p
                .iter()
                .map(|x| {
                    x.parse::<f64>()
                        .map_err(|_| invalid(key, format!("`{x}` is not a number")))
                })
                .collect::<Result<Vec<f64>, _>>()?;
            if v.iter().any(|x| !x.is_finite()) {
                return Err(invalid(key, "mode entries must be finite"));
            }
            if !(v[1] > 0.0) {
                return Err(invalid(key, format!("frequency must be positive, got {}", v[1])));
            }
            Ok((v[0], v[1], v[2]))
        })
        .collect()
}

fn fmt_modes(modes: &[ModeTriple]) -> String {
    modes
        .iter()
        .map(|(a, w, p)| format!("{a}:{w}:{p}"))
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Diagnostics {
    pub zeros: bool,
    pub omega: bool,
    pub phase: bool,
    pub spectrum: bool,
}

impl Diagnostics {
    pub const NONE: Self = Self {
        zeros: false,
        omega: false,
        phase: false,
        spectrum: false,
    };

    pub fn any(&self) -> bool {
        self.zeros || self.omega || self.phase || self.spectrum
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumBase {
    /// Linearise about the zero solution.
    Zero,
    /// Linearise about the scenario's own solution.
    Trajectory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumConfig {
    pub frame: usize,
    pub reorth_every: usize,
    pub window: f64,
    pub base: SpectrumBase,
    /// Grid size and step of the base run.
    pub n: usize,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    pub center_band: f64,
    pub zero_rel: f64,
    pub homog: f64,
    /// `None` keeps the median-norm default.
    pub cluster: Option<f64>,
    pub hull_eps: f64,
    /// `None` reuses the clustering threshold.
    pub orbit_eps: Option<f64>,
    pub blowup: f64,
    /// Phase reduction tolerance for the `c(t) − c(0) ≈ t` verdict.
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub n: usize,
    pub odd_harmonics: bool,
    pub dt: f64,
    pub t_end: f64,
    pub transient: f64,
    pub stride: usize,
    pub forcing: ForcingKind,
    pub offset: f64,
    /// A, B, C, D, E.
    pub coefficients: [CoefficientSpec; 5],
    pub ic: InitialCondition,
    pub ic_scale: f64,
    pub diagnostics: Diagnostics,
    pub spectrum: SpectrumConfig,
    pub companion: InitialCondition,
    pub tolerances: Tolerances,
    pub output_dir: String,
    pub seed: u64,
}

pub const COEFFICIENT_NAMES: [&str; 5] = ["A", "B", "C", "D", "E"];

const SECTIONS: &[(&str, &[&str])] = &[
    ("grid", &["n", "odd_harmonics"]),
    ("time", &["dt", "t_end", "transient", "stride"]),
    ("forcing", &["kind", "modes", "depth", "offset"]),
    (
        "nonlinearity",
        &[
            "A",
            "A.forcing",
            "A.modes",
            "B",
            "B.forcing",
            "B.modes",
            "C",
            "C.forcing",
            "C.modes",
            "D",
            "D.forcing",
            "D.modes",
            "E",
            "E.forcing",
            "E.modes",
        ],
    ),
    ("initial", &["ic", "scale"]),
    ("diagnostics", &["zeros", "omega", "phase", "spectrum"]),
    ("spectrum", &["frame", "reorth_every", "window", "base", "n", "dt"]),
    ("zeros", &["companion"]),
    (
        "tolerances",
        &[
            "center_band",
            "zero_rel",
            "homog",
            "cluster",
            "hull_eps",
            "orbit_eps",
            "blowup",
            "phase",
        ],
    ),
    ("output", &["dir"]),
    ("run", &["seed"]),
];

struct Entries {
    map: BTreeMap<String, String>,
}

impl Entries {
    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    fn f64(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => {
                let x = v
                    .parse::<f64>()
                    .map_err(|_| invalid(key, format!("`{v}` is not a number")))?;
                if !x.is_finite() {
                    return Err(invalid(key, "must be finite"));
                }
                Ok(x)
            }
        }
    }

    fn opt_f64(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.map.get(key).map(String::as_str) {
            None | Some("auto") => {
                self.take(key);
                Ok(None)
            }
            Some(_) => self.f64(key, 0.0).map(Some),
        }
    }

    fn uint(&mut self, key: &str, default: u64) -> Result<u64, ConfigError> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<u64>()
                .map_err(|_| invalid(key, format!("`{v}` is not a nonnegative integer"))),
        }
    }

    fn bool(&mut self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.take(key).as_deref() {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(v) => Err(invalid(key, format!("`{v}` is not true or false"))),
        }
    }
}

fn tokenize(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    let mut section: Option<&str> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| parse_err(line_no, "unterminated section header"))?
                .trim();
            let known = SECTIONS
                .iter()
                .find(|(s, _)| *s == name)
                .ok_or_else(|| parse_err(line_no, format!("unknown section `[{name}]`")))?;
            section = Some(known.0);
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(line_no, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        let sec = section.ok_or_else(|| parse_err(line_no, "key outside of any section"))?;
        let allowed = SECTIONS.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or(&[]);
        if !allowed.contains(&key) {
            return Err(parse_err(line_no, format!("unknown key `{key}` in section [{sec}]")));
        }
        let full = format!("{sec}.{key}");
        if map.insert(full.clone(), value.to_string()).is_some() {
            return Err(parse_err(line_no, format!("duplicate key `{full}`")));
        }
    }
    Ok(map)
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut e = Entries { map: tokenize(text)? };

        let n = e.uint("grid.n", 64)? as usize;
        if n < CircleGrid::MIN_POINTS || !n.is_power_of_two() {
            return Err(invalid(
                "grid.n",
                format!("must be a power of two >= {}, got {n}", CircleGrid::MIN_POINTS),
            ));
        }
        let odd_harmonics = e.bool("grid.odd_harmonics", false)?;

        let dt = e.f64("time.dt", 1e-3)?;
        if !(dt > 0.0) {
            return Err(invalid("time.dt", "must be positive"));
        }
        let t_end = e.f64("time.t_end", 10.0)?;
        if !(t_end > 0.0) {
            return Err(invalid("time.t_end", "must be positive"));
        }
        let transient = e.f64("time.transient", 0.2 * t_end)?;
        if !(transient >= 0.0 && transient < t_end) {
            return Err(invalid("time.transient", "must lie in [0, t_end)"));
        }
        let stride = e.uint("time.stride", 1)? as usize;
        if stride == 0 {
            return Err(invalid("time.stride", "must be positive"));
        }

        let kind = e.take("forcing.kind").unwrap_or_else(|| "none".into());
        let depth = match e.take("forcing.depth") {
            None => None,
            Some(v) => Some(
                v.parse::<u32>()
                    .ok()
                    .filter(|&d| d > 0)
                    .ok_or_else(|| invalid("forcing.depth", format!("`{v}` is not a positive integer")))?,
            ),
        };
        let modes = e.take("forcing.modes");
        let forcing = match kind.as_str() {
            "none" => ForcingKind::None,
            "appendix" => ForcingKind::Appendix { depth },
            "modes" => {
                let m = parse_modes("forcing.modes", modes.as_deref().unwrap_or(""))?;
                if m.is_empty() {
                    return Err(invalid("forcing.modes", "kind = modes needs at least one mode"));
                }
                ForcingKind::Modes(m)
            }
            other => return Err(invalid("forcing.kind", format!("unknown kind `{other}`"))),
        };
        if depth.is_some() && !matches!(forcing, ForcingKind::Appendix { .. }) {
            return Err(invalid("forcing.depth", "only applies to kind = appendix"));
        }
        if modes.is_some() && !matches!(forcing, ForcingKind::Modes(_)) {
            return Err(invalid("forcing.modes", "only applies to kind = modes"));
        }
        let offset = e.f64("forcing.offset", 0.0)?;

        let mut coefficients: [CoefficientSpec; 5] = Default::default();
        for (c, name) in coefficients.iter_mut().zip(COEFFICIENT_NAMES) {
            c.mean = e.f64(&format!("nonlinearity.{name}"), 0.0)?;
            c.forcing = e.f64(&format!("nonlinearity.{name}.forcing"), 0.0)?;
            let key = format!("nonlinearity.{name}.modes");
            c.modes = parse_modes(&key, &e.take(&key).unwrap_or_default())?;
            if c.forcing != 0.0 && forcing == ForcingKind::None {
                return Err(invalid(
                    &format!("nonlinearity.{name}.forcing"),
                    "no forcing signal configured",
                ));
            }
        }

        let ic = parse_ic("initial.ic", &e.take("initial.ic").unwrap_or_else(|| "sin".into()))?;
        let ic_scale = e.f64("initial.scale", 1.0)?;

        let diagnostics = Diagnostics {
            zeros: e.bool("diagnostics.zeros", false)?,
            omega: e.bool("diagnostics.omega", false)?,
            phase: e.bool("diagnostics.phase", false)?,
            spectrum: e.bool("diagnostics.spectrum", false)?,
        };

        let spec_n = e.uint("spectrum.n", n as u64)? as usize;
        if spec_n < CircleGrid::MIN_POINTS || !spec_n.is_power_of_two() {
            return Err(invalid(
                "spectrum.n",
                format!("must be a power of two >= {}, got {spec_n}", CircleGrid::MIN_POINTS),
            ));
        }
        let frame = e.uint(
            "spectrum.frame",
            (crate::spectrum::DEFAULT_FRAME_SIZE as u64).min(spec_n as u64 / 4),
        )? as usize;
        if frame == 0 || frame > spec_n / 4 {
            return Err(invalid("spectrum.frame", format!("must be in 1..={}", spec_n / 4)));
        }
        let reorth_every = e.uint("spectrum.reorth_every", 10)? as usize;
        if reorth_every == 0 {
            return Err(invalid("spectrum.reorth_every", "must be positive"));
        }
        let window = e.f64("spectrum.window", t_end.min(2000.0))?;
        if !(window > 0.0) {
            return Err(invalid("spectrum.window", "must be positive"));
        }
        let base = match e.take("spectrum.base").as_deref() {
            None | Some("zero") => SpectrumBase::Zero,
            Some("trajectory") => SpectrumBase::Trajectory,
            Some(v) => return Err(invalid("spectrum.base", format!("`{v}` is not zero or trajectory"))),
        };
        let spec_dt = e.f64("spectrum.dt", dt)?;
        if !(spec_dt > 0.0) {
            return Err(invalid("spectrum.dt", "must be positive"));
        }

        let companion = parse_ic(
            "zeros.companion",
            &e.take("zeros.companion").unwrap_or_else(|| "zero".into()),
        )?;

        let mut pos = |key: &str, default: f64| -> Result<f64, ConfigError> {
            let v = e.f64(key, default)?;
            if !(v > 0.0) {
                return Err(invalid(key, "must be positive"));
            }
            Ok(v)
        };
        let center_band = pos("tolerances.center_band", crate::spectrum::DEFAULT_CENTER_BAND)?;
        let zero_rel = pos("tolerances.zero_rel", crate::zeronum::DEFAULT_REL_TOL)?;
        let homog = pos("tolerances.homog", crate::dynamics::DEFAULT_HOMOG_TOL)?;
        let hull_eps = pos("tolerances.hull_eps", 0.1)?;
        let blowup = pos("tolerances.blowup", crate::spectral::DEFAULT_BLOWUP_CEILING)?;
        let phase = pos("tolerances.phase", 1e-3)?;
        let cluster = e.opt_f64("tolerances.cluster")?;
        let orbit_eps = e.opt_f64("tolerances.orbit_eps")?;
        for (k, v) in [("tolerances.cluster", cluster), ("tolerances.orbit_eps", orbit_eps)] {
            if v.is_some_and(|x| !(x > 0.0)) {
                return Err(invalid(k, "must be positive"));
            }
        }

        let output_dir = e.take("output.dir").unwrap_or_else(|| "out".into());
        if output_dir.is_empty() {
            return Err(invalid("output.dir", "must not be empty"));
        }
        let seed = e.uint("run.seed", 0)?;

        debug_assert!(e.map.is_empty(), "unconsumed keys: {:?}", e.map);
        Ok(Self {
            n,
            odd_harmonics,
            dt,
            t_end,
            transient,
            stride,
            forcing,
            offset,
            coefficients,
            ic,
            ic_scale,
            diagnostics,
            spectrum: SpectrumConfig {
                frame,
                reorth_every,
                window,
                base,
                n: spec_n,
                dt: spec_dt,
            },
            companion,
            tolerances: Tolerances {
                center_band,
                zero_rel,
                homog,
                cluster,
                hull_eps,
                orbit_eps,
                blowup,
                phase,
            },
            output_dir,
            seed,
        })
    }

    /// Canonical text with every key present.
    pub fn serialize(&self) -> String {
        self.render(true)
    }

    /// Canonical text without the `[output]` section; identifies the
    /// experiment independently of where results go.
    pub fn experiment_text(&self) -> String {
        self.render(false)
    }

    fn render(&self, with_output: bool) -> String {
        let mut s = String::new();
        let opt = |v: Option<f64>| v.map_or("auto".to_string(), |x| x.to_string());
        let _ = writeln!(s, "[grid]\nn = {}\nodd_harmonics = {}\n", self.n, self.odd_harmonics);
        let _ = writeln!(
            s,
            "[time]\ndt = {}\nt_end = {}\ntransient = {}\nstride = {}\n",
            self.dt, self.t_end, self.transient, self.stride
        );
        s.push_str("[forcing]\n");
        match &self.forcing {
            ForcingKind::None => s.push_str("kind = none\n"),
            ForcingKind::Appendix { depth } => {
                s.push_str("kind = appendix\n");
                if let Some(d) = depth {
                    let _ = writeln!(s, "depth = {d}");
                }
            }
            ForcingKind::Modes(m) => {
                let _ = writeln!(s, "kind = modes\nmodes = {}", fmt_modes(m));
            }
        }
        let _ = writeln!(s, "offset = {}\n", self.offset);
        s.push_str("[nonlinearity]\n");
        for (c, name) in self.coefficients.iter().zip(COEFFICIENT_NAMES) {
            let _ = writeln!(
                s,
                "{name} = {}\n{name}.forcing = {}\n{name}.modes = {}",
                c.mean,
                c.forcing,
                fmt_modes(&c.modes)
            );
        }
        let _ = writeln!(s, "\n[initial]\nic = {}\nscale = {}\n", self.ic, self.ic_scale);
        let d = &self.diagnostics;
        let _ = writeln!(
            s,
            "[diagnostics]\nzeros = {}\nomega = {}\nphase = {}\nspectrum = {}\n",
            d.zeros, d.omega, d.phase, d.spectrum
        );
        let sp = &self.spectrum;
        let base = match sp.base {
            SpectrumBase::Zero => "zero",
            SpectrumBase::Trajectory => "trajectory",
        };
        let _ = writeln!(
            s,
            "[spectrum]\nframe = {}\nreorth_every = {}\nwindow = {}\nbase = {base}\nn = {}\ndt = {}\n",
            sp.frame, sp.reorth_every, sp.window, sp.n, sp.dt
        );
        let _ = writeln!(s, "[zeros]\ncompanion = {}\n", self.companion);
        let t = &self.tolerances;
        let _ = writeln!(
            s,
            "[tolerances]\ncenter_band = {}\nzero_rel = {}\nhomog = {}\ncluster = {}\nhull_eps = {}\norbit_eps = {}\nblowup = {}\nphase = {}\n",
            t.center_band,
            t.zero_rel,
            t.homog,
            opt(t.cluster),
            t.hull_eps,
            opt(t.orbit_eps),
            t.blowup,
            t.phase
        );
        if with_output {
            let _ = writeln!(s, "[output]\ndir = {}\n", self.output_dir);
        }
        let _ = writeln!(s, "[run]\nseed = {}", self.seed);
        s
    }

    pub fn grid(&self) -> CircleGrid {
        CircleGrid::new(self.n).expect("validated grid size")
    }

    pub fn hull_point(&self) -> HullPoint {
        HullPoint::new(self.offset)
    }

    /// The shared forcing signal `g(t)`.
    pub fn forcing_signal(&self) -> QuasiPeriodicSignal {
        match &self.forcing {
            ForcingKind::None => QuasiPeriodicSignal::constant(0.0),
            ForcingKind::Appendix { depth: None } => QuasiPeriodicSignal::appendix(),
            ForcingKind::Appendix { depth: Some(d) } => QuasiPeriodicSignal::appendix_truncated(*d),
            ForcingKind::Modes(m) => QuasiPeriodicSignal::from_modes(0.0, m).expect("validated modes"),
        }
    }

    pub fn nonlinearity(&self) -> Nonlinearity {
        let g = self.forcing_signal();
        let build = |c: &CoefficientSpec| {
            let own = QuasiPeriodicSignal::from_modes(c.mean, &c.modes).expect("validated modes");
            if c.forcing == 0.0 {
                own
            } else {
                own.sum(&g.scaled(c.forcing)).expect("own modes carry no dyadic part")
            }
        };
        let [a, b, c, d, e] = &self.coefficients;
        Nonlinearity {
            drift: build(a),
            linear: build(b),
            cubic: build(c),
            source: build(d),
            convective: build(e),
        }
    }

    pub fn initial_state(&self) -> Field {
        self.ic.field(&self.grid(), self.ic_scale)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const APPENDIX: &str = "\
# appendix example
[grid]
n = 64

[time]
dt = 1e-3
t_end = 10

[forcing]
kind = appendix

[nonlinearity]
A = 1
B = 1
B.forcing = 1

[initial]
ic = sin
";

    #[test]
    fn minimal_appendix_config() {
        let c = ScenarioConfig::parse(APPENDIX).unwrap();
        assert_eq!(c.n, 64);
        assert_eq!(c.dt, 1e-3);
        assert_eq!(c.forcing, ForcingKind::Appendix { depth: None });
        assert_eq!(c.ic, InitialCondition::Sin(1));
        assert_eq!(c.transient, 2.0);
        assert_eq!(c.nonlinearity(), Nonlinearity::appendix());
    }

    #[test]
    fn grid_size_must_be_power_of_two() {
        let text = APPENDIX.replace("n = 64", "n = 100");
        match ScenarioConfig::parse(&text) {
            Err(ConfigError::Validation { key, .. }) => assert_eq!(key, "grid.n"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_key_names_the_line() {
        let text = APPENDIX.replace("n = 64", "n = 64\nn = 32");
        assert_eq!(
            ScenarioConfig::parse(&text),
            Err(ConfigError::Parse {
                line: 4,
                reason: "duplicate key `grid.n`".into()
            })
        );
    }

    #[test]
    fn unknown_keys_and_sections_are_located() {
        let text = APPENDIX.replace("t_end = 10", "t_end = 10\nhorizon = 3");
        assert!(matches!(
            ScenarioConfig::parse(&text),
            Err(ConfigError::Parse { line: 8, .. })
        ));
        assert!(matches!(
            ScenarioConfig::parse("[solver]\n"),
            Err(ConfigError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            ScenarioConfig::parse("n = 3\n"),
            Err(ConfigError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            ScenarioConfig::parse("[grid]\nn 3\n"),
            Err(ConfigError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn value_errors_name_the_key() {
        for (text, key) in [
            ("[time]\ndt = -1\n", "time.dt"),
            ("[time]\nstride = x\n", "time.stride"),
            ("[forcing]\nkind = modes\nmodes = 1:0:0\n", "forcing.modes"),
            ("[initial]\nic = cosine\n", "initial.ic"),
            ("[nonlinearity]\nB.forcing = 1\n", "nonlinearity.B.forcing"),
            ("[spectrum]\nframe = 40\n", "spectrum.frame"),
            ("[diagnostics]\nzeros = yes\n", "diagnostics.zeros"),
        ] {
            match ScenarioConfig::parse(text) {
                Err(ConfigError::Validation { key: k, .. }) => assert_eq!(k, key, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn serialization_round_trips() {
        let mut c = ScenarioConfig::parse(APPENDIX).unwrap();
        c.coefficients[3].modes = vec![(0.5, 1.0, 0.25), (0.1, std::f64::consts::SQRT_2, 0.0)];
        c.companion = InitialCondition::Random { seed: 9, modes: 3 };
        c.tolerances.cluster = Some(1e-4);
        c.forcing = ForcingKind::Appendix { depth: Some(12) };
        let text = c.serialize();
        let back = ScenarioConfig::parse(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.serialize(), text);
    }

    #[test]
    fn canonical_text_survives_up_to_whitespace() {
        let canon = ScenarioConfig::parse(APPENDIX).unwrap().serialize();
        let messy: String = canon
            .lines()
            .map(|l| match l.split_once(" = ") {
                Some((k, v)) => format!("  {k}={v}   # note\n"),
                None => format!("{l}\n\n"),
            })
            .collect();
        let norm = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ");
        assert_eq!(norm(&ScenarioConfig::parse(&messy).unwrap().serialize()), norm(&canon));
    }

    #[test]
    fn initial_condition_presets() {
        let g = CircleGrid::new(32).unwrap();
        let u = parse_ic("k", "sin_k:3").unwrap().field(&g, 2.0);
        assert!((u.values()[1] - 2.0 * (3.0 * g.node(1)).sin()).abs() < 1e-15);
        let u = parse_ic("k", "const:-0.5").unwrap().field(&g, 1.0);
        assert_eq!(u.values()[7], -0.5);
        let r = parse_ic("k", "random:4:3").unwrap();
        assert_eq!(r.field(&g, 1.0), r.field(&g, 1.0));
        assert_eq!(r.to_string(), "random:4:3");
        assert!(parse_ic("k", "sin_k:0").is_err());
    }
}
