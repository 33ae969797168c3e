//! Run configuration: a small `key = value` file format with documented
//! defaults, strict parsing, and line-numbered errors.
//!
//! Lines are `key = value`; blank lines and lines starting with `#` are
//! ignored. Unknown or repeated keys are errors so typos cannot silently
//! fall back to defaults. [`RunConfig::to_file_string`] writes every key
//! back out (with comments), which doubles as a template and as the exact
//! record of what a run used.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::mollifier::MollifierSpec;
use crate::solver::SolverConfig;
use crate::split::SplitConfig;

/// Which initial field the generator produces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    /// Taylor-Green vortex under a Gaussian envelope.
    TaylorGreen,
    /// Curl of a Gaussian vector potential.
    Bump,
    /// Tapered slowly decaying field.
    HeavyTail,
    /// Seeded random band-limited field.
    Random,
}

impl FromStr for FieldKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "taylor-green" => Ok(FieldKind::TaylorGreen),
            "bump" => Ok(FieldKind::Bump),
            "heavy-tail" => Ok(FieldKind::HeavyTail),
            "random" => Ok(FieldKind::Random),
            _ => Err(format!(
                "unknown field kind {s:?} (expected taylor-green, bump, heavy-tail, or random)"
            )),
        }
    }
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FieldKind::TaylorGreen => "taylor-green",
            FieldKind::Bump => "bump",
            FieldKind::HeavyTail => "heavy-tail",
            FieldKind::Random => "random",
        })
    }
}

/// Everything a run needs, with defaults chosen for a quick N = 32 box.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// Grid points per axis (default 32).
    pub n: usize,
    /// Box side length (default 16).
    pub box_length: f64,
    /// Initial field kind (default taylor-green).
    pub field: FieldKind,
    /// Field amplitude before projection (default 1).
    pub amplitude: f64,
    /// Gaussian width for taylor-green / bump (default 2).
    pub sigma: f64,
    /// Radial decay exponent for heavy-tail (default 1.2).
    pub decay: f64,
    /// Spectral band limit for random fields (default 5).
    pub max_mode: i64,
    /// Random seed (default 7).
    pub seed: u64,
    /// Integrability exponent of the input class (default 4).
    pub p: f64,
    /// Weight exponent of the input class (default 1).
    pub gamma: f64,
    /// Tail norm exponent (default 6).
    pub r: f64,
    /// Smallness target for the tail part (default 0.25).
    pub eta: f64,
    /// Mollifier smoothing scale (default 0.5).
    pub epsilon: f64,
    /// Cutoff inverse radius: the plateau ends at 1/alpha (default 0.5).
    pub alpha: f64,
    /// Time step (default 2e-3).
    pub dt: f64,
    /// Number of steps (default 50).
    pub steps: usize,
    /// Keep every k-th state (default 10).
    pub save_every: usize,
    /// Weight exponent for the integration residual report (default 4).
    pub residual_gamma: f64,
    /// Calibration constant in the scale horizon (default 1).
    pub c0: f64,
    /// Calibration constant in the tail horizon (default 1).
    pub c1: f64,
    /// Calibration constant in the energy horizon (default 1).
    pub c2: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 32,
            box_length: 16.0,
            field: FieldKind::TaylorGreen,
            amplitude: 1.0,
            sigma: 2.0,
            decay: 1.2,
            max_mode: 5,
            seed: 7,
            p: 4.0,
            gamma: 1.0,
            r: 6.0,
            eta: 0.25,
            epsilon: 0.5,
            alpha: 0.5,
            dt: 2e-3,
            steps: 50,
            save_every: 10,
            residual_gamma: 4.0,
            c0: 1.0,
            c1: 1.0,
            c2: 1.0,
        }
    }
}

impl RunConfig {
    /// Parses a config file; missing keys keep their defaults.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::parse_str(&text, &path.display().to_string())
    }

    /// Parses config text; `origin` names the source in error messages.
    pub fn parse_str(text: &str, origin: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen: Vec<String> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let fail = |msg: String| Error::Config {
                path: origin.to_string(),
                line,
                msg,
            };
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed
                .split_once('=')
                .ok_or_else(|| fail(format!("expected `key = value`, got {trimmed:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if seen.iter().any(|k| k == key) {
                return Err(fail(format!("key {key:?} given twice")));
            }
            seen.push(key.to_string());
            cfg.set(key, value).map_err(fail)?;
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn parse<T: FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
            value
                .parse()
                .map_err(|_| format!("bad value {value:?} for key {key:?}"))
        }
        match key {
            "n" => self.n = parse(key, value)?,
            "box" => self.box_length = parse(key, value)?,
            "field" => self.field = value.parse()?,
            "amplitude" => self.amplitude = parse(key, value)?,
            "sigma" => self.sigma = parse(key, value)?,
            "decay" => self.decay = parse(key, value)?,
            "max_mode" => self.max_mode = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "p" => self.p = parse(key, value)?,
            "gamma" => self.gamma = parse(key, value)?,
            "r" => self.r = parse(key, value)?,
            "eta" => self.eta = parse(key, value)?,
            "epsilon" => self.epsilon = parse(key, value)?,
            "alpha" => self.alpha = parse(key, value)?,
            "dt" => self.dt = parse(key, value)?,
            "steps" => self.steps = parse(key, value)?,
            "save_every" => self.save_every = parse(key, value)?,
            "residual_gamma" => self.residual_gamma = parse(key, value)?,
            "c0" => self.c0 = parse(key, value)?,
            "c1" => self.c1 = parse(key, value)?,
            "c2" => self.c2 = parse(key, value)?,
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Serializes every key with its current value; parses back to `self`.
    pub fn to_file_string(&self) -> String {
        format!(
            "# grid\n\
             n = {}\n\
             box = {}\n\
             \n\
             # initial field\n\
             field = {}\n\
             amplitude = {}\n\
             sigma = {}\n\
             decay = {}\n\
             max_mode = {}\n\
             seed = {}\n\
             \n\
             # splitting\n\
             p = {}\n\
             gamma = {}\n\
             r = {}\n\
             eta = {}\n\
             \n\
             # mollifier\n\
             epsilon = {}\n\
             alpha = {}\n\
             \n\
             # time stepping\n\
             dt = {}\n\
             steps = {}\n\
             save_every = {}\n\
             residual_gamma = {}\n\
             \n\
             # horizon calibration constants\n\
             c0 = {}\n\
             c1 = {}\n\
             c2 = {}\n",
            self.n,
            self.box_length,
            self.field,
            self.amplitude,
            self.sigma,
            self.decay,
            self.max_mode,
            self.seed,
            self.p,
            self.gamma,
            self.r,
            self.eta,
            self.epsilon,
            self.alpha,
            self.dt,
            self.steps,
            self.save_every,
            self.residual_gamma,
            self.c0,
            self.c1,
            self.c2,
        )
    }

    /// The grid this config describes.
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.n, self.box_length)
    }

    /// The mollifier this config describes.
    pub fn mollifier(&self) -> Result<MollifierSpec> {
        MollifierSpec::new(self.epsilon, self.alpha)
    }

    /// The splitting exponents this config describes.
    pub fn split_config(&self) -> Result<SplitConfig> {
        SplitConfig::new(self.p, self.gamma, self.r, self.eta)
    }

    /// The solver settings this config describes (divergence residual
    /// tracking on, as the command-line tools want).
    pub fn solver_config(&self) -> Result<SolverConfig> {
        let mut sc = SolverConfig::new(self.dt, self.steps, self.mollifier()?);
        sc.save_every = self.save_every;
        sc.track_residual = true;
        sc.residual_gamma = self.residual_gamma;
        Ok(sc)
    }
}
