//! Flat `key = value` run configuration.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fracschro::harness::LeibnizExponents;
use fracschro::{
    Generator, HartreeParams, InitialGuess, MlParams, ModelParams, PsiKind, SolverConfig, SpatialGrid, TestEnsemble,
    TimeGrid,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("{key}: {reason}")]
    Invalid { key: String, reason: String },
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        reason: reason.into(),
    }
}

impl From<fracschro::Error> for ConfigError {
    fn from(e: fracschro::Error) -> Self {
        match e {
            fracschro::Error::Parameter { name, reason } => invalid(name, reason),
            other => invalid("config", other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Solve,
    Linear,
    ConvergenceStudy,
    Inequalities,
    MlTable,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Solve => "solve",
            Mode::Linear => "linear",
            Mode::ConvergenceStudy => "convergence_study",
            Mode::Inequalities => "inequalities",
            Mode::MlTable => "ml_table",
        }
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "solve" => Mode::Solve,
            "linear" => Mode::Linear,
            "convergence_study" => Mode::ConvergenceStudy,
            "inequalities" => Mode::Inequalities,
            "ml_table" => Mode::MlTable,
            _ => return Err("expected solve, linear, convergence_study, inequalities or ml_table".into()),
        })
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which time nodes get a field snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Snapshots {
    None,
    Final,
    All,
}

/// Gaussian initial datum `a·exp(-|x-c|²/(2w²))·e^{ik·x}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialData {
    pub amplitude: f64,
    pub width: f64,
    pub center: [f64; 2],
    pub wave: [f64; 2],
}

/// Horizon `T`: fixed, or the local existence time estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    Fixed(f64),
    Auto,
}

/// Empirical contraction constant: measured, given, or unused.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConstantChoice {
    Measure,
    Given(f64),
    Skip,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarnessConfig {
    pub ensemble_size: usize,
    pub generator: Generator,
    pub hardy_s: f64,
    pub leibniz_sigma: f64,
    pub leibniz: LeibnizExponents,
    pub lipschitz_radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlTableConfig {
    pub alphas: Vec<f64>,
    pub t_max: f64,
    pub t_points: usize,
    pub s_max: f64,
    pub s_points: usize,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: Mode,
    pub model: ModelParams,
    pub grid: SpatialGrid,
    pub horizon: Horizon,
    /// Solver settings; its time grid is provisional when `horizon` is `Auto`.
    pub solver: SolverConfig,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub initial: InitialData,
    pub snapshots: Snapshots,
    pub constants: ConstantChoice,
    pub constants_ensemble: usize,
    pub study_steps: Vec<usize>,
    pub harness: HarnessConfig,
    pub ml_table: MlTableConfig,
    /// Hypotheses of the existence theorem that this run does not meet.
    pub warnings: Vec<String>,
}

const KEYS: &[&str] = &[
    "mode",
    "alpha",
    "beta",
    "lambda",
    "gamma",
    "psi",
    "psi_m",
    "psi_mu",
    "n",
    "N",
    "L",
    "T",
    "Nt",
    "ball_radius",
    "max_picard_iters",
    "fixed_point_tol",
    "initial_guess",
    "report_contraction",
    "ml_series_tol",
    "ml_regime_radius",
    "m0_resolution",
    "enforce_hypotheses",
    "u0_amplitude",
    "u0_width",
    "u0_x",
    "u0_y",
    "u0_kx",
    "u0_ky",
    "snapshots",
    "c_emp",
    "constants_ensemble",
    "study_steps",
    "ensemble_size",
    "generator",
    "hardy_s",
    "leibniz_sigma",
    "leibniz_r",
    "leibniz_p1",
    "leibniz_q1",
    "leibniz_p2",
    "leibniz_q2",
    "lipschitz_radius",
    "ml_alphas",
    "ml_t_max",
    "ml_t_points",
    "ml_s_max",
    "ml_s_points",
    "output_dir",
    "seed",
];

/// Parsed `key -> (line, raw value)` pairs.
#[derive(Debug, Default)]
pub struct RawConfig {
    entries: HashMap<String, (usize, String)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((k, v)) = body.split_once('=') else {
                return Err(ConfigError::Parse {
                    line,
                    reason: format!("expected `key = value`, got `{body}`"),
                });
            };
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || v.is_empty() {
                return Err(ConfigError::Parse {
                    line,
                    reason: "empty key or value".into(),
                });
            }
            if !KEYS.contains(&k) {
                return Err(ConfigError::UnknownKey { line, key: k.into() });
            }
            if entries.insert(k.to_string(), (line, v.to_string())).is_some() {
                return Err(ConfigError::Duplicate { line, key: k.into() });
            }
        }
        Ok(Self { entries })
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), (0, value.into()));
    }

    fn raw(&self, key: &str) -> Option<&(usize, String)> {
        self.entries.get(key)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => v.parse::<T>().map(Some).map_err(|e| {
                if *line == 0 {
                    invalid(key, format!("cannot parse `{v}`: {e}"))
                } else {
                    ConfigError::Parse {
                        line: *line,
                        reason: format!("{key}: cannot parse `{v}`: {e}"),
                    }
                }
            }),
        }
    }

    fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn require<T: FromStr>(&self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.get(key)?.ok_or_else(|| invalid(key, "required"))
    }

    fn list<T: FromStr>(&self, key: &str, default: Vec<T>) -> Result<Vec<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.raw(key) {
            None => Ok(default),
            Some((_, v)) => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<T>()
                        .map_err(|e| invalid(key, format!("cannot parse list entry `{}`: {e}", s.trim())))
                })
                .collect(),
        }
    }

    /// `auto` or a number.
    fn auto_or(&self, key: &str) -> Result<Option<Option<f64>>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some((_, v)) if v == "auto" => Ok(Some(None)),
            Some(_) => Ok(Some(Some(self.require(key)?))),
        }
    }

    pub fn keys(&self) -> BTreeMap<&str, &str> {
        self.entries.iter().map(|(k, (_, v))| (k.as_str(), v.as_str())).collect()
    }
}

/// Command-line overrides applied after parsing.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    load_config_with(path, &Overrides::default())
}

pub fn load_config_with(path: &Path, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut raw = RawConfig::parse(&text)?;
    if let Some(dir) = &overrides.output_dir {
        raw.set("output_dir", dir.to_string_lossy().into_owned());
    }
    if let Some(seed) = overrides.seed {
        raw.set("seed", seed.to_string());
    }
    build(&raw)
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    build(&RawConfig::parse(text)?)
}

fn positive(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(key, format!("must be positive and finite, got {v}")))
    }
}

fn parse_enum<T>(raw: &RawConfig, key: &str, default: T, table: &[(&str, T)]) -> Result<T, ConfigError>
where
    T: Copy,
{
    match raw.raw(key) {
        None => Ok(default),
        Some((_, v)) => table.iter().find(|(name, _)| name == v).map(|(_, t)| *t).ok_or_else(|| {
            let names: Vec<&str> = table.iter().map(|(n, _)| *n).collect();
            invalid(key, format!("`{v}` is not one of {}", names.join(", ")))
        }),
    }
}

pub fn build(raw: &RawConfig) -> Result<RunConfig, ConfigError> {
    let mode: Mode = raw.require("mode")?;

    let n: usize = raw.or("n", 2)?;
    let points: usize = raw.or("N", if n == 1 { 256 } else { 128 })?;
    let half_width: f64 = raw.or("L", 20.0)?;
    if n != 1 && n != 2 {
        return Err(invalid("n", format!("dimension must be 1 or 2, got {n}")));
    }
    if !points.is_power_of_two() || points < 4 {
        return Err(invalid("N", format!("must be a power of two >= 4, got {points}")));
    }
    let grid = SpatialGrid::new(n, points, positive("L", half_width)?)?;

    let alpha: f64 = raw.or("alpha", 0.5)?;
    let beta: f64 = raw.or("beta", 0.8)?;
    let lambda: f64 = raw.or("lambda", 0.0)?;
    let gamma: f64 = raw.or("gamma", 0.5 * n as f64)?;
    if !(gamma > 0.0 && gamma < n as f64) {
        return Err(invalid(
            "gamma",
            format!("must lie in (0, n) = (0, {n}) for a locally integrable kernel, got {gamma}"),
        ));
    }
    let psi = parse_enum(raw, "psi", "one", &[("one", "one"), ("exponential", "exponential")])?;
    let psi = if psi == "one" {
        if raw.raw("psi_m").is_some() || raw.raw("psi_mu").is_some() {
            return Err(invalid("psi", "psi_m and psi_mu require psi = exponential"));
        }
        PsiKind::ConstantOne
    } else {
        PsiKind::ExponentialEnvelope {
            m: raw.or("psi_m", 1.0)?,
            mu: raw.or("psi_mu", 0.0)?,
        }
    };
    let model = ModelParams::new(alpha, beta, lambda, HartreeParams::new(gamma, psi)?)?;

    if matches!(mode, Mode::Solve | Mode::ConvergenceStudy) && lambda == 0.0 {
        return Err(invalid(
            "lambda",
            format!("must be a nonzero real for mode = {mode}; use mode = linear for the free evolution"),
        ));
    }

    let enforce: bool = raw.or("enforce_hypotheses", true)?;
    let mut warnings = Vec::new();
    if matches!(mode, Mode::Solve | Mode::ConvergenceStudy) {
        for v in model.hypothesis_violations(&grid) {
            let key = v.split_whitespace().next().unwrap_or("config").to_string();
            let msg = format!("{v}: outside the local existence hypotheses");
            if enforce {
                return Err(ConfigError::Invalid { key, reason: msg });
            }
            warnings.push(msg);
        }
    }

    let horizon = match raw.raw("T") {
        Some((_, v)) if v == "auto" => Horizon::Auto,
        Some(_) => Horizon::Fixed(positive("T", raw.require("T")?)?),
        None => Horizon::Fixed(1.0),
    };
    let steps: usize = raw.or("Nt", 64)?;
    if steps == 0 {
        return Err(invalid("Nt", "need at least one time step"));
    }
    let provisional = match horizon {
        Horizon::Fixed(t) => t,
        Horizon::Auto => 1.0,
    };
    let mut solver = SolverConfig::new(TimeGrid::new(provisional, steps)?);
    solver.ball_radius = raw.auto_or("ball_radius")?.flatten();
    solver.max_picard_iters = raw.or("max_picard_iters", solver.max_picard_iters)?;
    solver.fixed_point_tol = raw.or("fixed_point_tol", solver.fixed_point_tol)?;
    solver.initial_guess = parse_enum(
        raw,
        "initial_guess",
        InitialGuess::Constant,
        &[("constant", InitialGuess::Constant), ("linear", InitialGuess::Linear)],
    )?;
    solver.report_contraction = raw.or("report_contraction", true)?;
    solver.ml = MlParams::new(alpha, 1.0)?
        .with_series_tol(raw.or("ml_series_tol", solver.ml.series_tol)?)?
        .with_regime_radius(raw.or("ml_regime_radius", solver.ml.regime_radius)?)?;
    solver.m0_resolution = raw.or("m0_resolution", solver.m0_resolution)?;
    solver.validate()?;

    let initial = InitialData {
        amplitude: raw.or("u0_amplitude", 0.1)?,
        width: positive("u0_width", raw.or("u0_width", 1.0)?)?,
        center: [raw.or("u0_x", 0.0)?, raw.or("u0_y", 0.0)?],
        wave: [raw.or("u0_kx", 0.0)?, raw.or("u0_ky", 0.0)?],
    };
    if !initial.amplitude.is_finite() {
        return Err(invalid("u0_amplitude", "must be finite"));
    }
    if n == 1 && (initial.center[1] != 0.0 || initial.wave[1] != 0.0) {
        return Err(invalid("u0_y", "second-axis settings require n = 2"));
    }

    let snapshots = parse_enum(
        raw,
        "snapshots",
        Snapshots::Final,
        &[("none", Snapshots::None), ("final", Snapshots::Final), ("all", Snapshots::All)],
    )?;

    let constants = match raw.raw("c_emp") {
        None => {
            if horizon == Horizon::Auto {
                ConstantChoice::Measure
            } else {
                ConstantChoice::Skip
            }
        }
        Some((_, v)) if v == "auto" => ConstantChoice::Measure,
        Some((_, v)) if v == "none" => ConstantChoice::Skip,
        Some(_) => ConstantChoice::Given(positive("c_emp", raw.require("c_emp")?)?),
    };
    if horizon == Horizon::Auto && constants == ConstantChoice::Skip {
        return Err(invalid("T", "T = auto needs c_emp = auto or a value"));
    }
    if horizon == Horizon::Auto && lambda == 0.0 {
        return Err(invalid("T", "T = auto needs a nonzero lambda"));
    }
    let constants_ensemble: usize = raw.or("constants_ensemble", 100)?;
    let seed: u64 = raw.or("seed", 0)?;
    if constants == ConstantChoice::Measure {
        TestEnsemble::new(&grid, Generator::Mixed, constants_ensemble.max(1), seed)
            .map_err(|e| invalid("c_emp", format!("cannot measure on this grid: {e}")))?;
        if constants_ensemble == 0 {
            return Err(invalid("constants_ensemble", "must be at least 1"));
        }
    }

    let study_steps: Vec<usize> = raw.list("study_steps", vec![32, 64, 128, 256])?;
    if mode == Mode::ConvergenceStudy {
        if study_steps.len() < 2 || study_steps.contains(&0) {
            return Err(invalid("study_steps", "need at least two positive step counts"));
        }
        if study_steps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("study_steps", "step counts must increase"));
        }
    }

    let leibniz = LeibnizExponents {
        r: raw.or("leibniz_r", 2.0)?,
        p1: raw.or("leibniz_p1", 4.0)?,
        q1: raw.or("leibniz_q1", 4.0)?,
        p2: raw.or("leibniz_p2", 4.0)?,
        q2: raw.or("leibniz_q2", 4.0)?,
    };
    let generator = match raw.raw("generator") {
        None => Generator::Mixed,
        Some((_, v)) => Generator::parse(v).ok_or_else(|| {
            invalid(
                "generator",
                format!("`{v}` is not one of gaussian_bumps, modulated_gaussians, random_band_limited, mixed"),
            )
        })?,
    };
    let harness = HarnessConfig {
        ensemble_size: raw.or("ensemble_size", 100)?,
        generator,
        hardy_s: raw.or("hardy_s", 0.5)?,
        leibniz_sigma: raw.or("leibniz_sigma", beta)?,
        leibniz,
        lipschitz_radius: raw.or("lipschitz_radius", 1.0)?,
    };
    if mode == Mode::Inequalities {
        if harness.ensemble_size == 0 {
            return Err(invalid("ensemble_size", "must be at least 1"));
        }
        TestEnsemble::new(&grid, generator, harness.ensemble_size, seed)
            .map_err(|e| invalid("N", e.to_string()))?;
        leibniz.validate().map_err(|e| invalid("leibniz_r", e.to_string()))?;
        if !(harness.hardy_s >= 0.0 && harness.hardy_s < 0.5 * n as f64) {
            return Err(invalid("hardy_s", format!("must lie in [0, n/2), got {}", harness.hardy_s)));
        }
        if beta < 0.5 * gamma {
            return Err(invalid("beta", format!("must satisfy gamma/2 <= beta, got beta = {beta}, gamma = {gamma}")));
        }
        positive("leibniz_sigma", harness.leibniz_sigma)?;
        positive("lipschitz_radius", harness.lipschitz_radius)?;
    }

    let ml_table = MlTableConfig {
        alphas: raw.list("ml_alphas", vec![0.3, 0.5, 0.7, 0.9, 1.0])?,
        t_max: raw.or("ml_t_max", 10.0)?,
        t_points: raw.or("ml_t_points", 41)?,
        s_max: raw.or("ml_s_max", 1e4)?,
        s_points: raw.or("ml_s_points", 61)?,
    };
    if mode == Mode::MlTable {
        if ml_table.alphas.is_empty() || ml_table.alphas.iter().any(|a| !(*a > 0.0 && *a <= 1.0)) {
            return Err(invalid("ml_alphas", "every alpha must lie in (0, 1]"));
        }
        positive("ml_t_max", ml_table.t_max)?;
        positive("ml_s_max", ml_table.s_max)?;
        if ml_table.t_points < 2 || ml_table.s_points < 2 {
            return Err(invalid("ml_t_points", "tables need at least two points per axis"));
        }
    }

    let output_dir = PathBuf::from(raw.or("output_dir", "output".to_string())?);

    Ok(RunConfig {
        mode,
        model,
        grid,
        horizon,
        solver,
        output_dir,
        seed,
        initial,
        snapshots,
        constants,
        constants_ensemble,
        study_steps,
        harness,
        ml_table,
        warnings,
    })
}
