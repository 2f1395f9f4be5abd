//! Experiment orchestration for each run mode.

use std::f64::consts::SQRT_2;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use fracschro::frac_time::observed_order;
use fracschro::grid::sobolev_norm;
use fracschro::harness::{self, measure_constants, TestEnsemble};
use fracschro::mittag_leffler::{estimate_m0, ray_value};
use fracschro::solver::{estimate_local_horizon, strong_form_residual};
use fracschro::{ComplexField, InequalityReport, MildSolver, MlParams, ModelParams, SolverConfig, SpatialGrid, TimeGrid};
use num_complex::Complex64;
use thiserror::Error;

use crate::config::{ConfigError, ConstantChoice, Horizon, InitialData, Mode, RunConfig, Snapshots};
use crate::output::{norms_csv, num, picard_csv, write_file, write_snapshot};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Numerical(#[from] fracschro::Error),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    /// Process exit status: 2 configuration, 3 divergence, 4 numerical
    /// evaluation, 1 output failure.
    pub fn exit_code(&self) -> i32 {
        use fracschro::Error as E;
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(E::Divergence { .. } | E::NonContraction { .. }) => 3,
            RunError::Numerical(E::Parameter { .. }) => 2,
            RunError::Numerical(_) => 4,
            RunError::Io { .. } => 1,
        }
    }
}

/// Files written and a short human-readable summary.
#[derive(Debug, Default)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

impl RunOutcome {
    fn write(&mut self, dir: &Path, name: &str, contents: &str) -> Result<(), RunError> {
        let path = dir.join(name);
        let written = write_file(&path, contents).map_err(|source| RunError::Io { path, source })?;
        self.files.push(written);
        Ok(())
    }
}

pub fn initial_field(grid: &SpatialGrid, d: &InitialData) -> ComplexField {
    ComplexField::from_fn(grid, |x| {
        let dx = [x[0] - d.center[0], x[1] - d.center[1]];
        let r2 = dx[0] * dx[0] + if grid.dim() == 2 { dx[1] * dx[1] } else { 0.0 };
        let env = d.amplitude * (-r2 / (2.0 * d.width * d.width)).exp();
        Complex64::from_polar(1.0, d.wave[0] * x[0] + d.wave[1] * x[1]) * env
    })
}

pub fn run(cfg: &RunConfig) -> Result<RunOutcome, RunError> {
    match cfg.mode {
        Mode::Solve | Mode::Linear => run_solve(cfg),
        Mode::ConvergenceStudy => run_convergence(cfg),
        Mode::Inequalities => run_inequalities(cfg),
        Mode::MlTable => run_ml_table(cfg),
    }
}

struct Report(String);

impl Report {
    fn new(cfg: &RunConfig) -> Self {
        let mut r = Report(String::new());
        r.line("mode", cfg.mode.name());
        r.line("seed", cfg.seed);
        r.line("n", cfg.grid.dim());
        r.line("N", cfg.grid.points_per_axis());
        r.line("L", num(cfg.grid.half_width()));
        r.line("alpha", num(cfg.model.alpha));
        r.line("beta", num(cfg.model.beta));
        r.line("lambda", num(cfg.model.lambda));
        r.line("gamma", num(cfg.model.hartree.gamma()));
        r
    }

    fn line(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.0, "{key} = {value}");
    }
}

fn constants(cfg: &RunConfig) -> Result<Option<f64>, RunError> {
    Ok(match cfg.constants {
        ConstantChoice::Skip => None,
        ConstantChoice::Given(c) => Some(c),
        ConstantChoice::Measure => Some(
            measure_constants(&cfg.grid, &cfg.model.hartree, cfg.model.beta, cfg.constants_ensemble, cfg.seed)?.c_emp(),
        ),
    })
}

fn run_solve(cfg: &RunConfig) -> Result<RunOutcome, RunError> {
    let dir = &cfg.output_dir;
    let mut out = RunOutcome::default();
    let mut report = Report::new(cfg);
    let model = if cfg.mode == Mode::Linear {
        ModelParams::new(cfg.model.alpha, cfg.model.beta, 0.0, cfg.model.hartree.clone())?
    } else {
        cfg.model.clone()
    };
    let u0 = initial_field(&cfg.grid, &cfg.initial);
    let u0_norm = sobolev_norm(&u0, model.beta, 2.0)?;
    let c_emp = constants(cfg)?;

    let mut solver_cfg = cfg.solver.clone();
    let mut horizon_estimate = None;
    if let Some(c) = c_emp {
        // M₀ is insensitive to the horizon: its sup sits at t^α|ξ|^β of order one
        let m0 = MildSolver::new(&cfg.grid, &model, &solver_cfg)?.measured_m0()?;
        horizon_estimate = Some(estimate_local_horizon(u0_norm, &model, m0, c));
    }
    if cfg.horizon == Horizon::Auto {
        let t = horizon_estimate.expect("auto horizon always measures constants");
        if !(t.is_finite() && t > 0.0) {
            return Err(ConfigError::Invalid {
                key: "T".into(),
                reason: format!("local horizon estimate is not a positive finite time: {t}"),
            }
            .into());
        }
        solver_cfg.time_grid = TimeGrid::new(t, solver_cfg.time_grid.steps())?;
    }

    let solver = MildSolver::new(&cfg.grid, &model, &solver_cfg)?;
    let traj = solver.solve(&u0)?;
    let residual = solver.fixed_point_residual(&traj, &u0)?;
    let m0 = traj.m0;
    let bound = 2.0 * SQRT_2 * m0 * u0_norm;

    out.write(dir, "norms.csv", &norms_csv(&traj))?;
    out.write(dir, "picard.csv", &picard_csv(&traj))?;
    let nodes = traj.time_grid.nodes();
    let picks: Vec<usize> = match cfg.snapshots {
        Snapshots::None => vec![],
        Snapshots::Final => vec![nodes.len() - 1],
        Snapshots::All => (0..nodes.len()).collect(),
    };
    let snap_dir = dir.join("snapshots");
    for j in picks {
        let files = write_snapshot(&snap_dir, &format!("u_{j:05}"), &traj.fields[j], nodes[j], j)
            .map_err(|source| RunError::Io { path: snap_dir.clone(), source })?;
        out.files.extend(files);
    }

    report.line("T", num(traj.time_grid.horizon()));
    report.line("Nt", traj.time_grid.steps());
    report.line("horizon", if cfg.horizon == Horizon::Auto { "auto" } else { "fixed" });
    report.line("m0_measured", num(m0));
    match c_emp {
        Some(c) => report.line("c_emp", num(c)),
        None => report.line("c_emp", "not measured"),
    }
    if let Some(t) = horizon_estimate {
        report.line("local_horizon_estimate", num(t));
    }
    report.line("u0_hbeta", num(u0_norm));
    report.line("ball_radius", num(traj.ball_radius));
    report.line("picard_iterations", traj.converged_after());
    report.line("contraction_estimate", num(traj.contraction_estimate));
    report.line("fixed_point_residual", num(residual));
    report.line("sup_hbeta", num(traj.sup_norm()));
    report.line("apriori_bound", num(bound));
    report.line("apriori_check", if traj.sup_norm() <= bound { "pass" } else { "fail" });
    report.line("within_ball", traj.within_ball());
    if cfg.mode == Mode::Linear {
        let drift = traj.l2.iter().map(|v| (v - traj.l2[0]).abs()).fold(0.0, f64::max);
        report.line("l2_drift", num(drift));
    }
    for w in &cfg.warnings {
        report.line("warning", w);
    }
    out.write(dir, "report.txt", &report.0)?;

    out.summary.push(format!(
        "{}: {} Picard iteration(s), contraction {:.3e}, sup H^beta {:.6e}, M0 {:.6}",
        cfg.mode,
        traj.converged_after(),
        traj.contraction_estimate,
        traj.sup_norm(),
        m0
    ));
    Ok(out)
}

/// One row of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub steps: usize,
    pub dt: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Solve at each step count and record the final-node strong-form residual.
pub fn convergence_rows(
    grid: &SpatialGrid,
    model: &ModelParams,
    base: &SolverConfig,
    horizon: f64,
    u0: &ComplexField,
    steps: &[usize],
) -> Result<Vec<StudyRow>, RunError> {
    steps
        .iter()
        .map(|&s| {
            let mut c = base.clone();
            c.time_grid = TimeGrid::new(horizon, s)?;
            let traj = MildSolver::new(grid, model, &c)?.solve(u0)?;
            let r = strong_form_residual(&traj, model)?;
            Ok(StudyRow {
                steps: s,
                dt: c.time_grid.step(),
                residual: *r.last(),
                iterations: traj.converged_after(),
            })
        })
        .collect()
}

fn run_convergence(cfg: &RunConfig) -> Result<RunOutcome, RunError> {
    let mut out = RunOutcome::default();
    let mut report = Report::new(cfg);
    let u0 = initial_field(&cfg.grid, &cfg.initial);
    let horizon = match cfg.horizon {
        Horizon::Fixed(t) => t,
        Horizon::Auto => {
            let c = constants(cfg)?.expect("auto horizon always measures constants");
            let m0 = MildSolver::new(&cfg.grid, &cfg.model, &cfg.solver)?.measured_m0()?;
            estimate_local_horizon(sobolev_norm(&u0, cfg.model.beta, 2.0)?, &cfg.model, m0, c)
        }
    };
    let rows = convergence_rows(&cfg.grid, &cfg.model, &cfg.solver, horizon, &u0, &cfg.study_steps)?;
    let mut csv = String::from("steps,dt,residual,picard_iterations\n");
    for r in &rows {
        let _ = writeln!(csv, "{},{},{},{}", r.steps, num(r.dt), num(r.residual), r.iterations);
    }
    out.write(&cfg.output_dir, "convergence.csv", &csv)?;
    let order = observed_order(
        &rows.iter().map(|r| r.steps).collect::<Vec<_>>(),
        &rows.iter().map(|r| r.residual).collect::<Vec<_>>(),
    );
    report.line("T", num(horizon));
    report.line("study_steps", cfg.study_steps.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(","));
    report.line("fitted_order", order.map_or_else(|| "undefined".to_string(), num));
    for w in &cfg.warnings {
        report.line("warning", w);
    }
    out.write(&cfg.output_dir, "report.txt", &report.0)?;
    out.summary.push(format!(
        "convergence_study: {} runs, fitted order {}",
        rows.len(),
        order.map_or_else(|| "undefined".to_string(), |o| format!("{o:.3}"))
    ));
    Ok(out)
}

/// Every inequality check, in output order.
pub fn inequality_reports(cfg: &RunConfig) -> Result<Vec<InequalityReport>, RunError> {
    let h = &cfg.harness;
    let ens = TestEnsemble::new(&cfg.grid, h.generator, h.ensemble_size, cfg.seed)?;
    let beta = cfg.model.beta;
    let hartree = &cfg.model.hartree;
    let gamma = hartree.gamma();
    let (leib_h, leib_i) = harness::check_leibniz(&ens, h.leibniz_sigma, h.leibniz)?;
    let (emb, chain) = harness::check_embedding(&ens, beta, gamma)?;
    Ok(vec![
        harness::check_hardy(&ens, h.hardy_s)?,
        harness::check_translated_hardy(&ens, gamma)?,
        harness::check_hls(&ens, gamma)?,
        leib_h,
        leib_i,
        harness::check_difference_bound(&ens, beta, gamma)?,
        harness::check_lipschitz_l2(&ens, hartree, beta, h.lipschitz_radius)?,
        harness::check_lipschitz_hbeta(&ens, hartree, beta, h.lipschitz_radius)?,
        emb,
        chain,
        harness::check_cubic_bound(&ens, hartree, beta)?,
        harness::check_potential_linf(&ens, hartree)?,
        harness::check_potential_lq(&ens, hartree, beta)?,
        harness::check_kernel_sobolev(&ens, hartree, beta)?,
    ])
}

fn run_inequalities(cfg: &RunConfig) -> Result<RunOutcome, RunError> {
    let mut out = RunOutcome::default();
    let mut report = Report::new(cfg);
    let reports = inequality_reports(cfg)?;
    let mut records = String::new();
    for r in &reports {
        let _ = writeln!(records, "{}", r.to_record());
    }
    out.write(&cfg.output_dir, "inequalities.txt", &records)?;
    let find = |name: &str| reports.iter().find(|r| r.name == name).map(|r| r.max_ratio).unwrap_or(0.0);
    report.line("ensemble_size", cfg.harness.ensemble_size);
    report.line("generator", cfg.harness.generator.name());
    report.line("c_emp", num(find("cubic_bound").max(find("lipschitz_hbeta"))));
    let finite = reports.iter().all(|r| r.is_finite());
    let violations: usize = reports.iter().filter_map(|r| r.scale_violations).sum();
    report.line("all_finite", finite);
    report.line("scale_violations", violations);
    out.write(&cfg.output_dir, "report.txt", &report.0)?;
    out.summary.push(format!(
        "inequalities: {} checks over {} members, all finite = {finite}, scale violations = {violations}",
        reports.len(),
        cfg.harness.ensemble_size
    ));
    Ok(out)
}

/// Sample points `s`: zero, then geometric from `1e-6·s_max` to `s_max`.
pub fn table_s_points(s_max: f64, count: usize) -> Vec<f64> {
    std::iter::once(0.0)
        .chain((0..count - 1).map(|j| {
            let frac = if count > 2 { j as f64 / (count - 2) as f64 } else { 1.0 };
            s_max * 10f64.powf(-6.0 * (1.0 - frac))
        }))
        .collect()
}

pub fn table_t_points(t_max: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| t_max * i as f64 / (count - 1) as f64).collect()
}

/// `|E_α((-it)^α s)|` on the `(t, s)` table for one `α`, row-major in `t`.
pub fn ml_table_moduli(alpha: f64, ts: &[f64], ss: &[f64], ml: &MlParams) -> Result<Vec<f64>, RunError> {
    let p = ml.with_orders(alpha, 1.0)?;
    let mut v = Vec::with_capacity(ts.len() * ss.len());
    for &t in ts {
        for &s in ss {
            v.push(ray_value(alpha, t.powf(alpha) * s, &p)?.norm());
        }
    }
    Ok(v)
}

fn run_ml_table(cfg: &RunConfig) -> Result<RunOutcome, RunError> {
    let mut out = RunOutcome::default();
    let mut report = Report::new(cfg);
    let t = &cfg.ml_table;
    let ts = table_t_points(t.t_max, t.t_points);
    let ss = table_s_points(t.s_max, t.s_points);
    let mut table = String::from("alpha,t,s,modulus\n");
    let mut sups = String::from("alpha,table_sup,m0_estimate,r_at_sup\n");
    for &alpha in &t.alphas {
        let values = ml_table_moduli(alpha, &ts, &ss, &cfg.solver.ml)?;
        for (i, &tv) in ts.iter().enumerate() {
            for (j, &sv) in ss.iter().enumerate() {
                let _ = writeln!(table, "{},{},{},{}", num(alpha), num(tv), num(sv), num(values[i * ss.len() + j]));
            }
        }
        let table_sup = values.iter().copied().fold(0.0, f64::max);
        let est = estimate_m0(alpha, t.t_max, t.s_max, cfg.solver.m0_resolution, &cfg.solver.ml)?;
        let _ = writeln!(sups, "{},{},{},{}", num(alpha), num(table_sup), num(est.sup), num(est.r_at));
        report.line(&format!("m0[alpha={alpha}]"), num(est.sup));
        out.summary.push(format!("alpha = {alpha}: table sup {table_sup:.6}, M0 estimate {:.6}", est.sup));
    }
    out.write(&cfg.output_dir, "ml_table.csv", &table)?;
    out.write(&cfg.output_dir, "ml_sup.csv", &sups)?;
    report.line("t_max", num(t.t_max));
    report.line("s_max", num(t.s_max));
    out.write(&cfg.output_dir, "report.txt", &report.0)?;
    Ok(out)
}
