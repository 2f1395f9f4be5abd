//! Mild solutions by Picard iteration of
//!
//! `Φ(u)(t) = F⁻¹[E_α((-it)^α|ξ|^β) û₀] + λ(-i)^α ∫₀ᵗ F⁻¹[E_α((-i(t-s))^α|ξ|^β) F N(u(s))] ds`
//!
//! with `N(u) = K_γ(|u|²)u`. The memory integral uses the trapezoid rule in
//! `s` with the (bounded, smooth) propagator evaluated at subinterval
//! midpoints, so one sweep needs the symbol at `N_t` distinct lags only.

use std::f64::consts::SQRT_2;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frac_time::{caputo_derivative, rl_integral, TimeGrid, TimeSeries};
use crate::grid::{
    forward_transform, fractional_laplacian, inverse_transform, lp_norm, ComplexField, SpatialGrid,
    SpectralField,
};
use crate::hartree::{nonlinearity, HartreeParams};
use crate::mittag_leffler::{estimate_m0, minus_i_pow, MlParams, Propagator};

/// Ratio of successive distances at or above which a step counts as
/// non-contracting.
const STALL_RATIO: f64 = 1.0;
/// Consecutive non-contracting steps tolerated before giving up.
const STALL_STEPS: usize = 3;
/// Fields larger than this multiple of the ball radius abort the sweep.
const DIVERGENCE_FACTOR: f64 = 1e3;
/// Slack `ε` in the automatic radius `r = 2√2·M₀·‖u₀‖·(1-ε)`.
pub const RADIUS_SLACK: f64 = 0.01;

/// Orders and coupling of the equation.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub hartree: HartreeParams,
}

impl ModelParams {
    /// Structural checks only: `α ∈ (0, 1]`, `β > 0`, finite `λ`. The
    /// existence theorem's hypotheses are reported by
    /// [`ModelParams::hypothesis_violations`].
    pub fn new(alpha: f64, beta: f64, lambda: f64, hartree: HartreeParams) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::param("alpha", format!("must lie in (0, 1], got {alpha}")));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::param("beta", format!("must be positive, got {beta}")));
        }
        if !lambda.is_finite() {
            return Err(Error::param("lambda", "must be finite"));
        }
        Ok(Self {
            alpha,
            beta,
            lambda,
            hartree,
        })
    }

    /// Ways in which `(self, grid)` falls outside the local well-posedness
    /// hypotheses (`α ∈ (0,1)`, `γ/2 ≤ β < 1`, `λ ≠ 0`, `n ≥ 2`).
    pub fn hypothesis_violations(&self, grid: &SpatialGrid) -> Vec<String> {
        let mut out = Vec::new();
        let gamma = self.hartree.gamma();
        if self.alpha >= 1.0 {
            out.push(format!("alpha = {} is not in (0, 1)", self.alpha));
        }
        if !(self.beta >= 0.5 * gamma && self.beta < 1.0) {
            out.push(format!(
                "beta = {} violates gamma/2 <= beta < 1 (gamma = {gamma})",
                self.beta
            ));
        }
        if self.lambda == 0.0 {
            out.push("lambda = 0 (linear problem)".into());
        }
        if grid.dim() < 2 {
            out.push("n = 1 (the existence result assumes n >= 2)".into());
        }
        out
    }
}

/// Starting point of the Picard iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialGuess {
    /// `u(t) = u₀` at every node.
    Constant,
    /// The linear evolution `F⁻¹[E_α(...) û₀]`.
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub time_grid: TimeGrid,
    /// Ball radius `r`; `None` selects `2√2·M₀·‖u₀‖_{H^β}·(1-ε)`.
    pub ball_radius: Option<f64>,
    pub max_picard_iters: usize,
    /// Stop once the sup-in-time `H^β` change drops below this.
    pub fixed_point_tol: f64,
    pub initial_guess: InitialGuess,
    pub report_contraction: bool,
    pub ml: MlParams,
    /// Per-axis samples for the continuum `M₀` estimate.
    pub m0_resolution: usize,
}

impl SolverConfig {
    pub fn new(time_grid: TimeGrid) -> Self {
        Self {
            time_grid,
            ball_radius: None,
            max_picard_iters: 50,
            fixed_point_tol: 1e-10,
            initial_guess: InitialGuess::Constant,
            report_contraction: true,
            ml: MlParams::new(0.5, 1.0).expect("default Mittag-Leffler parameters"),
            m0_resolution: 4000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(r) = self.ball_radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::param("ball_radius", format!("must be positive, got {r}")));
            }
        }
        if self.max_picard_iters == 0 {
            return Err(Error::param("max_picard_iters", "must be at least 1"));
        }
        if !(self.fixed_point_tol > 0.0 && self.fixed_point_tol.is_finite()) {
            return Err(Error::param(
                "fixed_point_tol",
                format!("must be positive, got {}", self.fixed_point_tol),
            ));
        }
        if self.m0_resolution < 2 {
            return Err(Error::param("m0_resolution", "need at least two samples"));
        }
        Ok(())
    }
}

/// A computed solution on the time grid, with Picard diagnostics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub time_grid: TimeGrid,
    pub fields: Vec<ComplexField>,
    pub l2: Vec<f64>,
    pub hbeta: Vec<f64>,
    pub linf: Vec<f64>,
    /// Sup-in-time `H^β` distance between successive iterates.
    pub picard_history: Vec<f64>,
    /// Largest ratio of successive distances.
    pub contraction_estimate: f64,
    /// Number of applications of `Φ` performed.
    pub applications: usize,
    pub ball_radius: f64,
    /// Largest `‖u^k‖_∞` over all iterates.
    pub max_iterate_norm: f64,
    /// `M₀` used for the automatic radius and reported bounds.
    pub m0: f64,
}

impl Trajectory {
    /// `‖u‖_∞ = sup_t ‖u(t)‖_{H^β}`.
    pub fn sup_norm(&self) -> f64 {
        self.hbeta.iter().copied().fold(0.0, f64::max)
    }

    /// Picard iterations to convergence, `applications - 1`.
    pub fn converged_after(&self) -> usize {
        self.applications.saturating_sub(1)
    }

    pub fn within_ball(&self) -> bool {
        self.sup_norm() <= self.ball_radius
    }

    /// Ratios `d_k / d_{k-1}` of successive distances.
    pub fn ratios(&self) -> Vec<f64> {
        ratios(&self.picard_history)
    }

    pub fn series(&self) -> TimeSeries<ComplexField> {
        TimeSeries::new(self.time_grid, self.fields.clone()).expect("trajectory length matches grid")
    }
}

fn ratios(history: &[f64]) -> Vec<f64> {
    history
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
        .collect()
}

/// Spectral `H^β` norm weights `(1 + |ξ|²)^β / (2L)^n`.
fn hbeta_weights(grid: &SpatialGrid, beta: f64) -> Vec<f64> {
    let vol = (2.0 * grid.half_width()).powi(grid.dim() as i32);
    grid.xi_norms()
        .iter()
        .map(|&xi| (1.0 + xi * xi).powf(beta) / vol)
        .collect()
}

fn weighted_norm(c: &[Complex64], w: &[f64]) -> f64 {
    c.iter().zip(w).map(|(v, w)| v.norm_sqr() * w).sum::<f64>().sqrt()
}

fn weighted_distance(a: &[Complex64], b: &[Complex64], w: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(w)
        .map(|((x, y), w)| (x - y).norm_sqr() * w)
        .sum::<f64>()
        .sqrt()
}

/// Picard machinery bound to one grid and model: caches the propagator
/// symbols and the Hartree kernel across sweeps.
#[derive(Debug)]
pub struct MildSolver {
    grid: SpatialGrid,
    model: ModelParams,
    cfg: SolverConfig,
    propagator: Propagator,
    weights: Vec<f64>,
}

impl MildSolver {
    pub fn new(grid: &SpatialGrid, model: &ModelParams, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        model.hartree.check_grid(grid)?;
        let propagator = Propagator::new(grid, model.alpha, model.beta, &cfg.ml)?;
        Ok(Self {
            grid: grid.clone(),
            model: model.clone(),
            cfg: cfg.clone(),
            propagator,
            weights: hbeta_weights(grid, model.beta),
        })
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn model(&self) -> &ModelParams {
        &self.model
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn propagator(&self) -> &Propagator {
        &self.propagator
    }

    /// `‖f‖_{H^β}` from spectral coefficients.
    pub fn hbeta_norm(&self, spectrum: &SpectralField) -> f64 {
        weighted_norm(spectrum.coefficients(), &self.weights)
    }

    /// `M₀`: the larger of the dense continuum estimate over
    /// `t ≤ T`, `|ξ| ≤ ξ_max` and the symbols actually used on the lattice.
    pub fn measured_m0(&self) -> Result<f64> {
        let t_max = self.cfg.time_grid.horizon();
        let s_max = self.grid.max_frequency().powf(self.model.beta);
        let continuum = estimate_m0(self.model.alpha, t_max, s_max, self.cfg.m0_resolution, &self.cfg.ml)?;
        let mut sup = continuum.sup;
        for t in self.cfg.time_grid.nodes() {
            sup = sup.max(self.propagator.sup_modulus(t)?);
        }
        Ok(sup)
    }

    fn check_input(&self, u0: &ComplexField) -> Result<()> {
        self.grid.check_same(u0.grid())?;
        if !u0.is_finite() {
            return Err(Error::Domain("initial datum has non-finite values".into()));
        }
        Ok(())
    }

    /// Spectra of the linear evolution at every node.
    pub fn linear_spectra(&self, u0_hat: &SpectralField) -> Result<Vec<SpectralField>> {
        self.cfg
            .time_grid
            .nodes()
            .iter()
            .map(|&t| self.propagator.apply(u0_hat, t))
            .collect()
    }

    /// One application of `Φ` to node spectra `u`.
    pub fn apply_phi_spectra(
        &self,
        u: &[SpectralField],
        linear: &[SpectralField],
        guard: f64,
    ) -> Result<Vec<SpectralField>> {
        let tg = self.cfg.time_grid;
        if u.len() != tg.len() || linear.len() != tg.len() {
            return Err(Error::Shape(format!(
                "trajectory has {} nodes, time grid has {}",
                u.len(),
                tg.len()
            )));
        }
        if self.model.lambda == 0.0 {
            return Ok(linear.to_vec());
        }
        let h = tg.step();
        let steps = tg.steps();
        let n_hat: Vec<SpectralField> = u
            .par_iter()
            .map(|s| {
                let field = inverse_transform(s);
                nonlinearity(&field, &self.model.hartree).map(|f| forward_transform(&f))
            })
            .collect::<Result<_>>()?;
        // trapezoid pairs N̂_k + N̂_{k+1}
        let pairs: Vec<Vec<Complex64>> = (0..steps)
            .into_par_iter()
            .map(|k| {
                n_hat[k]
                    .coefficients()
                    .iter()
                    .zip(n_hat[k + 1].coefficients())
                    .map(|(a, b)| a + b)
                    .collect()
            })
            .collect();
        // propagator at lag midpoints (m + ½)h, m = j - k - 1
        let lags: Vec<_> = (0..steps)
            .map(|m| self.propagator.symbols((m as f64 + 0.5) * h))
            .collect::<Result<_>>()?;
        let slots = self.propagator.slots();
        let coupling = minus_i_pow(self.model.alpha) * (self.model.lambda * 0.5 * h);
        let out: Vec<SpectralField> = (0..=steps)
            .into_par_iter()
            .map(|j| {
                let mut acc = vec![Complex64::new(0.0, 0.0); self.grid.len()];
                for k in 0..j {
                    let sym = &lags[j - k - 1];
                    for ((a, p), &slot) in acc.iter_mut().zip(&pairs[k]).zip(slots) {
                        *a += sym[slot as usize] * p;
                    }
                }
                let lin = linear[j].coefficients();
                for (a, l) in acc.iter_mut().zip(lin) {
                    *a = l + coupling * *a;
                }
                SpectralField::from_parts(self.grid.clone(), acc)
            })
            .collect();
        for (j, s) in out.iter().enumerate() {
            let norm = self.hbeta_norm(s);
            if !norm.is_finite() {
                return Err(Error::Divergence {
                    node: j,
                    time: tg.node(j),
                    reason: "non-finite field".into(),
                });
            }
            if norm > guard {
                return Err(Error::Divergence {
                    node: j,
                    time: tg.node(j),
                    reason: format!("H^beta norm {norm:e} exceeds guard {guard:e}"),
                });
            }
        }
        Ok(out)
    }

    /// Picard iteration from `cfg.initial_guess` until the sup-in-time
    /// `H^β` change falls below `fixed_point_tol`.
    pub fn solve(&self, u0: &ComplexField) -> Result<Trajectory> {
        self.check_input(u0)?;
        let u0_hat = forward_transform(u0);
        let u0_norm = self.hbeta_norm(&u0_hat);
        let m0 = self.measured_m0()?;
        let radius = self
            .cfg
            .ball_radius
            .unwrap_or(2.0 * SQRT_2 * m0 * u0_norm * (1.0 - RADIUS_SLACK));
        // a zero datum gives r = 0; keep the guard meaningful
        let guard = DIVERGENCE_FACTOR * radius.max(u0_norm).max(f64::MIN_POSITIVE);
        let linear = self.linear_spectra(&u0_hat)?;
        let mut current: Vec<SpectralField> = match self.cfg.initial_guess {
            InitialGuess::Constant => vec![u0_hat.clone(); self.cfg.time_grid.len()],
            InitialGuess::Linear => linear.clone(),
        };
        let sup_of = |u: &[SpectralField]| u.iter().map(|s| self.hbeta_norm(s)).fold(0.0, f64::max);
        let mut max_iterate_norm = sup_of(&current);
        let mut history = Vec::new();
        let mut stalled = 0;
        for it in 1..=self.cfg.max_picard_iters {
            let next = self.apply_phi_spectra(&current, &linear, guard)?;
            let d = current
                .iter()
                .zip(&next)
                .map(|(a, b)| weighted_distance(a.coefficients(), b.coefficients(), &self.weights))
                .fold(0.0, f64::max);
            max_iterate_norm = max_iterate_norm.max(sup_of(&next));
            history.push(d);
            current = next;
            if d < self.cfg.fixed_point_tol {
                return Ok(self.finish(current, history, it, radius, max_iterate_norm, m0));
            }
            if history.len() >= 3 {
                let n = history.len();
                if history[n - 1] >= STALL_RATIO * history[n - 2] {
                    stalled += 1;
                } else {
                    stalled = 0;
                }
                if stalled >= STALL_STEPS {
                    return Err(Error::NonContraction {
                        iterations: it,
                        distance: d,
                        ratio: history[n - 1] / history[n - 2],
                    });
                }
            }
        }
        let n = history.len();
        let ratio = if n >= 2 && history[n - 2] > 0.0 {
            history[n - 1] / history[n - 2]
        } else {
            f64::NAN
        };
        Err(Error::NonContraction {
            iterations: self.cfg.max_picard_iters,
            distance: history[n - 1],
            ratio,
        })
    }

    fn finish(
        &self,
        spectra: Vec<SpectralField>,
        history: Vec<f64>,
        applications: usize,
        ball_radius: f64,
        max_iterate_norm: f64,
        m0: f64,
    ) -> Trajectory {
        let hbeta: Vec<f64> = spectra.iter().map(|s| self.hbeta_norm(s)).collect();
        let fields: Vec<ComplexField> = spectra.par_iter().map(inverse_transform).collect();
        let l2 = fields.iter().map(|f| lp_norm(f, 2.0).expect("p = 2")).collect();
        let linf = fields.iter().map(ComplexField::max_abs).collect();
        let contraction_estimate = ratios(&history).into_iter().fold(0.0, f64::max);
        Trajectory {
            time_grid: self.cfg.time_grid,
            fields,
            l2,
            hbeta,
            linf,
            picard_history: history,
            contraction_estimate,
            applications,
            ball_radius,
            max_iterate_norm,
            m0,
        }
    }

    /// `Φ` applied to a full trajectory; returns the new node fields.
    pub fn apply_phi(&self, u: &Trajectory, u0: &ComplexField) -> Result<Vec<ComplexField>> {
        self.check_input(u0)?;
        let u0_hat = forward_transform(u0);
        let linear = self.linear_spectra(&u0_hat)?;
        let spectra: Vec<SpectralField> = u.fields.par_iter().map(forward_transform).collect();
        let guard = DIVERGENCE_FACTOR * u.ball_radius.max(self.hbeta_norm(&u0_hat)).max(f64::MIN_POSITIVE);
        let out = self.apply_phi_spectra(&spectra, &linear, guard)?;
        Ok(out.par_iter().map(inverse_transform).collect())
    }

    /// `sup_t ‖Φ(u) - u‖_{H^β}` for a trajectory.
    pub fn fixed_point_residual(&self, u: &Trajectory, u0: &ComplexField) -> Result<f64> {
        let next = self.apply_phi(u, u0)?;
        Ok(self.sup_distance(&next, &u.fields))
    }

    /// `sup_t ‖a(t) - b(t)‖_{H^β}`.
    pub fn sup_distance(&self, a: &[ComplexField], b: &[ComplexField]) -> f64 {
        a.par_iter()
            .zip(b)
            .map(|(x, y)| {
                let d = forward_transform(&x.sub(y).expect("same grid"));
                self.hbeta_norm(&d)
            })
            .reduce(|| 0.0, f64::max)
    }
}

/// `F⁻¹[E_α((-it)^α|ξ|^β) û₀]`.
pub fn linear_evolve(u0: &ComplexField, t: f64, m: &ModelParams, ml: &MlParams) -> Result<ComplexField> {
    let prop = Propagator::new(u0.grid(), m.alpha, m.beta, ml)?;
    Ok(inverse_transform(&prop.apply(&forward_transform(u0), t)?))
}

/// One application of `Φ_{u₀}` to `u`.
pub fn apply_phi(u: &Trajectory, u0: &ComplexField, m: &ModelParams, cfg: &SolverConfig) -> Result<Vec<ComplexField>> {
    MildSolver::new(u0.grid(), m, cfg)?.apply_phi(u, u0)
}

/// Picard solve of the mild formulation.
pub fn solve(u0: &ComplexField, m: &ModelParams, cfg: &SolverConfig) -> Result<Trajectory> {
    MildSolver::new(u0.grid(), m, cfg)?.solve(u0)
}

/// Automatic ball radius `2√2·M₀·‖u₀‖·(1-ε)`.
pub fn auto_radius(u0_norm: f64, m0: f64) -> f64 {
    2.0 * SQRT_2 * m0 * u0_norm * (1.0 - RADIUS_SLACK)
}

/// Local existence time `T*`: the smaller of the ball-invariance bound
/// `1/(6√2·|λ|·C·M₀·r²)` and the contraction bound `1/((3r²+r)·|λ|·C·M₀)`
/// at the automatic radius. Infinite for `λ = 0`.
pub fn estimate_local_horizon(u0_norm: f64, m: &ModelParams, m0: f64, c_emp: f64) -> f64 {
    let lam = m.lambda.abs();
    if lam == 0.0 || c_emp == 0.0 {
        return f64::INFINITY;
    }
    let r = auto_radius(u0_norm, m0);
    let invariance = 1.0 / (6.0 * SQRT_2 * lam * c_emp * m0 * r * r);
    let contraction = 1.0 / ((3.0 * r * r + r) * lam * c_emp * m0);
    invariance.min(contraction)
}

/// Output of [`continuous_dependence`].
#[derive(Debug, Clone, PartialEq)]
pub struct DependenceReport {
    /// `‖u - v‖_∞`.
    pub solution_distance: f64,
    /// `‖u₀ - v₀‖_{H^β}`.
    pub initial_distance: f64,
    pub ratio: f64,
    /// `√2·M₀/(1 - √2·T·|λ|·C·M₀)` when the denominator is positive.
    pub bound: Option<f64>,
    pub within_bound: Option<bool>,
    pub m0: f64,
}

/// Solve from `u0` and `v0` and compare.
pub fn continuous_dependence(
    u0: &ComplexField,
    v0: &ComplexField,
    m: &ModelParams,
    cfg: &SolverConfig,
    c_emp: f64,
) -> Result<DependenceReport> {
    let solver = MildSolver::new(u0.grid(), m, cfg)?;
    let u = solver.solve(u0)?;
    let v = solver.solve(v0)?;
    let solution_distance = solver.sup_distance(&u.fields, &v.fields);
    let initial_distance = solver.hbeta_norm(&forward_transform(&u0.sub(v0)?));
    let ratio = if initial_distance > 0.0 {
        solution_distance / initial_distance
    } else {
        0.0
    };
    let m0 = u.m0.max(v.m0);
    let denom = 1.0 - SQRT_2 * cfg.time_grid.horizon() * m.lambda.abs() * c_emp * m0;
    let bound = (denom > 0.0).then(|| SQRT_2 * m0 / denom);
    Ok(DependenceReport {
        solution_distance,
        initial_distance,
        ratio,
        bound,
        within_bound: bound.map(|b| ratio <= b),
        m0,
    })
}

/// Per-node `‖i^α D^α u - (-Δ)^{β/2}u - λ J^{1-α} N(u)‖₂`. Node 0 is 0 by
/// the convention `D^α u(0) = 0`.
pub fn strong_form_residual(traj: &Trajectory, m: &ModelParams) -> Result<TimeSeries<f64>> {
    let u = traj.series();
    let d = caputo_derivative(&u, m.alpha)?;
    let nl = TimeSeries::new(
        traj.time_grid,
        traj.fields
            .par_iter()
            .map(|f| nonlinearity(f, &m.hartree))
            .collect::<Result<Vec<_>>>()?,
    )?;
    let memory = if m.alpha == 1.0 { nl } else { rl_integral(&nl, 1.0 - m.alpha)? };
    let i_alpha = Complex64::from_polar(1.0, 0.5 * m.alpha * std::f64::consts::PI);
    let values: Vec<f64> = (0..traj.time_grid.len())
        .into_par_iter()
        .map(|j| {
            if j == 0 {
                return Ok(0.0);
            }
            let lap = fractional_laplacian(&traj.fields[j], m.beta)?;
            let mut r = d.get(j).scale(i_alpha).sub(&lap)?;
            r.axpy(Complex64::new(-m.lambda, 0.0), memory.get(j))?;
            lp_norm(&r, 2.0)
        })
        .collect::<Result<_>>()?;
    TimeSeries::new(traj.time_grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::sobolev_norm;

    fn gaussian(grid: &SpatialGrid, amp: f64, width: f64) -> ComplexField {
        ComplexField::from_fn(grid, |x| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            Complex64::new(amp * (-r2 / (2.0 * width * width)).exp(), 0.0)
        })
    }

    fn model(alpha: f64, beta: f64, lambda: f64, gamma: f64) -> ModelParams {
        ModelParams::new(alpha, beta, lambda, HartreeParams::constant_one(gamma).unwrap()).unwrap()
    }

    fn config(t: f64, steps: usize) -> SolverConfig {
        let mut c = SolverConfig::new(TimeGrid::new(t, steps).unwrap());
        c.m0_resolution = 400;
        c
    }

    #[test]
    fn spectral_hbeta_matches_physical() {
        let g = SpatialGrid::new(2, 32, 6.0).unwrap();
        let u = gaussian(&g, 1.3, 0.8);
        let w = hbeta_weights(&g, 0.7);
        let a = weighted_norm(forward_transform(&u).coefficients(), &w);
        let b = sobolev_norm(&u, 0.7, 2.0).unwrap();
        assert!((a - b).abs() < 1e-12 * b);
    }

    #[test]
    fn linear_evolve_basics() {
        let g = SpatialGrid::new(1, 64, 8.0).unwrap();
        let ml = MlParams::new(0.5, 1.0).unwrap();
        let u0 = gaussian(&g, 1.0, 1.0);
        let m = model(0.5, 1.0, 0.0, 0.5);
        let same = linear_evolve(&u0, 0.0, &m, &ml).unwrap();
        for (a, b) in same.values().iter().zip(u0.values()) {
            assert!((a - b).norm() < 1e-14);
        }
        let classical = model(1.0, 2.0, 0.0, 0.5);
        let k = [5, 0];
        let pw = ComplexField::plane_wave(&g, k);
        let xi = g.mode_frequency(k)[0];
        let out = linear_evolve(&pw, 0.6, &classical, &ml).unwrap();
        let phase = Complex64::from_polar(1.0, -0.6 * xi * xi);
        for (a, b) in out.values().iter().zip(pw.values()) {
            assert!((a - b * phase).norm() < 1e-12);
        }
        // λ does not enter the linear part
        let other = model(0.5, 1.0, -3.0, 0.5);
        assert_eq!(
            linear_evolve(&u0, 0.4, &m, &ml).unwrap(),
            linear_evolve(&u0, 0.4, &other, &ml).unwrap()
        );
    }

    #[test]
    fn linear_bound_by_m0() {
        let g = SpatialGrid::new(1, 64, 8.0).unwrap();
        let m = model(0.5, 1.0, 0.0, 0.5);
        let cfg = config(1.0, 10);
        let solver = MildSolver::new(&g, &m, &cfg).unwrap();
        let m0 = solver.measured_m0().unwrap();
        let u0 = gaussian(&g, 1.0, 0.7);
        let n0 = sobolev_norm(&u0, 1.0, 2.0).unwrap();
        for t in cfg.time_grid.nodes() {
            let u = linear_evolve(&u0, t, &m, &cfg.ml).unwrap();
            assert!(sobolev_norm(&u, 1.0, 2.0).unwrap() <= SQRT_2 * m0 * n0);
        }
    }

    #[test]
    fn zero_coupling_converges_in_one_iteration() {
        let g = SpatialGrid::new(1, 64, 8.0).unwrap();
        let m = model(0.6, 0.8, 0.0, 0.5);
        let cfg = config(0.5, 16);
        let u0 = gaussian(&g, 1.0, 1.0);
        let traj = solve(&u0, &m, &cfg).unwrap();
        assert_eq!(traj.converged_after(), 1);
        assert!(traj.picard_history[1] < 1e-12);
        for (j, t) in cfg.time_grid.nodes().into_iter().enumerate() {
            let lin = linear_evolve(&u0, t, &m, &cfg.ml).unwrap();
            for (a, b) in traj.fields[j].values().iter().zip(lin.values()) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_datum_stays_zero() {
        let g = SpatialGrid::new(1, 32, 4.0).unwrap();
        let m = model(0.5, 0.8, 1.0, 0.5);
        let traj = solve(&ComplexField::zeros(&g), &m, &config(0.5, 8)).unwrap();
        assert!(traj.fields.iter().all(|f| f.max_abs() == 0.0));
        let r = strong_form_residual(&traj, &m).unwrap();
        assert!(r.samples().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn one_application_from_zero_is_linear() {
        let g = SpatialGrid::new(1, 32, 4.0).unwrap();
        let m = model(0.5, 0.8, 1.0, 0.5);
        let cfg = config(0.5, 8);
        let solver = MildSolver::new(&g, &m, &cfg).unwrap();
        let u0 = gaussian(&g, 0.5, 1.0);
        let zero = Trajectory {
            fields: vec![ComplexField::zeros(&g); 9],
            ..solve(&u0, &m, &cfg).unwrap()
        };
        let out = solver.apply_phi(&zero, &u0).unwrap();
        for (j, t) in cfg.time_grid.nodes().into_iter().enumerate() {
            let lin = linear_evolve(&u0, t, &m, &cfg.ml).unwrap();
            for (a, b) in out[j].values().iter().zip(lin.values()) {
                assert!((a - b).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn small_data_contracts_and_is_a_fixed_point() {
        let g = SpatialGrid::new(1, 64, 8.0).unwrap();
        let m = model(0.5, 0.8, 1.0, 0.5);
        let mut cfg = config(0.5, 32);
        cfg.fixed_point_tol = 1e-12;
        let u0 = gaussian(&g, 0.1, 1.0);
        let solver = MildSolver::new(&g, &m, &cfg).unwrap();
        let traj = solver.solve(&u0).unwrap();
        assert!(traj.contraction_estimate < 0.5);
        let r = traj.ratios();
        assert!(r.iter().all(|x| *x < 1.0), "{r:?}");
        assert!(solver.fixed_point_residual(&traj, &u0).unwrap() < cfg.fixed_point_tol);
        // uniqueness probe
        cfg.initial_guess = InitialGuess::Linear;
        let other = solve(&u0, &m, &cfg).unwrap();
        assert!(solver.sup_distance(&traj.fields, &other.fields) < 10.0 * cfg.fixed_point_tol);
    }

    #[test]
    fn horizon_estimate_scaling() {
        let m = model(0.5, 0.9, 1.0, 1.0);
        let t1 = estimate_local_horizon(1.0, &m, 2.0, 0.5);
        let t2 = estimate_local_horizon(2.0, &m, 2.0, 0.5);
        assert!(t1 > 0.0 && t1.is_finite());
        // r²-dominated for r ≫ 1: doubling the datum divides T* by about four
        assert!((t1 / t2 - 4.0).abs() < 0.5, "{}", t1 / t2);
        let weak = model(0.5, 0.9, 1e-9, 1.0);
        assert!(estimate_local_horizon(1.0, &weak, 2.0, 0.5) > 1e6);
        assert!(estimate_local_horizon(1.0, &model(0.5, 0.9, 0.0, 1.0), 2.0, 0.5).is_infinite());
    }

    #[test]
    fn large_data_reports_non_contraction_or_divergence() {
        let g = SpatialGrid::new(1, 64, 8.0).unwrap();
        let m = model(0.5, 0.8, 1.0, 0.5);
        let mut cfg = config(20.0, 32);
        cfg.max_picard_iters = 30;
        let u0 = gaussian(&g, 6.0, 1.0);
        match solve(&u0, &m, &cfg) {
            Err(Error::NonContraction { .. }) | Err(Error::Divergence { .. }) => {}
            other => panic!("expected failure, got {:?}", other.map(|t| t.picard_history)),
        }
    }

    #[test]
    fn dependence_linear_case() {
        let g = SpatialGrid::new(1, 64, 8.0).unwrap();
        let m = model(0.5, 1.0, 0.0, 0.5);
        let cfg = config(1.0, 8);
        let u0 = gaussian(&g, 1.0, 1.0);
        let same = continuous_dependence(&u0, &u0, &m, &cfg, 1.0).unwrap();
        assert_eq!(same.solution_distance, 0.0);
        let v0 = u0.add(&gaussian(&g, 1e-5, 0.5)).unwrap();
        let rep = continuous_dependence(&u0, &v0, &m, &cfg, 1.0).unwrap();
        assert!(rep.ratio <= SQRT_2 * rep.m0);
        assert_eq!(rep.within_bound, Some(true));
    }

    #[test]
    fn classical_plane_wave_residual_is_small() {
        let g = SpatialGrid::new(1, 32, 4.0).unwrap();
        let m = model(1.0, 2.0, 0.0, 0.5);
        let k = [2, 0];
        let u0 = ComplexField::plane_wave(&g, k);
        let xi2 = g.mode_frequency(k)[0].powi(2);
        let coarse = strong_form_residual(&solve(&u0, &m, &config(1.0, 64)).unwrap(), &m).unwrap();
        let fine = strong_form_residual(&solve(&u0, &m, &config(1.0, 128)).unwrap(), &m).unwrap();
        // backward difference: first order, error ≈ h·ξ⁴/2 relative to the mass
        let mass = lp_norm(&u0, 2.0).unwrap();
        assert!(*fine.last() < 0.6 * *coarse.last());
        assert!(*coarse.last() < xi2 * xi2 / 64.0 * mass);
    }

    #[test]
    fn hypothesis_flags() {
        let g1 = SpatialGrid::new(1, 16, 2.0).unwrap();
        let g2 = SpatialGrid::new(2, 16, 2.0).unwrap();
        assert!(model(0.5, 0.8, 1.0, 1.0).hypothesis_violations(&g2).is_empty());
        assert_eq!(model(0.5, 0.8, 1.0, 0.5).hypothesis_violations(&g1).len(), 1);
        assert_eq!(model(0.5, 0.3, 0.0, 1.0).hypothesis_violations(&g2).len(), 2);
    }
}
