//! Fractional calculus on uniform time grids: the kernel
//! `g_α(t) = t^{α-1}/Γ(α)`, the Riemann-Liouville integral `J^α = g_α * ·`
//! and the Caputo derivative `D^α = J^{1-α} ∂_t`.
//!
//! `J^α` uses piecewise-linear product integration: on each subinterval the
//! sample is linearly interpolated and the kernel integrated in closed form.
//! `D^α` is the L1 scheme, i.e. the same construction applied to the
//! piecewise-constant difference quotient.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, SpectralField};
use crate::special::gamma;

/// Uniform grid `t_j = jT/N_t`, `j = 0..=N_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::param("horizon", format!("must be positive and finite, got {horizon}")));
        }
        if steps == 0 {
            return Err(Error::param("steps", "need at least one time step"));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of nodes, `N_t + 1`.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        if j == self.steps {
            self.horizon
        } else {
            self.horizon * j as f64 / self.steps as f64
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.steps).map(|j| self.node(j)).collect()
    }

    /// Same horizon, `factor` times as many steps.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.horizon, self.steps * factor)
    }
}

/// Values that can be combined linearly with real weights.
pub trait Linear: Clone + Send + Sync {
    fn zero_like(&self) -> Self;
    /// `self += a·x`.
    fn add_scaled(&mut self, a: f64, x: &Self);
    /// Whether `self` and `other` live in the same space.
    fn compatible(&self, _other: &Self) -> bool {
        true
    }
}

impl Linear for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn add_scaled(&mut self, a: f64, x: &Self) {
        *self += a * x;
    }
}

impl Linear for Complex64 {
    fn zero_like(&self) -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn add_scaled(&mut self, a: f64, x: &Self) {
        *self += x * a;
    }
}

impl Linear for ComplexField {
    fn zero_like(&self) -> Self {
        ComplexField::zeros(self.grid())
    }
    fn add_scaled(&mut self, a: f64, x: &Self) {
        for (s, v) in self.values_mut().iter_mut().zip(x.values()) {
            *s += v * a;
        }
    }
    fn compatible(&self, other: &Self) -> bool {
        self.grid() == other.grid()
    }
}

impl Linear for SpectralField {
    fn zero_like(&self) -> Self {
        SpectralField::zeros(self.grid())
    }
    fn add_scaled(&mut self, a: f64, x: &Self) {
        for (s, v) in self.coefficients_mut().iter_mut().zip(x.coefficients()) {
            *s += v * a;
        }
    }
    fn compatible(&self, other: &Self) -> bool {
        self.grid() == other.grid()
    }
}

/// One sample per node of a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T> {
    grid: TimeGrid,
    samples: Vec<T>,
}

impl<T: Linear> TimeSeries<T> {
    pub fn new(grid: TimeGrid, samples: Vec<T>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::Shape(format!(
                "time series has {} samples, grid has {} nodes",
                samples.len(),
                grid.len()
            )));
        }
        if samples.iter().any(|s| !s.compatible(&samples[0])) {
            return Err(Error::Shape("time series samples live on different grids".into()));
        }
        Ok(Self { grid, samples })
    }

    pub fn from_fn<F: Fn(f64) -> T>(grid: TimeGrid, f: F) -> Self {
        let samples = grid.nodes().into_iter().map(f).collect();
        Self { grid, samples }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    pub fn get(&self, j: usize) -> &T {
        &self.samples[j]
    }

    pub fn last(&self) -> &T {
        &self.samples[self.grid.steps]
    }

    pub fn map<U: Linear, F: Fn(&T) -> U>(&self, f: F) -> TimeSeries<U> {
        TimeSeries {
            grid: self.grid,
            samples: self.samples.iter().map(f).collect(),
        }
    }

    /// `self + a·other`, nodewise.
    pub fn add_scaled(&self, a: f64, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::Shape("time series on different time grids".into()));
        }
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(s, o)| {
                let mut s = s.clone();
                s.add_scaled(a, o);
                s
            })
            .collect();
        Ok(Self {
            grid: self.grid,
            samples,
        })
    }
}

/// `g_α(t) = t^{α-1}/Γ(α)`.
pub fn g_kernel(alpha: f64, t: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::param("alpha", format!("must be positive, got {alpha}")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("g_alpha is defined for t > 0, got t = {t}")));
    }
    Ok(t.powf(alpha - 1.0) / gamma(alpha))
}

/// `(m+1)^p - m^p` without cancellation for large `m`.
fn power_step(m: f64, p: f64) -> f64 {
    if m == 0.0 {
        1.0
    } else {
        m.powf(p) * (p * (1.0 / m).ln_1p()).exp_m1()
    }
}

/// Product-integration weights of `u_k` and `u_{k+1}` over the subinterval
/// at lag `m = j - k - 1` for the kernel `g_α`, step `h`.
pub fn interval_moments(alpha: f64, h: f64, m: usize) -> (f64, f64) {
    let mf = m as f64;
    let scale = h.powf(alpha) / gamma(alpha);
    let d1 = power_step(mf, alpha + 1.0) / (alpha + 1.0);
    let d0 = power_step(mf, alpha) / alpha;
    (scale * (d1 - mf * d0), scale * ((mf + 1.0) * d0 - d1))
}

/// `J^α u` at every node; node 0 maps to zero.
pub fn rl_integral<T: Linear>(u: &TimeSeries<T>, alpha: f64) -> Result<TimeSeries<T>> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::param("alpha", format!("must be positive, got {alpha}")));
    }
    let grid = u.grid;
    let h = grid.step();
    let moments: Vec<(f64, f64)> = (0..grid.steps).map(|m| interval_moments(alpha, h, m)).collect();
    let s = &u.samples;
    let samples = (0..=grid.steps)
        .into_par_iter()
        .map(|j| {
            let mut acc = s[0].zero_like();
            for k in 0..j {
                let (a, b) = moments[j - k - 1];
                acc.add_scaled(a, &s[k]);
                acc.add_scaled(b, &s[k + 1]);
            }
            acc
        })
        .collect();
    Ok(TimeSeries { grid, samples })
}

/// Caputo derivative `D^α u` (L1 scheme) for `α ∈ (0, 1]`; node 0 maps to
/// zero. `α = 1` is the backward difference.
pub fn caputo_derivative<T: Linear>(u: &TimeSeries<T>, alpha: f64) -> Result<TimeSeries<T>> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::param("alpha", format!("must lie in (0, 1], got {alpha}")));
    }
    let grid = u.grid;
    let h = grid.step();
    let s = &u.samples;
    let weights: Vec<f64> = if alpha == 1.0 {
        let mut w = vec![0.0; grid.steps];
        w[0] = 1.0 / h;
        w
    } else {
        let scale = h.powf(-alpha) / gamma(2.0 - alpha);
        (0..grid.steps)
            .map(|m| scale * power_step(m as f64, 1.0 - alpha))
            .collect()
    };
    let samples = (0..=grid.steps)
        .into_par_iter()
        .map(|j| {
            let mut acc = s[0].zero_like();
            for k in 0..j {
                let w = weights[j - k - 1];
                if w != 0.0 {
                    acc.add_scaled(w, &s[k + 1]);
                    acc.add_scaled(-w, &s[k]);
                }
            }
            acc
        })
        .collect();
    Ok(TimeSeries { grid, samples })
}

/// Least-squares slope of `log error` against `log h`, with `h ∝ 1/steps`.
///
/// Returns `None` with fewer than two usable (positive, finite) errors.
pub fn observed_order(steps: &[usize], errors: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = steps
        .iter()
        .zip(errors)
        .filter(|(_, e)| **e > 0.0 && e.is_finite())
        .map(|(&n, &e)| (-(n as f64).ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}
