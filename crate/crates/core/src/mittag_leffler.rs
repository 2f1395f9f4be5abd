//! Two-parameter Mittag-Leffler function `E_{α,η}(z) = Σ zⁿ / Γ(αn + η)`
//! for `0 < α ≤ 1`, real `η`, complex `z`, and the fractional Schrödinger
//! propagator symbol `E_α((-it)^α |ξ|^β)` built from it.
//!
//! Evaluation dispatches between three representations:
//!
//! * the Taylor series, with compensated summation, when `|z| ≤ R₀` and the
//!   observed cancellation (Σ|terms| / |sum|) leaves the requested accuracy;
//! * the asymptotic expansion
//!   `(1/α) z^{(1-η)/α} exp(z^{1/α}) - Σ_k z^{-k} / Γ(η - αk)` once
//!   `|z|^{1/α}` is large enough that the optimally truncated remainder is
//!   below double precision;
//! * otherwise the Hankel-contour integral
//!   `(1/2πiα) ∫ ζ^{(1-η)/α} exp(ζ^{1/α}) / (ζ - z) dζ` along two rays
//!   `arg ζ = ±δ` joined by an arc `|ζ| = ε`, plus the residue at `ζ = z`
//!   when `z` lies inside the contour.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, RwLock};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{SpatialGrid, SpectralField};
use crate::quad::{self, QuadOptions};
use crate::special::{ln_gamma, rgamma};

/// `|z|^{1/α}` above which the asymptotic expansion is trusted.
const ASYMPTOTIC_ROOT_MIN: f64 = 40.0;
/// Decay exponent at which the contour rays are truncated.
const RAY_CUTOFF: f64 = 80.0;

/// Parameters and tolerances for [`ml`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlParams {
    pub alpha: f64,
    pub eta: f64,
    /// Relative accuracy the series must certify before it is accepted.
    pub series_tol: f64,
    /// `R₀`: series is attempted only for `|z| ≤ R₀`.
    pub regime_radius: f64,
    pub max_terms: usize,
}

impl MlParams {
    pub fn new(alpha: f64, eta: f64) -> Result<Self> {
        let p = Self {
            alpha,
            eta,
            series_tol: 1e-13,
            regime_radius: 5.0,
            max_terms: 20_000,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_series_tol(mut self, tol: f64) -> Result<Self> {
        self.series_tol = tol;
        self.validate()?;
        Ok(self)
    }

    pub fn with_regime_radius(mut self, radius: f64) -> Result<Self> {
        self.regime_radius = radius;
        self.validate()?;
        Ok(self)
    }

    /// Same tolerances, different `(α, η)`.
    pub fn with_orders(mut self, alpha: f64, eta: f64) -> Result<Self> {
        self.alpha = alpha;
        self.eta = eta;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::param("alpha", format!("must lie in (0, 1], got {}", self.alpha)));
        }
        if !self.eta.is_finite() {
            return Err(Error::param("eta", "must be finite"));
        }
        if !(self.series_tol > 0.0 && self.series_tol <= 1e-6) {
            return Err(Error::param(
                "series_tol",
                format!("must lie in (0, 1e-6], got {}", self.series_tol),
            ));
        }
        if !(self.regime_radius > 1.0 && self.regime_radius.is_finite()) {
            return Err(Error::param(
                "regime_radius",
                format!("must exceed 1, got {}", self.regime_radius),
            ));
        }
        Ok(())
    }
}

/// Which representation produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Origin,
    Exponential,
    Series,
    Asymptotic,
    Contour,
}

/// The argument together with its principal `1/α` root.
///
/// The root is carried separately so that callers who know it exactly (the
/// propagator ray, where it is purely imaginary) avoid the phase error of
/// recomputing it from `z`.
#[derive(Debug, Clone, Copy)]
struct Arg {
    z: Complex64,
    modulus: f64,
    arg: f64,
    root: Complex64,
    root_arg: f64,
}

impl Arg {
    fn from_z(z: Complex64, alpha: f64) -> Self {
        let modulus = z.norm();
        let arg = z.arg();
        let root_mod = modulus.powf(1.0 / alpha);
        let root_arg = arg / alpha;
        Self {
            z,
            modulus,
            arg,
            root: Complex64::from_polar(root_mod, root_arg),
            root_arg,
        }
    }
}

fn evaluation_error(a: &Arg, alpha: f64, reason: impl Into<String>) -> Error {
    Error::Evaluation {
        modulus: a.modulus,
        alpha,
        reason: reason.into(),
    }
}

/// `E_{α,η}(z)`.
pub fn ml(z: Complex64, p: &MlParams) -> Result<Complex64> {
    ml_with_regime(z, p).map(|(v, _)| v)
}

/// `E_{α,η}(z)` and the regime that produced it.
pub fn ml_with_regime(z: Complex64, p: &MlParams) -> Result<(Complex64, Regime)> {
    p.validate()?;
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("non-finite Mittag-Leffler argument {z}")));
    }
    dispatch(&Arg::from_z(z, p.alpha), p)
}

/// Evaluate in a forced regime. `Origin`/`Exponential` are only valid where
/// they are exact; the others may fail where their representation does not
/// converge.
pub fn ml_in_regime(z: Complex64, p: &MlParams, regime: Regime) -> Result<Complex64> {
    p.validate()?;
    let a = Arg::from_z(z, p.alpha);
    match regime {
        Regime::Origin => Ok(Complex64::new(rgamma(p.eta), 0.0)),
        Regime::Exponential => Ok(z.exp()),
        Regime::Series => {
            let s = series(&a, p);
            if s.converged {
                Ok(s.sum)
            } else {
                Err(evaluation_error(&a, p.alpha, "series did not converge"))
            }
        }
        Regime::Asymptotic => asymptotic(&a, p)?
            .ok_or_else(|| evaluation_error(&a, p.alpha, "asymptotic expansion not accurate here")),
        Regime::Contour => contour(&a, p),
    }
}

fn dispatch(a: &Arg, p: &MlParams) -> Result<(Complex64, Regime)> {
    if a.modulus == 0.0 {
        return Ok((Complex64::new(rgamma(p.eta), 0.0), Regime::Origin));
    }
    if p.alpha == 1.0 && p.eta == 1.0 {
        return Ok((exp_of_root(a), Regime::Exponential));
    }
    if a.modulus <= p.regime_radius {
        let s = series(a, p);
        if s.converged && 4.0 * f64::EPSILON * s.abs_sum <= p.series_tol * s.sum.norm() {
            return Ok((s.sum, Regime::Series));
        }
    } else if let Some(v) = asymptotic(a, p)? {
        return Ok((v, Regime::Asymptotic));
    }
    contour(a, p).map(|v| (v, Regime::Contour))
}

fn exp_of_root(a: &Arg) -> Complex64 {
    let (s, c) = a.root.im.sin_cos();
    let m = a.root.re.exp();
    Complex64::new(m * c, m * s)
}

struct SeriesSum {
    sum: Complex64,
    abs_sum: f64,
    converged: bool,
}

/// Neumaier-compensated accumulator for one real component.
#[derive(Default)]
struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

fn series(a: &Arg, p: &MlParams) -> SeriesSum {
    let (alpha, eta) = (p.alpha, p.eta);
    let ln_mod = a.modulus.ln();
    let mut re = Compensated::default();
    let mut im = Compensated::default();
    let mut abs_sum = 0.0;
    let mut power = Complex64::new(1.0, 0.0);
    let mut prev = f64::INFINITY;
    let mut small = 0;
    for n in 0..p.max_terms {
        let x = alpha * n as f64 + eta;
        let nf = n as f64;
        let term = if x < 170.0 && nf * ln_mod < 650.0 {
            power * rgamma(x)
        } else if x <= 0.0 {
            // 1/Γ is tiny only far from here; stay on the direct path
            power * rgamma(x)
        } else {
            Complex64::from_polar((nf * ln_mod - ln_gamma(x)).exp(), nf * a.arg)
        };
        re.add(term.re);
        im.add(term.im);
        let t = term.norm();
        abs_sum += t;
        small = if t <= 1e-18 * abs_sum && t <= prev { small + 1 } else { 0 };
        if n > 2 && small >= 2 {
            return SeriesSum {
                sum: Complex64::new(re.value(), im.value()),
                abs_sum,
                converged: true,
            };
        }
        prev = t;
        if nf * ln_mod < 650.0 {
            power *= a.z;
        }
    }
    SeriesSum {
        sum: Complex64::new(re.value(), im.value()),
        abs_sum,
        converged: false,
    }
}

fn residue_term(a: &Arg, alpha: f64, eta: f64) -> Result<Complex64> {
    if a.root.re > 700.0 {
        return Err(evaluation_error(a, alpha, "exp(z^(1/alpha)) overflows"));
    }
    let pre = if eta == 1.0 {
        Complex64::new(1.0, 0.0)
    } else {
        let rm = a.root.norm();
        Complex64::from_polar(rm.powf(1.0 - eta), (1.0 - eta) * a.root_arg)
    };
    Ok(pre * exp_of_root(a) / alpha)
}

fn asymptotic(a: &Arg, p: &MlParams) -> Result<Option<Complex64>> {
    let (alpha, eta) = (p.alpha, p.eta);
    if a.root.norm() < ASYMPTOTIC_ROOT_MIN {
        return Ok(None);
    }
    let residue = if a.arg.abs() <= (alpha * PI).min(PI) {
        residue_term(a, alpha, eta)?
    } else {
        Complex64::new(0.0, 0.0)
    };
    let inv = a.z.inv();
    let ln_mod = a.modulus.ln();
    let mut power = Complex64::new(1.0, 0.0);
    let mut tail = Complex64::new(0.0, 0.0);
    let mut prev = f64::INFINITY;
    for k in 1..=600 {
        power *= inv;
        let x = eta - alpha * k as f64;
        if x < -170.0 {
            return Ok(None);
        }
        tail -= power * rgamma(x);
        // smooth envelope of |z^{-k}/Γ(x)|, blind to the zeros of 1/Γ
        let ln_env = -(k as f64) * ln_mod
            + if x >= 0.5 { -ln_gamma(x) } else { ln_gamma(1.0 - x) - PI.ln() };
        let env = ln_env.exp();
        if env <= 1e-17 * (residue.norm() + tail.norm()) {
            return Ok(Some(residue + tail));
        }
        if env > prev {
            return Ok(None);
        }
        prev = env;
    }
    Ok(None)
}

fn contour(a: &Arg, p: &MlParams) -> Result<Complex64> {
    let (alpha, eta) = (p.alpha, p.eta);
    let delta_max = (alpha * PI).min(PI);
    // keep the pole ζ = z away from the rays
    let delta = if (a.arg.abs() - delta_max).abs() < 0.1 * alpha * PI {
        0.75 * delta_max
    } else {
        delta_max
    };
    let eps = 0.5 * a.modulus.min(1.0);
    let decay = (delta / alpha).cos();
    let rho_max = (RAY_CUTOFF / decay.abs()).powf(alpha).max(2.0 * eps);
    let expo = (1.0 - eta) / alpha;
    let z = a.z;

    let integrand = move |rho: f64, theta: f64| -> Complex64 {
        let zeta = Complex64::from_polar(rho, theta);
        let root = Complex64::from_polar(rho.powf(1.0 / alpha), theta / alpha);
        let pre = Complex64::from_polar(rho.powf(expo), theta * expo);
        pre * root.exp() / (zeta - z)
    };

    let opts = QuadOptions {
        abs_tol: 1e-300,
        rel_tol: 1e-14,
        max_intervals: 600,
    };
    let up = Complex64::from_polar(1.0, delta);
    let down = Complex64::from_polar(1.0, -delta);
    let rays = quad::integrate(
        |rho| integrand(rho, delta) * up - integrand(rho, -delta) * down,
        eps,
        rho_max,
        opts,
    );
    let arc = quad::integrate(
        |phi| integrand(eps, phi) * Complex64::new(0.0, eps) * Complex64::from_polar(1.0, phi),
        -delta,
        delta,
        opts,
    );
    let scale = Complex64::new(0.0, 2.0 * PI * alpha);
    let mut value = (rays.value + arc.value) / scale;
    let err = (rays.error + arc.error) / scale.norm();
    if a.arg.abs() < delta {
        value += residue_term(a, alpha, eta)?;
    }
    if !(value.re.is_finite() && value.im.is_finite()) {
        return Err(evaluation_error(a, alpha, "contour integral is not finite"));
    }
    if !(rays.converged && arc.converged) && err > 1e-8 * value.norm().max(1e-300) {
        return Err(evaluation_error(
            a,
            alpha,
            format!("contour quadrature stalled with error estimate {err:e}"),
        ));
    }
    Ok(value)
}

/// Direction `e^{-iαπ/2}` of the propagator argument, exact at `α = 1`.
fn ray_direction(alpha: f64) -> Complex64 {
    if alpha == 1.0 {
        Complex64::new(0.0, -1.0)
    } else {
        Complex64::from_polar(1.0, -0.5 * alpha * PI)
    }
}

/// `(-i)^α = e^{-iαπ/2}`, the branch fixed by `i^α = e^{iαπ/2}`.
pub fn minus_i_pow(alpha: f64) -> Complex64 {
    ray_direction(alpha)
}

/// `E_α((-it)^α |ξ|^β)` with argument `e^{-iαπ/2} t^α |ξ|^β`.
pub fn propagator_symbol(
    t: f64,
    xi_abs: f64,
    alpha: f64,
    beta: f64,
    p: &MlParams,
) -> Result<Complex64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::param("t", format!("time must be finite and >= 0, got {t}")));
    }
    if !(xi_abs >= 0.0 && xi_abs.is_finite()) {
        return Err(Error::param("xi_abs", format!("must be finite and >= 0, got {xi_abs}")));
    }
    if !(beta > 0.0) {
        return Err(Error::param("beta", format!("must be positive, got {beta}")));
    }
    let p = p.with_orders(alpha, 1.0)?;
    // z^{1/α} = -i t |ξ|^{β/α}, kept exact so |exp| = 1 along the ray
    ray_eval(alpha, t.powf(alpha) * xi_abs.powf(beta), t * xi_abs.powf(beta / alpha), &p)
}

/// Propagator multiplier on one grid, with symbol values cached per time.
///
/// The symbol depends on `|ξ|` only, so it is evaluated once per distinct
/// lattice radius.
pub struct Propagator {
    grid: SpatialGrid,
    alpha: f64,
    beta: f64,
    params: MlParams,
    radii: Vec<f64>,
    slot: Vec<u32>,
    cache: RwLock<HashMap<u64, Arc<Vec<Complex64>>>>,
}

impl std::fmt::Debug for Propagator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Propagator")
            .field("alpha", &self.alpha)
            .field("beta", &self.beta)
            .field("distinct_radii", &self.radii.len())
            .finish()
    }
}

impl Propagator {
    pub fn new(grid: &SpatialGrid, alpha: f64, beta: f64, params: &MlParams) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::param("beta", format!("must be positive, got {beta}")));
        }
        let params = params.with_orders(alpha, 1.0)?;
        let mut keys: Vec<u32> = grid.radius_keys().to_vec();
        keys.sort_unstable();
        keys.dedup();
        let lookup: HashMap<u32, u32> =
            keys.iter().enumerate().map(|(i, &k)| (k, i as u32)).collect();
        let slot = grid.radius_keys().iter().map(|k| lookup[k]).collect();
        let step = grid.frequency_step();
        let radii = keys.iter().map(|&k| step * (k as f64).sqrt()).collect();
        Ok(Self {
            grid: grid.clone(),
            alpha,
            beta,
            params,
            radii,
            slot,
            cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    /// Distinct lattice radii `|ξ|`, ascending.
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Symbol values at time `t`, one per distinct radius.
    pub fn symbols(&self, t: f64) -> Result<Arc<Vec<Complex64>>> {
        let key = t.to_bits();
        if let Some(v) = self.cache.read().expect("propagator cache poisoned").get(&key) {
            return Ok(Arc::clone(v));
        }
        let values: Vec<Complex64> = self
            .radii
            .par_iter()
            .map(|&xi| propagator_symbol(t, xi, self.alpha, self.beta, &self.params))
            .collect::<Result<_>>()?;
        let values = Arc::new(values);
        self.cache
            .write()
            .expect("propagator cache poisoned")
            .insert(key, Arc::clone(&values));
        Ok(values)
    }

    /// Symbol at time `t` expanded to every spectral index.
    pub fn full_symbol(&self, t: f64) -> Result<Vec<Complex64>> {
        let s = self.symbols(t)?;
        Ok(self.slot.iter().map(|&i| s[i as usize]).collect())
    }

    pub fn apply(&self, spectrum: &SpectralField, t: f64) -> Result<SpectralField> {
        self.grid.check_same(spectrum.grid())?;
        let s = self.symbols(t)?;
        let coefficients = spectrum
            .coefficients()
            .iter()
            .zip(&self.slot)
            .map(|(&c, &i)| c * s[i as usize])
            .collect();
        Ok(SpectralField::from_parts(self.grid.clone(), coefficients))
    }

    /// `max_ξ |symbol(t, ξ)|` over the lattice.
    pub fn sup_modulus(&self, t: f64) -> Result<f64> {
        Ok(self.symbols(t)?.iter().map(|v| v.norm()).fold(0.0, f64::max))
    }

    pub(crate) fn slots(&self) -> &[u32] {
        &self.slot
    }

    /// Drop cached symbol tables.
    pub fn clear_cache(&self) {
        self.cache.write().expect("propagator cache poisoned").clear();
    }
}

/// Coefficientwise multiplication by `E_α((-it)^α|ξ|^β)`.
pub fn apply_propagator(
    spectrum: &SpectralField,
    t: f64,
    alpha: f64,
    beta: f64,
    p: &MlParams,
) -> Result<SpectralField> {
    Propagator::new(spectrum.grid(), alpha, beta, p)?.apply(spectrum, t)
}

/// `E_α(e^{-iαπ/2} r)`, the propagator symbol as a function of
/// `r = t^α |ξ|^β`.
pub fn ray_value(alpha: f64, r: f64, p: &MlParams) -> Result<Complex64> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::param("r", format!("must be finite and >= 0, got {r}")));
    }
    ray_eval(alpha, r, r.powf(1.0 / alpha), &p.with_orders(alpha, 1.0)?)
}

/// `E_α` at `e^{-iαπ/2} r` given `w = r^{1/α}`.
fn ray_eval(alpha: f64, r: f64, w: f64, p: &MlParams) -> Result<Complex64> {
    if r == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let a = Arg {
        z: r * ray_direction(alpha),
        modulus: r,
        arg: -0.5 * alpha * PI,
        root: Complex64::new(0.0, -w),
        root_arg: -0.5 * PI,
    };
    dispatch(&a, p).map(|(v, _)| v)
}

/// Sampled supremum of `|E_α((-it)^α |ξ|^β)|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupEstimate {
    pub sup: f64,
    /// `r = t^α |ξ|^β` at which the sampled maximum occurs.
    pub r_at: f64,
    pub samples: usize,
}

/// Dense-sampling estimate of `M₀ = sup |E_α((-it)^α |ξ|^β)|` over
/// `t ∈ (0, t_max]`, `|ξ|^β ∈ [0, s_max]`.
///
/// The symbol depends on `r = t^α|ξ|^β` alone, so `r` is sampled
/// geometrically from `1e-10·r_max` to `r_max` with `resolution` points
/// (plus `r = 0`).
pub fn estimate_m0(
    alpha: f64,
    t_max: f64,
    s_max: f64,
    resolution: usize,
    p: &MlParams,
) -> Result<SupEstimate> {
    if !(t_max > 0.0 && s_max > 0.0 && t_max.is_finite() && s_max.is_finite()) {
        return Err(Error::param("t_max", "sampling box must be finite and nonempty"));
    }
    if resolution < 2 {
        return Err(Error::param("resolution", "need at least two samples"));
    }
    let p = p.with_orders(alpha, 1.0)?;
    let r_max = t_max.powf(alpha) * s_max;
    let decades = 10.0;
    let rs: Vec<f64> = std::iter::once(0.0)
        .chain((0..resolution).map(|i| {
            r_max * 10f64.powf(-decades * (1.0 - i as f64 / (resolution - 1) as f64))
        }))
        .collect();
    let values: Vec<f64> = rs
        .par_iter()
        .map(|&r| ray_value(alpha, r, &p).map(|v| v.norm()))
        .collect::<Result<_>>()?;
    let (i, sup) = values
        .iter()
        .enumerate()
        .fold((0, 0.0), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    Ok(SupEstimate {
        sup,
        r_at: rs[i],
        samples: rs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gamma;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn regime_switch_is_continuous() {
        for (alpha, eta) in [(0.3, 1.0), (0.5, 1.0), (0.8, 1.0), (0.6, 1.4)] {
            let p = MlParams::new(alpha, eta).unwrap();
            // series/contour boundary at R₀ and asymptotic threshold
            let radii = [p.regime_radius, ASYMPTOTIC_ROOT_MIN.powf(alpha)];
            for radius in radii {
                for k in 0..12 {
                    let arg = -PI + 2.0 * PI * (k as f64 + 0.5) / 12.0;
                    let lo = ml(Complex64::from_polar(radius * (1.0 - 1e-13), arg), &p).unwrap();
                    let hi = ml(Complex64::from_polar(radius * (1.0 + 1e-13), arg), &p).unwrap();
                    assert!(rel(lo, hi) < 1e-8, "alpha={alpha} |z|={radius} arg={arg}");
                }
            }
        }
    }

    #[test]
    fn m0_is_stable_under_refinement() {
        let p = MlParams::new(0.5, 1.0).unwrap();
        let coarse = estimate_m0(0.5, 10.0, 1e4, 1000, &p).unwrap();
        let fine = estimate_m0(0.5, 10.0, 1e4, 2000, &p).unwrap();
        assert!(coarse.sup.is_finite() && coarse.sup >= 1.0);
        assert!((fine.sup - coarse.sup).abs() < 1e-3 * fine.sup);
        // for α = 1 the symbol is a pure phase
        let e = estimate_m0(1.0, 10.0, 1e4, 500, &p).unwrap();
        assert!((e.sup - 1.0).abs() < 1e-12);
    }

    #[test]
    fn propagator_cache_reuses_symbols() {
        let g = SpatialGrid::new(2, 16, 5.0).unwrap();
        let p = MlParams::new(0.7, 1.0).unwrap();
        let prop = Propagator::new(&g, 0.7, 0.9, &p).unwrap();
        assert!(prop.radii().len() < g.len());
        let a = prop.symbols(0.25).unwrap();
        let b = prop.symbols(0.25).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        let full = prop.full_symbol(0.25).unwrap();
        for (i, &xi) in g.xi_norms().iter().enumerate() {
            let direct = propagator_symbol(0.25, xi, 0.7, 0.9, &p).unwrap();
            assert!((full[i] - direct).norm() < 1e-13);
        }
    }

    #[test]
    fn params_validation() {
        assert!(MlParams::new(0.0, 1.0).is_err());
        assert!(MlParams::new(1.2, 1.0).is_err());
        let p = MlParams::new(0.5, 1.0).unwrap();
        assert!(p.with_series_tol(1e-5).is_err());
        assert!(p.with_regime_radius(1.0).is_err());
        assert!(p.with_regime_radius(8.0).is_ok());
    }

    #[test]
    fn exponential_reduction() {
        let p = MlParams::new(1.0, 1.0).unwrap();
        for z in [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0), c(-5.0, 2.0)] {
            assert!(rel(ml(z, &p).unwrap(), z.exp()) < 1e-12);
        }
        // the series path alone also reproduces exp where it is well conditioned
        for z in [c(1.0, 0.0), c(0.0, 1.0), c(-2.0, 2.0), c(3.0, -4.0)] {
            let s = ml_in_regime(z, &p, Regime::Series).unwrap();
            assert!(rel(s, z.exp()) < 1e-12, "{z}");
        }
    }

    #[test]
    fn origin_value() {
        for eta in [1.0, 0.5, 2.5] {
            let p = MlParams::new(0.7, eta).unwrap();
            assert_eq!(ml(c(0.0, 0.0), &p).unwrap(), c(1.0 / gamma(eta), 0.0));
        }
    }

    #[test]
    fn closed_forms() {
        // E_{1,2}(z) = (e^z - 1)/z
        let p = MlParams::new(1.0, 2.0).unwrap();
        for z in [c(-20.0, 0.0), c(7.0, 3.0), c(-3.0, 9.0), c(0.5, 0.1)] {
            let exact = (z.exp() - 1.0) / z;
            assert!(rel(ml(z, &p).unwrap(), exact) < 1e-12, "{z}");
        }
        // E_{1/2}(-x) = e^{x²} erfc(x); at x = 1 this is 0.4275835761558070
        let p = MlParams::new(0.5, 1.0).unwrap();
        let v = ml(c(-1.0, 0.0), &p).unwrap();
        assert!((v.re - 0.427_583_576_155_807).abs() < 1e-14);
    }

    // (α, η, Re z, Im z, Re E, Im E), from a 120-digit series evaluation
    const REFERENCE: [(f64, f64, f64, f64, f64, f64); 5] = [
        (0.3, 1.0, 0.3, -2.0, 0.066158645099502178, -0.39406872723522025),
        (0.5, 1.0, -3.0, 0.0, 0.17900115118138995, 0.0),
        (0.6, 1.6, -10.0, 1.0, 0.094491824674554948, 0.008975562244340759),
        (0.8, 1.0, 4.0, 2.0, -263.43223059278788, -117.62910612990668),
        (0.9, 0.4, 0.3, -6.0, -0.64337513362361386, -1.3477645132930675),
    ];

    // (α, r, Re, Im) of E_α(e^{-iαπ/2} r), same source
    const RAY: [(f64, f64, f64, f64); 11] = [
        (0.3, 0.5, 1.6334374019868949, -0.67914046610898823),
        (0.3, 2.0, -3.0654050653774191, 1.7688439958560158),
        (0.3, 5.0, 3.1617093426816062, -0.47975389383184467),
        (0.5, 0.5, 1.2952153565285488, -0.70574018720390878),
        (0.5, 2.0, -1.521335124803994, 1.3423590947440807),
        (0.5, 5.0, 1.9011251995327158, 0.18659592241920958),
        (0.5, 12.0, 1.7089354001414341, 0.94891461352902515),
        (0.8, 0.5, 0.99432422739925518, -0.58122418209320854),
        (0.8, 2.0, -0.95787519653441969, -0.92423835504643098),
        (0.8, 5.0, 0.44076726522072791, -1.1961506574450244),
        (0.8, 12.0, -1.1839794427813862, 0.40477242448290086),
    ];

    #[test]
    fn reference_values() {
        for (alpha, eta, zr, zi, er, ei) in REFERENCE {
            let p = MlParams::new(alpha, eta).unwrap();
            let (v, regime) = ml_with_regime(c(zr, zi), &p).unwrap();
            assert!(rel(v, c(er, ei)) < 1e-12, "alpha={alpha} z={zr}+{zi}i via {regime:?}: {v}");
        }
        for (alpha, r, er, ei) in RAY {
            let p = MlParams::new(alpha, 1.0).unwrap();
            // t = 1, |ξ|^β = r
            let v = propagator_symbol(1.0, r, alpha, 1.0, &p).unwrap();
            assert!(rel(v, c(er, ei)) < 1e-12, "alpha={alpha} r={r}: {v}");
        }
    }

    #[test]
    fn contour_agrees_with_series() {
        for (alpha, eta) in [(0.5, 1.0), (0.8, 1.0), (0.3, 1.0), (0.6, 1.6), (0.9, 0.4)] {
            let p = MlParams::new(alpha, eta).unwrap();
            for z in [c(2.0, 0.0), c(-1.5, 0.5), c(0.3, -2.0), c(1.0, 1.0), c(-0.2, 0.1)] {
                let s = series(&Arg::from_z(z, alpha), &p);
                if s.abs_sum > 10.0 * s.sum.norm() {
                    continue;
                }
                let k = ml_in_regime(z, &p, Regime::Contour).unwrap();
                assert!(rel(k, s.sum) < 1e-12, "alpha={alpha} eta={eta} z={z}: {k} vs {}", s.sum);
            }
        }
    }

    #[test]
    fn asymptotic_agrees_with_contour() {
        for alpha in [0.3, 0.5, 0.7, 0.9] {
            let p = MlParams::new(alpha, 1.0).unwrap();
            let r = 45f64.powf(alpha);
            for arg in [-0.5 * alpha * PI, 0.0, 0.9 * PI, -0.2] {
                let z = Complex64::from_polar(r, arg);
                let a = ml_in_regime(z, &p, Regime::Asymptotic).unwrap();
                let k = ml_in_regime(z, &p, Regime::Contour).unwrap();
                assert!(rel(a, k) < 1e-11, "alpha={alpha} arg={arg}: {a} vs {k}");
            }
        }
    }

    #[test]
    fn recurrence_identity() {
        let p = MlParams::new(0.6, 1.0).unwrap();
        let q = MlParams::new(0.6, 1.6).unwrap();
        for z in [c(3.0, 4.0), c(-10.0, 1.0), c(0.0, -12.0), c(6.0, -0.5)] {
            let lhs = ml(z, &p).unwrap();
            let rhs = z * ml(z, &q).unwrap() + 1.0;
            assert!(rel(rhs, lhs) < 1e-10, "{z}");
        }
    }

    #[test]
    fn propagator_basics() {
        let p = MlParams::new(0.5, 1.0).unwrap();
        assert_eq!(propagator_symbol(0.0, 3.0, 0.5, 1.0, &p).unwrap(), c(1.0, 0.0));
        for (t, xi) in [(0.3, 4.0), (1.0, 10.0), (0.01, 64.0)] {
            let v = propagator_symbol(t, xi, 1.0, 2.0, &p).unwrap();
            assert!((v.norm() - 1.0).abs() < 1e-12);
            assert!((v - Complex64::from_polar(1.0, -t * xi * xi)).norm() < 1e-12);
        }
        assert!(propagator_symbol(-1.0, 1.0, 0.5, 1.0, &p).is_err());
    }

    #[test]
    fn propagator_matches_generic_evaluation() {
        // the exact-root fast path agrees with evaluating E_α at the same z
        for alpha in [0.3, 0.6, 0.95] {
            let p = MlParams::new(alpha, 1.0).unwrap();
            for (t, xi) in [(0.5, 2.0), (2.0, 7.0), (9.0, 30.0)] {
                let sym = propagator_symbol(t, xi, alpha, 1.0, &p).unwrap();
                let z = t.powf(alpha) * xi * ray_direction(alpha);
                let generic = ml(z, &p).unwrap();
                assert!(rel(sym, generic) < 1e-9, "alpha={alpha} t={t} xi={xi}");
            }
        }
    }

    #[test]
    fn apply_propagator_identity_and_phase() {
        let g = SpatialGrid::new(1, 32, 4.0).unwrap();
        let f = crate::grid::ComplexField::from_fn(&g, |x| c((-x[0] * x[0]).exp(), 0.0));
        let s = crate::grid::forward_transform(&f);
        let p = MlParams::new(0.5, 1.0).unwrap();
        assert_eq!(apply_propagator(&s, 0.0, 0.5, 1.0, &p).unwrap(), s);
        let k = [3, 0];
        let pw = crate::grid::forward_transform(&crate::grid::ComplexField::plane_wave(&g, k));
        let out = apply_propagator(&pw, 0.7, 1.0, 2.0, &p).unwrap();
        let xi = g.mode_frequency(k)[0];
        let expect = pw.mode(k) * Complex64::from_polar(1.0, -0.7 * xi * xi);
        assert!((out.mode(k) - expect).norm() < 1e-12 * expect.norm());
    }
}
