//! Both sides of each functional inequality, evaluated over an ensemble.

use num_complex::Complex64;
use rayon::prelude::*;

use super::ensemble::TestEnsemble;
use super::report::{params, InequalityReport};
use crate::error::{Error, Result};
use crate::grid::{homogeneous_norm, lp_norm, sobolev_norm, ComplexField};
use crate::hartree::{hartree_potential, nonlinearity, singular_cell_average, HartreeParams, PsiKind};

/// Multipliers used by the `u ↦ c·u` probe.
const SCALE_FACTORS: [f64; 2] = [0.37, 5.3];
/// Members checked by the scale probe.
const SCALE_MEMBERS: usize = 10;
const SCALE_TOL: f64 = 1e-9;

/// `num / den`, `None` for `0/0`.
fn ratio(num: f64, den: f64) -> Option<f64> {
    if den == 0.0 {
        if num == 0.0 {
            None
        } else {
            Some(f64::INFINITY)
        }
    } else {
        Some(num / den)
    }
}

fn scale(u: &ComplexField, c: f64) -> ComplexField {
    u.scale(Complex64::new(c, 0.0))
}

fn moved(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => (x - y).abs() > SCALE_TOL * x.abs().max(y.abs()),
        (None, None) => false,
        _ => true,
    }
}

fn over_fields<F>(ens: &TestEnsemble, name: &str, p: &[(&str, f64)], homogeneous: bool, f: F) -> Result<InequalityReport>
where
    F: Fn(&ComplexField) -> Result<Option<f64>> + Sync,
{
    let fields = ens.fields();
    let ratios: Vec<Option<f64>> = fields.par_iter().map(&f).collect::<Result<_>>()?;
    let violations = if homogeneous {
        let mut n = 0;
        for (u, r) in fields.iter().zip(&ratios).take(SCALE_MEMBERS) {
            for c in SCALE_FACTORS {
                if moved(*r, f(&scale(u, c))?) {
                    n += 1;
                }
            }
        }
        Some(n)
    } else {
        None
    };
    Ok(InequalityReport::from_ratios(name, params(p), ens.seed, &ratios, violations))
}

type Pair = (ComplexField, ComplexField);

fn over_pairs<F>(
    ens: &TestEnsemble,
    pairs: &[Pair],
    name: &str,
    p: &[(&str, f64)],
    homogeneous: bool,
    f: F,
) -> Result<InequalityReport>
where
    F: Fn(&ComplexField, &ComplexField) -> Result<Option<f64>> + Sync,
{
    let ratios: Vec<Option<f64>> = pairs.par_iter().map(|(u, v)| f(u, v)).collect::<Result<_>>()?;
    let violations = if homogeneous {
        let mut n = 0;
        for ((u, v), r) in pairs.iter().zip(&ratios).take(SCALE_MEMBERS) {
            for c in SCALE_FACTORS {
                if moved(*r, f(&scale(u, c), &scale(v, c))?) {
                    n += 1;
                }
            }
        }
        Some(n)
    } else {
        None
    };
    Ok(InequalityReport::from_ratios(name, params(p), ens.seed, &ratios, violations))
}

fn dim(ens: &TestEnsemble) -> f64 {
    ens.grid.dim() as f64
}

fn check_gamma(ens: &TestEnsemble, gamma: f64) -> Result<()> {
    let n = dim(ens);
    if !(gamma > 0.0 && gamma < n) {
        return Err(Error::param("gamma", format!("must lie in (0, {n}), got {gamma}")));
    }
    Ok(())
}

/// `‖u/|x|^s‖₂ ≤ C ‖u‖_{Ḣ^s}` for `0 ≤ s < n/2`.
pub fn check_hardy(ens: &TestEnsemble, s: f64) -> Result<InequalityReport> {
    let n = dim(ens);
    if !(s >= 0.0 && s < 0.5 * n) {
        return Err(Error::param("s", format!("must lie in [0, n/2) = [0, {}), got {s}", 0.5 * n)));
    }
    let grid = &ens.grid;
    let origin = grid.origin_index();
    let center = singular_cell_average(grid, 2.0 * s, PsiKind::ConstantOne)?;
    let weight: Vec<f64> = (0..grid.len())
        .map(|i| if i == origin { center } else { grid.radius(i).powf(-2.0 * s) })
        .collect();
    let cell = grid.cell_volume();
    over_fields(ens, "hardy", &[("s", s)], true, |u| {
        let lhs: f64 = u.values().iter().zip(&weight).map(|(v, w)| v.norm_sqr() * w).sum::<f64>() * cell;
        Ok(ratio(lhs.sqrt(), homogeneous_norm(u, s, 2.0)?))
    })
}

/// `sup_y ∫ |u(x)|²/|x-y|^γ dx ≤ C ‖u‖²_{Ḣ^{γ/2}}`, the supremum taken over
/// every lattice shift.
pub fn check_translated_hardy(ens: &TestEnsemble, gamma: f64) -> Result<InequalityReport> {
    check_gamma(ens, gamma)?;
    let kernel = HartreeParams::constant_one(gamma)?;
    over_fields(ens, "translated_hardy", &[("gamma", gamma)], true, |u| {
        let sup = hartree_potential(&u.abs_sq(), &kernel)?.max_abs();
        Ok(ratio(sup, homogeneous_norm(u, 0.5 * gamma, 2.0)?.powi(2)))
    })
}

/// Exponents `(p, q) = (2n/(2n-γ), 2n/γ)` used by the HLS check.
pub fn hls_exponents(n: f64, gamma: f64) -> Result<(f64, f64)> {
    let p = 2.0 * n / (2.0 * n - gamma);
    let q = 2.0 * n / gamma;
    if !(1.0 < p && p < q && q.is_finite()) {
        return Err(Error::param(
            "gamma",
            format!("HLS exponents infeasible for n = {n}, gamma = {gamma}: p = {p}, q = {q}"),
        ));
    }
    Ok((p, q))
}

/// `‖u * |·|^{-γ}‖_{L^q} ≤ C ‖u‖_{L^p}` with `1/q = 1/p - (n-γ)/n`.
pub fn check_hls(ens: &TestEnsemble, gamma: f64) -> Result<InequalityReport> {
    check_gamma(ens, gamma)?;
    let (p, q) = hls_exponents(dim(ens), gamma)?;
    let kernel = HartreeParams::constant_one(gamma)?;
    over_fields(ens, "hls", &[("gamma", gamma), ("p", p), ("q", q)], true, |u| {
        let lhs = lp_norm(&hartree_potential(u, &kernel)?, q)?;
        Ok(ratio(lhs, lp_norm(u, p)?))
    })
}

/// Exponents of the fractional Leibniz rule, `1/r = 1/p_i + 1/q_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeibnizExponents {
    pub r: f64,
    pub p1: f64,
    pub q1: f64,
    pub p2: f64,
    pub q2: f64,
}

impl LeibnizExponents {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("r", self.r), ("p1", self.p1), ("q1", self.q1), ("p2", self.p2), ("q2", self.q2)] {
            // infinite exponents give noisy discrete sup-norm ratios
            if !(v >= 1.0 && v.is_finite()) {
                return Err(Error::param("leibniz", format!("exponent {name} = {v} must be finite and >= 1")));
            }
        }
        for (i, p, q) in [(1, self.p1, self.q1), (2, self.p2, self.q2)] {
            if (1.0 / self.r - 1.0 / p - 1.0 / q).abs() > 1e-12 {
                return Err(Error::param(
                    "leibniz",
                    format!("1/r must equal 1/p{i} + 1/q{i}: r = {}, p{i} = {p}, q{i} = {q}", self.r),
                ));
            }
        }
        Ok(())
    }
}

/// Fractional Leibniz rule, homogeneous `(-Δ)^{σ/2}` and inhomogeneous
/// `(I-Δ)^{σ/2}` variants over random pairs.
pub fn check_leibniz(
    ens: &TestEnsemble,
    sigma: f64,
    e: LeibnizExponents,
) -> Result<(InequalityReport, InequalityReport)> {
    e.validate()?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::param("sigma", format!("must be positive, got {sigma}")));
    }
    let pairs = ens.pairs();
    let p = [("sigma", sigma), ("r", e.r), ("p1", e.p1), ("q1", e.q1), ("p2", e.p2), ("q2", e.q2)];
    let homog = over_pairs(ens, &pairs, "leibniz_homogeneous", &p, true, |u, v| {
        let lhs = homogeneous_norm(&u.mul(v)?, sigma, e.r)?;
        let rhs = homogeneous_norm(u, sigma, e.p1)? * lp_norm(v, e.q1)?
            + lp_norm(u, e.p2)? * homogeneous_norm(v, sigma, e.q2)?;
        Ok(ratio(lhs, rhs))
    })?;
    let inhom = over_pairs(ens, &pairs, "leibniz_inhomogeneous", &p, true, |u, v| {
        let lhs = sobolev_norm(&u.mul(v)?, sigma, e.r)?;
        let rhs = sobolev_norm(u, sigma, e.p1)? * lp_norm(v, e.q1)?
            + lp_norm(u, e.p2)? * sobolev_norm(v, sigma, e.q2)?;
        Ok(ratio(lhs, rhs))
    })?;
    Ok((homog, inhom))
}

/// `‖|u|² - |v|²‖_{L^{2n/(2n-γ)}} ≤ C (‖u‖_{H^β} + ‖v‖_{H^β}) ‖u - v‖₂`.
pub fn check_difference_bound(ens: &TestEnsemble, beta: f64, gamma: f64) -> Result<InequalityReport> {
    check_gamma(ens, gamma)?;
    if beta < 0.5 * gamma {
        return Err(Error::param("beta", format!("must satisfy beta >= gamma/2, got {beta}")));
    }
    let n = dim(ens);
    let p = 2.0 * n / (2.0 * n - gamma);
    let pairs = ens.pairs();
    over_pairs(ens, &pairs, "difference_bound", &[("beta", beta), ("gamma", gamma), ("p", p)], true, |u, v| {
        let lhs = lp_norm(&u.abs_sq().sub(&v.abs_sq())?, p)?;
        let rhs = (sobolev_norm(u, beta, 2.0)? + sobolev_norm(v, beta, 2.0)?) * lp_norm(&u.sub(v)?, 2.0)?;
        Ok(ratio(lhs, rhs))
    })
}

fn lipschitz(
    ens: &TestEnsemble,
    hartree: &HartreeParams,
    beta: f64,
    radius: f64,
    numerator_beta: f64,
    name: &str,
) -> Result<InequalityReport> {
    hartree.check_grid(&ens.grid)?;
    let pairs = ens.ball_pairs(beta, radius)?;
    let p = [("beta", beta), ("gamma", hartree.gamma()), ("radius", radius)];
    over_pairs(ens, &pairs, name, &p, false, |u, v| {
        let nu = sobolev_norm(u, beta, 2.0)?;
        let nv = sobolev_norm(v, beta, 2.0)?;
        let diff = nonlinearity(u, hartree)?.sub(&nonlinearity(v, hartree)?)?;
        let lhs = sobolev_norm(&diff, numerator_beta, 2.0)?;
        let gap = sobolev_norm(&u.sub(v)?, numerator_beta, 2.0)?;
        Ok(ratio(lhs, (nu * nu + nv * nv + nu * nv) * gap))
    })
}

/// `‖N(u) - N(v)‖₂ ≤ C (‖u‖² + ‖v‖² + ‖u‖‖v‖)_{H^β} ‖u - v‖₂` on a ball.
pub fn check_lipschitz_l2(ens: &TestEnsemble, hartree: &HartreeParams, beta: f64, radius: f64) -> Result<InequalityReport> {
    lipschitz(ens, hartree, beta, radius, 0.0, "lipschitz_l2")
}

/// The `H^β` analogue of [`check_lipschitz_l2`].
pub fn check_lipschitz_hbeta(
    ens: &TestEnsemble,
    hartree: &HartreeParams,
    beta: f64,
    radius: f64,
) -> Result<InequalityReport> {
    lipschitz(ens, hartree, beta, radius, beta, "lipschitz_hbeta")
}

/// `‖u‖_{L^{2n/(n-γ)}} ≤ C‖u‖_{H^{γ/2}}` and the chain
/// `‖u‖_{H^{γ/2}} ≤ ‖u‖_{H^β}` for `β ≥ γ/2`.
pub fn check_embedding(ens: &TestEnsemble, beta: f64, gamma: f64) -> Result<(InequalityReport, InequalityReport)> {
    check_gamma(ens, gamma)?;
    if beta < 0.5 * gamma {
        return Err(Error::param("beta", format!("must satisfy beta >= gamma/2, got {beta}")));
    }
    let q = 2.0 * dim(ens) / (dim(ens) - gamma);
    let emb = over_fields(ens, "embedding", &[("gamma", gamma), ("q", q)], true, |u| {
        Ok(ratio(lp_norm(u, q)?, sobolev_norm(u, 0.5 * gamma, 2.0)?))
    })?;
    let chain = over_fields(ens, "embedding_chain", &[("beta", beta), ("gamma", gamma)], true, |u| {
        Ok(ratio(sobolev_norm(u, 0.5 * gamma, 2.0)?, sobolev_norm(u, beta, 2.0)?))
    })?;
    Ok((emb, chain))
}

/// `‖N(u)‖_{H^β} ≤ C ‖u‖³_{H^β}`.
pub fn check_cubic_bound(ens: &TestEnsemble, hartree: &HartreeParams, beta: f64) -> Result<InequalityReport> {
    hartree.check_grid(&ens.grid)?;
    over_fields(ens, "cubic_bound", &[("beta", beta), ("gamma", hartree.gamma())], true, |u| {
        Ok(ratio(sobolev_norm(&nonlinearity(u, hartree)?, beta, 2.0)?, sobolev_norm(u, beta, 2.0)?.powi(3)))
    })
}

/// `‖K_γ(|u|²)‖_∞ ≤ C ‖u‖²_{Ḣ^{γ/2}}`.
pub fn check_potential_linf(ens: &TestEnsemble, hartree: &HartreeParams) -> Result<InequalityReport> {
    hartree.check_grid(&ens.grid)?;
    let gamma = hartree.gamma();
    over_fields(ens, "potential_linf", &[("gamma", gamma)], true, |u| {
        let lhs = hartree_potential(&u.abs_sq(), hartree)?.max_abs();
        Ok(ratio(lhs, homogeneous_norm(u, 0.5 * gamma, 2.0)?.powi(2)))
    })
}

/// `‖K_γ(|u|²)‖_{L^{2n/γ}} ≤ C ‖u‖_{L^{2n/(n-γ)}} ‖u‖_{H^β}`.
pub fn check_potential_lq(ens: &TestEnsemble, hartree: &HartreeParams, beta: f64) -> Result<InequalityReport> {
    potential_bound(ens, hartree, beta, 0.0, "potential_lq")
}

/// `‖K_γ(|u|²)‖_{H^{β, 2n/γ}} ≤ C ‖u‖_{L^{2n/(n-γ)}} ‖u‖_{H^β}`.
pub fn check_kernel_sobolev(ens: &TestEnsemble, hartree: &HartreeParams, beta: f64) -> Result<InequalityReport> {
    potential_bound(ens, hartree, beta, beta, "kernel_sobolev")
}

fn potential_bound(
    ens: &TestEnsemble,
    hartree: &HartreeParams,
    beta: f64,
    smooth: f64,
    name: &str,
) -> Result<InequalityReport> {
    hartree.check_grid(&ens.grid)?;
    let n = dim(ens);
    let gamma = hartree.gamma();
    let q = 2.0 * n / gamma;
    let p = 2.0 * n / (n - gamma);
    over_fields(ens, name, &[("beta", beta), ("gamma", gamma), ("p", p), ("q", q)], true, |u| {
        let lhs = sobolev_norm(&hartree_potential(&u.abs_sq(), hartree)?, smooth, q)?;
        Ok(ratio(lhs, lp_norm(u, p)? * sobolev_norm(u, beta, 2.0)?))
    })
}
