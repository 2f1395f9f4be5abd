//! Seeded ensembles of smooth, boundary-decaying test fields.
//!
//! Member `i` is drawn from its own ChaCha stream, so an ensemble of size
//! `2N` extends the one of size `N` with the same seed.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{forward_transform, ComplexField, SpatialGrid};

/// Family of test fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Generator {
    /// One to three real Gaussian bumps with random widths, centres, signs.
    GaussianBumps,
    /// A Gaussian times a plane-wave phase `e^{iκ·x}`.
    ModulatedGaussians,
    /// Random low-frequency modes with random phases under a Gaussian envelope.
    RandomBandLimited,
    /// Cycles through the three families by member index.
    Mixed,
}

impl Generator {
    pub fn name(&self) -> &'static str {
        match self {
            Generator::GaussianBumps => "gaussian_bumps",
            Generator::ModulatedGaussians => "modulated_gaussians",
            Generator::RandomBandLimited => "random_band_limited",
            Generator::Mixed => "mixed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "gaussian_bumps" => Some(Generator::GaussianBumps),
            "modulated_gaussians" => Some(Generator::ModulatedGaussians),
            "random_band_limited" => Some(Generator::RandomBandLimited),
            "mixed" => Some(Generator::Mixed),
            _ => None,
        }
    }
}

/// Streams at or above this offset are used for pair partners.
const PARTNER_STREAM: u64 = 1 << 40;

#[derive(Debug, Clone)]
pub struct TestEnsemble {
    pub seed: u64,
    pub count: usize,
    pub generator: Generator,
    pub grid: SpatialGrid,
}

impl TestEnsemble {
    pub fn new(grid: &SpatialGrid, generator: Generator, count: usize, seed: u64) -> Result<Self> {
        if count == 0 {
            return Err(Error::param("count", "ensemble must have at least one member"));
        }
        // widths run from 5h (resolution) to 0.12L (decay at the boundary)
        if 5.0 * grid.spacing() >= 0.12 * grid.half_width() {
            return Err(Error::param(
                "points_per_axis",
                format!(
                    "ensembles need at least 128 points per axis to resolve and decay, got {}",
                    grid.points_per_axis()
                ),
            ));
        }
        Ok(Self {
            seed,
            count,
            generator,
            grid: grid.clone(),
        })
    }

    /// Default harness setting: `n = 2`, `N = 128`, `L = 20`.
    pub fn default_grid() -> SpatialGrid {
        SpatialGrid::new(2, 128, 20.0).expect("default harness grid")
    }

    /// Same seed and generator, different size.
    pub fn resized(&self, count: usize) -> Self {
        Self {
            count,
            ..self.clone()
        }
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    fn generate(&self, stream: u64, index: usize) -> ComplexField {
        let mut rng = self.rng(stream);
        let kind = match self.generator {
            Generator::Mixed => match index % 3 {
                0 => Generator::GaussianBumps,
                1 => Generator::ModulatedGaussians,
                _ => Generator::RandomBandLimited,
            },
            g => g,
        };
        match kind {
            Generator::GaussianBumps => gaussian_bumps(&self.grid, &mut rng),
            Generator::ModulatedGaussians => modulated_gaussian(&self.grid, &mut rng),
            _ => band_limited(&self.grid, &mut rng),
        }
    }

    /// Member `i`.
    pub fn member(&self, i: usize) -> ComplexField {
        self.generate(i as u64, i)
    }

    pub fn fields(&self) -> Vec<ComplexField> {
        (0..self.count).into_par_iter().map(|i| self.member(i)).collect()
    }

    /// Pairs `(member i, partner i)`. Even members get an independent
    /// partner; odd members are paired with a rescaled copy of themselves,
    /// `c·u` with `c ∈ {1/2, 2}`.
    pub fn pairs(&self) -> Vec<(ComplexField, ComplexField)> {
        (0..self.count)
            .into_par_iter()
            .map(|i| {
                let u = self.member(i);
                let v = if i % 2 == 1 {
                    let c = if self.rng(PARTNER_STREAM + i as u64).gen_bool(0.5) { 0.5 } else { 2.0 };
                    u.scale(Complex64::new(c, 0.0))
                } else {
                    self.generate(PARTNER_STREAM + i as u64, i + 1)
                };
                (u, v)
            })
            .collect()
    }

    /// Pairs inside the `H^β` ball of radius `radius`: `u` is rescaled to a
    /// norm in `{1/4, 1/2, 3/4, 1}·radius` and `v = u + ε·w` for a random
    /// direction `w` (the partner field, or `-u` for odd members) and `ε` on log levels in `[1e-3, 0.5]·‖u‖`, pulled back
    /// into the ball if needed.
    pub fn ball_pairs(&self, beta: f64, radius: f64) -> Result<Vec<(ComplexField, ComplexField)>> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::param("radius", format!("must be positive, got {radius}")));
        }
        let pairs = self.pairs();
        pairs
            .into_par_iter()
            .enumerate()
            .map(|(i, (u, w))| {
                let mut rng = self.rng(2 * PARTNER_STREAM + i as u64);
                let target = radius * rng.gen_range(1..=4) as f64 / 4.0;
                let u = u.scale(Complex64::new(target / hbeta(&u, beta), 0.0));
                let eps = target * geometric_level(&mut rng, 1e-3, 0.5, 4);
                // odd members perturb inward along u itself
                let w = if i % 2 == 1 { u.scale(Complex64::new(-1.0, 0.0)) } else { w };
                let mut v = u.clone();
                v.axpy(Complex64::new(eps / hbeta(&w, beta), 0.0), &w)?;
                let nv = hbeta(&v, beta);
                if nv > radius {
                    v = v.scale(Complex64::new(radius / nv, 0.0));
                }
                Ok((u, v))
            })
            .collect()
    }
}

fn hbeta(f: &ComplexField, beta: f64) -> f64 {
    let grid = f.grid();
    let vol = (2.0 * grid.half_width()).powi(grid.dim() as i32);
    forward_transform(f)
        .coefficients()
        .iter()
        .zip(grid.xi_norms())
        .map(|(c, xi)| c.norm_sqr() * (1.0 + xi * xi).powf(beta))
        .sum::<f64>()
        .sqrt()
        / vol.sqrt()
}

/// One of `steps` geometrically spaced values from `lo` to `hi`. Discrete
/// levels let the extreme configurations recur, which keeps sampled maxima
/// stable as the ensemble grows.
fn geometric_level(rng: &mut ChaCha8Rng, lo: f64, hi: f64, steps: usize) -> f64 {
    let j = rng.gen_range(0..steps) as f64;
    lo * (hi / lo).powf(j / (steps - 1) as f64)
}

fn width_range(grid: &SpatialGrid, min_cells: f64) -> (f64, f64) {
    (min_cells * grid.spacing(), 0.12 * grid.half_width())
}

fn random_center(grid: &SpatialGrid, rng: &mut ChaCha8Rng) -> [f64; 2] {
    let reach = 0.1 * grid.half_width();
    let mut c = [0.0; 2];
    for v in c.iter_mut().take(grid.dim()) {
        *v = rng.gen_range(-reach..=reach);
    }
    c
}

fn dist2(x: [f64; 2], c: [f64; 2]) -> f64 {
    (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)
}

fn gaussian_bumps(grid: &SpatialGrid, rng: &mut ChaCha8Rng) -> ComplexField {
    let (lo, hi) = width_range(grid, 4.0);
    let count = rng.gen_range(1..=3);
    let bumps: Vec<(f64, f64, [f64; 2])> = (0..count)
        .map(|_| {
            let sign = if rng.gen_bool(0.75) { 1.0 } else { -1.0 };
            let amp = sign * geometric_level(rng, 0.5, 2.0, 3);
            let width = geometric_level(rng, lo, hi, 4);
            (amp, width, random_center(grid, rng))
        })
        .collect();
    ComplexField::from_fn(grid, |x| {
        let v: f64 = bumps
            .iter()
            .map(|&(a, w, c)| a * (-dist2(x, c) / (2.0 * w * w)).exp())
            .sum();
        Complex64::new(v, 0.0)
    })
}

fn modulated_gaussian(grid: &SpatialGrid, rng: &mut ChaCha8Rng) -> ComplexField {
    let (lo, hi) = width_range(grid, 5.0);
    let width = geometric_level(rng, lo, hi, 4);
    let amp = geometric_level(rng, 0.5, 2.0, 3);
    let center = random_center(grid, rng);
    // discrete frequency shells and directions, so extreme modulations recur
    let level = rng.gen_range(1..=4) as f64 / 4.0;
    let kmax = level * 0.08 * PI / grid.spacing();
    let kappa = if grid.dim() == 1 {
        [if rng.gen_bool(0.5) { kmax } else { -kmax }, 0.0]
    } else {
        let theta = rng.gen_range(0..8) as f64 * PI / 4.0;
        [kmax * theta.cos(), kmax * theta.sin()]
    };
    let phase0 = rng.gen_range(0.0..2.0 * PI);
    ComplexField::from_fn(grid, |x| {
        let env = amp * (-dist2(x, center) / (2.0 * width * width)).exp();
        Complex64::from_polar(env, kappa[0] * x[0] + kappa[1] * x[1] + phase0)
    })
}

fn band_limited(grid: &SpatialGrid, rng: &mut ChaCha8Rng) -> ComplexField {
    let (_, hi) = width_range(grid, 4.0);
    let width = geometric_level(rng, 0.5 * hi, hi, 3);
    let center = random_center(grid, rng);
    // modes up to a quarter of the Nyquist frequency keep products resolved
    let kmax = 0.25 * PI / grid.spacing();
    let modes = rng.gen_range(2..=6);
    let terms: Vec<([f64; 2], Complex64)> = (0..modes)
        .map(|_| {
            let mut k = [0.0; 2];
            for v in k.iter_mut().take(grid.dim()) {
                *v = kmax * rng.gen_range(-4..=4) as f64 / 4.0;
            }
            let c = Complex64::from_polar(geometric_level(rng, 0.25, 1.0, 3), rng.gen_range(0.0..2.0 * PI));
            (k, c)
        })
        .collect();
    ComplexField::from_fn(grid, |x| {
        let env = (-dist2(x, center) / (2.0 * width * width)).exp();
        let s: Complex64 = terms
            .iter()
            .map(|(k, c)| c * Complex64::from_polar(1.0, k[0] * x[0] + k[1] * x[1]))
            .sum();
        s * env
    })
}
