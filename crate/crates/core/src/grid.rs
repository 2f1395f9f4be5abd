//! Periodic-box discretization of ℝⁿ (n ∈ {1, 2}), normalized discrete
//! Fourier transforms, radial Fourier multipliers and Lᵖ / Sobolev norms.
//!
//! The box is `[-L, L)` per axis with `N` points, spacing `h = 2L/N`, and
//! frequency lattice `ξ_k = πk/L`, `k ∈ [-N/2, N/2)`. The forward transform
//! carries the `hⁿ` weight, so coefficients approximate `∫ f(x) e^{-iξ·x} dx`
//! and the inverse carries `(2L)^{-n}`. Spectra are stored in FFT order
//! (non-negative frequencies first).

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

struct GridInner {
    dim: usize,
    points: usize,
    half_width: f64,
    spacing: f64,
    axis_freq: Vec<f64>,
    xi_norm: Vec<f64>,
    radius_key: Vec<u32>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Shared handle to a periodic grid and its cached FFT plans.
///
/// Cloning is cheap; all clones refer to the same plans.
#[derive(Clone)]
pub struct SpatialGrid(Arc<GridInner>);

impl fmt::Debug for SpatialGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpatialGrid")
            .field("dim", &self.0.dim)
            .field("points", &self.0.points)
            .field("half_width", &self.0.half_width)
            .finish()
    }
}

impl PartialEq for SpatialGrid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.dim == other.0.dim
                && self.0.points == other.0.points
                && self.0.half_width.to_bits() == other.0.half_width.to_bits())
    }
}

impl SpatialGrid {
    pub fn new(dim: usize, points_per_axis: usize, half_width: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::param("dim", format!("must be 1 or 2, got {dim}")));
        }
        if points_per_axis < 2 || !points_per_axis.is_power_of_two() {
            return Err(Error::param(
                "points_per_axis",
                format!("must be a power of two >= 2, got {points_per_axis}"),
            ));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::param("half_width", format!("must be positive, got {half_width}")));
        }
        let n = points_per_axis;
        let spacing = 2.0 * half_width / n as f64;
        let step = std::f64::consts::PI / half_width;
        let signed: Vec<i64> = (0..n)
            .map(|p| if p < n / 2 { p as i64 } else { p as i64 - n as i64 })
            .collect();
        let axis_freq: Vec<f64> = signed.iter().map(|&k| step * k as f64).collect();

        let total = n.pow(dim as u32);
        let mut radius_key = Vec::with_capacity(total);
        if dim == 1 {
            radius_key.extend(signed.iter().map(|&k| (k * k) as u32));
        } else {
            for &k0 in &signed {
                for &k1 in &signed {
                    radius_key.push((k0 * k0 + k1 * k1) as u32);
                }
            }
        }
        let xi_norm = radius_key.iter().map(|&m| step * (m as f64).sqrt()).collect();

        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Self(Arc::new(GridInner {
            dim,
            points: n,
            half_width,
            spacing,
            axis_freq,
            xi_norm,
            radius_key,
            forward,
            inverse,
        })))
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.0.points
    }

    pub fn half_width(&self) -> f64 {
        self.0.half_width
    }

    pub fn spacing(&self) -> f64 {
        self.0.spacing
    }

    /// Total number of grid points, `Nⁿ`.
    pub fn len(&self) -> usize {
        self.0.xi_norm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `hⁿ`, the quadrature weight of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.0.spacing.powi(self.0.dim as i32)
    }

    /// Lattice step `π/L` of the frequency grid.
    pub fn frequency_step(&self) -> f64 {
        std::f64::consts::PI / self.0.half_width
    }

    /// Per-axis frequencies in FFT storage order.
    pub fn axis_frequencies(&self) -> &[f64] {
        &self.0.axis_freq
    }

    /// `|ξ|` for every spectral index, in storage order.
    pub fn xi_norms(&self) -> &[f64] {
        &self.0.xi_norm
    }

    /// Integer key `Σ k_i²` for every spectral index; equal keys mean equal `|ξ|`.
    pub fn radius_keys(&self) -> &[u32] {
        &self.0.radius_key
    }

    /// Largest `|ξ|` on the lattice.
    pub fn max_frequency(&self) -> f64 {
        self.0.xi_norm.iter().cloned().fold(0.0, f64::max)
    }

    /// Coordinate of point `j` along one axis: `-L + j h`.
    pub fn coordinate(&self, j: usize) -> f64 {
        -self.0.half_width + j as f64 * self.0.spacing
    }

    /// Per-axis point indices of flat index `idx`.
    pub fn axis_indices(&self, idx: usize) -> [usize; 2] {
        let n = self.0.points;
        if self.0.dim == 1 {
            [idx, 0]
        } else {
            [idx / n, idx % n]
        }
    }

    /// Physical position of flat index `idx` (second entry is 0 in 1-D).
    pub fn position(&self, idx: usize) -> [f64; 2] {
        let [i, j] = self.axis_indices(idx);
        if self.0.dim == 1 {
            [self.coordinate(i), 0.0]
        } else {
            [self.coordinate(i), self.coordinate(j)]
        }
    }

    /// `|x|` at flat index `idx`.
    pub fn radius(&self, idx: usize) -> f64 {
        let [x, y] = self.position(idx);
        x.hypot(y)
    }

    /// Flat index of the origin `x = 0`.
    pub fn origin_index(&self) -> usize {
        let c = self.0.points / 2;
        if self.0.dim == 1 {
            c
        } else {
            c * self.0.points + c
        }
    }

    /// Flat spectral index of the lattice mode with signed indices `k`.
    pub fn mode_index(&self, k: [i64; 2]) -> usize {
        let n = self.0.points as i64;
        let wrap = |k: i64| k.rem_euclid(n) as usize;
        if self.0.dim == 1 {
            wrap(k[0])
        } else {
            wrap(k[0]) * self.0.points + wrap(k[1])
        }
    }

    /// Frequency vector of lattice mode `k`.
    pub fn mode_frequency(&self, k: [i64; 2]) -> [f64; 2] {
        let s = self.frequency_step();
        if self.0.dim == 1 {
            [s * k[0] as f64, 0.0]
        } else {
            [s * k[0] as f64, s * k[1] as f64]
        }
    }

    pub(crate) fn check_same(&self, other: &SpatialGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::Shape(format!("grid mismatch: {self:?} vs {other:?}")))
        }
    }

    fn fft_in_place(&self, buf: &mut [Complex64], forward: bool) {
        let plan = if forward { &self.0.forward } else { &self.0.inverse };
        plan.process(buf);
        if self.0.dim == 2 {
            let n = self.0.points;
            transpose_square(buf, n);
            plan.process(buf);
            transpose_square(buf, n);
        }
    }

    fn checkerboard(&self, idx: usize) -> f64 {
        let [i, j] = self.axis_indices(idx);
        if (i + j) % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

fn transpose_square(buf: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

/// Complex samples in physical space, one per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: SpatialGrid,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: SpatialGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "field has {} values, grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::Domain(format!("non-finite field value at index {i}")));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_parts(grid: SpatialGrid, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: &SpatialGrid) -> Self {
        Self::from_parts(grid.clone(), vec![Complex64::new(0.0, 0.0); grid.len()])
    }

    /// Sample `f(x)` at every grid point (`x[1] = 0` in 1-D).
    pub fn from_fn<F: Fn([f64; 2]) -> Complex64>(grid: &SpatialGrid, f: F) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.position(i))).collect();
        Self::from_parts(grid.clone(), values)
    }

    /// Plane wave `e^{iξ_k·x}` for lattice mode `k`.
    pub fn plane_wave(grid: &SpatialGrid, k: [i64; 2]) -> Self {
        let xi = grid.mode_frequency(k);
        Self::from_fn(grid, |x| Complex64::from_polar(1.0, xi[0] * x[0] + xi[1] * x[1]))
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn map<F: Fn(Complex64) -> Complex64>(&self, f: F) -> Self {
        Self::from_parts(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with<F: Fn(Complex64, Complex64) -> Complex64>(
        &self,
        other: &ComplexField,
        f: F,
    ) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Self::from_parts(self.grid.clone(), values))
    }

    pub fn add(&self, other: &ComplexField) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ComplexField) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &ComplexField) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|v| v * c)
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: Complex64, other: &ComplexField) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        for (s, &o) in self.values.iter_mut().zip(&other.values) {
            *s += a * o;
        }
        Ok(())
    }

    /// Density `|u|²` as a (real-valued) field.
    pub fn abs_sq(&self) -> Self {
        self.map(|v| Complex64::new(v.norm_sqr(), 0.0))
    }

    /// Pointwise modulus `|u|`.
    pub fn abs(&self) -> Self {
        self.map(|v| Complex64::new(v.norm(), 0.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_imag_abs(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    /// Periodic translation by whole lattice cells: `result(x) = self(x - shift·h)`.
    pub fn shifted(&self, shift: [isize; 2]) -> Self {
        let n = self.grid.points_per_axis() as isize;
        let mut out = vec![Complex64::new(0.0, 0.0); self.values.len()];
        for (idx, slot) in out.iter_mut().enumerate() {
            let [i, j] = self.grid.axis_indices(idx);
            let si = (i as isize - shift[0]).rem_euclid(n) as usize;
            let src = if self.grid.dim() == 1 {
                si
            } else {
                let sj = (j as isize - shift[1]).rem_euclid(n) as usize;
                si * n as usize + sj
            };
            *slot = self.values[src];
        }
        Self::from_parts(self.grid.clone(), out)
    }
}

/// Fourier coefficients on the frequency lattice (FFT storage order).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: SpatialGrid,
    coefficients: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: SpatialGrid, coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.len() != grid.len() {
            return Err(Error::Shape(format!(
                "spectrum has {} coefficients, grid has {} points",
                coefficients.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, coefficients })
    }

    pub(crate) fn from_parts(grid: SpatialGrid, coefficients: Vec<Complex64>) -> Self {
        debug_assert_eq!(coefficients.len(), grid.len());
        Self { grid, coefficients }
    }

    pub fn zeros(grid: &SpatialGrid) -> Self {
        Self::from_parts(grid.clone(), vec![Complex64::new(0.0, 0.0); grid.len()])
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coefficients
    }

    /// Coefficient of lattice mode `k` (signed indices).
    pub fn mode(&self, k: [i64; 2]) -> Complex64 {
        self.coefficients[self.grid.mode_index(k)]
    }

    /// Multiply every coefficient by `symbol(|ξ|)`.
    pub fn apply_radial<F: Fn(f64) -> Complex64>(&self, symbol: F) -> Self {
        let coefficients = self
            .coefficients
            .iter()
            .zip(self.grid.xi_norms())
            .map(|(&c, &xi)| c * symbol(xi))
            .collect();
        Self::from_parts(self.grid.clone(), coefficients)
    }

    /// Coefficientwise product with another spectrum.
    pub fn mul(&self, other: &SpectralField) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let coefficients = self
            .coefficients
            .iter()
            .zip(&other.coefficients)
            .map(|(&a, &b)| a * b)
            .collect();
        Ok(Self::from_parts(self.grid.clone(), coefficients))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::from_parts(self.grid.clone(), self.coefficients.iter().map(|&v| v * c).collect())
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: Complex64, other: &SpectralField) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        for (s, &o) in self.coefficients.iter_mut().zip(&other.coefficients) {
            *s += a * o;
        }
        Ok(())
    }

    /// L² norm of the underlying field computed on the frequency side (Parseval).
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.coefficients.iter().map(|c| c.norm_sqr()).sum();
        (s / (2.0 * self.grid.half_width()).powi(self.grid.dim() as i32)).sqrt()
    }
}

/// Coefficients `hⁿ Σ_j f(x_j) e^{-iξ·x_j}` on the lattice.
pub fn forward_transform(f: &ComplexField) -> SpectralField {
    let grid = &f.grid;
    let mut buf = f.values.clone();
    grid.fft_in_place(&mut buf, true);
    let w = grid.cell_volume();
    for (idx, c) in buf.iter_mut().enumerate() {
        *c *= w * grid.checkerboard(idx);
    }
    SpectralField::from_parts(grid.clone(), buf)
}

/// Exact inverse of [`forward_transform`] up to round-off.
pub fn inverse_transform(spectrum: &SpectralField) -> ComplexField {
    let grid = &spectrum.grid;
    let mut buf = spectrum.coefficients.clone();
    for (idx, c) in buf.iter_mut().enumerate() {
        *c *= grid.checkerboard(idx);
    }
    grid.fft_in_place(&mut buf, false);
    let w = (2.0 * grid.half_width()).powi(grid.dim() as i32).recip();
    for c in buf.iter_mut() {
        *c *= w;
    }
    ComplexField::from_parts(grid.clone(), buf)
}

/// Apply a radial Fourier multiplier `symbol(|ξ|)` to a physical field.
pub fn apply_multiplier<F: Fn(f64) -> Complex64>(f: &ComplexField, symbol: F) -> ComplexField {
    inverse_transform(&forward_transform(f).apply_radial(symbol))
}

/// `(-Δ)^{β/2} f`, the multiplier `|ξ|^β`.
pub fn fractional_laplacian(f: &ComplexField, beta: f64) -> Result<ComplexField> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::param("beta", format!("fractional order must be positive, got {beta}")));
    }
    Ok(apply_multiplier(f, |xi| Complex64::new(xi.powf(beta), 0.0)))
}

/// `(I - Δ)^{s/2} f`, the multiplier `(1 + |ξ|²)^{s/2}`; negative `s` smooths.
pub fn bessel_potential(f: &ComplexField, s: f64) -> ComplexField {
    if s == 0.0 {
        return f.clone();
    }
    apply_multiplier(f, |xi| Complex64::new((1.0 + xi * xi).powf(0.5 * s), 0.0))
}

/// Multiplier `|ξ|^β` with the zero mode removed (kept when `β = 0`).
pub fn homogeneous_multiplier(f: &ComplexField, beta: f64) -> ComplexField {
    apply_multiplier(f, |xi| {
        let m = if xi == 0.0 {
            if beta == 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            xi.powf(beta)
        };
        Complex64::new(m, 0.0)
    })
}

fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::param("p", format!("Lebesgue exponent must be >= 1, got {p}")));
    }
    Ok(())
}

/// `(Σ |f|ᵖ hⁿ)^{1/p}`, or `max |f|` for `p = ∞`.
pub fn lp_norm(f: &ComplexField, p: f64) -> Result<f64> {
    check_exponent(p)?;
    Ok(lp_norm_unchecked(f.values(), f.grid.cell_volume(), p))
}

pub(crate) fn lp_norm_unchecked(values: &[Complex64], cell: f64, p: f64) -> f64 {
    if p.is_infinite() {
        return values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    }
    if p == 2.0 {
        let s: f64 = values.iter().map(|v| v.norm_sqr()).sum();
        return (s * cell).sqrt();
    }
    // scale by the max to keep large exponents in range
    let m = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = values.iter().map(|v| (v.norm() / m).powf(p)).sum();
    m * (s * cell).powf(1.0 / p)
}

/// `‖(I-Δ)^{β/2} f‖_{Lᵖ}`.
pub fn sobolev_norm(f: &ComplexField, beta: f64, p: f64) -> Result<f64> {
    check_exponent(p)?;
    lp_norm(&bessel_potential(f, beta), p)
}

/// `‖F^{-1}[|ξ|^β F f]‖_{Lᵖ}` with the zero-frequency mode annihilated.
pub fn homogeneous_norm(f: &ComplexField, beta: f64, p: f64) -> Result<f64> {
    check_exponent(p)?;
    lp_norm(&homogeneous_multiplier(f, beta), p)
}
