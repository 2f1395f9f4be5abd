//! Whole-line and closed-form oracles for the spectral operators.

use std::f64::consts::PI;

use fracschro::grid::{bessel_potential, fractional_laplacian, homogeneous_norm, lp_norm, sobolev_norm};
use fracschro::special::gamma;
use fracschro::{ComplexField, SpatialGrid};
use num_complex::Complex64;

fn gaussian(grid: &SpatialGrid) -> ComplexField {
    ComplexField::from_fn(grid, |x| Complex64::new((-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp(), 0.0))
}

/// `(-Δ)^{β/2} e^{-x²/2}` at `x = 0` on the line is `√(2/π)·2^{(β-1)/2}·Γ((β+1)/2)`.
/// The periodic value approaches it as the box grows; the `|ξ|^β` cusp at
/// the origin makes the error decay like `L^{-(1+β)}`.
#[test]
fn fractional_laplacian_of_gaussian_at_origin() {
    for beta in [0.5, 0.9, 1.5] {
        let exact = 2.0 / (2.0 * PI).sqrt() * 2f64.powf(0.5 * (beta - 1.0)) * gamma(0.5 * (beta + 1.0));
        let errors: Vec<f64> = [16.0, 32.0, 64.0, 128.0]
            .iter()
            .map(|&l| {
                let g = SpatialGrid::new(1, (16.0 * l) as usize, l).unwrap();
                let v = fractional_laplacian(&gaussian(&g), beta).unwrap();
                (v.values()[g.origin_index()].re - exact).abs()
            })
            .collect();
        assert!(errors[3] < 1e-3 * exact, "beta {beta}: {errors:?}");
        for w in errors.windows(2) {
            let rate = (w[0] / w[1]).log2();
            assert!((rate - (1.0 + beta)).abs() < 0.15, "beta {beta}: rate {rate}, {errors:?}");
        }
    }
}

#[test]
fn integer_laplacian_matches_derivatives() {
    let g = SpatialGrid::new(1, 256, 20.0).unwrap();
    let u = gaussian(&g);
    let two = fractional_laplacian(&u, 2.0).unwrap();
    let four = fractional_laplacian(&u, 4.0).unwrap();
    for i in 0..g.len() {
        let x = g.position(i)[0];
        let e = (-x * x / 2.0).exp();
        assert!((two.values()[i].re - (1.0 - x * x) * e).abs() < 1e-11);
        assert!((four.values()[i].re - (x.powi(4) - 6.0 * x * x + 3.0) * e).abs() < 1e-10);
    }
}

#[test]
fn gaussian_norms_in_two_dimensions() {
    let g = SpatialGrid::new(2, 128, 12.0).unwrap();
    let u = gaussian(&g);
    // ∫ e^{-|x|²} = π, ∫ e^{-2|x|²} = π/2
    assert!((lp_norm(&u, 2.0).unwrap() - PI.sqrt()).abs() < 1e-12);
    assert!((lp_norm(&u, 4.0).unwrap() - (PI / 2.0).powf(0.25)).abs() < 1e-12);
    // ‖u‖²_{Ḣ^1} = ∫|∇u|² = π
    assert!((homogeneous_norm(&u, 1.0, 2.0).unwrap() - PI.sqrt()).abs() < 1e-10);
    // ‖u‖²_{H^1} = ‖u‖² + ‖∇u‖²
    assert!((sobolev_norm(&u, 1.0, 2.0).unwrap() - (2.0 * PI).sqrt()).abs() < 1e-10);
    assert!((sobolev_norm(&u, 0.0, 3.0).unwrap() - lp_norm(&u, 3.0).unwrap()).abs() < 1e-12);
}

#[test]
fn bessel_potential_inverts() {
    let g = SpatialGrid::new(2, 64, 10.0).unwrap();
    let u = gaussian(&g);
    let back = bessel_potential(&bessel_potential(&u, 0.7), -0.7);
    let err = back.sub(&u).unwrap().max_abs();
    assert!(err < 1e-13, "{err}");
}
