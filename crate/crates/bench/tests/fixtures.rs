//! The benchmark inputs exercise the code paths their names claim.

use fracschro::mittag_leffler::{ml_with_regime, Regime};
use fracschro::MlParams;
use num_complex::Complex64;

#[test]
fn ml_inputs_hit_named_regimes() {
    let p = MlParams::new(0.7, 1.0).unwrap();
    for (z, want) in [
        (Complex64::new(0.8, 0.5), Regime::Series),
        (Complex64::from_polar(12.0, -1.1), Regime::Contour),
        (Complex64::from_polar(300.0, 2.5), Regime::Asymptotic),
    ] {
        let (v, got) = ml_with_regime(z, &p).unwrap();
        assert_eq!(got, want, "z = {z}");
        assert!(v.norm().is_finite());
    }
}
