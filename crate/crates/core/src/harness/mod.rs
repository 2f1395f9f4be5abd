//! Randomized empirical checks of the functional inequalities behind the
//! existence argument, and the empirical constants they yield.

pub mod checks;
pub mod ensemble;
pub mod report;

pub use checks::*;
pub use ensemble::{Generator, TestEnsemble};
pub use report::InequalityReport;

use crate::error::Result;
use crate::grid::SpatialGrid;
use crate::hartree::HartreeParams;

/// Measured stand-ins for the unnamed constants of the contraction bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalConstants {
    /// `sup ‖N(u)‖_{H^β} / ‖u‖³_{H^β}`.
    pub cubic: f64,
    /// `H^β` Lipschitz ratio on the unit ball.
    pub lipschitz_hbeta: f64,
    pub lipschitz_l2: f64,
    pub count: usize,
    pub seed: u64,
}

impl EmpiricalConstants {
    /// The constant threaded into the horizon estimate.
    pub fn c_emp(&self) -> f64 {
        self.cubic.max(self.lipschitz_hbeta)
    }
}

/// Measure [`EmpiricalConstants`] on `grid` with a mixed ensemble.
pub fn measure_constants(
    grid: &SpatialGrid,
    hartree: &HartreeParams,
    beta: f64,
    count: usize,
    seed: u64,
) -> Result<EmpiricalConstants> {
    let ens = TestEnsemble::new(grid, Generator::Mixed, count, seed)?;
    Ok(EmpiricalConstants {
        cubic: check_cubic_bound(&ens, hartree, beta)?.max_ratio,
        lipschitz_hbeta: check_lipschitz_hbeta(&ens, hartree, beta, 1.0)?.max_ratio,
        lipschitz_l2: check_lipschitz_l2(&ens, hartree, beta, 1.0)?.max_ratio,
        count,
        seed,
    })
}
