//! Fractional-in-time Schrödinger equation with a Hartree nonlinearity:
//! Mittag-Leffler propagators, fractional calculus in time, a Picard solver
//! for the mild formulation, and randomized checks of the supporting
//! inequalities.

pub mod error;
pub mod frac_time;
pub mod grid;
pub mod harness;
pub mod hartree;
pub mod mittag_leffler;
pub mod quad;
pub mod solver;
pub mod special;

pub use error::{Error, Result};
pub use frac_time::{TimeGrid, TimeSeries};
pub use grid::{ComplexField, SpatialGrid, SpectralField};
pub use harness::{EmpiricalConstants, Generator, InequalityReport, TestEnsemble};
pub use hartree::{HartreeParams, PsiKind};
pub use mittag_leffler::{MlParams, Propagator, Regime};
pub use solver::{DependenceReport, InitialGuess, MildSolver, ModelParams, SolverConfig, Trajectory};
