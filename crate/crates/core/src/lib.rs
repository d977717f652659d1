//! Biharmonic extension of scalar fields across level set interfaces.
//!
//! Given values on part of a rectangular grid, [`solver::extend`] fills in
//! the remaining nodes with the solution of the discrete clamped biharmonic
//! equation. The linear system is solved matrix-free by conjugate gradients
//! preconditioned with a fast transform solve of the squared Laplacian on
//! the whole rectangle.
//!
//! Also included: PDE extrapolation baselines ([`extrapolation`]), level set
//! utilities ([`levelset`]), a two-phase Stefan solver that uses the
//! extension for its interface velocity ([`stefan`]) and reproducible
//! benchmark problems ([`problems`]).

pub mod biharmonic;
pub mod error;
pub mod extrapolation;
pub mod grid;
pub mod io;
pub mod levelset;
pub mod precond;
pub mod problems;
pub mod runs;
pub mod solver;
pub mod stefan;
pub mod transforms;

pub use error::{Error, Result};
pub use grid::{
    interface_band, make_grid, mask_from_levelset, sample, Bc, BcSpec, Grid, LevelSet, Mask,
    NodeSet, ScalarField, Side,
};
pub use solver::{extend, Method, SolveOptions, SolveStats};
