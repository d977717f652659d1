//! Fast transform preconditioner: the exact inverse of the squared
//! dimensionless Laplacian on the whole rectangle, applied to the unknown
//! nodes by zero-embedding and restriction.
//!
//! Each axis is diagonalised by the transform matching its face conditions.
//! An axis whose two faces differ (Dirichlet on one side, Neumann on the
//! other) has no fast transform here and falls back to a dense
//! eigendecomposition of its 1D operator, which is fine for the axis
//! lengths this crate targets.
//!
//! The constant mode of Neumann/periodic problems has eigenvalue zero; its
//! coefficient is dropped, so the preconditioner is positive semidefinite
//! with the constants as kernel.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{Bc, BcSpec, Grid, Mask};
use crate::transforms::{
    for_each_line, laplacian_eigenvalues, Transform, TransformFamily, TransformKind,
};

#[derive(Clone, Debug)]
enum AxisBasis {
    Fast(Transform),
    /// Columns of `q` are orthonormal eigenvectors.
    Dense(DMatrix<f64>),
}

/// 1D second-difference matrix with one ghost rule per face.
fn axis_matrix(m: usize, lo: Bc, hi: Bc) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(m, m);
    for j in 0..m {
        a[(j, j)] = 2.0;
        if j > 0 {
            a[(j, j - 1)] = -1.0;
        }
        if j + 1 < m {
            a[(j, j + 1)] = -1.0;
        }
    }
    if lo == Bc::NeumannZero {
        a[(0, 0)] -= 1.0;
    }
    if hi == Bc::NeumannZero {
        a[(m - 1, m - 1)] -= 1.0;
    }
    a
}

#[derive(Clone, Debug)]
pub struct FastPoisson {
    grid: Grid,
    bases: Vec<AxisBasis>,
    /// `1/(sum of axis eigenvalues)^2` per mode, zero for the null mode.
    inv_sq: Vec<f64>,
}

impl FastPoisson {
    pub fn new(grid: &Grid, bc: &BcSpec) -> Result<Self> {
        bc.check_grid(grid)?;
        let nd = grid.ndim();
        let dims = grid.dims3();
        let mut bases = Vec::with_capacity(nd);
        let mut eig: Vec<Vec<f64>> = Vec::with_capacity(nd);
        for a in 0..nd {
            let (lo, hi) = bc.axis(a);
            let m = dims[a];
            if lo == hi {
                let kind = TransformKind::new(TransformFamily::for_bc(lo), m)?;
                eig.push(laplacian_eigenvalues(kind).values().to_vec());
                bases.push(AxisBasis::Fast(Transform::new(kind)));
            } else {
                let se = SymmetricEigen::new(axis_matrix(m, lo, hi));
                // no Neumann/Neumann here, so the operator is definite
                eig.push(se.eigenvalues.iter().map(|&l| l.max(0.0)).collect());
                bases.push(AxisBasis::Dense(se.eigenvectors));
            }
        }
        let n = grid.len();
        let mut inv_sq = vec![0.0; n];
        for (k, v) in inv_sq.iter_mut().enumerate() {
            let idx = grid.multi_index(k);
            let s: f64 = (0..nd).map(|a| eig[a][idx[a]]).sum();
            *v = if s > 0.0 { 1.0 / (s * s) } else { 0.0 };
        }
        Ok(Self {
            grid: *grid,
            bases,
            inv_sq,
        })
    }

    fn transform_axes(&self, data: &mut [f64], forward: bool) {
        let dims = self.grid.dims3();
        for (a, basis) in self.bases.iter().enumerate() {
            match basis {
                AxisBasis::Fast(t) => for_each_line(
                    data,
                    dims,
                    a,
                    || t.scratch(),
                    |s, line| {
                        if forward {
                            t.forward_in_place(line, s)
                        } else {
                            t.inverse_in_place(line, s)
                        }
                    },
                ),
                AxisBasis::Dense(q) => {
                    let m = q.nrows();
                    for_each_line(
                        data,
                        dims,
                        a,
                        || vec![0.0; m],
                        |tmp, line| {
                            for (r, t) in tmp.iter_mut().enumerate() {
                                *t = if forward {
                                    (0..m).map(|j| q[(j, r)] * line[j]).sum()
                                } else {
                                    (0..m).map(|j| q[(r, j)] * line[j]).sum()
                                };
                            }
                            line.copy_from_slice(tmp);
                        },
                    );
                }
            }
        }
    }

    /// Solves the squared Laplacian on the full grid in place.
    pub fn solve_full(&self, data: &mut [f64]) {
        self.transform_axes(data, true);
        for (d, &w) in data.iter_mut().zip(&self.inv_sq) {
            *d *= w;
        }
        self.transform_axes(data, false);
    }

    /// Embed `b` with zeros at known nodes, solve, restrict.
    pub fn apply_into(&self, mask: &Mask, b: &[f64], out: &mut [f64], full: &mut Vec<f64>) {
        full.clear();
        full.resize(self.grid.len(), 0.0);
        for (&k, &v) in mask.unknown_index().iter().zip(b) {
            full[k] = v;
        }
        self.solve_full(full);
        for (o, &k) in out.iter_mut().zip(mask.unknown_index()) {
            *o = full[k];
        }
    }
}

pub fn apply_precond(b: &[f64], mask: &Mask, bc: &BcSpec) -> Result<Vec<f64>> {
    if b.len() != mask.unknown_count() {
        return Err(Error::LengthMismatch {
            expected: mask.unknown_count(),
            actual: b.len(),
        });
    }
    let p = FastPoisson::new(mask.grid(), bc)?;
    let mut out = vec![0.0; b.len()];
    p.apply_into(mask, b, &mut out, &mut Vec::new());
    Ok(out)
}

/// Outcome of [`precond_is_spd_check`].
#[derive(Clone, Debug, PartialEq)]
pub enum SpdCheck {
    Pass,
    Asymmetric { trial: usize, lhs: f64, rhs: f64 },
    NotPositive { trial: usize, value: f64 },
}

impl SpdCheck {
    pub fn passed(&self) -> bool {
        matches!(self, SpdCheck::Pass)
    }
}

/// Randomised symmetry/positivity check of the restricted preconditioner.
///
/// Positivity is only demanded for vectors with a component outside the
/// constant kernel; for Dirichlet problems that is every nonzero vector.
pub fn precond_is_spd_check(mask: &Mask, bc: &BcSpec, trials: usize, seed: u64) -> Result<SpdCheck> {
    let p = FastPoisson::new(mask.grid(), bc)?;
    let n = mask.unknown_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut full = Vec::new();
    let (mut mu, mut mv) = (vec![0.0; n], vec![0.0; n]);
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    for trial in 0..trials {
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        p.apply_into(mask, &u, &mut mu, &mut full);
        p.apply_into(mask, &v, &mut mv, &mut full);
        let (lhs, rhs) = (dot(&mu, &v), dot(&u, &mv));
        if (lhs - rhs).abs() > 1e-12 * lhs.abs().max(rhs.abs()).max(1e-300) {
            return Ok(SpdCheck::Asymmetric { trial, lhs, rhs });
        }
        let q = dot(&mu, &u);
        if q <= 0.0 {
            return Ok(SpdCheck::NotPositive { trial, value: q });
        }
    }
    Ok(SpdCheck::Pass)
}
