//! Matrix-free dimensionless biharmonic operator.
//!
//! The field is padded with two ghost layers per face according to the
//! boundary conditions, the dimensionless Laplacian
//! `(Lf)_i = 2d f_i - sum of axis neighbours` is evaluated on the interior
//! plus one ghost layer, and `L` is applied once more on the interior. In 2D
//! this is the 13-point stencil with weights 20, -8, 2 and 1.
//!
//! No spacing enters the stencil. The extension problem has a zero right
//! hand side, so the scaling does not change the solution, but residual
//! magnitudes are in these dimensionless units.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Bc, BcSpec, Grid, Mask, ScalarField};

pub const GHOST: usize = 2;

/// Field values with two ghost layers on every face of every active axis.
#[derive(Clone, Debug, PartialEq)]
pub struct PaddedField {
    ndim: usize,
    dims: [usize; 3],
    values: Vec<f64>,
}

impl PaddedField {
    /// Padded extents (interior + 4 on each active axis).
    pub fn dims(&self) -> &[usize] {
        &self.dims[..self.ndim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at interior-relative index; `-2..dims+2` is valid per axis.
    pub fn get(&self, idx: &[isize]) -> f64 {
        let mut k = 0usize;
        let mut stride = 1usize;
        for a in 0..self.ndim {
            let p = idx[a] + GHOST as isize;
            assert!(p >= 0 && (p as usize) < self.dims[a], "index out of padded range");
            k += p as usize * stride;
            stride *= self.dims[a];
        }
        self.values[k]
    }
}

fn padded_dims(grid: &Grid) -> [usize; 3] {
    let mut d = grid.dims3();
    for x in d.iter_mut().take(grid.ndim()) {
        *x += 2 * GHOST;
    }
    d
}

fn strides(d: [usize; 3]) -> [usize; 3] {
    [1, d[0], d[0] * d[1]]
}

/// Fills `buf` (padded layout) from `values` (grid layout) and applies the
/// ghost rules axis by axis. Later axes run over the full padded extent of
/// earlier ones, so edges and corners are filled too.
fn pad_into(grid: &Grid, bc: &BcSpec, values: &[f64], buf: &mut [f64]) {
    let nd = grid.ndim();
    let g = grid.dims3();
    let pd = padded_dims(grid);
    let ps = strides(pd);
    let off = |a: usize| if a < nd { GHOST } else { 0 };
    buf.par_chunks_mut(pd[0])
        .enumerate()
        .for_each(|(r, row)| {
            let (j, k) = (r % pd[1], r / pd[1]);
            let (jj, kk) = (j as isize - off(1) as isize, k as isize - off(2) as isize);
            if jj < 0 || jj >= g[1] as isize || kk < 0 || kk >= g[2] as isize {
                return;
            }
            let src = &values[(jj as usize + g[1] * kk as usize) * g[0]..][..g[0]];
            row[off(0)..off(0) + g[0]].copy_from_slice(src);
        });
    for a in 0..nd {
        let m = g[a];
        let s = ps[a];
        let (lo, hi) = bc.axis(a);
        // every line along axis a: enumerate the other two padded indices
        let others: Vec<usize> = (0..3).filter(|&b| b != a).collect();
        let (b0, b1) = (others[0], others[1]);
        for i1 in 0..pd[b1] {
            for i0 in 0..pd[b0] {
                let start = i0 * ps[b0] + i1 * ps[b1];
                let at = |p: usize| start + p * s;
                match lo {
                    Bc::DirichletZero => {
                        buf[at(1)] = 0.0;
                        buf[at(0)] = -buf[at(2)];
                    }
                    Bc::NeumannZero => {
                        buf[at(1)] = buf[at(2)];
                        buf[at(0)] = buf[at(3)];
                    }
                    Bc::Periodic => {
                        buf[at(1)] = buf[at(m + 1)];
                        buf[at(0)] = buf[at(m)];
                    }
                }
                match hi {
                    Bc::DirichletZero => {
                        buf[at(m + 2)] = 0.0;
                        buf[at(m + 3)] = -buf[at(m + 1)];
                    }
                    Bc::NeumannZero => {
                        buf[at(m + 2)] = buf[at(m + 1)];
                        buf[at(m + 3)] = buf[at(m)];
                    }
                    Bc::Periodic => {
                        buf[at(m + 2)] = buf[at(2)];
                        buf[at(m + 3)] = buf[at(3)];
                    }
                }
            }
        }
    }
}

pub fn pad(field: &ScalarField, bc: &BcSpec) -> Result<PaddedField> {
    let grid = field.grid();
    bc.check_grid(grid)?;
    let pd = padded_dims(grid);
    let mut values = vec![0.0; pd.iter().product()];
    pad_into(grid, bc, field.values(), &mut values);
    Ok(PaddedField {
        ndim: grid.ndim(),
        dims: pd,
        values,
    })
}

/// Reusable buffers for [`BiharmonicOperator`].
#[derive(Clone, Debug, Default)]
pub struct Workspace {
    padded: Vec<f64>,
    lap: Vec<f64>,
    full_in: Vec<f64>,
    full_out: Vec<f64>,
}

/// The biharmonic operator on a fixed grid and set of boundary conditions.
#[derive(Clone, Debug)]
pub struct BiharmonicOperator {
    grid: Grid,
    bc: BcSpec,
}

impl BiharmonicOperator {
    pub fn new(grid: &Grid, bc: &BcSpec) -> Result<Self> {
        bc.check_grid(grid)?;
        Ok(Self {
            grid: *grid,
            bc: *bc,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn bc(&self) -> &BcSpec {
        &self.bc
    }

    pub fn workspace(&self) -> Workspace {
        let np: usize = padded_dims(&self.grid).iter().product();
        Workspace {
            padded: vec![0.0; np],
            lap: vec![0.0; np],
            full_in: vec![0.0; self.grid.len()],
            full_out: vec![0.0; self.grid.len()],
        }
    }

    /// `out = B x` on the full grid.
    pub fn apply_full(&self, x: &[f64], out: &mut [f64], ws: &mut Workspace) {
        let grid = &self.grid;
        let nd = grid.ndim();
        let g = grid.dims3();
        let pd = padded_dims(grid);
        let ps = strides(pd);
        let np: usize = pd.iter().product();
        ws.padded.resize(np, 0.0);
        ws.lap.resize(np, 0.0);
        pad_into(grid, &self.bc, x, &mut ws.padded);
        let centre = 2.0 * nd as f64;
        let f = &ws.padded;

        // Laplacian on interior + one ghost layer
        ws.lap
            .par_chunks_mut(pd[0])
            .enumerate()
            .for_each(|(r, row)| {
                let (j, k) = (r % pd[1], r / pd[1]);
                if j == 0 || j + 1 == pd[1] || (nd == 3 && (k == 0 || k + 1 == pd[2])) {
                    return;
                }
                let rb = r * pd[0];
                for i in 1..pd[0] - 1 {
                    let p = rb + i;
                    let mut v = centre * f[p] - f[p - 1] - f[p + 1] - f[p - ps[1]] - f[p + ps[1]];
                    if nd == 3 {
                        v -= f[p - ps[2]] + f[p + ps[2]];
                    }
                    row[i] = v;
                }
            });

        let l = &ws.lap;
        let kofs = if nd == 3 { GHOST } else { 0 };
        out.par_chunks_mut(g[0]).enumerate().for_each(|(r, row)| {
            let (j, k) = (r % g[1], r / g[1]);
            let rb = (j + GHOST) * ps[1] + (k + kofs) * ps[2] + GHOST;
            for (i, o) in row.iter_mut().enumerate() {
                let p = rb + i;
                let mut v = centre * l[p] - l[p - 1] - l[p + 1] - l[p - ps[1]] - l[p + ps[1]];
                if nd == 3 {
                    v -= l[p - ps[2]] + l[p + ps[2]];
                }
                *o = v;
            }
        });
    }

    /// Induced operator on the unknown nodes: zero-extend, apply, restrict.
    pub fn matvec_into(&self, mask: &Mask, u: &[f64], out: &mut [f64], ws: &mut Workspace) {
        let n = self.grid.len();
        let mut full_in = std::mem::take(&mut ws.full_in);
        let mut full_out = std::mem::take(&mut ws.full_out);
        full_in.clear();
        full_in.resize(n, 0.0);
        full_out.resize(n, 0.0);
        for (&k, &v) in mask.unknown_index().iter().zip(u) {
            full_in[k] = v;
        }
        self.apply_full(&full_in, &mut full_out, ws);
        for (o, &k) in out.iter_mut().zip(mask.unknown_index()) {
            *o = full_out[k];
        }
        ws.full_in = full_in;
        ws.full_out = full_out;
    }
}

pub fn apply_biharmonic(field: &ScalarField, bc: &BcSpec) -> Result<ScalarField> {
    let op = BiharmonicOperator::new(field.grid(), bc)?;
    let mut out = vec![0.0; field.grid().len()];
    op.apply_full(field.values(), &mut out, &mut op.workspace());
    Ok(ScalarField::from_raw(*field.grid(), out))
}

fn check_mask(grid: &Grid, mask: &Mask) -> Result<()> {
    if !grid.same_nodes(mask.grid()) {
        return Err(Error::InvalidArgument(
            "mask and field live on different grids".into(),
        ));
    }
    Ok(())
}

/// `b = -(B f_known)` restricted to the unknown nodes.
pub fn build_rhs(known: &ScalarField, mask: &Mask, bc: &BcSpec) -> Result<Vec<f64>> {
    check_mask(known.grid(), mask)?;
    if let Some(&k) = mask
        .unknown_index()
        .iter()
        .find(|&&k| known.values()[k] != 0.0)
    {
        return Err(Error::Contract(format!(
            "unknown node {k} at {:?} carries value {}; unknown nodes must be zero",
            &known.grid().coords(k)[..known.grid().ndim()],
            known.values()[k]
        )));
    }
    let full = apply_biharmonic(known, bc)?;
    Ok(mask
        .unknown_index()
        .iter()
        .map(|&k| -full.values()[k])
        .collect())
}

pub fn matvec(u: &[f64], mask: &Mask, bc: &BcSpec) -> Result<Vec<f64>> {
    if u.len() != mask.unknown_count() {
        return Err(Error::LengthMismatch {
            expected: mask.unknown_count(),
            actual: u.len(),
        });
    }
    let op = BiharmonicOperator::new(mask.grid(), bc)?;
    let mut out = vec![0.0; u.len()];
    op.matvec_into(mask, u, &mut out, &mut op.workspace());
    Ok(out)
}
