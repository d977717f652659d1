//! PDE extrapolation baselines: values, and optionally their first and
//! second normal derivatives, are advected off the known region along the
//! level set normals until steady state in pseudo-time.
//!
//! For order `p` the normal derivatives `g_k = n . grad g_{k-1}` (`g_0 = f`)
//! are formed with central differences wherever the whole stencil is valid,
//! so the valid region shrinks by one cell per derivative. `g_p` is then
//! extended by `u_t + H n . grad u = 0`, and each lower level by
//! `u_t + H (n . grad u - g_{k+1}) = 0` with the extended higher level as
//! source. Space is second-order upwind by default (first order next to
//! the faces), time is Heun's method with `dtau = cfl * h`. The first-order
//! scheme is monotone, so constant extrapolation with it obeys a maximum
//! principle; the second-order one is needed for third-order accuracy of
//! the quadratic cascade.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Grid, LevelSet, ScalarField};
use crate::levelset::{neighbour, normals};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtrapolationOrder {
    Constant,
    Linear,
    Quadratic,
}

impl ExtrapolationOrder {
    pub fn derivatives(self) -> usize {
        match self {
            Self::Constant => 0,
            Self::Linear => 1,
            Self::Quadratic => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UpwindScheme {
    FirstOrder,
    SecondOrder,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtrapolationOptions {
    pub scheme: UpwindScheme,
    /// Pseudo-time steps per level; `None` means `4 * max(dims)`.
    pub steps: Option<usize>,
    pub cfl: f64,
    /// Stop a level once the largest update is below `stall * range`.
    pub stall: f64,
    /// Only update nodes with `phi <= band_cells * h`. Results inside the
    /// band are unaffected, since information flows away from the interface.
    pub band_cells: Option<f64>,
}

impl Default for ExtrapolationOptions {
    fn default() -> Self {
        Self {
            scheme: UpwindScheme::SecondOrder,
            steps: None,
            cfl: 0.5,
            stall: 1e-8,
            band_cells: None,
        }
    }
}

/// `true` where `k` and all its axis neighbours are valid and `k` is not on
/// a face.
fn shrink(grid: &Grid, valid: &[bool]) -> Vec<bool> {
    (0..grid.len())
        .map(|k| {
            let idx = grid.multi_index(k);
            valid[k]
                && (0..grid.ndim()).all(|a| {
                    let lo = neighbour(grid, idx, k, a, -1);
                    let hi = neighbour(grid, idx, k, a, 1);
                    lo != k && hi != k && valid[lo] && valid[hi]
                })
        })
        .collect()
}

fn normal_derivative(grid: &Grid, g: &[f64], n: &[[f64; 3]], valid: &[bool]) -> Vec<f64> {
    (0..grid.len())
        .into_par_iter()
        .map(|k| {
            if !valid[k] {
                return 0.0;
            }
            let idx = grid.multi_index(k);
            (0..grid.ndim())
                .map(|a| {
                    let lo = neighbour(grid, idx, k, a, -1);
                    let hi = neighbour(grid, idx, k, a, 1);
                    n[k][a] * (g[hi] - g[lo]) / (2.0 * grid.spacing()[a])
                })
                .sum()
        })
        .collect()
}

/// Upwind `n . grad u` at node `k`.
#[inline]
fn upwind(grid: &Grid, u: &[f64], n: &[f64; 3], k: usize, second: bool) -> f64 {
    let idx = grid.multi_index(k);
    let dims = grid.dims3();
    let mut acc = 0.0;
    for a in 0..grid.ndim() {
        let na = n[a];
        if na == 0.0 {
            continue;
        }
        let h = grid.spacing()[a];
        let s: usize = dims[..a].iter().product();
        let i = idx[a];
        let d = if na > 0.0 {
            match i {
                0 => 0.0,
                1 => (u[k] - u[k - s]) / h,
                _ if !second => (u[k] - u[k - s]) / h,
                _ => (3.0 * u[k] - 4.0 * u[k - s] + u[k - 2 * s]) / (2.0 * h),
            }
        } else if second && i + 2 < dims[a] {
            (-3.0 * u[k] + 4.0 * u[k + s] - u[k + 2 * s]) / (2.0 * h)
        } else if i + 1 < dims[a] {
            (u[k + s] - u[k]) / h
        } else {
            0.0
        };
        acc += na * d;
    }
    acc
}

/// Extends `g` from `valid` into the nodes listed in `active`.
fn extend_level(
    grid: &Grid,
    g: &[f64],
    valid: &[bool],
    active: &[usize],
    source: Option<&[f64]>,
    n: &[[f64; 3]],
    opts: &ExtrapolationOptions,
    steps: usize,
) -> Result<Vec<f64>> {
    let mut u: Vec<f64> = g
        .iter()
        .zip(valid)
        .map(|(&v, &ok)| if ok { v } else { 0.0 })
        .collect();
    let range = {
        let (lo, hi) = g
            .iter()
            .zip(valid)
            .filter(|(_, &ok)| ok)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (&v, _)| (a.min(v), b.max(v)));
        if hi >= lo {
            (hi - lo).max(lo.abs().max(hi.abs()) * 1e-3).max(f64::MIN_POSITIVE)
        } else {
            1.0
        }
    };
    let dt = opts.cfl * grid.min_spacing();
    let rate = |u: &[f64], k: usize| -> f64 {
        let s = source.map_or(0.0, |s| s[k]);
        -(upwind(grid, u, &n[k], k, opts.scheme == UpwindScheme::SecondOrder) - s)
    };
    let mut k1 = vec![0.0; active.len()];
    let mut stage = u.clone();
    for _ in 0..steps {
        k1.par_iter_mut()
            .zip(active.par_iter())
            .for_each(|(r, &k)| *r = rate(&u, k));
        for (r, &k) in k1.iter().zip(active) {
            stage[k] = u[k] + dt * r;
        }
        let upd: Vec<f64> = active
            .par_iter()
            .zip(k1.par_iter())
            .map(|(&k, &r1)| 0.5 * dt * (r1 + rate(&stage, k)))
            .collect();
        let mut biggest = 0.0f64;
        for (&d, &k) in upd.iter().zip(active) {
            u[k] += d;
            biggest = biggest.max(d.abs());
        }
        if !biggest.is_finite() {
            return Err(Error::Breakdown("non-finite extrapolation update".into()));
        }
        if biggest < opts.stall * range {
            break;
        }
    }
    Ok(u)
}

/// Extrapolation using normals computed from `phi`.
pub fn extrapolate(
    f: &ScalarField,
    phi: &LevelSet,
    order: ExtrapolationOrder,
    steps: usize,
    cfl: f64,
) -> Result<ScalarField> {
    let opts = ExtrapolationOptions {
        steps: Some(steps),
        cfl,
        ..Default::default()
    };
    extrapolate_with_normals(f, phi, order, &normals(phi), &opts)
}

/// Extrapolation along caller-supplied unit normals.
pub fn extrapolate_with_normals(
    f: &ScalarField,
    phi: &LevelSet,
    order: ExtrapolationOrder,
    n: &[[f64; 3]],
    opts: &ExtrapolationOptions,
) -> Result<ScalarField> {
    let grid = *f.grid();
    if !grid.same_nodes(phi.grid()) {
        return Err(Error::InvalidArgument("field and level set grids differ".into()));
    }
    if n.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            actual: n.len(),
        });
    }
    if !(opts.cfl > 0.0 && opts.cfl <= 0.5) {
        return Err(Error::InvalidArgument(format!("cfl must be in (0, 0.5], got {}", opts.cfl)));
    }
    let steps = opts
        .steps
        .unwrap_or(4 * grid.dims().iter().copied().max().unwrap_or(1));
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be at least 1".into()));
    }
    let h = grid.max_spacing();
    let in_band = |k: usize| opts.band_cells.is_none_or(|c| phi.values()[k] <= c * h);
    let on_face = |k: usize| {
        let idx = grid.multi_index(k);
        (0..grid.ndim()).any(|a| idx[a] == 0 || idx[a] + 1 == grid.dims()[a])
    };

    let mut levels: Vec<(Vec<f64>, Vec<bool>)> = Vec::new();
    let v0: Vec<bool> = phi.values().iter().map(|&p| p <= 0.0).collect();
    levels.push((f.values().to_vec(), v0));
    for _ in 0..order.derivatives() {
        let (g, v) = levels.last().expect("level 0 present");
        let nv = shrink(&grid, v);
        let ng = normal_derivative(&grid, g, n, &nv);
        levels.push((ng, nv));
    }

    let mut cur: Option<Vec<f64>> = None;
    for (g, valid) in levels.iter().rev() {
        let active: Vec<usize> = (0..grid.len())
            .filter(|&k| !valid[k] && !on_face(k) && in_band(k))
            .collect();
        let out = extend_level(&grid, g, valid, &active, cur.as_deref(), n, opts, steps)?;
        cur = Some(out);
    }
    let mut out = cur.expect("at least one level");
    // known values are copied back untouched
    for (k, o) in out.iter_mut().enumerate() {
        if phi.values()[k] <= 0.0 {
            *o = f.values()[k];
        }
    }
    ScalarField::new(grid, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{interface_band, make_grid, sample};

    #[test]
    fn constant_field_stays_constant() {
        let g = make_grid(&[(-2.0, 2.0); 2], &[64, 64]).unwrap();
        let phi = LevelSet::from_fn(&g, |x| x[0].hypot(x[1]) - 1.0).unwrap();
        let f = ScalarField::constant(g, 3.0).masked(&crate::grid::mask_from_levelset(&phi, crate::grid::Side::InsideKnown).unwrap());
        let out = extrapolate(&f, &phi, ExtrapolationOrder::Constant, 400, 0.5).unwrap();
        for k in interface_band(&phi, 4.0).iter() {
            assert!((out.values()[k] - 3.0).abs() < 1e-8);
        }
    }

    #[test]
    fn linear_extrapolation_of_a_ramp() {
        // effectively 1D: phi = x, f = 2 + 3x on the left
        let g = make_grid(&[(-1.0, 1.0), (0.0, 0.3)], &[81, 13]).unwrap();
        let phi = LevelSet::from_fn(&g, |x| x[0]).unwrap();
        let f = sample(&g, |x| if x[0] <= 0.0 { 2.0 + 3.0 * x[0] } else { 0.0 }).unwrap();
        let out = extrapolate(&f, &phi, ExtrapolationOrder::Linear, 400, 0.5).unwrap();
        let h = g.spacing()[0];
        for k in interface_band(&phi, 4.0).iter() {
            let x = g.coords(k)[0];
            let j = g.multi_index(k)[1];
            // face nodes are never updated
            if x > 0.0 && j > 0 && j < 12 {
                assert!((out.values()[k] - (2.0 + 3.0 * x)).abs() < 4.0 * h * h + 1e-9);
            }
        }
    }

    #[test]
    fn known_region_untouched_and_maximum_principle() {
        let g = make_grid(&[(-2.0, 2.0); 2], &[48, 48]).unwrap();
        let phi = LevelSet::from_fn(&g, |x| x[0].hypot(x[1]) - 1.0).unwrap();
        let f = sample(&g, |x| if x[0].hypot(x[1]) <= 1.0 { (3.0 * x[0]).sin() + x[1] } else { 0.0 }).unwrap();
        let opts = ExtrapolationOptions {
            scheme: UpwindScheme::FirstOrder,
            steps: Some(300),
            ..Default::default()
        };
        let out = extrapolate_with_normals(&f, &phi, ExtrapolationOrder::Constant, &normals(&phi), &opts).unwrap();
        for k in 0..g.len() {
            if phi.values()[k] <= 0.0 {
                assert_eq!(out.values()[k].to_bits(), f.values()[k].to_bits());
            }
        }
        // each band value lies between known values within 6 cells of it
        let h = g.spacing()[0];
        for k in interface_band(&phi, 4.0).iter() {
            let c = g.coords(k);
            let (lo, hi) = (0..g.len())
                .filter(|&q| phi.values()[q] <= 0.0)
                .filter(|&q| {
                    let d = g.coords(q);
                    (d[0] - c[0]).hypot(d[1] - c[1]) <= 6.0 * h
                })
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), q| {
                    (a.min(f.values()[q]), b.max(f.values()[q]))
                });
            let v = out.values()[k];
            assert!(v >= lo - 1e-10 && v <= hi + 1e-10, "node {k}: {v} not in [{lo}, {hi}]");
        }
    }

    #[test]
    fn rejects_bad_options() {
        let g = make_grid(&[(-1.0, 1.0); 2], &[8, 8]).unwrap();
        let phi = LevelSet::from_fn(&g, |x| x[0]).unwrap();
        let f = ScalarField::zeros(g);
        assert!(extrapolate(&f, &phi, ExtrapolationOrder::Constant, 0, 0.5).is_err());
        assert!(extrapolate(&f, &phi, ExtrapolationOrder::Constant, 5, 0.8).is_err());
    }
}
