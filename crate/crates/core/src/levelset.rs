//! Level set utilities: normal-speed advection, reinitialisation, curvature
//! and error measurement near the interface.
//!
//! Difference stencils that would leave the grid reuse the boundary node,
//! i.e. a zero normal derivative on every face.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{interface_band, Grid, LevelSet, NodeSet, ScalarField};

/// Largest allowed `dt * max|Vn| / h` in [`advect`].
pub const CFL_LIMIT: f64 = 0.9;

/// Neighbour of `k` one step along `axis` in direction `dir` (+-1), or `k`
/// itself at the boundary.
#[inline]
pub(crate) fn neighbour(grid: &Grid, idx: [usize; 3], k: usize, axis: usize, dir: isize) -> usize {
    let d = grid.dims3()[axis];
    let stride: usize = grid.dims3()[..axis].iter().product();
    match dir {
        -1 if idx[axis] > 0 => k - stride,
        1 if idx[axis] + 1 < d => k + stride,
        _ => k,
    }
}

/// One-sided differences `(D-, D+)` along every axis at node `k`.
#[inline]
fn one_sided(grid: &Grid, v: &[f64], k: usize) -> [(f64, f64); 3] {
    let idx = grid.multi_index(k);
    let mut out = [(0.0, 0.0); 3];
    for a in 0..grid.ndim() {
        let h = grid.spacing()[a];
        let m = neighbour(grid, idx, k, a, -1);
        let p = neighbour(grid, idx, k, a, 1);
        out[a] = ((v[k] - v[m]) / h, (v[p] - v[k]) / h);
    }
    out
}

/// Godunov upwind `|grad phi|` for a front moving with speed of sign `s`.
#[inline]
fn godunov_norm(d: &[(f64, f64); 3], ndim: usize, s: f64) -> f64 {
    let mut sum = 0.0;
    for &(dm, dp) in &d[..ndim] {
        let t = if s > 0.0 {
            dm.max(0.0).powi(2).max(dp.min(0.0).powi(2))
        } else {
            dm.min(0.0).powi(2).max(dp.max(0.0).powi(2))
        };
        sum += t;
    }
    sum.sqrt()
}

/// Central-difference gradient at every node (one-sided at the faces).
pub fn gradient(field: &ScalarField) -> Vec<[f64; 3]> {
    let g = field.grid();
    let v = field.values();
    (0..g.len())
        .into_par_iter()
        .map(|k| {
            let idx = g.multi_index(k);
            let mut out = [0.0; 3];
            for a in 0..g.ndim() {
                let m = neighbour(g, idx, k, a, -1);
                let p = neighbour(g, idx, k, a, 1);
                let span = (p - m) / g.dims3()[..a].iter().product::<usize>();
                out[a] = (v[p] - v[m]) / (span as f64 * g.spacing()[a]);
            }
            out
        })
        .collect()
}

/// Unit normals `grad phi / |grad phi|` with `|grad phi|` floored at 1e-12.
pub fn normals(phi: &LevelSet) -> Vec<[f64; 3]> {
    gradient(phi.field())
        .into_iter()
        .map(|g| {
            let n = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt().max(1e-12);
            [g[0] / n, g[1] / n, g[2] / n]
        })
        .collect()
}

/// One forward Euler step of `phi_t + Vn |grad phi| = 0`.
pub fn advect(phi: &LevelSet, vn: &ScalarField, dt: f64) -> Result<LevelSet> {
    let g = phi.grid();
    if !g.same_nodes(vn.grid()) {
        return Err(Error::InvalidArgument("phi and Vn grids differ".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let vmax = vn.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let ratio = dt * vmax / g.min_spacing();
    if ratio > CFL_LIMIT {
        return Err(Error::Cfl {
            ratio,
            limit: CFL_LIMIT,
        });
    }
    let v = phi.values();
    let out: Vec<f64> = (0..g.len())
        .into_par_iter()
        .map(|k| {
            let s = vn.values()[k];
            if s == 0.0 {
                return v[k];
            }
            let d = one_sided(g, v, k);
            v[k] - dt * s * godunov_norm(&d, g.ndim(), s)
        })
        .collect();
    Ok(LevelSet::new(ScalarField::new(*g, out)?))
}

/// Pseudo-time iterations of `phi_t + S(phi0)(|grad phi| - 1) = 0` with
/// `S(p) = p / sqrt(p^2 + h^2)` and `dtau = h/2`.
pub fn reinitialize(phi: &LevelSet, iterations: usize) -> Result<LevelSet> {
    if iterations == 0 {
        return Err(Error::InvalidArgument("reinitialisation needs at least one iteration".into()));
    }
    let g = *phi.grid();
    let h = g.min_spacing();
    let dtau = 0.5 * h;
    let sign: Vec<f64> = phi
        .values()
        .iter()
        .map(|&p| p / (p * p + h * h).sqrt())
        .collect();
    let mut cur = phi.values().to_vec();
    let mut next = vec![0.0; cur.len()];
    for _ in 0..iterations {
        next.par_iter_mut().enumerate().for_each(|(k, o)| {
            let s = sign[k];
            if s == 0.0 {
                *o = cur[k];
                return;
            }
            let d = one_sided(&g, &cur, k);
            *o = cur[k] - dtau * s * (godunov_norm(&d, g.ndim(), s) - 1.0);
        });
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(LevelSet::new(ScalarField::new(g, cur)?))
}

/// Mean curvature `div(grad phi / |grad phi|)` from central differences,
/// clamped to `+-1/h`.
pub fn curvature(phi: &LevelSet) -> ScalarField {
    let g = *phi.grid();
    let v = phi.values();
    let nd = g.ndim();
    let cap = 1.0 / g.min_spacing();
    let out: Vec<f64> = (0..g.len())
        .into_par_iter()
        .map(|k| {
            let idx = g.multi_index(k);
            // first and second derivatives; boundary nodes use the inner
            // neighbour twice, which is consistent with the reflection rule
            let mut d1 = [0.0; 3];
            let mut d2 = [[0.0; 3]; 3];
            let nb = |k: usize, idx: [usize; 3], a: usize, dir: isize| neighbour(&g, idx, k, a, dir);
            for a in 0..nd {
                let h = g.spacing()[a];
                let m = nb(k, idx, a, -1);
                let p = nb(k, idx, a, 1);
                d1[a] = (v[p] - v[m]) / (2.0 * h);
                d2[a][a] = (v[p] - 2.0 * v[k] + v[m]) / (h * h);
            }
            for a in 0..nd {
                for b in a + 1..nd {
                    let (ha, hb) = (g.spacing()[a], g.spacing()[b]);
                    let corner = |da: isize, db: isize| {
                        let ka = nb(k, idx, a, da);
                        let ia = g.multi_index(ka);
                        v[nb(ka, ia, b, db)]
                    };
                    let x = (corner(1, 1) - corner(1, -1) - corner(-1, 1) + corner(-1, -1)) / (4.0 * ha * hb);
                    d2[a][b] = x;
                    d2[b][a] = x;
                }
            }
            let g2: f64 = d1[..nd].iter().map(|x| x * x).sum();
            if g2 < 1e-24 {
                return 0.0;
            }
            let mut num = 0.0;
            for a in 0..nd {
                for b in 0..nd {
                    let delta = if a == b { g2 } else { 0.0 };
                    num += (delta - d1[a] * d1[b]) * d2[a][b];
                }
            }
            (num / g2.powf(1.5)).clamp(-cap, cap)
        })
        .collect();
    ScalarField::from_raw(g, out)
}

/// Max `|f - f_ref|` over nodes within `cells` spacings of the interface,
/// optionally restricted further.
pub fn band_error(
    f: &ScalarField,
    f_ref: &ScalarField,
    phi: &LevelSet,
    cells: f64,
    restrict_to: Option<&NodeSet>,
) -> Result<f64> {
    let g = f.grid();
    if !g.same_nodes(f_ref.grid()) || !g.same_nodes(phi.grid()) {
        return Err(Error::InvalidArgument("fields live on different grids".into()));
    }
    let band = interface_band(phi, cells);
    let band = match restrict_to {
        Some(r) => band.intersect(r),
        None => band,
    };
    let mut any = false;
    let mut err = 0.0f64;
    for k in band.iter() {
        any = true;
        err = err.max((f.values()[k] - f_ref.values()[k]).abs());
    }
    if !any {
        return Err(Error::InvalidArgument(format!(
            "no nodes within {cells} cells of the interface"
        )));
    }
    Ok(err)
}

/// `log2(e_i / e_{i+1})` over a ladder of 2x refinements.
pub fn estimated_orders(errors: &[f64]) -> Result<Vec<f64>> {
    if errors.len() < 2 {
        return Err(Error::InvalidArgument("need at least two errors".into()));
    }
    if let Some(e) = errors.iter().find(|&&e| !(e > 0.0)) {
        return Err(Error::InvalidArgument(format!("errors must be positive, got {e}")));
    }
    Ok(errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn circle(n: usize, r0: f64, scale: f64) -> LevelSet {
        let g = make_grid(&[(-2.0, 2.0); 2], &[n, n]).unwrap();
        LevelSet::from_fn(&g, |x| scale * (x[0].hypot(x[1]) - r0)).unwrap()
    }

    fn grad_norm(phi: &LevelSet) -> Vec<f64> {
        gradient(phi.field())
            .iter()
            .map(|g| (g[0] * g[0] + g[1] * g[1]).sqrt())
            .collect()
    }

    // Area of {phi < 0} by a sub-cell linear smoothing of the indicator.
    fn area(phi: &LevelSet) -> f64 {
        let h = phi.grid().spacing();
        phi.values()
            .iter()
            .map(|&p| (0.5 - p / h[0]).clamp(0.0, 1.0))
            .sum::<f64>()
            * h[0]
            * h[1]
    }

    #[test]
    fn zero_speed_is_identity() {
        let phi = circle(32, 1.0, 1.0);
        let out = advect(&phi, &ScalarField::zeros(*phi.grid()), 0.01).unwrap();
        for (a, b) in out.values().iter().zip(phi.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn unit_speed_grows_circle() {
        let phi = circle(128, 1.0, 1.0);
        let g = *phi.grid();
        let dt = 0.5 * g.spacing()[0];
        let mut cur = phi;
        let steps = 10;
        for _ in 0..steps {
            cur = advect(&cur, &ScalarField::constant(g, 1.0), dt).unwrap();
        }
        // the zero crossing along the positive x axis
        let j = 64;
        let xs: Vec<f64> = (0..128).map(|i| g.coord(0, i)).collect();
        let row: Vec<f64> = (0..128).map(|i| cur.field().get([i, j, 0])).collect();
        let i = (64..127).find(|&i| row[i] <= 0.0 && row[i + 1] > 0.0).unwrap();
        let x0 = xs[i] - row[i] * (xs[i + 1] - xs[i]) / (row[i + 1] - row[i]);
        let r = x0.hypot(g.coord(1, j));
        assert!((r - (1.0 + steps as f64 * dt)).abs() < 2.0 * g.spacing()[0], "r = {r}");
    }

    #[test]
    fn cfl_violation_reports_ratio() {
        let phi = circle(32, 1.0, 1.0);
        let h = phi.grid().spacing()[0];
        match advect(&phi, &ScalarField::constant(*phi.grid(), 1.0), h) {
            Err(Error::Cfl { ratio, .. }) => assert!((ratio - 1.0).abs() < 1e-12),
            r => panic!("expected CFL error, got {r:?}"),
        }
    }

    #[test]
    fn shrinking_square_loses_perimeter_times_dt() {
        let g = make_grid(&[(-2.0, 2.0); 2], &[160, 160]).unwrap();
        let phi = LevelSet::from_fn(&g, |x| x[0].abs().max(x[1].abs()) - 1.0).unwrap();
        let dt = 0.4 * g.spacing()[0];
        let next = advect(&phi, &ScalarField::constant(g, -1.0), dt).unwrap();
        let lost = area(&phi) - area(&next);
        let want = 8.0 * dt;
        assert!((lost - want).abs() <= 0.1 * want, "lost {lost} want {want}");
    }

    #[test]
    fn reinit_keeps_distance_function() {
        let phi = circle(128, 1.0, 1.0);
        let out = reinitialize(&phi, 10).unwrap();
        let h = phi.grid().spacing()[0];
        let gn = grad_norm(&out);
        for k in interface_band(&out, 6.0).iter() {
            let c = phi.grid().coords(k);
            if c[0].hypot(c[1]) > 4.0 * h {
                assert!((gn[k] - 1.0).abs() <= 0.05, "|grad| = {}", gn[k]);
            }
        }
    }

    #[test]
    fn reinit_restores_unit_gradient() {
        let phi = circle(128, 1.0, 3.0);
        let out = reinitialize(&phi, 20).unwrap();
        let gn = grad_norm(&out);
        let h = phi.grid().spacing()[0];
        let band = NodeSet::from_predicate(*phi.grid(), |k| phi.values()[k].abs() <= 3.0 * 6.0 * h);
        let band = band.intersect(&interface_band(&out, 6.0));
        assert!(band.count() > 0);
        for k in band.iter() {
            assert!((0.9..=1.1).contains(&gn[k]), "|grad| = {}", gn[k]);
        }
        // sign preserved away from the zero set and the zero set barely moves
        for (k, (&a, &b)) in phi.values().iter().zip(out.values()).enumerate() {
            if a.abs() > 3.0 * h {
                assert_eq!(a.signum(), b.signum(), "node {k}");
            }
        }
        assert!(reinitialize(&phi, 0).is_err());
    }

    #[test]
    fn circle_curvature_converges() {
        let mut errs = Vec::new();
        for r0 in [0.5, 1.0] {
            let mut e_r = Vec::new();
            for n in [64, 128, 256] {
                let phi = circle(n, r0, 1.0);
                let k = curvature(&phi);
                let h = phi.grid().spacing()[0];
                let e = interface_band(&phi, 1.0)
                    .iter()
                    .map(|q| {
                        let c = phi.grid().coords(q);
                        (k.values()[q] - 1.0 / c[0].hypot(c[1])).abs()
                    })
                    .fold(0.0f64, f64::max);
                e_r.push(e);
                if n == 128 && r0 == 0.5 {
                    assert!(e < 4.0 * h, "error {e} at h {h}");
                }
            }
            errs.push(e_r);
        }
        for e in errs {
            let o = estimated_orders(&e).unwrap();
            assert!(o.iter().all(|&v| v >= 0.9), "orders {o:?}");
        }
    }

    #[test]
    fn planar_curvature_is_zero() {
        let g = make_grid(&[(-1.0, 1.0); 2], &[20, 20]).unwrap();
        let phi = LevelSet::from_fn(&g, |x| x[0]).unwrap();
        assert!(curvature(&phi).values().iter().all(|&v| v.abs() < 1e-10));
        let n = normals(&phi);
        assert!(n.iter().all(|v| (v[0] - 1.0).abs() < 1e-14 && v[1] == 0.0));
    }

    #[test]
    fn ellipse_curvature_at_crossings() {
        // x^2/a^2 + y^2/b^2 = 1; the level set is not a distance function
        let (a, b) = (1.2, 0.7);
        let g = make_grid(&[(-2.0, 2.0); 2], &[256, 256]).unwrap();
        let phi = LevelSet::from_fn(&g, |x| (x[0] / a).hypot(x[1] / b) - 1.0).unwrap();
        let kap = curvature(&phi);
        let exact = |x: f64, y: f64| {
            // parameter t with (a cos t, b sin t) nearest the point
            let t = (y / b).atan2(x / a);
            a * b / ((a * t.sin()).powi(2) + (b * t.cos()).powi(2)).powf(1.5)
        };
        let mut checked = 0;
        for j in 0..256 {
            for i in 0..255 {
                let k0 = g.linear_index([i, j, 0]);
                let k1 = k0 + 1;
                let (p0, p1) = (phi.values()[k0], phi.values()[k1]);
                if p0.signum() == p1.signum() {
                    continue;
                }
                let s = p0 / (p0 - p1);
                let x = g.coord(0, i) + s * g.spacing()[0];
                let y = g.coord(1, j);
                let kc = (1.0 - s) * kap.values()[k0] + s * kap.values()[k1];
                let ke = exact(x, y);
                assert!((kc - ke).abs() <= 0.05 * ke, "({x},{y}): {kc} vs {ke}");
                checked += 1;
            }
        }
        assert!(checked > 100);
    }

    #[test]
    fn band_error_semantics() {
        let phi = circle(32, 1.0, 1.0);
        let g = *phi.grid();
        let f = ScalarField::zeros(g);
        assert_eq!(band_error(&f, &f, &phi, 4.0, None).unwrap(), 0.0);
        let band = interface_band(&phi, 4.0);
        let k = band.iter().next().unwrap();
        let mut v = vec![0.0; g.len()];
        v[k] = 7.0;
        let bump = ScalarField::new(g, v).unwrap();
        assert_eq!(band_error(&bump, &f, &phi, 4.0, None).unwrap(), 7.0);
        assert_eq!(band_error(&f, &bump, &phi, 4.0, None).unwrap(), 7.0);
        let none = NodeSet::from_predicate(g, |_| false);
        assert!(band_error(&f, &f, &phi, 4.0, Some(&none)).is_err());
    }

    #[test]
    fn orders() {
        let o = estimated_orders(&[6.28e-2, 1.77e-2]).unwrap();
        assert!((o[0] - 1.83).abs() < 0.005);
        assert_eq!(estimated_orders(&[4e-2, 1e-2]).unwrap(), vec![2.0]);
        assert_eq!(estimated_orders(&[1e-3, 1e-3]).unwrap(), vec![0.0]);
        assert!(estimated_orders(&[1e-3, 0.0]).is_err());
        assert!(estimated_orders(&[1e-3]).is_err());
    }
}
