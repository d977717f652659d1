//! Two-phase Stefan problem on a 2D grid with a sharp interface.
//!
//! One temperature per node, belonging to the phase at that node (solid
//! where `phi <= 0`). Each time step:
//!
//! 1. implicit Euler heat step per phase, with Shortley-Weller arms ending
//!    at the interface where `T = -sigma * kappa`;
//! 2. one-sided temperature gradients per phase, each extended across the
//!    interface by a biharmonic solve with Neumann conditions;
//! 3. `Vn = -(grad T_liquid - grad T_solid) . n`, advect `phi`,
//!    reinitialise.
//!
//! The outer boundary is insulated.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Bc, BcSpec, Grid, LevelSet, Mask, ScalarField};
use crate::levelset::{advect, curvature, normals, reinitialize};
use crate::solver::{extend, Method, SolveOptions};

/// Interface arms shorter than this fraction of a cell pin the node to the
/// interface temperature.
pub const SNAP_FRACTION: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SeedShape {
    Circle { radius: f64 },
    /// `r(theta) = radius + amplitude * cos(lobes * theta)`.
    Perturbed { radius: f64, amplitude: f64, lobes: u32 },
}

impl SeedShape {
    fn radius_at(&self, theta: f64) -> f64 {
        match *self {
            SeedShape::Circle { radius } => radius,
            SeedShape::Perturbed {
                radius,
                amplitude,
                lobes,
            } => radius + amplitude * (lobes as f64 * theta).cos(),
        }
    }

    fn max_radius(&self) -> f64 {
        match *self {
            SeedShape::Circle { radius } => radius,
            SeedShape::Perturbed { radius, amplitude, .. } => radius + amplitude.abs(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StefanParams {
    pub sigma: f64,
    pub beta: f64,
    pub dt: f64,
    pub t_end: f64,
    pub grid: Grid,
    pub seed: SeedShape,
    pub reinit_iterations: usize,
    /// Average axis-aligned gradients with ones taken along the diagonals.
    pub diagonal_gradients: bool,
    /// Relative tolerance of the gradient extensions.
    pub extension_tol: f64,
    /// Relative residual tolerance of the heat solve.
    pub heat_tol: f64,
}

impl StefanParams {
    /// `n x n` nodes on `[-2, 2]^2`, `beta = 2`, `dt = 5e-4`, four-lobed
    /// seed of radius 0.1.
    pub fn standard(n: usize, sigma: f64, t_end: f64) -> Result<Self> {
        Ok(Self {
            sigma,
            beta: 2.0,
            dt: 5e-4,
            t_end,
            grid: Grid::from_extents(&[(-2.0, 2.0), (-2.0, 2.0)], &[n, n])?,
            seed: SeedShape::Perturbed {
                radius: 0.1,
                amplitude: 0.02,
                lobes: 4,
            },
            reinit_iterations: 10,
            diagonal_gradients: false,
            extension_tol: 1e-8,
            heat_tol: 1e-10,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.grid.ndim() != 2 {
            return Err(Error::InvalidArgument("the Stefan solver is 2D only".into()));
        }
        if !(self.beta > 0.0) {
            return Err(Error::InvalidArgument(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::InvalidArgument(format!("sigma must be nonnegative, got {}", self.sigma)));
        }
        if !(self.dt > 0.0) || !(self.t_end >= self.dt * (1.0 - 1e-9)) {
            return Err(Error::InvalidArgument(format!(
                "need dt > 0 and t_end >= dt, got dt = {}, t_end = {}",
                self.dt, self.t_end
            )));
        }
        if self.reinit_iterations == 0 {
            return Err(Error::InvalidArgument("reinit_iterations must be positive".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round().max(1.0) as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StefanState {
    pub temperature: ScalarField,
    pub phi: LevelSet,
    pub t: f64,
}

impl StefanState {
    pub fn solid_count(&self) -> usize {
        self.phi.values().iter().filter(|&&p| p < 0.0).count()
    }
}

/// Signed distance to the seed boundary by dense sampling of the curve.
fn seed_distance(seed: &SeedShape, grid: &Grid) -> Vec<f64> {
    const SAMPLES: usize = 4096;
    let pts: Vec<(f64, f64)> = (0..SAMPLES)
        .map(|i| {
            let th = 2.0 * std::f64::consts::PI * i as f64 / SAMPLES as f64;
            let r = seed.radius_at(th);
            (r * th.cos(), r * th.sin())
        })
        .collect();
    let reach = seed.max_radius() + 10.0 * grid.max_spacing();
    (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let c = grid.coords(k);
            let (x, y) = (c[0], c[1]);
            let r = x.hypot(y);
            let rs = seed.radius_at(y.atan2(x));
            let inside = r < rs;
            let d = if r <= reach {
                pts.iter()
                    .map(|&(px, py)| (px - x).hypot(py - y))
                    .fold(f64::INFINITY, f64::min)
            } else {
                (r - rs).abs()
            };
            if inside {
                -d
            } else {
                d
            }
        })
        .collect()
}

pub fn init_state(params: &StefanParams) -> Result<StefanState> {
    params.validate()?;
    let g = params.grid;
    let lo = [g.origin()[0], g.origin()[1]];
    let hi = [g.coord(0, g.dims()[0] - 1), g.coord(1, g.dims()[1] - 1)];
    let rmax = params.seed.max_radius();
    if (0..2).any(|a| lo[a] > -rmax - g.spacing()[a] || hi[a] < rmax + g.spacing()[a]) {
        return Err(Error::InvalidArgument(
            "seed must lie strictly inside the domain".into(),
        ));
    }
    let phi = LevelSet::new(ScalarField::new(g, seed_distance(&params.seed, &g))?);
    let tl = -1.0 / params.beta;
    let temp = phi
        .values()
        .iter()
        .map(|&p| if p <= 0.0 { 0.0 } else { tl })
        .collect();
    Ok(StefanState {
        temperature: ScalarField::new(g, temp)?,
        phi,
        t: 0.0,
    })
}

/// One arm of a node stencil along an axis.
#[derive(Clone, Copy, Debug)]
enum Arm {
    /// Same-phase neighbour at distance `h`.
    Node(usize),
    /// Interface at distance `theta * h` with temperature `value`.
    Interface { theta: f64, value: f64 },
    /// Insulated outer boundary.
    Wall,
}

struct Geometry {
    grid: Grid,
    solid: Vec<bool>,
    /// Per node: arms `[axis][0 = minus, 1 = plus]`.
    arms: Vec<[[Arm; 2]; 2]>,
    /// Nodes sitting on the interface, with their pinned temperature.
    pinned: Vec<Option<f64>>,
}

fn geometry(phi: &LevelSet, sigma: f64) -> Geometry {
    let grid = *phi.grid();
    let p = phi.values();
    let kappa = curvature(phi);
    let kap = kappa.values();
    let solid: Vec<bool> = p.iter().map(|&v| v <= 0.0).collect();
    let dims = grid.dims3();
    let mut arms = vec![[[Arm::Wall; 2]; 2]; grid.len()];
    let mut pinned = vec![None; grid.len()];
    for k in 0..grid.len() {
        let idx = grid.multi_index(k);
        for a in 0..2 {
            let s = if a == 0 { 1 } else { dims[0] };
            for (side, dir) in [(0usize, -1isize), (1, 1)] {
                let inside = if dir < 0 { idx[a] > 0 } else { idx[a] + 1 < dims[a] };
                if !inside {
                    arms[k][a][side] = Arm::Wall;
                    continue;
                }
                let j = if dir < 0 { k - s } else { k + s };
                if solid[j] == solid[k] {
                    arms[k][a][side] = Arm::Node(j);
                } else {
                    let theta = p[k] / (p[k] - p[j]);
                    let kg = (1.0 - theta) * kap[k] + theta * kap[j];
                    let value = -sigma * kg;
                    if theta < SNAP_FRACTION && pinned[k].is_none() {
                        pinned[k] = Some(-sigma * kap[k]);
                    }
                    arms[k][a][side] = Arm::Interface { theta, value };
                }
            }
        }
    }
    Geometry {
        grid,
        solid,
        arms,
        pinned,
    }
}

/// Sparse rows `(columns, values)` plus diagonal and right-hand side.
struct System {
    cols: Vec<Vec<(usize, f64)>>,
    diag: Vec<f64>,
    rhs: Vec<f64>,
}

impl System {
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        out.par_iter_mut().enumerate().for_each(|(i, o)| {
            let mut v = self.diag[i] * x[i];
            for &(j, c) in &self.cols[i] {
                v += c * x[j];
            }
            *o = v;
        });
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned BiCGSTAB.
fn bicgstab(sys: &System, x: &mut [f64], tol: f64, maxit: usize) -> Result<(usize, f64)> {
    let n = x.len();
    let bn = dot(&sys.rhs, &sys.rhs).sqrt();
    if bn == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok((0, 0.0));
    }
    let inv_d: Vec<f64> = sys.diag.iter().map(|d| 1.0 / d).collect();
    let mut r = vec![0.0; n];
    sys.apply(x, &mut r);
    for i in 0..n {
        r[i] = sys.rhs[i] - r[i];
    }
    let r0 = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut res = dot(&r, &r).sqrt() / bn;
    if res <= tol {
        return Ok((0, res));
    }
    for it in 1..=maxit {
        let rho_new = dot(&r0, &r);
        if rho_new == 0.0 || !rho_new.is_finite() {
            return Err(Error::Breakdown(format!("BiCGSTAB rho = {rho_new} at iteration {it}")));
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
            y[i] = inv_d[i] * p[i];
        }
        sys.apply(&y, &mut v);
        alpha = rho / dot(&r0, &v);
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if dot(&s, &s).sqrt() / bn <= tol {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            return Ok((it, dot(&s, &s).sqrt() / bn));
        }
        for i in 0..n {
            z[i] = inv_d[i] * s[i];
        }
        sys.apply(&z, &mut t);
        omega = dot(&t, &s) / dot(&t, &t);
        for i in 0..n {
            x[i] += alpha * y[i] + omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        res = dot(&r, &r).sqrt() / bn;
        if !res.is_finite() {
            return Err(Error::Breakdown(format!("non-finite heat residual at iteration {it}")));
        }
        if res <= tol {
            return Ok((it, res));
        }
    }
    Err(Error::Breakdown(format!(
        "heat solve did not reach {tol:e} in {maxit} iterations (residual {res:e})"
    )))
}

/// Implicit Euler heat step. Returns the new temperature.
pub fn heat_step(state: &StefanState, params: &StefanParams) -> Result<ScalarField> {
    params.validate()?;
    let geo = geometry(&state.phi, params.sigma);
    heat_step_with(state, params, &geo)
}

fn heat_step_with(state: &StefanState, params: &StefanParams, geo: &Geometry) -> Result<ScalarField> {
    let g = geo.grid;
    let n = g.len();
    let told = state.temperature.values();
    // unknown numbering skips pinned nodes
    let mut slot = vec![usize::MAX; n];
    let mut nodes = Vec::new();
    for k in 0..n {
        if geo.pinned[k].is_none() {
            slot[k] = nodes.len();
            nodes.push(k);
        }
    }
    let inv_dt = 1.0 / params.dt;
    let rows: Vec<(Vec<(usize, f64)>, f64, f64)> = nodes
        .par_iter()
        .map(|&k| {
            let mut cols = Vec::with_capacity(4);
            let mut diag = inv_dt;
            let mut rhs = inv_dt * told[k];
            for a in 0..2 {
                let h = g.spacing()[a];
                let len = |arm: &Arm| match arm {
                    Arm::Interface { theta, .. } => theta * h,
                    _ => h,
                };
                let (hm, hp) = (len(&geo.arms[k][a][0]), len(&geo.arms[k][a][1]));
                for (side, hs) in [(0, hm), (1, hp)] {
                    let c = 2.0 / (hs * (hm + hp));
                    match geo.arms[k][a][side] {
                        Arm::Wall => {}
                        Arm::Node(j) => {
                            diag += c;
                            match geo.pinned[j] {
                                Some(v) => rhs += c * v,
                                None => cols.push((slot[j], -c)),
                            }
                        }
                        Arm::Interface { value, .. } => {
                            diag += c;
                            rhs += c * value;
                        }
                    }
                }
            }
            (cols, diag, rhs)
        })
        .collect();
    let mut sys = System {
        cols: Vec::with_capacity(rows.len()),
        diag: Vec::with_capacity(rows.len()),
        rhs: Vec::with_capacity(rows.len()),
    };
    for (c, d, r) in rows {
        sys.cols.push(c);
        sys.diag.push(d);
        sys.rhs.push(r);
    }
    let mut x: Vec<f64> = nodes.iter().map(|&k| told[k]).collect();
    bicgstab(&sys, &mut x, params.heat_tol, 10_000)?;
    let mut out = vec![0.0; n];
    for k in 0..n {
        out[k] = match geo.pinned[k] {
            Some(v) => v,
            None => x[slot[k]],
        };
    }
    ScalarField::new(g, out)
}

/// Derivative at 0 of the quadratic through `(a, fa)`, `(0, f0)`, `(b, fb)`
/// with `a < 0 < b`.
#[inline]
fn three_point(a: f64, fa: f64, f0: f64, b: f64, fb: f64) -> f64 {
    -b / (a * (a - b)) * fa - (a + b) / (a * b) * f0 - a / (b * (b - a)) * fb
}

/// Directional derivative at node `k` from its two arms along one line.
/// `step` is the node spacing along the line; `far` gives the next node
/// beyond a same-phase neighbour, for one-sided fallbacks.
fn arm_derivative(t: &[f64], k: usize, minus: Arm, plus: Arm, step: f64, far: impl Fn(usize, isize) -> Option<usize>) -> f64 {
    let point = |arm: Arm, sgn: f64| -> Option<(f64, f64)> {
        match arm {
            Arm::Node(j) => Some((sgn * step, t[j])),
            Arm::Interface { theta, value } if theta >= SNAP_FRACTION => Some((sgn * theta * step, value)),
            _ => None,
        }
    };
    match (point(minus, -1.0), point(plus, 1.0)) {
        (Some((a, fa)), Some((b, fb))) => three_point(a, fa, t[k], b, fb),
        // one side missing: second-order one-sided if the line continues
        (Some((a, fa)), None) => match (minus, far(k, -1)) {
            (Arm::Node(j), Some(jj)) => (3.0 * t[k] - 4.0 * t[j] + t[jj]) / (2.0 * step),
            _ => (t[k] - fa) / -a,
        },
        (None, Some((b, fb))) => match (plus, far(k, 1)) {
            (Arm::Node(j), Some(jj)) => (-3.0 * t[k] + 4.0 * t[j] - t[jj]) / (2.0 * step),
            _ => (fb - t[k]) / b,
        },
        (None, None) => 0.0,
    }
}

/// Diagonal arms are rebuilt on the fly from `phi`.
fn diagonal_arm(grid: &Grid, p: &[f64], solid: &[bool], kap: &[f64], sigma: f64, k: usize, di: isize, dj: isize) -> Arm {
    let idx = grid.multi_index(k);
    let (i, j) = (idx[0] as isize + di, idx[1] as isize + dj);
    if i < 0 || j < 0 || i >= grid.dims()[0] as isize || j >= grid.dims()[1] as isize {
        return Arm::Wall;
    }
    let q = grid.linear_index([i as usize, j as usize, 0]);
    if solid[q] == solid[k] {
        Arm::Node(q)
    } else {
        let theta = p[k] / (p[k] - p[q]);
        Arm::Interface {
            theta,
            value: -sigma * ((1.0 - theta) * kap[k] + theta * kap[q]),
        }
    }
}

fn phase_gradients(t: &[f64], phi: &LevelSet, geo: &Geometry, sigma: f64, diagonal: bool) -> Vec<[f64; 2]> {
    let g = geo.grid;
    let dims = g.dims3();
    let kap = if diagonal { curvature(phi).into_values() } else { Vec::new() };
    (0..g.len())
        .into_par_iter()
        .map(|k| {
            let same = |q: usize| geo.solid[q] == geo.solid[k];
            let axis_far = |a: usize| {
                move |j: usize, dir: isize| {
                    let idx = g.multi_index(j);
                    let s = if a == 0 { 1 } else { dims[0] };
                    let ok = if dir < 0 { idx[a] > 0 } else { idx[a] + 1 < dims[a] };
                    let jj = if dir < 0 { j.wrapping_sub(s) } else { j + s };
                    (ok && same(jj)).then_some(jj)
                }
            };
            let mut grad = [0.0; 2];
            for a in 0..2 {
                let [m, p] = geo.arms[k][a];
                let far0 = axis_far(a);
                grad[a] = arm_derivative(t, k, m, p, g.spacing()[a], |_, dir| {
                    let j = match if dir < 0 { m } else { p } {
                        Arm::Node(j) => j,
                        _ => return None,
                    };
                    far0(j, dir)
                });
            }
            if diagonal && (g.spacing()[0] - g.spacing()[1]).abs() <= 1e-12 * g.spacing()[0] {
                let step = g.spacing()[0] * std::f64::consts::SQRT_2;
                let p = phi.values();
                let arm = |di, dj| diagonal_arm(&g, p, &geo.solid, &kap, sigma, k, di, dj);
                // eta along (1, 1), zeta along (-1, 1)
                let de = arm_derivative(t, k, arm(-1, -1), arm(1, 1), step, |_, _| None);
                let dz = arm_derivative(t, k, arm(1, -1), arm(-1, 1), step, |_, _| None);
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let gx = s * (de - dz);
                let gy = s * (de + dz);
                grad = [0.5 * (grad[0] + gx), 0.5 * (grad[1] + gy)];
            }
            grad
        })
        .collect()
}

/// Normal interface speed at every node from the extended phase gradients.
pub fn interface_velocity(state: &StefanState, params: &StefanParams) -> Result<ScalarField> {
    let geo = geometry(&state.phi, params.sigma);
    interface_velocity_with(state, params, &geo)
}

fn interface_velocity_with(state: &StefanState, params: &StefanParams, geo: &Geometry) -> Result<ScalarField> {
    let g = geo.grid;
    let grads = phase_gradients(
        state.temperature.values(),
        &state.phi,
        geo,
        params.sigma,
        params.diagonal_gradients,
    );
    let bc = BcSpec::uniform(2, Bc::NeumannZero);
    let opts = SolveOptions {
        method: Method::PcgFastPoisson,
        tol: params.extension_tol,
        maxit: Some(20 * g.dims().iter().max().copied().unwrap_or(1)),
    };
    let solid_mask = Mask::from_known(g, geo.solid.clone())?;
    let liquid_mask = Mask::from_known(g, geo.solid.iter().map(|s| !s).collect())?;
    let mut ext = [[Vec::new(), Vec::new()], [Vec::new(), Vec::new()]];
    for (p, mask) in [&solid_mask, &liquid_mask].into_iter().enumerate() {
        if mask.unknown_count() == 0 || mask.known_count() == 0 {
            return Err(Error::DegenerateMask("one phase has vanished".into()));
        }
        for a in 0..2 {
            let v: Vec<f64> = (0..g.len())
                .map(|k| if mask.is_known(k) { grads[k][a] } else { 0.0 })
                .collect();
            let input = ScalarField::new(g, v)?;
            let (f, stats) = extend(&input, mask, &bc, &opts)?;
            if (0..g.len()).any(|k| mask.is_known(k) && f.values()[k].to_bits() != input.values()[k].to_bits()) {
                return Err(Error::Contract("extension changed a known gradient value".into()));
            }
            if !stats.converged {
                return Err(Error::Breakdown(format!(
                    "gradient extension stalled at residual {:.3e} after {} iterations",
                    stats.relative_residual, stats.iterations
                )));
            }
            ext[p][a] = f.into_values();
        }
    }
    let n = normals(&state.phi);
    let vn: Vec<f64> = (0..g.len())
        .map(|k| {
            let jump: f64 = (0..2).map(|a| (ext[1][a][k] - ext[0][a][k]) * n[k][a]).sum();
            -jump
        })
        .collect();
    ScalarField::new(g, vn)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub phi: LevelSet,
    pub temperature: ScalarField,
    pub solid_count: usize,
    pub max_vn: f64,
}

/// Advances `state` by one full time step. Returns `max |Vn|`.
pub fn step(state: &mut StefanState, params: &StefanParams) -> Result<f64> {
    let geo = geometry(&state.phi, params.sigma);
    let temp = heat_step_with(state, params, &geo)?;
    state.temperature = temp;
    let vn = interface_velocity_with(state, params, &geo)?;
    let max_vn = vn.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let moved = advect(&state.phi, &vn, params.dt)?;
    state.phi = reinitialize(&moved, params.reinit_iterations)?;
    state.t += params.dt;
    Ok(max_vn)
}

/// Runs to `t_end`, keeping a snapshot every `snapshot_every` steps and
/// after the last one.
pub fn run(params: &StefanParams, snapshot_every: usize) -> Result<Vec<Snapshot>> {
    run_with(params, snapshot_every, |_| Ok(()))
}

/// Like [`run`], calling `observe` after every step.
pub fn run_with(
    params: &StefanParams,
    snapshot_every: usize,
    mut observe: impl FnMut(&StefanState) -> Result<()>,
) -> Result<Vec<Snapshot>> {
    if snapshot_every == 0 {
        return Err(Error::InvalidArgument("snapshot_every must be positive".into()));
    }
    let mut state = init_state(params)?;
    let steps = params.steps();
    let mut snaps = Vec::new();
    for s in 1..=steps {
        let t = state.t;
        let max_vn = step(&mut state, params).map_err(|e| Error::AtTime {
            t,
            source: Box::new(e),
        })?;
        observe(&state)?;
        if s % snapshot_every == 0 || s == steps {
            snaps.push(Snapshot {
                step: s,
                t: state.t,
                phi: state.phi.clone(),
                temperature: state.temperature.clone(),
                solid_count: state.solid_count(),
                max_vn,
            });
        }
    }
    Ok(snaps)
}

/// Writes each snapshot as `phi_NNNNNN.field` / `T_NNNNNN.field` plus an
/// `index.csv` with `step,t,filename,solid_node_count,max_vn`.
pub fn write_snapshots(dir: &Path, snaps: &[Snapshot]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut index = String::from("step,t,filename,solid_node_count,max_vn\n");
    for s in snaps {
        let phi_name = format!("phi_{:06}.field", s.step);
        let t_name = format!("T_{:06}.field", s.step);
        crate::io::write_field(&dir.join(&phi_name), s.phi.field())?;
        crate::io::write_field(&dir.join(&t_name), &s.temperature)?;
        let _ = writeln!(index, "{},{:.6},{},{},{:.6e}", s.step, s.t, phi_name, s.solid_count, s.max_vn);
        let _ = writeln!(index, "{},{:.6},{},{},{:.6e}", s.step, s.t, t_name, s.solid_count, s.max_vn);
    }
    std::fs::write(dir.join("index.csv"), index)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn small(n: usize, sigma: f64, t_end: f64) -> StefanParams {
        let mut p = StefanParams::standard(n, sigma, t_end).unwrap();
        p.seed = SeedShape::Circle { radius: 0.5 };
        p
    }

    #[test]
    fn initial_state() {
        let p = small(40, 0.001, 0.01);
        let s = init_state(&p).unwrap();
        for (&phi, &t) in s.phi.values().iter().zip(s.temperature.values()) {
            assert_eq!(t, if phi <= 0.0 { 0.0 } else { -0.5 });
        }
        let g = p.grid;
        for k in 0..g.len() {
            let c = g.coords(k);
            assert!((s.phi.values()[k] - (c[0].hypot(c[1]) - 0.5)).abs() < 1e-5);
        }
        let mut bad = p.clone();
        bad.beta = 0.0;
        assert!(init_state(&bad).is_err());
        let mut big = p;
        big.seed = SeedShape::Circle { radius: 2.5 };
        assert!(init_state(&big).is_err());
    }

    #[test]
    fn three_point_is_exact_for_quadratics() {
        let f = |x: f64| 1.0 + 2.0 * x - 3.0 * x * x;
        let (a, b) = (-0.3, 0.7);
        assert!((three_point(a, f(a), f(0.0), b, f(b)) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_temperature_is_steady() {
        let mut p = small(32, 0.0, 0.01);
        p.beta = 1.0;
        let mut s = init_state(&p).unwrap();
        s.temperature = ScalarField::constant(p.grid, 0.0);
        let t = heat_step(&s, &p).unwrap();
        assert!(t.values().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn planar_front_obeys_maximum_principle() {
        let g = make_grid(&[(-1.0, 1.0); 2], &[41, 21]).unwrap();
        let mut p = StefanParams::standard(21, 0.0, 0.01).unwrap();
        p.grid = g;
        let phi = LevelSet::from_fn(&g, |x| x[0] - 0.013).unwrap();
        let temp = crate::grid::sample(&g, |x| if x[0] <= 0.013 { 0.0 } else { -0.5 }).unwrap();
        let mut s = StefanState {
            temperature: temp,
            phi,
            t: 0.0,
        };
        for _ in 0..5 {
            s.temperature = heat_step(&s, &p).unwrap();
            assert!(s.temperature.min() >= -0.5 - 1e-10);
            assert!(s.temperature.max() <= 1e-10);
        }
        // the solid stays at the interface temperature, the liquid warms up
        let k = g.linear_index([10, 10, 0]);
        assert!(s.temperature.values()[k].abs() < 1e-9);
        let kl = g.linear_index([25, 10, 0]);
        assert!(s.temperature.values()[kl] > -0.5);
    }

    #[test]
    fn piecewise_linear_jump_gives_velocity() {
        // planar interface at x = x0, T = a (x - x0) in the solid and
        // b (x - x0) in the liquid, so Vn = -(b - a)
        let (a, b, x0) = (0.3, -1.1, 0.0123);
        let g = make_grid(&[(-1.0, 1.0); 2], &[128, 128]).unwrap();
        let mut p = StefanParams::standard(128, 0.0, 0.01).unwrap();
        p.grid = g;
        let phi = LevelSet::from_fn(&g, |x| x[0] - x0).unwrap();
        let temp = crate::grid::sample(&g, |x| {
            let d = x[0] - x0;
            if d <= 0.0 { a * d } else { b * d }
        })
        .unwrap();
        let s = StefanState {
            temperature: temp,
            phi,
            t: 0.0,
        };
        let vn = interface_velocity(&s, &p).unwrap();
        let want = -(b - a);
        let h = g.spacing()[0];
        for k in 0..g.len() {
            if (g.coords(k)[0] - x0).abs() <= 4.0 * h {
                assert!((vn.values()[k] - want).abs() <= 0.1 * want.abs(), "{}", vn.values()[k]);
            }
        }
    }

    #[test]
    fn continuous_gradient_gives_no_jump() {
        // T = 0.1 (r - 0.5) vanishes on the interface and has the same
        // gradient on both sides
        let p = small(128, 0.0, 0.01);
        let mut s = init_state(&p).unwrap();
        s.temperature = crate::grid::sample(&p.grid, |x| 0.1 * (x[0].hypot(x[1]) - 0.5)).unwrap();
        let vn = interface_velocity(&s, &p).unwrap();
        // short interface arms make the one-sided gradients noisy, so this
        // bounds the mean over the band, about 5% of |grad T|
        let band = crate::grid::interface_band(&s.phi, 2.0);
        let mean = band.iter().map(|k| vn.values()[k].abs()).sum::<f64>() / band.count() as f64;
        assert!(mean <= 5e-3, "mean |Vn| = {mean}");
        assert!(vn.values().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn single_step_yields_one_snapshot() {
        let p = StefanParams::standard(48, 0.001, 5e-4).unwrap();
        let snaps = run(&p, 10).unwrap();
        assert_eq!(snaps.len(), 1);
        assert_eq!(snaps[0].step, 1);
        let dir = tempfile::tempdir().unwrap();
        write_snapshots(dir.path(), &snaps).unwrap();
        let index = std::fs::read_to_string(dir.path().join("index.csv")).unwrap();
        assert_eq!(index.lines().count(), 3);
        let back = crate::io::read_field(&dir.path().join("phi_000001.field")).unwrap();
        assert_eq!(&back, snaps[0].phi.field());
    }

    #[test]
    fn undercooled_disc_grows() {
        let p = small(64, 0.0, 0.005);
        let s0 = init_state(&p).unwrap();
        let snaps = run(&p, 100).unwrap();
        assert!(snaps.last().unwrap().solid_count >= s0.solid_count());
        let area = |phi: &LevelSet| phi.values().iter().map(|&v| (0.5 - v / 0.0635).clamp(0.0, 1.0)).sum::<f64>();
        assert!(area(&snaps.last().unwrap().phi) > area(&s0.phi));
    }
}
