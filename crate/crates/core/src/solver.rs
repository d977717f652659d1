//! Preconditioned conjugate gradients, a dense reference solver and the
//! [`extend`] entry point.

use nalgebra::DMatrix;

use crate::biharmonic::{build_rhs, BiharmonicOperator};
use crate::error::{Error, Result};
use crate::grid::{BcSpec, Mask, ScalarField};
use crate::precond::FastPoisson;

/// Largest system [`dense_solve`] will assemble.
pub const DENSE_CAP: usize = 5000;

/// Relative tolerance used when none is given.
pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
    /// `|r_k| / |b|` after each iteration, starting with 1 for `x0 = 0`.
    pub residual_history: Vec<f64>,
    /// `(alpha_k, beta_k)` from each iteration, for Lanczos estimates.
    pub cg_alpha_beta: Vec<(f64, f64)>,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Preconditioned CG from `x0 = 0`, stopping when `|b - Ax| / |b| <= tol`.
///
/// Hitting `maxit` is not an error: the partial solution is returned with
/// `converged = false`. A non-finite or nonpositive curvature term aborts.
pub fn pcg<A, M>(mut apply_a: A, mut apply_m: M, b: &[f64], tol: f64, maxit: usize) -> Result<(Vec<f64>, SolveStats)>
where
    A: FnMut(&[f64], &mut [f64]),
    M: FnMut(&[f64], &mut [f64]),
{
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut stats = SolveStats {
        residual_history: vec![1.0],
        ..Default::default()
    };
    let bnorm = norm(b);
    if bnorm == 0.0 {
        stats.converged = true;
        stats.relative_residual = 0.0;
        stats.residual_history[0] = 0.0;
        return Ok((x, stats));
    }
    if !bnorm.is_finite() {
        return Err(Error::Breakdown("right-hand side is not finite".into()));
    }
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    let mut q = vec![0.0; n];
    apply_m(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut relres = 1.0;
    for it in 0..maxit {
        if !(rz > 0.0 && rz.is_finite()) {
            return Err(Error::Breakdown(format!(
                "preconditioned residual norm r.z = {rz} at iteration {it}"
            )));
        }
        apply_a(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0 && pq.is_finite()) {
            return Err(Error::Breakdown(format!("p.Ap = {pq} at iteration {it}")));
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        relres = norm(&r) / bnorm;
        if !relres.is_finite() {
            return Err(Error::Breakdown(format!("non-finite residual at iteration {it}")));
        }
        stats.iterations = it + 1;
        stats.residual_history.push(relres);
        if relres <= tol {
            stats.cg_alpha_beta.push((alpha, 0.0));
            stats.converged = true;
            break;
        }
        apply_m(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        stats.cg_alpha_beta.push((alpha, beta));
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    stats.relative_residual = relres;
    Ok((x, stats))
}

/// Number of eigenvalues of the symmetric tridiagonal `(d, e)` below `x`.
fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..d.len() {
        let off = if i == 0 { 0.0 } else { e[i - 1] * e[i - 1] };
        q = d[i] - x - if i == 0 { 0.0 } else { off / q };
        if q == 0.0 {
            q = -f64::EPSILON * (d[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Extremal eigenvalues of a symmetric tridiagonal by Sturm bisection.
pub(crate) fn tridiagonal_extremes(d: &[f64], e: &[f64]) -> (f64, f64) {
    let n = d.len();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    let bisect = |target: usize| {
        // smallest x with count(x) > target
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid == a || mid == b {
                break;
            }
            if sturm_count(d, e, mid) > target {
                b = mid;
            } else {
                a = mid;
            }
        }
        0.5 * (a + b)
    };
    (bisect(0), bisect(n - 1))
}

/// Ratio of the extremal Ritz values of the CG Lanczos tridiagonal.
///
/// This estimates the condition number of the (preconditioned) operator
/// from below: Ritz values lie inside the spectrum.
pub fn condition_estimate(stats: &SolveStats) -> Result<f64> {
    let ab = &stats.cg_alpha_beta;
    if ab.len() < 5 {
        return Err(Error::InvalidArgument(format!(
            "condition estimate needs at least 5 CG iterations, have {}",
            ab.len()
        )));
    }
    let k = ab.len();
    let mut d = Vec::with_capacity(k);
    let mut e = Vec::with_capacity(k - 1);
    for j in 0..k {
        let (a, _) = ab[j];
        let mut dj = 1.0 / a;
        if j > 0 {
            let (ap, bp) = ab[j - 1];
            dj += bp / ap;
            e.push(bp.sqrt() / ap);
        }
        d.push(dj);
    }
    let (lmin, lmax) = tridiagonal_extremes(&d, &e);
    if !(lmin > 0.0) {
        return Err(Error::Breakdown(format!("nonpositive Ritz value {lmin}")));
    }
    Ok(lmax / lmin)
}

/// Condition estimate of the unpreconditioned induced operator, from plain
/// CG on the extension system run to `tol` or `maxit` iterations. The
/// smallest Ritz value converges slowly, so `tol` should be far below the
/// usual solve tolerance.
pub fn plain_condition_estimate(known: &ScalarField, mask: &Mask, bc: &BcSpec, tol: f64, maxit: usize) -> Result<(f64, SolveStats)> {
    check_known(known, mask)?;
    mask.require_nontrivial()?;
    let op = BiharmonicOperator::new(mask.grid(), bc)?;
    let mut ws = op.workspace();
    let b = build_rhs(known, mask, bc)?;
    let (_, stats) = pcg(|x, y| op.matvec_into(mask, x, y, &mut ws), |x, y| y.copy_from_slice(x), &b, tol, maxit)?;
    Ok((condition_estimate(&stats)?, stats))
}

fn check_known(known: &ScalarField, mask: &Mask) -> Result<()> {
    if !known.grid().same_nodes(mask.grid()) {
        return Err(Error::InvalidArgument("field and mask grids differ".into()));
    }
    Ok(())
}

/// Rejects masks whose induced system is singular: without a Dirichlet
/// face the constants are in the kernel unless some node is known.
fn check_solvable(mask: &Mask, bc: &BcSpec) -> Result<()> {
    if mask.known_count() == 0 && !bc.has_dirichlet() {
        return Err(Error::Singular(format!(
            "all {} nodes unknown with no Dirichlet face ({bc:?}); constants are in the kernel",
            mask.unknown_count()
        )));
    }
    Ok(())
}

fn scatter(known: &ScalarField, mask: &Mask, x: &[f64]) -> ScalarField {
    let mut v = known.values().to_vec();
    for (&k, &xi) in mask.unknown_index().iter().zip(x) {
        v[k] = xi;
    }
    ScalarField::from_raw(*known.grid(), v)
}

/// Direct solve of the induced system, assembled densely from matvecs.
pub fn dense_solve(mask: &Mask, bc: &BcSpec, known: &ScalarField) -> Result<ScalarField> {
    check_known(known, mask)?;
    let n = mask.unknown_count();
    if n == 0 {
        return Ok(known.clone());
    }
    if n > DENSE_CAP {
        return Err(Error::TooLarge { count: n, cap: DENSE_CAP });
    }
    check_solvable(mask, bc)?;
    let b = build_rhs(known, mask, bc)?;
    let op = BiharmonicOperator::new(known.grid(), bc)?;
    let mut ws = op.workspace();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for c in 0..n {
        e[c] = 1.0;
        op.matvec_into(mask, &e, &mut col, &mut ws);
        a.set_column(c, &nalgebra::DVector::from_column_slice(&col));
        e[c] = 0.0;
    }
    let scale = a.amax();
    let rhs = nalgebra::DVector::from_vec(b);
    let singular = |what: &str, piv: f64| {
        Error::Singular(format!(
            "{what} pivot ratio {piv:.3e} for {n} unknowns, {} known, {bc:?}",
            mask.known_count()
        ))
    };
    let x = match a.clone().cholesky() {
        Some(ch) => {
            let piv = ch.l_dirty().diagonal().iter().fold(f64::INFINITY, |m, v| m.min(v * v));
            if piv < 1e-12 * scale {
                return Err(singular("Cholesky", piv / scale));
            }
            ch.solve(&rhs)
        }
        None => {
            let lu = a.lu();
            let piv = lu.u().diagonal().iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
            if piv < 1e-12 * scale {
                return Err(singular("LU", piv / scale));
            }
            lu.solve(&rhs).ok_or_else(|| singular("LU", 0.0))?
        }
    };
    Ok(scatter(known, mask, x.as_slice()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    PcgFastPoisson,
    Dense,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    pub method: Method,
    pub tol: f64,
    /// `None` means `max(dims)`.
    pub maxit: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            method: Method::PcgFastPoisson,
            tol: DEFAULT_TOL,
            maxit: None,
        }
    }
}

/// Biharmonic extension of `known` into the unknown nodes of `mask`.
///
/// `known` must be zero at unknown nodes. Known values are copied into the
/// result unchanged. For the dense method the returned stats report one
/// iteration and the true relative residual.
pub fn extend(known: &ScalarField, mask: &Mask, bc: &BcSpec, opts: &SolveOptions) -> Result<(ScalarField, SolveStats)> {
    check_known(known, mask)?;
    if mask.unknown_count() == 0 {
        let stats = SolveStats {
            converged: true,
            residual_history: vec![0.0],
            ..Default::default()
        };
        return Ok((known.clone(), stats));
    }
    check_solvable(mask, bc)?;
    match opts.method {
        Method::Dense => {
            let out = dense_solve(mask, bc, known)?;
            let b = build_rhs(known, mask, bc)?;
            let x: Vec<f64> = mask.unknown_index().iter().map(|&k| out.values()[k]).collect();
            let ax = crate::biharmonic::matvec(&x, mask, bc)?;
            let rr: Vec<f64> = ax.iter().zip(&b).map(|(a, b)| b - a).collect();
            let bn = norm(&b);
            let rel = if bn > 0.0 { norm(&rr) / bn } else { 0.0 };
            let stats = SolveStats {
                iterations: 1,
                relative_residual: rel,
                residual_history: vec![1.0, rel],
                cg_alpha_beta: Vec::new(),
                converged: true,
            };
            Ok((out, stats))
        }
        Method::PcgFastPoisson => {
            let b = build_rhs(known, mask, bc)?;
            let op = BiharmonicOperator::new(known.grid(), bc)?;
            let pre = FastPoisson::new(known.grid(), bc)?;
            let mut ws = op.workspace();
            let mut full = Vec::new();
            let maxit = opts
                .maxit
                .unwrap_or_else(|| known.grid().dims().iter().copied().max().unwrap_or(1));
            let (x, stats) = pcg(
                |u, out| op.matvec_into(mask, u, out, &mut ws),
                |r, out| pre.apply_into(mask, r, out, &mut full),
                &b,
                opts.tol,
                maxit,
            )?;
            Ok((scatter(known, mask, &x), stats))
        }
    }
}
