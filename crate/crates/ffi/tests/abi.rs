use std::ffi::CStr;
use std::process::Command;
use std::ptr;

use levex::{Bc, BcSpec, Grid, Mask, ScalarField, SolveOptions};
use levex_ffi::*;

fn grid(n: usize) -> *mut LevexGrid {
    let dims = [n, n];
    let origin = [-1.0, -1.0];
    let h = 2.0 / (n - 1) as f64;
    let spacing = [h, h];
    let mut g = ptr::null_mut();
    let st = unsafe { levex_grid_new(2, dims.as_ptr(), origin.as_ptr(), spacing.as_ptr(), &mut g) };
    assert_eq!(st, LevexStatus::Ok);
    g
}

fn bc(kind: LevexBcKind) -> *mut LevexBc {
    let k = [kind, kind];
    let mut b = ptr::null_mut();
    let st = unsafe { levex_bc_new(2, k.as_ptr(), k.as_ptr(), &mut b) };
    assert_eq!(st, LevexStatus::Ok);
    b
}

fn last_error() -> String {
    let mut buf = [0 as std::ffi::c_char; 256];
    let n = unsafe { levex_last_error(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

// Known outside a disc of radius 0.5, smooth data.
fn disc_problem(n: usize) -> (Vec<f64>, Vec<u8>) {
    let h = 2.0 / (n - 1) as f64;
    let mut values = Vec::with_capacity(n * n);
    let mut known = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let (x, y) = (-1.0 + i as f64 * h, -1.0 + j as f64 * h);
            values.push((x * y).sin() + x);
            known.push(u8::from(x * x + y * y >= 0.25));
        }
    }
    (values, known)
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(levex_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn extend_matches_core() {
    let n = 33;
    let g = grid(n);
    let b = bc(LevexBcKind::NeumannZero);
    assert_eq!(unsafe { levex_grid_len(g) }, n * n);
    let (values, known) = disc_problem(n);
    let mut out = vec![f64::NAN; n * n];
    let mut stats = LevexSolveStats::default();
    let st = unsafe {
        levex_extend(
            g,
            b,
            values.as_ptr(),
            known.as_ptr(),
            values.len(),
            LevexMethod::Pcg,
            1e-10,
            0,
            out.as_mut_ptr(),
            &mut stats,
        )
    };
    assert_eq!(st, LevexStatus::Ok);
    assert_eq!(stats.converged, 1);
    assert!(stats.iterations > 0);

    let cg = Grid::new(&[n, n], &[-1.0, -1.0], &[2.0 / (n - 1) as f64; 2]).unwrap();
    let mask = Mask::from_known(cg, known.iter().map(|&k| k != 0).collect()).unwrap();
    let f = ScalarField::new(cg, values.clone()).unwrap().masked(&mask);
    let opts = SolveOptions {
        tol: 1e-10,
        ..SolveOptions::default()
    };
    let (reference, _) = levex::extend(&f, &mask, &BcSpec::uniform(2, Bc::NeumannZero), &opts).unwrap();
    assert_eq!(out.as_slice(), reference.values());
    for k in 0..out.len() {
        if known[k] != 0 {
            assert_eq!(out[k].to_bits(), values[k].to_bits());
        }
    }
    unsafe {
        levex_bc_free(b);
        levex_grid_free(g);
    }
}

#[test]
fn dense_and_pcg_agree() {
    let n = 17;
    let g = grid(n);
    let b = bc(LevexBcKind::DirichletZero);
    let (values, known) = disc_problem(n);
    let mut a = vec![0.0; n * n];
    let mut d = vec![0.0; n * n];
    unsafe {
        let st = levex_extend(g, b, values.as_ptr(), known.as_ptr(), n * n, LevexMethod::Pcg, 1e-12, 0, a.as_mut_ptr(), ptr::null_mut());
        assert_eq!(st, LevexStatus::Ok);
        let st = levex_extend(g, b, values.as_ptr(), known.as_ptr(), n * n, LevexMethod::Dense, 0.0, 0, d.as_mut_ptr(), ptr::null_mut());
        assert_eq!(st, LevexStatus::Ok);
        levex_bc_free(b);
        levex_grid_free(g);
    }
    let diff = a.iter().zip(&d).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(diff < 1e-8, "diff {diff}");
}

#[test]
fn errors_are_reported() {
    let n = 9;
    let g = grid(n);
    let b = bc(LevexBcKind::NeumannZero);
    let (values, known) = disc_problem(n);
    let mut out = vec![0.0; n * n];
    unsafe {
        let st = levex_extend(ptr::null(), b, values.as_ptr(), known.as_ptr(), n * n, LevexMethod::Pcg, 0.0, 0, out.as_mut_ptr(), ptr::null_mut());
        assert_eq!(st, LevexStatus::NullPointer);
        assert!(last_error().contains("grid"));

        let st = levex_extend(g, b, values.as_ptr(), known.as_ptr(), n * n - 1, LevexMethod::Pcg, 0.0, 0, out.as_mut_ptr(), ptr::null_mut());
        assert_eq!(st, LevexStatus::LengthMismatch);

        let mut bad = values.clone();
        bad[0] = f64::NAN;
        let st = levex_extend(g, b, bad.as_ptr(), known.as_ptr(), n * n, LevexMethod::Pcg, 0.0, 0, out.as_mut_ptr(), ptr::null_mut());
        assert_eq!(st, LevexStatus::NonFinite);

        let none = vec![0u8; n * n];
        let st = levex_extend(g, b, values.as_ptr(), none.as_ptr(), n * n, LevexMethod::Pcg, 0.0, 0, out.as_mut_ptr(), ptr::null_mut());
        // Pure Neumann with nothing known has a constant null space.
        assert_eq!(st, LevexStatus::Singular);

        // A successful call clears the message.
        let st = levex_extend(g, b, values.as_ptr(), known.as_ptr(), n * n, LevexMethod::Pcg, 0.0, 0, out.as_mut_ptr(), ptr::null_mut());
        assert_eq!(st, LevexStatus::Ok);
        assert_eq!(levex_last_error(ptr::null_mut(), 0), 0);

        levex_bc_free(b);
        levex_grid_free(g);
        levex_grid_free(ptr::null_mut());
        levex_bc_free(ptr::null_mut());
    }
}

#[test]
fn bad_handles_are_rejected() {
    let dims = [4usize, 0];
    let origin = [0.0, 0.0];
    let spacing = [1.0, 1.0];
    let mut g = ptr::null_mut();
    let st = unsafe { levex_grid_new(2, dims.as_ptr(), origin.as_ptr(), spacing.as_ptr(), &mut g) };
    assert_eq!(st, LevexStatus::InvalidGrid);
    assert!(g.is_null());

    let low = [LevexBcKind::Periodic, LevexBcKind::NeumannZero];
    let high = [LevexBcKind::DirichletZero, LevexBcKind::NeumannZero];
    let mut b = ptr::null_mut();
    let st = unsafe { levex_bc_new(2, low.as_ptr(), high.as_ptr(), &mut b) };
    assert_eq!(st, LevexStatus::InvalidBc);
    assert!(b.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn extrapolate_fills_the_far_side() {
    let n = 41;
    let g = grid(n);
    let h = 2.0 / (n - 1) as f64;
    let mut values = Vec::new();
    let mut phi = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let (x, y) = (-1.0 + i as f64 * h, -1.0 + j as f64 * h);
            phi.push((x * x + y * y).sqrt() - 0.5);
            values.push(if phi.last().unwrap() <= &0.0 { 2.0 } else { 0.0 });
        }
    }
    let mut out = vec![0.0; n * n];
    let st = unsafe { levex_extrapolate(g, values.as_ptr(), phi.as_ptr(), n * n, LevexOrder::Constant, out.as_mut_ptr()) };
    assert_eq!(st, LevexStatus::Ok);
    // A constant inside stays constant just across the interface.
    for k in 0..n * n {
        if phi[k] > 0.0 && phi[k] < 2.0 * h {
            assert!((out[k] - 2.0).abs() < 1e-6, "node {k}: {}", out[k]);
        }
    }
    unsafe { levex_grid_free(g) };
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/levex.h");
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found, skipping");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        format!(
            "#include \"{header}\"\nint main(void) {{ LevexGrid *g = 0; LevexStatus s = LEVEX_STATUS_OK; (void)g; return (int)s + (int)sizeof(LevexSolveStats) * 0; }}\n"
        ),
    )
    .unwrap();
    let out = Command::new(cc).args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"]).arg(&src).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn which_cc() -> Result<&'static str, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if Command::new(cc).arg("--version").output().is_ok_and(|o| o.status.success()) {
            return Ok(cc);
        }
    }
    Err(())
}
