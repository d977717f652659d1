use std::path::Path;
use std::process::{Command, Output};

use levex::io::{read_field, write_field};
use levex::{Grid, ScalarField};

fn levex(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_levex"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn levex")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn small_field(dir: &Path, name: &str, f: impl Fn(f64, f64) -> f64) -> ScalarField {
    let g = Grid::new(&[17, 13], &[-1.0, -1.0], &[0.125, 1.0 / 6.0]).unwrap();
    let v = (0..g.len())
        .map(|k| {
            let p = g.coords(k);
            f(p[0], p[1])
        })
        .collect();
    let field = ScalarField::new(g, v).unwrap();
    write_field(&dir.join(name), &field).unwrap();
    field
}

#[test]
fn usage_errors_exit_with_two() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    assert_eq!(code(&levex(&[], p)), 2);
    assert_eq!(code(&levex(&["example", "6"], p)), 2);
    assert_eq!(code(&levex(&["example", "1", "--grids", "2"], p)), 2);
    assert_eq!(code(&levex(&["example", "1", "--grids", "abc"], p)), 2);
    assert_eq!(code(&levex(&["example", "1", "--grids", "33", "--bc", "sideways"], p)), 2);
    assert_eq!(code(&levex(&["compare", "1", "--grids", "33", "--methods", ""], p)), 2);
    assert_eq!(code(&levex(&["compare", "1", "--grids", "33", "--methods", "bogus"], p)), 2);
}

#[test]
fn malformed_field_is_a_usage_error() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    std::fs::write(p.join("bad.field"), "# not a field\nndim 2\n").unwrap();
    small_field(p, "phi.field", |x, _| x);
    let o = levex(&["extend", "--field", "bad.field", "--phi", "phi.field", "--out", "o.field"], p);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!p.join("o.field").exists());
}

#[test]
fn known_list_out_of_range_is_rejected() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    small_field(p, "f.field", |x, y| x * y);
    std::fs::write(p.join("known.txt"), "0\n1\n100000\n").unwrap();
    let o = levex(&["extend", "--field", "f.field", "--known-list", "known.txt", "--out", "o.field"], p);
    assert_eq!(code(&o), 2);
}

#[test]
fn all_known_round_trips_bit_for_bit() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    let f = small_field(p, "f.field", |x, y| (3.0 * x).sin() * y + 1e-300);
    small_field(p, "phi.field", |_, _| -1.0);
    let o = levex(&["extend", "--field", "f.field", "--phi", "phi.field", "--out", "o.field"], p);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.starts_with("0,"), "{stdout}");
    let back = read_field(&p.join("o.field")).unwrap();
    for (a, b) in back.values().iter().zip(f.values()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn extend_keeps_known_values_and_reports_stats() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    let f = small_field(p, "f.field", |x, y| x * x - y);
    let phi = small_field(p, "phi.field", |x, y| 0.4 - (x * x + y * y).sqrt());
    let o = levex(
        &["extend", "--field", "f.field", "--phi", "phi.field", "--bc", "neumann,dirichlet", "--tol", "1e-10", "--out", "o.field"],
        p,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let line = String::from_utf8(o.stdout).unwrap();
    let parts: Vec<&str> = line.trim().split(',').collect();
    assert_eq!(parts.len(), 3);
    assert!(parts[0].parse::<usize>().unwrap() > 0);
    assert!(parts[1].parse::<f64>().unwrap() <= 1e-10);
    assert_eq!(parts[2], "true");
    let out = read_field(&p.join("o.field")).unwrap();
    for k in 0..out.values().len() {
        if phi.values()[k] <= 0.0 {
            assert_eq!(out.values()[k].to_bits(), f.values()[k].to_bits());
        }
    }
}

#[test]
fn dumped_inputs_reproduce_the_example_field() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    let o = levex(&["example", "1", "--grids", "33", "--emit-inputs"], p);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = levex(
        &[
            "extend", "--field", "example1_33x33_known.field", "--phi", "example1_33x33_phi.field", "--bc", "dirichlet",
            "--out", "again.field",
        ],
        p,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let a = read_field(&p.join("example1_33x33.field")).unwrap();
    let b = read_field(&p.join("again.field")).unwrap();
    assert_eq!(a.values(), b.values());
}

#[test]
fn tables_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = levex(&["example", "3", "--grids", "33,65"], d.path());
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let o = levex(&["compare", "1", "--grids", "33"], d.path());
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["example3_table.csv", "compare1_table.csv"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
    let table = std::fs::read_to_string(a.path().join("example3_table.csv")).unwrap();
    assert!(table.starts_with("grid,iterations,cond_est_precond,error_outside,est_order_outside,error_inside,est_order_inside"));
    assert_eq!(table.lines().count(), 3);
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let d = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_levex"))
        .args(["example", "1", "--grids", "17"])
        .env("LEVEX_THREADS", "many")
        .current_dir(d.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}
