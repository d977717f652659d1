//! Plain-text field dumps.
//!
//! Text format (`.field`):
//!
//! ```text
//! # levex field v1
//! ndim 2
//! dims 128 128
//! origin -3.1415926535897931e0 -3.1415926535897931e0
//! spacing 4.9473956347950051e-2 4.9473956347950051e-2
//! linearization axis0-fastest
//! values
//! 1.2246467991473532e-16
//! ...
//! ```
//!
//! One value per line in linearization order (axis 0 varies fastest),
//! written with 17 significant digits so that reading a dump back yields
//! bit-identical values.
//!
//! CSV format: a header `i,j[,k],value` followed by one row per node in the
//! same order. CSV carries no geometry, so reading it needs a grid.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};

const MAGIC: &str = "# levex field v1";

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn to_text(field: &ScalarField) -> String {
    let g = field.grid();
    let mut s = String::with_capacity(32 * g.len() + 256);
    let join = |xs: &[f64]| xs.iter().map(|&x| fmt17(x)).collect::<Vec<_>>().join(" ");
    let _ = writeln!(s, "{MAGIC}");
    let _ = writeln!(s, "ndim {}", g.ndim());
    let _ = writeln!(
        s,
        "dims {}",
        g.dims().iter().map(|d| d.to_string()).collect::<Vec<_>>().join(" ")
    );
    let _ = writeln!(s, "origin {}", join(g.origin()));
    let _ = writeln!(s, "spacing {}", join(g.spacing()));
    let _ = writeln!(s, "linearization axis0-fastest");
    let _ = writeln!(s, "values");
    for &v in field.values() {
        s.push_str(&fmt17(v));
        s.push('\n');
    }
    s
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn header_line<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    key: &str,
) -> Result<(usize, Vec<&'a str>)> {
    let (no, line) = lines
        .next()
        .ok_or_else(|| parse_err(0, format!("unexpected end of input, expected `{key}`")))?;
    let mut parts = line.split_whitespace();
    match parts.next() {
        Some(k) if k == key => Ok((no, parts.collect())),
        other => Err(parse_err(
            no,
            format!("expected `{key}`, found `{}`", other.unwrap_or("")),
        )),
    }
}

fn parse_list<T: std::str::FromStr>(no: usize, key: &str, items: &[&str]) -> Result<Vec<T>> {
    items
        .iter()
        .map(|t| {
            t.parse::<T>()
                .map_err(|_| parse_err(no, format!("bad {key} entry `{t}`")))
        })
        .collect()
}

pub fn from_text(text: &str) -> Result<ScalarField> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, l)) if l == MAGIC => {}
        Some((no, l)) => return Err(parse_err(no, format!("missing header `{MAGIC}`, found `{l}`"))),
        None => return Err(parse_err(1, "empty input")),
    }
    let (no, nd) = header_line(&mut lines, "ndim")?;
    let ndim: Vec<usize> = parse_list(no, "ndim", &nd)?;
    let ndim = match ndim.as_slice() {
        [n] => *n,
        _ => return Err(parse_err(no, "ndim takes one value")),
    };
    let (no, d) = header_line(&mut lines, "dims")?;
    let dims: Vec<usize> = parse_list(no, "dims", &d)?;
    if dims.len() != ndim {
        return Err(parse_err(no, format!("{} dims for ndim {ndim}", dims.len())));
    }
    let (no, o) = header_line(&mut lines, "origin")?;
    let origin: Vec<f64> = parse_list(no, "origin", &o)?;
    let (no2, sp) = header_line(&mut lines, "spacing")?;
    let spacing: Vec<f64> = parse_list(no2, "spacing", &sp)?;
    if origin.len() != ndim || spacing.len() != ndim {
        return Err(parse_err(no, "origin/spacing arity does not match ndim"));
    }
    let (no, lin) = header_line(&mut lines, "linearization")?;
    if lin != ["axis0-fastest"] {
        return Err(parse_err(no, format!("unsupported linearization {lin:?}")));
    }
    header_line(&mut lines, "values")?;
    let grid = Grid::new(&dims, &origin, &spacing).map_err(|e| parse_err(no, e.to_string()))?;
    let mut values = Vec::with_capacity(grid.len());
    let mut last = no;
    for (no, l) in lines {
        last = no;
        if l.is_empty() {
            continue;
        }
        let v: f64 = l
            .parse()
            .map_err(|_| parse_err(no, format!("bad value `{l}`")))?;
        values.push(v);
    }
    if values.len() != grid.len() {
        return Err(parse_err(
            last,
            format!("expected {} values, found {}", grid.len(), values.len()),
        ));
    }
    ScalarField::new(grid, values)
}

pub fn to_csv(field: &ScalarField) -> String {
    let g = field.grid();
    let names = ["i", "j", "k"];
    let mut s = String::new();
    let _ = writeln!(s, "{},value", names[..g.ndim()].join(","));
    for (k, &v) in field.values().iter().enumerate() {
        let m = g.multi_index(k);
        for &i in &m[..g.ndim()] {
            let _ = write!(s, "{i},");
        }
        let _ = writeln!(s, "{}", fmt17(v));
    }
    s
}

/// Reads a CSV dump onto `grid`. Rows may come in any order; every node
/// must appear exactly once.
pub fn from_csv(text: &str, grid: &Grid) -> Result<ScalarField> {
    let nd = grid.ndim();
    let mut values = vec![f64::NAN; grid.len()];
    let mut seen = vec![false; grid.len()];
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (no, header) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
    if header.split(',').count() != nd + 1 {
        return Err(parse_err(no, format!("expected {} columns", nd + 1)));
    }
    for (no, l) in lines {
        if l.is_empty() {
            continue;
        }
        let cols: Vec<&str> = l.split(',').map(str::trim).collect();
        if cols.len() != nd + 1 {
            return Err(parse_err(no, format!("expected {} columns", nd + 1)));
        }
        let mut idx = [0usize; 3];
        for a in 0..nd {
            idx[a] = cols[a]
                .parse()
                .map_err(|_| parse_err(no, format!("bad index `{}`", cols[a])))?;
            if idx[a] >= grid.dims()[a] {
                return Err(parse_err(no, format!("index {} out of range on axis {a}", idx[a])));
            }
        }
        let v: f64 = cols[nd]
            .parse()
            .map_err(|_| parse_err(no, format!("bad value `{}`", cols[nd])))?;
        let k = grid.linear_index(idx);
        if seen[k] {
            return Err(parse_err(no, format!("duplicate node {idx:?}")));
        }
        seen[k] = true;
        values[k] = v;
    }
    if let Some(k) = seen.iter().position(|s| !s) {
        return Err(parse_err(0, format!("node {:?} missing", grid.multi_index(k))));
    }
    ScalarField::new(*grid, values)
}

pub fn write_field(path: &Path, field: &ScalarField) -> Result<()> {
    let text = if path.extension().is_some_and(|e| e == "csv") {
        to_csv(field)
    } else {
        to_text(field)
    };
    fs::write(path, text)?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<ScalarField> {
    from_text(&fs::read_to_string(path)?)
}

/// Reads a list of known node indices: one linear index per line, blank
/// lines and `#` comments ignored.
pub fn read_index_list(text: &str, len: usize) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (i, l) in text.lines().enumerate() {
        let l = l.split('#').next().unwrap_or("").trim();
        if l.is_empty() {
            continue;
        }
        let k: usize = l
            .parse()
            .map_err(|_| parse_err(i + 1, format!("bad node index `{l}`")))?;
        if k >= len {
            return Err(parse_err(i + 1, format!("node index {k} out of range (grid has {len})")));
        }
        out.push(k);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, sample};
    use proptest::prelude::*;

    #[test]
    fn rejects_malformed_header() {
        let err = from_text("# levex field v1\nndim 2\ndimz 4 4\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn rejects_short_values() {
        let g = make_grid(&[(0.0, 1.0); 2], &[4, 4]).unwrap();
        let text = to_text(&ScalarField::zeros(g));
        let cut: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
        assert!(matches!(from_text(&cut), Err(Error::Parse { .. })));
    }

    #[test]
    fn csv_round_trip_3d() {
        let g = make_grid(&[(0.0, 1.0); 3], &[4, 5, 6]).unwrap();
        let f = sample(&g, |x| x[0].sin() + x[1] * x[2].exp()).unwrap();
        let back = from_csv(&to_csv(&f), &g).unwrap();
        assert_eq!(back.values(), f.values());
    }

    proptest! {
        #[test]
        fn text_round_trip_is_bit_exact(
            vals in proptest::collection::vec(-1e300f64..1e300, 20),
            origin in -1e3f64..1e3,
            h in 1e-6f64..1e2,
        ) {
            let g = Grid::new(&[4, 5], &[origin, -origin], &[h, h * 1.5]).unwrap();
            let f = ScalarField::new(g, vals).unwrap();
            let back = from_text(&to_text(&f)).unwrap();
            prop_assert_eq!(back.grid(), f.grid());
            for (a, b) in back.values().iter().zip(f.values()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
