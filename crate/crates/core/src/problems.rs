//! Benchmark extension problems with analytic interfaces and reference
//! fields, used by the CLI and the acceptance tests.
//!
//! | problem | domain            | interface                         | reference field                 |
//! |---------|-------------------|-----------------------------------|---------------------------------|
//! | 1       | `[-pi, pi]^2`     | union of unit discs at `(+-0.8, 0)` | `cos x sin y`                 |
//! | 2       | `[-pi, pi]^3`     | union of unit balls at `(+-0.8, 0, 0)` | `cos x sin y sin(pi/4 - z)` |
//! | 3       | `[-2, 2]^2`       | annulus `1/2 < r < 1`             | `y / log(1 + r)`                |
//! | 4       | `[0, 3] x [0, 1]` | `x = 3/2 + sum a_k sin(2 pi k y + w_k)` | `x + cos(2 pi (y - 1/4))/5` or `x + cos(pi y)/5` |
//!
//! Every level set here is the exact signed distance to the interface.
//! Periodic axes use wrapped grids (the far endpoint is not a node).

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{mask_from_levelset, sample, Bc, BcSpec, Grid, LevelSet, Mask, ScalarField, Side};

/// Seed used for the random interface of problem 4 unless overridden.
pub const DEFAULT_SEED: u64 = 42;

/// An extension problem: the field is known where `phi <= 0`.
#[derive(Clone, Debug)]
pub struct Problem {
    pub name: String,
    pub grid: Grid,
    pub bc: BcSpec,
    pub phi: LevelSet,
    pub reference: ScalarField,
    pub mask: Mask,
    /// Exact unit normals of the interface, extended off it along the
    /// distance gradient. Only set where a closed form is cheap.
    pub normals: Option<Vec<[f64; 3]>>,
}

impl Problem {
    fn build(
        name: String,
        grid: Grid,
        bc: BcSpec,
        phi: impl Fn(&[f64]) -> f64,
        reference: impl Fn(&[f64]) -> f64,
    ) -> Result<Self> {
        let phi = LevelSet::from_fn(&grid, phi)?;
        let reference = sample(&grid, reference)?;
        let mask = mask_from_levelset(&phi, Side::InsideKnown)?;
        Ok(Self {
            name,
            grid,
            bc,
            phi,
            reference,
            mask,
            normals: None,
        })
    }

    /// The reference values at known nodes, zero elsewhere.
    pub fn known(&self) -> ScalarField {
        self.reference.masked(&self.mask)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoxBc {
    Dirichlet,
    Neumann,
    /// Neumann on the `x` faces, Dirichlet on the `y` faces.
    Mixed,
    Periodic,
}

impl BoxBc {
    pub fn spec(self, ndim: usize) -> BcSpec {
        match self {
            BoxBc::Dirichlet => BcSpec::uniform(ndim, Bc::DirichletZero),
            BoxBc::Neumann => BcSpec::uniform(ndim, Bc::NeumannZero),
            BoxBc::Periodic => BcSpec::uniform(ndim, Bc::Periodic),
            BoxBc::Mixed => {
                let mut axes = vec![Bc::NeumannZero];
                axes.extend(std::iter::repeat_n(Bc::DirichletZero, ndim - 1));
                BcSpec::per_axis(&axes).expect("mixed spec is paired")
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BoxBc::Dirichlet => "dirichlet",
            BoxBc::Neumann => "neumann",
            BoxBc::Mixed => "mixed",
            BoxBc::Periodic => "periodic",
        }
    }
}

impl std::str::FromStr for BoxBc {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dirichlet" => Ok(BoxBc::Dirichlet),
            "neumann" => Ok(BoxBc::Neumann),
            "mixed" => Ok(BoxBc::Mixed),
            "periodic" => Ok(BoxBc::Periodic),
            _ => Err(Error::InvalidArgument(format!(
                "unknown boundary condition `{s}` (dirichlet, neumann, periodic, mixed)"
            ))),
        }
    }
}

fn peanut_centre(x: f64) -> f64 {
    if x >= 0.0 {
        0.8
    } else {
        -0.8
    }
}

/// Signed distance to the union of unit discs (or balls) centred at
/// `(+-0.8, 0, ..)`.
pub fn peanut_phi(x: &[f64]) -> f64 {
    let r = |c: f64| {
        let mut s = (x[0] - c).powi(2);
        for v in &x[1..] {
            s += v * v;
        }
        s.sqrt()
    };
    (r(0.8) - 1.0).min(r(-0.8) - 1.0)
}

fn peanut_normals(grid: &Grid) -> Vec<[f64; 3]> {
    (0..grid.len())
        .map(|k| {
            let mut c = grid.coords(k);
            c[0] -= peanut_centre(c[0]);
            let r = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt().max(1e-12);
            [c[0] / r, c[1] / r, c[2] / r]
        })
        .collect()
}

/// Problem 1 on an `n x n` grid.
pub fn example1(n: usize, bc: BoxBc) -> Result<Problem> {
    if bc == BoxBc::Periodic {
        return Err(Error::InvalidArgument(
            "problem 1 takes dirichlet, neumann or mixed conditions".into(),
        ));
    }
    let grid = Grid::from_extents(&[(-PI, PI), (-PI, PI)], &[n, n])?;
    let mut p = Problem::build(
        format!("example1-{}-{n}", bc.name()),
        grid,
        bc.spec(2),
        peanut_phi,
        |x| x[0].cos() * x[1].sin(),
    )?;
    p.normals = Some(peanut_normals(&grid));
    Ok(p)
}

/// Problem 2 on a periodic `n^3` grid.
pub fn example2(n: usize) -> Result<Problem> {
    let grid = Grid::from_extents_wrapped(&[(-PI, PI); 3], &[n, n, n], &[true; 3])?;
    let mut p = Problem::build(
        format!("example2-periodic-{n}"),
        grid,
        BoxBc::Periodic.spec(3),
        peanut_phi,
        |x| x[0].cos() * x[1].sin() * (PI / 4.0 - x[2]).sin(),
    )?;
    p.normals = Some(peanut_normals(&grid));
    Ok(p)
}

fn annulus_phi(x: &[f64]) -> f64 {
    let r = x[0].hypot(x[1]);
    (0.5 - r).max(r - 1.0)
}

/// Odd in `y` and direction dependent at the origin, where it is taken as
/// zero (odd grid sizes put a node there).
fn annulus_reference(x: &[f64]) -> f64 {
    let r = x[0].hypot(x[1]);
    if r == 0.0 {
        return 0.0;
    }
    x[1] / (1.0 + r).ln()
}

/// Problem 3 on an `n x n` grid over `[-2, 2]^2`.
pub fn example3(n: usize, bc: BoxBc) -> Result<Problem> {
    if bc == BoxBc::Periodic {
        return Err(Error::InvalidArgument(
            "problem 3 takes dirichlet, neumann or mixed conditions".into(),
        ));
    }
    let grid = Grid::from_extents(&[(-2.0, 2.0), (-2.0, 2.0)], &[n, n])?;
    Problem::build(
        format!("example3-{}-{n}", bc.name()),
        grid,
        bc.spec(2),
        annulus_phi,
        annulus_reference,
    )
}

/// Right half of problem 3 with Neumann conditions: the nodes of the
/// `n x n` grid with `x > 0` (`n` even), reflected about `x = 0` through a
/// Neumann condition on the left face.
pub fn example3_half(n: usize) -> Result<Problem> {
    if n % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "half-domain run needs an even node count, got {n}"
        )));
    }
    let full = Grid::from_extents(&[(-2.0, 2.0), (-2.0, 2.0)], &[n, n])?;
    let h = full.spacing();
    let grid = Grid::new(&[n / 2, n], &[full.coord(0, n / 2), -2.0], &[h[0], h[1]])?;
    Problem::build(
        format!("example3-half-{n}"),
        grid,
        BoxBc::Neumann.spec(2),
        annulus_phi,
        annulus_reference,
    )
}

/// Error regions of problem 3: outside the annulus (`r >= 1`) and inside
/// the hole (`r <= 1/2`).
pub fn annulus_split(grid: &Grid) -> (crate::grid::NodeSet, crate::grid::NodeSet) {
    let r = |k: usize| {
        let c = grid.coords(k);
        c[0].hypot(c[1])
    };
    (
        crate::grid::NodeSet::from_predicate(*grid, |k| r(k) >= 1.0),
        crate::grid::NodeSet::from_predicate(*grid, |k| r(k) <= 0.5),
    )
}

/// Amplitudes and phases of the sine-series interface of problem 4.
#[derive(Clone, Debug, PartialEq)]
pub struct SineInterface {
    pub amplitudes: Vec<f64>,
    pub phases: Vec<f64>,
}

impl SineInterface {
    /// Draws ten `(a_k, w_k)` pairs from ChaCha8 seeded with `seed`,
    /// alternating `a_k ~ U[-0.05, 0.05)` and `w_k ~ U[0, 2 pi)`, and keeps
    /// the first `terms`.
    pub fn random(seed: u64, terms: usize) -> Result<Self> {
        if !(1..=10).contains(&terms) {
            return Err(Error::InvalidArgument(format!("terms must be 1..=10, got {terms}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut amplitudes = Vec::new();
        let mut phases = Vec::new();
        for _ in 0..10 {
            amplitudes.push(rng.random_range(-0.05..0.05));
            phases.push(rng.random_range(0.0..2.0 * PI));
        }
        amplitudes.truncate(terms);
        phases.truncate(terms);
        Ok(Self { amplitudes, phases })
    }

    pub fn x_at(&self, y: f64) -> f64 {
        1.5 + self
            .amplitudes
            .iter()
            .zip(&self.phases)
            .enumerate()
            .map(|(k, (a, w))| a * (2.0 * PI * (k + 1) as f64 * y + w).sin())
            .sum::<f64>()
    }

    fn amplitude_bound(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.abs()).sum()
    }
}

/// Signed distance to a curve `x = s(y)` by dense sampling of `y` over
/// three periods, negative to the left of the curve.
struct CurveDistance {
    pts: Vec<(f64, f64)>,
    dy: f64,
    y0: f64,
}

impl CurveDistance {
    const SAMPLES_PER_UNIT: usize = 10_000;

    fn new(curve: &SineInterface) -> Self {
        let n = 3 * Self::SAMPLES_PER_UNIT + 1;
        let dy = 1.0 / Self::SAMPLES_PER_UNIT as f64;
        let y0 = -1.0;
        let pts = (0..n)
            .map(|i| {
                let y = y0 + i as f64 * dy;
                (curve.x_at(y), y)
            })
            .collect();
        Self { pts, dy, y0 }
    }

    fn distance(&self, x: f64, y: f64) -> f64 {
        let c = ((y - self.y0) / self.dy).round().clamp(0.0, (self.pts.len() - 1) as f64) as usize;
        let d2 = |i: usize| {
            let (px, py) = self.pts[i];
            (px - x).powi(2) + (py - y).powi(2)
        };
        let mut best = d2(c);
        // scan outwards until the y offset alone exceeds the best distance
        for dir in [-1isize, 1] {
            let mut i = c as isize + dir;
            while i >= 0 && (i as usize) < self.pts.len() {
                let dyy = self.pts[i as usize].1 - y;
                if dyy * dyy > best {
                    break;
                }
                best = best.min(d2(i as usize));
                i += dir;
            }
        }
        best.sqrt()
    }
}

/// Problem 4: `nx x ny` nodes, periodic (`channel = false`) or Neumann
/// (`channel = true`) top and bottom, Neumann sides.
pub fn example4(nx: usize, ny: usize, curve: &SineInterface, channel: bool) -> Result<Problem> {
    let grid = Grid::from_extents_wrapped(&[(0.0, 3.0), (0.0, 1.0)], &[nx, ny], &[false, !channel])?;
    let bc = if channel {
        BcSpec::uniform(2, Bc::NeumannZero)
    } else {
        BcSpec::per_axis(&[Bc::NeumannZero, Bc::Periodic])?
    };
    let dist = CurveDistance::new(curve);
    let reach = curve.amplitude_bound() + 1.0;
    let phi = |x: &[f64]| {
        let s = curve.x_at(x[1]);
        // far from the curve the horizontal offset is a fine proxy; those
        // nodes only contribute their sign
        let d = if (x[0] - 1.5).abs() <= reach {
            dist.distance(x[0], x[1])
        } else {
            (x[0] - s).abs()
        };
        if x[0] < s {
            -d
        } else {
            d
        }
    };
    let reference = move |x: &[f64]| {
        if channel {
            x[0] + (PI * x[1]).cos() / 5.0
        } else {
            x[0] + (2.0 * PI * (x[1] - 0.25)).cos() / 5.0
        }
    };
    let name = format!(
        "example4-{}-{}terms-{nx}x{ny}",
        if channel { "channel" } else { "periodic" },
        curve.amplitudes.len()
    );
    Problem::build(name, grid, bc, phi, reference)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::interface_band;

    #[test]
    fn peanut_band_matches_direct_scan() {
        let p = example1(128, BoxBc::Dirichlet).unwrap();
        let band = interface_band(&p.phi, 4.0);
        let h = 2.0 * PI / 127.0;
        let mut count = 0;
        for j in 0..128 {
            for i in 0..128 {
                let x = -PI + i as f64 * h;
                let y = -PI + j as f64 * h;
                let d = ((x - 0.8).hypot(y) - 1.0).min((x + 0.8).hypot(y) - 1.0);
                if d.abs() <= 4.0 * h {
                    count += 1;
                }
            }
        }
        assert_eq!(band.count(), count);
    }

    #[test]
    fn odd_annulus_grid_has_finite_reference() {
        let p = example3(33, BoxBc::Neumann).unwrap();
        assert!(p.reference.values().iter().all(|v| v.is_finite()));
        assert_eq!(p.reference.values()[16 * 33 + 16], 0.0);
    }

    #[test]
    fn half_grid_nodes_are_full_grid_nodes() {
        let full = example3(128, BoxBc::Neumann).unwrap();
        let half = example3_half(128).unwrap();
        assert_eq!(half.grid.dims(), &[64, 128]);
        for j in 0..128 {
            for i in 0..64 {
                let a = half.grid.coord(0, i);
                let b = full.grid.coord(0, i + 64);
                assert!((a - b).abs() < 1e-14);
                let _ = j;
            }
        }
        assert!(half.grid.origin()[0] > 0.0);
    }

    #[test]
    fn sine_interface_is_deterministic_and_in_range() {
        let a = SineInterface::random(42, 10).unwrap();
        let b = SineInterface::random(42, 10).unwrap();
        assert_eq!(a, b);
        assert!(a.amplitudes.iter().all(|v| (-0.05..0.05).contains(v)));
        assert!(a.phases.iter().all(|v| (0.0..2.0 * PI).contains(v)));
        let one = SineInterface::random(42, 1).unwrap();
        assert_eq!(one.amplitudes[0], a.amplitudes[0]);
        assert!(SineInterface::random(42, 0).is_err());
    }

    #[test]
    fn curve_distance_matches_brute_force() {
        let c = SineInterface::random(7, 10).unwrap();
        let d = CurveDistance::new(&c);
        for &(x, y) in &[(1.4, 0.3), (1.6, 0.95), (1.2, 0.0), (1.5, 0.5)] {
            let brute = d
                .pts
                .iter()
                .map(|(px, py)| (px - x).hypot(py - y))
                .fold(f64::INFINITY, f64::min);
            assert!((d.distance(x, y) - brute).abs() < 1e-15);
        }
    }

    #[test]
    fn problem2_grid_is_wrapped() {
        let p = example2(8).unwrap();
        assert!((p.grid.spacing()[0] - 2.0 * PI / 8.0).abs() < 1e-15);
        assert_eq!(p.grid.len(), 512);
    }
}
