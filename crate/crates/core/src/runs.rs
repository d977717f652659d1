//! Solving benchmark problems and measuring the error near the interface.

use std::time::Instant;

use crate::error::Result;
use crate::extrapolation::{extrapolate_with_normals, ExtrapolationOptions, ExtrapolationOrder};
use crate::grid::{NodeSet, ScalarField};
use crate::levelset::{band_error, normals};
use crate::problems::Problem;
use crate::solver::{condition_estimate, extend, SolveOptions, SolveStats};

#[derive(Clone, Debug)]
pub enum Approach {
    Biharmonic(SolveOptions),
    Extrapolate(ExtrapolationOrder, ExtrapolationOptions),
}

impl Approach {
    pub fn name(&self) -> &'static str {
        match self {
            Approach::Biharmonic(_) => "biharmonic",
            Approach::Extrapolate(ExtrapolationOrder::Constant, _) => "constant",
            Approach::Extrapolate(ExtrapolationOrder::Linear, _) => "linear",
            Approach::Extrapolate(ExtrapolationOrder::Quadratic, _) => "quadratic",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub field: ScalarField,
    /// Set for biharmonic runs.
    pub stats: Option<SolveStats>,
    /// One entry per region, or a single entry over the whole band.
    pub errors: Vec<f64>,
    pub seconds: f64,
}

impl Outcome {
    pub fn iterations(&self) -> Option<usize> {
        self.stats.as_ref().map(|s| s.iterations)
    }

    /// Condition estimate of the preconditioned operator, when CG ran long
    /// enough to give one.
    pub fn condition(&self) -> Option<f64> {
        self.stats.as_ref().and_then(|s| condition_estimate(s).ok())
    }
}

/// Extends `p.known()` and measures max errors within `band_cells` of the
/// interface, separately over each of `regions` if any are given.
pub fn solve_problem(p: &Problem, approach: &Approach, band_cells: f64, regions: &[NodeSet]) -> Result<Outcome> {
    let known = p.known();
    let start = Instant::now();
    let (field, stats) = match approach {
        Approach::Biharmonic(opts) => {
            let (f, s) = extend(&known, &p.mask, &p.bc, opts)?;
            (f, Some(s))
        }
        Approach::Extrapolate(order, opts) => {
            let computed;
            let n = match &p.normals {
                Some(n) => n,
                None => {
                    computed = normals(&p.phi);
                    &computed
                }
            };
            (extrapolate_with_normals(&known, &p.phi, *order, n, opts)?, None)
        }
    };
    let seconds = start.elapsed().as_secs_f64();
    let errors = if regions.is_empty() {
        vec![band_error(&field, &p.reference, &p.phi, band_cells, None)?]
    } else {
        regions
            .iter()
            .map(|r| band_error(&field, &p.reference, &p.phi, band_cells, Some(r)))
            .collect::<Result<_>>()?
    };
    Ok(Outcome {
        field,
        stats,
        errors,
        seconds,
    })
}
