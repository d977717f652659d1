//! Node-centred rectangular grids in two and three dimensions, the scalar
//! fields that live on them, known/unknown node masks and boundary
//! condition descriptors.
//!
//! Node values are stored with axis 0 varying fastest: the linear index of
//! node `(i, j, k)` is `i + dims[0] * (j + dims[1] * k)`.

use crate::error::{Error, Result};

/// Smallest node count per axis. The biharmonic stencil reaches two nodes
/// in every direction, so anything smaller has no deep interior.
pub const MIN_NODES_PER_AXIS: usize = 4;

/// A uniform rectilinear grid. Unused trailing axes (for 2D grids) carry
/// `dims = 1` internally and are never exposed through [`Grid::dims`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    ndim: usize,
    dims: [usize; 3],
    origin: [f64; 3],
    spacing: [f64; 3],
}

impl Grid {
    pub fn new(dims: &[usize], origin: &[f64], spacing: &[f64]) -> Result<Self> {
        let ndim = dims.len();
        if !(2..=3).contains(&ndim) {
            return Err(Error::InvalidGrid(format!(
                "only 2D and 3D grids are supported, got {ndim} axes"
            )));
        }
        if origin.len() != ndim || spacing.len() != ndim {
            return Err(Error::InvalidGrid(format!(
                "dims/origin/spacing disagree on dimension ({} / {} / {})",
                ndim,
                origin.len(),
                spacing.len()
            )));
        }
        let mut g = Grid {
            ndim,
            dims: [1; 3],
            origin: [0.0; 3],
            spacing: [1.0; 3],
        };
        for a in 0..ndim {
            if dims[a] < MIN_NODES_PER_AXIS {
                return Err(Error::InvalidGrid(format!(
                    "axis {a} has {} nodes, need at least {MIN_NODES_PER_AXIS}",
                    dims[a]
                )));
            }
            if !(spacing[a] > 0.0 && spacing[a].is_finite()) {
                return Err(Error::InvalidGrid(format!(
                    "axis {a} spacing must be positive, got {}",
                    spacing[a]
                )));
            }
            if !origin[a].is_finite() {
                return Err(Error::InvalidGrid(format!("axis {a} origin is not finite")));
            }
            g.dims[a] = dims[a];
            g.origin[a] = origin[a];
            g.spacing[a] = spacing[a];
        }
        Ok(g)
    }

    /// Grid spanning `[lo, hi]` on every axis with both endpoints as nodes,
    /// so `spacing = (hi - lo) / (dims - 1)`.
    pub fn from_extents(extents: &[(f64, f64)], dims: &[usize]) -> Result<Self> {
        let wrap = vec![false; dims.len()];
        Self::from_extents_wrapped(extents, dims, &wrap)
    }

    /// Like [`Grid::from_extents`], except that axes flagged in `wrap` are
    /// treated as one period: the `hi` endpoint is identified with `lo` and
    /// is not stored, so `spacing = (hi - lo) / dims` on those axes.
    pub fn from_extents_wrapped(
        extents: &[(f64, f64)],
        dims: &[usize],
        wrap: &[bool],
    ) -> Result<Self> {
        if extents.len() != dims.len() || wrap.len() != dims.len() {
            return Err(Error::InvalidGrid(format!(
                "{} extents for {} axes",
                extents.len(),
                dims.len()
            )));
        }
        let mut origin = Vec::with_capacity(dims.len());
        let mut spacing = Vec::with_capacity(dims.len());
        for (a, (&(lo, hi), &n)) in extents.iter().zip(dims).enumerate() {
            if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidGrid(format!(
                    "axis {a} extent [{lo}, {hi}] is degenerate"
                )));
            }
            if n < MIN_NODES_PER_AXIS {
                return Err(Error::InvalidGrid(format!(
                    "axis {a} has {n} nodes, need at least {MIN_NODES_PER_AXIS}"
                )));
            }
            origin.push(lo);
            let intervals = if wrap[a] { n } else { n - 1 };
            spacing.push((hi - lo) / intervals as f64);
        }
        Self::new(dims, &origin, &spacing)
    }

    pub fn ndim(&self) -> usize {
        self.ndim
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims[..self.ndim]
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin[..self.ndim]
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing[..self.ndim]
    }

    /// Dimensions padded to three axes with trailing ones.
    pub(crate) fn dims3(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing().iter().cloned().fold(0.0, f64::max)
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.origin[axis] + i as f64 * self.spacing[axis]
    }

    #[inline]
    pub fn linear_index(&self, idx: [usize; 3]) -> usize {
        idx[0] + self.dims[0] * (idx[1] + self.dims[1] * idx[2])
    }

    #[inline]
    pub fn multi_index(&self, k: usize) -> [usize; 3] {
        let i = k % self.dims[0];
        let r = k / self.dims[0];
        [i, r % self.dims[1], r / self.dims[1]]
    }

    /// Coordinates of node `k`; entries past `ndim` are zero.
    pub fn coords(&self, k: usize) -> [f64; 3] {
        let m = self.multi_index(k);
        let mut c = [0.0; 3];
        for a in 0..self.ndim {
            c[a] = self.coord(a, m[a]);
        }
        c
    }

    /// Whether two grids describe the same nodes.
    pub fn same_nodes(&self, other: &Grid) -> bool {
        self.ndim == other.ndim && self.dims == other.dims && {
            (0..self.ndim).all(|a| {
                let tol = 1e-12 * self.spacing[a].max(other.spacing[a]);
                (self.origin[a] - other.origin[a]).abs() <= tol * 1e3
                    && (self.spacing[a] - other.spacing[a]).abs() <= tol
            })
        }
    }
}

/// Convenience wrapper for [`Grid::from_extents`].
pub fn make_grid(extents: &[(f64, f64)], dims: &[usize]) -> Result<Grid> {
    Grid::from_extents(extents, dims)
}

/// Node values over a grid. All values are finite.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        if let Some((k, &v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite {
                index: k,
                coords: grid.coords(k)[..grid.ndim()].to_vec(),
                value: v,
            });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    /// Trusted constructor for values already known to be finite.
    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, idx: [usize; 3]) -> f64 {
        self.values[self.grid.linear_index(idx)]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Copy with every unknown node of `mask` set to zero, the form
    /// expected by the extension routines.
    pub fn masked(&self, mask: &Mask) -> Self {
        let mut values = self.values.clone();
        for &k in mask.unknown_index() {
            values[k] = 0.0;
        }
        Self::from_raw(self.grid, values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }
}

/// Samples `f` at every node.
pub fn sample(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Result<ScalarField> {
    let nd = grid.ndim();
    let values = (0..grid.len())
        .map(|k| f(&grid.coords(k)[..nd]))
        .collect();
    ScalarField::new(*grid, values)
}

/// Partition of the nodes into known (prescribed) and unknown ones.
#[derive(Clone, Debug, PartialEq)]
pub struct Mask {
    grid: Grid,
    known: Vec<bool>,
    unknown_index: Vec<usize>,
}

impl Mask {
    pub fn from_known(grid: Grid, known: Vec<bool>) -> Result<Self> {
        if known.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                actual: known.len(),
            });
        }
        let unknown_index = known
            .iter()
            .enumerate()
            .filter_map(|(k, &kn)| (!kn).then_some(k))
            .collect();
        Ok(Self {
            grid,
            known,
            unknown_index,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn known(&self) -> &[bool] {
        &self.known
    }

    pub fn is_known(&self, k: usize) -> bool {
        self.known[k]
    }

    /// Linear indices of the unknown nodes, strictly increasing.
    pub fn unknown_index(&self) -> &[usize] {
        &self.unknown_index
    }

    pub fn unknown_count(&self) -> usize {
        self.unknown_index.len()
    }

    pub fn known_count(&self) -> usize {
        self.known.len() - self.unknown_index.len()
    }

    /// Errors unless there is at least one known and one unknown node.
    pub fn require_nontrivial(&self) -> Result<()> {
        if self.known_count() == 0 {
            return Err(Error::DegenerateMask("no known nodes".into()));
        }
        if self.unknown_count() == 0 {
            return Err(Error::DegenerateMask("no unknown nodes".into()));
        }
        Ok(())
    }

    pub fn unknown_set(&self) -> NodeSet {
        NodeSet {
            grid: self.grid,
            members: self.known.iter().map(|k| !k).collect(),
        }
    }

    pub fn known_set(&self) -> NodeSet {
        NodeSet {
            grid: self.grid,
            members: self.known.clone(),
        }
    }
}

/// An arbitrary subset of grid nodes (interface bands, error regions).
#[derive(Clone, Debug, PartialEq)]
pub struct NodeSet {
    grid: Grid,
    members: Vec<bool>,
}

impl NodeSet {
    pub fn new(grid: Grid, members: Vec<bool>) -> Result<Self> {
        if members.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                actual: members.len(),
            });
        }
        Ok(Self { grid, members })
    }

    pub fn from_predicate(grid: Grid, pred: impl Fn(usize) -> bool) -> Self {
        Self {
            grid,
            members: (0..grid.len()).map(pred).collect(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn contains(&self, k: usize) -> bool {
        self.members[k]
    }

    pub fn members(&self) -> &[bool] {
        &self.members
    }

    pub fn count(&self) -> usize {
        self.members.iter().filter(|&&m| m).count()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members
            .iter()
            .enumerate()
            .filter_map(|(k, &m)| m.then_some(k))
    }

    pub fn intersect(&self, other: &NodeSet) -> NodeSet {
        NodeSet {
            grid: self.grid,
            members: self
                .members
                .iter()
                .zip(&other.members)
                .map(|(&a, &b)| a && b)
                .collect(),
        }
    }

    pub fn is_subset_of(&self, other: &NodeSet) -> bool {
        self.members
            .iter()
            .zip(&other.members)
            .all(|(&a, &b)| !a || b)
    }
}

/// Boundary condition on one face of the domain. All conditions are
/// homogeneous and are realised through ghost-node reflections.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Bc {
    /// Odd reflection about a zero layer one spacing beyond the last node.
    DirichletZero,
    /// Even reflection about the midpoint between the last node and the
    /// first ghost node.
    NeumannZero,
    /// Wraparound to the opposite face.
    Periodic,
}

/// Per-axis, per-face boundary conditions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BcSpec {
    ndim: usize,
    faces: [[Bc; 2]; 3],
}

impl BcSpec {
    /// `faces[a] = (low, high)` for each axis.
    pub fn new(faces: &[(Bc, Bc)]) -> Result<Self> {
        if !(2..=3).contains(&faces.len()) {
            return Err(Error::InvalidBc(format!(
                "expected 2 or 3 axes, got {}",
                faces.len()
            )));
        }
        let mut out = [[Bc::DirichletZero; 2]; 3];
        for (a, &(lo, hi)) in faces.iter().enumerate() {
            if (lo == Bc::Periodic) != (hi == Bc::Periodic) {
                return Err(Error::InvalidBc(format!(
                    "axis {a}: periodic on one face requires periodic on the other"
                )));
            }
            out[a] = [lo, hi];
        }
        Ok(Self {
            ndim: faces.len(),
            faces: out,
        })
    }

    pub fn uniform(ndim: usize, bc: Bc) -> Self {
        Self::new(&vec![(bc, bc); ndim]).expect("uniform BCs are always paired")
    }

    /// One condition per axis, applied on both faces.
    pub fn per_axis(bcs: &[Bc]) -> Result<Self> {
        let faces: Vec<_> = bcs.iter().map(|&b| (b, b)).collect();
        Self::new(&faces)
    }

    pub fn ndim(&self) -> usize {
        self.ndim
    }

    pub fn low(&self, axis: usize) -> Bc {
        self.faces[axis][0]
    }

    pub fn high(&self, axis: usize) -> Bc {
        self.faces[axis][1]
    }

    pub fn axis(&self, axis: usize) -> (Bc, Bc) {
        (self.faces[axis][0], self.faces[axis][1])
    }

    /// True if some face pins the level of the solution.
    pub fn has_dirichlet(&self) -> bool {
        (0..self.ndim).any(|a| self.faces[a].contains(&Bc::DirichletZero))
    }

    pub(crate) fn check_grid(&self, grid: &Grid) -> Result<()> {
        if self.ndim != grid.ndim() {
            return Err(Error::InvalidBc(format!(
                "{}D boundary conditions on a {}D grid",
                self.ndim,
                grid.ndim()
            )));
        }
        Ok(())
    }
}

/// Signed scalar field whose zero set is the interface. Negative inside
/// the region where the field is known.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelSet {
    field: ScalarField,
}

impl LevelSet {
    pub fn new(field: ScalarField) -> Self {
        Self { field }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        Ok(Self::new(sample(grid, f)?))
    }

    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    pub fn grid(&self) -> &Grid {
        self.field.grid()
    }

    pub fn values(&self) -> &[f64] {
        self.field.values()
    }

    pub fn into_field(self) -> ScalarField {
        self.field
    }

    pub fn negated(&self) -> Self {
        Self::new(ScalarField::from_raw(
            *self.grid(),
            self.values().iter().map(|v| -v).collect(),
        ))
    }
}

/// Which side of the interface carries the prescribed values.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// Known where `phi < 0`, extend outwards.
    InsideKnown,
    /// Known where `phi > 0`, extend inwards.
    OutsideKnown,
}

/// Builds the known/unknown partition from a level set. Nodes with
/// `phi == 0` are known on either side.
pub fn mask_from_levelset(phi: &LevelSet, side: Side) -> Result<Mask> {
    let known = phi
        .values()
        .iter()
        .map(|&p| match side {
            Side::InsideKnown => p <= 0.0,
            Side::OutsideKnown => p >= 0.0,
        })
        .collect();
    let mask = Mask::from_known(*phi.grid(), known)?;
    mask.require_nontrivial()?;
    Ok(mask)
}

/// Nodes within `cells` grid spacings of the zero set, judged by `|phi|`.
pub fn interface_band(phi: &LevelSet, cells: f64) -> NodeSet {
    let width = cells * phi.grid().max_spacing();
    NodeSet::from_predicate(*phi.grid(), |k| phi.values()[k].abs() <= width)
}
