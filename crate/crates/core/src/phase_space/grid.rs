use crate::error::{Error, Result};

/// Largest supported spatial (and velocity) dimension.
pub const MAX_DIM: usize = 3;

/// Smallest cell count accepted on any axis.
pub const MIN_CELLS: usize = 4;

/// Boundary treatment of the spatial box. Velocity axes are always clamped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    Clamped,
}

impl Boundary {
    pub fn as_str(self) -> &'static str {
        match self {
            Boundary::Periodic => "periodic",
            Boundary::Clamped => "clamped",
        }
    }
}

/// One uniform axis, cell-centred.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lower: f64,
    pub upper: f64,
    pub cells: usize,
}

impl Axis {
    pub fn new(lower: f64, upper: f64, cells: usize) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite()) || upper <= lower {
            return Err(Error::InvalidGrid(format!(
                "axis bounds [{lower}, {upper}] must be finite and increasing"
            )));
        }
        if cells < MIN_CELLS {
            return Err(Error::InvalidGrid(format!(
                "axis needs at least {MIN_CELLS} cells, got {cells}"
            )));
        }
        Ok(Axis {
            lower,
            upper,
            cells,
        })
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        (self.upper - self.lower) / self.cells as f64
    }

    #[inline]
    pub fn center(&self, i: usize) -> f64 {
        self.lower + (i as f64 + 0.5) * self.spacing()
    }

    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Row-major strides for a shape (axis 0 slowest).
pub(crate) fn strides_of(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * shape[k + 1];
    }
    strides
}

/// Uniform tensor grid over a box in position space.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    axes: Vec<Axis>,
    boundary: Boundary,
    strides: [usize; MAX_DIM],
}

impl SpatialGrid {
    pub fn new(axes: Vec<Axis>, boundary: Boundary) -> Result<Self> {
        if axes.is_empty() || axes.len() > MAX_DIM {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1..={MAX_DIM}, got {}",
                axes.len()
            )));
        }
        let shape: Vec<usize> = axes.iter().map(|a| a.cells).collect();
        let mut strides = [0; MAX_DIM];
        strides[..axes.len()].copy_from_slice(&strides_of(&shape));
        Ok(SpatialGrid {
            axes,
            boundary,
            strides,
        })
    }

    /// Same bounds and count on every axis.
    pub fn cube(dim: usize, lower: f64, upper: f64, cells: usize, boundary: Boundary) -> Result<Self> {
        let axis = Axis::new(lower, upper, cells)?;
        SpatialGrid::new(vec![axis; dim], boundary)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    #[inline]
    pub fn axis(&self, k: usize) -> &Axis {
        &self.axes[k]
    }

    #[inline]
    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.cells).collect()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.cells).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn spacing(&self, k: usize) -> f64 {
        self.axes[k].spacing()
    }

    pub fn min_spacing(&self) -> f64 {
        self.axes
            .iter()
            .map(Axis::spacing)
            .fold(f64::INFINITY, f64::min)
    }

    /// Quadrature weight of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::spacing).product()
    }

    pub fn volume(&self) -> f64 {
        self.axes.iter().map(Axis::length).product()
    }

    /// Box centre; the origin for spatial weights.
    pub fn box_center(&self) -> [f64; MAX_DIM] {
        let mut c = [0.0; MAX_DIM];
        for (k, a) in self.axes.iter().enumerate() {
            c[k] = 0.5 * (a.lower + a.upper);
        }
        c
    }

    #[inline]
    pub fn stride(&self, k: usize) -> usize {
        self.strides[k]
    }

    #[inline]
    pub fn unravel(&self, mut idx: usize) -> [usize; MAX_DIM] {
        let mut out = [0; MAX_DIM];
        for k in 0..self.dim() {
            out[k] = idx / self.strides[k];
            idx %= self.strides[k];
        }
        out
    }

    #[inline]
    pub fn ravel(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.strides)
            .map(|(i, s)| i * s)
            .sum()
    }

    #[inline]
    pub fn center(&self, idx: usize) -> [f64; MAX_DIM] {
        let m = self.unravel(idx);
        let mut x = [0.0; MAX_DIM];
        for k in 0..self.dim() {
            x[k] = self.axes[k].center(m[k]);
        }
        x
    }

    /// Neighbour of `idx` shifted by `offset` cells along axis `k`.
    /// Periodic grids wrap; clamped grids extend the edge value.
    #[inline]
    pub fn neighbor(&self, idx: usize, k: usize, offset: isize) -> usize {
        let n = self.axes[k].cells as isize;
        let i = ((idx / self.strides[k]) % self.axes[k].cells) as isize;
        let j = match self.boundary {
            Boundary::Periodic => (i + offset).rem_euclid(n),
            Boundary::Clamped => (i + offset).clamp(0, n - 1),
        };
        (idx as isize + (j - i) * self.strides[k] as isize) as usize
    }

    /// True when the face between `idx` and its +1 neighbour along `k` is a wall.
    #[inline]
    pub fn is_upper_wall(&self, idx: usize, k: usize) -> bool {
        self.boundary == Boundary::Clamped
            && (idx / self.strides[k]) % self.axes[k].cells == self.axes[k].cells - 1
    }

    pub fn same_layout(&self, other: &SpatialGrid) -> bool {
        self == other
    }
}

/// Position grid times a symmetric velocity box.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    space: SpatialGrid,
    velocity: Vec<Axis>,
    v_strides: [usize; MAX_DIM],
}

impl PhaseGrid {
    /// `v_max` is the half-width of the velocity box on each axis.
    pub fn new(space: SpatialGrid, v_max: &[f64], nv: &[usize]) -> Result<Self> {
        let d = space.dim();
        if v_max.len() != d || nv.len() != d {
            return Err(Error::InvalidGrid(format!(
                "velocity box needs {d} axes, got v_max={} nv={}",
                v_max.len(),
                nv.len()
            )));
        }
        let velocity = v_max
            .iter()
            .zip(nv)
            .map(|(&vm, &n)| {
                if !(vm > 0.0) {
                    return Err(Error::InvalidGrid(format!("v_max must be positive, got {vm}")));
                }
                Axis::new(-vm, vm, n)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut v_strides = [0; MAX_DIM];
        v_strides[..d].copy_from_slice(&strides_of(nv));
        Ok(PhaseGrid {
            space,
            velocity,
            v_strides,
        })
    }

    pub fn cube(space: SpatialGrid, v_max: f64, nv: usize) -> Result<Self> {
        let d = space.dim();
        PhaseGrid::new(space, &vec![v_max; d], &vec![nv; d])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn space(&self) -> &SpatialGrid {
        &self.space
    }

    pub fn velocity_axes(&self) -> &[Axis] {
        &self.velocity
    }

    #[inline]
    pub fn v_axis(&self, k: usize) -> &Axis {
        &self.velocity[k]
    }

    /// Smallest velocity half-width over the axes.
    pub fn v_max(&self) -> f64 {
        self.velocity
            .iter()
            .map(|a| a.upper)
            .fold(f64::INFINITY, f64::min)
    }

    #[inline]
    pub fn nv_total(&self) -> usize {
        self.velocity.iter().map(|a| a.cells).product()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.space.len() * self.nv_total()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn v_cell_volume(&self) -> f64 {
        self.velocity.iter().map(Axis::spacing).product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.space.cell_volume() * self.v_cell_volume()
    }

    pub fn max_dv(&self) -> f64 {
        self.velocity
            .iter()
            .map(Axis::spacing)
            .fold(0.0, f64::max)
    }

    #[inline]
    pub fn v_stride(&self, k: usize) -> usize {
        self.v_strides[k]
    }

    #[inline]
    pub fn v_unravel(&self, mut j: usize) -> [usize; MAX_DIM] {
        let mut out = [0; MAX_DIM];
        for k in 0..self.dim() {
            out[k] = j / self.v_strides[k];
            j %= self.v_strides[k];
        }
        out
    }

    #[inline]
    pub fn v_center(&self, j: usize) -> [f64; MAX_DIM] {
        let m = self.v_unravel(j);
        let mut v = [0.0; MAX_DIM];
        for k in 0..self.dim() {
            v[k] = self.velocity[k].center(m[k]);
        }
        v
    }

    /// Flat phase index from spatial and velocity flat indices.
    #[inline]
    pub fn index(&self, x_idx: usize, v_idx: usize) -> usize {
        x_idx * self.nv_total() + v_idx
    }

    #[inline]
    pub fn split(&self, idx: usize) -> (usize, usize) {
        let nv = self.nv_total();
        (idx / nv, idx % nv)
    }
}

/// Pairwise (tree) summation. The order depends only on the length of the
/// slice, so results are identical regardless of how work was partitioned.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        let mut s = 0.0;
        for &v in values {
            s += v;
        }
        return s;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Euclidean norm of the first `d` entries.
#[inline]
pub fn norm(v: &[f64], d: usize) -> f64 {
    v[..d].iter().map(|x| x * x).sum::<f64>().sqrt()
}
