use rayon::prelude::*;

use super::grid::{PhaseGrid, SpatialGrid, MAX_DIM};
use crate::error::{Error, Result};

/// Density floor below which the fluid velocity is reported as zero.
pub const EPS_VAC: f64 = 1e-10;

/// Velocity moments of a distribution: n = ∫f dv, m1 = ∫f v dv, m2 = ∫f |v|² dv.
///
/// `m1` is interleaved: component `k` of cell `i` lives at `i * dim + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub dim: usize,
    pub n: Vec<f64>,
    pub m1: Vec<f64>,
    pub m2: Vec<f64>,
}

impl Moments {
    pub fn zeros(dim: usize, cells: usize) -> Self {
        Moments {
            dim,
            n: vec![0.0; cells],
            m1: vec![0.0; cells * dim],
            m2: vec![0.0; cells],
        }
    }

    #[inline]
    pub fn m1_at(&self, i: usize) -> &[f64] {
        &self.m1[i * self.dim..(i + 1) * self.dim]
    }
}

/// Midpoint quadrature of the velocity moments, cell by cell.
pub fn moments(f: &[f64], grid: &PhaseGrid) -> Result<Moments> {
    if f.len() != grid.len() {
        return Err(Error::Mismatch(format!(
            "distribution has {} values, phase grid has {}",
            f.len(),
            grid.len()
        )));
    }
    if let Some(index) = f.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let d = grid.dim();
    let nv = grid.nv_total();
    let dv = grid.v_cell_volume();
    let vcenters: Vec<[f64; MAX_DIM]> = (0..nv).map(|j| grid.v_center(j)).collect();

    let per_cell: Vec<(f64, [f64; MAX_DIM], f64)> = f
        .par_chunks(nv)
        .map(|block| {
            let mut n = 0.0;
            let mut m1 = [0.0; MAX_DIM];
            let mut m2 = 0.0;
            for (val, v) in block.iter().zip(&vcenters) {
                n += val;
                let mut v2 = 0.0;
                for k in 0..d {
                    m1[k] += val * v[k];
                    v2 += v[k] * v[k];
                }
                m2 += val * v2;
            }
            (n * dv, m1.map(|x| x * dv), m2 * dv)
        })
        .collect();

    let cells = grid.space().len();
    let mut out = Moments::zeros(d, cells);
    for (i, (n, m1, m2)) in per_cell.into_iter().enumerate() {
        out.n[i] = n;
        out.m1[i * d..(i + 1) * d].copy_from_slice(&m1[..d]);
        out.m2[i] = m2;
    }
    Ok(out)
}

/// The particle distribution on the phase grid, with cached moments.
#[derive(Debug, Clone)]
pub struct KineticState {
    grid: PhaseGrid,
    f: Vec<f64>,
    moments: Option<Moments>,
    epoch: u64,
}

impl KineticState {
    pub fn zeros(grid: PhaseGrid) -> Self {
        let f = vec![0.0; grid.len()];
        KineticState {
            grid,
            f,
            moments: None,
            epoch: 0,
        }
    }

    /// Wraps `f`, rejecting negative or non-finite entries.
    pub fn from_values(grid: PhaseGrid, f: Vec<f64>) -> Result<Self> {
        if f.len() != grid.len() {
            return Err(Error::Mismatch(format!(
                "distribution has {} values, phase grid has {}",
                f.len(),
                grid.len()
            )));
        }
        for (index, &x) in f.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::NonFinite { index });
            }
            if x < 0.0 {
                return Err(Error::NegativeDensity { index, value: x });
            }
        }
        Ok(KineticState {
            grid,
            f,
            moments: None,
            epoch: 0,
        })
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.f
    }

    /// Monotone counter bumped on every mutation of `f`.
    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub(crate) fn set_epoch(&mut self, epoch: u64) {
        self.epoch = epoch;
    }

    /// Replaces the distribution and invalidates the cached moments.
    pub(crate) fn replace(&mut self, f: Vec<f64>) {
        debug_assert_eq!(f.len(), self.f.len());
        self.f = f;
        self.moments = None;
        self.epoch += 1;
    }

    pub fn is_zero(&self) -> bool {
        self.f.iter().all(|&x| x == 0.0)
    }

    pub fn max_value(&self) -> f64 {
        self.f.iter().copied().fold(0.0, f64::max)
    }

    pub fn cached_moments(&self) -> Option<&Moments> {
        self.moments.as_ref()
    }

    pub fn refresh_moments(&mut self) -> Result<&Moments> {
        if self.moments.is_none() {
            self.moments = Some(moments(&self.f, &self.grid)?);
        }
        Ok(self.moments.as_ref().expect("just filled"))
    }

    /// Moments, from the cache when valid.
    pub fn moments(&self) -> Result<Moments> {
        match &self.moments {
            Some(m) => Ok(m.clone()),
            None => moments(&self.f, &self.grid),
        }
    }
}

/// Fluid density and conservative momentum on the spatial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidState {
    grid: SpatialGrid,
    pub rho: Vec<f64>,
    /// Momentum ρu, interleaved by component.
    pub q: Vec<f64>,
}

impl FluidState {
    pub fn new(grid: SpatialGrid, rho: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        let n = grid.len();
        if rho.len() != n || q.len() != n * grid.dim() {
            return Err(Error::Mismatch(format!(
                "fluid fields have {} / {} values for {} cells",
                rho.len(),
                q.len(),
                n
            )));
        }
        for (index, &r) in rho.iter().enumerate() {
            if !r.is_finite() {
                return Err(Error::NonFinite { index });
            }
            if r < 0.0 {
                return Err(Error::NegativeDensity { index, value: r });
            }
        }
        if let Some(index) = q.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(FluidState { grid, rho, q })
    }

    /// Builds the state from a velocity field rather than momentum.
    pub fn from_velocity(grid: SpatialGrid, rho: Vec<f64>, u: &[f64]) -> Result<Self> {
        let d = grid.dim();
        let q = rho
            .iter()
            .enumerate()
            .flat_map(|(i, &r)| (0..d).map(move |k| (i, k, r)))
            .map(|(i, k, r)| r * u[i * d + k])
            .collect();
        FluidState::new(grid, rho, q)
    }

    pub fn vacuum(grid: SpatialGrid) -> Self {
        let n = grid.len();
        let d = grid.dim();
        FluidState {
            grid,
            rho: vec![0.0; n],
            q: vec![0.0; n * d],
        }
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    /// Velocity of cell `i`; zero in vacuum cells.
    #[inline]
    pub fn velocity_at(&self, i: usize) -> [f64; MAX_DIM] {
        let d = self.grid.dim();
        let mut u = [0.0; MAX_DIM];
        let r = self.rho[i];
        if r > EPS_VAC {
            for k in 0..d {
                u[k] = self.q[i * d + k] / r;
            }
        }
        u
    }

    /// Interleaved velocity field.
    pub fn velocity(&self) -> Vec<f64> {
        let d = self.grid.dim();
        let mut u = vec![0.0; self.q.len()];
        for i in 0..self.rho.len() {
            let ui = self.velocity_at(i);
            u[i * d..(i + 1) * d].copy_from_slice(&ui[..d]);
        }
        u
    }

    pub fn max_speed(&self) -> f64 {
        let d = self.grid.dim();
        (0..self.rho.len())
            .map(|i| super::grid::norm(&self.velocity_at(i), d))
            .fold(0.0, f64::max)
    }

    pub fn max_density(&self) -> f64 {
        self.rho.iter().copied().fold(0.0, f64::max)
    }

    pub fn is_vacuum(&self) -> bool {
        self.rho.iter().all(|&r| r <= EPS_VAC)
    }
}
