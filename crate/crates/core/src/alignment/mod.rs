//! The interaction kernel, the nonlocal fields a = φ∗n and b = φ∗m₁, the
//! alignment operator L[f](x, v) = b(x) − a(x) v, and the quadratic
//! alignment dissipation.
//!
//! All nonlocal quantities are evaluated by direct summation over the
//! spatial grid; the kernel only depends on the cell offset, so it is
//! tabulated once per grid.

mod kernel;

use rayon::prelude::*;

pub use kernel::{eval_kernel, Kernel, KernelViolation, SMOOTH_KERNEL_SLOPE_MAX};

use crate::error::{Error, Result};
use crate::phase_space::{pairwise_sum, Boundary, KineticState, Moments, SpatialGrid, MAX_DIM};

/// Tabulated φ(dist(x_i, x_j)) · ΔV for every cell offset.
///
/// Periodic grids use minimum-image distances and offsets modulo N; clamped
/// grids use signed offsets shifted by N − 1.
#[derive(Debug, Clone)]
pub struct ConvolutionPlan {
    grid: SpatialGrid,
    table: Vec<f64>,
    table_strides: [usize; MAX_DIM],
}

impl ConvolutionPlan {
    pub fn new(grid: &SpatialGrid, kernel: &Kernel) -> Self {
        let d = grid.dim();
        let periodic = grid.boundary() == Boundary::Periodic;
        let extent: Vec<usize> = (0..d)
            .map(|k| {
                let n = grid.axis(k).cells;
                if periodic {
                    n
                } else {
                    2 * n - 1
                }
            })
            .collect();
        let mut table_strides = [0; MAX_DIM];
        let mut s = 1;
        for k in (0..d).rev() {
            table_strides[k] = s;
            s *= extent[k];
        }
        let vol = grid.cell_volume();
        let table = (0..s)
            .map(|t| {
                let mut rem = t;
                let mut r2 = 0.0;
                for k in 0..d {
                    let o = rem / table_strides[k];
                    rem %= table_strides[k];
                    let n = grid.axis(k).cells;
                    let cells = if periodic {
                        o.min(n - o)
                    } else {
                        (o as isize - (n as isize - 1)).unsigned_abs()
                    };
                    let dx = cells as f64 * grid.spacing(k);
                    r2 += dx * dx;
                }
                kernel.value(r2.sqrt()) * vol
            })
            .collect();
        ConvolutionPlan {
            grid: grid.clone(),
            table,
            table_strides,
        }
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    #[inline]
    fn weight(&self, i: &[usize; MAX_DIM], j: &[usize; MAX_DIM]) -> f64 {
        let d = self.grid.dim();
        let periodic = self.grid.boundary() == Boundary::Periodic;
        let mut t = 0;
        for k in 0..d {
            let n = self.grid.axis(k).cells;
            let o = if periodic {
                (i[k] + n - j[k]) % n
            } else {
                i[k] + n - 1 - j[k]
            };
            t += o * self.table_strides[k];
        }
        self.table[t]
    }

    /// (φ∗g)(x_i) = Σ_j φ(|x_i − x_j|) g_j ΔV for `comps` interleaved components.
    pub fn convolve(&self, input: &[f64], comps: usize) -> Vec<f64> {
        let cells = self.grid.len();
        debug_assert_eq!(input.len(), cells * comps);
        let multi: Vec<[usize; MAX_DIM]> = (0..cells).map(|j| self.grid.unravel(j)).collect();
        let rows: Vec<[f64; MAX_DIM]> = (0..cells)
            .into_par_iter()
            .map(|i| {
                let mi = &multi[i];
                let mut acc = [0.0; MAX_DIM];
                for (j, mj) in multi.iter().enumerate() {
                    let w = self.weight(mi, mj);
                    for c in 0..comps {
                        acc[c] += w * input[j * comps + c];
                    }
                }
                acc
            })
            .collect();
        let mut out = vec![0.0; cells * comps];
        for (i, row) in rows.iter().enumerate() {
            out[i * comps..(i + 1) * comps].copy_from_slice(&row[..comps]);
        }
        out
    }
}

/// a(x) = φ∗n and b(x) = φ∗m₁ for one kinetic state.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentFields {
    pub dim: usize,
    pub a: Vec<f64>,
    /// Interleaved by component.
    pub b: Vec<f64>,
    /// Epoch of the kinetic state the fields were built from.
    pub epoch: u64,
}

impl AlignmentFields {
    pub fn zeros(dim: usize, cells: usize, epoch: u64) -> Self {
        AlignmentFields {
            dim,
            a: vec![0.0; cells],
            b: vec![0.0; cells * dim],
            epoch,
        }
    }

    #[inline]
    pub fn b_at(&self, i: usize) -> &[f64] {
        &self.b[i * self.dim..(i + 1) * self.dim]
    }

    pub fn max_a(&self) -> f64 {
        self.a.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_b(&self) -> f64 {
        self.b
            .chunks(self.dim)
            .map(|b| b.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// L[f](x_i, v) = b(x_i) − a(x_i) v, refusing fields built from another state.
    pub fn eval_l(&self, kin: &KineticState, cell: usize, v: &[f64]) -> Result<[f64; MAX_DIM]> {
        if self.epoch != kin.epoch() {
            return Err(Error::StaleFields {
                fields: self.epoch,
                state: kin.epoch(),
            });
        }
        if cell >= self.a.len() || v.len() < self.dim {
            return Err(Error::Argument(format!("eval_l: bad cell {cell} or velocity")));
        }
        let mut out = [0.0; MAX_DIM];
        let b = self.b_at(cell);
        for k in 0..self.dim {
            out[k] = b[k] - self.a[cell] * v[k];
        }
        Ok(out)
    }
}

fn check_density(n: &[f64]) -> Result<()> {
    for (index, &x) in n.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::NonFinite { index });
        }
        if x < 0.0 {
            return Err(Error::NegativeDensity { index, value: x });
        }
    }
    Ok(())
}

/// Kernel plus its tabulated convolution on one grid.
#[derive(Debug, Clone)]
pub struct AlignmentOperator {
    kernel: Kernel,
    plan: ConvolutionPlan,
}

impl AlignmentOperator {
    pub fn new(grid: &SpatialGrid, kernel: Kernel) -> Self {
        let plan = ConvolutionPlan::new(grid, &kernel);
        AlignmentOperator { kernel, plan }
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn plan(&self) -> &ConvolutionPlan {
        &self.plan
    }

    pub fn fields(&self, n: &[f64], m1: &[f64], epoch: u64) -> Result<AlignmentFields> {
        let cells = self.plan.grid.len();
        let d = self.plan.grid.dim();
        if n.len() != cells || m1.len() != cells * d {
            return Err(Error::Mismatch("moments do not match the spatial grid".into()));
        }
        check_density(n)?;
        Ok(AlignmentFields {
            dim: d,
            a: self.plan.convolve(n, 1),
            b: self.plan.convolve(m1, d),
            epoch,
        })
    }

    /// Fields for the current state of `kin`, refreshing its moment cache.
    pub fn fields_for(&self, kin: &mut KineticState) -> Result<AlignmentFields> {
        let epoch = kin.epoch();
        let m = kin.refresh_moments()?;
        self.fields(&m.n, &m.m1, epoch)
    }

    /// ½ ∬∬ φ(|x−y|) f(x,v) f(y,w) |v−w|², reduced to moment convolutions.
    pub fn dissipation(&self, m: &Moments) -> Result<f64> {
        let cells = self.plan.grid.len();
        let d = self.plan.grid.dim();
        if m.n.len() != cells || m.dim != d {
            return Err(Error::Mismatch("moments do not match the spatial grid".into()));
        }
        check_density(&m.n)?;
        let phi_n = self.plan.convolve(&m.n, 1);
        let phi_m2 = self.plan.convolve(&m.m2, 1);
        let phi_m1 = self.plan.convolve(&m.m1, d);
        let vol = self.plan.grid.cell_volume();
        let t1: Vec<f64> = m.n.iter().zip(&phi_m2).map(|(a, b)| a * b).collect();
        let t2: Vec<f64> = m.m2.iter().zip(&phi_n).map(|(a, b)| a * b).collect();
        let t3: Vec<f64> = m.m1.iter().zip(&phi_m1).map(|(a, b)| a * b).collect();
        Ok(0.5 * (pairwise_sum(&t1) + pairwise_sum(&t2) - 2.0 * pairwise_sum(&t3)) * vol)
    }
}

/// a = φ∗n, b = φ∗m₁ on `grid` (epoch 0).
pub fn alignment_fields(n: &[f64], m1: &[f64], grid: &SpatialGrid, kernel: &Kernel) -> Result<AlignmentFields> {
    AlignmentOperator::new(grid, kernel.clone()).fields(n, m1, 0)
}

/// Free-function form of [`AlignmentFields::eval_l`].
pub fn eval_l(af: &AlignmentFields, kin: &KineticState, cell: usize, v: &[f64]) -> Result<[f64; MAX_DIM]> {
    af.eval_l(kin, cell, v)
}

/// Quadratic alignment dissipation of the distribution whose moments are `m`.
pub fn alignment_dissipation(m: &Moments, grid: &SpatialGrid, kernel: &Kernel) -> Result<f64> {
    AlignmentOperator::new(grid, kernel.clone()).dissipation(m)
}
