use rayon::prelude::*;

use super::grid::{strides_of, Boundary, PhaseGrid, SpatialGrid};
use crate::error::{Error, Result};

/// Second-order derivative along one axis of a row-major array.
///
/// Central differences in the interior; periodic axes wrap, other axes use
/// the one-sided second-order formula at the two ends.
pub fn axis_derivative(data: &[f64], shape: &[usize], axis: usize, h: f64, periodic: bool) -> Vec<f64> {
    let strides = strides_of(shape);
    let s = strides[axis];
    let n = shape[axis];
    let inv2h = 0.5 / h;
    (0..data.len())
        .into_par_iter()
        .map(|idx| {
            let i = (idx / s) % n;
            let base = idx - i * s;
            let at = |j: usize| data[base + j * s];
            if periodic {
                let ip = if i + 1 == n { 0 } else { i + 1 };
                let im = if i == 0 { n - 1 } else { i - 1 };
                (at(ip) - at(im)) * inv2h
            } else if i == 0 {
                (-3.0 * at(0) + 4.0 * at(1) - at(2)) * inv2h
            } else if i + 1 == n {
                (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) * inv2h
            } else {
                (at(i + 1) - at(i - 1)) * inv2h
            }
        })
        .collect()
}

fn check_finite(field: &[f64]) -> Result<()> {
    match field.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// Gradient of a scalar field on the spatial grid, interleaved by component.
pub fn grad_x(field: &[f64], grid: &SpatialGrid) -> Result<Vec<f64>> {
    if field.len() != grid.len() {
        return Err(Error::Mismatch(format!(
            "field has {} values, grid has {} cells",
            field.len(),
            grid.len()
        )));
    }
    check_finite(field)?;
    let d = grid.dim();
    let shape = grid.shape();
    let periodic = grid.boundary() == Boundary::Periodic;
    let parts: Vec<Vec<f64>> = (0..d)
        .map(|k| axis_derivative(field, &shape, k, grid.spacing(k), periodic))
        .collect();
    let mut out = vec![0.0; field.len() * d];
    for (k, part) in parts.iter().enumerate() {
        for (i, g) in part.iter().enumerate() {
            out[i * d + k] = *g;
        }
    }
    Ok(out)
}

fn phase_shape(grid: &PhaseGrid) -> Vec<usize> {
    let mut shape = grid.space().shape();
    shape.extend(grid.velocity_axes().iter().map(|a| a.cells));
    shape
}

/// Position-space gradient of a phase-space field, one array per axis.
pub fn phase_grad_x(f: &[f64], grid: &PhaseGrid) -> Result<Vec<Vec<f64>>> {
    if f.len() != grid.len() {
        return Err(Error::Mismatch("distribution does not match phase grid".into()));
    }
    check_finite(f)?;
    let shape = phase_shape(grid);
    let periodic = grid.space().boundary() == Boundary::Periodic;
    Ok((0..grid.dim())
        .map(|k| axis_derivative(f, &shape, k, grid.space().spacing(k), periodic))
        .collect())
}

/// Velocity-space gradient of a phase-space field, one array per axis.
pub fn phase_grad_v(f: &[f64], grid: &PhaseGrid) -> Result<Vec<Vec<f64>>> {
    if f.len() != grid.len() {
        return Err(Error::Mismatch("distribution does not match phase grid".into()));
    }
    check_finite(f)?;
    let d = grid.dim();
    let shape = phase_shape(grid);
    Ok((0..d)
        .map(|k| axis_derivative(f, &shape, d + k, grid.v_axis(k).spacing(), false))
        .collect())
}
