use super::grid::{Axis, Boundary, PhaseGrid, MAX_DIM};
use crate::error::{Error, Result};

/// Offsets this close to a node snap onto it, so nodal queries are exact.
const NODE_SNAP: f64 = 1e-14;

/// Two-point linear stencil along one axis; `None` marks a zero-extended ghost.
#[derive(Debug, Clone, Copy)]
pub(crate) struct AxisStencil {
    pub idx: [Option<usize>; 2],
    pub w: [f64; 2],
}

#[inline]
pub(crate) fn axis_stencil(axis: &Axis, p: f64, periodic: bool) -> AxisStencil {
    let s = (p - axis.lower) / axis.spacing() - 0.5;
    let mut i0 = s.floor();
    let mut w = s - i0;
    if w < NODE_SNAP {
        w = 0.0;
    } else if 1.0 - w < NODE_SNAP {
        i0 += 1.0;
        w = 0.0;
    }
    let i0 = i0 as isize;
    let n = axis.cells as isize;
    let resolve = |i: isize| {
        if periodic {
            Some(i.rem_euclid(n) as usize)
        } else if (0..n).contains(&i) {
            Some(i as usize)
        } else {
            None
        }
    };
    AxisStencil {
        idx: [resolve(i0), resolve(i0 + 1)],
        w: [1.0 - w, w],
    }
}

/// Multilinear interpolation with zero extension outside the velocity box
/// (and outside the spatial box when it is clamped). Never fails.
pub(crate) fn interpolate_zero_ext(f: &[f64], grid: &PhaseGrid, x: &[f64], v: &[f64]) -> f64 {
    let d = grid.dim();
    let periodic = grid.space().boundary() == Boundary::Periodic;
    let mut st = [AxisStencil {
        idx: [None, None],
        w: [0.0, 0.0],
    }; 2 * MAX_DIM];
    let mut strides = [0usize; 2 * MAX_DIM];
    let nv = grid.nv_total();
    for k in 0..d {
        st[k] = axis_stencil(grid.space().axis(k), x[k], periodic);
        strides[k] = grid.space().stride(k) * nv;
        st[d + k] = axis_stencil(grid.v_axis(k), v[k], false);
        strides[d + k] = grid.v_stride(k);
    }
    let dims = 2 * d;
    let mut acc = 0.0;
    'corner: for mask in 0..(1usize << dims) {
        let mut weight = 1.0;
        let mut flat = 0;
        for (axis, (s, stride)) in st[..dims].iter().zip(&strides).enumerate() {
            let bit = (mask >> axis) & 1;
            let w = s.w[bit];
            if w == 0.0 {
                continue 'corner;
            }
            match s.idx[bit] {
                Some(i) => flat += i * stride,
                None => continue 'corner,
            }
            weight *= w;
        }
        acc += weight * f[flat];
    }
    acc
}

/// Multilinear interpolation of `f` at the phase point `(x, v)`.
///
/// Points on non-periodic axes must lie inside the box; values between the
/// outermost cell centre and the box edge blend with a zero ghost cell.
pub fn interpolate(f: &[f64], grid: &PhaseGrid, x: &[f64], v: &[f64]) -> Result<f64> {
    let d = grid.dim();
    if x.len() < d || v.len() < d || f.len() != grid.len() {
        return Err(Error::Argument(format!(
            "interpolate: expected {d}-dimensional point and {} values",
            grid.len()
        )));
    }
    let escaped = |axis: &Axis, p: f64| !(axis.lower..=axis.upper).contains(&p);
    let clamped = grid.space().boundary() == Boundary::Clamped;
    let out_x = clamped && (0..d).any(|k| escaped(grid.space().axis(k), x[k]));
    let out_v = (0..d).any(|k| escaped(grid.v_axis(k), v[k]));
    if out_x || out_v || x[..d].iter().chain(&v[..d]).any(|p| !p.is_finite()) {
        return Err(Error::SupportEscape {
            x: x[..d].to_vec(),
            v: v[..d].to_vec(),
        });
    }
    Ok(interpolate_zero_ext(f, grid, x, v))
}
