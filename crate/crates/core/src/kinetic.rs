//! Semi-Lagrangian transport of the particle distribution.
//!
//! Over one step the force b − (1+a)v + u is frozen at the arrival cell, so
//! the characteristic system is affine in v and is solved exactly. The
//! departure value is interpolated and multiplied by the phase-volume
//! factor exp(d (1+a) Δt).

use rayon::prelude::*;

use crate::alignment::AlignmentFields;
use crate::error::{Error, Result};
use crate::phase_space::{interpolate_zero_ext, norm, Boundary, KineticState, PhaseGrid, MAX_DIM};

/// Largest admissible (1+a)Δt in one backtrace.
pub const MAX_EXPONENT: f64 = 30.0;

/// Relative threshold (of max f) below which a cell counts as empty.
pub const SUPPORT_THRESHOLD: f64 = 1e-14;

/// Departure point and amplification of one backward characteristic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharTraceResult {
    pub x: [f64; MAX_DIM],
    pub v: [f64; MAX_DIM],
    /// exp(d (1+a) Δt) ≥ 1.
    pub amplification: f64,
}

/// Traces the frozen-coefficient characteristic through (x, v) back by Δt.
///
/// With λ = 1+a and c = (b+u)/λ the velocity relaxes towards c, so going
/// backwards v_b = c + (v−c)e^{λΔt} and x_b = x − cΔt − (v−c)(e^{λΔt}−1)/λ.
pub fn trace_back(
    x: &[f64],
    v: &[f64],
    a: f64,
    b: &[f64],
    u: &[f64],
    dt: f64,
) -> Result<CharTraceResult> {
    let d = x.len();
    if d == 0 || d > MAX_DIM || v.len() != d || b.len() != d || u.len() != d {
        return Err(Error::Argument("trace_back: inconsistent dimensions".into()));
    }
    if !(a >= 0.0) || !(dt >= 0.0) {
        return Err(Error::Argument(format!(
            "trace_back needs a >= 0 and dt >= 0 (a={a}, dt={dt})"
        )));
    }
    let lambda = 1.0 + a;
    let exponent = lambda * dt;
    if exponent > MAX_EXPONENT {
        return Err(Error::Timestep { exponent });
    }
    let grow = exponent.exp();
    let lag = exponent.exp_m1() / lambda;
    let mut out = CharTraceResult {
        x: [0.0; MAX_DIM],
        v: [0.0; MAX_DIM],
        amplification: (d as f64 * exponent).exp(),
    };
    for k in 0..d {
        let c = (b[k] + u[k]) / lambda;
        let rel = v[k] - c;
        out.v[k] = c + rel * grow;
        out.x[k] = x[k] - (c * dt + rel * lag);
    }
    Ok(out)
}

fn outside(grid: &PhaseGrid, x: &[f64; MAX_DIM], v: &[f64; MAX_DIM]) -> bool {
    let d = grid.dim();
    let clamped = grid.space().boundary() == Boundary::Clamped;
    (0..d).any(|k| {
        let va = grid.v_axis(k);
        let out_v = v[k] < va.lower || v[k] > va.upper;
        let xa = grid.space().axis(k);
        out_v || (clamped && (x[k] < xa.lower || x[k] > xa.upper))
    })
}

fn project_into_box(grid: &PhaseGrid, x: &mut [f64; MAX_DIM], v: &mut [f64; MAX_DIM]) {
    let clamped = grid.space().boundary() == Boundary::Clamped;
    for k in 0..grid.dim() {
        let va = grid.v_axis(k);
        v[k] = v[k].clamp(va.lower, va.upper);
        if clamped {
            let xa = grid.space().axis(k);
            x[k] = x[k].clamp(xa.lower, xa.upper);
        }
    }
}

/// One semi-Lagrangian step: f′(x,v) = J · f(x_b, v_b).
///
/// `u` is the interleaved fluid velocity on the spatial grid. Backtraces that
/// leave the phase box read zero, unless the distribution is non-negligible
/// at the box edge they leave through, which is a [`Error::SupportEscape`].
pub fn kinetic_step(kin: &KineticState, u: &[f64], af: &AlignmentFields, dt: f64) -> Result<KineticState> {
    if af.epoch != kin.epoch() {
        return Err(Error::StaleFields {
            fields: af.epoch,
            state: kin.epoch(),
        });
    }
    let grid = kin.grid();
    let d = grid.dim();
    let cells = grid.space().len();
    if u.len() != cells * d || af.a.len() != cells {
        return Err(Error::Mismatch("kinetic_step: field sizes do not match the grid".into()));
    }
    if !(dt >= 0.0) {
        return Err(Error::Argument(format!("dt must be >= 0, got {dt}")));
    }
    let f = kin.values();
    let nv = grid.nv_total();
    let threshold = SUPPORT_THRESHOLD * kin.max_value();
    let vcenters: Vec<[f64; MAX_DIM]> = (0..nv).map(|j| grid.v_center(j)).collect();

    let blocks: Vec<Vec<f64>> = (0..cells)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let x = grid.space().center(i);
            let a = af.a[i];
            let b = af.b_at(i);
            let ui = &u[i * d..(i + 1) * d];
            let mut block = vec![0.0; nv];
            for (j, v) in vcenters.iter().enumerate() {
                let tr = trace_back(&x[..d], &v[..d], a, b, ui, dt)?;
                let (mut xb, mut vb) = (tr.x, tr.v);
                block[j] = if outside(grid, &xb, &vb) {
                    project_into_box(grid, &mut xb, &mut vb);
                    if interpolate_zero_ext(f, grid, &xb, &vb) > threshold {
                        return Err(Error::SupportEscape {
                            x: tr.x[..d].to_vec(),
                            v: tr.v[..d].to_vec(),
                        });
                    }
                    0.0
                } else {
                    tr.amplification * interpolate_zero_ext(f, grid, &xb, &vb)
                };
            }
            Ok(block)
        })
        .collect::<Result<_>>()?;

    let mut next = kin.clone();
    next.replace(blocks.concat());
    Ok(next)
}

/// Largest |v| over cells whose value exceeds `threshold`
/// (default: 1e-14 · max f). Zero for an empty distribution.
pub fn support_radius(kin: &KineticState, threshold: Option<f64>) -> f64 {
    let grid = kin.grid();
    let d = grid.dim();
    let nv = grid.nv_total();
    let thr = threshold.unwrap_or(SUPPORT_THRESHOLD * kin.max_value());
    let speeds: Vec<f64> = (0..nv).map(|j| norm(&grid.v_center(j), d)).collect();
    kin.values()
        .iter()
        .enumerate()
        .filter(|(_, &val)| val > thr)
        .map(|(idx, _)| speeds[idx % nv])
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::{AlignmentOperator, Kernel};
    use crate::phase_space::SpatialGrid;

    #[test]
    fn zero_step_is_identity() {
        let r = trace_back(&[0.3, -1.0], &[1.5, 2.0], 0.7, &[0.1, 0.2], &[0.3, -0.4], 0.0).unwrap();
        assert_eq!(r.x[..2], [0.3, -1.0]);
        assert_eq!(r.v[..2], [1.5, 2.0]);
        assert_eq!(r.amplification, 1.0);
    }

    #[test]
    fn pure_friction_closed_form() {
        let (x, v, dt) = (0.4, 1.3, 0.25);
        let r = trace_back(&[x], &[v], 0.0, &[0.0], &[0.0], dt).unwrap();
        let e = dt.exp();
        assert!((r.v[0] - v * e).abs() < 1e-15);
        assert!((r.x[0] - (x - v * (e - 1.0))).abs() < 1e-15);
        assert!((r.amplification - e).abs() < 1e-15);
    }

    #[test]
    fn large_exponent_is_a_timestep_error() {
        assert!(matches!(
            trace_back(&[0.0], &[0.0], 9.0, &[0.0], &[0.0], 3.5),
            Err(Error::Timestep { .. })
        ));
        assert!(trace_back(&[0.0], &[0.0], -0.1, &[0.0], &[0.0], 0.1).is_err());
    }

    fn setup() -> (KineticState, AlignmentOperator) {
        let s = SpatialGrid::cube(1, 0.0, 1.0, 8, Boundary::Periodic).unwrap();
        let pg = PhaseGrid::cube(s.clone(), 2.0, 16).unwrap();
        (KineticState::zeros(pg), AlignmentOperator::new(&s, Kernel::default()))
    }

    #[test]
    fn zero_distribution_stays_zero() {
        let (mut kin, op) = setup();
        let af = op.fields_for(&mut kin).unwrap();
        let next = kinetic_step(&kin, &[0.3; 8], &af, 0.05).unwrap();
        assert!(next.is_zero());
        assert_eq!(support_radius(&next, None), 0.0);
    }

    #[test]
    fn support_at_box_edge_escapes() {
        let (kin0, op) = setup();
        let g = kin0.grid().clone();
        let mut f = vec![0.0; g.len()];
        for i in 0..8 {
            f[g.index(i, 15)] = 1.0;
        }
        let mut kin = KineticState::from_values(g, f).unwrap();
        let af = op.fields_for(&mut kin).unwrap();
        assert!(matches!(
            kinetic_step(&kin, &[0.0; 8], &af, 0.1),
            Err(Error::SupportEscape { .. })
        ));
    }

    #[test]
    fn support_radius_single_cell() {
        let (kin0, _) = setup();
        let g = kin0.grid().clone();
        let mut f = vec![0.0; g.len()];
        // v centres are -2 + (j + 1/2)/4; j = 14 gives 1.625
        f[g.index(3, 14)] = 1e-3;
        let kin = KineticState::from_values(g, f).unwrap();
        assert_eq!(support_radius(&kin, None), 1.625);
    }

    #[test]
    fn stale_fields_rejected() {
        let (mut kin, op) = setup();
        let af = op.fields_for(&mut kin).unwrap();
        let n = kin.grid().len();
        kin.replace(vec![0.0; n]);
        assert!(matches!(
            kinetic_step(&kin, &[0.0; 8], &af, 0.1),
            Err(Error::StaleFields { .. })
        ));
    }
}
