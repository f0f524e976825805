//! Isentropic compressible Navier–Stokes with the kinetic drag source.
//!
//! Conservative variables (ρ, q = ρu) live at cell centres. Mass and
//! convective momentum fluxes are first-order upwind with face velocities
//! ½(u_i + u_{i+1}); pressure and viscous terms are second-order central.
//! Each step is two explicit Euler stages combined Heun-style.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::phase_space::{Boundary, FluidState, Moments, SpatialGrid, EPS_VAC, MAX_DIM};

/// Viscosities and adiabatic exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluidParams {
    pub mu: f64,
    pub lambda: f64,
    pub gamma: f64,
}

impl FluidParams {
    /// Checks μ > 0, 2μ + dλ ≥ 0 and γ > 1.
    pub fn new(mu: f64, lambda: f64, gamma: f64, dim: usize) -> Result<Self> {
        let p = FluidParams { mu, lambda, gamma };
        p.validate(dim)?;
        Ok(p)
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::Argument(format!("mu must be > 0, got {}", self.mu)));
        }
        if !(2.0 * self.mu + dim as f64 * self.lambda >= 0.0) {
            return Err(Error::Argument(format!(
                "2*mu + {dim}*lambda must be >= 0 (mu={}, lambda={})",
                self.mu, self.lambda
            )));
        }
        if !(self.gamma > 1.0 && self.gamma.is_finite()) {
            return Err(Error::Argument(format!("gamma must be > 1, got {}", self.gamma)));
        }
        Ok(())
    }
}

/// P = ρ^γ per cell.
pub fn pressure(rho: &[f64], gamma: f64) -> Vec<f64> {
    rho.iter().map(|&r| if r > 0.0 { r.powf(gamma) } else { 0.0 }).collect()
}

/// ∫ f (v − u) dv = m₁ − n u per cell, interleaved.
pub fn drag_source(m: &Moments, u: &[f64]) -> Vec<f64> {
    let d = m.dim;
    (0..m.m1.len())
        .map(|idx| m.m1[idx] - m.n[idx / d] * u[idx])
        .collect()
}

#[inline]
fn axis_index(grid: &SpatialGrid, idx: usize, k: usize) -> usize {
    (idx / grid.stride(k)) % grid.axis(k).cells
}

/// Time derivative of (ρ, q), with velocity zeroed in vacuum.
pub(crate) struct Rates {
    pub rho: Vec<f64>,
    pub q: Vec<f64>,
}

/// Upwind face fluxes through the upper face of every cell along axis `k`.
/// Walls (clamped upper edge) carry no flux.
fn face_fluxes(grid: &SpatialGrid, rho: &[f64], q: &[f64], u: &[f64], k: usize) -> (Vec<f64>, Vec<f64>) {
    let d = grid.dim();
    let cells = grid.len();
    let per_cell: Vec<(f64, [f64; MAX_DIM])> = (0..cells)
        .into_par_iter()
        .map(|i| {
            if grid.is_upper_wall(i, k) {
                return (0.0, [0.0; MAX_DIM]);
            }
            let ip = grid.neighbor(i, k, 1);
            let uf = 0.5 * (u[i * d + k] + u[ip * d + k]);
            let src = if uf >= 0.0 { i } else { ip };
            let mut fq = [0.0; MAX_DIM];
            for m in 0..d {
                fq[m] = uf * q[src * d + m];
            }
            (uf * rho[src], fq)
        })
        .collect();
    let mut f_rho = vec![0.0; cells];
    let mut f_q = vec![0.0; cells * d];
    for (i, (fr, fq)) in per_cell.into_iter().enumerate() {
        f_rho[i] = fr;
        f_q[i * d..(i + 1) * d].copy_from_slice(&fq[..d]);
    }
    (f_rho, f_q)
}

pub(crate) fn velocity_of(grid: &SpatialGrid, rho: &[f64], q: &[f64]) -> Vec<f64> {
    let d = grid.dim();
    let mut u = vec![0.0; q.len()];
    for (i, &r) in rho.iter().enumerate() {
        if r > EPS_VAC {
            for k in 0..d {
                u[i * d + k] = q[i * d + k] / r;
            }
        }
    }
    u
}

/// Pressure gradient and viscous force μΔu + (μ+λ)∇∇·u, interleaved.
pub(crate) fn viscous_and_pressure(grid: &SpatialGrid, u: &[f64], p_field: &[f64], params: &FluidParams) -> Vec<f64> {
    let d = grid.dim();
    let cells = grid.len();
    let bulk = params.mu + params.lambda;
    let per_cell: Vec<[f64; MAX_DIM]> = (0..cells)
        .into_par_iter()
        .map(|i| {
            let mut out = [0.0; MAX_DIM];
            for m in 0..d {
                let hm = grid.spacing(m);
                let ip = grid.neighbor(i, m, 1);
                let im = grid.neighbor(i, m, -1);
                // −∂_m P
                out[m] -= (p_field[ip] - p_field[im]) / (2.0 * hm);
                // μ Δ u_c, contribution of axis m to every component c
                for c in 0..d {
                    out[c] += params.mu * (u[ip * d + c] - 2.0 * u[i * d + c] + u[im * d + c]) / (hm * hm);
                }
                // (μ+λ) ∂_m ∂_k u_k
                for k in 0..d {
                    let term = if k == m {
                        (u[ip * d + m] - 2.0 * u[i * d + m] + u[im * d + m]) / (hm * hm)
                    } else {
                        let hk = grid.spacing(k);
                        let pp = grid.neighbor(ip, k, 1);
                        let pm = grid.neighbor(ip, k, -1);
                        let mp = grid.neighbor(im, k, 1);
                        let mm = grid.neighbor(im, k, -1);
                        (u[pp * d + k] - u[pm * d + k] - u[mp * d + k] + u[mm * d + k]) / (4.0 * hm * hk)
                    };
                    out[m] += bulk * term;
                }
            }
            out
        })
        .collect();
    let mut flat = vec![0.0; cells * d];
    for (i, row) in per_cell.iter().enumerate() {
        flat[i * d..(i + 1) * d].copy_from_slice(&row[..d]);
    }
    flat
}

/// −∇·(ρ u_face, q u_face) with upwind face fluxes driven by `u`.
pub(crate) fn flux_divergence(grid: &SpatialGrid, rho: &[f64], q: &[f64], u: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let d = grid.dim();
    let cells = grid.len();
    let mut r_rho = vec![0.0; cells];
    let mut r_q = vec![0.0; cells * d];
    for k in 0..d {
        let h = grid.spacing(k);
        let (f_rho, f_q) = face_fluxes(grid, rho, q, u, k);
        for i in 0..cells {
            let lower_wall = grid.boundary() == Boundary::Clamped && axis_index(grid, i, k) == 0;
            let im = grid.neighbor(i, k, -1);
            let (lo_r, lo_q) = if lower_wall {
                (0.0, None)
            } else {
                (f_rho[im], Some(im))
            };
            r_rho[i] -= (f_rho[i] - lo_r) / h;
            for m in 0..d {
                let lo = lo_q.map_or(0.0, |j| f_q[j * d + m]);
                r_q[i * d + m] -= (f_q[i * d + m] - lo) / h;
            }
        }
    }
    (r_rho, r_q)
}

/// Right-hand side of the conservative system at (ρ, q).
pub(crate) fn rates(grid: &SpatialGrid, rho: &[f64], q: &[f64], drag: &[f64], params: &FluidParams) -> Rates {
    let d = grid.dim();
    let u = velocity_of(grid, rho, q);
    let p_field = pressure(rho, params.gamma);
    let forces = viscous_and_pressure(grid, &u, &p_field, params);
    let (r_rho, mut r_q) = flux_divergence(grid, rho, q, &u);
    for (r, f) in r_q.iter_mut().zip(&forces) {
        *r += f;
    }
    for i in 0..rho.len() {
        if rho[i] > EPS_VAC {
            for m in 0..d {
                r_q[i * d + m] += drag[i * d + m];
            }
        }
    }
    Rates { rho: r_rho, q: r_q }
}

fn first_negative(rho: &[f64]) -> Option<(usize, f64)> {
    rho.iter()
        .enumerate()
        .find(|(_, &r)| r < 0.0 || !r.is_finite())
        .map(|(i, &r)| (i, r))
}

fn euler(grid: &SpatialGrid, rho: &[f64], q: &[f64], drag: &[f64], params: &FluidParams, dt: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let r = rates(grid, rho, q, drag, params);
    let rho_next: Vec<f64> = rho.iter().zip(&r.rho).map(|(a, b)| a + dt * b).collect();
    let q_next: Vec<f64> = q.iter().zip(&r.q).map(|(a, b)| a + dt * b).collect();
    if let Some((cell, value)) = first_negative(&rho_next) {
        return Err(Error::CflViolation {
            cell,
            value,
            suggested_dt: 0.5 * dt,
        });
    }
    if let Some(index) = q_next.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    Ok((rho_next, q_next))
}

fn clear_vacuum_momentum(d: usize, rho: &[f64], q: &mut [f64]) {
    for (i, &r) in rho.iter().enumerate() {
        if r <= EPS_VAC {
            q[i * d..(i + 1) * d].fill(0.0);
        }
    }
}

/// Advances (ρ, q) by Δt with a fixed drag source (interleaved, per cell).
///
/// Momentum in cells that end up at vacuum density is discarded.
pub fn fluid_step(fl: &FluidState, drag: &[f64], params: &FluidParams, dt: f64) -> Result<FluidState> {
    let grid = fl.grid();
    let d = grid.dim();
    if drag.len() != fl.q.len() {
        return Err(Error::Mismatch("drag field does not match the fluid grid".into()));
    }
    if !(dt >= 0.0) {
        return Err(Error::Argument(format!("dt must be >= 0, got {dt}")));
    }
    let (rho1, q1) = euler(grid, &fl.rho, &fl.q, drag, params, dt)?;
    let (rho2, q2) = euler(grid, &rho1, &q1, drag, params, dt)?;
    let rho: Vec<f64> = fl.rho.iter().zip(&rho2).map(|(a, b)| 0.5 * (a + b)).collect();
    let mut q: Vec<f64> = fl.q.iter().zip(&q2).map(|(a, b)| 0.5 * (a + b)).collect();
    clear_vacuum_momentum(d, &rho, &mut q);
    Ok(FluidState::new(grid.clone(), rho, q)?)
}
