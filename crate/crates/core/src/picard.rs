//! Linearize-and-iterate construction of the coupled solution on a short
//! window [0, T₀], with the difference functional between successive
//! iterates and the contraction table built from it.
//!
//! Iterate n+1 is produced from the velocity uⁿ of iterate n: the kinetic
//! equation is transported by uⁿ, the density is carried by uⁿ, and the
//! momentum equation is linear in u^{n+1} with the drag taken pointwise
//! implicit. Iterate 0 is the heat flow of u₀ with (f, ρ) frozen.

use crate::alignment::AlignmentOperator;
use crate::diagnostics::{velocity_jacobian, WeightParams};
use crate::driver::{advance, cfl_dt, Model, SimState};
use crate::error::{Error, Result};
use crate::fluid::{flux_divergence, pressure, viscous_and_pressure, FluidParams};
use crate::kinetic::kinetic_step;
use crate::phase_space::{pairwise_sum, FluidState, KineticState, PhaseGrid, SpatialGrid, EPS_VAC};

/// Default iteration cap.
pub const MAX_ITERATIONS: usize = 25;
/// Default stopping threshold on sup_t F.
pub const STOP_TOLERANCE: f64 = 1e-10;

/// Number of steps and the uniform step that covers [0, t0] with steps ≤ dt.
pub fn time_steps(t0: f64, dt: f64) -> Result<(usize, f64)> {
    if !(t0 > 0.0 && t0.is_finite()) || !(dt > 0.0) {
        return Err(Error::Argument(format!("need T0 > 0 and dt > 0 (T0={t0}, dt={dt})")));
    }
    let k = (t0 / dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    Ok((k, t0 / k as f64))
}

fn laplacian(grid: &SpatialGrid, u: &[f64]) -> Vec<f64> {
    let d = grid.dim();
    let mut out = vec![0.0; u.len()];
    for i in 0..grid.len() {
        for k in 0..d {
            let h2 = grid.spacing(k) * grid.spacing(k);
            let (ip, im) = (grid.neighbor(i, k, 1), grid.neighbor(i, k, -1));
            for c in 0..d {
                out[i * d + c] += (u[ip * d + c] - 2.0 * u[i * d + c] + u[im * d + c]) / h2;
            }
        }
    }
    out
}

/// Explicit heat flow u_t = Δu from u₀, sampled at every step of [0, t0].
///
/// Rejects Δt > Δx²/(2d), beyond which the explicit scheme amplifies.
pub fn heat_seed(u0: &[f64], grid: &SpatialGrid, t0: f64, dt: f64) -> Result<Vec<Vec<f64>>> {
    let d = grid.dim();
    if u0.len() != grid.len() * d {
        return Err(Error::Mismatch("heat_seed: u0 does not match the grid".into()));
    }
    let h = grid.min_spacing();
    let limit = h * h / (2.0 * d as f64);
    if dt > limit {
        return Err(Error::Argument(format!(
            "heat seed step {dt:e} exceeds the explicit stability limit dx^2/(2d) = {limit:e}"
        )));
    }
    let (steps, h_t) = time_steps(t0, dt)?;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(u0.to_vec());
    for _ in 0..steps {
        let prev = out.last().expect("non-empty");
        let lap = laplacian(grid, prev);
        let next = prev.iter().zip(&lap).map(|(a, l)| a + h_t * l).collect();
        out.push(next);
    }
    Ok(out)
}

/// Shared data of every iterate: initial state, parameters and time grid.
#[derive(Debug, Clone)]
pub struct PicardProblem {
    pub kin0: KineticState,
    pub fluid0: FluidState,
    pub params: FluidParams,
    pub op: AlignmentOperator,
    pub t0: f64,
    /// Uniform step; `steps * dt = t0`.
    pub dt: f64,
    pub steps: usize,
}

impl PicardProblem {
    /// Step = min(CFL step of the initial state, 0.9 Δx²/(2d)), shrunk to
    /// divide T₀ evenly.
    pub fn new(initial: &SimState, model: &Model, t0: f64) -> Result<Self> {
        let grid = initial.fluid.grid();
        let h = grid.min_spacing();
        let heat = 0.9 * h * h / (2.0 * grid.dim() as f64);
        let (cfl, _) = cfl_dt(initial, &model.params, &model.policy)?;
        let (steps, dt) = time_steps(t0, cfl.min(heat))?;
        Ok(PicardProblem {
            kin0: initial.kin.clone(),
            fluid0: initial.fluid.clone(),
            params: model.params,
            op: model.op.clone(),
            t0,
            dt,
            steps,
        })
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| k as f64 * self.dt).collect()
    }
}

/// One iterate sampled at every step of [0, T₀].
#[derive(Debug, Clone, PartialEq)]
pub struct PicardIterate {
    pub index: usize,
    pub grid: PhaseGrid,
    pub times: Vec<f64>,
    pub f: Vec<Vec<f64>>,
    pub rho: Vec<Vec<f64>>,
    /// Interleaved velocity per sample.
    pub u: Vec<Vec<f64>>,
}

impl PicardIterate {
    /// Iterate 0: heat-flow velocity, (f, ρ) held at the initial data.
    pub fn seed(problem: &PicardProblem) -> Result<Self> {
        let grid = problem.kin0.grid().clone();
        let u = heat_seed(&problem.fluid0.velocity(), grid.space(), problem.t0, problem.dt)?;
        let samples = u.len();
        Ok(PicardIterate {
            index: 0,
            times: problem.times(),
            f: vec![problem.kin0.values().to_vec(); samples],
            rho: vec![problem.fluid0.rho.clone(); samples],
            u,
            grid,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Builds iterate n+1 from iterate n.
pub fn picard_iterate(prev: &PicardIterate, problem: &PicardProblem) -> Result<PicardIterate> {
    if prev.len() != problem.steps + 1 || prev.grid != *problem.kin0.grid() {
        return Err(Error::Mismatch("previous iterate does not match the problem's grids".into()));
    }
    let grid = problem.kin0.grid().clone();
    let space = grid.space().clone();
    let d = space.dim();
    let h = problem.dt;
    let samples = problem.steps + 1;

    let mut kin = problem.kin0.clone();
    let mut rho = problem.fluid0.rho.clone();
    let mut u = problem.fluid0.velocity();
    let mut out = PicardIterate {
        index: prev.index + 1,
        grid: grid.clone(),
        times: problem.times(),
        f: Vec::with_capacity(samples),
        rho: Vec::with_capacity(samples),
        u: Vec::with_capacity(samples),
    };
    out.f.push(kin.values().to_vec());
    out.rho.push(rho.clone());
    out.u.push(u.clone());

    for k in 0..problem.steps {
        let u_prev = &prev.u[k];
        let af = problem.op.fields_for(&mut kin)?;
        let mut kin_next = kinetic_step(&kin, u_prev, &af, h)?;
        let m = kin_next.refresh_moments()?.clone();

        let q: Vec<f64> = (0..u.len()).map(|idx| rho[idx / d] * u[idx]).collect();
        let (div_rho, div_q) = flux_divergence(&space, &rho, &q, u_prev);
        let forces = viscous_and_pressure(&space, &u, &pressure(&rho, problem.params.gamma), &problem.params);
        let rho_next: Vec<f64> = rho.iter().zip(&div_rho).map(|(r, dr)| r + h * dr).collect();
        if let Some((cell, &value)) = rho_next.iter().enumerate().find(|(_, r)| !(**r >= 0.0)) {
            return Err(Error::CflViolation {
                cell,
                value,
                suggested_dt: 0.5 * h,
            });
        }
        let mut u_next = vec![0.0; u.len()];
        for i in 0..space.len() {
            if rho_next[i] <= EPS_VAC {
                continue;
            }
            let denom = rho_next[i] + h * m.n[i];
            for c in 0..d {
                let idx = i * d + c;
                let q_star = q[idx] + h * (div_q[idx] + forces[idx]);
                u_next[idx] = (q_star + h * m.m1[idx]) / denom;
            }
        }
        if let Some(index) = u_next.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        out.f.push(kin_next.values().to_vec());
        out.rho.push(rho_next.clone());
        out.u.push(u_next.clone());
        kin = kin_next;
        rho = rho_next;
        u = u_next;
    }
    Ok(out)
}

/// Difference functional between iterate n+1 (`a`) and iterate n (`b`),
/// per sample time.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffFunctional {
    pub times: Vec<f64>,
    /// |√ρ^{n+1} ū|²_{L²}
    pub momentum: Vec<f64>,
    /// |ρ̄|²_{L²}
    pub density_l2: Vec<f64>,
    /// |ρ̄|²_{L^{3/2}}
    pub density_l32: Vec<f64>,
    /// |f̄Λ|²_{L^{6/5}}
    pub kinetic_l65: Vec<f64>,
    /// |f̄(1+v²)^{1/2}|²_{L¹}
    pub kinetic_l1: Vec<f64>,
    /// Sum of the five components.
    pub total: Vec<f64>,
    /// Unweighted |ū|²_{L²}, reported alongside F.
    pub velocity_l2: Vec<f64>,
    /// ∫₀^{T₀} |∇ū|²_{L²} dt by the trapezoid rule.
    pub grad_integral: f64,
}

impl DiffFunctional {
    pub fn sup(&self) -> f64 {
        self.total.iter().copied().fold(0.0, f64::max)
    }

    pub fn sup_of(values: &[f64]) -> f64 {
        values.iter().copied().fold(0.0, f64::max)
    }
}

fn lp_sum(values: impl Iterator<Item = f64>, p: f64, vol: f64) -> f64 {
    let terms: Vec<f64> = values.map(|x| x.abs().powf(p)).collect();
    pairwise_sum(&terms) * vol
}

/// F^{n+1}(t) and ∫|∇ū|² between two iterates on the same grids and samples.
pub fn diff_functional(a: &PicardIterate, b: &PicardIterate, w: &WeightParams) -> Result<DiffFunctional> {
    if a.grid != b.grid || a.times != b.times || a.len() != b.f.len() || b.len() != b.u.len() {
        return Err(Error::Mismatch("iterates do not share grids and sample times".into()));
    }
    let grid = &a.grid;
    let space = grid.space();
    let d = grid.dim();
    let dx = space.cell_volume();
    let dxv = grid.cell_volume();
    let nv = grid.nv_total();
    let (lam, jap): (Vec<f64>, Vec<f64>) = (0..nv)
        .map(|j| {
            let v = grid.v_center(j);
            let v2: f64 = v[..d].iter().map(|x| x * x).sum();
            (w.lambda_weight(&v[..d]), (1.0 + v2).sqrt())
        })
        .unzip();

    let samples = a.len();
    let mut out = DiffFunctional {
        times: a.times.clone(),
        momentum: Vec::with_capacity(samples),
        density_l2: Vec::with_capacity(samples),
        density_l32: Vec::with_capacity(samples),
        kinetic_l65: Vec::with_capacity(samples),
        kinetic_l1: Vec::with_capacity(samples),
        total: Vec::with_capacity(samples),
        velocity_l2: Vec::with_capacity(samples),
        grad_integral: 0.0,
    };
    let mut grad_sq = Vec::with_capacity(samples);
    for s in 0..samples {
        let ubar: Vec<f64> = a.u[s].iter().zip(&b.u[s]).map(|(x, y)| x - y).collect();
        let rbar: Vec<f64> = a.rho[s].iter().zip(&b.rho[s]).map(|(x, y)| x - y).collect();
        let fbar: Vec<f64> = a.f[s].iter().zip(&b.f[s]).map(|(x, y)| x - y).collect();

        let mom: Vec<f64> = (0..space.len())
            .map(|i| a.rho[s][i] * ubar[i * d..(i + 1) * d].iter().map(|x| x * x).sum::<f64>())
            .collect();
        let momentum = pairwise_sum(&mom) * dx;
        let density_l2 = lp_sum(rbar.iter().copied(), 2.0, dx);
        let density_l32 = lp_sum(rbar.iter().copied(), 1.5, dx).powf(4.0 / 3.0);
        let kinetic_l65 = lp_sum(fbar.iter().enumerate().map(|(i, x)| x * lam[i % nv]), 1.2, dxv).powf(5.0 / 3.0);
        let kinetic_l1 = lp_sum(fbar.iter().enumerate().map(|(i, x)| x * jap[i % nv]), 1.0, dxv).powi(2);
        let velocity_l2 = lp_sum(ubar.iter().copied(), 2.0, dx);
        let jac = velocity_jacobian(&ubar, space)?;
        grad_sq.push(lp_sum(jac.into_iter(), 2.0, dx));

        out.total.push(momentum + density_l2 + density_l32 + kinetic_l65 + kinetic_l1);
        out.momentum.push(momentum);
        out.density_l2.push(density_l2);
        out.density_l32.push(density_l32);
        out.kinetic_l65.push(kinetic_l65);
        out.kinetic_l1.push(kinetic_l1);
        out.velocity_l2.push(velocity_l2);
    }
    out.grad_integral = (1..samples)
        .map(|s| 0.5 * (out.times[s] - out.times[s - 1]) * (grad_sq[s] + grad_sq[s - 1]))
        .sum();
    Ok(out)
}

/// One line of the contraction table: F^n and the ratio r_n built from
/// F^{n+1} and ∫|∇ūⁿ|².
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionRow {
    pub n: usize,
    pub sup_f: f64,
    pub grad_integral: f64,
    /// [sup F^{n+1} + μ∫|∇ū^{n+1}|²] / [μ∫|∇ūⁿ|²]; `None` for the last row.
    pub ratio: Option<f64>,
    /// Both sides of the ratio vanished.
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    pub rows: Vec<ContractionRow>,
    /// exp of the least-squares slope of ln sup Fⁿ against n.
    pub fitted_rate: Option<f64>,
    /// Some ratio is ≥ 1.
    pub non_contracting: bool,
}

/// Contraction table from the functionals F¹, F², … in order.
pub fn contraction_table(functionals: &[DiffFunctional], mu: f64) -> ContractionReport {
    let mut rows: Vec<ContractionRow> = functionals
        .iter()
        .enumerate()
        .map(|(i, fun)| ContractionRow {
            n: i + 1,
            sup_f: fun.sup(),
            grad_integral: fun.grad_integral,
            ratio: None,
            converged: false,
        })
        .collect();
    for i in 0..rows.len().saturating_sub(1) {
        let num = rows[i + 1].sup_f + mu * rows[i + 1].grad_integral;
        let den = mu * rows[i].grad_integral;
        let (ratio, converged) = match (num == 0.0, den == 0.0) {
            (true, true) => (0.0, true),
            (false, true) => (f64::INFINITY, false),
            _ => (num / den, false),
        };
        rows[i].ratio = Some(ratio);
        rows[i].converged = converged;
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.sup_f > 0.0)
        .map(|r| (r.n as f64, r.sup_f.ln()))
        .collect();
    let fitted_rate = (pts.len() >= 2).then(|| {
        let m = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        (sxy / sxx).exp()
    });
    let non_contracting = rows.iter().any(|r| r.ratio.is_some_and(|x| x >= 1.0));
    ContractionReport {
        rows,
        fitted_rate,
        non_contracting,
    }
}

/// Contraction table over a list of consecutive iterates.
pub fn contraction_report(iterates: &[PicardIterate], w: &WeightParams, mu: f64) -> Result<ContractionReport> {
    let funs = iterates
        .windows(2)
        .map(|p| diff_functional(&p[1], &p[0], w))
        .collect::<Result<Vec<_>>>()?;
    Ok(contraction_table(&funs, mu))
}

/// Why the iteration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct PicardStudy {
    /// F¹, F², … between consecutive iterates.
    pub functionals: Vec<DiffFunctional>,
    pub report: ContractionReport,
    pub last: PicardIterate,
    pub stop: StopReason,
}

/// Iterates until sup_t F < `tol` or `max_iter` iterates past the seed.
pub fn picard_study(problem: &PicardProblem, w: &WeightParams, max_iter: usize, tol: f64) -> Result<PicardStudy> {
    let mut prev = PicardIterate::seed(problem)?;
    let mut functionals = Vec::new();
    let mut stop = StopReason::MaxIterations;
    for _ in 0..max_iter {
        let next = picard_iterate(&prev, problem)?;
        let fun = diff_functional(&next, &prev, w)?;
        let done = fun.sup() < tol;
        functionals.push(fun);
        prev = next;
        if done {
            stop = StopReason::Converged;
            break;
        }
    }
    let report = contraction_table(&functionals, problem.params.mu);
    Ok(PicardStudy {
        functionals,
        report,
        last: prev,
        stop,
    })
}

/// Coupled driver run over the same time grid as the problem.
pub fn coupled_reference(problem: &PicardProblem, model: &Model) -> Result<SimState> {
    let mut s = SimState::new(problem.kin0.clone(), problem.fluid0.clone(), &model.op)?;
    for _ in 0..problem.steps {
        s = advance(&s, model, problem.dt)?;
    }
    Ok(s)
}

/// Relative discrete L¹ gaps between the final sample of an iterate and a
/// coupled state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitDiscrepancy {
    pub f: f64,
    pub rho: f64,
    pub u: f64,
}

impl LimitDiscrepancy {
    pub fn max(&self) -> f64 {
        self.f.max(self.rho).max(self.u)
    }
}

fn rel_l1(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect();
    let base: Vec<f64> = b.iter().map(|x| x.abs()).collect();
    let (num, den) = (pairwise_sum(&diff), pairwise_sum(&base));
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

pub fn limit_discrepancy(it: &PicardIterate, s: &SimState) -> Result<LimitDiscrepancy> {
    let k = it.len() - 1;
    if it.f[k].len() != s.kin.values().len() || it.rho[k].len() != s.fluid.rho.len() {
        return Err(Error::Mismatch("iterate and state grids differ".into()));
    }
    Ok(LimitDiscrepancy {
        f: rel_l1(&it.f[k], s.kin.values()),
        rho: rel_l1(&it.rho[k], &s.fluid.rho),
        u: rel_l1(&it.u[k], &s.fluid.velocity()),
    })
}
