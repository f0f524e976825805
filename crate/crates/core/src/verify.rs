//! Invariant checks on small grids, run by the `verify` subcommand with the
//! physical parameters and kernel of a configuration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::alignment::{AlignmentOperator, Kernel};
use crate::driver::{advance, cfl_dt, CflPolicy, Model, SimState};
use crate::error::Result;
use crate::fluid::{drag_source, fluid_step, FluidParams};
use crate::io::config::SimConfig;
use crate::io::output::{read_snapshot, write_snapshot};
use crate::kinetic::{kinetic_step, trace_back};
use crate::phase_space::{moments, Boundary, FluidState, KineticState, PhaseGrid, SpatialGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for CheckResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}: {}", self.name, self.detail)
    }
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name, passed, detail }
}

fn rk4_back(x: f64, v: f64, a: f64, c: f64, dt: f64) -> (f64, f64) {
    let lam = 1.0 + a;
    let rhs = |_x: f64, v: f64| (-v, -(c - lam * v));
    let h = dt / 64.0;
    let (mut x, mut v) = (x, v);
    for _ in 0..64 {
        let k1 = rhs(x, v);
        let k2 = rhs(x + 0.5 * h * k1.0, v + 0.5 * h * k1.1);
        let k3 = rhs(x + 0.5 * h * k2.0, v + 0.5 * h * k2.1);
        let k4 = rhs(x + h * k3.0, v + h * k3.1);
        x += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        v += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    (x, v)
}

fn characteristic_check(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (x, v) = (rng.gen_range(-1.0..1.0), rng.gen_range(-3.0..3.0));
        let (a, b, u) = (rng.gen_range(0.0..2.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let dt = rng.gen_range(0.0..0.2);
        let tr = trace_back(&[x], &[v], a, &[b], &[u], dt)?;
        let (xo, vo) = rk4_back(x, v, a, b + u, dt);
        worst = worst
            .max((tr.x[0] - xo).abs() / xo.abs().max(1.0))
            .max((tr.v[0] - vo).abs() / vo.abs().max(1.0));
    }
    Ok(check("characteristic_vs_rk4", worst < 1e-10, format!("max rel err {worst:.2e}")))
}

fn random_kinetic(grid: &PhaseGrid, rng: &mut ChaCha8Rng) -> Result<KineticState> {
    let f = (0..grid.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
    KineticState::from_values(grid.clone(), f)
}

fn operator_checks(kernel: &Kernel, rng: &mut ChaCha8Rng) -> Result<Vec<CheckResult>> {
    let space = SpatialGrid::cube(1, 0.0, 1.0, 6, Boundary::Periodic)?;
    let grid = PhaseGrid::cube(space.clone(), 1.0, 6)?;
    let mut kin = random_kinetic(&grid, rng)?;
    let op = AlignmentOperator::new(&space, kernel.clone());
    let af = op.fields_for(&mut kin)?;
    let f = kin.values();
    let nv = grid.nv_total();
    let dv = grid.v_cell_volume();
    let dx = space.cell_volume();

    let mut worst_l = 0.0f64;
    for i in 0..space.len() {
        for j in 0..nv {
            let v = grid.v_center(j)[0];
            let mut brute = 0.0;
            for y in 0..space.len() {
                let mut r = (space.center(i)[0] - space.center(y)[0]).abs();
                r = r.min(1.0 - r);
                let phi = kernel.eval(r)?;
                for s in 0..nv {
                    brute += phi * f[y * nv + s] * (grid.v_center(s)[0] - v) * dx * dv;
                }
            }
            let l = af.eval_l(&kin, i, &[v])?[0];
            worst_l = worst_l.max((l - brute).abs() / brute.abs().max(1.0));
        }
    }

    let mut brute_d = 0.0;
    for i in 0..space.len() {
        for y in 0..space.len() {
            let mut r = (space.center(i)[0] - space.center(y)[0]).abs();
            r = r.min(1.0 - r);
            let phi = kernel.eval(r)?;
            for j in 0..nv {
                for s in 0..nv {
                    let dvv = grid.v_center(j)[0] - grid.v_center(s)[0];
                    brute_d += 0.5 * phi * f[i * nv + j] * f[y * nv + s] * dvv * dvv * dx * dx * dv * dv;
                }
            }
        }
    }
    let m = moments(f, &grid)?;
    let diss = op.dissipation(&m)?;
    let rel_d = (diss - brute_d).abs() / brute_d.abs().max(1e-300);

    let u: Vec<f64> = (0..space.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let drag = drag_source(&m, &u);
    let mut worst_drag = 0.0f64;
    for i in 0..space.len() {
        let q: f64 = (0..nv).map(|j| f[i * nv + j] * (grid.v_center(j)[0] - u[i]) * dv).sum();
        worst_drag = worst_drag.max((drag[i] - q).abs() / q.abs().max(1.0));
    }
    Ok(vec![
        check("alignment_force_vs_brute_force", worst_l < 1e-10, format!("max rel err {worst_l:.2e}")),
        check("alignment_dissipation_vs_brute_force", rel_d < 1e-10, format!("rel err {rel_d:.2e}")),
        check("drag_vs_quadrature", worst_drag < 1e-13, format!("max rel err {worst_drag:.2e}")),
    ])
}

fn small_scenario(c: &SimConfig, params: &FluidParams, rng: &mut ChaCha8Rng) -> Result<(SimState, Model)> {
    let space = SpatialGrid::cube(1, 0.0, 1.0, 16, Boundary::Periodic)?;
    let grid = PhaseGrid::cube(space.clone(), 4.0, 32)?;
    let nv = grid.nv_total();
    let f: Vec<f64> = (0..grid.len())
        .map(|idx| {
            let v = grid.v_center(idx % nv)[0];
            let t = (1.0 - v * v).max(0.0);
            0.3 * t * t
        })
        .collect();
    let kin = KineticState::from_values(grid, f)?;
    let rho: Vec<f64> = (0..16).map(|_| 1.0 + 0.1 * rng.gen_range(0.0..1.0)).collect();
    let u: Vec<f64> = (0..16).map(|_| 0.1 * rng.gen_range(-1.0..1.0)).collect();
    let fl = FluidState::from_velocity(space.clone(), rho, &u)?;
    let op = AlignmentOperator::new(&space, c.kernel.clone());
    let model = Model {
        params: *params,
        op: op.clone(),
        policy: CflPolicy::default(),
    };
    Ok((SimState::new(kin, fl, &op)?, model))
}

/// Runs every check; never fails on a check, only on an internal error.
pub fn run_checks(c: &SimConfig) -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let params = FluidParams::new(c.mu, c.lambda, c.gamma, 1)?;
    let mut out = vec![check(
        "kernel_normalisation",
        c.kernel.validate().is_ok(),
        format!("{} kernel", c.kernel.name()),
    )];
    out.push(characteristic_check(&mut rng)?);
    out.extend(operator_checks(&c.kernel, &mut rng)?);

    let (s, model) = small_scenario(c, &params, &mut rng)?;
    let (dt, _) = cfl_dt(&s, &params, &model.policy)?;
    let next = advance(&s, &model, dt)?;
    let m0: f64 = s.fluid.rho.iter().sum();
    let m1: f64 = next.fluid.rho.iter().sum();
    out.push(check(
        "fluid_mass_conservation",
        (m1 - m0).abs() <= 1e-12 * m0,
        format!("rel change {:.2e}", (m1 - m0).abs() / m0),
    ));
    let kin_next = kinetic_step(&s.kin, &s.fluid.velocity(), &s.af, dt)?;
    out.push(check(
        "kinetic_positivity",
        kin_next.values().iter().all(|&x| x >= 0.0),
        "f >= 0 after one step".into(),
    ));
    out.push(check(
        "fields_fresh_after_step",
        next.fields_fresh(),
        format!("fields epoch {} / state epoch {}", next.af.epoch, next.kin.epoch()),
    ));

    let space = s.fluid.grid().clone();
    let rest = FluidState::new(space.clone(), vec![1.0; 16], vec![0.0; 16])?;
    let stepped = fluid_step(&rest, &[0.0; 16], &params, dt)?;
    out.push(check("rest_state_fixed_point", stepped == rest, "rho = 1, u = 0 unchanged".into()));

    let zero = SimState::new(KineticState::zeros(s.kin.grid().clone()), s.fluid.clone(), &model.op)?;
    let coupled = advance(&zero, &model, dt)?;
    let alone = fluid_step(&s.fluid, &[0.0; 16], &params, dt)?;
    out.push(check(
        "decoupled_limit_bitwise",
        coupled.fluid == alone,
        "f = 0 run equals standalone fluid step".into(),
    ));

    let mut buf = Vec::new();
    write_snapshot(&next, &mut buf)?;
    let back = read_snapshot(&buf[..])?;
    let same = back.kin.values() == next.kin.values()
        && back.fluid == next.fluid
        && back.af == next.af
        && back.t.to_bits() == next.t.to_bits()
        && back.step == next.step;
    out.push(check("snapshot_round_trip", same, format!("{} bytes", buf.len())));
    Ok(out)
}
