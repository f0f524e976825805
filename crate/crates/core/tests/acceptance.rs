//! Acceptance criteria, one summary line each. Run with `cargo test --test
//! acceptance`; pass criterion numbers as arguments to run a subset.

use std::fmt::Write as _;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use flockns::alignment::{AlignmentOperator, Kernel};
use flockns::diagnostics::{
    energy_identity_residual, support_bound_report, DiagnosticsRecord, DiagnosticsTracker,
};
use flockns::driver::{advance, cfl_dt, run, SimState, Trajectory};
use flockns::fluid::{drag_source, fluid_step};
use flockns::io::config::parse_config;
use flockns::io::initial::Scenario;
use flockns::io::output::write_timeseries_to;
use flockns::kinetic::{kinetic_step, support_radius, trace_back};
use flockns::phase_space::{moments, Boundary, FluidState, KineticState, PhaseGrid, SpatialGrid, EPS_VAC};
use flockns::picard::{coupled_reference, limit_discrepancy, picard_study, PicardProblem};

// ---------------------------------------------------------------------------
// oracles

/// Neumaier-compensated sum.
#[derive(Default, Clone, Copy)]
struct Acc {
    sum: f64,
    c: f64,
}

impl Acc {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.c
    }
}

fn distance(grid: &SpatialGrid, i: usize, j: usize) -> f64 {
    let (xi, xj) = (grid.center(i), grid.center(j));
    let mut r2 = 0.0;
    for k in 0..grid.dim() {
        let mut dx = (xi[k] - xj[k]).abs();
        if grid.boundary() == Boundary::Periodic {
            dx = dx.min(grid.axis(k).length() - dx);
        }
        r2 += dx * dx;
    }
    r2.sqrt()
}

fn rk4_backward(x: &[f64], v: &[f64], lam: f64, force: &[f64], dt: f64) -> (Vec<f64>, Vec<f64>) {
    let d = x.len();
    let h = -dt / 64.0;
    let (mut x, mut v) = (x.to_vec(), v.to_vec());
    let rhs = |v: &[f64]| -> (Vec<f64>, Vec<f64>) { (v.to_vec(), (0..d).map(|k| force[k] - lam * v[k]).collect()) };
    let axpy = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(p, q)| p + s * q).collect() };
    for _ in 0..64 {
        let (k1x, k1v) = rhs(&v);
        let (k2x, k2v) = rhs(&axpy(&v, 0.5 * h, &k1v));
        let (k3x, k3v) = rhs(&axpy(&v, 0.5 * h, &k2v));
        let (k4x, k4v) = rhs(&axpy(&v, h, &k3v));
        for k in 0..d {
            x[k] += h / 6.0 * (k1x[k] + 2.0 * k2x[k] + 2.0 * k3x[k] + k4x[k]);
            v[k] += h / 6.0 * (k1v[k] + 2.0 * k2v[k] + 2.0 * k3v[k] + k4v[k]);
        }
    }
    (x, v)
}

// ---------------------------------------------------------------------------
// scenarios

/// Smooth periodic 1D scenario. The step is pinned to 0.8/n, below every CFL
/// limit at n <= 256, so that dt, dx and dv halve together under refinement.
fn smooth_coupled(n: usize, amplitude: f64) -> String {
    smooth_with(n, amplitude, 0.005, 0.8 / n as f64)
}

fn smooth_with(n: usize, amplitude: f64, mu: f64, max_dt: f64) -> String {
    format!(
        "dim = 1\nnx = {n}\nnv = {n}\nx_min = 0\nx_max = 4\nv_max = 1.2\nmu = {mu}\ngamma = 1.4\nr0 = 1\n\
         kinetic_init = bump\nkinetic_amplitude = {amplitude}\nkinetic_x_amp = 0.3\n\
         fluid_density = gaussian\nrho0 = 1\nrho_amp = 0.3\nrho_width = 0.5\n\
         fluid_velocity = mode\nu_amp = 0.2\nmax_dt = {max_dt}\nt_end = 0.5\n"
    )
}

fn scenario(text: &str) -> (Scenario, flockns::io::config::SimConfig) {
    let cfg = parse_config(text).expect("valid scenario");
    (Scenario::from_config(&cfg).expect("scenario builds"), cfg)
}

fn run_text(text: &str) -> Trajectory {
    let (sc, cfg) = scenario(text);
    run(&sc.run_setup(&cfg, cfg.t_end.unwrap(), None)).expect("run completes")
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Records of every driver run, for the support-bound criterion.
#[derive(Default)]
struct Suite {
    records: Vec<(String, Vec<DiagnosticsRecord>)>,
    conservation: Option<[Trajectory; 2]>,
}

// ---------------------------------------------------------------------------
// 1

fn operator_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst_l = 0.0f64;
    let mut worst_d = 0.0f64;
    let mut worst_drag = 0.0f64;
    for d in 1..=2 {
        for boundary in [Boundary::Periodic, Boundary::Clamped] {
            for kernel in [Kernel::Smooth { length: 0.7 }, Kernel::ConstantOne] {
                let space = SpatialGrid::cube(d, -1.0, 1.0, 6, boundary).unwrap();
                let grid = PhaseGrid::cube(space.clone(), 2.0, 6).unwrap();
                let f: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
                let mut kin = KineticState::from_values(grid.clone(), f.clone()).unwrap();
                let op = AlignmentOperator::new(&space, kernel.clone());
                let af = op.fields_for(&mut kin).unwrap();
                let nv = grid.nv_total();
                let (dx, dv) = (space.cell_volume(), grid.v_cell_volume());

                let mut num = 0.0f64;
                let mut den = 0.0f64;
                for i in 0..space.len() {
                    for j in 0..nv {
                        let v = grid.v_center(j);
                        let l = af.eval_l(&kin, i, &v[..d]).unwrap();
                        for k in 0..d {
                            let mut acc = Acc::default();
                            for y in 0..space.len() {
                                let phi = kernel.eval(distance(&space, i, y)).unwrap();
                                for s in 0..nv {
                                    acc.add(phi * f[y * nv + s] * (grid.v_center(s)[k] - v[k]) * dx * dv);
                                }
                            }
                            num = num.max((l[k] - acc.value()).abs());
                            den = den.max(acc.value().abs());
                        }
                    }
                }
                worst_l = worst_l.max(num / den);

                let mut acc = Acc::default();
                for i in 0..space.len() {
                    for y in 0..space.len() {
                        let phi = kernel.eval(distance(&space, i, y)).unwrap();
                        for j in 0..nv {
                            let vj = grid.v_center(j);
                            for s in 0..nv {
                                let vs = grid.v_center(s);
                                let w2: f64 = (0..d).map(|k| (vj[k] - vs[k]).powi(2)).sum();
                                acc.add(0.5 * phi * f[i * nv + j] * f[y * nv + s] * w2 * dx * dx * dv * dv);
                            }
                        }
                    }
                }
                let m = moments(&f, &grid).unwrap();
                let diss = op.dissipation(&m).unwrap();
                worst_d = worst_d.max((diss - acc.value()).abs() / acc.value());

                let u: Vec<f64> = (0..space.len() * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let drag = drag_source(&m, &u);
                for i in 0..space.len() {
                    for k in 0..d {
                        let (mut acc, mut scale) = (Acc::default(), 0.0);
                        for s in 0..nv {
                            let term = f[i * nv + s] * (grid.v_center(s)[k] - u[i * d + k]) * dv;
                            acc.add(term);
                            scale += term.abs();
                        }
                        worst_drag = worst_drag.max((drag[i * d + k] - acc.value()).abs() / scale);
                    }
                }
            }
        }
    }
    outcome(
        worst_l <= 1e-10 && worst_d <= 1e-10 && worst_drag <= 1e-13,
        format!("eval_l rel {worst_l:.1e} (<=1e-10), dissipation rel {worst_d:.1e} (<=1e-10), drag rel {worst_drag:.1e} (<=1e-13)"),
    )
}

// ---------------------------------------------------------------------------
// 2

fn characteristic_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut worst = 0.0f64;
    for draw in 0..10_000 {
        let d = 1 + draw % 3;
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let b: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let u: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let a = rng.gen_range(0.0..3.0);
        // steps admitted by the time-step contract keep (1+a)dt <= 0.5
        let dt = rng.gen_range(0.0..0.5) / (1.0 + a);
        let tr = trace_back(&x, &v, a, &b, &u, dt).unwrap();
        let force: Vec<f64> = (0..d).map(|k| b[k] + u[k]).collect();
        let (xo, vo) = rk4_backward(&x, &v, 1.0 + a, &force, dt);
        let scale = xo.iter().chain(&vo).fold(0.0f64, |m, z| m.max(z.abs()));
        let err = (0..d).fold(0.0f64, |m, k| m.max((tr.x[k] - xo[k]).abs()).max((tr.v[k] - vo[k]).abs()));
        let j_err = (tr.amplification - (d as f64 * (1.0 + a) * dt).exp()).abs() / tr.amplification;
        worst = worst.max(err / scale).max(j_err);
    }
    outcome(worst <= 1e-10, format!("10^4 draws, max rel err {worst:.2e} (<=1e-10)"))
}

// ---------------------------------------------------------------------------
// 3

fn conservation(suite: &mut Suite) -> Outcome {
    let coarse = run_text(&smooth_coupled(128, 0.1));
    let fine = run_text(&smooth_coupled(256, 0.1));
    let drift = |t: &Trajectory| {
        let (a, b) = (t.records.first().unwrap(), t.records.last().unwrap());
        ((b.mass_f - a.mass_f).abs() / a.mass_f, (b.mass_rho - a.mass_rho).abs() / a.mass_rho)
    };
    let (kin_c, fl_c) = drift(&coarse);
    let (kin_f, fl_f) = drift(&fine);
    let fluid_ok = [&coarse, &fine].iter().all(|t| {
        let m0 = t.records[0].mass_rho;
        t.records.iter().all(|r| (r.mass_rho - m0).abs() <= 1e-10 * m0)
    });
    let ratio = kin_c / kin_f;
    let ok = coarse.failure.is_none()
        && fine.failure.is_none()
        && fluid_ok
        && kin_c <= 1e-2
        && ratio >= 1.8
        && coarse.final_state.step * 2 == fine.final_state.step;
    suite.records.push(("smooth N=128".into(), coarse.records.clone()));
    suite.records.push(("smooth N=256".into(), fine.records.clone()));
    let detail = format!(
        "fluid mass rel {:.1e}/{:.1e} (<=1e-10); kinetic drift N=128 {kin_c:.2e} (<=1e-2), N=256 {kin_f:.2e}, ratio {ratio:.2} (>=1.8); steps {}/{}",
        fl_c, fl_f, coarse.final_state.step, fine.final_state.step
    );
    suite.conservation = Some([coarse, fine]);
    outcome(ok, detail)
}

// ---------------------------------------------------------------------------
// 4

fn energy_identity(suite: &mut Suite) -> Outcome {
    let mut lines = String::new();
    let mut ok = true;
    let decoupled = [
        run_text(&smooth_coupled(128, 0.0)),
        run_text(&smooth_coupled(256, 0.0)),
    ];
    suite.records.push(("decoupled N=128".into(), decoupled[0].records.clone()));
    suite.records.push(("decoupled N=256".into(), decoupled[1].records.clone()));
    let coupled = suite.conservation.as_ref().expect("criterion 3 runs first");
    for (name, pair) in [("decoupled", &decoupled), ("coupled", coupled)] {
        let rel: Vec<f64> = pair
            .iter()
            .map(|t| energy_identity_residual(&t.records).last().unwrap().2.abs())
            .collect();
        let bounded = pair.iter().all(|t| {
            let e0 = t.records[0].energy;
            energy_identity_residual(&t.records)
                .iter()
                .zip(&t.records)
                .all(|((_, raw, _), r)| r.energy <= e0 + raw.abs())
        });
        let ratio = rel[0] / rel[1];
        let pass = pair.iter().all(|t| t.failure.is_none()) && rel[0] <= 0.05 && ratio >= 1.5 && bounded;
        ok &= pass;
        let _ = write!(
            lines,
            "{name}: |res|/E0 {:.2e} -> {:.2e}, ratio {ratio:.2} (>=1.5), E<=E0+|res| {bounded}; ",
            rel[0], rel[1]
        );
    }
    outcome(ok, lines.trim_end_matches("; ").to_string())
}

// ---------------------------------------------------------------------------
// 5

fn support_bound(suite: &Suite) -> Outcome {
    let mut violations = 0;
    let mut checked = 0;
    let mut tightest = f64::INFINITY;
    for (_, recs) in &suite.records {
        for c in support_bound_report(recs) {
            checked += 1;
            violations += c.violated as usize;
            tightest = tightest.min(c.ceiling - c.radius);
        }
    }
    outcome(
        violations == 0 && checked > 0,
        format!(
            "{violations} violations over {checked} records in {} runs; smallest margin {tightest:.3e}",
            suite.records.len()
        ),
    )
}

// ---------------------------------------------------------------------------
// 6

fn decoupled_limits() -> Outcome {
    // f0 = 0: the coupled driver must reproduce a bare fluid run bit for bit.
    let text = smooth_coupled(64, 0.0).replace("t_end = 0.5", "t_end = 0.1");
    let (sc, cfg) = scenario(&text);
    let traj = run(&sc.run_setup(&cfg, 0.1, Some(1))).unwrap();
    let params = sc.model.params;
    let mut fl = sc.state.fluid.clone();
    let mut t = 0.0;
    let mut fluid_same = traj.failure.is_none();
    for snap in traj.snapshots.iter().skip(1) {
        let dx = fl.grid().min_spacing();
        let rho_max = fl.max_density();
        let cs = (params.gamma * rho_max.powf(params.gamma - 1.0)).sqrt();
        let rho_min = fl.rho.iter().copied().filter(|&r| r > EPS_VAC).fold(f64::INFINITY, f64::min);
        let visc = dx * dx * rho_min / (2.0 * (2.0 * params.mu + params.lambda));
        let dt = (cfg.cfl * (dx / (fl.max_speed() + cs)).min(visc)).min(cfg.max_dt).min(0.1 - t);
        fl = fluid_step(&fl, &vec![0.0; fl.q.len()], &params, dt).unwrap();
        t += dt;
        fluid_same &= snap.fluid == fl && snap.t == t && snap.kin.is_zero();
    }
    fluid_same &= traj.final_state.fluid == fl;

    // rho0 = 0: the particles must evolve exactly as with u = 0.
    let text = "dim = 1\nnx = 16\nnv = 64\nx_min = 0\nx_max = 2\nv_max = 2\nmu = 0.1\ngamma = 1.4\n\
                kinetic_init = two_beam\nkinetic_center_v = 0.5\nkinetic_radius = 0.4\nkinetic_amplitude = 20\n\
                kinetic_x_amp = 0.5\nfluid_density = zero\nt_end = 0.2\n";
    let (sc, cfg) = scenario(text);
    let traj = run(&sc.run_setup(&cfg, 0.2, Some(1))).unwrap();
    let op = &sc.model.op;
    let mut kin = sc.state.kin.clone();
    let grid = kin.grid().clone();
    let zero_u = vec![0.0; grid.space().len()];
    let mut t = 0.0;
    let mut kin_same = traj.failure.is_none() && traj.snapshots.len() > 2;
    for snap in traj.snapshots.iter().skip(1) {
        let af = op.fields_for(&mut kin).unwrap();
        let n_max = kin.cached_moments().unwrap().n.iter().copied().fold(0.0, f64::max);
        let r = support_radius(&kin, None);
        let dt = (cfg.cfl
            * (grid.space().min_spacing() / r)
                .min(0.5 / (1.0 + af.max_a()))
                .min(0.5 / n_max))
        .min(cfg.max_dt)
        .min(0.2 - t);
        kin = kinetic_step(&kin, &zero_u, &af, dt).unwrap();
        t += dt;
        kin_same &= snap.kin.values() == kin.values() && snap.fluid.is_vacuum();
    }
    outcome(
        fluid_same && kin_same,
        format!("f0=0 fluid trajectory bitwise equal: {fluid_same}; rho0=0 kinetic trajectory bitwise equal: {kin_same}"),
    )
}

// ---------------------------------------------------------------------------
// 7

fn velocity_variance(kin: &KineticState) -> (f64, f64) {
    let m = kin.moments().unwrap();
    let d = m.dim;
    let n: f64 = m.n.iter().sum();
    let m2: f64 = m.m2.iter().sum();
    let m1: Vec<f64> = (0..d).map(|k| (0..m.n.len()).map(|i| m.m1[i * d + k]).sum()).collect();
    let p2: f64 = m1.iter().map(|x| x * x).sum();
    (m2 - p2 / n, m2)
}

fn flocking(suite: &mut Suite) -> Outcome {
    let text = "dim = 1\nnx = 4\nnv = 128\nx_min = 0\nx_max = 4\nv_max = 1.5\nmu = 0.1\ngamma = 1.4\nr0 = 1\n\
                kernel = constant_one\nkinetic_init = two_beam\nkinetic_center_v = 0.5\nkinetic_radius = 0.4\n\
                kinetic_amplitude = 11\nfluid_density = zero\nmax_dt = 0.01\nt_end = 1\n";
    let (sc, cfg) = scenario(text);
    let mut s = sc.state.clone();
    let mut tracker = DiagnosticsTracker::new(sc.model.params, sc.weights, sc.r0);
    let mut records = vec![tracker.record(0.0, &s.kin, &s.fluid, &sc.model.op, s.af.max_b()).unwrap()];
    let (var0, scale) = velocity_variance(&s.kin);
    let mut prev = var0;
    let mut worst_rise = f64::NEG_INFINITY;
    let mut steps = 0;
    while 1.0 - s.t > 1e-12 {
        let (dt, _) = cfl_dt(&s, &sc.model.params, &sc.model.policy).unwrap();
        s = advance(&s, &sc.model, dt.min(1.0 - s.t)).unwrap();
        records.push(tracker.record(s.t, &s.kin, &s.fluid, &sc.model.op, s.af.max_b()).unwrap());
        let (var, _) = velocity_variance(&s.kin);
        worst_rise = worst_rise.max(var - prev);
        prev = var;
        steps += 1;
    }
    let _ = cfg;
    suite.records.push(("two-beam flocking".into(), records));
    let decay = 1.0 - prev / var0;
    outcome(
        worst_rise <= 1e-10 * scale && decay >= 0.5,
        format!(
            "{steps} steps; max per-step variance rise {worst_rise:.2e} (<= {:.2e}); decay over [0,1] {:.1}% (>=50%)",
            1e-10 * scale,
            100.0 * decay
        ),
    )
}

// ---------------------------------------------------------------------------
// 8

fn picard_contraction() -> Outcome {
    let text = smooth_with(64, 0.1, 0.5, 1.0).replace("t_end = 0.5", "t0 = 0.05");
    let (sc, cfg) = scenario(&text);
    let problem = PicardProblem::new(&sc.state, &sc.model, 0.05).unwrap();
    let study = picard_study(&problem, &sc.weights, 25, cfg.picard_tol).unwrap();
    let ratios: Vec<(usize, f64)> = study
        .report
        .rows
        .iter()
        .filter_map(|r| r.ratio.map(|x| (r.n, x)))
        .collect();
    let worst = ratios.iter().filter(|(n, _)| *n >= 2).map(|p| p.1).fold(0.0, f64::max);
    let reached = study.report.rows.iter().position(|r| r.sup_f < 1e-8).map(|i| i + 1);
    let reference = coupled_reference(&problem, &sc.model).unwrap();
    let gap = limit_discrepancy(&study.last, &reference).unwrap();
    outcome(
        worst <= 0.9 && reached.is_some() && gap.max() <= 0.05,
        format!(
            "{} iterates; max r_n (n>=2) {worst:.3} (<=0.9); sup F < 1e-8 at n = {reached:?}; \
             gap to coupled run rel L1 f {:.2e} rho {:.2e} u {:.2e} (<=5%)",
            study.functionals.len(),
            gap.f,
            gap.rho,
            gap.u
        ),
    )
}

// ---------------------------------------------------------------------------
// 9

fn stiff_run() -> (Option<i32>, f64, f64) {
    let threshold = 50.0;
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("stiff.cfg");
    std::fs::write(
        &cfg,
        format!(
            "dim = 1\nnx = 16\nnv = 16\nx_min = 0\nx_max = 1\nv_max = 10\nmu = 0.001\ngamma = 1.4\n\
             kinetic_amplitude = 0.5\nfluid_density = gaussian\nrho0 = 0.05\nrho_amp = 5\nrho_width = 0.05\n\
             fluid_velocity = mode\nu_amp = 5\nu_mode = 3\nt_end = 1\nmonitor_abort = {threshold}\n"
        ),
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_flockns"))
        .args(["run", "--quiet", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    let stderr = String::from_utf8_lossy(&out.stderr);
    let monitor = stderr
        .split("blowup monitor = ")
        .nth(1)
        .and_then(|s| s.split_whitespace().next())
        .and_then(|s| s.parse().ok())
        .unwrap_or(f64::NAN);
    (out.status.code(), monitor, threshold)
}

/// Largest |∇·q| by central differences.
fn div_q_linf(fl: &FluidState) -> f64 {
    let g = fl.grid();
    let d = g.dim();
    (0..g.len())
        .map(|i| {
            (0..d)
                .map(|k| (fl.q[g.neighbor(i, k, 1) * d + k] - fl.q[g.neighbor(i, k, -1) * d + k]) / (2.0 * g.spacing(k)))
                .sum::<f64>()
                .abs()
        })
        .fold(0.0, f64::max)
}

fn monitor_continuity(text: &str, suite: &mut Suite, name: &str) -> (f64, bool) {
    let (sc, _) = scenario(text);
    let mut s: SimState = sc.state.clone();
    let mut tracker = DiagnosticsTracker::new(sc.model.params, sc.weights, sc.r0);
    let mut prev = tracker.record(0.0, &s.kin, &s.fluid, &sc.model.op, s.af.max_b()).unwrap();
    let mut records = vec![prev.clone()];
    let mut worst = 0.0f64;
    let mut finite = true;
    while 0.5 - s.t > 1e-12 {
        let (dt, _) = cfl_dt(&s, &sc.model.params, &sc.model.policy).unwrap();
        let dt = dt.min(0.5 - s.t);
        let next = advance(&s, &sc.model, dt).unwrap();
        let rec = tracker.record(next.t, &next.kin, &next.fluid, &sc.model.op, next.af.max_b()).unwrap();
        let g = |r: &DiagnosticsRecord| r.u_linf + r.grad_u_linf * r.grad_u_linf;
        let rate = g(&prev).max(g(&rec)) + div_q_linf(&s.fluid).max(div_q_linf(&next.fluid));
        let jump = rec.blowup_monitor - prev.blowup_monitor;
        finite &= rec.blowup_monitor.is_finite();
        worst = worst.max(jump / (dt * rate));
        records.push(rec.clone());
        prev = rec;
        s = next;
    }
    suite.records.push((name.into(), records));
    (worst, finite)
}

fn blowup_monitor(suite: &mut Suite) -> Outcome {
    let (code, monitor, threshold) = stiff_run();
    let (w1, f1) = monitor_continuity(&smooth_coupled(128, 0.1), suite, "monitor smooth coupled");
    let (w2, f2) = monitor_continuity(&smooth_coupled(128, 0.0), suite, "monitor smooth decoupled");
    let worst = w1.max(w2);
    outcome(
        code == Some(3) && monitor > threshold && f1 && f2 && worst <= 10.0,
        format!(
            "stiff run exit {code:?} with monitor {monitor:.3e} (> {threshold}); smooth runs finite {}, max jump/(dt*rate) {worst:.3} (<=10)",
            f1 && f2
        ),
    )
}

// ---------------------------------------------------------------------------
// 10

fn determinism() -> Outcome {
    let csv_with = |threads: usize| -> Vec<u8> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let traj = run_text(&smooth_coupled(64, 0.1).replace("t_end = 0.5", "t_end = 0.1"));
            let mut buf = Vec::new();
            write_timeseries_to(&traj.records, &mut buf).unwrap();
            let snap = &traj.final_state;
            for x in snap.kin.values().iter().chain(&snap.fluid.rho).chain(&snap.fluid.q) {
                buf.extend_from_slice(&x.to_le_bytes());
            }
            buf
        })
    };
    let one = csv_with(1);
    let again = csv_with(1);
    let four = csv_with(4);
    let seven = csv_with(7);
    let ok = one == again && one == four && one == seven;
    outcome(ok, format!("threads 1/1/4/7 identical output: {ok} ({} bytes)", one.len()))
}

// ---------------------------------------------------------------------------

fn main() {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let want = |id: u32| selected.is_empty() || selected.contains(&id);
    let mut suite = Suite::default();
    let mut lines = Vec::new();
    let mut all_ok = true;
    let mut go = |id: u32, name: &str, budget: f64, f: &mut dyn FnMut(&mut Suite) -> Outcome, suite: &mut Suite| {
        let t = Instant::now();
        let o = f(suite);
        let secs = t.elapsed().as_secs_f64();
        let pass = o.pass && secs <= budget;
        all_ok &= pass;
        lines.push((
            id,
            format!(
                "criterion {id:>2} {} {name}: {} [{secs:.1}s, budget {budget:.0}s]",
                if pass { "PASS" } else { "FAIL" },
                o.detail
            ),
        ));
    };
    if want(1) {
        go(1, "operator identities", 10.0, &mut |_| operator_identities(), &mut suite);
    }
    if want(2) {
        go(2, "characteristic exactness", 5.0, &mut |_| characteristic_exactness(), &mut suite);
    }
    if want(3) || want(4) || want(5) {
        go(3, "conservation", 120.0, &mut conservation, &mut suite);
    }
    if want(4) || want(5) {
        go(4, "energy identity", 300.0, &mut energy_identity, &mut suite);
    }
    if want(6) {
        go(6, "decoupled limits", 60.0, &mut |_| decoupled_limits(), &mut suite);
    }
    if want(7) || want(5) {
        go(7, "flocking sanity", 60.0, &mut flocking, &mut suite);
    }
    if want(8) {
        go(8, "picard contraction", 180.0, &mut |_| picard_contraction(), &mut suite);
    }
    if want(9) || want(5) {
        go(9, "blowup monitor", 120.0, &mut blowup_monitor, &mut suite);
    }
    if want(10) {
        go(10, "determinism", 60.0, &mut |_| determinism(), &mut suite);
    }
    if want(5) {
        go(5, "support bound", 1.0, &mut |s| support_bound(s), &mut suite);
    }
    lines.sort_by_key(|l| l.0);
    for (_, l) in &lines {
        println!("{l}");
    }
    if !all_ok {
        eprintln!("acceptance: at least one criterion failed");
        std::process::exit(1);
    }
}
