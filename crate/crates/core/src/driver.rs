//! The coupled time loop: time-step selection, Lie splitting of the kinetic
//! and fluid sub-steps, and trajectory recording.

use crate::alignment::{AlignmentFields, AlignmentOperator};
use crate::diagnostics::{DiagnosticsRecord, DiagnosticsTracker, WeightParams};
use crate::error::{CflBreakdown, Error, Result};
use crate::fluid::{drag_source, fluid_step, FluidParams};
use crate::kinetic::{kinetic_step, support_radius};
use crate::phase_space::{FluidState, KineticState, EPS_VAC};

/// Smallest time step the driver accepts.
pub const DT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CflPolicy {
    /// σ ∈ (0, 1].
    pub safety: f64,
    pub max_dt: f64,
}

impl Default for CflPolicy {
    fn default() -> Self {
        CflPolicy {
            safety: 0.4,
            max_dt: 1.0,
        }
    }
}

impl CflPolicy {
    pub fn new(safety: f64, max_dt: f64) -> Result<Self> {
        if !(safety > 0.0 && safety <= 1.0) {
            return Err(Error::Argument(format!("CFL safety must be in (0, 1], got {safety}")));
        }
        if !(max_dt > 0.0) {
            return Err(Error::Argument(format!("max_dt must be > 0, got {max_dt}")));
        }
        Ok(CflPolicy { safety, max_dt })
    }
}

/// Coupled unknowns at one instant. `af` always matches `kin`'s epoch at step
/// boundaries.
#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub kin: KineticState,
    pub fluid: FluidState,
    pub af: AlignmentFields,
    pub step: u64,
}

impl SimState {
    pub fn new(mut kin: KineticState, fluid: FluidState, op: &AlignmentOperator) -> Result<Self> {
        if kin.grid().space() != fluid.grid() || op.plan().grid() != fluid.grid() {
            return Err(Error::Mismatch("kinetic, fluid and kernel grids differ".into()));
        }
        let af = op.fields_for(&mut kin)?;
        Ok(SimState {
            t: 0.0,
            kin,
            fluid,
            af,
            step: 0,
        })
    }

    pub fn fields_fresh(&self) -> bool {
        self.af.epoch == self.kin.epoch()
    }
}

/// Everything the time loop needs besides the state.
#[derive(Debug, Clone)]
pub struct Model {
    pub params: FluidParams,
    pub op: AlignmentOperator,
    pub policy: CflPolicy,
}

/// σ · min of the acoustic, transport, viscous, characteristic and drag
/// limits, capped at `max_dt`. Kinetic limits are skipped when f ≡ 0.
pub fn cfl_dt(s: &SimState, p: &FluidParams, policy: &CflPolicy) -> Result<(f64, CflBreakdown)> {
    let grid = s.fluid.grid();
    let d = grid.dim() as f64;
    let dx = grid.min_spacing();
    let rho_max = s.fluid.max_density();
    let c_s = if rho_max > 0.0 {
        (p.gamma * rho_max.powf(p.gamma - 1.0)).sqrt()
    } else {
        0.0
    };
    let wave = s.fluid.max_speed() + c_s;
    let acoustic = if wave > 0.0 { dx / wave } else { f64::INFINITY };

    let rho_min = s
        .fluid
        .rho
        .iter()
        .copied()
        .filter(|&r| r > EPS_VAC)
        .fold(f64::INFINITY, f64::min);
    let visc = 2.0 * p.mu + p.lambda;
    let viscous = if rho_min.is_finite() && visc > 0.0 {
        dx * dx * rho_min / (2.0 * d * visc)
    } else {
        f64::INFINITY
    };

    let (kinetic_transport, characteristic, drag_stiffness) = if s.kin.is_zero() {
        (f64::INFINITY, f64::INFINITY, f64::INFINITY)
    } else {
        let r = support_radius(&s.kin, None);
        let n_max = s
            .kin
            .cached_moments()
            .map(|m| m.n.iter().copied().fold(0.0, f64::max))
            .unwrap_or_else(|| s.kin.moments().map(|m| m.n.iter().copied().fold(0.0, f64::max)).unwrap_or(0.0));
        (
            if r > 0.0 { dx / r } else { f64::INFINITY },
            0.5 / (1.0 + s.af.max_a()),
            if n_max > 0.0 { 0.5 / n_max } else { f64::INFINITY },
        )
    };
    let breakdown = CflBreakdown {
        acoustic,
        kinetic_transport,
        viscous,
        characteristic,
        drag_stiffness,
        max_dt: policy.max_dt,
        safety: policy.safety,
    };
    let dt = (policy.safety * breakdown.min_term()).min(policy.max_dt);
    if !(dt >= DT_FLOOR) {
        return Err(Error::DtUnderflow { dt, breakdown });
    }
    Ok((dt, breakdown))
}

/// One Lie-split step of length `dt`: kinetic with the current u, then fluid
/// with the drag of the post-kinetic distribution against the pre-step u.
pub fn advance(s: &SimState, model: &Model, dt: f64) -> Result<SimState> {
    let mut kin = s.kin.clone();
    let af = if s.fields_fresh() {
        s.af.clone()
    } else {
        model.op.fields_for(&mut kin)?
    };
    let u = s.fluid.velocity();
    let mut kin_next = kinetic_step(&kin, &u, &af, dt)?;
    let af_next = model.op.fields_for(&mut kin_next)?;
    let m = kin_next.cached_moments().expect("refreshed by fields_for");
    let drag = drag_source(m, &u);
    let fluid = fluid_step(&s.fluid, &drag, &model.params, dt)?;
    Ok(SimState {
        t: s.t + dt,
        kin: kin_next,
        fluid,
        af: af_next,
        step: s.step + 1,
    })
}

/// Advances by the CFL step.
pub fn step_coupled(s: &SimState, model: &Model) -> Result<SimState> {
    let (dt, _) = cfl_dt(s, &model.params, &model.policy)?;
    advance(s, model, dt)
}

/// What a run needs beyond the model.
#[derive(Debug, Clone)]
pub struct RunSetup {
    pub model: Model,
    pub initial: SimState,
    pub t_end: f64,
    /// Record diagnostics every this many steps (≥ 1); the final state is always recorded.
    pub diag_every: usize,
    pub monitor_abort: Option<f64>,
    pub weights: WeightParams,
    pub r0: f64,
    /// Keep a copy of the state every this many steps.
    pub snapshot_every: Option<usize>,
}

/// Why a run stopped early.
#[derive(Debug, Clone, PartialEq)]
pub struct FailureReport {
    pub step: u64,
    pub t: f64,
    pub reason: String,
    /// Blowup monitor at the last recorded time.
    pub monitor: f64,
    pub exit_code: i32,
}

impl std::fmt::Display for FailureReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "run stopped at step {} (t = {:.6e}): {}; blowup monitor = {:.6e}",
            self.step, self.t, self.reason, self.monitor
        )
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<SimState>,
    pub final_state: SimState,
    pub failure: Option<FailureReport>,
}

fn record(tracker: &mut DiagnosticsTracker, s: &SimState, model: &Model) -> Result<DiagnosticsRecord> {
    tracker.record(s.t, &s.kin, &s.fluid, &model.op, s.af.max_b())
}

/// Runs until `t_end`, a sub-step error, or the monitor threshold.
pub fn run(setup: &RunSetup) -> Result<Trajectory> {
    let model = &setup.model;
    let every = setup.diag_every.max(1) as u64;
    let mut tracker = DiagnosticsTracker::new(model.params, setup.weights, setup.r0);
    let mut state = setup.initial.clone();
    let mut records = vec![record(&mut tracker, &state, model)?];
    let mut snapshots = Vec::new();
    if setup.snapshot_every.is_some() {
        snapshots.push(state.clone());
    }
    let mut failure = None;
    let stop_tol = 1e-12 * setup.t_end.abs().max(1.0);

    let monitor_exceeded = |rec: &DiagnosticsRecord| {
        setup
            .monitor_abort
            .filter(|&thr| rec.blowup_monitor > thr)
            .map(|thr| format!("blowup monitor exceeded threshold {thr:e}"))
    };
    if let Some(reason) = monitor_exceeded(&records[0]) {
        failure = Some(FailureReport {
            step: state.step,
            t: state.t,
            reason,
            monitor: records[0].blowup_monitor,
            exit_code: 3,
        });
    }

    while failure.is_none() && setup.t_end - state.t > stop_tol {
        let stepped = cfl_dt(&state, &model.params, &model.policy)
            .and_then(|(dt, _)| advance(&state, model, dt.min(setup.t_end - state.t)));
        let next = match stepped {
            Ok(n) => n,
            Err(e) => {
                failure = Some(FailureReport {
                    step: state.step,
                    t: state.t,
                    reason: e.to_string(),
                    monitor: records.last().map_or(0.0, |r| r.blowup_monitor),
                    exit_code: e.exit_code(),
                });
                break;
            }
        };
        state = next;
        let last = setup.t_end - state.t <= stop_tol;
        if state.step % every == 0 || last {
            let rec = record(&mut tracker, &state, model)?;
            if let Some(reason) = monitor_exceeded(&rec) {
                failure = Some(FailureReport {
                    step: state.step,
                    t: state.t,
                    reason,
                    monitor: rec.blowup_monitor,
                    exit_code: 3,
                });
            }
            records.push(rec);
        }
        if let Some(k) = setup.snapshot_every {
            if state.step % (k.max(1) as u64) == 0 {
                snapshots.push(state.clone());
            }
        }
    }
    Ok(Trajectory {
        records,
        snapshots,
        final_state: state,
        failure,
    })
}
