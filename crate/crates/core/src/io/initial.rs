//! Built-in initial-data generators and assembly of a runnable scenario.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ConfigError, DensityInit, KineticInit, SimConfig, VelocityInit};
use crate::alignment::AlignmentOperator;
use crate::diagnostics::{mass_l1, WeightParams};
use crate::driver::{CflPolicy, Model, RunSetup, SimState};
use crate::error::Result;
use crate::fluid::FluidParams;
use crate::phase_space::{norm, Axis, FluidState, KineticState, PhaseGrid, SpatialGrid, MAX_DIM};

/// Ratio V_max must keep above the predicted support ceiling.
pub const GUARD_FACTOR: f64 = 1.2;

pub fn spatial_grid(c: &SimConfig) -> Result<SpatialGrid> {
    let axes = (0..c.dim)
        .map(|_| Axis::new(c.x_min, c.x_max, c.nx))
        .collect::<Result<Vec<_>>>()?;
    SpatialGrid::new(axes, c.boundary)
}

pub fn phase_grid(c: &SimConfig) -> Result<PhaseGrid> {
    PhaseGrid::cube(spatial_grid(c)?, c.v_max, c.nv)
}

/// max(0, r² − |v − c|²)²
fn bump(v: &[f64], center: &[f64], r: f64) -> f64 {
    let s: f64 = v.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
    let t = (r * r - s).max(0.0);
    t * t
}

fn velocity_profile(c: &SimConfig, grid: &PhaseGrid) -> Vec<f64> {
    let d = c.dim;
    let minus: Vec<f64> = c.kinetic_center_v.iter().map(|x| -x).collect();
    (0..grid.nv_total())
        .map(|j| {
            let v = grid.v_center(j);
            let one = bump(&v[..d], &c.kinetic_center_v, c.kinetic_radius);
            match c.kinetic_init {
                KineticInit::TwoBeam => one + bump(&v[..d], &minus, c.kinetic_radius),
                _ => one,
            }
        })
        .collect()
}

fn spatial_profile(c: &SimConfig, grid: &SpatialGrid) -> Vec<f64> {
    let d = c.dim;
    let len = c.x_max - c.x_min;
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    (0..grid.len())
        .map(|i| {
            let x = grid.center(i);
            let wave: f64 = (0..d)
                .map(|k| (2.0 * std::f64::consts::PI * (x[k] - c.x_min) / len).cos())
                .sum::<f64>()
                / d as f64;
            let chi = 1.0 + c.kinetic_x_amp * wave;
            match c.kinetic_init {
                KineticInit::Random => chi * rng.gen_range(0.5..1.5),
                _ => chi,
            }
        })
        .collect()
}

fn kinetic_initial(c: &SimConfig, grid: &PhaseGrid) -> Result<KineticState> {
    if c.kinetic_init == KineticInit::Zero || c.kinetic_amplitude == 0.0 {
        return Ok(KineticState::zeros(grid.clone()));
    }
    let vp = velocity_profile(c, grid);
    let xp = spatial_profile(c, grid.space());
    let nv = grid.nv_total();
    let f = (0..grid.len())
        .map(|idx| c.kinetic_amplitude * xp[idx / nv] * vp[idx % nv])
        .collect();
    KineticState::from_values(grid.clone(), f)
}

fn fluid_initial(c: &SimConfig, grid: &SpatialGrid) -> Result<FluidState> {
    let d = c.dim;
    let len = c.x_max - c.x_min;
    let center = grid.box_center();
    let radius = |x: &[f64; MAX_DIM]| {
        let dx: Vec<f64> = (0..d).map(|k| x[k] - center[k]).collect();
        norm(&dx, d)
    };
    let rho: Vec<f64> = (0..grid.len())
        .map(|i| {
            let x = grid.center(i);
            let r = radius(&x);
            let base = match c.fluid_density {
                DensityInit::Uniform => c.rho0,
                DensityInit::Gaussian => c.rho0 + c.rho_amp * (-r * r / (2.0 * c.rho_width * c.rho_width)).exp(),
                DensityInit::Zero => 0.0,
            };
            match c.vacuum_annulus {
                Some((inner, outer)) if r >= inner && r < outer => 0.0,
                _ => base,
            }
        })
        .collect();
    let u: Vec<f64> = (0..grid.len())
        .flat_map(|i| {
            let x = grid.center(i);
            (0..d).map(move |k| match c.fluid_velocity {
                VelocityInit::Zero => 0.0,
                VelocityInit::Mode => {
                    c.u_amp * (2.0 * std::f64::consts::PI * c.u_mode as f64 * (x[k] - c.x_min) / len).sin()
                }
            })
        })
        .collect();
    FluidState::from_velocity(grid.clone(), rho, &u)
}

/// Velocity-support ceiling predicted from R₀, the kinetic mass M and a
/// bound U on the fluid speed: characteristics relax towards (b+u)/(1+a)
/// with |b| ≤ M·R, so max(R₀, M·max(R₀,U) + U) bounds the support.
pub fn predicted_ceiling(r0: f64, mass: f64, fluid_speed: f64) -> f64 {
    r0.max(mass * r0.max(fluid_speed) + fluid_speed)
}

/// Generates (f₀, ρ₀ u₀) and checks the velocity box against the guard.
pub fn generate_initial(c: &SimConfig) -> Result<(KineticState, FluidState)> {
    let grid = phase_grid(c)?;
    let kin = kinetic_initial(c, &grid)?;
    let fl = fluid_initial(c, grid.space())?;
    let speed = c.guard_fluid_speed.unwrap_or_else(|| fl.max_speed());
    let ceiling = predicted_ceiling(c.r0, mass_l1(&kin), speed);
    if !kin.is_zero() && c.v_max < GUARD_FACTOR * ceiling {
        return Err(ConfigError::Constraint {
            key: "v_max".into(),
            value: c.v_max.to_string(),
            constraint: format!(
                "v_max >= {GUARD_FACTOR} x predicted support ceiling {ceiling:.6} (velocity-box guard)"
            ),
        }
        .into());
    }
    Ok((kin, fl))
}

/// A state with its model, ready for the driver or the Picard study.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub state: SimState,
    pub model: Model,
    pub weights: WeightParams,
    pub r0: f64,
}

impl Scenario {
    pub fn from_config(c: &SimConfig) -> Result<Self> {
        let (kin, fl) = generate_initial(c)?;
        let op = AlignmentOperator::new(fl.grid(), c.kernel.clone());
        let state = SimState::new(kin, fl, &op)?;
        let model = Model {
            params: FluidParams::new(c.mu, c.lambda, c.gamma, c.dim)?,
            op,
            policy: CflPolicy::new(c.cfl, c.max_dt)?,
        };
        Ok(Scenario {
            state,
            model,
            weights: WeightParams::new(c.alpha, c.beta)?,
            r0: c.r0,
        })
    }

    pub fn run_setup(&self, c: &SimConfig, t_end: f64, snapshot_every: Option<usize>) -> RunSetup {
        RunSetup {
            model: self.model.clone(),
            initial: self.state.clone(),
            t_end,
            diag_every: c.diag_every,
            monitor_abort: c.monitor_abort,
            weights: self.weights,
            r0: self.r0,
            snapshot_every,
        }
    }
}
