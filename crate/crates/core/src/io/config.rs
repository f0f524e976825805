//! Flat `key = value` configuration.
//!
//! One assignment per line, `#` starts a comment, keys are case-sensitive.
//! Every key, its default and its constraint is listed in [`KEYS`].

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::alignment::Kernel;
use crate::phase_space::{Boundary, MAX_DIM, MIN_CELLS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("missing required key `{0}`")]
    MissingKey(String),
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("cannot parse `{key}` = `{value}`: {reason}")]
    Parse { key: String, value: String, reason: String },
    #[error("`{key}` = {value} violates {constraint}")]
    Constraint {
        key: String,
        value: String,
        constraint: String,
    },
}

type CResult<T> = std::result::Result<T, ConfigError>;

/// Kinetic initial-data family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KineticInit {
    Zero,
    /// A·χ(x)·max(0, r²−|v−v_c|²)²
    Bump,
    /// Two bumps centred at ±v_c.
    TwoBeam,
    /// Bump profile modulated by seeded noise in x.
    Random,
}

/// Fluid density family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityInit {
    Uniform,
    /// ρ₀ + A exp(−|x−x_c|²/(2w²)).
    Gaussian,
    Zero,
}

/// Fluid velocity family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VelocityInit {
    Zero,
    /// u_k = A sin(2π m (x_k − x_min)/L) in every component.
    Mode,
}

macro_rules! named_enum {
    ($t:ty, $($name:literal => $v:expr),+ $(,)?) => {
        impl FromStr for $t {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($name => Ok($v),)+
                    _ => Err(format!("expected one of: {}", [$($name),+].join(", "))),
                }
            }
        }
        impl $t {
            pub fn as_str(&self) -> &'static str {
                $(if *self == $v { return $name; })+
                unreachable!()
            }
        }
    };
}

named_enum!(KineticInit, "zero" => KineticInit::Zero, "bump" => KineticInit::Bump, "two_beam" => KineticInit::TwoBeam, "random" => KineticInit::Random);
named_enum!(DensityInit, "uniform" => DensityInit::Uniform, "gaussian" => DensityInit::Gaussian, "zero" => DensityInit::Zero);
named_enum!(VelocityInit, "zero" => VelocityInit::Zero, "mode" => VelocityInit::Mode);

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dim: usize,
    pub nx: usize,
    pub nv: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub v_max: f64,
    pub boundary: Boundary,
    pub mu: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub kernel: Kernel,
    pub alpha: f64,
    pub beta: f64,
    pub r0: f64,
    pub kinetic_init: KineticInit,
    pub kinetic_amplitude: f64,
    pub kinetic_radius: f64,
    pub kinetic_center_v: Vec<f64>,
    pub kinetic_x_amp: f64,
    pub fluid_density: DensityInit,
    pub rho0: f64,
    pub rho_amp: f64,
    pub rho_width: f64,
    /// Inner and outer radius of a zero-density shell around the box centre.
    pub vacuum_annulus: Option<(f64, f64)>,
    pub fluid_velocity: VelocityInit,
    pub u_amp: f64,
    pub u_mode: usize,
    /// Fluid speed assumed by the velocity-box guard; defaults to max|u₀|.
    pub guard_fluid_speed: Option<f64>,
    pub cfl: f64,
    pub max_dt: f64,
    pub t_end: Option<f64>,
    pub t0: Option<f64>,
    pub picard_max_iter: usize,
    pub picard_tol: f64,
    pub diag_every: usize,
    pub monitor_abort: Option<f64>,
    pub seed: u64,
    pub threads: Option<usize>,
}

/// (key, default or "required", meaning)
pub const KEYS: &[(&str, &str, &str)] = &[
    ("dim", "required", "spatial and velocity dimension, 1..=3"),
    ("nx", "required", "cells per spatial axis, >= 4"),
    ("nv", "required", "cells per velocity axis, >= 4"),
    ("v_max", "required", "velocity box half-width"),
    ("x_min", "0", "lower spatial bound on every axis"),
    ("x_max", "1", "upper spatial bound on every axis"),
    ("boundary", "periodic", "periodic | clamped"),
    ("mu", "required", "shear viscosity, > 0"),
    ("lambda", "0", "bulk viscosity, 2*mu + dim*lambda >= 0"),
    ("gamma", "required", "adiabatic exponent, > 1"),
    ("kernel", "smooth", "smooth | constant_one | table"),
    ("kernel_length", "1", "length scale of the smooth kernel"),
    ("kernel_dr", "-", "node spacing of a table kernel"),
    ("kernel_table", "-", "comma-separated node values of a table kernel"),
    ("alpha", "3.5", "weight exponent, > 3"),
    ("beta", "1", "weight exponent, > 1/2"),
    ("r0", "1", "initial velocity-support radius, > 0"),
    ("kinetic_init", "bump", "zero | bump | two_beam | random"),
    ("kinetic_amplitude", "1", "bump amplitude A, >= 0"),
    ("kinetic_radius", "r0", "bump radius in v"),
    ("kinetic_center_v", "0", "bump centre in v, one value or dim values"),
    ("kinetic_x_amp", "0", "spatial modulation 1 + eps*cos, |eps| < 1"),
    ("fluid_density", "uniform", "uniform | gaussian | zero"),
    ("rho0", "1", "background density, >= 0"),
    ("rho_amp", "0.5", "gaussian bump amplitude"),
    ("rho_width", "0.1", "gaussian bump width"),
    ("vacuum_annulus", "none", "`inner,outer` radii of a zero-density shell"),
    ("fluid_velocity", "zero", "zero | mode"),
    ("u_amp", "0.1", "velocity mode amplitude"),
    ("u_mode", "1", "velocity mode number"),
    ("guard_fluid_speed", "max|u0|", "fluid speed used by the velocity-box guard"),
    ("cfl", "0.4", "safety factor in (0, 1]"),
    ("max_dt", "1", "upper bound on the time step"),
    ("t_end", "-", "final time of `run`"),
    ("t0", "-", "window of `picard`"),
    ("picard_max_iter", "25", "iteration cap"),
    ("picard_tol", "1e-10", "stop once sup_t F falls below this"),
    ("diag_every", "1", "diagnostics cadence in steps"),
    ("monitor_abort", "none", "stop when the blowup monitor exceeds this"),
    ("seed", "0", "RNG seed for randomized data"),
    ("threads", "none", "worker threads; results do not depend on it"),
];

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key).map(|(_, v)| v)
    }

    fn parse<T: FromStr>(&mut self, key: &str) -> CResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|e| ConfigError::Parse {
                key: key.into(),
                value: v.clone(),
                reason: e.to_string(),
            }),
        }
    }

    fn or<T: FromStr>(&mut self, key: &str, default: T) -> CResult<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.parse(key)?.unwrap_or(default))
    }

    fn required<T: FromStr>(&mut self, key: &str) -> CResult<T>
    where
        T::Err: std::fmt::Display,
    {
        self.parse(key)?.ok_or_else(|| ConfigError::MissingKey(key.into()))
    }

    fn list(&mut self, key: &str) -> CResult<Option<Vec<f64>>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map(Some)
                .map_err(|e| ConfigError::Parse {
                    key: key.into(),
                    value: v.clone(),
                    reason: e.to_string(),
                }),
        }
    }
}

fn violation(key: &str, value: impl std::fmt::Display, constraint: &str) -> ConfigError {
    ConfigError::Constraint {
        key: key.into(),
        value: value.to_string(),
        constraint: constraint.into(),
    }
}

fn check(ok: bool, key: &str, value: impl std::fmt::Display, constraint: &str) -> CResult<()> {
    if ok {
        Ok(())
    } else {
        Err(violation(key, value, constraint))
    }
}

fn tokenize(text: &str) -> CResult<Entries> {
    let mut map = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = no + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                text: content.into(),
            });
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                text: content.into(),
            });
        }
        if !KEYS.iter().any(|(name, _, _)| *name == k) {
            return Err(ConfigError::UnknownKey { line, key: k.into() });
        }
        if map.insert(k.to_string(), (line, v.to_string())).is_some() {
            return Err(ConfigError::Duplicate { line, key: k.into() });
        }
    }
    Ok(Entries { map })
}

fn parse_boundary(s: &str) -> Result<Boundary, String> {
    match s {
        "periodic" => Ok(Boundary::Periodic),
        "clamped" => Ok(Boundary::Clamped),
        _ => Err("expected periodic or clamped".into()),
    }
}

/// Parses and validates a configuration. Checks only scalars, so nothing
/// large is allocated before every constraint has passed.
pub fn parse_config(text: &str) -> CResult<SimConfig> {
    let mut e = tokenize(text)?;

    let dim: usize = e.required("dim")?;
    check((1..=MAX_DIM).contains(&dim), "dim", dim, "1 <= dim <= 3")?;
    let nx: usize = e.required("nx")?;
    check(nx >= MIN_CELLS, "nx", nx, "nx >= 4")?;
    let nv: usize = e.required("nv")?;
    check(nv >= MIN_CELLS, "nv", nv, "nv >= 4")?;
    let v_max: f64 = e.required("v_max")?;
    check(v_max > 0.0 && v_max.is_finite(), "v_max", v_max, "v_max > 0")?;
    let x_min: f64 = e.or("x_min", 0.0)?;
    let x_max: f64 = e.or("x_max", 1.0)?;
    check(x_max > x_min && (x_max - x_min).is_finite(), "x_max", x_max, "x_max > x_min")?;
    let boundary = match e.take("boundary") {
        None => Boundary::Periodic,
        Some(v) => parse_boundary(&v).map_err(|reason| ConfigError::Parse {
            key: "boundary".into(),
            value: v.clone(),
            reason,
        })?,
    };

    let mu: f64 = e.required("mu")?;
    check(mu > 0.0 && mu.is_finite(), "mu", mu, "mu > 0 (viscosity)")?;
    let lambda: f64 = e.or("lambda", 0.0)?;
    check(
        2.0 * mu + dim as f64 * lambda >= 0.0,
        "lambda",
        lambda,
        "2*mu + dim*lambda >= 0 (viscosity restriction)",
    )?;
    let gamma: f64 = e.required("gamma")?;
    check(gamma > 1.0 && gamma.is_finite(), "gamma", gamma, "gamma > 1 (pressure P = rho^gamma)")?;

    let kernel_kind = e.take("kernel").unwrap_or_else(|| "smooth".into());
    let kernel_length: Option<f64> = e.parse("kernel_length")?;
    let kernel_dr: Option<f64> = e.parse("kernel_dr")?;
    let kernel_table = e.list("kernel_table")?;
    let kernel = match kernel_kind.as_str() {
        "smooth" => Kernel::Smooth {
            length: kernel_length.unwrap_or(1.0),
        },
        "constant_one" => Kernel::ConstantOne,
        "table" => Kernel::Table {
            dr: kernel_dr.ok_or_else(|| ConfigError::MissingKey("kernel_dr".into()))?,
            values: kernel_table.ok_or_else(|| ConfigError::MissingKey("kernel_table".into()))?,
        },
        other => {
            return Err(ConfigError::Parse {
                key: "kernel".into(),
                value: other.into(),
                reason: "expected smooth, constant_one or table".into(),
            })
        }
    };
    if let Err(v) = kernel.validate() {
        return Err(violation(
            "kernel",
            kernel.name(),
            &format!("positive nonincreasing phi with max(|phi|, |phi'|) <= 1: {v}"),
        ));
    }

    let alpha: f64 = e.or("alpha", 3.5)?;
    check(alpha > 3.0 && alpha.is_finite(), "alpha", alpha, "alpha > 3 (weight exponent)")?;
    let beta: f64 = e.or("beta", 1.0)?;
    check(beta > 0.5 && beta.is_finite(), "beta", beta, "beta > 1/2 (weight exponent)")?;
    let r0: f64 = e.or("r0", 1.0)?;
    check(r0 > 0.0 && r0.is_finite(), "r0", r0, "r0 > 0 (initial velocity support radius)")?;

    let kinetic_init: KineticInit = e.or("kinetic_init", KineticInit::Bump)?;
    let kinetic_amplitude: f64 = e.or("kinetic_amplitude", 1.0)?;
    check(
        kinetic_amplitude >= 0.0 && kinetic_amplitude.is_finite(),
        "kinetic_amplitude",
        kinetic_amplitude,
        "kinetic_amplitude >= 0 (f0 >= 0)",
    )?;
    let kinetic_radius: f64 = e.or("kinetic_radius", r0)?;
    check(kinetic_radius > 0.0, "kinetic_radius", kinetic_radius, "kinetic_radius > 0")?;
    let mut kinetic_center_v = e.list("kinetic_center_v")?.unwrap_or_else(|| vec![0.0]);
    if kinetic_center_v.len() == 1 {
        kinetic_center_v = vec![kinetic_center_v[0]; dim];
    }
    check(
        kinetic_center_v.len() == dim,
        "kinetic_center_v",
        format!("{kinetic_center_v:?}"),
        "one value or dim values",
    )?;
    let vc = kinetic_center_v.iter().map(|x| x * x).sum::<f64>().sqrt();
    check(
        vc + kinetic_radius <= r0 * (1.0 + 1e-12),
        "kinetic_radius",
        kinetic_radius,
        "|kinetic_center_v| + kinetic_radius <= r0 (supp_v f0 inside B(r0))",
    )?;
    let kinetic_x_amp: f64 = e.or("kinetic_x_amp", 0.0)?;
    check(kinetic_x_amp.abs() < 1.0, "kinetic_x_amp", kinetic_x_amp, "|kinetic_x_amp| < 1 (f0 >= 0)")?;

    let fluid_density: DensityInit = e.or("fluid_density", DensityInit::Uniform)?;
    let rho0: f64 = e.or("rho0", 1.0)?;
    check(rho0 >= 0.0 && rho0.is_finite(), "rho0", rho0, "rho0 >= 0")?;
    let rho_amp: f64 = e.or("rho_amp", 0.5)?;
    check(rho_amp >= 0.0, "rho_amp", rho_amp, "rho_amp >= 0 (rho >= 0)")?;
    let rho_width: f64 = e.or("rho_width", 0.1)?;
    check(rho_width > 0.0, "rho_width", rho_width, "rho_width > 0")?;
    let vacuum_annulus = match e.list("vacuum_annulus")? {
        None => None,
        Some(v) => {
            check(
                v.len() == 2 && v[0] >= 0.0 && v[1] > v[0],
                "vacuum_annulus",
                format!("{v:?}"),
                "two radii 0 <= inner < outer",
            )?;
            Some((v[0], v[1]))
        }
    };
    let fluid_velocity: VelocityInit = e.or("fluid_velocity", VelocityInit::Zero)?;
    let u_amp: f64 = e.or("u_amp", 0.1)?;
    check(u_amp.is_finite(), "u_amp", u_amp, "finite u_amp")?;
    let u_mode: usize = e.or("u_mode", 1)?;
    let guard_fluid_speed: Option<f64> = e.parse("guard_fluid_speed")?;
    if let Some(g) = guard_fluid_speed {
        check(g >= 0.0, "guard_fluid_speed", g, "guard_fluid_speed >= 0")?;
    }

    let cfl: f64 = e.or("cfl", 0.4)?;
    check(cfl > 0.0 && cfl <= 1.0, "cfl", cfl, "0 < cfl <= 1")?;
    let max_dt: f64 = e.or("max_dt", 1.0)?;
    check(max_dt > 0.0, "max_dt", max_dt, "max_dt > 0")?;
    let t_end: Option<f64> = e.parse("t_end")?;
    let t0: Option<f64> = e.parse("t0")?;
    if t_end.is_none() && t0.is_none() {
        return Err(ConfigError::MissingKey("t_end".into()));
    }
    if let Some(t) = t_end {
        check(t > 0.0 && t.is_finite(), "t_end", t, "t_end > 0")?;
    }
    if let Some(t) = t0 {
        check(t > 0.0 && t.is_finite(), "t0", t, "t0 > 0")?;
    }
    let picard_max_iter: usize = e.or("picard_max_iter", 25)?;
    check(picard_max_iter >= 1, "picard_max_iter", picard_max_iter, "picard_max_iter >= 1")?;
    let picard_tol: f64 = e.or("picard_tol", 1e-10)?;
    check(picard_tol > 0.0, "picard_tol", picard_tol, "picard_tol > 0")?;
    let diag_every: usize = e.or("diag_every", 1)?;
    check(diag_every >= 1, "diag_every", diag_every, "diag_every >= 1")?;
    let monitor_abort: Option<f64> = e.parse("monitor_abort")?;
    if let Some(m) = monitor_abort {
        check(m > 0.0, "monitor_abort", m, "monitor_abort > 0")?;
    }
    let seed: u64 = e.or("seed", 0)?;
    let threads: Option<usize> = e.parse("threads")?;
    if let Some(t) = threads {
        check(t >= 1, "threads", t, "threads >= 1")?;
    }

    debug_assert!(e.map.is_empty(), "every known key is consumed");
    Ok(SimConfig {
        dim,
        nx,
        nv,
        x_min,
        x_max,
        v_max,
        boundary,
        mu,
        lambda,
        gamma,
        kernel,
        alpha,
        beta,
        r0,
        kinetic_init,
        kinetic_amplitude,
        kinetic_radius,
        kinetic_center_v,
        kinetic_x_amp,
        fluid_density,
        rho0,
        rho_amp,
        rho_width,
        vacuum_annulus,
        fluid_velocity,
        u_amp,
        u_mode,
        guard_fluid_speed,
        cfl,
        max_dt,
        t_end,
        t0,
        picard_max_iter,
        picard_tol,
        diag_every,
        monitor_abort,
        seed,
        threads,
    })
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Writes every field back as `key = value`; `parse_config(&render(c)) == c`.
pub fn render(c: &SimConfig) -> String {
    let mut s = String::new();
    let mut put = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    put("dim", c.dim.to_string());
    put("nx", c.nx.to_string());
    put("nv", c.nv.to_string());
    put("v_max", c.v_max.to_string());
    put("x_min", c.x_min.to_string());
    put("x_max", c.x_max.to_string());
    put("boundary", c.boundary.as_str().into());
    put("mu", c.mu.to_string());
    put("lambda", c.lambda.to_string());
    put("gamma", c.gamma.to_string());
    put("kernel", c.kernel.name().into());
    match &c.kernel {
        Kernel::Smooth { length } => put("kernel_length", length.to_string()),
        Kernel::ConstantOne => {}
        Kernel::Table { dr, values } => {
            put("kernel_dr", dr.to_string());
            put("kernel_table", join(values));
        }
    }
    put("alpha", c.alpha.to_string());
    put("beta", c.beta.to_string());
    put("r0", c.r0.to_string());
    put("kinetic_init", c.kinetic_init.as_str().into());
    put("kinetic_amplitude", c.kinetic_amplitude.to_string());
    put("kinetic_radius", c.kinetic_radius.to_string());
    put("kinetic_center_v", join(&c.kinetic_center_v));
    put("kinetic_x_amp", c.kinetic_x_amp.to_string());
    put("fluid_density", c.fluid_density.as_str().into());
    put("rho0", c.rho0.to_string());
    put("rho_amp", c.rho_amp.to_string());
    put("rho_width", c.rho_width.to_string());
    if let Some((a, b)) = c.vacuum_annulus {
        put("vacuum_annulus", join(&[a, b]));
    }
    put("fluid_velocity", c.fluid_velocity.as_str().into());
    put("u_amp", c.u_amp.to_string());
    put("u_mode", c.u_mode.to_string());
    if let Some(g) = c.guard_fluid_speed {
        put("guard_fluid_speed", g.to_string());
    }
    put("cfl", c.cfl.to_string());
    put("max_dt", c.max_dt.to_string());
    if let Some(t) = c.t_end {
        put("t_end", t.to_string());
    }
    if let Some(t) = c.t0 {
        put("t0", t.to_string());
    }
    put("picard_max_iter", c.picard_max_iter.to_string());
    put("picard_tol", c.picard_tol.to_string());
    put("diag_every", c.diag_every.to_string());
    if let Some(m) = c.monitor_abort {
        put("monitor_abort", m.to_string());
    }
    put("seed", c.seed.to_string());
    if let Some(t) = c.threads {
        put("threads", t.to_string());
    }
    s
}
