//! Scalar functionals of the coupled state: masses, energy and its
//! dissipation budget, weighted Sobolev norms, the velocity-support ceiling,
//! the compatibility residual of initial data and the blowup monitor.

use crate::alignment::AlignmentOperator;
use crate::error::{Error, Result};
use crate::fluid::{pressure, FluidParams};
use crate::kinetic::support_radius;
use crate::phase_space::{
    grad_x, pairwise_sum, phase_grad_v, phase_grad_x, FluidState, KineticState, Moments, PhaseGrid,
    SpatialGrid, EPS_VAC, MAX_DIM,
};

/// Exponents of ω(x,v) = (1+|v|²)^{2+β} (1+|x−x_c|²+|v|²)^α.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightParams {
    alpha: f64,
    beta: f64,
    /// Shift of x_c away from the box centre.
    pub center_offset: [f64; MAX_DIM],
}

impl WeightParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 3.0 && alpha.is_finite()) {
            return Err(Error::Argument(format!("weight exponent alpha must be > 3, got {alpha}")));
        }
        if !(beta > 0.5 && beta.is_finite()) {
            return Err(Error::Argument(format!("weight exponent beta must be > 1/2, got {beta}")));
        }
        Ok(WeightParams {
            alpha,
            beta,
            center_offset: [0.0; MAX_DIM],
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// ω at position offset `dx` (from x_c) and velocity `v`.
    #[inline]
    pub fn omega(&self, dx: &[f64], v: &[f64]) -> f64 {
        let x2: f64 = dx.iter().map(|a| a * a).sum();
        let v2: f64 = v.iter().map(|a| a * a).sum();
        (1.0 + v2).powf(2.0 + self.beta) * (1.0 + x2 + v2).powf(self.alpha)
    }

    /// Λ(v) = (1+|v|²)^{(1+β)/2}.
    #[inline]
    pub fn lambda_weight(&self, v: &[f64]) -> f64 {
        let v2: f64 = v.iter().map(|a| a * a).sum();
        (1.0 + v2).powf(0.5 * (1.0 + self.beta))
    }
}

impl Default for WeightParams {
    fn default() -> Self {
        WeightParams::new(3.5, 1.0).expect("valid defaults")
    }
}

/// ω evaluated on every phase cell.
pub fn weight_table(grid: &PhaseGrid, w: &WeightParams) -> Vec<f64> {
    let d = grid.dim();
    let center = grid.space().box_center();
    let nv = grid.nv_total();
    (0..grid.len())
        .map(|idx| {
            let (xi, vj) = (idx / nv, idx % nv);
            let x = grid.space().center(xi);
            let mut dx = [0.0; MAX_DIM];
            for k in 0..d {
                dx[k] = x[k] - center[k] - w.center_offset[k];
            }
            w.omega(&dx[..d], &grid.v_center(vj)[..d])
        })
        .collect()
}

fn weighted_square(values: &[f64], omega: &[f64], vol: f64) -> f64 {
    let terms: Vec<f64> = values.iter().zip(omega).map(|(f, w)| f * f * w).collect();
    pairwise_sum(&terms) * vol
}

/// ∫f dx dv.
pub fn mass_l1(kin: &KineticState) -> f64 {
    pairwise_sum(kin.values()) * kin.grid().cell_volume()
}

/// ∫ρ dx.
pub fn fluid_mass(fl: &FluidState) -> f64 {
    pairwise_sum(&fl.rho) * fl.grid().cell_volume()
}

/// |f|_{L²_ω}.
pub fn weighted_l2(f: &[f64], grid: &PhaseGrid, w: &WeightParams) -> Result<f64> {
    if f.len() != grid.len() {
        return Err(Error::Mismatch("distribution does not match phase grid".into()));
    }
    let omega = weight_table(grid, w);
    Ok(weighted_square(f, &omega, grid.cell_volume()).sqrt())
}

/// |f|_{H¹_ω} = (|f|² + |∇ₓf|² + |∇ᵥf|²)^{1/2} in L²_ω.
pub fn weighted_h1(f: &[f64], grid: &PhaseGrid, w: &WeightParams) -> Result<f64> {
    Ok(weighted_norms(f, grid, w)?.1)
}

/// (|f|_{L²_ω}, |f|_{H¹_ω}) sharing one weight table.
pub fn weighted_norms(f: &[f64], grid: &PhaseGrid, w: &WeightParams) -> Result<(f64, f64)> {
    if f.len() != grid.len() {
        return Err(Error::Mismatch("distribution does not match phase grid".into()));
    }
    let omega = weight_table(grid, w);
    let vol = grid.cell_volume();
    let l2sq = weighted_square(f, &omega, vol);
    let mut h1sq = l2sq;
    for g in phase_grad_x(f, grid)?.iter().chain(phase_grad_v(f, grid)?.iter()) {
        h1sq += weighted_square(g, &omega, vol);
    }
    Ok((l2sq.sqrt(), h1sq.sqrt()))
}

/// (∫ω^{-1} dx dv)^{1/2}: the discrete constant with |f|_{L¹} ≤ C |f|_{L²_ω}.
pub fn l1_embedding_constant(grid: &PhaseGrid, w: &WeightParams) -> f64 {
    let inv: Vec<f64> = weight_table(grid, w).iter().map(|x| 1.0 / x).collect();
    (pairwise_sum(&inv) * grid.cell_volume()).sqrt()
}

/// Total energy ∫(½ρ|u|² + P/(γ−1)) dx + ½∫f|v|² dx dv.
pub fn energy(kin: &KineticState, fl: &FluidState, gamma: f64) -> Result<f64> {
    let m = kin.moments()?;
    Ok(fluid_energy(fl, gamma) + 0.5 * pairwise_sum(&m.m2) * fl.grid().cell_volume())
}

/// ∫(½ρ|u|² + P/(γ−1)) dx.
pub fn fluid_energy(fl: &FluidState, gamma: f64) -> f64 {
    let d = fl.grid().dim();
    let p = pressure(&fl.rho, gamma);
    let terms: Vec<f64> = (0..fl.rho.len())
        .map(|i| {
            let u = fl.velocity_at(i);
            let u2: f64 = u[..d].iter().map(|x| x * x).sum();
            0.5 * fl.rho[i] * u2 + p[i] / (gamma - 1.0)
        })
        .collect();
    pairwise_sum(&terms) * fl.grid().cell_volume()
}

/// Central-difference Jacobian ∂_k u_c, laid out `[cell][c][k]`.
pub fn velocity_jacobian(u: &[f64], grid: &SpatialGrid) -> Result<Vec<f64>> {
    let d = grid.dim();
    let cells = grid.len();
    let mut jac = vec![0.0; cells * d * d];
    for c in 0..d {
        let comp: Vec<f64> = (0..cells).map(|i| u[i * d + c]).collect();
        let g = grad_x(&comp, grid)?;
        for i in 0..cells {
            for k in 0..d {
                jac[(i * d + c) * d + k] = g[i * d + k];
            }
        }
    }
    Ok(jac)
}

/// μ|∇u|²_{L²} + (μ+λ)|∇·u|²_{L²}.
pub fn viscous_dissipation_rate(fl: &FluidState, params: &FluidParams) -> Result<f64> {
    let grid = fl.grid();
    let d = grid.dim();
    let jac = velocity_jacobian(&fl.velocity(), grid)?;
    let (grad2, div2): (Vec<f64>, Vec<f64>) = jac
        .chunks(d * d)
        .map(|j| {
            let g2: f64 = j.iter().map(|x| x * x).sum();
            let div: f64 = (0..d).map(|c| j[c * d + c]).sum();
            (g2, div * div)
        })
        .unzip();
    let vol = grid.cell_volume();
    Ok((params.mu * pairwise_sum(&grad2) + (params.mu + params.lambda) * pairwise_sum(&div2)) * vol)
}

/// ∫∫ f |u − v|² = Σ (n|u|² − 2u·m₁ + m₂) ΔV.
pub fn friction_rate(m: &Moments, u: &[f64], grid: &SpatialGrid) -> f64 {
    let d = m.dim;
    let terms: Vec<f64> = (0..m.n.len())
        .map(|i| {
            let ui = &u[i * d..(i + 1) * d];
            let u2: f64 = ui.iter().map(|x| x * x).sum();
            let um: f64 = ui.iter().zip(m.m1_at(i)).map(|(a, b)| a * b).sum();
            m.n[i] * u2 - 2.0 * um + m.m2[i]
        })
        .collect();
    pairwise_sum(&terms) * grid.cell_volume()
}

/// max over cells of the Frobenius norm of ∇u.
pub fn grad_u_linf(fl: &FluidState) -> Result<f64> {
    let d = fl.grid().dim();
    let jac = velocity_jacobian(&fl.velocity(), fl.grid())?;
    Ok(jac
        .chunks(d * d)
        .map(|j| j.iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max))
}

/// Initial-data compatibility: the force balance residual
/// G = μΔu₀ + (μ+λ)∇∇·u₀ − ∇P(ρ₀) + ∫f₀(v−u₀)dv.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompatibilityReport {
    /// |G/√ρ₀|_{L²} over cells with ρ₀ > ε_vac.
    pub weighted_l2: f64,
    /// max |G| over vacuum cells (0 if there are none).
    pub vacuum_max: f64,
}

pub fn compatibility_residual(kin: &KineticState, fl: &FluidState, params: &FluidParams) -> Result<CompatibilityReport> {
    let grid = fl.grid();
    let d = grid.dim();
    let u = fl.velocity();
    let p_field = pressure(&fl.rho, params.gamma);
    let mut g = crate::fluid::viscous_and_pressure(grid, &u, &p_field, params);
    let m = kin.moments()?;
    let drag = crate::fluid::drag_source(&m, &u);
    for (gi, di) in g.iter_mut().zip(&drag) {
        *gi += di;
    }
    let mut weighted = Vec::with_capacity(fl.rho.len());
    let mut vacuum_max = 0.0f64;
    for (i, &r) in fl.rho.iter().enumerate() {
        let g2: f64 = g[i * d..(i + 1) * d].iter().map(|x| x * x).sum();
        if r > EPS_VAC {
            weighted.push(g2 / r);
        } else {
            vacuum_max = vacuum_max.max(g2.sqrt());
        }
    }
    Ok(CompatibilityReport {
        weighted_l2: (pairwise_sum(&weighted) * grid.cell_volume()).sqrt(),
        vacuum_max,
    })
}

/// One row of the time series.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass_f: f64,
    pub mass_rho: f64,
    pub energy: f64,
    pub viscous_dissipation_cum: f64,
    pub friction_cum: f64,
    pub alignment_cum: f64,
    pub energy_residual: f64,
    pub support_radius: f64,
    pub support_ceiling: f64,
    pub f_l2w: f64,
    pub f_h1w: f64,
    pub rho_linf: f64,
    pub u_linf: f64,
    pub grad_u_linf: f64,
    pub blowup_monitor: f64,
}

/// Column names in CSV order.
pub const RECORD_FIELDS: [&str; 16] = [
    "t",
    "mass_f",
    "mass_rho",
    "energy",
    "viscous_dissipation_cum",
    "friction_cum",
    "alignment_cum",
    "energy_residual",
    "support_radius",
    "support_ceiling",
    "f_l2w",
    "f_h1w",
    "rho_linf",
    "u_linf",
    "grad_u_linf",
    "blowup_monitor",
];

impl DiagnosticsRecord {
    pub fn values(&self) -> [f64; 16] {
        [
            self.t,
            self.mass_f,
            self.mass_rho,
            self.energy,
            self.viscous_dissipation_cum,
            self.friction_cum,
            self.alignment_cum,
            self.energy_residual,
            self.support_radius,
            self.support_ceiling,
            self.f_l2w,
            self.f_h1w,
            self.rho_linf,
            self.u_linf,
            self.grad_u_linf,
            self.blowup_monitor,
        ]
    }

    pub fn from_values(v: &[f64; 16]) -> Self {
        DiagnosticsRecord {
            t: v[0],
            mass_f: v[1],
            mass_rho: v[2],
            energy: v[3],
            viscous_dissipation_cum: v[4],
            friction_cum: v[5],
            alignment_cum: v[6],
            energy_residual: v[7],
            support_radius: v[8],
            support_ceiling: v[9],
            f_l2w: v[10],
            f_h1w: v[11],
            rho_linf: v[12],
            u_linf: v[13],
            grad_u_linf: v[14],
            blowup_monitor: v[15],
        }
    }
}

/// Instantaneous dissipation rates and monitor integrand at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Rates {
    t: f64,
    viscous: f64,
    friction: f64,
    alignment: f64,
    monitor: f64,
}

/// Accumulates records; time integrals use the trapezoid rule between
/// consecutive recorded times.
#[derive(Debug, Clone)]
pub struct DiagnosticsTracker {
    params: FluidParams,
    weights: WeightParams,
    r0: f64,
    e0: Option<f64>,
    prev: Option<Rates>,
    viscous_cum: f64,
    friction_cum: f64,
    alignment_cum: f64,
    monitor_integral: f64,
    rho_sup: f64,
    target_sup: f64,
}

impl DiagnosticsTracker {
    pub fn new(params: FluidParams, weights: WeightParams, r0: f64) -> Self {
        DiagnosticsTracker {
            params,
            weights,
            r0,
            e0: None,
            prev: None,
            viscous_cum: 0.0,
            friction_cum: 0.0,
            alignment_cum: 0.0,
            monitor_integral: 0.0,
            rho_sup: 0.0,
            target_sup: 0.0,
        }
    }

    pub fn initial_energy(&self) -> Option<f64> {
        self.e0
    }

    /// Records the state at time `t`. `kin` must carry fresh moments for its
    /// current epoch, and `b_max` is max |b| of its alignment fields.
    pub fn record(
        &mut self,
        t: f64,
        kin: &KineticState,
        fl: &FluidState,
        op: &AlignmentOperator,
        b_max: f64,
    ) -> Result<DiagnosticsRecord> {
        let m = kin.moments()?;
        let grid = fl.grid();
        let u = fl.velocity();
        let e = energy(kin, fl, self.params.gamma)?;
        let e0 = *self.e0.get_or_insert(e);
        let u_linf = fl.max_speed();
        let gu = grad_u_linf(fl)?;
        let rates = Rates {
            t,
            viscous: viscous_dissipation_rate(fl, &self.params)?,
            friction: friction_rate(&m, &u, grid),
            alignment: op.dissipation(&m)?,
            monitor: u_linf + gu * gu,
        };
        if let Some(p) = self.prev {
            let h = 0.5 * (t - p.t);
            self.viscous_cum += h * (p.viscous + rates.viscous);
            self.friction_cum += h * (p.friction + rates.friction);
            self.alignment_cum += h * (p.alignment + rates.alignment);
            self.monitor_integral += h * (p.monitor + rates.monitor);
        }
        self.prev = Some(rates);
        let rho_linf = fl.max_density();
        self.rho_sup = self.rho_sup.max(rho_linf);
        self.target_sup = self.target_sup.max(b_max + u_linf);
        let (l2w, h1w) = weighted_norms(kin.values(), kin.grid(), &self.weights)?;
        let dissipated = self.viscous_cum + self.friction_cum + self.alignment_cum;
        Ok(DiagnosticsRecord {
            t,
            mass_f: mass_l1(kin),
            mass_rho: fluid_mass(fl),
            energy: e,
            viscous_dissipation_cum: self.viscous_cum,
            friction_cum: self.friction_cum,
            alignment_cum: self.alignment_cum,
            energy_residual: e + dissipated - e0,
            support_radius: support_radius(kin, None),
            support_ceiling: self.r0.max(self.target_sup) + 2.0 * kin.grid().max_dv(),
            f_l2w: l2w,
            f_h1w: h1w,
            rho_linf,
            u_linf,
            grad_u_linf: gu,
            blowup_monitor: self.rho_sup + self.monitor_integral,
        })
    }
}

/// Energy-identity residual per record: (t, raw, raw / E₀).
pub fn energy_identity_residual(records: &[DiagnosticsRecord]) -> Vec<(f64, f64, f64)> {
    let Some(first) = records.first() else {
        return Vec::new();
    };
    let e0 = first.energy;
    records
        .iter()
        .map(|r| {
            let raw = r.energy + r.viscous_dissipation_cum + r.friction_cum + r.alignment_cum - e0;
            let rel = if e0 > 0.0 { raw / e0 } else { raw };
            (r.t, raw, rel)
        })
        .collect()
}

/// Support radius against its ceiling at one recorded time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportCheck {
    pub t: f64,
    pub radius: f64,
    pub ceiling: f64,
    pub violated: bool,
}

pub fn support_bound_report(records: &[DiagnosticsRecord]) -> Vec<SupportCheck> {
    records
        .iter()
        .map(|r| SupportCheck {
            t: r.t,
            radius: r.support_radius,
            ceiling: r.support_ceiling,
            violated: r.support_radius > r.support_ceiling,
        })
        .collect()
}

/// Recomputes the blowup monitor sup ρ + ∫(|u|∞ + |∇u|∞²) from the recorded columns.
pub fn blowup_monitor(records: &[DiagnosticsRecord]) -> Vec<f64> {
    let mut out = Vec::with_capacity(records.len());
    let mut sup = 0.0f64;
    let mut integral = 0.0;
    let mut prev: Option<&DiagnosticsRecord> = None;
    for r in records {
        sup = sup.max(r.rho_linf);
        if let Some(p) = prev {
            let g = |x: &DiagnosticsRecord| x.u_linf + x.grad_u_linf * x.grad_u_linf;
            integral += 0.5 * (r.t - p.t) * (g(p) + g(r));
        }
        out.push(sup + integral);
        prev = Some(r);
    }
    out
}
