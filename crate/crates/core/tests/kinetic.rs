use proptest::prelude::*;

use flockns::alignment::{AlignmentOperator, Kernel};
use flockns::diagnostics::mass_l1;
use flockns::kinetic::{kinetic_step, support_radius, trace_back};
use flockns::phase_space::{Boundary, KineticState, PhaseGrid, SpatialGrid};
use flockns::Error;

fn two_beam(nx: usize, nv: usize) -> KineticState {
    let s = SpatialGrid::cube(1, 0.0, 2.0, nx, Boundary::Periodic).unwrap();
    let g = PhaseGrid::cube(s, 2.0, nv).unwrap();
    let nvt = g.nv_total();
    let f = (0..g.len())
        .map(|idx| {
            let x = g.space().center(idx / nvt)[0];
            let v = g.v_center(idx % nvt)[0];
            let beam = |c: f64| (0.16 - (v - c) * (v - c)).max(0.0).powi(2);
            (1.0 + 0.3 * (std::f64::consts::PI * x).cos()) * (beam(0.5) + beam(-0.5))
        })
        .collect();
    KineticState::from_values(g, f).unwrap()
}

#[test]
fn trace_back_composes_with_frozen_coefficients() {
    let (x, v, a, b, u) = ([0.3, -0.2], [1.1, -0.4], 0.7, [0.2, 0.5], [-0.1, 0.3]);
    let one = trace_back(&x, &v, a, &b, &u, 0.3).unwrap();
    let first = trace_back(&x, &v, a, &b, &u, 0.1).unwrap();
    let two = trace_back(&first.x[..2], &first.v[..2], a, &b, &u, 0.2).unwrap();
    for k in 0..2 {
        assert!((one.x[k] - two.x[k]).abs() < 1e-14);
        assert!((one.v[k] - two.v[k]).abs() < 1e-14);
    }
    assert!((one.amplification - first.amplification * two.amplification).abs() < 1e-13);
}

#[test]
fn zero_step_is_identity() {
    let r = trace_back(&[0.5], &[-0.3], 2.0, &[1.0], &[0.4], 0.0).unwrap();
    assert_eq!((r.x[0], r.v[0], r.amplification), (0.5, -0.3, 1.0));
}

#[test]
fn huge_exponent_is_a_timestep_error() {
    let r = trace_back(&[0.0], &[0.0], 29.0, &[0.0], &[0.0], 1.1);
    assert!(matches!(r, Err(Error::Timestep { .. })));
}

#[test]
fn mass_at_the_velocity_edge_escapes() {
    let s = SpatialGrid::cube(1, 0.0, 1.0, 4, Boundary::Periodic).unwrap();
    let g = PhaseGrid::cube(s.clone(), 1.0, 8).unwrap();
    let f: Vec<f64> = (0..g.len()).map(|i| if i % 8 == 7 { 1.0 } else { 0.0 }).collect();
    let mut kin = KineticState::from_values(g, f).unwrap();
    let af = AlignmentOperator::new(&s, Kernel::default()).fields_for(&mut kin).unwrap();
    assert!(matches!(kinetic_step(&kin, &[0.0; 4], &af, 0.3), Err(Error::SupportEscape { .. })));
}

/// Relative mass change over [0, 0.5] with u = 0 and φ ≡ 1.
fn two_beam_drift(n: usize) -> (f64, f64) {
    let mut kin = two_beam(n, n);
    let op = AlignmentOperator::new(kin.grid().space(), Kernel::ConstantOne);
    let m0 = mass_l1(&kin);
    let u = vec![0.0; n];
    let dt = 0.8 / n as f64;
    let mut worst_step = 0.0f64;
    for _ in 0..(0.5 / dt).round() as usize {
        let before = mass_l1(&kin);
        let af = op.fields_for(&mut kin).unwrap();
        kin = kinetic_step(&kin, &u, &af, dt).unwrap();
        worst_step = worst_step.max((mass_l1(&kin) - before).abs() / before);
    }
    ((mass_l1(&kin) - m0).abs() / m0, worst_step)
}

#[test]
fn two_beam_mass_drift_refines_at_first_order() {
    let (coarse, step_c) = two_beam_drift(64);
    let (fine, step_f) = two_beam_drift(128);
    assert!(step_c <= 1e-3 && step_f <= 1e-3, "{step_c} {step_f}");
    assert!(coarse / fine >= 1.8, "{coarse} {fine}");
}

#[test]
fn support_grows_by_at_most_one_stencil_per_step() {
    let mut kin = two_beam(16, 64);
    let op = AlignmentOperator::new(kin.grid().space(), Kernel::default());
    let u: Vec<f64> = (0..16).map(|i| 0.3 * (i as f64).sin()).collect();
    let dv = kin.grid().max_dv();
    for _ in 0..20 {
        let af = op.fields_for(&mut kin).unwrap();
        let r = support_radius(&kin, None);
        let dt = 0.02;
        let speed = af.max_b() + 0.3 + (1.0 + af.max_a()) * r;
        let next = kinetic_step(&kin, &u, &af, dt).unwrap();
        assert!(support_radius(&next, None) <= r + speed * dt + dv + 1e-12);
        kin = next;
    }
}

proptest! {
    #[test]
    fn steps_preserve_nonnegativity(
        f in prop::collection::vec(0.0f64..1.0, 8 * 8),
        u in prop::collection::vec(-0.5f64..0.5, 8),
        dt in 0.0f64..0.2,
    ) {
        let s = SpatialGrid::cube(1, 0.0, 1.0, 8, Boundary::Clamped).unwrap();
        let g = PhaseGrid::cube(s.clone(), 1.0, 8).unwrap();
        // keep the edge velocity cells empty so nothing escapes
        let f: Vec<f64> = f.iter().enumerate().map(|(i, x)| if i % 8 == 0 || i % 8 == 7 { 0.0 } else { 0.05 * x }).collect();
        let mut kin = KineticState::from_values(g, f).unwrap();
        let af = AlignmentOperator::new(&s, Kernel::default()).fields_for(&mut kin).unwrap();
        match kinetic_step(&kin, &u, &af, dt) {
            Ok(next) => prop_assert!(next.values().iter().all(|&x| x >= 0.0)),
            Err(Error::SupportEscape { .. }) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn trace_back_solves_the_characteristic_ode(
        x in -1.0f64..1.0, v in -2.0f64..2.0, a in 0.0f64..2.0,
        b in -1.0f64..1.0, u in -1.0f64..1.0, dt in 0.0f64..0.3,
    ) {
        // forward from the departure point must land back on (x, v)
        let back = trace_back(&[x], &[v], a, &[b], &[u], dt).unwrap();
        let lam = 1.0 + a;
        let c = (b + u) / lam;
        let e = (-lam * dt).exp();
        let v_fwd = c + (back.v[0] - c) * e;
        let x_fwd = back.x[0] + c * dt + (back.v[0] - c) * (1.0 - e) / lam;
        prop_assert!((v_fwd - v).abs() <= 1e-12 * (1.0 + v.abs()));
        prop_assert!((x_fwd - x).abs() <= 1e-12 * (1.0 + x.abs()));
    }
}
