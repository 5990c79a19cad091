use ftmav_core::actuation::{build_actuation_matrix, CapacityVector};
use ftmav_core::control::{ClosedLoop, FlatReference, FlatSample, Gains, SimState};
use ftmav_core::fdi::{CapacityEstimator, FdiConfig, FdiSample};
use ftmav_core::maneuverability::{hover_feasibility, ControlPolytope, Controllability, FaultCase};
use ftmav_core::planner::{solve_plan, FlatModel, Mission, PlannerMode, PolytopeLibrary, Waypoint};
use ftmav_core::vehicle::{gyro_sum, ControlInput, VehicleParams};
use nalgebra::Vector3;
use proptest::prelude::*;

fn octo() -> VehicleParams {
    VehicleParams::stock_octo("PNPNPNPN")
}

#[test]
fn planned_hop_is_tracked() {
    let p = octo();
    let wp = vec![Waypoint::new([0.0, 0.0, 2.0, 0.0]), Waypoint::new([1.0, 0.5, 2.5, 0.0])];
    let mission = Mission::new(wp, 8.0, FlatModel::from_params(&p));
    let lib = PolytopeLibrary::build(&p, &[]).unwrap();
    let plan = solve_plan(&mission, &PlannerMode::Rip, &lib).unwrap();
    assert!(plan.feasible);
    let reference = FlatReference::new(plan.flat_reference()).unwrap();

    let mut cl = ClosedLoop::new(p.clone(), Gains::default()).unwrap();
    let mut sim = SimState::hover(&p, Vector3::new(0.0, 0.0, 2.0));
    let hat = CapacityVector::healthy(8);
    let steps = (10.0 / 0.002) as usize;
    for k in 0..steps {
        cl.step(&mut sim, &reference.at(k as f64 * 0.002), &hat).unwrap();
    }
    let err = (sim.rigid.pos - Vector3::new(1.0, 0.5, 2.5)).norm();
    assert!(err < 0.05, "final error {err}");
}

/// Horizontal circle of radius 0.5 m at 1 rad/s, starting at `c`; hover alone does not excite the regressor.
fn circle(t: f64, c: Vector3<f64>) -> FlatSample {
    let (r, w) = (0.5, 1.0);
    let mut x = [0.0; 5];
    let mut y = [0.0; 5];
    for k in 0..5 {
        let phase = w * t + k as f64 * std::f64::consts::FRAC_PI_2;
        x[k] = r * w.powi(k as i32) * phase.cos();
        y[k] = r * w.powi(k as i32) * phase.sin();
    }
    x[0] += c.x - r;
    y[0] += c.y;
    FlatSample { t, x, y, z: [c.z, 0.0, 0.0], psi: [0.0; 3] }
}

#[test]
fn estimator_isolates_a_failed_rotor_on_a_circle() {
    let p = octo();
    let a = build_actuation_matrix(&p).unwrap();
    let cfg = FdiConfig::default();
    let every = (cfg.period() / 0.002).round() as usize;
    let mut est = CapacityEstimator::new(p.clone(), a, cfg).unwrap();
    let mut cl = ClosedLoop::new(p.clone(), Gains::default()).unwrap();
    let pos = Vector3::new(0.0, 0.0, 2.0);
    let mut sim = SimState::hover(&p, pos);
    let mut hat = CapacityVector::healthy(8);
    let mut acc = [0.0; 8];
    let mut isolated = None;
    for k in 0..(4.0 / 0.002) as usize {
        let t = k as f64 * 0.002;
        if k % every == 0 {
            let omega_sq = if k == 0 { sim.motors.squared() } else { acc.iter().map(|v| v / every as f64).collect() };
            acc.iter_mut().for_each(|v| *v = 0.0);
            let sample = FdiSample { t, rates: sim.rigid.rates, omega_sq, w_g: gyro_sum(&sim.motors.speeds, &p.pattern) };
            if let Ok(h) = est.push(sample) {
                hat = h.clone();
            }
            if isolated.is_none() && hat.0[4] < 0.05 {
                isolated = Some(t);
            }
        }
        if (t - 1.0).abs() < 1e-9 {
            sim.theta.0[4] = 0.0;
        }
        let step = cl.step(&mut sim, &circle(t, pos), &hat).unwrap();
        acc.iter_mut().zip(&step.omega_sq_mean).for_each(|(a, v)| *a += v);
    }
    let t = isolated.expect("rotor 5 isolated");
    assert!(t > 1.0 && t <= 2.0, "isolated at {t}");
    assert!(hat.0.iter().enumerate().all(|(i, v)| i == 4 || *v > 0.95));
    assert!((sim.rigid.pos - circle(4.0, pos).position()).norm() < 0.2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn hover_verdict_agrees_with_polytope(pattern in prop::sample::select(vec!["PNPNPNPN", "PPNNPPNN"]), i in 0usize..8, j in 0usize..8) {
        prop_assume!(i != j);
        let p = VehicleParams::stock_octo(pattern);
        let a = build_actuation_matrix(&p).unwrap();
        let theta = FaultCase::new(vec![i, j]).capacity(8);
        let hover = ControlInput::hover(&p);
        let v = hover_feasibility(&a, &theta, &hover, p.omega_max).unwrap();
        let poly = ControlPolytope::for_capacity(&a, &theta, p.omega_max).unwrap();
        let inside = poly.contains(&hover, 1e-6);
        prop_assert_eq!(v.class == Controllability::Controllable, inside);
        let achieved: Vec<f64> = (0..4).map(|r| hover.to_array()[r] + v.e_p[r]).collect();
        prop_assert!(poly.contains(&ControlInput::from_slice(&achieved), 1e-6));
    }
}
