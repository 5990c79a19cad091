mod common;

use ftmav_core::actuation::{build_actuation_matrix, effective_matrix};
use ftmav_core::maneuverability::{ControlPolytope, FaultCase};
use ftmav_core::vehicle::VehicleParams;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

#[test]
fn oracle_on_a_known_box() {
    let b = DMatrix::from_row_slice(4, 2, &[1.0, 1.0, 1.0, -1.0, 0.0, 0.0, 0.0, 0.0]);
    assert!(common::lp_feasible(&b, &[2.0, 0.0, 0.0, 0.0]));
    assert!(common::lp_feasible(&b, &[1.0, 0.5, 0.0, 0.0]));
    assert!(!common::lp_feasible(&b, &[2.1, 0.0, 0.0, 0.0]));
    assert!(!common::lp_feasible(&b, &[1.0, 0.0, 0.1, 0.0]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hexa_polytope_agrees_with_oracle(
        s in proptest::collection::vec(-0.2..1.2f64, 6),
        failed in proptest::option::of(0usize..6),
    ) {
        let p = VehicleParams::stock_hexa("PNPNPN");
        let a = build_actuation_matrix(&p).unwrap();
        let theta = FaultCase::new(failed.into_iter().collect()).capacity(6);
        let poly = ControlPolytope::for_capacity(&a, &theta, p.omega_max).unwrap();
        let b = effective_matrix(&a, &theta).unwrap() * (p.omega_max * p.omega_max);
        let v = &b * DVector::from_vec(s);
        let u = [v[0], v[1], v[2], v[3]];
        let margin = poly.halfspaces.iter().map(|h| h.margin(&u)).fold(f64::NEG_INFINITY, f64::max);
        prop_assume!(margin.abs() > 1e-6);
        prop_assert_eq!(margin < 0.0, common::lp_feasible(&b, &u));
    }
}
