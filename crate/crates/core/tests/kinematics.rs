use hscs::kinematics::{
    build_system, channel_kinematics, csf_parameters, effective_charges, from_spheroidal, hyperradius,
    hyperradius_jacobi, to_spheroidal, ChannelStatus, InternalPoint,
};
use proptest::prelude::*;

fn masses() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.05f64..300.0, 0.05f64..300.0, 0.05f64..300.0)
}

/// Triangle sides `(r1, r2, R)` from the two legs and the angle between them.
fn triangle() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.01f64..50.0, 0.01f64..50.0, 0.01f64..3.13).prop_map(|(r1, big_r, angle)| {
        let r2 = (r1 * r1 + big_r * big_r - 2.0 * r1 * big_r * angle.cos()).sqrt();
        (r1, r2, big_r)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn spheroidal_round_trip(xi in 1.0f64..200.0, eta in -1.0f64..1.0, big_r in 0.01f64..100.0) {
        let (r1, r2, r) = from_spheroidal(xi, eta, big_r);
        let (x, e) = to_spheroidal(r1, r2, r).unwrap();
        prop_assert!((x - xi).abs() < 1e-12 * xi);
        prop_assert!((e - eta).abs() < 1e-12);
    }

    #[test]
    fn hyperradius_forms_agree((m1, m2, m3) in masses(), (r1, r2, big_r) in triangle()) {
        let system = build_system(m1, m2, m3, 1.0, 1.3).unwrap();
        let a = hyperradius(&system, r1, r2, big_r).unwrap();
        let b = hyperradius_jacobi(&system, r1, r2, big_r).unwrap();
        prop_assert!((a - b).abs() < 1e-10 * a);
    }
}

proptest! {
    #[test]
    fn focal_distance_identity((m1, m2, m3) in masses()) {
        let system = build_system(m1, m2, m3, 1.0, 2.0).unwrap();
        let g = &system.geometry;
        prop_assert!((g.t1 + g.t2 - system.focal_identity()).abs() < 1e-14 * g.d);
        prop_assert_eq!(g.d, g.t1 + g.t2);
    }

    #[test]
    fn a_dominates_b((m1, m2, m3) in masses(), z1 in 0.1f64..5.0, z2 in 0.1f64..5.0, rho in 0.0f64..1000.0, eps in -100.0f64..-1e-6) {
        prop_assume!((z1 - z2).abs() > 1e-3 || (m1 - m2).abs() > 1e-3);
        if let Ok(system) = build_system(m1, m2, m3, z1, z2) {
            let p = csf_parameters(&system, rho, eps).unwrap();
            prop_assert!(p.a >= p.b.abs());
            let (c1, c2) = effective_charges(&system, rho);
            let d = system.geometry.d;
            prop_assert!((p.a - 0.5 * d * (c1 + c2)).abs() <= 1e-12 * p.a.max(1.0));
        }
    }

    #[test]
    fn dilation((m1, m2, m3) in masses(), (r1, r2, big_r) in triangle(), s in 0.01f64..100.0) {
        let system = build_system(m1, m2, m3, 1.0, 2.0).unwrap();
        let a = InternalPoint::from_distances(&system, r1, r2, big_r).unwrap();
        let b = InternalPoint::from_distances(&system, s * r1, s * r2, s * big_r).unwrap();
        prop_assert!((b.rho - s * a.rho).abs() < 1e-12 * b.rho);
        for (x, y) in [(a.xi, b.xi), (a.eta, b.eta), (a.t, b.t), (a.chi, b.chi), (a.theta, b.theta)] {
            prop_assert!((x - y).abs() < 1e-9 * x.abs().max(1.0));
        }
    }
}

#[test]
fn threshold_example() {
    let system = build_system(1.0, 2.0, 1.0, 1.0, 2.0).unwrap();
    let ch = channel_kinematics(&system, -1.0, 2, 1).unwrap();
    assert!((ch.threshold + 4.0 / 3.0).abs() < 1e-14);
    assert!((ch.momentum - (1.0f64 / 3.0).sqrt()).abs() < 1e-14);
    assert_eq!(ch.status, ChannelStatus::Open);

    let unit = channel_kinematics(&system, -0.1, 1, 1).unwrap();
    for rho in [1.0, 10.0, 1e4] {
        assert_eq!(unit.gamma_bar(rho), 0.0);
    }
    let at = channel_kinematics(&system, ch.threshold, 2, 1).unwrap();
    assert_eq!((at.status, at.momentum), (ChannelStatus::Threshold, 0.0));
    let closed = channel_kinematics(&system, -2.0, 2, 1).unwrap();
    assert_eq!(closed.status, ChannelStatus::Closed);
    assert!((closed.momentum - (2.0f64 / 3.0).sqrt()).abs() < 1e-14);
}
