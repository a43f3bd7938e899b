use cascade_core::network::{
    complex_powers, equivalent_factor, power_angle_jacobians, solve_network, Impedance, Phasor,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn circuit() -> impl Strategy<Value = (Vec<Phasor>, Impedance, Vec<Impedance>)> {
    (2usize..6).prop_flat_map(|n| {
        (
            prop::collection::vec((1.0f64..100.0, -3.0f64..3.0), n),
            (0.5f64..50.0, 0.0f64..20.0),
            prop::collection::vec((0.0f64..1.0, 0.05f64..2.0), n),
        )
            .prop_map(|(v, (r, x), lines)| {
                (
                    v.into_iter().map(|(m, a)| Phasor::new(m, a)).collect(),
                    Impedance::new(r, x),
                    lines.into_iter().map(|(r, x)| Impedance::new(r, x)).collect(),
                )
            })
    })
}

proptest! {
    #[test]
    fn uniform_rotation_leaves_powers_unchanged((v, z, lines) in circuit(), shift in -3.0f64..3.0) {
        let base = solve_network(&v, z, &lines).unwrap();
        let rotated: Vec<Phasor> = v.iter().map(|p| Phasor::new(p.magnitude, p.angle + shift)).collect();
        let moved = solve_network(&rotated, z, &lines).unwrap();
        let scale = base.p.iter().chain(&base.q).fold(1.0f64, |m, x| m.max(x.abs()));
        for i in 0..v.len() {
            prop_assert!((base.p[i] - moved.p[i]).abs() <= 1e-10 * scale);
            prop_assert!((base.q[i] - moved.q[i]).abs() <= 1e-10 * scale);
        }
        prop_assert!((base.current.magnitude - moved.current.magnitude).abs() <= 1e-10 * base.current.magnitude.max(1.0));
    }

    #[test]
    fn trig_sums_match_phasor_products((v, z, lines) in circuit()) {
        let net = solve_network(&v, z, &lines).unwrap();
        let direct = complex_powers(&v, z, &lines).unwrap();
        let scale = direct.iter().fold(1.0f64, |m, s| m.max(s.norm()));
        for (i, s) in direct.iter().enumerate() {
            prop_assert!((Complex64::new(net.p[i], net.q[i]) - s).norm() <= 1e-10 * scale);
        }
    }

    #[test]
    fn jacobian_rows_sum_to_zero((v, z, lines) in circuit()) {
        let (tp, tq) = power_angle_jacobians(&v, z, &lines).unwrap();
        let scale = tp.iter().chain(&tq).flatten().fold(1.0f64, |m, x| m.max(x.abs()));
        for row in tp.iter().chain(&tq) {
            prop_assert!(row.iter().sum::<f64>().abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn load_voltage_is_load_times_current((v, z, lines) in circuit()) {
        let net = solve_network(&v, z, &lines).unwrap();
        let expect = z.to_complex() * net.current.to_complex();
        prop_assert!((net.load_voltage.to_complex() - expect).norm() <= 1e-10 * expect.norm().max(1.0));
    }
}

#[test]
fn single_source_matches_hand_calculation() {
    let z = Impedance::new(10.0, 0.0);
    let line = Impedance::new(0.0, 2.0);
    let v = [Phasor::new(100.0, 0.0)];
    let net = solve_network(&v, z, &[line]).unwrap();
    // I = 100/(10 + 2j), |I|² = 10000/104.
    let i2 = 10_000.0 / 104.0;
    assert!((net.p[0] - 10.0 * i2).abs() < 1e-9);
    assert!((net.q[0] - 2.0 * i2).abs() < 1e-9);
    let (zm, th) = equivalent_factor(z, &[line]).unwrap();
    assert!((zm - 1.0 / 104f64.sqrt()).abs() < 1e-15);
    assert!((th + (0.2f64).atan()).abs() < 1e-15);
}

#[test]
fn zero_total_impedance_is_rejected() {
    let v = [Phasor::new(1.0, 0.0)];
    assert!(solve_network(&v, Impedance::ZERO, &[Impedance::ZERO]).is_err());
}
