use bosonic_lindblad::qubitspeed::{self, GridError};

fn grid(n: usize, t_max: f64) -> Vec<f64> {
    (0..=n).map(|k| t_max * k as f64 / n as f64).collect()
}

#[test]
fn traces_have_consistent_shapes_and_start_at_unit_fidelity() {
    let times = grid(50, 5.0);
    for ch in qubitspeed::tilt_family(1.0) {
        let tr = qubitspeed::fidelity_qsl(&ch, &qubitspeed::reference_qubit(), 0.1, &times).unwrap();
        assert_eq!(tr.v.len(), times.len());
        assert_eq!(tr.fidelity.len(), times.len());
        assert!((tr.fidelity[0] - 1.0).abs() < 1e-12);
        assert!(tr.v.iter().all(|v| v.is_finite() && *v >= 0.0));
    }
}

#[test]
fn zero_temperature_total_speed_is_v0() {
    let ch = qubitspeed::tilt_family(1.0)[1];
    let q = qubitspeed::reference_qubit();
    for t in [0.0, 0.5, 2.0] {
        let v = qubitspeed::total_speed(&ch, &q, 0.0, t);
        let v0 = qubitspeed::v0_speed(&ch, &q, t);
        assert!((v - v0).abs() <= 1e-12 * (1.0 + v0));
    }
}

#[test]
fn bad_grids_are_rejected() {
    let ch = qubitspeed::tilt_family(1.0)[0];
    let q = qubitspeed::reference_qubit();
    assert_eq!(qubitspeed::fidelity_qsl(&ch, &q, 0.1, &[]).unwrap_err(), GridError::Empty);
    assert_eq!(qubitspeed::fidelity_qsl(&ch, &q, 0.1, &[0.5, 1.0]).unwrap_err(), GridError::Start(0.5));
    assert_eq!(qubitspeed::fidelity_qsl(&ch, &q, 0.1, &[0.0, 1.0, 1.0]).unwrap_err(), GridError::NotMonotone);
}

#[test]
fn sweep_is_channel_major_and_matches_single_traces() {
    let chs = qubitspeed::tilt_family(1.0);
    let q = qubitspeed::reference_qubit();
    let temps = qubitspeed::REFERENCE_TEMPERATURES;
    let times = grid(10, 2.0);
    let all = qubitspeed::sweep(&chs, &q, &temps, &times).unwrap();
    assert_eq!(all.len(), 9);
    for (i, ch) in chs.iter().enumerate() {
        for (j, &n) in temps.iter().enumerate() {
            assert_eq!(all[3 * i + j], qubitspeed::fidelity_qsl(ch, &q, n, &times).unwrap());
        }
    }
}

#[test]
fn speed_surface_is_theta_major() {
    let ch = qubitspeed::tilt_family(1.0)[0];
    let times = grid(4, 1.0);
    let thetas = [0.0, 1.0, 2.0];
    let pts = qubitspeed::speed_surface(&ch, 0.1, &times, &thetas);
    assert_eq!(pts.len(), 15);
    assert_eq!(pts[5].theta, 1.0);
    assert_eq!(pts[5].t, 0.0);
    let direct = qubitspeed::total_speed(&ch, &qubitspeed::initial_qubit(1.0, 0.0), 0.1, times[2]);
    assert_eq!(pts[7].v, direct);
}
