use proptest::prelude::*;
use qris_core::encoding::{
    amplitude_encode_damped, encode_channel_state, encode_input, hybrid_encode, normalize_image, rate_to_theta,
    InputMode, RateObservation, FEATURE_DIM, NUM_QUBITS,
};

fn raw_image() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, FEATURE_DIM).prop_filter("non-zero", |v| v.iter().any(|x| x.abs() > 1e-3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn damped_encoding_is_unit_norm_with_scaled_block(raw in raw_image(), gamma in 1e-3..=0.85f64) {
        let x = normalize_image(&raw, FEATURE_DIM).unwrap();
        let psi = amplitude_encode_damped(&x, gamma, 0.85).unwrap();
        prop_assert!((psi.norm_sqr() - 1.0).abs() < 1e-10);
        for (a, xi) in psi.amplitudes().iter().zip(x.values()) {
            prop_assert!((a.re - gamma * xi).abs() < 1e-12);
            prop_assert!(a.im == 0.0);
        }
        let tail: f64 = psi.amplitudes()[FEATURE_DIM..].iter().map(|a| a.norm_sqr()).sum();
        prop_assert!((tail - (1.0 - gamma * gamma)).abs() < 1e-12);
    }

    #[test]
    fn hybrid_state_is_the_kronecker_product(raw in raw_image(), gamma in 1e-3..=0.85f64, rate in 0.0..=10.0f64) {
        let x = normalize_image(&raw, FEATURE_DIM).unwrap();
        let obs = RateObservation::new(rate, 0.0, 10.0).unwrap();
        let h = hybrid_encode(&x, &obs, gamma, 0.85).unwrap();
        prop_assert_eq!(h.state.num_qubits(), NUM_QUBITS);
        let image = amplitude_encode_damped(&x, gamma, 0.85).unwrap();
        let theta = rate_to_theta(&obs);
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        for (i, a) in image.amplitudes().iter().enumerate() {
            prop_assert!((h.state.amplitudes()[2 * i] - a * c).norm() < 1e-12);
            prop_assert!((h.state.amplitudes()[2 * i + 1] - a * s).norm() < 1e-12);
        }
    }

    #[test]
    fn rate_angle_is_monotone_and_bounded(a in 0.0..=10.0f64, b in 0.0..=10.0f64) {
        let ta = rate_to_theta(&RateObservation::new(a, 0.0, 10.0).unwrap());
        let tb = rate_to_theta(&RateObservation::new(b, 0.0, 10.0).unwrap());
        prop_assert!((0.0..=std::f64::consts::PI).contains(&ta));
        if a <= b {
            prop_assert!(ta <= tb);
        }
    }
}

#[test]
fn ablation_modes_zero_the_dropped_input() {
    let raw: Vec<f64> = (0..FEATURE_DIM).map(|i| (i + 1) as f64).collect();
    let x = normalize_image(&raw, FEATURE_DIM).unwrap();
    let obs = RateObservation::new(7.0, 0.0, 10.0).unwrap();

    let image_only = encode_input(InputMode::ImageOnly, &x, &obs, 0.85, 0.85).unwrap();
    assert_eq!(image_only.theta_used, 0.0);
    for (i, a) in image_only.state.amplitudes().iter().enumerate() {
        if i % 2 == 1 {
            assert_eq!(a.norm(), 0.0);
        }
    }

    let channel_only = encode_input(InputMode::ChannelOnly, &x, &obs, 0.85, 0.85).unwrap();
    let ch = encode_channel_state(rate_to_theta(&obs)).unwrap();
    assert!((channel_only.state.amplitudes()[0] - ch.amplitudes()[0]).norm() < 1e-15);
    assert!((channel_only.state.amplitudes()[1] - ch.amplitudes()[1]).norm() < 1e-15);
    assert!(channel_only.state.amplitudes()[2..].iter().all(|a| a.norm() == 0.0));
}

#[test]
fn out_of_range_inputs_rejected() {
    let x = normalize_image(&[1.0; FEATURE_DIM], FEATURE_DIM).unwrap();
    assert!(amplitude_encode_damped(&x, 0.0, 0.85).is_err());
    assert!(amplitude_encode_damped(&x, 0.9, 0.85).is_err());
    assert!(normalize_image(&[0.0; FEATURE_DIM], FEATURE_DIM).is_err());
    assert!(RateObservation::new(f64::NAN, 0.0, 1.0).is_err());
    assert!(RateObservation::new(1.0, 2.0, 1.0).is_err());
}
