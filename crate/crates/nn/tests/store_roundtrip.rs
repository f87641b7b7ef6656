//! Property tests for checkpoint round trips and optimizer no-op behavior.

use proptest::prelude::*;
use rlr_nn::checkpoint;
use rlr_nn::{adam_step, AdamConfig, ParamStore};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn checkpoint_roundtrip_bit_exact(
        values in proptest::collection::vec(
            proptest::num::f32::NORMAL | proptest::num::f32::ZERO | proptest::num::f32::SUBNORMAL,
            1..200,
        ),
        extra in proptest::collection::vec(-1e20f32..1e20, 1..40),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.ckpt");
        let mut ps = ParamStore::<f32>::new();
        ps.register("a", &[values.len()], values.clone()).unwrap();
        ps.register("b.w", &[extra.len()], extra.clone()).unwrap();
        checkpoint::save(&ps, &path).unwrap();

        let mut ps2 = ParamStore::<f32>::new();
        ps2.register("a", &[values.len()], vec![0.0; values.len()]).unwrap();
        ps2.register("b.w", &[extra.len()], vec![0.0; extra.len()]).unwrap();
        checkpoint::load_into(&mut ps2, &path).unwrap();

        for (x, y) in ps.value("a").iter().zip(ps2.value("a").iter()) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
        for (x, y) in ps.value("b.w").iter().zip(ps2.value("b.w").iter()) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn adam_zero_grad_noop_on_values(
        values in proptest::collection::vec(-10.0f64..10.0, 1..50),
        lr in 1e-5f64..1.0,
    ) {
        let mut ps = ParamStore::<f64>::new();
        ps.register("p", &[values.len()], values.clone()).unwrap();
        adam_step(&mut ps, &AdamConfig::with_lr(lr)).unwrap();
        prop_assert_eq!(ps.value("p"), &values[..]);
        prop_assert_eq!(ps.t, 1);
    }
}
