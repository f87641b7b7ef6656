//! Gradient checks for every layer type in 64-bit shadow mode: analytic
//! backward passes vs. central differences, h = 1e-5, relative error < 1e-4,
//! over >= 20 random instantiations per layer type.

use rlr_nn::init::{register_conv_he, register_linear_he, register_lstm_uniform};
use rlr_nn::layers::LstmState;
use rlr_nn::{grad_check, mse_loss, Conv2d, Linear, LstmCell, ParamStore, Relu, Shape4, Tensor4};
use rlr_rng::Rng64;

const H: f64 = 1e-5;
const TOL: f64 = 1e-4;
const FLOOR: f64 = 1e-3;

fn random_tensor(shape: Shape4, rng: &mut Rng64, lo: f64, hi: f64) -> Tensor4<f64> {
    let data = (0..shape.len()).map(|_| rng.uniform(lo, hi)).collect();
    Tensor4::from_vec(shape, data).unwrap()
}

#[test]
fn conv_gradients_match_central_differences() {
    for seed in 0..20u64 {
        let mut rng = Rng64::new(seed);
        let conv = Conv2d::same("c", 2, 3, 3, 1).unwrap();
        let mut ps = ParamStore::<f64>::new();
        register_conv_he(&mut ps, &conv, &mut rng).unwrap();
        let x = random_tensor(Shape4::new(2, 2, 5, 6), &mut rng, -1.0, 1.0);
        let target = random_tensor(conv.out_shape(x.shape()).unwrap(), &mut rng, -1.0, 1.0);

        // Analytic pass.
        let y = conv.forward(&x, &ps).unwrap();
        let (_, dy) = mse_loss(&y, &target).unwrap();
        conv.backward(&x, &dy, &mut ps).unwrap();

        let report = grad_check(
            &mut ps,
            |ps| {
                let y = conv.forward(&x, ps)?;
                let (l, _) = mse_loss(&y, &target)?;
                Ok(l)
            },
            H,
            FLOOR,
        )
        .unwrap();
        assert!(
            report.max_rel_err < TOL,
            "seed {seed}: rel err {} at {}[{}]",
            report.max_rel_err,
            report.worst_param,
            report.worst_index
        );
    }
}

#[test]
fn conv_strided_gradients() {
    for seed in 100..110u64 {
        let mut rng = Rng64::new(seed);
        let conv = Conv2d::new("c", 3, 4, 3, 3, 2, 1).unwrap();
        let mut ps = ParamStore::<f64>::new();
        register_conv_he(&mut ps, &conv, &mut rng).unwrap();
        let x = random_tensor(Shape4::new(1, 3, 9, 9), &mut rng, -1.0, 1.0);
        let target = random_tensor(conv.out_shape(x.shape()).unwrap(), &mut rng, -1.0, 1.0);
        let y = conv.forward(&x, &ps).unwrap();
        let (_, dy) = mse_loss(&y, &target).unwrap();
        conv.backward(&x, &dy, &mut ps).unwrap();
        let report = grad_check(
            &mut ps,
            |ps| {
                let y = conv.forward(&x, ps)?;
                Ok(mse_loss(&y, &target)?.0)
            },
            H,
            FLOOR,
        )
        .unwrap();
        assert!(report.max_rel_err < TOL, "seed {seed}: {}", report.max_rel_err);
    }
}

#[test]
fn conv_input_gradient_matches_central_differences() {
    // Perturb the *input* rather than the parameters.
    let mut rng = Rng64::new(5);
    let conv = Conv2d::same("c", 2, 2, 3, 1).unwrap();
    let mut ps = ParamStore::<f64>::new();
    register_conv_he(&mut ps, &conv, &mut rng).unwrap();
    let x = random_tensor(Shape4::new(1, 2, 4, 4), &mut rng, -1.0, 1.0);
    let target = random_tensor(conv.out_shape(x.shape()).unwrap(), &mut rng, -1.0, 1.0);

    let y = conv.forward(&x, &ps).unwrap();
    let (_, dy) = mse_loss(&y, &target).unwrap();
    let dx = conv.backward(&x, &dy, &mut ps).unwrap();

    for j in 0..x.shape().len() {
        let mut xp = x.clone();
        xp.data_mut()[j] += H;
        let lp = mse_loss(&conv.forward(&xp, &ps).unwrap(), &target).unwrap().0;
        let mut xm = x.clone();
        xm.data_mut()[j] -= H;
        let lm = mse_loss(&conv.forward(&xm, &ps).unwrap(), &target).unwrap().0;
        let numeric = (lp - lm) / (2.0 * H);
        let analytic = dx.data()[j];
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FLOOR);
        assert!(rel < TOL, "input grad {j}: {analytic} vs {numeric}");
    }
}

#[test]
fn fc_matches_matvec_oracle_and_gradients() {
    let mut rng = Rng64::new(3);
    let fc = Linear::new("f", 8, 5).unwrap();
    let mut ps = ParamStore::<f64>::new();
    register_linear_he(&mut ps, &fc, &mut rng).unwrap();
    let x = random_tensor(Shape4::new(3, 8, 1, 1), &mut rng, -1.0, 1.0);

    // Explicit matrix-vector oracle.
    let y = fc.forward(&x, &ps).unwrap();
    let w = ps.value("f.w");
    let b = ps.value("f.b");
    for n in 0..3 {
        for o in 0..5 {
            let mut want = b[o];
            for i in 0..8 {
                want += w[o * 8 + i] * x.at(n, i, 0, 0);
            }
            assert!((y.at(n, o, 0, 0) - want).abs() < 1e-5);
        }
    }

    // Gradients over 20 instantiations.
    for seed in 0..20u64 {
        let mut rng = Rng64::new(1000 + seed);
        let mut ps = ParamStore::<f64>::new();
        register_linear_he(&mut ps, &fc, &mut rng).unwrap();
        let x = random_tensor(Shape4::new(2, 8, 1, 1), &mut rng, -1.0, 1.0);
        let target = random_tensor(Shape4::new(2, 5, 1, 1), &mut rng, -1.0, 1.0);
        let y = fc.forward(&x, &ps).unwrap();
        let (_, dy) = mse_loss(&y, &target).unwrap();
        fc.backward(&x, &dy, &mut ps).unwrap();
        let report = grad_check(
            &mut ps,
            |ps| Ok(mse_loss(&fc.forward(&x, ps)?, &target)?.0),
            H,
            FLOOR,
        )
        .unwrap();
        assert!(report.max_rel_err < TOL, "seed {seed}: {}", report.max_rel_err);
    }
}

#[test]
fn fc_identity_and_bias_cases() {
    let fc = Linear::new("f", 4, 4).unwrap();
    let mut ps = ParamStore::<f64>::new();
    let mut w = vec![0.0; 16];
    for i in 0..4 {
        w[i * 4 + i] = 1.0;
    }
    ps.register("f.w", &[4, 4], w).unwrap();
    ps.register("f.b", &[4], vec![0.0; 4]).unwrap();
    let x = Tensor4::from_vec(Shape4::new(1, 4, 1, 1), vec![0.1, -0.2, 0.3, 0.7]).unwrap();
    let y = fc.forward(&x, &ps).unwrap();
    assert_eq!(x.data(), y.data());

    // Zero weights, bias b: output = b for any input.
    let mut ps = ParamStore::<f64>::new();
    ps.register("f.w", &[4, 4], vec![0.0; 16]).unwrap();
    ps.register("f.b", &[4], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let y = fc.forward(&x, &ps).unwrap();
    assert_eq!(y.data(), &[1.0, 2.0, 3.0, 4.0]);
}

#[test]
fn relu_basic_and_gradients() {
    let relu = Relu;
    let x = Tensor4::from_vec(Shape4::new(1, 1, 1, 3), vec![-1.0, 0.0, 2.0]).unwrap();
    let y = relu.forward(&x);
    assert_eq!(y.data(), &[0.0, 0.0, 2.0]);

    // All-negative input: zero output, zero gradient.
    let x = Tensor4::from_vec(Shape4::new(1, 1, 1, 3), vec![-1.0, -0.5, -2.0]).unwrap();
    let y = relu.forward(&x);
    assert!(y.data().iter().all(|&v| v == 0.0));
    let dy = Tensor4::from_vec(Shape4::new(1, 1, 1, 3), vec![1.0, 1.0, 1.0]).unwrap();
    let dx = relu.backward(&y, &dy).unwrap();
    assert!(dx.data().iter().all(|&v| v == 0.0));

    // Central differences away from the kink.
    let mut rng = Rng64::new(9);
    for _ in 0..20 {
        let x: Vec<f64> = (0..16)
            .map(|_| {
                let v = rng.uniform(0.05, 1.0);
                if rng.chance(0.5) {
                    v
                } else {
                    -v
                }
            })
            .collect();
        let x = Tensor4::from_vec(Shape4::new(1, 1, 4, 4), x).unwrap();
        let target = random_tensor(Shape4::new(1, 1, 4, 4), &mut rng, -1.0, 1.0);
        let y = relu.forward(&x);
        let (_, dy) = mse_loss(&y, &target).unwrap();
        let dx = relu.backward(&y, &dy).unwrap();
        for j in 0..x.shape().len() {
            let mut xp = x.clone();
            xp.data_mut()[j] += H;
            let lp = mse_loss(&relu.forward(&xp), &target).unwrap().0;
            let mut xm = x.clone();
            xm.data_mut()[j] -= H;
            let lm = mse_loss(&relu.forward(&xm), &target).unwrap().0;
            let numeric = (lp - lm) / (2.0 * H);
            let analytic = dx.data()[j];
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FLOOR);
            assert!(rel < TOL);
        }
    }
}

#[test]
fn lstm_zero_params_give_zero_state() {
    let cell = LstmCell::new("l", 3, 4).unwrap();
    let mut ps = ParamStore::<f64>::new();
    ps.register("l.wx", &[16, 3], vec![0.0; 48]).unwrap();
    ps.register("l.wh", &[16, 4], vec![0.0; 64]).unwrap();
    ps.register("l.b", &[16], vec![0.0; 16]).unwrap();
    let state = LstmState::zeros(4);
    let (next, _) = cell.step(&[0.3, -0.7, 0.9], &state, &ps).unwrap();
    // Gates are sigmoid(0) = 0.5 and tanh(0) = 0; c = 0.5*0 + 0.5*0 = 0.
    assert!(next.c.iter().all(|&v| v == 0.0));
    assert!(next.h.iter().all(|&v| v == 0.0));
}

#[test]
fn lstm_saturated_forget_gate_preserves_cell() {
    // Forget bias 100 saturates f to 1: c ~= c_prev + i*g.
    let mut rng = Rng64::new(17);
    let cell = LstmCell::new("l", 3, 4).unwrap();
    let mut ps = ParamStore::<f64>::new();
    register_lstm_uniform(&mut ps, &cell, &mut rng).unwrap();
    {
        let b = ps.value_mut("l.b");
        for k in 4..8 {
            b[k] = 100.0;
        }
    }
    let state = LstmState {
        h: vec![0.1, -0.2, 0.3, 0.05],
        c: vec![0.5, -0.4, 0.2, 0.9],
    };
    let x = [0.2, 0.7, -0.3];
    let (next, cache) = cell.step(&x, &state, &ps).unwrap();
    for k in 0..4 {
        let want = state.c[k] + cache.gate_i[k] * cache.gate_g[k];
        assert!((next.c[k] - want).abs() < 1e-9, "cell {k}");
    }
}

#[test]
fn lstm_gradients_match_central_differences() {
    // Loss over a 3-step unroll so gradients flow through time.
    for seed in 0..20u64 {
        let mut rng = Rng64::new(seed);
        let cell = LstmCell::new("l", 3, 4).unwrap();
        let mut ps = ParamStore::<f64>::new();
        register_lstm_uniform(&mut ps, &cell, &mut rng).unwrap();
        let xs: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..3).map(|_| rng.uniform(-1.0, 1.0)).collect())
            .collect();
        let targets: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..4).map(|_| rng.uniform(-1.0, 1.0)).collect())
            .collect();

        let unroll = |ps: &ParamStore<f64>| -> rlr_nn::Result<f64> {
            let mut state = LstmState::zeros(4);
            let mut loss = 0.0;
            for (x, t) in xs.iter().zip(targets.iter()) {
                let (next, _) = cell.step(x, &state, ps)?;
                for (hv, tv) in next.h.iter().zip(t.iter()) {
                    loss += 0.5 * (hv - tv) * (hv - tv);
                }
                state = next;
            }
            Ok(loss)
        };

        // Analytic: forward with caches, then reverse.
        let mut states = vec![LstmState::zeros(4)];
        let mut caches = Vec::new();
        for x in &xs {
            let (next, cache) = cell.step(x, states.last().unwrap(), &ps).unwrap();
            states.push(next);
            caches.push(cache);
        }
        let mut dh = vec![0.0; 4];
        let mut dc = vec![0.0; 4];
        for t in (0..3).rev() {
            for k in 0..4 {
                dh[k] += states[t + 1].h[k] - targets[t][k];
            }
            let (_, prev) = cell.backward_step(&caches[t], &dh, &dc, &mut ps).unwrap();
            dh = prev.h;
            dc = prev.c;
        }

        let report = grad_check(&mut ps, |ps| unroll(ps), H, FLOOR).unwrap();
        assert!(
            report.max_rel_err < TOL,
            "seed {seed}: rel err {} at {}",
            report.max_rel_err,
            report.worst_param
        );
    }
}

#[test]
fn linear_network_gradcheck_is_essentially_exact() {
    // A single fc layer with identity loss is quadratic in the parameters,
    // so central differences are exact up to rounding.
    let mut rng = Rng64::new(23);
    let fc = Linear::new("f", 6, 3).unwrap();
    let mut ps = ParamStore::<f64>::new();
    register_linear_he(&mut ps, &fc, &mut rng).unwrap();
    let x = random_tensor(Shape4::new(1, 6, 1, 1), &mut rng, -1.0, 1.0);
    let target = random_tensor(Shape4::new(1, 3, 1, 1), &mut rng, -1.0, 1.0);
    let y = fc.forward(&x, &ps).unwrap();
    let (_, dy) = mse_loss(&y, &target).unwrap();
    fc.backward(&x, &dy, &mut ps).unwrap();
    let report = grad_check(
        &mut ps,
        |ps| Ok(mse_loss(&fc.forward(&x, ps)?, &target)?.0),
        H,
        FLOOR,
    )
    .unwrap();
    assert!(report.max_rel_err < 1e-8, "rel err {}", report.max_rel_err);
}

#[test]
fn mse_gradient_matches_central_differences() {
    let mut rng = Rng64::new(31);
    let shape = Shape4::new(1, 2, 3, 3);
    let pred = random_tensor(shape, &mut rng, 0.0, 1.0);
    let target = random_tensor(shape, &mut rng, 0.0, 1.0);
    let (_, grad) = mse_loss(&pred, &target).unwrap();
    for j in 0..shape.len() {
        let mut pp = pred.clone();
        pp.data_mut()[j] += H;
        let lp = mse_loss(&pp, &target).unwrap().0;
        let mut pm = pred.clone();
        pm.data_mut()[j] -= H;
        let lm = mse_loss(&pm, &target).unwrap().0;
        let numeric = (lp - lm) / (2.0 * H);
        let analytic = grad.data()[j];
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
        assert!(rel < 1e-6, "elem {j}: {analytic} vs {numeric}");
    }
}
