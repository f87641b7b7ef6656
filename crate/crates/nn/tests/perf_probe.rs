//! Throughput probe for the conv stack (run with --ignored --nocapture).

use rlr_nn::init::register_conv_he;
use rlr_nn::{mse_loss, Conv2d, Layer, Network, ParamStore, Relu, Shape4, Tensor4};
use rlr_rng::Rng64;
use std::time::Instant;

#[test]
#[ignore]
fn deep_tool_throughput() {
    let mut rng = Rng64::new(1);
    let mut ps = ParamStore::<f32>::new();
    let mut layers = Vec::new();
    let mut spec = vec![(3usize, 32usize)];
    for _ in 0..6 {
        spec.push((32, 32));
    }
    spec.push((32, 3));
    for (i, (ic, oc)) in spec.iter().enumerate() {
        let c = Conv2d::same(&format!("c{i}"), *ic, *oc, 3, 1).unwrap();
        register_conv_he(&mut ps, &c, &mut rng).unwrap();
        layers.push(Layer::Conv(c));
        if i + 1 < spec.len() {
            layers.push(Layer::Relu(Relu));
        }
    }
    let net = Network::new("deep", layers);
    let x = Tensor4::from_vec(
        Shape4::new(8, 3, 63, 63),
        (0..8 * 3 * 63 * 63).map(|_| rng.uniform(0.0, 1.0) as f32).collect(),
    )
    .unwrap();
    let target = x.clone();
    let mut ws = rlr_nn::Workspace::new();

    // Warm up.
    let (_, cache) = net.forward(&x, &ps, &mut ws).unwrap();
    let (_, dy) = mse_loss(&cache.output, &target).unwrap();
    net.backward(&cache, &dy, &mut ps, &mut ws).unwrap();

    let iters = 12;
    let mut t_fwd = 0.0;
    let mut t_infer = 0.0;
    let mut t_bwd = 0.0;
    let t0 = Instant::now();
    for _ in 0..iters {
        let ti = Instant::now();
        let _ = net.infer(&x, &ps, &mut ws).unwrap();
        t_infer += ti.elapsed().as_secs_f64();
        let tf = Instant::now();
        let (_, cache) = net.forward(&x, &ps, &mut ws).unwrap();
        t_fwd += tf.elapsed().as_secs_f64();
        let (_, dy) = mse_loss(&cache.output, &target).unwrap();
        let tb = Instant::now();
        net.backward(&cache, &dy, &mut ps, &mut ws).unwrap();
        t_bwd += tb.elapsed().as_secs_f64();
        ps.zero_grads();
    }
    let dt = t0.elapsed().as_secs_f64() - t_infer;
    println!(
        "infer {:.0} ms, fwd {:.0} ms, bwd {:.0} ms per iter",
        t_infer / iters as f64 * 1e3,
        t_fwd / iters as f64 * 1e3,
        t_bwd / iters as f64 * 1e3
    );
    // Forward multiplies per sample: 63*63*(32*27 + 6*32*288 + 3*288).
    let fwd_mults = 63.0 * 63.0 * (32.0 * 27.0 + 6.0 * 32.0 * 288.0 + 3.0 * 288.0) * 8.0;
    let total_flops = iters as f64 * fwd_mults * 3.0 * 2.0; // fwd + ~2x bwd, 2 flops/mult
    println!(
        "fwd+bwd batch8: {:.1} ms/iter, ~{:.1} GFLOP/s",
        dt / iters as f64 * 1e3,
        total_flops / dt / 1e9
    );
}
