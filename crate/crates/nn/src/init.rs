//! Weight initialization. He-normal for conv/fc feeding ReLUs, scaled
//! uniform for the LSTM block, zeros for residual output layers.

use rlr_rng::Rng64;

use crate::layers::{Conv2d, Linear, LstmCell};
use crate::scalar::Scalar;
use crate::{ParamStore, Result};

fn he_normal<S: Scalar>(rng: &mut Rng64, fan_in: usize, len: usize) -> Vec<S> {
    let std = (2.0 / fan_in as f64).sqrt();
    (0..len).map(|_| S::from_f64(rng.normal() * std)).collect()
}

fn scaled_uniform<S: Scalar>(rng: &mut Rng64, limit: f64, len: usize) -> Vec<S> {
    (0..len).map(|_| S::from_f64(rng.uniform(-limit, limit))).collect()
}

/// Registers conv parameters with He-normal weights and zero bias.
pub fn register_conv_he<S: Scalar>(
    ps: &mut ParamStore<S>,
    layer: &Conv2d,
    rng: &mut Rng64,
) -> Result<()> {
    let fan_in = layer.in_ch * layer.kh * layer.kw;
    let wlen = layer.out_ch * fan_in;
    ps.register(
        &layer.weight_name(),
        &[layer.out_ch, layer.in_ch, layer.kh, layer.kw],
        he_normal(rng, fan_in, wlen),
    )?;
    ps.register(&layer.bias_name(), &[layer.out_ch], vec![S::ZERO; layer.out_ch])
}

/// Registers conv parameters as all zeros (identity residual at init).
pub fn register_conv_zero<S: Scalar>(ps: &mut ParamStore<S>, layer: &Conv2d) -> Result<()> {
    let fan_in = layer.in_ch * layer.kh * layer.kw;
    ps.register(
        &layer.weight_name(),
        &[layer.out_ch, layer.in_ch, layer.kh, layer.kw],
        vec![S::ZERO; layer.out_ch * fan_in],
    )?;
    ps.register(&layer.bias_name(), &[layer.out_ch], vec![S::ZERO; layer.out_ch])
}

/// Registers fc parameters with He-normal weights and zero bias.
pub fn register_linear_he<S: Scalar>(
    ps: &mut ParamStore<S>,
    layer: &Linear,
    rng: &mut Rng64,
) -> Result<()> {
    let wlen = layer.out_dim * layer.in_dim;
    ps.register(
        &layer.weight_name(),
        &[layer.out_dim, layer.in_dim],
        he_normal(rng, layer.in_dim, wlen),
    )?;
    ps.register(&layer.bias_name(), &[layer.out_dim], vec![S::ZERO; layer.out_dim])
}

/// Registers LSTM parameters uniform in [-1/sqrt(H), 1/sqrt(H)].
pub fn register_lstm_uniform<S: Scalar>(
    ps: &mut ParamStore<S>,
    cell: &LstmCell,
    rng: &mut Rng64,
) -> Result<()> {
    let limit = 1.0 / (cell.hidden as f64).sqrt();
    let rows = 4 * cell.hidden;
    ps.register(
        &cell.wx_name(),
        &[rows, cell.in_dim],
        scaled_uniform(rng, limit, rows * cell.in_dim),
    )?;
    ps.register(
        &cell.wh_name(),
        &[rows, cell.hidden],
        scaled_uniform(rng, limit, rows * cell.hidden),
    )?;
    ps.register(&cell.bias_name(), &[rows], scaled_uniform(rng, limit, rows))
}
