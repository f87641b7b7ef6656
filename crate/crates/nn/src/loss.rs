//! Losses.

use crate::scalar::Scalar;
use crate::tensor::Tensor4;
use crate::{NnError, Result};

/// Half mean squared error: `L = mean((pred - target)^2) / 2`, with the mean
/// taken over every element. Returns the loss and `dL/dpred =
/// (pred - target) / count`.
pub fn mse_loss<S: Scalar>(pred: &Tensor4<S>, target: &Tensor4<S>) -> Result<(S, Tensor4<S>)> {
    if pred.shape() != target.shape() {
        return Err(NnError::ShapeMismatch(format!(
            "mse_loss: {} vs {}",
            pred.shape(),
            target.shape()
        )));
    }
    let count = S::from_f64(pred.shape().len() as f64);
    let mut grad = Tensor4::zeros(pred.shape());
    let mut acc = S::ZERO;
    for ((g, &p), &t) in grad
        .data_mut()
        .iter_mut()
        .zip(pred.data().iter())
        .zip(target.data().iter())
    {
        let d = p - t;
        acc += d * d;
        *g = d / count;
    }
    let loss = acc / (S::from_f64(2.0) * count);
    Ok((loss, grad))
}

/// Half *summed* squared error: `L = sum((pred - target)^2) / 2` with
/// gradient `pred - target`. This is the per-image objective used when
/// fine-tuning toolchains end to end.
pub fn sse_loss<S: Scalar>(pred: &Tensor4<S>, target: &Tensor4<S>) -> Result<(S, Tensor4<S>)> {
    if pred.shape() != target.shape() {
        return Err(NnError::ShapeMismatch(format!(
            "sse_loss: {} vs {}",
            pred.shape(),
            target.shape()
        )));
    }
    let mut grad = Tensor4::zeros(pred.shape());
    let mut acc = S::ZERO;
    for ((g, &p), &t) in grad
        .data_mut()
        .iter_mut()
        .zip(pred.data().iter())
        .zip(target.data().iter())
    {
        let d = p - t;
        acc += d * d;
        *g = d;
    }
    Ok((acc / S::from_f64(2.0), grad))
}
