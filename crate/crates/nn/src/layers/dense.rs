//! Fully-connected layer and ReLU.

use crate::scalar::Scalar;
use crate::tensor::{Shape4, Tensor4};
use crate::{NnError, Result};

/// Fully-connected layer. Input tensors are flattened per sample; weight
/// layout is `[out_dim][in_dim]`, bias `[out_dim]`. Output shape is
/// `(n, out_dim, 1, 1)`.
#[derive(Debug, Clone)]
pub struct Linear {
    pub name: String,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Linear {
    pub fn new(name: &str, in_dim: usize, out_dim: usize) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(NnError::Config(format!("fc `{name}`: zero dimension")));
        }
        Ok(Linear {
            name: name.to_string(),
            in_dim,
            out_dim,
        })
    }

    pub fn weight_name(&self) -> String {
        format!("{}.w", self.name)
    }

    pub fn bias_name(&self) -> String {
        format!("{}.b", self.name)
    }

    fn check_input(&self, x: &Shape4) -> Result<()> {
        if x.sample_len() != self.in_dim {
            return Err(NnError::ShapeMismatch(format!(
                "fc `{}`: expected {} inputs per sample, got {} ({})",
                self.name,
                self.in_dim,
                x.sample_len(),
                x
            )));
        }
        Ok(())
    }

    pub fn forward<S: Scalar>(&self, x: &Tensor4<S>, ps: &crate::ParamStore<S>) -> Result<Tensor4<S>> {
        self.check_input(&x.shape())?;
        let n = x.shape().n;
        let w = ps.value(&self.weight_name());
        let b = ps.value(&self.bias_name());
        let mut y = Tensor4::zeros(Shape4::new(n, self.out_dim, 1, 1));
        // Y(n x out) = X(n x in) * W^T(in x out)
        S::gemm(
            n,
            self.in_dim,
            self.out_dim,
            S::ONE,
            x.data(),
            self.in_dim as isize,
            1,
            w,
            1,
            self.in_dim as isize,
            S::ZERO,
            y.data_mut(),
            self.out_dim as isize,
            1,
        );
        for s in 0..n {
            let row = &mut y.sample_mut(s)[..];
            for (v, bias) in row.iter_mut().zip(b.iter()) {
                *v += *bias;
            }
        }
        if !y.all_finite() {
            return Err(NnError::NumericFault {
                layer: self.name.clone(),
            });
        }
        Ok(y)
    }

    pub fn backward<S: Scalar>(
        &self,
        x: &Tensor4<S>,
        dy: &Tensor4<S>,
        ps: &mut crate::ParamStore<S>,
    ) -> Result<Tensor4<S>> {
        self.check_input(&x.shape())?;
        let n = x.shape().n;
        if dy.shape().sample_len() != self.out_dim || dy.shape().n != n {
            return Err(NnError::ShapeMismatch(format!(
                "fc `{}` backward: dy shape {}",
                self.name,
                dy.shape()
            )));
        }
        // dW(out x in) += dY^T(out x n) * X(n x in)
        let dw = ps.grad_mut(&self.weight_name());
        S::gemm(
            self.out_dim,
            n,
            self.in_dim,
            S::ONE,
            dy.data(),
            1,
            self.out_dim as isize,
            x.data(),
            self.in_dim as isize,
            1,
            S::ONE,
            dw,
            self.in_dim as isize,
            1,
        );
        let db = ps.grad_mut(&self.bias_name());
        for s in 0..n {
            for (g, d) in db.iter_mut().zip(dy.sample(s).iter()) {
                *g += *d;
            }
        }
        // dX(n x in) = dY(n x out) * W(out x in)
        let w = ps.value(&self.weight_name());
        let mut dx = Tensor4::zeros(x.shape());
        S::gemm(
            n,
            self.out_dim,
            self.in_dim,
            S::ONE,
            dy.data(),
            self.out_dim as isize,
            1,
            w,
            self.in_dim as isize,
            1,
            S::ZERO,
            dx.data_mut(),
            self.in_dim as isize,
            1,
        );
        Ok(dx)
    }
}

/// Elementwise max(0, x). The subgradient at exactly 0 is taken as 0.
#[derive(Debug, Clone, Default)]
pub struct Relu;

impl Relu {
    pub fn forward<S: Scalar>(&self, x: &Tensor4<S>) -> Tensor4<S> {
        let mut y = x.clone();
        y.data_mut().iter_mut().for_each(|v| {
            if *v < S::ZERO {
                *v = S::ZERO;
            }
        });
        y
    }

    /// `y` is the forward output (y > 0 iff x > 0).
    pub fn backward<S: Scalar>(&self, y: &Tensor4<S>, dy: &Tensor4<S>) -> Result<Tensor4<S>> {
        if y.shape() != dy.shape() {
            return Err(NnError::ShapeMismatch(format!(
                "relu backward: {} vs {}",
                y.shape(),
                dy.shape()
            )));
        }
        let mut dx = dy.clone();
        for (d, &v) in dx.data_mut().iter_mut().zip(y.data().iter()) {
            if v <= S::ZERO {
                *d = S::ZERO;
            }
        }
        Ok(dx)
    }
}
