//! Sequential network container used by the restorer tools, plus
//! parameter / multiply counting for any layer stack.

use crate::layers::{Conv2d, Linear, Relu};
use crate::scalar::Scalar;
use crate::tensor::{Shape4, Tensor4};
use crate::{ParamStore, Result};

#[derive(Debug, Clone)]
pub enum Layer {
    Conv(Conv2d),
    Relu(Relu),
    Fc(Linear),
}

impl Layer {
    pub fn out_shape(&self, x: Shape4) -> Result<Shape4> {
        match self {
            Layer::Conv(c) => c.out_shape(x),
            Layer::Relu(_) => Ok(x),
            Layer::Fc(f) => {
                // Validation happens inside forward; here we only map shapes.
                let _ = f;
                Ok(Shape4::new(x.n, f.out_dim, 1, 1))
            }
        }
    }

    /// Number of parameters this layer owns.
    pub fn param_count(&self) -> usize {
        match self {
            Layer::Conv(c) => c.out_ch * c.in_ch * c.kh * c.kw + c.out_ch,
            Layer::Relu(_) => 0,
            Layer::Fc(f) => f.out_dim * f.in_dim + f.out_dim,
        }
    }

    /// Multiplies performed in one forward pass on input shape `x`
    /// (per batch of `x.n`; bias adds and activations are not multiplies).
    pub fn mult_count(&self, x: Shape4) -> Result<usize> {
        Ok(match self {
            Layer::Conv(c) => {
                let out = c.out_shape(x)?;
                out.n * out.h * out.w * c.out_ch * c.in_ch * c.kh * c.kw
            }
            Layer::Relu(_) => 0,
            Layer::Fc(f) => x.n * f.in_dim * f.out_dim,
        })
    }
}

/// A plain sequential stack. The residual connection used by the restorer
/// tools lives one level up, in the toolbox.
#[derive(Debug, Clone)]
pub struct Network {
    pub name: String,
    pub layers: Vec<Layer>,
}

/// Per-layer inputs saved by a caching forward pass.
pub struct NetCache<S> {
    pub inputs: Vec<Tensor4<S>>,
    pub output: Tensor4<S>,
}

impl Network {
    pub fn new(name: &str, layers: Vec<Layer>) -> Self {
        Network {
            name: name.to_string(),
            layers,
        }
    }

    pub fn out_shape(&self, mut s: Shape4) -> Result<Shape4> {
        for l in &self.layers {
            s = l.out_shape(s)?;
        }
        Ok(s)
    }

    /// Inference-only forward (no activation caching).
    pub fn infer<S: Scalar>(
        &self,
        x: &Tensor4<S>,
        ps: &ParamStore<S>,
        ws: &mut crate::Workspace<S>,
    ) -> Result<Tensor4<S>> {
        let mut cur = x.clone();
        for l in &self.layers {
            cur = match l {
                Layer::Conv(c) => c.forward_with(&cur, ps, ws)?,
                Layer::Relu(r) => r.forward(&cur),
                Layer::Fc(f) => f.forward(&cur, ps)?,
            };
        }
        Ok(cur)
    }

    /// Forward pass that keeps each layer's input for `backward`.
    pub fn forward<S: Scalar>(
        &self,
        x: &Tensor4<S>,
        ps: &ParamStore<S>,
        ws: &mut crate::Workspace<S>,
    ) -> Result<(Tensor4<S>, NetCache<S>)> {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut cur = x.clone();
        for l in &self.layers {
            let next = match l {
                Layer::Conv(c) => c.forward_with(&cur, ps, ws)?,
                Layer::Relu(r) => r.forward(&cur),
                Layer::Fc(f) => f.forward(&cur, ps)?,
            };
            inputs.push(cur);
            cur = next;
        }
        Ok((
            cur.clone(),
            NetCache {
                inputs,
                output: cur,
            },
        ))
    }

    /// Backpropagates `dy`, accumulating parameter gradients; returns the
    /// input gradient.
    pub fn backward<S: Scalar>(
        &self,
        cache: &NetCache<S>,
        dy: &Tensor4<S>,
        ps: &mut ParamStore<S>,
        ws: &mut crate::Workspace<S>,
    ) -> Result<Tensor4<S>> {
        let mut grad = dy.clone();
        for i in (0..self.layers.len()).rev() {
            let input = &cache.inputs[i];
            grad = match &self.layers[i] {
                Layer::Conv(c) => c.backward_with(input, &grad, ps, ws)?,
                Layer::Relu(r) => {
                    // The layer's output is the next layer's input (or the
                    // network output for the last layer).
                    let output = if i + 1 < cache.inputs.len() {
                        &cache.inputs[i + 1]
                    } else {
                        &cache.output
                    };
                    r.backward(output, &grad)?
                }
                Layer::Fc(f) => f.backward(input, &grad, ps)?,
            };
        }
        Ok(grad)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.param_count()).sum()
    }
}

/// Exact parameter count and forward multiply count for a layer stack at a
/// given input shape. Both are additive over layers.
pub fn count_params_flops(net: &Network, input: Shape4) -> Result<(usize, usize)> {
    let mut params = 0usize;
    let mut mults = 0usize;
    let mut s = input;
    for l in &net.layers {
        params += l.param_count();
        mults += l.mult_count(s)?;
        s = l.out_shape(s)?;
    }
    Ok((params, mults))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fc_param_count_example() {
        // 8 -> 5 with bias: 45 parameters.
        let l = Layer::Fc(Linear::new("f", 8, 5).unwrap());
        assert_eq!(l.param_count(), 45);
        assert_eq!(l.mult_count(Shape4::new(1, 8, 1, 1)).unwrap(), 40);
    }

    #[test]
    fn conv_param_count_example() {
        // 3x3 conv, 3 -> 32 channels with bias: 896 parameters.
        let l = Layer::Conv(Conv2d::same("c", 3, 32, 3, 1).unwrap());
        assert_eq!(l.param_count(), 896);
    }

    #[test]
    fn counting_is_additive_over_layers() {
        let a = Conv2d::same("a", 3, 8, 3, 1).unwrap();
        let b = Conv2d::same("b", 8, 3, 3, 1).unwrap();
        let shape = Shape4::new(1, 3, 16, 16);
        let net_a = Network::new("na", vec![Layer::Conv(a.clone())]);
        let mid = net_a.out_shape(shape).unwrap();
        let net_b = Network::new("nb", vec![Layer::Conv(b.clone())]);
        let whole = Network::new(
            "w",
            vec![Layer::Conv(a), Layer::Relu(Relu), Layer::Conv(b)],
        );
        let (pa, fa) = count_params_flops(&net_a, shape).unwrap();
        let (pb, fb) = count_params_flops(&net_b, mid).unwrap();
        let (pw, fw) = count_params_flops(&whole, shape).unwrap();
        assert_eq!(pw, pa + pb);
        assert_eq!(fw, fa + fb);
    }
}
