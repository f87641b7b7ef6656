//! Single LSTM cell (batch of one), stepped explicitly so episodes can be
//! unrolled and backpropagated through time.

use crate::scalar::Scalar;
use crate::{NnError, Result};

/// LSTM cell. Parameters: `{name}.wx` `[4H][in]`, `{name}.wh` `[4H][H]`,
/// `{name}.b` `[4H]`. Gate row blocks are ordered `[input, forget,
/// candidate, output]`.
#[derive(Debug, Clone)]
pub struct LstmCell {
    pub name: String,
    pub in_dim: usize,
    pub hidden: usize,
}

/// Hidden and cell state carried across steps. Zero at episode start.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState<S> {
    pub h: Vec<S>,
    pub c: Vec<S>,
}

impl<S: Scalar> LstmState<S> {
    pub fn zeros(hidden: usize) -> Self {
        LstmState {
            h: vec![S::ZERO; hidden],
            c: vec![S::ZERO; hidden],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.h.iter().chain(self.c.iter()).all(|v| v.to_f64() == 0.0)
    }
}

/// Values cached by one forward step, needed for the backward step.
#[derive(Debug, Clone)]
pub struct LstmStepCache<S> {
    pub x: Vec<S>,
    pub h_prev: Vec<S>,
    pub c_prev: Vec<S>,
    pub gate_i: Vec<S>,
    pub gate_f: Vec<S>,
    pub gate_g: Vec<S>,
    pub gate_o: Vec<S>,
    pub tanh_c: Vec<S>,
}

#[inline]
fn sigmoid<S: Scalar>(x: S) -> S {
    S::ONE / (S::ONE + (-x).exp())
}

impl LstmCell {
    pub fn new(name: &str, in_dim: usize, hidden: usize) -> Result<Self> {
        if in_dim == 0 || hidden == 0 {
            return Err(NnError::Config(format!("lstm `{name}`: zero dimension")));
        }
        Ok(LstmCell {
            name: name.to_string(),
            in_dim,
            hidden,
        })
    }

    pub fn wx_name(&self) -> String {
        format!("{}.wx", self.name)
    }

    pub fn wh_name(&self) -> String {
        format!("{}.wh", self.name)
    }

    pub fn bias_name(&self) -> String {
        format!("{}.b", self.name)
    }

    pub fn step<S: Scalar>(
        &self,
        x: &[S],
        state: &LstmState<S>,
        ps: &crate::ParamStore<S>,
    ) -> Result<(LstmState<S>, LstmStepCache<S>)> {
        let hd = self.hidden;
        if x.len() != self.in_dim || state.h.len() != hd || state.c.len() != hd {
            return Err(NnError::ShapeMismatch(format!(
                "lstm `{}`: x len {}, h len {}, c len {} (want {}, {hd}, {hd})",
                self.name,
                x.len(),
                state.h.len(),
                state.c.len(),
                self.in_dim
            )));
        }
        let wx = ps.value(&self.wx_name());
        let wh = ps.value(&self.wh_name());
        let b = ps.value(&self.bias_name());

        let mut z = vec![S::ZERO; 4 * hd];
        for (j, zj) in z.iter_mut().enumerate() {
            let mut acc = b[j];
            let wxr = &wx[j * self.in_dim..(j + 1) * self.in_dim];
            for (wv, xv) in wxr.iter().zip(x.iter()) {
                acc += *wv * *xv;
            }
            let whr = &wh[j * hd..(j + 1) * hd];
            for (wv, hv) in whr.iter().zip(state.h.iter()) {
                acc += *wv * *hv;
            }
            *zj = acc;
        }

        let mut cache = LstmStepCache {
            x: x.to_vec(),
            h_prev: state.h.clone(),
            c_prev: state.c.clone(),
            gate_i: vec![S::ZERO; hd],
            gate_f: vec![S::ZERO; hd],
            gate_g: vec![S::ZERO; hd],
            gate_o: vec![S::ZERO; hd],
            tanh_c: vec![S::ZERO; hd],
        };
        let mut next = LstmState::zeros(hd);
        for k in 0..hd {
            let i = sigmoid(z[k]);
            let f = sigmoid(z[hd + k]);
            let g = z[2 * hd + k].tanh();
            let o = sigmoid(z[3 * hd + k]);
            let c = f * state.c[k] + i * g;
            let tc = c.tanh();
            cache.gate_i[k] = i;
            cache.gate_f[k] = f;
            cache.gate_g[k] = g;
            cache.gate_o[k] = o;
            cache.tanh_c[k] = tc;
            next.c[k] = c;
            next.h[k] = o * tc;
        }
        if !next.h.iter().chain(next.c.iter()).all(|v| v.is_finite()) {
            return Err(NnError::NumericFault {
                layer: self.name.clone(),
            });
        }
        Ok((next, cache))
    }

    /// Backward through one step. `dh`/`dc` are the gradients flowing into
    /// this step's outputs (from the head and from the following step).
    /// Returns (dx, d_state_prev) and accumulates parameter gradients.
    pub fn backward_step<S: Scalar>(
        &self,
        cache: &LstmStepCache<S>,
        dh: &[S],
        dc: &[S],
        ps: &mut crate::ParamStore<S>,
    ) -> Result<(Vec<S>, LstmState<S>)> {
        let hd = self.hidden;
        if dh.len() != hd || dc.len() != hd {
            return Err(NnError::ShapeMismatch(format!(
                "lstm `{}` backward: gradient lengths {} / {}",
                self.name,
                dh.len(),
                dc.len()
            )));
        }
        let mut dz = vec![S::ZERO; 4 * hd];
        let mut prev = LstmState::zeros(hd);
        for k in 0..hd {
            let i = cache.gate_i[k];
            let f = cache.gate_f[k];
            let g = cache.gate_g[k];
            let o = cache.gate_o[k];
            let tc = cache.tanh_c[k];
            let d_o = dh[k] * tc;
            let d_c = dc[k] + dh[k] * o * (S::ONE - tc * tc);
            let d_i = d_c * g;
            let d_f = d_c * cache.c_prev[k];
            let d_g = d_c * i;
            prev.c[k] = d_c * f;
            dz[k] = d_i * i * (S::ONE - i);
            dz[hd + k] = d_f * f * (S::ONE - f);
            dz[2 * hd + k] = d_g * (S::ONE - g * g);
            dz[3 * hd + k] = d_o * o * (S::ONE - o);
        }

        {
            let dwx = ps.grad_mut(&self.wx_name());
            for (j, &dzj) in dz.iter().enumerate() {
                let row = &mut dwx[j * self.in_dim..(j + 1) * self.in_dim];
                for (gv, xv) in row.iter_mut().zip(cache.x.iter()) {
                    *gv += dzj * *xv;
                }
            }
        }
        {
            let dwh = ps.grad_mut(&self.wh_name());
            for (j, &dzj) in dz.iter().enumerate() {
                let row = &mut dwh[j * hd..(j + 1) * hd];
                for (gv, hv) in row.iter_mut().zip(cache.h_prev.iter()) {
                    *gv += dzj * *hv;
                }
            }
        }
        {
            let db = ps.grad_mut(&self.bias_name());
            for (gv, &dzj) in db.iter_mut().zip(dz.iter()) {
                *gv += dzj;
            }
        }

        let wx = ps.value(&self.wx_name());
        let mut dx = vec![S::ZERO; self.in_dim];
        for (j, &dzj) in dz.iter().enumerate() {
            let row = &wx[j * self.in_dim..(j + 1) * self.in_dim];
            for (dv, wv) in dx.iter_mut().zip(row.iter()) {
                *dv += dzj * *wv;
            }
        }
        let wh = ps.value(&self.wh_name());
        for (j, &dzj) in dz.iter().enumerate() {
            let row = &wh[j * hd..(j + 1) * hd];
            for (dv, wv) in prev.h.iter_mut().zip(row.iter()) {
                *dv += dzj * *wv;
            }
        }
        Ok((dx, prev))
    }
}
