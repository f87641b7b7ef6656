//! 2-D convolution (cross-correlation) with zero padding, via im2col + GEMM.
//!
//! The forward pass unfolds patches into a (K x P) matrix (K = in_ch*kh*kw
//! taps, P = output positions) and multiplies by the weight matrix. The
//! backward pass uses the transposed (P x K) patch layout instead, which
//! keeps every GEMM operand contiguous along its contraction dimension; the
//! general kernel collapses otherwise (strided packing of multi-megabyte
//! buffers is TLB-bound on these sizes).

use crate::scalar::Scalar;
use crate::tensor::{Shape4, Tensor4};
use crate::{NnError, Result};

/// Minimum GEMM row dimension before zero-row padding kicks in; the kernel
/// wastes most of its micro-tile below this (the 3-channel output layers).
const GEMM_MIN_M: usize = 8;

/// Reusable buffers for conv forward/backward. Allocating multi-megabyte
/// patch matrices per call costs more than the GEMMs at these sizes, so hot
/// loops keep one workspace alive and pass it in.
#[derive(Debug)]
pub struct Workspace<S> {
    col: Vec<S>,
    colt: Vec<S>,
    dcolt: Vec<S>,
    dy_pad: Vec<S>,
    dw_pad: Vec<S>,
    w_pad: Vec<S>,
    y_pad: Vec<S>,
}

impl<S: Scalar> Default for Workspace<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> Workspace<S> {
    pub fn new() -> Self {
        Workspace {
            col: Vec::new(),
            colt: Vec::new(),
            dcolt: Vec::new(),
            dy_pad: Vec::new(),
            dw_pad: Vec::new(),
            w_pad: Vec::new(),
            y_pad: Vec::new(),
        }
    }
}

fn ensure<S: Scalar>(buf: &mut Vec<S>, len: usize) -> &mut [S] {
    if buf.len() < len {
        buf.resize(len, S::ZERO);
    }
    &mut buf[..len]
}

/// Convolution layer configuration. Weight layout is
/// `[out_ch][in_ch][kh][kw]`, bias is `[out_ch]`.
#[derive(Debug, Clone)]
pub struct Conv2d {
    pub name: String,
    pub in_ch: usize,
    pub out_ch: usize,
    pub kh: usize,
    pub kw: usize,
    pub stride: usize,
    pub pad: usize,
}

impl Conv2d {
    pub fn new(
        name: &str,
        in_ch: usize,
        out_ch: usize,
        kh: usize,
        kw: usize,
        stride: usize,
        pad: usize,
    ) -> Result<Self> {
        if in_ch == 0 || out_ch == 0 || kh == 0 || kw == 0 || stride == 0 {
            return Err(NnError::Config(format!(
                "conv `{name}`: all dimensions must be >= 1"
            )));
        }
        Ok(Conv2d {
            name: name.to_string(),
            in_ch,
            out_ch,
            kh,
            kw,
            stride,
            pad,
        })
    }

    /// "Same"-padding convolution; requires odd kernel dims.
    pub fn same(name: &str, in_ch: usize, out_ch: usize, k: usize, stride: usize) -> Result<Self> {
        if k % 2 == 0 {
            return Err(NnError::Config(format!(
                "conv `{name}`: same padding requires an odd kernel, got {k}"
            )));
        }
        Conv2d::new(name, in_ch, out_ch, k, k, stride, k / 2)
    }

    pub fn weight_name(&self) -> String {
        format!("{}.w", self.name)
    }

    pub fn bias_name(&self) -> String {
        format!("{}.b", self.name)
    }

    pub fn out_hw(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        let he = h + 2 * self.pad;
        let we = w + 2 * self.pad;
        if he < self.kh || we < self.kw {
            return Err(NnError::ShapeMismatch(format!(
                "conv `{}`: input {h}x{w} (pad {}) smaller than kernel {}x{}",
                self.name, self.pad, self.kh, self.kw
            )));
        }
        Ok(((he - self.kh) / self.stride + 1, (we - self.kw) / self.stride + 1))
    }

    pub fn out_shape(&self, x: Shape4) -> Result<Shape4> {
        if x.c != self.in_ch {
            return Err(NnError::ShapeMismatch(format!(
                "conv `{}`: expected {} input channels, got {}",
                self.name, self.in_ch, x.c
            )));
        }
        let (oh, ow) = self.out_hw(x.h, x.w)?;
        Ok(Shape4::new(x.n, self.out_ch, oh, ow))
    }

    #[inline]
    fn k_len(&self) -> usize {
        self.in_ch * self.kh * self.kw
    }

    pub fn forward<S: Scalar>(&self, x: &Tensor4<S>, ps: &crate::ParamStore<S>) -> Result<Tensor4<S>> {
        self.forward_with(x, ps, &mut Workspace::new())
    }

    pub fn forward_with<S: Scalar>(
        &self,
        x: &Tensor4<S>,
        ps: &crate::ParamStore<S>,
        ws: &mut Workspace<S>,
    ) -> Result<Tensor4<S>> {
        let out_shape = self.out_shape(x.shape())?;
        let (oh, ow) = (out_shape.h, out_shape.w);
        let p_len = oh * ow;
        let k_len = self.k_len();
        let w = ps.value(&self.weight_name());
        let b = ps.value(&self.bias_name());
        debug_assert_eq!(w.len(), self.out_ch * k_len);
        debug_assert_eq!(b.len(), self.out_ch);

        let m_pad = self.out_ch.max(GEMM_MIN_M);
        let padded = m_pad != self.out_ch;
        let Workspace { col, w_pad, y_pad, .. } = ws;
        let col = ensure(col, k_len * p_len);
        let y_pad = ensure(y_pad, if padded { m_pad * p_len } else { 0 });
        let w_eff: &[S] = if padded {
            let wp = ensure(w_pad, m_pad * k_len);
            wp[..w.len()].copy_from_slice(w);
            wp[w.len()..].iter_mut().for_each(|v| *v = S::ZERO);
            wp
        } else {
            w
        };

        let mut y = Tensor4::zeros(out_shape);
        for n in 0..x.shape().n {
            self.im2col(x.sample(n), x.shape(), col, oh, ow);
            let ys = y.sample_mut(n);
            if padded {
                S::gemm(
                    m_pad,
                    k_len,
                    p_len,
                    S::ONE,
                    w_eff,
                    k_len as isize,
                    1,
                    col,
                    p_len as isize,
                    1,
                    S::ZERO,
                    y_pad,
                    p_len as isize,
                    1,
                );
                ys.copy_from_slice(&y_pad[..self.out_ch * p_len]);
            } else {
                S::gemm(
                    self.out_ch,
                    k_len,
                    p_len,
                    S::ONE,
                    w_eff,
                    k_len as isize,
                    1,
                    col,
                    p_len as isize,
                    1,
                    S::ZERO,
                    ys,
                    p_len as isize,
                    1,
                );
            }
            for oc in 0..self.out_ch {
                let bias = b[oc];
                for v in &mut ys[oc * p_len..(oc + 1) * p_len] {
                    *v += bias;
                }
            }
        }
        if !y.all_finite() {
            return Err(NnError::NumericFault {
                layer: self.name.clone(),
            });
        }
        Ok(y)
    }

    /// Accumulates weight/bias gradients and returns the input gradient.
    /// `x` must be the tensor the forward pass saw.
    pub fn backward<S: Scalar>(
        &self,
        x: &Tensor4<S>,
        dy: &Tensor4<S>,
        ps: &mut crate::ParamStore<S>,
    ) -> Result<Tensor4<S>> {
        self.backward_with(x, dy, ps, &mut Workspace::new())
    }

    pub fn backward_with<S: Scalar>(
        &self,
        x: &Tensor4<S>,
        dy: &Tensor4<S>,
        ps: &mut crate::ParamStore<S>,
        ws: &mut Workspace<S>,
    ) -> Result<Tensor4<S>> {
        let out_shape = self.out_shape(x.shape())?;
        if dy.shape() != out_shape {
            return Err(NnError::ShapeMismatch(format!(
                "conv `{}` backward: dy shape {} != {}",
                self.name,
                dy.shape(),
                out_shape
            )));
        }
        let (oh, ow) = (out_shape.h, out_shape.w);
        let p_len = oh * ow;
        let k_len = self.k_len();
        let m_pad = self.out_ch.max(GEMM_MIN_M);

        let padded = m_pad != self.out_ch;
        let mut dx = Tensor4::zeros(x.shape());
        let Workspace {
            colt,
            dcolt: dcol,
            dy_pad,
            dw_pad,
            w_pad,
            ..
        } = ws;
        let colt = ensure(colt, p_len * k_len);
        let dcol = ensure(dcol, k_len * p_len);
        let dw_pad = ensure(dw_pad, if padded { m_pad * k_len } else { 0 });
        let dy_pad = ensure(dy_pad, if padded { m_pad * p_len } else { 0 });
        if padded {
            dy_pad[self.out_ch * p_len..].iter_mut().for_each(|v| *v = S::ZERO);
        }

        // Weights padded with zero rows when out_ch is tiny (see above).
        let w = {
            let wv = ps.value(&self.weight_name());
            let wp = ensure(w_pad, m_pad * k_len);
            wp[..wv.len()].copy_from_slice(wv);
            wp[wv.len()..].iter_mut().for_each(|v| *v = S::ZERO);
            wp
        };

        for n in 0..x.shape().n {
            let dys = dy.sample(n);
            self.im2col_t(x.sample(n), x.shape(), colt, oh, ow);

            // dW(out x K) += dY(out x P) * colT(P x K)
            if padded {
                dy_pad[..self.out_ch * p_len].copy_from_slice(dys);
                S::gemm(
                    m_pad,
                    p_len,
                    k_len,
                    S::ONE,
                    dy_pad,
                    p_len as isize,
                    1,
                    colt,
                    k_len as isize,
                    1,
                    S::ZERO,
                    dw_pad,
                    k_len as isize,
                    1,
                );
                let dw = ps.grad_mut(&self.weight_name());
                for (g, d) in dw.iter_mut().zip(dw_pad[..self.out_ch * k_len].iter()) {
                    *g += *d;
                }
            } else {
                let dw = ps.grad_mut(&self.weight_name());
                S::gemm(
                    self.out_ch,
                    p_len,
                    k_len,
                    S::ONE,
                    dys,
                    p_len as isize,
                    1,
                    colt,
                    k_len as isize,
                    1,
                    S::ONE,
                    dw,
                    k_len as isize,
                    1,
                );
            }

            // db += row sums of dY
            let db = ps.grad_mut(&self.bias_name());
            for oc in 0..self.out_ch {
                let mut acc = S::ZERO;
                for v in &dys[oc * p_len..(oc + 1) * p_len] {
                    acc += *v;
                }
                db[oc] += acc;
            }

            // dcol(K x P) = W^T(K x out) * dY(out x P), then fold back.
            let dys_eff: &[S] = if padded { dy_pad } else { dys };
            S::gemm(
                k_len,
                m_pad,
                p_len,
                S::ONE,
                w,
                1,
                k_len as isize,
                dys_eff,
                p_len as isize,
                1,
                S::ZERO,
                dcol,
                p_len as isize,
                1,
            );
            self.col2im(dcol, dx.sample_mut(n), x.shape(), oh, ow);
        }
        Ok(dx)
    }

    /// Unfolds one sample (c*h*w contiguous) into a (k_len x p_len) patch
    /// matrix; out-of-bounds taps are zero.
    fn im2col<S: Scalar>(&self, xs: &[S], xshape: Shape4, col: &mut [S], oh: usize, ow: usize) {
        let (h, w) = (xshape.h, xshape.w);
        let p_len = oh * ow;
        let stride = self.stride;
        let pad = self.pad as isize;
        for ci in 0..self.in_ch {
            let plane = &xs[ci * h * w..(ci + 1) * h * w];
            for ky in 0..self.kh {
                for kx in 0..self.kw {
                    let k = (ci * self.kh + ky) * self.kw + kx;
                    let row = &mut col[k * p_len..(k + 1) * p_len];
                    let (ox_min, ox_max_excl) = self.valid_ox_range(kx, w, ow);
                    for oy in 0..oh {
                        let iy = (oy * stride) as isize + ky as isize - pad;
                        let dst = &mut row[oy * ow..(oy + 1) * ow];
                        if iy < 0 || iy >= h as isize {
                            dst.iter_mut().for_each(|v| *v = S::ZERO);
                            continue;
                        }
                        let src_row = &plane[iy as usize * w..(iy as usize + 1) * w];
                        let off = kx as isize - pad;
                        dst[..ox_min].iter_mut().for_each(|v| *v = S::ZERO);
                        if ox_max_excl > ox_min {
                            if stride == 1 {
                                let start = (ox_min as isize + off) as usize;
                                let len = ox_max_excl - ox_min;
                                dst[ox_min..ox_max_excl]
                                    .copy_from_slice(&src_row[start..start + len]);
                            } else {
                                for ox in ox_min..ox_max_excl {
                                    dst[ox] =
                                        src_row[(ox as isize * stride as isize + off) as usize];
                                }
                            }
                        }
                        dst[ox_max_excl.max(ox_min)..]
                            .iter_mut()
                            .for_each(|v| *v = S::ZERO);
                    }
                }
            }
        }
    }

    /// Valid output-x range for kernel column `kx`: `0 <= ox*stride + kx - pad < w`.
    fn valid_ox_range(&self, kx: usize, w: usize, ow: usize) -> (usize, usize) {
        let off = kx as isize - self.pad as isize;
        let ox_min = if off >= 0 {
            0
        } else {
            ((-off) as usize + self.stride - 1) / self.stride
        }
        .min(ow);
        let lim = w as isize - 1 - off;
        let ox_max_excl = if lim < 0 {
            ox_min
        } else {
            ((lim as usize) / self.stride + 1).min(ow).max(ox_min)
        };
        (ox_min, ox_max_excl)
    }

    /// Transposed unfold into (p_len x k_len): row p holds the full patch at
    /// output position p, so writes are contiguous along k. Interior
    /// positions (the vast majority) take a branch-free pointer-copy path.
    fn im2col_t<S: Scalar>(&self, xs: &[S], xshape: Shape4, colt: &mut [S], oh: usize, ow: usize) {
        let (h, w) = (xshape.h, xshape.w);
        let k_len = self.k_len();
        let (kh, kw, stride) = (self.kh, self.kw, self.stride);
        let pad = self.pad as isize;
        debug_assert!(colt.len() >= oh * ow * k_len);
        debug_assert!(xs.len() >= self.in_ch * h * w);
        for oy in 0..oh {
            // Which kernel rows are in bounds at this output row.
            let iy0 = (oy * stride) as isize - pad;
            let all_ky_valid = iy0 >= 0 && iy0 + kh as isize <= h as isize;
            for ox in 0..ow {
                let p = oy * ow + ox;
                let ix0 = (ox * stride) as isize - pad;
                let x_interior = ix0 >= 0 && ix0 as usize + kw <= w;
                let dst = &mut colt[p * k_len..(p + 1) * k_len];
                if all_ky_valid && x_interior {
                    // SAFETY: iy0/ix0 checked above; every (ci, ky) window
                    // row lies fully inside the sample plane.
                    let base = iy0 as usize * w + ix0 as usize;
                    unsafe {
                        let src0 = xs.as_ptr();
                        let dst0 = dst.as_mut_ptr();
                        let mut k = 0usize;
                        for ci in 0..self.in_ch {
                            let plane = src0.add(ci * h * w + base);
                            for ky in 0..kh {
                                std::ptr::copy_nonoverlapping(plane.add(ky * w), dst0.add(k), kw);
                                k += kw;
                            }
                        }
                    }
                } else {
                    let mut k = 0usize;
                    for ci in 0..self.in_ch {
                        let plane = &xs[ci * h * w..(ci + 1) * h * w];
                        for ky in 0..kh {
                            let iy = iy0 + ky as isize;
                            if iy < 0 || iy >= h as isize {
                                dst[k..k + kw].iter_mut().for_each(|v| *v = S::ZERO);
                                k += kw;
                                continue;
                            }
                            let src_row = &plane[iy as usize * w..(iy as usize + 1) * w];
                            for kx in 0..kw {
                                let ix = ix0 + kx as isize;
                                dst[k + kx] = if ix < 0 || ix >= w as isize {
                                    S::ZERO
                                } else {
                                    src_row[ix as usize]
                                };
                            }
                            k += kw;
                        }
                    }
                }
            }
        }
    }

    /// Transpose of `im2col`: scatter-adds a (k_len x p_len) patch gradient
    /// back onto the input gradient.
    fn col2im<S: Scalar>(&self, dcol: &[S], dxs: &mut [S], xshape: Shape4, oh: usize, ow: usize) {
        let (h, w) = (xshape.h, xshape.w);
        let p_len = oh * ow;
        let stride = self.stride;
        let pad = self.pad as isize;
        for ci in 0..self.in_ch {
            let plane = &mut dxs[ci * h * w..(ci + 1) * h * w];
            for ky in 0..self.kh {
                for kx in 0..self.kw {
                    let k = (ci * self.kh + ky) * self.kw + kx;
                    let row = &dcol[k * p_len..(k + 1) * p_len];
                    let (ox_min, ox_max_excl) = self.valid_ox_range(kx, w, ow);
                    let off = kx as isize - pad;
                    for oy in 0..oh {
                        let iy = (oy * stride) as isize + ky as isize - pad;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let dst_row = &mut plane[iy as usize * w..(iy as usize + 1) * w];
                        let src = &row[oy * ow..(oy + 1) * ow];
                        if ox_max_excl > ox_min {
                            if stride == 1 {
                                let start = (ox_min as isize + off) as usize;
                                for (d, v) in dst_row[start..start + (ox_max_excl - ox_min)]
                                    .iter_mut()
                                    .zip(src[ox_min..ox_max_excl].iter())
                                {
                                    *d += *v;
                                }
                            } else {
                                for ox in ox_min..ox_max_excl {
                                    dst_row[(ox as isize * stride as isize + off) as usize] +=
                                        src[ox];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod perf_tests {
    use super::*;

    #[test]
    #[ignore]
    fn unfold_throughput() {
        let conv = Conv2d::same("c", 32, 32, 3, 1).unwrap();
        let shape = Shape4::new(1, 32, 63, 63);
        let xs = vec![0.5f32; shape.sample_len()];
        let k_len = conv.k_len();
        let p_len = 63 * 63;
        let mut dxs = vec![0.0f32; shape.sample_len()];
        let mut col = vec![0.0f32; k_len * p_len];
        let iters = 200;
        let t0 = std::time::Instant::now();
        for _ in 0..iters {
            conv.im2col(&xs, shape, &mut col, 63, 63);
        }
        println!(
            "im2col:  {:.2} ms",
            t0.elapsed().as_secs_f64() / iters as f64 * 1e3
        );
        let t0 = std::time::Instant::now();
        for _ in 0..iters {
            conv.col2im(&col, &mut dxs, shape, 63, 63);
        }
        println!(
            "col2im:  {:.2} ms",
            t0.elapsed().as_secs_f64() / iters as f64 * 1e3
        );
    }
}
