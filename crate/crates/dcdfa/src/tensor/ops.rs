//! Tensor operations and their backward rules.
//!
//! Broadcasting is deliberately narrow: elementwise ops accept equal
//! shapes, or a left operand whose shape is `[B] ++ rhs.shape` (an
//! explicit batch dim). Anything else is a shape error. Core ops error
//! on domain violations (log of non-positive, division by zero); loss
//! code clamps before calling them.

use super::{Tape, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolKind {
    SpatialAvg,
    SpatialMax,
    GlobalAvg,
}

#[derive(Clone, Copy)]
enum BinKind {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinKind {
    fn name(self) -> &'static str {
        match self {
            BinKind::Add => "add",
            BinKind::Sub => "sub",
            BinKind::Mul => "mul",
            BinKind::Div => "div",
        }
    }
}

/// Accept equal shapes, or lhs = [B] ++ rhs.shape (rhs repeats across the
/// batch dim; the `i % m` index math below covers both cases).
fn binary_layout(op: &'static str, a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape() == b.shape() {
        return Ok(());
    }
    if a.shape().len() == b.shape().len() + 1 && &a.shape()[1..] == b.shape() {
        return Ok(());
    }
    Err(Error::ShapeMismatch {
        op,
        left: a.shape().to_vec(),
        right: b.shape().to_vec(),
    })
}

impl Tensor {
    fn binary(&self, rhs: &Tensor, kind: BinKind, tape: &Tape) -> Result<Tensor> {
        binary_layout(kind.name(), self, rhs)?;
        let p = tape.precision();
        let a = self.data();
        let b = rhs.data();
        let n = a.len();
        let m = b.len();
        if matches!(kind, BinKind::Div) && b.iter().any(|&x| x == 0.0) {
            return Err(Error::DivByZero);
        }
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let bi = b[i % m];
            let v = match kind {
                BinKind::Add => a[i] + bi,
                BinKind::Sub => a[i] - bi,
                BinKind::Mul => a[i] * bi,
                BinKind::Div => a[i] / bi,
            };
            out.push(p.store(v));
        }
        drop(a);
        drop(b);
        let result = Tensor::raw_output(self.shape().to_vec(), out, false);
        let (lhs_h, rhs_h, out_h) = (self.clone(), rhs.clone(), result.clone());
        tape.record(
            &[self, rhs],
            &result,
            Box::new(move || {
                let go = match out_h.grad() {
                    Some(g) => g,
                    None => return,
                };
                let av = lhs_h.to_vec();
                let bv = rhs_h.to_vec();
                let m = bv.len();
                let mut da = vec![0.0; av.len()];
                let mut db = vec![0.0; m];
                for i in 0..av.len() {
                    let j = i % m;
                    match kind {
                        BinKind::Add => {
                            da[i] += go[i];
                            db[j] += go[i];
                        }
                        BinKind::Sub => {
                            da[i] += go[i];
                            db[j] -= go[i];
                        }
                        BinKind::Mul => {
                            da[i] += go[i] * bv[j];
                            db[j] += go[i] * av[i];
                        }
                        BinKind::Div => {
                            da[i] += go[i] / bv[j];
                            db[j] -= go[i] * av[i] / (bv[j] * bv[j]);
                        }
                    }
                }
                lhs_h.accumulate_grad(&da);
                rhs_h.accumulate_grad(&db);
            }),
        );
        Ok(result)
    }

    pub fn add(&self, rhs: &Tensor, tape: &Tape) -> Result<Tensor> {
        self.binary(rhs, BinKind::Add, tape)
    }

    pub fn sub(&self, rhs: &Tensor, tape: &Tape) -> Result<Tensor> {
        self.binary(rhs, BinKind::Sub, tape)
    }

    pub fn mul(&self, rhs: &Tensor, tape: &Tape) -> Result<Tensor> {
        self.binary(rhs, BinKind::Mul, tape)
    }

    pub fn div(&self, rhs: &Tensor, tape: &Tape) -> Result<Tensor> {
        self.binary(rhs, BinKind::Div, tape)
    }

    fn unary(
        &self,
        tape: &Tape,
        fwd: impl Fn(f64) -> f64,
        dfdx: impl Fn(f64, f64) -> f64 + 'static,
    ) -> Tensor {
        let p = tape.precision();
        let out: Vec<f64> = self.data().iter().map(|&x| p.store(fwd(x))).collect();
        let result = Tensor::raw_output(self.shape().to_vec(), out, false);
        let (x_h, out_h) = (self.clone(), result.clone());
        tape.record(
            &[self],
            &result,
            Box::new(move || {
                let go = match out_h.grad() {
                    Some(g) => g,
                    None => return,
                };
                let xv = x_h.to_vec();
                let yv = out_h.to_vec();
                let da: Vec<f64> = (0..xv.len()).map(|i| go[i] * dfdx(xv[i], yv[i])).collect();
                x_h.accumulate_grad(&da);
            }),
        );
        result
    }

    pub fn relu(&self, tape: &Tape) -> Tensor {
        self.unary(tape, |x| x.max(0.0), |x, _| if x > 0.0 { 1.0 } else { 0.0 })
    }

    pub fn sigmoid(&self, tape: &Tape) -> Tensor {
        self.unary(
            tape,
            |x| 1.0 / (1.0 + (-x).exp()),
            |_, y| y * (1.0 - y),
        )
    }

    pub fn exp(&self, tape: &Tape) -> Tensor {
        self.unary(tape, f64::exp, |_, y| y)
    }

    pub fn log(&self, tape: &Tape) -> Result<Tensor> {
        if let Some(&bad) = self.data().iter().find(|&&x| x <= 0.0) {
            return Err(Error::LogDomain(bad));
        }
        Ok(self.unary(tape, f64::ln, |x, _| 1.0 / x))
    }

    pub fn sqrt(&self, tape: &Tape) -> Result<Tensor> {
        if let Some(&bad) = self.data().iter().find(|&&x| x < 0.0) {
            return Err(Error::InvalidArgument(format!("sqrt of negative {bad}")));
        }
        // Backward denominator floored so sqrt(0) stays finite.
        Ok(self.unary(tape, f64::sqrt, |_, y| 0.5 / y.max(1e-6)))
    }

    pub fn clamp(&self, lo: f64, hi: f64, tape: &Tape) -> Tensor {
        self.unary(
            tape,
            move |x| x.clamp(lo, hi),
            move |x, _| if x >= lo && x <= hi { 1.0 } else { 0.0 },
        )
    }

    pub fn add_scalar(&self, c: f64, tape: &Tape) -> Tensor {
        self.unary(tape, move |x| x + c, |_, _| 1.0)
    }

    pub fn mul_scalar(&self, c: f64, tape: &Tape) -> Tensor {
        self.unary(tape, move |x| x * c, move |_, _| c)
    }

    /// c - x, elementwise.
    pub fn sub_from_scalar(&self, c: f64, tape: &Tape) -> Tensor {
        self.unary(tape, move |x| c - x, |_, _| -1.0)
    }

    /// Elementwise division by a scalar tensor (gradient flows to both).
    pub fn div_scalar_t(&self, s: &Tensor, tape: &Tape) -> Result<Tensor> {
        if !s.is_scalar() {
            return Err(Error::ShapeMismatch {
                op: "div_scalar_t",
                left: self.shape().to_vec(),
                right: s.shape().to_vec(),
            });
        }
        let sv = s.item();
        if sv == 0.0 {
            return Err(Error::DivByZero);
        }
        let p = tape.precision();
        let out: Vec<f64> = self.data().iter().map(|&x| p.store(x / sv)).collect();
        let result = Tensor::raw_output(self.shape().to_vec(), out, false);
        let (x_h, s_h, out_h) = (self.clone(), s.clone(), result.clone());
        tape.record(
            &[self, s],
            &result,
            Box::new(move || {
                let go = match out_h.grad() {
                    Some(g) => g,
                    None => return,
                };
                let xv = x_h.to_vec();
                let sv = s_h.item();
                let da: Vec<f64> = go.iter().map(|&g| g / sv).collect();
                let ds: f64 = go
                    .iter()
                    .zip(&xv)
                    .map(|(&g, &x)| -g * x / (sv * sv))
                    .sum();
                x_h.accumulate_grad(&da);
                s_h.accumulate_grad(&[ds]);
            }),
        );
        Ok(result)
    }

    /// Standard 2-D matrix product, f64 accumulation.
    pub fn matmul(&self, rhs: &Tensor, tape: &Tape) -> Result<Tensor> {
        let (a_shape, b_shape) = (self.shape(), rhs.shape());
        if a_shape.len() != 2 || b_shape.len() != 2 || a_shape[1] != b_shape[0] {
            return Err(Error::InnerDimMismatch {
                left: a_shape.to_vec(),
                right: b_shape.to_vec(),
            });
        }
        let (m, k, n) = (a_shape[0], a_shape[1], b_shape[1]);
        let p = tape.precision();
        let a = self.data();
        let b = rhs.data();
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                let mut acc = 0.0;
                for t in 0..k {
                    acc += a[i * k + t] * b[t * n + j];
                }
                out[i * n + j] = p.store(acc);
            }
        }
        drop(a);
        drop(b);
        let result = Tensor::raw_output(vec![m, n], out, false);
        let (a_h, b_h, out_h) = (self.clone(), rhs.clone(), result.clone());
        tape.record(
            &[self, rhs],
            &result,
            Box::new(move || {
                let go = match out_h.grad() {
                    Some(g) => g,
                    None => return,
                };
                let av = a_h.to_vec();
                let bv = b_h.to_vec();
                // dA = G * B^T, dB = A^T * G
                let mut da = vec![0.0; m * k];
                let mut db = vec![0.0; k * n];
                for i in 0..m {
                    for t in 0..k {
                        let mut acc = 0.0;
                        for j in 0..n {
                            acc += go[i * n + j] * bv[t * n + j];
                        }
                        da[i * k + t] = acc;
                    }
                }
                for t in 0..k {
                    for j in 0..n {
                        let mut acc = 0.0;
                        for i in 0..m {
                            acc += av[i * k + t] * go[i * n + j];
                        }
                        db[t * n + j] = acc;
                    }
                }
                a_h.accumulate_grad(&da);
                b_h.accumulate_grad(&db);
            }),
        );
        Ok(result)
    }

    /// W[m,k] . x[k] -> [m]
    pub fn matvec(&self, x: &Tensor, tape: &Tape) -> Result<Tensor> {
        let (w_shape, x_shape) = (self.shape(), x.shape());
        if w_shape.len() != 2 || x_shape.len() != 1 || w_shape[1] != x_shape[0] {
            return Err(Error::InnerDimMismatch {
                left: w_shape.to_vec(),
                right: x_shape.to_vec(),
            });
        }
        let (m, k) = (w_shape[0], w_shape[1]);
        let p = tape.precision();
        let w = self.data();
        let xv = x.data();
        let mut out = Vec::with_capacity(m);
        for i in 0..m {
            let mut acc = 0.0;
            for t in 0..k {
                acc += w[i * k + t] * xv[t];
            }
            out.push(p.store(acc));
        }
        drop(w);
        drop(xv);
        let result = Tensor::raw_output(vec![m], out, false);
        let (w_h, x_h, out_h) = (self.clone(), x.clone(), result.clone());
        tape.record(
            &[self, x],
            &result,
            Box::new(move || {
                let go = match out_h.grad() {
                    Some(g) => g,
                    None => return,
                };
                let wv = w_h.to_vec();
                let xv = x_h.to_vec();
                let mut dw = vec![0.0; m * k];
                let mut dx = vec![0.0; k];
                for i in 0..m {
                    for t in 0..k {
                        dw[i * k + t] = go[i] * xv[t];
                        dx[t] += wv[i * k + t] * go[i];
                    }
                }
                w_h.accumulate_grad(&dw);
                x_h.accumulate_grad(&dx);
            }),
        );
        Ok(result)
    }

    /// 2-D convolution, NCHW layout, symmetric stride and zero padding.
    pub fn conv2d(&self, kernels: &Tensor, stride: usize, padding: usize, tape: &Tape) -> Result<Tensor> {
        let xs = self.shape();
        let ks = kernels.shape();
        if xs.len() != 4 || ks.len() != 4 || xs[1] != ks[1] {
            return Err(Error::ShapeMismatch {
                op: "conv2d",
                left: xs.to_vec(),
                right: ks.to_vec(),
            });
        }
        if stride == 0 {
            return Err(Error::InvalidArgument("conv2d stride must be >= 1".into()));
        }
        let (bsz, c_in, h, w) = (xs[0], xs[1], xs[2], xs[3]);
        let (c_out, _, kh, kw) = (ks[0], ks[1], ks[2], ks[3]);
        if kh > h + 2 * padding || kw > w + 2 * padding {
            return Err(Error::InvalidArgument(format!(
                "kernel {kh}x{kw} larger than padded input {}x{}",
                h + 2 * padding,
                w + 2 * padding
            )));
        }
        let oh = (h + 2 * padding - kh) / stride + 1;
        let ow = (w + 2 * padding - kw) / stride + 1;
        let p = tape.precision();
        let conv_forward = move |x: &[f64], k: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; bsz * c_out * oh * ow];
            for b in 0..bsz {
                for co in 0..c_out {
                    for oy in 0..oh {
                        for ox in 0..ow {
                            let mut acc = 0.0;
                            for ci in 0..c_in {
                                for ky in 0..kh {
                                    let iy = (oy * stride + ky) as isize - padding as isize;
                                    if iy < 0 || iy >= h as isize {
                                        continue;
                                    }
                                    let xrow = ((b * c_in + ci) * h + iy as usize) * w;
                                    let krow = ((co * c_in + ci) * kh + ky) * kw;
                                    for kx in 0..kw {
                                        let ix = (ox * stride + kx) as isize - padding as isize;
                                        if ix < 0 || ix >= w as isize {
                                            continue;
                                        }
                                        acc += x[xrow + ix as usize] * k[krow + kx];
                                    }
                                }
                            }
                            out[((b * c_out + co) * oh + oy) * ow + ox] = p.store(acc);
                        }
                    }
                }
            }
            out
        };
        let out = conv_forward(&self.data(), &kernels.data());
        let result = Tensor::raw_output(vec![bsz, c_out, oh, ow], out, false);
        let (x_h, k_h, out_h) = (self.clone(), kernels.clone(), result.clone());
        tape.record(
            &[self, kernels],
            &result,
            Box::new(move || {
                let go = match out_h.grad() {
                    Some(g) => g,
                    None => return,
                };
                let xv = x_h.to_vec();
                let kv = k_h.to_vec();
                let mut dx = vec![0.0; xv.len()];
                let mut dk = vec![0.0; kv.len()];
                for b in 0..bsz {
                    for co in 0..c_out {
                        for oy in 0..oh {
                            for ox in 0..ow {
                                let g = go[((b * c_out + co) * oh + oy) * ow + ox];
                                if g == 0.0 {
                                    continue;
                                }
                                for ci in 0..c_in {
                                    for ky in 0..kh {
                                        let iy = (oy * stride + ky) as isize - padding as isize;
                                        if iy < 0 || iy >= h as isize {
                                            continue;
                                        }
                                        let xrow = ((b * c_in + ci) * h + iy as usize) * w;
                                        let krow = ((co * c_in + ci) * kh + ky) * kw;
                                        for kx in 0..kw {
                                            let ix = (ox * stride + kx) as isize - padding as isize;
                                            if ix < 0 || ix >= w as isize {
                                                continue;
                                            }
                                            dx[xrow + ix as usize] += g * kv[krow + kx];
                                            dk[krow + kx] += g * xv[xrow + ix as usize];
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
                x_h.accumulate_grad(&dx);
                k_h.accumulate_grad(&dk);
            }),
        );
        Ok(result)
    }

    /// Per-channel bias add on a [B,C,H,W] map.
    pub fn add_channel_bias(&self, bias: &Tensor, tape: &Tape) -> Result<Tensor> {
        let xs = self.shape();
        if xs.len() != 4 || bias.shape() != [xs[1]] {
            return Err(Error::ShapeMismatch {
                op: "add_channel_bias",
                left: xs.to_vec(),
                right: bias.shape().to_vec(),
            });
        }
        let (bsz, c, h, w) = (xs[0], xs[1], xs[2], xs[3]);
        let plane = h * w;
        let p = tape.precision();
        let x = self.data();
        let bv = bias.data();
        let mut out = Vec::with_capacity(x.len());
        for bi in 0..bsz {
            for ci in 0..c {
                let base = (bi * c + ci) * plane;
                for i in 0..plane {
                    out.push(p.store(x[base + i] + bv[ci]));
                }
            }
        }
        drop(x);
        drop(bv);
        let result = Tensor::raw_output(xs.to_vec(), out, false);
        let (x_h, b_h, out_h) = (self.clone(), bias.clone(), result.clone());
        tape.record(
            &[self, bias],
            &result,
            Box::new(move || {
                let go = match out_h.grad() {
                    Some(g) => g,
                    None => return,
                };
                let mut db = vec![0.0; c];
                for bi in 0..bsz {
                    for ci in 0..c {
                        let base = (bi * c + ci) * plane;
                        for i in 0..plane {
                            db[ci] += go[base + i];
                        }
                    }
                }
                x_h.accumulate_grad(&go);
                b_h.accumulate_grad(&db);
            }),
        );
        Ok(result)
    }

    /// Spatial pooling: [C,H,W] -> [C] or [B,C,H,W] -> [B,C].
    ///
    /// GlobalAvg and SpatialAvg perform the same per-channel mean over all
    /// H*W positions; both names exist because callers use them in
    /// different roles. Max pooling routes the gradient to the first
    /// (row-major) maximal element.
    pub fn pool(&self, kind: PoolKind, tape: &Tape) -> Result<Tensor> {
        let xs = self.shape().to_vec();
        let (bsz, c, h, w) = match xs.len() {
            3 => (1usize, xs[0], xs[1], xs[2]),
            4 => (xs[0], xs[1], xs[2], xs[3]),
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "pool expects rank 3 or 4, got shape {xs:?}"
                )))
            }
        };
        if h == 0 || w == 0 {
            return Err(Error::InvalidArgument("pool over empty spatial extent".into()));
        }
        let plane = h * w;
        let p = tape.precision();
        let x = self.data();
        let mut out = Vec::with_capacity(bsz * c);
        let mut argmax = Vec::with_capacity(bsz * c);
        for bc in 0..bsz * c {
            let base = bc * plane;
            match kind {
                PoolKind::SpatialAvg | PoolKind::GlobalAvg => {
                    let mut acc = 0.0;
                    for i in 0..plane {
                        acc += x[base + i];
                    }
                    out.push(p.store(acc / plane as f64));
                }
                PoolKind::SpatialMax => {
                    let mut best = x[base];
                    let mut best_i = 0usize;
                    for i in 1..plane {
                        if x[base + i] > best {
                            best = x[base + i];
                            best_i = i;
                        }
                    }
                    out.push(p.store(best));
                    argmax.push(best_i);
                }
            }
        }
        drop(x);
        let out_shape = if xs.len() == 3 { vec![c] } else { vec![bsz, c] };
        let result = Tensor::raw_output(out_shape, out, false);
        let (x_h, out_h) = (self.clone(), result.clone());
        tape.record(
            &[self],
            &result,
            Box::new(move || {
                let go = match out_h.grad() {
                    Some(g) => g,
                    None => return,
                };
                let mut dx = vec![0.0; bsz * c * plane];
                for bc in 0..bsz * c {
                    let base = bc * plane;
                    match kind {
                        PoolKind::SpatialAvg | PoolKind::GlobalAvg => {
                            let share = go[bc] / plane as f64;
                            for i in 0..plane {
                                dx[base + i] += share;
                            }
                        }
                        PoolKind::SpatialMax => {
                            dx[base + argmax[bc]] += go[bc];
                        }
                    }
                }
                x_h.accumulate_grad(&dx);
            }),
        );
        Ok(result)
    }

    /// Sum of all elements -> [1].
    pub fn sum(&self, tape: &Tape) -> Result<Tensor> {
        let p = tape.precision();
        let acc: f64 = self.data().iter().sum();
        let result = Tensor::raw_output(vec![1], vec![p.store(acc)], false);
        let (x_h, out_h) = (self.clone(), result.clone());
        let n = self.numel();
        tape.record(
            &[self],
            &result,
            Box::new(move || {
                let go = match out_h.grad() {
                    Some(g) => g,
                    None => return,
                };
                x_h.accumulate_grad(&vec![go[0]; n]);
            }),
        );
        Ok(result)
    }

    /// Mean of all elements -> [1].
    pub fn mean(&self, tape: &Tape) -> Result<Tensor> {
        let n = self.numel();
        if n == 0 {
            return Err(Error::InvalidArgument("mean of empty tensor".into()));
        }
        let p = tape.precision();
        let acc: f64 = self.data().iter().sum();
        let result = Tensor::raw_output(vec![1], vec![p.store(acc / n as f64)], false);
        let (x_h, out_h) = (self.clone(), result.clone());
        tape.record(
            &[self],
            &result,
            Box::new(move || {
                let go = match out_h.grad() {
                    Some(g) => g,
                    None => return,
                };
                x_h.accumulate_grad(&vec![go[0] / n as f64; n]);
            }),
        );
        Ok(result)
    }

    /// Slice index `i` along dim 0: [B, rest..] -> [rest..].
    pub fn batch_item(&self, i: usize, tape: &Tape) -> Result<Tensor> {
        let xs = self.shape();
        if xs.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "batch_item expects rank >= 2, got {xs:?}"
            )));
        }
        if i >= xs[0] {
            return Err(Error::InvalidArgument(format!(
                "batch index {i} out of range for batch {}",
                xs[0]
            )));
        }
        let rest: Vec<usize> = xs[1..].to_vec();
        let chunk: usize = rest.iter().product();
        let out = self.data()[i * chunk..(i + 1) * chunk].to_vec();
        let result = Tensor::raw_output(rest, out, false);
        let (x_h, out_h) = (self.clone(), result.clone());
        let total = self.numel();
        tape.record(
            &[self],
            &result,
            Box::new(move || {
                let go = match out_h.grad() {
                    Some(g) => g,
                    None => return,
                };
                let mut dx = vec![0.0; total];
                dx[i * chunk..(i + 1) * chunk].copy_from_slice(&go);
                x_h.accumulate_grad(&dx);
            }),
        );
        Ok(result)
    }

    /// Inner product of two equal-shape tensors -> [1].
    pub fn dot(&self, rhs: &Tensor, tape: &Tape) -> Result<Tensor> {
        self.mul(rhs, tape)?.sum(tape)
    }

    /// x / ||x||_2; errors on (near-)zero norm.
    pub fn l2_normalize(&self, tape: &Tape) -> Result<Tensor> {
        let norm = self.dot(self, tape)?.sqrt(tape)?;
        if norm.item() < 1e-12 {
            return Err(Error::ZeroNorm);
        }
        self.div_scalar_t(&norm, tape)
    }
}

/// Sum a non-empty list of same-shape tensors.
pub fn add_many(tensors: &[Tensor], tape: &Tape) -> Result<Tensor> {
    let mut iter = tensors.iter();
    let first = iter
        .next()
        .ok_or_else(|| Error::InvalidArgument("add_many of empty list".into()))?;
    let mut acc = first.clone();
    for t in iter {
        acc = acc.add(t, tape)?;
    }
    Ok(acc)
}

/// Mean of a non-empty list of same-shape tensors.
pub fn mean_many(tensors: &[Tensor], tape: &Tape) -> Result<Tensor> {
    let n = tensors.len();
    Ok(add_many(tensors, tape)?.mul_scalar(1.0 / n as f64, tape))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tape;

    fn t(shape: &[usize], data: &[f64]) -> Tensor {
        Tensor::from_vec(shape, data.to_vec()).unwrap()
    }

    #[test]
    fn mul_elementwise() {
        let tape = Tape::inference();
        let a = t(&[3], &[1.0, 2.0, 3.0]);
        let b = t(&[3], &[2.0, 2.0, 2.0]);
        assert_eq!(a.mul(&b, &tape).unwrap().to_vec(), vec![2.0, 4.0, 6.0]);
    }

    #[test]
    fn sigmoid_of_zero_is_half() {
        let tape = Tape::inference();
        let x = t(&[1], &[0.0]);
        assert_eq!(x.sigmoid(&tape).item(), 0.5);
    }

    #[test]
    fn relu_clamps_negatives() {
        let tape = Tape::inference();
        let x = t(&[3], &[-1.0, 0.0, 2.0]);
        assert_eq!(x.relu(&tape).to_vec(), vec![0.0, 0.0, 2.0]);
    }

    #[test]
    fn shape_mismatch_names_both_shapes() {
        let tape = Tape::inference();
        let a = t(&[2], &[1.0, 2.0]);
        let b = t(&[3], &[1.0, 2.0, 3.0]);
        let err = a.add(&b, &tape).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("[2]") && msg.contains("[3]"), "{msg}");
    }

    #[test]
    fn batch_broadcast_add() {
        let tape = Tape::training();
        let a = Tensor::param(&[2, 3], vec![1.0; 6]).unwrap();
        let b = Tensor::param(&[3], vec![1.0, 2.0, 3.0]).unwrap();
        let y = a.add(&b, &tape).unwrap();
        assert_eq!(y.to_vec(), vec![2.0, 3.0, 4.0, 2.0, 3.0, 4.0]);
        let loss = y.sum(&tape).unwrap();
        tape.backward(&loss).unwrap();
        assert_eq!(b.grad().unwrap(), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn matmul_identity() {
        let tape = Tape::inference();
        let i2 = t(&[2, 2], &[1.0, 0.0, 0.0, 1.0]);
        let m = t(&[2, 2], &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(i2.matmul(&m, &tape).unwrap().to_vec(), vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn matmul_dot_product() {
        let tape = Tape::inference();
        let a = t(&[1, 2], &[1.0, 2.0]);
        let b = t(&[2, 1], &[3.0, 4.0]);
        assert_eq!(a.matmul(&b, &tape).unwrap().to_vec(), vec![11.0]);
    }

    #[test]
    fn matmul_inner_dim_error() {
        let tape = Tape::inference();
        let a = t(&[2, 3], &[0.0; 6]);
        let b = t(&[2, 2], &[0.0; 4]);
        assert!(matches!(
            a.matmul(&b, &tape),
            Err(Error::InnerDimMismatch { .. })
        ));
    }

    #[test]
    fn matmul_gradients() {
        // loss = sum(A @ B): dA = ones @ B^T, dB = A^T @ ones
        let tape = Tape::training();
        let a = Tensor::param(&[2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = Tensor::param(&[2, 2], vec![0.5, 0.25, 0.75, 0.125]).unwrap();
        let loss = a.matmul(&b, &tape).unwrap().sum(&tape).unwrap();
        tape.backward(&loss).unwrap();
        assert_eq!(a.grad().unwrap(), vec![0.75, 0.875, 0.75, 0.875]);
        assert_eq!(b.grad().unwrap(), vec![4.0, 4.0, 6.0, 6.0]);
    }

    #[test]
    fn conv_identity_kernel() {
        let tape = Tape::inference();
        let x = t(&[1, 1, 2, 3], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let k = t(&[1, 1, 1, 1], &[1.0]);
        let y = x.conv2d(&k, 1, 0, &tape).unwrap();
        assert_eq!(y.to_vec(), x.to_vec());
    }

    #[test]
    fn conv_all_ones_sums() {
        let tape = Tape::inference();
        let x = t(&[1, 1, 3, 3], &[1.0; 9]);
        let k = t(&[1, 1, 3, 3], &[1.0; 9]);
        let y = x.conv2d(&k, 1, 0, &tape).unwrap();
        assert_eq!(y.shape(), &[1, 1, 1, 1]);
        assert_eq!(y.item(), 9.0);
    }

    #[test]
    fn conv_kernel_too_large_errors() {
        let tape = Tape::inference();
        let x = t(&[1, 1, 2, 2], &[1.0; 4]);
        let k = t(&[1, 1, 3, 3], &[1.0; 9]);
        assert!(x.conv2d(&k, 1, 0, &tape).is_err());
    }

    #[test]
    fn conv_output_shape_stride_two() {
        let tape = Tape::inference();
        let x = t(&[1, 1, 32, 16], &vec![0.0; 512]);
        let k = t(&[4, 1, 3, 3], &vec![0.0; 36]);
        let y = x.conv2d(&k, 2, 1, &tape).unwrap();
        assert_eq!(y.shape(), &[1, 4, 16, 8]);
    }

    #[test]
    fn pool_avg_and_max() {
        let tape = Tape::inference();
        let x = t(&[1, 2, 2], &[1.0, 3.0, 5.0, 7.0]);
        assert_eq!(x.pool(PoolKind::SpatialAvg, &tape).unwrap().to_vec(), vec![4.0]);
        assert_eq!(x.pool(PoolKind::SpatialMax, &tape).unwrap().to_vec(), vec![7.0]);
        assert_eq!(x.pool(PoolKind::GlobalAvg, &tape).unwrap().to_vec(), vec![4.0]);
    }

    #[test]
    fn pool_constant_input() {
        let tape = Tape::inference();
        let x = t(&[1, 3, 3], &[0.25; 9]);
        assert_eq!(x.pool(PoolKind::SpatialAvg, &tape).unwrap().item(), 0.25);
        assert_eq!(x.pool(PoolKind::SpatialMax, &tape).unwrap().item(), 0.25);
    }

    #[test]
    fn max_pool_grad_goes_to_first_max_on_tie() {
        let tape = Tape::training();
        let x = Tensor::param(&[1, 2, 2], vec![5.0, 5.0, 1.0, 5.0]).unwrap();
        let loss = x.pool(PoolKind::SpatialMax, &tape).unwrap().sum(&tape).unwrap();
        tape.backward(&loss).unwrap();
        assert_eq!(x.grad().unwrap(), vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn log_rejects_non_positive() {
        let tape = Tape::inference();
        let x = t(&[2], &[1.0, 0.0]);
        assert!(matches!(x.log(&tape), Err(Error::LogDomain(_))));
    }

    #[test]
    fn div_rejects_zero() {
        let tape = Tape::inference();
        let a = t(&[2], &[1.0, 1.0]);
        let b = t(&[2], &[2.0, 0.0]);
        assert!(matches!(a.div(&b, &tape), Err(Error::DivByZero)));
    }

    #[test]
    fn l2_normalize_unit_norm() {
        let tape = Tape::inference();
        let x = t(&[3], &[3.0, 0.0, 4.0]);
        let u = x.l2_normalize(&tape).unwrap();
        let n: f64 = u.to_vec().iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((n - 1.0).abs() < 1e-6);
    }

    #[test]
    fn l2_normalize_zero_vector_errors() {
        let tape = Tape::inference();
        let x = t(&[3], &[0.0; 3]);
        assert!(matches!(x.l2_normalize(&tape), Err(Error::ZeroNorm)));
    }

    #[test]
    fn batch_item_slices_and_scatters() {
        let tape = Tape::training();
        let x = Tensor::param(&[2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let row = x.batch_item(1, &tape).unwrap();
        assert_eq!(row.to_vec(), vec![4.0, 5.0, 6.0]);
        let loss = row.sum(&tape).unwrap();
        tape.backward(&loss).unwrap();
        assert_eq!(x.grad().unwrap(), vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
    }
}
