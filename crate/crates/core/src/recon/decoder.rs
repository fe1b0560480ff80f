//! Dense → transposed conv → ReLU → transposed conv → sigmoid decoder with a
//! hand-written backward pass.
//!
//! Both transposed convolutions use 4×4 kernels, stride 2 and padding 1, so a
//! `base × base` map becomes `4·base × 4·base` (7 → 14 → 28 for MNIST).
//! Activations are kept channel-major over the whole batch, `(C, B, H, W)`, so
//! each layer is one GEMM plus a scatter (`col2im`) or gather (`im2col`).

use rand::Rng;

use super::linalg::{gemm, Scalar, View};
use crate::rng::stream_rng;

const KERNEL: usize = 4;
const TAPS: usize = KERNEL * KERNEL;

/// Layer sizes of a decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecoderShape {
    /// Number of selected input pixels.
    pub inputs: usize,
    pub c1: usize,
    pub c2: usize,
    /// Side of the first feature map; the output side is `4 * base`.
    pub base: usize,
}

impl DecoderShape {
    /// The standard 64/32-channel decoder for `width × width` images.
    pub fn standard(inputs: usize, width: usize) -> Option<Self> {
        (width.is_multiple_of(4) && width > 0).then_some(Self {
            inputs,
            c1: 64,
            c2: 32,
            base: width / 4,
        })
    }

    pub fn output_side(&self) -> usize {
        4 * self.base
    }

    pub fn output_len(&self) -> usize {
        self.output_side() * self.output_side()
    }

    pub fn dense_out(&self) -> usize {
        self.c1 * self.base * self.base
    }

    /// `(name, dims)` of every parameter tensor, in storage order.
    pub fn tensors(&self) -> Vec<(&'static str, Vec<usize>)> {
        vec![
            ("dense.weight", vec![self.dense_out(), self.inputs]),
            ("dense.bias", vec![self.dense_out()]),
            ("tconv1.weight", vec![self.c1, self.c2, KERNEL, KERNEL]),
            ("tconv1.bias", vec![self.c2]),
            ("tconv2.weight", vec![self.c2, 1, KERNEL, KERNEL]),
            ("tconv2.bias", vec![1]),
        ]
    }

    /// `(start, len)` of every tensor inside the flat parameter vector.
    pub fn ranges(&self) -> Vec<(usize, usize)> {
        let mut start = 0;
        self.tensors()
            .iter()
            .map(|(_, dims)| {
                let len: usize = dims.iter().product();
                let r = (start, len);
                start += len;
                r
            })
            .collect()
    }

    pub fn num_params(&self) -> usize {
        self.ranges().iter().map(|r| r.1).sum()
    }
}

/// Decoder parameters, stored in one flat vector in [`DecoderShape::tensors`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderModel<T> {
    pub shape: DecoderShape,
    pub params: Vec<T>,
}

struct Parts<'a, T> {
    dense_w: &'a [T],
    dense_b: &'a [T],
    t1_w: &'a [T],
    t1_b: &'a [T],
    t2_w: &'a [T],
    t2_b: &'a [T],
}

/// Intermediate activations of one forward pass.
pub struct Forward<T> {
    pub batch: usize,
    h0: Vec<T>,
    pub z1: Vec<T>,
    a1: Vec<T>,
    pub output: Vec<T>,
}

impl<T: Scalar> DecoderModel<T> {
    /// Glorot-uniform weights from `seed`, zero biases.
    pub fn init(shape: DecoderShape, seed: u64) -> Self {
        let mut rng = stream_rng(seed, u64::MAX);
        let mut params = vec![T::zero(); shape.num_params()];
        let fans = [
            Some((shape.inputs, shape.dense_out())),
            None,
            Some((shape.c1 * TAPS, shape.c2 * TAPS)),
            None,
            Some((shape.c2 * TAPS, TAPS)),
            None,
        ];
        for ((start, len), fan) in shape.ranges().into_iter().zip(fans) {
            if let Some((fan_in, fan_out)) = fan {
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                for p in &mut params[start..start + len] {
                    *p = T::cast(rng.gen_range(-limit..limit));
                }
            }
        }
        Self { shape, params }
    }

    fn parts(&self) -> Parts<'_, T> {
        let r = self.shape.ranges();
        let s = |i: usize| &self.params[r[i].0..r[i].0 + r[i].1];
        Parts {
            dense_w: s(0),
            dense_b: s(1),
            t1_w: s(2),
            t1_b: s(3),
            t2_w: s(4),
            t2_b: s(5),
        }
    }

    pub fn tconv1_bias_mut(&mut self) -> &mut [T] {
        let (start, len) = self.shape.ranges()[3];
        &mut self.params[start..start + len]
    }

    /// Forward pass over `batch` inputs (row-major `batch × inputs`).
    pub fn forward(&self, input: &[T], batch: usize) -> Forward<T> {
        let sh = self.shape;
        assert_eq!(
            input.len(),
            batch * sh.inputs,
            "input batch has the wrong size"
        );
        let p = self.parts();
        let d = sh.dense_out();
        let s0 = sh.base * sh.base;

        // Dense: z0 (B × D) = x · Wᵀ + b, then regroup to (C1, B, base²).
        let mut z0 = vec![T::zero(); batch * d];
        gemm(
            View::rm(input, batch, sh.inputs),
            View::tr(p.dense_w, sh.inputs, d),
            T::zero(),
            &mut z0,
        );
        let mut h0 = vec![T::zero(); batch * d];
        for b in 0..batch {
            for c in 0..sh.c1 {
                for sp in 0..s0 {
                    h0[(c * batch + b) * s0 + sp] =
                        z0[b * d + c * s0 + sp] + p.dense_b[c * s0 + sp];
                }
            }
        }

        let side1 = 2 * sh.base;
        let z1 = tconv_forward(p.t1_w, p.t1_b, &h0, sh.c1, sh.c2, batch, sh.base);
        let a1: Vec<T> = z1.iter().map(|&v| v.max(T::zero())).collect();
        let z2 = tconv_forward(p.t2_w, p.t2_b, &a1, sh.c2, 1, batch, side1);
        let output = z2.iter().map(|&v| sigmoid(v)).collect();
        Forward {
            batch,
            h0,
            z1,
            a1,
            output,
        }
    }

    /// Reconstructions for `batch` inputs, row-major `batch × output_len`.
    pub fn predict(&self, input: &[T], batch: usize) -> Vec<T> {
        self.forward(input, batch).output
    }

    /// Mean squared error of a forward pass against `target`.
    pub fn loss(fwd: &Forward<T>, target: &[T]) -> f64 {
        assert_eq!(fwd.output.len(), target.len());
        let sum: f64 = fwd
            .output
            .iter()
            .zip(target)
            .map(|(&y, &t)| {
                let e = (y - t).to_f64().unwrap();
                e * e
            })
            .sum();
        sum / target.len() as f64
    }

    /// Gradient of the mean squared error with respect to every parameter.
    pub fn backward(&self, input: &[T], fwd: &Forward<T>, target: &[T]) -> Vec<T> {
        let sh = self.shape;
        let batch = fwd.batch;
        let p = self.parts();
        let r = sh.ranges();
        let mut grad = vec![T::zero(); self.params.len()];
        let d = sh.dense_out();
        let s0 = sh.base * sh.base;
        let side1 = 2 * sh.base;

        let scale = T::cast(2.0 / target.len() as f64);
        let dz2: Vec<T> = fwd
            .output
            .iter()
            .zip(target)
            .map(|(&y, &t)| scale * (y - t) * y * (T::one() - y))
            .collect();

        let da1 = {
            let (w_grad, rest) = grad[r[4].0..].split_at_mut(r[4].1);
            tconv_backward(
                p.t2_w,
                &fwd.a1,
                &dz2,
                1,
                sh.c2,
                batch,
                side1,
                w_grad,
                &mut rest[..1],
            )
        };
        let dz1: Vec<T> = da1
            .iter()
            .zip(&fwd.z1)
            .map(|(&g, &z)| if z > T::zero() { g } else { T::zero() })
            .collect();
        let dh0 = {
            let (w_grad, rest) = grad[r[2].0..].split_at_mut(r[2].1);
            tconv_backward(
                p.t1_w,
                &fwd.h0,
                &dz1,
                sh.c2,
                sh.c1,
                batch,
                sh.base,
                w_grad,
                &mut rest[..sh.c2],
            )
        };

        // Back to (B × D) for the dense layer.
        let mut dz0 = vec![T::zero(); batch * d];
        for b in 0..batch {
            for c in 0..sh.c1 {
                for sp in 0..s0 {
                    dz0[b * d + c * s0 + sp] = dh0[(c * batch + b) * s0 + sp];
                }
            }
        }
        let (dw, db) = grad[..r[1].0 + r[1].1].split_at_mut(r[1].0);
        gemm(
            View::tr(&dz0, d, batch),
            View::rm(input, batch, sh.inputs),
            T::zero(),
            dw,
        );
        for row in dz0.chunks(d) {
            for (g, &v) in db.iter_mut().zip(row) {
                *g += v;
            }
        }
        grad
    }
}

fn sigmoid<T: Scalar>(v: T) -> T {
    T::one() / (T::one() + (-v).exp())
}

/// Transposed convolution (4×4, stride 2, pad 1) of a `(cin, B, side, side)`
/// map into `(cout, B, 2side, 2side)`. `weight` is `(cin, cout, 4, 4)`.
fn tconv_forward<T: Scalar>(
    weight: &[T],
    bias: &[T],
    input: &[T],
    cin: usize,
    cout: usize,
    batch: usize,
    side: usize,
) -> Vec<T> {
    let spatial = batch * side * side;
    let rows = cout * TAPS;
    let mut cols = vec![T::zero(); rows * spatial];
    gemm(
        View::tr(weight, rows, cin),
        View::rm(input, cin, spatial),
        T::zero(),
        &mut cols,
    );

    let out_side = 2 * side;
    let out_plane = out_side * out_side;
    let mut out = vec![T::zero(); cout * batch * out_plane];
    for co in 0..cout {
        for ky in 0..KERNEL {
            for kx in 0..KERNEL {
                let row = &cols[((co * KERNEL + ky) * KERNEL + kx) * spatial..][..spatial];
                for b in 0..batch {
                    let plane = &mut out[(co * batch + b) * out_plane..][..out_plane];
                    for iy in 0..side {
                        let Some(oy) = (2 * iy + ky).checked_sub(1).filter(|&o| o < out_side)
                        else {
                            continue;
                        };
                        let src = &row[(b * side + iy) * side..][..side];
                        let dst = &mut plane[oy * out_side..][..out_side];
                        for (ix, &v) in src.iter().enumerate() {
                            if let Some(ox) = (2 * ix + kx).checked_sub(1).filter(|&o| o < out_side)
                            {
                                dst[ox] += v;
                            }
                        }
                    }
                }
            }
        }
    }
    for co in 0..cout {
        for v in &mut out[co * batch * out_plane..(co + 1) * batch * out_plane] {
            *v += bias[co];
        }
    }
    out
}

/// Backward of [`tconv_forward`]. Writes weight and bias gradients, returns the
/// input gradient.
#[allow(clippy::too_many_arguments)]
fn tconv_backward<T: Scalar>(
    weight: &[T],
    input: &[T],
    d_out: &[T],
    cout: usize,
    cin: usize,
    batch: usize,
    side: usize,
    w_grad: &mut [T],
    b_grad: &mut [T],
) -> Vec<T> {
    let spatial = batch * side * side;
    let rows = cout * TAPS;
    let out_side = 2 * side;
    let out_plane = out_side * out_side;

    for co in 0..cout {
        b_grad[co] = d_out[co * batch * out_plane..(co + 1) * batch * out_plane]
            .iter()
            .copied()
            .sum();
    }

    // im2col: dcols[(co, ky, kx)][(b, iy, ix)] = d_out[co][b][2iy+ky-1][2ix+kx-1].
    let mut dcols = vec![T::zero(); rows * spatial];
    for co in 0..cout {
        for ky in 0..KERNEL {
            for kx in 0..KERNEL {
                let row = &mut dcols[((co * KERNEL + ky) * KERNEL + kx) * spatial..][..spatial];
                for b in 0..batch {
                    let plane = &d_out[(co * batch + b) * out_plane..][..out_plane];
                    for iy in 0..side {
                        let Some(oy) = (2 * iy + ky).checked_sub(1).filter(|&o| o < out_side)
                        else {
                            continue;
                        };
                        let src = &plane[oy * out_side..][..out_side];
                        let dst = &mut row[(b * side + iy) * side..][..side];
                        for (ix, d) in dst.iter_mut().enumerate() {
                            if let Some(ox) = (2 * ix + kx).checked_sub(1).filter(|&o| o < out_side)
                            {
                                *d = src[ox];
                            }
                        }
                    }
                }
            }
        }
    }

    gemm(
        View::rm(input, cin, spatial),
        View::tr(&dcols, spatial, rows),
        T::zero(),
        w_grad,
    );
    let mut d_in = vec![T::zero(); cin * spatial];
    gemm(
        View::rm(weight, cin, rows),
        View::rm(&dcols, rows, spatial),
        T::zero(),
        &mut d_in,
    );
    d_in
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct scatter definition of the transposed convolution.
    fn naive_tconv(
        weight: &[f64],
        bias: &[f64],
        input: &[f64],
        cin: usize,
        cout: usize,
        batch: usize,
        side: usize,
    ) -> Vec<f64> {
        let os = 2 * side;
        let mut out = vec![0.0; cout * batch * os * os];
        for co in 0..cout {
            for b in 0..batch {
                for oy in 0..os {
                    for ox in 0..os {
                        out[((co * batch + b) * os + oy) * os + ox] = bias[co];
                    }
                }
            }
        }
        for ci in 0..cin {
            for b in 0..batch {
                for iy in 0..side {
                    for ix in 0..side {
                        let v = input[((ci * batch + b) * side + iy) * side + ix];
                        for co in 0..cout {
                            for ky in 0..4 {
                                for kx in 0..4 {
                                    let oy = (2 * iy + ky) as isize - 1;
                                    let ox = (2 * ix + kx) as isize - 1;
                                    if oy < 0 || ox < 0 || oy >= os as isize || ox >= os as isize {
                                        continue;
                                    }
                                    let w = weight[((ci * cout + co) * 4 + ky) * 4 + kx];
                                    out[((co * batch + b) * os + oy as usize) * os
                                        + ox as usize] += v * w;
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn tconv_matches_scatter_definition() {
        let mut rng = stream_rng(5, 0);
        let (cin, cout, batch, side) = (3, 2, 2, 3);
        let weight: Vec<f64> = (0..cin * cout * 16)
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let bias = vec![0.3, -0.2];
        let input: Vec<f64> = (0..cin * batch * side * side)
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let fast = tconv_forward(&weight, &bias, &input, cin, cout, batch, side);
        let slow = naive_tconv(&weight, &bias, &input, cin, cout, batch, side);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn output_is_in_unit_interval() {
        let shape = DecoderShape::standard(5, 28).unwrap();
        let m = DecoderModel::<f32>::init(shape, 1);
        let x = vec![0.5f32; 10];
        let out = m.predict(&x, 2);
        assert_eq!(out.len(), 2 * 784);
        assert!(out.iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn parameter_layout() {
        let shape = DecoderShape::standard(25, 28).unwrap();
        assert_eq!(shape.dense_out(), 3136);
        assert_eq!(
            shape.num_params(),
            3136 * 25 + 3136 + 64 * 32 * 16 + 32 + 32 * 16 + 1
        );
        assert!(DecoderShape::standard(25, 30).is_none());
    }
}
