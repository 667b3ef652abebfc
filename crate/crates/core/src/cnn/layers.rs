//! Layer kinds with exact forward and backward passes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tensor::Tensor4;

/// Same-padded (zero fill) stride-1 convolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conv2d {
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    /// `(out_ch, in_ch, kernel, kernel)`
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Conv2d {
    pub fn he_uniform<R: Rng>(in_ch: usize, out_ch: usize, kernel: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (in_ch * kernel * kernel) as f64).sqrt();
        Self {
            in_ch,
            out_ch,
            kernel,
            weight: (0..out_ch * in_ch * kernel * kernel)
                .map(|_| rng.random_range(-limit..limit))
                .collect(),
            bias: vec![0.0; out_ch],
        }
    }

    fn w(&self, o: usize, i: usize, ky: usize, kx: usize) -> f64 {
        self.weight[((o * self.in_ch + i) * self.kernel + ky) * self.kernel + kx]
    }

    /// For output coordinate `out` and kernel tap `k`, the valid output range
    /// such that `out + k - pad` stays inside `[0, len)`.
    fn valid(len: usize, k: usize, pad: usize) -> (usize, usize) {
        let lo = pad.saturating_sub(k);
        let hi = (len + pad).saturating_sub(k).min(len);
        (lo, hi.max(lo))
    }

    pub fn forward(&self, x: &Tensor4) -> Tensor4 {
        let (n, _, h, w) = x.dims();
        let pad = self.kernel / 2;
        let mut out = Tensor4::zeros(n, self.out_ch, h, w);
        let plane = h * w;
        for b in 0..n {
            for o in 0..self.out_ch {
                let dst = &mut out.data[(b * self.out_ch + o) * plane..][..plane];
                dst.iter_mut().for_each(|v| *v = self.bias[o]);
                for i in 0..self.in_ch {
                    let src = &x.data[(b * self.in_ch + i) * plane..][..plane];
                    for ky in 0..self.kernel {
                        let (y0, y1) = Self::valid(h, ky, pad);
                        for kx in 0..self.kernel {
                            let wv = self.w(o, i, ky, kx);
                            let (x0, x1) = Self::valid(w, kx, pad);
                            for y in y0..y1 {
                                let sy = y + ky - pad;
                                let d = &mut dst[y * w + x0..y * w + x1];
                                let s = &src[sy * w + x0 + kx - pad..sy * w + x1 + kx - pad];
                                for (dv, sv) in d.iter_mut().zip(s) {
                                    *dv += wv * sv;
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Returns `(dx, dweight, dbias)`.
    pub fn backward(&self, x: &Tensor4, dy: &Tensor4) -> (Tensor4, Vec<f64>, Vec<f64>) {
        let (n, _, h, w) = x.dims();
        let pad = self.kernel / 2;
        let plane = h * w;
        let mut dx = Tensor4::zeros(n, self.in_ch, h, w);
        let mut dw = vec![0.0; self.weight.len()];
        let mut db = vec![0.0; self.out_ch];
        for b in 0..n {
            for o in 0..self.out_ch {
                let g = &dy.data[(b * self.out_ch + o) * plane..][..plane];
                db[o] += g.iter().sum::<f64>();
                for i in 0..self.in_ch {
                    let src = &x.data[(b * self.in_ch + i) * plane..][..plane];
                    let dsrc = &mut dx.data[(b * self.in_ch + i) * plane..][..plane];
                    for ky in 0..self.kernel {
                        let (y0, y1) = Self::valid(h, ky, pad);
                        for kx in 0..self.kernel {
                            let widx = ((o * self.in_ch + i) * self.kernel + ky) * self.kernel + kx;
                            let wv = self.weight[widx];
                            let (x0, x1) = Self::valid(w, kx, pad);
                            let mut acc = 0.0;
                            for y in y0..y1 {
                                let sy = y + ky - pad;
                                let gr = &g[y * w + x0..y * w + x1];
                                let off = sy * w + x0 + kx - pad;
                                let sr = &src[off..off + (x1 - x0)];
                                let dr = &mut dsrc[off..off + (x1 - x0)];
                                for ((gv, sv), dv) in gr.iter().zip(sr).zip(dr.iter_mut()) {
                                    acc += gv * sv;
                                    *dv += gv * wv;
                                }
                            }
                            dw[widx] += acc;
                        }
                    }
                }
            }
        }
        (dx, dw, db)
    }
}

/// Fully connected layer over the flattened per-sample input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    /// `(outputs, inputs)`
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn he_uniform<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let limit = (6.0 / inputs as f64).sqrt();
        Self {
            inputs,
            outputs,
            weight: (0..inputs * outputs)
                .map(|_| rng.random_range(-limit..limit))
                .collect(),
            bias: vec![0.0; outputs],
        }
    }

    pub fn forward(&self, x: &Tensor4) -> Tensor4 {
        let mut out = Tensor4::zeros(x.n, self.outputs, 1, 1);
        for b in 0..x.n {
            let xs = x.sample(b);
            for o in 0..self.outputs {
                let row = &self.weight[o * self.inputs..(o + 1) * self.inputs];
                out.data[b * self.outputs + o] =
                    self.bias[o] + row.iter().zip(xs).map(|(w, v)| w * v).sum::<f64>();
            }
        }
        out
    }

    pub fn backward(&self, x: &Tensor4, dy: &Tensor4) -> (Tensor4, Vec<f64>, Vec<f64>) {
        let mut dx = Tensor4::zeros(x.n, x.c, x.h, x.w);
        let mut dw = vec![0.0; self.weight.len()];
        let mut db = vec![0.0; self.outputs];
        for b in 0..x.n {
            let xs = x.sample(b);
            let dxs = &mut dx.data[b * self.inputs..(b + 1) * self.inputs];
            for o in 0..self.outputs {
                let g = dy.data[b * self.outputs + o];
                db[o] += g;
                let row = &self.weight[o * self.inputs..(o + 1) * self.inputs];
                let drow = &mut dw[o * self.inputs..(o + 1) * self.inputs];
                for k in 0..self.inputs {
                    drow[k] += g * xs[k];
                    dxs[k] += g * row[k];
                }
            }
        }
        (dx, dw, db)
    }
}

fn with_data(x: &Tensor4, data: Vec<f64>) -> Tensor4 {
    Tensor4 {
        n: x.n,
        c: x.c,
        h: x.h,
        w: x.w,
        data,
    }
}

pub fn relu_forward(x: &Tensor4) -> Tensor4 {
    with_data(x, x.data.iter().map(|&v| v.max(0.0)).collect())
}

pub fn relu_backward(x: &Tensor4, dy: &Tensor4) -> Tensor4 {
    let data = x
        .data
        .iter()
        .zip(&dy.data)
        .map(|(&v, &g)| if v > 0.0 { g } else { 0.0 })
        .collect();
    with_data(x, data)
}

/// Index (into `x.data`) of the first maximum of each 2x2 window.
fn pool_argmax(x: &Tensor4) -> Vec<usize> {
    let (oh, ow) = (x.h / 2, x.w / 2);
    let mut idx = Vec::with_capacity(x.n * x.c * oh * ow);
    for plane in 0..x.n * x.c {
        let base = plane * x.h * x.w;
        for y in 0..oh {
            for xx in 0..ow {
                let cands = [
                    base + 2 * y * x.w + 2 * xx,
                    base + 2 * y * x.w + 2 * xx + 1,
                    base + (2 * y + 1) * x.w + 2 * xx,
                    base + (2 * y + 1) * x.w + 2 * xx + 1,
                ];
                let best = cands
                    .into_iter()
                    .reduce(|a, b| if x.data[b] > x.data[a] { b } else { a })
                    .expect("four candidates");
                idx.push(best);
            }
        }
    }
    idx
}

/// 2x2 max pooling, stride 2.
pub fn maxpool_forward(x: &Tensor4) -> Tensor4 {
    let data = pool_argmax(x).into_iter().map(|i| x.data[i]).collect();
    Tensor4 {
        n: x.n,
        c: x.c,
        h: x.h / 2,
        w: x.w / 2,
        data,
    }
}

/// Routes each incoming gradient to the argmax of its window.
pub fn maxpool_backward(x: &Tensor4, dy: &Tensor4) -> Tensor4 {
    let mut dx = Tensor4::zeros(x.n, x.c, x.h, x.w);
    for (g, i) in dy.data.iter().zip(pool_argmax(x)) {
        dx.data[i] += g;
    }
    dx
}

/// Row-wise softmax over the per-sample features.
pub fn softmax_forward(x: &Tensor4) -> Tensor4 {
    let k = x.sample_len();
    let mut data = Vec::with_capacity(x.data.len());
    for row in x.data.chunks_exact(k) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        data.extend(exps.into_iter().map(|e| e / sum));
    }
    with_data(x, data)
}

/// Jacobian-vector product of softmax: `p * (g - sum(g * p))`.
pub fn softmax_backward(x: &Tensor4, dy: &Tensor4) -> Tensor4 {
    let p = softmax_forward(x);
    let k = x.sample_len();
    let mut data = Vec::with_capacity(x.data.len());
    for (pr, gr) in p.data.chunks_exact(k).zip(dy.data.chunks_exact(k)) {
        let dot: f64 = pr.iter().zip(gr).map(|(a, b)| a * b).sum();
        data.extend(pr.iter().zip(gr).map(|(pv, gv)| pv * (gv - dot)));
    }
    with_data(x, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_tensor(n: usize, c: usize, h: usize, w: usize, seed: u64) -> Tensor4 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..n * c * h * w).map(|_| rng.random_range(-1.0..1.0)).collect();
        Tensor4::new(n, c, h, w, data).unwrap()
    }

    /// Scalar objective sum(out * probe) so every output contributes.
    fn objective(out: &Tensor4, probe: &Tensor4) -> f64 {
        out.data.iter().zip(&probe.data).map(|(a, b)| a * b).sum()
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-4)
    }

    fn check_input_grad(
        x: &Tensor4,
        probe: &Tensor4,
        fwd: impl Fn(&Tensor4) -> Tensor4,
        dx: &Tensor4,
    ) {
        let eps = 1e-4;
        for i in 0..x.data.len() {
            let mut plus = x.clone();
            plus.data[i] += eps;
            let mut minus = x.clone();
            minus.data[i] -= eps;
            let num = (objective(&fwd(&plus), probe) - objective(&fwd(&minus), probe)) / (2.0 * eps);
            assert!(rel_err(num, dx.data[i]) < 1e-4, "input {i}: {num} vs {}", dx.data[i]);
        }
    }

    #[test]
    fn conv_hand_trace() {
        // 4x4 input 0..16, all-ones 3x3 kernel, bias 0.5: each output is the
        // sum of its zero-padded 3x3 neighbourhood plus 0.5.
        let x = Tensor4::new(1, 1, 4, 4, (0..16).map(f64::from).collect()).unwrap();
        let conv = Conv2d {
            in_ch: 1,
            out_ch: 1,
            kernel: 3,
            weight: vec![1.0; 9],
            bias: vec![0.5],
        };
        let y = conv.forward(&x);
        assert_eq!((y.h, y.w), (4, 4));
        #[rustfmt::skip]
        let expected = [
            10.0, 18.0, 24.0, 18.0,
            27.0, 45.0, 54.0, 39.0,
            51.0, 81.0, 90.0, 63.0,
            42.0, 66.0, 72.0, 50.0,
        ];
        for (a, b) in y.data.iter().zip(expected) {
            assert_eq!(*a, b + 0.5);
        }
    }

    #[test]
    fn conv_asymmetric_kernel_hand_trace() {
        // Kernel picks only the right neighbour: out[y][x] = in[y][x+1] (0 past the edge).
        let x = Tensor4::new(1, 1, 2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let mut weight = vec![0.0; 9];
        weight[5] = 1.0;
        let conv = Conv2d { in_ch: 1, out_ch: 1, kernel: 3, weight, bias: vec![0.0] };
        assert_eq!(conv.forward(&x).data, vec![2.0, 3.0, 0.0, 5.0, 6.0, 0.0]);
    }

    #[test]
    fn conv_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let conv = Conv2d::he_uniform(2, 3, 3, &mut rng);
        let x = random_tensor(2, 2, 5, 4, 2);
        let probe = random_tensor(2, 3, 5, 4, 3);
        let (dx, dw, db) = conv.backward(&x, &probe);
        check_input_grad(&x, &probe, |t| conv.forward(t), &dx);
        let eps = 1e-4;
        for i in 0..conv.weight.len() {
            let mut p = conv.clone();
            p.weight[i] += eps;
            let mut m = conv.clone();
            m.weight[i] -= eps;
            let num = (objective(&p.forward(&x), &probe) - objective(&m.forward(&x), &probe)) / (2.0 * eps);
            assert!(rel_err(num, dw[i]) < 1e-4);
        }
        for o in 0..3 {
            let mut p = conv.clone();
            p.bias[o] += eps;
            let mut m = conv.clone();
            m.bias[o] -= eps;
            let num = (objective(&p.forward(&x), &probe) - objective(&m.forward(&x), &probe)) / (2.0 * eps);
            assert!(rel_err(num, db[o]) < 1e-4);
        }
    }

    #[test]
    fn dense_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let dense = Dense::he_uniform(12, 5, &mut rng);
        let x = random_tensor(3, 3, 2, 2, 5);
        let probe = random_tensor(3, 5, 1, 1, 6);
        let (dx, dw, _) = dense.backward(&x, &probe);
        check_input_grad(&x, &probe, |t| dense.forward(t), &dx);
        let eps = 1e-4;
        for i in 0..dense.weight.len() {
            let mut p = dense.clone();
            p.weight[i] += eps;
            let mut m = dense.clone();
            m.weight[i] -= eps;
            let num = (objective(&p.forward(&x), &probe) - objective(&m.forward(&x), &probe)) / (2.0 * eps);
            assert!(rel_err(num, dw[i]) < 1e-4);
        }
    }

    #[test]
    fn relu_pool_softmax_gradients() {
        let x = random_tensor(2, 2, 4, 6, 7);
        let probe = random_tensor(2, 2, 4, 6, 8);
        check_input_grad(&x, &probe, relu_forward, &relu_backward(&x, &probe));

        let probe = random_tensor(2, 2, 2, 3, 9);
        check_input_grad(&x, &probe, maxpool_forward, &maxpool_backward(&x, &probe));

        let x = random_tensor(3, 4, 1, 1, 10);
        let probe = random_tensor(3, 4, 1, 1, 11);
        check_input_grad(&x, &probe, softmax_forward, &softmax_backward(&x, &probe));
    }

    #[test]
    fn conv_keeps_spatial_dims() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for k in [1, 3, 5] {
            let conv = Conv2d::he_uniform(1, 2, k, &mut rng);
            let y = conv.forward(&random_tensor(1, 1, 7, 5, 1));
            assert_eq!((y.h, y.w), (7, 5));
        }
    }

    #[test]
    fn pool_routes_to_argmax_only() {
        let x = random_tensor(1, 2, 4, 4, 12);
        let dy = random_tensor(1, 2, 2, 2, 13);
        let dx = maxpool_backward(&x, &dy);
        let total_in: f64 = dy.data.iter().sum();
        let total_out: f64 = dx.data.iter().sum();
        assert!((total_in - total_out).abs() < 1e-12);
        assert_eq!(dx.data.iter().filter(|v| **v != 0.0).count(), 8);
        for i in pool_argmax(&x) {
            assert!(dx.data[i] != 0.0);
        }
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let p = softmax_forward(&random_tensor(4, 7, 1, 1, 14));
        for row in p.data.chunks(7) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|v| *v > 0.0 && *v < 1.0));
        }
    }
}
