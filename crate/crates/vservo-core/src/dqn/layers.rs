//! Differentiable layers with explicit forward caches and hand-written
//! backward passes.

use super::tensor::{col2im, conv_out_dim, im2col};
use ndarray::{Array1, Array2, Array4, Axis};
use rand::Rng;
use rand_distr::StandardNormal;

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

/// 2D convolution, zero padding, He-initialized.
#[derive(Clone)]
pub struct Conv2d {
    pub name: String,
    pub w: Array4<f64>, // [out_c, in_c, k, k]
    pub b: Array1<f64>,
    pub stride: usize,
    pub pad: usize,
    pub gw: Array4<f64>,
    pub gb: Array1<f64>,
}

pub struct ConvCache {
    cols: Array2<f64>,
    input_dim: (usize, usize, usize, usize),
}

impl Conv2d {
    pub fn new(
        name: &str,
        in_c: usize,
        out_c: usize,
        kernel: usize,
        stride: usize,
        pad: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let fan_in = (in_c * kernel * kernel) as f64;
        let std = (2.0 / fan_in).sqrt();
        let w = Array4::from_shape_fn((out_c, in_c, kernel, kernel), |_| {
            let g: f64 = rng.sample(StandardNormal);
            std * g
        });
        Self {
            name: name.to_string(),
            gw: Array4::zeros(w.dim()),
            w,
            b: Array1::zeros(out_c),
            stride,
            pad,
            gb: Array1::zeros(out_c),
        }
    }

    pub fn kernel(&self) -> usize {
        self.w.dim().3
    }

    pub fn forward(&self, x: &Array4<f64>) -> (Array4<f64>, ConvCache) {
        let (n, _, h, w) = x.dim();
        let (oc, ic, k, _) = self.w.dim();
        let oh = conv_out_dim(h, k, self.stride, self.pad);
        let ow = conv_out_dim(w, k, self.stride, self.pad);
        let cols = im2col(&x.view(), k, self.stride, self.pad);
        let wmat = self
            .w
            .view()
            .into_shape_with_order((oc, ic * k * k))
            .unwrap()
            .into_owned();
        let out_mat = wmat.dot(&cols); // [oc, n*oh*ow]
        let mut y = Array4::<f64>::zeros((n, oc, oh, ow));
        for b in 0..n {
            for c in 0..oc {
                for oy in 0..oh {
                    for ox in 0..ow {
                        y[(b, c, oy, ox)] = out_mat[(c, (b * oh + oy) * ow + ox)] + self.b[c];
                    }
                }
            }
        }
        (y, ConvCache { cols, input_dim: x.dim() })
    }

    pub fn backward(&mut self, cache: &ConvCache, dy: &Array4<f64>) -> Array4<f64> {
        let (n, oc, oh, ow) = dy.dim();
        let (_, ic, k, _) = self.w.dim();
        let mut dy_mat = Array2::<f64>::zeros((oc, n * oh * ow));
        for b in 0..n {
            for c in 0..oc {
                for oy in 0..oh {
                    for ox in 0..ow {
                        dy_mat[(c, (b * oh + oy) * ow + ox)] = dy[(b, c, oy, ox)];
                    }
                }
            }
        }
        let gw_mat = dy_mat.dot(&cache.cols.t()); // [oc, ic*k*k]
        self.gw += &gw_mat.into_shape_with_order(self.w.dim()).unwrap();
        self.gb += &dy_mat.sum_axis(Axis(1));
        let wmat = self
            .w
            .view()
            .into_shape_with_order((oc, ic * k * k))
            .unwrap()
            .into_owned();
        let dcols = wmat.t().dot(&dy_mat);
        col2im(&dcols, cache.input_dim, k, self.stride, self.pad)
    }
}

/// Per-channel batch normalization: batch statistics during training,
/// frozen running averages at evaluation.
#[derive(Clone)]
pub struct BatchNorm2d {
    pub name: String,
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
    pub g_gamma: Array1<f64>,
    pub g_beta: Array1<f64>,
}

pub struct BnCache {
    xhat: Array4<f64>,
    inv_std: Array1<f64>,
}

impl BatchNorm2d {
    pub fn new(name: &str, channels: usize) -> Self {
        Self {
            name: name.to_string(),
            gamma: Array1::ones(channels),
            beta: Array1::zeros(channels),
            running_mean: Array1::zeros(channels),
            running_var: Array1::ones(channels),
            g_gamma: Array1::zeros(channels),
            g_beta: Array1::zeros(channels),
        }
    }

    pub fn forward(&mut self, x: &Array4<f64>, training: bool) -> (Array4<f64>, Option<BnCache>) {
        let (n, c, h, w) = x.dim();
        let count = (n * h * w) as f64;
        let mut y = Array4::<f64>::zeros(x.dim());
        if training {
            let mut xhat = Array4::<f64>::zeros(x.dim());
            let mut inv_std = Array1::<f64>::zeros(c);
            for ch in 0..c {
                let slice = x.index_axis(Axis(1), ch);
                let mean = slice.sum() / count;
                let var = slice.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / count;
                let is = 1.0 / (var + BN_EPS).sqrt();
                inv_std[ch] = is;
                for b in 0..n {
                    for i in 0..h {
                        for j in 0..w {
                            let xh = (x[(b, ch, i, j)] - mean) * is;
                            xhat[(b, ch, i, j)] = xh;
                            y[(b, ch, i, j)] = self.gamma[ch] * xh + self.beta[ch];
                        }
                    }
                }
                self.running_mean[ch] =
                    (1.0 - BN_MOMENTUM) * self.running_mean[ch] + BN_MOMENTUM * mean;
                self.running_var[ch] =
                    (1.0 - BN_MOMENTUM) * self.running_var[ch] + BN_MOMENTUM * var;
            }
            (y, Some(BnCache { xhat, inv_std }))
        } else {
            for ch in 0..c {
                let is = 1.0 / (self.running_var[ch] + BN_EPS).sqrt();
                for b in 0..n {
                    for i in 0..h {
                        for j in 0..w {
                            y[(b, ch, i, j)] =
                                self.gamma[ch] * (x[(b, ch, i, j)] - self.running_mean[ch]) * is
                                    + self.beta[ch];
                        }
                    }
                }
            }
            (y, None)
        }
    }

    pub fn backward(&mut self, cache: &BnCache, dy: &Array4<f64>) -> Array4<f64> {
        let (n, c, h, w) = dy.dim();
        let count = (n * h * w) as f64;
        let mut dx = Array4::<f64>::zeros(dy.dim());
        for ch in 0..c {
            let mut sum_dy = 0.0;
            let mut sum_dy_xhat = 0.0;
            for b in 0..n {
                for i in 0..h {
                    for j in 0..w {
                        sum_dy += dy[(b, ch, i, j)];
                        sum_dy_xhat += dy[(b, ch, i, j)] * cache.xhat[(b, ch, i, j)];
                    }
                }
            }
            self.g_beta[ch] += sum_dy;
            self.g_gamma[ch] += sum_dy_xhat;
            let scale = self.gamma[ch] * cache.inv_std[ch] / count;
            for b in 0..n {
                for i in 0..h {
                    for j in 0..w {
                        dx[(b, ch, i, j)] = scale
                            * (count * dy[(b, ch, i, j)]
                                - sum_dy
                                - cache.xhat[(b, ch, i, j)] * sum_dy_xhat);
                    }
                }
            }
        }
        dx
    }
}

/// ReLU with cached activation mask.
pub fn relu_forward(x: &Array4<f64>) -> (Array4<f64>, Array4<f64>) {
    let y = x.mapv(|v| v.max(0.0));
    let mask = x.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
    (y, mask)
}

pub fn relu_backward(mask: &Array4<f64>, dy: &Array4<f64>) -> Array4<f64> {
    dy * mask
}

/// 2x2 max pooling with stride 2; cache holds flat argmax indices.
pub struct PoolCache {
    argmax: Vec<usize>,
    input_dim: (usize, usize, usize, usize),
}

pub fn maxpool_forward(x: &Array4<f64>) -> (Array4<f64>, PoolCache) {
    let (n, c, h, w) = x.dim();
    let (oh, ow) = (h / 2, w / 2);
    let mut y = Array4::<f64>::zeros((n, c, oh, ow));
    let mut argmax = vec![0usize; n * c * oh * ow];
    let slice = x.as_slice().expect("standard layout");
    let mut out_idx = 0;
    for b in 0..n {
        for ch in 0..c {
            let base = (b * c + ch) * h * w;
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut best = f64::NEG_INFINITY;
                    let mut best_idx = 0;
                    for ky in 0..2 {
                        for kx in 0..2 {
                            let idx = base + (oy * 2 + ky) * w + (ox * 2 + kx);
                            if slice[idx] > best {
                                best = slice[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    y[(b, ch, oy, ox)] = best;
                    argmax[out_idx] = best_idx;
                    out_idx += 1;
                }
            }
        }
    }
    (y, PoolCache { argmax, input_dim: x.dim() })
}

pub fn maxpool_backward(cache: &PoolCache, dy: &Array4<f64>) -> Array4<f64> {
    let mut dx = Array4::<f64>::zeros(cache.input_dim);
    let dxs = dx.as_slice_mut().unwrap();
    for (g, &idx) in dy.iter().zip(cache.argmax.iter()) {
        dxs[idx] += *g;
    }
    dx
}

/// Fully-connected layer.
#[derive(Clone)]
pub struct Linear {
    pub name: String,
    pub w: Array2<f64>, // [out, in]
    pub b: Array1<f64>,
    pub gw: Array2<f64>,
    pub gb: Array1<f64>,
}

impl Linear {
    pub fn new(name: &str, input: usize, output: usize, rng: &mut impl Rng) -> Self {
        let std = (2.0 / input as f64).sqrt();
        let w = Array2::from_shape_fn((output, input), |_| {
            let g: f64 = rng.sample(StandardNormal);
            std * g
        });
        Self {
            name: name.to_string(),
            gw: Array2::zeros(w.dim()),
            w,
            b: Array1::zeros(output),
            gb: Array1::zeros(output),
        }
    }

    pub fn zero_init(name: &str, input: usize, output: usize) -> Self {
        Self {
            name: name.to_string(),
            w: Array2::zeros((output, input)),
            b: Array1::zeros(output),
            gw: Array2::zeros((output, input)),
            gb: Array1::zeros(output),
        }
    }

    /// x: [n, in] -> [n, out]
    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.w.t()) + &self.b
    }

    pub fn backward(&mut self, x: &Array2<f64>, dy: &Array2<f64>) -> Array2<f64> {
        self.gw += &dy.t().dot(x);
        self.gb += &dy.sum_axis(Axis(0));
        dy.dot(&self.w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn conv_forward_known_kernel() {
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let mut conv = Conv2d::new("c", 1, 1, 3, 1, 1, &mut rng);
        conv.w.fill(0.0);
        conv.w[(0, 0, 1, 1)] = 1.0; // identity kernel
        conv.b[0] = 0.5;
        let x = Array4::from_shape_fn((1, 1, 4, 4), |(_, _, i, j)| (i * 4 + j) as f64);
        let (y, _) = conv.forward(&x);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(y[(0, 0, i, j)], x[(0, 0, i, j)] + 0.5);
            }
        }
    }

    #[test]
    fn maxpool_forward_backward() {
        let x = Array4::from_shape_vec(
            (1, 1, 2, 2),
            vec![1.0, 3.0, 2.0, 0.0],
        )
        .unwrap();
        let (y, cache) = maxpool_forward(&x);
        assert_eq!(y[(0, 0, 0, 0)], 3.0);
        let dy = Array4::from_elem((1, 1, 1, 1), 2.0);
        let dx = maxpool_backward(&cache, &dy);
        assert_eq!(dx[(0, 0, 0, 1)], 2.0);
        assert_eq!(dx.sum(), 2.0);
    }

    #[test]
    fn batchnorm_normalizes_training_batch() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let mut bn = BatchNorm2d::new("bn", 2);
        let x = Array4::from_shape_fn((4, 2, 3, 3), |_| {
            use rand::Rng;
            rng.gen_range(-5.0..5.0)
        });
        let (y, _) = bn.forward(&x, true);
        for ch in 0..2 {
            let s = y.index_axis(Axis(1), ch);
            let mean = s.sum() / 36.0;
            let var = s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 36.0;
            assert!(mean.abs() < 1e-9);
            assert!((var - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn batchnorm_eval_uses_running_stats() {
        let mut bn = BatchNorm2d::new("bn", 1);
        bn.running_mean[0] = 2.0;
        bn.running_var[0] = 4.0;
        let x = Array4::from_elem((1, 1, 1, 1), 4.0);
        let (y, cache) = bn.forward(&x, false);
        assert!(cache.is_none());
        assert!((y[(0, 0, 0, 0)] - (4.0 - 2.0) / (4.0f64 + BN_EPS).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn linear_forward_backward_shapes() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let mut lin = Linear::new("fc", 3, 2, &mut rng);
        let x = Array2::from_shape_fn((5, 3), |_| {
            use rand::Rng;
            rng.gen_range(-1.0..1.0)
        });
        let y = lin.forward(&x);
        assert_eq!(y.dim(), (5, 2));
        let dy = Array2::ones((5, 2));
        let dx = lin.backward(&x, &dy);
        assert_eq!(dx.dim(), (5, 3));
        assert_eq!(lin.gb[0], 5.0);
    }
}
