//! im2col/col2im plumbing for the convolution layers.

use ndarray::{Array2, Array4, ArrayView4};

/// Output spatial size of a convolution.
pub fn conv_out_dim(input: usize, kernel: usize, stride: usize, pad: usize) -> usize {
    (input + 2 * pad - kernel) / stride + 1
}

/// Unfold [n, c, h, w] into a [c*kh*kw, n*oh*ow] patch matrix.
/// Out-of-bounds taps read as zero.
pub fn im2col(
    x: &ArrayView4<f64>,
    kernel: usize,
    stride: usize,
    pad: usize,
) -> Array2<f64> {
    let (n, c, h, w) = x.dim();
    let oh = conv_out_dim(h, kernel, stride, pad);
    let ow = conv_out_dim(w, kernel, stride, pad);
    let mut cols = Array2::<f64>::zeros((c * kernel * kernel, n * oh * ow));
    for b in 0..n {
        for oy in 0..oh {
            for ox in 0..ow {
                let col = (b * oh + oy) * ow + ox;
                for ch in 0..c {
                    for ky in 0..kernel {
                        let iy = (oy * stride + ky) as isize - pad as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        for kx in 0..kernel {
                            let ix = (ox * stride + kx) as isize - pad as isize;
                            if ix < 0 || ix >= w as isize {
                                continue;
                            }
                            let row = (ch * kernel + ky) * kernel + kx;
                            cols[(row, col)] = x[(b, ch, iy as usize, ix as usize)];
                        }
                    }
                }
            }
        }
    }
    cols
}

/// Fold a patch-matrix gradient back into input shape, accumulating
/// overlapping taps.
pub fn col2im(
    dcols: &Array2<f64>,
    input_dim: (usize, usize, usize, usize),
    kernel: usize,
    stride: usize,
    pad: usize,
) -> Array4<f64> {
    let (n, c, h, w) = input_dim;
    let oh = conv_out_dim(h, kernel, stride, pad);
    let ow = conv_out_dim(w, kernel, stride, pad);
    let mut dx = Array4::<f64>::zeros((n, c, h, w));
    for b in 0..n {
        for oy in 0..oh {
            for ox in 0..ow {
                let col = (b * oh + oy) * ow + ox;
                for ch in 0..c {
                    for ky in 0..kernel {
                        let iy = (oy * stride + ky) as isize - pad as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        for kx in 0..kernel {
                            let ix = (ox * stride + kx) as isize - pad as isize;
                            if ix < 0 || ix >= w as isize {
                                continue;
                            }
                            let row = (ch * kernel + ky) * kernel + kx;
                            dx[(b, ch, iy as usize, ix as usize)] += dcols[(row, col)];
                        }
                    }
                }
            }
        }
    }
    dx
}
