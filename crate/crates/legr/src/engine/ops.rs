//! Raw layer kernels over flat row-major `f64` slices.
//!
//! Direct convolution loops, ordered so the innermost loop runs along
//! contiguous output/input rows (stride 1 reduces to shifted-slice
//! multiply-adds that the compiler vectorizes). All loops are sequential with
//! a fixed order, which keeps every result bit-deterministic.
//!
//! Backward kernels accumulate into their `d_input`/`d_weight` buffers; the
//! caller zero-initializes them. This is what lets fan-out layers (residual
//! skips) sum gradient contributions from several consumers.

/// Valid output range `[lo, hi)` such that `o*stride + k_off - pad` stays in
/// `[0, limit)` for all `o` in range.
#[inline]
fn valid_out_range(out_len: usize, limit: usize, stride: usize, k_off: usize, pad: usize) -> (usize, usize) {
    // o*stride + k_off - pad >= 0  =>  o >= ceil((pad - k_off)/stride)
    let lo = if k_off >= pad {
        0
    } else {
        (pad - k_off).div_ceil(stride)
    };
    // o*stride + k_off - pad <= limit-1  =>  o <= (limit-1 + pad - k_off)/stride
    let hi = if limit + pad > k_off {
        (((limit - 1 + pad) - k_off) / stride + 1).min(out_len)
    } else {
        0
    };
    (lo.min(hi), hi)
}

#[allow(clippy::too_many_arguments)]
pub fn conv_forward(
    input: &[f64],
    batch: usize,
    cin: usize,
    h: usize,
    w: usize,
    weight: &[f64],
    cout: usize,
    k: usize,
    stride: usize,
    pad: usize,
    depthwise: bool,
    output: &mut [f64],
    out_h: usize,
    out_w: usize,
) {
    debug_assert_eq!(input.len(), batch * cin * h * w);
    debug_assert_eq!(output.len(), batch * cout * out_h * out_w);
    output.iter_mut().for_each(|v| *v = 0.0);

    for n in 0..batch {
        for co in 0..cout {
            let ci_range = if depthwise { co..co + 1 } else { 0..cin };
            for ci in ci_range {
                let w_base = if depthwise {
                    co * k * k
                } else {
                    (co * cin + ci) * k * k
                };
                let in_chan = &input[(n * cin + ci) * h * w..][..h * w];
                let out_chan = &mut output[(n * cout + co) * out_h * out_w..][..out_h * out_w];
                for kh in 0..k {
                    let (oy_lo, oy_hi) = valid_out_range(out_h, h, stride, kh, pad);
                    for oy in oy_lo..oy_hi {
                        let iy = oy * stride + kh - pad;
                        let in_row = &in_chan[iy * w..][..w];
                        let out_row = &mut out_chan[oy * out_w..][..out_w];
                        for kw in 0..k {
                            let wv = weight[w_base + kh * k + kw];
                            let (ox_lo, ox_hi) = valid_out_range(out_w, w, stride, kw, pad);
                            if ox_lo >= ox_hi {
                                continue;
                            }
                            if stride == 1 {
                                // valid_out_range guarantees ox_lo + kw >= pad
                                let ix0 = ox_lo + kw - pad;
                                let src = &in_row[ix0..ix0 + (ox_hi - ox_lo)];
                                let dst = &mut out_row[ox_lo..ox_hi];
                                for (d, s) in dst.iter_mut().zip(src) {
                                    *d += wv * s;
                                }
                            } else {
                                for ox in ox_lo..ox_hi {
                                    let ix = ox * stride + kw - pad;
                                    out_row[ox] += wv * in_row[ix];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Gradient with respect to the convolution input.
#[allow(clippy::too_many_arguments)]
pub fn conv_backward_input(
    d_output: &[f64],
    batch: usize,
    cin: usize,
    h: usize,
    w: usize,
    weight: &[f64],
    cout: usize,
    k: usize,
    stride: usize,
    pad: usize,
    depthwise: bool,
    d_input: &mut [f64],
    out_h: usize,
    out_w: usize,
) {
    for n in 0..batch {
        for co in 0..cout {
            let ci_range = if depthwise { co..co + 1 } else { 0..cin };
            for ci in ci_range {
                let w_base = if depthwise {
                    co * k * k
                } else {
                    (co * cin + ci) * k * k
                };
                let din_chan = &mut d_input[(n * cin + ci) * h * w..][..h * w];
                let dout_chan = &d_output[(n * cout + co) * out_h * out_w..][..out_h * out_w];
                for kh in 0..k {
                    let (oy_lo, oy_hi) = valid_out_range(out_h, h, stride, kh, pad);
                    for oy in oy_lo..oy_hi {
                        let iy = oy * stride + kh - pad;
                        let din_row = &mut din_chan[iy * w..][..w];
                        let dout_row = &dout_chan[oy * out_w..][..out_w];
                        for kw in 0..k {
                            let wv = weight[w_base + kh * k + kw];
                            let (ox_lo, ox_hi) = valid_out_range(out_w, w, stride, kw, pad);
                            if ox_lo >= ox_hi {
                                continue;
                            }
                            if stride == 1 {
                                let ix0 = ox_lo + kw - pad;
                                let dst = &mut din_row[ix0..ix0 + (ox_hi - ox_lo)];
                                let src = &dout_row[ox_lo..ox_hi];
                                for (d, s) in dst.iter_mut().zip(src) {
                                    *d += wv * s;
                                }
                            } else {
                                for ox in ox_lo..ox_hi {
                                    let ix = ox * stride + kw - pad;
                                    din_row[ix] += wv * dout_row[ox];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Gradient with respect to the convolution weights (accumulated into
/// `d_weight`).
#[allow(clippy::too_many_arguments)]
pub fn conv_backward_weight(
    input: &[f64],
    d_output: &[f64],
    batch: usize,
    cin: usize,
    h: usize,
    w: usize,
    cout: usize,
    k: usize,
    stride: usize,
    pad: usize,
    depthwise: bool,
    d_weight: &mut [f64],
    out_h: usize,
    out_w: usize,
) {
    for n in 0..batch {
        for co in 0..cout {
            let ci_range = if depthwise { co..co + 1 } else { 0..cin };
            for ci in ci_range {
                let w_base = if depthwise {
                    co * k * k
                } else {
                    (co * cin + ci) * k * k
                };
                let in_chan = &input[(n * cin + ci) * h * w..][..h * w];
                let dout_chan = &d_output[(n * cout + co) * out_h * out_w..][..out_h * out_w];
                for kh in 0..k {
                    let (oy_lo, oy_hi) = valid_out_range(out_h, h, stride, kh, pad);
                    for kw in 0..k {
                        let (ox_lo, ox_hi) = valid_out_range(out_w, w, stride, kw, pad);
                        if ox_lo >= ox_hi || oy_lo >= oy_hi {
                            continue;
                        }
                        let mut acc = 0.0;
                        for oy in oy_lo..oy_hi {
                            let iy = oy * stride + kh - pad;
                            let in_row = &in_chan[iy * w..][..w];
                            let dout_row = &dout_chan[oy * out_w..][..out_w];
                            if stride == 1 {
                                let ix0 = ox_lo + kw - pad;
                                let src = &in_row[ix0..ix0 + (ox_hi - ox_lo)];
                                let dst = &dout_row[ox_lo..ox_hi];
                                let mut row_acc = 0.0;
                                for (d, s) in dst.iter().zip(src) {
                                    row_acc += d * s;
                                }
                                acc += row_acc;
                            } else {
                                for ox in ox_lo..ox_hi {
                                    let ix = ox * stride + kw - pad;
                                    acc += dout_row[ox] * in_row[ix];
                                }
                            }
                        }
                        d_weight[w_base + kh * k + kw] += acc;
                    }
                }
            }
        }
    }
}

pub fn relu_forward(input: &[f64], output: &mut [f64]) {
    for (o, &i) in output.iter_mut().zip(input) {
        *o = if i > 0.0 { i } else { 0.0 };
    }
}

pub fn relu_backward(input: &[f64], d_output: &[f64], d_input: &mut [f64]) {
    for ((d, &i), &g) in d_input.iter_mut().zip(input).zip(d_output) {
        if i > 0.0 {
            *d += g;
        }
    }
}

/// 2x2 max pooling with stride 2; trailing odd rows/columns are dropped.
/// Ties pick the first element in row-major window order.
pub fn maxpool2_forward(
    input: &[f64],
    batch: usize,
    channels: usize,
    h: usize,
    w: usize,
    output: &mut [f64],
    argmax: &mut [usize],
) {
    let (out_h, out_w) = (h / 2, w / 2);
    for nc in 0..batch * channels {
        let in_chan = &input[nc * h * w..][..h * w];
        let out_base = nc * out_h * out_w;
        for oy in 0..out_h {
            for ox in 0..out_w {
                let (iy, ix) = (oy * 2, ox * 2);
                let mut best_idx = iy * w + ix;
                let mut best = in_chan[best_idx];
                for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                    let idx = (iy + dy) * w + (ix + dx);
                    if in_chan[idx] > best {
                        best = in_chan[idx];
                        best_idx = idx;
                    }
                }
                output[out_base + oy * out_w + ox] = best;
                argmax[out_base + oy * out_w + ox] = nc * h * w + best_idx;
            }
        }
    }
}

pub fn maxpool2_backward(d_output: &[f64], argmax: &[usize], d_input: &mut [f64]) {
    for (&g, &idx) in d_output.iter().zip(argmax) {
        d_input[idx] += g;
    }
}

pub fn gap_forward(input: &[f64], batch: usize, channels: usize, h: usize, w: usize, output: &mut [f64]) {
    let area = (h * w) as f64;
    for nc in 0..batch * channels {
        let sum: f64 = input[nc * h * w..][..h * w].iter().sum();
        output[nc] = sum / area;
    }
}

pub fn gap_backward(d_output: &[f64], batch: usize, channels: usize, h: usize, w: usize, d_input: &mut [f64]) {
    let area = (h * w) as f64;
    for nc in 0..batch * channels {
        let g = d_output[nc] / area;
        d_input[nc * h * w..][..h * w].iter_mut().for_each(|v| *v += g);
    }
}

/// Per-channel affine `y = gamma_c * x + beta_c` over NCHW.
pub fn scale_shift_forward(
    input: &[f64],
    batch: usize,
    channels: usize,
    plane: usize,
    gamma: &[f64],
    beta: &[f64],
    output: &mut [f64],
) {
    for n in 0..batch {
        for c in 0..channels {
            let base = (n * channels + c) * plane;
            let (g, b) = (gamma[c], beta[c]);
            for (o, &i) in output[base..base + plane].iter_mut().zip(&input[base..base + plane]) {
                *o = g * i + b;
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub fn scale_shift_backward(
    input: &[f64],
    d_output: &[f64],
    batch: usize,
    channels: usize,
    plane: usize,
    gamma: &[f64],
    d_input: &mut [f64],
    d_gamma: &mut [f64],
    d_beta: &mut [f64],
) {
    for n in 0..batch {
        for c in 0..channels {
            let base = (n * channels + c) * plane;
            let g = gamma[c];
            let (mut dg, mut db) = (0.0, 0.0);
            for i in 0..plane {
                let go = d_output[base + i];
                d_input[base + i] += g * go;
                dg += go * input[base + i];
                db += go;
            }
            d_gamma[c] += dg;
            d_beta[c] += db;
        }
    }
}

/// Dense layer `out[n][o] = sum_i in[n][i] * w[o][i] + b[o]`.
pub fn dense_forward(
    input: &[f64],
    batch: usize,
    in_features: usize,
    weight: &[f64],
    bias: &[f64],
    out_features: usize,
    output: &mut [f64],
) {
    for n in 0..batch {
        let in_row = &input[n * in_features..][..in_features];
        let out_row = &mut output[n * out_features..][..out_features];
        for (o, out_v) in out_row.iter_mut().enumerate() {
            let w_row = &weight[o * in_features..][..in_features];
            let mut acc = bias[o];
            for (wv, iv) in w_row.iter().zip(in_row) {
                acc += wv * iv;
            }
            *out_v = acc;
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub fn dense_backward(
    input: &[f64],
    d_output: &[f64],
    batch: usize,
    in_features: usize,
    weight: &[f64],
    out_features: usize,
    d_input: &mut [f64],
    d_weight: &mut [f64],
    d_bias: &mut [f64],
) {
    for n in 0..batch {
        let in_row = &input[n * in_features..][..in_features];
        let dout_row = &d_output[n * out_features..][..out_features];
        let din_row = &mut d_input[n * in_features..][..in_features];
        for (o, &g) in dout_row.iter().enumerate() {
            let w_row = &weight[o * in_features..][..in_features];
            let dw_row = &mut d_weight[o * in_features..][..in_features];
            for i in 0..in_features {
                din_row[i] += g * w_row[i];
                dw_row[i] += g * in_row[i];
            }
            d_bias[o] += g;
        }
    }
}

/// Softmax cross-entropy over logits `[batch, classes]`. Returns mean loss and
/// fills `probs`; `d_logits` (when requested via `backward` below) is
/// `(probs - onehot) / batch`.
pub fn softmax_xent_forward(
    logits: &[f64],
    batch: usize,
    classes: usize,
    labels: &[usize],
    probs: &mut [f64],
) -> f64 {
    let mut loss = 0.0;
    for n in 0..batch {
        let row = &logits[n * classes..][..classes];
        let p_row = &mut probs[n * classes..][..classes];
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for (p, &v) in p_row.iter_mut().zip(row) {
            *p = (v - max).exp();
            sum += *p;
        }
        for p in p_row.iter_mut() {
            *p /= sum;
        }
        loss -= p_row[labels[n]].max(1e-300).ln();
    }
    loss / batch as f64
}

pub fn softmax_xent_backward(
    probs: &[f64],
    batch: usize,
    classes: usize,
    labels: &[usize],
    d_logits: &mut [f64],
) {
    let inv = 1.0 / batch as f64;
    for n in 0..batch {
        let p_row = &probs[n * classes..][..classes];
        let d_row = &mut d_logits[n * classes..][..classes];
        for (d, &p) in d_row.iter_mut().zip(p_row) {
            *d = p * inv;
        }
        d_row[labels[n]] -= inv;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conv_all_ones_3x3_sums_to_nine() {
        // 1x1x3x3 ones, one 3x3 ones kernel, stride 1, pad 0 -> scalar 9.
        let input = vec![1.0; 9];
        let weight = vec![1.0; 9];
        let mut out = vec![0.0; 1];
        conv_forward(&input, 1, 1, 3, 3, &weight, 1, 3, 1, 0, false, &mut out, 1, 1);
        assert_eq!(out[0], 9.0);
    }

    #[test]
    fn conv_1x1_kernel_scales_input() {
        let input = vec![1.0, 2.0, 3.0, 4.0];
        let weight = vec![2.0];
        let mut out = vec![0.0; 4];
        conv_forward(&input, 1, 1, 2, 2, &weight, 1, 1, 1, 0, false, &mut out, 2, 2);
        assert_eq!(out, vec![2.0, 4.0, 6.0, 8.0]);
    }

    #[test]
    fn maxpool_tie_picks_first_in_window_order() {
        let input = vec![5.0, 5.0, 5.0, 5.0];
        let mut out = vec![0.0; 1];
        let mut arg = vec![0usize; 1];
        maxpool2_forward(&input, 1, 1, 2, 2, &mut out, &mut arg);
        assert_eq!(out[0], 5.0);
        assert_eq!(arg[0], 0);
    }

    #[test]
    fn softmax_xent_gradient_sums_to_zero_per_row() {
        let logits = vec![0.3, -0.1, 2.0, 0.0, 0.0, 0.0];
        let labels = vec![2usize, 0];
        let mut probs = vec![0.0; 6];
        let loss = softmax_xent_forward(&logits, 2, 3, &labels, &mut probs);
        assert!(loss > 0.0);
        let mut d = vec![0.0; 6];
        softmax_xent_backward(&probs, 2, 3, &labels, &mut d);
        for n in 0..2 {
            let s: f64 = d[n * 3..(n + 1) * 3].iter().sum();
            assert!(s.abs() < 1e-12);
        }
    }
}
