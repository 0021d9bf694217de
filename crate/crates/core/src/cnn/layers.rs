//! Forward and backward kernels on flat, channel-major buffers.

/// Row/column range of output positions whose input at offset `d` is in bounds.
#[inline]
fn valid_range(n: usize, d: isize) -> (usize, usize) {
    let lo = (-d).max(0) as usize;
    let hi = (n as isize - d).min(n as isize).max(0) as usize;
    (lo, hi.max(lo))
}

pub(crate) struct ConvShape {
    pub c_in: usize,
    pub c_out: usize,
    pub h: usize,
    pub w: usize,
}

/// 3x3 convolution, stride 1, zero padding 1. `weight` is `[c_out, c_in, 3, 3]`.
pub(crate) fn conv3x3_forward(s: &ConvShape, input: &[f64], weight: &[f64], bias: &[f64], out: &mut [f64]) {
    let hw = s.h * s.w;
    for o in 0..s.c_out {
        let out_o = &mut out[o * hw..(o + 1) * hw];
        out_o.fill(bias[o]);
        for i in 0..s.c_in {
            let in_i = &input[i * hw..(i + 1) * hw];
            let k = &weight[(o * s.c_in + i) * 9..(o * s.c_in + i + 1) * 9];
            for ky in 0..3 {
                let dy = ky as isize - 1;
                let (y_lo, y_hi) = valid_range(s.h, dy);
                for kx in 0..3 {
                    let dx = kx as isize - 1;
                    let (x_lo, x_hi) = valid_range(s.w, dx);
                    let wv = k[ky * 3 + kx];
                    for y in y_lo..y_hi {
                        let src_y = (y as isize + dy) as usize;
                        let src_x = (x_lo as isize + dx) as usize;
                        let dst = &mut out_o[y * s.w + x_lo..y * s.w + x_hi];
                        let src = &in_i[src_y * s.w + src_x..src_y * s.w + src_x + (x_hi - x_lo)];
                        for (d, &v) in dst.iter_mut().zip(src) {
                            *d += wv * v;
                        }
                    }
                }
            }
        }
    }
}

/// Accumulates weight/bias gradients and, if requested, the input delta.
#[allow(clippy::too_many_arguments)]
pub(crate) fn conv3x3_backward(
    s: &ConvShape,
    input: &[f64],
    weight: &[f64],
    delta: &[f64],
    grad_w: &mut [f64],
    grad_b: &mut [f64],
    mut delta_in: Option<&mut [f64]>,
) {
    let hw = s.h * s.w;
    if let Some(d) = delta_in.as_deref_mut() {
        d.fill(0.0);
    }
    for o in 0..s.c_out {
        let delta_o = &delta[o * hw..(o + 1) * hw];
        grad_b[o] += delta_o.iter().sum::<f64>();
        for i in 0..s.c_in {
            let in_i = &input[i * hw..(i + 1) * hw];
            let base = (o * s.c_in + i) * 9;
            for ky in 0..3 {
                let dy = ky as isize - 1;
                let (y_lo, y_hi) = valid_range(s.h, dy);
                for kx in 0..3 {
                    let dx = kx as isize - 1;
                    let (x_lo, x_hi) = valid_range(s.w, dx);
                    let len = x_hi - x_lo;
                    let wv = weight[base + ky * 3 + kx];
                    let mut acc = 0.0;
                    for y in y_lo..y_hi {
                        let src = (y as isize + dy) as usize * s.w + (x_lo as isize + dx) as usize;
                        let d_row = &delta_o[y * s.w + x_lo..y * s.w + x_hi];
                        let in_row = &in_i[src..src + len];
                        acc += d_row.iter().zip(in_row).map(|(a, b)| a * b).sum::<f64>();
                        if let Some(di) = delta_in.as_deref_mut() {
                            let di_row = &mut di[i * hw + src..i * hw + src + len];
                            for (t, &dv) in di_row.iter_mut().zip(d_row) {
                                *t += wv * dv;
                            }
                        }
                    }
                    grad_w[base + ky * 3 + kx] += acc;
                }
            }
        }
    }
}

pub(crate) fn relu_forward(input: &[f64], out: &mut [f64]) {
    for (o, &v) in out.iter_mut().zip(input) {
        *o = v.max(0.0);
    }
}

/// Masks `delta` in place where the forward output was not positive.
pub(crate) fn relu_backward(output: &[f64], delta: &mut [f64]) {
    for (d, &o) in delta.iter_mut().zip(output) {
        if o <= 0.0 {
            *d = 0.0;
        }
    }
}

/// 2x2/2 max pooling; records the flat input index of each maximum
/// (first maximum wins on ties).
pub(crate) fn maxpool_forward(c: usize, h: usize, w: usize, input: &[f64], out: &mut [f64], argmax: &mut [usize]) {
    let (oh, ow) = (h / 2, w / 2);
    for ch in 0..c {
        for y in 0..oh {
            for x in 0..ow {
                let mut best = ch * h * w + 2 * y * w + 2 * x;
                for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                    let idx = ch * h * w + (2 * y + dy) * w + 2 * x + dx;
                    if input[idx] > input[best] {
                        best = idx;
                    }
                }
                let o = ch * oh * ow + y * ow + x;
                out[o] = input[best];
                argmax[o] = best;
            }
        }
    }
}

pub(crate) fn maxpool_backward(argmax: &[usize], delta: &[f64], delta_in: &mut [f64]) {
    delta_in.fill(0.0);
    for (&idx, &d) in argmax.iter().zip(delta) {
        delta_in[idx] += d;
    }
}

/// `out = W x + b`, `W` is `[n_out, n_in]`.
pub(crate) fn dense_forward(input: &[f64], weight: &[f64], bias: &[f64], out: &mut [f64]) {
    let n_in = input.len();
    for (o, y) in out.iter_mut().enumerate() {
        let row = &weight[o * n_in..(o + 1) * n_in];
        *y = bias[o] + row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>();
    }
}

pub(crate) fn dense_backward(
    input: &[f64],
    weight: &[f64],
    delta: &[f64],
    grad_w: &mut [f64],
    grad_b: &mut [f64],
    delta_in: Option<&mut [f64]>,
) {
    let n_in = input.len();
    for (o, &d) in delta.iter().enumerate() {
        grad_b[o] += d;
        if d == 0.0 {
            continue;
        }
        let g = &mut grad_w[o * n_in..(o + 1) * n_in];
        for (gw, &x) in g.iter_mut().zip(input) {
            *gw += d * x;
        }
    }
    if let Some(di) = delta_in {
        di.fill(0.0);
        for (o, &d) in delta.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            let row = &weight[o * n_in..(o + 1) * n_in];
            for (t, &wv) in di.iter_mut().zip(row) {
                *t += wv * d;
            }
        }
    }
}

/// Numerically stable softmax; returns `log(sum(exp(z)))` as well.
pub(crate) fn softmax(logits: &[f64], out: &mut [f64]) -> f64 {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|z| (z - m).exp()).sum();
    let lse = m + sum.ln();
    for (p, &z) in out.iter_mut().zip(logits) {
        *p = (z - lse).exp();
    }
    lse
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conv_identity_kernel() {
        let s = ConvShape {
            c_in: 1,
            c_out: 1,
            h: 3,
            w: 4,
        };
        let input: Vec<f64> = (0..12).map(f64::from).collect();
        let mut k = vec![0.0; 9];
        k[4] = 1.0;
        let mut out = vec![0.0; 12];
        conv3x3_forward(&s, &input, &k, &[0.5], &mut out);
        let expect: Vec<f64> = input.iter().map(|v| v + 0.5).collect();
        assert_eq!(out, expect);
    }

    #[test]
    fn conv_box_kernel_matches_direct_sum() {
        let s = ConvShape {
            c_in: 1,
            c_out: 1,
            h: 4,
            w: 5,
        };
        let input: Vec<f64> = (0..20).map(|v| (v as f64 * 0.7).cos()).collect();
        let mut out = vec![0.0; 20];
        conv3x3_forward(&s, &input, &[1.0; 9], &[0.0], &mut out);
        for y in 0..4isize {
            for x in 0..5isize {
                let mut e = 0.0;
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let (yy, xx) = (y + dy, x + dx);
                        if (0..4).contains(&yy) && (0..5).contains(&xx) {
                            e += input[(yy * 5 + xx) as usize];
                        }
                    }
                }
                assert!((out[(y * 5 + x) as usize] - e).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn maxpool_picks_first_maximum() {
        let input = [1.0, 1.0, 0.0, 2.0, 0.5, 0.5, 2.0, 2.0];
        let mut out = [0.0; 2];
        let mut idx = [0; 2];
        maxpool_forward(1, 2, 4, &input, &mut out, &mut idx);
        assert_eq!(out, [1.0, 2.0]);
        assert_eq!(idx, [0, 3]);
    }

    #[test]
    fn softmax_of_equal_logits_is_uniform() {
        let mut p = [0.0; 4];
        let lse = softmax(&[0.0; 4], &mut p);
        assert!((lse - 4f64.ln()).abs() < 1e-15);
        assert!(p.iter().all(|&v| (v - 0.25).abs() < 1e-15));
    }
}
