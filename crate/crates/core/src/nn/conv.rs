use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::linear::{axpy, dot};
use super::{Param, Tensor3};
use crate::{Error, Result};

/// Temporal kernel width; taps read `t-1`, `t` and `t+1`.
pub const KERNEL_WIDTH: usize = 3;

fn check(op: &'static str, x: &Tensor3, k: &Param, b: &Param) -> Result<(usize, usize)> {
    let s = k.shape();
    if s.len() != 3 || s[2] != KERNEL_WIDTH {
        return Err(Error::dim(op, "kernel [out, in, 3]", format!("{s:?}")));
    }
    let (d_out, d_in) = (s[0], s[1]);
    b.expect_shape(op, &[d_out])?;
    if x.features() != d_in {
        return Err(Error::dim(
            op,
            format!("input features {d_in} for kernel {s:?}"),
            format!("input {}", x.shape_str()),
        ));
    }
    Ok((d_out, d_in))
}

/// Reorders `[out, in, k]` into `[k, out, in]` so each tap is a contiguous
/// row-major matrix.
fn taps(kernel: &[f64], d_out: usize, d_in: usize) -> Vec<f64> {
    let mut t = vec![0.0; kernel.len()];
    for o in 0..d_out {
        for i in 0..d_in {
            for k in 0..KERNEL_WIDTH {
                t[(k * d_out + o) * d_in + i] = kernel[(o * d_in + i) * KERNEL_WIDTH + k];
            }
        }
    }
    t
}

/// Same-padded width-3 convolution along time:
/// `out[b,t,o] = bias[o] + Σ_{i,k} K[o,i,k]·x[b,t+k-1,i]`, zeros outside `[0, T)`.
pub fn conv1d_forward(x: &Tensor3, kernel: &Param, b: &Param) -> Result<Tensor3> {
    let (d_out, d_in) = check("conv1d_forward", x, kernel, b)?;
    let w = taps(&kernel.value, d_out, d_in);
    let time = x.time();
    let mut out = Tensor3::zeros(x.batch(), time, d_out);
    for bi in 0..x.batch() {
        for t in 0..time {
            let or = out.row_mut(bi, t);
            or.copy_from_slice(&b.value);
            for k in 0..KERNEL_WIDTH {
                let Some(src) = (t + k).checked_sub(1).filter(|&s| s < time) else {
                    continue;
                };
                let xr = x.row(bi, src);
                let tap = &w[k * d_out * d_in..(k + 1) * d_out * d_in];
                for (slot, wr) in or.iter_mut().zip(tap.chunks_exact(d_in)) {
                    *slot += dot(wr, xr);
                }
            }
        }
    }
    Ok(out)
}

/// Returns the input gradient (transposed convolution of `grad_out`) and
/// accumulates kernel and bias gradients.
pub fn conv1d_backward(
    x: &Tensor3,
    kernel: &mut Param,
    b: &mut Param,
    grad_out: &Tensor3,
) -> Result<Tensor3> {
    let (d_out, d_in) = check("conv1d_backward", x, kernel, b)?;
    grad_out.expect_dims("conv1d_backward", [x.batch(), x.time(), d_out])?;
    let w = taps(&kernel.value, d_out, d_in);
    let mut gw = vec![0.0; w.len()];
    let time = x.time();
    let mut grad_x = Tensor3::zeros(x.batch(), time, d_in);
    for bi in 0..x.batch() {
        for t in 0..time {
            let gr = grad_out.row(bi, t);
            for (o, &g) in gr.iter().enumerate() {
                b.grad[o] += g;
            }
            for k in 0..KERNEL_WIDTH {
                let Some(src) = (t + k).checked_sub(1).filter(|&s| s < time) else {
                    continue;
                };
                let base = k * d_out * d_in;
                for (o, &g) in gr.iter().enumerate() {
                    if g == 0.0 {
                        continue;
                    }
                    let row = base + o * d_in..base + (o + 1) * d_in;
                    axpy(g, &w[row.clone()], grad_x.row_mut(bi, src));
                    axpy(g, x.row(bi, src), &mut gw[row]);
                }
            }
        }
    }
    for o in 0..d_out {
        for i in 0..d_in {
            for k in 0..KERNEL_WIDTH {
                kernel.grad[(o * d_in + i) * KERNEL_WIDTH + k] += gw[(k * d_out + o) * d_in + i];
            }
        }
    }
    Ok(grad_x)
}
