use alloc::format;

use super::{Param, Tensor3};
use crate::{Error, Result};

fn check(op: &'static str, x: &Tensor3, w: &Param, b: &Param) -> Result<(usize, usize)> {
    if w.shape().len() != 2 {
        return Err(Error::dim(op, "rank-2 weight", format!("{:?}", w.shape())));
    }
    let (d_out, d_in) = (w.shape()[0], w.shape()[1]);
    b.expect_shape(op, &[d_out])?;
    if x.features() != d_in {
        return Err(Error::dim(
            op,
            format!("input features {d_in} for weight {:?}", w.shape()),
            format!("input {}", x.shape_str()),
        ));
    }
    Ok((d_out, d_in))
}

/// `out[b,t,:] = W·x[b,t,:] + bias`, independently per timestep.
pub fn linear_forward(x: &Tensor3, w: &Param, b: &Param) -> Result<Tensor3> {
    let (d_out, d_in) = check("linear_forward", x, w, b)?;
    let mut out = Tensor3::zeros(x.batch(), x.time(), d_out);
    for bi in 0..x.batch() {
        for t in 0..x.time() {
            let xr = x.row(bi, t);
            let or = out.row_mut(bi, t);
            for (o, (slot, wr)) in or.iter_mut().zip(w.value.chunks_exact(d_in)).enumerate() {
                *slot = b.value[o] + dot(wr, xr);
            }
        }
    }
    Ok(out)
}

/// Returns the input gradient and accumulates into `w.grad` and `b.grad`.
pub fn linear_backward(
    x: &Tensor3,
    w: &mut Param,
    b: &mut Param,
    grad_out: &Tensor3,
) -> Result<Tensor3> {
    let (d_out, d_in) = check("linear_backward", x, w, b)?;
    grad_out.expect_dims("linear_backward", [x.batch(), x.time(), d_out])?;
    let mut grad_x = Tensor3::zeros(x.batch(), x.time(), d_in);
    for bi in 0..x.batch() {
        for t in 0..x.time() {
            let xr = x.row(bi, t);
            let gr = grad_out.row(bi, t);
            let gx = grad_x.row_mut(bi, t);
            for (o, &g) in gr.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                let row = o * d_in..(o + 1) * d_in;
                axpy(g, &w.value[row.clone()], gx);
                axpy(g, xr, &mut w.grad[row]);
                b.grad[o] += g;
            }
        }
    }
    Ok(grad_x)
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    const LANES: usize = 8;
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; LANES];
    let (ca, cb) = (a.chunks_exact(LANES), b.chunks_exact(LANES));
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..LANES {
            acc[l] += x[l] * y[l];
        }
    }
    acc.iter().sum::<f64>() + tail
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::{assert_grads_close, numeric_grad, random_tensor};
    use alloc::vec;

    fn identity(n: usize) -> Param {
        let mut w = Param::zeros("w", &[n, n]);
        for i in 0..n {
            w.value[i * n + i] = 1.0;
        }
        w
    }

    #[test]
    fn identity_weight_passes_input() {
        let x = random_tensor(2, 3, 4, 1);
        let out = linear_forward(&x, &identity(4), &Param::zeros("b", &[4])).unwrap();
        assert_eq!(out, x);
    }

    #[test]
    fn bias_only() {
        let x = Tensor3::zeros(2, 3, 2);
        let b = Param::from_values("b", &[2], vec![1.0, 2.0]).unwrap();
        let out = linear_forward(&x, &Param::zeros("w", &[2, 2]), &b).unwrap();
        for bi in 0..2 {
            for t in 0..3 {
                assert_eq!(out.row(bi, t), &[1.0, 2.0]);
            }
        }
    }

    #[test]
    fn hand_matrix_product() {
        let x = Tensor3::from_vec(1, 1, 2, vec![1.0, 2.0]).unwrap();
        let w = Param::from_values("w", &[2, 2], vec![1.0, 1.0, 0.0, 1.0]).unwrap();
        let out = linear_forward(&x, &w, &Param::zeros("b", &[2])).unwrap();
        assert_eq!(out.data(), &[3.0, 2.0]);
    }

    #[test]
    fn shape_mismatch_names_both_shapes() {
        let x = Tensor3::zeros(1, 1, 3);
        let err =
            linear_forward(&x, &Param::zeros("w", &[2, 2]), &Param::zeros("b", &[2])).unwrap_err();
        let msg = alloc::string::ToString::to_string(&err);
        assert!(msg.contains("[2, 2]") && msg.contains("(1, 1, 3)"), "{msg}");
    }

    #[test]
    fn zero_grad_out_accumulates_nothing() {
        let x = random_tensor(2, 3, 4, 2);
        let mut w = Param::from_values("w", &[3, 4], random_tensor(1, 3, 4, 3).into_vec()).unwrap();
        let mut b = Param::zeros("b", &[3]);
        let gx = linear_backward(&x, &mut w, &mut b, &Tensor3::zeros(2, 3, 3)).unwrap();
        assert!(gx.data().iter().all(|&v| v == 0.0));
        assert!(w.grad.iter().chain(&b.grad).all(|&v| v == 0.0));
    }

    #[test]
    fn identity_jacobian() {
        let x = random_tensor(1, 2, 3, 4);
        let g = random_tensor(1, 2, 3, 5);
        let mut w = identity(3);
        let mut b = Param::zeros("b", &[3]);
        let gx = linear_backward(&x, &mut w, &mut b, &g).unwrap();
        assert_eq!(gx, g);
    }

    #[test]
    fn matches_finite_differences() {
        let x = random_tensor(2, 3, 4, 6);
        let g = random_tensor(2, 3, 3, 7);
        let w0 = random_tensor(1, 3, 4, 8).into_vec();
        let b0 = random_tensor(1, 1, 3, 9).into_vec();
        let loss = |x: &Tensor3, w: &[f64], b: &[f64]| {
            let w = Param::from_values("w", &[3, 4], w.to_vec()).unwrap();
            let b = Param::from_values("b", &[3], b.to_vec()).unwrap();
            dot(linear_forward(x, &w, &b).unwrap().data(), g.data())
        };
        let mut w = Param::from_values("w", &[3, 4], w0.clone()).unwrap();
        let mut b = Param::from_values("b", &[3], b0.clone()).unwrap();
        let gx = linear_backward(&x, &mut w, &mut b, &g).unwrap();

        let nx = numeric_grad(x.data(), |v| {
            loss(&Tensor3::from_vec(2, 3, 4, v.to_vec()).unwrap(), &w0, &b0)
        });
        let nw = numeric_grad(&w0, |v| loss(&x, v, &b0));
        let nb = numeric_grad(&b0, |v| loss(&x, &w0, v));
        assert_grads_close(gx.data(), &nx);
        assert_grads_close(&w.grad, &nw);
        assert_grads_close(&b.grad, &nb);
    }
}
