use alloc::format;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::NoiseSchedule;
use crate::nn::Tensor3;
use crate::{Error, Result};

/// A tensor of i.i.d. standard normal draws.
pub fn standard_normal<R: Rng + ?Sized>(
    batch: usize,
    time: usize,
    features: usize,
    rng: &mut R,
) -> Tensor3 {
    let mut t = Tensor3::zeros(batch, time, features);
    for v in t.data_mut() {
        *v = StandardNormal.sample(rng);
    }
    t
}

/// `x_t = √ᾱ(t)·x0 + √(1−ᾱ(t))·eps`, with `t[b]` per batch item.
pub fn q_sample_with_noise(
    x0: &Tensor3,
    t: &[usize],
    eps: &Tensor3,
    schedule: &NoiseSchedule,
) -> Result<Tensor3> {
    eps.expect_dims("q_sample", x0.dims())?;
    if t.len() != x0.batch() {
        return Err(Error::dim(
            "q_sample",
            format!("{} steps", x0.batch()),
            format!("{}", t.len()),
        ));
    }
    for &ti in t {
        schedule.check_step("q_sample", ti)?;
    }
    let mut xt = Tensor3::zeros(x0.batch(), x0.time(), x0.features());
    for (b, &ti) in t.iter().enumerate() {
        let ab = schedule.alpha_bar(ti);
        let (sa, sn) = (libm::sqrt(ab), libm::sqrt(1.0 - ab));
        for ((o, &x), &e) in xt.item_mut(b).iter_mut().zip(x0.item(b)).zip(eps.item(b)) {
            *o = sa * x + sn * e;
        }
    }
    Ok(xt)
}

/// Draws `eps ~ N(0, I)` and returns `(x_t, eps)`.
pub fn q_sample<R: Rng + ?Sized>(
    x0: &Tensor3,
    t: &[usize],
    schedule: &NoiseSchedule,
    rng: &mut R,
) -> Result<(Tensor3, Tensor3)> {
    for &ti in t {
        schedule.check_step("q_sample", ti)?;
    }
    let eps = standard_normal(x0.batch(), x0.time(), x0.features(), rng);
    let xt = q_sample_with_noise(x0, t, &eps, schedule)?;
    Ok((xt, eps))
}

/// Mean squared error between true and predicted noise over all elements.
pub fn simple_loss(eps: &Tensor3, eps_pred: &Tensor3) -> Result<f64> {
    simple_loss_and_grad(eps, eps_pred, None).map(|(l, _)| l)
}

/// Loss and its gradient with respect to `eps_pred`.
///
/// With `mask`, the mean runs over observed (`mask == 1`) elements only;
/// an all-missing batch yields zero loss and gradient.
pub fn simple_loss_and_grad(
    eps: &Tensor3,
    eps_pred: &Tensor3,
    mask: Option<&Tensor3>,
) -> Result<(f64, Tensor3)> {
    eps_pred.expect_dims("simple_loss", eps.dims())?;
    if let Some(m) = mask {
        m.expect_dims("simple_loss", eps.dims())?;
    }
    let weight = |i: usize| mask.map_or(1.0, |m| m.data()[i]);
    let count: f64 = (0..eps.data().len()).map(weight).sum();
    let mut grad = Tensor3::zeros(eps.batch(), eps.time(), eps.features());
    if count == 0.0 {
        return Ok((0.0, grad));
    }
    let mut sum = 0.0;
    for (i, ((g, &e), &p)) in grad
        .data_mut()
        .iter_mut()
        .zip(eps.data())
        .zip(eps_pred.data())
        .enumerate()
    {
        let w = weight(i);
        let d = p - e;
        sum += w * d * d;
        *g = 2.0 * w * d / count;
    }
    Ok((sum / count, grad))
}

/// One ancestral step:
/// `x_{t−1} = (x_t − β_t/√(1−ᾱ_t)·ε̂)/√α_t + σ_t·z`, with `z = 0` at `t = 1`.
///
/// `z_override` replaces the internally drawn noise (used for testing and
/// for callers that manage their own noise streams).
pub fn p_sample_step<R: Rng + ?Sized>(
    xt: &Tensor3,
    t: usize,
    eps_pred: &Tensor3,
    schedule: &NoiseSchedule,
    rng: &mut R,
    z_override: Option<&Tensor3>,
) -> Result<Tensor3> {
    schedule.check_step("p_sample_step", t)?;
    eps_pred.expect_dims("p_sample_step", xt.dims())?;
    let coef = schedule.beta(t) / libm::sqrt(1.0 - schedule.alpha_bar(t));
    let inv_sqrt_alpha = 1.0 / libm::sqrt(schedule.alpha(t));
    let mut out = Tensor3::zeros(xt.batch(), xt.time(), xt.features());
    for ((o, &x), &e) in out
        .data_mut()
        .iter_mut()
        .zip(xt.data())
        .zip(eps_pred.data())
    {
        *o = inv_sqrt_alpha * (x - coef * e);
    }
    if t > 1 {
        let sigma = schedule.sigma(t);
        match z_override {
            Some(z) => {
                z.expect_dims("p_sample_step", xt.dims())?;
                for (o, &zi) in out.data_mut().iter_mut().zip(z.data()) {
                    *o += sigma * zi;
                }
            }
            None => {
                for o in out.data_mut() {
                    let zi: f64 = StandardNormal.sample(rng);
                    *o += sigma * zi;
                }
            }
        }
    }
    Ok(out)
}
