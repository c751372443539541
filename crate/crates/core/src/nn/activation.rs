use alloc::format;
use alloc::vec::Vec;
use rand::Rng;

use super::Tensor3;
use crate::{Error, Result};

pub fn relu(x: &Tensor3) -> Tensor3 {
    x.map(|v| if v > 0.0 { v } else { 0.0 })
}

/// Passes `grad_out` where the forward input was strictly positive. The
/// subgradient at exactly zero is taken as zero.
pub fn relu_backward(x: &Tensor3, grad_out: &Tensor3) -> Result<Tensor3> {
    grad_out.expect_dims("relu_backward", x.dims())?;
    let mut g = grad_out.clone();
    for (gi, &xi) in g.data_mut().iter_mut().zip(x.data()) {
        if xi <= 0.0 {
            *gi = 0.0;
        }
    }
    Ok(g)
}

/// Per-element multipliers recorded by [`dropout`]; `None` means identity.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMask(Option<Vec<f64>>);

impl DropoutMask {
    pub fn identity() -> Self {
        DropoutMask(None)
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_none()
    }

    pub fn scales(&self) -> Option<&[f64]> {
        self.0.as_deref()
    }
}

/// Inverted dropout. In training each element is kept with probability
/// `1 - rate` and scaled by `1/(1 - rate)`; otherwise the input is returned
/// unchanged and no randomness is consumed.
pub fn dropout<R: Rng + ?Sized>(
    x: &Tensor3,
    rate: f64,
    training: bool,
    rng: &mut R,
) -> Result<(Tensor3, DropoutMask)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Parameter(format!(
            "dropout rate must be in [0, 1), got {rate}"
        )));
    }
    if !training || rate == 0.0 {
        return Ok((x.clone(), DropoutMask::identity()));
    }
    let scale = 1.0 / (1.0 - rate);
    let mask: Vec<f64> = (0..x.data().len())
        .map(|_| {
            if rng.random::<f64>() >= rate {
                scale
            } else {
                0.0
            }
        })
        .collect();
    let mut out = x.clone();
    for (o, m) in out.data_mut().iter_mut().zip(&mask) {
        *o *= m;
    }
    Ok((out, DropoutMask(Some(mask))))
}

pub fn dropout_backward(mask: &DropoutMask, grad_out: &Tensor3) -> Result<Tensor3> {
    match &mask.0 {
        None => Ok(grad_out.clone()),
        Some(m) => {
            if m.len() != grad_out.data().len() {
                return Err(Error::dim(
                    "dropout_backward",
                    format!("{} elements", m.len()),
                    grad_out.shape_str(),
                ));
            }
            let mut g = grad_out.clone();
            for (gi, mi) in g.data_mut().iter_mut().zip(m) {
                *gi *= mi;
            }
            Ok(g)
        }
    }
}
