use alloc::format;
use alloc::vec::Vec;

use super::linear::axpy;
use super::Param;
use crate::{Error, Result};

/// Row `index` of a `[V × d]` table.
pub fn embedding_lookup(table: &Param, index: usize) -> Result<&[f64]> {
    let (v, d) = dims(table)?;
    if index >= v {
        return Err(Error::index("embedding_lookup", index, format!("0..{v}")));
    }
    Ok(&table.value[index * d..(index + 1) * d])
}

/// Accumulates `grad` into row `index` of the table gradient.
pub fn embedding_backward(table: &mut Param, index: usize, grad: &[f64]) -> Result<()> {
    let (v, d) = dims(table)?;
    if index >= v {
        return Err(Error::index("embedding_backward", index, format!("0..{v}")));
    }
    if grad.len() != d {
        return Err(Error::dim(
            "embedding_backward",
            format!("{d} values"),
            format!("{}", grad.len()),
        ));
    }
    axpy(1.0, grad, &mut table.grad[index * d..(index + 1) * d]);
    Ok(())
}

fn dims(table: &Param) -> Result<(usize, usize)> {
    match table.shape() {
        [v, d] => Ok((*v, *d)),
        s => Err(Error::dim("embedding", "table [V, d]", format!("{s:?}"))),
    }
}

/// Sinusoidal encoding of `position`:
/// `pe[2i] = sin(pos / 10000^(2i/dim))`, `pe[2i+1] = cos(pos / 10000^(2i/dim))`.
pub fn sinusoidal_pe(position: usize, dim: usize) -> Result<Vec<f64>> {
    if dim == 0 || dim % 2 != 0 {
        return Err(Error::Parameter(format!(
            "positional encoding dim must be even and positive, got {dim}"
        )));
    }
    let pos = position as f64;
    let mut pe = Vec::with_capacity(dim);
    for i in 0..dim / 2 {
        let angle = pos / libm::pow(10_000.0, (2 * i) as f64 / dim as f64);
        pe.push(libm::sin(angle));
        pe.push(libm::cos(angle));
    }
    Ok(pe)
}

/// `[len × dim]` table of encodings for positions `0..len`.
pub fn positional_table(len: usize, dim: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(len * dim);
    for p in 0..len {
        out.extend(sinusoidal_pe(p, dim)?);
    }
    Ok(out)
}
