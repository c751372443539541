use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Dense row-major `(batch, time, features)` tensor of `f64`.
///
/// Time and feature extents are always positive. A batch of zero is
/// permitted so that empty sample requests have a natural representation.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    dims: [usize; 3],
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(batch: usize, time: usize, features: usize) -> Self {
        assert!(
            time > 0 && features > 0,
            "Tensor3 time/feature extents must be positive"
        );
        Tensor3 {
            dims: [batch, time, features],
            data: vec![0.0; batch * time * features],
        }
    }

    pub fn filled(batch: usize, time: usize, features: usize, value: f64) -> Self {
        let mut t = Self::zeros(batch, time, features);
        t.data.fill(value);
        t
    }

    pub fn from_vec(batch: usize, time: usize, features: usize, data: Vec<f64>) -> Result<Self> {
        if time == 0 || features == 0 {
            return Err(Error::dim(
                "Tensor3::from_vec",
                "positive time and feature extents",
                format!("({batch}, {time}, {features})"),
            ));
        }
        if data.len() != batch * time * features {
            return Err(Error::dim(
                "Tensor3::from_vec",
                format!(
                    "{} values for ({batch}, {time}, {features})",
                    batch * time * features
                ),
                format!("{} values", data.len()),
            ));
        }
        Ok(Tensor3 {
            dims: [batch, time, features],
            data,
        })
    }

    #[inline]
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }
    #[inline]
    pub fn batch(&self) -> usize {
        self.dims[0]
    }
    #[inline]
    pub fn time(&self) -> usize {
        self.dims[1]
    }
    #[inline]
    pub fn features(&self) -> usize {
        self.dims[2]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    fn offset(&self, b: usize, t: usize) -> usize {
        (b * self.dims[1] + t) * self.dims[2]
    }

    /// Feature vector at `(b, t)`.
    #[inline]
    pub fn row(&self, b: usize, t: usize) -> &[f64] {
        let o = self.offset(b, t);
        &self.data[o..o + self.dims[2]]
    }

    #[inline]
    pub fn row_mut(&mut self, b: usize, t: usize) -> &mut [f64] {
        let o = self.offset(b, t);
        let d = self.dims[2];
        &mut self.data[o..o + d]
    }

    #[inline]
    pub fn get(&self, b: usize, t: usize, f: usize) -> f64 {
        self.data[self.offset(b, t) + f]
    }

    #[inline]
    pub fn set(&mut self, b: usize, t: usize, f: usize, v: f64) {
        let o = self.offset(b, t) + f;
        self.data[o] = v;
    }

    /// The `(time, features)` block of batch item `b`.
    pub fn item(&self, b: usize) -> &[f64] {
        let n = self.dims[1] * self.dims[2];
        &self.data[b * n..(b + 1) * n]
    }

    pub fn item_mut(&mut self, b: usize) -> &mut [f64] {
        let n = self.dims[1] * self.dims[2];
        &mut self.data[b * n..(b + 1) * n]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor3 {
        Tensor3 {
            dims: self.dims,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Errors with [`Error::NonFinite`] naming `op` if any value is NaN/Inf.
    pub fn check_finite(&self, op: &'static str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(op))
        }
    }

    pub(crate) fn shape_str(&self) -> String {
        format!("({}, {}, {})", self.dims[0], self.dims[1], self.dims[2])
    }

    pub(crate) fn expect_dims(&self, op: &'static str, dims: [usize; 3]) -> Result<()> {
        if self.dims == dims {
            Ok(())
        } else {
            Err(Error::dim(
                op,
                format!("({}, {}, {})", dims[0], dims[1], dims[2]),
                self.shape_str(),
            ))
        }
    }
}

/// A learnable tensor with its accumulated gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    name: String,
    shape: Vec<usize>,
    pub value: Vec<f64>,
    pub grad: Vec<f64>,
}

impl Param {
    pub fn zeros(name: impl Into<String>, shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Param {
            name: name.into(),
            shape: shape.to_vec(),
            value: vec![0.0; n],
            grad: vec![0.0; n],
        }
    }

    pub fn from_values(name: impl Into<String>, shape: &[usize], value: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if value.len() != n || shape.is_empty() || shape.len() > 3 {
            return Err(Error::dim(
                "Param::from_values",
                format!("{n} values with rank 1..=3"),
                format!("{} values, rank {}", value.len(), shape.len()),
            ));
        }
        Ok(Param {
            name: name.into(),
            shape: shape.to_vec(),
            grad: vec![0.0; n],
            value,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    pub(crate) fn expect_shape(&self, op: &'static str, shape: &[usize]) -> Result<()> {
        if self.shape == shape {
            Ok(())
        } else {
            Err(Error::dim(
                op,
                format!("{} {:?}", self.name, shape),
                format!("{:?}", self.shape),
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_is_row_major() {
        let t = Tensor3::from_vec(2, 2, 3, (0..12).map(f64::from).collect()).unwrap();
        assert_eq!(t.get(1, 0, 2), 8.0);
        assert_eq!(t.row(0, 1), &[3.0, 4.0, 5.0]);
        assert_eq!(t.item(1), &[6.0, 7.0, 8.0, 9.0, 10.0, 11.0]);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(Tensor3::from_vec(1, 0, 1, vec![]).is_err());
        assert!(Tensor3::from_vec(1, 2, 2, vec![0.0; 3]).is_err());
        assert!(Tensor3::from_vec(0, 2, 2, vec![]).is_ok());
        assert!(Param::from_values("w", &[2, 2], vec![0.0; 3]).is_err());
    }

    #[test]
    fn zero_grad_clears() {
        let mut p = Param::zeros("w", &[2, 3]);
        p.grad.iter_mut().for_each(|g| *g = 1.5);
        p.zero_grad();
        assert!(p.grad.iter().all(|&g| g == 0.0));
        assert_eq!(p.grad.len(), p.value.len());
    }

    #[test]
    fn finiteness_check_names_op() {
        let mut t = Tensor3::zeros(1, 1, 2);
        assert!(t.check_finite("x").is_ok());
        t.set(0, 0, 1, f64::NAN);
        assert_eq!(t.check_finite("probe"), Err(Error::NonFinite("probe")));
    }
}
