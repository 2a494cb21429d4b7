use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math;
use crate::{Error, Result};

/// Dense row-major `f64` array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(Error::shape(
                "Tensor::new",
                format!("shape {:?} needs {} values, got {}", shape, numel, data.len()),
            ));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let numel = shape.iter().product();
        Tensor { shape: shape.to_vec(), data: vec![0.0; numel] }
    }

    pub fn scalar(value: f64) -> Self {
        Tensor { shape: Vec::new(), data: vec![value] }
    }

    pub fn vector(data: Vec<f64>) -> Self {
        Tensor { shape: vec![data.len()], data }
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Tensor::new(vec![rows, cols], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn rows(&self) -> usize {
        self.shape.first().copied().unwrap_or(1)
    }

    pub fn cols(&self) -> usize {
        match self.shape.len() {
            0 => 1,
            1 => self.shape[0],
            _ => self.shape[1..].iter().product(),
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let c = self.cols();
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn item(&self) -> Result<f64> {
        if self.data.len() != 1 {
            return Err(Error::Contract(format!(
                "expected a scalar, got shape {:?}",
                self.shape
            )));
        }
        Ok(self.data[0])
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    fn require_matrix(&self, op: &'static str) -> Result<(usize, usize)> {
        if self.shape.len() != 2 {
            return Err(Error::shape(op, format!("expected a matrix, got shape {:?}", self.shape)));
        }
        Ok((self.shape[0], self.shape[1]))
    }

    fn require_same_shape(&self, other: &Tensor, op: &'static str) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::shape(op, format!("{:?} vs {:?}", self.shape, other.shape)));
        }
        Ok(())
    }

    /// `self · other` for `(m×k)·(k×n)`.
    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        let (m, k) = self.require_matrix("matmul")?;
        let (k2, n) = other.require_matrix("matmul")?;
        if k != k2 {
            return Err(Error::shape("matmul", format!("({m}×{k})·({k2}×{n})")));
        }
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let a = &self.data[i * k..(i + 1) * k];
            let o = &mut out[i * n..(i + 1) * n];
            for (p, &aip) in a.iter().enumerate() {
                if aip == 0.0 {
                    continue;
                }
                let b = &other.data[p * n..(p + 1) * n];
                for (oj, &bj) in o.iter_mut().zip(b) {
                    *oj += aip * bj;
                }
            }
        }
        Tensor::matrix(m, n, out)
    }

    /// `self · otherᵀ` for `(m×k)·(n×k)ᵀ`.
    pub fn matmul_t(&self, other: &Tensor) -> Result<Tensor> {
        let (m, k) = self.require_matrix("matmul_t")?;
        let (n, k2) = other.require_matrix("matmul_t")?;
        if k != k2 {
            return Err(Error::shape("matmul_t", format!("({m}×{k})·({n}×{k2})ᵀ")));
        }
        let mut out = Vec::with_capacity(m * n);
        for i in 0..m {
            let a = &self.data[i * k..(i + 1) * k];
            for j in 0..n {
                out.push(dot(a, &other.data[j * k..(j + 1) * k]));
            }
        }
        Tensor::matrix(m, n, out)
    }

    /// `selfᵀ · other` for `(k×m)ᵀ·(k×n)`.
    pub fn t_matmul(&self, other: &Tensor) -> Result<Tensor> {
        let (k, m) = self.require_matrix("t_matmul")?;
        let (k2, n) = other.require_matrix("t_matmul")?;
        if k != k2 {
            return Err(Error::shape("t_matmul", format!("({k}×{m})ᵀ·({k2}×{n})")));
        }
        let mut out = vec![0.0; m * n];
        for p in 0..k {
            let a = &self.data[p * m..(p + 1) * m];
            let b = &other.data[p * n..(p + 1) * n];
            for (i, &api) in a.iter().enumerate() {
                if api == 0.0 {
                    continue;
                }
                let o = &mut out[i * n..(i + 1) * n];
                for (oj, &bj) in o.iter_mut().zip(b) {
                    *oj += api * bj;
                }
            }
        }
        Tensor::matrix(m, n, out)
    }

    /// Adds a length-`n` bias to every row of an `m×n` matrix.
    pub fn add_bias(&self, bias: &Tensor) -> Result<Tensor> {
        let (_, n) = self.require_matrix("add_bias")?;
        if bias.numel() != n || bias.shape.len() != 1 {
            return Err(Error::shape("add_bias", format!("bias {:?} for {} columns", bias.shape, n)));
        }
        let mut out = self.clone();
        for row in out.data.chunks_mut(n) {
            for (x, b) in row.iter_mut().zip(&bias.data) {
                *x += b;
            }
        }
        Ok(out)
    }

    /// Column sums of a matrix (the bias gradient of a batched linear layer).
    pub fn sum_rows(&self) -> Result<Tensor> {
        let (_, n) = self.require_matrix("sum_rows")?;
        let mut out = vec![0.0; n];
        for row in self.data.chunks(n) {
            for (o, x) in out.iter_mut().zip(row) {
                *o += x;
            }
        }
        Ok(Tensor::vector(out))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor { shape: self.shape.clone(), data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn tanh(&self) -> Tensor {
        self.map(math::tanh)
    }

    pub fn relu(&self) -> Tensor {
        self.map(clamp_nonneg)
    }

    pub fn sigmoid(&self) -> Tensor {
        self.map(math::sigmoid)
    }

    /// Row-wise softmax of a matrix (a vector is treated as one row).
    pub fn softmax(&self) -> Tensor {
        let c = self.cols();
        let mut out = self.clone();
        for row in out.data.chunks_mut(c.max(1)) {
            softmax_in_place(row);
        }
        out
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    pub fn mul(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_with(other, "mul", |a, b| a * b)
    }

    pub fn scale(&self, alpha: f64) -> Tensor {
        self.map(|x| alpha * x)
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    /// `self += alpha · other`
    pub fn axpy(&mut self, alpha: f64, other: &Tensor) -> Result<()> {
        self.require_same_shape(other, "axpy")?;
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += alpha * y;
        }
        Ok(())
    }

    fn zip_with(&self, other: &Tensor, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        self.require_same_shape(other, op)?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Tensor { shape: self.shape.clone(), data })
    }

    /// Concatenates two matrices with equal row counts along columns.
    pub fn concat_cols(&self, other: &Tensor) -> Result<Tensor> {
        let (m, a) = self.require_matrix("concat_cols")?;
        let (m2, b) = other.require_matrix("concat_cols")?;
        if m != m2 {
            return Err(Error::shape("concat_cols", format!("{m} rows vs {m2} rows")));
        }
        let mut out = Vec::with_capacity(m * (a + b));
        for i in 0..m {
            out.extend_from_slice(self.row(i));
            out.extend_from_slice(other.row(i));
        }
        Tensor::matrix(m, a + b, out)
    }

    /// Inverse of [`Tensor::concat_cols`]: the first `left` columns and the rest.
    pub fn split_cols(&self, left: usize) -> Result<(Tensor, Tensor)> {
        let (m, n) = self.require_matrix("split_cols")?;
        if left > n {
            return Err(Error::shape("split_cols", format!("split at {left} of {n} columns")));
        }
        let mut l = Vec::with_capacity(m * left);
        let mut r = Vec::with_capacity(m * (n - left));
        for i in 0..m {
            let row = self.row(i);
            l.extend_from_slice(&row[..left]);
            r.extend_from_slice(&row[left..]);
        }
        Ok((Tensor::matrix(m, left, l)?, Tensor::matrix(m, n - left, r)?))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for x in row.iter_mut() {
        *x = math::exp(*x - max);
        total += *x;
    }
    for x in row.iter_mut() {
        *x /= total;
    }
}

/// Per-row softmax cross-entropy against integer class labels.
/// `max(x, 0)` that lets NaN through.
fn clamp_nonneg(x: f64) -> f64 {
    if x < 0.0 {
        0.0
    } else {
        x
    }
}

pub fn cross_entropy_with_softmax(logits: &Tensor, labels: &[usize]) -> Result<Vec<f64>> {
    let c = logits.cols();
    if logits.rows() != labels.len() {
        return Err(Error::shape(
            "cross_entropy_with_softmax",
            format!("{} rows vs {} labels", logits.rows(), labels.len()),
        ));
    }
    let mut out = Vec::with_capacity(labels.len());
    for (i, &y) in labels.iter().enumerate() {
        if y >= c {
            return Err(Error::Data(format!("label {y} out of range for {c} classes")));
        }
        let row = logits.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + math::ln(row.iter().map(|&z| math::exp(z - max)).sum::<f64>());
        out.push(clamp_nonneg(lse - row[y]));
    }
    Ok(out)
}

/// Binary cross-entropy of probabilities `p` against targets in `{0, 1}`.
pub fn binary_cross_entropy(p: &[f64], targets: &[f64]) -> Result<Vec<f64>> {
    if p.len() != targets.len() {
        return Err(Error::shape("binary_cross_entropy", format!("{} vs {}", p.len(), targets.len())));
    }
    Ok(p.iter()
        .zip(targets)
        .map(|(&p, &y)| {
            let p = p.clamp(f64::MIN_POSITIVE, 1.0);
            let q = (1.0 - p).max(f64::MIN_POSITIVE);
            -(y * math::ln(p) + (1.0 - y) * math::ln(q))
        })
        .collect())
}

/// Binary cross-entropy computed from logits, `softplus(z) - y·z`.
pub fn binary_cross_entropy_with_logits(logits: &[f64], targets: &[f64]) -> Result<Vec<f64>> {
    if logits.len() != targets.len() {
        return Err(Error::shape(
            "binary_cross_entropy_with_logits",
            format!("{} vs {}", logits.len(), targets.len()),
        ));
    }
    Ok(logits
        .iter()
        .zip(targets)
        .map(|(&z, &y)| clamp_nonneg(math::softplus(z) - y * z))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_zero_is_half() {
        assert_eq!(Tensor::scalar(0.0).sigmoid().item().unwrap(), 0.5);
    }

    #[test]
    fn softmax_of_equal_logits_is_uniform() {
        let s = Tensor::vector(vec![0.0; 3]).softmax();
        for &x in s.data() {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn two_class_uniform_cross_entropy_is_ln2() {
        let logits = Tensor::matrix(1, 2, vec![0.0, 0.0]).unwrap();
        let ce = cross_entropy_with_softmax(&logits, &[0]).unwrap();
        assert!((ce[0] - core::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn matmul_variants_agree() {
        let a = Tensor::matrix(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let b = Tensor::matrix(3, 2, vec![7.0, 8.0, 9.0, 10.0, 11.0, 12.0]).unwrap();
        let ab = a.matmul(&b).unwrap();
        assert_eq!(ab.data(), &[58.0, 64.0, 139.0, 154.0]);
        let bt = Tensor::matrix(2, 3, vec![7.0, 9.0, 11.0, 8.0, 10.0, 12.0]).unwrap();
        assert_eq!(a.matmul_t(&bt).unwrap(), ab);
        let at = Tensor::matrix(3, 2, vec![1.0, 4.0, 2.0, 5.0, 3.0, 6.0]).unwrap();
        assert_eq!(at.t_matmul(&b).unwrap(), ab);
    }

    #[test]
    fn shape_errors_are_descriptive() {
        let a = Tensor::zeros(&[2, 3]);
        let err = a.matmul(&Tensor::zeros(&[2, 3])).unwrap_err();
        assert!(matches!(err, Error::Shape { op: "matmul", .. }));
        assert!(Tensor::new(vec![2, 2], vec![1.0]).is_err());
        assert!(a.add(&Tensor::zeros(&[3, 2])).is_err());
        assert!(a.add_bias(&Tensor::zeros(&[2])).is_err());
        assert!(a.item().is_err());
    }

    #[test]
    fn cross_entropy_rejects_bad_labels() {
        let logits = Tensor::zeros(&[1, 2]);
        assert!(matches!(cross_entropy_with_softmax(&logits, &[2]), Err(Error::Data(_))));
    }

    #[test]
    fn nan_logits_propagate() {
        assert!(binary_cross_entropy_with_logits(&[f64::NAN], &[1.0]).unwrap()[0].is_nan());
        let l = Tensor::matrix(1, 2, vec![f64::NAN, 0.0]).unwrap();
        assert!(cross_entropy_with_softmax(&l, &[1]).unwrap()[0].is_nan());
        assert!(Tensor::vector(vec![f64::NAN]).relu().data()[0].is_nan());
    }

    #[test]
    fn bce_of_half_is_ln2() {
        let l = binary_cross_entropy(&[0.5], &[0.0]).unwrap();
        assert!((l[0] - core::f64::consts::LN_2).abs() < 1e-15);
        let l = binary_cross_entropy_with_logits(&[0.0], &[1.0]).unwrap();
        assert!((l[0] - core::f64::consts::LN_2).abs() < 1e-15);
        let l = binary_cross_entropy(&[1.0 - 1e-12], &[1.0]).unwrap();
        assert!(l[0] < 1e-11);
    }

    #[test]
    fn concat_split_round_trip() {
        let a = Tensor::matrix(2, 1, vec![1.0, 2.0]).unwrap();
        let b = Tensor::matrix(2, 2, vec![3.0, 4.0, 5.0, 6.0]).unwrap();
        let c = a.concat_cols(&b).unwrap();
        assert_eq!(c.data(), &[1.0, 3.0, 4.0, 2.0, 5.0, 6.0]);
        let (l, r) = c.split_cols(1).unwrap();
        assert_eq!((l, r), (a, b));
    }
}
