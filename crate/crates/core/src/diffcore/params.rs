use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::Tensor;
use crate::math;
use crate::{Error, Result};

/// Ordered, uniquely named tensors. Iteration order is insertion order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    entries: Vec<(String, Tensor)>,
}

impl ParameterSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, tensor: Tensor) -> Result<()> {
        if self.get(name).is_some() {
            return Err(Error::Contract(format!("duplicate parameter name `{name}`")));
        }
        self.entries.push((name.to_string(), tensor));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.entries.iter_mut().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    /// Like [`ParameterSet::get`] but a missing name is an error.
    pub fn tensor(&self, name: &str) -> Result<&Tensor> {
        self.get(name)
            .ok_or_else(|| Error::Contract(format!("missing parameter `{name}`")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor)> {
        self.entries.iter_mut().map(|(n, t)| (n.as_str(), t))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total scalar count.
    pub fn numel(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.numel()).sum()
    }

    pub fn zeros_like(&self) -> Self {
        ParameterSet {
            entries: self
                .entries
                .iter()
                .map(|(n, t)| (n.clone(), Tensor::zeros(t.shape())))
                .collect(),
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.numel());
        for (_, t) in &self.entries {
            out.extend_from_slice(t.data());
        }
        out
    }

    /// Builds a set with this set's names and shapes from a flat vector.
    pub fn unflatten(&self, flat: &[f64]) -> Result<Self> {
        if flat.len() != self.numel() {
            return Err(Error::shape(
                "unflatten",
                format!("{} values for {} parameters", flat.len(), self.numel()),
            ));
        }
        let mut offset = 0;
        let mut entries = Vec::with_capacity(self.entries.len());
        for (n, t) in &self.entries {
            let k = t.numel();
            entries.push((n.clone(), Tensor::new(t.shape().to_vec(), flat[offset..offset + k].to_vec())?));
            offset += k;
        }
        Ok(ParameterSet { entries })
    }

    fn check_layout(&self, other: &ParameterSet, op: &'static str) -> Result<()> {
        let same = self.entries.len() == other.entries.len()
            && self
                .entries
                .iter()
                .zip(&other.entries)
                .all(|((a, x), (b, y))| a == b && x.shape() == y.shape());
        if !same {
            return Err(Error::shape(op, "parameter sets have different layouts"));
        }
        Ok(())
    }

    /// `self += alpha · other`
    pub fn axpy(&mut self, alpha: f64, other: &ParameterSet) -> Result<()> {
        self.check_layout(other, "axpy")?;
        for ((_, x), (_, y)) in self.entries.iter_mut().zip(&other.entries) {
            x.axpy(alpha, y)?;
        }
        Ok(())
    }

    pub fn scale(&mut self, alpha: f64) {
        for (_, t) in &mut self.entries {
            for x in t.data_mut() {
                *x *= alpha;
            }
        }
    }

    pub fn dot(&self, other: &ParameterSet) -> Result<f64> {
        self.check_layout(other, "dot")?;
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|((_, x), (_, y))| super::tensor::dot(x.data(), y.data()))
            .sum())
    }

    pub fn norm(&self) -> f64 {
        math::sqrt(self.entries.iter().flat_map(|(_, t)| t.data()).map(|x| x * x).sum())
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|(_, t)| t.is_finite())
    }
}
