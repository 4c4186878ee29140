use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

/// A collection of learnable tensors exposed in a fixed order.
///
/// The order is part of the contract: gradients, optimizer moments and
/// finite-difference probes all index tensors positionally.
pub trait ParamSet {
    fn tensors(&self) -> Vec<&[f64]>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;

    fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    fn flatten(&self) -> Vec<f64> {
        self.tensors().concat()
    }

    fn assign_flat(&mut self, flat: &[f64]) -> Result<()> {
        let total = self.param_count();
        if flat.len() != total {
            return Err(config(format!(
                "flat parameter vector has {} entries, expected {total}",
                flat.len()
            )));
        }
        let mut offset = 0;
        for t in self.tensors_mut() {
            let n = t.len();
            t.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    fn fill_zero(&mut self) {
        for t in self.tensors_mut() {
            t.fill(0.0);
        }
    }

    fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }
}

/// Gradient tensors laid out exactly like the `ParamSet` they belong to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBundle {
    tensors: Vec<Vec<f64>>,
}

impl GradientBundle {
    /// Copy the tensors of a gradient-shaped parameter set.
    pub fn from_params<P: ParamSet + ?Sized>(grads: &P) -> Self {
        Self {
            tensors: grads.tensors().into_iter().map(<[f64]>::to_vec).collect(),
        }
    }

    pub fn zeros_like<P: ParamSet + ?Sized>(params: &P) -> Self {
        Self {
            tensors: params.tensors().iter().map(|t| vec![0.0; t.len()]).collect(),
        }
    }

    pub fn tensors(&self) -> &[Vec<f64>] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.tensors
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.tensors.concat()
    }

    pub fn len(&self) -> usize {
        self.tensors.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_congruent<P: ParamSet + ?Sized>(&self, params: &P) -> bool {
        let shapes = params.tensors();
        shapes.len() == self.tensors.len() && shapes.iter().zip(&self.tensors).all(|(p, g)| p.len() == g.len())
    }

    pub fn all_finite(&self) -> bool {
        self.tensors.iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    pub fn max_abs(&self) -> f64 {
        self.tensors.iter().flatten().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub(crate) fn from_flat_like<P: ParamSet + ?Sized>(params: &P, flat: Vec<f64>) -> Self {
        let mut tensors = Vec::new();
        let mut offset = 0;
        for t in params.tensors() {
            tensors.push(flat[offset..offset + t.len()].to_vec());
            offset += t.len();
        }
        Self { tensors }
    }
}
