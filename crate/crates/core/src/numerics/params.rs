use serde::{Deserialize, Serialize};

use super::Tensor;
use crate::error::{Error, Result};

/// A fixed, ordered collection of parameter tensors.
///
/// The order returned by [`Parameters::tensors`] is the contract that ties a
/// parameter set to its [`GradientSet`].
pub trait Parameters {
    fn tensors(&self) -> Vec<&Tensor>;
    fn tensors_mut(&mut self) -> Vec<&mut Tensor>;

    /// One flag per tensor; `true` means updates must leave it untouched.
    fn frozen_mask(&self) -> Vec<bool> {
        vec![false; self.tensors().len()]
    }

    fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.is_finite())
    }
}

/// Gradients aligned one-to-one with a parameter set's tensors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientSet {
    pub tensors: Vec<Tensor>,
}

impl GradientSet {
    pub fn zeros_like<P: Parameters + ?Sized>(params: &P) -> Self {
        Self {
            tensors: params.tensors().iter().map(|t| t.zeros_like()).collect(),
        }
    }

    pub fn add_scaled(&mut self, other: &GradientSet, scale: f64) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            a.add_scaled(b, scale);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.tensors.iter_mut().for_each(|t| t.scale(factor));
    }

    pub fn zero(&mut self) {
        self.tensors.iter_mut().for_each(|t| t.fill(0.0));
    }

    pub fn norm(&self) -> f64 {
        self.tensors
            .iter()
            .map(Tensor::sum_squares)
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(Tensor::is_finite)
    }

    pub fn is_zero(&self) -> bool {
        self.tensors
            .iter()
            .all(|t| t.data().iter().all(|&v| v == 0.0))
    }
}

/// `params <- params + rate * grads`, skipping frozen tensors.
pub fn ascent_step<P: Parameters + ?Sized>(
    params: &mut P,
    grads: &GradientSet,
    rate: f64,
) -> Result<()> {
    let frozen = params.frozen_mask();
    let mut tensors = params.tensors_mut();
    if tensors.len() != grads.tensors.len() {
        return Err(Error::Config(format!(
            "gradient set has {} tensors, parameters have {}",
            grads.tensors.len(),
            tensors.len()
        )));
    }
    for (t, g) in tensors.iter().zip(&grads.tensors) {
        if t.shape() != g.shape() {
            return Err(Error::Config(format!(
                "gradient shape {:?} does not match parameter shape {:?}",
                g.shape(),
                t.shape()
            )));
        }
    }
    if rate == 0.0 {
        return Ok(());
    }
    for ((t, g), is_frozen) in tensors.iter_mut().zip(&grads.tensors).zip(frozen) {
        if !is_frozen {
            t.add_scaled(g, rate);
        }
    }
    Ok(())
}
