use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::affine::AffineMap;
use super::polytope::MEMBERSHIP_TOL;
use crate::error::{Error, Result};
use crate::numeric::linf_norm;

/// Feed-forward network with ReLU between consecutive affine layers and a
/// linear output layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReluNet {
    layers: Vec<AffineMap>,
}

/// Pre-activations of one hidden unit together with the gradient of that
/// pre-activation with respect to the network input (valid inside the
/// current linear region).
#[derive(Debug, Clone)]
pub struct UnitMargin {
    pub preactivation: f64,
    pub gradient: Vec<f64>,
}

impl ReluNet {
    pub fn new(layers: Vec<AffineMap>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Empty("network layers"));
        }
        for w in layers.windows(2) {
            if w[1].in_dim() != w[0].out_dim() {
                return Err(Error::DimensionMismatch {
                    expected: w[0].out_dim(),
                    found: w[1].in_dim(),
                });
            }
        }
        Ok(ReluNet { layers })
    }

    /// `x ↦ max(0, x)` on the real line.
    pub fn scalar_relu() -> Self {
        ReluNet {
            layers: vec![AffineMap::identity(1), AffineMap::identity(1)],
        }
    }

    pub fn layers(&self) -> &[AffineMap] {
        &self.layers
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim()
    }

    pub fn hidden_units(&self) -> usize {
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(AffineMap::out_dim)
            .sum()
    }

    /// Output plus all hidden pre-activations in layer order.
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.layers[0].check_input(x)?;
        let mut pre = Vec::with_capacity(self.hidden_units());
        let mut h = x.to_vec();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let z = layer.apply(&h);
            if l == last {
                return Ok((z, pre));
            }
            pre.extend_from_slice(&z);
            h = z.into_iter().map(|v| v.max(0.0)).collect();
        }
        unreachable!()
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(x)?.0)
    }

    pub fn evaluate_exact(&self, x: &[BigRational]) -> Result<Vec<BigRational>> {
        if x.len() != self.in_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.in_dim(),
                found: x.len(),
            });
        }
        let mut h = x.to_vec();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let z = layer.apply_exact(&h);
            if l == last {
                return Ok(z);
            }
            h = z
                .into_iter()
                .map(|v| if v.is_positive() { v } else { BigRational::zero() })
                .collect();
        }
        unreachable!()
    }

    /// Activation pattern; a unit counts as active only when its
    /// pre-activation is strictly positive.
    pub fn pattern(&self, x: &[f64]) -> Result<Vec<bool>> {
        Ok(self.forward(x)?.1.into_iter().map(|z| z > 0.0).collect())
    }

    /// Affine law of the region containing `x`, its activation pattern, and
    /// each hidden unit's margin.
    pub fn linearize(&self, x: &[f64]) -> Result<(AffineMap, Vec<bool>, Vec<UnitMargin>)> {
        self.layers[0].check_input(x)?;
        let mut effective = self.layers[0].clone();
        let mut pattern = Vec::with_capacity(self.hidden_units());
        let mut margins = Vec::with_capacity(self.hidden_units());
        for next in &self.layers[1..] {
            let z = effective.apply(x);
            for (i, &zi) in z.iter().enumerate() {
                margins.push(UnitMargin {
                    preactivation: zi,
                    gradient: effective.matrix()[i].clone(),
                });
                let active = zi > 0.0;
                pattern.push(active);
                if !active {
                    effective.matrix_mut()[i].iter_mut().for_each(|a| *a = 0.0);
                    effective.bias_mut()[i] = 0.0;
                }
            }
            effective = next.compose(&effective)?;
        }
        Ok((effective, pattern, margins))
    }

    /// Pattern at `x` when every hidden pre-activation is bounded away from
    /// zero, otherwise `None`.
    pub fn strict_pattern(&self, x: &[f64]) -> Result<Option<Vec<bool>>> {
        let (_, pre) = self.forward(x)?;
        if pre.iter().any(|z| z.abs() <= MEMBERSHIP_TOL) {
            return Ok(None);
        }
        Ok(Some(pre.into_iter().map(|z| z > 0.0).collect()))
    }

    /// All patterns obtained by resolving near-zero units either way. At
    /// most `max_ties` ambiguous units are expanded.
    pub fn boundary_patterns(&self, x: &[f64], max_ties: usize) -> Result<Vec<Vec<bool>>> {
        let (_, pre) = self.forward(x)?;
        let ties: Vec<usize> = pre
            .iter()
            .enumerate()
            .filter(|(_, z)| z.abs() <= MEMBERSHIP_TOL)
            .map(|(i, _)| i)
            .collect();
        if ties.len() > max_ties {
            return Err(Error::Degenerate(format!(
                "{} hidden units vanish at {:?}",
                ties.len(),
                x
            )));
        }
        let base: Vec<bool> = pre.iter().map(|&z| z > 0.0).collect();
        Ok((0..1usize << ties.len())
            .map(|mask| {
                let mut p = base.clone();
                for (bit, &unit) in ties.iter().enumerate() {
                    p[unit] = mask >> bit & 1 == 1;
                }
                p
            })
            .collect())
    }

    /// Replaces the first layer by `first ∘ inner`.
    pub fn precompose(&self, inner: &AffineMap) -> Result<Self> {
        let mut layers = self.layers.clone();
        layers[0] = layers[0].compose(inner)?;
        Self::new(layers)
    }

    /// Product of per-layer ℓ∞ operator norms.
    pub fn lipschitz_bound(&self) -> f64 {
        self.layers.iter().map(AffineMap::linf_operator_norm).product()
    }
}

/// Smallest `|z| / ‖∇z‖₁` over hidden units: an ℓ∞ radius inside which no
/// pre-activation changes sign. Units with zero gradient never change sign.
pub(crate) fn linf_margin(margins: &[UnitMargin]) -> f64 {
    margins
        .iter()
        .map(|m| {
            let g: f64 = m.gradient.iter().map(|a| a.abs()).sum();
            if g == 0.0 {
                f64::INFINITY
            } else {
                m.preactivation.abs() / g
            }
        })
        .fold(f64::INFINITY, f64::min)
}

/// Same as [`linf_margin`] but for ℓ1 balls (`|z| / ‖∇z‖∞`).
pub(crate) fn l1_margin(margins: &[UnitMargin]) -> f64 {
    margins
        .iter()
        .map(|m| {
            let g = linf_norm(&m.gradient);
            if g == 0.0 {
                f64::INFINITY
            } else {
                m.preactivation.abs() / g
            }
        })
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rational;

    #[test]
    fn scalar_relu_values() {
        let f = ReluNet::scalar_relu();
        assert_eq!(f.evaluate(&[2.0]).unwrap(), vec![2.0]);
        assert_eq!(f.evaluate(&[-1.0]).unwrap(), vec![0.0]);
        let (a, p, _) = f.linearize(&[2.0]).unwrap();
        assert_eq!((a.matrix()[0][0], a.bias()[0]), (1.0, 0.0));
        assert_eq!(p, vec![true]);
        let (a, p, _) = f.linearize(&[-3.0]).unwrap();
        assert_eq!((a.matrix()[0][0], a.bias()[0]), (0.0, 0.0));
        assert_eq!(p, vec![false]);
        assert_eq!(f.evaluate_exact(&[rational(-0.5)]).unwrap(), vec![rational(0.0)]);
    }

    #[test]
    fn boundary_patterns_enumerate_ties() {
        let f = ReluNet::scalar_relu();
        assert_eq!(f.strict_pattern(&[0.0]).unwrap(), None);
        let pats = f.boundary_patterns(&[0.0], 4).unwrap();
        assert_eq!(pats, vec![vec![false], vec![true]]);
        assert_eq!(f.boundary_patterns(&[1.0], 4).unwrap(), vec![vec![true]]);
    }

    #[test]
    fn layer_shapes_are_validated() {
        let a = AffineMap::zeros(3, 2);
        let b = AffineMap::zeros(1, 2);
        assert!(ReluNet::new(vec![a, b]).is_err());
        assert!(ReluNet::new(vec![]).is_err());
    }

    #[test]
    fn margins() {
        let f = ReluNet::scalar_relu();
        let (_, _, m) = f.linearize(&[0.3]).unwrap();
        assert!((linf_margin(&m) - 0.3).abs() < 1e-15);
        assert!((l1_margin(&m) - 0.3).abs() < 1e-15);
    }
}
