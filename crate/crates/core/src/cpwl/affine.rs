use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::rational;

/// `x ↦ A·x + b` with `A` stored row-major as `out_dim` rows of length
/// `in_dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    matrix: Vec<Vec<f64>>,
    bias: Vec<f64>,
    in_dim: usize,
}

impl AffineMap {
    pub fn new(matrix: Vec<Vec<f64>>, bias: Vec<f64>) -> Result<Self> {
        if matrix.len() != bias.len() {
            return Err(Error::SizeMismatch(format!(
                "affine map has {} rows but bias of length {}",
                matrix.len(),
                bias.len()
            )));
        }
        if matrix.is_empty() {
            return Err(Error::Empty("affine map rows"));
        }
        let in_dim = matrix[0].len();
        if in_dim == 0 {
            return Err(Error::Empty("affine map columns"));
        }
        if let Some(row) = matrix.iter().find(|r| r.len() != in_dim) {
            return Err(Error::DimensionMismatch {
                expected: in_dim,
                found: row.len(),
            });
        }
        if matrix.iter().flatten().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("affine map"));
        }
        Ok(AffineMap {
            matrix,
            bias,
            in_dim,
        })
    }

    pub fn zeros(out_dim: usize, in_dim: usize) -> Self {
        AffineMap {
            matrix: vec![vec![0.0; in_dim]; out_dim],
            bias: vec![0.0; out_dim],
            in_dim,
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.matrix[i][i] = 1.0;
        }
        m
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.bias.len()
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub(crate) fn matrix_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.matrix
    }

    pub(crate) fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    pub fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.in_dim {
            return Err(Error::DimensionMismatch {
                expected: self.in_dim,
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(a, x)| a * x).sum::<f64>() + b)
            .collect()
    }

    pub fn apply_exact(&self, x: &[BigRational]) -> Vec<BigRational> {
        self.matrix
            .iter()
            .zip(&self.bias)
            .map(|(row, &b)| {
                row.iter()
                    .zip(x)
                    .filter(|(a, _)| **a != 0.0)
                    .fold(rational(b), |acc, (&a, x)| acc + rational(a) * x)
            })
            .collect()
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &AffineMap) -> Result<AffineMap> {
        if inner.out_dim() != self.in_dim {
            return Err(Error::DimensionMismatch {
                expected: self.in_dim,
                found: inner.out_dim(),
            });
        }
        let matrix = self
            .matrix
            .iter()
            .map(|row| {
                (0..inner.in_dim)
                    .map(|c| {
                        row.iter()
                            .zip(&inner.matrix)
                            .map(|(a, irow)| a * irow[c])
                            .sum()
                    })
                    .collect()
            })
            .collect();
        let bias = self.apply(&inner.bias);
        Ok(AffineMap {
            matrix,
            bias,
            in_dim: inner.in_dim,
        })
    }

    /// Operator norm induced by ℓ∞ (maximum absolute row sum).
    pub fn linf_operator_norm(&self) -> f64 {
        self.matrix
            .iter()
            .map(|r| r.iter().map(|a| a.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub(crate) fn add_assign(&mut self, other: &AffineMap) {
        for (r, o) in self.matrix.iter_mut().zip(&other.matrix) {
            for (a, b) in r.iter_mut().zip(o) {
                *a += b;
            }
        }
        for (a, b) in self.bias.iter_mut().zip(&other.bias) {
            *a += b;
        }
    }
}

pub(crate) fn exact_zero_vec(n: usize) -> Vec<BigRational> {
    vec![BigRational::zero(); n]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apply_and_compose() {
        let a = AffineMap::new(vec![vec![1.0, 2.0], vec![0.0, -1.0]], vec![0.5, 1.0]).unwrap();
        assert_eq!(a.apply(&[1.0, 1.0]), vec![3.5, 0.0]);
        let b = AffineMap::new(vec![vec![2.0], vec![1.0]], vec![0.0, 1.0]).unwrap();
        let c = a.compose(&b).unwrap();
        assert_eq!(c.apply(&[3.0]), a.apply(&b.apply(&[3.0])));
        assert_eq!(a.linf_operator_norm(), 3.0);
        let exact = a.apply_exact(&[rational(1.0), rational(1.0)]);
        assert_eq!(exact, vec![rational(3.5), rational(0.0)]);
    }

    #[test]
    fn rejects_ragged_rows() {
        assert!(AffineMap::new(vec![vec![1.0], vec![1.0, 2.0]], vec![0.0, 0.0]).is_err());
        assert!(AffineMap::new(vec![vec![1.0]], vec![0.0, 0.0]).is_err());
        assert!(AffineMap::new(vec![vec![f64::INFINITY]], vec![0.0]).is_err());
    }
}
