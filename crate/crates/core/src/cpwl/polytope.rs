use microlp::{ComparisonOp, OptimizationDirection, Problem};
use num_rational::BigRational;
use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{linf_norm, rational};

/// Tolerance for `a·x + b ≥ 0` membership tests.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

/// Closed polytope `{x : a_j·x + b_j ≥ 0 for all j}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HPolytope {
    normals: Vec<Vec<f64>>,
    offsets: Vec<f64>,
    dim: usize,
}

impl HPolytope {
    pub fn new(normals: Vec<Vec<f64>>, offsets: Vec<f64>) -> Result<Self> {
        if normals.len() != offsets.len() {
            return Err(Error::SizeMismatch(format!(
                "{} normals but {} offsets",
                normals.len(),
                offsets.len()
            )));
        }
        let dim = normals.first().map(Vec::len).ok_or(Error::Empty("polytope"))?;
        if let Some(bad) = normals.iter().find(|a| a.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.len(),
            });
        }
        if normals.iter().flatten().chain(&offsets).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("polytope"));
        }
        Ok(HPolytope {
            normals,
            offsets,
            dim,
        })
    }

    /// Axis-aligned box `[lo, hi]`.
    pub fn aabb(lo: &[f64], hi: &[f64]) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                found: hi.len(),
            });
        }
        let d = lo.len();
        let mut normals = Vec::with_capacity(2 * d);
        let mut offsets = Vec::with_capacity(2 * d);
        for i in 0..d {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            normals.push(e.clone());
            offsets.push(-lo[i]);
            e[i] = -1.0;
            normals.push(e);
            offsets.push(hi[i]);
        }
        Self::new(normals, offsets)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn normals(&self) -> &[Vec<f64>] {
        &self.normals
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn slacks(&self, x: &[f64]) -> impl Iterator<Item = f64> + '_ {
        let x = x.to_vec();
        self.normals
            .iter()
            .zip(&self.offsets)
            .map(move |(a, b)| a.iter().zip(&x).map(|(a, x)| a * x).sum::<f64>() + b)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.slacks(x).all(|s| s >= -MEMBERSHIP_TOL)
    }

    pub fn contains_exact(&self, x: &[BigRational]) -> bool {
        self.normals.iter().zip(&self.offsets).all(|(a, &b)| {
            let s = a
                .iter()
                .zip(x)
                .filter(|(a, _)| **a != 0.0)
                .fold(rational(b), |acc, (&a, x)| acc + rational(a) * x);
            !s.is_negative()
        })
    }

    /// Signed ℓ1 distance from `x` to the nearest facet hyperplane:
    /// positive inside, negative when some inequality is violated.
    /// Degenerate rows (zero normal) are skipped.
    pub fn clearance(&self, x: &[f64]) -> f64 {
        self.normals
            .iter()
            .zip(self.slacks(x))
            .filter_map(|(a, s)| {
                let scale = linf_norm(a);
                (scale > 0.0).then(|| s / scale)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Exact `min_{y ∈ P} ‖y − v‖₁`, solved as a linear program over
    /// `(y, t)` with `−t ≤ y − v ≤ t`.
    pub fn l1_distance(&self, v: &[f64]) -> Result<f64> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        if self.contains(v) {
            return Ok(0.0);
        }
        let mut lp = Problem::new(OptimizationDirection::Minimize);
        let y: Vec<_> = (0..self.dim)
            .map(|_| lp.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY)))
            .collect();
        let t: Vec<_> = (0..self.dim)
            .map(|_| lp.add_var(1.0, (0.0, f64::INFINITY)))
            .collect();
        for i in 0..self.dim {
            lp.add_constraint([(y[i], 1.0), (t[i], -1.0)], ComparisonOp::Le, v[i]);
            lp.add_constraint([(y[i], 1.0), (t[i], 1.0)], ComparisonOp::Ge, v[i]);
        }
        for (a, &b) in self.normals.iter().zip(&self.offsets) {
            let terms: Vec<_> = a
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != 0.0)
                .map(|(i, &c)| (y[i], c))
                .collect();
            if terms.is_empty() {
                if b < -MEMBERSHIP_TOL {
                    return Err(Error::Lp("infeasible".into()));
                }
                continue;
            }
            lp.add_constraint(terms, ComparisonOp::Ge, -b);
        }
        match lp.solve() {
            Ok(sol) => Ok(sol.objective().max(0.0)),
            Err(e) => Err(Error::Lp(e.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_membership_and_clearance() {
        let b = HPolytope::aabb(&[0.0, 0.0], &[0.5, 0.5]).unwrap();
        assert!(b.contains(&[0.25, 0.25]));
        assert!(b.contains(&[0.5, 0.5]));
        assert!(!b.contains(&[0.5 + 1e-9, 0.25]));
        assert_eq!(b.clearance(&[0.25, 0.1]), 0.1);
        assert!(b.clearance(&[0.6, 0.1]) < 0.0);
        assert!(b.contains_exact(&[rational(0.5), rational(0.0)]));
        assert!(!b.contains_exact(&[rational(0.5 + 1e-15), rational(0.0)]));
    }

    #[test]
    fn l1_distance_to_boxes() {
        let right = HPolytope::aabb(&[0.5, 0.0], &[1.0, 0.5]).unwrap();
        let far = HPolytope::aabb(&[0.5, 0.5], &[1.0, 1.0]).unwrap();
        let v = [0.25, 0.25];
        assert!((right.l1_distance(&v).unwrap() - 0.25).abs() < 1e-12);
        assert!((far.l1_distance(&v).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(right.l1_distance(&[0.75, 0.25]).unwrap(), 0.0);
    }

    #[test]
    fn l1_distance_to_halfplane() {
        // x + y ≥ 1 from the origin: ℓ1 distance 1.
        let h = HPolytope::new(vec![vec![1.0, 1.0]], vec![-1.0]).unwrap();
        assert!((h.l1_distance(&[0.0, 0.0]).unwrap() - 1.0).abs() < 1e-12);
        // 2x ≥ 1: ℓ1 distance 0.5.
        let h = HPolytope::new(vec![vec![2.0, 0.0]], vec![-1.0]).unwrap();
        assert!((h.l1_distance(&[0.0, 0.3]).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn empty_polytope_is_an_error() {
        let h = HPolytope::new(vec![vec![1.0], vec![-1.0]], vec![-1.0, 0.0]).unwrap();
        assert!(h.l1_distance(&[0.0]).is_err());
    }
}
