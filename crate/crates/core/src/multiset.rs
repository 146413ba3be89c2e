//! Multisets of points in `R^d`, their canonical order, and separation
//! statistics.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::assignment;
use crate::error::{Error, Result};
use crate::numeric::linf_dist;

/// A point in `R^d` with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidParameter("point dimension must be >= 1".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("point coordinates"));
        }
        Ok(Point(coords))
    }

    pub fn scalar(x: f64) -> Result<Self> {
        Self::new(vec![x])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    pub fn linf_dist(&self, other: &Point) -> f64 {
        linf_dist(&self.0, &other.0)
    }

    /// Lexicographic order on coordinates.
    pub fn lex_cmp(&self, other: &Point) -> Ordering {
        for (a, b) in self.0.iter().zip(&other.0) {
            match a.total_cmp(b) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        self.0.len().cmp(&other.0.len())
    }
}

/// An unordered collection of `n` points sharing one ambient dimension.
///
/// Equality compares canonical forms, so two multisets holding the same
/// points in a different order are equal.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Multiset {
    dim: usize,
    elements: Vec<Point>,
}

impl Multiset {
    pub fn new(elements: Vec<Point>) -> Result<Self> {
        let first = elements.first().ok_or(Error::Empty("multiset"))?;
        let dim = first.dim();
        if let Some(bad) = elements.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        Ok(Multiset { dim, elements })
    }

    /// The empty multiset; only produced by decoders.
    pub fn empty(dim: usize) -> Self {
        Multiset {
            dim,
            elements: Vec::new(),
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(
            rows.iter()
                .map(|r| Point::new(r.clone()))
                .collect::<Result<_>>()?,
        )
    }

    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::new(
            values
                .iter()
                .map(|&v| Point::scalar(v))
                .collect::<Result<_>>()?,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[Point] {
        &self.elements
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point> {
        self.elements.iter()
    }

    /// Elements sorted lexicographically.
    pub fn canonicalize(&self) -> Multiset {
        let mut elements = self.elements.clone();
        elements.sort_by(Point::lex_cmp);
        Multiset {
            dim: self.dim,
            elements,
        }
    }

    /// Largest per-element ℓ∞ error under an optimal matching, or `None`
    /// when the sizes or dimensions differ.
    pub fn matched_error(&self, other: &Multiset) -> Option<f64> {
        if self.len() != other.len() || self.dim != other.dim {
            return None;
        }
        if self.is_empty() {
            return Some(0.0);
        }
        let cost = assignment::linf_cost_matrix(self, other);
        let sol = assignment::hungarian(&cost);
        Some(
            sol.mapping
                .iter()
                .enumerate()
                .fold(0.0, |m, (i, &j)| f64::max(m, cost[i][j])),
        )
    }

    pub fn approx_eq(&self, other: &Multiset, tol: f64) -> bool {
        self.matched_error(other).is_some_and(|e| e <= tol)
    }
}

impl PartialEq for Multiset {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.len() == other.len()
            && self
                .canonicalize()
                .elements
                .iter()
                .zip(&other.canonicalize().elements)
                .all(|(a, b)| a.lex_cmp(b) == Ordering::Equal)
    }
}

/// Canonical form of a list of points.
pub fn canonicalize(points: &[Point]) -> Result<Multiset> {
    Ok(Multiset::new(points.to_vec())?.canonicalize())
}

/// `r(A)`: the smallest ℓ∞ distance between two distinct positions of `A`.
pub fn min_separation(a: &Multiset) -> Result<f64> {
    if a.len() < 2 {
        return Err(Error::SizeMismatch(format!(
            "min_separation needs at least 2 elements, got {}",
            a.len()
        )));
    }
    let pts = a.elements();
    let mut best = f64::INFINITY;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            best = best.min(pts[i].linf_dist(&pts[j]));
        }
    }
    Ok(best)
}

pub fn max_pairwise(a: &Multiset) -> f64 {
    let pts = a.elements();
    let mut best: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            best = best.max(pts[i].linf_dist(&pts[j]));
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationStats {
    pub min_separation: f64,
    pub max_pairwise: f64,
    /// `min_separation / max_pairwise`, or 0 when every element coincides.
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub per_multiset: Vec<SeparationStats>,
    /// Minimum of `min_separation` over the dataset.
    pub domain_separation: f64,
}

impl SeparationReport {
    pub fn normalized(&self) -> Vec<f64> {
        self.per_multiset.iter().map(|s| s.normalized).collect()
    }
}

pub fn domain_separation(dataset: &[Multiset]) -> Result<SeparationReport> {
    if dataset.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let per_multiset = dataset
        .iter()
        .map(|a| {
            let r = min_separation(a)?;
            let max = max_pairwise(a);
            let normalized = if max > 0.0 { r / max } else { 0.0 };
            Ok(SeparationStats {
                min_separation: r,
                max_pairwise: max,
                normalized,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let domain_separation = per_multiset
        .iter()
        .map(|s| s.min_separation)
        .fold(f64::INFINITY, f64::min);
    Ok(SeparationReport {
        per_multiset,
        domain_separation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ms(rows: &[&[f64]]) -> Multiset {
        Multiset::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn canonicalize_sorts_lexicographically() {
        let a = ms(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let c = a.canonicalize();
        assert_eq!(c.elements()[0].coords(), &[0.0, 1.0]);
        assert_eq!(c.elements()[1].coords(), &[1.0, 0.0]);
        assert_eq!(c.canonicalize().elements(), c.elements());
        assert_eq!(a, c);

        let s = Multiset::from_scalars(&[3.0, 1.0, 2.0]).unwrap().canonicalize();
        let xs: Vec<f64> = s.iter().map(|p| p.coords()[0]).collect();
        assert_eq!(xs, vec![1.0, 2.0, 3.0]);

        let single = ms(&[&[0.0, 0.0]]).canonicalize();
        assert_eq!(single.len(), 1);
    }

    #[test]
    fn construction_rejects_mixed_dimensions() {
        let pts = vec![Point::new(vec![0.0]).unwrap(), Point::new(vec![0.0, 1.0]).unwrap()];
        assert!(matches!(
            canonicalize(&pts),
            Err(Error::DimensionMismatch { expected: 1, found: 2 })
        ));
        assert!(Multiset::new(vec![]).is_err());
        assert!(Point::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn separation_examples() {
        let a = Multiset::from_scalars(&[0.0, 0.3, 1.0]).unwrap();
        assert_eq!(min_separation(&a).unwrap(), 0.3);
        let b = ms(&[&[0.0, 0.0], &[0.0, 0.0], &[1.0, 1.0]]);
        assert_eq!(min_separation(&b).unwrap(), 0.0);
        assert!(min_separation(&Multiset::from_scalars(&[1.0]).unwrap()).is_err());
    }

    #[test]
    fn domain_separation_examples() {
        let a = Multiset::from_scalars(&[0.0, 0.3, 1.0]).unwrap();
        let report = domain_separation(std::slice::from_ref(&a)).unwrap();
        assert_eq!(report.domain_separation, 0.3);
        assert_eq!(report.per_multiset[0].normalized, 0.3);

        let degenerate = Multiset::from_scalars(&[0.5, 0.5]).unwrap();
        let report = domain_separation(&[a, degenerate]).unwrap();
        assert_eq!(report.domain_separation, 0.0);
        assert_eq!(report.per_multiset[1].normalized, 0.0);

        assert!(domain_separation(&[]).is_err());
    }

    #[test]
    fn approx_eq_uses_matching() {
        let a = ms(&[&[0.0, 0.0], &[1.0, 1.0]]);
        let b = ms(&[&[1.0, 1.0 + 1e-12], &[0.0, 0.0]]);
        assert!(a.approx_eq(&b, 1e-9));
        assert!(!a.approx_eq(&b, 1e-13));
        assert_ne!(a, b);
    }
}
