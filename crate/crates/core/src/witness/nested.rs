//! Nested points: a strictly decreasing `w ∈ (0,1)^n` whose ascending
//! k-subvectors all sit in the interior of one region.
//!
//! Construction, with `k` the dimension of the covering:
//! - `v_0 = (x, .., x)`;
//! - `ε_i` is a radius at `v_{i−1}` whose ℓ1 ball only meets regions that
//!   contain `v_{i−1}`, capped at `ε_{i−1}/2` and at the distance to the
//!   faces of `[0,1]^k`;
//! - `v_i = v_{i−1} + (ε_i/2)·e_i`;
//! - `ρ = min ε_i/ε_{i−1}`, `y_i = (ε_1/4)·ρ^{i−1}`, `w_i = x + y_i`.
//!
//! Every region containing `v_k` contains the whole chain, so each
//! `(x + y_i1, .., x + y_ik)` is a convex combination of `v_0..v_k` with
//! nonnegative weights `α` (see [`alpha_coefficients`]).

use serde::{Deserialize, Serialize};

use crate::cpwl::{Covering, RegionId, MEMBERSHIP_TOL};
use crate::error::{Error, Result};
use crate::numeric::ascending_tuples;

/// Tolerance for the α-coefficient identities.
pub const ALPHA_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestedPointCert {
    pub x: f64,
    pub eps: Vec<f64>,
    pub v_chain: Vec<Vec<f64>>,
    pub rho: f64,
    pub y: Vec<f64>,
    pub w: Vec<f64>,
    pub cell: RegionId,
}

impl NestedPointCert {
    pub fn k(&self) -> usize {
        self.eps.len()
    }

    pub fn n(&self) -> usize {
        self.w.len()
    }
}

fn box_clearance(v: &[f64]) -> f64 {
    v.iter().map(|&c| c.min(1.0 - c)).fold(f64::INFINITY, f64::min)
}

pub fn nested_point<C: Covering + ?Sized>(cover: &C, n: usize, x0: Option<f64>) -> Result<NestedPointCert> {
    let k = cover.dim();
    if k == 0 || n <= k {
        return Err(Error::InvalidParameter(format!(
            "need n > k >= 1, got n = {n}, k = {k}"
        )));
    }
    let x = x0.unwrap_or(0.25);
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::InvalidParameter(format!("seed {x} is not in (0, 1)")));
    }

    let mut v = vec![x; k];
    let mut v_chain = vec![v.clone()];
    let mut eps: Vec<f64> = Vec::with_capacity(k);
    for i in 0..k {
        let mut cap = box_clearance(&v);
        if let Some(prev) = eps.last() {
            cap = cap.min(prev / 2.0);
        }
        let e = cover.inclusion_radius(&v, cap)?;
        if !(e > 0.0) {
            return Err(Error::Degenerate(format!(
                "no positive radius at v_{i} = {v:?}"
            )));
        }
        eps.push(e);
        v[i] += e / 2.0;
        v_chain.push(v.clone());
    }

    // The caps make every ratio at most 1/2; with k = 1 there is no ratio
    // and 1/2 is used.
    let rho = eps
        .windows(2)
        .map(|p| p[1] / p[0])
        .fold(0.5f64, f64::min);
    let y: Vec<f64> = (0..n)
        .map(|i| eps[0] / 4.0 * rho.powi(i as i32))
        .collect();
    let w: Vec<f64> = y.iter().map(|yi| x + yi).collect();
    let cell = cover.locate_regions(&v)?.only().ok_or_else(|| {
        Error::Degenerate(format!("end of chain {v:?} is not in a single region"))
    })?;

    let cert = NestedPointCert {
        x,
        eps,
        v_chain,
        rho,
        y,
        w,
        cell,
    };
    let chain = validate_chain(&cert, cover)?;
    if !chain.holds() {
        return Err(Error::Degenerate(format!("chain checks failed: {:?}", chain.failures)));
    }
    let nested = check_nested(&cert.w, k, cover)?;
    if !nested.holds || nested.common.as_ref() != Some(&cert.cell) {
        return Err(Error::Degenerate(format!(
            "w = {:?} is not nested in {:?}",
            cert.w, cert.cell
        )));
    }
    Ok(cert)
}

/// `α_0 = 1 − 2y_1/ε_1`, `α_i = 2y_i/ε_i − 2y_{i+1}/ε_{i+1}`,
/// `α_k = 2y_k/ε_k` for a k-vector of offsets `y`.
pub fn alpha_coefficients(y: &[f64], eps: &[f64]) -> Vec<f64> {
    let k = eps.len();
    let t: Vec<f64> = (0..k).map(|i| 2.0 * y[i] / eps[i]).collect();
    let mut alpha = Vec::with_capacity(k + 1);
    alpha.push(1.0 - t[0]);
    for i in 0..k {
        alpha.push(if i + 1 < k { t[i] - t[i + 1] } else { t[i] });
    }
    alpha
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainReport {
    /// Largest `|Σα − 1|` and `‖Σα_i v_i − (x + y)‖∞` over all ascending
    /// k-subsets of `y`.
    pub alpha_error: f64,
    pub min_alpha: f64,
    pub failures: Vec<String>,
}

impl ChainReport {
    pub fn holds(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Re-checks the recurrences, the inclusion chain
/// `locate(v_k) ⊆ .. ⊆ locate(v_0)` and the α identities of a cert.
pub fn validate_chain<C: Covering + ?Sized>(cert: &NestedPointCert, cover: &C) -> Result<ChainReport> {
    let k = cover.dim();
    let mut failures = Vec::new();
    if cert.eps.len() != k || cert.v_chain.len() != k + 1 || cert.y.len() != cert.w.len() {
        return Ok(ChainReport {
            alpha_error: f64::INFINITY,
            min_alpha: f64::NAN,
            failures: vec!["field lengths do not match the covering dimension".into()],
        });
    }
    if cert.v_chain[0].iter().any(|&c| c != cert.x) {
        failures.push("v_0 is not the diagonal point".into());
    }
    for i in 0..k {
        let e = cert.eps[i];
        if !(e > 0.0) {
            failures.push(format!("eps_{} is not positive", i + 1));
        }
        if i > 0 && e > cert.eps[i - 1] / 2.0 {
            failures.push(format!("eps_{} exceeds half of eps_{}", i + 1, i));
        }
        let mut expect = cert.v_chain[i].clone();
        expect[i] += e / 2.0;
        if expect != cert.v_chain[i + 1] {
            failures.push(format!("v_{} does not follow from v_{}", i + 1, i));
        }
    }
    for i in (1..=k).rev() {
        let inner = cover.locate_regions(&cert.v_chain[i])?;
        let outer = cover.locate_regions(&cert.v_chain[i - 1])?;
        if !inner.is_subset(&outer) {
            failures.push(format!("regions at v_{i} are not a subset of those at v_{}", i - 1));
        }
    }
    let rho = cert.eps.windows(2).map(|p| p[1] / p[0]).fold(0.5f64, f64::min);
    if rho != cert.rho || !(cert.rho > 0.0 && cert.rho < 1.0) {
        failures.push(format!("rho = {} does not match the eps chain", cert.rho));
    }
    for (i, &yi) in cert.y.iter().enumerate() {
        if !(yi > 0.0 && yi < cert.eps[0] / 2.0) {
            failures.push(format!("y_{} outside (0, eps_1/2)", i + 1));
        }
        if i > 0 && yi / cert.y[i - 1] > cert.rho * (1.0 + 1e-15) {
            failures.push(format!("y_{}/y_{} exceeds rho", i + 1, i));
        }
        if cert.w[i] != cert.x + yi {
            failures.push(format!("w_{} != x + y_{}", i + 1, i + 1));
        }
    }

    let mut alpha_error: f64 = 0.0;
    let mut min_alpha = f64::INFINITY;
    for t in ascending_tuples(cert.y.len(), k) {
        let ys: Vec<f64> = t.iter().map(|&i| cert.y[i]).collect();
        let alpha = alpha_coefficients(&ys, &cert.eps);
        min_alpha = alpha.iter().copied().fold(min_alpha, f64::min);
        alpha_error = alpha_error.max((alpha.iter().sum::<f64>() - 1.0).abs());
        for c in 0..k {
            let combo: f64 = alpha
                .iter()
                .zip(&cert.v_chain)
                .map(|(a, v)| a * v[c])
                .sum();
            alpha_error = alpha_error.max((combo - (cert.x + ys[c])).abs());
        }
    }
    if alpha_error > ALPHA_TOL {
        failures.push(format!("alpha identities off by {alpha_error:e}"));
    }
    if min_alpha < -ALPHA_TOL {
        failures.push(format!("negative alpha coefficient {min_alpha:e}"));
    }
    Ok(ChainReport {
        alpha_error,
        min_alpha,
        failures,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TupleCell {
    pub indices: Vec<usize>,
    /// Region holding the subvector in its interior, if there is one.
    pub region: Option<RegionId>,
    pub clearance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NestedCheck {
    pub holds: bool,
    pub strictly_decreasing: bool,
    pub common: Option<RegionId>,
    pub min_clearance: f64,
    pub tuples: Vec<TupleCell>,
}

/// Whether one region holds every ascending k-subvector of `w` strictly in
/// its interior.
pub fn check_nested<C: Covering + ?Sized>(w: &[f64], k: usize, cover: &C) -> Result<NestedCheck> {
    if k != cover.dim() || k == 0 || k > w.len() {
        return Err(Error::InvalidParameter(format!(
            "arity {k} does not fit {} entries and a covering of dimension {}",
            w.len(),
            cover.dim()
        )));
    }
    let strictly_decreasing = w.windows(2).all(|p| p[0] > p[1]);
    let mut tuples = Vec::new();
    let mut min_clearance = f64::INFINITY;
    for t in ascending_tuples(w.len(), k) {
        let sub: Vec<f64> = t.iter().map(|&i| w[i]).collect();
        let interior = match cover.interior_region(&sub) {
            Ok(r) => r,
            Err(Error::OutsideDomain(_)) => None,
            Err(e) => return Err(e),
        };
        let (region, clearance) = match interior {
            Some((id, c)) => (Some(id), c),
            None => (None, 0.0),
        };
        min_clearance = min_clearance.min(clearance);
        tuples.push(TupleCell {
            indices: t,
            region,
            clearance,
        });
    }
    let first = tuples[0].region.clone();
    let shared = first.is_some() && tuples.iter().all(|t| t.region == first);
    Ok(NestedCheck {
        holds: strictly_decreasing && shared && min_clearance > MEMBERSHIP_TOL,
        strictly_decreasing,
        common: if shared { first } else { None },
        min_clearance,
        tuples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpwl::{AffineMap, ExplicitPartition};

    fn four_squares() -> ExplicitPartition {
        let law = || AffineMap::new(vec![vec![1.0, 1.0]], vec![0.0]).unwrap();
        ExplicitPartition::four_squares([law(), law(), law(), law()]).unwrap()
    }

    #[test]
    fn four_square_points() {
        let p = four_squares();
        let good = check_nested(&[3.0 / 8.0, 2.0 / 8.0, 1.0 / 8.0], 2, &p).unwrap();
        assert!(good.holds);
        assert_eq!(good.common, Some(RegionId::Cell(0)));
        let bad = check_nested(&[7.0 / 8.0, 6.0 / 8.0, 1.0 / 8.0], 2, &p).unwrap();
        assert!(!bad.holds);
        assert_eq!(bad.tuples[0].region, Some(RegionId::Cell(3)));
        assert_eq!(bad.tuples[1].region, Some(RegionId::Cell(2)));
    }

    #[test]
    fn facet_subvector_is_rejected() {
        let p = four_squares();
        assert!(!check_nested(&[0.5, 0.25, 0.1], 2, &p).unwrap().holds);
        assert!(!check_nested(&[0.1, 0.25, 0.3], 2, &p).unwrap().holds);
    }

    #[test]
    fn four_square_construction() {
        let p = four_squares();
        let cert = nested_point(&p, 3, Some(0.25)).unwrap();
        assert_eq!(cert.eps, vec![0.125, 0.0625]);
        assert_eq!(cert.v_chain[1], vec![0.3125, 0.25]);
        assert_eq!(cert.v_chain[2], vec![0.3125, 0.28125]);
        assert_eq!(cert.rho, 0.5);
        assert_eq!(cert.y, vec![0.03125, 0.015625, 0.0078125]);
        assert_eq!(cert.w, vec![0.28125, 0.265625, 0.2578125]);
        assert_eq!(cert.cell, RegionId::Cell(0));
        let report = validate_chain(&cert, &p).unwrap();
        assert!(report.holds(), "{report:?}");
        assert!(report.min_alpha >= 0.0);
    }

    #[test]
    fn one_dimensional_cells() {
        let p = ExplicitPartition::grid(&[vec![0.3, 0.7]], |_| {
            AffineMap::new(vec![vec![2.0]], vec![0.0]).unwrap()
        })
        .unwrap();
        for x0 in [0.25, 0.5, 0.9] {
            let cert = nested_point(&p, 5, Some(x0)).unwrap();
            let cells: Vec<usize> = cert.w.iter().map(|&w| p.cell_of(&[w]).unwrap()).collect();
            assert!(cells.iter().all(|&c| c == cells[0]));
            assert!(cert.w.windows(2).all(|q| q[0] > q[1]));
        }
    }

    #[test]
    fn bad_arguments() {
        let p = four_squares();
        assert!(nested_point(&p, 2, None).is_err());
        assert!(nested_point(&p, 3, Some(1.0)).is_err());
    }

    #[test]
    fn tampered_chain_is_reported() {
        let p = four_squares();
        let mut cert = nested_point(&p, 4, None).unwrap();
        cert.v_chain[2][1] += 1e-3;
        cert.y[3] = cert.y[2];
        let report = validate_chain(&cert, &p).unwrap();
        assert!(report.failures.len() >= 2, "{report:?}");
    }
}
