//! Minimum-cost assignment and the ℓ∞-ground Wasserstein distance between
//! equal-size multisets.

use std::ops::{Add, Sub};

use num_traits::Float;

use crate::error::{Error, Result};
use crate::multiset::Multiset;
use crate::numeric::permutations;

/// Largest `n` accepted by [`wasserstein_bruteforce`].
pub const BRUTEFORCE_MAX_N: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// Row `i` is matched to column `mapping[i]`.
    pub mapping: Vec<usize>,
    /// Sum of the matched costs, accumulated in row order.
    pub cost: f64,
}

/// Hungarian algorithm (shortest augmenting paths with potentials), O(n³).
///
/// `cost` must be a non-empty square matrix with finite entries.
pub fn hungarian(cost: &[Vec<f64>]) -> Assignment {
    let mapping = assign(cost);
    let cost = mapping.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
    Assignment { mapping, cost }
}

/// Core of [`hungarian`], generic so it can run on exact integers. `None`
/// stands for +∞.
fn assign<T>(cost: &[Vec<T>]) -> Vec<usize>
where
    T: Copy + Default + PartialOrd + Add<Output = T> + Sub<Output = T>,
{
    let n = cost.len();
    // 1-based arrays; column 0 is the virtual source.
    let mut u = vec![T::default(); n + 1];
    let mut v = vec![T::default(); n + 1];
    let mut col_owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for row in 1..=n {
        col_owner[0] = row;
        let mut j0 = 0usize;
        let mut minv: Vec<Option<T>> = vec![None; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let mut delta: Option<T> = None;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if minv[j].is_none_or(|m| cur < m) {
                    minv[j] = Some(cur);
                    way[j] = j0;
                }
                if delta.is_none_or(|d| minv[j].is_some_and(|m| m < d)) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            let delta = delta.expect("an unused column remains");
            for j in 0..=n {
                if used[j] {
                    u[col_owner[j]] = u[col_owner[j]] + delta;
                    v[j] = v[j] - delta;
                } else {
                    minv[j] = minv[j].map(|m| m - delta);
                }
            }
            j0 = j1;
            if col_owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut mapping = vec![0usize; n];
    for j in 1..=n {
        if col_owner[j] > 0 {
            mapping[col_owner[j] - 1] = j - 1;
        }
    }
    mapping
}

/// Largest binary exponent spread for which costs are scaled to `i128`.
const MAX_SHIFT: i32 = 60;

/// Non-negative float costs as integers `c = m·2^e` over a common
/// exponent, when the spread allows it. Sums of up to `2^10` such entries
/// then fit in an `i128`.
fn integer_costs(cost: &[Vec<f64>]) -> Option<(Vec<Vec<i128>>, i32)> {
    if cost.len() > 1024 {
        return None;
    }
    let parts: Vec<Vec<(u64, i32)>> = cost
        .iter()
        .map(|row| {
            row.iter()
                .map(|&c| {
                    let (m, e, _) = c.integer_decode();
                    (m, e as i32)
                })
                .collect()
        })
        .collect();
    let emin = parts.iter().flatten().filter(|p| p.0 != 0).map(|p| p.1).min().unwrap_or(0);
    let emax = parts.iter().flatten().filter(|p| p.0 != 0).map(|p| p.1).max().unwrap_or(0);
    if emax - emin > MAX_SHIFT {
        return None;
    }
    let scaled = parts
        .iter()
        .map(|row| {
            row.iter()
                .map(|&(m, e)| if m == 0 { 0 } else { (m as i128) << (e - emin) })
                .collect()
        })
        .collect();
    Some((scaled, emin))
}

/// `x · 2^e` without overflowing the intermediate power.
fn scale_pow2(mut x: f64, mut e: i32) -> f64 {
    while e > 0 {
        let step = e.min(1000);
        x *= 2f64.powi(step);
        e -= step;
    }
    while e < 0 {
        let step = e.max(-1000);
        x *= 2f64.powi(step);
        e -= step;
    }
    x
}

fn integer_total(cost: &[Vec<i128>], mapping: &[usize]) -> i128 {
    mapping.iter().enumerate().map(|(i, &j)| cost[i][j]).sum()
}

pub(crate) fn linf_cost_matrix(a: &Multiset, b: &Multiset) -> Vec<Vec<f64>> {
    a.iter()
        .map(|x| b.iter().map(|y| x.linf_dist(y)).collect())
        .collect()
}

fn check_compatible(a: &Multiset, b: &Multiset) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    if a.len() != b.len() {
        return Err(Error::SizeMismatch(format!(
            "multisets have {} and {} elements",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// `d_W(A, B) = min_σ Σ_i ‖a_i − b_σ(i)‖∞`, solved as an assignment problem.
///
/// The pairwise distances are rescaled to integers over a common binary
/// exponent, so the optimum is found exactly and rounded once. Distances
/// spread over more than 2^60 fall back to float arithmetic.
pub fn wasserstein(a: &Multiset, b: &Multiset) -> Result<f64> {
    check_compatible(a, b)?;
    if a.is_empty() {
        return Ok(0.0);
    }
    let cost = linf_cost_matrix(a, b);
    Ok(match integer_costs(&cost) {
        Some((exact, e)) => scale_pow2(integer_total(&exact, &assign(&exact)) as f64, e),
        None => hungarian(&cost).cost,
    })
}

/// Exhaustive minimum over all `n!` matchings, with the same exact
/// arithmetic as [`wasserstein`].
pub fn wasserstein_bruteforce(a: &Multiset, b: &Multiset) -> Result<f64> {
    check_compatible(a, b)?;
    if a.len() > BRUTEFORCE_MAX_N {
        return Err(Error::TooLarge {
            what: "n",
            value: a.len(),
            max: BRUTEFORCE_MAX_N,
        });
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let cost = linf_cost_matrix(a, b);
    let perms = permutations(a.len());
    Ok(match integer_costs(&cost) {
        Some((exact, e)) => {
            let best = perms.iter().map(|p| integer_total(&exact, p)).min().expect("n >= 1");
            scale_pow2(best as f64, e)
        }
        None => perms
            .iter()
            .map(|p| p.iter().enumerate().map(|(i, &j)| cost[i][j]).sum::<f64>())
            .fold(f64::INFINITY, f64::min),
    })
}
