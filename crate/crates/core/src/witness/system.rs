//! The homogeneous system `Σ_{i_1 < .. < i_k} (Δ_i1, .., Δ_ik) = 0`.
//!
//! Slot `j` of the tuple sum collects `Δ_i` once for every ascending tuple
//! that puts index `i` in position `j`, so the system is `M·Δ = 0` with
//! `M[j][i] = C(i−1, j−1)·C(n−i, k−j)` (1-based). With `n > k` it always has
//! a nonzero solution.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::numeric::{binomial_big, rational, rational_linf, to_f64};

fn check_sizes(n: usize, k: usize) -> Result<()> {
    if k == 0 || n <= k {
        return Err(Error::InvalidParameter(format!(
            "need n > k >= 1, got n = {n}, k = {k}"
        )));
    }
    Ok(())
}

/// `k × n` integer matrix of the tuple-sum system.
pub fn tuple_system_coeffs(n: usize, k: usize) -> Result<Vec<Vec<BigInt>>> {
    check_sizes(n, k)?;
    Ok((1..=k)
        .map(|j| {
            (1..=n)
                .map(|i| {
                    if i < j || n - i < k - j {
                        BigInt::zero()
                    } else {
                        binomial_big(i - 1, j - 1) * binomial_big(n - i, k - j)
                    }
                })
                .collect()
        })
        .collect())
}

/// One nonzero vector of the null space of `m`, by exact Gauss-Jordan
/// elimination. The first free column is set to 1; the sign is then fixed
/// so the first nonzero entry is positive.
pub fn null_space_vector(m: &[Vec<BigInt>]) -> Option<Vec<BigRational>> {
    let cols = m.first()?.len();
    let mut a: Vec<Vec<BigRational>> = m
        .iter()
        .map(|row| row.iter().map(|v| BigRational::from_integer(v.clone())).collect())
        .collect();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        let Some(p) = (row..a.len()).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(row, p);
        let inv = a[row][col].recip();
        for v in a[row].iter_mut() {
            *v *= &inv;
        }
        for r in 0..a.len() {
            if r != row && !a[r][col].is_zero() {
                let factor = a[r][col].clone();
                for c in 0..cols {
                    let delta = &factor * &a[row][c];
                    a[r][c] -= delta;
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == a.len() {
            break;
        }
    }
    let free = (0..cols).find(|c| !pivots.contains(c))?;
    let mut x = vec![BigRational::zero(); cols];
    x[free] = BigRational::one();
    for (r, &pc) in pivots.iter().enumerate() {
        x[pc] = -a[r][free].clone();
    }
    if x.iter().find(|v| !v.is_zero()).is_some_and(|v| v.is_negative()) {
        for v in x.iter_mut() {
            *v = -v.clone();
        }
    }
    Some(x)
}

/// `M·Δ`, exactly.
pub fn tuple_sums_exact(delta: &[BigRational], k: usize) -> Result<Vec<BigRational>> {
    let m = tuple_system_coeffs(delta.len(), k)?;
    Ok(m.iter()
        .map(|row| {
            row.iter()
                .zip(delta)
                .fold(BigRational::zero(), |acc, (c, d)| {
                    acc + BigRational::from_integer(c.clone()) * d
                })
        })
        .collect())
}

/// `‖M·Δ‖∞` evaluated exactly on the float values of `Δ`.
pub fn tuple_residual(delta: &[f64], k: usize) -> Result<f64> {
    let exact: Vec<BigRational> = delta.iter().map(|&d| rational(d)).collect();
    Ok(to_f64(&rational_linf(&tuple_sums_exact(&exact, k)?)))
}

/// A null-space direction scaled so that `‖Δ‖∞ = radius / 2`, exactly.
pub fn collision_delta_exact(n: usize, k: usize, radius: &BigRational) -> Result<Vec<BigRational>> {
    if !radius.is_positive() {
        return Err(Error::InvalidParameter("radius must be positive".into()));
    }
    let m = tuple_system_coeffs(n, k)?;
    let x = null_space_vector(&m)
        .ok_or_else(|| Error::Degenerate(format!("no null vector for n = {n}, k = {k}")))?;
    let scale = radius / (rational_linf(&x) * BigInt::from(2));
    Ok(x.into_iter().map(|v| v * &scale).collect())
}

pub fn collision_delta(n: usize, k: usize, radius: f64) -> Result<Vec<f64>> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "radius must be positive and finite, got {radius}"
        )));
    }
    Ok(collision_delta_exact(n, k, &rational(radius))?
        .iter()
        .map(to_f64)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{ascending_tuples, binomial};

    fn ints(rows: &[&[i64]]) -> Vec<Vec<BigInt>> {
        rows.iter().map(|r| r.iter().map(|&v| BigInt::from(v)).collect()).collect()
    }

    #[test]
    fn small_systems() {
        assert_eq!(tuple_system_coeffs(3, 2).unwrap(), ints(&[&[2, 1, 0], &[0, 1, 2]]));
        assert_eq!(tuple_system_coeffs(2, 1).unwrap(), ints(&[&[1, 1]]));
        assert!(tuple_system_coeffs(2, 2).is_err());
        assert!(tuple_system_coeffs(3, 0).is_err());
    }

    #[test]
    fn coefficients_count_slot_occupancy() {
        for n in 2..=10 {
            for k in 1..=4.min(n - 1) {
                let mut counts = vec![vec![0u128; n]; k];
                for t in ascending_tuples(n, k) {
                    for (j, &i) in t.iter().enumerate() {
                        counts[j][i] += 1;
                    }
                }
                let m = tuple_system_coeffs(n, k).unwrap();
                for j in 0..k {
                    for i in 0..n {
                        assert_eq!(m[j][i], BigInt::from(counts[j][i]), "n={n} k={k}");
                    }
                    let total: BigInt = m[j].iter().sum();
                    assert_eq!(total, BigInt::from(binomial(n, k)));
                }
            }
        }
    }

    #[test]
    fn deltas_solve_the_system_exactly() {
        let third = BigRational::new(1.into(), 3.into());
        for n in 2..=10 {
            for k in 1..=4.min(n - 1) {
                let d = collision_delta_exact(n, k, &third).unwrap();
                assert!(tuple_sums_exact(&d, k).unwrap().iter().all(Zero::is_zero));
                assert_eq!(rational_linf(&d), &third / BigInt::from(2));
            }
        }
    }

    #[test]
    fn delta_directions() {
        let d = collision_delta(3, 2, 0.5).unwrap();
        assert_eq!(d, vec![0.125, -0.25, 0.125]);
        let d = collision_delta(2, 1, 0.2).unwrap();
        assert!((d[0] - 0.1).abs() < 1e-15 && (d[1] + 0.1).abs() < 1e-15);
        assert_eq!(tuple_residual(&collision_delta(3, 2, 0.5).unwrap(), 2).unwrap(), 0.0);
        assert!(collision_delta(3, 2, 0.0).is_err());
    }

    #[test]
    fn midpoint_collision() {
        // F(x, y) = f(x) + f(y) for affine f cannot tell (0.6, 0.4) from
        // (0.5, 0.5).
        let d = collision_delta(2, 1, 0.2).unwrap();
        let a = [0.5 + d[0], 0.5 + d[1]];
        assert!((a[0] - 0.6).abs() < 1e-15 && (a[1] - 0.4).abs() < 1e-15);
        let f = |x: f64| 3.0 * x - 1.0;
        assert!((f(a[0]) + f(a[1]) - 2.0 * f(0.5)).abs() < 1e-15);
    }
}
