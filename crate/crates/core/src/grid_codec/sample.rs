//! Random separated multisets for round-trip and Lipschitz experiments.

use rand::seq::index::sample as sample_indices;
use rand::Rng;

use super::BoundingBox;
use crate::error::{Error, Result};
use crate::multiset::{Multiset, Point};
use crate::numeric::linf_dist;

/// Candidate draws per requested point before giving up.
const DRAWS_PER_POINT: usize = 2000;

fn uniform_point<R: Rng>(rng: &mut R, domain: &BoundingBox) -> Vec<f64> {
    domain
        .lo
        .iter()
        .zip(&domain.hi)
        .map(|(&l, &h)| if l < h { rng.gen_range(l..=h) } else { l })
        .collect()
}

fn far_from_all(p: &[f64], others: &[Vec<f64>], min_sep: f64) -> bool {
    others.iter().all(|o| linf_dist(o, p) >= min_sep)
}

/// `n` uniform points, each at ℓ∞ distance at least `min_sep` from the
/// others, by rejection.
pub fn separated_multiset<R: Rng>(rng: &mut R, domain: &BoundingBox, n: usize, min_sep: f64) -> Result<Multiset> {
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n);
    for _ in 0..n * DRAWS_PER_POINT {
        if pts.len() == n {
            break;
        }
        let p = uniform_point(rng, domain);
        if far_from_all(&p, &pts, min_sep) {
            pts.push(p);
        }
    }
    if pts.len() < n {
        return Err(Error::Degenerate(format!(
            "placed only {} of {n} points at separation {min_sep}",
            pts.len()
        )));
    }
    Multiset::from_rows(&pts)
}

/// `n` distinct nodes of the lattice `lo + spacing·Z^d` inside `domain`.
pub fn lattice_subset<R: Rng>(rng: &mut R, domain: &BoundingBox, spacing: f64, n: usize) -> Result<Multiset> {
    if !(spacing > 0.0) {
        return Err(Error::InvalidParameter(format!("spacing {spacing} must be positive")));
    }
    let counts: Vec<usize> = domain
        .lo
        .iter()
        .zip(&domain.hi)
        .map(|(l, h)| ((h - l) / spacing + 1e-9).floor() as usize + 1)
        .collect();
    let total = counts.iter().try_fold(1usize, |a, &c| a.checked_mul(c));
    let total = total.filter(|&t| t >= n).ok_or_else(|| {
        Error::InvalidParameter(format!("lattice has fewer than {n} nodes"))
    })?;
    let rows: Vec<Vec<f64>> = sample_indices(rng, total, n)
        .into_iter()
        .map(|mut idx| {
            let mut p = vec![0.0; counts.len()];
            for axis in (0..counts.len()).rev() {
                p[axis] = domain.lo[axis] + spacing * (idx % counts[axis]) as f64;
                idx /= counts[axis];
            }
            p
        })
        .collect();
    Multiset::from_rows(&rows)
}

/// Moves one element of `a` by at most `eta` in each coordinate, keeping it
/// in `domain` and at least `min_sep` from the rest.
pub fn perturbed_copy<R: Rng>(
    rng: &mut R,
    a: &Multiset,
    eta: f64,
    min_sep: f64,
    domain: &BoundingBox,
) -> Result<Multiset> {
    let rows: Vec<Vec<f64>> = a.iter().map(|p| p.coords().to_vec()).collect();
    for _ in 0..DRAWS_PER_POINT {
        let i = rng.gen_range(0..rows.len());
        let moved: Vec<f64> = rows[i].iter().map(|&c| c + rng.gen_range(-eta..=eta)).collect();
        if !domain.contains(&moved) {
            continue;
        }
        let others: Vec<Vec<f64>> = rows
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, r)| r.clone())
            .collect();
        if far_from_all(&moved, &others, min_sep) {
            let mut out = rows.clone();
            out[i] = moved;
            return Multiset::new(out.into_iter().map(Point::new).collect::<Result<_>>()?);
        }
    }
    Err(Error::Degenerate("no admissible perturbation found".into()))
}

/// Either two independent separated multisets or one and a small
/// perturbation of it, with equal probability.
pub fn separated_pair<R: Rng>(
    rng: &mut R,
    domain: &BoundingBox,
    n: usize,
    min_sep: f64,
    eta: f64,
) -> Result<(Multiset, Multiset)> {
    let a = separated_multiset(rng, domain, n, min_sep)?;
    let b = if rng.gen_bool(0.5) {
        separated_multiset(rng, domain, n, min_sep)?
    } else {
        perturbed_copy(rng, &a, eta, min_sep, domain)?
    };
    Ok((a, b))
}
