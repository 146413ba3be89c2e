//! k-ary Janossy pooling
//!
//! `F(x_1..x_n) = 1/(n−k)! · Σ_{π ∈ S_n} f(x_π(1), .., x_π(k))`.
//!
//! The `1/(n−k)!` factor makes every ordered k-tuple of distinct positions
//! count once, so the main evaluation path sums `f` over ascending index
//! tuples and all their orderings (`C(n,k)·k!` terms) instead of enumerating
//! `S_n`. The literal `S_n` sum is kept as an oracle for small `n`.
//!
//! For `k = n` and a permutation-invariant `f` the formula gives `n!·f(X)`,
//! not `f(X)`; the formula is implemented as written.

use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::cpwl::affine::exact_zero_vec;
use crate::cpwl::{CpwlFunction, Symmetrized};
use crate::error::{Error, Result};
use crate::multiset::Point;
use crate::numeric::{ascending_tuples, factorial, linf_dist, linf_norm, order_free_vec_sum, permutations};

/// Largest `n` for which [`janossy_pool_enumerated`] walks `S_n`.
pub const ENUMERATION_MAX_N: usize = 8;

#[derive(Debug, Clone)]
pub struct PoolingSpec {
    k: usize,
    n: usize,
    point_dim: usize,
    f: CpwlFunction,
}

impl PoolingSpec {
    pub fn new(f: CpwlFunction, k: usize, n: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::InvalidParameter(format!(
                "arity k = {k} must satisfy 1 <= k <= n = {n}"
            )));
        }
        if f.in_dim() % k != 0 {
            return Err(Error::InvalidParameter(format!(
                "f takes {} inputs, not a multiple of k = {k}",
                f.in_dim()
            )));
        }
        Ok(PoolingSpec {
            k,
            n,
            point_dim: f.in_dim() / k,
            f,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn point_dim(&self) -> usize {
        self.point_dim
    }

    pub fn f(&self) -> &CpwlFunction {
        &self.f
    }

    fn check_points(&self, xs: &[Point]) -> Result<()> {
        if xs.len() != self.n {
            return Err(Error::SizeMismatch(format!(
                "expected {} points, got {}",
                self.n,
                xs.len()
            )));
        }
        if let Some(p) = xs.iter().find(|p| p.dim() != self.point_dim) {
            return Err(Error::DimensionMismatch {
                expected: self.point_dim,
                found: p.dim(),
            });
        }
        Ok(())
    }
}

fn stack<T: Clone>(points: &[&[T]]) -> Vec<T> {
    points.iter().flat_map(|p| p.iter().cloned()).collect()
}

fn tuple_input<'a>(xs: &'a [Point], idx: &[usize]) -> Vec<f64> {
    stack(&idx.iter().map(|&i| xs[i].coords()).collect::<Vec<_>>())
}

/// `F(X)` summed over every ordered k-tuple of distinct positions.
pub fn janossy_pool(spec: &PoolingSpec, xs: &[Point]) -> Result<Vec<f64>> {
    spec.check_points(xs)?;
    let perms = permutations(spec.k);
    let mut terms = Vec::new();
    for tuple in ascending_tuples(spec.n, spec.k) {
        for p in &perms {
            let idx: Vec<usize> = p.iter().map(|&j| tuple[j]).collect();
            terms.push(spec.f.evaluate(&tuple_input(xs, &idx))?);
        }
    }
    Ok(order_free_vec_sum(&terms, spec.f.out_dim()))
}

/// `F(X)` by literal enumeration of `S_n`, divided by `(n−k)!`.
pub fn janossy_pool_enumerated(spec: &PoolingSpec, xs: &[Point]) -> Result<Vec<f64>> {
    spec.check_points(xs)?;
    if spec.n > ENUMERATION_MAX_N {
        return Err(Error::TooLarge {
            what: "n",
            value: spec.n,
            max: ENUMERATION_MAX_N,
        });
    }
    let terms = permutations(spec.n)
        .iter()
        .map(|p| spec.f.evaluate(&tuple_input(xs, &p[..spec.k])))
        .collect::<Result<Vec<_>>>()?;
    let norm = factorial(spec.n - spec.k) as f64;
    Ok(order_free_vec_sum(&terms, spec.f.out_dim())
        .into_iter()
        .map(|v| v / norm)
        .collect())
}

/// Exact `F(X)` for rational inputs (points given as coordinate rows).
pub fn janossy_pool_exact(spec: &PoolingSpec, xs: &[Vec<BigRational>]) -> Result<Vec<BigRational>> {
    if xs.len() != spec.n {
        return Err(Error::SizeMismatch(format!(
            "expected {} points, got {}",
            spec.n,
            xs.len()
        )));
    }
    let perms = permutations(spec.k);
    let mut acc = exact_zero_vec(spec.f.out_dim());
    for tuple in ascending_tuples(spec.n, spec.k) {
        for p in &perms {
            let input = stack(&p.iter().map(|&j| xs[tuple[j]].as_slice()).collect::<Vec<_>>());
            for (a, v) in acc.iter_mut().zip(spec.f.evaluate_exact(&input)?) {
                *a += v;
            }
        }
    }
    Ok(acc)
}

/// `f̂(x_1..x_k) = Σ_{π ∈ S_k} f(x_π(1), .., x_π(k))`.
pub fn symmetrize(f: &CpwlFunction, k: usize) -> Result<CpwlFunction> {
    Ok(CpwlFunction::Symmetrized(Symmetrized::new(f.clone(), k)?))
}

/// `Σ_{i_1 < .. < i_k} f̂(x_i1, .., x_ik)` for a permutation-invariant `f̂`.
pub fn janossy_pool_ascending(f_hat: &CpwlFunction, k: usize, xs: &[Point]) -> Result<Vec<f64>> {
    let n = xs.len();
    if k == 0 || k > n || f_hat.in_dim() % k != 0 {
        return Err(Error::InvalidParameter(format!(
            "arity {k} incompatible with {n} points and input dimension {}",
            f_hat.in_dim()
        )));
    }
    let d = f_hat.in_dim() / k;
    if let Some(p) = xs.iter().find(|p| p.dim() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: p.dim(),
        });
    }
    let terms = ascending_tuples(n, k)
        .map(|t| f_hat.evaluate(&tuple_input(xs, &t)))
        .collect::<Result<Vec<_>>>()?;
    Ok(order_free_vec_sum(&terms, f_hat.out_dim()))
}

#[derive(Debug, Clone, Serialize)]
pub struct InvarianceReport {
    pub trials: usize,
    /// Largest ℓ∞ deviation from the unshuffled value.
    pub max_deviation: f64,
    /// `max(1, ‖F(X)‖∞)`, the scale deviations are judged against.
    pub scale: f64,
}

impl InvarianceReport {
    pub fn passes(&self, rel_tol: f64) -> bool {
        self.max_deviation <= rel_tol * self.scale
    }
}

/// Re-evaluates `pool` on `trials` random shuffles of `xs`.
pub fn invariance_check_with<R: Rng>(
    pool: impl Fn(&[Point]) -> Result<Vec<f64>>,
    xs: &[Point],
    trials: usize,
    rng: &mut R,
) -> Result<InvarianceReport> {
    let base = pool(xs)?;
    let mut shuffled = xs.to_vec();
    let mut max_deviation: f64 = 0.0;
    for _ in 0..trials {
        shuffled.shuffle(rng);
        max_deviation = max_deviation.max(linf_dist(&base, &pool(&shuffled)?));
    }
    Ok(InvarianceReport {
        trials,
        max_deviation,
        scale: linf_norm(&base).max(1.0),
    })
}

pub fn invariance_check<R: Rng>(
    spec: &PoolingSpec,
    xs: &[Point],
    trials: usize,
    rng: &mut R,
) -> Result<InvarianceReport> {
    invariance_check_with(|p| janossy_pool(spec, p), xs, trials, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpwl::random::relu_net;
    use crate::cpwl::AffineMap;
    use crate::rng::seeded;

    fn points(v: &[f64]) -> Vec<Point> {
        v.iter().map(|&x| Point::scalar(x).unwrap()).collect()
    }

    fn linear(coeffs: &[f64]) -> CpwlFunction {
        crate::cpwl::ReluNet::new(vec![AffineMap::new(vec![coeffs.to_vec()], vec![0.0]).unwrap()])
            .unwrap()
            .into()
    }

    /// `f(x, y) = x·y` is not piecewise linear; this helper evaluates the
    /// pooling oracle for it directly.
    fn product_pool(xs: &[f64]) -> f64 {
        let n = xs.len();
        let mut total = 0.0;
        for p in permutations(n) {
            total += xs[p[0]] * xs[p[1]];
        }
        total / factorial(n - 2) as f64
    }

    #[test]
    fn deep_sets_reduces_to_sum() {
        let spec = PoolingSpec::new(linear(&[1.0]), 1, 3).unwrap();
        assert_eq!(janossy_pool(&spec, &points(&[1.0, 2.0, 3.0])).unwrap(), vec![6.0]);
        assert_eq!(janossy_pool_enumerated(&spec, &points(&[1.0, 2.0, 3.0])).unwrap(), vec![6.0]);
    }

    #[test]
    fn pairwise_product_oracle() {
        // Enumerating S_3 for f(x,y) = x·y gives 22.
        assert_eq!(product_pool(&[1.0, 2.0, 3.0]), 22.0);
    }

    #[test]
    fn k_equals_n_counts_both_orderings() {
        let spec = PoolingSpec::new(linear(&[1.0, 1.0]), 2, 2).unwrap();
        let (a, b) = (0.3, 1.7);
        let v = janossy_pool(&spec, &points(&[a, b])).unwrap()[0];
        assert!((v - 2.0 * (a + b)).abs() < 1e-12);
        let e = janossy_pool_enumerated(&spec, &points(&[a, b])).unwrap()[0];
        assert!((e - v).abs() < 1e-12);
    }

    #[test]
    fn symmetrize_examples() {
        let f = linear(&[1.0, 0.0]);
        let g = symmetrize(&f, 2).unwrap();
        assert_eq!(g.evaluate(&[0.25, 2.0]).unwrap(), vec![2.25]);

        let sym = linear(&[1.0, 1.0]);
        let g = symmetrize(&sym, 2).unwrap();
        assert_eq!(g.evaluate(&[0.25, 2.0]).unwrap(), vec![4.5]);
    }

    #[test]
    fn symmetrized_random_net_is_exactly_invariant() {
        let mut rng = seeded(11);
        let f: CpwlFunction = relu_net(&mut rng, 3, &[6, 6], 2).unwrap().into();
        let g = symmetrize(&f, 3).unwrap();
        let x = [0.2, -0.7, 0.9];
        let base = g.evaluate(&x).unwrap();
        for p in permutations(3) {
            let px: Vec<f64> = p.iter().map(|&i| x[i]).collect();
            assert_eq!(g.evaluate(&px).unwrap(), base);
        }
    }

    #[test]
    fn ascending_form_example() {
        let f_hat = linear(&[1.0, 1.0]);
        let v = janossy_pool_ascending(&f_hat, 2, &points(&[1.0, 2.0, 3.0])).unwrap();
        assert_eq!(v, vec![12.0]);
        let single = janossy_pool_ascending(&f_hat, 2, &points(&[1.0, 2.0])).unwrap();
        assert_eq!(single, f_hat.evaluate(&[1.0, 2.0]).unwrap());
    }

    #[test]
    fn arity_errors() {
        assert!(PoolingSpec::new(linear(&[1.0, 1.0]), 3, 2).is_err());
        assert!(PoolingSpec::new(linear(&[1.0, 1.0, 1.0]), 2, 4).is_err());
        let spec = PoolingSpec::new(linear(&[1.0, 1.0]), 2, 3).unwrap();
        assert!(janossy_pool(&spec, &points(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn fault_injected_pooling_is_detected() {
        let mut rng = seeded(5);
        let f: CpwlFunction = relu_net(&mut rng, 2, &[5], 1).unwrap().into();
        let spec = PoolingSpec::new(f, 2, 4).unwrap();
        let xs = points(&[0.1, 0.4, 0.45, 0.9]);
        // Forgets to symmetrize: only ascending orderings of each pair.
        let broken = |xs: &[Point]| -> Result<Vec<f64>> {
            janossy_pool_ascending(spec.f(), spec.k(), xs)
        };
        let report = invariance_check_with(broken, &xs, 50, &mut rng).unwrap();
        assert!(!report.passes(1e-9), "{report:?}");
        let good = invariance_check(&spec, &xs, 50, &mut rng).unwrap();
        assert_eq!(good.max_deviation, 0.0);
    }

    #[test]
    fn deep_sets_invariance_is_exact() {
        let mut rng = seeded(6);
        let f: CpwlFunction = relu_net(&mut rng, 1, &[7], 3).unwrap().into();
        let spec = PoolingSpec::new(f, 1, 9).unwrap();
        let xs: Vec<Point> = (0..9).map(|_| Point::scalar(rng.gen_range(-1.0..1.0)).unwrap()).collect();
        let report = invariance_check(&spec, &xs, 200, &mut rng).unwrap();
        assert_eq!(report.max_deviation, 0.0);
    }
}
