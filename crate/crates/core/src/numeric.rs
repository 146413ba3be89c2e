//! Small numeric helpers shared across modules: compensated summation,
//! binomials, and index enumeration.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Sums `values` after sorting them, so the result does not depend on the
/// order in which the values were produced.
pub fn order_free_sum(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    let mut acc = CompensatedSum::new();
    for &v in values.iter() {
        acc.add(v);
    }
    acc.value()
}

/// Componentwise [`order_free_sum`] of a list of equal-length vectors.
pub fn order_free_vec_sum(terms: &[Vec<f64>], len: usize) -> Vec<f64> {
    let mut column = Vec::with_capacity(terms.len());
    (0..len)
        .map(|j| {
            column.clear();
            column.extend(terms.iter().map(|t| t[j]));
            order_free_sum(&mut column)
        })
        .collect()
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

pub fn binomial_big(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::from(0);
    }
    let k = k.min(n - k);
    let mut acc = BigInt::from(1);
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

pub fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..n).collect();
    loop {
        out.push(current.clone());
        // next lexicographic permutation
        let Some(i) = (1..n).rev().find(|&i| current[i - 1] < current[i]) else {
            break;
        };
        let j = (i..n).rev().find(|&j| current[j] > current[i - 1]).unwrap();
        current.swap(i - 1, j);
        current[i..].reverse();
    }
    out
}

/// Ascending index tuples `i_1 < ... < i_k` drawn from `0..n`, in
/// lexicographic order.
pub fn ascending_tuples(n: usize, k: usize) -> AscendingTuples {
    AscendingTuples {
        n,
        current: if k <= n { Some((0..k).collect()) } else { None },
    }
}

pub struct AscendingTuples {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Iterator for AscendingTuples {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let k = out.len();
        let mut next = out.clone();
        let mut i = k;
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            if next[i] < self.n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                break;
            }
        }
        Some(out)
    }
}

pub fn linf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn linf_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn l1_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Exact rational value of a finite float.
pub fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

pub fn rationals(xs: &[f64]) -> Vec<BigRational> {
    xs.iter().map(|&x| rational(x)).collect()
}

/// Nearest float to a rational (ties and tiny errors are acceptable; only
/// used for reporting and float-mode fields).
pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn rational_linf(v: &[BigRational]) -> BigRational {
    v.iter()
        .map(|x| x.abs())
        .fold(BigRational::zero(), |m, x| if x > m { x } else { m })
}

/// `"num/den"` text form of a rational.
pub fn rational_to_string(x: &BigRational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

pub fn parse_rational(s: &str) -> Option<BigRational> {
    let (n, d) = s.split_once('/').unwrap_or((s, "1"));
    let n: BigInt = n.trim().parse().ok()?;
    let d: BigInt = d.trim().parse().ok()?;
    if d.is_zero() {
        return None;
    }
    Some(BigRational::new(n, d))
}

/// A rational that serializes as its `"num/den"` string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rational(pub BigRational);

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&rational_to_string(&self.0))
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s)
            .map(Rational)
            .ok_or_else(|| serde::de::Error::custom(format!("invalid rational {s:?}")))
    }
}

pub fn wrap_rationals(v: Vec<BigRational>) -> Vec<Rational> {
    v.into_iter().map(Rational).collect()
}

pub fn unwrap_rationals(v: &[Rational]) -> Vec<BigRational> {
    v.iter().map(|r| r.0.clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutations_are_complete_and_distinct() {
        let p = permutations(4);
        assert_eq!(p.len(), 24);
        let mut sorted = p.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 24);
        assert_eq!(p[0], vec![0, 1, 2, 3]);
        assert_eq!(permutations(0), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn ascending_tuples_count_matches_binomial() {
        for n in 0..9 {
            for k in 0..=n {
                let tuples: Vec<_> = ascending_tuples(n, k).collect();
                assert_eq!(tuples.len() as u128, binomial(n, k), "n={n} k={k}");
                assert!(tuples.iter().all(|t| t.windows(2).all(|w| w[0] < w[1])));
            }
        }
        assert_eq!(ascending_tuples(2, 3).count(), 0);
    }

    #[test]
    fn binomials_agree() {
        for n in 0..40 {
            for k in 0..=n {
                assert_eq!(BigInt::from(binomial(n, k)), binomial_big(n, k));
            }
        }
        assert_eq!(binomial(5, 2), 10);
    }

    #[test]
    fn rational_text_round_trip() {
        let x = rational(0.1) / rational(3.0);
        assert_eq!(parse_rational(&rational_to_string(&x)), Some(x));
        assert_eq!(parse_rational("4"), Some(rational(4.0)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(to_f64(&rational(0.375)), 0.375);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut acc = CompensatedSum::new();
        acc.add(1e16);
        acc.add(1.0);
        acc.add(-1e16);
        assert_eq!(acc.value(), 1.0);
    }

    #[test]
    fn order_free_sum_is_order_independent() {
        let a = [0.1, 1e10, -3.3, 7.25e-9, 2.0];
        let mut b = a;
        b.reverse();
        assert_eq!(order_free_sum(&mut a.clone()), order_free_sum(&mut b));
    }
}
