//! Collision certificates: two distinct multisets with equal pooled value.
//!
//! With `f̂` the symmetrization of `f`, a nested point `w` puts every
//! ascending k-subvector in one region where `f̂` is affine with linear part
//! `L`. Moving `w` by a `Δ` that stays inside that region changes the pooled
//! value by `L·Σ_{i_1<..<i_k}(Δ_i1, .., Δ_ik)`, which vanishes for `Δ` in the
//! null space of the tuple system.
//!
//! Points in `R^d` are handled through a segment `g(t) = (1−t)α + tβ`: the
//! search runs on `f ∘ (g × .. × g)` over scalars and the result is mapped
//! back through `g`.

use num_rational::BigRational;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::nested::{check_nested, nested_point, validate_chain, NestedPointCert};
use super::system::{collision_delta_exact, tuple_residual, tuple_sums_exact};
use crate::cpwl::{AffineMap, Covering, CpwlFunction};
use crate::error::{Error, Result};
use crate::janossy::{janossy_pool, janossy_pool_enumerated, janossy_pool_exact, symmetrize, PoolingSpec};
use crate::multiset::{Multiset, Point};
use crate::numeric::{
    ascending_tuples, linf_dist, linf_norm, rational, rationals, to_f64, unwrap_rationals,
    wrap_rationals, Rational,
};
use crate::rng::substream;

/// Seeds tried before giving up.
pub const MAX_ATTEMPTS: usize = 16;
/// Pooled outputs must agree to this fraction of `max(1, ‖F(w)‖∞)`.
pub const COLLISION_REL_TOL: f64 = 1e-9;
/// Bound on the tuple-system residual of a float `Δ`.
pub const TUPLE_TOL: f64 = 1e-12;
/// Largest `n` for which verification enumerates `S_n`.
pub const VERIFY_ENUMERATION_MAX_N: usize = 7;

#[derive(Debug, Clone)]
pub struct CollisionOptions {
    /// First seed for the diagonal point (0.25 when unset).
    pub x0: Option<f64>,
    /// Drives the seeds of later attempts.
    pub seed: u64,
    pub max_attempts: usize,
    /// Smallest acceptable `‖Δ‖∞`.
    pub min_perturbation: f64,
    /// Solve and evaluate in exact rational arithmetic.
    pub rational: bool,
    /// Segment for inputs in `R^d`, `d > 1`.
    pub lift: Option<Segment>,
}

impl Default for CollisionOptions {
    fn default() -> Self {
        CollisionOptions {
            x0: None,
            seed: crate::rng::DEFAULT_SEED,
            max_attempts: MAX_ATTEMPTS,
            min_perturbation: 1e-6,
            rational: false,
            lift: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub alpha: Point,
    pub beta: Point,
}

impl Segment {
    pub fn new(alpha: Point, beta: Point) -> Result<Self> {
        if alpha.dim() != beta.dim() {
            return Err(Error::DimensionMismatch {
                expected: alpha.dim(),
                found: beta.dim(),
            });
        }
        if alpha == beta {
            return Err(Error::InvalidParameter("segment endpoints coincide".into()));
        }
        Ok(Segment { alpha, beta })
    }

    pub fn dim(&self) -> usize {
        self.alpha.dim()
    }

    /// `g(t) = (1−t)α + tβ`.
    pub fn point(&self, t: f64) -> Point {
        Point::new(
            self.alpha
                .coords()
                .iter()
                .zip(self.beta.coords())
                .map(|(a, b)| a + t * (b - a))
                .collect(),
        )
        .expect("finite segment point")
    }

    /// `(t_1..t_k) ↦ (g(t_1), .., g(t_k))` as an affine map `R^k → R^{kd}`.
    pub fn blocks(&self, k: usize) -> AffineMap {
        let d = self.dim();
        let mut m = AffineMap::zeros(k * d, k);
        for i in 0..k {
            for c in 0..d {
                m.matrix_mut()[i * d + c][i] = self.beta.coords()[c] - self.alpha.coords()[c];
                m.bias_mut()[i * d + c] = self.alpha.coords()[c];
            }
        }
        m
    }

    pub fn lift(&self, ts: &[f64]) -> Result<Multiset> {
        Multiset::new(ts.iter().map(|&t| self.point(t)).collect())
    }
}

/// `f ∘ (g × .. × g)` for `f` on `R^{kd}`.
pub fn line_restriction(f: &CpwlFunction, k: usize, segment: &Segment) -> Result<CpwlFunction> {
    if f.in_dim() != k * segment.dim() {
        return Err(Error::DimensionMismatch {
            expected: k * segment.dim(),
            found: f.in_dim(),
        });
    }
    f.precompose(&segment.blocks(k))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactCollision {
    pub w: Vec<Rational>,
    pub delta: Vec<Rational>,
    pub f_w: Vec<Rational>,
    pub f_wd: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionCert {
    pub k: usize,
    pub n: usize,
    pub nested: NestedPointCert,
    pub delta: Vec<f64>,
    pub radius: f64,
    pub f_w: Vec<f64>,
    pub f_wd: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<ExactCollision>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lift: Option<Segment>,
}

impl CollisionCert {
    pub fn w(&self) -> &[f64] {
        &self.nested.w
    }

    /// `w + Δ` (exact sum rounded once in rational mode).
    pub fn perturbed(&self) -> Vec<f64> {
        match &self.exact {
            Some(e) => e
                .w
                .iter()
                .zip(&e.delta)
                .map(|(a, b)| to_f64(&(&a.0 + &b.0)))
                .collect(),
            None => self.w().iter().zip(&self.delta).map(|(a, b)| a + b).collect(),
        }
    }

    /// The two colliding multisets, in `R^d` when the cert carries a lift.
    pub fn multisets(&self) -> Result<(Multiset, Multiset)> {
        match &self.lift {
            Some(s) => Ok((s.lift(self.w())?, s.lift(&self.perturbed())?)),
            None => Ok((
                Multiset::from_scalars(self.w())?,
                Multiset::from_scalars(&self.perturbed())?,
            )),
        }
    }
}

/// Maps a 1-D cert to multisets in `R^d` through `g(t) = (1−t)α + tβ`.
pub fn lift_collision(cert: &CollisionCert, alpha: Point, beta: Point) -> Result<(Multiset, Multiset)> {
    let s = Segment::new(alpha, beta)?;
    Ok((s.lift(cert.w())?, s.lift(&cert.perturbed())?))
}

fn scalar_rows<T: Clone>(v: &[T]) -> Vec<Vec<T>> {
    v.iter().map(|x| vec![x.clone()]).collect()
}

fn scalar_points(v: &[f64]) -> Result<Vec<Point>> {
    v.iter().map(|&x| Point::scalar(x)).collect()
}

/// Resolves the scalar-input function the search runs on.
fn base_function(f: &CpwlFunction, k: usize, lift: Option<&Segment>) -> Result<CpwlFunction> {
    match lift {
        Some(s) => line_restriction(f, k, s),
        None if f.in_dim() == k => Ok(f.clone()),
        None => Err(Error::InvalidParameter(format!(
            "f takes {} inputs; points in R^{} need a lift segment",
            f.in_dim(),
            f.in_dim() / k.max(1)
        ))),
    }
}

pub fn find_collision(f: &CpwlFunction, k: usize, n: usize, opts: &CollisionOptions) -> Result<CollisionCert> {
    let base = base_function(f, k, opts.lift.as_ref())?;
    let spec = PoolingSpec::new(base.clone(), k, n)?;
    if n <= k {
        return Err(Error::InvalidParameter(format!("need n > k, got n = {n}, k = {k}")));
    }
    let f_hat = symmetrize(&base, k)?;
    let mut last = None;
    for attempt in 0..opts.max_attempts.max(1) {
        let x0 = if attempt == 0 {
            opts.x0.unwrap_or(0.25)
        } else {
            substream(opts.seed, attempt as u64).gen_range(0.05..0.95)
        };
        match attempt_collision(&spec, &f_hat, x0, opts) {
            Ok(mut cert) => {
                cert.lift = opts.lift.clone();
                return Ok(cert);
            }
            Err(e @ (Error::Degenerate(_) | Error::OutsideDomain(_) | Error::Lp(_))) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(Error::Degenerate(format!(
        "no certificate after {} seeds; last failure: {}",
        opts.max_attempts.max(1),
        last.map(|e| e.to_string()).unwrap_or_default()
    )))
}

/// Half the smallest stability radius over the ascending subvectors, capped
/// so that `w ± radius/2` keeps its order and stays in `(0,1)`.
fn perturbation_radius(f_hat: &CpwlFunction, w: &[f64], k: usize) -> Result<f64> {
    let mut stab = f64::INFINITY;
    for t in ascending_tuples(w.len(), k) {
        let sub: Vec<f64> = t.iter().map(|&i| w[i]).collect();
        let s = f_hat.stability_radius(&sub)?;
        if s.on_boundary {
            return Err(Error::Degenerate(format!("subvector {sub:?} is on a boundary")));
        }
        stab = stab.min(s.radius);
    }
    let gap = w.windows(2).map(|p| p[0] - p[1]).fold(f64::INFINITY, f64::min);
    let edge = w[w.len() - 1].min(1.0 - w[0]);
    Ok((stab / 2.0).min(gap).min(edge))
}

fn attempt_collision(
    spec: &PoolingSpec,
    f_hat: &CpwlFunction,
    x0: f64,
    opts: &CollisionOptions,
) -> Result<CollisionCert> {
    let (k, n) = (spec.k(), spec.n());
    let nested = nested_point(f_hat, n, Some(x0))?;
    let radius = perturbation_radius(f_hat, &nested.w, k)?;
    if !(radius / 2.0 >= opts.min_perturbation) {
        return Err(Error::Degenerate(format!(
            "perturbation radius {radius:e} below the minimum"
        )));
    }

    let delta_exact = collision_delta_exact(n, k, &rational(radius))?;
    let delta: Vec<f64> = delta_exact.iter().map(to_f64).collect();

    let (f_w, f_wd, exact, wd) = if opts.rational {
        let w = rationals(&nested.w);
        let wd: Vec<BigRational> = w.iter().zip(&delta_exact).map(|(a, b)| a + b).collect();
        let f_w = janossy_pool_exact(spec, &scalar_rows(&w))?;
        let f_wd = janossy_pool_exact(spec, &scalar_rows(&wd))?;
        if f_w != f_wd {
            return Err(Error::Degenerate("exact pooled values differ".into()));
        }
        let wd_f: Vec<f64> = wd.iter().map(to_f64).collect();
        (
            f_w.iter().map(to_f64).collect(),
            f_wd.iter().map(to_f64).collect(),
            Some(ExactCollision {
                w: wrap_rationals(w),
                delta: wrap_rationals(delta_exact),
                f_w: wrap_rationals(f_w),
                f_wd: wrap_rationals(f_wd),
            }),
            wd_f,
        )
    } else {
        let wd: Vec<f64> = nested.w.iter().zip(&delta).map(|(a, b)| a + b).collect();
        let f_w = janossy_pool(spec, &scalar_points(&nested.w)?)?;
        let f_wd = janossy_pool(spec, &scalar_points(&wd)?)?;
        if linf_dist(&f_w, &f_wd) > COLLISION_REL_TOL * linf_norm(&f_w).max(1.0) {
            return Err(Error::Degenerate("pooled values differ beyond tolerance".into()));
        }
        (f_w, f_wd, None, wd)
    };

    let moved = check_nested(&wd, k, f_hat)?;
    if !moved.holds || moved.common.as_ref() != Some(&nested.cell) {
        return Err(Error::Degenerate("w + Δ left the region of w".into()));
    }
    Ok(CollisionCert {
        k,
        n,
        nested,
        delta,
        radius,
        f_w,
        f_wd,
        exact,
        lift: None,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CollisionReport {
    /// `"enumeration"` (all of `S_n`) or `"ordered_tuples"`.
    pub pooling: &'static str,
    pub f_w: Vec<f64>,
    pub f_wd: Vec<f64>,
    pub collision_gap: f64,
    pub tolerance: f64,
    pub tuple_residual: f64,
    /// ℓ∞ distance between the sorted scalar multisets.
    pub multiset_gap: f64,
    pub exact_collision: Option<bool>,
    pub exact_tuple_residual_zero: Option<bool>,
    pub failures: Vec<String>,
}

impl CollisionReport {
    pub fn passes(&self) -> bool {
        self.failures.is_empty()
    }
}

fn pool_checked(spec: &PoolingSpec, xs: &[Point]) -> Result<(Vec<f64>, &'static str)> {
    if spec.n() <= VERIFY_ENUMERATION_MAX_N {
        Ok((janossy_pool_enumerated(spec, xs)?, "enumeration"))
    } else {
        Ok((janossy_pool(spec, xs)?, "ordered_tuples"))
    }
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Re-derives everything a cert claims from `f` alone.
pub fn verify_collision(f: &CpwlFunction, k: usize, cert: &CollisionCert) -> Result<CollisionReport> {
    let mut failures = Vec::new();
    let n = cert.w().len();
    if cert.k != k || cert.n != n || cert.delta.len() != n {
        return Err(Error::SizeMismatch(format!(
            "cert claims k = {}, n = {} with {} entries in w and {} in delta",
            cert.k,
            cert.n,
            n,
            cert.delta.len()
        )));
    }
    let base = base_function(f, k, cert.lift.as_ref())?;
    let spec = PoolingSpec::new(base.clone(), k, n)?;
    let f_hat = symmetrize(&base, k)?;
    let w = cert.w().to_vec();
    let wd = cert.perturbed();

    let (f_w, pooling) = pool_checked(&spec, &scalar_points(&w)?)?;
    let (f_wd, _) = pool_checked(&spec, &scalar_points(&wd)?)?;
    let scale = linf_norm(&f_w).max(1.0);
    let tolerance = COLLISION_REL_TOL * scale;
    let collision_gap = linf_dist(&f_w, &f_wd);
    if collision_gap > tolerance {
        failures.push(format!("pooled values differ by {collision_gap:e}"));
    }
    if linf_dist(&f_w, &cert.f_w) > tolerance || linf_dist(&f_wd, &cert.f_wd) > tolerance {
        failures.push("recorded pooled values do not match recomputation".into());
    }

    if cert.delta.iter().all(|&d| d == 0.0) {
        failures.push("delta is zero".into());
    }
    let tuple_residual = tuple_residual(&cert.delta, k)?;
    if tuple_residual > TUPLE_TOL {
        failures.push(format!("tuple-system residual {tuple_residual:e}"));
    }
    let multiset_gap = linf_dist(&sorted(&w), &sorted(&wd));
    if !(multiset_gap > 0.0) {
        failures.push("w and w + delta are the same multiset".into());
    }

    let (mut exact_collision, mut exact_tuple_residual_zero) = (None, None);
    if let Some(e) = &cert.exact {
        let ew = unwrap_rationals(&e.w);
        let ed = unwrap_rationals(&e.delta);
        if ew != rationals(&w) {
            failures.push("exact w does not match w".into());
        }
        let ewd: Vec<BigRational> = ew.iter().zip(&ed).map(|(a, b)| a + b).collect();
        let a = janossy_pool_exact(&spec, &scalar_rows(&ew))?;
        let b = janossy_pool_exact(&spec, &scalar_rows(&ewd))?;
        let same = a == b && a == unwrap_rationals(&e.f_w) && b == unwrap_rationals(&e.f_wd);
        exact_collision = Some(same);
        if !same {
            failures.push("exact pooled values differ".into());
        }
        let zero = tuple_sums_exact(&ed, k)?.iter().all(num_traits::Zero::is_zero);
        exact_tuple_residual_zero = Some(zero);
        if !zero {
            failures.push("exact tuple-system residual is nonzero".into());
        }
    }

    let chain = validate_chain(&cert.nested, &f_hat)?;
    failures.extend(chain.failures.iter().map(|m| format!("nested point: {m}")));
    for (label, v) in [("w", &w), ("w + delta", &wd)] {
        let check = check_nested(v, k, &f_hat)?;
        if !check.holds {
            failures.push(format!("{label} is not nested"));
        } else if check.common.as_ref() != Some(&cert.nested.cell) {
            failures.push(format!("{label} is nested in a different region"));
        }
    }
    if f_hat.locate_regions(cert.nested.v_chain.last().expect("chain")).map(|r| r.only())?
        != Some(cert.nested.cell.clone())
    {
        failures.push("recorded region does not hold the end of the chain".into());
    }

    if let Some(s) = &cert.lift {
        let lifted = PoolingSpec::new(f.clone(), k, n)?;
        let (a, b) = cert.multisets()?;
        if a == b {
            failures.push("lifted multisets coincide".into());
        }
        let (la, _) = pool_checked(&lifted, a.elements())?;
        let (lb, _) = pool_checked(&lifted, b.elements())?;
        if linf_dist(&la, &lb) > COLLISION_REL_TOL * linf_norm(&la).max(1.0) {
            failures.push(format!(
                "pooling on the segment {:?} -> {:?} does not collide",
                s.alpha, s.beta
            ));
        }
    }

    Ok(CollisionReport {
        pooling,
        f_w,
        f_wd,
        collision_gap,
        tolerance,
        tuple_residual,
        multiset_gap,
        exact_collision,
        exact_tuple_residual_zero,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::wasserstein;
    use crate::cpwl::random::relu_net;
    use crate::cpwl::{ExplicitPartition, RegionId};
    use crate::rng::seeded;

    /// `a·x + b·y + c·|x − ½| + e·|y − ½| + g`, continuous across the squares.
    fn kinked_squares<R: Rng>(rng: &mut R) -> CpwlFunction {
        let [a, b, c, e, g]: [f64; 5] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
        let law = |sx: f64, sy: f64| {
            AffineMap::new(
                vec![vec![a + sx * c, b + sy * e]],
                vec![g - sx * c / 2.0 - sy * e / 2.0],
            )
            .unwrap()
        };
        ExplicitPartition::four_squares([law(-1.0, -1.0), law(-1.0, 1.0), law(1.0, -1.0), law(1.0, 1.0)])
            .unwrap()
            .into()
    }

    fn affine_scalar() -> CpwlFunction {
        crate::cpwl::ReluNet::new(vec![AffineMap::new(vec![vec![3.0]], vec![-1.0]).unwrap()])
            .unwrap()
            .into()
    }

    #[test]
    fn affine_pair_collision() {
        let f = affine_scalar();
        let cert = find_collision(&f, 1, 2, &CollisionOptions::default()).unwrap();
        assert_eq!(cert.delta[0], -cert.delta[1]);
        assert!(cert.delta[0] > 0.0);
        let report = verify_collision(&f, 1, &cert).unwrap();
        assert!(report.passes(), "{report:?}");
    }

    #[test]
    fn four_square_collision() {
        let mut rng = seeded(3);
        for _ in 0..5 {
            let f = kinked_squares(&mut rng);
            let cert = find_collision(&f, 2, 3, &CollisionOptions::default()).unwrap();
            let d = &cert.delta;
            assert!((d[1] + 2.0 * d[0]).abs() < 1e-15 && d[0] == d[2], "{d:?}");
            let report = verify_collision(&f, 2, &cert).unwrap();
            assert!(report.passes(), "{report:?}");
            assert_eq!(report.pooling, "enumeration");
        }
    }

    #[test]
    fn rational_mode_is_exact() {
        let mut rng = seeded(4);
        let f = kinked_squares(&mut rng);
        let opts = CollisionOptions {
            rational: true,
            ..Default::default()
        };
        for n in 3..=5 {
            let cert = find_collision(&f, 2, n, &opts).unwrap();
            let report = verify_collision(&f, 2, &cert).unwrap();
            assert_eq!(report.exact_collision, Some(true));
            assert_eq!(report.exact_tuple_residual_zero, Some(true));
            assert!(report.passes(), "{report:?}");
        }
    }

    #[test]
    fn relu_collisions_verify() {
        let mut rng = seeded(9);
        for k in 1..=3 {
            for n in k + 1..=k + 2 {
                let f: CpwlFunction = relu_net(&mut rng, k, &[6, 4], 2).unwrap().into();
                let cert = find_collision(&f, k, n, &CollisionOptions::default()).unwrap();
                let report = verify_collision(&f, k, &cert).unwrap();
                assert!(report.passes(), "k={k} n={n}: {report:?}");
                assert!(report.multiset_gap >= 1e-6);
            }
        }
    }

    #[test]
    fn tampered_certs_fail() {
        let mut rng = seeded(5);
        let f = kinked_squares(&mut rng);
        let cert = find_collision(&f, 2, 4, &CollisionOptions::default()).unwrap();

        let mut zeroed = cert.clone();
        zeroed.delta.iter_mut().for_each(|d| *d = 0.0);
        let report = verify_collision(&f, 2, &zeroed).unwrap();
        assert!(report.failures.iter().any(|m| m.contains("same multiset")));

        let mut shifted = cert.clone();
        shifted.nested.w = shifted.w().iter().map(|w| w + 0.3).collect();
        assert!(!verify_collision(&f, 2, &shifted).unwrap().passes());

        let mut region = cert;
        region.nested.cell = RegionId::Cell(99);
        assert!(!verify_collision(&f, 2, &region).unwrap().passes());
    }

    #[test]
    fn lifted_collision_on_axis() {
        let mut rng = seeded(6);
        let f: CpwlFunction = relu_net(&mut rng, 6, &[8], 2).unwrap().into();
        let alpha = Point::new(vec![0.0, 0.0, 0.0]).unwrap();
        let beta = Point::new(vec![1.0, 0.0, 0.0]).unwrap();
        let opts = CollisionOptions {
            lift: Some(Segment::new(alpha.clone(), beta.clone()).unwrap()),
            ..Default::default()
        };
        let cert = find_collision(&f, 2, 3, &opts).unwrap();
        let report = verify_collision(&f, 2, &cert).unwrap();
        assert!(report.passes(), "{report:?}");

        let (a, b) = lift_collision(&cert, alpha, beta).unwrap();
        assert_eq!((a.clone(), b.clone()), cert.multisets().unwrap());
        assert!(a.iter().chain(b.iter()).all(|p| p.coords()[1] == 0.0 && p.coords()[2] == 0.0));
        let spec = PoolingSpec::new(f, 2, 3).unwrap();
        let fa = janossy_pool_enumerated(&spec, a.elements()).unwrap();
        let fb = janossy_pool_enumerated(&spec, b.elements()).unwrap();
        assert!(linf_dist(&fa, &fb) <= 1e-9 * linf_norm(&fa).max(1.0));
        assert!(wasserstein(&a, &b).unwrap() > 0.0);
    }

    #[test]
    fn lift_needs_distinct_endpoints() {
        let p = Point::new(vec![0.5, 0.5]).unwrap();
        assert!(Segment::new(p.clone(), p.clone()).is_err());
        let f = affine_scalar();
        let cert = find_collision(&f, 1, 2, &CollisionOptions::default()).unwrap();
        assert!(lift_collision(&cert, p.clone(), p).is_err());
    }

    #[test]
    fn cert_round_trips_through_json() {
        let mut rng = seeded(8);
        let f = kinked_squares(&mut rng);
        let opts = CollisionOptions {
            rational: true,
            ..Default::default()
        };
        let cert = find_collision(&f, 2, 3, &opts).unwrap();
        let text = serde_json::to_string(&cert).unwrap();
        let back: CollisionCert = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cert);
    }
}
