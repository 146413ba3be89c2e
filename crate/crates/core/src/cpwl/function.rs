use std::collections::BTreeSet;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::affine::{exact_zero_vec, AffineMap};
use super::partition::ExplicitPartition;
use super::region::{RegionId, RegionSet};
use super::relu::{l1_margin, linf_margin, ReluNet};
use super::polytope::MEMBERSHIP_TOL;
use crate::error::{Error, Result};
use crate::numeric::{factorial, order_free_vec_sum, permutations};

/// Maximum number of halvings when shrinking a radius until probes agree.
pub const MAX_HALVINGS: usize = 60;

/// Starting radius for probe-based ℓ1 ball searches.
pub const PROBE_START: f64 = 0.25;

/// Near-zero units expanded when listing boundary activation patterns.
const MAX_TIES: usize = 12;

/// A continuous piecewise-linear function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CpwlFunction {
    Relu(ReluNet),
    Partition(ExplicitPartition),
    Symmetrized(Symmetrized),
}

/// `f̂(x_1..x_k) = Σ_{π ∈ S_k} f(x_π(1), .., x_π(k))`, where each `x_i` is a
/// block of `block` coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Symmetrized {
    pub inner: Box<CpwlFunction>,
    pub arity: usize,
    pub block: usize,
}

impl Symmetrized {
    pub fn new(inner: CpwlFunction, arity: usize) -> Result<Self> {
        if arity == 0 || inner.in_dim() % arity != 0 {
            return Err(Error::InvalidParameter(format!(
                "input dimension {} is not a multiple of arity {arity}",
                inner.in_dim()
            )));
        }
        let block = inner.in_dim() / arity;
        Ok(Symmetrized {
            inner: Box::new(inner),
            arity,
            block,
        })
    }

    fn permuted_inputs(&self, x: &[f64]) -> Vec<Vec<f64>> {
        permutations(self.arity)
            .iter()
            .map(|p| permute_blocks(x, p, self.block))
            .collect()
    }
}

/// Block `i` of the result is block `perm[i]` of `x`.
pub fn permute_blocks<T: Clone>(x: &[T], perm: &[usize], block: usize) -> Vec<T> {
    perm.iter()
        .flat_map(|&j| x[j * block..(j + 1) * block].iter().cloned())
        .collect()
}

/// Result of a stability-radius query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stability {
    /// ℓ∞ radius around the query point on which the region id is constant.
    pub radius: f64,
    /// Set when the point sits on a region boundary (radius is then 0).
    pub on_boundary: bool,
}

impl Stability {
    fn boundary() -> Self {
        Stability {
            radius: 0.0,
            on_boundary: true,
        }
    }
}

impl From<ReluNet> for CpwlFunction {
    fn from(f: ReluNet) -> Self {
        CpwlFunction::Relu(f)
    }
}

impl From<ExplicitPartition> for CpwlFunction {
    fn from(f: ExplicitPartition) -> Self {
        CpwlFunction::Partition(f)
    }
}

impl CpwlFunction {
    pub fn in_dim(&self) -> usize {
        match self {
            CpwlFunction::Relu(f) => f.in_dim(),
            CpwlFunction::Partition(f) => f.dim(),
            CpwlFunction::Symmetrized(s) => s.inner.in_dim(),
        }
    }

    pub fn out_dim(&self) -> usize {
        match self {
            CpwlFunction::Relu(f) => f.out_dim(),
            CpwlFunction::Partition(f) => f.out_dim(),
            CpwlFunction::Symmetrized(s) => s.inner.out_dim(),
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.in_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.in_dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        match self {
            CpwlFunction::Relu(f) => f.evaluate(x),
            CpwlFunction::Partition(f) => f.evaluate(x),
            CpwlFunction::Symmetrized(s) => {
                let terms = s
                    .permuted_inputs(x)
                    .iter()
                    .map(|px| s.inner.evaluate(px))
                    .collect::<Result<Vec<_>>>()?;
                Ok(order_free_vec_sum(&terms, self.out_dim()))
            }
        }
    }

    pub fn evaluate_exact(&self, x: &[BigRational]) -> Result<Vec<BigRational>> {
        match self {
            CpwlFunction::Relu(f) => f.evaluate_exact(x),
            CpwlFunction::Partition(f) => f.evaluate_exact(x),
            CpwlFunction::Symmetrized(s) => {
                if x.len() != self.in_dim() {
                    return Err(Error::DimensionMismatch {
                        expected: self.in_dim(),
                        found: x.len(),
                    });
                }
                let mut acc = exact_zero_vec(self.out_dim());
                for p in permutations(s.arity) {
                    let y = s.inner.evaluate_exact(&permute_blocks(x, &p, s.block))?;
                    for (a, v) in acc.iter_mut().zip(y) {
                        *a += v;
                    }
                }
                Ok(acc)
            }
        }
    }

    /// Affine law of the region containing `x`. On a boundary the law of the
    /// lowest-index cell, or of the pattern with ties resolved as inactive,
    /// is returned.
    pub fn local_affine(&self, x: &[f64]) -> Result<(AffineMap, RegionId)> {
        self.check_input(x)?;
        match self {
            CpwlFunction::Relu(f) => {
                let (map, pattern, _) = f.linearize(x)?;
                Ok((map, RegionId::Pattern(pattern)))
            }
            CpwlFunction::Partition(f) => {
                let cell = f.cell_of(x)?;
                Ok((f.cells()[cell].map.clone(), RegionId::Cell(cell)))
            }
            CpwlFunction::Symmetrized(s) => {
                let mut total = AffineMap::zeros(self.out_dim(), self.in_dim());
                let mut ids = Vec::new();
                for p in permutations(s.arity) {
                    let (map, id) = s.inner.local_affine(&permute_blocks(x, &p, s.block))?;
                    // inner(P x): column block i of `map` acts on block p[i] of x
                    let mut lifted = AffineMap::zeros(self.out_dim(), self.in_dim());
                    for (r, row) in map.matrix().iter().enumerate() {
                        for (i, &src) in p.iter().enumerate() {
                            for c in 0..s.block {
                                lifted.matrix_mut()[r][src * s.block + c] = row[i * s.block + c];
                            }
                        }
                    }
                    lifted.bias_mut().copy_from_slice(map.bias());
                    total.add_assign(&lifted);
                    ids.push(id);
                }
                Ok((total, RegionId::Product(ids)))
            }
        }
    }

    pub fn region(&self, x: &[f64]) -> Result<RegionId> {
        self.check_input(x)?;
        match self {
            CpwlFunction::Relu(f) => Ok(RegionId::Pattern(f.pattern(x)?)),
            CpwlFunction::Partition(f) => Ok(RegionId::Cell(f.cell_of(x)?)),
            CpwlFunction::Symmetrized(s) => Ok(RegionId::Product(
                s.permuted_inputs(x)
                    .iter()
                    .map(|px| s.inner.region(px))
                    .collect::<Result<_>>()?,
            )),
        }
    }

    /// An ℓ∞ radius `r` such that every `y` with `‖y − x‖∞ ≤ r` lies in the
    /// region of `x`.
    ///
    /// Partitions use half the smallest ℓ1 gap to another cell divided by
    /// the input dimension. Networks use half the smallest unit margin
    /// `|z| / ‖∇z‖₁`, then re-check the pattern at the `2·dim` face centres
    /// of the ball, halving on disagreement.
    pub fn stability_radius(&self, x: &[f64]) -> Result<Stability> {
        self.check_input(x)?;
        match self {
            CpwlFunction::Partition(f) => {
                let cells = f.locate(x)?;
                if cells.len() > 1 || f.cells()[cells[0]].region.clearance(x) <= MEMBERSHIP_TOL {
                    return Ok(Stability::boundary());
                }
                Ok(Stability {
                    radius: f.half_gap(x)? / f.dim() as f64,
                    on_boundary: false,
                })
            }
            CpwlFunction::Relu(f) => {
                let Some(pattern) = f.strict_pattern(x)? else {
                    return Ok(Stability::boundary());
                };
                let (_, _, margins) = f.linearize(x)?;
                let mut r = 0.5 * linf_margin(&margins);
                if r.is_infinite() {
                    return Ok(Stability {
                        radius: r,
                        on_boundary: false,
                    });
                }
                for _ in 0..MAX_HALVINGS {
                    if probes_agree(f, x, r, &pattern)? {
                        return Ok(Stability {
                            radius: r,
                            on_boundary: false,
                        });
                    }
                    r *= 0.5;
                }
                Ok(Stability::boundary())
            }
            CpwlFunction::Symmetrized(s) => {
                let mut radius = f64::INFINITY;
                for px in s.permuted_inputs(x) {
                    let st = s.inner.stability_radius(&px)?;
                    if st.on_boundary {
                        return Ok(st);
                    }
                    radius = radius.min(st.radius);
                }
                Ok(Stability {
                    radius,
                    on_boundary: false,
                })
            }
        }
    }

    /// A global bound on the ℓ∞ → ℓ∞ Lipschitz constant.
    pub fn lipschitz_bound(&self) -> f64 {
        match self {
            CpwlFunction::Relu(f) => f.lipschitz_bound(),
            CpwlFunction::Partition(f) => f.lipschitz_bound(),
            CpwlFunction::Symmetrized(s) => factorial(s.arity) as f64 * s.inner.lipschitz_bound(),
        }
    }

    /// `f ∘ inner` for networks and partitions.
    pub fn precompose(&self, inner: &AffineMap) -> Result<CpwlFunction> {
        match self {
            CpwlFunction::Relu(f) => Ok(f.precompose(inner)?.into()),
            CpwlFunction::Partition(f) => Ok(f.precompose(inner)?.into()),
            CpwlFunction::Symmetrized(_) => Err(Error::InvalidParameter(
                "precompose the inner function before symmetrizing".into(),
            )),
        }
    }
}

/// Pattern check at `x ± r·e_j` for every axis `j`.
fn probes_agree(f: &ReluNet, x: &[f64], r: f64, pattern: &[bool]) -> Result<bool> {
    let mut probe = x.to_vec();
    for j in 0..x.len() {
        for sign in [-1.0, 1.0] {
            probe[j] = x[j] + sign * r;
            if f.strict_pattern(&probe)?.as_deref() != Some(pattern) {
                return Ok(false);
            }
        }
        probe[j] = x[j];
    }
    Ok(true)
}

/// A finite closed covering of (part of) `R^dim` by linear regions, with the
/// geometric queries the nested-point construction needs.
pub trait Covering {
    fn dim(&self) -> usize;

    /// All regions whose closure contains `v`.
    fn locate_regions(&self, v: &[f64]) -> Result<RegionSet>;

    /// The single region holding `v` in its interior, with the ℓ1 distance
    /// from `v` to that region's boundary.
    fn interior_region(&self, v: &[f64]) -> Result<Option<(RegionId, f64)>>;

    /// A radius `ε ≤ cap` such that the open ℓ1 ball of radius `ε` around
    /// `v` meets only regions that contain `v`.
    fn inclusion_radius(&self, v: &[f64], cap: f64) -> Result<f64>;
}

impl Covering for ExplicitPartition {
    fn dim(&self) -> usize {
        ExplicitPartition::dim(self)
    }

    fn locate_regions(&self, v: &[f64]) -> Result<RegionSet> {
        Ok(RegionSet::Finite(
            self.locate(v)?.into_iter().map(RegionId::Cell).collect(),
        ))
    }

    fn interior_region(&self, v: &[f64]) -> Result<Option<(RegionId, f64)>> {
        Ok(self
            .interior_cell(v)?
            .map(|(c, clearance)| (RegionId::Cell(c), clearance)))
    }

    fn inclusion_radius(&self, v: &[f64], cap: f64) -> Result<f64> {
        Ok(self.half_gap(v)?.min(cap))
    }
}

impl Covering for ReluNet {
    fn dim(&self) -> usize {
        self.in_dim()
    }

    fn locate_regions(&self, v: &[f64]) -> Result<RegionSet> {
        Ok(RegionSet::Finite(
            self.boundary_patterns(v, MAX_TIES)?
                .into_iter()
                .map(RegionId::Pattern)
                .collect::<BTreeSet<_>>(),
        ))
    }

    fn interior_region(&self, v: &[f64]) -> Result<Option<(RegionId, f64)>> {
        let (_, pattern, margins) = self.linearize(v)?;
        if margins
            .iter()
            .any(|m| m.preactivation.abs() <= MEMBERSHIP_TOL)
        {
            return Ok(None);
        }
        Ok(Some((RegionId::Pattern(pattern), l1_margin(&margins))))
    }

    /// Shrinks from `min(0.25, cap)` until the `2·dim` vertices of the ℓ1
    /// ball share the strict pattern of `v`; activation regions are convex,
    /// so the whole ball then lies in that region.
    fn inclusion_radius(&self, v: &[f64], cap: f64) -> Result<f64> {
        let pattern = self.strict_pattern(v)?.ok_or_else(|| {
            Error::Degenerate(format!("{v:?} lies on an activation boundary"))
        })?;
        let mut eps = PROBE_START.min(cap);
        for _ in 0..MAX_HALVINGS {
            if probes_agree(self, v, eps, &pattern)? {
                return Ok(eps);
            }
            eps *= 0.5;
        }
        Err(Error::Degenerate(format!(
            "no stable ℓ1 ball found around {v:?}"
        )))
    }
}

impl Covering for CpwlFunction {
    fn dim(&self) -> usize {
        self.in_dim()
    }

    fn locate_regions(&self, v: &[f64]) -> Result<RegionSet> {
        self.check_input(v)?;
        match self {
            CpwlFunction::Relu(f) => f.locate_regions(v),
            CpwlFunction::Partition(f) => f.locate_regions(v),
            CpwlFunction::Symmetrized(s) => Ok(RegionSet::Product(
                s.permuted_inputs(v)
                    .iter()
                    .map(|pv| s.inner.locate_regions(pv))
                    .collect::<Result<_>>()?,
            )),
        }
    }

    fn interior_region(&self, v: &[f64]) -> Result<Option<(RegionId, f64)>> {
        self.check_input(v)?;
        match self {
            CpwlFunction::Relu(f) => f.interior_region(v),
            CpwlFunction::Partition(f) => f.interior_region(v),
            CpwlFunction::Symmetrized(s) => {
                let mut ids = Vec::new();
                let mut clearance = f64::INFINITY;
                for pv in s.permuted_inputs(v) {
                    let Some((id, c)) = s.inner.interior_region(&pv)? else {
                        return Ok(None);
                    };
                    ids.push(id);
                    clearance = clearance.min(c);
                }
                Ok(Some((RegionId::Product(ids), clearance)))
            }
        }
    }

    fn inclusion_radius(&self, v: &[f64], cap: f64) -> Result<f64> {
        self.check_input(v)?;
        match self {
            CpwlFunction::Relu(f) => f.inclusion_radius(v, cap),
            CpwlFunction::Partition(f) => f.inclusion_radius(v, cap),
            CpwlFunction::Symmetrized(s) => {
                let mut eps = cap;
                for pv in s.permuted_inputs(v) {
                    eps = eps.min(s.inner.inclusion_radius(&pv, cap)?);
                }
                Ok(eps)
            }
        }
    }
}
