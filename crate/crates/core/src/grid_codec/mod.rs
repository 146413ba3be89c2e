//! Injective 1-ary pooling for separated multisets.
//!
//! `R^d` is tiled by closed cubes of side `s = R/2`. Each cube `Q` owns a
//! block `(ind, coords)` of the feature map: `ind` is 1 on `Q` and decays
//! linearly to 0 over a margin `μ`, and `coords` is the offset from the
//! cube centre, squeezed to 0 across the margin. Summing the features over a
//! multiset whose points are at least `s + 2μ` apart leaves `ind = 1`
//! exactly in the cubes that hold a point, and those blocks carry the offset
//! of that point, so the multiset can be read back.

mod sample;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::assignment::wasserstein;
use crate::error::{Error, Result};
use crate::multiset::{domain_separation, min_separation, Multiset, Point};
use crate::numeric::{linf_dist, order_free_vec_sum};

pub use sample::{lattice_subset, perturbed_copy, separated_multiset, separated_pair};

/// Blocks with `|ind − 1|` at most this are decoded.
pub const IND_TOL: f64 = 1e-6;
/// Pairs closer than this in Wasserstein distance are skipped by
/// [`bilip_estimate`].
pub const MIN_PAIR_DISTANCE: f64 = 1e-9;
/// Refuses to build grids with more cubes than this.
pub const MAX_ACTIVE_CUBES: usize = 1 << 22;

pub type CubeIndex = Vec<i64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoundingBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() {
            return Err(Error::Empty("bounding box"));
        }
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                found: hi.len(),
            });
        }
        if lo.iter().chain(&hi).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("bounding box"));
        }
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Err(Error::InvalidParameter(format!("empty box {lo:?}..{hi:?}")));
        }
        Ok(BoundingBox { lo, hi })
    }

    pub fn unit(dim: usize) -> Self {
        BoundingBox {
            lo: vec![0.0; dim],
            hi: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Smallest box holding every element of every multiset.
    pub fn of_dataset(dataset: &[Multiset]) -> Result<Self> {
        let mut points = dataset.iter().flat_map(|a| a.iter());
        let first = points.next().ok_or(Error::Empty("dataset"))?;
        let (mut lo, mut hi) = (first.coords().to_vec(), first.coords().to_vec());
        for p in points {
            if p.dim() != lo.len() {
                return Err(Error::DimensionMismatch {
                    expected: lo.len(),
                    found: p.dim(),
                });
            }
            for (i, &c) in p.coords().iter().enumerate() {
                lo[i] = lo[i].min(c);
                hi[i] = hi[i].max(c);
            }
        }
        BoundingBox::new(lo, hi)
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter().zip(&self.lo).zip(&self.hi).all(|((x, l), h)| l <= x && x <= h)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CodecParts {
    separation: f64,
    margin: f64,
    anchor: Vec<f64>,
    active: Vec<CubeIndex>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CodecParts", into = "CodecParts")]
pub struct GridCodec {
    separation: f64,
    side: f64,
    margin: f64,
    anchor: Vec<f64>,
    active: Vec<CubeIndex>,
    index: BTreeMap<CubeIndex, usize>,
}

impl From<GridCodec> for CodecParts {
    fn from(c: GridCodec) -> Self {
        CodecParts {
            separation: c.separation,
            margin: c.margin,
            anchor: c.anchor,
            active: c.active,
        }
    }
}

impl TryFrom<CodecParts> for GridCodec {
    type Error = Error;

    fn try_from(p: CodecParts) -> Result<Self> {
        GridCodec::from_parts(p.separation, p.margin, p.anchor, p.active)
    }
}

fn check_params(separation: f64, margin: f64, anchor: &[f64]) -> Result<()> {
    if !(separation.is_finite() && separation > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "separation must be positive and finite, got {separation}"
        )));
    }
    if !(margin > 0.0 && margin < separation / 4.0) {
        return Err(Error::InvalidParameter(format!(
            "margin {margin} must lie in (0, R/4) = (0, {})",
            separation / 4.0
        )));
    }
    if anchor.iter().any(|a| !a.is_finite()) {
        return Err(Error::NonFinite("anchor"));
    }
    Ok(())
}

impl GridCodec {
    /// Grid over `domain` with margin `R/8` and anchor at the origin.
    pub fn build(separation: f64, domain: &BoundingBox) -> Result<Self> {
        Self::build_with(separation, domain, separation / 8.0, vec![0.0; domain.dim()])
    }

    /// Activates every cube whose closed body meets `domain` inflated by the
    /// margin, so each feature that can be nonzero on `domain` has a block.
    pub fn build_with(separation: f64, domain: &BoundingBox, margin: f64, anchor: Vec<f64>) -> Result<Self> {
        check_params(separation, margin, &anchor)?;
        if anchor.len() != domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                found: anchor.len(),
            });
        }
        let side = separation / 2.0;
        let ranges: Vec<(i64, i64)> = (0..domain.dim())
            .map(|i| {
                axis_range(
                    domain.lo[i] - margin,
                    domain.hi[i] + margin,
                    anchor[i],
                    side,
                )
            })
            .collect();
        let total = ranges
            .iter()
            .try_fold(1usize, |acc, &(a, b)| acc.checked_mul((b - a + 1) as usize))
            .filter(|&t| t <= MAX_ACTIVE_CUBES)
            .ok_or(Error::TooLarge {
                what: "active cubes",
                value: usize::MAX,
                max: MAX_ACTIVE_CUBES,
            })?;
        let mut active = Vec::with_capacity(total);
        let mut q: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        loop {
            active.push(q.clone());
            let mut axis = q.len();
            loop {
                if axis == 0 {
                    return Self::from_parts(separation, margin, anchor, active);
                }
                axis -= 1;
                if q[axis] < ranges[axis].1 {
                    q[axis] += 1;
                    break;
                }
                q[axis] = ranges[axis].0;
            }
        }
    }

    /// Takes `R` from the dataset's smallest separation and the domain from
    /// its bounding box.
    pub fn from_dataset(dataset: &[Multiset]) -> Result<Self> {
        let r = domain_separation(dataset)?.domain_separation;
        Self::build(r, &BoundingBox::of_dataset(dataset)?)
    }

    pub fn from_parts(separation: f64, margin: f64, anchor: Vec<f64>, mut active: Vec<CubeIndex>) -> Result<Self> {
        check_params(separation, margin, &anchor)?;
        if active.iter().any(|q| q.len() != anchor.len()) {
            return Err(Error::InvalidParameter(
                "cube index length differs from the anchor dimension".into(),
            ));
        }
        active.sort();
        active.dedup();
        let index = active.iter().enumerate().map(|(i, q)| (q.clone(), i)).collect();
        Ok(GridCodec {
            separation,
            side: separation / 2.0,
            margin,
            anchor,
            active,
            index,
        })
    }

    pub fn separation(&self) -> f64 {
        self.separation
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn dim(&self) -> usize {
        self.anchor.len()
    }

    /// Active cubes in lexicographic order; block `i` belongs to cube `i`.
    pub fn active(&self) -> &[CubeIndex] {
        &self.active
    }

    pub fn block_len(&self) -> usize {
        self.dim() + 1
    }

    /// Output dimension `m = |I|·(d+1)`.
    pub fn output_dim(&self) -> usize {
        self.active.len() * self.block_len()
    }

    pub fn block_of(&self, q: &[i64]) -> Option<usize> {
        self.index.get(q).copied()
    }

    pub fn cube_lo(&self, q: &[i64]) -> Vec<f64> {
        q.iter().zip(&self.anchor).map(|(&qi, a)| a + self.side * qi as f64).collect()
    }

    pub fn cube_hi(&self, q: &[i64]) -> Vec<f64> {
        q.iter().zip(&self.anchor).map(|(&qi, a)| a + self.side * (qi + 1) as f64).collect()
    }

    pub fn center(&self, q: &[i64]) -> Vec<f64> {
        q.iter()
            .zip(&self.anchor)
            .map(|(&qi, a)| a + self.side * (qi as f64 + 0.5))
            .collect()
    }

    /// ℓ∞ distance from `x` to the closed cube `q`.
    pub fn cube_distance(&self, q: &[i64], x: &[f64]) -> f64 {
        self.cube_lo(q)
            .iter()
            .zip(self.cube_hi(q))
            .zip(x)
            .map(|((lo, hi), &xi)| (lo - xi).max(xi - hi).max(0.0))
            .fold(0.0, f64::max)
    }

    pub fn f_ind(&self, q: &[i64], x: &[f64]) -> f64 {
        let d = self.cube_distance(q, x);
        if d == 0.0 {
            1.0
        } else {
            (1.0 - d / self.margin).max(0.0)
        }
    }

    /// `max(−L·t, min(clamp(x_i − c_i, −L, L), L·t))` with `L = s/2` and
    /// `t = f_ind`.
    pub fn f_coords(&self, q: &[i64], x: &[f64]) -> Vec<f64> {
        let bound = self.side / 2.0 * self.f_ind(q, x);
        let half = self.side / 2.0;
        x.iter()
            .zip(self.center(q))
            .map(|(xi, ci)| (xi - ci).clamp(-half, half).min(bound).max(-bound))
            .collect()
    }

    /// Cubes within `margin` of `x`, i.e. those where some feature of `x`
    /// can be nonzero.
    pub fn touching_cubes(&self, x: &[f64]) -> Vec<CubeIndex> {
        let ranges: Vec<(i64, i64)> = x
            .iter()
            .zip(&self.anchor)
            .map(|(&xi, &a)| axis_range(xi - self.margin, xi + self.margin, a, self.side))
            .collect();
        let mut out = Vec::new();
        let mut q: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        'outer: loop {
            if self.cube_distance(&q, x) < self.margin {
                out.push(q.clone());
            }
            for axis in (0..q.len()).rev() {
                if q[axis] < ranges[axis].1 {
                    q[axis] += 1;
                    continue 'outer;
                }
                q[axis] = ranges[axis].0;
            }
            return out;
        }
    }

    fn check_point(&self, p: &Point) -> Result<()> {
        if p.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: p.dim(),
            });
        }
        Ok(())
    }

    /// `F(A) = Σ_{a ∈ A} f(a)`, block by block.
    pub fn encode(&self, a: &Multiset) -> Result<Encoding> {
        let mut terms: BTreeMap<usize, Vec<Vec<f64>>> = BTreeMap::new();
        for p in a.iter() {
            self.check_point(p)?;
            for q in self.touching_cubes(p.coords()) {
                let block = self
                    .block_of(&q)
                    .ok_or_else(|| Error::OutsideDomain(p.coords().to_vec()))?;
                let mut feature = vec![self.f_ind(&q, p.coords())];
                feature.extend(self.f_coords(&q, p.coords()));
                terms.entry(block).or_default().push(feature);
            }
        }
        let b = self.block_len();
        let mut values = vec![0.0; self.output_dim()];
        for (block, t) in terms {
            values[block * b..(block + 1) * b].copy_from_slice(&order_free_vec_sum(&t, b));
        }
        Ok(Encoding {
            block_len: b,
            values,
        })
    }

    /// Reads back every cube with `ind ≈ 1`; points found from several
    /// cubes (on shared faces) are merged within `s/4`.
    pub fn decode(&self, e: &Encoding) -> Result<Multiset> {
        if e.values.len() != self.output_dim() || e.block_len != self.block_len() {
            return Err(Error::SizeMismatch(format!(
                "encoding has {} values in blocks of {}, codec expects {} in blocks of {}",
                e.values.len(),
                e.block_len,
                self.output_dim(),
                self.block_len()
            )));
        }
        let dedup = self.side / 4.0;
        let mut found: Vec<Vec<f64>> = Vec::new();
        for (q, block) in self.active.iter().zip(e.blocks()) {
            if (block[0] - 1.0).abs() > IND_TOL {
                continue;
            }
            let p: Vec<f64> = block[1..].iter().zip(self.center(q)).map(|(r, c)| r + c).collect();
            if !found.iter().any(|f| linf_dist(f, &p) <= dedup) {
                found.push(p);
            }
        }
        if found.is_empty() {
            if e.values.iter().any(|&v| v != 0.0) {
                return Err(Error::Decode(
                    "nonzero encoding without any full indicator; input was not separated".into(),
                ));
            }
            return Ok(Multiset::empty(self.dim()));
        }
        Ok(Multiset::from_rows(&found)?.canonicalize())
    }

    /// [`decode`](Self::decode), failing unless exactly `n` points come back.
    pub fn decode_expecting(&self, e: &Encoding, n: usize) -> Result<Multiset> {
        let a = self.decode(e)?;
        if a.len() != n {
            return Err(Error::Decode(format!("recovered {} points, expected {n}", a.len())));
        }
        Ok(a)
    }

    /// Smallest separation the decoder relies on.
    pub fn required_separation(&self) -> f64 {
        self.side + 2.0 * self.margin
    }

    pub fn check_separation(&self, a: &Multiset) -> bool {
        a.len() < 2 || min_separation(a).is_ok_and(|r| r >= self.required_separation())
    }
}

/// Integer range of cubes `[a + s·q, a + s·(q+1)]` meeting `[lo, hi]`.
fn axis_range(lo: f64, hi: f64, anchor: f64, side: f64) -> (i64, i64) {
    let meets = |q: i64| anchor + side * (q + 1) as f64 >= lo && anchor + side * q as f64 <= hi;
    let mut first = ((lo - anchor) / side - 1.0).ceil() as i64;
    let mut last = ((hi - anchor) / side).floor() as i64;
    while meets(first - 1) {
        first -= 1;
    }
    while !meets(first) {
        first += 1;
    }
    while meets(last + 1) {
        last += 1;
    }
    while !meets(last) {
        last -= 1;
    }
    (first, last)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoding {
    pub block_len: usize,
    pub values: Vec<f64>,
}

impl Encoding {
    pub fn blocks(&self) -> std::slice::Chunks<'_, f64> {
        self.values.chunks(self.block_len)
    }

    pub fn linf_dist(&self, other: &Encoding) -> f64 {
        linf_dist(&self.values, &other.values)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilipEstimate {
    /// Smallest observed `‖F(A) − F(B)‖∞ / d_W(A, B)`.
    pub lower: f64,
    /// Largest observed ratio.
    pub upper: f64,
    pub pairs: usize,
    /// Pairs skipped because `d_W < MIN_PAIR_DISTANCE`.
    pub excluded: usize,
}

pub fn bilip_estimate<I>(codec: &GridCodec, pairs: I) -> Result<BilipEstimate>
where
    I: IntoIterator<Item = (Multiset, Multiset)>,
{
    let (mut lower, mut upper) = (f64::INFINITY, 0.0f64);
    let (mut used, mut excluded) = (0, 0);
    for (a, b) in pairs {
        let dw = wasserstein(&a, &b)?;
        if dw < MIN_PAIR_DISTANCE {
            excluded += 1;
            continue;
        }
        let ratio = codec.encode(&a)?.linf_dist(&codec.encode(&b)?) / dw;
        lower = lower.min(ratio);
        upper = upper.max(ratio);
        used += 1;
    }
    if used == 0 {
        return Err(Error::Degenerate("every sampled pair was identical".into()));
    }
    Ok(BilipEstimate {
        lower,
        upper,
        pairs: used,
        excluded,
    })
}
