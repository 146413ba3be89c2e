use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::affine::AffineMap;
use super::polytope::{HPolytope, MEMBERSHIP_TOL};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub region: HPolytope,
    pub map: AffineMap,
}

/// A piecewise-affine function given by explicit polytope cells, each
/// carrying its own affine law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplicitPartition {
    dim: usize,
    out_dim: usize,
    cells: Vec<Cell>,
}

impl ExplicitPartition {
    pub fn new(cells: Vec<Cell>) -> Result<Self> {
        let first = cells.first().ok_or(Error::Empty("partition"))?;
        let dim = first.region.dim();
        let out_dim = first.map.out_dim();
        for c in &cells {
            if c.region.dim() != dim || c.map.in_dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: c.region.dim().max(c.map.in_dim()),
                });
            }
            if c.map.out_dim() != out_dim {
                return Err(Error::DimensionMismatch {
                    expected: out_dim,
                    found: c.map.out_dim(),
                });
            }
        }
        Ok(ExplicitPartition {
            dim,
            out_dim,
            cells,
        })
    }

    /// Axis-aligned grid over `[0,1]^k`: `breaks[i]` lists the interior
    /// breakpoints on axis `i`. `law(idx)` supplies the affine law of the
    /// cell with per-axis interval indices `idx`. Cells are ordered
    /// lexicographically by `idx`.
    pub fn grid(
        breaks: &[Vec<f64>],
        mut law: impl FnMut(&[usize]) -> AffineMap,
    ) -> Result<Self> {
        let edges: Vec<Vec<f64>> = breaks
            .iter()
            .map(|b| {
                let mut e = Vec::with_capacity(b.len() + 2);
                e.push(0.0);
                e.extend_from_slice(b);
                e.push(1.0);
                e
            })
            .collect();
        if edges.iter().any(|e| e.windows(2).any(|w| w[0] >= w[1])) {
            return Err(Error::InvalidParameter(
                "grid breakpoints must be strictly increasing inside (0,1)".into(),
            ));
        }
        let counts: Vec<usize> = edges.iter().map(|e| e.len() - 1).collect();
        let total: usize = counts.iter().product();
        let mut cells = Vec::with_capacity(total);
        let mut idx = vec![0usize; counts.len()];
        for _ in 0..total {
            let lo: Vec<f64> = idx.iter().zip(&edges).map(|(&i, e)| e[i]).collect();
            let hi: Vec<f64> = idx.iter().zip(&edges).map(|(&i, e)| e[i + 1]).collect();
            cells.push(Cell {
                region: HPolytope::aabb(&lo, &hi)?,
                map: law(&idx),
            });
            for ax in (0..idx.len()).rev() {
                idx[ax] += 1;
                if idx[ax] < counts[ax] {
                    break;
                }
                idx[ax] = 0;
            }
        }
        Self::new(cells)
    }

    /// The 2×2 partition of `[0,1]²` into squares of side 1/2, ordered
    /// bottom-left, top-left, bottom-right, top-right (first axis major).
    pub fn four_squares(laws: [AffineMap; 4]) -> Result<Self> {
        let mut laws = laws.into_iter();
        Self::grid(&[vec![0.5], vec![0.5]], |_| laws.next().unwrap())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        Ok(())
    }

    /// `POLY(v)`: indices of every cell containing `v`.
    pub fn locate(&self, v: &[f64]) -> Result<Vec<usize>> {
        self.check_dim(v)?;
        let found: Vec<usize> = self
            .cells
            .iter()
            .enumerate()
            .filter(|(_, c)| c.region.contains(v))
            .map(|(i, _)| i)
            .collect();
        if found.is_empty() {
            return Err(Error::OutsideDomain(v.to_vec()));
        }
        Ok(found)
    }

    pub fn l1_distance_to_cell(&self, v: &[f64], cell: usize) -> Result<f64> {
        self.check_dim(v)?;
        let c = self.cells.get(cell).ok_or_else(|| {
            Error::InvalidParameter(format!("cell {cell} out of range ({})", self.cells.len()))
        })?;
        c.region.l1_distance(v).map_err(|e| match e {
            Error::Lp(_) => Error::InfeasibleCell(cell),
            e => e,
        })
    }

    /// Half the smallest ℓ1 distance from `v` to a cell not containing it
    /// (infinite when every cell contains `v`). Empty cells are skipped.
    pub fn half_gap(&self, v: &[f64]) -> Result<f64> {
        let containing = self.locate(v)?;
        let mut best = f64::INFINITY;
        for i in 0..self.cells.len() {
            if containing.contains(&i) {
                continue;
            }
            match self.l1_distance_to_cell(v, i) {
                Ok(d) => best = best.min(d),
                Err(Error::InfeasibleCell(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        Ok(0.5 * best)
    }

    /// Cell used for evaluation: the lowest-index cell containing `x`.
    pub fn cell_of(&self, x: &[f64]) -> Result<usize> {
        self.check_dim(x)?;
        self.cells
            .iter()
            .position(|c| c.region.contains(x))
            .ok_or_else(|| Error::OutsideDomain(x.to_vec()))
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.cells[self.cell_of(x)?].map.apply(x))
    }

    pub fn evaluate_exact(&self, x: &[BigRational]) -> Result<Vec<BigRational>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        let cell = self
            .cells
            .iter()
            .find(|c| c.region.contains_exact(x))
            .ok_or_else(|| Error::OutsideDomain(x.iter().map(crate::numeric::to_f64).collect()))?;
        Ok(cell.map.apply_exact(x))
    }

    /// The unique cell holding `v` in its interior, with its ℓ1 clearance.
    pub fn interior_cell(&self, v: &[f64]) -> Result<Option<(usize, f64)>> {
        let containing = self.locate(v)?;
        if containing.len() != 1 {
            return Ok(None);
        }
        let clearance = self.cells[containing[0]].region.clearance(v);
        Ok((clearance > MEMBERSHIP_TOL).then_some((containing[0], clearance)))
    }

    /// Pulls every cell and law back through `inner`.
    pub fn precompose(&self, inner: &AffineMap) -> Result<Self> {
        if inner.out_dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: inner.out_dim(),
            });
        }
        let cells = self
            .cells
            .iter()
            .map(|c| {
                let (normals, offsets): (Vec<Vec<f64>>, Vec<f64>) = c
                    .region
                    .normals()
                    .iter()
                    .zip(c.region.offsets())
                    .map(|(a, b)| {
                        let row = AffineMap::new(vec![a.clone()], vec![*b])?.compose(inner)?;
                        Ok((row.matrix()[0].clone(), row.bias()[0]))
                    })
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .unzip();
                Ok(Cell {
                    region: HPolytope::new(normals, offsets)?,
                    map: c.map.compose(inner)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(cells)
    }

    pub fn lipschitz_bound(&self) -> f64 {
        self.cells
            .iter()
            .map(|c| c.map.linf_operator_norm())
            .fold(0.0, f64::max)
    }
}
