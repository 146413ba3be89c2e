//! Random CPwL generators used by tests, the acceptance suite, and the CLI.

use rand::Rng;

use super::affine::AffineMap;
use super::partition::ExplicitPartition;
use super::relu::ReluNet;
use crate::error::Result;

/// Dense network with uniform weights in `[-1, 1]` and biases in
/// `[-0.5, 0.5]`.
pub fn relu_net<R: Rng>(rng: &mut R, in_dim: usize, hidden: &[usize], out_dim: usize) -> Result<ReluNet> {
    let mut dims = vec![in_dim];
    dims.extend_from_slice(hidden);
    dims.push(out_dim);
    let layers = dims
        .windows(2)
        .map(|w| {
            let matrix = (0..w[1])
                .map(|_| (0..w[0]).map(|_| rng.gen_range(-1.0..=1.0)).collect())
                .collect();
            let bias = (0..w[1]).map(|_| rng.gen_range(-0.5..=0.5)).collect();
            AffineMap::new(matrix, bias)
        })
        .collect::<Result<Vec<_>>>()?;
    ReluNet::new(layers)
}

/// Axis-aligned grid partition of `[0,1]^k` with a continuous law.
///
/// Continuity across every facet of a grid forces the law to be separable,
/// `f(x) = c + Σ_i φ_i(x_i)` with piecewise-linear `φ_i`, so each output
/// draws random slopes per axis interval. With `uniform` the breakpoints are
/// equally spaced, otherwise they are drawn at random.
pub fn grid_partition<R: Rng>(
    rng: &mut R,
    resolution: &[usize],
    out_dim: usize,
    uniform: bool,
) -> Result<ExplicitPartition> {
    let breaks: Vec<Vec<f64>> = resolution
        .iter()
        .map(|&r| {
            if uniform {
                (1..r).map(|i| i as f64 / r as f64).collect()
            } else {
                let mut b: Vec<f64> = (1..r).map(|_| rng.gen_range(0.05..0.95)).collect();
                b.sort_by(f64::total_cmp);
                b.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
                b
            }
        })
        .collect();
    // slopes[o][axis][interval], intercepts keep each φ continuous
    let mut slopes = Vec::with_capacity(out_dim);
    let mut intercepts = Vec::with_capacity(out_dim);
    for _ in 0..out_dim {
        let mut s_out = Vec::new();
        let mut c_out = Vec::new();
        for b in &breaks {
            let s: Vec<f64> = (0..=b.len()).map(|_| rng.gen_range(-2.0..=2.0)).collect();
            let mut c = vec![rng.gen_range(-1.0..=1.0)];
            for (j, &t) in b.iter().enumerate() {
                let prev = c[j];
                c.push(prev + (s[j] - s[j + 1]) * t);
            }
            s_out.push(s);
            c_out.push(c);
        }
        slopes.push(s_out);
        intercepts.push(c_out);
    }
    ExplicitPartition::grid(&breaks, |idx| {
        let matrix = (0..out_dim)
            .map(|o| idx.iter().enumerate().map(|(ax, &j)| slopes[o][ax][j]).collect())
            .collect();
        let bias = (0..out_dim)
            .map(|o| idx.iter().enumerate().map(|(ax, &j)| intercepts[o][ax][j]).sum())
            .collect();
        AffineMap::new(matrix, bias).expect("finite law")
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpwl::continuity::{continuity_check, ContinuityOptions};
    use crate::cpwl::CpwlFunction;
    use crate::rng::seeded;

    #[test]
    fn random_grids_are_continuous() {
        let mut rng = seeded(3);
        for k in 1..=3 {
            let res: Vec<usize> = (0..k).map(|_| rng.gen_range(2..=5)).collect();
            let p = grid_partition(&mut rng, &res, 2, k % 2 == 0).unwrap();
            let f = CpwlFunction::from(p);
            let report = continuity_check(&f, &ContinuityOptions::unit_box(k, 50), &mut rng).unwrap();
            assert!(report.violations.is_empty(), "{report:?}");
        }
    }

    #[test]
    fn random_net_shapes() {
        let mut rng = seeded(1);
        let f = relu_net(&mut rng, 3, &[8, 4], 2).unwrap();
        assert_eq!(f.in_dim(), 3);
        assert_eq!(f.out_dim(), 2);
        assert_eq!(f.hidden_units(), 12);
    }
}
