use rand::Rng;
use serde::Serialize;

use super::function::CpwlFunction;
use crate::error::Result;
use crate::numeric::linf_dist;

/// Relative tolerance for jumps and facet disagreement.
pub const CONTINUITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct ContinuityOptions {
    pub segments: usize,
    pub steps: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ContinuityOptions {
    pub fn unit_box(dim: usize, segments: usize) -> Self {
        ContinuityOptions {
            segments,
            steps: 200,
            lo: vec![0.0; dim],
            hi: vec![1.0; dim],
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub at: Vec<f64>,
    pub jump: f64,
    pub allowed: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ContinuityReport {
    pub segments_checked: usize,
    pub facet_points_checked: usize,
    pub violations: Vec<Violation>,
}

impl ContinuityReport {
    pub fn is_continuous(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Samples random segments in the box and flags any step whose jump exceeds
/// the global Lipschitz bound times the step length. For explicit
/// partitions, also projects sample points onto every facet of their cell
/// and compares the affine laws of all cells meeting there.
pub fn continuity_check<R: Rng>(
    f: &CpwlFunction,
    opts: &ContinuityOptions,
    rng: &mut R,
) -> Result<ContinuityReport> {
    let dim = f.in_dim();
    let lip = f.lipschitz_bound();
    let mut report = ContinuityReport::default();
    let sample = |rng: &mut R| -> Vec<f64> {
        (0..dim)
            .map(|i| rng.gen_range(opts.lo[i]..=opts.hi[i]))
            .collect()
    };

    for _ in 0..opts.segments {
        let a = sample(rng);
        let b = sample(rng);
        let point = |t: f64| -> Vec<f64> { a.iter().zip(&b).map(|(x, y)| x + t * (y - x)).collect() };
        let step_len = linf_dist(&a, &b) / opts.steps as f64;
        let mut prev = f.evaluate(&a)?;
        for s in 1..=opts.steps {
            let x = point(s as f64 / opts.steps as f64);
            let cur = f.evaluate(&x)?;
            let jump = linf_dist(&prev, &cur);
            let scale = 1.0 + prev.iter().chain(&cur).fold(0.0f64, |m, v| m.max(v.abs()));
            let allowed = lip * step_len * (1.0 + CONTINUITY_TOL) + CONTINUITY_TOL * scale;
            if jump > allowed {
                report.violations.push(Violation { at: x.clone(), jump, allowed });
            }
            prev = cur;
        }
        report.segments_checked += 1;
    }

    if let CpwlFunction::Partition(p) = f {
        for _ in 0..opts.segments {
            let x = sample(rng);
            let Ok(home) = p.cell_of(&x) else { continue };
            let cell = &p.cells()[home];
            for (a, &b) in cell.region.normals().iter().zip(cell.region.offsets()) {
                let norm2: f64 = a.iter().map(|v| v * v).sum();
                if norm2 == 0.0 {
                    continue;
                }
                let slack: f64 = a.iter().zip(&x).map(|(a, x)| a * x).sum::<f64>() + b;
                let q: Vec<f64> = x.iter().zip(a).map(|(x, a)| x - slack / norm2 * a).collect();
                if !cell.region.slacks(&q).all(|s| s >= -CONTINUITY_TOL) {
                    continue;
                }
                let own = cell.map.apply(&q);
                for other in p.cells() {
                    if !other.region.slacks(&q).all(|s| s >= -CONTINUITY_TOL) {
                        continue;
                    }
                    let theirs = other.map.apply(&q);
                    let jump = linf_dist(&own, &theirs);
                    let scale = 1.0 + own.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                    let allowed = CONTINUITY_TOL * scale;
                    if jump > allowed {
                        report.violations.push(Violation { at: q.clone(), jump, allowed });
                    }
                }
                report.facet_points_checked += 1;
            }
        }
    }
    Ok(report)
}

/// Indices `j` of equally spaced samples where the second difference
/// `v[j−1] − 2v[j] + v[j+1]` exceeds `tol`. A piecewise-linear function
/// flags at most two samples per breakpoint.
pub fn second_difference_kinks(values: &[f64], tol: f64) -> Vec<usize> {
    (1..values.len().saturating_sub(1))
        .filter(|&j| (values[j - 1] - 2.0 * values[j] + values[j + 1]).abs() > tol)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpwl::affine::AffineMap;
    use crate::cpwl::partition::ExplicitPartition;
    use crate::cpwl::random::relu_net;
    use crate::rng::seeded;

    fn affine2(a: f64, b: f64, c: f64) -> AffineMap {
        AffineMap::new(vec![vec![a, b]], vec![c]).unwrap()
    }

    fn squares(shift: f64) -> CpwlFunction {
        ExplicitPartition::four_squares([
            affine2(0.0, -1.0, 2.0),
            affine2(0.0, 5.0, -1.0),
            affine2(2.0, -1.0, 1.0 + shift),
            affine2(2.0, 5.0, -2.0),
        ])
        .unwrap()
        .into()
    }

    #[test]
    fn relu_nets_are_continuous() {
        let mut rng = seeded(7);
        let f = CpwlFunction::from(relu_net(&mut rng, 2, &[8, 8], 3).unwrap());
        let report = continuity_check(&f, &ContinuityOptions::unit_box(2, 100), &mut rng).unwrap();
        assert!(report.is_continuous());
        assert_eq!(report.segments_checked, 100);
    }

    #[test]
    fn consistent_four_squares_pass() {
        let mut rng = seeded(8);
        let report = continuity_check(&squares(0.0), &ContinuityOptions::unit_box(2, 200), &mut rng).unwrap();
        assert!(report.is_continuous(), "{report:?}");
        assert!(report.facet_points_checked > 0);
    }

    #[test]
    fn mismatched_edge_is_reported() {
        let mut rng = seeded(9);
        let report = continuity_check(&squares(0.1), &ContinuityOptions::unit_box(2, 200), &mut rng).unwrap();
        assert!(!report.is_continuous());
        let worst = report.violations.iter().map(|v| v.jump).fold(0.0, f64::max);
        assert!((worst - 0.1).abs() < 1e-6 || worst > 0.05, "worst jump {worst}");
    }

    #[test]
    fn kinks_of_a_tent_and_a_parabola() {
        let xs: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        // apex between samples 30 and 31
        let tent: Vec<f64> = xs.iter().map(|x| 0.5 - (x - 0.305).abs()).collect();
        assert_eq!(second_difference_kinks(&tent, 1e-9), vec![30, 31]);
        let parabola: Vec<f64> = xs.iter().map(|x| x * x).collect();
        assert_eq!(second_difference_kinks(&parabola, 1e-9).len(), 99);
    }
}
