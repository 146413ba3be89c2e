//! Equal-width histograms written as CSV and a plain SVG bar chart.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl Histogram {
    pub fn new(values: &[f64], bins: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("histogram values"));
        }
        if bins == 0 {
            return Err(Error::InvalidParameter("histogram needs at least one bin".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("histogram values"));
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if min < max { (min, max) } else { (min - 0.5, max + 0.5) };
        let width = (hi - lo) / bins as f64;
        let mut edges: Vec<f64> = (0..bins).map(|i| lo + width * i as f64).collect();
        edges.push(hi);
        let mut counts = vec![0; bins];
        for &v in values {
            let i = (((v - lo) / width).floor() as usize).min(bins - 1);
            counts[i] += 1;
        }
        let mut sum = values.to_vec();
        let mean = crate::numeric::order_free_sum(&mut sum) / values.len() as f64;
        Ok(Histogram {
            edges,
            counts,
            min,
            max,
            mean,
        })
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin_lo,bin_hi,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            let _ = writeln!(s, "{},{},{}", self.edges[i], self.edges[i + 1], c);
        }
        s
    }

    pub fn to_svg(&self, title: &str) -> String {
        let (w, h, pad) = (640.0, 360.0, 40.0);
        let peak = self.counts.iter().copied().max().unwrap_or(0).max(1) as f64;
        let bar_w = (w - 2.0 * pad) / self.counts.len() as f64;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
        );
        let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
            w / 2.0,
            escape(title)
        );
        for (i, &c) in self.counts.iter().enumerate() {
            let bh = (h - 2.0 * pad) * c as f64 / peak;
            let _ = writeln!(
                s,
                r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#4c72b0" stroke="white"/>"##,
                pad + bar_w * i as f64,
                h - pad - bh,
                bar_w,
                bh
            );
        }
        let _ = writeln!(
            s,
            r#"<line x1="{pad}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/>"#,
            h - pad,
            w - pad
        );
        for (x, v, anchor) in [(pad, self.edges[0], "start"), (w - pad, self.edges[self.edges.len() - 1], "end")] {
            let _ = writeln!(
                s,
                r#"<text x="{x}" y="{}" font-family="sans-serif" font-size="11" text-anchor="{anchor}">{v:.4}</text>"#,
                h - pad + 16.0
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Builds the histogram and writes `<out>.csv` and `<out>.svg`; returns the
/// histogram and the two paths.
pub fn emit_histogram(values: &[f64], bins: usize, out: impl AsRef<Path>, title: &str) -> Result<(Histogram, PathBuf, PathBuf)> {
    let h = Histogram::new(values, bins)?;
    let csv = out.as_ref().with_extension("csv");
    let svg = out.as_ref().with_extension("svg");
    std::fs::write(&csv, h.to_csv())?;
    std::fs::write(&svg, h.to_svg(title))?;
    Ok((h, csv, svg))
}
