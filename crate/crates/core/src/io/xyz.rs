//! XYZ geometry files: repeated records of
//!
//! ```text
//! <atom count>
//! <comment>
//! <label> <x> <y> <z>    (one line per atom; extra columns are ignored)
//! ```
//!
//! Blank lines between records are skipped. Coordinates may use the
//! `1.5*^-6` exponent spelling found in QM9 dumps.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::multiset::{Multiset, Point};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct XyzRecord {
    pub name: String,
    pub labels: Vec<String>,
    pub points: Multiset,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct XyzDataset {
    pub records: Vec<XyzRecord>,
}

impl XyzDataset {
    pub fn multisets(&self) -> Vec<Multiset> {
        self.records.iter().map(|r| r.points.clone()).collect()
    }
}

pub fn parse_xyz(path: impl AsRef<Path>) -> Result<XyzDataset> {
    parse_xyz_str(&std::fs::read_to_string(path)?)
}

fn parse_coord(token: &str, line: usize) -> Result<f64> {
    let v: f64 = token
        .replace("*^", "e")
        .parse()
        .map_err(|_| Error::Parse {
            line,
            msg: format!("coordinate {token:?} is not a number"),
        })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            msg: format!("coordinate {token:?} is not finite"),
        });
    }
    Ok(v)
}

pub fn parse_xyz_str(text: &str) -> Result<XyzDataset> {
    let lines: Vec<&str> = text.lines().collect();
    let mut records = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        if lines[i].trim().is_empty() {
            i += 1;
            continue;
        }
        let header_line = i + 1;
        let count: usize = lines[i].trim().parse().map_err(|_| Error::Parse {
            line: header_line,
            msg: format!("expected an atom count, found {:?}", lines[i].trim()),
        })?;
        let comment = lines.get(i + 1).ok_or(Error::Parse {
            line: header_line + 1,
            msg: "missing comment line".into(),
        })?;
        let name = match comment.trim() {
            "" => format!("record {}", records.len() + 1),
            c => c.to_string(),
        };
        let mut labels = Vec::with_capacity(count);
        let mut points = Vec::with_capacity(count);
        for a in 0..count {
            let line = header_line + 2 + a;
            let text = lines.get(line - 1).ok_or_else(|| Error::Parse {
                line,
                msg: format!("record {name:?} ends after {a} of {count} atoms"),
            })?;
            let tokens: Vec<&str> = text.split_whitespace().collect();
            if tokens.len() < 4 {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected `label x y z`, found {:?}", text.trim()),
                });
            }
            labels.push(tokens[0].to_string());
            let coords = tokens[1..4]
                .iter()
                .map(|t| parse_coord(t, line))
                .collect::<Result<Vec<_>>>()?;
            points.push(Point::new(coords)?);
        }
        let points = if points.is_empty() {
            Multiset::empty(3)
        } else {
            Multiset::new(points)?
        };
        records.push(XyzRecord {
            name,
            labels,
            points,
        });
        i += 2 + count;
    }
    Ok(XyzDataset { records })
}

#[cfg(test)]
mod tests {
    use super::*;

    const WATER: &str = "3\nwater\nO 0.0 0.0 0.1173\nH 0.0 0.7572 -0.4692\nH 0.0 -0.7572 -0.4692\n";

    #[test]
    fn single_record() {
        let d = parse_xyz_str(WATER).unwrap();
        assert_eq!(d.records.len(), 1);
        let r = &d.records[0];
        assert_eq!(r.name, "water");
        assert_eq!(r.labels, ["O", "H", "H"]);
        assert_eq!(r.points.len(), 3);
        assert_eq!(r.points.elements()[1].coords(), &[0.0, 0.7572, -0.4692]);
    }

    #[test]
    fn concatenated_records() {
        let text = format!("{WATER}\n2\n\nC 0 0 0 0.1\nO 1.2*^-1 0 0\n");
        let d = parse_xyz_str(&text).unwrap();
        assert_eq!(d.records.len(), 2);
        assert_eq!(d.records[1].name, "record 2");
        assert_eq!(d.records[1].points.elements()[1].coords()[0], 0.12);
    }

    #[test]
    fn truncated_record_reports_line() {
        let text = "5\nshort\nC 0 0 0\nC 1 0 0\nC 0 1 0\nC 0 0 1\n";
        match parse_xyz_str(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 7),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(parse_xyz_str("x\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(
            parse_xyz_str("1\nc\nH 0 zero 0\n"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(parse_xyz_str("1\nc\nH 0 0\n"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(parse_xyz_str("1\n"), Err(Error::Parse { line: 2, .. })));
    }
}
