//! Versioned JSON documents for certificates, codecs and encodings.
//!
//! Floats are written in shortest round-trip form and read back bit for
//! bit; rationals are `"num/den"` strings. Field order is fixed, so equal
//! values always produce equal bytes.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::cpwl::{CpwlFunction, MEMBERSHIP_TOL};
use crate::error::{Error, Result};
use crate::grid_codec::{CubeIndex, Encoding, GridCodec};
use crate::witness::{
    check_nested, validate_chain, verify_collision, CollisionCert, NestedPointCert, ALPHA_TOL,
    COLLISION_REL_TOL, TUPLE_TOL,
};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arithmetic {
    Float,
    Rational,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub collision_rel: f64,
    pub tuple_residual: f64,
    pub alpha: f64,
    pub membership: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            collision_rel: COLLISION_REL_TOL,
            tuple_residual: TUPLE_TOL,
            alpha: ALPHA_TOL,
            membership: MEMBERSHIP_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Certificate {
    Collision(CollisionCert),
    Nested(NestedPointCert),
}

/// A certificate together with the function it talks about, so it can be
/// re-checked without any other input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateDocument {
    pub format_version: u32,
    pub library_version: String,
    pub arithmetic: Arithmetic,
    pub tolerances: Tolerances,
    pub k: usize,
    /// For nested points, the covering itself; for collisions, the pooled
    /// base function.
    pub function: CpwlFunction,
    pub certificate: Certificate,
}

impl CertificateDocument {
    pub fn collision(function: CpwlFunction, cert: CollisionCert) -> Self {
        CertificateDocument {
            format_version: FORMAT_VERSION,
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            arithmetic: if cert.exact.is_some() {
                Arithmetic::Rational
            } else {
                Arithmetic::Float
            },
            tolerances: Tolerances::default(),
            k: cert.k,
            function,
            certificate: Certificate::Collision(cert),
        }
    }

    pub fn nested(covering: CpwlFunction, cert: NestedPointCert) -> Self {
        CertificateDocument {
            format_version: FORMAT_VERSION,
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            arithmetic: Arithmetic::Float,
            tolerances: Tolerances::default(),
            k: cert.k(),
            function: covering,
            certificate: Certificate::Nested(cert),
        }
    }

    /// Runs the checks matching the certificate kind; returns the failures.
    pub fn verify(&self) -> Result<Vec<String>> {
        match &self.certificate {
            Certificate::Collision(c) => Ok(verify_collision(&self.function, self.k, c)?.failures),
            Certificate::Nested(c) => {
                let mut failures = validate_chain(c, &self.function)?.failures;
                let check = check_nested(&c.w, self.k, &self.function)?;
                if !check.holds || check.common.as_ref() != Some(&c.cell) {
                    failures.push("w is not nested in the recorded region".into());
                }
                Ok(failures)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodecDocument {
    pub format_version: u32,
    pub codec: GridCodec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockLayout {
    /// Names of the entries of one block: `ind`, then one per coordinate.
    pub fields: Vec<String>,
    /// Cube of each block, in output order.
    pub cubes: Vec<CubeIndex>,
}

/// A flat encoding vector with its block layout and the codec that made it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingDocument {
    pub format_version: u32,
    pub layout: BlockLayout,
    pub codec: GridCodec,
    pub values: Vec<f64>,
}

impl EncodingDocument {
    pub fn new(codec: &GridCodec, e: &Encoding) -> Self {
        let mut fields = vec!["ind".to_string()];
        fields.extend((1..=codec.dim()).map(|i| format!("x{i}")));
        EncodingDocument {
            format_version: FORMAT_VERSION,
            layout: BlockLayout {
                fields,
                cubes: codec.active().to_vec(),
            },
            codec: codec.clone(),
            values: e.values.clone(),
        }
    }

    pub fn encoding(&self) -> Encoding {
        Encoding {
            block_len: self.layout.fields.len(),
            values: self.values.clone(),
        }
    }
}

/// Documents carrying a `format_version` field.
pub trait Versioned {
    fn version(&self) -> u32;
}

impl Versioned for CertificateDocument {
    fn version(&self) -> u32 {
        self.format_version
    }
}

impl Versioned for CodecDocument {
    fn version(&self) -> u32 {
        self.format_version
    }
}

impl Versioned for EncodingDocument {
    fn version(&self) -> u32 {
        self.format_version
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_json(value)?)?;
    Ok(())
}

pub fn read_document<T: DeserializeOwned + Versioned>(path: impl AsRef<Path>) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    parse_document(&text)
}

pub fn parse_document<T: DeserializeOwned + Versioned>(text: &str) -> Result<T> {
    let doc: T = serde_json::from_str(text)?;
    if doc.version() != FORMAT_VERSION {
        return Err(Error::FormatVersion(doc.version()));
    }
    Ok(doc)
}

pub fn emit_certificate(doc: &CertificateDocument, path: impl AsRef<Path>) -> Result<()> {
    write_json(doc, path)
}

pub fn load_certificate(path: impl AsRef<Path>) -> Result<CertificateDocument> {
    read_document(path)
}
