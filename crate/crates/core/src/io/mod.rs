//! File formats: XYZ input, JSON artifacts and histogram output.

mod artifacts;
mod histogram;
mod xyz;

pub use artifacts::{
    emit_certificate, load_certificate, parse_document, read_document, to_json, write_json,
    Arithmetic, BlockLayout, Certificate, CertificateDocument, CodecDocument, EncodingDocument,
    Tolerances, Versioned, FORMAT_VERSION,
};
pub use histogram::{emit_histogram, Histogram};
pub use xyz::{parse_xyz, parse_xyz_str, XyzDataset, XyzRecord};
