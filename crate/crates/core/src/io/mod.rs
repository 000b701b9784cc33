//! On-disk formats: SIDT tensors, PGM mask images, metrics CSV and the
//! `key = value` run configuration.

mod csv;
mod pgm;
mod run_config;
mod tensor;

pub use self::csv::{
    ablation_csv, comparison_csv, format_sig6, metrics_csv, write_metrics_csv, AblationRow,
    METRICS_HEADER,
};
pub use self::pgm::{encode_pgm, write_mask_pgm};
pub use self::run_config::{FaceRegionSpec, RunConfig};
pub use self::tensor::{
    decode_tensor, encode_tensor, read_tensor, read_tensor_with, write_tensor, NonFinite, Tensor,
    TENSOR_MAGIC, TENSOR_VERSION,
};

use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
