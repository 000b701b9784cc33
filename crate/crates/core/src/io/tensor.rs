//! SIDT tensor files.
//!
//! ```text
//! offset  size        field
//! 0       4           magic "SIDT"
//! 4       4           version, u32 LE (= 1)
//! 8       4           ndim, u32 LE
//! 12      4 * ndim    dims, u32 LE each
//! ...     4 * prod    payload, f32 LE, row-major
//! ```

use std::path::Path;

use crate::attention::AttentionOutput;
use crate::error::{Error, Result};
use crate::grid::PatchGrid;
use crate::mask::SpatialMask;
use crate::matrix::Matrix;

pub const TENSOR_MAGIC: &[u8; 4] = b"SIDT";
pub const TENSOR_VERSION: u32 = 1;

/// Policy for NaN/Inf payload values when reading.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NonFinite {
    #[default]
    Reject,
    Allow,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let expect: usize = dims.iter().product();
        if expect != data.len() {
            return Err(Error::Shape(format!(
                "dims {dims:?} need {expect} values, got {}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn from_mask(mask: &SpatialMask) -> Self {
        let g = mask.grid();
        Self {
            dims: vec![g.height(), g.width()],
            data: mask.values().iter().map(|&v| v as f32).collect(),
        }
    }

    pub fn from_attention(o: &AttentionOutput) -> Self {
        let g = o.grid();
        Self {
            dims: vec![g.height(), g.width(), o.dim()],
            data: o.data().as_slice().iter().map(|&v| v as f32).collect(),
        }
    }

    /// Interprets `[h, w, D]` directly, or `[N, D]` on the supplied grid.
    pub fn to_attention(&self, grid: Option<PatchGrid>) -> Result<AttentionOutput> {
        let (grid, dim) = match (self.dims.as_slice(), grid) {
            (&[h, w, d], None) => (PatchGrid::new(h, w)?, d),
            (&[h, w, d], Some(g)) => {
                if g.height() != h || g.width() != w {
                    return Err(Error::Shape(format!(
                        "tensor grid {h}x{w} differs from requested {g}"
                    )));
                }
                (g, d)
            }
            (&[n, d], Some(g)) => {
                if n != g.patch_count() {
                    return Err(Error::Shape(format!(
                        "{n} rows do not fit a {g} grid"
                    )));
                }
                (g, d)
            }
            (&[n, d], None) => {
                let side = (n as f64).sqrt().round() as usize;
                if side * side != n {
                    return Err(Error::Shape(format!(
                        "{n} rows are not a square grid; pass the grid explicitly"
                    )));
                }
                (PatchGrid::new(side, side)?, d)
            }
            (dims, _) => {
                return Err(Error::Shape(format!(
                    "attention tensor must be [h, w, D] or [N, D], got {dims:?}"
                )))
            }
        };
        let data = self.data.iter().map(|&v| v as f64).collect();
        AttentionOutput::new(grid, Matrix::from_vec(grid.patch_count(), dim, data)?)
    }
}

pub fn encode_tensor(t: &Tensor) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(12 + 4 * t.dims.len() + 4 * t.data.len());
    out.extend_from_slice(TENSOR_MAGIC);
    out.extend_from_slice(&TENSOR_VERSION.to_le_bytes());
    let ndim = u32::try_from(t.dims.len())
        .map_err(|_| Error::Argument("too many tensor dimensions".into()))?;
    out.extend_from_slice(&ndim.to_le_bytes());
    for &d in &t.dims {
        let d = u32::try_from(d)
            .map_err(|_| Error::Argument(format!("dimension {d} exceeds u32")))?;
        out.extend_from_slice(&d.to_le_bytes());
    }
    for v in &t.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

fn read_u32(bytes: &[u8], offset: usize, what: &str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Format {
            offset: bytes.len(),
            reason: format!("truncated while reading {what}"),
        })
}

pub fn decode_tensor(bytes: &[u8], non_finite: NonFinite) -> Result<Tensor> {
    if bytes.len() < 4 {
        return Err(Error::Format {
            offset: bytes.len(),
            reason: "truncated while reading magic".into(),
        });
    }
    if &bytes[..4] != TENSOR_MAGIC {
        return Err(Error::Format {
            offset: 0,
            reason: format!("bad magic {:?}", String::from_utf8_lossy(&bytes[..4])),
        });
    }
    let version = read_u32(bytes, 4, "version")?;
    if version != TENSOR_VERSION {
        return Err(Error::Format {
            offset: 4,
            reason: format!("unsupported version {version}"),
        });
    }
    let ndim = read_u32(bytes, 8, "ndim")? as usize;
    let mut dims = Vec::with_capacity(ndim.min(16));
    for k in 0..ndim {
        dims.push(read_u32(bytes, 12 + 4 * k, "dims")? as usize);
    }
    let payload_start = 12 + 4 * ndim;
    let count = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or(Error::Format {
            offset: 12,
            reason: "dimension product overflows".into(),
        })?;
    let expect_end = count
        .checked_mul(4)
        .and_then(|n| n.checked_add(payload_start))
        .ok_or(Error::Format {
            offset: 12,
            reason: "payload size overflows".into(),
        })?;
    if bytes.len() < expect_end {
        return Err(Error::Format {
            offset: bytes.len(),
            reason: format!("truncated payload: expected {expect_end} bytes"),
        });
    }
    if bytes.len() > expect_end {
        return Err(Error::Format {
            offset: expect_end,
            reason: format!("{} trailing bytes after payload", bytes.len() - expect_end),
        });
    }
    let mut data = Vec::with_capacity(count);
    for (k, chunk) in bytes[payload_start..].chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
        if non_finite == NonFinite::Reject && !v.is_finite() {
            return Err(Error::Format {
                offset: payload_start + 4 * k,
                reason: format!("non-finite payload value {v}"),
            });
        }
        data.push(v);
    }
    Ok(Tensor { dims, data })
}

pub fn write_tensor(path: impl AsRef<Path>, t: &Tensor) -> Result<()> {
    super::write_bytes(path.as_ref(), &encode_tensor(t)?)
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    read_tensor_with(path, NonFinite::Reject)
}

pub fn read_tensor_with(path: impl AsRef<Path>, non_finite: NonFinite) -> Result<Tensor> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_tensor(&bytes, non_finite)
}
