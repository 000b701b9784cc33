use std::path::Path;

use crate::error::{Error, Result};
use crate::mask::SpatialMask;

/// Binary P5 PGM, maxval 255, `round_half_up(255 * v)` per cell, each cell
/// drawn as an `upscale x upscale` block.
pub fn encode_pgm(mask: &SpatialMask, upscale: usize) -> Result<Vec<u8>> {
    if upscale == 0 {
        return Err(Error::Argument("upscale factor must be positive".into()));
    }
    let g = mask.grid();
    let (w, h) = (g.width() * upscale, g.height() * upscale);
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.reserve(w * h);
    for r in 0..h {
        for c in 0..w {
            let v = mask.get(r / upscale, c / upscale);
            out.push((255.0 * v + 0.5).floor().clamp(0.0, 255.0) as u8);
        }
    }
    Ok(out)
}

pub fn write_mask_pgm(mask: &SpatialMask, path: impl AsRef<Path>, upscale: usize) -> Result<()> {
    super::write_bytes(path.as_ref(), &encode_pgm(mask, upscale)?)
}
