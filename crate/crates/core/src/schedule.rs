//! Temporal-spatial mask scheduling.
//!
//! Normalized time `t` runs from 1 (pure noise) toward 0:
//!
//! * `t > t_early`: center Gaussian prior (attention is ignored),
//! * `t_late < t <= t_early`: the extracted attention mask,
//! * `t <= t_late`: the extracted mask lifted to a floor of `f_late`.
//!
//! A nonzero `global_floor` is then applied in every phase.

use std::fmt;

use serde::Serialize;

use crate::attention::AttentionOutput;
use crate::config::ScheduleConfig;
use crate::error::{Error, Result};
use crate::extract::extract_mask;
use crate::grid::PatchGrid;
use crate::mask::SpatialMask;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Early,
    Mid,
    Late,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::Early, Phase::Mid, Phase::Late];

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Early => "early",
            Phase::Mid => "mid",
            Phase::Late => "late",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::Argument(format!("timestep {t} outside (0, 1]")));
    }
    Ok(())
}

pub fn phase_of(t: f64, cfg: &ScheduleConfig) -> Result<Phase> {
    check_time(t)?;
    Ok(if t > cfg.t_early {
        Phase::Early
    } else if t > cfg.t_late {
        Phase::Mid
    } else {
        Phase::Late
    })
}

/// `exp(-((i - c_r)^2 + (j - c_c)^2) / (2 sigma_c^2 max(h, w)^2))`.
///
/// With `symmetric_center` the center is `((h-1)/2, (w-1)/2)`, the exact
/// middle of the cell grid; otherwise it is `(h/2, w/2)`.
pub fn center_gaussian_prior(
    grid: PatchGrid,
    sigma_c: f64,
    symmetric_center: bool,
) -> Result<SpatialMask> {
    if !(sigma_c > 0.0 && sigma_c.is_finite()) {
        return Err(Error::Argument(format!("sigma_c = {sigma_c} must be positive")));
    }
    let (h, w) = (grid.height() as f64, grid.width() as f64);
    let (cr, cc) = if symmetric_center {
        ((h - 1.0) / 2.0, (w - 1.0) / 2.0)
    } else {
        (h / 2.0, w / 2.0)
    };
    let extent = h.max(w);
    let denom = 2.0 * sigma_c * sigma_c * extent * extent;
    let values = (0..grid.patch_count())
        .map(|idx| {
            let (i, j) = (idx / grid.width(), idx % grid.width());
            let (di, dj) = (i as f64 - cr, j as f64 - cc);
            (-(di * di + dj * dj) / denom).exp()
        })
        .collect();
    SpatialMask::from_clamped(grid, values)
}

fn check_floor(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && (0.0..=1.0).contains(&v)) {
        return Err(Error::Argument(format!("{name} = {v} must lie in [0, 1]")));
    }
    Ok(())
}

fn lift(mask: &SpatialMask, floor: f64) -> SpatialMask {
    mask.map(|m| floor + (1.0 - floor) * m)
}

/// `f_late + (1 - f_late) * mid`.
pub fn relax_late(mid_mask: &SpatialMask, f_late: f64) -> Result<SpatialMask> {
    check_floor("f_late", f_late)?;
    Ok(lift(mid_mask, f_late))
}

/// `floor + (1 - floor) * mask`; `floor = 1` is uniform injection.
pub fn apply_global_floor(mask: &SpatialMask, floor: f64) -> Result<SpatialMask> {
    check_floor("global_floor", floor)?;
    if floor == 0.0 {
        return Ok(mask.clone());
    }
    Ok(lift(mask, floor))
}

/// The mask `M_t` for normalized time `t`, with the phase that produced it.
pub fn schedule_mask_with_phase(
    t: f64,
    o: &AttentionOutput,
    cfg: &ScheduleConfig,
) -> Result<(Phase, SpatialMask)> {
    let phase = phase_of(t, cfg)?;
    let mask = match phase {
        Phase::Early => center_gaussian_prior(o.grid(), cfg.sigma_c, cfg.symmetric_center)?,
        Phase::Mid => extract_mask(o, cfg)?,
        Phase::Late => relax_late(&extract_mask(o, cfg)?, cfg.f_late)?,
    };
    Ok((phase, apply_global_floor(&mask, cfg.global_floor)?))
}

pub fn schedule_mask(t: f64, o: &AttentionOutput, cfg: &ScheduleConfig) -> Result<SpatialMask> {
    schedule_mask_with_phase(t, o, cfg).map(|(_, m)| m)
}
