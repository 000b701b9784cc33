//! Spatial mask extraction from cross-attention response magnitudes.
//!
//! Pipeline: per-patch L2 norm, min-max normalization, Gaussian smoothing,
//! soft-hard blend, grayscale dilation. No stage renormalizes; each one maps
//! `[0, 1]` grids into `[0, 1]` grids.

use serde::Serialize;

use crate::attention::AttentionOutput;
use crate::config::ScheduleConfig;
use crate::error::{Error, Result};
use crate::grid::PatchGrid;
use crate::mask::SpatialMask;
use crate::par;

/// Raw per-patch response norms and their min-max normalization.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RelevanceMap {
    pub grid: PatchGrid,
    pub raw_norms: Vec<f64>,
    pub normalized: Vec<f64>,
}

impl RelevanceMap {
    /// `true` when every patch had the same norm and normalization fell back to ones.
    pub fn is_degenerate(&self) -> bool {
        let (lo, hi) = min_max(&self.raw_norms);
        lo == hi
    }

    pub fn to_mask(&self) -> SpatialMask {
        SpatialMask::from_clamped(self.grid, self.normalized.clone())
            .expect("normalized relevance is finite")
    }
}

fn min_max(xs: &[f64]) -> (f64, f64) {
    xs.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

/// L2 norm of every patch row, min-max normalized. Constant norms map to all ones.
pub fn l2_relevance(o: &AttentionOutput) -> Result<RelevanceMap> {
    let data = o.data();
    if !data.is_finite() {
        return Err(Error::Numeric("attention output contains NaN or Inf".into()));
    }
    let raw_norms = par::map_indices(data.rows(), |i| {
        data.row(i).iter().map(|x| x * x).sum::<f64>().sqrt()
    });
    let (lo, hi) = min_max(&raw_norms);
    let normalized = if hi > lo {
        let span = hi - lo;
        raw_norms
            .iter()
            .map(|r| ((r - lo) / span).clamp(0.0, 1.0))
            .collect()
    } else {
        vec![1.0; raw_norms.len()]
    };
    Ok(RelevanceMap {
        grid: o.grid(),
        raw_norms,
        normalized,
    })
}

/// Normalized 1D Gaussian taps for an odd `size`.
pub fn gaussian_kernel_1d(size: usize, sigma: f64) -> Result<Vec<f64>> {
    if size.is_multiple_of(2) {
        return Err(Error::Argument(format!("blur kernel size {size} must be odd")));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Argument(format!("blur sigma {sigma} must be positive")));
    }
    let half = (size / 2) as f64;
    let taps: Vec<f64> = (0..size)
        .map(|i| {
            let x = i as f64 - half;
            (-(x * x) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    Ok(taps.into_iter().map(|w| w / sum).collect())
}

/// Outer product of the 1D taps, row-major `size x size`.
pub fn gaussian_kernel_2d(size: usize, sigma: f64) -> Result<Vec<f64>> {
    let k = gaussian_kernel_1d(size, sigma)?;
    Ok(k.iter()
        .flat_map(|a| k.iter().map(move |b| a * b))
        .collect())
}

#[inline]
fn clamp_index(i: isize, len: usize) -> usize {
    i.clamp(0, len as isize - 1) as usize
}

/// Separable Gaussian smoothing with edge replication.
pub fn gaussian_blur(mask: &SpatialMask, kernel_size: usize, sigma: f64) -> Result<SpatialMask> {
    let taps = gaussian_kernel_1d(kernel_size, sigma)?;
    let grid = mask.grid();
    let (h, w) = (grid.height(), grid.width());
    let half = (kernel_size / 2) as isize;
    let src = mask.values();

    let mut horizontal = vec![0.0; h * w];
    par::for_each_row_mut(&mut horizontal, w, |r, out| {
        let row = &src[r * w..(r + 1) * w];
        for (c, o) in out.iter_mut().enumerate() {
            *o = taps
                .iter()
                .enumerate()
                .map(|(k, wt)| wt * row[clamp_index(c as isize + k as isize - half, w)])
                .sum();
        }
    });

    let mut out = vec![0.0; h * w];
    par::for_each_row_mut(&mut out, w, |r, out_row| {
        for (c, o) in out_row.iter_mut().enumerate() {
            *o = taps
                .iter()
                .enumerate()
                .map(|(k, wt)| {
                    let rr = clamp_index(r as isize + k as isize - half, h);
                    wt * horizontal[rr * w + c]
                })
                .sum();
        }
    });
    SpatialMask::from_clamped(grid, out)
}

/// `beta * m + (1 - beta) * [m > tau]`, elementwise.
pub fn soft_hard_combine(mask: &SpatialMask, beta: f64, tau: f64) -> Result<SpatialMask> {
    for (name, v) in [("beta", beta), ("tau", tau)] {
        if !(v.is_finite() && (0.0..=1.0).contains(&v)) {
            return Err(Error::Argument(format!("{name} = {v} must lie in [0, 1]")));
        }
    }
    Ok(mask.map(|m| {
        let hard = if m > tau { 1.0 } else { 0.0 };
        beta * m + (1.0 - beta) * hard
    }))
}

/// Grayscale dilation: max over the `(2r+1) x (2r+1)` window, truncated at borders.
pub fn dilate(mask: &SpatialMask, radius: usize) -> SpatialMask {
    if radius == 0 {
        return mask.clone();
    }
    let grid = mask.grid();
    let (h, w) = (grid.height(), grid.width());
    let src = mask.values();

    let window = |center: usize, len: usize| {
        center.saturating_sub(radius)..(center + radius + 1).min(len)
    };

    let mut horizontal = vec![0.0; h * w];
    par::for_each_row_mut(&mut horizontal, w, |r, out| {
        let row = &src[r * w..(r + 1) * w];
        for (c, o) in out.iter_mut().enumerate() {
            *o = row[window(c, w)].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        }
    });
    let mut out = vec![0.0; h * w];
    par::for_each_row_mut(&mut out, w, |r, out_row| {
        for (c, o) in out_row.iter_mut().enumerate() {
            *o = window(r, h)
                .map(|rr| horizontal[rr * w + c])
                .fold(f64::NEG_INFINITY, f64::max);
        }
    });
    SpatialMask::from_clamped(grid, out).expect("dilation of a valid mask is valid")
}

/// Full extraction: relevance, blur, soft-hard blend, dilation.
pub fn extract_mask(o: &AttentionOutput, cfg: &ScheduleConfig) -> Result<SpatialMask> {
    let relevance = l2_relevance(o)?.to_mask();
    let smooth = gaussian_blur(&relevance, cfg.blur_kernel_size, cfg.blur_sigma)?;
    let combined = soft_hard_combine(&smooth, cfg.beta, cfg.tau)?;
    Ok(dilate(&combined, cfg.dilation_radius))
}
