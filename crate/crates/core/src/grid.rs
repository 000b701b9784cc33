//! Patch-grid geometry and the sampler-step to timestep mapping.

use serde::Serialize;

use crate::error::{Error, Result};

/// The `height x width` arrangement of transformer patches.
///
/// Patches are flattened row-major: `index = row * width + col`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct PatchGrid {
    height: usize,
    width: usize,
}

impl PatchGrid {
    pub fn new(height: usize, width: usize) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Argument(format!(
                "patch grid must be at least 1x1, got {height}x{width}"
            )));
        }
        Ok(Self { height, width })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn patch_count(&self) -> usize {
        self.height * self.width
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        row < self.height && col < self.width
    }

    pub fn index_of(&self, row: usize, col: usize) -> Result<usize> {
        if !self.contains(row, col) {
            return Err(Error::Bounds(format!(
                "({row}, {col}) outside {}x{} grid",
                self.height, self.width
            )));
        }
        Ok(row * self.width + col)
    }

    pub fn coords_of(&self, index: usize) -> Result<(usize, usize)> {
        if index >= self.patch_count() {
            return Err(Error::Bounds(format!(
                "patch index {index} outside grid of {} patches",
                self.patch_count()
            )));
        }
        Ok((index / self.width, index % self.width))
    }
}

impl std::fmt::Display for PatchGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.height, self.width)
    }
}

/// Maps sampler step `k` of `T` onto the schedule's normalized time `t = 1 - k/T`.
///
/// The first step sits at `t = 1` (pure noise); the last at `t = 1/T`.
pub fn normalized_timestep(step_index: usize, total_steps: usize) -> Result<f64> {
    if step_index >= total_steps {
        return Err(Error::Bounds(format!(
            "step {step_index} outside trajectory of {total_steps} steps"
        )));
    }
    Ok(1.0 - step_index as f64 / total_steps as f64)
}
