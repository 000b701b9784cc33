use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::PatchGrid;

/// Per-patch injection weights in `[0, 1]`, stored row-major over `grid`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpatialMask {
    grid: PatchGrid,
    values: Vec<f64>,
}

impl SpatialMask {
    /// Validates that every value is finite and within `[0, 1]`.
    pub fn new(grid: PatchGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.patch_count() {
            return Err(Error::Shape(format!(
                "{} mask values for a {grid} grid",
                values.len()
            )));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && (0.0..=1.0).contains(*v)))
        {
            return Err(Error::Invariant(format!(
                "mask value {v} at patch {i} outside [0, 1]"
            )));
        }
        Ok(Self { grid, values })
    }

    /// Builds a mask from arbitrary values, clamping into `[0, 1]`.
    /// Non-finite values are an error rather than being clamped.
    pub fn from_clamped(grid: PatchGrid, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.patch_count() {
            return Err(Error::Shape(format!(
                "{} mask values for a {grid} grid",
                values.len()
            )));
        }
        for v in values.iter_mut() {
            if !v.is_finite() {
                return Err(Error::Numeric(format!("mask value {v}")));
            }
            *v = v.clamp(0.0, 1.0);
        }
        Ok(Self { grid, values })
    }

    pub fn filled(grid: PatchGrid, value: f64) -> Result<Self> {
        Self::new(grid, vec![value; grid.patch_count()])
    }

    pub fn ones(grid: PatchGrid) -> Self {
        Self {
            grid,
            values: vec![1.0; grid.patch_count()],
        }
    }

    pub fn zeros(grid: PatchGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.patch_count()],
        }
    }

    pub fn grid(&self) -> PatchGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.grid.width() + col]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Elementwise map, clamped back into `[0, 1]`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v).clamp(0.0, 1.0)).collect(),
        }
    }

    /// `true` where every cell of `self` is `<=` the matching cell of `other`.
    pub fn le(&self, other: &SpatialMask) -> bool {
        self.grid == other.grid && self.values.iter().zip(&other.values).all(|(a, b)| a <= b)
    }
}
