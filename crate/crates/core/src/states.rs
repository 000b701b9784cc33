//! Per-patch feature matrices: hidden states and identity tokens.

use crate::error::{Error, Result};
use crate::grid::PatchGrid;
use crate::matrix::Matrix;
use crate::rng::Rng;

/// Token count of the reference identity encoder.
pub const DEFAULT_TOKEN_COUNT: usize = 32;
/// Token width of the reference identity encoder.
pub const DEFAULT_TOKEN_DIM: usize = 2048;

/// `N x D` hidden states, one row per patch of `grid`.
#[derive(Clone, Debug, PartialEq)]
pub struct HiddenStates {
    grid: PatchGrid,
    data: Matrix,
}

impl HiddenStates {
    pub fn new(grid: PatchGrid, data: Matrix) -> Result<Self> {
        check_patch_rows(grid, &data)?;
        if data.cols() == 0 {
            return Err(Error::Argument("feature dimension must be positive".into()));
        }
        if !data.is_finite() {
            return Err(Error::Numeric("hidden states contain NaN or Inf".into()));
        }
        Ok(Self { grid, data })
    }

    pub fn zeros(grid: PatchGrid, dim: usize) -> Result<Self> {
        Self::new(grid, Matrix::zeros(grid.patch_count(), dim))
    }

    /// Standard-normal entries drawn from `rng`.
    pub fn random(grid: PatchGrid, dim: usize, rng: &mut Rng) -> Result<Self> {
        Self::new(
            grid,
            Matrix::from_fn(grid.patch_count(), dim, |_, _| rng.normal()),
        )
    }

    pub fn grid(&self) -> PatchGrid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.data.cols()
    }

    pub fn data(&self) -> &Matrix {
        &self.data
    }

    pub fn into_data(self) -> Matrix {
        self.data
    }
}

/// `token_count x token_dim` identity embedding.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentityTokens {
    data: Matrix,
}

impl IdentityTokens {
    pub fn new(data: Matrix) -> Result<Self> {
        if data.rows() == 0 || data.cols() == 0 {
            return Err(Error::Argument(format!(
                "identity tokens must be non-empty, got {}x{}",
                data.rows(),
                data.cols()
            )));
        }
        if !data.is_finite() {
            return Err(Error::Numeric("identity tokens contain NaN or Inf".into()));
        }
        Ok(Self { data })
    }

    pub fn random(token_count: usize, token_dim: usize, rng: &mut Rng) -> Result<Self> {
        Self::new(Matrix::from_fn(token_count, token_dim, |_, _| rng.normal()))
    }

    pub fn token_count(&self) -> usize {
        self.data.rows()
    }

    pub fn token_dim(&self) -> usize {
        self.data.cols()
    }

    pub fn data(&self) -> &Matrix {
        &self.data
    }
}

pub(crate) fn check_patch_rows(grid: PatchGrid, data: &Matrix) -> Result<()> {
    if data.rows() != grid.patch_count() {
        return Err(Error::Shape(format!(
            "{} rows do not match the {} patches of a {grid} grid",
            data.rows(),
            grid.patch_count()
        )));
    }
    Ok(())
}
