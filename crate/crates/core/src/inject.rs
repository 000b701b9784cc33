//! Residual identity injection and its energy accounting.

use crate::attention::AttentionOutput;
use crate::error::{Error, Result};
use crate::mask::SpatialMask;
use crate::matrix::Matrix;
use crate::par;
use crate::states::HiddenStates;

fn check_pair(h: &HiddenStates, o: &AttentionOutput) -> Result<()> {
    if h.grid() != o.grid() || h.dim() != o.dim() {
        return Err(Error::Shape(format!(
            "hidden states {} x {} vs attention output {} x {}",
            h.grid(),
            h.dim(),
            o.grid(),
            o.dim()
        )));
    }
    Ok(())
}

fn inject_rows(h: &HiddenStates, o: &AttentionOutput, weight: impl Fn(usize) -> f64 + Sync + Send) -> Result<HiddenStates> {
    let dim = h.dim();
    let mut out = h.data().clone();
    par::for_each_row_mut(out.as_mut_slice(), dim, |i, row| {
        let scale = weight(i);
        for (x, &a) in row.iter_mut().zip(o.row(i)) {
            *x += scale * a;
        }
    });
    HiddenStates::new(h.grid(), out)
}

/// `h + alpha * o` at every patch.
pub fn inject_uniform(h: &HiddenStates, o: &AttentionOutput, alpha: f64) -> Result<HiddenStates> {
    check_pair(h, o)?;
    inject_rows(h, o, |_| alpha * 1.0)
}

/// `h + alpha * M_i * o_i`; the patch's mask value scales its whole feature row.
///
/// With an all-ones mask this is bit-identical to [`inject_uniform`].
pub fn inject_masked(
    h: &HiddenStates,
    o: &AttentionOutput,
    mask: &SpatialMask,
    alpha: f64,
) -> Result<HiddenStates> {
    check_pair(h, o)?;
    if mask.grid() != h.grid() {
        return Err(Error::Shape(format!(
            "mask grid {} vs hidden-state grid {}",
            mask.grid(),
            h.grid()
        )));
    }
    if let Some(v) = mask.values().iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Invariant(format!("mask value {v} outside [0, 1]")));
    }
    inject_rows(h, o, |i| alpha * mask.at(i))
}

/// `sum over region of alpha * M_i * ||o_i||_2`.
pub fn injection_energy(
    o: &AttentionOutput,
    mask: &SpatialMask,
    alpha: f64,
    region: &[usize],
) -> Result<f64> {
    if mask.grid() != o.grid() {
        return Err(Error::Shape(format!(
            "mask grid {} vs attention grid {}",
            mask.grid(),
            o.grid()
        )));
    }
    let n = o.grid().patch_count();
    let mut total = 0.0;
    for &i in region {
        if i >= n {
            return Err(Error::Bounds(format!("patch {i} outside grid of {n} patches")));
        }
        let norm = o.row(i).iter().map(|x| x * x).sum::<f64>().sqrt();
        total += alpha * mask.at(i) * norm;
    }
    Ok(total)
}

/// Difference `after - before`, used for region-split checks.
pub fn residual(before: &HiddenStates, after: &HiddenStates) -> Result<Matrix> {
    if before.grid() != after.grid() || before.dim() != after.dim() {
        return Err(Error::Shape("residual of mismatched hidden states".into()));
    }
    let data = before
        .data()
        .as_slice()
        .iter()
        .zip(after.data().as_slice())
        .map(|(b, a)| a - b)
        .collect();
    Matrix::from_vec(before.data().rows(), before.dim(), data)
}
