//! Single-head reference cross-attention from patch queries to identity
//! tokens. It exists so the injection path has a concrete `N x D` operand;
//! externally dumped attention outputs can be used instead.

use crate::error::{Error, Result};
use crate::grid::PatchGrid;
use crate::matrix::Matrix;
use crate::par;
use crate::rng::Rng;
use crate::states::{check_patch_rows, HiddenStates, IdentityTokens};

/// Projection weights: queries from hidden states, keys and values from tokens.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossAttentionParams {
    pub w_q: Matrix,
    pub w_k: Matrix,
    pub w_v: Matrix,
    pub head_dim: usize,
}

/// The `N x D` cross-attention result aligned with the hidden states.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionOutput {
    grid: PatchGrid,
    data: Matrix,
}

impl AttentionOutput {
    pub fn new(grid: PatchGrid, data: Matrix) -> Result<Self> {
        check_patch_rows(grid, &data)?;
        if data.cols() == 0 {
            return Err(Error::Argument("feature dimension must be positive".into()));
        }
        if !data.is_finite() {
            return Err(Error::Numeric("attention output contains NaN or Inf".into()));
        }
        Ok(Self { grid, data })
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

    pub fn row(&self, patch: usize) -> &[f64] {
        self.data.row(patch)
    }
}

/// Seeded uniform init on `[-1/sqrt(head_dim), 1/sqrt(head_dim)]`.
pub fn init_params(
    seed: u64,
    feature_dim: usize,
    token_dim: usize,
    head_dim: usize,
) -> Result<CrossAttentionParams> {
    if feature_dim == 0 || token_dim == 0 || head_dim == 0 {
        return Err(Error::Argument(format!(
            "attention dims must be positive (feature {feature_dim}, token {token_dim}, head {head_dim})"
        )));
    }
    let bound = 1.0 / (head_dim as f64).sqrt();
    let mut rng = Rng::new(seed);
    let mut draw = |rows, cols| Matrix::from_fn(rows, cols, |_, _| rng.uniform(-bound, bound));
    let w_q = draw(feature_dim, head_dim);
    let w_k = draw(token_dim, head_dim);
    let w_v = draw(token_dim, feature_dim);
    Ok(CrossAttentionParams {
        w_q,
        w_k,
        w_v,
        head_dim,
    })
}

/// Max-subtracted softmax.
pub fn softmax_row(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.is_empty() {
        return Err(Error::Argument("softmax of an empty vector".into()));
    }
    if logits.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("softmax logits must be finite".into()));
    }
    let mut out = logits.to_vec();
    softmax_in_place(&mut out);
    Ok(out)
}

fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in row.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in row.iter_mut() {
        *x /= sum;
    }
}

/// Row-softmax of `logits` (`N x tokens`) applied to `values` (`tokens x D`).
pub fn attend(logits: &Matrix, values: &Matrix) -> Result<Matrix> {
    if !logits.is_finite() {
        return Err(Error::Numeric("attention logits must be finite".into()));
    }
    let mut weights = logits.clone();
    par::for_each_row_mut(weights.as_mut_slice(), logits.cols(), |_, row| {
        softmax_in_place(row)
    });
    weights.matmul(values)
}

/// Softmax-normalized attention weights, one row per patch.
pub fn attention_weights(
    h: &HiddenStates,
    z: &IdentityTokens,
    p: &CrossAttentionParams,
) -> Result<Matrix> {
    let mut logits = attention_logits(h, z, p)?;
    par::for_each_row_mut(logits.as_mut_slice(), z.token_count(), |_, row| {
        softmax_in_place(row)
    });
    Ok(logits)
}

fn attention_logits(
    h: &HiddenStates,
    z: &IdentityTokens,
    p: &CrossAttentionParams,
) -> Result<Matrix> {
    check_shapes(h, z, p)?;
    let q = h.data().matmul(&p.w_q)?;
    let k = z.data().matmul(&p.w_k)?;
    let mut logits = q.matmul_transposed(&k)?;
    let scale = 1.0 / (p.head_dim as f64).sqrt();
    logits.as_mut_slice().iter_mut().for_each(|x| *x *= scale);
    if !logits.is_finite() {
        return Err(Error::Numeric("attention logits overflowed".into()));
    }
    Ok(logits)
}

/// `softmax(h W_q (z W_k)^T / sqrt(d_k)) z W_v`.
pub fn cross_attention(
    h: &HiddenStates,
    z: &IdentityTokens,
    p: &CrossAttentionParams,
) -> Result<AttentionOutput> {
    let logits = attention_logits(h, z, p)?;
    let v = z.data().matmul(&p.w_v)?;
    let out = attend(&logits, &v)?;
    AttentionOutput::new(h.grid(), out)
}

fn check_shapes(h: &HiddenStates, z: &IdentityTokens, p: &CrossAttentionParams) -> Result<()> {
    let d = h.dim();
    let e = z.token_dim();
    let k = p.head_dim;
    let ok = p.w_q.rows() == d
        && p.w_q.cols() == k
        && p.w_k.rows() == e
        && p.w_k.cols() == k
        && p.w_v.rows() == e
        && p.w_v.cols() == d;
    if !ok {
        return Err(Error::Shape(format!(
            "params w_q {}x{}, w_k {}x{}, w_v {}x{} incompatible with feature dim {d}, token dim {e}, head dim {k}",
            p.w_q.rows(),
            p.w_q.cols(),
            p.w_k.rows(),
            p.w_k.cols(),
            p.w_v.rows(),
            p.w_v.cols()
        )));
    }
    if !(p.w_q.is_finite() && p.w_k.is_finite() && p.w_v.is_finite()) {
        return Err(Error::Numeric("attention params contain NaN or Inf".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(seed: u64, tokens: usize) -> (HiddenStates, IdentityTokens, CrossAttentionParams) {
        let grid = PatchGrid::new(3, 4).unwrap();
        let mut rng = Rng::new(seed);
        let h = HiddenStates::random(grid, 8, &mut rng).unwrap();
        let z = IdentityTokens::random(tokens, 16, &mut rng).unwrap();
        let p = init_params(seed + 100, 8, 16, 4).unwrap();
        (h, z, p)
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = init_params(7, 64, 128, 32).unwrap();
        let b = init_params(7, 64, 128, 32).unwrap();
        assert_eq!(a, b);
        let c = init_params(8, 64, 128, 32).unwrap();
        assert_ne!(a.w_q, c.w_q);
        let bound = 1.0 / 32f64.sqrt();
        for m in [&a.w_q, &a.w_k, &a.w_v] {
            assert!(m.as_slice().iter().all(|x| x.abs() <= bound));
        }
        assert!(init_params(7, 0, 128, 32).is_err());
    }

    #[test]
    fn softmax_examples() {
        let s = softmax_row(&[0.0, 0.0, 0.0]).unwrap();
        assert!(s.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
        assert_eq!(softmax_row(&[1000.0, 1000.0]).unwrap(), vec![0.5, 0.5]);
        let s = softmax_row(&[0.0, 3f64.ln()]).unwrap();
        assert!((s[0] - 0.25).abs() < 1e-15 && (s[1] - 0.75).abs() < 1e-15);
        assert!(matches!(softmax_row(&[]), Err(Error::Argument(_))));
        assert!(matches!(softmax_row(&[f64::NAN]), Err(Error::Numeric(_))));
    }

    #[test]
    fn single_token_returns_value_projection() {
        let (h, z, p) = setup(3, 1);
        let out = cross_attention(&h, &z, &p).unwrap();
        let v = z.data().matmul(&p.w_v).unwrap();
        for i in 0..h.grid().patch_count() {
            assert_eq!(out.row(i), v.row(0));
        }
    }

    #[test]
    fn weights_rows_sum_to_one() {
        let (h, z, p) = setup(5, 6);
        let w = attention_weights(&h, &z, &p).unwrap();
        for r in 0..w.rows() {
            let s: f64 = w.row(r).iter().sum();
            assert!((s - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn output_lies_in_value_hull() {
        let (h, z, p) = setup(11, 5);
        let out = cross_attention(&h, &z, &p).unwrap();
        let v = z.data().matmul(&p.w_v).unwrap();
        for j in 0..v.cols() {
            let lo = (0..v.rows()).map(|k| v.get(k, j)).fold(f64::INFINITY, f64::min);
            let hi = (0..v.rows()).map(|k| v.get(k, j)).fold(f64::NEG_INFINITY, f64::max);
            for i in 0..out.data().rows() {
                let x = out.data().get(i, j);
                assert!(x >= lo - 1e-6 && x <= hi + 1e-6);
            }
        }
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let (h, z, _) = setup(1, 4);
        let wrong = init_params(1, 9, 16, 4).unwrap();
        assert!(matches!(cross_attention(&h, &z, &wrong), Err(Error::Shape(_))));
    }
}
