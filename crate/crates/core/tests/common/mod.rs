//! Brute-force reference implementations, independent of the library paths
//! they check.

#![allow(dead_code)]

/// Direct 2D convolution with a tabulated `size x size` Gaussian and edge
/// replication, summing all `size^2` taps per cell.
pub fn blur_oracle(values: &[f64], h: usize, w: usize, size: usize, sigma: f64) -> Vec<f64> {
    let half = (size / 2) as isize;
    let mut kernel = vec![0.0; size * size];
    for dy in 0..size {
        for dx in 0..size {
            let y = dy as f64 - half as f64;
            let x = dx as f64 - half as f64;
            kernel[dy * size + dx] = (-(x * x + y * y) / (2.0 * sigma * sigma)).exp();
        }
    }
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= total);

    let mut out = vec![0.0; h * w];
    for r in 0..h as isize {
        for c in 0..w as isize {
            let mut acc = 0.0;
            for dy in -half..=half {
                for dx in -half..=half {
                    let rr = (r + dy).clamp(0, h as isize - 1) as usize;
                    let cc = (c + dx).clamp(0, w as isize - 1) as usize;
                    acc += kernel[((dy + half) as usize) * size + (dx + half) as usize]
                        * values[rr * w + cc];
                }
            }
            out[r as usize * w + c as usize] = acc;
        }
    }
    out
}

/// Exhaustive per-cell maximum over the square window.
pub fn dilate_oracle(values: &[f64], h: usize, w: usize, radius: usize) -> Vec<f64> {
    let mut out = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            let mut best = f64::NEG_INFINITY;
            for rr in 0..h {
                for cc in 0..w {
                    if rr.abs_diff(r) <= radius && cc.abs_diff(c) <= radius {
                        best = best.max(values[rr * w + cc]);
                    }
                }
            }
            out[r * w + c] = best;
        }
    }
    out
}

pub fn soft_hard_oracle(m: f64, beta: f64, tau: f64) -> f64 {
    if m > tau {
        beta * m + (1.0 - beta)
    } else {
        beta * m
    }
}
