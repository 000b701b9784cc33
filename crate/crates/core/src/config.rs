use serde::Serialize;

use crate::error::{Error, Result};

/// Hyperparameters of mask extraction, scheduling and injection.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScheduleConfig {
    /// Times strictly above this use the center prior.
    pub t_early: f64,
    /// Times at or below this use the relaxed mask.
    pub t_late: f64,
    /// Late-phase mask floor.
    pub f_late: f64,
    /// Spread of the center prior, relative to `max(h, w)`.
    pub sigma_c: f64,
    /// Weight of the soft mask in the soft-hard blend.
    pub beta: f64,
    /// Binarization threshold of the soft-hard blend.
    pub tau: f64,
    pub blur_kernel_size: usize,
    pub blur_sigma: f64,
    /// Half-width of the square dilation window; 1 means 3x3.
    pub dilation_radius: usize,
    /// Residual injection weight.
    pub alpha: f64,
    /// Floor applied in every phase after dispatch; 0 disables it.
    pub global_floor: f64,
    pub total_steps: usize,
    /// Center the prior at `((h-1)/2, (w-1)/2)` instead of `(h/2, w/2)`.
    pub symmetric_center: bool,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            t_early: 0.7,
            t_late: 0.3,
            f_late: 0.5,
            sigma_c: 0.3,
            beta: 0.7,
            tau: 0.3,
            blur_kernel_size: 5,
            blur_sigma: 1.5,
            dilation_radius: 1,
            alpha: 1.0,
            global_floor: 0.0,
            total_steps: 25,
            symmetric_center: true,
        }
    }
}

impl ScheduleConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v.is_finite() && (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Argument(format!("{name} = {v} must lie in [0, 1]")))
            }
        };
        if !(self.t_early > 0.0 && self.t_early <= 1.0) {
            return Err(Error::Argument(format!(
                "t_early = {} must lie in (0, 1]",
                self.t_early
            )));
        }
        if !(self.t_late >= 0.0 && self.t_late < self.t_early) {
            return Err(Error::Argument(format!(
                "t_late = {} must lie in [0, t_early)",
                self.t_late
            )));
        }
        unit("f_late", self.f_late)?;
        unit("beta", self.beta)?;
        unit("tau", self.tau)?;
        unit("global_floor", self.global_floor)?;
        if !(self.sigma_c > 0.0 && self.sigma_c.is_finite()) {
            return Err(Error::Argument(format!("sigma_c = {} must be positive", self.sigma_c)));
        }
        if !(self.blur_sigma > 0.0 && self.blur_sigma.is_finite()) {
            return Err(Error::Argument(format!(
                "blur_sigma = {} must be positive",
                self.blur_sigma
            )));
        }
        if self.blur_kernel_size.is_multiple_of(2) {
            return Err(Error::Argument(format!(
                "blur_kernel_size = {} must be odd",
                self.blur_kernel_size
            )));
        }
        if !self.alpha.is_finite() {
            return Err(Error::Argument("alpha must be finite".into()));
        }
        if self.total_steps == 0 {
            return Err(Error::Argument("total_steps must be positive".into()));
        }
        Ok(())
    }
}
