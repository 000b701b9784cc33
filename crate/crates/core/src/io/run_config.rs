//! Flat `key = value` run configuration with `#` comments.
//!
//! Keys are the [`ScheduleConfig`] field names plus the scenario keys
//! `grid_h`, `grid_w`, `feature_dim`, `face_norm_ratio`, `base_norm`,
//! `noise_scale`, `seed` and `face_region`. Unknown keys are an error.
//!
//! `face_region` accepts `default`, `ellipse <row> <col> <semi_rows> <semi_cols>`,
//! `rect <row0> <col0> <row1> <col1>` (half-open) or `cells <i> <j> ...`.

use std::path::Path;
use std::str::FromStr;

use crate::config::ScheduleConfig;
use crate::error::{Error, Result};
use crate::grid::PatchGrid;
use crate::harness::{PatchSet, SyntheticScenario};

#[derive(Clone, Debug, PartialEq)]
pub enum FaceRegionSpec {
    Default,
    Ellipse {
        center_row: f64,
        center_col: f64,
        semi_rows: f64,
        semi_cols: f64,
    },
    Rect {
        row0: usize,
        col0: usize,
        row1: usize,
        col1: usize,
    },
    Cells(Vec<usize>),
}

impl FaceRegionSpec {
    pub fn resolve(&self, grid: PatchGrid) -> Result<PatchSet> {
        match self {
            FaceRegionSpec::Default => Ok(PatchSet::default_face(grid)),
            &FaceRegionSpec::Ellipse {
                center_row,
                center_col,
                semi_rows,
                semi_cols,
            } => PatchSet::ellipse(grid, center_row, center_col, semi_rows, semi_cols),
            &FaceRegionSpec::Rect {
                row0,
                col0,
                row1,
                col1,
            } => PatchSet::rect(grid, row0, col0, row1, col1),
            FaceRegionSpec::Cells(cells) => PatchSet::new(grid, cells.clone()),
        }
    }
}

impl FromStr for FaceRegionSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let mut parts = s.split(|c: char| c.is_whitespace() || c == ',').filter(|p| !p.is_empty());
        let kind = parts.next().ok_or("empty face_region")?;
        let args: Vec<&str> = parts.collect();
        fn nums<T: FromStr>(args: &[&str], n: usize, kind: &str) -> std::result::Result<Vec<T>, String> {
            if args.len() != n {
                return Err(format!("face_region {kind} takes {n} numbers, got {}", args.len()));
            }
            args.iter()
                .map(|a| a.parse().map_err(|_| format!("bad number {a:?} in face_region")))
                .collect()
        }
        match kind {
            "default" if args.is_empty() => Ok(FaceRegionSpec::Default),
            "ellipse" => {
                let v: Vec<f64> = nums(&args, 4, kind)?;
                Ok(FaceRegionSpec::Ellipse {
                    center_row: v[0],
                    center_col: v[1],
                    semi_rows: v[2],
                    semi_cols: v[3],
                })
            }
            "rect" => {
                let v: Vec<usize> = nums(&args, 4, kind)?;
                Ok(FaceRegionSpec::Rect {
                    row0: v[0],
                    col0: v[1],
                    row1: v[2],
                    col1: v[3],
                })
            }
            "cells" => nums(&args, args.len(), kind).map(FaceRegionSpec::Cells),
            _ => Err(format!("unknown face_region form {s:?}")),
        }
    }
}

/// Schedule hyperparameters plus the synthetic scenario they run on.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub schedule: ScheduleConfig,
    pub grid_h: usize,
    pub grid_w: usize,
    pub feature_dim: usize,
    pub face_norm_ratio: f64,
    pub base_norm: f64,
    pub noise_scale: f64,
    pub seed: u64,
    pub face_region: FaceRegionSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schedule: ScheduleConfig::default(),
            grid_h: 16,
            grid_w: 16,
            feature_dim: 64,
            face_norm_ratio: 4.0,
            base_norm: 1.0,
            noise_scale: 1.0,
            seed: 0,
            face_region: FaceRegionSpec::Default,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("invalid value {value:?} for {key}"))
}

impl RunConfig {
    pub const KEYS: [&'static str; 21] = [
        "t_early",
        "t_late",
        "f_late",
        "sigma_c",
        "beta",
        "tau",
        "blur_kernel_size",
        "blur_sigma",
        "dilation_radius",
        "alpha",
        "global_floor",
        "total_steps",
        "symmetric_center",
        "grid_h",
        "grid_w",
        "feature_dim",
        "face_norm_ratio",
        "base_norm",
        "noise_scale",
        "seed",
        "face_region",
    ];

    /// Sets one field by its config-file key.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let s = &mut self.schedule;
        match key {
            "t_early" => s.t_early = parse(key, value)?,
            "t_late" => s.t_late = parse(key, value)?,
            "f_late" => s.f_late = parse(key, value)?,
            "sigma_c" => s.sigma_c = parse(key, value)?,
            "beta" => s.beta = parse(key, value)?,
            "tau" => s.tau = parse(key, value)?,
            "blur_kernel_size" => s.blur_kernel_size = parse(key, value)?,
            "blur_sigma" => s.blur_sigma = parse(key, value)?,
            "dilation_radius" => s.dilation_radius = parse(key, value)?,
            "alpha" => s.alpha = parse(key, value)?,
            "global_floor" => s.global_floor = parse(key, value)?,
            "total_steps" => s.total_steps = parse(key, value)?,
            "symmetric_center" => s.symmetric_center = parse(key, value)?,
            "grid_h" => self.grid_h = parse(key, value)?,
            "grid_w" => self.grid_w = parse(key, value)?,
            "feature_dim" => self.feature_dim = parse(key, value)?,
            "face_norm_ratio" => self.face_norm_ratio = parse(key, value)?,
            "base_norm" => self.base_norm = parse(key, value)?,
            "noise_scale" => self.noise_scale = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "face_region" => self.face_region = value.parse()?,
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Parses config text over the defaults, then validates the result.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = std::collections::HashSet::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
                line,
                reason: format!("expected `key = value`, got {content:?}"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::Config {
                    line,
                    reason: format!("duplicate key {key:?}"),
                });
            }
            cfg.set(key, value)
                .map_err(|reason| Error::Config { line, reason })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn grid(&self) -> Result<PatchGrid> {
        PatchGrid::new(self.grid_h, self.grid_w)
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        self.scenario()?.validate()
    }

    pub fn scenario(&self) -> Result<SyntheticScenario> {
        let grid = self.grid()?;
        Ok(SyntheticScenario {
            grid,
            face_region: self.face_region.resolve(grid)?,
            face_norm_ratio: self.face_norm_ratio,
            base_norm: self.base_norm,
            noise_scale: self.noise_scale,
            feature_dim: self.feature_dim,
            seed: self.seed,
        })
    }
}
