//! Synthetic denoising trajectories with a planted face region.
//!
//! Each step synthesizes an attention output whose face rows are
//! `face_norm_ratio` times longer than background rows, buried under
//! isotropic noise that shrinks with `t`. The scheduled mask is scored
//! against the planted region and its injected energy is compared with the
//! uniform (all-ones mask) baseline.

use std::hint::black_box;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::attention::{cross_attention, init_params, AttentionOutput};
use crate::config::ScheduleConfig;
use crate::error::{Error, Result};
use crate::grid::{normalized_timestep, PatchGrid};
use crate::inject::{inject_masked, injection_energy};
use crate::mask::SpatialMask;
use crate::matrix::Matrix;
use crate::par;
use crate::rng::Rng;
use crate::schedule::{phase_of, schedule_mask_with_phase, Phase};
use crate::states::{HiddenStates, IdentityTokens};

/// Sorted, duplicate-free set of patch indices on a grid.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PatchSet {
    grid: PatchGrid,
    indices: Vec<usize>,
}

impl PatchSet {
    pub fn new(grid: PatchGrid, mut indices: Vec<usize>) -> Result<Self> {
        if let Some(&i) = indices.iter().find(|&&i| i >= grid.patch_count()) {
            return Err(Error::Bounds(format!("patch {i} outside {grid} grid")));
        }
        indices.sort_unstable();
        indices.dedup();
        Ok(Self { grid, indices })
    }

    /// Cells whose centers satisfy `((r - cr)/ar)^2 + ((c - cc)/ac)^2 <= 1`.
    pub fn ellipse(
        grid: PatchGrid,
        center_row: f64,
        center_col: f64,
        semi_rows: f64,
        semi_cols: f64,
    ) -> Result<Self> {
        if !(semi_rows > 0.0 && semi_cols > 0.0) {
            return Err(Error::Argument("ellipse semi-axes must be positive".into()));
        }
        let indices = (0..grid.patch_count())
            .filter(|&i| {
                let (r, c) = (i / grid.width(), i % grid.width());
                let dr = (r as f64 - center_row) / semi_rows;
                let dc = (c as f64 - center_col) / semi_cols;
                dr * dr + dc * dc <= 1.0
            })
            .collect();
        Self::new(grid, indices)
    }

    /// Half-open rectangle `[row0, row1) x [col0, col1)`.
    pub fn rect(grid: PatchGrid, row0: usize, col0: usize, row1: usize, col1: usize) -> Result<Self> {
        if row1 > grid.height() || col1 > grid.width() {
            return Err(Error::Bounds(format!(
                "rectangle [{row0},{row1})x[{col0},{col1}) exceeds {grid} grid"
            )));
        }
        let indices = (row0..row1)
            .flat_map(|r| (col0..col1).map(move |c| r * grid.width() + c))
            .collect();
        Self::new(grid, indices)
    }

    /// Ellipse inscribed in the central third of the grid, centered on cell
    /// `(h/2, w/2)`. Falls back to that single cell on tiny grids.
    pub fn default_face(grid: PatchGrid) -> Self {
        let (h, w) = (grid.height(), grid.width());
        let (cr, cc) = (h / 2, w / 2);
        let set = Self::ellipse(grid, cr as f64, cc as f64, h as f64 / 6.0, w as f64 / 6.0)
            .expect("positive semi-axes");
        if set.is_empty() {
            Self {
                grid,
                indices: vec![cr * w + cc],
            }
        } else {
            set
        }
    }

    pub fn grid(&self) -> PatchGrid {
        self.grid
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    pub fn complement(&self) -> Self {
        let indices = (0..self.grid.patch_count())
            .filter(|i| !self.contains(*i))
            .collect();
        Self {
            grid: self.grid,
            indices,
        }
    }

    /// Square dilation with window `(2r+1) x (2r+1)`, truncated at borders.
    pub fn dilate(&self, radius: usize) -> Self {
        let g = self.grid;
        let mut hit = vec![false; g.patch_count()];
        for &i in &self.indices {
            let (r, c) = (i / g.width(), i % g.width());
            for rr in r.saturating_sub(radius)..(r + radius + 1).min(g.height()) {
                for cc in c.saturating_sub(radius)..(c + radius + 1).min(g.width()) {
                    hit[rr * g.width() + cc] = true;
                }
            }
        }
        Self {
            grid: g,
            indices: (0..hit.len()).filter(|&i| hit[i]).collect(),
        }
    }
}

/// A planted face region and the signal model used to fake attention outputs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SyntheticScenario {
    pub grid: PatchGrid,
    pub face_region: PatchSet,
    pub face_norm_ratio: f64,
    pub base_norm: f64,
    pub noise_scale: f64,
    pub feature_dim: usize,
    pub seed: u64,
}

impl SyntheticScenario {
    /// Default face, 4x face/background ratio, unit base norm and noise scale.
    pub fn new(grid: PatchGrid, feature_dim: usize, seed: u64) -> Self {
        Self {
            grid,
            face_region: PatchSet::default_face(grid),
            face_norm_ratio: 4.0,
            base_norm: 1.0,
            noise_scale: 1.0,
            feature_dim,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.face_region.grid() != self.grid {
            return Err(Error::Shape("face region grid differs from scenario grid".into()));
        }
        if self.face_region.is_empty() {
            return Err(Error::Argument("face region must not be empty".into()));
        }
        if !(self.face_norm_ratio >= 1.0 && self.face_norm_ratio.is_finite()) {
            return Err(Error::Argument(format!(
                "face_norm_ratio = {} must be at least 1",
                self.face_norm_ratio
            )));
        }
        if !(self.base_norm > 0.0 && self.base_norm.is_finite()) {
            return Err(Error::Argument("base_norm must be positive".into()));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::Argument("noise_scale must be nonnegative".into()));
        }
        if self.feature_dim == 0 {
            return Err(Error::Argument("feature_dim must be positive".into()));
        }
        Ok(())
    }
}

/// Planted response: a random direction scaled to the target norm plus
/// Gaussian noise with per-coordinate std `noise_scale * t * base_norm / sqrt(D)`.
pub fn synth_attention_output(
    scn: &SyntheticScenario,
    t: f64,
    rng: &mut Rng,
) -> Result<AttentionOutput> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::Argument(format!("timestep {t} outside (0, 1]")));
    }
    let d = scn.feature_dim;
    let noise_std = scn.noise_scale * t * scn.base_norm / (d as f64).sqrt();
    let mut data = Vec::with_capacity(scn.grid.patch_count() * d);
    for i in 0..scn.grid.patch_count() {
        let target = if scn.face_region.contains(i) {
            scn.base_norm * scn.face_norm_ratio
        } else {
            scn.base_norm
        };
        let dir = rng.unit_vector(d);
        for u in dir {
            let noise = if noise_std > 0.0 { noise_std * rng.normal() } else { 0.0 };
            data.push(target * u + noise);
        }
    }
    AttentionOutput::new(scn.grid, Matrix::from_vec(scn.grid.patch_count(), d, data)?)
}

/// IoU between `mask > threshold` and `truth`; 1 when both are empty.
pub fn mask_iou(mask: &SpatialMask, truth: &PatchSet, threshold: f64) -> Result<f64> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Argument(format!("IoU threshold {threshold} outside (0, 1)")));
    }
    if mask.grid() != truth.grid() {
        return Err(Error::Shape("mask and truth grids differ".into()));
    }
    let mut inter = 0usize;
    let mut union = 0usize;
    for (i, &v) in mask.values().iter().enumerate() {
        let pred = v > threshold;
        let real = truth.contains(i);
        inter += (pred && real) as usize;
        union += (pred || real) as usize;
    }
    Ok(if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    })
}

/// Threshold used to binarize masks for IoU.
pub const IOU_THRESHOLD: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    pub step_index: usize,
    pub t: f64,
    pub phase: Phase,
    pub mask_iou: f64,
    /// Background energy under the scheduled mask over the uniform baseline's.
    pub contamination_ratio: f64,
    /// Face energy under the scheduled mask over the uniform baseline's.
    pub face_energy_ratio: f64,
    pub wall_time_mask: Duration,
    pub wall_time_injection: Duration,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseSummary {
    pub steps: usize,
    pub mean_mask_iou: f64,
    pub mean_contamination_ratio: f64,
    pub mean_face_energy_ratio: f64,
}

impl PhaseSummary {
    fn of<'a>(records: impl Iterator<Item = &'a StepRecord>) -> Option<Self> {
        let (mut n, mut iou, mut contam, mut face) = (0usize, 0.0, 0.0, 0.0);
        for r in records {
            n += 1;
            iou += r.mask_iou;
            contam += r.contamination_ratio;
            face += r.face_energy_ratio;
        }
        (n > 0).then(|| {
            let k = n as f64;
            Self {
                steps: n,
                mean_mask_iou: iou / k,
                mean_contamination_ratio: contam / k,
                mean_face_energy_ratio: face / k,
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectorySummary {
    pub early: Option<PhaseSummary>,
    pub mid: Option<PhaseSummary>,
    pub late: Option<PhaseSummary>,
    pub overall: PhaseSummary,
}

impl TrajectorySummary {
    fn of(steps: &[StepRecord]) -> Self {
        let by = |p: Phase| PhaseSummary::of(steps.iter().filter(|r| r.phase == p));
        Self {
            early: by(Phase::Early),
            mid: by(Phase::Mid),
            late: by(Phase::Late),
            overall: PhaseSummary::of(steps.iter()).expect("trajectory has at least one step"),
        }
    }

    pub fn phase(&self, phase: Phase) -> Option<&PhaseSummary> {
        match phase {
            Phase::Early => self.early.as_ref(),
            Phase::Mid => self.mid.as_ref(),
            Phase::Late => self.late.as_ref(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryReport {
    pub scenario: SyntheticScenario,
    pub config: ScheduleConfig,
    pub steps: Vec<StepRecord>,
    pub summary: TrajectorySummary,
}

impl TrajectoryReport {
    /// Equality ignoring the wall-time columns.
    pub fn same_metrics(&self, other: &TrajectoryReport) -> bool {
        let strip = |r: &TrajectoryReport| {
            r.steps
                .iter()
                .map(|s| StepRecord {
                    wall_time_mask: Duration::ZERO,
                    wall_time_injection: Duration::ZERO,
                    ..s.clone()
                })
                .collect::<Vec<_>>()
        };
        self.scenario == other.scenario
            && self.config == other.config
            && strip(self) == strip(other)
            && self.summary == other.summary
    }
}

/// Which mask a trajectory injects with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InjectionMode {
    /// All-ones mask, the spatially uniform baseline.
    Uniform,
    /// The temporal-spatial schedule.
    Scheduled,
}

struct StepContext<'a> {
    step_index: usize,
    t: f64,
    hidden: &'a HiddenStates,
    output: &'a AttentionOutput,
}

/// Drives the shared step loop: one hidden-state draw, then one attention
/// draw per step, all from a single sequential generator.
fn walk_steps(
    scn: &SyntheticScenario,
    cfg: &ScheduleConfig,
    mut visit: impl FnMut(StepContext<'_>) -> Result<()>,
) -> Result<()> {
    scn.validate()?;
    cfg.validate()?;
    let mut rng = Rng::new(scn.seed);
    let hidden = HiddenStates::random(scn.grid, scn.feature_dim, &mut rng)?;
    for k in 0..cfg.total_steps {
        let t = normalized_timestep(k, cfg.total_steps)?;
        let output = synth_attention_output(scn, t, &mut rng)?;
        visit(StepContext {
            step_index: k,
            t,
            hidden: &hidden,
            output: &output,
        })?;
    }
    Ok(())
}

fn mask_for(
    mode: InjectionMode,
    t: f64,
    o: &AttentionOutput,
    cfg: &ScheduleConfig,
) -> Result<(Phase, SpatialMask)> {
    match mode {
        InjectionMode::Uniform => Ok((phase_of(t, cfg)?, SpatialMask::ones(o.grid()))),
        InjectionMode::Scheduled => schedule_mask_with_phase(t, o, cfg),
    }
}

/// `candidate / baseline`, taken as 1 when the baseline injects nothing.
fn energy_ratio(candidate: f64, baseline: f64) -> f64 {
    if baseline == 0.0 {
        1.0
    } else {
        candidate / baseline
    }
}

pub fn run_trajectory(scn: &SyntheticScenario, cfg: &ScheduleConfig) -> Result<TrajectoryReport> {
    let truth = scn.face_region.dilate(cfg.dilation_radius);
    let face = scn.face_region.indices();
    let background = scn.face_region.complement();
    let ones = SpatialMask::ones(scn.grid);
    let mut steps = Vec::with_capacity(cfg.total_steps);

    walk_steps(scn, cfg, |ctx| {
        let start = Instant::now();
        let (phase, mask) = schedule_mask_with_phase(ctx.t, ctx.output, cfg)?;
        let wall_time_mask = start.elapsed();

        let start = Instant::now();
        black_box(inject_masked(ctx.hidden, ctx.output, &mask, cfg.alpha)?);
        let wall_time_injection = start.elapsed();

        let bg = background.indices();
        let contamination_ratio = energy_ratio(
            injection_energy(ctx.output, &mask, cfg.alpha, bg)?,
            injection_energy(ctx.output, &ones, cfg.alpha, bg)?,
        );
        let face_energy_ratio = energy_ratio(
            injection_energy(ctx.output, &mask, cfg.alpha, face)?,
            injection_energy(ctx.output, &ones, cfg.alpha, face)?,
        );
        steps.push(StepRecord {
            step_index: ctx.step_index,
            t: ctx.t,
            phase,
            mask_iou: mask_iou(&mask, &truth, IOU_THRESHOLD)?,
            contamination_ratio,
            face_energy_ratio,
            wall_time_mask,
            wall_time_injection,
        });
        Ok(())
    })?;

    let summary = TrajectorySummary::of(&steps);
    Ok(TrajectoryReport {
        scenario: scn.clone(),
        config: cfg.clone(),
        steps,
        summary,
    })
}

/// The scheduled mask of every step, in step order.
pub fn trajectory_masks(
    scn: &SyntheticScenario,
    cfg: &ScheduleConfig,
) -> Result<Vec<(Phase, SpatialMask)>> {
    let mut masks = Vec::with_capacity(cfg.total_steps);
    walk_steps(scn, cfg, |ctx| {
        masks.push(schedule_mask_with_phase(ctx.t, ctx.output, cfg)?);
        Ok(())
    })?;
    Ok(masks)
}

/// Runs independent trajectories, in parallel when enabled. Output order follows `jobs`.
pub fn run_trajectories(
    jobs: &[(SyntheticScenario, ScheduleConfig)],
) -> Result<Vec<TrajectoryReport>> {
    par::map_slice(jobs, |(scn, cfg)| run_trajectory(scn, cfg))
        .into_iter()
        .collect()
}

/// Injected energies of two masking modes on the same step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonStep {
    pub step_index: usize,
    pub t: f64,
    pub phase: Phase,
    pub baseline_background_energy: f64,
    pub candidate_background_energy: f64,
    pub baseline_face_energy: f64,
    pub candidate_face_energy: f64,
    pub contamination_ratio: f64,
    pub face_energy_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub baseline: InjectionMode,
    pub candidate: InjectionMode,
    pub steps: Vec<ComparisonStep>,
    pub mean_mid_contamination_ratio: Option<f64>,
    pub mean_mid_face_energy_ratio: Option<f64>,
    pub mean_contamination_ratio: f64,
    pub mean_face_energy_ratio: f64,
}

/// Paired per-step energies of `candidate` against `baseline` on one trajectory.
pub fn compare_modes(
    scn: &SyntheticScenario,
    cfg: &ScheduleConfig,
    baseline: InjectionMode,
    candidate: InjectionMode,
) -> Result<Comparison> {
    let face = scn.face_region.indices().to_vec();
    let background = scn.face_region.complement();
    let mut steps = Vec::with_capacity(cfg.total_steps);
    walk_steps(scn, cfg, |ctx| {
        let (phase, base_mask) = mask_for(baseline, ctx.t, ctx.output, cfg)?;
        let (_, cand_mask) = mask_for(candidate, ctx.t, ctx.output, cfg)?;
        let energy = |m: &SpatialMask, region: &[usize]| {
            injection_energy(ctx.output, m, cfg.alpha, region)
        };
        let bg = background.indices();
        let (bb, cb) = (energy(&base_mask, bg)?, energy(&cand_mask, bg)?);
        let (bf, cf) = (energy(&base_mask, &face)?, energy(&cand_mask, &face)?);
        steps.push(ComparisonStep {
            step_index: ctx.step_index,
            t: ctx.t,
            phase,
            baseline_background_energy: bb,
            candidate_background_energy: cb,
            baseline_face_energy: bf,
            candidate_face_energy: cf,
            contamination_ratio: energy_ratio(cb, bb),
            face_energy_ratio: energy_ratio(cf, bf),
        });
        Ok(())
    })?;

    let mean = |xs: Vec<f64>| (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64);
    let mid: Vec<&ComparisonStep> = steps.iter().filter(|s| s.phase == Phase::Mid).collect();
    Ok(Comparison {
        baseline,
        candidate,
        mean_mid_contamination_ratio: mean(mid.iter().map(|s| s.contamination_ratio).collect()),
        mean_mid_face_energy_ratio: mean(mid.iter().map(|s| s.face_energy_ratio).collect()),
        mean_contamination_ratio: mean(steps.iter().map(|s| s.contamination_ratio).collect())
            .unwrap_or(1.0),
        mean_face_energy_ratio: mean(steps.iter().map(|s| s.face_energy_ratio).collect())
            .unwrap_or(1.0),
        steps,
        })
}

pub fn compare_uniform_vs_spatial(
    scn: &SyntheticScenario,
    cfg: &ScheduleConfig,
) -> Result<Comparison> {
    compare_modes(scn, cfg, InjectionMode::Uniform, InjectionMode::Scheduled)
}

/// Sizes for an overhead measurement with real cross-attention.
#[derive(Clone, Debug, PartialEq)]
pub struct OverheadSetup {
    pub grid: PatchGrid,
    pub feature_dim: usize,
    pub token_count: usize,
    pub token_dim: usize,
    pub head_dim: usize,
    pub repeats: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OverheadReport {
    /// Median time to extract and schedule one mid-phase mask.
    pub mask_time: Duration,
    pub attention_time: Duration,
    pub injection_time: Duration,
    /// `mask_time / (attention_time + injection_time)`.
    pub ratio: f64,
}

fn median(mut xs: Vec<Duration>) -> Duration {
    xs.sort_unstable();
    xs[xs.len() / 2]
}

/// Times one injection point: cross-attention, mask scheduling and masked injection.
pub fn measure_overhead(setup: &OverheadSetup, cfg: &ScheduleConfig) -> Result<OverheadReport> {
    if setup.repeats == 0 {
        return Err(Error::Argument("repeats must be positive".into()));
    }
    let mut rng = Rng::new(setup.seed);
    let h = HiddenStates::random(setup.grid, setup.feature_dim, &mut rng)?;
    let z = IdentityTokens::random(setup.token_count, setup.token_dim, &mut rng)?;
    let params = init_params(
        setup.seed.wrapping_add(1),
        setup.feature_dim,
        setup.token_dim,
        setup.head_dim,
    )?;
    let t_mid = 0.5 * (cfg.t_early + cfg.t_late);

    let (mut att, mut msk, mut inj) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..setup.repeats {
        let start = Instant::now();
        let o = cross_attention(&h, &z, &params)?;
        att.push(start.elapsed());

        let start = Instant::now();
        let (_, mask) = schedule_mask_with_phase(t_mid, &o, cfg)?;
        msk.push(start.elapsed());

        let start = Instant::now();
        black_box(inject_masked(&h, &o, &mask, cfg.alpha)?);
        inj.push(start.elapsed());
    }
    let (attention_time, mask_time, injection_time) = (median(att), median(msk), median(inj));
    let denom = (attention_time + injection_time).as_secs_f64();
    Ok(OverheadReport {
        mask_time,
        attention_time,
        injection_time,
        ratio: if denom > 0.0 {
            mask_time.as_secs_f64() / denom
        } else {
            0.0
        },
    })
}
