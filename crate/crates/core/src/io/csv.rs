//! Plain-text metric tables. Floats use 6 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::harness::{Comparison, TrajectoryReport};
use crate::schedule::Phase;

pub const METRICS_HEADER: &str =
    "step,t,phase,mask_iou,contamination_ratio,face_energy_ratio,mask_time_us,inject_time_us";

/// `%.6g`-style formatting: 6 significant digits, trailing zeros trimmed,
/// scientific notation outside `[1e-4, 1e6)`.
pub fn format_sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa.to_string()), exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Per-step metrics table. Timing columns are written as `0` when `timing` is off.
pub fn metrics_csv(report: &TrajectoryReport, timing: bool) -> String {
    let mut out = String::with_capacity(64 * (report.steps.len() + 1));
    out.push_str(METRICS_HEADER);
    out.push('\n');
    for s in &report.steps {
        let (mt, it) = if timing {
            (
                s.wall_time_mask.as_micros().to_string(),
                s.wall_time_injection.as_micros().to_string(),
            )
        } else {
            ("0".into(), "0".into())
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{mt},{it}",
            s.step_index,
            format_sig6(s.t),
            s.phase,
            format_sig6(s.mask_iou),
            format_sig6(s.contamination_ratio),
            format_sig6(s.face_energy_ratio),
        );
    }
    out
}

pub fn write_metrics_csv(report: &TrajectoryReport, path: impl AsRef<Path>, timing: bool) -> Result<()> {
    super::write_bytes(path.as_ref(), metrics_csv(report, timing).as_bytes())
}

pub fn comparison_csv(cmp: &Comparison) -> String {
    let mut out = String::from(
        "step,t,phase,baseline_background_energy,candidate_background_energy,\
         baseline_face_energy,candidate_face_energy,contamination_ratio,face_energy_ratio\n",
    );
    for s in &cmp.steps {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            s.step_index,
            format_sig6(s.t),
            s.phase,
            format_sig6(s.baseline_background_energy),
            format_sig6(s.candidate_background_energy),
            format_sig6(s.baseline_face_energy),
            format_sig6(s.candidate_face_energy),
            format_sig6(s.contamination_ratio),
            format_sig6(s.face_energy_ratio),
        );
    }
    out
}

/// One configuration of a parameter sweep.
#[derive(Clone, Debug)]
pub struct AblationRow {
    /// Swept `(key, value)` pairs in sweep order.
    pub settings: Vec<(String, String)>,
    pub report: TrajectoryReport,
}

/// One row per configuration: swept values, then trajectory means.
pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut out = String::new();
    let keys: Vec<&str> = rows
        .first()
        .map(|r| r.settings.iter().map(|(k, _)| k.as_str()).collect())
        .unwrap_or_default();
    for k in &keys {
        out.push_str(k);
        out.push(',');
    }
    out.push_str(
        "mean_mask_iou,mean_contamination_ratio,mean_face_energy_ratio,\
         mid_contamination_ratio,mid_face_energy_ratio,late_contamination_ratio,late_face_energy_ratio\n",
    );
    let opt = |p: Option<f64>| p.map(format_sig6).unwrap_or_else(|| "nan".into());
    for row in rows {
        for (_, v) in &row.settings {
            out.push_str(v);
            out.push(',');
        }
        let s = &row.report.summary;
        let phase = |p: Phase| s.phase(p);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            format_sig6(s.overall.mean_mask_iou),
            format_sig6(s.overall.mean_contamination_ratio),
            format_sig6(s.overall.mean_face_energy_ratio),
            opt(phase(Phase::Mid).map(|p| p.mean_contamination_ratio)),
            opt(phase(Phase::Mid).map(|p| p.mean_face_energy_ratio)),
            opt(phase(Phase::Late).map(|p| p.mean_contamination_ratio)),
            opt(phase(Phase::Late).map(|p| p.mean_face_energy_ratio)),
        );
    }
    out
}
