//! Report formats: CSV builders, versioned JSON reports, and atomic file
//! writes shared by the CLI.
//!
//! Every JSON document carries `format_version` (currently "1") so readers
//! can detect layout changes; [`schema_text`] documents each CSV column set
//! for the `--schema` flag.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::oracle::Trajectory;
use crate::placement::PlacementResult;
use crate::sensitivity::SusceptibilityReport;
use crate::spectral::Spectrum;

/// Version stamp carried by all JSON reports.
pub const FORMAT_VERSION: &str = "1";

/// Writes `contents` to `path` atomically: the data lands in a temporary
/// file in the same directory and is renamed over the target, so readers
/// never observe a half-written report.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let file_name = path.file_name().ok_or_else(|| {
        crate::Error::InvalidArgument(format!("not a file path: {}", path.display()))
    })?;
    let mut tmp = std::path::PathBuf::from(dir.unwrap_or_else(|| Path::new(".")));
    tmp.push(format!(
        ".{}.tmp.{}",
        file_name.to_string_lossy(),
        std::process::id()
    ));
    std::fs::write(&tmp, contents)?;
    match std::fs::rename(&tmp, path) {
        Ok(()) => Ok(()),
        Err(e) => {
            let _ = std::fs::remove_file(&tmp);
            Err(e.into())
        }
    }
}

fn push_float(line: &mut String, value: f64) {
    // 17 significant digits round-trip f64 exactly.
    let _ = write!(line, ",{value:.17e}");
}

/// One row per mode: eigenvalue, then the eigenvector component per bus.
/// Header: `lambda,u_<id>,…`.
pub fn spectrum_csv(spec: &Spectrum, ids: &[String]) -> String {
    let mut out = String::from("lambda");
    for id in ids {
        let _ = write!(out, ",u_{id}");
    }
    out.push('\n');
    for alpha in 0..spec.n() {
        let mut line = format!("{:.17e}", spec.eigenvalues[alpha]);
        for i in 0..spec.n() {
            push_float(&mut line, spec.u[(alpha, i)]);
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Physical trajectory: `t,omega_<id>,…` (rad/s per bus).
pub fn trajectory_csv(traj: &Trajectory, ids: &[String]) -> String {
    let mut out = String::from("t");
    for id in ids {
        let _ = write!(out, ",omega_{id}");
    }
    out.push('\n');
    for (k, t) in traj.times.iter().enumerate() {
        let mut line = format!("{t:.9}");
        for v in traj.omega[k].iter() {
            push_float(&mut line, *v);
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Modal trajectory: `t,xidot_1,…,xidot_N` (slot 1 is the zero mode).
pub fn modal_trajectory_csv(times: &[f64], rows: &[DVector<f64>]) -> String {
    let n = rows.first().map_or(0, |r| r.len());
    let mut out = String::from("t");
    for alpha in 1..=n {
        let _ = write!(out, ",xidot_{alpha}");
    }
    out.push('\n');
    for (t, row) in times.iter().zip(rows) {
        let mut line = format!("{t:.9}");
        for v in row.iter() {
            push_float(&mut line, *v);
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Per-fault susceptibilities: one row per (fault, bus) pair.
/// Header: `fault,bus,rho,alpha_term1,alpha_term2,alpha_total`.
pub fn sensitivity_csv(ids: &[String], reports: &[SusceptibilityReport]) -> String {
    let mut out = String::from("fault,bus,rho,alpha_term1,alpha_term2,alpha_total\n");
    for rep in reports {
        let fault_id = &ids[rep.fault.bus];
        for (i, id) in ids.iter().enumerate() {
            let _ = writeln!(
                out,
                "{fault_id},{id},{:.17e},{:.17e},{:.17e},{:.17e}",
                rep.rho[i], rep.alpha.term1[i], rep.alpha.term2[i], rep.alpha.total[i]
            );
        }
    }
    out
}

/// Aggregated vulnerability gradients: `bus,grad_r,grad_a`.
pub fn gradient_csv(ids: &[String], grad_r: &DVector<f64>, grad_a: &DVector<f64>) -> String {
    let mut out = String::from("bus,grad_r,grad_a\n");
    for (i, id) in ids.iter().enumerate() {
        let _ = writeln!(out, "{id},{:.17e},{:.17e}", grad_r[i], grad_a[i]);
    }
    out
}

/// Per-bus placement table: `bus,rho_agg,alpha_agg,r,a`.
pub fn placement_csv(
    ids: &[String],
    rho_agg: &DVector<f64>,
    alpha_agg: &DVector<f64>,
    r: &[i8],
    a: &[i8],
) -> String {
    let mut out = String::from("bus,rho_agg,alpha_agg,r,a\n");
    for (i, id) in ids.iter().enumerate() {
        let _ = writeln!(
            out,
            "{id},{:.17e},{:.17e},{},{}",
            rho_agg[i], alpha_agg[i], r[i], a[i]
        );
    }
    out
}

/// One measure evaluation; `oracle` and `discrepancy` are present only for
/// method `both`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureRow {
    pub bus: String,
    pub delta_p: f64,
    pub measure: f64,
    pub method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discrepancy: Option<f64>,
}

/// Measure report over one or more fault buses, sorted ascending by
/// measure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureReport {
    pub format_version: String,
    pub gamma: f64,
    pub rows: Vec<MeasureRow>,
}

impl MeasureReport {
    pub fn new(gamma: f64, mut rows: Vec<MeasureRow>) -> Self {
        rows.sort_by(|x, y| x.measure.total_cmp(&y.measure));
        MeasureReport {
            format_version: FORMAT_VERSION.to_string(),
            gamma,
            rows,
        }
    }
}

/// Integrator settings echoed next to a trajectory CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationSidecar {
    pub format_version: String,
    pub fault_bus: String,
    pub delta_p: f64,
    pub dt: f64,
    pub horizon: f64,
    pub modal: bool,
}

/// Placement result wrapped with the version stamp.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlacementFile {
    pub format_version: String,
    #[serde(flatten)]
    pub result: PlacementResult,
}

impl PlacementFile {
    pub fn new(result: PlacementResult) -> Self {
        PlacementFile {
            format_version: FORMAT_VERSION.to_string(),
            result,
        }
    }
}

/// Per-fault measure before/after a placement is applied.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvePoint {
    pub bus: String,
    pub measure_before: f64,
    pub measure_after: f64,
}

/// Vulnerability comparison for a placement, with the per-fault curve
/// sorted ascending by the baseline measure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VulnerabilityReport {
    pub format_version: String,
    pub weighting: String,
    pub mu: f64,
    pub g: f64,
    pub vulnerability_before: f64,
    pub vulnerability_after: f64,
    pub reduction_percent: f64,
    pub curve: Vec<CurvePoint>,
}

impl VulnerabilityReport {
    pub fn new(
        weighting: String,
        mu: f64,
        g: f64,
        before: f64,
        after: f64,
        mut curve: Vec<CurvePoint>,
    ) -> Self {
        curve.sort_by(|x, y| x.measure_before.total_cmp(&y.measure_before));
        VulnerabilityReport {
            format_version: FORMAT_VERSION.to_string(),
            weighting,
            mu,
            g,
            vulnerability_before: before,
            vulnerability_after: after,
            reduction_percent: 100.0 * (before - after) / before,
            curve,
        }
    }
}

/// Serializes any report type as pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(report: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    Ok(text)
}

/// Column documentation printed by the `--schema` flag.
pub fn schema_text() -> &'static str {
    "Output formats (format_version 1)\n\
     \n\
     spectrum CSV        lambda,u_<bus>...     one row per mode, ascending\n\
     \x20                                      eigenvalue; row 1 is the zero mode\n\
     trajectory CSV      t,omega_<bus>...      frequency deviations (rad/s);\n\
     \x20                                      sidecar JSON echoes settings\n\
     modal CSV           t,xidot_<mode>...     modal velocities; column 1 is\n\
     \x20                                      the zero mode\n\
     sensitivity CSV     fault,bus,rho,alpha_term1,alpha_term2,alpha_total\n\
     gradient CSV        bus,grad_r,grad_a     vulnerability gradients\n\
     placement CSV       bus,rho_agg,alpha_agg,r,a\n\
     \n\
     measure JSON        {format_version,gamma,rows:[{bus,delta_p,measure,\n\
     \x20                method,oracle?,discrepancy?}]} sorted by measure\n\
     placement JSON      {format_version,algorithm,weighting,r,a,\n\
     \x20                objective_linear,residuals,zeroing_passes}\n\
     report JSON         {format_version,weighting,mu,g,vulnerability_before,\n\
     \x20                vulnerability_after,reduction_percent,curve:[{bus,\n\
     \x20                measure_before,measure_after}]}\n"
}
