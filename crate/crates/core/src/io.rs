//! Run-directory artifacts.
//!
//! Layout written by `simulate`:
//!
//! ```text
//! out_dir/
//!   config.toml            verbatim copy of the input config
//!   metadata.json          resolved parameters, scheme constants, hash, termination
//!   trajectory.csv         one report per row (documented header)
//!   snapshots/snap_NNNNNN.{bin,json}
//!   final.{bin,json}       final state snapshot
//! ```
//!
//! Snapshots are raw little-endian f64, row-major, components concatenated in
//! the order listed by the JSON sidecar `{nx, ny, bc_mode, time,
//! component_names}`. Floats in CSV files use a fixed scientific format so
//! identical runs produce byte-identical artifacts.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{config_sha256, RunConfig};
use crate::diagnostics::TheoremVerdict;
use crate::dynamics::{
    ModelParams, RunMeta, Snapshot, State, StepReport, Termination, TrajectoryLog,
};
use crate::error::{Error, Result};
use crate::grid::{BcMode, FieldRole, Grid, ScalarField, VectorField};

pub const TRAJECTORY_HEADER: &str =
    "t,dt,total_energy,kinetic,elastic,bulk,dissipation,budget_defect,max_abs_d,grad_u_norm,residual_norm";

fn fmt(v: f64) -> String {
    format!("{v:.17e}")
}

// ---------------------------------------------------------------------------
// snapshots
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnapshotSidecar {
    pub nx: usize,
    pub ny: usize,
    pub bc_mode: BcMode,
    pub time: f64,
    pub component_names: Vec<String>,
}

/// Writes `base.bin` + `base.json` for a list of named components.
pub fn write_snapshot_components(
    base: &Path,
    grid: &Grid,
    time: f64,
    components: &[(&str, &[f64])],
) -> Result<()> {
    let sidecar = SnapshotSidecar {
        nx: grid.nx,
        ny: grid.ny,
        bc_mode: grid.bc_mode,
        time,
        component_names: components.iter().map(|(n, _)| n.to_string()).collect(),
    };
    let mut bin = std::fs::File::create(base.with_extension("bin"))?;
    for (_, data) in components {
        if data.len() != grid.len() {
            return Err(Error::Config("snapshot component does not conform to grid".into()));
        }
        let mut bytes = Vec::with_capacity(data.len() * 8);
        for v in *data {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        bin.write_all(&bytes)?;
    }
    let json = serde_json::to_string_pretty(&sidecar)
        .map_err(|e| Error::AnalysisInput(e.to_string()))?;
    std::fs::write(base.with_extension("json"), json)?;
    Ok(())
}

pub fn write_state_snapshot(base: &Path, s: &State) -> Result<()> {
    let grid = s.grid();
    write_snapshot_components(
        base,
        grid,
        s.t,
        &[
            ("u_x", &s.u.x),
            ("u_y", &s.u.y),
            ("d_x", &s.d.x),
            ("d_y", &s.d.y),
            ("p", &s.p.data),
        ],
    )
}

pub struct LoadedSnapshot {
    pub grid: Grid,
    pub time: f64,
    pub components: Vec<(String, Vec<f64>)>,
}

pub fn read_snapshot(base: &Path) -> Result<LoadedSnapshot> {
    let json_path = base.with_extension("json");
    let raw = std::fs::read_to_string(&json_path).map_err(|e| {
        Error::AnalysisInput(format!("missing snapshot sidecar {}: {e}", json_path.display()))
    })?;
    let sidecar: SnapshotSidecar = serde_json::from_str(&raw)
        .map_err(|e| Error::AnalysisInput(format!("corrupt sidecar {}: {e}", json_path.display())))?;
    let grid = Grid::new(sidecar.nx, sidecar.ny, sidecar.bc_mode)?;
    let bin_path = base.with_extension("bin");
    let mut bytes = Vec::new();
    std::fs::File::open(&bin_path)
        .map_err(|e| Error::AnalysisInput(format!("missing snapshot {}: {e}", bin_path.display())))?
        .read_to_end(&mut bytes)?;
    let n = grid.len();
    let expect = sidecar.component_names.len() * n * 8;
    if bytes.len() != expect {
        return Err(Error::AnalysisInput(format!(
            "snapshot {} has {} bytes, expected {expect}",
            bin_path.display(),
            bytes.len()
        )));
    }
    let mut components = Vec::new();
    for (i, name) in sidecar.component_names.iter().enumerate() {
        let mut data = Vec::with_capacity(n);
        for k in 0..n {
            let off = (i * n + k) * 8;
            let mut b = [0u8; 8];
            b.copy_from_slice(&bytes[off..off + 8]);
            data.push(f64::from_le_bytes(b));
        }
        components.push((name.clone(), data));
    }
    Ok(LoadedSnapshot { grid, time: sidecar.time, components })
}

impl LoadedSnapshot {
    fn take(&self, name: &str) -> Result<Vec<f64>> {
        self.components
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, d)| d.clone())
            .ok_or_else(|| Error::AnalysisInput(format!("snapshot lacks component {name}")))
    }

    pub fn to_state(&self) -> Result<State> {
        let u = VectorField {
            grid: self.grid.clone(),
            x: self.take("u_x")?,
            y: self.take("u_y")?,
            role: FieldRole::Velocity,
        };
        let d = VectorField {
            grid: self.grid.clone(),
            x: self.take("d_x")?,
            y: self.take("d_y")?,
            role: FieldRole::Director,
        };
        let p = ScalarField { grid: self.grid.clone(), data: self.take("p")? };
        Ok(State { t: self.time, u, d, p })
    }
}

// ---------------------------------------------------------------------------
// trajectory CSV
// ---------------------------------------------------------------------------

pub fn write_trajectory_csv(path: &Path, reports: &[StepReport]) -> Result<()> {
    let mut out = String::with_capacity(reports.len() * 200);
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for r in reports {
        let row = [
            r.t,
            r.dt,
            r.total_energy,
            r.kinetic,
            r.elastic,
            r.bulk,
            r.dissipation,
            r.budget_defect,
            r.max_abs_d,
            r.grad_u_norm,
            r.residual_norm,
        ];
        let line: Vec<String> = row.iter().map(|v| fmt(*v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_trajectory_csv(path: &Path) -> Result<Vec<StepReport>> {
    let raw = std::fs::read_to_string(path).map_err(|e| {
        Error::AnalysisInput(format!("missing trajectory {}: {e}", path.display()))
    })?;
    let mut lines = raw.lines();
    let header = lines.next().unwrap_or("");
    if header != TRAJECTORY_HEADER {
        return Err(Error::AnalysisInput(format!(
            "unexpected trajectory header in {}",
            path.display()
        )));
    }
    let mut reports = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| {
                Error::AnalysisInput(format!("bad row {} in {}: {e}", i + 2, path.display()))
            })?;
        if vals.len() != 11 {
            return Err(Error::AnalysisInput(format!(
                "row {} in {} has {} fields, expected 11",
                i + 2,
                path.display(),
                vals.len()
            )));
        }
        reports.push(StepReport {
            t: vals[0],
            dt: vals[1],
            total_energy: vals[2],
            kinetic: vals[3],
            elastic: vals[4],
            bulk: vals[5],
            dissipation: vals[6],
            budget_defect: vals[7],
            max_abs_d: vals[8],
            grad_u_norm: vals[9],
            residual_norm: vals[10],
        });
    }
    Ok(reports)
}

// ---------------------------------------------------------------------------
// metadata and whole-run round trip
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMetadata {
    pub version: String,
    pub config_sha256: String,
    pub config: RunConfig,
    pub params: ModelParams,
    pub run_meta: RunMeta,
    pub termination: Termination,
}

pub fn write_run_artifacts(
    dir: &Path,
    cfg: &RunConfig,
    raw_config: &str,
    params: &ModelParams,
    log: &TrajectoryLog,
    final_state: &State,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("config.toml"), raw_config)?;
    let metadata = RunMetadata {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: config_sha256(raw_config),
        config: cfg.clone(),
        params: params.clone(),
        run_meta: log.meta.clone(),
        termination: log.termination.clone(),
    };
    let json = serde_json::to_string_pretty(&metadata)
        .map_err(|e| Error::AnalysisInput(e.to_string()))?;
    std::fs::write(dir.join("metadata.json"), json)?;
    write_trajectory_csv(&dir.join("trajectory.csv"), &log.reports)?;
    let snapdir = dir.join("snapshots");
    std::fs::create_dir_all(&snapdir)?;
    for (i, s) in log.snapshots.iter().enumerate() {
        let state = State { t: s.t, u: s.u.clone(), d: s.d.clone(), p: s.p.clone() };
        write_state_snapshot(&snapdir.join(format!("snap_{i:06}")), &state)?;
    }
    write_state_snapshot(&dir.join("final"), final_state)?;
    Ok(())
}

pub struct LoadedRun {
    pub metadata: RunMetadata,
    pub log: TrajectoryLog,
    pub final_state: State,
}

pub fn read_run_dir(dir: &Path) -> Result<LoadedRun> {
    let meta_path = dir.join("metadata.json");
    let raw = std::fs::read_to_string(&meta_path).map_err(|e| {
        Error::AnalysisInput(format!("missing metadata {}: {e}", meta_path.display()))
    })?;
    let metadata: RunMetadata = serde_json::from_str(&raw)
        .map_err(|e| Error::AnalysisInput(format!("corrupt metadata {}: {e}", meta_path.display())))?;
    let reports = read_trajectory_csv(&dir.join("trajectory.csv"))?;
    let mut snapshots = Vec::new();
    let snapdir = dir.join("snapshots");
    if snapdir.is_dir() {
        let mut bases: Vec<PathBuf> = std::fs::read_dir(&snapdir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .map(|p| p.with_extension(""))
            .collect();
        bases.sort();
        for base in bases {
            let snap = read_snapshot(&base)?;
            let state = snap.to_state()?;
            snapshots.push(Snapshot { t: state.t, u: state.u, d: state.d, p: state.p });
        }
    }
    let final_state = read_snapshot(&dir.join("final"))?.to_state()?;
    let log = TrajectoryLog {
        meta: metadata.run_meta.clone(),
        reports,
        snapshots,
        termination: metadata.termination.clone(),
    };
    Ok(LoadedRun { metadata, log, final_state })
}

// ---------------------------------------------------------------------------
// analysis outputs
// ---------------------------------------------------------------------------

pub fn write_verdicts(dir: &Path, verdicts: &[TheoremVerdict]) -> Result<()> {
    let json = serde_json::to_string_pretty(verdicts)
        .map_err(|e| Error::AnalysisInput(e.to_string()))?;
    std::fs::write(dir.join("verdicts.json"), json)?;
    std::fs::write(dir.join("verdicts.txt"), crate::diagnostics::render_table(verdicts))?;
    Ok(())
}

/// Plot-ready CSV: `t, total_energy, dissipation, dist_to_dinf, fit_exp,
/// fit_alg`; the distance and fit columns are empty where unavailable.
pub fn write_plot_csv(
    path: &Path,
    log: &TrajectoryLog,
    dists: &[(f64, f64)],
    exp_fit: Option<(f64, f64)>,
    alg_fit: Option<(f64, f64)>,
) -> Result<()> {
    let mut out = String::new();
    out.push_str("t,total_energy,dissipation,dist_to_dinf,fit_exp,fit_alg\n");
    for r in &log.reports {
        let dist = dists
            .iter()
            .find(|(t, _)| (t - r.t).abs() <= 1e-12 * (1.0 + r.t.abs()))
            .map(|(_, d)| fmt(*d))
            .unwrap_or_default();
        let fe = exp_fit.map(|(mu, ln_c)| fmt((ln_c - mu * r.t).exp())).unwrap_or_default();
        let fa = alg_fit
            .map(|(s, ln_c)| fmt((ln_c - s * (1.0 + r.t).ln()).exp()))
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{dist},{fe},{fa}\n",
            fmt(r.t),
            fmt(r.total_energy),
            fmt(r.dissipation)
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BcMode;

    #[test]
    fn snapshot_roundtrip() {
        let dir = std::env::temp_dir().join(format!("nematic_snap_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let grid = Grid::new(8, 16, BcMode::Periodic).unwrap();
        let u = grid.vector_from_fn(FieldRole::Velocity, |x, y| [x + y, x - y]);
        let d = grid.vector_from_fn(FieldRole::Director, |x, y| [(x * 7.0).sin(), y]);
        let mut s = State::new(&grid, u, d);
        s.t = 1.25;
        let base = dir.join("snap");
        write_state_snapshot(&base, &s).unwrap();
        let loaded = read_snapshot(&base).unwrap().to_state().unwrap();
        assert_eq!(loaded.t, 1.25);
        assert_eq!(loaded.u, s.u);
        assert_eq!(loaded.d, s.d);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn trajectory_roundtrip_and_determinism() {
        let dir = std::env::temp_dir().join(format!("nematic_traj_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let reports = vec![StepReport {
            t: 0.1,
            dt: 0.01,
            total_energy: 1.0 / 3.0,
            kinetic: 0.1,
            elastic: 0.2,
            bulk: 1.0 / 3.0 - 0.3,
            dissipation: 2e-3,
            budget_defect: 1e-9,
            max_abs_d: 1.0,
            grad_u_norm: 0.5,
            residual_norm: 1e-2,
        }];
        let p1 = dir.join("a.csv");
        let p2 = dir.join("b.csv");
        write_trajectory_csv(&p1, &reports).unwrap();
        write_trajectory_csv(&p2, &reports).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap(), "byte identical");
        let back = read_trajectory_csv(&p1).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].total_energy, reports[0].total_energy);
        std::fs::remove_dir_all(&dir).ok();
    }
}
