//! Subcommand implementations shared by the binary and the C API.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::diagnostics::{
    decay_fit, dissipation_bound_check, energy_monotonicity_check, max_principle_check,
    omega_limit_check, single_point_check, verdict_from_criterion, TheoremId, TheoremVerdict,
    VerdictStatus,
};
use crate::dynamics::{run, RunOutcome, Termination};
use crate::error::{Error, Result};
use crate::io;
use crate::stationary::{
    check_large_l, check_small_energy, classify, kernel_dimension, solve_stationary,
    Classification, CriterionReport, SolveOptions, SpectrumEntry,
};

/// Output directory resolution: explicit flag, then the `OUT_DIR` environment
/// variable (the one permitted override), then the config.
fn resolve_out_dir(cfg: &RunConfig, out_override: Option<&Path>) -> PathBuf {
    if let Some(p) = out_override {
        return p.to_path_buf();
    }
    if let Ok(env) = std::env::var("OUT_DIR") {
        if !env.is_empty() {
            return PathBuf::from(env);
        }
    }
    PathBuf::from(&cfg.output.out_dir)
}

pub fn cmd_simulate(config_path: &Path, out_override: Option<&Path>, quiet: bool) -> Result<()> {
    let (cfg, raw) = RunConfig::from_path(config_path)?;
    let out_dir = resolve_out_dir(&cfg, out_override);
    let built = cfg.build()?;
    let outcome = run(&built.state0, &built.params, &built.schedule)?;
    io::write_run_artifacts(&out_dir, &cfg, &raw, &built.params, &outcome.log, &outcome.final_state)?;
    let last = outcome.log.reports.last();
    if !quiet {
        println!(
            "simulate: {} steps, t_end = {:.6}, EE = {:.6e}, D = {:.6e}, {:?}",
            outcome.log.reports.len(),
            outcome.final_state.t,
            last.map_or(f64::NAN, |r| r.total_energy),
            last.map_or(f64::NAN, |r| r.dissipation),
            outcome.log.termination
        );
        println!("artifacts in {}", out_dir.display());
    }
    if let Termination::Aborted(reason) = &outcome.log.termination {
        return Err(Error::Blowup { t: outcome.final_state.t, what: reason.clone() });
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StationaryArtifact {
    pub residual_norm: f64,
    pub energy: f64,
    pub classification: Classification,
    pub converged: bool,
    pub iterations: usize,
    pub kernel_dim: Option<usize>,
    pub low_spectrum: Vec<SpectrumEntry>,
    pub criteria: Vec<CriterionReport>,
    pub equilibrium_snapshot: String,
}

pub fn cmd_stationary(config_path: &Path, out_override: Option<&Path>, quiet: bool) -> Result<()> {
    let (cfg, _raw) = RunConfig::from_path(config_path)?;
    let out_dir = resolve_out_dir(&cfg, out_override);
    std::fs::create_dir_all(&out_dir)?;
    let built = cfg.build()?;
    let opts = SolveOptions {
        tol: cfg.stationary.tol,
        max_time: cfg.stationary.max_time,
        max_iter: cfg.stationary.max_iter,
    };
    let mut report = solve_stationary(&built.state0.d, &built.params, cfg.stationary.method, opts)?;
    if report.converged {
        let (dim, spectrum) =
            kernel_dimension(&report.z, &built.params, cfg.stationary.zero_tol)?;
        report.kernel_dim = Some(dim);
        report.low_spectrum = spectrum;
    } else if !quiet {
        println!(
            "stationary: did not converge (residual {:.3e}); kernel probe skipped",
            report.residual_norm
        );
    }
    let mut criteria = vec![check_large_l(&built.params, &built.grid)];
    if let Some(eps) = cfg.criteria.small_energy_epsilon {
        if built.params.delta == 0.0 && built.state0.d.max_abs() <= 1.0 + 1e-12 {
            let (kappa, sigma) = built.params.potential.kappa_sigma();
            criteria.push(check_small_energy(&built.state0, &built.params, kappa, sigma, eps)?);
        }
    }
    io::write_snapshot_components(
        &out_dir.join("equilibrium"),
        &built.grid,
        0.0,
        &[("d_x", &report.z.x), ("d_y", &report.z.y)],
    )?;
    let artifact = StationaryArtifact {
        residual_norm: report.residual_norm,
        energy: report.energy,
        classification: report.classification,
        converged: report.converged,
        iterations: report.iterations,
        kernel_dim: report.kernel_dim,
        low_spectrum: report.low_spectrum.clone(),
        criteria,
        equilibrium_snapshot: "equilibrium.bin".into(),
    };
    let json = serde_json::to_string_pretty(&artifact)
        .map_err(|e| Error::AnalysisInput(e.to_string()))?;
    std::fs::write(out_dir.join("stationary_report.json"), json)?;
    if !quiet {
        println!(
            "stationary: residual {:.3e}, energy {:.6e}, {:?}, kernel_dim {:?}",
            artifact.residual_norm, artifact.energy, artifact.classification, artifact.kernel_dim
        );
        for c in &artifact.criteria {
            println!("criterion {}: {}", c.name, if c.pass { "pass" } else { "fail" });
        }
        println!("report in {}", out_dir.display());
    }
    Ok(())
}

pub fn cmd_analyze(run_dir: &Path, quiet: bool) -> Result<()> {
    let loaded = io::read_run_dir(run_dir)?;
    let params = loaded.metadata.params.clone();
    let log = &loaded.log;
    let final_state = &loaded.final_state;
    let grid = final_state.grid().clone();

    let mut verdicts = vec![
        energy_monotonicity_check(log),
        max_principle_check(log),
        omega_limit_check(log, final_state, &params),
        single_point_check(log),
        dissipation_bound_check(log),
    ];

    // Decay fit against the polished limit of the final frame.
    let mut dists: Vec<(f64, f64)> = Vec::new();
    let mut exp_fit = None;
    let mut alg_fit = None;
    match solve_stationary(
        &final_state.d,
        &params,
        crate::stationary::SolveMethod::GradientFlow,
        SolveOptions::default(),
    ) {
        Ok(lim) if lim.converged => {
            let v = decay_fit(log, &lim.z, &params);
            let get = |v: &TheoremVerdict, key: &str| {
                v.metrics.iter().find(|(k, _)| k == key).map(|(_, x)| *x)
            };
            if v.status == VerdictStatus::Pass || v.status == VerdictStatus::Fail {
                if let (Some(mu), Some(lnc)) = (get(&v, "mu"), get(&v, "ln_c_exp")) {
                    exp_fit = Some((mu, lnc));
                }
                if let (Some(s), Some(lnc)) = (get(&v, "alg_exponent"), get(&v, "ln_c_alg")) {
                    alg_fit = Some((s, lnc));
                }
            }
            dists = log
                .snapshots
                .iter()
                .map(|s| (s.t, s.d.add_scaled(-1.0, &lim.z).norm()))
                .collect();
            verdicts.push(v);
        }
        _ => verdicts.push(TheoremVerdict {
            theorem: TheoremId::DecayRate,
            status: VerdictStatus::Inconclusive,
            pass: true,
            metrics: vec![],
            notes: "no polished limit available for the final frame".into(),
        }),
    }

    verdicts.push(verdict_from_criterion(&check_large_l(&params, &grid)));
    if let Some(eps) = loaded.metadata.config.criteria.small_energy_epsilon {
        if params.delta == 0.0 {
            if let Some(first) = log.snapshots.first() {
                if first.t == 0.0 && first.d.max_abs() <= 1.0 + 1e-12 {
                    let s0 = crate::dynamics::State {
                        t: 0.0,
                        u: first.u.clone(),
                        d: first.d.clone(),
                        p: first.p.clone(),
                    };
                    let (kappa, sigma) = params.potential.kappa_sigma();
                    verdicts.push(verdict_from_criterion(&check_small_energy(
                        &s0, &params, kappa, sigma, eps,
                    )?));
                }
            }
        }
    }

    io::write_verdicts(run_dir, &verdicts)?;
    io::write_plot_csv(&run_dir.join("plot.csv"), log, &dists, exp_fit, alg_fit)?;
    if !quiet {
        print!("{}", crate::diagnostics::render_table(&verdicts));
        println!("wrote verdicts.json, verdicts.txt, plot.csv in {}", run_dir.display());
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Elastic,
    Delta,
    Seed,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "L" => Ok(SweepAxis::Elastic),
            "delta" => Ok(SweepAxis::Delta),
            "seed" => Ok(SweepAxis::Seed),
            other => Err(Error::Config(format!("unknown sweep axis {other:?} (expected L, delta, or seed)"))),
        }
    }
}

struct SweepRow {
    index: usize,
    value: f64,
    seed: u64,
    termination: String,
    classification: String,
    final_energy: f64,
    final_dissipation: f64,
    status: String,
}

/// Runs one simulation per axis value, concurrently with bounded parallelism,
/// and aggregates final classifications into `sweep.csv`. Per-run failures are
/// recorded and the sweep continues.
pub fn cmd_sweep(
    config_path: &Path,
    axis: SweepAxis,
    values: &str,
    jobs: usize,
    out_override: Option<&Path>,
    quiet: bool,
) -> Result<()> {
    let (cfg, raw) = RunConfig::from_path(config_path)?;
    let base_out = resolve_out_dir(&cfg, out_override);
    std::fs::create_dir_all(&base_out)?;
    let parsed: Vec<f64> = values
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("bad sweep value {v:?}: {e}")))
        })
        .collect::<Result<_>>()?;
    if parsed.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let jobs = jobs.max(1);
    let next = AtomicUsize::new(0);
    let rows: Mutex<Vec<SweepRow>> = Mutex::new(Vec::new());
    let axis_name = match axis {
        SweepAxis::Elastic => "L",
        SweepAxis::Delta => "delta",
        SweepAxis::Seed => "seed",
    };

    std::thread::scope(|scope| {
        for _ in 0..jobs.min(parsed.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= parsed.len() {
                    break;
                }
                let value = parsed[i];
                let mut cfg_i = cfg.clone();
                match axis {
                    SweepAxis::Elastic => cfg_i.params.elastic = value,
                    SweepAxis::Delta => cfg_i.params.delta = value,
                    SweepAxis::Seed => cfg_i.init.seed = value as u64,
                }
                let run_dir = base_out.join(format!("run_{axis_name}_{i:03}"));
                let row = match run_one(&cfg_i, &raw, &run_dir) {
                    Ok((outcome, class)) => SweepRow {
                        index: i,
                        value,
                        seed: cfg_i.init.seed,
                        termination: format!("{:?}", outcome.log.termination),
                        classification: format!("{class:?}"),
                        final_energy: outcome
                            .log
                            .reports
                            .last()
                            .map_or(f64::NAN, |r| r.total_energy),
                        final_dissipation: outcome
                            .log
                            .reports
                            .last()
                            .map_or(f64::NAN, |r| r.dissipation),
                        status: "ok".into(),
                    },
                    Err(e) => SweepRow {
                        index: i,
                        value,
                        seed: cfg_i.init.seed,
                        termination: "error".into(),
                        classification: "error".into(),
                        final_energy: f64::NAN,
                        final_dissipation: f64::NAN,
                        status: e.to_string().replace(',', ";"),
                    },
                };
                rows.lock().unwrap().push(row);
            });
        }
    });

    let mut rows = rows.into_inner().unwrap();
    rows.sort_by_key(|r| r.index);
    let mut out = String::from(
        "index,axis,value,seed,termination,classification,final_energy,final_dissipation,status\n",
    );
    for r in &rows {
        out.push_str(&format!(
            "{},{},{:.17e},{},{},{},{:.17e},{:.17e},{}\n",
            r.index,
            axis_name,
            r.value,
            r.seed,
            r.termination,
            r.classification,
            r.final_energy,
            r.final_dissipation,
            r.status
        ));
    }
    std::fs::write(base_out.join("sweep.csv"), out)?;
    if !quiet {
        println!("sweep: {} runs, results in {}", rows.len(), base_out.display());
        for r in &rows {
            println!(
                "  {axis_name} = {:<10} seed {:<6} {:<14} {}",
                r.value, r.seed, r.classification, r.status
            );
        }
    }
    Ok(())
}

fn run_one(
    cfg: &RunConfig,
    raw: &str,
    run_dir: &Path,
) -> Result<(RunOutcome, Classification)> {
    let built = cfg.build()?;
    let outcome = run(&built.state0, &built.params, &built.schedule)?;
    io::write_run_artifacts(run_dir, cfg, raw, &built.params, &outcome.log, &outcome.final_state)?;
    let class = classify(&outcome.final_state.d);
    if let Termination::Aborted(reason) = &outcome.log.termination {
        return Err(Error::Blowup { t: outcome.final_state.t, what: reason.clone() });
    }
    Ok((outcome, class))
}
