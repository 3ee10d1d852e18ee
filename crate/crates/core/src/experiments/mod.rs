//! Scenario runner producing the figure data sets.
//!
//! Every scenario writes `manifest.json` with `complete: false` before any
//! simulation starts and rewrites it with `complete: true` after the last
//! data file is in place. Data files are written atomically.

mod config;
mod output;

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lindblad::{
    build_master, evolve, initial_state, IntegratorStats, ModelKind, Record, Trajectory,
};
use crate::observables::{wigner, GridSpec, WignerGrid};
use crate::ops::{basis_state, product_state, BasisKind};
use crate::params::{check_regime, derive, DerivedParams, RegimeWarning, SystemParams};

pub use config::{
    apply_override, Fig3Axis, InitialState, Numerics, RunConfig, Scenario, DEFAULT_OUTPUT_DIR,
    OUTPUT_DIR_ENV,
};
pub use output::{fmt_sig, now_iso8601, write_atomic, write_csv, write_json, CsvTable, CSV_DIGITS};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const STATUS_FILE: &str = "cell_status.csv";

/// Column order of trajectory CSVs.
pub const TIMESERIES_COLUMNS: [&str; 9] = [
    "t_ns",
    "V_min",
    "theta_opt",
    "S_dB",
    "mean_occ",
    "V11",
    "V22",
    "V12",
    "trace_error",
];

/// Location of the largest squeezing on the output grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MaxSqueezing {
    pub t_opt_ns: f64,
    pub s_max_db: f64,
    pub theta_opt: f64,
    pub index: usize,
}

/// Argmax of S over the records; ties go to the earliest time.
pub fn find_max_in(records: &[Record]) -> Result<MaxSqueezing> {
    let mut best: Option<MaxSqueezing> = None;
    for (index, r) in records.iter().enumerate() {
        if best.is_none_or(|b| r.stats.s_db > b.s_max_db) {
            best = Some(MaxSqueezing {
                t_opt_ns: r.t_ns,
                s_max_db: r.stats.s_db,
                theta_opt: r.stats.theta_opt,
                index,
            });
        }
    }
    best.ok_or_else(|| Error::InvalidArgument("empty trajectory".into()))
}

pub fn find_max_squeezing(traj: &Trajectory) -> Result<MaxSqueezing> {
    find_max_in(&traj.records)
}

/// One simulation task of a scenario.
#[derive(Clone, Debug)]
pub struct RunSpec {
    pub label: String,
    pub model: ModelKind,
    pub params: SystemParams,
    pub keep_reduced: bool,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub spec: RunSpec,
    pub derived: DerivedParams,
    pub trajectory: Trajectory,
    pub max: MaxSqueezing,
}

/// Per-run entry of the manifest.
#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub label: String,
    pub model: ModelKind,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_squeezing: Option<MaxSqueezing>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_trace_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_hermiticity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_eigenvalue: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_mean_occ: Option<f64>,
    pub warnings: Vec<RegimeWarning>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub scenario: String,
    pub complete: bool,
    pub started_at: String,
    pub finished_at: Option<String>,
    pub wall_clock_s: Option<f64>,
    pub jobs: usize,
    pub config: RunConfig,
    pub derived: DerivedParams,
    pub warnings: Vec<RegimeWarning>,
    pub numerical_warnings: Vec<String>,
    pub runs: Vec<RunSummary>,
    pub files: Vec<String>,
    pub error: Option<String>,
}

/// Everything a scenario produced, for callers that want more than files.
#[derive(Debug)]
pub struct ScenarioOutput {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub manifest: RunManifest,
    pub runs: Vec<RunResult>,
    pub wigner: Option<WignerGrid>,
    /// Run whose state the Wigner grid shows.
    pub wigner_run: Option<usize>,
}

fn initial_for(
    numerics: &Numerics,
    derived: &DerivedParams,
    spec: &crate::ops::HilbertSpec,
) -> Result<crate::linalg::ComplexMatrix> {
    match numerics.initial_state {
        InitialState::Thermal => initial_state(derived, spec),
        InitialState::Vacuum => {
            let vac = basis_state(BasisKind::Fock(0), spec)?;
            if spec.qubit_present() {
                let g = basis_state(BasisKind::QubitGround, spec)?;
                product_state(&vac, Some(&g), spec)
            } else {
                Ok(vac)
            }
        }
    }
}

/// Runs one task with the given numerics.
pub fn run_one(spec: &RunSpec, numerics: &Numerics) -> Result<RunResult> {
    let derived = derive(&spec.params)?;
    let model = build_master(spec.model, &spec.params, &derived, numerics.fock_dim)?;
    let rho0 = initial_for(numerics, &derived, &model.spec)?;
    let mut control = numerics.control();
    control.keep_reduced = spec.keep_reduced;
    let trajectory = evolve(
        &model,
        &rho0,
        numerics.horizon_ns,
        numerics.output_dt_ns,
        &control,
    )?;
    let max = find_max_squeezing(&trajectory)?;
    Ok(RunResult {
        spec: spec.clone(),
        derived,
        trajectory,
        max,
    })
}

fn summary(spec: &RunSpec, outcome: &Result<RunResult>) -> RunSummary {
    let warnings = derive(&spec.params)
        .map(|d| check_regime(&d, &spec.params))
        .unwrap_or_default();
    match outcome {
        Ok(r) => {
            let t = &r.trajectory;
            RunSummary {
                label: spec.label.clone(),
                model: spec.model,
                status: "ok".into(),
                error: None,
                integrator: Some(t.stats.clone()),
                max_squeezing: Some(r.max),
                max_trace_error: Some(t.max_trace_error()),
                max_hermiticity: Some(t.max_hermiticity()),
                min_eigenvalue: t.min_eigenvalue(),
                max_mean_occ: Some(t.records.iter().map(|x| x.mean_occ).fold(0.0, f64::max)),
                warnings,
            }
        }
        Err(e) => RunSummary {
            label: spec.label.clone(),
            model: spec.model,
            status: "failed".into(),
            error: Some(e.to_string()),
            integrator: None,
            max_squeezing: None,
            max_trace_error: None,
            max_hermiticity: None,
            min_eigenvalue: None,
            max_mean_occ: None,
            warnings,
        },
    }
}

/// Runs tasks on a pool of `jobs` workers; results keep task order.
pub fn run_tasks(
    tasks: &[RunSpec],
    numerics: &Numerics,
    jobs: usize,
) -> Result<Vec<Result<RunResult>>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| tasks.par_iter().map(|t| run_one(t, numerics)).collect()))
}

pub fn timeseries_table(traj: &Trajectory) -> CsvTable {
    let mut t = CsvTable::new(TIMESERIES_COLUMNS);
    for r in &traj.records {
        let s = &r.stats;
        t.push_numbers(&[
            r.t_ns,
            s.v_min,
            s.theta_opt,
            s.s_db,
            r.mean_occ,
            s.v11,
            s.v22,
            s.v12,
            r.trace_error,
        ]);
    }
    t
}

/// `t_ns` followed by one S_dB column per run, plus a closing `S_max` row
/// when `summary_row` is set.
fn family_table(
    column_prefix: &str,
    values: &[f64],
    runs: &[&RunResult],
    summary_row: bool,
) -> CsvTable {
    let mut header = vec!["t_ns".to_string()];
    header.extend(
        values
            .iter()
            .map(|v| format!("S_dB[{column_prefix}={}]", fmt_sig(*v))),
    );
    let mut table = CsvTable::new(header);
    let n = runs[0].trajectory.records.len();
    for k in 0..n {
        let mut row = vec![runs[0].trajectory.records[k].t_ns];
        row.extend(runs.iter().map(|r| r.trajectory.records[k].stats.s_db));
        table.push_numbers(&row);
    }
    if summary_row {
        let mut fields = vec!["S_max".to_string()];
        fields.extend(runs.iter().map(|r| fmt_sig(r.max.s_max_db)));
        table.push_fields(fields);
    }
    table
}

pub fn wigner_table(w: &WignerGrid) -> CsvTable {
    let mut t = CsvTable::new(["re_alpha", "im_alpha", "W"]);
    for (i, &re) in w.re_axis.iter().enumerate() {
        for (j, &im) in w.im_axis.iter().enumerate() {
            t.push_numbers(&[re, im, w.value(i, j)]);
        }
    }
    t
}

/// Uniform δφ grid over [0, 2π] with both endpoints.
pub fn phase_grid(points: usize) -> Vec<f64> {
    (0..points)
        .map(|k| 2.0 * PI * k as f64 / (points - 1) as f64)
        .collect()
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Tasks of a scenario in output order.
pub fn scenario_tasks(cfg: &RunConfig) -> Vec<RunSpec> {
    let base = &cfg.system;
    let task = |label: String, model: ModelKind, params: SystemParams| RunSpec {
        label,
        model,
        params,
        keep_reduced: false,
    };
    match &cfg.scenario {
        Scenario::Single { model } => vec![task(model.to_string(), *model, base.clone())],
        Scenario::Fig2 { models } => models
            .iter()
            .map(|m| task(m.to_string(), *m, base.clone()))
            .collect(),
        Scenario::Fig3 {
            model,
            axis,
            kappas,
            temperatures,
        } => {
            let mut tasks = Vec::new();
            if matches!(axis, Fig3Axis::Kappa | Fig3Axis::Both) {
                for &k in kappas {
                    let p = SystemParams {
                        kappa: k,
                        ..base.clone()
                    };
                    tasks.push(task(format!("kappa={}", fmt_sig(k)), *model, p));
                }
            }
            if matches!(axis, Fig3Axis::Temperature | Fig3Axis::Both) {
                for &t in temperatures {
                    let p = SystemParams {
                        temperature: t,
                        ..base.clone()
                    };
                    tasks.push(task(format!("T={}", fmt_sig(t)), *model, p));
                }
            }
            tasks
        }
        Scenario::Fig4 {
            model,
            kappas,
            gammas,
            ..
        } => {
            let mut tasks = Vec::new();
            for &k in kappas {
                for &g in gammas {
                    let p = SystemParams {
                        kappa: k,
                        gamma: g,
                        ..base.clone()
                    };
                    let keep = same(k, base.kappa) && same(g, base.gamma);
                    let mut t = task(
                        format!("kappa={},gamma={}", fmt_sig(k), fmt_sig(g)),
                        *model,
                        p,
                    );
                    t.keep_reduced = keep;
                    tasks.push(t);
                }
            }
            if !tasks.iter().any(|t| t.keep_reduced) {
                let mut t = task("operating-point".into(), *model, base.clone());
                t.keep_reduced = true;
                tasks.push(t);
            }
            tasks
        }
        Scenario::Fig5 {
            phase_points,
            phases,
        } => {
            let grid = phases.clone().unwrap_or_else(|| phase_grid(*phase_points));
            grid.into_iter()
                .map(|phi| {
                    let p = SystemParams {
                        delta_phi: phi,
                        ..base.clone()
                    };
                    task(format!("dphi={}", fmt_sig(phi)), ModelKind::Full, p)
                })
                .collect()
        }
    }
}

fn status_table(tasks: &[RunSpec], outcomes: &[Result<RunResult>]) -> CsvTable {
    let mut t = CsvTable::new(["cell", "label", "status", "message"]);
    for (i, (task, o)) in tasks.iter().zip(outcomes).enumerate() {
        let (status, msg) = match o {
            Ok(_) => ("ok", String::new()),
            Err(e) => ("failed", e.to_string()),
        };
        let msg = msg.replace(['"', '\n'], " ");
        t.push_fields(vec![
            i.to_string(),
            format!("\"{}\"", task.label),
            status.to_string(),
            format!("\"{msg}\""),
        ]);
    }
    t
}

/// Runs the configured scenario into `out_dir` with `jobs` workers.
pub fn run_scenario(cfg: &RunConfig, out_dir: &Path, jobs: usize) -> Result<ScenarioOutput> {
    cfg.validate()?;
    let derived = derive(&cfg.system)?;
    let tasks = scenario_tasks(cfg);
    for t in &tasks {
        derive(&t.params).map_err(|e| Error::RunFailed {
            label: t.label.clone(),
            source: Box::new(e),
        })?;
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let clock = Instant::now();
    let manifest_path = out_dir.join(MANIFEST_FILE);
    let mut manifest = RunManifest {
        tool: "magnon".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        scenario: cfg.scenario.kind().into(),
        complete: false,
        started_at: now_iso8601(),
        finished_at: None,
        wall_clock_s: None,
        jobs,
        config: cfg.clone(),
        derived: derived.clone(),
        warnings: check_regime(&derived, &cfg.system),
        numerical_warnings: Vec::new(),
        runs: Vec::new(),
        files: Vec::new(),
        error: None,
    };
    write_json(&manifest_path, &manifest)?;

    let outcomes = run_tasks(&tasks, &cfg.numerics, jobs)?;
    manifest.runs = tasks
        .iter()
        .zip(&outcomes)
        .map(|(t, o)| summary(t, o))
        .collect();
    let mut files = vec![write_csv(
        out_dir,
        STATUS_FILE,
        &status_table(&tasks, &outcomes),
    )?];

    if let Some((task, err)) = tasks
        .iter()
        .zip(&outcomes)
        .find_map(|(t, o)| o.as_ref().err().map(|e| (t, e)))
    {
        manifest.error = Some(format!("run '{}' failed: {err}", task.label));
        manifest.files = file_names(&files);
        write_json(&manifest_path, &manifest)?;
        let source = outcomes
            .into_iter()
            .zip(&tasks)
            .find_map(|(o, t)| if t.label == task.label { o.err() } else { None })
            .expect("failing outcome present");
        return Err(Error::RunFailed {
            label: task.label.clone(),
            source: Box::new(source),
        });
    }
    let runs: Vec<RunResult> = outcomes
        .into_iter()
        .map(|o| o.expect("checked above"))
        .collect();

    let mut wigner_grid = None;
    let mut wigner_run = None;
    match &cfg.scenario {
        Scenario::Single { .. } | Scenario::Fig2 { .. } => {
            for r in &runs {
                let name = format!("timeseries_{}.csv", r.spec.model);
                files.push(write_csv(out_dir, &name, &timeseries_table(&r.trajectory))?);
            }
        }
        Scenario::Fig3 {
            kappas,
            temperatures,
            axis,
            ..
        } => {
            let mut offset = 0;
            if matches!(axis, Fig3Axis::Kappa | Fig3Axis::Both) {
                let part: Vec<&RunResult> = runs[..kappas.len()].iter().collect();
                files.push(write_csv(
                    out_dir,
                    "sweep_kappa.csv",
                    &family_table("kappa", kappas, &part, true),
                )?);
                offset = kappas.len();
            }
            if matches!(axis, Fig3Axis::Temperature | Fig3Axis::Both) {
                let part: Vec<&RunResult> =
                    runs[offset..offset + temperatures.len()].iter().collect();
                files.push(write_csv(
                    out_dir,
                    "sweep_temperature.csv",
                    &family_table("T", temperatures, &part, true),
                )?);
            }
        }
        Scenario::Fig4 {
            kappas,
            gammas,
            wigner: grid,
            ..
        } => {
            let mut table = CsvTable::new(["kappa", "gamma", "S_max", "t_opt", "theta_opt"]);
            for r in runs.iter().take(kappas.len() * gammas.len()) {
                table.push_numbers(&[
                    r.spec.params.kappa,
                    r.spec.params.gamma,
                    r.max.s_max_db,
                    r.max.t_opt_ns,
                    r.max.theta_opt,
                ]);
            }
            files.push(write_csv(out_dir, "grid_maxS.csv", &table)?);
            let idx = runs
                .iter()
                .position(|r| r.spec.keep_reduced)
                .expect("operating-point cell is always scheduled");
            let r = &runs[idx];
            let rho = &r.trajectory.reduced_states[r.max.index];
            let w = wigner(rho, grid)?;
            manifest
                .numerical_warnings
                .extend(w.warnings.iter().cloned());
            files.push(write_csv(out_dir, "wigner.csv", &wigner_table(&w))?);
            wigner_grid = Some(w);
            wigner_run = Some(idx);
        }
        Scenario::Fig5 { .. } => {
            let phases: Vec<f64> = runs.iter().map(|r| r.spec.params.delta_phi).collect();
            let part: Vec<&RunResult> = runs.iter().collect();
            files.push(write_csv(
                out_dir,
                "phase_sweep.csv",
                &family_table("dphi", &phases, &part, false),
            )?);
        }
    }

    manifest.files = file_names(&files);
    manifest.complete = true;
    manifest.finished_at = Some(now_iso8601());
    manifest.wall_clock_s = Some(clock.elapsed().as_secs_f64());
    write_json(&manifest_path, &manifest)?;
    files.push(manifest_path);
    Ok(ScenarioOutput {
        dir: out_dir.to_path_buf(),
        files,
        manifest,
        runs,
        wigner: wigner_grid,
        wigner_run,
    })
}

fn file_names(files: &[PathBuf]) -> Vec<String> {
    files
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect()
}

/// Single run of `model` whose Wigner function is taken at `at_ns`
/// (nearest output time) or at the time of maximum squeezing.
pub fn run_wigner(
    cfg: &RunConfig,
    model: ModelKind,
    grid: &GridSpec,
    at_ns: Option<f64>,
    out_dir: &Path,
) -> Result<(WignerGrid, f64, PathBuf)> {
    cfg.validate()?;
    grid.validate()?;
    let spec = RunSpec {
        label: model.to_string(),
        model,
        params: cfg.system.clone(),
        keep_reduced: true,
    };
    let r = run_one(&spec, &cfg.numerics)?;
    let idx = match at_ns {
        None => r.max.index,
        Some(t) => r
            .trajectory
            .records
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1.t_ns - t).abs().total_cmp(&(b.1.t_ns - t).abs()))
            .map(|(i, _)| i)
            .expect("trajectory has records"),
    };
    let w = wigner(&r.trajectory.reduced_states[idx], grid)?;
    let path = write_csv(out_dir, "wigner.csv", &wigner_table(&w))?;
    Ok((w, r.trajectory.records[idx].t_ns, path))
}

#[cfg(test)]
mod tests;
