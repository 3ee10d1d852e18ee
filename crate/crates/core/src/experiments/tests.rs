use super::*;
use crate::params::SystemParams;

fn quick_config(scenario: Scenario) -> RunConfig {
    RunConfig {
        system: SystemParams::operating_point(),
        scenario,
        numerics: Numerics {
            fock_dim: 12,
            horizon_ns: 60.0,
            output_dt_ns: 5.0,
            ..Numerics::default()
        },
        output_dir: None,
    }
}

#[test]
fn argmax_prefers_earliest_tie() {
    let cfg = quick_config(Scenario::default());
    let r = run_one(
        &RunSpec {
            label: "x".into(),
            model: ModelKind::Rabi,
            params: cfg.system.clone(),
            keep_reduced: false,
        },
        &cfg.numerics,
    )
    .unwrap();
    let mut recs = r.trajectory.records.clone();
    let top = recs[3].clone();
    recs[5] = top.clone();
    recs[7] = top;
    for r in recs.iter_mut().skip(8) {
        r.stats.s_db = -1.0;
    }
    for r in recs.iter_mut().take(3) {
        r.stats.s_db = -1.0;
    }
    recs[4].stats.s_db = -1.0;
    recs[6].stats.s_db = -1.0;
    let m = find_max_in(&recs).unwrap();
    assert_eq!(m.index, 3);
    assert!(find_max_in(&[]).is_err());
}

#[test]
fn phase_grid_includes_both_ends() {
    let g = phase_grid(25);
    assert_eq!(g.len(), 25);
    assert_eq!(g[0], 0.0);
    assert!((g[24] - 2.0 * PI).abs() < 1e-15);
    assert!((g[6] - PI / 2.0).abs() < 1e-15);
}

#[test]
fn single_scenario_writes_manifest_and_timeseries() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(Scenario::Single {
        model: ModelKind::Rabi,
    });
    let out = run_scenario(&cfg, dir.path(), 1).unwrap();
    assert!(out.manifest.complete);
    let text = std::fs::read_to_string(dir.path().join("timeseries_rabi.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), TIMESERIES_COLUMNS.join(","));
    assert_eq!(lines.count(), 13);
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap())
            .unwrap();
    assert_eq!(m["complete"], true);
    assert_eq!(m["runs"][0]["status"], "ok");
    assert!(m["started_at"].is_string());
}

#[test]
fn fig4_schedules_operating_point_and_wigner() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quick_config(Scenario::Fig4 {
        model: ModelKind::Rabi,
        kappas: vec![0.5, 1.0],
        gammas: vec![0.03],
        wigner: GridSpec {
            points: 11,
            ..GridSpec::default()
        },
    });
    cfg.numerics.fock_dim = 10;
    let tasks = scenario_tasks(&cfg);
    assert_eq!(tasks.len(), 3);
    assert!(tasks[2].keep_reduced);
    let out = run_scenario(&cfg, dir.path(), 2).unwrap();
    assert_eq!(out.wigner_run, Some(2));
    let grid = std::fs::read_to_string(dir.path().join("grid_maxS.csv")).unwrap();
    assert_eq!(grid.lines().count(), 3);
    let w = std::fs::read_to_string(dir.path().join("wigner.csv")).unwrap();
    assert_eq!(w.lines().count(), 1 + 121);
}

#[test]
fn failed_cell_leaves_incomplete_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quick_config(Scenario::Single {
        model: ModelKind::Rabi,
    });
    cfg.numerics.max_step_ns = None;
    cfg.numerics.fixed_step_ns = Some(2.5);
    cfg.system.e2 = 6.0e4;
    let err = run_scenario(&cfg, dir.path(), 1).unwrap_err();
    assert!(matches!(err, Error::RunFailed { .. }), "{err}");
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap())
            .unwrap();
    assert_eq!(m["complete"], false);
    assert!(m["error"].is_string());
    let status = std::fs::read_to_string(dir.path().join(STATUS_FILE)).unwrap();
    assert!(status.contains("failed"));
}

#[test]
fn job_count_does_not_change_output() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut cfg = quick_config(Scenario::Fig3 {
        model: ModelKind::Rabi,
        axis: Fig3Axis::Kappa,
        kappas: vec![0.1, 1.0, 2.0],
        temperatures: vec![0.01],
    });
    cfg.numerics.fock_dim = 8;
    run_scenario(&cfg, a.path(), 1).unwrap();
    run_scenario(&cfg, b.path(), 3).unwrap();
    let fa = std::fs::read(a.path().join("sweep_kappa.csv")).unwrap();
    let fb = std::fs::read(b.path().join("sweep_kappa.csv")).unwrap();
    assert_eq!(fa, fb);
    let text = String::from_utf8(fa).unwrap();
    assert!(text.starts_with("t_ns,S_dB[kappa=0.1],S_dB[kappa=1],S_dB[kappa=2]\n"));
    assert!(text.lines().last().unwrap().starts_with("S_max,"));
}
