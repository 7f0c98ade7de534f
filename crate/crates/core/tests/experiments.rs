use chemosim::experiments::{
    analyze, derive_verdict, preset, read_snapshot, run_experiment, sweep, Cadence, ExperimentConfig, ExperimentError,
    Verdict, PRESETS,
};
use std::path::Path;
use std::process::Command;

fn small(dir: &Path, t_end: f64) -> ExperimentConfig {
    let text = format!(
        "[grid]\ndim = 2\nnx = 12\nlx = 2\n[model]\ntau = 1\nbeta = 1\n\
         [motility]\nfamily = power\nk = 0.5\n\
         [consumption]\nfamily = monod\nk = 1\n\
         [initial]\nu_profile = noise\nu = 1\nu_amplitude = 0.2\nv = 1\nn = 0.5\nseed = 5\n\
         [time]\nt_end = {t_end}\ndt = 0.01\n\
         [output]\ninterval = 0.5\ndir = {}\n",
        dir.display()
    );
    ExperimentConfig::parse(&text).unwrap()
}

#[test]
fn presets_parse_and_round_trip() {
    assert_eq!(PRESETS.len(), 5);
    for (name, text) in PRESETS {
        let cfg = ExperimentConfig::parse(text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(cfg.output.scenario, name);
        assert_eq!(ExperimentConfig::parse(&cfg.serialize()).unwrap(), cfg);
        assert_eq!(preset(name), Some(text));
    }
    assert!(preset("nope").is_none());
}

#[test]
fn config_errors_carry_line_numbers() {
    let text = "[grid]\nnx = 8\n\n[motility]\nk = -1\nbogus = 3\n[time]\nt_end = abc\n";
    let err = ExperimentConfig::parse(text).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("line 5"), "{msg}");
    assert!(msg.contains("bogus"), "{msg}");
    assert!(msg.contains("line 8"), "{msg}");
    assert!(err.0.len() >= 3);
}

#[test]
fn overrides_apply_and_are_validated() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), 1.0);
    let k2 = cfg.with_override("motility.k", "2").unwrap();
    assert_eq!(k2.params().motility.gamma(2.0), 0.25);
    assert!(cfg.with_override("motility.k", "-2").is_err());
    assert!(cfg.with_override("time.t_end", "x").is_err());
    assert!(matches!(cfg.output.cadence, Cadence::Time(e) if e == 0.5));
}

#[test]
fn runs_are_deterministic_and_analyzable() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = run_experiment(&small(a.path(), 3.0)).unwrap();
    let rb = run_experiment(&small(b.path(), 3.0)).unwrap();
    let csv_a = std::fs::read(&ra.diagnostics_path).unwrap();
    assert_eq!(csv_a, std::fs::read(&rb.diagnostics_path).unwrap());
    assert_eq!(ra.records.len(), 7);
    assert!(ra.failure.is_none());

    let report = analyze(a.path()).unwrap();
    assert_eq!(report.records, ra.records);
    assert_eq!(report.verdict, derive_verdict(&ra.records, false));
    assert_eq!(report.verdict, ra.verdict);
    assert_eq!(report.lyapunov_violations, 0);
    assert!(report.mass_drift <= 1e-10);
    assert!(report.to_string().contains("verdict"));

    let cfg = ExperimentConfig::parse(&std::fs::read_to_string(&ra.config_path).unwrap()).unwrap();
    assert_eq!(cfg, small(a.path(), 3.0));
    let grid = cfg.grid.build().unwrap();
    let u = read_snapshot(&a.path().join("u.snap"), &grid).unwrap();
    assert_eq!(u.name, "u");
    assert_eq!(u.t, 3.0);
    let text = std::fs::read_to_string(&ra.verdict_path).unwrap();
    assert!(text.starts_with(&format!("verdict: {}", ra.verdict.summary())));
}

#[test]
fn analyze_needs_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(analyze(dir.path()), Err(ExperimentError::MissingDiagnostics(_))));
    std::fs::write(dir.path().join("diagnostics.csv"), "t,step\n1,2\n").unwrap();
    assert!(matches!(analyze(dir.path()), Err(ExperimentError::Malformed(_))));
}

#[test]
fn step_cadence_records_every_k_steps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), 0.5).with_override("time.adapt", "false").unwrap();
    let mut raw = cfg.serialize().replace("interval = 0.5", "every_steps = 10");
    raw.push('\n');
    let cfg = ExperimentConfig::parse(&raw).unwrap();
    let art = run_experiment(&cfg).unwrap();
    let steps: Vec<usize> = art.records.iter().map(|r| r.step).collect();
    assert_eq!(steps, vec![0, 10, 20, 30, 40, 50]);
}

#[test]
fn sweep_matches_serial_runs_and_k_controls_convergence() {
    let root = tempfile::tempdir().unwrap();
    let cfg = small(root.path(), 40.0);
    let values: Vec<String> = ["0.5", "1", "2"].iter().map(|s| s.to_string()).collect();
    let summary = sweep(&cfg, "motility.k", &values, Some(2), root.path()).unwrap();
    assert_eq!(summary.rows.len(), 3);
    let text = std::fs::read_to_string(&summary.summary_path).unwrap();
    assert_eq!(text.lines().count(), 4);

    for row in &summary.rows {
        assert!(row.error.is_none(), "{:?}", row.error);
        let serial_dir = tempfile::tempdir().unwrap();
        let mut one = cfg.with_override("motility.k", &row.value).unwrap();
        one.output.dir = serial_dir.path().to_path_buf();
        let art = run_experiment(&one).unwrap();
        assert_eq!(
            std::fs::read(&art.diagnostics_path).unwrap(),
            std::fs::read(row.dir.join("diagnostics.csv")).unwrap(),
            "k = {}",
            row.value
        );
        assert_eq!(row.verdict, Some(art.verdict.verdict));
        let k: f64 = row.value.parse().unwrap();
        if k <= 1.0 {
            assert_eq!(row.verdict, Some(Verdict::Converged), "k = {k}");
            assert!(row.delta.is_some_and(|d| d > 0.0), "k = {k}");
        }
    }
}

#[test]
fn sweep_rejects_bad_input() {
    let root = tempfile::tempdir().unwrap();
    let cfg = small(root.path(), 1.0);
    assert!(matches!(sweep(&cfg, "motility.k", &[], None, root.path()), Err(ExperimentError::EmptySweep)));
    let one = vec!["1".to_string()];
    assert!(matches!(sweep(&cfg, "motility.nope", &one, None, root.path()), Err(ExperimentError::BadAxis(_))));
    assert!(matches!(sweep(&cfg, "motility.family", &one, None, root.path()), Err(ExperimentError::BadAxis(_))));
    let bad = sweep(&cfg, "motility.k", &["-1".to_string()], Some(1), root.path()).unwrap();
    assert!(bad.rows[0].error.is_some() && bad.rows[0].verdict.is_none());
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_chemosim")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into(), String::from_utf8_lossy(&out.stderr).into())
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.ini");
    std::fs::write(&cfg_path, small(&dir.path().join("out"), 1.0).serialize()).unwrap();
    let cfg = cfg_path.to_str().unwrap();

    let (code, stdout, _) = cli(&["run", cfg]);
    assert_eq!(code, 0);
    assert!(stdout.contains("verdict:"));
    let (code, stdout, _) = cli(&["analyze", dir.path().join("out").to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.contains("lyapunov"));

    let bad_path = dir.path().join("bad.ini");
    std::fs::write(&bad_path, "[motility]\nk = -1\n").unwrap();
    let (code, _, stderr) = cli(&["run", bad_path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(stderr.contains("line 2"), "{stderr}");
    assert_eq!(cli(&["analyze", dir.path().to_str().unwrap()]).0, 2);
    assert_eq!(cli(&["sweep", cfg, "--axis", "motility.k", "--values="]).0, 2);
    assert_eq!(cli(&["run", "preset:missing"]).0, 2);

    let (code, stdout, _) = cli(&["preset"]);
    assert_eq!(code, 0);
    assert!(PRESETS.iter().all(|(n, _)| stdout.contains(n)));
    let (code, stdout, _) = cli(&["check-gamma", "preset:stabilization-k-half", "--k", "0.5"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("holds"));
}
