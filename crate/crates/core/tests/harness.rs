mod common;

use std::path::PathBuf;

use ancilla::harness::output::{checkpoint_path, Checkpoint};
use ancilla::harness::*;
use ancilla::Error;
use rand::Rng;
use rand_distr::StandardNormal;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ancilla-test-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn beta_sweep() -> ExperimentConfig {
    ExperimentConfig::from_json(
        r#"{
            "name": "beta_small",
            "kind": "sweep_beta",
            "system": {"kind": "harmonic", "dim": 3, "gap": 1.0},
            "channel": {"alpha": 0.06, "t": 6.283185307179586, "beta": 1, "gamma": {"kind": "fixed", "gamma": 1.0}},
            "eps": 0.15,
            "trials": 8,
            "max_trials": 32,
            "seed": 3,
            "grid": [0.5, 2.0, 4.0]
        }"#,
    )
    .unwrap()
}

#[test]
fn power_law_fits() {
    let xs: Vec<f64> = (1..=10).map(|k| k as f64).collect();
    let f = fit_power_law(&xs, &xs.iter().map(|x| x * x).collect::<Vec<_>>()).unwrap();
    assert!((f.slope - 2.0).abs() < 1e-12 && f.intercept.abs() < 1e-12 && (f.r_squared - 1.0).abs() < 1e-12);
    let f = fit_power_law(&xs, &xs.iter().map(|x| 7.0 * x.powf(2.5)).collect::<Vec<_>>()).unwrap();
    assert!((f.slope - 2.5).abs() < 1e-12);
    assert!((f.intercept - 7f64.ln()).abs() < 1e-12);

    let mut r = common::stream(31);
    let xs: Vec<f64> = (0..20).map(|k| 2f64.powf(k as f64 / 4.0)).collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|x| {
            let z: f64 = r.sample(StandardNormal);
            x.powi(3) * (1.0 + 0.01 * z)
        })
        .collect();
    let f = fit_power_law(&xs, &ys).unwrap();
    assert!((2.9..=3.1).contains(&f.slope), "{f:?}");
    assert!(f.r_squared > 0.99);

    assert!(fit_power_law(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    assert!(fit_power_law(&[1.0, 2.0, 3.0], &[1.0, 2.0]).is_err());
    assert!(fit_power_law(&[1.0, 2.0, 3.0], &[1.0, 0.0, 2.0]).is_err());
    assert!(fit_power_law(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]).is_err());
}

#[test]
fn config_round_trip() {
    let cfg = beta_sweep();
    let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
    assert_eq!(back, cfg);
    // defaults are filled in
    let m = ExperimentConfig::from_json(
        r#"{"name":"m","kind":"markov","system":{"kind":"qubit","gap":1.0},"channel":{"alpha":0.01,"t":2,"beta":"inf","gamma":{"kind":"lowest_gap"}}}"#,
    )
    .unwrap();
    assert_eq!((m.eps, m.trials, m.l_max, m.seed), (0.05, 100, 1_000_000, 0));
    assert!(m.channel.unwrap().beta.is_infinite());
}

#[test]
fn invalid_configs_name_the_field() {
    let field = |text: &str| match ExperimentConfig::from_json(text) {
        Err(Error::Config { field, .. }) => field,
        other => panic!("expected a config error, got {other:?}"),
    };
    let sys = r#""system":{"kind":"qubit","gap":1.0}"#;
    let ch = r#""channel":{"alpha":0.01,"t":2,"beta":1,"gamma":{"kind":"lowest_gap"}}"#;
    assert_eq!(field(&format!(r#"{{"name":"x","kind":"min_l",{sys}}}"#)), "channel");
    assert_eq!(field(&format!(r#"{{"name":"x","kind":"min_l",{sys},{ch},"eps":-1}}"#)), "eps");
    assert_eq!(field(&format!(r#"{{"name":"x","kind":"sweep_beta",{sys},{ch}}}"#)), "grid");
    assert_eq!(field(&format!(r#"{{"name":"x","kind":"trajectory",{sys},{ch}}}"#)), "steps");
    assert_eq!(field(&format!(r#"{{"name":"x","kind":"sweep_epsilon",{sys},{ch},"grid":[0.1,0.2,0.3]}}"#)), "scaling");
    assert_eq!(field(&format!(r#"{{"name":"x","kind":"min_l",{sys},{ch},"trials":4,"max_trials":2}}"#)), "max_trials");
    assert_eq!(field(&format!(r#"{{"name":"a/b","kind":"min_l",{sys},{ch}}}"#)), "name");
    let no_alpha = r#""channel":{"t":2,"beta":1,"gamma":{"kind":"lowest_gap"}}"#;
    assert_eq!(field(&format!(r#"{{"name":"x","kind":"min_l",{sys},{no_alpha}}}"#)), "channel.alpha");
    // unknown fields are rejected by the parser
    assert!(ExperimentConfig::from_json(&format!(r#"{{"name":"x","kind":"min_l",{sys},{ch},"trails":4}}"#)).is_err());
}

#[test]
fn sweep_output_is_byte_deterministic() {
    let cfg = beta_sweep();
    let (a, b) = (scratch("det_a"), scratch("det_b"));
    let ra = run(&cfg, &a, None).unwrap();
    let rb = run(&cfg, &b, None).unwrap();
    let (ca, cb) = (std::fs::read(&ra.csv).unwrap(), std::fs::read(&rb.csv).unwrap());
    assert_eq!(ca, cb);
    assert!(!checkpoint_path(&a, &cfg.name).exists());

    let text = String::from_utf8(ca).unwrap();
    assert!(text.starts_with("# ancilla-records v1 kind=sweep_beta"));
    let rec = Records::from_csv(&text).unwrap();
    assert_eq!(rec, ra.report.records);
    assert_eq!(rec.rows.len(), 3);
    assert_eq!(rec.get("grid_value").unwrap(), vec!["0.5", "2.0", "4.0"]);

    let meta: RunMeta = serde_json::from_str(&std::fs::read_to_string(&ra.meta).unwrap()).unwrap();
    assert_eq!(meta.rows, 3);
    assert_eq!(meta.kind, "sweep_beta");
    assert_eq!(meta.row_seconds.len(), 3);
    assert_eq!(serde_json::from_value::<ExperimentConfig>(meta.config).unwrap(), cfg);
}

#[test]
fn row_configs_reproduce_their_rows() {
    let cfg = beta_sweep();
    let report = execute(&cfg, &RunOptions::default()).unwrap();
    let rec = &report.records;
    let cfg_col = rec.column("config").unwrap();
    for row in &rec.rows {
        let point = ExperimentConfig::from_json(&row[cfg_col]).unwrap();
        assert_eq!(point.kind, ExperimentKind::MinL);
        let again = execute(&point, &RunOptions::default()).unwrap();
        let other = &again.records.rows[0];
        for col in ["seed", "beta", "steps", "mean_distance", "std_error", "trials", "absolute_gap"] {
            let k = rec.column(col).unwrap();
            assert_eq!(row[k], other[k], "column {col}");
        }
    }
}

#[test]
fn checkpoints_resume_and_invalidate() {
    let cfg = beta_sweep();
    let dir = scratch("ckpt");
    let columns: Vec<String> = SEARCH_COLUMNS.iter().map(|s| s.to_string()).collect();
    let fake: Vec<String> = columns.iter().map(|c| format!("resumed-{c}")).collect();

    let mut c = Checkpoint::open(checkpoint_path(&dir, &cfg.name), &cfg.to_json(), &columns, 3).unwrap();
    c.record(1, &fake, 0.5).unwrap();
    let opts = RunOptions { checkpoint_dir: Some(dir.clone()), base_dir: None };
    let rep = execute(&cfg, &opts).unwrap();
    assert_eq!(rep.records.rows[1], fake);
    assert_eq!(rep.row_seconds[1], 0.5);
    assert!(!checkpoint_path(&dir, &cfg.name).exists());

    // a log written for another config is discarded
    let mut other = cfg.clone();
    other.seed += 1;
    let mut c = Checkpoint::open(checkpoint_path(&dir, &cfg.name), &other.to_json(), &columns, 3).unwrap();
    c.record(1, &fake, 0.5).unwrap();
    let rep = execute(&cfg, &opts).unwrap();
    assert_ne!(rep.records.rows[1], fake);
    let plain = execute(&cfg, &RunOptions::default()).unwrap();
    assert_eq!(rep.records, plain.records);
}

#[test]
fn other_experiment_kinds() {
    let sys = r#""system":{"kind":"harmonic","dim":3,"gap":1.0}"#;
    let ch = r#""channel":{"alpha":0.05,"t":6.283185307179586,"beta":1,"gamma":{"kind":"fixed","gamma":1.0}}"#;

    let t = ExperimentConfig::from_json(&format!(r#"{{"name":"t","kind":"trajectory",{sys},{ch},"steps":50,"trials":4}}"#)).unwrap();
    let rep = execute(&t, &RunOptions::default()).unwrap();
    assert_eq!(rep.records.rows.len(), 51);
    let md = rep.records.get("mean_distance").unwrap();
    let first: f64 = md[0].parse().unwrap();
    let last: f64 = md[50].parse().unwrap();
    assert!(last < first);

    let m = ExperimentConfig::from_json(&format!(r#"{{"name":"m","kind":"markov",{sys},{ch}}}"#)).unwrap();
    let rep = execute(&m, &RunOptions::default()).unwrap();
    assert!(!rep.records.rows.is_empty());

    let p = ExperimentConfig::from_json(&format!(
        r#"{{"name":"p","kind":"plan",{sys},{ch},"eps":0.1,"plan":{{"setting":"harmonic"}}}}"#
    ))
    .unwrap();
    let rep = execute(&p, &RunOptions::default()).unwrap();
    assert_eq!(rep.records.rows.len(), 1);

    let v = ExperimentConfig::from_json(&format!(r#"{{"name":"v","kind":"validate",{sys},{ch},"samples":200}}"#)).unwrap();
    let rep = execute(&v, &RunOptions::default()).unwrap();
    assert!(rep.passed, "{:?}", rep.records.rows);

    let g = ExperimentConfig::from_json(&format!(r#"{{"name":"g","kind":"sweep_gamma_noise",{sys},{ch},"eps":0.15,"trials":4,"grid":[0.0,0.05]}}"#)).unwrap();
    let rep = execute(&g, &RunOptions::default()).unwrap();
    assert_eq!(rep.records.rows.len(), 2);
}

#[test]
fn trajectory_rows_are_log_spaced_for_long_runs() {
    assert_eq!(trajectory_steps(5), vec![0, 1, 2, 3, 4, 5]);
    assert_eq!(trajectory_steps(2000).len(), 2001);
    let s = trajectory_steps(1_000_000);
    assert_eq!((s[0], *s.last().unwrap()), (0, 1_000_000));
    assert!(s.len() <= 1002);
    assert!(s.windows(2).all(|w| w[0] < w[1]));
}
