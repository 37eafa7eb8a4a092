//! End-to-end runs of the `splithmc` binary: exit codes, output schema,
//! byte reproducibility and the documented subcommand behaviours.

use std::path::{Path, PathBuf};
use std::process::Command;

use splithmc_cli::commands;
use splithmc_cli::config::{
    parse_config, PhmcConfig, SampleConfig, ScalingConfig, TuneConfig, VarianceRun,
};

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_splithmc"))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

const SAMPLE_CONFIG: &str = r#"
seed = 7
out = "OUT"
transitions = 40
chains = 2
[target]
kind = "gaussian"
k = [[50.5, -49.5], [-49.5, 50.5]]
[scheme]
kind = "velocity_verlet"
[chain]
variant = "hmc"
lambda = 1.35
h = 0.15
init = [9.0, 9.0]
"#;

#[test]
fn sample_binary_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    let config = write(
        dir.path(),
        "sample.toml",
        &SAMPLE_CONFIG.replace("OUT", out.to_str().unwrap()),
    );
    let mut bytes = Vec::new();
    for threads in ["1", "3"] {
        let status = binary()
            .args(["sample", "--config"])
            .arg(&config)
            .args(["--threads", threads])
            .status()
            .unwrap();
        assert!(status.success());
        bytes.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(bytes[0], bytes[1], "outputs must not depend on threading");
}

#[test]
fn sample_output_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    let config = write(
        dir.path(),
        "sample.toml",
        &SAMPLE_CONFIG.replace("OUT", out.to_str().unwrap()),
    );
    assert!(binary()
        .args(["sample", "--config"])
        .arg(&config)
        .status()
        .unwrap()
        .success());
    let text = std::fs::read_to_string(&out).unwrap();

    // Leading comment block is the canonical config and parses back to an
    // equal configuration.
    let header: String = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .map(|l| l.trim_start_matches("# ").trim_start_matches('#'))
        .collect::<Vec<_>>()
        .join("\n");
    let embedded: SampleConfig = parse_config(&header).unwrap();
    let original: SampleConfig =
        parse_config(&SAMPLE_CONFIG.replace("OUT", out.to_str().unwrap())).unwrap();
    assert_eq!(embedded, original);

    // Table: header + 2 chains x 40 transitions rows, RFC-4180 plain.
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], "chain,transition,accepted,delta_h,q0,q1");
    assert_eq!(data.len(), 1 + 80);

    // JSON footers: one per chain plus an aggregate.
    let footers: Vec<serde_json::Value> = text
        .lines()
        .filter(|l| l.starts_with("# {"))
        .map(|l| serde_json::from_str(l.trim_start_matches("# ")).unwrap())
        .collect();
    assert_eq!(footers.len(), 3);
    assert_eq!(footers[2]["aggregate"], serde_json::Value::Bool(true));
    assert!(footers[2]["acceptance"].as_f64().unwrap() > 0.0);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();

    // 2: config error (unknown field)
    let bad = write(
        dir.path(),
        "bad.toml",
        "seed = 1\nout = \"x.csv\"\nbogus = true\n",
    );
    let status = binary()
        .args(["sample", "--config"])
        .arg(&bad)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // 2: out-of-domain optimize range
    let status = binary().args(["optimize", "--c", "4.5"]).status().unwrap();
    assert_eq!(status.code(), Some(2));

    // 1: missing config file
    let status = binary()
        .args(["sample", "--config", "/nonexistent/file.toml"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));

    // 0: a good run
    let out = dir.path().join("t1.csv");
    let status = binary()
        .args(["table1", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    let config = write(
        dir.path(),
        "sample.toml",
        &SAMPLE_CONFIG.replace("OUT", out_a.to_str().unwrap()),
    );
    assert!(binary()
        .args(["sample", "--config"])
        .arg(&config)
        .status()
        .unwrap()
        .success());
    assert!(binary()
        .args(["sample", "--config"])
        .arg(&config)
        .args(["--seed", "8"])
        .args(["--out"])
        .arg(&out_b)
        .status()
        .unwrap()
        .success());
    let a = std::fs::read_to_string(&out_a).unwrap();
    let b = std::fs::read_to_string(&out_b).unwrap();
    let strip = |s: &str| -> String {
        s.lines()
            .filter(|l| !l.starts_with('#'))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_ne!(
        strip(&a),
        strip(&b),
        "a different seed must change the stream"
    );
}

#[test]
fn phmc_curves_overlay_for_c_one() {
    // Refining the grid must not change the c = 1 acceptance curve by more
    // than 0.05 anywhere.
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("phmc.csv");
    let cfg = PhmcConfig {
        seed: 5,
        out: out.to_str().unwrap().into(),
        s_len: 1.0,
        ds: vec![0.05, 0.02],
        c: vec![1.0],
        lambda: 20.0,
        transitions: 2500,
        mode: "prhmc".into(),
        h_min: 0.5,
        h_max: 2.0,
        h_points: 4,
        variance_run: None,
    };
    commands::cmd_phmc(&cfg, 2).unwrap();
    let text = std::fs::read_to_string(&out).unwrap();
    let mut curves: std::collections::HashMap<String, Vec<f64>> = Default::default();
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        curves
            .entry(fields[1].to_string())
            .or_default()
            .push(fields[4].parse().unwrap());
    }
    let keys: Vec<&String> = curves.keys().collect();
    assert_eq!(keys.len(), 2);
    let a = &curves[keys[0]];
    let b = &curves[keys[1]];
    for (x, y) in a.iter().zip(b.iter()) {
        assert!((x - y).abs() <= 0.05, "curves diverge: {x} vs {y}");
    }
}

#[test]
fn phmc_variance_mode_writes_companion_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("phmc.csv");
    let cfg = PhmcConfig {
        seed: 6,
        out: out.to_str().unwrap().into(),
        s_len: 1.0,
        ds: vec![0.1],
        c: vec![1.0],
        lambda: 10.0,
        transitions: 500,
        mode: "prhmc".into(),
        h_min: 1.0,
        h_max: 1.0,
        h_points: 1,
        variance_run: Some(VarianceRun {
            c: 1.0,
            ds: 0.1,
            h: 1.0,
            transitions: 50_000,
        }),
    };
    commands::cmd_phmc(&cfg, 1).unwrap();
    let table = commands::variance_table_path(out.to_str().unwrap());
    let text = std::fs::read_to_string(&table).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "node,s,empirical_variance,exact_variance");
    assert_eq!(rows.len(), 1 + 9);
    let footer: serde_json::Value = text
        .lines()
        .find(|l| l.starts_with("# {"))
        .map(|l| serde_json::from_str(l.trim_start_matches("# ")).unwrap())
        .unwrap();
    // 5e4 samples on a 9-node grid: a loose but real closeness check.
    assert!(footer["relative_l2_error"].as_f64().unwrap() < 0.1);
}

#[test]
fn phmc_rejects_nondividing_grid() {
    let cfg = PhmcConfig {
        seed: 0,
        out: "unused.csv".into(),
        s_len: 1.0,
        ds: vec![0.03],
        c: vec![1.0],
        lambda: 10.0,
        transitions: 10,
        mode: "prhmc".into(),
        h_min: 1.0,
        h_max: 1.0,
        h_points: 1,
        variance_run: None,
    };
    let err = commands::cmd_phmc(&cfg, 1).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn tune_defaults_surface_the_optimum() {
    // The default target acceptance is 0.651 and appears in the help text.
    let output = binary().args(["tune", "--help"]).output().unwrap();
    let help = String::from_utf8(output.stdout).unwrap();
    assert!(help.contains("0.651"), "{help}");

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("tune.csv");
    let cfg = TuneConfig {
        seed: 9,
        out: out.to_str().unwrap().into(),
        target: splithmc_cli::config::TargetConfig::std_normal(1),
        scheme: Default::default(),
        lambda: 2.0,
        target_acceptance: splithmc_cli::config::default_target_acceptance(),
        pilot_transitions: 2000,
        h_init: 0.5,
    };
    let report = commands::cmd_tune(&cfg).unwrap();
    assert!(report.bracketed);
    assert!((report.observed - 0.651).abs() < 0.05);
    assert!(std::fs::read_to_string(&out).unwrap().contains("bracketed"));
}

#[test]
fn exact_variant_ignores_step_constraints() {
    // Exact flows only use the duration, so h > lambda must not be
    // rejected for them.
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("exact.csv");
    let config = format!(
        r#"
seed = 4
out = "{}"
transitions = 200
[target]
kind = "std_normal"
dim = 1
[chain]
variant = "exact_rhmc"
lambda = 1.0
h = 5.0
"#,
        out.to_str().unwrap()
    );
    let cfg: SampleConfig = parse_config(&config).unwrap();
    let summary = commands::cmd_sample(&cfg, 1).unwrap();
    assert_eq!(summary.acceptance, 1.0);
}

#[test]
fn optimized_two_stage_curve_dominates_quarter() {
    // Over the working range the minimax coefficient keeps the
    // energy-error function below the Verlet-concatenation value
    // everywhere, not just at the worst point.
    let dir = tempfile::tempdir().unwrap();
    let mut curves: Vec<Vec<f64>> = Vec::new();
    for (name, b) in [("blanes_two_stage", None), ("two_stage", Some(0.25))] {
        let out = dir.path().join(format!("{name}.csv"));
        let cfg = splithmc_cli::config::HarmonicConfig {
            seed: 0,
            out: out.to_str().unwrap().into(),
            scheme: splithmc_cli::config::SchemeConfig {
                kind: name.into(),
                a: None,
                b,
                n: None,
            },
            h_max: 1.99,
            points: 150,
        };
        commands::cmd_harmonic(&cfg).unwrap();
        let text = std::fs::read_to_string(&out).unwrap();
        curves.push(
            text.lines()
                .filter(|l| !l.starts_with('#'))
                .skip(1)
                .map(|l| l.split(',').nth(4).unwrap().parse().unwrap())
                .collect(),
        );
    }
    for (i, (blanes, quarter)) in curves[0].iter().zip(curves[1].iter()).enumerate() {
        assert!(
            blanes < quarter,
            "grid point {i}: rho {blanes} vs {quarter}"
        );
    }
}

#[test]
fn position_verlet_recipe_gets_stuck() {
    // Started ten standard deviations out, the drift-first scheme rejects
    // every transition, so the chain never leaves its starting point.
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("stuck.csv");
    let config = format!(
        r#"
seed = 3
out = "{}"
transitions = 60
[target]
kind = "std_normal"
dim = 1
[scheme]
kind = "position_verlet"
[chain]
variant = "hmc"
lambda = 9.25
h = 1.85
init = [10.0]
"#,
        out.to_str().unwrap()
    );
    let cfg: SampleConfig = parse_config(&config).unwrap();
    let summary = commands::cmd_sample(&cfg, 1).unwrap();
    assert_eq!(summary.acceptance, 0.0);
    assert_eq!(summary.component_mean[0], 10.0);
    assert_eq!(summary.component_variance[0], 0.0);
}

#[test]
fn scaling_sanity_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scaling.csv");
    let cfg = ScalingConfig {
        seed: 12,
        out: out.to_str().unwrap().into(),
        target: splithmc_cli::config::TargetConfig::std_normal(1),
        scheme: Default::default(),
        ell: 1.3,
        nu: 2,
        m_list: vec![1, 16],
        lambda: 1.3,
        transitions: 8000,
    };
    let rows = commands::cmd_scaling(&cfg).unwrap();
    assert_eq!(rows.len(), 2);
    // m = 1 sanity row: a real acceptance rate
    assert!(rows[0].1 > 0.0 && rows[0].1 <= 1.0);
    // acceptance at fixed h is nonincreasing in m (3 SE slack)
    let slack = 3.0 * (0.25f64 / 8000.0).sqrt();
    assert!(
        rows[1].3 <= rows[0].3 + slack,
        "fixed-h acceptance should not grow with m: {} -> {}",
        rows[0].3,
        rows[1].3
    );
}
