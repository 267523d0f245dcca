//! End-to-end pipeline checks through the public entry points: the CLI
//! binary, the config file round-trip, and the zero-interaction growth
//! law of a full run.

mod common;

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;

use coalsim::config::{BumpProfile, BumpSpec, Mode, RunConfig};
use coalsim::model::SpeciesComponent;
use coalsim::presets::preset;
use coalsim::run::run;
use coalsim::vec2::Vec2;
use common::windowed_slope;

fn coalsim_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_coalsim"))
}

#[test]
fn cli_preset_run_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let out_c = dir.path().join("c");
    let run_preset = |out: &Path, seed: &str, threads: &str| {
        let status = coalsim_bin()
            .args([
                "preset",
                "pks-mass-transfer",
                "--particles",
                "200",
                "--nx",
                "65",
                "--t-end",
                "0.005",
                "--seed",
                seed,
                "--threads",
                threads,
                "--out",
            ])
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    };
    run_preset(&out_a, "9", "4");
    run_preset(&out_b, "9", "1");
    run_preset(&out_c, "10", "4");
    let a = std::fs::read(out_a.join("timeseries.csv")).unwrap();
    let b = std::fs::read(out_b.join("timeseries.csv")).unwrap();
    let c = std::fs::read(out_c.join("timeseries.csv")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b, "same seed must give identical output at any thread count");
    assert_ne!(a, c, "different seeds must give different series");
}

#[test]
fn cli_config_only_round_trips_preset() {
    let dir = tempfile::tempdir().unwrap();
    let status = coalsim_bin()
        .args(["preset", "mpks-asymmetric", "--config-only", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let loaded = RunConfig::load(&dir.path().join("config.ini")).unwrap();
    let mut expected = preset("mpks-asymmetric").unwrap();
    expected.output_dir = dir.path().to_path_buf();
    assert_eq!(loaded, expected);
}

#[test]
fn cli_simulate_runs_a_saved_config() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("small.ini");
    let out = dir.path().join("run");
    let config = RunConfig {
        mode: Mode::Pks,
        chi: 1.0,
        species: vec![SpeciesComponent {
            diffusivity: 1.0,
            total_mass: PI,
        }],
        n0: 50,
        domain_center: Vec2::ZERO,
        domain_half_width: 4.0,
        nx: 33,
        dt: 1e-3,
        t_end: 3e-3,
        output_dir: out.clone(),
        bumps: vec![BumpSpec {
            center: Vec2::ZERO,
            semi_axes: Vec2::new(1.0, 1.0),
            angle: 0.0,
            mass: PI,
            species: 0,
        }],
        ..RunConfig::default()
    };
    config.save(&config_path).unwrap();
    let status = coalsim_bin().arg("simulate").arg(&config_path).status().unwrap();
    assert!(status.success());
    assert!(out.join("timeseries.csv").is_file());
    assert!(out.join("events.csv").is_file());
    assert!(out.join("config.ini").is_file());
}

#[test]
fn cli_predict_slope_matches_closed_form() {
    let output = coalsim_bin()
        .args(["predict", "slope", "--chi", "1", "--mu", "1", "--mass"])
        .arg(format!("{}", 48.0 * PI))
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    assert!(text.contains("slope = -20.000"), "{text}");
}

/// With chi = 0 the particles diffuse freely and the normalized second
/// moment grows at exactly 4 mu_tilde (N - 1) / M = 4 mu (N - 1) / N.
#[test]
fn chi_zero_run_grows_at_free_diffusion_rate() {
    let dir = tempfile::tempdir().unwrap();
    let n0 = 5000;
    let config = RunConfig {
        mode: Mode::Pks,
        chi: 0.0,
        species: vec![SpeciesComponent {
            diffusivity: 1.0,
            total_mass: 2.0 * PI,
        }],
        n0,
        domain_center: Vec2::ZERO,
        domain_half_width: 4.0,
        nx: 65,
        dt: 2e-3,
        t_end: 0.1,
        seed: 11,
        output_dir: dir.path().to_path_buf(),
        profile: BumpProfile::Uniform,
        bumps: vec![BumpSpec {
            center: Vec2::ZERO,
            semi_axes: Vec2::new(1.0, 1.0),
            angle: 0.0,
            mass: 2.0 * PI,
            species: 0,
        }],
        ..RunConfig::default()
    };
    let summary = run(&config).unwrap();
    assert!(summary.events.is_empty(), "chi = 0 must not merge anything");
    let expected = 4.0 * (n0 as f64 - 1.0) / n0 as f64;
    let (slope, r2) = windowed_slope(&summary.records, 0.0, 0.1, |r| r.y_norm);
    assert!(
        (slope - expected).abs() <= 0.05 * expected,
        "free-diffusion slope {slope} vs {expected}, r2 {r2}"
    );
    assert!(r2 > 0.99, "growth should be close to linear, r2 {r2}");
}
