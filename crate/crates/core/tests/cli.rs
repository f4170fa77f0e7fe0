use std::path::Path;
use std::process::{Command, Output};

use misi::forward::MeasurementSet;
use misi::io::container;

const EXPERIMENT: &str = r#"
[scene]
layout = "ring"
n_tx = 3
blind_deg = 30.0
rx_step_deg = 30.0
radius = 3.0
doi_half = 0.5
n_grid = 10
frequencies = [3e8, 4e8]

[phantom]
[[phantom.shapes]]
kind = "disk"
center = [0.1, 0.0]
radius = 0.2
eps_r = 2.0
"#;

const NET: &str = "n_features = 8\nsigma_ff = 1.0\nhidden = [12]\n";

fn misi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_misi")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn setup(dir: &Path) -> String {
    std::fs::write(dir.join("exp.toml"), EXPERIMENT).unwrap();
    std::fs::write(dir.join("net.toml"), NET).unwrap();
    dir.to_string_lossy().into_owned()
}

#[test]
fn synth_refuses_to_overwrite_without_force() {
    let dir = tempfile::tempdir().unwrap();
    let d = setup(dir.path());
    let args = ["synth", "--config", &format!("{d}/exp.toml"), "--out", &format!("{d}/x.misi")];
    assert_eq!(code(&misi(&args)), 0);
    let again = misi(&args);
    assert_eq!(code(&again), 3);
    assert!(String::from_utf8_lossy(&again.stderr).contains("x.misi"));
    let mut forced = args.to_vec();
    forced.push("--force");
    assert_eq!(code(&misi(&forced)), 0);
}

#[test]
fn several_noise_levels_share_the_clean_signal() {
    let dir = tempfile::tempdir().unwrap();
    let d = setup(dir.path());
    let out = misi(&[
        "synth", "--config", &format!("{d}/exp.toml"), "--out", &format!("{d}/data.misi"),
        "--snr", "20", "--snr", "10", "--snr", "0", "--seed", "5",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let clean_out = misi(&["synth", "--config", &format!("{d}/exp.toml"), "--out", &format!("{d}/clean.misi")]);
    assert_eq!(code(&clean_out), 0);
    let clean: MeasurementSet<f64> = container::read(&dir.path().join("clean.misi")).unwrap();
    assert_eq!(clean.snr_applied, None);
    for snr in [20.0, 10.0, 0.0] {
        let m: MeasurementSet<f64> = container::read(&dir.path().join(format!("data_snr{snr}.misi"))).unwrap();
        assert_eq!(m.snr_applied, Some(snr));
        assert_eq!(m.incident, clean.incident);
        let signal: f64 = clean.scattered.iter().map(|b| b.norm_sqr()).sum();
        let noise: f64 = clean.scattered.iter().zip(&m.scattered).map(|(a, b)| b.sub(a).norm_sqr()).sum();
        let measured_snr = 10.0 * (signal / noise).log10();
        assert!((measured_snr - snr).abs() < 3.0, "{measured_snr} vs {snr}");
    }
}

#[test]
fn empty_phantom_gives_zero_scattering() {
    let dir = tempfile::tempdir().unwrap();
    let d = setup(dir.path());
    let cfg = EXPERIMENT.split("[[phantom.shapes]]").next().unwrap();
    std::fs::write(dir.path().join("empty.toml"), cfg).unwrap();
    let out = misi(&["synth", "--config", &format!("{d}/empty.toml"), "--out", &format!("{d}/e.misi")]);
    assert_eq!(code(&out), 0);
    let m: MeasurementSet<f64> = container::read(&dir.path().join("e.misi")).unwrap();
    assert!(m.scattered.iter().all(|b| b.norm_sqr() == 0.0));
}

#[test]
fn config_errors_are_usage_errors_with_locations() {
    let dir = tempfile::tempdir().unwrap();
    let d = setup(dir.path());
    std::fs::write(dir.path().join("typo.toml"), EXPERIMENT.replace("n_grid", "ngrid")).unwrap();
    let out = misi(&["synth", "--config", &format!("{d}/typo.toml"), "--out", &format!("{d}/t.misi")]);
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line") && err.contains("ngrid"), "{err}");
    assert_eq!(code(&misi(&["synth", "--config", &format!("{d}/missing.toml"), "--out", &format!("{d}/m.misi")])), 3);
    assert_eq!(code(&misi(&["frobnicate"])), 1);
    assert_eq!(code(&misi(&["invert", "--data", "x", "--out", "y", "--mode", "cc"])), 1);
    assert_eq!(code(&misi(&["--help"])), 0);
}

#[test]
fn invert_writes_runs_and_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let d = setup(dir.path());
    assert_eq!(code(&misi(&["synth", "--config", &format!("{d}/exp.toml"), "--out", &format!("{d}/data.misi")])), 0);
    let out = misi(&[
        "invert", "--data", &format!("{d}/data.misi"), "--epochs", "12", "--runs", "3", "--seed", "4",
        "--stage-split", "25,75", "--truth", &format!("{d}/exp.toml"), "--net-cfg", &format!("{d}/net.toml"),
        "--psnr-every", "4", "--out", &format!("{d}/res"),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let res = dir.path().join("res");
    for seed in 4..7 {
        let run = res.join(format!("run_{seed}"));
        for f in ["epochs.csv", "eps_r.csv", "eps_r.pgm", "eps_r.range.txt", "sigma.pgm", "summary.json", "network.mnet"] {
            assert!(run.join(f).exists(), "{f} missing for seed {seed}");
        }
        let log = std::fs::read_to_string(run.join("epochs.csv")).unwrap();
        assert_eq!(log.lines().count(), 13);
        // stage 1 runs on the first frequency only
        let first: Vec<&str> = log.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(first[1], "1");
        assert!(!first[3].is_empty() && first[4].is_empty());
        let net: misi::net::NetworkState<f64> = misi::io::checkpoint::read(&run.join("network.mnet")).unwrap();
        assert_eq!(net.cfg.hidden, vec![12]);
    }
    let finals = std::fs::read_to_string(res.join("final_psnr.csv")).unwrap();
    assert_eq!(finals.lines().count(), 4);
    assert_eq!(std::fs::read_to_string(res.join("psnr_curves.csv")).unwrap().lines().count(), 4);
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(res.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["runs"], 3);
    assert!(summary["final_psnr_eps"]["median"].is_number());

    let bad_split = misi(&[
        "invert", "--data", &format!("{d}/data.misi"), "--epochs", "12", "--stage-split", "20,20,60", "--out",
        &format!("{d}/res2"),
    ]);
    assert_eq!(code(&bad_split), 1);
}

#[test]
fn simultaneous_strategy_warns_about_stage_split() {
    let dir = tempfile::tempdir().unwrap();
    let d = setup(dir.path());
    assert_eq!(code(&misi(&["synth", "--config", &format!("{d}/exp.toml"), "--out", &format!("{d}/data.misi")])), 0);
    let out = misi(&[
        "invert", "--data", &format!("{d}/data.misi"), "--epochs", "3", "--strategy", "simul", "--stage-split",
        "50,50", "--net-cfg", &format!("{d}/net.toml"), "--precision", "f32", "--out", &format!("{d}/res"),
    ]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let log = std::fs::read_to_string(dir.path().join("res/run_0/epochs.csv")).unwrap();
    assert!(log.lines().skip(1).all(|l| !l.split(',').nth(4).unwrap().is_empty()));
}

#[test]
fn measured_tables_convert_with_stride() {
    let dir = tempfile::tempdir().unwrap();
    let d = setup(dir.path());
    let mut table = String::new();
    for tx in 0..2 {
        for q in 0..241 {
            let a = (180.0 * tx as f64 + 60.0 + q as f64) % 360.0;
            table.push_str(&format!("5e9\t{tx}\t{a}\t{}\t0.5\n", q as f64));
        }
    }
    std::fs::write(dir.path().join("t.txt"), &table).unwrap();
    std::fs::write(dir.path().join("g.toml"), "radius = 1.67\ndoi_half = 0.075\nn_grid = 8\n").unwrap();
    let args = |stride: &str, out: &str| {
        misi(&[
            "convert-measured", "--table", &format!("{d}/t.txt"), "--geometry", &format!("{d}/g.toml"), "--stride",
            stride, "--out", &format!("{d}/{out}"),
        ])
    };
    assert_eq!(code(&args("5", "m5.misi")), 0);
    let m: MeasurementSet<f64> = container::read(&dir.path().join("m5.misi")).unwrap();
    assert_eq!(m.scene.n_rx(), 49);
    assert_eq!(m.scattered[0].row(1)[48].re, 240.0);
    assert_eq!(code(&args("1", "m1.misi")), 0);
    let m: MeasurementSet<f64> = container::read(&dir.path().join("m1.misi")).unwrap();
    assert_eq!(m.scene.n_rx(), 241);

    table.push_str("5e9 0 60 9 9\n");
    std::fs::write(dir.path().join("t.txt"), &table).unwrap();
    let dup = args("5", "dup.misi");
    assert_eq!(code(&dup), 1);
    assert!(String::from_utf8_lossy(&dup.stderr).contains("lines 1 and 483"));
}

#[test]
fn mie_check_gates_on_tolerance() {
    let ok = misi(&["mie-check", "--grid", "64"]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stdout));
    let vacuum = misi(&["mie-check", "--eps-r", "1", "--grid", "32"]);
    assert_eq!(code(&vacuum), 0);
    assert!(String::from_utf8_lossy(&vacuum.stdout).contains("0.0000e0"));
    let coarse = misi(&["mie-check", "--grid", "16"]);
    assert_eq!(code(&coarse), 2, "{}", String::from_utf8_lossy(&coarse.stdout));
}
