use std::path::Path;
use std::process::{Command, Output};

use localcoh::coherence::{kappa_l2, KappaVariant};
use localcoh::transforms::all_frequencies;
use localcoh_cli::manifest::{sha256_file, RunManifest};
use localcoh_cli::pgm::Pgm;
use serde_json::Value;

fn localcoh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_localcoh"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn csv_rows(p: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(p)
        .unwrap()
        .records()
        .map(|r| r.unwrap())
        .collect()
}

#[test]
fn coherence_writes_maps_and_passing_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c");
    let o = localcoh(&["coherence", "--n", "32", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["coherence.csv", "kappa.csv", "kappa_prime.csv"] {
        assert_eq!(csv_rows(&out.join(f)).len(), 32 * 32);
    }
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["passed"], Value::Bool(true));
    assert!(out.join("manifest.json").exists());
}

#[test]
fn coherence_report_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let o = localcoh(&["coherence", "--n", "8", "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    let report = read_json(&dir.path().join("report.json"));
    assert_eq!(
        report["kappa_prime_l2"].as_f64().unwrap(),
        kappa_l2(8, KappaVariant::Radial).unwrap()
    );
}

#[test]
fn invalid_inputs_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path());
    let cases: [&[&str]; 5] = [
        &["coherence", "--n", "3", "--out", out],
        &["sample", "--n", "16", "--density", "gauss", "--m", "4", "--out", out],
        &["sample", "--n", "16", "--density", "inv-square", "--out", out],
        &[
            "sample",
            "--n",
            "16",
            "--density",
            "uniform",
            "--m",
            "4",
            "--jobs",
            "0",
            "--out",
            out,
        ],
        &[
            "reconstruct",
            "--phantom",
            "rectangles",
            "--n",
            "64",
            "--m",
            "10",
            "--out",
            out,
        ],
    ];
    for args in cases {
        let o = localcoh(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn lowpass_single_sample_is_the_dc_pixel() {
    let dir = tempfile::tempdir().unwrap();
    let o = localcoh(&[
        "sample",
        "--n",
        "16",
        "--density",
        "lowpass",
        "--m",
        "1",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let mask = Pgm::read(&dir.path().join("mask.pgm")).unwrap();
    let white: Vec<usize> = (0..mask.data.len()).filter(|i| mask.data[*i] == 255).collect();
    // k = (0, 0) sits at row = col = N/2 - 1
    assert_eq!(white, vec![7 * 16 + 7]);
}

#[test]
fn seeded_masks_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut hashes = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let o = localcoh(&[
            "sample",
            "--n",
            "256",
            "--density",
            "power:2",
            "--m",
            "6400",
            "--seed",
            "42",
            "--out",
            path(&out),
        ]);
        assert_eq!(o.status.code(), Some(0));
        hashes.push((
            sha256_file(&out.join("mask.pgm")).unwrap(),
            sha256_file(&out.join("plan.csv")).unwrap(),
        ));
    }
    assert_eq!(hashes[0], hashes[1]);
}

#[test]
fn uniform_plan_records_duplicates() {
    let dir = tempfile::tempdir().unwrap();
    let o = localcoh(&[
        "sample",
        "--n",
        "16",
        "--density",
        "uniform",
        "--m",
        "256",
        "--seed",
        "1",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let summary = read_json(&dir.path().join("plan.json"));
    let rows = csv_rows(&dir.path().join("plan.csv"));
    assert_eq!(rows.len(), 256);
    let first_draws = rows.iter().filter(|r| &r[4] == "0").count();
    assert_eq!(summary["distinct"].as_u64().unwrap() as usize, first_draws);
    assert_eq!(summary["duplicates"].as_u64().unwrap() as usize, 256 - first_draws);
    assert!(first_draws < 256);
    let mask = Pgm::read(&dir.path().join("mask.pgm")).unwrap();
    assert_eq!(mask.data.iter().filter(|v| **v == 255).count(), first_draws);
}

#[test]
fn full_sampling_reproduces_input_pgm() {
    let dir = tempfile::tempdir().unwrap();
    let image = dir.path().join("in.pgm");
    let data: Vec<u16> = (0..256u32).map(|i| ((i * 37 + 11) % 256) as u16).collect();
    let input = Pgm {
        width: 16,
        height: 16,
        maxval: 255,
        data,
    };
    input.write(&image).unwrap();

    let plan = dir.path().join("full.csv");
    let mut w = csv::Writer::from_path(&plan).unwrap();
    w.write_record(["j", "k1", "k2", "rho"]).unwrap();
    for (j, k) in all_frequencies(16).enumerate() {
        w.write_record([j.to_string(), k.k1.to_string(), k.k2.to_string(), "1".into()])
            .unwrap();
    }
    w.flush().unwrap();

    let out = dir.path().join("r");
    let o = localcoh(&[
        "reconstruct",
        "--image",
        path(&image),
        "--plan",
        path(&plan),
        "--out",
        path(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(Pgm::read(&out.join("reconstruction.pgm")).unwrap(), input);
    assert!(!out.join("complex.csv").exists());
    let manifest = RunManifest::read(&out.join("manifest.json")).unwrap();
    assert_eq!(manifest.input.unwrap().sha256, sha256_file(&image).unwrap());
}

#[test]
fn phantom_reconstruction_error_line() {
    let dir = tempfile::tempdir().unwrap();
    let o = localcoh(&[
        "reconstruct",
        "--phantom",
        "rectangles",
        "--n",
        "32",
        "--density",
        "inv-square",
        "--m",
        "410",
        "--seed",
        "2",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&dir.path().join("error.csv"));
    assert_eq!(rows.len(), 1);
    let err: f64 = rows[0][5].parse().unwrap();
    assert!(err <= 1e-3, "{err}");
    let report = read_json(&dir.path().join("report.json"));
    assert_eq!(report["solver_report"]["converged"], Value::Bool(true));
}

#[test]
fn non_convergence_exits_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = localcoh(&[
        "reconstruct",
        "--phantom",
        "rectangles",
        "--n",
        "32",
        "--m",
        "410",
        "--max-iters",
        "10",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(dir.path().join("reconstruction.pgm").exists());
}

#[test]
fn sweep_row_count_and_noise_monotonicity() {
    let dir = tempfile::tempdir().unwrap();
    let o = localcoh(&[
        "sweep",
        "--phantom",
        "rectangles",
        "--n",
        "32",
        "--alphas",
        "2,inf",
        "--m",
        "410",
        "--eps",
        "0,0.5",
        "--trials",
        "3",
        "--seed",
        "100",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&dir.path().join("sweep.csv"));
    assert_eq!(rows.len(), 2 * 2 * 3);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[5].parse::<u64>().unwrap(), 100 + i as u64);
    }
    for alpha in ["2", "inf"] {
        let mean = |eps: &str| {
            let errs: Vec<f64> = rows
                .iter()
                .filter(|r| &r[0] == alpha && &r[1] == eps)
                .map(|r| r[4].parse::<f64>().unwrap())
                .collect();
            errs.iter().sum::<f64>() / errs.len() as f64
        };
        assert!(mean("0") <= mean("0.5"), "alpha {alpha}");
    }
}

#[test]
fn sweep_flags_failed_cells_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    // the lowest-frequency mask cannot hold more than N^2 samples; the stochastic cell can
    let o = localcoh(&[
        "sweep",
        "--phantom",
        "shepp-logan",
        "--n",
        "8",
        "--alphas",
        "inf,2",
        "--m",
        "100",
        "--max-iters",
        "200",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&dir.path().join("sweep.csv"));
    assert_eq!(rows.len(), 2);
    assert!(rows[0][8].starts_with("error"));
    assert!(rows[0][4].is_empty());
    assert!(!rows[1][4].is_empty());
}

#[test]
fn sweep_is_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut hashes = Vec::new();
    for jobs in ["1", "3"] {
        let out = dir.path().join(jobs);
        let o = localcoh(&[
            "sweep",
            "--phantom",
            "shepp-logan",
            "--n",
            "16",
            "--alphas",
            "0,2",
            "--m",
            "80",
            "--eps",
            "0,0.1",
            "--trials",
            "2",
            "--jobs",
            jobs,
            "--out",
            path(&out),
        ]);
        assert_eq!(o.status.code(), Some(0));
        hashes.push(sha256_file(&out.join("sweep.csv")).unwrap());
    }
    assert_eq!(hashes[0], hashes[1]);
}

#[test]
fn verify_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = localcoh(&["verify", "--sizes", "2,4,8,16,32,64", "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&dir.path().join("verify.json"));
    assert_eq!(report["passed"], Value::Bool(true));
    let claims = report["claims"].as_array().unwrap();
    assert!(claims
        .iter()
        .any(|c| c["claim"] == "preconditioned_isotropy_identity" && c["n"] == 8 && c["passed"] == true));
}

#[test]
fn replay_reproduces_hashes_and_detects_changed_input() {
    let dir = tempfile::tempdir().unwrap();
    let image = dir.path().join("in.pgm");
    let data: Vec<u16> = (0..1024u32).map(|i| ((i * 7919) % 65536) as u16).collect();
    Pgm {
        width: 32,
        height: 32,
        maxval: 65535,
        data,
    }
    .write(&image)
    .unwrap();
    let first = dir.path().join("first");
    let o = localcoh(&[
        "reconstruct",
        "--image",
        path(&image),
        "--density",
        "power:1",
        "--m",
        "300",
        "--seed",
        "9",
        "--eps",
        "0.05",
        "--max-iters",
        "400",
        "--out",
        path(&first),
    ]);
    assert!(matches!(o.status.code(), Some(0) | Some(3)));
    let second = dir.path().join("second");
    let o = localcoh(&[
        "replay",
        "--manifest",
        path(&first.join("manifest.json")),
        "--out",
        path(&second),
    ]);
    assert!(
        matches!(o.status.code(), Some(0) | Some(3)),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let a = RunManifest::read(&first.join("manifest.json")).unwrap();
    let b = RunManifest::read(&second.join("manifest.json")).unwrap();
    assert!(!a.outputs.is_empty());
    assert_eq!(a.outputs, b.outputs);

    std::fs::write(&image, b"P2 2 2 1 0 1 1 0").unwrap();
    let o = localcoh(&[
        "replay",
        "--manifest",
        path(&first.join("manifest.json")),
        "--out",
        path(&second),
    ]);
    assert_eq!(o.status.code(), Some(2));
}
