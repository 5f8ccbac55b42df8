//! End-to-end contract tests for the `enfgrid` binary: exit codes, file
//! outputs, determinism, and flag precedence.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use enfgrid_core::io;
use enfgrid_core::types::{EnfSignal, QuantizationScheme};
use tempfile::TempDir;

fn enfgrid() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_enfgrid"));
    // Tests control the output directory explicitly.
    cmd.env_remove("ENFGRID_OUT");
    cmd
}

fn run(args: &[&str]) -> Output {
    enfgrid().args(args).output().expect("spawn enfgrid")
}

fn assert_exit(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "expected exit {code}\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn write_sim_config(dir: &Path, duration: f64, seed: u64, sites: &[(&str, f64, f64)]) -> PathBuf {
    let mut text = format!("duration_seconds = {duration}\nseed = {seed}\n");
    for (name, x, y) in sites {
        text.push_str(&format!(
            "\n[[sites]]\nname = \"{name}\"\nposition = {{ x = {x}, y = {y} }}\n"
        ));
    }
    let path = dir.join("sim.toml");
    fs::write(&path, text).unwrap();
    path
}

/// Three sites in a triangle, frequency series only. Returns the bundle dir.
fn simulate_triangle(duration: f64, seed: u64) -> TempDir {
    let dir = TempDir::new().unwrap();
    let sim = write_sim_config(
        dir.path(),
        duration,
        seed,
        &[("alpha", 0.0, 0.0), ("beta", 400.0, 0.0), ("gamma", 0.0, 400.0)],
    );
    let out = run(&[
        "--out",
        dir.path().to_str().unwrap(),
        "simulate",
        "--sim-config",
        sim.to_str().unwrap(),
        "--skip-wav",
    ]);
    assert_exit(&out, 0);
    dir
}

fn anchors_arg(dir: &TempDir) -> String {
    dir.path().join("anchors.json").to_str().unwrap().to_string()
}

#[test]
fn help_and_version_exit_zero() {
    assert_exit(&run(&["--help"]), 0);
    assert_exit(&run(&["--version"]), 0);
    assert_exit(&run(&["locate", "--help"]), 0);
}

#[test]
fn unknown_subcommand_and_bad_flag_exit_one() {
    assert_exit(&run(&["frobnicate"]), 1);
    assert_exit(&run(&["locate", "--method", "astrology"]), 1);
}

#[test]
fn extract_counts_one_frame_per_second_of_wav() {
    let dir = TempDir::new().unwrap();
    let sim = write_sim_config(dir.path(), 70.0, 9, &[("alpha", 0.0, 0.0)]);
    let out = run(&[
        "--out",
        dir.path().to_str().unwrap(),
        "simulate",
        "--sim-config",
        sim.to_str().unwrap(),
    ]);
    assert_exit(&out, 0);

    let wav = dir.path().join("alpha.wav");
    let out = run(&["--out", dir.path().to_str().unwrap(), "extract", wav.to_str().unwrap()]);
    assert_exit(&out, 0);

    let enf = io::read_enf_csv(&dir.path().join("alpha.enf.csv")).unwrap();
    assert_eq!(enf.len(), 70);
    assert!(enf.values().iter().all(|f| (f - 60.0).abs() < 0.1));
}

#[test]
fn extract_treats_wav_and_csv_forms_of_a_recording_identically() {
    let dir = TempDir::new().unwrap();
    let sim = write_sim_config(dir.path(), 64.0, 3, &[("alpha", 0.0, 0.0)]);
    let out = run(&[
        "--out",
        dir.path().to_str().unwrap(),
        "simulate",
        "--sim-config",
        sim.to_str().unwrap(),
    ]);
    assert_exit(&out, 0);

    // Re-encode the decoded WAV samples as a lossless two-column CSV.
    let rec = io::read_wav(&dir.path().join("alpha.wav")).unwrap();
    let mut csv = String::from("t_seconds,amplitude\n");
    let fs = rec.sample_rate();
    for (i, s) in rec.samples().iter().enumerate() {
        csv.push_str(&format!("{},{s}\n", i as f64 / fs));
    }
    let csv_path = dir.path().join("alpha_samples.csv");
    fs::write(&csv_path, csv).unwrap();

    let from_wav = dir.path().join("from_wav.csv");
    let from_csv = dir.path().join("from_csv.csv");
    let out = run(&[
        "extract",
        dir.path().join("alpha.wav").to_str().unwrap(),
        "--out-file",
        from_wav.to_str().unwrap(),
    ]);
    assert_exit(&out, 0);
    let out =
        run(&["extract", csv_path.to_str().unwrap(), "--out-file", from_csv.to_str().unwrap()]);
    assert_exit(&out, 0);

    assert_eq!(fs::read(&from_wav).unwrap(), fs::read(&from_csv).unwrap());
}

#[test]
fn extract_classifies_input_problems_as_exit_two() {
    let dir = TempDir::new().unwrap();
    let garbage = dir.path().join("noise.wav");
    fs::write(&garbage, b"not a riff header at all").unwrap();
    assert_exit(&run(&["--out", dir.path().to_str().unwrap(), "extract", garbage.to_str().unwrap()]), 2);

    let missing = dir.path().join("absent.wav");
    assert_exit(&run(&["--out", dir.path().to_str().unwrap(), "extract", missing.to_str().unwrap()]), 2);

    let odd = dir.path().join("recording.flac");
    fs::write(&odd, b"fLaC").unwrap();
    assert_exit(&run(&["--out", dir.path().to_str().unwrap(), "extract", odd.to_str().unwrap()]), 2);
}

#[test]
fn invalid_pipeline_settings_exit_three() {
    let dir = TempDir::new().unwrap();
    let wav = dir.path().join("absent.wav");
    // Settings are validated before the recording is opened.
    let out = run(&["--nominal", "55", "extract", wav.to_str().unwrap()]);
    assert_exit(&out, 3);
    let out = run(&["--filter-order", "4", "extract", wav.to_str().unwrap()]);
    assert_exit(&out, 3);
}

#[test]
fn simulate_reruns_are_byte_identical() {
    let mut bytes = Vec::new();
    for _ in 0..2 {
        let dir = TempDir::new().unwrap();
        let sim = write_sim_config(
            dir.path(),
            64.0,
            77,
            &[("alpha", 0.0, 0.0), ("beta", 250.0, -100.0)],
        );
        let out = run(&[
            "--out",
            dir.path().to_str().unwrap(),
            "simulate",
            "--sim-config",
            sim.to_str().unwrap(),
            "--events",
            "--enf-snr-db",
            "25",
        ]);
        assert_exit(&out, 0);
        let mut names: Vec<String> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .filter(|n| n != "sim.toml")
            .collect();
        names.sort();
        assert_eq!(
            names,
            ["alpha.csv", "alpha.wav", "anchors.json", "beta.csv", "beta.wav", "manifest.json"]
        );
        bytes.push(
            names.iter().map(|n| fs::read(dir.path().join(n)).unwrap()).collect::<Vec<_>>(),
        );
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn simulate_requires_a_source_of_sites() {
    let dir = TempDir::new().unwrap();
    assert_exit(&run(&["--out", dir.path().to_str().unwrap(), "simulate"]), 1);
}

#[test]
fn simulate_rejects_too_short_durations() {
    let dir = TempDir::new().unwrap();
    let sim = write_sim_config(dir.path(), 59.0, 1, &[("alpha", 0.0, 0.0)]);
    let out = run(&[
        "--out",
        dir.path().to_str().unwrap(),
        "simulate",
        "--sim-config",
        sim.to_str().unwrap(),
    ]);
    assert_exit(&out, 3);
}

#[test]
fn align_recovers_a_known_frame_shift() {
    let bundle = simulate_triangle(120.0, 5);
    let a_path = bundle.path().join("alpha.csv");
    let a = io::read_enf_csv(&a_path).unwrap();

    // b drops the first five frames of a, so b[n] corresponds to a[n + 5].
    let shifted = EnfSignal::new(
        a.values()[5..].to_vec(),
        a.frame_period(),
        0.0,
        a.nominal(),
    )
    .unwrap();
    let b_path = bundle.path().join("shifted.csv");
    io::write_enf_csv(&b_path, &shifted).unwrap();

    let out = run(&[
        "--out",
        bundle.path().to_str().unwrap(),
        "align",
        a_path.to_str().unwrap(),
        b_path.to_str().unwrap(),
        "--max-lag",
        "30",
    ]);
    assert_exit(&out, 0);

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(bundle.path().join("align.json")).unwrap())
            .unwrap();
    assert_eq!(report["lag_frames"], 5);
    assert_eq!(report["lag_seconds"], 5.0);
    assert!(report["peak_correlation"].as_f64().unwrap() > 0.999);
}

#[test]
fn correlate_emits_one_table_per_segment_and_one_row_per_pair() {
    let bundle = simulate_triangle(1300.0, 11);
    let out_dir = TempDir::new().unwrap();
    let out = run(&[
        "--out",
        out_dir.path().to_str().unwrap(),
        "correlate",
        "--anchors",
        &anchors_arg(&bundle),
    ]);
    assert_exit(&out, 0);

    // 1298 detail frames at M = 3 hold two full 600-frame segments.
    let json: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(out_dir.path().join("correlations.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(json.as_array().unwrap().len(), 2);

    let csv = fs::read_to_string(out_dir.path().join("correlations.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "segment_index,site_a,site_b,rho");
    assert_eq!(rows.len(), 1 + 2 * 3); // header + segments x C(3,2) pairs
}

#[test]
fn locate_needs_exactly_one_of_query_and_leave_one_out() {
    let bundle = simulate_triangle(700.0, 2);
    let query = bundle.path().join("alpha.csv");
    let out = run(&[
        "locate",
        "--anchors",
        &anchors_arg(&bundle),
        "--query",
        query.to_str().unwrap(),
        "--leave-one-out",
    ]);
    assert_exit(&out, 1);
    assert_exit(&run(&["locate", "--anchors", &anchors_arg(&bundle)]), 1);
}

#[test]
fn locate_quantization_without_a_scheme_exits_three() {
    let bundle = simulate_triangle(700.0, 2);
    let query = bundle.path().join("alpha.csv");
    let out = run(&[
        "--out",
        bundle.path().to_str().unwrap(),
        "locate",
        "--method",
        "quantization",
        "--anchors",
        &anchors_arg(&bundle),
        "--query",
        query.to_str().unwrap(),
    ]);
    assert_exit(&out, 3);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("quantization scheme"), "stderr: {stderr}");
}

#[test]
fn locate_self_query_contains_the_true_site() {
    let bundle = simulate_triangle(700.0, 8);
    let out_dir = TempDir::new().unwrap();
    // beta sits at a different distance from each other site, so no
    // half-plane boundary passes through the truth point itself.
    let query = bundle.path().join("beta.csv");
    let out = run(&[
        "--out",
        out_dir.path().to_str().unwrap(),
        "locate",
        "--anchors",
        &anchors_arg(&bundle),
        "--query",
        query.to_str().unwrap(),
        "--truth",
        "400,0",
        "--geojson",
    ]);
    assert_exit(&out, 0);

    let report: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(out_dir.path().join("report_halfplane.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["hit"], true);
    let area = report["area_fraction"].as_f64().unwrap();
    assert!(area > 0.0 && area < 1.0, "area_fraction {area}");
    assert!(report["constraints_applied"].as_u64().unwrap() <= 3);

    let geojson: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(out_dir.path().join("region_halfplane.geojson")).unwrap(),
    )
    .unwrap();
    assert_eq!(geojson["type"], "Feature");
    assert_eq!(geojson["geometry"]["type"], "MultiPolygon");

    let metrics = fs::read_to_string(out_dir.path().join("metrics_halfplane.csv")).unwrap();
    assert!(metrics.starts_with("epsilon,p_loc,a_loc,a_loc_hits"));
}

#[test]
fn locate_leave_one_out_writes_one_metrics_row_per_epsilon() {
    let bundle = simulate_triangle(700.0, 21);
    let out_dir = TempDir::new().unwrap();
    let out = run(&[
        "--out",
        out_dir.path().to_str().unwrap(),
        "--epsilon",
        "0,0.05",
        "locate",
        "--leave-one-out",
        "--anchors",
        &anchors_arg(&bundle),
    ]);
    assert_exit(&out, 0);

    let metrics = fs::read_to_string(out_dir.path().join("metrics_halfplane.csv")).unwrap();
    let rows: Vec<&str> = metrics.lines().collect();
    assert_eq!(rows.len(), 3);
    let p_loc: Vec<f64> =
        rows[1..].iter().map(|r| r.split(',').nth(1).unwrap().parse().unwrap()).collect();
    // A looser tolerance never loses queries.
    assert!(p_loc[0] <= p_loc[1], "p_loc {p_loc:?}");
}

#[test]
fn fit_scheme_output_feeds_quantization_locate() {
    let bundle = simulate_triangle(1300.0, 13);
    let out_dir = TempDir::new().unwrap();
    let scheme_path = out_dir.path().join("scheme.json");
    let out = run(&[
        "--out",
        out_dir.path().to_str().unwrap(),
        "fit-scheme",
        "--auto-bins",
        "3",
        "--anchors",
        &anchors_arg(&bundle),
        "--out-file",
        scheme_path.to_str().unwrap(),
    ]);
    assert_exit(&out, 0);

    let scheme: QuantizationScheme =
        serde_json::from_str(&fs::read_to_string(&scheme_path).unwrap()).unwrap();
    assert_eq!(scheme.bins().len(), 3);

    let query = bundle.path().join("beta.csv");
    let out = run(&[
        "--out",
        out_dir.path().to_str().unwrap(),
        "locate",
        "--method",
        "quantization",
        "--scheme",
        scheme_path.to_str().unwrap(),
        "--anchors",
        &anchors_arg(&bundle),
        "--query",
        query.to_str().unwrap(),
    ]);
    assert_exit(&out, 0);
    let report: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(out_dir.path().join("report_quantization.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["method"], "quantization");
}

#[test]
fn config_file_sets_defaults_and_flags_override_it() {
    let bundle = simulate_triangle(700.0, 4);
    let cfg_path = bundle.path().join("pipeline.toml");
    fs::write(&cfg_path, "segment_frames = 300\n").unwrap();

    let segments = |extra: &[&str]| -> usize {
        let out_dir = TempDir::new().unwrap();
        let mut args = vec![
            "--out",
            out_dir.path().to_str().unwrap(),
            "--config",
            cfg_path.to_str().unwrap(),
        ];
        args.extend_from_slice(extra);
        let anchors = anchors_arg(&bundle);
        args.extend_from_slice(&["correlate", "--anchors", &anchors]);
        let out = run(&args);
        assert_exit(&out, 0);
        let json: serde_json::Value = serde_json::from_str(
            &fs::read_to_string(out_dir.path().join("correlations.json")).unwrap(),
        )
        .unwrap();
        json.as_array().unwrap().len()
    };

    assert_eq!(segments(&[]), 2); // 698 detail frames / 300
    assert_eq!(segments(&["--segment-frames", "200"]), 3);
}

#[test]
fn malformed_config_files_exit_two() {
    let dir = TempDir::new().unwrap();
    let bad_toml = dir.path().join("broken.toml");
    fs::write(&bad_toml, "segment_frames = ===").unwrap();
    assert_exit(&run(&["--config", bad_toml.to_str().unwrap(), "correlate"]), 2);

    let unknown_key = dir.path().join("typo.toml");
    fs::write(&unknown_key, "segment_framez = 300\n").unwrap();
    assert_exit(&run(&["--config", unknown_key.to_str().unwrap(), "correlate"]), 2);
}

#[test]
fn out_dir_falls_back_to_the_environment() {
    let bundle = simulate_triangle(120.0, 6);
    let env_dir = TempDir::new().unwrap();
    let a = bundle.path().join("alpha.csv");
    let out = enfgrid()
        .env("ENFGRID_OUT", env_dir.path())
        .args(["align", a.to_str().unwrap(), a.to_str().unwrap(), "--max-lag", "10"])
        .output()
        .unwrap();
    assert_exit(&out, 0);
    assert!(env_dir.path().join("align.json").exists());

    // An explicit --out still wins over the environment.
    let flag_dir = TempDir::new().unwrap();
    let out = enfgrid()
        .env("ENFGRID_OUT", env_dir.path())
        .args([
            "--out",
            flag_dir.path().to_str().unwrap(),
            "align",
            a.to_str().unwrap(),
            a.to_str().unwrap(),
            "--max-lag",
            "10",
        ])
        .output()
        .unwrap();
    assert_exit(&out, 0);
    assert!(flag_dir.path().join("align.json").exists());
}

#[test]
fn sweep_rejects_degenerate_requests() {
    let dir = TempDir::new().unwrap();
    let out = run(&["--out", dir.path().to_str().unwrap(), "sweep", "--kind", "epsilon", "--trials", "1"]);
    assert_exit(&out, 1);
    let out = run(&[
        "--out",
        dir.path().to_str().unwrap(),
        "sweep",
        "--kind",
        "filter-order",
        "--values",
        "4,6",
        "--trials",
        "2",
    ]);
    assert_exit(&out, 1);
}

#[test]
fn sweep_epsilon_reports_means_in_range() {
    let dir = TempDir::new().unwrap();
    let out = run(&[
        "--out",
        dir.path().to_str().unwrap(),
        "sweep",
        "--kind",
        "epsilon",
        "--values",
        "0,0.05",
        "--trials",
        "2",
        "--seed",
        "3",
    ]);
    assert_exit(&out, 0);
    let csv = fs::read_to_string(dir.path().join("sweep_epsilon.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "kind,param,metric,mean,stddev,trials");
    assert_eq!(rows.len(), 1 + 2 * 2); // two values x {p_loc, a_loc}
    for row in &rows[1..] {
        let cells: Vec<&str> = row.split(',').collect();
        let mean: f64 = cells[3].parse().unwrap();
        if cells[2] == "p_loc" {
            assert!((0.0..=1.0).contains(&mean), "p_loc {mean}");
        } else {
            assert!(mean >= 0.0);
        }
    }
}
