mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::read_dir_bytes;
use stocknet::pipeline::analyze;
use stocknet::synthetic::{planted_sectors, SectorSpec};
use stocknet::{export_graph, ConfigFile, ExportFormat, PipelineConfig};

fn stocknet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stocknet"))
        .args(args)
        .env_remove("STOCKNET_LOG")
        .output()
        .unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Synthetic per-ticker price files plus the sector attribute file.
fn fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let out = stocknet(&["synth", "--dest", p(dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    (dir.join("prices"), dir.join("attributes.csv"))
}

#[test]
fn pipeline_is_deterministic_across_runs_and_threads() {
    let tmp = tempfile::tempdir().unwrap();
    let (prices, attrs) = fixture(tmp.path());
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "4", "4"].iter().enumerate() {
        let out_dir = tmp.path().join(format!("run{i}"));
        let out = stocknet(&[
            "--threads", threads, "--out-dir", p(&out_dir), "pipeline", "--input", p(&prices),
            "--attributes", p(&attrs), "--source", "S1T01", "--targets", "S1T02,S2T01",
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push(read_dir_bytes(&out_dir));
    }
    assert_eq!(outputs[0].len(), 7);
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);
}

#[test]
fn chained_stages_equal_single_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let (prices, _) = fixture(tmp.path());
    let staged = tmp.path().join("staged");
    let whole = tmp.path().join("whole");
    for stage in ["ingest", "correlate", "graph"] {
        let out = stocknet(&["--out-dir", p(&staged), stage, "-i", p(&prices), "--format", "edge-csv"]);
        assert!(out.status.success(), "{stage}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = stocknet(&["--out-dir", p(&whole), "pipeline", "-i", p(&prices), "--format", "edge-csv"]);
    assert!(out.status.success());
    assert_eq!(read_dir_bytes(&staged), read_dir_bytes(&whole));
}

#[test]
fn cli_artifacts_match_library_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let (prices, _) = fixture(tmp.path());
    let out_dir = tmp.path().join("out");
    let out = stocknet(&["--out-dir", p(&out_dir), "pipeline", "-i", p(&prices), "--format", "edge-csv"]);
    assert!(out.status.success());

    let market = planted_sectors(&SectorSpec::default()).unwrap();
    let cfg = PipelineConfig::default();
    let lib = analyze(&market.table, &cfg).unwrap();
    let mut matrix = Vec::new();
    lib.matrix.write_matrix_csv(&mut matrix).unwrap();
    let mut pairs = Vec::new();
    lib.matrix.write_pairs_csv(&mut pairs).unwrap();
    let mut edges = Vec::new();
    export_graph(&lib.graph, ExportFormat::EdgeCsv, &mut edges).unwrap();
    let mut panel = Vec::new();
    lib.panel.write_csv(&mut panel).unwrap();

    let files = read_dir_bytes(&out_dir);
    assert_eq!(files["panel.csv"], panel);
    assert_eq!(files["matrix.csv"], matrix);
    assert_eq!(files["pairs.csv"], pairs);
    assert_eq!(files["graph.csv"], edges);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let (prices, _) = fixture(tmp.path());
    let config = tmp.path().join("run.toml");
    let out_dir = tmp.path().join("out");
    std::fs::write(
        &config,
        format!(
            "inputs = [{:?}]\nout_dir = {:?}\nthreshold = 0.9\nformat = \"dot\"\nexclude_symbols = [\"S3T01\"]\n",
            p(&prices),
            p(&out_dir)
        ),
    )
    .unwrap();
    let out = stocknet(&["--config", p(&config), "pipeline", "--threshold", "0.5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = std::fs::read_to_string(out_dir.join("summary.txt")).unwrap();
    assert!(summary.starts_with("threshold: rho > 0.5\nnodes: 29\n"), "{summary}");
    assert!(out_dir.join("graph.dot").exists());
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["tickers"], 29);
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 30);
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);

    let base = ConfigFile::load(&config).unwrap();
    assert_eq!(base.threshold, Some(0.9));
}

#[test]
fn unknown_ticker_suggests_neighbors() {
    let tmp = tempfile::tempdir().unwrap();
    let (prices, _) = fixture(tmp.path());
    let out_dir = tmp.path().join("out");
    let out = stocknet(&[
        "--out-dir", p(&out_dir), "pipeline", "-i", p(&prices), "--source", "S1T1", "--targets", "S1T02",
    ]);
    assert_eq!(out.status.code(), Some(5));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("error[unknown-ticker]: unknown ticker 'S1T1'; did you mean: S1T01"), "{stderr}");
}

#[test]
fn targets_can_come_from_a_file() {
    let tmp = tempfile::tempdir().unwrap();
    let (prices, _) = fixture(tmp.path());
    let out_dir = tmp.path().join("out");
    let list = tmp.path().join("targets.txt");
    std::fs::write(&list, "S1T02\nS2T01, S3T01\n").unwrap();
    let target_arg = format!("@{}", p(&list));
    let out = stocknet(&[
        "--out-dir", p(&out_dir), "pipeline", "-i", p(&prices), "--source", "S1T01", "--targets", &target_arg,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(out_dir.join("transfer.csv")).unwrap();
    assert!(report.starts_with("ticker,rmse,mae,n_predictions,hop_distance\n"));
    assert_eq!(report.lines().count(), 4);
    assert!(report.lines().any(|l| l.starts_with("S1T02,") && l.ends_with(",1")));
    assert!(report.lines().any(|l| l.starts_with("S2T01,") && l.ends_with(",inf")));
}

#[test]
fn error_taxonomy_and_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    let out_dir = tmp.path().join("out");

    let out = stocknet(&["--out-dir", p(&out_dir), "ingest", "-i", p(&empty)]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[data]:"));

    let bad = tmp.path().join("bad.csv");
    std::fs::write(&bad, "ticker,date,close\nGP,2020-01-01,10\nGP,2020-01-02,abc\n").unwrap();
    let out = stocknet(&["--out-dir", p(&out_dir), "ingest", "-i", p(&bad)]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("error[parse]:") && stderr.contains(":3"), "{stderr}");

    let out = stocknet(&["--out-dir", p(&out_dir), "graph", "--threshold", "1.5"]);
    assert_eq!(out.status.code(), Some(2));

    let out = stocknet(&["--out-dir", p(&out_dir), "correlate"]);
    assert_eq!(out.status.code(), Some(6));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[io]:"));

    let out = stocknet(&["ingest", "--calendar-policy", "outer"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.status.success());

    let out = stocknet(&["--help"]);
    assert!(out.status.success());
}
