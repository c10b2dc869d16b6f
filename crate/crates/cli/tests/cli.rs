//! End-to-end tests of the `cpreg` binary: golden report, response-rescaling
//! invariance, error codes, config files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cpreg"))
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cpreg-test-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "command failed: {:?}\nstdout: {}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn simulate_csv(dir: &Path, seed: u64) -> PathBuf {
    let csv = dir.join(format!("sim-{seed}.csv"));
    run_ok(bin().args([
        "simulate",
        "--n",
        "40",
        "--p",
        "3",
        "--change-points",
        "21",
        "--kappa",
        "5",
        "--d0",
        "2",
        "--seed",
        &seed.to_string(),
        "--output",
        csv.to_str().unwrap(),
    ]));
    csv
}

/// Prepend a day label column to a simulated CSV.
fn add_labels(src: &Path, dst: &Path) {
    let text = std::fs::read_to_string(src).unwrap();
    let mut out = String::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            out.push_str(&format!("day,{line}\n"));
        } else {
            out.push_str(&format!("d{i:03},{line}\n"));
        }
    }
    std::fs::write(dst, out).unwrap();
}

#[test]
fn simulate_is_byte_deterministic() {
    let dir = tmp_dir("simdet");
    let a = simulate_csv(&dir, 11);
    let b = dir.join("again.csv");
    run_ok(bin().args([
        "simulate",
        "--n",
        "40",
        "--p",
        "3",
        "--change-points",
        "21",
        "--kappa",
        "5",
        "--d0",
        "2",
        "--seed",
        "11",
        "--output",
        b.to_str().unwrap(),
    ]));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn golden_detect_report_is_byte_stable() {
    let dir = tmp_dir("golden");
    let plain = simulate_csv(&dir, 7);
    let labeled = dir.join("labeled.csv");
    add_labels(&plain, &labeled);

    let detect = |out: &Path| {
        run_ok(bin().args([
            "detect",
            "--input",
            labeled.to_str().unwrap(),
            "--response",
            "y",
            "--label-column",
            "day",
            "--method",
            "dp-lr",
            "--lambda",
            "1.0",
            "--gamma",
            "3.0",
            "--zeta",
            "0.5",
            "--min-seg-len",
            "2",
            "--no-timing",
            "--output",
            out.to_str().unwrap(),
        ]));
    };
    let r1 = dir.join("report1.json");
    let r2 = dir.join("report2.json");
    detect(&r1);
    detect(&r2);
    let b1 = std::fs::read(&r1).unwrap();
    let b2 = std::fs::read(&r2).unwrap();
    assert_eq!(b1, b2, "two identical runs must emit identical bytes");

    let golden_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/detect_report.json");
    if std::env::var("CPREG_UPDATE_GOLDEN").is_ok() {
        std::fs::write(&golden_path, &b1).unwrap();
    }
    let golden = std::fs::read(&golden_path).expect("golden file present");
    assert_eq!(
        b1, golden,
        "report differs from the committed golden file; run with CPREG_UPDATE_GOLDEN=1 to refresh"
    );

    // The report parses as JSON and labels align with change points.
    let parsed: serde_json::Value = serde_json::from_slice(&b1).unwrap();
    let cps = parsed["change_points"].as_array().unwrap();
    let labels = parsed["change_point_labels"].as_array().unwrap();
    assert_eq!(cps.len(), labels.len());
    for (c, l) in cps.iter().zip(labels) {
        assert_eq!(
            l.as_str().unwrap(),
            format!("d{:03}", c.as_u64().unwrap()),
            "label must be the day of the first index of the new segment"
        );
    }
}

#[test]
fn changepoints_invariant_under_response_rescaling() {
    let dir = tmp_dir("rescale");
    let csv = simulate_csv(&dir, 13);

    // Pre-standardize the response exactly as the tool does (sample sd with
    // the n-1 denominator) and write a full-precision copy.
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    let ys: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let sd =
        (ys.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (ys.len() as f64 - 1.0)).sqrt();
    let mut scaled_text = header.clone();
    scaled_text.push('\n');
    for r in &rows {
        let mut cells: Vec<String> = vec![format!("{}", r[0] / sd)];
        cells.extend(r[1..].iter().map(|v| format!("{v}")));
        scaled_text.push_str(&cells.join(","));
        scaled_text.push('\n');
    }
    let scaled_csv = dir.join("scaled.csv");
    std::fs::write(&scaled_csv, scaled_text).unwrap();

    let detect = |input: &Path, standardize: bool, out: &Path| {
        let mut cmd = bin();
        cmd.args([
            "detect",
            "--input",
            input.to_str().unwrap(),
            "--response",
            "y",
            "--method",
            "dp",
            "--lambda",
            "1.0",
            "--gamma",
            "3.0",
            "--min-seg-len",
            "2",
            "--no-timing",
            "--output",
            out.to_str().unwrap(),
        ]);
        if !standardize {
            cmd.arg("--no-standardize");
        }
        run_ok(&mut cmd);
    };
    let r1 = dir.join("std.json");
    let r2 = dir.join("prescaled.json");
    detect(&csv, true, &r1);
    detect(&scaled_csv, false, &r2);
    let v1: serde_json::Value = serde_json::from_slice(&std::fs::read(&r1).unwrap()).unwrap();
    let v2: serde_json::Value = serde_json::from_slice(&std::fs::read(&r2).unwrap()).unwrap();
    assert_eq!(v1["change_points"], v2["change_points"]);
    assert_eq!(v1["k_hat"], v2["k_hat"]);
}

#[test]
fn daily_panel_shape_survives_cleaning() {
    // A year-long daily panel with 18 covariates where 22 days have gaps
    // must come out as a 343 x 18 dataset.
    let dir = tmp_dir("panel");
    let csv = dir.join("panel.csv");
    let mut text = String::from("date,pm10");
    for j in 1..=18 {
        text.push_str(&format!(",c{j}"));
    }
    text.push('\n');
    for day in 0..365 {
        text.push_str(&format!("2015-{:03},{}", day + 1, (day % 7) as f64));
        for j in 0..18 {
            if day % 16 == 13 && j == 5 {
                text.push(',');
            } else {
                text.push_str(&format!(",{}", ((day * 31 + j * 17) % 23) as f64 / 7.0));
            }
        }
        text.push('\n');
    }
    std::fs::write(&csv, text).unwrap();
    let out = run_ok(bin().args([
        "detect",
        "--input",
        csv.to_str().unwrap(),
        "--response",
        "pm10",
        "--label-column",
        "date",
        "--method",
        "dp",
        "--lambda",
        "1.0",
        "--gamma",
        "1e9",
        "--stride",
        "25",
        "--min-seg-len",
        "50",
        "--no-timing",
    ]));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["n"], 343);
    assert_eq!(v["p"], 18);
    assert_eq!(v["dropped_rows"], 22);
}

#[test]
fn missing_rows_are_dropped_and_counted() {
    let dir = tmp_dir("missing");
    let csv = dir.join("gaps.csv");
    std::fs::write(
        &csv,
        "y,x1\n1.0,0.5\n2.0,\n3.0,1.5\nnot_a_number,2.0\n4.0,2.5\n5.0,3.0\n",
    )
    .unwrap();
    let out = run_ok(bin().args([
        "detect",
        "--input",
        csv.to_str().unwrap(),
        "--response",
        "y",
        "--method",
        "dp",
        "--lambda",
        "1.0",
        "--gamma",
        "100.0",
        "--no-standardize",
        "--no-timing",
    ]));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["n"], 4);
    assert_eq!(v["dropped_rows"], 2);
}

#[test]
fn error_codes_are_distinct_per_class() {
    let dir = tmp_dir("errors");
    let csv = simulate_csv(&dir, 17);

    let check = |cmd: &mut Command, code: i32, kind: &str| {
        let out = cmd.output().unwrap();
        assert_eq!(
            out.status.code(),
            Some(code),
            "stdout: {}",
            String::from_utf8_lossy(&out.stdout)
        );
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).expect("json error body");
        assert_eq!(v["error"]["kind"], kind);
        assert_eq!(v["error"]["code"], code);
    };

    check(
        bin().args([
            "detect",
            "--input",
            "/nonexistent/file.csv",
            "--response",
            "y",
            "--lambda",
            "1",
            "--gamma",
            "1",
        ]),
        2,
        "missing_input",
    );
    check(
        bin().args([
            "detect",
            "--input",
            csv.to_str().unwrap(),
            "--response",
            "nope",
            "--lambda",
            "1",
            "--gamma",
            "1",
        ]),
        3,
        "missing_column",
    );
    let empty = dir.join("empty.csv");
    std::fs::write(&empty, "y,x1\n,1.0\n,2.0\n").unwrap();
    check(
        bin().args([
            "detect",
            "--input",
            empty.to_str().unwrap(),
            "--response",
            "y",
            "--lambda",
            "1",
            "--gamma",
            "1",
        ]),
        4,
        "no_usable_rows",
    );
    let constant = dir.join("constant.csv");
    std::fs::write(&constant, "y,x1\n2.0,1.0\n2.0,2.0\n2.0,3.0\n2.0,4.0\n").unwrap();
    check(
        bin().args([
            "detect",
            "--input",
            constant.to_str().unwrap(),
            "--response",
            "y",
            "--lambda",
            "1",
            "--gamma",
            "1",
        ]),
        5,
        "zero_variance",
    );
    check(
        bin().args([
            "detect",
            "--input",
            csv.to_str().unwrap(),
            "--response",
            "y",
            "--gamma",
            "1",
        ]),
        6,
        "bad_arguments",
    );
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tmp_dir("config");
    let csv = simulate_csv(&dir, 19);
    let cfg = dir.join("run.conf");
    std::fs::write(
        &cfg,
        format!(
            "input={}\nresponse=y\nmethod=dp\nlambda=1.0\ngamma=3.0\nmin-seg-len=2\n",
            csv.to_str().unwrap()
        ),
    )
    .unwrap();
    let out = run_ok(bin().args(["detect", "--config", cfg.to_str().unwrap(), "--no-timing"]));
    let from_config: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(from_config["parameters"]["lambda"], 1.0);

    // A flag overrides the file.
    let out = run_ok(bin().args([
        "detect",
        "--config",
        cfg.to_str().unwrap(),
        "--gamma",
        "1e12",
        "--no-timing",
    ]));
    let overridden: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(overridden["parameters"]["gamma"], 1e12);
    assert_eq!(overridden["k_hat"], 0, "huge gamma suppresses every split");

    // The explicit --standardize flag beats standardize=false in the file.
    let cfg_nostd = dir.join("nostd.conf");
    std::fs::write(
        &cfg_nostd,
        format!(
            "input={}\nresponse=y\nlambda=1.0\ngamma=3.0\nstandardize=false\n",
            csv.to_str().unwrap()
        ),
    )
    .unwrap();
    let out = run_ok(bin().args([
        "detect",
        "--config",
        cfg_nostd.to_str().unwrap(),
        "--no-timing",
    ]));
    let from_file: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(from_file["standardized_response"], false);
    let out = run_ok(bin().args([
        "detect",
        "--config",
        cfg_nostd.to_str().unwrap(),
        "--standardize",
        "--no-timing",
    ]));
    let flag_wins: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(flag_wins["standardized_response"], true);
}

#[test]
fn tune_subcommand_emits_table() {
    let dir = tmp_dir("tune");
    let csv = simulate_csv(&dir, 23);
    let grid = dir.join("grid.json");
    std::fs::write(
        &grid,
        r#"{"lambdas": [0.5, 1.0], "gammas": [2.0, 1e9], "zetas": null}"#,
    )
    .unwrap();
    let out = run_ok(bin().args([
        "tune",
        "--input",
        csv.to_str().unwrap(),
        "--response",
        "y",
        "--method",
        "dp",
        "--grid-file",
        grid.to_str().unwrap(),
        "--min-seg-len",
        "2",
        "--no-timing",
    ]));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let table = v["tuning"]["table"].as_array().unwrap();
    assert_eq!(table.len(), 4);
    assert!(v["tuning"]["best_lambda"].is_number());
}

#[test]
fn detect_with_cv_recovers_simulated_change_point() {
    let dir = tmp_dir("cvdetect");
    let csv = dir.join("sim.csv");
    run_ok(bin().args([
        "simulate",
        "--n",
        "80",
        "--p",
        "4",
        "--change-points",
        "41",
        "--kappa",
        "4",
        "--d0",
        "2",
        "--sigma-eps",
        "0.5",
        "--seed",
        "29",
        "--output",
        csv.to_str().unwrap(),
    ]));
    let grid = dir.join("grid.json");
    std::fs::write(
        &grid,
        r#"{"lambdas": [0.3, 1.0], "gammas": [10.0, 30.0], "zetas": [0.3, 1.0]}"#,
    )
    .unwrap();
    let out = run_ok(bin().args([
        "detect",
        "--input",
        csv.to_str().unwrap(),
        "--response",
        "y",
        "--method",
        "dp-lr",
        "--cv",
        "--grid-file",
        grid.to_str().unwrap(),
        "--min-seg-len",
        "5",
        "--no-standardize",
        "--no-timing",
    ]));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let cps: Vec<u64> = v["change_points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c.as_u64().unwrap())
        .collect();
    assert_eq!(cps.len(), 1, "report: {v}");
    assert!(
        cps[0].abs_diff(41) <= 3,
        "change point {} too far from 41",
        cps[0]
    );
    assert!(v["tuning"]["table"].as_array().unwrap().len() == 8);
    assert!(v["parameters"]["cv"].as_bool().unwrap());
}

#[test]
fn benchmark_subcommand_emits_tables() {
    let dir = tmp_dir("bench");
    let json_out = dir.join("bench.json");
    let tsv_out = dir.join("bench.tsv");
    run_ok(bin().args([
        "benchmark",
        "--n",
        "60",
        "--p",
        "4",
        "--change-points",
        "31",
        "--kappa",
        "4",
        "--d0",
        "2",
        "--methods",
        "dp,binseg",
        "--reps",
        "2",
        "--seed",
        "5",
        "--lambda",
        "0.5",
        "--gamma",
        "5.0",
        "--output",
        json_out.to_str().unwrap(),
        "--table",
        tsv_out.to_str().unwrap(),
    ]));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&json_out).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    let tsv = std::fs::read_to_string(&tsv_out).unwrap();
    assert!(tsv.starts_with("setting\tmethod"));
    assert_eq!(tsv.lines().count(), 3);
}
