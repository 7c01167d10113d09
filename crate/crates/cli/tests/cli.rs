use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn hht(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hht"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_series(dir: &Path, name: &str, values: &[f64]) -> PathBuf {
    let mut text = String::from("t,value\n");
    for (t, v) in values.iter().enumerate() {
        text.push_str(&format!("{},{v}\n", t + 1));
    }
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn two_tone(len: usize) -> Vec<f64> {
    (1..=len)
        .map(|t| {
            let t = t as f64;
            (2.0 * PI * 0.2 * t).sin() + 0.8 * (2.0 * PI * 0.02 * t).sin()
        })
        .collect()
}

fn ar_series(len: usize) -> Vec<f64> {
    let mut state = 0x2545_F491_4F6C_DD1Du64;
    let mut ar = 0.0;
    (1..=len)
        .map(|t| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            let u = (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            ar = 0.6 * ar + u;
            ar + (2.0 * PI * t as f64 / 25.0).sin()
        })
        .collect()
}

/// Data rows of a CSV output, skipping the digest comment and header.
fn rows(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn decompose_columns_sum_to_input() {
    let dir = tempfile::tempdir().unwrap();
    let x = two_tone(400);
    write_series(dir.path(), "x.csv", &x);
    let out = hht(
        &[
            "decompose",
            "-i",
            "x.csv",
            "-o",
            "d.csv",
            "--seed",
            "42",
            "--trials",
            "20",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let data = rows(&dir.path().join("d.csv"));
    assert_eq!(data.len(), x.len());
    for (row, v) in data.iter().zip(&x) {
        let sum: f64 = row[1..].iter().sum();
        assert!((sum - v).abs() < 1e-8, "{sum} vs {v}");
    }
}

#[test]
fn forecast_reports_finite_errors() {
    let dir = tempfile::tempdir().unwrap();
    write_series(dir.path(), "ar.csv", &ar_series(200));
    let out = hht(
        &[
            "forecast",
            "-i",
            "ar.csv",
            "-o",
            "r.json",
            "--seed",
            "3",
            "--trials",
            "10",
            "--tau",
            "5",
            "--features",
            "c,hc",
            "--t2",
            "50",
            "--train-window",
            "120",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    for side in ["hht", "lags"] {
        assert_eq!(json[side]["steps"], 50);
        assert!(json[side]["mse"].as_f64().unwrap().is_finite());
        assert!(json[side]["naive_mse"].as_f64().unwrap().is_finite());
    }
    assert!(json["hht_over_lags_mse"].as_f64().unwrap().is_finite());
    let steps = rows(&dir.path().join("r_hht.csv"));
    assert_eq!(steps.len(), 50);
    assert_eq!(steps[0][0], 151.0);
}

#[test]
fn invalid_span_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    write_series(dir.path(), "x.csv", &two_tone(100));
    std::fs::write(
        dir.path().join("run.toml"),
        "seed = 1\n\n[lowess]\nspan = 1.5\n",
    )
    .unwrap();
    let out = hht(
        &[
            "spectrum", "--config", "run.toml", "-i", "x.csv", "-o", "s.csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("lowess.span"), "{}", stderr(&out));
    assert!(!dir.path().join("s.csv").exists());
}

#[test]
fn validation_and_runtime_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    write_series(dir.path(), "x.csv", &two_tone(100));
    let no_seed = hht(&["decompose", "-i", "x.csv", "-o", "d.csv"], dir.path());
    assert_eq!(no_seed.status.code(), Some(1));
    assert!(stderr(&no_seed).contains("seed"));

    let unknown = hht(
        &[
            "decompose",
            "-i",
            "x.csv",
            "-o",
            "d.csv",
            "--seed",
            "1",
            "--set",
            "sift.bogus=2",
        ],
        dir.path(),
    );
    assert_eq!(unknown.status.code(), Some(1));
    assert!(stderr(&unknown).contains("bogus"));

    let missing = hht(
        &[
            "decompose",
            "-i",
            "absent.csv",
            "-o",
            "d.csv",
            "--seed",
            "1",
        ],
        dir.path(),
    );
    assert_eq!(missing.status.code(), Some(2));
    assert!(stderr(&missing).contains("load"));

    let column = hht(
        &[
            "decompose",
            "-i",
            "x.csv",
            "-o",
            "d.csv",
            "--seed",
            "1",
            "--value-column",
            "close",
        ],
        dir.path(),
    );
    assert_eq!(column.status.code(), Some(2));

    let cutoff = hht(
        &[
            "reconstruct",
            "-i",
            "x.csv",
            "-o",
            "r.csv",
            "--seed",
            "1",
            "--trials",
            "2",
            "--cutoff",
            "40",
        ],
        dir.path(),
    );
    assert_eq!(cutoff.status.code(), Some(2));
    assert!(stderr(&cutoff).contains("reconstruct"));
}

#[test]
fn outputs_are_reproducible_and_carry_the_digest() {
    let dir = tempfile::tempdir().unwrap();
    write_series(dir.path(), "x.csv", &two_tone(300));
    let args = |out: &'static str| {
        vec![
            "spectrum", "-i", "x.csv", "-o", out, "--seed", "9", "--trials", "8",
        ]
    };
    assert!(hht(&args("a.csv"), dir.path()).status.success());
    assert!(hht(&args("b.csv"), dir.path()).status.success());
    let read = |name: &str| std::fs::read(dir.path().join(name)).unwrap();
    let strip = |bytes: Vec<u8>| {
        let text = String::from_utf8(bytes).unwrap();
        let (first, rest) = text.split_once('\n').unwrap();
        assert!(first.starts_with("# config-digest: "), "{first}");
        assert_eq!(first.len(), "# config-digest: ".len() + 64);
        rest.to_string()
    };
    // the output path is part of the config, so only the bodies match
    assert_eq!(strip(read("a.csv")), strip(read("b.csv")));
    assert_eq!(strip(read("a_means.csv")), strip(read("b_means.csv")));

    assert!(hht(&args("a.csv"), dir.path()).status.success());
    let again = read("a.csv");
    assert!(hht(&args("a.csv"), dir.path()).status.success());
    assert_eq!(again, read("a.csv"));
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    write_series(dir.path(), "x.csv", &two_tone(200));
    std::fs::write(
        dir.path().join("run.toml"),
        "input = \"x.csv\"\noutput = \"f.csv\"\nseed = 5\n\n[ensemble]\ntrials = 4\n\n[forecast]\ntau = 2\n\n[features]\ninclude_amplitude = false\ninclude_frequency = false\ninclude_lambda = false\nmode_subset = \"first:1\"\n",
    )
    .unwrap();
    let out = hht(
        &["features", "--config", "run.toml", "--tau", "3"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("f.csv")).unwrap();
    let header = text.lines().nth(1).unwrap();
    assert_eq!(
        header,
        "t,c1_lag2,c1_lag1,c1_lag0,hc1_lag2,hc1_lag1,hc1_lag0,target"
    );
    assert_eq!(rows(&dir.path().join("f.csv")).len(), 200 - 3);
}

#[test]
fn log_price_reconstruction_is_exponentiated() {
    let dir = tempfile::tempdir().unwrap();
    let prices: Vec<f64> = two_tone(256).iter().map(|v| 100.0 + 10.0 * v).collect();
    write_series(dir.path(), "p.csv", &prices);
    let out = hht(
        &[
            "reconstruct",
            "-i",
            "p.csv",
            "-o",
            "r.csv",
            "--seed",
            "2",
            "--trials",
            "4",
            "--log-price",
            "--cutoff",
            "1",
            "--pass",
            "low",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let back = rows(&dir.path().join("r.csv"));
    for (r, p) in back.iter().zip(&prices) {
        assert!((r[0] - p).abs() < 1e-9 * p, "{} vs {p}", r[0]);
    }
}

#[test]
fn endeffect_report_has_every_bin() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("fast,slow\n");
    for t in 1..=300 {
        let t = t as f64;
        text.push_str(&format!(
            "{},{}\n",
            (2.0 * PI * 0.2 * t).sin(),
            0.8 * (2.0 * PI * 0.02 * t).sin()
        ));
    }
    std::fs::write(dir.path().join("truth.csv"), text).unwrap();
    let out = hht(
        &[
            "endeffect",
            "-i",
            "truth.csv",
            "-o",
            "e.csv",
            "--seed",
            "4",
            "--trials",
            "4",
            "--replications",
            "3",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let data = rows(&dir.path().join("e.csv"));
    // two truth modes plus the residue row, ten bins each
    assert_eq!(data.len(), 30);
    assert!(data.iter().all(|r| r[3] >= 0.0));
}

#[test]
fn help_exits_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = hht(&["--help"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for cmd in [
        "decompose",
        "spectrum",
        "reconstruct",
        "features",
        "forecast",
        "endeffect",
    ] {
        assert!(text.contains(cmd), "{cmd}");
    }
}
