use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn sagnac() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sagnac"));
    cmd.env_remove("SAGNAC_SEED");
    cmd
}

fn run(args: &[&str]) -> Output {
    sagnac().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

fn summary_value(text: &str, key: &str) -> f64 {
    let prefix = format!("# {key}=");
    text.lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("no `{key}` in\n{text}"))
        .parse()
        .unwrap()
}

fn summary_block(text: &str) -> &str {
    &text[text.find("# summary").expect("summary block")..]
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn quick_sweep_matches_golden_file() {
    let out = run(&["sweep", "--quick"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    if std::env::var_os("SAGNAC_BLESS").is_some() {
        fs::write(golden("sweep_quick_H.csv"), &text).unwrap();
    }
    assert_eq!(
        text,
        fs::read_to_string(golden("sweep_quick_H.csv")).unwrap()
    );
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("voltage_V,mean_c1,std_c1,mean_c2,std_c2,p1_analytic,p2_analytic")
    );
    assert_eq!(lines.take_while(|l| !l.starts_with('#')).count(), 17);
}

#[test]
fn sweep_output_is_byte_identical_for_equal_seeds() {
    let dir = TempDir::new().unwrap();
    let files: Vec<PathBuf> = (0..2)
        .map(|i| dir.path().join(format!("run{i}.csv")))
        .collect();
    for f in &files {
        let out = run(&["sweep", "--quick", "--seed", "42", "--out", path_str(f)]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    }
    assert_eq!(fs::read(&files[0]).unwrap(), fs::read(&files[1]).unwrap());
    let other = stdout(&run(&["sweep", "--quick", "--seed", "43"]));
    assert_ne!(fs::read_to_string(&files[0]).unwrap(), other);
}

#[test]
fn seed_precedence_is_flag_then_config_then_environment() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[plan]\nseed = 9\n").unwrap();
    let with_env = |args: &[&str], seed: &str| {
        stdout(
            &sagnac()
                .args(args)
                .env("SAGNAC_SEED", seed)
                .output()
                .unwrap(),
        )
    };
    let nine = stdout(&run(&["sweep", "--quick", "--seed", "9"]));
    assert_eq!(with_env(&["sweep", "--quick"], "9"), nine);
    assert_eq!(
        with_env(&["sweep", "--quick", "--config", path_str(&cfg)], "5"),
        nine
    );
    assert_eq!(with_env(&["sweep", "--quick", "--seed", "9"], "5"), nine);
    assert_ne!(with_env(&["sweep", "--quick"], "5"), nine);
}

#[test]
fn json_sweep_mirrors_csv() {
    let csv = stdout(&run(&["sweep", "--quick"]));
    let json: serde_json::Value =
        serde_json::from_str(&stdout(&run(&["sweep", "--quick", "--format", "json"]))).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["kind"], "voltage_sweep");
    let rows = json["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 17);
    let first_csv: Vec<f64> = csv
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|c| c.parse().unwrap())
        .collect();
    let keys = [
        "voltage_V",
        "mean_c1",
        "std_c1",
        "mean_c2",
        "std_c2",
        "p1_analytic",
        "p2_analytic",
    ];
    for (k, v) in keys.iter().zip(first_csv) {
        assert_eq!(rows[0][k].as_f64().unwrap(), v, "{k}");
    }
    assert_eq!(
        json["summary"]["visibility"].as_f64().unwrap(),
        summary_value(&csv, "visibility")
    );
}

#[test]
fn malformed_config_exits_2_without_output() {
    let dir = TempDir::new().unwrap();
    let out_file = dir.path().join("out.csv");
    for (name, body) in [
        ("syntax.toml", "[plan\nrepetitions = 3\n"),
        ("unknown.toml", "[plan]\nrepetition = 3\n"),
        ("range.toml", "[detector]\nefficiency = 1.5\n"),
        ("type.toml", "[switch]\nv_pi = \"four\"\n"),
    ] {
        let cfg = dir.path().join(name);
        fs::write(&cfg, body).unwrap();
        let out = run(&[
            "sweep",
            "--config",
            path_str(&cfg),
            "--out",
            path_str(&out_file),
        ]);
        assert_eq!(out.status.code(), Some(2), "{name}");
        assert!(
            stderr(&out).starts_with("error:"),
            "{name}: {}",
            stderr(&out)
        );
        assert!(!out_file.exists(), "{name}");
    }
    let out = run(&["sweep", "--config", "/nonexistent/run.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_flags_exit_2() {
    for args in [
        &["sweep", "--input-state", "X"][..],
        &["sweep", "--input-state", "0,0"],
        &["sweep", "--kl-deg", "nan"],
        &["delay-scan", "--step", "0ns"],
        &["delay-scan", "--step", "-1ns"],
        &["delay-scan", "--from", "10ns", "--to", "5ns"],
        &["delay-scan", "--step", "1fs"],
        &["no-such-command"],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
        assert!(stdout(&out).is_empty(), "{args:?}");
    }
}

#[test]
fn custom_input_state_runs() {
    let out = run(&["sweep", "--quick", "--input-state", "1,0+1i"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
}

#[test]
fn delay_scan_shows_two_pulse_wide_dips() {
    let out = run(&["delay-scan", "--quick"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("delay_s,mean_c1,std_c1,phi_cw,phi_ccw"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 601);
    assert_eq!(rows[0][0], -40e-9);
    assert_eq!(rows[600][0], 560e-9);
    let (modulated, flat): (Vec<_>, Vec<_>) = rows.iter().partition(|r| r[3] != 0.0 || r[4] != 0.0);
    // one dip per pass time, each 32 ± 1 steps wide
    let regions: Vec<&[&Vec<f64>]> = modulated.chunk_by(|a, b| b[0] - a[0] < 1.5e-9).collect();
    assert_eq!(regions.len(), 2);
    for region in regions {
        assert!((31..=33).contains(&region.len()), "{}", region.len());
    }
    let baseline = flat.iter().map(|r| r[1]).sum::<f64>() / flat.len() as f64;
    assert!(modulated.iter().all(|r| r[1] < baseline / 2.0));
    assert!(flat.iter().all(|r| r[1] > baseline / 2.0));
}

#[test]
fn delay_scan_away_from_both_passes_is_flat() {
    let out = run(&[
        "delay-scan",
        "--quick",
        "--from",
        "100ns",
        "--to",
        "400ns",
        "--step",
        "10ns",
    ]);
    assert_eq!(out.status.code(), Some(0));
    for l in stdout(&out).lines().skip(1) {
        let cells: Vec<&str> = l.split(',').collect();
        assert_eq!(&cells[3..], ["0.000000000000", "0.000000000000"], "{l}");
    }
}

#[test]
fn emitted_preset_validates() {
    let dir = TempDir::new().unwrap();
    let net = dir.path().join("switch.sagnet");
    let out = run(&["netlist", "emit-preset", "--out", path_str(&net)]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&["netlist", "validate", path_str(&net)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stderr(&out).is_empty());
    assert!(stdout(&out).contains(": ok ("), "{}", stdout(&out));
}

#[test]
fn emit_preset_follows_config() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[switch]\ndelay_length = 250\n").unwrap();
    let text = stdout(&run(&[
        "netlist",
        "emit-preset",
        "--config",
        path_str(&cfg),
    ]));
    assert!(
        text.lines()
            .any(|l| l.starts_with("fiber delay") && l.contains("length_m=250")),
        "{text}"
    );
}

#[test]
fn corrupted_preset_is_rejected_with_location() {
    let dir = TempDir::new().unwrap();
    let preset = stdout(&run(&["netlist", "emit-preset"]));
    let cases = [
        ("dropped", preset.replace("connect bs.p3 -> pc_a.p1\n", "")),
        (
            "port",
            preset.replace("connect pc_b.p2 -> delay.p1", "connect pc_b.p2 -> delay.p7"),
        ),
        ("value", preset.replace("ratio=0.5", "ratio=half")),
        (
            "swap",
            preset.replace("connect pbs_in.p4 -> pm2.p1", "connect pbs_in.p2 -> pm2.p1"),
        ),
    ];
    for (name, text) in cases {
        assert_ne!(text, preset, "{name}");
        let net = dir.path().join(format!("{name}.sagnet"));
        fs::write(&net, &text).unwrap();
        let out = run(&["netlist", "validate", path_str(&net)]);
        assert_eq!(out.status.code(), Some(2), "{name}");
        let err = stderr(&out);
        let located = format!("{}:", net.display());
        assert!(err.starts_with(&located), "{name}: {err}");
        let position = &err[located.len()..];
        assert!(
            position.split(':').next().unwrap().parse::<usize>().is_ok(),
            "{name}: {err}"
        );
    }
}

#[test]
fn canonicalize_is_idempotent() {
    let dir = TempDir::new().unwrap();
    let preset = stdout(&run(&["netlist", "emit-preset"]));
    // reversed lines, extra blanks and a comment
    let mut messy: Vec<String> = preset
        .lines()
        .rev()
        .map(|l| l.replace(' ', "   "))
        .collect();
    messy.insert(3, "# hand edit".into());
    messy.push(String::new());
    let net = dir.path().join("messy.sagnet");
    fs::write(&net, messy.join("\n")).unwrap();

    let out = run(&["netlist", "canonicalize", path_str(&net)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let once = fs::read_to_string(&net).unwrap();
    assert_eq!(once, preset);
    let copy = dir.path().join("copy.sagnet");
    let out = run(&[
        "netlist",
        "canonicalize",
        path_str(&net),
        "--out",
        path_str(&copy),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fs::read_to_string(&copy).unwrap(), once);
    assert_eq!(fs::read_to_string(&net).unwrap(), once);
}

#[test]
fn analyze_reproduces_the_embedded_summary() {
    let dir = TempDir::new().unwrap();
    for fmt in ["csv", "json"] {
        let results = dir.path().join(format!("sweep.{fmt}"));
        let out = run(&[
            "sweep",
            "--quick",
            "--format",
            fmt,
            "--out",
            path_str(&results),
        ]);
        assert_eq!(out.status.code(), Some(0));
        let sweep = fs::read_to_string(&results).unwrap();
        let out = run(&["analyze", path_str(&results)]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        let analyzed = stdout(&out);
        if fmt == "csv" {
            assert_eq!(analyzed, summary_block(&sweep));
        } else {
            let a: serde_json::Value = serde_json::from_str(&analyzed).unwrap();
            let s: serde_json::Value = serde_json::from_str(&sweep).unwrap();
            assert_eq!(a["summary"], s["summary"]);
            assert_eq!(a["schema_version"], 1);
        }
    }
}

fn write_rows(path: &Path, rows: impl Iterator<Item = (f64, f64, f64)>) {
    let mut text =
        String::from("voltage_V,mean_c1,std_c1,mean_c2,std_c2,p1_analytic,p2_analytic\n");
    for (v, c1, c2) in rows {
        text.push_str(&format!("{v},{c1},1,{c2},1,0.5,0.5\n"));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn analyze_hand_built_rows_gives_extinction_19_21_db() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("rows.csv");
    // C1/C2 = 8339/100 at the constructive setting
    write_rows(
        &path,
        (0..=16).map(|i| {
            let v = i as f64 * 0.5;
            let c = (std::f64::consts::PI * v / 8.0).cos().powi(2);
            (v, 8239.0 * c + 100.0, 8239.0 * (1.0 - c) + 100.0)
        }),
    );
    let out = run(&["analyze", path_str(&path)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(
        (summary_value(&text, "extinction_db") - 19.21).abs() <= 0.01,
        "{text}"
    );
    assert!(
        (summary_value(&text, "visibility") - 0.9763).abs() <= 5e-5,
        "{text}"
    );
    assert!(
        (summary_value(&text, "v_pi_fit") - 4.0).abs() <= 1e-3,
        "{text}"
    );
}

#[test]
fn analyze_constant_rows_reports_fit_failure() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("flat.csv");
    write_rows(&path, (0..=16).map(|i| (i as f64 * 0.5, 50.0, 50.0)));
    let out = run(&["analyze", path_str(&path)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("fit"), "{}", stderr(&out));
    assert!(stdout(&out).contains("# fit_error="));
}

#[test]
fn analyze_rejects_foreign_files() {
    let dir = TempDir::new().unwrap();
    let net = dir.path().join("switch.sagnet");
    fs::write(&net, stdout(&run(&["netlist", "emit-preset"]))).unwrap();
    let json = dir.path().join("other.json");
    fs::write(&json, r#"{"schema_version": 2, "kind": "voltage_sweep"}"#).unwrap();
    for p in [net.as_path(), json.as_path(), Path::new("/nonexistent.csv")] {
        let out = run(&["analyze", path_str(p)]);
        assert_eq!(out.status.code(), Some(2), "{}", p.display());
    }
}

#[test]
fn diagonal_and_horizontal_inputs_give_matching_visibility() {
    let sweep =
        |state: &str, seed: &str| stdout(&run(&["sweep", "--input-state", state, "--seed", seed]));
    let (h, d) = (sweep("H", "1"), sweep("D", "2"));
    let (vh, vd) = (
        summary_value(&h, "visibility"),
        summary_value(&d, "visibility"),
    );
    let bound =
        3.0 * summary_value(&h, "visibility_stderr").hypot(summary_value(&d, "visibility_stderr"));
    assert!((vh - vd).abs() <= bound, "{vh} vs {vd} (bound {bound})");
}
