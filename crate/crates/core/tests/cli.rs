use std::path::{Path, PathBuf};
use std::process::Command;

use expander_wl1::io;

fn ewl1(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_ewl1"))
        .args(args)
        .output()
        .expect("spawn ewl1");
    let text = String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap_or(-1), text)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Pipeline {
    _dir: tempfile::TempDir,
    matrix: PathBuf,
    weights: PathBuf,
    signal: PathBuf,
    y: PathBuf,
    xhat: PathBuf,
    report: PathBuf,
}

fn pipeline() -> Pipeline {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name);
    let pl = Pipeline {
        matrix: p("A.txt"),
        weights: p("w.txt"),
        signal: p("x.txt"),
        y: p("y.txt"),
        xhat: p("xhat.txt"),
        report: p("report.json"),
        _dir: dir,
    };
    let (code, text) = ewl1(&["generate", "--N", "64", "--n", "24", "--d", "6", "--seed", "3", "--out", s(&pl.matrix)]);
    assert_eq!(code, 0, "{text}");
    let (code, text) = ewl1(&["weights", "--scheme", "polynomial", "--N", "64", "--alpha", "0.4", "--out", s(&pl.weights)]);
    assert_eq!(code, 0, "{text}");

    let a = io::read_matrix(&pl.matrix).unwrap();
    let mut x = vec![0.0; 64];
    x[5] = 1.75;
    io::write_vector(&x, &pl.signal).unwrap();
    io::write_vector(&a.apply(&x).unwrap(), &pl.y).unwrap();
    pl
}

#[test]
fn generate_weights_decode_verify_succeeds() {
    let pl = pipeline();
    let (code, text) = ewl1(&[
        "decode", "--matrix", s(&pl.matrix), "--y", s(&pl.y), "--weights", s(&pl.weights), "--out", s(&pl.xhat),
    ]);
    assert_eq!(code, 0, "{text}");
    let (code, text) = ewl1(&[
        "verify", "--matrix", s(&pl.matrix), "--k", "1", "--signal", s(&pl.signal), "--estimate", s(&pl.xhat),
        "--report", s(&pl.report),
    ]);
    assert_eq!(code, 0, "{text}");
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&pl.report).unwrap()).unwrap();
    assert_eq!(report["recovery"]["success"], serde_json::Value::Bool(true), "{report}");
}

#[test]
fn inputs_untouched_and_outputs_reproducible() {
    let pl = pipeline();
    let before: Vec<String> = [&pl.matrix, &pl.weights, &pl.y]
        .iter()
        .map(|p| std::fs::read_to_string(p).unwrap())
        .collect();
    let run = || {
        let (code, text) = ewl1(&[
            "decode", "--matrix", s(&pl.matrix), "--y", s(&pl.y), "--weights", s(&pl.weights), "--out", s(&pl.xhat),
        ]);
        assert_eq!(code, 0, "{text}");
        std::fs::read(&pl.xhat).unwrap()
    };
    assert_eq!(run(), run());
    let after: Vec<String> = [&pl.matrix, &pl.weights, &pl.y]
        .iter()
        .map(|p| std::fs::read_to_string(p).unwrap())
        .collect();
    assert_eq!(before, after);

    // an output path equal to an input is refused
    let (code, _) = ewl1(&["decode", "--matrix", s(&pl.matrix), "--y", s(&pl.y), "--out", s(&pl.y)]);
    assert_ne!(code, 0);
    assert_eq!(std::fs::read_to_string(&pl.y).unwrap(), before[2]);
}

#[test]
fn phase_csv_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("phase.cfg");
    std::fs::write(&cfg, "N = 32\nm_over_N_points = 2\ns_over_m_points = 2\ntrials = 2\n").unwrap();
    let strip = |path: &Path| -> Vec<String> {
        // drop the timing column
        std::fs::read_to_string(path)
            .unwrap()
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect()
    };
    let mut outputs = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let out = dir.path().join(name);
        let (code, text) = ewl1(&["phase", "--config", s(&cfg), "--out", s(&out), "--seed", "4"]);
        assert_eq!(code, 0, "{text}");
        assert!(dir.path().join(format!("{name}.meta.json")).exists());
        outputs.push(strip(&out));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0].len(), 1 + 2 * 2 * 2);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("A.txt");
    assert_eq!(ewl1(&["generate", "--N", "8"]).0, 64);
    assert_eq!(ewl1(&["frobnicate"]).0, 64);
    assert_eq!(ewl1(&["generate", "--N", "8", "--n", "4", "--d", "9", "--out", s(&out)]).0, 65);
    assert_eq!(ewl1(&["verify", "--matrix", s(&dir.path().join("missing")), "--k", "1"]).0, 66);
}
