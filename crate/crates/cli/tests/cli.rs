//! End-to-end tests against the compiled binary: output shapes, exit codes,
//! and byte determinism of every artifact kind.

use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spiralcvx"))
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn json_stdout(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout should be JSON")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no exit code")
}

#[test]
fn eval_at_major_tip() {
    let out = run(&["eval", "1.4142135623730951", "0"]);
    let v = json_stdout(&out);
    assert!((v["f"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(v["chart"]["t"].as_f64().unwrap().abs() < 1e-12);
    assert!(v["chart"]["theta"].as_f64().unwrap().abs() < 1e-12);
    // Gradient points along +x here with norm 1/(tau sqrt(2)).
    let gx = v["grad"][0].as_f64().unwrap();
    let gy = v["grad"][1].as_f64().unwrap();
    assert!((gx - 1.0 / (0.09 * 2.0f64.sqrt())).abs() < 1e-9);
    assert!(gy.abs() < 1e-12);
    // Inequality residuals are nonnegative slack.
    assert!(v["residuals"]["lojasiewicz"].as_f64().unwrap() >= 0.0);
    assert!(v["residuals"]["kl"].as_f64().unwrap() >= 0.0);
    let lo = v["bounds"]["lower"].as_f64().unwrap();
    let hi = v["bounds"]["upper"].as_f64().unwrap();
    assert!(lo <= hi);
}

#[test]
fn eval_at_origin_degenerates_cleanly() {
    let v = json_stdout(&run(&["eval", "0", "0"]));
    assert_eq!(v["f"].as_f64().unwrap(), 0.0);
    assert_eq!(v["grad"][0].as_f64().unwrap(), 0.0);
    assert_eq!(v["grad"][1].as_f64().unwrap(), 0.0);
    assert!(v["chart"].is_null());
    assert!(v["residuals"]["kl"].is_null());
}

#[test]
fn eval_rejects_non_numeric_coordinates() {
    assert_eq!(code(&run(&["eval", "abc", "0"])), 2);
}

#[test]
fn eval_accepts_negative_coordinates() {
    let v = json_stdout(&run(&["eval", "-2", "-1"]));
    assert!(v["f"].as_f64().unwrap() > 0.0);
}

#[test]
fn invert_matches_frozen_chart_point() {
    let v = json_stdout(&run(&["invert", "2", "0"]));
    assert!((v["t"].as_f64().unwrap() - 0.425_116_458_208_475_66).abs() < 1e-13);
    assert!((v["theta"].as_f64().unwrap() - 5.713_696_430_252_619).abs() < 1e-12);
    assert!(v["residual"].as_f64().unwrap().abs() < 1e-13);
    assert!(v["iterations"].as_u64().unwrap() < 60);
}

#[test]
fn invert_origin_is_a_usage_error() {
    assert_eq!(code(&run(&["invert", "0", "0"])), 2);
}

#[test]
fn verify_all_passes_and_reports_every_suite() {
    let out = run(&["verify", "--samples", "2000"]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["all_pass"].as_bool(), Some(true));
    assert_eq!(v["suites"].as_array().unwrap().len(), 27);
    for row in v["suites"].as_array().unwrap() {
        assert_eq!(row["pass"].as_bool(), Some(true), "row {}", row["suite"]);
    }
    // Timing goes to stderr so the report itself stays reproducible.
    assert!(String::from_utf8_lossy(&out.stderr).contains("ms"));
}

#[test]
fn verify_rejects_unknown_suite() {
    assert_eq!(code(&run(&["verify", "--suite", "spectral"])), 2);
}

#[test]
fn verify_unsafe_tau_needs_opt_in_and_then_fails_honestly() {
    assert_eq!(code(&run(&["verify", "--tau", "0.2", "--samples", "500"])), 2);
    let out = run(&[
        "verify",
        "--tau",
        "0.2",
        "--samples",
        "500",
        "--allow-unsafe-tau",
    ]);
    assert_eq!(code(&out), 1);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["all_pass"].as_bool(), Some(false));
    let failed: Vec<&str> = v["suites"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| !r["pass"].as_bool().unwrap())
        .map(|r| r["suite"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["convexity/certified-range"]);
}

fn parse_csv(stdout: &[u8]) -> Vec<Vec<f64>> {
    let text = String::from_utf8_lossy(stdout);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("param,x,y,t,theta,alpha,f,norm"),
        "header row"
    );
    lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect()
}

#[test]
fn trace_chart_descends_in_theta() {
    let out = run(&[
        "trace", "2", "0", "--mode", "chart", "--span-lo", "-5", "--span-hi", "5",
    ]);
    assert_eq!(code(&out), 0);
    let rows = parse_csv(&out.stdout);
    assert!(rows.len() > 50);
    for w in rows.windows(2) {
        assert!(w[1][3] > w[0][3], "t column strictly increasing");
        assert!(w[1][4] < w[0][4], "theta column strictly decreasing");
    }
    let first = &rows[0];
    let last = &rows[rows.len() - 1];
    assert!((first[3] + 5.0).abs() < 1e-12 && (last[3] - 5.0).abs() < 1e-12);
}

#[test]
fn trace_time_grows_norm_to_threshold() {
    let out = run(&["trace", "2", "0"]);
    assert_eq!(code(&out), 0);
    let rows = parse_csv(&out.stdout);
    for w in rows.windows(2) {
        assert!(w[1][7] >= w[0][7], "norm column nondecreasing");
    }
    let last = rows.last().unwrap();
    assert!((last[7] - 1e6).abs() < 1.0, "stops at the norm threshold");
}

#[test]
fn trace_unwritable_out_is_a_usage_error() {
    assert_eq!(
        code(&run(&["trace", "2", "0", "--out", "/nonexistent_dir/a.csv"])),
        2
    );
}

#[test]
fn fourier_rejects_tiny_grids() {
    assert_eq!(code(&run(&["fourier", "--n", "15"])), 2);
}

#[test]
fn fourier_mean_rate_converged() {
    let v = json_stdout(&run(&["fourier"]));
    let a0 = v["a0"].as_f64().unwrap();
    assert!((-0.85..=-0.83).contains(&a0), "a0 = {a0}");
    let hist = v["convergence_history"].as_array().unwrap();
    assert_eq!(hist.len(), 3);
    assert_eq!(hist[0]["n"].as_u64(), Some(4096));
    assert_eq!(hist[1]["n"].as_u64(), Some(8192));
    let step = (hist[1]["a0"].as_f64().unwrap() - hist[0]["a0"].as_f64().unwrap()).abs();
    assert!(step < 1e-12, "doubling changes a0 by {step}");
}

#[test]
fn winding_chart_default_span() {
    let v = json_stdout(&run(&["winding"]));
    assert_eq!(v["mode"].as_str(), Some("chart"));
    assert_eq!(v["termination"].as_str(), Some("span_end"));
    assert!(v["delta_theta"].as_f64().unwrap() < -45.0);
    assert!(v["delta_alpha"].as_f64().unwrap() > 0.0);
    let turns = v["turns"].as_f64().unwrap();
    assert!((turns - 1.87).abs() < 0.02, "turns = {turns}");
    assert!(v["t_event"].is_null());
}

#[test]
fn winding_longer_span_accumulates_turns() {
    let v = json_stdout(&run(&["winding", "--span-lo", "-90", "--span-hi", "90"]));
    assert!(v["turns"].as_f64().unwrap() > 3.0);
}

#[test]
fn winding_time_mode_reports_blowup() {
    let v = json_stdout(&run(&["winding", "--mode", "time"]));
    assert_eq!(v["termination"].as_str(), Some("norm_threshold"));
    let t_event = v["t_event"].as_f64().unwrap();
    let estimate = v["blowup_estimate"].as_f64().unwrap();
    assert!(t_event > 0.0);
    assert!(estimate >= t_event);
    // Tail beyond the 1e6 threshold is astronomically small.
    assert!(estimate - t_event < 1e-30);
}

#[test]
fn plot_artifacts_render() {
    let dir = tempfile::tempdir().unwrap();
    let h = dir.path().join("h.svg");
    let fol = dir.path().join("fol.svg");
    let orb = dir.path().join("orbit.svg");

    assert_eq!(code(&run(&["plot", "h", "--out", h.to_str().unwrap()])), 0);
    let h_text = std::fs::read_to_string(&h).unwrap();
    assert!(h_text.starts_with("<svg"));
    assert_eq!(h_text.matches("class=\"zero\"").count(), 5);

    assert_eq!(
        code(&run(&[
            "plot",
            "foliation",
            "--out",
            fol.to_str().unwrap(),
            "--samples",
            "3",
        ])),
        0
    );
    let fol_text = std::fs::read_to_string(&fol).unwrap();
    assert_eq!(fol_text.matches("<ellipse").count(), 3);

    assert_eq!(
        code(&run(&["plot", "orbit", "--out", orb.to_str().unwrap()])),
        0
    );
    let orb_text = std::fs::read_to_string(&orb).unwrap();
    // Main panel plus two zoom insets.
    assert_eq!(orb_text.matches("<rect").count(), 4);
    assert!(orb_text.matches("<polyline").count() >= 3);
}

#[test]
fn outputs_are_byte_deterministic() {
    let a = run(&["eval", "3", "4"]);
    let b = run(&["eval", "3", "4"]);
    assert_eq!(a.stdout, b.stdout);

    let dir = tempfile::tempdir().unwrap();
    let p1 = dir.path().join("a.svg");
    let p2 = dir.path().join("b.svg");
    run(&["plot", "orbit", "--out", p1.to_str().unwrap()]);
    run(&["plot", "orbit", "--out", p2.to_str().unwrap()]);
    assert_eq!(
        std::fs::read(&p1).unwrap(),
        std::fs::read(&p2).unwrap(),
        "identical command, identical artifact"
    );
}

#[test]
fn out_flag_writes_the_same_payload() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("eval.json");
    let piped = run(&["eval", "2", "1"]);
    let filed = run(&["eval", "2", "1", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&filed), 0);
    assert_eq!(
        std::fs::read(&path).unwrap(),
        piped.stdout,
        "--out mirrors stdout"
    );
}
