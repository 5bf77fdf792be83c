use std::fs;
use std::process::Command;

fn bench() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bench"))
}

#[test]
fn synth_run_and_forecast() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("sine.csv");
    let status = bench()
        .args(["synth", "--len", "80", "--out"])
        .arg(&data)
        .status()
        .unwrap();
    assert!(status.success());

    let config = dir.path().join("bench.conf");
    fs::write(
        &config,
        "data_path = sine.csv\ntime_step = 5\nepochs = 1\narima_p = 0,1\narima_q = 0\noutput_dir = out\n",
    )
    .unwrap();
    let out = bench()
        .args(["run", "--models", "ARIMA,gru", "--seed", "7", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let scores = fs::read_to_string(dir.path().join("out/scores.csv")).unwrap();
    let models: Vec<_> = scores.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(models, ["ARIMA", "GRU"]);

    let out = bench()
        .args(["forecast", "--model", "arima", "--horizon", "3", "--no-train", "--checkpoint"])
        .arg(dir.path().join("out/ckpt_ARIMA.json"))
        .arg("--config")
        .arg(&config)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("2020-03-21\t"), "{}", lines[0]);
}

#[test]
fn usage_errors_exit_nonzero() {
    let out = bench().args(["forecast", "--model", "ARIMA", "--horizon", "0"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("horizon"));

    let out = bench().args(["forecast", "--model", "LSTM", "--horizon", "1"]).output().unwrap();
    assert!(!out.status.success());

    let out = bench().args(["run", "--models", ""]).output().unwrap();
    assert!(!out.status.success());

    let dir = tempfile::tempdir().unwrap();
    let out = bench()
        .args(["run", "--data"])
        .arg(dir.path().join("missing.csv"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.csv"));
}
