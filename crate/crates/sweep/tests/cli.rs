use std::path::Path;
use std::process::{Command, Output};

fn beamsweep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_beamsweep")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synth_then_detect_finds_one_trigger() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("synth");
    let o = beamsweep(&["synth", "--out-dir", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["x_sync.iq", "x_sync.csv", "template.txt", "golay.txt", "test_waveform.iq", "frames/frame_63.iq"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    assert_eq!(std::fs::metadata(out.join("x_sync.iq")).unwrap().len(), 544 * 4);
    assert_eq!(std::fs::read_to_string(out.join("template.txt")).unwrap().lines().count(), 128);

    let o = beamsweep(&["detect", s(&out.join("x_sync.iq"))]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "sample_index,ppd_lag,metrics");
    assert_eq!(lines.len(), 2, "{text}");
    assert_eq!(lines[1].split(',').nth(2).unwrap().split(' ').count(), 4);
}

#[test]
fn sweep_and_analyze_agree() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let o = beamsweep(&[
        "sweep",
        "--out-dir",
        s(&run),
        "--distances",
        "9.75",
        "--tx-indices",
        "30-34",
        "--rx-indices",
        "31-33",
        "--s-rx",
        "1472",
        "--seed",
        "3",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stem = "snr_60.48GHz_9.7500m";
    for f in ["summary.csv", "dataset.mmsd", &format!("{stem}.csv"), &format!("{stem}_clipped.csv")] {
        assert!(run.join(f).is_file(), "{f}");
    }
    let summary = std::fs::read_to_string(run.join("summary.csv")).unwrap();
    let row: Vec<&str> = summary.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[3..5], ["32", "32"]);

    let an = dir.path().join("an");
    let o = beamsweep(&["analyze", s(&run.join("dataset.mmsd")), "--out-dir", s(&an)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let a = std::fs::read(run.join(format!("{stem}.csv"))).unwrap();
    let b = std::fs::read(an.join(format!("{stem}.csv"))).unwrap();
    assert_eq!(a, b);
    assert!(an.join(format!("{stem}_best_cir.csv")).is_file());
    let transfers = std::fs::read_to_string(an.join("transfers.csv")).unwrap();
    assert!(transfers.lines().count() > 1);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.iq");
    assert_eq!(beamsweep(&["detect", s(&missing)]).status.code(), Some(3));

    let scene = dir.path().join("bad.scene");
    std::fs::write(&scene, "[scene]\ndistance_m = far\n").unwrap();
    let o = beamsweep(&["sweep", "--scene", s(&scene), "--out-dir", s(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(5));

    assert_eq!(beamsweep(&["sweep", "--s-rx", "lots"]).status.code(), Some(2));
    assert_eq!(beamsweep(&["frobnicate"]).status.code(), Some(2));
    let o = beamsweep(&["sweep", "--tx-indices", "70", "--out-dir", s(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(5));
}
