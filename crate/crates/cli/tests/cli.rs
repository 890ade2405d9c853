use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

fn tabscan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tabscan"))
        .args(args)
        .env_remove("TABSCAN_OCR_CMD")
        .output()
        .expect("binary runs")
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_file() {
            out.insert(
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            );
        }
    }
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synth_is_deterministic_and_count_zero_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, z) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("z"));
    for d in [&a, &b] {
        assert!(tabscan(&["synth", "--seed", "4", "--count", "3", "-o", s(d)])
            .status
            .success());
    }
    assert_eq!(files(&a), files(&b));
    assert_eq!(files(&a).len(), 9);
    let out = tabscan(&["synth", "--count", "0", "-o", s(&z)]);
    assert!(out.status.success());
    assert!(files(&z).is_empty());
}

#[test]
fn extract_then_eval_perfect_truth() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let out = dir.path().join("out");
    assert!(tabscan(&[
        "synth",
        "--seed",
        "1",
        "--count",
        "2",
        "--ruled",
        "true",
        "--span",
        "false",
        "-o",
        s(&corpus)
    ])
    .status
    .success());
    let r = tabscan(&["extract", s(&corpus), "--ocr-cmd", "stub:", "-o", s(&out)]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let report = dir.path().join("report.json");
    let r = tabscan(&["eval", s(&out), s(&corpus), "--report", s(&report)]);
    assert!(r.status.success());
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(json["mode"], "icdar");
    assert_eq!(json["average"]["f1"], 1.0, "{json}");
}

#[test]
fn corrupt_input_is_partial_failure() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let out = dir.path().join("out");
    tabscan(&["synth", "--count", "2", "-o", s(&corpus)]);
    std::fs::write(corpus.join("broken.png"), b"not an image").unwrap();
    let r = tabscan(&["extract", s(&corpus), "--ocr-cmd", "stub:", "-o", s(&out)]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("broken.png"));
    assert!(out.join("synth_0000.json").exists() && out.join("synth_0001.json").exists());
}

#[test]
fn outputs_do_not_depend_on_parallelism() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    tabscan(&["synth", "--seed", "8", "--count", "4", "-o", s(&corpus)]);
    let one = dir.path().join("one");
    let four = dir.path().join("four");
    tabscan(&["extract", s(&corpus), "--ocr-cmd", "stub:", "-j", "1", "-o", s(&one)]);
    tabscan(&["extract", s(&corpus), "--ocr-cmd", "stub:", "-j", "4", "-o", s(&four)]);
    assert_eq!(files(&one), files(&four));
    assert!(!files(&one).is_empty());
}

#[test]
fn blank_page_writes_no_csv() {
    let dir = tempfile::tempdir().unwrap();
    let png = dir.path().join("blank.png");
    let img = tabscan::GrayImage::filled(500, 300, 255);
    img.save_png(&png).unwrap();
    let out = dir.path().join("out");
    let r = tabscan(&["extract", s(&png), "--ocr-cmd", "stub:", "-o", s(&out)]);
    assert!(r.status.success());
    assert!(files(&out).keys().all(|k| !k.ends_with(".csv")));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(tabscan(&["extract"]).status.code(), Some(2));
    assert_eq!(tabscan(&["frobnicate"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let png = dir.path().join("x.png");
    tabscan::GrayImage::filled(10, 10, 255).save_png(&png).unwrap();
    let r = tabscan(&["extract", s(&png), "--threshold-start", "1.5"]);
    assert_eq!(r.status.code(), Some(2));
    let r = tabscan(&["extract", s(&png), "--set", "bogus=1"]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn config_file_and_emit_regions() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    tabscan(&["synth", "--seed", "2", "--count", "1", "-o", s(&corpus)]);
    let cfg = dir.path().join("run.conf");
    std::fs::write(
        &cfg,
        format!("ocr_cmd = stub:\nout_dir = {}\n", s(&dir.path().join("out"))),
    )
    .unwrap();
    let regions = dir.path().join("regions.json");
    let r = tabscan(&[
        "extract",
        s(&corpus),
        "--config",
        s(&cfg),
        "--emit-regions",
        s(&regions),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(&regions).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 1);
    assert_eq!(json[0]["page"], "synth_0000");
    // feeding the regions back in is accepted
    let out2 = dir.path().join("out2");
    let r = tabscan(&[
        "extract",
        s(&corpus),
        "--ocr-cmd",
        "stub:",
        "--regions",
        s(&regions),
        "-o",
        s(&out2),
    ]);
    assert!(r.status.success());
}
