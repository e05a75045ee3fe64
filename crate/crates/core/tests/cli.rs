mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::fixture;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lattice-reduce"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = bin(args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn build_report_row() {
    let f = fixture("cxt/empty_2x2.cxt");
    let out = ok(&["build", "-i", p(&f), "--format", "csv"]);
    assert_eq!(
        out,
        "concept_count,edge_count,height,width_lower,width_upper,width_exact\n2,1,1,1,1,1\n"
    );
    let dot = ok(&["build", "-i", p(&f)]);
    assert!(dot.starts_with("digraph"));
    assert_eq!(dot.matches("->").count(), 1);
}

#[test]
fn reduce_without_taxonomy_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixture("replay/context.cxt");
    let trace = dir.path().join("t.jsonl");
    let out = ok(&[
        "reduce",
        "-i",
        p(&f),
        "--taxonomy",
        "none",
        "--trace",
        p(&trace),
    ]);
    assert_eq!(out, std::fs::read_to_string(&f).unwrap());
    assert_eq!(std::fs::read_to_string(&trace).unwrap(), "");
}

#[test]
fn compare_with_itself() {
    let f = fixture("cxt/contranominal_4x4.cxt");
    let v: serde_json::Value =
        serde_json::from_str(&ok(&["compare", "--left", p(&f), "--right", p(&f)])).unwrap();
    assert_eq!(v["isomorphic"], true);
    assert_eq!(v["quality"]["score"], 1.0);
}

#[test]
fn compare_replays_trace() {
    let dir = tempfile::tempdir().unwrap();
    let (ctx, tax) = (
        fixture("replay/context.cxt"),
        fixture("replay/taxonomy.tsv"),
    );
    let (red, trace) = (dir.path().join("r.cxt"), dir.path().join("t.jsonl"));
    let spec = format!("tsv:{}", p(&tax));
    ok(&[
        "reduce",
        "-i",
        p(&ctx),
        "--taxonomy",
        &spec,
        "-o",
        p(&red),
        "--trace",
        p(&trace),
    ]);
    let both = ok(&[
        "compare",
        "--left",
        p(&ctx),
        "--right",
        p(&red),
        "--trace",
        p(&trace),
    ]);
    let replayed = ok(&["compare", "--left", p(&ctx), "--trace", p(&trace)]);
    assert_eq!(both, replayed);
    let v: serde_json::Value = serde_json::from_str(&both).unwrap();
    assert_eq!(v["reduction_map"]["order_preserved"], true);
}

#[test]
fn hierarchy_formats() {
    let f = fixture("cxt/empty_2x2.cxt");
    let v: serde_json::Value = serde_json::from_str(&ok(&["hierarchy", "-i", p(&f)])).unwrap();
    let root = v["root"].as_u64().unwrap() as usize;
    assert_eq!(v["nodes"][root]["children"].as_array().unwrap().len(), 1);
    let text = ok(&["hierarchy", "-i", p(&f), "--format", "text"]);
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(bin(&[]).status.code(), Some(1));
    assert_eq!(bin(&["build", "--bogus"]).status.code(), Some(1));
    let bad = dir.path().join("bad.cxt");
    std::fs::write(&bad, "B\n\n2\n2\n\no0\no1\na0\na1\nX?\n..\n").unwrap();
    let out = bin(&["build", "-i", p(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    assert_eq!(
        bin(&["context", "--pairs", p(&fixture("pairs/empty.tsv"))])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        bin(&[
            "reduce",
            "-i",
            p(&fixture("replay/context.cxt")),
            "--taxonomy",
            "none",
            "--similar-depth",
            "9"
        ])
        .status
        .code(),
        Some(1)
    );

    // contranominal 9x9 has 512 concepts, over the isomorphism cap
    let big = dir.path().join("big.cxt");
    let mut text = String::from("B\n\n9\n9\n\n");
    for i in 0..9 {
        text += &format!("o{i}\n");
    }
    for j in 0..9 {
        text += &format!("a{j}\n");
    }
    for i in 0..9 {
        text += &(0..9)
            .map(|j| if i == j { '.' } else { 'X' })
            .collect::<String>();
        text += "\n";
    }
    std::fs::write(&big, text).unwrap();
    assert_eq!(
        bin(&["compare", "--left", p(&big), "--right", p(&big)])
            .status
            .code(),
        Some(3)
    );

    let out = bin(&[
        "bench",
        "--densities",
        "0.5",
        "--ladder",
        "10,200",
        "--repetitions",
        "1",
        "--timeout-secs",
        "0.05",
    ]);
    assert_eq!(out.status.code(), Some(4));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.lines().nth(1).unwrap().ends_with(",ok"));
    assert!(csv.lines().nth(2).unwrap().ends_with(",timeout"));
}

#[test]
fn config_file_with_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "format=csv\nexact-width-limit=0\n").unwrap();
    let f = fixture("cxt/empty_2x2.cxt");
    let out = ok(&["build", "-i", p(&f), "--config", p(&cfg)]);
    assert!(out.ends_with("2,1,1,1,1,\n"));
    let out = ok(&[
        "build",
        "-i",
        p(&f),
        "--config",
        p(&cfg),
        "--exact-width-limit",
        "5",
    ]);
    assert!(out.ends_with("2,1,1,1,1,1\n"));
}
