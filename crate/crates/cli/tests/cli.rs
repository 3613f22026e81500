use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

fn lineup(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lineup"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

struct League {
    dir: tempfile::TempDir,
}

impl League {
    fn data(&self) -> PathBuf {
        self.dir.path().join("data")
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    /// Model for T01 trained on the first two seasons.
    fn model(&self) -> PathBuf {
        static DONE: OnceLock<()> = OnceLock::new();
        let path = self.path("T01.model.json");
        DONE.get_or_init(|| {
            let o = lineup(&[
                "fit",
                "--data",
                s(&self.data()),
                "--team",
                "T01",
                "--train-until",
                "2022-07-01",
                "--out",
                s(&path),
            ]);
            assert!(o.status.success(), "{}", stderr(&o));
        });
        path
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn league() -> &'static League {
    static L: OnceLock<League> = OnceLock::new();
    L.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("data");
        let o = lineup(&["generate", "--out", s(&data), "--seed", "2", "--seasons", "3"]);
        assert!(o.status.success(), "{}", stderr(&o));
        League { dir }
    })
}

#[test]
fn ingest_reports_and_normalizes() {
    let l = league();
    let out = l.path("normalized");
    let o = lineup(&["ingest", "--data", s(&l.data()), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("matches     1140"));
    for f in ["players.csv", "attributes.csv", "matches.csv", "rosters.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    // Normalizing is idempotent.
    let again = l.path("normalized2");
    assert!(lineup(&["ingest", "--data", s(&out), "--out", s(&again)])
        .status
        .success());
    for f in ["players.csv", "attributes.csv", "matches.csv"] {
        assert_eq!(
            std::fs::read(out.join(f)).unwrap(),
            std::fs::read(again.join(f)).unwrap()
        );
    }
}

#[test]
fn fit_writes_artifact_and_prints_aic() {
    let l = league();
    let model = l.model();
    assert!(model.exists());
    let again = l.path("again.model.json");
    let o = lineup(&[
        "fit",
        "--data",
        s(&l.data()),
        "--team",
        "T01",
        "--train-until",
        "2022-07-01",
        "--out",
        s(&again),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("AIC "));
    assert_eq!(std::fs::read(&model).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn optimize_is_reproducible() {
    let l = league();
    let model = l.model();
    let mut traces = Vec::new();
    for name in ["t1.json", "t2.json"] {
        let out = l.path(name);
        let o = lineup(&[
            "optimize",
            "--data",
            s(&l.data()),
            "--model",
            s(&model),
            "--opponent",
            "T02",
            "--date",
            "2022-09-01",
            "--home",
            "--seed",
            "5",
            "--out",
            s(&out),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(stdout(&o).contains("formation"));
        traces.push(std::fs::read(out).unwrap());
    }
    assert_eq!(traces[0], traces[1]);
}

#[test]
fn evaluate_writes_one_row_per_test_match_and_efficiency_summarizes() {
    let l = league();
    let records = l.path("records.csv");
    let o = lineup(&[
        "evaluate",
        "--data",
        s(&l.data()),
        "--team",
        "T01",
        "--train-until",
        "2022-07-01",
        "--test-from",
        "2022-07-01",
        "--seed",
        "2",
        "--out",
        s(&records),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&records).unwrap();
    assert_eq!(text.lines().count(), 1 + 38);

    let summary = l.path("summary.json");
    let o = lineup(&["efficiency", "--records", s(&records), "--out", s(&summary)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(summary).unwrap()).unwrap();
    assert_eq!(v["records"], 38);
    let max = v["all"]["max"].as_f64().unwrap();
    let min = v["all"]["min"].as_f64().unwrap();
    assert!(min > 0.0 && max <= 1.0 + 1e-9);
}

#[test]
fn config_file_supplies_values_and_flags_win() {
    let l = league();
    let model = l.model();
    let cfg = l.path("run.json");
    let body = serde_json::json!({
        "data": l.data(),
        "model": model,
        "opponent": "T03",
        "date": "2022-09-01",
        "home": false,
        "seed": 1,
        "formations": ["4-4-2"],
        "out": l.path("from_file.json"),
    });
    std::fs::write(&cfg, body.to_string()).unwrap();
    let o = lineup(&["optimize", "--config", s(&cfg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("formation 4-4-2"));

    let o = lineup(&[
        "optimize",
        "--config",
        s(&cfg),
        "--formation",
        "4-3-3",
        "--out",
        s(&l.path("flag.json")),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("formation 4-3-3"));
}

#[test]
fn exit_codes_classify_failures() {
    let l = league();
    let model = l.model();
    // No seed.
    let o = lineup(&[
        "optimize",
        "--data",
        s(&l.data()),
        "--model",
        s(&model),
        "--opponent",
        "T02",
        "--date",
        "2022-09-01",
        "--home",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error[validation:missing] "), "{}", stderr(&o));

    // Overlapping windows.
    let o = lineup(&[
        "evaluate",
        "--data",
        s(&l.data()),
        "--team",
        "T01",
        "--train-until",
        "2022-09-01",
        "--test-from",
        "2022-08-01",
        "--seed",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("error[validation:window]"));

    let o = lineup(&["ingest", "--data", s(&l.path("nowhere"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error[data:"));

    let bad = l.path("bad");
    std::fs::create_dir_all(&bad).unwrap();
    for f in ["players.csv", "attributes.csv"] {
        std::fs::copy(l.data().join(f), bad.join(f)).unwrap();
    }
    std::fs::write(bad.join("matches.csv"), "match_id,date\nx,notadate\n").unwrap();
    let o = lineup(&["ingest", "--data", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));

    let o = lineup(&["fit", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error[validation:usage]"));
}
