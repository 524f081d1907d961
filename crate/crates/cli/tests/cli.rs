use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use provml::data::{ColumnKind, ColumnarSchema, FieldProcessor, TransformKind, TransformSpec};
use provml::optimize::{LinearSgdTrainer, Objective, OptimizerConfig};
use provml::persist::read_model;
use provml::provenance::ConfigDocument;
use provml::trees::{CartTrainer, TreeConfig};
use provml::{Task, Trainer};
use tempfile::TempDir;

fn provml(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_provml"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        let f = Fixture {
            dir: TempDir::new().unwrap(),
        };
        let mut rows = String::from("x,y,shade,label\n");
        for i in 0..40 {
            let x = i as f64 / 4.0;
            let y = (i % 7) as f64;
            let shade = if i % 3 == 0 { "dark" } else { "light" };
            let label = if x + 0.3 * y > 5.0 { "hi" } else { "lo" };
            rows.push_str(&format!("{x},{y},{shade},{label}\n"));
        }
        std::fs::write(f.path("train.csv"), rows).unwrap();
        std::fs::write(
            f.path("test.csv"),
            "x,y,shade,label\n9.5,1,dark,hi\n0.5,2,light,lo\n,,mauve,lo\n",
        )
        .unwrap();
        let fields = vec![
            FieldProcessor {
                column: "x".into(),
                kind: ColumnKind::Numeric,
            },
            FieldProcessor {
                column: "y".into(),
                kind: ColumnKind::Numeric,
            },
            FieldProcessor {
                column: "shade".into(),
                kind: ColumnKind::Categorical,
            },
        ];
        let schema = ColumnarSchema::new("label", Task::Categorical, fields.clone()).unwrap();
        std::fs::write(f.path("schema.json"), schema.to_document().to_json_string()).unwrap();
        let real = ColumnarSchema::new("x", Task::Real, fields[1..].to_vec()).unwrap();
        std::fs::write(
            f.path("real-schema.json"),
            real.to_document().to_json_string(),
        )
        .unwrap();
        let lin = LinearSgdTrainer::new(
            Objective::Logistic,
            OptimizerConfig::AdaGrad { lr: 0.5, eps: 1e-8 },
            5,
            4,
            11,
        )
        .unwrap();
        std::fs::write(f.path("linear.json"), doc_of(&lin)).unwrap();
        let cart = CartTrainer::new(TreeConfig::new(3), Task::Categorical).unwrap();
        std::fs::write(f.path("cart.json"), doc_of(&cart)).unwrap();
        std::fs::write(
            f.path("zscore.json"),
            TransformSpec::global(TransformKind::ZScore)
                .to_document()
                .to_json_string(),
        )
        .unwrap();
        f
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn arg(&self, name: &str) -> String {
        self.path(name).to_string_lossy().into_owned()
    }

    fn train(&self, trainer: &str, out: &str, transform: Option<&str>) -> Output {
        let mut args = vec![
            "train".to_string(),
            "--data".into(),
            self.arg("train.csv"),
            "--schema".into(),
            self.arg("schema.json"),
            "--trainer".into(),
            self.arg(trainer),
            "--output".into(),
            self.arg(out),
        ];
        if let Some(t) = transform {
            args.extend(["--transform".into(), self.arg(t)]);
        }
        provml(&args.iter().map(String::as_str).collect::<Vec<_>>())
    }
}

fn doc_of(t: &dyn Trainer) -> String {
    ConfigDocument::from_provenance(&t.provenance().to_value()).to_json_string()
}

fn ok(o: &Output) {
    assert_eq!(code(o), 0, "stderr: {}", String::from_utf8_lossy(&o.stderr));
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&provml(&["--help"])), 0);
    assert_eq!(code(&provml(&["--version"])), 0);
    assert_eq!(code(&provml(&[])), 1);
    assert_eq!(code(&provml(&["frobnicate"])), 1);
    assert_eq!(code(&provml(&["train", "--data", "x.csv"])), 1);
}

#[test]
fn train_then_reproduce_is_hash_equal_and_diff_is_clean() {
    let f = Fixture::new();
    let out = f.train("linear.json", "m.pvml", Some("zscore.json"));
    ok(&out);
    let printed = String::from_utf8(out.stdout).unwrap();
    let model = read_model(f.path("m.pvml")).unwrap();
    assert_eq!(printed.trim(), model.provenance().hash());
    assert_eq!(model.provenance().data().transformations().len(), 1);

    ok(&provml(&[
        "reproduce",
        "--model",
        &f.arg("m.pvml"),
        "--output",
        &f.arg("m2.pvml"),
    ]));
    let again = read_model(f.path("m2.pvml")).unwrap();
    assert_eq!(again.provenance().hash(), model.provenance().hash());
    assert_eq!(again.params(), model.params());

    let diff = provml(&[
        "diff",
        "--left",
        &f.arg("m.pvml"),
        "--right",
        &f.arg("m2.pvml"),
    ]);
    ok(&diff);
    let text = String::from_utf8(diff.stdout).unwrap();
    assert!(text.lines().all(|l| l.starts_with("volatile\t")), "{text}");
}

#[test]
fn diff_of_different_trainers_exits_4() {
    let f = Fixture::new();
    ok(&f.train("linear.json", "a.pvml", None));
    ok(&f.train("cart.json", "b.pvml", None));
    let diff = provml(&[
        "diff",
        "--left",
        &f.arg("a.pvml"),
        "--right",
        &f.arg("b.pvml"),
    ]);
    assert_eq!(code(&diff), 4);
    assert!(String::from_utf8(diff.stdout)
        .unwrap()
        .contains("changed\t"));
}

#[test]
fn reproduce_detects_changed_data() {
    let f = Fixture::new();
    ok(&f.train("cart.json", "m.pvml", None));
    std::fs::write(f.path("train.csv"), "x,y,shade,label\n1,1,dark,lo\n").unwrap();
    let out = provml(&[
        "reproduce",
        "--model",
        &f.arg("m.pvml"),
        "--output",
        &f.arg("m2.pvml"),
    ]);
    assert_eq!(code(&out), 4);
    assert!(!out.stderr.is_empty());
    assert!(!f.path("m2.pvml").exists());
}

#[test]
fn predict_writes_rows_with_scores_and_warnings() {
    let f = Fixture::new();
    ok(&f.train("linear.json", "m.pvml", Some("zscore.json")));
    let args = [
        "predict",
        "--model",
        &f.arg("m.pvml"),
        "--data",
        &f.arg("test.csv"),
        "--schema",
        &f.arg("schema.json"),
    ];
    // The third test row only has an unseen category, so prediction fails.
    let out = provml(&[&args[..], &["--out", &f.arg("p.csv")]].concat());
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));

    std::fs::write(
        f.path("test.csv"),
        "x,y,shade,label\n9.5,1,dark,hi\n0.5,2,light,lo\n50,2,mauve,\n",
    )
    .unwrap();
    ok(&provml(&[&args[..], &["--out", &f.arg("p.csv")]].concat()));
    let mut reader = csv::Reader::from_path(f.path("p.csv")).unwrap();
    let header: Vec<String> = reader
        .headers()
        .unwrap()
        .iter()
        .map(str::to_string)
        .collect();
    assert_eq!(
        header,
        [
            "row",
            "prediction",
            "features_used",
            "features_total",
            "warnings",
            "score:hi",
            "score:lo"
        ]
    );
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(&rows[0][1], "hi");
    assert_eq!(&rows[1][1], "lo");
    assert_eq!((&rows[2][2], &rows[2][3]), ("2", "3"));
    assert_eq!(&rows[2][4], "out-of-range:x");
    for r in &rows {
        let total: f64 = r.iter().skip(5).map(|s| s.parse::<f64>().unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}

#[test]
fn evaluate_writes_report_and_rejects_wrong_task() {
    let f = Fixture::new();
    ok(&f.train("cart.json", "m.pvml", None));
    ok(&provml(&[
        "evaluate",
        "--model",
        &f.arg("m.pvml"),
        "--data",
        &f.arg("train.csv"),
        "--schema",
        &f.arg("schema.json"),
        "--report",
        &f.arg("r.json"),
    ]));
    let report: serde_json::Value = serde_json::from_str(&read(&f.path("r.json"))).unwrap();
    assert!(report["metrics"]["accuracy"].is_number());
    assert!(report["confusion"].is_object());
    assert!(report["provenance"].is_object());

    let wrong = provml(&[
        "evaluate",
        "--model",
        &f.arg("m.pvml"),
        "--data",
        &f.arg("train.csv"),
        "--schema",
        &f.arg("real-schema.json"),
        "--report",
        &f.arg("r2.json"),
    ]);
    assert_eq!(code(&wrong), 3);
}

#[test]
fn data_errors_exit_2() {
    let f = Fixture::new();
    std::fs::write(f.path("bad.csv"), "x,y,label\n1,2,lo\n").unwrap();
    let out = provml(&[
        "train",
        "--data",
        &f.arg("bad.csv"),
        "--schema",
        &f.arg("schema.json"),
        "--trainer",
        &f.arg("cart.json"),
        "--output",
        &f.arg("m.pvml"),
    ]);
    assert_eq!(code(&out), 2);
    let out = provml(&["inspect", "--model", &f.arg("nope.pvml")]);
    assert_eq!(code(&out), 2);
}

#[test]
fn inspect_prints_provenance_and_redacted_digest() {
    let f = Fixture::new();
    ok(&f.train("cart.json", "m.pvml", None));
    let plain = provml(&["inspect", "--model", &f.arg("m.pvml")]);
    ok(&plain);
    let tree =
        provml::provenance::parse_provenance(&String::from_utf8(plain.stdout).unwrap()).unwrap();
    let model = read_model(f.path("m.pvml")).unwrap();
    assert_eq!(tree, model.provenance().to_value());

    let red = provml(&["inspect", "--model", &f.arg("m.pvml"), "--redact"]);
    ok(&red);
    let v: serde_json::Value = serde_json::from_slice(&red.stdout).unwrap();
    let (digest, _) = provml::provenance::redact(model.provenance());
    assert_eq!(v["digest"], digest.as_str());
    assert!(!String::from_utf8_lossy(&red.stdout).contains(&f.arg("train.csv")));
}

#[test]
fn extracted_config_retrains_the_same_model() {
    let f = Fixture::new();
    ok(&f.train("cart.json", "m.pvml", Some("zscore.json")));
    ok(&provml(&[
        "extract-config",
        "--model",
        &f.arg("m.pvml"),
        "--out",
        &f.arg("cfg.json"),
    ]));
    let cfg = f.arg("cfg.json");
    ok(&provml(&[
        "train",
        "--data",
        &f.arg("train.csv"),
        "--schema",
        &cfg,
        "--trainer",
        &cfg,
        "--transform",
        &cfg,
        "--output",
        &f.arg("again.pvml"),
    ]));
    let a = read_model(f.path("m.pvml")).unwrap();
    let b = read_model(f.path("again.pvml")).unwrap();
    assert_eq!(a.params(), b.params());
    assert_eq!(a.provenance().hash(), b.provenance().hash());
}

#[test]
fn repeated_runs_are_deterministic() {
    let f = Fixture::new();
    ok(&f.train("linear.json", "a.pvml", None));
    ok(&f.train("linear.json", "b.pvml", None));
    let a = read_model(f.path("a.pvml")).unwrap();
    let b = read_model(f.path("b.pvml")).unwrap();
    assert_eq!(a.params(), b.params());
    assert_eq!(a.provenance().hash(), b.provenance().hash());
    for name in ["p1.csv", "p2.csv"] {
        ok(&provml(&[
            "predict",
            "--model",
            &f.arg("a.pvml"),
            "--data",
            &f.arg("train.csv"),
            "--schema",
            &f.arg("schema.json"),
            "--out",
            &f.arg(name),
        ]));
    }
    assert_eq!(read(&f.path("p1.csv")), read(&f.path("p2.csv")));
}
