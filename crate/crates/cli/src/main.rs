//! `provml`: train, apply, inspect and reproduce provenance-carrying models.
//!
//! Exit status: 0 success, 1 usage or configuration error, 2 data error,
//! 3 task mismatch, 4 reproduction mismatch (including a changed resource
//! and a `diff` with non-volatile differences).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use provml::data::{
    apply_transformers, fit_transformers, load_csv, recorded_transformers, ColumnarSchema,
    DataSource, TransformSpec,
};
use provml::eval::{evaluate_classification, evaluate_regression};
use provml::persist::{load_model, read_model, save_model};
use provml::provenance::{redact, serialize_provenance, value_to_json, ConfigDocument};
use provml::repro::{diff_provenance, reproduce_model, trainer_from_document};
use provml::{Dataset, Error, ErrorClass, Model, Output, Task};

#[derive(Parser)]
#[command(
    name = "provml",
    version,
    about = "Provenance-tracked model training and reproduction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model from a CSV file and save it.
    Train {
        #[arg(long)]
        data: PathBuf,
        /// Configuration document containing a ColumnarSchema record.
        #[arg(long)]
        schema: PathBuf,
        /// Configuration document; its first trainer record is used.
        #[arg(long)]
        trainer: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Configuration document of TransformerMap records, applied in order.
        #[arg(long)]
        transform: Option<PathBuf>,
    },
    /// Write one prediction per CSV row.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a model on labelled CSV data and write a JSON report.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Print a model's provenance.
    Inspect {
        #[arg(long)]
        model: PathBuf,
        /// Print the redaction digest and the redacted provenance instead.
        #[arg(long)]
        redact: bool,
    },
    /// Write the configuration records extracted from a model's provenance.
    ExtractConfig {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Retrain a model from its provenance and check the result matches.
    Reproduce {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Print the differences between two models' provenance.
    Diff {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
    },
}

enum Failure {
    Lib(Error),
    /// Completed, but the outcome maps to a non-zero status.
    Status(u8),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type CmdResult = Result<(), Failure>;

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Usage => 1,
        ErrorClass::Data => 2,
        ErrorClass::TaskMismatch => 3,
        ErrorClass::Reproduction => 4,
    }
}

fn read_text(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })
}

fn read_document(path: &Path) -> Result<ConfigDocument, Error> {
    ConfigDocument::parse(&read_text(path)?)
}

fn write_json(path: &Path, v: &serde_json::Value) -> Result<(), Error> {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

/// Loads the model checked against the schema's response type.
fn model_for_schema(model: &Path, schema: &ColumnarSchema) -> Result<Model, Error> {
    load_model(model, schema.response_type())
}

fn train(
    data: &Path,
    schema: &Path,
    trainer: &Path,
    output: &Path,
    transform: Option<&Path>,
) -> CmdResult {
    let schema = ColumnarSchema::from_document(&read_document(schema)?)?;
    let mut trainer = trainer_from_document(&read_document(trainer)?)?;
    let specs = match transform {
        Some(p) => TransformSpec::all_from_document(&read_document(p)?)?,
        None => Vec::new(),
    };
    let mut dataset = Dataset::build(&load_csv(data, &schema)?)?;
    for spec in &specs {
        dataset = apply_transformers(&dataset, &fit_transformers(&dataset, spec))?;
    }
    let model = trainer.train(&dataset)?;
    save_model(&model, output)?;
    println!("{}", model.provenance().hash());
    Ok(())
}

fn fmt_output(o: &Output) -> String {
    match o {
        Output::Categorical(l) => l.clone(),
        Output::Real(v) => v.to_string(),
        Output::Unknown => String::new(),
    }
}

fn predict(model: &Path, data: &Path, schema: &Path, out: &Path) -> CmdResult {
    let schema = ColumnarSchema::from_document(&read_document(schema)?)?;
    let model = model_for_schema(model, &schema)?;
    let transforms = recorded_transformers(&model.provenance().data())?;
    let source = load_csv(data, &schema)?;
    let labels: Vec<String> = model
        .output_domain()
        .labels()
        .into_iter()
        .map(str::to_string)
        .collect();
    let mut w = csv::Writer::from_path(out).map_err(|e| Error::Io(e.into()))?;
    let mut header = vec![
        "row".to_string(),
        "prediction".into(),
        "features_used".into(),
        "features_total".into(),
        "warnings".into(),
    ];
    header.extend(labels.iter().map(|l| format!("score:{l}")));
    let csv_err = |e: csv::Error| Error::Io(e.into());
    w.write_record(&header).map_err(csv_err)?;
    for (row, example) in source.iter().enumerate() {
        let mut example = example?;
        for t in &transforms {
            example = t.apply_example(&example)?;
        }
        let p = model.predict(&example)?;
        let mut record = vec![
            row.to_string(),
            fmt_output(&p.output),
            p.features_used.to_string(),
            p.features_total.to_string(),
            p.warnings.join(";"),
        ];
        record.extend(
            labels
                .iter()
                .map(|l| p.scores.get(l).map_or(String::new(), |s| s.to_string())),
        );
        w.write_record(&record).map_err(csv_err)?;
    }
    w.flush().map_err(Error::Io)?;
    Ok(())
}

fn evaluate(model: &Path, data: &Path, schema: &Path, report: &Path) -> CmdResult {
    let schema = ColumnarSchema::from_document(&read_document(schema)?)?;
    let model = model_for_schema(model, &schema)?;
    let mut dataset = Dataset::build(&load_csv(data, &schema)?)?;
    for t in recorded_transformers(&model.provenance().data())? {
        dataset = apply_transformers(&dataset, &t)?;
    }
    let json = match schema.response_type() {
        Task::Categorical => evaluate_classification(&model, &dataset)?.to_json(),
        Task::Real => evaluate_regression(&model, &dataset)?.to_json(),
    };
    write_json(report, &json)?;
    Ok(())
}

fn inspect(model: &Path, redacted: bool) -> CmdResult {
    let model = read_model(model)?;
    if redacted {
        let (digest, tree) = redact(model.provenance());
        let out =
            serde_json::json!({"digest": digest, "provenance": value_to_json(&tree.to_value())});
        println!(
            "{}",
            serde_json::to_string_pretty(&out).expect("JSON values always serialize")
        );
    } else {
        println!("{}", serialize_provenance(&model.provenance().to_value()));
    }
    Ok(())
}

fn extract_config(model: &Path, out: &Path) -> CmdResult {
    let model = read_model(model)?;
    write_json(
        out,
        &ConfigDocument::from_provenance(&model.provenance().to_value()).to_json(),
    )?;
    Ok(())
}

fn reproduce(model: &Path, output: &Path) -> CmdResult {
    let original = read_model(model)?;
    let again = reproduce_model(original.provenance())?;
    save_model(&again, output)?;
    println!("{}", again.provenance().hash());
    Ok(())
}

fn diff(left: &Path, right: &Path) -> CmdResult {
    let a = read_model(left)?;
    let b = read_model(right)?;
    let entries = diff_provenance(&a.provenance().to_value(), &b.provenance().to_value());
    let show = |v: &Option<provml::provenance::ProvValue>| {
        v.as_ref()
            .map_or("<absent>".to_string(), ToString::to_string)
    };
    for e in &entries {
        let tag = if e.volatile { "volatile" } else { "changed" };
        println!("{tag}\t{}\t{}\t{}", e.path, show(&e.left), show(&e.right));
    }
    if entries.iter().all(|e| e.volatile) {
        Ok(())
    } else {
        Err(Failure::Status(4))
    }
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Train {
            data,
            schema,
            trainer,
            output,
            transform,
        } => train(&data, &schema, &trainer, &output, transform.as_deref()),
        Command::Predict {
            model,
            data,
            schema,
            out,
        } => predict(&model, &data, &schema, &out),
        Command::Evaluate {
            model,
            data,
            schema,
            report,
        } => evaluate(&model, &data, &schema, &report),
        Command::Inspect { model, redact } => inspect(&model, redact),
        Command::ExtractConfig { model, out } => extract_config(&model, &out),
        Command::Reproduce { model, output } => reproduce(&model, &output),
        Command::Diff { left, right } => diff(&left, &right),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Status(code)) => ExitCode::from(code),
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
