//! The `iglc` command line: proving, transforming, model checking, frame
//! reports, Solovay truth sets and corpus runs.
//!
//! Exit codes: 0 valid, 1 invalid, 2 parse or usage error, 3 budget
//! exceeded, 4 bad model file.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use iglc_core::formula::{parse, Formula};
use iglc_core::ha::{in_ha_fast_sigma1_logic, in_ha_sigma1_logic, in_selfcompletion_fast_logic};
use iglc_core::iglc::{decide_iglc, Verdict};
use iglc_core::ipc::{decide_ipc, IpcVerdict};
use iglc_core::kripke::{check_frame, KripkeModel, ModelFile, WorldId};
use iglc_core::nnil::nnil_star;
use iglc_core::solovay::extend_model;
use iglc_core::tnnil::tnnil_plus;
use iglc_core::Budget;

pub const EXIT_VALID: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_MODEL: i32 = 4;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Parser, Debug)]
#[command(
    name = "iglc",
    version,
    about = "Decision procedures for iGLC and related logics"
)]
struct Cli {
    /// Machine-readable output
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide a formula in one of the supported logics
    Prove {
        #[arg(long, value_enum)]
        logic: Logic,
        formula: String,
        #[arg(long, default_value_t = Budget::DEFAULT_STEPS)]
        budget: u64,
        /// Write the countermodel here when the formula is refuted
        #[arg(long)]
        countermodel: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ModelFormat::Json)]
        format: ModelFormat,
    },
    /// Apply the NNIL or TNNIL transformation
    Transform {
        #[arg(long, value_enum)]
        op: Op,
        formula: String,
    },
    Model {
        #[command(subcommand)]
        command: ModelCommand,
    },
    Frame {
        #[command(subcommand)]
        command: FrameCommand,
    },
    Solovay {
        #[command(subcommand)]
        command: SolovayCommand,
    },
    Corpus {
        #[command(subcommand)]
        command: CorpusCommand,
    },
}

#[derive(Subcommand, Debug)]
enum ModelCommand {
    /// Evaluate a formula at every world of a model file
    Check { path: PathBuf, formula: String },
}

#[derive(Subcommand, Debug)]
enum FrameCommand {
    /// Frame properties of a model file
    Report { path: PathBuf },
}

#[derive(Subcommand, Debug)]
enum SolovayCommand {
    /// Truth set of a formula in the extended model
    Truthset { path: PathBuf, formula: String },
}

#[derive(Subcommand, Debug)]
enum CorpusCommand {
    /// Check every entry of a tab-separated corpus file
    Run {
        path: PathBuf,
        #[arg(long, default_value_t = Budget::DEFAULT_STEPS)]
        budget: u64,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Logic {
    Ipc,
    Iglc,
    HaSigma1,
    HaFastSigma1,
    UstarFast,
}

impl Logic {
    fn name(self) -> &'static str {
        match self {
            Logic::Ipc => "ipc",
            Logic::Iglc => "iglc",
            Logic::HaSigma1 => "ha-sigma1",
            Logic::HaFastSigma1 => "ha-fast-sigma1",
            Logic::UstarFast => "ustar-fast",
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ModelFormat {
    Json,
    Dot,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Op {
    Nnil,
    Tnnil,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Model(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Model(_) => EXIT_MODEL,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Model(m) => m,
        }
    }
}

fn formula(text: &str) -> Result<Formula, Failure> {
    parse(text).map_err(|e| Failure::Usage(e.to_string()))
}

fn load_model_file(path: &Path) -> Result<ModelFile, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Model(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::Model(format!("malformed model file {}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<KripkeModel, Failure> {
    load_model_file(path)?
        .into_model()
        .map_err(|e| Failure::Model(format!("{}: {e}", path.display())))
}

/// Outcome of one `prove` query.
pub struct Proof {
    pub label: &'static str,
    pub code: i32,
    /// The formula the countermodel refutes; differs from the input for the
    /// HA logics, which decide the transformed formula.
    pub refuted: Formula,
    pub countermodel: Option<(KripkeModel, WorldId)>,
}

/// Decides `a` in `logic`. Errors are usage errors (boxes in IPC input,
/// alphabet limits of the transformation).
pub fn prove(logic: Logic, a: &Formula, budget: u64) -> Result<Proof, String> {
    let (verdict, refuted) = match logic {
        Logic::Ipc => {
            let v = decide_ipc(&[], a).map_err(|e| e.to_string())?;
            let v = match v {
                IpcVerdict::Valid => Verdict::Valid { witness: None },
                IpcVerdict::Invalid {
                    countermodel,
                    world,
                } => Verdict::Invalid {
                    countermodel,
                    root: world,
                },
            };
            (v, a.clone())
        }
        Logic::Iglc => (decide_iglc(a, budget), a.clone()),
        Logic::UstarFast => (in_selfcompletion_fast_logic(a, budget), a.clone()),
        Logic::HaSigma1 | Logic::HaFastSigma1 => {
            let plus = tnnil_plus(a).map_err(|e| e.to_string())?;
            let v = if logic == Logic::HaSigma1 {
                in_ha_sigma1_logic(a, budget)
            } else {
                in_ha_fast_sigma1_logic(a, budget)
            }
            .map_err(|e| e.to_string())?;
            (v, plus)
        }
    };
    let code = match verdict {
        Verdict::Valid { .. } => EXIT_VALID,
        Verdict::Invalid { .. } => EXIT_INVALID,
        Verdict::BudgetExceeded => EXIT_BUDGET,
    };
    Ok(Proof {
        label: verdict.label(),
        code,
        refuted,
        countermodel: verdict.countermodel().map(|(m, r)| (m.clone(), r)),
    })
}

/// Runs the command line `argv` (program name first) and captures what
/// would be printed.
pub fn run<S: AsRef<str>>(argv: &[S]) -> Output {
    let args: Vec<&str> = argv.iter().map(|s| s.as_ref()).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_VALID
            };
            let text = e.render().to_string();
            return if e.use_stderr() {
                Output {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Output {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };
    let json = cli.json;
    match dispatch(cli) {
        Ok((code, stdout)) => Output {
            code,
            stdout,
            stderr: String::new(),
        },
        Err(f) => {
            let stdout = if json {
                format!("{}\n", json!({ "error": f.message(), "exit": f.code() }))
            } else {
                String::new()
            };
            Output {
                code: f.code(),
                stdout,
                stderr: format!("error: {}\n", f.message()),
            }
        }
    }
}

fn model_value(m: &KripkeModel) -> Value {
    serde_json::from_str(&m.to_json()).expect("model JSON round-trips")
}

fn dispatch(cli: Cli) -> Result<(i32, String), Failure> {
    let json = cli.json;
    match cli.command {
        Command::Prove {
            logic,
            formula: text,
            budget,
            countermodel,
            format,
        } => {
            let a = formula(&text)?;
            let proof = prove(logic, &a, budget).map_err(Failure::Usage)?;
            if let (Some(path), Some((m, root))) = (&countermodel, &proof.countermodel) {
                let body = match format {
                    ModelFormat::Json => m.to_json() + "\n",
                    ModelFormat::Dot => m.to_dot(Some(*root)),
                };
                fs::write(path, body)
                    .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
            }
            let out = if json {
                let cm = proof.countermodel.as_ref();
                json!({
                    "logic": logic.name(),
                    "formula": a.render(),
                    "verdict": proof.label,
                    "refuted": cm.map(|_| proof.refuted.render()),
                    "root": cm.map(|(_, r)| *r),
                    "countermodel": cm.map(|(m, _)| model_value(m)),
                })
                .to_string()
                    + "\n"
            } else {
                let mut s = format!("{}\n", proof.label);
                if let Some((m, root)) = &proof.countermodel {
                    let n = m.frame().len();
                    let _ = writeln!(
                        s,
                        "countermodel: {n} world{}, root {root}, refutes {}",
                        if n == 1 { "" } else { "s" },
                        proof.refuted
                    );
                    if let Some(path) = &countermodel {
                        let _ = writeln!(s, "written to {}", path.display());
                    }
                }
                s
            };
            Ok((proof.code, out))
        }
        Command::Transform { op, formula: text } => {
            let a = formula(&text)?;
            let result = match op {
                Op::Nnil => nnil_star(&a),
                Op::Tnnil => tnnil_plus(&a),
            }
            .map_err(|e| Failure::Usage(e.to_string()))?;
            let out = if json {
                json!({ "input": a.render(), "output": result.render() }).to_string()
            } else {
                result.render()
            };
            Ok((EXIT_VALID, out + "\n"))
        }
        Command::Model {
            command:
                ModelCommand::Check {
                    path,
                    formula: text,
                },
        } => {
            let m = load_model(&path)?;
            let a = formula(&text)?;
            let truth = m.truth_vector(&a);
            let worlds = m.frame().worlds();
            let forced: Vec<WorldId> = worlds
                .iter()
                .zip(&truth)
                .filter(|(_, t)| **t)
                .map(|(w, _)| *w)
                .collect();
            let refuted: Vec<WorldId> = worlds
                .iter()
                .zip(&truth)
                .filter(|(_, t)| !**t)
                .map(|(w, _)| *w)
                .collect();
            let code = if refuted.is_empty() {
                EXIT_VALID
            } else {
                EXIT_INVALID
            };
            let label = if refuted.is_empty() {
                "VALID"
            } else {
                "INVALID"
            };
            let out = if json {
                json!({ "verdict": label, "forced": forced, "refuted": refuted }).to_string() + "\n"
            } else {
                format!("{label}\nforced at: {forced:?}\nrefuted at: {refuted:?}\n")
            };
            Ok((code, out))
        }
        Command::Frame {
            command: FrameCommand::Report { path },
        } => {
            let file = load_model_file(&path)?;
            let report = check_frame(&file.raw_frame());
            let out = if json {
                let mut v = serde_json::to_value(report).expect("report serializes");
                v["iglc_frame"] = json!(report.is_iglc_frame());
                v.to_string() + "\n"
            } else {
                let rows = [
                    ("poset", report.is_poset),
                    ("model property", report.has_model_property),
                    ("irreflexive", report.irreflexive),
                    ("transitive", report.transitive),
                    ("semi-transitive", report.semi_transitive),
                    ("realistic", report.realistic),
                    ("conversely well-founded", report.conversely_well_founded),
                    ("iglc frame", report.is_iglc_frame()),
                ];
                rows.iter().map(|(k, v)| format!("{k}: {v}\n")).collect()
            };
            Ok((EXIT_VALID, out))
        }
        Command::Solovay {
            command:
                SolovayCommand::Truthset {
                    path,
                    formula: text,
                },
        } => {
            let core = load_model(&path)?;
            let a = formula(&text)?;
            let m = extend_model(&core).map_err(|e| Failure::Model(e.to_string()))?;
            let set = m.truth_set(&a);
            let out = if json {
                let relabel: serde_json::Map<String, Value> = m
                    .relabelling()
                    .iter()
                    .map(|(k, v)| (k.to_string(), json!(v)))
                    .collect();
                json!({ "truth_set": set, "r": m.r(), "relabelling": relabel }).to_string()
            } else {
                set.to_string()
            };
            Ok((EXIT_VALID, out + "\n"))
        }
        Command::Corpus {
            command: CorpusCommand::Run { path, budget },
        } => run_corpus(&path, budget, json),
    }
}

struct Entry {
    line: usize,
    expected: &'static str,
    logic: Logic,
    text: String,
}

fn parse_corpus(text: &str) -> Result<Vec<Entry>, Failure> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() != 3 {
            return Err(Failure::Usage(format!(
                "line {line}: expected three tab-separated fields"
            )));
        }
        let expected = match fields[0].trim().to_ascii_uppercase().as_str() {
            "VALID" => "VALID",
            "INVALID" => "INVALID",
            "BUDGET_EXCEEDED" => "BUDGET_EXCEEDED",
            other => {
                return Err(Failure::Usage(format!(
                    "line {line}: unknown verdict '{other}'"
                )))
            }
        };
        let logic = Logic::from_str(fields[1].trim(), true).map_err(|_| {
            Failure::Usage(format!("line {line}: unknown logic '{}'", fields[1].trim()))
        })?;
        entries.push(Entry {
            line,
            expected,
            logic,
            text: fields[2].trim().to_string(),
        });
    }
    Ok(entries)
}

fn run_corpus(path: &Path, budget: u64, json: bool) -> Result<(i32, String), Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let entries = parse_corpus(&text)?;
    let results: Vec<(String, bool)> = entries
        .par_iter()
        .map(|e| {
            let got = match parse(&e.text) {
                Err(err) => format!("ERROR: {err}"),
                Ok(a) => match prove(e.logic, &a, budget) {
                    Ok(p) => p.label.to_string(),
                    Err(err) => format!("ERROR: {err}"),
                },
            };
            let ok = got == e.expected;
            (got, ok)
        })
        .collect();
    let failed = results.iter().filter(|(_, ok)| !ok).count();
    let mut out = String::new();
    if json {
        let rows: Vec<Value> = entries
            .iter()
            .zip(&results)
            .map(|(e, (got, ok))| {
                json!({
                    "line": e.line,
                    "logic": e.logic.name(),
                    "formula": e.text,
                    "expected": e.expected,
                    "got": got,
                    "ok": ok,
                })
            })
            .collect();
        out = json!({
            "entries": rows,
            "total": entries.len(),
            "passed": entries.len() - failed,
            "failed": failed,
        })
        .to_string()
            + "\n";
    } else {
        for (e, (got, ok)) in entries.iter().zip(&results) {
            let mark = if *ok { "ok" } else { "FAIL" };
            let _ = writeln!(
                out,
                "{mark}\t{}\t{}\texpected {}\tgot {}\t{}",
                e.line,
                e.logic.name(),
                e.expected,
                got,
                e.text
            );
        }
        let _ = writeln!(
            out,
            "{} entries, {} passed, {} failed",
            entries.len(),
            entries.len() - failed,
            failed
        );
    }
    let code = if failed == 0 {
        EXIT_VALID
    } else {
        EXIT_INVALID
    };
    Ok((code, out))
}
