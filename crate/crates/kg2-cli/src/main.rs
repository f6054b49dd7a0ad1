//! Command-line front-end for the kg2 decision procedures.
//!
//! Verdicts are emitted to stdout as a single machine-readable JSON document
//! (or DOT text with `--format dot` for model-bearing outputs); a
//! human-readable summary goes to stderr. Exit codes: 0 verdict computed,
//! 2 parse or usage error, 3 resource limit exceeded, 4 malformed input
//! file, 5 internal self-check failure.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use kg2::frames;
use kg2::labelled::{labelled_solve, LabelledOutcome};
use kg2::model::{Frame, FrameDoc, Model, ModelDoc, Side, Sign};
use kg2::oracle::{oracle_sat, oracle_valid, OracleBudget, OracleSatOutcome, OracleValidOutcome};
use kg2::reductions::{
    nabla_transform, sat_falsif_reduce, triangle_transform, ReduceMode,
};
use kg2::tableau::{
    check_sat_traced, prove_valid_traced, EngineError, Limits, ProveOutcome, SatOutcome,
};
use kg2::{eval, parse, Formula};

#[derive(Parser)]
#[command(name = "kg2", version, about = "Decision procedures for the paraconsistent bi-relational Gödel modal logic KG2±", max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct LimitArgs {
    /// Maximum number of tableau states (worlds) per branch.
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    max_states: u64,
    /// Maximum number of constraints (or labelled guesses) per branch.
    #[arg(long, default_value_t = 200_000, value_parser = clap::value_parser!(u64).range(1..))]
    max_constraints: u64,
    /// Time budget in seconds.
    #[arg(long, default_value_t = 60, value_parser = clap::value_parser!(u64).range(1..))]
    timeout: u64,
}

impl LimitArgs {
    fn limits(&self) -> Limits {
        Limits {
            max_states: self.max_states as usize,
            max_constraints: self.max_constraints as usize,
            time_budget: Duration::from_secs(self.timeout),
        }
    }
}

#[derive(Args, Clone)]
struct OutputArgs {
    /// Output format for model documents.
    #[arg(long, default_value = "json", value_parser = ["json", "dot"])]
    format: String,
    /// Print one line per tableau rule application to stderr.
    #[arg(long)]
    trace: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Decide validity; on failure emit an extracted countermodel.
    Prove {
        formula: String,
        #[command(flatten)]
        limits: LimitArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Decide satisfiability in the designated-value sense.
    Sat {
        formula: String,
        #[command(flatten)]
        limits: LimitArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Evaluate a formula on a model at a world.
    Eval {
        formula: String,
        #[arg(long)]
        model: String,
        #[arg(long)]
        world: String,
    },
    /// Brute-force grid oracles.
    Oracle {
        #[command(subcommand)]
        which: OracleCommand,
    },
    /// Labelled-value grid satisfiability.
    Labelled {
        formula: String,
        #[arg(long)]
        denominator: u64,
        #[command(flatten)]
        limits: LimitArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Formula-to-formula reductions.
    Transform {
        /// One of: nabla, triangle, sat2fal, fal2sat.
        #[arg(value_parser = ["nabla", "triangle", "sat2fal", "fal2sat"])]
        which: String,
        formula: String,
    },
    /// Frame property reports and definability countermodels.
    Frame {
        #[command(subcommand)]
        which: FrameCommand,
    },
    /// Model constructions.
    Model {
        #[command(subcommand)]
        which: ModelCommand,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Exhaustive countermodel search for validity over a value grid.
    Valid {
        formula: String,
        #[arg(long)]
        max_worlds: usize,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        denominator: u64,
        /// Enumeration cap (number of candidate models).
        #[arg(long, default_value_t = 50_000_000)]
        budget: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Exhaustive search for a designated-value model.
    Sat {
        formula: String,
        #[arg(long)]
        max_worlds: usize,
        #[arg(long)]
        denominator: u64,
        #[arg(long, default_value_t = 50_000_000)]
        budget: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Subcommand)]
enum FrameCommand {
    /// Report crispness, mono-relationality, and finite branching.
    Check {
        #[arg(long)]
        frame: String,
    },
    /// Build a defining-formula countermodel on a non-conforming frame.
    Countermodel {
        /// One of: crisp+, crisp-, mono.
        #[arg(value_parser = ["crisp+", "crisp-", "mono"])]
        property: String,
        #[arg(long)]
        frame: String,
        /// Edge to use, as `from,to`; defaults to the first qualifying edge.
        #[arg(long)]
        edge: Option<String>,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Subcommand)]
enum ModelCommand {
    /// Split a model so no world is shared between the two relations.
    Split {
        #[arg(long)]
        model: String,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Star-conflation of a crisp model.
    Star {
        #[arg(long)]
        model: String,
        #[command(flatten)]
        output: OutputArgs,
    },
}

enum AppError {
    Usage(String),
    Limit(String),
    BadInput(String),
    Internal(String),
}

impl AppError {
    fn code(&self) -> u8 {
        match self {
            AppError::Usage(_) => 2,
            AppError::Limit(_) => 3,
            AppError::BadInput(_) => 4,
            AppError::Internal(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            AppError::Usage(m)
            | AppError::Limit(m)
            | AppError::BadInput(m)
            | AppError::Internal(m) => m,
        }
    }
}

impl From<EngineError> for AppError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::LimitExceeded { .. } => AppError::Limit(e.to_string()),
            EngineError::Internal(_) => AppError::Internal(e.to_string()),
        }
    }
}

fn parse_formula(text: &str) -> Result<Formula, AppError> {
    parse(text).map_err(|e| AppError::Usage(e.to_string()))
}

fn load_model(path: &str) -> Result<Model, AppError> {
    let text = fs::read_to_string(path)
        .map_err(|e| AppError::BadInput(format!("cannot read {path}: {e}")))?;
    let doc = ModelDoc::from_json(&text).map_err(|e| AppError::BadInput(e.to_string()))?;
    Model::from_doc(&doc).map_err(|e| AppError::BadInput(e.to_string()))
}

fn load_frame(path: &str) -> Result<Frame, AppError> {
    let text = fs::read_to_string(path)
        .map_err(|e| AppError::BadInput(format!("cannot read {path}: {e}")))?;
    let doc = FrameDoc::from_json(&text).map_err(|e| AppError::BadInput(e.to_string()))?;
    Frame::from_doc(&doc).map_err(|e| AppError::BadInput(e.to_string()))
}

/// DOT rendering: worlds with atom value annotations, edges labelled `+:v`
/// and `-:v`.
fn model_dot(m: &Model) -> String {
    let mut out = String::from("digraph model {\n  rankdir=LR;\n");
    let atoms = m.atoms();
    for (w, label) in m.worlds().iter().enumerate() {
        let mut text = label.clone();
        for atom in &atoms {
            let _ = write!(
                text,
                "\\n{atom}=({}, {})",
                m.val(Side::One, atom, w),
                m.val(Side::Two, atom, w)
            );
        }
        let _ = writeln!(out, "  \"{label}\" [label=\"{text}\"];");
    }
    for sign in [Sign::Plus, Sign::Minus] {
        for (a, b, v) in m.frame().edges(sign) {
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [label=\"{}:{}\"];",
                m.worlds()[a],
                m.worlds()[b],
                sign.symbol(),
                v
            );
        }
    }
    out.push_str("}\n");
    out
}

fn emit_model_or_json(
    output: &OutputArgs,
    json_doc: serde_json::Value,
    model: Option<&Model>,
) -> String {
    match (output.format.as_str(), model) {
        ("dot", Some(m)) => model_dot(m),
        _ => json_doc.to_string(),
    }
}

fn run(cli: Cli) -> Result<(String, String), AppError> {
    match cli.command {
        Command::Prove { formula, limits, output } => {
            let f = parse_formula(&formula)?;
            let mut trace = Vec::new();
            let sink = output.trace.then_some(&mut trace);
            let verdict = prove_valid_traced(&f, &limits.limits(), sink)?;
            let (doc, summary, model) = match &verdict {
                ProveOutcome::Valid => (json!({"verdict": "valid"}), "valid".to_string(), None),
                ProveOutcome::Invalid { model, world, side } => {
                    let mut doc = serde_json::to_value(model.to_doc()).unwrap();
                    doc["world"] = json!(world);
                    doc["side"] = json!(side.number());
                    (
                        json!({"verdict": "invalid", "countermodel": doc}),
                        format!(
                            "invalid: side {} fails at {world} in a {}-world countermodel",
                            side.number(),
                            model.worlds().len()
                        ),
                        Some(model.clone()),
                    )
                }
            };
            let mut err = trace.join("\n");
            if !err.is_empty() {
                err.push('\n');
            }
            err.push_str(&summary);
            Ok((emit_model_or_json(&output, doc, model.as_ref()), err))
        }
        Command::Sat { formula, limits, output } => {
            let f = parse_formula(&formula)?;
            let mut trace = Vec::new();
            let sink = output.trace.then_some(&mut trace);
            let verdict = check_sat_traced(&f, &limits.limits(), sink)?;
            let (doc, summary, model) = match &verdict {
                SatOutcome::Unsat => (json!({"verdict": "unsat"}), "unsat".to_string(), None),
                SatOutcome::Sat { model, world } => (
                    json!({
                        "verdict": "sat",
                        "world": world,
                        "model": serde_json::to_value(model.to_doc()).unwrap(),
                    }),
                    format!("sat at {world}"),
                    Some(model.clone()),
                ),
            };
            let mut err = trace.join("\n");
            if !err.is_empty() {
                err.push('\n');
            }
            err.push_str(&summary);
            Ok((emit_model_or_json(&output, doc, model.as_ref()), err))
        }
        Command::Eval { formula, model, world } => {
            let f = parse_formula(&formula)?;
            let m = load_model(&model)?;
            let v = eval(&m, &world, &f).map_err(|e| AppError::BadInput(e.to_string()))?;
            Ok((
                json!({"pos": v.pos.to_string(), "neg": v.neg.to_string()}).to_string(),
                v.to_string(),
            ))
        }
        Command::Oracle { which } => match which {
            OracleCommand::Valid { formula, max_worlds, denominator, budget, output } => {
                let f = parse_formula(&formula)?;
                let budget = OracleBudget { max_models: budget };
                let outcome = oracle_valid(&f, max_worlds, denominator, &budget)
                    .map_err(|e| AppError::Limit(e.to_string()))?;
                let (doc, summary, model) = match &outcome {
                    OracleValidOutcome::Confirmed => (
                        json!({"verdict": "confirmed"}),
                        "confirmed: no countermodel in the searched class".to_string(),
                        None,
                    ),
                    OracleValidOutcome::Countermodel { model, world } => (
                        json!({
                            "verdict": "countermodel",
                            "world": world,
                            "model": serde_json::to_value(model.to_doc()).unwrap(),
                        }),
                        format!("countermodel at {world}"),
                        Some(model.clone()),
                    ),
                };
                Ok((emit_model_or_json(&output, doc, model.as_ref()), summary))
            }
            OracleCommand::Sat { formula, max_worlds, denominator, budget, output } => {
                let f = parse_formula(&formula)?;
                let budget = OracleBudget { max_models: budget };
                let outcome = oracle_sat(&f, max_worlds, denominator, &budget)
                    .map_err(|e| AppError::Limit(e.to_string()))?;
                let (doc, summary, model) = match &outcome {
                    OracleSatOutcome::NotFound => (
                        json!({"verdict": "not-found"}),
                        "no designated-value model in the searched class".to_string(),
                        None,
                    ),
                    OracleSatOutcome::Sat { model, world } => (
                        json!({
                            "verdict": "sat",
                            "world": world,
                            "model": serde_json::to_value(model.to_doc()).unwrap(),
                        }),
                        format!("sat at {world}"),
                        Some(model.clone()),
                    ),
                };
                Ok((emit_model_or_json(&output, doc, model.as_ref()), summary))
            }
        },
        Command::Labelled { formula, denominator, limits, output } => {
            let f = parse_formula(&formula)?;
            if denominator == 0 {
                return Err(AppError::Usage("denominator must be positive".into()));
            }
            let outcome = labelled_solve(&f, denominator, &limits.limits())?;
            let stats = outcome.stats();
            let (doc, summary, model) = match &outcome {
                LabelledOutcome::NoModelInGrid { .. } => (
                    json!({
                        "verdict": "no-model-in-grid",
                        "max_live_entries": stats.max_live_entries,
                    }),
                    "no model in the grid".to_string(),
                    None,
                ),
                LabelledOutcome::SatInGrid { model, .. } => (
                    json!({
                        "verdict": "sat-in-grid",
                        "model": serde_json::to_value(model.to_doc()).unwrap(),
                        "max_live_entries": stats.max_live_entries,
                    }),
                    format!("sat in grid 1/{denominator}"),
                    Some(model.clone()),
                ),
            };
            Ok((emit_model_or_json(&output, doc, model.as_ref()), summary))
        }
        Command::Transform { which, formula } => {
            let f = parse_formula(&formula)?;
            let result = match which.as_str() {
                "nabla" => nabla_transform(&f).map_err(|e| AppError::Usage(e.to_string()))?,
                "triangle" => triangle_transform(&f).map_err(|e| AppError::Usage(e.to_string()))?,
                "sat2fal" => sat_falsif_reduce(&f, ReduceMode::SatToFalsif),
                "fal2sat" => sat_falsif_reduce(&f, ReduceMode::FalsifToSat),
                _ => unreachable!("value_parser restricts"),
            };
            let text = result.to_string();
            Ok((json!({"formula": text}).to_string(), text))
        }
        Command::Frame { which } => match which {
            FrameCommand::Check { frame } => {
                let f = load_frame(&frame)?;
                let r = frames::frame_report(&f);
                let witness = |w: &Option<(String, String, kg2::Value)>| {
                    w.as_ref().map(|(a, b, v)| json!([a, b, v.to_string()]))
                };
                let doc = json!({
                    "crisp_plus": r.crisp_plus,
                    "crisp_minus": r.crisp_minus,
                    "mono_relational": r.mono_relational,
                    "finitely_branching": r.finitely_branching,
                    "crisp_plus_witness": witness(&r.crisp_plus_witness),
                    "crisp_minus_witness": witness(&r.crisp_minus_witness),
                    "mono_witness": r.mono_witness.as_ref().map(|(a, b, p, m)| {
                        json!([a, b, p.to_string(), m.to_string()])
                    }),
                });
                let summary = format!(
                    "crisp+: {}, crisp-: {}, mono: {}, finitely branching: {}",
                    r.crisp_plus, r.crisp_minus, r.mono_relational, r.finitely_branching
                );
                Ok((doc.to_string(), summary))
            }
            FrameCommand::Countermodel { property, frame, edge, output } => {
                let f = load_frame(&frame)?;
                let report = frames::frame_report(&f);
                let parse_edge = |e: &str| -> Result<(String, String), AppError> {
                    e.split_once(',')
                        .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
                        .ok_or_else(|| AppError::Usage("--edge expects `from,to`".into()))
                };
                let (doc, summary, model) = match property.as_str() {
                    "crisp+" | "crisp-" => {
                        let sign = if property == "crisp+" { Sign::Plus } else { Sign::Minus };
                        let chosen = match edge {
                            Some(e) => parse_edge(&e)?,
                            None => {
                                let w = if sign == Sign::Plus {
                                    &report.crisp_plus_witness
                                } else {
                                    &report.crisp_minus_witness
                                };
                                let (a, b, _) = w.clone().ok_or_else(|| {
                                    AppError::Usage(format!(
                                        "frame has no fractional R{} edge",
                                        sign.symbol()
                                    ))
                                })?;
                                (a, b)
                            }
                        };
                        let (model, world, formula) = frames::crispness_countermodel(
                            &f,
                            sign,
                            (&chosen.0, &chosen.1),
                        )
                        .map_err(|e| AppError::Usage(e.to_string()))?;
                        (
                            json!({
                                "model": serde_json::to_value(model.to_doc()).unwrap(),
                                "world": world,
                                "formula": formula.to_string(),
                            }),
                            format!("violates {formula} at {world}"),
                            model,
                        )
                    }
                    "mono" => {
                        let chosen = match edge {
                            Some(e) => parse_edge(&e)?,
                            None => {
                                let (a, b, _, _) = report.mono_witness.clone().ok_or_else(|| {
                                    AppError::Usage("frame is mono-relational".into())
                                })?;
                                (a, b)
                            }
                        };
                        let (model, world) =
                            frames::mono_countermodel(&f, (&chosen.0, &chosen.1))
                                .map_err(|e| AppError::Usage(e.to_string()))?;
                        let formula = frames::mono_formula();
                        (
                            json!({
                                "model": serde_json::to_value(model.to_doc()).unwrap(),
                                "world": world,
                                "formula": formula.to_string(),
                            }),
                            format!("violates {formula} at {world}"),
                            model,
                        )
                    }
                    _ => unreachable!("value_parser restricts"),
                };
                Ok((emit_model_or_json(&output, doc, Some(&model)), summary))
            }
        },
        Command::Model { which } => match which {
            ModelCommand::Split { model, output } => {
                let m = load_model(&model)?;
                let s = frames::split(&m);
                let classes: BTreeMap<String, Vec<String>> = m
                    .worlds()
                    .iter()
                    .enumerate()
                    .map(|(i, w)| {
                        (
                            w.clone(),
                            s.classes[i]
                                .iter()
                                .map(|&j| s.model.worlds()[j].clone())
                                .collect(),
                        )
                    })
                    .collect();
                let doc = json!({
                    "model": serde_json::to_value(s.model.to_doc()).unwrap(),
                    "classes": classes,
                });
                let summary = format!(
                    "split into {} descriptor worlds",
                    s.model.worlds().len()
                );
                Ok((emit_model_or_json(&output, doc, Some(&s.model)), summary))
            }
            ModelCommand::Star { model, output } => {
                let m = load_model(&model)?;
                let s = frames::star(&m).map_err(|e| AppError::Usage(e.to_string()))?;
                let doc = json!({"model": serde_json::to_value(s.to_doc()).unwrap()});
                Ok((
                    emit_model_or_json(&output, doc, Some(&s)),
                    "star-conflated".to_string(),
                ))
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((stdout, stderr)) => {
            println!("{stdout}");
            if !stderr.is_empty() {
                eprintln!("{stderr}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
