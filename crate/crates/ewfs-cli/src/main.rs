//! Command-line surface: run protocols, print tables, classify models,
//! execute no-go derivations, emit reports.
//!
//! Exit codes: 0 when the expected verdict is reproduced, 2 on parse/input
//! errors, 3 on verdict mismatch, 4 on a numeric tolerance breach, 1 on
//! anything else.

use clap::{Args, Parser, Subcommand};
use ewfs::contextuality::classify_with_eps;
use ewfs::empirical::{model_from_bell, model_from_protocol, EmpiricalModel};
use ewfs::reasoning::{self, NogoVariant};
use ewfs::report::{
    classification_report, render_classification, render_fr_chain, render_modified_fr, render_nogo,
    render_table, table_report,
};
use ewfs::scenario::{
    chsh_bell, compile_bell_to_ewfs, compiled_deviation, fr_protocol, ghz_bell, ghz_fr_protocol,
    hardy_bell, product_bell, BellScenario, Protocol, Step,
};
use ewfs::textio::{parse_bell, parse_protocol, print_bell, print_protocol, ProtocolFile};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::PathBuf;
use std::process::ExitCode;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "ewfs",
    version,
    about = "Extended Wigner's friend protocol simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Emit the full report as JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Possibilistic zero threshold.
    #[arg(long, global = true, default_value_t = ewfs::POSSIBILISTIC_EPS)]
    eps: f64,
    /// Reserved; all computations are deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the per-context support (or probability) table of a model.
    Tables {
        /// hardy | ghz | chsh | product | path to a .bell or protocol file
        model: String,
        /// Print exact fractions instead of 0/1 possibilities.
        #[arg(long)]
        probabilities: bool,
    },
    /// Classify a model in the contextuality hierarchy.
    Classify {
        /// hardy | ghz | chsh | product | path to a .bell or protocol file
        model: String,
    },
    /// Run a no-go derivation pipeline.
    Nogo {
        /// truth | agreement | practicality
        variant: String,
        /// ghz-fr | fr | path to a protocol file
        #[arg(long, default_value = "ghz-fr")]
        protocol: String,
    },
    /// Reproduce the two-superobserver reasoning.
    Fr {
        /// original | modified
        variant: String,
        /// Post-selected first supermeasurement outcome (ok/fail or 0/1).
        #[arg(long, default_value = "ok")]
        u: String,
        /// Post-selected second supermeasurement outcome.
        #[arg(long, default_value = "ok")]
        w: String,
    },
    /// Compile a Bell scenario into a protocol and check the equivalence.
    Compile {
        /// hardy | ghz | chsh | product | path to a .bell file
        scenario: String,
        /// Write the compiled protocol here (defaults to stdout).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

enum CliError {
    Input(String),
    VerdictMismatch(String),
    Tolerance(String),
    Other(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::VerdictMismatch(_) => 3,
            CliError::Tolerance(_) => 4,
            CliError::Other(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m)
            | CliError::VerdictMismatch(m)
            | CliError::Tolerance(m)
            | CliError::Other(m) => m,
        }
    }
}

fn input_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

fn other_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Other(e.to_string())
}

/// Envelope around every payload: deterministic for identical inputs.
#[derive(Serialize)]
struct Report<T: Serialize> {
    command: String,
    inputs_digest: String,
    version: String,
    payload: T,
}

fn digest(input: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(input.as_bytes());
    hex::encode(hasher.finalize())
}

fn emit<T: Serialize>(
    common: &Common,
    command: String,
    input_echo: &str,
    payload: T,
    text: String,
) -> Result<(), CliError> {
    let report = Report {
        command,
        inputs_digest: digest(input_echo),
        version: VERSION.to_string(),
        payload,
    };
    let json = serde_json::to_string_pretty(&report).map_err(other_err)?;
    if common.json {
        println!("{json}");
    } else {
        print!("{text}");
    }
    if let Ok(dir) = std::env::var("EWFS_REPORT_DIR") {
        let name = format!(
            "{}-{}.json",
            report.command.replace(' ', "_"),
            &report.inputs_digest[..12]
        );
        let path = PathBuf::from(dir).join(name);
        std::fs::write(&path, &json)
            .map_err(|e| other_err(format!("cannot write report {}: {e}", path.display())))?;
    }
    Ok(())
}

/// A named model resolves to a Bell scenario or a protocol file with
/// declared contexts.
enum ModelSource {
    Bell(BellScenario, String),
    Protocol(ProtocolFile, String),
}

fn load_model(name: &str) -> Result<ModelSource, CliError> {
    let builtin = match name {
        "hardy" => Some(hardy_bell()),
        "ghz" => Some(ghz_bell()),
        "chsh" => Some(chsh_bell()),
        "product" => Some(product_bell()),
        _ => None,
    };
    if let Some(bell) = builtin {
        let echo = print_bell(&bell);
        return Ok(ModelSource::Bell(bell, echo));
    }
    let text = std::fs::read_to_string(name)
        .map_err(|e| input_err(format!("cannot read `{name}`: {e}")))?;
    if text.lines().any(|l| l.trim() == "bell") {
        let bell = parse_bell(&text).map_err(input_err)?;
        Ok(ModelSource::Bell(bell, text))
    } else {
        let file = parse_protocol(&text).map_err(input_err)?;
        if file.contexts.is_empty() {
            return Err(input_err(
                "protocol file declares no contexts; add `context ...` lines",
            ));
        }
        Ok(ModelSource::Protocol(file, text))
    }
}

fn model_of(source: &ModelSource) -> Result<EmpiricalModel, CliError> {
    match source {
        ModelSource::Bell(bell, _) => model_from_bell(bell).map_err(other_err),
        ModelSource::Protocol(file, _) => {
            model_from_protocol(&file.protocol, &file.contexts).map_err(other_err)
        }
    }
}

fn load_protocol(name: &str) -> Result<(Protocol, String), CliError> {
    match name {
        "ghz-fr" => {
            let p = ghz_fr_protocol();
            let echo = print_protocol(&ProtocolFile {
                protocol: p.clone(),
                contexts: vec![],
            });
            Ok((p, echo))
        }
        "fr" => {
            let p = fr_protocol();
            let echo = print_protocol(&ProtocolFile {
                protocol: p.clone(),
                contexts: vec![],
            });
            Ok((p, echo))
        }
        path => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| input_err(format!("cannot read `{path}`: {e}")))?;
            let file = parse_protocol(&text).map_err(input_err)?;
            Ok((file.protocol, text))
        }
    }
}

/// Resolve an outcome token (`ok`, `fail`, `yes`, `no`, or a digit) against a
/// supermeasurement's labels.
fn outcome_value(protocol: &Protocol, measurement: &str, token: &str) -> Result<u8, CliError> {
    if let Ok(Step::SuperMeasure { basis, .. }) = protocol.find_step(measurement) {
        for label in basis.labels() {
            if label.name == token || label.value.to_string() == token {
                return Ok(label.value);
            }
        }
    }
    token
        .parse()
        .map_err(|_| input_err(format!("unknown outcome `{token}` for {measurement}")))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Tables {
            model,
            probabilities,
        } => {
            let source = load_model(model)?;
            let em = model_of(&source)?;
            let report = table_report(&em);
            let text = render_table(&report, *probabilities);
            let echo = match &source {
                ModelSource::Bell(_, e) | ModelSource::Protocol(_, e) => e.clone(),
            };
            emit(&cli.common, format!("tables {model}"), &echo, report, text)
        }
        Command::Classify { model } => {
            let source = load_model(model)?;
            let em = model_of(&source)?;
            let class = classify_with_eps(&em, cli.common.eps).map_err(other_err)?;
            let report = classification_report(&class);
            let text = render_classification(&report);
            let echo = match &source {
                ModelSource::Bell(_, e) | ModelSource::Protocol(_, e) => e.clone(),
            };
            emit(
                &cli.common,
                format!("classify {model}"),
                &echo,
                report,
                text,
            )
        }
        Command::Nogo { variant, protocol } => {
            let variant = match variant.as_str() {
                "truth" => NogoVariant::Truth,
                "agreement" => NogoVariant::Agreement,
                "practicality" => NogoVariant::Practicality,
                other => return Err(input_err(format!("unknown no-go variant `{other}`"))),
            };
            let (p, echo) = load_protocol(protocol)?;
            let report = reasoning::run_nogo(&p, variant).map_err(other_err)?;
            let text = render_nogo(&report);
            let reproduced = report.expected_verdict_reproduced;
            emit(
                &cli.common,
                format!("nogo {variant} {protocol}"),
                &echo,
                &report,
                text,
            )?;
            if !reproduced {
                return Err(CliError::VerdictMismatch(format!(
                    "no-go variant {variant} did not reproduce its expected verdict"
                )));
            }
            Ok(())
        }
        Command::Fr { variant, u, w } => {
            let (p, echo) = load_protocol("fr")?;
            match variant.as_str() {
                "original" => {
                    let u_value = outcome_value(&p, "U", u)?;
                    let w_value = outcome_value(&p, "W", w)?;
                    let report = reasoning::fr_chain(&p, u_value, w_value).map_err(input_err)?;
                    let text = render_fr_chain(&report);
                    emit(
                        &cli.common,
                        format!("fr original u={u} w={w}"),
                        &echo,
                        &report,
                        text,
                    )
                }
                "modified" => {
                    let report = reasoning::modified_fr(&p).map_err(other_err)?;
                    if let Some(worst) = report
                        .predictions
                        .iter()
                        .map(|pr| pr.probability)
                        .fold(None::<f64>, |acc, p| Some(acc.map_or(p, |a| a.max(p))))
                    {
                        if worst >= 1e-12 {
                            return Err(CliError::Tolerance(format!(
                                "a zero-probability prediction has probability {worst:.3e}"
                            )));
                        }
                    }
                    let sat = report.verdict.is_sat();
                    let text = render_modified_fr(&report);
                    emit(&cli.common, "fr modified".to_string(), &echo, &report, text)?;
                    if sat {
                        return Err(CliError::VerdictMismatch(
                            "modified run should be inconsistent under the post-selection".into(),
                        ));
                    }
                    Ok(())
                }
                other => Err(input_err(format!("unknown fr variant `{other}`"))),
            }
        }
        Command::Compile { scenario, output } => {
            let (bell, echo) = match load_model(scenario)? {
                ModelSource::Bell(bell, echo) => (bell, echo),
                ModelSource::Protocol(..) => {
                    return Err(input_err("compile expects a Bell scenario, not a protocol"))
                }
            };
            let compiled = compile_bell_to_ewfs(&bell).map_err(input_err)?;
            let deviations = compiled_deviation(&bell, &compiled).map_err(other_err)?;
            let max_deviation = deviations.iter().map(|(_, d)| *d).fold(0.0, f64::max);
            let protocol_text = print_protocol(&ProtocolFile {
                protocol: compiled.protocol.clone(),
                contexts: compiled
                    .context_map
                    .iter()
                    .map(|(c, _)| c.clone())
                    .collect(),
            });
            #[derive(Serialize)]
            struct CompileReport {
                protocol: String,
                deviations: Vec<(Vec<String>, f64)>,
                max_deviation: f64,
            }
            let mut text = String::new();
            match output {
                Some(path) => {
                    std::fs::write(path, &protocol_text).map_err(other_err)?;
                    text.push_str(&format!("wrote {}\n", path.display()));
                }
                None => text.push_str(&protocol_text),
            }
            for (context, deviation) in &deviations {
                text.push_str(&format!(
                    "context {{{}}}: max deviation {deviation:.3e}\n",
                    context.join(",")
                ));
            }
            text.push_str(&format!("max deviation: {max_deviation:.3e}\n"));
            let report = CompileReport {
                protocol: protocol_text,
                deviations,
                max_deviation,
            };
            emit(
                &cli.common,
                format!("compile {scenario}"),
                &echo,
                &report,
                text,
            )?;
            if max_deviation > 1e-12 {
                return Err(CliError::Tolerance(format!(
                    "compiled statistics deviate by {max_deviation:.3e}"
                )));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
