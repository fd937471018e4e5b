//! Command-line entry point. Subcommands mirror the library: `transform`,
//! `gauge`, `classify`, `verify`, `member`, `fundamental`, `recover`,
//! `parse`. Output is a deterministic report, either text or line-delimited
//! JSON records; all floating values print with 17 significant digits.
//! Usage errors exit 2, domain errors exit 1 with a machine-readable code.

use crate::error::{Error, ErrorCode, Result};
use crate::expr::Expression;
use crate::gauge;
use crate::groupoid::{self, AdmissibleTransformation};
use crate::ode::ClassTag;
use crate::parse;
use crate::reparam;
use crate::symmetry;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::ffi::OsString;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    JsonLines,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GaugeTarget {
    Rational,
    Lf,
    Arnold1,
    Arnold2,
}

#[derive(Debug, Parser)]
#[command(name = "lodeq", version, about = "point equivalence of linear ODEs")]
struct Cli {
    /// Numeric tolerance for verification predicates.
    #[arg(long, global = true, default_value_t = 1e-7)]
    tol: f64,
    /// Sample count for numeric equivalence checks.
    #[arg(long, global = true, default_value_t = 50)]
    samples: usize,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Apply a point transformation to an equation.
    Transform { ode: PathBuf, tau: PathBuf },
    /// Reduce an equation to a canonical form.
    Gauge {
        ode: PathBuf,
        #[arg(long, value_enum)]
        to: GaugeTarget,
        /// Anchor point (defaults to the interval midpoint).
        #[arg(long)]
        t0: Option<f64>,
    },
    /// Classify the Lie symmetry dimension.
    Classify { ode: PathBuf },
    /// Verify an admissible-transformation triple.
    Verify {
        source: PathBuf,
        target: PathBuf,
        tau: PathBuf,
    },
    /// Equivalence-group membership of a transformation.
    Member {
        tau: PathBuf,
        #[arg(long)]
        class: String,
        #[arg(long, default_value_t = false)]
        homogeneous: bool,
        #[arg(long)]
        order: usize,
    },
    /// Emit a fundamental solution system.
    Fundamental {
        ode: PathBuf,
        #[arg(long)]
        t0: Option<f64>,
    },
    /// Recover the equation from a fundamental system.
    Recover { system: PathBuf },
    /// Parse a document and report the normalized round trip.
    Parse { file: PathBuf },
}

#[derive(Debug, Serialize)]
struct InputDigest {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct OutputRecord {
    key: String,
    value: String,
}

/// One run of the tool: echoed command, input digests, output records,
/// diagnostics and the exit code (0 iff no error diagnostics).
#[derive(Debug, Serialize)]
pub struct RunReport {
    command: String,
    inputs: Vec<InputDigest>,
    outputs: Vec<OutputRecord>,
    diagnostics: Vec<String>,
    exit_code: i32,
}

impl RunReport {
    fn new(command: String) -> Self {
        RunReport {
            command,
            inputs: Vec::new(),
            outputs: Vec::new(),
            diagnostics: Vec::new(),
            exit_code: 0,
        }
    }

    fn push(&mut self, key: &str, value: impl Into<String>) {
        self.outputs.push(OutputRecord {
            key: key.to_string(),
            value: value.into(),
        });
    }

    fn render(&self, format: Format) -> String {
        match format {
            Format::Text => {
                let mut out = String::new();
                out.push_str(&format!("command: {}\n", self.command));
                for i in &self.inputs {
                    out.push_str(&format!("input: {} sha256={}\n", i.path, i.sha256));
                }
                for o in &self.outputs {
                    if o.value.contains('\n') {
                        out.push_str(&format!("{}:\n", o.key));
                        for line in o.value.lines() {
                            out.push_str(&format!("  {line}\n"));
                        }
                    } else {
                        out.push_str(&format!("{}: {}\n", o.key, o.value));
                    }
                }
                for d in &self.diagnostics {
                    out.push_str(&format!("diagnostic: {d}\n"));
                }
                out.push_str(&format!("exit: {}\n", self.exit_code));
                out
            }
            Format::JsonLines => {
                let mut out = String::new();
                out.push_str(
                    &serde_json::json!({"record": "command", "value": self.command}).to_string(),
                );
                out.push('\n');
                for i in &self.inputs {
                    out.push_str(
                        &serde_json::json!({"record": "input", "path": i.path, "sha256": i.sha256})
                            .to_string(),
                    );
                    out.push('\n');
                }
                for o in &self.outputs {
                    out.push_str(
                        &serde_json::json!({"record": "output", "key": o.key, "value": o.value})
                            .to_string(),
                    );
                    out.push('\n');
                }
                for d in &self.diagnostics {
                    out.push_str(
                        &serde_json::json!({"record": "diagnostic", "value": d}).to_string(),
                    );
                    out.push('\n');
                }
                out.push_str(
                    &serde_json::json!({"record": "exit", "code": self.exit_code}).to_string(),
                );
                out.push('\n');
                out
            }
        }
    }
}

fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn read_input(path: &Path, report: &mut RunReport) -> Result<String> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::new(
            ErrorCode::Io,
            format!("cannot read '{}': {e}", path.display()),
        )
    })?;
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    report.inputs.push(InputDigest {
        path: path.display().to_string(),
        sha256: format!("{:x}", hasher.finalize()),
    });
    Ok(text)
}

/// Entry point used by the binary; returns the process exit code.
pub fn run<I>(args: I) -> i32
where
    I: IntoIterator<Item = OsString>,
{
    let mut full: Vec<OsString> = vec!["lodeq".into()];
    full.extend(args);
    let cli = match Cli::try_parse_from(full) {
        Ok(c) => c,
        Err(e) => {
            // clap renders its own message; help/version are not errors
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let format = cli.format;
    let mut report = RunReport::new(command_echo(&cli));
    match execute(&cli, &mut report) {
        Ok(()) => {
            report.exit_code = 0;
            print!("{}", report.render(format));
            0
        }
        Err(e) => {
            report.diagnostics.push(format!("error {e}"));
            report.exit_code = 1;
            print!("{}", report.render(format));
            1
        }
    }
}

fn command_echo(cli: &Cli) -> String {
    match &cli.command {
        Command::Transform { ode, tau } => {
            format!("transform {} {}", ode.display(), tau.display())
        }
        Command::Gauge { ode, to, t0 } => {
            let target = match to {
                GaugeTarget::Rational => "rational",
                GaugeTarget::Lf => "lf",
                GaugeTarget::Arnold1 => "arnold1",
                GaugeTarget::Arnold2 => "arnold2",
            };
            match t0 {
                Some(v) => format!(
                    "gauge {} --to {target} --t0 {}",
                    ode.display(),
                    fmt_float(*v)
                ),
                None => format!("gauge {} --to {target}", ode.display()),
            }
        }
        Command::Classify { ode } => format!("classify {}", ode.display()),
        Command::Verify {
            source,
            target,
            tau,
        } => format!(
            "verify {} {} {}",
            source.display(),
            target.display(),
            tau.display()
        ),
        Command::Member {
            tau,
            class,
            homogeneous,
            order,
        } => format!(
            "member {} --class {class}{} --order {order}",
            tau.display(),
            if *homogeneous { " --homogeneous" } else { "" }
        ),
        Command::Fundamental { ode, t0 } => match t0 {
            Some(v) => format!("fundamental {} --t0 {}", ode.display(), fmt_float(*v)),
            None => format!("fundamental {}", ode.display()),
        },
        Command::Recover { system } => format!("recover {}", system.display()),
        Command::Parse { file } => format!("parse {}", file.display()),
    }
}

fn gauge_outputs(report: &mut RunReport, result: &gauge::GaugeResult, samples: usize) {
    report.push(
        "transformation",
        parse::serialize_transformation(&result.transformation),
    );
    report.push("gauged", parse::serialize_ode(&result.gauged));
    // numeric coefficients have no closed textual form; report sampled values
    for (m, c) in result.gauged.coeffs().iter().enumerate() {
        if !c.is_closed_form() {
            report.push(
                &format!("gauged.a{m}"),
                expression_value(c, samples, result.gauged.interval()),
            );
        }
    }
    for (m, sup) in &result.diagnostics.vanish_sup {
        report.push(&format!("vanish.a{m}.sup"), fmt_float(*sup));
    }
    if let Some(from) = &result.diagnostics.shrunk_from {
        report.diagnostics.push(format!(
            "interval shrunk from {from} to {}",
            result.gauged.interval()
        ));
    }
}

fn expression_value(e: &Expression, samples: usize, iv: &crate::interval::Interval) -> String {
    if e.is_closed_form() {
        return e.to_string();
    }
    // numeric leaves have no textual closed form; emit sampled values
    let mut out = String::from("numeric; samples follow\n");
    for t in iv.chebyshev_samples(samples.max(8)) {
        match e.evaluate(t) {
            Ok(v) => out.push_str(&format!("{} {}\n", fmt_float(t), fmt_float(v))),
            Err(_) => out.push_str(&format!("{} nan\n", fmt_float(t))),
        }
    }
    out
}

fn execute(cli: &Cli, report: &mut RunReport) -> Result<()> {
    match &cli.command {
        Command::Transform { ode, tau } => {
            let ode = parse::parse_ode(&read_input(ode, report)?)?;
            let tau = parse::parse_transformation(&read_input(tau, report)?)?;
            let out = tau.apply_to_ode(&ode)?;
            report.push("transformed", parse::serialize_ode(&out));
            Ok(())
        }
        Command::Gauge { ode, to, t0 } => {
            let ode = parse::parse_ode(&read_input(ode, report)?)?;
            let anchor = t0.unwrap_or_else(|| ode.interval().midpoint());
            let result = match to {
                GaugeTarget::Rational => gauge::to_rational(&ode)?,
                GaugeTarget::Lf => gauge::to_laguerre_forsyth(&ode, anchor)?,
                GaugeTarget::Arnold1 => gauge::to_arnold1(&ode, anchor)?,
                GaugeTarget::Arnold2 => gauge::to_arnold2(&ode, anchor)?,
            };
            gauge_outputs(report, &result, cli.samples);
            Ok(())
        }
        Command::Classify { ode } => {
            let ode = parse::parse_ode(&read_input(ode, report)?)?;
            let c = symmetry::classify_dimension(&ode)?;
            report.push("dimension", c.dimension.to_string());
            report.push("case", c.case.to_string());
            report.push("confidence", c.confidence.to_string());
            match &c.witness {
                Some(w) => report.push("witness", parse::serialize_transformation(w)),
                None => report.push("witness", "none"),
            }
            Ok(())
        }
        Command::Verify {
            source,
            target,
            tau,
        } => {
            let source = parse::parse_ode(&read_input(source, report)?)?;
            let target = parse::parse_ode(&read_input(target, report)?)?;
            let tau = parse::parse_transformation(&read_input(tau, report)?)?;
            let cand = AdmissibleTransformation {
                source,
                target,
                tau,
            };
            let (ok, diag) = groupoid::verify_admissible(&cand, cli.tol)?;
            report.push("admissible", if ok { "true" } else { "false" });
            report.push(
                "worst.coefficient",
                if diag.worst_coefficient == cand.source.order() {
                    "rhs".to_string()
                } else {
                    format!("a{}", diag.worst_coefficient)
                },
            );
            report.push("worst.deviation", fmt_float(diag.worst_deviation));
            report.push("worst.location", fmt_float(diag.worst_location));
            Ok(())
        }
        Command::Member {
            tau,
            class,
            homogeneous,
            order,
        } => {
            let tau = parse::parse_transformation(&read_input(tau, report)?)?;
            let tag: ClassTag = class.parse()?;
            let (ok, reason) =
                groupoid::in_equivalence_group(&tau, tag, *order, *homogeneous, cli.tol)?;
            report.push("member", if ok { "true" } else { "false" });
            report.push("reason", reason);
            Ok(())
        }
        Command::Fundamental { ode, t0 } => {
            let ode = parse::parse_ode(&read_input(ode, report)?)?;
            let anchor = t0.unwrap_or_else(|| ode.interval().midpoint());
            let fs = reparam::fundamental_system(&ode, anchor)?;
            report.push("order", fs.order().to_string());
            report.push(
                "interval",
                format!(
                    "[{}, {}]",
                    fmt_float(fs.interval().lo()),
                    fmt_float(fs.interval().hi())
                ),
            );
            for (i, chi) in fs.solutions().iter().enumerate() {
                report.push(
                    &format!("chi{}", i + 1),
                    expression_value(chi, cli.samples, fs.interval()),
                );
            }
            Ok(())
        }
        Command::Recover { system } => {
            let fs = parse::parse_fundamental_system(&read_input(system, report)?)?;
            let ode = reparam::coefficients_from_fundamental_system(&fs)?;
            report.push("recovered", parse::serialize_ode(&ode));
            Ok(())
        }
        Command::Parse { file } => {
            let text = read_input(file, report)?;
            // try the document kinds in a fixed order, falling back to a
            // bare expression
            if text.lines().any(|l| l.trim_start().starts_with("order")) {
                if text.contains("chi1") {
                    let fs = parse::parse_fundamental_system(&text)?;
                    report.push("kind", "fundamental-system");
                    report.push("order", fs.order().to_string());
                    for (i, chi) in fs.solutions().iter().enumerate() {
                        report.push(&format!("chi{}", i + 1), chi.to_string());
                    }
                } else {
                    let ode = parse::parse_ode(&text)?;
                    let text2 = parse::serialize_ode(&ode);
                    let back = parse::parse_ode(&text2)?;
                    let roundtrip = (0..ode.order()).all(|m| back.coeff(m) == ode.coeff(m))
                        && back.rhs() == ode.rhs();
                    report.push("kind", "ode");
                    report.push("normalized", text2);
                    report.push("roundtrip", if roundtrip { "ok" } else { "mismatch" });
                }
            } else if text.lines().any(|l| l.trim_start().starts_with("T")) {
                let tau = parse::parse_transformation(&text)?;
                let text2 = parse::serialize_transformation(&tau);
                report.push("kind", "transformation");
                report.push("normalized", text2);
            } else {
                let e = parse::parse_expression(text.trim())?;
                let back = parse::parse_expression(&e.to_string())?;
                report.push("kind", "expression");
                report.push("normalized", e.to_string());
                report.push("roundtrip", if back == e { "ok" } else { "mismatch" });
            }
            Ok(())
        }
    }
}
