use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use szpiro_core::arith::real::set_precision_digits;
use szpiro_core::expectation::DEFAULT_TUPLE_BUDGET;
use szpiro_core::global_model::{nos_findings, qpilot_discriminant_check, ThetaDataDescriptor};
use szpiro_core::suites;
use szpiro_core::synth::{generate, GenerateConfig};
use szpiro_core::szpiro::{derive_constants, evaluate, InequalityKind, InequalityReport};
use szpiro_core::Error;

#[derive(Parser)]
#[command(name = "szpiro", version, about = "Evaluate Szpiro-type bounds on theta-data descriptors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one or all inequalities on a descriptor.
    Compute {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        inequality: Which,
        #[arg(long, value_enum, default_value = "md")]
        format: Format,
        /// Write the report here instead of stdout. Markdown output also
        /// writes a JSON sidecar next to it.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Cap on tuple evaluations for exhaustive expectations.
        #[arg(long, default_value_t = DEFAULT_TUPLE_BUDGET)]
        budget: u128,
        /// Decimal digits for real arithmetic.
        #[arg(long, default_value_t = 50)]
        precision: usize,
    },
    /// Run verification suites.
    Verify {
        #[arg(long)]
        suite: Option<String>,
        #[arg(long, value_enum, default_value = "md")]
        format: Format,
    },
    /// Recompute eps_l, B_{l,d0}, A_0 and B_0.
    DeriveConstants {
        #[arg(long)]
        l: u64,
        #[arg(long)]
        d0: u64,
    },
    /// Write a seeded synthetic descriptor.
    Generate {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        d0: u64,
        #[arg(long)]
        l: u64,
        #[arg(long, default_value_t = 2)]
        fibers: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Probabilistic,
    Baby,
    Explicit,
    Tautological,
    All,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Md,
}

#[derive(Serialize)]
struct ComputeOutput {
    l: u64,
    d0: u64,
    deg_f: u64,
    warnings: Vec<String>,
    nos_findings: Vec<String>,
    qpilot_residual: szpiro_core::global_model::ResidualCheck,
    reports: Vec<InequalityReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    skipped: Vec<String>,
}

fn to_json<T: Serialize>(v: &T) -> anyhow::Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn emit(text: &str, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn compute_reports(desc: &ThetaDataDescriptor, which: Which, budget: u128) -> szpiro_core::Result<ComputeOutput> {
    let kinds: Vec<InequalityKind> = match which {
        Which::Probabilistic => vec![InequalityKind::Probabilistic],
        Which::Baby => vec![InequalityKind::Baby],
        Which::Explicit => vec![InequalityKind::Explicit],
        Which::Tautological => vec![InequalityKind::Tautological],
        Which::All => InequalityKind::ALL.to_vec(),
    };
    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    for kind in kinds {
        match evaluate(desc, kind, budget) {
            Ok(r) => reports.push(r),
            // "all" skips the Baby bound when K's invariants are absent.
            Err(Error::Validation { invariant, message }) if matches!(which, Which::All) && invariant == "deg_K" => {
                skipped.push(format!("{kind:?}: {message}"))
            }
            Err(e) => return Err(e),
        }
    }
    Ok(ComputeOutput {
        l: desc.l(),
        d0: desc.d0(),
        deg_f: desc.deg_f(),
        warnings: desc.warnings.clone(),
        nos_findings: nos_findings(desc),
        qpilot_residual: qpilot_discriminant_check(desc)?,
        reports,
        skipped,
    })
}

fn markdown(out: &ComputeOutput, source: &str) -> anyhow::Result<String> {
    let mut s = format!("# Szpiro report for `{source}`\n\nl = {}, d0 = {}, [F:Q] = {}\n\n", out.l, out.d0, out.deg_f);
    for w in out.warnings.iter().chain(&out.nos_findings) {
        s.push_str(&format!("- warning: {w}\n"));
    }
    s.push_str(&format!(
        "- q-pilot degree vs discriminant residual: {} ({:?})\n",
        out.qpilot_residual.residual.to_decimal(12),
        out.qpilot_residual.verdict
    ));
    for k in &out.skipped {
        s.push_str(&format!("- skipped {k}\n"));
    }
    for r in &out.reports {
        s.push_str(&format!("\n## {:?}\n\n", r.kind));
        s.push_str("| side | value | exact form |\n|---|---|---|\n");
        for (side, q) in [("lhs", &r.lhs), ("rhs", &r.rhs)] {
            let exact = q.exact.as_ref().map(|c| c.to_string()).unwrap_or_default();
            s.push_str(&format!("| {side} | {} | {exact} |\n", q.value.to_decimal(12)));
        }
        s.push_str(&format!("\nverdict: **{:?}**\n", r.verdict));
        for n in &r.notes {
            s.push_str(&format!("- {n}\n"));
        }
        s.push_str("\n<details><summary>components</summary>\n\n```json\n");
        s.push_str(&to_json(&r.components)?);
        s.push_str("```\n\n</details>\n");
    }
    Ok(s)
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Compute { input, inequality, format, out, budget, precision } => {
            set_precision_digits(precision);
            let text = fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
            let desc = ThetaDataDescriptor::parse(&text)?;
            let output = compute_reports(&desc, inequality, budget)?;
            let json = to_json(&output)?;
            match format {
                Format::Json => emit(&json, out.as_deref())?,
                Format::Md => {
                    emit(&markdown(&output, &input.display().to_string())?, out.as_deref())?;
                    if let Some(path) = &out {
                        let sidecar = path.with_extension("json");
                        fs::write(&sidecar, json).with_context(|| format!("writing {}", sidecar.display()))?;
                    }
                }
            }
            Ok(true)
        }
        Command::Verify { suite, format } => {
            let reports = match suite {
                Some(name) => vec![suites::run(&name)?],
                None => suites::run_all()?,
            };
            let ok = reports.iter().all(|r| r.passed);
            if format == Format::Json {
                print!("{}", to_json(&reports)?);
            } else {
                for r in &reports {
                    let passed = r.checks.iter().filter(|c| c.passed).count();
                    println!(
                        "{} {}: {passed}/{} checks",
                        if r.passed { "PASS" } else { "FAIL" },
                        r.suite,
                        r.checks.len()
                    );
                    for c in r.checks.iter().filter(|c| !c.passed) {
                        println!("  failed: {} {}", c.name, c.detail);
                    }
                    for i in &r.informational {
                        println!("  info: {i}");
                    }
                }
            }
            Ok(ok)
        }
        Command::DeriveConstants { l, d0 } => {
            print!("{}", to_json(&derive_constants(l, d0)?)?);
            Ok(true)
        }
        Command::Generate { seed, d0, l, fibers, out } => {
            eprintln!("generating with seed {seed}");
            let desc = generate(&GenerateConfig { seed, d0, l, fibers })?;
            emit(&desc.to_json(), out.as_deref())?;
            Ok(true)
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Validation { .. } | Error::Parse(_) | Error::Input(_) | Error::Domain(_)) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
