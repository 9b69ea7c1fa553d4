use std::collections::BTreeSet;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sp_audit::audit::{RuleId, Severity};
use sp_audit::dsl::{lint_sp, parse_sp, Registry};
use sp_audit::extract::{extract_dir, DiagnosticSeverity};
use sp_audit::report::{self, analyze, render, report_of, Format, Input, RunError};
use sp_audit::upg::to_dot;

#[derive(Parser)]
#[command(name = "sp-audit", version, about = "Audit safety-property annotations of unsafe Rust APIs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InputArgs {
    /// Source directory or facts file; directories are extracted, files are loaded as facts.
    path: Option<PathBuf>,
    #[arg(long, conflicts_with_all = ["path", "src"])]
    facts: Option<PathBuf>,
    #[arg(long, conflicts_with = "path")]
    src: Option<PathBuf>,
    /// Extra tag database; repeatable, later files override earlier entries.
    #[arg(long)]
    tagdb: Vec<PathBuf>,
}

impl InputArgs {
    fn input(&self) -> Result<Input, String> {
        if let Some(f) = &self.facts {
            return Ok(Input::FactsFile(f.clone()));
        }
        if let Some(d) = &self.src {
            return Ok(Input::SourceDir(d.clone()));
        }
        match &self.path {
            Some(p) if p.is_dir() => Ok(Input::SourceDir(p.clone())),
            Some(p) => Ok(Input::FactsFile(p.clone())),
            None => Err("no input: pass a path, --facts or --src".into()),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Extract library facts from a source directory and print them as JSON.
    Extract {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        tagdb: Vec<PathBuf>,
    },
    /// Print the audit units of a library, or its graph with --format dot.
    Units {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value = "text")]
        format: Format,
        /// Print the unsafety propagation graph in DOT instead of the units.
        #[arg(long)]
        emit_graph: bool,
    },
    /// Run the full audit.
    Check {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value = "text")]
        format: Format,
        /// Rule to suppress; repeatable.
        #[arg(long)]
        disable: Vec<RuleId>,
        #[arg(long, default_value = "low")]
        fail_on: Severity,
    },
    /// Parse and lint safety-property strings.
    Lint {
        #[arg(required = true)]
        exprs: Vec<String>,
    },
    /// Describe an audit or inference rule.
    Explain { rule: RuleId },
}

fn fail(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(2)
}

fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes());
}

fn units(input: &InputArgs, format: Format, emit_graph: bool) -> Result<(), RunError> {
    let a = analyze(&input.input().map_err(|e| RunError::Io {
        path: PathBuf::new(),
        source: std::io::Error::new(std::io::ErrorKind::InvalidInput, e),
    })?, &input.tagdb)?;
    if emit_graph || format == Format::Dot {
        emit(&to_dot(&a.upg));
        return Ok(());
    }
    match format {
        Format::Json => emit(&report::to_canonical_json(&a.partition.audit_units)),
        _ => {
            let mut s = String::new();
            for u in &a.partition.audit_units {
                s.push_str(&format!("{} [{:?}] {}\n", u.id, u.handling, u.formula));
            }
            s.push_str(&format!(
                "{} basic units, {} audit units\n",
                a.partition.basic_units.len(),
                a.partition.audit_units.len()
            ));
            emit(&s);
        }
    }
    Ok(())
}

fn lint(exprs: &[String]) -> ExitCode {
    let reg = Registry::builtin();
    let mut code = 0;
    for text in exprs {
        match parse_sp(text) {
            Ok(e) => {
                println!("{e}");
                for d in lint_sp(&e, reg) {
                    println!("  {d}");
                    if d.is_error() {
                        code = code.max(1);
                    }
                }
            }
            Err(err) => {
                eprintln!("error: {text}: {err}");
                code = 2;
            }
        }
    }
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Extract { src, tagdb } => {
            let db = match report::load_tagdb(&tagdb) {
                Ok(db) => db,
                Err(e) => return fail(e),
            };
            match extract_dir(&src, &db) {
                Ok(x) => {
                    for d in &x.diagnostics {
                        eprintln!("{d}");
                    }
                    emit(&x.facts.to_json());
                    if x.diagnostics.iter().any(|d| d.severity == DiagnosticSeverity::Error) {
                        return ExitCode::from(2);
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Units { input, format, emit_graph } => match units(&input, format, emit_graph) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => fail(e),
        },
        Command::Check { input, format, disable, fail_on } => {
            let inp = match input.input() {
                Ok(i) => i,
                Err(e) => return fail(e),
            };
            let disabled: BTreeSet<RuleId> = disable.into_iter().collect();
            let result = analyze(&inp, &input.tagdb).and_then(|a| {
                for d in &a.diagnostics {
                    eprintln!("{d}");
                }
                report_of(&a, &disabled)
            });
            match result {
                Ok(r) => {
                    emit(&render(&r, format));
                    ExitCode::from(r.exit_code(fail_on) as u8)
                }
                Err(e) => fail(e),
            }
        }
        Command::Lint { exprs } => lint(&exprs),
        Command::Explain { rule } => {
            println!("{}: {}", rule.name(), rule.title());
            println!("  {}", rule.explain());
            ExitCode::SUCCESS
        }
    }
}
