use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use residua_core::generators::{gen, GenSpec, Generated, Kind};
use residua_core::Tolerances;

use crate::commands::{self, Outcome, MAX_LEVEL};
use crate::doc::{read_file, DocError, Loaded, MatrixDocument, PovmDocument};
use crate::json::to_text;
use crate::report::Report;
use crate::settings::base_tolerances;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "residua", version, about = "Ordered POVMs under the residual transform and its collapse")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the invariant suite on a POVM document.
    Verify {
        input: PathBuf,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Iterate the residual transform.
    Psi {
        input: PathBuf,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the final iterate as a standalone document.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Compute the collapsed POVM.
    Collapse {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the collapsed POVM as a standalone document.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Summarize the minimal dilation and its rank identities.
    Dilate {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Test whether a POVM lies in the fiber of a collapsed POVM.
    Fiber {
        input: PathBuf,
        /// Collapsed POVM document (originals, then the escape as `term:1`).
        #[arg(long)]
        against: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Couple two adjacent sectors of a collapsed POVM into a fiber member.
    Couple {
        /// Collapsed POVM document.
        input: PathBuf,
        #[arg(long = "c")]
        c_block: PathBuf,
        #[arg(long = "x")]
        x_block: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Check the escape polynomials, optionally on a collapsed POVM.
    Postcollapse {
        #[arg(long)]
        levels: usize,
        /// Collapsed POVM document whose escape effect is evolved.
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a seeded instance.
    Gen {
        #[arg(long)]
        kind: String,
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Input(String),
    Compute(String),
}

impl From<DocError> for Failure {
    fn from(e: DocError) -> Self {
        Failure::Input(e.to_string())
    }
}

fn load_povm(path: &Path) -> Result<Loaded<PovmDocument>, Failure> {
    let text = read_file(path)?;
    Ok(Loaded::<PovmDocument>::parse(&text, &path.display().to_string())?)
}

fn load_matrix(path: &Path) -> Result<Loaded<MatrixDocument>, Failure> {
    let text = read_file(path)?;
    Ok(Loaded::<MatrixDocument>::parse(&text, &path.display().to_string())?)
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Input(format!("{}: cannot write: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn compute<T>(r: residua_core::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| Failure::Compute(e.to_string()))
}

/// Parses `argv` (program name first), runs the command and returns the
/// exit code: 0 when every check passes, 1 when a check fails, 2 on bad
/// input.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let echo: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(cli.command, echo) {
        Ok(code) => code,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            EXIT_INPUT
        }
        Err(Failure::Compute(msg)) => {
            eprintln!("check failed: {msg}");
            EXIT_CHECK_FAILED
        }
    }
}

fn finish(echo: Vec<String>, started: Instant, outcome: Outcome, out: Option<&Path>) -> Result<i32, Failure> {
    let report = Report::new(echo, outcome.checks, outcome.result, started.elapsed().as_secs_f64());
    write_or_print(out, &to_text(&report))?;
    Ok(if report.all_passed() { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn execute(command: Command, echo: Vec<String>) -> Result<i32, Failure> {
    let started = Instant::now();
    let base = base_tolerances().map_err(Failure::Input)?;
    let tol_for = |doc: &Loaded<PovmDocument>| -> Tolerances { doc.doc.tolerances(base) };
    match command {
        Command::Verify { input, out } => {
            let doc = load_povm(&input)?;
            let tol = tol_for(&doc);
            let p = doc.to_povm(&tol)?;
            finish(echo, started, commands::verify(&p, &tol), out.as_deref())
        }
        Command::Psi { input, steps, out, emit } => {
            let doc = load_povm(&input)?;
            let tol = tol_for(&doc);
            let p = doc.to_povm(&tol)?;
            let (outcome, iterate) = compute(commands::psi_steps(&p, steps, &tol))?;
            if let Some(path) = emit.as_deref() {
                write_or_print(Some(path), &iterate.to_text())?;
            }
            finish(echo, started, outcome, out.as_deref())
        }
        Command::Collapse { input, out, emit } => {
            let doc = load_povm(&input)?;
            let tol = tol_for(&doc);
            let p = doc.to_povm(&tol)?;
            let (outcome, collapsed) = compute(commands::collapse(&p, &tol))?;
            if let Some(path) = emit.as_deref() {
                write_or_print(Some(path), &collapsed.to_text())?;
            }
            finish(echo, started, outcome, out.as_deref())
        }
        Command::Dilate { input, out } => {
            let doc = load_povm(&input)?;
            let tol = tol_for(&doc);
            let p = doc.to_povm(&tol)?;
            let outcome = compute(commands::dilate(&p, &tol))?;
            finish(echo, started, outcome, out.as_deref())
        }
        Command::Fiber { input, against, out } => {
            let doc = load_povm(&input)?;
            let tol = tol_for(&doc);
            let p = doc.to_povm(&tol)?;
            let b = load_povm(&against)?.to_collapsed(&tol)?;
            let outcome = compute(commands::fiber(&p, &b, &tol))?;
            finish(echo, started, outcome, out.as_deref())
        }
        Command::Couple { input, c_block, x_block, out, emit } => {
            let doc = load_povm(&input)?;
            let tol = tol_for(&doc);
            let b = doc.to_collapsed(&tol)?;
            let c = load_matrix(&c_block)?.matrix();
            let x = load_matrix(&x_block)?.matrix();
            let (outcome, coupled) = commands::couple(&b, &c, &x, &tol).map_err(|e| match e {
                residua_core::Error::InfeasibleCoupling { .. } | residua_core::Error::DimensionMismatch { .. } => {
                    Failure::Input(e.to_string())
                }
                other => Failure::Compute(other.to_string()),
            })?;
            if let Some(path) = emit.as_deref() {
                write_or_print(Some(path), &coupled.to_text())?;
            }
            finish(echo, started, outcome, out.as_deref())
        }
        Command::Postcollapse { levels, input, out } => {
            if levels > MAX_LEVEL {
                return Err(Failure::Input(format!("--levels {levels} exceeds the supported maximum {MAX_LEVEL}")));
            }
            let (b, tol) = match input {
                Some(path) => {
                    let doc = load_povm(&path)?;
                    let tol = tol_for(&doc);
                    (Some(doc.to_collapsed(&tol)?), tol)
                }
                None => (None, base),
            };
            let outcome = compute(commands::postcollapse(levels, b.as_ref(), &tol))?;
            finish(echo, started, outcome, out.as_deref())
        }
        Command::Gen { kind, dim, n, seed, out } => {
            let kind: Kind = kind.parse().map_err(|e: residua_core::Error| Failure::Input(e.to_string()))?;
            let generated = gen(&GenSpec::new(kind, dim, n, seed)).map_err(|e| Failure::Input(e.to_string()))?;
            let doc = match generated {
                Generated::Povm(p) => PovmDocument::from_povm(&p),
                Generated::Collapsed(b) => PovmDocument::from_collapsed(&b),
            };
            write_or_print(out.as_deref(), &doc.to_text())?;
            Ok(EXIT_OK)
        }
    }
}
