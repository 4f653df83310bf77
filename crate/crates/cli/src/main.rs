use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ghosttrace::harness::{check_equivalence, filter_instrumentation, measure_overhead};
use ghosttrace::lang::{load, pretty_print, FrontendError, Program};
use ghosttrace::runtime::{interpret, Mode, Outcome};
use ghosttrace::trace::{render_json, render_text_with, CausalityTrace, RenderOptions};
use ghosttrace::transform::{transform_program, TransformError};

const EXIT_NPE: u8 = 1;
const EXIT_FRONTEND: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Parser)]
#[command(name = "ghosttrace", version, about = "Null causality traces for MiniLang programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TraceFormat {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Instrument and run a program, reporting any null dereference.
    Run {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        trace_format: TraceFormat,
        /// Also dump the links before postprocessing.
        #[arg(long)]
        raw: bool,
        /// Run without instrumentation.
        #[arg(long)]
        original: bool,
        /// Write the instrumented source here.
        #[arg(long, value_name = "PATH")]
        emit_transformed: Option<PathBuf>,
        /// Write the event log, helper calls removed, here.
        #[arg(long, value_name = "PATH")]
        events: Option<PathBuf>,
        #[arg(long, env = "GHOSTTRACE_COLOR", default_value = "0", value_parser = ["0", "1"], hide_env_values = true)]
        color: String,
    },
    /// Print the instrumented source.
    Transform {
        file: PathBuf,
        #[arg(short, long, value_name = "PATH")]
        output: Option<PathBuf>,
        /// Print per-rule counts to stderr.
        #[arg(long)]
        report: bool,
    },
    /// Compare event logs of the original and instrumented runs.
    Check {
        /// Treat FILE as an instrumented program; the original is read from
        /// the file its header names, in the same directory.
        #[arg(long)]
        instrumented: bool,
        file: PathBuf,
    },
    /// Time original and instrumented runs of every `.mini` file in a directory.
    Bench {
        dir: PathBuf,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long)]
        csv: bool,
    },
}

enum Failure {
    Frontend(String),
    Internal(String),
}

impl From<FrontendError> for Failure {
    fn from(e: FrontendError) -> Self {
        Failure::Frontend(e.to_string())
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { file, trace_format, raw, original, emit_transformed, events, color } => {
            let options = RenderOptions { color: color == "1" };
            let outputs = Outputs { transformed: emit_transformed.as_deref(), events: events.as_deref() };
            cmd_run(&file, trace_format, raw, original, outputs, options)
        }
        Command::Transform { file, output, report } => cmd_transform(&file, output.as_deref(), report),
        Command::Check { instrumented, file } => cmd_check(&file, instrumented),
        Command::Bench { dir, reps, csv } => cmd_bench(&dir, reps, csv),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Frontend(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(EXIT_FRONTEND)
        }
        Err(Failure::Internal(message)) => {
            eprintln!("internal error: {message}");
            ExitCode::from(EXIT_INTERNAL)
        }
    }
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| path.display().to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Internal(format!("cannot read {}: {e}", path.display())))
}

fn load_file(path: &Path) -> Result<Program, Failure> {
    Ok(load(&read(path)?, &file_name(path))?)
}

fn instrument(program: &Program) -> Result<Program, Failure> {
    match transform_program(program) {
        Ok((p, _)) => Ok(p),
        Err(e @ TransformError::AlreadyTransformed) => Err(Failure::Frontend(e.to_string())),
        Err(e) => Err(Failure::Internal(e.to_string())),
    }
}

fn dump_raw(trace: &CausalityTrace) -> String {
    let mut out = String::from("raw causality trace:\n");
    for link in trace.links() {
        out.push_str(&format!(
            "  [{}] {} {} {} at {}\n",
            link.seq,
            link.kind.name(),
            link.variable.as_deref().unwrap_or("-"),
            link.expr_signature.as_deref().unwrap_or("-"),
            link.location
        ));
    }
    out
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Internal(format!("cannot write {}: {e}", path.display())))
}

struct Outputs<'a> {
    transformed: Option<&'a Path>,
    events: Option<&'a Path>,
}

fn cmd_run(
    path: &Path,
    format: TraceFormat,
    raw: bool,
    original: bool,
    outputs: Outputs<'_>,
    options: RenderOptions,
) -> CmdResult {
    let program = load_file(path)?;
    let (program, mode) = if original || program.instrumented {
        let mode = if program.instrumented { Mode::Instrumented } else { Mode::Original };
        (program, mode)
    } else {
        (instrument(&program)?, Mode::Instrumented)
    };
    if let Some(out) = outputs.transformed {
        write(out, &pretty_print(&program))?;
    }
    let result = interpret(&program, mode).map_err(|e| Failure::Internal(e.to_string()))?;
    if let Some(out) = outputs.events {
        write(out, &filter_instrumentation(&result.events).serialize())?;
    }
    let mut stdout = std::io::stdout().lock();
    for line in &result.output {
        let _ = writeln!(stdout, "{line}");
    }
    match result.outcome {
        Outcome::Normal(_) => Ok(0),
        Outcome::Npe(report) => {
            let text = match format {
                TraceFormat::Text => render_text_with(&report, options),
                TraceFormat::Json => render_json(&report),
            };
            eprint!("{text}");
            if !text.ends_with('\n') {
                eprintln!();
            }
            if raw {
                eprint!("{}", dump_raw(&report.trace));
            }
            Ok(EXIT_NPE)
        }
        Outcome::OtherError(message) => Err(Failure::Internal(message)),
    }
}

fn cmd_transform(path: &Path, output: Option<&Path>, report: bool) -> CmdResult {
    let program = load_file(path)?;
    let (instrumented, summary) = match transform_program(&program) {
        Ok(done) => done,
        Err(e @ TransformError::AlreadyTransformed) => return Err(Failure::Frontend(e.to_string())),
        Err(e) => return Err(Failure::Internal(e.to_string())),
    };
    let text = pretty_print(&instrumented);
    match output {
        Some(out) => write(out, &text)?,
        None => print!("{text}"),
    }
    if report {
        eprint!("{}", summary.summary());
    }
    Ok(0)
}

fn cmd_check(path: &Path, instrumented: bool) -> CmdResult {
    let program = load_file(path)?;
    let (original, transformed) = if instrumented || program.instrumented {
        if !program.instrumented {
            return Err(Failure::Frontend(format!("{} has no `@instrumented` header", path.display())));
        }
        let source = path.with_file_name(program.file.as_ref());
        (load_file(&source)?, program)
    } else {
        let t = instrument(&program)?;
        (program, t)
    };
    let verdict = check_equivalence(&original, &transformed).map_err(|e| Failure::Internal(e.to_string()))?;
    println!("{}", verdict.describe());
    Ok(if verdict.equal { 0 } else { EXIT_NPE })
}

fn cmd_bench(dir: &Path, reps: usize, csv: bool) -> CmdResult {
    let entries = fs::read_dir(dir).map_err(|e| Failure::Internal(format!("cannot read {}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "mini"))
        .collect();
    files.sort();
    if csv {
        println!("program,orig_ms,instr_ms,ratio");
    } else {
        println!("{:<28} {:>10} {:>10} {:>8}", "program", "orig ms", "instr ms", "ratio");
    }
    for file in files {
        let original = load_file(&file)?;
        if original.instrumented {
            continue;
        }
        let transformed = instrument(&original)?;
        let o = measure_overhead(&original, &transformed, reps).map_err(|e| Failure::Internal(e.to_string()))?;
        let name = file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let (om, im) = (o.original.as_secs_f64() * 1e3, o.instrumented.as_secs_f64() * 1e3);
        if csv {
            println!("{name},{om:.3},{im:.3},{:.2}", o.ratio);
        } else {
            let flag = if o.low_confidence { " (1 sample)" } else { "" };
            println!("{name:<28} {om:>10.3} {im:>10.3} {:>8.2}{flag}", o.ratio);
        }
    }
    Ok(0)
}
