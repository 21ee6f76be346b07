use std::fs;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tessla::dataflow::{build_network, run_network, DataflowError, Schedule, DEFAULT_QUEUE_CAPACITY};
use tessla::depgraph::DependencyGraph;
use tessla::engine::kleene::select;
use tessla::engine::session::{Session, SessionError};
use tessla::engine::{evaluate_trace, EngineError, Limits, Streams, DEFAULT_MAX_EVENTS};
use tessla::fragments::{dfst_equivalent, format_letter, to_dfst, Equivalence, FragmentError};
use tessla::frontend::{compile, CompileError};
use tessla::stream::{EventStream, Progress};
use tessla::trace::{parse_trace, serialize_trace, Trace, TraceError};
use tessla::CoreSpec;

const SPEC_ERROR: u8 = 1;
const TRACE_ERROR: u8 = 2;
const RUNTIME_ERROR: u8 = 3;
const COUNTEREXAMPLE: u8 = 4;
const ORACLE_MISMATCH: u8 = 5;
const USAGE_ERROR: u8 = 64;

#[derive(Parser)]
#[command(name = "tessla", version, about = "Evaluate and analyse TeSSLa stream specifications")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Maximum number of generated timestamps (those without input events).
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_EVENTS as u64, value_parser = clap::value_parser!(u64).range(1..))]
    max_events: u64,
    /// Queue capacity of the dataflow simulator.
    #[arg(long, global = true, default_value_t = DEFAULT_QUEUE_CAPACITY as u64, value_parser = clap::value_parser!(u64).range(1..))]
    queue_capacity: u64,
    /// Read the trace incrementally and print outputs as soon as they are final.
    #[arg(long, global = true)]
    follow: bool,
    /// Write results to this file instead of standard output.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a specification on a trace (a file, or `-`/nothing for stdin).
    Run { spec: PathBuf, trace: Option<PathBuf> },
    /// Type-check a specification and test well-formedness.
    Check { spec: PathBuf },
    /// Print the flattened core specification.
    Flatten { spec: PathBuf },
    /// Print the dependency graph in DOT syntax.
    Graph { spec: PathBuf },
    /// Print the transducer of a boolean-fragment specification.
    Dfst { spec: PathBuf },
    /// Decide equivalence of two boolean-fragment specifications.
    Equiv { left: PathBuf, right: PathBuf },
    /// Evaluate with the engine and the dataflow simulator and compare.
    Oracle { spec: PathBuf, trace: PathBuf },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl ToString) -> Self {
        Failure { code, message: message.to_string() }
    }
}

impl From<CompileError> for Failure {
    fn from(e: CompileError) -> Self {
        Failure::new(SPEC_ERROR, e)
    }
}

impl From<TraceError> for Failure {
    fn from(e: TraceError) -> Self {
        Failure::new(TRACE_ERROR, e)
    }
}

impl From<FragmentError> for Failure {
    fn from(e: FragmentError) -> Self {
        Failure::new(SPEC_ERROR, e)
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        let code = match e {
            EngineError::Spec(_) | EngineError::NotWellFormed(_) => SPEC_ERROR,
            EngineError::NonMonotonicChunk { .. }
            | EngineError::UnknownInput(_)
            | EngineError::InputTypeMismatch { .. } => TRACE_ERROR,
            EngineError::NonPositiveDelay { .. } | EngineError::EventLimitExceeded { .. } => RUNTIME_ERROR,
        };
        Failure::new(code, e)
    }
}

impl From<SessionError> for Failure {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::Trace(e) => e.into(),
            SessionError::Engine(e) => e.into(),
            SessionError::Finished => Failure::new(RUNTIME_ERROR, e),
        }
    }
}

impl From<DataflowError> for Failure {
    fn from(e: DataflowError) -> Self {
        let code = match e {
            DataflowError::Spec(_) | DataflowError::NotWellFormed(_) => SPEC_ERROR,
            DataflowError::UnknownInput(_) | DataflowError::InputTypeMismatch { .. } => TRACE_ERROR,
            DataflowError::NonPositiveDelay { .. }
            | DataflowError::EventLimitExceeded { .. }
            | DataflowError::Deadlock(_) => RUNTIME_ERROR,
        };
        Failure::new(code, e)
    }
}

fn io_failure(code: u8, path: &Path, e: io::Error) -> Failure {
    Failure::new(code, format!("{}: {e}", path.display()))
}

fn load_spec(path: &Path) -> Result<CoreSpec, Failure> {
    let src = fs::read_to_string(path).map_err(|e| io_failure(SPEC_ERROR, path, e))?;
    compile(&src).map_err(|e| Failure::new(SPEC_ERROR, format!("{}: {e}", path.display())))
}

fn is_stdin(path: Option<&Path>) -> bool {
    path.is_none_or(|p| p == Path::new("-"))
}

fn open_trace(path: Option<&Path>) -> Result<Box<dyn BufRead>, Failure> {
    match path {
        Some(p) if !is_stdin(Some(p)) => {
            let f = fs::File::open(p).map_err(|e| io_failure(TRACE_ERROR, p, e))?;
            Ok(Box::new(BufReader::new(f)))
        }
        _ => Ok(Box::new(BufReader::new(io::stdin()))),
    }
}

fn load_trace(path: Option<&Path>) -> Result<Trace, Failure> {
    let mut text = String::new();
    open_trace(path)?.read_to_string(&mut text).map_err(|e| Failure::new(TRACE_ERROR, e))?;
    Ok(parse_trace(&text)?)
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| Failure::new(RUNTIME_ERROR, e))
}

fn render(streams: &Streams) -> String {
    serialize_trace(streams.iter().map(|(n, s)| (n.as_str(), s)))
}

fn limits(cli: &Cli) -> Limits {
    Limits { max_events: usize::try_from(cli.max_events).unwrap_or(usize::MAX) }
}

fn cmd_run(cli: &Cli, spec: &Path, trace: Option<&Path>, out: &mut dyn Write) -> Result<(), Failure> {
    let spec = load_spec(spec)?;
    if cli.follow {
        return follow(&spec, open_trace(trace)?, limits(cli), out);
    }
    let trace = load_trace(trace)?;
    match evaluate_trace(&spec, &trace, limits(cli)) {
        Ok(all) => write_out(out, &render(&select(&all, &spec.outputs))),
        Err(EngineError::EventLimitExceeded { limit, progress, partial }) => {
            write_out(out, &render(&select(&partial, &spec.outputs)))?;
            Err(EngineError::EventLimitExceeded { limit, progress, partial }.into())
        }
        Err(e) => Err(e.into()),
    }
}

/// Incremental evaluation. Input is handed to the monitor whenever time
/// moves on or a progress directive arrives; everything the monitor
/// finalizes is printed right away.
fn follow(spec: &CoreSpec, input: Box<dyn BufRead>, limits: Limits, out: &mut dyn Write) -> Result<(), Failure> {
    let mut session = Session::new(spec, limits)?;
    let mut text = String::new();
    for line in input.lines() {
        let line = line.map_err(|e| Failure::new(TRACE_ERROR, e))?;
        let fed = session.feed_line(&line, &mut text);
        write_out(out, &std::mem::take(&mut text))?;
        fed?;
    }
    let fed = session.finish(&mut text);
    write_out(out, &text)?;
    Ok(fed?)
}

fn cmd_check(spec: &Path, out: &mut dyn Write) -> Result<(), Failure> {
    let spec = load_spec(spec)?;
    let flat = spec.flatten();
    let graph = DependencyGraph::build(&flat).map_err(|e| Failure::new(SPEC_ERROR, e))?;
    let report = graph.check_well_formed();
    match report.witness {
        None => write_out(
            out,
            &format!(
                "ok: {} inputs, {} equations, {} outputs\n",
                spec.inputs.len(),
                spec.equations.len(),
                spec.outputs.len()
            ),
        ),
        Some(cycle) => {
            let mut path = cycle.clone();
            path.extend(cycle.first().cloned());
            write_out(out, &format!("cycle without delay: {}\n", path.join(" -> ")))?;
            Err(Failure::new(SPEC_ERROR, "specification is not well-formed"))
        }
    }
}

fn cmd_graph(spec: &Path, out: &mut dyn Write) -> Result<(), Failure> {
    let flat = load_spec(spec)?.flatten();
    let graph = DependencyGraph::build(&flat).map_err(|e| Failure::new(SPEC_ERROR, e))?;
    write_out(out, &graph.to_dot(&flat))
}

fn cmd_equiv(left: &Path, right: &Path, out: &mut dyn Write) -> Result<(), Failure> {
    let r1 = to_dfst(&load_spec(left)?)?;
    let r2 = to_dfst(&load_spec(right)?)?;
    match dfst_equivalent(&r1, &r2)? {
        Equivalence::Equivalent => write_out(out, "equivalent\n"),
        Equivalence::Counterexample { word, left, right } => {
            let mut text = format!("counterexample of length {}:\n", word.len());
            for (i, ((g, h1), h2)) in word.iter().zip(&left).zip(&right).enumerate() {
                text.push_str(&format!(
                    "{i}: {} => {} | {}\n",
                    format_letter(r1.inputs(), g),
                    format_letter(r1.outputs(), h1),
                    format_letter(r2.outputs(), h2)
                ));
            }
            write_out(out, &text)?;
            Err(Failure::new(COUNTEREXAMPLE, "specifications differ"))
        }
    }
}

#[derive(PartialEq)]
enum Outcome {
    Done(Streams),
    Limit(Progress, Streams),
    Failed(String),
}

fn cmd_oracle(cli: &Cli, spec: &Path, trace: &Path, out: &mut dyn Write) -> Result<(), Failure> {
    let spec = load_spec(spec)?;
    let trace = load_trace(Some(trace))?;
    let limits = limits(cli);
    let engine = match evaluate_trace(&spec, &trace, limits) {
        Ok(s) => Outcome::Done(s),
        Err(EngineError::EventLimitExceeded { progress, partial, .. }) => Outcome::Limit(progress, *partial),
        Err(e) => return Err(e.into()),
    };
    let capacity = usize::try_from(cli.queue_capacity).unwrap_or(usize::MAX);
    let net = build_network(&spec, capacity)?;
    let inputs: Streams = spec.inputs.keys().map(|n| (n.clone(), trace.stream(n))).collect();
    for schedule in [Schedule::RoundRobin, Schedule::Reversed, Schedule::Random(0)] {
        let flow = match run_network(&net, &inputs, schedule, limits) {
            Ok(s) => Outcome::Done(s),
            Err(DataflowError::EventLimitExceeded { progress, partial, .. }) => Outcome::Limit(progress, *partial),
            Err(e) => Outcome::Failed(e.to_string()),
        };
        if flow != engine {
            write_out(out, &format!("mismatch under {schedule:?} scheduling\n{}", diff(&engine, &flow)))?;
            return Err(Failure::new(ORACLE_MISMATCH, "engine and dataflow disagree"));
        }
    }
    let (streams, limited) = match &engine {
        Outcome::Done(s) => (s, false),
        Outcome::Limit(_, s) => (s, true),
        Outcome::Failed(_) => unreachable!("engine errors return early"),
    };
    write_out(out, &format!("agree on {} streams under 3 schedules\n", streams.len()))?;
    if limited {
        return Err(Failure::new(RUNTIME_ERROR, "event limit reached in both evaluators"));
    }
    Ok(())
}

fn describe(o: &Outcome) -> (Option<&Progress>, Option<&Streams>, Option<&str>) {
    match o {
        Outcome::Done(s) => (None, Some(s), None),
        Outcome::Limit(p, s) => (Some(p), Some(s), None),
        Outcome::Failed(e) => (None, None, Some(e)),
    }
}

fn diff(engine: &Outcome, flow: &Outcome) -> String {
    let (p1, s1, e1) = describe(engine);
    let (p2, s2, e2) = describe(flow);
    let mut text = String::new();
    if let Some(e) = e2.or(e1) {
        text.push_str(&format!("dataflow failed: {e}\n"));
    }
    if p1 != p2 {
        text.push_str(&format!("event limit: engine {p1:?}, dataflow {p2:?}\n"));
    }
    if let (Some(a), Some(b)) = (s1, s2) {
        for (name, x) in a {
            let y = b.get(name);
            if y != Some(x) {
                let render = |s: Option<&EventStream>| {
                    s.map_or("(missing)\n".to_string(), |s| serialize_trace([(name.as_str(), s)]))
                };
                text.push_str(&format!("stream {name}\n-- engine\n{}-- dataflow\n{}", render(Some(x)), render(y)));
            }
        }
    }
    text
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<(), Failure> {
    match &cli.command {
        Command::Run { spec, trace } => cmd_run(cli, spec, trace.as_deref(), out),
        Command::Check { spec } => cmd_check(spec, out),
        Command::Flatten { spec } => write_out(out, &load_spec(spec)?.flatten().to_string()),
        Command::Graph { spec } => cmd_graph(spec, out),
        Command::Dfst { spec } => write_out(out, &to_dfst(&load_spec(spec)?)?.to_text()),
        Command::Equiv { left, right } => cmd_equiv(left, right, out),
        Command::Oracle { spec, trace } => cmd_oracle(cli, spec, trace, out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE_ERROR } else { 0 });
        }
    };
    let mut out: Box<dyn Write> = match &cli.output {
        Some(path) => match fs::File::create(path) {
            Ok(f) => Box::new(io::BufWriter::new(f)),
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(USAGE_ERROR);
            }
        },
        None => Box::new(io::stdout().lock()),
    };
    match dispatch(&cli, &mut *out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let _ = out.flush();
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
