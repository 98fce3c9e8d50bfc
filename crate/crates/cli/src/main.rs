//! Command-line driver: `check`, `run` and `trace`.
//!
//! Exit codes: 0 ok, 1 language error (parse/elaboration/type), 2 I/O,
//! 3 event validation, 4 stuck or fuel exhausted.

use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use asyncratt::driver::{compile, CompileOptions, Compiled, DriverError};
use asyncratt::pretty::term_to_string;
use asyncratt::reactive::MachineHooks;
use asyncratt::syntax::Term;
use asyncratt::eval::DEFAULT_FUEL;
use asyncratt::input::InputBuffer;
use asyncratt::literal::{decode_buffer, decode_event, encode_batch_line, encode_value};
use asyncratt::reactive::{Machine, MachineCfg, OutputBatch, ReactiveError};

#[derive(Parser)]
#[command(name = "asyncratt", about = "Asynchronous modal FRP toolchain", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Emit diagnostics as JSON records on stderr.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, elaborate and typecheck a program.
    Check {
        file: PathBuf,
        #[arg(long)]
        no_prelude: bool,
    },
    /// Run a program against an event script or interactively.
    Run(RunArgs),
    /// Like `run`, with a machine-state dump after every step.
    Trace(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    file: PathBuf,
    /// Event script: one JSON record {"ch": …, "val": …} per line.
    #[arg(long, conflicts_with = "interactive")]
    events: Option<PathBuf>,
    /// Read events from stdin, one record per line, emitting each batch
    /// before reading the next.
    #[arg(long)]
    interactive: bool,
    /// Initial values for the buffered channels, one record per line.
    #[arg(long)]
    buffer: Option<PathBuf>,
    /// Evaluation fuel per machine step.
    #[arg(long, default_value_t = DEFAULT_FUEL)]
    fuel: u64,
    /// First location id handed out by the allocator.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    no_prelude: bool,
    /// Append one record per evaluation rule application to this file
    /// (trace subcommand only).
    #[arg(long)]
    rules: Option<PathBuf>,
}

const EXIT_LANG: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_EVENT: u8 = 3;
const EXIT_STUCK: u8 = 4;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Check { file, no_prelude } => cmd_check(file, *no_prelude, cli.json),
        Command::Run(args) => cmd_run(args, cli.json, false),
        Command::Trace(args) => cmd_run(args, cli.json, true),
    };
    ExitCode::from(code)
}

fn diagnose(err: &DriverError, json: bool) -> u8 {
    let kind = match err {
        DriverError::Parse(_) => "parse",
        DriverError::Elab(_) => "elaboration",
        DriverError::Type(_) => "type",
        DriverError::Literal(_) => "literal",
        DriverError::Reactive(_) => "reactive",
    };
    if json {
        let (span, message) = match err {
            DriverError::Parse(p) => (
                Some((p.pos.line, p.pos.col)),
                format!("found {}, expected {}", p.found, p.expected),
            ),
            DriverError::Elab(e) => (Some((e.pos.line, e.pos.col)), e.message.clone()),
            DriverError::Type(t) => (None, format!("{t}")),
            other => (None, format!("{other}")),
        };
        let record = json!({
            "kind": kind,
            "span": span.map(|(l, c)| json!({"line": l, "col": c})),
            "message": message,
        });
        eprintln!("{record}");
    } else {
        eprintln!("error: {err}");
    }
    match err {
        DriverError::Reactive(r) => reactive_exit(r),
        DriverError::Literal(_) => EXIT_EVENT,
        _ => EXIT_LANG,
    }
}

fn reactive_exit(err: &ReactiveError) -> u8 {
    match err {
        ReactiveError::UnknownChannel(_)
        | ReactiveError::IllTypedEvent { .. }
        | ReactiveError::BadInitialBuffer(_) => EXIT_EVENT,
        _ => EXIT_STUCK,
    }
}

fn read_file(path: &PathBuf) -> Result<String, u8> {
    std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        EXIT_IO
    })
}

fn compile_file(path: &PathBuf, no_prelude: bool, json: bool) -> Result<Compiled, u8> {
    let src = read_file(path)?;
    let opts = CompileOptions {
        use_prelude: !no_prelude,
    };
    compile(&src, &opts).map_err(|e| diagnose(&e, json))
}

fn cmd_check(file: &PathBuf, no_prelude: bool, json: bool) -> u8 {
    match compile_file(file, no_prelude, json) {
        Ok(compiled) => {
            eprintln!(
                "ok: {} inputs, {} definitions, {} outputs",
                compiled.elab.delta.len(),
                compiled.elab.defs.len(),
                compiled.elab.outputs.len()
            );
            0
        }
        Err(code) => code,
    }
}

fn load_buffer(compiled: &Compiled, path: &Option<PathBuf>) -> Result<InputBuffer, u8> {
    match path {
        None => Ok(InputBuffer::new()),
        Some(p) => {
            let text = read_file(p)?;
            decode_buffer(&text, |n| compiled.lookup_channel_type(n)).map_err(|e| {
                eprintln!("error: {e}");
                EXIT_EVENT
            })
        }
    }
}

/// Write a line to stdout, exiting quietly if the consumer closed the pipe.
fn out_line(line: &str) {
    let mut stdout = std::io::stdout().lock();
    let write = writeln!(stdout, "{line}").and_then(|_| stdout.flush());
    if let Err(e) = write {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: {e}");
        std::process::exit(i32::from(EXIT_IO));
    }
}

fn emit_batch(step: usize, batch: &OutputBatch) {
    match encode_batch_line(step, batch) {
        Ok(line) => out_line(&line),
        Err(e) => eprintln!("error: {e}"),
    }
}

fn emit_state(machine: &Machine) {
    let outputs: Vec<_> = machine
        .output_map()
        .iter()
        .map(|(n, l)| json!([n.as_str(), format!("l{}", l.id)]))
        .collect();
    let heap: Vec<_> = machine
        .live_locations()
        .iter()
        .map(|l| {
            json!({
                "loc": format!("l{}", l.id),
                "clock": l.clock.iter().map(|c| c.as_str()).collect::<Vec<_>>(),
            })
        })
        .collect();
    let buffer: Vec<_> = machine
        .buffer()
        .iter()
        .map(|(n, v)| json!([n.as_str(), encode_value(v).unwrap_or(serde_json::Value::Null)]))
        .collect();
    out_line(
        &json!({"state": {"outputs": outputs, "heap": heap, "buffer": buffer}}).to_string(),
    );
}

/// Streams one JSON record per evaluation rule application.
struct RuleLog {
    out: std::fs::File,
}

impl MachineHooks for RuleLog {
    fn rule(&mut self, rule: &'static str, redex: &Term, store_len: usize) {
        let record = json!({
            "rule": rule,
            "redex": term_to_string(redex),
            "store": store_len,
        });
        let _ = writeln!(self.out, "{record}");
    }
}

struct NoLog;
impl MachineHooks for NoLog {}

fn cmd_run(args: &RunArgs, json: bool, trace: bool) -> u8 {
    if args.events.is_none() && !args.interactive {
        eprintln!("error: `run`/`trace` need exactly one of --events FILE or --interactive");
        return EXIT_IO;
    }
    let compiled = match compile_file(&args.file, args.no_prelude, json) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let mut rule_log: Box<dyn MachineHooks> = match (&args.rules, trace) {
        (Some(path), true) => match std::fs::File::create(path) {
            Ok(out) => Box::new(RuleLog { out }),
            Err(e) => {
                eprintln!("error: cannot create {}: {e}", path.display());
                return EXIT_IO;
            }
        },
        _ => Box::new(NoLog),
    };
    let buffer = match load_buffer(&compiled, &args.buffer) {
        Ok(b) => b,
        Err(code) => return code,
    };
    let cfg = MachineCfg {
        fuel_per_step: args.fuel,
        seed: args.seed,
        skip_gc: false,
    };
    let mut machine = match compiled.machine(buffer, cfg) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return reactive_exit(&e);
        }
    };
    match machine.init_with_hooks(rule_log.as_mut()) {
        Ok(batch) => emit_batch(0, &batch),
        Err(e) => {
            eprintln!("error: {e}");
            return reactive_exit(&e);
        }
    }
    if trace {
        emit_state(&machine);
    }

    let lookup = |n: &asyncratt::syntax::Name| compiled.lookup_channel_type(n);
    let mut step = 0usize;

    let mut feed = |line: &str, machine: &mut Machine, interactive: bool| -> Result<(), u8> {
        let line = line.trim();
        if line.is_empty() {
            return Ok(());
        }
        let event = match decode_event(line, lookup) {
            Ok(ev) => ev,
            Err(e) => {
                eprintln!("error: {e}");
                if interactive {
                    return Ok(());
                }
                return Err(EXIT_EVENT);
            }
        };
        let stepped = machine
            .step_input(event)
            .and_then(|()| machine.step_output_with_hooks(rule_log.as_mut()));
        match stepped {
            Ok(batch) => {
                step += 1;
                emit_batch(step, &batch);
                if trace {
                    emit_state(machine);
                }
                Ok(())
            }
            Err(e) => {
                eprintln!("error: {e}");
                if interactive && matches!(e, ReactiveError::UnknownChannel(_) | ReactiveError::IllTypedEvent { .. })
                {
                    return Ok(());
                }
                Err(reactive_exit(&e))
            }
        }
    };

    if args.interactive {
        let stdin = std::io::stdin();
        for line in stdin.lock().lines() {
            let line = match line {
                Ok(l) => l,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_IO;
                }
            };
            if let Err(code) = feed(&line, &mut machine, true) {
                return code;
            }
        }
        0
    } else {
        let script = match &args.events {
            Some(p) => match read_file(p) {
                Ok(t) => t,
                Err(code) => return code,
            },
            None => String::new(),
        };
        for line in script.lines() {
            if let Err(code) = feed(line, &mut machine, false) {
                return code;
            }
        }
        0
    }
}
