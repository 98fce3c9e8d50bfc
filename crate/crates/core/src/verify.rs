//! Executable metatheory: harnesses that check the operational guarantees
//! on concrete runs and on fuzzed programs.
//!
//! * [`audit_gc`] drives a machine while keeping a tombstone set of every
//!   collected location and fails if an `adv` ever touches one.
//! * [`check_determinism`] replays a run and compares batches exactly and
//!   machine states up to a location-id bijection.
//! * [`check_independence`] re-typechecks an output under a smaller input
//!   context and asserts the run never updates it on other channels.
//! * [`fuzz_productivity`] synthesises well-typed reactive programs from
//!   combinator templates and drives them with random well-typed events;
//!   every step must finish within fuel and without getting stuck.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::driver::{compile_default, default_buffer, Compiled, DriverError};
use crate::input::{ChannelClass, InputBuffer};
use crate::pretty::term_to_string;
use crate::reactive::{InputEvent, Machine, MachineCfg, MachineHooks, OutputBatch};
use crate::store::Location;
use crate::syntax::{Name, Term};

#[derive(Debug, thiserror::Error)]
pub enum VerifyError {
    #[error("gc audit failed: step {step} dereferenced collected location l{loc}")]
    TombstoneHit { step: usize, loc: u64 },
    #[error("determinism violated at step {step}: {what}")]
    Determinism { step: usize, what: String },
    #[error("independence violated at step {step}: output `{output}` updated on `{channel}`")]
    Independence {
        step: usize,
        output: Name,
        channel: Name,
    },
    #[error("productivity violated: {0}")]
    Productivity(String),
    #[error(transparent)]
    Driver(#[from] DriverError),
}

// ---------------------------------------------------------------- gc audit

/// Shadow-store bookkeeping: live bindings plus tombstones for everything
/// the machine deleted, with the step at which each was collected.
#[derive(Debug, Default)]
pub struct ShadowStore {
    tombstones: Vec<(u64, usize)>,
    current_step: usize,
    hits: Vec<(usize, u64)>,
    high_water: Vec<usize>,
}

impl MachineHooks for ShadowStore {
    fn adv_location(&mut self, loc: &Location) {
        if self.tombstones.iter().any(|(id, _)| *id == loc.id) {
            self.hits.push((self.current_step, loc.id));
        }
    }

    fn collected(&mut self, step: usize, locs: &[Location]) {
        for l in locs {
            self.tombstones.push((l.id, step));
        }
    }

    fn step_done(&mut self, step: usize, live: usize) {
        self.current_step = step + 1;
        self.high_water.push(live);
    }
}

#[derive(Debug)]
pub struct GcAuditReport {
    pub tombstone_hits: Vec<(usize, u64)>,
    /// Live heap size after each output transition (index 0 = init).
    pub heap_sizes: Vec<usize>,
    pub tombstones: usize,
}

impl GcAuditReport {
    pub fn ok(&self) -> bool {
        self.tombstone_hits.is_empty()
    }
}

/// Run the program over the events with shadow-store bookkeeping.
pub fn audit_gc(
    compiled: &Compiled,
    buffer: InputBuffer,
    events: &[InputEvent],
    cfg: MachineCfg,
) -> Result<GcAuditReport, VerifyError> {
    let mut machine = compiled.machine(buffer, cfg).map_err(DriverError::from)?;
    let mut shadow = ShadowStore::default();
    machine
        .init_with_hooks(&mut shadow)
        .map_err(DriverError::from)?;
    for ev in events {
        machine.step_input(ev.clone()).map_err(DriverError::from)?;
        machine
            .step_output_with_hooks(&mut shadow)
            .map_err(DriverError::from)?;
    }
    let report = GcAuditReport {
        tombstone_hits: shadow.hits.clone(),
        heap_sizes: shadow.high_water.clone(),
        tombstones: shadow.tombstones.len(),
    };
    if let Some((step, loc)) = report.tombstone_hits.first().copied() {
        return Err(VerifyError::TombstoneHit { step, loc });
    }
    Ok(report)
}

/// Negative control for the auditor: run with garbage collection disabled
/// and then deliberately advance a collected location. The audit must flag
/// it. Returns the tombstone hits observed.
pub fn audit_gc_fault_injection(
    compiled: &Compiled,
    buffer: InputBuffer,
    events: &[InputEvent],
) -> Result<Vec<(usize, u64)>, VerifyError> {
    let cfg = MachineCfg {
        skip_gc: true,
        ..MachineCfg::default()
    };
    let mut machine = compiled.machine(buffer, cfg).map_err(DriverError::from)?;

    // mirror what a correct machine would have collected
    struct SkewedShadow {
        inner: ShadowStore,
    }
    impl MachineHooks for SkewedShadow {
        fn adv_location(&mut self, loc: &Location) {
            self.inner.adv_location(loc);
        }
        fn step_done(&mut self, step: usize, live: usize) {
            self.inner.step_done(step, live);
        }
    }
    let mut shadow = SkewedShadow {
        inner: ShadowStore::default(),
    };

    machine
        .init_with_hooks(&mut shadow.inner)
        .map_err(DriverError::from)?;
    for ev in events {
        machine.step_input(ev.clone()).map_err(DriverError::from)?;
        // a faithful collector would delete the whole now-heap
        let step = machine.steps();
        let doomed: Vec<Location> = machine.state_now_heap_locations();
        machine
            .step_output_with_hooks(&mut shadow)
            .map_err(DriverError::from)?;
        shadow.inner.collected(step, &doomed);
    }
    // with gc disabled the stale locations are still live; a later advance
    // of one of them is exactly the bug the audit exists to catch
    if let Some((id, _)) = shadow.inner.tombstones.first().copied() {
        let _ = machine.force_adv_for_audit(id, &mut shadow.inner);
    }
    Ok(shadow.inner.hits)
}

// ----------------------------------------------------------- determinism

#[derive(Debug)]
pub struct DeterminismReport {
    pub steps: usize,
    pub state_hashes_equal: bool,
}

/// Canonical rendering of a machine state with location ids renamed by
/// first visit (outputs in order, then remaining heap cells in id order).
/// Two states are equal up to a location bijection iff their canonical
/// strings coincide.
pub fn canonical_state(machine: &Machine) -> String {
    let outputs = machine.output_map();
    let live = machine.live_locations();
    let mut order: Vec<u64> = Vec::new();
    let push = |id: u64, order: &mut Vec<u64>| {
        if !order.contains(&id) {
            order.push(id);
        }
    };
    for (_, l) in &outputs {
        push(l.id, &mut order);
    }
    for l in &live {
        push(l.id, &mut order);
    }
    let rank = |id: u64| order.iter().position(|x| *x == id).unwrap_or(usize::MAX);

    let mut s = String::new();
    for (n, l) in &outputs {
        let _ = write!(s, "{n}->#{};", rank(l.id));
    }
    for l in &live {
        let clock: Vec<&str> = l.clock.iter().map(|c| c.as_str()).collect();
        let _ = write!(s, "#{}{{{}}};", rank(l.id), clock.join(","));
    }
    for (n, v) in machine.buffer().iter() {
        let _ = write!(s, "{n}={};", term_to_string(v));
    }
    s
}

/// Two full runs compared batch-by-batch and state-by-state. The second run
/// may use a different allocator seed: batches must still agree exactly
/// (they contain only value-typed data), and states must agree up to the
/// location bijection.
pub fn check_determinism(
    compiled: &Compiled,
    buffer: InputBuffer,
    events: &[InputEvent],
    seed_a: u64,
    seed_b: u64,
) -> Result<DeterminismReport, VerifyError> {
    let mk = |seed: u64| -> Result<Machine, VerifyError> {
        let cfg = MachineCfg {
            seed,
            ..MachineCfg::default()
        };
        Ok(compiled.machine(buffer.clone(), cfg).map_err(DriverError::from)?)
    };
    let mut ma = mk(seed_a)?;
    let mut mb = mk(seed_b)?;

    let compare = |step: usize, a: &OutputBatch, b: &OutputBatch, ma: &Machine, mb: &Machine| {
        if a != b {
            return Err(VerifyError::Determinism {
                step,
                what: format!("batches differ: {a:?} vs {b:?}"),
            });
        }
        let ha = canonical_state(ma);
        let hb = canonical_state(mb);
        if ha != hb {
            return Err(VerifyError::Determinism {
                step,
                what: "state hashes differ".into(),
            });
        }
        Ok(())
    };

    let a0 = ma.init().map_err(DriverError::from)?;
    let b0 = mb.init().map_err(DriverError::from)?;
    compare(0, &a0, &b0, &ma, &mb)?;
    for (i, ev) in events.iter().enumerate() {
        let a = ma.step(ev.clone()).map_err(DriverError::from)?;
        let b = mb.step(ev.clone()).map_err(DriverError::from)?;
        compare(i + 1, &a, &b, &ma, &mb)?;
    }
    Ok(DeterminismReport {
        steps: events.len() + 1,
        state_hashes_equal: true,
    })
}

// ---------------------------------------------------------- independence

/// Assert that `output`, which also typechecks under the sub-context
/// `delta_sub` (given as its source program `sub_source`), is only updated
/// on events whose channel belongs to the sub-context, and that buffered-
/// only events always produce empty batches.
pub fn check_independence(
    compiled: &Compiled,
    sub_source_for_output: &[(Name, &str)],
    buffer: InputBuffer,
    events: &[InputEvent],
) -> Result<(), VerifyError> {
    // re-typecheck each nominated output under its smaller context
    let mut scopes: Vec<(Name, BTreeSet<Name>)> = Vec::new();
    for (output, sub_src) in sub_source_for_output {
        let sub = compile_default(sub_src)?;
        if !sub.elab.outputs.iter().any(|o| &o.name == output) {
            return Err(VerifyError::Productivity(format!(
                "sub-program does not define output `{output}`"
            )));
        }
        let chans: BTreeSet<Name> = sub.elab.delta.iter().map(|(n, _, _)| n.clone()).collect();
        scopes.push((output.clone(), chans));
    }

    let batches = compiled
        .run(buffer, events)
        .map_err(DriverError::from)?;
    for (i, ev) in events.iter().enumerate() {
        let batch = &batches[i + 1];
        let class = compiled
            .elab
            .delta
            .lookup(&ev.channel)
            .map(|(c, _)| c)
            .expect("event channel declared");
        if class == ChannelClass::BufferedOnly && !batch.is_empty() {
            return Err(VerifyError::Independence {
                step: i + 1,
                output: batch[0].0.clone(),
                channel: ev.channel.clone(),
            });
        }
        for (output, chans) in &scopes {
            if batch.iter().any(|(n, _)| n == output) && !chans.contains(&ev.channel) {
                return Err(VerifyError::Independence {
                    step: i + 1,
                    output: output.clone(),
                    channel: ev.channel.clone(),
                });
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------- productivity

/// The fuzzing input context: two push channels, a buffered-push numeric
/// channel, a buffered-push float channel named `sample`, and a
/// buffered-only float channel.
pub const FUZZ_INPUTS: &str = "inputs\n  up : p Unit\n  k : p Nat\n  m : bp Nat\n  sample : bp Float\n  time : b Float\n";

#[derive(Debug)]
pub struct FuzzReport {
    pub programs: usize,
    pub steps_per_program: usize,
    pub failures: Vec<FuzzFailure>,
}

#[derive(Debug)]
pub struct FuzzFailure {
    pub source: String,
    pub events: Vec<InputEvent>,
    pub error: String,
}

/// Generate a random `Sig Nat` expression from combinator templates.
fn gen_sig_nat(rng: &mut StdRng, depth: u32, out: &mut String) {
    let choice = if depth == 0 { rng.random_range(0..3) } else { rng.random_range(0..8) };
    match choice {
        0 => {
            let _ = write!(out, "const {}", rng.random_range(0..5));
        }
        1 => {
            let _ = write!(out, "count sigAwait_up {}", rng.random_range(0..3));
        }
        2 => {
            let _ = write!(
                out,
                "scanAwait (box (\\x. \\a. x + a)) {} sigAwait_k",
                rng.random_range(0..3)
            );
        }
        3 => out.push_str("sum sig_m"),
        4 => {
            out.push_str("map (box (\\n. suc n)) (");
            gen_sig_nat(rng, depth - 1, out);
            out.push(')');
        }
        5 => {
            let _ = write!(out, "scan (box (\\x. \\a. x + a)) {} (", rng.random_range(0..3));
            gen_sig_nat(rng, depth - 1, out);
            out.push(')');
        }
        6 => {
            out.push_str("switch (");
            gen_sig_nat(rng, depth - 1, out);
            out.push_str(") (");
            gen_delayed_sig_nat(rng, depth - 1, out);
            out.push(')');
        }
        _ => {
            let _ = write!(
                out,
                "toggleSig (box (await up)) (box (count sigAwait_up)) (box const) {}",
                rng.random_range(0..3)
            );
        }
    }
}

fn gen_delayed_sig_nat(rng: &mut StdRng, depth: u32, out: &mut String) {
    let choice = if depth == 0 { rng.random_range(0..2) } else { rng.random_range(0..4) };
    match choice {
        0 => out.push_str("sigAwait_k"),
        1 => out.push_str("sigAwait_m"),
        2 => {
            out.push_str("interleave (box (\\a. \\b. a)) (");
            gen_delayed_sig_nat(rng, depth - 1, out);
            out.push_str(") (");
            gen_delayed_sig_nat(rng, depth - 1, out);
            out.push(')');
        }
        _ => {
            out.push_str("(case out (");
            gen_sig_nat(rng, depth - 1, out);
            out.push_str(") of { (h, tl) => tl })");
        }
    }
}

fn gen_sig_float(rng: &mut StdRng, depth: u32, out: &mut String) {
    match rng.random_range(0..3) {
        0 => {
            let _ = write!(out, "integral 0.0 (const {}.0)", rng.random_range(0..4));
        }
        1 => out.push_str("derivative sig_sample"),
        _ => {
            if depth > 0 {
                out.push_str("integral 1.0 (");
                gen_sig_float(rng, depth - 1, out);
                out.push(')');
            } else {
                out.push_str("sig_sample");
            }
        }
    }
}

pub fn gen_program(rng: &mut StdRng, size: u32) -> String {
    let mut src = String::from(FUZZ_INPUTS);
    src.push_str("outputs\n");
    let n_outputs = rng.random_range(1..=2);
    for i in 0..n_outputs {
        if rng.random_bool(0.75) {
            let _ = write!(src, "  o{i} : Nat = ");
            gen_sig_nat(rng, size.min(7), &mut src);
        } else {
            let _ = write!(src, "  o{i} : Float = ");
            gen_sig_float(rng, size.min(7), &mut src);
        }
        src.push('\n');
    }
    src
}

pub fn gen_events(rng: &mut StdRng, steps: usize) -> Vec<InputEvent> {
    (0..steps)
        .map(|_| match rng.random_range(0..5) {
            0 => InputEvent {
                channel: Name::new("up"),
                value: Term::Unit,
            },
            1 => InputEvent {
                channel: Name::new("k"),
                value: Term::nat(rng.random_range(0..5)),
            },
            2 => InputEvent {
                channel: Name::new("m"),
                value: Term::nat(rng.random_range(0..5)),
            },
            3 => InputEvent {
                channel: Name::new("sample"),
                value: Term::FloatLit(rng.random_range(1..10) as f64 / 10.0),
            },
            _ => InputEvent {
                channel: Name::new("time"),
                value: Term::FloatLit(rng.random_range(0..100) as f64),
            },
        })
        .collect()
}

fn try_run(source: &str, events: &[InputEvent]) -> Result<(), String> {
    let compiled = compile_default(source).map_err(|e| format!("compile failed: {e}"))?;
    let buffer = default_buffer(&compiled);
    compiled
        .run(buffer, events)
        .map(|_| ())
        .map_err(|e| format!("run failed: {e}"))
}

/// Shrink a failing case: first drop events, then drop outputs.
fn shrink(source: &str, events: &[InputEvent]) -> (String, Vec<InputEvent>) {
    let mut events: Vec<InputEvent> = events.to_vec();
    // event bisection
    let mut chunk = events.len() / 2;
    while chunk > 0 {
        let mut at = 0;
        while at + chunk <= events.len() {
            let mut candidate = events.clone();
            candidate.drain(at..at + chunk);
            if try_run(source, &candidate).is_err() {
                events = candidate;
            } else {
                at += chunk;
            }
        }
        chunk /= 2;
    }
    // output dropping
    let mut source = source.to_string();
    loop {
        let lines: Vec<&str> = source.lines().collect();
        let output_lines: Vec<usize> = lines
            .iter()
            .enumerate()
            .filter(|(_, l)| l.trim_start().starts_with('o') && l.contains('='))
            .map(|(i, _)| i)
            .collect();
        if output_lines.len() <= 1 {
            break;
        }
        let mut shrunk = false;
        for drop_ix in &output_lines {
            let candidate: String = lines
                .iter()
                .enumerate()
                .filter(|(i, _)| i != drop_ix)
                .map(|(_, l)| format!("{l}\n"))
                .collect();
            if try_run(&candidate, &events).is_err() {
                source = candidate;
                shrunk = true;
                break;
            }
        }
        if !shrunk {
            break;
        }
    }
    (source, events)
}

/// Generate `programs` random well-typed reactive programs and drive each
/// with `steps` random well-typed events. Failures are shrunk.
pub fn fuzz_productivity(seed: u64, size: u32, programs: usize, steps: usize) -> FuzzReport {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut failures = Vec::new();
    for _ in 0..programs {
        let source = gen_program(&mut rng, size);
        let events = gen_events(&mut rng, steps);
        if let Err(error) = try_run(&source, &events) {
            let (source, events) = shrink(&source, &events);
            let error = try_run(&source, &events).err().unwrap_or(error);
            failures.push(FuzzFailure {
                source,
                events,
                error,
            });
        }
    }
    FuzzReport {
        programs,
        steps_per_program: steps,
        failures,
    }
}
