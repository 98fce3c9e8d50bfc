//! The reactive machine: initialisation, input and output transitions.
//!
//! A machine is created from an elaborated reactive program
//! `t : Δ ⇒ Γout` and an initial buffer covering exactly the buffered
//! channels. It then alternates input transitions (split the heap on the
//! updated channel) and output transitions (advance every output whose
//! pending location waits on that channel, then garbage-collect the
//! now-heap and the input value).

use crate::eval::{EvalError, EvalObserver, Evaluator, StuckError, StuckKind, DEFAULT_FUEL};
use crate::input::{value_has_type, InputBuffer, InputContext};
use crate::store::{Allocator, Location, Store};
use crate::syntax::{Name, Term, TypeExpr};

/// One input event `κ ↦ v`.
#[derive(Clone, Debug, PartialEq)]
pub struct InputEvent {
    pub channel: Name,
    pub value: Term,
}

/// The values emitted by one output transition, in declaration order.
pub type OutputBatch = Vec<(Name, Term)>;

#[derive(Debug, thiserror::Error)]
pub enum ReactiveError {
    #[error("event on undeclared channel `{0}`")]
    UnknownChannel(Name),
    #[error("ill-typed event on channel `{channel}`: value does not inhabit the declared type")]
    IllTypedEvent { channel: Name },
    #[error("initial buffer must cover exactly the buffered channels; problem with `{0}`")]
    BadInitialBuffer(Name),
    #[error("machine is not in the expected phase for this transition")]
    WrongPhase,
    #[error("output value for `{output}` is not of signal shape `v :: l`")]
    NotASignal { output: Name },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Clone, Debug)]
pub struct MachineCfg {
    pub fuel_per_step: u64,
    /// First location id handed out by the allocator; fixed for
    /// reproducibility.
    pub seed: u64,
    /// Fault injection for the GC audit: retain the now-heap instead of
    /// collecting it. Never enabled in normal operation.
    pub skip_gc: bool,
}

impl Default for MachineCfg {
    fn default() -> Self {
        MachineCfg {
            fuel_per_step: DEFAULT_FUEL,
            seed: 0,
            skip_gc: false,
        }
    }
}

/// Machine state: `⟨t⟩_ι` before initialisation, `⟨N; σ⟩_ι` afterwards.
#[derive(Clone, Debug)]
pub enum MachineState {
    Init {
        buffer: InputBuffer,
        program: Term,
    },
    Running {
        buffer: InputBuffer,
        outputs: Vec<(Name, Location)>,
        store: Store,
    },
}

/// Hooks for harnesses observing a run.
pub trait MachineHooks: Send {
    /// A location was dereferenced by `adv`.
    fn adv_location(&mut self, _loc: &Location) {}
    /// An evaluation rule fired (rule-level debug tracing).
    fn rule(&mut self, _rule: &'static str, _redex: &Term, _store_len: usize) {}
    /// An output transition collected these locations.
    fn collected(&mut self, _step: usize, _locs: &[Location]) {}
    /// An output transition finished with this many live bindings.
    fn step_done(&mut self, _step: usize, _live: usize) {}
}

pub struct NoHooks;
impl MachineHooks for NoHooks {}

struct AdvForwarder<'h> {
    hooks: &'h mut dyn MachineHooks,
}

impl EvalObserver for AdvForwarder<'_> {
    fn adv_location(&mut self, loc: &Location) {
        self.hooks.adv_location(loc);
    }

    fn rule(&mut self, rule: &'static str, redex: &Term, store_len: usize) {
        self.hooks.rule(rule, redex, store_len);
    }
}

pub struct Machine {
    pub delta: InputContext,
    pub gamma_out: Vec<(Name, TypeExpr)>,
    pub cfg: MachineCfg,
    state: MachineState,
    alloc: Allocator,
    /// Number of completed output transitions (init counts as step 0).
    steps: usize,
}

impl Machine {
    /// Validates the initial buffer: it must cover exactly the buffered
    /// channels of Δ, with well-typed values.
    pub fn new(
        program: Term,
        delta: InputContext,
        gamma_out: Vec<(Name, TypeExpr)>,
        initial_buffer: InputBuffer,
        cfg: MachineCfg,
    ) -> Result<Machine, ReactiveError> {
        for name in delta.buffered_channels() {
            let (_, ty) = delta.lookup(&name).expect("buffered channel is declared");
            match initial_buffer.get(&name) {
                Some(v) if value_has_type(v, ty) => {}
                _ => return Err(ReactiveError::BadInitialBuffer(name)),
            }
        }
        for (name, _) in initial_buffer.iter() {
            match delta.lookup(name) {
                Some((class, _)) if class.is_buffered() => {}
                _ => return Err(ReactiveError::BadInitialBuffer(name.clone())),
            }
        }
        let seed = cfg.seed;
        Ok(Machine {
            delta,
            gamma_out,
            cfg,
            state: MachineState::Init {
                buffer: initial_buffer,
                program,
            },
            alloc: Allocator::new(seed),
            steps: 0,
        })
    }

    pub fn state(&self) -> &MachineState {
        &self.state
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// The live heap of a running machine (later heap plus any pending
    /// now-heap).
    pub fn live_locations(&self) -> Vec<Location> {
        match &self.state {
            MachineState::Init { .. } => Vec::new(),
            MachineState::Running { store, .. } => {
                let mut locs: Vec<Location> = store.later().locations().cloned().collect();
                if let Some(now) = store.now() {
                    locs.extend(now.locations().cloned());
                }
                locs.sort_by_key(|l| l.id);
                locs
            }
        }
    }

    pub fn output_map(&self) -> Vec<(Name, Location)> {
        match &self.state {
            MachineState::Init { .. } => Vec::new(),
            MachineState::Running { outputs, .. } => outputs.clone(),
        }
    }

    pub fn buffer(&self) -> &InputBuffer {
        match &self.state {
            MachineState::Init { buffer, .. } | MachineState::Running { buffer, .. } => buffer,
        }
    }

    /// The initialisation transition: evaluate the program in the empty
    /// store and destructure the `Prod(Γout)` value into per-output head
    /// values and tail locations.
    pub fn init(&mut self) -> Result<OutputBatch, ReactiveError> {
        self.init_with_hooks(&mut NoHooks)
    }

    pub fn init_with_hooks(
        &mut self,
        hooks: &mut dyn MachineHooks,
    ) -> Result<OutputBatch, ReactiveError> {
        let (buffer, program) = match &self.state {
            MachineState::Init { buffer, program } => (buffer.clone(), program.clone()),
            MachineState::Running { .. } => return Err(ReactiveError::WrongPhase),
        };
        let mut forwarder = AdvForwarder { hooks };
        let fuel = self.cfg.fuel_per_step;
        let alloc = &mut self.alloc;
        let (value, store) = crate::eval::on_eval_stack(|| {
            let mut ev = Evaluator::new(&buffer, alloc, fuel).with_observer(&mut forwarder);
            ev.eval(&program, Store::empty())
        })?;

        let components = destructure_tuple(value, self.gamma_out.len());
        let mut batch = OutputBatch::new();
        let mut outputs = Vec::new();
        for ((name, _ty), comp) in self.gamma_out.iter().zip(components) {
            let (head, tail) = split_signal(comp).ok_or_else(|| ReactiveError::NotASignal {
                output: name.clone(),
            })?;
            batch.push((name.clone(), head));
            outputs.push((name.clone(), tail));
        }
        hooks.step_done(0, store.len());
        self.state = MachineState::Running {
            buffer,
            outputs,
            store,
        };
        self.steps = 1;
        Ok(batch)
    }

    /// The input transition: update the buffer if the channel is buffered
    /// and split the heap on the channel.
    pub fn step_input(&mut self, event: InputEvent) -> Result<(), ReactiveError> {
        let (class, ty) = self
            .delta
            .lookup(&event.channel)
            .ok_or_else(|| ReactiveError::UnknownChannel(event.channel.clone()))?;
        if !value_has_type(&event.value, ty) {
            return Err(ReactiveError::IllTypedEvent {
                channel: event.channel.clone(),
            });
        }
        match &mut self.state {
            MachineState::Running {
                buffer,
                store: store @ Store::Single { .. },
                ..
            } => {
                if class.is_buffered() {
                    buffer.set(event.channel.clone(), event.value.clone());
                }
                let later_heap = match store {
                    Store::Single { later } => std::mem::take(later),
                    Store::Two { .. } => unreachable!(),
                };
                let (now, later) = later_heap.split(&event.channel);
                *store = Store::Two {
                    now,
                    channel: event.channel,
                    value: event.value,
                    later,
                };
                Ok(())
            }
            _ => Err(ReactiveError::WrongPhase),
        }
    }

    /// The output transition: walk the output map in order, advancing every
    /// location that waits on the current channel, then garbage-collect.
    pub fn step_output(&mut self) -> Result<OutputBatch, ReactiveError> {
        self.step_output_with_hooks(&mut NoHooks)
    }

    pub fn step_output_with_hooks(
        &mut self,
        hooks: &mut dyn MachineHooks,
    ) -> Result<OutputBatch, ReactiveError> {
        let (buffer, outputs, store) = match &self.state {
            MachineState::Running {
                buffer,
                outputs,
                store: store @ Store::Two { .. },
            } => (buffer.clone(), outputs.clone(), store.clone()),
            _ => return Err(ReactiveError::WrongPhase),
        };
        let channel = match &store {
            Store::Two { channel, .. } => channel.clone(),
            Store::Single { .. } => unreachable!(),
        };

        let mut batch = OutputBatch::new();
        let mut new_outputs = Vec::new();
        let mut store = store;
        for (name, loc) in outputs {
            if !loc.clock.contains(&channel) {
                new_outputs.push((name, loc));
                continue;
            }
            let mut forwarder = AdvForwarder { hooks };
            let fuel = self.cfg.fuel_per_step;
            let alloc = &mut self.alloc;
            let (value, next_store) = crate::eval::on_eval_stack(|| {
                let mut ev = Evaluator::new(&buffer, alloc, fuel).with_observer(&mut forwarder);
                ev.eval(&Term::adv(Term::Loc(loc)), store)
            })?;
            store = next_store;
            let (head, tail) =
                split_signal(value).ok_or_else(|| ReactiveError::NotASignal {
                    output: name.clone(),
                })?;
            batch.push((name.clone(), head));
            new_outputs.push((name, tail));
        }

        let collected: Vec<Location> = match (&store, self.cfg.skip_gc) {
            (Store::Two { now, .. }, false) => now.locations().cloned().collect(),
            _ => Vec::new(),
        };
        let store = if self.cfg.skip_gc {
            // fault injection: keep every binding live
            match store {
                s @ Store::Single { .. } => s,
                Store::Two { now, later, .. } => {
                    let mut merged = later;
                    for (l, t) in now.iter() {
                        merged.insert(l.clone(), t.clone());
                    }
                    Store::Single { later: merged }
                }
            }
        } else {
            store.gc()
        };
        hooks.collected(self.steps, &collected);
        hooks.step_done(self.steps, store.len());
        self.state = MachineState::Running {
            buffer,
            outputs: new_outputs,
            store,
        };
        self.steps += 1;
        Ok(batch)
    }

    /// One full input/output step.
    pub fn step(&mut self, event: InputEvent) -> Result<OutputBatch, ReactiveError> {
        self.step_input(event)?;
        self.step_output()
    }

    /// The locations currently in the now-heap (between an input and an
    /// output transition). Used by audit harnesses.
    pub fn state_now_heap_locations(&self) -> Vec<Location> {
        match &self.state {
            MachineState::Running { store, .. } => store
                .now()
                .map(|h| h.locations().cloned().collect())
                .unwrap_or_default(),
            MachineState::Init { .. } => Vec::new(),
        }
    }

    /// Audit-only: evaluate `adv l` for a live location against the current
    /// store, reporting the dereference through the hooks. Drives the
    /// negative control of the GC audit (a machine variant that skipped
    /// collection and then reads).
    pub fn force_adv_for_audit(
        &mut self,
        loc_id: u64,
        hooks: &mut dyn MachineHooks,
    ) -> Result<(), ReactiveError> {
        let (buffer, store) = match &self.state {
            MachineState::Running { buffer, store, .. } => (buffer.clone(), store.clone()),
            MachineState::Init { .. } => return Err(ReactiveError::WrongPhase),
        };
        let loc = store
            .later()
            .locations()
            .chain(store.now().map(|h| h.locations()).into_iter().flatten())
            .find(|l| l.id == loc_id)
            .cloned()
            .ok_or(ReactiveError::WrongPhase)?;
        // expose the stale binding as a now-heap so the read goes through
        let (now, later) = match store {
            Store::Single { later } => {
                let channel = loc.clock.iter().next().cloned().unwrap_or_else(|| {
                    self.delta
                        .push_channels()
                        .first()
                        .cloned()
                        .unwrap_or_else(|| Name::new("_"))
                });
                let (now, later) = later.split(&channel);
                (
                    Store::Two {
                        now,
                        channel,
                        value: Term::Unit,
                        later: later.clone(),
                    },
                    later,
                )
            }
            two @ Store::Two { .. } => {
                let later = two.later().clone();
                (two, later)
            }
        };
        let _ = later;
        let mut forwarder = AdvForwarder { hooks };
        let fuel = self.cfg.fuel_per_step;
        let alloc = &mut self.alloc;
        crate::eval::on_eval_stack(|| {
            let mut ev = Evaluator::new(&buffer, alloc, fuel).with_observer(&mut forwarder);
            let _ = ev.eval(&Term::adv(Term::Loc(loc)), now);
        });
        Ok(())
    }
}

/// Run a program to completion on a finite event script, returning the init
/// batch followed by one batch per event.
pub fn run(
    program: Term,
    delta: InputContext,
    gamma_out: Vec<(Name, TypeExpr)>,
    initial_buffer: InputBuffer,
    events: &[InputEvent],
    cfg: MachineCfg,
) -> Result<Vec<OutputBatch>, ReactiveError> {
    let mut machine = Machine::new(program, delta, gamma_out, initial_buffer, cfg)?;
    let mut batches = vec![machine.init()?];
    for ev in events {
        batches.push(machine.step(ev.clone())?);
    }
    Ok(batches)
}

/// Destructure the right-nested tuple encoding of `Prod(Γout)`.
fn destructure_tuple(value: Term, arity: usize) -> Vec<Term> {
    let mut out = Vec::with_capacity(arity);
    let mut rest = value;
    for _ in 1..arity {
        match rest {
            Term::Pair(a, b) => {
                out.push(*a);
                rest = *b;
            }
            other => {
                out.push(other);
                return out;
            }
        }
    }
    if arity > 0 {
        out.push(rest);
    }
    out
}

/// Split a signal value `v :: l` into head value and tail location.
fn split_signal(value: Term) -> Option<(Term, Location)> {
    match value {
        Term::Into(inner) => match *inner {
            Term::Pair(head, tail) => match *tail {
                Term::Loc(l) => Some((*head, l)),
                _ => None,
            },
            _ => None,
        },
        _ => None,
    }
}

/// Helper for harnesses: a `StuckError` with a given kind, for fault
/// injection assertions.
pub fn is_stuck_with(err: &ReactiveError, kind: StuckKind) -> bool {
    matches!(err, ReactiveError::Eval(EvalError::Stuck(StuckError { kind: k, .. })) if *k == kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::input::ChannelClass;
    use crate::syntax::ClockExpr;

    fn delta_up_toggle() -> InputContext {
        [
            (Name::new("up"), ChannelClass::PushOnly, TypeExpr::Unit),
            (Name::new("toggle"), ChannelClass::PushOnly, TypeExpr::Unit),
        ]
        .into_iter()
        .collect()
    }

    /// `fix s. into ⟨0, delay_{cl (await up)} (let _ = adv (await up) in adv s)⟩`
    /// — a constant-0 signal that re-emits on every `up`.
    fn zero_on_up() -> Term {
        Term::fix(
            "s",
            Term::cons(
                Term::Zero,
                Term::delay(
                    ClockExpr::of(Term::Await(Name::new("up"))),
                    Term::let_(
                        Name::new("_u"),
                        Term::adv(Term::Await(Name::new("up"))),
                        Term::adv(Term::var("s")),
                    ),
                ),
            ),
        )
    }

    #[test]
    fn init_then_skip_and_compute() {
        let delta = delta_up_toggle();
        let gamma = vec![(Name::new("x"), TypeExpr::Nat)];
        let mut m = Machine::new(
            zero_on_up(),
            delta,
            gamma,
            InputBuffer::new(),
            MachineCfg::default(),
        )
        .unwrap();
        let b0 = m.init().unwrap();
        assert_eq!(b0, vec![(Name::new("x"), Term::Zero)]);

        // toggle does not trigger the output
        let b1 = m
            .step(InputEvent {
                channel: Name::new("toggle"),
                value: Term::Unit,
            })
            .unwrap();
        assert!(b1.is_empty());

        // up does
        let b2 = m
            .step(InputEvent {
                channel: Name::new("up"),
                value: Term::Unit,
            })
            .unwrap();
        assert_eq!(b2, vec![(Name::new("x"), Term::Zero)]);
    }

    #[test]
    fn events_on_undeclared_channels_are_rejected() {
        let mut m = Machine::new(
            zero_on_up(),
            delta_up_toggle(),
            vec![(Name::new("x"), TypeExpr::Nat)],
            InputBuffer::new(),
            MachineCfg::default(),
        )
        .unwrap();
        m.init().unwrap();
        let err = m
            .step(InputEvent {
                channel: Name::new("nope"),
                value: Term::Unit,
            })
            .unwrap_err();
        assert!(matches!(err, ReactiveError::UnknownChannel(_)));
    }

    #[test]
    fn ill_typed_events_are_rejected() {
        let mut m = Machine::new(
            zero_on_up(),
            delta_up_toggle(),
            vec![(Name::new("x"), TypeExpr::Nat)],
            InputBuffer::new(),
            MachineCfg::default(),
        )
        .unwrap();
        m.init().unwrap();
        let err = m
            .step(InputEvent {
                channel: Name::new("up"),
                value: Term::nat(3),
            })
            .unwrap_err();
        assert!(matches!(err, ReactiveError::IllTypedEvent { .. }));
    }

    #[test]
    fn initial_buffer_must_cover_buffered_channels_exactly() {
        let delta: InputContext = [
            (Name::new("up"), ChannelClass::PushOnly, TypeExpr::Unit),
            (Name::new("time"), ChannelClass::BufferedOnly, TypeExpr::Float),
        ]
        .into_iter()
        .collect();
        // missing `time`
        let err = Machine::new(
            zero_on_up(),
            delta.clone(),
            vec![(Name::new("x"), TypeExpr::Nat)],
            InputBuffer::new(),
            MachineCfg::default(),
        )
        .err()
        .unwrap();
        assert!(matches!(err, ReactiveError::BadInitialBuffer(_)));
        // extra entry on a push-only channel
        let buf: InputBuffer = [
            (Name::new("time"), Term::FloatLit(0.0)),
            (Name::new("up"), Term::Unit),
        ]
        .into_iter()
        .collect();
        let err = Machine::new(
            zero_on_up(),
            delta,
            vec![(Name::new("x"), TypeExpr::Nat)],
            buf,
            MachineCfg::default(),
        )
        .err()
        .unwrap();
        assert!(matches!(err, ReactiveError::BadInitialBuffer(_)));
    }

    #[test]
    fn buffered_only_events_update_buffer_and_emit_nothing() {
        let delta: InputContext = [
            (Name::new("up"), ChannelClass::PushOnly, TypeExpr::Unit),
            (Name::new("time"), ChannelClass::BufferedOnly, TypeExpr::Float),
        ]
        .into_iter()
        .collect();
        let buf: InputBuffer = [(Name::new("time"), Term::FloatLit(0.0))].into_iter().collect();
        let mut m = Machine::new(
            zero_on_up(),
            delta,
            vec![(Name::new("x"), TypeExpr::Nat)],
            buf,
            MachineCfg::default(),
        )
        .unwrap();
        m.init().unwrap();
        let b = m
            .step(InputEvent {
                channel: Name::new("time"),
                value: Term::FloatLit(9.5),
            })
            .unwrap();
        assert!(b.is_empty());
        assert_eq!(m.buffer().get(&Name::new("time")), Some(&Term::FloatLit(9.5)));
    }
}
