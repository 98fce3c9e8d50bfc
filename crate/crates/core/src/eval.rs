//! Big-step evaluation: `⟨t, σ⟩ ⇓ ⟨v, σ'⟩` relative to an input buffer.
//!
//! The evaluator threads a store through every premise in rule order, so
//! allocation order (and therefore the whole run) is deterministic. A fuel
//! counter bounds the number of rule applications, which lets harnesses
//! distinguish divergence from stuckness on adversarial inputs.

use crate::input::InputBuffer;
use crate::pretty::term_to_string;
use crate::store::{Allocator, Clock, Location, Store};
use crate::syntax::{is_value, subst, ClockExpr, FloatPrim, Ix, Term};

pub const DEFAULT_FUEL: u64 = 10_000_000;

/// Recursion-depth guard. Big-step divergence always nests premises, so a
/// depth bound catches it before the host stack does; legitimate programs
/// at desk scale stay far below it. Matched to [`EVAL_STACK_BYTES`].
pub const MAX_DEPTH: u32 = 20_000;

/// Evaluation runs on a dedicated thread with this much (lazily committed)
/// stack, sized so that `MAX_DEPTH` nested rules fit comfortably.
pub const EVAL_STACK_BYTES: usize = 1024 * 1024 * 1024;

/// Run a computation on a thread whose stack accommodates `MAX_DEPTH`
/// nested evaluation rules.
pub fn on_eval_stack<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    std::thread::scope(|scope| {
        let handle = std::thread::Builder::new()
            .name("asyncratt-eval".into())
            .stack_size(EVAL_STACK_BYTES)
            .spawn_scoped(scope, f)
            .expect("spawn evaluation thread");
        match handle.join() {
            Ok(v) => v,
            Err(payload) => std::panic::resume_unwind(payload),
        }
    })
}

/// Why evaluation got stuck. Unreachable on typechecked programs driven by
/// the reactive machine.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum StuckKind {
    DanglingLocation,
    AdvOutsideNowHeap,
    BadSelect,
    UnboundChannelBuffer,
    IllTypedRedex,
}

#[derive(Clone, Debug)]
pub struct StuckError {
    pub kind: StuckKind,
    pub term: Term,
    pub store: Store,
}

impl std::fmt::Display for StuckError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "stuck ({:?}) at `{}` with {} live bindings",
            self.kind,
            term_to_string(&self.term),
            self.store.len()
        )
    }
}

#[derive(Clone, Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{0}")]
    Stuck(StuckError),
    #[error("fuel budget of {budget} rule applications exhausted")]
    OutOfFuel { budget: u64 },
    #[error("evaluation nested deeper than {limit} rules (likely divergence)")]
    DepthExceeded { limit: u32 },
}

impl EvalError {
    pub fn is_stuck(&self) -> bool {
        matches!(self, EvalError::Stuck(_))
    }
}

/// A successful evaluation: the value and the extended store.
#[derive(Clone, Debug)]
pub struct EvalOutcome {
    pub value: Term,
    pub store: Store,
}

/// Observation hooks for harnesses: per-rule tracing and location
/// dereferences (used by the GC auditor).
pub trait EvalObserver: Send {
    fn rule(&mut self, _rule: &'static str, _redex: &Term, _store_len: usize) {}
    fn adv_location(&mut self, _loc: &Location) {}
}

pub struct NoObserver;
impl EvalObserver for NoObserver {}

/// Evaluate a clock expression to a clock. The expression must be closed:
/// every `cl(v)` wraps a location or a channel reference.
pub fn clock_eval(theta: &ClockExpr) -> Result<Clock, Term> {
    match theta {
        ClockExpr::Of(v) => match v.as_ref() {
            Term::Loc(l) => Ok(l.clock.clone()),
            Term::Await(k) => Ok([k.clone()].into_iter().collect()),
            other => Err(other.clone()),
        },
        ClockExpr::Join(a, b) => {
            let mut s = clock_eval(a)?;
            s.extend(clock_eval(b)?);
            Ok(s)
        }
    }
}

pub struct Evaluator<'a> {
    pub buffer: &'a InputBuffer,
    pub alloc: &'a mut Allocator,
    pub fuel: u64,
    budget: u64,
    depth: u32,
    observer: Option<&'a mut dyn EvalObserver>,
}

impl<'a> Evaluator<'a> {
    pub fn new(buffer: &'a InputBuffer, alloc: &'a mut Allocator, fuel: u64) -> Self {
        Evaluator {
            buffer,
            alloc,
            fuel,
            budget: fuel,
            depth: 0,
            observer: None,
        }
    }

    pub fn with_observer(mut self, obs: &'a mut dyn EvalObserver) -> Self {
        self.observer = Some(obs);
        self
    }

    fn tick(
        &mut self,
        rule: &'static str,
        redex: &Term,
        store: &Store,
    ) -> Result<(), EvalError> {
        if let Some(obs) = self.observer.as_deref_mut() {
            obs.rule(rule, redex, store.len());
        }
        if self.fuel == 0 {
            return Err(EvalError::OutOfFuel {
                budget: self.budget,
            });
        }
        self.fuel -= 1;
        Ok(())
    }

    fn stuck<T>(&self, kind: StuckKind, term: &Term, store: Store) -> Result<T, EvalError> {
        Err(EvalError::Stuck(StuckError {
            kind,
            term: term.clone(),
            store,
        }))
    }

    pub fn eval(&mut self, t: &Term, store: Store) -> Result<(Term, Store), EvalError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            self.depth -= 1;
            return Err(EvalError::DepthExceeded { limit: MAX_DEPTH });
        }
        let result = self.eval_inner(t, store);
        self.depth -= 1;
        result
    }

    fn eval_inner(&mut self, t: &Term, store: Store) -> Result<(Term, Store), EvalError> {
        // values evaluate to themselves
        if is_value(t) {
            self.tick("value", t, &store)?;
            return Ok((t.clone(), store));
        }
        match t {
            Term::Pair(a, b) => self.eval_pair(t, a, b, store),
            Term::Proj(ix, a) => self.eval_proj(t, *ix, a, store),
            Term::Inj(ix, a) => self.eval_inj(t, *ix, a, store),
            Term::Case(scrut, x1, t1, x2, t2) => self.eval_case(t, scrut, x1, t1, x2, t2, store),
            Term::App(f, a) => self.eval_app(t, f, a, store),
            Term::Let(x, s, body) => self.eval_let(t, x, s, body, store),
            Term::Suc(a) => self.eval_suc(t, a, store),
            Term::NatRec(s, x, y, step, n) => self.eval_natrec(t, s, x, y, step, n, store),
            Term::FloatOp(op, a, b) => self.eval_floatop(t, *op, a, b, store),
            Term::Read(k) => self.eval_read(t, k, store),
            Term::Delay(theta, body) => self.eval_delay(t, theta, body, store),
            Term::Never => self.eval_never(t, store),
            Term::Adv(v) => {
                self.tick("adv", t, &store)?;
                self.advance(v, store)
            }
            Term::Select(v1, v2) => self.eval_select(t, v1, v2, store),
            Term::Unbox(a) => self.eval_unbox(t, a, store),
            Term::Fix(x, body) => self.eval_fix(t, x, body, store),
            Term::Into(a) => self.eval_into(t, a, store),
            Term::Out(a) => self.eval_out(t, a, store),
            // free variables, or value forms already handled above
            other => self.stuck(StuckKind::IllTypedRedex, other, store),
        }
    }

    fn eval_pair(
        &mut self,
        t: &Term,
        a: &Term,
        b: &Term,
        store: Store,
    ) -> Result<(Term, Store), EvalError> {
        self.tick("pair", t, &store)?;
        let (va, s1) = self.eval(a, store)?;
        let (vb, s2) = self.eval(b, s1)?;
        Ok((Term::pair(va, vb), s2))
    }

    fn eval_proj(
        &mut self,
        t: &Term,
        ix: Ix,
        a: &Term,
        store: Store,
    ) -> Result<(Term, Store), EvalError> {
        self.tick("proj", t, &store)?;
        let (v, s1) = self.eval(a, store)?;
        match v {
            Term::Pair(x, y) => Ok((
                match ix {
                    Ix::I1 => *x,
                    Ix::I2 => *y,
                },
                s1,
            )),
            _ => self.stuck(StuckKind::IllTypedRedex, t, s1),
        }
    }

    fn eval_inj(
        &mut self,
        t: &Term,
        ix: Ix,
        a: &Term,
        store: Store,
    ) -> Result<(Term, Store), EvalError> {
        self.tick("inj", t, &store)?;
        let (v, s1) = self.eval(a, store)?;
        Ok((Term::Inj(ix, Box::new(v)), s1))
    }

    #[allow(clippy::too_many_arguments)]
    fn eval_case(
        &mut self,
        t: &Term,
        scrut: &Term,
        x1: &crate::syntax::Name,
        t1: &Term,
        x2: &crate::syntax::Name,
        t2: &Term,
        store: Store,
    ) -> Result<(Term, Store), EvalError> {
        self.tick("case", t, &store)?;
        let (v, s1) = self.eval(scrut, store)?;
        match v {
            Term::Inj(Ix::I1, inner) => self.eval(&subst(t1, &inner, x1), s1),
            Term::Inj(Ix::I2, inner) => self.eval(&subst(t2, &inner, x2), s1),
            _ => self.stuck(StuckKind::IllTypedRedex, t, s1),
        }
    }

    fn eval_app(
        &mut self,
        t: &Term,
        f: &Term,
        a: &Term,
        store: Store,
    ) -> Result<(Term, Store), EvalError> {
        self.tick("app", t, &store)?;
        let (vf, s1) = self.eval(f, store)?;
        let (va, s2) = self.eval(a, s1)?;
        match vf {
            Term::Lam(x, body) => self.eval(&subst(&body, &va, &x), s2),
            _ => self.stuck(StuckKind::IllTypedRedex, t, s2),
        }
    }

    fn eval_let(
        &mut self,
        t: &Term,
        x: &crate::syntax::Name,
        s: &Term,
        body: &Term,
        store: Store,
    ) -> Result<(Term, Store), EvalError> {
        self.tick("let", t, &store)?;
        let (v, s1) = self.eval(s, store)?;
        self.eval(&subst(body, &v, x), s1)
    }

    fn eval_suc(&mut self, t: &Term, a: &Term, store: Store) -> Result<(Term, Store), EvalError> {
        self.tick("suc", t, &store)?;
        let (v, s1) = self.eval(a, store)?;
        Ok((Term::suc(v), s1))
    }

    #[allow(clippy::too_many_arguments)]
    fn eval_natrec(
        &mut self,
        t: &Term,
        s: &Term,
        x: &crate::syntax::Name,
        y: &crate::syntax::Name,
        step: &Term,
        n: &Term,
        store: Store,
    ) -> Result<(Term, Store), EvalError> {
        self.tick("natrec", t, &store)?;
        let (vn, s1) = self.eval(n, store)?;
        match vn {
            Term::Zero => self.eval(s, s1),
            Term::Suc(pred) => {
                let rec = Term::NatRec(
                    Box::new(s.clone()),
                    x.clone(),
                    y.clone(),
                    Box::new(step.clone()),
                    pred.clone(),
                );
                let (vr, s2) = self.eval(&rec, s1)?;
                let body = subst(&subst(step, &pred, x), &vr, y);
                self.eval(&body, s2)
            }
            _ => self.stuck(StuckKind::IllTypedRedex, t, s1),
        }
    }

    fn eval_floatop(
        &mut self,
        t: &Term,
        op: FloatPrim,
        a: &Term,
        b: &Term,
        store: Store,
    ) -> Result<(Term, Store), EvalError> {
        self.tick("floatop", t, &store)?;
        let (va, s1) = self.eval(a, store)?;
        let (vb, s2) = self.eval(b, s1)?;
        match (va, vb) {
            (Term::FloatLit(x), Term::FloatLit(y)) => Ok((apply_float(op, x, y), s2)),
            _ => self.stuck(StuckKind::IllTypedRedex, t, s2),
        }
    }

    fn eval_read(
        &mut self,
        t: &Term,
        k: &crate::syntax::Name,
        store: Store,
    ) -> Result<(Term, Store), EvalError> {
        self.tick("read", t, &store)?;
        match self.buffer.get(k) {
            Some(v) => Ok((v.clone(), store)),
            None => self.stuck(StuckKind::UnboundChannelBuffer, t, store),
        }
    }

    fn eval_delay(
        &mut self,
        t: &Term,
        theta: &ClockExpr,
        body: &Term,
        store: Store,
    ) -> Result<(Term, Store), EvalError> {
        self.tick("delay", t, &store)?;
        let clock = match clock_eval(theta) {
            Ok(c) => c,
            Err(_) => return self.stuck(StuckKind::IllTypedRedex, t, store),
        };
        let loc = self.alloc.alloc(clock);
        let mut s1 = store;
        s1.bind_later(loc.clone(), body.clone());
        Ok((Term::Loc(loc), s1))
    }

    fn eval_never(&mut self, t: &Term, store: Store) -> Result<(Term, Store), EvalError> {
        self.tick("never", t, &store)?;
        let loc = self.alloc.alloc(Clock::new());
        Ok((Term::Loc(loc), store))
    }

    fn eval_select(
        &mut self,
        t: &Term,
        v1: &Term,
        v2: &Term,
        store: Store,
    ) -> Result<(Term, Store), EvalError> {
        self.tick("select", t, &store)?;
        let (channel, s) = match &store {
            Store::Two { channel, .. } => (channel.clone(), store),
            Store::Single { .. } => return self.stuck(StuckKind::AdvOutsideNowHeap, t, store),
        };
        let c1 = match self.value_clock(v1) {
            Some(c) => c,
            None => return self.stuck(StuckKind::IllTypedRedex, t, s),
        };
        let c2 = match self.value_clock(v2) {
            Some(c) => c,
            None => return self.stuck(StuckKind::IllTypedRedex, t, s),
        };
        match (c1.contains(&channel), c2.contains(&channel)) {
            (true, false) => {
                let (u1, s1) = self.advance(v1, s)?;
                Ok((
                    Term::inj(Ix::I1, Term::inj(Ix::I1, Term::pair(u1, v2.clone()))),
                    s1,
                ))
            }
            (false, true) => {
                let (u2, s1) = self.advance(v2, s)?;
                Ok((
                    Term::inj(Ix::I1, Term::inj(Ix::I2, Term::pair(v1.clone(), u2))),
                    s1,
                ))
            }
            (true, true) => {
                let (u1, s1) = self.advance(v1, s)?;
                let (u2, s2) = self.advance(v2, s1)?;
                Ok((Term::inj(Ix::I2, Term::pair(u1, u2)), s2))
            }
            (false, false) => self.stuck(StuckKind::BadSelect, t, s),
        }
    }

    fn eval_unbox(&mut self, t: &Term, a: &Term, store: Store) -> Result<(Term, Store), EvalError> {
        self.tick("unbox", t, &store)?;
        let (v, s1) = self.eval(a, store)?;
        match v {
            Term::Boxed(body) => self.eval(&body, s1),
            _ => self.stuck(StuckKind::IllTypedRedex, t, s1),
        }
    }

    fn eval_fix(
        &mut self,
        t: &Term,
        x: &crate::syntax::Name,
        body: &Term,
        store: Store,
    ) -> Result<(Term, Store), EvalError> {
        self.tick("fix", t, &store)?;
        let dfix = Term::DFix(x.clone(), Box::new(body.clone()));
        self.eval(&subst(body, &dfix, x), store)
    }

    fn eval_into(&mut self, t: &Term, a: &Term, store: Store) -> Result<(Term, Store), EvalError> {
        self.tick("into", t, &store)?;
        let (v, s1) = self.eval(a, store)?;
        Ok((Term::into(v), s1))
    }

    fn eval_out(&mut self, t: &Term, a: &Term, store: Store) -> Result<(Term, Store), EvalError> {
        self.tick("out", t, &store)?;
        let (v, s1) = self.eval(a, store)?;
        match v {
            Term::Into(inner) => Ok((*inner, s1)),
            _ => self.stuck(StuckKind::IllTypedRedex, t, s1),
        }
    }

    /// The clock of a delayed value: `cl(l)` for locations, `{κ}` for channel
    /// references, the unrolled clock for delayed fixed points (which can be
    /// advanced on any tick, so `select` treats them as covering the current
    /// channel — they never appear as select arguments in typed programs).
    fn value_clock(&self, v: &Term) -> Option<Clock> {
        match v {
            Term::Loc(l) => Some(l.clock.clone()),
            Term::Await(k) => Some([k.clone()].into_iter().collect()),
            _ => None,
        }
    }

    /// `adv v` for a delayed value: channel references read the current
    /// input, locations resume the stored computation, delayed fixed points
    /// unroll.
    fn advance(&mut self, v: &Term, store: Store) -> Result<(Term, Store), EvalError> {
        match v {
            Term::Await(k) => match &store {
                Store::Two { channel, value, .. } if channel == k => {
                    Ok((value.clone(), store))
                }
                Store::Two { .. } => {
                    self.stuck(StuckKind::IllTypedRedex, &Term::adv(v.clone()), store)
                }
                Store::Single { .. } => {
                    self.stuck(StuckKind::AdvOutsideNowHeap, &Term::adv(v.clone()), store)
                }
            },
            Term::Loc(l) => {
                if let Some(obs) = self.observer.as_deref_mut() {
                    obs.adv_location(l);
                }
                match &store {
                    Store::Two { now, .. } => match now.get(l.id) {
                        Some(stored) => {
                            let stored = stored.clone();
                            self.eval(&stored, store)
                        }
                        None => self.stuck(
                            StuckKind::DanglingLocation,
                            &Term::adv(v.clone()),
                            store,
                        ),
                    },
                    Store::Single { .. } => self.stuck(
                        StuckKind::AdvOutsideNowHeap,
                        &Term::adv(v.clone()),
                        store,
                    ),
                }
            }
            Term::DFix(x, body) => {
                let dfix = v.clone();
                let unrolled = subst(body, &dfix, x);
                self.eval(&unrolled, store)
            }
            other => {
                // `adv` of a non-value or unexpected value form
                self.stuck(StuckKind::IllTypedRedex, &Term::adv(other.clone()), store)
            }
        }
    }
}

fn apply_float(op: FloatPrim, x: f64, y: f64) -> Term {
    let bool_val = |b: bool| {
        if b {
            Term::inj(Ix::I1, Term::Unit)
        } else {
            Term::inj(Ix::I2, Term::Unit)
        }
    };
    match op {
        FloatPrim::Add => Term::FloatLit(x + y),
        FloatPrim::Sub => Term::FloatLit(x - y),
        FloatPrim::Mul => Term::FloatLit(x * y),
        FloatPrim::Div => Term::FloatLit(x / y),
        FloatPrim::Eq => bool_val(x == y),
        FloatPrim::Lt => bool_val(x < y),
        FloatPrim::Le => bool_val(x <= y),
    }
}

/// Convenience entry point: evaluate a term in the given store and buffer
/// with a fresh fuel budget, on the dedicated evaluation stack.
pub fn eval(
    t: &Term,
    store: Store,
    buffer: &InputBuffer,
    alloc: &mut Allocator,
    fuel: u64,
) -> Result<EvalOutcome, EvalError> {
    on_eval_stack(move || {
        let mut ev = Evaluator::new(buffer, alloc, fuel);
        let (value, store) = ev.eval(t, store)?;
        Ok(EvalOutcome { value, store })
    })
}
