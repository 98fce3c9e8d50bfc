//! The modal type system.
//!
//! Bidirectional discipline: introductions are checked against an expected
//! type, eliminations and variables infer. Top-level definitions carry
//! schemes (schematic type variables with optional stability constraints);
//! a use site instantiates the scheme with fresh unification variables and
//! re-checks the stability constraints once the instantiation has been
//! solved.
//!
//! Contexts are ordered sequences of variable bindings and at most one tick
//! `✓_θ`. The variable rule only admits a binding whose suffix is tick-free
//! or whose type is stable; `box` and `fix` check their bodies in the
//! stabilized context `Γ^□` which drops ticks and non-stable bindings.

use std::collections::BTreeSet;

use crate::input::InputContext;
use crate::pretty::{clock_to_string, term_to_string, type_to_string};
use crate::syntax::{
    contains_machine_forms, is_value, is_value_type, ClockExpr, Ix, Name, Term, TypeExpr,
};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TypeErrorKind {
    UnboundVariable,
    VariableCrossesTick,
    TickInLambdaContext,
    SecondTick,
    ClockMismatch,
    NotStable,
    NotValueType,
    ChannelClassMismatch,
    Mismatch,
    CannotInfer,
}

#[derive(Clone, Debug, thiserror::Error)]
#[error("{kind:?}: {message}{}", match .context {
    Some(c) => format!(" (in `{c}`)"),
    None => String::new(),
})]
pub struct TypeError {
    pub kind: TypeErrorKind,
    pub message: String,
    /// The definition or output being checked when the error arose.
    pub context: Option<Name>,
}

impl TypeError {
    fn new(kind: TypeErrorKind, message: impl Into<String>) -> Self {
        TypeError {
            kind,
            message: message.into(),
            context: None,
        }
    }
}

type Tc<T> = Result<T, TypeError>;

/// A top-level type scheme: schematic variables, the subset constrained to
/// be stable, and the signature body.
#[derive(Clone, Debug, PartialEq)]
pub struct Scheme {
    pub vars: Vec<Name>,
    pub stable: Vec<Name>,
    pub ty: TypeExpr,
}

impl Scheme {
    pub fn monomorphic(ty: TypeExpr) -> Self {
        Scheme {
            vars: Vec::new(),
            stable: Vec::new(),
            ty,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CtxEntry {
    Var(Name, TypeExpr),
    Tick(ClockExpr),
}

/// An ordered typing context.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TypingContext {
    pub entries: Vec<CtxEntry>,
}

impl TypingContext {
    pub fn new() -> Self {
        TypingContext::default()
    }

    pub fn push_var(&mut self, n: Name, ty: TypeExpr) {
        self.entries.push(CtxEntry::Var(n, ty));
    }

    pub fn push_tick(&mut self, theta: ClockExpr) {
        self.entries.push(CtxEntry::Tick(theta));
    }

    pub fn pop(&mut self) {
        self.entries.pop();
    }

    pub fn tick_position(&self) -> Option<usize> {
        self.entries
            .iter()
            .position(|e| matches!(e, CtxEntry::Tick(_)))
    }

    pub fn tick_free(&self) -> bool {
        self.tick_position().is_none()
    }

    /// The context before the tick, and the tick's clock.
    pub fn split_at_tick(&self) -> Option<(TypingContext, &ClockExpr)> {
        let ix = self.tick_position()?;
        let prefix = TypingContext {
            entries: self.entries[..ix].to_vec(),
        };
        match &self.entries[ix] {
            CtxEntry::Tick(theta) => Some((prefix, theta)),
            CtxEntry::Var(..) => unreachable!(),
        }
    }

    pub fn lookup(&self, n: &Name) -> Option<(usize, &TypeExpr)> {
        self.entries
            .iter()
            .enumerate()
            .rev()
            .find_map(|(i, e)| match e {
                CtxEntry::Var(m, ty) if m == n => Some((i, ty)),
                _ => None,
            })
    }
}

/// The environment of checked top-level definitions (their boxed values are
/// bound by the machine's let-chain, so a reference sees `Box σ`).
pub type TopEnv = Vec<(Name, Scheme)>;

enum StableWhy {
    Crossing(Name),
    Constraint(Name, Name),
}

struct Deferred {
    ty: TypeExpr,
    why: StableWhy,
}

pub struct Checker<'a> {
    delta: &'a InputContext,
    top: &'a TopEnv,
    metas: Vec<Option<TypeExpr>>,
    /// rigid type variables assumed stable by the current definition's
    /// constraints
    assumed: BTreeSet<Name>,
    deferred: Vec<Deferred>,
}

impl<'a> Checker<'a> {
    pub fn new(delta: &'a InputContext, top: &'a TopEnv) -> Self {
        Checker {
            delta,
            top,
            metas: Vec::new(),
            assumed: BTreeSet::new(),
            deferred: Vec::new(),
        }
    }

    // ---------------- unification ----------------

    fn fresh_meta(&mut self) -> TypeExpr {
        let id = self.metas.len() as u32;
        self.metas.push(None);
        TypeExpr::Meta(id)
    }

    fn shallow(&self, ty: &TypeExpr) -> TypeExpr {
        let mut t = ty.clone();
        while let TypeExpr::Meta(id) = t {
            match &self.metas[id as usize] {
                Some(sol) => t = sol.clone(),
                None => break,
            }
        }
        t
    }

    pub fn resolve(&self, ty: &TypeExpr) -> TypeExpr {
        let t = self.shallow(ty);
        match t {
            TypeExpr::Unit | TypeExpr::Nat | TypeExpr::Float | TypeExpr::TypeVar(_) => t,
            TypeExpr::Meta(_) => t,
            TypeExpr::Prod(a, b) => TypeExpr::prod(self.resolve(&a), self.resolve(&b)),
            TypeExpr::Sum(a, b) => TypeExpr::sum(self.resolve(&a), self.resolve(&b)),
            TypeExpr::Fun(a, b) => TypeExpr::fun(self.resolve(&a), self.resolve(&b)),
            TypeExpr::DelayExist(a) => TypeExpr::delay_exist(self.resolve(&a)),
            TypeExpr::DelayAny(a) => TypeExpr::delay_any(self.resolve(&a)),
            TypeExpr::Boxed(a) => TypeExpr::boxed(self.resolve(&a)),
            TypeExpr::FixRec(n, a) => TypeExpr::FixRec(n, Box::new(self.resolve(&a))),
        }
    }

    fn occurs(&self, id: u32, ty: &TypeExpr) -> bool {
        match self.shallow(ty) {
            TypeExpr::Meta(j) => j == id,
            TypeExpr::Prod(a, b) | TypeExpr::Sum(a, b) | TypeExpr::Fun(a, b) => {
                self.occurs(id, &a) || self.occurs(id, &b)
            }
            TypeExpr::DelayExist(a) | TypeExpr::DelayAny(a) | TypeExpr::Boxed(a) => {
                self.occurs(id, &a)
            }
            TypeExpr::FixRec(_, a) => self.occurs(id, &a),
            _ => false,
        }
    }

    fn mismatch(&self, want: &TypeExpr, got: &TypeExpr) -> TypeError {
        TypeError::new(
            TypeErrorKind::Mismatch,
            format!(
                "expected `{}`, found `{}`",
                type_to_string(&self.resolve(want)),
                type_to_string(&self.resolve(got))
            ),
        )
    }

    pub fn unify(&mut self, a: &TypeExpr, b: &TypeExpr) -> Tc<()> {
        self.unify_in(a, b, &mut Vec::new())
    }

    fn unify_in(&mut self, a: &TypeExpr, b: &TypeExpr, binders: &mut Vec<(Name, Name)>) -> Tc<()> {
        let a = self.shallow(a);
        let b = self.shallow(b);
        match (&a, &b) {
            (TypeExpr::Meta(i), _) => {
                if let TypeExpr::Meta(j) = b {
                    if j == *i {
                        return Ok(());
                    }
                }
                if self.occurs(*i, &b) {
                    return Err(self.mismatch(&a, &b));
                }
                self.metas[*i as usize] = Some(b);
                Ok(())
            }
            (_, TypeExpr::Meta(_)) => self.unify_in(&b, &a, binders),
            (TypeExpr::Unit, TypeExpr::Unit)
            | (TypeExpr::Nat, TypeExpr::Nat)
            | (TypeExpr::Float, TypeExpr::Float) => Ok(()),
            (TypeExpr::TypeVar(x), TypeExpr::TypeVar(y)) => {
                let bound = binders.iter().rev().find(|(l, r)| l == x || r == y);
                let ok = match bound {
                    Some((l, r)) => l == x && r == y,
                    None => x == y,
                };
                if ok {
                    Ok(())
                } else {
                    Err(self.mismatch(&a, &b))
                }
            }
            (TypeExpr::Prod(a1, a2), TypeExpr::Prod(b1, b2))
            | (TypeExpr::Sum(a1, a2), TypeExpr::Sum(b1, b2))
            | (TypeExpr::Fun(a1, a2), TypeExpr::Fun(b1, b2)) => {
                self.unify_in(a1, b1, binders)?;
                self.unify_in(a2, b2, binders)
            }
            (TypeExpr::DelayExist(a1), TypeExpr::DelayExist(b1))
            | (TypeExpr::DelayAny(a1), TypeExpr::DelayAny(b1))
            | (TypeExpr::Boxed(a1), TypeExpr::Boxed(b1)) => self.unify_in(a1, b1, binders),
            (TypeExpr::FixRec(x, a1), TypeExpr::FixRec(y, b1)) => {
                binders.push((x.clone(), y.clone()));
                let r = self.unify_in(a1, b1, binders);
                binders.pop();
                r
            }
            _ => Err(self.mismatch(&a, &b)),
        }
    }

    // ---------------- stability ----------------

    /// Stability with rigid variables: a schematic variable counts as stable
    /// iff the current definition assumed `Stable` for it.
    fn stable_here(&self, ty: &TypeExpr) -> bool {
        match self.shallow(ty) {
            TypeExpr::Unit | TypeExpr::Nat | TypeExpr::Float => true,
            TypeExpr::Prod(a, b) | TypeExpr::Sum(a, b) => {
                self.stable_here(&a) && self.stable_here(&b)
            }
            TypeExpr::DelayAny(_) | TypeExpr::Boxed(_) => true,
            TypeExpr::TypeVar(n) => self.assumed.contains(&n),
            _ => false,
        }
    }

    fn require_stable(&mut self, ty: &TypeExpr, why: StableWhy) -> Tc<()> {
        let r = self.resolve(ty);
        if r.contains_meta() {
            self.deferred.push(Deferred { ty: r, why });
            Ok(())
        } else if self.stable_here(&r) {
            Ok(())
        } else {
            Err(stability_error(&r, &why))
        }
    }

    /// Re-check stability obligations whose types contained unification
    /// variables when they were raised. Called once a definition or output
    /// is fully checked.
    pub fn solve_deferred(&mut self) -> Tc<()> {
        let deferred = std::mem::take(&mut self.deferred);
        for d in deferred {
            let r = self.resolve(&d.ty);
            if r.contains_meta() {
                return Err(TypeError::new(
                    TypeErrorKind::CannotInfer,
                    format!(
                        "cannot decide stability of `{}`: underdetermined type",
                        type_to_string(&r)
                    ),
                ));
            }
            if !self.stable_here(&r) {
                return Err(stability_error(&r, &d.why));
            }
        }
        Ok(())
    }

    /// `Γ^□`: drop ticks and non-stable bindings.
    pub fn stabilize(&mut self, ctx: &TypingContext) -> TypingContext {
        let entries = ctx
            .entries
            .iter()
            .filter(|e| match e {
                CtxEntry::Tick(_) => false,
                CtxEntry::Var(_, ty) => {
                    let r = self.resolve(ty);
                    // an undetermined type cannot be assumed stable
                    !r.contains_meta() && self.stable_here(&r)
                }
            })
            .cloned()
            .collect();
        TypingContext { entries }
    }

    // ---------------- clocks ----------------

    /// `Γ ⊢ θ`: every `cl v` must have `v : O A` in the context.
    pub fn check_clock(&mut self, ctx: &TypingContext, theta: &ClockExpr) -> Tc<()> {
        for atom in theta.atoms() {
            let ty = self.infer(ctx, atom)?;
            let r = self.shallow(&ty);
            match r {
                TypeExpr::DelayExist(_) => {}
                TypeExpr::Meta(_) => {
                    let inner = self.fresh_meta();
                    self.unify(&r, &TypeExpr::delay_exist(inner))?;
                }
                other => {
                    return Err(TypeError::new(
                        TypeErrorKind::Mismatch,
                        format!(
                            "clock argument `{}` has type `{}`, which is not a delayed type",
                            term_to_string(atom),
                            type_to_string(&self.resolve(&other))
                        ),
                    ))
                }
            }
        }
        Ok(())
    }

    fn clocks_equal(&mut self, ctx_clock: &ClockExpr, want: &ClockExpr) -> Tc<()> {
        if ctx_clock.aci_equal(want) {
            Ok(())
        } else {
            Err(TypeError::new(
                TypeErrorKind::ClockMismatch,
                format!(
                    "tick clock `{}` does not match `{}`",
                    clock_to_string(ctx_clock),
                    clock_to_string(want)
                ),
            ))
        }
    }

    // ---------------- inference ----------------

    pub fn infer(&mut self, ctx: &TypingContext, t: &Term) -> Tc<TypeExpr> {
        match t {
            Term::Var(n) => {
                if let Some((ix, ty)) = ctx.lookup(n) {
                    let ty = ty.clone();
                    let suffix_has_tick = ctx.entries[ix + 1..]
                        .iter()
                        .any(|e| matches!(e, CtxEntry::Tick(_)));
                    if suffix_has_tick {
                        self.require_stable(&ty, StableWhy::Crossing(n.clone()))?;
                    }
                    return Ok(ty);
                }
                if let Some((_, scheme)) = self.top.iter().find(|(m, _)| m == n) {
                    let scheme = scheme.clone();
                    let inst = self.instantiate(&scheme, n);
                    return Ok(TypeExpr::boxed(inst));
                }
                Err(TypeError::new(
                    TypeErrorKind::UnboundVariable,
                    format!("unbound variable `{n}`"),
                ))
            }
            Term::Unit => Ok(TypeExpr::Unit),
            Term::Zero => Ok(TypeExpr::Nat),
            Term::Suc(a) => {
                self.check(ctx, a, &TypeExpr::Nat)?;
                Ok(TypeExpr::Nat)
            }
            Term::FloatLit(_) => Ok(TypeExpr::Float),
            Term::FloatOp(op, a, b) => {
                self.check(ctx, a, &TypeExpr::Float)?;
                self.check(ctx, b, &TypeExpr::Float)?;
                Ok(if op.is_comparison() {
                    TypeExpr::bool_sum()
                } else {
                    TypeExpr::Float
                })
            }
            Term::Lam(..) => Err(TypeError::new(
                TypeErrorKind::CannotInfer,
                "cannot infer the type of a bare lambda; annotate the definition",
            )),
            Term::Pair(a, b) => {
                let ta = self.infer(ctx, a)?;
                let tb = self.infer(ctx, b)?;
                Ok(TypeExpr::prod(ta, tb))
            }
            Term::Inj(..) => Err(TypeError::new(
                TypeErrorKind::CannotInfer,
                "cannot infer the sum type of an injection",
            )),
            Term::Proj(ix, a) => {
                let ta = self.infer(ctx, a)?;
                let r = self.shallow(&ta);
                let (t1, t2) = match r {
                    TypeExpr::Prod(x, y) => (*x, *y),
                    TypeExpr::Meta(_) => {
                        let x = self.fresh_meta();
                        let y = self.fresh_meta();
                        self.unify(&r, &TypeExpr::prod(x.clone(), y.clone()))?;
                        (x, y)
                    }
                    other => {
                        return Err(TypeError::new(
                            TypeErrorKind::Mismatch,
                            format!(
                                "projection from non-product `{}`",
                                type_to_string(&self.resolve(&other))
                            ),
                        ))
                    }
                };
                Ok(match ix {
                    Ix::I1 => t1,
                    Ix::I2 => t2,
                })
            }
            Term::App(f, a) => {
                let tf = self.infer(ctx, f)?;
                let r = self.shallow(&tf);
                let (param, result) = match r {
                    TypeExpr::Fun(p, q) => (*p, *q),
                    TypeExpr::Meta(_) => {
                        let p = self.fresh_meta();
                        let q = self.fresh_meta();
                        self.unify(&r, &TypeExpr::fun(p.clone(), q.clone()))?;
                        (p, q)
                    }
                    other => {
                        return Err(TypeError::new(
                            TypeErrorKind::Mismatch,
                            format!(
                                "application of non-function `{}`",
                                type_to_string(&self.resolve(&other))
                            ),
                        ))
                    }
                };
                self.check(ctx, a, &param)?;
                Ok(result)
            }
            Term::Let(x, s, body) => {
                let ts = self.infer(ctx, s)?;
                let mut ctx2 = ctx.clone();
                ctx2.push_var(x.clone(), ts);
                self.infer(&ctx2, body)
            }
            Term::Case(s, x1, t1, x2, t2) => {
                let (ta, tb) = self.infer_sum(ctx, s)?;
                let mut c1 = ctx.clone();
                c1.push_var(x1.clone(), ta);
                let r1 = self.infer(&c1, t1)?;
                let mut c2 = ctx.clone();
                c2.push_var(x2.clone(), tb);
                self.check(&c2, t2, &r1)?;
                Ok(r1)
            }
            Term::NatRec(s, x, y, step, n) => {
                let ta = self.infer(ctx, s)?;
                let mut c = ctx.clone();
                c.push_var(x.clone(), TypeExpr::Nat);
                c.push_var(y.clone(), ta.clone());
                self.check(&c, step, &ta)?;
                self.check(ctx, n, &TypeExpr::Nat)?;
                Ok(ta)
            }
            Term::Delay(theta, body) => {
                self.check_clock(ctx, theta)?;
                if !ctx.tick_free() {
                    return Err(TypeError::new(
                        TypeErrorKind::SecondTick,
                        "delay under an existing tick: contexts have at most one tick",
                    ));
                }
                let mut ctx2 = ctx.clone();
                ctx2.push_tick(theta.clone());
                let ta = self.infer(&ctx2, body)?;
                Ok(TypeExpr::delay_exist(ta))
            }
            Term::Adv(v) => self.infer_adv(ctx, v),
            Term::Select(v1, v2) => self.infer_select(ctx, v1, v2),
            Term::Never => Err(TypeError::new(
                TypeErrorKind::CannotInfer,
                "`never` needs an expected delayed type",
            )),
            Term::Await(k) => match self.delta.lookup(k) {
                Some((class, ty)) => {
                    if class.is_push() {
                        Ok(TypeExpr::delay_exist(ty.clone()))
                    } else {
                        Err(TypeError::new(
                            TypeErrorKind::ChannelClassMismatch,
                            format!("`await {k}` needs a push channel, but `{k}` is buffered-only"),
                        ))
                    }
                }
                None => Err(TypeError::new(
                    TypeErrorKind::UnboundVariable,
                    format!("unknown input channel `{k}`"),
                )),
            },
            Term::Read(k) => match self.delta.lookup(k) {
                Some((class, ty)) => {
                    if class.is_buffered() {
                        Ok(ty.clone())
                    } else {
                        Err(TypeError::new(
                            TypeErrorKind::ChannelClassMismatch,
                            format!("`read {k}` needs a buffered channel, but `{k}` is push-only"),
                        ))
                    }
                }
                None => Err(TypeError::new(
                    TypeErrorKind::UnboundVariable,
                    format!("unknown input channel `{k}`"),
                )),
            },
            Term::Boxed(body) => {
                let stab = self.stabilize(ctx);
                let ta = self.infer(&stab, body)?;
                Ok(TypeExpr::boxed(ta))
            }
            Term::Unbox(a) => {
                let ta = self.infer(ctx, a)?;
                let r = self.shallow(&ta);
                match r {
                    TypeExpr::Boxed(inner) => Ok(*inner),
                    TypeExpr::Meta(_) => {
                        let inner = self.fresh_meta();
                        self.unify(&r, &TypeExpr::boxed(inner.clone()))?;
                        Ok(inner)
                    }
                    other => Err(TypeError::new(
                        TypeErrorKind::Mismatch,
                        format!(
                            "unbox of non-boxed `{}`",
                            type_to_string(&self.resolve(&other))
                        ),
                    )),
                }
            }
            Term::Fix(..) => Err(TypeError::new(
                TypeErrorKind::CannotInfer,
                "cannot infer the type of a fixed point; annotate the definition",
            )),
            Term::Into(_) => Err(TypeError::new(
                TypeErrorKind::CannotInfer,
                "cannot infer the recursive type of `into`",
            )),
            Term::Out(a) => {
                let ta = self.infer(ctx, a)?;
                let r = self.shallow(&ta);
                match r.unfold_fix() {
                    Some(unfolded) => Ok(unfolded),
                    None => Err(TypeError::new(
                        TypeErrorKind::Mismatch,
                        format!(
                            "`out` of non-recursive type `{}`",
                            type_to_string(&self.resolve(&r))
                        ),
                    )),
                }
            }
            Term::Loc(_) | Term::DFix(..) => Err(TypeError::new(
                TypeErrorKind::Mismatch,
                "machine-only term in source program",
            )),
        }
    }

    fn infer_sum(&mut self, ctx: &TypingContext, s: &Term) -> Tc<(TypeExpr, TypeExpr)> {
        let ts = self.infer(ctx, s)?;
        let r = self.shallow(&ts);
        match r {
            TypeExpr::Sum(a, b) => Ok((*a, *b)),
            TypeExpr::Meta(_) => {
                let a = self.fresh_meta();
                let b = self.fresh_meta();
                self.unify(&r, &TypeExpr::sum(a.clone(), b.clone()))?;
                Ok((a, b))
            }
            other => Err(TypeError::new(
                TypeErrorKind::Mismatch,
                format!(
                    "case scrutinee has non-sum type `{}`",
                    type_to_string(&self.resolve(&other))
                ),
            )),
        }
    }

    /// `adv v`: for `v : O A` the context must be `Γ, ✓_{cl v}, Γ'` with
    /// `Γ ⊢ v`; for a variable of type `Any A` any tick will do.
    fn infer_adv(&mut self, ctx: &TypingContext, v: &Term) -> Tc<TypeExpr> {
        if !is_value(v) {
            return Err(TypeError::new(
                TypeErrorKind::Mismatch,
                format!("`adv` applies to values, got `{}`", term_to_string(v)),
            ));
        }
        let (prefix, tick_clock) = match ctx.split_at_tick() {
            Some((p, c)) => (p, c.clone()),
            None => {
                return Err(TypeError::new(
                    TypeErrorKind::ClockMismatch,
                    "`adv` needs a tick in the context (an enclosing delay)",
                ))
            }
        };
        let tv = self.infer(&prefix, v)?;
        let r = self.shallow(&tv);
        match r {
            TypeExpr::DelayAny(a) => {
                if matches!(v, Term::Var(_)) {
                    Ok(*a)
                } else {
                    Err(TypeError::new(
                        TypeErrorKind::Mismatch,
                        "`adv` of a delayed fixed point applies to variables only",
                    ))
                }
            }
            TypeExpr::DelayExist(a) => {
                self.clocks_equal(&tick_clock, &ClockExpr::of(v.clone()))?;
                Ok(*a)
            }
            TypeExpr::Meta(_) => Err(TypeError::new(
                TypeErrorKind::CannotInfer,
                "cannot determine whether `adv` target is delayed",
            )),
            other => Err(TypeError::new(
                TypeErrorKind::Mismatch,
                format!(
                    "`adv` of non-delayed `{}`",
                    type_to_string(&self.resolve(&other))
                ),
            )),
        }
    }

    fn infer_select(&mut self, ctx: &TypingContext, v1: &Term, v2: &Term) -> Tc<TypeExpr> {
        for v in [v1, v2] {
            if !is_value(v) {
                return Err(TypeError::new(
                    TypeErrorKind::Mismatch,
                    format!("`select` applies to values, got `{}`", term_to_string(v)),
                ));
            }
        }
        let (prefix, tick_clock) = match ctx.split_at_tick() {
            Some((p, c)) => (p, c.clone()),
            None => {
                return Err(TypeError::new(
                    TypeErrorKind::ClockMismatch,
                    "`select` needs a tick in the context (an enclosing delay)",
                ))
            }
        };
        let component = |chk: &mut Self, v: &Term| -> Tc<TypeExpr> {
            let tv = chk.infer(&prefix, v)?;
            let r = chk.shallow(&tv);
            match r {
                TypeExpr::DelayExist(a) => Ok(*a),
                TypeExpr::Meta(_) => {
                    let a = chk.fresh_meta();
                    chk.unify(&r, &TypeExpr::delay_exist(a.clone()))?;
                    Ok(a)
                }
                other => Err(TypeError::new(
                    TypeErrorKind::Mismatch,
                    format!(
                        "`select` of non-delayed `{}`",
                        type_to_string(&chk.resolve(&other))
                    ),
                )),
            }
        };
        let a1 = component(self, v1)?;
        let a2 = component(self, v2)?;
        let want = ClockExpr::join(ClockExpr::of(v1.clone()), ClockExpr::of(v2.clone()));
        self.clocks_equal(&tick_clock, &want)?;
        Ok(TypeExpr::sum(
            TypeExpr::sum(
                TypeExpr::prod(a1.clone(), TypeExpr::delay_exist(a2.clone())),
                TypeExpr::prod(TypeExpr::delay_exist(a1.clone()), a2.clone()),
            ),
            TypeExpr::prod(a1, a2),
        ))
    }

    fn instantiate(&mut self, scheme: &Scheme, def: &Name) -> TypeExpr {
        let mut ty = scheme.ty.clone();
        for v in &scheme.vars {
            let m = self.fresh_meta();
            if scheme.stable.contains(v) {
                self.deferred.push(Deferred {
                    ty: m.clone(),
                    why: StableWhy::Constraint(def.clone(), v.clone()),
                });
            }
            ty = ty.subst_var(v, &m);
        }
        ty
    }

    // ---------------- checking ----------------

    pub fn check(&mut self, ctx: &TypingContext, t: &Term, expected: &TypeExpr) -> Tc<()> {
        let want = self.shallow(expected);
        match (t, &want) {
            (Term::Lam(x, body), _) => {
                if !ctx.tick_free() {
                    return Err(TypeError::new(
                        TypeErrorKind::TickInLambdaContext,
                        "lambdas may only be formed in tick-free contexts",
                    ));
                }
                let (param, result) = match &want {
                    TypeExpr::Fun(p, q) => ((**p).clone(), (**q).clone()),
                    TypeExpr::Meta(_) => {
                        let p = self.fresh_meta();
                        let q = self.fresh_meta();
                        self.unify(&want, &TypeExpr::fun(p.clone(), q.clone()))?;
                        (p, q)
                    }
                    other => {
                        return Err(TypeError::new(
                            TypeErrorKind::Mismatch,
                            format!(
                                "lambda checked against non-function `{}`",
                                type_to_string(&self.resolve(other))
                            ),
                        ))
                    }
                };
                let mut ctx2 = ctx.clone();
                ctx2.push_var(x.clone(), param);
                self.check(&ctx2, body, &result)
            }
            (Term::Pair(a, b), TypeExpr::Prod(ta, tb)) => {
                self.check(ctx, a, ta)?;
                self.check(ctx, b, tb)
            }
            (Term::Pair(a, b), TypeExpr::Meta(_)) => {
                let ta = self.fresh_meta();
                let tb = self.fresh_meta();
                self.unify(&want, &TypeExpr::prod(ta.clone(), tb.clone()))?;
                self.check(ctx, a, &ta)?;
                self.check(ctx, b, &tb)
            }
            (Term::Inj(ix, a), TypeExpr::Sum(ta, tb)) => match ix {
                Ix::I1 => self.check(ctx, a, ta),
                Ix::I2 => self.check(ctx, a, tb),
            },
            (Term::Inj(ix, a), TypeExpr::Meta(_)) => {
                let ta = self.fresh_meta();
                let tb = self.fresh_meta();
                self.unify(&want, &TypeExpr::sum(ta.clone(), tb.clone()))?;
                match ix {
                    Ix::I1 => self.check(ctx, a, &ta),
                    Ix::I2 => self.check(ctx, a, &tb),
                }
            }
            (Term::Never, TypeExpr::DelayExist(_)) => Ok(()),
            (Term::Never, TypeExpr::Meta(_)) => {
                let inner = self.fresh_meta();
                self.unify(&want, &TypeExpr::delay_exist(inner))?;
                Ok(())
            }
            (Term::Delay(theta, body), TypeExpr::DelayExist(inner)) => {
                self.check_clock(ctx, theta)?;
                if !ctx.tick_free() {
                    return Err(TypeError::new(
                        TypeErrorKind::SecondTick,
                        "delay under an existing tick: contexts have at most one tick",
                    ));
                }
                let mut ctx2 = ctx.clone();
                ctx2.push_tick(theta.clone());
                self.check(&ctx2, body, inner)
            }
            (Term::Into(a), TypeExpr::FixRec(..)) => {
                let unfolded = want.unfold_fix().expect("fix type unfolds");
                self.check(ctx, a, &unfolded)
            }
            (Term::Boxed(body), TypeExpr::Boxed(inner)) => {
                let stab = self.stabilize(ctx);
                self.check(&stab, body, inner)
            }
            (Term::Boxed(body), TypeExpr::Meta(_)) => {
                let inner = self.fresh_meta();
                self.unify(&want, &TypeExpr::boxed(inner.clone()))?;
                let stab = self.stabilize(ctx);
                self.check(&stab, body, &inner)
            }
            (Term::Fix(x, body), _) => {
                let mut stab = self.stabilize(ctx);
                stab.push_var(x.clone(), TypeExpr::delay_any(want.clone()));
                self.check(&stab, body, &want)
            }
            (Term::Let(x, s, body), _) => {
                let ts = self.infer(ctx, s)?;
                let mut ctx2 = ctx.clone();
                ctx2.push_var(x.clone(), ts);
                self.check(&ctx2, body, &want)
            }
            (Term::Case(s, x1, t1, x2, t2), _) => {
                let (ta, tb) = self.infer_sum(ctx, s)?;
                let mut c1 = ctx.clone();
                c1.push_var(x1.clone(), ta);
                self.check(&c1, t1, &want)?;
                let mut c2 = ctx.clone();
                c2.push_var(x2.clone(), tb);
                self.check(&c2, t2, &want)
            }
            (Term::NatRec(s, x, y, step, n), _) => {
                self.check(ctx, s, &want)?;
                let mut c = ctx.clone();
                c.push_var(x.clone(), TypeExpr::Nat);
                c.push_var(y.clone(), want.clone());
                self.check(&c, step, &want)?;
                self.check(ctx, n, &TypeExpr::Nat)
            }
            _ => {
                let got = self.infer(ctx, t)?;
                self.unify(&got, &want)
            }
        }
    }
}

fn stability_error(ty: &TypeExpr, why: &StableWhy) -> TypeError {
    match why {
        StableWhy::Crossing(var) => TypeError::new(
            TypeErrorKind::VariableCrossesTick,
            format!(
                "variable `{var}` of non-stable type `{}` is used across a tick",
                type_to_string(ty)
            ),
        ),
        StableWhy::Constraint(def, var) => TypeError::new(
            TypeErrorKind::NotStable,
            format!(
                "use of `{def}` instantiates `{var} := {}`, violating its `Stable {var}` constraint",
                type_to_string(ty)
            ),
        ),
    }
}

/// Context well-formedness: buildable from the three formation rules.
pub fn check_ctx(delta: &InputContext, ctx: &TypingContext) -> Tc<()> {
    let mut names: Vec<&Name> = Vec::new();
    let mut tick_seen = false;
    let top = TopEnv::new();
    for (ix, e) in ctx.entries.iter().enumerate() {
        match e {
            CtxEntry::Var(n, _) => {
                if names.contains(&n) {
                    return Err(TypeError::new(
                        TypeErrorKind::Mismatch,
                        format!("variable `{n}` bound twice in context"),
                    ));
                }
                names.push(n);
            }
            CtxEntry::Tick(theta) => {
                if tick_seen {
                    return Err(TypeError::new(
                        TypeErrorKind::SecondTick,
                        "context contains a second tick",
                    ));
                }
                tick_seen = true;
                let prefix = TypingContext {
                    entries: ctx.entries[..ix].to_vec(),
                };
                let mut chk = Checker::new(delta, &top);
                chk.check_clock(&prefix, theta)?;
                chk.solve_deferred()?;
            }
        }
    }
    Ok(())
}

/// Typecheck one definition against its scheme (schematic variables rigid,
/// constraints assumed) in the environment of earlier definitions.
pub fn check_def(
    delta: &InputContext,
    top: &TopEnv,
    name: &Name,
    scheme: &Scheme,
    boxed_value: &Term,
) -> Tc<()> {
    if contains_machine_forms(boxed_value) {
        return Err(TypeError::new(
            TypeErrorKind::Mismatch,
            "machine-only forms in source program",
        ));
    }
    let mut chk = Checker::new(delta, top);
    chk.assumed = scheme.stable.iter().cloned().collect();
    let want = TypeExpr::boxed(scheme.ty.clone());
    let ctx = TypingContext::new();
    chk.check(&ctx, boxed_value, &want).map_err(|mut e| {
        e.context = Some(name.clone());
        e
    })?;
    chk.solve_deferred().map_err(|mut e| {
        e.context = Some(name.clone());
        e
    })
}

/// Typecheck one output expression at `Sig A` for its declared value type.
pub fn check_output(
    delta: &InputContext,
    top: &TopEnv,
    name: &Name,
    value_ty: &TypeExpr,
    expr: &Term,
) -> Tc<()> {
    if !is_value_type(value_ty) {
        return Err(TypeError {
            kind: TypeErrorKind::NotValueType,
            message: format!(
                "output `{name}` must have a value type, got `{}`",
                type_to_string(value_ty)
            ),
            context: Some(name.clone()),
        });
    }
    let mut chk = Checker::new(delta, top);
    let want = TypeExpr::sig(value_ty.clone());
    let ctx = TypingContext::new();
    chk.check(&ctx, expr, &want).map_err(|mut e| {
        e.context = Some(name.clone());
        e
    })?;
    chk.solve_deferred().map_err(|mut e| {
        e.context = Some(name.clone());
        e
    })
}

/// Typecheck a whole elaborated program: each definition in order, then each
/// output. Returns the top-level environment.
pub fn check_program(program: &crate::elaborate::ElabProgram) -> Tc<TopEnv> {
    let mut top = TopEnv::new();
    for def in &program.defs {
        check_def(&program.delta, &top, &def.name, &def.scheme, &def.value)?;
        top.push((def.name.clone(), def.scheme.clone()));
    }
    for out in &program.outputs {
        check_output(&program.delta, &top, &out.name, &out.ty, &out.expr)?;
    }
    Ok(top)
}
