//! Abstract syntax of the core calculus: types, terms and clock expressions.

use std::fmt;
use std::sync::Arc;

use crate::store::Location;

/// An interned identifier. Cheap to clone and compare.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Name(Arc<str>);

impl Name {
    pub fn new(s: impl AsRef<str>) -> Self {
        Name(Arc::from(s.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl From<&str> for Name {
    fn from(s: &str) -> Self {
        Name::new(s)
    }
}

/// Deterministic fresh-name supply. Generated names contain `#`, which the
/// lexer rejects in source files, so they can never collide with user names.
#[derive(Debug, Default)]
pub struct NameSupply {
    counter: u64,
}

impl NameSupply {
    pub fn new() -> Self {
        NameSupply { counter: 0 }
    }

    pub fn fresh(&mut self, hint: &str) -> Name {
        let n = self.counter;
        self.counter += 1;
        Name::new(format!("{hint}#{n}"))
    }
}

/// Component selector for pairs and sums.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Ix {
    I1,
    I2,
}

impl Ix {
    pub fn as_u8(self) -> u8 {
        match self {
            Ix::I1 => 1,
            Ix::I2 => 2,
        }
    }
}

/// Primitive floating-point operators.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum FloatPrim {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Lt,
    Le,
}

impl FloatPrim {
    pub fn symbol(self) -> &'static str {
        match self {
            FloatPrim::Add => "+.",
            FloatPrim::Sub => "-.",
            FloatPrim::Mul => "*.",
            FloatPrim::Div => "/.",
            FloatPrim::Eq => "==.",
            FloatPrim::Lt => "<.",
            FloatPrim::Le => "<=.",
        }
    }

    /// Comparisons produce `Unit + Unit`; arithmetic produces `Float`.
    pub fn is_comparison(self) -> bool {
        matches!(self, FloatPrim::Eq | FloatPrim::Lt | FloatPrim::Le)
    }
}

/// Types of the core calculus.
///
/// `Meta` is a typechecker-internal unification variable used to instantiate
/// top-level type schemes; it never appears in elaborated programs handed to
/// the machine. `TypeVar` covers both recursive-type binders and top-level
/// schematic variables.
#[derive(Clone, PartialEq, Debug)]
pub enum TypeExpr {
    Unit,
    Nat,
    Float,
    Prod(Box<TypeExpr>, Box<TypeExpr>),
    Sum(Box<TypeExpr>, Box<TypeExpr>),
    Fun(Box<TypeExpr>, Box<TypeExpr>),
    DelayExist(Box<TypeExpr>),
    DelayAny(Box<TypeExpr>),
    Boxed(Box<TypeExpr>),
    FixRec(Name, Box<TypeExpr>),
    TypeVar(Name),
    Meta(u32),
}

impl TypeExpr {
    pub fn prod(a: TypeExpr, b: TypeExpr) -> TypeExpr {
        TypeExpr::Prod(Box::new(a), Box::new(b))
    }

    pub fn sum(a: TypeExpr, b: TypeExpr) -> TypeExpr {
        TypeExpr::Sum(Box::new(a), Box::new(b))
    }

    pub fn fun(a: TypeExpr, b: TypeExpr) -> TypeExpr {
        TypeExpr::Fun(Box::new(a), Box::new(b))
    }

    pub fn delay_exist(a: TypeExpr) -> TypeExpr {
        TypeExpr::DelayExist(Box::new(a))
    }

    pub fn delay_any(a: TypeExpr) -> TypeExpr {
        TypeExpr::DelayAny(Box::new(a))
    }

    pub fn boxed(a: TypeExpr) -> TypeExpr {
        TypeExpr::Boxed(Box::new(a))
    }

    /// `Sig A = Fix α. A × α`, unfolding to `A × ◇(Sig A)`. The binder
    /// steps aside if `A` happens to mention a variable spelled `α`.
    pub fn sig(a: TypeExpr) -> TypeExpr {
        let free = a.free_type_vars();
        let mut alpha = Name::new("α");
        while free.contains(&alpha) {
            alpha = Name::new(format!("{alpha}'"));
        }
        TypeExpr::FixRec(
            alpha.clone(),
            Box::new(TypeExpr::prod(a, TypeExpr::TypeVar(alpha))),
        )
    }

    /// The boolean encoding `Unit + Unit` used by comparisons.
    pub fn bool_sum() -> TypeExpr {
        TypeExpr::sum(TypeExpr::Unit, TypeExpr::Unit)
    }

    /// Substitute `repl` for the free type variable `var`.
    pub fn subst_var(&self, var: &Name, repl: &TypeExpr) -> TypeExpr {
        match self {
            TypeExpr::Unit | TypeExpr::Nat | TypeExpr::Float | TypeExpr::Meta(_) => self.clone(),
            TypeExpr::Prod(a, b) => TypeExpr::prod(a.subst_var(var, repl), b.subst_var(var, repl)),
            TypeExpr::Sum(a, b) => TypeExpr::sum(a.subst_var(var, repl), b.subst_var(var, repl)),
            TypeExpr::Fun(a, b) => TypeExpr::fun(a.subst_var(var, repl), b.subst_var(var, repl)),
            TypeExpr::DelayExist(a) => TypeExpr::delay_exist(a.subst_var(var, repl)),
            TypeExpr::DelayAny(a) => TypeExpr::delay_any(a.subst_var(var, repl)),
            TypeExpr::Boxed(a) => TypeExpr::boxed(a.subst_var(var, repl)),
            TypeExpr::FixRec(binder, body) => {
                if binder == var {
                    self.clone()
                } else {
                    TypeExpr::FixRec(binder.clone(), Box::new(body.subst_var(var, repl)))
                }
            }
            TypeExpr::TypeVar(n) => {
                if n == var {
                    repl.clone()
                } else {
                    self.clone()
                }
            }
        }
    }

    /// One unfolding of a recursive type:
    /// `Fix α. A  ↦  A[◇(Fix α. A)/α]`.
    pub fn unfold_fix(&self) -> Option<TypeExpr> {
        match self {
            TypeExpr::FixRec(alpha, body) => {
                let delayed = TypeExpr::delay_exist(self.clone());
                Some(body.subst_var(alpha, &delayed))
            }
            _ => None,
        }
    }

    pub fn contains_meta(&self) -> bool {
        match self {
            TypeExpr::Meta(_) => true,
            TypeExpr::Unit | TypeExpr::Nat | TypeExpr::Float | TypeExpr::TypeVar(_) => false,
            TypeExpr::Prod(a, b) | TypeExpr::Sum(a, b) | TypeExpr::Fun(a, b) => {
                a.contains_meta() || b.contains_meta()
            }
            TypeExpr::DelayExist(a) | TypeExpr::DelayAny(a) | TypeExpr::Boxed(a) => {
                a.contains_meta()
            }
            TypeExpr::FixRec(_, a) => a.contains_meta(),
        }
    }

    /// Free type variables in order of first occurrence.
    pub fn free_type_vars(&self) -> Vec<Name> {
        fn go(ty: &TypeExpr, bound: &mut Vec<Name>, out: &mut Vec<Name>) {
            match ty {
                TypeExpr::TypeVar(n) => {
                    if !bound.contains(n) && !out.contains(n) {
                        out.push(n.clone());
                    }
                }
                TypeExpr::Prod(a, b) | TypeExpr::Sum(a, b) | TypeExpr::Fun(a, b) => {
                    go(a, bound, out);
                    go(b, bound, out);
                }
                TypeExpr::DelayExist(a) | TypeExpr::DelayAny(a) | TypeExpr::Boxed(a) => {
                    go(a, bound, out)
                }
                TypeExpr::FixRec(binder, a) => {
                    bound.push(binder.clone());
                    go(a, bound, out);
                    bound.pop();
                }
                _ => {}
            }
        }
        let mut out = Vec::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }
}

/// Stable types: `Unit | Nat | Float | S×S' | S+S' | ∆A | □A`.
///
/// Expects a closed type (no free `TypeVar`, no `Meta`).
pub fn is_stable(ty: &TypeExpr) -> bool {
    match ty {
        TypeExpr::Unit | TypeExpr::Nat | TypeExpr::Float => true,
        TypeExpr::Prod(a, b) | TypeExpr::Sum(a, b) => is_stable(a) && is_stable(b),
        TypeExpr::DelayAny(_) | TypeExpr::Boxed(_) => true,
        _ => false,
    }
}

/// Value types: `Unit | Nat | Float | T×T' | T+T'`. These are the types
/// admitted on input and output channels.
pub fn is_value_type(ty: &TypeExpr) -> bool {
    match ty {
        TypeExpr::Unit | TypeExpr::Nat | TypeExpr::Float => true,
        TypeExpr::Prod(a, b) | TypeExpr::Sum(a, b) => is_value_type(a) && is_value_type(b),
        _ => false,
    }
}

/// Clock expressions `θ ::= cl(v) | θ ⊔ θ'`. The argument of `cl` is
/// restricted to values (variables, locations, channel references).
#[derive(Clone, PartialEq, Debug)]
pub enum ClockExpr {
    Of(Box<Term>),
    Join(Box<ClockExpr>, Box<ClockExpr>),
}

impl ClockExpr {
    pub fn of(v: Term) -> ClockExpr {
        ClockExpr::Of(Box::new(v))
    }

    pub fn join(a: ClockExpr, b: ClockExpr) -> ClockExpr {
        ClockExpr::Join(Box::new(a), Box::new(b))
    }

    /// Flatten into the list of `cl(v)` atoms, deduplicated, in order.
    pub fn atoms(&self) -> Vec<&Term> {
        fn go<'a>(c: &'a ClockExpr, out: &mut Vec<&'a Term>) {
            match c {
                ClockExpr::Of(v) => {
                    if !out.iter().any(|t| *t == v.as_ref()) {
                        out.push(v);
                    }
                }
                ClockExpr::Join(a, b) => {
                    go(a, out);
                    go(b, out);
                }
            }
        }
        let mut out = Vec::new();
        go(self, &mut out);
        out
    }

    /// Equality up to associativity, commutativity and idempotence of `⊔`.
    pub fn aci_equal(&self, other: &ClockExpr) -> bool {
        let a = self.atoms();
        let b = other.atoms();
        a.len() == b.len() && a.iter().all(|x| b.iter().any(|y| x == y))
    }

    /// Apply a term substitution to every `cl(v)` atom.
    pub fn subst(&self, value: &Term, var: &Name) -> ClockExpr {
        match self {
            ClockExpr::Of(v) => ClockExpr::of(subst(v, value, var)),
            ClockExpr::Join(a, b) => ClockExpr::join(a.subst(value, var), b.subst(value, var)),
        }
    }

    pub fn free_vars(&self, out: &mut Vec<Name>) {
        match self {
            ClockExpr::Of(v) => free_vars(v, &mut Vec::new(), out),
            ClockExpr::Join(a, b) => {
                a.free_vars(out);
                b.free_vars(out);
            }
        }
    }
}

/// Terms of the core calculus, including the machine-only forms
/// `Loc` (heap locations) and `DFix` (delayed fixed points), which never
/// occur in source programs.
#[derive(Clone, PartialEq, Debug)]
pub enum Term {
    Var(Name),
    Unit,
    Zero,
    Suc(Box<Term>),
    FloatLit(f64),
    FloatOp(FloatPrim, Box<Term>, Box<Term>),
    Lam(Name, Box<Term>),
    Pair(Box<Term>, Box<Term>),
    Inj(Ix, Box<Term>),
    Proj(Ix, Box<Term>),
    App(Box<Term>, Box<Term>),
    Let(Name, Box<Term>, Box<Term>),
    Case(Box<Term>, Name, Box<Term>, Name, Box<Term>),
    /// `natrec s {x y. t} n`: zero branch `s`, step `t` with predecessor `x`
    /// and recursive result `y`, scrutinee `n`.
    NatRec(Box<Term>, Name, Name, Box<Term>, Box<Term>),
    Delay(ClockExpr, Box<Term>),
    Adv(Box<Term>),
    Select(Box<Term>, Box<Term>),
    Never,
    Await(Name),
    Read(Name),
    Boxed(Box<Term>),
    Unbox(Box<Term>),
    Fix(Name, Box<Term>),
    Into(Box<Term>),
    Out(Box<Term>),
    Loc(Location),
    DFix(Name, Box<Term>),
}

impl Term {
    pub fn var(n: impl AsRef<str>) -> Term {
        Term::Var(Name::new(n))
    }

    pub fn lam(x: impl AsRef<str>, body: Term) -> Term {
        Term::Lam(Name::new(x), Box::new(body))
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Box::new(f), Box::new(a))
    }

    pub fn apps(f: Term, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(f, Term::app)
    }

    pub fn pair(a: Term, b: Term) -> Term {
        Term::Pair(Box::new(a), Box::new(b))
    }

    pub fn let_(x: Name, s: Term, t: Term) -> Term {
        Term::Let(x, Box::new(s), Box::new(t))
    }

    pub fn suc(t: Term) -> Term {
        Term::Suc(Box::new(t))
    }

    pub fn proj(ix: Ix, t: Term) -> Term {
        Term::Proj(ix, Box::new(t))
    }

    pub fn inj(ix: Ix, t: Term) -> Term {
        Term::Inj(ix, Box::new(t))
    }

    pub fn adv(t: Term) -> Term {
        Term::Adv(Box::new(t))
    }

    pub fn delay(theta: ClockExpr, t: Term) -> Term {
        Term::Delay(theta, Box::new(t))
    }

    pub fn boxed(t: Term) -> Term {
        Term::Boxed(Box::new(t))
    }

    pub fn unbox(t: Term) -> Term {
        Term::Unbox(Box::new(t))
    }

    pub fn into(t: Term) -> Term {
        Term::Into(Box::new(t))
    }

    pub fn out(t: Term) -> Term {
        Term::Out(Box::new(t))
    }

    pub fn fix(x: impl AsRef<str>, t: Term) -> Term {
        Term::Fix(Name::new(x), Box::new(t))
    }

    /// Encode a machine natural as a `suc` tower.
    pub fn nat(n: u64) -> Term {
        let mut t = Term::Zero;
        for _ in 0..n {
            t = Term::suc(t);
        }
        t
    }

    /// Decode a `suc` tower; `None` if the term is not a numeral.
    pub fn as_nat(&self) -> Option<u64> {
        let mut t = self;
        let mut n = 0;
        loop {
            match t {
                Term::Zero => return Some(n),
                Term::Suc(inner) => {
                    n += 1;
                    t = inner;
                }
                _ => return None,
            }
        }
    }

    /// `s :: t`, shorthand for `into ⟨s, t⟩`.
    pub fn cons(head: Term, tail: Term) -> Term {
        Term::into(Term::pair(head, tail))
    }
}

/// The value grammar of the calculus:
/// `x | () | zero | suc v | λx.t | ⟨v,w⟩ | in_i v | l | await κ | box t |
///  dfix x.t | into v`, plus float literals.
pub fn is_value(t: &Term) -> bool {
    match t {
        Term::Var(_)
        | Term::Unit
        | Term::Zero
        | Term::FloatLit(_)
        | Term::Lam(..)
        | Term::Loc(_)
        | Term::Await(_)
        | Term::Boxed(_)
        | Term::DFix(..) => true,
        Term::Suc(v) | Term::Inj(_, v) | Term::Into(v) => is_value(v),
        Term::Pair(a, b) => is_value(a) && is_value(b),
        _ => false,
    }
}

/// Capture-avoiding substitution `t[value/var]`.
///
/// Every substitution performed by the machine uses a closed value, so no
/// renaming is ever required; binders that shadow `var` simply stop the
/// traversal.
pub fn subst(t: &Term, value: &Term, var: &Name) -> Term {
    match t {
        Term::Var(n) => {
            if n == var {
                value.clone()
            } else {
                t.clone()
            }
        }
        Term::Unit
        | Term::Zero
        | Term::FloatLit(_)
        | Term::Never
        | Term::Await(_)
        | Term::Read(_)
        | Term::Loc(_) => t.clone(),
        Term::Suc(a) => Term::Suc(Box::new(subst(a, value, var))),
        Term::FloatOp(op, a, b) => Term::FloatOp(
            *op,
            Box::new(subst(a, value, var)),
            Box::new(subst(b, value, var)),
        ),
        Term::Lam(x, body) => {
            if x == var {
                t.clone()
            } else {
                Term::Lam(x.clone(), Box::new(subst(body, value, var)))
            }
        }
        Term::Pair(a, b) => Term::pair(subst(a, value, var), subst(b, value, var)),
        Term::Inj(ix, a) => Term::Inj(*ix, Box::new(subst(a, value, var))),
        Term::Proj(ix, a) => Term::Proj(*ix, Box::new(subst(a, value, var))),
        Term::App(f, a) => Term::app(subst(f, value, var), subst(a, value, var)),
        Term::Let(x, s, body) => {
            let s2 = subst(s, value, var);
            if x == var {
                Term::Let(x.clone(), Box::new(s2), body.clone())
            } else {
                Term::Let(x.clone(), Box::new(s2), Box::new(subst(body, value, var)))
            }
        }
        Term::Case(scrut, x1, t1, x2, t2) => {
            let s2 = subst(scrut, value, var);
            let t1b = if x1 == var {
                t1.clone()
            } else {
                Box::new(subst(t1, value, var))
            };
            let t2b = if x2 == var {
                t2.clone()
            } else {
                Box::new(subst(t2, value, var))
            };
            Term::Case(Box::new(s2), x1.clone(), t1b, x2.clone(), t2b)
        }
        Term::NatRec(s, x, y, step, n) => {
            let s2 = Box::new(subst(s, value, var));
            let n2 = Box::new(subst(n, value, var));
            let step2 = if x == var || y == var {
                step.clone()
            } else {
                Box::new(subst(step, value, var))
            };
            Term::NatRec(s2, x.clone(), y.clone(), step2, n2)
        }
        Term::Delay(theta, body) => Term::Delay(
            theta.subst(value, var),
            Box::new(subst(body, value, var)),
        ),
        Term::Adv(a) => Term::Adv(Box::new(subst(a, value, var))),
        Term::Select(a, b) => Term::Select(
            Box::new(subst(a, value, var)),
            Box::new(subst(b, value, var)),
        ),
        Term::Boxed(a) => Term::Boxed(Box::new(subst(a, value, var))),
        Term::Unbox(a) => Term::Unbox(Box::new(subst(a, value, var))),
        Term::Fix(x, body) => {
            if x == var {
                t.clone()
            } else {
                Term::Fix(x.clone(), Box::new(subst(body, value, var)))
            }
        }
        Term::Into(a) => Term::Into(Box::new(subst(a, value, var))),
        Term::Out(a) => Term::Out(Box::new(subst(a, value, var))),
        Term::DFix(x, body) => {
            if x == var {
                t.clone()
            } else {
                Term::DFix(x.clone(), Box::new(subst(body, value, var)))
            }
        }
    }
}

/// Free variables of a term, in order of first occurrence.
pub fn free_vars(t: &Term, bound: &mut Vec<Name>, out: &mut Vec<Name>) {
    match t {
        Term::Var(n) => {
            if !bound.contains(n) && !out.contains(n) {
                out.push(n.clone());
            }
        }
        Term::Unit
        | Term::Zero
        | Term::FloatLit(_)
        | Term::Never
        | Term::Await(_)
        | Term::Read(_)
        | Term::Loc(_) => {}
        Term::Suc(a)
        | Term::Inj(_, a)
        | Term::Proj(_, a)
        | Term::Adv(a)
        | Term::Boxed(a)
        | Term::Unbox(a)
        | Term::Into(a)
        | Term::Out(a) => free_vars(a, bound, out),
        Term::FloatOp(_, a, b) | Term::Pair(a, b) | Term::App(a, b) | Term::Select(a, b) => {
            free_vars(a, bound, out);
            free_vars(b, bound, out);
        }
        Term::Lam(x, body) | Term::Fix(x, body) | Term::DFix(x, body) => {
            bound.push(x.clone());
            free_vars(body, bound, out);
            bound.pop();
        }
        Term::Let(x, s, body) => {
            free_vars(s, bound, out);
            bound.push(x.clone());
            free_vars(body, bound, out);
            bound.pop();
        }
        Term::Case(scrut, x1, t1, x2, t2) => {
            free_vars(scrut, bound, out);
            bound.push(x1.clone());
            free_vars(t1, bound, out);
            bound.pop();
            bound.push(x2.clone());
            free_vars(t2, bound, out);
            bound.pop();
        }
        Term::NatRec(s, x, y, step, n) => {
            free_vars(s, bound, out);
            bound.push(x.clone());
            bound.push(y.clone());
            free_vars(step, bound, out);
            bound.pop();
            bound.pop();
            free_vars(n, bound, out);
        }
        Term::Delay(theta, body) => {
            let mut cv = Vec::new();
            theta.free_vars(&mut cv);
            for n in cv {
                if !bound.contains(&n) && !out.contains(&n) {
                    out.push(n);
                }
            }
            free_vars(body, bound, out);
        }
    }
}

pub fn is_closed(t: &Term) -> bool {
    let mut out = Vec::new();
    free_vars(t, &mut Vec::new(), &mut out);
    out.is_empty()
}

/// Does the term contain a machine-only node (`Loc` or `DFix`)?
pub fn contains_machine_forms(t: &Term) -> bool {
    match t {
        Term::Loc(_) | Term::DFix(..) => true,
        Term::Var(_)
        | Term::Unit
        | Term::Zero
        | Term::FloatLit(_)
        | Term::Never
        | Term::Await(_)
        | Term::Read(_) => false,
        Term::Suc(a)
        | Term::Inj(_, a)
        | Term::Proj(_, a)
        | Term::Adv(a)
        | Term::Boxed(a)
        | Term::Unbox(a)
        | Term::Into(a)
        | Term::Out(a)
        | Term::Lam(_, a)
        | Term::Fix(_, a) => contains_machine_forms(a),
        Term::FloatOp(_, a, b)
        | Term::Pair(a, b)
        | Term::App(a, b)
        | Term::Select(a, b)
        | Term::Let(_, a, b) => contains_machine_forms(a) || contains_machine_forms(b),
        Term::Case(s, _, a, _, b) => {
            contains_machine_forms(s) || contains_machine_forms(a) || contains_machine_forms(b)
        }
        Term::NatRec(s, _, _, step, n) => {
            contains_machine_forms(s) || contains_machine_forms(step) || contains_machine_forms(n)
        }
        Term::Delay(theta, body) => {
            fn clock_has(c: &ClockExpr) -> bool {
                match c {
                    ClockExpr::Of(v) => contains_machine_forms(v),
                    ClockExpr::Join(a, b) => clock_has(a) || clock_has(b),
                }
            }
            clock_has(theta) || contains_machine_forms(body)
        }
    }
}

/// Does the term contain a `Loc` node anywhere? Used by the stability audit:
/// values of stable type must be location-free.
pub fn contains_location(t: &Term) -> bool {
    match t {
        Term::Loc(_) => true,
        Term::Var(_)
        | Term::Unit
        | Term::Zero
        | Term::FloatLit(_)
        | Term::Never
        | Term::Await(_)
        | Term::Read(_) => false,
        Term::Suc(a)
        | Term::Inj(_, a)
        | Term::Proj(_, a)
        | Term::Adv(a)
        | Term::Boxed(a)
        | Term::Unbox(a)
        | Term::Into(a)
        | Term::Out(a)
        | Term::Lam(_, a)
        | Term::Fix(_, a)
        | Term::DFix(_, a) => contains_location(a),
        Term::FloatOp(_, a, b)
        | Term::Pair(a, b)
        | Term::App(a, b)
        | Term::Select(a, b)
        | Term::Let(_, a, b) => contains_location(a) || contains_location(b),
        Term::Case(s, _, a, _, b) => {
            contains_location(s) || contains_location(a) || contains_location(b)
        }
        Term::NatRec(s, _, _, step, n) => {
            contains_location(s) || contains_location(step) || contains_location(n)
        }
        Term::Delay(theta, body) => {
            fn clock_has(c: &ClockExpr) -> bool {
                match c {
                    ClockExpr::Of(v) => contains_location(v),
                    ClockExpr::Join(a, b) => clock_has(a) || clock_has(b),
                }
            }
            clock_has(theta) || contains_location(body)
        }
    }
}

/// Alpha-equivalence of terms (and of the clock expressions inside them).
pub fn alpha_equal(a: &Term, b: &Term) -> bool {
    fn go(a: &Term, b: &Term, env: &mut Vec<(Name, Name)>) -> bool {
        use Term::*;
        match (a, b) {
            (Var(x), Var(y)) => match env.iter().rev().find(|(l, r)| l == x || r == y) {
                Some((l, r)) => l == x && r == y,
                None => x == y,
            },
            (Unit, Unit) | (Zero, Zero) | (Never, Never) => true,
            (FloatLit(x), FloatLit(y)) => x == y,
            (Await(x), Await(y)) | (Read(x), Read(y)) => x == y,
            (Loc(x), Loc(y)) => x == y,
            (Suc(x), Suc(y))
            | (Inj(Ix::I1, x), Inj(Ix::I1, y))
            | (Inj(Ix::I2, x), Inj(Ix::I2, y))
            | (Proj(Ix::I1, x), Proj(Ix::I1, y))
            | (Proj(Ix::I2, x), Proj(Ix::I2, y))
            | (Adv(x), Adv(y))
            | (Boxed(x), Boxed(y))
            | (Unbox(x), Unbox(y))
            | (Into(x), Into(y))
            | (Out(x), Out(y)) => go(x, y, env),
            (FloatOp(o1, x1, y1), FloatOp(o2, x2, y2)) => {
                o1 == o2 && go(x1, x2, env) && go(y1, y2, env)
            }
            (Pair(x1, y1), Pair(x2, y2))
            | (App(x1, y1), App(x2, y2))
            | (Select(x1, y1), Select(x2, y2)) => go(x1, x2, env) && go(y1, y2, env),
            (Lam(x, s), Lam(y, t)) | (Fix(x, s), Fix(y, t)) | (DFix(x, s), DFix(y, t)) => {
                env.push((x.clone(), y.clone()));
                let r = go(s, t, env);
                env.pop();
                r
            }
            (Let(x, s1, t1), Let(y, s2, t2)) => {
                if !go(s1, s2, env) {
                    return false;
                }
                env.push((x.clone(), y.clone()));
                let r = go(t1, t2, env);
                env.pop();
                r
            }
            (Case(s1, x1, a1, y1, b1), Case(s2, x2, a2, y2, b2)) => {
                if !go(s1, s2, env) {
                    return false;
                }
                env.push((x1.clone(), x2.clone()));
                let r1 = go(a1, a2, env);
                env.pop();
                if !r1 {
                    return false;
                }
                env.push((y1.clone(), y2.clone()));
                let r2 = go(b1, b2, env);
                env.pop();
                r2
            }
            (NatRec(s1, x1, y1, t1, n1), NatRec(s2, x2, y2, t2, n2)) => {
                if !go(s1, s2, env) || !go(n1, n2, env) {
                    return false;
                }
                env.push((x1.clone(), x2.clone()));
                env.push((y1.clone(), y2.clone()));
                let r = go(t1, t2, env);
                env.pop();
                env.pop();
                r
            }
            (Delay(c1, t1), Delay(c2, t2)) => clock_eq(c1, c2, env) && go(t1, t2, env),
            _ => false,
        }
    }

    fn clock_eq(a: &ClockExpr, b: &ClockExpr, env: &mut Vec<(Name, Name)>) -> bool {
        // compare up to ACI of ⊔ and alpha of the wrapped values
        let xs = a.atoms();
        let ys = b.atoms();
        xs.len() == ys.len() && xs.iter().all(|x| ys.iter().any(|y| go(x, y, env)))
    }

    go(a, b, &mut Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(id: u64) -> Term {
        Term::Loc(Location::new(id, ["up".into()].into_iter().collect()))
    }

    #[test]
    fn stable_types_follow_the_grammar() {
        assert!(is_stable(&TypeExpr::boxed(TypeExpr::fun(
            TypeExpr::Nat,
            TypeExpr::Nat
        ))));
        assert!(!is_stable(&TypeExpr::fun(TypeExpr::Nat, TypeExpr::Nat)));
        assert!(is_stable(&TypeExpr::Nat));
        assert!(is_stable(&TypeExpr::delay_any(TypeExpr::fun(
            TypeExpr::Nat,
            TypeExpr::Nat
        ))));
        assert!(!is_stable(&TypeExpr::delay_exist(TypeExpr::Nat)));
        assert!(!is_stable(&TypeExpr::sig(TypeExpr::Nat)));
    }

    #[test]
    fn value_types_follow_the_grammar() {
        assert!(is_value_type(&TypeExpr::prod(
            TypeExpr::Nat,
            TypeExpr::sum(TypeExpr::Unit, TypeExpr::Nat)
        )));
        assert!(!is_value_type(&TypeExpr::delay_exist(TypeExpr::Nat)));
        assert!(is_value_type(&TypeExpr::Unit));
        assert!(!is_value_type(&TypeExpr::boxed(TypeExpr::Nat)));
    }

    #[test]
    fn value_grammar() {
        assert!(is_value(&Term::into(Term::pair(Term::Zero, l(0)))));
        assert!(!is_value(&Term::delay(
            ClockExpr::of(Term::var("x")),
            Term::Zero
        )));
        assert!(!is_value(&Term::app(
            Term::lam("x", Term::var("x")),
            Term::Unit
        )));
        assert!(is_value(&Term::Await(Name::new("up"))));
        assert!(is_value(&Term::boxed(Term::app(
            Term::lam("x", Term::var("x")),
            Term::Unit
        ))));
    }

    #[test]
    fn subst_hits_variables() {
        let x = Name::new("x");
        assert_eq!(subst(&Term::Var(x.clone()), &Term::Zero, &x), Term::Zero);
    }

    #[test]
    fn subst_respects_shadowing() {
        let x = Name::new("x");
        let lam = Term::lam("x", Term::var("x"));
        assert_eq!(subst(&lam, &Term::Zero, &x), lam);
    }

    #[test]
    fn subst_is_congruent() {
        let x = Name::new("x");
        let t = Term::suc(Term::Var(x.clone()));
        assert_eq!(
            subst(&t, &Term::nat(1), &x),
            Term::nat(2)
        );
    }

    #[test]
    fn alpha_equal_ignores_binder_names() {
        let a = Term::lam("x", Term::var("x"));
        let b = Term::lam("y", Term::var("y"));
        assert!(alpha_equal(&a, &b));
        assert!(!alpha_equal(&a, &Term::lam("y", Term::var("z"))));
    }

    #[test]
    fn clock_aci_equality() {
        let c1 = ClockExpr::join(
            ClockExpr::of(Term::var("a")),
            ClockExpr::of(Term::var("b")),
        );
        let c2 = ClockExpr::join(
            ClockExpr::of(Term::var("b")),
            ClockExpr::join(ClockExpr::of(Term::var("a")), ClockExpr::of(Term::var("a"))),
        );
        assert!(c1.aci_equal(&c2));
        assert!(!c1.aci_equal(&ClockExpr::of(Term::var("a"))));
    }
}
