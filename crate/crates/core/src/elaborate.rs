//! Elaboration from the surface language to the core calculus.
//!
//! * Pattern equations compile to projection/case chains; a cons pattern
//!   `(x :: xs)` on a scrutinee `s` becomes `let x = fst (out s) in
//!   let xs = snd (out s) in …`.
//! * A definition that mentions its own name becomes a fixed point; the
//!   recursive occurrence is replaced by `adv r`.
//! * `s :: t` is `into (s, t)`; `s ; t` is a let with an unused binder.
//! * Top-level definitions are boxed where defined and unboxed where used.
//! * An omitted `delay` subscript is inferred as the join of `cl v` over the
//!   `adv v` / `select v₁ v₂` occurrences directly under the delay,
//!   excluding recursion variables (which advance on any tick).
//! * `adv`/`select` arguments must be values; non-value arguments are
//!   let-lifted in front of the enclosing delay, in source order.
//!
//! Binder names are kept when possible and renamed only when they would
//! shadow an enclosing binder, so elaborated terms satisfy the context
//! freshness discipline of the type system.

use crate::input::InputContext;
use crate::surface::ast::*;
use crate::syntax::{
    contains_machine_forms, is_value, ClockExpr, Ix, Name, NameSupply, Term, TypeExpr,
};
use crate::typecheck::Scheme;

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("elaboration error at {pos}: {message}")]
pub struct ElabError {
    pub pos: Pos,
    pub message: String,
}

fn err<T>(pos: Pos, message: impl Into<String>) -> Result<T, ElabError> {
    Err(ElabError {
        pos,
        message: message.into(),
    })
}

/// An elaborated top-level definition: its scheme and its boxed value.
#[derive(Clone, Debug)]
pub struct ElabDef {
    pub name: Name,
    pub scheme: Scheme,
    pub value: Term,
    pub pos: Pos,
}

#[derive(Clone, Debug)]
pub struct ElabOutput {
    pub name: Name,
    pub ty: TypeExpr,
    pub expr: Term,
    pub pos: Pos,
}

/// A fully elaborated reactive program.
#[derive(Clone, Debug)]
pub struct ElabProgram {
    pub delta: InputContext,
    pub defs: Vec<ElabDef>,
    pub outputs: Vec<ElabOutput>,
}

impl ElabProgram {
    /// The machine term: a let-chain binding every definition around the
    /// right-nested tuple of output expressions.
    pub fn machine_term(&self) -> Term {
        let tuple = match self.outputs.len() {
            0 => Term::Unit,
            _ => {
                let mut it = self.outputs.iter().rev();
                let mut acc = it.next().unwrap().expr.clone();
                for o in it {
                    acc = Term::pair(o.expr.clone(), acc);
                }
                acc
            }
        };
        self.defs.iter().rev().fold(tuple, |body, def| {
            Term::let_(def.name.clone(), def.value.clone(), body)
        })
    }

    pub fn gamma_out(&self) -> Vec<(Name, TypeExpr)> {
        self.outputs
            .iter()
            .map(|o| (o.name.clone(), o.ty.clone()))
            .collect()
    }
}

pub fn surface_type_to_core(ty: &SType) -> TypeExpr {
    match &ty.kind {
        STypeKind::Unit => TypeExpr::Unit,
        STypeKind::Nat => TypeExpr::Nat,
        STypeKind::Float => TypeExpr::Float,
        STypeKind::Var(n) => TypeExpr::TypeVar(n.clone()),
        STypeKind::Prod(a, b) => {
            TypeExpr::prod(surface_type_to_core(a), surface_type_to_core(b))
        }
        STypeKind::Sum(a, b) => TypeExpr::sum(surface_type_to_core(a), surface_type_to_core(b)),
        STypeKind::Fun(a, b) => TypeExpr::fun(surface_type_to_core(a), surface_type_to_core(b)),
        STypeKind::Sig(a) => TypeExpr::sig(surface_type_to_core(a)),
        STypeKind::Boxed(a) => TypeExpr::boxed(surface_type_to_core(a)),
        STypeKind::DelayExist(a) => TypeExpr::delay_exist(surface_type_to_core(a)),
        STypeKind::DelayAny(a) => TypeExpr::delay_any(surface_type_to_core(a)),
        STypeKind::Fix(n, a) => TypeExpr::FixRec(n.clone(), Box::new(surface_type_to_core(a))),
    }
}

/// Elaborate a whole program (the prelude defs, if any, come pre-appended in
/// `program.defs`).
pub fn elaborate(program: &SurfaceProgram) -> Result<ElabProgram, ElabError> {
    let mut delta = InputContext::new();
    for decl in &program.inputs {
        let ty = surface_type_to_core(&decl.ty);
        delta
            .declare(decl.name.clone(), decl.class, ty)
            .map_err(|e| ElabError {
                pos: decl.pos,
                message: e.to_string(),
            })?;
    }

    let mut defs: Vec<ElabDef> = Vec::new();
    for def in &program.defs {
        if defs.iter().any(|d| d.name == def.name) {
            return err(def.pos, format!("duplicate definition of `{}`", def.name));
        }
        let known: Vec<Name> = defs.iter().map(|d| d.name.clone()).collect();
        defs.push(elaborate_def(def, &known)?);
    }

    let top_names: Vec<Name> = defs.iter().map(|d| d.name.clone()).collect();
    let mut outputs: Vec<ElabOutput> = Vec::new();
    for out in &program.outputs {
        if outputs.iter().any(|o| o.name == out.name)
            || delta.lookup(&out.name).is_some()
        {
            return err(
                out.pos,
                format!("output channel `{}` clashes with another name", out.name),
            );
        }
        let ty = surface_type_to_core(&out.ty);
        let mut cx = ExprCx::new(&top_names, None);
        let expr = cx.expr(&out.expr)?;
        debug_assert!(!contains_machine_forms(&expr));
        outputs.push(ElabOutput {
            name: out.name.clone(),
            ty,
            expr,
            pos: out.pos,
        });
    }

    Ok(ElabProgram {
        delta,
        defs,
        outputs,
    })
}

fn elaborate_def<'a>(def: &'a TopDef, known_defs: &'a [Name]) -> Result<ElabDef, ElabError> {
    let sig = surface_type_to_core(&def.signature);
    let vars = sig.free_type_vars();
    for sv in &def.stable_vars {
        if !vars.contains(sv) {
            return err(
                def.pos,
                format!("constraint `Stable {sv}` mentions a variable not in the signature"),
            );
        }
    }
    let scheme = Scheme {
        vars,
        stable: def.stable_vars.clone(),
        ty: sig,
    };

    if def.equations.is_empty() {
        return err(def.pos, "definition has no equations");
    }
    let arity = def.equations[0].patterns.len();
    for eq in &def.equations {
        if eq.patterns.len() != arity {
            return err(eq.pos, "equations of one definition must share an arity");
        }
        let mut binders = Vec::new();
        for p in &eq.patterns {
            p.binders(&mut binders);
        }
        let mut seen = Vec::new();
        for b in &binders {
            if seen.contains(&b) {
                return err(eq.pos, format!("pattern binds `{b}` more than once"));
            }
            seen.push(b);
        }
    }

    let mut cx = ExprCx::new(known_defs, Some(def.name.clone()));

    // parameter names: reuse a variable that every equation agrees on
    let mut params: Vec<Name> = Vec::new();
    for col in 0..arity {
        let name = common_var(def.equations.iter().map(|e| &e.patterns[col]))
            .unwrap_or_else(|| cx.binder(&Name::new("s")));
        cx.scope.push((name.clone(), name.clone()));
        params.push(name);
    }

    let occs: Vec<Name> = params.clone();
    let rows: Vec<MatchRow> = def
        .equations
        .iter()
        .map(|eq| MatchRow {
            pats: eq.patterns.clone(),
            binds: Vec::new(),
            rhs: &eq.rhs,
            pos: eq.pos,
        })
        .collect();
    let body = cx.compile_match(&occs, rows, def.pos)?;
    for _ in 0..arity {
        cx.scope.pop();
    }

    let mut core = params
        .into_iter()
        .rev()
        .fold(body, |acc, p| Term::Lam(p, Box::new(acc)));
    if cx.rec_used {
        core = Term::Fix(cx.rec_var.clone(), Box::new(core));
    }
    let value = Term::boxed(core);
    debug_assert!(!contains_machine_forms(&value));
    Ok(ElabDef {
        name: def.name.clone(),
        scheme,
        value,
        pos: def.pos,
    })
}

fn common_var<'a>(mut pats: impl Iterator<Item = &'a Pat>) -> Option<Name> {
    let first = match &pats.next()?.kind {
        PatKind::Var(n) => n.clone(),
        _ => return None,
    };
    for p in pats {
        match &p.kind {
            PatKind::Var(n) if *n == first => {}
            _ => return None,
        }
    }
    Some(first)
}

/// One row of a pattern matrix. `binds` renames pattern variables that
/// already matched a whole occurrence; they enter scope only when this
/// row's right-hand side is elaborated.
struct MatchRow<'a> {
    pats: Vec<Pat>,
    binds: Vec<(Name, Name)>,
    rhs: &'a SExpr,
    pos: Pos,
}

/// Expression elaboration context for one definition or output body.
struct ExprCx<'a> {
    top_names: &'a [Name],
    current_def: Option<Name>,
    rec_var: Name,
    rec_used: bool,
    /// surface name → core name, innermost last
    scope: Vec<(Name, Name)>,
    /// known delayed-fixed-point binders (core names), excluded from clock
    /// inference
    fix_vars: Vec<Name>,
    /// let-lift frames; `None` is a stabilization barrier (box/fix body)
    frames: Vec<Option<Vec<(Name, Term)>>>,
    supply: NameSupply,
}

impl<'a> ExprCx<'a> {
    fn new(top_names: &'a [Name], current_def: Option<Name>) -> Self {
        let mut supply = NameSupply::new();
        let r = Name::new("r");
        let rec_var = if top_names.contains(&r) || current_def.as_ref() == Some(&r) {
            supply.fresh("r")
        } else {
            r
        };
        ExprCx {
            top_names,
            current_def,
            rec_var: rec_var.clone(),
            rec_used: false,
            scope: Vec::new(),
            fix_vars: vec![rec_var],
            frames: Vec::new(),
            supply,
        }
    }

    /// Pick a binder name: keep `hint` unless it would shadow something in
    /// scope.
    fn binder(&mut self, hint: &Name) -> Name {
        let shadows = self.scope.iter().any(|(_, core)| core == hint)
            || self.fix_vars.contains(hint)
            || self.current_def.as_ref() == Some(hint)
            || self.top_names.contains(hint);
        if shadows {
            self.supply.fresh(hint.as_str())
        } else {
            hint.clone()
        }
    }

    fn lookup(&self, n: &Name) -> Option<Name> {
        self.scope
            .iter()
            .rev()
            .find(|(surf, _)| surf == n)
            .map(|(_, core)| core.clone())
    }

    fn expr(&mut self, e: &'a SExpr) -> Result<Term, ElabError> {
        match &e.kind {
            SExprKind::Var(n) => {
                if let Some(core) = self.lookup(n) {
                    Ok(Term::Var(core))
                } else if self.current_def.as_ref() == Some(n) {
                    self.rec_used = true;
                    Ok(Term::adv(Term::Var(self.rec_var.clone())))
                } else if self.top_names.contains(n) {
                    Ok(Term::unbox(Term::Var(n.clone())))
                } else {
                    // leave free; the typechecker reports unbound variables
                    Ok(Term::Var(n.clone()))
                }
            }
            SExprKind::NatLit(n) => Ok(Term::nat(*n)),
            SExprKind::FloatLit(x) => Ok(Term::FloatLit(*x)),
            SExprKind::Unit => Ok(Term::Unit),
            SExprKind::Lam(params, body) => {
                let mut core_params = Vec::new();
                for p in params {
                    let core = self.binder(p);
                    self.scope.push((p.clone(), core.clone()));
                    core_params.push(core);
                }
                let body = self.expr(body)?;
                for _ in params {
                    self.scope.pop();
                }
                Ok(core_params
                    .into_iter()
                    .rev()
                    .fold(body, |acc, p| Term::Lam(p, Box::new(acc))))
            }
            SExprKind::App(f, a) => Ok(Term::app(self.expr(f)?, self.expr(a)?)),
            SExprKind::Let(x, s, body) => {
                let s = self.expr(s)?;
                let core = self.binder(x);
                self.scope.push((x.clone(), core.clone()));
                let body = self.expr(body)?;
                self.scope.pop();
                Ok(Term::let_(core, s, body))
            }
            SExprKind::Seq(a, b) => {
                let a = self.expr(a)?;
                let binder = self.supply.fresh("u");
                let b = self.expr(b)?;
                Ok(Term::let_(binder, a, b))
            }
            SExprKind::Pair(a, b) => Ok(Term::pair(self.expr(a)?, self.expr(b)?)),
            SExprKind::Proj(ix, a) => Ok(Term::proj(*ix, self.expr(a)?)),
            SExprKind::Inj(ix, a) => Ok(Term::inj(*ix, self.expr(a)?)),
            SExprKind::Suc(a) => Ok(Term::suc(self.expr(a)?)),
            SExprKind::NatAdd(a, b) => {
                let a = self.expr(a)?;
                let b = self.expr(b)?;
                let x = self.supply.fresh("x");
                let y = self.supply.fresh("y");
                Ok(Term::NatRec(
                    Box::new(b),
                    x,
                    y.clone(),
                    Box::new(Term::suc(Term::Var(y))),
                    Box::new(a),
                ))
            }
            SExprKind::FloatBin(op, a, b) => Ok(Term::FloatOp(
                *op,
                Box::new(self.expr(a)?),
                Box::new(self.expr(b)?),
            )),
            SExprKind::Case(scrut, alts) => {
                let scrut_core = self.expr(scrut)?;
                let (occ, wrap) = match &scrut_core {
                    Term::Var(n) => (n.clone(), None),
                    _ => {
                        let x = self.binder(&Name::new("scrut"));
                        (x.clone(), Some((x, scrut_core.clone())))
                    }
                };
                if let Some((x, _)) = &wrap {
                    self.scope.push((x.clone(), x.clone()));
                }
                let rows: Vec<MatchRow> = alts
                    .iter()
                    .map(|(p, rhs)| MatchRow {
                        pats: vec![p.clone()],
                        binds: Vec::new(),
                        rhs,
                        pos: p.pos,
                    })
                    .collect();
                let body = self.compile_match(&[occ], rows, e.pos)?;
                if let Some((x, s)) = wrap {
                    self.scope.pop();
                    Ok(Term::let_(x, s, body))
                } else {
                    Ok(body)
                }
            }
            SExprKind::NatRec(s, x, y, step, n) => {
                let s = self.expr(s)?;
                let n = self.expr(n)?;
                let cx_ = self.binder(x);
                let cy = self.binder(y);
                self.scope.push((x.clone(), cx_.clone()));
                self.scope.push((y.clone(), cy.clone()));
                let step = self.expr(step)?;
                self.scope.pop();
                self.scope.pop();
                Ok(Term::NatRec(
                    Box::new(s),
                    cx_,
                    cy,
                    Box::new(step),
                    Box::new(n),
                ))
            }
            SExprKind::Cons(a, b) => Ok(Term::cons(self.expr(a)?, self.expr(b)?)),
            SExprKind::Delay(clock, body) => {
                self.frames.push(Some(Vec::new()));
                let body_core = self.expr(body)?;
                let explicit = match clock {
                    Some(c) => Some(self.clock(c)?),
                    None => None,
                };
                let lifted = self
                    .frames
                    .pop()
                    .flatten()
                    .expect("delay frame must be present");
                let theta = match explicit {
                    Some(c) => c,
                    None => match infer_clock(&body_core, &self.fix_vars) {
                        Some(c) => c,
                        None => {
                            return err(
                                e.pos,
                                "cannot infer a clock for this delay: no adv/select under it; \
                                 write an explicit subscript `delay{cl v}`",
                            )
                        }
                    },
                };
                let mut out = Term::delay(theta, body_core);
                for (x, bound) in lifted.into_iter().rev() {
                    out = Term::let_(x, bound, out);
                }
                Ok(out)
            }
            SExprKind::Adv(a) => {
                let v = self.expr(a)?;
                let v = self.ensure_value(v, e.pos, "adv")?;
                Ok(Term::adv(v))
            }
            SExprKind::Select(a, b) => {
                let va = self.expr(a)?;
                let va = self.ensure_value(va, e.pos, "select")?;
                let vb = self.expr(b)?;
                let vb = self.ensure_value(vb, e.pos, "select")?;
                Ok(Term::Select(Box::new(va), Box::new(vb)))
            }
            SExprKind::Never => Ok(Term::Never),
            SExprKind::Boxed(a) => {
                self.frames.push(None);
                let a = self.expr(a)?;
                self.frames.pop();
                Ok(Term::boxed(a))
            }
            SExprKind::Unbox(a) => Ok(Term::unbox(self.expr(a)?)),
            SExprKind::Into(a) => Ok(Term::into(self.expr(a)?)),
            SExprKind::Out(a) => Ok(Term::out(self.expr(a)?)),
            SExprKind::Fix(x, body) => {
                let core = self.binder(x);
                self.scope.push((x.clone(), core.clone()));
                self.fix_vars.push(core.clone());
                self.frames.push(None);
                let body = self.expr(body)?;
                self.frames.pop();
                self.fix_vars.pop();
                self.scope.pop();
                Ok(Term::Fix(core, Box::new(body)))
            }
            SExprKind::Await(k) => Ok(Term::Await(k.clone())),
            SExprKind::Read(k) => Ok(Term::Read(k.clone())),
        }
    }

    /// `adv`/`select` take values; let-lift anything else in front of the
    /// enclosing delay.
    fn ensure_value(&mut self, t: Term, pos: Pos, what: &str) -> Result<Term, ElabError> {
        if is_value(&t) {
            return Ok(t);
        }
        let x = self.supply.fresh("v");
        match self.frames.last_mut() {
            Some(Some(frame)) => {
                frame.push((x.clone(), t));
                Ok(Term::Var(x))
            }
            _ => err(pos, format!("`{what}` used outside of a delay")),
        }
    }

    fn clock(&mut self, c: &'a SClock) -> Result<ClockExpr, ElabError> {
        match c {
            SClock::Of(v) => {
                let pos = v.pos;
                let core = self.expr(v)?;
                let core = self.ensure_value(core, pos, "cl")?;
                Ok(ClockExpr::of(core))
            }
            SClock::Join(a, b) => Ok(ClockExpr::join(self.clock(a)?, self.clock(b)?)),
        }
    }

    // ---------------- pattern-match compilation ----------------

    /// Compile a pattern matrix over variable occurrences `occs`.
    fn compile_match(
        &mut self,
        occs: &[Name],
        rows: Vec<MatchRow<'a>>,
        pos: Pos,
    ) -> Result<Term, ElabError> {
        if rows.is_empty() {
            return err(pos, "non-exhaustive patterns");
        }

        // find the leftmost column with structure; columns of plain
        // variables/wildcards just bind
        let col = (0..occs.len()).find(|&c| {
            rows.iter()
                .any(|r| !matches!(r.pats[c].kind, PatKind::Var(_) | PatKind::Wild))
        });

        let col = match col {
            None => {
                // every remaining pattern is irrefutable: the first row wins
                let row = &rows[0];
                let mut pushed = row.binds.len();
                for b in &row.binds {
                    self.scope.push(b.clone());
                }
                for (c, occ) in occs.iter().enumerate() {
                    if let PatKind::Var(n) = &row.pats[c].kind {
                        self.scope.push((n.clone(), occ.clone()));
                        pushed += 1;
                    }
                }
                let result = self.expr(row.rhs);
                for _ in 0..pushed {
                    self.scope.pop();
                }
                return result;
            }
            Some(c) => c,
        };

        let occ = occs[col].clone();
        let shape = rows
            .iter()
            .find_map(|r| match &r.pats[col].kind {
                PatKind::Var(_) | PatKind::Wild => None,
                other => Some(shape_of(other)),
            })
            .expect("column was chosen to contain structure");

        for r in &rows {
            match &r.pats[col].kind {
                PatKind::Var(_) | PatKind::Wild => {}
                other if shape_of(other) == shape => {}
                _ => return err(r.pats[col].pos, "incompatible patterns in one column"),
            }
        }

        // a default row (variable or wildcard in this column) matches any
        // shape; a variable binds the whole occurrence via `binds`
        let default_row = |r: &MatchRow<'a>, sub: Vec<Pat>| -> MatchRow<'a> {
            let mut binds = r.binds.clone();
            if let PatKind::Var(v) = &r.pats[col].kind {
                binds.push((v.clone(), occ.clone()));
            }
            let mut pats = r.pats.clone();
            pats.remove(col);
            for (i, p) in sub.into_iter().enumerate() {
                pats.insert(col + i, p);
            }
            MatchRow {
                pats,
                binds,
                rhs: r.rhs,
                pos: r.pos,
            }
        };
        let wild = || Pat {
            kind: PatKind::Wild,
            pos,
        };

        match shape {
            Shape::Unit => {
                let rows2 = rows.iter().map(|r| default_row(r, Vec::new())).collect();
                let rest = remove_col(occs, col);
                self.compile_match(&rest, rows2, pos)
            }
            Shape::Pair | Shape::Cons => {
                let project = |ix: Ix| -> Term {
                    let base = Term::Var(occ.clone());
                    match shape {
                        Shape::Pair => Term::proj(ix, base),
                        _ => Term::proj(ix, Term::out(base)),
                    }
                };
                let hint1 =
                    self.subpat_name(&rows, col, 0, if shape == Shape::Cons { "x" } else { "a" });
                let hint2 =
                    self.subpat_name(&rows, col, 1, if shape == Shape::Cons { "xs" } else { "b" });
                let n1 = self.binder(&hint1);
                self.scope.push((n1.clone(), n1.clone()));
                let n2 = self.binder(&hint2);
                self.scope.pop();

                let rows2: Vec<MatchRow> = rows
                    .iter()
                    .map(|r| match &r.pats[col].kind {
                        PatKind::Pair(a, b) | PatKind::Cons(a, b) => {
                            let mut pats = r.pats.clone();
                            pats.remove(col);
                            pats.insert(col, (**a).clone());
                            pats.insert(col + 1, (**b).clone());
                            MatchRow {
                                pats,
                                binds: r.binds.clone(),
                                rhs: r.rhs,
                                pos: r.pos,
                            }
                        }
                        _ => default_row(r, vec![wild(), wild()]),
                    })
                    .collect();

                let mut occs2: Vec<Name> = occs.to_vec();
                occs2.remove(col);
                occs2.insert(col, n1.clone());
                occs2.insert(col + 1, n2.clone());

                self.scope.push((n1.clone(), n1.clone()));
                self.scope.push((n2.clone(), n2.clone()));
                let body = self.compile_match(&occs2, rows2, pos);
                self.scope.pop();
                self.scope.pop();

                Ok(Term::let_(
                    n1,
                    project(Ix::I1),
                    Term::let_(n2, project(Ix::I2), body?),
                ))
            }
            Shape::Inj => {
                let split = |which: Ix| -> Vec<MatchRow<'a>> {
                    rows.iter()
                        .filter_map(|r| match &r.pats[col].kind {
                            PatKind::Inj(ix, p) if *ix == which => {
                                Some(replace_col(r, col, (**p).clone()))
                            }
                            PatKind::Inj(..) => None,
                            _ => Some(default_row(r, vec![wild()])),
                        })
                        .collect()
                };
                let rows1 = split(Ix::I1);
                let rows2 = split(Ix::I2);
                if rows1.is_empty() {
                    return err(pos, "non-exhaustive patterns: missing `in1` case");
                }
                if rows2.is_empty() {
                    return err(pos, "non-exhaustive patterns: missing `in2` case");
                }

                let b1 = self.binder(&self.inj_subpat_name(&rows, col, Ix::I1));
                let mut occs1 = occs.to_vec();
                occs1[col] = b1.clone();
                self.scope.push((b1.clone(), b1.clone()));
                let t1 = self.compile_match(&occs1, rows1, pos);
                self.scope.pop();

                let b2 = self.binder(&self.inj_subpat_name(&rows, col, Ix::I2));
                let mut occs2 = occs.to_vec();
                occs2[col] = b2.clone();
                self.scope.push((b2.clone(), b2.clone()));
                let t2 = self.compile_match(&occs2, rows2, pos);
                self.scope.pop();

                Ok(Term::Case(
                    Box::new(Term::Var(occ)),
                    b1,
                    Box::new(t1?),
                    b2,
                    Box::new(t2?),
                ))
            }
            Shape::Nat => {
                // expose zero/suc through an effect-free natrec probe:
                //   natrec (in1 ()) {p q. in2 p} o : Unit + Nat
                let rows_zero: Vec<MatchRow> = rows
                    .iter()
                    .filter_map(|r| match &r.pats[col].kind {
                        PatKind::Zero => {
                            let mut row = replace_col(r, col, wild());
                            row.pats.remove(col);
                            Some(row)
                        }
                        PatKind::Suc(_) => None,
                        _ => {
                            let mut row = default_row(r, vec![wild()]);
                            row.pats.remove(col);
                            Some(row)
                        }
                    })
                    .collect();
                let rows_suc: Vec<MatchRow> = rows
                    .iter()
                    .filter_map(|r| match &r.pats[col].kind {
                        PatKind::Suc(p) => Some(replace_col(r, col, (**p).clone())),
                        PatKind::Zero => None,
                        _ => Some(default_row(r, vec![wild()])),
                    })
                    .collect();
                if rows_zero.is_empty() {
                    return err(pos, "non-exhaustive patterns: missing zero case");
                }
                if rows_suc.is_empty() {
                    return err(pos, "non-exhaustive patterns: missing successor case");
                }

                let occs_zero = remove_col(occs, col);
                let t_zero = self.compile_match(&occs_zero, rows_zero, pos)?;

                let pred = self.binder(&self.subpat_name_nat(&rows, col));
                let mut occs_suc = occs.to_vec();
                occs_suc[col] = pred.clone();
                self.scope.push((pred.clone(), pred.clone()));
                let t_suc = self.compile_match(&occs_suc, rows_suc, pos);
                self.scope.pop();

                let px = self.supply.fresh("p");
                let py = self.supply.fresh("q");
                let probe = Term::NatRec(
                    Box::new(Term::inj(Ix::I1, Term::Unit)),
                    px.clone(),
                    py,
                    Box::new(Term::inj(Ix::I2, Term::Var(px))),
                    Box::new(Term::Var(occ)),
                );
                let unused = self.supply.fresh("z");
                Ok(Term::Case(
                    Box::new(probe),
                    unused,
                    Box::new(t_zero),
                    pred,
                    Box::new(t_suc?),
                ))
            }
        }
    }

    fn subpat_name(&self, rows: &[MatchRow], col: usize, ix: usize, fallback: &str) -> Name {
        let mut name: Option<Name> = None;
        for r in rows {
            let sub = match &r.pats[col].kind {
                PatKind::Pair(a, b) | PatKind::Cons(a, b) => {
                    if ix == 0 {
                        a
                    } else {
                        b
                    }
                }
                _ => continue,
            };
            match (&sub.kind, &name) {
                (PatKind::Var(n), None) => name = Some(n.clone()),
                (PatKind::Var(n), Some(m)) if n == m => {}
                _ => return Name::new(fallback),
            }
        }
        name.unwrap_or_else(|| Name::new(fallback))
    }

    fn inj_subpat_name(&self, rows: &[MatchRow], col: usize, which: Ix) -> Name {
        let mut name: Option<Name> = None;
        for r in rows {
            if let PatKind::Inj(ix, p) = &r.pats[col].kind {
                if *ix != which {
                    continue;
                }
                match (&p.kind, &name) {
                    (PatKind::Var(n), None) => name = Some(n.clone()),
                    (PatKind::Var(n), Some(m)) if n == m => {}
                    _ => return Name::new("y"),
                }
            }
        }
        name.unwrap_or_else(|| Name::new("y"))
    }

    fn subpat_name_nat(&self, rows: &[MatchRow], col: usize) -> Name {
        let mut name: Option<Name> = None;
        for r in rows {
            if let PatKind::Suc(p) = &r.pats[col].kind {
                match (&p.kind, &name) {
                    (PatKind::Var(n), None) => name = Some(n.clone()),
                    (PatKind::Var(n), Some(m)) if n == m => {}
                    _ => return Name::new("n"),
                }
            }
        }
        name.unwrap_or_else(|| Name::new("n"))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Shape {
    Unit,
    Pair,
    Cons,
    Inj,
    Nat,
}

fn shape_of(k: &PatKind) -> Shape {
    match k {
        PatKind::Unit => Shape::Unit,
        PatKind::Pair(..) => Shape::Pair,
        PatKind::Cons(..) => Shape::Cons,
        PatKind::Inj(..) => Shape::Inj,
        PatKind::Zero | PatKind::Suc(_) => Shape::Nat,
        PatKind::Var(_) | PatKind::Wild => unreachable!("not structural"),
    }
}

fn remove_col(occs: &[Name], col: usize) -> Vec<Name> {
    let mut v = occs.to_vec();
    v.remove(col);
    v
}

fn replace_col<'a>(r: &MatchRow<'a>, col: usize, p: Pat) -> MatchRow<'a> {
    let mut pats = r.pats.clone();
    pats[col] = p;
    MatchRow {
        pats,
        binds: r.binds.clone(),
        rhs: r.rhs,
        pos: r.pos,
    }
}

/// Infer an omitted delay subscript: the join of `cl v` for every `adv v`
/// and `select v₁ v₂` occurring directly under the delay. Advances of known
/// delayed-fixed-point variables contribute nothing (they run on any tick).
/// Returns `None` if no atom is found.
fn infer_clock(body: &Term, fix_vars: &[Name]) -> Option<ClockExpr> {
    let mut atoms: Vec<Term> = Vec::new();
    collect_clock_atoms(body, fix_vars, &mut Vec::new(), &mut atoms);
    let mut it = atoms.into_iter();
    let first = it.next()?;
    Some(it.fold(ClockExpr::of(first), |acc, v| {
        ClockExpr::join(acc, ClockExpr::of(v))
    }))
}

fn push_atom(atoms: &mut Vec<Term>, v: &Term) {
    if !atoms.iter().any(|t| t == v) {
        atoms.push(v.clone());
    }
}

fn collect_clock_atoms(
    t: &Term,
    fix_vars: &[Name],
    shadowed: &mut Vec<Name>,
    atoms: &mut Vec<Term>,
) {
    match t {
        Term::Adv(v) => {
            if let Term::Var(n) = v.as_ref() {
                let is_fix = fix_vars.contains(n) && !shadowed.contains(n);
                if !is_fix {
                    push_atom(atoms, v);
                }
            } else {
                push_atom(atoms, v);
            }
        }
        Term::Select(a, b) => {
            push_atom(atoms, a);
            push_atom(atoms, b);
        }
        // nested delays own their advances; box and fix bodies are
        // stabilized, so their advances belong to their own delays
        Term::Delay(..) | Term::Boxed(_) | Term::Fix(..) | Term::DFix(..) => {}
        Term::Var(_)
        | Term::Unit
        | Term::Zero
        | Term::FloatLit(_)
        | Term::Never
        | Term::Await(_)
        | Term::Read(_)
        | Term::Loc(_) => {}
        Term::Suc(a)
        | Term::Inj(_, a)
        | Term::Proj(_, a)
        | Term::Unbox(a)
        | Term::Into(a)
        | Term::Out(a) => collect_clock_atoms(a, fix_vars, shadowed, atoms),
        Term::Lam(x, a) => {
            shadowed.push(x.clone());
            collect_clock_atoms(a, fix_vars, shadowed, atoms);
            shadowed.pop();
        }
        Term::FloatOp(_, a, b) | Term::Pair(a, b) | Term::App(a, b) => {
            collect_clock_atoms(a, fix_vars, shadowed, atoms);
            collect_clock_atoms(b, fix_vars, shadowed, atoms);
        }
        Term::Let(x, s, body) => {
            collect_clock_atoms(s, fix_vars, shadowed, atoms);
            shadowed.push(x.clone());
            collect_clock_atoms(body, fix_vars, shadowed, atoms);
            shadowed.pop();
        }
        Term::Case(s, x1, t1, x2, t2) => {
            collect_clock_atoms(s, fix_vars, shadowed, atoms);
            shadowed.push(x1.clone());
            collect_clock_atoms(t1, fix_vars, shadowed, atoms);
            shadowed.pop();
            shadowed.push(x2.clone());
            collect_clock_atoms(t2, fix_vars, shadowed, atoms);
            shadowed.pop();
        }
        Term::NatRec(s, x, y, step, n) => {
            collect_clock_atoms(s, fix_vars, shadowed, atoms);
            shadowed.push(x.clone());
            shadowed.push(y.clone());
            collect_clock_atoms(step, fix_vars, shadowed, atoms);
            shadowed.pop();
            shadowed.pop();
            collect_clock_atoms(n, fix_vars, shadowed, atoms);
        }
    }
}
