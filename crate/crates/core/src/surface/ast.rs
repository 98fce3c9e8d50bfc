//! Surface abstract syntax with source positions.

use std::fmt;

use crate::input::ChannelClass;
use crate::syntax::{FloatPrim, Ix, Name};

/// A source position (1-based line and column).
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceProgram {
    pub inputs: Vec<InputDecl>,
    pub defs: Vec<TopDef>,
    pub outputs: Vec<OutputDecl>,
}

impl SurfaceProgram {
    pub fn empty() -> Self {
        SurfaceProgram {
            inputs: Vec::new(),
            defs: Vec::new(),
            outputs: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InputDecl {
    pub name: Name,
    pub class: ChannelClass,
    pub ty: SType,
    pub pos: Pos,
}

/// A top-level definition: a signature (possibly with stability constraints)
/// and one or more defining equations.
#[derive(Clone, Debug, PartialEq)]
pub struct TopDef {
    pub name: Name,
    pub stable_vars: Vec<Name>,
    pub signature: SType,
    pub equations: Vec<Equation>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Equation {
    pub patterns: Vec<Pat>,
    pub rhs: SExpr,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputDecl {
    pub name: Name,
    pub ty: SType,
    pub expr: SExpr,
    pub pos: Pos,
}

/// Surface types.
#[derive(Clone, Debug, PartialEq)]
pub struct SType {
    pub kind: STypeKind,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub enum STypeKind {
    Unit,
    Nat,
    Float,
    Var(Name),
    Prod(Box<SType>, Box<SType>),
    Sum(Box<SType>, Box<SType>),
    Fun(Box<SType>, Box<SType>),
    Sig(Box<SType>),
    Boxed(Box<SType>),
    DelayExist(Box<SType>),
    DelayAny(Box<SType>),
    Fix(Name, Box<SType>),
}

/// Surface patterns. Linear; float literals are not patterns.
#[derive(Clone, Debug, PartialEq)]
pub struct Pat {
    pub kind: PatKind,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PatKind {
    Wild,
    Var(Name),
    Unit,
    Pair(Box<Pat>, Box<Pat>),
    Inj(Ix, Box<Pat>),
    Cons(Box<Pat>, Box<Pat>),
    Zero,
    Suc(Box<Pat>),
}

impl Pat {
    /// Variables bound by this pattern, in left-to-right order.
    pub fn binders(&self, out: &mut Vec<Name>) {
        match &self.kind {
            PatKind::Wild | PatKind::Unit | PatKind::Zero => {}
            PatKind::Var(n) => out.push(n.clone()),
            PatKind::Pair(a, b) | PatKind::Cons(a, b) => {
                a.binders(out);
                b.binders(out);
            }
            PatKind::Inj(_, p) | PatKind::Suc(p) => p.binders(out),
        }
    }

    pub fn is_irrefutable(&self) -> bool {
        match &self.kind {
            PatKind::Wild | PatKind::Var(_) | PatKind::Unit => true,
            PatKind::Pair(a, b) | PatKind::Cons(a, b) => {
                a.is_irrefutable() && b.is_irrefutable()
            }
            PatKind::Inj(..) | PatKind::Zero | PatKind::Suc(_) => false,
        }
    }
}

/// Surface expressions.
#[derive(Clone, Debug, PartialEq)]
pub struct SExpr {
    pub kind: SExprKind,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SExprKind {
    Var(Name),
    NatLit(u64),
    FloatLit(f64),
    Unit,
    Lam(Vec<Name>, Box<SExpr>),
    App(Box<SExpr>, Box<SExpr>),
    Let(Name, Box<SExpr>, Box<SExpr>),
    Seq(Box<SExpr>, Box<SExpr>),
    Pair(Box<SExpr>, Box<SExpr>),
    Proj(Ix, Box<SExpr>),
    Inj(Ix, Box<SExpr>),
    Suc(Box<SExpr>),
    NatAdd(Box<SExpr>, Box<SExpr>),
    FloatBin(FloatPrim, Box<SExpr>, Box<SExpr>),
    Case(Box<SExpr>, Vec<(Pat, SExpr)>),
    NatRec(Box<SExpr>, Name, Name, Box<SExpr>, Box<SExpr>),
    Cons(Box<SExpr>, Box<SExpr>),
    Delay(Option<SClock>, Box<SExpr>),
    Adv(Box<SExpr>),
    Select(Box<SExpr>, Box<SExpr>),
    Never,
    Boxed(Box<SExpr>),
    Unbox(Box<SExpr>),
    Into(Box<SExpr>),
    Out(Box<SExpr>),
    Fix(Name, Box<SExpr>),
    Await(Name),
    Read(Name),
}

/// Surface clock expressions for explicit delay subscripts.
#[derive(Clone, Debug, PartialEq)]
pub enum SClock {
    Of(Box<SExpr>),
    Join(Box<SClock>, Box<SClock>),
}
