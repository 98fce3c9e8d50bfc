//! Recursive-descent parser.
//!
//! Top-level declarations obey an offside rule: the right-hand side of an
//! equation or output extends until a token appears at or left of the
//! declaration's anchor column on a later line (brackets suspend the rule).
//! `|` introduces an additional equation for the current definition and also
//! separates case alternatives; it never continues an expression.

use crate::input::ChannelClass;
use crate::syntax::{FloatPrim, Ix, Name};

use super::ast::*;
use super::lexer::{keyword_str, lex, Kw, LexError, Tok, Token};

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("syntax error at {pos}: found {found}, expected {expected}")]
pub struct ParseError {
    pub pos: Pos,
    pub found: String,
    pub expected: String,
}

impl From<LexError> for ParseError {
    fn from(e: LexError) -> Self {
        ParseError {
            pos: e.pos,
            found: "invalid token".into(),
            expected: e.message,
        }
    }
}

pub fn parse_program(src: &str) -> Result<SurfaceProgram, ParseError> {
    let tokens = lex(src)?;
    let mut p = Parser::new(tokens);
    let prog = p.program()?;
    p.expect_eof()?;
    Ok(prog)
}

/// Parse a bare sequence of `def` blocks (used for the prelude).
pub fn parse_defs_fragment(src: &str) -> Result<Vec<TopDef>, ParseError> {
    let tokens = lex(src)?;
    let mut p = Parser::new(tokens);
    let mut defs = Vec::new();
    while p.peek_kw(Kw::Def) {
        defs.push(p.top_def()?);
    }
    p.expect_eof()?;
    Ok(defs)
}

/// Parse a single expression (used by tests and the round-trip property).
pub fn parse_expr_fragment(src: &str) -> Result<SExpr, ParseError> {
    let tokens = lex(src)?;
    let mut p = Parser::new(tokens);
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
    /// Offside anchors: expression parsing stops before a line-initial token
    /// at column ≤ the innermost anchor. Brackets suspend the rule.
    anchors: Vec<u32>,
    depth: u32,
}

impl Parser {
    fn new(tokens: Vec<Token>) -> Self {
        Parser {
            tokens,
            at: 0,
            anchors: Vec::new(),
            depth: 0,
        }
    }

    fn here(&self) -> &Token {
        &self.tokens[self.at]
    }

    fn pos(&self) -> Pos {
        self.here().pos
    }

    /// True if the current token is cut off by the offside rule.
    fn offside(&self) -> bool {
        if self.depth > 0 {
            return false;
        }
        match self.anchors.last() {
            Some(&anchor) => {
                let t = self.here();
                t.line_start && t.pos.col <= anchor
            }
            None => false,
        }
    }

    fn peek(&self) -> Option<&Tok> {
        if self.offside() {
            None
        } else {
            Some(&self.here().tok)
        }
    }

    fn peek_kw(&self, k: Kw) -> bool {
        matches!(self.peek(), Some(Tok::Kw(kk)) if *kk == k)
    }

    fn peek_is(&self, t: &Tok) -> bool {
        self.peek() == Some(t)
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.at].clone();
        if !matches!(t.tok, Tok::Eof) {
            self.at += 1;
        }
        t
    }

    fn err<T>(&self, expected: impl Into<String>) -> Result<T, ParseError> {
        let t = self.here();
        let found = if self.offside() {
            format!("{} (offside)", t.tok)
        } else {
            t.tok.to_string()
        };
        Err(ParseError {
            pos: t.pos,
            found,
            expected: expected.into(),
        })
    }

    fn expect(&mut self, want: Tok) -> Result<Token, ParseError> {
        if self.peek_is(&want) {
            Ok(self.bump())
        } else {
            self.err(want.to_string())
        }
    }

    fn expect_kw(&mut self, k: Kw) -> Result<Token, ParseError> {
        if self.peek_kw(k) {
            Ok(self.bump())
        } else {
            self.err(format!("`{}`", keyword_str(k)))
        }
    }

    fn expect_eof(&mut self) -> Result<(), ParseError> {
        if matches!(self.here().tok, Tok::Eof) {
            Ok(())
        } else {
            self.err("end of input")
        }
    }

    fn ident(&mut self) -> Result<(Name, Pos), ParseError> {
        match self.peek() {
            Some(Tok::Ident(_)) => {
                let t = self.bump();
                match t.tok {
                    Tok::Ident(s) => Ok((Name::new(s), t.pos)),
                    _ => unreachable!(),
                }
            }
            _ => self.err("identifier"),
        }
    }

    // ---------------- program structure ----------------

    fn program(&mut self) -> Result<SurfaceProgram, ParseError> {
        let mut prog = SurfaceProgram::empty();
        loop {
            match self.peek() {
                Some(Tok::Kw(Kw::Inputs)) => {
                    self.bump();
                    while matches!(self.peek(), Some(Tok::Ident(_))) {
                        prog.inputs.push(self.input_decl()?);
                    }
                }
                Some(Tok::Kw(Kw::Defs)) => {
                    self.bump();
                    while self.peek_kw(Kw::Def) {
                        prog.defs.push(self.top_def()?);
                    }
                }
                Some(Tok::Kw(Kw::Outputs)) => {
                    self.bump();
                    while matches!(self.peek(), Some(Tok::Ident(_))) {
                        prog.outputs.push(self.output_decl()?);
                    }
                }
                Some(Tok::Eof) | None => break,
                _ => return self.err("`inputs`, `defs` or `outputs`"),
            }
        }
        Ok(prog)
    }

    fn input_decl(&mut self) -> Result<InputDecl, ParseError> {
        let (name, pos) = self.ident()?;
        self.expect(Tok::Colon)?;
        let class = match self.peek() {
            Some(Tok::Ident(s)) => match s.as_str() {
                "p" => ChannelClass::PushOnly,
                "b" => ChannelClass::BufferedOnly,
                "bp" => ChannelClass::BufferedPush,
                _ => return self.err("channel class `p`, `b` or `bp`"),
            },
            _ => return self.err("channel class `p`, `b` or `bp`"),
        };
        self.bump();
        let ty = self.stype()?;
        Ok(InputDecl {
            name,
            class,
            ty,
            pos,
        })
    }

    fn top_def(&mut self) -> Result<TopDef, ParseError> {
        let def_tok = self.expect_kw(Kw::Def)?;
        let anchor = def_tok.pos.col;
        let (name, pos) = self.ident()?;
        self.expect(Tok::Colon)?;
        self.anchors.push(anchor);
        let (stable_vars, signature) = self.scheme()?;
        self.anchors.pop();

        let mut equations = Vec::new();
        loop {
            // every equation starts with the definition's name
            let eq_pos = self.pos();
            let (eq_name, _) = self.ident()?;
            if eq_name != name {
                return Err(ParseError {
                    pos: eq_pos,
                    found: format!("equation for `{eq_name}`"),
                    expected: format!("equation for `{name}`"),
                });
            }
            let mut patterns = Vec::new();
            while !self.peek_is(&Tok::Eq) {
                patterns.push(self.pattern_atom()?);
            }
            self.expect(Tok::Eq)?;
            self.anchors.push(anchor);
            let rhs = self.expr()?;
            self.anchors.pop();
            equations.push(Equation {
                patterns,
                rhs,
                pos: eq_pos,
            });
            if self.peek_is(&Tok::Pipe) {
                self.bump();
            } else {
                break;
            }
        }
        Ok(TopDef {
            name,
            stable_vars,
            signature,
            equations,
            pos,
        })
    }

    fn output_decl(&mut self) -> Result<OutputDecl, ParseError> {
        let (name, pos) = self.ident()?;
        let anchor = pos.col;
        self.expect(Tok::Colon)?;
        self.anchors.push(anchor);
        let ty = self.stype()?;
        self.expect(Tok::Eq)?;
        let expr = self.expr()?;
        self.anchors.pop();
        Ok(OutputDecl {
            name,
            ty,
            expr,
            pos,
        })
    }

    /// `Stable A, Stable B => T` or plain `T`.
    fn scheme(&mut self) -> Result<(Vec<Name>, SType), ParseError> {
        let save = self.at;
        if let Some(Tok::Ident(s)) = self.peek() {
            if s == "Stable" {
                let mut vars = Vec::new();
                loop {
                    match self.peek() {
                        Some(Tok::Ident(s)) if s == "Stable" => {
                            self.bump();
                            let (v, _) = self.ident()?;
                            vars.push(v);
                        }
                        _ => return self.err("`Stable`"),
                    }
                    if self.peek_is(&Tok::Comma) {
                        self.bump();
                    } else {
                        break;
                    }
                }
                if self.peek_is(&Tok::FatArrow) {
                    self.bump();
                    let ty = self.stype()?;
                    return Ok((vars, ty));
                }
                // `Stable` turned out to be a type named Stable — back off
                self.at = save;
            }
        }
        let ty = self.stype()?;
        Ok((Vec::new(), ty))
    }

    // ---------------- types ----------------

    fn stype(&mut self) -> Result<SType, ParseError> {
        let pos = self.pos();
        let lhs = self.stype_sum()?;
        if self.peek_is(&Tok::Arrow) {
            self.bump();
            let rhs = self.stype()?;
            Ok(SType {
                kind: STypeKind::Fun(Box::new(lhs), Box::new(rhs)),
                pos,
            })
        } else {
            Ok(lhs)
        }
    }

    fn stype_sum(&mut self) -> Result<SType, ParseError> {
        let pos = self.pos();
        let lhs = self.stype_prod()?;
        if self.peek_is(&Tok::Plus) {
            self.bump();
            let rhs = self.stype_sum()?;
            Ok(SType {
                kind: STypeKind::Sum(Box::new(lhs), Box::new(rhs)),
                pos,
            })
        } else {
            Ok(lhs)
        }
    }

    fn stype_prod(&mut self) -> Result<SType, ParseError> {
        let pos = self.pos();
        let lhs = self.stype_atom()?;
        if self.peek_is(&Tok::Star) {
            self.bump();
            let rhs = self.stype_prod()?;
            Ok(SType {
                kind: STypeKind::Prod(Box::new(lhs), Box::new(rhs)),
                pos,
            })
        } else {
            Ok(lhs)
        }
    }

    fn stype_atom(&mut self) -> Result<SType, ParseError> {
        let pos = self.pos();
        let kind = match self.peek() {
            Some(Tok::LParen) => {
                self.bump();
                self.depth += 1;
                let inner = self.stype()?;
                self.depth -= 1;
                self.expect(Tok::RParen)?;
                return Ok(inner);
            }
            Some(Tok::Ident(s)) => match s.as_str() {
                "Unit" => {
                    self.bump();
                    STypeKind::Unit
                }
                "Nat" => {
                    self.bump();
                    STypeKind::Nat
                }
                "Float" => {
                    self.bump();
                    STypeKind::Float
                }
                "Sig" => {
                    self.bump();
                    STypeKind::Sig(Box::new(self.stype_atom()?))
                }
                "Box" => {
                    self.bump();
                    STypeKind::Boxed(Box::new(self.stype_atom()?))
                }
                "O" => {
                    self.bump();
                    STypeKind::DelayExist(Box::new(self.stype_atom()?))
                }
                "Any" => {
                    self.bump();
                    STypeKind::DelayAny(Box::new(self.stype_atom()?))
                }
                "Fix" => {
                    self.bump();
                    let (var, _) = self.ident()?;
                    self.expect(Tok::Dot)?;
                    let body = self.stype()?;
                    STypeKind::Fix(var, Box::new(body))
                }
                _ => {
                    let (n, _) = self.ident()?;
                    STypeKind::Var(n)
                }
            },
            _ => return self.err("a type"),
        };
        Ok(SType { kind, pos })
    }

    // ---------------- patterns ----------------

    fn pattern(&mut self) -> Result<Pat, ParseError> {
        let pos = self.pos();
        let lhs = self.pattern_app()?;
        if self.peek_is(&Tok::DoubleColon) {
            self.bump();
            let rhs = self.pattern()?;
            Ok(Pat {
                kind: PatKind::Cons(Box::new(lhs), Box::new(rhs)),
                pos,
            })
        } else {
            Ok(lhs)
        }
    }

    /// Constructor patterns with arguments (`suc p`, `in1 p`, `Left p q`).
    fn pattern_app(&mut self) -> Result<Pat, ParseError> {
        let pos = self.pos();
        match self.peek() {
            Some(Tok::Kw(Kw::Suc)) => {
                self.bump();
                let p = self.pattern_atom()?;
                Ok(Pat {
                    kind: PatKind::Suc(Box::new(p)),
                    pos,
                })
            }
            Some(Tok::Kw(Kw::In1)) => {
                self.bump();
                let p = self.pattern_atom()?;
                Ok(Pat {
                    kind: PatKind::Inj(Ix::I1, Box::new(p)),
                    pos,
                })
            }
            Some(Tok::Kw(Kw::In2)) => {
                self.bump();
                let p = self.pattern_atom()?;
                Ok(Pat {
                    kind: PatKind::Inj(Ix::I2, Box::new(p)),
                    pos,
                })
            }
            Some(Tok::Kw(k @ (Kw::Left | Kw::Right | Kw::Both))) => {
                let k = *k;
                self.bump();
                let a = self.pattern_atom()?;
                let b = self.pattern_atom()?;
                let pair = Pat {
                    kind: PatKind::Pair(Box::new(a), Box::new(b)),
                    pos,
                };
                Ok(lrb_pattern(k, pair, pos))
            }
            _ => self.pattern_atom(),
        }
    }

    fn pattern_atom(&mut self) -> Result<Pat, ParseError> {
        let pos = self.pos();
        match self.peek() {
            Some(Tok::Underscore) => {
                self.bump();
                Ok(Pat {
                    kind: PatKind::Wild,
                    pos,
                })
            }
            Some(Tok::Ident(_)) => {
                let (n, _) = self.ident()?;
                Ok(Pat {
                    kind: PatKind::Var(n),
                    pos,
                })
            }
            Some(Tok::NatLit(n)) => {
                let n = *n;
                self.bump();
                let mut p = Pat {
                    kind: PatKind::Zero,
                    pos,
                };
                for _ in 0..n {
                    p = Pat {
                        kind: PatKind::Suc(Box::new(p)),
                        pos,
                    };
                }
                Ok(p)
            }
            Some(Tok::LParen) => {
                self.bump();
                self.depth += 1;
                if self.peek_is(&Tok::RParen) {
                    self.depth -= 1;
                    self.bump();
                    return Ok(Pat {
                        kind: PatKind::Unit,
                        pos,
                    });
                }
                let first = self.pattern()?;
                let result = if self.peek_is(&Tok::Comma) {
                    self.bump();
                    let second = self.pattern()?;
                    Pat {
                        kind: PatKind::Pair(Box::new(first), Box::new(second)),
                        pos,
                    }
                } else {
                    first
                };
                self.depth -= 1;
                self.expect(Tok::RParen)?;
                Ok(result)
            }
            Some(Tok::Kw(Kw::Suc | Kw::In1 | Kw::In2 | Kw::Left | Kw::Right | Kw::Both)) => {
                self.pattern_app()
            }
            _ => self.err("a pattern"),
        }
    }

    // ---------------- expressions ----------------

    fn expr(&mut self) -> Result<SExpr, ParseError> {
        let pos = self.pos();
        match self.peek() {
            Some(Tok::Backslash) => {
                self.bump();
                let mut params = Vec::new();
                loop {
                    let (n, _) = self.ident()?;
                    params.push(n);
                    if self.peek_is(&Tok::Dot) {
                        self.bump();
                        break;
                    }
                }
                let body = self.expr()?;
                Ok(SExpr {
                    kind: SExprKind::Lam(params, Box::new(body)),
                    pos,
                })
            }
            Some(Tok::Kw(Kw::Let)) => {
                self.bump();
                let (n, _) = self.ident()?;
                self.expect(Tok::Eq)?;
                let bound = self.expr_seq()?;
                self.expect_kw(Kw::In)?;
                let body = self.expr()?;
                Ok(SExpr {
                    kind: SExprKind::Let(n, Box::new(bound), Box::new(body)),
                    pos,
                })
            }
            Some(Tok::Kw(Kw::Fix)) => {
                self.bump();
                let (n, _) = self.ident()?;
                self.expect(Tok::Dot)?;
                let body = self.expr()?;
                Ok(SExpr {
                    kind: SExprKind::Fix(n, Box::new(body)),
                    pos,
                })
            }
            _ => self.expr_seq(),
        }
    }

    /// `a ; b` — sequencing, right associative, loosest.
    fn expr_seq(&mut self) -> Result<SExpr, ParseError> {
        let pos = self.pos();
        let lhs = self.expr_cons()?;
        if self.peek_is(&Tok::Semi) {
            self.bump();
            let rhs = self.expr()?;
            Ok(SExpr {
                kind: SExprKind::Seq(Box::new(lhs), Box::new(rhs)),
                pos,
            })
        } else {
            Ok(lhs)
        }
    }

    /// `a :: b` — signal cons, right associative.
    fn expr_cons(&mut self) -> Result<SExpr, ParseError> {
        let pos = self.pos();
        let lhs = self.expr_cmp()?;
        if self.peek_is(&Tok::DoubleColon) {
            self.bump();
            let rhs = self.expr_cons()?;
            Ok(SExpr {
                kind: SExprKind::Cons(Box::new(lhs), Box::new(rhs)),
                pos,
            })
        } else {
            Ok(lhs)
        }
    }

    fn expr_cmp(&mut self) -> Result<SExpr, ParseError> {
        let pos = self.pos();
        let lhs = self.expr_add()?;
        let op = match self.peek() {
            Some(Tok::FEq) => Some(FloatPrim::Eq),
            Some(Tok::FLt) => Some(FloatPrim::Lt),
            Some(Tok::FLe) => Some(FloatPrim::Le),
            _ => None,
        };
        match op {
            Some(op) => {
                self.bump();
                let rhs = self.expr_add()?;
                Ok(SExpr {
                    kind: SExprKind::FloatBin(op, Box::new(lhs), Box::new(rhs)),
                    pos,
                })
            }
            None => Ok(lhs),
        }
    }

    fn expr_add(&mut self) -> Result<SExpr, ParseError> {
        let pos = self.pos();
        let mut lhs = self.expr_mul()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => None,
                Some(Tok::FAdd) => Some(FloatPrim::Add),
                Some(Tok::FSub) => Some(FloatPrim::Sub),
                _ => break,
            };
            self.bump();
            let rhs = self.expr_mul()?;
            lhs = match op {
                None => SExpr {
                    kind: SExprKind::NatAdd(Box::new(lhs), Box::new(rhs)),
                    pos,
                },
                Some(op) => SExpr {
                    kind: SExprKind::FloatBin(op, Box::new(lhs), Box::new(rhs)),
                    pos,
                },
            };
        }
        Ok(lhs)
    }

    fn expr_mul(&mut self) -> Result<SExpr, ParseError> {
        let pos = self.pos();
        let mut lhs = self.expr_app()?;
        loop {
            let op = match self.peek() {
                Some(Tok::FMul) => FloatPrim::Mul,
                Some(Tok::FDiv) => FloatPrim::Div,
                _ => break,
            };
            self.bump();
            let rhs = self.expr_app()?;
            lhs = SExpr {
                kind: SExprKind::FloatBin(op, Box::new(lhs), Box::new(rhs)),
                pos,
            };
        }
        Ok(lhs)
    }

    fn expr_app(&mut self) -> Result<SExpr, ParseError> {
        let pos = self.pos();
        let mut head = self.expr_atom()?;
        while self.starts_atom() {
            let arg = self.expr_atom()?;
            head = SExpr {
                kind: SExprKind::App(Box::new(head), Box::new(arg)),
                pos,
            };
        }
        Ok(head)
    }

    fn starts_atom(&self) -> bool {
        matches!(
            self.peek(),
            Some(
                Tok::Ident(_)
                    | Tok::NatLit(_)
                    | Tok::FloatLit(_)
                    | Tok::LParen
                    | Tok::Kw(
                        Kw::Delay
                            | Kw::Adv
                            | Kw::Select
                            | Kw::Never
                            | Kw::Box
                            | Kw::Unbox
                            | Kw::Into
                            | Kw::Out
                            | Kw::Await
                            | Kw::Read
                            | Kw::Suc
                            | Kw::Natrec
                            | Kw::Fst
                            | Kw::Snd
                            | Kw::In1
                            | Kw::In2
                            | Kw::Left
                            | Kw::Right
                            | Kw::Both
                            | Kw::Case
                    )
            )
        )
    }

    fn expr_atom(&mut self) -> Result<SExpr, ParseError> {
        let pos = self.pos();
        macro_rules! unary {
            ($ctor:ident) => {{
                self.bump();
                let a = self.expr_atom()?;
                SExpr {
                    kind: SExprKind::$ctor(Box::new(a)),
                    pos,
                }
            }};
        }
        let e = match self.peek() {
            Some(Tok::Ident(_)) => {
                let (n, _) = self.ident()?;
                SExpr {
                    kind: SExprKind::Var(n),
                    pos,
                }
            }
            Some(Tok::NatLit(n)) => {
                let n = *n;
                self.bump();
                SExpr {
                    kind: SExprKind::NatLit(n),
                    pos,
                }
            }
            Some(Tok::FloatLit(x)) => {
                let x = *x;
                self.bump();
                SExpr {
                    kind: SExprKind::FloatLit(x),
                    pos,
                }
            }
            Some(Tok::LParen) => {
                self.bump();
                self.depth += 1;
                if self.peek_is(&Tok::RParen) {
                    self.depth -= 1;
                    self.bump();
                    return Ok(SExpr {
                        kind: SExprKind::Unit,
                        pos,
                    });
                }
                let first = self.expr()?;
                let result = if self.peek_is(&Tok::Comma) {
                    self.bump();
                    let second = self.expr()?;
                    SExpr {
                        kind: SExprKind::Pair(Box::new(first), Box::new(second)),
                        pos,
                    }
                } else {
                    first
                };
                self.depth -= 1;
                self.expect(Tok::RParen)?;
                return Ok(result);
            }
            Some(Tok::Kw(Kw::Never)) => {
                self.bump();
                SExpr {
                    kind: SExprKind::Never,
                    pos,
                }
            }
            Some(Tok::Kw(Kw::Delay)) => {
                self.bump();
                let clock = if self.peek_is(&Tok::LBrace) {
                    self.bump();
                    self.depth += 1;
                    let c = self.clock()?;
                    self.depth -= 1;
                    self.expect(Tok::RBrace)?;
                    Some(c)
                } else {
                    None
                };
                let body = self.expr_atom()?;
                SExpr {
                    kind: SExprKind::Delay(clock, Box::new(body)),
                    pos,
                }
            }
            Some(Tok::Kw(Kw::Adv)) => unary!(Adv),
            Some(Tok::Kw(Kw::Box)) => unary!(Boxed),
            Some(Tok::Kw(Kw::Unbox)) => unary!(Unbox),
            Some(Tok::Kw(Kw::Into)) => unary!(Into),
            Some(Tok::Kw(Kw::Out)) => unary!(Out),
            Some(Tok::Kw(Kw::Suc)) => unary!(Suc),
            Some(Tok::Kw(Kw::Select)) => {
                self.bump();
                let a = self.expr_atom()?;
                let b = self.expr_atom()?;
                SExpr {
                    kind: SExprKind::Select(Box::new(a), Box::new(b)),
                    pos,
                }
            }
            Some(Tok::Kw(Kw::Await)) => {
                self.bump();
                let (n, _) = self.ident()?;
                SExpr {
                    kind: SExprKind::Await(n),
                    pos,
                }
            }
            Some(Tok::Kw(Kw::Read)) => {
                self.bump();
                let (n, _) = self.ident()?;
                SExpr {
                    kind: SExprKind::Read(n),
                    pos,
                }
            }
            Some(Tok::Kw(Kw::Fst)) => {
                self.bump();
                let a = self.expr_atom()?;
                SExpr {
                    kind: SExprKind::Proj(Ix::I1, Box::new(a)),
                    pos,
                }
            }
            Some(Tok::Kw(Kw::Snd)) => {
                self.bump();
                let a = self.expr_atom()?;
                SExpr {
                    kind: SExprKind::Proj(Ix::I2, Box::new(a)),
                    pos,
                }
            }
            Some(Tok::Kw(Kw::In1)) => {
                self.bump();
                let a = self.expr_atom()?;
                SExpr {
                    kind: SExprKind::Inj(Ix::I1, Box::new(a)),
                    pos,
                }
            }
            Some(Tok::Kw(Kw::In2)) => {
                self.bump();
                let a = self.expr_atom()?;
                SExpr {
                    kind: SExprKind::Inj(Ix::I2, Box::new(a)),
                    pos,
                }
            }
            Some(Tok::Kw(k @ (Kw::Left | Kw::Right | Kw::Both))) => {
                let k = *k;
                self.bump();
                let a = self.expr_atom()?;
                let b = self.expr_atom()?;
                let pair = SExpr {
                    kind: SExprKind::Pair(Box::new(a), Box::new(b)),
                    pos,
                };
                lrb_expr(k, pair, pos)
            }
            Some(Tok::Kw(Kw::Natrec)) => {
                self.bump();
                let zero_case = self.expr_atom()?;
                self.expect(Tok::LBrace)?;
                self.depth += 1;
                let (x, _) = self.ident()?;
                let (y, _) = self.ident()?;
                self.expect(Tok::Dot)?;
                let step = self.expr()?;
                self.depth -= 1;
                self.expect(Tok::RBrace)?;
                let scrut = self.expr_atom()?;
                SExpr {
                    kind: SExprKind::NatRec(
                        Box::new(zero_case),
                        x,
                        y,
                        Box::new(step),
                        Box::new(scrut),
                    ),
                    pos,
                }
            }
            Some(Tok::Kw(Kw::Case)) => {
                self.bump();
                let scrut = self.expr_seq()?;
                self.expect_kw(Kw::Of)?;
                self.expect(Tok::LBrace)?;
                self.depth += 1;
                let mut alts = Vec::new();
                loop {
                    let pat = self.pattern()?;
                    self.expect(Tok::FatArrow)?;
                    let rhs = self.expr()?;
                    alts.push((pat, rhs));
                    if self.peek_is(&Tok::Pipe) {
                        self.bump();
                    } else {
                        break;
                    }
                }
                self.depth -= 1;
                self.expect(Tok::RBrace)?;
                SExpr {
                    kind: SExprKind::Case(Box::new(scrut), alts),
                    pos,
                }
            }
            _ => return self.err("an expression"),
        };
        Ok(e)
    }

    fn clock(&mut self) -> Result<SClock, ParseError> {
        self.expect_kw(Kw::Cl)?;
        let v = self.expr_atom()?;
        let mut c = SClock::Of(Box::new(v));
        while self.peek_is(&Tok::ClockJoin) {
            self.bump();
            self.expect_kw(Kw::Cl)?;
            let v = self.expr_atom()?;
            c = SClock::Join(Box::new(c), Box::new(SClock::Of(Box::new(v))));
        }
        Ok(c)
    }
}

/// `Left s t = in1 (in1 (s, t))`, `Right s t = in1 (in2 (s, t))`,
/// `Both s t = in2 (s, t)` — the select-result shorthands.
fn lrb_expr(k: Kw, pair: SExpr, pos: Pos) -> SExpr {
    let inj = |ix, e: SExpr| SExpr {
        kind: SExprKind::Inj(ix, Box::new(e)),
        pos,
    };
    match k {
        Kw::Left => inj(Ix::I1, inj(Ix::I1, pair)),
        Kw::Right => inj(Ix::I1, inj(Ix::I2, pair)),
        Kw::Both => inj(Ix::I2, pair),
        _ => unreachable!(),
    }
}

fn lrb_pattern(k: Kw, pair: Pat, pos: Pos) -> Pat {
    let inj = |ix, p: Pat| Pat {
        kind: PatKind::Inj(ix, Box::new(p)),
        pos,
    };
    match k {
        Kw::Left => inj(Ix::I1, inj(Ix::I1, pair)),
        Kw::Right => inj(Ix::I1, inj(Ix::I2, pair)),
        Kw::Both => inj(Ix::I2, pair),
        _ => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input_is_the_empty_program() {
        let p = parse_program("").unwrap();
        assert_eq!(p, SurfaceProgram::empty());
    }

    #[test]
    fn malformed_let_reports_position() {
        let err = parse_expr_fragment("let x = in").unwrap_err();
        assert_eq!(err.pos.line, 1);
        assert!(err.expected.contains("expression"));
    }

    #[test]
    fn parses_map_definition() {
        let src = "def map : Box (A -> B) -> Sig A -> Sig B\nmap f (x :: xs) = unbox f x :: delay (map f (adv xs))\n";
        let defs = parse_defs_fragment(src).unwrap();
        assert_eq!(defs.len(), 1);
        assert_eq!(defs[0].name, Name::new("map"));
        assert_eq!(defs[0].equations.len(), 1);
        assert_eq!(defs[0].equations[0].patterns.len(), 2);
    }

    #[test]
    fn parses_program_sections() {
        let src = "inputs\n  up : p Unit\n  toggle : p Unit\noutputs\n  x : Nat = const 0\n";
        let p = parse_program(src).unwrap();
        assert_eq!(p.inputs.len(), 2);
        assert_eq!(p.outputs.len(), 1);
        assert_eq!(p.inputs[0].class, ChannelClass::PushOnly);
    }

    #[test]
    fn offside_rule_separates_equations() {
        let src = "def f : Nat -> Nat\nf x = suc\n  x\n| f x = x\n";
        let defs = parse_defs_fragment(src).unwrap();
        assert_eq!(defs[0].equations.len(), 2);
        // continuation line was absorbed into the first equation
        assert!(matches!(
            defs[0].equations[0].rhs.kind,
            SExprKind::Suc(_)
        ));
    }

    #[test]
    fn multi_def_boundaries() {
        let src =
            "def one : Nat\none = 1\ndef two : Nat\ntwo = suc one\n";
        let defs = parse_defs_fragment(src).unwrap();
        assert_eq!(defs.len(), 2);
    }

    #[test]
    fn case_with_alternatives_and_seq() {
        let src = "case select a b of { Left s d => s | Right d s => s | Both s t => adv u; t }";
        let e = parse_expr_fragment(src).unwrap();
        match e.kind {
            SExprKind::Case(_, alts) => assert_eq!(alts.len(), 3),
            other => panic!("expected case, got {other:?}"),
        }
    }

    #[test]
    fn keyword_heads_bind_one_atom() {
        // `adv r f (adv xs)` is `((adv r) f) ((adv xs))`
        let e = parse_expr_fragment("adv r f (adv xs)").unwrap();
        match e.kind {
            SExprKind::App(f, _arg) => match f.kind {
                SExprKind::App(h, _) => assert!(matches!(h.kind, SExprKind::Adv(_))),
                other => panic!("expected app, got {other:?}"),
            },
            other => panic!("expected app, got {other:?}"),
        }
    }

    #[test]
    fn explicit_delay_clock() {
        let e = parse_expr_fragment("delay{cl xs \\/ cl d} (adv xs)").unwrap();
        match e.kind {
            SExprKind::Delay(Some(SClock::Join(_, _)), _) => {}
            other => panic!("expected delay with join clock, got {other:?}"),
        }
    }
}
