//! Plain-text rendering of types, clocks and terms for diagnostics and
//! trace output. Output parses back through the surface grammar except for
//! the machine-only forms (locations, dfix), which render as `l17` and
//! `dfix x. t`.

use std::fmt::Write;

use crate::syntax::{ClockExpr, Ix, Name, Term, TypeExpr};

pub fn type_to_string(ty: &TypeExpr) -> String {
    let mut s = String::new();
    fmt_type(&mut s, ty, 0);
    s
}

// precedence levels: 0 = arrow, 1 = sum, 2 = product, 3 = atom
fn fmt_type(out: &mut String, ty: &TypeExpr, prec: u8) {
    match ty {
        TypeExpr::Unit => out.push_str("Unit"),
        TypeExpr::Nat => out.push_str("Nat"),
        TypeExpr::Float => out.push_str("Float"),
        TypeExpr::TypeVar(n) => {
            let _ = write!(out, "{n}");
        }
        TypeExpr::Meta(id) => {
            let _ = write!(out, "?{id}");
        }
        TypeExpr::Fun(a, b) => {
            paren(out, prec > 0, |out| {
                fmt_type(out, a, 1);
                out.push_str(" -> ");
                fmt_type(out, b, 0);
            });
        }
        TypeExpr::Sum(a, b) => {
            paren(out, prec > 1, |out| {
                fmt_type(out, a, 2);
                out.push_str(" + ");
                fmt_type(out, b, 1);
            });
        }
        TypeExpr::Prod(a, b) => {
            paren(out, prec > 2, |out| {
                fmt_type(out, a, 3);
                out.push_str(" * ");
                fmt_type(out, b, 2);
            });
        }
        TypeExpr::DelayExist(a) => {
            paren(out, prec > 3, |out| {
                out.push_str("O ");
                fmt_type(out, a, 4);
            });
        }
        TypeExpr::DelayAny(a) => {
            paren(out, prec > 3, |out| {
                out.push_str("Any ");
                fmt_type(out, a, 4);
            });
        }
        TypeExpr::Boxed(a) => {
            paren(out, prec > 3, |out| {
                out.push_str("Box ");
                fmt_type(out, a, 4);
            });
        }
        TypeExpr::FixRec(alpha, body) => {
            // recognise the Sig encoding for readability
            if let TypeExpr::Prod(head, tail) = body.as_ref() {
                if **tail == TypeExpr::TypeVar(alpha.clone()) && !occurs(head, alpha) {
                    paren(out, prec > 3, |out| {
                        out.push_str("Sig ");
                        fmt_type(out, head, 4);
                    });
                    return;
                }
            }
            paren(out, prec > 0, |out| {
                let _ = write!(out, "Fix {alpha}. ");
                fmt_type(out, body, 0);
            });
        }
    }
}

fn occurs(ty: &TypeExpr, var: &Name) -> bool {
    ty.free_type_vars().contains(var)
}

fn paren(out: &mut String, needed: bool, f: impl FnOnce(&mut String)) {
    if needed {
        out.push('(');
        f(out);
        out.push(')');
    } else {
        f(out);
    }
}

pub fn clock_to_string(c: &ClockExpr) -> String {
    let mut s = String::new();
    let atoms = c.atoms();
    for (i, v) in atoms.iter().enumerate() {
        if i > 0 {
            s.push_str(" \\/ ");
        }
        s.push_str("cl ");
        fmt_term(&mut s, v, 3);
    }
    s
}

pub fn term_to_string(t: &Term) -> String {
    let mut s = String::new();
    fmt_term(&mut s, t, 0);
    s
}

// precedence: 0 = open (let/lam/seq), 1 = cons, 2 = operators, 3 = application, 4 = atom
fn fmt_term(out: &mut String, t: &Term, prec: u8) {
    match t {
        Term::Var(n) => {
            let _ = write!(out, "{n}");
        }
        Term::Unit => out.push_str("()"),
        Term::Zero => out.push('0'),
        Term::Suc(_) => match t.as_nat() {
            Some(n) => {
                let _ = write!(out, "{n}");
            }
            None => {
                paren(out, prec > 3, |out| {
                    out.push_str("suc ");
                    fmt_term(out, unwrap_suc(t), 4);
                });
            }
        },
        Term::FloatLit(x) => {
            if x.fract() == 0.0 && x.is_finite() {
                let _ = write!(out, "{x:.1}");
            } else {
                let _ = write!(out, "{x}");
            }
        }
        Term::FloatOp(op, a, b) => {
            paren(out, prec > 2, |out| {
                fmt_term(out, a, 3);
                let _ = write!(out, " {} ", op.symbol());
                fmt_term(out, b, 3);
            });
        }
        Term::Lam(x, body) => {
            paren(out, prec > 0, |out| {
                let _ = write!(out, "\\{x}. ");
                fmt_term(out, body, 0);
            });
        }
        Term::Pair(a, b) => {
            out.push('(');
            fmt_term(out, a, 0);
            out.push_str(", ");
            fmt_term(out, b, 0);
            out.push(')');
        }
        Term::Inj(ix, a) => {
            paren(out, prec > 3, |out| {
                out.push_str(if *ix == Ix::I1 { "in1 " } else { "in2 " });
                fmt_term(out, a, 4);
            });
        }
        Term::Proj(ix, a) => {
            paren(out, prec > 3, |out| {
                out.push_str(if *ix == Ix::I1 { "fst " } else { "snd " });
                fmt_term(out, a, 4);
            });
        }
        Term::App(f, a) => {
            paren(out, prec > 3, |out| {
                fmt_term(out, f, 3);
                out.push(' ');
                fmt_term(out, a, 4);
            });
        }
        Term::Let(x, s, body) => {
            paren(out, prec > 0, |out| {
                let _ = write!(out, "let {x} = ");
                fmt_term(out, s, 1);
                out.push_str(" in ");
                fmt_term(out, body, 0);
            });
        }
        Term::Case(scrut, x1, t1, x2, t2) => {
            paren(out, prec > 0, |out| {
                out.push_str("case ");
                fmt_term(out, scrut, 1);
                let _ = write!(out, " of {{ in1 {x1} => ");
                fmt_term(out, t1, 0);
                let _ = write!(out, " | in2 {x2} => ");
                fmt_term(out, t2, 0);
                out.push_str(" }");
            });
        }
        Term::NatRec(s, x, y, step, n) => {
            paren(out, prec > 3, |out| {
                out.push_str("natrec ");
                fmt_term(out, s, 4);
                let _ = write!(out, " {{{x} {y}. ");
                fmt_term(out, step, 0);
                out.push_str("} ");
                fmt_term(out, n, 4);
            });
        }
        Term::Delay(theta, body) => {
            paren(out, prec > 3, |out| {
                let _ = write!(out, "delay{{{}}} ", clock_to_string(theta));
                fmt_term(out, body, 4);
            });
        }
        Term::Adv(a) => {
            paren(out, prec > 3, |out| {
                out.push_str("adv ");
                fmt_term(out, a, 4);
            });
        }
        Term::Select(a, b) => {
            paren(out, prec > 3, |out| {
                out.push_str("select ");
                fmt_term(out, a, 4);
                out.push(' ');
                fmt_term(out, b, 4);
            });
        }
        Term::Never => out.push_str("never"),
        Term::Await(k) => {
            paren(out, prec > 3, |out| {
                let _ = write!(out, "await {k}");
            });
        }
        Term::Read(k) => {
            paren(out, prec > 3, |out| {
                let _ = write!(out, "read {k}");
            });
        }
        Term::Boxed(a) => {
            paren(out, prec > 3, |out| {
                out.push_str("box ");
                fmt_term(out, a, 4);
            });
        }
        Term::Unbox(a) => {
            paren(out, prec > 3, |out| {
                out.push_str("unbox ");
                fmt_term(out, a, 4);
            });
        }
        Term::Fix(x, body) => {
            paren(out, prec > 0, |out| {
                let _ = write!(out, "fix {x}. ");
                fmt_term(out, body, 0);
            });
        }
        Term::Into(a) => {
            // render `into (s, t)` as `s :: t`
            if let Term::Pair(h, tl) = a.as_ref() {
                paren(out, prec > 1, |out| {
                    fmt_term(out, h, 2);
                    out.push_str(" :: ");
                    fmt_term(out, tl, 1);
                });
            } else {
                paren(out, prec > 3, |out| {
                    out.push_str("into ");
                    fmt_term(out, a, 4);
                });
            }
        }
        Term::Out(a) => {
            paren(out, prec > 3, |out| {
                out.push_str("out ");
                fmt_term(out, a, 4);
            });
        }
        Term::Loc(l) => {
            let _ = write!(out, "l{}", l.id);
        }
        Term::DFix(x, body) => {
            paren(out, prec > 0, |out| {
                let _ = write!(out, "dfix {x}. ");
                fmt_term(out, body, 0);
            });
        }
    }
}

fn unwrap_suc(t: &Term) -> &Term {
    match t {
        Term::Suc(inner) => inner,
        _ => t,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::Term as T;

    #[test]
    fn renders_numerals_and_cons() {
        assert_eq!(term_to_string(&T::nat(3)), "3");
        let sig = T::cons(T::Zero, T::Never);
        assert_eq!(term_to_string(&sig), "0 :: never");
    }

    #[test]
    fn renders_sig_type() {
        assert_eq!(type_to_string(&TypeExpr::sig(TypeExpr::Nat)), "Sig Nat");
        assert_eq!(
            type_to_string(&TypeExpr::fun(
                TypeExpr::boxed(TypeExpr::fun(TypeExpr::TypeVar(Name::new("A")), TypeExpr::TypeVar(Name::new("B")))),
                TypeExpr::fun(TypeExpr::sig(TypeExpr::TypeVar(Name::new("A"))), TypeExpr::sig(TypeExpr::TypeVar(Name::new("B"))))
            )),
            "Box (A -> B) -> Sig A -> Sig B"
        );
    }
}
