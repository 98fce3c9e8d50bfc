//! The signal-combinator prelude, shipped as surface sources and compiled
//! with every program unless `--no-prelude` is given.
//!
//! `sigAwait_κ` and `sig_κ` are channel-indexed templates instantiated for
//! the program's input context: `sigAwait_κ` for every push channel,
//! `sig_κ` for every buffered-push channel. `integral`, `der` and
//! `derivative` sample on a buffered-push channel `sample : bp Float` and
//! are only instantiated when the input context declares it.

use std::fmt::Write;

use crate::input::{ChannelClass, InputContext};
use crate::surface::{parse_defs_fragment, ParseError, TopDef};
use crate::syntax::{Name, TypeExpr};

/// Combinators that are independent of the input context.
pub const PRELUDE_BASE: &str = r#"
def map : Box (A -> B) -> Sig A -> Sig B
map f (x :: xs) = unbox f x :: delay (map f (adv xs))

def scan : Stable B => Box (A -> B -> B) -> B -> Sig A -> Sig B
scan f acc (x :: xs) =
  let b = unbox f x acc in
  b :: delay (scan f b (adv xs))

def sum : Sig Nat -> Sig Nat
sum ns = scan (box (\x. \a. x + a)) 0 ns

def scanAwait : Stable B => Box (A -> B -> B) -> B -> O (Sig A) -> Sig B
scanAwait f acc d = acc :: delay (scan f acc (adv d))

def count : O (Sig A) -> Nat -> Sig Nat
count d n = scanAwait (box (\x. \m. suc m)) n d

def const : Stable A => A -> Sig A
const x = x :: never

def interleave : Box (A -> A -> A) -> O (Sig A) -> O (Sig A) -> O (Sig A)
interleave f d1 d2 =
  delay (case select d1 d2 of {
    Left s d2' => (case out s of { (x, xs) => x :: interleave f xs d2' })
  | Right d1' s => (case out s of { (y, ys) => y :: interleave f d1' ys })
  | Both s t =>
      (case out s of { (x, xs) =>
        case out t of { (y, ys) => unbox f x y :: interleave f xs ys } })
  })

def zip : Stable A, Stable B => Sig A -> Sig B -> Sig (A * B)
zip (x :: xs) (y :: ys) =
  (x, y) :: delay (case select xs ys of {
    Left s ys' => zip s (y :: ys')
  | Right xs' t => zip (x :: xs') t
  | Both s t => zip s t
  })

def switch : Sig A -> O (Sig A) -> Sig A
switch (x :: xs) d =
  x :: delay (case select xs d of {
    Left s d' => switch s d'
  | Right xs' t => t
  | Both s t => t
  })

def switchf : Stable A => Sig A -> O (A -> Sig A) -> Sig A
switchf (x :: xs) d =
  x :: delay (case select xs d of {
    Left s d' => switchf s d'
  | Right xs' f => f x
  | Both s f => (case out s of { (x', xs') => f x' })
  })

def toggleSig : Stable A => Box (O Unit) -> Box (A -> Sig A) -> Box (A -> Sig A) -> A -> Sig A
toggleSig tog f g x =
  let tick = unbox tog in
  switchf (unbox f x) (delay (adv tick; toggleSig tog g f))
"#;

/// The calculus combinators, instantiated when `sample : bp Float` is
/// declared.
pub const PRELUDE_CALCULUS: &str = r#"
def integral : Float -> Sig Float -> Sig Float
integral c (x :: xs) =
  case x ==. 0.0 of {
    in1 u => c :: delay (integral c (adv xs))
  | in2 u => c :: delay (case select xs (await sample) of {
      Left s rest => integral c s
    | Right xs' dt => integral (c +. (x *. dt)) (x :: xs')
    | Both s dt => integral (c +. (x *. dt)) s
    })
  }

def der : Float -> Float -> Sig Float -> Sig Float
der d last (x :: xs) =
  case d ==. 0.0 of {
    in1 u => d :: delay (
      let s2 = adv xs in
      case out s2 of { (x2, xs2) => der ((x2 -. last) /. read sample) x2 s2 })
  | in2 u => d :: delay (case select xs (await sample) of {
      Left s2 rest => der d last s2
    | Right xs2 dt => der ((x -. last) /. dt) x (x :: xs2)
    | Both s2 dt => (case out s2 of { (x2, xs2) => der ((x2 -. last) /. dt) x2 s2 })
    })
  }

def derivative : Sig Float -> Sig Float
derivative (x :: xs) =
  0.0 :: delay (case select xs (await sample) of {
    Left s2 rest => der 0.0 x s2
  | Right xs2 dt => der 0.0 x (x :: xs2)
  | Both s2 dt => (case out s2 of { (x2, xs2) => der ((x2 -. x) /. dt) x2 s2 })
  })
"#;

/// One prelude entry, for reporting and tests.
#[derive(Clone, Debug)]
pub struct PreludeEntry {
    pub name: Name,
    /// Input channels this entry mentions.
    pub requires: Vec<Name>,
}

#[derive(Clone, Debug, Default)]
pub struct PreludeManifest {
    pub entries: Vec<PreludeEntry>,
}

/// Render a (value) type in surface syntax for template instantiation.
fn surface_type_text(ty: &TypeExpr) -> String {
    crate::pretty::type_to_string(ty)
}

/// The prelude source for a given input context.
pub fn prelude_source(delta: &InputContext) -> String {
    let mut src = String::new();
    src.push_str(PRELUDE_BASE);
    for (name, class, ty) in delta.iter() {
        if class.is_push() {
            let t = surface_type_text(ty);
            let _ = write!(
                src,
                "\ndef sigAwait_{name} : O (Sig ({t}))\nsigAwait_{name} = fix s. delay (adv (await {name}) :: adv s)\n"
            );
        }
    }
    for (name, class, ty) in delta.iter() {
        if class == ChannelClass::BufferedPush {
            let t = surface_type_text(ty);
            let _ = write!(
                src,
                "\ndef sig_{name} : Sig ({t})\nsig_{name} = read {name} :: sigAwait_{name}\n"
            );
        }
    }
    if matches!(
        delta.lookup(&Name::new("sample")),
        Some((ChannelClass::BufferedPush, TypeExpr::Float))
    ) {
        src.push_str(PRELUDE_CALCULUS);
    }
    src
}

/// Parse the prelude for an input context.
pub fn prelude_defs(delta: &InputContext) -> Result<(Vec<TopDef>, PreludeManifest), ParseError> {
    let src = prelude_source(delta);
    let defs = parse_defs_fragment(&src)?;
    let entries = defs
        .iter()
        .map(|d| {
            let mut requires = Vec::new();
            let name = d.name.as_str();
            if let Some(kappa) = name.strip_prefix("sigAwait_") {
                requires.push(Name::new(kappa));
            } else if let Some(kappa) = name.strip_prefix("sig_") {
                requires.push(Name::new(kappa));
            } else if matches!(name, "integral" | "der" | "derivative") {
                requires.push(Name::new("sample"));
            }
            PreludeEntry {
                name: d.name.clone(),
                requires,
            }
        })
        .collect();
    Ok((defs, PreludeManifest { entries }))
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::elaborate::elaborate;
    use crate::surface::ast::SurfaceProgram;
    use crate::surface::parse_defs_fragment;
    use crate::typecheck::check_program;

    fn delta_std() -> InputContext {
        [
            (Name::new("up"), ChannelClass::PushOnly, TypeExpr::Unit),
            (Name::new("toggle"), ChannelClass::PushOnly, TypeExpr::Unit),
            (
                Name::new("sample"),
                ChannelClass::BufferedPush,
                TypeExpr::Float,
            ),
        ]
        .into_iter()
        .collect()
    }

    fn check_prelude(delta: &InputContext) -> crate::elaborate::ElabProgram {
        let (defs, _) = prelude_defs(delta).expect("prelude parses");
        let mut program = SurfaceProgram::empty();
        for (name, class, ty) in delta.iter() {
            program.inputs.push(crate::surface::ast::InputDecl {
                name: name.clone(),
                class,
                ty: type_to_surface(ty),
                pos: Default::default(),
            });
        }
        program.defs = defs;
        let elab = elaborate(&program).expect("prelude elaborates");
        check_program(&elab).expect("prelude typechecks");
        elab
    }

    // surface type ASTs for input decls in hand-built programs
    fn type_to_surface(ty: &TypeExpr) -> crate::surface::ast::SType {
        use crate::surface::ast::{SType, STypeKind};
        let kind = match ty {
            TypeExpr::Unit => STypeKind::Unit,
            TypeExpr::Nat => STypeKind::Nat,
            TypeExpr::Float => STypeKind::Float,
            TypeExpr::Prod(a, b) => STypeKind::Prod(
                Box::new(type_to_surface(a)),
                Box::new(type_to_surface(b)),
            ),
            TypeExpr::Sum(a, b) => STypeKind::Sum(
                Box::new(type_to_surface(a)),
                Box::new(type_to_surface(b)),
            ),
            _ => unreachable!("input channels carry value types"),
        };
        SType {
            kind,
            pos: Default::default(),
        }
    }

    fn tv(n: &str) -> TypeExpr {
        TypeExpr::TypeVar(Name::new(n))
    }

    #[test]
    fn whole_prelude_typechecks_under_the_standard_context() {
        let elab = check_prelude(&delta_std());
        let names: Vec<&str> = elab.defs.iter().map(|d| d.name.as_str()).collect();
        for expected in [
            "map",
            "scan",
            "sum",
            "sigAwait_up",
            "scanAwait",
            "count",
            "const",
            "interleave",
            "zip",
            "switch",
            "switchf",
            "toggleSig",
            "sig_sample",
            "integral",
            "derivative",
        ] {
            assert!(names.contains(&expected), "missing `{expected}`");
        }
    }

    #[test]
    fn declared_schemes_match_the_library_signatures() {
        let elab = check_prelude(&delta_std());
        let scheme = |n: &str| {
            elab.defs
                .iter()
                .find(|d| d.name.as_str() == n)
                .unwrap_or_else(|| panic!("missing {n}"))
                .scheme
                .clone()
        };

        let map = scheme("map");
        assert_eq!(
            map.ty,
            TypeExpr::fun(
                TypeExpr::boxed(TypeExpr::fun(tv("A"), tv("B"))),
                TypeExpr::fun(TypeExpr::sig(tv("A")), TypeExpr::sig(tv("B")))
            )
        );
        assert!(map.stable.is_empty());

        let scan = scheme("scan");
        assert_eq!(scan.stable, vec![Name::new("B")]);
        assert_eq!(
            scan.ty,
            TypeExpr::fun(
                TypeExpr::boxed(TypeExpr::fun(tv("A"), TypeExpr::fun(tv("B"), tv("B")))),
                TypeExpr::fun(
                    tv("B"),
                    TypeExpr::fun(TypeExpr::sig(tv("A")), TypeExpr::sig(tv("B")))
                )
            )
        );

        let zip = scheme("zip");
        assert_eq!(zip.stable, vec![Name::new("A"), Name::new("B")]);

        let interleave = scheme("interleave");
        assert_eq!(
            interleave.ty,
            TypeExpr::fun(
                TypeExpr::boxed(TypeExpr::fun(tv("A"), TypeExpr::fun(tv("A"), tv("A")))),
                TypeExpr::fun(
                    TypeExpr::delay_exist(TypeExpr::sig(tv("A"))),
                    TypeExpr::fun(
                        TypeExpr::delay_exist(TypeExpr::sig(tv("A"))),
                        TypeExpr::delay_exist(TypeExpr::sig(tv("A")))
                    )
                )
            )
        );
        assert!(interleave.stable.is_empty());

        let toggle = scheme("toggleSig");
        assert_eq!(toggle.stable, vec![Name::new("A")]);

        let const_ = scheme("const");
        assert_eq!(const_.ty, TypeExpr::fun(tv("A"), TypeExpr::sig(tv("A"))));
        assert_eq!(const_.stable, vec![Name::new("A")]);

        let sig_await = scheme("sigAwait_up");
        assert_eq!(
            sig_await.ty,
            TypeExpr::delay_exist(TypeExpr::sig(TypeExpr::Unit))
        );

        let integral = scheme("integral");
        assert_eq!(
            integral.ty,
            TypeExpr::fun(
                TypeExpr::Float,
                TypeExpr::fun(
                    TypeExpr::sig(TypeExpr::Float),
                    TypeExpr::sig(TypeExpr::Float)
                )
            )
        );
    }

    #[test]
    fn calculus_combinators_need_the_sample_channel() {
        let delta: InputContext = [(Name::new("up"), ChannelClass::PushOnly, TypeExpr::Unit)]
            .into_iter()
            .collect();
        let src = prelude_source(&delta);
        assert!(!src.contains("def integral"));
        assert!(src.contains("def sigAwait_up"));
        assert!(!src.contains("def sig_up"));
        check_prelude(&delta);
    }

    #[test]
    fn scan_without_its_stability_constraint_is_rejected() {
        // same body as scan but the `Stable B` constraint is dropped: the
        // accumulator then crosses the tick illegally
        let src = "def scanBad : Box (A -> B -> B) -> B -> Sig A -> Sig B\nscanBad f acc (x :: xs) =\n  let b = unbox f x acc in\n  b :: delay (scanBad f b (adv xs))\n";
        let defs = parse_defs_fragment(src).unwrap();
        let mut program = SurfaceProgram::empty();
        program.defs = defs;
        let elab = elaborate(&program).unwrap();
        let err = check_program(&elab).unwrap_err();
        assert_eq!(
            err.kind,
            crate::typecheck::TypeErrorKind::VariableCrossesTick
        );
    }

    #[test]
    fn zip_without_stability_is_rejected() {
        let src = "def zipBad : Sig A -> Sig B -> Sig (A * B)\nzipBad (x :: xs) (y :: ys) =\n  (x, y) :: delay (case select xs ys of {\n    Left s ys' => zipBad s (y :: ys')\n  | Right xs' t => zipBad (x :: xs') t\n  | Both s t => zipBad s t\n  })\n";
        let defs = parse_defs_fragment(src).unwrap();
        let mut program = SurfaceProgram::empty();
        program.defs = defs;
        let elab = elaborate(&program).unwrap();
        assert!(check_program(&elab).is_err());
    }

    #[test]
    fn manifest_records_channel_requirements() {
        let (_, manifest) = prelude_defs(&delta_std()).unwrap();
        let entry = manifest
            .entries
            .iter()
            .find(|e| e.name.as_str() == "sigAwait_up")
            .unwrap();
        assert_eq!(entry.requires, vec![Name::new("up")]);
        let integral = manifest
            .entries
            .iter()
            .find(|e| e.name.as_str() == "integral")
            .unwrap();
        assert_eq!(integral.requires, vec![Name::new("sample")]);
    }
}
