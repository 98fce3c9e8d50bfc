//! End-to-end pipeline: parse → inject prelude → elaborate → typecheck,
//! plus helpers to build and drive a machine. Shared by the CLI, the
//! Python bindings, the verification harnesses and the tests.

use crate::elaborate::{elaborate, ElabProgram};
use crate::eval::DEFAULT_FUEL;
use crate::input::InputBuffer;
use crate::literal::LiteralError;
use crate::reactive::{InputEvent, Machine, MachineCfg, OutputBatch, ReactiveError};
use crate::stdlib::{prelude_defs, PreludeManifest};
use crate::surface::{parse_program, ParseError};
use crate::syntax::{Name, TypeExpr};
use crate::typecheck::{check_program, TopEnv, TypeError};

#[derive(Debug, thiserror::Error)]
pub enum DriverError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Elab(#[from] crate::elaborate::ElabError),
    #[error("{0}")]
    Type(#[from] TypeError),
    #[error("{0}")]
    Literal(#[from] LiteralError),
    #[error("{0}")]
    Reactive(#[from] ReactiveError),
}

#[derive(Clone, Debug)]
pub struct CompileOptions {
    pub use_prelude: bool,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions { use_prelude: true }
    }
}

/// A compiled program: elaborated, typechecked, ready to run.
#[derive(Clone, Debug)]
pub struct Compiled {
    pub elab: ElabProgram,
    pub top: TopEnv,
    pub prelude: PreludeManifest,
}

impl Compiled {
    pub fn lookup_channel_type(&self, name: &Name) -> Option<TypeExpr> {
        self.elab.delta.lookup(name).map(|(_, ty)| ty.clone())
    }

    pub fn machine(
        &self,
        buffer: InputBuffer,
        cfg: MachineCfg,
    ) -> Result<Machine, ReactiveError> {
        Machine::new(
            self.elab.machine_term(),
            self.elab.delta.clone(),
            self.elab.gamma_out(),
            buffer,
            cfg,
        )
    }

    /// Run on a finite event script with default settings; returns the
    /// batches including the init batch at index 0.
    pub fn run(
        &self,
        buffer: InputBuffer,
        events: &[InputEvent],
    ) -> Result<Vec<OutputBatch>, ReactiveError> {
        self.run_with(buffer, events, MachineCfg::default())
    }

    pub fn run_with(
        &self,
        buffer: InputBuffer,
        events: &[InputEvent],
        cfg: MachineCfg,
    ) -> Result<Vec<OutputBatch>, ReactiveError> {
        crate::reactive::run(
            self.elab.machine_term(),
            self.elab.delta.clone(),
            self.elab.gamma_out(),
            buffer,
            events,
            cfg,
        )
    }
}

/// Parse, elaborate and typecheck a source program.
pub fn compile(src: &str, opts: &CompileOptions) -> Result<Compiled, DriverError> {
    let mut program = parse_program(src)?;

    // the prelude needs the declared input channels for its templates
    let mut delta_probe = crate::input::InputContext::new();
    for d in &program.inputs {
        let ty = crate::elaborate::surface_type_to_core(&d.ty);
        delta_probe
            .declare(d.name.clone(), d.class, ty)
            .map_err(|e| {
                DriverError::Elab(crate::elaborate::ElabError {
                    pos: d.pos,
                    message: e.to_string(),
                })
            })?;
    }

    let prelude = if opts.use_prelude {
        let (defs, manifest) = prelude_defs(&delta_probe)?;
        let mut all = defs;
        all.append(&mut program.defs);
        program.defs = all;
        manifest
    } else {
        PreludeManifest::default()
    };

    let elab = elaborate(&program)?;
    let top = check_program(&elab)?;
    Ok(Compiled { elab, top, prelude })
}

pub fn compile_default(src: &str) -> Result<Compiled, DriverError> {
    compile(src, &CompileOptions::default())
}

/// Initial buffer covering the buffered channels with type-appropriate
/// defaults (`()`, `0`, `0.0`, left-biased injections). Handy for tests and
/// harnesses; real runs normally load a buffer file.
pub fn default_buffer(compiled: &Compiled) -> InputBuffer {
    fn default_value(ty: &TypeExpr) -> crate::syntax::Term {
        use crate::syntax::{Ix, Term};
        match ty {
            TypeExpr::Unit => Term::Unit,
            TypeExpr::Nat => Term::Zero,
            TypeExpr::Float => Term::FloatLit(0.0),
            TypeExpr::Prod(a, b) => Term::pair(default_value(a), default_value(b)),
            TypeExpr::Sum(a, _) => Term::inj(Ix::I1, default_value(a)),
            _ => Term::Unit,
        }
    }
    compiled
        .elab
        .delta
        .iter()
        .filter(|(_, class, _)| class.is_buffered())
        .map(|(name, _, ty)| (name.clone(), default_value(ty)))
        .collect()
}

pub fn default_cfg() -> MachineCfg {
    MachineCfg {
        fuel_per_step: DEFAULT_FUEL,
        seed: 0,
        skip_gc: false,
    }
}
