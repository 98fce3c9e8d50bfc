//! Async RaTT: an asynchronous modal FRP language.
//!
//! The crate is organised as a conventional little-language toolchain:
//!
//! * [`syntax`] — core calculus: types, terms, clock expressions.
//! * [`input`] — input-channel contexts and buffers.
//! * [`store`] — heaps, two-heap stores and location allocation.
//! * [`surface`] — lexer and parser for the surface language.
//! * [`elaborate`] — surface-to-core elaboration (patterns, recursion,
//!   implicit boxing, clock inference).
//! * [`typecheck`] — the modal type system.
//! * [`eval`] — big-step evaluation with store threading.
//! * [`reactive`] — the reactive machine: init/input/output transitions,
//!   heap splitting and per-step garbage collection.
//! * [`stdlib`] — the signal-combinator prelude.
//! * [`verify`] — executable metatheory: determinism, GC safety,
//!   signal independence, productivity fuzzing.

pub mod elaborate;
pub mod eval;
pub mod input;
pub mod literal;
pub mod pretty;
pub mod reactive;
pub mod stdlib;
pub mod store;
pub mod surface;
pub mod syntax;
pub mod typecheck;
pub mod verify;

pub mod driver;
