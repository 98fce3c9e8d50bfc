//! Input-channel contexts and input buffers.

use std::fmt;

use crate::syntax::{is_value_type, Name, Term, TypeExpr};

/// The three classes of input channels: push-only, buffered-only, and
/// buffered-push.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ChannelClass {
    PushOnly,
    BufferedOnly,
    BufferedPush,
}

impl ChannelClass {
    pub fn is_push(self) -> bool {
        matches!(self, ChannelClass::PushOnly | ChannelClass::BufferedPush)
    }

    pub fn is_buffered(self) -> bool {
        matches!(self, ChannelClass::BufferedOnly | ChannelClass::BufferedPush)
    }

    pub fn keyword(self) -> &'static str {
        match self {
            ChannelClass::PushOnly => "p",
            ChannelClass::BufferedOnly => "b",
            ChannelClass::BufferedPush => "bp",
        }
    }
}

impl fmt::Display for ChannelClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// The input context Δ: an ordered map from channel names to their class and
/// (value) type.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InputContext {
    entries: Vec<(Name, ChannelClass, TypeExpr)>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum InputContextError {
    #[error("duplicate input channel `{0}`")]
    Duplicate(Name),
    #[error("input channel `{0}` must have a value type")]
    NotValueType(Name),
}

impl InputContext {
    pub fn new() -> Self {
        InputContext::default()
    }

    pub fn declare(
        &mut self,
        name: Name,
        class: ChannelClass,
        ty: TypeExpr,
    ) -> Result<(), InputContextError> {
        if self.lookup(&name).is_some() {
            return Err(InputContextError::Duplicate(name));
        }
        if !is_value_type(&ty) {
            return Err(InputContextError::NotValueType(name));
        }
        self.entries.push((name, class, ty));
        Ok(())
    }

    pub fn lookup(&self, name: &Name) -> Option<(ChannelClass, &TypeExpr)> {
        self.entries
            .iter()
            .find(|(n, _, _)| n == name)
            .map(|(_, c, t)| (*c, t))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, ChannelClass, &TypeExpr)> {
        self.entries.iter().map(|(n, c, t)| (n, *c, t))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The push channels `dom_p(Δ)`.
    pub fn push_channels(&self) -> Vec<Name> {
        self.entries
            .iter()
            .filter(|(_, c, _)| c.is_push())
            .map(|(n, _, _)| n.clone())
            .collect()
    }

    /// The buffered channels of Δ.
    pub fn buffered_channels(&self) -> Vec<Name> {
        self.entries
            .iter()
            .filter(|(_, c, _)| c.is_buffered())
            .map(|(n, _, _)| n.clone())
            .collect()
    }
}

impl FromIterator<(Name, ChannelClass, TypeExpr)> for InputContext {
    fn from_iter<I: IntoIterator<Item = (Name, ChannelClass, TypeExpr)>>(iter: I) -> Self {
        let mut ctx = InputContext::new();
        for (n, c, t) in iter {
            ctx.declare(n, c, t).expect("invalid input context literal");
        }
        ctx
    }
}

/// The input buffer ι: the current value of every buffered channel.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InputBuffer {
    entries: Vec<(Name, Term)>,
}

impl InputBuffer {
    pub fn new() -> Self {
        InputBuffer::default()
    }

    pub fn get(&self, name: &Name) -> Option<&Term> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn set(&mut self, name: Name, value: Term) {
        match self.entries.iter_mut().find(|(n, _)| *n == name) {
            Some((_, v)) => *v = value,
            None => self.entries.push((name, value)),
        }
    }

    pub fn contains(&self, name: &Name) -> bool {
        self.get(name).is_some()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, &Term)> {
        self.entries.iter().map(|(n, v)| (n, v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl FromIterator<(Name, Term)> for InputBuffer {
    fn from_iter<I: IntoIterator<Item = (Name, Term)>>(iter: I) -> Self {
        let mut buf = InputBuffer::new();
        for (n, v) in iter {
            buf.set(n, v);
        }
        buf
    }
}

/// Structural check that a closed value inhabits a (value) type. Used to
/// validate input events and buffer entries.
pub fn value_has_type(v: &Term, ty: &TypeExpr) -> bool {
    match (v, ty) {
        (Term::Unit, TypeExpr::Unit) => true,
        (Term::Zero, TypeExpr::Nat) => true,
        (Term::Suc(inner), TypeExpr::Nat) => value_has_type(inner, &TypeExpr::Nat),
        (Term::FloatLit(_), TypeExpr::Float) => true,
        (Term::Pair(a, b), TypeExpr::Prod(ta, tb)) => {
            value_has_type(a, ta) && value_has_type(b, tb)
        }
        (Term::Inj(ix, inner), TypeExpr::Sum(ta, tb)) => match ix {
            crate::syntax::Ix::I1 => value_has_type(inner, ta),
            crate::syntax::Ix::I2 => value_has_type(inner, tb),
        },
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_channels_rejected() {
        let mut d = InputContext::new();
        d.declare(Name::new("up"), ChannelClass::PushOnly, TypeExpr::Unit)
            .unwrap();
        assert_eq!(
            d.declare(Name::new("up"), ChannelClass::PushOnly, TypeExpr::Unit),
            Err(InputContextError::Duplicate(Name::new("up")))
        );
    }

    #[test]
    fn non_value_types_rejected() {
        let mut d = InputContext::new();
        assert_eq!(
            d.declare(
                Name::new("f"),
                ChannelClass::PushOnly,
                TypeExpr::fun(TypeExpr::Nat, TypeExpr::Nat)
            ),
            Err(InputContextError::NotValueType(Name::new("f")))
        );
    }

    #[test]
    fn value_typing_is_structural() {
        assert!(value_has_type(&Term::nat(3), &TypeExpr::Nat));
        assert!(value_has_type(
            &Term::pair(Term::Unit, Term::FloatLit(1.5)),
            &TypeExpr::prod(TypeExpr::Unit, TypeExpr::Float)
        ));
        assert!(!value_has_type(&Term::Unit, &TypeExpr::Nat));
    }
}
