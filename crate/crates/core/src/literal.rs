//! JSON encodings of channel values, events, batches and machine-state
//! dumps.
//!
//! Value literals: unit is `null`, naturals are non-negative integers,
//! floats are JSON numbers, pairs are two-element arrays, injections are
//! `{"tag": 1|2, "val": …}`. Events are `{"ch": name, "val": literal}`;
//! trace lines are `{"step": n, "outputs": [[name, literal], …]}`.

use serde_json::{json, Value as Json};

use crate::input::InputBuffer;
use crate::reactive::{InputEvent, OutputBatch};
use crate::syntax::{Ix, Name, Term, TypeExpr};

#[derive(Debug, thiserror::Error)]
#[error("value literal error: {0}")]
pub struct LiteralError(pub String);

/// Encode a closed value of a value type.
pub fn encode_value(v: &Term) -> Result<Json, LiteralError> {
    match v {
        Term::Unit => Ok(Json::Null),
        Term::Zero | Term::Suc(_) => match v.as_nat() {
            Some(n) => Ok(json!(n)),
            None => Err(LiteralError("non-numeral successor tower".into())),
        },
        Term::FloatLit(x) => Ok(json!(x)),
        Term::Pair(a, b) => Ok(Json::Array(vec![encode_value(a)?, encode_value(b)?])),
        Term::Inj(ix, inner) => Ok(json!({
            "tag": ix.as_u8(),
            "val": encode_value(inner)?,
        })),
        other => Err(LiteralError(format!(
            "`{}` is not a value-type value",
            crate::pretty::term_to_string(other)
        ))),
    }
}

/// Decode a literal against its declared type (the type resolves the
/// Nat/Float reading of JSON numbers).
pub fn decode_value(j: &Json, ty: &TypeExpr) -> Result<Term, LiteralError> {
    match (j, ty) {
        (Json::Null, TypeExpr::Unit) => Ok(Term::Unit),
        (Json::Number(n), TypeExpr::Nat) => match n.as_u64() {
            Some(v) => Ok(Term::nat(v)),
            None => Err(LiteralError(format!("`{n}` is not a natural number"))),
        },
        (Json::Number(n), TypeExpr::Float) => match n.as_f64() {
            Some(v) => Ok(Term::FloatLit(v)),
            None => Err(LiteralError(format!("`{n}` is not a float"))),
        },
        (Json::Array(items), TypeExpr::Prod(a, b)) if items.len() == 2 => Ok(Term::pair(
            decode_value(&items[0], a)?,
            decode_value(&items[1], b)?,
        )),
        (Json::Object(obj), TypeExpr::Sum(a, b)) => {
            let tag = obj
                .get("tag")
                .and_then(Json::as_u64)
                .ok_or_else(|| LiteralError("injection needs a numeric `tag`".into()))?;
            let val = obj
                .get("val")
                .ok_or_else(|| LiteralError("injection needs a `val`".into()))?;
            match tag {
                1 => Ok(Term::inj(Ix::I1, decode_value(val, a)?)),
                2 => Ok(Term::inj(Ix::I2, decode_value(val, b)?)),
                other => Err(LiteralError(format!("injection tag must be 1 or 2, got {other}"))),
            }
        }
        _ => Err(LiteralError(format!(
            "literal `{j}` does not fit type `{}`",
            crate::pretty::type_to_string(ty)
        ))),
    }
}

/// Parse one `{"ch": …, "val": …}` event record. The channel's declared
/// type comes from the caller.
pub fn decode_event(
    line: &str,
    lookup: impl Fn(&Name) -> Option<TypeExpr>,
) -> Result<InputEvent, LiteralError> {
    let j: Json =
        serde_json::from_str(line).map_err(|e| LiteralError(format!("bad JSON: {e}")))?;
    let ch = j
        .get("ch")
        .and_then(Json::as_str)
        .ok_or_else(|| LiteralError("event needs a string `ch` field".into()))?;
    let name = Name::new(ch);
    let ty = lookup(&name)
        .ok_or_else(|| LiteralError(format!("unknown channel `{ch}`")))?;
    let val = j
        .get("val")
        .ok_or_else(|| LiteralError("event needs a `val` field".into()))?;
    let value = decode_value(val, &ty)?;
    Ok(InputEvent {
        channel: name,
        value,
    })
}

/// Parse a buffer file: one event-shaped record per line.
pub fn decode_buffer(
    text: &str,
    lookup: impl Fn(&Name) -> Option<TypeExpr>,
) -> Result<InputBuffer, LiteralError> {
    let mut buf = InputBuffer::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let ev = decode_event(line, &lookup)?;
        buf.set(ev.channel, ev.value);
    }
    Ok(buf)
}

pub fn encode_batch_line(step: usize, batch: &OutputBatch) -> Result<String, LiteralError> {
    let outputs: Result<Vec<Json>, LiteralError> = batch
        .iter()
        .map(|(n, v)| Ok(Json::Array(vec![json!(n.as_str()), encode_value(v)?])))
        .collect();
    Ok(json!({ "step": step, "outputs": outputs? }).to_string())
}
