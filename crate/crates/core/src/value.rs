//! Values exchanged with the execution harness.
//!
//! Wire encoding: `null`, booleans, numbers, strings and arrays map to
//! themselves; tuples are `{"t": [...]}`; anything the harness could not
//! encode arrives as `{"repr": "..."}`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Map, Number};
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    None,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    List(Vec<Value>),
    Tuple(Vec<Value>),
    Opaque(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot decode value: {0}")]
pub struct ValueError(pub String);

impl Value {
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::None => serde_json::Value::Null,
            Value::Bool(b) => json!(b),
            Value::Int(i) => json!(i),
            Value::Float(f) => Number::from_f64(*f).map(serde_json::Value::Number).unwrap_or_else(|| json!({"repr": f.to_string()})),
            Value::Str(s) => json!(s),
            Value::List(xs) => serde_json::Value::Array(xs.iter().map(Value::to_json).collect()),
            Value::Tuple(xs) => json!({"t": xs.iter().map(Value::to_json).collect::<Vec<_>>()}),
            Value::Opaque(r) => json!({"repr": r}),
        }
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Value, ValueError> {
        Ok(match v {
            serde_json::Value::Null => Value::None,
            serde_json::Value::Bool(b) => Value::Bool(*b),
            serde_json::Value::Number(n) => match n.as_i64() {
                Some(i) => Value::Int(i),
                None => Value::Float(n.as_f64().ok_or_else(|| ValueError(n.to_string()))?),
            },
            serde_json::Value::String(s) => Value::Str(s.clone()),
            serde_json::Value::Array(xs) => Value::List(xs.iter().map(Value::from_json).collect::<Result<_, _>>()?),
            serde_json::Value::Object(m) => decode_tagged(m)?,
        })
    }

    /// Structural equality where ints and floats compare numerically.
    pub fn matches(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Int(a), Value::Float(b)) | (Value::Float(b), Value::Int(a)) => (*a as f64) == *b,
            (Value::List(a), Value::List(b)) | (Value::Tuple(a), Value::Tuple(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.matches(y))
            }
            _ => self == other,
        }
    }

    /// Reads a rectangular-or-not list of integer rows. Tuples count as lists.
    pub fn as_rows(&self) -> Option<Vec<Vec<i64>>> {
        self.items()?
            .iter()
            .map(|row| row.items()?.iter().map(Value::as_int).collect())
            .collect()
    }

    fn items(&self) -> Option<&[Value]> {
        match self {
            Value::List(xs) | Value::Tuple(xs) => Some(xs),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            Value::Bool(b) => Some(*b as i64),
            Value::Float(f) if f.fract() == 0.0 => Some(*f as i64),
            _ => None,
        }
    }

    pub fn grid(rows: &[Vec<u8>]) -> Value {
        Value::List(
            rows.iter()
                .map(|r| Value::List(r.iter().map(|c| Value::Int(*c as i64)).collect()))
                .collect(),
        )
    }
}

fn decode_tagged(m: &Map<String, serde_json::Value>) -> Result<Value, ValueError> {
    if m.len() == 1 {
        if let Some(serde_json::Value::Array(xs)) = m.get("t") {
            return Ok(Value::Tuple(xs.iter().map(Value::from_json).collect::<Result<_, _>>()?));
        }
        if let Some(serde_json::Value::String(r)) = m.get("repr") {
            return Ok(Value::Opaque(r.clone()));
        }
    }
    Err(ValueError(format!("unexpected object {}", serde_json::Value::Object(m.clone()))))
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        Value::from_json(&v).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_json())
    }
}

impl std::str::FromStr for Value {
    type Err = ValueError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let v: serde_json::Value = serde_json::from_str(s).map_err(|e| ValueError(e.to_string()))?;
        Value::from_json(&v)
    }
}
