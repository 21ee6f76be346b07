use std::cmp::Ordering;
use std::fmt;

use crate::time::{format_rational, Rational, Time};

/// A data value carried by an event.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Value {
    Unit,
    Bool(bool),
    Num(Rational),
    Str(String),
    /// Greatest element of the numeric order. Only generated internally by
    /// delay elimination, never read from or expected in traces.
    Infinity,
}

/// A value or the absence of one (`None` plays the role of ⊥).
pub type ExtValue = Option<Value>;

impl Value {
    pub fn int(n: i64) -> Value {
        Value::Num(Rational::from_integer(n.into()))
    }

    pub fn num(q: Rational) -> Value {
        Value::Num(q)
    }

    pub fn str(s: impl Into<String>) -> Value {
        Value::Str(s.into())
    }

    pub fn from_time(t: &Time) -> Value {
        Value::Num(t.as_rational().clone())
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_num(&self) -> Option<&Rational> {
        match self {
            Value::Num(q) => Some(q),
            _ => None,
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, Value::Num(_) | Value::Infinity)
    }

    /// Order on numeric values (with `Infinity` on top). `None` for
    /// non-numeric operands.
    pub fn numeric_cmp(&self, other: &Value) -> Option<Ordering> {
        match (self, other) {
            (Value::Num(a), Value::Num(b)) => Some(a.cmp(b)),
            (Value::Infinity, Value::Infinity) => Some(Ordering::Equal),
            (Value::Infinity, Value::Num(_)) => Some(Ordering::Greater),
            (Value::Num(_), Value::Infinity) => Some(Ordering::Less),
            _ => None,
        }
    }

    /// Equality defined only between values of the same kind.
    pub fn same_kind_eq(&self, other: &Value) -> Option<bool> {
        match (self, other) {
            (Value::Unit, Value::Unit) => Some(true),
            (Value::Bool(a), Value::Bool(b)) => Some(a == b),
            (Value::Str(a), Value::Str(b)) => Some(a == b),
            _ => self.numeric_cmp(other).map(|o| o == Ordering::Equal),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Unit => f.write_str("()"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Num(q) => f.write_str(&format_rational(q)),
            Value::Str(s) => write_quoted(f, s),
            Value::Infinity => f.write_str("inf"),
        }
    }
}

fn write_quoted(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    f.write_str("\"")?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            '\r' => f.write_str("\\r")?,
            c => write!(f, "{c}")?,
        }
    }
    f.write_str("\"")
}
