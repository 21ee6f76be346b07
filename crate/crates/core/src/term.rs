//! Total functions over ⊥-extended values: the payload of every `lift`.

use std::fmt;

use num_traits::Zero;

use crate::value::{ExtValue, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub const ALL: [BinOp; 12] = [
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::Div,
        BinOp::Lt,
        BinOp::Le,
        BinOp::Gt,
        BinOp::Ge,
        BinOp::Eq,
        BinOp::Ne,
        BinOp::And,
        BinOp::Or,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(self, BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div)
    }

    pub fn is_ordering(self) -> bool {
        matches!(self, BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge)
    }

    pub fn is_equality(self) -> bool {
        matches!(self, BinOp::Eq | BinOp::Ne)
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or)
    }

    /// Strict application: ⊥ or ill-typed operands give ⊥.
    pub fn apply(self, lhs: &Value, rhs: &Value) -> ExtValue {
        use std::cmp::Ordering::*;
        match self {
            BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => {
                let (a, b) = (lhs.as_num()?, rhs.as_num()?);
                let q = match self {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    _ => {
                        if b.is_zero() {
                            return None;
                        }
                        a / b
                    }
                };
                Some(Value::Num(q))
            }
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                let ord = lhs.numeric_cmp(rhs)?;
                let b = match self {
                    BinOp::Lt => ord == Less,
                    BinOp::Le => ord != Greater,
                    BinOp::Gt => ord == Greater,
                    _ => ord != Less,
                };
                Some(Value::Bool(b))
            }
            BinOp::Eq => lhs.same_kind_eq(rhs).map(Value::Bool),
            BinOp::Ne => lhs.same_kind_eq(rhs).map(|e| Value::Bool(!e)),
            BinOp::And => Some(Value::Bool(lhs.as_bool()? && rhs.as_bool()?)),
            BinOp::Or => Some(Value::Bool(lhs.as_bool()? || rhs.as_bool()?)),
        }
    }
}

/// Expression tree of a lifted function body.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Param(usize),
    Literal(ExtValue),
    IsSome(Box<Term>),
    If(Box<Term>, Box<Term>, Box<Term>),
    Binary(BinOp, Box<Term>, Box<Term>),
    Not(Box<Term>),
}

impl Term {
    pub fn lit(v: Value) -> Term {
        Term::Literal(Some(v))
    }

    pub fn bottom() -> Term {
        Term::Literal(None)
    }

    pub fn is_some(t: Term) -> Term {
        Term::IsSome(Box::new(t))
    }

    pub fn ite(c: Term, a: Term, b: Term) -> Term {
        Term::If(Box::new(c), Box::new(a), Box::new(b))
    }

    pub fn bin(op: BinOp, a: Term, b: Term) -> Term {
        Term::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn negate(t: Term) -> Term {
        Term::Not(Box::new(t))
    }

    pub fn max_param(&self) -> Option<usize> {
        match self {
            Term::Param(i) => Some(*i),
            Term::Literal(_) => None,
            Term::IsSome(t) | Term::Not(t) => t.max_param(),
            Term::If(c, a, b) => c.max_param().max(a.max_param()).max(b.max_param()),
            Term::Binary(_, a, b) => a.max_param().max(b.max_param()),
        }
    }

    pub fn eval(&self, args: &[ExtValue]) -> ExtValue {
        match self {
            Term::Param(i) => args.get(*i).cloned().flatten(),
            Term::Literal(v) => v.clone(),
            Term::IsSome(t) => Some(Value::Bool(t.eval(args).is_some())),
            Term::If(c, a, b) => match c.eval(args)? {
                Value::Bool(true) => a.eval(args),
                Value::Bool(false) => b.eval(args),
                _ => None,
            },
            Term::Binary(op, a, b) => {
                let lhs = a.eval(args)?;
                let rhs = b.eval(args)?;
                op.apply(&lhs, &rhs)
            }
            Term::Not(t) => Some(Value::Bool(!t.eval(args)?.as_bool()?)),
        }
    }

    /// Replaces every `Param(i)` with `args[i]`.
    pub fn substitute(&self, args: &[Term]) -> Term {
        match self {
            Term::Param(i) => args[*i].clone(),
            Term::Literal(v) => Term::Literal(v.clone()),
            Term::IsSome(t) => Term::is_some(t.substitute(args)),
            Term::Not(t) => Term::negate(t.substitute(args)),
            Term::If(c, a, b) => Term::ite(c.substitute(args), a.substitute(args), b.substitute(args)),
            Term::Binary(op, a, b) => Term::bin(*op, a.substitute(args), b.substitute(args)),
        }
    }
}

/// A function of fixed arity over ⊥-extended values.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FunctionTerm {
    arity: usize,
    body: Term,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TermError {
    #[error("function arity must be at least 1")]
    ZeroArity,
    #[error("parameter {index} out of range for arity {arity}")]
    ParamOutOfRange { index: usize, arity: usize },
}

impl FunctionTerm {
    pub fn new(arity: usize, body: Term) -> Result<Self, TermError> {
        if arity == 0 {
            return Err(TermError::ZeroArity);
        }
        if let Some(index) = body.max_param() {
            if index >= arity {
                return Err(TermError::ParamOutOfRange { index, arity });
            }
        }
        Ok(FunctionTerm { arity, body })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn body(&self) -> &Term {
        &self.body
    }

    pub fn eval(&self, args: &[ExtValue]) -> ExtValue {
        debug_assert_eq!(args.len(), self.arity);
        self.body.eval(args)
    }

    pub fn identity() -> Self {
        FunctionTerm { arity: 1, body: Term::Param(0) }
    }

    pub fn binary(op: BinOp) -> Self {
        FunctionTerm { arity: 2, body: Term::bin(op, Term::Param(0), Term::Param(1)) }
    }

    pub fn negation() -> Self {
        FunctionTerm { arity: 1, body: Term::negate(Term::Param(0)) }
    }

    /// `mergeaux`: first argument wins when present.
    pub fn merge_aux() -> Self {
        FunctionTerm { arity: 2, body: Term::ite(Term::is_some(Term::Param(0)), Term::Param(0), Term::Param(1)) }
    }

    /// `constaux(c)`: every present value becomes `c`.
    pub fn const_aux(c: Value) -> Self {
        FunctionTerm { arity: 1, body: Term::lit(c) }
    }

    /// `filteraux`: passes the second argument iff the first is `true`.
    pub fn filter_aux() -> Self {
        FunctionTerm { arity: 2, body: Term::ite(Term::Param(0), Term::Param(1), Term::bottom()) }
    }

    /// `sliftaux(f)`: applies the binary `inner` only when both arguments
    /// are present.
    pub fn slift_aux(inner: &FunctionTerm) -> Self {
        assert_eq!(inner.arity, 2, "slift needs a binary function");
        let both = Term::bin(BinOp::And, Term::is_some(Term::Param(0)), Term::is_some(Term::Param(1)));
        FunctionTerm { arity: 2, body: Term::ite(both, inner.body.clone(), Term::bottom()) }
    }
}

impl fmt::Display for FunctionTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("fn(")?;
        for i in 0..self.arity {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "p{i}")?;
        }
        write!(f, ") => {}", self.body)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Param(i) => write!(f, "p{i}"),
            Term::Literal(None) => f.write_str("bot"),
            Term::Literal(Some(v)) => write!(f, "{v}"),
            Term::IsSome(t) => write!(f, "isSome({t})"),
            Term::If(c, a, b) => write!(f, "(if {c} then {a} else {b})"),
            Term::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Term::Not(t) => write!(f, "!({t})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: i64) -> ExtValue {
        Some(Value::int(v))
    }

    #[test]
    fn merge_aux_prefers_first() {
        let m = FunctionTerm::merge_aux();
        assert_eq!(m.eval(&[s(6), s(5)]), s(6));
        assert_eq!(m.eval(&[None, s(5)]), s(5));
        assert_eq!(m.eval(&[None, None]), None);
    }

    #[test]
    fn strictness() {
        assert_eq!(FunctionTerm::binary(BinOp::Add).eval(&[s(1), None]), None);
        assert_eq!(FunctionTerm::binary(BinOp::Div).eval(&[s(1), s(0)]), None);
        assert_eq!(FunctionTerm::binary(BinOp::And).eval(&[s(1), Some(Value::Bool(true))]), None);
        assert_eq!(FunctionTerm::negation().eval(&[None]), None);
    }

    #[test]
    fn const_and_filter() {
        assert_eq!(FunctionTerm::const_aux(Value::int(5)).eval(&[s(9)]), s(5));
        let f = FunctionTerm::filter_aux();
        assert_eq!(f.eval(&[Some(Value::Bool(true)), s(3)]), s(3));
        assert_eq!(f.eval(&[Some(Value::Bool(false)), s(3)]), None);
        assert_eq!(f.eval(&[None, s(3)]), None);
    }

    #[test]
    fn slift_aux_needs_both() {
        let f = FunctionTerm::slift_aux(&FunctionTerm::binary(BinOp::Add));
        assert_eq!(f.eval(&[s(1), s(2)]), s(3));
        assert_eq!(f.eval(&[None, s(2)]), None);
        assert_eq!(f.eval(&[s(1), None]), None);
    }

    #[test]
    fn arity_checked() {
        assert_eq!(FunctionTerm::new(0, Term::bottom()), Err(TermError::ZeroArity));
        assert_eq!(FunctionTerm::new(1, Term::Param(1)), Err(TermError::ParamOutOfRange { index: 1, arity: 1 }));
    }
}
