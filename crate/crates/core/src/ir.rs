//! Core abstract syntax and the flat-specification representation.

use std::collections::HashMap;
use std::fmt;

use indexmap::IndexMap;

use crate::term::{BinOp, FunctionTerm};
use crate::value::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StreamType {
    Unit,
    Bool,
    Num,
    Str,
}

impl StreamType {
    pub fn name(self) -> &'static str {
        match self {
            StreamType::Unit => "Unit",
            StreamType::Bool => "Bool",
            StreamType::Num => "Num",
            StreamType::Str => "Str",
        }
    }

    pub fn from_name(name: &str) -> Option<StreamType> {
        Some(match name {
            "Unit" => StreamType::Unit,
            "Bool" => StreamType::Bool,
            "Num" | "Int" | "Time" => StreamType::Num,
            "Str" | "String" => StreamType::Str,
            _ => return None,
        })
    }

    /// Whether `v` inhabits this type.
    pub fn admits(self, v: &Value) -> bool {
        matches!(
            (self, v),
            (StreamType::Unit, Value::Unit)
                | (StreamType::Bool, Value::Bool(_))
                | (StreamType::Num, Value::Num(_) | Value::Infinity)
                | (StreamType::Str, Value::Str(_))
        )
    }
}

impl fmt::Display for StreamType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Events[{}]", self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CoreExpr {
    Nil,
    Unit,
    Var(String),
    Lift(FunctionTerm, Vec<CoreExpr>),
    Time(Box<CoreExpr>),
    Last(Box<CoreExpr>, Box<CoreExpr>),
    Delay(Box<CoreExpr>, Box<CoreExpr>),
}

impl CoreExpr {
    pub fn var(name: impl Into<String>) -> CoreExpr {
        CoreExpr::Var(name.into())
    }

    pub fn lift(f: FunctionTerm, args: Vec<CoreExpr>) -> CoreExpr {
        assert_eq!(f.arity(), args.len(), "lift arity mismatch");
        CoreExpr::Lift(f, args)
    }

    pub fn time(e: CoreExpr) -> CoreExpr {
        CoreExpr::Time(Box::new(e))
    }

    pub fn last(values: CoreExpr, trigger: CoreExpr) -> CoreExpr {
        CoreExpr::Last(Box::new(values), Box::new(trigger))
    }

    pub fn delay(delays: CoreExpr, resets: CoreExpr) -> CoreExpr {
        CoreExpr::Delay(Box::new(delays), Box::new(resets))
    }

    pub fn merge(x: CoreExpr, y: CoreExpr) -> CoreExpr {
        CoreExpr::lift(FunctionTerm::merge_aux(), vec![x, y])
    }

    pub fn constant(c: Value, e: CoreExpr) -> CoreExpr {
        CoreExpr::lift(FunctionTerm::const_aux(c), vec![e])
    }

    pub fn filter(cond: CoreExpr, e: CoreExpr) -> CoreExpr {
        CoreExpr::lift(FunctionTerm::filter_aux(), vec![cond, e])
    }

    /// Signal lift: `lift(sliftaux f)(merge(x, last(x, y)), merge(y, last(y, x)))`.
    pub fn slift(f: &FunctionTerm, x: CoreExpr, y: CoreExpr) -> CoreExpr {
        let x2 = CoreExpr::merge(x.clone(), CoreExpr::last(x.clone(), y.clone()));
        let y2 = CoreExpr::merge(y.clone(), CoreExpr::last(y, x));
        CoreExpr::lift(FunctionTerm::slift_aux(f), vec![x2, y2])
    }

    pub fn slift_op(op: BinOp, x: CoreExpr, y: CoreExpr) -> CoreExpr {
        CoreExpr::slift(&FunctionTerm::binary(op), x, y)
    }

    pub fn children(&self) -> Vec<&CoreExpr> {
        match self {
            CoreExpr::Nil | CoreExpr::Unit | CoreExpr::Var(_) => Vec::new(),
            CoreExpr::Lift(_, args) => args.iter().collect(),
            CoreExpr::Time(e) => vec![e],
            CoreExpr::Last(a, b) | CoreExpr::Delay(a, b) => vec![a, b],
        }
    }

    /// Whether every operator argument is a variable.
    pub fn is_flat(&self) -> bool {
        self.children().iter().all(|c| matches!(c, CoreExpr::Var(_)))
    }

    /// Variables in occurrence order, each with a flag telling whether the
    /// occurrence is the first argument of `last` or `delay`.
    pub fn var_occurrences(&self) -> Vec<(&str, bool)> {
        let mut out = Vec::new();
        self.collect_vars(false, &mut out);
        out
    }

    fn collect_vars<'a>(&'a self, delayed: bool, out: &mut Vec<(&'a str, bool)>) {
        match self {
            CoreExpr::Nil | CoreExpr::Unit => {}
            CoreExpr::Var(n) => out.push((n, delayed)),
            CoreExpr::Lift(_, args) => args.iter().for_each(|a| a.collect_vars(false, out)),
            CoreExpr::Time(e) => e.collect_vars(false, out),
            CoreExpr::Last(a, b) | CoreExpr::Delay(a, b) => {
                a.collect_vars(true, out);
                b.collect_vars(false, out);
            }
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn contains_delay(&self) -> bool {
        matches!(self, CoreExpr::Delay(..)) || self.children().iter().any(|c| c.contains_delay())
    }
}

impl fmt::Display for CoreExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreExpr::Nil => f.write_str("nil"),
            CoreExpr::Unit => f.write_str("unit"),
            CoreExpr::Var(n) => f.write_str(n),
            CoreExpr::Lift(func, args) => {
                write!(f, "lift({func})(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            CoreExpr::Time(e) => write!(f, "time({e})"),
            CoreExpr::Last(a, b) => write!(f, "last({a}, {b})"),
            CoreExpr::Delay(a, b) => write!(f, "delay({a}, {b})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpecError {
    #[error("stream `{0}` is defined more than once")]
    DuplicateDefinition(String),
    #[error("undefined stream `{name}` used in `{equation}`")]
    UndefinedStream { name: String, equation: String },
    #[error("output `{0}` is neither an input nor an equation")]
    UnknownOutput(String),
    #[error("lift in `{equation}` has arity {arity} but {args} arguments")]
    LiftArity { equation: String, arity: usize, args: usize },
}

/// A set of mutually recursive stream equations with declared inputs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CoreSpec {
    pub inputs: IndexMap<String, StreamType>,
    pub equations: IndexMap<String, CoreExpr>,
    pub outputs: Vec<String>,
    /// Known equation types. Complete after type inference; may be partial
    /// (acting as annotations) before it.
    pub types: IndexMap<String, StreamType>,
}

impl CoreSpec {
    pub fn new() -> Self {
        CoreSpec::default()
    }

    pub fn add_input(&mut self, name: impl Into<String>, ty: StreamType) -> Result<(), SpecError> {
        let name = name.into();
        if self.is_defined(&name) {
            return Err(SpecError::DuplicateDefinition(name));
        }
        self.inputs.insert(name, ty);
        Ok(())
    }

    pub fn add_equation(&mut self, name: impl Into<String>, expr: CoreExpr) -> Result<(), SpecError> {
        let name = name.into();
        if self.is_defined(&name) {
            return Err(SpecError::DuplicateDefinition(name));
        }
        self.equations.insert(name, expr);
        Ok(())
    }

    pub fn add_output(&mut self, name: impl Into<String>) {
        self.outputs.push(name.into());
    }

    pub fn is_defined(&self, name: &str) -> bool {
        self.inputs.contains_key(name) || self.equations.contains_key(name)
    }

    pub fn type_of(&self, name: &str) -> Option<StreamType> {
        self.inputs.get(name).or_else(|| self.types.get(name)).copied()
    }

    /// Checks scoping and lift arities.
    pub fn validate(&self) -> Result<(), SpecError> {
        for (eq, expr) in &self.equations {
            check_expr(self, eq, expr)?;
        }
        for out in &self.outputs {
            if !self.is_defined(out) {
                return Err(SpecError::UnknownOutput(out.clone()));
            }
        }
        Ok(())
    }

    pub fn is_flat(&self) -> bool {
        self.equations.values().all(CoreExpr::is_flat)
    }

    /// Total number of operator nodes.
    pub fn size(&self) -> usize {
        self.equations.values().map(CoreExpr::size).sum()
    }

    /// Rewrites nested subexpressions into fresh `_flatN` equations.
    pub fn flatten(&self) -> CoreSpec {
        if self.is_flat() {
            return self.clone();
        }
        let mut fl = Flattener { spec: self, counter: 0, shared: HashMap::new(), fresh: Vec::new() };
        let mut equations = IndexMap::new();
        for (name, expr) in &self.equations {
            let top = fl.flatten_top(expr);
            for (fresh_name, fresh_expr) in fl.fresh.drain(..) {
                equations.insert(fresh_name, fresh_expr);
            }
            equations.insert(name.clone(), top);
        }
        let mut flat = CoreSpec {
            inputs: self.inputs.clone(),
            equations,
            outputs: self.outputs.clone(),
            types: self.types.clone(),
        };
        if let Ok(types) = crate::types::infer_types(&flat) {
            flat.types = types;
        }
        flat
    }
}

fn check_expr(spec: &CoreSpec, eq: &str, expr: &CoreExpr) -> Result<(), SpecError> {
    match expr {
        CoreExpr::Var(n) if !spec.is_defined(n) => {
            return Err(SpecError::UndefinedStream { name: n.clone(), equation: eq.to_string() })
        }
        CoreExpr::Lift(f, args) if f.arity() != args.len() => {
            return Err(SpecError::LiftArity { equation: eq.to_string(), arity: f.arity(), args: args.len() })
        }
        _ => {}
    }
    expr.children().into_iter().try_for_each(|c| check_expr(spec, eq, c))
}

struct Flattener<'a> {
    spec: &'a CoreSpec,
    counter: usize,
    shared: HashMap<CoreExpr, String>,
    fresh: Vec<(String, CoreExpr)>,
}

impl Flattener<'_> {
    fn flatten_top(&mut self, expr: &CoreExpr) -> CoreExpr {
        self.rebuild(expr)
    }

    fn rebuild(&mut self, expr: &CoreExpr) -> CoreExpr {
        match expr {
            CoreExpr::Nil | CoreExpr::Unit | CoreExpr::Var(_) => expr.clone(),
            CoreExpr::Lift(f, args) => {
                let args = args.iter().map(|a| self.as_var(a)).collect();
                CoreExpr::Lift(f.clone(), args)
            }
            CoreExpr::Time(e) => CoreExpr::time(self.as_var(e)),
            CoreExpr::Last(a, b) => {
                let a = self.as_var(a);
                CoreExpr::last(a, self.as_var(b))
            }
            CoreExpr::Delay(a, b) => {
                let a = self.as_var(a);
                CoreExpr::delay(a, self.as_var(b))
            }
        }
    }

    fn as_var(&mut self, expr: &CoreExpr) -> CoreExpr {
        if let CoreExpr::Var(_) = expr {
            return expr.clone();
        }
        let flat = self.rebuild(expr);
        if let Some(name) = self.shared.get(&flat) {
            return CoreExpr::Var(name.clone());
        }
        let name = self.fresh_name();
        self.shared.insert(flat.clone(), name.clone());
        self.fresh.push((name.clone(), flat));
        CoreExpr::Var(name)
    }

    fn fresh_name(&mut self) -> String {
        loop {
            let name = format!("_flat{}", self.counter);
            self.counter += 1;
            if !self.spec.is_defined(&name) {
                return name;
            }
        }
    }
}

impl fmt::Display for CoreSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, ty) in &self.inputs {
            writeln!(f, "in {name}: {ty}")?;
        }
        for (name, expr) in &self.equations {
            match self.types.get(name) {
                Some(ty) => writeln!(f, "def {name}: {ty} := {expr}")?,
                None => writeln!(f, "def {name} := {expr}")?,
            }
        }
        for name in &self.outputs {
            writeln!(f, "out {name}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: &str) -> CoreExpr {
        CoreExpr::var(n)
    }

    #[test]
    fn flatten_single_nesting() {
        let mut spec = CoreSpec::new();
        spec.add_input("a", StreamType::Bool).unwrap();
        spec.add_input("b", StreamType::Bool).unwrap();
        let inner = CoreExpr::lift(FunctionTerm::binary(BinOp::And), vec![v("a"), v("b")]);
        spec.add_equation("y", CoreExpr::lift(FunctionTerm::negation(), vec![inner.clone()])).unwrap();
        let flat = spec.flatten();
        let names: Vec<_> = flat.equations.keys().cloned().collect();
        assert_eq!(names, ["_flat0", "y"]);
        assert_eq!(flat.equations["_flat0"], inner);
        assert_eq!(flat.equations["y"], CoreExpr::lift(FunctionTerm::negation(), vec![v("_flat0")]));
        assert_eq!(flat.types["_flat0"], StreamType::Bool);
        assert_eq!(flat.flatten(), flat);
    }

    #[test]
    fn flatten_shares_common_subterms() {
        let mut spec = CoreSpec::new();
        spec.add_input("w", StreamType::Unit).unwrap();
        let tw = CoreExpr::time(v("w"));
        let diff =
            CoreExpr::lift(FunctionTerm::binary(BinOp::Sub), vec![tw.clone(), CoreExpr::last(tw.clone(), v("w"))]);
        spec.add_equation("diff", diff).unwrap();
        let flat = spec.flatten();
        assert_eq!(flat.equations["_flat0"], tw);
        assert_eq!(flat.equations["_flat1"], CoreExpr::last(v("_flat0"), v("w")));
        assert_eq!(flat.equations.len(), 3);
        assert!(flat.is_flat());
    }

    #[test]
    fn validation() {
        let mut spec = CoreSpec::new();
        spec.add_equation("a", v("b")).unwrap();
        assert!(matches!(spec.validate(), Err(SpecError::UndefinedStream { .. })));
        assert_eq!(spec.add_equation("a", CoreExpr::Nil), Err(SpecError::DuplicateDefinition("a".into())));
    }

    #[test]
    fn delayed_occurrences() {
        let e = CoreExpr::last(v("c"), v("x"));
        assert_eq!(e.var_occurrences(), vec![("c", true), ("x", false)]);
    }
}
