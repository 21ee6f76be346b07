//! Unification-based inference of stream value types.

use indexmap::IndexMap;

use crate::ir::{CoreExpr, CoreSpec, StreamType};
use crate::term::{FunctionTerm, Term};
use crate::value::Value;

/// Type term: a known base type or a unification variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ty {
    Known(StreamType),
    Var(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("type mismatch in `{equation}`: expected {expected}, found {found}")]
pub struct TypeError {
    pub equation: String,
    /// Child-index path from the equation root to the offending node.
    pub path: Vec<usize>,
    pub expected: StreamType,
    pub found: StreamType,
}

/// Union-find over type variables.
#[derive(Default, Debug, Clone)]
pub struct Unifier {
    parent: Vec<usize>,
    bound: Vec<Option<StreamType>>,
}

impl Unifier {
    pub fn new() -> Self {
        Unifier::default()
    }

    pub fn fresh(&mut self) -> Ty {
        let id = self.parent.len();
        self.parent.push(id);
        self.bound.push(None);
        Ty::Var(id)
    }

    fn root(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    pub fn resolve(&mut self, t: Ty) -> Ty {
        match t {
            Ty::Known(_) => t,
            Ty::Var(v) => {
                let r = self.root(v);
                match self.bound[r] {
                    Some(k) => Ty::Known(k),
                    None => Ty::Var(r),
                }
            }
        }
    }

    /// On failure returns `(expected, found)` where `a` is the expected side.
    pub fn unify(&mut self, a: Ty, b: Ty) -> Result<(), (StreamType, StreamType)> {
        match (self.resolve(a), self.resolve(b)) {
            (Ty::Known(x), Ty::Known(y)) if x == y => Ok(()),
            (Ty::Known(x), Ty::Known(y)) => Err((x, y)),
            (Ty::Var(v), Ty::Known(k)) | (Ty::Known(k), Ty::Var(v)) => {
                self.bound[v] = Some(k);
                Ok(())
            }
            (Ty::Var(x), Ty::Var(y)) => {
                if x != y {
                    self.parent[x] = y;
                }
                Ok(())
            }
        }
    }

    /// Resolved type, defaulting unconstrained variables to `Unit`.
    pub fn finish(&mut self, t: Ty) -> StreamType {
        match self.resolve(t) {
            Ty::Known(k) => k,
            Ty::Var(_) => StreamType::Unit,
        }
    }
}

fn value_type(v: &Value) -> StreamType {
    match v {
        Value::Unit => StreamType::Unit,
        Value::Bool(_) => StreamType::Bool,
        Value::Num(_) | Value::Infinity => StreamType::Num,
        Value::Str(_) => StreamType::Str,
    }
}

type Mismatch = (StreamType, StreamType);

/// Infers the result type of `f` given argument types.
pub fn infer_term(u: &mut Unifier, f: &FunctionTerm, args: &[Ty]) -> Result<Ty, Mismatch> {
    infer_body(u, f.body(), args)
}

fn infer_body(u: &mut Unifier, t: &Term, args: &[Ty]) -> Result<Ty, Mismatch> {
    use StreamType::*;
    Ok(match t {
        Term::Param(i) => args[*i],
        Term::Literal(Some(v)) => Ty::Known(value_type(v)),
        Term::Literal(None) => u.fresh(),
        Term::IsSome(e) => {
            infer_body(u, e, args)?;
            Ty::Known(Bool)
        }
        Term::If(c, a, b) => {
            let c = infer_body(u, c, args)?;
            u.unify(Ty::Known(Bool), c)?;
            let a = infer_body(u, a, args)?;
            let b = infer_body(u, b, args)?;
            u.unify(a, b)?;
            a
        }
        Term::Binary(op, a, b) => {
            let a = infer_body(u, a, args)?;
            let b = infer_body(u, b, args)?;
            if op.is_arithmetic() || op.is_ordering() {
                u.unify(Ty::Known(Num), a)?;
                u.unify(Ty::Known(Num), b)?;
            } else if op.is_logical() {
                u.unify(Ty::Known(Bool), a)?;
                u.unify(Ty::Known(Bool), b)?;
            } else {
                u.unify(a, b)?;
            }
            if op.is_arithmetic() {
                Ty::Known(Num)
            } else {
                Ty::Known(Bool)
            }
        }
        Term::Not(e) => {
            let e = infer_body(u, e, args)?;
            u.unify(Ty::Known(Bool), e)?;
            Ty::Known(Bool)
        }
    })
}

struct Inference<'a> {
    spec: &'a CoreSpec,
    u: Unifier,
    vars: IndexMap<&'a str, Ty>,
}

impl<'a> Inference<'a> {
    fn expr(&mut self, eq: &str, path: &mut Vec<usize>, e: &CoreExpr) -> Result<Ty, TypeError> {
        let err = |path: &Vec<usize>, (expected, found): Mismatch| TypeError {
            equation: eq.to_string(),
            path: path.clone(),
            expected,
            found,
        };
        Ok(match e {
            CoreExpr::Nil => self.u.fresh(),
            CoreExpr::Unit => Ty::Known(StreamType::Unit),
            CoreExpr::Var(n) => match self.spec.inputs.get(n.as_str()) {
                Some(t) => Ty::Known(*t),
                None => self.vars.get(n.as_str()).copied().unwrap_or_else(|| self.u.fresh()),
            },
            CoreExpr::Time(x) => {
                self.child(eq, path, 0, x)?;
                Ty::Known(StreamType::Num)
            }
            CoreExpr::Last(v, t) => {
                let vt = self.child(eq, path, 0, v)?;
                self.child(eq, path, 1, t)?;
                vt
            }
            CoreExpr::Delay(d, r) => {
                let dt = self.child(eq, path, 0, d)?;
                self.child(eq, path, 1, r)?;
                path.push(0);
                let res = self.u.unify(Ty::Known(StreamType::Num), dt).map_err(|m| err(path, m));
                path.pop();
                res?;
                Ty::Known(StreamType::Unit)
            }
            CoreExpr::Lift(f, args) => {
                let mut tys = Vec::with_capacity(args.len());
                for (i, a) in args.iter().enumerate() {
                    tys.push(self.child(eq, path, i, a)?);
                }
                infer_term(&mut self.u, f, &tys).map_err(|m| err(path, m))?
            }
        })
    }

    fn child(&mut self, eq: &str, path: &mut Vec<usize>, i: usize, e: &CoreExpr) -> Result<Ty, TypeError> {
        path.push(i);
        let r = self.expr(eq, path, e);
        path.pop();
        r
    }
}

/// Infers a type for every equation; entries already in `spec.types` act
/// as annotations that must be matched.
pub fn infer_types(spec: &CoreSpec) -> Result<IndexMap<String, StreamType>, TypeError> {
    let mut inf = Inference { spec, u: Unifier::new(), vars: IndexMap::new() };
    for name in spec.equations.keys() {
        let t = match spec.types.get(name) {
            Some(k) => Ty::Known(*k),
            None => inf.u.fresh(),
        };
        inf.vars.insert(name, t);
    }
    for (name, expr) in &spec.equations {
        let t = inf.expr(name, &mut Vec::new(), expr)?;
        let declared = inf.vars[name.as_str()];
        inf.u.unify(declared, t).map_err(|(expected, found)| TypeError {
            equation: name.clone(),
            path: Vec::new(),
            expected,
            found,
        })?;
    }
    let names: Vec<_> = inf.vars.iter().map(|(n, t)| (n.to_string(), *t)).collect();
    Ok(names.into_iter().map(|(n, t)| (n, inf.u.finish(t))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::BinOp;

    fn temperature() -> CoreSpec {
        let mut s = CoreSpec::new();
        s.add_input("temperature", StreamType::Num).unwrap();
        let three = CoreExpr::constant(Value::int(3), CoreExpr::Unit);
        s.add_equation("low", CoreExpr::slift_op(BinOp::Lt, CoreExpr::var("temperature"), three)).unwrap();
        s
    }

    #[test]
    fn comparison_yields_bool() {
        let types = infer_types(&temperature()).unwrap();
        assert_eq!(types["low"], StreamType::Bool);
    }

    #[test]
    fn logical_on_numbers_rejected() {
        let mut s = temperature();
        let bad =
            CoreExpr::lift(FunctionTerm::binary(BinOp::And), vec![CoreExpr::var("temperature"), CoreExpr::var("low")]);
        s.add_equation("bad", bad).unwrap();
        let e = infer_types(&s).unwrap_err();
        assert_eq!(e.equation, "bad");
        assert_eq!((e.expected, e.found), (StreamType::Bool, StreamType::Num));
    }

    #[test]
    fn recursion_and_defaults() {
        let mut s = CoreSpec::new();
        s.add_equation("p", CoreExpr::delay(CoreExpr::var("q"), CoreExpr::Unit)).unwrap();
        s.add_equation("q", CoreExpr::constant(Value::int(5), CoreExpr::var("p"))).unwrap();
        s.add_equation("n", CoreExpr::Nil).unwrap();
        let types = infer_types(&s).unwrap();
        assert_eq!(types["p"], StreamType::Unit);
        assert_eq!(types["q"], StreamType::Num);
        assert_eq!(types["n"], StreamType::Unit);
    }

    #[test]
    fn delay_needs_numbers() {
        let mut s = CoreSpec::new();
        s.add_input("x", StreamType::Bool).unwrap();
        s.add_equation("d", CoreExpr::delay(CoreExpr::var("x"), CoreExpr::var("x"))).unwrap();
        let e = infer_types(&s).unwrap_err();
        assert_eq!(e.path, vec![0]);
    }

    #[test]
    fn annotations_are_checked() {
        let mut s = temperature();
        s.types.insert("low".into(), StreamType::Num);
        assert!(infer_types(&s).is_err());
    }
}
