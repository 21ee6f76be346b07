//! Type checking of macro-free programs and lowering to [`CoreSpec`].

use std::collections::HashMap;

use super::ast::*;
use crate::ir::{CoreExpr, CoreSpec, StreamType};
use crate::types::{infer_term, Ty, Unifier};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CheckError {
    #[error("{span}: type mismatch: expected Events[{expected}], found Events[{found}]")]
    TypeError { expected: StreamType, found: StreamType, span: Span },
    #[error("{span}: undefined stream `{name}`")]
    UndefinedStream { name: String, span: Span },
    #[error("{span}: `{name}` is defined more than once")]
    DuplicateDefinition { name: String, span: Span },
    #[error("{span}: invalid type `{text}`")]
    InvalidType { text: String, span: Span },
    #[error("{span}: expected a core expression")]
    NotCore { span: Span },
}

fn stream_type(t: &TypeExpr, span: Span) -> Result<StreamType, CheckError> {
    let invalid = || CheckError::InvalidType { text: super::pretty::pretty_type(t), span };
    match t {
        TypeExpr::Events(inner) => match &**inner {
            TypeExpr::Name(n) => base_type(n).ok_or_else(invalid),
            _ => Err(invalid()),
        },
        TypeExpr::Name(_) => Err(invalid()),
    }
}

struct Checker {
    u: Unifier,
    vars: HashMap<String, Ty>,
}

impl Checker {
    fn unify(&mut self, expected: Ty, found: Ty, span: Span) -> Result<(), CheckError> {
        self.u.unify(expected, found).map_err(|(expected, found)| CheckError::TypeError { expected, found, span })
    }

    fn expr(&mut self, e: &Expr) -> Result<(CoreExpr, Ty), CheckError> {
        let span = e.span;
        Ok(match &e.kind {
            ExprKind::Ident(n) => {
                let t = *self.vars.get(n).ok_or_else(|| CheckError::UndefinedStream { name: n.clone(), span })?;
                (CoreExpr::var(n.clone()), t)
            }
            ExprKind::Builtin(b, args) => {
                let mut cs = Vec::new();
                let mut ts = Vec::new();
                for a in args {
                    let (c, t) = self.expr(a)?;
                    cs.push(c);
                    ts.push(t);
                }
                let mut it = cs.into_iter();
                match b {
                    Builtin::Nil => (CoreExpr::Nil, self.u.fresh()),
                    Builtin::Unit => (CoreExpr::Unit, Ty::Known(StreamType::Unit)),
                    Builtin::Time => (CoreExpr::time(it.next().unwrap()), Ty::Known(StreamType::Num)),
                    Builtin::Last => {
                        let (v, t) = (it.next().unwrap(), it.next().unwrap());
                        (CoreExpr::last(v, t), ts[0])
                    }
                    Builtin::Delay => {
                        self.unify(Ty::Known(StreamType::Num), ts[0], args[0].span)?;
                        let (d, r) = (it.next().unwrap(), it.next().unwrap());
                        (CoreExpr::delay(d, r), Ty::Known(StreamType::Unit))
                    }
                }
            }
            ExprKind::Lift(f, args) => {
                let mut cs = Vec::new();
                let mut ts = Vec::new();
                for a in args {
                    let (c, t) = self.expr(a)?;
                    cs.push(c);
                    ts.push(t);
                }
                let t = infer_term(&mut self.u, f, &ts).map_err(|(expected, found)| CheckError::TypeError {
                    expected,
                    found,
                    span,
                })?;
                (CoreExpr::lift(f.clone(), cs), t)
            }
            ExprKind::Ascribe(inner, ty) => {
                let want = stream_type(ty, span)?;
                let (c, t) = self.expr(inner)?;
                self.unify(Ty::Known(want), t, inner.span)?;
                (c, t)
            }
            _ => return Err(CheckError::NotCore { span }),
        })
    }
}

/// Checks a macro-free program and lowers it. Every equation receives a
/// type; outputs keep their `out` order.
pub fn type_check(program: &Program) -> Result<CoreSpec, CheckError> {
    let mut spec = CoreSpec::new();
    let mut checker = Checker { u: Unifier::new(), vars: HashMap::new() };
    let mut seen = HashMap::new();
    let mut claim = |name: &str, span: Span| {
        if seen.insert(name.to_string(), span).is_some() {
            return Err(CheckError::DuplicateDefinition { name: name.to_string(), span });
        }
        Ok(())
    };
    for (name, ty, span) in program.inputs() {
        claim(name, span)?;
        let t = stream_type(ty, span)?;
        spec.inputs.insert(name.to_string(), t);
        checker.vars.insert(name.to_string(), Ty::Known(t));
    }
    let defs: Vec<&Def> = program.defs().collect();
    let mut declared = Vec::new();
    for d in &defs {
        claim(&d.name, d.span)?;
        let t = match &d.ty {
            Some(ty) => Ty::Known(stream_type(ty, d.span)?),
            None => checker.u.fresh(),
        };
        checker.vars.insert(d.name.clone(), t);
        declared.push(t);
    }
    for (d, t) in defs.iter().zip(&declared) {
        if d.params.as_ref().is_some_and(|p| !p.is_empty()) {
            return Err(CheckError::NotCore { span: d.span });
        }
        let (core, found) = checker.expr(&d.body)?;
        checker.unify(*t, found, d.body.span)?;
        spec.equations.insert(d.name.clone(), core);
    }
    for (d, t) in defs.iter().zip(declared) {
        spec.types.insert(d.name.clone(), checker.u.finish(t));
    }
    for (name, span) in program.outputs() {
        if !spec.is_defined(name) {
            return Err(CheckError::UndefinedStream { name: name.to_string(), span });
        }
        spec.add_output(name);
    }
    Ok(spec)
}
