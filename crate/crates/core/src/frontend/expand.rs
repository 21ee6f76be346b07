//! Macro expansion down to core nodes (`Builtin`, `Lift`, `Ident`,
//! `Ascribe`).
//!
//! Macro arguments are passed by name: a stream argument is expanded once,
//! lazily, in the caller's scope; an argument used inside a lambda body is
//! read as a term (typically a literal). Block-local definitions are
//! hoisted to top-level equations named after their enclosing definition
//! or macro instance, e.g. `count#1.c`.

use std::cell::RefCell;
use std::collections::{HashMap, HashSet};
use std::rc::Rc;

use super::ast::*;
use crate::term::{BinOp, FunctionTerm, Term};
use crate::time::parse_rational;
use crate::value::Value;

const MAX_DEPTH: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExpandError {
    #[error("{span}: unknown macro `{name}`")]
    UnknownMacro { name: String, span: Span },
    #[error("{span}: `{name}` expects {expected} argument(s), found {found}")]
    ArityMismatch { name: String, expected: usize, found: usize, span: Span },
    #[error("{span}: macro `{name}` is recursive")]
    RecursiveMacro { name: String, span: Span },
    #[error("{span}: expected a stream expression")]
    NotAStream { span: Span },
    #[error("{span}: expected a function (operator or lambda)")]
    NotAFunction { span: Span },
    #[error("{span}: {message}")]
    InvalidTerm { message: String, span: Span },
}

struct MacroDef {
    def: Def,
    /// `None` for globally defined macros.
    env: Option<Env>,
}

struct Arg {
    expr: Expr,
    env: Option<Env>,
    ascription: Option<TypeExpr>,
    /// Naming context of the call site, for definitions hoisted out of the
    /// argument.
    ctx: String,
    cache: RefCell<Option<Expr>>,
}

#[derive(Clone)]
enum Binding {
    Stream(String),
    Arg(Rc<Arg>),
    Macro(Rc<MacroDef>),
}

type Env = Rc<Scope>;

struct Scope {
    vars: HashMap<String, Binding>,
    parent: Option<Env>,
}

fn extend(parent: &Option<Env>, vars: HashMap<String, Binding>) -> Option<Env> {
    Some(Rc::new(Scope { vars, parent: parent.clone() }))
}

fn is_concrete(t: &TypeExpr) -> bool {
    match t {
        TypeExpr::Events(inner) => is_concrete(inner),
        TypeExpr::Name(n) => base_type(n).is_some(),
    }
}

fn merged_call(e: &Expr) -> Option<(&Expr, Vec<&Expr>)> {
    let ExprKind::Call(f, args) = &e.kind else { return None };
    let (head, mut all) = match merged_call(f) {
        Some((h, a)) => (h, a),
        None => (&**f, Vec::new()),
    };
    all.extend(args.iter());
    Some((head, all))
}

fn literal_value(l: &Literal, span: Span) -> Result<Value, ExpandError> {
    Ok(match l {
        Literal::Unit => Value::Unit,
        Literal::Bool(b) => Value::Bool(*b),
        Literal::Str(s) => Value::Str(s.clone()),
        Literal::Num(n) => Value::Num(
            parse_rational(n)
                .ok_or_else(|| ExpandError::InvalidTerm { message: format!("invalid number `{n}`"), span })?,
        ),
    })
}

fn builtin(name: &str) -> Option<Builtin> {
    Some(match name {
        "nil" => Builtin::Nil,
        "unit" => Builtin::Unit,
        "time" => Builtin::Time,
        "last" => Builtin::Last,
        "delay" => Builtin::Delay,
        _ => return None,
    })
}

fn lift(f: FunctionTerm, args: Vec<Expr>, span: Span) -> Expr {
    Expr::new(ExprKind::Lift(f, args), span)
}

fn core_last(v: Expr, t: Expr, span: Span) -> Expr {
    Expr::new(ExprKind::Builtin(Builtin::Last, vec![v, t]), span)
}

/// `lift(sliftaux f)(merge(x, last(x, y)), merge(y, last(y, x)))`
fn slift(f: &FunctionTerm, x: Expr, y: Expr, span: Span) -> Expr {
    let x2 = lift(FunctionTerm::merge_aux(), vec![x.clone(), core_last(x.clone(), y.clone(), span)], span);
    let y2 = lift(FunctionTerm::merge_aux(), vec![y.clone(), core_last(y, x, span)], span);
    lift(FunctionTerm::slift_aux(f), vec![x2, y2], span)
}

struct Expander {
    globals: HashMap<String, Binding>,
    used: HashSet<String>,
    instances: HashMap<String, usize>,
    hoisted: Vec<Def>,
    depth: usize,
}

impl Expander {
    fn lookup(&self, env: &Option<Env>, name: &str) -> Option<Binding> {
        let mut cur = env.clone();
        while let Some(scope) = cur {
            if let Some(b) = scope.vars.get(name) {
                return Some(b.clone());
            }
            cur = scope.parent.clone();
        }
        self.globals.get(name).cloned()
    }

    fn fresh(&mut self, base: String) -> String {
        let mut name = base.clone();
        let mut k = 1;
        while self.used.contains(&name) {
            k += 1;
            name = format!("{base}#{k}");
        }
        self.used.insert(name.clone());
        name
    }

    fn stream(&mut self, e: &Expr, env: &Option<Env>, ctx: &str) -> Result<Expr, ExpandError> {
        let span = e.span;
        match &e.kind {
            ExprKind::Ident(name) => match self.lookup(env, name) {
                Some(Binding::Stream(target)) => Ok(Expr::new(ExprKind::Ident(target), span)),
                Some(Binding::Arg(arg)) => self.arg_stream(&arg),
                Some(Binding::Macro(m)) => self.instantiate(name, &m, &[], env, ctx, span),
                None => match builtin(name) {
                    Some(b) if b.arity() == 0 => Ok(Expr::new(ExprKind::Builtin(b, Vec::new()), span)),
                    Some(b) => {
                        Err(ExpandError::ArityMismatch { name: name.clone(), expected: b.arity(), found: 0, span })
                    }
                    // Left for the type checker to report.
                    None => Ok(e.clone()),
                },
            },
            ExprKind::Literal(l) => {
                let v = literal_value(l, span)?;
                let unit = Expr::new(ExprKind::Builtin(Builtin::Unit, Vec::new()), span);
                Ok(lift(FunctionTerm::const_aux(v), vec![unit], span))
            }
            ExprKind::Call(..) => {
                let (head, args) = merged_call(e).expect("call node");
                self.call(head, &args, env, ctx, span)
            }
            ExprKind::Binary(op, a, b) => {
                let a = self.stream(a, env, ctx)?;
                let b = self.stream(b, env, ctx)?;
                Ok(slift(&FunctionTerm::binary(*op), a, b, span))
            }
            ExprKind::Unary(op, a) => {
                let a = self.stream(a, env, ctx)?;
                let f = match op {
                    UnOp::Not => FunctionTerm::negation(),
                    UnOp::Neg => FunctionTerm::new(1, Term::bin(BinOp::Sub, Term::lit(Value::int(0)), Term::Param(0)))
                        .expect("unary term"),
                };
                Ok(lift(f, vec![a], span))
            }
            ExprKind::Block(defs, body) => {
                let env = self.block(defs, env, ctx)?;
                self.stream(body, &env, ctx)
            }
            ExprKind::Builtin(b, args) => {
                let args = args.iter().map(|a| self.stream(a, env, ctx)).collect::<Result<_, _>>()?;
                Ok(Expr::new(ExprKind::Builtin(*b, args), span))
            }
            ExprKind::Lift(f, args) => {
                let args = args.iter().map(|a| self.stream(a, env, ctx)).collect::<Result<_, _>>()?;
                Ok(lift(f.clone(), args, span))
            }
            ExprKind::Ascribe(inner, t) => {
                let inner = self.stream(inner, env, ctx)?;
                Ok(Expr::new(ExprKind::Ascribe(Box::new(inner), t.clone()), span))
            }
            ExprKind::If(..) | ExprKind::Lambda(..) | ExprKind::Op(_) => Err(ExpandError::NotAStream { span }),
        }
    }

    fn arg_stream(&mut self, arg: &Arg) -> Result<Expr, ExpandError> {
        if let Some(done) = arg.cache.borrow().as_ref() {
            return Ok(done.clone());
        }
        let mut e = self.stream(&arg.expr, &arg.env, &arg.ctx)?;
        if let Some(t) = &arg.ascription {
            let span = e.span;
            e = Expr::new(ExprKind::Ascribe(Box::new(e), t.clone()), span);
        }
        *arg.cache.borrow_mut() = Some(e.clone());
        Ok(e)
    }

    fn block(&mut self, defs: &[Def], env: &Option<Env>, ctx: &str) -> Result<Option<Env>, ExpandError> {
        let mut vars = HashMap::new();
        let mut locals = Vec::new();
        for d in defs {
            if d.params.is_some() {
                // Local macro: closes over the block scope, filled in below.
                continue;
            }
            let name = self.fresh(format!("{ctx}.{}", d.name));
            vars.insert(d.name.clone(), Binding::Stream(name.clone()));
            locals.push((name, d));
        }
        // Local macros see the block's streams but not each other's bodies
        // recursively beyond the depth limit.
        let base = extend(env, vars.clone());
        for d in defs.iter().filter(|d| d.params.is_some()) {
            vars.insert(d.name.clone(), Binding::Macro(Rc::new(MacroDef { def: d.clone(), env: base.clone() })));
        }
        let scope = extend(env, vars);
        for (name, d) in locals {
            let body = self.stream(&d.body, &scope, &name)?;
            self.hoisted.push(Def {
                name,
                type_params: Vec::new(),
                params: None,
                ty: d.ty.clone(),
                body,
                span: d.span,
            });
        }
        Ok(scope)
    }

    fn call(
        &mut self,
        head: &Expr,
        args: &[&Expr],
        env: &Option<Env>,
        ctx: &str,
        span: Span,
    ) -> Result<Expr, ExpandError> {
        let ExprKind::Ident(name) = &head.kind else {
            return Err(ExpandError::NotAFunction { span: head.span });
        };
        match self.lookup(env, name) {
            Some(Binding::Macro(m)) => return self.instantiate(name, &m, args, env, ctx, span),
            Some(_) => return Err(ExpandError::UnknownMacro { name: name.clone(), span: head.span }),
            None => {}
        }
        let arity_error =
            |expected: usize| ExpandError::ArityMismatch { name: name.clone(), expected, found: args.len(), span };
        match name.as_str() {
            "lift" | "slift" => {
                let Some((f, rest)) = args.split_first() else {
                    return Err(arity_error(1));
                };
                let f = self.function(f, env)?;
                if rest.len() != f.arity() {
                    return Err(arity_error(f.arity() + 1));
                }
                let streams = rest.iter().map(|a| self.stream(a, env, ctx)).collect::<Result<Vec<_>, _>>()?;
                if name == "lift" {
                    return Ok(lift(f, streams, span));
                }
                if f.arity() != 2 {
                    return Err(ExpandError::InvalidTerm { message: "slift needs a binary function".into(), span });
                }
                let mut it = streams.into_iter();
                let (x, y) = (it.next().unwrap(), it.next().unwrap());
                Ok(slift(&f, x, y, span))
            }
            _ => {
                let b =
                    builtin(name).ok_or_else(|| ExpandError::UnknownMacro { name: name.clone(), span: head.span })?;
                if args.len() != b.arity() {
                    return Err(arity_error(b.arity()));
                }
                let streams = args.iter().map(|a| self.stream(a, env, ctx)).collect::<Result<_, _>>()?;
                Ok(Expr::new(ExprKind::Builtin(b, streams), span))
            }
        }
    }

    fn instantiate(
        &mut self,
        name: &str,
        m: &MacroDef,
        args: &[&Expr],
        env: &Option<Env>,
        caller_ctx: &str,
        span: Span,
    ) -> Result<Expr, ExpandError> {
        let params = m.def.params.as_deref().unwrap_or(&[]);
        if params.len() != args.len() {
            return Err(ExpandError::ArityMismatch {
                name: name.to_string(),
                expected: params.len(),
                found: args.len(),
                span,
            });
        }
        if self.depth >= MAX_DEPTH {
            return Err(ExpandError::RecursiveMacro { name: name.to_string(), span: m.def.span });
        }
        let vars = params
            .iter()
            .zip(args)
            .map(|(p, a)| {
                let arg = Arg {
                    expr: (*a).clone(),
                    env: env.clone(),
                    ascription: p.ty.clone().filter(is_concrete),
                    ctx: caller_ctx.to_string(),
                    cache: RefCell::new(None),
                };
                (p.name.clone(), Binding::Arg(Rc::new(arg)))
            })
            .collect();
        let scope = extend(&m.env, vars);
        let k = self.instances.entry(name.to_string()).or_insert(0);
        *k += 1;
        let ctx = format!("{name}#{k}");
        self.depth += 1;
        let body = self.stream(&m.def.body, &scope, &ctx);
        self.depth -= 1;
        let mut body = body?;
        if let Some(t) = m.def.ty.as_ref().filter(|t| is_concrete(t)) {
            body = Expr::new(ExprKind::Ascribe(Box::new(body), t.clone()), span);
        }
        body.span = span;
        Ok(body)
    }

    fn function(&mut self, e: &Expr, env: &Option<Env>) -> Result<FunctionTerm, ExpandError> {
        match &e.kind {
            ExprKind::Op(OpRef::Bin(op)) => Ok(FunctionTerm::binary(*op)),
            ExprKind::Op(OpRef::Not) => Ok(FunctionTerm::negation()),
            ExprKind::Lambda(ps, body) => {
                let t = self.term(body, env, ps)?;
                FunctionTerm::new(ps.len(), t)
                    .map_err(|err| ExpandError::InvalidTerm { message: err.to_string(), span: e.span })
            }
            ExprKind::Ident(n) => match self.lookup(env, n) {
                Some(Binding::Arg(arg)) => self.function(&arg.expr, &arg.env),
                _ => Err(ExpandError::NotAFunction { span: e.span }),
            },
            _ => Err(ExpandError::NotAFunction { span: e.span }),
        }
    }

    fn term(&mut self, e: &Expr, env: &Option<Env>, params: &[String]) -> Result<Term, ExpandError> {
        let span = e.span;
        Ok(match &e.kind {
            ExprKind::Ident(n) => {
                if let Some(i) = params.iter().position(|p| p == n) {
                    return Ok(Term::Param(i));
                }
                if n == "bot" {
                    return Ok(Term::bottom());
                }
                match self.lookup(env, n) {
                    Some(Binding::Arg(arg)) => self.term(&arg.expr, &arg.env, &[])?,
                    _ => {
                        return Err(ExpandError::InvalidTerm {
                            message: format!("`{n}` is not a value inside a function body"),
                            span,
                        })
                    }
                }
            }
            ExprKind::Literal(l) => Term::lit(literal_value(l, span)?),
            ExprKind::Binary(op, a, b) => Term::bin(*op, self.term(a, env, params)?, self.term(b, env, params)?),
            ExprKind::Unary(UnOp::Not, a) => Term::negate(self.term(a, env, params)?),
            ExprKind::Unary(UnOp::Neg, a) => {
                Term::bin(BinOp::Sub, Term::lit(Value::int(0)), self.term(a, env, params)?)
            }
            ExprKind::If(c, a, b) => {
                Term::ite(self.term(c, env, params)?, self.term(a, env, params)?, self.term(b, env, params)?)
            }
            ExprKind::Call(f, args) if matches!(&f.kind, ExprKind::Ident(n) if n == "isSome") && args.len() == 1 => {
                Term::is_some(self.term(&args[0], env, params)?)
            }
            _ => {
                return Err(ExpandError::InvalidTerm {
                    message: "unsupported construct inside a function body".into(),
                    span,
                })
            }
        })
    }
}

/// Names of global macros referenced from `e`, ignoring shadowed ones.
fn macro_refs(e: &Expr, bound: &HashSet<String>, macros: &HashMap<String, Span>, out: &mut Vec<String>) {
    match &e.kind {
        ExprKind::Ident(n) => {
            if !bound.contains(n) && macros.contains_key(n) {
                out.push(n.clone());
            }
        }
        ExprKind::Lambda(ps, body) => {
            let mut inner = bound.clone();
            inner.extend(ps.iter().cloned());
            macro_refs(body, &inner, macros, out);
        }
        ExprKind::Block(defs, body) => {
            let mut inner = bound.clone();
            inner.extend(defs.iter().map(|d| d.name.clone()));
            for d in defs {
                let mut b = inner.clone();
                b.extend(d.params.iter().flatten().map(|p| p.name.clone()));
                macro_refs(&d.body, &b, macros, out);
            }
            macro_refs(body, &inner, macros, out);
        }
        _ => {
            for c in e.children() {
                macro_refs(c, bound, macros, out);
            }
        }
    }
}

fn check_acyclic(macros: &[&Def]) -> Result<(), ExpandError> {
    let spans: HashMap<String, Span> = macros.iter().map(|d| (d.name.clone(), d.span)).collect();
    let mut edges: HashMap<&str, Vec<String>> = HashMap::new();
    for d in macros {
        let bound = d.params.iter().flatten().map(|p| p.name.clone()).collect();
        let mut refs = Vec::new();
        macro_refs(&d.body, &bound, &spans, &mut refs);
        edges.insert(&d.name, refs);
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    fn visit<'a>(
        n: &'a str,
        edges: &'a HashMap<&str, Vec<String>>,
        state: &mut HashMap<&'a str, u8>,
    ) -> Option<&'a str> {
        match state.get(n) {
            Some(1) => return Some(n),
            Some(_) => return None,
            None => {}
        }
        state.insert(n, 1);
        for m in edges.get(n).into_iter().flatten() {
            if let Some(c) = visit(m, edges, state) {
                return Some(c);
            }
        }
        state.insert(n, 2);
        None
    }
    let mut state = HashMap::new();
    for d in macros {
        if let Some(n) = visit(&d.name, &edges, &mut state) {
            return Err(ExpandError::RecursiveMacro { name: n.to_string(), span: spans[n] });
        }
    }
    Ok(())
}

/// Expands all macro applications of `program`, using `stdlib` as the
/// outermost set of macro definitions (user macros shadow library ones).
/// The result holds inputs, plain equations over core nodes, and outputs.
pub fn expand_macros(program: &Program, stdlib: &Program) -> Result<Program, ExpandError> {
    let mut macros: HashMap<String, &Def> = HashMap::new();
    for d in stdlib.defs() {
        macros.insert(d.name.clone(), d);
    }
    let mut equations = Vec::new();
    for d in program.defs() {
        if d.params.is_some() {
            macros.insert(d.name.clone(), d);
        } else {
            macros.remove(&d.name);
            equations.push(d);
        }
    }
    let mut list: Vec<&Def> = macros.values().copied().collect();
    list.sort_by_key(|d| (d.span.line, d.span.col, d.name.clone()));
    check_acyclic(&list)?;

    let mut globals = HashMap::new();
    let mut used = HashSet::new();
    for (name, _, _) in program.inputs() {
        globals.insert(name.to_string(), Binding::Stream(name.to_string()));
        used.insert(name.to_string());
    }
    for d in &equations {
        globals.insert(d.name.clone(), Binding::Stream(d.name.clone()));
        used.insert(d.name.clone());
    }
    for d in &list {
        globals.insert(d.name.clone(), Binding::Macro(Rc::new(MacroDef { def: (*d).clone(), env: None })));
    }
    let mut ex = Expander { globals, used, instances: HashMap::new(), hoisted: Vec::new(), depth: 0 };

    let mut items = Vec::new();
    for item in &program.items {
        match item {
            Item::In { .. } | Item::Out { .. } => items.push(item.clone()),
            Item::Def(d) if d.params.is_none() => {
                let body = ex.stream(&d.body, &None, &d.name)?;
                items.extend(ex.hoisted.drain(..).map(Item::Def));
                items.push(Item::Def(Def { body, ..d.clone() }));
            }
            Item::Def(_) => {}
        }
    }
    Ok(Program { items })
}

/// Whether `e` consists of core nodes only.
pub fn is_core(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Ident(_) => true,
        ExprKind::Builtin(..) | ExprKind::Lift(..) | ExprKind::Ascribe(..) => e.children().into_iter().all(is_core),
        _ => false,
    }
}
