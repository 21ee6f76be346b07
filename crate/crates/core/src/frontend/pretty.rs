//! Source printer. Output re-parses to the same tree up to spans; compound
//! subexpressions are fully parenthesized.

use std::fmt::Write;

use super::ast::*;

pub fn pretty_program(p: &Program) -> String {
    let mut out = String::new();
    for item in &p.items {
        match item {
            Item::In { name, ty, .. } => writeln!(out, "in {name}: {}", pretty_type(ty)).unwrap(),
            Item::Out { name, .. } => writeln!(out, "out {name}").unwrap(),
            Item::Def(d) => writeln!(out, "{}", pretty_def(d)).unwrap(),
        }
    }
    out
}

pub fn pretty_type(t: &TypeExpr) -> String {
    match t {
        TypeExpr::Events(inner) => format!("Events[{}]", pretty_type(inner)),
        TypeExpr::Name(n) => n.clone(),
    }
}

pub fn pretty_def(d: &Def) -> String {
    let mut s = format!("def {}", d.name);
    if !d.type_params.is_empty() {
        write!(s, "[{}]", d.type_params.join(", ")).unwrap();
    }
    if let Some(params) = &d.params {
        let ps: Vec<String> = params
            .iter()
            .map(|p| match &p.ty {
                Some(t) => format!("{}: {}", p.name, pretty_type(t)),
                None => p.name.clone(),
            })
            .collect();
        write!(s, "({})", ps.join(", ")).unwrap();
    }
    if let Some(t) = &d.ty {
        write!(s, ": {}", pretty_type(t)).unwrap();
    }
    write!(s, " := {}", pretty_expr(&d.body)).unwrap();
    s
}

fn literal(l: &Literal) -> String {
    match l {
        Literal::Unit => "()".into(),
        Literal::Bool(b) => b.to_string(),
        Literal::Num(n) => n.clone(),
        Literal::Str(s) => format!("{s:?}"),
    }
}

fn args(es: &[Expr]) -> String {
    es.iter().map(pretty_expr).collect::<Vec<_>>().join(", ")
}

fn atom(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Ident(_) | ExprKind::Literal(_) | ExprKind::Call(..) | ExprKind::Block(..) => pretty_expr(e),
        ExprKind::Builtin(..) | ExprKind::Lift(..) => pretty_expr(e),
        _ => format!("({})", pretty_expr(e)),
    }
}

pub fn pretty_expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Ident(n) => n.clone(),
        ExprKind::Literal(l) => literal(l),
        ExprKind::Call(f, a) => format!("{}({})", atom(f), args(a)),
        ExprKind::Binary(op, a, b) => format!("{} {} {}", atom(a), op.symbol(), atom(b)),
        ExprKind::Unary(UnOp::Not, a) => format!("!{}", atom(a)),
        ExprKind::Unary(UnOp::Neg, a) => format!("-{}", atom(a)),
        ExprKind::If(c, a, b) => format!("if {} then {} else {}", pretty_expr(c), pretty_expr(a), pretty_expr(b)),
        ExprKind::Lambda(ps, body) => format!("fn({}) => {}", ps.join(", "), pretty_expr(body)),
        ExprKind::Op(OpRef::Bin(op)) => format!("({})", op.symbol()),
        ExprKind::Op(OpRef::Not) => "(!)".into(),
        ExprKind::Block(defs, body) => {
            let mut s = String::from("{\n");
            for d in defs {
                s.push_str(&pretty_def(d));
                s.push('\n');
            }
            // A leading `-` would continue the previous definition.
            match body.kind {
                ExprKind::Unary(UnOp::Neg, _) => s.push_str(&atom(body)),
                _ => s.push_str(&pretty_expr(body)),
            }
            s.push_str("\n}");
            s
        }
        ExprKind::Builtin(b, a) if a.is_empty() => b.name().to_string(),
        ExprKind::Builtin(b, a) => format!("{}({})", b.name(), args(a)),
        ExprKind::Lift(f, a) => format!("lift({f})({})", args(a)),
        ExprKind::Ascribe(inner, t) => format!("{}: {}", atom(inner), pretty_type(t)),
    }
}
