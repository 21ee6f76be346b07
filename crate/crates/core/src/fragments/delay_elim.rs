//! Replacing the single `delay` of a specification by a validator that
//! reads the delayed stream as an input.

use super::FragmentError;
use crate::ir::{CoreExpr, CoreSpec, StreamType};
use crate::term::{BinOp, FunctionTerm, Term};
use crate::types::infer_types;
use crate::value::Value;

fn count_delays(e: &CoreExpr) -> usize {
    usize::from(matches!(e, CoreExpr::Delay(..))) + e.children().into_iter().map(count_delays).sum::<usize>()
}

/// Replaces the delay node in `e` by a variable, returning its operands.
fn extract(e: &CoreExpr, name: &str, found: &mut Option<(CoreExpr, CoreExpr)>) -> CoreExpr {
    match e {
        CoreExpr::Delay(a, r) => {
            *found = Some(((**a).clone(), (**r).clone()));
            CoreExpr::var(name)
        }
        CoreExpr::Nil | CoreExpr::Unit | CoreExpr::Var(_) => e.clone(),
        CoreExpr::Lift(f, args) => CoreExpr::Lift(f.clone(), args.iter().map(|a| extract(a, name, found)).collect()),
        CoreExpr::Time(x) => CoreExpr::time(extract(x, name, found)),
        CoreExpr::Last(a, b) => CoreExpr::last(extract(a, name, found), extract(b, name, found)),
    }
}

fn fresh(spec: &CoreSpec, taken: &[String], base: &str) -> String {
    let free = |n: &str| !spec.is_defined(n) && !taken.iter().any(|t| t == n);
    if free(base) {
        return base.to_string();
    }
    (1..).map(|i| format!("{base}_{i}")).find(|n| free(n)).unwrap()
}

fn lift2(op: BinOp, a: CoreExpr, b: CoreExpr) -> CoreExpr {
    CoreExpr::lift(FunctionTerm::binary(op), vec![a, b])
}

fn p(i: usize) -> Term {
    Term::Param(i)
}

/// Builds the validating specification. The delayed stream `d` and every
/// other output `y` become inputs (the latter as `y_obs`); all other
/// equations are kept. The single output `z` is `true` at every relevant
/// timestamp iff `d` and the observed outputs are exactly what the
/// original specification derives from the remaining inputs.
///
/// The effective absolute deadline `a'` changes when a new delay is
/// adopted (at a due deadline or together with a reset) and is `∞` after
/// a reset without a new delay. At every event of `a`, `r` or `d`, either
/// the deadline was met by the latest `d` event, or `d` is silent now and
/// the deadline lies ahead.
pub fn delay_eliminate(spec: &CoreSpec) -> Result<CoreSpec, FragmentError> {
    let count: usize = spec.equations.values().map(count_delays).sum();
    if count != 1 {
        return Err(FragmentError::NotSingleDelay(count));
    }
    let mut taken = Vec::new();
    let name = |base: &str, taken: &mut Vec<String>| {
        let n = fresh(spec, taken, base);
        taken.push(n.clone());
        n
    };
    let (owner, body) = spec.equations.iter().find(|(_, e)| count_delays(e) == 1).unwrap();
    let d = if matches!(body, CoreExpr::Delay(..)) { owner.clone() } else { name("_delayed", &mut taken) };
    let mut operands = None;
    let mut out = CoreSpec::new();
    out.inputs = spec.inputs.clone();
    out.inputs.insert(d.clone(), StreamType::Unit);
    for (n, e) in &spec.equations {
        let e = extract(e, &d, &mut operands);
        if *n != d {
            out.equations.insert(n.clone(), e);
        }
    }
    let (a, r) = operands.expect("one delay");

    let var = |n: &str| CoreExpr::var(n);
    let eff = name("_deadline", &mut taken);
    let ta = CoreExpr::time(a.clone());
    let due = lift2(BinOp::Add, ta.clone(), a.clone());
    let b1 = CoreExpr::filter(lift2(BinOp::Eq, CoreExpr::last(var(&eff), a.clone()), ta.clone()), due.clone());
    let b2 = CoreExpr::filter(lift2(BinOp::Eq, CoreExpr::time(r.clone()), ta.clone()), due);
    let b3 =
        CoreExpr::constant(Value::Infinity, CoreExpr::merge(CoreExpr::time(r.clone()), CoreExpr::time(CoreExpr::Unit)));
    out.equations.insert(eff.clone(), CoreExpr::merge(b1, CoreExpr::merge(b2, b3)));

    let t = name("_check", &mut taken);
    out.equations.insert(t.clone(), CoreExpr::merge(ta, CoreExpr::merge(CoreExpr::time(r), CoreExpr::time(var(&d)))));
    // Time of the latest d event, -1 before the first one.
    let md = name("_fired", &mut taken);
    out.equations.insert(
        md.clone(),
        CoreExpr::merge(CoreExpr::time(var(&d)), CoreExpr::constant(Value::int(-1), CoreExpr::Unit)),
    );
    let latest = CoreExpr::merge(var(&md), CoreExpr::last(var(&md), var(&t)));
    let deadline =
        CoreExpr::merge(CoreExpr::last(var(&eff), var(&t)), CoreExpr::constant(Value::Infinity, CoreExpr::Unit));
    // p0 = now, p1 = latest d, p2 = deadline.
    let check = FunctionTerm::new(
        3,
        Term::ite(
            Term::is_some(p(0)),
            Term::bin(
                BinOp::Or,
                Term::bin(BinOp::Eq, p(1), p(2)),
                Term::bin(BinOp::And, Term::bin(BinOp::Gt, p(0), p(1)), Term::bin(BinOp::Gt, p(2), p(0))),
            ),
            Term::bottom(),
        ),
    )
    .expect("well-formed term");
    let delay_ok = name("_delay_ok", &mut taken);
    out.equations.insert(delay_ok.clone(), CoreExpr::lift(check, vec![CoreExpr::time(var(&t)), latest, deadline]));

    // Observed outputs must match the derived ones in time and value.
    let same = FunctionTerm::new(
        2,
        Term::ite(
            Term::bin(BinOp::And, Term::is_some(p(0)), Term::is_some(p(1))),
            Term::bin(BinOp::Eq, p(0), p(1)),
            Term::lit(Value::Bool(false)),
        ),
    )
    .expect("well-formed term");
    let mut checks = vec![var(&delay_ok)];
    for y in spec.outputs.iter().filter(|y| **y != d) {
        let obs = name(&format!("{y}_obs"), &mut taken);
        let ty = spec.type_of(y).unwrap_or(StreamType::Unit);
        out.inputs.insert(obs.clone(), ty);
        let ok = name(&format!("_{y}_ok"), &mut taken);
        out.equations.insert(ok.clone(), CoreExpr::lift(same.clone(), vec![var(y), var(&obs)]));
        checks.push(var(&ok));
    }
    let all = (0..checks.len())
        .map(|i| Term::ite(Term::is_some(p(i)), p(i), Term::lit(Value::Bool(true))))
        .reduce(|x, y| Term::bin(BinOp::And, x, y))
        .unwrap();
    let z = name("z", &mut taken);
    out.equations.insert(z.clone(), CoreExpr::lift(FunctionTerm::new(checks.len(), all).unwrap(), checks));
    out.add_output(&z);
    out.types = infer_types(&out).map_err(|e| FragmentError::NotBoolFragment(e.to_string()))?;
    Ok(out)
}
