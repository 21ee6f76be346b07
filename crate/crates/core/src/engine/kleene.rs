//! Literal Kleene iteration of the specification's equations, starting from
//! the everywhere-unknown streams. Slow, but a direct transcription of the
//! fixed-point semantics; used to cross-check the sweep engine.

use indexmap::IndexMap;

use super::ops::{op_delay, op_last, op_lift, op_time, NonPositiveDelay};
use super::Streams;
use crate::ir::{CoreExpr, CoreSpec};
use crate::stream::{EventStream, Progress};

fn eval_expr(e: &CoreExpr, inputs: &Streams, current: &Streams) -> Result<EventStream, NonPositiveDelay> {
    Ok(match e {
        CoreExpr::Nil => EventStream::nil(),
        CoreExpr::Unit => EventStream::unit(),
        CoreExpr::Var(n) => current.get(n).or_else(|| inputs.get(n)).cloned().unwrap_or_else(EventStream::bottom),
        CoreExpr::Lift(f, args) => {
            let args = args.iter().map(|a| eval_expr(a, inputs, current)).collect::<Result<Vec<_>, _>>()?;
            op_lift(f, &args.iter().collect::<Vec<_>>())
        }
        CoreExpr::Time(x) => op_time(&eval_expr(x, inputs, current)?),
        CoreExpr::Last(v, t) => op_last(&eval_expr(v, inputs, current)?, &eval_expr(t, inputs, current)?),
        CoreExpr::Delay(d, r) => op_delay(&eval_expr(d, inputs, current)?, &eval_expr(r, inputs, current)?)?,
    })
}

/// One application of the equations to `current`, each result cut at
/// `horizon`.
pub fn apply_once(
    spec: &CoreSpec,
    inputs: &Streams,
    current: &Streams,
    horizon: &Progress,
) -> Result<Streams, NonPositiveDelay> {
    spec.equations.iter().map(|(name, e)| Ok((name.clone(), eval_expr(e, inputs, current)?.cut(horizon)))).collect()
}

/// Least fixed point of the equations, cut at `horizon`. Missing inputs
/// are treated as completely unknown. Specifications generating
/// unboundedly many events need a finite horizon to terminate.
pub fn least_fixed_point(spec: &CoreSpec, inputs: &Streams, horizon: &Progress) -> Result<Streams, NonPositiveDelay> {
    let mut current: Streams = spec.equations.keys().map(|k| (k.clone(), EventStream::bottom())).collect();
    loop {
        let mut changed = false;
        for (name, e) in &spec.equations {
            let next = eval_expr(e, inputs, &current)?.cut(horizon);
            let slot = current.get_mut(name).expect("initialised above");
            if *slot != next {
                debug_assert!(slot.is_prefix_of(&next), "Kleene chain must ascend");
                *slot = next;
                changed = true;
            }
        }
        if !changed {
            return Ok(current);
        }
    }
}

/// Whether `outputs` is stable under one more application of the
/// equations, compared up to `upto`.
pub fn is_fixed_point(
    spec: &CoreSpec,
    inputs: &Streams,
    outputs: &Streams,
    upto: &Progress,
) -> Result<bool, NonPositiveDelay> {
    let next = apply_once(spec, inputs, outputs, upto)?;
    Ok(next.iter().all(|(name, s)| outputs.get(name).map(|o| o.cut(upto)) == Some(s.clone())))
}

/// Restricts a stream map to the given names, in that order.
pub fn select(streams: &Streams, names: &[String]) -> Streams {
    let mut out = IndexMap::new();
    for n in names {
        if let Some(s) = streams.get(n) {
            out.insert(n.clone(), s.clone());
        }
    }
    out
}
