//! The core operators as functions on whole (finite-prefix) streams.
//!
//! Each function returns the maximal output prefix determined by the given
//! input prefixes. They serve as the semantic reference for the sweep
//! engine and are iterated to a fixed point by [`super::kleene`].

use num_traits::Signed;

use crate::stream::{EventStream, Lookup, Progress};
use crate::term::FunctionTerm;
use crate::time::Time;
use crate::value::{ExtValue, Value};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("delay value {value} at time {time} is not positive")]
pub struct NonPositiveDelay {
    pub time: Time,
    pub value: Value,
}

/// Absolute timeout for a delay event, validating the duration.
pub fn timeout_for(t: &Time, d: &Value) -> Result<Time, NonPositiveDelay> {
    match d {
        Value::Num(q) if q.is_positive() => Ok(t.checked_add(q).expect("positive sum")),
        _ => Err(NonPositiveDelay { time: t.clone(), value: d.clone() }),
    }
}

fn build(events: Vec<(Time, Value)>, progress: Progress) -> EventStream {
    EventStream::new(events, progress).expect("operator output respects stream invariants")
}

pub fn op_time(s: &EventStream) -> EventStream {
    let events = s.events().iter().map(|(t, _)| (t.clone(), Value::from_time(t))).collect();
    build(events, s.progress().clone())
}

pub fn op_lift(f: &FunctionTerm, ss: &[&EventStream]) -> EventStream {
    assert_eq!(f.arity(), ss.len());
    let progress = ss.iter().map(|s| s.progress().clone()).min().expect("arity at least one");
    let mut cursors = vec![0usize; ss.len()];
    let mut events = Vec::new();
    loop {
        let next = ss.iter().zip(&cursors).filter_map(|(s, &c)| s.events().get(c).map(|(t, _)| t)).min().cloned();
        let Some(t) = next else { break };
        if !progress.covers(&t) {
            break;
        }
        let args: Vec<ExtValue> = ss
            .iter()
            .zip(cursors.iter_mut())
            .map(|(s, c)| match s.events().get(*c) {
                Some((u, v)) if *u == t => {
                    *c += 1;
                    Some(v.clone())
                }
                _ => None,
            })
            .collect();
        if let Some(v) = f.eval(&args) {
            events.push((t, v));
        }
    }
    build(events, progress)
}

pub fn op_last(values: &EventStream, trigger: &EventStream) -> EventStream {
    let vprog = values.progress();
    // Before the first value event the output is known to be empty.
    let vacuous = match values.events().first() {
        Some((q, _)) => Progress::Inclusive(q.clone()),
        None => vprog.ceil_inclusive(),
    };
    let mut driven = trigger.progress().clone();
    for (t, _) in trigger.events() {
        if !vacuous.covers(t) && !vprog.covers_before(t) {
            driven = Progress::Exclusive(t.clone());
            break;
        }
    }
    let progress = vacuous.max(driven);
    let mut events = Vec::new();
    for (t, _) in trigger.events() {
        if !progress.covers(t) {
            break;
        }
        if let Some((_, v)) = values.events_before(t).last() {
            events.push((t.clone(), v.clone()));
        }
    }
    build(events, progress)
}

/// Timer semantics: a timeout set at `t'` fires at `t' + d` unless a reset
/// event lies strictly between; a new delay is adopted only at reset
/// events or when the output fires.
pub fn op_delay(delays: &EventStream, resets: &EventStream) -> Result<EventStream, NonPositiveDelay> {
    for (t, v) in delays.events() {
        timeout_for(t, v)?;
    }
    let mut events = Vec::new();
    let mut pending: Option<Time> = None;
    let mut reset_idx = 0usize;
    let mut decided = Progress::none();
    let progress = loop {
        let next_reset = resets.events().get(reset_idx).map(|(t, _)| t.clone());
        let at = match (&pending, &next_reset) {
            (None, None) => break resets.progress().clone().max(decided),
            (Some(p), None) => {
                if !resets.progress().covers_before(p) {
                    break resets.progress().clone().max(decided);
                }
                p.clone()
            }
            (None, Some(r)) => r.clone(),
            (Some(p), Some(r)) => p.min(r).clone(),
        };
        let fire = pending.as_ref() == Some(&at);
        if fire {
            events.push((at.clone(), Value::Unit));
        }
        if next_reset.as_ref() == Some(&at) {
            reset_idx += 1;
        }
        decided = Progress::Inclusive(at.clone());
        // Both branches are setable here: the output fired or a reset came.
        match delays.lookup(&at) {
            Lookup::Unknown => break Progress::Inclusive(at),
            Lookup::NoEvent => pending = None,
            Lookup::Event(d) => pending = Some(timeout_for(&at, d)?),
        }
    };
    Ok(build(events, progress))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::BinOp;

    fn t(n: u64) -> Time {
        Time::from_int(n)
    }

    fn nums(pairs: &[(u64, i64)]) -> EventStream {
        EventStream::new(pairs.iter().map(|&(a, b)| (t(a), Value::int(b))).collect(), Progress::Infinite).unwrap()
    }

    fn units(ts: &[u64], p: Progress) -> EventStream {
        EventStream::new(ts.iter().map(|&a| (t(a), Value::Unit)).collect(), p).unwrap()
    }

    #[test]
    fn merge_example() {
        let x = nums(&[(1, 6), (3, 4), (4, 2)]);
        let y = nums(&[(2, 5), (4, 7)]);
        assert_eq!(op_lift(&FunctionTerm::merge_aux(), &[&x, &y]), nums(&[(1, 6), (2, 5), (3, 4), (4, 2)]));
    }

    #[test]
    fn lift_of_nils_is_nil() {
        let n = EventStream::nil();
        assert_eq!(op_lift(&FunctionTerm::binary(BinOp::Add), &[&n, &n]), EventStream::nil());
        let c = op_lift(&FunctionTerm::const_aux(Value::Bool(true)), &[&EventStream::unit()]);
        assert_eq!(c.events(), &[(Time::zero(), Value::Bool(true))]);
    }

    #[test]
    fn time_keeps_progress() {
        let s = units(&[], Progress::Exclusive(t(4)));
        assert_eq!(op_time(&s), EventStream::new(vec![], Progress::Exclusive(t(4))).unwrap());
        let w = units(&[2, 5], Progress::Infinite);
        assert_eq!(op_time(&w), nums(&[(2, 2), (5, 5)]));
    }

    #[test]
    fn last_example() {
        let x = nums(&[(1, 1), (3, 5), (4, 3), (5, 1)]);
        let y = nums(&[(2, 2), (5, 4)]);
        assert_eq!(op_last(&x, &y), nums(&[(2, 1), (5, 3)]));
        assert_eq!(op_last(&y, &x), nums(&[(3, 2), (4, 2), (5, 2)]));
    }

    #[test]
    fn last_progress() {
        let x = nums(&[(1, 1), (3, 5)]).cut(&Progress::Inclusive(t(3)));
        let y = nums(&[(2, 2), (5, 4)]);
        // Trigger at 5 needs values known on [0, 5).
        assert_eq!(op_last(&x, &y).progress(), &Progress::Exclusive(t(5)));
        let unknown = EventStream::bottom();
        assert_eq!(op_last(&unknown, &y).progress(), &Progress::Exclusive(t(2)));
        assert_eq!(op_last(&EventStream::nil(), &unknown).progress(), &Progress::Infinite);
    }

    #[test]
    fn delay_example() {
        let w = units(&[2, 5, 7, 15, 18], Progress::Inclusive(t(20)));
        let five = op_lift(&FunctionTerm::const_aux(Value::int(5)), &[&w]);
        let d = op_delay(&five, &w).unwrap();
        assert_eq!(d, units(&[12], Progress::Inclusive(t(20))));
        let w_all = units(&[2, 5, 7, 15, 18], Progress::Infinite);
        let five = op_lift(&FunctionTerm::const_aux(Value::int(5)), &[&w_all]);
        assert_eq!(op_delay(&five, &w_all).unwrap(), units(&[12, 23], Progress::Infinite));
    }

    #[test]
    fn delay_of_nil() {
        let r = op_delay(&EventStream::nil(), &EventStream::nil()).unwrap();
        assert_eq!(r, EventStream::nil());
    }

    #[test]
    fn delay_rejects_non_positive() {
        let d = nums(&[(1, 0)]);
        assert!(op_delay(&d, &d).is_err());
    }

    #[test]
    fn reset_at_timeout_does_not_cancel() {
        let delays = nums(&[(0, 2)]);
        let resets = units(&[0, 2], Progress::Infinite);
        assert_eq!(op_delay(&delays, &resets).unwrap(), units(&[2], Progress::Infinite));
    }
}
