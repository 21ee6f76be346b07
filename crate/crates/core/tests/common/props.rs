//! Engine properties over random specifications and inputs. Every check
//! draws one instance and returns a description of any violation.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tessla::engine::kleene::{is_fixed_point, least_fixed_point};
use tessla::engine::{evaluate, EngineError, Limits, Monitor, Streams};
use tessla::stream::{EventStream, Progress};
use tessla::{CoreExpr, CoreSpec, Time};

use super::random;

/// Streams of a run and whether the event limit stopped it.
#[derive(Debug, PartialEq)]
pub struct Run {
    pub streams: Streams,
    pub halted: bool,
}

impl Run {
    /// How far every stream is known.
    pub fn progress(&self) -> Progress {
        self.streams.values().map(|s| s.progress().clone()).min().unwrap_or(Progress::Infinite)
    }
}

pub fn outcome(r: Result<Streams, EngineError>) -> Result<Run, String> {
    match r {
        Ok(streams) => Ok(Run { streams, halted: false }),
        Err(EngineError::EventLimitExceeded { partial, .. }) => Ok(Run { streams: *partial, halted: true }),
        Err(e) => Err(e.to_string()),
    }
}

fn describe(spec: &CoreSpec, inputs: &Streams) -> String {
    format!("spec:\n{spec}\ninputs: {inputs:?}")
}

/// A random point in the time range of the generated inputs.
fn random_progress(rng: &mut ChaCha8Rng) -> Progress {
    let t = Time::from_ratio(rng.gen_range(0..36), 2);
    match rng.gen_range(0..8) {
        0 => Progress::Infinite,
        1..=3 => Progress::Exclusive(t),
        _ => Progress::Inclusive(t),
    }
}

/// Events of `s` beyond `from` and up to `to`, with progress `to`.
fn slice(s: &EventStream, from: &Progress, to: &Progress) -> EventStream {
    let events = s.events().iter().filter(|(t, _)| !from.covers(t) && to.covers(t)).cloned().collect();
    EventStream::new(events, to.clone().min(s.progress().clone())).expect("slice of a stream")
}

/// Feeding the inputs in arbitrary chunks gives the one-shot result.
pub fn chunking(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let spec = random::spec(rng);
    let inputs = random::inputs(rng);
    let limits = Limits { max_events: rng.gen_range(0..24) };
    let whole = outcome(evaluate(&spec, &inputs, limits));
    let mut cuts: Vec<Progress> = (0..rng.gen_range(0..5)).map(|_| random_progress(rng)).collect();
    cuts.push(Progress::Infinite);
    cuts.sort();
    cuts.dedup();
    let mut monitor = Monitor::new(&spec, limits).map_err(|e| e.to_string())?;
    let mut from = Progress::none();
    let mut failure = None;
    for to in &cuts {
        let chunks: Streams = inputs.iter().map(|(n, s)| (n.clone(), slice(s, &from, to))).collect();
        if let Err(e) = monitor.advance(&chunks) {
            failure = Some(e);
            break;
        }
        from = to.clone();
    }
    let chunked = outcome(match failure {
        Some(e) => Err(e),
        None => Ok(monitor.streams()),
    });
    if chunked != whole {
        return Err(format!("chunks {cuts:?}: {chunked:?} != {whole:?}\n{}", describe(&spec, &inputs)));
    }
    Ok(())
}

/// Evaluating a prefix of the inputs gives the same prefix of the result.
pub fn cut_commutes(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let spec = random::spec(rng);
    let inputs = random::inputs(rng);
    let limits = Limits { max_events: rng.gen_range(0..24) };
    let c = random_progress(rng);
    let full = outcome(evaluate(&spec, &inputs, limits))?;
    let cut: Streams = inputs.iter().map(|(n, s)| (n.clone(), s.cut(&c))).collect();
    let part = outcome(evaluate(&spec, &cut, limits))?;
    let q = part.progress();
    let expected = c.clone().min(full.progress());
    if q != expected {
        return Err(format!("cut at {c:?}: progress {q:?}, expected {expected:?}\n{}", describe(&spec, &inputs)));
    }
    for (name, s) in &full.streams {
        if s.cut(&q) != part.streams[name].cut(&q) {
            return Err(format!("cut at {c:?}: stream {name} differs\n{}", describe(&spec, &inputs)));
        }
    }
    Ok(())
}

fn mentions_unit(e: &CoreExpr) -> bool {
    matches!(e, CoreExpr::Unit) || e.children().into_iter().any(mentions_unit)
}

/// Without `delay`, events only occur where an input has one, or at 0
/// through `unit`.
pub fn timestamp_conservatism(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let spec = loop {
        let s = random::spec(rng);
        if !s.equations.values().any(CoreExpr::contains_delay) {
            break s;
        }
    };
    let inputs = random::inputs(rng);
    let run = outcome(evaluate(&spec, &inputs, Limits::default()))?;
    if run.halted {
        return Err(format!("delay-free run hit the event limit\n{}", describe(&spec, &inputs)));
    }
    let zero_allowed = spec.equations.values().any(mentions_unit);
    let input_times: Vec<&Time> = inputs.values().flat_map(|s| s.events().iter().map(|(t, _)| t)).collect();
    for (name, s) in &run.streams {
        for (t, _) in s.events() {
            if !input_times.contains(&t) && !(zero_allowed && *t == Time::zero()) {
                return Err(format!("{name} has an event at {t}\n{}", describe(&spec, &inputs)));
            }
        }
    }
    Ok(())
}

/// Extending the inputs extends the result. Runs stopped by the limit are
/// redrawn.
pub fn monotonicity(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let limits = Limits { max_events: 200 };
    loop {
        let spec = random::spec(rng);
        let larger = random::inputs(rng);
        let smaller: Streams = larger.iter().map(|(n, s)| (n.clone(), s.cut(&random_progress(rng)))).collect();
        let big = outcome(evaluate(&spec, &larger, limits))?;
        let small = outcome(evaluate(&spec, &smaller, limits))?;
        if big.halted || small.halted {
            continue;
        }
        for (name, s) in &small.streams {
            if !s.is_prefix_of(&big.streams[name]) {
                return Err(format!("{name} is not a prefix\n{}\nsmaller: {smaller:?}", describe(&spec, &larger)));
            }
        }
        return Ok(());
    }
}

/// The result is stable under one more application of the equations and
/// equals the least fixed point computed by plain iteration.
pub fn fixed_point(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let spec = random::spec(rng);
    let inputs = random::inputs(rng);
    let limits = Limits { max_events: rng.gen_range(0..24) };
    let run = outcome(evaluate(&spec, &inputs, limits))?;
    let q = run.progress();
    let flat = spec.flatten();
    if !is_fixed_point(&flat, &inputs, &run.streams, &q).map_err(|e| format!("{e:?}"))? {
        return Err(format!("not a fixed point up to {q:?}\n{}", describe(&spec, &inputs)));
    }
    let lfp = least_fixed_point(&flat, &inputs, &q).map_err(|e| format!("{e:?}"))?;
    for (name, s) in &lfp {
        if run.streams[name].cut(&q) != *s {
            return Err(format!("{name} differs from the least fixed point\n{}", describe(&spec, &inputs)));
        }
    }
    Ok(())
}
