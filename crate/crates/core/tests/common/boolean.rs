//! Boolean specifications, their transducers and brute-force references.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tessla::engine::kleene::least_fixed_point;
use tessla::engine::Streams;
use tessla::fragments::*;
use tessla::frontend::compile;
use tessla::ir::{CoreSpec, StreamType};
use tessla::{EventStream, Progress, Time, Value};

pub const BOOL_CORPUS: &[(&str, &str)] = &[
    ("and", "in a: Events[Bool]\nin b: Events[Bool]\ndef z := a && b\nout z"),
    ("lift_and", "in a: Events[Bool]\nin b: Events[Bool]\ndef z := lift(&&)(a, b)\nout z"),
    ("last", "in a: Events[Bool]\nin b: Events[Bool]\ndef z := last(a, b)\nout z"),
    ("ge", "in a: Events[Bool]\nin b: Events[Bool]\ndef z := time(a) >= time(b)\nout z"),
    ("not", "in a: Events[Bool]\ndef z := !a\nout z"),
    ("toggle", "in a: Events[Unit]\ndef t := merge(!last(t, a), false)\nout t"),
    ("merge", "in a: Events[Bool]\nin b: Events[Bool]\ndef z := merge(a, b)\nout z"),
    ("filter", "in a: Events[Bool]\nin b: Events[Bool]\ndef z := filter(a, b)\nout z"),
    ("unit", "in a: Events[Bool]\ndef z := const(true, unit)\ndef n := nil\nout z\nout n"),
    ("ever", "in a: Events[Bool]\ndef h := merge(lift(||)(a, last(h, a)), false)\nout h"),
    ("last_unit", "in a: Events[Bool]\nin u: Events[Unit]\ndef z := last(a, u)\nout z"),
    ("mixed", "in a: Events[Bool]\nin u: Events[Unit]\ndef z := lift(&&)(time(u) >= time(a), a)\nout z"),
    ("mutual", "in a: Events[Unit]\ndef p := merge(last(q, a), true)\ndef q := !p\nout p\nout q"),
    ("edge", "in a: Events[Bool]\ndef z := lift(&&)(a, !last(a, a))\nout z"),
];

pub fn spec(src: &str) -> CoreSpec {
    compile(src).unwrap_or_else(|e| panic!("{e}\n{src}"))
}

pub fn random_stream(rng: &mut ChaCha8Rng, unit: bool) -> EventStream {
    let n = rng.gen_range(0..=8);
    let mut ts: Vec<u64> = (0..n).map(|_| rng.gen_range(0..12)).collect();
    ts.sort();
    ts.dedup();
    let events: Vec<(Time, Value)> =
        ts.iter().map(|&t| (Time::from_int(t), if unit { Value::Unit } else { Value::Bool(rng.gen()) })).collect();
    let floor = ts.last().map_or(0, |&t| t);
    let progress = match rng.gen_range(0..3) {
        0 => Progress::Infinite,
        1 => Progress::Inclusive(Time::from_int(floor + rng.gen_range(0..4))),
        _ => Progress::Exclusive(Time::from_int(floor + 1 + rng.gen_range(0..4) - u64::from(ts.is_empty()))),
    };
    EventStream::new(events, progress).unwrap()
}

pub fn random_inputs(rng: &mut ChaCha8Rng, spec: &CoreSpec) -> Streams {
    spec.inputs.iter().map(|(n, t)| (n.clone(), random_stream(rng, *t == StreamType::Unit))).collect()
}

/// β of the least fixed point, at the input positions.
pub fn reference(spec: &CoreSpec, observed: &[String], inputs: &Streams) -> Vec<Letter> {
    let all = least_fixed_point(spec, inputs, &Progress::Infinite).unwrap();
    let times = beta_times(inputs.values());
    let outs: Vec<(&str, &EventStream)> = observed.iter().map(|n| (n.as_str(), &all[n.as_str()])).collect();
    encode_beta_at(outs, &times).unwrap().letters
}

pub fn transduce(d: &Dfst, inputs: &Streams) -> Vec<Letter> {
    let w = encode_beta(inputs.iter().map(|(n, s)| (n.as_str(), s))).unwrap();
    assert_eq!(w.names, d.inputs());
    run_dfst(d, &w.letters).unwrap()
}

/// Words enumerated over letters with distinct immediate effect; returns
/// the length of the shortest word on which both accept and differ.
pub fn brute_force(r1: &Dfst, r2: &Dfst, max_len: usize) -> Option<usize> {
    fn go(r1: &Dfst, r2: &Dfst, s1: usize, s2: usize, depth: usize, max_len: usize, best: &mut Option<usize>) {
        if depth == max_len || best.is_some_and(|b| b <= depth + 1) {
            return;
        }
        let mut moves: BTreeMap<(usize, usize), bool> = BTreeMap::new();
        for (g, t1, h1) in r1.transitions(s1) {
            if let Some((t2, h2)) = r2.step(s2, g) {
                let differ = moves.entry((t1, t2)).or_insert(false);
                *differ |= h1 != h2;
            }
        }
        if moves.values().any(|&d| d) {
            *best = Some(depth + 1);
            return;
        }
        for &(t1, t2) in moves.keys() {
            go(r1, r2, t1, t2, depth + 1, max_len, best);
        }
    }
    let mut best = None;
    go(r1, r2, r1.initial(), r2.initial(), 0, max_len, &mut best);
    best
}

pub fn corpus_dfsts() -> Vec<(&'static str, Dfst)> {
    BOOL_CORPUS.iter().map(|(n, src)| (*n, to_dfst(&spec(src)).unwrap())).collect()
}
