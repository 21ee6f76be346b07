#![allow(dead_code)]

use std::path::PathBuf;

use tessla::engine::{evaluate_trace, EngineError, Limits, Streams};
use tessla::frontend::compile;
use tessla::trace::{parse_trace, serialize_trace};
use tessla::CoreSpec;

pub const GOLDEN: &[&str] =
    &["temperature", "ringbuffer", "diff", "timeout", "period", "merge", "slift", "filter", "last", "count"];

pub struct Golden {
    pub name: &'static str,
    pub source: String,
    pub input: String,
    pub expected: String,
    pub limits: Limits,
}

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub fn load(name: &'static str) -> Golden {
    let read = |ext: &str| std::fs::read_to_string(golden_dir().join(format!("{name}.{ext}"))).unwrap();
    let source = read("tessla");
    let limits = source
        .lines()
        .find_map(|l| l.strip_prefix("-- max-events:"))
        .map(|n| Limits { max_events: n.trim().parse().unwrap() })
        .unwrap_or_default();
    Golden { name, input: read("input"), expected: read("expected"), source, limits }
}

pub fn spec_of(g: &Golden) -> CoreSpec {
    compile(&g.source).unwrap_or_else(|e| panic!("{}: {e}", g.name))
}

/// Output streams of the spec on the golden input. Hitting the event limit
/// yields the partial result.
pub fn run(g: &Golden) -> Streams {
    let spec = spec_of(g);
    let trace = parse_trace(&g.input).unwrap();
    let all = match evaluate_trace(&spec, &trace, g.limits) {
        Ok(s) => s,
        Err(EngineError::EventLimitExceeded { partial, .. }) => *partial,
        Err(e) => panic!("{}: {e}", g.name),
    };
    spec.outputs.iter().map(|n| (n.clone(), all[n].clone())).collect()
}

pub fn render(streams: &Streams) -> String {
    serialize_trace(streams.iter().map(|(n, s)| (n.as_str(), s)))
}

pub mod boolean;
pub mod props;

pub mod random {
    //! Random well-formed specifications over integer inputs `x` and `y`.
    //! Undelayed references point only to inputs and earlier equations, so
    //! every cycle runs through the first argument of a `last` or `delay`.

    use rand::Rng;
    use rand_chacha::ChaCha8Rng;
    use tessla::engine::Streams;
    use tessla::ir::StreamType;
    use tessla::stream::{EventStream, Progress};
    use tessla::{BinOp, CoreExpr, CoreSpec, FunctionTerm, Time, Value};

    pub const INPUTS: [&str; 2] = ["x", "y"];

    fn earlier(rng: &mut ChaCha8Rng, i: usize) -> CoreExpr {
        let k = rng.gen_range(0..INPUTS.len() + i);
        if k < INPUTS.len() {
            CoreExpr::var(INPUTS[k])
        } else {
            CoreExpr::var(format!("e{}", k - INPUTS.len()))
        }
    }

    fn any(rng: &mut ChaCha8Rng, n: usize) -> CoreExpr {
        let k = rng.gen_range(0..INPUTS.len() + n);
        if k < INPUTS.len() {
            CoreExpr::var(INPUTS[k])
        } else {
            CoreExpr::var(format!("e{}", k - INPUTS.len()))
        }
    }

    fn lift2(op: BinOp, a: CoreExpr, b: CoreExpr) -> CoreExpr {
        CoreExpr::lift(FunctionTerm::binary(op), vec![a, b])
    }

    fn body(rng: &mut ChaCha8Rng, i: usize, n: usize) -> CoreExpr {
        macro_rules! e {
            () => {
                earlier(rng, i)
            };
        }
        match rng.gen_range(0..11) {
            0 => lift2(BinOp::Add, e!(), e!()),
            1 => CoreExpr::merge(e!(), e!()),
            2 => CoreExpr::slift_op(BinOp::Sub, e!(), e!()),
            3 | 4 => {
                let trigger = e!();
                CoreExpr::merge(CoreExpr::last(any(rng, n), trigger), CoreExpr::constant(Value::int(0), CoreExpr::Unit))
            }
            5 => CoreExpr::time(e!()),
            6 => {
                let x = e!();
                let c = rng.gen_range(-2..4);
                CoreExpr::filter(lift2(BinOp::Gt, x.clone(), CoreExpr::constant(Value::int(c), x.clone())), x)
            }
            7 => {
                let k = rng.gen_range(1..6);
                let resets = if rng.gen_bool(0.3) { CoreExpr::Unit } else { earlier(rng, i) };
                let delays = CoreExpr::constant(Value::int(k), any(rng, n));
                CoreExpr::time(CoreExpr::delay(delays, resets))
            }
            8 => CoreExpr::constant(Value::int(rng.gen_range(0..5)), e!()),
            9 => lift2(BinOp::Mul, e!(), CoreExpr::constant(Value::int(2), e!())),
            _ => CoreExpr::merge(e!(), CoreExpr::Nil),
        }
    }

    pub fn spec(rng: &mut ChaCha8Rng) -> CoreSpec {
        let n = rng.gen_range(1..7);
        let mut s = CoreSpec::new();
        for x in INPUTS {
            s.add_input(x, StreamType::Num).unwrap();
        }
        for i in 0..n {
            let name = format!("e{i}");
            s.add_equation(name.clone(), body(rng, i, n)).unwrap();
            s.add_output(name);
        }
        s
    }

    /// Integer events at distinct times in `[0, 16)` with steps of one
    /// half, and a random progress at or beyond the last event.
    pub fn stream(rng: &mut ChaCha8Rng) -> EventStream {
        let mut times: Vec<u64> = (0..rng.gen_range(0..8)).map(|_| rng.gen_range(0..32)).collect();
        times.sort_unstable();
        times.dedup();
        let events: Vec<(Time, Value)> =
            times.iter().map(|&t| (Time::from_ratio(t, 2), Value::int(rng.gen_range(-3..7)))).collect();
        let last = times.last().copied().unwrap_or(0);
        let end = Time::from_ratio(last + rng.gen_range(0..6), 2);
        let progress = match rng.gen_range(0..4) {
            0 => Progress::Infinite,
            1 if end > Time::from_ratio(last, 2) || times.is_empty() => Progress::Exclusive(end),
            _ => Progress::Inclusive(end),
        };
        EventStream::new(events, progress).unwrap()
    }

    pub fn inputs(rng: &mut ChaCha8Rng) -> Streams {
        INPUTS.iter().map(|x| (x.to_string(), stream(rng))).collect()
    }
}
