//! Centralized evaluation: a timestamp-ordered sweep over a flat
//! specification with one memory cell per `last` and a timeout per `delay`.

pub mod kleene;
pub mod ops;
pub mod session;

use std::collections::VecDeque;

use indexmap::IndexMap;

use crate::depgraph::{DependencyGraph, GraphError};
use crate::ir::{CoreExpr, CoreSpec, SpecError, StreamType};
use crate::stream::{EventStream, Progress};
use crate::term::FunctionTerm;
use crate::time::Time;
use crate::trace::Trace;
use crate::value::{ExtValue, Value};

pub type Streams = IndexMap<String, EventStream>;

pub const DEFAULT_MAX_EVENTS: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Maximum number of evaluated timestamps that carry no input event.
    pub max_events: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_events: DEFAULT_MAX_EVENTS }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("specification is not well-formed: cycle {}", .0.join(" -> "))]
    NotWellFormed(Vec<String>),
    #[error("delay `{stream}` got non-positive value {value} at time {time}")]
    NonPositiveDelay { stream: String, time: Time, value: Value },
    #[error("more than {limit} generated timestamps; stopped at progress {progress}")]
    EventLimitExceeded { limit: usize, progress: Progress, partial: Box<Streams> },
    #[error("chunk for `{stream}` rewrites the past at {time}")]
    NonMonotonicChunk { stream: String, time: Time },
    #[error("unknown input stream `{0}`")]
    UnknownInput(String),
    #[error("input `{stream}` carries a value of the wrong type at {time} (expected {expected})")]
    InputTypeMismatch { stream: String, time: Time, expected: StreamType },
}

impl From<GraphError> for EngineError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::NotWellFormed(w) => EngineError::NotWellFormed(w),
            GraphError::NotFlat(name) => EngineError::NotWellFormed(vec![name]),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Src {
    Input(usize),
    Eq(usize),
}

#[derive(Clone, Debug)]
enum Node {
    Nil,
    Unit,
    Copy(Src),
    Lift(FunctionTerm, Vec<Src>),
    Time(Src),
    Last { values: Src, trigger: Src },
    Delay { delays: Src, resets: Src },
}

#[derive(Clone, Debug)]
struct InputState {
    ty: StreamType,
    consumed: EventStream,
    queue: VecDeque<(Time, Value)>,
}

/// Incremental evaluator. Feed input chunks with [`Monitor::advance`].
#[derive(Clone, Debug)]
pub struct Monitor {
    spec: CoreSpec,
    input_names: Vec<String>,
    eq_names: Vec<String>,
    nodes: Vec<Node>,
    order: Vec<usize>,
    inputs: Vec<InputState>,
    last_value: Vec<ExtValue>,
    pending: Vec<Option<Time>>,
    streams: Vec<EventStream>,
    progress: Progress,
    zero_pending: bool,
    generated: usize,
    limits: Limits,
    steps: u64,
    operations: u64,
    halted: Option<Progress>,
}

impl Monitor {
    pub fn new(spec: &CoreSpec, limits: Limits) -> Result<Self, EngineError> {
        spec.validate()?;
        let spec = spec.flatten();
        let graph = DependencyGraph::build(&spec)?;
        let order = graph.topo_indices()?;
        let input_names: Vec<String> = spec.inputs.keys().cloned().collect();
        let eq_names: Vec<String> = spec.equations.keys().cloned().collect();
        let src = |name: &str| -> Src {
            match spec.inputs.get_index_of(name) {
                Some(i) => Src::Input(i),
                None => Src::Eq(spec.equations.get_index_of(name).expect("validated")),
            }
        };
        let arg = |e: &CoreExpr| -> Src {
            match e {
                CoreExpr::Var(n) => src(n),
                _ => unreachable!("flattened"),
            }
        };
        let nodes: Vec<Node> = spec
            .equations
            .values()
            .map(|e| match e {
                CoreExpr::Nil => Node::Nil,
                CoreExpr::Unit => Node::Unit,
                CoreExpr::Var(n) => Node::Copy(src(n)),
                CoreExpr::Lift(f, args) => Node::Lift(f.clone(), args.iter().map(arg).collect()),
                CoreExpr::Time(x) => Node::Time(arg(x)),
                CoreExpr::Last(v, t) => Node::Last { values: arg(v), trigger: arg(t) },
                CoreExpr::Delay(d, r) => Node::Delay { delays: arg(d), resets: arg(r) },
            })
            .collect();
        let zero_pending = nodes.iter().any(|n| matches!(n, Node::Unit));
        let inputs = spec
            .inputs
            .values()
            .map(|ty| InputState { ty: *ty, consumed: EventStream::bottom(), queue: VecDeque::new() })
            .collect();
        let n = nodes.len();
        Ok(Monitor {
            input_names,
            eq_names,
            order,
            inputs,
            last_value: vec![None; n],
            pending: vec![None; n],
            streams: vec![EventStream::bottom(); n],
            progress: Progress::none(),
            zero_pending,
            generated: 0,
            limits,
            steps: 0,
            operations: 0,
            halted: None,
            nodes,
            spec,
        })
    }

    /// The flattened specification being evaluated.
    pub fn spec(&self) -> &CoreSpec {
        &self.spec
    }

    /// Common progress of all derived streams.
    pub fn progress(&self) -> &Progress {
        &self.progress
    }

    /// Number of timestamps evaluated so far.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Number of single-equation evaluations so far.
    pub fn operations(&self) -> u64 {
        self.operations
    }

    /// Bound on output progress imposed by the inputs.
    fn input_bound(&self) -> Progress {
        self.inputs.iter().map(|i| i.consumed.progress().clone()).min().unwrap_or(Progress::Infinite)
    }

    /// All streams computed so far: inputs (cut to the common progress)
    /// followed by every equation.
    pub fn streams(&self) -> Streams {
        let mut out = IndexMap::new();
        for (name, input) in self.input_names.iter().zip(&self.inputs) {
            out.insert(name.clone(), input.consumed.cut(&self.progress));
        }
        for (name, s) in self.eq_names.iter().zip(&self.streams) {
            out.insert(name.clone(), s.clone());
        }
        out
    }

    /// The declared outputs, in declaration order.
    pub fn outputs(&self) -> Streams {
        let all = self.streams();
        kleene::select(&all, &self.spec.outputs)
    }

    /// Feeds new input events. Each chunk holds only events beyond what was
    /// previously fed for that stream, and its progress is the stream's new
    /// progress. Returns the newly produced events of every equation,
    /// with the new common progress.
    pub fn advance(&mut self, chunks: &Streams) -> Result<Streams, EngineError> {
        if let Some(p) = &self.halted {
            return Err(self.limit_error(p.clone()));
        }
        for (name, chunk) in chunks {
            let idx = self
                .input_names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| EngineError::UnknownInput(name.clone()))?;
            let input = &mut self.inputs[idx];
            for (t, v) in chunk.events() {
                if !input.ty.admits(v) || matches!(v, Value::Infinity) {
                    return Err(EngineError::InputTypeMismatch {
                        stream: name.clone(),
                        time: t.clone(),
                        expected: input.ty,
                    });
                }
            }
            input.consumed.extend(chunk.clone()).map_err(|e| EngineError::NonMonotonicChunk {
                stream: name.clone(),
                time: match e {
                    crate::stream::StreamError::NonMonotonicTimestamps(t) => t,
                    crate::stream::StreamError::EventBeyondProgress { time, .. } => time,
                },
            })?;
            input.queue.extend(chunk.events().iter().cloned());
        }
        let before: Vec<usize> = self.streams.iter().map(EventStream::len).collect();
        let result = self.sweep();
        let delta = self
            .eq_names
            .iter()
            .zip(&self.streams)
            .zip(before)
            .map(|((name, s), from)| {
                let d = EventStream::new(s.events()[from..].to_vec(), s.progress().clone())
                    .expect("suffix of valid stream");
                (name.clone(), d)
            })
            .collect();
        result.map(|_| delta)
    }

    fn limit_error(&self, progress: Progress) -> EngineError {
        EngineError::EventLimitExceeded { limit: self.limits.max_events, progress, partial: Box::new(self.streams()) }
    }

    fn next_candidate(&self) -> Option<Time> {
        let queued = self.inputs.iter().filter_map(|i| i.queue.front().map(|(t, _)| t));
        let best = queued.chain(self.pending.iter().flatten()).min().cloned();
        if self.zero_pending {
            return Some(Time::zero());
        }
        best
    }

    fn sweep(&mut self) -> Result<(), EngineError> {
        let bound = self.input_bound();
        while let Some(t) = self.next_candidate() {
            if !bound.covers(&t) {
                break;
            }
            let has_input = self.inputs.iter().any(|i| i.queue.front().is_some_and(|(u, _)| *u == t));
            if !has_input {
                if self.generated >= self.limits.max_events {
                    let p = Progress::Exclusive(t);
                    self.set_progress(p.clone());
                    self.halted = Some(p.clone());
                    return Err(self.limit_error(p));
                }
                self.generated += 1;
            }
            self.step(&t)?;
        }
        self.set_progress(bound);
        Ok(())
    }

    fn set_progress(&mut self, p: Progress) {
        for s in &mut self.streams {
            s.set_progress_unchecked(p.clone());
        }
        self.progress = p;
    }

    fn step(&mut self, t: &Time) -> Result<(), EngineError> {
        self.steps += 1;
        self.zero_pending = false;
        let input_now: Vec<ExtValue> = self
            .inputs
            .iter_mut()
            .map(|i| match i.queue.front() {
                Some((u, _)) if u == t => i.queue.pop_front().map(|(_, v)| v),
                _ => None,
            })
            .collect();
        let mut now: Vec<ExtValue> = vec![None; self.nodes.len()];
        for &i in &self.order {
            self.operations += 1;
            let get = |s: Src, now: &Vec<ExtValue>| -> ExtValue {
                match s {
                    Src::Input(k) => input_now[k].clone(),
                    Src::Eq(k) => now[k].clone(),
                }
            };
            let v = match &self.nodes[i] {
                Node::Nil => None,
                Node::Unit => t.is_zero().then_some(Value::Unit),
                Node::Copy(s) => get(*s, &now),
                Node::Lift(f, args) => {
                    let vals: Vec<ExtValue> = args.iter().map(|a| get(*a, &now)).collect();
                    if vals.iter().any(Option::is_some) {
                        f.eval(&vals)
                    } else {
                        None
                    }
                }
                Node::Time(s) => get(*s, &now).map(|_| Value::from_time(t)),
                Node::Last { trigger, .. } => get(*trigger, &now).and(self.last_value[i].clone()),
                Node::Delay { .. } => (self.pending[i].as_ref() == Some(t)).then_some(Value::Unit),
            };
            now[i] = v;
        }
        for i in 0..self.nodes.len() {
            let get = |s: Src| -> ExtValue {
                match s {
                    Src::Input(k) => input_now[k].clone(),
                    Src::Eq(k) => now[k].clone(),
                }
            };
            match &self.nodes[i] {
                Node::Last { values, .. } => {
                    if let Some(v) = get(*values) {
                        self.last_value[i] = Some(v);
                    }
                }
                Node::Delay { delays, resets } => {
                    let delay = get(*delays);
                    let timeout = match &delay {
                        Some(d) => Some(ops::timeout_for(t, d).map_err(|e| EngineError::NonPositiveDelay {
                            stream: self.eq_names[i].clone(),
                            time: e.time,
                            value: e.value,
                        })?),
                        None => None,
                    };
                    if now[i].is_some() || get(*resets).is_some() {
                        self.pending[i] = timeout;
                    }
                }
                _ => {}
            }
            if let Some(v) = &now[i] {
                self.streams[i].push_unchecked(t.clone(), v.clone());
            }
        }
        Ok(())
    }
}

/// Evaluates `spec` on complete input prefixes. Returns every input and
/// equation stream of the flattened specification.
pub fn evaluate(spec: &CoreSpec, inputs: &Streams, limits: Limits) -> Result<Streams, EngineError> {
    let mut m = Monitor::new(spec, limits)?;
    let mut chunks: Streams = IndexMap::new();
    for name in spec.inputs.keys() {
        let s = inputs.get(name).cloned().unwrap_or_else(EventStream::nil);
        chunks.insert(name.clone(), s);
    }
    for name in inputs.keys() {
        if !spec.inputs.contains_key(name) {
            return Err(EngineError::UnknownInput(name.clone()));
        }
    }
    m.advance(&chunks)?;
    Ok(m.streams())
}

/// Evaluates `spec` on a parsed trace. Inputs absent from the trace are
/// empty up to the trace's progress.
pub fn evaluate_trace(spec: &CoreSpec, trace: &Trace, limits: Limits) -> Result<Streams, EngineError> {
    let inputs: Streams = spec.inputs.keys().map(|n| (n.clone(), trace.stream(n))).collect();
    if let Some(name) = trace.streams.keys().find(|n| !spec.inputs.contains_key(*n)) {
        return Err(EngineError::UnknownInput(name.clone()));
    }
    evaluate(spec, &inputs, limits)
}
