//! Message-passing simulation of a specification: one node per equation
//! of the flattened specification, connected by bounded FIFO queues that
//! carry events and progress tokens.
//!
//! Nodes fire in an order picked by a [`Schedule`]. Generated events
//! (`delay` timeouts and the `unit` event) need a grant from the
//! simulator, which hands them out in timestamp order so the event limit
//! cuts the run at the same place as the centralized engine does.

mod node;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::depgraph::{DependencyGraph, GraphError};
use crate::engine::{Limits, Streams};
use crate::ir::{CoreExpr, CoreSpec, SpecError, StreamType};
use crate::stream::{EventStream, Progress};
use crate::time::Time;
use crate::value::Value;
use node::{Fired, Kind, Msg, Node, Pointwise, Queue};

pub const DEFAULT_QUEUE_CAPACITY: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DataflowError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("specification is not well-formed: cycle {}", .0.join(" -> "))]
    NotWellFormed(Vec<String>),
    #[error("unknown input stream `{0}`")]
    UnknownInput(String),
    #[error("input `{stream}` carries a value of the wrong type at {time} (expected {expected})")]
    InputTypeMismatch { stream: String, time: Time, expected: StreamType },
    #[error("delay `{stream}` got non-positive value {value} at time {time}")]
    NonPositiveDelay { stream: String, time: Time, value: Value },
    #[error("more than {limit} generated timestamps; stopped at progress {progress}")]
    EventLimitExceeded { limit: usize, progress: Progress, partial: Box<Streams> },
    #[error("network deadlocked:\n{0}")]
    Deadlock(String),
}

impl From<GraphError> for DataflowError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::NotWellFormed(w) => DataflowError::NotWellFormed(w),
            GraphError::NotFlat(name) => DataflowError::NotWellFormed(vec![name]),
        }
    }
}

/// Order in which nodes get a chance to fire.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Schedule {
    /// Sweeps over the nodes sorted by name.
    RoundRobin,
    /// Sweeps in reverse name order.
    Reversed,
    /// A fresh seeded shuffle for every sweep.
    Random(u64),
}

/// A connection from the output of `from` to input `port` of `to`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Channel {
    pub from: String,
    pub to: String,
    pub port: usize,
    /// Set iff the port is the first argument of `last` or `delay`.
    pub delayed: bool,
}

/// The static network: node templates and wiring. Inputs come first as
/// source nodes, then one node per equation of the flattened spec.
#[derive(Clone, Debug)]
pub struct Network {
    spec: CoreSpec,
    capacity: usize,
    templates: Vec<(String, Kind, Vec<usize>)>,
    subscribers: Vec<Vec<(usize, usize)>>,
}

pub fn build_network(spec: &CoreSpec, capacity: usize) -> Result<Network, DataflowError> {
    spec.validate()?;
    let spec = spec.flatten();
    DependencyGraph::build(&spec)?.topo_indices()?;
    let index = |n: &str| -> usize {
        spec.inputs
            .get_index_of(n)
            .unwrap_or_else(|| spec.inputs.len() + spec.equations.get_index_of(n).expect("validated"))
    };
    let var = |e: &CoreExpr| -> usize {
        match e {
            CoreExpr::Var(n) => index(n),
            _ => unreachable!("flattened"),
        }
    };
    let mut templates: Vec<(String, Kind, Vec<usize>)> = spec
        .inputs
        .keys()
        .map(|n| (n.clone(), Kind::Source { events: Default::default(), progress: Progress::none() }, vec![]))
        .collect();
    for (name, e) in &spec.equations {
        let (kind, args) = match e {
            CoreExpr::Nil => (Kind::Nil, vec![]),
            CoreExpr::Unit => (Kind::Unit, vec![]),
            CoreExpr::Var(n) => (Kind::Pointwise(Pointwise::Copy), vec![index(n)]),
            CoreExpr::Time(x) => (Kind::Pointwise(Pointwise::Time), vec![var(x)]),
            CoreExpr::Lift(f, xs) => (Kind::Pointwise(Pointwise::Lift(f.clone())), xs.iter().map(var).collect()),
            CoreExpr::Last(v, t) => (Kind::Last { cell: None }, vec![var(v), var(t)]),
            CoreExpr::Delay(d, r) => (Kind::Delay { pending: None, decided: Progress::none() }, vec![var(d), var(r)]),
        };
        templates.push((name.clone(), kind, args));
    }
    let mut subscribers = vec![Vec::new(); templates.len()];
    for (to, (_, _, args)) in templates.iter().enumerate() {
        for (port, &from) in args.iter().enumerate() {
            subscribers[from].push((to, port));
        }
    }
    Ok(Network { spec, capacity, templates, subscribers })
}

impl Network {
    /// The flattened specification the network was built from.
    pub fn spec(&self) -> &CoreSpec {
        &self.spec
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Input sources followed by equation nodes.
    pub fn node_names(&self) -> impl Iterator<Item = &str> {
        self.templates.iter().map(|(n, _, _)| n.as_str())
    }

    pub fn channels(&self) -> Vec<Channel> {
        let mut out = Vec::new();
        for (name, kind, args) in &self.templates {
            for (port, &from) in args.iter().enumerate() {
                out.push(Channel {
                    from: self.templates[from].0.clone(),
                    to: name.clone(),
                    port,
                    delayed: port == 0 && matches!(kind, Kind::Last { .. } | Kind::Delay { .. }),
                });
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunStats {
    /// Node firings that changed state.
    pub firings: u64,
    pub messages: u64,
    /// Largest queue length observed.
    pub max_occupancy: usize,
}

/// Hands out generated timestamps in increasing order and enforces the
/// event limit.
struct Governor {
    limit: usize,
    input_times: BTreeSet<Time>,
    cap: Progress,
    granted: BTreeSet<Time>,
    generated: usize,
    requests: BTreeMap<usize, Time>,
    halted: bool,
}

impl Governor {
    /// Called when no node can fire. Returns whether anything changed.
    fn resolve(&mut self, nodes: &[Node]) -> bool {
        self.requests.retain(|_, t| !self.granted.contains(t));
        let Some(t) = self.requests.values().min().cloned() else { return false };
        if self.halted || !self.cap.covers(&t) {
            return false;
        }
        let before = Progress::Exclusive(t.clone());
        let settled = nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.generates())
            .all(|(j, n)| n.out_progress >= before || self.requests.get(&j).is_some_and(|u| *u >= t));
        if !settled {
            return false;
        }
        if !self.input_times.contains(&t) {
            if self.generated >= self.limit {
                self.cap = self.cap.clone().min(before);
                self.halted = true;
                return true;
            }
            self.generated += 1;
        }
        self.granted.insert(t);
        true
    }
}

/// One execution of a network on complete input prefixes.
pub struct Simulation<'n> {
    net: &'n Network,
    nodes: Vec<Node>,
    queues: Vec<Vec<Queue>>,
    inputs: Vec<EventStream>,
    governor: Governor,
    stats: RunStats,
}

impl<'n> Simulation<'n> {
    pub fn new(net: &'n Network, inputs: &Streams, limits: Limits) -> Result<Self, DataflowError> {
        if let Some(name) = inputs.keys().find(|n| !net.spec.inputs.contains_key(*n)) {
            return Err(DataflowError::UnknownInput(name.clone()));
        }
        let mut streams = Vec::new();
        for (name, ty) in &net.spec.inputs {
            let s = inputs.get(name).cloned().unwrap_or_else(EventStream::nil);
            if let Some((t, _)) = s.events().iter().find(|(_, v)| !ty.admits(v) || matches!(v, Value::Infinity)) {
                return Err(DataflowError::InputTypeMismatch { stream: name.clone(), time: t.clone(), expected: *ty });
            }
            streams.push(s);
        }
        let bound = streams.iter().map(|s| s.progress().clone()).min().unwrap_or(Progress::Infinite);
        let input_times = streams.iter().flat_map(|s| s.events().iter().map(|(t, _)| t.clone())).collect();
        let nodes = net
            .templates
            .iter()
            .enumerate()
            .map(|(i, (name, kind, args))| {
                let kind = match streams.get(i) {
                    Some(s) => {
                        Kind::Source { events: s.events().iter().cloned().collect(), progress: s.progress().clone() }
                    }
                    None => kind.clone(),
                };
                Node::new(name.clone(), kind, args.len())
            })
            .collect();
        let queues = net.templates.iter().map(|(_, _, args)| vec![Queue::new(); args.len()]).collect();
        let governor = Governor {
            limit: limits.max_events,
            input_times,
            cap: bound,
            granted: BTreeSet::new(),
            generated: 0,
            requests: BTreeMap::new(),
            halted: false,
        };
        Ok(Simulation { net, nodes, queues, inputs: streams, governor, stats: RunStats::default() })
    }

    pub fn stats(&self) -> RunStats {
        self.stats
    }

    /// Fires node `i` once. Returns whether anything changed.
    fn step(&mut self, i: usize) -> Result<bool, DataflowError> {
        let cap = self.net.capacity;
        let room = self.net.subscribers[i].iter().all(|&(j, p)| self.queues[j][p].len() < cap);
        let gov = &self.governor;
        let fired = self.nodes[i].fire(&mut self.queues[i], room, &|t| gov.granted.contains(t)).map_err(|e| {
            DataflowError::NonPositiveDelay { stream: self.nodes[i].name.clone(), time: e.time, value: e.value }
        })?;
        let changed = match fired {
            Fired::Idle => false,
            Fired::Internal => true,
            Fired::Request(t) => self.governor.requests.insert(i, t.clone()) != Some(t),
            Fired::Emit(m) => {
                for &(j, p) in &self.net.subscribers[i] {
                    self.queues[j][p].push_back(m.clone());
                    self.stats.max_occupancy = self.stats.max_occupancy.max(self.queues[j][p].len());
                    self.stats.messages += 1;
                }
                true
            }
        };
        if changed {
            self.stats.firings += 1;
        }
        Ok(changed)
    }

    /// Runs until no node can fire and no generated event can be granted.
    pub fn run(&mut self, schedule: Schedule) -> Result<Streams, DataflowError> {
        let mut order: Vec<usize> = (0..self.nodes.len()).collect();
        order.sort_by(|&a, &b| self.nodes[a].name.cmp(&self.nodes[b].name));
        if schedule == Schedule::Reversed {
            order.reverse();
        }
        let mut rng = match schedule {
            Schedule::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        loop {
            if let Some(rng) = &mut rng {
                order.shuffle(rng);
            }
            let mut changed = false;
            for &i in &order {
                changed |= self.step(i)?;
            }
            if !changed && !self.governor.resolve(&self.nodes) {
                break;
            }
        }
        self.collect()
    }

    fn collect(&self) -> Result<Streams, DataflowError> {
        let cap = &self.governor.cap;
        let k = self.inputs.len();
        if self.nodes[k..].iter().any(|n| n.out_progress < *cap) {
            return Err(DataflowError::Deadlock(self.report()));
        }
        let mut out = Streams::new();
        for (name, s) in self.net.spec.inputs.keys().zip(&self.inputs) {
            out.insert(name.clone(), s.cut(cap));
        }
        for n in &self.nodes[k..] {
            let s = EventStream::new(n.emitted.clone(), n.out_progress.clone()).expect("nodes emit in time order");
            out.insert(n.name.clone(), s.cut(cap));
        }
        if self.governor.halted {
            return Err(DataflowError::EventLimitExceeded {
                limit: self.governor.limit,
                progress: cap.clone(),
                partial: Box::new(out),
            });
        }
        Ok(out)
    }

    /// Per node: output progress, queue contents and pending grant request.
    pub fn report(&self) -> String {
        let mut s = String::new();
        for (i, n) in self.nodes.iter().enumerate() {
            let _ = write!(s, "{} (progress {})", n.name, n.out_progress);
            if let Some(t) = self.governor.requests.get(&i) {
                let _ = write!(s, " waiting for grant at {t}");
            }
            s.push('\n');
            for (p, q) in self.queues[i].iter().enumerate() {
                let msgs: Vec<String> = q
                    .iter()
                    .map(|m| match m {
                        Msg::Event(t, v) => format!("{t}={v}"),
                        Msg::Progress(p) => format!("progress {p}"),
                    })
                    .collect();
                let _ = writeln!(
                    s,
                    "  port {p} from {}: [{}]",
                    self.net.templates[self.net.templates[i].2[p]].0,
                    msgs.join(", ")
                );
            }
        }
        s
    }
}

/// Runs `net` on `inputs` to completion. The result
/// has the shape of [`crate::engine::evaluate`]: inputs cut to the common
/// progress, then every equation of the flattened specification.
pub fn run_network(
    net: &Network,
    inputs: &Streams,
    schedule: Schedule,
    limits: Limits,
) -> Result<Streams, DataflowError> {
    Simulation::new(net, inputs, limits)?.run(schedule)
}
