//! Computation nodes. A node sees its input ports only through the head
//! of each queue plus the last progress token it popped per port, and
//! keeps at most one data value of its own (the `last` cell or the
//! pending `delay` deadline).

use std::collections::VecDeque;

use crate::engine::ops::timeout_for;
use crate::stream::Progress;
use crate::term::FunctionTerm;
use crate::time::Time;
use crate::value::{ExtValue, Value};

/// Wire message. An event at `t` also tells that the stream is known up
/// to and including `t`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Msg {
    Event(Time, Value),
    Progress(Progress),
}

pub type Queue = VecDeque<Msg>;

#[derive(Clone, Debug)]
pub enum Kind {
    Source {
        events: VecDeque<(Time, Value)>,
        progress: Progress,
    },
    Nil,
    Unit,
    /// Pointwise operators: copy, time and lift.
    Pointwise(Pointwise),
    Last {
        cell: ExtValue,
    },
    Delay {
        pending: Option<Time>,
        decided: Progress,
    },
}

#[derive(Clone, Debug)]
pub enum Pointwise {
    Copy,
    Time,
    Lift(FunctionTerm),
}

impl Pointwise {
    fn apply(&self, t: &Time, args: &[ExtValue]) -> ExtValue {
        match self {
            Pointwise::Copy => args[0].clone(),
            Pointwise::Time => args[0].as_ref().map(|_| Value::from_time(t)),
            Pointwise::Lift(f) => f.eval(args),
        }
    }
}

/// What a firing attempt did.
#[derive(Debug, PartialEq, Eq)]
pub enum Fired {
    Idle,
    /// Consumed input or changed state without producing output.
    Internal,
    Emit(Msg),
    /// Needs permission to produce a generated event at this time.
    Request(Time),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeError {
    pub time: Time,
    pub value: Value,
}

#[derive(Clone, Debug)]
pub struct Node {
    pub name: String,
    pub kind: Kind,
    /// Progress known per input port from popped tokens.
    pub port_progress: Vec<Progress>,
    pub out_progress: Progress,
    /// Everything this node has emitted (the sink view).
    pub emitted: Vec<(Time, Value)>,
    done: bool,
}

fn head_time(q: &Queue) -> Option<&Time> {
    match q.front() {
        Some(Msg::Event(t, _)) => Some(t),
        _ => None,
    }
}

/// Pops the head event of a port; the port is then known through its time.
fn take(q: &mut Queue, known: &mut Progress) -> (Time, Value) {
    match q.pop_front() {
        Some(Msg::Event(t, v)) => {
            *known = Progress::Inclusive(t.clone());
            (t, v)
        }
        _ => unreachable!("head is an event"),
    }
}

impl Node {
    pub fn new(name: String, kind: Kind, ports: usize) -> Node {
        Node {
            name,
            kind,
            port_progress: vec![Progress::none(); ports],
            out_progress: Progress::none(),
            emitted: Vec::new(),
            done: false,
        }
    }

    /// Generated events (delay fires and the unit event) need a grant.
    pub fn generates(&self) -> bool {
        matches!(self.kind, Kind::Delay { .. } | Kind::Unit)
    }

    /// How far port `i` is known: up to its head event, or its progress.
    fn frontier(&self, ports: &[Queue], i: usize) -> Progress {
        match head_time(&ports[i]) {
            Some(t) => Progress::Inclusive(t.clone()),
            None => self.port_progress[i].clone(),
        }
    }

    fn pop_tokens(&mut self, ports: &mut [Queue]) -> bool {
        let mut any = false;
        for (q, p) in ports.iter_mut().zip(&mut self.port_progress) {
            while let Some(Msg::Progress(_)) = q.front() {
                if let Some(Msg::Progress(np)) = q.pop_front() {
                    if np > *p {
                        *p = np;
                    }
                }
                any = true;
            }
            if let Some(Msg::Event(t, _)) = q.front() {
                let at = Progress::Exclusive(t.clone());
                if at > *p {
                    *p = at;
                }
            }
        }
        any
    }

    fn emit(&mut self, m: Msg) -> Fired {
        match &m {
            Msg::Event(t, v) => {
                self.out_progress = Progress::Inclusive(t.clone());
                self.emitted.push((t.clone(), v.clone()));
            }
            Msg::Progress(p) => self.out_progress = p.clone(),
        }
        Fired::Emit(m)
    }

    fn progress_to(&mut self, p: Progress, room: bool) -> Option<Fired> {
        (p > self.out_progress && room).then(|| self.emit(Msg::Progress(p)))
    }

    /// One firing. `room` tells whether every subscriber queue can take a
    /// message; `granted` whether generated events at a time may be emitted.
    pub fn fire(
        &mut self,
        ports: &mut [Queue],
        room: bool,
        granted: &dyn Fn(&Time) -> bool,
    ) -> Result<Fired, NodeError> {
        if self.done {
            return Ok(Fired::Idle);
        }
        let popped = self.pop_tokens(ports);
        let internal = if popped { Fired::Internal } else { Fired::Idle };
        let fired = match &mut self.kind {
            Kind::Source { events, progress } => {
                if !room {
                    return Ok(internal);
                }
                match events.pop_front() {
                    Some((t, v)) => self.emit(Msg::Event(t, v)),
                    None => {
                        let p = progress.clone();
                        self.done = true;
                        self.progress_to(p, true).unwrap_or(internal)
                    }
                }
            }
            Kind::Nil => {
                if !room {
                    return Ok(internal);
                }
                self.done = true;
                self.emit(Msg::Progress(Progress::Infinite))
            }
            Kind::Unit => {
                let zero = Time::zero();
                if self.out_progress < Progress::Inclusive(zero.clone()) {
                    if !granted(&zero) {
                        return Ok(Fired::Request(zero));
                    }
                    if !room {
                        return Ok(internal);
                    }
                    self.emit(Msg::Event(zero, Value::Unit))
                } else {
                    if !room {
                        return Ok(internal);
                    }
                    self.done = true;
                    self.emit(Msg::Progress(Progress::Infinite))
                }
            }
            Kind::Pointwise(op) => {
                let op = op.clone();
                self.fire_pointwise(&op, ports, room).unwrap_or(internal)
            }
            Kind::Last { .. } => self.fire_last(ports, room).unwrap_or(internal),
            Kind::Delay { .. } => match self.fire_delay(ports, room, granted)? {
                Some(f) => f,
                None => internal,
            },
        };
        Ok(fired)
    }

    fn fire_pointwise(&mut self, op: &Pointwise, ports: &mut [Queue], room: bool) -> Option<Fired> {
        let frontier = (0..ports.len()).map(|i| self.frontier(ports, i)).min().expect("at least one port");
        let next = ports.iter().filter_map(head_time).min().cloned();
        match next {
            Some(t) if frontier.covers(&t) => {
                if !room {
                    return None;
                }
                let args: Vec<ExtValue> = ports
                    .iter_mut()
                    .zip(&mut self.port_progress)
                    .map(|(q, known)| (head_time(q) == Some(&t)).then(|| take(q, known).1))
                    .collect();
                Some(match op.apply(&t, &args) {
                    Some(v) => self.emit(Msg::Event(t, v)),
                    None => self.emit(Msg::Progress(Progress::Inclusive(t))),
                })
            }
            _ => self.progress_to(frontier, room),
        }
    }

    /// Port 0 carries values, port 1 triggers.
    fn fire_last(&mut self, ports: &mut [Queue], room: bool) -> Option<Fired> {
        let Kind::Last { cell } = &mut self.kind else { unreachable!() };
        // Values strictly before every outstanding trigger may enter the cell.
        let trigger = head_time(&ports[1]).cloned();
        let mut moved = false;
        while let Some(u) = head_time(&ports[0]) {
            let absorb = match &trigger {
                Some(t) => u < t,
                None => self.port_progress[1].covers(u),
            };
            if !absorb {
                break;
            }
            *cell = Some(take(&mut ports[0], &mut self.port_progress[0]).1);
            moved = true;
        }
        let values_known_before = |t: &Time, pp: &Progress| match head_time(&ports[0]) {
            Some(_) => true,
            None => pp.covers_before(t),
        };
        let out = match trigger {
            Some(t) if values_known_before(&t, &self.port_progress[0]) => {
                if !room {
                    return moved.then_some(Fired::Internal);
                }
                take(&mut ports[1], &mut self.port_progress[1]);
                let v = cell.clone();
                Some(match v {
                    Some(v) => self.emit(Msg::Event(t, v)),
                    None => self.emit(Msg::Progress(Progress::Inclusive(t))),
                })
            }
            Some(t) => self.progress_to(Progress::Exclusive(t), room),
            None => {
                let p = self.port_progress[1].clone();
                self.progress_to(p, room)
            }
        };
        out.or(moved.then_some(Fired::Internal))
    }

    /// Port 0 carries delays, port 1 resets. Mirrors the timer semantics:
    /// decisions happen at the pending deadline and at reset events.
    fn fire_delay(
        &mut self,
        ports: &mut [Queue],
        room: bool,
        granted: &dyn Fn(&Time) -> bool,
    ) -> Result<Option<Fired>, NodeError> {
        let Kind::Delay { pending, decided } = &self.kind else { unreachable!() };
        let (pending, decided) = (pending.clone(), decided.clone());
        let reset = head_time(&ports[1]).cloned();
        let at = match (&pending, &reset) {
            (None, None) => None,
            (Some(p), None) => self.port_progress[1].covers_before(p).then(|| p.clone()),
            (None, Some(u)) => Some(u.clone()),
            (Some(p), Some(u)) => Some(p.min(u).clone()),
        };
        // Delays given between decision points are never adopted.
        let mut moved = false;
        while let Some(u) = head_time(&ports[0]) {
            let skip = match &at {
                Some(a) => u < a,
                None => self.port_progress[1].covers(u) && pending.as_ref().is_none_or(|p| u < p),
            };
            if !skip {
                break;
            }
            take(&mut ports[0], &mut self.port_progress[0]);
            moved = true;
        }
        let Some(at) = at else {
            let p = self.port_progress[1].clone().max(decided);
            return Ok(self.progress_to(p, room).or(moved.then_some(Fired::Internal)));
        };
        let fire = pending.as_ref() == Some(&at);
        if self.out_progress < Progress::Inclusive(at.clone()) {
            if fire && !granted(&at) {
                // Everything before the deadline is settled already.
                if let Some(f) = self.progress_to(Progress::Exclusive(at.clone()), room) {
                    return Ok(Some(f));
                }
                return Ok(Some(if moved { Fired::Internal } else { Fired::Request(at) }));
            }
            if !room {
                return Ok(moved.then_some(Fired::Internal));
            }
            let m = if fire { Msg::Event(at, Value::Unit) } else { Msg::Progress(Progress::Inclusive(at)) };
            return Ok(Some(self.emit(m)));
        }
        // Output at `at` is out; adopt the delay given at `at`, if known.
        let delay = match head_time(&ports[0]) {
            Some(u) if *u == at => Some(take(&mut ports[0], &mut self.port_progress[0]).1),
            Some(_) => None,
            _ if self.port_progress[0].covers(&at) => None,
            _ => return Ok(moved.then_some(Fired::Internal)),
        };
        let timeout = match delay {
            Some(d) => Some(timeout_for(&at, &d).map_err(|e| NodeError { time: e.time, value: e.value })?),
            None => None,
        };
        if reset.as_ref() == Some(&at) {
            take(&mut ports[1], &mut self.port_progress[1]);
        }
        self.kind = Kind::Delay { pending: timeout, decided: Progress::Inclusive(at) };
        Ok(Some(Fired::Internal))
    }
}
