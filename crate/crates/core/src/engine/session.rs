//! Line-by-line monitoring: trace text in, output trace text out, printed
//! as soon as the monitor has finalized it.

use indexmap::IndexMap;

use super::{EngineError, Limits, Monitor, Streams};
use crate::ir::CoreSpec;
use crate::stream::{EventStream, Progress};
use crate::time::Time;
use crate::trace::{serialize_trace, TraceError, TraceLine, TraceReader};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SessionError {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("session already finished")]
    Finished,
}

/// Input is handed to the monitor whenever time moves on or a progress
/// directive arrives. The concatenated output of all calls equals the
/// serialized result of evaluating the whole trace at once.
pub struct Session {
    spec: CoreSpec,
    monitor: Monitor,
    reader: TraceReader,
    printed: IndexMap<String, usize>,
    buffer: Vec<(String, Time, Value)>,
    closed: bool,
    finished: bool,
}

impl Session {
    pub fn new(spec: &CoreSpec, limits: Limits) -> Result<Self, EngineError> {
        Ok(Session {
            monitor: Monitor::new(spec, limits)?,
            spec: spec.clone(),
            reader: TraceReader::new(),
            printed: spec.outputs.iter().map(|n| (n.clone(), 0)).collect(),
            buffer: Vec::new(),
            closed: false,
            finished: false,
        })
    }

    pub fn monitor(&self) -> &Monitor {
        &self.monitor
    }

    /// Reads one trace line; appends newly final output lines to `out`,
    /// also when an error occurs.
    pub fn feed_line(&mut self, line: &str, out: &mut String) -> Result<(), SessionError> {
        if self.finished {
            return Err(SessionError::Finished);
        }
        match self.reader.feed_line(line)? {
            Some(TraceLine::Event { time, stream, value }) => {
                if self.buffer.last().is_some_and(|(_, t, _)| *t < time) {
                    self.advance(Progress::Exclusive(time.clone()), out)?;
                }
                self.buffer.push((stream, time, value));
                self.closed = false;
            }
            Some(TraceLine::Progress(p)) => {
                self.advance(p, out)?;
                self.closed = true;
            }
            None => {}
        }
        Ok(())
    }

    /// Ends the input. A trace that does not end in a progress directive
    /// is complete.
    pub fn finish(&mut self, out: &mut String) -> Result<(), SessionError> {
        if self.finished {
            return Err(SessionError::Finished);
        }
        let end = match self.reader.declared_progress() {
            Some(p) if self.closed => p.clone(),
            _ => Progress::Infinite,
        };
        self.advance(end, out)?;
        self.finished = true;
        out.push_str(&self.directive(&self.monitor.progress().clone()));
        Ok(())
    }

    fn directive(&self, p: &Progress) -> String {
        if self.printed.is_empty() {
            return String::new();
        }
        match p {
            Progress::Inclusive(t) => format!("@progress {t}\n"),
            Progress::Exclusive(t) => format!("@progress {t}!\n"),
            Progress::Infinite => String::new(),
        }
    }

    fn advance(&mut self, p: Progress, out: &mut String) -> Result<(), SessionError> {
        if let Some((name, _, _)) = self.buffer.iter().find(|(n, _, _)| !self.spec.inputs.contains_key(n)) {
            return Err(EngineError::UnknownInput(name.clone()).into());
        }
        let mut chunks = Streams::new();
        for name in self.spec.inputs.keys() {
            let events: Vec<(Time, Value)> =
                self.buffer.iter().filter(|(n, _, _)| n == name).map(|(_, t, v)| (t.clone(), v.clone())).collect();
            chunks.insert(name.clone(), EventStream::new(events, p.clone()).expect("reader keeps time order"));
        }
        self.buffer.clear();
        let result = self.monitor.advance(&chunks);
        // New events per output: the equation deltas, the chunk itself for
        // outputs that are inputs, or the unprinted rest of a partial result.
        let fresh: Vec<(String, EventStream)> = self
            .printed
            .iter_mut()
            .map(|(name, done)| {
                let events = match &result {
                    Ok(delta) => delta.get(name).or_else(|| chunks.get(name)).map_or(vec![], |s| s.events().to_vec()),
                    Err(EngineError::EventLimitExceeded { partial, .. }) => partial[name].events()[*done..].to_vec(),
                    Err(_) => vec![],
                };
                *done += events.len();
                (name.clone(), EventStream::new(events, Progress::Infinite).expect("suffix of a stream"))
            })
            .collect();
        out.push_str(&serialize_trace(fresh.iter().map(|(n, s)| (n.as_str(), s))));
        if let Err(EngineError::EventLimitExceeded { progress, .. }) = &result {
            out.push_str(&self.directive(progress));
            self.finished = true;
        }
        result.map(|_| ()).map_err(SessionError::from)
    }
}
