//! Line-oriented text format for timed event traces.
//!
//! ```text
//! # comment
//! 1: temperature = 6
//! 2.5: name = "text"
//! @progress 10      # known up to and including 10
//! @progress 12!     # known strictly before 12
//! ```

use std::collections::HashMap;
use std::fmt::Write;

use indexmap::IndexMap;

use crate::stream::{EventStream, Progress};
use crate::time::{parse_rational, Time};
use crate::value::Value;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceLine {
    Event { time: Time, stream: String, value: Value },
    Progress(Progress),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("line {0}: timestamp goes backwards")]
    NonMonotonicTrace(usize),
    #[error("line {line}: cannot read value `{text}`")]
    UnknownValueSyntax { line: usize, text: String },
}

impl TraceError {
    pub fn line(&self) -> usize {
        match self {
            TraceError::ParseError { line, .. } | TraceError::UnknownValueSyntax { line, .. } => *line,
            TraceError::NonMonotonicTrace(line) => *line,
        }
    }
}

/// All streams of a trace together with their common progress.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub streams: IndexMap<String, EventStream>,
    pub progress: Progress,
}

impl Trace {
    /// The named stream, or an empty one with the trace's progress.
    pub fn stream(&self, name: &str) -> EventStream {
        self.streams
            .get(name)
            .cloned()
            .unwrap_or_else(|| EventStream::new(Vec::new(), self.progress.clone()).expect("empty stream is valid"))
    }
}

/// Incremental parser; feed one line at a time.
#[derive(Clone, Debug)]
pub struct TraceReader {
    line: usize,
    last_time: Option<Time>,
    per_stream: HashMap<String, Time>,
    progress: Option<Progress>,
}

impl Default for TraceReader {
    fn default() -> Self {
        TraceReader::new()
    }
}

impl TraceReader {
    pub fn new() -> Self {
        TraceReader { line: 0, last_time: None, per_stream: HashMap::new(), progress: None }
    }

    pub fn line_number(&self) -> usize {
        self.line
    }

    /// The latest progress directive seen, if any.
    pub fn declared_progress(&self) -> Option<&Progress> {
        self.progress.as_ref()
    }

    /// Timestamp of the most recent event.
    pub fn last_time(&self) -> Option<&Time> {
        self.last_time.as_ref()
    }

    pub fn feed_line(&mut self, raw: &str) -> Result<Option<TraceLine>, TraceError> {
        self.line += 1;
        let line = self.line;
        let text = strip_comment(raw).trim();
        if text.is_empty() {
            return Ok(None);
        }
        if let Some(rest) = text.strip_prefix("@progress") {
            let rest = rest.trim();
            let (num, exclusive) = match rest.strip_suffix('!') {
                Some(n) => (n.trim_end(), true),
                None => (rest, false),
            };
            let t: Time = num.parse().map_err(|m| TraceError::ParseError { line, message: m })?;
            let p = if exclusive { Progress::Exclusive(t) } else { Progress::Inclusive(t) };
            if self.progress.as_ref().is_some_and(|old| p < *old) {
                return Err(TraceError::NonMonotonicTrace(line));
            }
            if self.last_time.as_ref().is_some_and(|last| !p.covers(last)) {
                return Err(TraceError::NonMonotonicTrace(line));
            }
            self.progress = Some(p.clone());
            return Ok(Some(TraceLine::Progress(p)));
        }
        let (ts, rest) = text
            .split_once(':')
            .ok_or_else(|| TraceError::ParseError { line, message: "expected `<time>: <name> = <value>`".into() })?;
        let time: Time = ts.trim().parse().map_err(|m| TraceError::ParseError { line, message: m })?;
        let (name, value) =
            rest.split_once('=').ok_or_else(|| TraceError::ParseError { line, message: "expected `=`".into() })?;
        let name = name.trim();
        if !is_identifier(name) {
            return Err(TraceError::ParseError { line, message: format!("invalid stream name `{name}`") });
        }
        let value_text = value.trim();
        let value = parse_value(value_text)
            .ok_or_else(|| TraceError::UnknownValueSyntax { line, text: value_text.to_string() })?;
        if self.last_time.as_ref().is_some_and(|last| time < *last)
            || self.per_stream.get(name).is_some_and(|last| time <= *last)
            || self.progress.as_ref().is_some_and(|p| p.covers(&time))
        {
            return Err(TraceError::NonMonotonicTrace(line));
        }
        self.last_time = Some(time.clone());
        self.per_stream.insert(name.to_string(), time.clone());
        Ok(Some(TraceLine::Event { time, stream: name.to_string(), value }))
    }
}

fn strip_comment(line: &str) -> &str {
    let mut in_string = false;
    let mut escaped = false;
    for (i, c) in line.char_indices() {
        match c {
            _ if escaped => escaped = false,
            '\\' if in_string => escaped = true,
            '"' => in_string = !in_string,
            '#' if !in_string => return &line[..i],
            _ => {}
        }
    }
    line
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Reads a value literal: `()`, `true`, `false`, a number or a string.
pub fn parse_value(text: &str) -> Option<Value> {
    match text {
        "()" => Some(Value::Unit),
        "true" => Some(Value::Bool(true)),
        "false" => Some(Value::Bool(false)),
        _ if text.starts_with('"') => parse_string(text).map(Value::Str),
        _ => parse_rational(text).map(Value::Num),
    }
}

fn parse_string(text: &str) -> Option<String> {
    let body = text.strip_prefix('"')?.strip_suffix('"')?;
    let mut out = String::new();
    let mut chars = body.chars();
    while let Some(c) = chars.next() {
        match c {
            '"' => return None,
            '\\' => out.push(match chars.next()? {
                'n' => '\n',
                't' => '\t',
                'r' => '\r',
                '"' => '"',
                '\\' => '\\',
                _ => return None,
            }),
            c => out.push(c),
        }
    }
    Some(out)
}

/// Parses a whole trace. Its progress is that of a final progress
/// directive; a trace that does not end in one is complete (`Infinite`).
pub fn parse_trace(text: &str) -> Result<Trace, TraceError> {
    let mut reader = TraceReader::new();
    let mut events: IndexMap<String, Vec<(Time, Value)>> = IndexMap::new();
    let mut closed = false;
    for raw in text.lines() {
        match reader.feed_line(raw)? {
            Some(TraceLine::Event { time, stream, value }) => {
                events.entry(stream).or_default().push((time, value));
                closed = false;
            }
            Some(TraceLine::Progress(_)) => closed = true,
            None => {}
        }
    }
    let progress = match reader.progress {
        Some(p) if closed => p,
        _ => Progress::Infinite,
    };
    let streams = events
        .into_iter()
        .map(|(name, evs)| {
            let s = EventStream::new(evs, progress.clone()).expect("reader enforces stream invariants");
            (name, s)
        })
        .collect();
    Ok(Trace { streams, progress })
}

/// Renders streams in global time order; ties follow map order. A final
/// directive carries the least progress when it is finite.
pub fn serialize_trace<'a>(streams: impl IntoIterator<Item = (&'a str, &'a EventStream)>) -> String {
    let streams: Vec<_> = streams.into_iter().collect();
    let mut out = String::new();
    let mut cursors = vec![0usize; streams.len()];
    loop {
        let mut best: Option<usize> = None;
        for (k, (_, s)) in streams.iter().enumerate() {
            let Some((t, _)) = s.events().get(cursors[k]) else { continue };
            if best.is_none_or(|b| *t < streams[b].1.events()[cursors[b]].0) {
                best = Some(k);
            }
        }
        let Some(k) = best else { break };
        let (name, s) = streams[k];
        let (t, v) = &s.events()[cursors[k]];
        let _ = writeln!(out, "{t}: {name} = {v}");
        cursors[k] += 1;
    }
    if let Some(p) = streams.iter().map(|(_, s)| s.progress()).min() {
        match p {
            Progress::Inclusive(t) => {
                let _ = writeln!(out, "@progress {t}");
            }
            Progress::Exclusive(t) => {
                let _ = writeln!(out, "@progress {t}!");
            }
            Progress::Infinite => {}
        }
    }
    out
}

/// Renders a single event line.
pub fn format_event(time: &Time, name: &str, value: &Value) -> String {
    format!("{time}: {name} = {value}\n")
}
