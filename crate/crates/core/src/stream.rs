//! Event streams with an explicit progress marker, and the prefix order.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use crate::time::Time;
use crate::value::Value;

/// How far a stream is known.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Progress {
    /// Known on `[0, t)`.
    Exclusive(Time),
    /// Known on `[0, t]`.
    Inclusive(Time),
    /// Known everywhere.
    Infinite,
}

impl Progress {
    /// The least element: nothing known.
    pub fn none() -> Self {
        Progress::Exclusive(Time::zero())
    }

    fn key(&self) -> (Option<&Time>, u8) {
        match self {
            Progress::Exclusive(t) => (Some(t), 0),
            Progress::Inclusive(t) => (Some(t), 1),
            Progress::Infinite => (None, 2),
        }
    }

    pub fn time(&self) -> Option<&Time> {
        match self {
            Progress::Exclusive(t) | Progress::Inclusive(t) => Some(t),
            Progress::Infinite => None,
        }
    }

    /// Whether the stream value at `t` is known.
    pub fn covers(&self, t: &Time) -> bool {
        match self {
            Progress::Exclusive(p) => t < p,
            Progress::Inclusive(p) => t <= p,
            Progress::Infinite => true,
        }
    }

    /// Whether everything strictly before `t` is known.
    pub fn covers_before(&self, t: &Time) -> bool {
        *self >= Progress::Exclusive(t.clone())
    }

    /// Smallest inclusive bound at or above `self`.
    pub fn ceil_inclusive(&self) -> Progress {
        match self {
            Progress::Exclusive(t) => Progress::Inclusive(t.clone()),
            other => other.clone(),
        }
    }
}

impl Ord for Progress {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, ra) = self.key();
        let (b, rb) = other.key();
        match (a, b) {
            (None, None) => Ordering::Equal,
            (None, Some(_)) => Ordering::Greater,
            (Some(_), None) => Ordering::Less,
            (Some(x), Some(y)) => x.cmp(y).then(ra.cmp(&rb)),
        }
    }
}

impl PartialOrd for Progress {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Progress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Progress::Exclusive(t) => write!(f, "<{t}"),
            Progress::Inclusive(t) => write!(f, "<={t}"),
            Progress::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StreamError {
    #[error("timestamps not strictly increasing at {0}")]
    NonMonotonicTimestamps(Time),
    #[error("event at {time} lies beyond progress {progress}")]
    EventBeyondProgress { time: Time, progress: Progress },
}

/// A finite, timestamp-ordered event sequence plus its progress.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EventStream {
    events: Vec<(Time, Value)>,
    progress: Progress,
}

/// Pointwise view of a stream as a function of time.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Lookup<'a> {
    Event(&'a Value),
    NoEvent,
    Unknown,
}

impl EventStream {
    pub fn new(events: Vec<(Time, Value)>, progress: Progress) -> Result<Self, StreamError> {
        for pair in events.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(StreamError::NonMonotonicTimestamps(pair[1].0.clone()));
            }
        }
        if let Some((t, _)) = events.last() {
            if !progress.covers(t) {
                return Err(StreamError::EventBeyondProgress { time: t.clone(), progress });
            }
        }
        Ok(EventStream { events, progress })
    }

    /// The completely known stream without events.
    pub fn nil() -> Self {
        EventStream { events: Vec::new(), progress: Progress::Infinite }
    }

    /// The completely unknown stream.
    pub fn bottom() -> Self {
        EventStream { events: Vec::new(), progress: Progress::none() }
    }

    pub fn unit() -> Self {
        EventStream { events: vec![(Time::zero(), Value::Unit)], progress: Progress::Infinite }
    }

    pub fn events(&self) -> &[(Time, Value)] {
        &self.events
    }

    pub fn progress(&self) -> &Progress {
        &self.progress
    }

    pub fn into_parts(self) -> (Vec<(Time, Value)>, Progress) {
        (self.events, self.progress)
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn lookup(&self, t: &Time) -> Lookup<'_> {
        if !self.progress.covers(t) {
            return Lookup::Unknown;
        }
        match self.events.binary_search_by(|(u, _)| u.cmp(t)) {
            Ok(i) => Lookup::Event(&self.events[i].1),
            Err(_) => Lookup::NoEvent,
        }
    }

    /// Events with timestamp `< t`.
    pub fn events_before(&self, t: &Time) -> &[(Time, Value)] {
        let end = self.events.partition_point(|(u, _)| u < t);
        &self.events[..end]
    }

    /// The prefix with progress `min(p, self.progress)`.
    pub fn cut(&self, p: &Progress) -> EventStream {
        let progress = p.clone().min(self.progress.clone());
        let events = self.events.iter().filter(|(t, _)| progress.covers(t)).cloned().collect();
        EventStream { events, progress }
    }

    /// `self ⊑ other`.
    pub fn is_prefix_of(&self, other: &EventStream) -> bool {
        self.progress <= other.progress && other.cut(&self.progress).events == self.events
    }

    /// Appends an event; callers keep the invariants.
    pub(crate) fn push_unchecked(&mut self, t: Time, v: Value) {
        debug_assert!(self.events.last().is_none_or(|(u, _)| *u < t));
        self.events.push((t, v));
    }

    pub(crate) fn set_progress_unchecked(&mut self, p: Progress) {
        self.progress = p;
    }

    /// Extends `self` by the events of `chunk`, which must lie beyond the
    /// current progress.
    pub fn extend(&mut self, chunk: EventStream) -> Result<(), StreamError> {
        if let Some((t, _)) = chunk.events.first() {
            if self.progress.covers(t) {
                return Err(StreamError::NonMonotonicTimestamps(t.clone()));
            }
        }
        if chunk.progress < self.progress {
            let time = chunk.events.last().map(|(t, _)| t.clone()).unwrap_or_else(Time::zero);
            return Err(StreamError::EventBeyondProgress { time, progress: chunk.progress });
        }
        self.events.extend(chunk.events);
        self.progress = chunk.progress;
        Ok(())
    }
}

/// Least upper bound of a directed set of prefixes: union of events,
/// maximum progress. Returns `None` when the set is not directed.
pub fn supremum(streams: &[EventStream]) -> Option<EventStream> {
    let top = streams.iter().max_by(|a, b| a.progress.cmp(&b.progress))?;
    streams.iter().all(|s| s.is_prefix_of(top)).then(|| top.clone())
}

/// Sorted, deduplicated union of all event timestamps.
pub fn timestamps_union<'a>(streams: impl IntoIterator<Item = &'a EventStream>) -> Vec<Time> {
    let set: BTreeSet<&Time> = streams.into_iter().flat_map(|s| s.events.iter().map(|(t, _)| t)).collect();
    set.into_iter().cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(n: u64) -> Time {
        Time::from_int(n)
    }

    fn temperature() -> EventStream {
        let vals = [6, 2, 1, 5, 9];
        let events = vals.iter().enumerate().map(|(i, v)| (t(i as u64 + 1), Value::int(*v))).collect();
        EventStream::new(events, Progress::Infinite).unwrap()
    }

    #[test]
    fn progress_order() {
        assert!(Progress::Exclusive(t(3)) < Progress::Inclusive(t(3)));
        assert!(Progress::Inclusive(t(3)) < Progress::Exclusive(t(4)));
        assert!(Progress::Inclusive(t(1000)) < Progress::Infinite);
        assert!(Progress::Inclusive(t(2)).covers(&t(2)));
        assert!(!Progress::Exclusive(t(2)).covers(&t(2)));
        assert!(Progress::Exclusive(t(2)).covers_before(&t(2)));
    }

    #[test]
    fn construction_checks() {
        assert!(EventStream::new(vec![], Progress::none()).is_ok());
        let dup = vec![(t(2), Value::str("a")), (t(2), Value::str("b"))];
        assert_eq!(EventStream::new(dup, Progress::Infinite), Err(StreamError::NonMonotonicTimestamps(t(2))));
        let beyond = vec![(t(2), Value::Unit)];
        assert!(matches!(
            EventStream::new(beyond, Progress::Exclusive(t(2))),
            Err(StreamError::EventBeyondProgress { .. })
        ));
    }

    #[test]
    fn cuts() {
        let s = temperature();
        let strict = s.cut(&Progress::Exclusive(t(3)));
        assert_eq!(strict.events().iter().map(|(u, _)| u.clone()).collect::<Vec<_>>(), vec![t(1), t(2)]);
        assert_eq!(s.cut(&Progress::Inclusive(t(3))).len(), 3);
        assert_eq!(s.cut(&Progress::Infinite), s);
        assert!(strict.is_prefix_of(&s));
    }

    #[test]
    fn prefixes() {
        let s = temperature();
        assert!(s.cut(&Progress::Inclusive(t(3))).is_prefix_of(&s));
        assert!(EventStream::bottom().is_prefix_of(&s));
        let mut extra = s.cut(&Progress::Inclusive(t(3))).events().to_vec();
        extra.insert(0, (Time::zero(), Value::int(1)));
        let extra = EventStream::new(extra, Progress::Inclusive(t(3))).unwrap();
        assert!(!extra.is_prefix_of(&s));
    }

    #[test]
    fn lookup_view() {
        let s = temperature().cut(&Progress::Inclusive(t(3)));
        assert_eq!(s.lookup(&t(2)), Lookup::Event(&Value::int(2)));
        assert_eq!(s.lookup(&Time::zero()), Lookup::NoEvent);
        assert_eq!(s.lookup(&t(4)), Lookup::Unknown);
    }

    #[test]
    fn union_of_timestamps() {
        let a = EventStream::new(vec![(t(4), Value::Unit), (t(7), Value::Unit)], Progress::Infinite).unwrap();
        let b = EventStream::new(vec![(t(1), Value::Unit), (t(4), Value::Unit)], Progress::Infinite).unwrap();
        assert_eq!(timestamps_union([&a, &b]), vec![t(1), t(4), t(7)]);
        assert!(timestamps_union(std::iter::empty()).is_empty());
    }

    #[test]
    fn directed_supremum() {
        let s = temperature();
        let chain = [s.cut(&Progress::Exclusive(t(2))), s.cut(&Progress::Inclusive(t(4))), s.cut(&Progress::none())];
        assert_eq!(supremum(&chain), Some(s.cut(&Progress::Inclusive(t(4)))));
        let other = EventStream::new(vec![(t(1), Value::int(0))], Progress::Infinite).unwrap();
        assert_eq!(supremum(&[s, other]), None);
    }
}
