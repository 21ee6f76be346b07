//! Letters of boolean transducers and the two stream encodings: α (a word
//! over a finite alphabet as one boolean stream per symbol) and β (a tuple
//! of boolean streams as a synchronized word over name ↦ [`Val`] maps).

use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;

use crate::ir::StreamType;
use crate::stream::{EventStream, Progress};
use crate::time::Time;
use crate::value::Value;

/// Value of one stream at one position of a β-word. Primed symbols mark the
/// last known position of a stream; `ExclEnd` (`<'`) means the stream is
/// known only strictly before this position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Val {
    Bot,
    True,
    False,
    ExclEnd,
    BotEnd,
    TrueEnd,
    FalseEnd,
}

impl Val {
    pub const ALL: [Val; 7] = [Val::Bot, Val::True, Val::False, Val::ExclEnd, Val::BotEnd, Val::TrueEnd, Val::FalseEnd];

    pub fn is_end(self) -> bool {
        matches!(self, Val::ExclEnd | Val::BotEnd | Val::TrueEnd | Val::FalseEnd)
    }

    /// The unprimed data part (`None` for `<'`).
    pub fn data(self) -> Option<Option<bool>> {
        match self {
            Val::Bot | Val::BotEnd => Some(None),
            Val::True | Val::TrueEnd => Some(Some(true)),
            Val::False | Val::FalseEnd => Some(Some(false)),
            Val::ExclEnd => None,
        }
    }

    pub fn of(b: Option<bool>) -> Val {
        match b {
            None => Val::Bot,
            Some(true) => Val::True,
            Some(false) => Val::False,
        }
    }

    pub fn primed(self) -> Val {
        match self {
            Val::Bot => Val::BotEnd,
            Val::True => Val::TrueEnd,
            Val::False => Val::FalseEnd,
            end => end,
        }
    }
}

impl fmt::Display for Val {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Val::Bot => "bot",
            Val::True => "true",
            Val::False => "false",
            Val::ExclEnd => "<'",
            Val::BotEnd => "bot'",
            Val::TrueEnd => "true'",
            Val::FalseEnd => "false'",
        })
    }
}

impl FromStr for Val {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Val::ALL.into_iter().find(|v| v.to_string() == s).ok_or_else(|| format!("unknown letter value `{s}`"))
    }
}

/// A letter: one value per name of an alphabet, in the alphabet's order.
pub type Letter = Vec<Val>;

pub fn format_letter(names: &[String], letter: &[Val]) -> String {
    let parts: Vec<String> = names.iter().zip(letter).map(|(n, v)| format!("{n}={v}")).collect();
    format!("{{{}}}", parts.join(", "))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EncodingError {
    #[error("stream `{stream}` ends at {progress}, which is not an encoded position")]
    EndNotEncoded { stream: String, progress: Progress },
    #[error("stream `{0}` carries a non-boolean value")]
    NotBoolean(String),
    #[error("letter {position}: stream `{stream}` continues after its end")]
    DataAfterEnd { stream: String, position: usize },
    #[error("letter {position}: value `false` on unit stream `{stream}`")]
    FalseOnUnit { stream: String, position: usize },
    #[error("position {0}: expected exactly one symbol")]
    NotOneSymbol(usize),
    #[error("word and timestamps differ in length")]
    LengthMismatch,
}

/// A β-encoded tuple of streams: names (sorted), the encoded timestamps and
/// one letter per timestamp.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BetaWord {
    pub names: Vec<String>,
    pub times: Vec<Time>,
    pub letters: Vec<Letter>,
}

/// `{0}` plus every event timestamp and every finite progress bound.
pub fn beta_times<'a>(streams: impl IntoIterator<Item = &'a EventStream>) -> Vec<Time> {
    let mut ts = vec![Time::zero()];
    for s in streams {
        ts.extend(s.events().iter().map(|(t, _)| t.clone()));
        if let Some(t) = s.progress().time() {
            ts.push(t.clone());
        }
    }
    ts.sort();
    ts.dedup();
    ts
}

fn bool_of(name: &str, v: &Value) -> Result<bool, EncodingError> {
    match v {
        Value::Bool(b) => Ok(*b),
        Value::Unit => Ok(true),
        _ => Err(EncodingError::NotBoolean(name.to_string())),
    }
}

/// Encodes at the given positions. Every finite end of a stream up to the
/// last position must be one of the positions.
pub fn encode_beta_at<'a>(
    streams: impl IntoIterator<Item = (&'a str, &'a EventStream)>,
    times: &[Time],
) -> Result<BetaWord, EncodingError> {
    let mut streams: Vec<(&str, &EventStream)> = streams.into_iter().collect();
    streams.sort_by(|a, b| a.0.cmp(b.0));
    if let Some(last) = times.last() {
        for (name, s) in &streams {
            if let Some(t) = s.progress().time() {
                if t <= last && times.binary_search(t).is_err() {
                    return Err(EncodingError::EndNotEncoded {
                        stream: name.to_string(),
                        progress: s.progress().clone(),
                    });
                }
            }
        }
    }
    let mut letters = Vec::with_capacity(times.len());
    for t in times {
        let mut letter = Vec::with_capacity(streams.len());
        for (name, s) in &streams {
            let p = s.progress();
            let v = if *p < Progress::Exclusive(t.clone()) {
                Val::Bot
            } else if *p == Progress::Exclusive(t.clone()) {
                Val::ExclEnd
            } else {
                let data = match s.lookup(t) {
                    crate::stream::Lookup::Event(v) => Some(bool_of(name, v)?),
                    _ => None,
                };
                let v = Val::of(data);
                if *p == Progress::Inclusive(t.clone()) {
                    v.primed()
                } else {
                    v
                }
            };
            letter.push(v);
        }
        letters.push(letter);
    }
    Ok(BetaWord { names: streams.iter().map(|(n, _)| n.to_string()).collect(), times: times.to_vec(), letters })
}

pub fn encode_beta<'a>(
    streams: impl IntoIterator<Item = (&'a str, &'a EventStream)> + Clone,
) -> Result<BetaWord, EncodingError> {
    let times = beta_times(streams.clone().into_iter().map(|(_, s)| s));
    encode_beta_at(streams, &times)
}

/// Inverse of [`encode_beta_at`]. A stream that never ends in the word is
/// complete. `types` gives the value type per name (default Bool).
pub fn decode_beta(
    word: &BetaWord,
    types: &IndexMap<String, StreamType>,
) -> Result<IndexMap<String, EventStream>, EncodingError> {
    if word.letters.len() != word.times.len() {
        return Err(EncodingError::LengthMismatch);
    }
    let mut out = IndexMap::new();
    for (k, name) in word.names.iter().enumerate() {
        let unit = types.get(name) == Some(&StreamType::Unit);
        let mut events = Vec::new();
        let mut progress = Progress::Infinite;
        for (pos, (t, letter)) in word.times.iter().zip(&word.letters).enumerate() {
            let v = letter[k];
            if progress != Progress::Infinite {
                if v != Val::Bot {
                    return Err(EncodingError::DataAfterEnd { stream: name.clone(), position: pos });
                }
                continue;
            }
            match v.data() {
                None => progress = Progress::Exclusive(t.clone()),
                Some(data) => {
                    if let Some(b) = data {
                        if unit && !b {
                            return Err(EncodingError::FalseOnUnit { stream: name.clone(), position: pos });
                        }
                        events.push((t.clone(), if unit { Value::Unit } else { Value::Bool(b) }));
                    }
                    if v.is_end() {
                        progress = Progress::Inclusive(t.clone());
                    }
                }
            }
        }
        out.insert(name.clone(), EventStream::new(events, progress).expect("positions are increasing"));
    }
    Ok(out)
}

/// α: symbol `i` of the word becomes `true` on stream `sigma[i]` and `false`
/// on all others, at timestamp `i`. A finite word of length n is known up
/// to (excluding) n.
pub fn encode_alpha(word: &[usize], sigma: &[String]) -> IndexMap<String, EventStream> {
    let end = Progress::Exclusive(Time::from_int(word.len() as u64));
    sigma
        .iter()
        .enumerate()
        .map(|(p, name)| {
            let events =
                word.iter().enumerate().map(|(i, &w)| (Time::from_int(i as u64), Value::Bool(w == p))).collect();
            (name.clone(), EventStream::new(events, end.clone()).expect("increasing"))
        })
        .collect()
}

pub fn decode_alpha(streams: &IndexMap<String, EventStream>, sigma: &[String]) -> Result<Vec<usize>, EncodingError> {
    let empty = EventStream::nil();
    let per: Vec<&EventStream> = sigma.iter().map(|n| streams.get(n).unwrap_or(&empty)).collect();
    let len = per.iter().map(|s| s.len()).max().unwrap_or(0);
    let mut word = Vec::with_capacity(len);
    for i in 0..len {
        let t = Time::from_int(i as u64);
        let mut found = None;
        for (p, s) in per.iter().enumerate() {
            match s.events().get(i) {
                Some((u, Value::Bool(b))) if *u == t => {
                    if *b {
                        if found.is_some() {
                            return Err(EncodingError::NotOneSymbol(i));
                        }
                        found = Some(p);
                    }
                }
                _ => return Err(EncodingError::NotOneSymbol(i)),
            }
        }
        word.push(found.ok_or(EncodingError::NotOneSymbol(i))?);
    }
    Ok(word)
}
