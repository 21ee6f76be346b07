//! Single-equation transducers of the boolean fragment.
//!
//! Every machine reads one [`Val`] per argument and writes one for the
//! defined stream. Once its output has ended a machine sits in a sink and
//! emits `bot` filler. Machines are total: letters no encoding can produce
//! still get some transition, which closure then discards as inconsistent.

use std::collections::{BTreeMap, HashMap, VecDeque};

use indexmap::IndexMap;

use super::dfst::Dfst;
use super::val::{Letter, Val};
use super::FragmentError;
use crate::ir::StreamType;
use crate::term::FunctionTerm;
use crate::value::Value;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoolOp {
    Nil,
    Unit,
    /// `z := x`
    Copy,
    /// Lifted function; flags mark unit-typed arguments.
    Lift {
        f: FunctionTerm,
        unit_args: Vec<bool>,
    },
    Last,
    /// `slift(>=)(time(a), time(b))`
    SliftGe,
}

/// One equation of a flattened boolean specification.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoolEquation {
    pub name: String,
    pub op: BoolOp,
    pub args: Vec<String>,
}

// State numbering shared by the step functions and the labels.
const LAST_S0: u8 = 0;
const LAST_W: u8 = 3;
const LAST_V: u8 = 4;
const LAST_E: u8 = 5;
const GE_E: u8 = 4;

fn is_data(v: Val) -> bool {
    matches!(v.data(), Some(Some(_)))
}

fn ext_value(v: Val, unit: bool) -> Option<Value> {
    match v.data()? {
        None => None,
        Some(_) if unit => Some(Value::Unit),
        Some(b) => Some(Value::Bool(b)),
    }
}

fn encode_value(v: Option<Value>) -> Val {
    match v {
        None => Val::Bot,
        Some(Value::Bool(false)) => Val::False,
        Some(_) => Val::True,
    }
}

fn end_like(v: Val, ended: bool) -> Val {
    if ended {
        v.primed()
    } else {
        v
    }
}

impl BoolOp {
    pub fn state_count(&self) -> u8 {
        match self {
            BoolOp::Nil => 1,
            BoolOp::Unit | BoolOp::Copy | BoolOp::Lift { .. } => 2,
            BoolOp::Last => 6,
            BoolOp::SliftGe => 5,
        }
    }

    pub fn state_name(&self, s: u8) -> &'static str {
        match self {
            BoolOp::Nil => "s",
            BoolOp::Unit => ["s0", "s1"][s as usize],
            BoolOp::Copy | BoolOp::Lift { .. } => ["s", "se"][s as usize],
            BoolOp::Last => ["s0", "sT", "sF", "sw", "sv", "se"][s as usize],
            BoolOp::SliftGe => ["sbot", "sa", "sb", "sc", "se"][s as usize],
        }
    }

    /// Whether the output has ended in state `s`.
    pub fn is_sink(&self, s: u8) -> bool {
        match self {
            BoolOp::Nil | BoolOp::Unit => false,
            BoolOp::Copy | BoolOp::Lift { .. } => s == 1,
            BoolOp::Last => s == LAST_E,
            BoolOp::SliftGe => s == GE_E,
        }
    }

    pub fn step(&self, s: u8, args: &[Val]) -> (u8, Val) {
        if self.is_sink(s) {
            return (s, Val::Bot);
        }
        match self {
            BoolOp::Nil => (0, Val::Bot),
            BoolOp::Unit => (1, if s == 0 { Val::True } else { Val::Bot }),
            BoolOp::Copy => (u8::from(args[0].is_end()), args[0]),
            BoolOp::Lift { f, unit_args } => {
                if args.contains(&Val::ExclEnd) {
                    return (1, Val::ExclEnd);
                }
                let xs: Vec<Option<Value>> = args.iter().zip(unit_args).map(|(&v, &u)| ext_value(v, u)).collect();
                let out = if xs.iter().all(Option::is_none) { Val::Bot } else { encode_value(f.eval(&xs)) };
                let ended = args.iter().any(|v| v.is_end());
                (u8::from(ended), end_like(out, ended))
            }
            BoolOp::Last => last_step(s, args[0], args[1]),
            BoolOp::SliftGe => ge_step(s, args[0], args[1]),
        }
    }
}

/// `last(a, b)`. States: s0 (no value yet), sT/sF (last value), sw (`b`
/// ended before any value), sv (`a` ended, output still running), se.
/// Before the first event on `a` the output is known to be empty, so it
/// runs on past an ending trigger until `a` shows an event or ends.
fn last_step(s: u8, a: Val, b: Val) -> (u8, Val) {
    let remember = |d: Option<bool>| match d {
        Some(true) => 1,
        Some(false) => 2,
        None => unreachable!(),
    };
    match s {
        LAST_S0 => match (a.is_end(), b.is_end()) {
            (false, false) if is_data(a) => (remember(a.data().unwrap()), Val::Bot),
            (false, false) => (LAST_S0, Val::Bot),
            (false, true) if is_data(a) => (LAST_E, Val::BotEnd),
            (false, true) => (LAST_W, Val::Bot),
            (true, false) => (LAST_V, Val::Bot),
            (true, true) => (LAST_E, Val::BotEnd),
        },
        1 | 2 => {
            let d = Val::of(Some(s == 1));
            if b.is_end() {
                let out = match b {
                    Val::ExclEnd => Val::ExclEnd,
                    Val::BotEnd => Val::BotEnd,
                    _ => d.primed(),
                };
                return (LAST_E, out);
            }
            let out = if is_data(b) { d } else { Val::Bot };
            if a.is_end() {
                (LAST_V, out)
            } else if is_data(a) {
                (remember(a.data().unwrap()), out)
            } else {
                (s, out)
            }
        }
        LAST_W => match a {
            Val::Bot => (LAST_W, Val::Bot),
            _ => (LAST_E, Val::BotEnd),
        },
        LAST_V => match b {
            Val::Bot => (LAST_V, Val::Bot),
            Val::BotEnd => (LAST_E, Val::BotEnd),
            _ => (LAST_E, Val::ExclEnd),
        },
        _ => (LAST_E, Val::Bot),
    }
}

/// `slift(>=)(time(a), time(b))`: the state remembers which inputs have
/// had an event (bit 0 for `a`, bit 1 for `b`). Both event times are equal
/// on a joint event; otherwise the current event is the later one.
fn ge_step(s: u8, a: Val, b: Val) -> (u8, Val) {
    if a == Val::ExclEnd || b == Val::ExclEnd {
        return (GE_E, Val::ExclEnd);
    }
    let (ea, eb) = (is_data(a), is_data(b));
    let (seen_a, seen_b) = (s & 1 != 0, s & 2 != 0);
    let out = match (ea, eb) {
        (true, true) => Val::True,
        (true, false) if seen_b => Val::True,
        (false, true) if seen_a => Val::False,
        _ => Val::Bot,
    };
    if a.is_end() || b.is_end() {
        return (GE_E, out.primed());
    }
    (s | u8::from(ea) | (u8::from(eb) << 1), out)
}

/// Values a stream of the given type can take in a letter.
pub(crate) fn domain(unit: bool) -> Vec<Val> {
    Val::ALL.into_iter().filter(|v| !unit || !matches!(v, Val::False | Val::FalseEnd)).collect()
}

/// All letters over the given per-position domains.
pub(crate) fn product(domains: &[Vec<Val>]) -> Vec<Letter> {
    let mut out = vec![Vec::with_capacity(domains.len())];
    for d in domains {
        out = out
            .into_iter()
            .flat_map(|l: Letter| {
                d.iter().map(move |&v| {
                    let mut l = l.clone();
                    l.push(v);
                    l
                })
            })
            .collect();
    }
    out
}

pub(crate) const MAX_LETTERS: usize = 1 << 20;

/// Explicit transducer of one equation. Inputs are the distinct argument
/// names; letters range over every value admitted by the argument types.
pub fn equation_dfst(eq: &BoolEquation, types: &IndexMap<String, StreamType>) -> Result<Dfst, FragmentError> {
    let mut inputs: Vec<String> = eq.args.clone();
    inputs.sort();
    inputs.dedup();
    let pos: HashMap<&str, usize> = inputs.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let domains: Vec<Vec<Val>> = inputs.iter().map(|n| domain(types.get(n) == Some(&StreamType::Unit))).collect();
    let size = domains.iter().map(Vec::len).try_fold(1usize, |acc, n| acc.checked_mul(n).filter(|&x| x <= MAX_LETTERS));
    if size.is_none() {
        return Err(FragmentError::AlphabetTooLarge(format!("equation `{}` has too many input letters", eq.name)));
    }
    let letters = product(&domains);
    let mut index: HashMap<u8, usize> = HashMap::from([(0, 0)]);
    let mut order = vec![0u8];
    let mut delta = vec![BTreeMap::new()];
    let mut queue = VecDeque::from([0u8]);
    while let Some(s) = queue.pop_front() {
        let from = index[&s];
        for letter in &letters {
            let args: Vec<Val> = eq.args.iter().map(|a| letter[pos[a.as_str()]]).collect();
            let (t, out) = eq.op.step(s, &args);
            let to = *index.entry(t).or_insert_with(|| {
                order.push(t);
                delta.push(BTreeMap::new());
                queue.push_back(t);
                order.len() - 1
            });
            delta[from].insert(letter.clone(), (to, vec![out]));
        }
    }
    let states = order.iter().map(|&s| eq.op.state_name(s).to_string()).collect();
    Dfst::new(inputs, vec![eq.name.clone()], states, 0, delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::BinOp;

    #[test]
    fn lift_and_table() {
        let op = BoolOp::Lift { f: FunctionTerm::binary(BinOp::And), unit_args: vec![false, false] };
        assert_eq!(op.step(0, &[Val::True, Val::True]), (0, Val::True));
        assert_eq!(op.step(0, &[Val::Bot, Val::Bot]), (0, Val::Bot));
        assert_eq!(op.step(0, &[Val::True, Val::FalseEnd]), (1, Val::FalseEnd));
        assert_eq!(op.step(0, &[Val::ExclEnd, Val::True]), (1, Val::ExclEnd));
        assert_eq!(op.step(1, &[Val::True, Val::True]), (1, Val::Bot));
    }

    #[test]
    fn last_rows() {
        use Val::*;
        // An event on a that coincides with an inclusive trigger end.
        assert_eq!(last_step(LAST_S0, True, TrueEnd), (LAST_E, BotEnd));
        // The trigger at a's end still sees the remembered value.
        assert_eq!(last_step(1, BotEnd, True), (LAST_V, True));
        assert_eq!(last_step(1, Bot, False), (1, True));
        assert_eq!(last_step(2, True, Bot), (1, Bot));
        assert_eq!(last_step(LAST_V, Bot, True), (LAST_E, ExclEnd));
        assert_eq!(last_step(LAST_W, Bot, Bot), (LAST_W, Bot));
    }

    #[test]
    fn ge_rows() {
        use Val::*;
        assert_eq!(ge_step(0, True, False), (3, True));
        assert_eq!(ge_step(0, True, Bot), (1, Bot));
        assert_eq!(ge_step(1, Bot, True), (3, False));
        assert_eq!(ge_step(2, False, Bot), (3, True));
        assert_eq!(ge_step(3, Bot, FalseEnd), (GE_E, FalseEnd));
        assert_eq!(ge_step(0, ExclEnd, True), (GE_E, ExclEnd));
    }

    #[test]
    fn unit_and_nil() {
        let types = IndexMap::new();
        let unit = BoolEquation { name: "z".into(), op: BoolOp::Unit, args: vec![] };
        let d = equation_dfst(&unit, &types).unwrap();
        assert_eq!(d.state_count(), 2);
        let nil = BoolEquation { name: "z".into(), op: BoolOp::Nil, args: vec![] };
        assert_eq!(equation_dfst(&nil, &types).unwrap().state_count(), 1);
    }
}
