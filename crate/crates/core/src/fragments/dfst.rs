//! Explicit deterministic finite state transducers over [`Val`] letters.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::{self, Write};
use std::str::FromStr;

use super::val::{format_letter, Letter, Val};
use super::FragmentError;

/// Letters map input names to values and are stored positionally, aligned
/// with the sorted name lists. Pairs missing from `delta` reject.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dfst {
    inputs: Vec<String>,
    outputs: Vec<String>,
    states: Vec<String>,
    initial: usize,
    delta: Vec<BTreeMap<Letter, (usize, Letter)>>,
}

fn malformed(message: impl Into<String>) -> FragmentError {
    FragmentError::Format { line: 0, message: message.into() }
}

impl Dfst {
    /// Builds a transducer; names must be sorted and unique, and every
    /// transition must match the alphabets and the state count.
    pub fn new(
        inputs: Vec<String>,
        outputs: Vec<String>,
        states: Vec<String>,
        initial: usize,
        delta: Vec<BTreeMap<Letter, (usize, Letter)>>,
    ) -> Result<Dfst, FragmentError> {
        for names in [&inputs, &outputs] {
            if names.windows(2).any(|w| w[0] >= w[1]) {
                return Err(malformed("alphabet names must be sorted and distinct"));
            }
        }
        if states.len() != delta.len() || initial >= states.len() {
            return Err(malformed("state count does not match the transition table"));
        }
        for row in &delta {
            for (g, (t, h)) in row {
                if g.len() != inputs.len() || h.len() != outputs.len() || *t >= states.len() {
                    return Err(malformed("transition does not match the alphabets"));
                }
            }
        }
        Ok(Dfst { inputs, outputs, states, initial, delta })
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn state_label(&self, s: usize) -> &str {
        &self.states[s]
    }

    pub fn transition_count(&self) -> usize {
        self.delta.iter().map(BTreeMap::len).sum()
    }

    pub fn step(&self, s: usize, letter: &[Val]) -> Option<(usize, &Letter)> {
        self.delta[s].get(letter).map(|(t, h)| (*t, h))
    }

    pub fn transitions(&self, s: usize) -> impl Iterator<Item = (&Letter, usize, &Letter)> {
        self.delta[s].iter().map(|(g, (t, h))| (g, *t, h))
    }

    /// Every letter with a transition in some state.
    pub fn letters(&self) -> BTreeSet<&Letter> {
        self.delta.iter().flat_map(|row| row.keys()).collect()
    }

    /// Text form: header lines, then one `delta` line per transition with
    /// input and output values listed in alphabet order.
    pub fn to_text(&self) -> String {
        let mut out = String::from("dfst\n");
        writeln!(out, "inputs{}", self.inputs.iter().map(|n| format!(" {n}")).collect::<String>()).unwrap();
        writeln!(out, "outputs{}", self.outputs.iter().map(|n| format!(" {n}")).collect::<String>()).unwrap();
        for (i, label) in self.states.iter().enumerate() {
            writeln!(out, "state {i} {label}").unwrap();
        }
        writeln!(out, "initial {}", self.initial).unwrap();
        for (s, row) in self.delta.iter().enumerate() {
            for (g, (t, h)) in row {
                let vals = |l: &Letter| l.iter().map(|v| format!(" {v}")).collect::<String>();
                writeln!(out, "delta {s}{} -> {t}{}", vals(g), vals(h)).unwrap();
            }
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Dfst, FragmentError> {
        let err = |line: usize, message: &str| FragmentError::Format { line, message: message.to_string() };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
        match lines.next() {
            Some((_, "dfst")) => {}
            Some((n, _)) => return Err(err(n, "expected `dfst`")),
            None => return Err(err(1, "empty document")),
        }
        let mut inputs = None;
        let mut outputs = None;
        let mut states = Vec::new();
        let mut initial = None;
        let mut delta: Vec<BTreeMap<Letter, (usize, Letter)>> = Vec::new();
        for (n, line) in lines {
            let mut words = line.split_whitespace();
            let head = words.next().unwrap_or_default();
            let rest: Vec<&str> = words.collect();
            let index = |w: &str| w.parse::<usize>().map_err(|_| err(n, "expected a state number"));
            match head {
                "inputs" => inputs = Some(rest.iter().map(|s| s.to_string()).collect::<Vec<_>>()),
                "outputs" => outputs = Some(rest.iter().map(|s| s.to_string()).collect::<Vec<_>>()),
                "state" => {
                    let (Some(i), Some(label)) = (rest.first(), rest.get(1)) else {
                        return Err(err(n, "expected `state <n> <label>`"));
                    };
                    if index(i)? != states.len() {
                        return Err(err(n, "states must be numbered consecutively from 0"));
                    }
                    states.push(label.to_string());
                    delta.push(BTreeMap::new());
                }
                "initial" => initial = Some(index(rest.first().copied().unwrap_or_default())?),
                "delta" => {
                    let (Some(ins), Some(outs)) = (inputs.as_ref(), outputs.as_ref()) else {
                        return Err(err(n, "alphabets must precede transitions"));
                    };
                    let (ni, no) = (ins.len(), outs.len());
                    if rest.len() != ni + no + 3 || rest[ni + 1] != "->" {
                        return Err(err(n, "malformed transition"));
                    }
                    let vals = |ws: &[&str]| {
                        ws.iter().map(|w| Val::from_str(w).map_err(|m| err(n, &m))).collect::<Result<Letter, _>>()
                    };
                    let s = index(rest[0])?;
                    let g = vals(&rest[1..=ni])?;
                    let t = index(rest[ni + 2])?;
                    let h = vals(&rest[ni + 3..])?;
                    let row = delta.get_mut(s).ok_or_else(|| err(n, "unknown state"))?;
                    if row.insert(g, (t, h)).is_some() {
                        return Err(err(n, "duplicate transition"));
                    }
                }
                _ => return Err(err(n, "unknown directive")),
            }
        }
        let missing = |what: &str| err(0, &format!("missing `{what}`"));
        Dfst::new(
            inputs.ok_or_else(|| missing("inputs"))?,
            outputs.ok_or_else(|| missing("outputs"))?,
            states,
            initial.ok_or_else(|| missing("initial"))?,
            delta,
        )
    }
}

impl fmt::Display for Dfst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Runs `r` on a word; letters are aligned with `r.inputs()`.
pub fn run_dfst(r: &Dfst, word: &[Letter]) -> Result<Vec<Letter>, FragmentError> {
    let mut s = r.initial;
    let mut out = Vec::with_capacity(word.len());
    for (position, g) in word.iter().enumerate() {
        let Some((t, h)) = (g.len() == r.inputs.len()).then(|| r.step(s, g)).flatten() else {
            return Err(FragmentError::LetterNotInAlphabet {
                position,
                state: r.states[s].clone(),
                letter: format_letter(&r.inputs, g),
            });
        };
        out.push(h.clone());
        s = t;
    }
    Ok(out)
}

fn positions(of: &[String], within: &[String]) -> Vec<usize> {
    of.iter().map(|n| within.binary_search(n).expect("name in alphabet")).collect()
}

fn merged(a: &[String], b: &[String]) -> Vec<String> {
    let mut all: Vec<String> = a.iter().chain(b).cloned().collect();
    all.sort();
    all.dedup();
    all
}

/// Synchronous product: both transducers read the union of the input
/// alphabets and must agree on shared names.
pub fn compose_parallel(r1: &Dfst, r2: &Dfst) -> Result<Dfst, FragmentError> {
    if let Some(n) = r1.outputs.iter().find(|n| r2.outputs.binary_search(n).is_ok()) {
        return Err(FragmentError::OutputNameClash(n.clone()));
    }
    let inputs = merged(&r1.inputs, &r2.inputs);
    let outputs = merged(&r1.outputs, &r2.outputs);
    let shared: Vec<String> = r1.inputs.iter().filter(|n| r2.inputs.binary_search(n).is_ok()).cloned().collect();
    let sh1 = positions(&shared, &r1.inputs);
    let sh2 = positions(&shared, &r2.inputs);
    let in1 = positions(&r1.inputs, &inputs);
    let in2 = positions(&r2.inputs, &inputs);
    let out1 = positions(&r1.outputs, &outputs);
    let out2 = positions(&r2.outputs, &outputs);

    let mut index = HashMap::from([((r1.initial, r2.initial), 0usize)]);
    let mut pairs = vec![(r1.initial, r2.initial)];
    let mut delta = vec![BTreeMap::new()];
    let mut queue = VecDeque::from([0usize]);
    while let Some(p) = queue.pop_front() {
        let (s1, s2) = pairs[p];
        let mut by_shared: HashMap<Letter, Vec<(&Letter, usize, &Letter)>> = HashMap::new();
        for (g, t, h) in r2.transitions(s2) {
            by_shared.entry(sh2.iter().map(|&i| g[i]).collect()).or_default().push((g, t, h));
        }
        for (g1, t1, h1) in r1.transitions(s1) {
            let key: Letter = sh1.iter().map(|&i| g1[i]).collect();
            for &(g2, t2, h2) in by_shared.get(&key).into_iter().flatten() {
                let mut g = vec![Val::Bot; inputs.len()];
                let mut h = vec![Val::Bot; outputs.len()];
                in1.iter().zip(g1).for_each(|(&i, &v)| g[i] = v);
                in2.iter().zip(g2).for_each(|(&i, &v)| g[i] = v);
                out1.iter().zip(h1).for_each(|(&i, &v)| h[i] = v);
                out2.iter().zip(h2).for_each(|(&i, &v)| h[i] = v);
                let to = *index.entry((t1, t2)).or_insert_with(|| {
                    pairs.push((t1, t2));
                    delta.push(BTreeMap::new());
                    queue.push_back(pairs.len() - 1);
                    pairs.len() - 1
                });
                delta[p].insert(g, (to, h));
            }
        }
    }
    let states = pairs.iter().map(|&(a, b)| format!("{},{}", r1.states[a], r2.states[b])).collect();
    Dfst::new(inputs, outputs, states, 0, delta)
}

/// Information order on a single position: `<'` is below everything and a
/// primed value is below its unprimed continuation.
pub(crate) fn info_le(x: Val, y: Val) -> bool {
    x == y || x == Val::ExclEnd || (x.is_end() && x.data().is_some() && x.data() == y.data() && !y.is_end())
}

/// Index of the candidate below all others, if any.
pub(crate) fn least(candidates: &[Letter]) -> Option<usize> {
    (0..candidates.len())
        .find(|&i| candidates.iter().all(|c| candidates[i].iter().zip(c).all(|(&x, &y)| info_le(x, y))))
}

/// Feeds outputs back into equally named inputs. A letter over the
/// remaining inputs is accepted when some choice of fed-back values is
/// reproduced by the outputs; among several such choices the least one in
/// the information order is taken, matching the least fixed point.
pub fn closure(r: &Dfst) -> Result<Dfst, FragmentError> {
    let fed: Vec<String> = r.inputs.iter().filter(|n| r.outputs.binary_search(n).is_ok()).cloned().collect();
    let external: Vec<String> = r.inputs.iter().filter(|n| r.outputs.binary_search(n).is_err()).cloned().collect();
    let fed_in = positions(&fed, &r.inputs);
    let fed_out = positions(&fed, &r.outputs);
    let ext = positions(&external, &r.inputs);

    let mut index = HashMap::from([(r.initial, 0usize)]);
    let mut order = vec![r.initial];
    let mut delta = vec![BTreeMap::new()];
    let mut queue = VecDeque::from([0usize]);
    while let Some(p) = queue.pop_front() {
        let s = order[p];
        let mut groups: BTreeMap<Letter, Vec<(Letter, usize, &Letter)>> = BTreeMap::new();
        for (g, t, h) in r.transitions(s) {
            let guess: Letter = fed_in.iter().map(|&i| g[i]).collect();
            if fed_out.iter().zip(&guess).all(|(&o, &v)| h[o] == v) {
                groups.entry(ext.iter().map(|&i| g[i]).collect()).or_default().push((guess, t, h));
            }
        }
        for (g, options) in groups {
            let guesses: Vec<Letter> = options.iter().map(|o| o.0.clone()).collect();
            let Some(k) = least(&guesses) else {
                return Err(FragmentError::NoConsistentAssignment {
                    state: r.states[s].clone(),
                    letter: format_letter(&external, &g),
                    candidates: options.len(),
                });
            };
            let (_, t, h) = &options[k];
            let to = *index.entry(*t).or_insert_with(|| {
                order.push(*t);
                delta.push(BTreeMap::new());
                queue.push_back(order.len() - 1);
                order.len() - 1
            });
            delta[p].insert(g, (to, (*h).clone()));
        }
    }
    let states = order.iter().map(|&s| r.states[s].clone()).collect();
    Dfst::new(external, r.outputs.clone(), states, 0, delta)
}
