//! Equivalence of transducers by search of the synchronized product.

use std::collections::{HashMap, VecDeque};

use super::dfst::{run_dfst, Dfst};
use super::val::Letter;
use super::FragmentError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Equivalence {
    Equivalent,
    /// A shortest input word on which the outputs differ, with both runs.
    Counterexample {
        word: Vec<Letter>,
        left: Vec<Letter>,
        right: Vec<Letter>,
    },
}

impl Equivalence {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, Equivalence::Equivalent)
    }
}

/// Compares outputs on every word both transducers accept. Breadth-first,
/// so a returned counterexample is as short as possible.
type Pair = (usize, usize);

pub fn dfst_equivalent(r1: &Dfst, r2: &Dfst) -> Result<Equivalence, FragmentError> {
    if r1.inputs() != r2.inputs() || r1.outputs() != r2.outputs() {
        return Err(FragmentError::AlphabetMismatch);
    }
    let start = (r1.initial(), r2.initial());
    // Product state reached from which predecessor, by which letter.
    let mut parent: HashMap<Pair, Option<(Pair, Letter)>> = HashMap::from([(start, None)]);
    let mut queue = VecDeque::from([start]);
    while let Some((s1, s2)) = queue.pop_front() {
        for (g, t1, h1) in r1.transitions(s1) {
            let Some((t2, h2)) = r2.step(s2, g) else { continue };
            if h1 != h2 {
                let mut word = vec![g.clone()];
                let mut at = (s1, s2);
                while let Some(Some((prev, letter))) = parent.get(&at) {
                    word.push(letter.clone());
                    at = *prev;
                }
                word.reverse();
                let left = run_dfst(r1, &word)?;
                let right = run_dfst(r2, &word)?;
                return Ok(Equivalence::Counterexample { word, left, right });
            }
            if let std::collections::hash_map::Entry::Vacant(e) = parent.entry((t1, t2)) {
                e.insert(Some(((s1, s2), g.clone())));
                queue.push_back((t1, t2));
            }
        }
    }
    Ok(Equivalence::Equivalent)
}
