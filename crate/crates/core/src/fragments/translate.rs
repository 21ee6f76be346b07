//! Recognition of the boolean fragment and its translation to one
//! transducer, built by composing the equation machines and closing the
//! feedback on the fly.

use std::collections::{BTreeMap, HashMap, VecDeque};

use indexmap::IndexMap;

use super::dfst::{least, Dfst};
use super::machines::{domain, product, BoolEquation, BoolOp, MAX_LETTERS};
use super::val::{format_letter, Letter, Val};
use super::FragmentError;
use crate::ir::{CoreExpr, CoreSpec, StreamType};
use crate::term::BinOp;
use crate::types::infer_types;

/// A specification rewritten into single-operator boolean equations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoolSpec {
    /// Input names, sorted.
    pub inputs: Vec<String>,
    pub equations: Vec<BoolEquation>,
    /// Types of inputs and of all equations, auxiliary ones included.
    pub types: IndexMap<String, StreamType>,
    /// Observable names, sorted: the declared outputs, or every original
    /// equation when none are declared.
    pub outputs: Vec<String>,
}

fn not_bool(msg: impl Into<String>) -> FragmentError {
    FragmentError::NotBoolFragment(msg.into())
}

/// Operands of `slift(>=)(time(x), time(y))`.
fn ge_operands(e: &CoreExpr) -> Option<(&CoreExpr, &CoreExpr)> {
    let CoreExpr::Lift(_, args) = e else { return None };
    let [CoreExpr::Lift(_, xa), CoreExpr::Lift(_, ya)] = args.as_slice() else { return None };
    let (Some(CoreExpr::Time(x)), Some(CoreExpr::Time(y))) = (xa.first(), ya.first()) else { return None };
    let pattern = CoreExpr::slift_op(BinOp::Ge, CoreExpr::Time(x.clone()), CoreExpr::Time(y.clone()));
    (*e == pattern).then_some((&**x, &**y))
}

enum Node {
    Nil,
    Unit,
    Copy,
    Lift(crate::term::FunctionTerm),
    Last,
    Ge,
}

struct Flattener<'a> {
    spec: &'a CoreSpec,
    counter: usize,
    shared: HashMap<CoreExpr, String>,
    out: Vec<(String, Node, Vec<String>)>,
}

impl Flattener<'_> {
    fn node(&mut self, e: &CoreExpr) -> Result<(Node, Vec<String>), FragmentError> {
        if let Some((x, y)) = ge_operands(e) {
            return Ok((Node::Ge, vec![self.as_var(x)?, self.as_var(y)?]));
        }
        Ok(match e {
            CoreExpr::Nil => (Node::Nil, vec![]),
            CoreExpr::Unit => (Node::Unit, vec![]),
            CoreExpr::Var(x) => (Node::Copy, vec![x.clone()]),
            CoreExpr::Lift(f, args) => {
                let args = args.iter().map(|a| self.as_var(a)).collect::<Result<_, _>>()?;
                (Node::Lift(f.clone()), args)
            }
            CoreExpr::Last(a, b) => (Node::Last, vec![self.as_var(a)?, self.as_var(b)?]),
            CoreExpr::Time(_) => return Err(not_bool(format!("`{e}` is not a boolean stream"))),
            CoreExpr::Delay(..) => return Err(not_bool("delay is not supported")),
        })
    }

    fn as_var(&mut self, e: &CoreExpr) -> Result<String, FragmentError> {
        if let CoreExpr::Var(x) = e {
            return Ok(x.clone());
        }
        if let Some(n) = self.shared.get(e) {
            return Ok(n.clone());
        }
        let (node, args) = self.node(e)?;
        let name = loop {
            let n = format!("_b{}", self.counter);
            self.counter += 1;
            if !self.spec.is_defined(&n) {
                break n;
            }
        };
        self.shared.insert(e.clone(), name.clone());
        self.out.push((name.clone(), node, args));
        Ok(name)
    }
}

fn is_boolean(t: StreamType) -> bool {
    matches!(t, StreamType::Bool | StreamType::Unit)
}

impl BoolSpec {
    /// Works on the unflattened specification so that
    /// `slift(>=)(time(x), time(y))` is still recognizable as one operator.
    pub fn from_spec(spec: &CoreSpec) -> Result<BoolSpec, FragmentError> {
        spec.validate().map_err(|e| not_bool(e.to_string()))?;
        for (name, t) in &spec.inputs {
            if !is_boolean(*t) {
                return Err(not_bool(format!("input `{name}` has type {t}")));
            }
        }
        let mut fl = Flattener { spec, counter: 0, shared: HashMap::new(), out: Vec::new() };
        for (name, e) in &spec.equations {
            let (node, args) = fl.node(e)?;
            fl.out.push((name.clone(), node, args));
        }
        let mut typing = CoreSpec::new();
        typing.inputs = spec.inputs.clone();
        typing.types = spec.types.clone();
        for (name, node, args) in &fl.out {
            let v = |i: usize| CoreExpr::var(args[i].clone());
            let e = match node {
                Node::Nil => CoreExpr::Nil,
                Node::Unit => CoreExpr::Unit,
                Node::Copy => v(0),
                Node::Lift(f) => CoreExpr::lift(f.clone(), (0..args.len()).map(v).collect()),
                Node::Last => CoreExpr::last(v(0), v(1)),
                Node::Ge => CoreExpr::slift_op(BinOp::Ge, CoreExpr::time(v(0)), CoreExpr::time(v(1))),
            };
            typing.equations.insert(name.clone(), e);
        }
        let mut types = spec.inputs.clone();
        types.extend(infer_types(&typing).map_err(|e| not_bool(e.to_string()))?);
        if let Some((name, t)) = types.iter().find(|(_, t)| !is_boolean(**t)) {
            return Err(not_bool(format!("`{name}` has type {t}")));
        }
        let equations = fl
            .out
            .into_iter()
            .map(|(name, node, args)| {
                let op = match node {
                    Node::Nil => BoolOp::Nil,
                    Node::Unit => BoolOp::Unit,
                    Node::Copy => BoolOp::Copy,
                    Node::Lift(f) => {
                        let unit_args = args.iter().map(|a| types[a.as_str()] == StreamType::Unit).collect();
                        BoolOp::Lift { f, unit_args }
                    }
                    Node::Last => BoolOp::Last,
                    Node::Ge => BoolOp::SliftGe,
                };
                BoolEquation { name, op, args }
            })
            .collect();
        let mut inputs: Vec<String> = spec.inputs.keys().cloned().collect();
        inputs.sort();
        let mut outputs: Vec<String> =
            if spec.outputs.is_empty() { spec.equations.keys().cloned().collect() } else { spec.outputs.clone() };
        outputs.sort();
        outputs.dedup();
        Ok(BoolSpec { inputs, equations, types, outputs })
    }
}

/// Whether every equation lies in the boolean fragment
/// `nil | unit | x | lift(f)(e, ..) | slift(>=)(time(e), time(e)) | last(e, e)`
/// over Bool and Unit streams.
pub fn is_bool_fragment(spec: &CoreSpec) -> bool {
    BoolSpec::from_spec(spec).is_ok()
}

enum Source {
    Input(usize),
    Eq(usize),
}

/// Evaluation plan for one composite step.
struct Plan {
    eqs: Vec<BoolEquation>,
    args: Vec<Vec<Source>>,
    /// Equations whose value is guessed and then checked.
    guessed: Vec<usize>,
    /// Guessed equations on an undelayed cycle: these must be unique.
    strict: bool,
    /// Remaining equations in dependency order.
    order: Vec<usize>,
    input_units: Vec<bool>,
    guess_units: Vec<bool>,
    outputs: Vec<Source>,
}

impl Plan {
    fn new(b: &BoolSpec) -> Result<Plan, FragmentError> {
        let eq_index: HashMap<&str, usize> =
            b.equations.iter().enumerate().map(|(i, e)| (e.name.as_str(), i)).collect();
        let in_index: HashMap<&str, usize> = b.inputs.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let args: Vec<Vec<Source>> = b
            .equations
            .iter()
            .map(|e| {
                e.args
                    .iter()
                    .map(|a| match eq_index.get(a.as_str()) {
                        Some(&i) => Source::Eq(i),
                        None => Source::Input(in_index[a.as_str()]),
                    })
                    .collect()
            })
            .collect();
        let n = b.equations.len();
        // Undelayed dependencies: j reads i at the current position.
        let mut succ = vec![Vec::new(); n];
        let mut delayed_target = vec![false; n];
        for (j, e) in b.equations.iter().enumerate() {
            for (k, src) in args[j].iter().enumerate() {
                if let Source::Eq(i) = *src {
                    if e.op == BoolOp::Last && k == 0 {
                        delayed_target[i] = true;
                    } else {
                        succ[i].push(j);
                    }
                }
            }
        }
        let on_cycle: Vec<bool> = (0..n)
            .map(|i| {
                let mut seen = vec![false; n];
                let mut stack = succ[i].clone();
                while let Some(j) = stack.pop() {
                    if j == i {
                        return true;
                    }
                    if !std::mem::replace(&mut seen[j], true) {
                        stack.extend(&succ[j]);
                    }
                }
                false
            })
            .collect();
        let guessed: Vec<usize> = (0..n).filter(|&i| delayed_target[i] || on_cycle[i]).collect();
        let mut indeg = vec![0usize; n];
        for (i, targets) in succ.iter().enumerate() {
            if !guessed.contains(&i) {
                for &j in targets {
                    indeg[j] += 1;
                }
            }
        }
        let mut ready: VecDeque<usize> = (0..n).filter(|&i| indeg[i] == 0 && !guessed.contains(&i)).collect();
        let mut order = Vec::new();
        while let Some(i) = ready.pop_front() {
            order.push(i);
            for &j in &succ[i] {
                indeg[j] -= 1;
                if indeg[j] == 0 && !guessed.contains(&j) {
                    ready.push_back(j);
                }
            }
        }
        debug_assert_eq!(order.len() + guessed.len(), n);
        let unit = |name: &str| b.types.get(name) == Some(&StreamType::Unit);
        Ok(Plan {
            input_units: b.inputs.iter().map(|n| unit(n)).collect(),
            guess_units: guessed.iter().map(|&i| unit(&b.equations[i].name)).collect(),
            strict: guessed.iter().any(|&i| on_cycle[i]),
            outputs: b
                .outputs
                .iter()
                .map(|o| match eq_index.get(o.as_str()) {
                    Some(&i) => Source::Eq(i),
                    None => Source::Input(in_index[o.as_str()]),
                })
                .collect(),
            eqs: b.equations.clone(),
            args,
            guessed,
            order,
        })
    }

    /// Evaluates all machines for one external letter and one guess.
    /// Returns the successor states and values if the guess is reproduced.
    fn eval(&self, states: &[u8], letter: &[Val], guess: &[Val]) -> Option<(Vec<u8>, Vec<Val>)> {
        let n = self.eqs.len();
        let mut vals = vec![Val::Bot; n];
        let mut next = states.to_vec();
        for (k, &i) in self.guessed.iter().enumerate() {
            vals[i] = guess[k];
        }
        let run = |i: usize, vals: &[Val], next: &mut [u8]| {
            let args: Vec<Val> = self.args[i]
                .iter()
                .map(|s| match *s {
                    Source::Input(j) => letter[j],
                    Source::Eq(j) => vals[j],
                })
                .collect();
            let (t, v) = self.eqs[i].op.step(states[i], &args);
            next[i] = t;
            v
        };
        for &i in &self.order {
            vals[i] = run(i, &vals, &mut next);
        }
        for (k, &i) in self.guessed.iter().enumerate() {
            if run(i, &vals, &mut next) != guess[k] {
                return None;
            }
        }
        Some((next, vals))
    }
}

/// Builds the transducer of a boolean specification. Only composite states
/// reachable from the initial one are constructed; inputs that have ended
/// only carry `bot` filler, and unit inputs never carry `false`.
pub fn to_dfst(spec: &CoreSpec) -> Result<Dfst, FragmentError> {
    let b = BoolSpec::from_spec(spec)?;
    let plan = Plan::new(&b)?;
    let ni = b.inputs.len();
    // Composite state: machine states, then one ended flag per input.
    let start: Vec<u8> = vec![0; plan.eqs.len() + ni];
    let mut index = HashMap::from([(start.clone(), 0usize)]);
    let mut order = vec![start];
    let mut delta = vec![BTreeMap::new()];
    let mut queue = VecDeque::from([0usize]);
    while let Some(p) = queue.pop_front() {
        let key = order[p].clone();
        let (states, ended) = key.split_at(plan.eqs.len());
        let domains: Vec<Vec<Val>> =
            (0..ni).map(|i| if ended[i] == 1 { vec![Val::Bot] } else { domain(plan.input_units[i]) }).collect();
        if domains
            .iter()
            .map(Vec::len)
            .try_fold(1usize, |a, n| a.checked_mul(n).filter(|&x| x <= MAX_LETTERS))
            .is_none()
        {
            return Err(FragmentError::AlphabetTooLarge("too many input letters".into()));
        }
        let guess_domains: Vec<Vec<Val>> = plan
            .guessed
            .iter()
            .zip(&plan.guess_units)
            .map(|(&i, &u)| if plan.eqs[i].op.is_sink(states[i]) { vec![Val::Bot] } else { domain(u) })
            .collect();
        let guesses = product(&guess_domains);
        for letter in product(&domains) {
            let mut found: Vec<(Letter, Vec<u8>, Vec<Val>)> = Vec::new();
            for g in &guesses {
                if let Some((next, vals)) = plan.eval(states, &letter, g) {
                    found.push((g.clone(), next, vals));
                }
            }
            let choice = if plan.strict && found.len() != 1 {
                None
            } else {
                least(&found.iter().map(|f| f.0.clone()).collect::<Vec<_>>())
            };
            let Some(k) = choice else {
                return Err(FragmentError::NoConsistentAssignment {
                    state: label(&plan, &b.inputs, &key),
                    letter: format_letter(&b.inputs, &letter),
                    candidates: found.len(),
                });
            };
            let (_, next, vals) = found.swap_remove(k);
            let mut target = next;
            target.extend((0..ni).map(|i| u8::from(ended[i] == 1 || letter[i].is_end())));
            let out: Letter = plan
                .outputs
                .iter()
                .map(|s| match *s {
                    Source::Input(j) => letter[j],
                    Source::Eq(j) => vals[j],
                })
                .collect();
            let to = *index.entry(target.clone()).or_insert_with(|| {
                order.push(target);
                delta.push(BTreeMap::new());
                queue.push_back(order.len() - 1);
                order.len() - 1
            });
            delta[p].insert(letter, (to, out));
        }
    }
    let states = order.iter().map(|k| label(&plan, &b.inputs, k)).collect();
    Dfst::new(b.inputs.clone(), b.outputs.clone(), states, 0, delta)
}

fn label(plan: &Plan, inputs: &[String], key: &[u8]) -> String {
    let (states, ended) = key.split_at(plan.eqs.len());
    let mut s: Vec<&str> = plan.eqs.iter().zip(states).map(|(e, &q)| e.op.state_name(q)).collect();
    if s.is_empty() {
        s.push("s");
    }
    let mut out = s.join(",");
    let done: Vec<&str> = inputs.iter().zip(ended).filter(|(_, &e)| e == 1).map(|(n, _)| n.as_str()).collect();
    if !done.is_empty() {
        out.push(';');
        out.push_str(&done.join("+"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::compile;

    #[test]
    fn recognizes_fragment() {
        let ok = |src: &str| is_bool_fragment(&compile(src).unwrap());
        assert!(ok("in a: Events[Bool]\nin b: Events[Bool]\ndef z := a && b\nout z"));
        assert!(ok("in a: Events[Bool]\nin b: Events[Unit]\ndef z := time(a) >= time(b)\nout z"));
        assert!(ok("in a: Events[Bool]\ndef z := last(a, a)\nout z"));
        assert!(!ok("in a: Events[Unit]\ndef z := delay(const(1, a), a)\nout z"));
        assert!(!ok("in a: Events[Num]\ndef z := a > 1\nout z"));
        assert!(!ok("in a: Events[Bool]\ndef z := time(a) + 1 >= time(a)\nout z"));
    }

    #[test]
    fn nested_operands_become_auxiliary_equations() {
        let spec = compile("in a: Events[Bool]\nin b: Events[Bool]\ndef z := last(a && b, !a)\nout z").unwrap();
        let b = BoolSpec::from_spec(&spec).unwrap();
        assert!(b.equations.len() >= 3);
        assert_eq!(b.outputs, vec!["z"]);
    }

    #[test]
    fn unit_equation() {
        let spec = compile("def z := unit\nout z").unwrap();
        let d = to_dfst(&spec).unwrap();
        assert_eq!(d.state_count(), 2);
        let out = super::super::run_dfst(&d, &[vec![], vec![], vec![]]).unwrap();
        assert_eq!(out, vec![vec![Val::True], vec![Val::Bot], vec![Val::Bot]]);
    }

    #[test]
    fn undelayed_self_loop_is_rejected() {
        let mut spec = CoreSpec::new();
        spec.add_equation("a", CoreExpr::lift(crate::term::FunctionTerm::negation(), vec![CoreExpr::var("a")]))
            .unwrap();
        spec.types.insert("a".into(), StreamType::Bool);
        assert!(matches!(to_dfst(&spec), Err(FragmentError::NoConsistentAssignment { .. })));
    }
}
