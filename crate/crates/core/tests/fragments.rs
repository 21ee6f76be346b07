mod common;

use std::collections::HashMap;

use indexmap::IndexMap;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tessla::engine::Streams;
use tessla::fragments::*;
use tessla::ir::{CoreExpr, CoreSpec, StreamType};
use tessla::term::FunctionTerm;
use tessla::{EventStream, Progress, Time, Value};

use common::boolean::*;

#[test]
fn transducers_agree_with_fixed_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (name, src) in BOOL_CORPUS {
        let s = spec(src);
        assert!(is_bool_fragment(&s), "{name}");
        let d = to_dfst(&s).unwrap_or_else(|e| panic!("{name}: {e}"));
        for _ in 0..200 {
            let inputs = random_inputs(&mut rng, &s);
            let want = reference(&s, d.outputs(), &inputs);
            let got = transduce(&d, &inputs);
            assert_eq!(got, want, "{name} on {inputs:?}");
        }
    }
}

#[test]
fn specific_runs() {
    use Val::*;
    let d = to_dfst(&spec(BOOL_CORPUS[1].1)).unwrap();
    assert_eq!(run_dfst(&d, &[vec![True, True]]).unwrap(), vec![vec![True]]);
    assert_eq!(run_dfst(&d, &[vec![Bot, Bot]]).unwrap(), vec![vec![Bot]]);
    assert_eq!(run_dfst(&d, &[vec![True, False], vec![Bot, Bot]]).unwrap(), vec![vec![False], vec![Bot]]);
    assert!(run_dfst(&d, &[]).unwrap().is_empty());
    assert!(matches!(run_dfst(&d, &[vec![True]]), Err(FragmentError::LetterNotInAlphabet { .. })));
    // After an input ended only filler is accepted.
    assert!(run_dfst(&d, &[vec![TrueEnd, True], vec![True, True]]).is_err());
}

#[test]
fn slift_example_streams_through_last() {
    let s = spec(BOOL_CORPUS[2].1);
    let d = to_dfst(&s).unwrap();
    let t = Time::from_int;
    let a = EventStream::new(
        vec![(t(0), Value::Bool(true)), (t(2), Value::Bool(false)), (t(5), Value::Bool(true))],
        Progress::Inclusive(t(7)),
    )
    .unwrap();
    let b = EventStream::new(
        vec![
            (t(1), Value::Bool(true)),
            (t(2), Value::Bool(true)),
            (t(3), Value::Bool(false)),
            (t(6), Value::Bool(true)),
        ],
        Progress::Infinite,
    )
    .unwrap();
    let inputs: Streams = [("a".to_string(), a.clone()), ("b".to_string(), b.clone())].into_iter().collect();
    let got = transduce(&d, &inputs);
    let z = tessla::engine::ops::op_last(&a, &b);
    let times = beta_times(inputs.values());
    assert_eq!(got, encode_beta_at([("z", &z)], &times).unwrap().letters);
}

#[test]
fn equivalence_matches_brute_force() {
    let all = corpus_dfsts();
    let mut compared = 0;
    for (n1, d1) in &all {
        for (n2, d2) in &all {
            let Ok(result) = dfst_equivalent(d1, d2) else { continue };
            compared += 1;
            let brute = brute_force(d1, d2, 6);
            match result {
                Equivalence::Equivalent => assert_eq!(brute, None, "{n1} vs {n2}"),
                Equivalence::Counterexample { word, left, right } => {
                    assert_ne!(left, right);
                    assert_eq!(run_dfst(d1, &word).unwrap(), left);
                    if word.len() <= 6 {
                        assert_eq!(brute, Some(word.len()), "{n1} vs {n2}");
                    }
                }
            }
        }
    }
    assert!(compared >= all.len());
}

#[test]
fn de_morgan_and_negation() {
    let a = to_dfst(&spec(BOOL_CORPUS[1].1)).unwrap();
    let b =
        to_dfst(&spec("in a: Events[Bool]\nin b: Events[Bool]\ndef z := lift(fn(x, y) => !(!x || !y))(a, b)\nout z"))
            .unwrap();
    assert!(dfst_equivalent(&a, &b).unwrap().is_equivalent());
    assert_eq!(brute_force(&a, &b, 4), None);
    let slifted = to_dfst(&spec("in a: Events[Bool]\nin b: Events[Bool]\ndef z := !(!a || !b)\nout z")).unwrap();
    let direct = to_dfst(&spec(BOOL_CORPUS[0].1)).unwrap();
    assert!(dfst_equivalent(&slifted, &direct).unwrap().is_equivalent());

    let x = to_dfst(&spec("in a: Events[Bool]\ndef z := a\nout z")).unwrap();
    let y = to_dfst(&spec(BOOL_CORPUS[4].1)).unwrap();
    match dfst_equivalent(&x, &y).unwrap() {
        Equivalence::Counterexample { word, .. } => assert_eq!(word.len(), 1),
        Equivalence::Equivalent => panic!("a and !a are different"),
    }
}

/// `t := !l`, `l := last(t, a)`, built by hand.
fn toggle_core() -> CoreSpec {
    let mut s = CoreSpec::new();
    s.add_input("a", StreamType::Unit).unwrap();
    s.add_equation("t", CoreExpr::lift(FunctionTerm::negation(), vec![CoreExpr::var("l")])).unwrap();
    s.add_equation("l", CoreExpr::last(CoreExpr::var("t"), CoreExpr::var("a"))).unwrap();
    s.types.insert("t".into(), StreamType::Bool);
    s.types.insert("l".into(), StreamType::Bool);
    s
}

#[test]
fn explicit_composition_and_closure() {
    let s = toggle_core();
    let b = BoolSpec::from_spec(&s).unwrap();
    let machines: Vec<Dfst> = b.equations.iter().map(|e| equation_dfst(e, &b.types).unwrap()).collect();
    let product = machines[1..].iter().fold(machines[0].clone(), |acc, m| compose_parallel(&acc, m).unwrap());
    assert_eq!(product.inputs(), ["a", "l", "t"]);
    let closed = closure(&product).unwrap();
    assert_eq!(closed.inputs(), ["a"]);
    assert_eq!(closed.outputs(), ["l", "t"]);
    let direct = to_dfst(&s).unwrap();
    assert!(dfst_equivalent(&closed, &direct).unwrap().is_equivalent());

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let inputs = random_inputs(&mut rng, &s);
        assert_eq!(transduce(&closed, &inputs), reference(&s, closed.outputs(), &inputs));
    }
}

#[test]
fn closure_without_feedback_is_the_product() {
    let b = BoolSpec::from_spec(&spec(BOOL_CORPUS[4].1)).unwrap();
    let m = equation_dfst(&b.equations[0], &b.types).unwrap();
    assert_eq!(closure(&m).unwrap(), m);
}

#[test]
fn undelayed_feedback() {
    let mut s = CoreSpec::new();
    s.add_equation("a", CoreExpr::lift(FunctionTerm::negation(), vec![CoreExpr::var("a")])).unwrap();
    s.types.insert("a".into(), StreamType::Bool);
    assert!(matches!(to_dfst(&s), Err(FragmentError::NoConsistentAssignment { .. })));
    // The explicit closure settles on the least solution: nothing is known.
    let b = BoolSpec::from_spec(&s).unwrap();
    let closed = closure(&equation_dfst(&b.equations[0], &b.types).unwrap()).unwrap();
    assert_eq!(run_dfst(&closed, &[vec![]]).unwrap(), vec![vec![Val::ExclEnd]]);
}

#[test]
fn dfst_text_round_trip() {
    for (name, d) in corpus_dfsts() {
        assert_eq!(Dfst::parse_text(&d.to_text()).unwrap(), d, "{name}");
    }
}

#[test]
fn rejects_outside_fragment() {
    assert!(!is_bool_fragment(&spec("in x: Events[Num]\ndef y := x + 1\nout y")));
    assert!(!is_bool_fragment(&spec("in x: Events[Unit]\ndef y := delay(const(1, x), x)\nout y")));
    assert!(matches!(
        to_dfst(&spec("in x: Events[Num]\ndef y := x > 1\nout y")),
        Err(FragmentError::NotBoolFragment(_))
    ));
}

fn stream_strategy(unit: bool) -> impl Strategy<Value = EventStream> {
    (proptest::collection::btree_map(0u64..15, any::<bool>(), 0..8), 0u8..3, 0u64..4).prop_map(
        move |(evs, kind, extra)| {
            let last = evs.keys().next_back().copied();
            let events: Vec<(Time, Value)> = evs
                .into_iter()
                .map(|(t, b)| (Time::from_int(t), if unit { Value::Unit } else { Value::Bool(b) }))
                .collect();
            let progress = match (kind, last) {
                (0, _) => Progress::Infinite,
                (1, l) => Progress::Inclusive(Time::from_int(l.unwrap_or(0) + extra)),
                (_, l) => Progress::Exclusive(Time::from_int(l.map_or(0, |l| l + 1) + extra)),
            };
            EventStream::new(events, progress).unwrap()
        },
    )
}

proptest! {
    #[test]
    fn beta_round_trip(a in stream_strategy(false), b in stream_strategy(true), c in stream_strategy(false)) {
        let streams = [("a", &a), ("b", &b), ("c", &c)];
        let w = encode_beta(streams).unwrap();
        prop_assert_eq!(w.times[0].clone(), Time::zero());
        let types: IndexMap<String, StreamType> = [("b".to_string(), StreamType::Unit)].into_iter().collect();
        let back = decode_beta(&w, &types).unwrap();
        prop_assert_eq!(&back["a"], &a);
        prop_assert_eq!(&back["b"], &b);
        prop_assert_eq!(&back["c"], &c);
    }

    #[test]
    fn alpha_round_trip(word in proptest::collection::vec(0usize..3, 0..12)) {
        let sigma: Vec<String> = ["p", "q", "r"].iter().map(|s| s.to_string()).collect();
        let streams = encode_alpha(&word, &sigma);
        prop_assert_eq!(decode_alpha(&streams, &sigma).unwrap(), word);
    }
}

#[test]
fn alpha_and_beta_examples() {
    let sigma = vec!["a".to_string(), "b".to_string()];
    let s = encode_alpha(&[0], &sigma);
    assert_eq!(s["a"].events(), &[(Time::zero(), Value::Bool(true))]);
    assert_eq!(s["b"].events(), &[(Time::zero(), Value::Bool(false))]);
    let counts: HashMap<_, _> = s.iter().map(|(n, st)| (n.clone(), st.len())).collect();
    assert_eq!(counts["a"], 1);
}
