mod common;

use proptest::prelude::*;
use tessla::frontend::ast::{ExprKind, Item};
use tessla::frontend::expand::is_core;
use tessla::frontend::{
    compile, expand_macros, parse, pretty_program, stdlib, type_check, CheckError, CompileError, ExpandError,
};
use tessla::StreamType;

#[test]
fn golden_specs_reproduce_examples() {
    for name in common::GOLDEN {
        let g = common::load(name);
        assert_eq!(common::render(&common::run(&g)), g.expected, "{name}");
    }
}

#[test]
fn stdlib_is_macros_over_core_only() {
    let lib = stdlib();
    assert!(lib.defs().all(|d| d.name != "lift"));
    for name in ["merge", "const", "filter", "zero", "count", "period"] {
        assert!(lib.defs().any(|d| d.name == name), "{name} missing");
    }
}

#[test]
fn count_expands_to_a_single_recursive_equation() {
    let ast = parse("in x: Events[Unit]\ndef y := count(x)\nout y").unwrap();
    let e = expand_macros(&ast, &stdlib()).unwrap();
    let defs: Vec<_> = e.defs().collect();
    assert_eq!(defs.len(), 2);
    assert_eq!(defs[0].name, "count#1.c");
    assert!(
        matches!(&defs[1].body.kind, ExprKind::Ascribe(inner, _) if matches!(inner.kind, ExprKind::Ident(ref n) if n == "count#1.c"))
    );
    assert!(defs.iter().all(|d| is_core(&d.body)));
}

#[test]
fn macro_free_programs_are_unchanged() {
    let ast = parse("in x: Events[Num]\ndef y := x\nout y").unwrap();
    assert_eq!(expand_macros(&ast, &stdlib()).unwrap(), ast);
}

#[test]
fn period_uses_delay_lift_and_unit_only() {
    let spec = compile("def period := merge(const(5)(delay(period, unit)), 5)\nout period").unwrap();
    let text = spec.equations["period"].to_string();
    assert!(text.contains("delay(period, unit)"), "{text}");
    assert_eq!(spec.types["period"], StreamType::Num);
}

#[test]
fn expansion_errors() {
    let lib = stdlib();
    let ex = |s: &str| expand_macros(&parse(s).unwrap(), &lib);
    assert!(matches!(ex("def y := frobnicate(1)"), Err(ExpandError::UnknownMacro { .. })));
    assert!(matches!(ex("in x: Events[Unit]\ndef y := count(x, x)"), Err(ExpandError::ArityMismatch { .. })));
    assert!(matches!(ex("def f(a) := g(a)\ndef g(a) := f(a)\ndef y := f(1)"), Err(ExpandError::RecursiveMacro { .. })));
    assert!(matches!(ex("def y := last(1)"), Err(ExpandError::ArityMismatch { expected: 2, .. })));
}

#[test]
fn nested_macro_arguments_are_not_recursion() {
    let spec = compile("in x: Events[Unit]\ndef y := count(count(x))\nout y").unwrap();
    assert_eq!(spec.types["y"], StreamType::Num);
}

#[test]
fn type_checking() {
    let spec = compile("in temperature: Events[Num]\ndef low := temperature < 3\ndef high := temperature > 8\ndef unsafe := low || high").unwrap();
    assert_eq!(spec.types["low"], StreamType::Bool);
    assert_eq!(spec.types["unsafe"], StreamType::Bool);

    let err = compile("in x: Events[Num]\nin y: Events[Bool]\ndef bad := lift(&&)(x, y)").unwrap_err();
    assert!(matches!(err, CompileError::Check(CheckError::TypeError { .. })), "{err}");
    assert!(matches!(compile("def y := z"), Err(CompileError::Check(CheckError::UndefinedStream { .. }))));
    assert!(matches!(
        compile("in x: Events[Num]\ndef x := 1"),
        Err(CompileError::Check(CheckError::DuplicateDefinition { .. }))
    ));
    assert!(matches!(
        compile("in x: Events[Bool]\ndef d := delay(x, x)"),
        Err(CompileError::Check(CheckError::TypeError { expected: StreamType::Num, .. }))
    ));
    assert!(matches!(
        compile("in x: Events[Num]\nin c: Events[Num]\ndef f := filter(c, x)"),
        Err(CompileError::Check(CheckError::TypeError { .. }))
    ));
}

#[test]
fn outputs_keep_declaration_order() {
    let spec = compile("in x: Events[Num]\ndef a := x\ndef b := x\nout b\nout x\nout a").unwrap();
    assert_eq!(spec.outputs, vec!["b", "x", "a"]);
}

#[test]
fn lambda_lifts_and_value_parameters() {
    let spec = compile(
        "in x: Events[Num]\ndef scale(k, s) := lift(fn(v) => v * k)(s)\ndef y := scale(3, x)\ndef z := slift(-)(x, 1)\nout y",
    )
    .unwrap();
    assert_eq!(spec.types["y"], StreamType::Num);
    assert_eq!(spec.types["z"], StreamType::Num);
}

#[test]
fn expanded_programs_contain_no_calls() {
    for name in common::GOLDEN {
        let g = common::load(name);
        let e = expand_macros(&parse(&g.source).unwrap(), &stdlib()).unwrap();
        for item in &e.items {
            if let Item::Def(d) = item {
                assert!(is_core(&d.body), "{name}: {}", d.name);
            }
        }
        type_check(&e).unwrap();
    }
}

fn ident() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["a", "b", "x", "y1", "sig"]).prop_map(String::from)
}

fn expr_src() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        ident(),
        (0u32..100).prop_map(|n| n.to_string()),
        Just("true".to_string()),
        Just("()".to_string()),
        Just("2.5".to_string()),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        let op = prop::sample::select(vec!["+", "-", "*", "/", "<", "<=", "==", "!=", "&&", "||"]);
        prop_oneof![
            (inner.clone(), op, inner.clone()).prop_map(|(a, o, b)| format!("({a} {o} {b})")),
            inner.clone().prop_map(|a| format!("!{a}")),
            inner.clone().prop_map(|a| format!("- {a}")),
            (ident(), prop::collection::vec(inner.clone(), 1..3))
                .prop_map(|(f, args)| format!("{f}({})", args.join(", "))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{{\n def t := {a}\n ({b})\n}}")),
            (inner.clone(), inner.clone(), inner)
                .prop_map(|(c, a, b)| format!("lift(fn(p, q) => if {c} then {a} else {b})(p, q)")),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]
    #[test]
    fn pretty_print_round_trips(es in prop::collection::vec(expr_src(), 1..4)) {
        let src: String = es.iter().enumerate().map(|(i, e)| format!("def d{i} := {e}\n")).collect();
        let ast = parse(&src).unwrap();
        let printed = pretty_program(&ast);
        let again = parse(&printed).unwrap();
        prop_assert_eq!(pretty_program(&again), printed);
    }
}
