mod common;

use std::collections::BTreeSet;
use std::path::PathBuf;

use claimcheck_datalog::{
    evaluate, export_external, import_external, parse_program, Atom, DatalogError, Fact, Program, Term, Value,
};
use common::{naive, random_program, Shape};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn fig8() -> Program {
    parse_program(&std::fs::read_to_string(fixture("fig8.dl")).unwrap()).unwrap()
}

fn db_facts(p: &Program) -> BTreeSet<Fact> {
    evaluate(p).facts().collect()
}

#[test]
fn fig8_loads_with_expected_shape() {
    let p = fig8();
    assert_eq!(p.declarations.len(), 6);
    assert_eq!(p.rules.len(), 4);
    assert_eq!(p.facts.len(), 5);
}

#[test]
fn fig8_is_unsafe_through_d() {
    let db = evaluate(&fig8());
    let unsafe_ = db.query(&Atom::new("isUnsafe", vec![])).unwrap();
    assert_eq!(unsafe_, vec![Default::default()]);
    let nz: Vec<_> = db.tuples("nonZeroInputToOutputFn").unwrap().collect();
    assert_eq!(nz, vec![&[Value::sym("d")][..]]);
    // The copy on line 4 propagates the zero of `a` to `c`.
    assert!(db.contains(&Fact::new("defZero", vec!["c".into(), 4.into()])));
}

#[test]
fn fig8_explanation_leaves() {
    let p = fig8();
    let db = evaluate(&p);
    let tree = db.explain(&Fact::new("isUnsafe", vec![])).unwrap();
    assert!(tree.replay(&p, &db));
    let leaves: BTreeSet<String> = tree.leaves().iter().map(|f| f.to_string()).collect();
    let expected: BTreeSet<String> = ["outputFn(\"d\", 3)", "defNonZero(\"d\", 2)"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    assert_eq!(leaves, expected);
}

#[test]
fn fig8_export_layout() {
    let p = fig8();
    let dir = tempfile::tempdir().unwrap();
    export_external(&p, dir.path()).unwrap();
    let mut files = 0;
    let mut rows = 0;
    for e in std::fs::read_dir(dir.path()).unwrap() {
        let path = e.unwrap().path();
        if path.extension().is_some_and(|x| x == "facts") {
            files += 1;
            rows += std::fs::read_to_string(&path).unwrap().lines().count();
        }
    }
    assert_eq!((files, rows), (4, 5));
    assert_eq!(import_external(dir.path()).unwrap(), p);
}

#[test]
fn explain_input_is_leaf() {
    let db = evaluate(&fig8());
    let f = Fact::new("copy", vec!["c".into(), "a".into(), 4.into()]);
    let tree = db.explain(&f).unwrap();
    assert!(tree.children.is_empty() && tree.rule.is_none());
}

#[test]
fn facts_only_program_evaluates_to_its_facts() {
    let p = parse_program("a(1). b(\"x\", 2). b(\"y\", 3).").unwrap();
    assert_eq!(db_facts(&p), p.facts);
}

#[test]
fn query_on_empty_relation() {
    let db = evaluate(&parse_program(".decl p(x: number)").unwrap());
    assert!(db.query(&Atom::new("p", vec![Term::var("X")])).unwrap().is_empty());
}

#[test]
fn pretty_print_round_trip() {
    let p = parse_program("p(1). q(x) :- p(x), x < 2.").unwrap();
    assert_eq!(parse_program(&p.to_string()).unwrap(), p);
    assert_eq!(fig8(), parse_program(&fig8().to_string()).unwrap());
}

#[test]
fn unstratifiable_program_is_rejected() {
    let err = parse_program("e(1). win(x) :- e(x), !lose(x). lose(x) :- e(x), win(x).").unwrap_err();
    assert!(matches!(err, DatalogError::UnstratifiableNegation(_)), "{err}");
}

#[test]
fn semi_naive_agrees_with_naive_on_200_programs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..200 {
        let p = random_program(&mut rng, &Shape { negation: false });
        assert_eq!(db_facts(&p), naive(&p), "program {i}:\n{p}");
    }
}

#[test]
fn stratified_programs_agree_with_naive() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for i in 0..100 {
        let p = random_program(&mut rng, &Shape { negation: true });
        assert_eq!(db_facts(&p), naive(&p), "program {i}:\n{p}");
    }
}

#[test]
fn every_derived_fact_replays_in_50_programs() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let p = random_program(&mut rng, &Shape { negation: true });
        let db = evaluate(&p);
        for f in db.facts() {
            let tree = db.explain(&f).unwrap();
            assert_eq!(tree.fact, f);
            assert!(tree.replay(&p, &db), "{f} in\n{p}\n{tree}");
        }
    }
}

#[test]
fn export_round_trip_on_20_programs() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..20 {
        let p = random_program(&mut rng, &Shape { negation: true });
        let dir = tempfile::tempdir().unwrap();
        export_external(&p, dir.path()).unwrap();
        let q = import_external(dir.path()).unwrap();
        assert_eq!(q.facts, p.facts);
        assert_eq!(q.rules, p.rules);
        assert_eq!(q.declarations, p.declarations);
    }
}

#[test]
fn query_matches_linear_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut src = String::new();
    for _ in 0..60 {
        let (a, b, c) = (rng.gen_range(0..4), rng.gen_range(0..4), rng.gen_range(0..4));
        src.push_str(&format!("t({a}, {b}, {c}).\n"));
    }
    let p = parse_program(&src).unwrap();
    let db = evaluate(&p);
    for k in 0..4 {
        let got = db
            .query(&Atom::new("t", vec![Term::var("X"), Term::int(k), Term::var("Z")]))
            .unwrap();
        let want: Vec<(Value, Value)> = p
            .facts
            .iter()
            .filter(|f| f.values[1] == Value::Int(k))
            .map(|f| (f.values[0].clone(), f.values[2].clone()))
            .collect();
        let got: Vec<(Value, Value)> = got.into_iter().map(|b| (b["X"].clone(), b["Z"].clone())).collect();
        assert_eq!(got, want);
    }
}

#[test]
fn evaluation_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let p = random_program(&mut rng, &Shape { negation: true });
        assert_eq!(evaluate(&p), evaluate(&p.clone()));
    }
}

proptest! {
    #[test]
    fn adding_facts_never_removes_derivations(seed in any::<u64>(), extra in proptest::collection::vec((0i64..4, 0i64..4), 0..10)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_program(&mut rng, &Shape { negation: false });
        let mut bigger = p.clone();
        let r0 = &p.declarations["r0"];
        for (a, b) in extra {
            let vals = [a, b, (a + b) % 4];
            bigger.facts.insert(Fact::new("r0", vals[..r0.arity()].iter().map(|v| Value::Int(*v)).collect()));
        }
        let bigger = Program::build(bigger.declarations.clone(), bigger.rules.clone(), bigger.facts.clone()).unwrap();
        let small = db_facts(&p);
        let large = db_facts(&bigger);
        prop_assert!(small.is_subset(&large));
    }
}
