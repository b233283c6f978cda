//! One line per acceptance criterion; exits nonzero if any fails.

#[path = "../../datalog/tests/common/mod.rs"]
mod engine_common;
#[path = "../../core/tests/common/mod.rs"]
mod msan_common;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use claimcheck_core::equiv::{build_pairing, equiv_rules, load_equiv_text, verify_equiv, EquivOutcome, MismatchKind};
use claimcheck_core::formalize::{mock_source, run_loop, LoopConfig, Task};
use claimcheck_core::msan::{load_msan_facts, msan_program, verify_msan, MemoryError, MsanOutcome, VarSite};
use claimcheck_core::toy::{extract_equiv_facts, mutate, oracle_equiv, parse_toy, random_program, GenConfig, Mutation};
use claimcheck_datalog::{evaluate, export_external, import_external, parse_program, Fact, Program, Value};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn read(name: &str) -> String {
    let p = fixtures().join(name);
    fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn median_time(mut f: impl FnMut()) -> Duration {
    let mut times: Vec<Duration> = (0..5)
        .map(|_| {
            let t = Instant::now();
            f();
            t.elapsed()
        })
        .collect();
    times.sort();
    times[2]
}

fn fig8() -> Outcome {
    let src = read("fig8.dl");
    let db = evaluate(&parse_program(&src).map_err(|e| e.to_string())?);
    let unsafe_ = db.len("isUnsafe");
    let nz: Vec<String> = db.facts().filter(|f| f.predicate == "nonZeroInputToOutputFn").map(|f| f.to_string()).collect();
    ensure(unsafe_ == 1, || format!("isUnsafe has {unsafe_} tuples"))?;
    ensure(nz == ["nonZeroInputToOutputFn(\"d\")"], || format!("got {nz:?}"))?;
    let t = median_time(|| {
        evaluate(&parse_program(&src).unwrap());
    });
    ensure(t < Duration::from_millis(10), || format!("took {t:?}"))?;
    Ok(format!("isUnsafe() and nonZeroInputToOutputFn(\"d\") only, {t:?}"))
}

fn fig11() -> Outcome {
    let text = read("fig11.facts");
    let start = Instant::now();
    let fs = load_msan_facts(&text).map_err(|e| e.to_string())?;
    let v = verify_msan(&fs);
    let t = start.elapsed();
    ensure(v.outcome == MsanOutcome::Verified, || format!("{}", v.outcome))?;
    let w = v.witness.unwrap();
    let want = VarSite::new("buffer", "utils/encoders/stream_encoder.c", 2538);
    ensure(w.use_site() == &want, || format!("ends at {}", w.use_site()))?;
    let e = w.memory_error.clone().ok_or("no memoryError in witness")?;
    ensure(e.file == want.file && e.line == want.line, || format!("memoryError at {}:{}", e.file, e.line))?;
    ensure(w.replays(&fs), || "witness does not replay".into())?;
    ensure(t < Duration::from_millis(50), || format!("took {t:?}"))?;
    Ok(format!("Verified, {} hop chain ending at {want}, {t:?}", w.chain.len() - 1))
}

fn fig15() -> Outcome {
    let v = verify_equiv(&load_equiv_text(&read("fig15.bundle")).map_err(|e| e.to_string())?);
    ensure(v.outcome == EquivOutcome::NotEquivalent, || format!("{}", v.outcome))?;
    ensure(v.mismatch_count == 1, || format!("{} mismatches", v.mismatch_count))?;
    let m = v.mismatch().unwrap();
    let text = m.to_string();
    ensure(m.kind() == MismatchKind::Expression && text.contains("foo") && text.contains("bar"), || text.clone())?;
    Ok(format!("NotEquivalent, sole witness: {text}"))
}

fn controldep_bundles() -> Outcome {
    for name in ["fig16.bundle", "fig18.bundle"] {
        let v = verify_equiv(&load_equiv_text(&read(name)).map_err(|e| e.to_string())?);
        ensure(v.outcome == EquivOutcome::NotEquivalent, || format!("{name}: {}", v.outcome))?;
        let kind = v.mismatch().map(|m| m.kind());
        ensure(kind == Some(MismatchKind::Controldep), || format!("{name}: witness kind {kind:?}"))?;
    }
    Ok("both NotEquivalent with a controldep witness".into())
}

fn fig22() -> Outcome {
    let v = verify_equiv(&load_equiv_text(&read("fig22.bundle")).map_err(|e| e.to_string())?);
    ensure(v.outcome == EquivOutcome::NotEquivalent, || format!("{}", v.outcome))?;
    Ok(format!("NotEquivalent ({} mismatches)", v.mismatch_count))
}

fn soundness_sweep() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut pairs, mut equivalent, mut unsound) = (0, 0, Vec::new());
    let mut k = 0;
    while pairs < 1000 {
        let p = random_program(&mut rng, &GenConfig::default());
        let kind = Mutation::ALL[k % Mutation::ALL.len()];
        k += 1;
        let Some(m) = mutate(&mut rng, &p, kind) else { continue };
        pairs += 1;
        let b = extract_equiv_facts(&m.original, &m.mutated, &m.var_pairs);
        if verify_equiv(&b).outcome == EquivOutcome::Equivalent {
            equivalent += 1;
            if !oracle_equiv(&m.original, &m.mutated, &m.var_pairs).map_err(|e| e.to_string())? {
                unsound.push(format!("{kind}:\n{}\n---\n{}", m.original, m.mutated));
            }
        }
    }
    let t = start.elapsed();
    ensure(unsound.is_empty(), || format!("{} unsound, first:\n{}", unsound.len(), unsound[0]))?;
    ensure(t < Duration::from_secs(60), || format!("took {t:?}"))?;
    Ok(format!("{pairs} pairs, {equivalent} Equivalent, 0 unsound, {t:.1?}"))
}

fn reflexivity_sweep() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let cfg = GenConfig::default();
    for i in 0..100 {
        let p = random_program(&mut rng, &cfg);
        let v = verify_equiv(&extract_equiv_facts(&p, &p, &[]));
        ensure(v.outcome == EquivOutcome::Equivalent, || format!("self-pair {i}: {}\n{p}", v.outcome))?;
    }
    let mut renamed = 0;
    while renamed < 100 {
        let p = random_program(&mut rng, &cfg);
        let Some(m) = mutate(&mut rng, &p, Mutation::Renaming) else { continue };
        renamed += 1;
        let v = verify_equiv(&extract_equiv_facts(&m.original, &m.mutated, &m.var_pairs));
        ensure(v.outcome == EquivOutcome::Equivalent, || format!("renamed pair: {}\n{}\n---\n{}", v.outcome, m.original, m.mutated))?;
    }
    let kinds = [Mutation::OperatorSwap, Mutation::OperandSwap, Mutation::GuardFlip, Mutation::Insertion];
    let (mut mutated, mut k) = (0, 0);
    while mutated < 100 {
        let p = random_program(&mut rng, &cfg);
        let kind = kinds[k % kinds.len()];
        k += 1;
        let Some(m) = mutate(&mut rng, &p, kind) else { continue };
        mutated += 1;
        let v = verify_equiv(&extract_equiv_facts(&m.original, &m.mutated, &m.var_pairs));
        ensure(v.outcome != EquivOutcome::Equivalent, || format!("{kind} pair Equivalent:\n{}\n---\n{}", m.original, m.mutated))?;
    }
    Ok("100 self, 100 renamed Equivalent; 100 mutated never Equivalent".into())
}

fn db_facts(p: &Program) -> BTreeSet<Fact> {
    evaluate(p).facts().collect()
}

fn engine_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    for i in 0..200 {
        let p = engine_common::random_program(&mut rng, &engine_common::Shape { negation: false });
        ensure(db_facts(&p) == engine_common::naive(&p), || format!("program {i}:\n{p}"))?;
    }
    for i in 0..200 {
        let p = engine_common::random_program(&mut rng, &engine_common::Shape { negation: false });
        let mut bigger = p.clone();
        let r0 = &p.declarations["r0"];
        for _ in 0..rng.gen_range(1..8) {
            let vals = (0..r0.arity()).map(|_| Value::Int(rng.gen_range(0..4))).collect();
            bigger.facts.insert(Fact::new("r0", vals));
        }
        let (small, large) = (db_facts(&p), db_facts(&bigger));
        ensure(small.is_subset(&large), || format!("pair {i} lost derivations:\n{p}"))?;
    }
    Ok("200 programs set-equal to naive; 200 superset pairs monotone".into())
}

fn msan_monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut verified = 0;
    for i in 0..100 {
        let mut base = msan_common::random_msan_set(&mut rng);
        if base.memory_error.is_empty() {
            // anchor the error on a reachable use when there is one
            let at = match verify_msan(&base).witness {
                Some(w) => w.use_site().clone(),
                None => base.uses.iter().next().cloned().unwrap_or_else(|| msan_common::random_site(&mut rng)),
            };
            base.memory_error.insert(MemoryError {
                var: at.var.clone(),
                kind: "uninitialized_data".into(),
                file: at.file,
                line: at.line,
            });
        }
        if rng.gen_bool(0.6) {
            let chain: Vec<VarSite> = (0..rng.gen_range(1..=6)).map(|_| msan_common::random_site(&mut rng)).collect();
            let end = chain.last().unwrap().clone();
            base.uninitialized.insert(chain[0].clone());
            for w in chain.windows(2) {
                base.flow.insert((w[0].clone(), w[1].clone()));
            }
            base.uses.insert(end.clone());
            base.memory_error.insert(MemoryError {
                var: end.var.clone(),
                kind: "uninitialized_data".into(),
                file: end.file,
                line: end.line,
            });
        }
        let before = verify_msan(&base).outcome;
        let mut grown = base.clone();
        grown.extend(&msan_common::random_msan_set(&mut rng));
        let after = verify_msan(&grown).outcome;
        if before == MsanOutcome::Verified {
            verified += 1;
            ensure(after == MsanOutcome::Verified, || format!("set {i} regressed:\n{base}"))?;
        }
    }
    ensure(verified > 0, || "no base set verified".into())?;
    Ok(format!("100 sets ({verified} Verified before additions), no regressions"))
}

fn iteration_ablation() -> Outcome {
    let truth = read("fig14.bundle");
    let quiet = |iters| LoopConfig {
        max_iters: iters,
        record_timing: false,
    };
    let total = run_loop(&mock_source(&truth, 0.0, 0), Task::Equiv, "", &quiet(1)).facts.len();
    let mut inconclusive = [0usize; 2];
    let mut recovered = 0usize;
    for seed in 0..100 {
        for (slot, iters) in [(0, 1), (1, 5)] {
            let out = run_loop(&mock_source(&truth, 0.4, seed), Task::Equiv, "", &quiet(iters));
            let b = out.facts.to_equiv().map_err(|e| e.to_string())?;
            if verify_equiv(&b).outcome == EquivOutcome::Inconclusive {
                inconclusive[slot] += 1;
            }
            if iters == 5 {
                recovered += out.facts.len();
            }
        }
    }
    let rate = recovered as f64 / (100 * total) as f64;
    ensure(inconclusive[1] < inconclusive[0], || format!("Inconclusive {} at 1 vs {} at 5", inconclusive[0], inconclusive[1]))?;
    ensure(rate >= 0.98, || format!("recovery {rate:.4}"))?;
    Ok(format!(
        "Inconclusive {}/100 at iters=1, {}/100 at iters=5; recovery {:.2}% of {total} facts",
        inconclusive[0],
        inconclusive[1],
        rate * 100.0
    ))
}

fn export_round_trip(p: &Program) -> Result<(), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    export_external(p, dir.path()).map_err(|e| e.to_string())?;
    let q = import_external(dir.path()).map_err(|e| e.to_string())?;
    ensure(q.facts == p.facts && q.rules == p.rules && q.declarations == p.declarations, || "program differs after import".into())
}

fn fixture_names(ext: &str) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(fixtures())
        .unwrap()
        .filter_map(|e| e.ok()?.file_name().into_string().ok())
        .filter(|n| Path::new(n).extension().is_some_and(|x| x == ext))
        .collect();
    names.sort();
    names
}

fn round_trips() -> Outcome {
    let mut checked = 0;
    for name in fixture_names("dl") {
        let p = parse_program(&read(&name)).map_err(|e| format!("{name}: {e}"))?;
        let again = parse_program(&p.to_string()).map_err(|e| format!("{name}: {e}"))?;
        ensure(again == p, || format!("{name}: print/parse differs"))?;
        export_round_trip(&p).map_err(|e| format!("{name}: {e}"))?;
        checked += 1;
    }
    for name in fixture_names("facts") {
        let fs = match load_msan_facts(&read(&name)) {
            Ok(fs) => fs,
            // the deliberately corrupted fixture
            Err(_) if name.contains("corrupt") => continue,
            Err(e) => return Err(format!("{name}: {e}")),
        };
        let again = load_msan_facts(&fs.to_string()).map_err(|e| format!("{name}: {e}"))?;
        ensure(again == fs, || format!("{name}: print/parse differs"))?;
        export_round_trip(&msan_program(&fs).map_err(|e| e.to_string())?).map_err(|e| format!("{name}: {e}"))?;
        checked += 1;
    }
    for name in fixture_names("bundle") {
        let b = load_equiv_text(&read(&name)).map_err(|e| format!("{name}: {e}"))?;
        let again = load_equiv_text(&b.to_string()).map_err(|e| format!("{name}: {e}"))?;
        ensure(again == b, || format!("{name}: print/parse differs"))?;
        if let Ok(pairing) = build_pairing(&b) {
            export_round_trip(&equiv_rules(&b, &pairing).map_err(|e| e.to_string())?).map_err(|e| format!("{name}: {e}"))?;
        }
        checked += 1;
    }
    for name in fixture_names("toy") {
        let p = parse_toy(&read(&name)).map_err(|e| format!("{name}: {e}"))?;
        ensure(parse_toy(&p.to_string()).as_ref() == Ok(&p), || format!("{name}: print/parse differs"))?;
        checked += 1;
    }
    Ok(format!("{checked} fixtures"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("fig8 program", fig8),
        ("fig11 msan trace", fig11),
        ("fig15 bundle", fig15),
        ("fbounds and loop-condition bundles", controldep_bundles),
        ("switch vs if-else bundle", fig22),
        ("soundness sweep", soundness_sweep),
        ("reflexivity and renaming", reflexivity_sweep),
        ("engine equivalence", engine_equivalence),
        ("msan monotonicity", msan_monotonicity),
        ("iteration ablation", iteration_ablation),
        ("round trips", round_trips),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!("{}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
