//! Release gate: one PASS/FAIL line per acceptance criterion.

use std::io::Write as _;
use std::process::Command;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use serde_json::Value;

use magpi::context::{ctx_add, ctx_splits, ContextTriple, DeltaCtx};
use magpi::corpus::{corpus_dir, corpus_manifest, CorpusEntry};
use magpi::lts::{CtxState, Limits};
use magpi::parser::{parse_program, parse_unchecked};
use magpi::semantics::{
    check_df_network, check_failure_handling, check_term_network, enumerate_steps, explore_network,
};
use magpi::syntax::{
    BaseType, Expr, MessageType, Network, Process, ProcessTerm, Program, RecvArm, Role, SessionType, TypeArm,
};
use magpi::typecheck::typecheck;
use magpi::verify::{
    check_df_types, check_safety, check_term_types, check_tt, harness_session_fidelity, harness_subject_reduction,
    report_property_transfer, typing_judge, ConditionSet, SrConfig, Status,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn program(file: &str) -> Program {
    let entry = corpus_manifest().into_iter().find(|e| e.file == file).expect("bundled");
    parse_program(entry.source()).expect("bundled sources parse")
}

fn start(p: &Program) -> (ContextTriple, CtxState) {
    let ctx = p.contexts();
    let s0 = CtxState::new(ctx.delta.clone(), ctx.theta.clone());
    (ctx, s0)
}

fn safe_entries() -> Vec<CorpusEntry> {
    corpus_manifest().into_iter().filter(CorpusEntry::is_safe).collect()
}

fn run_cli(args: &[&str]) -> Result<(Value, Duration), String> {
    let t = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_magpi")).args(args).output().map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    let json = serde_json::from_slice(&out.stdout).map_err(|e| format!("bad JSON from {args:?}: {e}"))?;
    Ok((json, elapsed))
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:?}, limit {limit:?}"))
}

fn successor_count() -> Outcome {
    let nf = corpus_dir().join("nf.magpi");
    let (json, elapsed) = run_cli(&["explore", nf.to_str().unwrap(), "--emit", "json"])?;
    let succ = &json["initial_successors"];
    let mut rules: Vec<&str> = succ["rules"].as_array().unwrap().iter().map(|r| r.as_str().unwrap()).collect();
    rules.sort_unstable();
    ensure(succ["count"] == 4, || format!("count {}", succ["count"]))?;
    ensure(rules == ["FDrop", "FTimeout", "PRecv", "PSend"], || format!("rules {rules:?}"))?;
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!("4 successors {rules:?} in {elapsed:.2?}"))
}

fn nf_violation() -> Outcome {
    let nf = corpus_dir().join("nf.magpi");
    let (json, elapsed) = run_cli(&["verify", nf.to_str().unwrap(), "--emit", "json"])?;
    let safety = &json["safety"];
    ensure(safety["status"] == "Violated", || format!("status {}", safety["status"]))?;
    ensure(safety["condition"] == "phi-c", || format!("condition {}", safety["condition"]))?;
    let witness: Vec<&str> =
        safety["witness"].as_array().unwrap().iter().map(|w| w["action"].as_str().unwrap()).collect();
    ensure(witness == ["p⊕q:m"], || format!("witness {witness:?}"))?;
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!("Violated phi-c, witness [p⊕q:m] in {elapsed:.2?}"))
}

fn positive_verdicts() -> Outcome {
    let mut notes = Vec::new();
    for file in ["ping.magpi", "load_balancer.magpi"] {
        let t = Instant::now();
        let p = program(file);
        let (ctx, s0) = start(&p);
        typecheck(&p.network, &ctx).map_err(|d| format!("{file}: {d}"))?;
        let v = check_safety(&ctx.gamma, &s0, &p.reliability, Limits::default());
        ensure(v.status == Status::Holds && v.exhausted, || format!("{file}: {v:?}"))?;
        within(t.elapsed(), Duration::from_secs(10))?;
        notes.push(format!("{file} Holds over {} states", v.states));
    }
    Ok(notes.join(", "))
}

fn tt_predicate() -> Outcome {
    let ping = check_tt(&program("ping.magpi").contexts().gamma);
    let lb = check_tt(&program("load_balancer.magpi").contexts().gamma);
    ensure(ping && !lb, || format!("ping {ping}, load balancer {lb}"))?;
    Ok("ping true, load balancer false".into())
}

fn property_transfer() -> Outcome {
    let p = program("ping.magpi");
    let (ctx, s0) = start(&p);
    let safety = check_safety(&ctx.gamma, &s0, &p.reliability, Limits::default()).status;
    let df = check_df_types(&ctx.gamma, &s0, Limits::default()).status;
    let term = check_term_types(&ctx.gamma, &s0, Limits::default()).status;
    ensure(df == Status::Holds && term == Status::Holds, || format!("types: df {df}, term {term}"))?;
    let transfer = report_property_transfer(safety, df, term);

    let x = explore_network(&p.network, &p.reliability, Limits::default().budget);
    ensure(x.exhausted, || "network exploration not exhausted".into())?;
    let net_df = check_df_network(&x).status == Status::Holds;
    let net_term = check_term_network(&x).status == Status::Holds;
    ensure(transfer.deadlock_free == net_df && transfer.terminating == net_term, || {
        format!(
            "types claim df {} term {}; network df {net_df} term {net_term}",
            transfer.deadlock_free, transfer.terminating
        )
    })?;
    ensure(net_df && net_term, || "network-level check failed".into())?;
    Ok(format!("both levels df+term over {} network states", x.states.len()))
}

fn subject_reduction() -> Outcome {
    let t = Instant::now();
    let mut steps = 0;
    for e in safe_entries() {
        let p = program(&e.file);
        let cfg = SrConfig { traces: 1_000, depth: 20, seed: 2024, ..SrConfig::default() };
        let r = harness_subject_reduction(&p.network, &p.contexts(), &p.reliability, &cfg, &typing_judge)
            .map_err(|err| format!("{}: {err}", e.file))?;
        ensure(r.counterexamples.is_empty(), || format!("{}: {:?}", e.file, r.counterexamples[0]))?;
        steps += r.steps;
    }

    let source = corpus_manifest().into_iter().find(|e| e.file == "nf.magpi").unwrap().source();
    let mutants = [source.to_string(), source.replace("m<\"Life is\">", "m<\"x\">, p->q:m<\"y\">")];
    let mut found = 0;
    for text in &mutants {
        let p = parse_program(text).map_err(|d| format!("mutant: {d:?}"))?;
        let cfg = SrConfig {
            traces: 1_000,
            depth: 20,
            seed: 2024,
            conditions: ConditionSet { reliability: true, payloads: false },
            ..SrConfig::default()
        };
        let r = harness_subject_reduction(&p.network, &p.contexts(), &p.reliability, &cfg, &typing_judge)
            .map_err(|err| format!("mutant: {err}"))?;
        found += r.counterexamples.len();
    }
    ensure(found >= 1, || "mutants produced no counterexample".into())?;
    within(t.elapsed(), Duration::from_secs(60))?;
    Ok(format!("{steps} safe steps, 0 counterexamples; mutants gave {found} in {:.2?}", t.elapsed()))
}

fn session_fidelity() -> Outcome {
    let mut notes = Vec::new();
    for file in ["ping.magpi", "load_balancer.magpi"] {
        let p = program(file);
        let r =
            harness_session_fidelity(&p.network, &p.contexts(), &p.reliability, Limits::default(), 4, &typing_judge)
                .map_err(|e| format!("{file}: {e}"))?;
        ensure(r.exhausted && r.checked > 0, || format!("{file}: {r:?}"))?;
        ensure(r.unmatched.is_empty(), || format!("{file}: unmatched {:?}", r.unmatched[0]))?;
        notes.push(format!("{file} {} states matched", r.checked));
    }
    Ok(notes.join(", "))
}

fn failure_handling() -> Outcome {
    let mut states = 0;
    for e in safe_entries() {
        let p = program(&e.file);
        let x = explore_network(&p.network, &p.reliability, Limits::default().budget);
        ensure(x.exhausted, || format!("{}: not exhausted", e.file))?;
        let c = check_failure_handling(&x, &p.reliability);
        ensure(c.status == Status::Holds, || format!("{}: {:?}", e.file, c.reason))?;
        states += x.states.len();
    }
    Ok(format!("{} safe entries, {states} network states, 0 violations", safe_entries().len()))
}

// Generators for the algebraic properties.

const CASES: u32 = 10_000;

fn role() -> impl Strategy<Value = Role> {
    prop::sample::select(vec!["a", "b", "c"]).prop_map(Role::new)
}

fn base() -> impl Strategy<Value = BaseType> {
    prop::sample::select(vec![BaseType::Int, BaseType::Real, BaseType::String, BaseType::Bool])
}

fn arm(cont: BoxedStrategy<SessionType>) -> impl Strategy<Value = TypeArm> {
    (role(), prop::sample::select(vec!["m", "n"]), prop::collection::vec(base(), 0..2), cont)
        .prop_map(|(p, l, b, k)| TypeArm::new(p, l, b, k))
}

fn session() -> BoxedStrategy<SessionType> {
    Just(SessionType::End)
        .prop_recursive(3, 12, 2, |inner| {
            let inner = inner.boxed();
            prop_oneof![
                prop::collection::vec(arm(inner.clone()), 1..3).prop_map(SessionType::Select),
                (prop::collection::vec(arm(inner.clone()), 1..3), prop::option::of(inner))
                    .prop_map(|(arms, t)| SessionType::branch(arms, t)),
            ]
        })
        .boxed()
}

fn non_end() -> impl Strategy<Value = SessionType> {
    session().prop_filter("non-end", |t| !t.is_end())
}

fn delta() -> impl Strategy<Value = DeltaCtx> {
    prop::collection::vec((role(), session()), 0..4).prop_map(|entries| entries.into_iter().collect())
}

fn message_type() -> impl Strategy<Value = MessageType> {
    (role(), role(), prop::sample::select(vec!["m", "n", "ping"]), prop::collection::vec(base(), 0..2))
        .prop_map(|(s, d, l, b)| MessageType::new(s, d, l, b))
}

fn term() -> impl Strategy<Value = ProcessTerm> {
    let send = (role(), prop::sample::select(vec!["m", "n"])).prop_map(|(p, l)| {
        ProcessTerm::Lin(Process::send(p, l, vec![Expr::Val(magpi::syntax::Value::Int(1))], Process::Inact))
    });
    let server = role().prop_map(|p| ProcessTerm::Server(vec![RecvArm::new(p, "m", vec![], Process::Inact)]));
    let leaf = prop_oneof![Just(ProcessTerm::inact()), send, server];
    leaf.prop_recursive(3, 16, 4, |inner| prop::collection::vec(inner, 0..4).prop_map(ProcessTerm::Par))
}

fn run_property<S: Strategy>(
    name: &str,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<u32, String> {
    let mut runner = TestRunner::new(Config { cases: CASES, failure_persistence: None, ..Config::default() });
    runner.run(&strategy, test).map_err(|e| format!("{name}: {e}"))?;
    Ok(CASES)
}

fn algebra() -> Outcome {
    let mut total = 0;

    total += run_property("add/split inverse", (delta(), delta()), |(d1, d2)| {
        let sum = ctx_add(&d1, &d2);
        let splits: Vec<(DeltaCtx, DeltaCtx)> = ctx_splits(&sum).collect();
        prop_assert!(splits.contains(&(d1.clone(), d2.clone())));
        for (l, r) in &splits {
            prop_assert_eq!(&ctx_add(l, r), &sum);
        }
        let mut dedup = splits.clone();
        dedup.sort_by_key(|(l, r)| format!("{l:?}{r:?}"));
        dedup.dedup();
        prop_assert_eq!(dedup.len(), splits.len());
        Ok(())
    })?;

    let typed: Vec<(Network, ContextTriple)> = corpus_manifest()
        .iter()
        .filter(|e| e.expected.typecheck)
        .map(|e| {
            let p = parse_program(e.source()).expect("parses");
            (p.network.clone(), p.contexts())
        })
        .collect();
    let pick = 0..typed.len();
    total += run_property(
        "weakening",
        (pick, prop::collection::vec(message_type(), 1..4), non_end()),
        |(i, extra, ghost)| {
            let (n, ctx) = &typed[i];
            let mut wider = ctx.clone();
            for m in extra {
                wider.theta.push(m);
            }
            prop_assert!(typecheck(n, &wider).is_ok(), "extra in-flight types must be absorbed");
            let fresh = Role::new("ghost");
            let mut bad = ctx.clone();
            bad.delta.add(fresh.clone(), ghost);
            prop_assert!(typecheck(n, &bad).is_err(), "unused linear obligation must be rejected");
            let mut ended = ctx.clone();
            ended.delta.add(fresh, SessionType::End);
            prop_assert!(typecheck(n, &ended).is_ok());
            Ok(())
        },
    )?;

    total += run_property("normalize idempotence", term(), |t| {
        let once = t.normalize();
        prop_assert_eq!(once.clone().normalize(), once.clone());
        for op in once.operands() {
            prop_assert!(!matches!(op, ProcessTerm::Par(_)));
            if once.operands().len() > 1 {
                prop_assert!(!op.is_inact());
            }
        }
        Ok(())
    })?;

    let nf = corpus_manifest().into_iter().find(|e| e.file == "nf.magpi").unwrap().source();
    let pool = vec!["p->q:m<\"a\">", "p->q:m<7>", "q->p:echo<\"b\">", "p->q:m<\"a\">", "p->q:n<>"];
    let bags =
        prop::sample::subsequence(pool, 0..=5).prop_flat_map(|msgs| (Just(msgs.clone()), Just(msgs).prop_shuffle()));
    total += run_property("buffer permutation", bags, |(msgs, shuffled)| {
        let with = |list: &[&str]| {
            let line = format!("buffer {{ {} }}", list.join(", "));
            let text = nf.replace("buffer { p->q:m<\"Life is\"> }", &line);
            parse_unchecked(&text).expect("parses").network
        };
        let (a, b) = (with(&msgs), with(&shuffled));
        prop_assert_eq!(&a, &b);
        let r = magpi::syntax::ReliabilityRelation::none();
        prop_assert_eq!(enumerate_steps(&a, &r), enumerate_steps(&b, &r));
        Ok(())
    })?;

    Ok(format!("{total} generated cases, 0 failures"))
}

fn desk_scale(prior: bool) -> Outcome {
    ensure(prior, || "an earlier criterion failed".into())?;
    for e in corpus_manifest() {
        let p = parse_program(e.source()).map_err(|d| format!("{}: {d:?}", e.file))?;
        let (ctx, s0) = start(&p);
        ensure(typecheck(&p.network, &ctx).is_ok() == e.expected.typecheck, || format!("{}: typecheck", e.file))?;
        if let Some(want) = e.expected.safety {
            let got = check_safety(&ctx.gamma, &s0, &p.reliability, Limits::default()).status;
            ensure(got == want, || format!("{}: safety {got}, expected {want}", e.file))?;
        }
    }
    Ok("no quantitative targets; every bundled example meets its recorded verdicts".into())
}

#[test]
fn acceptance() {
    let criteria: Vec<Criterion> = vec![
        ("nf initial successors", successor_count),
        ("nf payload violation and witness", nf_violation),
        ("ping and load balancer are safe", positive_verdicts),
        ("trivially terminating servers", tt_predicate),
        ("type-level properties transfer to the network", property_transfer),
        ("subject reduction harness", subject_reduction),
        ("session fidelity harness", session_fidelity),
        ("failure handling", failure_handling),
        ("context algebra properties", algebra),
    ];
    let mut all = true;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let outcome = check();
        all &= report(i + 1, name, &outcome);
    }
    let outcome = desk_scale(all);
    all &= report(10, "desk-scale coverage", &outcome);
    assert!(all, "at least one acceptance criterion failed");
}

fn report(n: usize, name: &str, outcome: &Outcome) -> bool {
    let line = match outcome {
        Ok(note) => format!("criterion {n:>2}: PASS  {name}: {note}"),
        Err(why) => format!("criterion {n:>2}: FAIL  {name}: {why}"),
    };
    // Bypasses output capture.
    let _ = writeln!(std::io::stdout().lock(), "{line}");
    outcome.is_ok()
}
