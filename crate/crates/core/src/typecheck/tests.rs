use super::*;
use crate::context::ContextTriple;
use crate::parser::{parse_program, parse_term, parse_type, TypeDecl};
use crate::syntax::{Message, MessageType, Var};

fn program(text: &str) -> Program {
    parse_program(text).unwrap_or_else(|d| panic!("{d:?}"))
}

fn session(text: &str) -> SessionType {
    match parse_type(text).expect("type") {
        TypeDecl::Session(s) => s,
        TypeDecl::Replicated(_) => panic!("expected a session type"),
    }
}

fn derive(text: &str) -> Derivation {
    let p = program(text);
    let d = typecheck_program(&p).unwrap_or_else(|e| panic!("{e}"));
    validate(&d).unwrap_or_else(|e| panic!("{e}\n{}", d.pretty()));
    d
}

#[test]
fn corpus_programs_typecheck_with_valid_derivations() {
    for text in [
        include_str!("../../corpus/ping.magpi"),
        include_str!("../../corpus/nf.magpi"),
        include_str!("../../corpus/load_balancer.magpi"),
        include_str!("../../corpus/minimal.magpi"),
        include_str!("../../corpus/ping_linear_server.magpi"),
        include_str!("../../corpus/ping_linear_server_retrying.magpi"),
    ] {
        let d = derive(text);
        assert_eq!(d.rule, Rule::TPar1);
    }
}

#[test]
fn server_role_is_typed_by_bang() {
    let d = derive(include_str!("../../corpus/ping.magpi"));
    let mut bangs = 0;
    fn count(d: &Derivation, n: &mut usize) {
        if d.rule == Rule::TBang {
            *n += 1;
        }
        d.premises.iter().for_each(|p| count(p, n));
    }
    count(&d, &mut bangs);
    assert_eq!(bangs, 1);
}

#[test]
fn wrong_payload_arity_is_reported_at_the_role() {
    let text = "reliable all\n\
                role p : +{ q:m().end } = send q:m<1>.end\n\
                role q : &{ p:m().end } = recv { p:m().end }\n";
    let p = program(text);
    let diag = typecheck_program(&p).unwrap_err();
    assert_eq!(diag.location, p.source_map.role(&Role::new("p")));
    assert!(diag.message.contains("1 value(s)"), "{}", diag.message);
}

#[test]
fn payload_values() {
    let g = GammaCtx::default();
    assert!(typecheck_value(&Expr::Val(Value::Int(42)), BaseType::Int, &g));
    assert!(!typecheck_value(&Expr::Val(Value::Str("Life is".into())), BaseType::Int, &g));
    let x = Var::new("x");
    assert!(!typecheck_value(&Expr::Var(x.clone()), BaseType::Int, &g));
    let g = g.with_vars([(x.clone(), BaseType::Int)]);
    assert!(typecheck_value(&Expr::Var(x.clone()), BaseType::Int, &g));
    assert!(!typecheck_value(&Expr::Var(x), BaseType::String, &g));
    assert!(typecheck_value(&Expr::Call("f".into(), vec![Expr::Val(Value::Int(1))]), BaseType::Real, &g));
}

#[test]
fn leftover_theta_entries_are_allowed() {
    let p = program(include_str!("../../corpus/nf.magpi"));
    let mut ctx = p.contexts();
    ctx.theta.push(MessageType::new("p", "q", "m", vec![BaseType::Bool]));
    let d = typecheck(&p.network, &ctx).expect("Θ weakening");
    validate(&d).unwrap();
}

#[test]
fn missing_theta_entry_is_rejected() {
    let p = program(include_str!("../../corpus/nf.magpi"));
    let mut ctx = p.contexts();
    ctx.theta = ThetaCtx::new();
    assert!(typecheck(&p.network, &ctx).is_err());
}

#[test]
fn unfinished_delta_entries_are_rejected() {
    let p = program(include_str!("../../corpus/minimal.magpi"));
    let mut ctx = p.contexts();
    ctx.delta.add(Role::new("ghost"), session("+{ p:m().end }"));
    assert!(typecheck(&p.network, &ctx).is_err());

    let mut ctx = p.contexts();
    ctx.delta.add(Role::new("ghost"), SessionType::End);
    let d = typecheck(&p.network, &ctx).expect("end entries can be absorbed");
    validate(&d).unwrap();
}

#[test]
fn spawned_server_continuation_is_typed_in_delta() {
    let p = program(include_str!("../../corpus/ping.magpi"));
    let mut n = p.network.clone();
    let s = Role::new("s");
    let spawned = parse_term("send c:pong<>.end").unwrap();
    let server = n.processes[&s].clone();
    n.processes.insert(s.clone(), ProcessTerm::par(server, spawned));
    let mut ctx = p.contexts();
    ctx.delta.add(s, session("+{ c:pong().end }"));
    // c is past its first send.
    let c = Role::new("c");
    let SessionType::Select(arms) = ctx.delta.get(&c).unwrap().clone() else { panic!() };
    ctx.delta.remove(&c);
    ctx.delta.add(c.clone(), arms[0].cont.clone());
    let ProcessTerm::Lin(Process::Send { cont, .. }) = n.processes[&c].clone() else { panic!() };
    n.processes.insert(c, ProcessTerm::Lin(*cont));
    n.buffer.push(Message::new("c", "s", "ping", vec![]));
    ctx.theta.push(MessageType::new("c", "s", "ping", vec![]));

    let d = typecheck(&n, &ctx).unwrap_or_else(|e| panic!("{e}"));
    validate(&d).unwrap_or_else(|e| panic!("{e}\n{}", d.pretty()));
}

#[test]
fn parallel_threads_take_components_in_any_order() {
    let text = "reliable all\n\
                role p : end = end\n";
    let p = program(text);
    let p_role = Role::new("p");
    let a = parse_term("send q:a<>.end").unwrap();
    let b = parse_term("send q:b<1>.end").unwrap();
    let ta = session("+{ q:a().end }");
    let tb = session("+{ q:b(Int).end }");
    let mut n = p.network.clone();
    n.processes.insert(p_role.clone(), ProcessTerm::par(a, b));
    for (x, y) in [(ta.clone(), tb.clone()), (tb, ta)] {
        let ctx = ContextTriple {
            gamma: GammaCtx::default(),
            delta: DeltaCtx::singleton(p_role.clone(), x.par(y).par(SessionType::End)),
            theta: ThetaCtx::new(),
        };
        let d = typecheck(&n, &ctx).unwrap_or_else(|e| panic!("{e}"));
        validate(&d).unwrap_or_else(|e| panic!("{e}\n{}", d.pretty()));
    }
}

#[test]
fn timeout_must_match_the_type() {
    let text = "reliable none\n\
                role p : +{ q:m().end } = send q:m<>.end\n\
                role q : &{ p:m().end } = recv { p:m().end, timeout.end }\n";
    let p = program(text);
    let e = typecheck_program(&p).unwrap_err();
    assert!(e.message.contains("timeout"), "{}", e.message);
}

#[test]
fn validator_rejects_tampered_derivations() {
    let mut d = derive(include_str!("../../corpus/nf.magpi"));
    d.conclusion.theta = ThetaCtx::new();
    assert!(validate(&d).is_err());

    let mut d = derive(include_str!("../../corpus/ping.magpi"));
    d.premises[0].rule = Rule::TPar1;
    assert!(validate(&d).is_err());

    let mut d = derive(include_str!("../../corpus/minimal.magpi"));
    d.premises[0].conclusion.delta = DeltaCtx::singleton(Role::new("p"), session("+{ q:m().end }"));
    assert!(validate(&d).is_err());
}
