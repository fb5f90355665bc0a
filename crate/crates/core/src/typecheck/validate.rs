//! Re-checks every node of a derivation against its rule, independently of
//! the search that produced it.

use std::collections::BTreeMap;

use crate::context::{ctx_add, end_pred, DeltaCtx, ThetaCtx};
use crate::syntax::{Builtin, Expr, MessageType, Process, ProcessTerm, RecvArm, Role, SessionType, TypeArm};

use super::derivation::{Derivation, Rule, Subject};

/// `Ok` iff every node is a correct instance of its rule.
pub fn validate(d: &Derivation) -> Result<(), String> {
    check_node(d).map_err(|e| format!("[{}] {}: {e}", d.rule, d.conclusion))?;
    d.premises.iter().try_for_each(validate)
}

fn ensure(cond: bool, msg: &str) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.to_owned())
    }
}

fn premises(d: &Derivation, n: usize) -> Result<&[Derivation], String> {
    ensure(d.premises.len() == n, &format!("expected {n} premise(s), found {}", d.premises.len()))?;
    Ok(&d.premises)
}

/// Role maps equal up to adding or removing inactive roles.
fn same_up_to_inactive(a: &BTreeMap<Role, ProcessTerm>, b: &BTreeMap<Role, ProcessTerm>) -> bool {
    a.iter().all(|(r, t)| b.get(r).map_or(t.is_inact(), |u| u == t))
        && b.iter().all(|(r, t)| a.get(r).map_or(t.is_inact(), |u| u == t))
}

fn check_node(d: &Derivation) -> Result<(), String> {
    let c = &d.conclusion;
    let no_theta = || ensure(c.theta.is_empty(), "Θ must be empty");
    match (d.rule, &c.subject) {
        (Rule::TPar1, Subject::Network(n)) => {
            let [procs, buf] = premises(d, 2)? else { unreachable!() };
            ensure(procs.conclusion.gamma == c.gamma && buf.conclusion.gamma == c.gamma, "Γ differs")?;
            ensure(procs.conclusion.delta == c.delta, "process premise must use all of Δ")?;
            ensure(procs.conclusion.theta.is_empty(), "process premise must have empty Θ")?;
            let map = procs.conclusion.subject.process_map().ok_or("first premise must type processes")?;
            ensure(same_up_to_inactive(&map, &n.processes), "process premise types a different network")?;
            ensure(buf.conclusion.subject == Subject::Buffer(n.buffer.clone()), "second premise must type the buffer")?;
            ensure(buf.conclusion.delta.is_empty(), "buffer premise must have empty Δ")?;
            ensure(buf.conclusion.theta == c.theta, "buffer premise must use all of Θ")
        }
        (Rule::TPar2, Subject::Processes(map)) => {
            no_theta()?;
            let [left, right] = premises(d, 2)? else { unreachable!() };
            ensure(left.conclusion.gamma == c.gamma && right.conclusion.gamma == c.gamma, "Γ differs")?;
            let Subject::Role(role, term) = &left.conclusion.subject else {
                return Err("first premise must type a single role".to_owned());
            };
            let mut rest = right.conclusion.subject.process_map().ok_or("second premise must type processes")?;
            ensure(!rest.contains_key(role), "premises overlap on a role")?;
            rest.insert(role.clone(), term.clone());
            ensure(same_up_to_inactive(&rest, map), "premises do not compose to the conclusion")?;
            let delta = left.conclusion.delta.compose(&right.conclusion.delta).ok_or("Δ domains overlap")?;
            ensure(delta == c.delta, "Δ is not the composition of the premises' contexts")?;
            ensure(left.conclusion.theta.is_empty() && right.conclusion.theta.is_empty(), "Θ must be empty")
        }
        (Rule::TParProc, Subject::Role(role, term)) => {
            no_theta()?;
            let [left, right] = premises(d, 2)? else { unreachable!() };
            let (Subject::Role(r1, t1), Subject::Role(r2, t2)) = (&left.conclusion.subject, &right.conclusion.subject)
            else {
                return Err("premises must type threads".to_owned());
            };
            ensure(r1 == role && r2 == role, "premises type another role")?;
            ensure(ProcessTerm::par(t1.clone(), t2.clone()) == *term, "threads do not compose to the conclusion")?;
            ensure(left.conclusion.gamma == c.gamma && right.conclusion.gamma == c.gamma, "Γ differs")?;
            ensure(
                ctx_add(&left.conclusion.delta, &right.conclusion.delta) == c.delta,
                "Δ is not split between the threads",
            )
        }
        (Rule::T0, Subject::Role(_, t)) => {
            no_theta()?;
            premises(d, 0)?;
            ensure(t.is_inact(), "subject must be inactive")?;
            ensure(end_pred(&c.delta), "Δ must be end-typed")
        }
        (Rule::TS, Subject::Endpoint(role, ty)) => {
            no_theta()?;
            premises(d, 0)?;
            ensure(c.delta == DeltaCtx::singleton(role.clone(), ty.clone()), "Δ must be exactly the endpoint")
        }
        (Rule::TSend, Subject::Role(role, ProcessTerm::Lin(Process::Send { peer, label, payload, cont }))) => {
            no_theta()?;
            let ps = premises(d, payload.len() + 2)?;
            let arms = endpoint_premise(&ps[0], role, &c.delta, &c.gamma)?;
            let SessionType::Select(arms) = arms else {
                return Err("endpoint must be a selection type".to_owned());
            };
            let arm = arms
                .iter()
                .find(|a| a.peer == *peer && a.label == *label)
                .ok_or("the selection does not offer the sent couple")?;
            ensure(arm.payload.len() == payload.len(), "payload arity differs from the type")?;
            for ((e, b), p) in payload.iter().zip(&arm.payload).zip(&ps[1..]) {
                ensure(p.conclusion.subject == Subject::Payload(e.clone(), *b), "payload premise mismatch")?;
                ensure(p.conclusion.gamma == c.gamma, "Γ differs")?;
                ensure(p.conclusion.delta.is_empty(), "payload premise must have empty Δ")?;
                ensure(matches!(p.rule, Rule::TVal | Rule::TVar | Rule::TCall), "payload premise has a wrong rule")?;
            }
            continuation(&ps[ps.len() - 1], role, cont, &arm.cont, &c.gamma)
        }
        (Rule::TRecv, Subject::Role(role, ProcessTerm::Lin(Process::Branch { arms, timeout }))) => {
            no_theta()?;
            let ps = premises(d, 1 + arms.len() + usize::from(timeout.is_some()))?;
            let ty = endpoint_premise(&ps[0], role, &c.delta, &c.gamma)?;
            let SessionType::Branch { arms: tarms, timeout: ttimeout } = ty else {
                return Err("endpoint must be a branching type".to_owned());
            };
            ensure(timeout.is_some() == ttimeout.is_some(), "timeout arm present in only one of process and type")?;
            arm_premises(&ps[1..=arms.len()], role, arms, tarms, c)?;
            if let (Some(p), Some(s)) = (timeout, ttimeout) {
                continuation(&ps[ps.len() - 1], role, p, s, &c.gamma)?;
            }
            Ok(())
        }
        (Rule::TBang, Subject::Role(role, ProcessTerm::Server(arms))) => {
            no_theta()?;
            ensure(c.delta.is_empty(), "Δ must be empty")?;
            let r = c.gamma.replicated.get(role).ok_or("Γ has no replicated type for the role")?;
            let ps = premises(d, arms.len())?;
            arm_premises(ps, role, arms, &r.arms, c)
        }
        (Rule::TChoice, Subject::Role(role, ProcessTerm::Lin(Process::Choice(alts)))) => {
            no_theta()?;
            let ps = premises(d, alts.len())?;
            ensure(!alts.is_empty(), "choice must be nonempty")?;
            for (p, alt) in ps.iter().zip(alts) {
                ensure(
                    p.conclusion.subject == Subject::Role(role.clone(), ProcessTerm::Lin(alt.clone())),
                    "premise types a different alternative",
                )?;
                ensure(
                    p.conclusion.gamma == c.gamma && p.conclusion.delta == c.delta,
                    "alternatives must share Γ and Δ",
                )?;
            }
            Ok(())
        }
        (Rule::TVal, Subject::Payload(Expr::Val(v), b)) => {
            premises(d, 0)?;
            ensure(v.base_type() == *b, "value is not of the type")
        }
        (Rule::TVar, Subject::Payload(Expr::Var(x), b)) => {
            premises(d, 0)?;
            ensure(c.gamma.vars.get(x) == Some(b), "Γ does not give the variable this type")
        }
        (Rule::TCall, Subject::Payload(Expr::Call(name, args), b)) => {
            let f = Builtin::lookup(name).ok_or("unknown builtin")?;
            ensure(f.result == *b, "builtin result type differs")?;
            let ps = premises(d, args.len())?;
            ensure(f.params.len() == args.len(), "builtin arity differs")?;
            for ((a, t), p) in args.iter().zip(f.params).zip(ps) {
                ensure(p.conclusion.subject == Subject::Payload(a.clone(), *t), "argument premise mismatch")?;
                ensure(p.conclusion.gamma == c.gamma, "Γ differs")?;
            }
            Ok(())
        }
        (Rule::TEmpty, Subject::Buffer(b)) => {
            premises(d, 0)?;
            ensure(b.is_empty(), "buffer must be empty")?;
            ensure(c.delta.is_empty(), "Δ must be empty")
        }
        (Rule::TBuf, Subject::Buffer(b)) => {
            ensure(c.delta.is_empty(), "Δ must be empty")?;
            let rest = d.premises.last().ok_or("missing buffer premise")?;
            let Subject::Buffer(rb) = &rest.conclusion.subject else {
                return Err("last premise must type a buffer".to_owned());
            };
            // Exactly one message was peeled off.
            let peeled: Vec<_> = b
                .distinct()
                .filter(|m| b.iter().filter(|x| x == m).count() != rb.iter().filter(|x| x == m).count())
                .collect();
            ensure(peeled.len() == 1 && rb.len() + 1 == b.len(), "premise buffer must drop exactly one message")?;
            let m = peeled[0];
            let ps = premises(d, m.payload.len() + 1)?;
            let mut tys = Vec::new();
            for (v, p) in m.payload.iter().zip(ps) {
                let Subject::Payload(Expr::Val(pv), t) = &p.conclusion.subject else {
                    return Err("payload premise mismatch".to_owned());
                };
                ensure(pv == v && p.rule == Rule::TVal, "payload premise mismatch")?;
                tys.push(*t);
            }
            let mut theta: ThetaCtx = rest.conclusion.theta.clone();
            theta.push(MessageType { src: m.src.clone(), dst: m.dst.clone(), label: m.label.clone(), payload: tys });
            ensure(theta == c.theta, "Θ must be the premise's Θ plus the message type")?;
            ensure(rest.conclusion.delta.is_empty() && rest.conclusion.gamma == c.gamma, "premise contexts differ")
        }
        (rule, subject) => Err(format!("rule {rule} does not apply to `{subject}`")),
    }
}

fn endpoint_premise<'a>(
    p: &'a Derivation,
    role: &Role,
    delta: &DeltaCtx,
    gamma: &crate::context::GammaCtx,
) -> Result<&'a SessionType, String> {
    ensure(p.rule == Rule::TS, "first premise must be an endpoint judgement")?;
    ensure(p.conclusion.delta == *delta && p.conclusion.gamma == *gamma, "endpoint premise contexts differ")?;
    match &p.conclusion.subject {
        Subject::Endpoint(r, ty) if r == role => Ok(ty),
        _ => Err("endpoint premise is about another role".to_owned()),
    }
}

fn continuation(
    p: &Derivation,
    role: &Role,
    proc: &Process,
    ty: &SessionType,
    gamma: &crate::context::GammaCtx,
) -> Result<(), String> {
    ensure(
        p.conclusion.subject == Subject::Role(role.clone(), ProcessTerm::Lin(proc.clone())),
        "continuation premise types a different process",
    )?;
    ensure(p.conclusion.delta == DeltaCtx::singleton(role.clone(), ty.clone()), "continuation premise has a wrong Δ")?;
    ensure(p.conclusion.gamma == *gamma, "continuation premise has a wrong Γ")
}

fn arm_premises(
    ps: &[Derivation],
    role: &Role,
    arms: &[RecvArm],
    tarms: &[TypeArm],
    c: &super::derivation::Judgement,
) -> Result<(), String> {
    ensure(arms.len() == tarms.len(), "process and type offer different couples")?;
    for (arm, p) in arms.iter().zip(ps) {
        let tarm = tarms.iter().find(|t| t.couple() == arm.couple()).ok_or("process arm missing from the type")?;
        ensure(arm.binders.len() == tarm.payload.len(), "binder count differs from payload arity")?;
        let g = c.gamma.with_vars(arm.binders.iter().cloned().zip(tarm.payload.iter().copied()));
        continuation(p, role, &arm.cont, &tarm.cont, &g)?;
    }
    Ok(())
}
