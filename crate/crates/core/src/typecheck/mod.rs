//! Derivation search for `Γ; Δ; Θ ⊢ N`.
//!
//! Δ is divided among roles syntactically: a linear thread can only be typed
//! by its own role's entry, so only the division of a role's parallel
//! components among that role's threads needs search. `end` entries of roles
//! without a process, and `end` components left over after every thread has
//! its component, are typed by an inactive thread (`P ≡ P | 0`).

mod derivation;
mod validate;

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::context::{ctx_add, end_pred, ContextTriple, DeltaCtx, GammaCtx, ThetaCtx};
use crate::diagnostic::{rules, Diagnostic, Location};
use crate::syntax::{
    BaseType, Buffer, Builtin, Expr, Network, Process, ProcessTerm, Program, RecvArm, Role, SessionType, SourceMap,
    TypeArm, Value,
};

pub use derivation::{Derivation, Judgement, Rule, Subject};
pub use validate::validate;

/// Why no derivation exists. Reports the failure reached deepest in the search.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{}{}", prefix(.role), .message)]
pub struct TypeError {
    pub role: Option<Role>,
    pub message: String,
    depth: usize,
}

fn prefix(role: &Option<Role>) -> String {
    role.as_ref().map(|r| format!("role `{r}` ")).unwrap_or_default()
}

impl TypeError {
    fn new(role: Option<&Role>, depth: usize, message: impl Into<String>) -> Self {
        TypeError { role: role.cloned(), message: message.into(), depth }
    }

    fn deeper(self, other: TypeError) -> TypeError {
        if other.depth > self.depth {
            other
        } else {
            self
        }
    }

    pub fn to_diagnostic(&self, spans: &SourceMap) -> Diagnostic {
        let at = self.role.as_ref().map_or_else(Location::start, |r| spans.role(r));
        Diagnostic::error(at, rules::TYPING, self.to_string())
    }
}

type TResult = Result<Derivation, TypeError>;

/// Searches for a derivation of `ctx ⊢ n`.
pub fn typecheck(n: &Network, ctx: &ContextTriple) -> TResult {
    let g = &ctx.gamma;
    let mut roles: Vec<(Role, ProcessTerm, DeltaCtx, Derivation)> = Vec::new();
    for (role, term) in &n.processes {
        let entry = ctx.delta.get(role);
        let d = check_role(g, role, term, entry)?;
        let delta = entry.map(|t| DeltaCtx::singleton(role.clone(), t.clone())).unwrap_or_default();
        roles.push((role.clone(), term.clone(), delta, d));
    }
    for (role, ty) in ctx.delta.iter().filter(|(r, _)| !n.processes.contains_key(*r)) {
        if !ty.is_end() {
            return Err(TypeError::new(Some(role), 0, format!("has session type `{ty}` but no process")));
        }
        let delta = DeltaCtx::singleton(role.clone(), ty.clone());
        let d = leaf(Rule::T0, g, &delta, Subject::Role(role.clone(), ProcessTerm::inact()));
        roles.push((role.clone(), ProcessTerm::inact(), delta, d));
    }

    let processes = chain_roles(g, roles);
    let buffer = check_buffer(g, &n.buffer, &ctx.theta)?;
    Ok(Derivation {
        rule: Rule::TPar1,
        conclusion: judgement(g, &ctx.delta, &ctx.theta, Subject::Network(n.clone())),
        premises: vec![processes, buffer],
    })
}

/// Typechecks a parsed program under its declared contexts.
pub fn typecheck_program(p: &Program) -> Result<Derivation, Diagnostic> {
    typecheck(&p.network, &p.contexts()).map_err(|e| e.to_diagnostic(&p.source_map))
}

/// Whether a payload expression has basic type `b` under `g`.
pub fn typecheck_value(e: &Expr, b: BaseType, g: &GammaCtx) -> bool {
    check_expr(g, e, b).is_ok()
}

/// Checks a payload expression, explaining any failure.
pub fn check_payload(e: &Expr, b: BaseType, g: &GammaCtx) -> Result<Derivation, String> {
    check_expr(g, e, b)
}

fn judgement(g: &GammaCtx, d: &DeltaCtx, t: &ThetaCtx, subject: Subject) -> Judgement {
    Judgement { gamma: g.clone(), delta: d.clone(), theta: t.clone(), subject }
}

fn leaf(rule: Rule, g: &GammaCtx, d: &DeltaCtx, subject: Subject) -> Derivation {
    Derivation { rule, conclusion: judgement(g, d, &ThetaCtx::new(), subject), premises: vec![] }
}

fn chain_roles(g: &GammaCtx, mut roles: Vec<(Role, ProcessTerm, DeltaCtx, Derivation)>) -> Derivation {
    let (_, _, mut delta, mut acc) = roles.pop().expect("a network has at least one role");
    let mut map = acc.conclusion.subject.process_map().expect("role subject");
    while let Some((role, term, d, deriv)) = roles.pop() {
        delta = d.compose(&delta).expect("one entry per role");
        map.insert(role, term);
        acc = Derivation {
            rule: Rule::TPar2,
            conclusion: judgement(g, &delta, &ThetaCtx::new(), Subject::Processes(map.clone())),
            premises: vec![deriv, acc],
        };
    }
    acc
}

/// A thread needs a session component unless it can only ever terminate.
fn needs_component(p: &Process) -> bool {
    match p {
        Process::Inact => false,
        Process::Choice(arms) => arms.iter().any(needs_component),
        _ => true,
    }
}

fn check_role(g: &GammaCtx, role: &Role, term: &ProcessTerm, entry: Option<&SessionType>) -> TResult {
    let delta = entry.map(|t| DeltaCtx::singleton(role.clone(), t.clone())).unwrap_or_default();
    if term.is_inact() {
        return check_linear(g, role, &Process::Inact, entry, 0);
    }

    let comps: Vec<SessionType> = entry.map(|t| t.components().to_vec()).unwrap_or_default();
    let (ends, active): (Vec<_>, Vec<_>) = comps.into_iter().partition(|c| matches!(c, SessionType::End));

    let mut threads: Vec<(&ProcessTerm, Option<usize>)> = Vec::new();
    let mut needing = 0;
    for op in term.operands() {
        match op {
            ProcessTerm::Lin(p) if needs_component(p) => {
                threads.push((op, Some(needing)));
                needing += 1;
            }
            _ => threads.push((op, None)),
        }
    }
    if needing != active.len() {
        let msg = match (entry, needing) {
            (None, _) => "has an active linear process but no session type".to_owned(),
            (Some(t), 0) => format!("has no active linear process left for session type `{t}`"),
            (Some(t), n) => format!(
                "has {n} active linear thread(s) but session type `{t}` provides {} unfinished component(s)",
                active.len()
            ),
        };
        return Err(TypeError::new(Some(role), 0, msg));
    }

    let lin: Vec<&Process> = threads
        .iter()
        .filter_map(|(op, slot)| match (op, slot) {
            (ProcessTerm::Lin(p), Some(_)) => Some(p),
            _ => None,
        })
        .collect();
    let assignment = assign(g, role, &lin, &active)?;

    let mut items: Vec<(ProcessTerm, DeltaCtx, Derivation)> = Vec::new();
    let mut assigned = assignment.into_iter();
    for (op, slot) in threads {
        let item = match (op, slot) {
            (_, Some(_)) => assigned.next().expect("one derivation per active thread"),
            (ProcessTerm::Server(arms), None) => (op.clone(), DeltaCtx::new(), check_server(g, role, arms)?),
            (ProcessTerm::Lin(p), None) => (op.clone(), DeltaCtx::new(), check_linear(g, role, p, None, 0)?),
            (ProcessTerm::Par(_), None) => unreachable!("operands are never parallel"),
        };
        items.push(item);
    }
    if !ends.is_empty() {
        let d = DeltaCtx::singleton(role.clone(), SessionType::from_components(ends).expect("nonempty"));
        let deriv = leaf(Rule::T0, g, &d, Subject::Role(role.clone(), ProcessTerm::inact()));
        items.push((ProcessTerm::inact(), d, deriv));
    }

    let (term_acc, delta_acc, deriv) = chain_threads(g, role, items);
    debug_assert_eq!(term_acc, *term);
    debug_assert_eq!(delta_acc, delta);
    Ok(deriv)
}

fn chain_threads(
    g: &GammaCtx,
    role: &Role,
    mut items: Vec<(ProcessTerm, DeltaCtx, Derivation)>,
) -> (ProcessTerm, DeltaCtx, Derivation) {
    let (mut term, mut delta, mut acc) = items.pop().expect("at least one thread");
    while let Some((t, d, deriv)) = items.pop() {
        term = ProcessTerm::par(t, term);
        delta = ctx_add(&d, &delta);
        acc = Derivation {
            rule: Rule::TParProc,
            conclusion: judgement(g, &delta, &ThetaCtx::new(), Subject::Role(role.clone(), term.clone())),
            premises: vec![deriv, acc],
        };
    }
    (term, delta, acc)
}

/// Matches active threads to unfinished components one-to-one, backtracking.
fn assign(
    g: &GammaCtx,
    role: &Role,
    threads: &[&Process],
    comps: &[SessionType],
) -> Result<Vec<(ProcessTerm, DeltaCtx, Derivation)>, TypeError> {
    let mut memo: HashMap<(usize, usize), TResult> = HashMap::new();
    let mut used = vec![false; comps.len()];
    let mut chosen = Vec::new();
    let mut best: Option<TypeError> = None;
    if assign_from(g, role, threads, comps, 0, &mut used, &mut chosen, &mut memo, &mut best) {
        Ok(chosen
            .into_iter()
            .enumerate()
            .map(|(i, j)| {
                let d = memo.remove(&(i, j)).expect("memoized").expect("succeeded");
                (ProcessTerm::Lin(threads[i].clone()), DeltaCtx::singleton(role.clone(), comps[j].clone()), d)
            })
            .collect())
    } else {
        Err(best.expect("a failure was recorded"))
    }
}

#[allow(clippy::too_many_arguments)]
fn assign_from(
    g: &GammaCtx,
    role: &Role,
    threads: &[&Process],
    comps: &[SessionType],
    i: usize,
    used: &mut [bool],
    chosen: &mut Vec<usize>,
    memo: &mut HashMap<(usize, usize), TResult>,
    best: &mut Option<TypeError>,
) -> bool {
    if i == threads.len() {
        return true;
    }
    let mut tried: BTreeSet<&SessionType> = BTreeSet::new();
    for j in 0..comps.len() {
        if used[j] || !tried.insert(&comps[j]) {
            continue;
        }
        let r = memo.entry((i, j)).or_insert_with(|| check_linear(g, role, threads[i], Some(&comps[j]), 0));
        if let Err(e) = r {
            *best = Some(match best.take() {
                Some(b) => b.deeper(e.clone()),
                None => e.clone(),
            });
            continue;
        }
        used[j] = true;
        chosen.push(j);
        if assign_from(g, role, threads, comps, i + 1, used, chosen, memo, best) {
            return true;
        }
        chosen.pop();
        used[j] = false;
    }
    false
}

fn check_linear(g: &GammaCtx, role: &Role, p: &Process, ty: Option<&SessionType>, depth: usize) -> TResult {
    let delta = ty.map(|t| DeltaCtx::singleton(role.clone(), t.clone())).unwrap_or_default();
    let subject = Subject::Role(role.clone(), ProcessTerm::Lin(p.clone()));
    let fail = |msg: String| Err(TypeError::new(Some(role), depth, msg));
    let endpoint = |t: &SessionType| leaf(Rule::TS, g, &delta, Subject::Endpoint(role.clone(), t.clone()));
    match p {
        Process::Inact => {
            if end_pred(&delta) {
                Ok(leaf(Rule::T0, g, &delta, subject))
            } else {
                fail(format!("terminates but its session type is `{}`", ty.expect("non-end type")))
            }
        }
        Process::Send { peer, label, payload, cont } => {
            let Some(t @ SessionType::Select(arms)) = ty else {
                return fail(format!("sends {peer}:{label} but its session type is {}", describe(ty)));
            };
            let Some(arm) = arms.iter().find(|a| a.peer == *peer && a.label == *label) else {
                return fail(format!("sends {peer}:{label}, which selection type `{t}` does not offer"));
            };
            if arm.payload.len() != payload.len() {
                return fail(format!(
                    "sends {peer}:{label} with {} value(s) but the type expects {}",
                    payload.len(),
                    arm.payload.len()
                ));
            }
            let mut premises = vec![endpoint(t)];
            for (e, b) in payload.iter().zip(&arm.payload) {
                match check_expr(g, e, *b) {
                    Ok(d) => premises.push(d),
                    Err(why) => return fail(format!("payload of {peer}:{label}: {why}")),
                }
            }
            premises.push(check_linear(g, role, cont, Some(&arm.cont), depth + 1)?);
            Ok(Derivation { rule: Rule::TSend, conclusion: judgement(g, &delta, &ThetaCtx::new(), subject), premises })
        }
        Process::Branch { arms, timeout } => {
            let Some(t @ SessionType::Branch { arms: tarms, timeout: ttimeout }) = ty else {
                return fail(format!("receives but its session type is {}", describe(ty)));
            };
            let pairs = match_arms(arms, tarms).map_err(|m| TypeError::new(Some(role), depth, m))?;
            match (timeout, ttimeout) {
                (Some(_), None) => return fail(format!("has a timeout arm but branching type `{t}` does not")),
                (None, Some(_)) => return fail(format!("has no timeout arm but branching type `{t}` does")),
                _ => {}
            }
            let mut premises = vec![endpoint(t)];
            let mut err: Option<TypeError> = None;
            for (arm, tarm) in pairs {
                match check_arm(g, role, arm, tarm, depth) {
                    Ok(d) => premises.push(d),
                    Err(e) => err = Some(err.map_or(e.clone(), |b| b.deeper(e))),
                }
            }
            if let (Some(p), Some(s)) = (timeout, ttimeout) {
                match check_linear(g, role, p, Some(s), depth + 1) {
                    Ok(d) => premises.push(d),
                    Err(e) => err = Some(err.map_or(e.clone(), |b| b.deeper(e))),
                }
            }
            if let Some(e) = err {
                return Err(e);
            }
            Ok(Derivation { rule: Rule::TRecv, conclusion: judgement(g, &delta, &ThetaCtx::new(), subject), premises })
        }
        Process::Choice(alts) => {
            if alts.is_empty() {
                return fail("empty choice".to_owned());
            }
            let premises =
                alts.iter().map(|a| check_linear(g, role, a, ty, depth + 1)).collect::<Result<Vec<_>, _>>()?;
            Ok(Derivation {
                rule: Rule::TChoice,
                conclusion: judgement(g, &delta, &ThetaCtx::new(), subject),
                premises,
            })
        }
    }
}

fn describe(ty: Option<&SessionType>) -> String {
    match ty {
        None => "missing".to_owned(),
        Some(t) => format!("`{t}`"),
    }
}

/// Pairs process arms with type arms; the two must offer exactly the same couples.
fn match_arms<'a>(arms: &'a [RecvArm], tarms: &'a [TypeArm]) -> Result<Vec<(&'a RecvArm, &'a TypeArm)>, String> {
    let mut pairs = Vec::new();
    for arm in arms {
        match tarms.iter().find(|t| t.couple() == arm.couple()) {
            Some(t) => pairs.push((arm, t)),
            None => return Err(format!("receives {}:{}, which the type does not offer", arm.peer, arm.label)),
        }
    }
    if let Some(t) = tarms.iter().find(|t| !arms.iter().any(|a| a.couple() == t.couple())) {
        return Err(format!("does not handle {}:{}, which the type offers", t.peer, t.label));
    }
    Ok(pairs)
}

fn check_arm(g: &GammaCtx, role: &Role, arm: &RecvArm, tarm: &TypeArm, depth: usize) -> TResult {
    if arm.binders.len() != tarm.payload.len() {
        return Err(TypeError::new(
            Some(role),
            depth,
            format!(
                "receives {}:{} with {} binder(s) but the type carries {} value(s)",
                arm.peer,
                arm.label,
                arm.binders.len(),
                tarm.payload.len()
            ),
        ));
    }
    let g2 = g.with_vars(arm.binders.iter().cloned().zip(tarm.payload.iter().copied()));
    check_linear(&g2, role, &arm.cont, Some(&tarm.cont), depth + 1)
}

fn check_server(g: &GammaCtx, role: &Role, arms: &[RecvArm]) -> TResult {
    let Some(r) = g.replicated.get(role) else {
        return Err(TypeError::new(Some(role), 0, "is a server but has no replicated type"));
    };
    let pairs = match_arms(arms, &r.arms).map_err(|m| TypeError::new(Some(role), 0, m))?;
    let mut premises = Vec::new();
    for (arm, tarm) in pairs {
        premises.push(check_arm(g, role, arm, tarm, 0)?);
    }
    let subject = Subject::Role(role.clone(), ProcessTerm::Server(arms.to_vec()));
    Ok(Derivation {
        rule: Rule::TBang,
        conclusion: judgement(g, &DeltaCtx::new(), &ThetaCtx::new(), subject),
        premises,
    })
}

fn check_expr(g: &GammaCtx, e: &Expr, b: BaseType) -> Result<Derivation, String> {
    let node = |rule, premises| Derivation {
        rule,
        conclusion: judgement(g, &DeltaCtx::new(), &ThetaCtx::new(), Subject::Payload(e.clone(), b)),
        premises,
    };
    match e {
        Expr::Val(v) if v.base_type() == b => Ok(node(Rule::TVal, vec![])),
        Expr::Val(v) => Err(format!("{v} is not a value of type {b}")),
        Expr::Var(x) => match g.vars.get(x) {
            Some(t) if *t == b => Ok(node(Rule::TVar, vec![])),
            Some(t) => Err(format!("variable `{x}` has type {t}, not {b}")),
            None => Err(format!("variable `{x}` is unbound")),
        },
        Expr::Call(name, args) => {
            let f = Builtin::lookup(name).ok_or_else(|| format!("unknown function `{name}`"))?;
            if f.result != b {
                return Err(format!("`{name}` returns {}, not {b}", f.result));
            }
            if f.params.len() != args.len() {
                return Err(format!("`{name}` takes {} argument(s)", f.params.len()));
            }
            let premises =
                args.iter().zip(f.params).map(|(a, p)| check_expr(g, a, *p)).collect::<Result<Vec<_>, _>>()?;
            Ok(node(Rule::TCall, premises))
        }
    }
}

/// Consumes one Θ entry per buffered message. A literal has exactly one basic
/// type, so a message matches only Θ entries equal to its literal type and
/// taking any equal entry is as good as any other.
fn check_buffer(g: &GammaCtx, buffer: &Buffer, theta: &ThetaCtx) -> TResult {
    let msgs: Vec<_> = buffer.iter().cloned().collect();
    let mut thetas = vec![theta.clone()];
    for m in &msgs {
        let mut next = thetas.last().expect("nonempty").clone();
        if !next.remove(&m.literal_type()) {
            return Err(TypeError::new(
                None,
                0,
                format!("buffered message {m} has no matching type {} in Θ", m.literal_type()),
            ));
        }
        thetas.push(next);
    }
    let empty = DeltaCtx::new();
    let rest_theta = thetas.pop().expect("nonempty");
    let mut acc = Derivation {
        rule: Rule::TEmpty,
        conclusion: judgement(g, &empty, &rest_theta, Subject::Buffer(Buffer::new())),
        premises: vec![],
    };
    for (i, m) in msgs.iter().enumerate().rev() {
        let mut premises: Vec<Derivation> = m
            .payload
            .iter()
            .map(|v: &Value| check_expr(g, &Expr::Val(v.clone()), v.base_type()).expect("literal"))
            .collect();
        premises.push(acc);
        acc = Derivation {
            rule: Rule::TBuf,
            conclusion: judgement(g, &empty, &thetas[i], Subject::Buffer(msgs[i..].iter().cloned().collect())),
            premises,
        };
    }
    Ok(acc)
}

#[cfg(test)]
mod tests;
