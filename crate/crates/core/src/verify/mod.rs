//! Safety, deadlock freedom and termination over the context LTS, and the
//! harnesses relating typed networks to their contexts.

mod harness;

use std::fmt;

use serde::Serialize;

use crate::context::{end_pred, GammaCtx};
use crate::lts::{reduce_closure, reduce_closure_until, Action, Closure, CtxState, Limits};
use crate::syntax::{MessageType, ReliabilityRelation, Role, SessionType, TypeArm};

pub use crate::status::Status;
pub use harness::{
    harness_session_fidelity, harness_subject_reduction, typing_judge, HarnessError, Judge, SfReport, SrConfig,
    SrCounterexample, SrReport, Unmatched,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Condition {
    /// A receive without timeout has an unreliable peer.
    PhiR1,
    /// A receive with timeout has only reliable peers.
    PhiR2,
    /// An in-flight message disagrees with a linear receive on payload types.
    PhiC,
    /// An in-flight message disagrees with a server on payload types.
    PhiBangC,
    Df,
    Term,
}

impl Condition {
    pub fn name(self) -> &'static str {
        match self {
            Condition::PhiR1 => "phi-r1",
            Condition::PhiR2 => "phi-r2",
            Condition::PhiC => "phi-c",
            Condition::PhiBangC => "phi-bang-c",
            Condition::Df => "df",
            Condition::Term => "term",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Condition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

/// Which state conditions a safety check enforces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ConditionSet {
    pub reliability: bool,
    pub payloads: bool,
}

impl Default for ConditionSet {
    fn default() -> Self {
        ConditionSet { reliability: true, payloads: true }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub condition: Condition,
    pub role: Role,
    pub detail: String,
}

/// Condition violations of a single state, one component at a time.
pub fn check_state_conditions(g: &GammaCtx, s: &CtxState, r: &ReliabilityRelation) -> Vec<Violation> {
    check_state_conditions_with(g, s, r, ConditionSet::default())
}

pub fn check_state_conditions_with(
    g: &GammaCtx,
    s: &CtxState,
    r: &ReliabilityRelation,
    conds: ConditionSet,
) -> Vec<Violation> {
    let mut out = Vec::new();
    for (role, ty) in s.delta.iter() {
        for comp in ty.components() {
            let SessionType::Branch { arms, timeout } = comp else { continue };
            if conds.reliability {
                match timeout {
                    None => {
                        if let Some(a) = arms.iter().find(|a| !r.is_reliable(role, &a.peer)) {
                            out.push(Violation {
                                condition: Condition::PhiR1,
                                role: role.clone(),
                                detail: format!("receive from `{}` has no timeout but the link is unreliable", a.peer),
                            });
                        }
                    }
                    Some(_) => {
                        if arms.iter().all(|a| r.is_reliable(role, &a.peer)) {
                            out.push(Violation {
                                condition: Condition::PhiR2,
                                role: role.clone(),
                                detail: "receive has a timeout but every peer is reliable".into(),
                            });
                        }
                    }
                }
            }
            if conds.payloads {
                payload_mismatches(s, role, arms, Condition::PhiC, &mut out);
            }
        }
    }
    if conds.payloads {
        for (role, rt) in &g.replicated {
            payload_mismatches(s, role, &rt.arms, Condition::PhiBangC, &mut out);
        }
    }
    out
}

fn payload_mismatches(s: &CtxState, role: &Role, arms: &[TypeArm], condition: Condition, out: &mut Vec<Violation>) {
    for m in s.theta.iter().filter(|m| m.dst == *role) {
        if let Some(a) = arms.iter().find(|a| a.peer == m.src && a.label == m.label) {
            if a.payload != m.payload {
                out.push(Violation {
                    condition,
                    role: role.clone(),
                    detail: format!("in-flight {m} does not match expected {}", expected(role, a)),
                });
            }
        }
    }
}

fn expected(role: &Role, a: &TypeArm) -> MessageType {
    MessageType::new(a.peer.clone(), role.clone(), a.label.clone(), a.payload.clone())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WitnessStep {
    pub action: Action,
    pub state: CtxState,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub condition: Option<Condition>,
    /// Actions from the initial state to the offending state.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<WitnessStep>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    pub states: usize,
    pub exhausted: bool,
}

impl Verdict {
    fn from_closure(c: &Closure) -> Self {
        Verdict {
            status: Status::unless_truncated(c.exhausted),
            condition: None,
            witness: None,
            detail: if c.cap_hit { Some("replicated-firing cap reached".into()) } else { None },
            states: c.states.len(),
            exhausted: c.exhausted,
        }
    }

    fn violated(c: &Closure, condition: Condition, at: usize, detail: String) -> Self {
        let witness = c.path_to(at).into_iter().map(|(action, s)| WitnessStep { action, state: c.states[s].clone() });
        Verdict {
            status: Status::Violated,
            condition: Some(condition),
            witness: Some(witness.collect()),
            detail: Some(detail),
            states: c.states.len(),
            exhausted: c.exhausted,
        }
    }

    /// The witness as `[a1, a2, ...]`.
    pub fn witness_actions(&self) -> Option<String> {
        self.witness.as_ref().map(|w| {
            let parts: Vec<String> = w.iter().map(|s| s.action.to_string()).collect();
            format!("[{}]", parts.join(", "))
        })
    }
}

/// Every reachable state satisfies the enforced conditions.
pub fn check_safety(g: &GammaCtx, s0: &CtxState, r: &ReliabilityRelation, limits: Limits) -> Verdict {
    check_safety_with(g, s0, r, limits, ConditionSet::default())
}

pub fn check_safety_with(
    g: &GammaCtx,
    s0: &CtxState,
    r: &ReliabilityRelation,
    limits: Limits,
    conds: ConditionSet,
) -> Verdict {
    let mut first = None;
    let c = reduce_closure_until(g, s0, limits, |s| {
        let v = check_state_conditions_with(g, s, r, conds);
        match v.into_iter().next() {
            Some(v) => {
                first = Some(v);
                true
            }
            None => false,
        }
    });
    match (c.stopped_at, first) {
        (Some(at), Some(v)) => Verdict::violated(&c, v.condition, at, format!("role `{}`: {}", v.role, v.detail)),
        _ => Verdict::from_closure(&c),
    }
}

/// Every reachable state without transitions is end-typed.
pub fn check_df_types(g: &GammaCtx, s0: &CtxState, limits: Limits) -> Verdict {
    df_of(&reduce_closure(g, s0, limits))
}

fn df_of(c: &Closure) -> Verdict {
    match c.terminals().find(|&t| !end_pred(&c.states[t].delta)) {
        Some(t) => Verdict::violated(c, Condition::Df, t, format!("stuck at {}", c.states[t])),
        None => Verdict::from_closure(c),
    }
}

/// Deadlock freedom on a finite, acyclic LTS. A cycle is a violation even
/// when the exploration was cut short, since the cycle itself is real.
pub fn check_term_types(g: &GammaCtx, s0: &CtxState, limits: Limits) -> Verdict {
    let c = reduce_closure(g, s0, limits);
    let df = df_of(&c);
    if df.status == Status::Violated {
        return df;
    }
    if let Some(cycle) = c.find_cycle() {
        let at = cycle[0];
        let mut v = Verdict::violated(&c, Condition::Term, at, format!("cycle through {} state(s)", cycle.len()));
        let witness = v.witness.get_or_insert_with(Vec::new);
        for (k, &from) in cycle.iter().enumerate() {
            let to = cycle[(k + 1) % cycle.len()];
            let e = c.out[from].iter().map(|&e| &c.edges[e]).find(|e| e.to == to).expect("cycle edge");
            witness.push(WitnessStep { action: e.action.clone(), state: c.states[to].clone() });
        }
        return v;
    }
    if df.status == Status::Holds {
        let k = c.longest_path().expect("acyclic");
        return Verdict { detail: Some(format!("every path ends within {k} step(s)")), ..df };
    }
    df
}

/// No server receives from another server.
pub fn check_tt(g: &GammaCtx) -> bool {
    g.replicated.values().all(|r| r.arms.iter().all(|a| !g.replicated.contains_key(&a.peer)))
}

/// Network-level claims licensed by type-level verdicts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Transfer {
    pub deadlock_free: bool,
    pub terminating: bool,
    pub claims: Vec<String>,
}

pub fn report_property_transfer(safety: Status, df: Status, term: Status) -> Transfer {
    let safe = safety == Status::Holds;
    let deadlock_free = safe && (df == Status::Holds || term == Status::Holds);
    let terminating = safe && term == Status::Holds;
    let mut claims = Vec::new();
    if deadlock_free {
        claims.push("network is deadlock free".to_owned());
    }
    if terminating {
        claims.push("network terminates".to_owned());
    }
    Transfer { deadlock_free, terminating, claims }
}
