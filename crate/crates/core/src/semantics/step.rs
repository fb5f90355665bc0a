use std::fmt;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::syntax::{Message, Network, Process, ProcessTerm, RecvArm, ReliabilityRelation, Role, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum StepRule {
    PSend,
    PRecv,
    PBangRecv,
    FDrop,
    FTimeout,
    ChoiceStep,
    /// A message that matches a receive by peer and label but not by arity,
    /// or a payload that fails to evaluate. Not a reduction.
    RuntimeTypeError,
}

impl fmt::Display for StepRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// One reduction of a network.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct NetStep {
    pub rule: StepRule,
    /// Acting role; absent for drops.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub role: Option<Role>,
    /// Produced, consumed or dropped message.
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "display_opt")]
    pub message: Option<Message>,
    /// Receive arm or choice alternative taken.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub arm: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn display_opt<T: fmt::Display, S: serde::Serializer>(v: &Option<T>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => s.collect_str(v),
        None => s.serialize_none(),
    }
}

impl NetStep {
    fn new(rule: StepRule, role: Option<&Role>) -> Self {
        NetStep { rule, role: role.cloned(), message: None, arm: None, error: None }
    }

    fn with_message(mut self, m: &Message) -> Self {
        self.message = Some(m.clone());
        self
    }

    fn with_arm(mut self, i: usize) -> Self {
        self.arm = Some(i);
        self
    }

    pub fn is_fault(&self) -> bool {
        self.rule == StepRule::RuntimeTypeError
    }
}

impl fmt::Display for NetStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.rule)?;
        if let Some(r) = &self.role {
            write!(f, " {r}")?;
        }
        if let Some(m) = &self.message {
            write!(f, " {m}")?;
        }
        if let Some(i) = self.arm {
            write!(f, " #{i}")?;
        }
        if let Some(e) = &self.error {
            write!(f, ": {e}")?;
        }
        Ok(())
    }
}

/// Digest of a network's canonical rendering.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct NetStateId(String);

impl NetStateId {
    pub fn of(n: &Network) -> Self {
        let digest = Sha256::digest(n.to_string().as_bytes());
        NetStateId(digest.iter().take(16).map(|b| format!("{b:02x}")).collect())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NetStateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Replaces operand `i` of `role` by `new` (and rebuilds canonically).
fn replace(n: &Network, role: &Role, ops: &[ProcessTerm], i: usize, new: Vec<ProcessTerm>) -> Network {
    let mut rest: Vec<ProcessTerm> = ops.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, t)| t.clone()).collect();
    rest.extend(new);
    let mut out = n.clone();
    out.processes.insert(role.clone(), ProcessTerm::from_operands(rest));
    out
}

/// Every one-step successor of `n`, plus runtime type errors (which leave the
/// network unchanged). Sorted and without duplicates.
pub fn enumerate_steps(n: &Network, r: &ReliabilityRelation) -> Vec<(NetStep, Network)> {
    let mut out: Vec<(NetStep, Network)> = Vec::new();
    for (role, term) in &n.processes {
        let ops = term.operands();
        for (i, op) in ops.iter().enumerate() {
            if i > 0 && ops[i - 1] == *op {
                continue;
            }
            match op {
                ProcessTerm::Par(_) => unreachable!("canonical operands are never parallel"),
                ProcessTerm::Server(arms) => {
                    for m in n.buffer.distinct().filter(|m| m.dst == *role) {
                        if let Some((k, arm)) = matching_arm(arms, m) {
                            let step = NetStep::new(StepRule::PBangRecv, Some(role)).with_message(m).with_arm(k);
                            match instantiate(arm, &m.payload) {
                                Ok(cont) => {
                                    let mut next = replace(n, role, ops, i, vec![op.clone(), ProcessTerm::Lin(cont)]);
                                    next.buffer.remove(m);
                                    out.push((step, next));
                                }
                                Err(e) => out.push((fault(step, e), n.clone())),
                            }
                        }
                    }
                }
                ProcessTerm::Lin(p) => lin_steps(n, role, ops, i, p, &mut out),
            }
        }
    }
    for m in n.buffer.distinct() {
        if !r.is_reliable(&m.src, &m.dst) {
            let mut next = n.clone();
            next.buffer.remove(m);
            out.push((NetStep::new(StepRule::FDrop, None).with_message(m), next));
        }
    }
    out.sort();
    out.dedup();
    out
}

fn fault(mut step: NetStep, e: String) -> NetStep {
    step.rule = StepRule::RuntimeTypeError;
    step.error = Some(e);
    step
}

fn matching_arm<'a>(arms: &'a [RecvArm], m: &Message) -> Option<(usize, &'a RecvArm)> {
    arms.iter().enumerate().find(|(_, a)| a.peer == m.src && a.label == m.label)
}

fn instantiate(arm: &RecvArm, payload: &[Value]) -> Result<Process, String> {
    if arm.binders.len() == payload.len() {
        Ok(arm.instantiate(payload))
    } else {
        Err(format!(
            "{}:{} carries {} value(s) but the receive binds {}",
            arm.peer,
            arm.label,
            payload.len(),
            arm.binders.len()
        ))
    }
}

fn lin_steps(n: &Network, role: &Role, ops: &[ProcessTerm], i: usize, p: &Process, out: &mut Vec<(NetStep, Network)>) {
    match p {
        Process::Inact => {}
        Process::Send { peer, label, payload, cont } => {
            let step = NetStep::new(StepRule::PSend, Some(role));
            match payload.iter().map(|e| e.eval()).collect::<Result<Vec<_>, _>>() {
                Ok(values) => {
                    let m = Message::new(role.clone(), peer.clone(), label.clone(), values);
                    let mut next = replace(n, role, ops, i, vec![ProcessTerm::Lin((**cont).clone())]);
                    next.buffer.push(m.clone());
                    out.push((step.with_message(&m), next));
                }
                Err(e) => out.push((fault(step, e), n.clone())),
            }
        }
        Process::Branch { arms, timeout } => {
            for m in n.buffer.distinct().filter(|m| m.dst == *role) {
                if let Some((k, arm)) = matching_arm(arms, m) {
                    let step = NetStep::new(StepRule::PRecv, Some(role)).with_message(m).with_arm(k);
                    match instantiate(arm, &m.payload) {
                        Ok(cont) => {
                            let mut next = replace(n, role, ops, i, vec![ProcessTerm::Lin(cont)]);
                            next.buffer.remove(m);
                            out.push((step, next));
                        }
                        Err(e) => out.push((fault(step, e), n.clone())),
                    }
                }
            }
            if let Some(t) = timeout {
                let next = replace(n, role, ops, i, vec![ProcessTerm::Lin((**t).clone())]);
                out.push((NetStep::new(StepRule::FTimeout, Some(role)), next));
            }
        }
        Process::Choice(alts) => {
            for (k, alt) in alts.iter().enumerate() {
                let next = replace(n, role, ops, i, vec![ProcessTerm::Lin(alt.clone())]);
                out.push((NetStep::new(StepRule::ChoiceStep, Some(role)).with_arm(k), next));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;

    fn rules(text: &str) -> Vec<StepRule> {
        let p = parse_program(text).unwrap();
        enumerate_steps(&p.network, &p.reliability).into_iter().map(|(s, _)| s.rule).collect()
    }

    #[test]
    fn nf_has_four_successors() {
        let mut got = rules(include_str!("../../corpus/nf.magpi"));
        got.sort();
        assert_eq!(got, [StepRule::PSend, StepRule::PRecv, StepRule::FDrop, StepRule::FTimeout]);
    }

    #[test]
    fn terminal_network_has_no_steps() {
        assert!(rules(include_str!("../../corpus/minimal.magpi")).is_empty());
    }

    #[test]
    fn ping_starts_with_the_client_send() {
        let p = parse_program(include_str!("../../corpus/ping.magpi")).unwrap();
        let steps = enumerate_steps(&p.network, &p.reliability);
        assert_eq!(steps.len(), 1);
        assert_eq!(steps[0].0.rule, StepRule::PSend);
        assert_eq!(steps[0].0.role, Some(Role::new("c")));
    }

    #[test]
    fn server_receive_spawns_a_copy() {
        let text = "reliable all\n\
                    buffer { c->s:req<3> }\n\
                    role s : !{ c:req(Int).+{ c:ans(Int).end } } = server { c:req(x).send c:ans<x>.end }\n\
                    role c : &{ s:ans(Int).end } = recv { s:ans(y).end }\n";
        let p = parse_program(text).unwrap();
        let steps = enumerate_steps(&p.network, &p.reliability);
        let (step, next) = &steps[0];
        assert_eq!(step.rule, StepRule::PBangRecv);
        let s = &next.processes[&Role::new("s")];
        assert_eq!(s.operands().len(), 2);
        assert!(s.to_string().contains("send c:ans<3>"), "{s}");
        assert!(next.buffer.is_empty());
    }

    #[test]
    fn arity_mismatch_is_a_fault() {
        let text = "reliable all\n\
                    buffer { p->q:m<1, 2> }\n\
                    role q : &{ p:m(Int).end } = recv { p:m(x).end }\n";
        let p = crate::parser::parse_unchecked(text).unwrap();
        let steps = enumerate_steps(&p.network, &p.reliability);
        assert_eq!(steps.len(), 1);
        assert!(steps[0].0.is_fault());
        assert_eq!(steps[0].1, p.network);
    }

    #[test]
    fn state_ids_identify_equal_networks() {
        let p = parse_program(include_str!("../../corpus/ping.magpi")).unwrap();
        let q = parse_program(include_str!("../../corpus/ping.magpi")).unwrap();
        assert_eq!(NetStateId::of(&p.network), NetStateId::of(&q.network));
        assert_eq!(NetStateId::of(&p.network).as_str().len(), 32);
        let (_, next) = enumerate_steps(&p.network, &p.reliability).remove(0);
        assert_ne!(NetStateId::of(&p.network), NetStateId::of(&next));
    }
}
