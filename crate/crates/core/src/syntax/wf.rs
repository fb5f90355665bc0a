//! Side conditions on processes, types and reliability that the grammar alone
//! does not enforce.

use std::collections::{BTreeMap, BTreeSet};

use crate::diagnostic::{rules, Diagnostic, Location};

use super::names::{Label, Role};
use super::network::{Network, ReliabilityRelation};
use super::process::{Process, ProcessTerm, RecvArm};
use super::program::SourceMap;
use super::types::{ReplicatedType, SessionType, TypeArm};
use super::value::{Builtin, Expr};

/// Collects every well-formedness violation; empty iff the inputs are well formed.
pub fn check_well_formed(
    network: &Network,
    gamma: &BTreeMap<Role, ReplicatedType>,
    delta: &BTreeMap<Role, SessionType>,
    reliability: &ReliabilityRelation,
    spans: &SourceMap,
) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    for (role, term) in &network.processes {
        let at = spans.role(role);
        let mut ck = Checker { at, role, out: &mut out };
        ck.term(term, true);
        let mut fv = BTreeSet::new();
        term.free_vars(&mut fv);
        for x in fv {
            ck.error(rules::CLOSED, format!("variable `{x}` is not bound by any receive"));
        }
    }

    for (role, r) in gamma {
        let at = spans.role(role);
        let mut ck = Checker { at, role, out: &mut out };
        ck.replicated(r);
    }
    for (role, s) in delta {
        let at = spans.role(role);
        let mut ck = Checker { at, role, out: &mut out };
        if s.is_par() {
            ck.error(rules::RUNTIME_PAR, "parallel session types only arise at runtime");
        }
        ck.session(s);
    }

    for role in gamma.keys().filter(|r| delta.contains_key(*r)) {
        out.push(Diagnostic::error(
            spans.role(role),
            rules::DISJOINT_CONTEXTS,
            format!("role `{role}` has both a replicated and a linear type"),
        ));
    }

    let rel_at = spans.reliability.unwrap_or_else(Location::start);
    for pair in reliability.pairs().filter(|p| p.is_reflexive()) {
        out.push(Diagnostic::error(
            rel_at,
            rules::IRREFLEXIVE,
            format!("role `{}` cannot be paired with itself", pair.roles().0),
        ));
    }

    out
}

struct Checker<'a> {
    at: Location,
    role: &'a Role,
    out: &'a mut Vec<Diagnostic>,
}

impl Checker<'_> {
    fn error(&mut self, rule: &str, message: impl Into<String>) {
        let message = format!("in role `{}`: {}", self.role, message.into());
        self.out.push(Diagnostic::error(self.at, rule, message));
    }

    fn term(&mut self, term: &ProcessTerm, top: bool) {
        match term {
            ProcessTerm::Server(arms) => self.recv_arms(arms, "server"),
            ProcessTerm::Par(ops) => {
                if top {
                    self.error(rules::RUNTIME_PAR, "parallel composition only arises at runtime");
                }
                ops.iter().for_each(|t| self.term(t, false));
            }
            ProcessTerm::Lin(p) => self.process(p),
        }
    }

    fn recv_arms(&mut self, arms: &[RecvArm], what: &str) {
        if arms.is_empty() {
            self.error(rules::NONEMPTY, format!("{what} has no arms"));
        }
        self.distinct(arms.iter().map(RecvArm::couple), what);
        for a in arms {
            self.process(&a.cont);
        }
    }

    fn process(&mut self, p: &Process) {
        match p {
            Process::Inact => {}
            Process::Send { payload, cont, .. } => {
                payload.iter().for_each(|e| self.expr(e));
                self.process(cont);
            }
            Process::Branch { arms, timeout } => {
                self.recv_arms(arms, "receive");
                if let Some(t) = timeout {
                    self.process(t);
                }
            }
            Process::Choice(arms) => {
                if arms.is_empty() {
                    self.error(rules::NONEMPTY, "choice has no alternatives");
                }
                arms.iter().for_each(|p| self.process(p));
            }
        }
    }

    fn expr(&mut self, e: &Expr) {
        if let Expr::Call(name, args) = e {
            match Builtin::lookup(name) {
                None => self.error(rules::BUILTIN, format!("unknown function `{name}`")),
                Some(b) if b.params.len() != args.len() => self.error(
                    rules::BUILTIN,
                    format!("`{name}` takes {} argument(s), got {}", b.params.len(), args.len()),
                ),
                Some(_) => {}
            }
            args.iter().for_each(|a| self.expr(a));
        }
    }

    fn distinct<'b>(&mut self, couples: impl Iterator<Item = (&'b Role, &'b Label)>, what: &str) {
        let mut seen = BTreeSet::new();
        for (peer, label) in couples {
            if !seen.insert((peer, label)) {
                self.error(rules::DISTINCT_COUPLES, format!("{what} repeats the couple {peer}:{label}"));
            }
        }
    }

    fn type_arms(&mut self, arms: &[TypeArm], what: &str) {
        if arms.is_empty() {
            self.error(rules::NONEMPTY, format!("{what} type has no arms"));
        }
        self.distinct(arms.iter().map(TypeArm::couple), what);
        for a in arms {
            if a.cont.is_par() {
                self.error(rules::RUNTIME_PAR, "parallel session types only arise at runtime");
            }
            self.session(&a.cont);
        }
    }

    fn session(&mut self, s: &SessionType) {
        match s {
            SessionType::End => {}
            SessionType::Select(arms) => self.type_arms(arms, "selection"),
            SessionType::Branch { arms, timeout } => {
                self.type_arms(arms, "branching");
                if let Some(t) = timeout {
                    if t.is_par() {
                        self.error(rules::RUNTIME_PAR, "parallel session types only arise at runtime");
                    }
                    self.session(t);
                }
            }
            SessionType::Par(comps) => comps.iter().for_each(|c| self.session(c)),
        }
    }

    fn replicated(&mut self, r: &ReplicatedType) {
        self.type_arms(&r.arms, "replicated");
        // Labels a server accepts must not be received again by its own continuations.
        let mut inner = BTreeSet::new();
        for a in &r.arms {
            a.cont.received_labels(&mut inner);
        }
        let mut reported = BTreeSet::new();
        for a in &r.arms {
            if inner.contains(&a.label) && reported.insert(&a.label) {
                self.error(
                    rules::LABEL_POOL,
                    format!("server label `{}` is received again in a continuation", a.label),
                );
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::names::Var;

    fn ping_server() -> ReplicatedType {
        ReplicatedType::new(vec![TypeArm::new(
            "c",
            "ping",
            vec![],
            SessionType::Select(vec![TypeArm::new("c", "pong", vec![], SessionType::End)]),
        )])
    }

    fn check(
        network: &Network,
        gamma: &BTreeMap<Role, ReplicatedType>,
        delta: &BTreeMap<Role, SessionType>,
    ) -> Vec<String> {
        check_well_formed(network, gamma, delta, &ReliabilityRelation::none(), &SourceMap::default())
            .into_iter()
            .map(|d| d.rule)
            .collect()
    }

    #[test]
    fn server_sending_its_own_label_onwards_is_fresh() {
        // !c:req.+{w1:req} reuses `req` only as an output to another role.
        let r = ReplicatedType::new(vec![TypeArm::new(
            "c",
            "req",
            vec![],
            SessionType::Select(vec![TypeArm::new("w1", "req", vec![], SessionType::End)]),
        )]);
        let gamma = BTreeMap::from([(Role::new("s"), r)]);
        assert!(check(&Network::default(), &gamma, &BTreeMap::new()).is_empty());
        let gamma = BTreeMap::from([(Role::new("s"), ping_server())]);
        assert!(check(&Network::default(), &gamma, &BTreeMap::new()).is_empty());
    }

    #[test]
    fn server_receiving_its_label_again_is_rejected() {
        let r = ReplicatedType::new(vec![TypeArm::new(
            "c",
            "ping",
            vec![],
            SessionType::branch(vec![TypeArm::new("c", "ping", vec![], SessionType::End)], None),
        )]);
        let gamma = BTreeMap::from([(Role::new("s"), r)]);
        assert_eq!(check(&Network::default(), &gamma, &BTreeMap::new()), vec![rules::LABEL_POOL]);
    }

    #[test]
    fn repeated_branch_couple_is_rejected() {
        let arm = RecvArm::new("s", "pong", vec![], Process::Inact);
        let p = Process::branch(vec![arm.clone(), arm], None);
        let n = Network::new(BTreeMap::from([(Role::new("c"), ProcessTerm::Lin(p))]), Default::default());
        assert_eq!(check(&n, &BTreeMap::new(), &BTreeMap::new()), vec![rules::DISTINCT_COUPLES]);
    }

    #[test]
    fn free_variable_and_unknown_function_are_rejected() {
        let p = Process::send("q", "m", vec![Expr::Var(Var::new("x")), Expr::Call("g".into(), vec![])], Process::Inact);
        let n = Network::new(BTreeMap::from([(Role::new("p"), ProcessTerm::Lin(p))]), Default::default());
        let mut rules_hit = check(&n, &BTreeMap::new(), &BTreeMap::new());
        rules_hit.sort();
        assert_eq!(rules_hit, vec![rules::BUILTIN, rules::CLOSED]);
    }

    #[test]
    fn overlapping_contexts_and_reflexive_pairs_are_rejected() {
        let gamma = BTreeMap::from([(Role::new("s"), ping_server())]);
        let delta = BTreeMap::from([(Role::new("s"), SessionType::End)]);
        let rel = ReliabilityRelation::from_pairs([("p", "p")]);
        let diags = check_well_formed(&Network::default(), &gamma, &delta, &rel, &SourceMap::default());
        let mut got: Vec<_> = diags.iter().map(|d| d.rule.as_str()).collect();
        got.sort();
        assert_eq!(got, vec![rules::DISJOINT_CONTEXTS, rules::IRREFLEXIVE]);
    }

    #[test]
    fn runtime_par_is_rejected() {
        let t = ProcessTerm::Par(vec![
            ProcessTerm::Lin(Process::send("q", "a", vec![], Process::Inact)),
            ProcessTerm::Lin(Process::send("q", "b", vec![], Process::Inact)),
        ]);
        let n = Network::new(BTreeMap::from([(Role::new("p"), t)]), Default::default());
        assert_eq!(check(&n, &BTreeMap::new(), &BTreeMap::new()), vec![rules::RUNTIME_PAR]);
    }
}
