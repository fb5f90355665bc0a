use std::collections::{HashMap, VecDeque};

use crate::status::Status;
use crate::syntax::{Network, Process, ProcessTerm, ReliabilityRelation, Role};

use super::step::{enumerate_steps, NetStep};

/// Reachable networks, discovered breadth first from state 0.
#[derive(Clone, Debug)]
pub struct Exploration {
    pub states: Vec<Network>,
    pub index: HashMap<Network, usize>,
    /// `(from, step, to)`.
    pub edges: Vec<(usize, NetStep, usize)>,
    pub out: Vec<Vec<usize>>,
    pub parent: Vec<Option<usize>>,
    /// Expanded states with no reduction.
    pub terminals: Vec<usize>,
    /// Runtime type errors enabled in reachable states.
    pub faults: Vec<(usize, NetStep)>,
    pub expanded: Vec<bool>,
    pub exhausted: bool,
}

impl Exploration {
    pub fn path_to(&self, mut state: usize) -> Vec<NetStep> {
        let mut path = Vec::new();
        while let Some(e) = self.parent[state] {
            path.push(self.edges[e].1.clone());
            state = self.edges[e].0;
        }
        path.reverse();
        path
    }

    pub fn has_cycle(&self) -> bool {
        let n = self.states.len();
        let mut indeg = vec![0usize; n];
        for (_, _, to) in &self.edges {
            indeg[*to] += 1;
        }
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut seen = 0;
        while let Some(v) = queue.pop_front() {
            seen += 1;
            for &e in &self.out[v] {
                let w = self.edges[e].2;
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    queue.push_back(w);
                }
            }
        }
        seen < n
    }
}

/// Breadth-first reachability with at most `budget` distinct states.
pub fn explore_network(n: &Network, r: &ReliabilityRelation, budget: usize) -> Exploration {
    let mut x = Exploration {
        states: vec![n.clone()],
        index: HashMap::from([(n.clone(), 0)]),
        edges: Vec::new(),
        out: vec![Vec::new()],
        parent: vec![None],
        terminals: Vec::new(),
        faults: Vec::new(),
        expanded: vec![false],
        exhausted: false,
    };
    let mut truncated = false;
    let mut queue = VecDeque::from([0usize]);
    while let Some(v) = queue.pop_front() {
        let mut reductions = 0;
        for (step, next) in enumerate_steps(&x.states[v], r) {
            if step.is_fault() {
                x.faults.push((v, step));
                continue;
            }
            reductions += 1;
            let to = match x.index.get(&next) {
                Some(&w) => w,
                None if x.states.len() >= budget => {
                    truncated = true;
                    continue;
                }
                None => {
                    let w = x.states.len();
                    x.index.insert(next.clone(), w);
                    x.states.push(next);
                    x.out.push(Vec::new());
                    x.parent.push(Some(x.edges.len()));
                    x.expanded.push(false);
                    queue.push_back(w);
                    w
                }
            };
            x.out[v].push(x.edges.len());
            x.edges.push((v, step, to));
        }
        x.expanded[v] = true;
        if reductions == 0 {
            x.terminals.push(v);
        }
    }
    x.exhausted = !truncated;
    x
}

/// Outcome of a check over an exploration, with the offending state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetCheck {
    pub status: Status,
    pub witness: Option<usize>,
    pub reason: Option<String>,
}

impl NetCheck {
    fn holds_if(exhausted: bool) -> Self {
        NetCheck { status: Status::unless_truncated(exhausted), witness: None, reason: None }
    }

    fn violated(state: usize, reason: String) -> Self {
        NetCheck { status: Status::Violated, witness: Some(state), reason: Some(reason) }
    }
}

/// Every terminal network is idle: all roles inactive or servers only.
/// A stuck network found in a partial exploration is still a violation.
pub fn check_df_network(x: &Exploration) -> NetCheck {
    match x.terminals.iter().find(|&&t| !x.states[t].is_idle()) {
        Some(&t) => NetCheck::violated(t, format!("stuck network {}", x.states[t])),
        None => NetCheck::holds_if(x.exhausted),
    }
}

/// Deadlock freedom plus the absence of infinite reduction sequences.
pub fn check_term_network(x: &Exploration) -> NetCheck {
    let df = check_df_network(x);
    if df.status == Status::Violated {
        return df;
    }
    if x.has_cycle() {
        return NetCheck {
            status: Status::Violated,
            witness: None,
            reason: Some("reduction graph has a cycle".into()),
        };
    }
    df
}

/// Every active linear receive without a timeout waits only on reliable peers.
pub fn check_failure_handling(x: &Exploration, r: &ReliabilityRelation) -> NetCheck {
    for (i, n) in x.states.iter().enumerate() {
        if let Some((role, peer)) = unguarded_receive(n, r) {
            return NetCheck::violated(
                i,
                format!("role `{role}` waits on `{peer}` without a timeout over an unreliable link"),
            );
        }
    }
    NetCheck::holds_if(x.exhausted)
}

fn unguarded_receive<'a>(n: &'a Network, r: &ReliabilityRelation) -> Option<(&'a Role, &'a Role)> {
    for (role, term) in &n.processes {
        for op in term.operands() {
            if let ProcessTerm::Lin(Process::Branch { arms, timeout: None }) = op {
                if let Some(a) = arms.iter().find(|a| !r.is_reliable(role, &a.peer)) {
                    return Some((role, &a.peer));
                }
            }
        }
    }
    None
}
