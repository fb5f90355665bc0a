//! Transitions of (Δ, Θ) under a fixed Γ, and breadth-first reachability.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::context::{DeltaCtx, GammaCtx, ThetaCtx};
use crate::syntax::{Label, MessageType, Role, SessionType};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    /// `src` selects `dst:label`, putting a message type in flight.
    Output {
        src: Role,
        dst: Role,
        label: Label,
    },
    /// `dst` consumes an in-flight `src -> dst:label`.
    Comm {
        src: Role,
        dst: Role,
        label: Label,
    },
    Timeout(Role),
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Output { src, dst, label } => write!(f, "{src}⊕{dst}:{label}"),
            Action::Comm { src, dst, label } => write!(f, "{src}→{dst}:{label}"),
            Action::Timeout(r) => write!(f, "{r}⏱"),
        }
    }
}

impl Serialize for Action {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// A state of the context LTS. Γ is fixed per run and not part of the state.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CtxState {
    pub delta: DeltaCtx,
    pub theta: ThetaCtx,
}

impl CtxState {
    pub fn new(delta: DeltaCtx, theta: ThetaCtx) -> Self {
        CtxState { delta, theta }
    }
}

impl fmt::Display for CtxState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}; {}", self.delta, self.theta)
    }
}

impl Serialize for CtxState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Transition {
    pub action: Action,
    /// Fired by a replicated server arm in Γ.
    pub replicated: bool,
    pub target: CtxState,
}

/// Every one-step successor of `s`, sorted and without duplicates.
pub fn transitions(g: &GammaCtx, s: &CtxState) -> Vec<Transition> {
    let mut out = BTreeSet::new();
    for (role, ty) in s.delta.iter() {
        let comps = ty.components();
        for (i, comp) in comps.iter().enumerate() {
            if i > 0 && comps[i - 1] == *comp {
                continue;
            }
            let rest: Vec<SessionType> =
                comps.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, c)| c.clone()).collect();
            let replace = |cont: &SessionType, theta: ThetaCtx| {
                let mut delta = s.delta.clone();
                let mut c = rest.clone();
                c.push(cont.clone());
                delta.set_components(role.clone(), c);
                CtxState { delta, theta }
            };
            match comp {
                SessionType::End | SessionType::Par(_) => {}
                SessionType::Select(arms) => {
                    for arm in arms {
                        let mut theta = s.theta.clone();
                        theta.push(MessageType::new(
                            role.clone(),
                            arm.peer.clone(),
                            arm.label.clone(),
                            arm.payload.clone(),
                        ));
                        out.insert(Transition {
                            action: Action::Output {
                                src: role.clone(),
                                dst: arm.peer.clone(),
                                label: arm.label.clone(),
                            },
                            replicated: false,
                            target: replace(&arm.cont, theta),
                        });
                    }
                }
                SessionType::Branch { arms, timeout } => {
                    if let Some(t) = timeout {
                        out.insert(Transition {
                            action: Action::Timeout(role.clone()),
                            replicated: false,
                            target: replace(t, s.theta.clone()),
                        });
                    }
                    for arm in arms {
                        let m =
                            MessageType::new(arm.peer.clone(), role.clone(), arm.label.clone(), arm.payload.clone());
                        let mut theta = s.theta.clone();
                        if theta.remove(&m) {
                            out.insert(Transition {
                                action: Action::Comm {
                                    src: arm.peer.clone(),
                                    dst: role.clone(),
                                    label: arm.label.clone(),
                                },
                                replicated: false,
                                target: replace(&arm.cont, theta),
                            });
                        }
                    }
                }
            }
        }
    }
    for (role, r) in &g.replicated {
        for arm in &r.arms {
            let m = MessageType::new(arm.peer.clone(), role.clone(), arm.label.clone(), arm.payload.clone());
            let mut theta = s.theta.clone();
            if theta.remove(&m) {
                let mut delta = s.delta.clone();
                delta.add(role.clone(), arm.cont.clone());
                out.insert(Transition {
                    action: Action::Comm { src: arm.peer.clone(), dst: role.clone(), label: arm.label.clone() },
                    replicated: true,
                    target: CtxState { delta, theta },
                });
            }
        }
    }
    out.into_iter().collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Maximum number of distinct states.
    pub budget: usize,
    /// Maximum replicated-server firings along any explored path.
    pub bang_cap: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { budget: 1_000_000, bang_cap: 64 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub action: Action,
    pub replicated: bool,
}

/// The reachable part of the LTS, discovered breadth first from state 0.
#[derive(Clone, Debug)]
pub struct Closure {
    pub states: Vec<CtxState>,
    pub index: HashMap<CtxState, usize>,
    pub edges: Vec<Edge>,
    /// Outgoing edge indices per state, in transition order.
    pub out: Vec<Vec<usize>>,
    /// The edge that first discovered each state.
    pub parent: Vec<Option<usize>>,
    /// Number of transitions of each fully expanded state.
    pub fanout: Vec<Option<usize>>,
    /// Every reachable state was expanded.
    pub exhausted: bool,
    /// Some path was cut by the replicated-firing cap.
    pub cap_hit: bool,
    /// The state at which a stop predicate fired.
    pub stopped_at: Option<usize>,
}

impl Closure {
    /// Shortest action path from the initial state.
    pub fn path_to(&self, mut state: usize) -> Vec<(Action, usize)> {
        let mut path = Vec::new();
        while let Some(e) = self.parent[state] {
            let edge = &self.edges[e];
            path.push((edge.action.clone(), state));
            state = edge.from;
        }
        path.reverse();
        path
    }

    /// Expanded states without transitions.
    pub fn terminals(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.states.len()).filter(|&i| self.fanout[i] == Some(0))
    }

    /// A cycle in the explored edge graph, as a list of states, if any.
    pub fn find_cycle(&self) -> Option<Vec<usize>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Active,
            Done,
        }
        let n = self.states.len();
        let mut mark = vec![Mark::New; n];
        for root in 0..n {
            if mark[root] != Mark::New {
                continue;
            }
            let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
            mark[root] = Mark::Active;
            while let Some(&mut (v, ref mut k)) = stack.last_mut() {
                if let Some(&e) = self.out[v].get(*k) {
                    *k += 1;
                    let w = self.edges[e].to;
                    match mark[w] {
                        Mark::New => {
                            mark[w] = Mark::Active;
                            stack.push((w, 0));
                        }
                        Mark::Active => {
                            let start = stack.iter().position(|&(u, _)| u == w).expect("on stack");
                            return Some(stack[start..].iter().map(|&(u, _)| u).collect());
                        }
                        Mark::Done => {}
                    }
                } else {
                    mark[v] = Mark::Done;
                    stack.pop();
                }
            }
        }
        None
    }

    /// Length of the longest path, for an acyclic graph.
    pub fn longest_path(&self) -> Option<usize> {
        if self.find_cycle().is_some() {
            return None;
        }
        let n = self.states.len();
        let mut indeg = vec![0usize; n];
        for e in &self.edges {
            indeg[e.to] += 1;
        }
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut dist = vec![0usize; n];
        while let Some(v) = queue.pop_front() {
            for &e in &self.out[v] {
                let w = self.edges[e].to;
                dist[w] = dist[w].max(dist[v] + 1);
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    queue.push_back(w);
                }
            }
        }
        Some(dist.into_iter().max().unwrap_or(0))
    }

    /// Graphviz rendering of the explored graph.
    pub fn to_dot(&self) -> String {
        let esc = |s: String| s.replace('\\', "\\\\").replace('"', "\\\"");
        let mut out = String::from("digraph lts {\n  node [shape=box];\n");
        for (i, s) in self.states.iter().enumerate() {
            out.push_str(&format!("  s{i} [label=\"{}\"];\n", esc(s.to_string())));
        }
        for e in &self.edges {
            let style = if e.replicated { ", style=dashed" } else { "" };
            out.push_str(&format!("  s{} -> s{} [label=\"{}\"{style}];\n", e.from, e.to, esc(e.action.to_string())));
        }
        out.push_str("}\n");
        out
    }
}

pub fn reduce_closure(g: &GammaCtx, s0: &CtxState, limits: Limits) -> Closure {
    reduce_closure_until(g, s0, limits, |_| false)
}

/// Breadth-first closure that stops as soon as `stop` holds for a newly
/// discovered state. The stopping state is then reached by a shortest path.
pub fn reduce_closure_until(
    g: &GammaCtx,
    s0: &CtxState,
    limits: Limits,
    mut stop: impl FnMut(&CtxState) -> bool,
) -> Closure {
    let mut c = Closure {
        states: vec![s0.clone()],
        index: HashMap::from([(s0.clone(), 0)]),
        edges: Vec::new(),
        out: vec![Vec::new()],
        parent: vec![None],
        fanout: vec![None],
        exhausted: false,
        cap_hit: false,
        stopped_at: None,
    };
    if stop(s0) {
        c.stopped_at = Some(0);
        return c;
    }
    let mut bangs = vec![0usize];
    let mut queue = VecDeque::from([0usize]);
    let mut truncated = false;
    while let Some(v) = queue.pop_front() {
        let ts = transitions(g, &c.states[v]);
        let fanout = ts.len();
        for t in ts {
            let depth = bangs[v] + usize::from(t.replicated);
            let to = match c.index.get(&t.target) {
                Some(&w) => w,
                None => {
                    if depth > limits.bang_cap {
                        c.cap_hit = true;
                        truncated = true;
                        continue;
                    }
                    if c.states.len() >= limits.budget {
                        truncated = true;
                        continue;
                    }
                    let w = c.states.len();
                    c.index.insert(t.target.clone(), w);
                    c.states.push(t.target.clone());
                    c.out.push(Vec::new());
                    c.parent.push(Some(c.edges.len()));
                    c.fanout.push(None);
                    bangs.push(depth);
                    queue.push_back(w);
                    w
                }
            };
            c.out[v].push(c.edges.len());
            c.edges.push(Edge { from: v, to, action: t.action, replicated: t.replicated });
            if c.parent[to] == Some(c.edges.len() - 1) && stop(&c.states[to]) {
                c.stopped_at = Some(to);
                return c;
            }
        }
        c.fanout[v] = Some(fanout);
    }
    c.exhausted = !truncated;
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;

    fn initial(text: &str) -> (GammaCtx, CtxState) {
        let p = parse_program(text).unwrap();
        let ctx = p.contexts();
        (ctx.gamma, CtxState::new(ctx.delta, ctx.theta))
    }

    fn labels(ts: &[Transition]) -> Vec<String> {
        ts.iter().map(|t| t.action.to_string()).collect()
    }

    #[test]
    fn ping_starts_with_a_single_output() {
        let (g, s) = initial(include_str!("../corpus/ping.magpi"));
        assert_eq!(labels(&transitions(&g, &s)), ["c⊕s:ping"]);
    }

    #[test]
    fn nf_has_three_transitions() {
        let (g, s) = initial(include_str!("../corpus/nf.magpi"));
        let mut got = labels(&transitions(&g, &s));
        got.sort();
        assert_eq!(got, ["p→q:m", "p⊕q:m", "q⏱"]);
    }

    #[test]
    fn end_state_is_terminal() {
        let (g, s) = initial(include_str!("../corpus/minimal.magpi"));
        assert!(transitions(&g, &s).is_empty());
        let c = reduce_closure(&g, &s, Limits::default());
        assert_eq!((c.states.len(), c.edges.len(), c.exhausted), (1, 0, true));
        assert_eq!(c.longest_path(), Some(0));
    }

    #[test]
    fn ping_closure_is_finite_and_acyclic() {
        let (g, s) = initial(include_str!("../corpus/ping.magpi"));
        let c = reduce_closure(&g, &s, Limits::default());
        assert!(c.exhausted && !c.cap_hit);
        assert!(c.find_cycle().is_none());
        assert!(c.edges.iter().any(|e| e.replicated));
    }

    #[test]
    fn load_balancer_closure_is_exhausted() {
        let (g, s) = initial(include_str!("../corpus/load_balancer.magpi"));
        let c = reduce_closure(&g, &s, Limits::default());
        assert!(c.exhausted);
    }

    #[test]
    fn budget_and_cap_make_closure_inexhaustive() {
        let (g, s) = initial(include_str!("../corpus/ping.magpi"));
        let c = reduce_closure(&g, &s, Limits { budget: 3, bang_cap: 64 });
        assert!(!c.exhausted);
        assert_eq!(c.states.len(), 3);
        let c = reduce_closure(&g, &s, Limits { budget: 1_000, bang_cap: 0 });
        assert!(!c.exhausted && c.cap_hit);
    }

    #[test]
    fn witness_paths_are_shortest() {
        let (g, s) = initial(include_str!("../corpus/ping.magpi"));
        let c = reduce_closure(&g, &s, Limits::default());
        for i in 0..c.states.len() {
            let path = c.path_to(i);
            if let Some((_, last)) = path.last() {
                assert_eq!(*last, i);
            }
            for (_, w) in &path {
                assert!(c.path_to(*w).len() <= path.len());
            }
        }
    }

    #[test]
    fn dot_mentions_every_edge() {
        let (g, s) = initial(include_str!("../corpus/nf.magpi"));
        let c = reduce_closure(&g, &s, Limits::default());
        let dot = c.to_dot();
        assert_eq!(dot.matches(" -> s").count(), c.edges.len());
    }
}
