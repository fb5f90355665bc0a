use std::collections::{BTreeSet, HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::context::{ContextTriple, GammaCtx};
use crate::lts::{reduce_closure, Closure, CtxState, Limits};
use crate::semantics::{enumerate_steps, DropPolicy, NetStep};
use crate::syntax::{Network, ReliabilityRelation};
use crate::typecheck::typecheck;

use super::{check_state_conditions_with, ConditionSet};

/// Decides whether contexts type a network.
pub type Judge<'a> = &'a dyn Fn(&Network, &GammaCtx, &CtxState) -> bool;

/// The typechecker as a judge.
pub fn typing_judge(n: &Network, g: &GammaCtx, s: &CtxState) -> bool {
    let ctx = ContextTriple { gamma: g.clone(), delta: s.delta.clone(), theta: s.theta.clone() };
    typecheck(n, &ctx).is_ok()
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum HarnessError {
    #[error("the initial contexts do not type the network")]
    NotTyped,
    #[error("the initial contexts are not safe: {0}")]
    NotSafe(String),
    #[error("the context closure exceeded its budget")]
    Inconclusive,
}

#[derive(Clone, Debug)]
pub struct SrConfig {
    pub traces: usize,
    pub depth: usize,
    pub seed: u64,
    pub policy: DropPolicy,
    pub limits: Limits,
    pub conditions: ConditionSet,
    /// Context steps searched per network step.
    pub match_depth: usize,
}

impl Default for SrConfig {
    fn default() -> Self {
        SrConfig {
            traces: 200,
            depth: 20,
            seed: 0,
            policy: DropPolicy::Any,
            limits: Limits::default(),
            conditions: ConditionSet::default(),
            match_depth: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SrCounterexample {
    pub trace: usize,
    /// Steps taken before the failing one.
    pub prefix: Vec<NetStep>,
    pub step: NetStep,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SrReport {
    pub traces: usize,
    pub steps: usize,
    pub counterexamples: Vec<SrCounterexample>,
}

/// A safe, exhausted closure of the initial contexts with cached typing.
struct Typed<'a> {
    g: &'a GammaCtx,
    closure: Closure,
    judge: Judge<'a>,
    cache: HashMap<(Network, usize), bool>,
}

impl<'a> Typed<'a> {
    fn new(
        n: &Network,
        ctx: &'a ContextTriple,
        r: &ReliabilityRelation,
        limits: Limits,
        conds: ConditionSet,
        judge: Judge<'a>,
    ) -> Result<Self, HarnessError> {
        let g = &ctx.gamma;
        let s0 = CtxState::new(ctx.delta.clone(), ctx.theta.clone());
        let closure = reduce_closure(g, &s0, limits);
        if !closure.exhausted {
            return Err(HarnessError::Inconclusive);
        }
        for s in &closure.states {
            if let Some(v) = check_state_conditions_with(g, s, r, conds).into_iter().next() {
                return Err(HarnessError::NotSafe(format!("{} at {s}", v.condition)));
            }
        }
        let mut t = Typed { g, closure, judge, cache: HashMap::new() };
        if !t.types(n, 0) {
            return Err(HarnessError::NotTyped);
        }
        Ok(t)
    }

    fn types(&mut self, n: &Network, s: usize) -> bool {
        let key = (n.clone(), s);
        if let Some(&b) = self.cache.get(&key) {
            return b;
        }
        let b = (self.judge)(n, self.g, &self.closure.states[s]);
        self.cache.insert(key, b);
        b
    }

    /// Closure states within `depth` transitions of any of `from`.
    fn neighbourhood(&self, from: &BTreeSet<usize>, depth: usize) -> BTreeSet<usize> {
        let mut seen = from.clone();
        let mut layer: Vec<usize> = from.iter().copied().collect();
        for _ in 0..depth {
            let mut next = Vec::new();
            for v in layer {
                for &e in &self.closure.out[v] {
                    let w = self.closure.edges[e].to;
                    if seen.insert(w) {
                        next.push(w);
                    }
                }
            }
            layer = next;
        }
        seen
    }

    /// Contexts that type `n` among those reachable from `from`.
    fn retype(&mut self, n: &Network, from: &BTreeSet<usize>, depth: usize) -> BTreeSet<usize> {
        self.neighbourhood(from, depth).into_iter().filter(|&s| self.types(n, s)).collect()
    }
}

/// Runs random traces and checks that after every network step some context
/// reachable in at most `match_depth` steps still types the network. Every
/// such context lies in the safe closure of the initial one.
pub fn harness_subject_reduction(
    n: &Network,
    ctx: &ContextTriple,
    r: &ReliabilityRelation,
    cfg: &SrConfig,
    judge: Judge<'_>,
) -> Result<SrReport, HarnessError> {
    let mut typed = Typed::new(n, ctx, r, cfg.limits, cfg.conditions, judge)?;
    let mut report = SrReport { traces: cfg.traces, ..SrReport::default() };
    for trace in 0..cfg.traces {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(trace as u64));
        let mut net = n.clone();
        let mut candidates = BTreeSet::from([0usize]);
        let mut prefix: Vec<NetStep> = Vec::new();
        for _ in 0..cfg.depth {
            let mut enabled = cfg.policy.filter(enumerate_steps(&net, r));
            if enabled.is_empty() {
                break;
            }
            let (step, next) = enabled.swap_remove(rng.gen_range(0..enabled.len()));
            report.steps += 1;
            let fail = |reason: String, step: NetStep, prefix: &Vec<NetStep>| SrCounterexample {
                trace,
                prefix: prefix.clone(),
                step,
                reason,
            };
            if step.is_fault() {
                report.counterexamples.push(fail("runtime type error".into(), step, &prefix));
                break;
            }
            let found = typed.retype(&next, &candidates, cfg.match_depth);
            if found.is_empty() {
                let reason = format!("no safe context within {} step(s) types {next}", cfg.match_depth);
                report.counterexamples.push(fail(reason, step, &prefix));
                break;
            }
            candidates = found;
            prefix.push(step);
            net = next;
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Unmatched {
    pub state: CtxState,
    pub networks: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SfReport {
    /// Context states with at least one transition that were paired with a network.
    pub checked: usize,
    pub unmatched: Vec<Unmatched>,
    pub networks: usize,
    pub exhausted: bool,
}

/// For every context state that types some reachable network and has a
/// transition, some paired network reaches, within `steps` reductions, a
/// network typed by a one-step successor of that state.
pub fn harness_session_fidelity(
    n: &Network,
    ctx: &ContextTriple,
    r: &ReliabilityRelation,
    limits: Limits,
    steps: usize,
    judge: Judge<'_>,
) -> Result<SfReport, HarnessError> {
    let mut typed = Typed::new(n, ctx, r, limits, ConditionSet::default(), judge)?;

    // Pair reachable networks with the contexts typing them.
    let mut nets: Vec<Network> = vec![n.clone()];
    let mut index: HashMap<Network, usize> = HashMap::from([(n.clone(), 0)]);
    let mut succ: Vec<Option<Vec<usize>>> = vec![None];
    let mut paired: Vec<BTreeSet<usize>> = vec![BTreeSet::from([0])];
    let mut queue = VecDeque::from([0usize]);
    let mut queued = vec![true];
    let mut exhausted = true;
    while let Some(v) = queue.pop_front() {
        queued[v] = false;
        if succ[v].is_none() {
            let mut out = Vec::new();
            for (step, next) in enumerate_steps(&nets[v], r) {
                if step.is_fault() {
                    continue;
                }
                let w = match index.get(&next) {
                    Some(&w) => w,
                    None if nets.len() >= limits.budget => {
                        exhausted = false;
                        continue;
                    }
                    None => {
                        index.insert(next.clone(), nets.len());
                        nets.push(next);
                        succ.push(None);
                        paired.push(BTreeSet::new());
                        queued.push(false);
                        nets.len() - 1
                    }
                };
                out.push(w);
            }
            succ[v] = Some(out);
        }
        let from = paired[v].clone();
        for &w in succ[v].as_ref().expect("expanded") {
            let found = typed.retype(&nets[w].clone(), &from, 2);
            let before = paired[w].len();
            paired[w].extend(found);
            if (paired[w].len() > before || succ[w].is_none()) && !queued[w] {
                queued[w] = true;
                queue.push_back(w);
            }
        }
    }

    let mut by_state: HashMap<usize, Vec<usize>> = HashMap::new();
    for (net, states) in paired.iter().enumerate() {
        for &s in states {
            by_state.entry(s).or_default().push(net);
        }
    }
    let mut keys: Vec<usize> = by_state.keys().copied().collect();
    keys.sort_unstable();
    let mut checked = 0;
    let mut unmatched = Vec::new();
    for s in keys {
        let targets: BTreeSet<usize> = typed.closure.out[s].iter().map(|&e| typed.closure.edges[e].to).collect();
        if targets.is_empty() {
            continue;
        }
        checked += 1;
        let networks = &by_state[&s];
        let matched = networks.iter().any(|&start| {
            within(&nets, &succ, start, steps).into_iter().any(|m| targets.iter().any(|&t| typed.types(&nets[m], t)))
        });
        if !matched {
            unmatched.push(Unmatched { state: typed.closure.states[s].clone(), networks: networks.len() });
        }
    }
    Ok(SfReport { checked, unmatched, networks: nets.len(), exhausted })
}

/// Explored networks reachable from `start` in at most `steps` reductions.
fn within(nets: &[Network], succ: &[Option<Vec<usize>>], start: usize, steps: usize) -> Vec<usize> {
    let mut seen = BTreeSet::from([start]);
    let mut layer = vec![start];
    for _ in 0..steps {
        let mut next = Vec::new();
        for v in layer {
            for &w in succ[v].iter().flatten() {
                if w < nets.len() && seen.insert(w) {
                    next.push(w);
                }
            }
        }
        layer = next;
    }
    seen.into_iter().collect()
}
