use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::syntax::{Network, ReliabilityRelation};

use super::step::{enumerate_steps, NetStateId, NetStep, StepRule};

/// Which failure steps a simulation may sample.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DropPolicy {
    /// Every enabled step.
    #[default]
    Any,
    /// No drops; timeouts only when nothing else can happen.
    NeverDrop,
    /// Drops first whenever one is enabled.
    EagerDrop,
    /// Timeouts only when no communication or choice step is enabled.
    NeverSpuriousTimeout,
}

impl DropPolicy {
    pub const ALL: [DropPolicy; 4] =
        [DropPolicy::Any, DropPolicy::NeverDrop, DropPolicy::EagerDrop, DropPolicy::NeverSpuriousTimeout];

    pub fn name(self) -> &'static str {
        match self {
            DropPolicy::Any => "any",
            DropPolicy::NeverDrop => "never-drop",
            DropPolicy::EagerDrop => "eager-drop",
            DropPolicy::NeverSpuriousTimeout => "never-spurious-timeout",
        }
    }

    /// Restricts the enabled steps. Never empties a nonempty set.
    pub fn filter(self, steps: Vec<(NetStep, Network)>) -> Vec<(NetStep, Network)> {
        let is = |s: &(NetStep, Network), r: StepRule| s.0.rule == r;
        let progress = |s: &(NetStep, Network)| !is(s, StepRule::FDrop) && !is(s, StepRule::FTimeout);
        match self {
            DropPolicy::Any => steps,
            DropPolicy::NeverDrop => {
                let no_drop: Vec<_> = steps.into_iter().filter(|s| !is(s, StepRule::FDrop)).collect();
                if no_drop.iter().any(progress) {
                    no_drop.into_iter().filter(progress).collect()
                } else {
                    no_drop
                }
            }
            DropPolicy::EagerDrop => {
                if steps.iter().any(|s| is(s, StepRule::FDrop)) {
                    steps.into_iter().filter(|s| is(s, StepRule::FDrop)).collect()
                } else {
                    steps
                }
            }
            DropPolicy::NeverSpuriousTimeout => {
                if steps.iter().any(progress) {
                    steps.into_iter().filter(|s| !is(s, StepRule::FTimeout)).collect()
                } else {
                    steps
                }
            }
        }
    }
}

impl fmt::Display for DropPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DropPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DropPolicy::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| {
            format!("unknown policy `{s}` (expected any, never-drop, eager-drop or never-spurious-timeout)")
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    #[serde(flatten)]
    pub step: NetStep,
    pub pre: NetStateId,
    pub post: NetStateId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub steps: Vec<TraceStep>,
    /// Every visited network, starting with the initial one.
    pub states: Vec<Network>,
    /// Set when the trace ended on a runtime type error.
    pub fault: Option<NetStep>,
    /// No step was enabled at the end.
    pub terminal: bool,
}

impl Trace {
    pub fn final_network(&self) -> &Network {
        self.states.last().expect("a trace has an initial state")
    }

    /// One JSON object per step.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            out.push_str(&serde_json::to_string(s).expect("serializable"));
            out.push('\n');
        }
        out
    }
}

/// A seeded random run: each step is drawn uniformly from the enabled steps
/// the policy allows. A sampled runtime type error ends the run.
pub fn simulate(n: &Network, r: &ReliabilityRelation, seed: u64, max_steps: usize, policy: DropPolicy) -> Trace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = Trace { steps: Vec::new(), states: vec![n.clone()], fault: None, terminal: false };
    for _ in 0..max_steps {
        let current = trace.final_network().clone();
        let mut enabled = policy.filter(enumerate_steps(&current, r));
        if enabled.is_empty() {
            trace.terminal = true;
            return trace;
        }
        let (step, next) = enabled.swap_remove(rng.gen_range(0..enabled.len()));
        if step.is_fault() {
            trace.fault = Some(step);
            return trace;
        }
        trace.steps.push(TraceStep { step, pre: NetStateId::of(&current), post: NetStateId::of(&next) });
        trace.states.push(next);
    }
    trace.terminal = enumerate_steps(trace.final_network(), r).is_empty();
    trace
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;
    use crate::syntax::Role;

    fn load(text: &str) -> (Network, ReliabilityRelation) {
        let p = parse_program(text).unwrap();
        (p.network, p.reliability)
    }

    #[test]
    fn never_drop_ping_ends_with_ok() {
        let (n, r) = load(include_str!("../../corpus/ping.magpi"));
        for seed in 0..20 {
            let t = simulate(&n, &r, seed, 100, DropPolicy::NeverDrop);
            assert!(t.terminal && t.fault.is_none());
            let last = &t.steps.last().unwrap().step;
            assert_eq!(last.rule, StepRule::PRecv);
            assert_eq!(last.role, Some(Role::new("r")));
            assert_eq!(last.message.as_ref().unwrap().label.as_str(), "ok");
            assert!(t.steps.iter().all(|s| s.step.rule != StepRule::FTimeout));
        }
    }

    #[test]
    fn zero_steps_is_empty() {
        let (n, r) = load(include_str!("../../corpus/ping.magpi"));
        let t = simulate(&n, &r, 1, 0, DropPolicy::Any);
        assert!(t.steps.is_empty());
        assert_eq!(t.final_network(), &n);
    }

    #[test]
    fn eager_drop_starts_by_dropping() {
        let (n, r) = load(include_str!("../../corpus/nf.magpi"));
        let t = simulate(&n, &r, 3, 10, DropPolicy::EagerDrop);
        let first = &t.steps[0].step;
        assert_eq!(first.rule, StepRule::FDrop);
        assert_eq!(first.message.as_ref().unwrap().to_string(), "p->q:m<\"Life is\">");
    }

    #[test]
    fn same_seed_same_trace() {
        let (n, r) = load(include_str!("../../corpus/load_balancer.magpi"));
        for policy in DropPolicy::ALL {
            assert_eq!(simulate(&n, &r, 9, 50, policy), simulate(&n, &r, 9, 50, policy));
        }
    }

    #[test]
    fn policies_parse_by_name() {
        for p in DropPolicy::ALL {
            assert_eq!(p.name().parse::<DropPolicy>(), Ok(p));
        }
        assert!("sometimes".parse::<DropPolicy>().is_err());
    }

    #[test]
    fn jsonl_has_one_line_per_step() {
        let (n, r) = load(include_str!("../../corpus/ping.magpi"));
        let t = simulate(&n, &r, 7, 100, DropPolicy::NeverDrop);
        let text = t.to_jsonl();
        assert_eq!(text.lines().count(), t.steps.len());
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(first["rule"], "PSend");
        assert_eq!(first["pre"].as_str().unwrap().len(), 32);
    }
}
