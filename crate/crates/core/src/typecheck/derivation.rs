use std::collections::BTreeMap;
use std::fmt;

use serde::ser::SerializeStruct;
use serde::Serialize;

use crate::context::{DeltaCtx, GammaCtx, ThetaCtx};
use crate::syntax::{BaseType, Buffer, Expr, Network, ProcessTerm, Role, SessionType};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    /// A role against its own session type.
    TS,
    TVar,
    TVal,
    /// A builtin call in a payload.
    TCall,
    T0,
    TSend,
    TRecv,
    TBang,
    /// Internal choice: every alternative against the same context.
    TChoice,
    /// Splits the processes from the buffer.
    TPar1,
    /// Splits the network by role.
    TPar2,
    /// Splits one role's parallel threads.
    TParProc,
    TEmpty,
    TBuf,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::TS => "T-S",
            Rule::TVar => "T-Var",
            Rule::TVal => "T-Val",
            Rule::TCall => "T-Call",
            Rule::T0 => "T-0",
            Rule::TSend => "T-Send",
            Rule::TRecv => "T-Recv",
            Rule::TBang => "T-Bang",
            Rule::TChoice => "T-Choice",
            Rule::TPar1 => "T-Par1",
            Rule::TPar2 => "T-Par2",
            Rule::TParProc => "T-ParProc",
            Rule::TEmpty => "T-Empty",
            Rule::TBuf => "T-Buf",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What a judgement is about.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Subject {
    Network(Network),
    /// Several roles of a network, without the buffer.
    Processes(BTreeMap<Role, ProcessTerm>),
    Role(Role, ProcessTerm),
    /// `p : S`.
    Endpoint(Role, SessionType),
    Payload(Expr, BaseType),
    Buffer(Buffer),
}

impl Subject {
    /// The role-to-term map of a process-level subject.
    pub fn process_map(&self) -> Option<BTreeMap<Role, ProcessTerm>> {
        match self {
            Subject::Processes(m) => Some(m.clone()),
            Subject::Role(r, t) => Some(BTreeMap::from([(r.clone(), t.clone())])),
            _ => None,
        }
    }
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subject::Network(n) => write!(f, "{n}"),
            Subject::Processes(m) => {
                let parts: Vec<String> = m.iter().map(|(r, t)| format!("{r} ◁ {t}")).collect();
                f.write_str(&parts.join(" ∥ "))
            }
            Subject::Role(r, t) => write!(f, "{r} ◁ {t}"),
            Subject::Endpoint(r, s) => write!(f, "{r} : {s}"),
            Subject::Payload(e, b) => write!(f, "{e} : {b}"),
            Subject::Buffer(b) => {
                let parts: Vec<String> = b.iter().map(ToString::to_string).collect();
                write!(f, "{{{}}}", parts.join(", "))
            }
        }
    }
}

/// `Γ; Δ; Θ ⊢ subject`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Judgement {
    pub gamma: GammaCtx,
    pub delta: DeltaCtx,
    pub theta: ThetaCtx,
    pub subject: Subject,
}

impl fmt::Display for Judgement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}; {}; {} ⊢ {}", self.gamma, self.delta, self.theta, self.subject)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Derivation {
    pub rule: Rule,
    pub conclusion: Judgement,
    pub premises: Vec<Derivation>,
}

impl Derivation {
    pub fn node_count(&self) -> usize {
        1 + self.premises.iter().map(Derivation::node_count).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.premises.iter().map(Derivation::depth).max().unwrap_or(0)
    }

    /// Indented one-judgement-per-line rendering.
    pub fn pretty(&self) -> String {
        let mut out = String::new();
        self.pretty_into(0, &mut out);
        out
    }

    fn pretty_into(&self, indent: usize, out: &mut String) {
        out.push_str(&"  ".repeat(indent));
        out.push_str(&format!("[{}] {}\n", self.rule, self.conclusion));
        for p in &self.premises {
            p.pretty_into(indent + 1, out);
        }
    }
}

impl Serialize for Derivation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Derivation", 6)?;
        st.serialize_field("rule", self.rule.name())?;
        st.serialize_field("gamma", &self.conclusion.gamma)?;
        st.serialize_field("delta", &self.conclusion.delta)?;
        st.serialize_field("theta", &self.conclusion.theta)?;
        st.serialize_field("subject", &self.conclusion.subject.to_string())?;
        st.serialize_field("premises", &self.premises)?;
        st.end()
    }
}
