use std::collections::BTreeSet;
use std::fmt;

use super::names::{Label, Role};
use super::value::{write_list, BaseType};

/// One arm `peer:label(B1, ..., Bn).cont` of a selection, branching or replicated type.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypeArm {
    pub peer: Role,
    pub label: Label,
    pub payload: Vec<BaseType>,
    pub cont: SessionType,
}

impl TypeArm {
    pub fn new(peer: impl Into<Role>, label: impl Into<Label>, payload: Vec<BaseType>, cont: SessionType) -> Self {
        TypeArm { peer: peer.into(), label: label.into(), payload, cont }
    }

    pub fn couple(&self) -> (&Role, &Label) {
        (&self.peer, &self.label)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SessionType {
    End,
    Select(Vec<TypeArm>),
    Branch {
        arms: Vec<TypeArm>,
        timeout: Option<Box<SessionType>>,
    },
    /// Runtime-only parallel composition. Kept flat (no nested `Par`), sorted,
    /// and with at least two components.
    Par(Vec<SessionType>),
}

impl SessionType {
    pub fn branch(arms: Vec<TypeArm>, timeout: Option<SessionType>) -> SessionType {
        SessionType::Branch { arms, timeout: timeout.map(Box::new) }
    }

    /// `self | other`, flattened and sorted.
    pub fn par(self, other: SessionType) -> SessionType {
        let mut comps = self.into_components();
        comps.extend(other.into_components());
        SessionType::from_components(comps).expect("at least two components")
    }

    /// The parallel components (a non-`Par` type is its own single component).
    pub fn components(&self) -> &[SessionType] {
        match self {
            SessionType::Par(comps) => comps,
            other => std::slice::from_ref(other),
        }
    }

    pub fn into_components(self) -> Vec<SessionType> {
        match self {
            SessionType::Par(comps) => comps,
            other => vec![other],
        }
    }

    /// Rebuilds a type from a component multiset: `None` when empty, the
    /// component itself when singleton, a sorted `Par` otherwise.
    pub fn from_components(comps: Vec<SessionType>) -> Option<SessionType> {
        let mut flat: Vec<SessionType> = comps.into_iter().flat_map(SessionType::into_components).collect();
        flat.sort();
        match flat.len() {
            0 => None,
            1 => flat.pop(),
            _ => Some(SessionType::Par(flat)),
        }
    }

    /// `end`, or a parallel composition whose components are all `end`.
    pub fn is_end(&self) -> bool {
        self.components().iter().all(|c| matches!(c, SessionType::End))
    }

    pub fn is_par(&self) -> bool {
        matches!(self, SessionType::Par(_))
    }

    /// Number of type constructors, counting every `end` leaf.
    pub fn size(&self) -> usize {
        match self {
            SessionType::End => 1,
            SessionType::Select(arms) => 1 + arms.iter().map(|a| a.cont.size()).sum::<usize>(),
            SessionType::Branch { arms, timeout } => {
                1 + arms.iter().map(|a| a.cont.size()).sum::<usize>() + timeout.as_ref().map_or(0, |t| t.size())
            }
            SessionType::Par(comps) => comps.iter().map(SessionType::size).sum(),
        }
    }

    /// Labels on which this type (or any continuation) receives.
    pub fn received_labels(&self, out: &mut BTreeSet<Label>) {
        match self {
            SessionType::End => {}
            SessionType::Select(arms) => arms.iter().for_each(|a| a.cont.received_labels(out)),
            SessionType::Branch { arms, timeout } => {
                for a in arms {
                    out.insert(a.label.clone());
                    a.cont.received_labels(out);
                }
                if let Some(t) = timeout {
                    t.received_labels(out);
                }
            }
            SessionType::Par(comps) => comps.iter().for_each(|c| c.received_labels(out)),
        }
    }

    pub fn walk<'a>(&'a self, visit: &mut dyn FnMut(&'a SessionType)) {
        visit(self);
        match self {
            SessionType::End => {}
            SessionType::Select(arms) => arms.iter().for_each(|a| a.cont.walk(visit)),
            SessionType::Branch { arms, timeout } => {
                arms.iter().for_each(|a| a.cont.walk(visit));
                if let Some(t) = timeout {
                    t.walk(visit);
                }
            }
            SessionType::Par(comps) => comps.iter().for_each(|c| c.walk(visit)),
        }
    }
}

/// The type of a server: `!{ peer:label(B..).S, ... }`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ReplicatedType {
    pub arms: Vec<TypeArm>,
}

impl ReplicatedType {
    pub fn new(arms: Vec<TypeArm>) -> Self {
        ReplicatedType { arms }
    }

    pub fn size(&self) -> usize {
        1 + self.arms.iter().map(|a| a.cont.size()).sum::<usize>()
    }
}

/// The type of an in-flight message: `(src -> dst, label(B..))`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MessageType {
    pub src: Role,
    pub dst: Role,
    pub label: Label,
    pub payload: Vec<BaseType>,
}

impl MessageType {
    pub fn new(src: impl Into<Role>, dst: impl Into<Role>, label: impl Into<Label>, payload: Vec<BaseType>) -> Self {
        MessageType { src: src.into(), dst: dst.into(), label: label.into(), payload }
    }
}

impl fmt::Display for TypeArm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}(", self.peer, self.label)?;
        write_list(f, &self.payload, ", ")?;
        write!(f, ").{}", self.cont)
    }
}

impl fmt::Display for SessionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SessionType::End => f.write_str("end"),
            SessionType::Select(arms) => {
                f.write_str("+{ ")?;
                write_list(f, arms, ", ")?;
                f.write_str(" }")
            }
            SessionType::Branch { arms, timeout } => {
                f.write_str("&{ ")?;
                write_list(f, arms, ", ")?;
                if let Some(t) = timeout {
                    write!(f, ", timeout.{t}")?;
                }
                f.write_str(" }")
            }
            SessionType::Par(comps) => {
                f.write_str("par { ")?;
                write_list(f, comps, " | ")?;
                f.write_str(" }")
            }
        }
    }
}

impl fmt::Display for ReplicatedType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("!{ ")?;
        write_list(f, &self.arms, ", ")?;
        f.write_str(" }")
    }
}

impl fmt::Display for MessageType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}->{}, {}(", self.src, self.dst, self.label)?;
        write_list(f, &self.payload, ", ")?;
        f.write_str("))")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sel(peer: &str, label: &str) -> SessionType {
        SessionType::Select(vec![TypeArm::new(peer, label, vec![], SessionType::End)])
    }

    #[test]
    fn par_flattens_and_sorts() {
        let a = sel("a", "m");
        let b = sel("b", "m");
        let ab = a.clone().par(b.clone());
        let ba_end = b.clone().par(SessionType::End).par(a.clone());
        assert_eq!(ab.components().len(), 2);
        assert_eq!(ba_end.components().len(), 3);
        assert_eq!(ab.clone().par(SessionType::End), ba_end);
    }

    #[test]
    fn end_predicate_on_par() {
        assert!(SessionType::End.is_end());
        assert!(SessionType::End.par(SessionType::End).is_end());
        assert!(!SessionType::End.par(sel("a", "m")).is_end());
    }

    #[test]
    fn from_components_edge_cases() {
        assert_eq!(SessionType::from_components(vec![]), None);
        assert_eq!(SessionType::from_components(vec![SessionType::End]), Some(SessionType::End));
    }
}
