use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::names::{Label, Role};
use super::process::ProcessTerm;
use super::types::MessageType;
use super::value::{write_list, Value};

/// A message in transit.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Message {
    pub src: Role,
    pub dst: Role,
    pub label: Label,
    pub payload: Vec<Value>,
}

impl Message {
    pub fn new(src: impl Into<Role>, dst: impl Into<Role>, label: impl Into<Label>, payload: Vec<Value>) -> Self {
        Message { src: src.into(), dst: dst.into(), label: label.into(), payload }
    }

    /// The message type read off the literal payload.
    pub fn literal_type(&self) -> MessageType {
        MessageType {
            src: self.src.clone(),
            dst: self.dst.clone(),
            label: self.label.clone(),
            payload: self.payload.iter().map(Value::base_type).collect(),
        }
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}:{}<", self.src, self.dst, self.label)?;
        write_list(f, &self.payload, ", ")?;
        f.write_str(">")
    }
}

/// A bag of messages. Stored sorted, so equality is multiset equality.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Buffer {
    messages: Vec<Message>,
}

impl Buffer {
    pub fn new() -> Self {
        Buffer::default()
    }

    pub fn push(&mut self, msg: Message) {
        let at = self.messages.partition_point(|m| m <= &msg);
        self.messages.insert(at, msg);
    }

    /// Removes one copy of `msg`; false if absent.
    pub fn remove(&mut self, msg: &Message) -> bool {
        match self.messages.binary_search(msg) {
            Ok(i) => {
                self.messages.remove(i);
                true
            }
            Err(_) => false,
        }
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Message> {
        self.messages.iter()
    }

    /// Distinct messages, each once.
    pub fn distinct(&self) -> impl Iterator<Item = &Message> {
        self.messages.iter().enumerate().filter(|(i, m)| *i == 0 || self.messages[i - 1] != **m).map(|(_, m)| m)
    }
}

impl FromIterator<Message> for Buffer {
    fn from_iter<I: IntoIterator<Item = Message>>(iter: I) -> Self {
        let mut messages: Vec<Message> = iter.into_iter().collect();
        messages.sort();
        Buffer { messages }
    }
}

impl fmt::Display for Buffer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("buffer {")?;
        for m in &self.messages {
            write!(f, " {m}")?;
        }
        f.write_str(" }")
    }
}

/// Processes indexed by role, plus the shared message bag.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Network {
    pub processes: BTreeMap<Role, ProcessTerm>,
    pub buffer: Buffer,
}

impl Network {
    pub fn new(processes: BTreeMap<Role, ProcessTerm>, buffer: Buffer) -> Self {
        Network { processes, buffer }
    }

    /// True when every role is inactive or only servers (leftover buffer allowed).
    pub fn is_idle(&self) -> bool {
        self.processes
            .values()
            .all(|t| t.is_inact() || t.operands().iter().all(|op| matches!(op, ProcessTerm::Server(_))))
    }

    pub fn roles(&self) -> impl Iterator<Item = &Role> {
        self.processes.keys()
    }
}

/// Canonical form of a network: every role's term normalized. Roles whose
/// term is `end` stay in the map.
pub fn normalize_network(n: Network) -> Network {
    Network { processes: n.processes.into_iter().map(|(r, t)| (r, t.normalize())).collect(), buffer: n.buffer }
}

impl fmt::Display for Network {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (role, term) in &self.processes {
            write!(f, "{role} ◁ {term} ∥ ")?;
        }
        write!(f, "{{")?;
        let msgs: Vec<&Message> = self.buffer.iter().collect();
        write_list(f, &msgs, ", ")?;
        write!(f, "}}")
    }
}

/// An unordered pair of roles.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RolePair(Role, Role);

impl RolePair {
    pub fn new(a: Role, b: Role) -> Self {
        if a <= b {
            RolePair(a, b)
        } else {
            RolePair(b, a)
        }
    }

    pub fn roles(&self) -> (&Role, &Role) {
        (&self.0, &self.1)
    }

    pub fn is_reflexive(&self) -> bool {
        self.0 == self.1
    }
}

/// Which role pairs communicate without loss. Everything else may drop messages.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ReliabilityRelation {
    full: bool,
    pairs: BTreeSet<RolePair>,
}

impl ReliabilityRelation {
    /// Fully unreliable.
    pub fn none() -> Self {
        Self::default()
    }

    /// Fully reliable.
    pub fn all() -> Self {
        ReliabilityRelation { full: true, pairs: BTreeSet::new() }
    }

    pub fn from_pairs<I, A, B>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<Role>,
        B: Into<Role>,
    {
        ReliabilityRelation {
            full: false,
            pairs: pairs.into_iter().map(|(a, b)| RolePair::new(a.into(), b.into())).collect(),
        }
    }

    pub fn insert(&mut self, a: Role, b: Role) {
        self.pairs.insert(RolePair::new(a, b));
    }

    pub fn is_full(&self) -> bool {
        self.full
    }

    pub fn pairs(&self) -> impl Iterator<Item = &RolePair> {
        self.pairs.iter()
    }

    /// Symmetric, irreflexive membership.
    pub fn is_reliable(&self, a: &Role, b: &Role) -> bool {
        a != b && (self.full || self.pairs.contains(&RolePair::new(a.clone(), b.clone())))
    }
}

impl fmt::Display for ReliabilityRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.full {
            return f.write_str("reliable all");
        }
        if self.pairs.is_empty() {
            return f.write_str("reliable none");
        }
        f.write_str("reliable { ")?;
        let rendered: Vec<String> = self.pairs.iter().map(|p| format!("{{{}, {}}}", p.0, p.1)).collect();
        f.write_str(&rendered.join(", "))?;
        f.write_str(" }")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn buffer_equality_ignores_insertion_order() {
        let a = Message::new("p", "q", "m", vec![Value::Int(1)]);
        let b = Message::new("p", "q", "m", vec![Value::Str("Life is".into())]);
        let mut x = Buffer::new();
        x.push(a.clone());
        x.push(b.clone());
        x.push(a.clone());
        let mut y = Buffer::new();
        y.push(b.clone());
        y.push(a.clone());
        y.push(a.clone());
        assert_eq!(x, y);
        assert_eq!(x.distinct().count(), 2);
        assert!(x.remove(&a));
        assert!(x.remove(&a));
        assert!(!x.remove(&a));
    }

    #[test]
    fn reliability_is_symmetric_and_irreflexive() {
        let r = ReliabilityRelation::from_pairs([("c", "r")]);
        assert!(r.is_reliable(&"r".into(), &"c".into()));
        assert!(!r.is_reliable(&"c".into(), &"s".into()));
        let all = ReliabilityRelation::all();
        assert!(all.is_reliable(&"c".into(), &"s".into()));
        assert!(!all.is_reliable(&"c".into(), &"c".into()));
    }
}
