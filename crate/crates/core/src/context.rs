//! Typing contexts: unrestricted Γ, linear Δ and affine Θ.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::syntax::{BaseType, MessageType, Program, ReplicatedType, Role, SessionType, Var};

/// Replicated server types and payload variable types. Never consumed.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct GammaCtx {
    pub replicated: BTreeMap<Role, ReplicatedType>,
    pub vars: BTreeMap<Var, BaseType>,
}

impl GammaCtx {
    pub fn new(replicated: BTreeMap<Role, ReplicatedType>) -> Self {
        GammaCtx { replicated, vars: BTreeMap::new() }
    }

    pub fn with_vars(&self, binders: impl IntoIterator<Item = (Var, BaseType)>) -> GammaCtx {
        let mut g = self.clone();
        g.vars.extend(binders);
        g
    }

    pub fn is_empty(&self) -> bool {
        self.replicated.is_empty() && self.vars.is_empty()
    }
}

/// Linear session types by role. Overlapping additions become parallel types.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DeltaCtx {
    entries: BTreeMap<Role, SessionType>,
}

impl DeltaCtx {
    pub fn new() -> Self {
        DeltaCtx::default()
    }

    pub fn singleton(role: Role, ty: SessionType) -> Self {
        DeltaCtx { entries: BTreeMap::from([(role, ty)]) }
    }

    pub fn get(&self, role: &Role) -> Option<&SessionType> {
        self.entries.get(role)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Role, &SessionType)> {
        self.entries.iter()
    }

    pub fn roles(&self) -> impl Iterator<Item = &Role> {
        self.entries.keys()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Adds `role: ty`, composing in parallel with any existing entry.
    pub fn add(&mut self, role: Role, ty: SessionType) {
        let merged = match self.entries.remove(&role) {
            Some(old) => old.par(ty),
            None => SessionType::from_components(vec![ty]).expect("one component"),
        };
        self.entries.insert(role, merged);
    }

    /// Replaces the entry of `role` by the given components; no components
    /// removes the entry.
    pub fn set_components(&mut self, role: Role, comps: Vec<SessionType>) {
        match SessionType::from_components(comps) {
            Some(t) => {
                self.entries.insert(role, t);
            }
            None => {
                self.entries.remove(&role);
            }
        }
    }

    pub fn remove(&mut self, role: &Role) -> Option<SessionType> {
        self.entries.remove(role)
    }

    /// Disjoint composition; `None` when domains overlap.
    pub fn compose(&self, other: &DeltaCtx) -> Option<DeltaCtx> {
        let mut out = self.clone();
        for (r, t) in &other.entries {
            if out.entries.insert(r.clone(), t.clone()).is_some() {
                return None;
            }
        }
        Some(out)
    }
}

impl FromIterator<(Role, SessionType)> for DeltaCtx {
    fn from_iter<I: IntoIterator<Item = (Role, SessionType)>>(iter: I) -> Self {
        let mut d = DeltaCtx::new();
        for (r, t) in iter {
            d.add(r, t);
        }
        d
    }
}

/// Context addition: union, with overlapping roles composed in parallel.
pub fn ctx_add(d1: &DeltaCtx, d2: &DeltaCtx) -> DeltaCtx {
    let mut out = d1.clone();
    for (r, t) in &d2.entries {
        out.add(r.clone(), t.clone());
    }
    out
}

/// True when every entry is `end` (or a parallel composition of `end`s).
pub fn end_pred(d: &DeltaCtx) -> bool {
    d.entries.values().all(SessionType::is_end)
}

/// Every way of splitting `d` in two, including every division of each
/// parallel type's components. Lazily enumerated; each split appears once.
pub fn ctx_splits(d: &DeltaCtx) -> CtxSplits {
    let slots = d
        .entries
        .iter()
        .map(|(role, ty)| {
            let mut groups: Vec<(SessionType, usize)> = Vec::new();
            for c in ty.components() {
                match groups.last_mut() {
                    Some((last, n)) if last == c => *n += 1,
                    _ => groups.push((c.clone(), 1)),
                }
            }
            (role.clone(), groups)
        })
        .collect::<Vec<_>>();
    let digits = slots.iter().flat_map(|(_, g)| g.iter().map(|_| 0)).collect();
    CtxSplits { slots, digits, done: false }
}

/// Odometer over, for each distinct component of each role, how many copies
/// go to the left side.
pub struct CtxSplits {
    slots: Vec<(Role, Vec<(SessionType, usize)>)>,
    digits: Vec<usize>,
    done: bool,
}

impl Iterator for CtxSplits {
    type Item = (DeltaCtx, DeltaCtx);

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let mut left = DeltaCtx::new();
        let mut right = DeltaCtx::new();
        let mut k = 0;
        for (role, groups) in &self.slots {
            let mut l = Vec::new();
            let mut r = Vec::new();
            for (ty, n) in groups {
                let take = self.digits[k];
                k += 1;
                l.extend(std::iter::repeat_n(ty.clone(), take));
                r.extend(std::iter::repeat_n(ty.clone(), n - take));
            }
            left.set_components(role.clone(), l);
            right.set_components(role.clone(), r);
        }
        // Advance.
        let maxima = self.slots.iter().flat_map(|(_, g)| g.iter().map(|(_, n)| *n));
        let mut carry = true;
        for (digit, max) in self.digits.iter_mut().zip(maxima) {
            if *digit < max {
                *digit += 1;
                carry = false;
                break;
            }
            *digit = 0;
        }
        self.done = carry;
        Some((left, right))
    }
}

/// The in-flight message types: an affine multiset, kept sorted.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ThetaCtx {
    messages: Vec<MessageType>,
}

impl ThetaCtx {
    pub fn new() -> Self {
        ThetaCtx::default()
    }

    pub fn push(&mut self, m: MessageType) {
        let at = self.messages.partition_point(|x| x <= &m);
        self.messages.insert(at, m);
    }

    pub fn remove(&mut self, m: &MessageType) -> bool {
        match self.messages.binary_search(m) {
            Ok(i) => {
                self.messages.remove(i);
                true
            }
            Err(_) => false,
        }
    }

    pub fn contains(&self, m: &MessageType) -> bool {
        self.messages.binary_search(m).is_ok()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, MessageType> {
        self.messages.iter()
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }
}

impl FromIterator<MessageType> for ThetaCtx {
    fn from_iter<I: IntoIterator<Item = MessageType>>(iter: I) -> Self {
        let mut messages: Vec<_> = iter.into_iter().collect();
        messages.sort();
        ThetaCtx { messages }
    }
}

/// The judgement contexts `Γ; Δ; Θ`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ContextTriple {
    pub gamma: GammaCtx,
    pub delta: DeltaCtx,
    pub theta: ThetaCtx,
}

impl Program {
    /// The declared contexts. Θ is read off the literal types of the initial
    /// buffer.
    pub fn contexts(&self) -> ContextTriple {
        ContextTriple {
            gamma: GammaCtx::new(self.gamma.clone()),
            delta: self.delta.iter().map(|(r, t)| (r.clone(), t.clone())).collect(),
            theta: self.network.buffer.iter().map(|m| m.literal_type()).collect(),
        }
    }
}

impl fmt::Display for GammaCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.replicated.iter().map(|(r, t)| format!("{r}: {t}")).collect();
        parts.extend(self.vars.iter().map(|(x, b)| format!("{x}: {b}")));
        write!(f, "{{{}}}", parts.join(", "))
    }
}

impl fmt::Display for DeltaCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.entries.iter().map(|(r, t)| format!("{r}: {t}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

impl fmt::Display for ThetaCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.messages.iter().map(ToString::to_string).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

impl Serialize for DeltaCtx {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(self.entries.iter().map(|(r, t)| (r.as_str(), t.to_string())))
    }
}

impl Serialize for ThetaCtx {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.messages.iter().map(ToString::to_string))
    }
}

impl Serialize for GammaCtx {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let entries = self
            .replicated
            .iter()
            .map(|(r, t)| (r.to_string(), t.to_string()))
            .chain(self.vars.iter().map(|(x, b)| (x.to_string(), b.to_string())));
        s.collect_map(entries)
    }
}
