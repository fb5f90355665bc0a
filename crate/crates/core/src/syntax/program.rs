use std::collections::BTreeMap;
use std::fmt;

use crate::diagnostic::Location;

use super::names::Role;
use super::network::{Network, ReliabilityRelation};
use super::types::{ReplicatedType, SessionType};

/// Where each top-level declaration started in the source text.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SourceMap {
    pub roles: BTreeMap<Role, Location>,
    pub reliability: Option<Location>,
    pub buffer: Option<Location>,
}

impl SourceMap {
    pub fn role(&self, role: &Role) -> Location {
        self.roles.get(role).copied().unwrap_or_else(Location::start)
    }
}

/// A parsed protocol file: network, type assignments and reliability.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub network: Network,
    /// Replicated (server) types, the role part of Γ.
    pub gamma: BTreeMap<Role, ReplicatedType>,
    /// Linear session types, Δ.
    pub delta: BTreeMap<Role, SessionType>,
    pub reliability: ReliabilityRelation,
    pub source_map: SourceMap,
}

impl Program {
    /// Structural equality ignoring source positions.
    pub fn same_ast(&self, other: &Program) -> bool {
        self.network == other.network
            && self.gamma == other.gamma
            && self.delta == other.delta
            && self.reliability == other.reliability
    }
}

/// Renders the program back to concrete syntax.
impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.reliability)?;
        if !self.network.buffer.is_empty() {
            writeln!(f, "{}", self.network.buffer)?;
        }
        for (role, term) in &self.network.processes {
            write!(f, "role {role}")?;
            if let Some(r) = self.gamma.get(role) {
                write!(f, " : {r}")?;
            } else if let Some(s) = self.delta.get(role) {
                write!(f, " : {s}")?;
            }
            writeln!(f, " = {term}")?;
        }
        Ok(())
    }
}
