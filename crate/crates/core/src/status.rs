use std::fmt;

use serde::{Deserialize, Serialize};

/// Outcome of a bounded check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Holds,
    Violated,
    /// The budget ran out before a violation was found.
    Inconclusive,
}

impl Status {
    /// `Holds` when the search was complete, `Inconclusive` otherwise.
    pub fn unless_truncated(exhausted: bool) -> Status {
        if exhausted {
            Status::Holds
        } else {
            Status::Inconclusive
        }
    }

    /// Conjunction: a violation wins, then inconclusiveness.
    pub fn and(self, other: Status) -> Status {
        match (self, other) {
            (Status::Violated, _) | (_, Status::Violated) => Status::Violated,
            (Status::Inconclusive, _) | (_, Status::Inconclusive) => Status::Inconclusive,
            _ => Status::Holds,
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}
