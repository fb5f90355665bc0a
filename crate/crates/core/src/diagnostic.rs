use std::fmt;

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// 1-based line and column in the source text.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Location {
    pub line: u32,
    pub column: u32,
}

impl Location {
    pub fn new(line: u32, column: u32) -> Self {
        Location { line, column }
    }

    pub fn start() -> Self {
        Location { line: 1, column: 1 }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// Rule names attached to diagnostics.
pub mod rules {
    pub const LEXICAL: &str = "lexical";
    pub const SYNTAX: &str = "syntax";
    pub const NONEMPTY: &str = "I ≠ ∅";
    pub const DISTINCT_COUPLES: &str = "pairwise distinct couples";
    pub const LABEL_POOL: &str = "label-pool freshness";
    pub const RUNTIME_PAR: &str = "no parse-time Par";
    pub const IRREFLEXIVE: &str = "irreflexive reliability";
    pub const DISJOINT_CONTEXTS: &str = "disjoint Γ/Δ domains";
    pub const DUPLICATE_ROLE: &str = "unique roles";
    pub const CLOSED: &str = "closed term";
    pub const BUILTIN: &str = "builtin signature";
    pub const TYPING: &str = "typing";
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub location: Location,
    pub message: String,
    pub rule: String,
}

impl Diagnostic {
    pub fn error(location: Location, rule: &str, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Error, location, message: message.into(), rule: rule.to_owned() }
    }

    pub fn warning(location: Location, rule: &str, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Warning, location, message: message.into(), rule: rule.to_owned() }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}: {sev} [{}]: {}", self.location, self.rule, self.message)
    }
}
