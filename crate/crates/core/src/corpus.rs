//! Bundled example protocols and the verdicts each is expected to produce.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::status::Status;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expected {
    pub typecheck: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub safety: Option<Status>,
    /// Name of the violated condition when safety fails.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub df: Option<Status>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub term: Option<Status>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tt: Option<bool>,
    /// Size of the declared type of each listed role.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub type_sizes: BTreeMap<String, usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusEntry {
    pub file: String,
    pub description: String,
    pub expected: Expected,
}

impl CorpusEntry {
    pub fn source(&self) -> &'static str {
        source(&self.file).expect("manifest lists only bundled files")
    }

    pub fn path(&self) -> PathBuf {
        corpus_dir().join(&self.file)
    }

    /// Expected to be safe under the default conditions.
    pub fn is_safe(&self) -> bool {
        self.expected.safety == Some(Status::Holds)
    }
}

#[derive(Deserialize)]
struct Manifest {
    schema: u32,
    entries: Vec<CorpusEntry>,
}

const MANIFEST: &str = include_str!("../corpus/manifest.json");

const FILES: &[(&str, &str)] = &[
    ("ping.magpi", include_str!("../corpus/ping.magpi")),
    ("load_balancer.magpi", include_str!("../corpus/load_balancer.magpi")),
    ("load_balancer_server_links_only.magpi", include_str!("../corpus/load_balancer_server_links_only.magpi")),
    ("nf.magpi", include_str!("../corpus/nf.magpi")),
    ("ping_linear_server.magpi", include_str!("../corpus/ping_linear_server.magpi")),
    ("ping_linear_server_retrying.magpi", include_str!("../corpus/ping_linear_server_retrying.magpi")),
    ("minimal.magpi", include_str!("../corpus/minimal.magpi")),
];

/// The bundled entries.
///
/// Replication keeps the server type small. Serving the same three-attempt
/// client with a linear server needs a type that unrolls every attempt:
///
/// ```
/// use magpi::corpus::source;
/// use magpi::parser::parse_program;
/// use magpi::syntax::Role;
///
/// let size = |file: &str, role: &str| {
///     let p = parse_program(source(file).unwrap()).unwrap();
///     let role = Role::new(role);
///     match p.gamma.get(&role) {
///         Some(r) => r.size(),
///         None => p.delta[&role].size(),
///     }
/// };
/// assert_eq!(size("ping.magpi", "s"), 3);
/// assert_eq!(size("ping_linear_server.magpi", "q"), 10);
/// assert_eq!(size("ping_linear_server_retrying.magpi", "q"), 22);
/// ```
pub fn corpus_manifest() -> Vec<CorpusEntry> {
    let m: Manifest = serde_json::from_str(MANIFEST).expect("bundled manifest is valid");
    assert_eq!(m.schema, 1);
    m.entries
}

pub fn source(file: &str) -> Option<&'static str> {
    FILES.iter().find(|(name, _)| *name == file).map(|(_, text)| *text)
}

/// Directory holding the bundled `.magpi` files.
pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lists_every_bundled_file_once() {
        let entries = corpus_manifest();
        assert!(entries.len() >= 5);
        let mut files: Vec<&str> = entries.iter().map(|e| e.file.as_str()).collect();
        files.sort_unstable();
        let mut bundled: Vec<&str> = FILES.iter().map(|(f, _)| *f).collect();
        bundled.sort_unstable();
        assert_eq!(files, bundled);
    }

    #[test]
    fn bundled_sources_match_the_files_on_disk() {
        for e in corpus_manifest() {
            assert_eq!(std::fs::read_to_string(e.path()).unwrap(), e.source());
        }
    }
}
