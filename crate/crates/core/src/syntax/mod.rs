//! Abstract syntax of networks, processes and types, with canonical forms.

mod names;
mod network;
mod process;
mod program;
mod types;
mod value;
mod wf;

pub use names::{Label, Role, Var};
pub use network::{normalize_network, Buffer, Message, Network, ReliabilityRelation, RolePair};
pub use process::{Process, ProcessTerm, RecvArm};
pub use program::{Program, SourceMap};
pub use types::{MessageType, ReplicatedType, SessionType, TypeArm};
pub use value::{BaseType, Builtin, Expr, Value};
pub use wf::check_well_formed;
