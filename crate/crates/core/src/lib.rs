//! Parser, typechecker, context model checker and network simulator for
//! replicated, failure-prone multiparty session protocols.

pub mod context;
pub mod corpus;
pub mod diagnostic;
pub mod lts;
pub mod parser;
pub mod semantics;
pub mod status;
pub mod syntax;
pub mod typecheck;
pub mod verify;
