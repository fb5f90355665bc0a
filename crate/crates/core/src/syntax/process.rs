use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::names::{Label, Role, Var};
use super::value::{write_list, Expr, Value};

/// One input arm `peer:label(binders).cont`, shared by linear and replicated receives.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RecvArm {
    pub peer: Role,
    pub label: Label,
    pub binders: Vec<Var>,
    pub cont: Process,
}

impl RecvArm {
    pub fn new(peer: impl Into<Role>, label: impl Into<Label>, binders: Vec<Var>, cont: Process) -> Self {
        RecvArm { peer: peer.into(), label: label.into(), binders, cont }
    }

    pub fn couple(&self) -> (&Role, &Label) {
        (&self.peer, &self.label)
    }

    /// Continuation with the payload substituted for the binders.
    pub fn instantiate(&self, payload: &[Value]) -> Process {
        let sub: BTreeMap<Var, Value> = self.binders.iter().cloned().zip(payload.iter().cloned()).collect();
        self.cont.subst(&sub)
    }

    fn free_vars(&self, out: &mut BTreeSet<Var>) {
        let mut inner = BTreeSet::new();
        self.cont.free_vars(&mut inner);
        for x in inner {
            if !self.binders.contains(&x) {
                out.insert(x);
            }
        }
    }

    fn subst(&self, sub: &BTreeMap<Var, Value>) -> RecvArm {
        let mut sub = sub.clone();
        for x in &self.binders {
            sub.remove(x);
        }
        RecvArm { cont: self.cont.subst(&sub), ..self.clone() }
    }
}

/// Linear process instructions.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Process {
    Inact,
    Send {
        peer: Role,
        label: Label,
        payload: Vec<Expr>,
        cont: Box<Process>,
    },
    Branch {
        arms: Vec<RecvArm>,
        timeout: Option<Box<Process>>,
    },
    /// Internal nondeterministic choice; stands in for conditionals.
    Choice(Vec<Process>),
}

impl Process {
    pub fn send(peer: impl Into<Role>, label: impl Into<Label>, payload: Vec<Expr>, cont: Process) -> Process {
        Process::Send { peer: peer.into(), label: label.into(), payload, cont: Box::new(cont) }
    }

    pub fn branch(arms: Vec<RecvArm>, timeout: Option<Process>) -> Process {
        Process::Branch { arms, timeout: timeout.map(Box::new) }
    }

    pub fn free_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Process::Inact => {}
            Process::Send { payload, cont, .. } => {
                payload.iter().for_each(|e| e.free_vars(out));
                cont.free_vars(out);
            }
            Process::Branch { arms, timeout } => {
                arms.iter().for_each(|a| a.free_vars(out));
                if let Some(t) = timeout {
                    t.free_vars(out);
                }
            }
            Process::Choice(arms) => arms.iter().for_each(|p| p.free_vars(out)),
        }
    }

    pub fn subst(&self, sub: &BTreeMap<Var, Value>) -> Process {
        if sub.is_empty() {
            return self.clone();
        }
        match self {
            Process::Inact => Process::Inact,
            Process::Send { peer, label, payload, cont } => Process::Send {
                peer: peer.clone(),
                label: label.clone(),
                payload: payload.iter().map(|e| e.subst(sub)).collect(),
                cont: Box::new(cont.subst(sub)),
            },
            Process::Branch { arms, timeout } => Process::Branch {
                arms: arms.iter().map(|a| a.subst(sub)).collect(),
                timeout: timeout.as_ref().map(|t| Box::new(t.subst(sub))),
            },
            Process::Choice(arms) => Process::Choice(arms.iter().map(|p| p.subst(sub)).collect()),
        }
    }

    /// Visits this process and every continuation below it.
    pub fn walk<'a>(&'a self, visit: &mut dyn FnMut(&'a Process)) {
        visit(self);
        match self {
            Process::Inact => {}
            Process::Send { cont, .. } => cont.walk(visit),
            Process::Branch { arms, timeout } => {
                arms.iter().for_each(|a| a.cont.walk(visit));
                if let Some(t) = timeout {
                    t.walk(visit);
                }
            }
            Process::Choice(arms) => arms.iter().for_each(|p| p.walk(visit)),
        }
    }
}

/// A role's process: a replicated server, a linear process, or (at runtime only)
/// a parallel composition of those.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ProcessTerm {
    Server(Vec<RecvArm>),
    Par(Vec<ProcessTerm>),
    Lin(Process),
}

impl ProcessTerm {
    pub fn inact() -> ProcessTerm {
        ProcessTerm::Lin(Process::Inact)
    }

    pub fn is_inact(&self) -> bool {
        matches!(self, ProcessTerm::Lin(Process::Inact))
    }

    /// Builds `left | right` in canonical form.
    pub fn par(left: ProcessTerm, right: ProcessTerm) -> ProcessTerm {
        ProcessTerm::Par(vec![left, right]).normalize()
    }

    /// Rebuilds a term from canonical operands.
    pub fn from_operands(mut ops: Vec<ProcessTerm>) -> ProcessTerm {
        ops.retain(|t| !t.is_inact());
        ops.sort();
        match ops.len() {
            0 => ProcessTerm::inact(),
            1 => ops.pop().expect("one operand"),
            _ => ProcessTerm::Par(ops),
        }
    }

    /// Canonical form up to the parallel-composition congruence: nested `Par`
    /// flattened, `Lin(Inact)` operands removed, operands sorted.
    pub fn normalize(self) -> ProcessTerm {
        match self {
            ProcessTerm::Par(ops) => {
                let mut flat = Vec::with_capacity(ops.len());
                for op in ops {
                    match op.normalize() {
                        ProcessTerm::Par(inner) => flat.extend(inner),
                        other => flat.push(other),
                    }
                }
                ProcessTerm::from_operands(flat)
            }
            other => other,
        }
    }

    /// Operands of a canonical term; a non-`Par` term is its own single operand.
    pub fn operands(&self) -> &[ProcessTerm] {
        match self {
            ProcessTerm::Par(ops) => ops,
            other => std::slice::from_ref(other),
        }
    }

    pub fn free_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            ProcessTerm::Server(arms) => arms.iter().for_each(|a| a.free_vars(out)),
            ProcessTerm::Par(ops) => ops.iter().for_each(|t| t.free_vars(out)),
            ProcessTerm::Lin(p) => p.free_vars(out),
        }
    }

    pub fn contains_par(&self) -> bool {
        matches!(self, ProcessTerm::Par(_))
    }
}

impl fmt::Display for RecvArm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}(", self.peer, self.label)?;
        write_list(f, &self.binders, ", ")?;
        write!(f, ").{}", self.cont)
    }
}

impl fmt::Display for Process {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Process::Inact => f.write_str("end"),
            Process::Send { peer, label, payload, cont } => {
                write!(f, "send {peer}:{label}<")?;
                write_list(f, payload, ", ")?;
                write!(f, ">.{cont}")
            }
            Process::Branch { arms, timeout } => {
                f.write_str("recv { ")?;
                write_list(f, arms, ", ")?;
                if let Some(t) = timeout {
                    write!(f, ", timeout.{t}")?;
                }
                f.write_str(" }")
            }
            Process::Choice(arms) => {
                f.write_str("choice { ")?;
                write_list(f, arms, " | ")?;
                f.write_str(" }")
            }
        }
    }
}

impl fmt::Display for ProcessTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProcessTerm::Server(arms) => {
                f.write_str("server { ")?;
                write_list(f, arms, ", ")?;
                f.write_str(" }")
            }
            ProcessTerm::Par(ops) => {
                f.write_str("par { ")?;
                write_list(f, ops, " | ")?;
                f.write_str(" }")
            }
            ProcessTerm::Lin(p) => write!(f, "{p}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn send(peer: &str, label: &str) -> Process {
        Process::send(peer, label, vec![], Process::Inact)
    }

    #[test]
    fn par_with_inact_collapses() {
        let p = ProcessTerm::Lin(send("q", "m"));
        let t = ProcessTerm::Par(vec![p.clone(), ProcessTerm::inact()]);
        assert_eq!(t.normalize(), p);
    }

    #[test]
    fn nested_par_flattens_and_sorts() {
        let a = ProcessTerm::Lin(send("a", "m"));
        let b = ProcessTerm::Lin(send("b", "m"));
        let c = ProcessTerm::Lin(send("c", "m"));
        let left = ProcessTerm::Par(vec![ProcessTerm::Par(vec![c.clone(), a.clone()]), b.clone()]);
        let right = ProcessTerm::Par(vec![a.clone(), ProcessTerm::Par(vec![b.clone(), c.clone()])]);
        let n = left.normalize();
        assert_eq!(n, ProcessTerm::Par(vec![a, b, c]));
        assert_eq!(n, right.normalize());
    }

    #[test]
    fn substitution_respects_shadowing() {
        let x = Var::new("x");
        let inner = RecvArm::new(
            "q",
            "m",
            vec![x.clone()],
            Process::send("q", "n", vec![Expr::Var(x.clone())], Process::Inact),
        );
        let p = Process::send("q", "m", vec![Expr::Var(x.clone())], Process::branch(vec![inner], None));
        let sub = BTreeMap::from([(x.clone(), Value::Int(1))]);
        let q = p.subst(&sub);
        let mut fv = BTreeSet::new();
        q.free_vars(&mut fv);
        assert!(fv.is_empty());
        let Process::Send { payload, cont, .. } = q else { panic!() };
        assert_eq!(payload, vec![Expr::Val(Value::Int(1))]);
        let Process::Branch { arms, .. } = *cont else { panic!() };
        let Process::Send { payload, .. } = &arms[0].cont else { panic!() };
        assert_eq!(payload, &vec![Expr::Var(x)]);
    }
}
