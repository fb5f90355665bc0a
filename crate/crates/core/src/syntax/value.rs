use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};

use super::names::Var;

/// Basic payload types. `Bool` is an extension used by conditional-free examples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BaseType {
    Int,
    Real,
    String,
    Bool,
}

impl BaseType {
    pub fn keyword(self) -> &'static str {
        match self {
            BaseType::Int => "Int",
            BaseType::Real => "Real",
            BaseType::String => "String",
            BaseType::Bool => "Bool",
        }
    }

    pub fn from_keyword(s: &str) -> Option<BaseType> {
        Some(match s {
            "Int" => BaseType::Int,
            "Real" => BaseType::Real,
            "String" => BaseType::String,
            "Bool" => BaseType::Bool,
            _ => return None,
        })
    }
}

impl fmt::Display for BaseType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// A closed payload value.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(i64),
    Real(OrderedFloat<f64>),
    Str(String),
    Bool(bool),
}

impl Value {
    pub fn real(x: f64) -> Value {
        Value::Real(OrderedFloat(x))
    }

    pub fn base_type(&self) -> BaseType {
        match self {
            Value::Int(_) => BaseType::Int,
            Value::Real(_) => BaseType::Real,
            Value::Str(_) => BaseType::String,
            Value::Bool(_) => BaseType::Bool,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Real(x) => {
                let x = x.into_inner();
                if x.is_finite() && x.fract() == 0.0 && x.abs() < 1e15 {
                    write!(f, "{x:.1}")
                } else {
                    write!(f, "{x:?}")
                }
            }
            Value::Str(s) => write_string_literal(f, s),
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

pub(crate) fn write_string_literal(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    f.write_str("\"")?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            c => write!(f, "{c}")?,
        }
    }
    f.write_str("\"")
}

/// A payload expression in a send: a literal, a bound variable, or a builtin call.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Val(Value),
    Var(Var),
    Call(String, Vec<Expr>),
}

impl Expr {
    pub fn free_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Expr::Val(_) => {}
            Expr::Var(x) => {
                out.insert(x.clone());
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.free_vars(out)),
        }
    }

    pub fn subst(&self, sub: &BTreeMap<Var, Value>) -> Expr {
        match self {
            Expr::Val(_) => self.clone(),
            Expr::Var(x) => match sub.get(x) {
                Some(v) => Expr::Val(v.clone()),
                None => self.clone(),
            },
            Expr::Call(name, args) => Expr::Call(name.clone(), args.iter().map(|a| a.subst(sub)).collect()),
        }
    }

    /// Evaluates a closed expression.
    pub fn eval(&self) -> Result<Value, String> {
        match self {
            Expr::Val(v) => Ok(v.clone()),
            Expr::Var(x) => Err(format!("unbound variable `{x}`")),
            Expr::Call(name, args) => {
                let builtin = Builtin::lookup(name).ok_or_else(|| format!("unknown function `{name}`"))?;
                let values = args.iter().map(Expr::eval).collect::<Result<Vec<_>, _>>()?;
                builtin.apply(&values)
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Val(v) => write!(f, "{v}"),
            Expr::Var(x) => write!(f, "{x}"),
            Expr::Call(name, args) => {
                write!(f, "{name}(")?;
                write_list(f, args, ", ")?;
                f.write_str(")")
            }
        }
    }
}

pub(crate) fn write_list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T], sep: &str) -> fmt::Result {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        write!(f, "{item}")?;
    }
    Ok(())
}

/// Total external functions over basic types, evaluated when a send fires.
#[derive(Clone, Copy, Debug)]
pub struct Builtin {
    pub name: &'static str,
    pub params: &'static [BaseType],
    pub result: BaseType,
    eval: fn(&[Value]) -> Value,
}

const BUILTINS: &[Builtin] = &[
    // `f(n) = n as Real`, the worker computation of the load balancer.
    Builtin {
        name: "f",
        params: &[BaseType::Int],
        result: BaseType::Real,
        eval: |args| match args {
            [Value::Int(n)] => Value::real(*n as f64),
            _ => unreachable!("argument types are checked before evaluation"),
        },
    },
    Builtin {
        name: "not",
        params: &[BaseType::Bool],
        result: BaseType::Bool,
        eval: |args| match args {
            [Value::Bool(b)] => Value::Bool(!b),
            _ => unreachable!("argument types are checked before evaluation"),
        },
    },
];

impl Builtin {
    pub fn lookup(name: &str) -> Option<&'static Builtin> {
        BUILTINS.iter().find(|b| b.name == name)
    }

    pub fn all() -> &'static [Builtin] {
        BUILTINS
    }

    pub fn apply(&self, args: &[Value]) -> Result<Value, String> {
        let actual: Vec<BaseType> = args.iter().map(Value::base_type).collect();
        if actual != self.params {
            return Err(format!("`{}` expects ({}) but got ({})", self.name, join(self.params), join(&actual)));
        }
        Ok((self.eval)(args))
    }
}

fn join(tys: &[BaseType]) -> String {
    tys.iter().map(|t| t.keyword()).collect::<Vec<_>>().join(", ")
}
