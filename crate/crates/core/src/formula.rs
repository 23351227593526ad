//! Quantifier-free formulas over the order/edge vocabulary with numbered
//! variables. Variables index into a flat assignment; callers that work with
//! several tuples concatenate them before evaluating.
//!
//! Serialized form is a prefix term in JSON: `["lt",0,1]`, `["R",0,1]`,
//! `["=",0,1]`, `["not",f]`, `["and",f,...]`, `["or",f,...]`, `true`, `false`.

use crate::error::{Error, Result};
use crate::rel::RelStruct;
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QfFormula {
    True,
    False,
    Lt(usize, usize),
    Edge(usize, usize),
    Eq(usize, usize),
    Not(Box<QfFormula>),
    And(Vec<QfFormula>),
    Or(Vec<QfFormula>),
}

impl QfFormula {
    pub fn not(f: QfFormula) -> QfFormula {
        QfFormula::Not(Box::new(f))
    }

    /// Smallest assignment length this formula can be evaluated against.
    pub fn min_arity(&self) -> usize {
        match self {
            QfFormula::True | QfFormula::False => 0,
            QfFormula::Lt(a, b) | QfFormula::Edge(a, b) | QfFormula::Eq(a, b) => a.max(b) + 1,
            QfFormula::Not(f) => f.min_arity(),
            QfFormula::And(fs) | QfFormula::Or(fs) => {
                fs.iter().map(|f| f.min_arity()).max().unwrap_or(0)
            }
        }
    }

    pub fn eval(&self, s: &RelStruct, assignment: &[usize]) -> Result<bool> {
        let var = |v: usize| -> Result<usize> {
            let e = *assignment
                .get(v)
                .ok_or_else(|| Error::Input(format!("variable {v} outside assignment of length {}", assignment.len())))?;
            s.check_element(e)?;
            Ok(e)
        };
        Ok(match self {
            QfFormula::True => true,
            QfFormula::False => false,
            QfFormula::Lt(a, b) => s.lt(var(*a)?, var(*b)?),
            QfFormula::Edge(a, b) => s.edge(var(*a)?, var(*b)?),
            QfFormula::Eq(a, b) => var(*a)? == var(*b)?,
            QfFormula::Not(f) => !f.eval(s, assignment)?,
            QfFormula::And(fs) => {
                for f in fs {
                    if !f.eval(s, assignment)? {
                        return Ok(false);
                    }
                }
                true
            }
            QfFormula::Or(fs) => {
                for f in fs {
                    if f.eval(s, assignment)? {
                        return Ok(true);
                    }
                }
                false
            }
        })
    }

    pub fn to_value(&self) -> Value {
        match self {
            QfFormula::True => Value::Bool(true),
            QfFormula::False => Value::Bool(false),
            QfFormula::Lt(a, b) => serde_json::json!(["lt", a, b]),
            QfFormula::Edge(a, b) => serde_json::json!(["R", a, b]),
            QfFormula::Eq(a, b) => serde_json::json!(["=", a, b]),
            QfFormula::Not(f) => serde_json::json!(["not", f.to_value()]),
            QfFormula::And(fs) => {
                let mut items = vec![Value::String("and".into())];
                items.extend(fs.iter().map(|f| f.to_value()));
                Value::Array(items)
            }
            QfFormula::Or(fs) => {
                let mut items = vec![Value::String("or".into())];
                items.extend(fs.iter().map(|f| f.to_value()));
                Value::Array(items)
            }
        }
    }

    pub fn from_value(v: &Value) -> Result<QfFormula> {
        let bad = || Error::Input(format!("malformed formula term: {v}"));
        match v {
            Value::Bool(true) => Ok(QfFormula::True),
            Value::Bool(false) => Ok(QfFormula::False),
            Value::Array(items) => {
                let head = items.first().and_then(Value::as_str).ok_or_else(bad)?;
                let var_at = |i: usize| -> Result<usize> {
                    items
                        .get(i)
                        .and_then(Value::as_u64)
                        .map(|x| x as usize)
                        .ok_or_else(bad)
                };
                match head {
                    "lt" | "R" | "=" => {
                        if items.len() != 3 {
                            return Err(bad());
                        }
                        let (a, b) = (var_at(1)?, var_at(2)?);
                        Ok(match head {
                            "lt" => QfFormula::Lt(a, b),
                            "R" => QfFormula::Edge(a, b),
                            _ => QfFormula::Eq(a, b),
                        })
                    }
                    "not" => {
                        if items.len() != 2 {
                            return Err(bad());
                        }
                        Ok(QfFormula::not(QfFormula::from_value(&items[1])?))
                    }
                    "and" | "or" => {
                        let fs = items[1..]
                            .iter()
                            .map(QfFormula::from_value)
                            .collect::<Result<Vec<_>>>()?;
                        Ok(if head == "and" {
                            QfFormula::And(fs)
                        } else {
                            QfFormula::Or(fs)
                        })
                    }
                    _ => Err(bad()),
                }
            }
            _ => Err(bad()),
        }
    }
}

/// `x0 < x1 and R(x0, x1)`: the positive half of the canonical ordered-graph
/// pair of type patterns.
pub fn ordered_edge() -> QfFormula {
    QfFormula::And(vec![QfFormula::Lt(0, 1), QfFormula::Edge(0, 1)])
}

/// `x0 < x1 and not R(x0, x1)`: the negative half.
pub fn ordered_nonedge() -> QfFormula {
    QfFormula::And(vec![
        QfFormula::Lt(0, 1),
        QfFormula::not(QfFormula::Edge(0, 1)),
    ])
}
