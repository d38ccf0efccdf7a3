//! Runtime values and three-valued logic.
//!
//! A value is an integer, a boolean, or Null. All Null values are equal to
//! each other and unequal to every integer and boolean. Predicates evaluate
//! to one of three truth values; the conjunction, disjunction, and negation
//! tables are the standard SQL ones.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Null,
}

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Null => write!(f, "null"),
        }
    }
}

/// Truth value of a predicate: true, false, or Null (unknown).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TriBool {
    True,
    False,
    Null,
}

impl TriBool {
    pub const ALL: [TriBool; 3] = [TriBool::True, TriBool::False, TriBool::Null];

    pub fn from_bool(b: bool) -> Self {
        if b {
            TriBool::True
        } else {
            TriBool::False
        }
    }

    pub fn is_true(self) -> bool {
        self == TriBool::True
    }

    /// v1 AND v2: Null when one operand is Null and the other is not false.
    pub fn and(self, other: TriBool) -> TriBool {
        use TriBool::*;
        match (self, other) {
            (Null, Null) | (Null, True) | (True, Null) => Null,
            (a, b) => TriBool::from_bool(a == True && b == True),
        }
    }

    /// v1 OR v2: Null when one operand is Null and the other is not true.
    pub fn or(self, other: TriBool) -> TriBool {
        use TriBool::*;
        match (self, other) {
            (Null, Null) | (Null, False) | (False, Null) => Null,
            (a, b) => TriBool::from_bool(a == True || b == True),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> TriBool {
        match self {
            TriBool::True => TriBool::False,
            TriBool::False => TriBool::True,
            TriBool::Null => TriBool::Null,
        }
    }
}
