//! Abstract syntax for the supported query fragment, schemas, and integrity
//! constraints.
//!
//! Queries arrive here from the SQL parser (see [`crate::parser`]) or from the
//! s-expression reader, already desugared to the core constructors: relation
//! scan, projection, filter, rename, set/bag operations, distinct, products
//! and joins, grouping, `WITH` bindings, and a topmost `ORDER BY`.

use crate::value::Value;
use serde::{Deserialize, Serialize};

/// Resolved attribute identifier, globally unique after name resolution
/// (e.g. `EMP.eid`, `T.eid`, `Avg_sal`).
pub type Ident = String;

/// Identity of an AST node, assigned in preorder during name resolution.
/// Used to derive deterministic names for fresh symbolic tuples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColType {
    Int,
    Bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationSchema {
    pub name: String,
    /// Ordered list of (attribute name, type); non-empty.
    pub attrs: Vec<(String, ColType)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Schema {
    pub relations: Vec<RelationSchema>,
}

impl Schema {
    pub fn relation(&self, name: &str) -> Option<&RelationSchema> {
        self.relations.iter().find(|r| r.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Le,
    Lt,
    Eq,
    Ne,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn apply_i64(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Le => a <= b,
            CmpOp::Lt => a < b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Le => "<=",
            CmpOp::Lt => "<",
            CmpOp::Eq => "=",
            CmpOp::Ne => "<>",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
            ArithOp::Mod => "%",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AggFunc {
    Count,
    Min,
    Max,
    Sum,
    Avg,
}

impl AggFunc {
    pub fn name(self) -> &'static str {
        match self {
            AggFunc::Count => "Count",
            AggFunc::Min => "Min",
            AggFunc::Max => "Max",
            AggFunc::Sum => "Sum",
            AggFunc::Avg => "Avg",
        }
    }
}

/// Scalar and aggregate expressions over attributes.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Column(Ident),
    Lit(Value),
    Arith {
        op: ArithOp,
        left: Box<Expr>,
        right: Box<Expr>,
    },
    Ite {
        cond: Box<Pred>,
        then_value: Box<Expr>,
        else_value: Box<Expr>,
    },
    Case {
        arms: Vec<(Pred, Expr)>,
        default: Box<Expr>,
    },
    Agg {
        func: AggFunc,
        arg: Box<Expr>,
    },
    /// Cast of a predicate to an integer: Null if the predicate is Null,
    /// 1 if true, 0 otherwise.
    Cast(Box<Pred>),
}

/// Three-valued predicates.
#[derive(Debug, Clone, PartialEq)]
pub enum Pred {
    /// Literal truth value: true, false, or Null.
    Lit(Option<bool>),
    Cmp {
        op: CmpOp,
        left: Box<Expr>,
        right: Box<Expr>,
    },
    IsNull(Box<Expr>),
    /// Row membership in a list of constant rows.
    InList {
        exprs: Vec<Expr>,
        rows: Vec<Vec<Value>>,
    },
    /// Row membership in an (uncorrelated) subquery.
    InQuery {
        exprs: Vec<Expr>,
        query: Box<Query>,
    },
    And(Box<Pred>, Box<Pred>),
    Or(Box<Pred>, Box<Pred>),
    Not(Box<Pred>),
}

/// A projection item: an expression with its output name. The name is the
/// declared alias when one was given, otherwise a deterministic rendering of
/// the expression (e.g. `Avg(sal)` becomes `Avg_sal`).
#[derive(Debug, Clone, PartialEq)]
pub struct ProjItem {
    pub expr: Expr,
    pub alias: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JoinKind {
    Product,
    Inner,
    Left,
    Right,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CollOp {
    /// UNION: distinct union.
    Union,
    /// INTERSECT: distinct intersection.
    Intersect,
    /// EXCEPT: distinct difference.
    Except,
    /// UNION ALL: bag concatenation.
    UnionAll,
    /// INTERSECT ALL.
    IntersectAll,
    /// EXCEPT ALL: removes each left occurrence at most once.
    ExceptAll,
}

impl CollOp {
    pub fn keyword(self) -> &'static str {
        match self {
            CollOp::Union => "union",
            CollOp::Intersect => "intersect",
            CollOp::Except => "except",
            CollOp::UnionAll => "unionall",
            CollOp::IntersectAll => "intersectall",
            CollOp::ExceptAll => "exceptall",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub id: NodeId,
    pub kind: QueryKind,
}

impl Query {
    pub fn new(kind: QueryKind) -> Self {
        Query {
            id: NodeId::default(),
            kind,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum QueryKind {
    Relation(String),
    Project {
        items: Vec<ProjItem>,
        input: Box<Query>,
    },
    Filter {
        pred: Pred,
        input: Box<Query>,
    },
    Rename {
        alias: String,
        input: Box<Query>,
    },
    Join {
        kind: JoinKind,
        /// Join condition; `None` only for `Product`.
        pred: Option<Pred>,
        left: Box<Query>,
        right: Box<Query>,
    },
    Coll {
        op: CollOp,
        left: Box<Query>,
        right: Box<Query>,
    },
    Distinct(Box<Query>),
    GroupBy {
        keys: Vec<Expr>,
        items: Vec<ProjItem>,
        having: Option<Pred>,
        input: Box<Query>,
    },
    With {
        bindings: Vec<(String, Query)>,
        body: Box<Query>,
    },
    OrderBy {
        keys: Vec<Expr>,
        /// Ascending when true, descending otherwise.
        asc: bool,
        input: Box<Query>,
    },
}

/// One primitive integrity constraint.
#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    PrimaryKey { rel: String, attrs: Vec<String> },
    ForeignKey {
        rel: String,
        attr: String,
        ref_rel: String,
        ref_attr: String,
    },
    NotNull { rel: String, attr: String },
    Check { rel: String, pred: CheckPred },
    /// Attribute starts at `start` and increases by exactly one per tuple.
    AutoInc {
        rel: String,
        attr: String,
        start: i64,
    },
}

/// The restricted predicate grammar of check constraints: comparisons between
/// one relation's attributes and constants, membership in a constant list,
/// and boolean combinations thereof.
#[derive(Debug, Clone, PartialEq)]
pub enum CheckPred {
    CmpConst {
        attr: String,
        op: CmpOp,
        value: Value,
    },
    CmpAttr {
        left: String,
        op: CmpOp,
        right: String,
    },
    InList { attr: String, values: Vec<Value> },
    And(Box<CheckPred>, Box<CheckPred>),
    Or(Box<CheckPred>, Box<CheckPred>),
    Not(Box<CheckPred>),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConstraintSet(pub Vec<Constraint>);

impl Expr {
    /// Whether any aggregate function occurs in this expression.
    pub fn has_agg(&self) -> bool {
        match self {
            Expr::Column(_) | Expr::Lit(_) => false,
            Expr::Arith { left, right, .. } => left.has_agg() || right.has_agg(),
            Expr::Ite {
                cond,
                then_value,
                else_value,
            } => cond.has_agg() || then_value.has_agg() || else_value.has_agg(),
            Expr::Case { arms, default } => {
                arms.iter().any(|(p, e)| p.has_agg() || e.has_agg()) || default.has_agg()
            }
            Expr::Agg { .. } => true,
            Expr::Cast(p) => p.has_agg(),
        }
    }

    /// Attribute identifiers referenced outside aggregate arguments.
    pub fn free_columns(&self, out: &mut Vec<Ident>) {
        match self {
            Expr::Column(c) => out.push(c.clone()),
            Expr::Lit(_) => {}
            Expr::Arith { left, right, .. } => {
                left.free_columns(out);
                right.free_columns(out);
            }
            Expr::Ite {
                cond,
                then_value,
                else_value,
            } => {
                cond.free_columns(out);
                then_value.free_columns(out);
                else_value.free_columns(out);
            }
            Expr::Case { arms, default } => {
                for (p, e) in arms {
                    p.free_columns(out);
                    e.free_columns(out);
                }
                default.free_columns(out);
            }
            Expr::Agg { .. } => {}
            Expr::Cast(p) => p.free_columns(out),
        }
    }

    /// All attribute identifiers referenced, including inside aggregates.
    pub fn all_columns(&self, out: &mut Vec<Ident>) {
        match self {
            Expr::Column(c) => out.push(c.clone()),
            Expr::Lit(_) => {}
            Expr::Arith { left, right, .. } => {
                left.all_columns(out);
                right.all_columns(out);
            }
            Expr::Ite {
                cond,
                then_value,
                else_value,
            } => {
                cond.all_columns(out);
                then_value.all_columns(out);
                else_value.all_columns(out);
            }
            Expr::Case { arms, default } => {
                for (p, e) in arms {
                    p.all_columns(out);
                    e.all_columns(out);
                }
                default.all_columns(out);
            }
            Expr::Agg { arg, .. } => arg.all_columns(out),
            Expr::Cast(p) => p.all_columns(out),
        }
    }
}

impl Pred {
    pub fn has_agg(&self) -> bool {
        match self {
            Pred::Lit(_) => false,
            Pred::Cmp { left, right, .. } => left.has_agg() || right.has_agg(),
            Pred::IsNull(e) => e.has_agg(),
            Pred::InList { exprs, .. } => exprs.iter().any(Expr::has_agg),
            Pred::InQuery { exprs, .. } => exprs.iter().any(Expr::has_agg),
            Pred::And(a, b) | Pred::Or(a, b) => a.has_agg() || b.has_agg(),
            Pred::Not(p) => p.has_agg(),
        }
    }

    /// Attribute identifiers referenced outside aggregate arguments and
    /// outside membership subqueries.
    pub fn free_columns(&self, out: &mut Vec<Ident>) {
        match self {
            Pred::Lit(_) => {}
            Pred::Cmp { left, right, .. } => {
                left.free_columns(out);
                right.free_columns(out);
            }
            Pred::IsNull(e) => e.free_columns(out),
            Pred::InList { exprs, .. } => exprs.iter().for_each(|e| e.free_columns(out)),
            Pred::InQuery { exprs, .. } => exprs.iter().for_each(|e| e.free_columns(out)),
            Pred::And(a, b) | Pred::Or(a, b) => {
                a.free_columns(out);
                b.free_columns(out);
            }
            Pred::Not(p) => p.free_columns(out),
        }
    }

    pub fn all_columns(&self, out: &mut Vec<Ident>) {
        match self {
            Pred::Lit(_) => {}
            Pred::Cmp { left, right, .. } => {
                left.all_columns(out);
                right.all_columns(out);
            }
            Pred::IsNull(e) => e.all_columns(out),
            Pred::InList { exprs, .. } => exprs.iter().for_each(|e| e.all_columns(out)),
            Pred::InQuery { exprs, .. } => exprs.iter().for_each(|e| e.all_columns(out)),
            Pred::And(a, b) | Pred::Or(a, b) => {
                a.all_columns(out);
                b.all_columns(out);
            }
            Pred::Not(p) => p.all_columns(out),
        }
    }
}

impl ProjItem {
    /// The output attribute name of this item: the declared alias, or a
    /// deterministic rendering of the expression.
    pub fn output_name(&self) -> String {
        match &self.alias {
            Some(a) => a.clone(),
            None => derived_name(&self.expr),
        }
    }
}

/// Deterministic attribute name for an unaliased expression: a plain column
/// keeps its unqualified name, an aggregate `Avg(sal)` becomes `Avg_sal`, and
/// compound expressions are flattened with operator mnemonics. Derived names
/// never contain `.` so they re-qualify cleanly under renames.
pub fn derived_name(e: &Expr) -> String {
    match e {
        Expr::Column(c) => c.rsplit('.').next().unwrap_or(c).to_string(),
        Expr::Lit(v) => match v {
            Value::Int(i) if *i < 0 => format!("m{}", -i),
            Value::Int(i) => format!("n{i}"),
            v => format!("{v}"),
        },
        Expr::Arith { op, left, right } => {
            let opname = match op {
                ArithOp::Add => "add",
                ArithOp::Sub => "sub",
                ArithOp::Mul => "mul",
                ArithOp::Div => "div",
                ArithOp::Mod => "mod",
            };
            format!("{}_{}_{}", opname, derived_name(left), derived_name(right))
        }
        Expr::Ite { .. } => "ite".to_string(),
        Expr::Case { .. } => "case".to_string(),
        Expr::Agg { func, arg } => format!("{}_{}", func.name(), flatten_base(arg)),
        Expr::Cast(_) => "cast".to_string(),
    }
}

fn flatten_base(e: &Expr) -> String {
    // Use the unqualified part of column names inside aggregate-derived
    // names, matching the `Avg(sal)` -> `Avg_sal` convention.
    match e {
        Expr::Column(c) => c.rsplit('.').next().unwrap_or(c).to_string(),
        other => derived_name(other),
    }
}
