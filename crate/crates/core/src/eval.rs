//! Reference interpreter over concrete databases.
//!
//! This is the trusted oracle: a direct transcription of the denotational
//! semantics, list-based with bag equality applied only at comparison time.
//! Counterexamples from the solver are validated against it, and the symbolic
//! encoder is differentially tested against it.
//!
//! Numeric notes: division and modulo are Euclidean, matching the solver's
//! integer theory. `Avg` carries an exact sum/count pair internally so
//! comparisons do not depend on rounding; it truncates toward zero when its
//! value lands in an output column.

use crate::ast::*;
use crate::error::{Error, Result};
use crate::resolve::requalify;
use crate::value::{TriBool, Value};
use std::collections::BTreeMap;

pub type Row = Vec<Value>;

#[derive(Debug, Clone, PartialEq)]
pub struct Relation {
    pub attrs: Vec<Ident>,
    pub rows: Vec<Row>,
}

impl Relation {
    pub fn new(attrs: Vec<Ident>, rows: Vec<Row>) -> Self {
        Relation { attrs, rows }
    }

    pub fn arity(&self) -> usize {
        self.attrs.len()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Database {
    /// Base relations keyed by name; attribute names are unqualified here and
    /// qualified on lookup.
    pub relations: BTreeMap<String, Relation>,
}

impl Database {
    pub fn empty(schema: &Schema) -> Self {
        let mut relations = BTreeMap::new();
        for rs in &schema.relations {
            relations.insert(
                rs.name.clone(),
                Relation::new(rs.attrs.iter().map(|(a, _)| a.clone()).collect(), vec![]),
            );
        }
        Database { relations }
    }

    /// Checks conformance with a schema: same relations, matching arity and
    /// per-column types (Null conforms to both).
    pub fn conforms(&self, schema: &Schema) -> bool {
        if self.relations.len() != schema.relations.len() {
            return false;
        }
        for rs in &schema.relations {
            let Some(rel) = self.relations.get(&rs.name) else {
                return false;
            };
            if rel.attrs.len() != rs.attrs.len() {
                return false;
            }
            for row in &rel.rows {
                if row.len() != rs.attrs.len() {
                    return false;
                }
                for (v, (_, ty)) in row.iter().zip(&rs.attrs) {
                    let ok = matches!(
                        (v, ty),
                        (Value::Null, _)
                            | (Value::Int(_), ColType::Int)
                            | (Value::Bool(_), ColType::Bool)
                    );
                    if !ok {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Database view extended with WITH bindings.
struct DbEnv<'a> {
    base: &'a Database,
    extra: Vec<(String, Relation)>,
}

impl<'a> DbEnv<'a> {
    fn lookup(&self, name: &str) -> Result<Relation> {
        for (n, r) in self.extra.iter().rev() {
            if n == name {
                return Ok(r.clone());
            }
        }
        match self.base.relations.get(name) {
            Some(r) => Ok(Relation::new(
                r.attrs.iter().map(|a| format!("{name}.{a}")).collect(),
                r.rows.clone(),
            )),
            None => Err(Error::UnknownRelation(name.to_string())),
        }
    }
}

/// Exact scalar used during expression evaluation. `Rat` only arises from
/// `Avg` and keeps comparisons independent of integer rounding.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Scalar {
    Int(i128),
    Rat(i128, i128),
    Bool(bool),
    Null,
}

impl Scalar {
    fn from_value(v: &Value) -> Scalar {
        match v {
            Value::Int(i) => Scalar::Int(*i as i128),
            Value::Bool(b) => Scalar::Bool(*b),
            Value::Null => Scalar::Null,
        }
    }

    fn materialize(self) -> Result<Value> {
        Ok(match self {
            Scalar::Int(i) => Value::Int(
                i64::try_from(i).map_err(|_| Error::Eval("integer overflow".into()))?,
            ),
            Scalar::Rat(n, d) => {
                // Truncation toward zero.
                Value::Int(
                    i64::try_from(n / d).map_err(|_| Error::Eval("integer overflow".into()))?,
                )
            }
            Scalar::Bool(b) => Value::Bool(b),
            Scalar::Null => Value::Null,
        })
    }

    fn is_null(self) -> bool {
        matches!(self, Scalar::Null)
    }
}

fn scalar_eq(a: Scalar, b: Scalar) -> Result<bool> {
    Ok(match (a, b) {
        (Scalar::Bool(x), Scalar::Bool(y)) => x == y,
        (Scalar::Bool(_), _) | (_, Scalar::Bool(_)) => {
            return Err(Error::Eval("comparing boolean with number".into()))
        }
        _ => scalar_cmp(a, b)? == std::cmp::Ordering::Equal,
    })
}

fn scalar_cmp(a: Scalar, b: Scalar) -> Result<std::cmp::Ordering> {
    let rat = |s: Scalar| -> Result<(i128, i128)> {
        match s {
            Scalar::Int(i) => Ok((i, 1)),
            Scalar::Rat(n, d) => Ok((n, d)),
            Scalar::Bool(b) => Ok((b as i128, 1)),
            Scalar::Null => Err(Error::Internal("comparing Null scalar".into())),
        }
    };
    let (an, ad) = rat(a)?;
    let (bn, bd) = rat(b)?;
    // Denominators are positive (counts), so cross-multiplication preserves
    // the ordering.
    Ok((an * bd).cmp(&(bn * ad)))
}

struct Evaluator<'a> {
    env: DbEnv<'a>,
}

/// Evaluates a resolved, well-formed query on a concrete database.
pub fn eval_query(db: &Database, q: &Query) -> Result<Relation> {
    let mut ev = Evaluator {
        env: DbEnv {
            base: db,
            extra: Vec::new(),
        },
    };
    ev.query(q)
}

/// Evaluates a predicate in a row context: `attrs` names the columns of the
/// rows in `xs`; the first row is the head context for column references.
pub fn eval_predicate(db: &Database, attrs: &[Ident], xs: &[Row], pred: &Pred) -> Result<TriBool> {
    let mut ev = Evaluator {
        env: DbEnv {
            base: db,
            extra: Vec::new(),
        },
    };
    ev.pred(pred, attrs, xs)
}

/// Evaluates one aggregate over a tuple context, materializing the result.
pub fn eval_aggregate(
    db: &Database,
    attrs: &[Ident],
    xs: &[Row],
    func: AggFunc,
    arg: &Expr,
) -> Result<Value> {
    let mut ev = Evaluator {
        env: DbEnv {
            base: db,
            extra: Vec::new(),
        },
    };
    ev.aggregate(func, arg, attrs, xs)?.materialize()
}

impl<'a> Evaluator<'a> {
    fn query(&mut self, q: &Query) -> Result<Relation> {
        match &q.kind {
            QueryKind::Relation(name) => self.env.lookup(name),
            QueryKind::Project { items, input } => {
                let rel = self.query(input)?;
                let names = crate::resolve::output_names(items);
                let has_agg = items.iter().any(|i| i.expr.has_agg());
                let rows = if has_agg {
                    // The whole input forms one tuple of aggregates.
                    let row = self.project_row(items, &rel.attrs, &rel.rows)?;
                    vec![row]
                } else {
                    rel.rows
                        .iter()
                        .map(|r| self.project_row(items, &rel.attrs, std::slice::from_ref(r)))
                        .collect::<Result<Vec<_>>>()?
                };
                Ok(Relation::new(names, rows))
            }
            QueryKind::Filter { pred, input } => {
                let rel = self.query(input)?;
                let mut rows = Vec::new();
                for r in &rel.rows {
                    if self
                        .pred(pred, &rel.attrs, std::slice::from_ref(r))?
                        .is_true()
                    {
                        rows.push(r.clone());
                    }
                }
                Ok(Relation::new(rel.attrs, rows))
            }
            QueryKind::Rename { alias, input } => {
                let rel = self.query(input)?;
                Ok(Relation::new(
                    rel.attrs.iter().map(|a| requalify(alias, a)).collect(),
                    rel.rows,
                ))
            }
            QueryKind::Join {
                kind,
                pred,
                left,
                right,
            } => self.join(*kind, pred.as_ref(), left, right),
            QueryKind::Coll { op, left, right } => self.coll(*op, left, right),
            QueryKind::Distinct(input) => {
                let rel = self.query(input)?;
                Ok(Relation::new(rel.attrs, dedup_rows(&rel.rows)))
            }
            QueryKind::GroupBy {
                keys,
                items,
                having,
                input,
            } => {
                let rel = self.query(input)?;
                // Group rows by the evaluated key vector, first-seen order.
                let mut key_order: Vec<Vec<Value>> = Vec::new();
                let mut groups: Vec<Vec<Row>> = Vec::new();
                for r in &rel.rows {
                    let key = keys
                        .iter()
                        .map(|k| {
                            self.expr(k, &rel.attrs, std::slice::from_ref(r))?
                                .materialize()
                        })
                        .collect::<Result<Vec<_>>>()?;
                    match key_order.iter().position(|k| *k == key) {
                        Some(i) => groups[i].push(r.clone()),
                        None => {
                            key_order.push(key);
                            groups.push(vec![r.clone()]);
                        }
                    }
                }
                let names = crate::resolve::output_names(items);
                let mut rows = Vec::new();
                for g in &groups {
                    if let Some(h) = having {
                        if !self.pred(h, &rel.attrs, g)?.is_true() {
                            continue;
                        }
                    }
                    rows.push(self.project_row(items, &rel.attrs, g)?);
                }
                Ok(Relation::new(names, rows))
            }
            QueryKind::With { bindings, body } => {
                let depth = self.env.extra.len();
                for (name, bq) in bindings {
                    let rel = match self.query(bq) {
                        Ok(r) => r,
                        Err(e) => {
                            self.env.extra.truncate(depth);
                            return Err(e);
                        }
                    };
                    self.env.extra.push((name.clone(), rel));
                }
                let out = self.query(body);
                self.env.extra.truncate(depth);
                out
            }
            QueryKind::OrderBy { keys, asc, input } => {
                let rel = self.query(input)?;
                let sorted = self.selection_sort(&rel, keys, *asc)?;
                Ok(Relation::new(rel.attrs, sorted))
            }
        }
    }

    fn project_row(&mut self, items: &[ProjItem], attrs: &[Ident], xs: &[Row]) -> Result<Row> {
        items
            .iter()
            .map(|item| self.expr(&item.expr, attrs, xs)?.materialize())
            .collect()
    }

    fn join(
        &mut self,
        kind: JoinKind,
        pred: Option<&Pred>,
        left: &Query,
        right: &Query,
    ) -> Result<Relation> {
        let l = self.query(left)?;
        let r = self.query(right)?;
        let mut attrs = l.attrs.clone();
        attrs.extend(r.attrs.iter().cloned());

        let merge = |x: &Row, y: &Row| {
            let mut m = x.clone();
            m.extend(y.iter().cloned());
            m
        };
        let null_row = |n: usize| vec![Value::Null; n];

        // Inner-join rows for a single left row.
        let inner_for = |this: &mut Self, x: &Row| -> Result<Vec<Row>> {
            let mut out = Vec::new();
            for y in &r.rows {
                let merged = merge(x, y);
                let keep = match pred {
                    Some(p) => this.pred(p, &attrs, std::slice::from_ref(&merged))?.is_true(),
                    None => true,
                };
                if keep {
                    out.push(merged);
                }
            }
            Ok(out)
        };

        let rows = match kind {
            JoinKind::Product => {
                let mut out = Vec::new();
                for x in &l.rows {
                    for y in &r.rows {
                        out.push(merge(x, y));
                    }
                }
                out
            }
            JoinKind::Inner => {
                let mut out = Vec::new();
                for x in &l.rows {
                    out.extend(inner_for(self, x)?);
                }
                out
            }
            JoinKind::Left => {
                let mut out = Vec::new();
                for x in &l.rows {
                    let v1 = inner_for(self, x)?;
                    if v1.is_empty() {
                        out.push(merge(x, &null_row(r.arity())));
                    } else {
                        out.extend(v1);
                    }
                }
                out
            }
            JoinKind::Right => {
                let mut out = Vec::new();
                for y in &r.rows {
                    let mut v1 = Vec::new();
                    for x in &l.rows {
                        let merged = merge(x, y);
                        let keep = match pred {
                            Some(p) => {
                                self.pred(p, &attrs, std::slice::from_ref(&merged))?.is_true()
                            }
                            None => true,
                        };
                        if keep {
                            v1.push(merged);
                        }
                    }
                    if v1.is_empty() {
                        out.push(merge(&null_row(l.arity()), y));
                    } else {
                        out.extend(v1);
                    }
                }
                out
            }
            JoinKind::Full => {
                // Left outer join, then null-extensions for unmatched right
                // rows.
                let mut out = Vec::new();
                for x in &l.rows {
                    let v1 = inner_for(self, x)?;
                    if v1.is_empty() {
                        out.push(merge(x, &null_row(r.arity())));
                    } else {
                        out.extend(v1);
                    }
                }
                for y in &r.rows {
                    let mut matched = false;
                    for x in &l.rows {
                        let merged = merge(x, y);
                        let keep = match pred {
                            Some(p) => {
                                self.pred(p, &attrs, std::slice::from_ref(&merged))?.is_true()
                            }
                            None => true,
                        };
                        if keep {
                            matched = true;
                            break;
                        }
                    }
                    if !matched {
                        out.push(merge(&null_row(l.arity()), y));
                    }
                }
                out
            }
        };
        Ok(Relation::new(attrs, rows))
    }

    fn coll(&mut self, op: CollOp, left: &Query, right: &Query) -> Result<Relation> {
        let l = self.query(left)?;
        let r = self.query(right)?;
        if l.arity() != r.arity() {
            return Err(Error::Arity(format!(
                "operands of {} have {} and {} columns",
                op.keyword(),
                l.arity(),
                r.arity()
            )));
        }
        let rows = match op {
            CollOp::UnionAll => {
                let mut rows = l.rows;
                rows.extend(r.rows);
                rows
            }
            CollOp::Union => {
                let mut rows = l.rows;
                rows.extend(r.rows);
                dedup_rows(&rows)
            }
            CollOp::Intersect => dedup_rows(&l.rows)
                .into_iter()
                .filter(|x| r.rows.contains(x))
                .collect(),
            CollOp::Except => dedup_rows(&l.rows)
                .into_iter()
                .filter(|x| !r.rows.contains(x))
                .collect(),
            CollOp::ExceptAll => bag_minus(&l.rows, &r.rows),
            CollOp::IntersectAll => bag_minus(&l.rows, &bag_minus(&l.rows, &r.rows)),
        };
        Ok(Relation::new(l.attrs, rows))
    }

    /// Deterministic selection sort: repeatedly pick the first minimal (or
    /// maximal) remaining row, with Null ordered as negative infinity.
    fn selection_sort(&mut self, rel: &Relation, keys: &[Expr], asc: bool) -> Result<Vec<Row>> {
        let mut remaining = rel.rows.clone();
        let mut out = Vec::with_capacity(remaining.len());
        while !remaining.is_empty() {
            let mut best = 0;
            for i in 1..remaining.len() {
                // Replace the current best when the candidate strictly
                // precedes it in the requested order.
                if self.key_lt(&remaining[i], &remaining[best], keys, asc, &rel.attrs)? {
                    best = i;
                }
            }
            out.push(remaining.remove(best));
        }
        Ok(out)
    }

    /// Strict "x sorts before y" under the key list; ties keep earlier rows.
    fn key_lt(&mut self, x: &Row, y: &Row, keys: &[Expr], asc: bool, attrs: &[Ident]) -> Result<bool> {
        for k in keys {
            let kx = self.sort_key(k, attrs, x)?;
            let ky = self.sort_key(k, attrs, y)?;
            let ord = match (kx, ky) {
                (None, None) => std::cmp::Ordering::Equal,
                (None, Some(_)) => std::cmp::Ordering::Less,
                (Some(_), None) => std::cmp::Ordering::Greater,
                (Some(a), Some(b)) => scalar_cmp(a, b)?,
            };
            match (asc, ord) {
                (_, std::cmp::Ordering::Equal) => continue,
                (true, o) => return Ok(o == std::cmp::Ordering::Less),
                (false, o) => return Ok(o == std::cmp::Ordering::Greater),
            }
        }
        Ok(false)
    }

    /// Sort key with Null mapped below every value (None < Some).
    fn sort_key(&mut self, k: &Expr, attrs: &[Ident], row: &Row) -> Result<Option<Scalar>> {
        let s = self.expr(k, attrs, std::slice::from_ref(row))?;
        Ok(if s.is_null() { None } else { Some(s) })
    }

    fn lookup_col(attrs: &[Ident], xs: &[Row], c: &Ident) -> Result<Scalar> {
        let idx = attrs
            .iter()
            .position(|a| a == c)
            .ok_or_else(|| Error::UnknownAttribute(c.clone()))?;
        let head = xs
            .first()
            .ok_or_else(|| Error::Internal(format!("empty tuple context for `{c}`")))?;
        Ok(Scalar::from_value(&head[idx]))
    }

    fn expr(&mut self, e: &Expr, attrs: &[Ident], xs: &[Row]) -> Result<Scalar> {
        match e {
            Expr::Column(c) => Self::lookup_col(attrs, xs, c),
            Expr::Lit(v) => Ok(Scalar::from_value(v)),
            Expr::Arith { op, left, right } => {
                let a = self.expr(left, attrs, xs)?;
                let b = self.expr(right, attrs, xs)?;
                if a.is_null() || b.is_null() {
                    return Ok(Scalar::Null);
                }
                arith(*op, a, b)
            }
            Expr::Ite {
                cond,
                then_value,
                else_value,
            } => {
                if self.pred(cond, attrs, xs)?.is_true() {
                    self.expr(then_value, attrs, xs)
                } else {
                    self.expr(else_value, attrs, xs)
                }
            }
            Expr::Case { arms, default } => {
                for (p, v) in arms {
                    if self.pred(p, attrs, xs)?.is_true() {
                        return self.expr(v, attrs, xs);
                    }
                }
                self.expr(default, attrs, xs)
            }
            Expr::Agg { func, arg } => self.aggregate(*func, arg, attrs, xs),
            Expr::Cast(p) => Ok(match self.pred(p, attrs, xs)? {
                TriBool::Null => Scalar::Null,
                TriBool::True => Scalar::Int(1),
                TriBool::False => Scalar::Int(0),
            }),
        }
    }

    fn aggregate(&mut self, func: AggFunc, arg: &Expr, attrs: &[Ident], xs: &[Row]) -> Result<Scalar> {
        let mut vals = Vec::with_capacity(xs.len());
        for row in xs {
            vals.push(self.expr(arg, attrs, std::slice::from_ref(row))?);
        }
        let all_null = vals.iter().all(|v| v.is_null());
        if all_null {
            return Ok(Scalar::Null);
        }
        match func {
            AggFunc::Count => Ok(Scalar::Int(vals.iter().filter(|v| !v.is_null()).count() as i128)),
            AggFunc::Sum => {
                let mut sum: i128 = 0;
                for v in &vals {
                    if let Scalar::Int(i) = v {
                        sum += i;
                    } else if let Scalar::Bool(_) = v {
                        return Err(Error::Eval("SUM over boolean".into()));
                    }
                }
                Ok(Scalar::Int(sum))
            }
            AggFunc::Avg => {
                let mut sum: i128 = 0;
                let mut count: i128 = 0;
                for v in &vals {
                    if let Scalar::Int(i) = v {
                        sum += i;
                        count += 1;
                    } else if let Scalar::Bool(_) = v {
                        return Err(Error::Eval("AVG over boolean".into()));
                    }
                }
                Ok(Scalar::Rat(sum, count))
            }
            AggFunc::Min | AggFunc::Max => {
                let mut best: Option<Scalar> = None;
                for v in &vals {
                    if v.is_null() {
                        continue;
                    }
                    best = Some(match best {
                        None => *v,
                        Some(b) => {
                            let ord = scalar_cmp(*v, b)?;
                            let take = if func == AggFunc::Min {
                                ord == std::cmp::Ordering::Less
                            } else {
                                ord == std::cmp::Ordering::Greater
                            };
                            if take {
                                *v
                            } else {
                                b
                            }
                        }
                    });
                }
                Ok(best.unwrap_or(Scalar::Null))
            }
        }
    }

    fn pred(&mut self, p: &Pred, attrs: &[Ident], xs: &[Row]) -> Result<TriBool> {
        match p {
            Pred::Lit(Some(b)) => Ok(TriBool::from_bool(*b)),
            Pred::Lit(None) => Ok(TriBool::Null),
            Pred::Cmp { op, left, right } => {
                let a = self.expr(left, attrs, xs)?;
                let b = self.expr(right, attrs, xs)?;
                // A comparison with a Null operand is false, not Null.
                if a.is_null() || b.is_null() {
                    return Ok(TriBool::False);
                }
                let r = match op {
                    CmpOp::Eq => scalar_eq(a, b)?,
                    CmpOp::Ne => !scalar_eq(a, b)?,
                    _ => {
                        let ord = scalar_cmp(a, b)?;
                        match op {
                            CmpOp::Le => ord != std::cmp::Ordering::Greater,
                            CmpOp::Lt => ord == std::cmp::Ordering::Less,
                            CmpOp::Gt => ord == std::cmp::Ordering::Greater,
                            CmpOp::Ge => ord != std::cmp::Ordering::Less,
                            _ => unreachable!(),
                        }
                    }
                };
                Ok(TriBool::from_bool(r))
            }
            Pred::IsNull(e) => Ok(TriBool::from_bool(self.expr(e, attrs, xs)?.is_null())),
            Pred::InList { exprs, rows } => {
                let mut acc = TriBool::False;
                for row in rows {
                    let mut conj = TriBool::True;
                    for (e, v) in exprs.iter().zip(row) {
                        let ev = self.expr(e, attrs, xs)?;
                        let vv = Scalar::from_value(v);
                        let eq = if ev.is_null() || vv.is_null() {
                            TriBool::False
                        } else {
                            TriBool::from_bool(scalar_eq(ev, vv)?)
                        };
                        conj = conj.and(eq);
                    }
                    acc = acc.or(conj);
                }
                Ok(acc)
            }
            Pred::InQuery { exprs, query } => {
                let sub = self.query(query)?;
                let mut acc = TriBool::False;
                for row in &sub.rows {
                    let mut conj = TriBool::True;
                    for (e, v) in exprs.iter().zip(row) {
                        let ev = self.expr(e, attrs, xs)?;
                        let vv = Scalar::from_value(v);
                        let eq = if ev.is_null() || vv.is_null() {
                            TriBool::False
                        } else {
                            TriBool::from_bool(scalar_eq(ev, vv)?)
                        };
                        conj = conj.and(eq);
                    }
                    acc = acc.or(conj);
                }
                Ok(acc)
            }
            Pred::And(a, b) => Ok(self.pred(a, attrs, xs)?.and(self.pred(b, attrs, xs)?)),
            Pred::Or(a, b) => Ok(self.pred(a, attrs, xs)?.or(self.pred(b, attrs, xs)?)),
            Pred::Not(p) => Ok(self.pred(p, attrs, xs)?.not()),
        }
    }
}

fn arith(op: ArithOp, a: Scalar, b: Scalar) -> Result<Scalar> {
    let as_rat = |s: Scalar| -> Result<(i128, i128)> {
        match s {
            Scalar::Int(i) => Ok((i, 1)),
            Scalar::Rat(n, d) => Ok((n, d)),
            Scalar::Bool(_) => Err(Error::Eval("arithmetic on boolean".into())),
            Scalar::Null => Err(Error::Internal("arith on Null".into())),
        }
    };
    // Plain integers stay integers (Euclidean division); rationals only come
    // from Avg and propagate exactly.
    if let (Scalar::Int(x), Scalar::Int(y)) = (a, b) {
        return Ok(Scalar::Int(match op {
            ArithOp::Add => x + y,
            ArithOp::Sub => x - y,
            ArithOp::Mul => x * y,
            ArithOp::Div => {
                if y == 0 {
                    return Err(Error::Eval("division by zero".into()));
                }
                x.div_euclid(y)
            }
            ArithOp::Mod => {
                if y == 0 {
                    return Err(Error::Eval("modulo by zero".into()));
                }
                x.rem_euclid(y)
            }
        }));
    }
    let (an, ad) = as_rat(a)?;
    let (bn, bd) = as_rat(b)?;
    Ok(match op {
        ArithOp::Add => Scalar::Rat(an * bd + bn * ad, ad * bd),
        ArithOp::Sub => Scalar::Rat(an * bd - bn * ad, ad * bd),
        ArithOp::Mul => Scalar::Rat(an * bn, ad * bd),
        ArithOp::Div => {
            if bn == 0 {
                return Err(Error::Eval("division by zero".into()));
            }
            let mut n = an * bd;
            let mut d = ad * bn;
            if d < 0 {
                n = -n;
                d = -d;
            }
            Scalar::Rat(n, d)
        }
        ArithOp::Mod => return Err(Error::Eval("modulo on a fractional value".into())),
    })
}

/// Keeps the first occurrence of each distinct row.
fn dedup_rows(rows: &[Row]) -> Vec<Row> {
    let mut out: Vec<Row> = Vec::new();
    for r in rows {
        if !out.contains(r) {
            out.push(r.clone());
        }
    }
    out
}

/// Bag difference: removes one occurrence of each right row from the left.
fn bag_minus(left: &[Row], right: &[Row]) -> Vec<Row> {
    let mut out: Vec<Row> = left.to_vec();
    for r in right {
        if let Some(i) = out.iter().position(|x| x == r) {
            out.remove(i);
        }
    }
    out
}

/// Multiset equality of value rows; attribute names are ignored.
pub fn bag_equal(r1: &Relation, r2: &Relation) -> Result<bool> {
    if r1.arity() != r2.arity() {
        return Err(Error::Arity(format!(
            "bag comparison of arity {} with {}",
            r1.arity(),
            r2.arity()
        )));
    }
    let mut a = r1.rows.clone();
    let mut b = r2.rows.clone();
    a.sort_unstable();
    b.sort_unstable();
    Ok(a == b)
}

/// Positional equality of value rows; attribute names are ignored.
pub fn list_equal(r1: &Relation, r2: &Relation) -> Result<bool> {
    if r1.arity() != r2.arity() {
        return Err(Error::Arity(format!(
            "list comparison of arity {} with {}",
            r1.arity(),
            r2.arity()
        )));
    }
    Ok(r1.rows == r2.rows)
}
