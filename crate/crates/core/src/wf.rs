//! Static well-formedness checks over resolved queries.
//!
//! Rejects queries that the grammar admits but the fragment does not:
//! ungrouped attribute references under grouping or aggregation, nested
//! aggregates, aggregates in WHERE or join conditions, ORDER BY below the
//! top level, and operand type mismatches.

use crate::ast::*;
use crate::error::{Error, Result};
use crate::resolve::{output_names, requalify};

/// An attribute's type; `None` marks a column whose type is not fixed
/// (only produced by all-Null expressions).
type Ty = Option<ColType>;

pub fn check_well_formed(schema: &Schema, q: &Query) -> Result<()> {
    let mut env = Vec::new();
    check_query(schema, q, true, &mut env)?;
    Ok(())
}

/// Output column types of a well-formed query; `None` marks a column typed
/// only by Null literals.
pub fn output_types(schema: &Schema, q: &Query) -> Result<Vec<Option<ColType>>> {
    let mut env = Vec::new();
    Ok(check_query(schema, q, true, &mut env)?
        .into_iter()
        .map(|(_, t)| t)
        .collect())
}

type RelTypes = Vec<(String, Vec<(Ident, Ty)>)>;

fn check_query(
    schema: &Schema,
    q: &Query,
    top: bool,
    rels: &mut RelTypes,
) -> Result<Vec<(Ident, Ty)>> {
    match &q.kind {
        QueryKind::Relation(name) => {
            for (n, attrs) in rels.iter().rev() {
                if n == name {
                    return Ok(attrs.clone());
                }
            }
            let rs = schema
                .relation(name)
                .ok_or_else(|| Error::UnknownRelation(name.clone()))?;
            Ok(rs
                .attrs
                .iter()
                .map(|(a, ty)| (format!("{}.{}", rs.name, a), Some(*ty)))
                .collect())
        }
        QueryKind::Project { items, input } => {
            let attrs = check_query(schema, input, false, rels)?;
            let has_agg = items.iter().any(|i| i.expr.has_agg());
            let mut out = Vec::new();
            for item in items {
                if has_agg {
                    // An aggregating projection computes one tuple; bare
                    // column references outside aggregates are ungrouped.
                    let mut free = Vec::new();
                    item.expr.free_columns(&mut free);
                    if let Some(c) = free.first() {
                        return Err(Error::IllFormed(format!(
                            "attribute `{c}` must appear in GROUP BY or inside an aggregate"
                        )));
                    }
                }
                check_no_nested_agg(&item.expr, false)?;
                out.push(type_expr(schema, &item.expr, &attrs, rels)?);
            }
            let names = output_names(items);
            Ok(names.into_iter().zip(out).collect())
        }
        QueryKind::Filter { pred, input } => {
            let attrs = check_query(schema, input, false, rels)?;
            if pred.has_agg() {
                return Err(Error::IllFormed(
                    "aggregate function in WHERE clause".into(),
                ));
            }
            check_pred(schema, pred, &attrs, rels)?;
            Ok(attrs)
        }
        QueryKind::Rename { alias, input } => {
            let attrs = check_query(schema, input, false, rels)?;
            Ok(attrs
                .into_iter()
                .map(|(a, ty)| (requalify(alias, &a), ty))
                .collect())
        }
        QueryKind::Join {
            pred, left, right, ..
        } => {
            let mut attrs = check_query(schema, left, false, rels)?;
            attrs.extend(check_query(schema, right, false, rels)?);
            if let Some(p) = pred {
                if p.has_agg() {
                    return Err(Error::IllFormed(
                        "aggregate function in join condition".into(),
                    ));
                }
                check_pred(schema, p, &attrs, rels)?;
            }
            Ok(attrs)
        }
        QueryKind::Coll { op, left, right } => {
            let la = check_query(schema, left, false, rels)?;
            let ra = check_query(schema, right, false, rels)?;
            if la.len() != ra.len() {
                return Err(Error::Arity(format!(
                    "operands of {} have {} and {} columns",
                    op.keyword(),
                    la.len(),
                    ra.len()
                )));
            }
            let mut out = Vec::with_capacity(la.len());
            for ((name, lt), (_, rt)) in la.into_iter().zip(ra) {
                out.push((name, unify(lt, rt)?));
            }
            Ok(out)
        }
        QueryKind::Distinct(input) => check_query(schema, input, false, rels),
        QueryKind::GroupBy {
            keys,
            items,
            having,
            input,
        } => {
            let attrs = check_query(schema, input, false, rels)?;
            for k in keys {
                if k.has_agg() {
                    return Err(Error::IllFormed(
                        "aggregate function in GROUP BY expression".into(),
                    ));
                }
                type_expr(schema, k, &attrs, rels)?;
            }
            let grouped_cols: Vec<&Ident> = keys
                .iter()
                .filter_map(|k| match k {
                    Expr::Column(c) => Some(c),
                    _ => None,
                })
                .collect();
            let check_grouped = |e: &Expr| -> Result<()> {
                // Either the expression is itself one of the grouping
                // expressions, or every bare column in it is grouped.
                if keys.contains(e) {
                    return Ok(());
                }
                let mut free = Vec::new();
                e.free_columns(&mut free);
                for c in &free {
                    if !grouped_cols.contains(&c) {
                        return Err(Error::IllFormed(format!(
                            "attribute `{c}` must appear in GROUP BY or inside an aggregate"
                        )));
                    }
                }
                Ok(())
            };
            let mut out = Vec::new();
            for item in items {
                check_no_nested_agg(&item.expr, false)?;
                check_grouped(&item.expr)?;
                out.push(type_expr(schema, &item.expr, &attrs, rels)?);
            }
            if let Some(h) = having {
                check_no_nested_agg_pred(h, false)?;
                check_grouped_pred(h, &check_grouped)?;
                check_pred(schema, h, &attrs, rels)?;
            }
            let names = output_names(items);
            Ok(names.into_iter().zip(out).collect())
        }
        QueryKind::With { bindings, body } => {
            let depth = rels.len();
            for (name, bq) in bindings {
                let r = check_query(schema, bq, false, rels);
                match r {
                    Ok(attrs) => rels.push((name.clone(), attrs)),
                    Err(e) => {
                        rels.truncate(depth);
                        return Err(e);
                    }
                }
            }
            let r = check_query(schema, body, false, rels);
            rels.truncate(depth);
            r
        }
        QueryKind::OrderBy { keys, input, .. } => {
            if !top {
                return Err(Error::unsupported("order-by-below-top-level"));
            }
            let attrs = check_query(schema, input, false, rels)?;
            for k in keys {
                if k.has_agg() {
                    return Err(Error::IllFormed(
                        "aggregate function in ORDER BY key; name the projected column instead"
                            .into(),
                    ));
                }
                type_expr(schema, k, &attrs, rels)?;
            }
            Ok(attrs)
        }
    }
}

fn check_grouped_pred(p: &Pred, check: &impl Fn(&Expr) -> Result<()>) -> Result<()> {
    match p {
        Pred::Lit(_) => Ok(()),
        Pred::Cmp { left, right, .. } => {
            check(left)?;
            check(right)
        }
        Pred::IsNull(e) => check(e),
        Pred::InList { exprs, .. } | Pred::InQuery { exprs, .. } => {
            exprs.iter().try_for_each(check)
        }
        Pred::And(a, b) | Pred::Or(a, b) => {
            check_grouped_pred(a, check)?;
            check_grouped_pred(b, check)
        }
        Pred::Not(p) => check_grouped_pred(p, check),
    }
}

fn check_no_nested_agg(e: &Expr, inside_agg: bool) -> Result<()> {
    match e {
        Expr::Column(_) | Expr::Lit(_) => Ok(()),
        Expr::Arith { left, right, .. } => {
            check_no_nested_agg(left, inside_agg)?;
            check_no_nested_agg(right, inside_agg)
        }
        Expr::Ite {
            cond,
            then_value,
            else_value,
        } => {
            check_no_nested_agg_pred(cond, inside_agg)?;
            check_no_nested_agg(then_value, inside_agg)?;
            check_no_nested_agg(else_value, inside_agg)
        }
        Expr::Case { arms, default } => {
            for (p, v) in arms {
                check_no_nested_agg_pred(p, inside_agg)?;
                check_no_nested_agg(v, inside_agg)?;
            }
            check_no_nested_agg(default, inside_agg)
        }
        Expr::Agg { arg, .. } => {
            if inside_agg {
                return Err(Error::IllFormed("nested aggregate function".into()));
            }
            check_no_nested_agg(arg, true)
        }
        Expr::Cast(p) => check_no_nested_agg_pred(p, inside_agg),
    }
}

fn check_no_nested_agg_pred(p: &Pred, inside_agg: bool) -> Result<()> {
    match p {
        Pred::Lit(_) => Ok(()),
        Pred::Cmp { left, right, .. } => {
            check_no_nested_agg(left, inside_agg)?;
            check_no_nested_agg(right, inside_agg)
        }
        Pred::IsNull(e) => check_no_nested_agg(e, inside_agg),
        Pred::InList { exprs, .. } | Pred::InQuery { exprs, .. } => exprs
            .iter()
            .try_for_each(|e| check_no_nested_agg(e, inside_agg)),
        Pred::And(a, b) | Pred::Or(a, b) => {
            check_no_nested_agg_pred(a, inside_agg)?;
            check_no_nested_agg_pred(b, inside_agg)
        }
        Pred::Not(p) => check_no_nested_agg_pred(p, inside_agg),
    }
}

fn unify(a: Ty, b: Ty) -> Result<Ty> {
    match (a, b) {
        (None, t) | (t, None) => Ok(t),
        (Some(x), Some(y)) if x == y => Ok(Some(x)),
        (Some(x), Some(y)) => Err(Error::Type(format!("cannot unify {x:?} with {y:?}"))),
    }
}

fn lookup_ty(attrs: &[(Ident, Ty)], c: &Ident) -> Result<Ty> {
    attrs
        .iter()
        .find(|(a, _)| a == c)
        .map(|(_, t)| *t)
        .ok_or_else(|| Error::UnknownAttribute(c.clone()))
}

fn type_expr(
    schema: &Schema,
    e: &Expr,
    attrs: &[(Ident, Ty)],
    rels: &mut RelTypes,
) -> Result<Ty> {
    match e {
        Expr::Column(c) => lookup_ty(attrs, c),
        Expr::Lit(v) => Ok(match v {
            crate::value::Value::Int(_) => Some(ColType::Int),
            crate::value::Value::Bool(_) => Some(ColType::Bool),
            crate::value::Value::Null => None,
        }),
        Expr::Arith { left, right, .. } => {
            let lt = type_expr(schema, left, attrs, rels)?;
            let rt = type_expr(schema, right, attrs, rels)?;
            unify(lt, Some(ColType::Int))?;
            unify(rt, Some(ColType::Int))?;
            Ok(Some(ColType::Int))
        }
        Expr::Ite {
            cond,
            then_value,
            else_value,
        } => {
            check_pred(schema, cond, attrs, rels)?;
            let t = type_expr(schema, then_value, attrs, rels)?;
            let f = type_expr(schema, else_value, attrs, rels)?;
            unify(t, f)
        }
        Expr::Case { arms, default } => {
            let mut ty = type_expr(schema, default, attrs, rels)?;
            for (p, v) in arms {
                check_pred(schema, p, attrs, rels)?;
                ty = unify(ty, type_expr(schema, v, attrs, rels)?)?;
            }
            Ok(ty)
        }
        Expr::Agg { func, arg } => {
            let at = type_expr(schema, arg, attrs, rels)?;
            if *func != AggFunc::Count {
                unify(at, Some(ColType::Int))?;
            }
            Ok(Some(ColType::Int))
        }
        Expr::Cast(p) => {
            check_pred(schema, p, attrs, rels)?;
            Ok(Some(ColType::Int))
        }
    }
}

fn check_pred(
    schema: &Schema,
    p: &Pred,
    attrs: &[(Ident, Ty)],
    rels: &mut RelTypes,
) -> Result<()> {
    match p {
        Pred::Lit(_) => Ok(()),
        Pred::Cmp { left, right, .. } => {
            let lt = type_expr(schema, left, attrs, rels)?;
            let rt = type_expr(schema, right, attrs, rels)?;
            unify(lt, rt)?;
            Ok(())
        }
        Pred::IsNull(e) => {
            type_expr(schema, e, attrs, rels)?;
            Ok(())
        }
        Pred::InList { exprs, rows } => {
            for (i, e) in exprs.iter().enumerate() {
                let mut ty = type_expr(schema, e, attrs, rels)?;
                for row in rows {
                    let vt = match row[i] {
                        crate::value::Value::Int(_) => Some(ColType::Int),
                        crate::value::Value::Bool(_) => Some(ColType::Bool),
                        crate::value::Value::Null => None,
                    };
                    ty = unify(ty, vt)?;
                }
            }
            Ok(())
        }
        Pred::InQuery { exprs, query } => {
            let q_attrs = check_query(schema, query, false, rels)?;
            for (e, (_, qt)) in exprs.iter().zip(&q_attrs) {
                let et = type_expr(schema, e, attrs, rels)?;
                unify(et, *qt)?;
            }
            Ok(())
        }
        Pred::And(a, b) | Pred::Or(a, b) => {
            check_pred(schema, a, attrs, rels)?;
            check_pred(schema, b, attrs, rels)
        }
        Pred::Not(p) => check_pred(schema, p, attrs, rels),
    }
}
