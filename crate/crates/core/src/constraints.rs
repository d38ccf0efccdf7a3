//! Concrete-side integrity constraint checking.
//!
//! Check predicates are two-valued with explicit null guards: a comparison
//! against a constant or an ordered comparison between attributes requires
//! the operands to be non-null, while `=`/`<>` between two attributes compare
//! values directly (all nulls equal).

use crate::ast::*;
use crate::error::{Error, Result};
use crate::eval::Database;
use crate::value::Value;

/// Validates a constraint set against a schema: referenced relations and
/// attributes must exist, auto-increment attributes must be Int, and check
/// predicates must not mention Null constants.
pub fn resolve_constraints(schema: &Schema, cons: &ConstraintSet) -> Result<()> {
    let attr_ty = |rel: &str, attr: &str| -> Result<ColType> {
        let rs = schema
            .relation(rel)
            .ok_or_else(|| Error::ConstraintResolution(format!("relation `{rel}`")))?;
        rs.attrs
            .iter()
            .find(|(a, _)| a == attr)
            .map(|(_, t)| *t)
            .ok_or_else(|| Error::ConstraintResolution(format!("attribute `{rel}.{attr}`")))
    };
    for c in &cons.0 {
        match c {
            Constraint::PrimaryKey { rel, attrs } => {
                if attrs.is_empty() {
                    return Err(Error::ConstraintResolution(format!(
                        "empty primary key on `{rel}`"
                    )));
                }
                for a in attrs {
                    attr_ty(rel, a)?;
                }
            }
            Constraint::ForeignKey {
                rel,
                attr,
                ref_rel,
                ref_attr,
            } => {
                attr_ty(rel, attr)?;
                attr_ty(ref_rel, ref_attr)?;
            }
            Constraint::NotNull { rel, attr } => {
                attr_ty(rel, attr)?;
            }
            Constraint::Check { rel, pred } => check_pred_resolved(rel, pred, &attr_ty)?,
            Constraint::AutoInc { rel, attr, .. } => {
                if attr_ty(rel, attr)? != ColType::Int {
                    return Err(Error::ConstraintResolution(format!(
                        "auto-increment attribute `{rel}.{attr}` must be Int"
                    )));
                }
            }
        }
    }
    Ok(())
}

fn check_pred_resolved(
    rel: &str,
    pred: &CheckPred,
    attr_ty: &impl Fn(&str, &str) -> Result<ColType>,
) -> Result<()> {
    match pred {
        CheckPred::CmpConst { attr, value, .. } => {
            attr_ty(rel, attr)?;
            if value.is_null() {
                return Err(Error::ConstraintResolution(
                    "Null constant in check predicate".into(),
                ));
            }
            Ok(())
        }
        CheckPred::CmpAttr { left, right, .. } => {
            attr_ty(rel, left)?;
            attr_ty(rel, right)?;
            Ok(())
        }
        CheckPred::InList { attr, values } => {
            attr_ty(rel, attr)?;
            if values.iter().any(Value::is_null) {
                return Err(Error::ConstraintResolution(
                    "Null constant in check predicate".into(),
                ));
            }
            Ok(())
        }
        CheckPred::And(a, b) | CheckPred::Or(a, b) => {
            check_pred_resolved(rel, a, attr_ty)?;
            check_pred_resolved(rel, b, attr_ty)
        }
        CheckPred::Not(p) => check_pred_resolved(rel, p, attr_ty),
    }
}

/// True iff every atomic constraint holds on the database.
pub fn check_constraints(db: &Database, cons: &ConstraintSet) -> bool {
    cons.0.iter().all(|c| check_one(db, c))
}

fn col_index(db: &Database, rel: &str, attr: &str) -> Option<usize> {
    db.relations
        .get(rel)?
        .attrs
        .iter()
        .position(|a| a == attr)
}

fn check_one(db: &Database, c: &Constraint) -> bool {
    match c {
        Constraint::PrimaryKey { rel, attrs } => {
            let Some(r) = db.relations.get(rel) else {
                return false;
            };
            let idxs: Vec<usize> = match attrs
                .iter()
                .map(|a| col_index(db, rel, a))
                .collect::<Option<Vec<_>>>()
            {
                Some(v) => v,
                None => return false,
            };
            for row in &r.rows {
                if idxs.iter().any(|&i| row[i].is_null()) {
                    return false;
                }
            }
            for i in 0..r.rows.len() {
                for j in (i + 1)..r.rows.len() {
                    if idxs.iter().all(|&k| r.rows[i][k] == r.rows[j][k]) {
                        return false;
                    }
                }
            }
            true
        }
        Constraint::ForeignKey {
            rel,
            attr,
            ref_rel,
            ref_attr,
        } => {
            let (Some(r1), Some(r2)) = (db.relations.get(rel), db.relations.get(ref_rel)) else {
                return false;
            };
            let (Some(i1), Some(i2)) = (col_index(db, rel, attr), col_index(db, ref_rel, ref_attr))
            else {
                return false;
            };
            r1.rows
                .iter()
                .all(|t1| r2.rows.iter().any(|t2| t1[i1] == t2[i2]))
        }
        Constraint::NotNull { rel, attr } => {
            let Some(r) = db.relations.get(rel) else {
                return false;
            };
            let Some(i) = col_index(db, rel, attr) else {
                return false;
            };
            r.rows.iter().all(|row| !row[i].is_null())
        }
        Constraint::Check { rel, pred } => {
            let Some(r) = db.relations.get(rel) else {
                return false;
            };
            r.rows.iter().all(|row| check_pred(r, row, pred))
        }
        Constraint::AutoInc { rel, attr, start } => {
            let Some(r) = db.relations.get(rel) else {
                return false;
            };
            let Some(i) = col_index(db, rel, attr) else {
                return false;
            };
            r.rows
                .iter()
                .enumerate()
                .all(|(k, row)| row[i] == Value::Int(start + k as i64))
        }
    }
}

fn check_pred(rel: &crate::eval::Relation, row: &[Value], pred: &CheckPred) -> bool {
    let col = |attr: &str| -> Value {
        rel.attrs
            .iter()
            .position(|a| a == attr)
            .map(|i| row[i])
            .unwrap_or(Value::Null)
    };
    match pred {
        CheckPred::CmpConst { attr, op, value } => {
            let v = col(attr);
            if v.is_null() {
                return false;
            }
            cmp_values(*op, &v, value)
        }
        CheckPred::CmpAttr { left, op, right } => {
            let a = col(left);
            let b = col(right);
            match op {
                // Equality compares values directly; all nulls equal.
                CmpOp::Eq => a == b,
                CmpOp::Ne => a != b,
                _ => !a.is_null() && !b.is_null() && cmp_values(*op, &a, &b),
            }
        }
        CheckPred::InList { attr, values } => {
            let v = col(attr);
            !v.is_null() && values.contains(&v)
        }
        CheckPred::And(a, b) => check_pred(rel, row, a) && check_pred(rel, row, b),
        CheckPred::Or(a, b) => check_pred(rel, row, a) || check_pred(rel, row, b),
        CheckPred::Not(p) => !check_pred(rel, row, p),
    }
}

fn cmp_values(op: CmpOp, a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => op.apply_i64(*x, *y),
        (Value::Bool(x), Value::Bool(y)) => op.apply_i64(*x as i64, *y as i64),
        _ => matches!(op, CmpOp::Ne),
    }
}
