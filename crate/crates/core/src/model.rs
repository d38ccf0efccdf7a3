//! Reading relations back out of solver models.

use crate::ast::{ColType, Ident, Schema};
use crate::error::{Error, Result};
use crate::eval::{Database, Relation, Row};
use crate::formula::{TermPool, TupleId};
use crate::solver::Model;
use crate::symdb::SymbolicDatabase;
use crate::value::Value;

/// `(name, term)` queries covering the deletion flag and every attribute of
/// the given tuples.
pub fn tuple_queries(
    pool: &TermPool,
    tuples: &[TupleId],
    attrs: &[Ident],
) -> Vec<(String, String)> {
    let mut out = Vec::with_capacity(tuples.len() * (1 + 2 * attrs.len()));
    for &t in tuples {
        let tn = pool.tuple_name(t);
        out.push((format!("d|{tn}"), format!("(Del {tn})")));
        for a in attrs {
            out.push((
                format!("n|{a}|{tn}"),
                format!("({} {tn})", crate::formula::attr_null_symbol(a)),
            ));
            out.push((
                format!("v|{a}|{tn}"),
                format!("({} {tn})", crate::formula::attr_val_symbol(a)),
            ));
        }
    }
    out
}

/// Live rows of a tuple list under a model, in list order; deleted tuples
/// yield `None`. `types` drives the rendering of non-null payloads
/// (boolean columns come back as 0/1 integers).
pub fn read_rows(
    model: &Model,
    pool: &TermPool,
    tuples: &[TupleId],
    attrs: &[Ident],
    types: &[Option<ColType>],
) -> Result<Vec<Option<Row>>> {
    let get = |key: &str| -> Result<crate::solver::ModelValue> {
        model
            .bindings
            .get(key)
            .copied()
            .ok_or_else(|| Error::Solver(format!("model missing binding `{key}`")))
    };
    let mut out = Vec::with_capacity(tuples.len());
    for &t in tuples {
        let tn = pool.tuple_name(t);
        if get(&format!("d|{tn}"))?.as_bool() {
            out.push(None);
            continue;
        }
        let mut row = Vec::with_capacity(attrs.len());
        for (a, ty) in attrs.iter().zip(types) {
            let is_null = get(&format!("n|{a}|{tn}"))?.as_bool();
            if is_null {
                row.push(Value::Null);
            } else {
                let v = get(&format!("v|{a}|{tn}"))?.as_int();
                row.push(match ty {
                    Some(ColType::Bool) => Value::Bool(v != 0),
                    _ => Value::Int(v),
                });
            }
        }
        out.push(Some(row));
    }
    Ok(out)
}

/// Queries covering every base-relation tuple of the symbolic database.
pub fn database_queries(
    pool: &TermPool,
    gamma: &SymbolicDatabase,
    schema: &Schema,
) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for rs in &schema.relations {
        let tuples = gamma.tuples_of(&rs.name).unwrap_or(&[]);
        let attrs: Vec<Ident> = rs
            .attrs
            .iter()
            .map(|(a, _)| format!("{}.{}", rs.name, a))
            .collect();
        out.extend(tuple_queries(pool, tuples, &attrs));
    }
    out
}

/// Materializes the concrete database a model assigns to the symbolic one:
/// live tuples only, payloads rendered by schema type.
pub fn build_database(
    model: &Model,
    pool: &TermPool,
    gamma: &SymbolicDatabase,
    schema: &Schema,
) -> Result<Database> {
    let mut db = Database::default();
    for rs in &schema.relations {
        let tuples = gamma
            .tuples_of(&rs.name)
            .ok_or_else(|| Error::UnknownRelation(rs.name.clone()))?;
        let attrs: Vec<Ident> = rs
            .attrs
            .iter()
            .map(|(a, _)| format!("{}.{}", rs.name, a))
            .collect();
        let types: Vec<Option<ColType>> = rs.attrs.iter().map(|(_, t)| Some(*t)).collect();
        let rows: Vec<Row> = read_rows(model, pool, tuples, &attrs, &types)?
            .into_iter()
            .flatten()
            .collect();
        db.relations.insert(
            rs.name.clone(),
            Relation::new(rs.attrs.iter().map(|(a, _)| a.clone()).collect(), rows),
        );
    }
    Ok(db)
}
