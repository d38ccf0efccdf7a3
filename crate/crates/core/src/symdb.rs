//! Symbolic database: N uninterpreted tuples per relation, each with an
//! unconstrained deletion flag, so the initial state covers every database
//! where relations hold at most N rows.

use crate::ast::Schema;
use crate::error::{Error, Result};
use crate::eval::Database;
use crate::formula::{TermId, TermPool, TupleId};
use crate::value::Value;

#[derive(Debug, Clone)]
pub struct SymbolicDatabase {
    /// Relation name and its symbolic tuples, in schema order; WITH bindings
    /// extend this during encoding.
    pub relations: Vec<(String, Vec<TupleId>)>,
    pub bound: usize,
}

impl SymbolicDatabase {
    pub fn tuples_of(&self, rel: &str) -> Option<&[TupleId]> {
        self.relations
            .iter()
            .rev()
            .find(|(n, _)| n == rel)
            .map(|(_, ts)| ts.as_slice())
    }

    pub fn total_tuples(&self) -> usize {
        self.relations.iter().map(|(_, ts)| ts.len()).sum()
    }
}

/// Allocates N fresh tuples per schema relation and declares the attribute
/// functions. Fails on a non-positive bound.
pub fn build_symbolic_db(pool: &mut TermPool, schema: &Schema, n: usize) -> Result<SymbolicDatabase> {
    if n == 0 {
        return Err(Error::Internal("bound must be at least 1".into()));
    }
    let mut relations = Vec::with_capacity(schema.relations.len());
    for rs in &schema.relations {
        let tuples = (1..=n)
            .map(|i| pool.new_tuple(format!("t_{}_{}", rs.name, i)))
            .collect::<Vec<_>>();
        for (a, _) in &rs.attrs {
            pool.attr(&format!("{}.{}", rs.name, a));
        }
        relations.push((rs.name.clone(), tuples));
    }
    Ok(SymbolicDatabase {
        relations,
        bound: n,
    })
}

/// Conjunction fixing the symbolic database to one concrete database: the
/// first `k` tuples of each relation carry the rows (null flags and, for
/// non-null values, payloads), the rest are deleted. Null payloads stay
/// unconstrained so that distinct Null representations remain equal.
pub fn pin_database(
    pool: &mut TermPool,
    gamma: &SymbolicDatabase,
    schema: &Schema,
    db: &Database,
) -> Result<TermId> {
    let mut parts = Vec::new();
    for rs in &schema.relations {
        let tuples = gamma
            .tuples_of(&rs.name)
            .ok_or_else(|| Error::UnknownRelation(rs.name.clone()))?
            .to_vec();
        let rel = db
            .relations
            .get(&rs.name)
            .ok_or_else(|| Error::UnknownRelation(rs.name.clone()))?;
        if rel.rows.len() > tuples.len() {
            return Err(Error::Internal(format!(
                "database relation `{}` has {} rows, bound is {}",
                rs.name,
                rel.rows.len(),
                tuples.len()
            )));
        }
        for (i, &t) in tuples.iter().enumerate() {
            match rel.rows.get(i) {
                Some(row) => {
                    parts.push(pool.live(t));
                    for ((aname, _), v) in rs.attrs.iter().zip(row) {
                        let attr = pool.attr(&format!("{}.{}", rs.name, aname));
                        let nflag = pool.attr_null(attr, t);
                        match v {
                            Value::Null => parts.push(nflag),
                            Value::Int(x) => {
                                let nn = pool.not(nflag);
                                parts.push(nn);
                                let val = pool.attr_val(attr, t);
                                let c = pool.int(*x);
                                parts.push(pool.eq_int(val, c));
                            }
                            Value::Bool(b) => {
                                let nn = pool.not(nflag);
                                parts.push(nn);
                                let val = pool.attr_val(attr, t);
                                let c = pool.int(*b as i64);
                                parts.push(pool.eq_int(val, c));
                            }
                        }
                    }
                }
                None => {
                    parts.push(pool.del(t));
                }
            }
        }
    }
    Ok(pool.and(parts))
}
