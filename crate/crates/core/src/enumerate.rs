//! Brute-force enumeration of small concrete databases.
//!
//! Yields every schema-conforming database with at most `max_rows` tuples per
//! relation over a finite value domain, filtered by the integrity
//! constraints, in a deterministic order. Serves as the independent oracle
//! for differential tests against the symbolic verifier.

use crate::ast::{ColType, ConstraintSet, Schema};
use crate::constraints::check_constraints;
use crate::error::{Error, Result};
use crate::eval::{Database, Relation, Row};
use crate::value::Value;

#[derive(Debug, Clone)]
pub struct EnumOpts {
    pub max_rows: usize,
    pub domain: Vec<Value>,
    /// Upper bound on candidate databases generated (pre-filter); exceeding
    /// it yields an explicit `Exhausted` error item.
    pub cap: usize,
}

impl Default for EnumOpts {
    fn default() -> Self {
        EnumOpts {
            max_rows: 2,
            domain: vec![Value::Null, Value::Int(0), Value::Int(1), Value::Int(2)],
            cap: 2_000_000,
        }
    }
}

/// All row lists of length 0..=max over the per-column domains, shortest
/// first, lexicographic within a length.
fn relation_candidates(domains: &[Vec<Value>], max: usize) -> Vec<Vec<Row>> {
    let mut rows: Vec<Row> = vec![vec![]];
    for d in domains {
        let mut next = Vec::with_capacity(rows.len() * d.len());
        for r in &rows {
            for v in d {
                let mut r2 = r.clone();
                r2.push(*v);
                next.push(r2);
            }
        }
        rows = next;
    }
    let mut lists: Vec<Vec<Row>> = vec![vec![]];
    let mut level: Vec<Vec<Row>> = vec![vec![]];
    for _ in 0..max {
        let mut next_level = Vec::new();
        for l in &level {
            for r in &rows {
                let mut l2 = l.clone();
                l2.push(r.clone());
                next_level.push(l2);
            }
        }
        lists.extend(next_level.iter().cloned());
        level = next_level;
    }
    lists
}

pub struct DatabaseIter {
    schema: Schema,
    cons: ConstraintSet,
    /// Per-relation candidate row lists.
    candidates: Vec<Vec<Vec<Row>>>,
    /// Odometer over the candidate lists.
    idx: Vec<usize>,
    done: bool,
    produced: usize,
    cap: usize,
}

pub fn enumerate_databases(
    schema: &Schema,
    cons: &ConstraintSet,
    opts: &EnumOpts,
) -> DatabaseIter {
    let candidates = schema
        .relations
        .iter()
        .map(|rs| {
            let domains: Vec<Vec<Value>> = rs
                .attrs
                .iter()
                .map(|(_, ty)| per_column_domain(*ty, &opts.domain))
                .collect();
            relation_candidates(&domains, opts.max_rows)
        })
        .collect::<Vec<_>>();
    DatabaseIter {
        schema: schema.clone(),
        cons: cons.clone(),
        idx: vec![0; candidates.len()],
        candidates,
        done: false,
        produced: 0,
        cap: opts.cap,
    }
}

fn per_column_domain(ty: ColType, domain: &[Value]) -> Vec<Value> {
    match ty {
        ColType::Int => domain
            .iter()
            .filter(|v| matches!(v, Value::Int(_) | Value::Null))
            .copied()
            .collect(),
        ColType::Bool => {
            let mut d = Vec::new();
            if domain.contains(&Value::Null) {
                d.push(Value::Null);
            }
            d.push(Value::Bool(false));
            d.push(Value::Bool(true));
            d
        }
    }
}

impl Iterator for DatabaseIter {
    type Item = Result<Database>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if self.done {
                return None;
            }
            if self.produced >= self.cap {
                self.done = true;
                return Some(Err(Error::Exhausted(self.cap)));
            }
            self.produced += 1;

            let mut db = Database::default();
            for (k, rs) in self.schema.relations.iter().enumerate() {
                let rows = self.candidates[k][self.idx[k]].clone();
                db.relations.insert(
                    rs.name.clone(),
                    Relation::new(rs.attrs.iter().map(|(a, _)| a.clone()).collect(), rows),
                );
            }

            // Advance the odometer.
            let mut i = self.idx.len();
            loop {
                if i == 0 {
                    self.done = true;
                    break;
                }
                i -= 1;
                self.idx[i] += 1;
                if self.idx[i] < self.candidates[i].len() {
                    break;
                }
                self.idx[i] = 0;
            }
            if self.idx.is_empty() {
                self.done = true;
            }

            if check_constraints(&db, &self.cons) {
                return Some(Ok(db));
            }
        }
    }
}
