//! Attribute and symbolic-tuple inference.
//!
//! Two annotation passes over a resolved query: the attribute list of every
//! node (the typing-style rules) and the symbolic tuple list of every node
//! (worst-case output capacities, with fresh tuples named deterministically
//! as `<prefix>_t<node>_<index>` in traversal order). Membership subqueries
//! inside predicates are annotated as well.

use crate::ast::*;
use crate::error::{Error, Result};
use crate::formula::{TermPool, TupleId};
use crate::resolve::{output_names, requalify};
use crate::symdb::SymbolicDatabase;
use std::collections::HashMap;

#[derive(Debug, Default, Clone)]
pub struct AttrMap(pub HashMap<NodeId, Vec<Ident>>);

#[derive(Debug, Default, Clone)]
pub struct TupleMap(pub HashMap<NodeId, Vec<TupleId>>);

impl AttrMap {
    pub fn of(&self, q: &Query) -> &[Ident] {
        &self.0[&q.id]
    }
}

impl TupleMap {
    pub fn of(&self, q: &Query) -> &[TupleId] {
        &self.0[&q.id]
    }
}

/// Computes the attribute list of every node.
pub fn infer_attributes(schema: &Schema, q: &Query) -> Result<AttrMap> {
    let mut map = AttrMap::default();
    let mut env: Vec<(String, Vec<Ident>)> = Vec::new();
    attrs_of(schema, q, &mut env, &mut map)?;
    Ok(map)
}

fn attrs_of(
    schema: &Schema,
    q: &Query,
    env: &mut Vec<(String, Vec<Ident>)>,
    map: &mut AttrMap,
) -> Result<Vec<Ident>> {
    let attrs = match &q.kind {
        QueryKind::Relation(name) => {
            let found = env.iter().rev().find(|(n, _)| n == name).map(|(_, a)| a.clone());
            match found {
                Some(a) => a,
                None => {
                    let rs = schema
                        .relation(name)
                        .ok_or_else(|| Error::UnknownRelation(name.clone()))?;
                    rs.attrs
                        .iter()
                        .map(|(a, _)| format!("{}.{}", rs.name, a))
                        .collect()
                }
            }
        }
        QueryKind::Project { items, input } | QueryKind::GroupBy { items, input, .. } => {
            let child = attrs_of(schema, input, env, map)?;
            for item in items {
                let mut cols = Vec::new();
                item.expr.all_columns(&mut cols);
                for c in cols {
                    if !child.contains(&c) {
                        return Err(Error::UnknownAttribute(c));
                    }
                }
            }
            if let QueryKind::GroupBy { keys, having, .. } = &q.kind {
                for k in keys {
                    let mut cols = Vec::new();
                    k.all_columns(&mut cols);
                    for c in cols {
                        if !child.contains(&c) {
                            return Err(Error::UnknownAttribute(c));
                        }
                    }
                }
                if let Some(h) = having {
                    annotate_pred_subqueries(schema, h, env, map)?;
                }
            }
            output_names(items)
        }
        QueryKind::Filter { pred, input } => {
            annotate_pred_subqueries(schema, pred, env, map)?;
            attrs_of(schema, input, env, map)?
        }
        QueryKind::Rename { alias, input } => attrs_of(schema, input, env, map)?
            .iter()
            .map(|a| requalify(alias, a))
            .collect(),
        QueryKind::Join {
            pred, left, right, ..
        } => {
            let mut a = attrs_of(schema, left, env, map)?;
            let b = attrs_of(schema, right, env, map)?;
            a.extend(b);
            if let Some(p) = pred {
                annotate_pred_subqueries(schema, p, env, map)?;
            }
            a
        }
        QueryKind::Coll { op, left, right } => {
            let a = attrs_of(schema, left, env, map)?;
            let b = attrs_of(schema, right, env, map)?;
            if a.len() != b.len() {
                return Err(Error::Arity(format!(
                    "operands of {} have {} and {} columns",
                    op.keyword(),
                    a.len(),
                    b.len()
                )));
            }
            a
        }
        QueryKind::Distinct(input) => attrs_of(schema, input, env, map)?,
        QueryKind::With { bindings, body } => {
            let depth = env.len();
            for (name, bq) in bindings {
                let a = match attrs_of(schema, bq, env, map) {
                    Ok(a) => a,
                    Err(e) => {
                        env.truncate(depth);
                        return Err(e);
                    }
                };
                env.push((name.clone(), a));
            }
            let out = attrs_of(schema, body, env, map);
            env.truncate(depth);
            out?
        }
        QueryKind::OrderBy { input, .. } => attrs_of(schema, input, env, map)?,
    };
    map.0.insert(q.id, attrs.clone());
    Ok(attrs)
}

fn annotate_pred_subqueries(
    schema: &Schema,
    p: &Pred,
    env: &mut Vec<(String, Vec<Ident>)>,
    map: &mut AttrMap,
) -> Result<()> {
    match p {
        Pred::InQuery { query, .. } => {
            attrs_of(schema, query, env, map)?;
            Ok(())
        }
        Pred::And(a, b) | Pred::Or(a, b) => {
            annotate_pred_subqueries(schema, a, env, map)?;
            annotate_pred_subqueries(schema, b, env, map)
        }
        Pred::Not(p) => annotate_pred_subqueries(schema, p, env, map),
        _ => Ok(()),
    }
}

/// Computes the symbolic tuple list of every node: base relations read the
/// symbolic database, everything else gets fresh tuples per its capacity
/// rule. `prefix` keeps names of the two verified queries apart.
pub fn infer_tuples(
    pool: &mut TermPool,
    gamma: &SymbolicDatabase,
    q: &Query,
    prefix: &str,
) -> Result<TupleMap> {
    let mut map = TupleMap::default();
    let mut env: Vec<(String, Vec<TupleId>)> = Vec::new();
    let mut inf = TupleInf {
        pool,
        gamma,
        prefix,
    };
    inf.tuples_of(q, &mut env, &mut map)?;
    Ok(map)
}

struct TupleInf<'a> {
    pool: &'a mut TermPool,
    gamma: &'a SymbolicDatabase,
    prefix: &'a str,
}

impl<'a> TupleInf<'a> {
    fn fresh(&mut self, node: NodeId, n: usize) -> Vec<TupleId> {
        (1..=n)
            .map(|i| {
                self.pool
                    .new_tuple(format!("{}_t{}_{}", self.prefix, node.0, i))
            })
            .collect()
    }

    fn tuples_of(
        &mut self,
        q: &Query,
        env: &mut Vec<(String, Vec<TupleId>)>,
        map: &mut TupleMap,
    ) -> Result<Vec<TupleId>> {
        let out = match &q.kind {
            QueryKind::Relation(name) => {
                let found = env.iter().rev().find(|(n, _)| n == name).map(|(_, t)| t.clone());
                match found {
                    Some(t) => t,
                    None => self
                        .gamma
                        .tuples_of(name)
                        .ok_or_else(|| Error::UnknownRelation(name.clone()))?
                        .to_vec(),
                }
            }
            QueryKind::Project { items, input } => {
                let n = self.tuples_of(input, env, map)?.len();
                let has_agg = items.iter().any(|i| i.expr.has_agg());
                self.fresh(q.id, if has_agg { 1 } else { n })
            }
            QueryKind::Filter { pred, input } => {
                self.pred_subqueries(pred, env, map)?;
                let n = self.tuples_of(input, env, map)?.len();
                self.fresh(q.id, n)
            }
            QueryKind::Rename { input, .. } => {
                let n = self.tuples_of(input, env, map)?.len();
                self.fresh(q.id, n)
            }
            QueryKind::Join {
                kind, pred, left, right,
            } => {
                let n = self.tuples_of(left, env, map)?.len();
                let m = self.tuples_of(right, env, map)?.len();
                if let Some(p) = pred {
                    self.pred_subqueries(p, env, map)?;
                }
                // Inner block first; a right-extension row block, then a
                // left-extension column block.
                let count = match kind {
                    JoinKind::Product | JoinKind::Inner => n * m,
                    JoinKind::Left => n * m + n,
                    JoinKind::Right => n * m + m,
                    JoinKind::Full => n * m + m + n,
                };
                self.fresh(q.id, count)
            }
            QueryKind::Coll { op, left, right } => {
                let n = self.tuples_of(left, env, map)?.len();
                let m = self.tuples_of(right, env, map)?.len();
                let count = match op {
                    CollOp::Union | CollOp::UnionAll => n + m,
                    CollOp::Intersect
                    | CollOp::IntersectAll
                    | CollOp::Except
                    | CollOp::ExceptAll => n,
                };
                self.fresh(q.id, count)
            }
            QueryKind::Distinct(input) => {
                let n = self.tuples_of(input, env, map)?.len();
                self.fresh(q.id, n)
            }
            QueryKind::GroupBy { having, input, .. } => {
                let n = self.tuples_of(input, env, map)?.len();
                if let Some(h) = having {
                    self.pred_subqueries(h, env, map)?;
                }
                self.fresh(q.id, n)
            }
            QueryKind::With { bindings, body } => {
                let depth = env.len();
                for (name, bq) in bindings {
                    let t = match self.tuples_of(bq, env, map) {
                        Ok(t) => t,
                        Err(e) => {
                            env.truncate(depth);
                            return Err(e);
                        }
                    };
                    env.push((name.clone(), t));
                }
                let out = self.tuples_of(body, env, map);
                env.truncate(depth);
                out?
            }
            QueryKind::OrderBy { input, .. } => {
                let n = self.tuples_of(input, env, map)?.len();
                self.fresh(q.id, n)
            }
        };
        map.0.insert(q.id, out.clone());
        Ok(out)
    }

    fn pred_subqueries(
        &mut self,
        p: &Pred,
        env: &mut Vec<(String, Vec<TupleId>)>,
        map: &mut TupleMap,
    ) -> Result<()> {
        match p {
            Pred::InQuery { query, .. } => {
                self.tuples_of(query, env, map)?;
                Ok(())
            }
            Pred::And(a, b) | Pred::Or(a, b) => {
                self.pred_subqueries(a, env, map)?;
                self.pred_subqueries(b, env, map)
            }
            Pred::Not(p) => self.pred_subqueries(p, env, map),
            _ => Ok(()),
        }
    }
}


#[cfg(test)]
mod uneven_tests {
    use super::*;
    use crate::parser::{parse_sql, Interner};
    use crate::resolve::resolve;
    use crate::symdb::SymbolicDatabase;

    #[test]
    fn left_join_count_with_uneven_sides() {
        // |T1| = 2 and |T2| = 3 give 2 * (3 + 1) = 8 fresh tuples.
        let schema = Schema {
            relations: vec![
                RelationSchema {
                    name: "R".into(),
                    attrs: vec![("a".into(), ColType::Int)],
                },
                RelationSchema {
                    name: "S".into(),
                    attrs: vec![("c".into(), ColType::Int)],
                },
            ],
        };
        let mut i = Interner::default();
        let q = parse_sql("SELECT * FROM R LEFT JOIN S ON a = c", &mut i).unwrap();
        let q = resolve(&schema, &q).unwrap();
        let mut pool = TermPool::new();
        let gamma = SymbolicDatabase {
            relations: vec![
                (
                    "R".into(),
                    (0..2).map(|k| pool.new_tuple(format!("t_R_{k}"))).collect(),
                ),
                (
                    "S".into(),
                    (0..3).map(|k| pool.new_tuple(format!("t_S_{k}"))).collect(),
                ),
            ],
            bound: 3,
        };
        let tuples = infer_tuples(&mut pool, &gamma, &q, "q1").unwrap();
        let QueryKind::Project { input, .. } = &q.kind else {
            panic!();
        };
        assert_eq!(tuples.of(input).len(), 8);
    }

    #[test]
    fn with_binding_attrs_renamed_then_projected() {
        let schema = Schema {
            relations: vec![RelationSchema {
                name: "R".into(),
                attrs: vec![("x".into(), ColType::Int), ("y".into(), ColType::Int)],
            }],
        };
        let mut i = Interner::default();
        let q = parse_sql("WITH T AS (SELECT x FROM R) SELECT T.x FROM T", &mut i).unwrap();
        let q = resolve(&schema, &q).unwrap();
        let attrs = infer_attributes(&schema, &q).unwrap();
        // The binding's columns are addressable as T.x; projecting yields
        // the unqualified output name.
        let QueryKind::With { body, .. } = &q.kind else {
            panic!();
        };
        let QueryKind::Project { items, input } = &body.kind else {
            panic!();
        };
        assert_eq!(items[0].expr, Expr::Column("T.x".into()));
        assert_eq!(attrs.of(input), &["T.x"]);
        assert_eq!(attrs.of(&q), &["x"]);
    }
}

/// Debug rendering of both annotation passes: per node id, the attribute
/// list and the symbolic tuple names.
pub fn annotations_json(
    pool: &TermPool,
    attrs: &AttrMap,
    tuples: &TupleMap,
) -> serde_json::Value {
    let mut nodes = serde_json::Map::new();
    let mut ids: Vec<&NodeId> = attrs.0.keys().collect();
    ids.sort();
    for id in ids {
        let mut node = serde_json::Map::new();
        node.insert(
            "attrs".into(),
            serde_json::Value::from(attrs.0[id].clone()),
        );
        if let Some(ts) = tuples.0.get(id) {
            node.insert(
                "tuples".into(),
                serde_json::Value::from(
                    ts.iter().map(|t| pool.tuple_name(*t).to_string()).collect::<Vec<_>>(),
                ),
            );
            node.insert("tuple_count".into(), serde_json::Value::from(ts.len()));
        }
        nodes.insert(format!("n{}", id.0), serde_json::Value::Object(node));
    }
    serde_json::Value::Object(nodes)
}
