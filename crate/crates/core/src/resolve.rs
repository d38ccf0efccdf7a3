//! Name resolution.
//!
//! Rewrites every attribute occurrence to a globally scoped identifier
//! (`EMP.eid`, `t.x`), expands `SELECT *` in child attribute order, desugars
//! `WITH` bindings into explicit renames so bound names qualify their columns,
//! and assigns every node a preorder [`NodeId`]. Subqueries inside membership
//! predicates are resolved against the relation scope only; a reference that
//! would only resolve against the enclosing row is reported as an unsupported
//! correlated subquery.

use crate::ast::*;
use crate::error::{Error, Result};

/// Attribute identifiers visible from one query's output.
pub type Attrs = Vec<Ident>;

struct Resolver<'a> {
    schema: &'a Schema,
    /// Innermost-last stack of relation bindings (WITH names over base
    /// relations), each with the attributes of its rows.
    rels: Vec<(String, Attrs)>,
    next_id: u32,
}

pub fn resolve(schema: &Schema, q: &Query) -> Result<Query> {
    let mut r = Resolver {
        schema,
        rels: Vec::new(),
        next_id: 0,
    };
    let (q, _attrs) = r.query(q, &[])?;
    Ok(q)
}

/// Splits a resolved identifier into (qualifier, base).
pub fn split_qual(id: &str) -> (Option<&str>, &str) {
    match id.split_once('.') {
        Some((q, b)) => (Some(q), b),
        None => (None, id),
    }
}

/// Qualifier rewrite used by the rename operator and WITH bindings:
/// `rename(T, EMP.eid)` is `T.eid`, `rename(T, x)` is `T.x`.
pub fn requalify(alias: &str, id: &str) -> Ident {
    let (_, base) = split_qual(id);
    format!("{alias}.{base}")
}

impl<'a> Resolver<'a> {
    fn fresh_id(&mut self) -> NodeId {
        let id = NodeId(self.next_id);
        self.next_id += 1;
        id
    }

    fn lookup_relation(&self, name: &str) -> Result<Attrs> {
        for (n, attrs) in self.rels.iter().rev() {
            if n == name {
                return Ok(attrs.clone());
            }
        }
        match self.schema.relation(name) {
            Some(rs) => Ok(rs
                .attrs
                .iter()
                .map(|(a, _)| format!("{}.{}", rs.name, a))
                .collect()),
            None => Err(Error::UnknownRelation(name.to_string())),
        }
    }

    /// Resolves `q`, returning the rewritten query and its output attributes.
    /// `outer` carries the attributes of the enclosing row context, used only
    /// to diagnose correlated subqueries.
    fn query(&mut self, q: &Query, outer: &[Ident]) -> Result<(Query, Attrs)> {
        let id = self.fresh_id();
        let (kind, attrs) = match &q.kind {
            QueryKind::Relation(name) => {
                let attrs = self.lookup_relation(name)?;
                (QueryKind::Relation(name.clone()), attrs)
            }
            QueryKind::Project { items, input } => {
                let (input, in_attrs) = self.query(input, outer)?;
                let items = self.expand_star(items, &in_attrs);
                let mut resolved = Vec::with_capacity(items.len());
                for item in &items {
                    resolved.push(ProjItem {
                        expr: self.expr(&item.expr, &in_attrs, outer)?,
                        alias: item.alias.clone(),
                    });
                }
                let attrs = output_names(&resolved);
                (
                    QueryKind::Project {
                        items: resolved,
                        input: Box::new(input),
                    },
                    attrs,
                )
            }
            QueryKind::Filter { pred, input } => {
                let (input, attrs) = self.query(input, outer)?;
                let pred = self.pred(pred, &attrs, outer)?;
                (
                    QueryKind::Filter {
                        pred,
                        input: Box::new(input),
                    },
                    attrs,
                )
            }
            QueryKind::Rename { alias, input } => {
                let (input, in_attrs) = self.query(input, outer)?;
                let attrs: Attrs = in_attrs.iter().map(|a| requalify(alias, a)).collect();
                (
                    QueryKind::Rename {
                        alias: alias.clone(),
                        input: Box::new(input),
                    },
                    attrs,
                )
            }
            QueryKind::Join {
                kind,
                pred,
                left,
                right,
            } => {
                let (left, la) = self.query(left, outer)?;
                let (right, ra) = self.query(right, outer)?;
                check_join_disjoint(&la, &ra)?;
                let mut attrs = la.clone();
                attrs.extend(ra.iter().cloned());
                let pred = match pred {
                    Some(p) => Some(self.pred(p, &attrs, outer)?),
                    None => None,
                };
                (
                    QueryKind::Join {
                        kind: *kind,
                        pred,
                        left: Box::new(left),
                        right: Box::new(right),
                    },
                    attrs,
                )
            }
            QueryKind::Coll { op, left, right } => {
                let (left, la) = self.query(left, outer)?;
                let (right, ra) = self.query(right, outer)?;
                if la.len() != ra.len() {
                    return Err(Error::Arity(format!(
                        "operands of {} have {} and {} columns",
                        op.keyword(),
                        la.len(),
                        ra.len()
                    )));
                }
                (
                    QueryKind::Coll {
                        op: *op,
                        left: Box::new(left),
                        right: Box::new(right),
                    },
                    la,
                )
            }
            QueryKind::Distinct(input) => {
                let (input, attrs) = self.query(input, outer)?;
                (QueryKind::Distinct(Box::new(input)), attrs)
            }
            QueryKind::GroupBy {
                keys,
                items,
                having,
                input,
            } => {
                let (input, in_attrs) = self.query(input, outer)?;
                let keys = keys
                    .iter()
                    .map(|k| self.expr(k, &in_attrs, outer))
                    .collect::<Result<Vec<_>>>()?;
                let items = self.expand_star(items, &in_attrs);
                let mut resolved = Vec::with_capacity(items.len());
                for item in &items {
                    resolved.push(ProjItem {
                        expr: self.expr(&item.expr, &in_attrs, outer)?,
                        alias: item.alias.clone(),
                    });
                }
                let having = match having {
                    Some(h) => Some(self.pred(h, &in_attrs, outer)?),
                    None => None,
                };
                let attrs = output_names(&resolved);
                (
                    QueryKind::GroupBy {
                        keys,
                        items: resolved,
                        having,
                        input: Box::new(input),
                    },
                    attrs,
                )
            }
            QueryKind::With { bindings, body } => {
                let mut resolved_bindings = Vec::with_capacity(bindings.len());
                let depth = self.rels.len();
                for (name, bq) in bindings {
                    if self.rels[depth..].iter().any(|(n, _)| n == name) {
                        self.rels.truncate(depth);
                        return Err(Error::DuplicateAlias(name.clone()));
                    }
                    // Bind the name around a rename so columns of the bound
                    // query are addressable as `name.column`.
                    let wrapped = Query::new(QueryKind::Rename {
                        alias: name.clone(),
                        input: Box::new(bq.clone()),
                    });
                    let (rq, rattrs) = match self.query(&wrapped, outer) {
                        Ok(v) => v,
                        Err(e) => {
                            self.rels.truncate(depth);
                            return Err(e);
                        }
                    };
                    self.rels.push((name.clone(), rattrs));
                    resolved_bindings.push((name.clone(), rq));
                }
                let body = self.query(body, outer);
                self.rels.truncate(depth);
                let (body, attrs) = body?;
                (
                    QueryKind::With {
                        bindings: resolved_bindings,
                        body: Box::new(body),
                    },
                    attrs,
                )
            }
            QueryKind::OrderBy { keys, asc, input } => {
                let (input, attrs) = self.query(input, outer)?;
                // Sort keys resolve against the output attributes; an
                // aggregate call like AVG(sal) names the derived column.
                let keys = keys
                    .iter()
                    .map(|k| self.order_key(k, &attrs, outer))
                    .collect::<Result<Vec<_>>>()?;
                (
                    QueryKind::OrderBy {
                        keys,
                        asc: *asc,
                        input: Box::new(input),
                    },
                    attrs,
                )
            }
        };
        Ok((Query { id, kind }, attrs))
    }

    fn expand_star(&self, items: &[ProjItem], in_attrs: &[Ident]) -> Vec<ProjItem> {
        if items.len() == 1
            && items[0].alias.is_none()
            && matches!(&items[0].expr, Expr::Column(c) if c == "*")
        {
            return in_attrs
                .iter()
                .map(|a| ProjItem {
                    expr: Expr::Column(a.clone()),
                    alias: Some(a.clone()),
                })
                .collect();
        }
        items.to_vec()
    }

    fn column(&self, name: &str, attrs: &[Ident], outer: &[Ident]) -> Result<Ident> {
        let matches: Vec<&Ident> = attrs
            .iter()
            .filter(|id| {
                if name.contains('.') {
                    id.as_str() == name
                } else {
                    let (_, base) = split_qual(id);
                    base == name || id.as_str() == name
                }
            })
            .collect();
        match matches.len() {
            1 => Ok(matches[0].clone()),
            0 => {
                // Would the name resolve in the enclosing row scope? Then the
                // query is correlated, which is outside the fragment.
                let in_outer = outer.iter().any(|id| {
                    if name.contains('.') {
                        id.as_str() == name
                    } else {
                        let (_, base) = split_qual(id);
                        base == name || id.as_str() == name
                    }
                });
                if in_outer {
                    Err(Error::unsupported_at("correlated-subquery", name))
                } else {
                    Err(Error::UnknownAttribute(name.to_string()))
                }
            }
            _ => Err(Error::AmbiguousColumn(name.to_string())),
        }
    }

    fn expr(&mut self, e: &Expr, attrs: &[Ident], outer: &[Ident]) -> Result<Expr> {
        Ok(match e {
            Expr::Column(c) => Expr::Column(self.column(c, attrs, outer)?),
            Expr::Lit(v) => Expr::Lit(*v),
            Expr::Arith { op, left, right } => Expr::Arith {
                op: *op,
                left: Box::new(self.expr(left, attrs, outer)?),
                right: Box::new(self.expr(right, attrs, outer)?),
            },
            Expr::Ite {
                cond,
                then_value,
                else_value,
            } => Expr::Ite {
                cond: Box::new(self.pred(cond, attrs, outer)?),
                then_value: Box::new(self.expr(then_value, attrs, outer)?),
                else_value: Box::new(self.expr(else_value, attrs, outer)?),
            },
            Expr::Case { arms, default } => Expr::Case {
                arms: arms
                    .iter()
                    .map(|(p, v)| {
                        Ok((self.pred(p, attrs, outer)?, self.expr(v, attrs, outer)?))
                    })
                    .collect::<Result<Vec<_>>>()?,
                default: Box::new(self.expr(default, attrs, outer)?),
            },
            Expr::Agg { func, arg } => Expr::Agg {
                func: *func,
                arg: Box::new(self.expr(arg, attrs, outer)?),
            },
            Expr::Cast(p) => Expr::Cast(Box::new(self.pred(p, attrs, outer)?)),
        })
    }

    fn pred(&mut self, p: &Pred, attrs: &[Ident], outer: &[Ident]) -> Result<Pred> {
        Ok(match p {
            Pred::Lit(b) => Pred::Lit(*b),
            Pred::Cmp { op, left, right } => Pred::Cmp {
                op: *op,
                left: Box::new(self.expr(left, attrs, outer)?),
                right: Box::new(self.expr(right, attrs, outer)?),
            },
            Pred::IsNull(e) => Pred::IsNull(Box::new(self.expr(e, attrs, outer)?)),
            Pred::InList { exprs, rows } => {
                for row in rows {
                    if row.len() != exprs.len() {
                        return Err(Error::Arity(format!(
                            "IN list row has {} values, expected {}",
                            row.len(),
                            exprs.len()
                        )));
                    }
                }
                Pred::InList {
                    exprs: exprs
                        .iter()
                        .map(|e| self.expr(e, attrs, outer))
                        .collect::<Result<Vec<_>>>()?,
                    rows: rows.clone(),
                }
            }
            Pred::InQuery { exprs, query } => {
                // The subquery sees relation bindings but not the enclosing
                // row; passing the row attributes as `outer` lets resolution
                // distinguish correlation from a genuinely unknown name.
                let (q, q_attrs) = self.query(query, attrs)?;
                if q_attrs.len() != exprs.len() {
                    return Err(Error::Arity(format!(
                        "IN subquery has {} columns, expected {}",
                        q_attrs.len(),
                        exprs.len()
                    )));
                }
                Pred::InQuery {
                    exprs: exprs
                        .iter()
                        .map(|e| self.expr(e, attrs, outer))
                        .collect::<Result<Vec<_>>>()?,
                    query: Box::new(q),
                }
            }
            Pred::And(a, b) => Pred::And(
                Box::new(self.pred(a, attrs, outer)?),
                Box::new(self.pred(b, attrs, outer)?),
            ),
            Pred::Or(a, b) => Pred::Or(
                Box::new(self.pred(a, attrs, outer)?),
                Box::new(self.pred(b, attrs, outer)?),
            ),
            Pred::Not(p) => Pred::Not(Box::new(self.pred(p, attrs, outer)?)),
        })
    }

    fn order_key(&mut self, k: &Expr, out_attrs: &[Ident], outer: &[Ident]) -> Result<Expr> {
        // First try the key as written (a column of the output); fall back on
        // the derived name of an aggregate expression like AVG(sal).
        match k {
            Expr::Column(_) => self.expr(k, out_attrs, outer),
            Expr::Agg { .. } => {
                let derived = derived_name(k);
                Ok(Expr::Column(self.column(&derived, out_attrs, outer)?))
            }
            other => self.expr(other, out_attrs, outer),
        }
    }
}

/// Output attribute names of a projection: alias or derived name, deduplicated
/// with a positional suffix.
pub(crate) fn output_names(items: &[ProjItem]) -> Attrs {
    let mut names: Vec<String> = Vec::with_capacity(items.len());
    for item in items {
        let base = item.output_name();
        let mut name = base.clone();
        let mut k = 2;
        while names.contains(&name) {
            name = format!("{base}_{k}");
            k += 1;
        }
        names.push(name);
    }
    names
}

fn check_join_disjoint(left: &[Ident], right: &[Ident]) -> Result<()> {
    for r in right {
        if left.contains(r) {
            return Err(Error::DuplicateAlias(r.clone()));
        }
    }
    let lq: Vec<&str> = left.iter().filter_map(|a| split_qual(a).0).collect();
    for r in right {
        if let (Some(q), _) = split_qual(r) {
            if lq.contains(&q) {
                return Err(Error::DuplicateAlias(q.to_string()));
            }
        }
    }
    Ok(())
}
