//! Symbolic encoding of integrity constraints and query operators.
//!
//! Every symbolic value is a (null flag, integer payload) pair of
//! uninterpreted-function applications; all null values are equal. Each
//! operator relates its input tuples to fresh output tuples through `Del`
//! flags and attribute copies. Predicates encode to a three-valued pair of
//! boolean terms (is-true, is-null); filters retain rows whose predicate is
//! exactly true.

use crate::ast::*;
use crate::error::{Error, Result};
use crate::formula::{AtomId, TermId, TermPool, TupleId};
use crate::infer::{AttrMap, TupleMap};
use crate::symdb::SymbolicDatabase;
use crate::value::Value;
use std::collections::HashSet;

/// Symbolic value: (is-null flag, integer payload).
#[derive(Debug, Clone, Copy)]
pub struct SymVal {
    pub null: TermId,
    pub val: TermId,
}

/// Three-valued predicate term: invariant `is_true` and `is_null` are never
/// both true.
#[derive(Debug, Clone, Copy)]
pub struct TriTerm {
    pub is_true: TermId,
    pub is_null: TermId,
}

impl TriTerm {
    fn truth(pool: &mut TermPool, b: bool) -> TriTerm {
        TriTerm {
            is_true: pool.boolean(b),
            is_null: pool.fls(),
        }
    }

    fn null(pool: &mut TermPool) -> TriTerm {
        TriTerm {
            is_true: pool.fls(),
            is_null: pool.tru(),
        }
    }

    fn is_false(self, pool: &mut TermPool) -> TermId {
        let t_or_n = pool.or2(self.is_true, self.is_null);
        pool.not(t_or_n)
    }
}

pub fn tri_and(pool: &mut TermPool, a: TriTerm, b: TriTerm) -> TriTerm {
    let is_true = pool.and2(a.is_true, b.is_true);
    let nn = pool.and2(a.is_null, b.is_null);
    let nt = pool.and2(a.is_null, b.is_true);
    let tn = pool.and2(a.is_true, b.is_null);
    let is_null = pool.or([nn, nt, tn]);
    TriTerm { is_true, is_null }
}

pub fn tri_or(pool: &mut TermPool, a: TriTerm, b: TriTerm) -> TriTerm {
    let is_true = pool.or2(a.is_true, b.is_true);
    let af = a.is_false(pool);
    let bf = b.is_false(pool);
    let nn = pool.and2(a.is_null, b.is_null);
    let nf = pool.and2(a.is_null, bf);
    let fn_ = pool.and2(af, b.is_null);
    let is_null = pool.or([nn, nf, fn_]);
    TriTerm { is_true, is_null }
}

pub fn tri_not(pool: &mut TermPool, a: TriTerm) -> TriTerm {
    TriTerm {
        is_true: a.is_false(pool),
        is_null: a.is_null,
    }
}

/// Symbolic value equality: both null, or both non-null with equal payloads.
pub fn val_eq(pool: &mut TermPool, a: SymVal, b: SymVal) -> TermId {
    let both_null = pool.and2(a.null, b.null);
    let an = pool.not(a.null);
    let bn = pool.not(b.null);
    let veq = pool.eq_int(a.val, b.val);
    let non_null_eq = pool.and([an, bn, veq]);
    pool.or2(both_null, non_null_eq)
}

// ---------------------------------------------------------------------------
// Integrity constraints (the IC- rules)
// ---------------------------------------------------------------------------

pub fn encode_constraints(
    pool: &mut TermPool,
    gamma: &SymbolicDatabase,
    schema: &Schema,
    cons: &ConstraintSet,
) -> Result<TermId> {
    let mut parts = Vec::new();
    for c in &cons.0 {
        parts.push(encode_one_constraint(pool, gamma, schema, c)?);
    }
    Ok(pool.and(parts))
}

fn base_attr(pool: &mut TermPool, rel: &str, attr: &str, t: TupleId) -> SymVal {
    let a = pool.attr(&format!("{rel}.{attr}"));
    SymVal {
        null: pool.attr_null(a, t),
        val: pool.attr_val(a, t),
    }
}

fn encode_one_constraint(
    pool: &mut TermPool,
    gamma: &SymbolicDatabase,
    _schema: &Schema,
    c: &Constraint,
) -> Result<TermId> {
    let tuples = |rel: &str| -> Result<Vec<TupleId>> {
        gamma
            .tuples_of(rel)
            .map(|t| t.to_vec())
            .ok_or_else(|| Error::UnknownRelation(rel.to_string()))
    };
    match c {
        Constraint::PrimaryKey { rel, attrs } => {
            let ts = tuples(rel)?;
            let mut parts = Vec::new();
            // Key attributes are non-null on every tuple.
            for &t in &ts {
                for a in attrs {
                    let sv = base_attr(pool, rel, a, t);
                    parts.push(pool.not(sv.null));
                }
            }
            // No two tuples agree on the whole key.
            for i in 0..ts.len() {
                for j in (i + 1)..ts.len() {
                    let eqs: Vec<TermId> = attrs
                        .iter()
                        .map(|a| {
                            let x = base_attr(pool, rel, a, ts[i]);
                            let y = base_attr(pool, rel, a, ts[j]);
                            pool.eq_int(x.val, y.val)
                        })
                        .collect();
                    let all_eq = pool.and(eqs);
                    parts.push(pool.not(all_eq));
                }
            }
            Ok(pool.and(parts))
        }
        Constraint::ForeignKey {
            rel,
            attr,
            ref_rel,
            ref_attr,
        } => {
            // Only live rows must reference, and only live rows can be
            // referenced; otherwise a deleted tuple's unconstrained payload
            // could witness the reference.
            let ts = tuples(rel)?;
            let rs = tuples(ref_rel)?;
            let mut parts = Vec::new();
            for &t in &ts {
                let x = base_attr(pool, rel, attr, t);
                let alts: Vec<TermId> = rs
                    .iter()
                    .map(|&u| {
                        let y = base_attr(pool, ref_rel, ref_attr, u);
                        let eq = val_eq(pool, x, y);
                        let live = pool.live(u);
                        pool.and2(live, eq)
                    })
                    .collect();
                let any = pool.or(alts);
                let live_t = pool.live(t);
                parts.push(pool.implies(live_t, any));
            }
            Ok(pool.and(parts))
        }
        Constraint::NotNull { rel, attr } => {
            let ts = tuples(rel)?;
            let mut parts = Vec::new();
            for &t in &ts {
                let sv = base_attr(pool, rel, attr, t);
                parts.push(pool.not(sv.null));
            }
            Ok(pool.and(parts))
        }
        Constraint::Check { rel, pred } => {
            // Guarded on liveness: a check that no single row can satisfy
            // still admits the empty relation.
            let ts = tuples(rel)?;
            let mut parts = Vec::new();
            for &t in &ts {
                let p = encode_check_pred(pool, rel, pred, t);
                let live = pool.live(t);
                parts.push(pool.implies(live, p));
            }
            Ok(pool.and(parts))
        }
        Constraint::AutoInc { rel, attr, start } => {
            // Live rows must form a prefix of the tuple list; a deletion
            // hole would otherwise let non-consecutive values pose as a
            // valid sequence.
            let ts = tuples(rel)?;
            let mut parts = Vec::new();
            for (i, &t) in ts.iter().enumerate() {
                let sv = base_attr(pool, rel, attr, t);
                let live = pool.live(t);
                let nn = pool.not(sv.null);
                parts.push(pool.implies(live, nn));
                let expect = pool.int(start + i as i64);
                let eq = pool.eq_int(sv.val, expect);
                parts.push(pool.implies(live, eq));
                if i + 1 < ts.len() {
                    let next_live = pool.live(ts[i + 1]);
                    parts.push(pool.implies(next_live, live));
                }
            }
            Ok(pool.and(parts))
        }
    }
}

fn const_int(v: &Value) -> i64 {
    match v {
        Value::Int(i) => *i,
        Value::Bool(b) => *b as i64,
        Value::Null => 0,
    }
}

fn encode_check_pred(pool: &mut TermPool, rel: &str, pred: &CheckPred, t: TupleId) -> TermId {
    match pred {
        CheckPred::CmpConst { attr, op, value } => {
            let sv = base_attr(pool, rel, attr, t);
            let nn = pool.not(sv.null);
            let c = pool.int(const_int(value));
            let cmp = int_cmp(pool, *op, sv.val, c);
            pool.and2(nn, cmp)
        }
        CheckPred::CmpAttr { left, op, right } => {
            let a = base_attr(pool, rel, left, t);
            let b = base_attr(pool, rel, right, t);
            match op {
                // Equality over values directly, all nulls equal.
                CmpOp::Eq => val_eq(pool, a, b),
                CmpOp::Ne => {
                    let eq = val_eq(pool, a, b);
                    pool.not(eq)
                }
                _ => {
                    let an = pool.not(a.null);
                    let bn = pool.not(b.null);
                    let cmp = int_cmp(pool, *op, a.val, b.val);
                    pool.and([an, bn, cmp])
                }
            }
        }
        CheckPred::InList { attr, values } => {
            let sv = base_attr(pool, rel, attr, t);
            let nn = pool.not(sv.null);
            let alts: Vec<TermId> = values
                .iter()
                .map(|v| {
                    let c = pool.int(const_int(v));
                    pool.eq_int(sv.val, c)
                })
                .collect();
            let any = pool.or(alts);
            pool.and2(nn, any)
        }
        CheckPred::And(a, b) => {
            let x = encode_check_pred(pool, rel, a, t);
            let y = encode_check_pred(pool, rel, b, t);
            pool.and2(x, y)
        }
        CheckPred::Or(a, b) => {
            let x = encode_check_pred(pool, rel, a, t);
            let y = encode_check_pred(pool, rel, b, t);
            pool.or2(x, y)
        }
        CheckPred::Not(p) => {
            let x = encode_check_pred(pool, rel, p, t);
            pool.not(x)
        }
    }
}

fn int_cmp(pool: &mut TermPool, op: CmpOp, a: TermId, b: TermId) -> TermId {
    match op {
        CmpOp::Le => pool.le(a, b),
        CmpOp::Lt => pool.lt(a, b),
        CmpOp::Eq => pool.eq_int(a, b),
        CmpOp::Ne => {
            let eq = pool.eq_int(a, b);
            pool.not(eq)
        }
        CmpOp::Gt => pool.lt(b, a),
        CmpOp::Ge => pool.le(b, a),
    }
}

// ---------------------------------------------------------------------------
// Query encoding
// ---------------------------------------------------------------------------

/// Encodes a resolved, annotated query; returns the formula and the output
/// tuple list. `prefix` must match the one used for tuple inference.
pub fn encode_query(
    pool: &mut TermPool,
    schema: &Schema,
    attrs: &AttrMap,
    tuples: &TupleMap,
    q: &Query,
    prefix: &str,
) -> Result<(TermId, Vec<TupleId>)> {
    let mut enc = Encoder {
        pool,
        _schema: schema,
        attrs,
        tuples,
        prefix: prefix.to_string(),
        constraints: Vec::new(),
        internal: 0,
        encoded_subqueries: HashSet::new(),
    };
    enc.query(q)?;
    let phi = enc.pool.and(enc.constraints);
    Ok((phi, tuples.of(q).to_vec()))
}

struct Encoder<'a> {
    pool: &'a mut TermPool,
    _schema: &'a Schema,
    attrs: &'a AttrMap,
    tuples: &'a TupleMap,
    prefix: String,
    constraints: Vec<TermId>,
    internal: u32,
    /// Membership subqueries already encoded (they are encoded once and
    /// their output tuples shared across the enclosing rows).
    encoded_subqueries: HashSet<NodeId>,
}

/// Evaluation context for expressions: a head tuple for column references
/// and, in aggregate contexts, the candidate tuples with their liveness or
/// group-membership guards.
#[derive(Clone)]
struct Ctx<'b> {
    attrs: &'b [Ident],
    head: TupleId,
    agg: Option<AggScope<'b>>,
}

#[derive(Clone)]
struct AggScope<'b> {
    tuples: &'b [TupleId],
    guards: Vec<TermId>,
}

impl<'a> Encoder<'a> {
    fn push(&mut self, t: TermId) {
        self.constraints.push(t);
    }

    fn fresh_internal(&mut self, node: NodeId) -> TupleId {
        self.internal += 1;
        self.pool
            .new_tuple(format!("{}_i{}_{}", self.prefix, node.0, self.internal))
    }

    fn sym(&mut self, attr: &Ident, t: TupleId) -> SymVal {
        let a = self.pool.attr(attr);
        SymVal {
            null: self.pool.attr_null(a, t),
            val: self.pool.attr_val(a, t),
        }
    }

    /// Exact copy of positional attribute values plus the deletion flag.
    fn link(&mut self, dst: TupleId, dst_attrs: &[Ident], src: TupleId, src_attrs: &[Ident]) -> TermId {
        debug_assert_eq!(dst_attrs.len(), src_attrs.len());
        let mut parts = Vec::new();
        for (da, sa) in dst_attrs.iter().zip(src_attrs) {
            let d = self.sym(da, dst);
            let s = self.sym(sa, src);
            parts.push(self.pool.iff(d.null, s.null));
            parts.push(self.pool.eq_int(d.val, s.val));
        }
        let dd = self.pool.del(dst);
        let sd = self.pool.del(src);
        parts.push(self.pool.iff(dd, sd));
        self.pool.and(parts)
    }

    /// Copies values only under a condition and forces deletion otherwise:
    /// cond -> dst = src, !cond -> Del(dst).
    fn link_or_delete(
        &mut self,
        cond: TermId,
        dst: TupleId,
        dst_attrs: &[Ident],
        src: TupleId,
        src_attrs: &[Ident],
    ) {
        let eq = self.link(dst, dst_attrs, src, src_attrs);
        let keep = self.pool.implies(cond, eq);
        self.push(keep);
        let ncond = self.pool.not(cond);
        let dd = self.pool.del(dst);
        let drop = self.pool.implies(ncond, dd);
        self.push(drop);
    }

    /// Live-guarded tuple equality over positional values.
    fn tuple_eq(
        &mut self,
        t1: TupleId,
        attrs1: &[Ident],
        t2: TupleId,
        attrs2: &[Ident],
    ) -> TermId {
        let mut parts = vec![self.pool.live(t1), self.pool.live(t2)];
        for (a1, a2) in attrs1.iter().zip(attrs2) {
            let x = self.sym(a1, t1);
            let y = self.sym(a2, t2);
            parts.push(val_eq(self.pool, x, y));
        }
        self.pool.and(parts)
    }

    fn query(&mut self, q: &Query) -> Result<()> {
        match &q.kind {
            QueryKind::Relation(_) => Ok(()),
            QueryKind::Project { items, input } => {
                self.query(input)?;
                let in_attrs = self.attrs.of(input).to_vec();
                let in_tuples = self.tuples.of(input).to_vec();
                let out_attrs = self.attrs.of(q).to_vec();
                let out_tuples = self.tuples.of(q).to_vec();
                let has_agg = items.iter().any(|i| i.expr.has_agg());
                if has_agg {
                    let t1 = out_tuples[0];
                    let guards: Vec<TermId> =
                        in_tuples.iter().map(|&t| self.pool.live(t)).collect();
                    let ctx = Ctx {
                        attrs: &in_attrs,
                        head: in_tuples[0],
                        agg: Some(AggScope {
                            tuples: &in_tuples,
                            guards,
                        }),
                    };
                    for (item, oa) in items.iter().zip(&out_attrs) {
                        let sv = self.expr(&item.expr, &ctx)?;
                        let out = self.sym(oa, t1);
                        let c1 = self.pool.iff(out.null, sv.null);
                        let c2 = self.pool.eq_int(out.val, sv.val);
                        self.push(c1);
                        self.push(c2);
                    }
                    let lv = self.pool.live(t1);
                    self.push(lv);
                } else {
                    for (&ti, &to) in in_tuples.iter().zip(&out_tuples) {
                        let ctx = Ctx {
                            attrs: &in_attrs,
                            head: ti,
                            agg: None,
                        };
                        for (item, oa) in items.iter().zip(&out_attrs) {
                            let sv = self.expr(&item.expr, &ctx)?;
                            let out = self.sym(oa, to);
                            let c1 = self.pool.iff(out.null, sv.null);
                            let c2 = self.pool.eq_int(out.val, sv.val);
                            self.push(c1);
                            self.push(c2);
                        }
                        let dd = self.pool.del(to);
                        let sd = self.pool.del(ti);
                        let c = self.pool.iff(dd, sd);
                        self.push(c);
                    }
                }
                Ok(())
            }
            QueryKind::Filter { pred, input } => {
                self.query(input)?;
                let in_attrs = self.attrs.of(input).to_vec();
                let in_tuples = self.tuples.of(input).to_vec();
                let out_tuples = self.tuples.of(q).to_vec();
                self.filter_into(pred, &in_attrs, &in_tuples, &in_attrs, &out_tuples)
            }
            QueryKind::Rename { input, .. } => {
                self.query(input)?;
                let in_attrs = self.attrs.of(input).to_vec();
                let in_tuples = self.tuples.of(input).to_vec();
                let out_attrs = self.attrs.of(q).to_vec();
                let out_tuples = self.tuples.of(q).to_vec();
                for (&ti, &to) in in_tuples.iter().zip(&out_tuples) {
                    let l = self.link(to, &out_attrs, ti, &in_attrs);
                    self.push(l);
                }
                Ok(())
            }
            QueryKind::Join {
                kind,
                pred,
                left,
                right,
            } => self.join(q, *kind, pred.as_ref(), left, right),
            QueryKind::Coll { op, left, right } => self.coll(q, *op, left, right),
            QueryKind::Distinct(input) => {
                self.query(input)?;
                let attrs = self.attrs.of(q).to_vec();
                let in_attrs = self.attrs.of(input).to_vec();
                let in_tuples = self.tuples.of(input).to_vec();
                let out_tuples = self.tuples.of(q).to_vec();
                self.dedup_into(&in_tuples, &in_attrs, &out_tuples, &attrs);
                Ok(())
            }
            QueryKind::GroupBy {
                keys,
                items,
                having,
                input,
            } => self.group_by(q, keys, items, having.as_ref(), input),
            QueryKind::With { bindings, body } => {
                for (_, bq) in bindings {
                    self.query(bq)?;
                }
                self.query(body)
            }
            QueryKind::OrderBy { keys, asc, input } => self.order_by(q, keys, *asc, input),
        }
    }

    /// E-Filter into a given output list (shared by filter and inner join).
    fn filter_into(
        &mut self,
        pred: &Pred,
        pred_attrs: &[Ident],
        in_tuples: &[TupleId],
        out_attrs: &[Ident],
        out_tuples: &[TupleId],
    ) -> Result<()> {
        for (&ti, &to) in in_tuples.iter().zip(out_tuples) {
            let ctx = Ctx {
                attrs: pred_attrs,
                head: ti,
                agg: None,
            };
            let cond = self.pred(pred, &ctx)?;
            let live = self.pool.live(ti);
            let keep = self.pool.and2(live, cond.is_true);
            self.link_or_delete(keep, to, out_attrs, ti, pred_attrs);
        }
        Ok(())
    }

    /// First occurrence survives; later equal tuples are deleted.
    fn dedup_into(
        &mut self,
        in_tuples: &[TupleId],
        in_attrs: &[Ident],
        out_tuples: &[TupleId],
        out_attrs: &[Ident],
    ) {
        for (i, (&ti, &to)) in in_tuples.iter().zip(out_tuples).enumerate() {
            let dups: Vec<TermId> = (0..i)
                .map(|k| self.tuple_eq(ti, in_attrs, in_tuples[k], in_attrs))
                .collect();
            let dup = self.pool.or(dups);
            let fresh = self.pool.not(dup);
            self.link_or_delete(fresh, to, out_attrs, ti, in_attrs);
        }
    }

    #[allow(clippy::needless_range_loop)]
    fn join(
        &mut self,
        q: &Query,
        kind: JoinKind,
        pred: Option<&Pred>,
        left: &Query,
        right: &Query,
    ) -> Result<()> {
        self.query(left)?;
        self.query(right)?;
        let la = self.attrs.of(left).to_vec();
        let ra = self.attrs.of(right).to_vec();
        let lt = self.tuples.of(left).to_vec();
        let rt = self.tuples.of(right).to_vec();
        let out_attrs = self.attrs.of(q).to_vec();
        let out_tuples = self.tuples.of(q).to_vec();
        let (n, m) = (lt.len(), rt.len());

        // Cartesian product rows, possibly into internal tuples when a join
        // predicate still has to filter them.
        let prod_tuples: Vec<TupleId> = if matches!(kind, JoinKind::Product) {
            out_tuples.clone()
        } else {
            (0..n * m).map(|_| self.fresh_internal(q.id)).collect()
        };
        for i in 0..n {
            for j in 0..m {
                let pt = prod_tuples[i * m + j];
                let l_live = self.pool.live(lt[i]);
                let r_live = self.pool.live(rt[j]);
                let both = self.pool.and2(l_live, r_live);
                let mut copies = Vec::new();
                for (k, a) in la.iter().enumerate() {
                    let dst = self.sym(&out_attrs[k], pt);
                    let src = self.sym(a, lt[i]);
                    copies.push(self.pool.iff(dst.null, src.null));
                    copies.push(self.pool.eq_int(dst.val, src.val));
                }
                for (k, a) in ra.iter().enumerate() {
                    let dst = self.sym(&out_attrs[la.len() + k], pt);
                    let src = self.sym(a, rt[j]);
                    copies.push(self.pool.iff(dst.null, src.null));
                    copies.push(self.pool.eq_int(dst.val, src.val));
                }
                let pd = self.pool.del(pt);
                let living = self.pool.not(pd);
                copies.push(living);
                let all = self.pool.and(copies);
                let c1 = self.pool.implies(both, all);
                self.push(c1);
                let nboth = self.pool.not(both);
                let dd = self.pool.del(pt);
                let c2 = self.pool.implies(nboth, dd);
                self.push(c2);
            }
        }
        if matches!(kind, JoinKind::Product) {
            return Ok(());
        }

        // Filter the product by the join predicate into the inner block.
        let inner_block = &out_tuples[0..n * m];
        let pred = pred.ok_or_else(|| Error::Internal("join without predicate".into()))?;
        self.filter_into(pred, &out_attrs, &prod_tuples, &out_attrs, inner_block)?;
        if matches!(kind, JoinKind::Inner) {
            return Ok(());
        }

        // Null extensions. Right extensions form a row block after the inner
        // block; left extensions form the trailing column block.
        let (right_ext, left_ext): (&[TupleId], &[TupleId]) = match kind {
            JoinKind::Right => (&out_tuples[n * m..], &[]),
            JoinKind::Left => (&[], &out_tuples[n * m..]),
            JoinKind::Full => (
                &out_tuples[n * m..n * m + m],
                &out_tuples[n * m + m..],
            ),
            _ => unreachable!(),
        };

        for (i, &ext) in left_ext.iter().enumerate() {
            let mut parts = Vec::new();
            for (k, a) in la.iter().enumerate() {
                let dst = self.sym(&out_attrs[k], ext);
                let src = self.sym(a, lt[i]);
                parts.push(self.pool.iff(dst.null, src.null));
                parts.push(self.pool.eq_int(dst.val, src.val));
            }
            for k in 0..ra.len() {
                let dst = self.sym(&out_attrs[la.len() + k], ext);
                parts.push(dst.null);
            }
            for p in parts {
                self.push(p);
            }
            // Live exactly when the source row is live and every inner row
            // for it is deleted.
            let src_live = self.pool.live(lt[i]);
            let mut dels = vec![src_live];
            for j in 0..m {
                dels.push(self.pool.del(inner_block[i * m + j]));
            }
            let cond = self.pool.and(dels);
            let ext_live = self.pool.live(ext);
            let c = self.pool.iff(cond, ext_live);
            self.push(c);
        }
        for (j, &ext) in right_ext.iter().enumerate() {
            let mut parts = Vec::new();
            for k in 0..la.len() {
                let dst = self.sym(&out_attrs[k], ext);
                parts.push(dst.null);
            }
            for (k, a) in ra.iter().enumerate() {
                let dst = self.sym(&out_attrs[la.len() + k], ext);
                let src = self.sym(a, rt[j]);
                parts.push(self.pool.iff(dst.null, src.null));
                parts.push(self.pool.eq_int(dst.val, src.val));
            }
            for p in parts {
                self.push(p);
            }
            let src_live = self.pool.live(rt[j]);
            let mut dels = vec![src_live];
            for i in 0..n {
                dels.push(self.pool.del(inner_block[i * m + j]));
            }
            let cond = self.pool.and(dels);
            let ext_live = self.pool.live(ext);
            let c = self.pool.iff(cond, ext_live);
            self.push(c);
        }
        Ok(())
    }

    fn coll(&mut self, q: &Query, op: CollOp, left: &Query, right: &Query) -> Result<()> {
        self.query(left)?;
        self.query(right)?;
        let la = self.attrs.of(left).to_vec();
        let ra = self.attrs.of(right).to_vec();
        let lt = self.tuples.of(left).to_vec();
        let rt = self.tuples.of(right).to_vec();
        let out_attrs = self.attrs.of(q).to_vec();
        let out_tuples = self.tuples.of(q).to_vec();

        match op {
            CollOp::UnionAll => {
                for (i, &to) in out_tuples.iter().enumerate() {
                    let (src, src_attrs) = if i < lt.len() {
                        (lt[i], &la)
                    } else {
                        (rt[i - lt.len()], &ra)
                    };
                    let l = self.link(to, &out_attrs, src, src_attrs);
                    self.push(l);
                }
                Ok(())
            }
            CollOp::Union => {
                // Distinct over the concatenation.
                let concat: Vec<TupleId> = (0..lt.len() + rt.len())
                    .map(|_| self.fresh_internal(q.id))
                    .collect();
                for (i, &c) in concat.iter().enumerate() {
                    let (src, src_attrs) = if i < lt.len() {
                        (lt[i], &la)
                    } else {
                        (rt[i - lt.len()], &ra)
                    };
                    let l = self.link(c, &out_attrs, src, src_attrs);
                    self.push(l);
                }
                self.dedup_into(&concat, &out_attrs, &out_tuples, &out_attrs);
                Ok(())
            }
            CollOp::Intersect | CollOp::Except => {
                // Implicit Distinct on the left operand.
                let dist: Vec<TupleId> =
                    (0..lt.len()).map(|_| self.fresh_internal(q.id)).collect();
                self.dedup_into(&lt, &la, &dist, &la);
                for (&d, &to) in dist.iter().zip(&out_tuples) {
                    let mems: Vec<TermId> = rt
                        .iter()
                        .map(|&u| self.tuple_eq(d, &la, u, &ra))
                        .collect();
                    let mem = self.pool.or(mems);
                    let keep = if matches!(op, CollOp::Intersect) {
                        mem
                    } else {
                        self.pool.not(mem)
                    };
                    // A deleted left tuple never tests as a member, so for
                    // Except the copy branch also propagates deletions.
                    let live = self.pool.live(d);
                    let cond = self.pool.and2(keep, live);
                    self.link_or_delete(cond, to, &out_attrs, d, &la);
                }
                Ok(())
            }
            CollOp::ExceptAll => {
                self.except_all(q, &lt, &la, &rt, &ra, &out_tuples, &out_attrs);
                Ok(())
            }
            CollOp::IntersectAll => {
                // Q1 bag-intersect Q2 is Q1 - (Q1 - Q2).
                let minus: Vec<TupleId> =
                    (0..lt.len()).map(|_| self.fresh_internal(q.id)).collect();
                self.except_all(q, &lt, &la, &rt, &ra, &minus, &la);
                self.except_all(q, &lt, &la, &minus, &la, &out_tuples, &out_attrs);
                Ok(())
            }
        }
    }

    /// EXCEPT ALL through the pairing mechanism: each left occurrence is
    /// cancelled by at most one equal right occurrence.
    #[allow(clippy::too_many_arguments, clippy::needless_range_loop)]
    fn except_all(
        &mut self,
        q: &Query,
        lt: &[TupleId],
        la: &[Ident],
        rt: &[TupleId],
        ra: &[Ident],
        out: &[TupleId],
        out_attrs: &[Ident],
    ) {
        let n = lt.len();
        let m = rt.len();
        // A node may instantiate this encoding twice (bag intersection), so
        // the pairing atoms carry a per-call discriminator.
        self.internal += 1;
        let call = self.internal;
        let mut paired = vec![vec![None::<AtomId>; m]; n];
        for (i, row) in paired.iter_mut().enumerate() {
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = Some(self.pool.new_atom(format!(
                    "{}_p{}_{}_{}_{}",
                    self.prefix,
                    q.id.0,
                    call,
                    i + 1,
                    j + 1
                )));
            }
        }
        let atom = |enc: &mut Self, i: usize, j: usize| -> TermId {
            let a = paired[i][j].unwrap();
            enc.pool.atom(a)
        };
        for i in 0..n {
            for j in 0..m {
                let eq = self.tuple_eq(lt[i], la, rt[j], ra);
                let mut blockers = Vec::new();
                for k in 0..i {
                    let t = atom(self, k, j);
                    blockers.push(self.pool.not(t));
                }
                for k in 0..j {
                    let t = atom(self, i, k);
                    blockers.push(self.pool.not(t));
                }
                let mut rhs_parts = vec![eq];
                rhs_parts.extend(blockers);
                let rhs = self.pool.and(rhs_parts);
                let lhs = atom(self, i, j);
                let c = self.pool.iff(lhs, rhs);
                self.push(c);
            }
        }
        for i in 0..n {
            let mut cancelled = Vec::new();
            for j in 0..m {
                cancelled.push(atom(self, i, j));
            }
            let any = self.pool.or(cancelled);
            let keep = self.pool.not(any);
            let live = self.pool.live(lt[i]);
            let cond = self.pool.and2(keep, live);
            self.link_or_delete(cond, out[i], out_attrs, lt[i], la);
        }
    }

    fn group_by(
        &mut self,
        q: &Query,
        keys: &[Expr],
        items: &[ProjItem],
        having: Option<&Pred>,
        input: &Query,
    ) -> Result<()> {
        self.query(input)?;
        let in_attrs = self.attrs.of(input).to_vec();
        let in_tuples = self.tuples.of(input).to_vec();
        let out_attrs = self.attrs.of(q).to_vec();
        let out_tuples = self.tuples.of(q).to_vec();
        let n = in_tuples.len();

        // Membership atoms g[i][j] ("tuple i belongs to group j"), allocated
        // for j <= i: a tuple never joins a later group.
        let mut g: Vec<Vec<AtomId>> = Vec::with_capacity(n);
        for i in 0..n {
            let row = (0..=i)
                .map(|j| {
                    self.pool
                        .new_atom(format!("{}_g{}_{}_{}", self.prefix, q.id.0, i + 1, j + 1))
                })
                .collect();
            g.push(row);
        }

        // Key vectors per input tuple.
        let mut key_vals: Vec<Vec<SymVal>> = Vec::with_capacity(n);
        for &t in &in_tuples {
            let ctx = Ctx {
                attrs: &in_attrs,
                head: t,
                agg: None,
            };
            let vals = keys
                .iter()
                .map(|k| self.expr(k, &ctx))
                .collect::<Result<Vec<_>>>()?;
            key_vals.push(vals);
        }

        // Grouping: each live tuple belongs to exactly one group with index
        // at most its own; membership in an earlier group j holds exactly
        // when t_j leads that group and the key vectors agree.
        for i in 0..n {
            let inds: Vec<TermId> = (0..=i)
                .map(|j| {
                    let a = self.pool.atom(g[i][j]);
                    self.pool.indicator(a)
                })
                .collect();
            let lhs = self.pool.add(inds);
            let di = self.pool.del(in_tuples[i]);
            let zero = self.pool.int(0);
            let one = self.pool.int(1);
            let rhs = self.pool.ite_int(di, zero, one);
            let c = self.pool.eq_int(lhs, rhs);
            self.push(c);
            for j in 0..i {
                let live_i = self.pool.live(in_tuples[i]);
                let leader = self.pool.atom(g[j][j]);
                let key_eq: Vec<TermId> = key_vals[i]
                    .iter()
                    .zip(&key_vals[j])
                    .map(|(a, b)| val_eq(self.pool, *a, *b))
                    .collect();
                let keys_agree = self.pool.and(key_eq);
                let rhs = self.pool.and([live_i, leader, keys_agree]);
                let lhs = self.pool.atom(g[i][j]);
                let c = self.pool.iff(lhs, rhs);
                self.push(c);
            }
        }

        // Reducing: group i (led by t_i) produces output tuple i when the
        // HAVING condition is true over its members.
        for i in 0..n {
            let members: Vec<TupleId> = in_tuples[i..].to_vec();
            let guards: Vec<TermId> = (i..n).map(|j| self.pool.atom(g[j][i])).collect();
            let ctx = Ctx {
                attrs: &in_attrs,
                head: in_tuples[i],
                agg: Some(AggScope {
                    tuples: &members,
                    guards,
                }),
            };
            let hcond = match having {
                Some(h) => self.pred(h, &ctx)?,
                None => TriTerm::truth(self.pool, true),
            };
            let leader = self.pool.atom(g[i][i]);
            let alive = self.pool.and2(leader, hcond.is_true);

            let mut copies = Vec::new();
            for (item, oa) in items.iter().zip(&out_attrs) {
                let sv = self.expr(&item.expr, &ctx)?;
                let out = self.sym(oa, out_tuples[i]);
                copies.push(self.pool.iff(out.null, sv.null));
                copies.push(self.pool.eq_int(out.val, sv.val));
            }
            copies.push(self.pool.live(out_tuples[i]));
            let all = self.pool.and(copies);
            let c1 = self.pool.implies(alive, all);
            self.push(c1);
            let dead = self.pool.not(alive);
            let dd = self.pool.del(out_tuples[i]);
            let c2 = self.pool.implies(dead, dd);
            self.push(c2);
        }
        Ok(())
    }

    /// Bubble-sort network: deleted tuples sink to the end, live tuples sort
    /// by the key list, stable on ties.
    fn order_by(&mut self, q: &Query, keys: &[Expr], asc: bool, input: &Query) -> Result<()> {
        self.query(input)?;
        let attrs = self.attrs.of(q).to_vec();
        let in_attrs = self.attrs.of(input).to_vec();
        let mut cur = self.tuples.of(input).to_vec();
        let out_tuples = self.tuples.of(q).to_vec();
        let n = cur.len();

        // The input attributes equal the output attributes for sorting, but
        // tuples of the child still carry the child's names.
        debug_assert_eq!(attrs.len(), in_attrs.len());

        for pass in 0..n.saturating_sub(1) {
            for pos in 0..(n - 1 - pass) {
                let x = cur[pos];
                let y = cur[pos + 1];
                let sw = self.swap_cond(x, y, &in_attrs, keys, asc)?;
                let nx = self.fresh_internal(q.id);
                let ny = self.fresh_internal(q.id);
                self.emit_swap(sw, x, y, nx, ny, &in_attrs);
                cur[pos] = nx;
                cur[pos + 1] = ny;
            }
        }
        for (&src, &dst) in cur.iter().zip(&out_tuples) {
            let l = self.link(dst, &attrs, src, &in_attrs);
            self.push(l);
        }
        Ok(())
    }

    fn swap_cond(
        &mut self,
        x: TupleId,
        y: TupleId,
        attrs: &[Ident],
        keys: &[Expr],
        asc: bool,
    ) -> Result<TermId> {
        let ctx_x = Ctx {
            attrs,
            head: x,
            agg: None,
        };
        let ctx_y = Ctx {
            attrs,
            head: y,
            agg: None,
        };
        let kx: Vec<SymVal> = keys
            .iter()
            .map(|k| self.expr(k, &ctx_x))
            .collect::<Result<_>>()?;
        let ky: Vec<SymVal> = keys
            .iter()
            .map(|k| self.expr(k, &ctx_y))
            .collect::<Result<_>>()?;
        // Lexicographic "x ranks strictly after y" with Null below all
        // values; descending flips the per-key order.
        let mut after = self.pool.fls();
        for (a, b) in kx.iter().zip(&ky).rev() {
            let (lo, hi) = if asc { (b, a) } else { (a, b) };
            // lo < hi with Null as minus infinity.
            let lo_null_hi_not = {
                let hn = self.pool.not(hi.null);
                self.pool.and2(lo.null, hn)
            };
            let both_vals = {
                let ln = self.pool.not(lo.null);
                let hn = self.pool.not(hi.null);
                let lt = self.pool.lt(lo.val, hi.val);
                self.pool.and([ln, hn, lt])
            };
            let key_gt = self.pool.or2(lo_null_hi_not, both_vals);
            let key_eq = val_eq(self.pool, *a, *b);
            let tail = self.pool.and2(key_eq, after);
            after = self.pool.or2(key_gt, tail);
        }
        let dx = self.pool.del(x);
        let ly = self.pool.live(y);
        let del_sink = self.pool.and2(dx, ly);
        let lx = self.pool.live(x);
        let both_live = self.pool.and2(lx, ly);
        let out_of_order = self.pool.and2(both_live, after);
        Ok(self.pool.or2(del_sink, out_of_order))
    }

    fn emit_swap(
        &mut self,
        sw: TermId,
        x: TupleId,
        y: TupleId,
        nx: TupleId,
        ny: TupleId,
        attrs: &[Ident],
    ) {
        for a in attrs {
            let sx = self.sym(a, x);
            let sy = self.sym(a, y);
            let dx = self.sym(a, nx);
            let dy = self.sym(a, ny);
            let pick_null_x = self.pool.ite_bool(sw, sy.null, sx.null);
            let pick_val_x = self.pool.ite_int(sw, sy.val, sx.val);
            let pick_null_y = self.pool.ite_bool(sw, sx.null, sy.null);
            let pick_val_y = self.pool.ite_int(sw, sx.val, sy.val);
            let c1 = self.pool.iff(dx.null, pick_null_x);
            let c2 = self.pool.eq_int(dx.val, pick_val_x);
            let c3 = self.pool.iff(dy.null, pick_null_y);
            let c4 = self.pool.eq_int(dy.val, pick_val_y);
            self.push(c1);
            self.push(c2);
            self.push(c3);
            self.push(c4);
        }
        let del_x = self.pool.del(x);
        let del_y = self.pool.del(y);
        let pick_dx = self.pool.ite_bool(sw, del_y, del_x);
        let pick_dy = self.pool.ite_bool(sw, del_x, del_y);
        let ndx = self.pool.del(nx);
        let ndy = self.pool.del(ny);
        let c1 = self.pool.iff(ndx, pick_dx);
        let c2 = self.pool.iff(ndy, pick_dy);
        self.push(c1);
        self.push(c2);
    }

    // -- expressions and predicates -----------------------------------------

    fn expr(&mut self, e: &Expr, ctx: &Ctx) -> Result<SymVal> {
        match e {
            Expr::Column(c) => {
                if !ctx.attrs.contains(c) {
                    return Err(Error::UnknownAttribute(c.clone()));
                }
                Ok(self.sym(c, ctx.head))
            }
            Expr::Lit(v) => {
                let (null, val) = match v {
                    Value::Int(i) => (false, *i),
                    Value::Bool(b) => (false, *b as i64),
                    Value::Null => (true, 0),
                };
                Ok(SymVal {
                    null: self.pool.boolean(null),
                    val: self.pool.int(val),
                })
            }
            Expr::Arith { op, left, right } => {
                let a = self.expr(left, ctx)?;
                let b = self.expr(right, ctx)?;
                let null = self.pool.or2(a.null, b.null);
                let val = match op {
                    ArithOp::Add => self.pool.add([a.val, b.val]),
                    ArithOp::Sub => self.pool.sub(a.val, b.val),
                    ArithOp::Mul => self.pool.mul(a.val, b.val),
                    ArithOp::Div => self.pool.div(a.val, b.val),
                    ArithOp::Mod => self.pool.modulo(a.val, b.val),
                };
                Ok(SymVal { null, val })
            }
            Expr::Ite {
                cond,
                then_value,
                else_value,
            } => {
                let c = self.pred(cond, ctx)?;
                let t = self.expr(then_value, ctx)?;
                let f = self.expr(else_value, ctx)?;
                Ok(SymVal {
                    null: self.pool.ite_bool(c.is_true, t.null, f.null),
                    val: self.pool.ite_int(c.is_true, t.val, f.val),
                })
            }
            Expr::Case { arms, default } => {
                let mut acc = self.expr(default, ctx)?;
                for (p, v) in arms.iter().rev() {
                    let c = self.pred(p, ctx)?;
                    let tv = self.expr(v, ctx)?;
                    acc = SymVal {
                        null: self.pool.ite_bool(c.is_true, tv.null, acc.null),
                        val: self.pool.ite_int(c.is_true, tv.val, acc.val),
                    };
                }
                Ok(acc)
            }
            Expr::Agg { func, arg } => self.aggregate(*func, arg, ctx),
            Expr::Cast(p) => {
                let c = self.pred(p, ctx)?;
                let one = self.pool.int(1);
                let zero = self.pool.int(0);
                Ok(SymVal {
                    null: c.is_null,
                    val: self.pool.ite_int(c.is_true, one, zero),
                })
            }
        }
    }

    fn aggregate(&mut self, func: AggFunc, arg: &Expr, ctx: &Ctx) -> Result<SymVal> {
        let scope = ctx
            .agg
            .clone()
            .ok_or_else(|| Error::Internal("aggregate outside aggregation context".into()))?;
        // Argument per candidate tuple, under that tuple as head.
        let mut arg_vals = Vec::with_capacity(scope.tuples.len());
        for &t in scope.tuples {
            let row_ctx = Ctx {
                attrs: ctx.attrs,
                head: t,
                agg: None,
            };
            arg_vals.push(self.expr(arg, &row_ctx)?);
        }
        // valid(t) = in scope and argument non-null; AllNull is its absence.
        let valids: Vec<TermId> = scope
            .guards
            .iter()
            .zip(&arg_vals)
            .map(|(&g, sv)| {
                let nn = self.pool.not(sv.null);
                self.pool.and2(g, nn)
            })
            .collect();
        let found = self.pool.or(valids.clone());
        let all_null = self.pool.not(found);

        let val = match func {
            AggFunc::Count => {
                let inds: Vec<TermId> = valids.iter().map(|&v| self.pool.indicator(v)).collect();
                self.pool.add(inds)
            }
            AggFunc::Sum => {
                let zero = self.pool.int(0);
                let terms: Vec<TermId> = valids
                    .iter()
                    .zip(&arg_vals)
                    .map(|(&v, sv)| self.pool.ite_int(v, sv.val, zero))
                    .collect();
                self.pool.add(terms)
            }
            AggFunc::Avg => {
                let zero = self.pool.int(0);
                let sum_terms: Vec<TermId> = valids
                    .iter()
                    .zip(&arg_vals)
                    .map(|(&v, sv)| self.pool.ite_int(v, sv.val, zero))
                    .collect();
                let sum = self.pool.add(sum_terms);
                let inds: Vec<TermId> = valids.iter().map(|&v| self.pool.indicator(v)).collect();
                let count = self.pool.add(inds);
                self.pool.div(sum, count)
            }
            AggFunc::Min | AggFunc::Max => {
                let mut best = self.pool.int(0);
                let mut found_so_far = self.pool.fls();
                for (&v, sv) in valids.iter().zip(&arg_vals) {
                    let better = if func == AggFunc::Min {
                        self.pool.lt(sv.val, best)
                    } else {
                        self.pool.lt(best, sv.val)
                    };
                    let not_found = self.pool.not(found_so_far);
                    let improves = self.pool.or2(not_found, better);
                    let take = self.pool.and2(v, improves);
                    best = self.pool.ite_int(take, sv.val, best);
                    found_so_far = self.pool.or2(found_so_far, v);
                }
                best
            }
        };
        Ok(SymVal {
            null: all_null,
            val,
        })
    }

    fn pred(&mut self, p: &Pred, ctx: &Ctx) -> Result<TriTerm> {
        match p {
            Pred::Lit(Some(b)) => Ok(TriTerm::truth(self.pool, *b)),
            Pred::Lit(None) => Ok(TriTerm::null(self.pool)),
            Pred::Cmp { op, left, right } => {
                let a = self.expr(left, ctx)?;
                let b = self.expr(right, ctx)?;
                Ok(self.cmp(*op, a, b))
            }
            Pred::IsNull(e) => {
                let sv = self.expr(e, ctx)?;
                Ok(TriTerm {
                    is_true: sv.null,
                    is_null: self.pool.fls(),
                })
            }
            Pred::InList { exprs, rows } => {
                let evs: Vec<SymVal> = exprs
                    .iter()
                    .map(|e| self.expr(e, ctx))
                    .collect::<Result<_>>()?;
                let mut acc = TriTerm::truth(self.pool, false);
                for row in rows {
                    let mut conj = TriTerm::truth(self.pool, true);
                    for (ev, v) in evs.iter().zip(row) {
                        let c = Expr::Lit(*v);
                        let cv = self.expr(&c, ctx)?;
                        let eq = self.cmp(CmpOp::Eq, *ev, cv);
                        conj = tri_and(self.pool, conj, eq);
                    }
                    acc = tri_or(self.pool, acc, conj);
                }
                Ok(acc)
            }
            Pred::InQuery { exprs, query } => {
                // Encode the subquery once; its formula joins the enclosing
                // constraint set and its output tuples witness membership.
                if self.encoded_subqueries.insert(query.id) {
                    self.query(query)?;
                }
                let sub_attrs = self.attrs.of(query).to_vec();
                let sub_tuples = self.tuples.of(query).to_vec();
                let evs: Vec<SymVal> = exprs
                    .iter()
                    .map(|e| self.expr(e, ctx))
                    .collect::<Result<_>>()?;
                let mut acc = TriTerm::truth(self.pool, false);
                for &t in &sub_tuples {
                    let mut conj = TriTerm::truth(self.pool, true);
                    for (ev, a) in evs.iter().zip(&sub_attrs) {
                        let tv = self.sym(a, t);
                        let eq = self.cmp(CmpOp::Eq, *ev, tv);
                        conj = tri_and(self.pool, conj, eq);
                    }
                    // A deleted tuple is not a member of the relation.
                    let live = self.pool.live(t);
                    conj = TriTerm {
                        is_true: self.pool.and2(live, conj.is_true),
                        is_null: self.pool.and2(live, conj.is_null),
                    };
                    acc = tri_or(self.pool, acc, conj);
                }
                Ok(acc)
            }
            Pred::And(a, b) => {
                let x = self.pred(a, ctx)?;
                let y = self.pred(b, ctx)?;
                Ok(tri_and(self.pool, x, y))
            }
            Pred::Or(a, b) => {
                let x = self.pred(a, ctx)?;
                let y = self.pred(b, ctx)?;
                Ok(tri_or(self.pool, x, y))
            }
            Pred::Not(p) => {
                let x = self.pred(p, ctx)?;
                Ok(tri_not(self.pool, x))
            }
        }
    }

    /// Comparison: false (never Null) when an operand is Null.
    fn cmp(&mut self, op: CmpOp, a: SymVal, b: SymVal) -> TriTerm {
        let an = self.pool.not(a.null);
        let bn = self.pool.not(b.null);
        let c = int_cmp(self.pool, op, a.val, b.val);
        TriTerm {
            is_true: self.pool.and([an, bn, c]),
            is_null: self.pool.fls(),
        }
    }
}
