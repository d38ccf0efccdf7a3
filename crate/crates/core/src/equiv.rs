//! Output equality under bag and list semantics.
//!
//! Bag equality asserts equal live-tuple counts plus, per left tuple, equal
//! multiplicities on both sides; multiplicities are indicator sums, so no
//! cardinality theory is involved. List equality (used when both queries end
//! in ORDER BY, which moves deleted tuples to the tail) asserts equal counts
//! plus pairwise equality at each shared index.

use crate::ast::Ident;
use crate::encode::val_eq;
use crate::error::{Error, Result};
use crate::formula::{TermId, TermPool, TupleId};

/// Positional value equality of two tuples (names ignored).
fn row_values_eq(
    pool: &mut TermPool,
    t1: TupleId,
    attrs1: &[Ident],
    t2: TupleId,
    attrs2: &[Ident],
) -> TermId {
    let mut parts = Vec::with_capacity(attrs1.len());
    for (a1, a2) in attrs1.iter().zip(attrs2) {
        let x = {
            let a = pool.attr(a1);
            crate::encode::SymVal {
                null: pool.attr_null(a, t1),
                val: pool.attr_val(a, t1),
            }
        };
        let y = {
            let a = pool.attr(a2);
            crate::encode::SymVal {
                null: pool.attr_null(a, t2),
                val: pool.attr_val(a, t2),
            }
        };
        parts.push(val_eq(pool, x, y));
    }
    pool.and(parts)
}

fn live_count(pool: &mut TermPool, tuples: &[TupleId]) -> TermId {
    let inds: Vec<TermId> = tuples
        .iter()
        .map(|&t| {
            let l = pool.live(t);
            pool.indicator(l)
        })
        .collect();
    pool.add(inds)
}

/// Equal as bags: same live count, and each live left tuple occurs equally
/// often on both sides.
pub fn encode_bag_equivalence(
    pool: &mut TermPool,
    left: (&[TupleId], &[Ident]),
    right: (&[TupleId], &[Ident]),
) -> Result<TermId> {
    let (lt, la) = left;
    let (rt, ra) = right;
    if la.len() != ra.len() {
        return Err(Error::Arity(format!(
            "bag equivalence of arity {} with {}",
            la.len(),
            ra.len()
        )));
    }
    let mut parts = Vec::new();
    let lc = live_count(pool, lt);
    let rc = live_count(pool, rt);
    parts.push(pool.eq_int(lc, rc));

    for &ti in lt {
        let live_i = pool.live(ti);
        let mut lhs = Vec::new();
        for &tj in lt {
            let live_j = pool.live(tj);
            let eq = row_values_eq(pool, ti, la, tj, la);
            let c = pool.and([live_i, live_j, eq]);
            lhs.push(pool.indicator(c));
        }
        let mut rhs = Vec::new();
        for &rk in rt {
            let live_k = pool.live(rk);
            let eq = row_values_eq(pool, ti, la, rk, ra);
            let c = pool.and([live_i, live_k, eq]);
            rhs.push(pool.indicator(c));
        }
        let lsum = pool.add(lhs);
        let rsum = pool.add(rhs);
        parts.push(pool.eq_int(lsum, rsum));
    }
    Ok(pool.and(parts))
}

/// Equal as lists: same live count and pairwise equality up to the shorter
/// length. Inputs must come from ORDER BY encodings so deleted tuples sit at
/// the end; equality at an index is conditioned on liveness so deleted-tail
/// payloads cannot influence the result.
pub fn encode_list_equivalence(
    pool: &mut TermPool,
    left: (&[TupleId], &[Ident]),
    right: (&[TupleId], &[Ident]),
) -> Result<TermId> {
    let (lt, la) = left;
    let (rt, ra) = right;
    if la.len() != ra.len() {
        return Err(Error::Arity(format!(
            "list equivalence of arity {} with {}",
            la.len(),
            ra.len()
        )));
    }
    let mut parts = Vec::new();
    let lc = live_count(pool, lt);
    let rc = live_count(pool, rt);
    parts.push(pool.eq_int(lc, rc));

    for i in 0..lt.len().min(rt.len()) {
        let dl = pool.del(lt[i]);
        let dr = pool.del(rt[i]);
        parts.push(pool.iff(dl, dr));
        let ll = pool.live(lt[i]);
        let lr = pool.live(rt[i]);
        let both = pool.and2(ll, lr);
        let eq = row_values_eq(pool, lt[i], la, rt[i], ra);
        parts.push(pool.implies(both, eq));
    }
    Ok(pool.and(parts))
}
