//! The verification driver: one bound, and the incremental loop.
//!
//! At a bound N the schema becomes a symbolic database, constraints and both
//! queries become one formula, and the negated output equality is checked:
//! unsat certifies bounded equivalence, sat yields a counterexample database
//! that is validated against the reference interpreter before being
//! returned. Equality is positional (list) only when both queries end in
//! ORDER BY; with one-sided sorting the sorted side's order is stripped and
//! the comparison falls back to bags, with a warning.

use crate::ast::{ConstraintSet, Query, QueryKind, Schema};
use crate::constraints::check_constraints;
use crate::encode::{encode_constraints, encode_query};
use crate::equiv::{encode_bag_equivalence, encode_list_equivalence};
use crate::error::{Error, Result};
use crate::eval::{bag_equal, eval_query, list_equal, Database};
use crate::formula::TermPool;
use crate::infer::{infer_attributes, infer_tuples};
use crate::model::{build_database, database_queries};
use crate::solver::{SatResult, Solver, UnknownReason};
use crate::symdb::build_symbolic_db;
use std::time::Instant;

#[derive(Debug, Clone)]
pub struct Counterexample {
    pub db: Database,
    pub bound: usize,
    pub solve_ms: u64,
}

#[derive(Debug, Clone)]
pub enum Status {
    Checked { bound: usize },
    Refuted { cex: Counterexample, at_bound: usize },
    Unsupported { reason: String },
    Unknown { reason: String },
}

#[derive(Debug, Clone)]
pub struct VerificationResult {
    pub status: Status,
    pub encode_ms: u64,
    pub solve_ms: u64,
    pub warnings: Vec<String>,
}

impl VerificationResult {
    pub fn exit_code(&self) -> i32 {
        match &self.status {
            Status::Checked { .. } => 0,
            Status::Refuted { .. } => 1,
            Status::Unsupported { .. } => 2,
            Status::Unknown { .. } => 3,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct VerifyOptions {
    /// Directory receiving the exact SMT-LIB scripts sent to the solver.
    pub dump_smt2: Option<std::path::PathBuf>,
    /// Print per-node inference annotations (attributes, tuple counts) to
    /// stderr before solving.
    pub dump_annotations: bool,
}

/// Comparison mode plus the (possibly order-stripped) queries to verify.
fn comparison_plan(q1: &Query, q2: &Query) -> (Query, Query, bool, Vec<String>) {
    let sorted1 = matches!(q1.kind, QueryKind::OrderBy { .. });
    let sorted2 = matches!(q2.kind, QueryKind::OrderBy { .. });
    let strip = |q: &Query| -> Query {
        match &q.kind {
            QueryKind::OrderBy { input, .. } => (**input).clone(),
            _ => q.clone(),
        }
    };
    match (sorted1, sorted2) {
        (true, true) => (q1.clone(), q2.clone(), true, vec![]),
        (false, false) => (q1.clone(), q2.clone(), false, vec![]),
        _ => (
            strip(q1),
            strip(q2),
            false,
            vec![
                "one query sorts its result and the other does not; comparing under bag \
                 semantics with the ORDER BY stripped"
                    .to_string(),
            ],
        ),
    }
}

/// Warns when Avg occurs anywhere in a comparison; its integer-division
/// encoding makes such benchmarks rounding-sensitive.
fn avg_warnings(q: &Query, out: &mut Vec<String>) {
    fn pred_has_avg_cmp(p: &crate::ast::Pred) -> bool {
        use crate::ast::Pred;
        match p {
            Pred::Cmp { left, right, .. } => expr_has_avg(left) || expr_has_avg(right),
            Pred::IsNull(e) => expr_has_avg(e),
            Pred::InList { exprs, .. } | Pred::InQuery { exprs, .. } => {
                exprs.iter().any(expr_has_avg)
            }
            Pred::And(a, b) | Pred::Or(a, b) => pred_has_avg_cmp(a) || pred_has_avg_cmp(b),
            Pred::Not(p) => pred_has_avg_cmp(p),
            Pred::Lit(_) => false,
        }
    }
    fn expr_has_avg(e: &crate::ast::Expr) -> bool {
        use crate::ast::{AggFunc, Expr};
        match e {
            Expr::Agg { func, .. } => *func == AggFunc::Avg,
            Expr::Arith { left, right, .. } => expr_has_avg(left) || expr_has_avg(right),
            Expr::Ite {
                cond,
                then_value,
                else_value,
            } => pred_has_avg_cmp(cond) || expr_has_avg(then_value) || expr_has_avg(else_value),
            Expr::Case { arms, default } => {
                arms.iter()
                    .any(|(p, v)| pred_has_avg_cmp(p) || expr_has_avg(v))
                    || expr_has_avg(default)
            }
            Expr::Cast(p) => pred_has_avg_cmp(p),
            _ => false,
        }
    }
    fn walk(q: &Query, out: &mut Vec<String>) {
        use crate::ast::QueryKind::*;
        let mut hit = false;
        match &q.kind {
            Filter { pred, .. } => hit = pred_has_avg_cmp(pred),
            Join { pred: Some(p), .. } => hit = pred_has_avg_cmp(p),
            GroupBy { having: Some(h), .. } => hit = pred_has_avg_cmp(h),
            _ => {}
        }
        if hit {
            out.push(
                "AVG occurs inside a comparison; results are sensitive to integer-division \
                 rounding"
                    .to_string(),
            );
        }
        match &q.kind {
            Project { input, .. }
            | Filter { input, .. }
            | Rename { input, .. }
            | Distinct(input)
            | GroupBy { input, .. }
            | OrderBy { input, .. } => walk(input, out),
            Join { left, right, .. } | Coll { left, right, .. } => {
                walk(left, out);
                walk(right, out);
            }
            With { bindings, body } => {
                for (_, b) in bindings {
                    walk(b, out);
                }
                walk(body, out);
            }
            Relation(_) => {}
        }
    }
    walk(q, out);
    out.dedup();
}

/// Algorithm: build the symbolic database, encode constraints and both
/// queries, assert the negation of output equality, and ask the solver.
pub fn verify_at_bound(
    schema: &Schema,
    cons: &ConstraintSet,
    q1: &Query,
    q2: &Query,
    n: usize,
    timeout_ms: u64,
    opts: &VerifyOptions,
) -> Result<VerificationResult> {
    let (vq1, vq2, list_mode, mut warnings) = comparison_plan(q1, q2);
    avg_warnings(&vq1, &mut warnings);
    avg_warnings(&vq2, &mut warnings);

    let encode_start = Instant::now();
    let mut pool = TermPool::new();
    let gamma = build_symbolic_db(&mut pool, schema, n)?;
    let phi_c = encode_constraints(&mut pool, &gamma, schema, cons)?;

    let attrs1 = infer_attributes(schema, &vq1)?;
    let attrs2 = infer_attributes(schema, &vq2)?;
    let tuples1 = infer_tuples(&mut pool, &gamma, &vq1, "q1")?;
    let tuples2 = infer_tuples(&mut pool, &gamma, &vq2, "q2")?;
    if opts.dump_annotations {
        eprintln!(
            "annotations q1: {}",
            crate::infer::annotations_json(&pool, &attrs1, &tuples1)
        );
        eprintln!(
            "annotations q2: {}",
            crate::infer::annotations_json(&pool, &attrs2, &tuples2)
        );
    }
    let (phi_1, out1) = encode_query(&mut pool, schema, &attrs1, &tuples1, &vq1, "q1")?;
    let (phi_2, out2) = encode_query(&mut pool, schema, &attrs2, &tuples2, &vq2, "q2")?;

    let left = (out1.as_slice(), attrs1.of(&vq1));
    let right = (out2.as_slice(), attrs2.of(&vq2));
    let equal = if list_mode {
        encode_list_equivalence(&mut pool, left, right)?
    } else {
        encode_bag_equivalence(&mut pool, left, right)?
    };
    let not_equal = pool.not(equal);
    let phi = pool.and([phi_c, phi_1, phi_2, not_equal]);
    let script = pool.emit_smtlib(phi, false);
    let encode_ms = encode_start.elapsed().as_millis() as u64;

    if let Some(dir) = &opts.dump_smt2 {
        std::fs::create_dir_all(dir)
            .and_then(|_| std::fs::write(dir.join(format!("bound_{n}.smt2")), &script))
            .map_err(|e| Error::Solver(format!("cannot dump smt2: {e}")))?;
    }

    let solver = Solver::from_env()?;
    let queries = database_queries(&pool, &gamma, schema);
    let solve_start = Instant::now();
    let sat = solver.check(&script, &queries, timeout_ms)?;
    let solve_ms = solve_start.elapsed().as_millis() as u64;

    let status = match sat {
        SatResult::Unsat => Status::Checked { bound: n },
        SatResult::Unknown(UnknownReason::Timeout) => Status::Unknown {
            reason: "timeout".into(),
        },
        SatResult::Unknown(UnknownReason::SolverError(e)) => Status::Unknown {
            reason: format!("solver: {e}"),
        },
        SatResult::Sat(model) => {
            let db = build_database(&model, &pool, &gamma, schema)?;
            match validate_counterexample(schema, cons, &vq1, &vq2, list_mode, &db, n) {
                Ok(()) => Status::Refuted {
                    cex: Counterexample {
                        db,
                        bound: n,
                        solve_ms,
                    },
                    at_bound: n,
                },
                Err(Error::Eval(e)) => Status::Unsupported {
                    reason: format!("counterexample validation hit an evaluation error: {e}"),
                },
                Err(e) => return Err(e),
            }
        }
    };
    Ok(VerificationResult {
        status,
        encode_ms,
        solve_ms,
        warnings,
    })
}

/// A returned counterexample must conform to the schema, satisfy the
/// constraints, and distinguish the two queries under the oracle. Anything
/// else is an internal soundness bug and fails loudly.
fn validate_counterexample(
    schema: &Schema,
    cons: &ConstraintSet,
    q1: &Query,
    q2: &Query,
    list_mode: bool,
    db: &Database,
    n: usize,
) -> Result<()> {
    if !db.conforms(schema) {
        return Err(Error::Internal(
            "counterexample does not conform to the schema".into(),
        ));
    }
    if db.relations.values().any(|r| r.rows.len() > n) {
        return Err(Error::Internal(
            "counterexample exceeds the verified bound".into(),
        ));
    }
    if !check_constraints(db, cons) {
        return Err(Error::Internal(
            "counterexample violates the integrity constraints".into(),
        ));
    }
    let r1 = eval_query(db, q1)?;
    let r2 = eval_query(db, q2)?;
    let same = if list_mode {
        list_equal(&r1, &r2)?
    } else {
        bag_equal(&r1, &r2)?
    };
    if same {
        return Err(Error::Internal(
            "counterexample fails to distinguish the queries under the oracle".into(),
        ));
    }
    Ok(())
}

/// Increments the bound from 1; the timeout is a total budget across the
/// loop. The first satisfiable bound refutes; exhausting the budget reports
/// the largest fully verified bound, or unknown if none was.
pub fn verify_incremental(
    schema: &Schema,
    cons: &ConstraintSet,
    q1: &Query,
    q2: &Query,
    max_n: usize,
    timeout_ms: u64,
    opts: &VerifyOptions,
) -> Result<VerificationResult> {
    let deadline = Instant::now() + std::time::Duration::from_millis(timeout_ms);
    let mut last_checked: Option<usize> = None;
    let mut encode_ms = 0;
    let mut solve_ms = 0;
    let mut warnings = Vec::new();
    for n in 1..=max_n.max(1) {
        let remaining = deadline.saturating_duration_since(Instant::now());
        if remaining.is_zero() {
            break;
        }
        let r = verify_at_bound(schema, cons, q1, q2, n, remaining.as_millis() as u64, opts)?;
        encode_ms += r.encode_ms;
        solve_ms += r.solve_ms;
        for w in r.warnings {
            if !warnings.contains(&w) {
                warnings.push(w);
            }
        }
        match r.status {
            Status::Checked { bound } => last_checked = Some(bound),
            Status::Refuted { cex, at_bound } => {
                return Ok(VerificationResult {
                    status: Status::Refuted { cex, at_bound },
                    encode_ms,
                    solve_ms,
                    warnings,
                })
            }
            Status::Unsupported { reason } => {
                return Ok(VerificationResult {
                    status: Status::Unsupported { reason },
                    encode_ms,
                    solve_ms,
                    warnings,
                })
            }
            Status::Unknown { .. } => break,
        }
    }
    let status = match last_checked {
        Some(bound) => Status::Checked { bound },
        None => Status::Unknown {
            reason: "timeout".into(),
        },
    };
    Ok(VerificationResult {
        status,
        encode_ms,
        solve_ms,
        warnings,
    })
}
