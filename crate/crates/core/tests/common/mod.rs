#![allow(dead_code)]

//! Deterministic random generation of schemas, databases, constraints, and
//! queries for differential testing. Construction tracks the visible columns
//! of every subquery, so almost everything generated resolves; the few
//! ill-formed candidates are rejected by the frontend and resampled.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use sqleq_core::ast::*;
use sqleq_core::eval::{Database, Relation};
use sqleq_core::resolve::resolve;
use sqleq_core::value::Value;
use sqleq_core::wf::check_well_formed;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn small_schema() -> Schema {
    Schema {
        relations: vec![
            RelationSchema {
                name: "R".into(),
                attrs: vec![("a".into(), ColType::Int), ("b".into(), ColType::Int)],
            },
            RelationSchema {
                name: "S".into(),
                attrs: vec![("c".into(), ColType::Int), ("d".into(), ColType::Int)],
            },
        ],
    }
}

pub const DOMAIN: [Value; 4] = [Value::Null, Value::Int(0), Value::Int(1), Value::Int(2)];

/// Random database over the schema: up to `max_rows` rows per relation,
/// values drawn from the domain (Bool columns from {Null, false, true}).
pub fn gen_database(rng: &mut ChaCha8Rng, schema: &Schema, max_rows: usize, domain: &[Value]) -> Database {
    let mut db = Database::default();
    for rs in &schema.relations {
        let n = rng.gen_range(0..=max_rows);
        let rows = (0..n)
            .map(|_| {
                rs.attrs
                    .iter()
                    .map(|(_, ty)| match ty {
                        ColType::Int => *domain.choose(rng).unwrap(),
                        ColType::Bool => *[Value::Null, Value::Bool(false), Value::Bool(true)]
                            .choose(rng)
                            .unwrap(),
                    })
                    .collect()
            })
            .collect();
        db.relations.insert(
            rs.name.clone(),
            Relation::new(rs.attrs.iter().map(|(a, _)| a.clone()).collect(), rows),
        );
    }
    db
}

/// Random constraint set over a schema.
pub fn gen_constraints(rng: &mut ChaCha8Rng, schema: &Schema) -> ConstraintSet {
    let mut out = Vec::new();
    let n = rng.gen_range(0..=3);
    for _ in 0..n {
        let rel = schema.relations.choose(rng).unwrap();
        let int_attrs: Vec<&String> = rel
            .attrs
            .iter()
            .filter(|(_, t)| *t == ColType::Int)
            .map(|(a, _)| a)
            .collect();
        if int_attrs.is_empty() {
            continue;
        }
        let attr = (*int_attrs.choose(rng).unwrap()).clone();
        let c = match rng.gen_range(0..5) {
            0 => {
                let mut attrs = vec![attr.clone()];
                if rng.gen_bool(0.3) && int_attrs.len() > 1 {
                    let other = (*int_attrs.choose(rng).unwrap()).clone();
                    if !attrs.contains(&other) {
                        attrs.push(other);
                    }
                }
                Constraint::PrimaryKey {
                    rel: rel.name.clone(),
                    attrs,
                }
            }
            1 => {
                let ref_rel = schema.relations.choose(rng).unwrap();
                let ref_ints: Vec<&String> = ref_rel
                    .attrs
                    .iter()
                    .filter(|(_, t)| *t == ColType::Int)
                    .map(|(a, _)| a)
                    .collect();
                if ref_ints.is_empty() {
                    continue;
                }
                Constraint::ForeignKey {
                    rel: rel.name.clone(),
                    attr,
                    ref_rel: ref_rel.name.clone(),
                    ref_attr: (*ref_ints.choose(rng).unwrap()).clone(),
                }
            }
            2 => Constraint::NotNull {
                rel: rel.name.clone(),
                attr,
            },
            3 => {
                let pred = gen_check_pred(rng, &int_attrs);
                Constraint::Check {
                    rel: rel.name.clone(),
                    pred,
                }
            }
            _ => Constraint::AutoInc {
                rel: rel.name.clone(),
                attr,
                start: rng.gen_range(-1..=2),
            },
        };
        out.push(c);
    }
    ConstraintSet(out)
}

fn gen_check_pred(rng: &mut ChaCha8Rng, attrs: &[&String]) -> CheckPred {
    let ops = [CmpOp::Le, CmpOp::Lt, CmpOp::Eq, CmpOp::Ne, CmpOp::Gt, CmpOp::Ge];
    let atom = |rng: &mut ChaCha8Rng| -> CheckPred {
        let a = (*attrs.choose(rng).unwrap()).clone();
        match rng.gen_range(0..3) {
            0 => CheckPred::CmpConst {
                attr: a,
                op: *ops.choose(rng).unwrap(),
                value: Value::Int(rng.gen_range(-1..=2)),
            },
            1 => CheckPred::CmpAttr {
                left: a,
                op: *ops.choose(rng).unwrap(),
                right: (*attrs.choose(rng).unwrap()).clone(),
            },
            _ => CheckPred::InList {
                attr: a,
                values: vec![Value::Int(0), Value::Int(rng.gen_range(1..=2))],
            },
        }
    };
    match rng.gen_range(0..4) {
        0 => CheckPred::And(Box::new(atom(rng)), Box::new(atom(rng))),
        1 => CheckPred::Or(Box::new(atom(rng)), Box::new(atom(rng))),
        2 => CheckPred::Not(Box::new(atom(rng))),
        _ => atom(rng),
    }
}

// ---------------------------------------------------------------------------
// Query generation
// ---------------------------------------------------------------------------

pub struct QueryGen<'a> {
    pub rng: ChaCha8Rng,
    schema: &'a Schema,
    counter: u32,
    /// Include Avg among generated aggregates (off by default: its
    /// integer-division encoding is rounding-sensitive).
    pub with_avg: bool,
}

struct Built {
    q: Query,
    cols: Vec<String>,
}

impl<'a> QueryGen<'a> {
    pub fn new(schema: &'a Schema, seed: u64) -> Self {
        QueryGen {
            rng: rng(seed),
            schema,
            counter: 0,
            with_avg: false,
        }
    }

    fn fresh(&mut self, prefix: &str) -> String {
        self.counter += 1;
        format!("{prefix}{}", self.counter)
    }

    /// A resolved, well-formed random query; `sorted` appends a top-level
    /// ORDER BY.
    pub fn query(&mut self, sorted: bool) -> Query {
        loop {
            let depth = self.rng.gen_range(1..=3);
            let built = self.table(depth);
            let raw = if sorted {
                let keys: Vec<Expr> = {
                    let k = self.rng.gen_range(1..=built.cols.len().min(2));
                    built.cols[..k]
                        .iter()
                        .map(|c| Expr::Column(c.clone()))
                        .collect()
                };
                let asc = self.rng.gen_bool(0.5);
                Query::new(QueryKind::OrderBy {
                    keys,
                    asc,
                    input: Box::new(built.q),
                })
            } else {
                built.q
            };
            if let Ok(q) = resolve(self.schema, &raw) {
                if check_well_formed(self.schema, &q).is_ok() {
                    return q;
                }
            }
        }
    }

    fn leaf(&mut self) -> Built {
        let rs = self.schema.relations.choose(&mut self.rng).unwrap().clone();
        if self.rng.gen_bool(0.5) {
            let alias = self.fresh("t");
            let cols = rs.attrs.iter().map(|(a, _)| format!("{alias}.{a}")).collect();
            Built {
                q: Query::new(QueryKind::Rename {
                    alias,
                    input: Box::new(Query::new(QueryKind::Relation(rs.name.clone()))),
                }),
                cols,
            }
        } else {
            let cols = rs.attrs.iter().map(|(a, _)| format!("{}.{}", rs.name, a)).collect();
            Built {
                q: Query::new(QueryKind::Relation(rs.name.clone())),
                cols,
            }
        }
    }

    fn table(&mut self, depth: usize) -> Built {
        if depth == 0 {
            return self.leaf();
        }
        match self.rng.gen_range(0..9) {
            0 => self.leaf(),
            1 => {
                let b = self.table(depth.saturating_sub(1));
                let pred = self.pred(&b.cols, 1);
                Built {
                    q: Query::new(QueryKind::Filter {
                        pred,
                        input: Box::new(b.q),
                    }),
                    cols: b.cols,
                }
            }
            2 => self.project(depth),
            3 => {
                let b = self.table(depth - 1);
                Built {
                    q: Query::new(QueryKind::Distinct(Box::new(b.q))),
                    cols: b.cols,
                }
            }
            4 => {
                // Join under fresh aliases so the sides cannot collide.
                let l = self.aliased(depth - 1);
                let r = self.aliased(depth - 1);
                let mut cols = l.cols.clone();
                cols.extend(r.cols.iter().cloned());
                let kind = *[
                    JoinKind::Product,
                    JoinKind::Inner,
                    JoinKind::Left,
                    JoinKind::Right,
                    JoinKind::Full,
                ]
                .choose(&mut self.rng)
                .unwrap();
                let pred = if matches!(kind, JoinKind::Product) {
                    None
                } else {
                    Some(self.pred(&cols, 1))
                };
                Built {
                    q: Query::new(QueryKind::Join {
                        kind,
                        pred,
                        left: Box::new(l.q),
                        right: Box::new(r.q),
                    }),
                    cols,
                }
            }
            5 => {
                // Collection operation over arity-aligned projections.
                let l = self.project(depth);
                let arity = l.cols.len();
                let r = self.project_arity(depth, arity);
                let op = *[
                    CollOp::Union,
                    CollOp::UnionAll,
                    CollOp::Intersect,
                    CollOp::IntersectAll,
                    CollOp::Except,
                    CollOp::ExceptAll,
                ]
                .choose(&mut self.rng)
                .unwrap();
                Built {
                    cols: l.cols.clone(),
                    q: Query::new(QueryKind::Coll {
                        op,
                        left: Box::new(l.q),
                        right: Box::new(r.q),
                    }),
                }
            }
            6 => self.group_by(depth),
            7 => {
                // WITH binding referenced by the body.
                let bound = self.project(depth.saturating_sub(1));
                let name = self.fresh("w");
                let cols: Vec<String> = bound
                    .cols
                    .iter()
                    .map(|c| format!("{name}.{}", c.rsplit('.').next().unwrap()))
                    .collect();
                let body_pred = self.pred(&cols, 0);
                let body = Query::new(QueryKind::Filter {
                    pred: body_pred,
                    input: Box::new(Query::new(QueryKind::Relation(name.clone()))),
                });
                Built {
                    q: Query::new(QueryKind::With {
                        bindings: vec![(name, bound.q)],
                        body: Box::new(body),
                    }),
                    cols,
                }
            }
            _ => {
                // Aggregate projection over the whole input.
                let b = self.table(depth - 1);
                let mut items = Vec::new();
                let n = self.rng.gen_range(1..=2);
                for _ in 0..n {
                    let func = self.agg_func();
                    let col = b.cols.choose(&mut self.rng).unwrap().clone();
                    items.push(ProjItem {
                        expr: Expr::Agg {
                            func,
                            arg: Box::new(Expr::Column(col)),
                        },
                        alias: Some(self.fresh("g")),
                    });
                }
                let cols = items.iter().map(|i| i.alias.clone().unwrap()).collect();
                Built {
                    q: Query::new(QueryKind::Project {
                        items,
                        input: Box::new(b.q),
                    }),
                    cols,
                }
            }
        }
    }

    fn agg_func(&mut self) -> AggFunc {
        let all = if self.with_avg {
            &[AggFunc::Count, AggFunc::Sum, AggFunc::Min, AggFunc::Max, AggFunc::Avg][..]
        } else {
            &[AggFunc::Count, AggFunc::Sum, AggFunc::Min, AggFunc::Max][..]
        };
        *all.choose(&mut self.rng).unwrap()
    }

    fn aliased(&mut self, depth: usize) -> Built {
        let b = self.table(depth);
        let alias = self.fresh("j");
        let cols = b
            .cols
            .iter()
            .map(|c| format!("{alias}.{}", c.rsplit('.').next().unwrap()))
            .collect();
        Built {
            q: Query::new(QueryKind::Rename {
                alias,
                input: Box::new(b.q),
            }),
            cols,
        }
    }

    fn project(&mut self, depth: usize) -> Built {
        let b = self.table(depth.saturating_sub(1));
        let arity = self.rng.gen_range(1..=2);
        self.project_over(b, arity)
    }

    fn project_arity(&mut self, depth: usize, arity: usize) -> Built {
        let b = self.table(depth.saturating_sub(1));
        self.project_over(b, arity)
    }

    fn project_over(&mut self, b: Built, arity: usize) -> Built {
        let mut items = Vec::new();
        for _ in 0..arity {
            let expr = self.scalar(&b.cols, 1);
            items.push(ProjItem {
                expr,
                alias: Some(self.fresh("c")),
            });
        }
        let cols = items.iter().map(|i| i.alias.clone().unwrap()).collect();
        Built {
            q: Query::new(QueryKind::Project {
                items,
                input: Box::new(b.q),
            }),
            cols,
        }
    }

    fn group_by(&mut self, depth: usize) -> Built {
        let b = self.table(depth.saturating_sub(1));
        let key_col = b.cols.choose(&mut self.rng).unwrap().clone();
        let keys = vec![Expr::Column(key_col.clone())];
        let mut items = vec![ProjItem {
            expr: Expr::Column(key_col.clone()),
            alias: Some(self.fresh("k")),
        }];
        let func = self.agg_func();
        let agg_col = b.cols.choose(&mut self.rng).unwrap().clone();
        items.push(ProjItem {
            expr: Expr::Agg {
                func,
                arg: Box::new(Expr::Column(agg_col.clone())),
            },
            alias: Some(self.fresh("g")),
        });
        let having = if self.rng.gen_bool(0.5) {
            let func = self.agg_func();
            Some(Pred::Cmp {
                op: CmpOp::Gt,
                left: Box::new(Expr::Agg {
                    func,
                    arg: Box::new(Expr::Column(agg_col)),
                }),
                right: Box::new(Expr::Lit(Value::Int(self.rng.gen_range(0..=2)))),
            })
        } else {
            None
        };
        let cols = items.iter().map(|i| i.alias.clone().unwrap()).collect();
        Built {
            q: Query::new(QueryKind::GroupBy {
                keys,
                items,
                having,
                input: Box::new(b.q),
            }),
            cols,
        }
    }

    fn scalar(&mut self, cols: &[String], depth: usize) -> Expr {
        let col = |rng: &mut ChaCha8Rng| Expr::Column(cols.choose(rng).unwrap().clone());
        if depth == 0 || self.rng.gen_bool(0.5) {
            return if self.rng.gen_bool(0.8) {
                col(&mut self.rng)
            } else {
                Expr::Lit(*DOMAIN.choose(&mut self.rng).unwrap())
            };
        }
        match self.rng.gen_range(0..4) {
            0 => Expr::Arith {
                op: *[ArithOp::Add, ArithOp::Sub, ArithOp::Mul]
                    .choose(&mut self.rng)
                    .unwrap(),
                left: Box::new(self.scalar(cols, depth - 1)),
                right: Box::new(self.scalar(cols, depth - 1)),
            },
            1 => Expr::Ite {
                cond: Box::new(self.pred(cols, 0)),
                then_value: Box::new(self.scalar(cols, depth - 1)),
                else_value: Box::new(self.scalar(cols, depth - 1)),
            },
            2 => Expr::Case {
                arms: vec![(self.pred(cols, 0), self.scalar(cols, depth - 1))],
                default: Box::new(self.scalar(cols, depth - 1)),
            },
            _ => Expr::Cast(Box::new(self.pred(cols, 0))),
        }
    }

    fn pred(&mut self, cols: &[String], depth: usize) -> Pred {
        let ops = [CmpOp::Le, CmpOp::Lt, CmpOp::Eq, CmpOp::Ne, CmpOp::Gt, CmpOp::Ge];
        let atom = |this: &mut Self| -> Pred {
            match this.rng.gen_range(0..4) {
                0 => Pred::Cmp {
                    op: *ops.choose(&mut this.rng).unwrap(),
                    left: Box::new(this.scalar(cols, 0)),
                    right: Box::new(this.scalar(cols, 0)),
                },
                1 => Pred::IsNull(Box::new(this.scalar(cols, 0))),
                2 => Pred::InList {
                    exprs: vec![this.scalar(cols, 0)],
                    rows: vec![
                        vec![*DOMAIN.choose(&mut this.rng).unwrap()],
                        vec![*DOMAIN.choose(&mut this.rng).unwrap()],
                    ],
                },
                _ => Pred::Cmp {
                    op: CmpOp::Eq,
                    left: Box::new(this.scalar(cols, 0)),
                    right: Box::new(Expr::Lit(*DOMAIN.choose(&mut this.rng).unwrap())),
                },
            }
        };
        if depth == 0 {
            return atom(self);
        }
        match self.rng.gen_range(0..5) {
            0 => Pred::And(Box::new(atom(self)), Box::new(atom(self))),
            1 => Pred::Or(Box::new(atom(self)), Box::new(atom(self))),
            2 => Pred::Not(Box::new(atom(self))),
            3 => {
                // Uncorrelated membership subquery.
                let sub = self.project_arity(1, 1);
                Pred::InQuery {
                    exprs: vec![self.scalar(cols, 0)],
                    query: Box::new(sub.q),
                }
            }
            _ => atom(self),
        }
    }
}

// ---------------------------------------------------------------------------
// Pinning harness
// ---------------------------------------------------------------------------

use sqleq_core::encode::encode_query;
use sqleq_core::formula::TermPool;
use sqleq_core::infer::{infer_attributes, infer_tuples};
use sqleq_core::model::{read_rows, tuple_queries};
use sqleq_core::solver::{SatResult, Solver};
use sqleq_core::symdb::{build_symbolic_db, pin_database};
use sqleq_core::wf::output_types;

/// Encodes `q` over a symbolic database pinned to `db`, solves, and returns
/// the output relation read from the model (live rows in list order), or
/// `None` when the pinned formula is unsatisfiable.
pub fn pinned_output(
    schema: &Schema,
    db: &Database,
    q: &Query,
    bound: usize,
) -> sqleq_core::Result<Option<Relation>> {
    let mut pool = TermPool::new();
    let gamma = build_symbolic_db(&mut pool, schema, bound)?;
    let pin = pin_database(&mut pool, &gamma, schema, db)?;
    let attrs = infer_attributes(schema, q)?;
    let tuples = infer_tuples(&mut pool, &gamma, q, "q1")?;
    let (phi, out) = encode_query(&mut pool, schema, &attrs, &tuples, q, "q1")?;
    let full = pool.and2(phi, pin);
    let script = pool.emit_smtlib(full, false);

    let out_attrs = attrs.of(q).to_vec();
    let types = output_types(schema, q)?;
    let queries = tuple_queries(&pool, &out, &out_attrs);
    let solver = Solver::from_env()?;
    match solver.check(&script, &queries, 60_000)? {
        SatResult::Sat(model) => {
            let rows = read_rows(&model, &pool, &out, &out_attrs, &types)?
                .into_iter()
                .flatten()
                .collect();
            Ok(Some(Relation::new(out_attrs, rows)))
        }
        SatResult::Unsat => Ok(None),
        SatResult::Unknown(r) => Err(sqleq_core::Error::Solver(format!("unknown: {r:?}"))),
    }
}

/// Parses, resolves, and checks a SQL query against a schema.
pub fn sql(schema: &Schema, text: &str) -> Query {
    let mut i = sqleq_core::parser::Interner::default();
    let q = sqleq_core::parser::parse_sql(text, &mut i).unwrap();
    let q = sqleq_core::resolve::resolve(schema, &q).unwrap();
    sqleq_core::wf::check_well_formed(schema, &q).unwrap();
    q
}
