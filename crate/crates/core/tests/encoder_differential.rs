//! Differential checks of the symbolic encoder against the interpreter:
//! pin the symbolic database to a concrete one, solve, read the encoded
//! output relation out of the model, and compare with direct evaluation.

mod common;

use common::{gen_database, pinned_output, small_schema, QueryGen, DOMAIN};
use sqleq_core::ast::{ColType, Schema};
use sqleq_core::eval::{bag_equal, eval_query, Database, Relation};

fn check_pinned(schema: &Schema, db: &Database, q: &sqleq_core::ast::Query, bound: usize) {
    let expected = eval_query(db, q).unwrap();
    let got = pinned_output(schema, db, q, bound)
        .unwrap()
        .unwrap_or_else(|| panic!("pinned formula unsat for {q:?} on {db:?}"));
    assert!(
        bag_equal(&expected, &got).unwrap(),
        "oracle {:?} vs model {:?}\nquery {:?}\ndb {:?}",
        expected.rows,
        got.rows,
        q,
        db
    );
}

fn run_sql(schema: &Schema, sql: &str) -> sqleq_core::ast::Query {
    let mut i = sqleq_core::parser::Interner::default();
    let q = sqleq_core::parser::parse_sql(sql, &mut i).unwrap();
    let q = sqleq_core::resolve::resolve(schema, &q).unwrap();
    sqleq_core::wf::check_well_formed(schema, &q).unwrap();
    q
}

fn db_r(rows: Vec<Vec<sqleq_core::value::Value>>) -> Database {
    use sqleq_core::eval::Relation;
    let mut db = Database::default();
    db.relations.insert(
        "R".into(),
        Relation::new(vec!["a".into(), "b".into()], rows),
    );
    db.relations.insert(
        "S".into(),
        Relation::new(vec!["c".into(), "d".into()], vec![]),
    );
    db
}

fn v(i: i64) -> sqleq_core::value::Value {
    sqleq_core::value::Value::Int(i)
}

const NULL: sqleq_core::value::Value = sqleq_core::value::Value::Null;

#[test]
fn pinned_scan_and_filter() {
    let schema = small_schema();
    let db = db_r(vec![vec![v(1), NULL], vec![v(2), v(5)]]);
    check_pinned(&schema, &db, &run_sql(&schema, "SELECT a, b FROM R"), 2);
    check_pinned(
        &schema,
        &db,
        &run_sql(&schema, "SELECT a FROM R WHERE b > 1"),
        2,
    );
    check_pinned(
        &schema,
        &db,
        &run_sql(&schema, "SELECT a FROM R WHERE b = b"),
        2,
    );
}

#[test]
fn pinned_aggregates() {
    let schema = small_schema();
    for rows in [
        vec![],
        vec![vec![NULL, NULL]],
        vec![vec![v(1), NULL], vec![v(2), v(5)]],
    ] {
        let db = db_r(rows);
        check_pinned(
            &schema,
            &db,
            &run_sql(&schema, "SELECT COUNT(a), SUM(b), MIN(a), MAX(b) FROM R"),
            2,
        );
    }
}

#[test]
fn pinned_group_by_having() {
    let schema = small_schema();
    let db = db_r(vec![
        vec![v(1), v(10)],
        vec![v(1), v(20)],
        vec![v(2), NULL],
    ]);
    check_pinned(
        &schema,
        &db,
        &run_sql(&schema, "SELECT a, COUNT(b) FROM R GROUP BY a"),
        3,
    );
    check_pinned(
        &schema,
        &db,
        &run_sql(
            &schema,
            "SELECT a, SUM(b) FROM R GROUP BY a HAVING COUNT(b) > 1",
        ),
        3,
    );
}

#[test]
fn pinned_joins() {
    let schema = small_schema();
    let mut db = db_r(vec![vec![v(1), v(10)], vec![v(2), v(20)]]);
    db.relations.get_mut("S").unwrap().rows = vec![vec![v(1), v(100)], vec![v(3), NULL]];
    for sql in [
        "SELECT * FROM R CROSS JOIN S",
        "SELECT * FROM R JOIN S ON a = c",
        "SELECT * FROM R LEFT JOIN S ON a = c",
        "SELECT * FROM R RIGHT JOIN S ON a = c",
        "SELECT * FROM R FULL JOIN S ON a = c",
    ] {
        check_pinned(&schema, &db, &run_sql(&schema, sql), 2);
    }
}

#[test]
fn pinned_set_operations() {
    let schema = small_schema();
    let mut db = db_r(vec![vec![v(1), v(1)], vec![v(1), v(1)], vec![v(2), v(0)]]);
    db.relations.get_mut("S").unwrap().rows = vec![vec![v(1), v(1)], vec![v(9), v(9)]];
    for sql in [
        "SELECT a, b FROM R UNION SELECT c, d FROM S",
        "SELECT a, b FROM R UNION ALL SELECT c, d FROM S",
        "SELECT a, b FROM R INTERSECT SELECT c, d FROM S",
        "SELECT a, b FROM R INTERSECT ALL SELECT c, d FROM S",
        "SELECT a, b FROM R EXCEPT SELECT c, d FROM S",
        "SELECT a, b FROM R EXCEPT ALL SELECT c, d FROM S",
        "SELECT DISTINCT a, b FROM R",
    ] {
        check_pinned(&schema, &db, &run_sql(&schema, sql), 3);
    }
}

#[test]
fn pinned_membership_and_case() {
    let schema = small_schema();
    let mut db = db_r(vec![vec![v(1), v(10)], vec![NULL, v(20)]]);
    db.relations.get_mut("S").unwrap().rows = vec![vec![v(1), v(0)]];
    for sql in [
        "SELECT b FROM R WHERE a IN (SELECT c FROM S)",
        "SELECT b FROM R WHERE a NOT IN (SELECT c FROM S)",
        "SELECT b FROM R WHERE a IN (1, 2)",
        "SELECT CASE WHEN a IS NULL THEN 0 ELSE a END FROM R",
        "SELECT CAST(a > 0 AS INT) FROM R",
        "SELECT IF(a = 1, b, 0 - b) FROM R",
    ] {
        check_pinned(&schema, &db, &run_sql(&schema, sql), 2);
    }
}

#[test]
fn pinned_with_clause() {
    let schema = small_schema();
    let db = db_r(vec![vec![v(1), v(10)], vec![v(2), v(20)]]);
    check_pinned(
        &schema,
        &db,
        &run_sql(
            &schema,
            "WITH t AS (SELECT a FROM R WHERE b > 10) SELECT t.a FROM t",
        ),
        2,
    );
}

#[test]
fn pinned_empty_inputs() {
    let schema = small_schema();
    let db = db_r(vec![]);
    for sql in [
        "SELECT a FROM R",
        "SELECT COUNT(a) FROM R",
        "SELECT * FROM R LEFT JOIN S ON a = c",
        "SELECT a, b FROM R UNION SELECT c, d FROM S",
    ] {
        check_pinned(&schema, &db, &run_sql(&schema, sql), 2);
    }
}

#[test]
fn pinned_random_queries_small() {
    // A fast randomized sweep; the acceptance suite runs the full one.
    let schema = small_schema();
    let mut g = QueryGen::new(&schema, 7);
    for i in 0..15 {
        let q = g.query(false);
        let db = gen_database(&mut g.rng, &schema, 2, &DOMAIN);
        let expected = eval_query(&db, &q).unwrap();
        let got = pinned_output(&schema, &db, &q, 2).unwrap().unwrap();
        assert!(
            bag_equal(&expected, &got).unwrap(),
            "case {i}: oracle {:?} vs model {:?}\nquery {:?}\ndb {:?}",
            expected.rows,
            got.rows,
            q,
            db
        );
    }
}

#[test]
fn bool_columns_read_back_typed() {
    let schema = Schema {
        relations: vec![sqleq_core::ast::RelationSchema {
            name: "T".into(),
            attrs: vec![("f".into(), ColType::Bool), ("x".into(), ColType::Int)],
        }],
    };
    let mut db = Database::default();
    db.relations.insert(
        "T".into(),
        Relation::new(
            vec!["f".into(), "x".into()],
            vec![
                vec![sqleq_core::value::Value::Bool(true), v(1)],
                vec![sqleq_core::value::Value::Bool(false), v(2)],
            ],
        ),
    );
    let q = run_sql(&schema, "SELECT f, x FROM T WHERE f = TRUE");
    check_pinned(&schema, &db, &q, 2);
}

#[test]
fn pinned_order_by_matches_selection_sort() {
    let schema = small_schema();
    let mut g = QueryGen::new(&schema, 99);
    for i in 0..8 {
        let db = gen_database(&mut g.rng, &schema, 4, &DOMAIN);
        for sql in [
            "SELECT a, b FROM R ORDER BY a",
            "SELECT a, b FROM R ORDER BY a DESC",
            "SELECT b, a FROM R ORDER BY b, a",
        ] {
            let q = run_sql(&schema, sql);
            let expected = eval_query(&db, &q).unwrap();
            let got = pinned_output(&schema, &db, &q, 4).unwrap().unwrap();
            assert_eq!(
                expected.rows, got.rows,
                "case {i} `{sql}`: oracle {:?} vs model {:?} on {db:?}",
                expected.rows, got.rows
            );
        }
    }
}

#[test]
fn null_payloads_never_influence_results() {
    // Fix a database with nulls, then additionally pin the null attributes'
    // integer payloads to two different values: satisfiability and the
    // decoded output must not change.
    use sqleq_core::formula::TermPool;
    use sqleq_core::infer::{infer_attributes, infer_tuples};
    use sqleq_core::model::{read_rows, tuple_queries};
    use sqleq_core::solver::{SatResult, Solver};
    use sqleq_core::symdb::{build_symbolic_db, pin_database};
    use sqleq_core::wf::output_types;

    let schema = small_schema();
    let mut db = db_r(vec![vec![NULL, v(1)], vec![v(2), NULL]]);
    db.relations.get_mut("S").unwrap().rows = vec![vec![NULL, v(0)]];
    let q = run_sql(
        &schema,
        "SELECT a, b FROM R WHERE a IN (SELECT c FROM S) OR b = 1 ORDER BY a",
    );

    let run = |payload: i64| -> Vec<Option<Vec<sqleq_core::value::Value>>> {
        let mut pool = TermPool::new();
        let gamma = build_symbolic_db(&mut pool, &schema, 2).unwrap();
        let pin = pin_database(&mut pool, &gamma, &schema, &db).unwrap();
        // Pin every null attribute's payload explicitly.
        let mut extra = vec![pin];
        for rs in &schema.relations {
            let tuples = gamma.tuples_of(&rs.name).unwrap().to_vec();
            let rel = &db.relations[&rs.name];
            for (i, row) in rel.rows.iter().enumerate() {
                for ((aname, _), value) in rs.attrs.iter().zip(row) {
                    if value.is_null() {
                        let attr = pool.attr(&format!("{}.{}", rs.name, aname));
                        let val = pool.attr_val(attr, tuples[i]);
                        let c = pool.int(payload);
                        extra.push(pool.eq_int(val, c));
                    }
                }
            }
        }
        let attrs = infer_attributes(&schema, &q).unwrap();
        let tuples = infer_tuples(&mut pool, &gamma, &q, "q1").unwrap();
        let (phi, out) =
            sqleq_core::encode::encode_query(&mut pool, &schema, &attrs, &tuples, &q, "q1")
                .unwrap();
        extra.push(phi);
        let full = pool.and(extra);
        let script = pool.emit_smtlib(full, false);
        let out_attrs = attrs.of(&q).to_vec();
        let types = output_types(&schema, &q).unwrap();
        let queries = tuple_queries(&pool, &out, &out_attrs);
        let solver = Solver::from_env().unwrap();
        let SatResult::Sat(model) = solver.check(&script, &queries, 60_000).unwrap() else {
            panic!("pinned formula must stay satisfiable");
        };
        read_rows(&model, &pool, &out, &out_attrs, &types).unwrap()
    };

    let with_seven = run(7);
    let with_thirteen = run(13);
    assert_eq!(with_seven, with_thirteen);
    let expected = eval_query(&db, &q).unwrap();
    let got: Vec<_> = with_seven.into_iter().flatten().collect();
    assert_eq!(expected.rows, got);
}
