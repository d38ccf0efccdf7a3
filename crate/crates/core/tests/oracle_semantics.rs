//! Golden tests for the reference interpreter: the worked join example, the
//! grouping example, aggregate null handling, set and bag operations, and
//! sorting.

use sqleq_core::ast::*;
use sqleq_core::eval::{bag_equal, eval_query, list_equal, Database, Relation};
use sqleq_core::parser::{parse_sql, Interner};
use sqleq_core::resolve::resolve;
use sqleq_core::sexpr::read_query;
use sqleq_core::value::Value;
use sqleq_core::wf::check_well_formed;

fn v(i: i64) -> Value {
    Value::Int(i)
}

const NULL: Value = Value::Null;

/// EMP(eid, ename, did) and DEPT(id, dname); names are interned integers.
fn emp_dept_schema() -> Schema {
    Schema {
        relations: vec![
            RelationSchema {
                name: "EMP".into(),
                attrs: vec![
                    ("eid".into(), ColType::Int),
                    ("ename".into(), ColType::Int),
                    ("did".into(), ColType::Int),
                ],
            },
            RelationSchema {
                name: "DEPT".into(),
                attrs: vec![("id".into(), ColType::Int), ("dname".into(), ColType::Int)],
            },
        ],
    }
}

/// EMP = {(1,A,11),(2,B,12)}, DEPT = {(10,C),(11,D)} with A,B,C,D as 1001..
fn emp_dept_db() -> Database {
    let mut db = Database::default();
    db.relations.insert(
        "EMP".into(),
        Relation::new(
            vec!["eid".into(), "ename".into(), "did".into()],
            vec![vec![v(1), v(1001), v(11)], vec![v(2), v(1002), v(12)]],
        ),
    );
    db.relations.insert(
        "DEPT".into(),
        Relation::new(
            vec!["id".into(), "dname".into()],
            vec![vec![v(10), v(1003)], vec![v(11), v(1004)]],
        ),
    );
    db
}

fn run(db: &Database, schema: &Schema, sql: &str) -> Relation {
    let mut i = Interner::default();
    let q = parse_sql(sql, &mut i).unwrap();
    let q = resolve(schema, &q).unwrap();
    check_well_formed(schema, &q).unwrap();
    eval_query(db, &q).unwrap()
}

fn run_alg(db: &Database, schema: &Schema, alg: &str) -> Relation {
    let q = read_query(alg).unwrap();
    let q = resolve(schema, &q).unwrap();
    check_well_formed(schema, &q).unwrap();
    eval_query(db, &q).unwrap()
}

#[test]
fn join_example_inner() {
    let r = run(
        &emp_dept_db(),
        &emp_dept_schema(),
        "SELECT * FROM EMP JOIN DEPT ON did = id",
    );
    assert_eq!(r.rows, vec![vec![v(1), v(1001), v(11), v(11), v(1004)]]);
}

#[test]
fn join_example_left() {
    let r = run(
        &emp_dept_db(),
        &emp_dept_schema(),
        "SELECT * FROM EMP LEFT JOIN DEPT ON did = id",
    );
    assert_eq!(
        r.rows,
        vec![
            vec![v(1), v(1001), v(11), v(11), v(1004)],
            vec![v(2), v(1002), v(12), NULL, NULL],
        ]
    );
}

#[test]
fn join_example_right() {
    let r = run(
        &emp_dept_db(),
        &emp_dept_schema(),
        "SELECT * FROM EMP RIGHT JOIN DEPT ON did = id",
    );
    assert_eq!(
        r.rows,
        vec![
            vec![NULL, NULL, NULL, v(10), v(1003)],
            vec![v(1), v(1001), v(11), v(11), v(1004)],
        ]
    );
}

#[test]
fn join_example_full() {
    let r = run(
        &emp_dept_db(),
        &emp_dept_schema(),
        "SELECT * FROM EMP FULL JOIN DEPT ON did = id",
    );
    assert_eq!(
        r.rows,
        vec![
            vec![v(1), v(1001), v(11), v(11), v(1004)],
            vec![v(2), v(1002), v(12), NULL, NULL],
            vec![NULL, NULL, NULL, v(10), v(1003)],
        ]
    );
}

#[test]
fn join_example_product() {
    let r = run(
        &emp_dept_db(),
        &emp_dept_schema(),
        "SELECT * FROM EMP CROSS JOIN DEPT",
    );
    assert_eq!(
        r.rows,
        vec![
            vec![v(1), v(1001), v(11), v(10), v(1003)],
            vec![v(1), v(1001), v(11), v(11), v(1004)],
            vec![v(2), v(1002), v(12), v(10), v(1003)],
            vec![v(2), v(1002), v(12), v(11), v(1004)],
        ]
    );
}

#[test]
fn product_with_empty_relation_is_empty() {
    let mut db = emp_dept_db();
    db.relations.get_mut("DEPT").unwrap().rows.clear();
    let r = run(&db, &emp_dept_schema(), "SELECT * FROM EMP CROSS JOIN DEPT");
    assert!(r.rows.is_empty());
}

fn r_schema() -> Schema {
    Schema {
        relations: vec![RelationSchema {
            name: "R".into(),
            attrs: vec![("a".into(), ColType::Int), ("b".into(), ColType::Int)],
        }],
    }
}

fn r_db(rows: Vec<Vec<Value>>) -> Database {
    let mut db = Database::default();
    db.relations.insert(
        "R".into(),
        Relation::new(vec!["a".into(), "b".into()], rows),
    );
    db
}

#[test]
fn filter_keeps_only_true_rows() {
    // Null = Null does not evaluate to true, so the row is dropped.
    let db = r_db(vec![vec![NULL, v(0)], vec![v(1), v(0)]]);
    let r = run(&db, &r_schema(), "SELECT a FROM R WHERE a = a");
    assert_eq!(r.rows, vec![vec![v(1)]]);
}

#[test]
fn aggregates_over_nulls() {
    // Count skips nulls; Sum/Min of an all-null column is Null.
    let db = r_db(vec![vec![v(1), NULL], vec![NULL, NULL], vec![v(2), NULL]]);
    let r = run(&db, &r_schema(), "SELECT COUNT(a), SUM(b), MIN(a) FROM R");
    assert_eq!(r.rows, vec![vec![v(2), NULL, v(1)]]);
}

#[test]
fn min_ignores_nulls() {
    let db = r_db(vec![vec![v(3), v(0)], vec![NULL, v(0)], vec![v(1), v(0)]]);
    let r = run(&db, &r_schema(), "SELECT MIN(a) FROM R");
    assert_eq!(r.rows, vec![vec![v(1)]]);
}

#[test]
fn group_by_having_example() {
    // EMP(id, gender, age, sal); average per gender with a HAVING filter.
    let schema = Schema {
        relations: vec![RelationSchema {
            name: "EMP".into(),
            attrs: vec![
                ("id".into(), ColType::Int),
                ("gender".into(), ColType::Int),
                ("age".into(), ColType::Int),
                ("sal".into(), ColType::Int),
            ],
        }],
    };
    let mut db = Database::default();
    db.relations.insert(
        "EMP".into(),
        Relation::new(
            vec!["id".into(), "gender".into(), "age".into(), "sal".into()],
            vec![
                vec![v(1), v(0), v(25), v(40000)],
                vec![v(2), v(0), v(35), v(24000)],
                vec![v(3), v(1), v(30), v(50000)],
                vec![v(4), v(1), v(15), v(90000)],
            ],
        ),
    );
    let r = run(
        &db,
        &schema,
        "SELECT AVG(age), AVG(sal) FROM EMP WHERE age > 20 \
         GROUP BY gender HAVING AVG(sal) > 30000",
    );
    // Gender 0 group: ages 25,35 -> avg 30; sal 40000,24000 -> avg 32000.
    // Gender 1 group: only id 3 passes the WHERE; avg sal 50000.
    assert_eq!(r.rows, vec![vec![v(30), v(32000)], vec![v(30), v(50000)]]);
}

#[test]
fn avg_compares_exactly() {
    // avg(a) = 5/2; the comparison avg(a) > 2 must hold even though
    // truncation would give exactly 2.
    let db = r_db(vec![vec![v(2), v(0)], vec![v(3), v(0)]]);
    let r = run(
        &db,
        &r_schema(),
        "SELECT b FROM R GROUP BY b HAVING AVG(a) > 2",
    );
    assert_eq!(r.rows, vec![vec![v(0)]]);
    let r = run(
        &db,
        &r_schema(),
        "SELECT b FROM R GROUP BY b HAVING AVG(a) = 2",
    );
    assert!(r.rows.is_empty());
    // Materialized, the average truncates toward zero.
    let r = run(&db, &r_schema(), "SELECT AVG(a) FROM R");
    assert_eq!(r.rows, vec![vec![v(2)]]);
}

#[test]
fn distinct_keeps_first_occurrence() {
    let db = r_db(vec![
        vec![v(2), v(9)],
        vec![v(1), v(9)],
        vec![v(2), v(9)],
        vec![NULL, v(9)],
        vec![NULL, v(9)],
    ]);
    let r = run(&db, &r_schema(), "SELECT DISTINCT a FROM R");
    assert_eq!(r.rows, vec![vec![v(2)], vec![v(1)], vec![NULL]]);
}

#[test]
fn except_all_removes_one_occurrence_per_match() {
    let schema = Schema {
        relations: vec![
            RelationSchema {
                name: "A".into(),
                attrs: vec![("x".into(), ColType::Int)],
            },
            RelationSchema {
                name: "B".into(),
                attrs: vec![("y".into(), ColType::Int)],
            },
        ],
    };
    let mut db = Database::default();
    db.relations.insert(
        "A".into(),
        Relation::new(
            vec!["x".into()],
            vec![vec![v(1)], vec![v(1)], vec![v(2)], vec![v(3)]],
        ),
    );
    db.relations.insert(
        "B".into(),
        Relation::new(vec!["y".into()], vec![vec![v(1)], vec![v(3)], vec![v(3)]]),
    );
    let r = run(&db, &schema, "SELECT x FROM A EXCEPT ALL SELECT y FROM B");
    assert_eq!(r.rows, vec![vec![v(1)], vec![v(2)]]);
    let r = run(&db, &schema, "SELECT x FROM A EXCEPT SELECT y FROM B");
    assert_eq!(r.rows, vec![vec![v(2)]]);
    let r = run(&db, &schema, "SELECT x FROM A INTERSECT ALL SELECT y FROM B");
    assert_eq!(r.rows, vec![vec![v(1)], vec![v(3)]]);
    let r = run(&db, &schema, "SELECT x FROM A INTERSECT SELECT y FROM B");
    assert_eq!(r.rows, vec![vec![v(1)], vec![v(3)]]);
}

#[test]
fn order_by_nulls_first_ascending() {
    let db = r_db(vec![
        vec![v(2), v(1)],
        vec![NULL, v(2)],
        vec![v(1), v(3)],
        vec![v(1), v(0)],
    ]);
    let r = run(&db, &r_schema(), "SELECT a, b FROM R ORDER BY a");
    assert_eq!(
        r.rows,
        vec![
            vec![NULL, v(2)],
            vec![v(1), v(3)],
            vec![v(1), v(0)],
            vec![v(2), v(1)],
        ]
    );
    // Descending puts nulls last; ties stay in input order.
    let r = run(&db, &r_schema(), "SELECT a, b FROM R ORDER BY a DESC");
    assert_eq!(
        r.rows,
        vec![
            vec![v(2), v(1)],
            vec![v(1), v(3)],
            vec![v(1), v(0)],
            vec![NULL, v(2)],
        ]
    );
}

#[test]
fn with_clause_binds_and_shadows() {
    let db = r_db(vec![vec![v(1), v(10)], vec![v(2), v(20)]]);
    let r = run(
        &db,
        &r_schema(),
        "WITH T AS (SELECT a FROM R WHERE a > 1) SELECT T.a FROM T",
    );
    assert_eq!(r.rows, vec![vec![v(2)]]);
}

#[test]
fn in_subquery_and_case() {
    let db = r_db(vec![vec![v(1), v(10)], vec![v(2), v(20)], vec![NULL, v(30)]]);
    let r = run(
        &db,
        &r_schema(),
        "SELECT b FROM R WHERE a IN (SELECT a FROM R WHERE b < 20)",
    );
    assert_eq!(r.rows, vec![vec![v(10)]]);
    // A Null scrutinee compares false against every arm, falling through.
    let r = run(
        &db,
        &r_schema(),
        "SELECT CASE WHEN a = 1 THEN 100 ELSE 0 END FROM R",
    );
    assert_eq!(r.rows, vec![vec![v(100)], vec![v(0)], vec![v(0)]]);
}

#[test]
fn null_not_in_empty_list_semantics() {
    // Membership over a Null element: each comparison is false, so NOT IN
    // keeps the row (documented divergence from SQL's NULL-IN behavior).
    let db = r_db(vec![vec![NULL, v(1)]]);
    let r = run(&db, &r_schema(), "SELECT b FROM R WHERE a NOT IN (1, 2)");
    assert_eq!(r.rows, vec![vec![v(1)]]);
}

#[test]
fn bag_and_list_equality() {
    let r1 = Relation::new(vec!["x".into()], vec![vec![v(1)], vec![v(2)]]);
    let r2 = Relation::new(vec!["y".into()], vec![vec![v(2)], vec![v(1)]]);
    assert!(bag_equal(&r1, &r2).unwrap());
    assert!(!list_equal(&r1, &r2).unwrap());
    let n1 = Relation::new(vec!["x".into()], vec![vec![NULL]]);
    let n2 = Relation::new(vec!["y".into()], vec![vec![NULL]]);
    assert!(bag_equal(&n1, &n2).unwrap());
    assert!(list_equal(&n1, &n2).unwrap());
    let d1 = Relation::new(vec!["x".into()], vec![vec![v(1)], vec![v(1)]]);
    let d2 = Relation::new(vec!["y".into()], vec![vec![v(1)]]);
    assert!(!bag_equal(&d1, &d2).unwrap());
    let bad = bag_equal(
        &Relation::new(vec!["x".into()], vec![]),
        &Relation::new(vec!["y".into(), "z".into()], vec![]),
    );
    assert!(bad.is_err());
}

#[test]
fn division_is_euclidean_and_by_zero_errors() {
    let db = r_db(vec![vec![v(-3), v(2)]]);
    let r = run(&db, &r_schema(), "SELECT a / b, a % b FROM R");
    assert_eq!(r.rows, vec![vec![v(-2), v(1)]]);
    let mut i = Interner::default();
    let q = parse_sql("SELECT a / 0 FROM R", &mut i).unwrap();
    let q = resolve(&r_schema(), &q).unwrap();
    let err = eval_query(&db, &q).unwrap_err();
    assert!(matches!(err, sqleq_core::Error::Eval(_)), "{err}");
}

#[test]
fn algebra_escape_hatch_matches_sql() {
    let db = r_db(vec![vec![v(1), v(5)], vec![v(2), v(6)]]);
    let from_sql = run(&db, &r_schema(), "SELECT a FROM R WHERE b > 5");
    let from_alg = run_alg(
        &db,
        &r_schema(),
        "(project ((as a R.a)) (filter (> R.b 5) (relation R)))",
    );
    assert!(list_equal(&from_sql, &from_alg).unwrap());
}

#[test]
fn desugared_joins_match_direct_evaluation() {
    // Inner join as a filtered product, on several databases.
    let dbs = [
        r_db(vec![]),
        r_db(vec![vec![v(1), v(1)], vec![v(2), NULL]]),
        r_db(vec![vec![NULL, NULL], vec![v(0), v(0)], vec![v(1), v(0)]]),
    ];
    for db in &dbs {
        let joined = run(
            db,
            &r_schema(),
            "SELECT * FROM R x JOIN R y ON x.a = y.b",
        );
        let filtered = run(
            db,
            &r_schema(),
            "SELECT * FROM R x CROSS JOIN R y WHERE x.a = y.b",
        );
        assert!(list_equal(&joined, &filtered).unwrap());
    }
}
