//! S-expression form of the query algebra.
//!
//! Problem files normally carry SQL text, but a query string that starts with
//! `(` is read as the algebra directly. The printer and reader round-trip:
//! `read(print(q))` is structurally identical to `q`.

use crate::ast::*;
use crate::error::{Error, Result};
use crate::value::Value;

// ---------------------------------------------------------------------------
// Generic S-expressions
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum Sexpr {
    Atom(String),
    List(Vec<Sexpr>),
}

impl Sexpr {
    fn atom(&self) -> Result<&str> {
        match self {
            Sexpr::Atom(s) => Ok(s),
            Sexpr::List(_) => Err(Error::Syntax {
                pos: crate::error::Pos { line: 0, col: 0 },
                msg: "expected atom, found list".into(),
            }),
        }
    }

    fn list(&self) -> Result<&[Sexpr]> {
        match self {
            Sexpr::List(items) => Ok(items),
            Sexpr::Atom(a) => Err(syntax(format!("expected list, found atom `{a}`"))),
        }
    }
}

fn syntax(msg: impl Into<String>) -> Error {
    Error::Syntax {
        pos: crate::error::Pos { line: 0, col: 0 },
        msg: msg.into(),
    }
}

pub fn parse_sexpr(src: &str) -> Result<Sexpr> {
    let mut chars = src.chars().peekable();
    let e = parse_one(&mut chars)?;
    for c in chars {
        if !c.is_whitespace() {
            return Err(syntax("trailing input after s-expression"));
        }
    }
    Ok(e)
}

fn parse_one(chars: &mut std::iter::Peekable<std::str::Chars>) -> Result<Sexpr> {
    while matches!(chars.peek(), Some(c) if c.is_whitespace()) {
        chars.next();
    }
    match chars.peek() {
        None => Err(syntax("unexpected end of input")),
        Some('(') => {
            chars.next();
            let mut items = Vec::new();
            loop {
                while matches!(chars.peek(), Some(c) if c.is_whitespace()) {
                    chars.next();
                }
                match chars.peek() {
                    Some(')') => {
                        chars.next();
                        return Ok(Sexpr::List(items));
                    }
                    None => return Err(syntax("unclosed `(`")),
                    _ => items.push(parse_one(chars)?),
                }
            }
        }
        Some(')') => Err(syntax("unexpected `)`")),
        _ => {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_whitespace() || c == '(' || c == ')' {
                    break;
                }
                s.push(c);
                chars.next();
            }
            Ok(Sexpr::Atom(s))
        }
    }
}

// ---------------------------------------------------------------------------
// Reading queries
// ---------------------------------------------------------------------------

pub fn read_query(src: &str) -> Result<Query> {
    let e = parse_sexpr(src)?;
    query_of(&e)
}

fn query_of(e: &Sexpr) -> Result<Query> {
    let items = e.list()?;
    let head = items
        .first()
        .ok_or_else(|| syntax("empty query form"))?
        .atom()?;
    let kind = match head {
        "relation" => {
            expect_len(items, 2, head)?;
            QueryKind::Relation(items[1].atom()?.to_string())
        }
        "project" => {
            expect_len(items, 3, head)?;
            QueryKind::Project {
                items: proj_items_of(&items[1])?,
                input: Box::new(query_of(&items[2])?),
            }
        }
        "filter" => {
            expect_len(items, 3, head)?;
            QueryKind::Filter {
                pred: pred_of(&items[1])?,
                input: Box::new(query_of(&items[2])?),
            }
        }
        "rename" => {
            expect_len(items, 3, head)?;
            QueryKind::Rename {
                alias: items[1].atom()?.to_string(),
                input: Box::new(query_of(&items[2])?),
            }
        }
        "product" => {
            expect_len(items, 3, head)?;
            QueryKind::Join {
                kind: JoinKind::Product,
                pred: None,
                left: Box::new(query_of(&items[1])?),
                right: Box::new(query_of(&items[2])?),
            }
        }
        "join" | "ljoin" | "rjoin" | "fjoin" => {
            expect_len(items, 4, head)?;
            let kind = match head {
                "join" => JoinKind::Inner,
                "ljoin" => JoinKind::Left,
                "rjoin" => JoinKind::Right,
                _ => JoinKind::Full,
            };
            QueryKind::Join {
                kind,
                pred: Some(pred_of(&items[1])?),
                left: Box::new(query_of(&items[2])?),
                right: Box::new(query_of(&items[3])?),
            }
        }
        "union" | "unionall" | "intersect" | "intersectall" | "except" | "exceptall" => {
            expect_len(items, 3, head)?;
            let op = match head {
                "union" => CollOp::Union,
                "unionall" => CollOp::UnionAll,
                "intersect" => CollOp::Intersect,
                "intersectall" => CollOp::IntersectAll,
                "except" => CollOp::Except,
                _ => CollOp::ExceptAll,
            };
            QueryKind::Coll {
                op,
                left: Box::new(query_of(&items[1])?),
                right: Box::new(query_of(&items[2])?),
            }
        }
        "distinct" => {
            expect_len(items, 2, head)?;
            QueryKind::Distinct(Box::new(query_of(&items[1])?))
        }
        "groupby" => {
            expect_len(items, 5, head)?;
            let keys = items[1]
                .list()?
                .iter()
                .map(expr_of)
                .collect::<Result<Vec<_>>>()?;
            let proj = proj_items_of(&items[2])?;
            let having = match &items[3] {
                Sexpr::Atom(a) if a == "true" => None,
                p => Some(pred_of(p)?),
            };
            QueryKind::GroupBy {
                keys,
                items: proj,
                having,
                input: Box::new(query_of(&items[4])?),
            }
        }
        "with" => {
            expect_len(items, 3, head)?;
            let mut bindings = Vec::new();
            for b in items[1].list()? {
                let pair = b.list()?;
                expect_len(pair, 2, "with binding")?;
                bindings.push((pair[0].atom()?.to_string(), query_of(&pair[1])?));
            }
            QueryKind::With {
                bindings,
                body: Box::new(query_of(&items[2])?),
            }
        }
        "orderby" => {
            expect_len(items, 4, head)?;
            let keys = items[1]
                .list()?
                .iter()
                .map(expr_of)
                .collect::<Result<Vec<_>>>()?;
            let asc = match items[2].atom()? {
                "asc" => true,
                "desc" => false,
                other => return Err(syntax(format!("expected asc/desc, got `{other}`"))),
            };
            QueryKind::OrderBy {
                keys,
                asc,
                input: Box::new(query_of(&items[3])?),
            }
        }
        other => return Err(syntax(format!("unknown query form `{other}`"))),
    };
    Ok(Query::new(kind))
}

fn expect_len(items: &[Sexpr], n: usize, what: &str) -> Result<()> {
    if items.len() == n {
        Ok(())
    } else {
        Err(syntax(format!(
            "`{what}` takes {} arguments, got {}",
            n - 1,
            items.len() - 1
        )))
    }
}

fn proj_items_of(e: &Sexpr) -> Result<Vec<ProjItem>> {
    e.list()?
        .iter()
        .map(|item| match item {
            Sexpr::List(parts)
                if parts.len() == 3 && matches!(&parts[0], Sexpr::Atom(a) if a == "as") =>
            {
                Ok(ProjItem {
                    alias: Some(parts[1].atom()?.to_string()),
                    expr: expr_of(&parts[2])?,
                })
            }
            other => Ok(ProjItem {
                expr: expr_of(other)?,
                alias: None,
            }),
        })
        .collect()
}

fn value_of(e: &Sexpr) -> Result<Value> {
    let a = e.atom()?;
    Ok(match a {
        "null" => Value::Null,
        "true" => Value::Bool(true),
        "false" => Value::Bool(false),
        _ => Value::Int(
            a.parse::<i64>()
                .map_err(|_| syntax(format!("expected value, got `{a}`")))?,
        ),
    })
}

fn expr_of(e: &Sexpr) -> Result<Expr> {
    match e {
        Sexpr::Atom(a) => {
            if a == "null" {
                return Ok(Expr::Lit(Value::Null));
            }
            if a == "true" {
                return Ok(Expr::Lit(Value::Bool(true)));
            }
            if a == "false" {
                return Ok(Expr::Lit(Value::Bool(false)));
            }
            if let Ok(i) = a.parse::<i64>() {
                return Ok(Expr::Lit(Value::Int(i)));
            }
            Ok(Expr::Column(a.clone()))
        }
        Sexpr::List(items) => {
            let head = items
                .first()
                .ok_or_else(|| syntax("empty expression form"))?
                .atom()?;
            match head {
                "+" | "-" | "*" | "/" | "%" => {
                    expect_len(items, 3, head)?;
                    let op = match head {
                        "+" => ArithOp::Add,
                        "-" => ArithOp::Sub,
                        "*" => ArithOp::Mul,
                        "/" => ArithOp::Div,
                        _ => ArithOp::Mod,
                    };
                    Ok(Expr::Arith {
                        op,
                        left: Box::new(expr_of(&items[1])?),
                        right: Box::new(expr_of(&items[2])?),
                    })
                }
                "ite" => {
                    expect_len(items, 4, head)?;
                    Ok(Expr::Ite {
                        cond: Box::new(pred_of(&items[1])?),
                        then_value: Box::new(expr_of(&items[2])?),
                        else_value: Box::new(expr_of(&items[3])?),
                    })
                }
                "case" => {
                    expect_len(items, 3, head)?;
                    let arms = items[1]
                        .list()?
                        .iter()
                        .map(|arm| {
                            let pair = arm.list()?;
                            expect_len(pair, 2, "case arm")?;
                            Ok((pred_of(&pair[0])?, expr_of(&pair[1])?))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Ok(Expr::Case {
                        arms,
                        default: Box::new(expr_of(&items[2])?),
                    })
                }
                "count" | "sum" | "avg" | "min" | "max" => {
                    expect_len(items, 2, head)?;
                    let func = match head {
                        "count" => AggFunc::Count,
                        "sum" => AggFunc::Sum,
                        "avg" => AggFunc::Avg,
                        "min" => AggFunc::Min,
                        _ => AggFunc::Max,
                    };
                    Ok(Expr::Agg {
                        func,
                        arg: Box::new(expr_of(&items[1])?),
                    })
                }
                "castp" => {
                    expect_len(items, 2, head)?;
                    Ok(Expr::Cast(Box::new(pred_of(&items[1])?)))
                }
                other => Err(syntax(format!("unknown expression form `{other}`"))),
            }
        }
    }
}

fn pred_of(e: &Sexpr) -> Result<Pred> {
    match e {
        Sexpr::Atom(a) => match a.as_str() {
            "true" => Ok(Pred::Lit(Some(true))),
            "false" => Ok(Pred::Lit(Some(false))),
            "null" => Ok(Pred::Lit(None)),
            other => Err(syntax(format!("expected predicate, got `{other}`"))),
        },
        Sexpr::List(items) => {
            let head = items
                .first()
                .ok_or_else(|| syntax("empty predicate form"))?
                .atom()?;
            match head {
                "<=" | "<" | "=" | "<>" | ">" | ">=" => {
                    expect_len(items, 3, head)?;
                    let op = match head {
                        "<=" => CmpOp::Le,
                        "<" => CmpOp::Lt,
                        "=" => CmpOp::Eq,
                        "<>" => CmpOp::Ne,
                        ">" => CmpOp::Gt,
                        _ => CmpOp::Ge,
                    };
                    Ok(Pred::Cmp {
                        op,
                        left: Box::new(expr_of(&items[1])?),
                        right: Box::new(expr_of(&items[2])?),
                    })
                }
                "isnull" => {
                    expect_len(items, 2, head)?;
                    Ok(Pred::IsNull(Box::new(expr_of(&items[1])?)))
                }
                "in" => {
                    expect_len(items, 3, head)?;
                    let exprs = items[1]
                        .list()?
                        .iter()
                        .map(expr_of)
                        .collect::<Result<Vec<_>>>()?;
                    let rows = items[2]
                        .list()?
                        .iter()
                        .map(|row| row.list()?.iter().map(value_of).collect())
                        .collect::<Result<Vec<Vec<Value>>>>()?;
                    Ok(Pred::InList { exprs, rows })
                }
                "inq" => {
                    expect_len(items, 3, head)?;
                    let exprs = items[1]
                        .list()?
                        .iter()
                        .map(expr_of)
                        .collect::<Result<Vec<_>>>()?;
                    Ok(Pred::InQuery {
                        exprs,
                        query: Box::new(query_of(&items[2])?),
                    })
                }
                "and" | "or" => {
                    expect_len(items, 3, head)?;
                    let a = Box::new(pred_of(&items[1])?);
                    let b = Box::new(pred_of(&items[2])?);
                    Ok(if head == "and" {
                        Pred::And(a, b)
                    } else {
                        Pred::Or(a, b)
                    })
                }
                "not" => {
                    expect_len(items, 2, head)?;
                    Ok(Pred::Not(Box::new(pred_of(&items[1])?)))
                }
                other => Err(syntax(format!("unknown predicate form `{other}`"))),
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

pub fn print_query(q: &Query) -> String {
    let mut s = String::new();
    write_query(&mut s, q);
    s
}

fn write_query(out: &mut String, q: &Query) {
    match &q.kind {
        QueryKind::Relation(r) => {
            out.push_str("(relation ");
            out.push_str(r);
            out.push(')');
        }
        QueryKind::Project { items, input } => {
            out.push_str("(project ");
            write_proj_items(out, items);
            out.push(' ');
            write_query(out, input);
            out.push(')');
        }
        QueryKind::Filter { pred, input } => {
            out.push_str("(filter ");
            write_pred(out, pred);
            out.push(' ');
            write_query(out, input);
            out.push(')');
        }
        QueryKind::Rename { alias, input } => {
            out.push_str("(rename ");
            out.push_str(alias);
            out.push(' ');
            write_query(out, input);
            out.push(')');
        }
        QueryKind::Join {
            kind,
            pred,
            left,
            right,
        } => {
            match kind {
                JoinKind::Product => {
                    out.push_str("(product ");
                    write_query(out, left);
                    out.push(' ');
                    write_query(out, right);
                    out.push(')');
                    return;
                }
                JoinKind::Inner => out.push_str("(join "),
                JoinKind::Left => out.push_str("(ljoin "),
                JoinKind::Right => out.push_str("(rjoin "),
                JoinKind::Full => out.push_str("(fjoin "),
            }
            write_pred(out, pred.as_ref().expect("non-product join has predicate"));
            out.push(' ');
            write_query(out, left);
            out.push(' ');
            write_query(out, right);
            out.push(')');
        }
        QueryKind::Coll { op, left, right } => {
            out.push('(');
            out.push_str(op.keyword());
            out.push(' ');
            write_query(out, left);
            out.push(' ');
            write_query(out, right);
            out.push(')');
        }
        QueryKind::Distinct(input) => {
            out.push_str("(distinct ");
            write_query(out, input);
            out.push(')');
        }
        QueryKind::GroupBy {
            keys,
            items,
            having,
            input,
        } => {
            out.push_str("(groupby (");
            for (i, k) in keys.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                write_expr(out, k);
            }
            out.push_str(") ");
            write_proj_items(out, items);
            out.push(' ');
            match having {
                Some(p) => write_pred(out, p),
                None => out.push_str("true"),
            }
            out.push(' ');
            write_query(out, input);
            out.push(')');
        }
        QueryKind::With { bindings, body } => {
            out.push_str("(with (");
            for (i, (name, q)) in bindings.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                out.push('(');
                out.push_str(name);
                out.push(' ');
                write_query(out, q);
                out.push(')');
            }
            out.push_str(") ");
            write_query(out, body);
            out.push(')');
        }
        QueryKind::OrderBy { keys, asc, input } => {
            out.push_str("(orderby (");
            for (i, k) in keys.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                write_expr(out, k);
            }
            out.push_str(") ");
            out.push_str(if *asc { "asc" } else { "desc" });
            out.push(' ');
            write_query(out, input);
            out.push(')');
        }
    }
}

fn write_proj_items(out: &mut String, items: &[ProjItem]) {
    out.push('(');
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        match &item.alias {
            Some(a) => {
                out.push_str("(as ");
                out.push_str(a);
                out.push(' ');
                write_expr(out, &item.expr);
                out.push(')');
            }
            None => write_expr(out, &item.expr),
        }
    }
    out.push(')');
}

fn write_value(out: &mut String, v: &Value) {
    match v {
        Value::Int(i) => out.push_str(&i.to_string()),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Null => out.push_str("null"),
    }
}

fn write_expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Column(c) => out.push_str(c),
        Expr::Lit(v) => write_value(out, v),
        Expr::Arith { op, left, right } => {
            out.push('(');
            out.push_str(match op {
                ArithOp::Add => "+",
                ArithOp::Sub => "-",
                ArithOp::Mul => "*",
                ArithOp::Div => "/",
                ArithOp::Mod => "%",
            });
            out.push(' ');
            write_expr(out, left);
            out.push(' ');
            write_expr(out, right);
            out.push(')');
        }
        Expr::Ite {
            cond,
            then_value,
            else_value,
        } => {
            out.push_str("(ite ");
            write_pred(out, cond);
            out.push(' ');
            write_expr(out, then_value);
            out.push(' ');
            write_expr(out, else_value);
            out.push(')');
        }
        Expr::Case { arms, default } => {
            out.push_str("(case (");
            for (i, (p, v)) in arms.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                out.push('(');
                write_pred(out, p);
                out.push(' ');
                write_expr(out, v);
                out.push(')');
            }
            out.push_str(") ");
            write_expr(out, default);
            out.push(')');
        }
        Expr::Agg { func, arg } => {
            out.push('(');
            out.push_str(match func {
                AggFunc::Count => "count",
                AggFunc::Sum => "sum",
                AggFunc::Avg => "avg",
                AggFunc::Min => "min",
                AggFunc::Max => "max",
            });
            out.push(' ');
            write_expr(out, arg);
            out.push(')');
        }
        Expr::Cast(p) => {
            out.push_str("(castp ");
            write_pred(out, p);
            out.push(')');
        }
    }
}

fn write_pred(out: &mut String, p: &Pred) {
    match p {
        Pred::Lit(Some(true)) => out.push_str("true"),
        Pred::Lit(Some(false)) => out.push_str("false"),
        Pred::Lit(None) => out.push_str("null"),
        Pred::Cmp { op, left, right } => {
            out.push('(');
            out.push_str(op.symbol());
            out.push(' ');
            write_expr(out, left);
            out.push(' ');
            write_expr(out, right);
            out.push(')');
        }
        Pred::IsNull(e) => {
            out.push_str("(isnull ");
            write_expr(out, e);
            out.push(')');
        }
        Pred::InList { exprs, rows } => {
            out.push_str("(in (");
            for (i, e) in exprs.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                write_expr(out, e);
            }
            out.push_str(") (");
            for (i, row) in rows.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                out.push('(');
                for (j, v) in row.iter().enumerate() {
                    if j > 0 {
                        out.push(' ');
                    }
                    write_value(out, v);
                }
                out.push(')');
            }
            out.push_str("))");
        }
        Pred::InQuery { exprs, query } => {
            out.push_str("(inq (");
            for (i, e) in exprs.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                write_expr(out, e);
            }
            out.push_str(") ");
            write_query(out, query);
            out.push(')');
        }
        Pred::And(a, b) => {
            out.push_str("(and ");
            write_pred(out, a);
            out.push(' ');
            write_pred(out, b);
            out.push(')');
        }
        Pred::Or(a, b) => {
            out.push_str("(or ");
            write_pred(out, a);
            out.push(' ');
            write_pred(out, b);
            out.push(')');
        }
        Pred::Not(p) => {
            out.push_str("(not ");
            write_pred(out, p);
            out.push(')');
        }
    }
}
