//! Problem files: schema, constraint strings, two queries, options.
//!
//! The JSON shape is
//! `{"schema":[{"name":"R","attrs":[{"name":"a","type":"int"}]}],
//!   "constraints":["PK(R,[a])", ...], "q1":"<sql>", "q2":"<sql>",
//!   "bound":2, "timeout_ms":600000}`.
//! Constraint strings use the concrete forms `PK(R,[a,...])`,
//! `FK(R1,a1,R2,a2)`, `NotNull(R,a)`, `Check(R, ψ)`, and `Inc(R,a,v)`.
//! A query string starting with `(` is read as the algebra directly.

use crate::ast::*;
use crate::constraints::resolve_constraints;
use crate::error::{Error, Result};
use crate::eval::{Database, Relation};
use crate::lexer::{tokenize, Tok, Token};
use crate::parser::{parse_sql, Interner};
use crate::resolve::resolve;
use crate::value::Value;
use crate::wf::check_well_formed;
use serde::Deserialize;

#[derive(Debug, Clone)]
pub struct Problem {
    pub schema: Schema,
    pub constraints: ConstraintSet,
    pub q1: Query,
    pub q2: Query,
    pub bound: usize,
    pub timeout_ms: u64,
    pub interner: Interner,
}

#[derive(Deserialize)]
struct RawProblem {
    schema: Vec<RawRelation>,
    #[serde(default)]
    constraints: Vec<String>,
    q1: String,
    q2: String,
    #[serde(default = "default_bound")]
    bound: usize,
    #[serde(default = "default_timeout")]
    timeout_ms: u64,
}

#[derive(Deserialize)]
struct RawRelation {
    name: String,
    attrs: Vec<RawAttr>,
}

#[derive(Deserialize)]
struct RawAttr {
    name: String,
    #[serde(rename = "type")]
    ty: String,
}

fn default_bound() -> usize {
    2
}

fn default_timeout() -> u64 {
    600_000
}

/// Parses and fully resolves a problem file.
pub fn parse_problem(bytes: &[u8]) -> Result<Problem> {
    let raw: RawProblem = serde_json::from_slice(bytes)
        .map_err(|e| Error::Problem(format!("malformed JSON: {e}")))?;

    let mut relations = Vec::with_capacity(raw.schema.len());
    for r in &raw.schema {
        if r.attrs.is_empty() {
            return Err(Error::Problem(format!(
                "relation `{}` has no attributes",
                r.name
            )));
        }
        let attrs = r
            .attrs
            .iter()
            .map(|a| {
                let ty = match a.ty.to_ascii_lowercase().as_str() {
                    "int" | "integer" => ColType::Int,
                    "bool" | "boolean" => ColType::Bool,
                    other => {
                        return Err(Error::Problem(format!(
                            "unknown attribute type `{other}`"
                        )))
                    }
                };
                Ok((a.name.clone(), ty))
            })
            .collect::<Result<Vec<_>>>()?;
        relations.push(RelationSchema {
            name: r.name.clone(),
            attrs,
        });
    }
    let schema = Schema { relations };

    let mut interner = Interner::default();
    let constraints = ConstraintSet(
        raw.constraints
            .iter()
            .map(|s| parse_constraint(s, &mut interner))
            .collect::<Result<Vec<_>>>()?,
    );
    resolve_constraints(&schema, &constraints)?;

    let parse_query = |src: &str, interner: &mut Interner| -> Result<Query> {
        let raw = if src.trim_start().starts_with('(') {
            crate::sexpr::read_query(src)?
        } else {
            parse_sql(src, interner)?
        };
        let q = resolve(&schema, &raw)?;
        check_well_formed(&schema, &q)?;
        Ok(q)
    };
    let q1 = parse_query(&raw.q1, &mut interner)?;
    let q2 = parse_query(&raw.q2, &mut interner)?;

    if raw.bound == 0 {
        return Err(Error::Problem("bound must be at least 1".into()));
    }
    Ok(Problem {
        schema,
        constraints,
        q1,
        q2,
        bound: raw.bound,
        timeout_ms: raw.timeout_ms,
        interner,
    })
}

// ---------------------------------------------------------------------------
// Constraint strings
// ---------------------------------------------------------------------------

struct ConsParser<'a> {
    toks: Vec<Token>,
    idx: usize,
    interner: &'a mut Interner,
}

pub fn parse_constraint(src: &str, interner: &mut Interner) -> Result<Constraint> {
    let toks = tokenize(src)?;
    let mut p = ConsParser {
        toks,
        idx: 0,
        interner,
    };
    let c = p.constraint()?;
    if !matches!(p.peek(), Tok::Eof) {
        return Err(Error::Problem(format!(
            "trailing input in constraint `{src}`"
        )));
    }
    Ok(c)
}

impl<'a> ConsParser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.idx].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.idx].tok.clone();
        if self.idx + 1 < self.toks.len() {
            self.idx += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Problem(msg.into()))
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<()> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected {what} in constraint"))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.bump() {
            Tok::Ident(s) => Ok(s),
            other => self.err(format!("expected identifier, got {other:?}")),
        }
    }

    fn constraint(&mut self) -> Result<Constraint> {
        let head = self.ident()?;
        self.expect(Tok::LParen, "`(`")?;
        let c = match head.to_ascii_uppercase().as_str() {
            "PK" => {
                let rel = self.ident()?;
                self.expect(Tok::Comma, "`,`")?;
                self.expect(Tok::LBracket, "`[`")?;
                let mut attrs = vec![self.ident()?];
                while *self.peek() == Tok::Comma {
                    self.bump();
                    attrs.push(self.ident()?);
                }
                self.expect(Tok::RBracket, "`]`")?;
                Constraint::PrimaryKey { rel, attrs }
            }
            "FK" => {
                let rel = self.ident()?;
                self.expect(Tok::Comma, "`,`")?;
                let attr = self.ident()?;
                self.expect(Tok::Comma, "`,`")?;
                let ref_rel = self.ident()?;
                self.expect(Tok::Comma, "`,`")?;
                let ref_attr = self.ident()?;
                Constraint::ForeignKey {
                    rel,
                    attr,
                    ref_rel,
                    ref_attr,
                }
            }
            "NOTNULL" => {
                let rel = self.ident()?;
                self.expect(Tok::Comma, "`,`")?;
                let attr = self.ident()?;
                Constraint::NotNull { rel, attr }
            }
            "CHECK" => {
                let rel = self.ident()?;
                self.expect(Tok::Comma, "`,`")?;
                let pred = self.check_or()?;
                Constraint::Check { rel, pred }
            }
            "INC" => {
                let rel = self.ident()?;
                self.expect(Tok::Comma, "`,`")?;
                let attr = self.ident()?;
                self.expect(Tok::Comma, "`,`")?;
                let neg = *self.peek() == Tok::Minus;
                if neg {
                    self.bump();
                }
                let start = match self.bump() {
                    Tok::Int(i) => {
                        if neg {
                            -i
                        } else {
                            i
                        }
                    }
                    other => return self.err(format!("expected integer, got {other:?}")),
                };
                Constraint::AutoInc { rel, attr, start }
            }
            other => return self.err(format!("unknown constraint form `{other}`")),
        };
        self.expect(Tok::RParen, "`)`")?;
        Ok(c)
    }

    fn check_or(&mut self) -> Result<CheckPred> {
        let mut left = self.check_and()?;
        while matches!(self.peek(), Tok::Ident(s) if s.eq_ignore_ascii_case("or")) {
            self.bump();
            let right = self.check_and()?;
            left = CheckPred::Or(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn check_and(&mut self) -> Result<CheckPred> {
        let mut left = self.check_atom()?;
        while matches!(self.peek(), Tok::Ident(s) if s.eq_ignore_ascii_case("and")) {
            self.bump();
            let right = self.check_atom()?;
            left = CheckPred::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn check_atom(&mut self) -> Result<CheckPred> {
        if matches!(self.peek(), Tok::Ident(s) if s.eq_ignore_ascii_case("not")) {
            self.bump();
            return Ok(CheckPred::Not(Box::new(self.check_atom()?)));
        }
        if *self.peek() == Tok::LParen {
            self.bump();
            let p = self.check_or()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(p);
        }
        let attr = self.ident()?;
        if matches!(self.peek(), Tok::Ident(s) if s.eq_ignore_ascii_case("in")) {
            self.bump();
            self.expect(Tok::LBracket, "`[`")?;
            let mut values = vec![self.value()?];
            while *self.peek() == Tok::Comma {
                self.bump();
                values.push(self.value()?);
            }
            self.expect(Tok::RBracket, "`]`")?;
            return Ok(CheckPred::InList { attr, values });
        }
        let op = match self.bump() {
            Tok::Le => CmpOp::Le,
            Tok::Lt => CmpOp::Lt,
            Tok::Eq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            other => return self.err(format!("expected comparison, got {other:?}")),
        };
        // Either a constant or another attribute of the same relation.
        match self.peek().clone() {
            Tok::Ident(s)
                if !s.eq_ignore_ascii_case("true")
                    && !s.eq_ignore_ascii_case("false")
                    && !s.eq_ignore_ascii_case("null") =>
            {
                self.bump();
                Ok(CheckPred::CmpAttr {
                    left: attr,
                    op,
                    right: s,
                })
            }
            _ => Ok(CheckPred::CmpConst {
                attr,
                op,
                value: self.value()?,
            }),
        }
    }

    fn value(&mut self) -> Result<Value> {
        let neg = *self.peek() == Tok::Minus;
        if neg {
            self.bump();
        }
        match self.bump() {
            Tok::Int(i) => Ok(Value::Int(if neg { -i } else { i })),
            Tok::Str(s) => Ok(Value::Int(self.interner.intern(&s))),
            Tok::Ident(s) if s.eq_ignore_ascii_case("true") => Ok(Value::Bool(true)),
            Tok::Ident(s) if s.eq_ignore_ascii_case("false") => Ok(Value::Bool(false)),
            Tok::Ident(s) if s.eq_ignore_ascii_case("null") => Ok(Value::Null),
            other => self.err(format!("expected value, got {other:?}")),
        }
    }
}

// ---------------------------------------------------------------------------
// Database JSON (fixtures and counterexample output)
// ---------------------------------------------------------------------------

/// Renders a database as `{"relation":[{"attr":value,...},...]}` with nulls
/// as JSON null.
pub fn database_to_json(db: &Database) -> serde_json::Value {
    let mut map = serde_json::Map::new();
    for (name, rel) in &db.relations {
        let rows: Vec<serde_json::Value> = rel
            .rows
            .iter()
            .map(|row| {
                let mut obj = serde_json::Map::new();
                for (a, v) in rel.attrs.iter().zip(row) {
                    obj.insert(a.clone(), value_to_json(v));
                }
                serde_json::Value::Object(obj)
            })
            .collect();
        map.insert(name.clone(), serde_json::Value::Array(rows));
    }
    serde_json::Value::Object(map)
}

fn value_to_json(v: &Value) -> serde_json::Value {
    match v {
        Value::Int(i) => serde_json::Value::from(*i),
        Value::Bool(b) => serde_json::Value::from(*b),
        Value::Null => serde_json::Value::Null,
    }
}

/// Reads a database fixture in the counterexample JSON shape, ordering
/// columns by the schema.
pub fn database_from_json(schema: &Schema, json: &serde_json::Value) -> Result<Database> {
    let obj = json
        .as_object()
        .ok_or_else(|| Error::Problem("database JSON must be an object".into()))?;
    let mut db = Database::empty(schema);
    for (name, rows) in obj {
        let rs = schema
            .relation(name)
            .ok_or_else(|| Error::UnknownRelation(name.clone()))?;
        let rows = rows
            .as_array()
            .ok_or_else(|| Error::Problem(format!("relation `{name}` must be an array")))?;
        let mut parsed = Vec::with_capacity(rows.len());
        for row in rows {
            let row_obj = row
                .as_object()
                .ok_or_else(|| Error::Problem("row must be an object".into()))?;
            let mut vals = Vec::with_capacity(rs.attrs.len());
            for (a, _) in &rs.attrs {
                let v = row_obj
                    .get(a)
                    .ok_or_else(|| Error::Problem(format!("row missing attribute `{a}`")))?;
                vals.push(match v {
                    serde_json::Value::Null => Value::Null,
                    serde_json::Value::Bool(b) => Value::Bool(*b),
                    serde_json::Value::Number(n) => Value::Int(
                        n.as_i64()
                            .ok_or_else(|| Error::Problem("non-integer number".into()))?,
                    ),
                    _ => return Err(Error::Problem("unsupported value in row".into())),
                });
            }
            parsed.push(vals);
        }
        db.relations.insert(
            name.clone(),
            Relation::new(rs.attrs.iter().map(|(a, _)| a.clone()).collect(), parsed),
        );
    }
    Ok(db)
}
