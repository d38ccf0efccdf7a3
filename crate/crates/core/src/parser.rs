//! Recursive-descent parser from SQL surface syntax to the core constructors.
//!
//! The parser desugars on the fly: `INNER JOIN ... ON p` becomes a join node,
//! `BETWEEN` becomes a conjunction of comparisons, simple `CASE x WHEN v`
//! becomes the searched form, `COUNT(*)` becomes `Count(1)`, and FROM-clause
//! aliases become explicit rename nodes. String literals are interned to
//! integer codes in first-seen order.

use crate::ast::*;
use crate::error::{Error, Pos, Result};
use crate::lexer::{tokenize, Tok, Token};
use crate::value::Value;
use std::collections::HashMap;

/// Deterministic string-to-integer interning table. Codes are assigned in
/// first-seen order starting at 0 and recorded in verifier output so
/// counterexample databases can be rendered back.
#[derive(Debug, Default, Clone)]
pub struct Interner {
    map: HashMap<String, i64>,
    items: Vec<String>,
}

impl Interner {
    pub fn intern(&mut self, s: &str) -> i64 {
        if let Some(&code) = self.map.get(s) {
            return code;
        }
        let code = self.items.len() as i64;
        self.items.push(s.to_string());
        self.map.insert(s.to_string(), code);
        code
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, i64)> {
        self.items.iter().enumerate().map(|(i, s)| (s.as_str(), i as i64))
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

pub fn parse_sql(src: &str, interner: &mut Interner) -> Result<Query> {
    let toks = tokenize(src)?;
    let mut p = Parser {
        toks,
        idx: 0,
        interner,
    };
    let q = p.parse_statement()?;
    p.expect_eof()?;
    Ok(q)
}

struct Parser<'a> {
    toks: Vec<Token>,
    idx: usize,
    interner: &'a mut Interner,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.idx].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.idx].pos
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.idx].tok.clone();
        if self.idx + 1 < self.toks.len() {
            self.idx += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    /// Case-insensitive keyword check without consuming.
    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s.eq_ignore_ascii_case(kw))
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.err(format!("expected `{kw}`"))
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<()> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn expect_eof(&mut self) -> Result<()> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            self.err("trailing input after query")
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                if is_reserved(&s) {
                    self.err(format!("unexpected keyword `{s}`"))
                } else {
                    self.bump();
                    Ok(s)
                }
            }
            _ => self.err("expected identifier"),
        }
    }

    // ------------------------------------------------------------------
    // Queries
    // ------------------------------------------------------------------

    fn parse_statement(&mut self) -> Result<Query> {
        let q = self.parse_set_expr()?;
        if self.at_kw("ORDER") {
            self.bump();
            self.expect_kw("BY")?;
            let (keys, asc) = self.parse_order_keys()?;
            return Ok(Query::new(QueryKind::OrderBy {
                keys,
                asc,
                input: Box::new(q),
            }));
        }
        Ok(q)
    }

    fn parse_order_keys(&mut self) -> Result<(Vec<Expr>, bool)> {
        let mut keys = Vec::new();
        let mut dir: Option<bool> = None;
        loop {
            let e = self.parse_expr()?;
            let key_dir = if self.eat_kw("ASC") {
                true
            } else {
                !self.eat_kw("DESC")
            };
            match dir {
                None => dir = Some(key_dir),
                Some(d) if d != key_dir => {
                    return Err(Error::unsupported("mixed ASC/DESC sort directions"))
                }
                _ => {}
            }
            keys.push(e);
            if !self.eat(Tok::Comma) {
                break;
            }
        }
        Ok((keys, dir.unwrap_or(true)))
    }

    fn eat(&mut self, t: Tok) -> bool {
        if *self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    /// UNION/EXCEPT level; INTERSECT binds tighter.
    fn parse_set_expr(&mut self) -> Result<Query> {
        let mut left = self.parse_intersect_expr()?;
        loop {
            let op = if self.at_kw("UNION") {
                self.bump();
                if self.eat_kw("ALL") {
                    CollOp::UnionAll
                } else {
                    CollOp::Union
                }
            } else if self.at_kw("EXCEPT") {
                self.bump();
                if self.eat_kw("ALL") {
                    CollOp::ExceptAll
                } else {
                    CollOp::Except
                }
            } else {
                break;
            };
            let right = self.parse_intersect_expr()?;
            left = Query::new(QueryKind::Coll {
                op,
                left: Box::new(left),
                right: Box::new(right),
            });
        }
        Ok(left)
    }

    fn parse_intersect_expr(&mut self) -> Result<Query> {
        let mut left = self.parse_query_primary()?;
        while self.at_kw("INTERSECT") {
            self.bump();
            let op = if self.eat_kw("ALL") {
                CollOp::IntersectAll
            } else {
                CollOp::Intersect
            };
            let right = self.parse_query_primary()?;
            left = Query::new(QueryKind::Coll {
                op,
                left: Box::new(left),
                right: Box::new(right),
            });
        }
        Ok(left)
    }

    fn parse_query_primary(&mut self) -> Result<Query> {
        if self.at_kw("WITH") {
            return self.parse_with();
        }
        if self.at_kw("SELECT") {
            return self.parse_select();
        }
        if *self.peek() == Tok::LParen {
            self.bump();
            let q = self.parse_subquery_body()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(q);
        }
        self.err("expected SELECT, WITH, or a parenthesized query")
    }

    /// A query inside parentheses or a FROM/IN subquery; ORDER BY is only
    /// allowed at the topmost level of the whole statement.
    fn parse_subquery_body(&mut self) -> Result<Query> {
        let q = self.parse_set_expr()?;
        if self.at_kw("ORDER") {
            return Err(Error::unsupported_at(
                "order-by-below-top-level",
                format!("{}", self.pos()),
            ));
        }
        Ok(q)
    }

    fn parse_with(&mut self) -> Result<Query> {
        self.expect_kw("WITH")?;
        let mut bindings = Vec::new();
        loop {
            let name = self.ident()?;
            self.expect_kw("AS")?;
            self.expect(Tok::LParen, "`(`")?;
            let q = self.parse_subquery_body()?;
            self.expect(Tok::RParen, "`)`")?;
            bindings.push((name, q));
            if !self.eat(Tok::Comma) {
                break;
            }
        }
        let body = if self.at_kw("SELECT") || self.at_kw("WITH") || *self.peek() == Tok::LParen {
            self.parse_set_expr()?
        } else {
            return self.err("expected query after WITH bindings");
        };
        Ok(Query::new(QueryKind::With {
            bindings,
            body: Box::new(body),
        }))
    }

    fn parse_select(&mut self) -> Result<Query> {
        self.expect_kw("SELECT")?;
        let distinct = self.eat_kw("DISTINCT");
        // Projection list; `*` is kept as a marker and expanded during name
        // resolution in child attribute order.
        let mut items = Vec::new();
        if self.eat(Tok::Star) {
            items.push(ProjItem {
                expr: Expr::Column("*".into()),
                alias: None,
            });
        } else {
            loop {
                let expr = self.parse_expr()?;
                let alias = if self.eat_kw("AS")
                    || matches!(self.peek(), Tok::Ident(s) if !is_reserved(s))
                {
                    Some(self.ident()?)
                } else {
                    None
                };
                items.push(ProjItem { expr, alias });
                if !self.eat(Tok::Comma) {
                    break;
                }
            }
        }

        self.expect_kw("FROM")?;
        let mut input = self.parse_table_ref()?;
        while self.eat(Tok::Comma) {
            let right = self.parse_table_ref()?;
            input = Query::new(QueryKind::Join {
                kind: JoinKind::Product,
                pred: None,
                left: Box::new(input),
                right: Box::new(right),
            });
        }

        if self.eat_kw("WHERE") {
            let pred = self.parse_pred()?;
            input = Query::new(QueryKind::Filter {
                pred,
                input: Box::new(input),
            });
        }

        let group_keys = if self.at_kw("GROUP") {
            self.bump();
            self.expect_kw("BY")?;
            let mut keys = vec![self.parse_expr()?];
            while self.eat(Tok::Comma) {
                keys.push(self.parse_expr()?);
            }
            Some(keys)
        } else {
            None
        };

        let having = if self.eat_kw("HAVING") {
            Some(self.parse_pred()?)
        } else {
            None
        };

        let has_agg = items.iter().any(|i| i.expr.has_agg())
            || having.as_ref().map(Pred::has_agg).unwrap_or(false);

        let mut q = match group_keys {
            Some(keys) => Query::new(QueryKind::GroupBy {
                keys,
                items,
                having,
                input: Box::new(input),
            }),
            None if having.is_some() || has_agg && items.iter().any(|i| !i.expr.has_agg()) => {
                // HAVING without GROUP BY, or a mix of aggregated and bare
                // items: treat the whole input as a single group and let the
                // well-formedness pass reject ungrouped attribute references.
                Query::new(QueryKind::GroupBy {
                    keys: Vec::new(),
                    items,
                    having,
                    input: Box::new(input),
                })
            }
            None => Query::new(QueryKind::Project {
                items,
                input: Box::new(input),
            }),
        };

        if distinct {
            q = Query::new(QueryKind::Distinct(Box::new(q)));
        }
        Ok(q)
    }

    fn parse_table_ref(&mut self) -> Result<Query> {
        let mut left = self.parse_table_primary()?;
        loop {
            let kind = if self.at_kw("CROSS") {
                self.bump();
                self.expect_kw("JOIN")?;
                let right = self.parse_table_primary()?;
                left = Query::new(QueryKind::Join {
                    kind: JoinKind::Product,
                    pred: None,
                    left: Box::new(left),
                    right: Box::new(right),
                });
                continue;
            } else if self.at_kw("JOIN") {
                self.bump();
                JoinKind::Inner
            } else if self.at_kw("INNER") {
                self.bump();
                self.expect_kw("JOIN")?;
                JoinKind::Inner
            } else if self.at_kw("LEFT") {
                self.bump();
                self.eat_kw("OUTER");
                self.expect_kw("JOIN")?;
                JoinKind::Left
            } else if self.at_kw("RIGHT") {
                self.bump();
                self.eat_kw("OUTER");
                self.expect_kw("JOIN")?;
                JoinKind::Right
            } else if self.at_kw("FULL") {
                self.bump();
                self.eat_kw("OUTER");
                self.expect_kw("JOIN")?;
                JoinKind::Full
            } else if self.at_kw("NATURAL") {
                return Err(Error::unsupported("natural-join"));
            } else {
                break;
            };
            let right = self.parse_table_primary()?;
            if self.at_kw("USING") {
                return Err(Error::unsupported("join-using"));
            }
            self.expect_kw("ON")?;
            let pred = self.parse_pred()?;
            left = Query::new(QueryKind::Join {
                kind,
                pred: Some(pred),
                left: Box::new(left),
                right: Box::new(right),
            });
        }
        Ok(left)
    }

    fn parse_table_primary(&mut self) -> Result<Query> {
        if *self.peek() == Tok::LParen {
            self.bump();
            let q = self.parse_subquery_body()?;
            self.expect(Tok::RParen, "`)`")?;
            self.eat_kw("AS");
            let alias = self
                .ident()
                .map_err(|_| Error::Syntax {
                    pos: self.pos(),
                    msg: "subquery in FROM requires an alias".into(),
                })?;
            return Ok(Query::new(QueryKind::Rename {
                alias,
                input: Box::new(q),
            }));
        }
        let name = self.ident()?;
        let rel = Query::new(QueryKind::Relation(name));
        let alias = if self.eat_kw("AS")
            || matches!(self.peek(), Tok::Ident(s) if !is_reserved(s))
        {
            Some(self.ident()?)
        } else {
            None
        };
        Ok(match alias {
            Some(alias) => Query::new(QueryKind::Rename {
                alias,
                input: Box::new(rel),
            }),
            None => rel,
        })
    }

    // ------------------------------------------------------------------
    // Predicates
    // ------------------------------------------------------------------

    fn parse_pred(&mut self) -> Result<Pred> {
        let mut left = self.parse_pred_and()?;
        while self.eat_kw("OR") {
            let right = self.parse_pred_and()?;
            left = Pred::Or(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn parse_pred_and(&mut self) -> Result<Pred> {
        let mut left = self.parse_pred_unary()?;
        while self.eat_kw("AND") {
            let right = self.parse_pred_unary()?;
            left = Pred::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn parse_pred_unary(&mut self) -> Result<Pred> {
        if self.eat_kw("NOT") {
            let p = self.parse_pred_unary()?;
            return Ok(Pred::Not(Box::new(p)));
        }
        self.parse_pred_atom()
    }

    fn parse_pred_atom(&mut self) -> Result<Pred> {
        if self.at_kw("EXISTS") {
            return Err(Error::unsupported("exists"));
        }
        // A parenthesized group is ambiguous: it may open a nested predicate
        // or a row expression `(a, b) IN ...`. Try the predicate reading
        // first and fall back on the row reading.
        if *self.peek() == Tok::LParen {
            let save = self.idx;
            self.bump();
            if let Ok(p) = self.parse_pred() {
                if self.eat(Tok::RParen)
                    && !self.at_kw("IN")
                    && !self.at_kw("NOT")
                    && !matches!(self.peek(), Tok::Comma)
                {
                    return Ok(p);
                }
            }
            self.idx = save;
            // Row form: ( expr {, expr} ) [NOT] IN ...
            self.bump();
            let mut row = vec![self.parse_expr()?];
            while self.eat(Tok::Comma) {
                row.push(self.parse_expr()?);
            }
            self.expect(Tok::RParen, "`)`")?;
            return self.parse_membership_suffix(row);
        }
        // Bare truth literals.
        if self.eat_kw("TRUE") {
            return Ok(Pred::Lit(Some(true)));
        }
        if self.eat_kw("FALSE") {
            return Ok(Pred::Lit(Some(false)));
        }
        if self.at_kw("NULL") {
            // A bare NULL predicate; distinguish from `NULL = x` by lookahead.
            let save = self.idx;
            self.bump();
            if !is_pred_suffix(self.peek()) {
                return Ok(Pred::Lit(None));
            }
            self.idx = save;
        }

        let left = self.parse_expr()?;
        if self.at_kw("IS") {
            self.bump();
            let negated = self.eat_kw("NOT");
            self.expect_kw("NULL")?;
            let p = Pred::IsNull(Box::new(left));
            return Ok(if negated { Pred::Not(Box::new(p)) } else { p });
        }
        if self.at_kw("BETWEEN") || (self.at_kw("NOT") && self.peek_ahead_kw(1, "BETWEEN")) {
            let negated = self.eat_kw("NOT");
            self.expect_kw("BETWEEN")?;
            let lo = self.parse_expr()?;
            self.expect_kw("AND")?;
            let hi = self.parse_expr()?;
            let p = Pred::And(
                Box::new(Pred::Cmp {
                    op: CmpOp::Ge,
                    left: Box::new(left.clone()),
                    right: Box::new(lo),
                }),
                Box::new(Pred::Cmp {
                    op: CmpOp::Le,
                    left: Box::new(left),
                    right: Box::new(hi),
                }),
            );
            return Ok(if negated { Pred::Not(Box::new(p)) } else { p });
        }
        if self.at_kw("IN") || (self.at_kw("NOT") && self.peek_ahead_kw(1, "IN")) {
            return self.parse_membership_suffix(vec![left]);
        }
        if self.at_kw("LIKE") || (self.at_kw("NOT") && self.peek_ahead_kw(1, "LIKE")) {
            return Err(Error::unsupported("like"));
        }
        let op = match self.peek() {
            Tok::Le => CmpOp::Le,
            Tok::Lt => CmpOp::Lt,
            Tok::Eq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            _ => return self.err("expected comparison operator"),
        };
        self.bump();
        let right = self.parse_expr()?;
        Ok(Pred::Cmp {
            op,
            left: Box::new(left),
            right: Box::new(right),
        })
    }

    fn peek_ahead_kw(&self, n: usize, kw: &str) -> bool {
        matches!(
            self.toks.get(self.idx + n).map(|t| &t.tok),
            Some(Tok::Ident(s)) if s.eq_ignore_ascii_case(kw)
        )
    }

    /// `[NOT] IN ( subquery | rows | exprs )` after a left row.
    fn parse_membership_suffix(&mut self, row: Vec<Expr>) -> Result<Pred> {
        let negated = self.eat_kw("NOT");
        self.expect_kw("IN")?;
        self.expect(Tok::LParen, "`(`")?;
        let p = if self.at_kw("SELECT") || self.at_kw("WITH") {
            let q = self.parse_subquery_body()?;
            Pred::InQuery {
                exprs: row,
                query: Box::new(q),
            }
        } else {
            // List of scalar constants or row literals.
            let mut rows: Vec<Vec<Value>> = Vec::new();
            loop {
                if *self.peek() == Tok::LParen {
                    self.bump();
                    let mut vals = vec![self.parse_const_value()?];
                    while self.eat(Tok::Comma) {
                        vals.push(self.parse_const_value()?);
                    }
                    self.expect(Tok::RParen, "`)`")?;
                    rows.push(vals);
                } else {
                    rows.push(vec![self.parse_const_value()?]);
                }
                if !self.eat(Tok::Comma) {
                    break;
                }
            }
            Pred::InList { exprs: row, rows }
        };
        self.expect(Tok::RParen, "`)`")?;
        Ok(if negated { Pred::Not(Box::new(p)) } else { p })
    }

    fn parse_const_value(&mut self) -> Result<Value> {
        let neg = self.eat(Tok::Minus);
        match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                Ok(Value::Int(if neg { -i } else { i }))
            }
            Tok::Str(s) => {
                if neg {
                    return self.err("cannot negate a string literal");
                }
                self.bump();
                Ok(Value::Int(self.interner.intern(&s)))
            }
            Tok::Ident(s) if s.eq_ignore_ascii_case("NULL") => {
                self.bump();
                Ok(Value::Null)
            }
            Tok::Ident(s) if s.eq_ignore_ascii_case("TRUE") => {
                self.bump();
                Ok(Value::Bool(true))
            }
            Tok::Ident(s) if s.eq_ignore_ascii_case("FALSE") => {
                self.bump();
                Ok(Value::Bool(false))
            }
            _ => self.err("expected constant value"),
        }
    }

    // ------------------------------------------------------------------
    // Expressions
    // ------------------------------------------------------------------

    fn parse_expr(&mut self) -> Result<Expr> {
        let mut left = self.parse_term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => ArithOp::Add,
                Tok::Minus => ArithOp::Sub,
                _ => break,
            };
            self.bump();
            let right = self.parse_term()?;
            left = Expr::Arith {
                op,
                left: Box::new(left),
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn parse_term(&mut self) -> Result<Expr> {
        let mut left = self.parse_factor()?;
        loop {
            let op = match self.peek() {
                Tok::Star => ArithOp::Mul,
                Tok::Slash => ArithOp::Div,
                Tok::Percent => ArithOp::Mod,
                _ => break,
            };
            self.bump();
            let right = self.parse_factor()?;
            left = Expr::Arith {
                op,
                left: Box::new(left),
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn parse_factor(&mut self) -> Result<Expr> {
        if self.eat(Tok::Minus) {
            let e = self.parse_factor()?;
            return Ok(match e {
                Expr::Lit(Value::Int(i)) => Expr::Lit(Value::Int(-i)),
                e => Expr::Arith {
                    op: ArithOp::Sub,
                    left: Box::new(Expr::Lit(Value::Int(0))),
                    right: Box::new(e),
                },
            });
        }
        match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                Ok(Expr::Lit(Value::Int(i)))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::Lit(Value::Int(self.interner.intern(&s))))
            }
            Tok::LParen => {
                self.bump();
                if self.at_kw("SELECT") || self.at_kw("WITH") {
                    return Err(Error::unsupported("scalar-subquery"));
                }
                let e = self.parse_expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(word) => {
                if word.eq_ignore_ascii_case("NULL") {
                    self.bump();
                    return Ok(Expr::Lit(Value::Null));
                }
                if word.eq_ignore_ascii_case("TRUE") {
                    self.bump();
                    return Ok(Expr::Lit(Value::Bool(true)));
                }
                if word.eq_ignore_ascii_case("FALSE") {
                    self.bump();
                    return Ok(Expr::Lit(Value::Bool(false)));
                }
                if word.eq_ignore_ascii_case("CASE") {
                    return self.parse_case();
                }
                if word.eq_ignore_ascii_case("IF") {
                    self.bump();
                    self.expect(Tok::LParen, "`(`")?;
                    let cond = self.parse_pred()?;
                    self.expect(Tok::Comma, "`,`")?;
                    let then_value = self.parse_expr()?;
                    self.expect(Tok::Comma, "`,`")?;
                    let else_value = self.parse_expr()?;
                    self.expect(Tok::RParen, "`)`")?;
                    return Ok(Expr::Ite {
                        cond: Box::new(cond),
                        then_value: Box::new(then_value),
                        else_value: Box::new(else_value),
                    });
                }
                if word.eq_ignore_ascii_case("CAST") {
                    return self.parse_cast();
                }
                if let Some(func) = agg_func(&word) {
                    self.bump();
                    self.expect(Tok::LParen, "`(`")?;
                    if self.at_kw("DISTINCT") {
                        return Err(Error::unsupported("distinct-aggregate"));
                    }
                    let arg = if func == AggFunc::Count && *self.peek() == Tok::Star {
                        self.bump();
                        Expr::Lit(Value::Int(1))
                    } else {
                        self.parse_expr()?
                    };
                    self.expect(Tok::RParen, "`)`")?;
                    return Ok(Expr::Agg {
                        func,
                        arg: Box::new(arg),
                    });
                }
                // Plain or qualified column reference.
                let first = self.ident()?;
                if self.eat(Tok::Dot) {
                    if self.eat(Tok::Star) {
                        return Err(Error::unsupported("qualified-star"));
                    }
                    let second = self.ident()?;
                    Ok(Expr::Column(format!("{first}.{second}")))
                } else {
                    Ok(Expr::Column(first))
                }
            }
            _ => self.err("expected expression"),
        }
    }

    fn parse_case(&mut self) -> Result<Expr> {
        self.expect_kw("CASE")?;
        // Simple form `CASE <expr> WHEN v THEN e ...` desugars to the
        // searched form with equality tests.
        let scrutinee = if !self.at_kw("WHEN") {
            Some(self.parse_expr()?)
        } else {
            None
        };
        let mut arms = Vec::new();
        while self.eat_kw("WHEN") {
            let cond = match &scrutinee {
                Some(s) => {
                    let v = self.parse_expr()?;
                    Pred::Cmp {
                        op: CmpOp::Eq,
                        left: Box::new(s.clone()),
                        right: Box::new(v),
                    }
                }
                None => self.parse_pred()?,
            };
            self.expect_kw("THEN")?;
            let val = self.parse_expr()?;
            arms.push((cond, val));
        }
        if arms.is_empty() {
            return self.err("CASE requires at least one WHEN arm");
        }
        let default = if self.eat_kw("ELSE") {
            self.parse_expr()?
        } else {
            Expr::Lit(Value::Null)
        };
        self.expect_kw("END")?;
        Ok(Expr::Case {
            arms,
            default: Box::new(default),
        })
    }

    fn parse_cast(&mut self) -> Result<Expr> {
        self.expect_kw("CAST")?;
        self.expect(Tok::LParen, "`(`")?;
        // The interior is either a predicate (cast to 0/1/Null) or a plain
        // integer expression (identity).
        let save = self.idx;
        let pred = self.parse_pred();
        match pred {
            Ok(p) if self.at_kw("AS") => {
                self.bump();
                self.expect_int_type()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(Expr::Cast(Box::new(p)))
            }
            _ => {
                self.idx = save;
                let e = self.parse_expr()?;
                self.expect_kw("AS")?;
                self.expect_int_type()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
        }
    }

    fn expect_int_type(&mut self) -> Result<()> {
        if self.eat_kw("INT") || self.eat_kw("INTEGER") || self.eat_kw("SIGNED") {
            Ok(())
        } else {
            Err(Error::unsupported("cast to non-integer type"))
        }
    }
}

fn is_pred_suffix(t: &Tok) -> bool {
    matches!(
        t,
        Tok::Le | Tok::Lt | Tok::Eq | Tok::Ne | Tok::Gt | Tok::Ge | Tok::Plus | Tok::Minus
            | Tok::Star | Tok::Slash | Tok::Percent
    )
}

fn agg_func(word: &str) -> Option<AggFunc> {
    let w = word.to_ascii_uppercase();
    Some(match w.as_str() {
        "COUNT" => AggFunc::Count,
        "SUM" => AggFunc::Sum,
        "AVG" => AggFunc::Avg,
        "MIN" => AggFunc::Min,
        "MAX" => AggFunc::Max,
        _ => return None,
    })
}

fn is_reserved(word: &str) -> bool {
    const RESERVED: &[&str] = &[
        "SELECT", "FROM", "WHERE", "GROUP", "BY", "HAVING", "ORDER", "WITH", "AS", "ON", "JOIN",
        "INNER", "LEFT", "RIGHT", "FULL", "OUTER", "CROSS", "NATURAL", "UNION", "INTERSECT",
        "EXCEPT", "ALL", "DISTINCT", "AND", "OR", "NOT", "IN", "IS", "NULL", "TRUE", "FALSE",
        "CASE", "WHEN", "THEN", "ELSE", "END", "CAST", "BETWEEN", "ASC", "DESC", "EXISTS",
        "LIKE", "USING",
    ];
    RESERVED.iter().any(|r| word.eq_ignore_ascii_case(r))
}
