//! Quantifier-free terms over integers, booleans, and uninterpreted
//! functions, with hash-consing, a ground evaluator, and SMT-LIB 2 emission.
//!
//! Symbolic tuples are uninterpreted constants of an uninterpreted sort; they
//! occur only as arguments of the `Del` predicate and of per-attribute value
//! and null-flag functions, so the term language carries the applications
//! directly rather than tuple-sorted subterms.

use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermId(u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TupleId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AttrId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomId(pub u32);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    True,
    False,
    IntConst(i64),
    /// Del(t): tuple deletion flag.
    Del(TupleId),
    /// <attr>_val(t): integer payload of an attribute.
    AttrVal(AttrId, TupleId),
    /// <attr>_null(t): null flag of an attribute.
    AttrNull(AttrId, TupleId),
    /// Free boolean constant (group membership, pairing, ...).
    Atom(AtomId),
    Not(TermId),
    And(Vec<TermId>),
    Or(Vec<TermId>),
    Implies(TermId, TermId),
    Iff(TermId, TermId),
    IteBool(TermId, TermId, TermId),
    IteInt(TermId, TermId, TermId),
    EqInt(TermId, TermId),
    Le(TermId, TermId),
    Lt(TermId, TermId),
    Add(Vec<TermId>),
    Sub(TermId, TermId),
    Mul(TermId, TermId),
    Div(TermId, TermId),
    Mod(TermId, TermId),
}

#[derive(Debug, Default)]
pub struct TermPool {
    terms: Vec<Term>,
    intern: HashMap<Term, TermId>,
    tuple_names: Vec<String>,
    attr_names: Vec<String>,
    attr_intern: HashMap<String, AttrId>,
    atom_names: Vec<String>,
}

impl TermPool {
    pub fn new() -> Self {
        TermPool::default()
    }

    pub fn term(&self, id: TermId) -> &Term {
        &self.terms[id.0 as usize]
    }

    fn mk(&mut self, t: Term) -> TermId {
        if let Some(&id) = self.intern.get(&t) {
            return id;
        }
        let id = TermId(self.terms.len() as u32);
        self.terms.push(t.clone());
        self.intern.insert(t, id);
        id
    }

    // -- declarations ------------------------------------------------------

    pub fn new_tuple(&mut self, name: String) -> TupleId {
        let id = TupleId(self.tuple_names.len() as u32);
        self.tuple_names.push(name);
        id
    }

    pub fn attr(&mut self, name: &str) -> AttrId {
        if let Some(&id) = self.attr_intern.get(name) {
            return id;
        }
        let id = AttrId(self.attr_names.len() as u32);
        self.attr_names.push(name.to_string());
        self.attr_intern.insert(name.to_string(), id);
        id
    }

    pub fn new_atom(&mut self, name: String) -> AtomId {
        let id = AtomId(self.atom_names.len() as u32);
        self.atom_names.push(name);
        id
    }

    pub fn tuple_name(&self, t: TupleId) -> &str {
        &self.tuple_names[t.0 as usize]
    }

    pub fn attr_name(&self, a: AttrId) -> &str {
        &self.attr_names[a.0 as usize]
    }

    pub fn atom_name(&self, a: AtomId) -> &str {
        &self.atom_names[a.0 as usize]
    }

    pub fn tuples(&self) -> impl Iterator<Item = (TupleId, &str)> {
        self.tuple_names
            .iter()
            .enumerate()
            .map(|(i, n)| (TupleId(i as u32), n.as_str()))
    }

    // -- constructors with unit simplification ------------------------------

    pub fn tru(&mut self) -> TermId {
        self.mk(Term::True)
    }

    pub fn fls(&mut self) -> TermId {
        self.mk(Term::False)
    }

    pub fn int(&mut self, v: i64) -> TermId {
        self.mk(Term::IntConst(v))
    }

    pub fn boolean(&mut self, b: bool) -> TermId {
        if b {
            self.tru()
        } else {
            self.fls()
        }
    }

    pub fn del(&mut self, t: TupleId) -> TermId {
        self.mk(Term::Del(t))
    }

    pub fn live(&mut self, t: TupleId) -> TermId {
        let d = self.del(t);
        self.not(d)
    }

    pub fn attr_val(&mut self, a: AttrId, t: TupleId) -> TermId {
        self.mk(Term::AttrVal(a, t))
    }

    pub fn attr_null(&mut self, a: AttrId, t: TupleId) -> TermId {
        self.mk(Term::AttrNull(a, t))
    }

    pub fn atom(&mut self, a: AtomId) -> TermId {
        self.mk(Term::Atom(a))
    }

    pub fn not(&mut self, t: TermId) -> TermId {
        match self.term(t) {
            Term::True => self.fls(),
            Term::False => self.tru(),
            Term::Not(inner) => *inner,
            _ => self.mk(Term::Not(t)),
        }
    }

    pub fn and(&mut self, ts: impl IntoIterator<Item = TermId>) -> TermId {
        let tru = self.tru();
        let mut flat = Vec::new();
        for t in ts {
            if t == tru {
                continue;
            }
            if matches!(self.term(t), Term::False) {
                return self.fls();
            }
            if !flat.contains(&t) {
                flat.push(t);
            }
        }
        match flat.len() {
            0 => tru,
            1 => flat[0],
            _ => self.mk(Term::And(flat)),
        }
    }

    pub fn and2(&mut self, a: TermId, b: TermId) -> TermId {
        self.and([a, b])
    }

    pub fn or(&mut self, ts: impl IntoIterator<Item = TermId>) -> TermId {
        let fls = self.fls();
        let mut flat = Vec::new();
        for t in ts {
            if t == fls {
                continue;
            }
            if matches!(self.term(t), Term::True) {
                return self.tru();
            }
            if !flat.contains(&t) {
                flat.push(t);
            }
        }
        match flat.len() {
            0 => fls,
            1 => flat[0],
            _ => self.mk(Term::Or(flat)),
        }
    }

    pub fn or2(&mut self, a: TermId, b: TermId) -> TermId {
        self.or([a, b])
    }

    pub fn implies(&mut self, a: TermId, b: TermId) -> TermId {
        if matches!(self.term(a), Term::True) {
            return b;
        }
        if matches!(self.term(a), Term::False) || matches!(self.term(b), Term::True) {
            return self.tru();
        }
        self.mk(Term::Implies(a, b))
    }

    pub fn iff(&mut self, a: TermId, b: TermId) -> TermId {
        if a == b {
            return self.tru();
        }
        match (self.term(a).clone(), self.term(b).clone()) {
            (Term::True, _) => b,
            (_, Term::True) => a,
            (Term::False, _) => self.not(b),
            (_, Term::False) => self.not(a),
            _ => self.mk(Term::Iff(a, b)),
        }
    }

    pub fn ite_bool(&mut self, c: TermId, t: TermId, e: TermId) -> TermId {
        match self.term(c) {
            Term::True => t,
            Term::False => e,
            _ if t == e => t,
            _ => self.mk(Term::IteBool(c, t, e)),
        }
    }

    pub fn ite_int(&mut self, c: TermId, t: TermId, e: TermId) -> TermId {
        match self.term(c) {
            Term::True => t,
            Term::False => e,
            _ if t == e => t,
            _ => self.mk(Term::IteInt(c, t, e)),
        }
    }

    pub fn eq_int(&mut self, a: TermId, b: TermId) -> TermId {
        if a == b {
            return self.tru();
        }
        if let (Term::IntConst(x), Term::IntConst(y)) = (self.term(a), self.term(b)) {
            return self.boolean(x == y);
        }
        self.mk(Term::EqInt(a, b))
    }

    pub fn le(&mut self, a: TermId, b: TermId) -> TermId {
        if let (Term::IntConst(x), Term::IntConst(y)) = (self.term(a), self.term(b)) {
            return self.boolean(x <= y);
        }
        self.mk(Term::Le(a, b))
    }

    pub fn lt(&mut self, a: TermId, b: TermId) -> TermId {
        if let (Term::IntConst(x), Term::IntConst(y)) = (self.term(a), self.term(b)) {
            return self.boolean(x < y);
        }
        self.mk(Term::Lt(a, b))
    }

    pub fn add(&mut self, ts: impl IntoIterator<Item = TermId>) -> TermId {
        let mut flat: Vec<TermId> = Vec::new();
        for t in ts {
            if matches!(self.term(t), Term::IntConst(0)) {
                continue;
            }
            flat.push(t);
        }
        match flat.len() {
            0 => self.int(0),
            1 => flat[0],
            _ => self.mk(Term::Add(flat)),
        }
    }

    pub fn sub(&mut self, a: TermId, b: TermId) -> TermId {
        if let (Term::IntConst(x), Term::IntConst(y)) = (self.term(a), self.term(b)) {
            return self.int(x - y);
        }
        self.mk(Term::Sub(a, b))
    }

    pub fn mul(&mut self, a: TermId, b: TermId) -> TermId {
        if let (Term::IntConst(x), Term::IntConst(y)) = (self.term(a), self.term(b)) {
            return self.int(x * y);
        }
        self.mk(Term::Mul(a, b))
    }

    pub fn div(&mut self, a: TermId, b: TermId) -> TermId {
        self.mk(Term::Div(a, b))
    }

    pub fn modulo(&mut self, a: TermId, b: TermId) -> TermId {
        self.mk(Term::Mod(a, b))
    }

    /// ite(c, 1, 0) indicator.
    pub fn indicator(&mut self, c: TermId) -> TermId {
        let one = self.int(1);
        let zero = self.int(0);
        self.ite_int(c, one, zero)
    }

    /// True when the formula needs nonlinear integer arithmetic: a
    /// multiplication, division, or modulo with no constant operand.
    pub fn is_nonlinear(&self, root: TermId) -> bool {
        let mut seen = vec![false; self.terms.len()];
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            if seen[id.0 as usize] {
                continue;
            }
            seen[id.0 as usize] = true;
            let term = self.term(id);
            if let Term::Mul(a, b) | Term::Div(a, b) | Term::Mod(a, b) = term {
                let const_arg = |t: &TermId| matches!(self.term(*t), Term::IntConst(_));
                if !(const_arg(a) || const_arg(b)) {
                    return true;
                }
            }
            term.children(&mut stack);
        }
        false
    }
}

impl Term {
    fn children(&self, out: &mut Vec<TermId>) {
        match self {
            Term::True
            | Term::False
            | Term::IntConst(_)
            | Term::Del(_)
            | Term::AttrVal(..)
            | Term::AttrNull(..)
            | Term::Atom(_) => {}
            Term::Not(a) => out.push(*a),
            Term::And(v) | Term::Or(v) | Term::Add(v) => out.extend(v.iter().copied()),
            Term::Implies(a, b)
            | Term::Iff(a, b)
            | Term::EqInt(a, b)
            | Term::Le(a, b)
            | Term::Lt(a, b)
            | Term::Sub(a, b)
            | Term::Mul(a, b)
            | Term::Div(a, b)
            | Term::Mod(a, b) => {
                out.push(*a);
                out.push(*b);
            }
            Term::IteBool(c, t, e) | Term::IteInt(c, t, e) => {
                out.push(*c);
                out.push(*t);
                out.push(*e);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Ground evaluation
// ---------------------------------------------------------------------------

/// Assignment for ground evaluation: every application the formula mentions
/// must be present.
#[derive(Debug, Default, Clone)]
pub struct GroundEnv {
    pub del: HashMap<TupleId, bool>,
    /// (attr, tuple) -> (is_null, value)
    pub attrs: HashMap<(AttrId, TupleId), (bool, i64)>,
    pub atoms: HashMap<AtomId, bool>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ground {
    B(bool),
    I(i64),
}

impl Ground {
    fn b(self) -> bool {
        match self {
            Ground::B(b) => b,
            Ground::I(_) => panic!("expected boolean ground value"),
        }
    }

    fn i(self) -> i64 {
        match self {
            Ground::I(i) => i,
            Ground::B(_) => panic!("expected integer ground value"),
        }
    }
}

impl TermPool {
    /// Evaluates a term under a total assignment. Panics on missing
    /// assignments; intended for tests over pinned formulas.
    pub fn eval_ground(&self, id: TermId, env: &GroundEnv) -> Ground {
        // Iterative post-order evaluation with memoization; formulas can be
        // wide and moderately deep.
        let mut memo: Vec<Option<Ground>> = vec![None; (id.0 + 1) as usize];
        let mut stack = vec![(id, false)];
        while let Some((cur, expanded)) = stack.pop() {
            if memo[cur.0 as usize].is_some() {
                continue;
            }
            if !expanded {
                stack.push((cur, true));
                let mut kids = Vec::new();
                self.term(cur).children(&mut kids);
                for k in kids {
                    stack.push((k, false));
                }
                continue;
            }
            let get = |t: &TermId| memo[t.0 as usize].unwrap();
            let v = match self.term(cur) {
                Term::True => Ground::B(true),
                Term::False => Ground::B(false),
                Term::IntConst(i) => Ground::I(*i),
                Term::Del(t) => Ground::B(*env
                    .del
                    .get(t)
                    .unwrap_or_else(|| panic!("unassigned Del({})", self.tuple_name(*t)))),
                Term::AttrVal(a, t) => Ground::I(
                    env.attrs
                        .get(&(*a, *t))
                        .unwrap_or_else(|| {
                            panic!(
                                "unassigned {}({})",
                                self.attr_name(*a),
                                self.tuple_name(*t)
                            )
                        })
                        .1,
                ),
                Term::AttrNull(a, t) => Ground::B(
                    env.attrs
                        .get(&(*a, *t))
                        .unwrap_or_else(|| {
                            panic!(
                                "unassigned {}({})",
                                self.attr_name(*a),
                                self.tuple_name(*t)
                            )
                        })
                        .0,
                ),
                Term::Atom(a) => Ground::B(*env
                    .atoms
                    .get(a)
                    .unwrap_or_else(|| panic!("unassigned atom {}", self.atom_name(*a)))),
                Term::Not(a) => Ground::B(!get(a).b()),
                Term::And(v) => Ground::B(v.iter().all(|t| get(t).b())),
                Term::Or(v) => Ground::B(v.iter().any(|t| get(t).b())),
                Term::Implies(a, b) => Ground::B(!get(a).b() || get(b).b()),
                Term::Iff(a, b) => Ground::B(get(a).b() == get(b).b()),
                Term::IteBool(c, t, e) => {
                    if get(c).b() {
                        get(t)
                    } else {
                        get(e)
                    }
                }
                Term::IteInt(c, t, e) => {
                    if get(c).b() {
                        get(t)
                    } else {
                        get(e)
                    }
                }
                Term::EqInt(a, b) => Ground::B(get(a).i() == get(b).i()),
                Term::Le(a, b) => Ground::B(get(a).i() <= get(b).i()),
                Term::Lt(a, b) => Ground::B(get(a).i() < get(b).i()),
                Term::Add(v) => Ground::I(v.iter().map(|t| get(t).i()).sum()),
                Term::Sub(a, b) => Ground::I(get(a).i() - get(b).i()),
                Term::Mul(a, b) => Ground::I(get(a).i() * get(b).i()),
                Term::Div(a, b) => {
                    let d = get(b).i();
                    if d == 0 {
                        panic!("ground division by zero");
                    }
                    Ground::I(get(a).i().div_euclid(d))
                }
                Term::Mod(a, b) => {
                    let d = get(b).i();
                    if d == 0 {
                        panic!("ground modulo by zero");
                    }
                    Ground::I(get(a).i().rem_euclid(d))
                }
            };
            memo[cur.0 as usize] = Some(v);
        }
        memo[id.0 as usize].unwrap()
    }
}

// ---------------------------------------------------------------------------
// SMT-LIB emission
// ---------------------------------------------------------------------------

impl TermPool {
    /// Deterministic SMT-LIB 2 script around a single assertion. Equal
    /// formulas over the same pool produce byte-identical scripts.
    pub fn emit_smtlib(&self, root: TermId, get_model: bool) -> String {
        let mut out = String::new();
        let logic = if self.is_nonlinear(root) {
            "QF_UFNIA"
        } else {
            "QF_UFLIA"
        };
        out.push_str(&format!("(set-logic {logic})\n"));
        out.push_str("(declare-sort Tup 0)\n");
        out.push_str("(declare-fun Del (Tup) Bool)\n");
        for name in &self.tuple_names {
            out.push_str(&format!("(declare-const {name} Tup)\n"));
        }
        for name in &self.attr_names {
            out.push_str(&format!("(declare-fun {} (Tup) Int)\n", attr_val_symbol(name)));
            out.push_str(&format!(
                "(declare-fun {} (Tup) Bool)\n",
                attr_null_symbol(name)
            ));
        }
        for name in &self.atom_names {
            out.push_str(&format!("(declare-const {name} Bool)\n"));
        }
        out.push_str("(assert ");
        self.write_term(&mut out, root);
        out.push_str(")\n(check-sat)\n");
        if get_model {
            out.push_str("(get-model)\n");
        }
        out
    }

    pub fn write_term(&self, out: &mut String, id: TermId) {
        match self.term(id) {
            Term::True => out.push_str("true"),
            Term::False => out.push_str("false"),
            Term::IntConst(i) => {
                if *i < 0 {
                    out.push_str(&format!("(- {})", -i));
                } else {
                    out.push_str(&i.to_string());
                }
            }
            Term::Del(t) => out.push_str(&format!("(Del {})", self.tuple_name(*t))),
            Term::AttrVal(a, t) => out.push_str(&format!(
                "({} {})",
                attr_val_symbol(self.attr_name(*a)),
                self.tuple_name(*t)
            )),
            Term::AttrNull(a, t) => out.push_str(&format!(
                "({} {})",
                attr_null_symbol(self.attr_name(*a)),
                self.tuple_name(*t)
            )),
            Term::Atom(a) => out.push_str(self.atom_name(*a)),
            Term::Not(a) => self.write_app(out, "not", &[*a]),
            Term::And(v) => self.write_app(out, "and", v),
            Term::Or(v) => self.write_app(out, "or", v),
            Term::Implies(a, b) => self.write_app(out, "=>", &[*a, *b]),
            Term::Iff(a, b) | Term::EqInt(a, b) => self.write_app(out, "=", &[*a, *b]),
            Term::IteBool(c, t, e) | Term::IteInt(c, t, e) => {
                self.write_app(out, "ite", &[*c, *t, *e])
            }
            Term::Le(a, b) => self.write_app(out, "<=", &[*a, *b]),
            Term::Lt(a, b) => self.write_app(out, "<", &[*a, *b]),
            Term::Add(v) => self.write_app(out, "+", v),
            Term::Sub(a, b) => self.write_app(out, "-", &[*a, *b]),
            Term::Mul(a, b) => self.write_app(out, "*", &[*a, *b]),
            Term::Div(a, b) => self.write_app(out, "div", &[*a, *b]),
            Term::Mod(a, b) => self.write_app(out, "mod", &[*a, *b]),
        }
    }

    fn write_app(&self, out: &mut String, op: &str, args: &[TermId]) {
        out.push('(');
        out.push_str(op);
        for a in args {
            out.push(' ');
            self.write_term(out, *a);
        }
        out.push(')');
    }
}

pub fn attr_val_symbol(attr: &str) -> String {
    format!("{attr}_val")
}

pub fn attr_null_symbol(attr: &str) -> String {
    format!("{attr}_null")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_consing_dedupes() {
        let mut p = TermPool::new();
        let a = p.int(5);
        let b = p.int(5);
        assert_eq!(a, b);
    }

    #[test]
    fn simplification_units() {
        let mut p = TermPool::new();
        let t = p.tru();
        let f = p.fls();
        let x = {
            let id = p.new_tuple("t1".into());
            p.del(id)
        };
        assert_eq!(p.and([t, x]), x);
        assert_eq!(p.and([f, x]), f);
        assert_eq!(p.or([f, x]), x);
        assert_eq!(p.or([t, x]), t);
        let nn = p.not(x);
        assert_eq!(p.not(nn), x);
    }

    #[test]
    fn ground_eval_basics() {
        let mut p = TermPool::new();
        let t1 = p.new_tuple("t1".into());
        let a = p.attr("R.a");
        let val = p.attr_val(a, t1);
        let five = p.int(5);
        let eq = p.eq_int(val, five);
        let live = p.live(t1);
        let phi = p.and2(eq, live);
        let mut env = GroundEnv::default();
        env.del.insert(t1, false);
        env.attrs.insert((a, t1), (false, 5));
        assert_eq!(p.eval_ground(phi, &env), Ground::B(true));
        env.attrs.insert((a, t1), (false, 6));
        assert_eq!(p.eval_ground(phi, &env), Ground::B(false));
    }

    #[test]
    fn euclidean_division_in_ground_eval() {
        let mut p = TermPool::new();
        let a = p.int(-3);
        let b = p.int(2);
        let d = p.div(a, b);
        let m = p.modulo(a, b);
        assert_eq!(p.eval_ground(d, &GroundEnv::default()), Ground::I(-2));
        assert_eq!(p.eval_ground(m, &GroundEnv::default()), Ground::I(1));
    }

    #[test]
    fn emission_is_deterministic() {
        let build = || {
            let mut p = TermPool::new();
            let t1 = p.new_tuple("t1".into());
            let a = p.attr("R.a");
            let v = p.attr_val(a, t1);
            let n = p.attr_null(a, t1);
            let five = p.int(5);
            let eq = p.eq_int(v, five);
            let nn = p.not(n);
            let phi = p.and2(eq, nn);
            p.emit_smtlib(phi, false)
        };
        assert_eq!(build(), build());
    }

    #[test]
    fn nonlinear_detection() {
        let mut p = TermPool::new();
        let t1 = p.new_tuple("t1".into());
        let a = p.attr("R.a");
        let v = p.attr_val(a, t1);
        let two = p.int(2);
        let lin = p.mul(two, v);
        let zero = p.int(0);
        let lin_phi = p.eq_int(lin, zero);
        assert!(!p.is_nonlinear(lin_phi));
        let sq = p.mul(v, v);
        let nl_phi = p.eq_int(sq, zero);
        assert!(p.is_nonlinear(nl_phi));
    }
}
