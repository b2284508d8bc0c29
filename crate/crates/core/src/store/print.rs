//! S-expression printer. Every `Display` impl of the term types goes through
//! here, so printed terms parse back to themselves.

use std::fmt::{self, Write};

use crate::annot::AnnComp;
use crate::comp::{Binder, Comp};
use crate::expr::Expr;
use crate::hoare::Triple;
use crate::pred::{PostPred, Pred};
use crate::value::{Domain, Value};

fn list<W: Write, T>(
    f: &mut W,
    head: &str,
    items: &[T],
    mut item: impl FnMut(&mut W, &T) -> fmt::Result,
) -> fmt::Result {
    write!(f, "({head}")?;
    for x in items {
        f.write_char(' ')?;
        item(f, x)?;
    }
    f.write_char(')')
}

pub fn write_value<W: Write>(f: &mut W, v: &Value) -> fmt::Result {
    match v {
        Value::Unit => f.write_str("unit"),
        Value::Bool(b) => write!(f, "{b}"),
        Value::Nat(n) => write!(f, "(nat {n})"),
        Value::Id(n) => write!(f, "(id {n})"),
        Value::Absent => f.write_str("absent"),
        Value::Set(xs) => {
            let xs: Vec<_> = xs.iter().collect();
            list(f, "set", &xs, |f, x| write_value(f, x))
        }
        Value::Seq(xs) => list(f, "seq", xs, write_value),
        Value::Map(m) => {
            let kv: Vec<_> = m.iter().collect();
            list(f, "map", &kv, |f, (k, v)| {
                f.write_char('(')?;
                write_value(f, k)?;
                f.write_char(' ')?;
                write_value(f, v)?;
                f.write_char(')')
            })
        }
        Value::Record(r) => {
            let kv: Vec<_> = r.iter().collect();
            list(f, "rec", &kv, |f, (k, v)| {
                write!(f, "({k} ")?;
                write_value(f, v)?;
                f.write_char(')')
            })
        }
    }
}

pub fn write_domain<W: Write>(f: &mut W, d: &Domain) -> fmt::Result {
    match d {
        Domain::Unit => f.write_str("unit"),
        Domain::Bool => f.write_str("bool"),
        Domain::Nat { lo, hi } => write!(f, "(nat {lo} {hi})"),
        Domain::Id { count } => write!(f, "(id {count})"),
        Domain::Set(b) => {
            f.write_str("(set ")?;
            write_domain(f, b)?;
            f.write_char(')')
        }
        Domain::Seq(b, n) => {
            f.write_str("(seq ")?;
            write_domain(f, b)?;
            write!(f, " {n})")
        }
        Domain::Map { key, val, partial } => {
            f.write_str("(map ")?;
            write_domain(f, key)?;
            f.write_char(' ')?;
            write_domain(f, val)?;
            f.write_str(if *partial { " partial)" } else { " total)" })
        }
        Domain::Record(fields) => list(f, "record", fields, |f, (k, d)| {
            write!(f, "({k} ")?;
            write_domain(f, d)?;
            f.write_char(')')
        }),
    }
}

fn op<W: Write>(f: &mut W, head: &str, args: &[&Expr]) -> fmt::Result {
    list(f, head, args, |f, e| write_expr(f, e))
}

pub fn write_expr<W: Write>(f: &mut W, e: &Expr) -> fmt::Result {
    match e {
        Expr::Lit(v) => {
            f.write_str("(lit ")?;
            write_value(f, v)?;
            f.write_char(')')
        }
        Expr::Var(x) => f.write_str(x),
        Expr::Field(x) => write!(f, "(field {x})"),
        Expr::Proj(e, x) => {
            f.write_str("(proj ")?;
            write_expr(f, e)?;
            write!(f, " {x})")
        }
        Expr::RecUpd(e, x, v) => {
            f.write_str("(rec-upd ")?;
            write_expr(f, e)?;
            write!(f, " {x} ")?;
            write_expr(f, v)?;
            f.write_char(')')
        }
        Expr::MapUpd(m, k, v) => op(f, "map-upd", &[m, k, v]),
        Expr::Lookup(m, k) => op(f, "lookup", &[m, k]),
        Expr::The(m, k) => op(f, "the", &[m, k]),
        Expr::Dom(m) => op(f, "dom", &[m]),
        Expr::SetMinus(a, b) => op(f, "minus", &[a, b]),
        Expr::SetLit(xs) => list(f, "set-of", xs, write_expr),
        Expr::Cons(a, b) => op(f, "cons", &[a, b]),
        Expr::Apply(m, k) => op(f, "apply", &[m, k]),
        Expr::Assign(m, k, v) => op(f, "assign", &[m, k, v]),
        Expr::In(a, b) => op(f, "in", &[a, b]),
        Expr::NotIn(a, b) => op(f, "not-in", &[a, b]),
        Expr::Eq(a, b) => op(f, "eq", &[a, b]),
        Expr::Not(a) => op(f, "not", &[a]),
        Expr::And(a, b) => op(f, "and", &[a, b]),
        Expr::Or(a, b) => op(f, "or", &[a, b]),
        Expr::Add(a, b) => op(f, "add", &[a, b]),
        Expr::Mod(a, b) => op(f, "mod", &[a, b]),
    }
}

pub fn write_pred<W: Write>(f: &mut W, p: &Pred) -> fmt::Result {
    match p {
        Pred::True => f.write_str("true"),
        Pred::False => f.write_str("false"),
        Pred::Atom(e) => {
            f.write_str("(atom ")?;
            write_expr(f, e)?;
            f.write_char(')')
        }
        Pred::And(ps) => list(f, "and", ps, write_pred),
        Pred::Or(ps) => list(f, "or", ps, write_pred),
        Pred::Not(p) => {
            f.write_str("(not ")?;
            write_pred(f, p)?;
            f.write_char(')')
        }
        Pred::Implies(a, b) => {
            f.write_str("(implies ")?;
            write_pred(f, a)?;
            f.write_char(' ')?;
            write_pred(f, b)?;
            f.write_char(')')
        }
        Pred::Forall(x, d, b) | Pred::Exists(x, d, b) => {
            let head = if matches!(p, Pred::Forall(..)) { "forall" } else { "exists" };
            write!(f, "({head} {x} ")?;
            write_domain(f, d)?;
            f.write_char(' ')?;
            write_pred(f, b)?;
            f.write_char(')')
        }
        Pred::ForallIn(x, e, b) | Pred::Let(x, e, b) | Pred::Update(x, e, b) => {
            let head = match p {
                Pred::ForallIn(..) => "forall-in",
                Pred::Let(..) => "let",
                _ => "update",
            };
            write!(f, "({head} {x} ")?;
            write_expr(f, e)?;
            f.write_char(' ')?;
            write_pred(f, b)?;
            f.write_char(')')
        }
        Pred::Def(name, args) => {
            write!(f, "(def {name}")?;
            for a in args {
                f.write_char(' ')?;
                write_expr(f, a)?;
            }
            f.write_char(')')
        }
    }
}

pub fn write_post<W: Write>(f: &mut W, q: &PostPred) -> fmt::Result {
    write!(f, "(post {} ", q.ret)?;
    write_pred(f, &q.body)?;
    f.write_char(')')
}

pub fn write_binder<W: Write>(f: &mut W, b: &Binder) -> fmt::Result {
    match &b.dom {
        None => f.write_str(&b.name),
        Some(d) => {
            write!(f, "({} ", b.name)?;
            write_domain(f, d)?;
            f.write_char(')')
        }
    }
}

pub fn write_comp<W: Write>(f: &mut W, c: &Comp) -> fmt::Result {
    match c {
        Comp::Return(e) => {
            f.write_str("(return ")?;
            write_expr(f, e)?;
            f.write_char(')')
        }
        Comp::Gets(x) => write!(f, "(gets {x})"),
        Comp::Put(x, e) => {
            write!(f, "(put {x} ")?;
            write_expr(f, e)?;
            f.write_char(')')
        }
        Comp::Select(e) => {
            f.write_str("(select ")?;
            write_expr(f, e)?;
            f.write_char(')')
        }
        Comp::Bind(a, x, b) => {
            f.write_str("(bind ")?;
            write_binder(f, x)?;
            f.write_char(' ')?;
            write_comp(f, a)?;
            f.write_char(' ')?;
            write_comp(f, b)?;
            f.write_char(')')
        }
        Comp::If(e, a, b) => {
            f.write_str("(if ")?;
            write_expr(f, e)?;
            f.write_char(' ')?;
            write_comp(f, a)?;
            f.write_char(' ')?;
            write_comp(f, b)?;
            f.write_char(')')
        }
        Comp::Call(name, args) => {
            write!(f, "(call {name}")?;
            for a in args {
                f.write_char(' ')?;
                write_expr(f, a)?;
            }
            f.write_char(')')
        }
        Comp::Assert(p) => {
            f.write_str("(assert ")?;
            write_pred(f, p)?;
            f.write_char(')')
        }
    }
}

pub fn write_ann<W: Write>(f: &mut W, a: &AnnComp) -> fmt::Result {
    match a {
        AnnComp::Step(p, c) => {
            f.write_str("(step ")?;
            write_pred(f, p)?;
            f.write_char(' ')?;
            write_comp(f, c)?;
            f.write_char(')')
        }
        AnnComp::BindA(a, x, b) => {
            f.write_str("(bind-a ")?;
            write_binder(f, x)?;
            f.write_char(' ')?;
            write_ann(f, a)?;
            f.write_char(' ')?;
            write_ann(f, b)?;
            f.write_char(')')
        }
        AnnComp::IfA(e, a, b) => {
            f.write_str("(if-a ")?;
            write_expr(f, e)?;
            f.write_char(' ')?;
            write_ann(f, a)?;
            f.write_char(' ')?;
            write_ann(f, b)?;
            f.write_char(')')
        }
    }
}

pub fn write_scope<W: Write>(f: &mut W, scope: &[(String, Domain)]) -> fmt::Result {
    list(f, "scope", scope, |f, (x, d)| {
        write!(f, "({x} ")?;
        write_domain(f, d)?;
        f.write_char(')')
    })
}

pub fn write_triple<W: Write>(f: &mut W, t: &Triple) -> fmt::Result {
    f.write_str("(triple ")?;
    write_scope(f, &t.scope)?;
    f.write_char(' ')?;
    write_pred(f, &t.pre)?;
    f.write_char(' ')?;
    write_comp(f, &t.prog)?;
    f.write_char(' ')?;
    write_post(f, &t.post)?;
    f.write_char(')')
}

/// Renders any printer into a string.
pub fn to_string<T: ?Sized>(x: &T, w: impl Fn(&mut String, &T) -> fmt::Result) -> String {
    let mut s = String::new();
    w(&mut s, x).expect("writing to a String cannot fail");
    s
}
