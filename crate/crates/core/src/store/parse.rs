//! Terms from s-expressions; the inverse of [`super::print`].

use std::collections::{BTreeMap, BTreeSet};

use super::sexp::{read_one, Sexp};
use crate::annot::AnnComp;
use crate::comp::{Binder, Comp};
use crate::error::Result;
use crate::expr::Expr;
use crate::hoare::{Scope, Triple};
use crate::pred::{PostPred, Pred};
use crate::value::{Domain, Value};

fn arity<'a>(x: &Sexp, args: &'a [Sexp], n: usize, head: &str) -> Result<&'a [Sexp]> {
    if args.len() == n {
        Ok(args)
    } else {
        Err(x.pos().error(format!("`{head}` takes {n} arguments, got {}", args.len())))
    }
}

pub fn symbol(x: &Sexp) -> Result<String> {
    match x.atom() {
        Some(a) if !a.is_empty() && a.parse::<u64>().is_err() => Ok(a.to_string()),
        _ => Err(x.pos().error("expected a name")),
    }
}

pub fn number(x: &Sexp) -> Result<u32> {
    x.atom()
        .and_then(|a| a.parse().ok())
        .ok_or_else(|| x.pos().error("expected a number"))
}

fn pair(x: &Sexp) -> Result<(&Sexp, &Sexp)> {
    match x.list() {
        Some([a, b]) => Ok((a, b)),
        _ => Err(x.pos().error("expected a pair")),
    }
}

pub fn value(x: &Sexp) -> Result<Value> {
    if let Some(a) = x.atom() {
        return match a {
            "unit" => Ok(Value::Unit),
            "true" => Ok(Value::Bool(true)),
            "false" => Ok(Value::Bool(false)),
            "absent" => Ok(Value::Absent),
            _ => Err(x.pos().error(format!("unknown value `{a}`"))),
        };
    }
    let (head, args) = x.form().ok_or_else(|| x.pos().error("expected a value"))?;
    Ok(match head {
        "nat" => Value::Nat(number(&arity(x, args, 1, head)?[0])?),
        "id" => Value::Id(number(&arity(x, args, 1, head)?[0])?),
        "set" => Value::Set(args.iter().map(value).collect::<Result<BTreeSet<_>>>()?),
        "seq" => Value::Seq(args.iter().map(value).collect::<Result<_>>()?),
        "map" => {
            let mut m = BTreeMap::new();
            for kv in args {
                let (k, v) = pair(kv)?;
                m.insert(value(k)?, value(v)?);
            }
            Value::Map(m)
        }
        "rec" => {
            let mut m = BTreeMap::new();
            for kv in args {
                let (k, v) = pair(kv)?;
                m.insert(symbol(k)?, value(v)?);
            }
            Value::Record(m)
        }
        _ => return Err(x.pos().error(format!("unknown value form `{head}`"))),
    })
}

pub fn domain(x: &Sexp) -> Result<Domain> {
    if let Some(a) = x.atom() {
        return match a {
            "unit" => Ok(Domain::Unit),
            "bool" => Ok(Domain::Bool),
            _ => Err(x.pos().error(format!("unknown domain `{a}`"))),
        };
    }
    let (head, args) = x.form().ok_or_else(|| x.pos().error("expected a domain"))?;
    let d = match head {
        "nat" => {
            let a = arity(x, args, 2, head)?;
            Domain::nat(number(&a[0])?, number(&a[1])?)
        }
        "id" => Domain::id(number(&arity(x, args, 1, head)?[0])?),
        "set" => Domain::set(domain(&arity(x, args, 1, head)?[0])?),
        "seq" => {
            let a = arity(x, args, 2, head)?;
            Domain::seq(domain(&a[0])?, number(&a[1])?)
        }
        "map" => {
            let a = arity(x, args, 3, head)?;
            let partial = match a[2].atom() {
                Some("partial") => true,
                Some("total") => false,
                _ => return Err(a[2].pos().error("expected `partial` or `total`")),
            };
            Domain::map(domain(&a[0])?, domain(&a[1])?, partial)
        }
        "record" => Domain::Record(
            args.iter()
                .map(|kv| {
                    let (k, d) = pair(kv)?;
                    Ok((symbol(k)?, domain(d)?))
                })
                .collect::<Result<_>>()?,
        ),
        _ => return Err(x.pos().error(format!("unknown domain form `{head}`"))),
    };
    d.validate().map_err(|e| x.pos().error(e.to_string()))?;
    Ok(d)
}

pub fn expr(x: &Sexp) -> Result<Expr> {
    if x.atom().is_some() {
        return Ok(Expr::Var(symbol(x)?));
    }
    let (head, args) = x.form().ok_or_else(|| x.pos().error("expected an expression"))?;
    let b = |i: usize| -> Result<Box<Expr>> { Ok(Box::new(expr(&args[i])?)) };
    let n = |k: usize| arity(x, args, k, head).map(|_| ());
    Ok(match head {
        "lit" => {
            n(1)?;
            Expr::Lit(value(&args[0])?)
        }
        "field" => {
            n(1)?;
            Expr::Field(symbol(&args[0])?)
        }
        "proj" => {
            n(2)?;
            Expr::Proj(b(0)?, symbol(&args[1])?)
        }
        "rec-upd" => {
            n(3)?;
            Expr::RecUpd(b(0)?, symbol(&args[1])?, b(2)?)
        }
        "map-upd" => {
            n(3)?;
            Expr::MapUpd(b(0)?, b(1)?, b(2)?)
        }
        "assign" => {
            n(3)?;
            Expr::Assign(b(0)?, b(1)?, b(2)?)
        }
        "set-of" => Expr::SetLit(args.iter().map(expr).collect::<Result<_>>()?),
        "dom" | "not" => {
            n(1)?;
            if head == "dom" {
                Expr::Dom(b(0)?)
            } else {
                Expr::Not(b(0)?)
            }
        }
        _ => {
            let make: fn(Box<Expr>, Box<Expr>) -> Expr = match head {
                "lookup" => Expr::Lookup,
                "the" => Expr::The,
                "minus" => Expr::SetMinus,
                "cons" => Expr::Cons,
                "apply" => Expr::Apply,
                "in" => Expr::In,
                "not-in" => Expr::NotIn,
                "eq" => Expr::Eq,
                "and" => Expr::And,
                "or" => Expr::Or,
                "add" => Expr::Add,
                "mod" => Expr::Mod,
                _ => return Err(x.pos().error(format!("unknown expression form `{head}`"))),
            };
            n(2)?;
            make(b(0)?, b(1)?)
        }
    })
}

pub fn pred(x: &Sexp) -> Result<Pred> {
    if let Some(a) = x.atom() {
        return match a {
            "true" => Ok(Pred::True),
            "false" => Ok(Pred::False),
            _ => Err(x.pos().error(format!("expected a predicate, got `{a}`"))),
        };
    }
    let (head, args) = x.form().ok_or_else(|| x.pos().error("expected a predicate"))?;
    let n = |k: usize| arity(x, args, k, head).map(|_| ());
    let p = |i: usize| -> Result<Box<Pred>> { Ok(Box::new(pred(&args[i])?)) };
    Ok(match head {
        "atom" => {
            n(1)?;
            Pred::Atom(expr(&args[0])?)
        }
        "and" => Pred::And(args.iter().map(pred).collect::<Result<_>>()?),
        "or" => Pred::Or(args.iter().map(pred).collect::<Result<_>>()?),
        "not" => {
            n(1)?;
            Pred::Not(p(0)?)
        }
        "implies" => {
            n(2)?;
            Pred::Implies(p(0)?, p(1)?)
        }
        "forall" | "exists" => {
            n(3)?;
            let (v, d, body) = (symbol(&args[0])?, domain(&args[1])?, p(2)?);
            if head == "forall" {
                Pred::Forall(v, d, body)
            } else {
                Pred::Exists(v, d, body)
            }
        }
        "forall-in" | "let" | "update" => {
            n(3)?;
            let (v, e, body) = (symbol(&args[0])?, expr(&args[1])?, p(2)?);
            match head {
                "forall-in" => Pred::ForallIn(v, e, body),
                "let" => Pred::Let(v, e, body),
                _ => Pred::Update(v, e, body),
            }
        }
        "def" => {
            let (name, rest) = args
                .split_first()
                .ok_or_else(|| x.pos().error("`def` needs a name"))?;
            Pred::Def(symbol(name)?, rest.iter().map(expr).collect::<Result<_>>()?)
        }
        _ => return Err(x.pos().error(format!("unknown predicate form `{head}`"))),
    })
}

pub fn post(x: &Sexp) -> Result<PostPred> {
    match x.form() {
        Some(("post", args)) => {
            let a = arity(x, args, 2, "post")?;
            Ok(PostPred::new(&symbol(&a[0])?, pred(&a[1])?))
        }
        _ => Err(x.pos().error("expected `(post r P)`")),
    }
}

pub fn binder(x: &Sexp) -> Result<Binder> {
    match x.list() {
        None => Ok(Binder::new(&symbol(x)?)),
        Some([name, d]) => Ok(Binder::typed(&symbol(name)?, domain(d)?)),
        Some(_) => Err(x.pos().error("expected a binder `x` or `(x D)`")),
    }
}

pub fn comp(x: &Sexp) -> Result<Comp> {
    let (head, args) = x.form().ok_or_else(|| x.pos().error("expected a computation"))?;
    let n = |k: usize| arity(x, args, k, head).map(|_| ());
    let c = |i: usize| -> Result<Box<Comp>> { Ok(Box::new(comp(&args[i])?)) };
    Ok(match head {
        "return" => {
            n(1)?;
            Comp::Return(expr(&args[0])?)
        }
        "gets" => {
            n(1)?;
            Comp::Gets(symbol(&args[0])?)
        }
        "put" => {
            n(2)?;
            Comp::Put(symbol(&args[0])?, expr(&args[1])?)
        }
        "select" => {
            n(1)?;
            Comp::Select(expr(&args[0])?)
        }
        "bind" => {
            n(3)?;
            Comp::Bind(c(1)?, binder(&args[0])?, c(2)?)
        }
        "if" => {
            n(3)?;
            Comp::If(expr(&args[0])?, c(1)?, c(2)?)
        }
        "call" => {
            let (name, rest) = args
                .split_first()
                .ok_or_else(|| x.pos().error("`call` needs a program name"))?;
            Comp::Call(symbol(name)?, rest.iter().map(expr).collect::<Result<_>>()?)
        }
        "assert" => {
            n(1)?;
            Comp::Assert(pred(&args[0])?)
        }
        _ => return Err(x.pos().error(format!("unknown computation form `{head}`"))),
    })
}

pub fn ann(x: &Sexp) -> Result<AnnComp> {
    let (head, args) = x
        .form()
        .ok_or_else(|| x.pos().error("expected an annotated computation"))?;
    let n = |k: usize| arity(x, args, k, head).map(|_| ());
    let a = |i: usize| -> Result<Box<AnnComp>> { Ok(Box::new(ann(&args[i])?)) };
    Ok(match head {
        "step" => {
            n(2)?;
            AnnComp::Step(pred(&args[0])?, comp(&args[1])?)
        }
        "bind-a" => {
            n(3)?;
            AnnComp::BindA(a(1)?, binder(&args[0])?, a(2)?)
        }
        "if-a" => {
            n(3)?;
            AnnComp::IfA(expr(&args[0])?, a(1)?, a(2)?)
        }
        _ => return Err(x.pos().error(format!("unknown annotation form `{head}`"))),
    })
}

/// `((x D)..)`
pub fn scope_entries(x: &Sexp) -> Result<Scope> {
    x.list()
        .ok_or_else(|| x.pos().error("expected `((x D)..)`"))?
        .iter()
        .map(|kv| {
            let (k, d) = pair(kv)?;
            Ok((symbol(k)?, domain(d)?))
        })
        .collect()
}

pub fn scope(x: &Sexp) -> Result<Scope> {
    match x.form() {
        Some(("scope", args)) => args
            .iter()
            .map(|kv| {
                let (k, d) = pair(kv)?;
                Ok((symbol(k)?, domain(d)?))
            })
            .collect(),
        _ => Err(x.pos().error("expected `(scope (x D)..)`")),
    }
}

pub fn triple(x: &Sexp) -> Result<Triple> {
    match x.form() {
        Some(("triple", args)) => {
            let a = arity(x, args, 4, "triple")?;
            Ok(Triple::new(scope(&a[0])?, pred(&a[1])?, comp(&a[2])?, post(&a[3])?))
        }
        _ => Err(x.pos().error("expected `(triple (scope ..) P c (post r Q))`")),
    }
}

/// Parses a single term of any kind from text.
pub fn from_str<T>(src: &str, f: fn(&Sexp) -> Result<T>) -> Result<T> {
    f(&read_one(src)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn round<T: std::fmt::Display + PartialEq + std::fmt::Debug>(src: &str, f: fn(&Sexp) -> Result<T>) {
        let t = from_str(src, f).unwrap();
        assert_eq!(t.to_string(), src);
        assert_eq!(from_str(&t.to_string(), f).unwrap(), t);
    }

    #[test]
    fn round_trips() {
        round("(map (id 2) (record (priority (nat 0 1))) partial)", domain);
        round("(rec (priority (nat 1)))", value);
        round("(map ((id 0) (seq)) ((id 1) (set false true)))", value);
        round("(eq (proj (the (field tcbs) i) priority) p)", expr);
        round("(forall-in x (field ids) (and (atom (not-in x (field free))) true))", pred);
        round("(post r (def valid_free_except r))", post);
        round(
            "(bind (i (id 2)) (call alloc) (bind _ (put b (lit true)) (if b (return i) (assert false))))",
            comp,
        );
        round("(bind-a x (step true (gets b)) (step (atom x) (return (lit unit))))", ann);
    }

    #[test]
    fn errors_carry_positions() {
        let e = from_str("(and\n  (atom x)\n  (frob))", pred).unwrap_err();
        assert_eq!(
            e,
            Error::Parse {
                line: 3,
                col: 3,
                msg: "unknown predicate form `frob`".into()
            }
        );
        assert!(matches!(from_str("(nat 3 1)", domain), Err(Error::Parse { .. })));
        assert!(matches!(from_str("(put x)", comp), Err(Error::Parse { line: 1, col: 1, .. })));
    }
}
