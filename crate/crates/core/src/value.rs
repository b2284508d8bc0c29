//! Finite values and the domains they are drawn from.
//!
//! Every domain enumerates in a fixed canonical order, which is what makes
//! counterexamples deterministic:
//!
//! - `bool`: `false, true`
//! - `nat lo hi` / `id n`: ascending
//! - `set D`: ascending cardinality, then lexicographic over the members'
//!   positions in the enumeration of `D`
//! - `map K V`: lexicographic over the keys of `K` in order, each key ranging
//!   over `absent` (partial maps only) followed by the members of `V`
//! - `seq D n`: ascending length, then lexicographic
//! - `record`: lexicographic in declared field order

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::Error;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Unit,
    Bool(bool),
    Nat(u32),
    Id(u32),
    Record(BTreeMap<String, Value>),
    Set(BTreeSet<Value>),
    Map(BTreeMap<Value, Value>),
    Seq(Vec<Value>),
    /// Result of a map lookup that missed.
    Absent,
}

impl Value {
    pub fn record<I, S>(fields: I) -> Value
    where
        I: IntoIterator<Item = (S, Value)>,
        S: Into<String>,
    {
        Value::Record(fields.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn set<I: IntoIterator<Item = Value>>(items: I) -> Value {
        Value::Set(items.into_iter().collect())
    }

    pub fn ids<I: IntoIterator<Item = u32>>(items: I) -> Value {
        Value::Set(items.into_iter().map(Value::Id).collect())
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_nat(&self) -> Option<u32> {
        match self {
            Value::Nat(n) => Some(*n),
            _ => None,
        }
    }

    /// Name of the value's shape, used in diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Value::Unit => "unit",
            Value::Bool(_) => "bool",
            Value::Nat(_) => "nat",
            Value::Id(_) => "id",
            Value::Record(_) => "record",
            Value::Set(_) => "set",
            Value::Map(_) => "map",
            Value::Seq(_) => "seq",
            Value::Absent => "absent",
        }
    }

    /// A domain that certainly contains this value. Exact for scalars; for
    /// collections the hull of the members. `None` when nothing sensible can
    /// be said (empty collections, `absent`).
    pub fn natural_domain(&self) -> Option<Domain> {
        match self {
            Value::Unit => Some(Domain::Unit),
            Value::Bool(_) => Some(Domain::Bool),
            Value::Nat(n) => Some(Domain::Nat { lo: *n, hi: *n }),
            Value::Id(k) => Some(Domain::Id { count: k + 1 }),
            Value::Record(fields) => {
                let mut out = Vec::with_capacity(fields.len());
                for (name, v) in fields {
                    out.push((name.clone(), v.natural_domain()?));
                }
                Some(Domain::Record(out))
            }
            Value::Set(items) => {
                let base = join_all(items.iter().map(Value::natural_domain))?;
                Some(Domain::Set(Box::new(base)))
            }
            Value::Seq(items) => {
                let base = join_all(items.iter().map(Value::natural_domain))?;
                Some(Domain::Seq(Box::new(base), items.len() as u32))
            }
            Value::Map(entries) => {
                let key = join_all(entries.keys().map(Value::natural_domain))?;
                let val = join_all(entries.values().map(Value::natural_domain))?;
                Some(Domain::Map {
                    key: Box::new(key),
                    val: Box::new(val),
                    partial: true,
                })
            }
            Value::Absent => None,
        }
    }
}

fn join_all(mut doms: impl Iterator<Item = Option<Domain>>) -> Option<Domain> {
    let mut acc = doms.next()??;
    for d in doms {
        acc = acc.join(&d?)?;
    }
    Some(acc)
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        crate::store::print::write_value(f, self)
    }
}

/// A finite set of values, described intensionally.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Domain {
    Unit,
    Bool,
    Nat { lo: u32, hi: u32 },
    Id { count: u32 },
    Set(Box<Domain>),
    /// Finite maps. A total map (`partial == false`) has every key of `key`.
    Map {
        key: Box<Domain>,
        val: Box<Domain>,
        partial: bool,
    },
    Seq(Box<Domain>, u32),
    Record(Vec<(String, Domain)>),
}

impl Domain {
    pub fn nat(lo: u32, hi: u32) -> Domain {
        Domain::Nat { lo, hi }
    }

    pub fn id(count: u32) -> Domain {
        Domain::Id { count }
    }

    pub fn set(base: Domain) -> Domain {
        Domain::Set(Box::new(base))
    }

    pub fn seq(base: Domain, max_len: u32) -> Domain {
        Domain::Seq(Box::new(base), max_len)
    }

    pub fn map(key: Domain, val: Domain, partial: bool) -> Domain {
        Domain::Map {
            key: Box::new(key),
            val: Box::new(val),
            partial,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        match self {
            Domain::Unit | Domain::Bool => Ok(()),
            Domain::Nat { lo, hi } if hi < lo => Err(Error::MalformedDomain(format!(
                "nat range {lo}..{hi} is empty"
            ))),
            Domain::Nat { .. } => Ok(()),
            Domain::Id { count: 0 } => Err(Error::MalformedDomain(
                "identifier domain with zero members".into(),
            )),
            Domain::Id { .. } => Ok(()),
            Domain::Set(b) | Domain::Seq(b, _) => b.validate(),
            Domain::Map { key, val, .. } => {
                key.validate()?;
                val.validate()
            }
            Domain::Record(fields) => {
                let mut seen = BTreeSet::new();
                for (name, d) in fields {
                    if !seen.insert(name) {
                        return Err(Error::MalformedDomain(format!(
                            "record field `{name}` declared twice"
                        )));
                    }
                    d.validate()?;
                }
                Ok(())
            }
        }
    }

    /// Number of members, saturating at `u128::MAX`.
    pub fn size(&self) -> u128 {
        match self {
            Domain::Unit => 1,
            Domain::Bool => 2,
            Domain::Nat { lo, hi } => (*hi as u128).saturating_sub(*lo as u128) + 1,
            Domain::Id { count } => *count as u128,
            Domain::Set(b) => pow(2, b.size()),
            Domain::Map { key, val, partial } => {
                let per_key = val.size() + u128::from(*partial);
                pow(per_key, key.size())
            }
            Domain::Seq(b, max_len) => {
                let n = b.size();
                (0..=*max_len).fold(0u128, |acc, k| acc.saturating_add(pow(n, k as u128)))
            }
            Domain::Record(fields) => fields
                .iter()
                .fold(1u128, |acc, (_, d)| acc.saturating_mul(d.size())),
        }
    }

    pub fn contains(&self, v: &Value) -> bool {
        self.member(v, true)
    }

    /// Like [`Domain::contains`] but ignoring sequence length bounds. States
    /// reached by running a program may hold sequences longer than the
    /// bound; only initial states are drawn from the bounded universe.
    pub fn admits(&self, v: &Value) -> bool {
        self.member(v, false)
    }

    fn member(&self, v: &Value, bounded: bool) -> bool {
        match (self, v) {
            (Domain::Unit, Value::Unit) => true,
            (Domain::Bool, Value::Bool(_)) => true,
            (Domain::Nat { lo, hi }, Value::Nat(n)) => lo <= n && n <= hi,
            (Domain::Id { count }, Value::Id(k)) => k < count,
            (Domain::Set(b), Value::Set(items)) => items.iter().all(|x| b.member(x, bounded)),
            (Domain::Seq(b, max_len), Value::Seq(items)) => {
                (!bounded || items.len() <= *max_len as usize)
                    && items.iter().all(|x| b.member(x, bounded))
            }
            (Domain::Map { key, val, partial }, Value::Map(entries)) => {
                entries
                    .iter()
                    .all(|(k, x)| key.member(k, bounded) && val.member(x, bounded))
                    && (*partial || key.size() == entries.len() as u128)
            }
            (Domain::Record(fields), Value::Record(vals)) => {
                fields.len() == vals.len()
                    && fields
                        .iter()
                        .all(|(name, d)| vals.get(name).is_some_and(|x| d.member(x, bounded)))
            }
            _ => false,
        }
    }

    /// Whether every member of `other` is a member of `self`.
    pub fn covers(&self, other: &Domain) -> bool {
        if self == other {
            return true;
        }
        match (self, other) {
            (Domain::Nat { lo, hi }, Domain::Nat { lo: l2, hi: h2 }) => lo <= l2 && h2 <= hi,
            (Domain::Id { count }, Domain::Id { count: c2 }) => c2 <= count,
            (Domain::Set(a), Domain::Set(b)) => a.covers(b),
            (Domain::Seq(a, n), Domain::Seq(b, m)) => m <= n && a.covers(b),
            (
                Domain::Map { key, val, partial },
                Domain::Map {
                    key: k2,
                    val: v2,
                    partial: p2,
                },
            ) => {
                if *partial {
                    key.covers(k2) && val.covers(v2)
                } else {
                    !*p2 && key == k2 && val.covers(v2)
                }
            }
            (Domain::Record(a), Domain::Record(b)) => {
                a.len() == b.len()
                    && a.iter()
                        .zip(b)
                        .all(|((n1, d1), (n2, d2))| n1 == n2 && d1.covers(d2))
            }
            _ => false,
        }
    }

    /// Smallest domain of the same shape covering both, if the shapes agree.
    pub fn join(&self, other: &Domain) -> Option<Domain> {
        match (self, other) {
            (a, b) if a == b => Some(a.clone()),
            (Domain::Nat { lo, hi }, Domain::Nat { lo: l2, hi: h2 }) => Some(Domain::Nat {
                lo: *lo.min(l2),
                hi: *hi.max(h2),
            }),
            (Domain::Id { count }, Domain::Id { count: c2 }) => Some(Domain::Id {
                count: *count.max(c2),
            }),
            (Domain::Set(a), Domain::Set(b)) => Some(Domain::Set(Box::new(a.join(b)?))),
            (Domain::Seq(a, n), Domain::Seq(b, m)) => {
                Some(Domain::Seq(Box::new(a.join(b)?), *n.max(m)))
            }
            (
                Domain::Map { key, val, partial },
                Domain::Map {
                    key: k2,
                    val: v2,
                    partial: p2,
                },
            ) => {
                let key_join = key.join(k2)?;
                let total = !*partial && !*p2 && key == k2;
                Some(Domain::Map {
                    key: Box::new(key_join),
                    val: Box::new(val.join(v2)?),
                    partial: !total,
                })
            }
            (Domain::Record(a), Domain::Record(b)) if a.len() == b.len() => {
                let mut out = Vec::with_capacity(a.len());
                for ((n1, d1), (n2, d2)) in a.iter().zip(b) {
                    if n1 != n2 {
                        return None;
                    }
                    out.push((n1.clone(), d1.join(d2)?));
                }
                Some(Domain::Record(out))
            }
            _ => None,
        }
    }

    /// All members, in canonical order.
    pub fn enumerate(&self) -> Result<Vec<Value>, Error> {
        self.validate()?;
        Ok(self.members())
    }

    fn members(&self) -> Vec<Value> {
        match self {
            Domain::Unit => vec![Value::Unit],
            Domain::Bool => vec![Value::Bool(false), Value::Bool(true)],
            Domain::Nat { lo, hi } => (*lo..=*hi).map(Value::Nat).collect(),
            Domain::Id { count } => (0..*count).map(Value::Id).collect(),
            Domain::Set(b) => {
                let base = b.members();
                let mut out = Vec::new();
                for k in 0..=base.len() {
                    for combo in combinations(base.len(), k) {
                        out.push(Value::Set(combo.into_iter().map(|i| base[i].clone()).collect()));
                    }
                }
                out
            }
            Domain::Seq(b, max_len) => {
                let base = b.members();
                let mut out = Vec::new();
                for len in 0..=*max_len as usize {
                    for digits in product(&vec![base.len(); len]) {
                        out.push(Value::Seq(
                            digits.into_iter().map(|i| base[i].clone()).collect(),
                        ));
                    }
                }
                out
            }
            Domain::Map { key, val, partial } => {
                let keys = key.members();
                let mut choices: Vec<Option<Value>> = Vec::new();
                if *partial {
                    choices.push(None);
                }
                choices.extend(val.members().into_iter().map(Some));
                product(&vec![choices.len(); keys.len()])
                    .into_iter()
                    .map(|digits| {
                        Value::Map(
                            keys.iter()
                                .zip(digits)
                                .filter_map(|(k, d)| choices[d].clone().map(|v| (k.clone(), v)))
                                .collect(),
                        )
                    })
                    .collect()
            }
            Domain::Record(fields) => {
                let per_field: Vec<Vec<Value>> = fields.iter().map(|(_, d)| d.members()).collect();
                let radices: Vec<usize> = per_field.iter().map(Vec::len).collect();
                product(&radices)
                    .into_iter()
                    .map(|digits| {
                        Value::Record(
                            fields
                                .iter()
                                .zip(digits)
                                .enumerate()
                                .map(|(i, ((name, _), d))| (name.clone(), per_field[i][d].clone()))
                                .collect(),
                        )
                    })
                    .collect()
            }
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        crate::store::print::write_domain(f, self)
    }
}

fn pow(base: u128, exp: u128) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base);
        if acc == u128::MAX {
            break;
        }
    }
    acc
}

/// k-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let Some(i) = (0..k).rev().find(|&i| cur[i] != i + n - k) else {
            return out;
        };
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Mixed-radix counting, most significant digit first.
pub(crate) fn product(radices: &[usize]) -> Vec<Vec<usize>> {
    if radices.contains(&0) {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut digits = vec![0usize; radices.len()];
    loop {
        out.push(digits.clone());
        let mut i = radices.len();
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < radices[i] {
                break;
            }
            digits[i] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bool_domain_order() {
        assert_eq!(
            Domain::Bool.enumerate().unwrap(),
            vec![Value::Bool(false), Value::Bool(true)]
        );
    }

    #[test]
    fn singleton_nat_range() {
        assert_eq!(Domain::nat(3, 3).enumerate().unwrap(), vec![Value::Nat(3)]);
    }

    #[test]
    fn seq_of_two_ids_up_to_length_two() {
        let seqs = Domain::seq(Domain::id(2), 2).enumerate().unwrap();
        let ids = |xs: &[u32]| Value::Seq(xs.iter().copied().map(Value::Id).collect());
        assert_eq!(
            seqs,
            vec![
                ids(&[]),
                ids(&[0]),
                ids(&[1]),
                ids(&[0, 0]),
                ids(&[0, 1]),
                ids(&[1, 0]),
                ids(&[1, 1]),
            ]
        );
    }

    #[test]
    fn set_order_is_cardinality_then_lex() {
        let sets = Domain::set(Domain::id(3)).enumerate().unwrap();
        let expected: Vec<Value> = [
            &[][..],
            &[0],
            &[1],
            &[2],
            &[0, 1],
            &[0, 2],
            &[1, 2],
            &[0, 1, 2],
        ]
        .iter()
        .map(|xs| Value::ids(xs.iter().copied()))
        .collect();
        assert_eq!(sets, expected);
    }

    #[test]
    fn partial_map_lists_absent_first() {
        let maps = Domain::map(Domain::id(1), Domain::Bool, true)
            .enumerate()
            .unwrap();
        assert_eq!(maps.len(), 3);
        assert_eq!(maps[0], Value::Map(BTreeMap::new()));
        let total = Domain::map(Domain::id(2), Domain::Bool, false)
            .enumerate()
            .unwrap();
        assert_eq!(total.len(), 4);
    }

    #[test]
    fn malformed_domains_are_rejected() {
        assert!(matches!(
            Domain::nat(2, 1).enumerate(),
            Err(Error::MalformedDomain(_))
        ));
        assert!(Domain::id(0).enumerate().is_err());
        assert!(Domain::set(Domain::id(0)).enumerate().is_err());
    }

    #[test]
    fn covers_and_join() {
        assert!(Domain::nat(0, 3).covers(&Domain::nat(1, 2)));
        assert!(!Domain::nat(1, 2).covers(&Domain::nat(0, 2)));
        assert_eq!(
            Domain::nat(0, 0).join(&Domain::nat(2, 3)),
            Some(Domain::nat(0, 3))
        );
        assert_eq!(Domain::Bool.join(&Domain::Unit), None);
    }

    #[test]
    fn sizes_match_enumeration() {
        for d in [
            Domain::set(Domain::id(3)),
            Domain::seq(Domain::id(3), 3),
            Domain::map(Domain::id(2), Domain::nat(0, 2), true),
            Domain::map(Domain::nat(0, 1), Domain::seq(Domain::id(2), 2), false),
            Domain::Record(vec![("a".into(), Domain::Bool), ("b".into(), Domain::nat(1, 3))]),
        ] {
            let members = d.enumerate().unwrap();
            assert_eq!(members.len() as u128, d.size(), "{d:?}");
            let distinct: BTreeSet<_> = members.iter().collect();
            assert_eq!(distinct.len(), members.len());
            assert!(members.iter().all(|v| d.contains(v)));
        }
    }
}
