//! Predicate vocabulary and (ground or lifted) atoms.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use smallvec::SmallVec;

use crate::sym::Sym;

/// The fixed fluent vocabulary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pred {
    At,
    In,
    Holding,
    Open,
    Powered,
    Temp,
    Toasted,
    Brewed,
}

impl Pred {
    pub const ALL: [Pred; 8] = [
        Pred::At,
        Pred::In,
        Pred::Holding,
        Pred::Open,
        Pred::Powered,
        Pred::Temp,
        Pred::Toasted,
        Pred::Brewed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Pred::At => "at",
            Pred::In => "in",
            Pred::Holding => "holding",
            Pred::Open => "open",
            Pred::Powered => "powered",
            Pred::Temp => "temp",
            Pred::Toasted => "toasted",
            Pred::Brewed => "brewed",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Pred::At | Pred::In | Pred::Holding | Pred::Temp => 2,
            Pred::Open | Pred::Powered | Pred::Toasted | Pred::Brewed => 1,
        }
    }

    pub fn from_name(name: &str) -> Option<Pred> {
        Pred::ALL.iter().copied().find(|p| p.name() == name)
    }
}

impl fmt::Display for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Temperature values carried by `temp/2`.
pub const TEMP_VALUES: [&str; 3] = ["cold", "ambient", "hot"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TempValue {
    Cold,
    Ambient,
    Hot,
}

impl TempValue {
    pub fn name(self) -> &'static str {
        match self {
            TempValue::Cold => "cold",
            TempValue::Ambient => "ambient",
            TempValue::Hot => "hot",
        }
    }

    pub fn sym(self) -> Sym {
        Sym::new(self.name())
    }

    pub fn from_name(s: &str) -> Option<TempValue> {
        match s {
            "cold" => Some(TempValue::Cold),
            "ambient" => Some(TempValue::Ambient),
            "hot" => Some(TempValue::Hot),
            _ => None,
        }
    }
}

/// A predicate applied to arguments. `Atom<Sym>` is a ground literal,
/// `Atom<Term>` a lifted one.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom<A> {
    pub pred: Pred,
    pub args: SmallVec<[A; 2]>,
}

pub type Literal = Atom<Sym>;
pub type LiftedLiteral = Atom<Term>;

impl<A> Atom<A> {
    pub fn new(pred: Pred, args: impl IntoIterator<Item = A>) -> Self {
        Atom {
            pred,
            args: args.into_iter().collect(),
        }
    }

    pub fn arg(&self, i: usize) -> &A {
        &self.args[i]
    }

    pub fn map<B>(&self, f: impl FnMut(&A) -> B) -> Atom<B> {
        Atom {
            pred: self.pred,
            args: self.args.iter().map(f).collect(),
        }
    }
}

impl Literal {
    pub fn at(o: &Sym, z: &Sym) -> Self {
        Atom::new(Pred::At, [o.clone(), z.clone()])
    }
    pub fn inside(o: &Sym, c: &Sym) -> Self {
        Atom::new(Pred::In, [o.clone(), c.clone()])
    }
    pub fn holding(a: &Sym, o: &Sym) -> Self {
        Atom::new(Pred::Holding, [a.clone(), o.clone()])
    }
    pub fn open(d: &Sym) -> Self {
        Atom::new(Pred::Open, [d.clone()])
    }
    pub fn powered(d: &Sym) -> Self {
        Atom::new(Pred::Powered, [d.clone()])
    }
    pub fn temp(o: &Sym, t: TempValue) -> Self {
        Atom::new(Pred::Temp, [o.clone(), t.sym()])
    }
    pub fn toasted(o: &Sym) -> Self {
        Atom::new(Pred::Toasted, [o.clone()])
    }
    pub fn brewed(o: &Sym) -> Self {
        Atom::new(Pred::Brewed, [o.clone()])
    }

    /// Checks arity and the temperature domain.
    pub fn check_shape(&self) -> Result<(), LiteralError> {
        if self.args.len() != self.pred.arity() {
            return Err(LiteralError::Arity {
                pred: self.pred.name(),
                expected: self.pred.arity(),
                found: self.args.len(),
            });
        }
        if self.pred == Pred::Temp && TempValue::from_name(&self.args[1]).is_none() {
            return Err(LiteralError::TempValue(self.args[1].to_string()));
        }
        Ok(())
    }
}

/// Argument of a lifted literal.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(Sym),
    Const(Sym),
}

impl Term {
    pub fn var(name: &str) -> Self {
        Term::Var(Sym::new(name))
    }

    pub fn constant(name: &str) -> Self {
        Term::Const(Sym::new(name))
    }

    pub fn as_var(&self) -> Option<&Sym> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "?{v}"),
            Term::Const(c) => write!(f, "{c}"),
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl LiftedLiteral {
    pub fn vars(&self) -> impl Iterator<Item = &Sym> {
        self.args.iter().filter_map(Term::as_var)
    }

    /// Substitutes variables; `None` if some variable is unbound.
    pub fn ground(&self, bind: impl Fn(&Sym) -> Option<Sym>) -> Option<Literal> {
        let mut args = SmallVec::new();
        for t in &self.args {
            args.push(match t {
                Term::Var(v) => bind(v)?,
                Term::Const(c) => c.clone(),
            });
        }
        Some(Atom {
            pred: self.pred,
            args,
        })
    }
}

impl<A: fmt::Display> fmt::Display for Atom<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.pred)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

impl<A: fmt::Display> fmt::Debug for Atom<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LiteralError {
    #[error("malformed literal `{0}`")]
    Syntax(String),
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("predicate {pred} takes {expected} argument(s), found {found}")]
    Arity {
        pred: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("temperature must be one of cold/ambient/hot, found `{0}`")]
    TempValue(String),
}

fn split_atom(s: &str) -> Result<(Pred, Vec<&str>), LiteralError> {
    let s = s.trim();
    let syntax = || LiteralError::Syntax(s.to_string());
    let open = s.find('(').ok_or_else(syntax)?;
    if !s.ends_with(')') {
        return Err(syntax());
    }
    let name = s[..open].trim();
    let pred = Pred::from_name(name).ok_or_else(|| LiteralError::UnknownPredicate(name.to_string()))?;
    let inner = &s[open + 1..s.len() - 1];
    let args: Vec<&str> = if inner.trim().is_empty() {
        Vec::new()
    } else {
        inner.split(',').map(str::trim).collect()
    };
    if args.iter().any(|a| a.is_empty() || a.contains(['(', ')', ' '])) {
        return Err(syntax());
    }
    if args.len() != pred.arity() {
        return Err(LiteralError::Arity {
            pred: pred.name(),
            expected: pred.arity(),
            found: args.len(),
        });
    }
    Ok((pred, args))
}

impl FromStr for Literal {
    type Err = LiteralError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (pred, args) = split_atom(s)?;
        if args.iter().any(|a| a.starts_with('?')) {
            return Err(LiteralError::Syntax(s.to_string()));
        }
        let lit = Atom::new(pred, args.into_iter().map(Sym::new));
        lit.check_shape()?;
        Ok(lit)
    }
}

impl FromStr for LiftedLiteral {
    type Err = LiteralError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (pred, args) = split_atom(s)?;
        Ok(Atom::new(
            pred,
            args.into_iter().map(|a| match a.strip_prefix('?') {
                Some(v) => Term::var(v),
                None => Term::constant(a),
            }),
        ))
    }
}

#[cfg(feature = "serde")]
mod serde_impls {
    use super::*;
    use serde::de::Error as _;

    impl serde::Serialize for Literal {
        fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            s.collect_str(self)
        }
    }

    impl<'de> serde::Deserialize<'de> for Literal {
        fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
            let s = String::deserialize(d)?;
            s.parse().map_err(D::Error::custom)
        }
    }

    impl serde::Serialize for LiftedLiteral {
        fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            s.collect_str(self)
        }
    }

    impl<'de> serde::Deserialize<'de> for LiftedLiteral {
        fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
            let s = String::deserialize(d)?;
            s.parse().map_err(D::Error::custom)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_round_trip() {
        let l: Literal = "at(bread1, counter)".parse().unwrap();
        assert_eq!(l, Literal::at(&Sym::new("bread1"), &Sym::new("counter")));
        assert_eq!(l.to_string(), "at(bread1, counter)");
        let t: Literal = "temp(milk1,hot)".parse().unwrap();
        assert_eq!(t.to_string(), "temp(milk1, hot)");
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!("at(a)".parse::<Literal>(), Err(LiteralError::Arity { .. })));
        assert!(matches!("temp(a, warm)".parse::<Literal>(), Err(LiteralError::TempValue(_))));
        assert!(matches!("fly(a)".parse::<Literal>(), Err(LiteralError::UnknownPredicate(_))));
        assert!(matches!("at(a, b".parse::<Literal>(), Err(LiteralError::Syntax(_))));
        assert!("at(?x, b)".parse::<Literal>().is_err());
    }

    #[test]
    fn lifted_parse_and_ground() {
        let l: LiftedLiteral = "temp(?x, hot)".parse().unwrap();
        assert_eq!(l.to_string(), "temp(?x, hot)");
        let g = l.ground(|v| (v == "x").then(|| Sym::new("water1"))).unwrap();
        assert_eq!(g.to_string(), "temp(water1, hot)");
        assert!(l.ground(|_| None).is_none());
    }
}
