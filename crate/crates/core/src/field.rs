//! Exact scalars: prime fields GF(p) with p < 2^31 and the rationals.
//!
//! A [`FieldElement`] carries enough of its context (the modulus, or the
//! rational tag) that mixing elements from different fields is detected at
//! the operation site instead of silently producing garbage.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Largest admissible modulus is below 2^31 so products fit in a u64.
pub const MAX_MODULUS: u32 = (1 << 31) - 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("{0} is not a prime below 2^31")]
    NotPrime(u64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("field context mismatch: {0} vs {1}")]
    ContextMismatch(FieldCtx, FieldCtx),
    #[error("cannot parse {input:?} as an element of {ctx}")]
    Parse { input: String, ctx: FieldCtx },
    #[error("unknown field tag {0:?} (expected \"q=<prime>\" or \"rational\")")]
    UnknownTag(String),
}

/// The field all arithmetic of a computation happens in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FieldCtx {
    Prime(u32),
    Rationals,
}

impl FieldCtx {
    pub fn prime(p: u64) -> Result<Self, FieldError> {
        if p > MAX_MODULUS as u64 || !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        Ok(FieldCtx::Prime(p as u32))
    }

    pub fn rationals() -> Self {
        FieldCtx::Rationals
    }

    /// Characteristic of the field; 0 for the rationals.
    pub fn characteristic(&self) -> u32 {
        match self {
            FieldCtx::Prime(p) => *p,
            FieldCtx::Rationals => 0,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, FieldCtx::Prime(_))
    }

    pub fn zero(&self) -> FieldElement {
        self.from_i64(0)
    }

    pub fn one(&self) -> FieldElement {
        self.from_i64(1)
    }

    pub fn from_i64(&self, v: i64) -> FieldElement {
        match *self {
            FieldCtx::Prime(p) => FieldElement::Mod {
                value: v.rem_euclid(p as i64) as u32,
                p,
            },
            FieldCtx::Rationals => FieldElement::Rat(BigRational::from_integer(BigInt::from(v))),
        }
    }

    /// `num / den` as a field element; `den` must be invertible.
    pub fn from_fraction(&self, num: i64, den: i64) -> Result<FieldElement, FieldError> {
        let d = self.from_i64(den);
        Ok(self.from_i64(num) * d.inv()?)
    }

    pub fn from_bigint(&self, v: &BigInt) -> FieldElement {
        match *self {
            FieldCtx::Prime(p) => {
                let r = ((v % BigInt::from(p)) + BigInt::from(p)) % BigInt::from(p);
                let value: u32 = r.try_into().expect("residue fits in u32");
                FieldElement::Mod { value, p }
            }
            FieldCtx::Rationals => FieldElement::Rat(BigRational::from_integer(v.clone())),
        }
    }

    /// Iterate over all elements of a finite field in residue order.
    pub fn elements(&self) -> Option<impl Iterator<Item = FieldElement>> {
        match *self {
            FieldCtx::Prime(p) => Some((0..p).map(move |value| FieldElement::Mod { value, p })),
            FieldCtx::Rationals => None,
        }
    }

    /// Tag used by the JSON formats: `"q=5"` or `"rational"`.
    pub fn tag(&self) -> String {
        match self {
            FieldCtx::Prime(p) => format!("q={p}"),
            FieldCtx::Rationals => "rational".to_string(),
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self, FieldError> {
        let t = tag.trim();
        if t == "rational" || t == "Q" {
            return Ok(FieldCtx::Rationals);
        }
        let digits = t.strip_prefix("q=").unwrap_or(t);
        let p: u64 = digits
            .parse()
            .map_err(|_| FieldError::UnknownTag(tag.to_string()))?;
        FieldCtx::prime(p)
    }

    pub fn parse_element(&self, s: &str) -> Result<FieldElement, FieldError> {
        let err = || FieldError::Parse {
            input: s.to_string(),
            ctx: *self,
        };
        let s = s.trim();
        let (num, den) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), Some(d.trim())),
            None => (s, None),
        };
        let num: BigInt = num.parse().map_err(|_| err())?;
        let den: BigInt = match den {
            Some(d) => d.parse().map_err(|_| err())?,
            None => BigInt::one(),
        };
        if den.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        match self {
            FieldCtx::Prime(_) => {
                let d = self.from_bigint(&den);
                Ok(self.from_bigint(&num) * d.inv()?)
            }
            FieldCtx::Rationals => Ok(FieldElement::Rat(BigRational::new(num, den))),
        }
    }
}

impl fmt::Display for FieldCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldCtx::Prime(p) => write!(f, "GF({p})"),
            FieldCtx::Rationals => write!(f, "Q"),
        }
    }
}

impl Serialize for FieldCtx {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.tag())
    }
}

impl<'de> Deserialize<'de> for FieldCtx {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        FieldCtx::from_tag(&s).map_err(serde::de::Error::custom)
    }
}

/// Deterministic trial division; moduli are below 2^31.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut i = 3;
    while i * i <= n {
        if n.is_multiple_of(i) {
            return false;
        }
        i += 2;
    }
    true
}

/// An element in canonical form: a residue in `[0, p)` or a reduced fraction
/// with positive denominator. Equality is representational.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FieldElement {
    Mod { value: u32, p: u32 },
    Rat(BigRational),
}

impl FieldElement {
    pub fn ctx(&self) -> FieldCtx {
        match self {
            FieldElement::Mod { p, .. } => FieldCtx::Prime(*p),
            FieldElement::Rat(_) => FieldCtx::Rationals,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            FieldElement::Mod { value, .. } => *value == 0,
            FieldElement::Rat(r) => r.is_zero(),
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            FieldElement::Mod { value, .. } => *value == 1,
            FieldElement::Rat(r) => r.is_one(),
        }
    }

    /// Residue for GF(p) elements.
    pub fn residue(&self) -> Option<u32> {
        match self {
            FieldElement::Mod { value, .. } => Some(*value),
            FieldElement::Rat(_) => None,
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            FieldElement::Rat(r) => Some(r),
            FieldElement::Mod { .. } => None,
        }
    }

    fn check(&self, other: &Self) -> Result<(), FieldError> {
        if self.ctx() != other.ctx() {
            return Err(FieldError::ContextMismatch(self.ctx(), other.ctx()));
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, FieldError> {
        self.check(other)?;
        Ok(match (self, other) {
            (FieldElement::Mod { value: a, p }, FieldElement::Mod { value: b, .. }) => {
                FieldElement::Mod {
                    value: ((*a as u64 + *b as u64) % *p as u64) as u32,
                    p: *p,
                }
            }
            (FieldElement::Rat(a), FieldElement::Rat(b)) => FieldElement::Rat(a + b),
            _ => unreachable!(),
        })
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, FieldError> {
        self.check(other)?;
        self.checked_add(&-other)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, FieldError> {
        self.check(other)?;
        Ok(match (self, other) {
            (FieldElement::Mod { value: a, p }, FieldElement::Mod { value: b, .. }) => {
                FieldElement::Mod {
                    value: ((*a as u64 * *b as u64) % *p as u64) as u32,
                    p: *p,
                }
            }
            (FieldElement::Rat(a), FieldElement::Rat(b)) => FieldElement::Rat(a * b),
            _ => unreachable!(),
        })
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self, FieldError> {
        self.check(other)?;
        self.checked_mul(&other.inv()?)
    }

    pub fn inv(&self) -> Result<Self, FieldError> {
        if self.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        Ok(match self {
            FieldElement::Mod { value, p } => FieldElement::Mod {
                value: pow_mod(*value as u64, *p as u64 - 2, *p as u64) as u32,
                p: *p,
            },
            FieldElement::Rat(r) => FieldElement::Rat(r.recip()),
        })
    }

    pub fn pow(&self, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = self.ctx().one();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    acc
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldElement::Mod { value, .. } => write!(f, "{value}"),
            FieldElement::Rat(r) => {
                if r.denom().is_one() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
        }
    }
}

impl PartialOrd for FieldElement {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Residues compare by value, rationals numerically. Only meaningful within
/// one context; used to make canonical forms deterministic.
impl Ord for FieldElement {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (FieldElement::Mod { value: a, p: pa }, FieldElement::Mod { value: b, p: pb }) => {
                pa.cmp(pb).then(a.cmp(b))
            }
            (FieldElement::Rat(a), FieldElement::Rat(b)) => a.cmp(b),
            (FieldElement::Mod { .. }, FieldElement::Rat(_)) => Ordering::Less,
            (FieldElement::Rat(_), FieldElement::Mod { .. }) => Ordering::Greater,
        }
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl $trait<&FieldElement> for &FieldElement {
            type Output = FieldElement;
            fn $method(self, rhs: &FieldElement) -> FieldElement {
                self.$checked(rhs).expect("mixed field contexts")
            }
        }
        impl $trait<FieldElement> for FieldElement {
            type Output = FieldElement;
            fn $method(self, rhs: FieldElement) -> FieldElement {
                (&self).$checked(&rhs).expect("mixed field contexts")
            }
        }
    };
}

forward_binop!(Add, add, checked_add);
forward_binop!(Sub, sub, checked_sub);
forward_binop!(Mul, mul, checked_mul);

impl Neg for &FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        match self {
            FieldElement::Mod { value, p } => FieldElement::Mod {
                value: if *value == 0 { 0 } else { p - value },
                p: *p,
            },
            FieldElement::Rat(r) => FieldElement::Rat(-r),
        }
    }
}

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        -&self
    }
}

/// Sign of a rational element; residues are never negative.
pub fn is_negative(a: &FieldElement) -> bool {
    a.as_rational().is_some_and(|r| r.is_negative())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gf(p: u64) -> FieldCtx {
        FieldCtx::prime(p).unwrap()
    }

    #[test]
    fn small_examples() {
        let f5 = gf(5);
        assert_eq!(f5.from_i64(3) + f5.from_i64(4), f5.from_i64(2));
        let q = FieldCtx::rationals();
        let half = q.parse_element("1/2").unwrap();
        let third = q.parse_element("1/3").unwrap();
        assert_eq!((half + third).to_string(), "5/6");
        let f2 = gf(2);
        assert!((f2.one() + f2.one()).is_zero());
    }

    #[test]
    fn inverses() {
        let f7 = gf(7);
        assert_eq!(f7.from_i64(3).inv().unwrap(), f7.from_i64(5));
        let q = FieldCtx::rationals();
        assert_eq!(
            q.parse_element("2/3").unwrap().inv().unwrap(),
            q.parse_element("3/2").unwrap()
        );
        assert_eq!(gf(2).one().inv().unwrap(), gf(2).one());
        assert_eq!(f7.zero().inv(), Err(FieldError::DivisionByZero));
        assert_eq!(q.zero().inv(), Err(FieldError::DivisionByZero));
    }

    #[test]
    fn rejects_composites_and_large() {
        assert!(FieldCtx::prime(4).is_err());
        assert!(FieldCtx::prime(1).is_err());
        assert!(FieldCtx::prime(1 << 31).is_err());
        assert!(FieldCtx::prime(2_147_483_647).is_ok());
    }

    #[test]
    fn mismatch_is_an_error() {
        let a = gf(5).one();
        let b = gf(7).one();
        assert!(matches!(
            a.checked_add(&b),
            Err(FieldError::ContextMismatch(_, _))
        ));
        assert!(a.checked_mul(&FieldCtx::rationals().one()).is_err());
    }

    #[test]
    fn rational_canonical_form() {
        let q = FieldCtx::rationals();
        let a = q.parse_element("4/-6").unwrap();
        assert_eq!(a.to_string(), "-2/3");
        assert_eq!(q.parse_element("6/3").unwrap().to_string(), "2");
        let r = a.as_rational().unwrap();
        assert!(r.denom() > &BigInt::zero());
    }

    #[test]
    fn tags_round_trip() {
        for ctx in [gf(2), gf(101), FieldCtx::rationals()] {
            assert_eq!(FieldCtx::from_tag(&ctx.tag()).unwrap(), ctx);
        }
        assert!(FieldCtx::from_tag("q=6").is_err());
        assert!(FieldCtx::from_tag("reals").is_err());
    }

    fn arb_ctx() -> impl Strategy<Value = FieldCtx> {
        prop_oneof![
            Just(gf(2)),
            Just(gf(3)),
            Just(gf(7)),
            Just(gf(2_147_483_647)),
            Just(FieldCtx::rationals()),
        ]
    }

    fn arb_elem(ctx: FieldCtx) -> impl Strategy<Value = FieldElement> {
        (-50i64..50, 1i64..20).prop_map(move |(n, d)| match ctx {
            FieldCtx::Rationals => ctx.from_fraction(n, d).unwrap(),
            FieldCtx::Prime(_) => ctx.from_i64(n * 7919 + d),
        })
    }

    fn arb_triple() -> impl Strategy<Value = (FieldElement, FieldElement, FieldElement)> {
        arb_ctx().prop_flat_map(|c| (arb_elem(c), arb_elem(c), arb_elem(c)))
    }

    proptest! {
        #[test]
        fn field_axioms((a, b, c) in arb_triple()) {
            prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!(&a + &b, &b + &a);
            prop_assert!((&a + &(-&a)).is_zero());
            if !a.is_zero() {
                prop_assert!((&a * &a.inv().unwrap()).is_one());
            }
        }

        #[test]
        fn render_parse_round_trip((a, _, _) in arb_triple()) {
            let back = a.ctx().parse_element(&a.to_string()).unwrap();
            prop_assert_eq!(back, a);
        }
    }
}
