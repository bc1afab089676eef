//! Sparse multivariate polynomials, linear forms and products of linear forms.
//!
//! Terms are kept in a `BTreeMap` keyed by exponent vectors under graded
//! lexicographic order, so iteration and serialization are reproducible.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{FieldCtx, FieldElement, FieldError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("arity mismatch: {0} vs {1} variables")]
    Arity(usize, usize),
    #[error("polynomial is not homogeneous")]
    NotHomogeneous,
    #[error("polynomial is not linear")]
    NotLinear,
    #[error("division by the zero linear form")]
    ZeroDivisor,
    #[error("the zero polynomial has no factorization")]
    ZeroPolynomial,
    #[error("product of linear forms needs nonzero factors and scalar")]
    ZeroFactor,
    #[error("variable index {0} out of range")]
    VarOutOfRange(usize),
    #[error("malformed polynomial JSON: {0}")]
    Json(String),
}

/// Exponent vector compared by total degree first, then lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Exponent(Vec<u32>);

impl Exponent {
    pub fn new(exps: Vec<u32>) -> Self {
        Exponent(exps)
    }

    pub fn zero(nvars: usize) -> Self {
        Exponent(vec![0; nvars])
    }

    pub fn unit(nvars: usize, var: usize) -> Self {
        let mut e = vec![0; nvars];
        e[var] = 1;
        Exponent(e)
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn add(&self, other: &Exponent) -> Exponent {
        Exponent(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self - other` when `other` divides `self`.
    pub fn checked_sub(&self, other: &Exponent) -> Option<Exponent> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(Exponent)
    }

    pub fn divides(&self, other: &Exponent) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }
}

impl Ord for Exponent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Exponent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A monomial, typically one of the squarefree "support" monomials of an
/// identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    exps: Vec<u32>,
}

impl Monomial {
    pub fn new(exps: Vec<u32>) -> Self {
        Monomial { exps }
    }

    /// Squarefree monomial on the given variables.
    pub fn from_vars(nvars: usize, vars: &[usize]) -> Result<Self, PolyError> {
        let mut exps = vec![0; nvars];
        for &v in vars {
            if v >= nvars {
                return Err(PolyError::VarOutOfRange(v));
            }
            exps[v] += 1;
        }
        Ok(Monomial { exps })
    }

    pub fn nvars(&self) -> usize {
        self.exps.len()
    }

    pub fn exps(&self) -> &[u32] {
        &self.exps
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().sum()
    }

    pub fn is_squarefree(&self) -> bool {
        self.exps.iter().all(|&e| e <= 1)
    }

    /// Variables with positive exponent, ascending.
    pub fn vars(&self) -> Vec<usize> {
        self.exps
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn is_coprime(&self, other: &Monomial) -> bool {
        self.exps
            .iter()
            .zip(&other.exps)
            .all(|(a, b)| *a == 0 || *b == 0)
    }

    pub fn exponent(&self) -> Exponent {
        Exponent(self.exps.clone())
    }

    pub fn to_poly(&self, ctx: FieldCtx) -> MultiPoly {
        MultiPoly::monomial(ctx, self.exponent(), ctx.one())
    }

    /// `self / var` if the variable divides it.
    pub fn without_var(&self, var: usize) -> Option<Monomial> {
        if self.exps.get(var).copied().unwrap_or(0) == 0 {
            return None;
        }
        let mut exps = self.exps.clone();
        exps[var] -= 1;
        Some(Monomial { exps })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiPoly {
    ctx: FieldCtx,
    nvars: usize,
    terms: BTreeMap<Exponent, FieldElement>,
}

impl MultiPoly {
    pub fn zero(ctx: FieldCtx, nvars: usize) -> Self {
        MultiPoly {
            ctx,
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(ctx: FieldCtx, nvars: usize, c: FieldElement) -> Self {
        MultiPoly::monomial(ctx, Exponent::zero(nvars), c)
    }

    pub fn one(ctx: FieldCtx, nvars: usize) -> Self {
        MultiPoly::constant(ctx, nvars, ctx.one())
    }

    pub fn var(ctx: FieldCtx, nvars: usize, i: usize) -> Self {
        MultiPoly::monomial(ctx, Exponent::unit(nvars, i), ctx.one())
    }

    pub fn monomial(ctx: FieldCtx, exp: Exponent, c: FieldElement) -> Self {
        let nvars = exp.0.len();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(exp, c);
        }
        MultiPoly { ctx, nvars, terms }
    }

    /// Build from (exponent, coefficient) pairs, summing duplicates.
    pub fn from_terms(
        ctx: FieldCtx,
        nvars: usize,
        terms: impl IntoIterator<Item = (Vec<u32>, FieldElement)>,
    ) -> Result<Self, PolyError> {
        let mut p = MultiPoly::zero(ctx, nvars);
        for (e, c) in terms {
            if e.len() != nvars {
                return Err(PolyError::Arity(e.len(), nvars));
            }
            if c.ctx() != ctx {
                return Err(FieldError::ContextMismatch(c.ctx(), ctx).into());
            }
            p.add_term(Exponent(e), c);
        }
        Ok(p)
    }

    pub fn ctx(&self) -> FieldCtx {
        self.ctx
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in ascending graded-lex order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Exponent, &FieldElement)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, e: &Exponent) -> FieldElement {
        self.terms.get(e).cloned().unwrap_or_else(|| self.ctx.zero())
    }

    /// Maximal total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(Exponent::degree).max()
    }

    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.keys().map(|e| e.0[var]).max().unwrap_or(0)
    }

    /// The zero polynomial counts as homogeneous.
    pub fn is_homogeneous(&self) -> bool {
        let mut degs = self.terms.keys().map(Exponent::degree);
        match degs.next() {
            None => true,
            Some(d) => degs.all(|e| e == d),
        }
    }

    /// Variables occurring in some term.
    pub fn support(&self) -> Vec<usize> {
        (0..self.nvars)
            .filter(|&v| self.terms.keys().any(|e| e.0[v] > 0))
            .collect()
    }

    fn add_term(&mut self, e: Exponent, c: FieldElement) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get() + &c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    fn compatible(&self, other: &MultiPoly) -> Result<(), PolyError> {
        if self.ctx != other.ctx {
            return Err(FieldError::ContextMismatch(self.ctx, other.ctx).into());
        }
        if self.nvars != other.nvars {
            return Err(PolyError::Arity(self.nvars, other.nvars));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &MultiPoly) -> Result<MultiPoly, PolyError> {
        self.compatible(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &MultiPoly) -> Result<MultiPoly, PolyError> {
        self.compatible(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), -c);
        }
        Ok(out)
    }

    pub fn try_mul(&self, other: &MultiPoly) -> Result<MultiPoly, PolyError> {
        self.compatible(other)?;
        let mut out = MultiPoly::zero(self.ctx, self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                out.add_term(ea.add(eb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &FieldElement) -> MultiPoly {
        if c.is_zero() {
            return MultiPoly::zero(self.ctx, self.nvars);
        }
        MultiPoly {
            ctx: self.ctx,
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, a)| (e.clone(), a * c)).collect(),
        }
    }

    /// Multiply by a monomial.
    pub fn shift(&self, e: &Exponent) -> MultiPoly {
        MultiPoly {
            ctx: self.ctx,
            nvars: self.nvars,
            terms: self.terms.iter().map(|(t, c)| (t.add(e), c.clone())).collect(),
        }
    }

    pub fn pow(&self, k: u32) -> MultiPoly {
        let mut acc = MultiPoly::one(self.ctx, self.nvars);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    pub fn eval(&self, point: &[FieldElement]) -> Result<FieldElement, PolyError> {
        if point.len() != self.nvars {
            return Err(PolyError::Arity(point.len(), self.nvars));
        }
        let mut acc = self.ctx.zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (x, &k) in point.iter().zip(&e.0) {
                if k > 0 {
                    t = &t * &x.pow(k);
                }
            }
            acc = &acc + &t;
        }
        Ok(acc)
    }

    /// Replace every variable `i` by `images[i]`; the images may live in a
    /// ring with a different number of variables.
    pub fn compose(&self, images: &[MultiPoly]) -> Result<MultiPoly, PolyError> {
        if images.len() != self.nvars {
            return Err(PolyError::Arity(images.len(), self.nvars));
        }
        let target = images.first().map_or(0, MultiPoly::nvars);
        for im in images {
            if im.ctx != self.ctx {
                return Err(FieldError::ContextMismatch(im.ctx, self.ctx).into());
            }
            if im.nvars != target {
                return Err(PolyError::Arity(im.nvars, target));
            }
        }
        let mut powers: Vec<Vec<MultiPoly>> = images
            .iter()
            .map(|im| vec![MultiPoly::one(self.ctx, target), im.clone()])
            .collect();
        let mut out = MultiPoly::zero(self.ctx, target);
        for (e, c) in &self.terms {
            let mut t = MultiPoly::constant(self.ctx, target, c.clone());
            for (v, &k) in e.0.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                while powers[v].len() <= k as usize {
                    let next = &powers[v][powers[v].len() - 1] * &images[v];
                    powers[v].push(next);
                }
                t = &t * &powers[v][k as usize];
                if t.is_zero() {
                    break;
                }
            }
            for (te, tc) in t.terms {
                out.add_term(te, tc);
            }
        }
        Ok(out)
    }

    /// Substitute the assigned variables, leaving the others in place.
    pub fn substitute(&self, assignments: &BTreeMap<usize, MultiPoly>) -> Result<MultiPoly, PolyError> {
        let mut images = Vec::with_capacity(self.nvars);
        for v in 0..self.nvars {
            match assignments.get(&v) {
                Some(p) => images.push(p.clone()),
                None => images.push(MultiPoly::var(self.ctx, self.nvars, v)),
            }
        }
        if let Some(&v) = assignments.keys().find(|&&v| v >= self.nvars) {
            return Err(PolyError::VarOutOfRange(v));
        }
        self.compose(&images)
    }

    /// Exact quotient by a linear form, or `None` if it does not divide.
    pub fn divide_by_linear(&self, l: &LinearForm) -> Result<Option<MultiPoly>, PolyError> {
        if l.ctx != self.ctx {
            return Err(FieldError::ContextMismatch(l.ctx, self.ctx).into());
        }
        if l.nvars() != self.nvars {
            return Err(PolyError::Arity(l.nvars(), self.nvars));
        }
        let Some(v) = l.coeffs.iter().position(|c| !c.is_zero()) else {
            return Err(PolyError::ZeroDivisor);
        };
        if self.is_zero() {
            return Ok(Some(self.clone()));
        }
        let a_inv = l.coeffs[v].inv()?;
        let mut rest = l.clone();
        rest.coeffs[v] = self.ctx.zero();
        let rest = rest.to_poly();

        // Write p = sum_k p_k x_v^k with p_k free of x_v.
        let top = self.degree_in(v) as usize;
        let mut slices = vec![MultiPoly::zero(self.ctx, self.nvars); top + 1];
        for (e, c) in &self.terms {
            let k = e.0[v] as usize;
            let mut e2 = e.clone();
            e2.0[v] = 0;
            slices[k].add_term(e2, c.clone());
        }
        if top == 0 {
            return Ok(None);
        }
        // q_{k-1} = (p_k - rest * q_k) / a, from the top down.
        let mut q = vec![MultiPoly::zero(self.ctx, self.nvars); top];
        q[top - 1] = slices[top].scale(&a_inv);
        for k in (1..top).rev() {
            let t = &slices[k] - &(&rest * &q[k]);
            q[k - 1] = t.scale(&a_inv);
        }
        if slices[0] != &rest * &q[0] {
            return Ok(None);
        }
        let mut out = MultiPoly::zero(self.ctx, self.nvars);
        for (k, qk) in q.into_iter().enumerate() {
            for (mut e, c) in qk.terms {
                e.0[v] += k as u32;
                out.add_term(e, c);
            }
        }
        Ok(Some(out))
    }

    /// Leading (largest) term.
    pub fn leading_term(&self) -> Option<(&Exponent, &FieldElement)> {
        self.terms.iter().next_back()
    }

    pub fn display_with<'a>(&'a self, names: &'a [String]) -> PolyDisplay<'a> {
        PolyDisplay { p: self, names: Some(names) }
    }

    pub fn to_json(&self, vars: &[String]) -> PolyJson {
        PolyJson {
            field: self.ctx.tag(),
            vars: vars.to_vec(),
            terms: self
                .terms
                .iter()
                .rev()
                .map(|(e, c)| TermJson {
                    c: c.to_string(),
                    e: e.0.clone(),
                })
                .collect(),
        }
    }

    pub fn from_json(j: &PolyJson) -> Result<MultiPoly, PolyError> {
        let ctx = FieldCtx::from_tag(&j.field)?;
        let nvars = j.vars.len();
        let mut terms = Vec::with_capacity(j.terms.len());
        for (i, t) in j.terms.iter().enumerate() {
            if t.e.len() != nvars {
                return Err(PolyError::Json(format!(
                    "term {i}: exponent has {} entries, expected {nvars}",
                    t.e.len()
                )));
            }
            let c = ctx
                .parse_element(&t.c)
                .map_err(|e| PolyError::Json(format!("term {i}: {e}")))?;
            terms.push((t.e.clone(), c));
        }
        MultiPoly::from_terms(ctx, nvars, terms)
    }
}

/// Default variable names `x0, x1, ...`.
pub fn default_names(nvars: usize) -> Vec<String> {
    (0..nvars).map(|i| format!("x{i}")).collect()
}

pub struct PolyDisplay<'a> {
    p: &'a MultiPoly,
    names: Option<&'a [String]>,
}

impl fmt::Display for PolyDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.p.is_zero() {
            return write!(f, "0");
        }
        let defaults;
        let names = match self.names {
            Some(n) => n,
            None => {
                defaults = default_names(self.p.nvars);
                &defaults
            }
        };
        for (i, (e, c)) in self.p.terms.iter().rev().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            let mono: Vec<String> = e
                .0
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(v, &k)| {
                    if k == 1 {
                        names[v].clone()
                    } else {
                        format!("{}^{}", names[v], k)
                    }
                })
                .collect();
            if mono.is_empty() {
                write!(f, "{c}")?;
            } else if c.is_one() {
                write!(f, "{}", mono.join("*"))?;
            } else {
                write!(f, "{}*{}", c, mono.join("*"))?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        PolyDisplay { p: self, names: None }.fmt(f)
    }
}

macro_rules! poly_binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl $trait<&MultiPoly> for &MultiPoly {
            type Output = MultiPoly;
            fn $method(self, rhs: &MultiPoly) -> MultiPoly {
                self.$checked(rhs).expect("incompatible polynomials")
            }
        }
    };
}

poly_binop!(Add, add, try_add);
poly_binop!(Sub, sub, try_sub);
poly_binop!(Mul, mul, try_mul);

impl Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        self.scale(&-self.ctx.one())
    }
}

/// JSON polynomial: `{"field":"q=5","vars":[..],"terms":[{"c":"3","e":[1,0,2]}]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolyJson {
    pub field: String,
    pub vars: Vec<String>,
    pub terms: Vec<TermJson>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermJson {
    pub c: String,
    pub e: Vec<u32>,
}

/// A homogeneous form of degree one, stored as its coefficient vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LinearForm {
    ctx: FieldCtx,
    coeffs: Vec<FieldElement>,
}

impl LinearForm {
    pub fn new(ctx: FieldCtx, coeffs: Vec<FieldElement>) -> Result<Self, PolyError> {
        if let Some(c) = coeffs.iter().find(|c| c.ctx() != ctx) {
            return Err(FieldError::ContextMismatch(c.ctx(), ctx).into());
        }
        Ok(LinearForm { ctx, coeffs })
    }

    pub fn from_i64(ctx: FieldCtx, coeffs: &[i64]) -> Self {
        LinearForm {
            ctx,
            coeffs: coeffs.iter().map(|&c| ctx.from_i64(c)).collect(),
        }
    }

    pub fn var(ctx: FieldCtx, nvars: usize, i: usize) -> Self {
        let mut coeffs = vec![ctx.zero(); nvars];
        coeffs[i] = ctx.one();
        LinearForm { ctx, coeffs }
    }

    pub fn zero(ctx: FieldCtx, nvars: usize) -> Self {
        LinearForm {
            ctx,
            coeffs: vec![ctx.zero(); nvars],
        }
    }

    pub fn from_poly(p: &MultiPoly) -> Result<Self, PolyError> {
        let mut coeffs = vec![p.ctx.zero(); p.nvars];
        for (e, c) in &p.terms {
            if e.degree() != 1 {
                return Err(PolyError::NotLinear);
            }
            let v = e.0.iter().position(|&k| k == 1).expect("degree one");
            coeffs[v] = c.clone();
        }
        Ok(LinearForm { ctx: p.ctx, coeffs })
    }

    pub fn ctx(&self) -> FieldCtx {
        self.ctx
    }

    pub fn nvars(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[FieldElement] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(FieldElement::is_zero)
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.coeffs.len())
            .filter(|&i| !self.coeffs[i].is_zero())
            .collect()
    }

    /// The variable index if this form is a nonzero multiple of a variable.
    pub fn as_variable(&self) -> Option<usize> {
        match self.support().as_slice() {
            [v] => Some(*v),
            _ => None,
        }
    }

    pub fn scale(&self, c: &FieldElement) -> LinearForm {
        LinearForm {
            ctx: self.ctx,
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    pub fn add(&self, other: &LinearForm) -> LinearForm {
        LinearForm {
            ctx: self.ctx,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        }
    }

    /// Split into (leading coefficient, form with leading coefficient 1).
    pub fn normalized(&self) -> Option<(FieldElement, LinearForm)> {
        let lead = self.coeffs.iter().find(|c| !c.is_zero())?.clone();
        let inv = lead.inv().expect("nonzero");
        Some((lead, self.scale(&inv)))
    }

    pub fn to_poly(&self) -> MultiPoly {
        let n = self.coeffs.len();
        let mut p = MultiPoly::zero(self.ctx, n);
        for (i, c) in self.coeffs.iter().enumerate() {
            p.add_term(Exponent::unit(n, i), c.clone());
        }
        p
    }

    pub fn eval(&self, point: &[FieldElement]) -> FieldElement {
        self.coeffs
            .iter()
            .zip(point)
            .fold(self.ctx.zero(), |acc, (a, x)| &acc + &(a * x))
    }
}

/// Factors compare so that forms involving earlier variables come first.
impl Ord for LinearForm {
    fn cmp(&self, other: &Self) -> Ordering {
        other.coeffs.cmp(&self.coeffs)
    }
}

impl PartialOrd for LinearForm {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for LinearForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.to_poly().fmt(f)
    }
}

/// `scalar * prod(factors)` in canonical form: every factor has leading
/// coefficient 1 and the factors are sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProductOfLinear {
    ctx: FieldCtx,
    nvars: usize,
    scalar: FieldElement,
    factors: Vec<LinearForm>,
}

impl ProductOfLinear {
    pub fn new(scalar: FieldElement, factors: Vec<LinearForm>, nvars: usize) -> Result<Self, PolyError> {
        let ctx = scalar.ctx();
        if scalar.is_zero() {
            return Err(PolyError::ZeroFactor);
        }
        let mut scalar = scalar;
        let mut canon = Vec::with_capacity(factors.len());
        for l in factors {
            if l.ctx != ctx {
                return Err(FieldError::ContextMismatch(l.ctx, ctx).into());
            }
            if l.nvars() != nvars {
                return Err(PolyError::Arity(l.nvars(), nvars));
            }
            let (lead, n) = l.normalized().ok_or(PolyError::ZeroFactor)?;
            scalar = &scalar * &lead;
            canon.push(n);
        }
        canon.sort();
        Ok(ProductOfLinear {
            ctx,
            nvars,
            scalar,
            factors: canon,
        })
    }

    pub fn from_factors(factors: Vec<LinearForm>) -> Result<Self, PolyError> {
        let first = factors.first().ok_or(PolyError::ZeroFactor)?;
        let (ctx, n) = (first.ctx, first.nvars());
        ProductOfLinear::new(ctx.one(), factors, n)
    }

    pub fn ctx(&self) -> FieldCtx {
        self.ctx
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn scalar(&self) -> &FieldElement {
        &self.scalar
    }

    pub fn factors(&self) -> &[LinearForm] {
        &self.factors
    }

    pub fn degree(&self) -> usize {
        self.factors.len()
    }

    pub fn scaled(&self, c: &FieldElement) -> Result<Self, PolyError> {
        ProductOfLinear::new(&self.scalar * c, self.factors.clone(), self.nvars)
    }

    pub fn expand(&self) -> MultiPoly {
        let mut acc = MultiPoly::constant(self.ctx, self.nvars, self.scalar.clone());
        for l in &self.factors {
            acc = &acc * &l.to_poly();
        }
        acc
    }

    /// Remove one factor proportional to `l`, adjusting the scalar.
    pub fn remove_factor(&self, l: &LinearForm) -> Option<ProductOfLinear> {
        let (lead, n) = l.normalized()?;
        let pos = self.factors.iter().position(|f| *f == n)?;
        let mut factors = self.factors.clone();
        factors.remove(pos);
        let scalar = self.scalar.checked_div(&lead).ok()?;
        Some(ProductOfLinear {
            ctx: self.ctx,
            nvars: self.nvars,
            scalar,
            factors,
        })
    }

    /// Number of pairwise non-proportional factors.
    pub fn distinct_factors(&self) -> usize {
        let mut v = self.factors.clone();
        v.dedup();
        v.len()
    }
}

impl fmt::Display for ProductOfLinear {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.scalar.is_one() || self.factors.is_empty() {
            write!(f, "{}", self.scalar)?;
            if !self.factors.is_empty() {
                write!(f, "*")?;
            }
        }
        let parts: Vec<String> = self.factors.iter().map(|l| format!("({l})")).collect();
        write!(f, "{}", parts.join("*"))
    }
}

/// Why a polynomial was not returned as a product of linear forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NotSplit {
    /// The polynomial provably has no complete factorization over the field.
    Proven,
    /// The rational heuristic could not decide.
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Factorization {
    Split(ProductOfLinear),
    NotSplit(NotSplit),
}

/// Cap on trial candidates for the rational heuristic.
const RATIONAL_CANDIDATE_CAP: usize = 200_000;

/// Factor a homogeneous polynomial into linear forms.
///
/// Over GF(q) this is exhaustive trial division by every normalized linear
/// form on the polynomial's support. Over Q candidates are read off the
/// rational roots of binary restrictions; the answer is `Unknown` when that
/// heuristic cannot conclude.
pub fn factor_product(p: &MultiPoly) -> Result<Factorization, PolyError> {
    if p.is_zero() {
        return Err(PolyError::ZeroPolynomial);
    }
    if !p.is_homogeneous() {
        return Err(PolyError::NotHomogeneous);
    }
    match p.ctx {
        FieldCtx::Prime(q) => Ok(factor_finite(p, q)),
        FieldCtx::Rationals => factor_rational(p),
    }
}

fn finish(rest: &MultiPoly, factors: Vec<LinearForm>) -> Factorization {
    if rest.degree() == Some(0) {
        let c = rest.terms.values().next().expect("nonzero").clone();
        let nvars = rest.nvars;
        Factorization::Split(ProductOfLinear::new(c, factors, nvars).expect("nonzero factors"))
    } else {
        Factorization::NotSplit(NotSplit::Proven)
    }
}

fn factor_finite(p: &MultiPoly, q: u32) -> Factorization {
    let ctx = p.ctx;
    let support = p.support();
    let mut rest = p.clone();
    let mut found = Vec::new();
    for l in normalized_forms_on(ctx, q, p.nvars, &support) {
        while rest.degree().unwrap_or(0) > 0 {
            match rest.divide_by_linear(&l).expect("same ring") {
                Some(quot) => {
                    rest = quot;
                    found.push(l.clone());
                }
                None => break,
            }
        }
        if rest.degree() == Some(0) {
            break;
        }
    }
    finish(&rest, found)
}

/// All linear forms over GF(q) supported on `support` whose first nonzero
/// coefficient is 1.
pub fn normalized_forms_on(ctx: FieldCtx, q: u32, nvars: usize, support: &[usize]) -> Vec<LinearForm> {
    let s = support.len();
    let mut out = Vec::new();
    for lead in 0..s {
        let tail = s - lead - 1;
        let count = (q as u64).pow(tail as u32);
        for code in 0..count {
            let mut coeffs = vec![ctx.zero(); nvars];
            coeffs[support[lead]] = ctx.one();
            let mut c = code;
            for t in 0..tail {
                coeffs[support[lead + 1 + t]] = ctx.from_i64((c % q as u64) as i64);
                c /= q as u64;
            }
            out.push(LinearForm { ctx, coeffs });
        }
    }
    out
}

fn factor_rational(p: &MultiPoly) -> Result<Factorization, PolyError> {
    let ctx = p.ctx;
    let n = p.nvars;
    let mut rest = p.clone();
    let mut found = Vec::new();
    // Variable factors first.
    for v in 0..n {
        let x = LinearForm::var(ctx, n, v);
        while rest.degree().unwrap_or(0) > 0 {
            match rest.divide_by_linear(&x)? {
                Some(qt) => {
                    rest = qt;
                    found.push(x.clone());
                }
                None => break,
            }
        }
    }
    let deg = rest.degree().unwrap_or(0);
    if deg == 0 {
        return Ok(finish(&rest, found));
    }
    let support = rest.support();
    // A pivot variable whose pure power appears: every factor involves it.
    let pivot = support.iter().copied().find(|&v| {
        let mut e = vec![0; n];
        e[v] = deg;
        !rest.coefficient(&Exponent(e)).is_zero()
    });
    let Some(v) = pivot else {
        return Ok(Factorization::NotSplit(NotSplit::Unknown));
    };
    let others: Vec<usize> = support.iter().copied().filter(|&w| w != v).collect();
    let mut root_sets: Vec<Vec<BigRational>> = Vec::with_capacity(others.len());
    for &w in &others {
        // Coefficients of t^k in rest(x_v = t, x_w = 1, others 0).
        let mut coeffs = vec![BigRational::zero(); deg as usize + 1];
        for (e, c) in rest.terms() {
            if e.0.iter().enumerate().all(|(i, &k)| k == 0 || i == v || i == w) {
                coeffs[e.0[v] as usize] = c.as_rational().expect("rational").clone();
            }
        }
        let Some(roots) = rational_roots(&coeffs) else {
            return Ok(Factorization::NotSplit(NotSplit::Unknown));
        };
        if roots.iter().map(|(_, m)| m).sum::<usize>() < deg as usize {
            return Ok(Factorization::NotSplit(NotSplit::Proven));
        }
        // Root t = -c_w for the factor x_v + c_w x_w.
        root_sets.push(roots.into_iter().map(|(r, _)| -r).collect());
    }
    let combos: usize = root_sets.iter().map(Vec::len).product();
    if combos > RATIONAL_CANDIDATE_CAP {
        return Ok(Factorization::NotSplit(NotSplit::Unknown));
    }
    let mut idx = vec![0usize; others.len()];
    loop {
        let mut coeffs = vec![ctx.zero(); n];
        coeffs[v] = ctx.one();
        for (k, &w) in others.iter().enumerate() {
            coeffs[w] = FieldElement::Rat(root_sets[k][idx[k]].clone());
        }
        let l = LinearForm { ctx, coeffs };
        while rest.degree().unwrap_or(0) > 0 {
            match rest.divide_by_linear(&l)? {
                Some(qt) => {
                    rest = qt;
                    found.push(l.clone());
                }
                None => break,
            }
        }
        if rest.degree() == Some(0) {
            break;
        }
        // Odometer over the candidate grid.
        let mut k = 0;
        loop {
            if k == idx.len() {
                return Ok(finish(&rest, found));
            }
            idx[k] += 1;
            if idx[k] < root_sets[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if idx.is_empty() {
            break;
        }
    }
    Ok(finish(&rest, found))
}

/// Largest integer whose divisors we are willing to enumerate.
const DIVISOR_LIMIT: u64 = 1_000_000_000_000;

/// Rational roots with multiplicity of `sum coeffs[k] t^k`; `None` when the
/// coefficients are too large to search.
fn rational_roots(coeffs: &[BigRational]) -> Option<Vec<(BigRational, usize)>> {
    let lcm = coeffs
        .iter()
        .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let mut poly: Vec<BigInt> = coeffs
        .iter()
        .map(|c| (c * BigRational::from_integer(lcm.clone())).to_integer())
        .collect();
    while poly.last().is_some_and(Zero::is_zero) {
        poly.pop();
    }
    let mut roots = Vec::new();
    let mut zero_mult = 0;
    while poly.len() > 1 && poly[0].is_zero() {
        poly.remove(0);
        zero_mult += 1;
    }
    if zero_mult > 0 {
        roots.push((BigRational::zero(), zero_mult));
    }
    if poly.len() <= 1 {
        return Some(roots);
    }
    let a0 = poly[0].abs().to_u64().filter(|&x| x <= DIVISOR_LIMIT)?;
    let an = poly.last().expect("nonempty").abs().to_u64().filter(|&x| x <= DIVISOR_LIMIT)?;
    let num_divs = divisors(a0);
    let den_divs = divisors(an);
    let mut cands: Vec<BigRational> = Vec::new();
    for &p in &num_divs {
        for &q in &den_divs {
            for s in [1i64, -1] {
                let r = BigRational::new(BigInt::from(p) * s, BigInt::from(q));
                if !cands.contains(&r) {
                    cands.push(r);
                }
            }
        }
    }
    cands.sort();
    let mut cur: Vec<BigRational> = poly.iter().map(|c| BigRational::from_integer(c.clone())).collect();
    for r in cands {
        let mut mult = 0;
        while cur.len() > 1 {
            // Synthetic division by (t - r).
            let mut quot = vec![BigRational::zero(); cur.len() - 1];
            let mut acc = BigRational::zero();
            for k in (0..cur.len()).rev() {
                acc = &acc * &r + &cur[k];
                if k > 0 {
                    quot[k - 1] = acc.clone();
                }
            }
            if acc.is_zero() {
                cur = quot;
                mult += 1;
            } else {
                break;
            }
        }
        if mult > 0 {
            roots.push((r, mult));
        }
    }
    Some(roots)
}

fn divisors(n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut i = 1;
    while i * i <= n {
        if n.is_multiple_of(i) {
            out.push(i);
            if i != n / i {
                out.push(n / i);
            }
        }
        i += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q() -> FieldCtx {
        FieldCtx::rationals()
    }

    fn gf(p: u64) -> FieldCtx {
        FieldCtx::prime(p).unwrap()
    }

    fn lf(ctx: FieldCtx, c: &[i64]) -> LinearForm {
        LinearForm::from_i64(ctx, c)
    }

    fn x(ctx: FieldCtx, n: usize, i: usize) -> MultiPoly {
        MultiPoly::var(ctx, n, i)
    }

    #[test]
    fn difference_of_squares() {
        let c = q();
        let (a, b) = (x(c, 2, 0), x(c, 2, 1));
        let lhs = &(&a + &b) * &(&a - &b);
        let rhs = &(&a * &a) - &(&b * &b);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn frobenius_in_char_two() {
        let c = gf(2);
        let (a, b) = (x(c, 2, 0), x(c, 2, 1));
        let s = &a + &b;
        assert_eq!(&s * &s, &(&a * &a) + &(&b * &b));
    }

    #[test]
    fn additive_inverse() {
        let c = q();
        let p = &(&x(c, 3, 0) * &x(c, 3, 2)) + &x(c, 3, 1);
        assert!((&p + &(-&p)).is_zero());
    }

    #[test]
    fn mismatched_rings_error() {
        let a = x(q(), 2, 0);
        let b = x(q(), 3, 0);
        assert!(matches!(a.try_add(&b), Err(PolyError::Arity(2, 3))));
        let c = x(gf(5), 2, 0);
        assert!(matches!(a.try_mul(&c), Err(PolyError::Field(_))));
    }

    #[test]
    fn division_examples() {
        let c = q();
        let (a, b) = (x(c, 2, 0), x(c, 2, 1));
        let p = &(&a * &a) - &(&b * &b);
        let quot = p.divide_by_linear(&lf(c, &[1, 1])).unwrap().unwrap();
        assert_eq!(quot, &a - &b);

        let p = &(&a * &a) + &MultiPoly::one(c, 2);
        assert_eq!(p.divide_by_linear(&lf(c, &[1, 0])).unwrap(), None);

        let n = 3;
        let xyz = &(&x(c, n, 0) * &x(c, n, 1)) * &x(c, n, 2);
        let quot = xyz.divide_by_linear(&lf(c, &[0, 1, 0])).unwrap().unwrap();
        assert_eq!(quot, &x(c, n, 0) * &x(c, n, 2));

        assert_eq!(p.divide_by_linear(&lf(c, &[0, 0])), Err(PolyError::ZeroDivisor));
    }

    #[test]
    fn factor_examples() {
        let c = q();
        let (a, b) = (x(c, 2, 0), x(c, 2, 1));
        let p = &(&a * &a) - &(&b * &b);
        let Factorization::Split(f) = factor_product(&p).unwrap() else {
            panic!("x^2 - y^2 splits over Q")
        };
        assert!(f.scalar().is_one());
        assert_eq!(f.factors(), &[lf(c, &[1, 1]), lf(c, &[1, -1])]);

        let f2 = gf(2);
        let (a2, b2) = (x(f2, 2, 0), x(f2, 2, 1));
        let p2 = &(&a2 * &a2) + &(&b2 * &b2);
        let Factorization::Split(g) = factor_product(&p2).unwrap() else {
            panic!("x^2 + y^2 = (x+y)^2 over GF(2)")
        };
        assert_eq!(g.factors(), &[lf(f2, &[1, 1]), lf(f2, &[1, 1])]);

        let p3 = &(&a * &a) + &(&b * &b);
        assert_eq!(
            factor_product(&p3).unwrap(),
            Factorization::NotSplit(NotSplit::Proven)
        );
    }

    #[test]
    fn factor_rejects_bad_input() {
        let c = q();
        let p = &x(c, 2, 0) + &MultiPoly::one(c, 2);
        assert_eq!(factor_product(&p), Err(PolyError::NotHomogeneous));
        assert_eq!(factor_product(&MultiPoly::zero(c, 2)), Err(PolyError::ZeroPolynomial));
    }

    #[test]
    fn rational_factorization_with_fractions() {
        let c = q();
        let n = 3;
        let l1 = lf(c, &[2, -3, 1]);
        let l2 = lf(c, &[1, 0, 5]);
        let l3 = lf(c, &[0, 1, 0]);
        let l4 = lf(c, &[3, 1, -1]);
        let prod = ProductOfLinear::new(c.from_i64(-6), vec![l1, l2, l3, l4], n).unwrap();
        let Factorization::Split(f) = factor_product(&prod.expand()).unwrap() else {
            panic!("should split")
        };
        assert_eq!(f, prod);
    }

    #[test]
    fn substitution_examples() {
        let c = q();
        let n = 2;
        let (a, b) = (x(c, n, 0), x(c, n, 1));
        let mut m = BTreeMap::new();
        m.insert(0, MultiPoly::zero(c, n));
        assert_eq!((&a + &b).substitute(&m).unwrap(), b);

        let mut m = BTreeMap::new();
        m.insert(1, a.clone());
        assert_eq!((&a * &b).substitute(&m).unwrap(), &a * &a);

        let mut bad = BTreeMap::new();
        bad.insert(0, x(c, 3, 0));
        assert!(matches!(a.substitute(&bad), Err(PolyError::Arity(_, _))));
    }

    #[test]
    fn mirrored_products_cancel_after_substitution() {
        // y1 = (u, v, w), y2 = (-u', v, w) with u' := u.
        let c = q();
        let n = 4;
        let (u, v, w, u2) = (x(c, n, 0), x(c, n, 1), x(c, n, 2), x(c, n, 3));
        let sum = &(&(&u * &v) * &w) - &(&(&u2 * &v) * &w);
        let mut m = BTreeMap::new();
        m.insert(3, u.clone());
        assert!(sum.substitute(&m).unwrap().is_zero());
    }

    #[test]
    fn json_round_trip_and_errors() {
        let c = gf(5);
        let p = &(&x(c, 3, 0) * &x(c, 3, 2)).scale(&c.from_i64(3)) + &x(c, 3, 1);
        let names = vec!["x11".into(), "x12".into(), "x13".into()];
        let j = p.to_json(&names);
        let text = serde_json::to_string(&j).unwrap();
        assert!(text.starts_with(r#"{"field":"q=5","vars":["x11","x12","x13"],"terms":[{"c":"3","e":[1,0,1]}"#));
        let back: PolyJson = serde_json::from_str(&text).unwrap();
        assert_eq!(MultiPoly::from_json(&back).unwrap(), p);

        let bad = PolyJson {
            field: "q=5".into(),
            vars: names,
            terms: vec![TermJson { c: "1".into(), e: vec![1] }],
        };
        assert!(matches!(MultiPoly::from_json(&bad), Err(PolyError::Json(_))));
    }

    #[test]
    fn homogeneity_predicate() {
        let c = q();
        let a = x(c, 2, 0);
        let b = x(c, 2, 1);
        assert!((&(&a * &b) + &(&a * &a)).is_homogeneous());
        assert!(!(&(&a * &b) + &a).is_homogeneous());
        assert!(MultiPoly::zero(c, 2).is_homogeneous());
    }

    fn arb_form(ctx: FieldCtx, p: i64, n: usize) -> impl Strategy<Value = LinearForm> {
        proptest::collection::vec(0..p, n)
            .prop_filter("nonzero", |v| v.iter().any(|&c| c != 0))
            .prop_map(move |v| LinearForm::from_i64(ctx, &v))
    }

    fn arb_product() -> impl Strategy<Value = ProductOfLinear> {
        (prop_oneof![Just(2u64), Just(3u64)], 1usize..=5, 1usize..=5).prop_flat_map(|(p, n, d)| {
            let ctx = gf(p);
            (
                1..p as i64,
                proptest::collection::vec(arb_form(ctx, p as i64, n), d),
            )
                .prop_map(move |(s, fs)| ProductOfLinear::new(ctx.from_i64(s), fs, n).unwrap())
        })
    }

    proptest! {
        #[test]
        fn factor_round_trip(prod in arb_product()) {
            match factor_product(&prod.expand()).unwrap() {
                Factorization::Split(f) => prop_assert_eq!(f, prod),
                other => prop_assert!(false, "did not split: {:?}", other),
            }
        }

        #[test]
        fn divide_inverts_multiply(prod in arb_product(), l_seed in 0usize..1000) {
            let ctx = prod.ctx();
            let n = prod.nvars();
            let forms = normalized_forms_on(ctx, ctx.characteristic(), n, &(0..n).collect::<Vec<_>>());
            let l = &forms[l_seed % forms.len()];
            let q = prod.expand();
            let p = &l.to_poly() * &q;
            prop_assert_eq!(p.divide_by_linear(l).unwrap(), Some(q));
        }

        #[test]
        fn products_stay_homogeneous(a in arb_product(), b in arb_product()) {
            if a.ctx() == b.ctx() && a.nvars() == b.nvars() {
                let p = &a.expand() * &b.expand();
                prop_assert!(p.is_homogeneous());
                prop_assert_eq!(p.degree(), Some((a.degree() + b.degree()) as u32));
            }
        }
    }
}
