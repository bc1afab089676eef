//! Identities `l_1 + ... + l_m = sum_i f_i x_i` between products of linear
//! forms and a combination of squarefree, pairwise coprime monomials.
//!
//! Indices are 1-based in the mathematics and 0-based in code: the first
//! `k` monomials are unconstrained, the remaining `n` carry the degree
//! conditions, and the property under test asks that at least `n - m` of
//! their coefficients vanish.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::FieldCtx;
use crate::multipoly::{Exponent, LinearForm, Monomial, MultiPoly, PolyError, ProductOfLinear, TermJson};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdentityError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("monomial {0} is not squarefree")]
    NotSquarefree(usize),
    #[error("monomials {0} and {1} share a variable")]
    NotCoprime(usize, usize),
    #[error("monomials are not sorted by nondecreasing degree")]
    NotSorted,
    #[error("product {index} has degree {got}, expected {expected}")]
    ProductDegree { index: usize, got: usize, expected: u32 },
    #[error("coefficient {0} has the wrong degree")]
    CoeffDegree(usize),
    #[error("{0}")]
    Shape(String),
    #[error("the two sides of the identity differ")]
    IdentityFails,
    #[error("deg x_{i} + deg x_{j} = {sum} is below the required {required}")]
    DegreeConstraintViolated { i: usize, j: usize, sum: u32, required: u32 },
    #[error("not cancellable: {0}")]
    NotCancellable(String),
    #[error("the linear form does not divide the sum")]
    NotDivisible,
    #[error("sum of products differs from sum of monomials")]
    SumMismatch,
}

/// Which pairwise degree bounds an identity is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DegreeConstraint {
    /// `deg x_i + deg x_j >= d+1` when `max(i,j) > k` and `>= d+2` when both exceed `k`.
    Strict,
    /// Only the `d+1` bound; used to exhibit the boundary cases.
    Relaxed,
}

/// Check the monomial list invariants: squarefree, pairwise coprime, sorted.
pub fn validate_monomials(monomials: &[Monomial]) -> Result<(), IdentityError> {
    for (i, m) in monomials.iter().enumerate() {
        if !m.is_squarefree() {
            return Err(IdentityError::NotSquarefree(i));
        }
        for (j, m2) in monomials.iter().enumerate().skip(i + 1) {
            if !m.is_coprime(m2) {
                return Err(IdentityError::NotCoprime(i, j));
            }
        }
    }
    if monomials.windows(2).any(|w| w[0].degree() > w[1].degree()) {
        return Err(IdentityError::NotSorted);
    }
    Ok(())
}

/// Check the pairwise degree bounds for the given `k` (1-based indices in
/// the error).
pub fn check_degree_constraints(
    monomials: &[Monomial],
    k: usize,
    d: u32,
    constraint: DegreeConstraint,
) -> Result<(), IdentityError> {
    for i in 0..monomials.len() {
        for j in (i + 1)..monomials.len() {
            let sum = monomials[i].degree() + monomials[j].degree();
            let required = if i >= k && constraint == DegreeConstraint::Strict {
                d + 2
            } else if j >= k {
                d + 1
            } else {
                continue;
            };
            if sum < required {
                return Err(IdentityError::DegreeConstraintViolated {
                    i: i + 1,
                    j: j + 1,
                    sum,
                    required,
                });
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SumProductIdentity {
    ctx: FieldCtx,
    nvars: usize,
    d: u32,
    k: usize,
    constraint: DegreeConstraint,
    products: Vec<ProductOfLinear>,
    monomials: Vec<Monomial>,
    coeffs: Vec<MultiPoly>,
}

impl SumProductIdentity {
    /// Validate shapes and check that the identity holds exactly. Degree
    /// constraints are recorded but only enforced by the property check.
    pub fn new(
        d: u32,
        k: usize,
        constraint: DegreeConstraint,
        products: Vec<ProductOfLinear>,
        monomials: Vec<Monomial>,
        coeffs: Vec<MultiPoly>,
    ) -> Result<Self, IdentityError> {
        let first = products
            .first()
            .ok_or_else(|| IdentityError::Shape("at least one product is required".into()))?;
        let (ctx, nvars) = (first.ctx(), first.nvars());
        if coeffs.len() != monomials.len() {
            return Err(IdentityError::Shape(format!(
                "{} coefficients for {} monomials",
                coeffs.len(),
                monomials.len()
            )));
        }
        if k > monomials.len() {
            return Err(IdentityError::Shape("k exceeds the number of monomials".into()));
        }
        validate_monomials(&monomials)?;
        let mut lhs = MultiPoly::zero(ctx, nvars);
        for (i, p) in products.iter().enumerate() {
            if p.degree() != d as usize {
                return Err(IdentityError::ProductDegree {
                    index: i,
                    got: p.degree(),
                    expected: d,
                });
            }
            lhs = lhs.try_add(&p.expand())?;
        }
        let mut rhs = MultiPoly::zero(ctx, nvars);
        for (i, (f, x)) in coeffs.iter().zip(&monomials).enumerate() {
            if x.nvars() != nvars {
                return Err(PolyError::Arity(x.nvars(), nvars).into());
            }
            let want = d.checked_sub(x.degree()).ok_or(IdentityError::CoeffDegree(i))?;
            if !f.is_zero() && (!f.is_homogeneous() || f.degree() != Some(want)) {
                return Err(IdentityError::CoeffDegree(i));
            }
            rhs = rhs.try_add(&f.shift(&x.exponent()))?;
        }
        if lhs != rhs {
            return Err(IdentityError::IdentityFails);
        }
        Ok(SumProductIdentity {
            ctx,
            nvars,
            d,
            k,
            constraint,
            products,
            monomials,
            coeffs,
        })
    }

    /// Build the identity whose right-hand side is forced by the products:
    /// coefficients with index above `k` come from [`decompose`] and the
    /// residual must complete on the first `k` monomials. `Ok(None)` when it
    /// does not.
    pub fn from_products(
        d: u32,
        k: usize,
        constraint: DegreeConstraint,
        products: Vec<ProductOfLinear>,
        monomials: Vec<Monomial>,
    ) -> Result<Option<Self>, IdentityError> {
        let first = products
            .first()
            .ok_or_else(|| IdentityError::Shape("at least one product is required".into()))?;
        let mut lhs = MultiPoly::zero(first.ctx(), first.nvars());
        for p in &products {
            lhs = lhs.try_add(&p.expand())?;
        }
        let dec = decompose(&lhs, &monomials, k, d)?;
        let Some(head) = feasible_completion(&dec.residual, &monomials[..k])? else {
            return Ok(None);
        };
        let coeffs = head
            .into_iter()
            .chain(dec.coeffs.into_iter().skip(k).map(|c| c.expect("set above k")))
            .collect();
        SumProductIdentity::new(d, k, constraint, products, monomials, coeffs).map(Some)
    }

    pub fn ctx(&self) -> FieldCtx {
        self.ctx
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.products.len()
    }

    pub fn n(&self) -> usize {
        self.monomials.len() - self.k
    }

    pub fn constraint(&self) -> DegreeConstraint {
        self.constraint
    }

    pub fn products(&self) -> &[ProductOfLinear] {
        &self.products
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn coeffs(&self) -> &[MultiPoly] {
        &self.coeffs
    }

    /// 1-based indices above `k` whose coefficient vanishes.
    pub fn vanishing_indices(&self) -> Vec<usize> {
        (self.k..self.coeffs.len())
            .filter(|&i| self.coeffs[i].is_zero())
            .map(|i| i + 1)
            .collect()
    }

    pub fn to_json(&self) -> IdentityJson {
        IdentityJson {
            field: self.ctx.tag(),
            nvars: self.nvars,
            d: self.d,
            k: self.k,
            m: self.m(),
            n: self.n(),
            constraint: self.constraint,
            products: self
                .products
                .iter()
                .map(|p| ProductJson {
                    scalar: p.scalar().to_string(),
                    factors: p
                        .factors()
                        .iter()
                        .map(|l| l.coeffs().iter().map(ToString::to_string).collect())
                        .collect(),
                })
                .collect(),
            monomials: self.monomials.iter().map(Monomial::vars).collect(),
            coeffs: self
                .coeffs
                .iter()
                .map(|f| {
                    f.terms()
                        .rev()
                        .map(|(e, c)| TermJson {
                            c: c.to_string(),
                            e: e.as_slice().to_vec(),
                        })
                        .collect()
                })
                .collect(),
        }
    }

    pub fn from_json(j: &IdentityJson) -> Result<Self, IdentityError> {
        let ctx = FieldCtx::from_tag(&j.field).map_err(PolyError::from)?;
        let parse = |s: &str| ctx.parse_element(s).map_err(|e| IdentityError::Poly(e.into()));
        let mut products = Vec::with_capacity(j.products.len());
        for p in &j.products {
            let scalar = parse(&p.scalar)?;
            let mut factors = Vec::with_capacity(p.factors.len());
            for f in &p.factors {
                let coeffs = f.iter().map(|s| parse(s)).collect::<Result<Vec<_>, _>>()?;
                if coeffs.len() != j.nvars {
                    return Err(PolyError::Arity(coeffs.len(), j.nvars).into());
                }
                factors.push(LinearForm::new(ctx, coeffs)?);
            }
            products.push(ProductOfLinear::new(scalar, factors, j.nvars)?);
        }
        let monomials = j
            .monomials
            .iter()
            .map(|vs| Monomial::from_vars(j.nvars, vs))
            .collect::<Result<Vec<_>, _>>()?;
        let mut coeffs = Vec::with_capacity(j.coeffs.len());
        for terms in &j.coeffs {
            let mut ts = Vec::with_capacity(terms.len());
            for t in terms {
                ts.push((t.e.clone(), parse(&t.c)?));
            }
            coeffs.push(MultiPoly::from_terms(ctx, j.nvars, ts)?);
        }
        let id = SumProductIdentity::new(j.d, j.k, j.constraint, products, monomials, coeffs)?;
        if id.m() != j.m || id.n() != j.n {
            return Err(IdentityError::Shape("m or n disagrees with the lists".into()));
        }
        Ok(id)
    }
}

impl fmt::Display for SumProductIdentity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lhs: Vec<String> = self.products.iter().map(ToString::to_string).collect();
        let names = crate::multipoly::default_names(self.nvars);
        let rhs: Vec<String> = self
            .coeffs
            .iter()
            .zip(&self.monomials)
            .map(|(c, x)| {
                let mono: Vec<&str> = x.vars().iter().map(|&v| names[v].as_str()).collect();
                format!("({})*{}", c, if mono.is_empty() { "1".into() } else { mono.join("*") })
            })
            .collect();
        write!(f, "{} = {}", lhs.join(" + "), rhs.join(" + "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductJson {
    pub scalar: String,
    pub factors: Vec<Vec<String>>,
}

/// Serialized identity; monomials are variable index lists and
/// coefficients are term lists in the polynomial JSON encoding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityJson {
    pub field: String,
    pub nvars: usize,
    pub d: u32,
    pub k: usize,
    pub m: usize,
    pub n: usize,
    pub constraint: DegreeConstraint,
    pub products: Vec<ProductJson>,
    pub monomials: Vec<Vec<usize>>,
    pub coeffs: Vec<Vec<TermJson>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    /// `None` for the first `k` (unconstrained) monomials.
    pub coeffs: Vec<Option<MultiPoly>>,
    pub residual: MultiPoly,
}

/// Split `l` into the unique parts divisible by the constrained monomials
/// and a residual divisible by none of them.
pub fn decompose(l: &MultiPoly, monomials: &[Monomial], k: usize, d: u32) -> Result<Decomposition, IdentityError> {
    if !l.is_zero() && (!l.is_homogeneous() || l.degree() != Some(d)) {
        return Err(PolyError::NotHomogeneous.into());
    }
    if k > monomials.len() {
        return Err(IdentityError::Shape("k exceeds the number of monomials".into()));
    }
    for (i, x) in monomials.iter().enumerate() {
        if x.nvars() != l.nvars() {
            return Err(PolyError::Arity(x.nvars(), l.nvars()).into());
        }
        if !x.is_squarefree() {
            return Err(IdentityError::NotSquarefree(i));
        }
    }
    for i in 0..monomials.len() {
        for j in (i + 1)..monomials.len() {
            if !monomials[i].is_coprime(&monomials[j]) {
                return Err(IdentityError::NotCoprime(i, j));
            }
        }
    }
    check_degree_constraints(monomials, k, d, DegreeConstraint::Relaxed)?;
    let (ctx, n) = (l.ctx(), l.nvars());
    let exps: Vec<Exponent> = monomials.iter().map(Monomial::exponent).collect();
    let mut coeffs: Vec<Option<MultiPoly>> = (0..monomials.len())
        .map(|i| (i >= k).then(|| MultiPoly::zero(ctx, n)))
        .collect();
    let mut residual = Vec::new();
    for (e, c) in l.terms() {
        match (k..monomials.len()).find(|&i| exps[i].divides(e)) {
            Some(i) => {
                let q = e.checked_sub(&exps[i]).expect("divides");
                let add = MultiPoly::monomial(ctx, q, c.clone());
                let slot = coeffs[i].as_mut().expect("constrained index");
                *slot = slot.try_add(&add)?;
            }
            None => residual.push((e.as_slice().to_vec(), c.clone())),
        }
    }
    Ok(Decomposition {
        coeffs,
        residual: MultiPoly::from_terms(ctx, n, residual)?,
    })
}

/// Write `residual = sum_i g_i x_i` over the given monomials, if possible.
///
/// The degree-d span of `{u * x_i}` is spanned by the monomials it
/// contains, so this holds exactly when every term is divisible by some
/// `x_i`; each term goes to the first such monomial.
pub fn feasible_completion(residual: &MultiPoly, monomials: &[Monomial]) -> Result<Option<Vec<MultiPoly>>, IdentityError> {
    let (ctx, n) = (residual.ctx(), residual.nvars());
    if let Some(x) = monomials.iter().find(|x| x.nvars() != n) {
        return Err(PolyError::Arity(x.nvars(), n).into());
    }
    let exps: Vec<Exponent> = monomials.iter().map(Monomial::exponent).collect();
    let mut g = vec![Vec::new(); monomials.len()];
    for (e, c) in residual.terms() {
        let Some(i) = exps.iter().position(|x| x.divides(e)) else {
            return Ok(None);
        };
        g[i].push((e.checked_sub(&exps[i]).expect("divides").as_slice().to_vec(), c.clone()));
    }
    g.into_iter()
        .map(|ts| MultiPoly::from_terms(ctx, n, ts).map_err(Into::into))
        .collect::<Result<Vec<_>, _>>()
        .map(Some)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Satisfies,
    Counterexample(Box<SumProductIdentity>),
}

/// Does the instance have at least `n - m` vanishing constrained coefficients?
pub fn check_property_instance(inst: &SumProductIdentity) -> Result<Verdict, IdentityError> {
    check_degree_constraints(&inst.monomials, inst.k, inst.d, inst.constraint)?;
    if inst.n() <= inst.m() {
        return Err(IdentityError::Shape(format!(
            "need n > m, got n = {} and m = {}",
            inst.n(),
            inst.m()
        )));
    }
    if inst.vanishing_indices().len() >= inst.n() - inst.m() {
        Ok(Verdict::Satisfies)
    } else {
        Ok(Verdict::Counterexample(Box::new(inst.clone())))
    }
}

/// Cancel a single-product identity by the variable `x` at (0-based) index `i`.
pub fn cancel(inst: &SumProductIdentity, x: usize, i: usize) -> Result<SumProductIdentity, IdentityError> {
    let fail = |s: &str| Err(IdentityError::NotCancellable(s.into()));
    if inst.m() != 1 {
        return fail("only single-product identities can be cancelled");
    }
    if x >= inst.nvars || i >= inst.monomials.len() {
        return fail("index out of range");
    }
    if inst.d == 0 {
        return fail("degree zero");
    }
    let var = LinearForm::var(inst.ctx, inst.nvars, x);
    let Some(prod) = inst.products[0].remove_factor(&var) else {
        return fail("the variable does not divide the product");
    };
    let Some(xi) = inst.monomials[i].without_var(x) else {
        return fail("the variable does not divide the chosen monomial");
    };
    let mut coeffs = Vec::with_capacity(inst.coeffs.len());
    for (j, f) in inst.coeffs.iter().enumerate() {
        if j == i {
            coeffs.push(f.clone());
            continue;
        }
        match f.divide_by_linear(&var)? {
            Some(q) => coeffs.push(q),
            None => return fail(&format!("the variable does not divide coefficient {}", j + 1)),
        }
    }
    let mut monomials = inst.monomials.clone();
    monomials[i] = xi;
    // Restore the nondecreasing degree order.
    let mut order: Vec<usize> = (0..monomials.len()).collect();
    order.sort_by_key(|&j| monomials[j].degree());
    let monomials = order.iter().map(|&j| monomials[j].clone()).collect();
    let coeffs = order.iter().map(|&j| coeffs[j].clone()).collect();
    SumProductIdentity::new(inst.d - 1, inst.k, inst.constraint, vec![prod], monomials, coeffs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FactorTag {
    DividesMonomial,
    DividesCoeff,
    Neither,
}

/// For a linear form dividing `sum f_i x_i`, record for each index whether
/// it divides the monomial, the coefficient, or neither.
pub fn linear_factor_conclusion(l: &LinearForm, pairs: &[(MultiPoly, Monomial)]) -> Result<Vec<FactorTag>, IdentityError> {
    let (ctx, n) = (l.ctx(), l.nvars());
    let mut sum = MultiPoly::zero(ctx, n);
    for (f, x) in pairs {
        if x.nvars() != n {
            return Err(PolyError::Arity(x.nvars(), n).into());
        }
        sum = sum.try_add(&f.shift(&x.exponent()))?;
    }
    if sum.divide_by_linear(l)?.is_none() {
        return Err(IdentityError::NotDivisible);
    }
    pairs
        .iter()
        .map(|(f, x)| {
            if x.to_poly(ctx).divide_by_linear(l)?.is_some() {
                Ok(FactorTag::DividesMonomial)
            } else if f.divide_by_linear(l)?.is_some() {
                Ok(FactorTag::DividesCoeff)
            } else {
                Ok(FactorTag::Neither)
            }
        })
        .collect()
}

/// Whether the divisibility conclusion is guaranteed for these degrees:
/// the two smallest monomial degrees sum to at least `d+2`, or to `d+1`
/// when `l` is a variable.
pub fn linear_factor_hypotheses(l: &LinearForm, monomials: &[Monomial], d: u32) -> bool {
    let mut degs: Vec<u32> = monomials.iter().map(Monomial::degree).collect();
    degs.sort_unstable();
    if degs.len() < 2 {
        return true;
    }
    let s = degs[0] + degs[1];
    s >= d + 2 || (s > d && l.as_variable().is_some())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MatchResult {
    /// `sigma[i]` is the monomial equal to product `i`.
    Matched(Vec<usize>),
    NoMatch,
}

/// Find a permutation matching each product to a monomial.
pub fn match_products(products: &[ProductOfLinear], monomials: &[Monomial]) -> Result<MatchResult, IdentityError> {
    let first = products
        .first()
        .ok_or_else(|| IdentityError::Shape("at least one product is required".into()))?;
    let (ctx, n) = (first.ctx(), first.nvars());
    let expanded: Vec<MultiPoly> = products.iter().map(ProductOfLinear::expand).collect();
    let mono: Vec<MultiPoly> = monomials.iter().map(|x| x.to_poly(ctx)).collect();
    let mut lhs = MultiPoly::zero(ctx, n);
    for p in &expanded {
        lhs = lhs.try_add(p)?;
    }
    let mut rhs = MultiPoly::zero(ctx, n);
    for x in &mono {
        rhs = rhs.try_add(x)?;
    }
    if lhs != rhs {
        return Err(IdentityError::SumMismatch);
    }
    if products.len() != monomials.len() {
        return Ok(MatchResult::NoMatch);
    }
    let mut used = vec![false; monomials.len()];
    let mut sigma = Vec::with_capacity(products.len());
    for p in &expanded {
        match (0..mono.len()).find(|&j| !used[j] && mono[j] == *p) {
            Some(j) => {
                used[j] = true;
                sigma.push(j);
            }
            None => return Ok(MatchResult::NoMatch),
        }
    }
    Ok(MatchResult::Matched(sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldElement;
    use crate::linalg::Matrix;
    use proptest::prelude::*;

    fn q() -> FieldCtx {
        FieldCtx::rationals()
    }

    fn mono(n: usize, vs: &[usize]) -> Monomial {
        Monomial::from_vars(n, vs).unwrap()
    }

    fn var(n: usize, i: usize) -> LinearForm {
        LinearForm::var(q(), n, i)
    }

    fn prod(n: usize, fs: Vec<LinearForm>) -> ProductOfLinear {
        ProductOfLinear::new(q().one(), fs, n).unwrap()
    }

    fn x(n: usize, i: usize) -> MultiPoly {
        MultiPoly::var(q(), n, i)
    }

    // Variables a, b, c, d, e, f, g as indices 0..7.
    const N: usize = 7;

    fn boundary_witness() -> SumProductIdentity {
        // (a + c) b d = d * ab + b * cd
        let p = prod(N, vec![LinearForm::from_i64(q(), &[1, 0, 1, 0, 0, 0, 0]), var(N, 1), var(N, 3)]);
        SumProductIdentity::from_products(3, 0, DegreeConstraint::Relaxed, vec![p], vec![mono(N, &[0, 1]), mono(N, &[2, 3])])
            .unwrap()
            .unwrap()
    }

    #[test]
    fn decompose_boundary_witness() {
        let p = prod(N, vec![LinearForm::from_i64(q(), &[1, 0, 1, 0, 0, 0, 0]), var(N, 1), var(N, 3)]);
        let dec = decompose(&p.expand(), &[mono(N, &[0, 1]), mono(N, &[2, 3])], 0, 3).unwrap();
        assert_eq!(dec.coeffs[0].as_ref().unwrap(), &x(N, 3));
        assert_eq!(dec.coeffs[1].as_ref().unwrap(), &x(N, 1));
        assert!(dec.residual.is_zero());
    }

    #[test]
    fn decompose_trivial_cases() {
        let abc = &(&x(N, 0) * &x(N, 1)) * &x(N, 2);
        let dec = decompose(&abc, &[mono(N, &[0, 1, 2]), mono(N, &[3, 4])], 0, 3).unwrap();
        assert!(dec.coeffs[0].as_ref().unwrap() == &MultiPoly::one(q(), N));
        assert!(dec.coeffs[1].as_ref().unwrap().is_zero());

        let g3 = x(N, 6).pow(3);
        let l = &abc + &g3;
        let dec = decompose(&l, &[mono(N, &[0, 1, 2]), mono(N, &[3, 4, 5])], 0, 3).unwrap();
        assert!(dec.coeffs[1].as_ref().unwrap().is_zero());
        assert_eq!(dec.residual, g3);
    }

    #[test]
    fn decompose_rejects_small_degrees() {
        let l = &x(N, 0) * &x(N, 1);
        let r = decompose(&l, &[mono(N, &[0]), mono(N, &[1])], 0, 2);
        assert!(matches!(r, Err(IdentityError::DegreeConstraintViolated { .. })));
    }

    #[test]
    fn completion_examples() {
        let n = 2;
        let zero = MultiPoly::zero(q(), n);
        assert!(feasible_completion(&zero, &[mono(n, &[0])]).unwrap().is_some());
        let xy2 = &x(n, 0) * &x(n, 1).pow(2);
        let g = feasible_completion(&xy2, &[mono(n, &[0])]).unwrap().unwrap();
        assert_eq!(g[0], x(n, 1).pow(2));
        assert!(feasible_completion(&x(n, 1).pow(3), &[mono(n, &[0])]).unwrap().is_none());
    }

    /// Independent oracle: solve the linear system over all monomials.
    fn completion_by_linear_system(residual: &MultiPoly, monomials: &[Monomial], d: u32) -> bool {
        let n = residual.nvars();
        let all = |deg: u32| -> Vec<Vec<u32>> {
            let mut out = vec![vec![]];
            for v in 0..n {
                let mut next = Vec::new();
                for e in &out {
                    let used: u32 = e.iter().sum();
                    let lo = if v + 1 == n { deg - used } else { 0 };
                    for k in lo..=(deg - used) {
                        let mut e2 = e.clone();
                        e2.push(k);
                        next.push(e2);
                    }
                }
                out = next;
            }
            out
        };
        let rows_exps = all(d);
        let mut cols = Vec::new();
        for x in monomials {
            for u in all(d - x.degree()) {
                cols.push(Exponent::new(u).add(&x.exponent()));
            }
        }
        let ctx = residual.ctx();
        let rows: Vec<Vec<FieldElement>> = rows_exps
            .iter()
            .map(|r| {
                cols.iter()
                    .map(|c| if c.as_slice() == r.as_slice() { ctx.one() } else { ctx.zero() })
                    .collect()
            })
            .collect();
        let a = Matrix::new(ctx, cols.len(), rows).unwrap();
        let b: Vec<FieldElement> = rows_exps
            .iter()
            .map(|r| residual.coefficient(&Exponent::new(r.clone())))
            .collect();
        a.solve(&b).unwrap().is_some()
    }

    proptest! {
        #[test]
        fn completion_matches_linear_system(
            coeffs in proptest::collection::vec(-2i64..=2, 10),
            split in 1usize..3,
        ) {
            // Degree-3 forms in 3 variables.
            let n = 3;
            let ctx = q();
            let mut exps = Vec::new();
            for a in 0..=3u32 { for b in 0..=(3 - a) { exps.push(vec![a, b, 3 - a - b]); } }
            let residual = MultiPoly::from_terms(
                ctx, n, exps.into_iter().zip(coeffs).map(|(e, c)| (e, ctx.from_i64(c)))
            ).unwrap();
            let monomials: Vec<Monomial> = if split == 1 {
                vec![mono(n, &[0])]
            } else {
                vec![mono(n, &[0]), mono(n, &[1])]
            };
            let fast = feasible_completion(&residual, &monomials).unwrap();
            prop_assert_eq!(fast.is_some(), completion_by_linear_system(&residual, &monomials, 3));
            if let Some(g) = fast {
                let mut s = MultiPoly::zero(ctx, n);
                for (gi, xi) in g.iter().zip(&monomials) {
                    s = &s + &gi.shift(&xi.exponent());
                }
                prop_assert_eq!(s, residual);
            }
        }
    }

    #[test]
    fn property_check_examples() {
        let abc = prod(N, vec![var(N, 0), var(N, 1), var(N, 2)]);
        let id = SumProductIdentity::from_products(3, 0, DegreeConstraint::Strict, vec![abc], vec![mono(N, &[0, 1, 2]), mono(N, &[3, 4, 5])])
            .unwrap()
            .unwrap();
        assert_eq!(check_property_instance(&id).unwrap(), Verdict::Satisfies);

        let w = boundary_witness();
        assert!(matches!(check_property_instance(&w).unwrap(), Verdict::Counterexample(_)));
        let strict = SumProductIdentity::new(3, 0, DegreeConstraint::Strict, w.products.clone(), w.monomials.clone(), w.coeffs.clone()).unwrap();
        assert!(matches!(
            check_property_instance(&strict),
            Err(IdentityError::DegreeConstraintViolated { i: 1, j: 2, sum: 4, required: 5 })
        ));
    }

    #[test]
    fn wrong_identity_is_rejected() {
        let abc = prod(N, vec![var(N, 0), var(N, 1), var(N, 2)]);
        let r = SumProductIdentity::new(
            3,
            0,
            DegreeConstraint::Strict,
            vec![abc],
            vec![mono(N, &[0, 1, 2]), mono(N, &[3, 4, 5])],
            vec![MultiPoly::one(q(), N), MultiPoly::one(q(), N)],
        );
        assert_eq!(r, Err(IdentityError::IdentityFails));
    }

    #[test]
    fn cancellation_examples() {
        let n = 3;
        let xyz = prod(n, vec![var(n, 0), var(n, 1), var(n, 2)]);
        let id = SumProductIdentity::new(3, 0, DegreeConstraint::Relaxed, vec![xyz], vec![mono(n, &[0, 1])], vec![x(n, 2)]).unwrap();
        let c = cancel(&id, 0, 0).unwrap();
        assert_eq!(c.d(), 2);
        assert_eq!(c.monomials(), &[mono(n, &[1])]);
        assert_eq!(c.coeffs(), &[x(n, 2)]);
        assert_eq!(c.products()[0], prod(n, vec![var(n, 1), var(n, 2)]));

        let w = boundary_witness();
        let c = cancel(&w, 1, 0).unwrap();
        assert_eq!(c.d(), 2);
        assert_eq!(c.monomials(), &[mono(N, &[0]), mono(N, &[2, 3])]);
        assert_eq!(c.coeffs(), &[x(N, 3), MultiPoly::one(q(), N)]);

        assert!(matches!(cancel(&w, 0, 0), Err(IdentityError::NotCancellable(_))));
    }

    #[test]
    fn linear_factor_examples() {
        let n = 3;
        let tags = linear_factor_conclusion(&var(n, 0), &[(x(n, 1), mono(n, &[0, 2]))]).unwrap();
        assert_eq!(tags, vec![FactorTag::DividesMonomial]);

        let n = 4;
        let l = LinearForm::from_i64(q(), &[1, 1, 0, 0]);
        let tags = linear_factor_conclusion(&l, &[(l.to_poly(), mono(n, &[2, 3]))]).unwrap();
        assert_eq!(tags, vec![FactorTag::DividesCoeff]);

        let r = linear_factor_conclusion(&var(n, 0), &[(x(n, 1), mono(n, &[2, 3]))]);
        assert_eq!(r, Err(IdentityError::NotDivisible));
    }

    #[test]
    fn linear_factor_sharpness_at_low_degree() {
        // d = 2, x_1 = a, x_2 = b: (a + b)^2 = (a + 2b) a + b * b, and a + b
        // divides neither monomial nor coefficient.
        let n = 2;
        let l = LinearForm::from_i64(q(), &[1, 1]);
        let f1 = &x(n, 0) + &x(n, 1).scale(&q().from_i64(2));
        let pairs = [(f1, mono(n, &[0])), (x(n, 1), mono(n, &[1]))];
        let tags = linear_factor_conclusion(&l, &pairs).unwrap();
        assert!(tags.contains(&FactorTag::Neither));
        assert!(!linear_factor_hypotheses(&l, &[mono(n, &[0]), mono(n, &[1])], 2));
    }

    #[test]
    fn matching_examples() {
        let abc = prod(6, vec![var(6, 0), var(6, 1), var(6, 2)]);
        let def = prod(6, vec![var(6, 3), var(6, 4), var(6, 5)]);
        let ms = [mono(6, &[3, 4, 5]), mono(6, &[0, 1, 2])];
        assert_eq!(match_products(&[abc.clone(), def.clone()], &ms).unwrap(), MatchResult::Matched(vec![1, 0]));

        let two_a = LinearForm::from_i64(q(), &[2, 0, 0, 0, 0, 0]);
        let half = ProductOfLinear::new(q().from_fraction(1, 2).unwrap(), vec![two_a, var(6, 1), var(6, 2)], 6).unwrap();
        assert_eq!(match_products(&[half, def], &ms).unwrap(), MatchResult::Matched(vec![1, 0]));

        let n = 4;
        let apb = LinearForm::from_i64(q(), &[1, 1, 0, 0]);
        let p = prod(n, vec![apb, var(n, 2), var(n, 3)]);
        let r = match_products(&[p], &[mono(n, &[0, 2, 3]), mono(n, &[1, 2, 3])]);
        assert_eq!(r.unwrap(), MatchResult::NoMatch);

        let r = match_products(&[abc], &[mono(6, &[3, 4, 5])]);
        assert_eq!(r, Err(IdentityError::SumMismatch));
    }

    #[test]
    fn json_round_trip() {
        let w = boundary_witness();
        let text = serde_json::to_string(&w.to_json()).unwrap();
        let back: IdentityJson = serde_json::from_str(&text).unwrap();
        assert_eq!(SumProductIdentity::from_json(&back).unwrap(), w);
    }
}
