//! Searches over finite fields: counterexamples to the vanishing property of
//! `sum_i l_i = sum_i f_i x_i`, and planes of `X_{r,d}` that violate the
//! expected splitting behaviour.
//!
//! The exhaustive counterexample search never enumerates all m-tuples of
//! products. With `I` the ideal of the monomials, `L` lies in `I` exactly
//! when it vanishes modulo every prime `(x_t : t in T)`, `T` a transversal
//! (one variable from each monomial). A product reduces modulo such a prime
//! to the product of its reduced factors, so membership and the pairing
//! conditions become comparisons of small sorted index arrays.

use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::time::Instant;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::census::{splitting_status, CensusError, Status};
use crate::exec::Exec;
use crate::field::{FieldCtx, FieldElement};
use crate::identity::{check_degree_constraints, check_property_instance, DegreeConstraint, IdentityError, IdentityJson, SumProductIdentity, Verdict};
use crate::linalg::Matrix;
use crate::multipoly::{normalized_forms_on, LinearForm, Monomial, PolyError, ProductOfLinear};
use crate::plane::{min_splitting, sharp_witness, HypersurfaceParams, KPlane, PlaneError, PlaneJson};

pub const REPORT_SCHEMA: &str = "sumprod.search/1";
pub const SPLIT_REPORT_SCHEMA: &str = "sumprod.splithunt/1";
pub const DEFAULT_CEILING: u64 = 100_000_000;
const MAXD: usize = 8;
const ZERO: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("search space: {0}")]
    InvalidSpace(String),
    #[error("{count} items exceed the ceiling {ceiling}")]
    CeilingExceeded { count: u128, ceiling: u64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Identity(#[from] IdentityError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Plane(#[from] PlaneError),
    #[error(transparent)]
    Census(#[from] CensusError),
    #[error("internal inconsistency: {0}")]
    Internal(String),
}

fn prime_of(ctx: FieldCtx) -> Result<u32, SearchError> {
    match ctx {
        FieldCtx::Prime(p) => Ok(p),
        FieldCtx::Rationals => Err(SearchError::InvalidSpace("searches run over prime fields".into())),
    }
}

fn binom(n: u128, k: u128) -> u128 {
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Nondecreasing index tuples of length `k` over `0..n`, in lex order.
struct Multisets {
    n: usize,
    cur: Option<Vec<usize>>,
}

impl Multisets {
    fn new(n: usize, k: usize) -> Self {
        let cur = if n == 0 && k > 0 { None } else { Some(vec![0; k]) };
        Multisets { n, cur }
    }
}

impl Iterator for Multisets {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.cur.clone()?;
        let mut c = out.clone();
        let mut i = c.len();
        loop {
            if i == 0 {
                self.cur = None;
                break;
            }
            i -= 1;
            if c[i] + 1 < self.n {
                let v = c[i] + 1;
                for x in &mut c[i..] {
                    *x = v;
                }
                self.cur = Some(c);
                break;
            }
        }
        Some(out)
    }
}

/// Every m-multiset of products of `d` linear forms over GF(q), each product
/// a nonzero scalar times a multiset of normalized forms. Tuples come in
/// lexicographic order of product indices; products are ordered by factor
/// multiset, then scalar.
pub fn enumerate_products(
    ctx: FieldCtx,
    nvars: usize,
    d: usize,
    m: usize,
    ceiling: u64,
) -> Result<impl Iterator<Item = Vec<ProductOfLinear>>, SearchError> {
    let q = prime_of(ctx)?;
    let nforms = ((q as u128).pow(nvars as u32) - 1) / (q as u128 - 1);
    let nprod = binom(nforms + d as u128 - 1, d as u128).saturating_mul(q as u128 - 1);
    let count = binom(nprod + m as u128 - 1, m as u128);
    if count > ceiling as u128 || nprod > ceiling as u128 {
        return Err(SearchError::CeilingExceeded { count, ceiling });
    }
    let support: Vec<usize> = (0..nvars).collect();
    let forms = normalized_forms_on(ctx, q, nvars, &support);
    let scalars: Vec<FieldElement> = (1..q as i64).map(|s| ctx.from_i64(s)).collect();
    let mut products = Vec::with_capacity(nprod as usize);
    for idx in Multisets::new(forms.len(), d) {
        let factors: Vec<LinearForm> = idx.iter().map(|&i| forms[i].clone()).collect();
        for s in &scalars {
            products.push(ProductOfLinear::new(s.clone(), factors.clone(), nvars)?);
        }
    }
    Ok(Multisets::new(products.len(), m).map(move |t| t.iter().map(|&i| products[i].clone()).collect()))
}

// ---------------------------------------------------------------------------
// Search spaces and reports

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mode {
    Exhaustive,
    Randomized { seed: u64, trials: u64 },
}

/// Run only the root branches with `index % count == slot`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub slot: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub ctx: FieldCtx,
    pub nvars: usize,
    pub d: u32,
    pub m: usize,
    /// Number of leading monomials with undetermined coefficients.
    pub k: usize,
    /// Monomial degrees, nondecreasing; monomial `i` uses the next
    /// `pattern[i]` variables.
    pub pattern: Vec<u32>,
    pub constraint: DegreeConstraint,
    pub mode: Mode,
    /// Exhaustive mode stops (and flags the report incomplete) after this
    /// many search nodes.
    pub ceiling: u64,
    pub partition: Option<Partition>,
    /// Reduce by variable relabelings that preserve the monomials.
    pub symmetry: bool,
}

impl SearchSpace {
    pub fn new(ctx: FieldCtx, d: u32, m: usize, k: usize, mut pattern: Vec<u32>, constraint: DegreeConstraint) -> Self {
        pattern.sort_unstable();
        let nvars = pattern.iter().map(|&p| p as usize).sum();
        SearchSpace {
            ctx,
            nvars,
            d,
            m,
            k,
            pattern,
            constraint,
            mode: Mode::Exhaustive,
            ceiling: DEFAULT_CEILING,
            partition: None,
            symmetry: true,
        }
    }

    pub fn n(&self) -> usize {
        self.pattern.len().saturating_sub(self.k)
    }

    pub fn monomials(&self) -> Result<Vec<Monomial>, SearchError> {
        let mut next = 0;
        let mut out = Vec::with_capacity(self.pattern.len());
        for &deg in &self.pattern {
            let vars: Vec<usize> = (next..next + deg as usize).collect();
            next += deg as usize;
            out.push(Monomial::from_vars(self.nvars, &vars)?);
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        let bad = |s: String| Err(SearchError::InvalidSpace(s));
        prime_of(self.ctx)?;
        if self.d == 0 || self.d as usize > MAXD {
            return bad(format!("d must be in 1..={MAXD}"));
        }
        if self.m == 0 {
            return bad("m must be positive".into());
        }
        if self.pattern.contains(&0) {
            return bad("monomial degrees must be positive".into());
        }
        if self.pattern.windows(2).any(|w| w[0] > w[1]) {
            return bad("pattern must be nondecreasing".into());
        }
        if self.k > self.pattern.len() {
            return bad("k exceeds the number of monomials".into());
        }
        if self.n() <= self.m {
            return bad(format!("need n > m, got n = {} and m = {}", self.n(), self.m));
        }
        let used: usize = self.pattern.iter().map(|&p| p as usize).sum();
        if self.nvars < used {
            return bad(format!("the monomials need {used} variables, nvars = {}", self.nvars));
        }
        if self.nvars > 16 {
            return bad("at most 16 variables".into());
        }
        check_degree_constraints(&self.monomials()?, self.k, self.d, self.constraint)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TailCheck {
    /// Instances where `deg x_1 + deg x_{n-1} >= d + 1` and `n >= 3`.
    pub applicable: u64,
    /// Of those, instances where no `f_i` with `deg x_i >= deg x_{n-1}`
    /// vanishes.
    pub violations: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchReport {
    pub schema: String,
    pub field: String,
    pub nvars: usize,
    pub d: u32,
    pub m: usize,
    pub k: usize,
    pub n: usize,
    pub pattern: Vec<u32>,
    pub constraint: DegreeConstraint,
    pub mode: Mode,
    pub seed: Option<u64>,
    pub partition: Option<Partition>,
    pub symmetry_group_order: u64,
    /// Root branches (exhaustive) or trial chunks (randomized).
    pub partitions: usize,
    pub nodes: u64,
    /// Identities checked against the property.
    pub instances_examined: u64,
    /// m = 2: single products lying in the ideal, checked as m = 1
    /// instances. Pairs of such products then satisfy the m = 2 statement.
    pub ideal_products_checked: u64,
    pub ideal_product_failures: u64,
    pub counterexamples: Vec<IdentityJson>,
    pub tail_check: TailCheck,
    pub complete: bool,
    pub wall_clock_ms: u128,
    pub label: String,
}

// ---------------------------------------------------------------------------
// Packed linear forms: four bits per variable.

#[derive(Debug, Clone)]
struct Packed {
    p: u32,
    n: usize,
    inv: Vec<u32>,
}

impl Packed {
    fn new(p: u32, n: usize) -> Self {
        let mut inv = vec![0; p as usize];
        for a in 1..p {
            inv[a as usize] = (1..p).find(|b| a * b % p == 1).expect("prime");
        }
        Packed { p, n, inv }
    }

    fn digit(&self, c: u64, v: usize) -> u32 {
        ((c >> (4 * v)) & 15) as u32
    }

    fn with_digit(&self, c: u64, v: usize, x: u32) -> u64 {
        (c & !(15u64 << (4 * v))) | ((x as u64) << (4 * v))
    }

    fn add_at(&self, c: u64, v: usize, x: u32) -> u64 {
        self.with_digit(c, v, (self.digit(c, v) + x) % self.p)
    }

    /// `(lead, normalized)` with `c = lead * normalized`, or `None` for zero.
    fn normalize(&self, c: u64) -> Option<(u32, u64)> {
        if c == 0 {
            return None;
        }
        let lead_v = (0..self.n).find(|&v| self.digit(c, v) != 0)?;
        let lead = self.digit(c, lead_v);
        if lead == 1 {
            return Some((1, c));
        }
        let s = self.inv[lead as usize];
        let mut out = 0;
        for v in 0..self.n {
            out |= ((self.digit(c, v) * s % self.p) as u64) << (4 * v);
        }
        Some((lead, out))
    }

    fn dense(&self, c: u64) -> usize {
        let mut acc = 0usize;
        for v in (0..self.n).rev() {
            acc = acc * self.p as usize + self.digit(c, v) as usize;
        }
        acc
    }

    fn mask(&self, vars: &[usize]) -> u64 {
        vars.iter().fold(0, |m, &v| m | (15u64 << (4 * v)))
    }
}

/// Reduced product: scalar and sorted normalized factor indices.
type Key = (u32, [u32; MAXD]);

struct Engine {
    ctx: FieldCtx,
    pk: Packed,
    d: usize,
    k: usize,
    constraint: DegreeConstraint,
    monomials: Vec<Monomial>,
    blocks: Vec<Vec<usize>>,
    forms: Vec<u64>,
    dense_index: Vec<u32>,
    trans: Vec<Vec<usize>>,
    tmask: Vec<u64>,
    strides: Vec<usize>,
    red: Vec<Vec<(u32, u32)>>,
    cover: Vec<u128>,
    full: u128,
    maxcover: u32,
    act: Vec<Vec<u16>>,
    degs: Vec<u32>,
    /// Per constrained monomial `i`: masks of the transversals of the other
    /// monomials. `f_i` vanishes iff the sum vanishes modulo each of them.
    others: Vec<Vec<u64>>,
    /// No degree-d term is divisible by a constrained monomial and another
    /// one, so the `others` test is exact.
    fast: bool,
}

impl Engine {
    fn new(space: &SearchSpace) -> Result<Self, SearchError> {
        space.validate()?;
        let p = prime_of(space.ctx)?;
        if p >= 16 {
            return Err(SearchError::Unsupported("exhaustive search supports primes below 16".into()));
        }
        let n = space.nvars;
        let pk = Packed::new(p, n);
        let size = (p as u128).pow(n as u32);
        if size > 1 << 24 {
            return Err(SearchError::Unsupported(format!("GF({p})^{n} is too large for exhaustive search")));
        }
        let monomials = space.monomials()?;
        let blocks: Vec<Vec<usize>> = monomials.iter().map(Monomial::vars).collect();

        let mut forms = Vec::new();
        let mut dense_index = vec![ZERO; size as usize];
        for c in 1..size as u64 {
            // Enumerate base-p vectors and keep the normalized ones.
            let mut code = 0u64;
            let mut x = c;
            for v in 0..n {
                code |= (x % p as u64) << (4 * v);
                x /= p as u64;
            }
            if pk.normalize(code).map(|(l, _)| l) == Some(1) {
                dense_index[pk.dense(code)] = forms.len() as u32;
                forms.push(code);
            }
        }
        if forms.len() > u16::MAX as usize {
            return Err(SearchError::Unsupported("too many linear forms".into()));
        }

        let mut strides = vec![0; blocks.len()];
        let mut ntrans = 1usize;
        for b in (0..blocks.len()).rev() {
            strides[b] = ntrans;
            ntrans *= blocks[b].len();
        }
        if ntrans > 128 {
            return Err(SearchError::Unsupported(format!("{ntrans} transversals; at most 128 are supported")));
        }
        let trans: Vec<Vec<usize>> = (0..ntrans)
            .map(|t| blocks.iter().enumerate().map(|(b, vs)| vs[(t / strides[b]) % vs.len()]).collect())
            .collect();
        let tmask: Vec<u64> = trans.iter().map(|t| pk.mask(t)).collect();

        let mut eng = Engine {
            ctx: space.ctx,
            pk,
            d: space.d as usize,
            k: space.k,
            constraint: space.constraint,
            monomials,
            blocks,
            forms,
            dense_index,
            trans,
            tmask,
            strides,
            red: Vec::new(),
            cover: Vec::new(),
            full: if ntrans == 128 { u128::MAX } else { (1u128 << ntrans) - 1 },
            maxcover: 0,
            act: Vec::new(),
            degs: space.pattern.clone(),
            others: Vec::new(),
            fast: false,
        };
        eng.red = (0..ntrans)
            .map(|t| eng.forms.iter().map(|&f| eng.lookup(f & !eng.tmask[t])).collect())
            .collect();
        eng.cover = (0..eng.forms.len())
            .map(|f| (0..ntrans).filter(|&t| eng.red[t][f].1 == ZERO).fold(0u128, |m, t| m | (1u128 << t)))
            .collect();
        eng.maxcover = eng.cover.iter().map(|c| c.count_ones()).max().unwrap_or(0);
        if space.symmetry {
            eng.act = eng.symmetry_table(space)?;
        }
        let nb = eng.blocks.len();
        eng.fast = (space.k..nb).all(|i| (0..nb).all(|j| j == i || eng.degs[i] + eng.degs[j] > space.d));
        eng.others = (0..nb)
            .map(|i| {
                let mut masks = vec![0u64];
                for (j, vars) in eng.blocks.iter().enumerate() {
                    if j != i {
                        masks = masks
                            .iter()
                            .flat_map(|&m| vars.iter().map(move |&v| m | (15u64 << (4 * v))))
                            .collect();
                    }
                }
                masks
            })
            .collect();
        Ok(eng)
    }

    fn lookup(&self, code: u64) -> (u32, u32) {
        match self.pk.normalize(code) {
            None => (0, ZERO),
            Some((lead, c)) => (lead, self.dense_index[self.pk.dense(c)]),
        }
    }

    fn group_order(&self) -> u64 {
        self.act.len().max(1) as u64
    }

    /// Variable permutations preserving the monomial structure, as an action
    /// table on normalized forms. Falls back to the trivial group when the
    /// table would be too large.
    fn symmetry_table(&self, space: &SearchSpace) -> Result<Vec<Vec<u16>>, SearchError> {
        let n = self.pk.n;
        let used: usize = self.blocks.iter().map(Vec::len).sum();
        let free: Vec<usize> = (used..n).collect();
        // Permutations of same-degree blocks within each class.
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for b in 0..self.blocks.len() {
            let class = b >= space.k;
            match classes
                .iter_mut()
                .find(|c| (c[0] >= space.k) == class && self.blocks[c[0]].len() == self.blocks[b].len())
            {
                Some(c) => c.push(b),
                None => classes.push(vec![b]),
            }
        }
        let order: u128 = self.blocks.iter().map(|b| (1..=b.len() as u128).product::<u128>()).product::<u128>()
            * classes.iter().map(|c| (1..=c.len() as u128).product::<u128>()).product::<u128>()
            * (1..=free.len() as u128).product::<u128>();
        if order * self.forms.len() as u128 > 40_000_000 {
            return Ok(Vec::new());
        }
        // Each component contributes a list of partial assignments v -> image;
        // the group is their cartesian product.
        let mut components: Vec<Vec<Vec<(usize, usize)>>> = Vec::new();
        for c in &classes {
            let mut choices = Vec::new();
            for arrangement in perms_of(c) {
                let mut partial: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
                for (slot, &b) in c.iter().enumerate() {
                    let dst = &self.blocks[arrangement[slot]];
                    let src = &self.blocks[b];
                    let idx: Vec<usize> = (0..src.len()).collect();
                    partial = partial
                        .iter()
                        .flat_map(|pre| {
                            perms_of(&idx).into_iter().map(move |sigma| {
                                let mut out = pre.clone();
                                out.extend(src.iter().enumerate().map(|(t, &v)| (v, dst[sigma[t]])));
                                out
                            })
                        })
                        .collect();
                }
                choices.extend(partial);
            }
            components.push(choices);
        }
        components.push(
            perms_of(&free)
                .into_iter()
                .map(|q| free.iter().copied().zip(q).collect())
                .collect(),
        );
        let mut perms: Vec<Vec<usize>> = vec![(0..n).collect()];
        for comp in &components {
            perms = perms
                .iter()
                .flat_map(|p| {
                    comp.iter().map(move |assign| {
                        let mut out = p.clone();
                        for &(v, w) in assign {
                            out[v] = w;
                        }
                        out
                    })
                })
                .collect();
        }
        let mut seen = HashSet::new();
        perms.retain(|p| seen.insert(p.clone()));
        Ok(perms
            .iter()
            .map(|perm| {
                self.forms
                    .iter()
                    .map(|&f| {
                        let mut g = 0u64;
                        for (v, &to) in perm.iter().enumerate().take(n) {
                            g |= (self.pk.digit(f, v) as u64) << (4 * to);
                        }
                        self.lookup(g).1 as u16
                    })
                    .collect()
            })
            .collect())
    }

    fn key_of(&self, t: usize, factors: &[u32]) -> Option<Key> {
        let mut s = 1u32;
        let mut idx = [0u32; MAXD];
        for (j, &f) in factors.iter().enumerate() {
            let (c, i) = self.red[t][f as usize];
            if i == ZERO {
                return None;
            }
            s = s * c % self.pk.p;
            idx[j] = i;
        }
        idx[..factors.len()].sort_unstable();
        Some((s, idx))
    }

    fn key_of_codes(&self, codes: &[u64], mask: u64) -> Option<Key> {
        let mut s = 1u32;
        let mut idx = [0u32; MAXD];
        for (j, &c) in codes.iter().enumerate() {
            let (lead, i) = self.lookup(c & !mask);
            if i == ZERO {
                return None;
            }
            s = s * lead % self.pk.p;
            idx[j] = i;
        }
        idx[..codes.len()].sort_unstable();
        Some((s, idx))
    }

    /// Whether `sum_i s_i prod_j forms[f_ij]` vanishes modulo the prime of
    /// `mask` (at most two products).
    fn zero_mod(&self, prods: &[(u32, Vec<u32>)], mask: u64) -> bool {
        let key = |(s, f): &(u32, Vec<u32>)| {
            let codes: Vec<u64> = f.iter().map(|&i| self.forms[i as usize]).collect();
            self.key_of_codes(&codes, mask).map(|(c, idx)| (c * s % self.pk.p, idx))
        };
        match prods {
            [a] => key(a).is_none(),
            [a, b] => match (key(a), key(b)) {
                (None, None) => true,
                (Some(x), Some(y)) => x.1 == y.1 && (x.0 + y.0) % self.pk.p == 0,
                _ => false,
            },
            _ => unreachable!("at most two products"),
        }
    }

    /// 0-based constrained indices whose coefficient vanishes.
    fn vanishing(&self, prods: &[(u32, Vec<u32>)]) -> Result<Vec<usize>, SearchError> {
        if self.fast {
            return Ok((self.k..self.blocks.len())
                .filter(|&i| self.others[i].iter().all(|&m| self.zero_mod(prods, m)))
                .collect());
        }
        Ok(self.symbolic(prods)?.vanishing_indices().iter().map(|i| i - 1).collect())
    }

    fn symbolic(&self, prods: &[(u32, Vec<u32>)]) -> Result<SumProductIdentity, SearchError> {
        let products = prods.iter().map(|(s, f)| self.product(*s, f)).collect::<Result<Vec<_>, _>>()?;
        self.identity(products)
    }

    fn in_ideal(&self, factors: &[u32]) -> bool {
        factors.iter().fold(0u128, |m, &f| m | self.cover[f as usize]) == self.full
    }

    fn product(&self, scalar: u32, factors: &[u32]) -> Result<ProductOfLinear, SearchError> {
        let forms = factors
            .iter()
            .map(|&f| self.linear_form(self.forms[f as usize]))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ProductOfLinear::new(self.ctx.from_i64(scalar as i64), forms, self.pk.n)?)
    }

    fn linear_form(&self, code: u64) -> Result<LinearForm, SearchError> {
        let coeffs = (0..self.pk.n).map(|v| self.ctx.from_i64(self.pk.digit(code, v) as i64)).collect();
        Ok(LinearForm::new(self.ctx, coeffs)?)
    }

    /// Builds the identity for `products`; `None` if their sum is outside
    /// the ideal (which the engine never produces).
    fn identity(&self, products: Vec<ProductOfLinear>) -> Result<SumProductIdentity, SearchError> {
        SumProductIdentity::from_products(self.d as u32, self.k, self.constraint, products, self.monomials.clone())?
            .ok_or_else(|| SearchError::Internal("enumerated sum is not in the monomial ideal".into()))
    }

    /// Partners `l2 = s * prod g_j` of `l1` (scalar 1) with `l1 + l2` in the
    /// ideal, given `l1` outside it. Deduplicated, in a fixed order.
    fn partners(&self, factors: &[u32]) -> Vec<(u32, Vec<u32>)> {
        let d = self.d;
        let p = self.pk.p;
        let Some(t0) = (0..self.trans.len()).find(|&t| self.key_of(t, factors).is_some()) else {
            return Vec::new();
        };
        let target: Vec<Option<Key>> = (0..self.trans.len()).map(|t| self.key_of(t, factors)).collect();
        let base: Vec<u64> = factors.iter().map(|&f| self.forms[f as usize] & !self.tmask[t0]).collect();
        let ncoef = (p as usize).pow(d as u32);
        let coef = |mut c: usize| -> [u32; MAXD] {
            let mut out = [0u32; MAXD];
            for x in out.iter_mut().take(d) {
                *x = (c % p as usize) as u32;
                c /= p as usize;
            }
            out
        };
        // Per block: the t_b coefficients of the lifts that survive every
        // transversal differing from t0 in that block only.
        let mut survivors: Vec<Vec<[u32; MAXD]>> = Vec::with_capacity(self.blocks.len());
        for (b, vars) in self.blocks.iter().enumerate() {
            let tb = self.trans[t0][b];
            let pos0 = (t0 / self.strides[b]) % vars.len();
            let mut keep = Vec::new();
            for ci in 0..ncoef {
                let c = coef(ci);
                let ok = (0..vars.len()).filter(|&pos| pos != pos0).all(|pos| {
                    let t1 = t0 - pos0 * self.strides[b] + pos * self.strides[b];
                    let codes: Vec<u64> = (0..d).map(|j| self.pk.add_at(base[j], tb, c[j])).collect();
                    self.key_of_codes(&codes, self.tmask[t1]) == target[t1]
                });
                if ok {
                    keep.push(c);
                }
            }
            survivors.push(keep);
        }
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        let mut choice = vec![0usize; self.blocks.len()];
        if survivors.iter().any(Vec::is_empty) {
            return out;
        }
        loop {
            let mut codes = base.clone();
            for (b, &ci) in choice.iter().enumerate() {
                let tb = self.trans[t0][b];
                for (j, code) in codes.iter_mut().enumerate() {
                    *code = self.pk.add_at(*code, tb, survivors[b][ci][j]);
                }
            }
            let all = (0..self.trans.len()).all(|t| self.key_of_codes(&codes, self.tmask[t]) == target[t]);
            if all {
                // l2 = -prod g_j
                let mut s = p - 1;
                let mut idx = Vec::with_capacity(d);
                for &c in &codes {
                    let (lead, i) = self.lookup(c);
                    s = s * lead % p;
                    idx.push(i);
                }
                idx.sort_unstable();
                if seen.insert((s, idx.clone())) {
                    out.push((s, idx));
                }
            }
            // Odometer over survivor choices.
            let mut b = 0;
            loop {
                if b == choice.len() {
                    return out;
                }
                choice[b] += 1;
                if choice[b] < survivors[b].len() {
                    break;
                }
                choice[b] = 0;
                b += 1;
            }
        }
    }
}

fn perms_of(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in perms_of(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

#[derive(Debug, Default)]
struct Tally {
    nodes: u64,
    instances: u64,
    ideal_checked: u64,
    ideal_failures: u64,
    counterexamples: Vec<IdentityJson>,
    tail: TailCheck,
    stopped: bool,
}

impl Tally {
    fn merge(&mut self, o: Tally) {
        self.nodes += o.nodes;
        self.instances += o.instances;
        self.ideal_checked += o.ideal_checked;
        self.ideal_failures += o.ideal_failures;
        self.counterexamples.extend(o.counterexamples);
        self.tail.applicable += o.tail.applicable;
        self.tail.violations += o.tail.violations;
        self.stopped |= o.stopped;
    }
}

/// Checks one instance in the ideal. Counterexamples are confirmed on the
/// symbolic identity before they are recorded.
fn examine(eng: &Engine, prods: &[(u32, Vec<u32>)], tally: &mut Tally) -> Result<(), SearchError> {
    tally.instances += 1;
    let van = eng.vanishing(prods)?;
    if cfg!(test) && eng.fast {
        let sym: Vec<usize> = eng.symbolic(prods)?.vanishing_indices().iter().map(|i| i - 1).collect();
        assert_eq!(van, sym, "fast vanishing test disagrees with the symbolic identity");
    }
    if prods.len() == 1 {
        tail_check(eng, &van, &mut tally.tail);
    }
    let n = eng.blocks.len() - eng.k;
    if van.len() < n - prods.len() {
        let inst = eng.symbolic(prods)?;
        match check_property_instance(&inst)? {
            Verdict::Counterexample(c) => tally.counterexamples.push(c.to_json()),
            Verdict::Satisfies => return Err(SearchError::Internal("counterexample did not replay".into())),
        }
    }
    Ok(())
}

/// Among monomials of degree at least `deg x_{n-1}`, some coefficient
/// vanishes, whenever `deg x_1 + deg x_{n-1} >= d + 1` and `n >= 3`.
fn tail_check(eng: &Engine, van: &[usize], tail: &mut TailCheck) {
    let degs = &eng.degs;
    let n = degs.len();
    if n < 3 || degs[0] + degs[n - 2] < eng.d as u32 + 1 {
        return;
    }
    tail.applicable += 1;
    if !van.iter().any(|&i| degs[i] >= degs[n - 2]) {
        tail.violations += 1;
    }
}

/// Callback receiving every examined instance (tests use it to compare
/// against brute force).
type Sink<'a> = &'a mut dyn FnMut(&[(u32, Vec<u32>)]);

struct Dfs<'a> {
    eng: &'a Engine,
    m: usize,
    budget: &'a AtomicU64,
    ceiling: u64,
    stop: &'a AtomicBool,
}

impl Dfs<'_> {
    #[allow(clippy::too_many_arguments)]
    fn walk(
        &self,
        factors: &mut Vec<u32>,
        cand: &[u32],
        group: &[usize],
        covered: u128,
        tally: &mut Tally,
        sink: &mut Option<Sink<'_>>,
    ) -> Result<(), SearchError> {
        if self.stop.load(Ordering::Relaxed) {
            tally.stopped = true;
            return Ok(());
        }
        tally.nodes += 1;
        if self.budget.fetch_add(1, Ordering::Relaxed) >= self.ceiling {
            self.stop.store(true, Ordering::Relaxed);
            tally.stopped = true;
            return Ok(());
        }
        let eng = self.eng;
        if factors.len() == eng.d {
            return self.leaf(factors, tally, sink);
        }
        let remaining = (eng.d - factors.len() - 1) as u32;
        // Orbit minima under the current stabilizer.
        let om: Option<HashMap<u32, u32>> = (group.len() > 1).then(|| {
            cand.iter()
                .map(|&f| (f, group.iter().map(|&g| eng.act[g][f as usize] as u32).min().unwrap_or(f)))
                .collect()
        });
        for (pos, &f) in cand.iter().enumerate() {
            if let Some(om) = &om {
                if om[&f] != f {
                    continue;
                }
            }
            let cov = covered | eng.cover[f as usize];
            if self.m == 1 && ((eng.full & !cov).count_ones() > remaining * eng.maxcover) {
                continue;
            }
            let next: Vec<u32> = match &om {
                Some(om) => cand[pos..].iter().copied().filter(|g| om[g] >= f).collect(),
                None => cand[pos..].to_vec(),
            };
            let sub: Vec<usize> = if group.len() > 1 {
                group.iter().copied().filter(|&g| eng.act[g][f as usize] as u32 == f).collect()
            } else {
                group.to_vec()
            };
            factors.push(f);
            self.walk(factors, &next, &sub, cov, tally, sink)?;
            factors.pop();
        }
        Ok(())
    }

    fn leaf(&self, factors: &[u32], tally: &mut Tally, sink: &mut Option<Sink<'_>>) -> Result<(), SearchError> {
        let eng = self.eng;
        let inside = eng.in_ideal(factors);
        let l1 = (1, factors.to_vec());
        if self.m == 1 {
            if inside {
                if let Some(s) = sink {
                    s(std::slice::from_ref(&l1));
                }
                examine(eng, &[l1], tally)?;
            }
            return Ok(());
        }
        if inside {
            // Covered through the single-product statement.
            tally.ideal_checked += 1;
            let n = eng.blocks.len() - eng.k;
            if eng.vanishing(&[l1])?.len() + 1 < n {
                tally.ideal_failures += 1;
            }
            return Ok(());
        }
        for l2 in eng.partners(factors) {
            let pair = [l1.clone(), l2];
            if let Some(sk) = sink {
                sk(&pair);
            }
            examine(eng, &pair, tally)?;
        }
        Ok(())
    }
}

fn label(space: &SearchSpace) -> String {
    format!("evidence over {}", space.ctx)
}

fn empty_report(space: &SearchSpace, group_order: u64) -> SearchReport {
    SearchReport {
        schema: REPORT_SCHEMA.into(),
        field: space.ctx.tag(),
        nvars: space.nvars,
        d: space.d,
        m: space.m,
        k: space.k,
        n: space.n(),
        pattern: space.pattern.clone(),
        constraint: space.constraint,
        mode: space.mode,
        seed: match space.mode {
            Mode::Randomized { seed, .. } => Some(seed),
            Mode::Exhaustive => None,
        },
        partition: space.partition,
        symmetry_group_order: group_order,
        partitions: 0,
        nodes: 0,
        instances_examined: 0,
        ideal_products_checked: 0,
        ideal_product_failures: 0,
        counterexamples: Vec::new(),
        tail_check: TailCheck::default(),
        complete: true,
        wall_clock_ms: 0,
        label: label(space),
    }
}

fn finish(mut report: SearchReport, tally: Tally, start: Instant) -> SearchReport {
    report.nodes = tally.nodes;
    report.instances_examined = tally.instances;
    report.ideal_products_checked = tally.ideal_checked;
    report.ideal_product_failures = tally.ideal_failures;
    report.counterexamples = tally.counterexamples;
    report.tail_check = tally.tail;
    report.complete = !tally.stopped && tally.ideal_failures == 0 && report.partition.is_none();
    report.wall_clock_ms = start.elapsed().as_millis();
    report
}

/// Runs the space in the given mode. Exhaustive reports are identical for
/// every worker count; randomized ones depend only on `(seed, trials)`.
pub fn hunt_counterexamples(space: &SearchSpace, exec: Exec) -> Result<SearchReport, SearchError> {
    hunt_with_sink(space, exec, None)
}

fn hunt_with_sink(space: &SearchSpace, exec: Exec, mut sink: Option<Sink<'_>>) -> Result<SearchReport, SearchError> {
    let start = Instant::now();
    if space.m > 2 {
        return Err(SearchError::Unsupported("the search handles m = 1 and m = 2".into()));
    }
    let eng = Engine::new(space)?;
    let mut report = empty_report(space, eng.group_order());
    let budget = AtomicU64::new(0);
    let stop = AtomicBool::new(false);
    let ceiling = match space.mode {
        Mode::Exhaustive => space.ceiling,
        Mode::Randomized { .. } => u64::MAX,
    };
    let dfs = Dfs {
        eng: &eng,
        m: space.m,
        budget: &budget,
        ceiling,
        stop: &stop,
    };
    let all: Vec<u32> = (0..eng.forms.len() as u32).collect();
    let group: Vec<usize> = (0..eng.act.len()).collect();
    match space.mode {
        Mode::Exhaustive => {
            // Root branches: first factors that are minimal in their orbit.
            let roots: Vec<(usize, u32)> = all
                .iter()
                .copied()
                .filter(|&f| group.iter().all(|&g| eng.act[g][f as usize] as u32 >= f))
                .enumerate()
                .filter(|(i, _)| space.partition.is_none_or(|p| i % p.count == p.slot))
                .collect();
            report.partitions = roots.len();
            let run_root = |f: u32, sink: &mut Option<Sink<'_>>| -> Result<Tally, SearchError> {
                let mut tally = Tally::default();
                let mut factors = vec![f];
                let om_ok: Vec<u32> = if group.len() > 1 {
                    all[f as usize..]
                        .iter()
                        .copied()
                        .filter(|&g| group.iter().map(|&h| eng.act[h][g as usize] as u32).min().unwrap_or(g) >= f)
                        .collect()
                } else {
                    all[f as usize..].to_vec()
                };
                let sub: Vec<usize> = group.iter().copied().filter(|&g| eng.act[g][f as usize] as u32 == f).collect();
                let cov = eng.cover[f as usize];
                let remaining = (eng.d - 1) as u32;
                if space.m == 1 && (eng.full & !cov).count_ones() > remaining * eng.maxcover {
                    return Ok(tally);
                }
                tally.nodes += 1;
                dfs.walk(&mut factors, &om_ok, &sub, cov, &mut tally, sink)?;
                Ok(tally)
            };
            let mut total = Tally::default();
            if sink.is_some() {
                for &(_, f) in &roots {
                    total.merge(run_root(f, &mut sink)?);
                }
            } else {
                let results = exec.map(roots.iter().map(|&(_, f)| f).collect(), |f| run_root(f, &mut None));
                for r in results {
                    total.merge(r?);
                }
            }
            Ok(finish(report, total, start))
        }
        Mode::Randomized { seed, trials } => {
            const CHUNK: u64 = 256;
            let chunks: Vec<u64> = (0..trials.div_ceil(CHUNK)).collect();
            report.partitions = chunks.len();
            let run_chunk = |c: u64| -> Result<Tally, SearchError> {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(c);
                let mut tally = Tally::default();
                let coverers: Vec<u32> = all.iter().copied().filter(|&f| eng.cover[f as usize] != 0).collect();
                for _ in 0..CHUNK.min(trials - c * CHUNK) {
                    tally.nodes += 1;
                    let mut factors: Vec<u32> = (0..eng.d)
                        .map(|_| {
                            if space.m == 1 && !coverers.is_empty() && rng.random_bool(0.5) {
                                *coverers.choose(&mut rng).expect("nonempty")
                            } else {
                                rng.random_range(0..eng.forms.len() as u32)
                            }
                        })
                        .collect();
                    factors.sort_unstable();
                    dfs.leaf(&factors, &mut tally, &mut None)?;
                }
                Ok(tally)
            };
            let mut total = Tally::default();
            for r in exec.map(chunks, run_chunk) {
                total.merge(r?);
            }
            Ok(finish(report, total, start))
        }
    }
}

// ---------------------------------------------------------------------------
// Splitting violations

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Some row has a vanishing factor.
    ZeroRow,
    /// Rows grouped into mirrored pairs (and one shared-factor triple for
    /// odd `r`); includes the injected sharp witness.
    Sharp,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyCounts {
    pub samples: u64,
    pub sampler_failures: u64,
    pub non_one_split: u64,
    pub non_two_split: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SplitViolation {
    pub family: Family,
    pub min_lambda: usize,
    pub plane: PlaneJson,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SplitReport {
    pub schema: String,
    pub r: usize,
    pub d: usize,
    pub k: usize,
    pub field: String,
    pub seed: u64,
    pub trials: u64,
    pub one_split_status: Status,
    pub two_split_status: Status,
    pub zero_row: FamilyCounts,
    pub sharp: FamilyCounts,
    pub injected_witness: bool,
    pub violations: Vec<SplitViolation>,
    pub wall_clock_ms: u128,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitHunt {
    pub r: usize,
    pub d: usize,
    pub k: usize,
    pub ctx: FieldCtx,
    pub trials: u64,
    pub seed: u64,
    /// Add `sharp_witness(r, d)` (or random subspaces of it) to the stream.
    pub inject_witness: bool,
}

fn random_vec(ctx: FieldCtx, p: u32, rng: &mut ChaCha8Rng, len: usize) -> Vec<FieldElement> {
    (0..len).map(|_| ctx.from_i64(rng.random_range(0..p) as i64)).collect()
}

fn random_unit(ctx: FieldCtx, p: u32, rng: &mut ChaCha8Rng) -> FieldElement {
    ctx.from_i64(rng.random_range(1..p) as i64)
}

/// A random plane from the structured families, as columns `y_ij` in
/// `GF(p)^(k+1)`; `None` when the draw is rank deficient.
fn structured_plane(h: &SplitHunt, p: u32, rng: &mut ChaCha8Rng, sharp: bool) -> Result<Option<KPlane>, SearchError> {
    let (r, d, kk, ctx) = (h.r, h.d, h.k + 1, h.ctx);
    let params = HypersurfaceParams::new(r, d)?;
    let mut cols: Vec<Vec<FieldElement>> = vec![vec![ctx.zero(); kk]; r * d];
    let mut rows: Vec<usize> = (0..r).collect();
    rows.shuffle(rng);
    let npairs = if sharp { r / 2 } else { rng.random_range(0..=(r - 1) / 2) };
    let triple = sharp && r % 2 == 1;
    let mut it = rows.into_iter();
    let pairs: Vec<(usize, usize)> = (0..npairs - usize::from(triple))
        .map(|_| (it.next().expect("row"), it.next().expect("row")))
        .collect();
    for (a, b) in pairs {
        // y_bj = c_j y_a(sigma j) with prod c_j = -1.
        let mut sigma: Vec<usize> = (0..d).collect();
        sigma.shuffle(rng);
        let mut cs: Vec<FieldElement> = (0..d - 1).map(|_| random_unit(ctx, p, rng)).collect();
        let prod = cs.iter().fold(ctx.one(), |acc, c| &acc * c);
        cs.push((-ctx.one()).checked_div(&prod).expect("nonzero"));
        for j in 0..d {
            cols[params.col(a, j)] = random_vec(ctx, p, rng, kk);
        }
        for j in 0..d {
            cols[params.col(b, j)] = cols[params.col(a, sigma[j])].iter().map(|x| x * &cs[j]).collect();
        }
    }
    if triple {
        // Shared factors u_j; first factors chosen so that the three
        // products cancel.
        let (a, b, c) = (it.next().expect("row"), it.next().expect("row"), it.next().expect("row"));
        let scal: Vec<Vec<FieldElement>> = (0..3).map(|_| (1..d).map(|_| random_unit(ctx, p, rng)).collect()).collect();
        let prods: Vec<FieldElement> = scal.iter().map(|s| s.iter().fold(ctx.one(), |acc, x| &acc * x)).collect();
        for j in 1..d {
            let u = random_vec(ctx, p, rng, kk);
            for (t, &row) in [a, b, c].iter().enumerate() {
                cols[params.col(row, j)] = u.iter().map(|x| x * &scal[t][j - 1]).collect();
            }
        }
        let w1 = random_vec(ctx, p, rng, kk);
        let w2 = random_vec(ctx, p, rng, kk);
        let inv_c = prods[2].inv().expect("nonzero");
        let w3: Vec<FieldElement> = w1
            .iter()
            .zip(&w2)
            .map(|(x, y)| -&(&(&(x * &prods[0]) + &(y * &prods[1])) * &inv_c))
            .collect();
        cols[params.col(a, 0)] = w1;
        cols[params.col(b, 0)] = w2;
        cols[params.col(c, 0)] = w3;
    }
    for row in it {
        let zero_j = rng.random_range(0..d);
        for j in 0..d {
            if j != zero_j {
                cols[params.col(row, j)] = random_vec(ctx, p, rng, kk);
            }
        }
    }
    let b = Matrix::new(ctx, kk, cols).map_err(PlaneError::from)?.transpose();
    match KPlane::new(params, b) {
        Ok(l) => Ok(Some(l)),
        Err(PlaneError::RankDeficient { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// A member plane of `X_{r,d}` from the structured families, drawn from a
/// seeded stream; `None` after a few rank-deficient draws. `sharp` pairs up
/// the rows instead of planting vanishing factors.
pub fn sample_member_plane(ctx: FieldCtx, r: usize, d: usize, k: usize, sharp: bool, seed: u64) -> Result<Option<KPlane>, SearchError> {
    let p = prime_of(ctx)?;
    let h = SplitHunt {
        r,
        d,
        k,
        ctx,
        trials: 1,
        seed,
        inject_witness: false,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..8 {
        if let Some(l) = structured_plane(&h, p, &mut rng, sharp)? {
            return Ok(Some(l));
        }
    }
    Ok(None)
}

/// A random `k`-dimensional subspace of the sharp witness.
fn witness_subplane(h: &SplitHunt, p: u32, rng: &mut ChaCha8Rng) -> Result<Option<KPlane>, SearchError> {
    let w = sharp_witness(h.ctx, h.r, h.d)?;
    let dim = w.k() + 1;
    if h.k + 1 > dim {
        return Ok(None);
    }
    let g = Matrix::new(h.ctx, dim, (0..h.k + 1).map(|_| random_vec(h.ctx, p, rng, dim)).collect()).map_err(PlaneError::from)?;
    if g.rank() < h.k + 1 {
        return Ok(None);
    }
    let b = g.mul(w.matrix()).map_err(PlaneError::from)?;
    Ok(Some(KPlane::new(w.params(), b)?))
}

/// Samples structured member planes of `X_{r,d}` and flags those whose
/// splitting contradicts the known or conjectured status at `k`.
pub fn hunt_split_violations(h: &SplitHunt, exec: Exec) -> Result<SplitReport, SearchError> {
    let start = Instant::now();
    let p = prime_of(h.ctx)?;
    let status = splitting_status(h.r, h.d, h.k)?;
    const CHUNK: u64 = 64;
    const ATTEMPTS: usize = 8;
    let chunks: Vec<u64> = (0..h.trials.div_ceil(CHUNK)).collect();
    type Outcome = (Family, Option<usize>, Option<KPlane>);
    let run = |c: u64| -> Result<Vec<Outcome>, SearchError> {
        let mut rng = ChaCha8Rng::seed_from_u64(h.seed);
        rng.set_stream(c);
        let mut out = Vec::new();
        for t in 0..CHUNK.min(h.trials - c * CHUNK) {
            let index = c * CHUNK + t;
            let inject = h.inject_witness && index.is_multiple_of(4);
            let sharp = inject || rng.random_bool(0.5);
            let family = if sharp { Family::Sharp } else { Family::ZeroRow };
            let mut plane = None;
            for _ in 0..ATTEMPTS {
                plane = if inject {
                    witness_subplane(h, p, &mut rng)?
                } else {
                    structured_plane(h, p, &mut rng, sharp)?
                };
                if plane.is_some() {
                    break;
                }
            }
            match plane {
                Some(l) => {
                    let lam = min_splitting(&l)?;
                    out.push((family, Some(lam), Some(l)));
                }
                None => out.push((family, None, None)),
            }
        }
        Ok(out)
    };
    let mut report = SplitReport {
        schema: SPLIT_REPORT_SCHEMA.into(),
        r: h.r,
        d: h.d,
        k: h.k,
        field: h.ctx.tag(),
        seed: h.seed,
        trials: h.trials,
        one_split_status: status.one_split,
        two_split_status: status.two_split,
        zero_row: FamilyCounts::default(),
        sharp: FamilyCounts::default(),
        injected_witness: h.inject_witness,
        violations: Vec::new(),
        wall_clock_ms: 0,
        label: format!("evidence over {}", h.ctx),
    };
    for chunk in exec.map(chunks, run) {
        for (family, lam, plane) in chunk? {
            let counts = match family {
                Family::ZeroRow => &mut report.zero_row,
                Family::Sharp => &mut report.sharp,
            };
            let Some(lam) = lam else {
                counts.sampler_failures += 1;
                continue;
            };
            counts.samples += 1;
            counts.non_one_split += u64::from(lam > 1);
            counts.non_two_split += u64::from(lam > 2);
            let violates = (lam > 1 && status.one_split.is_yes()) || (lam > 2 && status.two_split.is_yes());
            if violates {
                report.violations.push(SplitViolation {
                    family,
                    min_lambda: lam,
                    plane: plane.expect("sampled").to_json(),
                });
            }
        }
    }
    report.wall_clock_ms = start.elapsed().as_millis();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multipoly::MultiPoly;
    use std::collections::BTreeSet;

    fn gf(p: u64) -> FieldCtx {
        FieldCtx::prime(p).unwrap()
    }

    #[test]
    fn product_counts() {
        let count = |p, n, d| enumerate_products(gf(p), n, d, 1, DEFAULT_CEILING).unwrap().count();
        assert_eq!(count(2, 2, 1), 3);
        assert_eq!(count(2, 2, 2), 6);
        assert_eq!(count(3, 2, 1), 8);
        // Pairs: multisets of size 2 from 3 products.
        assert_eq!(enumerate_products(gf(2), 2, 1, 2, DEFAULT_CEILING).unwrap().count(), 6);
        assert!(matches!(
            enumerate_products(gf(2), 8, 3, 2, 1000),
            Err(SearchError::CeilingExceeded { .. })
        ));
    }

    #[test]
    fn products_are_distinct() {
        let all: Vec<MultiPoly> = enumerate_products(gf(3), 2, 2, 1, DEFAULT_CEILING)
            .unwrap()
            .map(|t| t[0].expand())
            .collect();
        let set: BTreeSet<String> = all.iter().map(|p| p.to_string()).collect();
        assert_eq!(set.len(), all.len());
    }

    /// Canonical `(scalar, sorted factor codes)` of a product, comparable
    /// between the engine and brute force.
    fn canon(p: &ProductOfLinear) -> (String, Vec<String>) {
        let mut f: Vec<String> = p.factors().iter().map(|l| l.to_string()).collect();
        f.sort();
        (p.scalar().to_string(), f)
    }

    fn in_ideal(sum: &MultiPoly, monomials: &[Monomial]) -> bool {
        let exps: Vec<_> = monomials.iter().map(Monomial::exponent).collect();
        sum.terms().all(|(e, _)| exps.iter().any(|x| x.divides(e)))
    }

    /// Ordered pairs `(l1, l2)` with `l1` of scalar 1, both outside the
    /// ideal, sum inside: brute force versus the engine.
    fn compare_pairs(space: &SearchSpace) {
        let mut sp = space.clone();
        sp.symmetry = false;
        let eng = Engine::new(&sp).unwrap();
        let mut got = BTreeSet::new();
        let mut sink = |inst: &[(u32, Vec<u32>)]| {
            let a = eng.product(inst[0].0, &inst[0].1).unwrap();
            let b = eng.product(inst[1].0, &inst[1].1).unwrap();
            got.insert((canon(&a), canon(&b)));
        };
        hunt_with_sink(&sp, Exec::Sequential, Some(&mut sink)).unwrap();
        let mons = sp.monomials().unwrap();
        let mut want = BTreeSet::new();
        for t in enumerate_products(sp.ctx, sp.nvars, sp.d as usize, 2, DEFAULT_CEILING).unwrap() {
            let (a, b) = (&t[0], &t[1]);
            if in_ideal(&a.expand(), &mons) || !in_ideal(&(&a.expand() + &b.expand()), &mons) {
                continue;
            }
            for (x, y) in [(a, b), (b, a)] {
                let s = x.scalar().inv().unwrap();
                let x1 = x.scaled(&s).unwrap();
                let y1 = y.scaled(&s).unwrap();
                want.insert((canon(&x1), canon(&y1)));
            }
        }
        assert_eq!(got, want);
    }

    #[test]
    fn pair_lifting_matches_brute_force() {
        compare_pairs(&SearchSpace::new(gf(2), 2, 2, 0, vec![1, 2, 2], DegreeConstraint::Relaxed));
        compare_pairs(&SearchSpace::new(gf(3), 1, 2, 0, vec![1, 1, 1], DegreeConstraint::Relaxed));
        let mut extra = SearchSpace::new(gf(2), 1, 2, 0, vec![1, 1, 1], DegreeConstraint::Relaxed);
        extra.nvars = 4;
        compare_pairs(&extra);
    }

    #[test]
    fn single_products_match_brute_force() {
        for (p, d, pat) in [(2, 3, vec![2, 2]), (3, 2, vec![1, 2]), (2, 3, vec![1, 3])] {
            let mut sp = SearchSpace::new(gf(p), d, 1, 0, pat, DegreeConstraint::Relaxed);
            sp.symmetry = false;
            let eng = Engine::new(&sp).unwrap();
            let mut got = BTreeSet::new();
            let mut sink = |inst: &[(u32, Vec<u32>)]| {
                got.insert(canon(&eng.product(inst[0].0, &inst[0].1).unwrap()));
            };
            hunt_with_sink(&sp, Exec::Sequential, Some(&mut sink)).unwrap();
            let mons = sp.monomials().unwrap();
            let want: BTreeSet<_> = enumerate_products(sp.ctx, sp.nvars, d as usize, 1, DEFAULT_CEILING)
                .unwrap()
                .filter(|t| t[0].scalar().is_one() && in_ideal(&t[0].expand(), &mons))
                .map(|t| canon(&t[0]))
                .collect();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn symmetry_keeps_verdicts() {
        for (d, m, pat, c) in [
            (3, 1, vec![2, 2], DegreeConstraint::Relaxed),
            (3, 1, vec![2, 3], DegreeConstraint::Strict),
            (2, 2, vec![1, 2, 2], DegreeConstraint::Relaxed),
        ] {
            let mut sp = SearchSpace::new(gf(2), d, m, 0, pat, c);
            let with = hunt_counterexamples(&sp, Exec::Sequential).unwrap();
            sp.symmetry = false;
            let without = hunt_counterexamples(&sp, Exec::Sequential).unwrap();
            assert_eq!(with.counterexamples.is_empty(), without.counterexamples.is_empty());
            assert!(with.instances_examined <= without.instances_examined);
            assert!(with.symmetry_group_order > 1);
        }
    }

    #[test]
    fn relaxed_boundary_has_counterexamples() {
        let sp = SearchSpace::new(gf(2), 3, 1, 0, vec![2, 2], DegreeConstraint::Relaxed);
        let rep = hunt_counterexamples(&sp, Exec::Sequential).unwrap();
        assert!(!rep.counterexamples.is_empty());
        for c in &rep.counterexamples {
            let inst = SumProductIdentity::from_json(c).unwrap();
            assert!(matches!(check_property_instance(&inst).unwrap(), Verdict::Counterexample(_)));
        }
    }

    #[test]
    fn strict_small_runs_are_empty() {
        for (d, m, pat) in [(3, 1, vec![3, 3]), (3, 1, vec![2, 3, 3]), (3, 2, vec![2, 3, 3])] {
            let sp = SearchSpace::new(gf(2), d, m, 0, pat, DegreeConstraint::Strict);
            let rep = hunt_counterexamples(&sp, Exec::default()).unwrap();
            assert!(rep.complete);
            assert!(rep.counterexamples.is_empty(), "{:?}", rep.pattern);
            assert_eq!(rep.tail_check.violations, 0);
        }
    }

    #[test]
    fn reports_do_not_depend_on_workers() {
        let sp = SearchSpace::new(gf(2), 3, 1, 0, vec![2, 2], DegreeConstraint::Relaxed);
        let mut a = hunt_counterexamples(&sp, Exec::Sequential).unwrap();
        let mut b = hunt_counterexamples(&sp, Exec::Parallel { jobs: 3 }).unwrap();
        a.wall_clock_ms = 0;
        b.wall_clock_ms = 0;
        assert_eq!(a, b);
        let mut r = sp.clone();
        r.mode = Mode::Randomized { seed: 7, trials: 600 };
        let mut a = hunt_counterexamples(&r, Exec::Sequential).unwrap();
        let mut b = hunt_counterexamples(&r, Exec::Parallel { jobs: 2 }).unwrap();
        a.wall_clock_ms = 0;
        b.wall_clock_ms = 0;
        assert_eq!(a, b);
        assert!(a.instances_examined > 0);
    }

    #[test]
    fn ceiling_flags_incomplete() {
        let mut sp = SearchSpace::new(gf(2), 3, 1, 0, vec![3, 3], DegreeConstraint::Strict);
        sp.ceiling = 1;
        assert!(!hunt_counterexamples(&sp, Exec::Sequential).unwrap().complete);
    }

    #[test]
    fn invalid_spaces() {
        let bad = SearchSpace::new(gf(2), 3, 1, 0, vec![2, 2], DegreeConstraint::Strict);
        assert!(hunt_counterexamples(&bad, Exec::Sequential).is_err());
        let q = SearchSpace::new(FieldCtx::rationals(), 3, 1, 0, vec![3, 3], DegreeConstraint::Strict);
        assert!(q.validate().is_err());
        let small = SearchSpace::new(gf(2), 3, 2, 0, vec![3, 3], DegreeConstraint::Strict);
        assert!(small.validate().is_err());
    }

    #[test]
    fn split_hunt_examples() {
        let base = SplitHunt {
            r: 4,
            d: 3,
            k: 6,
            ctx: gf(5),
            trials: 40,
            seed: 1,
            inject_witness: false,
        };
        let rep = hunt_split_violations(&base, Exec::default()).unwrap();
        assert!(rep.violations.is_empty());
        assert!(rep.zero_row.samples > 0);

        let inj = SplitHunt { k: 5, inject_witness: true, ..base };
        let rep = hunt_split_violations(&inj, Exec::default()).unwrap();
        assert!(rep.violations.is_empty());
        assert_eq!(rep.zero_row.non_one_split, 0);
        assert!(rep.sharp.non_one_split > 0);
        assert_eq!(rep.sharp.non_two_split + rep.zero_row.non_two_split, 0);

        let three = SplitHunt { r: 3, k: 4, ..base };
        let rep = hunt_split_violations(&three, Exec::default()).unwrap();
        assert!(rep.violations.is_empty());
    }

    #[test]
    fn odd_sharp_family_is_not_one_split() {
        let h = SplitHunt {
            r: 5,
            d: 3,
            k: 4,
            ctx: gf(7),
            trials: 30,
            seed: 3,
            inject_witness: true,
        };
        let rep = hunt_split_violations(&h, Exec::Sequential).unwrap();
        assert!(rep.sharp.non_one_split > 0);
        assert!(rep.violations.is_empty());
    }
}
