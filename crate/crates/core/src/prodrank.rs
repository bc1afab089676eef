//! Product rank lower bounds: decomposition checking, covering families of
//! linear spaces, the splitting-based exclusion rule, and replayable
//! certificates for the determinant, Pfaffian and permanent examples.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::census::{one_split_status, splitting_status, CensusError, Provenance, Status};
use crate::exec::Exec;
use crate::field::{FieldCtx, FieldElement, FieldError};
use crate::identity::ProductJson;
use crate::linalg::{LinalgError, Matrix};
use crate::multipoly::{Exponent, LinearForm, MultiPoly, PolyError, PolyJson, ProductOfLinear};

pub const CERT_SCHEMA: &str = "sumprod.certificate/1";
pub const DECOMPOSITION_SCHEMA: &str = "sumprod.decomposition/1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RankError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Census(#[from] CensusError),
    #[error("unknown target `{0}`")]
    UnknownTarget(String),
    #[error("sample point is nonsingular")]
    NonsingularPoint,
    #[error("decomposition mismatch: {0}")]
    Mismatch(String),
    #[error("check `{label}` failed: {detail}")]
    CheckFailed { label: String, detail: String },
    #[error("malformed input: {0}")]
    Json(String),
}

/// The named forms whose product rank is studied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Det3,
    Det4,
    Pf6,
    Perm4,
}

impl Target {
    pub fn parse(s: &str) -> Result<Target, RankError> {
        match s.to_ascii_lowercase().as_str() {
            "det3" => Ok(Target::Det3),
            "det4" => Ok(Target::Det4),
            "pf6" | "pfaffian6" => Ok(Target::Pf6),
            "perm4" => Ok(Target::Perm4),
            _ => Err(RankError::UnknownTarget(s.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Target::Det3 => "det3",
            Target::Det4 => "det4",
            Target::Pf6 => "pf6",
            Target::Perm4 => "perm4",
        }
    }

    pub fn degree(&self) -> usize {
        match self {
            Target::Det3 | Target::Pf6 => 3,
            Target::Det4 | Target::Perm4 => 4,
        }
    }

    pub fn nvars(&self) -> usize {
        match self {
            Target::Det3 => 9,
            Target::Det4 | Target::Perm4 => 16,
            Target::Pf6 => 15,
        }
    }

    pub fn poly(&self, ctx: FieldCtx) -> MultiPoly {
        match self {
            Target::Det3 => det_poly(ctx, 3),
            Target::Det4 => det_poly(ctx, 4),
            Target::Pf6 => pfaffian_poly(ctx, 6),
            Target::Perm4 => perm_poly(ctx, 4),
        }
    }

    pub fn var_names(&self) -> Vec<String> {
        match self {
            Target::Det3 => matrix_names(3),
            Target::Det4 | Target::Perm4 => matrix_names(4),
            Target::Pf6 => skew_names(6),
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `z11, z12, ...` with entry `(i, j)` at index `i * n + j`.
pub fn matrix_names(n: usize) -> Vec<String> {
    (0..n * n).map(|v| format!("z{}{}", v / n + 1, v % n + 1)).collect()
}

/// `p12, p13, ...` for the strict upper triangle, in row order.
pub fn skew_names(n: usize) -> Vec<String> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            out.push(format!("p{}{}", i + 1, j + 1));
        }
    }
    out
}

/// Index of `p_ij` (`i < j`) in [`skew_names`] order.
pub fn skew_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

fn permutations(n: usize) -> Vec<(Vec<usize>, bool)> {
    // Heap's algorithm; each swap flips the sign.
    let mut out = Vec::new();
    let mut a: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    let mut even = true;
    out.push((a.clone(), even));
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            even = !even;
            out.push((a.clone(), even));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

fn leibniz(ctx: FieldCtx, n: usize, signed: bool) -> MultiPoly {
    let nv = n * n;
    let terms = permutations(n).into_iter().map(|(p, even)| {
        let mut e = vec![0u32; nv];
        for (i, &j) in p.iter().enumerate() {
            e[i * n + j] = 1;
        }
        let c = if signed && !even { -ctx.one() } else { ctx.one() };
        (e, c)
    });
    MultiPoly::from_terms(ctx, nv, terms).expect("consistent arity")
}

pub fn det_poly(ctx: FieldCtx, n: usize) -> MultiPoly {
    leibniz(ctx, n, true)
}

pub fn perm_poly(ctx: FieldCtx, n: usize) -> MultiPoly {
    leibniz(ctx, n, false)
}

/// Pfaffian of the generic `n x n` skew matrix, `n` even.
pub fn pfaffian_poly(ctx: FieldCtx, n: usize) -> MultiPoly {
    assert!(n.is_multiple_of(2), "Pfaffian needs even size");
    let nv = n * (n - 1) / 2;
    fn rec(ctx: FieldCtx, n: usize, nv: usize, idx: &[usize]) -> MultiPoly {
        if idx.is_empty() {
            return MultiPoly::one(ctx, nv);
        }
        let mut acc = MultiPoly::zero(ctx, nv);
        for t in 1..idx.len() {
            let rest: Vec<usize> = idx.iter().enumerate().filter(|&(s, _)| s != 0 && s != t).map(|(_, &v)| v).collect();
            let a = MultiPoly::var(ctx, nv, skew_index(n, idx[0], idx[t]));
            let term = &a * &rec(ctx, n, nv, &rest);
            acc = if t % 2 == 1 { &acc + &term } else { &acc - &term };
        }
        acc
    }
    rec(ctx, n, nv, &(0..n).collect::<Vec<_>>())
}

// ---------------------------------------------------------------------------
// Decompositions

/// A claimed expression `target = parts[0] + ... + parts[r-1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    target: MultiPoly,
    parts: Vec<ProductOfLinear>,
}

impl Decomposition {
    /// Checks arity and degree; the identity itself is checked by
    /// [`verify_decomposition`].
    pub fn new(target: MultiPoly, parts: Vec<ProductOfLinear>) -> Result<Self, RankError> {
        let d = target
            .degree()
            .ok_or_else(|| RankError::Mismatch("target is zero".into()))? as usize;
        if !target.is_homogeneous() {
            return Err(RankError::Mismatch("target is not homogeneous".into()));
        }
        for (i, p) in parts.iter().enumerate() {
            if p.nvars() != target.nvars() {
                return Err(RankError::Mismatch(format!(
                    "part {} has {} variables, target has {}",
                    i + 1,
                    p.nvars(),
                    target.nvars()
                )));
            }
            if p.ctx() != target.ctx() {
                return Err(RankError::Mismatch(format!("part {} is over a different field", i + 1)));
            }
            if p.degree() != d {
                return Err(RankError::Mismatch(format!("part {} has degree {}, target has {}", i + 1, p.degree(), d)));
            }
        }
        Ok(Decomposition { target, parts })
    }

    pub fn target(&self) -> &MultiPoly {
        &self.target
    }

    pub fn parts(&self) -> &[ProductOfLinear] {
        &self.parts
    }

    pub fn r(&self) -> usize {
        self.parts.len()
    }

    pub fn d(&self) -> usize {
        self.target.degree().unwrap_or(0) as usize
    }

    /// `r d >= n + 1`: the parts involve enough linear forms to reach every
    /// variable of the ambient space.
    pub fn spans_ambient(&self) -> bool {
        self.r() * self.d() >= self.target.nvars()
    }

    pub fn to_json(&self, vars: &[String], target_name: Option<&str>, provenance: Option<&str>) -> DecompositionJson {
        DecompositionJson {
            schema: DECOMPOSITION_SCHEMA.to_string(),
            field: self.target.ctx().tag(),
            vars: vars.to_vec(),
            target: match target_name {
                Some(n) => TargetSpec::Named(n.to_string()),
                None => TargetSpec::Poly(self.target.to_json(vars)),
            },
            parts: self
                .parts
                .iter()
                .map(|p| ProductJson {
                    scalar: p.scalar().to_string(),
                    factors: p.factors().iter().map(|l| l.coeffs().iter().map(|c| c.to_string()).collect()).collect(),
                })
                .collect(),
            provenance: provenance.map(str::to_string),
        }
    }

    pub fn from_json(j: &DecompositionJson) -> Result<Self, RankError> {
        let ctx = FieldCtx::from_tag(&j.field)?;
        let target = match &j.target {
            TargetSpec::Named(n) => Target::parse(n)?.poly(ctx),
            TargetSpec::Poly(p) => {
                let t = MultiPoly::from_json(p)?;
                if t.ctx() != ctx {
                    return Err(RankError::Mismatch("target field differs from decomposition field".into()));
                }
                t
            }
        };
        let mut parts = Vec::with_capacity(j.parts.len());
        for (pi, pj) in j.parts.iter().enumerate() {
            let scalar = ctx.parse_element(&pj.scalar)?;
            let mut factors = Vec::with_capacity(pj.factors.len());
            for (fi, f) in pj.factors.iter().enumerate() {
                if f.len() != target.nvars() {
                    return Err(RankError::Json(format!(
                        "part {} factor {}: {} coefficients for {} variables",
                        pi + 1,
                        fi + 1,
                        f.len(),
                        target.nvars()
                    )));
                }
                let coeffs = f.iter().map(|s| ctx.parse_element(s)).collect::<Result<Vec<_>, _>>()?;
                factors.push(LinearForm::new(ctx, coeffs)?);
            }
            parts.push(ProductOfLinear::new(scalar, factors, target.nvars())?);
        }
        Decomposition::new(target, parts)
    }
}

/// `true` iff the parts expand to the target exactly.
pub fn verify_decomposition(dec: &Decomposition) -> bool {
    let mut acc = MultiPoly::zero(dec.target.ctx(), dec.target.nvars());
    for p in &dec.parts {
        acc = &acc + &p.expand();
    }
    acc == dec.target
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetSpec {
    Named(String),
    Poly(PolyJson),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionJson {
    pub schema: String,
    pub field: String,
    pub vars: Vec<String>,
    pub target: TargetSpec,
    pub parts: Vec<ProductJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

// ---------------------------------------------------------------------------
// Linear subspaces given by equations

/// Linear space cut out by `equations` (rows) in `ncols` coordinates.
fn param_basis(equations: &Matrix) -> Matrix {
    equations.kernel()
}

/// Projective dimension of `{x : E x = 0}`; `-1` when it is the zero space.
pub fn projective_dim(equations: &Matrix) -> i64 {
    (equations.ncols() - equations.rank()) as i64 - 1
}

/// Whether `f` vanishes on the linear space `{x : E x = 0}`, checked by
/// restricting `f` to a basis parametrization.
pub fn vanishes_on(f: &MultiPoly, equations: &Matrix) -> Result<bool, RankError> {
    let basis = param_basis(equations);
    let m = basis.nrows();
    if m == 0 {
        return Ok(true);
    }
    let ctx = f.ctx();
    let images: Vec<MultiPoly> = (0..f.nvars())
        .map(|v| {
            let coeffs: Vec<FieldElement> = basis.rows().iter().map(|row| row[v].clone()).collect();
            LinearForm::new(ctx, coeffs).map(|l| l.to_poly())
        })
        .collect::<Result<_, _>>()?;
    Ok(f.compose(&images)?.is_zero())
}

fn rows_i64(ctx: FieldCtx, ncols: usize, rows: &[Vec<i64>]) -> Matrix {
    if rows.is_empty() {
        return Matrix::zeros(ctx, 0, ncols);
    }
    Matrix::from_i64(ctx, rows)
}

/// Projective dimension of the span of the given linear spaces.
fn span_dim(ctx: FieldCtx, ncols: usize, spaces: &[Vec<Vec<i64>>]) -> Result<i64, RankError> {
    let mut acc = Matrix::zeros(ctx, 0, ncols);
    for s in spaces {
        acc = acc.stack(&param_basis(&rows_i64(ctx, ncols, s)))?;
    }
    Ok(acc.rank() as i64 - 1)
}

/// Projective dimension of the intersection of the given linear spaces.
fn intersection_dim(ctx: FieldCtx, ncols: usize, spaces: &[Vec<Vec<i64>>]) -> Result<i64, RankError> {
    let mut eq = Matrix::zeros(ctx, 0, ncols);
    for s in spaces {
        eq = eq.stack(&rows_i64(ctx, ncols, s))?;
    }
    Ok(projective_dim(&eq))
}

fn unit_row(n: usize, v: usize) -> Vec<i64> {
    let mut r = vec![0; n];
    r[v] = 1;
    r
}

// ---------------------------------------------------------------------------
// Cover witnesses

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverConfig {
    pub prime: u32,
    pub samples: usize,
    pub seed: u64,
}

impl Default for CoverConfig {
    fn default() -> Self {
        CoverConfig {
            prime: 101,
            samples: 100,
            seed: 0,
        }
    }
}

/// The linear space `{B : B v = 0}` through a singular point `A`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoverSample {
    /// The point, as residues in the target's variable order.
    pub point: Vec<u32>,
    pub kernel_vector: Vec<u32>,
    pub dim: i64,
    pub contains_point: bool,
    pub contained: bool,
}

impl CoverSample {
    pub fn passes(&self, k: usize) -> bool {
        self.contains_point && self.contained && self.dim == k as i64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoverWitness {
    pub target: Target,
    pub family: String,
    pub k: usize,
    pub field: String,
    pub seed: u64,
    pub samples: Vec<CoverSample>,
}

impl CoverWitness {
    pub fn all_pass(&self) -> bool {
        self.samples.iter().all(|s| s.passes(self.k))
    }

    pub fn failures(&self) -> usize {
        self.samples.iter().filter(|s| !s.passes(self.k)).count()
    }
}

fn residues(v: &[FieldElement]) -> Vec<u32> {
    v.iter().map(|e| e.residue().unwrap_or(0)).collect()
}

/// Kernel vector of a singular square matrix, normalized by the rref.
fn kernel_vector(a: &Matrix) -> Result<Vec<FieldElement>, RankError> {
    a.kernel().rows().first().cloned().ok_or(RankError::NonsingularPoint)
}

/// The plane `{B : B v = 0}` for a singular `n x n` matrix `a`, in
/// row-major coordinates.
pub fn det_plane_through(a: &Matrix) -> Result<(Vec<FieldElement>, Matrix), RankError> {
    let n = a.nrows();
    let ctx = a.ctx();
    let v = kernel_vector(a)?;
    let mut eqs = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = vec![ctx.zero(); n * n];
        for j in 0..n {
            row[i * n + j] = v[j].clone();
        }
        eqs.push(row);
    }
    Ok((v, Matrix::new(ctx, n * n, eqs)?))
}

/// The plane `{B skew : B v = 0}` for a singular skew matrix `a`, in
/// [`skew_names`] coordinates.
pub fn pfaffian_plane_through(a: &Matrix) -> Result<(Vec<FieldElement>, Matrix), RankError> {
    let n = a.nrows();
    let ctx = a.ctx();
    let v = kernel_vector(a)?;
    let nv = n * (n - 1) / 2;
    let mut eqs = Vec::with_capacity(n);
    for i in 0..n {
        // (B v)_i = sum_{j > i} p_ij v_j - sum_{j < i} p_ji v_j
        let mut row = vec![ctx.zero(); nv];
        for j in 0..n {
            if j > i {
                row[skew_index(n, i, j)] = v[j].clone();
            } else if j < i {
                row[skew_index(n, j, i)] = -&v[j];
            }
        }
        eqs.push(row);
    }
    Ok((v, Matrix::new(ctx, nv, eqs)?))
}

fn random_matrix(ctx: FieldCtx, rng: &mut ChaCha8Rng, p: u32, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows)
        .map(|_| (0..cols).map(|_| ctx.from_i64(rng.random_range(0..p) as i64)).collect())
        .collect();
    Matrix::new(ctx, cols, data).expect("rectangular")
}

fn det_point_coords(a: &Matrix) -> Vec<FieldElement> {
    a.rows().iter().flatten().cloned().collect()
}

fn skew_point_coords(a: &Matrix) -> Vec<FieldElement> {
    let n = a.nrows();
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            out.push(a.get(i, j).clone());
        }
    }
    out
}

fn check_sample(f: &MultiPoly, point: Vec<FieldElement>, v: Vec<FieldElement>, eqs: &Matrix) -> Result<CoverSample, RankError> {
    let contains_point = eqs.mul_vec(&point).iter().all(FieldElement::is_zero);
    Ok(CoverSample {
        point: residues(&point),
        kernel_vector: residues(&v),
        dim: projective_dim(eqs),
        contains_point,
        contained: vanishes_on(f, eqs)?,
    })
}

/// Samples singular `n x n` matrices `A = P Q` (`P` of size `n x (n-1)`)
/// over GF(p) and checks that `{B : B v = 0}` is an `(n^2 - n - 1)`-plane in
/// `V(det_n)` through `A`.
pub fn det_cover(nmat: usize, cfg: &CoverConfig, exec: Exec) -> Result<CoverWitness, RankError> {
    let target = match nmat {
        3 => Target::Det3,
        4 => Target::Det4,
        _ => return Err(RankError::UnknownTarget(format!("det{nmat}"))),
    };
    let ctx = FieldCtx::prime(cfg.prime as u64)?;
    let f = target.poly(ctx);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let points: Vec<Matrix> = (0..cfg.samples)
        .map(|_| {
            let p = random_matrix(ctx, &mut rng, cfg.prime, nmat, nmat - 1);
            let q = random_matrix(ctx, &mut rng, cfg.prime, nmat - 1, nmat);
            p.mul(&q).expect("shapes agree")
        })
        .collect();
    let samples = exec
        .map(points, |a| {
            let (v, eqs) = det_plane_through(&a)?;
            check_sample(&f, det_point_coords(&a), v, &eqs)
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CoverWitness {
        target,
        family: format!("{{B : B v = 0}} for singular A with A v = 0, A = P Q random of inner size {}", nmat - 1),
        k: nmat * nmat - nmat - 1,
        field: ctx.tag(),
        seed: cfg.seed,
        samples,
    })
}

/// Samples singular skew `6 x 6` matrices `A = P S P^T` (`S` skew `4 x 4`)
/// and checks that `{B skew : B v = 0}` is a 9-plane in `V(Pf_6)`.
pub fn pfaffian_cover(cfg: &CoverConfig, exec: Exec) -> Result<CoverWitness, RankError> {
    let ctx = FieldCtx::prime(cfg.prime as u64)?;
    let f = Target::Pf6.poly(ctx);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let points: Vec<Matrix> = (0..cfg.samples)
        .map(|_| {
            let p = random_matrix(ctx, &mut rng, cfg.prime, 6, 4);
            let mut s = Matrix::zeros(ctx, 4, 4);
            for i in 0..4 {
                for j in i + 1..4 {
                    let x = ctx.from_i64(rng.random_range(0..cfg.prime) as i64);
                    s.set(j, i, -&x);
                    s.set(i, j, x);
                }
            }
            p.mul(&s).and_then(|ps| ps.mul(&p.transpose())).expect("shapes agree")
        })
        .collect();
    let samples = exec
        .map(points, |a| {
            let (v, eqs) = pfaffian_plane_through(&a)?;
            check_sample(&f, skew_point_coords(&a), v, &eqs)
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CoverWitness {
        target: Target::Pf6,
        family: "{B skew : B v = 0} for singular skew A with A v = 0, A = P S P^T with S skew 4x4".into(),
        k: 9,
        field: ctx.tag(),
        seed: cfg.seed,
        samples,
    })
}

// ---------------------------------------------------------------------------
// The exclusion rule

/// Which splitting argument excluded the rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    /// `F_k(X_{r,d})` is one-split.
    OneSplit,
    /// Every entry of the two-split chain holds and `k` is large enough.
    TwoSplitChain,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum PartTwoFailure {
    OddR,
    TooFewRows,
    KTooSmall { k: usize, n: usize, r: usize, m: Option<usize> },
    ChainEntryOutOfRange { r: usize, k: i64 },
    ChainEntryNotTwoSplit { r: usize, k: usize, status: Status },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum NotApplicable {
    /// `r d < n + 1`.
    AmbientTooSmall { rd: usize, needed: usize },
    /// Neither argument applies: the one-split status and the failed part
    /// two condition are both recorded.
    NoSplitting { one_split: Status, part_two: PartTwoFailure },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum BoundVerdict {
    RuledOut { basis: Basis, provenance: Provenance },
    NotApplicable(NotApplicable),
}

impl BoundVerdict {
    pub fn is_proven_exclusion(&self) -> bool {
        matches!(
            self,
            BoundVerdict::RuledOut {
                provenance: Provenance::Proven(_),
                ..
            }
        )
    }
}

impl fmt::Display for BoundVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundVerdict::RuledOut { basis, provenance } => write!(f, "ruled out ({basis:?}, {provenance:?})"),
            BoundVerdict::NotApplicable(NotApplicable::AmbientTooSmall { rd, needed }) => {
                write!(f, "not applicable: r*d = {rd} < n+1 = {needed}")
            }
            BoundVerdict::NotApplicable(NotApplicable::NoSplitting { one_split, part_two }) => {
                write!(f, "not applicable: one-split {one_split}; part two: {part_two:?}")
            }
        }
    }
}

/// Outcome of walking the two-split chain.
enum Chain {
    Holds(Provenance),
    Fails(PartTwoFailure),
}

fn two_split_chain(r: usize, d: usize, k: usize, n: usize, m: Option<usize>) -> Result<Chain, RankError> {
    if r % 2 == 1 {
        return Ok(Chain::Fails(PartTwoFailure::OddR));
    }
    if r < 4 {
        return Ok(Chain::Fails(PartTwoFailure::TooFewRows));
    }
    let plain = k + r > n;
    let refined = m.is_some_and(|m| 2 * (k + m) + r > 2 * n);
    if !plain && !refined {
        return Ok(Chain::Fails(PartTwoFailure::KTooSmall { k, n, r, m }));
    }
    let mut conjectural = false;
    let mut proof = None;
    for t in 0..=(r - 4) / 2 {
        let rr = r - 2 * t;
        let kk = k as i64 - (d * t) as i64;
        if kk < 0 {
            return Ok(Chain::Fails(PartTwoFailure::ChainEntryOutOfRange { r: rr, k: kk }));
        }
        let st = splitting_status(rr, d, kk as usize)?;
        match st.two_split {
            Status::Yes(Provenance::Proven(p)) => {
                proof.get_or_insert(p);
            }
            Status::Yes(Provenance::Conjectural) => conjectural = true,
            other => {
                return Ok(Chain::Fails(PartTwoFailure::ChainEntryNotTwoSplit {
                    r: rr,
                    k: kk as usize,
                    status: other,
                }))
            }
        }
    }
    Ok(Chain::Holds(if conjectural {
        Provenance::Conjectural
    } else {
        Provenance::Proven(proof.expect("chain is nonempty"))
    }))
}

/// Whether a form of degree `d` in `n + 1` variables whose hypersurface is
/// covered by `k`-planes (from an `m`-dimensional family, if known) can have
/// product rank `r`. Only proven splitting facts give a proven exclusion.
pub fn theorem_bound(r: usize, d: usize, k: usize, n: usize, m: Option<usize>) -> Result<BoundVerdict, RankError> {
    if r * d < n + 1 {
        return Ok(BoundVerdict::NotApplicable(NotApplicable::AmbientTooSmall { rd: r * d, needed: n + 1 }));
    }
    let one = one_split_status(r, d, k)?;
    if let Status::Yes(p @ Provenance::Proven(_)) = one {
        return Ok(BoundVerdict::RuledOut {
            basis: Basis::OneSplit,
            provenance: p,
        });
    }
    let chain = two_split_chain(r, d, k, n, m)?;
    if let Chain::Holds(p @ Provenance::Proven(_)) = chain {
        return Ok(BoundVerdict::RuledOut {
            basis: Basis::TwoSplitChain,
            provenance: p,
        });
    }
    if one == Status::Yes(Provenance::Conjectural) {
        return Ok(BoundVerdict::RuledOut {
            basis: Basis::OneSplit,
            provenance: Provenance::Conjectural,
        });
    }
    match chain {
        Chain::Holds(p) => Ok(BoundVerdict::RuledOut {
            basis: Basis::TwoSplitChain,
            provenance: p,
        }),
        Chain::Fails(part_two) => Ok(BoundVerdict::NotApplicable(NotApplicable::NoSplitting { one_split: one, part_two })),
    }
}

/// Parameters of the covering family used for each target.
pub fn cover_parameters(target: Target) -> Option<(usize, usize, usize)> {
    // (d, n, k) with V(f) in P^n covered by k-planes.
    match target {
        Target::Det3 => Some((3, 8, 5)),
        Target::Det4 => Some((4, 15, 11)),
        Target::Pf6 => Some((3, 14, 9)),
        Target::Perm4 => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankLine {
    pub r: usize,
    pub verdict: BoundVerdict,
}

/// Every rank below `r_max` checked against the rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankBoundReport {
    pub target: Target,
    pub d: usize,
    pub n: usize,
    pub k: usize,
    pub lines: Vec<RankLine>,
    /// The rank ranges with `r d < n + 1` are excluded by the non-cone check
    /// (see [`is_cone`]); this records its outcome.
    pub not_a_cone: bool,
    /// Smallest rank not excluded by a proven verdict or by the non-cone
    /// check.
    pub lower_bound: usize,
}

pub fn rank_bounds(target: Target) -> Result<RankBoundReport, RankError> {
    let (d, n, k) = cover_parameters(target).ok_or_else(|| RankError::UnknownTarget(format!("{target} has no covering family")))?;
    let not_a_cone = !is_cone(&target.poly(FieldCtx::rationals()))?;
    let mut lines = Vec::new();
    let mut lower_bound = None;
    for r in 1..=n + 1 {
        let verdict = theorem_bound(r, d, k, n, None)?;
        let excluded = match &verdict {
            BoundVerdict::NotApplicable(NotApplicable::AmbientTooSmall { .. }) => not_a_cone,
            v => v.is_proven_exclusion(),
        };
        lines.push(RankLine { r, verdict });
        if !excluded {
            lower_bound = Some(r);
            break;
        }
    }
    Ok(RankBoundReport {
        target,
        d,
        n,
        k,
        lines,
        not_a_cone,
        lower_bound: lower_bound.unwrap_or(n + 2),
    })
}

pub fn derivative(f: &MultiPoly, var: usize) -> MultiPoly {
    let ctx = f.ctx();
    let terms: Vec<(Vec<u32>, FieldElement)> = f
        .terms()
        .filter(|(e, _)| e.as_slice()[var] > 0)
        .map(|(e, c)| {
            let mut ex = e.as_slice().to_vec();
            let k = ex[var];
            ex[var] -= 1;
            (ex, c * &ctx.from_i64(k as i64))
        })
        .collect();
    MultiPoly::from_terms(ctx, f.nvars(), terms).expect("same arity")
}

/// A form is a cone (can be written in fewer variables after a linear
/// change of coordinates) iff its first partials are linearly dependent.
/// Exact over Q.
pub fn is_cone(f: &MultiPoly) -> Result<bool, RankError> {
    let partials: Vec<MultiPoly> = (0..f.nvars()).map(|v| derivative(f, v)).collect();
    let mut monos: Vec<Exponent> = partials.iter().flat_map(|p| p.terms().map(|(e, _)| e.clone())).collect();
    monos.sort();
    monos.dedup();
    let ctx = f.ctx();
    let rows = partials
        .iter()
        .map(|p| monos.iter().map(|e| p.coefficient(e)).collect())
        .collect();
    let m = Matrix::new(ctx, monos.len(), rows)?;
    Ok(m.rank() < f.nvars())
}

// ---------------------------------------------------------------------------
// Certificates

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Formula {
    /// `theorem_bound(r, d, k, n, m)` must be a proven exclusion.
    ExcludesRank { r: usize, d: usize, k: usize, n: usize, m: Option<usize> },
    /// `F_k(X_{r,d})` must be one-split with proven provenance.
    OneSplit { r: usize, d: usize, k: usize },
}

/// A linear space, as the common zeros of integer linear equations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Space {
    pub name: String,
    pub equations: Vec<Vec<i64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum LinearCheck {
    /// The space has the given projective dimension and lies in `V(target)`.
    Contained { space: Space, dim: i64 },
    /// The span of the spaces has the given projective dimension.
    SpanDim { spaces: Vec<Space>, dim: i64 },
    /// The span of the spaces equals `equals`.
    SpanEquals { spaces: Vec<Space>, equals: Space },
    /// The intersection has the given projective dimension (`-1` is empty).
    IntersectionDim { spaces: Vec<Space>, dim: i64 },
    /// The first partials of the target are linearly independent.
    NotACone,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Step {
    FormulaCheck { label: String, formula: Formula },
    LinearAlgebraCheck { label: String, check: LinearCheck },
    ImportedFact { label: String, statement: String, source: String },
}

impl Step {
    pub fn label(&self) -> &str {
        match self {
            Step::FormulaCheck { label, .. } | Step::LinearAlgebraCheck { label, .. } | Step::ImportedFact { label, .. } => label,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankCertificate {
    pub schema: String,
    pub target: Target,
    pub vars: Vec<String>,
    /// `pr(target) >= lower_bound`.
    pub lower_bound: usize,
    pub rule: String,
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StepOutcome {
    pub label: String,
    pub kind: &'static str,
    /// `None` for imported facts, which are listed but not checked.
    pub passed: Option<bool>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReplayReport {
    pub target: Target,
    pub lower_bound: usize,
    pub outcomes: Vec<StepOutcome>,
}

impl ReplayReport {
    pub fn all_checks_pass(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed != Some(false))
    }

    pub fn checked(&self) -> usize {
        self.outcomes.iter().filter(|o| o.passed.is_some()).count()
    }

    pub fn imported(&self) -> Vec<&str> {
        self.outcomes.iter().filter(|o| o.passed.is_none()).map(|o| o.label.as_str()).collect()
    }
}

fn space_matrix(ctx: FieldCtx, ncols: usize, s: &Space) -> Result<Matrix, RankError> {
    if let Some(bad) = s.equations.iter().find(|r| r.len() != ncols) {
        return Err(RankError::Json(format!("space `{}`: equation of length {} in {} coordinates", s.name, bad.len(), ncols)));
    }
    Ok(rows_i64(ctx, ncols, &s.equations))
}

fn replay_linear(target: Target, check: &LinearCheck) -> Result<(bool, String), RankError> {
    let ctx = FieldCtx::rationals();
    let nv = target.nvars();
    let eqs_of = |ss: &[Space]| -> Result<Vec<Vec<Vec<i64>>>, RankError> {
        ss.iter().map(|s| space_matrix(ctx, nv, s).map(|_| s.equations.clone())).collect()
    };
    Ok(match check {
        LinearCheck::Contained { space, dim } => {
            let m = space_matrix(ctx, nv, space)?;
            let got = projective_dim(&m);
            let inside = vanishes_on(&target.poly(ctx), &m)?;
            (got == *dim && inside, format!("dim {got} (expected {dim}), contained: {inside}"))
        }
        LinearCheck::SpanDim { spaces, dim } => {
            let got = span_dim(ctx, nv, &eqs_of(spaces)?)?;
            (got == *dim, format!("span dim {got} (expected {dim})"))
        }
        LinearCheck::SpanEquals { spaces, equals } => {
            let mut span = Matrix::zeros(ctx, 0, nv);
            for s in spaces {
                span = span.stack(&param_basis(&space_matrix(ctx, nv, s)?))?;
            }
            let want = param_basis(&space_matrix(ctx, nv, equals)?);
            let same = span.rank() == want.rank() && span.stack(&want)?.rank() == want.rank();
            (same, format!("span dim {}, `{}` dim {}", span.rank() as i64 - 1, equals.name, want.rank() as i64 - 1))
        }
        LinearCheck::IntersectionDim { spaces, dim } => {
            let got = intersection_dim(ctx, nv, &eqs_of(spaces)?)?;
            (got == *dim, format!("intersection dim {got} (expected {dim})"))
        }
        LinearCheck::NotACone => {
            let cone = is_cone(&target.poly(ctx))?;
            (!cone, format!("partials independent: {}", !cone))
        }
    })
}

fn replay_formula(f: &Formula) -> Result<(bool, String), RankError> {
    Ok(match *f {
        Formula::ExcludesRank { r, d, k, n, m } => {
            let v = theorem_bound(r, d, k, n, m)?;
            (v.is_proven_exclusion(), v.to_string())
        }
        Formula::OneSplit { r, d, k } => {
            let s = one_split_status(r, d, k)?;
            (matches!(s, Status::Yes(Provenance::Proven(_))), format!("one-split: {s}"))
        }
    })
}

/// Replays every checkable step in order. Imported facts are reported but
/// never used as evidence.
pub fn replay(cert: &RankCertificate) -> Result<ReplayReport, RankError> {
    if cert.schema != CERT_SCHEMA {
        return Err(RankError::Json(format!("unsupported schema `{}`", cert.schema)));
    }
    let mut outcomes = Vec::with_capacity(cert.steps.len());
    for step in &cert.steps {
        let (kind, passed, detail) = match step {
            Step::FormulaCheck { formula, .. } => {
                let (ok, d) = replay_formula(formula)?;
                ("formula", Some(ok), d)
            }
            Step::LinearAlgebraCheck { check, .. } => {
                let (ok, d) = replay_linear(cert.target, check)?;
                ("linear_algebra", Some(ok), d)
            }
            Step::ImportedFact { statement, source, .. } => ("imported", None, format!("{statement} [{source}]")),
        };
        outcomes.push(StepOutcome {
            label: step.label().to_string(),
            kind,
            passed,
            detail,
        });
    }
    Ok(ReplayReport {
        target: cert.target,
        lower_bound: cert.lower_bound,
        outcomes,
    })
}

/// Replays and refuses to return a certificate with a failing check.
fn emit(cert: RankCertificate) -> Result<RankCertificate, RankError> {
    let report = replay(&cert)?;
    if let Some(bad) = report.outcomes.iter().find(|o| o.passed == Some(false)) {
        return Err(RankError::CheckFailed {
            label: bad.label.clone(),
            detail: bad.detail.clone(),
        });
    }
    Ok(cert)
}

fn zero_row(n: usize, i: usize) -> Space {
    Space {
        name: format!("H{}", i + 1),
        equations: (0..n).map(|j| unit_row(n * n, i * n + j)).collect(),
    }
}

fn zero_col(n: usize, j: usize) -> Space {
    Space {
        name: format!("V{}", j + 1),
        equations: (0..n).map(|i| unit_row(n * n, i * n + j)).collect(),
    }
}

fn with_zeros(s: &Space, nv: usize, vars: &[usize], names: &[String]) -> Space {
    let mut equations = s.equations.clone();
    equations.extend(vars.iter().map(|&v| unit_row(nv, v)));
    let tag: Vec<&str> = vars.iter().map(|&v| names[v].as_str()).collect();
    Space {
        name: format!("{} with {} = 0", s.name, tag.join(", ")),
        equations,
    }
}

/// `{B : B e_c = 0}`, i.e. column `c` of `B` vanishes, for `det_n`.
fn det_kernel_space(n: usize, c: usize) -> Space {
    let mut s = zero_col(n, c);
    s.name = format!("{{B : B e{} = 0}}", c + 1);
    s
}

fn pf_kernel_space(c: usize) -> Space {
    let n = 6;
    let equations = (0..n)
        .filter(|&i| i != c)
        .map(|i| unit_row(15, if i < c { skew_index(n, i, c) } else { skew_index(n, c, i) }))
        .collect();
    Space {
        name: format!("{{B skew : B e{} = 0}}", c + 1),
        equations,
    }
}

fn cover_certificate(target: Target) -> Result<RankCertificate, RankError> {
    let report = rank_bounds(target)?;
    let (d, n, k) = (report.d, report.n, report.k);
    let mut steps = Vec::new();
    let (cover, cone_spaces, cover_source): (Space, Vec<Space>, &str) = match target {
        Target::Det3 | Target::Det4 => {
            let m = if target == Target::Det3 { 3 } else { 4 };
            (
                det_kernel_space(m, m - 1),
                (0..m).map(|c| det_kernel_space(m, c)).collect(),
                "singular matrices A with A v = 0 lie in {B : B v = 0}; the general linear group acts transitively on kernel lines",
            )
        }
        Target::Pf6 => (
            pf_kernel_space(5),
            (0..6).map(pf_kernel_space).collect(),
            "singular skew A with A v = 0 lie in {B skew : B v = 0}; the six conditions have one relation v^T B v = 0",
        ),
        Target::Perm4 => unreachable!("perm4 has its own certificate"),
    };
    steps.push(Step::LinearAlgebraCheck {
        label: format!("representative {k}-plane of the covering family"),
        check: LinearCheck::Contained { space: cover, dim: k as i64 },
    });
    steps.push(Step::ImportedFact {
        label: "covering family".into(),
        statement: format!("V({target}) in P^{n} is covered by {k}-planes of this form"),
        source: cover_source.into(),
    });
    steps.push(Step::LinearAlgebraCheck {
        label: "not a cone".into(),
        check: LinearCheck::NotACone,
    });
    steps.push(Step::LinearAlgebraCheck {
        label: "listed maximal subspaces have empty common intersection".into(),
        check: LinearCheck::IntersectionDim {
            spaces: cone_spaces,
            dim: -1,
        },
    });
    for line in &report.lines {
        if line.r * d > n && line.r < report.lower_bound {
            steps.push(Step::FormulaCheck {
                label: format!("pr != {}", line.r),
                formula: Formula::ExcludesRank {
                    r: line.r,
                    d,
                    k,
                    n,
                    m: None,
                },
            });
        }
    }
    let small = (n + 1).div_ceil(d) - 1;
    emit(RankCertificate {
        schema: CERT_SCHEMA.into(),
        target,
        vars: target.var_names(),
        lower_bound: report.lower_bound,
        rule: format!(
            "ranks r <= {small} have r*d <= n and would make V({target}) a cone, which the partials check excludes; \
             each remaining r below {} is excluded by the splitting rule",
            report.lower_bound
        ),
        steps,
    })
}

/// Exact checks for `pr(perm_4) >= 6`.
pub fn perm4_certificate() -> Result<RankCertificate, RankError> {
    let n = 4;
    let nv = 16;
    let names = matrix_names(n);
    let hs: Vec<Space> = (0..n).map(|i| zero_row(n, i)).collect();
    let vs: Vec<Space> = (0..n).map(|j| zero_col(n, j)).collect();
    let mut steps = vec![Step::ImportedFact {
        label: "pr >= 5".into(),
        statement: "pr(perm4) >= 5, from the Waring rank bound 35".into(),
        source: "Shafiei; Waring rank to product rank comparison".into(),
    }];
    for s in hs.iter().chain(&vs) {
        steps.push(Step::LinearAlgebraCheck {
            label: format!("{} is an 11-plane in V(perm4)", s.name),
            check: LinearCheck::Contained { space: s.clone(), dim: 11 },
        });
    }
    steps.push(Step::ImportedFact {
        label: "eight 11-planes".into(),
        statement: "H1..H4 and V1..V4 are exactly the 11-planes of V(perm4)".into(),
        source: "classification of linear subspaces of permanental hypersurfaces".into(),
    });
    for fam in [&hs, &vs] {
        for a in 0..n {
            for b in a + 1..n {
                steps.push(Step::LinearAlgebraCheck {
                    label: format!("{} + {} = P^15", fam[a].name, fam[b].name),
                    check: LinearCheck::SpanDim {
                        spaces: vec![fam[a].clone(), fam[b].clone()],
                        dim: 15,
                    },
                });
            }
        }
    }
    for (a, h) in hs.iter().enumerate() {
        for (b, v) in vs.iter().enumerate() {
            let z = a * n + b;
            steps.push(Step::LinearAlgebraCheck {
                label: format!("H{} + V{} = V({})", a + 1, b + 1, names[z]),
                check: LinearCheck::SpanEquals {
                    spaces: vec![h.clone(), v.clone()],
                    equals: Space {
                        name: format!("V({})", names[z]),
                        equations: vec![unit_row(nv, z)],
                    },
                },
            });
        }
    }
    steps.push(Step::FormulaCheck {
        label: "11-planes of X_{5,4} are one-split".into(),
        formula: Formula::OneSplit { r: 5, d: 4, k: 11 },
    });
    steps.push(Step::FormulaCheck {
        label: "10-planes of X_{4,4} are one-split".into(),
        formula: Formula::OneSplit { r: 4, d: 4, k: 10 },
    });
    // Two zeroed variables: same row, same column, or neither; row and
    // column permutations reduce every choice to one of these.
    for pair in [[0usize, 1], [0, 4], [0, 5]] {
        let restricted: Vec<Space> = hs.iter().map(|h| with_zeros(h, nv, &pair, &names)).collect();
        steps.push(Step::LinearAlgebraCheck {
            label: format!("H1..H4 with {}, {} = 0 meet in the empty set", names[pair[0]], names[pair[1]]),
            check: LinearCheck::IntersectionDim {
                spaces: restricted,
                dim: -1,
            },
        });
    }
    steps.push(Step::ImportedFact {
        label: "restricted maximality".into(),
        statement: "the restrictions of H1..H4 are maximal linear subspaces of V(perm4'')".into(),
        source: "torus action argument for permanental hypersurfaces".into(),
    });
    steps.push(Step::ImportedFact {
        label: "implication chain".into(),
        statement: "pr(perm4'') > 3 implies pr(perm4') > 4 implies pr(perm4) > 5, via the embedding arguments into X_{5,4} and X_{4,4}".into(),
        source: "embedding argument for the permanent; only the linear algebra above is machine-checked".into(),
    });
    emit(RankCertificate {
        schema: CERT_SCHEMA.into(),
        target: Target::Perm4,
        vars: names,
        lower_bound: 6,
        rule: "pr >= 5 is imported; pr = 5 would force two restricted planes into a common coordinate hyperplane, \
               then pr(perm4'') <= 3 and V(perm4'') a cone, contradicting the empty common intersection of its maximal subspaces"
            .into(),
        steps,
    })
}

pub fn certificate(target: Target) -> Result<RankCertificate, RankError> {
    match target {
        Target::Perm4 => perm4_certificate(),
        t => cover_certificate(t),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::census::Proof;

    fn q() -> FieldCtx {
        FieldCtx::rationals()
    }

    #[test]
    fn generators_by_evaluation() {
        let ctx = q();
        // det of [[1,2,3],[4,5,6],[7,8,10]] is -3; perm is 463.
        let pt: Vec<FieldElement> = [1, 2, 3, 4, 5, 6, 7, 8, 10].iter().map(|&v| ctx.from_i64(v)).collect();
        assert_eq!(det_poly(ctx, 3).eval(&pt).unwrap(), ctx.from_i64(-3));
        assert_eq!(perm_poly(ctx, 3).eval(&pt).unwrap(), ctx.from_i64(463));
        assert_eq!(det_poly(ctx, 4).num_terms(), 24);
        let pf = pfaffian_poly(ctx, 6);
        assert_eq!(pf.num_terms(), 15);
        // Pf^2 = det on a random skew matrix.
        let vals: Vec<i64> = vec![3, -1, 4, 1, -5, 9, 2, -6, 5, 3, 5, -8, 9, 7, -9];
        let mut full = vec![ctx.zero(); 36];
        for i in 0..6 {
            for j in i + 1..6 {
                let x = ctx.from_i64(vals[skew_index(6, i, j)]);
                full[j * 6 + i] = -&x;
                full[i * 6 + j] = x;
            }
        }
        let skew: Vec<FieldElement> = vals.iter().map(|&v| ctx.from_i64(v)).collect();
        let p = pf.eval(&skew).unwrap();
        assert_eq!(&p * &p, det_poly(ctx, 6).eval(&full).unwrap());
    }

    #[test]
    fn det2_decomposition() {
        let ctx = q();
        let det2 = det_poly(ctx, 2);
        let v = |i| LinearForm::var(ctx, 4, i);
        let good = vec![
            ProductOfLinear::from_factors(vec![v(0), v(3)]).unwrap(),
            ProductOfLinear::from_factors(vec![v(1).scale(&ctx.from_i64(-1)), v(2)]).unwrap(),
        ];
        let dec = Decomposition::new(det2.clone(), good).unwrap();
        assert!(verify_decomposition(&dec));
        assert!(dec.spans_ambient());
        let bad = vec![
            ProductOfLinear::from_factors(vec![v(0), v(3)]).unwrap(),
            ProductOfLinear::from_factors(vec![v(1), v(2)]).unwrap(),
        ];
        assert!(!verify_decomposition(&Decomposition::new(det2.clone(), bad).unwrap()));
        let wrong_degree = vec![ProductOfLinear::from_factors(vec![v(0)]).unwrap()];
        assert!(matches!(Decomposition::new(det2, wrong_degree), Err(RankError::Mismatch(_))));
    }

    #[test]
    fn shipped_data_files_verify() {
        for text in [
            include_str!("../../../data/det3_decomposition.json"),
            include_str!("../../../data/perm4_glynn.json"),
        ] {
            let j: DecompositionJson = serde_json::from_str(text).unwrap();
            let dec = Decomposition::from_json(&j).unwrap();
            assert!(verify_decomposition(&dec));
            let back = Decomposition::from_json(&dec.to_json(&j.vars, None, None)).unwrap();
            assert_eq!(back, dec);
        }
    }

    #[test]
    fn det_cover_from_diagonal_point() {
        let ctx = FieldCtx::prime(101).unwrap();
        let a = Matrix::from_i64(ctx, &[vec![1, 0, 0, 0], vec![0, 1, 0, 0], vec![0, 0, 1, 0], vec![0, 0, 0, 0]]);
        let (v, eqs) = det_plane_through(&a).unwrap();
        assert_eq!(residues(&v), vec![0, 0, 0, 1]);
        assert_eq!(projective_dim(&eqs), 11);
        assert!(vanishes_on(&det_poly(ctx, 4), &eqs).unwrap());
        let nonsingular = Matrix::identity(ctx, 4);
        assert_eq!(det_plane_through(&nonsingular).unwrap_err(), RankError::NonsingularPoint);
    }

    #[test]
    fn pfaffian_cover_from_coordinate_point() {
        let ctx = FieldCtx::prime(101).unwrap();
        // p12 = p34 = 1, everything touching index 5 or 6 zero.
        let mut a = Matrix::zeros(ctx, 6, 6);
        for (i, j) in [(0, 1), (2, 3)] {
            a.set(i, j, ctx.one());
            a.set(j, i, -ctx.one());
        }
        let (_, eqs) = pfaffian_plane_through(&a).unwrap();
        assert_eq!(projective_dim(&eqs), 9);
        assert!(vanishes_on(&pfaffian_poly(ctx, 6), &eqs).unwrap());
    }

    #[test]
    fn sampled_covers() {
        let cfg = CoverConfig { samples: 10, ..Default::default() };
        for w in [
            det_cover(3, &cfg, Exec::Sequential).unwrap(),
            det_cover(4, &cfg, Exec::Sequential).unwrap(),
            pfaffian_cover(&cfg, Exec::Sequential).unwrap(),
        ] {
            assert!(w.all_pass(), "{} failed", w.target);
        }
        assert_eq!(det_cover(3, &cfg, Exec::Sequential).unwrap().k, 5);
    }

    #[test]
    fn rule_examples() {
        let det3 = theorem_bound(4, 3, 5, 8, None).unwrap();
        assert_eq!(
            det3,
            BoundVerdict::RuledOut {
                basis: Basis::TwoSplitChain,
                provenance: Provenance::Proven(Proof::SmallR)
            }
        );
        let pf6 = theorem_bound(6, 3, 9, 14, None).unwrap();
        assert!(matches!(pf6, BoundVerdict::RuledOut { basis: Basis::OneSplit, provenance: Provenance::Proven(_) }));
        let det4 = theorem_bound(6, 4, 11, 15, None).unwrap();
        assert!(matches!(det4, BoundVerdict::RuledOut { basis: Basis::TwoSplitChain, provenance: Provenance::Proven(_) }));
        for r in [4, 5] {
            assert!(matches!(
                theorem_bound(r, 4, 11, 15, None).unwrap(),
                BoundVerdict::RuledOut { basis: Basis::OneSplit, .. }
            ));
        }
        assert!(matches!(
            theorem_bound(3, 4, 11, 15, None).unwrap(),
            BoundVerdict::NotApplicable(NotApplicable::AmbientTooSmall { rd: 12, needed: 16 })
        ));
        // k not above n - r, but the family dimension rescues it.
        let v = theorem_bound(4, 3, 4, 8, None).unwrap();
        assert!(matches!(
            v,
            BoundVerdict::NotApplicable(NotApplicable::NoSplitting { part_two: PartTwoFailure::KTooSmall { .. }, .. })
        ));
        let v = theorem_bound(4, 3, 5, 9, Some(4)).unwrap();
        assert!(v.is_proven_exclusion());
    }

    #[test]
    fn conjectural_support_is_labelled() {
        // r = 7, d = 5: one-split from k = 16 is only conjectured below d(r-3) = 20.
        let v = theorem_bound(7, 5, 17, 30, None).unwrap();
        assert_eq!(
            v,
            BoundVerdict::RuledOut {
                basis: Basis::OneSplit,
                provenance: Provenance::Conjectural
            }
        );
    }

    #[test]
    fn rank_bound_summaries() {
        assert_eq!(rank_bounds(Target::Det3).unwrap().lower_bound, 5);
        assert_eq!(rank_bounds(Target::Det4).unwrap().lower_bound, 7);
        assert_eq!(rank_bounds(Target::Pf6).unwrap().lower_bound, 7);
    }

    #[test]
    fn cone_detection() {
        let ctx = q();
        // x0^2 + x1^2 in three variables is a cone; det3 is not.
        let f = &MultiPoly::var(ctx, 3, 0).pow(2) + &MultiPoly::var(ctx, 3, 1).pow(2);
        assert!(is_cone(&f).unwrap());
        assert!(!is_cone(&det_poly(ctx, 3)).unwrap());
    }

    #[test]
    fn certificates_replay() {
        for t in [Target::Det3, Target::Det4, Target::Pf6, Target::Perm4] {
            let cert = certificate(t).unwrap();
            let report = replay(&cert).unwrap();
            assert!(report.all_checks_pass(), "{t}");
            let json = serde_json::to_string(&cert).unwrap();
            let back: RankCertificate = serde_json::from_str(&json).unwrap();
            assert_eq!(back, cert);
        }
        let perm = perm4_certificate().unwrap();
        assert_eq!(perm.lower_bound, 6);
        assert!(replay(&perm).unwrap().imported().len() >= 4);
    }

    #[test]
    fn tampered_certificate_fails() {
        let mut cert = perm4_certificate().unwrap();
        for s in &mut cert.steps {
            if let Step::LinearAlgebraCheck {
                check: LinearCheck::Contained { dim, .. },
                ..
            } = s
            {
                *dim = 12;
                break;
            }
        }
        assert!(!replay(&cert).unwrap().all_checks_pass());
    }
}
