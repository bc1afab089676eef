//! Closed-form facts about the Fano schemes `F_k(X_{r,d})`: splitting status
//! with provenance, nonemptiness, connectedness, torus-fixed planes and
//! component tables.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::exec::Exec;
use crate::field::FieldCtx;
use crate::linalg::Matrix;
use crate::plane::{one_split_threshold, HypersurfaceParams, KPlane};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CensusError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("outside the validated range: {0}")]
    OutOfValidatedRange(String),
}

/// Why a splitting statement is known.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Proof {
    /// The Fano scheme is empty, so the statement holds vacuously.
    EmptyFano,
    /// `lambda`-splitting with `lambda >= r` holds for every member plane.
    Trivial,
    /// Established for `r <= 6`.
    SmallR,
    /// Established for `d = 4`.
    DegreeFour,
    /// One-splitting for `r >= 7` once `k >= d(r-3)`.
    LargeK,
    /// For `r = 3` two-splitting coincides with one-splitting.
    ThreeRows,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Provenance {
    Proven(Proof),
    Conjectural,
}

/// A non-split plane can be built with `plane::sharp_witness(r, d)`; its
/// generic `k`-dimensional subspaces are non-split too.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WitnessRef {
    pub r: usize,
    pub d: usize,
    pub witness_k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    Yes(Provenance),
    No(WitnessRef),
    Unknown,
}

impl Status {
    pub fn is_yes(&self) -> bool {
        matches!(self, Status::Yes(_))
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Yes(Provenance::Proven(p)) => write!(f, "yes (proven: {p:?})"),
            Status::Yes(Provenance::Conjectural) => write!(f, "yes (conjectural)"),
            Status::No(w) => write!(f, "no (witness: sharp_witness({}, {}) at k = {})", w.r, w.d, w.witness_k),
            Status::Unknown => write!(f, "unknown"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SplitStatus {
    pub r: usize,
    pub d: usize,
    pub k: usize,
    pub one_split: Status,
    pub two_split: Status,
}

/// Two-split threshold for even `r`.
pub fn two_split_threshold(r: usize, d: usize) -> usize {
    (r / 2 * d).saturating_sub(1)
}

fn check_params(r: usize, d: usize) -> Result<(), CensusError> {
    if r < 2 || d < 2 {
        return Err(CensusError::InvalidParams(format!("need r >= 2 and d >= 2, got r={r}, d={d}")));
    }
    Ok(())
}

/// The one-split half of [`splitting_status`].
pub fn one_split_status(r: usize, d: usize, k: usize) -> Result<Status, CensusError> {
    splitting_status(r, d, k).map(|s| s.one_split)
}

pub fn splitting_status(r: usize, d: usize, k: usize) -> Result<SplitStatus, CensusError> {
    check_params(r, d)?;
    if d < 3 {
        return Err(CensusError::InvalidParams("splitting status needs d >= 3".into()));
    }
    let t1 = one_split_threshold(r, d);
    let one = if !fano_nonempty(r, d, k) {
        Status::Yes(Provenance::Proven(Proof::EmptyFano))
    } else if k >= t1 {
        Status::Yes(if r <= 6 {
            Provenance::Proven(Proof::SmallR)
        } else if d == 4 {
            Provenance::Proven(Proof::DegreeFour)
        } else if k >= d * (r - 3) {
            Provenance::Proven(Proof::LargeK)
        } else {
            Provenance::Conjectural
        })
    } else {
        Status::No(WitnessRef { r, d, witness_k: t1 - 1 })
    };
    let two = if one.is_yes() {
        one
    } else if r <= 2 {
        Status::Yes(Provenance::Proven(Proof::Trivial))
    } else if r == 3 {
        one
    } else if r.is_multiple_of(2) && k >= two_split_threshold(r, d) {
        Status::Yes(if r <= 6 {
            Provenance::Proven(Proof::SmallR)
        } else if d == 4 {
            Provenance::Proven(Proof::DegreeFour)
        } else {
            Provenance::Conjectural
        })
    } else {
        Status::Unknown
    };
    Ok(SplitStatus {
        r,
        d,
        k,
        one_split: one,
        two_split: two,
    })
}

pub fn fano_nonempty(r: usize, d: usize, k: usize) -> bool {
    k < r * (d - 1)
}

pub fn fano_connected(r: usize, d: usize, k: usize) -> bool {
    k + 1 < r * (d - 1)
}

/// A coordinate plane `{x_ij = 0 : (i,j) in zeros}`, 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CoordinatePlane {
    pub r: usize,
    pub d: usize,
    pub zeros: Vec<(usize, usize)>,
}

impl CoordinatePlane {
    pub fn k(&self) -> usize {
        self.r * self.d - self.zeros.len() - 1
    }

    /// Basis of unit vectors on the surviving coordinates.
    pub fn to_kplane(&self, ctx: FieldCtx) -> KPlane {
        let params = HypersurfaceParams::new(self.r, self.d).expect("valid parameters");
        let free: Vec<usize> = (0..params.nvars())
            .filter(|&c| !self.zeros.contains(&(c / self.d, c % self.d)))
            .collect();
        let mut b = Matrix::zeros(ctx, free.len(), params.nvars());
        for (a, &c) in free.iter().enumerate() {
            b.set(a, c, ctx.one());
        }
        KPlane::new(params, b).expect("unit vectors are independent")
    }
}

/// Coordinate k-planes inside `X_{r,d}`: zero sets of size `rd - k - 1`
/// meeting every row.
pub fn torus_fixed_planes(r: usize, d: usize, k: usize, exec: Exec) -> Result<Vec<CoordinatePlane>, CensusError> {
    check_params(r, d)?;
    let n = r * d;
    if k + 1 > n {
        return Ok(Vec::new());
    }
    let size = n - k - 1;
    if size < r {
        return Ok(Vec::new());
    }
    let masks: Vec<u32> = (1u32..(1 << d)).collect();
    let chunks = exec.map(masks.clone(), |first| {
        let mut out = Vec::new();
        let mut choice = vec![first];
        extend_rows(r, d, size, &masks, &mut choice, &mut out);
        out
    });
    Ok(chunks.into_iter().flatten().collect())
}

fn extend_rows(r: usize, d: usize, size: usize, masks: &[u32], choice: &mut Vec<u32>, out: &mut Vec<CoordinatePlane>) {
    let used: usize = choice.iter().map(|m| m.count_ones() as usize).sum();
    let rows_left = r - choice.len();
    if rows_left == 0 {
        if used == size {
            let zeros = choice
                .iter()
                .enumerate()
                .flat_map(|(i, &m)| (0..d).filter(move |j| m >> j & 1 == 1).map(move |j| (i, j)))
                .collect();
            out.push(CoordinatePlane { r, d, zeros });
        }
        return;
    }
    if used + rows_left > size || used + rows_left * d < size {
        return;
    }
    for &m in masks {
        choice.push(m);
        extend_rows(r, d, size, masks, choice, out);
        choice.pop();
    }
}

/// Number of torus-fixed k-planes: the coefficient of `t^{rd-k-1}` in
/// `((1+t)^d - 1)^r`.
pub fn torus_fixed_count(r: usize, d: usize, k: usize) -> BigUint {
    let n = r * d;
    if k + 1 > n {
        return BigUint::zero();
    }
    let size = n - k - 1;
    let row: Vec<BigUint> = (0..=d).map(|j| if j == 0 { BigUint::zero() } else { binomial(d, j) }).collect();
    let mut acc = vec![BigUint::one()];
    for _ in 0..r {
        let mut next = vec![BigUint::zero(); acc.len() + d];
        for (a, x) in acc.iter().enumerate() {
            for (b, y) in row.iter().enumerate() {
                next[a + b] += x * y;
            }
        }
        acc = next;
    }
    acc.get(size).cloned().unwrap_or_default()
}

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

pub fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * BigUint::from(i))
}

fn pow(base: usize, e: usize) -> BigUint {
    BigUint::from(base).pow(e as u32)
}

/// Count and dimension of the special components of `F_d(X_{3,d})`.
pub fn special_f_d_x3d(d: usize) -> Result<(BigUint, usize), CensusError> {
    if d < 2 {
        return Err(CensusError::InvalidParams("need d >= 2".into()));
    }
    let c = binomial(d, 2);
    let f = factorial(d - 2);
    Ok((BigUint::from(2u32) * c.pow(3) * &f * &f, 2 * d - 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum ComponentType {
    A,
    B,
    C,
    D,
}

fn big_as_string<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComponentRow {
    #[serde(rename = "type")]
    pub kind: ComponentType,
    #[serde(serialize_with = "big_as_string")]
    pub count: BigUint,
    pub dimension: usize,
    /// Number of coordinate hyperplanes containing a general member plane.
    pub hyperplanes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComponentTable {
    pub r: usize,
    pub d: usize,
    pub k: usize,
    pub status: Provenance,
    pub rows: Vec<ComponentRow>,
}

impl ComponentTable {
    pub fn status_label(&self) -> &'static str {
        match self.status {
            Provenance::Proven(_) => "proven",
            Provenance::Conjectural => "conjectural",
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("type,count,dimension,status\n");
        for row in &self.rows {
            s.push_str(&format!("{:?},{},{},{}\n", row.kind, row.count, row.dimension, self.status_label()));
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("F_{}(X_{{{},{}}})", self.k, self.r, self.d);
        if self.status == Provenance::Conjectural {
            s.push_str("  [CONJECTURAL: relies on unproven splitting statements]");
        }
        s.push('\n');
        s.push_str(&format!("{:<6} {:>10} {:>12}  {}\n", "type", "dimension", "count", "general plane lies in"));
        for row in &self.rows {
            s.push_str(&format!(
                "{:<6} {:>10} {:>12}  {} coordinate hyperplanes\n",
                format!("{:?}", row.kind),
                row.dimension,
                row.count.to_string(),
                row.hyperplanes
            ));
        }
        s
    }
}

/// Whether the splitting statements behind the table are established.
pub fn census_validated(r: usize, d: usize, k: usize) -> bool {
    let base = (r - 2) * (d - 1);
    r <= 6 || d == 4 || (k > base + 1 && r <= d + 2) || (k == base + 1 && r <= d + 1)
}

/// Irreducible components of `F_k(X_{r,d})` for `k >= (r-2)(d-1)+1`.
pub fn component_census(r: usize, d: usize, k: usize) -> Result<ComponentTable, CensusError> {
    check_params(r, d)?;
    if r < 3 {
        return Err(CensusError::OutOfValidatedRange("the component tables need r >= 3".into()));
    }
    let base = (r - 2) * (d - 1) + 1;
    if k < base {
        return Err(CensusError::OutOfValidatedRange(format!("need k >= (r-2)(d-1)+1 = {base}")));
    }
    let status = if census_validated(r, d, k) {
        Provenance::Proven(if r <= 6 {
            Proof::SmallR
        } else if d == 4 {
            Proof::DegreeFour
        } else {
            Proof::LargeK
        })
    } else {
        Provenance::Conjectural
    };
    let mut rows = Vec::new();
    if fano_nonempty(r, d, k) {
        rows.push(ComponentRow {
            kind: ComponentType::A,
            count: pow(d, r),
            dimension: (k + 1) * (r * (d - 1) - (k + 1)),
            hyperplanes: r,
        });
        if k <= (r - 1) * (d - 1) {
            rows.push(ComponentRow {
                kind: ComponentType::B,
                count: binomial(r, 2) * pow(d, r - 2) * factorial(d),
                dimension: (d - 1) + (k + 1) * ((r - 1) * (d - 1) - k),
                hyperplanes: r - 2,
            });
        }
        if k == base {
            let (special, dim) = special_f_d_x3d(d)?;
            rows.push(ComponentRow {
                kind: ComponentType::C,
                count: binomial(r, 3) * pow(d, r - 3) * special,
                dimension: dim,
                hyperplanes: r - 3,
            });
            if r >= 4 {
                let multinomial = factorial(r) / (factorial(r - 4) * BigUint::from(4u32));
                let df = factorial(d);
                rows.push(ComponentRow {
                    kind: ComponentType::D,
                    count: multinomial * pow(d, r - 4) * &df * &df,
                    dimension: 2 * (d - 1),
                    hyperplanes: r - 4,
                });
            }
        }
    }
    Ok(ComponentTable { r, d, k, status, rows })
}
