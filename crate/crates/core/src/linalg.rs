//! Dense exact linear algebra over a [`FieldCtx`].

use thiserror::Error;

use crate::field::{FieldCtx, FieldElement};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("ragged matrix: row {row} has {got} entries, expected {expected}")]
    Ragged {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("entry from the wrong field")]
    Context,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix {
    ctx: FieldCtx,
    ncols: usize,
    rows: Vec<Vec<FieldElement>>,
}

impl Matrix {
    pub fn new(ctx: FieldCtx, ncols: usize, rows: Vec<Vec<FieldElement>>) -> Result<Self, LinalgError> {
        for (i, r) in rows.iter().enumerate() {
            if r.len() != ncols {
                return Err(LinalgError::Ragged {
                    row: i,
                    got: r.len(),
                    expected: ncols,
                });
            }
            if r.iter().any(|e| e.ctx() != ctx) {
                return Err(LinalgError::Context);
            }
        }
        Ok(Matrix { ctx, ncols, rows })
    }

    pub fn zeros(ctx: FieldCtx, nrows: usize, ncols: usize) -> Self {
        Matrix {
            ctx,
            ncols,
            rows: vec![vec![ctx.zero(); ncols]; nrows],
        }
    }

    pub fn identity(ctx: FieldCtx, n: usize) -> Self {
        let mut m = Matrix::zeros(ctx, n, n);
        for i in 0..n {
            m.rows[i][i] = ctx.one();
        }
        m
    }

    pub fn from_i64(ctx: FieldCtx, rows: &[Vec<i64>]) -> Self {
        let ncols = rows.first().map_or(0, Vec::len);
        let rows = rows
            .iter()
            .map(|r| r.iter().map(|&v| ctx.from_i64(v)).collect())
            .collect();
        Matrix::new(ctx, ncols, rows).expect("rectangular input")
    }

    pub fn ctx(&self) -> FieldCtx {
        self.ctx
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn rows(&self) -> &[Vec<FieldElement>] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<Vec<FieldElement>> {
        self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> &FieldElement {
        &self.rows[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: FieldElement) {
        self.rows[i][j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<FieldElement> {
        self.rows.iter().map(|r| r[j].clone()).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let rows = (0..self.ncols).map(|j| self.column(j)).collect();
        Matrix {
            ctx: self.ctx,
            ncols: self.nrows(),
            rows,
        }
    }

    pub fn stack(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        if self.ncols != other.ncols {
            return Err(LinalgError::Dimension(format!(
                "cannot stack {} and {} columns",
                self.ncols, other.ncols
            )));
        }
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        Ok(Matrix {
            ctx: self.ctx,
            ncols: self.ncols,
            rows,
        })
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        if self.ncols != other.nrows() {
            return Err(LinalgError::Dimension("product shape".into()));
        }
        let rows = self
            .rows
            .iter()
            .map(|r| {
                (0..other.ncols)
                    .map(|j| {
                        r.iter()
                            .zip(&other.rows)
                            .fold(self.ctx.zero(), |acc, (a, orow)| &acc + &(a * &orow[j]))
                    })
                    .collect()
            })
            .collect();
        Ok(Matrix {
            ctx: self.ctx,
            ncols: other.ncols,
            rows,
        })
    }

    pub fn mul_vec(&self, v: &[FieldElement]) -> Vec<FieldElement> {
        self.rows
            .iter()
            .map(|r| {
                r.iter()
                    .zip(v)
                    .fold(self.ctx.zero(), |acc, (a, b)| &acc + &(a * b))
            })
            .collect()
    }

    /// Reduced row echelon form in place; returns the pivot columns.
    pub fn rref_in_place(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.ncols {
            if r == self.rows.len() {
                break;
            }
            let Some(pr) = (r..self.rows.len()).find(|&i| !self.rows[i][c].is_zero()) else {
                continue;
            };
            self.rows.swap(r, pr);
            let inv = self.rows[r][c].inv().expect("pivot is nonzero");
            for e in self.rows[r].iter_mut() {
                *e = &*e * &inv;
            }
            let pivot_row = self.rows[r].clone();
            for i in 0..self.rows.len() {
                if i != r && !self.rows[i][c].is_zero() {
                    let f = self.rows[i][c].clone();
                    for (e, p) in self.rows[i].iter_mut().zip(&pivot_row) {
                        *e = &*e - &(&f * p);
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rref(&self) -> (Matrix, Vec<usize>) {
        let mut m = self.clone();
        let p = m.rref_in_place();
        (m, p)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of the row space (nonzero rows of the rref).
    pub fn row_space(&self) -> Matrix {
        let (m, p) = self.rref();
        Matrix {
            ctx: self.ctx,
            ncols: self.ncols,
            rows: m.rows.into_iter().take(p.len()).collect(),
        }
    }

    /// Basis of `{x : A x = 0}` as rows.
    pub fn kernel(&self) -> Matrix {
        let (m, pivots) = self.rref();
        let free: Vec<usize> = (0..self.ncols).filter(|c| !pivots.contains(c)).collect();
        let rows = free
            .iter()
            .map(|&f| {
                let mut v = vec![self.ctx.zero(); self.ncols];
                v[f] = self.ctx.one();
                for (i, &pc) in pivots.iter().enumerate() {
                    v[pc] = -&m.rows[i][f];
                }
                v
            })
            .collect();
        Matrix {
            ctx: self.ctx,
            ncols: self.ncols,
            rows,
        }
    }

    /// One solution of `A x = b`, if any.
    pub fn solve(&self, b: &[FieldElement]) -> Result<Option<Vec<FieldElement>>, LinalgError> {
        if b.len() != self.nrows() {
            return Err(LinalgError::Dimension("right-hand side length".into()));
        }
        let rows = self
            .rows
            .iter()
            .zip(b)
            .map(|(r, bi)| {
                let mut r = r.clone();
                r.push(bi.clone());
                r
            })
            .collect();
        let mut aug = Matrix {
            ctx: self.ctx,
            ncols: self.ncols + 1,
            rows,
        };
        let pivots = aug.rref_in_place();
        if pivots.last() == Some(&self.ncols) {
            return Ok(None);
        }
        let mut x = vec![self.ctx.zero(); self.ncols];
        for (i, &pc) in pivots.iter().enumerate() {
            x[pc] = aug.rows[i][self.ncols].clone();
        }
        Ok(Some(x))
    }

    /// Whether `v` lies in the row space.
    pub fn row_space_contains(&self, v: &[FieldElement]) -> bool {
        let mut rows = self.rows.clone();
        rows.push(v.to_vec());
        let m = Matrix {
            ctx: self.ctx,
            ncols: self.ncols,
            rows,
        };
        m.rank() == self.rank()
    }

    /// Basis of the intersection of two row spaces.
    pub fn row_space_intersection(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        if self.ncols != other.ncols {
            return Err(LinalgError::Dimension("intersection of different ambients".into()));
        }
        let a = self.row_space();
        let b = other.row_space();
        // Solve sum_i s_i a_i - sum_j t_j b_j = 0, then map s back through a.
        let combined = a.stack(&b)?.transpose();
        let ker = combined.kernel();
        let mut rows = Vec::new();
        for k in ker.rows() {
            let v: Vec<FieldElement> = (0..self.ncols)
                .map(|c| {
                    a.rows
                        .iter()
                        .zip(k)
                        .fold(self.ctx.zero(), |acc, (ar, s)| &acc + &(s * &ar[c]))
                })
                .collect();
            rows.push(v);
        }
        Ok(Matrix {
            ctx: self.ctx,
            ncols: self.ncols,
            rows,
        }
        .row_space())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> FieldCtx {
        FieldCtx::rationals()
    }

    #[test]
    fn rank_and_kernel() {
        let m = Matrix::from_i64(q(), &[vec![1, 2, 3], vec![2, 4, 6], vec![1, 0, 1]]);
        assert_eq!(m.rank(), 2);
        let k = m.kernel();
        assert_eq!(k.nrows(), 1);
        let prod = m.mul_vec(&k.rows()[0]);
        assert!(prod.iter().all(FieldElement::is_zero));
    }

    #[test]
    fn rank_depends_on_characteristic() {
        let rows = vec![vec![1, 1], vec![1, -1]];
        assert_eq!(Matrix::from_i64(q(), &rows).rank(), 2);
        let f2 = FieldCtx::prime(2).unwrap();
        assert_eq!(Matrix::from_i64(f2, &rows).rank(), 1);
    }

    #[test]
    fn solve_consistent_and_inconsistent() {
        let m = Matrix::from_i64(q(), &[vec![1, 1], vec![2, 2]]);
        let ok = m.solve(&[q().from_i64(1), q().from_i64(2)]).unwrap();
        assert!(ok.is_some());
        let bad = m.solve(&[q().from_i64(1), q().from_i64(3)]).unwrap();
        assert!(bad.is_none());
    }

    #[test]
    fn intersection_of_planes() {
        let a = Matrix::from_i64(q(), &[vec![1, 0, 0], vec![0, 1, 0]]);
        let b = Matrix::from_i64(q(), &[vec![0, 1, 0], vec![0, 0, 1]]);
        let i = a.row_space_intersection(&b).unwrap();
        assert_eq!(i.nrows(), 1);
        assert!(i.row_space_contains(&[q().zero(), q().one(), q().zero()]));
    }

    #[test]
    fn ragged_rejected() {
        let r = Matrix::new(q(), 2, vec![vec![q().one()]]);
        assert!(matches!(r, Err(LinalgError::Ragged { .. })));
    }
}
