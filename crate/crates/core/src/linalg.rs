//! Dense matrices and column vectors over GF(q): rank, inversion, solving,
//! stacking. Everything is exact; elimination pivots on the first nonzero
//! entry in column order.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::gf::{FieldElement, FieldSpec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("matrix is singular")]
    Singular,
    #[error("system is rank-deficient (rank {rank} < {cols} columns)")]
    RankDeficient { rank: usize, cols: usize },
    #[error("system is inconsistent")]
    Inconsistent,
}

/// Row-major matrix over one field.
#[derive(Clone, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    field: Arc<FieldSpec>,
    entries: Vec<FieldElement>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} over {}", self.rows, self.cols, self.field)?;
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|c| self[(r, c)].index().to_string())
                .collect();
            writeln!(f, "  [{}]", row.join(" "))?;
        }
        Ok(())
    }
}

impl Matrix {
    /// Build from row-major entries; panics if the element count or any
    /// entry's field disagrees.
    pub fn new(
        field: &Arc<FieldSpec>,
        rows: usize,
        cols: usize,
        entries: Vec<FieldElement>,
    ) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count mismatch");
        for e in &entries {
            assert_eq!(e.field().as_ref(), field.as_ref(), "mixed fields in matrix");
        }
        Matrix {
            rows,
            cols,
            field: Arc::clone(field),
            entries,
        }
    }

    /// Build from canonical element indices, row-major.
    pub fn from_indices(field: &Arc<FieldSpec>, rows: usize, cols: usize, idx: &[u32]) -> Self {
        assert_eq!(idx.len(), rows * cols, "entry count mismatch");
        let entries = idx
            .iter()
            .map(|&v| field.element(v).expect("index out of field range"))
            .collect();
        Matrix {
            rows,
            cols,
            field: Arc::clone(field),
            entries,
        }
    }

    pub fn zeros(field: &Arc<FieldSpec>, rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            field: Arc::clone(field),
            entries: vec![field.zero(); rows * cols],
        }
    }

    pub fn identity(field: &Arc<FieldSpec>, n: usize) -> Self {
        let mut m = Matrix::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, field.one());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn field(&self) -> &Arc<FieldSpec> {
        &self.field
    }

    pub fn set(&mut self, r: usize, c: usize, v: FieldElement) {
        assert!(r < self.rows && c < self.cols);
        assert_eq!(
            v.field().as_ref(),
            self.field.as_ref(),
            "mixed fields in matrix"
        );
        self.entries[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[FieldElement] {
        assert!(r < self.rows);
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(&self.field, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self[(r, c)].clone());
            }
        }
        out
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "shape mismatch"
        );
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.add(b))
            .collect();
        Matrix::new(&self.field, self.rows, self.cols, entries)
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "shape mismatch"
        );
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.sub(b))
            .collect();
        Matrix::new(&self.field, self.rows, self.cols, entries)
    }

    pub fn scale(&self, s: &FieldElement) -> Matrix {
        let entries = self.entries.iter().map(|a| a.mul(s)).collect();
        Matrix::new(&self.field, self.rows, self.cols, entries)
    }

    pub fn mat_mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "inner dimension mismatch");
        let mut out = Matrix::zeros(&self.field, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out[(i, j)].add(&a.mul(&other[(k, j)]));
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn mat_vec(&self, v: &ColumnVector) -> ColumnVector {
        assert_eq!(self.cols, v.len(), "dimension mismatch");
        let mut out = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let mut acc = self.field.zero();
            for (k, x) in v.entries().iter().enumerate() {
                let a = &self[(i, k)];
                if !a.is_zero() {
                    acc = acc.add(&a.mul(x));
                }
            }
            out.push(acc);
        }
        ColumnVector::new(&self.field, out)
    }

    /// Vertical concatenation; column counts must agree.
    pub fn stack(&self, bottom: &Matrix) -> Matrix {
        assert_eq!(self.cols, bottom.cols, "column count mismatch in stack");
        assert_eq!(
            self.field.as_ref(),
            bottom.field.as_ref(),
            "mixed fields in stack"
        );
        let mut entries = self.entries.clone();
        entries.extend(bottom.entries.iter().cloned());
        Matrix::new(&self.field, self.rows + bottom.rows, self.cols, entries)
    }

    /// Row rank via Gaussian elimination.
    pub fn rank(&self) -> usize {
        let mut work = self.clone();
        let mut rank = 0usize;
        for col in 0..work.cols {
            if rank == work.rows {
                break;
            }
            let pivot = (rank..work.rows).find(|&r| !work[(r, col)].is_zero());
            let Some(pivot) = pivot else { continue };
            work.swap_rows(rank, pivot);
            let inv = work[(rank, col)].inv().expect("pivot is nonzero");
            work.scale_row(rank, &inv);
            for r in 0..work.rows {
                if r != rank && !work[(r, col)].is_zero() {
                    let factor = work[(r, col)].clone();
                    work.sub_scaled_row(r, rank, &factor);
                }
            }
            rank += 1;
        }
        rank
    }

    /// Inverse of a square matrix. A singular input signals an
    /// MDS-condition failure upstream.
    pub fn inverse(&self) -> Result<Matrix, LinalgError> {
        assert_eq!(self.rows, self.cols, "inverse of a non-square matrix");
        let n = self.rows;
        let mut work = self.clone();
        let mut aug = Matrix::identity(&self.field, n);
        for col in 0..n {
            let pivot = (col..n).find(|&r| !work[(r, col)].is_zero());
            let Some(pivot) = pivot else {
                return Err(LinalgError::Singular);
            };
            work.swap_rows(col, pivot);
            aug.swap_rows(col, pivot);
            let inv = work[(col, col)].inv().expect("pivot is nonzero");
            work.scale_row(col, &inv);
            aug.scale_row(col, &inv);
            for r in 0..n {
                if r != col && !work[(r, col)].is_zero() {
                    let factor = work[(r, col)].clone();
                    work.sub_scaled_row(r, col, &factor);
                    aug.sub_scaled_row(r, col, &factor);
                }
            }
        }
        Ok(aug)
    }

    /// Solve M x = y for a system with full column rank (rows >= cols).
    pub fn solve(&self, y: &ColumnVector) -> Result<ColumnVector, LinalgError> {
        assert_eq!(self.rows, y.len(), "right-hand side length mismatch");
        let mut work = self.clone();
        let mut rhs: Vec<FieldElement> = y.entries().to_vec();
        let mut pivot_cols = Vec::new();
        let mut rank = 0usize;
        for col in 0..work.cols {
            if rank == work.rows {
                break;
            }
            let pivot = (rank..work.rows).find(|&r| !work[(r, col)].is_zero());
            let Some(pivot) = pivot else { continue };
            work.swap_rows(rank, pivot);
            rhs.swap(rank, pivot);
            let inv = work[(rank, col)].inv().expect("pivot is nonzero");
            work.scale_row(rank, &inv);
            rhs[rank] = rhs[rank].mul(&inv);
            for r in 0..work.rows {
                if r != rank && !work[(r, col)].is_zero() {
                    let factor = work[(r, col)].clone();
                    work.sub_scaled_row(r, rank, &factor);
                    rhs[r] = rhs[r].sub(&factor.mul(&rhs[rank]));
                }
            }
            pivot_cols.push(col);
            rank += 1;
        }
        if rank < work.cols {
            return Err(LinalgError::RankDeficient {
                rank,
                cols: work.cols,
            });
        }
        // any remaining rows must have been eliminated to zero = zero
        if rhs[rank..].iter().any(|v| !v.is_zero()) {
            return Err(LinalgError::Inconsistent);
        }
        let mut x = vec![self.field.zero(); work.cols];
        for (r, &c) in pivot_cols.iter().enumerate() {
            x[c] = rhs[r].clone();
        }
        Ok(ColumnVector::new(&self.field, x))
    }

    pub fn select_rows(&self, sel: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(&self.field, sel.len(), self.cols);
        for (i, &r) in sel.iter().enumerate() {
            for c in 0..self.cols {
                out.set(i, c, self[(r, c)].clone());
            }
        }
        out
    }

    pub fn select_cols(&self, sel: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(&self.field, self.rows, sel.len());
        for r in 0..self.rows {
            for (j, &c) in sel.iter().enumerate() {
                out.set(r, j, self[(r, c)].clone());
            }
        }
        out
    }

    /// Column indices where elimination places pivots; their span carries the
    /// row space, and for a full-row-rank matrix selecting them yields an
    /// invertible square submatrix.
    pub fn pivot_columns(&self) -> Vec<usize> {
        let mut work = self.clone();
        let mut pivots = Vec::new();
        let mut rank = 0usize;
        for col in 0..work.cols {
            if rank == work.rows {
                break;
            }
            let pivot = (rank..work.rows).find(|&r| !work[(r, col)].is_zero());
            let Some(pivot) = pivot else { continue };
            work.swap_rows(rank, pivot);
            let inv = work[(rank, col)].inv().expect("pivot is nonzero");
            work.scale_row(rank, &inv);
            for r in 0..work.rows {
                if r != rank && !work[(r, col)].is_zero() {
                    let factor = work[(r, col)].clone();
                    work.sub_scaled_row(r, rank, &factor);
                }
            }
            pivots.push(col);
            rank += 1;
        }
        pivots
    }

    /// True iff every row has exactly one nonzero entry, equal to one.
    pub fn rows_are_unit_basis(&self) -> bool {
        (0..self.rows).all(|r| {
            let nonzero: Vec<_> = self.row(r).iter().filter(|e| !e.is_zero()).collect();
            nonzero.len() == 1 && nonzero[0].is_one()
        })
    }

    /// True iff every column has exactly one nonzero entry.
    pub fn cols_have_single_nonzero(&self) -> bool {
        (0..self.cols).all(|c| self.col_nonzero_count(c) == 1)
    }

    pub fn col_nonzero_count(&self, c: usize) -> usize {
        (0..self.rows).filter(|&r| !self[(r, c)].is_zero()).count()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.entries.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    fn scale_row(&mut self, r: usize, s: &FieldElement) {
        for c in 0..self.cols {
            let v = self[(r, c)].mul(s);
            self.set(r, c, v);
        }
    }

    /// row r -= factor * row src
    fn sub_scaled_row(&mut self, r: usize, src: usize, factor: &FieldElement) {
        for c in 0..self.cols {
            let v = self[(r, c)].sub(&factor.mul(&self[(src, c)]));
            self.set(r, c, v);
        }
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = FieldElement;
    fn index(&self, (r, c): (usize, usize)) -> &FieldElement {
        assert!(r < self.rows && c < self.cols);
        &self.entries[r * self.cols + c]
    }
}

/// Column vector over one field.
#[derive(Clone, PartialEq, Eq)]
pub struct ColumnVector {
    field: Arc<FieldSpec>,
    entries: Vec<FieldElement>,
}

impl fmt::Debug for ColumnVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vals: Vec<String> = self.entries.iter().map(|e| e.index().to_string()).collect();
        write!(f, "col[{}]", vals.join(" "))
    }
}

impl ColumnVector {
    pub fn new(field: &Arc<FieldSpec>, entries: Vec<FieldElement>) -> Self {
        for e in &entries {
            assert_eq!(e.field().as_ref(), field.as_ref(), "mixed fields in vector");
        }
        ColumnVector {
            field: Arc::clone(field),
            entries,
        }
    }

    pub fn from_indices(field: &Arc<FieldSpec>, idx: &[u32]) -> Self {
        let entries = idx
            .iter()
            .map(|&v| field.element(v).expect("index out of field range"))
            .collect();
        ColumnVector {
            field: Arc::clone(field),
            entries,
        }
    }

    pub fn zeros(field: &Arc<FieldSpec>, len: usize) -> Self {
        ColumnVector {
            field: Arc::clone(field),
            entries: vec![field.zero(); len],
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn field(&self) -> &Arc<FieldSpec> {
        &self.field
    }

    pub fn entries(&self) -> &[FieldElement] {
        &self.entries
    }

    pub fn get(&self, i: usize) -> &FieldElement {
        &self.entries[i]
    }

    pub fn set(&mut self, i: usize, v: FieldElement) {
        assert_eq!(v.field().as_ref(), self.field.as_ref());
        self.entries[i] = v;
    }

    pub fn add(&self, other: &ColumnVector) -> ColumnVector {
        assert_eq!(self.len(), other.len());
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.add(b))
            .collect();
        ColumnVector::new(&self.field, entries)
    }

    pub fn sub(&self, other: &ColumnVector) -> ColumnVector {
        assert_eq!(self.len(), other.len());
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.sub(b))
            .collect();
        ColumnVector::new(&self.field, entries)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    /// Vertical concatenation.
    pub fn concat(&self, other: &ColumnVector) -> ColumnVector {
        assert_eq!(self.field.as_ref(), other.field.as_ref());
        let mut entries = self.entries.clone();
        entries.extend(other.entries.iter().cloned());
        ColumnVector::new(&self.field, entries)
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> ColumnVector {
        ColumnVector::new(&self.field, self.entries[range].to_vec())
    }
}
