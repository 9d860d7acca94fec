//! Deterministic compressed-sparse-column assembly.
//!
//! Triplets are summed in insertion order after a stable sort, so assembling
//! the same contributions always produces bit-identical matrices. Pushing
//! each off-diagonal pair with [`TripletBuilder::push_sym`] makes the result
//! exactly symmetric.

use faer::sparse::{SparseColMat, SymbolicSparseColMat};

#[derive(Clone, Debug, Default)]
pub struct TripletBuilder {
    n_rows: usize,
    n_cols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(n_rows: usize, n_cols: usize, capacity: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            entries: Vec::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.n_rows && col < self.n_cols);
        self.entries.push((row, col, value));
    }

    /// Adds `value` at `(row, col)` and at `(col, row)`.
    pub fn push_sym(&mut self, row: usize, col: usize, value: f64) {
        self.push(row, col, value);
        if row != col {
            self.push(col, row, value);
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn build(mut self) -> CscMatrix {
        self.entries.sort_by_key(|&(r, c, _)| (c, r));
        let mut col_ptr = vec![0usize; self.n_cols + 1];
        let mut row_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in &self.entries {
            if last == Some((r, c)) {
                *values.last_mut().expect("nonempty") += v;
            } else {
                row_idx.push(r);
                values.push(v);
                col_ptr[c + 1] += 1;
                last = Some((r, c));
            }
        }
        for c in 0..self.n_cols {
            col_ptr[c + 1] += col_ptr[c];
        }
        CscMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            col_ptr,
            row_idx,
            values,
        }
    }
}

/// Square or rectangular CSC matrix with sorted, unique row indices.
#[derive(Clone, Debug, PartialEq)]
pub struct CscMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CscMatrix {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Stored `(row, value)` pairs of column `c`.
    pub fn column(&self, c: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.col_ptr[c]..self.col_ptr[c + 1];
        self.row_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let range = self.col_ptr[col]..self.col_ptr[col + 1];
        match self.row_idx[range.clone()].binary_search(&row) {
            Ok(i) => self.values[range.start + i],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        for (c, &xc) in x.iter().enumerate().take(self.n_cols) {
            for (r, v) in self.column(c) {
                y[r] += v * xc;
            }
        }
        y
    }

    pub fn transpose_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_cols)
            .map(|c| self.column(c).map(|(r, v)| v * x[r]).sum())
            .collect()
    }

    /// Maximum absolute column sum.
    pub fn norm_1(&self) -> f64 {
        (0..self.n_cols)
            .map(|c| self.column(c).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// True when `A[i][j]` and `A[j][i]` are bitwise equal for every stored
    /// entry.
    pub fn is_exactly_symmetric(&self) -> bool {
        self.n_rows == self.n_cols
            && (0..self.n_cols).all(|c| {
                self.column(c)
                    .all(|(r, v)| self.get(c, r).to_bits() == v.to_bits())
            })
    }

    pub fn to_faer(&self) -> SparseColMat<usize, f64> {
        let symbolic = SymbolicSparseColMat::new_checked(
            self.n_rows,
            self.n_cols,
            self.col_ptr.clone(),
            None,
            self.row_idx.clone(),
        );
        SparseColMat::new(symbolic, self.values.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sums_duplicates_in_order() {
        let mut t = TripletBuilder::new(3, 3);
        t.push(2, 0, 1.0);
        t.push(0, 0, 2.0);
        t.push(2, 0, 0.5);
        t.push_sym(1, 2, -1.0);
        t.push_sym(1, 1, 4.0);
        let a = t.build();
        assert_eq!(a.nnz(), 5);
        assert_eq!(a.get(2, 0), 1.5);
        assert_eq!(a.get(0, 2), 0.0);
        assert_eq!(a.get(1, 2), -1.0);
        assert_eq!(a.get(2, 1), -1.0);
        assert_eq!(a.col_ptr, vec![0, 2, 4, 5]);
        assert_eq!(a.mul_vec(&[1.0, 1.0, 1.0]), vec![2.0, 3.0, 0.5]);
        assert_eq!(a.transpose_mul_vec(&[1.0, 1.0, 1.0]), vec![3.5, 3.0, -1.0]);
        assert_eq!(a.norm_1(), 5.0);
        assert!(!a.is_exactly_symmetric());
    }

    #[test]
    fn symmetric_pushes_stay_symmetric() {
        let mut t = TripletBuilder::new(4, 4);
        let vals = [0.1, 0.2, 0.3, 1e-17, 7.0 / 3.0];
        for (i, &v) in vals.iter().enumerate() {
            t.push_sym(i % 4, (i * 3 + 1) % 4, v);
            t.push_sym((i + 2) % 4, (i * 3 + 1) % 4, v * 1.1);
        }
        let a = t.build();
        assert!(a.is_exactly_symmetric());
        assert_eq!(a.to_faer().compute_nnz(), a.nnz());
    }
}
