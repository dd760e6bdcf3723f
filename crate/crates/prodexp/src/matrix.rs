//! Dense matrices over GF(2^t) with exact elimination-based kernels, plus a
//! bit-packed F_2 path that mirrors the generic algorithms step for step so
//! the two produce identical canonical answers.
//!
//! Reduced row echelon form is the canonical representative used everywhere:
//! pivot search scans rows top-down for the first nonzero entry, so results
//! are deterministic functions of the input.

use crate::field::Field;
use crate::{Error, Result};
use rand::Rng;

#[derive(Clone, PartialEq, Eq)]
pub struct Mat {
    field: Field,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl std::fmt::Debug for Mat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "Mat {}x{} over GF(2^{})", self.rows, self.cols, self.field.t())?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        Ok(())
    }
}

impl Mat {
    pub fn zero(field: Field, rows: usize, cols: usize) -> Mat {
        Mat { field, rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(field: Field, n: usize) -> Mat {
        let mut m = Mat::zero(field, n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    /// Like `from_rows` but keeps the ambient width when `rows` is empty.
    pub fn from_rows_with_cols(field: Field, rows: Vec<Vec<u64>>, cols: usize) -> Result<Mat> {
        if rows.is_empty() {
            return Ok(Mat::zero(field, 0, cols));
        }
        let m = Mat::from_rows(field, rows)?;
        if m.cols != cols {
            return Err(Error::Dimension(format!("expected {cols} columns, got {}", m.cols)));
        }
        Ok(m)
    }

    pub fn from_rows(field: Field, rows: Vec<Vec<u64>>) -> Result<Mat> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut data = Vec::with_capacity(r * c);
        for row in &rows {
            if row.len() != c {
                return Err(Error::Dimension("ragged rows".into()));
            }
            for &v in row {
                field.check_elem(v)?;
                data.push(v);
            }
        }
        Ok(Mat { field, rows: r, cols: c, data })
    }

    pub fn from_fn(field: Field, rows: usize, cols: usize, f: impl Fn(usize, usize) -> u64) -> Mat {
        let mut m = Mat::zero(field, rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    /// Reduced row echelon form together with the pivot columns.
    pub fn rref(&self) -> (Mat, Vec<usize>) {
        let f = self.field;
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| m.get(i, c) != 0) else { continue };
            m.swap_rows(r, p);
            let inv = f.inv(m.get(r, c)).expect("pivot entry is nonzero");
            for j in c..m.cols {
                m.set(r, j, f.mul(m.get(r, j), inv));
            }
            for i in 0..m.rows {
                if i != r && m.get(i, c) != 0 {
                    let factor = m.get(i, c);
                    for j in c..m.cols {
                        let v = f.sub(m.get(i, j), f.mul(factor, m.get(r, j)));
                        m.set(i, j, v);
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        if self.field.t() == 1 {
            BitMat::from_mat(self).rank()
        } else {
            self.rank_generic()
        }
    }

    pub(crate) fn rank_generic(&self) -> usize {
        self.rref().1.len()
    }

    /// Canonical basis (RREF rows) of {x : self * x^T = 0}.
    pub fn kernel_basis(&self) -> Mat {
        if self.field.t() == 1 {
            BitMat::from_mat(self).kernel_basis(self.field)
        } else {
            self.kernel_basis_generic()
        }
    }

    pub(crate) fn kernel_basis_generic(&self) -> Mat {
        let f = self.field;
        let (red, pivots) = self.rref();
        let raw = kernel_from_echelon(f, self.cols, &pivots, |i, j| red.get(i, j));
        raw.row_space_canonical()
    }

    /// One solution x of self * x = rhs (column-vector convention), free
    /// variables set to zero; None if the system is inconsistent.
    pub fn solve(&self, rhs: &[u64]) -> Result<Option<Vec<u64>>> {
        if rhs.len() != self.rows {
            return Err(Error::Dimension(format!(
                "rhs length {} vs {} rows",
                rhs.len(),
                self.rows
            )));
        }
        if self.field.t() == 1 {
            Ok(BitMat::from_mat_augmented(self, rhs).solve())
        } else {
            Ok(self.solve_generic(rhs))
        }
    }

    pub(crate) fn solve_generic(&self, rhs: &[u64]) -> Option<Vec<u64>> {
        let f = self.field;
        let mut aug = Mat::zero(f, self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug.set(i, j, self.get(i, j));
            }
            aug.set(i, self.cols, rhs[i]);
        }
        let (red, pivots) = aug.rref();
        if pivots.contains(&self.cols) {
            return None;
        }
        let mut x = vec![0u64; self.cols];
        for (i, &p) in pivots.iter().enumerate() {
            x[p] = red.get(i, self.cols);
        }
        Some(x)
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.field, self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn mul(&self, other: &Mat) -> Result<Mat> {
        if self.field != other.field {
            return Err(Error::MixedFields("matrix product"));
        }
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let f = self.field;
        let mut out = Mat::zero(f, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let v = f.add(out.get(i, j), f.mul(a, other.get(k, j)));
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    /// self * x for a column vector x.
    pub fn mul_vec(&self, x: &[u64]) -> Vec<u64> {
        assert_eq!(x.len(), self.cols, "vector length mismatch");
        let f = self.field;
        let mut out = vec![0u64; self.rows];
        for i in 0..self.rows {
            let mut acc = 0u64;
            for j in 0..self.cols {
                let a = self.get(i, j);
                if a != 0 && x[j] != 0 {
                    acc = f.add(acc, f.mul(a, x[j]));
                }
            }
            out[i] = acc;
        }
        out
    }

    /// x * self for a row vector x.
    pub fn vec_mul(&self, x: &[u64]) -> Vec<u64> {
        assert_eq!(x.len(), self.rows, "vector length mismatch");
        let f = self.field;
        let mut out = vec![0u64; self.cols];
        for i in 0..self.rows {
            if x[i] == 0 {
                continue;
            }
            for j in 0..self.cols {
                let a = self.get(i, j);
                if a != 0 {
                    out[j] = f.add(out[j], f.mul(x[i], a));
                }
            }
        }
        out
    }

    /// Kronecker product, row and column indices of `self` major.
    pub fn kron(&self, other: &Mat) -> Result<Mat> {
        if self.field != other.field {
            return Err(Error::MixedFields("kronecker product"));
        }
        let f = self.field;
        let mut out = Mat::zero(f, self.rows * other.rows, self.cols * other.cols);
        for i1 in 0..self.rows {
            for j1 in 0..self.cols {
                let a = self.get(i1, j1);
                if a == 0 {
                    continue;
                }
                for i2 in 0..other.rows {
                    for j2 in 0..other.cols {
                        let b = other.get(i2, j2);
                        if b != 0 {
                            out.set(
                                i1 * other.rows + i2,
                                j1 * other.cols + j2,
                                f.mul(a, b),
                            );
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn stack_rows(parts: &[&Mat]) -> Result<Mat> {
        let first = parts.first().ok_or_else(|| Error::Dimension("empty stack".into()))?;
        let field = first.field;
        let cols = first.cols;
        let mut rows = 0;
        for p in parts {
            if p.field != field {
                return Err(Error::MixedFields("row stack"));
            }
            if p.cols != cols {
                return Err(Error::Dimension("column count mismatch in stack".into()));
            }
            rows += p.rows;
        }
        let mut data = Vec::with_capacity(rows * cols);
        for p in parts {
            data.extend_from_slice(&p.data);
        }
        Ok(Mat { field, rows, cols, data })
    }

    pub fn select_columns(&self, keep: &[usize]) -> Mat {
        let mut out = Mat::zero(self.field, self.rows, keep.len());
        for i in 0..self.rows {
            for (jj, &j) in keep.iter().enumerate() {
                out.set(i, jj, self.get(i, j));
            }
        }
        out
    }

    pub fn select_rows(&self, keep: &[usize]) -> Mat {
        let mut out = Mat::zero(self.field, keep.len(), self.cols);
        for (ii, &i) in keep.iter().enumerate() {
            for j in 0..self.cols {
                out.set(ii, j, self.get(i, j));
            }
        }
        out
    }

    /// RREF with zero rows removed: the canonical basis of the row space.
    pub fn row_space_canonical(&self) -> Mat {
        let (red, pivots) = self.rref();
        red.select_rows(&(0..pivots.len()).collect::<Vec<_>>())
    }

    /// Residual of v after reduction by the rows of an RREF basis.
    pub fn reduce_by_rowspace(&self, v: &[u64]) -> Vec<u64> {
        assert_eq!(v.len(), self.cols);
        let f = self.field;
        let mut v = v.to_vec();
        for r in 0..self.rows {
            let Some(p) = (0..self.cols).find(|&c| self.get(r, c) != 0) else { continue };
            if v[p] != 0 {
                let factor = f.mul(v[p], f.inv(self.get(r, p)).unwrap());
                for c in p..self.cols {
                    v[c] = f.sub(v[c], f.mul(factor, self.get(r, c)));
                }
            }
        }
        v
    }

    pub fn rowspace_contains(&self, v: &[u64]) -> bool {
        self.reduce_by_rowspace(v).iter().all(|&x| x == 0)
    }

    /// dim(row space of a + row space of b).
    pub fn subspace_dim_sum(a: &Mat, b: &Mat) -> Result<usize> {
        Ok(Mat::stack_rows(&[a, b])?.rank())
    }

    /// Canonical basis of the intersection of two row spaces (Zassenhaus).
    pub fn subspace_intersect(a: &Mat, b: &Mat) -> Result<Mat> {
        if a.field != b.field {
            return Err(Error::MixedFields("subspace intersection"));
        }
        if a.cols != b.cols {
            return Err(Error::Dimension("ambient dimensions differ".into()));
        }
        let f = a.field;
        let n = a.cols;
        let mut block = Mat::zero(f, a.rows + b.rows, 2 * n);
        for i in 0..a.rows {
            for j in 0..n {
                block.set(i, j, a.get(i, j));
                block.set(i, n + j, a.get(i, j));
            }
        }
        for i in 0..b.rows {
            for j in 0..n {
                block.set(a.rows + i, j, b.get(i, j));
            }
        }
        let (red, pivots) = block.rref();
        // Rows whose pivot falls in the right half span the intersection.
        let mut rows = Vec::new();
        for (i, &p) in pivots.iter().enumerate() {
            if p >= n {
                rows.push(red.row(i)[n..].to_vec());
            }
        }
        Mat::from_rows_with_cols(f, rows, n).map(|m| m.row_space_canonical())
    }

    /// Canonical basis of {x in row space : x vanishes outside `allowed`}.
    pub fn subspace_intersect_coords(basis: &Mat, allowed: &[bool]) -> Mat {
        assert_eq!(allowed.len(), basis.cols);
        let outside: Vec<usize> =
            (0..basis.cols).filter(|&j| !allowed[j]).collect();
        let restricted = basis.select_columns(&outside);
        // Coefficient rows c with c * restricted = 0.
        let coeffs = restricted.transpose().kernel_basis();
        let combo = coeffs.mul(basis).expect("dimensions agree");
        combo.row_space_canonical()
    }

    pub fn random_uniform(field: Field, rows: usize, cols: usize, rng: &mut impl Rng) -> Mat {
        let mask = if field.t() == 64 { u64::MAX } else { (1u64 << field.t()) - 1 };
        let mut m = Mat::zero(field, rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, rng.gen::<u64>() & mask);
            }
        }
        m
    }

    /// Rejection-sample a matrix of full row rank.
    pub fn random_full_rank(
        field: Field,
        rows: usize,
        cols: usize,
        rng: &mut impl Rng,
    ) -> Result<Mat> {
        if rows > cols {
            return Err(Error::Dimension(format!(
                "cannot have row rank {rows} with only {cols} columns"
            )));
        }
        loop {
            let m = Mat::random_uniform(field, rows, cols, rng);
            if m.rank() == rows {
                return Ok(m);
            }
        }
    }
}

/// Shared construction of kernel vectors from an echelon form: one basis
/// vector per non-pivot column, unit there, solved entries at the pivots.
fn kernel_from_echelon(
    field: Field,
    cols: usize,
    pivots: &[usize],
    entry: impl Fn(usize, usize) -> u64,
) -> Mat {
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    let mut rows = Vec::with_capacity(free.len());
    for &j in &free {
        let mut v = vec![0u64; cols];
        v[j] = 1;
        for (i, &p) in pivots.iter().enumerate() {
            v[p] = field.sub(0, entry(i, j));
        }
        rows.push(v);
    }
    Mat::from_rows_with_cols(field, rows, cols).expect("kernel rows are rectangular")
}

/// Bit-packed matrix over F_2; algorithms mirror the generic path exactly.
pub(crate) struct BitMat {
    rows: usize,
    cols: usize,
    words: usize,
    data: Vec<u64>,
}

impl BitMat {
    pub(crate) fn from_mat(m: &Mat) -> BitMat {
        assert_eq!(m.field().t(), 1, "bit path is F_2 only");
        let words = m.cols().div_ceil(64).max(1);
        let mut b = BitMat { rows: m.rows(), cols: m.cols(), words, data: vec![0; m.rows() * words] };
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                if m.get(i, j) != 0 {
                    b.flip(i, j);
                }
            }
        }
        b
    }

    fn from_mat_augmented(m: &Mat, rhs: &[u64]) -> BitMat {
        let cols = m.cols() + 1;
        let words = cols.div_ceil(64);
        let mut b = BitMat { rows: m.rows(), cols, words, data: vec![0; m.rows() * words] };
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                if m.get(i, j) != 0 {
                    b.flip(i, j);
                }
            }
            if rhs[i] != 0 {
                b.flip(i, m.cols());
            }
        }
        b
    }

    #[inline]
    fn get(&self, r: usize, c: usize) -> bool {
        self.data[r * self.words + c / 64] >> (c % 64) & 1 == 1
    }

    #[inline]
    fn flip(&mut self, r: usize, c: usize) {
        self.data[r * self.words + c / 64] ^= 1 << (c % 64);
    }

    fn xor_rows(&mut self, target: usize, source: usize) {
        let (t, s) = (target * self.words, source * self.words);
        for w in 0..self.words {
            let v = self.data[s + w];
            self.data[t + w] ^= v;
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for w in 0..self.words {
            self.data.swap(a * self.words + w, b * self.words + w);
        }
    }

    fn rref_in_place(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| self.get(i, c)) else { continue };
            self.swap_rows(r, p);
            for i in 0..self.rows {
                if i != r && self.get(i, c) {
                    self.xor_rows(i, r);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    fn rank(mut self) -> usize {
        self.rref_in_place().len()
    }

    fn kernel_basis(mut self, field: Field) -> Mat {
        let pivots = self.rref_in_place();
        let cols = self.cols;
        let raw = kernel_from_echelon(field, cols, &pivots, |i, j| self.get(i, j) as u64);
        // Canonicalize along the same route as the generic path.
        let bit = BitMat::from_mat(&raw);
        bit.row_space_canonical(field)
    }

    fn row_space_canonical(mut self, field: Field) -> Mat {
        let pivots = self.rref_in_place();
        let mut rows = Vec::with_capacity(pivots.len());
        for i in 0..pivots.len() {
            rows.push((0..self.cols).map(|j| self.get(i, j) as u64).collect());
        }
        Mat::from_rows_with_cols(field, rows, self.cols).expect("rectangular")
    }

    /// Solve with the last column as the right-hand side.
    fn solve(mut self) -> Option<Vec<u64>> {
        let pivots = self.rref_in_place();
        let n = self.cols - 1;
        if pivots.contains(&n) {
            return None;
        }
        let mut x = vec![0u64; n];
        for (i, &p) in pivots.iter().enumerate() {
            x[p] = self.get(i, n) as u64;
        }
        Some(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn f2() -> Field {
        Field::new(1).unwrap()
    }

    fn gf4() -> Field {
        Field::new(2).unwrap()
    }

    fn mat_from_bits(field: Field, rows: usize, cols: usize, bits: u32) -> Mat {
        Mat::from_fn(field, rows, cols, |i, j| (bits >> (i * cols + j) & 1) as u64)
    }

    #[test]
    fn exhaustive_3x3_f2_rank_identities() {
        for bits in 0u32..512 {
            let m = mat_from_bits(f2(), 3, 3, bits);
            let k = m.kernel_basis();
            assert_eq!(m.rank(), m.transpose().rank(), "{m:?}");
            assert_eq!(m.rank() + k.rows(), 3, "{m:?}");
            for r in 0..k.rows() {
                assert!(m.mul_vec(k.row(r)).iter().all(|&v| v == 0));
            }
            assert_eq!(m.rank(), m.rank_generic());
            assert_eq!(k, m.kernel_basis_generic());
        }
    }

    #[test]
    fn kernel_of_full_rank_3x5_over_gf4() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let m = Mat::random_full_rank(gf4(), 3, 5, &mut rng).unwrap();
        let k = m.kernel_basis();
        assert_eq!(k.rows(), 2);
        for r in 0..k.rows() {
            assert!(m.mul_vec(k.row(r)).iter().all(|&v| v == 0));
        }
    }

    #[test]
    fn kron_conventions() {
        let f = gf4();
        let h = Mat::from_rows(f, vec![vec![1, 2], vec![3, 1]]).unwrap();
        let eye = Mat::identity(f, 2);
        // identity (x) H = block diagonal, blocks in row-major order.
        let blockdiag = eye.kron(&h).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(blockdiag.get(i, j), h.get(i, j));
                assert_eq!(blockdiag.get(2 + i, 2 + j), h.get(i, j));
                assert_eq!(blockdiag.get(i, 2 + j), 0);
                assert_eq!(blockdiag.get(2 + i, j), 0);
            }
        }
        // Entry formula with the left factor major.
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let a = Mat::random_uniform(f, 2, 3, &mut rng);
        let b = Mat::random_uniform(f, 3, 2, &mut rng);
        let k = a.kron(&b).unwrap();
        for i1 in 0..2 {
            for i2 in 0..3 {
                for j1 in 0..3 {
                    for j2 in 0..2 {
                        assert_eq!(
                            k.get(i1 * 3 + i2, j1 * 2 + j2),
                            f.mul(a.get(i1, j1), b.get(i2, j2))
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn kron_mixed_product_property() {
        let f = gf4();
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        for _ in 0..20 {
            let a = Mat::random_uniform(f, 2, 2, &mut rng);
            let b = Mat::random_uniform(f, 2, 2, &mut rng);
            let c = Mat::random_uniform(f, 2, 2, &mut rng);
            let d = Mat::random_uniform(f, 2, 2, &mut rng);
            let lhs = a.kron(&b).unwrap().mul(&c.kron(&d).unwrap()).unwrap();
            let rhs = a.mul(&c).unwrap().kron(&b.mul(&d).unwrap()).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn solve_finds_solutions_and_detects_inconsistency() {
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        for t in [1u32, 2] {
            let f = Field::new(t).unwrap();
            for _ in 0..200 {
                let rows = rng.gen_range(1..=5);
                let cols = rng.gen_range(1..=5);
                let m = Mat::random_uniform(f, rows, cols, &mut rng);
                let x: Vec<u64> =
                    (0..cols).map(|_| rng.gen::<u64>() & ((1 << t) - 1)).collect();
                let b = m.mul_vec(&x);
                let sol = m.solve(&b).unwrap().expect("consistent by construction");
                assert_eq!(m.mul_vec(&sol), b);
                let r: Vec<u64> =
                    (0..rows).map(|_| rng.gen::<u64>() & ((1 << t) - 1)).collect();
                if let Some(sol) = m.solve(&r).unwrap() {
                    assert_eq!(m.mul_vec(&sol), r);
                }
            }
        }
    }

    #[test]
    fn repetition_code_has_no_words_confined_to_two_coords() {
        let basis = Mat::from_rows(f2(), vec![vec![1, 1, 1]]).unwrap();
        let inter = Mat::subspace_intersect_coords(&basis, &[false, true, true]);
        assert_eq!(inter.rows(), 0);
        let full = Mat::subspace_intersect_coords(&basis, &[true, true, true]);
        assert_eq!(full.rows(), 1);
    }

    #[test]
    fn zassenhaus_matches_exhaustive_intersection() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for t in [1u32, 2] {
            let f = Field::new(t).unwrap();
            let q = 1u64 << t;
            for _ in 0..20 {
                let a = Mat::random_uniform(f, 2, 4, &mut rng).row_space_canonical();
                let b = Mat::random_uniform(f, 2, 4, &mut rng).row_space_canonical();
                let inter = Mat::subspace_intersect(&a, &b).unwrap();
                // Enumerate the intersection by brute force.
                let mut members = Vec::new();
                for idx in 0..q.pow(a.rows() as u32) {
                    let mut v = vec![0u64; 4];
                    let mut ii = idx;
                    let mut coef = vec![0u64; a.rows()];
                    for c in coef.iter_mut() {
                        *c = ii % q;
                        ii /= q;
                    }
                    for (r, &cf) in coef.iter().enumerate() {
                        for j in 0..4 {
                            v[j] = f.add(v[j], f.mul(cf, a.get(r, j)));
                        }
                    }
                    if b.rowspace_contains(&v) && v.iter().any(|&x| x != 0) {
                        members.push(v);
                    }
                }
                for v in &members {
                    assert!(inter.rowspace_contains(v));
                }
                let expected_dim = if members.is_empty() {
                    0
                } else {
                    // |U| = q^dim counting zero.
                    ((members.len() + 1) as f64).log(q as f64).round() as usize
                };
                assert_eq!(inter.rows(), expected_dim);
                // Dimension formula ties intersection to sum.
                let sum_dim = Mat::subspace_dim_sum(&a, &b).unwrap();
                assert_eq!(a.rows() + b.rows(), sum_dim + inter.rows());
            }
        }
    }

    #[test]
    fn bit_and_generic_paths_agree_on_10k_random_matrices() {
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        let f = f2();
        for _ in 0..10_000 {
            let rows = rng.gen_range(0..=6);
            let cols = rng.gen_range(1..=6);
            let m = Mat::random_uniform(f, rows, cols, &mut rng);
            assert_eq!(m.rank(), m.rank_generic());
            assert_eq!(m.kernel_basis(), m.kernel_basis_generic());
            let rhs: Vec<u64> = (0..rows).map(|_| rng.gen_range(0..2)).collect();
            assert_eq!(m.solve(&rhs).unwrap(), m.solve_generic(&rhs));
        }
    }

    #[test]
    fn full_rank_2x2_acceptance_rate() {
        // 6 of the 16 binary 2x2 matrices are invertible.
        let mut count = 0;
        for bits in 0u32..16 {
            if mat_from_bits(f2(), 2, 2, bits).rank() == 2 {
                count += 1;
            }
        }
        assert_eq!(count, 6);
        // Uniform sampling should hit that rate; 3 sigma around 600/1600.
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let hits = (0..1600)
            .filter(|_| Mat::random_uniform(f2(), 2, 2, &mut rng).rank() == 2)
            .count();
        assert!((542..=658).contains(&hits), "hits={hits}");
        // And the rejection sampler only returns invertible matrices.
        for _ in 0..50 {
            assert_eq!(Mat::random_full_rank(f2(), 2, 2, &mut rng).unwrap().rank(), 2);
        }
    }

    #[test]
    fn empty_shapes_are_consistent() {
        let m = Mat::zero(gf4(), 0, 3);
        assert_eq!(m.rank(), 0);
        assert_eq!(m.kernel_basis(), Mat::identity(gf4(), 3));
        let m = Mat::zero(gf4(), 3, 0);
        assert_eq!(m.rank(), 0);
        assert_eq!(m.kernel_basis().rows(), 0);
        let sol = Mat::zero(gf4(), 0, 2).solve(&[]).unwrap();
        assert_eq!(sol, Some(vec![0, 0]));
    }

    #[test]
    fn rref_is_idempotent_and_rank_bounded() {
        let mut rng = ChaCha12Rng::seed_from_u64(14);
        for t in [1u32, 2, 3] {
            let f = Field::new(t).unwrap();
            for _ in 0..100 {
                let rows = rng.gen_range(1..=5);
                let cols = rng.gen_range(1..=5);
                let m = Mat::random_uniform(f, rows, cols, &mut rng);
                assert!(m.rank() <= rows.min(cols));
                let (r1, p1) = m.rref();
                let (r2, p2) = r1.rref();
                assert_eq!(r1, r2);
                assert_eq!(p1, p2);
                let other = Mat::random_uniform(f, cols, 4, &mut rng);
                let prod = m.mul(&other).unwrap();
                assert!(prod.rank() <= m.rank().min(other.rank()));
            }
        }
    }

    #[test]
    fn mixed_field_operations_error() {
        let a = Mat::identity(f2(), 2);
        let b = Mat::identity(gf4(), 2);
        assert!(matches!(a.mul(&b), Err(Error::MixedFields(_))));
        assert!(matches!(a.kron(&b), Err(Error::MixedFields(_))));
        assert!(matches!(Mat::stack_rows(&[&a, &b]), Err(Error::MixedFields(_))));
    }
}
