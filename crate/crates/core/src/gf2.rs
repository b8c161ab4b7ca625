//! Dense bit-packed linear algebra over GF(2).
//!
//! Everything downstream (parity checks, errors, syndromes, logicals) lives in
//! these two types. Matrices are immutable values; elimination always works on
//! a copy, with first-nonzero pivoting in left-to-right column order so that
//! ranks, kernels and solutions are reproducible across runs and platforms.

use std::fmt;

/// A fixed-length vector over GF(2), packed 64 bits per word.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

#[inline]
fn words_for(len: usize) -> usize {
    len.div_ceil(64)
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    /// Builds a vector from 0/1 entries.
    pub fn from_bits(bits: &[u8]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b != 0 {
                v.set(i, true);
            }
        }
        v
    }

    pub fn from_support(len: usize, support: &[usize]) -> Self {
        let mut v = Self::zeros(len);
        for &i in support {
            v.set(i, true);
        }
        v
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i & 63);
        if value {
            self.words[i >> 6] |= mask;
        } else {
            self.words[i >> 6] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        self.words[i >> 6] ^= 1u64 << (i & 63);
    }

    /// Number of set bits.
    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Index of the lowest set bit, if any.
    pub fn first_one(&self) -> Option<usize> {
        self.words
            .iter()
            .position(|&w| w != 0)
            .map(|wi| (wi << 6) | self.words[wi].trailing_zeros() as usize)
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn xor_assign(&mut self, other: &BitVector) {
        assert_eq!(self.len, other.len, "xor of unequal-length vectors");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    /// Parity of the overlap `<self, other>` over GF(2).
    pub fn dot(&self, other: &BitVector) -> bool {
        assert_eq!(self.len, other.len, "dot of unequal-length vectors");
        let mut acc = 0u64;
        for (a, b) in self.words.iter().zip(&other.words) {
            acc ^= a & b;
        }
        acc.count_ones() & 1 == 1
    }

    /// Indices of set bits, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.ones().collect()
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some((wi << 6) | b)
                }
            })
        })
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }

    /// Concatenation `[self | other]`.
    pub fn concat(&self, other: &BitVector) -> BitVector {
        let mut out = BitVector::zeros(self.len + other.len);
        for i in self.ones() {
            out.set(i, true);
        }
        for i in other.ones() {
            out.set(self.len + i, true);
        }
        out
    }

    /// The sub-vector at the given index range.
    pub fn slice(&self, range: std::ops::Range<usize>) -> BitVector {
        let mut out = BitVector::zeros(range.len());
        for (j, i) in range.enumerate() {
            if self.get(i) {
                out.set(j, true);
            }
        }
        out
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            write!(f, "{}", if self.get(i) { '1' } else { '0' })?;
        }
        Ok(())
    }
}

/// A dense matrix over GF(2) with bit-packed rows.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        Self {
            rows,
            cols,
            stride,
            data: vec![0; rows * stride],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn from_rows(rows: &[BitVector]) -> Self {
        let cols = rows.first().map_or(0, BitVector::len);
        let mut m = Self::zeros(rows.len(), cols);
        for (r, v) in rows.iter().enumerate() {
            assert_eq!(v.len(), cols, "rows of unequal length");
            m.row_mut(r).copy_from_slice(v.words());
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        debug_assert!(r < self.rows && c < self.cols);
        (self.data[r * self.stride + (c >> 6)] >> (c & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        debug_assert!(r < self.rows && c < self.cols);
        let idx = r * self.stride + (c >> 6);
        let mask = 1u64 << (c & 63);
        if value {
            self.data[idx] |= mask;
        } else {
            self.data[idx] &= !mask;
        }
    }

    #[inline]
    fn row_slice(&self, r: usize) -> &[u64] {
        &self.data[r * self.stride..(r + 1) * self.stride]
    }

    #[inline]
    fn row_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.data[r * self.stride..(r + 1) * self.stride]
    }

    pub fn row(&self, r: usize) -> BitVector {
        BitVector {
            len: self.cols,
            words: self.row_slice(r).to_vec(),
        }
    }

    pub fn column(&self, c: usize) -> BitVector {
        let mut v = BitVector::zeros(self.rows);
        for r in 0..self.rows {
            if self.get(r, c) {
                v.set(r, true);
            }
        }
        v
    }

    pub fn row_weight(&self, r: usize) -> usize {
        self.row_slice(r).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }

    fn xor_rows(&mut self, target: usize, source: usize) {
        let (a, b) = if target < source {
            let (lo, hi) = self.data.split_at_mut(source * self.stride);
            (
                &mut lo[target * self.stride..(target + 1) * self.stride],
                &hi[..self.stride],
            )
        } else {
            let (lo, hi) = self.data.split_at_mut(target * self.stride);
            (
                &mut hi[..self.stride],
                &lo[source * self.stride..(source + 1) * self.stride],
            )
        };
        for (x, y) in a.iter_mut().zip(b) {
            *x ^= y;
        }
    }

    pub fn xor_row_with(&mut self, r: usize, v: &BitVector) {
        assert_eq!(v.len(), self.cols);
        for (x, y) in self.row_mut(r).iter_mut().zip(v.words()) {
            *x ^= y;
        }
    }

    /// Matrix-vector product `M . v` over GF(2).
    pub fn mul_vec(&self, v: &BitVector) -> BitVector {
        assert_eq!(v.len(), self.cols, "mul_vec dimension mismatch");
        let mut out = BitVector::zeros(self.rows);
        for r in 0..self.rows {
            let mut acc = 0u64;
            for (a, b) in self.row_slice(r).iter().zip(v.words()) {
                acc ^= a & b;
            }
            if acc.count_ones() & 1 == 1 {
                out.set(r, true);
            }
        }
        out
    }

    /// Matrix product `self . other` over GF(2).
    pub fn mat_mul(&self, other: &BitMatrix) -> BitMatrix {
        assert_eq!(self.cols, other.rows, "mat_mul dimension mismatch");
        let mut out = BitMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for c in self.row(r).ones() {
                out.xor_rows_external(r, other, c);
            }
        }
        out
    }

    fn xor_rows_external(&mut self, target: usize, other: &BitMatrix, source: usize) {
        for (x, y) in self.row_mut(target).iter_mut().zip(other.row_slice(source)) {
            *x ^= y;
        }
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut out = BitMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in self.row(r).ones() {
                out.set(c, r, true);
            }
        }
        out
    }

    /// Stacks `self` on top of `other`.
    pub fn vstack(&self, other: &BitMatrix) -> BitMatrix {
        assert_eq!(self.cols, other.cols, "vstack column mismatch");
        let mut out = BitMatrix::zeros(self.rows + other.rows, self.cols);
        out.data[..self.data.len()].copy_from_slice(&self.data);
        out.data[self.data.len()..].copy_from_slice(&other.data);
        out
    }

    /// Stacks `self` on top of a single extra row.
    pub fn vstack_row(&self, row: &BitVector) -> BitMatrix {
        assert_eq!(row.len(), self.cols, "vstack row length mismatch");
        let mut out = BitMatrix::zeros(self.rows + 1, self.cols);
        out.data[..self.data.len()].copy_from_slice(&self.data);
        out.data[self.data.len()..].copy_from_slice(row.words());
        out
    }

    /// Side-by-side concatenation `[self | other]`.
    pub fn hstack(&self, other: &BitMatrix) -> BitMatrix {
        assert_eq!(self.rows, other.rows, "hstack row mismatch");
        let mut out = BitMatrix::zeros(self.rows, self.cols + other.cols);
        for r in 0..self.rows {
            for c in self.row(r).ones() {
                out.set(r, c, true);
            }
            for c in other.row(r).ones() {
                out.set(r, self.cols + c, true);
            }
        }
        out
    }

    /// The sub-matrix formed by the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> BitMatrix {
        let mut out = BitMatrix::zeros(self.rows, cols.len());
        for r in 0..self.rows {
            for (j, &c) in cols.iter().enumerate() {
                if self.get(r, c) {
                    out.set(r, j, true);
                }
            }
        }
        out
    }

    /// Dimension of the row space.
    pub fn rank(&self) -> usize {
        self.clone().echelonize().len()
    }

    /// In-place forward elimination; returns the pivot column per pivot row.
    /// Pivot rows are swapped to the top in order of discovery, so after the
    /// call rows `0..rank` hold the echelon form.
    fn echelonize(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut next_row = 0;
        for c in 0..self.cols {
            let Some(pivot) = (next_row..self.rows).find(|&r| self.get(r, c)) else {
                continue;
            };
            self.data.swap_rows(pivot, next_row, self.stride);
            for r in 0..self.rows {
                if r != next_row && self.get(r, c) {
                    self.xor_rows(r, next_row);
                }
            }
            pivots.push(c);
            next_row += 1;
            if next_row == self.rows {
                break;
            }
        }
        pivots
    }

    /// A basis of the null space: `cols - rank` independent vectors `v` with
    /// `M . v = 0`. Deterministic, one basis vector per free column.
    pub fn kernel_basis(&self) -> Vec<BitVector> {
        let mut work = self.clone();
        let pivots = work.echelonize();
        let mut is_pivot = vec![false; self.cols];
        for &c in &pivots {
            is_pivot[c] = true;
        }
        let mut basis = Vec::with_capacity(self.cols - pivots.len());
        for free in 0..self.cols {
            if is_pivot[free] {
                continue;
            }
            let mut v = BitVector::zeros(self.cols);
            v.set(free, true);
            for (r, &pc) in pivots.iter().enumerate() {
                if work.get(r, free) {
                    v.set(pc, true);
                }
            }
            basis.push(v);
        }
        basis
    }

    /// True iff `v` is a GF(2) combination of the rows of `self`.
    pub fn row_space_contains(&self, v: &BitVector) -> bool {
        assert_eq!(v.len(), self.cols, "row_space_contains length mismatch");
        let base = self.rank();
        self.vstack_row(v).rank() == base
    }

    /// Any `x` with `M . x = s`, or `None` when the system is infeasible.
    /// Free variables are set to zero.
    pub fn solve(&self, s: &BitVector) -> Option<BitVector> {
        assert_eq!(s.len(), self.rows, "solve syndrome length mismatch");
        let mut rhs = BitMatrix::zeros(self.rows, 1);
        for r in s.ones() {
            rhs.set(r, 0, true);
        }
        let mut work = self.hstack(&rhs);
        // Eliminate over the original columns only; the appended column rides
        // along as the right-hand side.
        let mut pivots = Vec::new();
        let mut next_row = 0;
        for c in 0..self.cols {
            let Some(pivot) = (next_row..work.rows).find(|&r| work.get(r, c)) else {
                continue;
            };
            work.data.swap_rows(pivot, next_row, work.stride);
            for r in 0..work.rows {
                if r != next_row && work.get(r, c) {
                    work.xor_rows(r, next_row);
                }
            }
            pivots.push(c);
            next_row += 1;
            if next_row == work.rows {
                break;
            }
        }
        let rhs = self.cols;
        for r in pivots.len()..work.rows {
            if work.get(r, rhs) {
                return None;
            }
        }
        let mut x = BitVector::zeros(self.cols);
        for (r, &pc) in pivots.iter().enumerate() {
            if work.get(r, rhs) {
                x.set(pc, true);
            }
        }
        Some(x)
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        self.data.swap_rows(a, b, self.stride);
    }

    /// XORs row `source` into row `target`.
    pub fn xor_rows_from(&mut self, target: usize, source: usize) {
        self.xor_rows(target, source);
    }

    /// Rows as a lexicographically sorted list, for equality up to row
    /// permutation.
    pub fn sorted_rows(&self) -> Vec<BitVector> {
        let mut rows: Vec<BitVector> = (0..self.rows).map(|r| self.row(r)).collect();
        rows.sort_by(|a, b| a.words.cmp(&b.words));
        rows
    }

    /// Equality of the row lists as multisets.
    pub fn eq_up_to_row_permutation(&self, other: &BitMatrix) -> bool {
        self.cols == other.cols
            && self.rows == other.rows
            && self.sorted_rows() == other.sorted_rows()
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "{:?}", self.row(r))?;
        }
        Ok(())
    }
}

trait SwapRows {
    fn swap_rows(&mut self, a: usize, b: usize, stride: usize);
}

impl SwapRows for Vec<u64> {
    fn swap_rows(&mut self, a: usize, b: usize, stride: usize) {
        if a == b {
            return;
        }
        let (a, b) = (a.min(b), a.max(b));
        let (lo, hi) = self.split_at_mut(b * stride);
        lo[a * stride..a * stride + stride].swap_with_slice(&mut hi[..stride]);
    }
}

/// An incrementally maintained row space: one stored vector per leading
/// column, supporting membership tests and rank-growing insertion without
/// re-running elimination.
#[derive(Clone, Default)]
pub struct RowSpace {
    rows: std::collections::BTreeMap<usize, BitVector>,
}

impl RowSpace {
    pub fn new(m: &BitMatrix) -> Self {
        let mut space = Self::default();
        for r in 0..m.rows() {
            space.insert(m.row(r));
        }
        space
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Reduces `v` against the stored rows; returns the residue.
    pub fn reduce(&self, v: &BitVector) -> BitVector {
        let mut v = v.clone();
        while let Some(lead) = v.first_one() {
            match self.rows.get(&lead) {
                Some(row) => v.xor_assign(row),
                None => break,
            }
        }
        v
    }

    pub fn contains(&self, v: &BitVector) -> bool {
        self.reduce(v).is_zero()
    }

    /// Adds `v` to the space; returns true iff it enlarged the span.
    pub fn insert(&mut self, v: BitVector) -> bool {
        let residue = self.reduce(&v);
        match residue.first_one() {
            Some(lead) => {
                self.rows.insert(lead, residue);
                true
            }
            None => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_matrix(rng: &mut StdRng, rows: usize, cols: usize, density: f64) -> BitMatrix {
        let mut m = BitMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                if rng.gen_bool(density) {
                    m.set(r, c, true);
                }
            }
        }
        m
    }

    #[test]
    fn rank_identity_and_zero() {
        assert_eq!(BitMatrix::identity(5).rank(), 5);
        assert_eq!(BitMatrix::zeros(3, 4).rank(), 0);
    }

    #[test]
    fn kernel_of_identity_is_empty() {
        assert!(BitMatrix::identity(6).kernel_basis().is_empty());
    }

    #[test]
    fn kernel_of_single_row() {
        let m = BitMatrix::from_rows(&[BitVector::from_bits(&[1, 1, 0])]);
        let basis = m.kernel_basis();
        assert_eq!(basis.len(), 2);
        for v in &basis {
            assert!(m.mul_vec(v).is_zero());
        }
        // Basis vectors are independent.
        assert_eq!(BitMatrix::from_rows(&basis).rank(), 2);
    }

    #[test]
    fn kernel_vectors_are_annihilated() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..50 {
            let rows = rng.gen_range(1..12);
            let cols = rng.gen_range(1..20);
            let m = random_matrix(&mut rng, rows, cols, 0.4);
            let basis = m.kernel_basis();
            assert_eq!(basis.len(), cols - m.rank());
            for v in &basis {
                assert!(m.mul_vec(v).is_zero());
            }
        }
    }

    #[test]
    fn row_space_contains_rows_and_zero() {
        let mut rng = StdRng::seed_from_u64(11);
        let m = random_matrix(&mut rng, 6, 10, 0.5);
        for r in 0..m.rows() {
            assert!(m.row_space_contains(&m.row(r)));
        }
        assert!(m.row_space_contains(&BitVector::zeros(10)));
    }

    #[test]
    fn row_space_matches_exhaustive_combinations() {
        // Oracle: enumerate all 2^rows GF(2) combinations of the rows.
        let mut rng = StdRng::seed_from_u64(13);
        for _ in 0..20 {
            let rows = rng.gen_range(1..9);
            let cols = rng.gen_range(1..14);
            let m = random_matrix(&mut rng, rows, cols, 0.45);
            let mut span = std::collections::HashSet::new();
            for mask in 0..(1u32 << rows) {
                let mut v = BitVector::zeros(cols);
                for r in 0..rows {
                    if (mask >> r) & 1 == 1 {
                        v.xor_assign(&m.row(r));
                    }
                }
                span.insert(v.words().to_vec());
            }
            for _ in 0..20 {
                let v = random_matrix(&mut rng, 1, cols, 0.5).row(0);
                assert_eq!(
                    m.row_space_contains(&v),
                    span.contains(&v.words().to_vec())
                );
            }
        }
    }

    #[test]
    fn solve_identity_returns_syndrome() {
        let s = BitVector::from_bits(&[1, 0, 1, 1]);
        assert_eq!(BitMatrix::identity(4).solve(&s), Some(s));
    }

    #[test]
    fn solve_round_trip_on_feasible_systems() {
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..100 {
            let rows = rng.gen_range(1..16);
            let cols = rng.gen_range(1..16);
            let m = random_matrix(&mut rng, rows, cols, 0.4);
            let x = random_matrix(&mut rng, 1, cols, 0.5).row(0);
            let s = m.mul_vec(&x);
            let sol = m.solve(&s).expect("feasible by construction");
            assert_eq!(m.mul_vec(&sol), s);
        }
    }

    #[test]
    fn solve_detects_infeasible() {
        // Row space of [1 1] cannot produce syndrome (1, 0) from duplicated rows.
        let m = BitMatrix::from_rows(&[
            BitVector::from_bits(&[1, 1]),
            BitVector::from_bits(&[1, 1]),
        ]);
        assert_eq!(m.solve(&BitVector::from_bits(&[1, 0])), None);
    }

    #[test]
    fn mat_mul_kernel_is_zero() {
        let mut rng = StdRng::seed_from_u64(19);
        let m = random_matrix(&mut rng, 8, 14, 0.4);
        let kernel = m.kernel_basis();
        if !kernel.is_empty() {
            let k = BitMatrix::from_rows(&kernel).transpose();
            assert!(m.mat_mul(&k).is_zero());
        }
    }

    #[test]
    fn row_space_reducer_agrees_with_rank_check() {
        let mut rng = StdRng::seed_from_u64(23);
        let m = random_matrix(&mut rng, 10, 18, 0.35);
        let space = RowSpace::new(&m);
        for _ in 0..50 {
            let v = random_matrix(&mut rng, 1, 18, 0.3).row(0);
            assert_eq!(space.contains(&v), m.row_space_contains(&v));
        }
    }

    proptest! {
        #[test]
        fn rank_equals_rank_of_transpose(seed in 0u64..500) {
            let mut rng = StdRng::seed_from_u64(seed);
            let rows = rng.gen_range(1..20);
            let cols = rng.gen_range(1..20);
            let m = random_matrix(&mut rng, rows, cols, 0.35);
            prop_assert_eq!(m.rank(), m.transpose().rank());
        }

        #[test]
        fn rank_nullity(seed in 0u64..500) {
            let mut rng = StdRng::seed_from_u64(seed);
            let rows = rng.gen_range(1..20);
            let cols = rng.gen_range(1..24);
            let m = random_matrix(&mut rng, rows, cols, 0.35);
            prop_assert_eq!(m.cols(), m.rank() + m.kernel_basis().len());
        }

        #[test]
        fn mat_mul_is_associative(seed in 0u64..200) {
            let mut rng = StdRng::seed_from_u64(seed);
            let (a, b, c, d) = (
                rng.gen_range(1..16),
                rng.gen_range(1..16),
                rng.gen_range(1..16),
                rng.gen_range(1..16),
            );
            let m1 = random_matrix(&mut rng, a, b, 0.4);
            let m2 = random_matrix(&mut rng, b, c, 0.4);
            let m3 = random_matrix(&mut rng, c, d, 0.4);
            prop_assert_eq!(m1.mat_mul(&m2).mat_mul(&m3), m1.mat_mul(&m2.mat_mul(&m3)));
        }

        #[test]
        fn row_combinations_stay_in_row_space(seed in 0u64..200) {
            let mut rng = StdRng::seed_from_u64(seed);
            let rows = rng.gen_range(3..10);
            let cols = rng.gen_range(3..16);
            let m = random_matrix(&mut rng, rows, cols, 0.4);
            for _ in 0..8 {
                let picks = rng.gen_range(1..=3usize);
                let mut v = BitVector::zeros(cols);
                for _ in 0..picks {
                    v.xor_assign(&m.row(rng.gen_range(0..rows)));
                }
                prop_assert!(m.row_space_contains(&v));
            }
        }
    }
}
