//! Cellular automaton stencils and the classical LDPC codes they generate on
//! periodic lattices.
//!
//! A stencil is an `m x m` binary pattern of cells. Sweeping it across an
//! `H x L` torus produces one translation-invariant parity check per lattice
//! site; the resulting code is the classical building block of the quantum
//! construction, and is also what the quantum code decouples into at infinite
//! noise bias.

use crate::gf2::{BitMatrix, BitVector};
use crate::{Error, Result};
use itertools::Itertools;
use serde::{Deserialize, Serialize};

/// An `m x m` binary stencil. Cells are `(col, row)` pairs with row 0 at the
/// bottom, kept sorted for a canonical representation.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CARule {
    pub m: usize,
    cells: Vec<(u8, u8)>,
}

impl CARule {
    /// Builds a rule, validating that cells are in range, non-empty, and that
    /// the bottom row and left column each hold at least one cell.
    pub fn new(m: usize, cells: &[(u8, u8)]) -> Result<Self> {
        let mut cells: Vec<(u8, u8)> = cells.to_vec();
        cells.sort_unstable();
        cells.dedup();
        if cells.is_empty() {
            return Err(Error::InvalidSpec("stencil has no cells".into()));
        }
        if cells.iter().any(|&(c, r)| c as usize >= m || r as usize >= m) {
            return Err(Error::InvalidSpec(format!("stencil cell outside {m}x{m} grid")));
        }
        if !cells.iter().any(|&(_, r)| r == 0) || !cells.iter().any(|&(c, _)| c == 0) {
            return Err(Error::InvalidSpec(
                "stencil must touch the bottom row and the left column".into(),
            ));
        }
        Ok(Self { m, cells })
    }

    pub fn cells(&self) -> &[(u8, u8)] {
        &self.cells
    }

    pub fn weight(&self) -> usize {
        self.cells.len()
    }

    pub fn contains(&self, col: usize, row: usize) -> bool {
        self.cells.binary_search(&(col as u8, row as u8)).is_ok()
    }

    /// The stencil rotated by 180 degrees: cell `(c, r) -> (m-1-c, m-1-r)`.
    ///
    /// The rotated rule is the gray-sector partner that makes the combined
    /// stabilizers commute; rotation is an involution.
    pub fn rotate_180(&self) -> CARule {
        let m1 = (self.m - 1) as u8;
        let mut cells: Vec<(u8, u8)> = self
            .cells
            .iter()
            .map(|&(c, r)| (m1 - c, m1 - r))
            .collect();
        cells.sort_unstable();
        CARule { m: self.m, cells }
    }

    /// Sweep offsets `(dcol, drow)` of the parity check this stencil places at
    /// each lattice site: cell `(c, r)` contributes offset `(m-1-c, r)`.
    pub(crate) fn sweep_offsets(&self) -> Vec<(usize, usize)> {
        self.cells
            .iter()
            .map(|&(c, r)| (self.m - 1 - c as usize, r as usize))
            .collect()
    }
}

impl std::fmt::Debug for CARule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "CARule(m={}, cells={:?})", self.m, self.cells)
    }
}

impl std::fmt::Display for CARule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let cells = self
            .cells
            .iter()
            .map(|&(c, r)| format!("{c}{r}"))
            .join(".");
        write!(f, "m{}w{}-{}", self.m, self.weight(), cells)
    }
}

/// All distinct cell sets of size `w` in the `m x m` grid that touch the
/// bottom row and the left column. No quotient by symmetry is taken.
pub fn enumerate_rules(m: usize, w: usize) -> Result<Vec<CARule>> {
    if w > m * m {
        return Err(Error::StencilWeightTooLarge { w, m });
    }
    let positions: Vec<(u8, u8)> = (0..m as u8)
        .cartesian_product(0..m as u8)
        .map(|(c, r)| (c, r))
        .collect();
    let rules = positions
        .into_iter()
        .combinations(w)
        .filter_map(|cells| CARule::new(m, &cells).ok())
        .sorted()
        .collect();
    Ok(rules)
}

/// A classical code from a stencil swept over an `H x L` torus: one parity
/// check per site, periodic wraparound, qubit `(col, row)` at index
/// `row * L + col`.
#[derive(Clone, Debug)]
pub struct ClassicalCode {
    parity: BitMatrix,
    rule: Option<CARule>,
    lattice: (usize, usize),
}

/// Whether a reported distance is certified or only an upper bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Distance {
    Exact(usize),
    Estimate(usize),
}

impl Distance {
    pub fn value(&self) -> usize {
        match *self {
            Distance::Exact(d) | Distance::Estimate(d) => d,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Distance::Exact(_))
    }
}

impl std::fmt::Display for Distance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Distance::Exact(d) => write!(f, "{d}"),
            Distance::Estimate(d) => write!(f, "{d}~"),
        }
    }
}

/// Parameters `[n, k, d]` of a classical code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClassicalParams {
    pub n: usize,
    pub k: usize,
    pub d: Option<Distance>,
}

pub fn build_classical_code(rule: &CARule, h: usize, l: usize) -> Result<ClassicalCode> {
    if h < rule.m || l < rule.m {
        return Err(Error::LatticeTooSmall { h, l, m: rule.m });
    }
    let n = h * l;
    let mut parity = BitMatrix::zeros(n, n);
    let offsets = rule.sweep_offsets();
    for row in 0..h {
        for col in 0..l {
            let check = row * l + col;
            for &(dc, dr) in &offsets {
                let qc = (col + dc) % l;
                let qr = (row + dr) % h;
                parity.set(check, qr * l + qc, true);
            }
        }
    }
    Ok(ClassicalCode {
        parity,
        rule: Some(rule.clone()),
        lattice: (h, l),
    })
}

impl ClassicalCode {
    /// Wraps a raw parity matrix, e.g. a decoupled sector of a quantum code.
    pub fn from_parity(parity: BitMatrix) -> Self {
        let n = parity.cols();
        Self {
            parity,
            rule: None,
            lattice: (1, n),
        }
    }

    pub fn parity(&self) -> &BitMatrix {
        &self.parity
    }

    pub fn rule(&self) -> Option<&CARule> {
        self.rule.as_ref()
    }

    pub fn lattice(&self) -> (usize, usize) {
        self.lattice
    }

    pub fn n(&self) -> usize {
        self.parity.cols()
    }

    pub fn k(&self) -> usize {
        self.n() - self.parity.rank()
    }

    /// Exact minimum distance by enumerating all `2^k - 1` nonzero codewords
    /// from a kernel basis, in Gray-code order. `None` when `k` exceeds the
    /// cap or the code has no codewords.
    pub fn exact_distance(&self, k_cap: usize) -> Option<usize> {
        let basis = self.parity.kernel_basis();
        let k = basis.len();
        if k == 0 || k > k_cap {
            return None;
        }
        let mut word = BitVector::zeros(self.n());
        let mut best = usize::MAX;
        for i in 1u64..(1u64 << k) {
            word.xor_assign(&basis[i.trailing_zeros() as usize]);
            best = best.min(word.weight());
        }
        Some(best)
    }

    /// True iff the check graph (one vertex per check, edges between checks
    /// sharing a bit) has a single connected component.
    pub fn is_connected(&self) -> bool {
        let rows = self.parity.rows();
        if rows <= 1 {
            return true;
        }
        let mut uf = UnionFind::new(rows);
        let mut first_check: Vec<Option<usize>> = vec![None; self.n()];
        for r in 0..rows {
            for c in self.parity.row(r).ones() {
                match first_check[c] {
                    Some(other) => uf.union(r, other),
                    None => first_check[c] = Some(r),
                }
            }
        }
        let root = uf.find(0);
        (1..rows).all(|r| uf.find(r) == root)
    }
}

/// Computes `[n_c, k_c, d_c]`. The distance is exact (codeword enumeration)
/// whenever `k_c <= exact_cap`; otherwise it is left for the caller to fill
/// with a decoder-based estimate.
pub fn classical_params(code: &ClassicalCode, exact_cap: usize) -> ClassicalParams {
    let n = code.n();
    let k = code.k();
    let d = if k == 0 {
        None
    } else {
        code.exact_distance(exact_cap).map(Distance::Exact)
    };
    ClassicalParams { n, k, d }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn bowtie() -> CARule {
        CARule::new(3, &[(1, 0), (1, 1), (2, 1), (0, 2)]).unwrap()
    }

    #[test]
    fn single_cell_rule() {
        let rules = enumerate_rules(1, 1).unwrap();
        assert_eq!(rules.len(), 1);
        assert_eq!(rules[0].cells(), &[(0, 0)]);
    }

    #[test]
    fn enumeration_matches_brute_force() {
        // Oracle: count subsets directly against the boundary-touch constraint.
        for (m, w) in [(2usize, 3usize), (2, 4), (3, 3), (3, 4)] {
            let positions: Vec<(u8, u8)> = (0..m as u8)
                .flat_map(|c| (0..m as u8).map(move |r| (c, r)))
                .collect();
            let expected = positions
                .iter()
                .copied()
                .combinations(w)
                .filter(|cells| {
                    cells.iter().any(|&(_, r)| r == 0) && cells.iter().any(|&(c, _)| c == 0)
                })
                .count();
            assert_eq!(enumerate_rules(m, w).unwrap().len(), expected, "m={m} w={w}");
        }
        assert_eq!(enumerate_rules(2, 3).unwrap().len(), 4);
    }

    #[test]
    fn enumeration_contains_bowtie() {
        assert!(enumerate_rules(3, 4).unwrap().contains(&bowtie()));
    }

    #[test]
    fn infeasible_weight_rejected() {
        assert!(enumerate_rules(2, 5).is_err());
    }

    #[test]
    fn vertical_domino_is_a_cycle_code() {
        // Two vertically adjacent cells swept down a single column give the
        // cycle code: k = 1 and d = H.
        for h in [5usize, 7] {
            let mut cycle = BitMatrix::zeros(h, h);
            for r in 0..h {
                cycle.set(r, r, true);
                cycle.set(r, (r + 1) % h, true);
            }
            let cycle_code = ClassicalCode::from_parity(cycle);
            assert_eq!(cycle_code.k(), 1);
            assert_eq!(cycle_code.exact_distance(4), Some(h));

            // The domino rule on an Hx2 torus is two interleaved copies.
            let rule = CARule::new(2, &[(0, 0), (0, 1)]).unwrap();
            let code = build_classical_code(&rule, h, 2).unwrap();
            assert_eq!(code.k(), 2);
            assert_eq!(code.exact_distance(4), Some(h));
        }
    }

    #[test]
    fn rows_have_rule_weight() {
        let code = build_classical_code(&bowtie(), 6, 6).unwrap();
        for r in 0..code.parity().rows() {
            assert_eq!(code.parity().row_weight(r), 4);
        }
    }

    #[test]
    fn rule_102_on_3x3() {
        let rule = CARule::new(2, &[(0, 0), (1, 0), (0, 1)]).unwrap();
        let code = build_classical_code(&rule, 3, 3).unwrap();
        assert_eq!(code.n(), 9);
        assert_eq!(classical_params(&code, 20).n, 9);
    }

    #[test]
    fn bowtie_classical_on_12x12() {
        let code = build_classical_code(&bowtie(), 12, 12).unwrap();
        let params = classical_params(&code, 20);
        assert_eq!(params.n, 144);
        assert_eq!(params.k, 7);
        assert_eq!(params.d, Some(Distance::Exact(54)));
    }

    #[test]
    fn table_row_one_classical_on_6x6() {
        let rule = CARule::new(3, &[(0, 0), (1, 1), (2, 1), (0, 2)]).unwrap();
        let code = build_classical_code(&rule, 6, 6).unwrap();
        let params = classical_params(&code, 20);
        assert_eq!((params.n, params.k), (36, 10));
        assert_eq!(params.d, Some(Distance::Exact(12)));
    }

    #[test]
    fn zero_matrix_params() {
        let code = ClassicalCode::from_parity(BitMatrix::zeros(5, 5));
        let params = classical_params(&code, 20);
        assert_eq!((params.n, params.k), (5, 5));
        assert_eq!(params.d, Some(Distance::Exact(1)));
    }

    #[test]
    fn connectivity() {
        let single = ClassicalCode::from_parity(BitMatrix::from_rows(&[BitVector::from_bits(
            &[1, 1, 0],
        )]));
        assert!(single.is_connected());

        // Block-diagonal parity of two disjoint codes.
        let mut block = BitMatrix::zeros(2, 4);
        block.set(0, 0, true);
        block.set(0, 1, true);
        block.set(1, 2, true);
        block.set(1, 3, true);
        assert!(!ClassicalCode::from_parity(block).is_connected());

        assert!(build_classical_code(&bowtie(), 6, 6).unwrap().is_connected());
    }

    #[test]
    fn connectivity_matches_bfs_oracle() {
        let code = build_classical_code(&bowtie(), 6, 6).unwrap();
        let parity = code.parity();
        // BFS oracle over the same check graph.
        let rows = parity.rows();
        let mut adj = vec![vec![]; rows];
        for a in 0..rows {
            for b in (a + 1)..rows {
                if parity.row(a).ones().any(|c| parity.get(b, c)) {
                    adj[a].push(b);
                    adj[b].push(a);
                }
            }
        }
        let mut seen = vec![false; rows];
        let mut queue = std::collections::VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        assert_eq!(seen.iter().all(|&s| s), code.is_connected());
    }

    #[test]
    fn translation_invariance_of_rows() {
        // Shifting every qubit by one lattice column permutes the check rows.
        let code = build_classical_code(&bowtie(), 6, 6).unwrap();
        let (_, l) = code.lattice();
        let parity = code.parity();
        let mut shifted = BitMatrix::zeros(parity.rows(), parity.cols());
        for r in 0..parity.rows() {
            for c in parity.row(r).ones() {
                let (row, col) = (c / l, c % l);
                shifted.set(r, row * l + (col + 1) % l, true);
            }
        }
        assert!(parity.eq_up_to_row_permutation(&shifted));
    }

    #[test]
    fn k_is_translation_invariant() {
        // Building on any cyclic relabeling of the lattice preserves k.
        let code = build_classical_code(&bowtie(), 6, 9).unwrap();
        let k = code.k();
        let (h, l) = code.lattice();
        let parity = code.parity();
        for (dr, dc) in [(1usize, 0usize), (0, 1), (3, 2)] {
            let mut shifted = BitMatrix::zeros(parity.rows(), parity.cols());
            for r in 0..parity.rows() {
                for c in parity.row(r).ones() {
                    let (row, col) = (c / l, c % l);
                    shifted.set(r, ((row + dr) % h) * l + (col + dc) % l, true);
                }
            }
            assert_eq!(ClassicalCode::from_parity(shifted).k(), k);
        }
    }

    #[test]
    fn rotate_180_examples() {
        let center = CARule::new(3, &[(1, 1), (0, 0), (2, 2), (1, 0), (0, 1)]).unwrap();
        assert!(center.rotate_180().contains(1, 1));

        let r2 = bowtie().rotate_180();
        assert_eq!(r2.cells(), &[(0, 1), (1, 1), (1, 2), (2, 0)]);

        for rule in enumerate_rules(3, 4).unwrap() {
            assert_eq!(rule.rotate_180().rotate_180(), rule);
        }
    }

    #[test]
    fn rule_json_round_trip() {
        let rule = bowtie();
        let json = serde_json::to_string(&rule).unwrap();
        assert_eq!(json, r#"{"m":3,"cells":[[0,2],[1,0],[1,1],[2,1]]}"#);
        let back: CARule = serde_json::from_str(&json).unwrap();
        assert_eq!(back, rule);
    }
}
