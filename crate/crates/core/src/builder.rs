//! Quantum code assembly on the torus, cylinder and open plane.
//!
//! A code is built from a pair of stencils related by a 180 degree rotation.
//! Each plaquette of the bipartite lattice carries one X-type and one Z-type
//! stabilizer with identical support: the first stencil is swept over the
//! black sub-lattice, the second over the gray sub-lattice, so the resulting
//! CSS code is self-dual. The Clifford deformation applies a Hadamard to every
//! gray qubit, turning each stabilizer into a half-X half-Z check.
//!
//! Qubit indexing: black sector first (`0..HL`, row-major within the sector),
//! gray sector second; on the open plane the two corner qubits are appended
//! last (gray corner at `n-2`, black corner at `n-1`).

use crate::ca::{CARule, Distance};
use crate::gf2::{BitMatrix, BitVector};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Torus,
    Cylinder,
    Plane,
}

impl std::fmt::Display for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Boundary::Torus => write!(f, "torus"),
            Boundary::Cylinder => write!(f, "cylinder"),
            Boundary::Plane => write!(f, "plane"),
        }
    }
}

/// Code parameters, with distances absent until estimated or certified.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CodeParams {
    pub n: usize,
    pub k: usize,
    pub d: Option<Distance>,
    pub d_c: Option<Distance>,
}

/// A stabilizer code held in its CSS representation, together with the
/// deformation state of the gray sector.
///
/// `h_x` and `h_z` are the CSS parity check matrices. When `deformed` is set,
/// the physical stabilizers are the Hadamard-rotated ones (X and Z swapped on
/// every gray column); [`StabilizerCode::stabilizers`] materializes that view.
/// Decoding and simulation keep working on the CSS matrices with rotated noise
/// channels, which is equivalent shot for shot.
#[derive(Clone, Debug)]
pub struct StabilizerCode {
    h_x: BitMatrix,
    h_z: BitMatrix,
    gray_mask: BitVector,
    deformed: bool,
    boundary: Boundary,
    lattice: (usize, usize),
    rules: Option<(CARule, CARule)>,
    params: CodeParams,
}

/// Stabilizer generators in symplectic form: row `i` acts as X on the support
/// of `x_part` row `i` and as Z on the support of `z_part` row `i`.
#[derive(Clone, Debug)]
pub struct SymplecticStabilizers {
    pub x_part: BitMatrix,
    pub z_part: BitMatrix,
}

impl SymplecticStabilizers {
    /// Symplectic syndrome of an error `(e_x, e_z)`: row `i` fires iff
    /// generator `i` anticommutes with the error.
    pub fn syndrome(&self, e_x: &BitVector, e_z: &BitVector) -> BitVector {
        let mut s = self.x_part.mul_vec(e_z);
        s.xor_assign(&self.z_part.mul_vec(e_x));
        s
    }

    /// Pairs of generators with odd symplectic product.
    pub fn commutation_violations(&self) -> Vec<(usize, usize)> {
        let m = xor_matrices(
            &self.x_part.mat_mul(&self.z_part.transpose()),
            &self.z_part.mat_mul(&self.x_part.transpose()),
        );
        let mut out = Vec::new();
        for r in 0..m.rows() {
            for c in m.row(r).ones() {
                if c >= r {
                    out.push((r, c));
                }
            }
        }
        out
    }
}

fn xor_matrices(a: &BitMatrix, b: &BitMatrix) -> BitMatrix {
    assert_eq!((a.rows(), a.cols()), (b.rows(), b.cols()));
    let mut out = a.clone();
    for r in 0..out.rows() {
        out.xor_row_with(r, &b.row(r));
    }
    out
}

impl StabilizerCode {
    pub fn new(
        h_x: BitMatrix,
        h_z: BitMatrix,
        gray_mask: BitVector,
        boundary: Boundary,
        lattice: (usize, usize),
        rules: Option<(CARule, CARule)>,
    ) -> Self {
        let n = h_x.cols();
        assert_eq!(h_z.cols(), n);
        assert_eq!(gray_mask.len(), n);
        let k = n - h_x.rank() - h_z.rank();
        Self {
            h_x,
            h_z,
            gray_mask,
            deformed: false,
            boundary,
            lattice,
            rules,
            params: CodeParams { n, k, d: None, d_c: None },
        }
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn k(&self) -> usize {
        self.params.k
    }

    pub fn h_x(&self) -> &BitMatrix {
        &self.h_x
    }

    pub fn h_z(&self) -> &BitMatrix {
        &self.h_z
    }

    pub fn is_deformed(&self) -> bool {
        self.deformed
    }

    pub fn gray_mask(&self) -> &BitVector {
        &self.gray_mask
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn lattice(&self) -> (usize, usize) {
        self.lattice
    }

    pub fn rules(&self) -> Option<&(CARule, CARule)> {
        self.rules.as_ref()
    }

    pub fn params(&self) -> CodeParams {
        self.params
    }

    pub fn set_distance(&mut self, d: Distance) {
        self.params.d = Some(d);
    }

    pub fn set_classical_distance(&mut self, d_c: Distance) {
        self.params.d_c = Some(d_c);
    }

    pub fn black_columns(&self) -> Vec<usize> {
        (0..self.n()).filter(|&q| !self.gray_mask.get(q)).collect()
    }

    pub fn gray_columns(&self) -> Vec<usize> {
        self.gray_mask.support()
    }

    /// A short stable identifier used in reports and file names.
    pub fn id(&self) -> String {
        let rules = self
            .rules
            .as_ref()
            .map(|(r1, _)| r1.to_string())
            .unwrap_or_else(|| "custom".into());
        format!(
            "{}-{}x{}-{}{}",
            self.boundary,
            self.lattice.0,
            self.lattice.1,
            rules,
            if self.deformed { "-cd" } else { "" }
        )
    }

    /// The stabilizer generators acting on the physical qubits, honoring the
    /// deformation flag: X rows first, then Z rows; under deformation each row
    /// has its X/Z action swapped on gray columns.
    pub fn stabilizers(&self) -> SymplecticStabilizers {
        let rows = self.h_x.rows() + self.h_z.rows();
        let n = self.n();
        let mut x_part = BitMatrix::zeros(rows, n);
        let mut z_part = BitMatrix::zeros(rows, n);
        for r in 0..self.h_x.rows() {
            for c in self.h_x.row(r).ones() {
                if self.deformed && self.gray_mask.get(c) {
                    z_part.set(r, c, true);
                } else {
                    x_part.set(r, c, true);
                }
            }
        }
        for r in 0..self.h_z.rows() {
            let out_r = self.h_x.rows() + r;
            for c in self.h_z.row(r).ones() {
                if self.deformed && self.gray_mask.get(c) {
                    x_part.set(out_r, c, true);
                } else {
                    z_part.set(out_r, c, true);
                }
            }
        }
        SymplecticStabilizers { x_part, z_part }
    }

    /// The decoupled classical parity matrices seen by pure phase-flip noise:
    /// X-detecting checks restricted to the black sector and to the gray
    /// sector, with empty rows dropped.
    pub fn sector_parities(&self) -> (BitMatrix, BitMatrix) {
        let black = self.black_columns();
        let gray = self.gray_columns();
        let strip = |m: &BitMatrix, cols: &[usize]| {
            let full = m.select_columns(cols);
            let rows: Vec<BitVector> = (0..full.rows())
                .map(|r| full.row(r))
                .filter(|row| !row.is_zero())
                .collect();
            if rows.is_empty() {
                BitMatrix::zeros(0, cols.len())
            } else {
                BitMatrix::from_rows(&rows)
            }
        };
        (strip(&self.h_x, &black), strip(&self.h_z, &gray))
    }
}

/// Swaps the X and Z action on every gray qubit. Involution: applying it to an
/// already deformed code restores the CSS code. `n` and `k` are unchanged.
pub fn clifford_deform(code: &StabilizerCode) -> StabilizerCode {
    let mut out = code.clone();
    out.deformed = !code.deformed;
    out
}

fn doubled_mod(v: i64, modulus: usize) -> i64 {
    v.rem_euclid(modulus as i64)
}

/// Builds the self-dual code on an `H x L` torus (`n = 2HL`). One stabilizer
/// pair per plaquette; the black stencil is swept with the plaquette, the gray
/// stencil rides next to it on the interleaved sub-lattice.
pub fn build_torus(r1: &CARule, r2: &CARule, h: usize, l: usize) -> Result<StabilizerCode> {
    let m = r1.m.max(r2.m);
    if h < m || l < m {
        return Err(Error::LatticeTooSmall { h, l, m });
    }
    let hl = h * l;
    let n = 2 * hl;
    let mut parity = BitMatrix::zeros(hl, n);
    let mut row = 0;
    for i in 0..l as i64 {
        for j in 0..h as i64 {
            for (sector, rule) in [(Sector::Black, r1), (Sector::Gray, r2)] {
                for &(dc, dr) in &rule.sweep_offsets() {
                    let (x, y) = sector.doubled_coords(i + dc as i64, j + dr as i64);
                    let x = doubled_mod(x, 2 * l);
                    let y = doubled_mod(y, 2 * h);
                    let q = torus_qubit_index(x, y, h, l);
                    parity.set(row, q, true);
                }
            }
            row += 1;
        }
    }
    let mut gray_mask = BitVector::zeros(n);
    for q in hl..n {
        gray_mask.set(q, true);
    }
    Ok(StabilizerCode::new(
        parity.clone(),
        parity,
        gray_mask,
        Boundary::Torus,
        (h, l),
        Some((r1.clone(), r2.clone())),
    ))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Sector {
    Black,
    Gray,
}

impl Sector {
    /// Doubled-lattice coordinates of this sector's qubit for sub-lattice
    /// site `(i, j)`: black qubits sit at odd `y`, gray qubits at even `y`,
    /// shifted half a cell left and down from their black neighbors.
    fn doubled_coords(self, i: i64, j: i64) -> (i64, i64) {
        match self {
            Sector::Black => (2 * i, 2 * j + 1),
            Sector::Gray => (2 * i - 1, 2 * j),
        }
    }

    fn of_doubled(x: i64, y: i64) -> Self {
        if y.rem_euclid(2) == 1 {
            debug_assert_eq!(x.rem_euclid(2), 0);
            Sector::Black
        } else {
            debug_assert_eq!(x.rem_euclid(2), 1);
            Sector::Gray
        }
    }
}

/// Sector-ordered, row-major qubit index on the torus. The slanted layout
/// shifts row `y` horizontally by `floor(y/2)`, which reorders nothing within
/// a row, so the index only depends on the unslanted pair.
fn torus_qubit_index(x: i64, y: i64, h: usize, l: usize) -> usize {
    match Sector::of_doubled(x, y) {
        Sector::Black => {
            let (col, row) = ((x / 2) as usize, ((y - 1) / 2) as usize);
            row * l + col
        }
        Sector::Gray => {
            let (col, row) = (((x - 1) / 2) as usize, (y / 2) as usize);
            h * l + row * l + col
        }
    }
}

/// A bivariate bicycle specification: `A` and `B` as exponent lists of
/// `x^p y^q` over an `l x m` torus, with `x` and `y` the two cyclic shifts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolySpec {
    pub a: Vec<(usize, usize)>,
    pub b: Vec<(usize, usize)>,
    pub l: usize,
    pub m: usize,
}

impl PolySpec {
    /// Self-dual spec: `B` is the transpose image of `A`, exponent-negated
    /// modulo the torus dimensions.
    pub fn self_dual(a: Vec<(usize, usize)>, l: usize, m: usize) -> Self {
        let b = a
            .iter()
            .map(|&(p, q)| ((l - p % l) % l, (m - q % m) % m))
            .collect();
        Self { a, b, l, m }
    }

    pub fn is_self_dual(&self) -> bool {
        let mut expect: Vec<(usize, usize)> = self
            .a
            .iter()
            .map(|&(p, q)| ((self.l - p % self.l) % self.l, (self.m - q % self.m) % self.m))
            .collect();
        expect.sort_unstable();
        let mut b = self.b.clone();
        b.sort_unstable();
        expect == b
    }

    /// The spec whose monomial matrices reproduce the stencil sweep of
    /// [`build_torus`] on an `H x L` torus (`x` shifts lattice rows, `y`
    /// shifts lattice columns).
    pub fn from_rules(r1: &CARule, r2: &CARule, h: usize, l: usize) -> Self {
        let a = r1
            .sweep_offsets()
            .into_iter()
            .map(|(dc, dr)| (dr % h, dc % l))
            .collect();
        let b = r2
            .sweep_offsets()
            .into_iter()
            .map(|(dc, dr)| (dr % h, (dc + l - 1) % l))
            .collect();
        Self { a, b, l: h, m: l }
    }

    fn monomial_matrix(&self, exps: &[(usize, usize)]) -> BitMatrix {
        let n = self.l * self.m;
        let mut out = BitMatrix::zeros(n, n);
        for u in 0..self.l {
            for v in 0..self.m {
                let row = u * self.m + v;
                for &(p, q) in exps {
                    let col = ((u + p) % self.l) * self.m + (v + q) % self.m;
                    // Coinciding monomials cancel over GF(2).
                    let cur = out.get(row, col);
                    out.set(row, col, !cur);
                }
            }
        }
        out
    }

    pub fn a_matrix(&self) -> BitMatrix {
        self.monomial_matrix(&self.a)
    }

    pub fn b_matrix(&self) -> BitMatrix {
        self.monomial_matrix(&self.b)
    }
}

/// Builds the bivariate bicycle code `h_x = [A | B]`, `h_z = [B^T | A^T]`.
pub fn build_from_polynomials(spec: &PolySpec) -> StabilizerCode {
    let a = spec.a_matrix();
    let b = spec.b_matrix();
    let h_x = a.hstack(&b);
    let h_z = b.transpose().hstack(&a.transpose());
    let n = h_x.cols();
    let mut gray_mask = BitVector::zeros(n);
    for q in n / 2..n {
        gray_mask.set(q, true);
    }
    StabilizerCode::new(
        h_x,
        h_z,
        gray_mask,
        Boundary::Torus,
        (spec.l, spec.m),
        None,
    )
}

/// Truncated-boundary builder shared by the cylinder and the plane. Qubits
/// live on a doubled grid; membership is periodic in wrapped directions and
/// windowed in open ones. Stabilizers are truncated to member qubits and kept
/// when their weight is at least 4.
struct OpenBuilder {
    x_period: Option<i64>,
    y_period: Option<i64>,
    x_window: (i64, i64),
    y_window: (i64, i64),
    extras: Vec<(i64, i64)>,
}

impl OpenBuilder {
    fn wrap(&self, x: i64, y: i64) -> (i64, i64) {
        let x = match self.x_period {
            Some(p) => x.rem_euclid(p),
            None => x,
        };
        let y = match self.y_period {
            Some(p) => y.rem_euclid(p),
            None => y,
        };
        (x, y)
    }

    fn in_window(&self, x: i64, y: i64) -> bool {
        (self.x_period.is_some() || (self.x_window.0 <= x && x <= self.x_window.1))
            && (self.y_period.is_some() || (self.y_window.0 <= y && y <= self.y_window.1))
    }

    fn is_member(&self, x: i64, y: i64) -> bool {
        self.in_window(x, y) || self.extras.contains(&(x, y))
    }

    /// Member qubit positions in index order: black sector row-major, then
    /// gray sector row-major, then the extra corner qubits (gray first).
    fn qubit_index_map(&self) -> (BTreeMap<(i64, i64), usize>, BitVector) {
        let mut black = Vec::new();
        let mut gray = Vec::new();
        let y_range = match self.y_period {
            Some(p) => (0, p - 1),
            None => self.y_window,
        };
        let x_range = match self.x_period {
            Some(p) => (0, p - 1),
            None => self.x_window,
        };
        for y in y_range.0..=y_range.1 {
            for x in x_range.0..=x_range.1 {
                let black_site = y.rem_euclid(2) == 1 && x.rem_euclid(2) == 0;
                let gray_site = y.rem_euclid(2) == 0 && x.rem_euclid(2) == 1;
                if black_site {
                    black.push((x, y));
                } else if gray_site {
                    gray.push((x, y));
                }
            }
        }
        let mut extra_gray = Vec::new();
        let mut extra_black = Vec::new();
        for &(x, y) in &self.extras {
            match Sector::of_doubled(x, y) {
                Sector::Gray => extra_gray.push((x, y)),
                Sector::Black => extra_black.push((x, y)),
            }
        }
        let mut map = BTreeMap::new();
        let mut idx = 0;
        let n = black.len() + gray.len() + self.extras.len();
        let mut gray_mask = BitVector::zeros(n);
        for pos in black {
            map.insert(pos, idx);
            idx += 1;
        }
        for pos in gray {
            map.insert(pos, idx);
            gray_mask.set(idx, true);
            idx += 1;
        }
        for pos in extra_gray {
            map.insert(pos, idx);
            gray_mask.set(idx, true);
            idx += 1;
        }
        for pos in extra_black {
            map.insert(pos, idx);
            idx += 1;
        }
        (map, gray_mask)
    }

    fn plaquette_ranges(&self, m: i64) -> (std::ops::Range<i64>, std::ops::Range<i64>) {
        let i_range = match self.x_period {
            Some(p) => 0..p / 2,
            None => (self.x_window.0 / 2 - m - 1)..(self.x_window.1 / 2 + 2),
        };
        let j_range = match self.y_period {
            Some(p) => 0..p / 2,
            None => (self.y_window.0 / 2 - m - 1)..(self.y_window.1 / 2 + 2),
        };
        (i_range, j_range)
    }

    /// Truncated stabilizer supports, one per plaquette with weight >= 4,
    /// plaquettes swept column-major like the torus builder.
    fn truncated_rows(
        &self,
        r1: &CARule,
        r2: &CARule,
        map: &BTreeMap<(i64, i64), usize>,
        n: usize,
    ) -> Vec<BitVector> {
        let m = r1.m.max(r2.m) as i64;
        let (i_range, j_range) = self.plaquette_ranges(m);
        let mut rows = Vec::new();
        for i in i_range {
            for j in j_range.clone() {
                let mut row = BitVector::zeros(n);
                let mut weight = 0usize;
                for (sector, rule) in [(Sector::Black, r1), (Sector::Gray, r2)] {
                    for &(dc, dr) in &rule.sweep_offsets() {
                        let (x, y) = sector.doubled_coords(i + dc as i64, j + dr as i64);
                        let (x, y) = self.wrap(x, y);
                        if self.is_member(x, y) {
                            row.set(map[&(x, y)], true);
                            weight += 1;
                        }
                    }
                }
                if weight >= 4 {
                    rows.push(row);
                }
            }
        }
        rows.dedup();
        rows
    }
}

fn code_from_rows(
    rows: Vec<BitVector>,
    gray_mask: BitVector,
    boundary: Boundary,
    lattice: (usize, usize),
    r1: &CARule,
    r2: &CARule,
) -> Result<StabilizerCode> {
    let parity = BitMatrix::from_rows(&rows);
    let code = StabilizerCode::new(
        parity.clone(),
        parity,
        gray_mask,
        boundary,
        lattice,
        Some((r1.clone(), r2.clone())),
    );
    let deformed = clifford_deform(&code);
    let violations = deformed.stabilizers().commutation_violations();
    if let Some(&(a, b)) = violations.first() {
        return Err(Error::NonCommuting { row_a: a, row_b: b });
    }
    Ok(code)
}

/// Builds the code on a cylinder: lateral edges periodic, top and bottom open.
/// Each sub-lattice keeps `H-1` qubit rows, so `n = 2(H-1)L`. Fails loudly if
/// the truncated stabilizers do not commute.
pub fn build_cylinder(r1: &CARule, r2: &CARule, h: usize, l: usize) -> Result<StabilizerCode> {
    let m = r1.m.max(r2.m);
    if h < m + 1 || l < m {
        return Err(Error::LatticeTooSmall { h, l, m });
    }
    let builder = OpenBuilder {
        x_period: Some(2 * l as i64),
        y_period: None,
        x_window: (0, 2 * l as i64 - 1),
        y_window: (0, 2 * (h as i64 - 1) - 1),
        extras: vec![],
    };
    let (map, gray_mask) = builder.qubit_index_map();
    let n = map.len();
    debug_assert_eq!(n, 2 * (h - 1) * l);
    let rows = builder.truncated_rows(r1, r2, &map, n);
    code_from_rows(rows, gray_mask, Boundary::Cylinder, (h, l), r1, r2)
}

/// Builds the distance-`d` code on the open plane. Each sub-lattice is a
/// `(d-1) x (d-1)` grid and two extra data qubits (one gray at the bottom
/// right, one black at the top left) round the corner stabilizers up from
/// weight 5 to weight 6, giving `n = 2(d-1)^2 + 2`.
pub fn build_plane(r1: &CARule, r2: &CARule, d: usize) -> Result<StabilizerCode> {
    let m = r1.m.max(r2.m);
    if d < m + 1 {
        return Err(Error::LatticeTooSmall { h: d, l: d, m });
    }
    let side = (d - 1) as i64;
    let mut last_err = Error::NonCommuting { row_a: 0, row_b: 0 };
    // The window parity fixes which sub-lattice diagonal meets each open
    // edge; search the four alignments for the one whose corner repair works.
    for (x_lo, y_lo) in [(0i64, 0i64), (0, 1), (1, 0), (1, 1)] {
        let mut builder = OpenBuilder {
            x_period: None,
            y_period: None,
            x_window: (x_lo, x_lo + 2 * side - 1),
            y_window: (y_lo, y_lo + 2 * side - 1),
            extras: vec![],
        };
        let (map, _) = builder.qubit_index_map();
        let rows = builder.truncated_rows(r1, r2, &map, map.len());

        // Find the two weight-5 corner stabilizers; each is repaired by one
        // extra qubit chosen from the cells its untruncated support loses to
        // the window. The two repairs must map onto each other under the 180
        // degree rotation of the window, which also makes one extra black and
        // one gray.
        let w5: Vec<Vec<(i64, i64)>> = rows
            .iter()
            .filter(|r| r.weight() == 5)
            .map(|row| full_support_complement(r1, r2, &builder, row, &map))
            .collect();
        if w5.len() != 2 {
            continue;
        }
        let sum_x = builder.x_window.0 + builder.x_window.1;
        let sum_y = builder.y_window.0 + builder.y_window.1;
        let Some(&low) = w5[0]
            .iter()
            .filter(|&&(x, y)| w5[1].contains(&(sum_x - x, sum_y - y)))
            .min_by_key(|&&(x, y)| (x + y, x))
        else {
            continue;
        };
        builder.extras = vec![low, (sum_x - low.0, sum_y - low.1)];
        let (map, gray_mask) = builder.qubit_index_map();
        let n = map.len();
        if n != 2 * (d - 1) * (d - 1) + 2 {
            continue;
        }
        let rows = builder.truncated_rows(r1, r2, &map, n);
        if rows.iter().any(|r| r.weight() % 2 != 0) {
            continue;
        }
        match code_from_rows(rows, gray_mask, Boundary::Plane, (d, d), r1, r2) {
            Ok(code) if code.k() >= 1 => return Ok(code),
            Ok(_) => continue,
            Err(e) => last_err = e,
        }
    }
    Err(last_err)
}

/// Off-window cells of the untruncated stabilizer whose truncation matches
/// `row`, used to locate the missing corner qubits.
fn full_support_complement(
    r1: &CARule,
    r2: &CARule,
    builder: &OpenBuilder,
    row: &BitVector,
    map: &BTreeMap<(i64, i64), usize>,
) -> Vec<(i64, i64)> {
    let m = r1.m.max(r2.m) as i64;
    let (i_range, j_range) = builder.plaquette_ranges(m);
    for i in i_range {
        for j in j_range.clone() {
            let mut outside = Vec::new();
            let mut truncated = BitVector::zeros(row.len());
            for (sector, rule) in [(Sector::Black, r1), (Sector::Gray, r2)] {
                for &(dc, dr) in &rule.sweep_offsets() {
                    let (x, y) = sector.doubled_coords(i + dc as i64, j + dr as i64);
                    let (x, y) = builder.wrap(x, y);
                    if builder.is_member(x, y) {
                        truncated.set(map[&(x, y)], true);
                    } else {
                        outside.push((x, y));
                    }
                }
            }
            if &truncated == row {
                return outside;
            }
        }
    }
    Vec::new()
}

/// Validation report: symplectic commutation, the weight-2 mixed logical
/// filter, and the presence of logical qubits.
#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub commutes: bool,
    pub commutation_violations: Vec<(usize, usize)>,
    /// Black qubits whose phase flip is indistinguishable from a bit flip on
    /// the probe gray qubit (empty when the filter passes).
    pub weight_two_failures: Vec<usize>,
    pub k: usize,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.commutes && self.weight_two_failures.is_empty() && self.k >= 1
    }
}

/// Checks (a) that all stabilizer pairs commute, (b) that no weight-2 mixed
/// error (bit flip on a probe gray qubit plus phase flip on any black qubit)
/// escapes detection or mimics a single error, and (c) that `k >= 1`.
pub fn validate(code: &StabilizerCode) -> ValidationReport {
    let deformed = if code.is_deformed() {
        code.clone()
    } else {
        clifford_deform(code)
    };
    let commutation_violations = deformed.stabilizers().commutation_violations();

    // In the deformed code a gray bit flip and a black phase flip are both
    // seen by the X-detecting halves of the stabilizers, i.e. by columns of
    // h_x. The pair is undetectable exactly when the two columns coincide.
    let mut weight_two_failures = Vec::new();
    if let Some(&probe) = code.gray_columns().first() {
        let probe_col = code.h_x().column(probe);
        for b in code.black_columns() {
            let col = code.h_x().column(b);
            let mut joint = col.clone();
            joint.xor_assign(&probe_col);
            if joint.is_zero() || joint == col || joint == probe_col {
                weight_two_failures.push(b);
            }
        }
    }

    ValidationReport {
        commutes: commutation_violations.is_empty(),
        commutation_violations,
        weight_two_failures,
        k: code.k(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ca::build_classical_code;

    pub(crate) fn bowtie() -> CARule {
        CARule::new(3, &[(1, 0), (1, 1), (2, 1), (0, 2)]).unwrap()
    }

    pub(crate) fn butterfly() -> CARule {
        CARule::new(3, &[(0, 0), (1, 1), (2, 1), (0, 2)]).unwrap()
    }

    pub(crate) fn rule_102() -> CARule {
        CARule::new(2, &[(0, 0), (1, 0), (0, 1)]).unwrap()
    }

    pub(crate) fn torus_pair(r1: &CARule, h: usize, l: usize) -> StabilizerCode {
        build_torus(r1, &r1.rotate_180(), h, l).unwrap()
    }

    #[test]
    fn table_row_one_code_is_72_12() {
        let r1 = butterfly();
        let code = torus_pair(&r1, 6, 6);
        assert_eq!(code.n(), 72);
        assert_eq!(code.k(), 12);
        assert_eq!(code.h_x().rank(), 30);
        assert_eq!(code.h_x(), code.h_z());
    }

    #[test]
    fn bowtie_code_is_288_12_with_weight_8_rows() {
        let code = torus_pair(&bowtie(), 12, 12);
        assert_eq!(code.n(), 288);
        assert_eq!(code.k(), 12);
        for r in 0..code.h_x().rows() {
            assert_eq!(code.h_x().row_weight(r), 8);
        }
    }

    #[test]
    fn rule_102_pair_is_18_4() {
        let code = torus_pair(&rule_102(), 3, 3);
        assert_eq!(code.n(), 18);
        assert_eq!(code.k(), 4);
    }

    #[test]
    fn torus_codes_commute() {
        for rule in [bowtie(), butterfly(), rule_102()] {
            let code = torus_pair(&rule, 6, 6);
            assert!(code.stabilizers().commutation_violations().is_empty());
            let deformed = clifford_deform(&code);
            assert!(deformed.stabilizers().commutation_violations().is_empty());
        }
    }

    #[test]
    fn sector_blocks_match_classical_codes() {
        let code = torus_pair(&bowtie(), 6, 6);
        let (black, gray) = code.sector_parities();
        let classical = build_classical_code(&bowtie(), 6, 6).unwrap();
        assert!(black.eq_up_to_row_permutation(classical.parity()));
        let classical2 = build_classical_code(&bowtie().rotate_180(), 6, 6).unwrap();
        assert!(gray.eq_up_to_row_permutation(classical2.parity()));
    }

    #[test]
    fn deform_is_involution_and_preserves_k() {
        let code = torus_pair(&bowtie(), 6, 6);
        let deformed = clifford_deform(&code);
        assert!(deformed.is_deformed());
        assert_eq!(deformed.k(), code.k());
        assert_eq!(deformed.n(), code.n());
        let back = clifford_deform(&deformed);
        assert!(!back.is_deformed());
        let (a, b) = (code.stabilizers(), back.stabilizers());
        assert_eq!(a.x_part, b.x_part);
        assert_eq!(a.z_part, b.z_part);
    }

    #[test]
    fn deformed_x_components_decouple_by_sector() {
        let code = clifford_deform(&torus_pair(&bowtie(), 6, 6));
        let stabs = code.stabilizers();
        let hl = code.n() / 2;
        let x_rows = code.h_x().rows();
        for r in 0..stabs.x_part.rows() {
            let support = stabs.x_part.row(r).support();
            if r < x_rows {
                assert!(support.iter().all(|&q| q < hl), "X rows act on black only");
            } else {
                assert!(support.iter().all(|&q| q >= hl), "Z rows act on gray only");
            }
        }
    }

    #[test]
    fn poly_spec_identity_monomial() {
        let spec = PolySpec::self_dual(vec![(0, 0)], 3, 3);
        assert!(spec.is_self_dual());
        let code = build_from_polynomials(&spec);
        assert_eq!(code.n(), 18);
        assert_eq!(code.k(), code.n() - code.h_x().rank() - code.h_z().rank());
        assert_eq!(code.h_x().rank(), 9);
    }

    #[test]
    fn poly_from_rules_matches_torus_row_space() {
        let r1 = butterfly();
        let torus = torus_pair(&r1, 6, 6);
        let spec = PolySpec::from_rules(&r1, &r1.rotate_180(), 6, 6);
        let poly = build_from_polynomials(&spec);
        let stacked = torus.h_x().vstack(poly.h_x());
        assert_eq!(stacked.rank(), torus.h_x().rank());
        assert_eq!(poly.h_x().rank(), torus.h_x().rank());
    }

    #[test]
    fn self_dual_polys_commute() {
        for (a, l, m) in [
            (vec![(0, 0), (1, 2), (2, 1)], 4usize, 5usize),
            (vec![(0, 1), (3, 0), (1, 1), (2, 3)], 5, 4),
            (vec![(0, 0), (1, 0), (0, 1)], 3, 3),
        ] {
            let spec = PolySpec::self_dual(a, l, m);
            let code = build_from_polynomials(&spec);
            assert!(code.h_x().mat_mul(&code.h_z().transpose()).is_zero());
        }
    }

    #[test]
    fn validate_passes_table_codes() {
        for (rule, h, l) in [(butterfly(), 6, 6), (bowtie(), 12, 12), (rule_102(), 3, 3)] {
            let report = validate(&torus_pair(&rule, h, l));
            assert!(report.passed(), "{report:?}");
        }
    }

    #[test]
    fn validate_flags_non_rotated_pair() {
        // A pair without the 180 degree relation generically breaks
        // commutation.
        let r2 = CARule::new(3, &[(0, 0), (1, 0), (0, 1), (1, 1)]).unwrap();
        let code = build_torus(&bowtie(), &r2, 6, 6).unwrap();
        let report = validate(&code);
        assert!(!report.commutes);
    }

    #[test]
    fn validate_trivial_empty_checks() {
        let code = StabilizerCode::new(
            BitMatrix::zeros(0, 1),
            BitMatrix::zeros(0, 1),
            BitVector::zeros(1),
            Boundary::Torus,
            (1, 1),
            None,
        );
        let report = validate(&code);
        assert!(report.commutes);
        assert_eq!(report.k, 1);
    }

    #[test]
    fn cylinder_bowtie_4x4() {
        let code = build_cylinder(&bowtie(), &bowtie().rotate_180(), 4, 4).unwrap();
        assert_eq!(code.n(), 24);
        assert_eq!(code.k(), 6);
        let weights: Vec<usize> = (0..code.h_x().rows())
            .map(|r| code.h_x().row_weight(r))
            .collect();
        assert!(weights.iter().all(|&w| w == 6 || w == 8));
        assert_eq!(weights.iter().filter(|&&w| w == 6).count(), 8);
    }

    #[test]
    fn cylinder_butterfly_12x6() {
        let code = build_cylinder(&butterfly(), &butterfly().rotate_180(), 12, 6).unwrap();
        assert_eq!(code.n(), 132);
        assert_eq!(code.k(), 8);
    }

    #[test]
    fn plane_small_codes() {
        let code = build_plane(&bowtie(), &bowtie().rotate_180(), 5).unwrap();
        assert_eq!(code.n(), 34);
        assert_eq!(code.k(), 2);

        let code = build_plane(&bowtie(), &bowtie().rotate_180(), 8).unwrap();
        assert_eq!(code.n(), 100);
        assert_eq!(code.k(), 4);
        let weights: Vec<usize> = (0..code.h_x().rows())
            .map(|r| code.h_x().row_weight(r))
            .collect();
        assert!(weights.iter().all(|&w| w == 4 || w == 6 || w == 8));
        assert_eq!(weights.iter().filter(|&&w| w == 4).count(), 2);
    }
}
