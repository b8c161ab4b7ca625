//! Distance estimation, mixed logical-representative sampling, logical basis
//! construction, and the bias-dependent effective distance.
//!
//! The decoder-based estimators all work the same way: augment one parity
//! check matrix with a random combination of test logicals drawn from the
//! other matrix's kernel, then decode the syndrome that fires only on the
//! appended row. Whatever the decoder returns commutes with every real check
//! and anticommutes with the test logical, so it is a genuine logical
//! representative; sampling many combinations drives its weight down.

use crate::builder::StabilizerCode;
use crate::ca::ClassicalCode;
use crate::decode::{BposdConfig, BposdDecoder, DecodeProblem};
use crate::gf2::{BitMatrix, BitVector, RowSpace};
use crate::noise::{Bias, NoiseModel};
use crate::{Error, Result};
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Options for the decoder-based distance search.
#[derive(Clone, Copy, Debug)]
pub struct DistanceOptions {
    /// Stop after this many consecutive samples without improvement.
    pub convergence_window: usize,
    /// Hard cap on the number of sampled combinations.
    pub max_samples: usize,
    /// Uniform per-bit prior handed to the decoder.
    pub prior: f64,
    pub bp_iters: usize,
    pub seed: u64,
}

impl Default for DistanceOptions {
    fn default() -> Self {
        Self {
            convergence_window: 100,
            max_samples: 5000,
            prior: 1e-4,
            bp_iters: 1,
            seed: 0,
        }
    }
}

/// A distance upper bound together with the logical operator that attains it.
#[derive(Clone, Debug)]
pub struct DistanceEstimate {
    pub d: usize,
    pub witness: BitVector,
    pub samples: usize,
}

/// Estimates the minimum weight of a Z logical of the CSS pair `(h_x, h_z)`
/// by solving modified decoding problems. Pass a `0 x n` matrix as `h_z` for
/// a classical code. The result is an upper bound that converges to the true
/// distance with enough samples; the witness is verified to lie in
/// `ker(h_x)` and outside the row space of `h_z`.
pub fn code_distance(
    h_x: &BitMatrix,
    h_z: &BitMatrix,
    opts: DistanceOptions,
) -> Result<DistanceEstimate> {
    let n = h_x.cols();
    assert_eq!(h_z.cols(), n);
    let row_x = RowSpace::new(h_x);
    let tests = complement_basis(h_z, &row_x);
    if tests.is_empty() {
        return Err(Error::NoLogicals);
    }

    let max_order = n - row_x.rank() - 1;
    let mut rng = ChaCha12Rng::seed_from_u64(opts.seed);
    let mut best: Option<(usize, BitVector)> = None;
    let mut since_improvement = 0;
    let mut samples = 0;
    while samples < opts.max_samples && since_improvement < opts.convergence_window {
        let Some(combo) = sample_combination(&tests, &row_x, &mut rng) else {
            continue;
        };
        samples += 1;
        let stacked = h_x.vstack_row(&combo);
        let problem = DecodeProblem::uniform(stacked, opts.prior);
        let decoder = BposdDecoder::new(problem, BposdConfig::cs(opts.bp_iters, max_order));
        let mut syndrome = BitVector::zeros(h_x.rows() + 1);
        syndrome.set(h_x.rows(), true);
        let result = decoder.decode(&syndrome)?;
        let witness = result.correction;
        debug_assert!(h_x.mul_vec(&witness).is_zero());
        let w = witness.weight();
        if best.as_ref().is_none_or(|(b, _)| w < *b) {
            best = Some((w, witness));
            since_improvement = 0;
        } else {
            since_improvement += 1;
        }
    }
    let (d, witness) = best.expect("at least one sample ran");
    debug_assert!(!RowSpace::new(h_z).contains(&witness));
    Ok(DistanceEstimate { d, witness, samples })
}

/// Estimate for the classical code: the kernel of the absent Z matrix is the
/// whole space.
pub fn classical_distance_estimate(
    code: &ClassicalCode,
    opts: DistanceOptions,
) -> Result<DistanceEstimate> {
    let empty = BitMatrix::zeros(0, code.n());
    code_distance(code.parity(), &empty, opts)
}

/// Kernel basis vectors of `constraints` that are independent modulo the
/// given row space; any nonempty combination of them stays outside it, so
/// they probe every remaining logical class.
fn complement_basis(constraints: &BitMatrix, exclude: &RowSpace) -> Vec<BitVector> {
    let mut probe = exclude.clone();
    constraints
        .kernel_basis()
        .into_iter()
        .filter(|v| probe.insert(v.clone()))
        .collect()
}

/// Draws a uniform nonempty GF(2) combination of the test logicals that lies
/// outside the given row space.
fn sample_combination<R: Rng>(
    tests: &[BitVector],
    exclude: &RowSpace,
    rng: &mut R,
) -> Option<BitVector> {
    let n = tests[0].len();
    for _ in 0..8 {
        let mut combo = BitVector::zeros(n);
        let mut nonempty = false;
        for t in tests {
            if rng.gen_bool(0.5) {
                combo.xor_assign(t);
                nonempty = true;
            }
        }
        if nonempty && !exclude.contains(&combo) {
            return Some(combo);
        }
    }
    None
}

/// Outcome of the exhaustive low-weight sweep.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LowWeightOutcome {
    /// A logical of this weight exists and none lighter does.
    Exact(usize),
    /// No logical of weight `bound - 1` or less exists.
    AtLeast(usize),
}

/// Exhaustively certifies the CSS distance up to `w_max` by enumerating all
/// single-sector (pure-X and pure-Z) vectors of weight at most `w_max` in the
/// respective kernels, skipping stabilizers. The enumeration branches only on
/// columns incident to an unsatisfied check, which visits every candidate
/// support exactly once while pruning the bulk of the search space.
pub fn exact_distance_low_weight(
    h_x: &BitMatrix,
    h_z: &BitMatrix,
    w_max: usize,
    node_budget: u64,
) -> Result<LowWeightOutcome> {
    let mut best = usize::MAX;
    let mut budget = node_budget;
    if let Some(d) = min_weight_sweep(h_x, h_z, w_max, &mut budget)? {
        best = best.min(d);
    }
    // A checkless matrix marks classical mode: there is no second sector.
    if h_x != h_z && h_z.rows() > 0 {
        // The second sector only matters if it can beat the first.
        let cap = w_max.min(best.saturating_sub(1));
        if let Some(d) = min_weight_sweep(h_z, h_x, cap, &mut budget)? {
            best = best.min(d);
        }
    }
    if best <= w_max {
        Ok(LowWeightOutcome::Exact(best))
    } else {
        Ok(LowWeightOutcome::AtLeast(w_max + 1))
    }
}

/// Minimum weight over `ker(checks) \ rowspace(stabilizers)` restricted to
/// weight `<= w_max`, or `None` when no such vector exists.
fn min_weight_sweep(
    checks: &BitMatrix,
    stabilizers: &BitMatrix,
    w_max: usize,
    budget: &mut u64,
) -> Result<Option<usize>> {
    if w_max == 0 {
        return Ok(None);
    }
    let n = checks.cols();
    let rows = checks.rows();
    let col_checks: Vec<Vec<u32>> = (0..n).map(|c| {
        checks.column(c).ones().map(|r| r as u32).collect()
    }).collect();
    let row_cols: Vec<Vec<u32>> = (0..rows).map(|r| {
        checks.row(r).ones().map(|c| c as u32).collect()
    }).collect();
    let max_col_weight = col_checks.iter().map(Vec::len).max().unwrap_or(0);
    let stab_space = RowSpace::new(stabilizers);

    struct Sweep<'a> {
        col_checks: &'a [Vec<u32>],
        row_cols: &'a [Vec<u32>],
        stab_space: &'a RowSpace,
        max_col_weight: usize,
        n: usize,
        best: usize,
        budget: u64,
        exhausted: bool,
    }

    impl Sweep<'_> {
        fn dfs(
            &mut self,
            chosen: &mut Vec<usize>,
            forbidden: &mut Vec<bool>,
            syndrome: &mut BitVector,
            unsat: usize,
        ) {
            if self.budget == 0 {
                self.exhausted = true;
                return;
            }
            self.budget -= 1;
            if unsat == 0 {
                // A kernel vector; extensions can only be heavier.
                if chosen.len() < self.best {
                    let v = BitVector::from_support(self.n, chosen);
                    if !self.stab_space.contains(&v) {
                        self.best = chosen.len();
                    }
                }
                return;
            }
            // `best` starts at w_max + 1, so this explores weights up to the
            // cap and tightens as logicals are found.
            let remaining = (self.best - 1).saturating_sub(chosen.len());
            if remaining == 0 || unsat > remaining * self.max_col_weight {
                return;
            }
            // Most constrained unsatisfied check: fewest available columns.
            let mut pick: Option<(usize, Vec<usize>)> = None;
            for r in syndrome.ones() {
                let avail: Vec<usize> = self.row_cols[r]
                    .iter()
                    .map(|&c| c as usize)
                    .filter(|&c| !forbidden[c] && !chosen.contains(&c))
                    .collect();
                if avail.is_empty() {
                    return;
                }
                let better = pick.as_ref().is_none_or(|(len, _)| avail.len() < *len);
                if better {
                    let len = avail.len();
                    pick = Some((len, avail));
                    if len == 1 {
                        break;
                    }
                }
            }
            let (_, candidates) = pick.expect("unsat > 0 implies an unsatisfied row");
            let mut newly_forbidden = Vec::new();
            for c in candidates {
                chosen.push(c);
                let mut delta = 0isize;
                for &r in &self.col_checks[c] {
                    if syndrome.get(r as usize) {
                        delta -= 1;
                        syndrome.set(r as usize, false);
                    } else {
                        delta += 1;
                        syndrome.set(r as usize, true);
                    }
                }
                self.dfs(chosen, forbidden, syndrome, (unsat as isize + delta) as usize);
                for &r in &self.col_checks[c] {
                    let r = r as usize;
                    syndrome.set(r, !syndrome.get(r));
                }
                chosen.pop();
                forbidden[c] = true;
                newly_forbidden.push(c);
                if self.exhausted {
                    break;
                }
            }
            for c in newly_forbidden {
                forbidden[c] = false;
            }
        }
    }

    let mut sweep = Sweep {
        col_checks: &col_checks,
        row_cols: &row_cols,
        stab_space: &stab_space,
        max_col_weight,
        n,
        best: w_max + 1,
        budget: *budget,
        exhausted: false,
    };
    let mut syndrome = BitVector::zeros(rows);
    let mut forbidden = vec![false; n];
    for first in 0..n {
        let mut chosen = vec![first];
        let mut unsat = 0usize;
        for &r in &col_checks[first] {
            syndrome.set(r as usize, true);
            unsat += 1;
        }
        sweep.dfs(&mut chosen, &mut forbidden, &mut syndrome, unsat);
        for &r in &col_checks[first] {
            syndrome.set(r as usize, false);
        }
        forbidden[first] = true;
        if sweep.exhausted {
            break;
        }
    }
    let used = *budget - sweep.budget;
    *budget = sweep.budget;
    if sweep.exhausted {
        return Err(Error::BudgetExceeded { visited: used, cap: used });
    }
    Ok((sweep.best <= w_max).then_some(sweep.best))
}

/// Minimum Hamming weight `L(s)` of a sampled logical representative carrying
/// exactly `s` non-Z Pauli operators in the deformed code (its gray-sector
/// support), keyed by `s`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightProfile {
    entries: BTreeMap<usize, ProfileEntry>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub weight: usize,
    pub samples: u64,
}

impl WeightProfile {
    pub fn insert(&mut self, s: usize, weight: usize) {
        let entry = self.entries.entry(s).or_insert(ProfileEntry { weight, samples: 0 });
        entry.weight = entry.weight.min(weight);
        entry.samples += 1;
    }

    pub fn l(&self, s: usize) -> Option<usize> {
        self.entries.get(&s).map(|e| e.weight)
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, ProfileEntry)> + '_ {
        self.entries.iter().map(|(&s, &e)| (s, e))
    }

    /// Minimum weight over all sampled sectors; equals the code distance when
    /// the profile is complete.
    pub fn min_weight(&self) -> Option<usize> {
        self.entries.values().map(|e| e.weight).min()
    }

    pub fn merge(&mut self, other: &WeightProfile) {
        for (s, e) in other.entries() {
            let entry = self
                .entries
                .entry(s)
                .or_insert(ProfileEntry { weight: e.weight, samples: 0 });
            entry.weight = entry.weight.min(e.weight);
            entry.samples += e.samples;
        }
    }
}

/// Sampling options for [`sample_logicals`]: a grid of `(p, eta)` noise
/// points and a cap on random test-logical combinations per point.
#[derive(Clone, Debug)]
pub struct LogicalSampleOptions {
    pub grid: Vec<(f64, Bias)>,
    pub combos_per_point: usize,
    pub bp_iters: usize,
    pub seed: u64,
}

impl Default for LogicalSampleOptions {
    fn default() -> Self {
        let mut grid = Vec::new();
        for &p in &[1e-4, 1e-3, 1e-2, 1e-1, 0.49] {
            for &eta in &[1.0, 1e1, 1e3, 1e5, 1e7, 1e9, 1e11, 1e13] {
                grid.push((p, Bias::Finite(eta)));
            }
        }
        Self { grid, combos_per_point: 64, bp_iters: 1, seed: 0 }
    }
}

/// Runs the modified-decoding sampler over the grid and pools the minimum
/// weight per non-Z content `s`. The noise channels are gray-rotated so the
/// profile describes the deformed code while decoding with the CSS matrices.
pub fn sample_logicals(code: &StabilizerCode, opts: &LogicalSampleOptions) -> Result<WeightProfile> {
    let h_x = code.h_x();
    let h_z = code.h_z();
    let row_x = RowSpace::new(h_x);
    let tests = complement_basis(h_z, &row_x);
    if tests.is_empty() {
        return Err(Error::NoLogicals);
    }
    let max_order = code.n() - row_x.rank() - 1;
    let gray = code.gray_mask();
    let mut profile = WeightProfile::default();
    let mut rng = ChaCha12Rng::seed_from_u64(opts.seed);
    for &(p, bias) in &opts.grid {
        let noise = NoiseModel::from_bias(p, bias).rotated();
        let priors = noise.z_priors(gray);
        for _ in 0..opts.combos_per_point {
            let Some(combo) = sample_combination(&tests, &row_x, &mut rng) else {
                continue;
            };
            let stacked = h_x.vstack_row(&combo);
            let mut stacked_priors = priors.clone();
            stacked_priors.iter_mut().for_each(|p| *p = p.min(0.5));
            let problem = DecodeProblem::new(stacked, stacked_priors);
            let decoder = BposdDecoder::new(problem, BposdConfig::cs(opts.bp_iters, max_order));
            let mut syndrome = BitVector::zeros(h_x.rows() + 1);
            syndrome.set(h_x.rows(), true);
            let witness = decoder.decode(&syndrome)?.correction;
            debug_assert!(h_x.mul_vec(&witness).is_zero());
            let s = witness.ones().filter(|&q| gray.get(q)).count();
            profile.insert(s, witness.weight());
        }
    }
    Ok(profile)
}

/// The bias-dependent effective distance `d' = min_s L(s) + s * delta` with
/// `delta = -ln(eta) / ln(p_z)`. At infinite bias this is exactly `L(0)`.
pub fn effective_distance(profile: &WeightProfile, p_z: f64, eta: Bias) -> f64 {
    assert!(p_z > 0.0 && p_z < 1.0, "p_z must lie strictly inside (0, 1)");
    match eta {
        Bias::Infinite => profile.l(0).map_or(f64::INFINITY, |w| w as f64),
        Bias::Finite(eta) => {
            assert!(eta >= 1.0);
            let delta = -eta.ln() / p_z.ln();
            profile
                .entries()
                .map(|(s, e)| e.weight as f64 + s as f64 * delta)
                .fold(f64::INFINITY, f64::min)
        }
    }
}

/// Overhead reduction factor `k * d_c / n`; 1 for the repetition code.
pub fn v_infinity(k: usize, d_c: usize, n: usize) -> f64 {
    assert!(n > 0);
    (k * d_c) as f64 / n as f64
}

/// Paired logical representatives of the deformed code.
///
/// Row `i` of `z_logicals` is the support of an all-Z logical; since its
/// restriction to either sub-lattice is a classical codeword there, a pure
/// phase-flip residual can never anticommute with it, and X failures vanish
/// identically at infinite bias.
///
/// The partner of Z logical `i` acts as X on row `i` of `x_logicals` and as Z
/// on row `i` of `x_logicals_z`. The Z part is zero whenever the all-Z/all-X
/// pairing permits it; some codes have all-Z classes that commute with every
/// all-X operator, and their partners are necessarily mixed.
#[derive(Clone, Debug)]
pub struct LogicalBasis {
    pub x_logicals: BitMatrix,
    pub x_logicals_z: BitMatrix,
    pub z_logicals: BitMatrix,
}

impl LogicalBasis {
    pub fn k(&self) -> usize {
        self.z_logicals.rows()
    }

    /// `x_logicals . z_logicals^T` over GF(2); identity for a valid basis.
    /// (Partner Z parts never meet the all-Z logicals symplectically.)
    pub fn pairing_matrix(&self) -> BitMatrix {
        self.x_logicals.mat_mul(&self.z_logicals.transpose())
    }
}

/// Supports of the all-Z elements of the deformed stabilizer group: Z parts
/// of stabilizer products whose X parts cancel.
pub fn all_z_stabilizer_span(code: &StabilizerCode) -> BitMatrix {
    let deformed = if code.is_deformed() {
        code.clone()
    } else {
        crate::builder::clifford_deform(code)
    };
    let stabs = deformed.stabilizers();
    let combos = stabs.x_part.transpose().kernel_basis();
    let rows: Vec<BitVector> = combos
        .iter()
        .map(|c| stabs.z_part.transpose().mul_vec(c))
        .collect();
    if rows.is_empty() {
        BitMatrix::zeros(0, code.n())
    } else {
        BitMatrix::from_rows(&rows)
    }
}

#[derive(Clone, Debug)]
pub struct BasisOptions {
    pub combos_per_round: usize,
    pub max_rounds: usize,
    pub bp_iters: usize,
    pub seed: u64,
}

impl Default for BasisOptions {
    fn default() -> Self {
        Self { combos_per_round: 64, max_rounds: 50, bp_iters: 1, seed: 0 }
    }
}

/// Builds a full logical basis by repeated modified decoding, augmenting the
/// constraint matrices with each accepted logical so later samples are
/// independent of earlier ones and the pairing matrix comes out the identity.
///
/// All-Z candidates are decoded from the X parts of the deformed stabilizers
/// (their kernel is exactly the commuting all-Z supports) against test probes
/// drawn from the X parts of general commuting Pauli pairs. Partners are
/// decoded over the doubled column space so they can pick up a Z part when an
/// all-X partner does not exist. Z-side priors are the physical Z marginals;
/// partner supports prefer pure-X solutions.
pub fn logical_basis(
    code: &StabilizerCode,
    noise: &NoiseModel,
    opts: &BasisOptions,
) -> Result<LogicalBasis> {
    let k = code.k();
    let n = code.n();
    if k == 0 {
        return Err(Error::NoLogicals);
    }
    // Supports describe deformed-frame operators; the physical channel
    // applies unrotated.
    let noise = NoiseModel { rotated: false, ..noise.clone() };
    let z_priors: Vec<f64> = (0..n)
        .map(|_| noise.z_marginal(false).max(crate::noise::PRIOR_FLOOR).min(0.5))
        .collect();
    let deformed = if code.is_deformed() {
        code.clone()
    } else {
        crate::builder::clifford_deform(code)
    };
    let stabs = deformed.stabilizers();
    let x_parts = &stabs.x_part;
    let z_parts = &stabs.z_part;

    // Probe pool: X parts of Pauli pairs commuting with every stabilizer.
    let pair_kernel = z_parts.hstack(x_parts).kernel_basis();
    let probe_pool: Vec<BitVector> = pair_kernel.iter().map(|p| p.slice(0..n)).collect();

    // Acceptance is independence modulo the all-Z stabilizer elements.
    let mut classes = RowSpace::new(&all_z_stabilizer_span(code));
    let mut z_found: Vec<BitVector> = Vec::new();
    let mut partner_x: Vec<BitVector> = Vec::new();
    let mut partner_z: Vec<BitVector> = Vec::new();
    let mut rng = ChaCha12Rng::seed_from_u64(opts.seed);

    for _round in 0..opts.max_rounds {
        if z_found.len() == k {
            break;
        }
        // Constraints on new all-Z candidates: commute with every stabilizer
        // X part and with every accepted partner.
        let mut zdec_rows: Vec<BitVector> = (0..x_parts.rows()).map(|r| x_parts.row(r)).collect();
        zdec_rows.extend(partner_x.iter().cloned());
        let zdec = BitMatrix::from_rows(&zdec_rows);
        let row_sp = RowSpace::new(&zdec);
        let mut probe_sp = row_sp.clone();
        let tests: Vec<BitVector> = probe_pool
            .iter()
            .filter(|w| probe_sp.insert((*w).clone()))
            .cloned()
            .collect();
        if tests.is_empty() {
            continue;
        }
        let max_order = n - row_sp.rank() - 1;
        let mut candidates: Vec<BitVector> = Vec::new();
        for _ in 0..opts.combos_per_round {
            let Some(combo) = sample_combination(&tests, &row_sp, &mut rng) else {
                continue;
            };
            let stacked = zdec.vstack_row(&combo);
            let problem = DecodeProblem::new(stacked, z_priors.clone());
            let decoder = BposdDecoder::new(problem, BposdConfig::cs(opts.bp_iters, max_order));
            let mut syndrome = BitVector::zeros(zdec.rows() + 1);
            syndrome.set(zdec.rows(), true);
            candidates.push(decoder.decode(&syndrome)?.correction);
        }
        candidates.sort_by_key(|c| (c.weight(), c.support()));

        let mut fresh = 0;
        for cand in candidates {
            if z_found.len() == k {
                break;
            }
            if classes.insert(cand.clone()) {
                z_found.push(cand);
                fresh += 1;
            }
        }
        if fresh == 0 {
            continue;
        }

        // Partners over the doubled columns (x | z): commute with all
        // stabilizers and hit exactly one accepted all-Z logical. A mild
        // penalty on the z columns prefers pure-X partners.
        let mut sys_rows: Vec<BitVector> = (0..z_parts.rows())
            .map(|r| z_parts.row(r).concat(&x_parts.row(r)))
            .collect();
        let zero_n = BitVector::zeros(n);
        for v in &z_found {
            sys_rows.push(v.concat(&zero_n));
        }
        let sys = BitMatrix::from_rows(&sys_rows);
        let mut partner_priors = vec![1e-4; n];
        partner_priors.extend(vec![1e-6; n]);
        let max_order_sys = 2 * n - sys.rank();
        let problem = DecodeProblem::new(sys.clone(), partner_priors);
        let decoder = BposdDecoder::new(problem, BposdConfig::cs(opts.bp_iters, max_order_sys));
        partner_x.clear();
        partner_z.clear();
        for i in 0..z_found.len() {
            let mut syndrome = BitVector::zeros(sys.rows());
            syndrome.set(z_parts.rows() + i, true);
            let pair = decoder.decode(&syndrome)?.correction;
            partner_x.push(pair.slice(0..n));
            partner_z.push(pair.slice(n..2 * n));
        }
    }
    if z_found.len() < k {
        return Err(Error::BasisBudgetExhausted);
    }
    let basis = LogicalBasis {
        x_logicals: BitMatrix::from_rows(&partner_x),
        x_logicals_z: BitMatrix::from_rows(&partner_z),
        z_logicals: BitMatrix::from_rows(&z_found),
    };
    debug_assert_eq!(basis.pairing_matrix(), BitMatrix::identity(k));
    Ok(basis)
}
