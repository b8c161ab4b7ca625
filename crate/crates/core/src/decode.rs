//! Syndrome decoders: product-sum belief propagation with ordered-statistics
//! post-processing, an exhaustive maximum-likelihood oracle for small codes,
//! and the large-bias hybrid decoder that races `n + 2` decoding problems.
//!
//! All soft arithmetic happens in the log-likelihood-ratio domain, clamped to
//! +-30 so that priors at bias 10^13 (or the floored zero priors of infinite
//! bias) stay finite and runs are reproducible.

use crate::builder::StabilizerCode;
use crate::gf2::{BitMatrix, BitVector};
use crate::noise::NoiseModel;
use crate::{Error, Result};

pub const LLR_CLAMP: f64 = 30.0;

/// Log-likelihood ratio `ln((1-p)/p)` of an error prior, clamped to +-30.
pub fn llr_from_prior(p: f64) -> f64 {
    if p <= 0.0 {
        return LLR_CLAMP;
    }
    (((1.0 - p) / p).ln()).clamp(-LLR_CLAMP, LLR_CLAMP)
}

/// A syndrome decoding problem: a parity check matrix and one error prior per
/// bit, each strictly positive and at most one half.
#[derive(Clone, Debug)]
pub struct DecodeProblem {
    pub parity: BitMatrix,
    pub priors: Vec<f64>,
}

impl DecodeProblem {
    pub fn new(parity: BitMatrix, priors: Vec<f64>) -> Self {
        assert_eq!(priors.len(), parity.cols(), "one prior per bit");
        assert!(
            priors.iter().all(|&p| p > 0.0 && p <= 0.5),
            "priors must lie in (0, 0.5]"
        );
        Self { parity, priors }
    }

    pub fn uniform(parity: BitMatrix, p: f64) -> Self {
        let n = parity.cols();
        Self::new(parity, vec![p; n])
    }

    pub fn prior_llrs(&self) -> Vec<f64> {
        self.priors.iter().map(|&p| llr_from_prior(p)).collect()
    }

    /// Largest admissible ordered-statistics order: the number of free
    /// columns, `cols - rank`.
    pub fn max_osd_order(&self) -> usize {
        self.parity.cols() - self.parity.rank()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OsdStrategy {
    /// Exhaustive order-`w` sweep: all `2^w` patterns over the `w` least
    /// reliable free bits.
    E,
    /// Combination sweep: every single free-bit flip, plus all pairs among
    /// the `w` least reliable free bits.
    Cs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecodeMethod {
    Bp,
    OsdE,
    OsdCs,
    Hybrid,
    Exhaustive,
}

impl std::fmt::Display for DecodeMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = match self {
            DecodeMethod::Bp => "bp",
            DecodeMethod::OsdE => "osd-e",
            DecodeMethod::OsdCs => "osd-cs",
            DecodeMethod::Hybrid => "hybrid",
            DecodeMethod::Exhaustive => "exhaustive",
        };
        write!(f, "{tag}")
    }
}

#[derive(Clone, Debug)]
pub struct DecodeResult {
    pub correction: BitVector,
    pub converged: bool,
    pub method: DecodeMethod,
    /// Weighted log-likelihood `sum ln((1-p_i)/p_i)` over the support.
    pub score: f64,
}

/// Soft output of belief propagation.
#[derive(Clone, Debug)]
pub struct BpOutput {
    pub posterior_llr: Vec<f64>,
    pub hard: BitVector,
    pub converged: bool,
    pub iterations: usize,
}

/// Product-sum belief propagation on the Tanner graph of a fixed parity
/// check matrix, flooding schedule, no damping.
pub struct BpDecoder {
    rows: usize,
    cols: usize,
    check_offsets: Vec<usize>,
    check_vars: Vec<u32>,
    var_edges: Vec<Vec<u32>>,
}

impl BpDecoder {
    pub fn new(parity: &BitMatrix) -> Self {
        let rows = parity.rows();
        let cols = parity.cols();
        let mut check_offsets = Vec::with_capacity(rows + 1);
        let mut check_vars = Vec::new();
        let mut var_edges = vec![Vec::new(); cols];
        check_offsets.push(0);
        for r in 0..rows {
            for c in parity.row(r).ones() {
                var_edges[c].push(check_vars.len() as u32);
                check_vars.push(c as u32);
            }
            check_offsets.push(check_vars.len());
        }
        Self {
            rows,
            cols,
            check_offsets,
            check_vars,
            var_edges,
        }
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn run(&self, prior_llrs: &[f64], syndrome: &BitVector, max_iters: usize) -> BpOutput {
        assert_eq!(prior_llrs.len(), self.cols);
        assert_eq!(syndrome.len(), self.rows);
        let edges = self.check_vars.len();
        let mut m_vc: Vec<f64> = self.check_vars.iter().map(|&v| prior_llrs[v as usize]).collect();
        let mut m_cv = vec![0.0f64; edges];
        let mut posterior: Vec<f64> = prior_llrs.to_vec();
        let mut hard = BitVector::zeros(self.cols);
        let mut scratch = Vec::new();

        let satisfied = |hard: &BitVector| -> bool {
            for r in 0..self.rows {
                let mut parity = false;
                for e in self.check_offsets[r]..self.check_offsets[r + 1] {
                    parity ^= hard.get(self.check_vars[e] as usize);
                }
                if parity != syndrome.get(r) {
                    return false;
                }
            }
            true
        };

        // A zero-error hard decision may already satisfy the syndrome.
        if satisfied(&hard) {
            return BpOutput {
                posterior_llr: posterior,
                hard,
                converged: true,
                iterations: 0,
            };
        }

        for iter in 1..=max_iters {
            // Check-to-variable pass with stable prefix/suffix products.
            for r in 0..self.rows {
                let span = self.check_offsets[r]..self.check_offsets[r + 1];
                let deg = span.len();
                if deg == 0 {
                    continue;
                }
                scratch.clear();
                scratch.resize(deg + 1, 1.0);
                for (t, e) in span.clone().enumerate() {
                    scratch[t + 1] = scratch[t] * (m_vc[e] * 0.5).tanh();
                }
                let mut suffix = 1.0;
                let sign = if syndrome.get(r) { -1.0 } else { 1.0 };
                for (t, e) in span.clone().enumerate().rev() {
                    let excl = scratch[t] * suffix;
                    suffix *= (m_vc[e] * 0.5).tanh();
                    let excl = excl.clamp(-0.999_999_999_999_99, 0.999_999_999_999_99);
                    m_cv[e] = (sign * 2.0 * excl.atanh()).clamp(-LLR_CLAMP, LLR_CLAMP);
                }
            }
            // Variable-to-check pass and hard decision.
            for v in 0..self.cols {
                let mut total = prior_llrs[v];
                for &e in &self.var_edges[v] {
                    total += m_cv[e as usize];
                }
                posterior[v] = total;
                hard.set(v, total < 0.0);
                for &e in &self.var_edges[v] {
                    m_vc[e as usize] = (total - m_cv[e as usize]).clamp(-LLR_CLAMP, LLR_CLAMP);
                }
            }
            if satisfied(&hard) {
                return BpOutput {
                    posterior_llr: posterior,
                    hard,
                    converged: true,
                    iterations: iter,
                };
            }
        }
        BpOutput {
            posterior_llr: posterior,
            hard,
            converged: false,
            iterations: max_iters,
        }
    }
}

/// Spec-shaped wrapper around [`BpDecoder`].
pub fn bp_decode(prob: &DecodeProblem, syndrome: &BitVector, max_iters: usize) -> BpOutput {
    BpDecoder::new(&prob.parity).run(&prob.prior_llrs(), syndrome, max_iters)
}

/// Ordered-statistics post-processing of BP soft output.
///
/// Columns are ranked most-error-prone first (ascending posterior LLR, ties
/// by column index). An information set is solved exactly for the order-0
/// candidate; higher orders flip free bits per the strategy. The candidate
/// with the smallest prior-weighted log-likelihood wins.
pub fn osd_post(
    prob: &DecodeProblem,
    syndrome: &BitVector,
    soft_llr: &[f64],
    order: usize,
    strategy: OsdStrategy,
) -> Result<DecodeResult> {
    let parity = &prob.parity;
    let n = parity.cols();
    assert_eq!(soft_llr.len(), n);
    let prior_llrs = prob.prior_llrs();

    let mut perm: Vec<usize> = (0..n).collect();
    perm.sort_by(|&a, &b| soft_llr[a].total_cmp(&soft_llr[b]).then(a.cmp(&b)));

    // Reduced row echelon form of the permuted matrix with the syndrome riding
    // in the last column.
    let mut work = parity.select_columns(&perm);
    let mut rhs = BitMatrix::zeros(parity.rows(), 1);
    for r in syndrome.ones() {
        rhs.set(r, 0, true);
    }
    work = work.hstack(&rhs);
    let mut pivots: Vec<usize> = Vec::new();
    {
        let mut next_row = 0;
        for c in 0..n {
            let Some(p) = (next_row..work.rows()).find(|&r| work.get(r, c)) else {
                continue;
            };
            work.swap_rows(p, next_row);
            for r in 0..work.rows() {
                if r != next_row && work.get(r, c) {
                    work.xor_rows_from(r, next_row);
                }
            }
            pivots.push(c);
            next_row += 1;
            if next_row == work.rows() {
                break;
            }
        }
    }
    let rank = pivots.len();
    for r in rank..work.rows() {
        if work.get(r, n) {
            return Err(Error::InvalidSpec("syndrome outside column space".into()));
        }
    }

    let free: Vec<usize> = {
        let mut is_pivot = vec![false; n];
        for &c in &pivots {
            is_pivot[c] = true;
        }
        (0..n).filter(|&c| !is_pivot[c]).collect()
    };
    let order = order.min(free.len());

    // Pivot-row bit columns for the base solution and each candidate flip.
    let words = rank.div_ceil(64);
    let col_bits = |c: usize| -> Vec<u64> {
        let mut bits = vec![0u64; words.max(1)];
        for r in 0..rank {
            if work.get(r, c) {
                bits[r >> 6] |= 1 << (r & 63);
            }
        }
        bits
    };
    let base = col_bits(n);
    let flip_cols: Vec<Vec<u64>> = match strategy {
        OsdStrategy::E => free[..order].iter().map(|&f| col_bits(f)).collect(),
        OsdStrategy::Cs => free.iter().map(|&f| col_bits(f)).collect(),
    };
    let pivot_weights: Vec<f64> = pivots.iter().map(|&c| prior_llrs[perm[c]]).collect();
    let free_weights: Vec<f64> = free.iter().map(|&f| prior_llrs[perm[f]]).collect();

    let score_of = |bits: &[u64], flips: &[usize]| -> f64 {
        let mut s = 0.0;
        for (wi, &w) in bits.iter().enumerate() {
            let mut w = w;
            while w != 0 {
                let b = w.trailing_zeros() as usize;
                s += pivot_weights[(wi << 6) | b];
                w &= w - 1;
            }
        }
        for &f in flips {
            s += free_weights[f];
        }
        s
    };

    let mut best_bits = base.clone();
    let mut best_flips: Vec<usize> = Vec::new();
    let mut best_score = score_of(&base, &[]);
    let mut consider = |bits: &[u64], flips: &[usize], best_bits: &mut Vec<u64>,
                        best_flips: &mut Vec<usize>, best_score: &mut f64| {
        let s = score_of(bits, flips);
        if s < *best_score {
            *best_score = s;
            *best_bits = bits.to_vec();
            *best_flips = flips.to_vec();
        }
    };

    match strategy {
        OsdStrategy::E => {
            // Gray-code walk over all 2^order patterns of the least reliable
            // free bits.
            let mut cur = base.clone();
            let mut flips = vec![false; order];
            for g in 1u64..(1u64 << order) {
                let bit = g.trailing_zeros() as usize;
                flips[bit] = !flips[bit];
                for (a, b) in cur.iter_mut().zip(&flip_cols[bit]) {
                    *a ^= b;
                }
                let active: Vec<usize> = (0..order).filter(|&i| flips[i]).collect();
                consider(&cur, &active, &mut best_bits, &mut best_flips, &mut best_score);
            }
        }
        OsdStrategy::Cs => {
            let mut cur = base.clone();
            for (f, col) in flip_cols.iter().enumerate() {
                for (a, b) in cur.iter_mut().zip(col) {
                    *a ^= b;
                }
                consider(&cur, &[f], &mut best_bits, &mut best_flips, &mut best_score);
                for (a, b) in cur.iter_mut().zip(col) {
                    *a ^= b;
                }
            }
            for f1 in 0..order {
                for (a, b) in cur.iter_mut().zip(&flip_cols[f1]) {
                    *a ^= b;
                }
                for f2 in (f1 + 1)..order {
                    for (a, b) in cur.iter_mut().zip(&flip_cols[f2]) {
                        *a ^= b;
                    }
                    consider(&cur, &[f1, f2], &mut best_bits, &mut best_flips, &mut best_score);
                    for (a, b) in cur.iter_mut().zip(&flip_cols[f2]) {
                        *a ^= b;
                    }
                }
                for (a, b) in cur.iter_mut().zip(&flip_cols[f1]) {
                    *a ^= b;
                }
            }
        }
    }

    let mut correction = BitVector::zeros(n);
    for (wi, &w) in best_bits.iter().enumerate() {
        let mut w = w;
        while w != 0 {
            let b = w.trailing_zeros() as usize;
            correction.set(perm[pivots[(wi << 6) | b]], true);
            w &= w - 1;
        }
    }
    for &f in &best_flips {
        correction.set(perm[free[f]], true);
    }
    debug_assert_eq!(&parity.mul_vec(&correction), syndrome);
    Ok(DecodeResult {
        correction,
        converged: true,
        method: match strategy {
            OsdStrategy::E => DecodeMethod::OsdE,
            OsdStrategy::Cs => DecodeMethod::OsdCs,
        },
        score: best_score,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct BposdConfig {
    pub bp_iters: usize,
    pub order: usize,
    pub strategy: OsdStrategy,
}

impl BposdConfig {
    pub fn e(bp_iters: usize, order: usize) -> Self {
        Self { bp_iters, order, strategy: OsdStrategy::E }
    }

    pub fn cs(bp_iters: usize, order: usize) -> Self {
        Self { bp_iters, order, strategy: OsdStrategy::Cs }
    }
}

/// BP followed by OSD on non-convergence, over a fixed problem.
pub struct BposdDecoder {
    problem: DecodeProblem,
    prior_llrs: Vec<f64>,
    bp: BpDecoder,
    cfg: BposdConfig,
}

impl BposdDecoder {
    pub fn new(problem: DecodeProblem, cfg: BposdConfig) -> Self {
        let bp = BpDecoder::new(&problem.parity);
        let prior_llrs = problem.prior_llrs();
        Self { problem, prior_llrs, bp, cfg }
    }

    pub fn problem(&self) -> &DecodeProblem {
        &self.problem
    }

    pub fn decode(&self, syndrome: &BitVector) -> Result<DecodeResult> {
        let bp_out = self.bp.run(&self.prior_llrs, syndrome, self.cfg.bp_iters);
        if bp_out.converged {
            let score = bp_out
                .hard
                .ones()
                .map(|q| self.prior_llrs[q])
                .sum();
            return Ok(DecodeResult {
                correction: bp_out.hard,
                converged: true,
                method: DecodeMethod::Bp,
                score,
            });
        }
        let mut result = osd_post(
            &self.problem,
            syndrome,
            &bp_out.posterior_llr,
            self.cfg.order,
            self.cfg.strategy,
        )?;
        result.converged = false;
        Ok(result)
    }
}

/// Exact maximum-likelihood decoding of a classical problem by enumerating
/// the full solution coset. An oracle: requires `cols - rank` at most 24.
pub fn classical_ml_decode(prob: &DecodeProblem, syndrome: &BitVector) -> Option<DecodeResult> {
    let e0 = prob.parity.solve(syndrome)?;
    let basis = prob.parity.kernel_basis();
    assert!(basis.len() <= 24, "coset enumeration oracle capped at 2^24");
    let llrs = prob.prior_llrs();
    let score = |v: &BitVector| -> f64 { v.ones().map(|q| llrs[q]).sum() };
    let mut best = e0.clone();
    let mut best_score = score(&e0);
    let mut cur = e0;
    for g in 1u64..(1u64 << basis.len()) {
        cur.xor_assign(&basis[g.trailing_zeros() as usize]);
        let s = score(&cur);
        if s < best_score {
            best_score = s;
            best = cur.clone();
        }
    }
    Some(DecodeResult {
        correction: best,
        converged: true,
        method: DecodeMethod::Exhaustive,
        score: best_score,
    })
}

/// CSS syndrome: `s_x = h_x . e_z` (X checks see Z components) and
/// `s_z = h_z . e_x`.
#[derive(Clone, Debug, PartialEq)]
pub struct CssSyndrome {
    pub s_x: BitVector,
    pub s_z: BitVector,
}

impl CssSyndrome {
    pub fn of_error(code: &StabilizerCode, e_z: &BitVector, e_x: &BitVector) -> Self {
        Self {
            s_x: code.h_x().mul_vec(e_z),
            s_z: code.h_z().mul_vec(e_x),
        }
    }
}

/// A Pauli correction split into Z and X components over all qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliCorrection {
    pub e_z: BitVector,
    pub e_x: BitVector,
    pub method: DecodeMethod,
    pub score: f64,
}

/// Exhaustive maximum-probability decoding over all Pauli errors of weight at
/// most `weight_cap`, under the (possibly rotated) noise model. Exact ML
/// restricted to the enumerated set.
pub fn exhaustive_ml_decode(
    code: &StabilizerCode,
    noise: &NoiseModel,
    syndrome: &CssSyndrome,
    weight_cap: usize,
) -> Result<PauliCorrection> {
    let n = code.n();
    let mut budget: f64 = 0.0;
    let mut binom = 1.0f64;
    for w in 0..=weight_cap {
        budget += binom * 3f64.powi(w as i32);
        binom = binom * (n - w) as f64 / (w + 1) as f64;
    }
    if budget > 1e8 {
        return Err(Error::BudgetExceeded { visited: budget as u64, cap: 100_000_000 });
    }

    let target = syndrome.s_x.concat(&syndrome.s_z);
    let rx = syndrome.s_x.len();
    let zero = BitVector::zeros(target.len());
    // Per-qubit, per-Pauli syndrome contributions and log-likelihood costs
    // relative to the identity.
    let mut contribs: Vec<[Option<(BitVector, f64)>; 3]> = Vec::with_capacity(n);
    for q in 0..n {
        let rates = noise.rates(code.gray_mask().get(q));
        let p_i = 1.0 - rates.p_x - rates.p_y - rates.p_z;
        let z_syn = {
            let mut s = zero.clone();
            for r in code.h_x().column(q).ones() {
                s.set(r, true);
            }
            s
        };
        let x_syn = {
            let mut s = zero.clone();
            for r in code.h_z().column(q).ones() {
                s.set(rx + r, true);
            }
            s
        };
        let y_syn = {
            let mut s = z_syn.clone();
            s.xor_assign(&x_syn);
            s
        };
        let cost = |p: f64| -> Option<f64> {
            (p > 0.0).then(|| (p_i / p).ln())
        };
        contribs.push([
            cost(rates.p_x).map(|c| (x_syn, c)),
            cost(rates.p_y).map(|c| (y_syn, c)),
            cost(rates.p_z).map(|c| (z_syn, c)),
        ]);
    }

    struct Search<'a> {
        contribs: &'a [[Option<(BitVector, f64)>; 3]],
        target: &'a BitVector,
        best: Option<(Vec<(usize, usize)>, f64)>,
    }

    impl Search<'_> {
        fn dfs(
            &mut self,
            start: usize,
            syn: &BitVector,
            cost: f64,
            remaining: usize,
            stack: &mut Vec<(usize, usize)>,
        ) {
            if syn == self.target && self.best.as_ref().is_none_or(|(_, c)| cost < *c) {
                self.best = Some((stack.clone(), cost));
            }
            if remaining == 0 {
                return;
            }
            for q in start..self.contribs.len() {
                for (pauli, entry) in self.contribs[q].iter().enumerate() {
                    let Some((delta, c)) = entry else { continue };
                    let mut next = syn.clone();
                    next.xor_assign(delta);
                    stack.push((q, pauli));
                    self.dfs(q + 1, &next, cost + c, remaining - 1, stack);
                    stack.pop();
                }
            }
        }
    }

    let mut search = Search { contribs: &contribs, target: &target, best: None };
    search.dfs(0, &zero, 0.0, weight_cap, &mut Vec::new());
    let Some((choice, score)) = search.best else {
        return Err(Error::NoCandidateWithinCap { cap: weight_cap });
    };
    let mut e_z = BitVector::zeros(n);
    let mut e_x = BitVector::zeros(n);
    for (q, pauli) in choice {
        match pauli {
            0 => e_x.set(q, true),
            1 => {
                e_x.set(q, true);
                e_z.set(q, true);
            }
            _ => e_z.set(q, true),
        }
    }
    Ok(PauliCorrection { e_z, e_x, method: DecodeMethod::Exhaustive, score })
}

/// Which of the `n + 2` hybrid decoding problems produced the winner.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HybridBranch {
    CssSplit,
    Classical,
    Flip(usize),
}

#[derive(Clone, Copy, Debug)]
pub struct HybridConfig {
    pub bp_iters: usize,
    pub cs_order: usize,
}

impl Default for HybridConfig {
    fn default() -> Self {
        Self { bp_iters: 1000, cs_order: 50 }
    }
}

/// The large-bias hybrid decoder. Solves the split CSS problems, the pure-Z
/// classical problem on the decoupled sector graphs, and `n` variants with a
/// hypothesized single bit flip folded into the syndrome; keeps the candidate
/// with the lowest prior-weighted log-likelihood.
pub struct HybridDecoder {
    css_x: BposdDecoder,
    css_z: BposdDecoder,
    black_cols: Vec<usize>,
    gray_cols: Vec<usize>,
    black_dec: BposdDecoder,
    gray_dec: BposdDecoder,
    flip_syn_x: Vec<BitVector>,
    flip_syn_z: Vec<BitVector>,
    llr_z: Vec<f64>,
    llr_x: Vec<f64>,
    n: usize,
    h_x: BitMatrix,
    h_z: BitMatrix,
}

impl HybridDecoder {
    pub fn new(code: &StabilizerCode, noise: &NoiseModel, cfg: HybridConfig) -> Self {
        let noise = if noise.rotated { noise.clone() } else { noise.clone().rotated() };
        let z_priors = noise.z_priors(code.gray_mask());
        let x_priors = noise.x_priors(code.gray_mask());
        let css_x = BposdDecoder::new(
            DecodeProblem::new(code.h_x().clone(), clamp_priors(&z_priors)),
            BposdConfig::cs(cfg.bp_iters, cfg.cs_order),
        );
        let css_z = BposdDecoder::new(
            DecodeProblem::new(code.h_z().clone(), clamp_priors(&x_priors)),
            BposdConfig::cs(cfg.bp_iters, cfg.cs_order),
        );
        let black_cols = code.black_columns();
        let gray_cols = code.gray_columns();
        let black_parity = code.h_x().select_columns(&black_cols);
        let gray_parity = code.h_z().select_columns(&gray_cols);
        let black_priors: Vec<f64> = black_cols.iter().map(|&q| z_priors[q]).collect();
        let gray_priors: Vec<f64> = gray_cols.iter().map(|&q| x_priors[q]).collect();
        let black_prob = DecodeProblem::new(black_parity, clamp_priors(&black_priors));
        let gray_prob = DecodeProblem::new(gray_parity, clamp_priors(&gray_priors));
        let black_order = black_prob.max_osd_order();
        let gray_order = gray_prob.max_osd_order();
        let black_dec = BposdDecoder::new(black_prob, BposdConfig::e(cfg.bp_iters, black_order));
        let gray_dec = BposdDecoder::new(gray_prob, BposdConfig::e(cfg.bp_iters, gray_order));
        let flip_syn_x = (0..code.n()).map(|q| code.h_x().column(q)).collect();
        let flip_syn_z = (0..code.n()).map(|q| code.h_z().column(q)).collect();
        Self {
            css_x,
            css_z,
            black_cols,
            gray_cols,
            black_dec,
            gray_dec,
            flip_syn_x,
            flip_syn_z,
            llr_z: z_priors.iter().map(|&p| llr_from_prior(p)).collect(),
            llr_x: x_priors.iter().map(|&p| llr_from_prior(p)).collect(),
            n: code.n(),
            h_x: code.h_x().clone(),
            h_z: code.h_z().clone(),
        }
    }

    fn embed(&self, local: &BitVector, cols: &[usize]) -> BitVector {
        let mut out = BitVector::zeros(self.n);
        for i in local.ones() {
            out.set(cols[i], true);
        }
        out
    }

    fn weight(&self, e_z: &BitVector, e_x: &BitVector) -> f64 {
        e_z.ones().map(|q| self.llr_z[q]).sum::<f64>()
            + e_x.ones().map(|q| self.llr_x[q]).sum::<f64>()
    }

    /// Solves the decoupled classical problems for the given syndromes and
    /// assembles a full-code candidate.
    fn classical_candidate(
        &self,
        s_x: &BitVector,
        s_z: &BitVector,
    ) -> Result<(BitVector, BitVector)> {
        let black = self.black_dec.decode(s_x)?;
        let gray = self.gray_dec.decode(s_z)?;
        Ok((
            self.embed(&black.correction, &self.black_cols),
            self.embed(&gray.correction, &self.gray_cols),
        ))
    }

    pub fn decode(&self, syndrome: &CssSyndrome) -> Result<(PauliCorrection, HybridBranch)> {
        let mut best: Option<(PauliCorrection, HybridBranch)> = None;
        let mut consider = |e_z: BitVector, e_x: BitVector, branch: HybridBranch,
                            best: &mut Option<(PauliCorrection, HybridBranch)>| {
            debug_assert_eq!(self.h_x.mul_vec(&e_z), syndrome.s_x);
            debug_assert_eq!(self.h_z.mul_vec(&e_x), syndrome.s_z);
            let score = self.weight(&e_z, &e_x);
            if best.as_ref().is_none_or(|(c, _)| score < c.score) {
                *best = Some((
                    PauliCorrection { e_z, e_x, method: DecodeMethod::Hybrid, score },
                    branch,
                ));
            }
        };

        let split_z = self.css_x.decode(&syndrome.s_x)?;
        let split_x = self.css_z.decode(&syndrome.s_z)?;
        consider(split_z.correction, split_x.correction, HybridBranch::CssSplit, &mut best);

        let (e_z, e_x) = self.classical_candidate(&syndrome.s_x, &syndrome.s_z)?;
        consider(e_z, e_x, HybridBranch::Classical, &mut best);

        for q in 0..self.n {
            if self.gray_cols.binary_search(&q).is_ok() {
                // Deformed bit flip on a gray qubit is a rotated-frame Z
                // component: re-solve the black problem with adjusted s_x.
                let mut s_x = syndrome.s_x.clone();
                s_x.xor_assign(&self.flip_syn_x[q]);
                let black = self.black_dec.decode(&s_x)?;
                let mut e_z = self.embed(&black.correction, &self.black_cols);
                e_z.set(q, true);
                let gray = self.gray_dec.decode(&syndrome.s_z)?;
                let e_x = self.embed(&gray.correction, &self.gray_cols);
                consider(e_z, e_x, HybridBranch::Flip(q), &mut best);
            } else {
                // Bit flip on a black qubit: rotated-frame X component.
                let mut s_z = syndrome.s_z.clone();
                s_z.xor_assign(&self.flip_syn_z[q]);
                let gray = self.gray_dec.decode(&s_z)?;
                let mut e_x = self.embed(&gray.correction, &self.gray_cols);
                e_x.set(q, true);
                let black = self.black_dec.decode(&syndrome.s_x)?;
                let e_z = self.embed(&black.correction, &self.black_cols);
                consider(e_z, e_x, HybridBranch::Flip(q), &mut best);
            }
        }
        best.ok_or(Error::NoCandidateWithinCap { cap: 0 })
    }
}

fn clamp_priors(priors: &[f64]) -> Vec<f64> {
    priors.iter().map(|&p| p.min(0.5)).collect()
}

/// Spec-shaped one-shot hybrid decode.
pub fn hybrid_decode(
    code: &StabilizerCode,
    noise: &NoiseModel,
    syndrome: &CssSyndrome,
    cfg: HybridConfig,
) -> Result<(PauliCorrection, HybridBranch)> {
    HybridDecoder::new(code, noise, cfg).decode(syndrome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::{build_torus, clifford_deform};
    use crate::ca::{build_classical_code, CARule};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn repetition(n: usize) -> BitMatrix {
        let mut m = BitMatrix::zeros(n - 1, n);
        for r in 0..n - 1 {
            m.set(r, r, true);
            m.set(r, r + 1, true);
        }
        m
    }

    fn classical_36_10_12() -> BitMatrix {
        let rule = CARule::new(3, &[(0, 0), (1, 1), (2, 1), (0, 2)]).unwrap();
        build_classical_code(&rule, 6, 6).unwrap().parity().clone()
    }

    fn code_18_4_4() -> StabilizerCode {
        let rule = CARule::new(2, &[(0, 0), (1, 0), (0, 1)]).unwrap();
        clifford_deform(&build_torus(&rule, &rule.rotate_180(), 3, 3).unwrap())
    }

    #[test]
    fn bp_zero_syndrome_converges_immediately() {
        let prob = DecodeProblem::uniform(repetition(5), 0.01);
        let out = bp_decode(&prob, &BitVector::zeros(4), 100);
        assert!(out.converged);
        assert_eq!(out.iterations, 0);
        assert!(out.hard.is_zero());
    }

    #[test]
    fn bp_decodes_single_flip_on_repetition_code() {
        let parity = repetition(3);
        let prob = DecodeProblem::uniform(parity.clone(), 0.05);
        // Flip bit 0: syndrome touches check 0 only.
        let e = BitVector::from_support(3, &[0]);
        let syndrome = parity.mul_vec(&e);
        let out = bp_decode(&prob, &syndrome, 100);
        assert!(out.converged);
        assert_eq!(out.hard, e);
    }

    #[test]
    fn bp_matches_ml_on_weight_two_errors() {
        let parity = classical_36_10_12();
        let prob = DecodeProblem::uniform(parity.clone(), 0.01);
        let bp = BpDecoder::new(&parity);
        let llrs = prob.prior_llrs();
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..40 {
            let a = rng.gen_range(0..36);
            let b = loop {
                let b = rng.gen_range(0..36);
                if b != a {
                    break b;
                }
            };
            let e = BitVector::from_support(36, &[a, b]);
            let syndrome = parity.mul_vec(&e);
            let out = bp.run(&llrs, &syndrome, 1000);
            let ml = classical_ml_decode(&prob, &syndrome).unwrap();
            assert!(out.converged, "BP failed on weight-2 error {a},{b}");
            assert_eq!(out.hard, ml.correction);
            assert_eq!(ml.correction, e, "weight-2 leader is unique below d/2");
        }
    }

    #[test]
    fn osd_zero_with_informative_soft_recovers_support() {
        let parity = classical_36_10_12();
        let prob = DecodeProblem::uniform(parity.clone(), 0.01);
        let e = BitVector::from_support(36, &[3, 17, 30]);
        let syndrome = parity.mul_vec(&e);
        let soft: Vec<f64> = (0..36)
            .map(|q| if e.get(q) { -LLR_CLAMP } else { LLR_CLAMP })
            .collect();
        let res = osd_post(&prob, &syndrome, &soft, 0, OsdStrategy::E).unwrap();
        assert_eq!(res.correction, e);
    }

    #[test]
    fn osd_max_order_equals_exhaustive_ml() {
        let parity = classical_36_10_12();
        let prob = DecodeProblem::uniform(parity.clone(), 0.01);
        let max_order = prob.max_osd_order();
        assert_eq!(max_order, 10);
        let dec = BposdDecoder::new(prob.clone(), BposdConfig::e(1, max_order));
        let mut rng = StdRng::seed_from_u64(7);
        for w in 1..=3usize {
            for _ in 0..20 {
                let mut support = Vec::new();
                while support.len() < w {
                    let q = rng.gen_range(0..36);
                    if !support.contains(&q) {
                        support.push(q);
                    }
                }
                let e = BitVector::from_support(36, &support);
                let syndrome = parity.mul_vec(&e);
                let res = dec.decode(&syndrome).unwrap();
                let ml = classical_ml_decode(&prob, &syndrome).unwrap();
                assert_eq!(parity.mul_vec(&res.correction), syndrome);
                assert!((res.score - ml.score).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn osd_order_clamps_to_free_bit_count() {
        let parity = classical_36_10_12();
        let prob = DecodeProblem::uniform(parity.clone(), 0.01);
        let e = BitVector::from_support(36, &[1, 2, 20]);
        let syndrome = parity.mul_vec(&e);
        let soft = prob.prior_llrs();
        let capped = osd_post(&prob, &syndrome, &soft, prob.max_osd_order(), OsdStrategy::E).unwrap();
        let huge = osd_post(&prob, &syndrome, &soft, 10_000, OsdStrategy::E).unwrap();
        assert_eq!(capped.correction, huge.correction);
    }

    #[test]
    fn osd_e_score_is_monotone_in_order() {
        let parity = classical_36_10_12();
        let prob = DecodeProblem::uniform(parity.clone(), 0.01);
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..10 {
            let e = BitVector::from_support(36, &[rng.gen_range(0..36), rng.gen_range(0..36)]);
            let syndrome = parity.mul_vec(&e);
            let soft = bp_decode(&prob, &syndrome, 3).posterior_llr;
            let mut prev = f64::INFINITY;
            for order in 0..=6 {
                let res = osd_post(&prob, &syndrome, &soft, order, OsdStrategy::E).unwrap();
                assert!(res.score <= prev + 1e-12);
                prev = res.score;
            }
        }
    }

    #[test]
    fn exhaustive_identity_on_zero_syndrome() {
        let code = code_18_4_4();
        let noise = NoiseModel::new(0.01, 1.0).rotated();
        let syndrome = CssSyndrome {
            s_x: BitVector::zeros(9),
            s_z: BitVector::zeros(9),
        };
        let res = exhaustive_ml_decode(&code, &noise, &syndrome, 0).unwrap();
        assert!(res.e_z.is_zero() && res.e_x.is_zero());
    }

    #[test]
    fn exhaustive_decodes_all_weight_one_errors() {
        let code = code_18_4_4();
        let noise = NoiseModel::new(0.01, 1.0).rotated();
        for q in 0..code.n() {
            for pauli in 0..3 {
                let mut e_z = BitVector::zeros(code.n());
                let mut e_x = BitVector::zeros(code.n());
                match pauli {
                    0 => e_x.set(q, true),
                    1 => {
                        e_x.set(q, true);
                        e_z.set(q, true);
                    }
                    _ => e_z.set(q, true),
                }
                let syndrome = CssSyndrome::of_error(&code, &e_z, &e_x);
                let res = exhaustive_ml_decode(&code, &noise, &syndrome, 1).unwrap();
                assert_eq!((res.e_z, res.e_x), (e_z, e_x), "q={q} pauli={pauli}");
            }
        }
    }

    #[test]
    fn exhaustive_budget_guard() {
        let code = code_18_4_4();
        let noise = NoiseModel::new(0.01, 1.0).rotated();
        let syndrome = CssSyndrome {
            s_x: BitVector::zeros(9),
            s_z: BitVector::zeros(9),
        };
        assert!(matches!(
            exhaustive_ml_decode(&code, &noise, &syndrome, 12),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn hybrid_pure_z_error_keeps_x_part_empty() {
        let code = code_18_4_4();
        let noise = NoiseModel::new(0.01, 1e6).rotated();
        let dec = HybridDecoder::new(&code, &noise, HybridConfig { bp_iters: 50, cs_order: 10 });
        let hl = code.n() / 2;
        // Deformed-frame pure phase flips: rotated Z on black, rotated X on gray.
        let e_z = BitVector::from_support(code.n(), &[2, 7]);
        let e_x = BitVector::from_support(code.n(), &[hl + 3]);
        let syndrome = CssSyndrome::of_error(&code, &e_z, &e_x);
        let (corr, _branch) = dec.decode(&syndrome).unwrap();
        assert!(corr.e_z.ones().all(|q| q < hl), "no rotated-Z on gray");
        assert!(corr.e_x.ones().all(|q| q >= hl), "no rotated-X on black");
    }

    #[test]
    fn hybrid_matches_ml_on_flip_plus_phase() {
        let code = code_18_4_4();
        let noise = NoiseModel::new(0.01, 1e4).rotated();
        let dec = HybridDecoder::new(&code, &noise, HybridConfig { bp_iters: 50, cs_order: 10 });
        let hl = code.n() / 2;
        // One deformed bit flip (rotated Z on a gray qubit) plus one phase
        // flip (rotated Z on a black qubit).
        let e_z = BitVector::from_support(code.n(), &[4, hl + 5]);
        let e_x = BitVector::zeros(code.n());
        let syndrome = CssSyndrome::of_error(&code, &e_z, &e_x);
        let (corr, _) = dec.decode(&syndrome).unwrap();
        let ml = exhaustive_ml_decode(&code, &noise, &syndrome, 2).unwrap();
        assert!((corr.score - weight_of(&dec, &ml)).abs() < 1e-9 || corr.score < weight_of(&dec, &ml) + 1e-9);
        assert_eq!(code.h_x().mul_vec(&corr.e_z), syndrome.s_x);
        assert_eq!(code.h_z().mul_vec(&corr.e_x), syndrome.s_z);
    }

    fn weight_of(dec: &HybridDecoder, c: &PauliCorrection) -> f64 {
        dec.weight(&c.e_z, &c.e_x)
    }

    #[test]
    fn hybrid_weight_reduces_to_hamming_at_unit_bias() {
        let code = code_18_4_4();
        let noise = NoiseModel::new(0.05, 1.0).rotated();
        let dec = HybridDecoder::new(&code, &noise, HybridConfig { bp_iters: 10, cs_order: 4 });
        let a = BitVector::from_support(code.n(), &[0, 5]);
        let b = BitVector::from_support(code.n(), &[11]);
        let w = dec.weight(&a, &b);
        let per_bit = dec.llr_z[0];
        assert!((w - 3.0 * per_bit).abs() < 1e-9);
    }

    #[test]
    fn hybrid_never_beats_its_own_candidates() {
        // The returned weight is the minimum over a superset that includes
        // the classical branch.
        let code = code_18_4_4();
        let noise = NoiseModel::new(0.02, 100.0).rotated();
        let dec = HybridDecoder::new(&code, &noise, HybridConfig { bp_iters: 50, cs_order: 10 });
        let mut rng = StdRng::seed_from_u64(13);
        let mask = code.gray_mask().clone();
        for _ in 0..25 {
            let (e_z, e_x) = noise.sample_error(&mask, &mut rng);
            let syndrome = CssSyndrome::of_error(&code, &e_z, &e_x);
            let (corr, _) = dec.decode(&syndrome).unwrap();
            let (cz, cx) = dec.classical_candidate(&syndrome.s_x, &syndrome.s_z).unwrap();
            assert!(corr.score <= dec.weight(&cz, &cx) + 1e-9);
        }
    }

    #[test]
    fn every_correction_satisfies_its_syndrome() {
        let parity = classical_36_10_12();
        let prob = DecodeProblem::uniform(parity.clone(), 0.03);
        let dec_e = BposdDecoder::new(prob.clone(), BposdConfig::e(20, 6));
        let dec_cs = BposdDecoder::new(prob.clone(), BposdConfig::cs(20, 10));
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..200 {
            let mut e = BitVector::zeros(36);
            for q in 0..36 {
                if rng.gen_bool(0.05) {
                    e.set(q, true);
                }
            }
            let syndrome = parity.mul_vec(&e);
            for dec in [&dec_e, &dec_cs] {
                let res = dec.decode(&syndrome).unwrap();
                assert_eq!(parity.mul_vec(&res.correction), syndrome);
            }
        }
    }
}
