//! Monte Carlo code-capacity memory experiments under biased Pauli noise.
//!
//! The deformed code is simulated through its CSS matrices with the noise
//! channels Hadamard-rotated on the gray sector: syndromes, corrections and
//! residuals all live in the rotated frame, which is shot-for-shot equivalent
//! to the deformed code under the physical channel. Shots are seeded by a
//! counter, so parallel and serial runs agree bit for bit.

use crate::analysis::LogicalBasis;
use crate::builder::StabilizerCode;
use crate::ca::ClassicalCode;
use crate::decode::{
    exhaustive_ml_decode, BposdConfig, BposdDecoder, CssSyndrome, DecodeProblem, HybridConfig,
    HybridDecoder, OsdStrategy,
};
use crate::gf2::{BitMatrix, BitVector};
use crate::noise::{Bias, NoiseModel};
use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Decoder selection for an experiment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "decoder", rename_all = "kebab-case")]
pub enum DecoderChoice {
    BposdE { bp_iters: usize, osd_order: usize },
    BposdCs { bp_iters: usize, osd_order: usize },
    Hybrid { bp_iters: usize, osd_order: usize },
    Exhaustive { weight_cap: usize },
}

impl DecoderChoice {
    pub fn tag(&self) -> String {
        match self {
            DecoderChoice::BposdE { .. } => "bposd-e".into(),
            DecoderChoice::BposdCs { .. } => "bposd-cs".into(),
            DecoderChoice::Hybrid { .. } => "hybrid".into(),
            DecoderChoice::Exhaustive { .. } => "exhaustive".into(),
        }
    }
}

impl Default for DecoderChoice {
    fn default() -> Self {
        DecoderChoice::BposdCs { bp_iters: 1000, osd_order: 50 }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub shots: u64,
    pub seed: u64,
    /// Stop at a batch boundary once this many logical errors (X plus Z)
    /// accumulated; 0 disables early stopping.
    pub min_failures: u64,
    pub batch: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self { shots: 10_000, seed: 0, min_failures: 0, batch: 4096 }
    }
}

/// Outcome of a memory experiment. Rates are per shot; the total logical
/// error rate is the average of the X and Z rates, with an exact Poisson
/// interval on each.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub code_id: String,
    pub boundary: String,
    pub p_z: f64,
    pub eta: Bias,
    pub shots: u64,
    pub x_failures: u64,
    pub z_failures: u64,
    pub decode_failures: u64,
    pub rate_x: f64,
    pub rate_z: f64,
    pub p_l: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub decoder: String,
    pub seed: u64,
    pub wall_time_s: f64,
}

/// Exact Garwood-style Poisson confidence interval on the event rate.
pub fn poisson_ci(failures: u64, shots: u64, level: f64) -> (f64, f64) {
    assert!(shots > 0 && (0.0..1.0).contains(&level));
    let alpha = 1.0 - level;
    let low = if failures == 0 {
        0.0
    } else {
        ChiSquared::new(2.0 * failures as f64)
            .unwrap()
            .inverse_cdf(alpha / 2.0)
            / 2.0
            / shots as f64
    };
    let high = ChiSquared::new(2.0 * (failures + 1) as f64)
        .unwrap()
        .inverse_cdf(1.0 - alpha / 2.0)
        / 2.0
        / shots as f64;
    (low, high)
}

/// The two decoupled classical codes seen by pure phase-flip noise: the
/// X-detecting checks restricted to the black and to the gray sector.
pub fn infinite_bias_mode(code: &StabilizerCode) -> Result<(ClassicalCode, ClassicalCode)> {
    if !code.is_deformed() {
        return Err(Error::NotDeformed);
    }
    let (black, gray) = code.sector_parities();
    Ok((ClassicalCode::from_parity(black), ClassicalCode::from_parity(gray)))
}

/// Swaps the Z and X components of an error on every gray qubit.
pub fn gray_swapped(
    e_z: &BitVector,
    e_x: &BitVector,
    gray_mask: &BitVector,
) -> (BitVector, BitVector) {
    let mut out_z = e_z.clone();
    let mut out_x = e_x.clone();
    for q in gray_mask.support() {
        let (z, x) = (e_z.get(q), e_x.get(q));
        out_z.set(q, x);
        out_x.set(q, z);
    }
    (out_z, out_x)
}

/// Basis logicals split by sector, ready for the mixed anticommutation tests
/// against rotated-frame residuals.
struct PreparedBasis {
    /// Per Z logical: (black part, gray part) of its support.
    z_parts: Vec<(BitVector, BitVector)>,
    /// Per X partner: (x black, x gray, z black, z gray).
    x_parts: Vec<(BitVector, BitVector, BitVector, BitVector)>,
}

impl PreparedBasis {
    fn new(basis: &LogicalBasis, gray_mask: &BitVector) -> Self {
        let split = |v: &BitVector| {
            let mut black = v.clone();
            let mut gray = BitVector::zeros(v.len());
            for q in gray_mask.support() {
                if v.get(q) {
                    black.set(q, false);
                    gray.set(q, true);
                }
            }
            (black, gray)
        };
        let z_parts = (0..basis.k())
            .map(|i| split(&basis.z_logicals.row(i)))
            .collect();
        let x_parts = (0..basis.k())
            .map(|i| {
                let (xb, xg) = split(&basis.x_logicals.row(i));
                let (zb, zg) = split(&basis.x_logicals_z.row(i));
                (xb, xg, zb, zg)
            })
            .collect();
        Self { z_parts, x_parts }
    }

    /// X failure: the residual anticommutes with some all-Z basis logical.
    fn x_failure(&self, r_z: &BitVector, r_x: &BitVector) -> bool {
        self.z_parts
            .iter()
            .any(|(black, gray)| black.dot(r_x) ^ gray.dot(r_z))
    }

    /// Z failure: the residual anticommutes with some X partner.
    fn z_failure(&self, r_z: &BitVector, r_x: &BitVector) -> bool {
        self.x_parts.iter().any(|(xb, xg, zb, zg)| {
            xb.dot(r_z) ^ xg.dot(r_x) ^ zb.dot(r_x) ^ zg.dot(r_z)
        })
    }
}

/// Per-shot decoding machinery, built once per experiment.
enum ShotDecoder {
    CssSplit { dec_x: BposdDecoder, dec_z: BposdDecoder },
    Hybrid(Box<HybridDecoder>),
    Exhaustive { weight_cap: usize },
    /// Decoupled classical decoding at infinite bias: the black problem over
    /// the Z components, the gray problem over the X components.
    InfiniteBias {
        black: BposdDecoder,
        gray: BposdDecoder,
        black_cols: Vec<usize>,
        gray_cols: Vec<usize>,
    },
}

fn embed(local: &BitVector, cols: &[usize], n: usize) -> BitVector {
    let mut out = BitVector::zeros(n);
    for i in local.ones() {
        out.set(cols[i], true);
    }
    out
}

impl ShotDecoder {
    fn build(code: &StabilizerCode, noise: &NoiseModel, choice: DecoderChoice) -> Self {
        if noise.bias.is_infinite() {
            // Pure phase-flip noise: decode the two classical sector codes
            // independently with BP+OSD-E at full order (the sector's k_c).
            let bp_iters = match choice {
                DecoderChoice::BposdE { bp_iters, .. }
                | DecoderChoice::BposdCs { bp_iters, .. }
                | DecoderChoice::Hybrid { bp_iters, .. } => bp_iters,
                DecoderChoice::Exhaustive { .. } => 1000,
            };
            let black_cols = code.black_columns();
            let gray_cols = code.gray_columns();
            let black_parity = code.h_x().select_columns(&black_cols);
            let gray_parity = code.h_z().select_columns(&gray_cols);
            let p = noise.p_z.clamp(crate::noise::PRIOR_FLOOR, 0.5);
            let black_prob = DecodeProblem::uniform(black_parity, p);
            let gray_prob = DecodeProblem::uniform(gray_parity, p);
            let black_order = black_prob.max_osd_order();
            let gray_order = gray_prob.max_osd_order();
            return ShotDecoder::InfiniteBias {
                black: BposdDecoder::new(black_prob, BposdConfig::e(bp_iters, black_order)),
                gray: BposdDecoder::new(gray_prob, BposdConfig::e(bp_iters, gray_order)),
                black_cols,
                gray_cols,
            };
        }
        match choice {
            DecoderChoice::BposdE { bp_iters, osd_order }
            | DecoderChoice::BposdCs { bp_iters, osd_order } => {
                let strategy = match choice {
                    DecoderChoice::BposdE { .. } => OsdStrategy::E,
                    _ => OsdStrategy::Cs,
                };
                let cfg = BposdConfig { bp_iters, order: osd_order, strategy };
                let z_priors: Vec<f64> =
                    noise.z_priors(code.gray_mask()).iter().map(|&p| p.min(0.5)).collect();
                let x_priors: Vec<f64> =
                    noise.x_priors(code.gray_mask()).iter().map(|&p| p.min(0.5)).collect();
                ShotDecoder::CssSplit {
                    dec_x: BposdDecoder::new(
                        DecodeProblem::new(code.h_x().clone(), z_priors),
                        cfg,
                    ),
                    dec_z: BposdDecoder::new(
                        DecodeProblem::new(code.h_z().clone(), x_priors),
                        cfg,
                    ),
                }
            }
            DecoderChoice::Hybrid { bp_iters, osd_order } => ShotDecoder::Hybrid(Box::new(
                HybridDecoder::new(code, noise, HybridConfig { bp_iters, cs_order: osd_order }),
            )),
            DecoderChoice::Exhaustive { weight_cap } => ShotDecoder::Exhaustive { weight_cap },
        }
    }

    fn decode(
        &self,
        code: &StabilizerCode,
        noise: &NoiseModel,
        syndrome: &CssSyndrome,
    ) -> Result<(BitVector, BitVector)> {
        match self {
            ShotDecoder::CssSplit { dec_x, dec_z } => {
                let c_z = dec_x.decode(&syndrome.s_x)?.correction;
                let c_x = dec_z.decode(&syndrome.s_z)?.correction;
                Ok((c_z, c_x))
            }
            ShotDecoder::Hybrid(dec) => {
                let (corr, _branch) = dec.decode(syndrome)?;
                Ok((corr.e_z, corr.e_x))
            }
            ShotDecoder::Exhaustive { weight_cap } => {
                let corr = exhaustive_ml_decode(code, noise, syndrome, *weight_cap)?;
                Ok((corr.e_z, corr.e_x))
            }
            ShotDecoder::InfiniteBias { black, gray, black_cols, gray_cols } => {
                let n = code.n();
                let c_z = black.decode(&syndrome.s_x)?.correction;
                let c_x = gray.decode(&syndrome.s_z)?.correction;
                Ok((embed(&c_z, black_cols, n), embed(&c_x, gray_cols, n)))
            }
        }
    }
}

fn shot_rng(seed: u64, shot: u64) -> ChaCha12Rng {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..16].copy_from_slice(&shot.to_le_bytes());
    ChaCha12Rng::from_seed(bytes)
}

/// Runs the code-capacity memory experiment: per shot, sample a rotated
/// error, decode its syndromes, and test the residual against the logical
/// basis. X and Z failures are counted separately; a decoder giving up
/// counts as both and is flagged.
pub fn run_memory_experiment(
    code: &StabilizerCode,
    noise: &NoiseModel,
    basis: &LogicalBasis,
    decoder: DecoderChoice,
    cfg: &ExperimentConfig,
) -> Result<ExperimentResult> {
    let start = std::time::Instant::now();
    let noise = if noise.rotated { noise.clone() } else { noise.clone().rotated() };
    let prepared = PreparedBasis::new(basis, code.gray_mask());
    let shot_decoder = ShotDecoder::build(code, &noise, decoder);
    let gray_mask = code.gray_mask();

    let mut x_failures = 0u64;
    let mut z_failures = 0u64;
    let mut decode_failures = 0u64;
    let mut done = 0u64;
    while done < cfg.shots {
        let batch = cfg.batch.min(cfg.shots - done);
        let counts = (done..done + batch)
            .into_par_iter()
            .map(|shot| {
                let mut rng = shot_rng(cfg.seed, shot);
                let (e_z, e_x) = noise.sample_error(gray_mask, &mut rng);
                let syndrome = CssSyndrome::of_error(code, &e_z, &e_x);
                match shot_decoder.decode(code, &noise, &syndrome) {
                    Ok((c_z, c_x)) => {
                        let mut r_z = e_z;
                        r_z.xor_assign(&c_z);
                        let mut r_x = e_x;
                        r_x.xor_assign(&c_x);
                        let xf = prepared.x_failure(&r_z, &r_x) as u64;
                        let zf = prepared.z_failure(&r_z, &r_x) as u64;
                        (xf, zf, 0u64)
                    }
                    Err(_) => (1, 1, 1),
                }
            })
            .reduce(|| (0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
        x_failures += counts.0;
        z_failures += counts.1;
        decode_failures += counts.2;
        done += batch;
        if cfg.min_failures > 0 && x_failures + z_failures >= cfg.min_failures {
            break;
        }
    }

    let shots = done;
    let rate_x = x_failures as f64 / shots as f64;
    let rate_z = z_failures as f64 / shots as f64;
    let p_l = 0.5 * (rate_x + rate_z);
    // Interval on the averaged rate: pooled failures over doubled exposure.
    let (ci_low, ci_high) = poisson_ci(x_failures + z_failures, 2 * shots, 0.95);
    Ok(ExperimentResult {
        code_id: code.id(),
        boundary: code.boundary().to_string(),
        p_z: noise.p_z,
        eta: noise.bias,
        shots,
        x_failures,
        z_failures,
        decode_failures,
        rate_x,
        rate_z,
        p_l,
        ci_low,
        ci_high,
        decoder: decoder.tag(),
        seed: cfg.seed,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}
