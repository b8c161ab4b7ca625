//! Biased Pauli noise channels, with the rotated-channel view of the deformed
//! code.
//!
//! Each qubit suffers X, Y, Z errors with rates `p_X = p_Y = p_Z / eta`. A
//! rotated model swaps `p_X` and `p_Z` on every gray qubit, which lets the
//! simulator and the analysis work with the CSS parity check matrices while
//! faithfully reproducing the deformed code's statistics.

use crate::gf2::BitVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Noise bias `eta = p_Z / p_X`. Infinite bias is represented exactly: the
/// X and Y rates are then identically zero, not merely tiny.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Bias {
    Finite(f64),
    Infinite,
}

impl Bias {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Bias::Infinite)
    }
}

impl std::fmt::Display for Bias {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Bias::Finite(eta) => write!(f, "{eta}"),
            Bias::Infinite => write!(f, "inf"),
        }
    }
}

impl std::str::FromStr for Bias {
    type Err = std::num::ParseFloatError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "inf" | "infinite" | "infinity" => Ok(Bias::Infinite),
            other => Ok(Bias::Finite(other.parse()?)),
        }
    }
}

/// A biased Pauli channel, optionally Hadamard-rotated on the gray sector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub p_z: f64,
    pub bias: Bias,
    pub rotated: bool,
}

/// Per-qubit Pauli rates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PauliRates {
    pub p_x: f64,
    pub p_y: f64,
    pub p_z: f64,
}

impl NoiseModel {
    pub fn new(p_z: f64, eta: f64) -> Self {
        assert!((0.0..=1.0).contains(&p_z), "p_z must be a probability");
        assert!(eta >= 1.0, "bias must be at least 1");
        Self {
            p_z,
            bias: Bias::Finite(eta),
            rotated: false,
        }
    }

    pub fn infinite_bias(p_z: f64) -> Self {
        assert!((0.0..=1.0).contains(&p_z), "p_z must be a probability");
        Self {
            p_z,
            bias: Bias::Infinite,
            rotated: false,
        }
    }

    pub fn from_bias(p_z: f64, bias: Bias) -> Self {
        match bias {
            Bias::Finite(eta) => Self::new(p_z, eta),
            Bias::Infinite => Self::infinite_bias(p_z),
        }
    }

    /// The same channel with the gray-sector rotation toggled on.
    pub fn rotated(mut self) -> Self {
        self.rotated = true;
        self
    }

    pub fn p_x(&self) -> f64 {
        match self.bias {
            Bias::Finite(eta) => self.p_z / eta,
            Bias::Infinite => 0.0,
        }
    }

    pub fn p_y(&self) -> f64 {
        self.p_x()
    }

    /// Rates seen by the given qubit, honoring the gray rotation.
    pub fn rates(&self, gray: bool) -> PauliRates {
        let (p_x, p_z) = if self.rotated && gray {
            (self.p_z, self.p_x())
        } else {
            (self.p_x(), self.p_z)
        };
        PauliRates { p_x, p_y: self.p_y(), p_z }
    }

    /// Probability that the qubit's error has a Z component (Z or Y).
    pub fn z_marginal(&self, gray: bool) -> f64 {
        let r = self.rates(gray);
        r.p_z + r.p_y
    }

    /// Probability that the qubit's error has an X component (X or Y).
    pub fn x_marginal(&self, gray: bool) -> f64 {
        let r = self.rates(gray);
        r.p_x + r.p_y
    }

    /// Per-qubit Z-component priors for decoding, floored away from zero so
    /// log-likelihood ratios stay finite.
    pub fn z_priors(&self, gray_mask: &BitVector) -> Vec<f64> {
        (0..gray_mask.len())
            .map(|q| self.z_marginal(gray_mask.get(q)).max(PRIOR_FLOOR))
            .collect()
    }

    pub fn x_priors(&self, gray_mask: &BitVector) -> Vec<f64> {
        (0..gray_mask.len())
            .map(|q| self.x_marginal(gray_mask.get(q)).max(PRIOR_FLOOR))
            .collect()
    }

    /// Draws one Pauli error per qubit; bit `q` of the returned pair is set
    /// when the error on `q` has a Z (respectively X) component.
    pub fn sample_error<R: Rng>(&self, gray_mask: &BitVector, rng: &mut R) -> (BitVector, BitVector) {
        let n = gray_mask.len();
        let mut e_z = BitVector::zeros(n);
        let mut e_x = BitVector::zeros(n);
        for q in 0..n {
            let r = self.rates(gray_mask.get(q));
            let u: f64 = rng.gen();
            if u < r.p_x {
                e_x.set(q, true);
            } else if u < r.p_x + r.p_y {
                e_x.set(q, true);
                e_z.set(q, true);
            } else if u < r.p_x + r.p_y + r.p_z {
                e_z.set(q, true);
            }
        }
        (e_z, e_x)
    }
}

/// Smallest prior handed to a decoder; the matching log-likelihood ratio is
/// far beyond the +-30 clamp, so exact zeros and the floor are equivalent.
pub const PRIOR_FLOOR: f64 = 1e-300;
