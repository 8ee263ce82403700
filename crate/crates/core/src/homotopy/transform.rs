//! Smooth coordinate transforms behind the homotopy.
//!
//! `φ` maps a transformed coordinate `y` to a probability mass; `ψ₁`/`ψ₂` split a free
//! variable `v` into the pair `(y, slack)` with `y·slack = (τ₀r)^{κ₀}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `φ(v) = exp(1 − 1/v)` for `v > 0`, else 0. Strictly increasing on `(0, ∞)` with `φ(1) = 1`.
pub fn phi(v: f64) -> f64 {
    if v > 0.0 {
        (1.0 - 1.0 / v).exp()
    } else {
        0.0
    }
}

pub fn phi_prime(v: f64) -> f64 {
    if v > 0.0 {
        phi(v) / (v * v)
    } else {
        0.0
    }
}

/// `ln φ(v)`, which stays finite where `φ(v)` itself underflows.
pub fn ln_phi(v: f64) -> f64 {
    if v > 0.0 {
        1.0 - 1.0 / v
    } else {
        f64::NEG_INFINITY
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformParams {
    pub kappa0: f64,
    pub tau0: f64,
    /// Perturbation, one entry per non-empty sequence.
    pub alpha: Vec<f64>,
    pub alpha_scale: f64,
}

impl TransformParams {
    pub const DEFAULT_KAPPA0: f64 = 3.0;
    pub const DEFAULT_ALPHA_SCALE: f64 = 1e-2;

    /// No perturbation.
    pub fn unperturbed(n0: usize) -> Self {
        TransformParams {
            kappa0: Self::DEFAULT_KAPPA0,
            tau0: 1.0,
            alpha: vec![0.0; n0],
            alpha_scale: 0.0,
        }
    }

    /// `α` drawn uniformly from `[−alpha_scale, alpha_scale]^{n0}`.
    pub fn seeded(n0: usize, alpha_scale: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alpha = if alpha_scale > 0.0 {
            (0..n0).map(|_| rng.random_range(-alpha_scale..=alpha_scale)).collect()
        } else {
            vec![0.0; n0]
        };
        TransformParams {
            kappa0: Self::DEFAULT_KAPPA0,
            tau0: 1.0,
            alpha,
            alpha_scale,
        }
    }

    pub fn with_kappa0(mut self, kappa0: f64) -> Self {
        self.kappa0 = kappa0;
        self
    }

    /// Same direction, half the magnitude.
    pub fn halved(&self) -> Self {
        TransformParams {
            alpha: self.alpha.iter().map(|a| 0.5 * a).collect(),
            alpha_scale: 0.5 * self.alpha_scale,
            ..self.clone()
        }
    }

    pub fn validate(&self, n0: usize) -> Result<()> {
        if !(self.kappa0 > 2.0 && self.kappa0.is_finite()) {
            return Err(Error::Config(format!("kappa0 = {} must exceed 2", self.kappa0)));
        }
        if !(self.tau0 > 0.0 && self.tau0.is_finite()) {
            return Err(Error::Config(format!("tau0 = {} must be positive", self.tau0)));
        }
        if self.alpha.len() != n0 {
            return Err(Error::DimensionMismatch(format!(
                "alpha has {} entries, expected {n0}",
                self.alpha.len()
            )));
        }
        if self.alpha.iter().any(|a| !(a.abs() <= self.alpha_scale)) {
            return Err(Error::Config("alpha exceeds alpha_scale".into()));
        }
        Ok(())
    }
}

/// `ψ₁`, `ψ₂` and their partial derivatives at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Psi {
    pub psi1: f64,
    pub psi2: f64,
    pub d1_dv: f64,
    pub d2_dv: f64,
    pub d1_dr: f64,
    pub d2_dr: f64,
}

/// `ψ₁ = ((v + s)/2)^{κ₀}`, `ψ₂ = ((s − v)/2)^{κ₀}` with `s = √(v² + 4τ₀r)`.
///
/// The smaller base is obtained as `τ₀r` divided by the larger one, which avoids cancellation
/// and keeps `ψ₁ψ₂ = (τ₀r)^{κ₀}` accurate to a few ulps.
pub fn psi(v: f64, r: f64, p: &TransformParams) -> Psi {
    let kappa = p.kappa0;
    let tr = p.tau0 * r;
    let s = v.hypot(2.0 * tr.sqrt());
    let (base1, base2) = if v >= 0.0 {
        let big = 0.5 * (v + s);
        (big, if big > 0.0 { tr / big } else { 0.0 })
    } else {
        let big = 0.5 * (s - v);
        (tr / big, big)
    };
    let psi1 = base1.powf(kappa);
    let psi2 = base2.powf(kappa);
    if s == 0.0 {
        return Psi {
            psi1,
            psi2,
            d1_dv: 0.0,
            d2_dv: 0.0,
            d1_dr: 0.0,
            d2_dr: 0.0,
        };
    }
    Psi {
        psi1,
        psi2,
        d1_dv: kappa * psi1 / s,
        d2_dv: -kappa * psi2 / s,
        d1_dr: kappa * base1.powf(kappa - 1.0) * p.tau0 / s,
        d2_dr: kappa * base2.powf(kappa - 1.0) * p.tau0 / s,
    }
}

/// `r = t^{1/κ₀}` and `dr/dt`.
pub fn r_of_t(t: f64, kappa0: f64) -> (f64, f64) {
    let r = t.powf(1.0 / kappa0);
    (r, r / (kappa0 * t))
}
