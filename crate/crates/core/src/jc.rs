//! Jaynes-Cummings charging round.
//!
//! The qubit is given Hamiltonian `ω|ψ_k⟩⟨ψ_k|` and coupled resonantly to a
//! ladder battery in Fock state `|n⟩` for `t = π/(Ω√(n+1))`. At that time the
//! battery occupation is `n+1` with probability `p = |⟨ψ_k|ψ⟩|²`, `n` with
//! `(1−p)cos²θ` and `n−1` with `(1−p)sin²θ`, where `θ = (π/2)√(n/(n+1))`. The
//! round is sampled directly from this distribution.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{fidelity, PureQubit};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JcParams {
    omega: f64,
}

impl JcParams {
    pub fn new(omega: f64) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::domain(format!("level splitting ω = {omega} must be positive")));
        }
        Ok(Self { omega })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JcOutcome {
    pub n_next: u64,
    pub delta_w: f64,
    pub reward: bool,
}

/// `θ = (π/2)·√(n/(n+1))`.
pub fn jc_theta(n: u64) -> f64 {
    let n = n as f64;
    FRAC_PI_2 * (n / (n + 1.0)).sqrt()
}

/// `sin²θ` for occupation `n`.
pub fn jc_sin2(n: u64) -> f64 {
    jc_theta(n).sin().powi(2)
}

/// Probabilities of `(n+1, n, n−1)` given fidelity `p`.
pub fn jc_outcome_probs(p: f64, n: u64) -> [f64; 3] {
    let theta = jc_theta(n);
    let (s, c) = theta.sin_cos();
    let q = 1.0 - p;
    [p, q * c * c, q * s * s]
}

pub fn jc_round<R: Rng + ?Sized>(
    psi: PureQubit,
    psi_k: PureQubit,
    params: &JcParams,
    n: u64,
    rng: &mut R,
) -> JcOutcome {
    let p = fidelity(psi, psi_k);
    let [up, stay, _down] = jc_outcome_probs(p, n);
    let u: f64 = rng.random();
    let n_next = if u < up {
        n + 1
    } else if u < up + stay || n == 0 {
        n
    } else {
        n - 1
    };
    JcOutcome {
        n_next,
        delta_w: params.omega * (n_next as f64 - n as f64),
        reward: n_next == n + 1,
    }
}

/// `E[ΔW] = ω(p(1 + sin²θ) − sin²θ)`.
pub fn jc_expected_work(p: f64, n: u64, omega: f64) -> f64 {
    let s2 = jc_sin2(n);
    omega * (p * (1.0 + s2) - s2)
}

/// `ω(1 + sin²θ)(1 − p)`, the shortfall from the maximum `ω`.
pub fn jc_dissipation_round(p: f64, n: u64, omega: f64) -> f64 {
    omega * (1.0 + jc_sin2(n)) * (1.0 - p)
}
