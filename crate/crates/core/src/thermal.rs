//! Work extraction from a qubit with a thermal reservoir and a weight battery.
//!
//! The engine is optimized for the target `ρ* = (1−ε)ψ_k + ε ψ_k^⊥`. After the
//! diagonalizing rotation, the unknown state is pinched onto `{ψ_k, ψ_k^⊥}`;
//! branch `i` then drives a classical chain of `M` swaps with reservoir qubits
//! whose gaps `ν(τ, ε)` step the populations from `(1−ε, ε)` to `(½, ½)`.

use std::f64::consts::LN_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{fidelity, rel_entropy_pure_vs_target, PureQubit, EPS_MIN};

/// Number of swap repetitions per round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Repetitions {
    /// The `M → ∞` limit: work takes exactly `w₀` or `w₁`.
    QuasiStatic,
    Finite(u32),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractionParams {
    eps: f64,
    beta: f64,
    reps: Repetitions,
}

impl ExtractionParams {
    /// `eps` is floored at [`EPS_MIN`]; it must not exceed ½.
    pub fn new(eps: f64, beta: f64, reps: Repetitions) -> Result<Self> {
        if !(0.0..=0.5).contains(&eps) {
            return Err(Error::domain(format!("accuracy ε = {eps} not in [0, 1/2]")));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::domain(format!("inverse temperature β = {beta} must be positive")));
        }
        if reps == Repetitions::Finite(0) {
            return Err(Error::domain("at least one swap repetition is required"));
        }
        Ok(Self {
            eps: eps.max(EPS_MIN),
            beta,
            reps,
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn reps(&self) -> Repetitions {
        self.reps
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundOutcome {
    pub delta_w: f64,
    pub reward: bool,
    /// 0 when the pinching landed on `ψ_k`, 1 for `ψ_k^⊥`.
    pub branch: u8,
}

/// Battery modeled as a sharply peaked weight: only its mean height is tracked.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BatteryLedger {
    mu: f64,
    history: Vec<f64>,
}

impl BatteryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, delta_w: f64) {
        self.mu += delta_w;
        self.history.push(delta_w);
    }

    pub fn energy(&self) -> f64 {
        self.mu
    }

    pub fn history(&self) -> &[f64] {
        &self.history
    }
}

/// Reservoir gap for repetition `tau` of `m`:
/// `ν = β⁻¹ ln[(1 − τ/2M − (1 − τ/M)ε) / (τ/2M + (1 − τ/M)ε)]`.
pub fn gap_schedule(tau: u32, m: u32, eps: f64, beta: f64) -> Result<f64> {
    if m == 0 || tau == 0 || tau > m {
        return Err(Error::domain(format!("repetition {tau} outside 1..={m}")));
    }
    if !(0.0..=0.5).contains(&eps) || !(beta > 0.0) {
        return Err(Error::domain(format!("gap needs ε ∈ [0,1/2] and β > 0 (got {eps}, {beta})")));
    }
    if tau == m {
        return Ok(0.0);
    }
    let x = tau as f64 / m as f64;
    let num = 1.0 - x / 2.0 - (1.0 - x) * eps;
    let den = x / 2.0 + (1.0 - x) * eps;
    if !(num > 0.0 && den > 0.0) {
        return Err(Error::Internal(format!("gap argument {num}/{den} not positive")));
    }
    Ok((num / den).ln() / beta)
}

/// Quasi-static work values `(w₀, w₁) = β⁻¹(ln 2 + ln(1−ε), ln 2 + ln ε)`.
pub fn work_values(eps: f64, beta: f64) -> (f64, f64) {
    let e = eps.max(EPS_MIN);
    ((LN_2 + (-e).ln_1p()) / beta, (LN_2 + e.ln()) / beta)
}

/// `E[ΔW] = β⁻¹[ln 2 − D(ψ‖Δ_{2ε}(ψ_k))]`.
pub fn expected_work(psi: PureQubit, psi_k: PureQubit, params: &ExtractionParams) -> f64 {
    (LN_2 - rel_entropy_pure_vs_target(psi, psi_k, params.eps)) / params.beta
}

fn sample_branch<R: Rng + ?Sized>(psi: PureQubit, psi_k: PureQubit, rng: &mut R) -> u8 {
    let p = fidelity(psi, psi_k);
    if rng.random::<f64>() < p {
        0
    } else {
        1
    }
}

/// One round in the `M → ∞` limit: Born-rule branch, deterministic work `w_i`, reward `1 − i`.
pub fn run_round_quasistatic<R: Rng + ?Sized>(
    psi: PureQubit,
    psi_k: PureQubit,
    params: &ExtractionParams,
    rng: &mut R,
) -> RoundOutcome {
    let branch = sample_branch(psi, psi_k, rng);
    let (w0, w1) = work_values(params.eps, params.beta);
    RoundOutcome {
        delta_w: if branch == 0 { w0 } else { w1 },
        reward: branch == 0,
        branch,
    }
}

/// Precomputed swap chain for a fixed `(ε, β, M)`.
///
/// After repetition `τ` the system occupies `ψ_k^⊥` with probability
/// `p_{1,τ} = ε + τ(½ − ε)/M`, independently of earlier repetitions, and
/// `ΔW = −i·ν(1) + Σ_{τ<M} x_τ (ν(τ) − ν(τ+1)) + x_M ν(M)`.
#[derive(Debug, Clone)]
pub struct SwapChain {
    eps: f64,
    beta: f64,
    nu1: f64,
    // (p_{1,τ}, ν(τ) − ν(τ+1)) for τ = 1..M−1; ν(M) = 0 so the last bit never pays.
    steps: Vec<(f64, f64)>,
}

impl SwapChain {
    pub fn new(eps: f64, beta: f64, m: u32) -> Result<Self> {
        let params = ExtractionParams::new(eps, beta, Repetitions::Finite(m))?;
        let eps = params.eps;
        let nus = (1..=m)
            .map(|tau| gap_schedule(tau, m, eps, beta))
            .collect::<Result<Vec<f64>>>()?;
        let dp = (0.5 - eps) / m as f64;
        let steps = (1..m as usize)
            .map(|tau| (eps + tau as f64 * dp, nus[tau - 1] - nus[tau]))
            .collect();
        Ok(SwapChain {
            eps,
            beta,
            nu1: nus[0],
            steps,
        })
    }

    pub fn repetitions(&self) -> u32 {
        self.steps.len() as u32 + 1
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Exact `E[ΔW | branch]` for this finite chain.
    pub fn expected_work(&self, branch: u8) -> f64 {
        let drift: f64 = self.steps.iter().map(|(p, d)| p * d).sum();
        drift - f64::from(branch) * self.nu1
    }

    /// Worst-case spread of the chain increments, `Σ (ν(τ) − ν(τ+1))²`.
    pub fn increment_square_sum(&self) -> f64 {
        self.steps.iter().map(|(_, d)| d * d).sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, branch: u8, rng: &mut R) -> f64 {
        let mut w = -f64::from(branch) * self.nu1;
        for &(p, d) in &self.steps {
            if rng.random::<f64>() < p {
                w += d;
            }
        }
        w
    }

    /// Reward threshold at the quasi-static midpoint `(w₀ + w₁)/2`.
    pub fn reward_threshold(&self) -> f64 {
        let (w0, w1) = work_values(self.eps, self.beta);
        0.5 * (w0 + w1)
    }
}

/// The tail bound `2 exp(−p₁² ε'² M / (2p₀ − 1)²)` on `Pr[|ΔW − E ΔW| ≥ ε']`, in units β = 1.
pub fn hoeffding_tail_bound(eps: f64, m: u32, deviation: f64) -> f64 {
    let p1 = eps;
    let p0 = 1.0 - eps;
    let spread = (2.0 * p0 - 1.0).powi(2);
    if deviation <= 0.0 {
        return 1.0;
    }
    if spread == 0.0 {
        return 0.0;
    }
    (2.0 * (-(p1 * p1 * deviation * deviation * m as f64) / spread).exp()).min(1.0)
}

/// One round with `M` explicit swaps.
pub fn run_round_finite_m<R: Rng + ?Sized>(
    psi: PureQubit,
    psi_k: PureQubit,
    params: &ExtractionParams,
    rng: &mut R,
) -> Result<RoundOutcome> {
    let m = match params.reps {
        Repetitions::Finite(m) => m,
        Repetitions::QuasiStatic => {
            return Err(Error::domain("finite-M round needs a finite repetition count"))
        }
    };
    let chain = SwapChain::new(params.eps, params.beta, m)?;
    let branch = sample_branch(psi, psi_k, rng);
    let delta_w = chain.sample(branch, rng);
    Ok(RoundOutcome {
        delta_w,
        reward: delta_w >= chain.reward_threshold(),
        branch,
    })
}

/// Dispatches on the repetition mode.
pub fn run_round<R: Rng + ?Sized>(
    psi: PureQubit,
    psi_k: PureQubit,
    params: &ExtractionParams,
    rng: &mut R,
) -> Result<RoundOutcome> {
    match params.reps {
        Repetitions::QuasiStatic => Ok(run_round_quasistatic(psi, psi_k, params, rng)),
        Repetitions::Finite(_) => run_round_finite_m(psi, psi_k, params, rng),
    }
}
