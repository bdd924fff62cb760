//! Built-in oracle suites: closed-form identities, finite-M convergence and
//! concentration, the relative-entropy bound, Jaynes-Cummings invariants and
//! erasure-entropy bounds.

use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::accounting::{fit_line, landauer_jc_bound, landauer_round_jc, landauer_round_sc, landauer_sc_bound};
use crate::error::Result;
use crate::geometry::{fidelity, infidelity, rel_entropy_bound, rel_entropy_pure_vs_target, BlochVector, PureQubit};
use crate::harness::{haar_state, run, trial_seed, EngineKind, ExperimentConfig, PsiMode};
use crate::jc::{jc_expected_work, jc_outcome_probs, jc_round, jc_theta, JcParams};
use crate::strategies::StrategyKind;
use crate::thermal::{expected_work, hoeffding_tail_bound, run_round_quasistatic, work_values, ExtractionParams,
    Repetitions, SwapChain};

/// Work-value function under test; swapped out to check that the suites notice.
pub type WorkValuesFn = fn(f64, f64) -> (f64, f64);

const MAX_DUMP: usize = 5;

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub seed: u64,
    pub work_values: WorkValuesFn,
    /// Chains per repetition count in the finite-M suites.
    pub chains: usize,
    pub reps: Vec<u32>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 0x5eed,
            work_values,
            chains: 100_000,
            reps: vec![100, 1000, 10_000],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    /// Up to a handful of failing inputs.
    pub offending: Vec<String>,
}

impl SuiteReport {
    fn new(name: &str, offending: Vec<String>, failures: usize, detail: String) -> Self {
        SuiteReport {
            name: name.to_string(),
            passed: failures == 0,
            detail: format!("{detail}; {failures} failure(s)"),
            offending,
        }
    }

    pub fn line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let mut s = format!("[{status}] {}: {}", self.name, self.detail);
        for o in &self.offending {
            s.push_str(&format!("\n    offending: {o}"));
        }
        s
    }
}

struct Failures {
    count: usize,
    dump: Vec<String>,
}

impl Failures {
    fn new() -> Self {
        Failures {
            count: 0,
            dump: Vec::new(),
        }
    }

    fn push(&mut self, msg: impl FnOnce() -> String) {
        self.count += 1;
        if self.dump.len() < MAX_DUMP {
            self.dump.push(msg());
        }
    }
}

fn stream(seed: u64, tag: u64, index: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(trial_seed(seed ^ tag.rotate_left(32), index))
}

/// A state at infidelity exactly `q` from `psi`, rotated about a random axis.
fn state_at_infidelity<R: Rng + ?Sized>(psi: PureQubit, q: f64, rng: &mut R) -> PureQubit {
    let u = psi.bloch();
    let axis = if u.x.abs() < 0.9 { BlochVector::X } else { BlochVector::Y };
    let w = [haar_state(rng).bloch(), axis]
        .into_iter()
        .find_map(|w| (w - u * u.dot(w)).normalized())
        .expect("a direction orthogonal to u");
    let cos = 1.0 - 2.0 * q;
    let sin = (1.0 - cos * cos).max(0.0).sqrt();
    PureQubit::from_direction(u * cos + w * sin).expect("unit combination")
}

/// Expected work against the mixture `p·w₀ + (1−p)·w₁`, 10⁴ random cases.
pub fn mixture_identity(opts: &VerifyOptions, cases: usize) -> SuiteReport {
    let mut rng = stream(opts.seed, 1, 0);
    let mut f = Failures::new();
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let psi = haar_state(&mut rng);
        let psi_k = haar_state(&mut rng);
        let eps = rng.random_range(1e-6..=0.5);
        let beta = rng.random_range(0.25..=4.0);
        let params = ExtractionParams::new(eps, beta, Repetitions::QuasiStatic).expect("valid params");
        let p = fidelity(psi, psi_k);
        let (w0, w1) = (opts.work_values)(eps, beta);
        let err = (expected_work(psi, psi_k, &params) - (p * w0 + (1.0 - p) * w1)).abs();
        worst = worst.max(err * beta);
        if err > 1e-12 / beta {
            f.push(|| format!("psi={:?} psi_k={:?} eps={eps} beta={beta} err={err:e}", psi.bloch(), psi_k.bloch()));
        }
    }
    SuiteReport::new(
        "mixture-identity",
        f.dump,
        f.count,
        format!("{cases} cases, worst |E[ΔW] − mixture|·β = {worst:e} (tol 1e-12)"),
    )
}

/// Per-M statistics of `ΔW` on the matched branch (`ψ = ψ_k`, `β = 1`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainStats {
    pub m: u32,
    pub mean: f64,
    pub std_err: f64,
    /// `|mean − w₀|`.
    pub bias: f64,
    pub exact_mean: f64,
    /// `(deviation, empirical tail, Hoeffding bound)` rows.
    pub tails: Vec<(f64, f64, f64)>,
}

pub fn sample_chains(eps: f64, m: u32, chains: usize, seed: u64) -> Result<ChainStats> {
    let chain = SwapChain::new(eps, 1.0, m)?;
    const CHUNK: usize = 1000;
    let blocks = chains.div_ceil(CHUNK);
    let samples: Vec<f64> = (0..blocks)
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = stream(seed, 2 + u64::from(m), b as u64);
            let len = CHUNK.min(chains - b * CHUNK);
            let chain = &chain;
            (0..len).map(move |_| chain.sample(0, &mut rng)).collect::<Vec<_>>()
        })
        .collect();
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let (w0, _) = work_values(eps, 1.0);
    let exact = chain.expected_work(0);
    let tails = [1.0, 2.0, 3.0, 4.0, 5.0]
        .iter()
        .map(|c| {
            let dev = c / f64::from(m).sqrt();
            let hits = samples.iter().filter(|x| (*x - exact).abs() >= dev).count();
            (dev, hits as f64 / n, hoeffding_tail_bound(eps, m, dev))
        })
        .collect();
    Ok(ChainStats {
        m,
        mean,
        std_err: (var / n).sqrt(),
        bias: (mean - w0).abs(),
        exact_mean: exact,
        tails,
    })
}

/// Finite-M convergence (log-log slope of the bias) and Hoeffding tails.
pub fn finite_m_suites(opts: &VerifyOptions) -> Result<(SuiteReport, SuiteReport, Vec<ChainStats>)> {
    let eps = 0.25;
    let stats = opts
        .reps
        .iter()
        .map(|&m| sample_chains(eps, m, opts.chains, opts.seed))
        .collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = stats.iter().map(|s| f64::from(s.m).ln()).collect();
    let y: Vec<f64> = stats.iter().map(|s| s.bias.max(f64::MIN_POSITIVE).ln()).collect();
    let slope = fit_line(&x, &y).map(|f| f.slope).unwrap_or(f64::NAN);
    let mut f = Failures::new();
    if !((-1.2..=-0.8).contains(&slope)) {
        f.push(|| {
            stats
                .iter()
                .map(|s| format!("M={} bias={:e}±{:e}", s.m, s.bias, s.std_err))
                .collect::<Vec<_>>()
                .join(", ")
        });
    }
    let slope_report = SuiteReport::new(
        "finite-m-convergence",
        f.dump,
        f.count,
        format!("ε = {eps}, {} chains per M, slope of ln|mean ΔW − w₀| vs ln M = {slope:.4} (want −1 ± 0.2)", opts.chains),
    );

    let mut f = Failures::new();
    let mut rows = 0;
    for s in &stats {
        let n = opts.chains as f64;
        for &(dev, emp, bound) in &s.tails {
            rows += 1;
            let sigma = (bound.clamp(1.0 / n, 1.0) * (1.0 - bound.min(1.0)).max(1.0 / n) / n).sqrt();
            if emp > bound + 3.0 * sigma {
                f.push(|| format!("M={} deviation={dev:e} empirical={emp} bound={bound}", s.m));
            }
        }
    }
    let tail_report = SuiteReport::new(
        "hoeffding-tail",
        f.dump,
        f.count,
        format!("{rows} (M, deviation) cells, empirical tail ≤ bound + 3σ"),
    );
    Ok((slope_report, tail_report, stats))
}

/// Empirical frequency of the `w₀` branch against the fidelity.
pub fn born_branch(opts: &VerifyOptions, pairs: usize, samples: usize) -> SuiteReport {
    let results: Vec<(f64, f64, f64)> = (0..pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(opts.seed, 3, i as u64);
            let psi = haar_state(&mut rng);
            let psi_k = haar_state(&mut rng);
            let eps = rng.random_range(0.01..0.5);
            let params = ExtractionParams::new(eps, 1.0, Repetitions::QuasiStatic).expect("valid params");
            let (w0, _) = work_values(eps, 1.0);
            let hits = (0..samples)
                .filter(|_| run_round_quasistatic(psi, psi_k, &params, &mut rng).delta_w == w0)
                .count();
            let p = fidelity(psi, psi_k);
            (p, hits as f64 / samples as f64, eps)
        })
        .collect();
    let mut f = Failures::new();
    let mut worst = 0.0f64;
    for &(p, emp, eps) in &results {
        let se = (p * (1.0 - p) / samples as f64).sqrt().max(1.0 / samples as f64);
        worst = worst.max((emp - p).abs() / se);
        if (emp - p).abs() > 4.0 * se {
            f.push(|| format!("fidelity={p} empirical={emp} eps={eps}"));
        }
    }
    SuiteReport::new(
        "born-branch",
        f.dump,
        f.count,
        format!("{pairs} pairs × {samples} rounds, worst deviation {worst:.3} SE (tol 4)"),
    )
}

/// `D(ψ‖Δ_{2ε}(ψ_k)) ≤ 16ε(2 − ln ε)` whenever infidelity ≤ ε ≤ ½.
pub fn rel_entropy_bound_suite(opts: &VerifyOptions, cases: usize) -> SuiteReport {
    let mut rng = stream(opts.seed, 4, 0);
    let mut f = Failures::new();
    let mut tightest = f64::INFINITY;
    for _ in 0..cases {
        let eps = (rng.random_range((1e-9f64).ln()..=0.5f64.ln())).exp();
        let q = rng.random_range(0.0..=eps);
        let psi = haar_state(&mut rng);
        let psi_k = state_at_infidelity(psi, q, &mut rng);
        let q_actual = infidelity(psi, psi_k);
        let eps = eps.max(q_actual).min(0.5);
        let d = rel_entropy_pure_vs_target(psi, psi_k, eps);
        let b = rel_entropy_bound(eps).expect("ε in range");
        tightest = tightest.min(b - d);
        if d > b {
            f.push(|| format!("eps={eps} infidelity={q_actual} D={d} bound={b}"));
        }
    }
    SuiteReport::new(
        "rel-entropy-bound",
        f.dump,
        f.count,
        format!("{cases} instances, smallest slack {tightest:e}"),
    )
}

/// Outcome probabilities, Monte Carlo mean work and the dissipation-regret ledger.
pub fn jc_suite(opts: &VerifyOptions, rounds: usize) -> Result<SuiteReport> {
    let mut f = Failures::new();
    let mut ns: Vec<u64> = (0..=100).collect();
    ns.extend([1000, 12_345, 100_000, 999_999, 1_000_000]);
    for &n in &ns {
        for i in 0..=100 {
            let p = i as f64 / 100.0;
            let pr = jc_outcome_probs(p, n);
            let s: f64 = pr.iter().sum();
            if (s - 1.0).abs() > 1e-12 || pr.iter().any(|x| *x < 0.0) {
                f.push(|| format!("n={n} p={p} probs={pr:?}"));
            }
        }
    }

    let cases: [(f64, u64); 4] = [(0.9, 0), (0.5, 3), (0.2, 40), (0.75, 1000)];
    let omega = 1.0;
    let params = JcParams::new(omega)?;
    let mut worst = 0.0f64;
    for (i, &(target_p, n)) in cases.iter().enumerate() {
        let mut rng = stream(opts.seed, 5, i as u64);
        let psi = haar_state(&mut rng);
        let psi_k = state_at_infidelity(psi, 1.0 - target_p, &mut rng);
        let p = fidelity(psi, psi_k);
        let draws: Vec<f64> = (0..rounds)
            .map(|_| jc_round(psi, psi_k, &params, n, &mut rng).delta_w)
            .collect();
        let mean = draws.iter().sum::<f64>() / rounds as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (rounds as f64 - 1.0);
        let se = (var / rounds as f64).sqrt().max(1e-12);
        let want = jc_expected_work(p, n, omega);
        worst = worst.max((mean - want).abs() / se);
        if (mean - want).abs() > 4.0 * se {
            f.push(|| format!("p={p} n={n} mean={mean} expected={want} se={se}"));
        }
    }

    let cfg = ExperimentConfig {
        engine: EngineKind::Jc,
        strategy: StrategyKind::Adaptive,
        n: 2048,
        trials: 4,
        base_seed: opts.seed,
        psi: PsiMode::Haar,
        ..ExperimentConfig::default()
    };
    let res = run(&cfg, false)?;
    for c in res.summary.checks.iter().filter(|c| c.name == "jc-dissipation-vs-regret") {
        if !c.passed {
            f.push(|| c.detail.clone());
        }
    }
    Ok(SuiteReport::new(
        "jaynes-cummings",
        f.dump,
        f.count,
        format!(
            "probability grid {} cells, Monte Carlo {rounds} rounds × {} cases (worst {worst:.3} SE), ledger run N = {}",
            ns.len() * 101,
            cases.len(),
            cfg.n
        ),
    ))
}

/// Binary and three-outcome erasure entropies against their bounds on a grid.
pub fn landauer_suite(points: usize) -> SuiteReport {
    let mut f = Failures::new();
    for i in 1..=points {
        let e = i as f64 / points as f64;
        let (h, b) = (landauer_round_sc(e), landauer_sc_bound(e));
        if h > b + 1e-15 {
            f.push(|| format!("eps={e} h={h} bound={b}"));
        }
        for j in 0..=8 {
            let th = FRAC_PI_2 * j as f64 / 8.0;
            let (h, b) = (landauer_round_jc(e, th), landauer_jc_bound(e));
            if h > b + 1e-15 {
                f.push(|| format!("eps={e} theta={th} S={h} bound={b}"));
            }
        }
    }
    // Occupation-derived angles as they occur in the JC engine.
    for n in [0u64, 1, 2, 5, 50, 5000] {
        let (h, b) = (landauer_round_jc(0.3, jc_theta(n)), landauer_jc_bound(0.3));
        if h > b + 1e-15 {
            f.push(|| format!("eps=0.3 n={n} S={h} bound={b}"));
        }
    }
    SuiteReport::new("landauer-bounds", f.dump, f.count, format!("{points}-point ε grid"))
}

/// Runs every suite with its default size.
pub fn verify_all(opts: &VerifyOptions) -> Result<Vec<SuiteReport>> {
    let (slope, tail, _) = finite_m_suites(opts)?;
    Ok(vec![
        mixture_identity(opts, 10_000),
        slope,
        tail,
        born_branch(opts, 20, 100_000),
        rel_entropy_bound_suite(opts, 10_000),
        jc_suite(opts, 100_000)?,
        landauer_suite(1000),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tampered(eps: f64, beta: f64) -> (f64, f64) {
        let (a, b) = work_values(eps, beta);
        (a + 1e-6, b + 1e-6)
    }

    #[test]
    fn mixture_identity_passes_and_catches_tampering() {
        let opts = VerifyOptions::default();
        assert!(mixture_identity(&opts, 2000).passed);
        let bad = VerifyOptions {
            work_values: tampered,
            ..VerifyOptions::default()
        };
        let r = mixture_identity(&bad, 2000);
        assert!(!r.passed);
        assert!(!r.offending.is_empty());
    }

    #[test]
    fn state_at_infidelity_hits_target() {
        let mut rng = stream(1, 9, 0);
        for q in [0.0, 1e-6, 0.1, 0.5, 0.99, 1.0] {
            let psi = haar_state(&mut rng);
            let phi = state_at_infidelity(psi, q, &mut rng);
            assert!((infidelity(psi, phi) - q).abs() < 1e-12);
        }
    }

    #[test]
    fn small_suites_pass() {
        let opts = VerifyOptions::default();
        assert!(rel_entropy_bound_suite(&opts, 2000).passed);
        assert!(landauer_suite(200).passed);
        assert!(born_branch(&opts, 4, 20_000).passed);
    }
}
