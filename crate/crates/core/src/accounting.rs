//! Dissipation, regret and erasure-cost bookkeeping plus the accuracy schedule
//! and scaling-law fits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{binary_entropy, rel_entropy_pure_vs_target, PureQubit, EPS_MIN};

/// How the accuracy schedule sets its confidence term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleParams {
    pub c: f64,
    pub n: usize,
    pub delta: f64,
}

impl ScheduleParams {
    pub fn new(c: f64, n: usize, delta: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) || n == 0 || !(delta > 0.0 && delta < 1.0) {
            return Err(Error::domain(format!(
                "schedule needs C > 0, N ≥ 1, δ ∈ (0,1) (got {c}, {n}, {delta})"
            )));
        }
        Ok(Self { c, n, delta })
    }

    /// `δ = 1/N` switches to the in-expectation form `C ln N / k`.
    pub fn is_expectation_form(&self) -> bool {
        (self.delta * self.n as f64 - 1.0).abs() < 1e-9
    }

    /// The logarithmic numerator of the schedule.
    pub fn log_term(&self) -> f64 {
        let n = self.n as f64;
        if self.is_expectation_form() {
            n.ln()
        } else {
            (n / self.delta).ln()
        }
    }
}

/// `ε_k = min{C·ln(N/δ)/k, ½}`, floored at [`EPS_MIN`].
pub fn eps_schedule(k: usize, sp: &ScheduleParams) -> f64 {
    let k = k.max(1) as f64;
    (sp.c * sp.log_term() / k).clamp(EPS_MIN, 0.5)
}

/// `β⁻¹ D(ψ‖Δ_{2ε}(ψ_k))`.
pub fn dissipation_round(psi: PureQubit, psi_k: PureQubit, eps: f64, beta: f64) -> f64 {
    rel_entropy_pure_vs_target(psi, psi_k, eps) / beta
}

/// Entropy of the two-outcome memory register, `h(ε)`.
pub fn landauer_round_sc(eps: f64) -> f64 {
    binary_entropy(eps.clamp(0.0, 1.0))
}

/// `ε − ε ln ε`, which dominates [`landauer_round_sc`].
pub fn landauer_sc_bound(eps: f64) -> f64 {
    if eps <= 0.0 {
        0.0
    } else {
        eps - eps * eps.ln()
    }
}

/// Three-outcome register entropy `h(ε) − ε(cos²θ ln cos²θ + sin²θ ln sin²θ)`.
pub fn landauer_round_jc(eps: f64, theta: f64) -> f64 {
    let eps = eps.clamp(0.0, 1.0);
    let c2 = theta.cos().powi(2);
    let s2 = theta.sin().powi(2);
    let xlnx = |x: f64| if x <= 0.0 { 0.0 } else { x * x.ln() };
    binary_entropy(eps) - eps * (xlnx(c2) + xlnx(s2))
}

/// `2ε − ε ln ε`, which dominates [`landauer_round_jc`].
pub fn landauer_jc_bound(eps: f64) -> f64 {
    if eps <= 0.0 {
        0.0
    } else {
        2.0 * eps - eps * eps.ln()
    }
}

/// Bound on `Σ −ε_k ln ε_k` for any `N` values in `[0,1]` whose sum is at most
/// `L = C·ln(N/δ)·ln N`: `2L ln(N/L)` when `L/N ≤ 1/e`, else `N/e`.
pub fn entropy_sum_bound(n: usize, sum_budget: f64) -> f64 {
    let n = n as f64;
    if sum_budget <= 0.0 {
        return 0.0;
    }
    if sum_budget / n <= (-1.0f64).exp() {
        2.0 * sum_budget * (n / sum_budget).ln()
    } else {
        n / std::f64::consts::E
    }
}

/// Running sum with Neumaier compensation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// One round's accounting entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub diss: f64,
    pub regret: f64,
    pub landauer: f64,
    pub eps_k: f64,
    pub fidelity_k: f64,
}

/// Per-round sequences with their prefix sums.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ledger {
    entries: Vec<LedgerEntry>,
    diss_cum: Vec<f64>,
    regret_cum: Vec<f64>,
    landauer_cum: Vec<f64>,
    diss_acc: CompensatedSum,
    regret_acc: CompensatedSum,
    landauer_acc: CompensatedSum,
}

impl Ledger {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            entries: Vec::with_capacity(n),
            diss_cum: Vec::with_capacity(n),
            regret_cum: Vec::with_capacity(n),
            landauer_cum: Vec::with_capacity(n),
            ..Default::default()
        }
    }

    pub fn push(&mut self, e: LedgerEntry) -> Result<()> {
        for (name, v) in [("dissipation", e.diss), ("regret", e.regret), ("landauer", e.landauer)] {
            if !(v >= 0.0) {
                return Err(Error::Internal(format!("negative or NaN {name} entry {v}")));
            }
        }
        self.diss_acc.add(e.diss);
        self.regret_acc.add(e.regret);
        self.landauer_acc.add(e.landauer);
        // Compensation can nudge a sum down by an ulp; keep the prefix sums monotone.
        let mono = |v: &Vec<f64>, x: f64| v.last().map_or(x, |l| x.max(*l));
        self.diss_cum.push(mono(&self.diss_cum, self.diss_acc.value()));
        self.regret_cum.push(mono(&self.regret_cum, self.regret_acc.value()));
        self.landauer_cum.push(mono(&self.landauer_cum, self.landauer_acc.value()));
        self.entries.push(e);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn diss_cum(&self) -> &[f64] {
        &self.diss_cum
    }

    pub fn regret_cum(&self) -> &[f64] {
        &self.regret_cum
    }

    pub fn landauer_cum(&self) -> &[f64] {
        &self.landauer_cum
    }

    pub fn total_dissipation(&self) -> f64 {
        self.diss_cum.last().copied().unwrap_or(0.0)
    }

    pub fn total_regret(&self) -> f64 {
        self.regret_cum.last().copied().unwrap_or(0.0)
    }

    pub fn total_landauer(&self) -> f64 {
        self.landauer_cum.last().copied().unwrap_or(0.0)
    }
}

/// Post-hoc check of the entropy-sum lemma on one sequence in `[0,1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropySumCheck {
    pub sum: f64,
    pub entropy_sum: f64,
    /// Smallest `C` for which `Σε ≤ C ln(N/δ) ln N` holds.
    pub implied_c: f64,
    pub bound: f64,
    pub holds: bool,
}

pub fn check_entropy_sum(values: impl IntoIterator<Item = f64>, n: usize, delta: f64) -> EntropySumCheck {
    let mut sum = CompensatedSum::default();
    let mut ent = CompensatedSum::default();
    for v in values {
        let v = v.clamp(0.0, 1.0);
        sum.add(v);
        if v > 0.0 {
            ent.add(-v * v.ln());
        }
    }
    let nf = n as f64;
    let scale = (nf / delta).ln() * nf.ln();
    let implied_c = if scale > 0.0 { sum.value() / scale } else { f64::INFINITY };
    let bound = entropy_sum_bound(n, sum.value());
    EntropySumCheck {
        sum: sum.value(),
        entropy_sum: ent.value(),
        implied_c,
        bound,
        holds: ent.value() <= bound * (1.0 + 1e-12) + 1e-300,
    }
}

/// Least-squares line `y ≈ a + b·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    /// Euclidean norm of the residual vector.
    pub residual: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::domain("line fit needs at least two paired points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("line fit needs distinct abscissae"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(LineFit {
        intercept,
        slope,
        residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub n: usize,
    pub w: f64,
    /// `W / (ln(N/δ)·ln N)`.
    pub polylog_constant: f64,
    /// `W / √N`.
    pub sqrt_constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub delta: f64,
    /// `W ≈ a + b·ln²N`.
    pub log_squared: LineFit,
    /// `W ≈ a + b·√N`.
    pub sqrt: LineFit,
    /// `W ≈ a + b·N`.
    pub linear: LineFit,
    pub points: Vec<ScalingPoint>,
    /// max/min ratio of the per-point polylog constants.
    pub polylog_constant_spread: f64,
}

pub fn fit_scaling(points: &[(usize, f64)], delta: f64) -> Result<FitReport> {
    if points.len() < 3 {
        return Err(Error::domain(format!("scaling fit needs ≥ 3 points, got {}", points.len())));
    }
    if points.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::domain("scaling fit needs strictly increasing N"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!("δ = {delta} not in (0,1)")));
    }
    let ns: Vec<f64> = points.iter().map(|p| p.0 as f64).collect();
    let ws: Vec<f64> = points.iter().map(|p| p.1).collect();
    let ln2: Vec<f64> = ns.iter().map(|n| n.ln().powi(2)).collect();
    let sq: Vec<f64> = ns.iter().map(|n| n.sqrt()).collect();
    let pts: Vec<ScalingPoint> = points
        .iter()
        .map(|&(n, w)| {
            let nf = n as f64;
            ScalingPoint {
                n,
                w,
                polylog_constant: w / ((nf / delta).ln() * nf.ln()),
                sqrt_constant: w / nf.sqrt(),
            }
        })
        .collect();
    let consts: Vec<f64> = pts.iter().map(|p| p.polylog_constant).collect();
    let hi = consts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = consts.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(FitReport {
        delta,
        log_squared: fit_line(&ln2, &ws)?,
        sqrt: fit_line(&sq, &ws)?,
        linear: fit_line(&ns, &ws)?,
        points: pts,
        polylog_constant_spread: if lo > 0.0 { hi / lo } else { f64::INFINITY },
    })
}
