//! Round-selection policies: the adaptive bandit learner, a learn-then-exploit
//! tomography baseline, the state-aware oracle, and a scripted constant policy.

use serde::{Deserialize, Serialize};

use crate::accounting::{eps_schedule, ScheduleParams};
use crate::bandit::{BanditState, RoundIndex, StagePlan};
use crate::error::{Error, Result};
use crate::geometry::{BlochVector, PureQubit, EPS_MIN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    Adaptive,
    Twophase,
    Oracle,
    /// Always `(+z, ε = ½)`; every round dissipates exactly `β⁻¹ ln 2`.
    ConstantHalf,
}

impl StrategyKind {
    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Adaptive => "adaptive",
            StrategyKind::Twophase => "twophase",
            StrategyKind::Oracle => "oracle",
            StrategyKind::ConstantHalf => "constant-half",
        }
    }
}

impl std::str::FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adaptive" => Ok(StrategyKind::Adaptive),
            "twophase" => Ok(StrategyKind::Twophase),
            "oracle" => Ok(StrategyKind::Oracle),
            "constant-half" => Ok(StrategyKind::ConstantHalf),
            _ => Err(Error::Config(format!("unknown strategy `{s}`"))),
        }
    }
}

/// What a strategy plays in round `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proposal {
    pub psi_k: PureQubit,
    pub eps_k: f64,
    /// Bandit labels; all zero for strategies without stages.
    pub stage: usize,
    pub group: usize,
    pub slot: usize,
}

impl Proposal {
    fn plain(psi_k: PureQubit, eps_k: f64) -> Self {
        Proposal {
            psi_k,
            eps_k,
            stage: 0,
            group: 0,
            slot: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveStrategy {
    bandit: BanditState,
    plan: StagePlan,
    schedule: ScheduleParams,
}

impl AdaptiveStrategy {
    pub fn new(schedule: ScheduleParams, lambda0: f64, zeta: f64) -> Result<Self> {
        let plan = StagePlan::for_horizon(schedule.n, schedule.delta)?;
        Ok(AdaptiveStrategy {
            bandit: BanditState::new(lambda0, plan.t, zeta)?,
            plan,
            schedule,
        })
    }

    pub fn plan(&self) -> StagePlan {
        self.plan
    }

    pub fn bandit(&self) -> &BanditState {
        &self.bandit
    }

    fn label(&self, k: usize) -> Result<RoundIndex> {
        let full = self.plan.full_rounds();
        if k <= full {
            return RoundIndex::from_round(k, self.plan.t);
        }
        // Rounds after the last full stage replay the newest actions.
        let z = k - full - 1;
        Ok(RoundIndex {
            k,
            stage: self.plan.stages + 1,
            group: z % 4 + 1,
            slot: z / 4 + 1,
        })
    }

    fn propose(&self, k: usize) -> Result<Proposal> {
        let idx = self.label(k)?;
        Ok(Proposal {
            psi_k: self.bandit.actions()[idx.group - 1],
            eps_k: eps_schedule(k, &self.schedule),
            stage: idx.stage,
            group: idx.group,
            slot: idx.slot,
        })
    }

    fn observe(&mut self, k: usize, reward: bool) -> Result<()> {
        if k > self.plan.full_rounds() {
            return Ok(());
        }
        let idx = RoundIndex::from_round(k, self.plan.t)?;
        self.bandit.record_reward(idx, reward)?;
        if self.bandit.stage_complete() {
            self.bandit.close_stage()?;
        }
        Ok(())
    }
}

/// Learn-then-exploit baseline: `⌈αN⌉` Born measurements cycling `+x, +y, +z`
/// at `ε = ½`, then a frozen estimate `(û, ε̂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhaseStrategy {
    alpha: f64,
    c_tp: f64,
    n: usize,
    delta: f64,
    learning_rounds: usize,
    counts: [u64; 3],
    ones: [u64; 3],
    estimate: Option<(PureQubit, f64)>,
}

impl TwoPhaseStrategy {
    pub fn new(alpha: f64, c_tp: f64, n: usize, delta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain(format!("α = {alpha} not in (0,1)")));
        }
        if !(c_tp > 0.0 && c_tp.is_finite()) || n == 0 || !(delta > 0.0 && delta < 1.0) {
            return Err(Error::domain("two-phase needs c_tp > 0, N ≥ 1, δ ∈ (0,1)"));
        }
        let learning_rounds = ((alpha * n as f64).ceil() as usize).min(n);
        Ok(TwoPhaseStrategy {
            alpha,
            c_tp,
            n,
            delta,
            learning_rounds,
            counts: [0; 3],
            ones: [0; 3],
            estimate: None,
        })
    }

    pub fn learning_rounds(&self) -> usize {
        self.learning_rounds
    }

    pub fn estimate(&self) -> Option<(PureQubit, f64)> {
        self.estimate
    }

    fn axis(k: usize) -> BlochVector {
        [BlochVector::X, BlochVector::Y, BlochVector::Z][(k - 1) % 3]
    }

    fn propose(&self, k: usize) -> Result<Proposal> {
        if k <= self.learning_rounds {
            let psi = PureQubit::new(Self::axis(k))?;
            return Ok(Proposal::plain(psi, 0.5));
        }
        let (u, e) = self
            .estimate
            .ok_or_else(|| Error::logic(format!("round {k} proposed before the learning phase finished")))?;
        Ok(Proposal::plain(u, e))
    }

    fn observe(&mut self, k: usize, reward: bool) -> Result<()> {
        if k > self.learning_rounds {
            return Ok(());
        }
        let a = (k - 1) % 3;
        self.counts[a] += 1;
        self.ones[a] += u64::from(reward);
        if k == self.learning_rounds {
            self.freeze()?;
        }
        Ok(())
    }

    fn freeze(&mut self) -> Result<()> {
        let comp = |a: usize| {
            if self.counts[a] == 0 {
                0.0
            } else {
                2.0 * self.ones[a] as f64 / self.counts[a] as f64 - 1.0
            }
        };
        let raw = BlochVector::new(comp(0), comp(1), comp(2));
        let u = raw.normalized().unwrap_or(BlochVector::Z);
        let eps = (self.c_tp * (6.0 / self.delta).ln() / (self.alpha * self.n as f64)).clamp(EPS_MIN, 0.5);
        self.estimate = Some((PureQubit::new(u)?, eps));
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum Policy {
    Adaptive(Box<AdaptiveStrategy>),
    TwoPhase(TwoPhaseStrategy),
    Oracle(PureQubit),
    ConstantHalf,
}

/// A policy plus the round counter guarding against replays.
#[derive(Debug, Clone)]
pub struct Strategy {
    policy: Policy,
    n: usize,
    observed: usize,
}

impl Strategy {
    pub fn adaptive(schedule: ScheduleParams, lambda0: f64, zeta: f64) -> Result<Self> {
        let n = schedule.n;
        Ok(Self::wrap(Policy::Adaptive(Box::new(AdaptiveStrategy::new(schedule, lambda0, zeta)?)), n))
    }

    pub fn two_phase(alpha: f64, c_tp: f64, n: usize, delta: f64) -> Result<Self> {
        Ok(Self::wrap(Policy::TwoPhase(TwoPhaseStrategy::new(alpha, c_tp, n, delta)?), n))
    }

    pub fn oracle(psi: PureQubit, n: usize) -> Self {
        Self::wrap(Policy::Oracle(psi), n)
    }

    pub fn constant_half(n: usize) -> Self {
        Self::wrap(Policy::ConstantHalf, n)
    }

    fn wrap(policy: Policy, n: usize) -> Self {
        Strategy {
            policy,
            n,
            observed: 0,
        }
    }

    pub fn kind(&self) -> StrategyKind {
        match self.policy {
            Policy::Adaptive(_) => StrategyKind::Adaptive,
            Policy::TwoPhase(_) => StrategyKind::Twophase,
            Policy::Oracle(_) => StrategyKind::Oracle,
            Policy::ConstantHalf => StrategyKind::ConstantHalf,
        }
    }

    pub fn horizon(&self) -> usize {
        self.n
    }

    pub fn as_adaptive(&self) -> Option<&AdaptiveStrategy> {
        match &self.policy {
            Policy::Adaptive(a) => Some(a),
            _ => None,
        }
    }

    pub fn as_two_phase(&self) -> Option<&TwoPhaseStrategy> {
        match &self.policy {
            Policy::TwoPhase(t) => Some(t),
            _ => None,
        }
    }

    pub fn propose(&self, k: usize) -> Result<Proposal> {
        if k == 0 || k > self.n {
            return Err(Error::domain(format!("round {k} outside 1..={}", self.n)));
        }
        match &self.policy {
            Policy::Adaptive(a) => a.propose(k),
            Policy::TwoPhase(t) => t.propose(k),
            Policy::Oracle(psi) => Ok(Proposal::plain(*psi, EPS_MIN)),
            Policy::ConstantHalf => Ok(Proposal::plain(PureQubit::new(BlochVector::Z)?, 0.5)),
        }
    }

    /// Feeds back the reward of round `k`; rounds must arrive in order, once each.
    pub fn observe(&mut self, k: usize, reward: bool) -> Result<()> {
        if k != self.observed + 1 || k > self.n {
            return Err(Error::logic(format!(
                "reward for round {k} out of sequence (last observed {})",
                self.observed
            )));
        }
        match &mut self.policy {
            Policy::Adaptive(a) => a.observe(k, reward)?,
            Policy::TwoPhase(t) => t.observe(k, reward)?,
            Policy::Oracle(_) | Policy::ConstantHalf => {}
        }
        self.observed = k;
        Ok(())
    }
}
