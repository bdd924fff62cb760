//! Stage-structured linear bandit for learning a pure qubit direction with
//! vanishing-variance rewards (LinUCB-VVN).
//!
//! Rounds are grouped into stages. Stage `k*` probes four Bloch directions
//! `a_{k*,1..4}`, each `t` times. A reward `r ∈ {0,1}` on direction `a` has mean
//! `(1 + a·θ)/2`, so `2r − 1` is an unbiased sample of `a·θ`. After a stage the
//! learner
//!
//! 1. folds the four directions into the design matrix `V`,
//! 2. forms `t` weighted least-squares estimates `V⁻¹ S_j`, one per slot `j`,
//! 3. picks the estimate with the smallest median `V`-distance to the others,
//! 4. places the next four directions at `θ ± v/√λ_min` along the two least
//!    explored eigenvectors of `V`,
//! 5. shrinks the reward-variance proxy to `2ζ/√λ_max(V)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BlochVector, PureQubit};
use crate::linalg::SymMat3;

/// `ζ` value under which the convergence guarantee is proven: `334812√2 + 1296√6`.
pub fn proof_zeta() -> f64 {
    334_812.0 * 2f64.sqrt() + 1296.0 * 6f64.sqrt()
}

/// Position of a round inside the stage structure, all labels 1-based.
///
/// `k = 4t(stage − 1) + 4(slot − 1) + group`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundIndex {
    pub k: usize,
    pub stage: usize,
    pub group: usize,
    pub slot: usize,
}

impl RoundIndex {
    pub fn from_round(k: usize, t: usize) -> Result<Self> {
        if k == 0 || t == 0 {
            return Err(Error::domain("round and slot counts are 1-based"));
        }
        let z = k - 1;
        let per_stage = 4 * t;
        Ok(RoundIndex {
            k,
            stage: z / per_stage + 1,
            slot: (z % per_stage) / 4 + 1,
            group: z % 4 + 1,
        })
    }

    pub fn from_parts(stage: usize, group: usize, slot: usize, t: usize) -> Result<Self> {
        if stage == 0 || !(1..=4).contains(&group) || slot == 0 || slot > t {
            return Err(Error::domain(format!(
                "invalid round label (stage {stage}, group {group}, slot {slot}, t {t})"
            )));
        }
        Ok(RoundIndex {
            k: 4 * t * (stage - 1) + 4 * (slot - 1) + group,
            stage,
            group,
            slot,
        })
    }
}

/// How `N` rounds are split into full stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StagePlan {
    /// Estimators (slots) per stage.
    pub t: usize,
    /// Number of complete stages.
    pub stages: usize,
    /// Rounds beyond `4·t·stages`; they replay the newest actions without learning.
    pub leftover: usize,
}

impl StagePlan {
    /// Largest `K*` with `4·⌈24 ln(K*/δ)⌉·K* ≤ N`.
    pub fn for_horizon(n: usize, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::domain(format!("confidence δ = {delta} not in (0,1)")));
        }
        let t_of = |k: usize| ((24.0 * (k as f64 / delta).ln()).ceil() as usize).max(1);
        let mut best = 0usize;
        let mut k = 1usize;
        while 4 * t_of(k) * k <= n {
            best = k;
            k += 1;
        }
        let t = t_of(best.max(1));
        Ok(StagePlan {
            t,
            stages: best,
            leftover: n - 4 * t * best,
        })
    }

    pub fn full_rounds(&self) -> usize {
        4 * self.t * self.stages
    }
}

/// Output of a stage update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageUpdate {
    pub actions: [PureQubit; 4],
    pub theta: BlochVector,
    /// Index `j*` (0-based) of the selected estimator.
    pub selected: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BanditState {
    design: SymMat3,
    lambda0: f64,
    t: usize,
    zeta: f64,
    sigma2: f64,
    stage: usize,
    actions: [PureQubit; 4],
    sums: Vec<BlochVector>,
    seen: Vec<bool>,
    recorded: usize,
    theta: Option<BlochVector>,
}

pub fn initial_actions() -> [PureQubit; 4] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [
        BlochVector::new(h, 0.0, h),
        BlochVector::new(-h, 0.0, h),
        BlochVector::new(0.0, h, h),
        BlochVector::new(0.0, -h, h),
    ]
    .map(|v| PureQubit::from_direction(v).expect("nonzero"))
}

impl BanditState {
    pub fn new(lambda0: f64, t: usize, zeta: f64) -> Result<Self> {
        if !(lambda0 > 0.0 && lambda0.is_finite()) || t == 0 || !(zeta > 0.0 && zeta.is_finite()) {
            return Err(Error::domain(format!(
                "bandit needs λ₀ > 0, t ≥ 1, ζ > 0 (got {lambda0}, {t}, {zeta})"
            )));
        }
        Ok(BanditState {
            design: SymMat3::scaled_identity(lambda0),
            lambda0,
            t,
            zeta,
            sigma2: 1.0,
            stage: 1,
            actions: initial_actions(),
            sums: vec![BlochVector::ZERO; t],
            seen: vec![false; 4 * t],
            recorded: 0,
            theta: None,
        })
    }

    pub fn design(&self) -> &SymMat3 {
        &self.design
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn stage(&self) -> usize {
        self.stage
    }

    pub fn actions(&self) -> [PureQubit; 4] {
        self.actions
    }

    pub fn weighted_sums(&self) -> &[BlochVector] {
        &self.sums
    }

    /// Normalized median-of-means estimate from the last completed stage.
    pub fn theta(&self) -> Option<BlochVector> {
        self.theta
    }

    pub fn stage_complete(&self) -> bool {
        self.recorded == 4 * self.t
    }

    /// Measurement direction for a round of the current stage.
    pub fn current_direction(&self, idx: RoundIndex) -> Result<PureQubit> {
        if !(1..=4).contains(&idx.group) {
            return Err(Error::domain(format!("group {} outside 1..=4", idx.group)));
        }
        Ok(self.actions[idx.group - 1])
    }

    /// Adds `(2r − 1)·a_{k*,i}/σ̂²_{k*}` to the accumulator of slot `j`.
    pub fn record_reward(&mut self, idx: RoundIndex, reward: bool) -> Result<()> {
        if idx.stage != self.stage {
            return Err(Error::logic(format!(
                "reward for stage {} while stage {} is open",
                idx.stage, self.stage
            )));
        }
        if idx.slot == 0 || idx.slot > self.t || !(1..=4).contains(&idx.group) {
            return Err(Error::logic(format!("round label {idx:?} out of range for t = {}", self.t)));
        }
        let cell = 4 * (idx.slot - 1) + (idx.group - 1);
        if self.seen[cell] {
            return Err(Error::logic(format!("round {} already recorded", idx.k)));
        }
        self.seen[cell] = true;
        self.recorded += 1;
        let sign = if reward { 1.0 } else { -1.0 };
        let a = self.actions[idx.group - 1].bloch();
        self.sums[idx.slot - 1] = self.sums[idx.slot - 1] + a * (sign / self.sigma2);
        Ok(())
    }

    /// Closes the current stage and moves to the next one.
    pub fn close_stage(&mut self) -> Result<StageUpdate> {
        if !self.stage_complete() {
            return Err(Error::logic(format!(
                "stage {} has {} of {} rewards",
                self.stage,
                self.recorded,
                4 * self.t
            )));
        }
        let w = 1.0 / self.sigma2;
        for a in self.actions {
            self.design.add_outer(a.bloch(), w);
        }
        let inv = self.design.inverse()?;
        let estimates: Vec<BlochVector> = self.sums.iter().map(|s| inv.mul_vec(*s)).collect();
        let selected = weighted_median_of_means(&estimates, &self.design);
        let theta = match estimates[selected].normalized() {
            Some(u) => u,
            None => self.theta.unwrap_or(BlochVector::Z),
        };

        let eig = self.design.eigen();
        let lambda_min = eig.values[0];
        let lambda_max = eig.values[2];
        if !(lambda_min > 0.0) {
            return Err(Error::Internal(format!("design matrix lost definiteness (λmin = {lambda_min})")));
        }
        let step = 1.0 / lambda_min.sqrt();
        let mut next = self.actions;
        for (i, slot) in next.iter_mut().enumerate() {
            // i is 0-based here: groups 1,2 use v₁ and groups 3,4 use v₂; odd groups add.
            let v = eig.vectors[i / 2];
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            *slot = PureQubit::from_direction(theta + v * (sign * step)).or_else(|_| {
                PureQubit::from_direction(v * sign)
            })?;
        }

        self.actions = next;
        self.theta = Some(theta);
        self.sigma2 = 2.0 * self.zeta / lambda_max.sqrt();
        self.stage += 1;
        self.recorded = 0;
        self.seen.iter_mut().for_each(|s| *s = false);
        Ok(StageUpdate {
            actions: next,
            theta,
            selected,
        })
    }
}

/// `argmin_j median{‖θ_j − θ_j'‖_V : j' ≠ j}` with the lower median and lowest-index ties.
pub fn weighted_median_of_means(estimates: &[BlochVector], v: &SymMat3) -> usize {
    let n = estimates.len();
    if n <= 1 {
        return 0;
    }
    let mut best = 0;
    let mut best_score = f64::INFINITY;
    let mut dists = Vec::with_capacity(n - 1);
    for (j, a) in estimates.iter().enumerate() {
        dists.clear();
        dists.extend(
            estimates
                .iter()
                .enumerate()
                .filter(|(jj, _)| *jj != j)
                .map(|(_, b)| v.weighted_norm(*a - *b)),
        );
        dists.sort_by(|x, y| x.total_cmp(y));
        let med = dists[(dists.len() - 1) / 2];
        if med < best_score {
            best_score = med;
            best = j;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn init_matches_published_start() {
        let s = BanditState::new(1.0, 3, 1.0).unwrap();
        assert_eq!(s.design().rows(), SymMat3::scaled_identity(1.0).rows());
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let want = [(h, 0.0, h), (-h, 0.0, h), (0.0, h, h), (0.0, -h, h)];
        for (a, w) in s.actions().iter().zip(want) {
            let b = a.bloch();
            assert!(close(b.x, w.0, 1e-15) && close(b.y, w.1, 1e-15) && close(b.z, w.2, 1e-15));
            assert!(close(b.norm(), 1.0, 1e-12));
        }
        let s = BanditState::new(2.0, 1, 5.0).unwrap();
        assert_eq!(s.design().rows(), SymMat3::scaled_identity(2.0).rows());
        assert_eq!(s.sigma2(), 1.0);
        assert!(BanditState::new(0.0, 1, 1.0).is_err());
        assert!(BanditState::new(1.0, 0, 1.0).is_err());
        assert!(BanditState::new(1.0, 1, -1.0).is_err());
    }

    #[test]
    fn round_index_bijection() {
        let t = 5;
        for k in 1..=200 {
            let idx = RoundIndex::from_round(k, t).unwrap();
            assert_eq!(idx.k, 4 * t * (idx.stage - 1) + 4 * (idx.slot - 1) + idx.group);
            assert_eq!(RoundIndex::from_parts(idx.stage, idx.group, idx.slot, t).unwrap(), idx);
        }
        assert!(RoundIndex::from_round(0, t).is_err());
        assert!(RoundIndex::from_parts(1, 5, 1, t).is_err());
    }

    #[test]
    fn record_reward_weights() {
        let mut s = BanditState::new(1.0, 2, 1.0).unwrap();
        let idx = RoundIndex::from_parts(1, 1, 1, 2).unwrap();
        s.record_reward(idx, true).unwrap();
        let a = s.actions()[0].bloch();
        assert_eq!(s.weighted_sums()[0], a);
        let idx = RoundIndex::from_parts(1, 1, 2, 2).unwrap();
        s.record_reward(idx, false).unwrap();
        assert_eq!(s.weighted_sums()[1], -a);
        // replay and wrong stage are logic errors
        assert!(matches!(s.record_reward(idx, true), Err(Error::Logic(_))));
        let later = RoundIndex::from_parts(2, 1, 1, 2).unwrap();
        assert!(matches!(s.record_reward(later, true), Err(Error::Logic(_))));
    }

    #[test]
    fn reward_scaled_by_variance_proxy() {
        let mut s = BanditState::new(1.0, 1, 1.0).unwrap();
        s.sigma2 = 4.0;
        s.actions[0] = PureQubit::new(BlochVector::Z).unwrap();
        s.record_reward(RoundIndex::from_parts(1, 1, 1, 1).unwrap(), true).unwrap();
        assert_eq!(s.weighted_sums()[0], BlochVector::new(0.0, 0.0, 0.25));
    }

    #[test]
    fn close_before_complete_is_logic_error() {
        let mut s = BanditState::new(1.0, 1, 1.0).unwrap();
        assert!(matches!(s.close_stage(), Err(Error::Logic(_))));
    }

    #[test]
    fn first_stage_design_and_next_actions() {
        // All-ones rewards with t = 1 give S = Σ a_i = (0, 0, 4/√2); θ̃ ∝ +z.
        let mut s = BanditState::new(1.0, 1, 1.0).unwrap();
        for g in 1..=4 {
            s.record_reward(RoundIndex::from_parts(1, g, 1, 1).unwrap(), true).unwrap();
        }
        let up = s.close_stage().unwrap();
        let want = SymMat3::from_diagonal([2.0, 2.0, 3.0]);
        for i in 0..3 {
            for j in 0..3 {
                assert!(close(s.design().get(i, j), want.get(i, j), 1e-14));
            }
        }
        assert!(close(up.theta.z, 1.0, 1e-14));
        let a1 = up.actions[0].bloch();
        assert!(close(a1.x, 0.577_350_269_189_625_7, 1e-12));
        assert!(close(a1.y, 0.0, 1e-14));
        assert!(close(a1.z, 0.816_496_580_927_726, 1e-12));
        let a2 = up.actions[1].bloch();
        assert!(close(a2.x, -0.577_350_269_189_625_7, 1e-12));
        let a3 = up.actions[2].bloch();
        assert!(close(a3.y, 0.577_350_269_189_625_7, 1e-12));
        assert!(close(s.sigma2(), 2.0 / 3f64.sqrt(), 1e-14));
        assert_eq!(s.stage(), 2);
    }

    #[test]
    fn median_of_means_identical_estimates() {
        let th = BlochVector::new(0.2, -0.1, 0.7);
        let v = SymMat3::scaled_identity(3.0);
        assert_eq!(weighted_median_of_means(&[th; 5], &v), 0);
        assert_eq!(weighted_median_of_means(&[th], &v), 0);
    }

    #[test]
    fn median_of_means_rejects_outlier() {
        let v = SymMat3::scaled_identity(1.0);
        let good = BlochVector::new(0.0, 0.0, 1.0);
        let est = [
            BlochVector::new(5.0, 5.0, 5.0),
            good + BlochVector::new(0.01, 0.0, 0.0),
            good,
            good - BlochVector::new(0.0, 0.01, 0.0),
        ];
        assert_eq!(weighted_median_of_means(&est, &v), 2);
    }

    #[test]
    fn zero_estimate_falls_back() {
        // Rewards cancel: S = 0 so the estimate has zero norm.
        let mut s = BanditState::new(1.0, 1, 1.0).unwrap();
        s.record_reward(RoundIndex::from_parts(1, 1, 1, 1).unwrap(), true).unwrap();
        s.record_reward(RoundIndex::from_parts(1, 2, 1, 1).unwrap(), true).unwrap();
        s.record_reward(RoundIndex::from_parts(1, 3, 1, 1).unwrap(), false).unwrap();
        s.record_reward(RoundIndex::from_parts(1, 4, 1, 1).unwrap(), false).unwrap();
        let up = s.close_stage().unwrap();
        assert_eq!(up.theta, BlochVector::Z);
    }

    #[test]
    fn stage_plan_fits_horizon() {
        let p = StagePlan::for_horizon(4096, 0.05).unwrap();
        assert!(p.full_rounds() <= 4096);
        assert_eq!(p.full_rounds() + p.leftover, 4096);
        assert_eq!(p.t, (24.0 * (p.stages as f64 / 0.05).ln()).ceil() as usize);
        let t_next = (24.0 * ((p.stages + 1) as f64 / 0.05).ln()).ceil() as usize;
        assert!(4 * t_next * (p.stages + 1) > 4096);
        let tiny = StagePlan::for_horizon(10, 0.05).unwrap();
        assert_eq!(tiny.stages, 0);
        assert_eq!(tiny.leftover, 10);
        assert!(StagePlan::for_horizon(100, 1.5).is_err());
    }

    #[test]
    fn proof_zeta_value() {
        assert!(close(proof_zeta(), 334_812.0 * 2f64.sqrt() + 1296.0 * 6f64.sqrt(), 1e-9));
        assert!(proof_zeta() > 4.7e5 && proof_zeta() < 4.8e5);
    }
}
