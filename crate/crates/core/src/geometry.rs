//! Closed-form single-qubit quantities in the Bloch representation.
//!
//! A qubit density matrix is `ρ = (I + r·σ)/2` with `‖r‖ ≤ 1`; pure states sit
//! on the unit sphere. Everything here is a pure function on `Copy` values.

use std::f64::consts::LN_2;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest accuracy parameter ever fed to a logarithm.
pub const EPS_MIN: f64 = 1e-12;

/// Tolerance on the unit norm of pure-state Bloch vectors.
pub const UNIT_TOL: f64 = 1e-9;

/// A real 3-vector of Bloch coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const ZERO: BlochVector = BlochVector::new(0.0, 0.0, 0.0);
    pub const X: BlochVector = BlochVector::new(1.0, 0.0, 0.0);
    pub const Y: BlochVector = BlochVector::new(0.0, 1.0, 0.0);
    pub const Z: BlochVector = BlochVector::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, other: BlochVector) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Unit vector along `self`, or `None` for a zero (or non-finite) vector.
    pub fn normalized(self) -> Option<BlochVector> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(self * (1.0 / n))
        } else {
            None
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for BlochVector {
    type Output = BlochVector;
    fn add(self, o: BlochVector) -> BlochVector {
        BlochVector::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for BlochVector {
    type Output = BlochVector;
    fn sub(self, o: BlochVector) -> BlochVector {
        BlochVector::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for BlochVector {
    type Output = BlochVector;
    fn mul(self, s: f64) -> BlochVector {
        BlochVector::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for BlochVector {
    type Output = BlochVector;
    fn neg(self) -> BlochVector {
        BlochVector::new(-self.x, -self.y, -self.z)
    }
}

/// A pure qubit state, stored as its unit Bloch vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BlochVector", into = "BlochVector")]
pub struct PureQubit(BlochVector);

impl PureQubit {
    /// Accepts vectors within [`UNIT_TOL`] of the unit sphere and renormalizes them.
    pub fn new(u: BlochVector) -> Result<Self> {
        let n = u.norm();
        if !u.is_finite() || (n - 1.0).abs() > UNIT_TOL {
            return Err(Error::domain(format!(
                "pure state needs a unit Bloch vector, got norm {n}"
            )));
        }
        Ok(PureQubit(u * (1.0 / n)))
    }

    /// Projects any nonzero direction onto the sphere.
    pub fn from_direction(v: BlochVector) -> Result<Self> {
        v.normalized()
            .map(PureQubit)
            .ok_or_else(|| Error::domain("cannot normalize a zero Bloch vector"))
    }

    pub fn bloch(self) -> BlochVector {
        self.0
    }

    /// The orthogonal state `ψ^⊥`, i.e. the antipodal Bloch vector.
    pub fn orthogonal(self) -> PureQubit {
        PureQubit(-self.0)
    }
}

impl TryFrom<BlochVector> for PureQubit {
    type Error = Error;
    fn try_from(v: BlochVector) -> Result<Self> {
        PureQubit::new(v)
    }
}

impl From<PureQubit> for BlochVector {
    fn from(p: PureQubit) -> BlochVector {
        p.0
    }
}

/// A (possibly mixed) qubit with Bloch vector of norm at most one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedQubit(BlochVector);

impl MixedQubit {
    pub fn new(r: BlochVector) -> Result<Self> {
        let n = r.norm();
        if !r.is_finite() || n > 1.0 + UNIT_TOL {
            return Err(Error::domain(format!(
                "Bloch vector norm {n} exceeds one"
            )));
        }
        Ok(MixedQubit(r))
    }

    pub fn bloch(self) -> BlochVector {
        self.0
    }

    /// Eigenvalues `(1 ± ‖r‖)/2`, larger first.
    pub fn eigenvalues(self) -> (f64, f64) {
        let n = self.0.norm().min(1.0);
        ((1.0 + n) / 2.0, (1.0 - n) / 2.0)
    }
}

impl From<PureQubit> for MixedQubit {
    fn from(p: PureQubit) -> MixedQubit {
        MixedQubit(p.0)
    }
}

/// `|⟨φ|ψ⟩|² = (1 + u·a)/2`.
pub fn fidelity(psi: PureQubit, phi: PureQubit) -> f64 {
    ((1.0 + psi.0.dot(phi.0)) / 2.0).clamp(0.0, 1.0)
}

/// `1 − |⟨φ|ψ⟩|²`, computed directly to keep precision near zero.
pub fn infidelity(psi: PureQubit, phi: PureQubit) -> f64 {
    ((1.0 - psi.0.dot(phi.0)) / 2.0).clamp(0.0, 1.0)
}

/// Depolarizing channel `Δ_ε(ρ) = (1−ε)ρ + ε·I/2`; contracts the Bloch vector by `1−ε`.
pub fn depolarize(rho: MixedQubit, eps: f64) -> Result<MixedQubit> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::domain(format!("depolarizing strength {eps} not in [0,1]")));
    }
    Ok(MixedQubit(rho.0 * (1.0 - eps)))
}

/// `D(ψ ‖ Δ_{2ε}(ψ_k))` in nats for pure `ψ`, `ψ_k`.
///
/// The target has eigenvalues `1−ε` on `ψ_k` and `ε` on `ψ_k^⊥`, so the
/// divergence is `−[p·ln(1−ε) + (1−p)·ln ε]` with `p` the fidelity. Returns
/// `+∞` when a state with nonzero weight meets a zero eigenvalue.
pub fn rel_entropy_pure_vs_target(psi: PureQubit, psi_k: PureQubit, eps: f64) -> f64 {
    if eps.is_nan() || !(0.0..=1.0).contains(&eps) {
        return f64::NAN;
    }
    if eps == 0.5 {
        return LN_2;
    }
    let p = fidelity(psi, psi_k);
    let q = infidelity(psi, psi_k);
    xlny_neg(p, 1.0 - eps, (-eps).ln_1p()) + xlny_neg(q, eps, eps.ln())
}

// −w·ln(y) with 0·ln(·) = 0 and w·ln 0 = −∞.
fn xlny_neg(w: f64, y: f64, ln_y: f64) -> f64 {
    if w == 0.0 {
        0.0
    } else if y == 0.0 {
        f64::INFINITY
    } else {
        -w * ln_y
    }
}

/// Upper bound `16ε(2 − ln ε)` on `D(ψ‖Δ_{2ε}(ψ_k))` when the infidelity is at most `ε ≤ ½`.
pub fn rel_entropy_bound(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::domain(format!("bound needs 0 < ε ≤ 1/2, got {eps}")));
    }
    Ok(16.0 * eps * (2.0 - eps.ln()))
}

/// Binary entropy `h(p)` in nats with `0·ln 0 = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.ln() };
    term(p) + term(1.0 - p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn pq(x: f64, y: f64, z: f64) -> PureQubit {
        PureQubit::from_direction(BlochVector::new(x, y, z)).unwrap()
    }

    #[test]
    fn fidelity_examples() {
        assert_eq!(fidelity(pq(0., 0., 1.), pq(0., 0., 1.)), 1.0);
        assert_eq!(fidelity(pq(0., 0., 1.), pq(0., 0., -1.)), 0.0);
        assert!(close(fidelity(pq(1., 0., 0.), pq(0., 0., 1.)), 0.5, 1e-15));
    }

    #[test]
    fn pure_qubit_rejects_off_sphere() {
        assert!(PureQubit::new(BlochVector::new(0.0, 0.0, 1.1)).is_err());
        assert!(PureQubit::new(BlochVector::new(f64::NAN, 0.0, 1.0)).is_err());
        let p = PureQubit::new(BlochVector::new(0.0, 0.0, 1.0 + 5e-10)).unwrap();
        assert_eq!(p.bloch().norm(), 1.0);
        assert!(PureQubit::from_direction(BlochVector::ZERO).is_err());
    }

    #[test]
    fn mixed_qubit_bounds() {
        assert!(MixedQubit::new(BlochVector::new(0.0, 0.6, 0.8)).is_ok());
        assert!(MixedQubit::new(BlochVector::new(0.0, 0.0, 1.01)).is_err());
        let (a, b) = MixedQubit::new(BlochVector::new(0.0, 0.0, 0.5)).unwrap().eigenvalues();
        assert!(close(a, 0.75, 1e-15) && close(b, 0.25, 1e-15));
    }

    #[test]
    fn depolarize_examples() {
        let r = MixedQubit::from(pq(0., 0., 1.));
        assert_eq!(depolarize(r, 1.0).unwrap().bloch(), BlochVector::ZERO);
        assert_eq!(depolarize(r, 0.0).unwrap().bloch(), BlochVector::Z);
        assert_eq!(depolarize(r, 0.5).unwrap().bloch(), BlochVector::new(0.0, 0.0, 0.5));
        assert!(depolarize(r, 1.5).is_err());
        assert!(depolarize(r, -0.1).is_err());
    }

    #[test]
    fn rel_entropy_examples() {
        let a = pq(0.3, -0.2, 0.9);
        let b = pq(-1.0, 0.4, 0.1);
        assert_eq!(rel_entropy_pure_vs_target(a, b, 0.5), LN_2);
        assert!(close(rel_entropy_pure_vs_target(a, a, 0.25), -(0.75f64).ln(), 1e-12));
        // fidelity exactly 1/2: x-axis vs z-axis
        let d = rel_entropy_pure_vs_target(pq(1., 0., 0.), pq(0., 0., 1.), 0.1);
        assert!(close(d, -(0.5 * 0.9f64.ln() + 0.5 * 0.1f64.ln()), 1e-12));
        assert!(close(d, 1.203_972_804_325_936, 1e-9));
    }

    #[test]
    fn rel_entropy_degenerate_eps() {
        let z = pq(0., 0., 1.);
        let x = pq(1., 0., 0.);
        assert_eq!(rel_entropy_pure_vs_target(z, x, 0.0), f64::INFINITY);
        assert_eq!(rel_entropy_pure_vs_target(z, x, 1.0), f64::INFINITY);
        assert_eq!(rel_entropy_pure_vs_target(z, z, 0.0), 0.0);
        assert!(rel_entropy_pure_vs_target(z, z, 2.0).is_nan());
    }

    #[test]
    fn rel_entropy_vanishes_monotonically_for_matched_states() {
        let a = pq(0.1, 0.7, -0.2);
        let mut prev = f64::INFINITY;
        for e in [0.4, 0.1, 1e-2, 1e-4, 1e-8, EPS_MIN] {
            let d = rel_entropy_pure_vs_target(a, a, e);
            assert!(d < prev && d >= 0.0);
            prev = d;
        }
        assert!(prev < 1e-11);
    }

    #[test]
    fn bound_examples() {
        let b = rel_entropy_bound(0.5).unwrap();
        assert!(close(b, 8.0 * (2.0 + LN_2), 1e-12));
        assert!(close(b, 21.545_177_444_479_56, 1e-9));
        let e2 = (-2.0f64).exp();
        assert!(close(rel_entropy_bound(e2).unwrap(), 64.0 * e2, 1e-12));
        assert!(close(rel_entropy_bound(e2).unwrap(), 8.661_458_127_143_213, 1e-9));
        assert!(rel_entropy_bound(1e-12).unwrap() < 1e-9);
        assert!(rel_entropy_bound(0.0).is_err());
        assert!(rel_entropy_bound(0.6).is_err());
    }

    #[test]
    fn binary_entropy_values() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert!(close(binary_entropy(0.5), LN_2, 1e-15));
        assert!(close(binary_entropy(0.1), 0.325_082_973_391_448, 1e-12));
    }
}
