//! Independent reference computations on explicit 2×2 complex matrices.
//!
//! Nothing here goes through Bloch-vector algebra. States are built as kets,
//! operators as matrices, and matrix functions through a closed-form
//! Hermitian eigendecomposition.

#![allow(dead_code)]

use num_complex::Complex64 as C;
use qwork::geometry::BlochVector;

pub type Ket = [C; 2];
pub type Mat = [[C; 2]; 2];

const ZERO: C = C::new(0.0, 0.0);

/// `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩` for the Bloch direction `u`.
pub fn ket(u: BlochVector) -> Ket {
    let theta = u.z.clamp(-1.0, 1.0).acos();
    let phi = u.y.atan2(u.x);
    [C::new((theta / 2.0).cos(), 0.0), C::from_polar((theta / 2.0).sin(), phi)]
}

/// The ket orthogonal to `k`.
pub fn perp(k: Ket) -> Ket {
    [-k[1].conj(), k[0].conj()]
}

pub fn inner(a: Ket, b: Ket) -> C {
    a[0].conj() * b[0] + a[1].conj() * b[1]
}

pub fn projector(k: Ket) -> Mat {
    let mut m = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = k[i] * k[j].conj();
        }
    }
    m
}

pub fn add(a: Mat, b: Mat) -> Mat {
    [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]]
}

pub fn scale(a: Mat, s: f64) -> Mat {
    [[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]]
}

pub fn identity() -> Mat {
    [[C::new(1.0, 0.0), ZERO], [ZERO, C::new(1.0, 0.0)]]
}

pub fn mul(a: Mat, b: Mat) -> Mat {
    let mut m = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    m
}

pub fn trace(a: Mat) -> C {
    a[0][0] + a[1][1]
}

/// Eigenvalues and orthonormal eigenvectors of a Hermitian 2×2 matrix.
pub fn herm_eigen(m: Mat) -> ([f64; 2], [Ket; 2]) {
    let a = m[0][0].re;
    let d = m[1][1].re;
    let c = m[0][1];
    let mid = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + c.norm_sqr()).sqrt();
    let lams = [mid - rad, mid + rad];
    if c.norm() < 1e-300 {
        let e0 = [C::new(1.0, 0.0), ZERO];
        let e1 = [ZERO, C::new(1.0, 0.0)];
        return if a <= d { ([a, d], [e0, e1]) } else { ([d, a], [e1, e0]) };
    }
    let vec = |lam: f64| {
        // Null vector of A − λ from whichever row is better conditioned.
        let r0 = [c, C::new(lam - a, 0.0)];
        let r1 = [C::new(lam - d, 0.0), c.conj()];
        let norm2 = |v: &[C; 2]| v[0].norm_sqr() + v[1].norm_sqr();
        let v = if norm2(&r0) >= norm2(&r1) { r0 } else { r1 };
        let n = norm2(&v).sqrt();
        [v[0] / n, v[1] / n]
    };
    (lams, [vec(lams[0]), vec(lams[1])])
}

/// `f(A) = Σ f(λ)|v⟩⟨v|` for Hermitian `A`.
pub fn herm_fn(m: Mat, f: impl Fn(f64) -> f64) -> Mat {
    let (l, v) = herm_eigen(m);
    add(scale(projector(v[0]), f(l[0])), scale(projector(v[1]), f(l[1])))
}

/// `exp(−iHt)` for Hermitian `H`.
pub fn evolve(h: Mat, t: f64) -> Mat {
    let (l, v) = herm_eigen(h);
    let mut u = [[ZERO; 2]; 2];
    for (lam, k) in l.iter().zip(v) {
        let p = projector(k);
        let phase = C::from_polar(1.0, -lam * t);
        for i in 0..2 {
            for j in 0..2 {
                u[i][j] += phase * p[i][j];
            }
        }
    }
    u
}

fn xlnx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// `Tr ρ ln ρ − Tr ρ ln σ` for `ρ = |ψ⟩⟨ψ|`, `σ = (1−2ε)|ψ_k⟩⟨ψ_k| + ε I`.
pub fn rel_entropy(psi: BlochVector, psi_k: BlochVector, eps: f64) -> f64 {
    let rho = projector(ket(psi));
    let sigma = add(scale(projector(ket(psi_k)), 1.0 - 2.0 * eps), scale(identity(), eps));
    let neg_entropy: f64 = herm_eigen(rho).0.iter().map(|&x| xlnx(x)).sum();
    let cross = trace(mul(rho, herm_fn(sigma, f64::ln))).re;
    neg_entropy - cross
}

/// `|⟨ψ|φ⟩|²` from kets.
pub fn overlap(psi: BlochVector, phi: BlochVector) -> f64 {
    inner(ket(psi), ket(phi)).norm_sqr()
}

/// Battery distribution `(n+1, n, n−1)` after resonant coupling for the
/// time that takes `|e,n⟩` fully to `|g,n+1⟩`. The excited level is `ψ_k`.
pub fn jc_probs(psi: BlochVector, psi_k: BlochVector, n: u64) -> [f64; 3] {
    let k = ket(psi_k);
    let s = ket(psi);
    let a = inner(k, s);
    let b = inner(perp(k), s);
    let g = 1.0;
    let t = std::f64::consts::PI / (2.0 * g * ((n + 1) as f64).sqrt());
    // Block m couples |e,m−1⟩ and |g,m⟩ with strength g√m.
    let block = |m: u64| {
        let c = C::new(g * (m as f64).sqrt(), 0.0);
        evolve([[ZERO, c], [c, ZERO]], t)
    };
    // |e,n⟩ lives in block n+1 as its first component.
    let u_up = block(n + 1);
    let e_stays = u_up[0][0] * a;
    let e_to_g = u_up[1][0] * a;
    // |g,n⟩ lives in block n as its second component (if n ≥ 1).
    let (g_stays, g_to_e) = if n == 0 {
        (b, ZERO)
    } else {
        let u = block(n);
        (u[1][1] * b, u[0][1] * b)
    };
    [e_to_g.norm_sqr(), e_stays.norm_sqr() + g_stays.norm_sqr(), g_to_e.norm_sqr()]
}
