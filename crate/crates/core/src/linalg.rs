//! Fixed-size symmetric 3×3 algebra for the bandit design matrix.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::geometry::BlochVector;

// Relative width inside which two eigenvalues count as degenerate.
const DEGENERACY_TOL: f64 = 1e-10;
// Components smaller than this are treated as zero when fixing signs and ordering.
const COMPONENT_TOL: f64 = 1e-12;

/// A symmetric 3×3 matrix stored densely.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMat3 {
    m: [[f64; 3]; 3],
}

/// Eigenpairs sorted by ascending eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymEigen {
    pub values: [f64; 3],
    pub vectors: [BlochVector; 3],
}

impl SymMat3 {
    pub fn zeros() -> Self {
        Self { m: [[0.0; 3]; 3] }
    }

    pub fn scaled_identity(s: f64) -> Self {
        Self::from_diagonal([s, s, s])
    }

    pub fn from_diagonal(d: [f64; 3]) -> Self {
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            m[i][i] = d[i];
        }
        Self { m }
    }

    /// Builds from a full array; the lower triangle is mirrored from the upper.
    pub fn from_rows(rows: [[f64; 3]; 3]) -> Self {
        let mut m = rows;
        for i in 0..3 {
            for j in 0..i {
                m[i][j] = rows[j][i];
            }
        }
        Self { m }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i][j]
    }

    pub fn rows(&self) -> [[f64; 3]; 3] {
        self.m
    }

    /// `self += w · a aᵀ`.
    pub fn add_outer(&mut self, a: BlochVector, w: f64) {
        let v = a.to_array();
        for i in 0..3 {
            for j in 0..3 {
                self.m[i][j] += w * v[i] * v[j];
            }
        }
    }

    pub fn mul_vec(&self, x: BlochVector) -> BlochVector {
        let v = x.to_array();
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..3).map(|j| self.m[i][j] * v[j]).sum();
        }
        BlochVector::from_array(out)
    }

    /// `xᵀ V x`.
    pub fn quad_form(&self, x: BlochVector) -> f64 {
        x.dot(self.mul_vec(x))
    }

    /// `‖x‖_V = sqrt(xᵀ V x)`.
    pub fn weighted_norm(&self, x: BlochVector) -> f64 {
        self.quad_form(x).max(0.0).sqrt()
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Closed-form inverse through the adjugate.
    pub fn inverse(&self) -> Result<SymMat3> {
        let m = &self.m;
        let det = self.determinant();
        if !det.is_finite() || det.abs() <= f64::MIN_POSITIVE {
            return Err(Error::Internal(format!("singular design matrix (det = {det})")));
        }
        let c = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
        let adj = [
            [c(1, 2, 1, 2), -c(0, 2, 1, 2), c(0, 1, 1, 2)],
            [-c(1, 2, 0, 2), c(0, 2, 0, 2), -c(0, 1, 0, 2)],
            [c(1, 2, 0, 1), -c(0, 2, 0, 1), c(0, 1, 0, 1)],
        ];
        let mut inv = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                inv[i][j] = adj[i][j] / det;
            }
        }
        Ok(SymMat3::from_rows(inv))
    }

    pub fn max_asymmetry(&self) -> f64 {
        let m = &self.m;
        (m[0][1] - m[1][0])
            .abs()
            .max((m[0][2] - m[2][0]).abs())
            .max((m[1][2] - m[2][1]).abs())
    }

    /// Cyclic Jacobi eigendecomposition.
    ///
    /// Eigenpairs come back in ascending eigenvalue order. Each eigenvector is
    /// signed so that its first nonzero component is positive; degenerate
    /// eigenvalues are ordered by descending lexicographic comparison of their
    /// eigenvectors, so `diag(2, 2, 3)` yields `e_x` before `e_y`.
    pub fn eigen(&self) -> SymEigen {
        let mut a = self.m;
        let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let scale: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
        for _sweep in 0..64 {
            let off = a[0][1].abs() + a[0][2].abs() + a[1][2].abs();
            if off <= f64::EPSILON * 1e-3 * scale || off == 0.0 {
                break;
            }
            for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // A <- Jᵀ A J with J the (p,q) rotation.
                for k in 0..3 {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..3 {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }

        let mut pairs: Vec<(f64, [f64; 3])> = (0..3)
            .map(|j| (a[j][j], canonical_sign([v[0][j], v[1][j], v[2][j]])))
            .collect();
        let tol = DEGENERACY_TOL * pairs.iter().map(|p| p.0.abs()).fold(1.0, f64::max);
        pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(Ordering::Equal));
        // Re-order runs of degenerate eigenvalues; three elements, so bubble passes suffice.
        for _ in 0..2 {
            for i in 0..2 {
                let (l, r) = (pairs[i], pairs[i + 1]);
                if (r.0 - l.0).abs() <= tol && lex_cmp(&l.1, &r.1) == Ordering::Less {
                    pairs.swap(i, i + 1);
                }
            }
        }
        // Swapped degenerate pairs may differ in the last ulp; report the values sorted.
        let mut values = [pairs[0].0, pairs[1].0, pairs[2].0];
        values.sort_by(f64::total_cmp);
        SymEigen {
            values,
            vectors: [
                BlochVector::from_array(pairs[0].1),
                BlochVector::from_array(pairs[1].1),
                BlochVector::from_array(pairs[2].1),
            ],
        }
    }
}

fn canonical_sign(mut x: [f64; 3]) -> [f64; 3] {
    let n = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    if n > 0.0 {
        for c in x.iter_mut() {
            *c /= n;
        }
    }
    if let Some(&first) = x.iter().find(|c| c.abs() > COMPONENT_TOL) {
        if first < 0.0 {
            for c in x.iter_mut() {
                *c = -*c;
            }
        }
    }
    x
}

fn lex_cmp(a: &[f64; 3], b: &[f64; 3]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        if (x - y).abs() > COMPONENT_TOL {
            return x.partial_cmp(y).unwrap_or(Ordering::Equal);
        }
    }
    Ordering::Equal
}
