//! Small fixed-size linear algebra: 3-vectors and symmetric 3x3 matrices
//! with a deterministic eigensolver.
//!
//! The eigensolver is a cyclic Jacobi iteration; output ordering and
//! eigenvector signs are fixed so that repeated runs (and different
//! platforms with IEEE f64) produce identical results.

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

#[inline]
pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn scale(a: &Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn normalize(a: &Vec3) -> Vec3 {
    let n = norm(a);
    scale(a, 1.0 / n)
}

/// Fix the overall sign of a vector: first component with |x| > 1e-12
/// is made positive. Keeps eigenvector output deterministic.
pub fn canonical_sign(v: &mut Vec3) {
    for x in v.iter() {
        if x.abs() > 1e-12 {
            if *x < 0.0 {
                v[0] = -v[0];
                v[1] = -v[1];
                v[2] = -v[2];
            }
            return;
        }
    }
}

/// Symmetric 3x3 matrix stored as six independent components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMatrix3 {
    pub xx: f64,
    pub yy: f64,
    pub zz: f64,
    pub xy: f64,
    pub xz: f64,
    pub yz: f64,
}

/// Eigendecomposition of a [`SymMatrix3`]: ascending eigenvalues and the
/// matching orthonormal eigenvectors.
#[derive(Debug, Clone, Copy)]
pub struct EigenDecomposition {
    pub eigenvalues: [f64; 3],
    pub eigenvectors: [Vec3; 3],
}

impl SymMatrix3 {
    pub fn zero() -> Self {
        SymMatrix3 {
            xx: 0.0,
            yy: 0.0,
            zz: 0.0,
            xy: 0.0,
            xz: 0.0,
            yz: 0.0,
        }
    }

    pub fn identity() -> Self {
        SymMatrix3 {
            xx: 1.0,
            yy: 1.0,
            zz: 1.0,
            xy: 0.0,
            xz: 0.0,
            yz: 0.0,
        }
    }

    pub fn diagonal(d: [f64; 3]) -> Self {
        SymMatrix3 {
            xx: d[0],
            yy: d[1],
            zz: d[2],
            xy: 0.0,
            xz: 0.0,
            yz: 0.0,
        }
    }

    pub fn from_dense(m: &[[f64; 3]; 3]) -> Self {
        SymMatrix3 {
            xx: m[0][0],
            yy: m[1][1],
            zz: m[2][2],
            xy: 0.5 * (m[0][1] + m[1][0]),
            xz: 0.5 * (m[0][2] + m[2][0]),
            yz: 0.5 * (m[1][2] + m[2][1]),
        }
    }

    pub fn to_dense(&self) -> [[f64; 3]; 3] {
        [
            [self.xx, self.xy, self.xz],
            [self.xy, self.yy, self.yz],
            [self.xz, self.yz, self.zz],
        ]
    }

    /// Rank-one update `self + w * v v^T`.
    pub fn add_outer(&mut self, v: &Vec3, w: f64) {
        self.xx += w * v[0] * v[0];
        self.yy += w * v[1] * v[1];
        self.zz += w * v[2] * v[2];
        self.xy += w * v[0] * v[1];
        self.xz += w * v[0] * v[2];
        self.yz += w * v[1] * v[2];
    }

    /// `sum_k w_k v_k v_k^T` over a principal frame.
    pub fn from_principal(directions: &[Vec3; 3], weights: &[f64; 3]) -> Self {
        let mut m = SymMatrix3::zero();
        for k in 0..3 {
            m.add_outer(&directions[k], weights[k]);
        }
        m
    }

    pub fn mul_vec(&self, v: &Vec3) -> Vec3 {
        [
            self.xx * v[0] + self.xy * v[1] + self.xz * v[2],
            self.xy * v[0] + self.yy * v[1] + self.yz * v[2],
            self.xz * v[0] + self.yz * v[1] + self.zz * v[2],
        ]
    }

    pub fn quadratic_form(&self, v: &Vec3) -> f64 {
        dot(v, &self.mul_vec(v))
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy + self.zz
    }

    pub fn frobenius_norm(&self) -> f64 {
        (self.xx * self.xx
            + self.yy * self.yy
            + self.zz * self.zz
            + 2.0 * (self.xy * self.xy + self.xz * self.xz + self.yz * self.yz))
            .sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        SymMatrix3 {
            xx: self.xx * s,
            yy: self.yy * s,
            zz: self.zz * s,
            xy: self.xy * s,
            xz: self.xz * s,
            yz: self.yz * s,
        }
    }

    /// Eigendecomposition with ascending eigenvalues.
    ///
    /// Cyclic Jacobi sweeps until all off-diagonal entries vanish relative
    /// to the matrix scale; converges in a handful of sweeps for 3x3.
    pub fn eigh(&self) -> EigenDecomposition {
        let mut a = self.to_dense();
        // accumulated rotations, columns are eigenvectors
        let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let scale_ref = self.frobenius_norm().max(f64::MIN_POSITIVE);

        for _sweep in 0..50 {
            let off = (a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2]).sqrt();
            if off <= 1e-16 * scale_ref {
                break;
            }
            for &(p, q) in &[(0usize, 1usize), (0, 2), (1, 2)] {
                let apq = a[p][q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                // stable tangent of the rotation angle
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

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
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                for k in 0..3 {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }

        let mut pairs: [(f64, Vec3); 3] = [
            (a[0][0], [v[0][0], v[1][0], v[2][0]]),
            (a[1][1], [v[0][1], v[1][1], v[2][1]]),
            (a[2][2], [v[0][2], v[1][2], v[2][2]]),
        ];
        pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        let mut eigenvalues = [0.0; 3];
        let mut eigenvectors = [[0.0; 3]; 3];
        for (k, (lam, mut vec)) in pairs.into_iter().enumerate() {
            canonical_sign(&mut vec);
            eigenvalues[k] = lam;
            eigenvectors[k] = vec;
        }
        EigenDecomposition {
            eigenvalues,
            eigenvectors,
        }
    }
}

/// Eigendecomposition of a correlation matrix with eigenvalues in
/// descending order, rejecting negative eigenvalues beyond round-off.
///
/// Returns `(eigenvalues descending, eigenvectors)`, eigenvalues clamped
/// to zero inside the tolerated round-off band.
pub fn principal_decomposition(c: &SymMatrix3) -> Result<([f64; 3], [Vec3; 3])> {
    let eig = c.eigh();
    let tol = 1e-12 * c.frobenius_norm().max(1.0);
    if eig.eigenvalues[0] < -tol {
        return Err(Error::InvalidCorrelation(format!(
            "eigenvalue {:.6e} below round-off tolerance -{:.1e}",
            eig.eigenvalues[0], tol
        )));
    }
    let vals = [
        eig.eigenvalues[2].max(0.0),
        eig.eigenvalues[1].max(0.0),
        eig.eigenvalues[0].max(0.0),
    ];
    let vecs = [
        eig.eigenvectors[2],
        eig.eigenvectors[1],
        eig.eigenvectors[0],
    ];
    Ok((vals, vecs))
}

/// Rotation matrix about `axis` by `angle` (radians), applied to a vector.
pub fn rotate_about_axis(v: &Vec3, axis: &Vec3, angle: f64) -> Vec3 {
    let k = normalize(axis);
    let (s, c) = angle.sin_cos();
    let kxv = cross(&k, v);
    let kdv = dot(&k, v);
    [
        v[0] * c + kxv[0] * s + k[0] * kdv * (1.0 - c),
        v[1] * c + kxv[1] * s + k[1] * kdv * (1.0 - c),
        v[2] * c + kxv[2] * s + k[2] * kdv * (1.0 - c),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn reconstruct(eig: &EigenDecomposition) -> SymMatrix3 {
        SymMatrix3::from_principal(&eig.eigenvectors, &eig.eigenvalues)
    }

    #[test]
    fn identity_decomposition() {
        let eig = SymMatrix3::identity().eigh();
        for k in 0..3 {
            assert_relative_eq!(eig.eigenvalues[k], 1.0, max_relative = 1e-14);
        }
        for i in 0..3 {
            for j in (i + 1)..3 {
                assert!(dot(&eig.eigenvectors[i], &eig.eigenvectors[j]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn diagonal_matrix_ordering() {
        let (vals, vecs) = principal_decomposition(&SymMatrix3::diagonal([4.0, 1.0, 9.0])).unwrap();
        assert_eq!(vals, [9.0, 4.0, 1.0]);
        assert_relative_eq!(vecs[0][2].abs(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(vecs[1][0].abs(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(vecs[2][1].abs(), 1.0, max_relative = 1e-14);
        // sign convention: first nonzero component positive
        assert!(vecs[0][2] > 0.0 && vecs[1][0] > 0.0 && vecs[2][1] > 0.0);
    }

    #[test]
    fn rotated_spectrum_recovered() {
        // R diag(9,4,1) R^T for a fixed axis-angle rotation
        let axis = [1.0, 2.0, 3.0];
        let angle = 0.7;
        let basis = [
            rotate_about_axis(&[1.0, 0.0, 0.0], &axis, angle),
            rotate_about_axis(&[0.0, 1.0, 0.0], &axis, angle),
            rotate_about_axis(&[0.0, 0.0, 1.0], &axis, angle),
        ];
        let c = SymMatrix3::from_principal(&basis, &[9.0, 4.0, 1.0]);
        let (vals, vecs) = principal_decomposition(&c).unwrap();
        assert_relative_eq!(vals[0], 9.0, max_relative = 1e-12);
        assert_relative_eq!(vals[1], 4.0, max_relative = 1e-12);
        assert_relative_eq!(vals[2], 1.0, max_relative = 1e-12);
        for k in 0..3 {
            assert_relative_eq!(dot(&vecs[k], &basis[k]).abs(), 1.0, max_relative = 1e-10);
        }
    }

    #[test]
    fn negative_eigenvalue_rejected() {
        let c = SymMatrix3::diagonal([1.0, 1.0, -1e-6]);
        assert!(principal_decomposition(&c).is_err());
        // small negative round-off tolerated and clamped
        let c = SymMatrix3::diagonal([1.0, 1.0, -1e-14]);
        let (vals, _) = principal_decomposition(&c).unwrap();
        assert_eq!(vals[2], 0.0);
    }

    #[test]
    fn random_spd_round_trip() {
        // deterministic pseudo-random SPD matrices; decompose -> reconstruct
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let mut g = [[0.0; 3]; 3];
            for row in g.iter_mut() {
                for x in row.iter_mut() {
                    *x = 2.0 * next() - 1.0;
                }
            }
            // C = G G^T + eps I is SPD
            let mut c = SymMatrix3::zero();
            for i in 0..3 {
                c.add_outer(&[g[i][0], g[i][1], g[i][2]], 1.0);
            }
            c.xx += 1e-6;
            c.yy += 1e-6;
            c.zz += 1e-6;

            let eig = c.eigh();
            let back = reconstruct(&eig);
            let mut diff = c;
            diff.xx -= back.xx;
            diff.yy -= back.yy;
            diff.zz -= back.zz;
            diff.xy -= back.xy;
            diff.xz -= back.xz;
            diff.yz -= back.yz;
            assert!(
                diff.frobenius_norm() <= 1e-10 * c.frobenius_norm(),
                "round trip error {:.3e}",
                diff.frobenius_norm() / c.frobenius_norm()
            );
        }
    }
}
