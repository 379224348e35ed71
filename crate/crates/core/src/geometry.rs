//! Fixed-size linear algebra for SO(3) and its Lie algebra so(3).
//!
//! The rotation group is represented by plain 3x3 matrices and the algebra by
//! coordinate vectors under the hat map. Exponential (Rodrigues), logarithm,
//! and Cayley charts all carry small-angle Taylor branches so the scalar
//! coefficients never hit 0/0.

use crate::error::{Error, Result};
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

/// Threshold below which sinc-like coefficients switch to Taylor expansions.
const SMALL_ANGLE: f64 = 1e-4;

/// Coordinate vector in R^3, also used for so(3) under the hat map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec3(pub [f64; 3]);

impl Vec3 {
    pub const ZERO: Vec3 = Vec3([0.0; 3]);

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3([x, y, z])
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3([
            self.0[1] * other.0[2] - self.0[2] * other.0[1],
            self.0[2] * other.0[0] - self.0[0] * other.0[2],
            self.0[0] * other.0[1] - self.0[1] * other.0[0],
        ])
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn from_slice(s: &[f64]) -> Self {
        Vec3([s[0], s[1], s[2]])
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3([-self.0[0], -self.0[1], -self.0[2]])
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vec3 {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

/// 3x3 real matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const ZERO: Mat3 = Mat3([[0.0; 3]; 3]);

    pub fn identity() -> Mat3 {
        Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    pub fn diag(a: f64, b: f64, c: f64) -> Mat3 {
        Mat3([[a, 0.0, 0.0], [0.0, b, 0.0], [0.0, 0.0, c]])
    }

    pub fn transpose(self) -> Mat3 {
        let m = self.0;
        Mat3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn trace(self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn det(self) -> f64 {
        let m = self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn frobenius_norm(self) -> f64 {
        self.0
            .iter()
            .flat_map(|row| row.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.0.iter().flat_map(|r| r.iter()).all(|x| x.is_finite())
    }

    /// Inverse by the adjugate; errors when the determinant is numerically zero.
    pub fn inverse(self) -> Result<Mat3> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return Err(Error::SingularJacobian);
        }
        let m = self.0;
        let inv = |r1: usize, c1: usize, r2: usize, c2: usize| {
            m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1]
        };
        let adj = Mat3([
            [inv(1, 1, 2, 2), inv(0, 2, 2, 1), inv(0, 1, 1, 2)],
            [inv(1, 2, 2, 0), inv(0, 0, 2, 2), inv(0, 2, 1, 0)],
            [inv(1, 0, 2, 1), inv(0, 1, 2, 0), inv(0, 0, 1, 1)],
        ]);
        Ok(adj * (1.0 / d))
    }

    pub fn solve(self, b: Vec3) -> Result<Vec3> {
        Ok(self.inverse()? * b)
    }

    /// Outer product a b^T.
    pub fn outer(a: Vec3, b: Vec3) -> Mat3 {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = a[i] * b[j];
            }
        }
        Mat3(m)
    }
}

impl Add for Mat3 {
    type Output = Mat3;
    fn add(self, o: Mat3) -> Mat3 {
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = self.0[i][j] + o.0[i][j];
            }
        }
        Mat3(m)
    }
}

impl Sub for Mat3 {
    type Output = Mat3;
    fn sub(self, o: Mat3) -> Mat3 {
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = self.0[i][j] - o.0[i][j];
            }
        }
        Mat3(m)
    }
}

impl Mul for Mat3 {
    type Output = Mat3;
    fn mul(self, o: Mat3) -> Mat3 {
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] =
                    self.0[i][0] * o.0[0][j] + self.0[i][1] * o.0[1][j] + self.0[i][2] * o.0[2][j];
            }
        }
        Mat3(m)
    }
}

impl Mul<Vec3> for Mat3 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        Vec3([
            self.0[0][0] * v[0] + self.0[0][1] * v[1] + self.0[0][2] * v[2],
            self.0[1][0] * v[0] + self.0[1][1] * v[1] + self.0[1][2] * v[2],
            self.0[2][0] * v[0] + self.0[2][1] * v[1] + self.0[2][2] * v[2],
        ])
    }
}

impl Mul<f64> for Mat3 {
    type Output = Mat3;
    fn mul(self, s: f64) -> Mat3 {
        let mut m = self.0;
        for row in m.iter_mut() {
            for e in row.iter_mut() {
                *e *= s;
            }
        }
        Mat3(m)
    }
}

/// Special-orthogonal 3x3 matrix. Construction checks orthogonality and
/// orientation; the inner matrix is immutable afterwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    matrix: Mat3,
}

impl Rotation {
    /// Orthogonality defect allowed at construction.
    pub const CONSTRUCTION_TOL: f64 = 1e-12;

    pub fn identity() -> Rotation {
        Rotation {
            matrix: Mat3::identity(),
        }
    }

    /// Wrap a matrix that is already special-orthogonal to tolerance.
    ///
    /// Panics if `||I - R^T R||_F > 1e-12` or `det(R) <= 0`; rotations in this
    /// crate are only ever produced by exact charts, so a violation is a bug.
    pub fn new(matrix: Mat3) -> Rotation {
        let defect = orthogonality_error(matrix);
        assert!(
            defect <= Self::CONSTRUCTION_TOL,
            "matrix is not orthogonal to tolerance (defect {defect:.3e})"
        );
        assert!(matrix.det() > 0.0, "matrix must be orientation-preserving");
        Rotation { matrix }
    }

    /// Wrap without the construction check. For compositions whose inputs
    /// are already on the group and whose defect is round-off only.
    pub(crate) fn from_matrix_unchecked(matrix: Mat3) -> Rotation {
        Rotation { matrix }
    }

    pub fn matrix(&self) -> Mat3 {
        self.matrix
    }

    pub fn transpose(&self) -> Rotation {
        Rotation {
            matrix: self.matrix.transpose(),
        }
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        self.matrix * v
    }
}

impl Mul for Rotation {
    type Output = Rotation;
    fn mul(self, o: Rotation) -> Rotation {
        // The product of rotations drifts off the group only by round-off;
        // skip the construction check so long products stay cheap.
        Rotation {
            matrix: self.matrix * o.matrix,
        }
    }
}

/// Skew matrix of `v`: hat(v) w = v x w.
pub fn hat(v: Vec3) -> Mat3 {
    Mat3([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])
}

/// Inverse of the hat map. The symmetric part of `m` must vanish to 1e-10.
pub fn vee(m: Mat3) -> Result<Vec3> {
    let sym = m + m.transpose();
    let asymmetry = sym.frobenius_norm();
    if asymmetry > 1e-10 {
        return Err(Error::NotSkew { asymmetry });
    }
    Ok(Vec3([
        0.5 * (m.0[2][1] - m.0[1][2]),
        0.5 * (m.0[0][2] - m.0[2][0]),
        0.5 * (m.0[1][0] - m.0[0][1]),
    ]))
}

/// sin(t)/t with a Taylor branch below the small-angle threshold.
fn sinc(t: f64) -> f64 {
    if t.abs() < SMALL_ANGLE {
        let t2 = t * t;
        1.0 - t2 / 6.0 + t2 * t2 / 120.0
    } else {
        t.sin() / t
    }
}

/// (1 - cos(t))/t^2 with a Taylor branch below the small-angle threshold.
fn cosc(t: f64) -> f64 {
    if t.abs() < SMALL_ANGLE {
        let t2 = t * t;
        0.5 - t2 / 24.0 + t2 * t2 / 720.0
    } else {
        (1.0 - t.cos()) / (t * t)
    }
}

/// Group exponential by Rodrigues' formula:
/// `exp(hat(f)) = I + sinc(|f|) hat(f) + cosc(|f|) hat(f)^2`.
pub fn exp_so3(f: Vec3) -> Rotation {
    let theta = f.norm();
    let s = hat(f);
    let m = Mat3::identity() + s * sinc(theta) + (s * s) * cosc(theta);
    Rotation::new(m)
}

/// Rotation logarithm. Returns the coordinate vector `f` with
/// `exp_so3(f) = rot` and `|f| < pi`; rejects angles within 1e-6 of pi where
/// the axis extraction from the antisymmetric part breaks down.
pub fn log_so3(rot: &Rotation) -> Result<Vec3> {
    let m = rot.matrix();
    let c = ((m.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let theta = c.acos();
    if theta >= std::f64::consts::PI - 1e-6 {
        return Err(Error::NearPiAngle { angle: theta });
    }
    let anti = Vec3([
        0.5 * (m.0[2][1] - m.0[1][2]),
        0.5 * (m.0[0][2] - m.0[2][0]),
        0.5 * (m.0[1][0] - m.0[0][1]),
    ]);
    // anti = sin(theta)/theta * f, so divide by sinc(theta).
    Ok(anti * (1.0 / sinc(theta)))
}

/// Cayley chart: `(I + hat(f)) (I - hat(f))^{-1}`, evaluated in the rational
/// closed form `I + 2 (hat(f) + hat(f)^2) / (1 + |f|^2)`.
pub fn cayley(f: Vec3) -> Rotation {
    let s = hat(f);
    let m = Mat3::identity() + (s + s * s) * (2.0 / (1.0 + f.dot(f)));
    Rotation::new(m)
}

/// Term cap for the dexp/ddexp operator series.
const SERIES_MAX_TERMS: usize = 30;

/// Operator series sum_{n>=0} ad_xi^n / (n + shift)! applied to `v`, truncated
/// when a term's norm falls below 1e-16 of the accumulated result.
fn ad_series(xi: Vec3, v: Vec3, shift: usize, max_terms: usize) -> Vec3 {
    let mut factorial = (1..=shift).map(|k| k as f64).product::<f64>();
    let mut term = v;
    let mut result = term * (1.0 / factorial);
    for n in 1..max_terms {
        term = xi.cross(term);
        factorial *= (n + shift) as f64;
        let contribution = term * (1.0 / factorial);
        result = result + contribution;
        if contribution.norm() <= 1e-16 * result.norm() {
            break;
        }
    }
    result
}

/// Derivative-of-exponential operator `dexp_{ad xi} v = sum ad_xi^n v / (n+1)!`.
pub fn dexp_ad(xi: Vec3, v: Vec3) -> Vec3 {
    ad_series(xi, v, 1, SERIES_MAX_TERMS)
}

/// Companion operator `ddexp_{ad xi} v = sum ad_xi^n v / (n+2)!`.
pub fn ddexp_ad(xi: Vec3, v: Vec3) -> Vec3 {
    ad_series(xi, v, 2, SERIES_MAX_TERMS)
}

#[doc(hidden)]
pub fn dexp_ad_with_cap(xi: Vec3, v: Vec3, max_terms: usize) -> Vec3 {
    ad_series(xi, v, 1, max_terms)
}

#[doc(hidden)]
pub fn ddexp_ad_with_cap(xi: Vec3, v: Vec3, max_terms: usize) -> Vec3 {
    ad_series(xi, v, 2, max_terms)
}

/// Frobenius norm of `I - R^T R`. Takes a raw matrix so that the drift of
/// integrators that leave the group can be measured.
pub fn orthogonality_error(m: Mat3) -> f64 {
    (Mat3::identity() - m.transpose() * m).frobenius_norm()
}
