//! Exact 2x2 complex linear algebra and SU(2)/Pauli primitives.
//!
//! Everything downstream (drive construction, integration, holonomy
//! reconstruction) works with three value types defined here:
//!
//! * [`ComplexMat2`] -- a dense 2x2 complex matrix, used for Hamiltonians
//!   and raw operator arithmetic.
//! * [`SpinState`] -- a normalized two-component amplitude vector.
//! * [`SU2Operator`] -- a special-unitary 2x2 matrix together with its
//!   quaternion decomposition `U = u0*I - i u.sigma`.
//!
//! All types are immutable values and safe to share across threads.

use num_complex::Complex64;
use thiserror::Error;

/// Tolerance for the state-normalization invariant.
pub const NORM_TOL: f64 = 1e-9;
/// Tolerance for unitarity checks on operator construction.
pub const UNITARY_TOL: f64 = 1e-12;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Su2Error {
    #[error("state vector is not normalized: |c1|^2 + |c2|^2 = {norm_sq}")]
    NotNormalized { norm_sq: f64 },
    #[error("cannot normalize a zero vector")]
    ZeroNorm,
    #[error("rotation axis must have unit norm, got {norm}")]
    NonUnitAxis { norm: f64 },
    #[error("matrix is not unitary: ||U^dag U - 1||_F = {defect}")]
    NotUnitary { defect: f64 },
    #[error("matrix is not special-unitary: det = {det}")]
    NotSpecialUnitary { det: Complex64 },
    #[error("quaternion is not normalized: u0^2 + |u|^2 = {norm_sq}")]
    InvalidQuaternion { norm_sq: f64 },
}

/// Dense 2x2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexMat2 {
    pub a11: Complex64,
    pub a12: Complex64,
    pub a21: Complex64,
    pub a22: Complex64,
}

impl ComplexMat2 {
    pub fn new(a11: Complex64, a12: Complex64, a21: Complex64, a22: Complex64) -> Self {
        Self { a11, a12, a21, a22 }
    }

    pub fn zero() -> Self {
        Self::new(ZERO, ZERO, ZERO, ZERO)
    }

    pub fn identity() -> Self {
        Self::new(ONE, ZERO, ZERO, ONE)
    }

    /// Hermitian matrix from real diagonal entries and the upper
    /// off-diagonal element; the lower one is its conjugate by construction.
    pub fn hermitian(d1: f64, d2: f64, off: Complex64) -> Self {
        Self::new(Complex64::new(d1, 0.0), off, off.conj(), Complex64::new(d2, 0.0))
    }

    pub fn pauli_x() -> Self {
        Self::new(ZERO, ONE, ONE, ZERO)
    }

    pub fn pauli_y() -> Self {
        Self::new(ZERO, -I, I, ZERO)
    }

    pub fn pauli_z() -> Self {
        Self::new(ONE, ZERO, ZERO, -ONE)
    }

    pub fn adjoint(&self) -> Self {
        Self::new(self.a11.conj(), self.a21.conj(), self.a12.conj(), self.a22.conj())
    }

    pub fn trace(&self) -> Complex64 {
        self.a11 + self.a22
    }

    pub fn det(&self) -> Complex64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn frobenius_norm(&self) -> f64 {
        (self.a11.norm_sqr() + self.a12.norm_sqr() + self.a21.norm_sqr() + self.a22.norm_sqr())
            .sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.a11 * s, self.a12 * s, self.a21 * s, self.a22 * s)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(
            self.a11 + other.a11,
            self.a12 + other.a12,
            self.a21 + other.a21,
            self.a22 + other.a22,
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::new(
            self.a11 - other.a11,
            self.a12 - other.a12,
            self.a21 - other.a21,
            self.a22 - other.a22,
        )
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::new(
            self.a11 * other.a11 + self.a12 * other.a21,
            self.a11 * other.a12 + self.a12 * other.a22,
            self.a21 * other.a11 + self.a22 * other.a21,
            self.a21 * other.a12 + self.a22 * other.a22,
        )
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.sub(&self.adjoint()).frobenius_norm() < tol
    }

    /// Eigenvalues of a Hermitian matrix, ordered ascending.
    pub fn herm_eigenvalues(&self) -> (f64, f64) {
        let half_tr = 0.5 * self.trace().re;
        let half_diff = 0.5 * (self.a11.re - self.a22.re);
        let disc = (half_diff * half_diff + self.a12.norm_sqr()).sqrt();
        (half_tr - disc, half_tr + disc)
    }

    fn apply_raw(&self, c: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.a11 * c[0] + self.a12 * c[1],
            self.a21 * c[0] + self.a22 * c[1],
        ]
    }
}

/// Linear combination of Pauli matrices `n_x sigma_x + n_y sigma_y + n_z sigma_z`.
///
/// The coefficient vector need not be normalized; the result is Hermitian
/// and traceless for any real input.
pub fn pauli_vector(n: [f64; 3]) -> ComplexMat2 {
    ComplexMat2::new(
        Complex64::new(n[2], 0.0),
        Complex64::new(n[0], -n[1]),
        Complex64::new(n[0], n[1]),
        Complex64::new(-n[2], 0.0),
    )
}

/// Normalized pseudo-spin-1/2 state on the basis `{|1>, |2>}`.
///
/// Normalization is enforced at construction, so every reachable value
/// satisfies `|c1|^2 + |c2|^2 = 1` to within [`NORM_TOL`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinState {
    c1: Complex64,
    c2: Complex64,
}

impl SpinState {
    /// Builds a state from amplitudes that are already normalized.
    pub fn new(c1: Complex64, c2: Complex64) -> Result<Self, Su2Error> {
        let norm_sq = c1.norm_sqr() + c2.norm_sqr();
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Su2Error::NotNormalized { norm_sq });
        }
        Ok(Self { c1, c2 })
    }

    /// Builds a state from arbitrary amplitudes, rescaling to unit norm.
    pub fn normalized(c1: Complex64, c2: Complex64) -> Result<Self, Su2Error> {
        let norm = (c1.norm_sqr() + c2.norm_sqr()).sqrt();
        if norm < 1e-300 {
            return Err(Su2Error::ZeroNorm);
        }
        Ok(Self { c1: c1 / norm, c2: c2 / norm })
    }

    /// The basis state `|1>`, the north pole of the Bloch sphere.
    pub fn basis1() -> Self {
        Self { c1: ONE, c2: ZERO }
    }

    /// The basis state `|2>`, the south pole of the Bloch sphere.
    pub fn basis2() -> Self {
        Self { c1: ZERO, c2: ONE }
    }

    /// State at polar angle `theta` and azimuth `phi` on the Bloch sphere:
    /// `cos(theta/2)|1> + e^{i phi} sin(theta/2)|2>`.
    pub fn from_bloch(theta: f64, phi: f64) -> Self {
        Self {
            c1: Complex64::new((theta / 2.0).cos(), 0.0),
            c2: Complex64::from_polar((theta / 2.0).sin(), phi),
        }
    }

    pub fn c1(&self) -> Complex64 {
        self.c1
    }

    pub fn c2(&self) -> Complex64 {
        self.c2
    }

    pub fn amplitudes(&self) -> [Complex64; 2] {
        [self.c1, self.c2]
    }

    /// Populations `(|c1|^2, |c2|^2)`.
    pub fn populations(&self) -> (f64, f64) {
        (self.c1.norm_sqr(), self.c2.norm_sqr())
    }

    /// Inner product `<self|other>`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.c1.conj() * other.c1 + self.c2.conj() * other.c2
    }

    /// Multiplies the amplitude of `|2>` by `e^{i phase}`, leaving `|1>` fixed.
    pub fn with_relative_phase(&self, phase: f64) -> Self {
        Self {
            c1: self.c1,
            c2: self.c2 * Complex64::from_polar(1.0, phase),
        }
    }

    pub(crate) fn from_raw_normalized(c: [Complex64; 2]) -> Self {
        let norm = (c[0].norm_sqr() + c[1].norm_sqr()).sqrt();
        Self { c1: c[0] / norm, c2: c[1] / norm }
    }
}

/// Squared overlap `|<a|b>|^2` between two pure states.
///
/// Symmetric, bounded to `[0, 1]`, and invariant under a global phase on
/// either argument. Inputs are normalized by construction of [`SpinState`].
pub fn fidelity(a: &SpinState, b: &SpinState) -> f64 {
    a.inner(b).norm_sqr().min(1.0)
}

/// Special-unitary 2x2 operator with a cached quaternion decomposition
/// `U = u0*I - i(ux sigma_x + uy sigma_y + uz sigma_z)`,
/// with `u0^2 + |u|^2 = 1`.
#[derive(Debug, Clone, Copy)]
pub struct SU2Operator {
    mat: ComplexMat2,
    u0: f64,
    u: [f64; 3],
}

impl SU2Operator {
    pub fn identity() -> Self {
        Self { mat: ComplexMat2::identity(), u0: 1.0, u: [0.0; 3] }
    }

    /// Builds the operator from its quaternion components, which must
    /// satisfy `u0^2 + |u|^2 = 1` to within 1e-10. Sub-tolerance drift is
    /// renormalized away.
    pub fn from_quaternion(u0: f64, u: [f64; 3]) -> Result<Self, Su2Error> {
        let norm_sq = u0 * u0 + u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
        if (norm_sq - 1.0).abs() > 1e-10 {
            return Err(Su2Error::InvalidQuaternion { norm_sq });
        }
        let s = norm_sq.sqrt();
        Ok(Self::from_quaternion_unchecked(u0 / s, [u[0] / s, u[1] / s, u[2] / s]))
    }

    fn from_quaternion_unchecked(u0: f64, u: [f64; 3]) -> Self {
        let mat = ComplexMat2::new(
            Complex64::new(u0, -u[2]),
            Complex64::new(-u[1], -u[0]),
            Complex64::new(u[1], -u[0]),
            Complex64::new(u0, u[2]),
        );
        Self { mat, u0, u }
    }

    /// Validates unitarity and unit determinant, then extracts the
    /// quaternion decomposition.
    pub fn from_matrix(m: ComplexMat2) -> Result<Self, Su2Error> {
        let defect = m.mul(&m.adjoint()).sub(&ComplexMat2::identity()).frobenius_norm();
        if defect > UNITARY_TOL.max(1e-10) {
            return Err(Su2Error::NotUnitary { defect });
        }
        let det = m.det();
        if (det - ONE).norm() > 1e-9 {
            return Err(Su2Error::NotSpecialUnitary { det });
        }
        let u0 = 0.5 * (m.a11.re + m.a22.re);
        let u = [
            -0.5 * (m.a12.im + m.a21.im),
            0.5 * (m.a21.re - m.a12.re),
            0.5 * (m.a22.im - m.a11.im),
        ];
        Ok(Self { mat: m, u0, u })
    }

    pub fn matrix(&self) -> &ComplexMat2 {
        &self.mat
    }

    pub fn u0(&self) -> f64 {
        self.u0
    }

    pub fn u_vec(&self) -> [f64; 3] {
        self.u
    }

    /// Quaternion as `[u0, ux, uy, uz]`.
    pub fn quaternion(&self) -> [f64; 4] {
        [self.u0, self.u[0], self.u[1], self.u[2]]
    }

    pub fn apply(&self, s: &SpinState) -> SpinState {
        SpinState::from_raw_normalized(self.mat.apply_raw(s.amplitudes()))
    }

    pub fn compose(&self, rhs: &Self) -> Self {
        // quaternion product keeps the decomposition exact
        let (a0, a) = (self.u0, self.u);
        let (b0, b) = (rhs.u0, rhs.u);
        let u0 = a0 * b0 - a[0] * b[0] - a[1] * b[1] - a[2] * b[2];
        let u = [
            a0 * b[0] + b0 * a[0] + a[1] * b[2] - a[2] * b[1],
            a0 * b[1] + b0 * a[1] + a[2] * b[0] - a[0] * b[2],
            a0 * b[2] + b0 * a[2] + a[0] * b[1] - a[1] * b[0],
        ];
        let norm = (u0 * u0 + u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
        Self::from_quaternion_unchecked(u0 / norm, [u[0] / norm, u[1] / norm, u[2] / norm])
    }

    pub fn inverse(&self) -> Self {
        Self::from_quaternion_unchecked(self.u0, [-self.u[0], -self.u[1], -self.u[2]])
    }

    /// Rotation angle on the Bloch sphere, in `[0, 2pi)`, using the
    /// convention `U = exp{-i(angle/2) n.sigma}`.
    pub fn rotation_angle(&self) -> f64 {
        2.0 * self.u_norm().atan2(self.u0)
    }

    /// Unit rotation axis, or `None` when the operator is (+/-) identity.
    pub fn rotation_axis(&self) -> Option<[f64; 3]> {
        let n = self.u_norm();
        if n < 1e-12 {
            return None;
        }
        Some([self.u[0] / n, self.u[1] / n, self.u[2] / n])
    }

    fn u_norm(&self) -> f64 {
        (self.u[0] * self.u[0] + self.u[1] * self.u[1] + self.u[2] * self.u[2]).sqrt()
    }

    /// The SO(3) rotation this operator induces on Bloch vectors, row-major.
    pub fn bloch_rotation(&self) -> [[f64; 3]; 3] {
        let (q0, q1, q2, q3) = (self.u0, self.u[0], self.u[1], self.u[2]);
        [
            [
                1.0 - 2.0 * (q2 * q2 + q3 * q3),
                2.0 * (q1 * q2 - q0 * q3),
                2.0 * (q1 * q3 + q0 * q2),
            ],
            [
                2.0 * (q1 * q2 + q0 * q3),
                1.0 - 2.0 * (q1 * q1 + q3 * q3),
                2.0 * (q2 * q3 - q0 * q1),
            ],
            [
                2.0 * (q1 * q3 - q0 * q2),
                2.0 * (q2 * q3 + q0 * q1),
                1.0 - 2.0 * (q1 * q1 + q2 * q2),
            ],
        ]
    }

    /// Phase-sensitive Frobenius distance `||U - V||_F`.
    pub fn frobenius_distance(&self, other: &Self) -> f64 {
        self.mat.sub(&other.mat).frobenius_norm()
    }

    /// Frobenius distance modulo global phase. For two special-unitary
    /// operators the only residual phase freedom is a sign, so this is
    /// `min(||U - V||_F, ||U + V||_F)`.
    pub fn distance_mod_phase(&self, other: &Self) -> f64 {
        let d = self.frobenius_distance(other);
        let s = self.mat.add(&other.mat).frobenius_norm();
        d.min(s)
    }
}

/// Exact SU(2) exponential `exp{-i angle (axis.sigma)} =
/// cos(angle) I - i sin(angle) (axis.sigma)`.
///
/// The axis must be a unit vector to within 1e-9.
pub fn exp_su2(angle: f64, axis: [f64; 3]) -> Result<SU2Operator, Su2Error> {
    let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Su2Error::NonUnitAxis { norm });
    }
    let (s, c) = angle.sin_cos();
    Ok(SU2Operator::from_quaternion_unchecked(
        c,
        [s * axis[0] / norm, s * axis[1] / norm, s * axis[2] / norm],
    ))
}

/// Frobenius norm of the commutator `U1 U2 - U2 U1`; zero iff the
/// operators commute.
pub fn commutator_frobenius(u1: &SU2Operator, u2: &SU2Operator) -> f64 {
    let ab = u1.matrix().mul(u2.matrix());
    let ba = u2.matrix().mul(u1.matrix());
    ab.sub(&ba).frobenius_norm()
}
