//! Instantaneous two-level Hamiltonian of the driven system, its optional
//! perturbation terms, and the micromotion (kick) operator.
//!
//! Matrices returned here are `H / hbar` in rad/s; multiply by `hbar` for
//! energies. The ideal drive is
//!
//! ```text
//! H(t)/hbar = Omega0 cos(omega t + theta) r(Theta, Phi) . sigma,   Theta = Omega t
//! ```
//!
//! traceless and Hermitian for all times.

use crate::drive::{r_hat, DriveParams};
use crate::su2::{exp_su2, pauli_vector, ComplexMat2, SU2Operator};

/// Optional sigma_z perturbation terms on top of the ideal model.
///
/// Both profiles are non-negative; amplitudes are magnitudes (rad/s) and
/// the terms enter with `+sigma_z`. Residual asymmetry of the diagonal
/// light shifts follows the intensity envelope `|sin(Theta) cos(omega t)|`;
/// the quadratic field shift follows `(cos(Theta) cos(omega t))^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationConfig {
    pub xi_asymmetry_amp: f64,
    pub xi_enabled: bool,
    pub quadratic_zeeman_amp: f64,
    pub qz_enabled: bool,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        Self::ideal()
    }
}

impl PerturbationConfig {
    /// No perturbations: the ideal model.
    pub fn ideal() -> Self {
        Self {
            xi_asymmetry_amp: 0.0,
            xi_enabled: false,
            quadratic_zeeman_amp: 0.0,
            qz_enabled: false,
        }
    }

    pub fn is_ideal(&self) -> bool {
        !(self.xi_enabled && self.xi_asymmetry_amp != 0.0)
            && !(self.qz_enabled && self.quadratic_zeeman_amp != 0.0)
    }

    /// Sum of the enabled amplitudes (rad/s).
    pub fn combined_amplitude(&self) -> f64 {
        let mut a = 0.0;
        if self.xi_enabled {
            a += self.xi_asymmetry_amp;
        }
        if self.qz_enabled {
            a += self.quadratic_zeeman_amp;
        }
        a
    }
}

/// Ideal driven Hamiltonian `Omega0 cos(omega t + theta) r.sigma` (rad/s).
pub fn h_ideal(t: f64, d: &DriveParams) -> ComplexMat2 {
    let r = r_hat(d.theta(t), d.phi);
    let envelope = d.omega0 * (d.fast_omega * t + d.theta_offset).cos();
    pauli_vector([envelope * r[0], envelope * r[1], envelope * r[2]])
}

/// Ideal Hamiltonian plus the enabled sigma_z perturbation terms.
pub fn h_with_perturbations(t: f64, d: &DriveParams, p: &PerturbationConfig) -> ComplexMat2 {
    let mut z = 0.0;
    if p.xi_enabled && p.xi_asymmetry_amp != 0.0 {
        let theta = d.theta(t);
        z += p.xi_asymmetry_amp
            * (theta.sin() * (d.fast_omega * t + d.theta_offset).cos()).abs();
    }
    if p.qz_enabled && p.quadratic_zeeman_amp != 0.0 {
        let c = d.theta(t).cos() * (d.fast_omega * t + d.theta_offset).cos();
        z += p.quadratic_zeeman_amp * c * c;
    }
    if z == 0.0 {
        return h_ideal(t, d);
    }
    h_ideal(t, d).add(&pauli_vector([0.0, 0.0, z]))
}

/// Dimensionless kick operator `S = (Omega0/omega) sin(omega t + theta) r.sigma`.
pub fn kick_operator(t: f64, d: &DriveParams) -> ComplexMat2 {
    let r = r_hat(d.theta(t), d.phi);
    let s = d.omega0 / d.fast_omega * (d.fast_omega * t + d.theta_offset).sin();
    pauli_vector([s * r[0], s * r[1], s * r[2]])
}

/// Micromotion operator `R = exp{i S}` mapping between the physical and
/// Floquet frames. Equals the identity whenever `sin(omega t + theta) = 0`,
/// in particular at the end of every fast cycle.
pub fn micromotion(t: f64, d: &DriveParams) -> SU2Operator {
    let r = r_hat(d.theta(t), d.phi);
    let s = d.omega0 / d.fast_omega * (d.fast_omega * t + d.theta_offset).sin();
    // exp{i s r.sigma} = cos(s) I + i sin(s) r.sigma = exp_su2(-s, r)
    exp_su2(-s, r).expect("r_hat is unit by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    const TAU: f64 = std::f64::consts::TAU;

    fn paper_drive() -> DriveParams {
        DriveParams::new(TAU * 258.3e3, TAU * 50e3, TAU * 500e3, 0.0, 0.0, 100e-6).unwrap()
    }

    #[test]
    fn initial_hamiltonian_is_minus_sigma_z() {
        let d = paper_drive();
        let h = h_ideal(0.0, &d);
        // Theta = 0, cos = 1, r = (0,0,-1)
        assert!((h.a11.re + d.omega0).abs() < 1e-9);
        assert!((h.a22.re - d.omega0).abs() < 1e-9);
        assert!(h.a12.norm() < 1e-12);
    }

    #[test]
    fn half_fast_period_flips_sign() {
        let d = paper_drive();
        let t = std::f64::consts::PI / d.fast_omega;
        let h = h_ideal(t, &d);
        // cos(pi) = -1, and Theta has advanced by pi * Omega/omega
        let r = r_hat(d.theta(t), 0.0);
        assert!((h.a11.re - (-1.0) * d.omega0 * r[2]).abs() < 1e-9);
    }

    #[test]
    fn fast_cycle_average_vanishes() {
        // average over one fast period at (approximately) fixed Theta
        let d = paper_drive();
        let n = 20_000;
        let t0 = 3.0 * d.fast_period();
        let mut acc = ComplexMat2::zero();
        for k in 0..n {
            let t = t0 + k as f64 / n as f64 * d.fast_period();
            // freeze the slow angle by evaluating r at t0
            let r = r_hat(d.theta(t0), d.phi);
            let env = d.omega0 * (d.fast_omega * t).cos();
            acc = acc.add(&pauli_vector([env * r[0], env * r[1], env * r[2]]));
        }
        acc = acc.scale(1.0 / n as f64);
        assert!(acc.frobenius_norm() < 1e-9 * d.omega0);
    }

    #[test]
    fn ideal_is_traceless_hermitian_with_cosine_eigenvalues() {
        let d = paper_drive();
        let mut rng = 0x243f6a8885a308d3u64;
        for _ in 0..10_000 {
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let t = (rng >> 11) as f64 / (1u64 << 53) as f64 * d.duration;
            let h = h_ideal(t, &d);
            assert!(h.trace().norm() < 1e-14 * d.omega0);
            assert!(h.is_hermitian(1e-14 * d.omega0));
            let want = d.omega0 * (d.fast_omega * t).cos().abs();
            let (lo, hi) = h.herm_eigenvalues();
            assert!((hi - want).abs() < 1e-6);
            assert!((lo + want).abs() < 1e-6);
        }
    }

    #[test]
    fn perturbations_default_to_ideal() {
        let d = paper_drive();
        let p = PerturbationConfig::default();
        assert!(p.is_ideal());
        for k in 0..100 {
            let t = k as f64 * 1.7e-7;
            let a = h_ideal(t, &d);
            let b = h_with_perturbations(t, &d, &p);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn perturbation_scale_against_drive() {
        // quadratic shift at 2pi x 1.88 kHz against Omega0 = 2pi x 258.3 kHz
        let p = PerturbationConfig {
            quadratic_zeeman_amp: TAU * 1.88e3,
            qz_enabled: true,
            ..PerturbationConfig::ideal()
        };
        let d = paper_drive();
        let ratio = p.combined_amplitude() / d.omega0;
        assert!((ratio - 0.00728).abs() < 2e-4, "ratio {ratio}");
    }

    #[test]
    fn kick_operator_vanishes_on_sine_zeros() {
        let d = paper_drive();
        for q in 0..10 {
            let t = q as f64 * std::f64::consts::PI / d.fast_omega;
            assert!(kick_operator(t, &d).frobenius_norm() < 1e-9);
        }
    }

    #[test]
    fn kick_operator_peak_eigenvalues() {
        let d = paper_drive();
        // quarter fast period: sin = 1, eigenvalues +-(Omega0/omega)
        let t = std::f64::consts::FRAC_PI_2 / d.fast_omega;
        let s = kick_operator(t, &d);
        let (lo, hi) = s.herm_eigenvalues();
        let want = d.omega0 / d.fast_omega; // 258.3/500 = 0.5166
        assert!((hi - want).abs() < 2e-3);
        assert!((lo + want).abs() < 2e-3);
        assert!((want - 0.5166).abs() < 1e-4);
        // sign: z entry is -(Omega0/omega) sin(omega t) cos(Theta) ~ negative
        assert!(s.a11.re < 0.0);
    }

    #[test]
    fn micromotion_identity_at_cycle_ends() {
        let d = paper_drive();
        let id = SU2Operator::identity();
        for q in 0..40 {
            let t = q as f64 * d.fast_period();
            let r = micromotion(t, &d);
            assert!(r.frobenius_distance(&id) < 1e-12, "q = {q}");
        }
    }

    #[test]
    fn micromotion_quarter_period_near_theta_zero() {
        // with Theta ~ 0 and sin = 1: R = exp{-i (Omega0/omega) sigma_z}
        let slow = 1.0;
        let d = DriveParams::new(TAU * 258.3e3, slow, TAU * 500e3, 0.0, 0.0, 1.0).unwrap();
        let t = std::f64::consts::FRAC_PI_2 / d.fast_omega;
        let r = micromotion(t, &d);
        let want = exp_su2(d.omega0 / d.fast_omega, [0.0, 0.0, 1.0]).unwrap();
        assert!(r.frobenius_distance(&want) < 1e-6);
    }

    #[test]
    fn micromotion_is_unitary_everywhere() {
        let d = paper_drive();
        let mut rng = 0x9e3779b97f4a7c15u64;
        for _ in 0..100_000 {
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let t = (rng >> 11) as f64 / (1u64 << 53) as f64 * d.duration;
            let r = micromotion(t, &d);
            let prod = r.matrix().mul(&r.matrix().adjoint());
            assert!(prod.sub(&ComplexMat2::identity()).frobenius_norm() < 1e-12);
        }
    }
}
