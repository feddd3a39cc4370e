//! Modulation waveforms and the mapping from lab-level parameters to the
//! abstract drive.
//!
//! The drive is a product of a slow and a fast harmonic signal applied
//! simultaneously to the bias magnetic field, the Raman laser intensities,
//! and the relative laser phase:
//!
//! ```text
//! B(t)        = B0 + dB cos(Omega t) cos(omega t)
//! I_a,b(t)    propto |sin(Omega t) cos(omega t)|
//! phi(t)      = Phi + (pi/2) [1 - sgn(sin(Omega t) cos(omega t))]
//! ```
//!
//! which realizes the two-level Hamiltonian `H = hbar Omega0 r.sigma cos(omega t)`
//! with `r(Theta, Phi) = (-sin Theta cos Phi, -sin Theta sin Phi, -cos Theta)`
//! and `Theta = Omega t`.
//!
//! Lab parameters (laser powers, beam waist, fields, detunings) map to the
//! abstract drive through the Raman matrix elements of the adiabatically
//! eliminated W scheme; see [`raman_elements`] and [`physical_to_drive`].

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

pub const HBAR: f64 = 1.054571817e-34;
pub const SPEED_OF_LIGHT: f64 = 299792458.0;
pub const VACUUM_PERMITTIVITY: f64 = 8.8541878128e-12;

const TAU: f64 = std::f64::consts::TAU;

/// Hard floor and warning level for the far-detuned check: the smallest
/// single-photon detuning must exceed the largest effective two-level
/// matrix element by these factors.
pub const FAR_DETUNED_ERROR_RATIO: f64 = 1e2;
pub const FAR_DETUNED_WARN_RATIO: f64 = 1e3;

/// Default acceptance band for the calibration contract
/// `eta12_amplitude == omega0` in [`physical_to_drive`].
pub const DEFAULT_CALIBRATION_TOL: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DriveError {
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("timescale separation violated: slow_omega = {slow} > fast_omega/5 = {limit}")]
    TimescaleSeparation { slow: f64, limit: f64 },
    #[error("field modulation must be perturbative: delta_b = {delta_b} >= b0 = {b0}")]
    ModulationTooLarge { delta_b: f64, b0: f64 },
    #[error(
        "single-photon detunings too small: min|Delta| / max effective element = {ratio:.1} < {floor}"
    )]
    DetuningTooSmall { ratio: f64, floor: f64 },
    #[error("inconsistent calibration: eta12 amplitude / Omega0 = {ratio:.6}")]
    CalibrationMismatch { ratio: f64 },
    #[error("static two-photon offset {offset} rad/s is not small against Omega0 = {omega0} rad/s")]
    StaticDetuningOffset { offset: f64, omega0: f64 },
    #[error("constants file: {0}")]
    ConstantsFormat(String),
    #[error("constants file: missing key `{0}`")]
    MissingKey(&'static str),
    #[error("io: {0}")]
    Io(String),
    #[error("detuning calibration did not converge")]
    CalibrationNoConvergence,
}

/// Abstract drive specification: the coordinates of the periodically
/// driven Hamiltonian. All angular frequencies in rad/s, times in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveParams {
    /// Peak coupling Omega0 (rad/s).
    pub omega0: f64,
    /// Slow modulation frequency Omega (rad/s); `Theta(t) = Omega t`.
    pub slow_omega: f64,
    /// Fast carrier frequency omega (rad/s).
    pub fast_omega: f64,
    /// Azimuth Phi of the rotation plane (rad).
    pub phi: f64,
    /// Fast-drive phase offset theta (rad); zero in the standard protocol.
    pub theta_offset: f64,
    /// Pulse duration (s).
    pub duration: f64,
}

impl DriveParams {
    /// Validates positivity and the timescale guard `slow <= fast/5`.
    pub fn new(
        omega0: f64,
        slow_omega: f64,
        fast_omega: f64,
        phi: f64,
        theta_offset: f64,
        duration: f64,
    ) -> Result<Self, DriveError> {
        for (name, value) in [
            ("omega0", omega0),
            ("slow_omega", slow_omega),
            ("fast_omega", fast_omega),
            ("duration", duration),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(DriveError::NonPositive { name, value });
            }
        }
        if slow_omega > fast_omega / 5.0 {
            return Err(DriveError::TimescaleSeparation {
                slow: slow_omega,
                limit: fast_omega / 5.0,
            });
        }
        Ok(Self { omega0, slow_omega, fast_omega, phi, theta_offset, duration })
    }

    pub fn fast_period(&self) -> f64 {
        TAU / self.fast_omega
    }

    pub fn slow_period(&self) -> f64 {
        TAU / self.slow_omega
    }

    /// Slow angle `Theta(t) = Omega t`.
    pub fn theta(&self, t: f64) -> f64 {
        self.slow_omega * t
    }

    /// True when the separation sits between fast/10 and fast/5, where the
    /// adiabatic picture visibly degrades but exploration is still allowed.
    pub fn marginal_separation(&self) -> bool {
        self.slow_omega > self.fast_omega / 10.0
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = phi;
        self
    }

    pub fn with_duration(mut self, duration: f64) -> Self {
        self.duration = duration;
        self
    }
}

/// Dipole coupling coefficients of the six-level W scheme, in units of the
/// J-reduced dipole element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleCoefficients {
    pub c13: f64,
    pub c23: f64,
    pub c14: f64,
    pub c24: f64,
    pub c15: f64,
    pub c26: f64,
}

/// Atom-specific constants, shipped as a versioned data file rather than
/// baked into code so the protocol can be retargeted to other species.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicConstants {
    pub version: u32,
    pub species: String,
    /// J-reduced dipole matrix element of the coupling line (C m).
    pub d_d1: f64,
    /// Signed Lande factor of the ground manifold.
    pub g_f: f64,
    /// Bohr magneton (J/T).
    pub bohr_magneton: f64,
    /// Quadratic Zeeman coefficient (Hz/T^2).
    pub quadratic_zeeman_hz_per_t2: f64,
    /// Excited-state hyperfine splitting (Hz), used by detuning calibration.
    pub excited_hyperfine_splitting_hz: f64,
    pub dipole: DipoleCoefficients,
}

const RB87_CONSTANTS: &str = include_str!("../../../data/rb87.constants");

impl AtomicConstants {
    /// The bundled Rb-87 D1 constants.
    pub fn rb87() -> Self {
        Self::parse(RB87_CONSTANTS).expect("bundled constants must parse")
    }

    pub fn from_file(path: &Path) -> Result<Self, DriveError> {
        let text = std::fs::read_to_string(path).map_err(|e| DriveError::Io(e.to_string()))?;
        Self::parse(&text)
    }

    /// Parses the flat `key = value` format. Unknown keys are rejected to
    /// catch typos in hand-edited files.
    pub fn parse(text: &str) -> Result<Self, DriveError> {
        let mut map = std::collections::BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                DriveError::ConstantsFormat(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        let known = [
            "version",
            "species",
            "d_d1_cm",
            "g_f",
            "bohr_magneton_j_per_t",
            "quadratic_zeeman_hz_per_t2",
            "excited_hyperfine_splitting_hz",
            "c13",
            "c23",
            "c14",
            "c24",
            "c15",
            "c26",
        ];
        for key in map.keys() {
            if !known.contains(&key.as_str()) {
                return Err(DriveError::ConstantsFormat(format!("unknown key `{key}`")));
            }
        }
        let get = |key: &'static str| map.get(key).ok_or(DriveError::MissingKey(key));
        let num = |key: &'static str| -> Result<f64, DriveError> {
            get(key)?.parse::<f64>().map_err(|_| {
                DriveError::ConstantsFormat(format!("key `{key}` is not a number"))
            })
        };
        Ok(Self {
            version: num("version")? as u32,
            species: get("species")?.clone(),
            d_d1: num("d_d1_cm")?,
            g_f: num("g_f")?,
            bohr_magneton: num("bohr_magneton_j_per_t")?,
            quadratic_zeeman_hz_per_t2: num("quadratic_zeeman_hz_per_t2")?,
            excited_hyperfine_splitting_hz: num("excited_hyperfine_splitting_hz")?,
            dipole: DipoleCoefficients {
                c13: num("c13")?,
                c23: num("c23")?,
                c14: num("c14")?,
                c24: num("c24")?,
                c15: num("c15")?,
                c26: num("c26")?,
            },
        })
    }

    /// Linear Zeeman splitting between `|2>` and `|1>` (mF = +1 vs -1) at
    /// field `b`, as a positive angular frequency (rad/s).
    pub fn zeeman_splitting(&self, b: f64) -> f64 {
        2.0 * self.g_f.abs() * self.bohr_magneton * b / HBAR
    }
}

/// Lab-level experiment specification.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalParams {
    /// Peak laser powers (W).
    pub power_a: f64,
    pub power_b: f64,
    /// 1/e^2 beam waist (m).
    pub waist: f64,
    /// Static bias field (T).
    pub b0: f64,
    /// Field modulation amplitude (T).
    pub delta_b: f64,
    /// Single-photon detunings Delta_1..Delta_4 (Hz).
    pub detunings_hz: [f64; 4],
    /// Programmed laser frequency difference f_a - f_b (Hz); calibrated to
    /// the Zeeman splitting at `b0` so the static two-photon offset vanishes.
    pub laser_freq_difference_hz: f64,
    pub constants: AtomicConstants,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<(), DriveError> {
        for (name, value) in [
            ("power_a", self.power_a),
            ("power_b", self.power_b),
            ("waist", self.waist),
            ("b0", self.b0),
        ] {
            if !(value > 0.0) {
                return Err(DriveError::NonPositive { name, value });
            }
        }
        if self.delta_b < 0.0 {
            return Err(DriveError::NonPositive { name: "delta_b", value: self.delta_b });
        }
        if self.delta_b >= self.b0 {
            return Err(DriveError::ModulationTooLarge { delta_b: self.delta_b, b0: self.b0 });
        }
        Ok(())
    }

    /// Ratio of the smallest single-photon detuning to the largest
    /// effective two-level matrix element (xi, eta, or the two-photon
    /// amplitude). This is the small parameter controlling the adiabatic
    /// elimination of the excited states.
    pub fn far_detuned_ratio(&self) -> f64 {
        let min_delta = self
            .detunings_hz
            .iter()
            .map(|d| d.abs() * TAU)
            .fold(f64::INFINITY, f64::min);
        let el = raman_elements_unchecked(self);
        let max_element = el
            .xi11
            .abs()
            .max(el.xi22.abs())
            .max(el.eta12)
            .max(two_photon_detuning_amplitude(self));
        if max_element == 0.0 {
            f64::INFINITY
        } else {
            min_delta / max_element
        }
    }
}

/// Effective matrix elements of the adiabatically eliminated two-level
/// Hamiltonian, all in rad/s, evaluated at peak laser power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamanMatrixElements {
    pub xi11: f64,
    pub xi22: f64,
    /// Two-photon coupling magnitude (>= 0 by construction).
    pub eta12: f64,
    /// Static two-photon detuning at `b0` after the programmed laser
    /// difference is subtracted (rad/s).
    pub delta: f64,
}

/// Peak electric field of a Gaussian beam of power `power` and 1/e^2
/// waist `waist`, atoms at beam center: `E = sqrt(4 P / (pi w^2 c eps0))`.
///
/// This convention (peak intensity `I0 = 2P / (pi w^2)`) fixes the
/// absolute Rabi scale of everything downstream.
pub fn peak_field(power: f64, waist: f64) -> f64 {
    (4.0 * power / (std::f64::consts::PI * waist * waist * SPEED_OF_LIGHT * VACUUM_PERMITTIVITY))
        .sqrt()
}

/// Bias-field drive signal `B0 + dB cos(Omega t) cos(omega t)` in Tesla.
pub fn magnetic_signal(t: f64, p: &PhysicalParams, d: &DriveParams) -> f64 {
    p.b0 + p.delta_b * (d.slow_omega * t).cos() * (d.fast_omega * t).cos()
}

/// Relative laser intensity envelope `|sin(Omega t) cos(omega t)|`,
/// normalized to peak 1. Both Raman beams receive the same envelope; the
/// field amplitudes are driven as its square root.
pub fn intensity_signal(t: f64, d: &DriveParams) -> f64 {
    ((d.slow_omega * t).sin() * (d.fast_omega * t).cos()).abs()
}

/// Sign convention for the phase jumps: `sgn(0) = +1` so waveform dumps
/// are bit-reproducible.
fn sgn(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Relative laser phase `Phi + (pi/2)[1 - sgn(sin(Omega t) cos(omega t))]`,
/// a square wave alternating between `Phi` and `Phi + pi`.
pub fn phase_signal(t: f64, d: &DriveParams) -> f64 {
    let product = (d.slow_omega * t).sin() * (d.fast_omega * t).cos();
    d.phi + std::f64::consts::FRAC_PI_2 * (1.0 - sgn(product))
}

/// Unit vector `(-sin Theta cos Phi, -sin Theta sin Phi, -cos Theta)`.
pub fn r_hat(theta: f64, phi: f64) -> [f64; 3] {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [-st * cp, -st * sp, -ct]
}

fn raman_elements_unchecked(p: &PhysicalParams) -> RamanMatrixElements {
    let e_a = peak_field(p.power_a, p.waist);
    let e_b = peak_field(p.power_b, p.waist);
    let d = p.constants.d_d1;
    let cg = &p.constants.dipole;
    // Rabi frequencies Omega_rho_ij = -d E_rho c_ij / hbar
    let rabi = |e: f64, c: f64| -d * e * c / HBAR;
    let oa13 = rabi(e_a, cg.c13);
    let oa14 = rabi(e_a, cg.c14);
    let oa26 = rabi(e_a, cg.c26);
    let ob23 = rabi(e_b, cg.c23);
    let ob24 = rabi(e_b, cg.c24);
    let ob15 = rabi(e_b, cg.c15);
    let [d1, d2, d3, d4] = p.detunings_hz.map(|f| f * TAU);
    let xi11 = oa13 * oa13 / d1 + oa14 * oa14 / d2 + ob15 * ob15 / d3;
    let xi22 = ob23 * ob23 / d1 + ob24 * ob24 / d2 + oa26 * oa26 / d4;
    let eta12 = (oa13 * ob23).abs() / d1 + (oa14 * ob24).abs() / d2;
    let delta = p.constants.zeeman_splitting(p.b0) - TAU * p.laser_freq_difference_hz;
    RamanMatrixElements { xi11, xi22, eta12, delta }
}

/// Assembles the effective two-level matrix elements at peak power.
///
/// Fails when the far-detuned ratio drops below [`FAR_DETUNED_ERROR_RATIO`];
/// between the error floor and [`FAR_DETUNED_WARN_RATIO`] the caller should
/// warn but may proceed (query [`PhysicalParams::far_detuned_ratio`]).
pub fn raman_elements(p: &PhysicalParams) -> Result<RamanMatrixElements, DriveError> {
    p.validate()?;
    let ratio = p.far_detuned_ratio();
    if ratio < FAR_DETUNED_ERROR_RATIO {
        return Err(DriveError::DetuningTooSmall { ratio, floor: FAR_DETUNED_ERROR_RATIO });
    }
    Ok(raman_elements_unchecked(p))
}

/// Amplitude of the modulated two-photon detuning produced by the field
/// modulation: `delta_tilde = 2 |g_F| mu_B dB / hbar` (rad/s).
pub fn two_photon_detuning_amplitude(p: &PhysicalParams) -> f64 {
    p.constants.zeeman_splitting(p.delta_b)
}

/// Maps lab parameters to the abstract drive.
///
/// The magnetic leg fixes `Omega0 = delta_tilde_amplitude / 2`; the laser
/// leg must independently deliver `eta12 = Omega0` at peak power. A
/// mismatch beyond `calibration_tol` (relative) is a calibration error
/// carrying the ratio, as is a static two-photon offset beyond the same
/// fraction of `Omega0`.
pub fn physical_to_drive(
    p: &PhysicalParams,
    slow_omega: f64,
    fast_omega: f64,
    phi: f64,
    duration: f64,
    calibration_tol: f64,
) -> Result<DriveParams, DriveError> {
    let elements = raman_elements(p)?;
    let delta_tilde = two_photon_detuning_amplitude(p);
    if delta_tilde <= 0.0 {
        return Err(DriveError::NonPositive { name: "delta_tilde", value: delta_tilde });
    }
    let omega0 = delta_tilde / 2.0;
    let ratio = elements.eta12 / omega0;
    if (ratio - 1.0).abs() > calibration_tol {
        return Err(DriveError::CalibrationMismatch { ratio });
    }
    if elements.delta.abs() > calibration_tol * omega0 {
        return Err(DriveError::StaticDetuningOffset { offset: elements.delta, omega0 });
    }
    DriveParams::new(omega0, slow_omega, fast_omega, phi, 0.0, duration)
}

/// Solves for the common single-photon detuning scale that calibrates the
/// laser leg: detunings `Delta_1 = s`, `Delta_2..4 = s + hfs` such that
/// `eta12 = target_omega0`. Returns the four detunings in Hz.
///
/// `eta12` is strictly decreasing in `s`, so bisection on a bracket is
/// exact; the bracket grows geometrically from the hyperfine splitting.
pub fn calibrate_common_detuning(
    p: &PhysicalParams,
    target_omega0: f64,
) -> Result<[f64; 4], DriveError> {
    if !(target_omega0 > 0.0) {
        return Err(DriveError::NonPositive { name: "target_omega0", value: target_omega0 });
    }
    let hfs = p.constants.excited_hyperfine_splitting_hz;
    let eta_at = |s_hz: f64| {
        let mut trial = p.clone();
        trial.detunings_hz = [s_hz, s_hz + hfs, s_hz + hfs, s_hz + hfs];
        raman_elements_unchecked(&trial).eta12
    };
    let mut lo = 1.0_f64;
    let mut hi = 1.0_f64;
    for _ in 0..200 {
        if eta_at(hi) < target_omega0 {
            break;
        }
        hi *= 4.0;
    }
    if eta_at(hi) >= target_omega0 {
        return Err(DriveError::CalibrationNoConvergence);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if eta_at(mid) > target_omega0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    Ok([s, s + hfs, s + hfs, s + hfs])
}

/// One sample row of the waveform export.
#[derive(Debug, Clone, Copy)]
pub struct WaveformRow {
    pub t: f64,
    pub b_field: f64,
    pub intensity: f64,
    pub phase: f64,
}

/// Samples the three drive signals over `[0, window]` at `per_fast_period`
/// points per fast period (window endpoints included).
pub fn sample_waveforms(
    p: &PhysicalParams,
    d: &DriveParams,
    window: f64,
    per_fast_period: usize,
) -> Vec<WaveformRow> {
    let step = d.fast_period() / per_fast_period as f64;
    let n = (window / step).round() as usize;
    (0..=n)
        .map(|k| {
            let t = k as f64 * step;
            WaveformRow {
                t,
                b_field: magnetic_signal(t, p, d),
                intensity: intensity_signal(t, d),
                phase: phase_signal(t, d),
            }
        })
        .collect()
}

/// Renders waveform rows as CSV with header `t_s,B_T,intensity_rel,phase_rad`.
pub fn waveforms_csv(rows: &[WaveformRow]) -> String {
    let mut out = String::from("t_s,B_T,intensity_rel,phase_rad\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", r.t, r.b_field, r.intensity, r.phase);
    }
    out
}
