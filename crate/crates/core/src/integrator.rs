//! Fixed-step numerical solution of the time-dependent Schroedinger
//! equation `i d/dt psi = M(t) psi` with `M = H/hbar` in rad/s.
//!
//! The propagator is the classic fourth-order Runge-Kutta one-step scheme
//! on the two complex amplitudes, with the norm restored after every step
//! and the accumulated drift recorded. Global error is O(dt^4), which the
//! test suite pins with a dt-halving convergence check.
//!
//! Step sizes are chosen as `fast period / divisor` with an integer
//! divisor so stroboscopic times land exactly on grid points.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::drive::DriveParams;
use crate::hamiltonian::{h_with_perturbations, PerturbationConfig};
use crate::su2::{ComplexMat2, SpinState};

const TAU: f64 = std::f64::consts::TAU;

/// Smallest accepted resolution: steps per fast period.
pub const MIN_DT_DIVISOR: u32 = 40;
/// Default steps per fast period.
pub const DEFAULT_DT_DIVISOR: u32 = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegratorError {
    #[error("dt = {dt} exceeds the resolution floor {max} (fast period / {divisor})", divisor = MIN_DT_DIVISOR)]
    DtTooLarge { dt: f64, max: f64 },
    #[error("invalid time step dt = {dt}")]
    InvalidDt { dt: f64 },
    #[error("empty or inverted integration span [{t0}, {t1}]")]
    EmptySpan { t0: f64, t1: f64 },
    #[error("state became non-finite; last good time {last_good_t} s")]
    NumericalFailure { last_good_t: f64 },
    #[error(
        "segment {segment}: duration {duration} s is not a whole number of fast and slow periods"
    )]
    NonCommensurate { segment: usize, duration: f64 },
    #[error("trajectory does not cover the requested sample times")]
    OutOfRange,
}

/// Integration metadata attached to every trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryMeta {
    pub dt: f64,
    pub method: &'static str,
    pub order: u32,
    /// Accumulated |norm - 1| removed by per-step renormalization.
    pub unitarity_drift: f64,
}

/// Ordered samples of the integrated state, one per step, plus metadata.
#[derive(Debug, Clone)]
pub struct Trajectory {
    samples: Vec<(f64, SpinState)>,
    meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn samples(&self) -> &[(f64, SpinState)] {
        &self.samples
    }

    pub fn meta(&self) -> &TrajectoryMeta {
        &self.meta
    }

    pub fn final_state(&self) -> &SpinState {
        &self.samples.last().expect("trajectory is never empty").1
    }

    pub fn start_time(&self) -> f64 {
        self.samples[0].0
    }

    pub fn end_time(&self) -> f64 {
        self.samples.last().unwrap().0
    }
}

/// Result of stroboscopic extraction.
#[derive(Debug, Clone)]
pub struct StroboscopicSamples {
    pub samples: Vec<(f64, SpinState)>,
    /// True when any requested time missed the step grid and linear
    /// interpolation was applied.
    pub interpolated: bool,
}

fn rhs(m: &ComplexMat2, c: [Complex64; 2]) -> [Complex64; 2] {
    let i = Complex64::new(0.0, 1.0);
    [
        -i * (m.a11 * c[0] + m.a12 * c[1]),
        -i * (m.a21 * c[0] + m.a22 * c[1]),
    ]
}

/// Integrates `i d/dt psi = h(t) psi` over `t_span` with fixed step `dt`.
///
/// `h` returns `H/hbar` in rad/s. The caller is responsible for choosing
/// `dt` against the fastest scale in `h`; the drive-aware wrappers
/// ([`solve_drive`], [`run_sequence`]) enforce the fast-period floor.
pub fn solve_tdse<F>(
    h: F,
    psi0: &SpinState,
    t_span: (f64, f64),
    dt: f64,
) -> Result<Trajectory, IntegratorError>
where
    F: Fn(f64) -> ComplexMat2,
{
    let (t0, t1) = t_span;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(IntegratorError::InvalidDt { dt });
    }
    if !(t1 > t0) {
        return Err(IntegratorError::EmptySpan { t0, t1 });
    }
    let steps = ((t1 - t0) / dt).round() as usize;
    let steps = steps.max(1);
    let dt = (t1 - t0) / steps as f64;

    let mut c = psi0.amplitudes();
    let mut drift = 0.0_f64;
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push((t0, *psi0));
    for k in 0..steps {
        let t = t0 + k as f64 * dt;
        let k1 = rhs(&h(t), c);
        let k2 = rhs(&h(t + 0.5 * dt), [c[0] + 0.5 * dt * k1[0], c[1] + 0.5 * dt * k1[1]]);
        let k3 = rhs(&h(t + 0.5 * dt), [c[0] + 0.5 * dt * k2[0], c[1] + 0.5 * dt * k2[1]]);
        let k4 = rhs(&h(t + dt), [c[0] + dt * k3[0], c[1] + dt * k3[1]]);
        let sixth = dt / 6.0;
        c = [
            c[0] + sixth * (k1[0] + 2.0 * (k2[0] + k3[0]) + k4[0]),
            c[1] + sixth * (k1[1] + 2.0 * (k2[1] + k3[1]) + k4[1]),
        ];
        let norm_sq = c[0].norm_sqr() + c[1].norm_sqr();
        if !norm_sq.is_finite() || norm_sq == 0.0 {
            return Err(IntegratorError::NumericalFailure { last_good_t: t });
        }
        let norm = norm_sq.sqrt();
        drift += (norm - 1.0).abs();
        c = [c[0] / norm, c[1] / norm];
        let t_next = t0 + (k + 1) as f64 * dt;
        samples.push((t_next, SpinState::from_raw_normalized(c)));
    }
    Ok(Trajectory {
        samples,
        meta: TrajectoryMeta { dt, method: "rk4", order: 4, unitarity_drift: drift },
    })
}

/// Integrates the drive (plus optional perturbations) from `t = 0` over
/// its configured duration at `fast period / dt_divisor` resolution.
///
/// The drive starts abruptly at full amplitude; no ramp.
pub fn solve_drive(
    d: &DriveParams,
    pert: &PerturbationConfig,
    psi0: &SpinState,
    dt_divisor: u32,
) -> Result<Trajectory, IntegratorError> {
    let dt = check_divisor(d, dt_divisor)?;
    let drive = *d;
    let pert = *pert;
    solve_tdse(
        move |t| h_with_perturbations(t, &drive, &pert),
        psi0,
        (0.0, d.duration),
        dt,
    )
}

fn check_divisor(d: &DriveParams, dt_divisor: u32) -> Result<f64, IntegratorError> {
    let dt = d.fast_period() / dt_divisor as f64;
    if dt_divisor < MIN_DT_DIVISOR {
        return Err(IntegratorError::DtTooLarge { dt, max: d.fast_period() / MIN_DT_DIVISOR as f64 });
    }
    Ok(dt)
}

/// Extracts the samples at fast-cycle ends `T_q = (2 pi q - theta)/omega`.
///
/// At these times the micromotion operator is the identity, so the
/// rotating-frame and Floquet-frame states coincide. Off-grid sample
/// times are linearly interpolated (renormalized) and flagged.
pub fn stroboscopic_sample(
    traj: &Trajectory,
    fast_omega: f64,
    theta_offset: f64,
) -> Result<StroboscopicSamples, IntegratorError> {
    let (t_start, t_end) = (traj.start_time(), traj.end_time());
    let dt = traj.meta.dt;
    let q0 = ((t_start * fast_omega + theta_offset) / TAU).ceil() as i64;
    let mut samples = Vec::new();
    let mut interpolated = false;
    let mut q = q0;
    loop {
        let t_q = (TAU * q as f64 - theta_offset) / fast_omega;
        if t_q > t_end + 1e-9 * dt {
            break;
        }
        if t_q >= t_start - 1e-9 * dt {
            let pos = (t_q - t_start) / dt;
            let idx = pos.round() as usize;
            if (pos - idx as f64).abs() < 1e-6 && idx < traj.samples.len() {
                samples.push((t_q, traj.samples[idx].1));
            } else {
                let lo = pos.floor() as usize;
                let hi = (lo + 1).min(traj.samples.len() - 1);
                if hi >= traj.samples.len() {
                    return Err(IntegratorError::OutOfRange);
                }
                let w = pos - lo as f64;
                let a = traj.samples[lo].1.amplitudes();
                let b = traj.samples[hi].1.amplitudes();
                let c = [a[0] * (1.0 - w) + b[0] * w, a[1] * (1.0 - w) + b[1] * w];
                samples.push((t_q, SpinState::from_raw_normalized(c)));
                interpolated = true;
            }
        }
        q += 1;
    }
    Ok(StroboscopicSamples { samples, interpolated })
}

/// Runs a sequence of drive segments back to back from `psi0`.
///
/// Each segment's drive restarts its own clock (abrupt parameter switch at
/// the boundary; the state is continuous). Every duration must be a whole
/// number of both fast and slow periods so each segment realizes a
/// complete holonomy and ends on a stroboscopic point.
pub fn run_sequence(
    segments: &[(DriveParams, f64)],
    pert: &PerturbationConfig,
    psi0: &SpinState,
    dt_divisor: u32,
) -> Result<Trajectory, IntegratorError> {
    const PERIOD_TOL: f64 = 1e-6;
    for (idx, (d, duration)) in segments.iter().enumerate() {
        let fast_cycles = duration / d.fast_period();
        let slow_cycles = duration / d.slow_period();
        if (fast_cycles - fast_cycles.round()).abs() > PERIOD_TOL
            || (slow_cycles - slow_cycles.round()).abs() > PERIOD_TOL
        {
            return Err(IntegratorError::NonCommensurate { segment: idx, duration: *duration });
        }
    }
    let mut state = *psi0;
    let mut offset = 0.0;
    let mut all: Vec<(f64, SpinState)> = vec![(0.0, state)];
    let mut drift = 0.0;
    let mut dt_used = 0.0;
    for (d, duration) in segments {
        let seg = solve_drive(&d.with_duration(*duration), pert, &state, dt_divisor)?;
        drift += seg.meta.unitarity_drift;
        dt_used = seg.meta.dt;
        state = *seg.final_state();
        all.extend(
            seg.samples()
                .iter()
                .skip(1)
                .map(|(t, s)| (t + offset, *s)),
        );
        offset += duration;
    }
    Ok(Trajectory {
        samples: all,
        meta: TrajectoryMeta { dt: dt_used, method: "rk4", order: 4, unitarity_drift: drift },
    })
}

/// Renders a trajectory as CSV
/// `t_s,re_c1,im_c1,re_c2,im_c2,S1,S2,S3,stroboscopic`.
pub fn trajectory_csv(traj: &Trajectory, fast_omega: f64, theta_offset: f64) -> String {
    use std::fmt::Write as _;
    let mut out =
        String::from("t_s,re_c1,im_c1,re_c2,im_c2,S1,S2,S3,stroboscopic\n");
    for (t, s) in traj.samples() {
        let stokes = crate::measurement::stokes(s);
        let q = (t * fast_omega + theta_offset) / TAU;
        let strobe = (q - q.round()).abs() < 1e-6;
        let c = s.amplitudes();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            t, c[0].re, c[0].im, c[1].re, c[1].im, stokes.s1, stokes.s2, stokes.s3, strobe
        );
    }
    out
}
