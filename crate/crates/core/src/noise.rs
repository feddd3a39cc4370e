//! Gaussian parameter-fluctuation injection and the fidelity-versus-
//! fluctuation-count Monte-Carlo study.
//!
//! Noise enters through the three physically driven parameters: the field
//! modulation amplitude (multiplicative, scales the sigma_z leg of the
//! drive), the laser powers (multiplicative, scales the transverse leg),
//! and the relative laser phase (additive on Phi). Offsets are drawn once
//! per event at `n` event times spread evenly over the pulse and held
//! piecewise-constant between events, so `n` events over duration `T`
//! correspond to a fluctuation rate of exactly `n/T`. A linear-
//! interpolation hold is available for sensitivity studies.
//!
//! Every task of a sweep derives its own counter-based sub-seed from the
//! master seed, so results are bitwise independent of execution order and
//! of the parallel/sequential dispatch.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use thiserror::Error;

use crate::drive::DriveParams;
use crate::hamiltonian::{h_with_perturbations, PerturbationConfig};
use crate::integrator::{solve_tdse, IntegratorError, DEFAULT_DT_DIVISOR, MIN_DT_DIVISOR};
use crate::su2::{fidelity, pauli_vector, ComplexMat2, SU2Operator, SpinState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("noise sigma `{name}` must be non-negative, got {value}")]
    NegativeSigma { name: &'static str, value: f64 },
    #[error("n_fluctuations must be at least 1")]
    NoEvents,
    #[error("need at least 2 Bloch-sphere states, got {n}")]
    TooFewStates { n: usize },
    #[error("sweep requires runs_per_state >= 1 and n_states >= 2")]
    EmptySweep,
    #[error("integration failed at count {count}, state {state}, run {run}, seed {seed}: {source}")]
    Integration {
        count: usize,
        state: usize,
        run: usize,
        seed: u64,
        source: IntegratorError,
    },
}

/// Gaussian noise specification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseSpec {
    /// Std of the field-modulation noise, relative to the modulation
    /// amplitude.
    pub sigma_b_rel: f64,
    /// Std of the laser-power noise, relative to the peak power.
    pub sigma_p_rel: f64,
    /// Std of the relative-phase noise (rad).
    pub sigma_phase: f64,
    /// Number of fluctuation events over the pulse.
    pub n_fluctuations: usize,
    /// Master seed.
    pub seed: u64,
}

impl NoiseSpec {
    /// The reference study levels: 5% field, 5% power, 0.01 pi phase.
    pub fn reference(n_fluctuations: usize, seed: u64) -> Self {
        Self {
            sigma_b_rel: 0.05,
            sigma_p_rel: 0.05,
            sigma_phase: 0.01 * std::f64::consts::PI,
            n_fluctuations,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        for (name, value) in [
            ("sigma_b_rel", self.sigma_b_rel),
            ("sigma_p_rel", self.sigma_p_rel),
            ("sigma_phase", self.sigma_phase),
        ] {
            if value < 0.0 || !value.is_finite() {
                return Err(NoiseError::NegativeSigma { name, value });
            }
        }
        if self.n_fluctuations == 0 {
            return Err(NoiseError::NoEvents);
        }
        Ok(())
    }
}

/// Interpolation of offsets between fluctuation events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NoiseHold {
    /// Hold each offset constant until the next event (default; keeps the
    /// count-to-rate correspondence exact).
    PiecewiseConstant,
    /// Linear interpolation between consecutive offsets.
    Linear,
}

/// One drawn realization of the three offset sequences.
#[derive(Debug, Clone)]
pub struct NoiseRealization {
    eps_b: Vec<f64>,
    eps_p: Vec<f64>,
    eps_phi: Vec<f64>,
    event_dt: f64,
    hold: NoiseHold,
}

impl NoiseRealization {
    /// Draws the offsets with a ChaCha8 stream seeded by `seed`; the draw
    /// order (all field offsets, then power, then phase) is part of the
    /// reproducibility contract.
    pub fn draw(spec: &NoiseSpec, duration: f64, hold: NoiseHold, seed: u64) -> Self {
        let n = spec.n_fluctuations;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw_seq = |sigma: f64| -> Vec<f64> {
            (0..n)
                .map(|_| {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    sigma * g
                })
                .collect()
        };
        let eps_b = draw_seq(spec.sigma_b_rel);
        let eps_p = draw_seq(spec.sigma_p_rel);
        let eps_phi = draw_seq(spec.sigma_phase);
        Self { eps_b, eps_p, eps_phi, event_dt: duration / n as f64, hold }
    }

    fn value(&self, seq: &[f64], t: f64) -> f64 {
        let n = seq.len();
        match self.hold {
            NoiseHold::PiecewiseConstant => {
                let idx = ((t / self.event_dt) as usize).min(n - 1);
                seq[idx]
            }
            NoiseHold::Linear => {
                let pos = (t / self.event_dt).clamp(0.0, (n - 1) as f64);
                let lo = pos.floor() as usize;
                let hi = (lo + 1).min(n - 1);
                let w = pos - lo as f64;
                seq[lo] * (1.0 - w) + seq[hi] * w
            }
        }
    }

    pub fn event_dt(&self) -> f64 {
        self.event_dt
    }

    pub fn offsets_at(&self, t: f64) -> (f64, f64, f64) {
        (
            self.value(&self.eps_b, t),
            self.value(&self.eps_p, t),
            self.value(&self.eps_phi, t),
        )
    }
}

/// A drive with one noise realization attached; evaluates the perturbed
/// Hamiltonian at any time.
#[derive(Debug, Clone)]
pub struct NoisyDrive {
    pub drive: DriveParams,
    pub realization: NoiseRealization,
}

/// Attaches a freshly drawn realization to the drive, using the spec's
/// own seed. Sweeps derive per-task seeds instead; see [`fidelity_sweep`].
pub fn apply_noise(d: &DriveParams, spec: &NoiseSpec, hold: NoiseHold) -> NoisyDrive {
    NoisyDrive {
        drive: *d,
        realization: NoiseRealization::draw(spec, d.duration, hold, spec.seed),
    }
}

impl NoisyDrive {
    /// Perturbed Hamiltonian (H/hbar, rad/s): field noise scales the
    /// longitudinal leg, power noise the transverse leg, phase noise
    /// shifts the azimuth.
    pub fn hamiltonian(&self, t: f64) -> ComplexMat2 {
        self.hamiltonian_with(t, &PerturbationConfig::ideal())
    }

    /// Same, stacked on top of the systematic perturbation terms.
    pub fn hamiltonian_with(&self, t: f64, pert: &PerturbationConfig) -> ComplexMat2 {
        let d = &self.drive;
        let (eps_b, eps_p, eps_phi) = self.realization.offsets_at(t);
        let theta = d.theta(t);
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = (d.phi + eps_phi).sin_cos();
        let envelope = d.omega0 * (d.fast_omega * t + d.theta_offset).cos();
        let ideal_part = pauli_vector([
            -envelope * (1.0 + eps_p) * st * cp,
            -envelope * (1.0 + eps_p) * st * sp,
            -envelope * (1.0 + eps_b) * ct,
        ]);
        if pert.is_ideal() {
            return ideal_part;
        }
        // systematic terms are the difference between the perturbed and
        // ideal noiseless Hamiltonians
        let sys = h_with_perturbations(t, d, pert).sub(&crate::hamiltonian::h_ideal(t, d));
        ideal_part.add(&sys)
    }
}

/// `n` quasi-uniform deterministic states on the Bloch sphere.
///
/// `n = 2` returns the poles exactly; larger `n` uses the midpoint
/// Fibonacci lattice (golden-angle azimuths, midpoint-rule latitudes).
pub fn bloch_sphere_states(n: usize) -> Result<Vec<SpinState>, NoiseError> {
    if n < 2 {
        return Err(NoiseError::TooFewStates { n });
    }
    if n == 2 {
        return Ok(vec![SpinState::basis1(), SpinState::basis2()]);
    }
    let golden_angle = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
    Ok((0..n)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / n as f64;
            let polar = z.acos();
            let azimuth = golden_angle * i as f64;
            SpinState::from_bloch(polar, azimuth)
        })
        .collect())
}

/// Aggregate of one fluctuation count.
#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    pub n_fluctuations: usize,
    pub mean_fidelity: f64,
    pub std_fidelity: f64,
    pub n_samples: usize,
    /// Raw per-(state, run) fidelities in state-major order.
    pub fidelities: Vec<f64>,
}

impl SweepEntry {
    pub fn standard_error(&self) -> f64 {
        self.std_fidelity / (self.n_samples as f64).sqrt()
    }
}

/// Full sweep result.
#[derive(Debug, Clone, Serialize)]
pub struct FidelitySweepResult {
    pub entries: Vec<SweepEntry>,
    pub runs_per_state: usize,
    pub n_states: usize,
    pub seed: u64,
}

/// Sweep knobs beyond the noise spec itself.
#[derive(Debug, Clone, Copy)]
pub struct SweepConfig {
    pub runs_per_state: usize,
    pub n_states: usize,
    pub dt_divisor: u32,
    pub hold: NoiseHold,
    /// Systematic perturbation terms included in the noisy propagation.
    pub perturbations: PerturbationConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            runs_per_state: 5,
            n_states: 26,
            dt_divisor: DEFAULT_DT_DIVISOR,
            hold: NoiseHold::PiecewiseConstant,
            perturbations: PerturbationConfig::ideal(),
        }
    }
}

/// splitmix64, used to derive statistically independent sub-seeds from
/// the master seed and the task coordinates.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Sub-seed for task `(count, state_idx, run_idx)` under `master`.
pub fn derive_subseed(master: u64, count: usize, state_idx: usize, run_idx: usize) -> u64 {
    let mut s = master;
    let mut acc = splitmix64(&mut s);
    s ^= count as u64;
    acc ^= splitmix64(&mut s);
    s ^= (state_idx as u64) << 20;
    acc ^= splitmix64(&mut s);
    s ^= (run_idx as u64) << 40;
    acc ^ splitmix64(&mut s)
}

struct Task {
    count: usize,
    state_idx: usize,
    run_idx: usize,
}

fn run_task(
    task: &Task,
    drive: &DriveParams,
    template: &NoiseSpec,
    ideal: &SU2Operator,
    states: &[SpinState],
    cfg: &SweepConfig,
) -> Result<f64, NoiseError> {
    let seed = derive_subseed(template.seed, task.count, task.state_idx, task.run_idx);
    let spec = NoiseSpec { n_fluctuations: task.count, seed, ..*template };
    let noisy = NoisyDrive {
        drive: *drive,
        realization: NoiseRealization::draw(&spec, drive.duration, cfg.hold, seed),
    };
    let psi0 = &states[task.state_idx];
    let dt = drive.fast_period() / cfg.dt_divisor as f64;
    let pert = cfg.perturbations;
    let traj = solve_tdse(
        |t| noisy.hamiltonian_with(t, &pert),
        psi0,
        (0.0, drive.duration),
        dt,
    )
    .map_err(|source| NoiseError::Integration {
        count: task.count,
        state: task.state_idx,
        run: task.run_idx,
        seed,
        source,
    })?;
    let target = ideal.apply(psi0);
    Ok(fidelity(&target, traj.final_state()))
}

/// Monte-Carlo fidelity sweep over fluctuation counts.
///
/// For each count, every initial state is propagated `runs_per_state`
/// times under independent noise realizations and compared against the
/// ideal operator's action; mean and sample standard deviation are taken
/// over the `runs x states` samples. Dispatches to the rayon pool when
/// the `parallel` feature is enabled.
pub fn fidelity_sweep(
    counts: &[usize],
    template: &NoiseSpec,
    drive: &DriveParams,
    ideal: &SU2Operator,
    cfg: &SweepConfig,
) -> Result<FidelitySweepResult, NoiseError> {
    #[cfg(feature = "parallel")]
    {
        sweep_impl(counts, template, drive, ideal, cfg, true)
    }
    #[cfg(not(feature = "parallel"))]
    {
        sweep_impl(counts, template, drive, ideal, cfg, false)
    }
}

/// Sequential twin of [`fidelity_sweep`]; always available, and the
/// baseline the parallel path must match bit for bit.
pub fn fidelity_sweep_sequential(
    counts: &[usize],
    template: &NoiseSpec,
    drive: &DriveParams,
    ideal: &SU2Operator,
    cfg: &SweepConfig,
) -> Result<FidelitySweepResult, NoiseError> {
    sweep_impl(counts, template, drive, ideal, cfg, false)
}

fn sweep_impl(
    counts: &[usize],
    template: &NoiseSpec,
    drive: &DriveParams,
    ideal: &SU2Operator,
    cfg: &SweepConfig,
    parallel: bool,
) -> Result<FidelitySweepResult, NoiseError> {
    template.validate()?;
    if cfg.runs_per_state == 0 || cfg.n_states < 2 {
        return Err(NoiseError::EmptySweep);
    }
    if cfg.dt_divisor < MIN_DT_DIVISOR {
        return Err(NoiseError::Integration {
            count: 0,
            state: 0,
            run: 0,
            seed: template.seed,
            source: IntegratorError::DtTooLarge {
                dt: drive.fast_period() / cfg.dt_divisor as f64,
                max: drive.fast_period() / MIN_DT_DIVISOR as f64,
            },
        });
    }
    let states = bloch_sphere_states(cfg.n_states)?;
    let mut tasks = Vec::with_capacity(counts.len() * cfg.n_states * cfg.runs_per_state);
    for &count in counts {
        let spec = NoiseSpec { n_fluctuations: count, ..*template };
        spec.validate()?;
        for state_idx in 0..cfg.n_states {
            for run_idx in 0..cfg.runs_per_state {
                tasks.push(Task { count, state_idx, run_idx });
            }
        }
    }

    let results: Result<Vec<f64>, NoiseError> = if parallel {
        run_tasks_parallel(&tasks, drive, template, ideal, &states, cfg)
    } else {
        tasks
            .iter()
            .map(|t| run_task(t, drive, template, ideal, &states, cfg))
            .collect()
    };
    let fidelities = results?;

    let per_count = cfg.n_states * cfg.runs_per_state;
    let entries = counts
        .iter()
        .enumerate()
        .map(|(count_idx, &count)| {
            let slice = &fidelities[count_idx * per_count..(count_idx + 1) * per_count];
            let n = slice.len();
            let mean = slice.iter().sum::<f64>() / n as f64;
            let var = slice.iter().map(|f| (f - mean) * (f - mean)).sum::<f64>()
                / (n as f64 - 1.0);
            SweepEntry {
                n_fluctuations: count,
                mean_fidelity: mean,
                std_fidelity: var.sqrt(),
                n_samples: n,
                fidelities: slice.to_vec(),
            }
        })
        .collect();
    Ok(FidelitySweepResult {
        entries,
        runs_per_state: cfg.runs_per_state,
        n_states: cfg.n_states,
        seed: template.seed,
    })
}

#[cfg(feature = "parallel")]
fn run_tasks_parallel(
    tasks: &[Task],
    drive: &DriveParams,
    template: &NoiseSpec,
    ideal: &SU2Operator,
    states: &[SpinState],
    cfg: &SweepConfig,
) -> Result<Vec<f64>, NoiseError> {
    use rayon::prelude::*;
    // order-preserving collect keeps aggregation identical to sequential
    tasks
        .par_iter()
        .map(|t| run_task(t, drive, template, ideal, states, cfg))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn run_tasks_parallel(
    tasks: &[Task],
    drive: &DriveParams,
    template: &NoiseSpec,
    ideal: &SU2Operator,
    states: &[SpinState],
    cfg: &SweepConfig,
) -> Result<Vec<f64>, NoiseError> {
    tasks
        .iter()
        .map(|t| run_task(t, drive, template, ideal, states, cfg))
        .collect()
}

/// Sweep summary CSV `n_fluctuations,mean_fidelity,std_fidelity,n_samples`.
pub fn sweep_csv(result: &FidelitySweepResult) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("n_fluctuations,mean_fidelity,std_fidelity,n_samples\n");
    for e in &result.entries {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            e.n_fluctuations, e.mean_fidelity, e.std_fidelity, e.n_samples
        );
    }
    out
}

/// Raw per-run CSV `n_fluctuations,state_index,run_index,fidelity`.
pub fn sweep_raw_csv(result: &FidelitySweepResult) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("n_fluctuations,state_index,run_index,fidelity\n");
    for e in &result.entries {
        for (k, f) in e.fidelities.iter().enumerate() {
            let state = k / result.runs_per_state;
            let run = k % result.runs_per_state;
            let _ = writeln!(out, "{},{},{},{}", e.n_fluctuations, state, run, f);
        }
    }
    out
}
