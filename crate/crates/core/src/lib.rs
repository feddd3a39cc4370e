//! Simulation and analysis of the SU(2) geometric phase generated by a
//! periodically driven Raman-coupled pseudo-spin-1/2 system.
//!
//! A fast harmonic carrier multiplying a slowly rotating coupling vector
//! makes the two dressed levels of the driven system effectively
//! degenerate, so a slow cyclic sweep of the coupling direction imprints a
//! non-Abelian (matrix-valued) geometric phase on the spin. This crate
//! provides both legs needed to study that effect numerically:
//!
//! * closed-form Floquet predictions ([`floquet`]): geometric factor,
//!   effective Hamiltonian, holonomy operators, adiabaticity diagnostics;
//! * direct integration of the time-dependent Schroedinger equation
//!   ([`integrator`]) with stroboscopic sampling at fast-cycle ends;
//!
//! plus the waveform/parameter layer mapping lab quantities to the
//! abstract drive ([`drive`]), Bloch-sphere measurement emulation
//! ([`measurement`]), and a seeded Monte-Carlo noise-robustness study
//! ([`noise`]).
//!
//! The `parallel` feature (default on) runs the Monte-Carlo sweep on a
//! rayon pool; results are bitwise identical to the sequential path.

pub mod bessel;
pub mod drive;
pub mod floquet;
pub mod hamiltonian;
pub mod integrator;
pub mod measurement;
pub mod noise;
pub mod su2;

pub use drive::{DriveParams, PhysicalParams};
pub use hamiltonian::PerturbationConfig;
pub use su2::{ComplexMat2, SU2Operator, SpinState};
