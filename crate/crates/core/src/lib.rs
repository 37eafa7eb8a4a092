//! Volume-preserving, reversible splitting integrators and the Hamiltonian
//! Monte Carlo family of samplers built on top of them.
//!
//! The crate is organised around a handful of layers:
//!
//! * [`schemes`] — splitting schemes as ordered drift/kick coefficient
//!   sequences (Lie–Trotter, the Verlet pair, palindromic multi-stage
//!   families, Verlet concatenations).
//! * [`harmonic`] — closed-form analysis of any such scheme on the harmonic
//!   oscillator: step matrices, rotation parameters, the energy-error
//!   function `rho`, stability intervals.
//! * [`integrators`] — drift/kick flows and multi-step integration legs for
//!   arbitrary separable Hamiltonians, with energy-error accounting,
//!   coefficient optimisation and numerical order estimation.
//! * [`targets`] — Gaussian targets with exact flows, product targets and
//!   small demonstration potentials.
//! * [`sampler`] — the HMC Markov-chain family: plain, randomized-duration,
//!   randomized-step, partial-refresh and extra-chance variants.
//! * [`bridge`] — preconditioned HMC for discretized diffusion-bridge path
//!   distributions.
//! * [`tuning`] — high-dimension step-size scaling, limiting acceptance
//!   rates and an empirical step-size tuner.
//!
//! The crate is `no_std`-compatible (with `alloc`); disable the default
//! `std` feature to build it that way. Scalar math falls back to `libm`
//! when the standard library is unavailable.
//!
//! ```
//! use splithmc::integrators::PhaseState;
//! use splithmc::sampler::{run_chain, ChainConfig, ChainVariant};
//! use splithmc::schemes::SplittingScheme;
//! use splithmc::targets::GaussianTarget;
//!
//! let target = GaussianTarget::standard_normal(2);
//! let scheme = SplittingScheme::blanes_two_stage();
//! let cfg = ChainConfig::new(1.5, 0.25, 42);
//! let stats = run_chain(
//!     &target,
//!     &scheme,
//!     ChainVariant::Hmc,
//!     &cfg,
//!     PhaseState::zeros(2),
//!     2_000,
//!     |_, _record| {},
//! );
//! assert!(stats.acceptance_rate() > 0.9);
//! ```

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bridge;
pub mod harmonic;
pub mod integrators;
pub mod linalg;
pub mod math;
pub mod rng;
pub mod sampler;
pub mod schemes;
pub mod stats;
pub mod targets;
pub mod tuning;

pub use harmonic::{RotationParams, StabilityClass, StepMatrix};
pub use integrators::{LegResult, PhaseState, SeparableSystem};
pub use rng::Rng;
pub use sampler::{ChainConfig, ChainVariant, TransitionRecord};
pub use schemes::{FlowKind, SplittingScheme};
pub use stats::RunStats;
