//! Emergent velocity and force fields of n-slit and N-particle systems.
//!
//! The velocity field of a particle behind an n-slit arrangement is assembled
//! from `3n` velocity channels (one convective and two diffusive per slit)
//! whose relational projections add up to the total density and current. The
//! crate evaluates those fields, integrates trajectories through them, and
//! ships an independent de Broglie–Bohm reference built directly from the
//! complex wavefunction so the two can be compared point by point.
//!
//! Modules, bottom up:
//!
//! - [`wavemode`]: dispersive Gaussian slit modes in amplitude/phase form.
//! - [`channels`]: the velocity channels and their conditional densities.
//! - [`emergence`]: total density, current, velocity and acceleration.
//! - [`oracle`]: the complex-wavefunction reference.
//! - [`grid`]: grid sweeps and the continuity-equation residual.
//! - [`ode`]: adaptive Dormand–Prince integrator with dense output.
//! - [`trajectories`]: trajectories, ensembles and their diagnostics.
//! - [`nparticle`]: configuration-space fields for several particles.

// Negated comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
mod dd;
pub mod emergence;
pub mod error;
pub mod grid;
pub mod nparticle;
pub mod ode;
pub mod oracle;
pub mod trajectories;
pub mod wavemode;

pub use channels::{build_channels, Channel, ChannelKind, ChannelSet, ChannelSnapshot};
pub use emergence::{
    double_slit_velocity_closed_form, entangling_current, entangling_current_log, EmergentField,
    FieldSample,
};
pub use error::{Error, Result};
pub use oracle::{superpose, WaveFunction};
pub use wavemode::{make_gaussian_mode, ModeSample, PhysicalParams, SlitSpec, WaveMode};
