//! Numerical checks of the discrete-to-continuum limits: transition energies
//! across the three scaling regimes, the Modica-Mortola functional, the
//! diffuse-interface continuum functional and the bulk density `f_hom`.

mod continuum;
mod fhom;
mod identities;
mod modica;
mod scaling;

pub use continuum::{continuum_hhf, continuum_min, continuum_settings, ContinuumMin};
pub use fhom::{fhom_bounds, fhom_estimate, fhom_radial_check, FhomEstimate, FhomSettings, Start, STARTS};
pub use identities::{
    identity_suite, liminf_bound, limit_ratio, pair_identity_residual, quartic_identity_residual, IdentityCheck,
    LiminfBound,
};
pub use modica::{adaptive_simpson, limit_constant_of, mm_energy, mm_limit_constant, MMConfig, RecoveryProfile, Well};
pub use scaling::{
    energy_unit, ratio, regime_sweep, transition_energy, transition_seed, Regime, ScalingEntry, ScalingSequence, Sweep,
    SweepRow, TransitionReport, TransitionSettings, TrendCheck, INFINITE_ABOVE, ZERO_BELOW,
};
