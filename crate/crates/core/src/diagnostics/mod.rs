//! Composite quantities, scaling studies and the self-test suite.

mod fingerprint;
mod fit;
pub mod output;
mod reference;
mod study;
pub mod verify;

pub use fingerprint::{grid_hash, params_fingerprint, text_fingerprint};
pub use fit::{fit_line, fit_loglog, LineFit, MIN_R_SQUARED};
pub use reference::{incompressible_reference_solve, incompressible_reference_with, ReferenceOptions, ReferenceSolution};
pub use study::{
    contraction_scaling_study, divergence_target, divu_scaling_study, energy_check, low_mach_consistency, probes,
    run_study, xi, CertificateCheck, EnergyCheck, LowMachCheck, SlopeFit, StudyConfig, StudyKind, StudyReport,
    StudyRow, Verdict,
};
