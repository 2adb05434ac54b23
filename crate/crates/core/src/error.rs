use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid trace parameters: {0}")]
    InvalidParams(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("negative mass: atom at x={at} holds {available} but {required} must be removed")]
    NegativeMass {
        at: f64,
        available: f64,
        required: f64,
    },

    #[error("z = {z} lies on the slit [0, 1]; no branch maps it into the open disk")]
    BranchFailure { z: Complex64 },

    #[error("square-root discriminant {discriminant} is on the negative real axis at zeta = {zeta}")]
    BranchAmbiguity {
        zeta: Complex64,
        discriminant: Complex64,
    },

    #[error("Newton iteration did not converge for zeta = {zeta} at t = {t} (residual {residual:e})")]
    NewtonDivergence {
        zeta: Complex64,
        t: f64,
        residual: f64,
    },

    #[error("Newton iterate left the closed unit disk for zeta = {zeta} at t = {t}")]
    ExitedDisk { zeta: Complex64, t: f64 },

    #[error("characteristic through {target} could not be traced back to time 0 (t = {t})")]
    CharacteristicExit { target: Complex64, t: f64 },

    #[error("boundary values diverge like 1/(1-r) near theta = {theta}: the measure has an atom")]
    DivergenceDetected { theta: f64 },

    #[error("z = {z} is within {distance:e} of the spectrum [0, 1]")]
    TooCloseToSpectrum { z: Complex64, distance: f64 },

    #[error("measure carries atoms (zero: {atom_zero}, pi: {atom_pi}); a density is required")]
    AtomPresent { atom_zero: f64, atom_pi: f64 },

    #[error("time grids differ: {0}")]
    TimeGridMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
