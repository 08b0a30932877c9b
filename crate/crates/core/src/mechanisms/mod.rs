//! Noise primitives: the exact discrete Gaussian, the vector mechanism built
//! on it, keyed random streams and a Rényi divergence checker.

mod dgauss;
mod renyi;
pub mod rng;

use rand::Rng;
use thiserror::Error;

pub use dgauss::{DiscreteGaussian, MAX_SIGMA_SQ};
pub use renyi::{renyi_divergence, renyi_divergence_ln};

use crate::exec::{map_indexed, Execution};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MechanismError {
    #[error("variance must be positive and finite (got {0})")]
    NonPositiveVariance(f64),
    #[error("variance {0} exceeds the supported maximum")]
    VarianceTooLarge(f64),
    #[error("privacy-loss parameter must be positive and finite (got {0})")]
    NonPositiveRho(f64),
    #[error("pmf lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("P has mass where Q has none (grid index {0})")]
    SupportMismatch(usize),
    #[error("negative or NaN mass at grid index {0}")]
    InvalidMass(usize),
    #[error("Rényi order must be finite and > 1 (got {0})")]
    InvalidOrder(f64),
}

/// Adds i.i.d. `N_Z(1/(2ρ))` noise to every component of `a`.
pub fn vector_discrete_gaussian<R: Rng + ?Sized>(
    a: &[i64],
    rho: f64,
    rng: &mut R,
) -> Result<Vec<i64>, MechanismError> {
    let dist = DiscreteGaussian::for_rho(rho)?;
    Ok(a.iter().map(|&x| x + dist.sample(rng)).collect())
}

/// Keyed variant of [`vector_discrete_gaussian`]: component `i` draws from
/// `stream(i)`, so the result is the same in serial and parallel execution.
pub fn vector_discrete_gaussian_keyed<R, F>(
    a: &[i64],
    rho: f64,
    exec: Execution,
    stream: F,
) -> Result<Vec<i64>, MechanismError>
where
    R: Rng,
    F: Fn(usize) -> R + Sync + Send,
{
    let dist = DiscreteGaussian::for_rho(rho)?;
    Ok(map_indexed(a.len(), exec, |i| {
        let mut rng = stream(i);
        a[i] + dist.sample(&mut rng)
    }))
}
