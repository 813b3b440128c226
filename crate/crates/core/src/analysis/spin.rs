use serde::{Deserialize, Serialize};

use super::fit::{fit_leading_exponent, ExponentFit};
use crate::error::{Error, Result};
use crate::gpc::{d_min, find_catalog};
use crate::model::{Configuration, CouplingParams, QuantumNumbers};
use crate::spectral::{natural_occupations_for, truncate_spectrum, SolverOptions, TruncationTarget};

/// Orbital dimension of the setting D_min is evaluated in.
pub const SPIN_STUDY_ORBITALS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnetizationFit {
    /// |M| = |N↑ − N↓|/2.
    pub magnetization: f64,
    pub samples: Vec<(f64, f64)>,
    pub fit: ExponentFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinScaling {
    pub n_particles: usize,
    pub fits: Vec<MagnetizationFit>,
    /// Fitted exponents strictly increase with |M|.
    pub monotone: bool,
}

/// Lowest boxes of a one-dimensional trap for each species.
pub fn polarized_configuration(n_up: usize, n_down: usize) -> Result<Configuration> {
    let boxes = |k: usize| (0..k as u32).map(|m| QuantumNumbers(vec![m])).collect();
    Configuration::spinful(boxes(n_up), boxes(n_down))
}

/// D_min(δ) of spin-½ fermions on a line for every |M|, with the leading
/// exponent fitted per |M|.
pub fn spin_scaling_study(n_particles: usize, deltas: &[f64], opts: &SolverOptions) -> Result<SpinScaling> {
    if n_particles < 2 {
        return Err(Error::InvalidInput("spin study needs at least two particles".into()));
    }
    let catalog = find_catalog(n_particles, SPIN_STUDY_ORBITALS)?;
    let mut fits = Vec::new();
    for n_down in (0..=n_particles / 2).rev() {
        let n_up = n_particles - n_down;
        let config = polarized_configuration(n_up, n_down)?;
        let samples = deltas
            .iter()
            .map(|&delta| {
                let couplings = CouplingParams::from_deltas(n_particles, &[1.0], &[delta])?;
                let s = natural_occupations_for(&config, &couplings, opts)?;
                let t = truncate_spectrum(
                    &s,
                    TruncationTarget::Setting {
                        n_active: n_particles,
                        d_active: SPIN_STUDY_ORBITALS,
                    },
                )?;
                Ok((delta, d_min(&t.values, &catalog)?.0))
            })
            .collect::<Result<Vec<_>>>()?;
        let fit = fit_leading_exponent(&samples)?;
        fits.push(MagnetizationFit {
            magnetization: config.magnetization().abs(),
            samples,
            fit,
        });
    }
    let monotone = fits.windows(2).all(|w| w[1].fit.exponent > w[0].fit.exponent);
    Ok(SpinScaling {
        n_particles,
        fits,
        monotone,
    })
}
