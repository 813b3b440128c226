//! Generalized Pauli constraints: catalogs, distances to the polytope
//! boundary, pinning faces of the Pauli simplex and a random-state oracle.

mod catalog;
mod faces;
mod sampling;

pub use catalog::{
    builtin_catalog, builtin_settings, catalog_dir_override, catalog_file_name, find_catalog, load_catalog, Constraint,
    GpcCatalog, Rational, CATALOG_DIR_ENV,
};
pub use faces::{pinning_faces, FaceList, SigmaFace, PIN_TOL};
pub use sampling::{
    nons_of_state, random_state_nons, random_state_nons_seeded, sample_minimum, subsets, validate_catalog,
    ValidationReport,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::TruncatedSpectrum;

fn check_len(lambda: &[f64], catalog: &GpcCatalog) -> Result<()> {
    if lambda.len() != catalog.d {
        return Err(Error::InvalidInput(format!(
            "occupation vector has length {}, catalog setting needs {}",
            lambda.len(),
            catalog.d
        )));
    }
    Ok(())
}

/// Raw affine values D_j(λ).
pub fn evaluate_constraints(lambda: &[f64], catalog: &GpcCatalog) -> Result<Vec<f64>> {
    check_len(lambda, catalog)?;
    Ok(catalog.constraints.iter().map(|c| c.value(lambda)).collect())
}

/// D_j(λ)/‖κ_j‖₂.
pub fn evaluate_constraints_euclidean(lambda: &[f64], catalog: &GpcCatalog) -> Result<Vec<f64>> {
    check_len(lambda, catalog)?;
    Ok(catalog.constraints.iter().map(|c| c.value(lambda) / c.norm2()).collect())
}

fn argmin(values: &[f64]) -> (f64, usize) {
    values
        .iter()
        .enumerate()
        .fold((f64::INFINITY, 0), |(m, k), (j, &v)| if v < m { (v, j) } else { (m, k) })
}

/// Minimal raw constraint value and the constraint attaining it.
pub fn d_min(lambda: &[f64], catalog: &GpcCatalog) -> Result<(f64, usize)> {
    Ok(argmin(&evaluate_constraints(lambda, catalog)?))
}

pub fn d_min_euclidean(lambda: &[f64], catalog: &GpcCatalog) -> Result<(f64, usize)> {
    Ok(argmin(&evaluate_constraints_euclidean(lambda, catalog)?))
}

/// Σ_{i≤N} (1 − λ_i), the ℓ¹ distance to the Hartree–Fock face.
pub fn d_hf(lambda: &[f64], n: usize) -> f64 {
    lambda.iter().take(n).map(|l| 1.0 - l).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum QEstimate {
    Finite(f64),
    /// D_min ≤ 0: the vector is on the boundary.
    Pinned,
    /// No pinning face was found.
    Undefined,
}

impl QEstimate {
    pub fn value(&self) -> f64 {
        match self {
            QEstimate::Finite(q) => *q,
            QEstimate::Pinned => f64::INFINITY,
            QEstimate::Undefined => f64::NAN,
        }
    }
}

pub const Q_ESTIMATOR: &str = "log10(min pinning-face l1 distance / D_min)";

/// Q = log₁₀(min_F dist₁(λ, F) / D_min) over pinning faces F.
pub fn q_parameter(lambda: &[f64], catalog: &GpcCatalog, faces: &FaceList) -> Result<QEstimate> {
    let (dmin, _) = d_min(lambda, catalog)?;
    if dmin <= 0.0 {
        return Ok(QEstimate::Pinned);
    }
    let nearest = faces
        .pinning()
        .map(|f| f.distance(lambda))
        .fold(f64::INFINITY, f64::min);
    if !nearest.is_finite() {
        return Ok(QEstimate::Undefined);
    }
    Ok(QEstimate::Finite((nearest / dmin).log10()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinningReport {
    pub setting: (usize, usize),
    pub values: Vec<f64>,
    pub euclidean_values: Vec<f64>,
    pub d_min: f64,
    pub argmin: usize,
    pub d_min_euclidean: f64,
    pub d_hf: f64,
    pub q: QEstimate,
    pub q_estimator: String,
    pub truncation_error: f64,
    pub norm: String,
    pub catalog_complete: bool,
}

impl PinningReport {
    pub fn pinned(&self) -> bool {
        self.d_min <= 0.0
    }
}

/// Full report for a truncated spectrum; D_HF counts the N′ active leading values.
pub fn pinning_report(t: &TruncatedSpectrum, catalog: &GpcCatalog, faces: &FaceList) -> Result<PinningReport> {
    if t.n_active != catalog.n {
        return Err(Error::InvalidInput(format!(
            "truncated spectrum has N′ = {}, catalog is for N = {}",
            t.n_active, catalog.n
        )));
    }
    let values = evaluate_constraints(&t.values, catalog)?;
    let euclidean_values = evaluate_constraints_euclidean(&t.values, catalog)?;
    let (d_min, argmin) = self::argmin(&values);
    let (d_min_euclidean, _) = self::argmin(&euclidean_values);
    Ok(PinningReport {
        setting: catalog.setting(),
        d_min,
        argmin,
        d_min_euclidean,
        d_hf: d_hf(&t.values, t.n_active),
        q: q_parameter(&t.values, catalog, faces)?,
        q_estimator: Q_ESTIMATOR.to_string(),
        truncation_error: t.error,
        norm: "raw".to_string(),
        catalog_complete: catalog.complete,
        values,
        euclidean_values,
    })
}
