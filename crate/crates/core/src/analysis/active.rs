use serde::{Deserialize, Serialize};

use super::fit::log_log_fit;
use crate::error::{Error, Result};

/// Deviations below this are treated as numerically zero.
pub const DEVIATION_FLOOR: f64 = 1e-14;
/// Fitted exponents farther than this from an even integer are ambiguous.
pub const ORDER_TOLERANCE: f64 = 0.4;

/// Leading order of one occupation number's deviation from 1 (first N
/// values) or from 0 (the rest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonOrder {
    pub index: usize,
    pub near_one: bool,
    /// Fitted exponent, NaN when fewer than two samples rose above the floor.
    pub exponent: f64,
    /// Nearest even order, `None` when the deviation vanished at all couplings.
    pub order: Option<u32>,
    pub ambiguous: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveSpace {
    pub order: u32,
    /// N′: values near 1 deviating at order ≤ r.
    pub n_active: usize,
    /// d′: N′ plus the values near 0 deviating at order ≤ r.
    pub d_active: usize,
    /// Indices whose classification is ambiguous and could change N′ or d′.
    pub ambiguous: Vec<usize>,
}

/// Classifies the first `count` occupation numbers from spectra sampled at
/// several couplings; `spectra` holds (δ, values sorted decreasingly).
pub fn classify_orders(spectra: &[(f64, Vec<f64>)], n_particles: usize, count: usize) -> Result<Vec<NonOrder>> {
    if spectra.len() < 2 {
        return Err(Error::InvalidInput("order classification needs spectra at ≥ 2 couplings".into()));
    }
    Ok((0..count)
        .map(|i| {
            let near_one = i < n_particles;
            let samples: Vec<(f64, f64)> = spectra
                .iter()
                .map(|(d, v)| {
                    let x = v.get(i).copied().unwrap_or(0.0);
                    (d.abs(), if near_one { 1.0 - x } else { x })
                })
                .filter(|&(d, y)| d > 0.0 && y > DEVIATION_FLOOR)
                .collect();
            match log_log_fit(&samples) {
                Ok((e, _, _)) => {
                    let order = (2.0 * (e / 2.0).round()).max(0.0);
                    NonOrder {
                        index: i,
                        near_one,
                        exponent: e,
                        order: Some(order as u32),
                        ambiguous: (e - order).abs() > ORDER_TOLERANCE,
                    }
                }
                Err(_) => NonOrder {
                    index: i,
                    near_one,
                    exponent: f64::NAN,
                    order: None,
                    ambiguous: samples.len() == 1,
                },
            }
        })
        .collect())
}

/// Active space ∧^{N′}[H^(d′)] at each requested order.
pub fn active_space_structure(spectra: &[(f64, Vec<f64>)], n_particles: usize, orders: &[u32]) -> Result<Vec<ActiveSpace>> {
    let count = spectra.iter().map(|(_, v)| v.len()).min().unwrap_or(0);
    let classes = classify_orders(spectra, n_particles, count)?;
    Ok(orders
        .iter()
        .map(|&r| {
            let within = |c: &&NonOrder| c.order.is_some_and(|o| o <= r);
            let n_active = classes.iter().filter(|c| c.near_one).filter(within).count();
            let d_active = n_active + classes.iter().filter(|c| !c.near_one).filter(within).count();
            let ambiguous = classes
                .iter()
                .filter(|c| c.ambiguous && (c.exponent - r as f64).abs() <= 2.0)
                .map(|c| c.index)
                .collect();
            ActiveSpace {
                order: r,
                n_active,
                d_active,
                ambiguous,
            }
        })
        .collect())
}
