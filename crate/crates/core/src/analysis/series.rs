use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gpc::Rational;
use crate::model::{Configuration, QuantumNumbers, SystemSpec};
use crate::spectral::{natural_occupations_for, SolverOptions};

/// Weak-coupling expansion of one occupation number: λ = 1 − Σ c δ^p when
/// `from_one`, otherwise λ = Σ c δ^p.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesEntry {
    pub from_one: bool,
    pub terms: Vec<(u32, Rational)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesTable {
    pub label: String,
    pub n_particles: usize,
    pub dimension: usize,
    /// Isotropic trap frequencies are assumed.
    pub boxes: Vec<Vec<u32>>,
    pub entries: Vec<SeriesEntry>,
    /// Power of δ of the first omitted correction.
    pub validity_order: u32,
}

type Row = (bool, &'static [(u32, i64, i64)]);

fn build(label: &str, n: usize, dim: usize, boxes: &[&[u32]], rows: &[Row], validity: u32) -> SeriesTable {
    SeriesTable {
        label: label.to_string(),
        n_particles: n,
        dimension: dim,
        boxes: boxes.iter().map(|b| b.to_vec()).collect(),
        entries: rows
            .iter()
            .map(|&(from_one, terms)| SeriesEntry {
                from_one,
                terms: terms.iter().map(|&(p, a, b)| (p, Rational::new(a, b))).collect(),
            })
            .collect(),
        validity_order: validity,
    }
}

/// Three fermions on a line, through δ⁸.
pub fn one_dim_three_fermions() -> SeriesTable {
    const ROWS: &[Row] = &[
        (true, &[(6, 40, 729), (8, -1390, 59049)]),
        (true, &[(4, 2, 9), (6, -232, 729), (8, 3926, 10935)]),
        (true, &[(4, 2, 9), (6, -64, 243), (8, 81902, 295245)]),
        (false, &[(4, 2, 9), (6, -64, 243), (8, 73802, 295245)]),
        (false, &[(4, 2, 9), (6, -232, 729), (8, 3976, 10935)]),
        (false, &[(6, 40, 729), (8, -2200, 59049)]),
        (false, &[(8, 80, 2187)]),
    ];
    build("1D N=3", 3, 1, &[&[0], &[1], &[2]], ROWS, 10)
}

/// Three fermions in an isotropic plane, through δ⁶.
pub fn isotropic_plane_three_fermions() -> SeriesTable {
    const PAIR_ONE: &[(u32, i64, i64)] = &[(2, 4, 9), (4, -4, 27), (6, 152, 3645)];
    const PAIR_A: &[(u32, i64, i64)] = &[(2, 4, 9), (4, -8, 27), (6, 16, 135)];
    const PAIR_B: &[(u32, i64, i64)] = &[(4, 4, 27), (6, -88, 729)];
    const PAIR_C: &[(u32, i64, i64)] = &[(4, 4, 27), (6, -40, 243)];
    const ROWS: &[Row] = &[
        (true, &[(4, 32, 81), (6, -224, 729)]),
        (true, PAIR_ONE),
        (true, PAIR_ONE),
        (false, PAIR_A),
        (false, PAIR_A),
        (false, PAIR_B),
        (false, PAIR_B),
        (false, PAIR_C),
        (false, PAIR_C),
        (false, &[(4, 8, 81), (6, -16, 243)]),
    ];
    build("2D N=3 isotropic", 3, 2, &[&[0, 0], &[1, 0], &[0, 1]], ROWS, 8)
}

/// Table for N particles in `dimension` isotropic dimensions, if one is embedded.
pub fn series_table(n_particles: usize, dimension: usize) -> Option<SeriesTable> {
    match (n_particles, dimension) {
        (3, 1) => Some(one_dim_three_fermions()),
        (3, 2) => Some(isotropic_plane_three_fermions()),
        _ => None,
    }
}

fn term_sum(terms: &[(u32, Rational)], delta: f64) -> f64 {
    terms
        .iter()
        .map(|(p, c)| c.to_f64().expect("small rational") * delta.powi(*p as i32))
        .sum()
}

pub fn series_eval(table: &SeriesTable, delta: f64) -> Vec<f64> {
    table
        .entries
        .iter()
        .map(|e| {
            let s = term_sum(&e.terms, delta);
            if e.from_one {
                1.0 - s
            } else {
                s
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesResidual {
    pub delta: f64,
    pub per_value: Vec<f64>,
    pub max_abs: f64,
    /// max_abs / δ^validity_order (NaN at δ = 0).
    pub scaled: f64,
}

/// Compares numerically exact occupation numbers of the isotropic system
/// against the table at each δ.
pub fn series_vs_numerics(table: &SeriesTable, deltas: &[f64], opts: &SolverOptions) -> Result<Vec<SeriesResidual>> {
    let expected = Configuration::spinless(table.boxes.iter().cloned().map(QuantumNumbers).collect())?;
    deltas
        .iter()
        .map(|&delta| {
            let spec = SystemSpec::from_delta(table.n_particles, vec![1.0; table.dimension], delta)?;
            let gs = crate::model::ground_state(&spec)?;
            if !gs.configuration.same_boxes(&expected) {
                return Err(Error::InvalidInput(format!(
                    "series assumes configuration {} but the ground state at δ = {delta} is {}",
                    expected.id(),
                    gs.configuration.id()
                )));
            }
            let spectrum = natural_occupations_for(&expected, &gs.couplings, opts)?;
            let reference = series_eval(table, delta);
            let per_value: Vec<f64> = reference
                .iter()
                .zip(spectrum.top(reference.len()))
                .map(|(r, v)| (v - r).abs())
                .collect();
            let max_abs = per_value.iter().cloned().fold(0.0, f64::max);
            Ok(SeriesResidual {
                delta,
                scaled: max_abs / delta.abs().powi(table.validity_order as i32),
                per_value,
                max_abs,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_coupling_is_hartree_fock() {
        for t in [one_dim_three_fermions(), isotropic_plane_three_fermions()] {
            let v = series_eval(&t, 0.0);
            assert!(v.iter().enumerate().all(|(i, &x)| x == if i < 3 { 1.0 } else { 0.0 }));
        }
    }

    #[test]
    fn single_entries() {
        let l = series_eval(&one_dim_three_fermions(), 0.1);
        assert!((l[6] - 80.0 / 2187.0 * 1e-8).abs() < 1e-22);
        let l = series_eval(&isotropic_plane_three_fermions(), 0.1);
        assert!((l[9] - (8.0 / 81.0 * 1e-4 - 16.0 / 243.0 * 1e-6)).abs() < 1e-18);
    }

    #[test]
    fn trace_is_preserved_through_the_kept_orders() {
        // Σλ = N holds order by order; the omitted tails start one order later.
        let t = one_dim_three_fermions();
        let d = 0.05;
        let s: f64 = series_eval(&t, d).iter().sum();
        assert!((s - 3.0).abs() < 1e-11, "{}", s - 3.0);
        let t = isotropic_plane_three_fermions();
        let s: f64 = series_eval(&t, d).iter().sum();
        assert!((s - 3.0).abs() < 1e-7, "{}", s - 3.0);
    }
}
