use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::catalog::GpcCatalog;
use crate::error::{Error, Result};

/// N-subsets of d orbitals as bit masks, in increasing order.
pub fn subsets(n: usize, d: usize) -> Vec<u32> {
    (0u32..1 << d).filter(|s| s.count_ones() as usize == n).collect()
}

/// Sorted eigenvalues of the 1-RDM of Σ_S ψ_S |S⟩ (amplitudes in the order
/// of [`subsets`]), normalized so that they sum to N.
pub fn nons_of_state(n: usize, d: usize, amplitudes: &[Complex64]) -> Result<Vec<f64>> {
    let basis = subsets(n, d);
    if amplitudes.len() != basis.len() {
        return Err(Error::InvalidInput(format!(
            "{} amplitudes for {} basis states",
            amplitudes.len(),
            basis.len()
        )));
    }
    let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
    if !(norm > 0.0) {
        return Err(Error::InvalidInput("state has zero norm".into()));
    }
    let mut index = vec![usize::MAX; 1 << d];
    for (i, &s) in basis.iter().enumerate() {
        index[s as usize] = i;
    }
    let below = |s: u32, k: usize| (s & ((1u32 << k) - 1)).count_ones();
    let mut rho = DMatrix::<Complex64>::zeros(d, d);
    for (si, &s) in basis.iter().enumerate() {
        let amp = amplitudes[si];
        if amp == Complex64::new(0.0, 0.0) {
            continue;
        }
        for j in (0..d).filter(|&j| s >> j & 1 == 1) {
            let rest = s & !(1 << j);
            for i in (0..d).filter(|&i| rest >> i & 1 == 0) {
                let t = rest | 1 << i;
                // a_i† a_j |S⟩ = (−1)^{#below j in S + #below i in S∖j} |T⟩.
                let sign = if (below(s, j) + below(rest, i)) % 2 == 0 { 1.0 } else { -1.0 };
                rho[(i, j)] += amplitudes[index[t as usize]].conj() * amp * sign;
            }
        }
    }
    rho /= Complex64::new(norm, 0.0);
    let mut values: Vec<f64> = SymmetricEigen::new(rho).eigenvalues.iter().cloned().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

/// Occupation numbers of a pure state with complex-normal amplitudes.
pub fn random_state_nons<R: Rng>(n: usize, d: usize, rng: &mut R) -> Vec<f64> {
    let amps: Vec<Complex64> = (0..subsets(n, d).len())
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    nons_of_state(n, d, &amps).expect("random state is normalizable")
}

pub fn random_state_nons_seeded(n: usize, d: usize, seed: u64) -> Vec<f64> {
    random_state_nons(n, d, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub setting: (usize, usize),
    /// Single-determinant states whose occupation numbers satisfy every constraint.
    pub slater_ok: usize,
    pub slater_total: usize,
    pub samples: usize,
    pub min_value: f64,
    /// Samples with some D_j below −`tolerance`.
    pub violations: usize,
    pub tolerance: f64,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.slater_ok == self.slater_total && self.violations == 0
    }
}

const CHUNK: usize = 1000;

/// Minimum of all D_j over `samples` random pure states; each chunk of
/// samples draws from its own generator so results do not depend on threading.
pub fn sample_minimum(catalog: &GpcCatalog, samples: usize, seed: u64, tolerance: f64) -> (f64, usize) {
    let (n, d) = catalog.setting();
    let chunks = samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = CHUNK.min(samples - c * CHUNK);
            let mut min = f64::INFINITY;
            let mut bad = 0;
            for _ in 0..count {
                let l = random_state_nons(n, d, &mut rng);
                let m = catalog
                    .constraints
                    .iter()
                    .map(|k| k.value(&l))
                    .fold(f64::INFINITY, f64::min);
                if m < -tolerance {
                    bad += 1;
                }
                min = min.min(m);
            }
            (min, bad)
        })
        .reduce(|| (f64::INFINITY, 0), |a, b| (a.0.min(b.0), a.1 + b.1))
}

/// Slater-determinant check over all C(d, N) single-subset states plus
/// random-state sampling.
pub fn validate_catalog(catalog: &GpcCatalog, samples: usize, seed: u64, tolerance: f64) -> ValidationReport {
    let (n, d) = catalog.setting();
    let basis = subsets(n, d);
    let slater_ok = (0..basis.len())
        .into_par_iter()
        .filter(|&k| {
            let mut amps = vec![Complex64::new(0.0, 0.0); basis.len()];
            amps[k] = Complex64::new(1.0, 0.0);
            let l = nons_of_state(n, d, &amps).expect("unit amplitude");
            catalog.constraints.iter().all(|c| c.value(&l) >= -tolerance)
        })
        .count();
    let (min_value, violations) = if samples > 0 {
        sample_minimum(catalog, samples, seed, tolerance)
    } else {
        (f64::INFINITY, 0)
    };
    ValidationReport {
        setting: (n, d),
        slater_ok,
        slater_total: basis.len(),
        samples,
        min_value,
        violations,
        tolerance,
    }
}
