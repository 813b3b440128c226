//! Natural occupation numbers by projecting the kernel onto Hermite
//! functions and diagonalizing its parity/spin blocks.
//!
//! For each axis γ and occupied quantum number μ the factor g_γ f_μ is
//! projected once, G_mn = ∫∫ φ_m(x) g_γ(x,x′) f_μ(x,x′) φ_n(x′) dx dx′. The
//! n-dimensional block of a parity sector is then Σ_i ⊗_γ G^(γ)(μ_i^(γ)).
//! The integrals use a product Gauss–Hermite rule in the rotated variables
//! u = (x+x′)/√2, v = (x−x′)/√2, where the total Gaussian is diagonal.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::{hermite_functions_into, GaussHermite};
use crate::kernel::{kernel_blocks, KernelCoefficients, OneBodyKernel, Parity};
use crate::model::{Configuration, CouplingParams, GroundStateSpec, Spin};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermiteBasisSpec {
    pub sizes: Vec<usize>,
    pub scales: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Converged once the leading values move less than this under basis growth.
    pub tolerance: f64,
    /// Starting basis size per axis; chosen from the configuration when absent.
    pub initial_size: Option<usize>,
    pub max_size: usize,
    /// Multiplies the default length scale l̃ of every axis.
    pub scale_factor: f64,
    /// Relative singular-value cutoff for the per-axis compression (n > 1).
    pub compression: f64,
    /// Number of leading values compared between rounds.
    pub compare_count: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: 1e-10,
            initial_size: None,
            max_size: 256,
            scale_factor: 1.0,
            compression: 1e-15,
            compare_count: 64,
        }
    }
}

impl SolverOptions {
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BlockLabel {
    pub spin: Option<Spin>,
    pub parity: Vec<Parity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Occupation numbers in decreasing order.
    pub values: Vec<f64>,
    pub labels: Vec<BlockLabel>,
    pub n_particles: usize,
    /// Sum of the computed values (N up to basis truncation).
    pub trace: f64,
    /// Normalized trace of each spin species (N↑, N↓), or N when spinless.
    pub species_traces: Vec<(Option<Spin>, f64)>,
    /// Largest change of a leading value under the last basis increase.
    pub convergence: f64,
    pub basis: Option<HermiteBasisSpec>,
    pub configuration: Option<Configuration>,
    pub couplings: Option<CouplingParams>,
}

impl Spectrum {
    fn from_pairs(mut pairs: Vec<(f64, BlockLabel)>, n_particles: usize) -> Self {
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        let trace = pairs.iter().map(|p| p.0).sum();
        let (values, labels) = pairs.into_iter().unzip();
        Spectrum {
            values,
            labels,
            n_particles,
            trace,
            species_traces: Vec::new(),
            convergence: 0.0,
            basis: None,
            configuration: None,
            couplings: None,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Leading `k` values, zero-padded.
    pub fn top(&self, k: usize) -> Vec<f64> {
        (0..k).map(|i| self.values.get(i).copied().unwrap_or(0.0)).collect()
    }

    /// Position of each value within its own block, in decreasing order.
    pub fn block_ranks(&self) -> Vec<usize> {
        let mut seen: BTreeMap<&BlockLabel, usize> = BTreeMap::new();
        self.labels
            .iter()
            .map(|l| {
                let r = seen.entry(l).or_insert(0);
                *r += 1;
                *r - 1
            })
            .collect()
    }
}

/// Projector tables for one axis at a fixed basis size and quadrature order.
struct AxisProjection {
    hx: DMatrix<f64>,
    hxp: DMatrix<f64>,
    base: Vec<f64>,
    x: Vec<f64>,
    xp: Vec<f64>,
}

impl AxisProjection {
    fn new(coeff: &KernelCoefficients, size: usize, scale: f64, q: usize) -> Self {
        let rule = GaussHermite::cached(q);
        let alpha = coeff.gauss_diag() + 0.5 / (scale * scale);
        let su = (alpha - coeff.c).sqrt();
        let sv = (alpha + coeff.c).sqrt();
        let npts = q * q;
        let mut hx = DMatrix::zeros(size, npts);
        let mut hxp = DMatrix::zeros(size, npts);
        let mut base = vec![0.0; npts];
        let mut xs = vec![0.0; npts];
        let mut xps = vec![0.0; npts];
        let norm = 1.0 / scale.sqrt();
        for i in 0..q {
            for j in 0..q {
                let col = i * q + j;
                let u = rule.nodes[i] / su;
                let v = rule.nodes[j] / sv;
                let x = (u + v) * std::f64::consts::FRAC_1_SQRT_2;
                let xp = (u - v) * std::f64::consts::FRAC_1_SQRT_2;
                hermite_functions_into(x / scale, hx.column_mut(col).as_mut_slice());
                hermite_functions_into(xp / scale, hxp.column_mut(col).as_mut_slice());
                base[col] = rule.scaled_weights[i] * rule.scaled_weights[j] / (su * sv) * coeff.gaussian(x, xp) * norm * norm;
                xs[col] = x;
                xps[col] = xp;
            }
        }
        AxisProjection {
            hx,
            hxp,
            base,
            x: xs,
            xp: xps,
        }
    }

    fn matrix(&self, coeff: &KernelCoefficients, mu: u32) -> DMatrix<f64> {
        let mut weighted = self.hx.clone();
        for (col, mut c) in weighted.column_iter_mut().enumerate() {
            c *= self.base[col] * coeff.polynomial(mu, self.x[col], self.xp[col]);
        }
        let g = &weighted * self.hxp.transpose();
        0.5 * (&g + g.transpose())
    }
}

fn quadrature_order(size: usize, mu_max: u32) -> usize {
    size + mu_max as usize + 1
}

/// Projection of g_γ f_μ onto the first `size` Hermite functions of length
/// `scale`, without parity splitting.
pub fn full_axis_matrix(coeff: &KernelCoefficients, mu: u32, size: usize, scale: f64) -> DMatrix<f64> {
    AxisProjection::new(coeff, size, scale, quadrature_order(size, mu)).matrix(coeff, mu)
}

fn parity_split(g: &DMatrix<f64>) -> [DMatrix<f64>; 2] {
    let d = g.nrows();
    let pick = |p: usize| {
        let idx: Vec<usize> = (p..d).step_by(2).collect();
        DMatrix::from_fn(idx.len(), idx.len(), |i, j| g[(idx[i], idx[j])])
    };
    [pick(0), pick(1)]
}

/// Even and odd parity blocks of G for one axis factor, with the quadrature
/// order verified by a one-step increase.
pub fn one_dim_block_matrices(coeff: &KernelCoefficients, mu: u32, size: usize, scale: f64) -> Result<[DMatrix<f64>; 2]> {
    if size < mu as usize + 2 || !(scale > 0.0) {
        return Err(Error::InvalidInput(format!("basis of size {size} cannot hold μ = {mu}")));
    }
    let q = quadrature_order(size, mu);
    let g = AxisProjection::new(coeff, size, scale, q).matrix(coeff, mu);
    let g2 = AxisProjection::new(coeff, size, scale, q + 1).matrix(coeff, mu);
    let change = (&g - &g2).amax();
    if change > 1e-13 * g.amax().max(1.0) {
        return Err(Error::Numerical(format!(
            "quadrature of order {q} not converged for μ = {mu}: change {change:.2e}"
        )));
    }
    Ok(parity_split(&g))
}

fn compress(blocks: &[&DMatrix<f64>], cutoff: f64) -> Option<DMatrix<f64>> {
    let d = blocks[0].nrows();
    if d == 0 {
        return None;
    }
    let mut stacked = DMatrix::zeros(d, d * blocks.len());
    for (k, b) in blocks.iter().enumerate() {
        stacked.columns_mut(k * d, d).copy_from(b);
    }
    let svd = stacked.svd(true, false);
    let u = svd.u.expect("left singular vectors");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > cutoff * smax)
        .collect();
    if keep.len() == d {
        return None;
    }
    Some(u.select_columns(keep.iter()))
}

fn default_initial_size(kernels: &[OneBodyKernel], axis: usize) -> usize {
    let mu_max = kernels
        .iter()
        .flat_map(|k| k.orbitals.iter().map(|q| q.0[axis]))
        .max()
        .unwrap_or(0) as usize;
    let dim = kernels.first().map_or(1, |k| k.dimension());
    let floor = if dim == 1 { 24 } else { 12 };
    (2 * mu_max + 8).max(floor)
}

struct Round {
    values: Vec<(f64, BlockLabel)>,
    species_traces: Vec<(Option<Spin>, f64)>,
}

fn diagonalize(kernels: &[OneBodyKernel], basis: &HermiteBasisSpec, compression: f64) -> Result<Round> {
    let dim = basis.sizes.len();
    let coeffs = &kernels[0].coefficients;
    let n_particles: usize = kernels.iter().map(|k| k.orbitals.len()).sum();

    // Per axis: μ → [even, odd] projected blocks.
    let mut tables: Vec<BTreeMap<u32, [DMatrix<f64>; 2]>> = Vec::with_capacity(dim);
    for g in 0..dim {
        let mus: Vec<u32> = {
            let mut v: Vec<u32> = kernels.iter().flat_map(|k| k.orbitals.iter().map(|q| q.0[g])).collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        let mu_max = *mus.last().unwrap_or(&0);
        let proj = AxisProjection::new(&coeffs[g], basis.sizes[g], basis.scales[g], quadrature_order(basis.sizes[g], mu_max));
        let mut table: BTreeMap<u32, [DMatrix<f64>; 2]> = mus
            .par_iter()
            .map(|&mu| (mu, parity_split(&proj.matrix(&coeffs[g], mu))))
            .collect();
        if dim > 1 {
            for p in 0..2 {
                let mats: Vec<&DMatrix<f64>> = table.values().map(|b| &b[p]).collect();
                if let Some(u) = compress(&mats, compression) {
                    for b in table.values_mut() {
                        b[p] = u.transpose() * &b[p] * &u;
                    }
                }
            }
        }
        tables.push(table);
    }

    let traces: Vec<f64> = kernels.iter().map(|k| k.trace()).collect();
    let total: f64 = traces.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::Numerical(format!("kernel trace {total} is not positive")));
    }
    let scale = n_particles as f64 / total;

    let mut jobs: Vec<(BlockLabel, &OneBodyKernel)> = Vec::new();
    for k in kernels.iter().filter(|k| !k.orbitals.is_empty()) {
        for parity in Parity::all(dim) {
            jobs.push((BlockLabel { spin: k.spin, parity }, k));
        }
    }
    let results: Vec<Result<Vec<(f64, BlockLabel)>>> = jobs
        .par_iter()
        .map(|(label, k)| {
            let mut m: Option<DMatrix<f64>> = None;
            for q in &k.orbitals {
                let mut term = tables[0][&q.0[0]][label.parity[0].index()].clone();
                for g in 1..dim {
                    term = term.kronecker(&tables[g][&q.0[g]][label.parity[g].index()]);
                }
                m = Some(match m {
                    None => term,
                    Some(acc) => acc + term,
                });
            }
            let mut m = m.expect("non-empty block") * scale;
            m = 0.5 * (&m + m.transpose());
            if m.nrows() == 0 {
                return Ok(Vec::new());
            }
            let eig = SymmetricEigen::new(m.clone());
            let resid = (&m * &eig.eigenvectors - &eig.eigenvectors * DMatrix::from_diagonal(&eig.eigenvalues)).amax();
            let norm = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
            if resid > 1e-9 * norm {
                return Err(Error::Numerical(format!(
                    "eigensolver residual {resid:.2e} exceeds 1e-9·‖M‖ in block {label:?}"
                )));
            }
            Ok(eig.eigenvalues.iter().map(|&v| (v, label.clone())).collect())
        })
        .collect();
    let mut values = Vec::new();
    for r in results {
        values.extend(r?);
    }
    Ok(Round {
        values,
        species_traces: kernels.iter().zip(&traces).map(|(k, t)| (k.spin, t * scale)).collect(),
    })
}

/// Spectrum of the given kernel blocks at a fixed basis.
pub fn spectrum_at_basis(kernels: &[OneBodyKernel], basis: &HermiteBasisSpec, opts: &SolverOptions) -> Result<Spectrum> {
    validate_blocks(kernels, basis)?;
    let n: usize = kernels.iter().map(|k| k.orbitals.len()).sum();
    let round = diagonalize(kernels, basis, opts.compression)?;
    let mut s = Spectrum::from_pairs(round.values, n);
    s.species_traces = round.species_traces;
    s.basis = Some(basis.clone());
    s.convergence = f64::NAN;
    Ok(s)
}

fn validate_blocks(kernels: &[OneBodyKernel], basis: &HermiteBasisSpec) -> Result<()> {
    let first = kernels
        .first()
        .ok_or_else(|| Error::InvalidInput("no kernel blocks".into()))?;
    let dim = first.dimension();
    if basis.sizes.len() != dim || basis.scales.len() != dim {
        return Err(Error::InvalidInput("basis dimension differs from kernel dimension".into()));
    }
    for k in kernels {
        for q in &k.orbitals {
            for g in 0..dim {
                if basis.sizes[g] < q.0[g] as usize + 2 {
                    return Err(Error::InvalidInput(format!(
                        "basis size {} on axis {g} is too small for μ = {}",
                        basis.sizes[g], q.0[g]
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Adaptive diagonalization: grows every axis basis by ×2 until the leading
/// values move less than `opts.tolerance`.
pub fn natural_occupations_of(kernels: &[OneBodyKernel], opts: &SolverOptions) -> Result<Spectrum> {
    let first = kernels
        .first()
        .ok_or_else(|| Error::InvalidInput("no kernel blocks".into()))?;
    let dim = first.dimension();
    let scales: Vec<f64> = first
        .coefficients
        .iter()
        .map(|c| opts.scale_factor / (2.0 * c.a).sqrt())
        .collect();
    let mut sizes: Vec<usize> = (0..dim)
        .map(|g| opts.initial_size.unwrap_or_else(|| default_initial_size(kernels, g)))
        .collect();
    let mut prev: Option<Spectrum> = None;
    loop {
        let basis = HermiteBasisSpec {
            sizes: sizes.clone(),
            scales: scales.clone(),
        };
        let mut current = spectrum_at_basis(kernels, &basis, opts)?;
        if let Some(p) = &prev {
            let k = opts.compare_count.min(p.len()).min(current.len());
            let shift = (0..k)
                .map(|i| (p.values[i] - current.values[i]).abs())
                .fold(0.0, f64::max);
            current.convergence = shift;
            if shift < opts.tolerance {
                return Ok(current);
            }
        }
        let next: Vec<usize> = sizes.iter().map(|&s| 2 * s).collect();
        if next.iter().any(|&s| s > opts.max_size) {
            let shift = current.convergence;
            return Err(Error::NotConverged {
                shift,
                sizes,
                best: Box::new(current),
            });
        }
        prev = Some(current);
        sizes = next;
    }
}

/// Natural occupation numbers of a ground state (spinless or spinful).
pub fn natural_occupations(gs: &GroundStateSpec, opts: &SolverOptions) -> Result<Spectrum> {
    natural_occupations_for(&gs.configuration, &gs.couplings, opts)
}

pub fn natural_occupations_for(configuration: &Configuration, couplings: &CouplingParams, opts: &SolverOptions) -> Result<Spectrum> {
    let kernels = kernel_blocks(configuration, couplings)?;
    let mut s = natural_occupations_of(&kernels, opts)?;
    s.configuration = Some(configuration.clone());
    s.couplings = Some(couplings.clone());
    Ok(s)
}

/// Ratio q of the geometric bosonic spectrum at axis coupling κ̄:
/// q = 1 − 2N / (N + √(N² − (N−1)[2 − (1+κ̄)^{1/2} − (1+κ̄)^{−1/2}])).
pub fn bosonic_ratio(n_particles: usize, kappa_bar: f64) -> f64 {
    let n = n_particles as f64;
    let s = (1.0 + kappa_bar).sqrt();
    let bracket = 2.0 - s - 1.0 / s;
    1.0 - 2.0 * n / (n + (n * n - (n - 1.0) * bracket).sqrt())
}

/// λ_k = N (1 − q) q^k for k < `len`, with one-dimensional parity labels.
pub fn bosonic_spectrum_closed_form(n_particles: usize, kappa_bar: f64, len: usize) -> Result<Spectrum> {
    if !(kappa_bar > -1.0) {
        return Err(Error::Domain(format!("κ̄ = {kappa_bar} must exceed −1")));
    }
    let q = bosonic_ratio(n_particles, kappa_bar);
    let n = n_particles as f64;
    let pairs = (0..len)
        .map(|k| {
            let parity = if k % 2 == 0 { Parity::Even } else { Parity::Odd };
            (n * (1.0 - q) * q.powi(k as i32), BlockLabel { spin: None, parity: vec![parity] })
        })
        .collect();
    Ok(Spectrum::from_pairs(pairs, n_particles))
}

/// Spectrum of ρ = N^{1−m} ρ₁ ⊗ … ⊗ ρ_m, keeping the `keep` largest values.
pub fn product_spectrum(factors: &[&Spectrum], keep: usize) -> Result<Spectrum> {
    let first = factors
        .first()
        .ok_or_else(|| Error::InvalidInput("product of no spectra".into()))?;
    let n = first.n_particles;
    if let Some(f) = factors.iter().find(|f| f.n_particles != n) {
        return Err(Error::InvalidInput(format!(
            "factor spectra disagree on particle number ({} vs {n})",
            f.n_particles
        )));
    }
    let take = |s: &Spectrum, scale: f64| -> Vec<(f64, BlockLabel)> {
        s.values
            .iter()
            .zip(&s.labels)
            .take(keep)
            .map(|(v, l)| (v * scale, l.clone()))
            .collect()
    };
    let mut acc = take(first, 1.0);
    for f in &factors[1..] {
        let other = take(f, 1.0 / n as f64);
        let mut next: Vec<(f64, BlockLabel)> = Vec::with_capacity(acc.len() * other.len());
        for (a, la) in &acc {
            for (b, lb) in &other {
                let mut parity = la.parity.clone();
                parity.extend(&lb.parity);
                next.push((a * b, BlockLabel { spin: la.spin.or(lb.spin), parity }));
            }
        }
        next.sort_by(|x, y| y.0.total_cmp(&x.0));
        next.truncate(keep);
        acc = next;
    }
    Ok(Spectrum::from_pairs(acc, n))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    /// Flipped axes, or every axis.
    pub axes: Vec<usize>,
    pub max_difference: f64,
}

/// Compares the spectrum with the one at δ → −δ on the given axes
/// (all axes when `axes` is empty).
pub fn duality_check(configuration: &Configuration, couplings: &CouplingParams, axes: &[usize], opts: &SolverOptions) -> Result<DualityReport> {
    let axes: Vec<usize> = if axes.is_empty() {
        (0..couplings.axes.len()).collect()
    } else {
        axes.to_vec()
    };
    if let Some(&a) = axes.iter().find(|&&a| a >= couplings.axes.len()) {
        return Err(Error::InvalidInput(format!("axis {a} out of range")));
    }
    let flipped = axes.iter().fold(couplings.clone(), |c, &a| c.flipped(a));
    let s1 = natural_occupations_for(configuration, couplings, opts)?;
    let s2 = natural_occupations_for(configuration, &flipped, opts)?;
    let k = opts.compare_count.min(s1.len()).min(s2.len());
    let max_difference = (0..k)
        .map(|i| (s1.values[i] - s2.values[i]).abs())
        .fold(0.0, f64::max);
    Ok(DualityReport { axes, max_difference })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TruncationTarget {
    /// Keep d′ values after dropping N − N′ leading ones.
    Setting { n_active: usize, d_active: usize },
    /// Drop leading values with 1 − λ < `one` and trailing values with λ < `zero`.
    Thresholds { one: f64, zero: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedSpectrum {
    pub values: Vec<f64>,
    pub n_active: usize,
    pub dropped_leading: usize,
    /// ε = Σ(1 − λ) over dropped leading values + Σλ over dropped trailing values.
    pub error: f64,
    /// The cut separates two values equal to 1e-12 (relative).
    pub splits_plateau: bool,
    pub renormalized: bool,
}

impl TruncatedSpectrum {
    /// Copy with the kept values rescaled to sum to N′.
    pub fn renormalized(&self) -> Self {
        let sum: f64 = self.values.iter().sum();
        let f = self.n_active as f64 / sum;
        TruncatedSpectrum {
            values: self.values.iter().map(|v| v * f).collect(),
            renormalized: true,
            ..self.clone()
        }
    }
}

fn nearly_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300)
}

pub fn truncate_spectrum(spectrum: &Spectrum, target: TruncationTarget) -> Result<TruncatedSpectrum> {
    let v = &spectrum.values;
    let (lead, end) = match target {
        TruncationTarget::Setting { n_active, d_active } => {
            if d_active < n_active {
                return Err(Error::InvalidInput(format!("d′ = {d_active} is smaller than N′ = {n_active}")));
            }
            if n_active > spectrum.n_particles {
                return Err(Error::InvalidInput(format!("N′ = {n_active} exceeds N = {}", spectrum.n_particles)));
            }
            let lead = spectrum.n_particles - n_active;
            (lead, lead + d_active)
        }
        TruncationTarget::Thresholds { one, zero } => {
            let lead = v.iter().take_while(|&&x| 1.0 - x < one).count().min(spectrum.n_particles);
            let end = v.iter().rposition(|&x| x >= zero).map_or(lead, |i| i + 1).max(lead);
            for cut in [lead, end] {
                if cut > 0 && cut < v.len() && nearly_equal(v[cut - 1], v[cut]) {
                    return Err(Error::InvalidInput(format!(
                        "threshold cuts through equal values at position {cut} ({:.3e})",
                        v[cut]
                    )));
                }
            }
            (lead, end)
        }
    };
    let padded = |i: usize| v.get(i).copied().unwrap_or(0.0);
    let values: Vec<f64> = (lead..end).map(padded).collect();
    let error = (0..lead).map(|i| 1.0 - padded(i)).sum::<f64>() + v.iter().skip(end).map(|x| x.max(0.0)).sum::<f64>();
    let splits = [lead, end]
        .iter()
        .any(|&c| c > 0 && c < v.len() && nearly_equal(v[c - 1], v[c]));
    Ok(TruncatedSpectrum {
        n_active: spectrum.n_particles - lead,
        dropped_leading: lead,
        values,
        error,
        splits_plateau: splits,
        renormalized: false,
    })
}
