//! Closed-form one-body kernel ρ(x; x′) of the Harmonium ground state.
//!
//! Per axis γ the kernel is a Gaussian
//! g_γ(x, x′) = exp[−a (x² + x′²) + 2c x x′], a = A − B/N² − C, c = C,
//! times, for every occupied box i, a polynomial f_{μ_i^(γ)}(x, x′). The
//! polynomial comes from the Gaussian average ∫du e^{−u²} H_μ(pu + r) H_μ(pu + r′),
//! which is expanded in p² so that attractive couplings (p² < 0) stay real.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::{hermite_polys, GaussHermite};
use crate::model::{AxisCoupling, Configuration, CouplingParams, GroundStateSpec, QuantumNumbers, Spin};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// p², negative for attractive coupling.
    pub p2: f64,
    /// r(v, w) = r_scale · (v − β (v + w)).
    pub r_scale: f64,
    pub beta: f64,
    /// Number of particles the coefficients were built for.
    pub n_particles: usize,
}

impl KernelCoefficients {
    pub fn new(n_particles: usize, axis: &AxisCoupling) -> Result<Self> {
        let n = n_particles as f64;
        let a = 0.5 / (axis.length_tilde * axis.length_tilde);
        let b = axis.b;
        let denom = n * n * a - (n - 1.0) * b;
        if !(denom > 0.0) {
            return Err(Error::Domain(format!("N²A − (N−1)B = {denom} must be positive")));
        }
        Ok(KernelCoefficients {
            a,
            b,
            c: (n - 1.0) * b * b / (2.0 * n * n * denom),
            p2: b / denom,
            r_scale: (2.0 * a).sqrt(),
            beta: b / (2.0 * denom),
            n_particles,
        })
    }

    pub fn r(&self, v: f64, w: f64) -> f64 {
        self.r_scale * (v - self.beta * (v + w))
    }

    /// Diagonal coefficient a of the Gaussian factor.
    pub fn gauss_diag(&self) -> f64 {
        let n = self.n_particles as f64;
        self.a - self.b / (n * n) - self.c
    }

    pub fn gaussian(&self, x: f64, xp: f64) -> f64 {
        (-self.gauss_diag() * (x * x + xp * xp) + 2.0 * self.c * x * xp).exp()
    }

    /// f_μ(x, x′) = Σ_{k,l} C(μ,k) C(μ,l) H_k(r) H_l(r′) (p²)^m (2m)!/m! · √π/(2^μ μ!),
    /// with r = r(x, x′), r′ = r(x′, x) and 2m = 2μ − k − l.
    pub fn polynomial(&self, mu: u32, x: f64, xp: f64) -> f64 {
        let mu = mu as usize;
        let h1 = hermite_polys(mu + 1, self.r(x, xp));
        let h2 = hermite_polys(mu + 1, self.r(xp, x));
        let binom = binomial_row(mu);
        let mut p_pow = vec![1.0; mu + 1];
        for m in 1..=mu {
            // (p²)^m (2m)!/m! accumulated as (p²)^m · Π_{j=m+1}^{2m} j.
            p_pow[m] = p_pow[m - 1] * self.p2 * ((2 * m - 1) * 2 * m) as f64 / m as f64;
        }
        let mut s = 0.0;
        for k in 0..=mu {
            for l in (k % 2..=mu).step_by(2) {
                let m = mu - (k + l) / 2;
                s += binom[k] * binom[l] * h1[k] * h2[l] * p_pow[m];
            }
        }
        s * std::f64::consts::PI.sqrt() / (2f64.powi(mu as i32) * factorial(mu))
    }

    /// ∫ g(x, x) f_μ(x, x) dx, exact by Gauss–Hermite.
    pub fn diagonal_integral(&self, mu: u32) -> f64 {
        let w = 2.0 * (self.gauss_diag() - self.c);
        let rule = GaussHermite::cached(mu as usize + 2);
        let s = w.sqrt();
        rule.nodes
            .iter()
            .zip(&rule.weights)
            .map(|(t, wt)| wt * self.polynomial(mu, t / s, t / s))
            .sum::<f64>()
            / s
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn binomial_row(n: usize) -> Vec<f64> {
    let mut row = vec![1.0; n + 1];
    for k in 1..=n {
        row[k] = row[k - 1] * (n + 1 - k) as f64 / k as f64;
    }
    row
}

pub fn kernel_coefficients(couplings: &CouplingParams) -> Result<Vec<KernelCoefficients>> {
    couplings
        .axes
        .iter()
        .map(|a| KernelCoefficients::new(couplings.n_particles, a))
        .collect()
}

/// Σ_i Π_γ f_{μ_i^(γ)}(x_γ, x′_γ).
pub fn evaluate_f(orbitals: &[QuantumNumbers], coeffs: &[KernelCoefficients], x: &[f64], xp: &[f64]) -> f64 {
    orbitals
        .iter()
        .map(|q| {
            q.0.iter()
                .zip(coeffs)
                .enumerate()
                .map(|(g, (&mu, k))| k.polynomial(mu, x[g], xp[g]))
                .product::<f64>()
        })
        .sum()
}

/// Parity of a basis subspace along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn all(dim: usize) -> Vec<Vec<Parity>> {
        (0..1usize << dim)
            .map(|bits| {
                (0..dim)
                    .map(|g| if bits >> g & 1 == 1 { Parity::Odd } else { Parity::Even })
                    .collect()
            })
            .collect()
    }

    pub fn index(self) -> usize {
        match self {
            Parity::Even => 0,
            Parity::Odd => 1,
        }
    }
}

/// Unnormalized kernel of one spin species: Gaussian factor times Σ_i Π_γ f.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneBodyKernel {
    pub coefficients: Vec<KernelCoefficients>,
    pub spin: Option<Spin>,
    /// Occupied boxes; repeated entries are allowed (bosonic kernels).
    pub orbitals: Vec<QuantumNumbers>,
}

impl OneBodyKernel {
    pub fn dimension(&self) -> usize {
        self.coefficients.len()
    }

    pub fn gaussian(&self, x: &[f64], xp: &[f64]) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(g, k)| k.gaussian(x[g], xp[g]))
            .product()
    }

    pub fn value(&self, x: &[f64], xp: &[f64]) -> f64 {
        if self.orbitals.is_empty() {
            return 0.0;
        }
        self.gaussian(x, xp) * evaluate_f(&self.orbitals, &self.coefficients, x, xp)
    }

    /// Projection onto the sector with the given parities: averages over
    /// reflections x_γ → −x_γ of the first argument with the parity's sign.
    pub fn parity_value(&self, parity: &[Parity], x: &[f64], xp: &[f64]) -> f64 {
        let dim = self.dimension();
        let mut total = 0.0;
        let mut y = x.to_vec();
        for bits in 0..1usize << dim {
            let mut sign = 1.0;
            for g in 0..dim {
                let flip = bits >> g & 1 == 1;
                y[g] = if flip { -x[g] } else { x[g] };
                if flip && parity[g] == Parity::Odd {
                    sign = -sign;
                }
            }
            total += sign * self.value(&y, xp);
        }
        total / (1usize << dim) as f64
    }

    /// ∫ ρ(x; x) dx of this unnormalized block.
    pub fn trace(&self) -> f64 {
        self.orbitals
            .iter()
            .map(|q| {
                q.0.iter()
                    .zip(&self.coefficients)
                    .map(|(&mu, k)| k.diagonal_integral(mu))
                    .product::<f64>()
            })
            .sum()
    }
}

pub fn fermionic_kernel(gs: &GroundStateSpec) -> Result<OneBodyKernel> {
    if gs.configuration.spinful {
        return Err(Error::InvalidInput("spinful configuration; use spin_block_kernels".into()));
    }
    Ok(OneBodyKernel {
        coefficients: kernel_coefficients(&gs.couplings)?,
        spin: None,
        orbitals: gs.configuration.up.clone(),
    })
}

/// Kernel of N bosons all occupying the lowest box.
pub fn bosonic_kernel(couplings: &CouplingParams) -> Result<OneBodyKernel> {
    Ok(OneBodyKernel {
        coefficients: kernel_coefficients(couplings)?,
        spin: None,
        orbitals: vec![QuantumNumbers::ground(couplings.axes.len()); couplings.n_particles],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinBlocks {
    pub up: OneBodyKernel,
    pub down: OneBodyKernel,
}

pub fn spin_block_kernels(gs: &GroundStateSpec) -> Result<SpinBlocks> {
    if !gs.configuration.spinful {
        return Err(Error::InvalidInput("spinless configuration has no spin blocks".into()));
    }
    let coefficients = kernel_coefficients(&gs.couplings)?;
    Ok(SpinBlocks {
        up: OneBodyKernel {
            coefficients: coefficients.clone(),
            spin: Some(Spin::Up),
            orbitals: gs.configuration.up.clone(),
        },
        down: OneBodyKernel {
            coefficients,
            spin: Some(Spin::Down),
            orbitals: gs.configuration.down.clone(),
        },
    })
}

/// All kernel blocks of a configuration: one for spinless systems, one per
/// spin species otherwise. Blocks share their Gaussian factor.
pub fn kernel_blocks(configuration: &Configuration, couplings: &CouplingParams) -> Result<Vec<OneBodyKernel>> {
    if configuration.n_particles() != couplings.n_particles {
        return Err(Error::InvalidInput(format!(
            "configuration holds {} particles, couplings were built for {}",
            configuration.n_particles(),
            couplings.n_particles
        )));
    }
    if configuration.dimension() != couplings.axes.len() {
        return Err(Error::InvalidInput("configuration and couplings differ in dimension".into()));
    }
    let coefficients = kernel_coefficients(couplings)?;
    Ok(configuration
        .species()
        .into_iter()
        .map(|(spin, boxes)| OneBodyKernel {
            coefficients: coefficients.clone(),
            spin,
            orbitals: boxes.to_vec(),
        })
        .collect())
}
