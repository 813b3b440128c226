//! Physical parameters of N-Harmonium and the box-filling ground-state
//! configuration.
//!
//! Units: ħ = 1. Mass, trap frequencies and the coupling K are used as given;
//! occupation numbers only depend on the dimensionless couplings κ^(α), so
//! no further rescaling is needed.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fmt;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for treating two box energies as degenerate.
pub const ENERGY_RTOL: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub n_particles: usize,
    /// Trap frequencies ω^(α), one per spatial dimension.
    pub omega: Vec<f64>,
    pub mass: f64,
    /// Harmonic pair coupling K (may be negative down to the stability edge).
    pub coupling: f64,
    pub spinful: bool,
    /// Zeeman splitting b = c|B| ≥ 0; ignored unless `spinful`.
    pub field: f64,
}

impl SystemSpec {
    pub fn new(n_particles: usize, omega: Vec<f64>, mass: f64, coupling: f64) -> Result<Self> {
        let spec = SystemSpec {
            n_particles,
            omega,
            mass,
            coupling,
            spinful: false,
            field: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Unit mass, ω^(1) = 1 and K chosen so that κ^(1) = `kappa`.
    pub fn from_kappa(n_particles: usize, omega: Vec<f64>, kappa: f64) -> Result<Self> {
        let w1 = *omega
            .first()
            .ok_or_else(|| Error::InvalidInput("at least one trap frequency is required".into()))?;
        if n_particles == 0 {
            return Err(Error::InvalidInput("particle number must be at least 1".into()));
        }
        Self::new(n_particles, omega, 1.0, kappa * w1 * w1 / n_particles as f64)
    }

    /// Same as [`SystemSpec::from_kappa`] with κ^(1) = e^{4δ} − 1.
    pub fn from_delta(n_particles: usize, omega: Vec<f64>, delta: f64) -> Result<Self> {
        Self::from_kappa(n_particles, omega, kappa_from_delta(delta))
    }

    pub fn with_field(mut self, field: f64) -> Result<Self> {
        self.spinful = true;
        self.field = field;
        self.validate()?;
        Ok(self)
    }

    pub fn dimension(&self) -> usize {
        self.omega.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_particles == 0 {
            return Err(Error::InvalidInput("particle number must be at least 1".into()));
        }
        if self.omega.is_empty() {
            return Err(Error::InvalidInput("at least one trap frequency is required".into()));
        }
        if let Some(w) = self.omega.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidInput(format!("trap frequency {w} must be positive")));
        }
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(Error::InvalidInput(format!("mass {} must be positive", self.mass)));
        }
        if !self.coupling.is_finite() {
            return Err(Error::InvalidInput("coupling must be finite".into()));
        }
        if self.spinful && !(self.field.is_finite() && self.field >= 0.0) {
            return Err(Error::InvalidInput(format!("Zeeman splitting {} must be ≥ 0", self.field)));
        }
        let shift = self.n_particles as f64 * self.coupling / self.mass;
        let w_min = self.omega.iter().cloned().fold(f64::INFINITY, f64::min);
        if shift <= -w_min * w_min {
            return Err(Error::Domain(format!(
                "NK/m = {shift} makes the relative frequency imaginary (needs > {})",
                -w_min * w_min
            )));
        }
        Ok(())
    }
}

pub fn kappa_from_delta(delta: f64) -> f64 {
    (4.0 * delta).exp_m1()
}

pub fn delta_from_kappa(kappa: f64) -> f64 {
    0.25 * kappa.ln_1p()
}

/// Couplings of one spatial axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisCoupling {
    pub omega: f64,
    pub omega_tilde: f64,
    pub kappa: f64,
    pub delta: f64,
    /// Oscillator length of the bare trap, √(1/mω).
    pub length: f64,
    /// Oscillator length of the relative motion, √(1/mω̃).
    pub length_tilde: f64,
    /// Diagonal entry B^(α) of the center-of-mass correction (1/length²).
    pub b: f64,
}

impl AxisCoupling {
    pub fn new(n_particles: usize, mass: f64, omega: f64, coupling: f64) -> Result<Self> {
        let kappa = n_particles as f64 * coupling / (mass * omega * omega);
        if !(kappa > -1.0) {
            return Err(Error::Domain(format!("κ = {kappa} must exceed −1")));
        }
        Ok(Self::from_kappa(n_particles, mass, omega, kappa))
    }

    pub fn from_kappa(n_particles: usize, mass: f64, omega: f64, kappa: f64) -> Self {
        let omega_tilde = omega * (1.0 + kappa).sqrt();
        let length = (1.0 / (mass * omega)).sqrt();
        let length_tilde = (1.0 / (mass * omega_tilde)).sqrt();
        let n = n_particles as f64;
        AxisCoupling {
            omega,
            omega_tilde,
            kappa,
            delta: delta_from_kappa(kappa),
            length,
            length_tilde,
            b: 0.5 * n * (1.0 / (length_tilde * length_tilde) - 1.0 / (length * length)),
        }
    }

    pub fn from_delta(n_particles: usize, mass: f64, omega: f64, delta: f64) -> Self {
        Self::from_kappa(n_particles, mass, omega, kappa_from_delta(delta))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingParams {
    pub n_particles: usize,
    pub mass: f64,
    pub axes: Vec<AxisCoupling>,
}

impl CouplingParams {
    /// Copy with δ → −δ on axis `axis`.
    pub fn flipped(&self, axis: usize) -> Self {
        let mut out = self.clone();
        let a = &self.axes[axis];
        out.axes[axis] = AxisCoupling::from_delta(self.n_particles, self.mass, a.omega, -a.delta);
        out
    }

    /// Copy with δ → −δ on every axis.
    pub fn flipped_all(&self) -> Self {
        (0..self.axes.len()).fold(self.clone(), |c, a| c.flipped(a))
    }

    pub fn from_deltas(n_particles: usize, omega: &[f64], deltas: &[f64]) -> Result<Self> {
        if omega.len() != deltas.len() || omega.is_empty() {
            return Err(Error::InvalidInput("need one δ per trap frequency".into()));
        }
        Ok(CouplingParams {
            n_particles,
            mass: 1.0,
            axes: omega
                .iter()
                .zip(deltas)
                .map(|(&w, &d)| AxisCoupling::from_delta(n_particles, 1.0, w, d))
                .collect(),
        })
    }
}

pub fn derive_couplings(spec: &SystemSpec) -> Result<CouplingParams> {
    spec.validate()?;
    let axes = spec
        .omega
        .iter()
        .map(|&w| AxisCoupling::new(spec.n_particles, spec.mass, w, spec.coupling))
        .collect::<Result<Vec<_>>>()?;
    Ok(CouplingParams {
        n_particles: spec.n_particles,
        mass: spec.mass,
        axes,
    })
}

/// Oscillator quantum numbers (μ^(1), …, μ^(n)) of one box.
///
/// Ordering compares the last axis first, so among degenerate boxes those
/// excited along low-index axes come first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QuantumNumbers(pub Vec<u32>);

impl QuantumNumbers {
    pub fn ground(dim: usize) -> Self {
        QuantumNumbers(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn excitation(&self) -> u32 {
        self.0.iter().sum()
    }
}

impl Ord for QuantumNumbers {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.iter().rev().cmp(other.0.iter().rev())
    }
}

impl PartialOrd for QuantumNumbers {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for QuantumNumbers {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.iter().join(","))
    }
}

impl From<Vec<u32>> for QuantumNumbers {
    fn from(v: Vec<u32>) -> Self {
        QuantumNumbers(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    Up,
    Down,
}

/// ε̃_μ = Σ_α (μ^(α) + ½) ω̃^(α), lowered by b/2 for spin up and raised for spin down.
pub fn box_energy(mu: &QuantumNumbers, couplings: &CouplingParams, spin: Option<Spin>, field: f64) -> f64 {
    let e: f64 = mu
        .0
        .iter()
        .zip(&couplings.axes)
        .map(|(&m, a)| (m as f64 + 0.5) * a.omega_tilde)
        .sum();
    match spin {
        None => e,
        Some(Spin::Up) => e - 0.5 * field,
        Some(Spin::Down) => e + 0.5 * field,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    /// Spin-up boxes, or all boxes of a spinless system.
    pub up: Vec<QuantumNumbers>,
    pub down: Vec<QuantumNumbers>,
    pub spinful: bool,
    /// Number of configurations sharing the minimal energy.
    pub degeneracy: u64,
    pub selected_index: usize,
}

impl Configuration {
    pub fn spinless(boxes: Vec<QuantumNumbers>) -> Result<Self> {
        let c = Configuration {
            up: boxes,
            down: Vec::new(),
            spinful: false,
            degeneracy: 1,
            selected_index: 0,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn spinful(up: Vec<QuantumNumbers>, down: Vec<QuantumNumbers>) -> Result<Self> {
        let c = Configuration {
            up,
            down,
            spinful: true,
            degeneracy: 1,
            selected_index: 0,
        };
        c.validate()?;
        Ok(c)
    }

    /// Lowest `n` one-dimensional boxes.
    pub fn one_dim_filled(n: usize) -> Self {
        Configuration::spinless((0..n as u32).map(|m| QuantumNumbers(vec![m])).collect())
            .expect("distinct boxes")
    }

    fn validate(&self) -> Result<()> {
        if self.up.is_empty() && self.down.is_empty() {
            return Err(Error::InvalidInput("configuration holds no particles".into()));
        }
        if !self.spinful && !self.down.is_empty() {
            return Err(Error::InvalidInput("spinless configuration with spin-down boxes".into()));
        }
        let dim = self.up.iter().chain(&self.down).next().map(|q| q.dim()).unwrap_or(0);
        if dim == 0 || self.up.iter().chain(&self.down).any(|q| q.dim() != dim) {
            return Err(Error::InvalidInput("boxes must share one positive dimension".into()));
        }
        for list in [&self.up, &self.down] {
            if list.iter().duplicates().next().is_some() {
                return Err(Error::InvalidInput("a box is occupied twice by the same species".into()));
            }
        }
        Ok(())
    }

    pub fn n_particles(&self) -> usize {
        self.up.len() + self.down.len()
    }

    pub fn dimension(&self) -> usize {
        self.up.iter().chain(&self.down).next().map_or(0, |q| q.dim())
    }

    /// M = (N↑ − N↓)/2.
    pub fn magnetization(&self) -> f64 {
        0.5 * (self.up.len() as f64 - self.down.len() as f64)
    }

    /// Smallest n′ such that no box is excited along an axis beyond n′.
    pub fn effective_dimension(&self) -> usize {
        self.up
            .iter()
            .chain(&self.down)
            .filter_map(|q| q.0.iter().rposition(|&m| m > 0).map(|i| i + 1))
            .max()
            .unwrap_or(0)
    }

    /// Occupied boxes grouped by species.
    pub fn species(&self) -> Vec<(Option<Spin>, &[QuantumNumbers])> {
        if self.spinful {
            vec![(Some(Spin::Up), &self.up[..]), (Some(Spin::Down), &self.down[..])]
        } else {
            vec![(None, &self.up[..])]
        }
    }

    pub fn energy(&self, couplings: &CouplingParams, field: f64) -> f64 {
        self.species()
            .into_iter()
            .flat_map(|(s, boxes)| boxes.iter().map(move |q| box_energy(q, couplings, s, field)))
            .sum()
    }

    /// Compact identifier, e.g. `0,0;1,0;0,1` or `u[0;1]d[0]`.
    pub fn id(&self) -> String {
        let list = |v: &[QuantumNumbers]| v.iter().map(|q| q.to_string()).join(";");
        if self.spinful {
            format!("u[{}]d[{}]", list(&self.up), list(&self.down))
        } else {
            list(&self.up)
        }
    }

    /// Same occupied boxes, ignoring order and degeneracy bookkeeping.
    pub fn same_boxes(&self, other: &Configuration) -> bool {
        let sorted = |v: &[QuantumNumbers]| v.iter().sorted().cloned().collect::<Vec<_>>();
        self.spinful == other.spinful
            && sorted(&self.up) == sorted(&other.up)
            && sorted(&self.down) == sorted(&other.down)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundStateSpec {
    pub configuration: Configuration,
    pub couplings: CouplingParams,
    pub energy: f64,
    pub effective_dimension: usize,
}

#[derive(Debug, Clone, PartialEq)]
struct Slot {
    energy: f64,
    spin: Option<Spin>,
    qn: QuantumNumbers,
}

impl Eq for Slot {}

impl Ord for Slot {
    fn cmp(&self, other: &Self) -> Ordering {
        self.energy
            .total_cmp(&other.energy)
            .then_with(|| self.spin.cmp(&other.spin))
            .then_with(|| self.qn.cmp(&other.qn))
    }
}

impl PartialOrd for Slot {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The lowest boxes: everything strictly below the Fermi level, plus the
/// degenerate shell from which `need` boxes still have to be chosen.
struct Filling {
    below: Vec<Slot>,
    shell: Vec<Slot>,
    need: usize,
}

fn fill(couplings: &CouplingParams, spins: &[Option<Spin>], field: f64, n: usize) -> Filling {
    let dim = couplings.axes.len();
    let mut heap = BinaryHeap::new();
    for &s in spins {
        let qn = QuantumNumbers::ground(dim);
        heap.push(Reverse(Slot {
            energy: box_energy(&qn, couplings, s, field),
            spin: s,
            qn,
        }));
    }
    // Best-first walk over boxes: every box has the unique parent obtained by
    // lowering its last excited axis, and energies grow along the walk, so
    // boxes leave the heap in order of energy.
    let mut popped: Vec<Slot> = Vec::new();
    while let Some(Reverse(slot)) = heap.pop() {
        if popped.len() >= n {
            let e_f = popped[n - 1].energy;
            if slot.energy > e_f + ENERGY_RTOL * e_f.abs().max(1.0) {
                break;
            }
        }
        let last = slot.qn.0.iter().rposition(|&m| m > 0).unwrap_or(0);
        for axis in last..dim {
            let mut qn = slot.qn.clone();
            qn.0[axis] += 1;
            heap.push(Reverse(Slot {
                energy: box_energy(&qn, couplings, slot.spin, field),
                spin: slot.spin,
                qn,
            }));
        }
        popped.push(slot);
    }
    let e_f = popped[n - 1].energy;
    let tol = ENERGY_RTOL * e_f.abs().max(1.0);
    let (mut shell, below): (Vec<Slot>, Vec<Slot>) = popped.into_iter().partition(|s| (s.energy - e_f).abs() <= tol);
    shell.sort_by(|a, b| a.spin.cmp(&b.spin).then_with(|| a.qn.cmp(&b.qn)));
    let need = n - below.len();
    Filling { below, shell, need }
}

fn binomial(n: usize, k: usize) -> u64 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128) as u64
}

fn assemble(spinful: bool, slots: impl Iterator<Item = Slot>, degeneracy: u64, index: usize) -> Configuration {
    let mut up = Vec::new();
    let mut down = Vec::new();
    for s in slots {
        match s.spin {
            Some(Spin::Down) => down.push(s.qn),
            _ => up.push(s.qn),
        }
    }
    up.sort();
    down.sort();
    Configuration {
        up,
        down,
        spinful,
        degeneracy,
        selected_index: index,
    }
}

fn filling_for(spec: &SystemSpec) -> Result<(Filling, bool)> {
    let couplings = derive_couplings(spec)?;
    let spins: &[Option<Spin>] = if spec.spinful {
        &[Some(Spin::Up), Some(Spin::Down)]
    } else {
        &[None]
    };
    Ok((fill(&couplings, spins, spec.field, spec.n_particles), spec.spinful))
}

/// Minimal-energy filling, picking the `index`-th member of the degenerate set.
pub fn ground_configuration_selected(spec: &SystemSpec, index: usize) -> Result<Configuration> {
    let (f, spinful) = filling_for(spec)?;
    let degeneracy = binomial(f.shell.len(), f.need);
    if index as u64 >= degeneracy {
        return Err(Error::InvalidInput(format!(
            "selected index {index} but only {degeneracy} degenerate configurations"
        )));
    }
    let pick = (0..f.shell.len())
        .combinations(f.need)
        .nth(index)
        .expect("index below degeneracy");
    let slots = f.below.into_iter().chain(pick.into_iter().map(|i| f.shell[i].clone()));
    Ok(assemble(spinful, slots, degeneracy, index))
}

/// Minimal-energy filling with the deterministic representative of a
/// degenerate set. Spinful specs are filled with both displaced box arrays.
pub fn ground_configuration(spec: &SystemSpec) -> Result<Configuration> {
    ground_configuration_selected(spec, 0)
}

pub fn zeeman_ground_configuration(spec: &SystemSpec) -> Result<Configuration> {
    if !spec.spinful {
        return Err(Error::InvalidInput("Zeeman filling needs a spinful system".into()));
    }
    ground_configuration(spec)
}

/// Every configuration of the degenerate ground set, up to `limit` of them.
pub fn degenerate_configurations(spec: &SystemSpec, limit: usize) -> Result<Vec<Configuration>> {
    let (f, spinful) = filling_for(spec)?;
    let degeneracy = binomial(f.shell.len(), f.need);
    Ok((0..f.shell.len())
        .combinations(f.need)
        .take(limit)
        .enumerate()
        .map(|(i, pick)| {
            let slots = f.below.iter().cloned().chain(pick.into_iter().map(|j| f.shell[j].clone()));
            assemble(spinful, slots, degeneracy, i)
        })
        .collect())
}

pub fn ground_state(spec: &SystemSpec) -> Result<GroundStateSpec> {
    let couplings = derive_couplings(spec)?;
    let configuration = ground_configuration(spec)?;
    Ok(GroundStateSpec {
        energy: configuration.energy(&couplings, spec.field),
        effective_dimension: configuration.effective_dimension(),
        configuration,
        couplings,
    })
}

/// κ at which three fermions in a plane trap with ω^(2)/ω^(1) = χ switch
/// from {(0,0),(1,0),(0,1)} to the one-dimensional filling.
pub fn planar_three_fermion_transition(chi: f64) -> f64 {
    (chi * chi - 4.0) / 3.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub kappa: f64,
    pub before: Configuration,
    pub after: Configuration,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TransitionScan {
    NoneFound,
    Found(Vec<Transition>),
}

/// Family with ω = (1, χ, …, χ) parameterized by κ^(1).
pub fn detuned_family(n_particles: usize, dim: usize, chi: f64) -> impl Fn(f64) -> Result<SystemSpec> {
    move |kappa| {
        let omega = (0..dim).map(|a| if a == 0 { 1.0 } else { chi }).collect();
        SystemSpec::from_kappa(n_particles, omega, kappa)
    }
}

/// Scans κ over `points` evenly spaced values in [lo, hi] and bisects every
/// change of the ground configuration down to `tol`.
pub fn configuration_transitions<F>(family: F, lo: f64, hi: f64, points: usize, tol: f64) -> Result<TransitionScan>
where
    F: Fn(f64) -> Result<SystemSpec>,
{
    if points < 2 || !(hi > lo) {
        return Err(Error::InvalidInput("scan needs at least two points and hi > lo".into()));
    }
    let config_at = |k: f64| family(k).and_then(|s| ground_configuration(&s));
    let grid: Vec<f64> = (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect();
    let mut found = Vec::new();
    let mut prev = config_at(grid[0])?;
    for w in grid.windows(2) {
        let next = config_at(w[1])?;
        if !prev.same_boxes(&next) {
            let (mut a, mut b) = (w[0], w[1]);
            while b - a > tol {
                let mid = 0.5 * (a + b);
                if config_at(mid)?.same_boxes(&prev) {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            found.push(Transition {
                kappa: 0.5 * (a + b),
                before: prev.clone(),
                after: next.clone(),
            });
        }
        prev = next;
    }
    Ok(if found.is_empty() {
        TransitionScan::NoneFound
    } else {
        TransitionScan::Found(found)
    })
}

/// Detuning above which three fermions behave quasi-one-dimensionally:
/// χ_crit(δ) = (243/40)^{1/4} δ^{−3/2}.
pub fn chi_crit(delta: f64) -> f64 {
    (243.0f64 / 40.0).powf(0.25) * delta.abs().powf(-1.5)
}

pub fn regime_predicate(delta: f64, chi: f64) -> bool {
    chi > chi_crit(delta)
}
