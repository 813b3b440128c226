use microlp::{ComparisonOp, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use super::catalog::GpcCatalog;
use crate::error::{Error, Result};

/// Largest constraint value still counted as vanishing on a face.
pub const PIN_TOL: f64 = 1e-9;

/// Face of the Pauli simplex with λ_1 = … = λ_a = 1 and the last c
/// occupation numbers equal to 0. For ordered vectors these prefix/suffix
/// pins are the only faces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaFace {
    pub ones: usize,
    pub zeros: usize,
    /// Constraints that vanish on every catalog-admissible point of the face.
    pub pinning_constraints: Vec<usize>,
    /// The face contains at least one point satisfying all catalog constraints.
    pub admissible: bool,
}

impl SigmaFace {
    /// Indices (0-based) pinned to 1.
    pub fn s1(&self) -> Vec<usize> {
        (0..self.ones).collect()
    }

    /// Indices (0-based) pinned to 0 in dimension `d`.
    pub fn s0(&self, d: usize) -> Vec<usize> {
        (d - self.zeros..d).collect()
    }

    pub fn is_pinning(&self) -> bool {
        !self.pinning_constraints.is_empty()
    }

    /// ℓ¹ distance Σ_{S₁}(1 − λ) + Σ_{S₀} λ.
    pub fn distance(&self, lambda: &[f64]) -> f64 {
        let d = lambda.len();
        lambda[..self.ones].iter().map(|l| 1.0 - l).sum::<f64>() + lambda[d - self.zeros..].iter().sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceList {
    pub faces: Vec<SigmaFace>,
    /// Enumeration stopped at the cardinality budget.
    pub partial: bool,
}

impl FaceList {
    pub fn pinning(&self) -> impl Iterator<Item = &SigmaFace> {
        self.faces.iter().filter(|f| f.is_pinning())
    }
}

/// max D_j over {λ ordered, Σλ = N, pins of the face, all catalog D_k ≥ 0};
/// `None` when that set is empty.
fn face_maximum(catalog: &GpcCatalog, ones: usize, zeros: usize, j: usize) -> Result<Option<f64>> {
    let d = catalog.d;
    let target = &catalog.constraints[j];
    let coeffs = target.coefficients();
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = (0..d)
        .map(|i| {
            let bounds = if i < ones {
                (1.0, 1.0)
            } else if i >= d - zeros {
                (0.0, 0.0)
            } else {
                (0.0, 1.0)
            };
            lp.add_var(coeffs[i], bounds)
        })
        .collect();
    for i in 0..d - 1 {
        lp.add_constraint([(vars[i], 1.0), (vars[i + 1], -1.0)], ComparisonOp::Ge, 0.0);
    }
    lp.add_constraint(vars.iter().map(|&v| (v, 1.0)).collect::<Vec<_>>(), ComparisonOp::Eq, catalog.n as f64);
    for c in &catalog.constraints {
        let row: Vec<_> = vars.iter().zip(c.coefficients()).map(|(&v, k)| (v, k)).collect();
        lp.add_constraint(row, ComparisonOp::Ge, -c.offset());
    }
    match lp.solve() {
        Ok(microlp::SolveOutcome::Solution(s)) => Ok(Some(s.objective() + target.offset())),
        Ok(microlp::SolveOutcome::Interrupted(_)) => Err(Error::Numerical("face LP interrupted".into())),
        Err(microlp::Error::Infeasible) => Ok(None),
        Err(e) => Err(Error::Numerical(format!("face LP failed: {e}"))),
    }
}

/// Faces (a ones, c zeros) with a ≤ N, c ≤ d − N and a + c ≤ `max_pins`
/// (all faces when `None`), each marked with the constraints that vanish
/// on it. A constraint pins a face iff its maximum over the face's
/// catalog-admissible part is zero.
pub fn pinning_faces(catalog: &GpcCatalog, max_pins: Option<usize>) -> Result<FaceList> {
    let (n, d) = catalog.setting();
    let budget = max_pins.unwrap_or(d);
    // Constraints vanishing on the whole polytope are implicit equalities,
    // not facets; they pin nothing.
    let mut equalities = Vec::new();
    for j in 0..catalog.len() {
        if matches!(face_maximum(catalog, 0, 0, j)?, Some(m) if m <= PIN_TOL) {
            equalities.push(j);
        }
    }
    let mut faces = Vec::new();
    let mut partial = false;
    for ones in 0..=n {
        for zeros in 0..=d - n {
            if ones + zeros > budget {
                partial = true;
                continue;
            }
            let mut pinning = Vec::new();
            let mut admissible = true;
            for j in 0..catalog.len() {
                match face_maximum(catalog, ones, zeros, j)? {
                    None => {
                        admissible = false;
                        break;
                    }
                    Some(m) if m <= PIN_TOL && !equalities.contains(&j) => pinning.push(j),
                    Some(_) => {}
                }
            }
            if !admissible {
                pinning.clear();
            }
            faces.push(SigmaFace {
                ones,
                zeros,
                pinning_constraints: pinning,
                admissible,
            });
        }
    }
    Ok(FaceList { faces, partial })
}
