//! Hermite polynomials, orthonormal Hermite functions and Gauss–Hermite rules.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};

/// Physicists' Hermite polynomials H_0(x), …, H_{n-1}(x).
pub fn hermite_polys(n: usize, x: f64) -> Vec<f64> {
    let mut h = vec![0.0; n];
    if n > 0 {
        h[0] = 1.0;
    }
    if n > 1 {
        h[1] = 2.0 * x;
    }
    for k in 2..n {
        h[k] = 2.0 * x * h[k - 1] - 2.0 * (k - 1) as f64 * h[k - 2];
    }
    h
}

/// Orthonormal Hermite functions h_k(t) = H_k(t) e^{−t²/2} / √(2^k k! √π),
/// k < out.len(), via the stable three-term recurrence.
pub fn hermite_functions_into(t: f64, out: &mut [f64]) {
    let n = out.len();
    if n == 0 {
        return;
    }
    out[0] = std::f64::consts::PI.powf(-0.25) * (-0.5 * t * t).exp();
    if n > 1 {
        out[1] = std::f64::consts::SQRT_2 * t * out[0];
    }
    for k in 2..n {
        let kf = k as f64;
        out[k] = (2.0 / kf).sqrt() * t * out[k - 1] - ((kf - 1.0) / kf).sqrt() * out[k - 2];
    }
}

pub fn hermite_functions(n: usize, t: f64) -> Vec<f64> {
    let mut out = vec![0.0; n];
    hermite_functions_into(t, &mut out);
    out
}

/// Gauss–Hermite rule for ∫ e^{−t²} p(t) dt, exact for deg p ≤ 2q − 1.
///
/// `scaled_weights` hold w_i e^{t_i²}, which stay O(1) at the outer nodes
/// and let callers integrate functions that already carry their Gaussian.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub scaled_weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(q: usize) -> Self {
        assert!(q > 0, "Gauss–Hermite rule needs at least one node");
        // Golub–Welsch for starting values, then Newton on h_q.
        let jacobi = DMatrix::from_fn(q, q, |i, j| {
            if i + 1 == j || j + 1 == i {
                (i.max(j) as f64 / 2.0).sqrt()
            } else {
                0.0
            }
        });
        let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().cloned().collect();
        nodes.sort_by(f64::total_cmp);
        let mut h = vec![0.0; q + 1];
        let sq = (2.0 * q as f64).sqrt();
        for t in nodes.iter_mut() {
            for _ in 0..4 {
                hermite_functions_into(*t, &mut h);
                // p_q/p_q' for the orthonormal polynomials; the Gaussian cancels.
                let step = h[q] / (sq * h[q - 1]);
                *t -= step;
                if step.abs() < 1e-15 * t.abs().max(1.0) {
                    break;
                }
            }
        }
        // Exact symmetry.
        for i in 0..q / 2 {
            let m = 0.5 * (nodes[q - 1 - i] - nodes[i]);
            nodes[i] = -m;
            nodes[q - 1 - i] = m;
        }
        if q % 2 == 1 {
            nodes[q / 2] = 0.0;
        }
        let mut scaled_weights = Vec::with_capacity(q);
        let mut weights = Vec::with_capacity(q);
        let mut hq = vec![0.0; q];
        for &t in &nodes {
            // Christoffel numbers: 1/w_i = Σ_k p_k(t_i)².
            hermite_functions_into(t, &mut hq);
            let s: f64 = hq.iter().map(|v| v * v).sum();
            scaled_weights.push(1.0 / s);
            weights.push((-t * t).exp() / s);
        }
        GaussHermite {
            nodes,
            weights,
            scaled_weights,
        }
    }

    /// Shared rule of order `q`; rules are immutable once built.
    pub fn cached(q: usize) -> Arc<GaussHermite> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussHermite>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(rule) = cache.lock().expect("rule cache").get(&q) {
            return rule.clone();
        }
        let rule = Arc::new(GaussHermite::new(q));
        cache.lock().expect("rule cache").entry(q).or_insert(rule).clone()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}
