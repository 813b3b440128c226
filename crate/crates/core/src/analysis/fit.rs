use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest spread of local log-log slopes accepted inside the fit window.
pub const SLOPE_SPREAD: f64 = 0.1;
/// Fitted exponents within this distance of an integer are snapped.
pub const SNAP_DISTANCE: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub exponent: f64,
    /// c in value ≈ c·x^exponent.
    pub prefactor: f64,
    /// Smallest and largest x inside the window.
    pub window: (f64, f64),
    pub points: usize,
    /// RMS residual of the log-log fit.
    pub residual: f64,
    pub snapped: Option<i64>,
    /// Prefactor refitted with the exponent fixed at the snapped integer.
    pub snapped_prefactor: Option<f64>,
    /// False when no window met the slope-stability test and all points were used.
    pub stable: bool,
    pub spans_decade: bool,
}

/// Least squares of ln y against ln x; returns (slope, intercept, rms).
pub fn log_log_fit(samples: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::InvalidInput("a power-law fit needs at least two samples".into()));
    }
    if let Some(&(x, y)) = samples.iter().find(|&&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "non-positive sample ({x:e}, {y:e}) inside the fit window"
        )));
    }
    let pts: Vec<(f64, f64)> = samples.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("samples share a single x value".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Ok((slope, intercept, rms))
}

fn snap(e: f64) -> Option<i64> {
    ((e - e.round()).abs() < SNAP_DISTANCE).then(|| e.round() as i64)
}

/// Leading power of a quantity vanishing as x → 0. The window is the
/// longest run of consecutive samples, preferring small x, whose local
/// slopes spread by at most [`SLOPE_SPREAD`]. Non-positive samples never
/// enter a window.
pub fn fit_leading_exponent(samples: &[(f64, f64)]) -> Result<ExponentFit> {
    if samples.len() < 4 {
        return Err(Error::InvalidInput(format!(
            "exponent fit needs at least 4 samples, got {}",
            samples.len()
        )));
    }
    let mut pts = samples.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.dedup_by(|a, b| a.0 == b.0);
    let usable: Vec<(f64, f64)> = pts.iter().cloned().filter(|&(x, y)| x > 0.0 && y > 0.0).collect();
    if usable.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "only {} positive samples; the fit window needs at least 3",
            usable.len()
        )));
    }
    let slopes: Vec<f64> = usable
        .windows(2)
        .map(|w| (w[1].1.ln() - w[0].1.ln()) / (w[1].0.ln() - w[0].0.ln()))
        .collect();
    // Longest stable run of slopes [i, j); ties go to the smaller x.
    let mut best: Option<(usize, usize)> = None;
    for i in 0..slopes.len() {
        let (mut lo, mut hi) = (slopes[i], slopes[i]);
        let mut j = i + 1;
        while j < slopes.len() {
            let (l, h) = (lo.min(slopes[j]), hi.max(slopes[j]));
            if h - l > SLOPE_SPREAD {
                break;
            }
            lo = l;
            hi = h;
            j += 1;
        }
        if best.is_none_or(|(a, b)| j - i > b - a) {
            best = Some((i, j));
        }
    }
    let (window, stable) = match best {
        Some((i, j)) if j - i >= 2 => (&usable[i..=j], true),
        _ => (&usable[..], false),
    };
    let (exponent, intercept, residual) = log_log_fit(window)?;
    let (x0, x1) = (window[0].0, window[window.len() - 1].0);
    let snapped = snap(exponent);
    let snapped_prefactor = snapped.map(|k| {
        let mean = window.iter().map(|&(x, y)| y.ln() - k as f64 * x.ln()).sum::<f64>() / window.len() as f64;
        mean.exp()
    });
    Ok(ExponentFit {
        exponent,
        prefactor: intercept.exp(),
        window: (x0, x1),
        points: window.len(),
        residual,
        snapped,
        snapped_prefactor,
        stable,
        spans_decade: pts[pts.len() - 1].0 >= 10.0 * pts[0].0,
    })
}
