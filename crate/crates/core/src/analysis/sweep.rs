use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gpc::{pinning_faces, pinning_report, FaceList, GpcCatalog, PinningReport, QEstimate};
use crate::model::{ground_state, Configuration, SystemSpec};
use crate::spectral::{
    natural_occupations, truncate_spectrum, BlockLabel, SolverOptions, Spectrum, TruncatedSpectrum, TruncationTarget,
};

/// Catalog, its faces and solver settings shared by every point of a run.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub catalog: GpcCatalog,
    pub faces: FaceList,
    pub solver: SolverOptions,
    /// Number of leading values kept per record for crossing detection.
    pub track_count: usize,
}

impl Pipeline {
    pub fn new(catalog: GpcCatalog, solver: SolverOptions) -> Result<Self> {
        let faces = pinning_faces(&catalog, None)?;
        let track_count = (catalog.d + 4).max(16);
        Ok(Pipeline {
            catalog,
            faces,
            solver,
            track_count,
        })
    }
}

#[derive(Debug, Clone)]
pub struct PointResult {
    pub configuration: Configuration,
    pub spectrum: Spectrum,
    pub truncated: TruncatedSpectrum,
    pub report: PinningReport,
}

/// Ground state → spectrum → truncation to the catalog setting → pinning report.
pub fn run_pipeline(spec: &SystemSpec, pipeline: &Pipeline) -> Result<PointResult> {
    let gs = ground_state(spec)?;
    let (n, d) = pipeline.catalog.setting();
    if n > spec.n_particles {
        return Err(Error::InvalidInput(format!(
            "catalog setting N′ = {n} exceeds the particle number {}",
            spec.n_particles
        )));
    }
    let spectrum = natural_occupations(&gs, &pipeline.solver)?;
    let truncated = truncate_spectrum(
        &spectrum,
        TruncationTarget::Setting {
            n_active: n,
            d_active: d,
        },
    )?;
    let report = pinning_report(&truncated, &pipeline.catalog, &pipeline.faces)?;
    Ok(PointResult {
        configuration: gs.configuration,
        spectrum,
        truncated,
        report,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl GridAxis {
    pub fn single(v: f64) -> Self {
        GridAxis {
            lo: v,
            hi: v,
            points: 1,
            spacing: Spacing::Linear,
        }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if self.points == 0 {
            return Err(Error::InvalidInput(format!("{name} grid is empty")));
        }
        if !(self.lo.is_finite() && self.hi.is_finite()) || self.hi < self.lo {
            return Err(Error::InvalidInput(format!("{name} grid needs finite lo ≤ hi")));
        }
        if self.spacing == Spacing::Log && self.lo <= 0.0 {
            return Err(Error::InvalidInput(format!("{name} log grid needs lo > 0")));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.lo];
        }
        let t = |i: usize| i as f64 / (self.points - 1) as f64;
        (0..self.points)
            .map(|i| match self.spacing {
                Spacing::Linear => self.lo + (self.hi - self.lo) * t(i),
                Spacing::Log => self.lo * (self.hi / self.lo).powf(t(i)),
            })
            .collect()
    }
}

/// κ^(1) × χ (× b) grid; the trap is ω = (1, χ, …, χ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub n_particles: usize,
    pub dimension: usize,
    pub kappa: GridAxis,
    pub chi: GridAxis,
    /// Zeeman splittings; present for spinful sweeps.
    #[serde(default)]
    pub field: Option<GridAxis>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub index: usize,
    pub i_kappa: usize,
    pub i_chi: usize,
    pub i_field: usize,
    pub kappa: f64,
    pub chi: f64,
    pub field: Option<f64>,
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 || self.n_particles == 0 {
            return Err(Error::InvalidInput("sweep needs N ≥ 1 and n ≥ 1".into()));
        }
        self.kappa.validate("kappa")?;
        self.chi.validate("chi")?;
        if let Some(f) = &self.field {
            f.validate("field")?;
        }
        Ok(())
    }

    /// Points ordered by χ, then κ, then b.
    pub fn points(&self) -> Vec<GridPoint> {
        let ks = self.kappa.values();
        let cs = self.chi.values();
        let bs: Vec<Option<f64>> = match &self.field {
            Some(f) => f.values().into_iter().map(Some).collect(),
            None => vec![None],
        };
        let mut out = Vec::with_capacity(ks.len() * cs.len() * bs.len());
        for (i_chi, &chi) in cs.iter().enumerate() {
            for (i_kappa, &kappa) in ks.iter().enumerate() {
                for (i_field, &field) in bs.iter().enumerate() {
                    out.push(GridPoint {
                        index: out.len(),
                        i_kappa,
                        i_chi,
                        i_field,
                        kappa,
                        chi,
                        field,
                    });
                }
            }
        }
        out
    }

    pub fn spec_at(&self, p: &GridPoint) -> Result<SystemSpec> {
        let omega = (0..self.dimension).map(|a| if a == 0 { 1.0 } else { p.chi }).collect();
        let spec = SystemSpec::from_kappa(self.n_particles, omega, p.kappa)?;
        match p.field {
            Some(b) => spec.with_field(b),
            None => Ok(spec),
        }
    }
}

/// One leading occupation number with its block label and rank inside the block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub label: BlockLabel,
    pub rank: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub point: GridPoint,
    pub magnetization: Option<f64>,
    pub config_id: String,
    pub degeneracy: u64,
    pub d_min: f64,
    pub argmin: usize,
    pub q: f64,
    pub q_kind: String,
    pub d_hf: f64,
    pub eps: f64,
    pub flags: Vec<String>,
    pub tracks: Vec<Track>,
    pub error: Option<String>,
}

impl SweepRecord {
    fn failed(point: GridPoint, e: &Error) -> Self {
        SweepRecord {
            point,
            magnetization: None,
            config_id: String::new(),
            degeneracy: 0,
            d_min: f64::NAN,
            argmin: 0,
            q: f64::NAN,
            q_kind: "error".into(),
            d_hf: f64::NAN,
            eps: f64::NAN,
            flags: vec!["error".into()],
            tracks: Vec::new(),
            error: Some(e.to_string()),
        }
    }

    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Computes one grid point; failures become records with `error` set.
pub fn run_point(grid: &SweepGrid, point: GridPoint, pipeline: &Pipeline) -> SweepRecord {
    let result = grid.spec_at(&point).and_then(|s| run_pipeline(&s, pipeline));
    let r = match result {
        Ok(r) => r,
        Err(e) => return SweepRecord::failed(point, &e),
    };
    let mut flags = Vec::new();
    if r.configuration.degeneracy > 1 {
        flags.push(format!("degenerate:{}", r.configuration.degeneracy));
    }
    if r.report.d_min > 0.0 && r.truncated.error > 0.01 * r.report.d_min {
        flags.push("eps_above_1pct".into());
    }
    if r.truncated.splits_plateau {
        flags.push("cut_splits_plateau".into());
    }
    if !r.report.catalog_complete {
        flags.push("partial_catalog".into());
    }
    let ranks = r.spectrum.block_ranks();
    let tracks = (0..pipeline.track_count.min(r.spectrum.len()))
        .map(|i| Track {
            label: r.spectrum.labels[i].clone(),
            rank: ranks[i],
            value: r.spectrum.values[i],
        })
        .collect();
    let (q, q_kind) = match r.report.q {
        QEstimate::Finite(q) => (q, "finite"),
        QEstimate::Pinned => (f64::INFINITY, "pinned"),
        QEstimate::Undefined => (f64::NAN, "undefined"),
    };
    SweepRecord {
        point,
        magnetization: r.configuration.spinful.then(|| r.configuration.magnetization()),
        config_id: r.configuration.id(),
        degeneracy: r.configuration.degeneracy,
        d_min: r.report.d_min,
        argmin: r.report.argmin,
        q,
        q_kind: q_kind.into(),
        d_hf: r.report.d_hf,
        eps: r.truncated.error,
        flags,
        tracks,
        error: None,
    }
}

/// All grid points, computed in parallel and returned in grid order. Points
/// next to a change of configuration along κ are flagged `config_boundary`.
pub fn sweep(grid: &SweepGrid, pipeline: &Pipeline) -> Result<Vec<SweepRecord>> {
    grid.validate()?;
    let mut records: Vec<SweepRecord> = grid
        .points()
        .into_par_iter()
        .map(|p| run_point(grid, p, pipeline))
        .collect();
    mark_boundaries(&mut records);
    Ok(records)
}

/// Adds `config_boundary` to records whose κ neighbour has another configuration.
pub fn mark_boundaries(records: &mut [SweepRecord]) {
    let pairs: Vec<(usize, usize)> = kappa_neighbours(records)
        .into_iter()
        .filter(|&(a, b)| records[a].ok() && records[b].ok() && records[a].config_id != records[b].config_id)
        .collect();
    for (a, b) in pairs {
        for i in [a, b] {
            if !records[i].flags.iter().any(|f| f == "config_boundary") {
                records[i].flags.push("config_boundary".into());
            }
        }
    }
}

/// Index pairs of records adjacent along κ at equal χ and b.
fn kappa_neighbours(records: &[SweepRecord]) -> Vec<(usize, usize)> {
    let at: HashMap<(usize, usize, usize), usize> = records
        .iter()
        .enumerate()
        .map(|(i, r)| ((r.point.i_chi, r.point.i_field, r.point.i_kappa), i))
        .collect();
    let mut out: Vec<(usize, usize)> = records
        .iter()
        .enumerate()
        .filter_map(|(i, r)| {
            at.get(&(r.point.i_chi, r.point.i_field, r.point.i_kappa + 1))
                .map(|&j| (i, j))
        })
        .collect();
    out.sort_unstable();
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigBoundary {
    pub chi: f64,
    pub field: Option<f64>,
    pub kappa_lo: f64,
    pub kappa_hi: f64,
    pub before: String,
    pub after: String,
}

/// Changes of configuration between κ neighbours.
pub fn configuration_boundaries(records: &[SweepRecord]) -> Vec<ConfigBoundary> {
    kappa_neighbours(records)
        .into_iter()
        .filter_map(|(a, b)| {
            let (ra, rb) = (&records[a], &records[b]);
            (ra.ok() && rb.ok() && ra.config_id != rb.config_id).then(|| ConfigBoundary {
                chi: ra.point.chi,
                field: ra.point.field,
                kappa_lo: ra.point.kappa,
                kappa_hi: rb.point.kappa,
                before: ra.config_id.clone(),
                after: rb.config_id.clone(),
            })
        })
        .collect()
}

/// κ neighbours in one configuration region where D_min grows as κ decreases
/// by more than `rtol` relative.
pub fn monotonicity_violations(records: &[SweepRecord], rtol: f64) -> Vec<(GridPoint, GridPoint)> {
    kappa_neighbours(records)
        .into_iter()
        .filter(|&(a, b)| {
            let (ra, rb) = (&records[a], &records[b]);
            ra.ok() && rb.ok() && ra.config_id == rb.config_id && ra.d_min > rb.d_min * (1.0 + rtol) + 1e-15
        })
        .map(|(a, b)| (records[a].point, records[b].point))
        .collect()
}

/// Points where the block-labelled tracks of two leading values cross.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingCurve {
    pub pair: (usize, usize),
    /// Polylines of (κ, χ) points; a new segment starts at every change of
    /// configuration between consecutive crossings.
    pub segments: Vec<Vec<(f64, f64)>>,
}

/// Degenerate values count as crossing when closer than this (relative).
const TIE: f64 = 1e-10;

fn value_of(r: &SweepRecord, label: &BlockLabel, rank: usize) -> Option<f64> {
    r.tracks
        .iter()
        .find(|t| t.rank == rank && &t.label == label)
        .map(|t| t.value)
}

/// Locates sign changes of λ_i − λ_j (0-based sorted positions) along κ,
/// following the block-labelled values found at positions i and j of the
/// left point. Neighbours in different configurations are skipped.
pub fn crossing_detector(records: &[SweepRecord], pairs: &[(usize, usize)]) -> Vec<CrossingCurve> {
    let neighbours = kappa_neighbours(records);
    pairs
        .iter()
        .map(|&(i, j)| {
            let mut hits: Vec<(usize, usize, f64, f64, String)> = Vec::new();
            for &(a, b) in &neighbours {
                let (ra, rb) = (&records[a], &records[b]);
                if !ra.ok() || !rb.ok() || ra.config_id != rb.config_id {
                    continue;
                }
                let (Some(ti), Some(tj)) = (ra.tracks.get(i), ra.tracks.get(j)) else {
                    continue;
                };
                let da = ti.value - tj.value;
                let (Some(vi), Some(vj)) = (value_of(rb, &ti.label, ti.rank), value_of(rb, &tj.label, tj.rank)) else {
                    continue;
                };
                let db = vi - vj;
                let tie = TIE * ti.value.abs().max(1e-300);
                let (ka, kb) = (ra.point.kappa, rb.point.kappa);
                let hit = if da.abs() <= tie {
                    Some(ka)
                } else if db < -tie {
                    Some(ka + (kb - ka) * da / (da - db))
                } else {
                    None
                };
                if let Some(k) = hit {
                    hits.push((ra.point.i_chi, ra.point.i_field, k, ra.point.chi, ra.config_id.clone()));
                }
            }
            hits.sort_by(|x, y| (x.1, x.0).cmp(&(y.1, y.0)).then(x.2.total_cmp(&y.2)));
            hits.dedup_by(|x, y| x.0 == y.0 && x.1 == y.1 && x.2 == y.2);
            let mut segments: Vec<Vec<(f64, f64)>> = Vec::new();
            let mut last: Option<&str> = None;
            for h in &hits {
                if last != Some(h.4.as_str()) {
                    segments.push(Vec::new());
                    last = Some(h.4.as_str());
                }
                segments.last_mut().expect("pushed").push((h.2, h.3));
            }
            CrossingCurve { pair: (i, j), segments }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gpc::builtin_catalog;
    use crate::kernel::Parity;

    #[test]
    fn axis_values() {
        let a = GridAxis {
            lo: 0.01,
            hi: 10.0,
            points: 4,
            spacing: Spacing::Log,
        };
        let v = a.values();
        assert!((v[1] - 0.1).abs() < 1e-15 && (v[3] - 10.0).abs() < 1e-12);
        assert_eq!(GridAxis::single(2.0).values(), vec![2.0]);
    }

    fn record(i_kappa: usize, kappa: f64, values: &[(usize, f64)], config: &str) -> SweepRecord {
        let label = |g: usize| BlockLabel {
            spin: None,
            parity: vec![if g == 0 { Parity::Even } else { Parity::Odd }],
        };
        let mut tracks: Vec<Track> = values
            .iter()
            .map(|&(g, v)| Track {
                label: label(g),
                rank: 0,
                value: v,
            })
            .collect();
        tracks.sort_by(|a, b| b.value.total_cmp(&a.value));
        SweepRecord {
            point: GridPoint {
                index: i_kappa,
                i_kappa,
                i_chi: 0,
                i_field: 0,
                kappa,
                chi: 1.0,
                field: None,
            },
            magnetization: None,
            config_id: config.into(),
            degeneracy: 1,
            d_min: kappa,
            argmin: 0,
            q: 0.0,
            q_kind: "finite".into(),
            d_hf: 0.0,
            eps: 0.0,
            flags: vec![],
            tracks,
            error: None,
        }
    }

    #[test]
    fn crossing_of_two_labelled_tracks() {
        let recs = vec![
            record(0, 0.0, &[(0, 0.3), (1, 0.1)], "a"),
            record(1, 1.0, &[(0, 0.1), (1, 0.3)], "a"),
        ];
        let c = crossing_detector(&recs, &[(0, 1)]);
        assert_eq!(c[0].segments, vec![vec![(0.5, 1.0)]]);
        let constant = vec![
            record(0, 0.0, &[(0, 0.3), (1, 0.1)], "a"),
            record(1, 1.0, &[(0, 0.3), (1, 0.1)], "a"),
        ];
        assert!(crossing_detector(&constant, &[(0, 1)])[0].segments.is_empty());
        let split = vec![
            record(0, 0.0, &[(0, 0.3), (1, 0.1)], "a"),
            record(1, 1.0, &[(0, 0.1), (1, 0.3)], "b"),
        ];
        assert!(crossing_detector(&split, &[(0, 1)])[0].segments.is_empty());
        assert_eq!(configuration_boundaries(&split).len(), 1);
    }

    #[test]
    fn single_point_matches_direct_pipeline() {
        let pipeline = Pipeline::new(builtin_catalog(3, 10).unwrap(), SolverOptions::default()).unwrap();
        let grid = SweepGrid {
            n_particles: 3,
            dimension: 2,
            kappa: GridAxis::single(0.5),
            chi: GridAxis::single(1.5),
            field: None,
        };
        let recs = sweep(&grid, &pipeline).unwrap();
        assert_eq!(recs.len(), 1);
        let direct = run_pipeline(&SystemSpec::from_kappa(3, vec![1.0, 1.5], 0.5).unwrap(), &pipeline).unwrap();
        assert_eq!(recs[0].d_min, direct.report.d_min);
        assert_eq!(recs[0].config_id, direct.configuration.id());
    }
}
