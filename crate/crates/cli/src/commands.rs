use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use harmonium::analysis::{configuration_boundaries, mark_boundaries, run_point, Pipeline, SweepRecord};
use harmonium::gpc::{
    builtin_settings, catalog_dir_override, catalog_file_name, find_catalog, load_catalog, pinning_faces,
    pinning_report, validate_catalog, PinningReport, QEstimate,
};
use harmonium::kernel::Parity;
use harmonium::model::{ground_state, Spin};
use harmonium::spectral::{natural_occupations, truncate_spectrum, BlockLabel, TruncationTarget};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ConfigError, Format, RunConfig};

/// Failed grid points; maps to exit code 3.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct NumericalFailure(pub String);

const SWEEP_COLUMNS: [&str; 10] = ["kappa", "chi", "b", "config_id", "Dmin", "argmin_j", "Q", "D_HF", "eps", "flags"];

fn open_sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Shortest round-trip form; exponent notation outside [1e-4, 1e6).
fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e6).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

fn header(cfg: &RunConfig, seed: u64) -> String {
    format!("# config: {}\n# seed: {seed}\n", cfg.echo())
}

fn label_text(label: &BlockLabel) -> String {
    let spin = match label.spin {
        Some(Spin::Up) => "up:",
        Some(Spin::Down) => "down:",
        None => "",
    };
    let parity: String = label
        .parity
        .iter()
        .map(|p| if *p == Parity::Even { '+' } else { '-' })
        .collect();
    format!("{spin}{parity}")
}

#[derive(Serialize)]
struct NonsOutput<'a> {
    config: &'a RunConfig,
    seed: u64,
    configuration: String,
    degeneracy: u64,
    spectrum: &'a harmonium::spectral::Spectrum,
}

pub fn nons(config: &Path, out: Option<PathBuf>, format: Option<Format>, seed: u64) -> Result<()> {
    let cfg = RunConfig::load(config)?;
    let spec = cfg.system_spec()?;
    let opts = cfg.solver()?;
    let gs = ground_state(&spec)?;
    let spectrum = natural_occupations(&gs, &opts)?;
    let mut sink = open_sink(cfg.output_path(out).as_deref())?;
    match cfg.output_format(format, Format::Json) {
        Format::Json => {
            let doc = NonsOutput {
                config: &cfg,
                seed,
                configuration: gs.configuration.id(),
                degeneracy: gs.configuration.degeneracy,
                spectrum: &spectrum,
            };
            serde_json::to_writer_pretty(&mut sink, &doc)?;
            writeln!(sink)?;
        }
        Format::Csv => {
            write!(sink, "{}", header(&cfg, seed))?;
            writeln!(sink, "# configuration: {}", gs.configuration.id())?;
            writeln!(sink, "# convergence: {:e}", spectrum.convergence)?;
            let mut w = csv::Writer::from_writer(&mut sink);
            w.write_record(["index", "value", "block"])?;
            for (i, (v, l)) in spectrum.values.iter().zip(&spectrum.labels).enumerate() {
                w.write_record([i.to_string(), num(*v), label_text(l)])?;
            }
            w.flush()?;
        }
    }
    sink.flush()?;
    Ok(())
}

/// |D_min| below this is reported as pinned; the spectra carry ~1e-15 rounding.
const PINNED_BELOW: f64 = 1e-12;

fn q_text(q: &QEstimate) -> String {
    match q {
        QEstimate::Finite(v) => format!("{v:.4}"),
        QEstimate::Pinned => "inf (pinned)".into(),
        QEstimate::Undefined => "undefined (no pinning face)".into(),
    }
}

fn summary(report: &PinningReport) -> String {
    let (n, d) = report.setting;
    let mut s = format!("setting (N,d) = ({n},{d})");
    if !report.catalog_complete {
        s.push_str(" [partial catalog: D_min is an upper bound]");
    }
    s.push('\n');
    if report.d_min.abs() <= PINNED_BELOW {
        s.push_str(&format!("pinned (D_min=0), constraint {}\n", report.argmin));
    } else {
        s.push_str(&format!("D_min = {:.6e}\nargmin = {}\n", report.d_min, report.argmin));
    }
    s.push_str(&format!("Q = {}\neps = {:.3e}\nD_HF = {:.6e}\n", q_text(&report.q), report.truncation_error, report.d_hf));
    s
}

#[derive(Serialize)]
struct PinningOutput<'a> {
    config: &'a RunConfig,
    seed: u64,
    configuration: String,
    report: &'a PinningReport,
}

pub fn pinning(config: &Path, out: Option<PathBuf>, format: Option<Format>, seed: u64) -> Result<()> {
    let cfg = RunConfig::load(config)?;
    let spec = cfg.system_spec()?;
    let opts = cfg.solver()?;
    let setting = cfg.setting()?;
    let catalog = cfg.catalog()?;
    let faces = pinning_faces(&catalog, None)?;
    let gs = ground_state(&spec)?;
    let spectrum = natural_occupations(&gs, &opts)?;
    let truncated = truncate_spectrum(
        &spectrum,
        TruncationTarget::Setting {
            n_active: setting.n,
            d_active: setting.d,
        },
    )
    .map_err(|e| ConfigError(e.to_string()))?;
    let report = pinning_report(&truncated, &catalog, &faces)?;

    let out = cfg.output_path(out);
    let text = summary(&report);
    if out.is_some() {
        print!("{text}");
    } else {
        eprint!("{text}");
    }
    let mut sink = open_sink(out.as_deref())?;
    match cfg.output_format(format, Format::Json) {
        Format::Json => {
            let doc = PinningOutput {
                config: &cfg,
                seed,
                configuration: gs.configuration.id(),
                report: &report,
            };
            serde_json::to_writer_pretty(&mut sink, &doc)?;
            writeln!(sink)?;
        }
        Format::Csv => {
            write!(sink, "{}", header(&cfg, seed))?;
            let mut w = csv::Writer::from_writer(&mut sink);
            w.write_record(["config_id", "Dmin", "argmin_j", "Q", "D_HF", "eps", "complete"])?;
            w.write_record([
                gs.configuration.id(),
                num(report.d_min),
                report.argmin.to_string(),
                num(report.q.value()),
                num(report.d_hf),
                num(report.truncation_error),
                report.catalog_complete.to_string(),
            ])?;
            w.flush()?;
        }
    }
    sink.flush()?;
    Ok(())
}

fn sweep_row(r: &SweepRecord) -> [String; 10] {
    [
        num(r.point.kappa),
        num(r.point.chi),
        r.point.field.map(num).unwrap_or_default(),
        r.config_id.clone(),
        num(r.d_min),
        r.argmin.to_string(),
        num(r.q),
        num(r.d_hf),
        num(r.eps),
        r.flags.join(";"),
    ]
}

/// Data rows of a previous run whose header matches `head`; only whole χ
/// lines of `line` rows are kept.
fn resumable_rows(path: &Path, head: &str, line: usize) -> Result<usize> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    if !text.starts_with(head) {
        return Err(ConfigError(format!("{} was written with a different config or seed", path.display())).into());
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows = 0;
    for rec in reader.records() {
        if rec.map(|r| r.len() == SWEEP_COLUMNS.len()).unwrap_or(false) {
            rows += 1;
        } else {
            break;
        }
    }
    Ok(rows / line * line)
}

#[derive(Serialize)]
struct SweepOutput<'a> {
    config: &'a RunConfig,
    seed: u64,
    records: &'a [SweepRecord],
    boundaries: Vec<harmonium::analysis::ConfigBoundary>,
}

pub fn sweep(config: &Path, out: Option<PathBuf>, format: Option<Format>, seed: u64, resume: bool) -> Result<()> {
    let cfg = RunConfig::load(config)?;
    let grid = cfg.grid()?;
    let pipeline = Pipeline::new(cfg.catalog()?, cfg.solver()?)?;
    let points = grid.points();
    let line = grid.kappa.points * grid.field.as_ref().map_or(1, |f| f.points);
    let out = cfg.output_path(out);
    let format = cfg.output_format(format, Format::Csv);

    if format == Format::Json {
        if resume {
            return Err(ConfigError("--resume needs CSV output".into()).into());
        }
        let mut records: Vec<SweepRecord> = points.into_par_iter().map(|p| run_point(&grid, p, &pipeline)).collect();
        mark_boundaries(&mut records);
        let mut sink = open_sink(out.as_deref())?;
        let doc = SweepOutput {
            config: &cfg,
            seed,
            boundaries: configuration_boundaries(&records),
            records: &records,
        };
        serde_json::to_writer_pretty(&mut sink, &doc)?;
        writeln!(sink)?;
        sink.flush()?;
        return failures(records.iter());
    }

    let head = format!("{}{}\n", header(&cfg, seed), SWEEP_COLUMNS.join(","));
    let done = match (&out, resume) {
        (Some(p), true) if p.exists() => resumable_rows(p, &head, line)?,
        (None, true) => return Err(ConfigError("--resume needs --out or output.path".into()).into()),
        _ => 0,
    };
    let mut sink: Box<dyn Write> = match &out {
        Some(p) if done > 0 => {
            let text = fs::read_to_string(p)?;
            let keep: String = text.split_inclusive('\n').take(3 + done).collect();
            fs::write(p, keep)?;
            Box::new(BufWriter::new(fs::OpenOptions::new().append(true).open(p)?))
        }
        _ => {
            let mut s = open_sink(out.as_deref())?;
            s.write_all(head.as_bytes())?;
            s
        }
    };
    let mut failed = Vec::new();
    for chunk in points[done..].chunks(line) {
        let mut records: Vec<SweepRecord> =
            chunk.par_iter().map(|p| run_point(&grid, *p, &pipeline)).collect();
        mark_boundaries(&mut records);
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut sink);
        for r in &records {
            w.write_record(sweep_row(r))?;
        }
        w.flush()?;
        drop(w);
        sink.flush()?;
        failed.extend(records.into_iter().filter(|r| !r.ok()));
    }
    failures(failed.iter())
}

fn failures<'a>(records: impl Iterator<Item = &'a SweepRecord>) -> Result<()> {
    let errs: Vec<String> = records
        .filter_map(|r| r.error.as_ref().map(|e| format!("κ={} χ={}: {e}", r.point.kappa, r.point.chi)))
        .collect();
    match errs.first() {
        None => Ok(()),
        Some(first) => Err(NumericalFailure(format!("{} grid point(s) failed, first at {first}", errs.len())).into()),
    }
}

pub fn catalog_validate(paths: &[PathBuf], samples: usize, seed: u64, tolerance: f64) -> Result<()> {
    if paths.is_empty() {
        return Err(ConfigError("no catalog files given".into()).into());
    }
    let mut bad = 0;
    for path in paths {
        let catalog = load_catalog(path, None)?;
        let report = validate_catalog(&catalog, samples, seed, tolerance);
        if report.passed() {
            println!(
                "{}: OK, {}/{} vertices, {} samples non-negative",
                path.display(),
                report.slater_ok,
                report.slater_total,
                report.samples
            );
        } else {
            bad += 1;
            println!(
                "{}: FAIL, {}/{} vertices, {} of {} samples violate (min D = {:.3e})",
                path.display(),
                report.slater_ok,
                report.slater_total,
                report.violations,
                report.samples,
                report.min_value
            );
        }
    }
    if bad > 0 {
        return Err(ConfigError(format!("{bad} catalog(s) failed validation")).into());
    }
    Ok(())
}

pub fn catalog_list() -> Result<()> {
    let dir = catalog_dir_override();
    println!("{:<8}{:>12}  {:<10}source", "(N,d)", "constraints", "complete");
    for (n, d) in builtin_settings() {
        let c = find_catalog(n, d)?;
        println!(
            "{:<8}{:>12}  {:<10}{}",
            format!("({n},{d})"),
            c.len(),
            if c.complete { "yes" } else { "partial" },
            c.source
        );
    }
    if let Some(dir) = dir {
        let builtin = builtin_settings();
        let mut extra: Vec<PathBuf> = fs::read_dir(&dir)
            .with_context(|| format!("cannot read catalog directory {}", dir.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension().is_some_and(|x| x == "json")
                    && !builtin
                        .iter()
                        .any(|&(n, d)| p.file_name().is_some_and(|f| *f == *catalog_file_name(n, d)))
            })
            .collect();
        extra.sort();
        for p in extra {
            match load_catalog(&p, None) {
                Ok(c) => {
                    let (n, d) = c.setting();
                    println!(
                        "{:<8}{:>12}  {:<10}{}",
                        format!("({n},{d})"),
                        c.len(),
                        if c.complete { "yes" } else { "partial" },
                        p.display()
                    );
                }
                Err(e) => println!("{}: unreadable ({e})", p.display()),
            }
        }
    }
    Ok(())
}
