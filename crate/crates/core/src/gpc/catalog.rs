use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::Deserialize;
use serde_json::Value;

use crate::error::{Error, Result};

pub type Rational = Ratio<i64>;

/// Environment variable naming a directory of catalog files that take
/// precedence over the built-in ones.
pub const CATALOG_DIR_ENV: &str = "HARMONIUM_CATALOG_DIR";

/// D(λ) = k0 + k·λ ≥ 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub k0: Rational,
    pub k: Vec<Rational>,
}

fn to_f64(r: &Rational) -> f64 {
    r.to_f64().expect("rational fits in f64")
}

impl Constraint {
    pub fn value(&self, lambda: &[f64]) -> f64 {
        to_f64(&self.k0) + self.k.iter().zip(lambda).map(|(k, l)| to_f64(k) * l).sum::<f64>()
    }

    pub fn coefficients(&self) -> Vec<f64> {
        self.k.iter().map(to_f64).collect()
    }

    pub fn offset(&self) -> f64 {
        to_f64(&self.k0)
    }

    pub fn norm2(&self) -> f64 {
        self.k.iter().map(|k| to_f64(k).powi(2)).sum::<f64>().sqrt()
    }

    /// Exact value at a 0/1 vector given by its set of ones.
    pub fn value_at_ones(&self, ones: impl IntoIterator<Item = usize>) -> Rational {
        ones.into_iter().fold(self.k0, |acc, i| acc + self.k[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpcCatalog {
    pub n: usize,
    pub d: usize,
    pub constraints: Vec<Constraint>,
    /// False when the list is known to be only a subset of the facets.
    pub complete: bool,
    pub provenance: String,
    pub source: String,
}

#[derive(Deserialize)]
struct RawCatalog {
    #[serde(rename = "N")]
    n: usize,
    d: usize,
    constraints: Vec<RawConstraint>,
    #[serde(default)]
    complete: Option<bool>,
    #[serde(default)]
    provenance: Option<String>,
}

#[derive(Deserialize)]
struct RawConstraint {
    k0: Value,
    k: Vec<Value>,
}

fn parse_rational(v: &Value) -> std::result::Result<Rational, String> {
    match v {
        Value::String(s) => Rational::from_str(s.trim()).map_err(|_| format!("'{s}' is not a rational a/b")),
        Value::Number(n) => n
            .as_i64()
            .map(Rational::from_integer)
            .ok_or_else(|| format!("{n} is not an integer; write fractions as \"a/b\"")),
        other => Err(format!("{other} is not a rational")),
    }
}

/// Line of the `idx`-th constraint object, found by its `"k0"` key.
fn constraint_line(text: &str, idx: usize) -> usize {
    text.match_indices("\"k0\"")
        .nth(idx)
        .map_or(1, |(pos, _)| text[..pos].matches('\n').count() + 1)
}

impl GpcCatalog {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let err = |line: usize, message: String| Error::Catalog {
            source_name: source.to_string(),
            line,
            message,
        };
        let raw: RawCatalog = serde_json::from_str(text).map_err(|e| err(e.line(), e.to_string()))?;
        if raw.n == 0 || raw.d < raw.n {
            return Err(err(1, format!("setting (N={}, d={}) is not valid", raw.n, raw.d)));
        }
        let mut constraints = Vec::with_capacity(raw.constraints.len());
        for (j, c) in raw.constraints.iter().enumerate() {
            let line = constraint_line(text, j);
            if c.k.len() != raw.d {
                return Err(err(line, format!("constraint {j} has {} coefficients, expected {}", c.k.len(), raw.d)));
            }
            let k0 = parse_rational(&c.k0).map_err(|m| err(line, format!("constraint {j}: {m}")))?;
            let k = c
                .k
                .iter()
                .map(parse_rational)
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|m| err(line, format!("constraint {j}: {m}")))?;
            if k.iter().all(Zero::is_zero) {
                return Err(err(line, format!("constraint {j} has only zero coefficients")));
            }
            constraints.push(Constraint { k0, k });
        }
        let catalog = GpcCatalog {
            n: raw.n,
            d: raw.d,
            constraints,
            complete: raw.complete.unwrap_or(true),
            provenance: raw.provenance.unwrap_or_default(),
            source: source.to_string(),
        };
        catalog.check_hartree_fock().map_err(|(j, v)| {
            err(
                constraint_line(text, j),
                format!("constraint {j} is violated at the Hartree–Fock point (D = {v})"),
            )
        })?;
        Ok(catalog)
    }

    /// Exact check of every constraint at (1,…,1,0,…,0).
    fn check_hartree_fock(&self) -> std::result::Result<(), (usize, Rational)> {
        for (j, c) in self.constraints.iter().enumerate() {
            let v = c.value_at_ones(0..self.n);
            if v < Rational::zero() {
                return Err((j, v));
            }
        }
        Ok(())
    }

    pub fn setting(&self) -> (usize, usize) {
        (self.n, self.d)
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<String> = self
            .constraints
            .iter()
            .map(|c| {
                let k: Vec<String> = c.k.iter().map(|r| format!("\"{r}\"")).collect();
                format!("    {{\"k0\": \"{}\", \"k\": [{}]}}", c.k0, k.join(", "))
            })
            .collect();
        format!(
            "{{\n  \"N\": {}, \"d\": {},\n  \"complete\": {},\n  \"provenance\": {},\n  \"constraints\": [\n{}\n  ]\n}}\n",
            self.n,
            self.d,
            self.complete,
            Value::String(self.provenance.clone()),
            rows.join(",\n")
        )
    }
}

const BUILTIN: &[(usize, usize, &str)] = &[
    (2, 4, include_str!("../../catalogs/n2_d4.json")),
    (2, 5, include_str!("../../catalogs/n2_d5.json")),
    (2, 6, include_str!("../../catalogs/n2_d6.json")),
    (2, 7, include_str!("../../catalogs/n2_d7.json")),
    (2, 8, include_str!("../../catalogs/n2_d8.json")),
    (2, 9, include_str!("../../catalogs/n2_d9.json")),
    (2, 10, include_str!("../../catalogs/n2_d10.json")),
    (3, 6, include_str!("../../catalogs/n3_d6.json")),
    (3, 7, include_str!("../../catalogs/n3_d7.json")),
    (3, 8, include_str!("../../catalogs/n3_d8.json")),
    (3, 9, include_str!("../../catalogs/n3_d9.json")),
    (3, 10, include_str!("../../catalogs/n3_d10.json")),
    (4, 7, include_str!("../../catalogs/n4_d7.json")),
    (4, 8, include_str!("../../catalogs/n4_d8.json")),
    (4, 9, include_str!("../../catalogs/n4_d9.json")),
    (4, 10, include_str!("../../catalogs/n4_d10.json")),
];

pub fn builtin_settings() -> Vec<(usize, usize)> {
    BUILTIN.iter().map(|&(n, d, _)| (n, d)).collect()
}

pub fn builtin_catalog(n: usize, d: usize) -> Result<GpcCatalog> {
    let (_, _, text) = BUILTIN
        .iter()
        .find(|&&(bn, bd, _)| (bn, bd) == (n, d))
        .ok_or(Error::UnknownSetting { n, d })?;
    GpcCatalog::parse(text, &format!("builtin:n{n}_d{d}"))
}

pub fn catalog_file_name(n: usize, d: usize) -> String {
    format!("n{n}_d{d}.json")
}

/// Loads a catalog file; with `setting` given, the file must match it.
pub fn load_catalog(path: &Path, setting: Option<(usize, usize)>) -> Result<GpcCatalog> {
    let text = std::fs::read_to_string(path)?;
    let catalog = GpcCatalog::parse(&text, &path.display().to_string())?;
    if let Some((n, d)) = setting {
        if catalog.setting() != (n, d) {
            return Err(Error::UnknownSetting { n, d });
        }
    }
    Ok(catalog)
}

pub fn catalog_dir_override() -> Option<PathBuf> {
    std::env::var_os(CATALOG_DIR_ENV).map(PathBuf::from)
}

/// Catalog for (N, d): from the override directory when it holds one,
/// otherwise built in.
pub fn find_catalog(n: usize, d: usize) -> Result<GpcCatalog> {
    if let Some(dir) = catalog_dir_override() {
        let path = dir.join(catalog_file_name(n, d));
        if path.exists() {
            return load_catalog(&path, Some((n, d)));
        }
    }
    builtin_catalog(n, d)
}
