use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use flexsum::aggregate::{Population, PopulationFile};

pub fn version() -> String {
    format!("v{}", flexsum::experiment::VERSION)
}

/// Provenance block embedded in every JSON output.
#[derive(Serialize)]
pub struct Meta<C: Serialize> {
    pub tool: &'static str,
    pub version: String,
    pub seed: u64,
    pub config: C,
}

impl<C: Serialize> Meta<C> {
    pub fn new(seed: u64, config: C) -> Self {
        Self { tool: "flexsum", version: version(), seed, config }
    }
}

/// Writes `text` to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

pub fn emit_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    emit(path, &text)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("malformed JSON in {}", path.display()))
}

pub fn read_population(path: &PathBuf) -> Result<Population> {
    let file: PopulationFile = read_json(path)?;
    if file.devices.is_empty() {
        bail!("population file {} contains no devices", path.display());
    }
    file.into_population().with_context(|| format!("invalid population in {}", path.display()))
}

/// Signal CSV with columns `t,g_kW`, rows in period order.
pub fn read_signal(path: &Path) -> Result<Vec<f64>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("cannot read signal {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let col = headers
        .iter()
        .position(|h| h.trim() == "g_kW")
        .with_context(|| format!("signal {} has no g_kW column", path.display()))?;
    let mut values = Vec::new();
    for (k, row) in reader.records().enumerate() {
        let row = row?;
        let v: f64 = row
            .get(col)
            .unwrap_or("")
            .trim()
            .parse()
            .with_context(|| format!("bad value in row {} of {}", k + 1, path.display()))?;
        values.push(v);
    }
    Ok(values)
}

pub fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<T>().with_context(|| format!("invalid {what} entry `{}`", s.trim())))
        .collect()
}
