//! File formats: versioned JSON envelopes for configs and plans, RFC 4180
//! CSV outputs, and the naming rule for CSVs derived from an --out path.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use fcache_core::latency::SchedulePlan;
use fcache_core::model::ScenarioConfig;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// Version stamped into every JSON file this tool reads or writes.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
pub struct ConfigFile {
    pub version: u32,
    #[serde(flatten)]
    pub config: ScenarioConfig,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PlanFile {
    pub version: u32,
    #[serde(flatten)]
    pub plan: SchedulePlan,
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn check_version(version: u32, path: &Path) -> anyhow::Result<()> {
    anyhow::ensure!(
        version == FORMAT_VERSION,
        "{}: format version {version}, this tool reads version {FORMAT_VERSION}",
        path.display()
    );
    Ok(())
}

/// Companion CSV next to an --out file: `plan.json` + "trace" gives
/// `plan.trace.csv`.
pub fn derived_csv(out: &Path, tag: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("out")
        .to_owned();
    out.with_file_name(format!("{stem}.{tag}.csv"))
}

/// The output directory must already exist; nothing should fail after the
/// solver has done its work.
pub fn check_parent(path: &Path) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            anyhow::ensure!(
                parent.is_dir(),
                "output directory {} does not exist",
                parent.display()
            );
        }
    }
    Ok(())
}

pub fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> anyhow::Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush()
        .with_context(|| format!("writing {}", path.display()))
}

#[derive(Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub fractional_files_remaining: usize,
}

#[derive(Serialize)]
pub struct SweepRow {
    pub cache_size: u64,
    pub objective: f64,
}

#[derive(Serialize)]
pub struct ResultRow {
    pub file_id: usize,
    pub mean_latency: f64,
    pub stderr: f64,
    pub samples: usize,
}

#[derive(Serialize)]
pub struct ChunkRow {
    pub slot: usize,
    pub chunks_from_cache: u64,
    pub chunks_from_storage: u64,
}

#[derive(Serialize)]
pub struct BoundRow {
    pub file_id: usize,
    pub u_i: f64,
    pub z_i: f64,
    pub d_i: u32,
}

#[derive(Serialize)]
pub struct EvolutionRow {
    pub bin_id: usize,
    pub file_id: usize,
    pub d_i: u32,
}

#[derive(Serialize)]
pub struct TransitionRow {
    pub time: f64,
    pub bin_id: usize,
    pub file_id: usize,
    pub from_d: u32,
    pub to_d: u32,
    pub deferred: bool,
}
