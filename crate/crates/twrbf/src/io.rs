//! Channel, beamformer and dataset files.
//!
//! Complex vectors are JSON arrays of `[re, im]` pairs. A channel file holds
//! `h1`, `h2` and optionally `h1r`, `h2r`; omitting both backward vectors
//! means the channels are reciprocal.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use twrbf_core::channel::{BeamVector, ChannelRealization};
use twrbf_core::Complex64;

use crate::config::{ExperimentConfig, OutputFormat};
use crate::error::{Error, Result};
use crate::experiment::{Dataset, Row};

pub type ComplexPairs = Vec<[f64; 2]>;

pub fn to_pairs(v: &[Complex64]) -> ComplexPairs {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn from_pairs(v: &[[f64; 2]]) -> Result<Vec<Complex64>> {
    if v.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Input("complex entries must be finite".into()));
    }
    Ok(v.iter().map(|p| Complex64::new(p[0], p[1])).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    pub h1: ComplexPairs,
    pub h2: ComplexPairs,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h1r: Option<ComplexPairs>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h2r: Option<ComplexPairs>,
}

impl ChannelFile {
    pub fn from_realization(ch: &ChannelRealization) -> Self {
        let (h1r, h2r) = if ch.reciprocal {
            (None, None)
        } else {
            (Some(to_pairs(&ch.h1r)), Some(to_pairs(&ch.h2r)))
        };
        ChannelFile { h1: to_pairs(&ch.h1), h2: to_pairs(&ch.h2), h1r, h2r }
    }

    pub fn to_realization(&self) -> Result<ChannelRealization> {
        let h1 = from_pairs(&self.h1)?;
        let h2 = from_pairs(&self.h2)?;
        let ch = match (&self.h1r, &self.h2r) {
            (None, None) => ChannelRealization::reciprocal(h1, h2)?,
            (Some(a), Some(b)) => ChannelRealization::new(h1, h2, from_pairs(a)?, from_pairs(b)?)?,
            _ => return Err(Error::Input("give both backward channels or neither".into())),
        };
        Ok(ch)
    }
}

/// A beamformer file is either `{"w": [[re, im], ...]}` or the bare array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BeamFile {
    Wrapped { w: ComplexPairs },
    Bare(ComplexPairs),
}

impl BeamFile {
    pub fn to_beam(&self) -> Result<BeamVector> {
        let pairs = match self {
            BeamFile::Wrapped { w } | BeamFile::Bare(w) => w,
        };
        Ok(BeamVector::new(from_pairs(pairs)?))
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn read_channels(path: &Path) -> Result<ChannelRealization> {
    let file: ChannelFile = serde_json::from_str(&read_text(path)?)?;
    file.to_realization()
}

pub fn write_channels(path: &Path, ch: &ChannelRealization) -> Result<()> {
    write_json(path, &ChannelFile::from_realization(ch))
}

pub fn read_beam(path: &Path) -> Result<BeamVector> {
    let file: BeamFile = serde_json::from_str(&read_text(path)?)?;
    file.to_beam()
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_rows_csv<W: Write>(out: W, rows: &[Row]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

pub fn read_rows_csv(path: &Path) -> Result<Vec<Row>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<Vec<Row>, _>>()?)
}

/// Config echo plus the dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub config: ExperimentConfig,
    pub dataset: Dataset,
}

fn with_extension(base: &Path, ext: &str) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Writes the dataset next to `base` in the requested formats and returns
/// the files written.
pub fn write_dataset(base: &Path, format: OutputFormat, config: &ExperimentConfig, dataset: &Dataset) -> Result<Vec<PathBuf>> {
    if let Some(dir) = base.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut written = Vec::new();
    if matches!(format, OutputFormat::Csv | OutputFormat::Both) {
        let path = with_extension(base, "csv");
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        write_rows_csv(std::io::BufWriter::new(file), &dataset.rows)?;
        written.push(path);
    }
    if matches!(format, OutputFormat::Json | OutputFormat::Both) {
        let path = with_extension(base, "json");
        write_json(&path, &Envelope { config: config.clone(), dataset: dataset.clone() })?;
        written.push(path);
    }
    Ok(written)
}
