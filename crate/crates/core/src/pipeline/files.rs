//! On-disk formats shared between pipeline stages.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::voting::{RangeKey, RankedEntry, SolutionKey, VotingTally};

use super::PipelineError;

/// One measured admittance-change row: the ΔY observed at a calibrated
/// excitation frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRow {
    pub freq_index: usize,
    pub omega: f64,
    pub delta_y: f64,
}

/// The measurement file consumed by the identify stage; one row per
/// calibrated frequency.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeasurementFile {
    pub rows: Vec<MeasurementRow>,
}

impl MeasurementFile {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), PipelineError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["freq_index", "omega", "delta_y"])
            .map_err(|e| PipelineError::Format(e.to_string()))?;
        for row in &self.rows {
            w.write_record(&[
                row.freq_index.to_string(),
                format!("{:?}", row.omega),
                format!("{:?}", row.delta_y),
            ])
            .map_err(|e| PipelineError::Format(e.to_string()))?;
        }
        w.flush()
            .map_err(|e| PipelineError::Format(e.to_string()))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self, PipelineError> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        let mut rows = Vec::new();
        for record in r.records() {
            let record = record.map_err(|e| PipelineError::Format(e.to_string()))?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let parse = |idx: usize| -> Result<&str, PipelineError> {
                record.get(idx).ok_or_else(|| {
                    PipelineError::Format(format!("line {line}: missing column {idx}"))
                })
            };
            rows.push(MeasurementRow {
                freq_index: parse(0)?
                    .trim()
                    .parse()
                    .map_err(|e| PipelineError::Format(format!("line {line}: freq_index: {e}")))?,
                omega: parse(1)?
                    .trim()
                    .parse()
                    .map_err(|e| PipelineError::Format(format!("line {line}: omega: {e}")))?,
                delta_y: parse(2)?
                    .trim()
                    .parse()
                    .map_err(|e| PipelineError::Format(format!("line {line}: delta_y: {e}")))?,
            });
        }
        if rows.is_empty() {
            return Err(PipelineError::Format("measurement csv has no rows".into()));
        }
        Ok(Self { rows })
    }
}

/// A tally row as persisted to CSV: solution keys carry an exact severity,
/// range keys an interval label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TallyRow {
    pub segment: usize,
    pub severity_or_range: String,
    pub score: f64,
    pub percentage: f64,
}

pub fn solution_tally_rows(tally: &VotingTally<SolutionKey>) -> Vec<TallyRow> {
    crate::voting::rank_report(tally, usize::MAX)
        .into_iter()
        .map(|e: RankedEntry<SolutionKey>| TallyRow {
            segment: e.key.segment(),
            severity_or_range: e.key.severity_string(),
            score: e.score,
            percentage: e.percentage,
        })
        .collect()
}

pub fn range_tally_rows(tally: &VotingTally<RangeKey>) -> Vec<TallyRow> {
    crate::voting::rank_report(tally, usize::MAX)
        .into_iter()
        .map(|e: RankedEntry<RangeKey>| TallyRow {
            segment: e.key.segment(),
            severity_or_range: e.key.range_string(),
            score: e.score,
            percentage: e.percentage,
        })
        .collect()
}

pub fn write_tally_csv(path: &Path, rows: &[TallyRow]) -> Result<(), PipelineError> {
    let mut out = String::from("segment,severity_or_range,score,percentage\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{:?},{:?}\n",
            row.segment, row.severity_or_range, row.score, row.percentage
        ));
    }
    write_text(path, &out)
}

pub fn read_tally_csv(path: &Path) -> Result<Vec<TallyRow>, PipelineError> {
    let text = read_text(path)?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(PipelineError::Format(format!(
                "{}: line {}: expected 4 columns",
                path.display(),
                i + 1
            )));
        }
        let parse_err =
            |e: String| PipelineError::Format(format!("{}: line {}: {e}", path.display(), i + 1));
        rows.push(TallyRow {
            segment: fields[0]
                .parse()
                .map_err(|e: std::num::ParseIntError| parse_err(e.to_string()))?,
            severity_or_range: fields[1].to_string(),
            score: fields[2]
                .parse()
                .map_err(|e: std::num::ParseFloatError| parse_err(e.to_string()))?,
            percentage: fields[3]
                .parse()
                .map_err(|e: std::num::ParseFloatError| parse_err(e.to_string()))?,
        });
    }
    Ok(rows)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|source| PipelineError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, text).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_text(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let text = serde_json::to_string_pretty(value).map_err(|source| PipelineError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    write_text(path, &(text + "\n"))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, PipelineError> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|source| PipelineError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Canonical artifact paths under one output directory.
#[derive(Debug, Clone)]
pub struct OutputLayout {
    pub root: PathBuf,
}

impl OutputLayout {
    pub fn new(root: &Path) -> Self {
        Self {
            root: root.to_path_buf(),
        }
    }

    pub fn model(&self) -> PathBuf {
        self.root.join("model.json")
    }

    pub fn training(&self) -> PathBuf {
        self.root.join("training.csv")
    }

    pub fn measurement(&self) -> PathBuf {
        self.root.join("measurement.csv")
    }

    pub fn surfaces_dir(&self) -> PathBuf {
        self.root.join("surfaces")
    }

    pub fn surface(&self, freq_index: usize) -> PathBuf {
        self.surfaces_dir()
            .join(format!("surface_{freq_index:03}.json"))
    }

    pub fn calibration_diagnostics(&self) -> PathBuf {
        self.root.join("calibration_diagnostics.csv")
    }

    pub fn archives_dir(&self) -> PathBuf {
        self.root.join("archives")
    }

    pub fn archive(&self, run: usize) -> PathBuf {
        self.archives_dir().join(format!("run_{run:03}.csv"))
    }

    pub fn trace(&self, run: usize) -> PathBuf {
        self.archives_dir().join(format!("trace_{run:03}.csv"))
    }

    pub fn tally(&self, name: &str) -> PathBuf {
        self.root.join(format!("tally_{name}.csv"))
    }

    pub fn identify_meta(&self) -> PathBuf {
        self.root.join("identify_meta.json")
    }

    pub fn validation(&self) -> PathBuf {
        self.root.join("validation.json")
    }

    pub fn report(&self) -> PathBuf {
        self.root.join("report.md")
    }

    pub fn plot_grid(&self, name: &str) -> PathBuf {
        self.root.join(format!("plot_{name}.csv"))
    }
}
