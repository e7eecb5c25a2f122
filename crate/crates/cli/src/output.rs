//! JSON-lines result files and their CSV projection.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use xzzx::stats::TrialBatch;

/// Append-only JSON-lines writer; every record is flushed as it lands.
pub struct RecordWriter {
    out: Option<BufWriter<File>>,
    path: Option<PathBuf>,
}

impl RecordWriter {
    pub fn create(path: Option<&Path>) -> Result<Self> {
        let out = match path {
            Some(p) => {
                if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                }
                Some(BufWriter::new(File::create(p).with_context(|| format!("cannot write {}", p.display()))?))
            }
            None => None,
        };
        Ok(RecordWriter { out, path: path.map(Path::to_path_buf) })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn write<T: Serialize>(&mut self, record: &T) -> Result<()> {
        if let Some(out) = &mut self.out {
            serde_json::to_writer(&mut *out, record)?;
            out.write_all(b"\n")?;
            out.flush()?;
        }
        Ok(())
    }
}

pub fn read_batches(path: &Path) -> Result<Vec<TrialBatch>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let batch: TrialBatch = serde_json::from_str(&line)
            .with_context(|| format!("{}:{}: not a batch record", path.display(), i + 1))?;
        out.push(batch);
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct CsvRow<'a> {
    geometry: String,
    noise: &'a str,
    decoder: &'a str,
    p: f64,
    eta: String,
    d: usize,
    rounds: usize,
    trials: u64,
    failures_logical: u64,
    failures_temporal: u64,
    failure_rate: f64,
    std_error: f64,
    seed: u64,
    wall_time: f64,
}

pub fn eta_label(eta: f64) -> String {
    if eta.is_infinite() {
        "inf".into()
    } else {
        eta.to_string()
    }
}

/// One CSV row per batch, with the failure rate and its binomial error.
pub fn write_csv<W: Write>(out: W, batches: &[TrialBatch]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for b in batches {
        w.serialize(CsvRow {
            geometry: b.geometry.label(),
            noise: match b.noise {
                xzzx::stats::NoiseKind::CodeCapacity => "code-capacity",
                xzzx::stats::NoiseKind::Phenomenological => "phenomenological",
            },
            decoder: b.decoder.as_str(),
            p: b.p,
            eta: eta_label(b.eta),
            d: b.d,
            rounds: b.rounds,
            trials: b.trials,
            failures_logical: b.failures_logical,
            failures_temporal: b.failures_temporal,
            failure_rate: b.rate(),
            std_error: b.std_error(),
            seed: b.seed,
            wall_time: b.wall_time,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn export_csv(input: &Path, output: &Path) -> Result<usize> {
    let batches = read_batches(input)?;
    let file = File::create(output).with_context(|| format!("cannot write {}", output.display()))?;
    write_csv(BufWriter::new(file), &batches)?;
    Ok(batches.len())
}
