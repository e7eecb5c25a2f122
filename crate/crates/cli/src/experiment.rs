//! Executes a validated configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Result};
use serde::{Deserialize, Serialize};
use xzzx::stats::{
    cell_seed, fit_ansatz, fit_subthreshold, fit_threshold, rare_event_estimate, run_batch, BatchParams, RatePoint,
    ScalingModel, StratifiedOptions, StratumEstimate, TrialBatch,
};
use xzzx::{aspect_ratio_optimum, hashing_bound, BiasSpec, LatticeGeometry};

use crate::config::{Estimator, ExperimentConfig, ExperimentKind};
use crate::output::{eta_label, write_csv, RecordWriter};

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub seed: Option<u64>,
    /// 0 uses every core.
    pub workers: usize,
    pub out: Option<PathBuf>,
}

/// Record written by the stratified estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StratifiedRecord {
    pub geometry: LatticeGeometry,
    pub decoder: xzzx::DecoderId,
    pub p: f64,
    #[serde(with = "xzzx::noise::eta_serde")]
    pub eta: f64,
    pub d: usize,
    pub estimate: f64,
    pub std_error: f64,
    pub truncated_tail: f64,
    pub strata: Vec<StratumEstimate>,
    pub warnings: Vec<String>,
    pub seed: u64,
    pub wall_time: f64,
}

#[derive(Debug, Serialize)]
struct HashingRow {
    #[serde(with = "xzzx::noise::eta_serde")]
    eta: f64,
    r: [f64; 3],
    p_hb: f64,
}

#[derive(Debug, Serialize)]
struct AspectRow {
    p: f64,
    #[serde(with = "xzzx::noise::eta_serde")]
    eta: f64,
    ratio: f64,
}

fn progress(i: usize, total: usize, params: &BatchParams, line: &str) {
    eprintln!(
        "[{}/{}] {} {} p={} eta={} rounds={}: {}",
        i + 1,
        total,
        params.geometry,
        params.decoder,
        params.p,
        eta_label(params.eta),
        params.rounds,
        line
    );
}

/// Run the experiment, streaming records to the output file, and return the summary text.
pub fn run(config: &ExperimentConfig, options: &RunOptions) -> Result<String> {
    config.validate()?;
    let seed = options.seed.unwrap_or(config.seed);
    let out_path = options.out.clone().or_else(|| config.out.clone());
    let mut writer = RecordWriter::create(out_path.as_deref())?;
    let mut summary = String::new();
    match config.kind {
        ExperimentKind::HashingBound => {
            writeln!(summary, "{:>10}  {:>10}", "eta", "p_hb")?;
            for eta in &config.eta {
                let spec = BiasSpec::new(0.5, eta.0);
                let row = HashingRow { eta: eta.0, r: spec.r(), p_hb: hashing_bound(spec.r())? };
                writer.write(&row)?;
                writeln!(summary, "{:>10}  {:>10.6}", eta_label(eta.0), row.p_hb)?;
            }
        }
        ExperimentKind::AspectRatio => {
            writeln!(summary, "{:>10}  {:>10}  {:>8}", "p", "eta", "dz/dx")?;
            for eta in &config.eta {
                for &p in &config.p {
                    let row = AspectRow { p, eta: eta.0, ratio: aspect_ratio_optimum(p, eta.0)? };
                    writer.write(&row)?;
                    writeln!(summary, "{:>10}  {:>10}  {:>8.4}", p, eta_label(eta.0), row.ratio)?;
                }
            }
        }
        ExperimentKind::SubthresholdScan if config.estimator == Estimator::Stratified => {
            let cells = config.cells()?;
            let opts = StratifiedOptions {
                budget: config.budget.unwrap_or(0),
                workers: options.workers,
                ..Default::default()
            };
            let mut records = Vec::new();
            for (i, params) in cells.iter().enumerate() {
                let start = Instant::now();
                let s = cell_seed(seed, i as u64);
                let est = rare_event_estimate(params, s, &opts)?;
                let record = StratifiedRecord {
                    geometry: params.geometry,
                    decoder: params.decoder,
                    p: params.p,
                    eta: params.eta,
                    d: params.geometry.size_parameter(),
                    estimate: est.estimate,
                    std_error: est.std_error,
                    truncated_tail: est.truncated_tail,
                    strata: est.strata,
                    warnings: est.warnings,
                    seed: s,
                    wall_time: if config.record_wall_time { start.elapsed().as_secs_f64() } else { 0.0 },
                };
                progress(i, cells.len(), params, &format!("P = {:.4e} +- {:.2e}", record.estimate, record.std_error));
                writer.write(&record)?;
                records.push(record);
            }
            let points = records.iter().map(|r| (r.eta, r.p, RatePoint { d: r.d, rate: r.estimate, std_error: r.std_error }));
            summarise_subthreshold(&mut summary, points)?;
        }
        kind => {
            let cells = config.cells()?;
            let mut batches = Vec::new();
            for (i, params) in cells.iter().enumerate() {
                let mut b = run_batch(params, config.trials, cell_seed(seed, i as u64), options.workers)?;
                if !config.record_wall_time {
                    b.wall_time = 0.0;
                }
                progress(
                    i,
                    cells.len(),
                    params,
                    &format!("{}/{} failed ({} temporal) in {:.1}s", b.failures(), b.trials, b.failures_temporal, b.wall_time),
                );
                writer.write(&b)?;
                batches.push(b);
            }
            if let Some(path) = writer.path() {
                let csv_path = path.with_extension("csv");
                write_csv(std::fs::File::create(&csv_path)?, &batches)?;
            }
            summarise_batches(&mut summary, &batches)?;
            match kind {
                ExperimentKind::ThresholdScan => summarise_thresholds(&mut summary, &batches)?,
                ExperimentKind::SubthresholdScan => {
                    let points = batches.iter().map(|b| (b.eta, b.p, RatePoint::from(b)));
                    summarise_subthreshold(&mut summary, points)?;
                }
                _ => {}
            }
        }
    }
    Ok(summary)
}

fn summarise_batches(summary: &mut String, batches: &[TrialBatch]) -> Result<()> {
    writeln!(summary, "{:<18} {:>8} {:>8} {:>9} {:>10} {:>10}", "geometry", "eta", "p", "trials", "rate", "std err")?;
    for b in batches {
        writeln!(
            summary,
            "{:<18} {:>8} {:>8} {:>9} {:>10.5} {:>10.5}",
            b.geometry.label(),
            eta_label(b.eta),
            b.p,
            b.trials,
            b.rate(),
            b.std_error()
        )?;
    }
    Ok(())
}

/// Group key: everything but p and the lattice size.
fn series_key(b: &TrialBatch) -> String {
    let family = match b.geometry {
        LatticeGeometry::Periodic { rows, cols } if rows == cols => "periodic",
        LatticeGeometry::Periodic { .. } => "periodic-rect",
        LatticeGeometry::OpenRectangular { .. } => "open",
    };
    format!("{family} {} eta={} {:?}", b.decoder, eta_label(b.eta), b.noise)
}

/// Threshold fit of every series; a failed fit is an error.
pub fn summarise_thresholds(summary: &mut String, batches: &[TrialBatch]) -> Result<()> {
    let mut groups: BTreeMap<String, Vec<TrialBatch>> = BTreeMap::new();
    for b in batches {
        groups.entry(series_key(b)).or_default().push(b.clone());
    }
    for (key, group) in groups {
        match fit_threshold(&group) {
            Ok(fit) => writeln!(
                summary,
                "threshold [{key}]: p_c = {:.5} +- {:.5} (jackknife), nu = {:.3} +- {:.3}, chi2/dof = {:.3}, window [{:.4}, {:.4}]",
                fit.p_c, fit.p_c_err, fit.nu, fit.nu_err, fit.chi2_per_dof, fit.window.0, fit.window.1
            )?,
            Err(e) => bail!("threshold fit for [{key}] failed: {e}"),
        }
    }
    Ok(())
}

pub fn summarise_subthreshold(summary: &mut String, points: impl Iterator<Item = (f64, f64, RatePoint)>) -> Result<()> {
    let mut groups: BTreeMap<(u64, u64), Vec<RatePoint>> = BTreeMap::new();
    for (eta, p, pt) in points {
        groups.entry((eta.to_bits(), p.to_bits())).or_default().push(pt);
    }
    let mut by_eta: BTreeMap<u64, Vec<(f64, Vec<RatePoint>)>> = BTreeMap::new();
    for ((eta, p), pts) in groups {
        let (eta_v, p_v) = (f64::from_bits(eta), f64::from_bits(p));
        let quad = fit_subthreshold(&pts, ScalingModel::QuadraticExponent);
        let lin = fit_subthreshold(&pts, ScalingModel::LinearExponent);
        match (&quad, &lin) {
            (Ok(q), Ok(l)) => writeln!(
                summary,
                "eta={} p={}: A e^(B d^2) B = {:.4e} chi2 = {:.3}; A e^(B d) B = {:.4e} chi2 = {:.3}; better: {}",
                eta_label(eta_v),
                p_v,
                q.b,
                q.chi2,
                l.b,
                l.chi2,
                if q.chi2 < l.chi2 { "quadratic" } else { "linear" }
            )?,
            _ => writeln!(summary, "eta={} p={}: too few nonzero points to fit", eta_label(eta_v), p_v)?,
        }
        by_eta.entry(eta).or_default().push((p_v, pts));
    }
    for (eta, data) in by_eta {
        let eta = f64::from_bits(eta);
        if data.len() >= 2 && eta.is_finite() {
            match fit_ansatz(eta, &data) {
                Ok(a) => writeln!(
                    summary,
                    "ansatz eta={}: dG/dbeta = {:.4} +- {:.4}, intercept = {:.4} +- {:.4}, gamma = {:.3} +- {:.3}",
                    eta_label(eta),
                    a.slope,
                    a.slope_err,
                    a.intercept,
                    a.intercept_err,
                    a.gamma,
                    a.gamma_err
                )?,
                Err(e) => writeln!(summary, "ansatz eta={}: {e}", eta_label(eta))?,
            }
        }
    }
    Ok(())
}
