//! Versioned experiment configuration (TOML).

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use xzzx::noise::eta_serde;
use xzzx::stats::{BatchParams, DecoderId};
use xzzx::{LatticeGeometry, TemporalClosure};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// One batch per (eta, d, p) with a perfectly measured syndrome.
    CodeCapacity,
    /// One batch per (eta, d, p) with noisy measurement rounds.
    FaultTolerant,
    /// Batches over a (p, d) grid followed by a threshold fit per bias.
    ThresholdScan,
    /// Failure rates over d at fixed p, fitted with both exponent models.
    SubthresholdScan,
    /// Hashing bound for each bias.
    HashingBound,
    /// Optimal d_z / d_x for each (p, eta).
    AspectRatio,
}

/// How a distance `d` maps to a lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticeFamily {
    /// d x d torus.
    Periodic,
    /// d x (d+1) torus.
    Coprime,
    /// Open d x d code.
    Open,
}

impl LatticeFamily {
    pub fn geometry(self, d: usize) -> LatticeGeometry {
        match self {
            LatticeFamily::Periodic => LatticeGeometry::Periodic { rows: d, cols: d },
            LatticeFamily::Coprime => LatticeGeometry::Periodic { rows: d, cols: d + 1 },
            LatticeFamily::Open => LatticeGeometry::OpenRectangular { d_x: d, d_z: d },
        }
    }
}

/// Noisy rounds: a fixed count or `"d"` for as many rounds as the distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rounds {
    Fixed(usize),
    Named(RoundsName),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RoundsName {
    #[serde(rename = "d")]
    Distance,
}

impl Rounds {
    fn resolve(self, d: usize) -> usize {
        match self {
            Rounds::Fixed(r) => r,
            Rounds::Named(RoundsName::Distance) => d,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    #[default]
    MonteCarlo,
    /// Weight-stratified sampling; code capacity only.
    Stratified,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eta(#[serde(with = "eta_serde")] pub f64);

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub kind: ExperimentKind,
    /// Lattice family used with the `d` list.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<LatticeFamily>,
    /// A single explicit geometry instead of `lattice` and `d`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<LatticeGeometry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decoder: Option<DecoderId>,
    #[serde(default)]
    pub eta: Vec<Eta>,
    #[serde(default)]
    pub p: Vec<f64>,
    #[serde(default)]
    pub d: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounds: Option<Rounds>,
    #[serde(default)]
    pub closure: TemporalClosure,
    #[serde(default)]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Write measured wall times; off gives byte-identical reruns.
    #[serde(default = "default_true")]
    pub record_wall_time: bool,
    #[serde(default)]
    pub estimator: Estimator,
    /// Samples per weight stratum for the stratified estimator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    fn decoder(&self) -> DecoderId {
        self.decoder.unwrap_or(match self.kind {
            ExperimentKind::FaultTolerant => DecoderId::Mwpm3d,
            _ => DecoderId::Mwpm2d,
        })
    }

    fn geometries(&self) -> Result<Vec<LatticeGeometry>> {
        match (self.geometry, self.lattice) {
            (Some(_), Some(_)) => bail!("set either `geometry` or `lattice`, not both"),
            (Some(g), None) => {
                if !self.d.is_empty() {
                    bail!("`d` is only used with `lattice`");
                }
                Ok(vec![g])
            }
            (None, Some(family)) => {
                if self.d.is_empty() {
                    bail!("`lattice` needs a non-empty `d` list");
                }
                Ok(self.d.iter().map(|&d| family.geometry(d)).collect())
            }
            (None, None) => bail!("set `lattice` with `d`, or `geometry`"),
        }
    }

    /// Every Monte Carlo cell in run order: eta, then lattice, then p.
    pub fn cells(&self) -> Result<Vec<BatchParams>> {
        let decoder = self.decoder();
        let mut out = Vec::new();
        for eta in &self.eta {
            for g in self.geometries()? {
                for &p in &self.p {
                    let rounds = if decoder.is_fault_tolerant() {
                        self.rounds.unwrap_or(Rounds::Named(RoundsName::Distance)).resolve(g.size_parameter())
                    } else {
                        self.rounds.map_or(1, |r| r.resolve(g.size_parameter()))
                    };
                    out.push(BatchParams { geometry: g, decoder, p, eta: eta.0, rounds, closure: self.closure });
                }
            }
        }
        Ok(out)
    }

    /// Check everything that can be checked before sampling.
    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            bail!("config version {} is not supported (expected {CONFIG_VERSION})", self.version);
        }
        let need = |ok: bool, what: &str| -> Result<()> {
            if ok {
                Ok(())
            } else {
                bail!("{:?} experiments need {what}", self.kind)
            }
        };
        match self.kind {
            ExperimentKind::HashingBound => need(!self.eta.is_empty(), "an `eta` list")?,
            ExperimentKind::AspectRatio => {
                need(!self.eta.is_empty() && !self.p.is_empty(), "`eta` and `p` lists")?;
                for eta in &self.eta {
                    for &p in &self.p {
                        xzzx::aspect_ratio_optimum(p, eta.0)?;
                    }
                }
            }
            kind => {
                need(!self.eta.is_empty() && !self.p.is_empty(), "`eta` and `p` lists")?;
                let stratified = self.estimator == Estimator::Stratified;
                if stratified {
                    if kind != ExperimentKind::SubthresholdScan {
                        bail!("the stratified estimator is only used by subthreshold-scan");
                    }
                    need(self.budget.is_some_and(|b| b > 0), "a positive `budget`")?;
                    if self.decoder().is_fault_tolerant() {
                        bail!("the stratified estimator covers code-capacity decoders only");
                    }
                } else {
                    need(self.trials > 0, "`trials` > 0")?;
                }
                if kind == ExperimentKind::FaultTolerant && !self.decoder().is_fault_tolerant() {
                    bail!("fault-tolerant experiments use decoder mwpm-3d");
                }
                if kind == ExperimentKind::ThresholdScan && self.geometry.is_some() {
                    bail!("threshold-scan needs several distances: use `lattice` and `d`");
                }
                for cell in self.cells()? {
                    cell.validate()
                        .with_context(|| format!("cell {} p={} eta={}", cell.geometry, cell.p, cell.eta))?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCAN: &str = r#"
version = 1
kind = "threshold-scan"
lattice = "periodic"
decoder = "infinite-bias"
eta = ["inf"]
p = [0.45, 0.5, 0.55]
d = [5, 7, 9]
trials = 100
seed = 3
"#;

    #[test]
    fn parses_and_round_trips() {
        let c = ExperimentConfig::parse(SCAN).unwrap();
        assert_eq!(c.cells().unwrap().len(), 9);
        assert!(c.eta[0].0.is_infinite());
        let back = ExperimentConfig::parse(&toml::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_unknown_fields_and_versions() {
        assert!(ExperimentConfig::parse(&format!("{SCAN}\ntrails = 5\n")).is_err());
        assert!(ExperimentConfig::parse(&SCAN.replace("version = 1", "version = 2")).is_err());
        assert!(ExperimentConfig::parse(&SCAN.replace("infinite-bias", "magic")).is_err());
        assert!(ExperimentConfig::parse(&SCAN.replace("\"periodic\"", "\"hexagonal\"")).is_err());
        // Infinite-bias decoding with finite eta fails before any sampling.
        assert!(ExperimentConfig::parse(&SCAN.replace("[\"inf\"]", "[10.0]")).is_err());
    }

    #[test]
    fn fault_tolerant_rounds_default_to_distance() {
        let text = r#"
version = 1
kind = "fault-tolerant"
lattice = "periodic"
eta = ["inf"]
p = [0.05]
d = [4, 6]
trials = 10
"#;
        let c = ExperimentConfig::parse(text).unwrap();
        let cells = c.cells().unwrap();
        assert_eq!(cells.iter().map(|c| c.rounds).collect::<Vec<_>>(), vec![4, 6]);
        assert_eq!(cells[0].decoder, DecoderId::Mwpm3d);
        let fixed = ExperimentConfig::parse(&format!("{text}rounds = 3\n")).unwrap();
        assert!(fixed.cells().unwrap().iter().all(|c| c.rounds == 3));
    }

    #[test]
    fn explicit_geometry() {
        let text = r#"
version = 1
kind = "code-capacity"
geometry = { kind = "open-rectangular", d_x = 3, d_z = 5 }
decoder = "ml"
eta = [10.0]
p = [0.1]
trials = 10
"#;
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.cells().unwrap()[0].geometry, LatticeGeometry::OpenRectangular { d_x: 3, d_z: 5 });
    }
}
