//! Monte Carlo harness and the scaling analyses built on its output.

mod fit;
mod rare;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::code::{LatticeGeometry, StabilizerCode};
use crate::decoder::{
    adjudicate, adjudicate_spacetime, Correction, MatchingOptions, MlDecoder, MwpmDecoder, Outcome, RepetitionDecoder,
    SyndromeVolume, WeightParams,
};
use crate::error::{Error, Result};
use crate::noise::{derive_seed, eta_serde, sample_error, sample_spacetime, trial_rng, BiasSpec, PauliChannel, PhenomenologicalNoise, TemporalClosure};
use crate::pauli::PauliOperator;

pub use fit::{
    aspect_ratio_optimum, bias_log_term, estimate_gamma, fit_ansatz, fit_subthreshold, fit_threshold, gamma_from_intercept,
    weighted_line, AnsatzFit, GammaEstimate, GradientPoint, LineFit, RatePoint, ScalingModel, SubthresholdFit,
    ThresholdFit,
};
pub use rare::{rare_event_estimate, stratum_profile, RareEventEstimate, StratifiedOptions, StratumEstimate, StratumProfile};

/// Decoder used by a batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecoderId {
    /// Per-diagonal majority vote; Z-only noise.
    InfiniteBias,
    /// Matching on a perfectly measured syndrome.
    #[serde(rename = "mwpm-2d")]
    Mwpm2d,
    /// Matching over a spacetime volume of noisy rounds.
    #[serde(rename = "mwpm-3d")]
    Mwpm3d,
    /// Exact maximum likelihood; small codes only.
    Ml,
}

impl DecoderId {
    pub const ALL: [DecoderId; 4] = [DecoderId::InfiniteBias, DecoderId::Mwpm2d, DecoderId::Mwpm3d, DecoderId::Ml];

    pub fn as_str(self) -> &'static str {
        match self {
            DecoderId::InfiniteBias => "infinite-bias",
            DecoderId::Mwpm2d => "mwpm-2d",
            DecoderId::Mwpm3d => "mwpm-3d",
            DecoderId::Ml => "ml",
        }
    }

    pub fn is_fault_tolerant(self) -> bool {
        self == DecoderId::Mwpm3d
    }
}

impl fmt::Display for DecoderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DecoderId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DecoderId::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown decoder id {s:?}")))
    }
}

/// Noise setting of a batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    /// Perfect syndrome measurement.
    CodeCapacity,
    /// Data errors and measurement flips every round.
    Phenomenological,
}

/// Everything except the seed and trial count that fixes a batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchParams {
    pub geometry: LatticeGeometry,
    pub decoder: DecoderId,
    pub p: f64,
    #[serde(with = "eta_serde")]
    pub eta: f64,
    /// Noisy rounds; 1 for code capacity.
    pub rounds: usize,
    #[serde(default)]
    pub closure: TemporalClosure,
}

impl BatchParams {
    pub fn code_capacity(geometry: LatticeGeometry, decoder: DecoderId, p: f64, eta: f64) -> Self {
        BatchParams { geometry, decoder, p, eta, rounds: 1, closure: TemporalClosure::Periodic }
    }

    pub fn fault_tolerant(geometry: LatticeGeometry, p: f64, eta: f64, rounds: usize) -> Self {
        BatchParams { geometry, decoder: DecoderId::Mwpm3d, p, eta, rounds, closure: TemporalClosure::Periodic }
    }

    pub fn noise_kind(&self) -> NoiseKind {
        if self.decoder.is_fault_tolerant() {
            NoiseKind::Phenomenological
        } else {
            NoiseKind::CodeCapacity
        }
    }

    pub fn bias(&self) -> BiasSpec {
        BiasSpec::new(self.p, self.eta)
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.bias().validate()?;
        if self.decoder == DecoderId::InfiniteBias && self.eta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "decoder infinite-bias needs eta = inf, got {}",
                self.eta
            )));
        }
        match self.noise_kind() {
            NoiseKind::CodeCapacity if self.rounds != 1 => Err(Error::InvalidArgument(format!(
                "decoder {} decodes a single perfect round; rounds = {}",
                self.decoder, self.rounds
            ))),
            NoiseKind::Phenomenological if self.rounds == 0 => {
                Err(Error::InvalidArgument("fault-tolerant batches need at least one round".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Aggregated outcome of independent trials at one parameter point.
///
/// Serialises to the flat JSON-lines record used for result files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialBatch {
    pub geometry: LatticeGeometry,
    pub noise: NoiseKind,
    pub decoder: DecoderId,
    pub p: f64,
    #[serde(with = "eta_serde")]
    pub eta: f64,
    pub d: usize,
    pub rounds: usize,
    #[serde(default)]
    pub closure: TemporalClosure,
    pub trials: u64,
    pub failures_logical: u64,
    pub failures_temporal: u64,
    pub seed: u64,
    /// Seconds; not part of the deterministic content.
    pub wall_time: f64,
}

impl TrialBatch {
    pub fn params(&self) -> BatchParams {
        BatchParams {
            geometry: self.geometry,
            decoder: self.decoder,
            p: self.p,
            eta: self.eta,
            rounds: self.rounds,
            closure: self.closure,
        }
    }

    pub fn failures(&self) -> u64 {
        self.failures_logical + self.failures_temporal
    }

    /// Failure rate counting logical and temporal failures.
    pub fn rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.failures() as f64 / self.trials as f64
        }
    }

    /// Binomial standard error `sqrt(f(1-f)/N)`.
    pub fn std_error(&self) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        let f = self.rate();
        (f * (1.0 - f) / self.trials as f64).sqrt()
    }

    /// Copy with the wall time zeroed, for byte comparisons.
    pub fn without_timing(&self) -> Self {
        TrialBatch { wall_time: 0.0, ..self.clone() }
    }
}

enum Engine {
    Repetition(RepetitionDecoder),
    Mwpm(MwpmDecoder),
    Ml(MlDecoder, PauliChannel),
}

/// A code, noise model and decoder ready to run trials.
pub struct TrialRunner {
    params: BatchParams,
    code: StabilizerCode,
    channel: PauliChannel,
    phenomenological: Option<PhenomenologicalNoise>,
    engine: Engine,
}

impl TrialRunner {
    pub fn new(params: BatchParams) -> Result<Self> {
        Self::with_options(params, MatchingOptions::default())
    }

    pub fn with_options(params: BatchParams, options: MatchingOptions) -> Result<Self> {
        params.validate()?;
        let code = StabilizerCode::xzzx(params.geometry)?;
        let channel = params.bias().to_channel()?;
        let mut phenomenological = None;
        let engine = match params.decoder {
            DecoderId::InfiniteBias => Engine::Repetition(RepetitionDecoder::new(&code)),
            DecoderId::Mwpm2d => {
                Engine::Mwpm(MwpmDecoder::new(&code, WeightParams::from_bias(&params.bias())?, options)?)
            }
            DecoderId::Mwpm3d => {
                let noise = PhenomenologicalNoise::from_bias(params.p, params.eta, params.rounds)?
                    .with_closure(params.closure);
                phenomenological = Some(noise);
                Engine::Mwpm(MwpmDecoder::new(&code, WeightParams::from_phenomenological(&noise)?, options)?)
            }
            DecoderId::Ml => Engine::Ml(MlDecoder::new(&code)?, channel),
        };
        Ok(TrialRunner { params, code, channel, phenomenological, engine })
    }

    pub fn code(&self) -> &StabilizerCode {
        &self.code
    }

    pub fn params(&self) -> &BatchParams {
        &self.params
    }

    pub fn channel(&self) -> &PauliChannel {
        &self.channel
    }

    /// Decode a code-capacity error and adjudicate the residual.
    pub fn decode_error(&self, error: &PauliOperator) -> Result<Outcome> {
        let syndrome = self.code.syndrome(error);
        let correction: Correction = match &self.engine {
            Engine::Repetition(d) => d.decode(&syndrome)?,
            Engine::Mwpm(d) => d.decode(&syndrome)?,
            Engine::Ml(d, ch) => d.decode(&syndrome, ch)?,
        };
        adjudicate(&self.code, error, &correction)
    }

    /// One trial with its own generator.
    pub fn trial(&self, master: u64, index: u64) -> Result<Outcome> {
        let mut rng = trial_rng(master, index);
        match (&self.phenomenological, &self.engine) {
            (Some(noise), Engine::Mwpm(d)) => {
                let sample = sample_spacetime(noise, &self.code, &mut rng)?;
                let volume = SyndromeVolume::from_sample(&self.code, &sample);
                let correction = d.decode_volume(&volume)?;
                adjudicate_spacetime(&self.code, &sample, &correction)
            }
            _ => {
                let error = sample_error(&self.channel, self.code.num_qubits(), &mut rng);
                self.decode_error(&error)
            }
        }
    }

    /// Run `trials` trials over `workers` threads (0 = all cores).
    pub fn run(&self, trials: u64, seed: u64, workers: usize) -> Result<TrialBatch> {
        let start = Instant::now();
        let pool = thread_pool(workers)?;
        let (logical, temporal) = pool.install(|| {
            (0..trials)
                .into_par_iter()
                .map(|i| {
                    self.trial(seed, i).map(|o| match o {
                        Outcome::Success => (0u64, 0u64),
                        Outcome::LogicalFailure => (1, 0),
                        Outcome::TemporalFailure => (0, 1),
                    })
                })
                .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))
        })?;
        let p = &self.params;
        Ok(TrialBatch {
            geometry: p.geometry,
            noise: p.noise_kind(),
            decoder: p.decoder,
            p: p.p,
            eta: p.eta,
            d: p.geometry.size_parameter(),
            rounds: p.rounds,
            closure: p.closure,
            trials,
            failures_logical: logical,
            failures_temporal: temporal,
            seed,
            wall_time: start.elapsed().as_secs_f64(),
        })
    }
}

pub(crate) fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start {workers} workers: {e}")))
}

/// Run a batch of independent trials. Trial `i` draws from a generator
/// seeded by `derive_seed(seed, i)`, so counts do not depend on `workers`.
/// Every residual is adjudicated; an invalid correction aborts the batch.
pub fn run_batch(params: &BatchParams, trials: u64, seed: u64, workers: usize) -> Result<TrialBatch> {
    TrialRunner::new(*params)?.run(trials, seed, workers)
}

/// Seed of cell `index` in a multi-cell experiment.
pub fn cell_seed(master: u64, index: u64) -> u64 {
    derive_seed(master ^ 0x5EED_CE11_0000_0000, index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::Pauli;

    #[test]
    fn zero_noise_never_fails() {
        for decoder in [DecoderId::InfiniteBias, DecoderId::Mwpm2d] {
            let params = BatchParams::code_capacity(LatticeGeometry::Periodic { rows: 5, cols: 5 }, decoder, 0.0, f64::INFINITY);
            let b = run_batch(&params, 200, 1, 1).unwrap();
            assert_eq!(b.failures(), 0);
        }
        let ft = BatchParams::fault_tolerant(LatticeGeometry::Periodic { rows: 4, cols: 4 }, 0.0, f64::INFINITY, 4);
        assert_eq!(run_batch(&ft, 50, 1, 1).unwrap().failures(), 0);
    }

    #[test]
    fn certain_dephasing_on_smallest_torus() {
        // Every qubit flips: the weight-6 diagonal string is a logical.
        let params =
            BatchParams::code_capacity(LatticeGeometry::Periodic { rows: 2, cols: 3 }, DecoderId::InfiniteBias, 1.0, f64::INFINITY);
        let b = run_batch(&params, 100, 3, 2).unwrap();
        assert_eq!(b.failures_logical, 100);
    }

    #[test]
    fn matches_exhaustive_expectation_on_smallest_torus() {
        // 2x3 torus: one diagonal of six qubits. Exact failure probability
        // from all 2^6 Z patterns.
        let g = LatticeGeometry::Periodic { rows: 2, cols: 3 };
        let code = StabilizerCode::xzzx(g).unwrap();
        let p: f64 = 0.3;
        let mut exact = 0.0;
        for mask in 0u32..64 {
            let e = PauliOperator::uniform(6, Pauli::Z, (0..6).filter(|q| mask >> q & 1 == 1));
            let c = crate::decoder::decode_infinite_bias(&code, &code.syndrome(&e)).unwrap();
            if adjudicate(&code, &e, &c).unwrap().is_failure() {
                let w = mask.count_ones() as i32;
                exact += p.powi(w) * (1.0 - p).powi(6 - w);
            }
        }
        let b = run_batch(&BatchParams::code_capacity(g, DecoderId::InfiniteBias, p, f64::INFINITY), 20_000, 9, 0).unwrap();
        assert!((b.rate() - exact).abs() < 4.0 * b.std_error(), "{} vs {exact}", b.rate());
    }

    #[test]
    fn worker_count_does_not_change_counts() {
        let params = BatchParams::code_capacity(LatticeGeometry::Periodic { rows: 5, cols: 6 }, DecoderId::Mwpm2d, 0.12, 3.0);
        let a = run_batch(&params, 500, 42, 1).unwrap();
        let b = run_batch(&params, 500, 42, 3).unwrap();
        assert_eq!(a.without_timing(), b.without_timing());
        let ft = BatchParams::fault_tolerant(LatticeGeometry::Periodic { rows: 4, cols: 4 }, 0.05, f64::INFINITY, 4);
        let a = run_batch(&ft, 200, 7, 1).unwrap();
        let b = run_batch(&ft, 200, 7, 4).unwrap();
        assert_eq!(a.without_timing(), b.without_timing());
    }

    #[test]
    fn binomial_error_bar() {
        let params = BatchParams::code_capacity(LatticeGeometry::Periodic { rows: 3, cols: 3 }, DecoderId::Mwpm2d, 0.2, 0.5);
        let b = run_batch(&params, 1000, 5, 1).unwrap();
        let f = b.failures() as f64 / 1000.0;
        assert_eq!(b.std_error(), (f * (1.0 - f) / 1000.0).sqrt());
        assert!(b.failures() <= b.trials);
    }

    #[test]
    fn rejects_bad_params() {
        let g = LatticeGeometry::Periodic { rows: 3, cols: 3 };
        assert!(run_batch(&BatchParams::code_capacity(g, DecoderId::InfiniteBias, 0.1, 10.0), 1, 0, 1).is_err());
        let mut p = BatchParams::code_capacity(g, DecoderId::Mwpm2d, 0.1, 10.0);
        p.rounds = 3;
        assert!(run_batch(&p, 1, 0, 1).is_err());
        assert!("mwpm-4d".parse::<DecoderId>().is_err());
        assert_eq!("ml".parse::<DecoderId>().unwrap(), DecoderId::Ml);
    }

    #[test]
    fn record_round_trip() {
        let params = BatchParams::code_capacity(LatticeGeometry::OpenRectangular { d_x: 3, d_z: 3 }, DecoderId::Ml, 0.1, f64::INFINITY);
        let b = run_batch(&params, 20, 1, 1).unwrap();
        let line = serde_json::to_string(&b).unwrap();
        assert!(line.contains("\"eta\":\"inf\""));
        let back: TrialBatch = serde_json::from_str(&line).unwrap();
        assert_eq!(back, b);
        assert_eq!(back.params(), params);
    }
}
