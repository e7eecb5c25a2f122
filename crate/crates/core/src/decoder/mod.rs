//! Decoders: anisotropic matching in 2D and 3D, the infinite-bias
//! repetition decoder, exact maximum likelihood, and outcome adjudication.

mod distance;
mod ml;
mod mwpm;
mod repetition;

use serde::{Deserialize, Serialize};

use crate::code::{LogicalClass, StabilizerCode};
use crate::error::{Error, Result};
use crate::noise::{channel_to_bias, BiasSpec, PauliChannel, PhenomenologicalNoise, SpacetimeSample};
use crate::pauli::{Pauli, PauliOperator};

pub use distance::{direct_periodic_distance, DistanceTable, GraphEdge};
pub use ml::{exact_failure_rates, ml_coset_probabilities, ml_decode, ExactFailureRates, MlDecoder};
pub use mwpm::{
    decode_2d, decode_3d, edge_weight, spacetime_separation, Defect, MatchingOptions, MwpmDecoder, SyndromeVolume,
};
pub use repetition::{decode_infinite_bias, RepetitionDecoder};

/// Smallest weight assigned to an edge whose log-likelihood ratio is not positive.
pub const MIN_WEIGHT: f64 = 1e-6;

/// Edge weights of the anisotropic matching graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightParams {
    pub w_hr: f64,
    pub w_lr: f64,
    pub w_t: f64,
    pub axis: Pauli,
}

/// `-ln(prob / (1 - total))`, infinite for impossible events.
fn log_weight(prob: f64, total: f64) -> f64 {
    if prob <= 0.0 {
        return f64::INFINITY;
    }
    let w = -(prob / (1.0 - total)).ln();
    if w > MIN_WEIGHT { w } else { MIN_WEIGHT }
}

impl WeightParams {
    pub fn from_bias(spec: &BiasSpec) -> Result<Self> {
        spec.validate()?;
        let r = spec.r();
        let p_hr = spec.p * r[spec.axis.index()];
        let p_lr = spec.p * r[(spec.axis.index() + 1) % 3];
        Ok(WeightParams {
            w_hr: log_weight(p_hr, spec.p),
            w_lr: log_weight(p_lr, spec.p),
            w_t: f64::INFINITY,
            axis: spec.axis,
        })
    }

    /// Weights for a channel with equal low-rate components.
    pub fn from_channel(channel: &PauliChannel) -> Result<Self> {
        Self::from_bias(&channel_to_bias(channel)?)
    }

    pub fn from_phenomenological(noise: &PhenomenologicalNoise) -> Result<Self> {
        noise.validate()?;
        let p = noise.p();
        Ok(WeightParams {
            w_hr: log_weight(noise.p_hr, p),
            w_lr: log_weight(noise.p_lr, p),
            w_t: log_weight(noise.q, noise.q),
            axis: noise.axis,
        })
    }

    /// Pure high-rate noise with unit weights.
    pub fn infinite_bias(axis: Pauli) -> Self {
        WeightParams { w_hr: 1.0, w_lr: f64::INFINITY, w_t: f64::INFINITY, axis }
    }

    /// (high-rate, low-rate) single-qubit Paulis that act as graph edges.
    pub fn edge_paulis(&self) -> Result<(Pauli, Pauli)> {
        match self.axis {
            Pauli::Z => Ok((Pauli::Z, Pauli::X)),
            Pauli::X => Ok((Pauli::X, Pauli::Z)),
            Pauli::Y => Err(Error::Unsupported("matching with a Y high-rate axis".into())),
        }
    }
}

/// Decoder output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correction {
    pub pauli: PauliOperator,
    /// Parity of matched chains wrapping the time axis (3D decoding only).
    pub temporal_cycle_parity: bool,
}

impl Correction {
    pub fn identity(n: usize) -> Self {
        Correction { pauli: PauliOperator::identity(n), temporal_cycle_parity: false }
    }

    pub fn from_pauli(pauli: PauliOperator) -> Self {
        Correction { pauli, temporal_cycle_parity: false }
    }
}

/// Trial outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Success,
    LogicalFailure,
    TemporalFailure,
}

impl Outcome {
    pub fn is_failure(self) -> bool {
        self != Outcome::Success
    }
}

/// Classify `error * correction`; a residual with a syndrome is an error.
pub fn adjudicate(code: &StabilizerCode, error: &PauliOperator, correction: &Correction) -> Result<Outcome> {
    let residual = error * &correction.pauli;
    let class = code.logical_class(&residual).map_err(|e| match e {
        Error::NonEmptySyndrome(k) => {
            Error::InvalidCorrection(format!("residual leaves {k} defects"))
        }
        other => other,
    })?;
    Ok(outcome(class, correction.temporal_cycle_parity))
}

/// Classify a spacetime trial: data residual on the final error plus the
/// winding parity of error and correction chains around the time axis.
pub fn adjudicate_spacetime(code: &StabilizerCode, sample: &SpacetimeSample, correction: &Correction) -> Result<Outcome> {
    let residual = sample.final_error() * &correction.pauli;
    let class = code
        .logical_class(&residual)
        .map_err(|e| Error::InvalidCorrection(format!("spacetime residual invalid: {e}")))?;
    Ok(outcome(class, sample.temporal_parity() ^ correction.temporal_cycle_parity))
}

fn outcome(class: LogicalClass, temporal: bool) -> Outcome {
    if !class.is_trivial() {
        Outcome::LogicalFailure
    } else if temporal {
        Outcome::TemporalFailure
    } else {
        Outcome::Success
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::LatticeGeometry;

    #[test]
    fn weight_formulas() {
        let w = WeightParams::from_bias(&BiasSpec::new(0.1, 0.5)).unwrap();
        assert_eq!(w.w_hr, w.w_lr);
        assert!((w.w_hr + (0.1f64 / 3.0 / 0.9).ln()).abs() < 1e-12);
        let inf = WeightParams::from_bias(&BiasSpec::new(0.1, f64::INFINITY)).unwrap();
        assert!(inf.w_lr.is_infinite());
        assert!((inf.w_hr + (0.1f64 / 0.9).ln()).abs() < 1e-12);
        // Above one half the ratio exceeds one; weights are clamped positive.
        let high = WeightParams::from_bias(&BiasSpec::new(0.6, f64::INFINITY)).unwrap();
        assert_eq!(high.w_hr, MIN_WEIGHT);
        let ph = WeightParams::from_phenomenological(&PhenomenologicalNoise::from_bias(0.1, 1.0, 3).unwrap()).unwrap();
        assert!((ph.w_t + (0.075f64 / 0.925).ln()).abs() < 1e-12);
        let y = BiasSpec { axis: Pauli::Y, ..BiasSpec::new(0.1, 10.0) };
        assert!(WeightParams::from_bias(&y).unwrap().edge_paulis().is_err());
    }

    #[test]
    fn adjudication_cases() {
        let code = StabilizerCode::xzzx(LatticeGeometry::Periodic { rows: 3, cols: 3 }).unwrap();
        let e = PauliOperator::from_support(9, [(0, Pauli::Z), (4, Pauli::X)]);
        assert_eq!(adjudicate(&code, &e, &Correction::from_pauli(e.clone())).unwrap(), Outcome::Success);
        let bad = &e * &code.logical_z()[0];
        assert_eq!(adjudicate(&code, &e, &Correction::from_pauli(bad)).unwrap(), Outcome::LogicalFailure);
        let invalid = Correction::identity(9);
        assert!(matches!(adjudicate(&code, &e, &invalid), Err(Error::InvalidCorrection(_))));
    }
}
