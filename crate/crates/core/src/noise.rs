//! Pauli noise channels, biased and phenomenological noise, sampling and the
//! zero-rate hashing bound.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::code::{StabilizerCode, Syndrome};
use crate::error::{Error, Result};
use crate::pauli::{Bits, Pauli, PauliOperator};

const SUM_TOL: f64 = 1e-12;

/// Single-qubit Pauli channel: identity with probability `1 - p`, otherwise
/// X, Y, Z with probabilities `p * r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PauliChannel {
    p: f64,
    /// (r_X, r_Y, r_Z).
    r: [f64; 3],
}

impl PauliChannel {
    pub fn new(p: f64, r: [f64; 3]) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidNoise(format!("p = {p} outside [0, 1]")));
        }
        if r.iter().any(|&x| !(x >= 0.0)) || (r.iter().sum::<f64>() - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidNoise(format!("r = {r:?} is not a stochastic vector")));
        }
        Ok(PauliChannel { p, r })
    }

    pub fn depolarizing(p: f64) -> Result<Self> {
        Self::new(p, [1.0 / 3.0; 3])
    }

    pub fn pure(p: f64, axis: Pauli) -> Result<Self> {
        let mut r = [0.0; 3];
        r[axis.index()] = 1.0;
        Self::new(p, r)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn r(&self) -> [f64; 3] {
        self.r
    }

    /// Absolute probability of `pauli` on one qubit.
    pub fn prob(&self, pauli: Pauli) -> f64 {
        self.p * self.r[pauli.index()]
    }

    pub fn with_p(&self, p: f64) -> Result<Self> {
        Self::new(p, self.r)
    }
}

/// Biased channel parametrisation; `eta = r_axis / (sum of the other two)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiasSpec {
    pub p: f64,
    #[serde(with = "eta_serde")]
    pub eta: f64,
    #[serde(default = "default_axis")]
    pub axis: Pauli,
}

fn default_axis() -> Pauli {
    Pauli::Z
}

impl BiasSpec {
    pub fn new(p: f64, eta: f64) -> Self {
        BiasSpec { p, eta, axis: Pauli::Z }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::InvalidNoise(format!("p = {} outside [0, 1]", self.p)));
        }
        if !(self.eta >= 0.5) {
            return Err(Error::InvalidNoise(format!("eta = {} below 1/2", self.eta)));
        }
        Ok(())
    }

    /// Fractions r: high-rate component `eta / (eta + 1)`, each low-rate `1 / (2(eta + 1))`.
    pub fn r(&self) -> [f64; 3] {
        let (hi, lo) = if self.eta.is_infinite() {
            (1.0, 0.0)
        } else {
            (self.eta / (self.eta + 1.0), 1.0 / (2.0 * (self.eta + 1.0)))
        };
        let mut r = [lo; 3];
        r[self.axis.index()] = hi;
        r
    }

    pub fn to_channel(&self) -> Result<PauliChannel> {
        self.validate()?;
        PauliChannel::new(self.p, self.r())
    }
}

pub fn bias_to_channel(spec: &BiasSpec) -> Result<PauliChannel> {
    spec.to_channel()
}

/// Inverse of [`bias_to_channel`]. The axis is the component whose two
/// complements are equal, preferring Z, then X, then Y.
pub fn channel_to_bias(channel: &PauliChannel) -> Result<BiasSpec> {
    let r = channel.r();
    for axis in [Pauli::Z, Pauli::X, Pauli::Y] {
        let i = axis.index();
        let others: Vec<f64> = (0..3).filter(|&j| j != i).map(|j| r[j]).collect();
        if (others[0] - others[1]).abs() <= SUM_TOL && r[i] + SUM_TOL >= others[0] {
            let lo = others[0] + others[1];
            let eta = if lo == 0.0 { f64::INFINITY } else { r[i] / lo };
            return Ok(BiasSpec { p: channel.p(), eta, axis });
        }
    }
    Err(Error::InvalidNoise(format!("channel r = {r:?} has no axis with equal low-rate components")))
}

/// How the time boundary of a spacetime volume is closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TemporalClosure {
    /// Round `rounds` is identified with round 0; chains may wrap the time axis.
    #[default]
    Periodic,
    /// An extra noiseless readout follows the last noisy round.
    PerfectFinalRound,
}

/// Phenomenological noise: data errors before every round plus independent
/// measurement flips.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhenomenologicalNoise {
    pub p_hr: f64,
    pub p_lr: f64,
    pub q: f64,
    pub rounds: usize,
    #[serde(default = "default_axis")]
    pub axis: Pauli,
    #[serde(default)]
    pub closure: TemporalClosure,
}

impl PhenomenologicalNoise {
    /// Total rate `p`, bias `eta`, with the standard `q = p_hr + p_lr`.
    pub fn from_bias(p: f64, eta: f64, rounds: usize) -> Result<Self> {
        let spec = BiasSpec::new(p, eta);
        spec.validate()?;
        let r = spec.r();
        let p_hr = p * r[Pauli::Z.index()];
        let p_lr = p * r[Pauli::X.index()];
        let noise = PhenomenologicalNoise {
            p_hr,
            p_lr,
            q: p_hr + p_lr,
            rounds,
            axis: Pauli::Z,
            closure: TemporalClosure::Periodic,
        };
        noise.validate()?;
        Ok(noise)
    }

    pub fn with_closure(mut self, closure: TemporalClosure) -> Self {
        self.closure = closure;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::InvalidNoise("rounds must be at least 1".into()));
        }
        let p = self.p();
        let probs = [self.p_hr, self.p_lr, self.q, p];
        if probs.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::InvalidNoise(format!("probabilities out of range: {probs:?}")));
        }
        Ok(())
    }

    /// Per-qubit per-round error probability `p_hr + 2 p_lr`.
    pub fn p(&self) -> f64 {
        self.p_hr + 2.0 * self.p_lr
    }

    pub fn eta(&self) -> f64 {
        if self.p_lr == 0.0 {
            f64::INFINITY
        } else {
            self.p_hr / (2.0 * self.p_lr)
        }
    }

    /// The data-qubit channel applied each round.
    pub fn data_channel(&self) -> Result<PauliChannel> {
        let p = self.p();
        if p == 0.0 {
            return PauliChannel::pure(0.0, self.axis);
        }
        let mut r = [self.p_lr / p; 3];
        r[self.axis.index()] = self.p_hr / p;
        // Re-normalise against rounding.
        let s: f64 = r.iter().sum();
        PauliChannel::new(p, r.map(|x| x / s))
    }
}

/// Draw an i.i.d. error from `channel` on `n` qubits.
pub fn sample_error<R: Rng + ?Sized>(channel: &PauliChannel, n: usize, rng: &mut R) -> PauliOperator {
    let mut op = PauliOperator::identity(n);
    sample_into(channel, &mut op, rng);
    op
}

fn sample_into<R: Rng + ?Sized>(channel: &PauliChannel, op: &mut PauliOperator, rng: &mut R) {
    let p = channel.p();
    if p == 0.0 {
        return;
    }
    let cx = p * channel.r[0];
    let cy = cx + p * channel.r[1];
    for q in 0..op.num_qubits() {
        let u: f64 = rng.random();
        if u < p {
            let pauli = if u < cx {
                Pauli::X
            } else if u < cy {
                Pauli::Y
            } else {
                Pauli::Z
            };
            op.apply(q, pauli);
        }
    }
}

/// Output of [`sample_spacetime`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpacetimeSample {
    /// Fresh data error introduced before each round.
    pub data_errors: Vec<PauliOperator>,
    /// Cumulative data error after each round's data noise.
    pub cumulative: Vec<PauliOperator>,
    /// Noisy measured syndrome of every round, followed by a noiseless
    /// readout when the closure is [`TemporalClosure::PerfectFinalRound`].
    pub measured: Vec<Syndrome>,
    /// Measurement flips of each noisy round.
    pub flips: Vec<Bits>,
    pub closure: TemporalClosure,
}

impl SpacetimeSample {
    pub fn rounds(&self) -> usize {
        self.data_errors.len()
    }

    /// The data error left on the code after the last round.
    pub fn final_error(&self) -> &PauliOperator {
        self.cumulative.last().expect("at least one round")
    }

    /// Parity of the number of times the error chain winds the time axis.
    /// Always 0 without periodic closure.
    pub fn temporal_parity(&self) -> bool {
        match self.closure {
            TemporalClosure::Periodic => self.flips.last().is_some_and(|f| f.count_ones() % 2 == 1),
            TemporalClosure::PerfectFinalRound => false,
        }
    }
}

/// Sample phenomenological noise over `noise.rounds` rounds.
pub fn sample_spacetime<R: Rng + ?Sized>(
    noise: &PhenomenologicalNoise,
    code: &StabilizerCode,
    rng: &mut R,
) -> Result<SpacetimeSample> {
    noise.validate()?;
    let channel = noise.data_channel()?;
    let n = code.num_qubits();
    let nf = code.num_faces();
    let mut cumulative_op = PauliOperator::identity(n);
    let mut syn = Syndrome::empty(nf);
    let mut sample = SpacetimeSample {
        data_errors: Vec::with_capacity(noise.rounds),
        cumulative: Vec::with_capacity(noise.rounds),
        measured: Vec::with_capacity(noise.rounds + 1),
        flips: Vec::with_capacity(noise.rounds),
        closure: noise.closure,
    };
    for _ in 0..noise.rounds {
        let fresh = sample_error(&channel, n, rng);
        for (q, p) in fresh.support() {
            code.flip_syndrome(&mut syn, q, p);
        }
        cumulative_op *= &fresh;
        let mut flips = Bits::zeros(nf);
        if noise.q > 0.0 {
            for f in 0..nf {
                if rng.random::<f64>() < noise.q {
                    flips.set(f, true);
                }
            }
        }
        let mut measured = syn.bits().clone();
        measured.xor_assign(&flips);
        sample.data_errors.push(fresh);
        sample.cumulative.push(cumulative_op.clone());
        sample.measured.push(Syndrome::from_bits(measured));
        sample.flips.push(flips);
    }
    if noise.closure == TemporalClosure::PerfectFinalRound {
        sample.measured.push(syn);
    }
    Ok(sample)
}

/// SplitMix64 finaliser of `(master, index)`: the per-trial seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for trial `index` of a run with seed `master`.
pub fn trial_rng(master: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, index))
}

/// Shannon entropy in bits, ignoring zero entries.
pub fn entropy_bits(probs: &[f64]) -> f64 {
    probs.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
}

/// Zero-rate hashing bound of the channel family with fractions `r`: the
/// smallest `p` with `H(1 - p, p r_X, p r_Y, p r_Z) = 1`.
pub fn hashing_bound(r: [f64; 3]) -> Result<f64> {
    PauliChannel::new(0.5, r)?;
    let h = |p: f64| entropy_bits(&[1.0 - p, p * r[0], p * r[1], p * r[2]]);
    // Entropy is increasing on (0, p_sat] and maximal at p_sat.
    let p_sat = 1.0 / (1.0 + 2f64.powf(-entropy_bits(&r)));
    if h(p_sat) <= 1.0 {
        return Ok(p_sat);
    }
    let (mut lo, mut hi) = (0.0, p_sat);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if h(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Serialise eta with infinity as the string `"inf"`.
pub mod eta_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(eta: &f64, s: S) -> Result<S::Ok, S::Error> {
        if eta.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*eta)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Str(s) if matches!(s.as_str(), "inf" | "infinity" | "Infinity") => Ok(f64::INFINITY),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("invalid eta '{s}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::LatticeGeometry;

    #[test]
    fn bias_conversions() {
        let r = BiasSpec::new(0.1, 0.5).r();
        for x in r {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(BiasSpec::new(0.1, f64::INFINITY).r(), [0.0, 0.0, 1.0]);
        assert_eq!(BiasSpec::new(0.1, 3.0).r(), [0.125, 0.125, 0.75]);
        for eta in [0.5, 1.0, 3.0, 100.0, f64::INFINITY] {
            let ch = BiasSpec::new(0.2, eta).to_channel().unwrap();
            let back = channel_to_bias(&ch).unwrap();
            assert_eq!(back.axis, Pauli::Z);
            assert!(back.eta == eta || (back.eta - eta).abs() < 1e-12 * eta.max(1.0));
        }
        let uneven = PauliChannel::new(0.1, [0.2, 0.3, 0.5]).unwrap();
        assert!(channel_to_bias(&uneven).is_err());
    }

    #[test]
    fn channel_validation() {
        assert!(PauliChannel::new(1.2, [0.0, 0.0, 1.0]).is_err());
        assert!(PauliChannel::new(0.1, [0.5, 0.0, 0.6]).is_err());
        assert!(BiasSpec::new(0.1, 0.3).to_channel().is_err());
    }

    #[test]
    fn trivial_samples() {
        let mut rng = trial_rng(1, 0);
        assert!(sample_error(&PauliChannel::depolarizing(0.0).unwrap(), 50, &mut rng).is_identity());
        let all_z = sample_error(&PauliChannel::pure(1.0, Pauli::Z).unwrap(), 50, &mut rng);
        assert!(all_z.is_only(Pauli::Z));
        assert_eq!(all_z.weight(), 50);
    }

    #[test]
    fn depolarizing_frequencies() {
        let n = 100_000;
        let p = 0.1;
        let e = sample_error(&PauliChannel::depolarizing(p).unwrap(), n, &mut trial_rng(7, 0));
        let mut counts = [0usize; 3];
        for (_, pauli) in e.support() {
            counts[pauli.index()] += 1;
        }
        let mean = n as f64 * p / 3.0;
        let sigma = (mean * (1.0 - p / 3.0)).sqrt();
        for c in counts {
            assert!((c as f64 - mean).abs() < 5.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn seeds_are_deterministic_and_distinct() {
        assert_eq!(derive_seed(42, 7), derive_seed(42, 7));
        assert_ne!(derive_seed(42, 7), derive_seed(42, 8));
        assert_ne!(derive_seed(42, 7), derive_seed(43, 7));
    }

    #[test]
    fn hashing_bound_values() {
        assert_eq!(hashing_bound([0.0, 0.0, 1.0]).unwrap(), 0.5);
        let dep = hashing_bound([1.0 / 3.0; 3]).unwrap();
        assert!((dep - 0.1893).abs() < 1e-4, "{dep}");
    }

    #[test]
    fn phenomenological_parameters() {
        let n = PhenomenologicalNoise::from_bias(0.03, 1.0, 3).unwrap();
        assert!((n.p_hr - 0.015).abs() < 1e-15);
        assert!((n.p_lr - 0.0075).abs() < 1e-15);
        assert!((n.q - 0.0225).abs() < 1e-15);
        assert!((n.p() - 0.03).abs() < 1e-15);
        assert!((n.eta() - 1.0).abs() < 1e-12);
        assert!(PhenomenologicalNoise::from_bias(0.1, 1.0, 0).is_err());
    }

    #[test]
    fn noiseless_spacetime_is_empty() {
        let code = StabilizerCode::xzzx(LatticeGeometry::Periodic { rows: 3, cols: 3 }).unwrap();
        let noise = PhenomenologicalNoise::from_bias(0.0, f64::INFINITY, 4).unwrap();
        let s = sample_spacetime(&noise, &code, &mut trial_rng(0, 0)).unwrap();
        assert!(s.measured.iter().all(Syndrome::is_empty));
        assert!(!s.temporal_parity());
    }

    #[test]
    fn measured_syndrome_tracks_cumulative_error() {
        let code = StabilizerCode::xzzx(LatticeGeometry::Periodic { rows: 4, cols: 4 }).unwrap();
        let noise = PhenomenologicalNoise::from_bias(0.1, 3.0, 5).unwrap().with_closure(TemporalClosure::PerfectFinalRound);
        let s = sample_spacetime(&noise, &code, &mut trial_rng(3, 1)).unwrap();
        assert_eq!(s.measured.len(), 6);
        for t in 0..5 {
            let mut expect = code.syndrome(&s.cumulative[t]).bits().clone();
            expect.xor_assign(&s.flips[t]);
            assert_eq!(s.measured[t].bits(), &expect);
        }
        assert_eq!(s.measured[5], code.syndrome(s.final_error()));
    }

    #[test]
    fn eta_serialises_infinity() {
        let spec = BiasSpec::new(0.1, f64::INFINITY);
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains("\"inf\""));
        let back: BiasSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
    }
}
