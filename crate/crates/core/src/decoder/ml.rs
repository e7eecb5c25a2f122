//! Exact maximum-likelihood decoding by enumerating every logical coset.

use crate::code::{independent_generators, LogicalClass, PureErrorSolver, StabilizerCode, Syndrome};
use crate::error::{Error, Result};
use crate::noise::PauliChannel;
use crate::pauli::{Pauli, PauliOperator};

use super::Correction;

/// Largest number of group elements summed per syndrome.
const MAX_TERMS_LOG2: usize = 26;

/// Maximum-likelihood decoder for small codes.
#[derive(Debug, Clone)]
pub struct MlDecoder {
    n: usize,
    /// Support of each independent generator as (qubit, x | z << 1).
    generators: Vec<Vec<(usize, u8)>>,
    class_reps: Vec<PauliOperator>,
    solver: PureErrorSolver,
}

impl MlDecoder {
    pub fn new(code: &StabilizerCode) -> Result<Self> {
        let generators = independent_generators(code.stabilizers());
        let terms = generators.len() + 2 * code.num_logical();
        if terms > MAX_TERMS_LOG2 {
            return Err(Error::SizeGuard(format!(
                "maximum likelihood needs 2^{terms} terms per syndrome; limit is 2^{MAX_TERMS_LOG2}"
            )));
        }
        let generators = generators.iter().map(|g| g.support().map(|(q, p)| (q, xz_code(Some(p)))).collect()).collect();
        let class_reps = (0..code.num_classes() as u64).map(|l| code.class_representative(LogicalClass(l))).collect();
        Ok(MlDecoder { n: code.num_qubits(), generators, class_reps, solver: code.pure_error_solver() })
    }

    /// Total probability of each coset `e0 * L * S`, where `e0` is the
    /// solver's pure error for the syndrome, indexed by the label of `L`.
    pub fn coset_probabilities(&self, syndrome: &Syndrome, channel: &PauliChannel) -> Result<Vec<f64>> {
        let e0 = self
            .solver
            .solve(syndrome)
            .ok_or_else(|| Error::InconsistentSyndrome("no Pauli produces this syndrome".into()))?;
        let n = self.n;
        let probs = [channel.prob(Pauli::X), channel.prob(Pauli::Y), channel.prob(Pauli::Z)];
        let pow = |base: f64| -> Vec<f64> { (0..=n as i32).map(|c| base.powi(c)).collect() };
        let pow_i = pow(1.0 - channel.p());
        let pow_p: Vec<Vec<f64>> = probs.iter().map(|&b| pow(b)).collect();
        let term = |c: &[usize; 4]| pow_i[c[0]] * pow_p[0][c[1]] * pow_p[1][c[2]] * pow_p[2][c[3]];
        // counts[] slot of each x | z << 1 code: I, X, Z, Y.
        const SLOT: [usize; 4] = [0, 1 + Pauli::X as usize, 1 + Pauli::Z as usize, 1 + Pauli::Y as usize];
        let mut out = Vec::with_capacity(self.class_reps.len());
        for rep in &self.class_reps {
            let full = &e0 * rep;
            let mut op: Vec<u8> = (0..n).map(|q| xz_code(full.get(q))).collect();
            let mut counts = [0usize; 4];
            for &c in &op {
                counts[SLOT[c as usize]] += 1;
            }
            let mut total = term(&counts);
            // Gray code: step i toggles generator trailing_zeros(i).
            for i in 1u64..(1u64 << self.generators.len()) {
                for &(q, c) in &self.generators[i.trailing_zeros() as usize] {
                    counts[SLOT[op[q] as usize]] -= 1;
                    op[q] ^= c;
                    counts[SLOT[op[q] as usize]] += 1;
                }
                total += term(&counts);
            }
            out.push(total);
        }
        Ok(out)
    }

    /// Representative of the most probable coset; ties go to the lowest label.
    pub fn decode(&self, syndrome: &Syndrome, channel: &PauliChannel) -> Result<Correction> {
        let probs = self.coset_probabilities(syndrome, channel)?;
        let mut best = 0;
        for (l, &p) in probs.iter().enumerate() {
            if p > probs[best] {
                best = l;
            }
        }
        let e0 = self.solver.solve(syndrome).expect("solved above");
        Ok(Correction::from_pauli(&e0 * &self.class_reps[best]))
    }
}

fn xz_code(p: Option<Pauli>) -> u8 {
    p.map_or(0, |p| {
        let (x, z) = p.bits();
        u8::from(x) | u8::from(z) << 1
    })
}

/// Exact failure probabilities of maximum likelihood and of `decode`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ExactFailureRates {
    pub ml: f64,
    pub decoder: f64,
}

/// Exhaustive weighted sum over every Pauli error, grouped by syndrome and
/// logical coset: a decoder succeeds on a syndrome with the total probability
/// of the coset its correction lies in.
pub fn exact_failure_rates<F>(code: &StabilizerCode, channel: &PauliChannel, mut decode: F) -> Result<ExactFailureRates>
where
    F: FnMut(&Syndrome) -> Result<Correction>,
{
    let nf = code.num_faces();
    if nf > 24 {
        return Err(Error::SizeGuard(format!("{nf} faces; syndrome enumeration is limited to 24")));
    }
    let ml = MlDecoder::new(code)?;
    let labels: Vec<LogicalClass> = ml.class_reps.iter().map(|r| code.logical_label(r)).collect();
    let (mut ml_success, mut dec_success) = (0.0, 0.0);
    for bits in 0u64..(1u64 << nf) {
        let syndrome = Syndrome::from_defects(nf, (0..nf).filter(|f| bits >> f & 1 == 1));
        let Some(e0) = ml.solver.solve(&syndrome) else { continue };
        let probs = ml.coset_probabilities(&syndrome, channel)?;
        if probs.iter().all(|&p| p == 0.0) {
            continue;
        }
        ml_success += probs.iter().copied().fold(0.0, f64::max);
        let c = decode(&syndrome)?;
        if code.syndrome(&c.pauli) != syndrome {
            return Err(Error::InvalidCorrection(format!("correction for syndrome {bits:#x} leaves defects")));
        }
        let label = code.logical_label(&(&e0 * &c.pauli));
        let idx = labels
            .iter()
            .position(|&l| l == label)
            .ok_or_else(|| Error::InvalidCorrection("correction outside every coset".into()))?;
        dec_success += probs[idx];
    }
    Ok(ExactFailureRates { ml: 1.0 - ml_success, decoder: 1.0 - dec_success })
}

pub fn ml_decode(code: &StabilizerCode, syndrome: &Syndrome, channel: &PauliChannel) -> Result<Correction> {
    MlDecoder::new(code)?.decode(syndrome, channel)
}

pub fn ml_coset_probabilities(code: &StabilizerCode, syndrome: &Syndrome, channel: &PauliChannel) -> Result<Vec<f64>> {
    MlDecoder::new(code)?.coset_probabilities(syndrome, channel)
}
