//! Weight-stratified estimator for small logical failure rates.
//!
//! `P = sum_w pi_w f_w` where `pi_w` is the exact binomial probability of
//! `w` non-identity qubits and `f_w` the failure probability conditioned on
//! that weight. Small strata are enumerated exactly, the rest sampled.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoder::Outcome;
use crate::error::{Error, Result};
use crate::noise::{derive_seed, trial_rng};
use crate::pauli::{Pauli, PauliOperator};

use super::{thread_pool, BatchParams, DecoderId, TrialRunner};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StratifiedOptions {
    /// Samples per stratum; a stratum with at most this many error patterns is enumerated instead.
    pub budget: u64,
    /// Strata are added until the binomial tail beyond them is below this.
    pub tail_tol: f64,
    /// Sampled strata with fewer failures get widened error bars.
    pub min_failures: u64,
    pub workers: usize,
}

impl Default for StratifiedOptions {
    fn default() -> Self {
        StratifiedOptions { budget: 100_000, tail_tol: 1e-12, min_failures: 10, workers: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StratumEstimate {
    pub w: usize,
    /// Binomial probability of exactly `w` errors.
    pub probability: f64,
    /// Patterns enumerated or samples drawn.
    pub samples: u64,
    pub failures: u64,
    pub exhaustive: bool,
    /// Failure probability conditioned on weight `w`.
    pub conditional: f64,
    pub conditional_std: f64,
    pub undersampled: bool,
}

/// The per-stratum data alone, reusable for any p sharing the same decoder.
pub type StratumProfile = Vec<StratumEstimate>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RareEventEstimate {
    pub params: BatchParams,
    pub num_qubits: usize,
    pub estimate: f64,
    pub std_error: f64,
    /// Probability mass of the strata left out.
    pub truncated_tail: f64,
    pub strata: Vec<StratumEstimate>,
    pub warnings: Vec<String>,
}

fn ln_choose(n: usize, k: usize) -> f64 {
    (1..=k).map(|i| ((n - k + i) as f64 / i as f64).ln()).sum()
}

fn binomial_pmf(n: usize, k: usize, p: f64) -> f64 {
    if p == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p == 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    (ln_choose(n, k) + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()).exp()
}

/// Next k-subset of 0..n in lexicographic order.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    for i in (0..k).rev() {
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Conditional failure data for strata `0..=max_weight`.
pub fn stratum_profile(runner: &TrialRunner, max_weight: usize, seed: u64, options: &StratifiedOptions) -> Result<StratumProfile> {
    let n = runner.code().num_qubits();
    let r = runner.channel().r();
    let paulis: Vec<(Pauli, f64)> = Pauli::ALL.into_iter().map(|p| (p, r[p.index()])).filter(|x| x.1 > 0.0).collect();
    let pool = thread_pool(options.workers)?;
    let mut out = Vec::new();
    for w in 0..=max_weight.min(n) {
        let patterns = (ln_choose(n, w) + w as f64 * (paulis.len() as f64).ln()).exp();
        let stratum = if patterns <= options.budget as f64 + 0.5 {
            pool.install(|| enumerate_stratum(runner, w, &paulis))?
        } else {
            let sub = derive_seed(seed, w as u64);
            let failures = pool.install(|| {
                (0..options.budget)
                    .into_par_iter()
                    .map(|i| {
                        let mut rng = trial_rng(sub, i);
                        let e = weighted_error(n, w, &paulis, &mut rng);
                        runner.decode_error(&e).map(|o| u64::from(o != Outcome::Success))
                    })
                    .try_reduce(|| 0, |a, b| Ok(a + b))
            })?;
            let total = options.budget;
            let f = failures as f64 / total as f64;
            let undersampled = failures < options.min_failures;
            // Widen with the Laplace estimate when failures are too few to trust f.
            let f_var = if undersampled { (failures as f64 + 1.0) / (total as f64 + 2.0) } else { f };
            StratumEstimate {
                w,
                probability: 0.0,
                samples: total,
                failures,
                exhaustive: false,
                conditional: f,
                conditional_std: (f_var * (1.0 - f_var) / total as f64).sqrt(),
                undersampled,
            }
        };
        out.push(stratum);
    }
    Ok(out)
}

fn weighted_error<R: Rng>(n: usize, w: usize, paulis: &[(Pauli, f64)], rng: &mut R) -> PauliOperator {
    let mut e = PauliOperator::identity(n);
    for q in sample_indices(rng, n, w).into_iter() {
        let mut u: f64 = rng.random();
        let mut chosen = paulis[paulis.len() - 1].0;
        for &(p, pr) in paulis {
            if u < pr {
                chosen = p;
                break;
            }
            u -= pr;
        }
        e.set(q, Some(chosen));
    }
    e
}

fn enumerate_stratum(runner: &TrialRunner, w: usize, paulis: &[(Pauli, f64)]) -> Result<StratumEstimate> {
    let n = runner.code().num_qubits();
    let mut combos = Vec::new();
    let mut c: Vec<usize> = (0..w).collect();
    loop {
        combos.push(c.clone());
        if w == 0 || !next_combination(&mut c, n) {
            break;
        }
    }
    // Per-combination sums are collected in order so the total does not
    // depend on how work was split.
    let parts: Vec<(u64, u64, f64)> = combos
        .par_iter()
        .map(|qubits| {
            let mut digits = vec![0usize; w];
            let (mut count, mut fails, mut mass) = (0u64, 0u64, 0.0f64);
            loop {
                let mut e = PauliOperator::identity(n);
                let mut prob = 1.0;
                for (i, &q) in qubits.iter().enumerate() {
                    let (p, pr) = paulis[digits[i]];
                    e.set(q, Some(p));
                    prob *= pr;
                }
                count += 1;
                if runner.decode_error(&e)? != Outcome::Success {
                    fails += 1;
                    mass += prob;
                }
                let mut i = 0;
                while i < w {
                    digits[i] += 1;
                    if digits[i] < paulis.len() {
                        break;
                    }
                    digits[i] = 0;
                    i += 1;
                }
                if i == w {
                    break;
                }
            }
            Ok((count, fails, mass))
        })
        .collect::<Result<_>>()?;
    let mut samples = 0;
    let mut failures = 0;
    let mut conditional = 0.0;
    for (c, f, m) in parts {
        samples += c;
        failures += f;
        conditional += m;
    }
    // Pattern probabilities within a stratum are normalised by the number of
    // qubit subsets.
    conditional /= ln_choose(n, w).exp();
    Ok(StratumEstimate {
        w,
        probability: 0.0,
        samples,
        failures,
        exhaustive: true,
        conditional,
        conditional_std: 0.0,
        undersampled: false,
    })
}

/// Stratified estimate of the code-capacity failure probability at `params.p`.
pub fn rare_event_estimate(params: &BatchParams, seed: u64, options: &StratifiedOptions) -> Result<RareEventEstimate> {
    if params.decoder == DecoderId::Mwpm3d {
        return Err(Error::Unsupported("stratified estimation covers code-capacity decoders".into()));
    }
    if options.budget == 0 {
        return Err(Error::InvalidArgument("stratum budget must be positive".into()));
    }
    let runner = TrialRunner::new(*params)?;
    let n = runner.code().num_qubits();
    let p = params.p;
    let mut max_weight = 0;
    let mut tail = 1.0 - binomial_pmf(n, 0, p);
    while max_weight < n && tail >= options.tail_tol {
        max_weight += 1;
        tail -= binomial_pmf(n, max_weight, p);
    }
    let tail = tail.max(0.0);
    let mut strata = stratum_profile(&runner, max_weight, seed, options)?;
    let mut estimate = 0.0;
    let mut var = 0.0;
    for s in &mut strata {
        s.probability = binomial_pmf(n, s.w, p);
        estimate += s.probability * s.conditional;
        var += (s.probability * s.conditional_std).powi(2);
    }
    let mut warnings = Vec::new();
    for s in &mut strata {
        // Only flag strata whose widened bar is material to the total.
        if s.undersampled && s.probability * s.conditional_std > 0.01 * estimate.max(f64::MIN_POSITIVE) {
            let msg = format!(
                "stratum w={} has {} failures in {} samples; error bar widened",
                s.w, s.failures, s.samples
            );
            log::warn!("{msg}");
            warnings.push(msg);
        } else {
            s.undersampled = false;
        }
    }
    Ok(RareEventEstimate {
        params: *params,
        num_qubits: n,
        estimate,
        std_error: var.sqrt(),
        truncated_tail: tail,
        strata,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::LatticeGeometry;

    fn exhaustive_failure(params: &BatchParams) -> f64 {
        let runner = TrialRunner::new(*params).unwrap();
        let n = runner.code().num_qubits();
        let ch = *runner.channel();
        let probs = [1.0 - ch.p(), ch.prob(Pauli::X), ch.prob(Pauli::Y), ch.prob(Pauli::Z)];
        let mut total = 0.0;
        for e in 0..4usize.pow(n as u32) {
            let mut op = PauliOperator::identity(n);
            let mut prob = 1.0;
            for q in 0..n {
                let digit = (e >> (2 * q)) & 3;
                prob *= probs[digit];
                op.set(q, [None, Some(Pauli::X), Some(Pauli::Y), Some(Pauli::Z)][digit]);
            }
            if runner.decode_error(&op).unwrap().is_failure() {
                total += prob;
            }
        }
        total
    }

    #[test]
    fn combinations_and_pmf() {
        let mut c = vec![0, 1];
        let mut count = 1;
        while next_combination(&mut c, 5) {
            count += 1;
        }
        assert_eq!(count, 10);
        let s: f64 = (0..=20).map(|k| binomial_pmf(20, k, 0.3)).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weight_zero_never_fails() {
        let params = BatchParams::code_capacity(LatticeGeometry::Periodic { rows: 3, cols: 4 }, DecoderId::Mwpm2d, 0.01, 3.0);
        let est = rare_event_estimate(&params, 1, &StratifiedOptions { budget: 50, ..Default::default() }).unwrap();
        assert_eq!(est.strata[0].w, 0);
        assert_eq!(est.strata[0].conditional, 0.0);
        assert!(est.strata[0].exhaustive);
    }

    #[test]
    fn matches_exhaustive_enumeration() {
        let g = LatticeGeometry::Periodic { rows: 3, cols: 3 };
        for (p, budget) in [(1e-3, 2000), (0.05, 400)] {
            let params = BatchParams::code_capacity(g, DecoderId::Mwpm2d, p, 3.0);
            let exact = exhaustive_failure(&params);
            let est = rare_event_estimate(&params, 7, &StratifiedOptions { budget, ..Default::default() }).unwrap();
            assert!(est.strata.iter().any(|s| !s.exhaustive), "some stratum must be sampled");
            let sigma = est.std_error.max(1e-15);
            assert!((est.estimate - exact).abs() <= 3.0 * sigma + est.truncated_tail, "p={p}: {} vs {exact} ({sigma})", est.estimate);
        }
    }

    #[test]
    fn full_enumeration_is_exact() {
        let params = BatchParams::code_capacity(LatticeGeometry::Periodic { rows: 2, cols: 3 }, DecoderId::Mwpm2d, 0.1, 3.0);
        let exact = exhaustive_failure(&params);
        let est = rare_event_estimate(&params, 0, &StratifiedOptions { budget: 1 << 20, tail_tol: 0.0, ..Default::default() }).unwrap();
        assert!(est.strata.iter().all(|s| s.exhaustive));
        assert!((est.estimate - exact).abs() < 1e-12, "{} vs {exact}", est.estimate);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn deterministic_across_workers() {
        let params = BatchParams::code_capacity(LatticeGeometry::Periodic { rows: 3, cols: 4 }, DecoderId::Mwpm2d, 0.02, 3.0);
        let a = rare_event_estimate(&params, 5, &StratifiedOptions { budget: 300, workers: 1, ..Default::default() }).unwrap();
        let b = rare_event_estimate(&params, 5, &StratifiedOptions { budget: 300, workers: 3, ..Default::default() }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn undersampling_is_flagged() {
        let params = BatchParams::code_capacity(LatticeGeometry::Periodic { rows: 5, cols: 6 }, DecoderId::Mwpm2d, 0.01, 3.0);
        let est = rare_event_estimate(&params, 5, &StratifiedOptions { budget: 20, ..Default::default() }).unwrap();
        assert!(!est.warnings.is_empty());
        assert!(est.strata.iter().any(|s| s.undersampled));
    }
}
