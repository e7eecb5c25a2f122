//! Small-instance oracle suite: every check is exhaustive or compared
//! against an independent brute-force computation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::code::{LatticeGeometry, Restriction, StabilizerCode, SymmetryDirection};
use crate::decoder::{decode_2d, exact_failure_rates};
use crate::error::Result;
use crate::matching::{brute_force_min_weight, min_weight_perfect_matching, WeightedGraph};
use crate::noise::{entropy_bits, hashing_bound, trial_rng, BiasSpec};
use crate::pauli::{Pauli, PauliOperator};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        CheckResult { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    /// Seeds the random instances of the matching and parity checks.
    pub seed: u64,
    pub matching_graphs: usize,
    pub parity_trials: usize,
    /// Include the exact ML-versus-matching comparison on the 13-qubit code.
    pub ml_dominance: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { seed: 0, matching_graphs: 1000, parity_trials: 10_000, ml_dominance: true }
    }
}

/// A code whose restricted distances are known.
#[derive(Debug, Clone)]
pub struct DistanceCase {
    pub label: String,
    pub code: StabilizerCode,
    pub x_only: usize,
    pub z_only: usize,
}

/// Open codes with their design distances.
pub fn standard_distance_cases() -> Result<Vec<DistanceCase>> {
    [(3, 3), (3, 5), (5, 3), (2, 4)]
        .into_iter()
        .map(|(d_x, d_z)| {
            let code = StabilizerCode::xzzx(LatticeGeometry::OpenRectangular { d_x, d_z })?;
            Ok(DistanceCase { label: code.geometry().label(), code, x_only: d_x, z_only: d_z })
        })
        .collect()
}

/// Copy of `code` with stabilizer `face` replaced by the identity.
pub fn corrupt_stabilizer(code: &StabilizerCode, face: usize) -> Result<StabilizerCode> {
    let mut stabs = code.stabilizers().to_vec();
    stabs[face] = PauliOperator::identity(code.num_qubits());
    StabilizerCode::from_stabilizers(code.geometry(), stabs)
}

pub fn check_distance(case: &DistanceCase) -> CheckResult {
    let got = (case.code.min_logical_weight(Restriction::XOnly), case.code.min_logical_weight(Restriction::ZOnly));
    match got {
        (Ok(x), Ok(z)) => CheckResult::new(
            format!("distance {}", case.label),
            x == case.x_only && z == case.z_only,
            format!("X-only {x} (expected {}), Z-only {z} (expected {})", case.x_only, case.z_only),
        ),
        (x, z) => CheckResult::new(format!("distance {}", case.label), false, format!("{x:?} {z:?}")),
    }
}

/// Blossom against brute force on random complete graphs of up to 10 vertices.
pub fn check_matching(graphs: usize, seed: u64) -> CheckResult {
    let mut discrepancies = 0;
    for i in 0..graphs {
        let mut rng = trial_rng(seed, i as u64);
        let n = 2 * rng.random_range(1..=5);
        // Small integer weights force ties; the others are continuous.
        let integer = rng.random_bool(0.5);
        let g = WeightedGraph::from_fn(n, |_, _| {
            if integer { rng.random_range(0..8) as f64 } else { rng.random::<f64>() * 10.0 }
        });
        let ok = g.and_then(|g| {
            let m = min_weight_perfect_matching(&g)?;
            let (best, _) = brute_force_min_weight(&g)?;
            let perfect = (0..n).all(|v| m.partner(v).is_some());
            Ok(perfect && (m.total_weight(&g) - best).abs() <= 1e-9 * best.max(1.0))
        });
        if !matches!(ok, Ok(true)) {
            discrepancies += 1;
        }
    }
    CheckResult::new(
        "matching oracle",
        discrepancies == 0,
        format!("{discrepancies} discrepancies in {graphs} random graphs"),
    )
}

/// Z-only errors leave an even number of defects on every closed diagonal.
pub fn check_diagonal_parity(trials: usize, seed: u64) -> CheckResult {
    let geometries = [
        LatticeGeometry::Periodic { rows: 5, cols: 5 },
        LatticeGeometry::Periodic { rows: 4, cols: 6 },
        LatticeGeometry::Periodic { rows: 5, cols: 6 },
    ];
    let mut violations = 0;
    let mut built = Vec::new();
    for g in geometries {
        match StabilizerCode::xzzx(g) {
            Ok(code) => {
                let diags = code.diagonals(SymmetryDirection::Z);
                built.push((code, diags));
            }
            Err(e) => return CheckResult::new("diagonal parity", false, e.to_string()),
        }
    }
    for t in 0..trials {
        let mut rng = trial_rng(seed ^ 0xD1A6, t as u64);
        let (code, diags) = &built[t % built.len()];
        let p: f64 = rng.random_range(0.0..1.0);
        let e = PauliOperator::uniform(
            code.num_qubits(),
            Pauli::Z,
            (0..code.num_qubits()).filter(|_| rng.random::<f64>() < p).collect::<Vec<_>>(),
        );
        let s = code.syndrome(&e);
        for d in diags {
            if d.faces.iter().filter(|&&f| s.contains(f)).count() % 2 == 1 {
                violations += 1;
            }
        }
    }
    CheckResult::new("diagonal parity", violations == 0, format!("{violations} violations in {trials} Z-only errors"))
}

/// Exact failure rates of ML and matching on the 3x3 open code.
pub fn check_ml_dominance() -> Vec<CheckResult> {
    let code = match StabilizerCode::xzzx(LatticeGeometry::OpenRectangular { d_x: 3, d_z: 3 }) {
        Ok(c) => c,
        Err(e) => return vec![CheckResult::new("ml dominance", false, e.to_string())],
    };
    [BiasSpec::new(0.1, 0.5), BiasSpec::new(0.15, 10.0), BiasSpec::new(0.3, f64::INFINITY)]
        .into_iter()
        .map(|spec| {
            let name = format!("ml dominance p={} eta={}", spec.p, spec.eta);
            let rates = spec.to_channel().and_then(|ch| exact_failure_rates(&code, &ch, |s| decode_2d(&code, s, &spec)));
            match rates {
                Ok(r) => CheckResult::new(name, r.ml <= r.decoder + 1e-12, format!("ml {:.6} matching {:.6}", r.ml, r.decoder)),
                Err(e) => CheckResult::new(name, false, e.to_string()),
            }
        })
        .collect()
}

/// Hashing bound against a direct bisection on `1 - H = 0`.
pub fn check_hashing_bound() -> CheckResult {
    let bisect = |r: [f64; 3]| {
        let (mut lo, mut hi) = (0.0f64, 0.5f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let h = entropy_bits(&[1.0 - mid, mid * r[0], mid * r[1], mid * r[2]]);
            if h < 1.0 { lo = mid } else { hi = mid }
        }
        0.5 * (lo + hi)
    };
    let third = 1.0 / 3.0;
    let pure = hashing_bound([0.0, 0.0, 1.0]);
    let dep = hashing_bound([third; 3]);
    let passed = pure.as_ref().is_ok_and(|&p| p == 0.5)
        && dep.as_ref().is_ok_and(|&p| (p - bisect([third; 3])).abs() < 1e-6);
    CheckResult::new("hashing bound", passed, format!("pure Z {pure:?}, depolarising {dep:?}"))
}

/// Run the checks over the given distance cases.
pub fn verify_cases(cases: &[DistanceCase], options: &VerifyOptions) -> VerifyReport {
    let mut checks = vec![
        check_matching(options.matching_graphs, options.seed),
        check_diagonal_parity(options.parity_trials, options.seed),
        check_hashing_bound(),
    ];
    checks.extend(cases.iter().map(check_distance));
    if options.ml_dominance {
        checks.extend(check_ml_dominance());
    }
    VerifyReport { checks }
}

/// The full suite on the standard instances.
pub fn verify_all(options: &VerifyOptions) -> Result<VerifyReport> {
    Ok(verify_cases(&standard_distance_cases()?, options))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> VerifyOptions {
        VerifyOptions { matching_graphs: 100, parity_trials: 500, ml_dominance: false, ..Default::default() }
    }

    #[test]
    fn fresh_suite_passes() {
        let report = verify_all(&quick()).unwrap();
        assert!(report.all_passed(), "{report:#?}");
    }

    #[test]
    fn corrupted_boundary_fails_distance() {
        let code = StabilizerCode::xzzx(LatticeGeometry::OpenRectangular { d_x: 3, d_z: 3 }).unwrap();
        // A boundary face touches fewer than four qubits.
        let face = (0..code.num_faces()).find(|&f| code.stabilizers()[f].weight() < 4).unwrap();
        let bad = corrupt_stabilizer(&code, face).unwrap();
        let case = DistanceCase { label: "corrupted".into(), code: bad, x_only: 3, z_only: 3 };
        let report = verify_cases(&[case], &quick());
        assert!(!report.all_passed());
        assert!(!report.checks.iter().find(|c| c.name == "distance corrupted").unwrap().passed);
    }

    #[test]
    fn seed_does_not_change_outcome() {
        for seed in [1, 99] {
            let report = verify_all(&VerifyOptions { seed, ..quick() }).unwrap();
            assert!(report.all_passed());
        }
    }
}
