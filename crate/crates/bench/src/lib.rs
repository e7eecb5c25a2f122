//! Fixed inputs shared by the benchmarks.

use rand::Rng;
use xzzx::noise::trial_rng;
use xzzx::{
    sample_error, sample_spacetime, BiasSpec, LatticeGeometry, PhenomenologicalNoise, StabilizerCode, Syndrome,
    SyndromeVolume, WeightedGraph,
};

/// Complete graph on `n` vertices with weights drawn from a fixed stream.
pub fn random_graph(n: usize, seed: u64) -> WeightedGraph {
    let mut rng = trial_rng(seed, n as u64);
    WeightedGraph::from_fn(n, |_, _| rng.random::<f64>() * 10.0).expect("valid weights")
}

/// `count` code-capacity syndromes on the `d x d` torus.
pub fn syndromes(d: usize, spec: &BiasSpec, count: usize) -> (StabilizerCode, Vec<Syndrome>) {
    let code = StabilizerCode::xzzx(LatticeGeometry::Periodic { rows: d, cols: d }).expect("valid lattice");
    let channel = spec.to_channel().expect("valid noise");
    let out = (0..count)
        .map(|i| {
            let mut rng = trial_rng(1, i as u64);
            code.syndrome(&sample_error(&channel, code.num_qubits(), &mut rng))
        })
        .collect();
    (code, out)
}

/// `count` spacetime volumes on the `d x d` torus with `d` noisy rounds.
pub fn volumes(d: usize, p: f64, eta: f64, count: usize) -> (StabilizerCode, PhenomenologicalNoise, Vec<SyndromeVolume>) {
    let code = StabilizerCode::xzzx(LatticeGeometry::Periodic { rows: d, cols: d }).expect("valid lattice");
    let noise = PhenomenologicalNoise::from_bias(p, eta, d).expect("valid noise");
    let out = (0..count)
        .map(|i| {
            let mut rng = trial_rng(2, i as u64);
            let sample = sample_spacetime(&noise, &code, &mut rng).expect("valid sample");
            SyndromeVolume::from_sample(&code, &sample)
        })
        .collect();
    (code, noise, out)
}
