//! Minimum-weight perfect matching decoders on the anisotropic lattice, in
//! 2D (perfect measurements) and 3D (repeated noisy measurements).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::code::{StabilizerCode, Syndrome};
use crate::error::{Error, Result};
use crate::matching::min_weight_perfect_matching_edges;
use crate::noise::{BiasSpec, PhenomenologicalNoise, SpacetimeSample, TemporalClosure};
use crate::pauli::Bits;

use super::{Correction, DistanceTable, WeightParams};

/// A detection event at `face` in time layer `round` (0 for 2D decoding).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Defect {
    pub face: usize,
    pub round: usize,
}

/// Matching-graph construction options.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatchingOptions {
    /// Keep only each defect's `k` lightest edges when a component is larger
    /// than `2k + 2` defects; `None` always uses the complete graph.
    pub knn: Option<usize>,
}

impl Default for MatchingOptions {
    fn default() -> Self {
        MatchingOptions { knn: Some(16) }
    }
}

impl MatchingOptions {
    pub fn exact() -> Self {
        MatchingOptions { knn: None }
    }
}

/// Detection events of a spacetime sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyndromeVolume {
    /// Number of noisy measurement rounds.
    pub rounds: usize,
    pub closure: TemporalClosure,
    /// Detection events per time layer: `rounds` layers with periodic
    /// closure, `rounds + 1` with a perfect final round.
    pub layers: Vec<Syndrome>,
}

impl SyndromeVolume {
    /// Detection events: each round's outcome XOR the previous one. With
    /// periodic closure the layer before round 0 is round `rounds - 1` with
    /// the accumulated data error removed.
    pub fn from_sample(code: &StabilizerCode, sample: &SpacetimeSample) -> Self {
        let t = sample.rounds();
        let nf = code.num_faces();
        let mut layers = Vec::with_capacity(t + 1);
        let xor = |a: &Bits, b: &Bits| {
            let mut out = a.clone();
            out.xor_assign(b);
            out
        };
        match sample.closure {
            TemporalClosure::Periodic => {
                let mut before = xor(sample.measured[t - 1].bits(), code.syndrome(sample.final_error()).bits());
                for m in &sample.measured[..t] {
                    layers.push(Syndrome::from_bits(xor(m.bits(), &before)));
                    before = m.bits().clone();
                }
            }
            TemporalClosure::PerfectFinalRound => {
                let mut before = Bits::zeros(nf);
                for m in &sample.measured[..=t] {
                    layers.push(Syndrome::from_bits(xor(m.bits(), &before)));
                    before = m.bits().clone();
                }
            }
        }
        SyndromeVolume { rounds: t, closure: sample.closure, layers }
    }

    /// A single perfectly measured layer.
    pub fn from_syndrome(syndrome: &Syndrome) -> Self {
        SyndromeVolume { rounds: 1, closure: TemporalClosure::Periodic, layers: vec![syndrome.clone()] }
    }

    pub fn events(&self) -> Vec<Defect> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(round, s)| s.defects().map(move |face| Defect { face, round }))
            .collect()
    }

    pub fn num_events(&self) -> usize {
        self.layers.iter().map(Syndrome::len).sum()
    }
}

/// Temporal separation of two layers and whether the short route wraps.
pub fn spacetime_separation(a: usize, b: usize, rounds: usize, closure: TemporalClosure) -> (usize, bool) {
    let dt = a.abs_diff(b);
    match closure {
        TemporalClosure::Periodic if rounds - dt < dt => (rounds - dt, true),
        _ => (dt, false),
    }
}

/// Matching weight between two defects: spatial string weight plus `w_t`
/// per round of temporal separation.
pub fn edge_weight(
    table: &DistanceTable,
    u: Defect,
    v: Defect,
    params: &WeightParams,
    rounds: usize,
    closure: TemporalClosure,
) -> f64 {
    let (lt, _) = spacetime_separation(u.round, v.round, rounds, closure);
    let spatial = table.distance(u.face, v.face);
    if lt == 0 { spatial } else { spatial + params.w_t * lt as f64 }
}

/// Matching decoder with a precomputed weight table.
#[derive(Debug, Clone)]
pub struct MwpmDecoder {
    n: usize,
    params: WeightParams,
    table: DistanceTable,
    options: MatchingOptions,
}

impl MwpmDecoder {
    pub fn new(code: &StabilizerCode, params: WeightParams, options: MatchingOptions) -> Result<Self> {
        let table = DistanceTable::new(code, &params)?;
        Ok(MwpmDecoder { n: code.num_qubits(), params, table, options })
    }

    pub fn params(&self) -> &WeightParams {
        &self.params
    }

    pub fn table(&self) -> &DistanceTable {
        &self.table
    }

    /// Decode a perfectly measured syndrome.
    pub fn decode(&self, syndrome: &Syndrome) -> Result<Correction> {
        let events: Vec<Defect> = syndrome.defects().map(|face| Defect { face, round: 0 }).collect();
        self.decode_events(&events, 1, TemporalClosure::PerfectFinalRound)
    }

    /// Decode a spacetime volume of detection events.
    pub fn decode_volume(&self, volume: &SyndromeVolume) -> Result<Correction> {
        self.decode_events(&volume.events(), volume.rounds, volume.closure)
    }

    fn decode_events(&self, events: &[Defect], rounds: usize, closure: TemporalClosure) -> Result<Correction> {
        let mut correction = Correction::identity(self.n);
        for (a, b) in self.match_events(events, rounds, closure)? {
            let fa = events[a].face;
            match b {
                None => self.table.apply_path(fa, self.table.boundary(), &mut correction.pauli)?,
                Some(b) => {
                    self.table.apply_path(fa, events[b].face, &mut correction.pauli)?;
                    let (lt, wraps) = spacetime_separation(events[a].round, events[b].round, rounds, closure);
                    if lt > 0 && wraps {
                        correction.temporal_cycle_parity ^= true;
                    }
                }
            }
        }
        Ok(correction)
    }

    /// Pairs of event indices; `None` partners are the boundary.
    pub fn match_events(
        &self,
        events: &[Defect],
        rounds: usize,
        closure: TemporalClosure,
    ) -> Result<Vec<(usize, Option<usize>)>> {
        let time_finite = self.params.w_t.is_finite();
        let mut groups: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (i, e) in events.iter().enumerate() {
            let key = (self.table.component(e.face), if time_finite { 0 } else { e.round });
            groups.entry(key).or_default().push(i);
        }
        let mut out = Vec::with_capacity(events.len());
        for members in groups.values() {
            let weight = |i: usize, j: usize| {
                edge_weight(&self.table, events[members[i]], events[members[j]], &self.params, rounds, closure)
            };
            let boundary: Option<Vec<f64>> = {
                let first = self.table.boundary_distance(events[members[0]].face);
                first.is_finite().then(|| members.iter().map(|&m| self.table.boundary_distance(events[m].face)).collect())
            };
            let pairs = match_component(members.len(), &weight, boundary.as_deref(), self.options.knn)?;
            for (i, j) in pairs {
                out.push((members[i], j.map(|j| members[j])));
            }
        }
        Ok(out)
    }
}

/// Match `m` defects, optionally with boundary partners. Returns pairs of
/// local indices; `None` means matched to the boundary.
fn match_component(
    m: usize,
    weight: &dyn Fn(usize, usize) -> f64,
    boundary: Option<&[f64]>,
    knn: Option<usize>,
) -> Result<Vec<(usize, Option<usize>)>> {
    if boundary.is_none() && m % 2 == 1 {
        return Err(Error::InconsistentSyndrome(format!("component with {m} defects and no boundary")));
    }
    if m == 1 {
        return Ok(vec![(0, None)]);
    }
    let pruned = knn.filter(|&k| m > 2 * k + 2);
    let attempt = |k: Option<usize>| -> Result<Vec<(usize, Option<usize>)>> {
        let pairs = candidate_pairs(m, weight, k);
        let mut edges: Vec<(usize, usize, f64)> = pairs.iter().map(|&(i, j)| (i, j, weight(i, j))).collect();
        let n_vertices = match boundary {
            None => m,
            Some(b) => {
                edges.extend(pairs.iter().map(|&(i, j)| (m + i, m + j, 0.0)));
                edges.extend((0..m).map(|i| (i, m + i, b[i])));
                2 * m
            }
        };
        let matching = min_weight_perfect_matching_edges(n_vertices, &edges)?;
        Ok(matching
            .pairs
            .into_iter()
            .filter(|&(i, _)| i < m)
            .map(|(i, j)| if j < m { (i, Some(j)) } else { (i, None) })
            .collect())
    };
    match pruned {
        Some(k) => attempt(Some(k)).or_else(|_| attempt(None)),
        None => attempt(None),
    }
}

/// Edge set: all pairs, or the union of each vertex's `k` lightest edges.
fn candidate_pairs(m: usize, weight: &dyn Fn(usize, usize) -> f64, k: Option<usize>) -> Vec<(usize, usize)> {
    let Some(k) = k else {
        return (0..m).flat_map(|j| (0..j).map(move |i| (i, j))).collect();
    };
    let mut pairs = Vec::with_capacity(m * k);
    let mut row: Vec<(f64, usize)> = Vec::with_capacity(m);
    for i in 0..m {
        row.clear();
        row.extend((0..m).filter(|&j| j != i).map(|j| (weight(i, j), j)));
        let k = k.min(row.len());
        row.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        pairs.extend(row[..k].iter().map(|&(_, j)| (i.min(j), i.max(j))));
    }
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}

/// Decode a code-capacity syndrome with weights from a biased channel.
pub fn decode_2d(code: &StabilizerCode, syndrome: &Syndrome, spec: &BiasSpec) -> Result<Correction> {
    MwpmDecoder::new(code, WeightParams::from_bias(spec)?, MatchingOptions::default())?.decode(syndrome)
}

/// Decode a spacetime volume under phenomenological noise.
pub fn decode_3d(code: &StabilizerCode, volume: &SyndromeVolume, noise: &PhenomenologicalNoise) -> Result<Correction> {
    MwpmDecoder::new(code, WeightParams::from_phenomenological(noise)?, MatchingOptions::default())?
        .decode_volume(volume)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::LatticeGeometry;
    use crate::decoder::{adjudicate, adjudicate_spacetime, decode_infinite_bias, Outcome};
    use crate::noise::{sample_error, sample_spacetime, trial_rng, PauliChannel};
    use crate::pauli::{Pauli, PauliOperator};

    fn code(g: LatticeGeometry) -> StabilizerCode {
        StabilizerCode::xzzx(g).unwrap()
    }

    #[test]
    fn empty_syndrome_gives_identity() {
        let c = code(LatticeGeometry::Periodic { rows: 4, cols: 4 });
        let corr = decode_2d(&c, &Syndrome::empty(16), &BiasSpec::new(0.1, 10.0)).unwrap();
        assert!(corr.pauli.is_identity());
    }

    #[test]
    fn single_errors_are_corrected() {
        for g in [LatticeGeometry::Periodic { rows: 5, cols: 5 }, LatticeGeometry::OpenRectangular { d_x: 3, d_z: 3 }] {
            let c = code(g);
            for eta in [0.5, 10.0, f64::INFINITY] {
                let spec = BiasSpec::new(0.05, eta);
                let paulis: &[Pauli] = if eta.is_infinite() { &[Pauli::Z] } else { &Pauli::ALL };
                for q in 0..c.num_qubits() {
                    for &p in paulis {
                        let e = PauliOperator::from_support(c.num_qubits(), [(q, p)]);
                        let corr = decode_2d(&c, &c.syndrome(&e), &spec).unwrap();
                        assert_eq!(adjudicate(&c, &e, &corr).unwrap(), Outcome::Success, "{g} eta={eta} {p}{q}");
                    }
                }
            }
        }
    }

    #[test]
    fn odd_defects_without_boundary_is_an_error() {
        let c = code(LatticeGeometry::Periodic { rows: 4, cols: 4 });
        let s = Syndrome::from_defects(16, [0]);
        assert!(matches!(decode_2d(&c, &s, &BiasSpec::new(0.1, 1.0)), Err(Error::InconsistentSyndrome(_))));
    }

    #[test]
    fn infinite_bias_weights_agree_with_repetition_decoder() {
        let spec = BiasSpec::new(0.3, f64::INFINITY);
        for g in [
            LatticeGeometry::Periodic { rows: 3, cols: 3 },
            LatticeGeometry::OpenRectangular { d_x: 3, d_z: 3 },
        ] {
            let c = code(g);
            let n = c.num_qubits();
            for mask in 0u32..(1 << n) {
                let e = PauliOperator::uniform(n, Pauli::Z, (0..n).filter(|q| mask >> q & 1 == 1));
                let s = c.syndrome(&e);
                let a = decode_2d(&c, &s, &spec).unwrap();
                let b = decode_infinite_bias(&c, &s).unwrap();
                assert_eq!(
                    c.logical_class(&(&e * &a.pauli)).unwrap(),
                    c.logical_class(&(&e * &b.pauli)).unwrap(),
                    "{g} mask {mask:b}"
                );
            }
        }
        for d in [5, 7] {
            let c = code(LatticeGeometry::Periodic { rows: d, cols: d });
            let ch = PauliChannel::pure(0.3, Pauli::Z).unwrap();
            for t in 0..300 {
                let e = sample_error(&ch, d * d, &mut trial_rng(d as u64, t));
                let s = c.syndrome(&e);
                let a = decode_2d(&c, &s, &spec).unwrap();
                let b = decode_infinite_bias(&c, &s).unwrap();
                assert_eq!(c.logical_class(&(&e * &a.pauli)).unwrap(), c.logical_class(&(&e * &b.pauli)).unwrap());
            }
        }
    }

    #[test]
    fn pruned_matching_agrees_with_complete_graph() {
        let c = code(LatticeGeometry::Periodic { rows: 8, cols: 8 });
        let noise = PhenomenologicalNoise::from_bias(0.1, 1.0, 8).unwrap();
        let params = WeightParams::from_phenomenological(&noise).unwrap();
        let pruned = MwpmDecoder::new(&c, params, MatchingOptions::default()).unwrap();
        let exact = MwpmDecoder::new(&c, params, MatchingOptions::exact()).unwrap();
        for t in 0..60 {
            let s = sample_spacetime(&noise, &c, &mut trial_rng(9, t)).unwrap();
            let v = SyndromeVolume::from_sample(&c, &s);
            let events = v.events();
            let total = |pairs: Vec<(usize, Option<usize>)>| -> f64 {
                pairs
                    .into_iter()
                    .map(|(a, b)| match b {
                        Some(b) => edge_weight(pruned.table(), events[a], events[b], &params, v.rounds, v.closure),
                        None => pruned.table().boundary_distance(events[a].face),
                    })
                    .sum()
            };
            let wp = total(pruned.match_events(&events, v.rounds, v.closure).unwrap());
            let we = total(exact.match_events(&events, v.rounds, v.closure).unwrap());
            assert!((wp - we).abs() < 1e-9, "trial {t}: {wp} vs {we}");
        }
    }

    #[test]
    fn measurement_flip_is_matched_in_time() {
        let c = code(LatticeGeometry::Periodic { rows: 4, cols: 4 });
        let noise = PhenomenologicalNoise::from_bias(0.05, 1.0, 4).unwrap();
        let mut layers = vec![Syndrome::empty(16); 4];
        // Outcome of face 5 flipped in round 1 only: events in rounds 1 and 2.
        layers[1].flip(5);
        layers[2].flip(5);
        let v = SyndromeVolume { rounds: 4, closure: TemporalClosure::Periodic, layers };
        let corr = decode_3d(&c, &v, &noise).unwrap();
        assert!(corr.pauli.is_identity());
        assert!(!corr.temporal_cycle_parity);
    }

    #[test]
    fn data_error_is_matched_in_space() {
        let c = code(LatticeGeometry::Periodic { rows: 4, cols: 4 });
        let noise = PhenomenologicalNoise::from_bias(0.05, 10.0, 4).unwrap();
        let e = PauliOperator::from_support(16, [(5, Pauli::Z)]);
        let mut layers = vec![Syndrome::empty(16); 4];
        // Error appeared before round 2 and persists to the end.
        layers[2] = c.syndrome(&e);
        let v = SyndromeVolume { rounds: 4, closure: TemporalClosure::Periodic, layers };
        let corr = decode_3d(&c, &v, &noise).unwrap();
        assert_eq!(corr.pauli.weight(), 1);
    }

    #[test]
    fn forced_time_wrap_is_a_temporal_failure() {
        // Measurement flips on one face in every round but one of a periodic
        // volume: the events sit one layer apart across the time boundary.
        let c = code(LatticeGeometry::Periodic { rows: 3, cols: 3 });
        let noise = PhenomenologicalNoise { p_hr: 0.0, p_lr: 0.0, q: 0.2, rounds: 6, axis: Pauli::Z, closure: TemporalClosure::Periodic };
        let mut flips = vec![Bits::zeros(9); 6];
        for f in flips.iter_mut().take(5).skip(1) {
            f.set(4, true);
        }
        // Flipped in rounds 1..=4: events at layers 1 and 5; true chain does not wrap.
        let measured: Vec<Syndrome> = flips.iter().map(|f| Syndrome::from_bits(f.clone())).collect();
        let sample = SpacetimeSample {
            data_errors: vec![PauliOperator::identity(9); 6],
            cumulative: vec![PauliOperator::identity(9); 6],
            measured,
            flips,
            closure: TemporalClosure::Periodic,
        };
        let v = SyndromeVolume::from_sample(&c, &sample);
        assert_eq!(v.events(), vec![Defect { face: 4, round: 1 }, Defect { face: 4, round: 5 }]);
        let corr = MwpmDecoder::new(&c, WeightParams::from_phenomenological(&noise).unwrap(), MatchingOptions::exact())
            .unwrap()
            .decode_volume(&v)
            .unwrap();
        assert!(corr.temporal_cycle_parity);
        assert_eq!(adjudicate_spacetime(&c, &sample, &corr).unwrap(), Outcome::TemporalFailure);
    }

    #[test]
    fn single_layer_volume_matches_2d() {
        let c = code(LatticeGeometry::Periodic { rows: 5, cols: 5 });
        let spec = BiasSpec::new(0.1, 3.0);
        let noise = PhenomenologicalNoise { q: 0.0, ..PhenomenologicalNoise::from_bias(0.1, 3.0, 1).unwrap() };
        for t in 0..50 {
            let mut rng = trial_rng(4, t);
            let s = sample_spacetime(&noise, &c, &mut rng).unwrap();
            let v = SyndromeVolume::from_sample(&c, &s);
            assert_eq!(v.layers[0], c.syndrome(s.final_error()));
            let a = decode_3d(&c, &v, &noise).unwrap();
            let b = decode_2d(&c, &v.layers[0], &spec).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn spacetime_trials_leave_valid_residuals() {
        for closure in [TemporalClosure::Periodic, TemporalClosure::PerfectFinalRound] {
            for g in [LatticeGeometry::Periodic { rows: 4, cols: 4 }, LatticeGeometry::OpenRectangular { d_x: 3, d_z: 4 }] {
                let c = code(g);
                let noise = PhenomenologicalNoise::from_bias(0.08, 3.0, 4).unwrap().with_closure(closure);
                for t in 0..100 {
                    let s = sample_spacetime(&noise, &c, &mut trial_rng(2, t)).unwrap();
                    let v = SyndromeVolume::from_sample(&c, &s);
                    let corr = decode_3d(&c, &v, &noise).unwrap();
                    adjudicate_spacetime(&c, &s, &corr).unwrap();
                }
            }
        }
    }
}
