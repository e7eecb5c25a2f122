//! Infinite-bias decoding: each Z diagonal is an independent repetition code
//! decoded by majority vote.

use crate::code::{Chain, StabilizerCode, SymmetryDirection, Syndrome};
use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliOperator};

use super::Correction;

/// Majority-vote decoder for Z-only noise.
#[derive(Debug, Clone)]
pub struct RepetitionDecoder {
    n: usize,
    chains: Vec<Chain>,
}

impl RepetitionDecoder {
    pub fn new(code: &StabilizerCode) -> Self {
        RepetitionDecoder { n: code.num_qubits(), chains: code.chains(SymmetryDirection::Z) }
    }

    pub fn decode(&self, syndrome: &Syndrome) -> Result<Correction> {
        let mut op = PauliOperator::identity(self.n);
        for (idx, chain) in self.chains.iter().enumerate() {
            let parity = chain.nodes.iter().flatten().filter(|&&f| syndrome.contains(f)).count() % 2 == 1;
            let has_boundary = chain.nodes.iter().any(Option::is_none);
            if parity && !has_boundary {
                return Err(Error::InconsistentSyndrome(format!(
                    "diagonal {idx} has odd defect parity; the syndrome is not from Z-only noise"
                )));
            }
            let defect = |node: &Option<usize>| match node {
                Some(f) => syndrome.contains(*f),
                None => parity,
            };
            // Running parity fixes each edge once the first node is fixed.
            let mut chosen = Vec::new();
            let mut s = false;
            for (i, &q) in chain.edges.iter().enumerate() {
                s ^= defect(&chain.nodes[i]);
                if s {
                    chosen.push(q);
                }
            }
            if chain.is_cycle && 2 * chosen.len() > chain.edges.len() {
                // The complementary set on a cycle has the same boundary.
                chosen = chain.edges.iter().copied().filter(|q| !chosen.contains(q)).collect();
            }
            for q in chosen {
                op.apply(q, Pauli::Z);
            }
        }
        Ok(Correction::from_pauli(op))
    }
}

/// Decode a Z-only syndrome diagonal by diagonal.
pub fn decode_infinite_bias(code: &StabilizerCode, syndrome: &Syndrome) -> Result<Correction> {
    RepetitionDecoder::new(code).decode(syndrome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::LatticeGeometry;
    use crate::decoder::{adjudicate, Outcome};

    #[test]
    fn single_z_errors_recovered() {
        for g in [
            LatticeGeometry::Periodic { rows: 5, cols: 5 },
            LatticeGeometry::Periodic { rows: 4, cols: 5 },
            LatticeGeometry::OpenRectangular { d_x: 3, d_z: 5 },
        ] {
            let code = StabilizerCode::xzzx(g).unwrap();
            for q in 0..code.num_qubits() {
                let e = PauliOperator::from_support(code.num_qubits(), [(q, Pauli::Z)]);
                let c = decode_infinite_bias(&code, &code.syndrome(&e)).unwrap();
                assert_eq!(c.pauli, e);
            }
        }
    }

    #[test]
    fn corrects_up_to_half_a_diagonal() {
        // Periodic(5,5): diagonal through face 0 holds qubits (k,k).
        let code = StabilizerCode::xzzx(LatticeGeometry::Periodic { rows: 5, cols: 5 }).unwrap();
        let diag: Vec<usize> = (0..5).map(|k| k * 5 + k).collect();
        for mask in 0u32..32 {
            let e = PauliOperator::uniform(25, Pauli::Z, (0..5).filter(|i| mask >> i & 1 == 1).map(|i| diag[i]));
            let c = decode_infinite_bias(&code, &code.syndrome(&e)).unwrap();
            let outcome = adjudicate(&code, &e, &c).unwrap();
            if mask.count_ones() <= 2 {
                assert_eq!(outcome, Outcome::Success, "mask {mask:05b}");
            }
        }
    }

    #[test]
    fn rejects_odd_diagonal_parity() {
        let code = StabilizerCode::xzzx(LatticeGeometry::Periodic { rows: 4, cols: 4 }).unwrap();
        let e = PauliOperator::from_support(16, [(5, Pauli::X)]);
        assert!(decode_infinite_bias(&code, &code.syndrome(&e)).is_err());
    }
}
