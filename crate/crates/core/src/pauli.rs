//! Phase-free n-qubit Pauli operators in symplectic (x, z) bit form.

use std::fmt;
use std::ops::{Mul, MulAssign};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Single-qubit non-identity Pauli.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    /// (x, z) symplectic bits.
    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn from_bits(x: bool, z: bool) -> Option<Pauli> {
        match (x, z) {
            (false, false) => None,
            (true, false) => Some(Pauli::X),
            (true, true) => Some(Pauli::Y),
            (false, true) => Some(Pauli::Z),
        }
    }

    /// Two non-identity single-qubit Paulis anticommute iff they differ.
    pub fn anticommutes(self, other: Pauli) -> bool {
        self != other
    }

    pub fn index(self) -> usize {
        match self {
            Pauli::X => 0,
            Pauli::Y => 1,
            Pauli::Z => 2,
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        };
        write!(f, "{c}")
    }
}

/// Fixed-length bit vector backed by 64-bit words.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Bits {
    len: usize,
    words: Vec<u64>,
}

impl Bits {
    pub fn zeros(len: usize) -> Self {
        Bits { len, words: vec![0; len.div_ceil(64)] }
    }

    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut bits = Bits::zeros(len);
        for i in indices {
            bits.set(i, true);
        }
        bits
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i & 63);
        if value {
            self.words[i >> 6] |= mask;
        } else {
            self.words[i >> 6] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i >> 6] ^= 1u64 << (i & 63);
    }

    pub fn xor_assign(&mut self, other: &Bits) {
        assert_eq!(self.len, other.len, "bit vector length mismatch");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= *b;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn any(&self) -> bool {
        self.words.iter().any(|&w| w != 0)
    }

    /// Parity of the popcount of `self & other`.
    pub fn dot(&self, other: &Bits) -> bool {
        assert_eq!(self.len, other.len, "bit vector length mismatch");
        let mut acc = 0u64;
        for (a, b) in self.words.iter().zip(&other.words) {
            acc ^= a & b;
        }
        acc.count_ones() & 1 == 1
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut word = w;
            std::iter::from_fn(move || {
                if word == 0 {
                    return None;
                }
                let tz = word.trailing_zeros() as usize;
                word &= word - 1;
                Some(wi * 64 + tz)
            })
        })
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }
}

/// An n-qubit Pauli operator modulo global phase.
///
/// Stored densely as symplectic bit vectors; qubits with both bits clear
/// carry the identity.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliOperator {
    x: Bits,
    z: Bits,
}

impl PauliOperator {
    pub fn identity(n: usize) -> Self {
        PauliOperator { x: Bits::zeros(n), z: Bits::zeros(n) }
    }

    pub fn from_support(n: usize, support: impl IntoIterator<Item = (usize, Pauli)>) -> Self {
        let mut op = PauliOperator::identity(n);
        for (q, p) in support {
            op.set(q, Some(p));
        }
        op
    }

    /// Uniform single-type operator on the given qubits.
    pub fn uniform(n: usize, pauli: Pauli, qubits: impl IntoIterator<Item = usize>) -> Self {
        PauliOperator::from_support(n, qubits.into_iter().map(|q| (q, pauli)))
    }

    pub fn from_bits(x: Bits, z: Bits) -> Self {
        assert_eq!(x.len(), z.len());
        PauliOperator { x, z }
    }

    pub fn num_qubits(&self) -> usize {
        self.x.len()
    }

    pub fn x_bits(&self) -> &Bits {
        &self.x
    }

    pub fn z_bits(&self) -> &Bits {
        &self.z
    }

    #[inline]
    pub fn get(&self, q: usize) -> Option<Pauli> {
        Pauli::from_bits(self.x.get(q), self.z.get(q))
    }

    pub fn set(&mut self, q: usize, pauli: Option<Pauli>) {
        let (x, z) = pauli.map_or((false, false), Pauli::bits);
        self.x.set(q, x);
        self.z.set(q, z);
    }

    /// Multiply qubit `q` by `pauli` in place.
    #[inline]
    pub fn apply(&mut self, q: usize, pauli: Pauli) {
        let (x, z) = pauli.bits();
        if x {
            self.x.flip(q);
        }
        if z {
            self.z.flip(q);
        }
    }

    pub fn weight(&self) -> usize {
        self.x
            .words()
            .iter()
            .zip(self.z.words())
            .map(|(a, b)| (a | b).count_ones() as usize)
            .sum()
    }

    pub fn is_identity(&self) -> bool {
        !self.x.any() && !self.z.any()
    }

    /// Symplectic inner product is zero.
    pub fn commutes_with(&self, other: &PauliOperator) -> bool {
        self.x.dot(&other.z) == self.z.dot(&other.x)
    }

    /// Non-identity sites in increasing qubit order.
    pub fn support(&self) -> impl Iterator<Item = (usize, Pauli)> + '_ {
        let mut union = self.x.clone();
        for (w, z) in union.words.iter_mut().zip(self.z.words()) {
            *w |= z;
        }
        let qubits: Vec<usize> = union.ones().collect();
        qubits.into_iter().map(move |q| (q, self.get(q).expect("support qubit")))
    }

    /// True if every non-identity site carries `pauli`.
    pub fn is_only(&self, pauli: Pauli) -> bool {
        match pauli {
            Pauli::X => !self.z.any(),
            Pauli::Z => !self.x.any(),
            Pauli::Y => self.x == self.z,
        }
    }

    /// Concatenated (x | z) vector of length 2n.
    pub fn symplectic(&self) -> Bits {
        let n = self.num_qubits();
        let mut v = Bits::zeros(2 * n);
        for q in self.x.ones() {
            v.set(q, true);
        }
        for q in self.z.ones() {
            v.set(n + q, true);
        }
        v
    }

    pub fn from_symplectic(v: &Bits) -> Self {
        let n = v.len() / 2;
        let mut op = PauliOperator::identity(n);
        for i in v.ones() {
            if i < n {
                op.x.set(i, true);
            } else {
                op.z.set(i - n, true);
            }
        }
        op
    }
}

impl MulAssign<&PauliOperator> for PauliOperator {
    fn mul_assign(&mut self, rhs: &PauliOperator) {
        self.x.xor_assign(&rhs.x);
        self.z.xor_assign(&rhs.z);
    }
}

impl Mul<&PauliOperator> for &PauliOperator {
    type Output = PauliOperator;

    fn mul(self, rhs: &PauliOperator) -> PauliOperator {
        let mut out = self.clone();
        out *= rhs;
        out
    }
}

impl fmt::Debug for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliOperator(n={}, {self})", self.num_qubits())
    }
}

impl fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return write!(f, "I");
        }
        let mut first = true;
        for (q, p) in self.support() {
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{p}{q}")?;
            first = false;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PauliRepr {
    n: usize,
    support: Vec<(usize, Pauli)>,
}

impl Serialize for PauliOperator {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        PauliRepr { n: self.num_qubits(), support: self.support().collect() }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PauliOperator {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = PauliRepr::deserialize(deserializer)?;
        if let Some(&(q, _)) = repr.support.iter().find(|(q, _)| *q >= repr.n) {
            return Err(serde::de::Error::custom(format!("qubit {q} out of range for n={}", repr.n)));
        }
        Ok(PauliOperator::from_support(repr.n, repr.support))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_pauli(n: usize) -> impl Strategy<Value = PauliOperator> {
        proptest::collection::vec(0u8..4, n).prop_map(move |v| {
            PauliOperator::from_support(
                n,
                v.into_iter().enumerate().filter_map(|(q, c)| match c {
                    1 => Some((q, Pauli::X)),
                    2 => Some((q, Pauli::Y)),
                    3 => Some((q, Pauli::Z)),
                    _ => None,
                }),
            )
        })
    }

    #[test]
    fn single_qubit_products() {
        let mut op = PauliOperator::identity(1);
        op.apply(0, Pauli::X);
        op.apply(0, Pauli::Z);
        assert_eq!(op.get(0), Some(Pauli::Y));
        op.apply(0, Pauli::Y);
        assert!(op.is_identity());
    }

    #[test]
    fn commutation_of_two_qubit_operators() {
        let xx = PauliOperator::uniform(2, Pauli::X, [0, 1]);
        let zz = PauliOperator::uniform(2, Pauli::Z, [0, 1]);
        let zi = PauliOperator::uniform(2, Pauli::Z, [0]);
        assert!(xx.commutes_with(&zz));
        assert!(!xx.commutes_with(&zi));
    }

    #[test]
    fn bits_across_word_boundary() {
        let b = Bits::from_indices(130, [0, 63, 64, 129]);
        assert_eq!(b.ones().collect::<Vec<_>>(), vec![0, 63, 64, 129]);
        assert_eq!(b.count_ones(), 4);
    }

    #[test]
    fn serde_round_trip() {
        let op = PauliOperator::from_support(5, [(0, Pauli::X), (3, Pauli::Y), (4, Pauli::Z)]);
        let s = serde_json::to_string(&op).unwrap();
        assert_eq!(s, r#"{"n":5,"support":[[0,"X"],[3,"Y"],[4,"Z"]]}"#);
        let back: PauliOperator = serde_json::from_str(&s).unwrap();
        assert_eq!(back, op);
    }

    proptest! {
        #[test]
        fn multiplication_is_an_abelian_involution(a in arb_pauli(70), b in arb_pauli(70), c in arb_pauli(70)) {
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert!((&a * &a).is_identity());
            prop_assert_eq!(a.weight(), a.support().count());
        }

        #[test]
        fn symplectic_round_trip(a in arb_pauli(33)) {
            prop_assert_eq!(PauliOperator::from_symplectic(&a.symplectic()), a);
        }
    }
}
