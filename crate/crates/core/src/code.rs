//! XZZX surface code construction, syndromes and logical-class adjudication.
//!
//! Coordinate conventions:
//!
//! * `Periodic { rows, cols }`: qubit `(r, c)` has index `r * cols + c`; face
//!   `(r, c)` has the same index and the stabilizer `X(r,c) Z(r,c+1) Z(r+1,c) X(r+1,c+1)`
//!   with coordinates taken modulo the lattice size. A Z error on qubit `(r, c)`
//!   flips faces `(r-1, c-1)` and `(r, c)`; an X error flips `(r, c-1)` and `(r-1, c)`.
//! * `OpenRectangular { d_x, d_z }`: the square lattice rotated by 45 degrees.
//!   Qubits sit at `(u, v)` with `u + v` even, `0 <= u <= 2(d_z - 1)`,
//!   `0 <= v <= 2(d_x - 1)`; faces sit at the odd-parity points of the same box.
//!   A face carries X on its horizontal neighbours `(u±1, v)` and Z on its
//!   vertical neighbours `(u, v±1)`, truncated at the boundary. Z strings run
//!   horizontally (length `d_z`) and X strings vertically (length `d_x`).
//!   Qubits and faces are indexed row-major in `(v, u)` order.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::{self, EchelonBasis, LinearSolver};
use crate::pauli::{Bits, Pauli, PauliOperator};

/// Supported lattice geometries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LatticeGeometry {
    Periodic { rows: usize, cols: usize },
    OpenRectangular { d_x: usize, d_z: usize },
}

impl LatticeGeometry {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LatticeGeometry::Periodic { rows, cols } if rows < 2 || cols < 2 => Err(Error::InvalidGeometry(
                format!("periodic lattice needs rows, cols >= 2 (got {rows}x{cols})"),
            )),
            LatticeGeometry::OpenRectangular { d_x, d_z } if d_x < 1 || d_z < 1 => Err(Error::InvalidGeometry(
                format!("open lattice needs d_x, d_z >= 1 (got {d_x}x{d_z})"),
            )),
            _ => Ok(()),
        }
    }

    pub fn num_qubits(&self) -> usize {
        match *self {
            LatticeGeometry::Periodic { rows, cols } => rows * cols,
            LatticeGeometry::OpenRectangular { d_x, d_z } => d_x * d_z + (d_x - 1) * (d_z - 1),
        }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, LatticeGeometry::Periodic { .. })
    }

    /// Short label, e.g. `periodic-5x6` or `open-3x5`.
    pub fn label(&self) -> String {
        match *self {
            LatticeGeometry::Periodic { rows, cols } => format!("periodic-{rows}x{cols}"),
            LatticeGeometry::OpenRectangular { d_x, d_z } => format!("open-{d_x}x{d_z}"),
        }
    }

    /// The characteristic distance used when sweeping code sizes.
    pub fn size_parameter(&self) -> usize {
        match *self {
            LatticeGeometry::Periodic { rows, .. } => rows,
            LatticeGeometry::OpenRectangular { d_x, .. } => d_x,
        }
    }
}

impl fmt::Display for LatticeGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Direction of a one-dimensional symmetry of the code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymmetryDirection {
    /// Diagonals whose stabilizer product commutes with every Z-only operator.
    Z,
    /// Diagonals whose stabilizer product commutes with every X-only operator.
    X,
}

impl SymmetryDirection {
    pub fn pauli(self) -> Pauli {
        match self {
            SymmetryDirection::Z => Pauli::Z,
            SymmetryDirection::X => Pauli::X,
        }
    }
}

/// Restriction on operator support used by distance computations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Restriction {
    ZOnly,
    XOnly,
    Any,
}

/// Defect set: faces whose stabilizer anticommutes with an error.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Syndrome {
    bits: Bits,
}

impl Syndrome {
    pub fn empty(num_faces: usize) -> Self {
        Syndrome { bits: Bits::zeros(num_faces) }
    }

    pub fn from_defects(num_faces: usize, defects: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Syndrome::empty(num_faces);
        for f in defects {
            s.bits.flip(f);
        }
        s
    }

    pub fn from_bits(bits: Bits) -> Self {
        Syndrome { bits }
    }

    pub fn num_faces(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.any()
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones()
    }

    pub fn contains(&self, face: usize) -> bool {
        self.bits.get(face)
    }

    pub fn flip(&mut self, face: usize) {
        self.bits.flip(face);
    }

    pub fn defects(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    pub fn bits(&self) -> &Bits {
        &self.bits
    }

    /// Symmetric difference.
    pub fn symmetric_difference(&self, other: &Syndrome) -> Syndrome {
        let mut bits = self.bits.clone();
        bits.xor_assign(&other.bits);
        Syndrome { bits }
    }
}

impl Serialize for Syndrome {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        (self.num_faces(), self.defects().collect::<Vec<_>>()).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Syndrome {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let (n, defects): (usize, Vec<usize>) = Deserialize::deserialize(d)?;
        if defects.iter().any(|&f| f >= n) {
            return Err(serde::de::Error::custom("defect index out of range"));
        }
        Ok(Syndrome::from_defects(n, defects))
    }
}

/// Coset label in N(S)/S: anticommutation bits against `logical_x` (low `k`
/// bits) followed by `logical_z` (next `k` bits).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LogicalClass(pub u64);

impl LogicalClass {
    pub const TRIVIAL: LogicalClass = LogicalClass(0);

    pub fn is_trivial(self) -> bool {
        self.0 == 0
    }

    pub fn compose(self, other: LogicalClass) -> LogicalClass {
        LogicalClass(self.0 ^ other.0)
    }
}

impl fmt::Display for LogicalClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#b}", self.0)
    }
}

/// An ordered run of faces along one symmetry direction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagonal {
    pub index: usize,
    pub faces: Vec<usize>,
}

/// A diagonal as a 1D decoding graph: faces joined by qubits, with the lattice
/// boundary as an extra node when strings can terminate there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Chain {
    /// Node sequence; `None` is the boundary.
    pub nodes: Vec<Option<usize>>,
    /// `edges[i]` joins `nodes[i]` and `nodes[(i + 1) % len]` (cycle) or `nodes[i + 1]` (path).
    pub edges: Vec<usize>,
    pub is_cycle: bool,
}

/// A stabilizer code on a supported lattice.
#[derive(Debug, Clone)]
pub struct StabilizerCode {
    geometry: LatticeGeometry,
    n: usize,
    k: usize,
    stabilizers: Vec<PauliOperator>,
    logical_x: Vec<PauliOperator>,
    logical_z: Vec<PauliOperator>,
    qubit_coords: Vec<(i64, i64)>,
    face_coords: Vec<(i64, i64)>,
    /// Per qubit, the faces whose stabilizer acts non-trivially there, with that Pauli.
    qubit_faces: Vec<Vec<(usize, Pauli)>>,
    /// Per qubit, faces flipped by a Z (resp. X) error.
    z_flips: Vec<Vec<usize>>,
    x_flips: Vec<Vec<usize>>,
    /// Symplectic vectors of the logical representatives, X reps then Z reps.
    stabilizer_rank: usize,
}

impl StabilizerCode {
    /// Construct the XZZX code on `geometry`.
    pub fn xzzx(geometry: LatticeGeometry) -> Result<Self> {
        geometry.validate()?;
        match geometry {
            LatticeGeometry::Periodic { rows, cols } => Self::build_periodic(rows, cols),
            LatticeGeometry::OpenRectangular { d_x, d_z } => Self::build_open(d_x, d_z),
        }
    }

    fn build_periodic(rows: usize, cols: usize) -> Result<Self> {
        let n = rows * cols;
        let idx = |r: usize, c: usize| (r % rows) * cols + (c % cols);
        let mut stabilizers = Vec::with_capacity(n);
        for r in 0..rows {
            for c in 0..cols {
                stabilizers.push(PauliOperator::from_support(
                    n,
                    [
                        (idx(r, c), Pauli::X),
                        (idx(r, c + 1), Pauli::Z),
                        (idx(r + 1, c), Pauli::Z),
                        (idx(r + 1, c + 1), Pauli::X),
                    ],
                ));
            }
        }
        let coords: Vec<(i64, i64)> =
            (0..rows).flat_map(|r| (0..cols).map(move |c| (r as i64, c as i64))).collect();
        Self::assemble(
            LatticeGeometry::Periodic { rows, cols },
            n,
            stabilizers,
            coords.clone(),
            coords,
            None,
        )
    }

    fn build_open(d_x: usize, d_z: usize) -> Result<Self> {
        let umax = 2 * (d_z as i64 - 1);
        let vmax = 2 * (d_x as i64 - 1);
        let mut qubit_coords = Vec::new();
        let mut face_coords = Vec::new();
        for v in 0..=vmax {
            for u in 0..=umax {
                if (u + v) % 2 == 0 {
                    qubit_coords.push((u, v));
                } else {
                    face_coords.push((u, v));
                }
            }
        }
        let n = qubit_coords.len();
        let qubit_at = |u: i64, v: i64| -> Option<usize> {
            if u < 0 || v < 0 || u > umax || v > vmax || (u + v) % 2 != 0 {
                return None;
            }
            // Row v holds the points u with u ≡ v (mod 2).
            let per_even_row = d_z as i64;
            let per_odd_row = d_z as i64 - 1;
            let before = (v / 2) * (per_even_row + per_odd_row) + if v % 2 == 1 { per_even_row } else { 0 };
            Some((before + u / 2) as usize)
        };
        let stabilizers = face_coords
            .iter()
            .map(|&(u, v)| {
                let support = [
                    (u - 1, v, Pauli::X),
                    (u + 1, v, Pauli::X),
                    (u, v - 1, Pauli::Z),
                    (u, v + 1, Pauli::Z),
                ]
                .into_iter()
                .filter_map(|(a, b, p)| qubit_at(a, b).map(|q| (q, p)));
                PauliOperator::from_support(n, support)
            })
            .collect();
        for (i, &(u, v)) in qubit_coords.iter().enumerate() {
            debug_assert_eq!(qubit_at(u, v), Some(i));
        }
        let z_rep = PauliOperator::uniform(n, Pauli::Z, (0..=umax).step_by(2).map(|u| qubit_at(u, 0).unwrap()));
        let x_rep = PauliOperator::uniform(n, Pauli::X, (0..=vmax).step_by(2).map(|v| qubit_at(0, v).unwrap()));
        Self::assemble(
            LatticeGeometry::OpenRectangular { d_x, d_z },
            n,
            stabilizers,
            qubit_coords,
            face_coords,
            Some((vec![x_rep], vec![z_rep])),
        )
    }

    /// Build a code from explicit stabilizers on a known geometry. Logical
    /// representatives are derived by symplectic Gram-Schmidt. Used to build
    /// deliberately modified codes for negative controls.
    pub fn from_stabilizers(geometry: LatticeGeometry, stabilizers: Vec<PauliOperator>) -> Result<Self> {
        let reference = StabilizerCode::xzzx(geometry)?;
        if stabilizers.len() != reference.num_faces() {
            return Err(Error::InvalidGeometry(format!(
                "expected {} stabilizers, got {}",
                reference.num_faces(),
                stabilizers.len()
            )));
        }
        Self::assemble(
            geometry,
            reference.n,
            stabilizers,
            reference.qubit_coords.clone(),
            reference.face_coords.clone(),
            None,
        )
    }

    fn assemble(
        geometry: LatticeGeometry,
        n: usize,
        stabilizers: Vec<PauliOperator>,
        qubit_coords: Vec<(i64, i64)>,
        face_coords: Vec<(i64, i64)>,
        logicals: Option<(Vec<PauliOperator>, Vec<PauliOperator>)>,
    ) -> Result<Self> {
        for (i, a) in stabilizers.iter().enumerate() {
            if a.num_qubits() != n {
                return Err(Error::InvalidGeometry(format!("stabilizer {i} acts on wrong qubit count")));
            }
            for (j, b) in stabilizers.iter().enumerate().skip(i + 1) {
                if !a.commutes_with(b) {
                    return Err(Error::InvalidGeometry(format!("stabilizers {i} and {j} anticommute")));
                }
            }
        }
        let mut qubit_faces = vec![Vec::new(); n];
        let mut z_flips = vec![Vec::new(); n];
        let mut x_flips = vec![Vec::new(); n];
        for (f, s) in stabilizers.iter().enumerate() {
            for (q, p) in s.support() {
                qubit_faces[q].push((f, p));
                if p.anticommutes(Pauli::Z) {
                    z_flips[q].push(f);
                }
                if p.anticommutes(Pauli::X) {
                    x_flips[q].push(f);
                }
            }
        }
        let stab_vectors: Vec<Bits> = stabilizers.iter().map(PauliOperator::symplectic).collect();
        let stabilizer_rank = gf2::rank(&stab_vectors);
        let k = n - stabilizer_rank;
        let (logical_x, logical_z) = match logicals {
            Some(l) => l,
            None => symplectic_logicals(n, &stabilizers),
        };
        if logical_x.len() != k || logical_z.len() != k {
            return Err(Error::InvalidGeometry(format!(
                "found {} logical pairs but k = {k}",
                logical_x.len().min(logical_z.len())
            )));
        }
        if k > 32 {
            return Err(Error::SizeGuard(format!("k = {k} exceeds 32 logical qubits")));
        }
        let code = StabilizerCode {
            geometry,
            n,
            k,
            stabilizers,
            logical_x,
            logical_z,
            qubit_coords,
            face_coords,
            qubit_faces,
            z_flips,
            x_flips,
            stabilizer_rank,
        };
        code.check_logicals()?;
        Ok(code)
    }

    fn check_logicals(&self) -> Result<()> {
        for (i, lx) in self.logical_x.iter().enumerate() {
            for (j, lz) in self.logical_z.iter().enumerate() {
                if lx.commutes_with(lz) == (i == j) {
                    return Err(Error::InvalidGeometry(format!("logical pair ({i}, {j}) has wrong commutation")));
                }
            }
        }
        for l in self.logical_x.iter().chain(&self.logical_z) {
            if !self.syndrome(l).is_empty() {
                return Err(Error::InvalidGeometry("logical representative has a syndrome".into()));
            }
        }
        Ok(())
    }

    pub fn geometry(&self) -> LatticeGeometry {
        self.geometry
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn num_faces(&self) -> usize {
        self.stabilizers.len()
    }

    pub fn num_logical(&self) -> usize {
        self.k
    }

    pub fn stabilizer_rank(&self) -> usize {
        self.stabilizer_rank
    }

    pub fn stabilizers(&self) -> &[PauliOperator] {
        &self.stabilizers
    }

    pub fn logical_x(&self) -> &[PauliOperator] {
        &self.logical_x
    }

    pub fn logical_z(&self) -> &[PauliOperator] {
        &self.logical_z
    }

    pub fn qubit_coords(&self) -> &[(i64, i64)] {
        &self.qubit_coords
    }

    pub fn face_coords(&self) -> &[(i64, i64)] {
        &self.face_coords
    }

    /// Faces flipped by a single-qubit `pauli` on qubit `q`.
    pub fn flipped_faces(&self, q: usize, pauli: Pauli) -> &[usize] {
        match pauli {
            Pauli::Z => &self.z_flips[q],
            Pauli::X => &self.x_flips[q],
            Pauli::Y => unreachable!("use flip_syndrome for Y"),
        }
    }

    /// Toggle the defects produced by `pauli` on qubit `q`.
    #[inline]
    pub fn flip_syndrome(&self, syndrome: &mut Syndrome, q: usize, pauli: Pauli) {
        for &(f, p) in &self.qubit_faces[q] {
            if p != pauli {
                syndrome.flip(f);
            }
        }
    }

    /// Faces anticommuting with `error`.
    pub fn syndrome(&self, error: &PauliOperator) -> Syndrome {
        debug_assert_eq!(error.num_qubits(), self.n);
        let mut s = Syndrome::empty(self.num_faces());
        for (q, p) in error.support() {
            self.flip_syndrome(&mut s, q, p);
        }
        s
    }

    /// Coset label of `op` ignoring whether it commutes with the stabilizers.
    pub fn logical_label(&self, op: &PauliOperator) -> LogicalClass {
        let mut label = 0u64;
        for (i, l) in self.logical_x.iter().enumerate() {
            if !op.commutes_with(l) {
                label |= 1 << i;
            }
        }
        for (i, l) in self.logical_z.iter().enumerate() {
            if !op.commutes_with(l) {
                label |= 1 << (self.k + i);
            }
        }
        LogicalClass(label)
    }

    /// Coset label of a syndrome-free residual.
    pub fn logical_class(&self, residual: &PauliOperator) -> Result<LogicalClass> {
        let s = self.syndrome(residual);
        if !s.is_empty() {
            return Err(Error::NonEmptySyndrome(s.len()));
        }
        Ok(self.logical_label(residual))
    }

    /// Representative operator of a logical class.
    pub fn class_representative(&self, class: LogicalClass) -> PauliOperator {
        let mut op = PauliOperator::identity(self.n);
        for i in 0..self.k {
            // Anticommuting with X_i means containing Z_i.
            if class.0 >> i & 1 == 1 {
                op *= &self.logical_z[i];
            }
            if class.0 >> (self.k + i) & 1 == 1 {
                op *= &self.logical_x[i];
            }
        }
        op
    }

    pub fn num_classes(&self) -> usize {
        1 << (2 * self.k)
    }

    /// True iff `op` lies in the stabilizer group.
    pub fn is_stabilizer(&self, op: &PauliOperator) -> bool {
        self.syndrome(op).is_empty() && self.logical_label(op).is_trivial()
    }


    /// Solver mapping a syndrome to some Pauli that produces it.
    pub fn pure_error_solver(&self) -> PureErrorSolver {
        PureErrorSolver::new(self)
    }

    /// Chains of faces along `direction`, each face in exactly one chain.
    pub(crate) fn chains(&self, direction: SymmetryDirection) -> Vec<Chain> {
        let flips = match direction {
            SymmetryDirection::Z => &self.z_flips,
            SymmetryDirection::X => &self.x_flips,
        };
        let nf = self.num_faces();
        // Incident qubits per face and per boundary; each face has degree <= 2 here.
        let mut incident: Vec<Vec<usize>> = vec![Vec::new(); nf];
        let mut dangling: Vec<Vec<usize>> = vec![Vec::new(); nf];
        for (q, fs) in flips.iter().enumerate() {
            match fs.as_slice() {
                [a, b] => {
                    incident[*a].push(q);
                    incident[*b].push(q);
                }
                [a] => dangling[*a].push(q),
                _ => {}
            }
        }
        let other = |q: usize, f: usize| -> usize {
            let fs = &flips[q];
            if fs[0] == f { fs[1] } else { fs[0] }
        };
        let mut seen = vec![false; nf];
        let mut chains = Vec::new();
        // Paths first, started from an endpoint, then cycles.
        let degree = |f: usize| incident[f].len() + dangling[f].len();
        let mut starts: Vec<usize> = (0..nf).filter(|&f| incident[f].len() < 2).collect();
        starts.extend(0..nf);
        for start in starts {
            if seen[start] {
                continue;
            }
            let mut faces = vec![start];
            let mut links = Vec::new();
            seen[start] = true;
            let mut prev_q: Option<usize> = None;
            let mut cur = start;
            let mut closed = false;
            loop {
                let next = incident[cur].iter().copied().find(|&q| Some(q) != prev_q);
                match next {
                    None => break,
                    Some(q) => {
                        let nxt = other(q, cur);
                        if nxt == start {
                            links.push(q);
                            closed = true;
                            break;
                        }
                        if seen[nxt] {
                            break;
                        }
                        seen[nxt] = true;
                        links.push(q);
                        faces.push(nxt);
                        prev_q = Some(q);
                        cur = nxt;
                    }
                }
            }
            debug_assert!(faces.iter().all(|&f| degree(f) <= 2 || incident[f].len() <= 2));
            let head = &dangling[faces[0]];
            let tail = &dangling[*faces.last().unwrap()];
            let mut nodes: Vec<Option<usize>> = faces.iter().map(|&f| Some(f)).collect();
            let mut edges = links;
            let is_cycle;
            if closed {
                is_cycle = true;
            } else if faces.len() == 1 && head.len() >= 2 {
                // Single face with two boundary qubits: boundary - f - boundary.
                nodes.insert(0, None);
                edges = vec![head[0], head[1]];
                is_cycle = true;
            } else {
                match (head.first(), if faces.len() > 1 { tail.first() } else { None }) {
                    (Some(&h), Some(&t)) => {
                        nodes.insert(0, None);
                        edges.insert(0, h);
                        edges.push(t);
                        is_cycle = true;
                    }
                    (Some(&h), None) => {
                        nodes.insert(0, None);
                        edges.insert(0, h);
                        is_cycle = false;
                    }
                    (None, Some(&t)) => {
                        nodes.push(None);
                        edges.push(t);
                        is_cycle = false;
                    }
                    (None, None) => is_cycle = false,
                }
            }
            chains.push(Chain { nodes, edges, is_cycle });
        }
        chains
    }

    /// Diagonals of faces along `direction`.
    pub fn diagonals(&self, direction: SymmetryDirection) -> Vec<Diagonal> {
        self.chains(direction)
            .into_iter()
            .enumerate()
            .map(|(index, chain)| Diagonal { index, faces: chain.nodes.into_iter().flatten().collect() })
            .collect()
    }

    /// Exact minimum weight of a nontrivial logical operator under `restrict`.
    ///
    /// Enumerates the commutant of the stabilizers restricted to the chosen
    /// support type; the dimension of that space is capped at 30 for the
    /// single-type restrictions and 26 for unrestricted search.
    pub fn min_logical_weight(&self, restrict: Restriction) -> Result<usize> {
        let n = self.n;
        let (basis, cap): (Vec<Bits>, usize) = match restrict {
            Restriction::ZOnly | Restriction::XOnly => {
                // Z-only vector z commutes with s iff s.x · z = 0 (and symmetrically for X).
                let rows: Vec<Bits> = self
                    .stabilizers
                    .iter()
                    .map(|s| if restrict == Restriction::ZOnly { s.x_bits().clone() } else { s.z_bits().clone() })
                    .collect();
                let kernel = gf2::kernel(&rows, n);
                let embedded = kernel
                    .into_iter()
                    .map(|v| {
                        let op = if restrict == Restriction::ZOnly {
                            PauliOperator::from_bits(Bits::zeros(n), v)
                        } else {
                            PauliOperator::from_bits(v, Bits::zeros(n))
                        };
                        op.symplectic()
                    })
                    .collect();
                (embedded, 30)
            }
            Restriction::Any => {
                let twisted: Vec<Bits> =
                    self.stabilizers.iter().map(|s| PauliOperator::from_bits(s.z_bits().clone(), s.x_bits().clone()).symplectic()).collect();
                (gf2::kernel(&twisted, 2 * n), 26)
            }
        };
        if basis.len() > cap {
            return Err(Error::SizeGuard(format!(
                "commutant dimension {} exceeds exhaustive limit {cap}",
                basis.len()
            )));
        }
        let labels: Vec<u64> = basis.iter().map(|v| self.symplectic_label(v)).collect();
        let mut cur = Bits::zeros(2 * n);
        let mut label = 0u64;
        let mut best = usize::MAX;
        for i in 1u64..(1u64 << basis.len()) {
            let bit = i.trailing_zeros() as usize;
            cur.xor_assign(&basis[bit]);
            label ^= labels[bit];
            if label != 0 {
                let w = symplectic_weight(&cur, n);
                best = best.min(w);
            }
        }
        if best == usize::MAX {
            return Err(Error::InvalidArgument(format!("no nontrivial logical operator with restriction {restrict:?}")));
        }
        Ok(best)
    }

    /// Distinct nontrivial logical classes reachable by operators of the restricted type.
    pub fn restricted_logical_classes(&self, restrict: Restriction) -> Result<BTreeSet<LogicalClass>> {
        let n = self.n;
        let rows: Vec<Bits> = match restrict {
            Restriction::ZOnly => self.stabilizers.iter().map(|s| s.x_bits().clone()).collect(),
            Restriction::XOnly => self.stabilizers.iter().map(|s| s.z_bits().clone()).collect(),
            Restriction::Any => return Ok((1..self.num_classes() as u64).map(LogicalClass).collect()),
        };
        let kernel = gf2::kernel(&rows, n);
        if kernel.len() > 30 {
            return Err(Error::SizeGuard(format!("commutant dimension {} exceeds 30", kernel.len())));
        }
        let labels: Vec<u64> = kernel
            .iter()
            .map(|v| {
                let op = if restrict == Restriction::ZOnly {
                    PauliOperator::from_bits(Bits::zeros(n), v.clone())
                } else {
                    PauliOperator::from_bits(v.clone(), Bits::zeros(n))
                };
                self.logical_label(&op).0
            })
            .collect();
        // Labels form a group; its span is what we want.
        let mut span = BTreeSet::from([0u64]);
        for l in labels {
            let extra: Vec<u64> = span.iter().map(|s| s ^ l).collect();
            span.extend(extra);
        }
        span.remove(&0);
        Ok(span.into_iter().map(LogicalClass).collect())
    }

    fn symplectic_label(&self, v: &Bits) -> u64 {
        let op = PauliOperator::from_symplectic(v);
        self.logical_label(&op).0
    }

    /// JSON-serializable description of the code.
    pub fn describe(&self) -> CodeDescription {
        CodeDescription {
            n: self.n,
            k: self.k,
            geometry: self.geometry,
            qubit_coordinates: self.qubit_coords.clone(),
            face_coordinates: self.face_coords.clone(),
            stabilizers: self.stabilizers.clone(),
            logical_x: self.logical_x.clone(),
            logical_z: self.logical_z.clone(),
        }
    }
}

fn symplectic_weight(v: &Bits, n: usize) -> usize {
    (0..n).filter(|&q| v.get(q) || v.get(n + q)).count()
}

/// Logical representatives by symplectic Gram-Schmidt on N(S)/S.
fn symplectic_logicals(n: usize, stabilizers: &[PauliOperator]) -> (Vec<PauliOperator>, Vec<PauliOperator>) {
    let twisted: Vec<Bits> = stabilizers
        .iter()
        .map(|s| PauliOperator::from_bits(s.z_bits().clone(), s.x_bits().clone()).symplectic())
        .collect();
    let normalizer = gf2::kernel(&twisted, 2 * n);
    let stab_vectors: Vec<Bits> = stabilizers.iter().map(PauliOperator::symplectic).collect();
    let mut basis = EchelonBasis::from_rows(2 * n, &stab_vectors);
    let mut complement: Vec<PauliOperator> = Vec::new();
    for v in normalizer {
        if basis.insert(v.clone()) {
            complement.push(PauliOperator::from_symplectic(&v));
        }
    }
    // Prefer single-type operators as the first member of a pair.
    complement.sort_by_key(|op| (!(op.is_only(Pauli::Z) || op.is_only(Pauli::X)), op.weight()));
    let mut xs = Vec::new();
    let mut zs = Vec::new();
    while let Some(u) = (!complement.is_empty()).then(|| complement.remove(0)) {
        let Some(pos) = complement.iter().position(|w| !u.commutes_with(w)) else {
            // Degenerate: cannot happen for a commuting stabilizer set.
            continue;
        };
        let w = complement.remove(pos);
        for c in complement.iter_mut() {
            let mut adj = PauliOperator::identity(n);
            if !c.commutes_with(&w) {
                adj *= &u;
            }
            if !c.commutes_with(&u) {
                adj *= &w;
            }
            *c *= &adj;
        }
        // Name the Z-only member (if any) the logical Z.
        let (lx, lz) = if w.is_only(Pauli::Z) && !u.is_only(Pauli::Z) { (u, w) } else { (w, u) };
        xs.push(lx);
        zs.push(lz);
    }
    let group_bits = gf2::rank(&stab_vectors);
    if group_bits <= 16 {
        let gens: Vec<PauliOperator> = independent_generators(stabilizers);
        for op in xs.iter_mut().chain(zs.iter_mut()) {
            *op = canonical_member(op, &gens);
        }
    }
    (xs, zs)
}

pub(crate) fn independent_generators(stabilizers: &[PauliOperator]) -> Vec<PauliOperator> {
    let n2 = stabilizers.first().map_or(0, |s| 2 * s.num_qubits());
    let mut basis = EchelonBasis::new(n2);
    stabilizers.iter().filter(|s| basis.insert(s.symplectic())).cloned().collect()
}

/// Lowest (weight, support) member of `op` times the stabilizer group.
fn canonical_member(op: &PauliOperator, gens: &[PauliOperator]) -> PauliOperator {
    let key = |p: &PauliOperator| (p.weight(), p.support().collect::<Vec<_>>());
    let mut cur = op.clone();
    let mut best = op.clone();
    let mut best_key = key(&best);
    for i in 1u64..(1u64 << gens.len()) {
        cur *= &gens[i.trailing_zeros() as usize];
        let kk = key(&cur);
        if kk < best_key {
            best_key = kk;
            best = cur.clone();
        }
    }
    best
}

/// Finds a Pauli operator producing a given syndrome.
#[derive(Debug, Clone)]
pub struct PureErrorSolver {
    n: usize,
    solver: LinearSolver,
}

impl PureErrorSolver {
    fn new(code: &StabilizerCode) -> Self {
        let twisted: Vec<Bits> = code
            .stabilizers
            .iter()
            .map(|s| PauliOperator::from_bits(s.z_bits().clone(), s.x_bits().clone()).symplectic())
            .collect();
        PureErrorSolver { n: code.n, solver: LinearSolver::new(&twisted, 2 * code.n) }
    }

    pub fn solve(&self, syndrome: &Syndrome) -> Option<PauliOperator> {
        self.solver.solve(syndrome.bits()).map(|v| {
            debug_assert_eq!(v.len(), 2 * self.n);
            PauliOperator::from_symplectic(&v)
        })
    }
}

/// Serializable code description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeDescription {
    pub n: usize,
    pub k: usize,
    pub geometry: LatticeGeometry,
    pub qubit_coordinates: Vec<(i64, i64)>,
    pub face_coordinates: Vec<(i64, i64)>,
    pub stabilizers: Vec<PauliOperator>,
    pub logical_x: Vec<PauliOperator>,
    pub logical_z: Vec<PauliOperator>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn periodic(rows: usize, cols: usize) -> StabilizerCode {
        StabilizerCode::xzzx(LatticeGeometry::Periodic { rows, cols }).unwrap()
    }

    fn open(d_x: usize, d_z: usize) -> StabilizerCode {
        StabilizerCode::xzzx(LatticeGeometry::OpenRectangular { d_x, d_z }).unwrap()
    }

    #[test]
    fn rejects_small_periodic_lattices() {
        assert!(StabilizerCode::xzzx(LatticeGeometry::Periodic { rows: 1, cols: 3 }).is_err());
        assert!(StabilizerCode::xzzx(LatticeGeometry::OpenRectangular { d_x: 0, d_z: 3 }).is_err());
    }

    #[test]
    fn periodic_2x3_counts_and_z_distance() {
        let code = periodic(2, 3);
        assert_eq!(code.num_qubits(), 6);
        assert_eq!(code.num_faces(), 6);
        assert_eq!(code.min_logical_weight(Restriction::ZOnly).unwrap(), 6);
    }

    #[test]
    fn coprime_torus_has_a_single_z_only_logical_class() {
        for d in 2..=3 {
            let code = periodic(d, d + 1);
            assert_eq!(code.restricted_logical_classes(Restriction::ZOnly).unwrap().len(), 1);
            assert_eq!(code.min_logical_weight(Restriction::ZOnly).unwrap(), d * (d + 1));
        }
    }

    #[test]
    fn open_layout_distances() {
        let code = open(3, 5);
        assert_eq!(code.num_logical(), 1);
        assert_eq!(code.min_logical_weight(Restriction::ZOnly).unwrap(), 5);
        assert_eq!(code.min_logical_weight(Restriction::XOnly).unwrap(), 3);
        let rep = open(1, 6);
        assert_eq!(rep.num_qubits(), 6);
        assert_eq!(rep.min_logical_weight(Restriction::ZOnly).unwrap(), 6);
        assert_eq!(rep.min_logical_weight(Restriction::XOnly).unwrap(), 1);
    }

    #[test]
    fn open_boundary_weights() {
        let code = open(3, 3);
        let mut weights: Vec<usize> = code.stabilizers().iter().map(PauliOperator::weight).collect();
        weights.sort();
        weights.dedup();
        assert_eq!(weights, vec![3, 4]);
        let rep = open(1, 4);
        assert!(rep.stabilizers().iter().all(|s| s.weight() == 2 && s.is_only(Pauli::X)));
    }

    #[test]
    fn single_z_and_y_defects_on_torus() {
        let code = periodic(5, 5);
        // Qubit (2, 2).
        let q = 2 * 5 + 2;
        let z = PauliOperator::from_support(25, [(q, Pauli::Z)]);
        let s: Vec<usize> = code.syndrome(&z).defects().collect();
        // Faces (1,1) and (2,2): adjacent along the Z diagonal.
        assert_eq!(s, vec![6, 12]);
        let y = PauliOperator::from_support(25, [(q, Pauli::Y)]);
        assert_eq!(code.syndrome(&y).len(), 4);
        assert!(code.syndrome(&PauliOperator::identity(25)).is_empty());
    }

    #[test]
    fn stabilizer_and_logical_labels() {
        let code = periodic(3, 4);
        for s in code.stabilizers() {
            assert_eq!(code.logical_class(s).unwrap(), LogicalClass::TRIVIAL);
        }
        for (i, lz) in code.logical_z().iter().enumerate() {
            assert_eq!(code.logical_class(lz).unwrap(), LogicalClass(1 << i));
        }
        let single = PauliOperator::from_support(12, [(0, Pauli::X)]);
        assert!(matches!(code.logical_class(&single), Err(Error::NonEmptySyndrome(_))));
    }

    #[test]
    fn every_syndrome_free_pauli_on_2x3_has_one_label() {
        let code = periodic(2, 3);
        let n = code.num_qubits();
        let mut counts = vec![0usize; code.num_classes()];
        for e in 0..4usize.pow(n as u32) {
            let op = PauliOperator::from_support(
                n,
                (0..n).filter_map(|q| match (e >> (2 * q)) & 3 {
                    1 => Some((q, Pauli::X)),
                    2 => Some((q, Pauli::Y)),
                    3 => Some((q, Pauli::Z)),
                    _ => None,
                }),
            );
            if code.syndrome(&op).is_empty() {
                counts[code.logical_class(&op).unwrap().0 as usize] += 1;
            }
        }
        // Each coset of the stabilizer group has the same size.
        let group = 1usize << code.stabilizer_rank();
        assert!(counts.iter().all(|&c| c == group), "{counts:?}");
    }

    #[test]
    fn k_matches_logical_pairs() {
        for g in [
            LatticeGeometry::Periodic { rows: 2, cols: 2 },
            LatticeGeometry::Periodic { rows: 4, cols: 4 },
            LatticeGeometry::Periodic { rows: 4, cols: 5 },
            LatticeGeometry::Periodic { rows: 4, cols: 6 },
            LatticeGeometry::OpenRectangular { d_x: 2, d_z: 4 },
        ] {
            let code = StabilizerCode::xzzx(g).unwrap();
            assert_eq!(code.num_logical(), code.num_qubits() - code.stabilizer_rank());
            assert_eq!(code.logical_x().len(), code.num_logical());
        }
    }

    #[test]
    fn diagonals_partition_faces() {
        for code in [periodic(4, 5), periodic(4, 4), open(3, 5), open(1, 4)] {
            for dir in [SymmetryDirection::Z, SymmetryDirection::X] {
                let diags = code.diagonals(dir);
                let mut all: Vec<usize> = diags.iter().flat_map(|d| d.faces.clone()).collect();
                all.sort();
                assert_eq!(all, (0..code.num_faces()).collect::<Vec<_>>());
            }
        }
        assert_eq!(periodic(4, 5).diagonals(SymmetryDirection::Z).len(), 1);
        assert_eq!(periodic(4, 4).diagonals(SymmetryDirection::Z).len(), 4);
    }

    #[test]
    fn diagonal_products_are_symmetries_on_torus() {
        let code = periodic(4, 6);
        for dir in [SymmetryDirection::Z, SymmetryDirection::X] {
            for d in code.diagonals(dir) {
                let mut prod = PauliOperator::identity(code.num_qubits());
                for &f in &d.faces {
                    prod *= &code.stabilizers()[f];
                }
                assert!(prod.is_only(match dir {
                    SymmetryDirection::Z => Pauli::X,
                    SymmetryDirection::X => Pauli::Z,
                }));
            }
        }
    }

    #[test]
    fn describe_round_trips_through_json() {
        let code = periodic(2, 3);
        let desc = code.describe();
        let json = serde_json::to_string(&desc).unwrap();
        let back: CodeDescription = serde_json::from_str(&json).unwrap();
        assert_eq!(back, desc);
    }

    #[test]
    fn pure_error_reproduces_syndrome() {
        let code = open(3, 3);
        let solver = code.pure_error_solver();
        let s = Syndrome::from_defects(code.num_faces(), [0, 5]);
        let e = solver.solve(&s).unwrap();
        assert_eq!(code.syndrome(&e), s);
    }

    proptest! {
        #[test]
        fn syndrome_is_linear(a in proptest::collection::vec(0u8..4, 20), b in proptest::collection::vec(0u8..4, 20)) {
            let code = periodic(4, 5);
            let mk = |v: &[u8]| PauliOperator::from_support(20, v.iter().enumerate().filter_map(|(q, &c)| match c {
                1 => Some((q, Pauli::X)), 2 => Some((q, Pauli::Y)), 3 => Some((q, Pauli::Z)), _ => None,
            }));
            let (ea, eb) = (mk(&a), mk(&b));
            prop_assert_eq!(code.syndrome(&(&ea * &eb)), code.syndrome(&ea).symmetric_difference(&code.syndrome(&eb)));
        }
    }
}
