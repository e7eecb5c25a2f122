//! Shortest-path weights between faces (and the open boundary) on the
//! anisotropic decoding graph.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::code::{LatticeGeometry, StabilizerCode};
use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliOperator};

use super::WeightParams;

/// One single-qubit error seen as an edge between the faces it flips.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphEdge {
    pub a: usize,
    /// Second endpoint; `boundary()` for a dangling qubit.
    pub b: usize,
    pub qubit: usize,
    pub pauli: Pauli,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapItem {
    dist: f64,
    node: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All-pairs lookup table of least string weights between faces, plus the
/// boundary node (index `num_faces`) on open lattices.
#[derive(Debug, Clone)]
pub struct DistanceTable {
    nodes: usize,
    has_boundary: bool,
    edges: Vec<GraphEdge>,
    dist: Vec<f64>,
    /// Edge entering each node on the shortest-path tree of each source.
    pred: Vec<u32>,
    /// Connected component of each node over finite-weight edges.
    component: Vec<usize>,
}

const NO_PRED: u32 = u32::MAX;

impl DistanceTable {
    pub fn new(code: &StabilizerCode, params: &WeightParams) -> Result<Self> {
        let nf = code.num_faces();
        let boundary = nf;
        let mut edges = Vec::new();
        let mut has_boundary = false;
        let (hr, lr) = params.edge_paulis()?;
        for q in 0..code.num_qubits() {
            for (pauli, weight) in [(hr, params.w_hr), (lr, params.w_lr)] {
                if !weight.is_finite() {
                    continue;
                }
                match *code.flipped_faces(q, pauli) {
                    [a, b] => edges.push(GraphEdge { a, b, qubit: q, pauli, weight }),
                    [a] => {
                        has_boundary = true;
                        edges.push(GraphEdge { a, b: boundary, qubit: q, pauli, weight });
                    }
                    [] => {}
                    ref more => {
                        return Err(Error::Unsupported(format!(
                            "qubit {q} {pauli} error flips {} faces; not a graph edge",
                            more.len()
                        )))
                    }
                }
            }
        }
        let nodes = nf + 1;
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes];
        for (i, e) in edges.iter().enumerate() {
            adj[e.a].push(i);
            adj[e.b].push(i);
        }
        let mut dist = vec![f64::INFINITY; nodes * nodes];
        let mut pred = vec![NO_PRED; nodes * nodes];
        let mut heap = BinaryHeap::new();
        for s in 0..nodes {
            let row = s * nodes;
            dist[row + s] = 0.0;
            heap.push(HeapItem { dist: 0.0, node: s });
            while let Some(HeapItem { dist: d, node: u }) = heap.pop() {
                if d > dist[row + u] {
                    continue;
                }
                for &ei in &adj[u] {
                    let e = &edges[ei];
                    let v = if e.a == u { e.b } else { e.a };
                    let nd = d + e.weight;
                    if nd < dist[row + v] {
                        dist[row + v] = nd;
                        pred[row + v] = ei as u32;
                        heap.push(HeapItem { dist: nd, node: v });
                    }
                }
            }
        }
        let mut component = vec![usize::MAX; nodes];
        for s in 0..nodes {
            if component[s] == usize::MAX {
                for t in 0..nodes {
                    if dist[s * nodes + t].is_finite() {
                        component[t] = s;
                    }
                }
            }
        }
        Ok(DistanceTable { nodes, has_boundary, edges, dist, pred, component })
    }

    pub fn num_faces(&self) -> usize {
        self.nodes - 1
    }

    /// Node index of the open boundary.
    pub fn boundary(&self) -> usize {
        self.nodes - 1
    }

    pub fn has_boundary(&self) -> bool {
        self.has_boundary
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    #[inline]
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        self.dist[a * self.nodes + b]
    }

    pub fn boundary_distance(&self, a: usize) -> f64 {
        self.distance(a, self.boundary())
    }

    /// Component label; faces in different components cannot be joined.
    pub fn component(&self, a: usize) -> usize {
        self.component[a]
    }

    /// Apply the least-weight string from `a` to `b` onto `op`.
    pub fn apply_path(&self, a: usize, b: usize, op: &mut PauliOperator) -> Result<()> {
        if !self.distance(a, b).is_finite() {
            return Err(Error::InconsistentSyndrome(format!("no string joins nodes {a} and {b}")));
        }
        let row = a * self.nodes;
        let mut cur = b;
        while cur != a {
            let e = &self.edges[self.pred[row + cur] as usize];
            op.apply(e.qubit, e.pauli);
            cur = if e.a == cur { e.b } else { e.a };
        }
        Ok(())
    }
}

/// Least weight between faces of a periodic lattice computed directly from
/// the separation: `a` high-rate steps along (1,1) and `b` low-rate steps
/// along (1,-1), minimised over every wrapping class.
pub fn direct_periodic_distance(geometry: LatticeGeometry, from: (usize, usize), to: (usize, usize), params: &WeightParams) -> Result<f64> {
    let LatticeGeometry::Periodic { rows, cols } = geometry else {
        return Err(Error::Unsupported("direct distance is defined for periodic lattices".into()));
    };
    let (r, c) = (rows as i64, cols as i64);
    let dr = (to.0 as i64 - from.0 as i64).rem_euclid(r);
    let dc = (to.1 as i64 - from.1 as i64).rem_euclid(c);
    // Z steps move (+1,+1); X steps move (+1,-1). Swap the roles for an X axis.
    let (w_z, w_x) = match params.axis {
        Pauli::Z => (params.w_hr, params.w_lr),
        Pauli::X => (params.w_lr, params.w_hr),
        Pauli::Y => return Err(Error::Unsupported("Y-biased weights".into())),
    };
    let g = gcd(r, c);
    let l = r / g * c;
    let mut best = f64::INFINITY;
    for mag in 0..=l {
        if w_x.is_finite() && mag as f64 * w_x > best {
            break;
        }
        if !w_x.is_finite() && mag > 0 {
            break;
        }
        for b in if mag == 0 { vec![0] } else { vec![mag, -mag] } {
            // a ≡ dr - b (mod r), a ≡ dc + b (mod c).
            if let Some(a0) = crt((dr - b).rem_euclid(r), r, (dc + b).rem_euclid(c), c) {
                let a = a0.min(l - a0);
                let w = weighted(a, w_z) + weighted(b.abs(), w_x);
                if w < best {
                    best = w;
                }
            }
        }
    }
    Ok(best)
}

fn weighted(steps: i64, w: f64) -> f64 {
    if steps == 0 { 0.0 } else { steps as f64 * w }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 { a.abs() } else { gcd(b, a % b) }
}

/// Smallest nonnegative x with x ≡ a (mod m), x ≡ b (mod n), if any.
fn crt(a: i64, m: i64, b: i64, n: i64) -> Option<i64> {
    let g = gcd(m, n);
    if (b - a) % g != 0 {
        return None;
    }
    let l = m / g * n;
    // Brute force over the m-residue class; sizes here are tiny.
    let mut x = a;
    while x < l {
        if (x - b).rem_euclid(n) == 0 {
            return Some(x);
        }
        x += m;
    }
    None
}
