//! Dense linear algebra over GF(2).

use crate::pauli::Bits;

/// Incrementally built row-echelon basis of a subspace of GF(2)^len.
#[derive(Debug, Clone)]
pub struct EchelonBasis {
    len: usize,
    rows: Vec<Bits>,
    pivots: Vec<usize>,
}

impl EchelonBasis {
    pub fn new(len: usize) -> Self {
        EchelonBasis { len, rows: Vec::new(), pivots: Vec::new() }
    }

    pub fn from_rows<'a>(len: usize, rows: impl IntoIterator<Item = &'a Bits>) -> Self {
        let mut basis = EchelonBasis::new(len);
        for r in rows {
            basis.insert(r.clone());
        }
        basis
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Reduce `v` against the basis.
    pub fn reduce(&self, mut v: Bits) -> Bits {
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if v.get(p) {
                v.xor_assign(row);
            }
        }
        v
    }

    pub fn contains(&self, v: &Bits) -> bool {
        !self.reduce(v.clone()).any()
    }

    /// Insert `v`; returns false if it was already in the span.
    pub fn insert(&mut self, v: Bits) -> bool {
        assert_eq!(v.len(), self.len);
        let r = self.reduce(v);
        let first = r.ones().next();
        match first {
            None => false,
            Some(p) => {
                self.rows.push(r);
                self.pivots.push(p);
                true
            }
        }
    }
}

pub fn rank(rows: &[Bits]) -> usize {
    match rows.first() {
        None => 0,
        Some(r) => EchelonBasis::from_rows(r.len(), rows).rank(),
    }
}

/// Basis of { v : row · v = 0 for every row }.
pub fn kernel(rows: &[Bits], cols: usize) -> Vec<Bits> {
    // Reduced row echelon form.
    let mut m: Vec<Bits> = rows.to_vec();
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(found) = (r..m.len()).find(|&i| m[i].get(c)) else {
            continue;
        };
        m.swap(r, found);
        let pivot = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i != r && row.get(c) {
                row.xor_assign(&pivot);
            }
        }
        pivot_cols.push(c);
        r += 1;
        if r == m.len() {
            break;
        }
    }
    let mut is_pivot = vec![false; cols];
    for &c in &pivot_cols {
        is_pivot[c] = true;
    }
    (0..cols)
        .filter(|&c| !is_pivot[c])
        .map(|free| {
            let mut v = Bits::zeros(cols);
            v.set(free, true);
            for (row, &pc) in m.iter().zip(&pivot_cols) {
                if row.get(free) {
                    v.set(pc, true);
                }
            }
            v
        })
        .collect()
}

/// Precomputed solver for `rows · v = rhs`.
#[derive(Debug, Clone)]
pub struct LinearSolver {
    cols: usize,
    rows: Vec<Bits>,
    /// Fully reduced echelon rows with the combination of original equations each came from.
    reduced: Vec<(Bits, Bits, usize)>,
}

impl LinearSolver {
    pub fn new(rows: &[Bits], cols: usize) -> Self {
        let m = rows.len();
        let mut reduced: Vec<(Bits, Bits, usize)> = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            let mut v = row.clone();
            let mut combo = Bits::zeros(m);
            combo.set(i, true);
            for (rrow, rcombo, p) in &reduced {
                if v.get(*p) {
                    v.xor_assign(rrow);
                    combo.xor_assign(rcombo);
                }
            }
            let first = v.ones().next();
            if let Some(p) = first {
                for (rrow, rcombo, _) in reduced.iter_mut() {
                    if rrow.get(p) {
                        rrow.xor_assign(&v);
                        rcombo.xor_assign(&combo);
                    }
                }
                reduced.push((v, combo, p));
            }
        }
        LinearSolver { cols, rows: rows.to_vec(), reduced }
    }

    /// Some solution of `rows · v = rhs`, or `None` if inconsistent.
    pub fn solve(&self, rhs: &Bits) -> Option<Bits> {
        let mut v = Bits::zeros(self.cols);
        for (_, combo, p) in &self.reduced {
            if combo.dot(rhs) {
                v.set(*p, true);
            }
        }
        self.rows.iter().enumerate().all(|(i, r)| r.dot(&v) == rhs.get(i)).then_some(v)
    }
}

/// Solve `rows · v = rhs`.
pub fn solve(rows: &[Bits], cols: usize, rhs: &Bits) -> Option<Bits> {
    LinearSolver::new(rows, cols).solve(rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(s: &str) -> Bits {
        Bits::from_indices(s.len(), s.chars().enumerate().filter(|(_, c)| *c == '1').map(|(i, _)| i))
    }

    #[test]
    fn rank_of_dependent_rows() {
        let rows = vec![b("1100"), b("0110"), b("1010")];
        assert_eq!(rank(&rows), 2);
    }

    #[test]
    fn kernel_vectors_are_orthogonal_to_rows() {
        let rows = vec![b("11000"), b("01100"), b("00011")];
        let k = kernel(&rows, 5);
        assert_eq!(k.len(), 5 - rank(&rows));
        for v in &k {
            for r in &rows {
                assert!(!r.dot(v));
            }
        }
    }

    #[test]
    fn solve_consistent_and_inconsistent() {
        let rows = vec![b("110"), b("011"), b("101")];
        let v = solve(&rows, 3, &b("110")).unwrap();
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.dot(&v), b("110").get(i));
        }
        // Sum of all rows is zero, so rhs must have even parity.
        assert!(solve(&rows, 3, &b("100")).is_none());
    }
}
