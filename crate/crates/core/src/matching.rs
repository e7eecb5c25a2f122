//! Exact minimum-weight perfect matching (primal-dual blossom algorithm).
//!
//! The solver works on an edge list so callers can pass either a complete
//! graph ([`WeightedGraph`]) or a pruned one. Minimum-weight perfect matching
//! is reduced to maximum-weight maximum-cardinality matching on `C - w`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

/// Complete graph with symmetric nonnegative weights, stored as a triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    weights: Vec<f64>,
}

impl WeightedGraph {
    pub fn new(n: usize) -> Self {
        WeightedGraph { n, weights: vec![0.0; n * n.saturating_sub(1) / 2] }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut g = WeightedGraph::new(n);
        for j in 1..n {
            for i in 0..j {
                g.set(i, j, f(i, j))?;
            }
        }
        Ok(g)
    }

    fn index(i: usize, j: usize) -> usize {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        b * (b - 1) / 2 + a
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn set(&mut self, i: usize, j: usize, w: f64) -> Result<()> {
        if i == j || i >= self.n || j >= self.n {
            return Err(Error::InvalidGraph(format!("bad edge ({i}, {j}) for {} vertices", self.n)));
        }
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::InvalidGraph(format!("weight {w} on ({i}, {j}) must be finite and nonnegative")));
        }
        self.weights[Self::index(i, j)] = w;
        Ok(())
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[Self::index(i, j)]
    }

    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.weights.len());
        for j in 1..self.n {
            for i in 0..j {
                out.push((i, j, self.weight(i, j)));
            }
        }
        out
    }

    /// JSON debug dump (vertex list and full weight matrix).
    pub fn dump(&self) -> GraphDump {
        GraphDump {
            vertices: (0..self.n).collect(),
            weights: (0..self.n)
                .map(|i| (0..self.n).map(|j| if i == j { 0.0 } else { self.weight(i, j) }).collect())
                .collect(),
        }
    }

    pub fn from_dump(dump: &GraphDump) -> Result<Self> {
        let n = dump.vertices.len();
        if dump.weights.len() != n || dump.weights.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidGraph("weight matrix shape does not match vertex list".into()));
        }
        WeightedGraph::from_fn(n, |i, j| dump.weights[i][j])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDump {
    pub vertices: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
}

/// A perfect matching as sorted vertex pairs `(i, j)` with `i < j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Matching {
    pub pairs: Vec<(usize, usize)>,
}

impl Matching {
    fn from_mate(mate: &[usize]) -> Self {
        let mut pairs: Vec<(usize, usize)> =
            mate.iter().enumerate().filter(|&(i, &j)| j != NONE && i < j).map(|(i, &j)| (i, j)).collect();
        pairs.sort_unstable();
        Matching { pairs }
    }

    pub fn total_weight(&self, g: &WeightedGraph) -> f64 {
        self.pairs.iter().map(|&(i, j)| g.weight(i, j)).sum()
    }

    pub fn partner(&self, v: usize) -> Option<usize> {
        self.pairs.iter().find_map(|&(i, j)| {
            if i == v {
                Some(j)
            } else if j == v {
                Some(i)
            } else {
                None
            }
        })
    }
}

/// Minimum-weight perfect matching of a complete graph.
pub fn min_weight_perfect_matching(g: &WeightedGraph) -> Result<Matching> {
    if g.n % 2 == 1 {
        return Err(Error::OddVertexCount(g.n));
    }
    min_weight_perfect_matching_edges(g.n, &g.edges())
}

/// Minimum-weight perfect matching of a graph given by its edges.
/// Errors when no perfect matching exists.
pub fn min_weight_perfect_matching_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Matching> {
    if n % 2 == 1 {
        return Err(Error::OddVertexCount(n));
    }
    if n == 0 {
        return Ok(Matching { pairs: Vec::new() });
    }
    let mut max_w: f64 = 0.0;
    for &(i, j, w) in edges {
        if i == j || i >= n || j >= n || !(w.is_finite() && w >= 0.0) {
            return Err(Error::InvalidGraph(format!("bad edge ({i}, {j}, {w})")));
        }
        max_w = max_w.max(w);
    }
    let c = max_w + 1.0;
    let flipped: Vec<(usize, usize, f64)> = edges.iter().map(|&(i, j, w)| (i, j, c - w)).collect();
    let mate = max_weight_matching(n, &flipped, true);
    let m = Matching::from_mate(&mate);
    if m.pairs.len() * 2 != n {
        return Err(Error::InvalidGraph(format!(
            "no perfect matching: {} of {n} vertices matched",
            m.pairs.len() * 2
        )));
    }
    Ok(m)
}

/// Maximum-weight matching; returns `mate[v]` or `usize::MAX` when unmatched.
pub fn max_weight_matching(n: usize, edges: &[(usize, usize, f64)], max_cardinality: bool) -> Vec<usize> {
    if edges.is_empty() {
        return vec![NONE; n];
    }
    let mut solver = Blossom::new(n, edges);
    solver.solve(max_cardinality);
    solver.mate.iter().map(|&p| if p == NONE { NONE } else { solver.endpoint[p] }).collect()
}

/// Exhaustive minimum over all perfect matchings; for validation on small graphs.
pub fn brute_force_min_weight(g: &WeightedGraph) -> Result<(f64, Matching)> {
    if g.n % 2 == 1 {
        return Err(Error::OddVertexCount(g.n));
    }
    if g.n > 16 {
        return Err(Error::SizeGuard(format!("brute force limited to 16 vertices, got {}", g.n)));
    }
    fn rec(g: &WeightedGraph, free: &mut Vec<usize>, cur: &mut Vec<(usize, usize)>, acc: f64, best: &mut (f64, Vec<(usize, usize)>)) {
        if free.is_empty() {
            let mut pairs = cur.clone();
            pairs.sort_unstable();
            if acc < best.0 || (acc == best.0 && pairs < best.1) {
                *best = (acc, pairs);
            }
            return;
        }
        let a = free.remove(0);
        for idx in 0..free.len() {
            let b = free.remove(idx);
            cur.push((a.min(b), a.max(b)));
            rec(g, free, cur, acc + g.weight(a, b), best);
            cur.pop();
            free.insert(idx, b);
        }
        free.insert(0, a);
    }
    let mut best = (f64::INFINITY, Vec::new());
    rec(g, &mut (0..g.n).collect(), &mut Vec::new(), 0.0, &mut best);
    Ok((best.0, Matching { pairs: best.1 }))
}

struct Blossom<'a> {
    nv: usize,
    edges: &'a [(usize, usize, f64)],
    endpoint: Vec<usize>,
    neighbend: Vec<Vec<usize>>,
    mate: Vec<usize>,
    label: Vec<u8>,
    labelend: Vec<usize>,
    inblossom: Vec<usize>,
    blossomparent: Vec<usize>,
    blossomchilds: Vec<Vec<usize>>,
    blossombase: Vec<usize>,
    blossomendps: Vec<Vec<usize>>,
    bestedge: Vec<usize>,
    blossombestedges: Vec<Option<Vec<usize>>>,
    unusedblossoms: Vec<usize>,
    dualvar: Vec<f64>,
    allowedge: Vec<bool>,
    queue: Vec<usize>,
    eps: f64,
}

fn wrap(j: isize, len: usize) -> usize {
    j.rem_euclid(len as isize) as usize
}

impl<'a> Blossom<'a> {
    fn new(nv: usize, edges: &'a [(usize, usize, f64)]) -> Self {
        let max_w = edges.iter().fold(0.0f64, |m, e| m.max(e.2));
        let mut endpoint = Vec::with_capacity(2 * edges.len());
        let mut neighbend = vec![Vec::new(); nv];
        for (k, &(i, j, _)) in edges.iter().enumerate() {
            endpoint.push(i);
            endpoint.push(j);
            neighbend[i].push(2 * k + 1);
            neighbend[j].push(2 * k);
        }
        let mut blossombase: Vec<usize> = (0..nv).collect();
        blossombase.extend(std::iter::repeat_n(NONE, nv));
        let mut dualvar = vec![max_w; nv];
        dualvar.extend(std::iter::repeat_n(0.0, nv));
        Blossom {
            nv,
            edges,
            endpoint,
            neighbend,
            mate: vec![NONE; nv],
            label: vec![0; 2 * nv],
            labelend: vec![NONE; 2 * nv],
            inblossom: (0..nv).collect(),
            blossomparent: vec![NONE; 2 * nv],
            blossomchilds: vec![Vec::new(); 2 * nv],
            blossombase,
            blossomendps: vec![Vec::new(); 2 * nv],
            bestedge: vec![NONE; 2 * nv],
            blossombestedges: vec![None; 2 * nv],
            unusedblossoms: (nv..2 * nv).rev().collect(),
            dualvar,
            allowedge: vec![false; edges.len()],
            queue: Vec::new(),
            eps: 1e-10 * max_w.max(1.0),
        }
    }

    fn slack(&self, k: usize) -> f64 {
        let (i, j, w) = self.edges[k];
        self.dualvar[i] + self.dualvar[j] - 2.0 * w
    }

    fn leaves(&self, b: usize) -> Vec<usize> {
        let mut out = Vec::new();
        self.leaves_into(b, &mut out);
        out
    }

    fn leaves_into(&self, b: usize, out: &mut Vec<usize>) {
        if b < self.nv {
            out.push(b);
        } else {
            for &t in &self.blossomchilds[b] {
                if t < self.nv {
                    out.push(t);
                } else {
                    self.leaves_into(t, out);
                }
            }
        }
    }

    fn assign_label(&mut self, w: usize, t: u8, p: usize) {
        let b = self.inblossom[w];
        debug_assert!(self.label[w] == 0 && self.label[b] == 0);
        self.label[w] = t;
        self.label[b] = t;
        self.labelend[w] = p;
        self.labelend[b] = p;
        self.bestedge[w] = NONE;
        self.bestedge[b] = NONE;
        if t == 1 {
            let l = self.leaves(b);
            self.queue.extend(l);
        } else if t == 2 {
            let base = self.blossombase[b];
            let mb = self.mate[base];
            debug_assert!(mb != NONE);
            self.assign_label(self.endpoint[mb], 1, mb ^ 1);
        }
    }

    fn scan_blossom(&mut self, mut v: usize, mut w: usize) -> usize {
        let mut path = Vec::new();
        let mut base = NONE;
        while v != NONE || w != NONE {
            let mut b = self.inblossom[v];
            if self.label[b] & 4 != 0 {
                base = self.blossombase[b];
                break;
            }
            path.push(b);
            self.label[b] = 5;
            if self.labelend[b] == NONE {
                v = NONE;
            } else {
                v = self.endpoint[self.labelend[b]];
                b = self.inblossom[v];
                v = self.endpoint[self.labelend[b]];
            }
            if w != NONE {
                std::mem::swap(&mut v, &mut w);
            }
        }
        for b in path {
            self.label[b] = 1;
        }
        base
    }

    fn add_blossom(&mut self, base: usize, k: usize) {
        let (mut v, mut w, _) = self.edges[k];
        let bb = self.inblossom[base];
        let mut bv = self.inblossom[v];
        let mut bw = self.inblossom[w];
        let b = self.unusedblossoms.pop().expect("blossom slots exhausted");
        self.blossombase[b] = base;
        self.blossomparent[b] = NONE;
        self.blossomparent[bb] = b;
        let mut path = Vec::new();
        let mut endps = Vec::new();
        while bv != bb {
            self.blossomparent[bv] = b;
            path.push(bv);
            endps.push(self.labelend[bv]);
            v = self.endpoint[self.labelend[bv]];
            bv = self.inblossom[v];
        }
        path.push(bb);
        path.reverse();
        endps.reverse();
        endps.push(2 * k);
        while bw != bb {
            self.blossomparent[bw] = b;
            path.push(bw);
            endps.push(self.labelend[bw] ^ 1);
            w = self.endpoint[self.labelend[bw]];
            bw = self.inblossom[w];
        }
        self.label[b] = 1;
        self.labelend[b] = self.labelend[bb];
        self.dualvar[b] = 0.0;
        self.blossomchilds[b] = path.clone();
        self.blossomendps[b] = endps;
        for leaf in self.leaves(b) {
            if self.label[self.inblossom[leaf]] == 2 {
                self.queue.push(leaf);
            }
            self.inblossom[leaf] = b;
        }
        let mut bestedgeto = vec![NONE; 2 * self.nv];
        for &bv in &path {
            let nblists: Vec<Vec<usize>> = match self.blossombestedges[bv].take() {
                None => self
                    .leaves(bv)
                    .into_iter()
                    .map(|v| self.neighbend[v].iter().map(|p| p / 2).collect())
                    .collect(),
                Some(list) => vec![list],
            };
            for nblist in nblists {
                for k in nblist {
                    let (mut i, mut j, _) = self.edges[k];
                    if self.inblossom[j] == b {
                        std::mem::swap(&mut i, &mut j);
                    }
                    let _ = i;
                    let bj = self.inblossom[j];
                    if bj != b
                        && self.label[bj] == 1
                        && (bestedgeto[bj] == NONE || self.slack(k) < self.slack(bestedgeto[bj]))
                    {
                        bestedgeto[bj] = k;
                    }
                }
            }
            self.bestedge[bv] = NONE;
        }
        let best: Vec<usize> = bestedgeto.into_iter().filter(|&k| k != NONE).collect();
        self.bestedge[b] = NONE;
        for &k in &best {
            if self.bestedge[b] == NONE || self.slack(k) < self.slack(self.bestedge[b]) {
                self.bestedge[b] = k;
            }
        }
        self.blossombestedges[b] = Some(best);
    }

    fn expand_blossom(&mut self, b: usize, endstage: bool) {
        let childs = self.blossomchilds[b].clone();
        for &s in &childs {
            self.blossomparent[s] = NONE;
            if s < self.nv {
                self.inblossom[s] = s;
            } else if endstage && self.dualvar[s].abs() <= self.eps {
                self.expand_blossom(s, endstage);
            } else {
                for leaf in self.leaves(s) {
                    self.inblossom[leaf] = s;
                }
            }
        }
        if !endstage && self.label[b] == 2 {
            let len = childs.len();
            let entrychild = self.inblossom[self.endpoint[self.labelend[b] ^ 1]];
            let mut j = childs.iter().position(|&c| c == entrychild).unwrap() as isize;
            let (jstep, endptrick): (isize, usize) = if j & 1 == 1 {
                j -= len as isize;
                (1, 0)
            } else {
                (-1, 1)
            };
            let endps = self.blossomendps[b].clone();
            let mut p = self.labelend[b];
            while j != 0 {
                let pe = p ^ 1;
                self.label[self.endpoint[pe]] = 0;
                let q = endps[wrap(j - endptrick as isize, len)];
                self.label[self.endpoint[q ^ endptrick ^ 1]] = 0;
                self.assign_label(self.endpoint[pe], 2, p);
                self.allowedge[q / 2] = true;
                j += jstep;
                p = endps[wrap(j - endptrick as isize, len)] ^ endptrick;
                self.allowedge[p / 2] = true;
                j += jstep;
            }
            let bv = childs[wrap(j, len)];
            let e = self.endpoint[p ^ 1];
            self.label[e] = 2;
            self.label[bv] = 2;
            self.labelend[e] = p;
            self.labelend[bv] = p;
            self.bestedge[bv] = NONE;
            j += jstep;
            while childs[wrap(j, len)] != entrychild {
                let bv = childs[wrap(j, len)];
                if self.label[bv] == 1 {
                    j += jstep;
                    continue;
                }
                if let Some(v) = self.leaves(bv).into_iter().find(|&v| self.label[v] != 0) {
                    self.label[v] = 0;
                    let m = self.mate[self.blossombase[bv]];
                    self.label[self.endpoint[m]] = 0;
                    self.assign_label(v, 2, self.labelend[v]);
                }
                j += jstep;
            }
        }
        self.label[b] = u8::MAX;
        self.labelend[b] = NONE;
        self.blossomchilds[b].clear();
        self.blossomendps[b].clear();
        self.blossombase[b] = NONE;
        self.blossombestedges[b] = None;
        self.bestedge[b] = NONE;
        self.unusedblossoms.push(b);
    }

    fn augment_blossom(&mut self, b: usize, v: usize) {
        let mut t = v;
        while self.blossomparent[t] != b {
            t = self.blossomparent[t];
        }
        if t >= self.nv {
            self.augment_blossom(t, v);
        }
        let len = self.blossomchilds[b].len();
        let i = self.blossomchilds[b].iter().position(|&c| c == t).unwrap();
        let mut j = i as isize;
        let (jstep, endptrick): (isize, usize) = if i & 1 == 1 {
            j -= len as isize;
            (1, 0)
        } else {
            (-1, 1)
        };
        while j != 0 {
            j += jstep;
            let t1 = self.blossomchilds[b][wrap(j, len)];
            let p = self.blossomendps[b][wrap(j - endptrick as isize, len)] ^ endptrick;
            if t1 >= self.nv {
                self.augment_blossom(t1, self.endpoint[p]);
            }
            j += jstep;
            let t2 = self.blossomchilds[b][wrap(j, len)];
            if t2 >= self.nv {
                self.augment_blossom(t2, self.endpoint[p ^ 1]);
            }
            self.mate[self.endpoint[p]] = p ^ 1;
            self.mate[self.endpoint[p ^ 1]] = p;
        }
        self.blossomchilds[b].rotate_left(i);
        self.blossomendps[b].rotate_left(i);
        self.blossombase[b] = self.blossombase[self.blossomchilds[b][0]];
        debug_assert_eq!(self.blossombase[b], v);
    }

    fn augment_matching(&mut self, k: usize) {
        let (v, w, _) = self.edges[k];
        for (mut s, mut p) in [(v, 2 * k + 1), (w, 2 * k)] {
            loop {
                let bs = self.inblossom[s];
                if bs >= self.nv {
                    self.augment_blossom(bs, s);
                }
                self.mate[s] = p;
                if self.labelend[bs] == NONE {
                    break;
                }
                let t = self.endpoint[self.labelend[bs]];
                let bt = self.inblossom[t];
                s = self.endpoint[self.labelend[bt]];
                let j = self.endpoint[self.labelend[bt] ^ 1];
                if bt >= self.nv {
                    self.augment_blossom(bt, j);
                }
                self.mate[j] = self.labelend[bt];
                p = self.labelend[bt] ^ 1;
            }
        }
    }

    fn solve(&mut self, max_cardinality: bool) {
        let nv = self.nv;
        for _ in 0..nv {
            self.label.iter_mut().for_each(|l| *l = 0);
            self.bestedge.iter_mut().for_each(|e| *e = NONE);
            for b in nv..2 * nv {
                self.blossombestedges[b] = None;
            }
            self.allowedge.iter_mut().for_each(|a| *a = false);
            self.queue.clear();
            for v in 0..nv {
                if self.mate[v] == NONE && self.label[self.inblossom[v]] == 0 {
                    self.assign_label(v, 1, NONE);
                }
            }
            let mut augmented = false;
            loop {
                while let Some(v) = (!augmented).then(|| self.queue.pop()).flatten() {
                    for idx in 0..self.neighbend[v].len() {
                        let p = self.neighbend[v][idx];
                        let k = p / 2;
                        let w = self.endpoint[p];
                        if self.inblossom[v] == self.inblossom[w] {
                            continue;
                        }
                        let mut kslack = 0.0;
                        if !self.allowedge[k] {
                            kslack = self.slack(k);
                            if kslack <= self.eps {
                                self.allowedge[k] = true;
                            }
                        }
                        if self.allowedge[k] {
                            if self.label[self.inblossom[w]] == 0 {
                                self.assign_label(w, 2, p ^ 1);
                            } else if self.label[self.inblossom[w]] == 1 {
                                let base = self.scan_blossom(v, w);
                                if base != NONE {
                                    self.add_blossom(base, k);
                                } else {
                                    self.augment_matching(k);
                                    augmented = true;
                                    break;
                                }
                            } else if self.label[w] == 0 {
                                self.label[w] = 2;
                                self.labelend[w] = p ^ 1;
                            }
                        } else if self.label[self.inblossom[w]] == 1 {
                            let b = self.inblossom[v];
                            if self.bestedge[b] == NONE || kslack < self.slack(self.bestedge[b]) {
                                self.bestedge[b] = k;
                            }
                        } else if self.label[w] == 0 && (self.bestedge[w] == NONE || kslack < self.slack(self.bestedge[w])) {
                            self.bestedge[w] = k;
                        }
                    }
                }
                if augmented {
                    break;
                }
                let mut deltatype = 0u8;
                let mut delta = 0.0;
                let mut deltaedge = NONE;
                let mut deltablossom = NONE;
                if !max_cardinality {
                    deltatype = 1;
                    delta = self.dualvar[..nv].iter().copied().fold(f64::INFINITY, f64::min);
                }
                for v in 0..nv {
                    if self.label[self.inblossom[v]] == 0 && self.bestedge[v] != NONE {
                        let d = self.slack(self.bestedge[v]);
                        if deltatype == 0 || d < delta {
                            delta = d;
                            deltatype = 2;
                            deltaedge = self.bestedge[v];
                        }
                    }
                }
                for b in 0..2 * nv {
                    if self.blossomparent[b] == NONE && self.label[b] == 1 && self.bestedge[b] != NONE {
                        let d = self.slack(self.bestedge[b]) / 2.0;
                        if deltatype == 0 || d < delta {
                            delta = d;
                            deltatype = 3;
                            deltaedge = self.bestedge[b];
                        }
                    }
                }
                for b in nv..2 * nv {
                    if self.blossombase[b] != NONE
                        && self.blossomparent[b] == NONE
                        && self.label[b] == 2
                        && (deltatype == 0 || self.dualvar[b] < delta)
                    {
                        delta = self.dualvar[b];
                        deltatype = 4;
                        deltablossom = b;
                    }
                }
                if deltatype == 0 {
                    deltatype = 1;
                    delta = self.dualvar[..nv].iter().copied().fold(f64::INFINITY, f64::min).max(0.0);
                }
                let delta = delta.max(0.0);
                for v in 0..nv {
                    match self.label[self.inblossom[v]] {
                        1 => self.dualvar[v] -= delta,
                        2 => self.dualvar[v] += delta,
                        _ => {}
                    }
                }
                for b in nv..2 * nv {
                    if self.blossombase[b] != NONE && self.blossomparent[b] == NONE {
                        match self.label[b] {
                            1 => self.dualvar[b] += delta,
                            2 => self.dualvar[b] -= delta,
                            _ => {}
                        }
                    }
                }
                match deltatype {
                    1 => break,
                    2 => {
                        self.allowedge[deltaedge] = true;
                        let (mut i, j, _) = self.edges[deltaedge];
                        if self.label[self.inblossom[i]] == 0 {
                            i = j;
                        }
                        self.queue.push(i);
                    }
                    3 => {
                        self.allowedge[deltaedge] = true;
                        let (i, _, _) = self.edges[deltaedge];
                        self.queue.push(i);
                    }
                    _ => self.expand_blossom(deltablossom, false),
                }
            }
            if !augmented {
                break;
            }
            for b in nv..2 * nv {
                if self.blossomparent[b] == NONE
                    && self.blossombase[b] != NONE
                    && self.label[b] == 1
                    && self.dualvar[b].abs() <= self.eps
                {
                    self.expand_blossom(b, true);
                }
            }
        }
    }
}
