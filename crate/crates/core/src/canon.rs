//! Canonical keys for small unweighted graphs.
//!
//! The key is the lexicographically smallest adjacency bit string over the
//! leaves of an individualization/refinement search tree. Refinement and the
//! choice of target cell depend only on isomorphism-invariant data, so two
//! graphs receive the same key exactly when they are isomorphic (respecting
//! marked vertices). Branches on twin vertices are skipped: swapping twins is
//! an automorphism, so their subtrees yield the same leaves.

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Opaque canonical key; equal keys mean isomorphic graphs.
pub type CanonicalKey = Vec<u8>;

/// Relabeling-invariant key of an unweighted graph (loops allowed).
pub fn canonical_key(g: &Graph) -> Result<CanonicalKey> {
    canonical_key_marked(g, &[])
}

/// Key of a graph with a distinguished vertex set. Marked vertices may only be
/// mapped onto marked vertices; the set is unordered.
pub fn canonical_key_marked(g: &Graph, marked: &[usize]) -> Result<CanonicalKey> {
    let mut set = marked.to_vec();
    set.sort_unstable();
    set.dedup();
    keyed(g, vec![set], 0)
}

/// Key with an ordered list of distinct marked vertices: the `k`-th mark may
/// only be mapped onto the `k`-th mark of the other graph. Used for
/// (source, target) pairs, whose roles are not interchangeable.
pub fn canonical_key_ordered(g: &Graph, marks: &[usize]) -> Result<CanonicalKey> {
    for (k, v) in marks.iter().enumerate() {
        if marks[..k].contains(v) {
            return Err(Error::Parameter(format!("vertex {v} marked twice")));
        }
    }
    keyed(g, marks.iter().map(|&v| vec![v]).collect(), 1)
}

fn keyed(g: &Graph, classes: Vec<Vec<usize>>, mode: u8) -> Result<CanonicalKey> {
    if !g.is_unweighted() {
        return Err(Error::Weighted("canonical_key"));
    }
    for &v in classes.iter().flatten() {
        g.check_vertex(v)?;
    }
    let n = g.n();
    let adj: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| g.weight(i, j) != 0.0).collect()).collect();
    // Class 0 is "unmarked"; marked classes are numbered from 1.
    let mut class = vec![0usize; n];
    for (k, members) in classes.iter().enumerate() {
        for &v in members {
            class[v] = k + 1;
        }
    }
    let mark_count = class.iter().filter(|&&k| k > 0).count();

    // Initial cells ordered by (marked class, then loop flag), unmarked last.
    let mut initial: Vec<Vec<usize>> = Vec::new();
    let order = (1..=classes.len()).chain(std::iter::once(0));
    for k in order {
        for want_loop in [false, true] {
            let cell: Vec<usize> = (0..n).filter(|&v| class[v] == k && adj[v][v] == want_loop).collect();
            if !cell.is_empty() {
                initial.push(cell);
            }
        }
    }

    let colors = (0..n).map(|v| (class[v], adj[v][v])).collect();
    let search = Search { adj: &adj, n, colors };
    let mut best: Option<Vec<u8>> = None;
    let partition = refine(&adj, initial);
    search.explore(partition, &mut best);

    let mut key = Vec::with_capacity(5 + n * n / 8 + 1);
    key.push(mode);
    key.extend_from_slice(&(n as u16).to_le_bytes());
    key.extend_from_slice(&(mark_count as u16).to_le_bytes());
    key.extend(best.expect("search tree always has a leaf"));
    Ok(key)
}

struct Search<'a> {
    adj: &'a [Vec<bool>],
    n: usize,
    colors: Vec<(usize, bool)>,
}

impl Search<'_> {
    fn explore(&self, partition: Vec<Vec<usize>>, best: &mut Option<Vec<u8>>) {
        let target = partition
            .iter()
            .enumerate()
            .filter(|(_, c)| c.len() > 1)
            .min_by_key(|(i, c)| (c.len(), *i))
            .map(|(i, _)| i);
        let Some(ti) = target else {
            let leaf = self.leaf_bits(&partition);
            if best.as_ref().is_none_or(|b| leaf < *b) {
                *best = Some(leaf);
            }
            return;
        };
        let cell = &partition[ti];
        let mut explored: Vec<usize> = Vec::new();
        for &v in cell {
            if explored.iter().any(|&u| self.twins(u, v)) {
                continue;
            }
            explored.push(v);
            let mut next = Vec::with_capacity(partition.len() + 1);
            next.extend_from_slice(&partition[..ti]);
            next.push(vec![v]);
            next.push(cell.iter().copied().filter(|&w| w != v).collect());
            next.extend_from_slice(&partition[ti + 1..]);
            self.explore(refine(self.adj, next), best);
        }
    }

    fn twins(&self, u: usize, v: usize) -> bool {
        self.colors[u] == self.colors[v] && (0..self.n).all(|w| w == u || w == v || self.adj[u][w] == self.adj[v][w])
    }

    /// Upper triangle (diagonal included) in canonical order, packed MSB first.
    fn leaf_bits(&self, partition: &[Vec<usize>]) -> Vec<u8> {
        let order: Vec<usize> = partition.iter().map(|c| c[0]).collect();
        let mut bytes = Vec::new();
        let mut acc = 0u8;
        let mut filled = 0;
        for i in 0..self.n {
            for j in i..self.n {
                acc = (acc << 1) | u8::from(self.adj[order[i]][order[j]]);
                filled += 1;
                if filled == 8 {
                    bytes.push(acc);
                    acc = 0;
                    filled = 0;
                }
            }
        }
        if filled > 0 {
            bytes.push(acc << (8 - filled));
        }
        bytes
    }
}

/// Equitable refinement: split every cell by the vector of neighbor counts into
/// each cell until stable. Split pieces are ordered by signature.
fn refine(adj: &[Vec<bool>], mut cells: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    loop {
        let n = adj.len();
        let mut cell_of = vec![0usize; n];
        for (ci, cell) in cells.iter().enumerate() {
            for &v in cell {
                cell_of[v] = ci;
            }
        }
        let mut changed = false;
        let mut next = Vec::with_capacity(cells.len());
        for cell in &cells {
            if cell.len() == 1 {
                next.push(cell.clone());
                continue;
            }
            let mut signed: Vec<(Vec<u32>, usize)> = cell
                .iter()
                .map(|&v| {
                    let mut sig = vec![0u32; cells.len()];
                    for w in 0..n {
                        if w != v && adj[v][w] {
                            sig[cell_of[w]] += 1;
                        }
                    }
                    (sig, v)
                })
                .collect();
            signed.sort();
            let mut piece = vec![signed[0].1];
            for k in 1..signed.len() {
                if signed[k].0 != signed[k - 1].0 {
                    next.push(std::mem::take(&mut piece));
                    changed = true;
                }
                piece.push(signed[k].1);
            }
            next.push(piece);
        }
        cells = next;
        if !changed {
            return cells;
        }
    }
}
