//! Small undirected graphs with optional self loops and weighted edges.
//!
//! A [`Graph`] is a symmetric, non-negative adjacency matrix. Off-diagonal
//! entries are edge weights (1 for a plain edge); a diagonal entry of 1 marks a
//! single self loop. The degree of a vertex counts its nonzero off-diagonal
//! entries plus one for a loop.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: DMatrix<f64>,
}

/// An ordered (source, target) vertex pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VertexPair {
    pub source: usize,
    pub target: usize,
}

impl VertexPair {
    pub fn new(source: usize, target: usize) -> Self {
        Self { source, target }
    }

    pub fn check(&self, g: &Graph) -> Result<()> {
        g.check_vertex(self.source)?;
        g.check_vertex(self.target)
    }
}

/// Named graph families and combinators.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilySpec {
    Complete(usize),
    Path(usize),
    Cycle(usize),
    /// The complement of the complete graph: `n` isolated vertices.
    EdgelessComplement(usize),
    Join(Box<FamilySpec>, Box<FamilySpec>),
    /// `diamonds` four-cycles glued corner to corner; `loop_ends` adds a
    /// self loop at both end vertices.
    DiamondChain {
        diamonds: usize,
        loop_ends: bool,
    },
    Custom(DMatrix<f64>),
}

impl FamilySpec {
    pub fn join(a: FamilySpec, b: FamilySpec) -> Self {
        FamilySpec::Join(Box::new(a), Box::new(b))
    }

    /// `K̄₂ + X`, the joins used for the three walk families.
    pub fn k2_join(other: FamilySpec) -> Self {
        Self::join(FamilySpec::EdgelessComplement(2), other)
    }

    pub fn build(&self) -> Result<Graph> {
        build(self)
    }
}

impl Graph {
    /// Validates and wraps an adjacency matrix.
    pub fn from_adjacency(adjacency: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = adjacency.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if rows == 0 {
            return Err(Error::EmptyGraph);
        }
        for i in 0..rows {
            for j in 0..cols {
                let w = adjacency[(i, j)];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::InvalidWeight { row: i, col: j, weight: w });
                }
                if i == j && w != 0.0 && w != 1.0 {
                    return Err(Error::InvalidWeight { row: i, col: j, weight: w });
                }
                if j > i && w != adjacency[(j, i)] {
                    return Err(Error::Asymmetric(i, j));
                }
            }
        }
        Ok(Self { adjacency })
    }

    pub fn empty(n: usize) -> Result<Self> {
        Self::from_adjacency(DMatrix::zeros(n, n))
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut a = DMatrix::zeros(n, n);
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::VertexOutOfRange { vertex: i.max(j), n });
            }
            a[(i, j)] = 1.0;
            a[(j, i)] = 1.0;
        }
        Self::from_adjacency(a)
    }

    pub fn n(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.adjacency[(i, j)]
    }

    pub fn has_loop(&self, v: usize) -> bool {
        self.adjacency[(v, v)] != 0.0
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i != j && self.adjacency[(i, j)] != 0.0
    }

    /// Neighbors of `v` in ascending order, excluding `v` itself.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n()).filter(move |&w| self.has_edge(v, w))
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors(v).count() + usize::from(self.has_loop(v))
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n()).map(|v| self.degree(v)).collect()
    }

    /// True when every entry is 0 or 1.
    pub fn is_unweighted(&self) -> bool {
        self.adjacency.iter().all(|&w| w == 0.0 || w == 1.0)
    }

    pub fn has_any_loop(&self) -> bool {
        (0..self.n()).any(|v| self.has_loop(v))
    }

    /// Undirected edges `(i, j, weight)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let w = self.adjacency[(i, j)];
                if w != 0.0 {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    pub fn loops(&self) -> Vec<usize> {
        (0..self.n()).filter(|&v| self.has_loop(v)).collect()
    }

    pub fn is_connected(&self) -> bool {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for w in self.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Returns a copy with a self loop added at `v`.
    pub fn with_loop(&self, v: usize) -> Result<Self> {
        self.check_vertex(v)?;
        let mut a = self.adjacency.clone();
        a[(v, v)] = 1.0;
        Self::from_adjacency(a)
    }

    /// Relabels vertices so that old vertex `v` becomes `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n();
        if perm.len() != n {
            return Err(Error::Dimension { expected: n, got: perm.len() });
        }
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a[(perm[i], perm[j])] = self.adjacency[(i, j)];
            }
        }
        Self::from_adjacency(a)
    }

    pub(crate) fn check_vertex(&self, v: usize) -> Result<()> {
        if v < self.n() {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange { vertex: v, n: self.n() })
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&GraphDoc::from(self)).expect("graph documents always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: GraphDoc = serde_json::from_str(text)?;
        doc.into_graph()
    }
}

/// Wire form of a graph: `{"n": int, "edges": [[i, j, weight]...], "loops": [i...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDoc {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
    #[serde(default)]
    pub loops: Vec<usize>,
}

impl From<&Graph> for GraphDoc {
    fn from(g: &Graph) -> Self {
        GraphDoc { n: g.n(), edges: g.edges(), loops: g.loops() }
    }
}

impl GraphDoc {
    pub fn into_graph(self) -> Result<Graph> {
        let n = self.n;
        let mut a = DMatrix::zeros(n, n);
        for (i, j, w) in self.edges {
            if i >= n || j >= n {
                return Err(Error::VertexOutOfRange { vertex: i.max(j), n });
            }
            if i == j {
                return Err(Error::Parameter(format!("edge ({i}, {i}) is a loop; list it under \"loops\"")));
            }
            a[(i, j)] = w;
            a[(j, i)] = w;
        }
        for v in self.loops {
            if v >= n {
                return Err(Error::VertexOutOfRange { vertex: v, n });
            }
            a[(v, v)] = 1.0;
        }
        Graph::from_adjacency(a)
    }
}

pub fn build(spec: &FamilySpec) -> Result<Graph> {
    match spec {
        FamilySpec::Complete(n) => {
            let n = *n;
            let mut a = DMatrix::from_element(n, n, 1.0);
            a.fill_diagonal(0.0);
            Graph::from_adjacency(a)
        }
        FamilySpec::Path(n) => {
            if *n < 2 {
                return Err(Error::PathTooSmall(*n));
            }
            let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
            Graph::from_edges(*n, &edges)
        }
        FamilySpec::Cycle(n) => {
            if *n < 3 {
                return Err(Error::CycleTooSmall(*n));
            }
            let edges: Vec<_> = (0..*n).map(|i| (i, (i + 1) % n)).collect();
            Graph::from_edges(*n, &edges)
        }
        FamilySpec::EdgelessComplement(n) => Graph::empty(*n),
        FamilySpec::Join(g, h) => join(&build(g)?, &build(h)?),
        FamilySpec::DiamondChain { diamonds, loop_ends } => diamond_chain(*diamonds, *loop_ends),
        FamilySpec::Custom(a) => Graph::from_adjacency(a.clone()),
    }
}

/// Block adjacency `[[A_g, J], [J, A_h]]`; `g`'s vertices keep their indices
/// and `h`'s are shifted by `g.n()`.
pub fn join(g: &Graph, h: &Graph) -> Result<Graph> {
    let (ng, nh) = (g.n(), h.n());
    let mut a = DMatrix::from_element(ng + nh, ng + nh, 1.0);
    a.view_mut((0, 0), (ng, ng)).copy_from(g.adjacency());
    a.view_mut((ng, ng), (nh, nh)).copy_from(h.adjacency());
    Graph::from_adjacency(a)
}

pub fn complement(g: &Graph) -> Result<Graph> {
    if !g.is_unweighted() {
        return Err(Error::Weighted("complement"));
    }
    if g.has_any_loop() {
        return Err(Error::HasLoops);
    }
    let n = g.n();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j && g.weight(i, j) == 0.0 {
                a[(i, j)] = 1.0;
            }
        }
    }
    Graph::from_adjacency(a)
}

/// Corner vertices sit at indices `0, 3, 6, …, 3n`; the two middle vertices of
/// diamond `i` are `3i + 1` and `3i + 2`. The chain ends are `0` and `3n`.
fn diamond_chain(diamonds: usize, loop_ends: bool) -> Result<Graph> {
    if diamonds == 0 {
        return Err(Error::Parameter("a diamond chain needs at least one diamond".into()));
    }
    let n = 3 * diamonds + 1;
    let mut edges = Vec::with_capacity(4 * diamonds);
    for i in 0..diamonds {
        let (left, right) = (3 * i, 3 * i + 3);
        for mid in [3 * i + 1, 3 * i + 2] {
            edges.push((left, mid));
            edges.push((mid, right));
        }
    }
    let mut g = Graph::from_edges(n, &edges)?;
    if loop_ends {
        g = g.with_loop(0)?.with_loop(n - 1)?;
    }
    Ok(g)
}

/// The far end of a diamond chain built by [`FamilySpec::DiamondChain`].
pub fn diamond_chain_end(diamonds: usize) -> usize {
    3 * diamonds
}
