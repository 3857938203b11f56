//! Graphs, Ising and QUBO problem data, spin configurations and the
//! lattice hardware graphs problems are compiled onto.
//!
//! Vertices are dense ids `0..n`. Edges are stored as normalized `(u, v)`
//! pairs with `u < v`, sorted lexicographically, so an edge index is stable
//! and problem coefficients can live in plain vectors aligned with
//! [`Graph::edges`].

use std::fmt;
use std::ops::Neg;

use crate::error::{Error, Result};

/// Simple undirected graph on vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    // (neighbor, edge index), sorted by neighbor
    adj: Vec<Vec<(usize, usize)>>,
}

impl Graph {
    /// Builds a graph, rejecting self-loops, duplicate edges (in either
    /// orientation) and endpoints outside `0..n`.
    pub fn new<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut normalized = Vec::new();
        for (u, v) in edges {
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            for x in [u, v] {
                if x >= n {
                    return Err(Error::VertexOutOfRange { vertex: x, n });
                }
            }
            normalized.push((u.min(v), u.max(v)));
        }
        normalized.sort_unstable();
        if let Some(w) = normalized.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateEdge(w[0].0, w[0].1));
        }

        let mut adj = vec![Vec::new(); n];
        for (idx, &(u, v)) in normalized.iter().enumerate() {
            adj[u].push((v, idx));
            adj[v].push((u, idx));
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(Self {
            n,
            edges: normalized,
            adj,
        })
    }

    pub fn empty(n: usize) -> Self {
        Self {
            n,
            edges: Vec::new(),
            adj: vec![Vec::new(); n],
        }
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
        Self::new(n, edges).expect("complete graph is simple")
    }

    pub fn path(n: usize) -> Self {
        Self::new(n, (1..n).map(|v| (v - 1, v))).expect("path graph is simple")
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[i].iter().map(|&(j, _)| j)
    }

    /// Neighbors of `i` paired with the index of the connecting edge.
    pub fn incident(&self, i: usize) -> &[(usize, usize)] {
        &self.adj[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        let key = (u.min(v), u.max(v));
        self.edges.binary_search(&key).ok()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edge_index(u, v).is_some()
    }

    /// Subgraph induced by `keep`, relabeled so that `keep[k]` becomes `k`.
    pub fn induced(&self, keep: &[usize]) -> Result<Self> {
        let mut index = vec![usize::MAX; self.n];
        for (k, &v) in keep.iter().enumerate() {
            if v >= self.n {
                return Err(Error::VertexOutOfRange {
                    vertex: v,
                    n: self.n,
                });
            }
            index[v] = k;
        }
        let edges = self
            .edges
            .iter()
            .filter(|&&(u, v)| index[u] != usize::MAX && index[v] != usize::MAX)
            .map(|&(u, v)| (index[u], index[v]));
        Self::new(keep.len(), edges)
    }
}

fn check_coefficients(graph: &Graph, linear: &[f64], quadratic: &[f64]) -> Result<()> {
    if linear.len() != graph.num_vertices() {
        return Err(Error::LengthMismatch {
            what: "linear coefficients",
            expected: graph.num_vertices(),
            found: linear.len(),
        });
    }
    if quadratic.len() != graph.num_edges() {
        return Err(Error::LengthMismatch {
            what: "quadratic coefficients",
            expected: graph.num_edges(),
            found: quadratic.len(),
        });
    }
    if linear.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("linear coefficients"));
    }
    if quadratic.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("quadratic coefficients"));
    }
    if let Some(k) = quadratic.iter().position(|&x| x == 0.0) {
        let (u, v) = graph.edges()[k];
        return Err(Error::ZeroCoupling(u, v));
    }
    Ok(())
}

/// Splits `(vertex, value)` and `(u, v, value)` term lists into a graph and
/// coefficient vectors aligned with it. Absent linear terms are zero.
fn assemble<L, Q>(n: usize, linear: L, quadratic: Q) -> Result<(Graph, Vec<f64>, Vec<f64>)>
where
    L: IntoIterator<Item = (usize, f64)>,
    Q: IntoIterator<Item = (usize, usize, f64)>,
{
    let mut lin = vec![0.0; n];
    for (v, x) in linear {
        if v >= n {
            return Err(Error::VertexOutOfRange { vertex: v, n });
        }
        lin[v] = x;
    }
    let terms: Vec<_> = quadratic.into_iter().collect();
    let graph = Graph::new(n, terms.iter().map(|&(u, v, _)| (u, v)))?;
    let mut quad = vec![0.0; graph.num_edges()];
    for &(u, v, x) in &terms {
        let k = graph.edge_index(u, v).expect("edge was just inserted");
        quad[k] = x;
    }
    Ok((graph, lin, quad))
}

/// Ising energy function `E(s) = Σ h_i s_i + Σ J_ij s_i s_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingProblem {
    graph: Graph,
    h: Vec<f64>,
    j: Vec<f64>,
}

impl IsingProblem {
    /// `j` is aligned with `graph.edges()`; every coupling must be nonzero.
    pub fn new(graph: Graph, h: Vec<f64>, j: Vec<f64>) -> Result<Self> {
        check_coefficients(&graph, &h, &j)?;
        Ok(Self { graph, h, j })
    }

    pub fn from_terms<L, Q>(n: usize, linear: L, quadratic: Q) -> Result<Self>
    where
        L: IntoIterator<Item = (usize, f64)>,
        Q: IntoIterator<Item = (usize, usize, f64)>,
    {
        let (graph, h, j) = assemble(n, linear, quadratic)?;
        Self::new(graph, h, j)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn num_vertices(&self) -> usize {
        self.graph.num_vertices()
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    /// Couplings aligned with `graph().edges()`.
    pub fn j(&self) -> &[f64] {
        &self.j
    }

    pub fn coupling(&self, u: usize, v: usize) -> Option<f64> {
        self.graph.edge_index(u, v).map(|k| self.j[k])
    }

    /// `(neighbor, J)` pairs around vertex `i`.
    pub fn couplings(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.graph.incident(i).iter().map(|&(v, k)| (v, self.j[k]))
    }

    pub fn energy(&self, s: &SpinConfig) -> Result<f64> {
        if s.len() != self.num_vertices() {
            return Err(Error::LengthMismatch {
                what: "spin assignment",
                expected: self.num_vertices(),
                found: s.len(),
            });
        }
        let spins = s.spins();
        let linear: f64 = self
            .h
            .iter()
            .zip(spins)
            .map(|(h, &si)| h * f64::from(si))
            .sum();
        let quadratic: f64 = self
            .graph
            .edges()
            .iter()
            .zip(&self.j)
            .map(|(&(u, v), j)| j * f64::from(spins[u] * spins[v]))
            .sum();
        Ok(linear + quadratic)
    }

    /// Same problem with every coefficient multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.graph.clone(),
            self.h.iter().map(|x| x * factor).collect(),
            self.j.iter().map(|x| x * factor).collect(),
        )
    }
}

/// Quadratic pseudo-Boolean objective `Y(x) = Σ c_i x_i − Σ J_ij x_i x_j`,
/// to be maximized.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboProblem {
    graph: Graph,
    c: Vec<f64>,
    j: Vec<f64>,
}

impl QuboProblem {
    pub fn new(graph: Graph, c: Vec<f64>, j: Vec<f64>) -> Result<Self> {
        check_coefficients(&graph, &c, &j)?;
        Ok(Self { graph, c, j })
    }

    pub fn from_terms<L, Q>(n: usize, linear: L, quadratic: Q) -> Result<Self>
    where
        L: IntoIterator<Item = (usize, f64)>,
        Q: IntoIterator<Item = (usize, usize, f64)>,
    {
        let (graph, c, j) = assemble(n, linear, quadratic)?;
        Self::new(graph, c, j)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn num_vertices(&self) -> usize {
        self.graph.num_vertices()
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn j(&self) -> &[f64] {
        &self.j
    }

    pub fn coupling(&self, u: usize, v: usize) -> Option<f64> {
        self.graph.edge_index(u, v).map(|k| self.j[k])
    }

    pub fn objective(&self, x: &[bool]) -> Result<f64> {
        if x.len() != self.num_vertices() {
            return Err(Error::LengthMismatch {
                what: "bit assignment",
                expected: self.num_vertices(),
                found: x.len(),
            });
        }
        let linear: f64 = self
            .c
            .iter()
            .zip(x)
            .filter(|(_, &b)| b)
            .map(|(c, _)| *c)
            .sum();
        let quadratic: f64 = self
            .graph
            .edges()
            .iter()
            .zip(&self.j)
            .filter(|(&(u, v), _)| x[u] && x[v])
            .map(|(_, j)| *j)
            .sum();
        Ok(linear - quadratic)
    }
}

/// Total assignment of spins `±1` to vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinConfig(Vec<i8>);

impl SpinConfig {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some(vertex) = spins.iter().position(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidSpin {
                vertex,
                value: spins[vertex],
            });
        }
        Ok(Self(spins))
    }

    pub fn all_up(n: usize) -> Self {
        Self(vec![1; n])
    }

    /// Bit `i` of `mask` set means spin `i` is `+1`.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        Self(
            (0..n)
                .map(|i| if mask >> i & 1 == 1 { 1 } else { -1 })
                .collect(),
        )
    }

    pub fn to_mask(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == 1)
            .fold(0, |m, (i, _)| m | 1 << i)
    }

    pub fn spins(&self) -> &[i8] {
        &self.0
    }

    pub fn get(&self, i: usize) -> i8 {
        self.0[i]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Neg for &SpinConfig {
    type Output = SpinConfig;

    fn neg(self) -> SpinConfig {
        SpinConfig(self.0.iter().map(|s| -s).collect())
    }
}

impl fmt::Display for SpinConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.0 {
            f.write_str(if s > 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatticeKind {
    /// 4-neighbor grid.
    Square,
    /// 8-neighbor (king-move) grid.
    Extended,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HardwareKind {
    SquareLattice { rows: usize, cols: usize },
    ExtendedGrid { rows: usize, cols: usize },
    Custom,
}

/// Fixed hardware graph: qubits are vertices, couplers are edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HardwareGraph {
    base: Graph,
    kind: HardwareKind,
    max_degree: usize,
}

impl HardwareGraph {
    pub fn square_lattice(rows: usize, cols: usize) -> Result<Self> {
        make_hardware(LatticeKind::Square, rows, cols)
    }

    pub fn extended_grid(rows: usize, cols: usize) -> Result<Self> {
        make_hardware(LatticeKind::Extended, rows, cols)
    }

    pub fn custom(base: Graph) -> Self {
        let max_degree = base.max_degree();
        Self {
            base,
            kind: HardwareKind::Custom,
            max_degree,
        }
    }

    pub fn graph(&self) -> &Graph {
        &self.base
    }

    pub fn kind(&self) -> HardwareKind {
        self.kind
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Row-major id of lattice site `(r, c)`; `None` off-lattice or for
    /// custom graphs.
    pub fn site(&self, r: usize, c: usize) -> Option<usize> {
        match self.kind {
            HardwareKind::SquareLattice { rows, cols }
            | HardwareKind::ExtendedGrid { rows, cols }
                if r < rows && c < cols =>
            {
                Some(r * cols + c)
            }
            _ => None,
        }
    }

    pub fn coords(&self, v: usize) -> Option<(usize, usize)> {
        match self.kind {
            HardwareKind::SquareLattice { cols, .. } | HardwareKind::ExtendedGrid { cols, .. }
                if v < self.base.num_vertices() =>
            {
                Some((v / cols, v % cols))
            }
            _ => None,
        }
    }
}

/// Generates a `rows x cols` lattice with row-major vertex numbering.
pub fn make_hardware(kind: LatticeKind, rows: usize, cols: usize) -> Result<HardwareGraph> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidDimensions { rows, cols });
    }
    let id = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((id(r, c), id(r, c + 1)));
            }
            if r + 1 < rows {
                edges.push((id(r, c), id(r + 1, c)));
            }
            if kind == LatticeKind::Extended && r + 1 < rows {
                if c + 1 < cols {
                    edges.push((id(r, c), id(r + 1, c + 1)));
                }
                if c > 0 {
                    edges.push((id(r, c), id(r + 1, c - 1)));
                }
            }
        }
    }
    let base = Graph::new(rows * cols, edges)?;
    let max_degree = base.max_degree();
    let kind = match kind {
        LatticeKind::Square => HardwareKind::SquareLattice { rows, cols },
        LatticeKind::Extended => HardwareKind::ExtendedGrid { rows, cols },
    };
    Ok(HardwareGraph {
        base,
        kind,
        max_degree,
    })
}
