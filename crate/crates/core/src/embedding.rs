//! Minor-embeddings of a logical graph into a hardware graph.
//!
//! Each logical vertex `i` owns a tree `T_i` of hardware vertices (its
//! chain). Each logical edge `ij` is carried by one hardware coupler with one
//! endpoint in `T_i` and the other in `T_j`; that choice is stored
//! explicitly per edge so parameter setting is reproducible.

use std::collections::VecDeque;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Graph, HardwareGraph};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyTree {
        vertex: usize,
    },
    HardwareVertexOutOfRange {
        vertex: usize,
        hardware_vertex: usize,
    },
    SharedHardwareVertex {
        hardware_vertex: usize,
        first: usize,
        second: usize,
    },
    TreeEdgeNotCoupler {
        vertex: usize,
        edge: (usize, usize),
    },
    TreeEdgeOutsideTree {
        vertex: usize,
        edge: (usize, usize),
    },
    TreeDisconnected {
        vertex: usize,
    },
    TreeHasCycle {
        vertex: usize,
    },
    AssignmentNotCoupler {
        edge: (usize, usize),
        coupler: (usize, usize),
    },
    AssignmentOutsideTrees {
        edge: (usize, usize),
        coupler: (usize, usize),
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyTree { vertex } => write!(f, "logical vertex {vertex}: tree empty"),
            Violation::HardwareVertexOutOfRange {
                vertex,
                hardware_vertex,
            } => write!(
                f,
                "logical vertex {vertex}: hardware vertex {hardware_vertex} out of range"
            ),
            Violation::SharedHardwareVertex {
                hardware_vertex,
                first,
                second,
            } => write!(
                f,
                "hardware vertex {hardware_vertex} shared by logical vertices {first} and {second}"
            ),
            Violation::TreeEdgeNotCoupler { vertex, edge } => write!(
                f,
                "logical vertex {vertex}: tree edge {}-{} is not a hardware coupler",
                edge.0, edge.1
            ),
            Violation::TreeEdgeOutsideTree { vertex, edge } => write!(
                f,
                "logical vertex {vertex}: tree edge {}-{} leaves the tree",
                edge.0, edge.1
            ),
            Violation::TreeDisconnected { vertex } => {
                write!(f, "logical vertex {vertex}: tree disconnected")
            }
            Violation::TreeHasCycle { vertex } => {
                write!(f, "logical vertex {vertex}: tree edges contain a cycle")
            }
            Violation::AssignmentNotCoupler { edge, coupler } => write!(
                f,
                "logical edge {}-{}: assigned {}-{} is not a hardware coupler",
                edge.0, edge.1, coupler.0, coupler.1
            ),
            Violation::AssignmentOutsideTrees { edge, coupler } => write!(
                f,
                "logical edge {}-{}: assigned {}-{} does not join the two trees",
                edge.0, edge.1, coupler.0, coupler.1
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingClass {
    /// Every tree is a single hardware vertex.
    Subgraph,
    /// Every tree is a path.
    TopologicalMinor,
    GeneralMinor,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinorEmbedding {
    logical: Graph,
    hardware: Graph,
    trees: Vec<Vec<usize>>,
    tree_edges: Vec<Vec<(usize, usize)>>,
    // aligned with logical.edges(): for (i, j), i < j, (endpoint in T_i, endpoint in T_j)
    edge_assignment: Vec<(usize, usize)>,
}

fn norm(e: (usize, usize)) -> (usize, usize) {
    (e.0.min(e.1), e.0.max(e.1))
}

impl MinorEmbedding {
    /// Assembles an embedding without checking the minor-embedding
    /// invariants; call [`MinorEmbedding::validate`] for that. Only the
    /// shape (one tree per logical vertex, one coupler per logical edge) is
    /// checked here.
    pub fn from_parts(
        logical: Graph,
        hardware: Graph,
        trees: Vec<Vec<usize>>,
        tree_edges: Vec<Vec<(usize, usize)>>,
        edge_assignment: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let n = logical.num_vertices();
        if trees.len() != n {
            return Err(Error::LengthMismatch {
                what: "trees",
                expected: n,
                found: trees.len(),
            });
        }
        if tree_edges.len() != n {
            return Err(Error::LengthMismatch {
                what: "tree edges",
                expected: n,
                found: tree_edges.len(),
            });
        }
        if edge_assignment.len() != logical.num_edges() {
            return Err(Error::LengthMismatch {
                what: "edge assignment",
                expected: logical.num_edges(),
                found: edge_assignment.len(),
            });
        }
        let trees = trees
            .into_iter()
            .map(|mut t| {
                t.sort_unstable();
                t
            })
            .collect();
        let tree_edges = tree_edges
            .into_iter()
            .map(|es| {
                let mut es: Vec<_> = es.into_iter().map(norm).collect();
                es.sort_unstable();
                es
            })
            .collect();
        Ok(Self {
            logical,
            hardware,
            trees,
            tree_edges,
            edge_assignment,
        })
    }

    /// Embedding of `g` into itself with singleton trees.
    pub fn identity(g: &Graph) -> Self {
        let n = g.num_vertices();
        Self {
            logical: g.clone(),
            hardware: g.clone(),
            trees: (0..n).map(|i| vec![i]).collect(),
            tree_edges: vec![Vec::new(); n],
            edge_assignment: g.edges().to_vec(),
        }
    }

    pub fn logical(&self) -> &Graph {
        &self.logical
    }

    pub fn hardware(&self) -> &Graph {
        &self.hardware
    }

    pub fn tree(&self, i: usize) -> &[usize] {
        &self.trees[i]
    }

    pub fn trees(&self) -> &[Vec<usize>] {
        &self.trees
    }

    pub fn tree_edges(&self, i: usize) -> &[(usize, usize)] {
        &self.tree_edges[i]
    }

    /// Couplers carrying the logical edges, aligned with
    /// `logical().edges()`; each is `(endpoint in T_i, endpoint in T_j)`
    /// for logical edge `(i, j)` with `i < j`.
    pub fn edge_assignment(&self) -> &[(usize, usize)] {
        &self.edge_assignment
    }

    /// The coupler for logical edge `ij`, oriented as
    /// `(endpoint in T_i, endpoint in T_j)`.
    pub fn assignment(&self, i: usize, j: usize) -> Option<(usize, usize)> {
        let k = self.logical.edge_index(i, j)?;
        let (a, b) = self.edge_assignment[k];
        Some(if i < j { (a, b) } else { (b, a) })
    }

    /// Total number of physical qubits used.
    pub fn num_physical(&self) -> usize {
        self.trees.iter().map(Vec::len).sum()
    }

    /// Logical owner of each hardware vertex (first owner if trees overlap).
    pub fn owners(&self) -> Vec<Option<usize>> {
        let mut owner = vec![None; self.hardware.num_vertices()];
        for (i, t) in self.trees.iter().enumerate() {
            for &v in t {
                if v < owner.len() && owner[v].is_none() {
                    owner[v] = Some(i);
                }
            }
        }
        owner
    }

    /// Original-edge attachments of `T_i`: `(physical endpoint in T_i,
    /// logical neighbor j, logical edge index)` for every `ij ∈ E(G)`.
    pub fn attachments(&self, i: usize) -> Vec<(usize, usize, usize)> {
        self.logical
            .incident(i)
            .iter()
            .map(|&(j, k)| {
                let (a, b) = self.edge_assignment[k];
                let p = if i < j { a } else { b };
                (p, j, k)
            })
            .collect()
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let hw_n = self.hardware.num_vertices();
        let mut owner: Vec<Option<usize>> = vec![None; hw_n];

        for (i, tree) in self.trees.iter().enumerate() {
            if tree.is_empty() {
                violations.push(Violation::EmptyTree { vertex: i });
            }
            for (k, &v) in tree.iter().enumerate() {
                if v >= hw_n {
                    violations.push(Violation::HardwareVertexOutOfRange {
                        vertex: i,
                        hardware_vertex: v,
                    });
                    continue;
                }
                if k > 0 && tree[k - 1] == v {
                    // listed twice inside one tree
                    violations.push(Violation::SharedHardwareVertex {
                        hardware_vertex: v,
                        first: i,
                        second: i,
                    });
                    continue;
                }
                match owner[v] {
                    Some(first) => violations.push(Violation::SharedHardwareVertex {
                        hardware_vertex: v,
                        first,
                        second: i,
                    }),
                    None => owner[v] = Some(i),
                }
            }
        }

        for (i, tree) in self.trees.iter().enumerate() {
            if tree.is_empty() {
                continue;
            }
            let mut dsu = Dsu::new(tree.len());
            let local = |v: usize| tree.binary_search(&v).ok();
            let mut cycle = false;
            for &(a, b) in &self.tree_edges[i] {
                if a >= hw_n || b >= hw_n || !self.hardware.has_edge(a, b) {
                    violations.push(Violation::TreeEdgeNotCoupler {
                        vertex: i,
                        edge: (a, b),
                    });
                    continue;
                }
                match (local(a), local(b)) {
                    (Some(x), Some(y)) => {
                        if !dsu.union(x, y) {
                            cycle = true;
                        }
                    }
                    _ => violations.push(Violation::TreeEdgeOutsideTree {
                        vertex: i,
                        edge: (a, b),
                    }),
                }
            }
            if cycle {
                violations.push(Violation::TreeHasCycle { vertex: i });
            }
            if dsu.components != 1 {
                violations.push(Violation::TreeDisconnected { vertex: i });
            }
        }

        for (&(i, j), &(a, b)) in self.logical.edges().iter().zip(&self.edge_assignment) {
            if a >= hw_n || b >= hw_n || !self.hardware.has_edge(a, b) {
                violations.push(Violation::AssignmentNotCoupler {
                    edge: (i, j),
                    coupler: (a, b),
                });
            } else if owner[a] != Some(i) || owner[b] != Some(j) {
                violations.push(Violation::AssignmentOutsideTrees {
                    edge: (i, j),
                    coupler: (a, b),
                });
            }
        }

        ValidationReport { violations }
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.is_ok() {
            Ok(())
        } else {
            Err(Error::InvalidEmbedding(report.violations))
        }
    }

    /// Degree of hardware vertex `v` inside the tree edges of `T_i`.
    fn tree_degree(&self, i: usize, v: usize) -> usize {
        self.tree_edges[i]
            .iter()
            .filter(|&&(a, b)| a == v || b == v)
            .count()
    }

    pub fn classify(&self) -> Result<EmbeddingClass> {
        self.ensure_valid()?;
        if self.trees.iter().all(|t| t.len() == 1) {
            return Ok(EmbeddingClass::Subgraph);
        }
        let is_chain = (0..self.trees.len())
            .all(|i| self.trees[i].iter().all(|&v| self.tree_degree(i, v) <= 2));
        Ok(if is_chain {
            EmbeddingClass::TopologicalMinor
        } else {
            EmbeddingClass::GeneralMinor
        })
    }

    /// Leaves of `T_i`: vertices of tree degree at most one. A singleton
    /// tree has its single vertex as its only leaf.
    pub fn leaves(&self, i: usize) -> Vec<usize> {
        self.trees[i]
            .iter()
            .copied()
            .filter(|&v| self.tree_degree(i, v) <= 1)
            .collect()
    }

    pub fn leaf_count(&self, i: usize) -> usize {
        self.leaves(i).len()
    }

    /// Restricts to the logical vertices in `keep` (relabeled `keep[k] → k`),
    /// dropping the other trees and every logical edge touching them.
    pub fn restrict(&self, keep: &[usize]) -> Result<Self> {
        let logical = self.logical.induced(keep)?;
        let trees = keep.iter().map(|&i| self.trees[i].clone()).collect();
        let tree_edges = keep.iter().map(|&i| self.tree_edges[i].clone()).collect();
        let edge_assignment = logical
            .edges()
            .iter()
            .map(|&(a, b)| {
                self.assignment(keep[a], keep[b])
                    .expect("induced edge exists in the source graph")
            })
            .collect();
        Self::from_parts(
            logical,
            self.hardware.clone(),
            trees,
            tree_edges,
            edge_assignment,
        )
    }
}

struct Dsu {
    parent: Vec<usize>,
    components: usize,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            components: n,
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut y = x;
        while self.parent[y] != r {
            let next = self.parent[y];
            self.parent[y] = r;
            y = next;
        }
        r
    }

    /// Returns false if already joined.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        self.components -= 1;
        true
    }
}

/// Breadth-first spanning tree of the hardware subgraph induced by
/// `vertices`, rooted at the smallest vertex. Vertices unreachable from the
/// root get no edges, so a disconnected set fails validation later.
pub fn spanning_tree_edges(hardware: &Graph, vertices: &[usize]) -> Vec<(usize, usize)> {
    let mut sorted = vertices.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let Some(&root) = sorted.first() else {
        return Vec::new();
    };
    let inside = |v: usize| sorted.binary_search(&v).is_ok();
    let mut seen = vec![false; hardware.num_vertices().max(root + 1)];
    let mut queue = VecDeque::from([root]);
    seen[root] = true;
    let mut edges = Vec::new();
    while let Some(u) = queue.pop_front() {
        if u >= hardware.num_vertices() {
            continue;
        }
        for w in hardware.neighbors(u) {
            if inside(w) && !seen[w] {
                seen[w] = true;
                edges.push(norm((u, w)));
                queue.push_back(w);
            }
        }
    }
    edges.sort_unstable();
    edges
}

/// Completes an embedding by choosing, for every logical edge, the
/// lexicographically smallest hardware coupler joining the two trees.
pub fn derive_edge_assignment(
    logical: &Graph,
    hardware: &Graph,
    trees: Vec<Vec<usize>>,
    tree_edges: Vec<Vec<(usize, usize)>>,
) -> Result<MinorEmbedding> {
    let mut owner = vec![None; hardware.num_vertices()];
    for (i, t) in trees.iter().enumerate() {
        for &v in t {
            if v >= owner.len() {
                return Err(Error::VertexOutOfRange {
                    vertex: v,
                    n: owner.len(),
                });
            }
            owner[v] = Some(i);
        }
    }
    // Hardware edges are sorted, so the first hit per logical edge is the
    // smallest id pair.
    let mut chosen: Vec<Option<(usize, usize)>> = vec![None; logical.num_edges()];
    for &(a, b) in hardware.edges() {
        if let (Some(i), Some(j)) = (owner[a], owner[b]) {
            if i == j {
                continue;
            }
            if let Some(k) = logical.edge_index(i, j) {
                if chosen[k].is_none() {
                    chosen[k] = Some(if i < j { (a, b) } else { (b, a) });
                }
            }
        }
    }
    let assignment = logical
        .edges()
        .iter()
        .zip(&chosen)
        .map(|(&(i, j), c)| c.ok_or(Error::NotAnEmbedding(i, j)))
        .collect::<Result<Vec<_>>>()?;
    MinorEmbedding::from_parts(
        logical.clone(),
        hardware.clone(),
        trees,
        tree_edges,
        assignment,
    )
}

pub const GREEDY_ATTEMPTS: usize = 32;

/// Heuristic embedder: places logical vertices in breadth-first order, each
/// as a tree of shortest free paths from a root qubit to the trees of its
/// already-placed neighbors. Deterministic for a given `seed`; may fail on
/// embeddable inputs.
pub fn greedy_chain_embed(
    logical: &Graph,
    hardware: &HardwareGraph,
    seed: u64,
) -> Result<MinorEmbedding> {
    greedy_chain_embed_with(logical, hardware, seed, GREEDY_ATTEMPTS)
}

pub fn greedy_chain_embed_with(
    logical: &Graph,
    hardware: &HardwareGraph,
    seed: u64,
    attempts: usize,
) -> Result<MinorEmbedding> {
    let hw = hardware.graph();
    if logical.num_vertices() > hw.num_vertices() {
        return Err(Error::EmbedFailed { attempts: 0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..attempts {
        if let Some((trees, tree_edges)) = greedy_attempt(logical, hw, &mut rng) {
            let e = derive_edge_assignment(logical, hw, trees, tree_edges)?;
            debug_assert!(e.validate().is_ok());
            return Ok(e);
        }
    }
    Err(Error::EmbedFailed { attempts })
}

fn placement_order(logical: &Graph, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = logical.num_vertices();
    let mut starts: Vec<usize> = (0..n).collect();
    starts.shuffle(rng);
    starts.sort_by_key(|&v| std::cmp::Reverse(logical.degree(v)));
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for s in starts {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut nbrs: Vec<usize> = logical.neighbors(u).filter(|&w| !seen[w]).collect();
            nbrs.shuffle(rng);
            for w in nbrs {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    order
}

type Trees = (Vec<Vec<usize>>, Vec<Vec<(usize, usize)>>);

fn greedy_attempt(logical: &Graph, hw: &Graph, rng: &mut ChaCha8Rng) -> Option<Trees> {
    let n = logical.num_vertices();
    let hw_n = hw.num_vertices();
    let mut owner: Vec<Option<usize>> = vec![None; hw_n];
    let mut trees = vec![Vec::new(); n];
    let mut tree_edges = vec![Vec::new(); n];
    let mut placed = vec![false; n];

    for v in placement_order(logical, rng) {
        let targets: Vec<usize> = logical.neighbors(v).filter(|&u| placed[u]).collect();
        let mut free: Vec<usize> = (0..hw_n).filter(|&x| owner[x].is_none()).collect();
        if free.is_empty() {
            return None;
        }
        free.shuffle(rng);

        let (root, parent, hits) = if targets.is_empty() {
            // Fresh component: take the free qubit with most free neighbors.
            let root = *free
                .iter()
                .max_by_key(|&&x| hw.neighbors(x).filter(|&y| owner[y].is_none()).count())?;
            (root, Vec::new(), Vec::new())
        } else {
            let mut best: Option<(usize, usize, Vec<usize>, Vec<usize>)> = None;
            for &r in &free {
                let Some((cost, parent, hits)) = route(hw, &owner, r, &targets) else {
                    continue;
                };
                if best.as_ref().is_none_or(|b| cost < b.0) {
                    best = Some((cost, r, parent, hits));
                }
            }
            let (_, root, parent, hits) = best?;
            (root, parent, hits)
        };

        let mut members = vec![root];
        let mut edges = Vec::new();
        owner[root] = Some(v);
        for mut x in hits {
            while owner[x].is_none() {
                owner[x] = Some(v);
                members.push(x);
                let p = parent[x];
                edges.push(norm((x, p)));
                x = p;
            }
        }
        members.sort_unstable();
        edges.sort_unstable();
        trees[v] = members;
        tree_edges[v] = edges;
        placed[v] = true;
    }
    Some((trees, tree_edges))
}

/// BFS from `root` through free qubits. For each target tree, finds the
/// nearest free qubit adjacent to it. Returns total distance, the BFS
/// parent array and the chosen qubit per target.
fn route(
    hw: &Graph,
    owner: &[Option<usize>],
    root: usize,
    targets: &[usize],
) -> Option<(usize, Vec<usize>, Vec<usize>)> {
    let n = hw.num_vertices();
    let mut dist = vec![usize::MAX; n];
    let mut parent = vec![usize::MAX; n];
    let mut hits: Vec<Option<usize>> = vec![None; targets.len()];
    let mut remaining = targets.len();
    let mut cost = 0;
    dist[root] = 0;
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        for (t, &target) in targets.iter().enumerate() {
            if hits[t].is_none() && hw.neighbors(u).any(|w| owner[w] == Some(target)) {
                hits[t] = Some(u);
                cost += dist[u];
                remaining -= 1;
            }
        }
        if remaining == 0 {
            break;
        }
        for w in hw.neighbors(u) {
            if owner[w].is_none() && dist[w] == usize::MAX {
                dist[w] = dist[u] + 1;
                parent[w] = u;
                queue.push_back(w);
            }
        }
    }
    if remaining > 0 {
        return None;
    }
    let hits = hits
        .into_iter()
        .map(|h| h.expect("all targets reached"))
        .collect();
    Some((cost, parent, hits))
}

/// Random valid embedding for test corpora: grows `n` disjoint random trees
/// in `hardware` until they hold `target_physical` qubits in total (or can
/// grow no further), then keeps each hardware-adjacent pair of trees as a
/// logical edge with probability `edge_probability`, carried by a random
/// joining coupler. Returns `None` when `n` seeds cannot be placed.
pub fn random_embedding<R: Rng + ?Sized>(
    hardware: &Graph,
    n: usize,
    target_physical: usize,
    edge_probability: f64,
    rng: &mut R,
) -> Option<MinorEmbedding> {
    let hw_n = hardware.num_vertices();
    if n == 0 || n > hw_n {
        return None;
    }
    let mut all: Vec<usize> = (0..hw_n).collect();
    all.shuffle(rng);
    let mut owner: Vec<Option<usize>> = vec![None; hw_n];
    let mut trees: Vec<Vec<usize>> = Vec::with_capacity(n);
    for (i, &v) in all.iter().take(n).enumerate() {
        owner[v] = Some(i);
        trees.push(vec![v]);
    }
    let mut tree_edges = vec![Vec::new(); n];
    let mut total = n;
    while total < target_physical {
        // (tree, new qubit, attach point)
        let frontier: Vec<(usize, usize, usize)> = trees
            .iter()
            .enumerate()
            .flat_map(|(i, t)| {
                let owner = &owner;
                t.iter().flat_map(move |&a| {
                    hardware
                        .neighbors(a)
                        .filter(|&b| owner[b].is_none())
                        .map(move |b| (i, b, a))
                })
            })
            .collect();
        let Some(&(i, b, a)) = frontier.choose(rng) else {
            break;
        };
        owner[b] = Some(i);
        trees[i].push(b);
        tree_edges[i].push(norm((a, b)));
        total += 1;
    }

    let mut candidates: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n * n];
    for &(a, b) in hardware.edges() {
        if let (Some(i), Some(j)) = (owner[a], owner[b]) {
            if i != j {
                let (i, j, a, b) = if i < j { (i, j, a, b) } else { (j, i, b, a) };
                candidates[i * n + j].push((a, b));
            }
        }
    }
    let mut edges = Vec::new();
    let mut assignment = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let c = &candidates[i * n + j];
            if !c.is_empty() && rng.gen_bool(edge_probability) {
                edges.push((i, j));
                assignment.push(*c.choose(rng).expect("nonempty"));
            }
        }
    }
    // edges were pushed in lexicographic order, matching Graph's edge order
    let logical = Graph::new(n, edges).expect("pairs are distinct");
    MinorEmbedding::from_parts(logical, hardware.clone(), trees, tree_edges, assignment).ok()
}
