//! JSON problem and embedding files.
//!
//! Output is byte-stable: maps are ordered, struct fields serialize in
//! declaration order and floats use the shortest round-trip decimal.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embedding::{derive_edge_assignment, spanning_tree_edges, MinorEmbedding};
use crate::error::Error;
use crate::model::{
    make_hardware, Graph, HardwareGraph, HardwareKind, IsingProblem, LatticeKind, QuboProblem,
};
use crate::params::{EmbeddedIsing, Preprocessing};
use crate::transform::{AffineLink, LinkDirection};
use crate::wmis::WmisInstance;

use super::CliError;

type Assignments = BTreeMap<(usize, usize), (usize, usize)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemType {
    Ising,
    Qubo,
    Wmis,
}

impl ProblemType {
    pub fn name(self) -> &'static str {
        match self {
            ProblemType::Ising => "ising",
            ProblemType::Qubo => "qubo",
            ProblemType::Wmis => "wmis",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineBlock {
    pub scale: f64,
    pub offset: f64,
    /// `qubo_max_to_ising_min`: `Y = offset + scale·E`;
    /// `ising_min_to_qubo_max`: `E = offset + scale·Y`.
    pub direction: String,
}

impl From<AffineLink> for AffineBlock {
    fn from(link: AffineLink) -> Self {
        let direction = match link.direction {
            LinkDirection::QuboMaxToIsingMin => "qubo_max_to_ising_min",
            LinkDirection::IsingMinToQuboMax => "ising_min_to_qubo_max",
        };
        Self {
            scale: link.scale,
            offset: link.offset,
            direction: direction.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainEdgeEntry {
    pub vertex: usize,
    pub edge: (usize, usize),
    pub strength: f64,
}

/// Attached to embedded problems written by `set-params` and `pipeline`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedMetadata {
    /// `Σ F` over all chain edges: `min E_emb = min E + offset`.
    pub offset: f64,
    pub policy: String,
    /// Embedded vertex `k` is hardware vertex `physical[k]`.
    pub physical: Vec<usize>,
    pub chain_edges: Vec<ChainEdgeEntry>,
    pub embedding: EmbeddingFile,
    /// Spins fixed by preprocessing, by original vertex.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub fixed: BTreeMap<usize, i8>,
    /// Original vertex of each logical vertex of the embedding, when
    /// preprocessing removed some.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_vertices: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gaps: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    #[serde(rename = "type")]
    pub kind: ProblemType,
    pub n: usize,
    #[serde(default)]
    pub linear: BTreeMap<usize, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadratic: Option<Vec<(usize, usize, f64)>>,
    /// Graph of a `wmis` problem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<(usize, usize)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub affine: Option<AffineBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<EmbeddedMetadata>,
}

fn input(e: Error) -> CliError {
    CliError::input(e.to_string())
}

impl ProblemFile {
    fn check_triples(&self) -> Result<Vec<(usize, usize, f64)>, CliError> {
        let triples = self.quadratic.clone().unwrap_or_default();
        for &(u, v, _) in &triples {
            if u >= v {
                return Err(CliError::input(format!(
                    "quadratic term [{u}, {v}]: expected u < v"
                )));
            }
        }
        Ok(triples)
    }

    fn expect(&self, kind: ProblemType) -> Result<(), CliError> {
        if self.kind != kind {
            return Err(CliError::input(format!(
                "expected a {} problem, found {}",
                kind.name(),
                self.kind.name()
            )));
        }
        Ok(())
    }

    pub fn to_ising(&self) -> Result<IsingProblem, CliError> {
        self.expect(ProblemType::Ising)?;
        IsingProblem::from_terms(self.n, self.linear.clone(), self.check_triples()?).map_err(input)
    }

    pub fn to_qubo(&self) -> Result<QuboProblem, CliError> {
        self.expect(ProblemType::Qubo)?;
        QuboProblem::from_terms(self.n, self.linear.clone(), self.check_triples()?).map_err(input)
    }

    /// Weights from `linear` (every vertex required), graph from `edges`.
    /// Returns a warning if `quadratic` was present.
    pub fn to_wmis(&self) -> Result<(WmisInstance, Option<String>), CliError> {
        self.expect(ProblemType::Wmis)?;
        let graph = Graph::new(self.n, self.edges.clone().unwrap_or_default()).map_err(input)?;
        let mut weights = Vec::with_capacity(self.n);
        for i in 0..self.n {
            match self.linear.get(&i) {
                Some(&w) => weights.push(w),
                None => return Err(CliError::input(format!("missing weight for vertex {i}"))),
            }
        }
        if let Some(&v) = self.linear.keys().find(|&&v| v >= self.n) {
            return Err(input(Error::VertexOutOfRange {
                vertex: v,
                n: self.n,
            }));
        }
        let warning = self
            .quadratic
            .as_ref()
            .filter(|q| !q.is_empty())
            .map(|_| "quadratic terms are ignored for wmis problems".to_string());
        Ok((WmisInstance::new(graph, weights).map_err(input)?, warning))
    }

    /// Ising, or QUBO converted to Ising.
    pub fn to_ising_like(&self) -> Result<IsingProblem, CliError> {
        match self.kind {
            ProblemType::Ising => self.to_ising(),
            ProblemType::Qubo => Ok(crate::transform::qubo_to_ising(&self.to_qubo()?)
                .map_err(input)?
                .0),
            ProblemType::Wmis => Err(CliError::input(
                "wmis problems must be converted first (convert --to qubo)",
            )),
        }
    }

    pub fn graph(&self) -> Result<Graph, CliError> {
        match self.kind {
            ProblemType::Ising => Ok(self.to_ising()?.graph().clone()),
            ProblemType::Qubo => Ok(self.to_qubo()?.graph().clone()),
            ProblemType::Wmis => Ok(self.to_wmis()?.0.graph().clone()),
        }
    }

    fn from_terms(kind: ProblemType, graph: &Graph, linear: &[f64], quadratic: &[f64]) -> Self {
        Self {
            kind,
            n: graph.num_vertices(),
            linear: linear.iter().copied().enumerate().collect(),
            quadratic: Some(
                graph
                    .edges()
                    .iter()
                    .zip(quadratic)
                    .map(|(&(u, v), &w)| (u, v, w))
                    .collect(),
            ),
            edges: None,
            affine: None,
            metadata: None,
        }
    }

    pub fn from_ising(p: &IsingProblem) -> Self {
        Self::from_terms(ProblemType::Ising, p.graph(), p.h(), p.j())
    }

    pub fn from_qubo(q: &QuboProblem) -> Self {
        Self::from_terms(ProblemType::Qubo, q.graph(), q.c(), q.j())
    }

    pub fn from_wmis(w: &WmisInstance) -> Self {
        Self {
            kind: ProblemType::Wmis,
            n: w.graph().num_vertices(),
            linear: w.weights().iter().copied().enumerate().collect(),
            quadratic: None,
            edges: Some(w.graph().edges().to_vec()),
            affine: None,
            metadata: None,
        }
    }

    /// Embedded problem plus the metadata needed to reload and verify it.
    pub fn from_embedded(
        emb: &EmbeddedIsing,
        policy: &str,
        hardware: &HardwareBlock,
        pre: Option<&Preprocessing>,
    ) -> Self {
        let mut file = Self::from_ising(emb.problem());
        let e = emb.source();
        let chain_edges = (0..e.logical().num_vertices())
            .flat_map(|i| {
                emb.chain_edges(i)
                    .iter()
                    .map(move |&(edge, strength)| ChainEdgeEntry {
                        vertex: i,
                        edge,
                        strength,
                    })
            })
            .collect();
        let reduced = pre.filter(|p| !p.fixed.is_empty());
        file.metadata = Some(EmbeddedMetadata {
            offset: emb.offset(),
            policy: policy.to_string(),
            physical: emb.physical().to_vec(),
            chain_edges,
            embedding: EmbeddingFile::from_embedding(e, hardware.clone()),
            fixed: reduced.map(|p| p.fixed.clone()).unwrap_or_default(),
            residual_vertices: reduced.map(|p| p.residual_vertices.clone()),
            constant: reduced.map(|p| p.constant),
            gaps: emb.gap_targets().map(<[f64]>::to_vec),
        });
        file
    }
}

/// Hardware graph: a named lattice or an explicit edge list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardwareBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cols: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<(usize, usize)>>,
}

pub fn parse_lattice_kind(s: &str) -> Result<LatticeKind, CliError> {
    match s {
        "square" => Ok(LatticeKind::Square),
        "extended" => Ok(LatticeKind::Extended),
        other => Err(CliError::input(format!(
            "unknown hardware kind '{other}' (expected square or extended)"
        ))),
    }
}

impl HardwareBlock {
    /// Full description: kind and dimensions plus the explicit edge list.
    pub fn from_hardware(hw: &HardwareGraph) -> Self {
        let (kind, rows, cols) = match hw.kind() {
            HardwareKind::SquareLattice { rows, cols } => (Some("square"), Some(rows), Some(cols)),
            HardwareKind::ExtendedGrid { rows, cols } => (Some("extended"), Some(rows), Some(cols)),
            HardwareKind::Custom => (None, None, None),
        };
        Self {
            kind: kind.map(String::from),
            rows,
            cols,
            n: Some(hw.graph().num_vertices()),
            edges: Some(hw.graph().edges().to_vec()),
        }
    }

    pub fn to_hardware(&self) -> Result<HardwareGraph, CliError> {
        match self.kind.as_deref() {
            Some(k) if k != "custom" => {
                let kind = parse_lattice_kind(k)?;
                let (Some(rows), Some(cols)) = (self.rows, self.cols) else {
                    return Err(CliError::input("hardware kind needs rows and cols"));
                };
                let hw = make_hardware(kind, rows, cols).map_err(input)?;
                if let Some(edges) = &self.edges {
                    let listed = Graph::new(self.n.unwrap_or(rows * cols), edges.iter().copied())
                        .map_err(input)?;
                    if &listed != hw.graph() {
                        return Err(CliError::input(
                            "hardware edge list disagrees with its kind and dimensions",
                        ));
                    }
                }
                Ok(hw)
            }
            _ => {
                let (Some(n), Some(edges)) = (self.n, &self.edges) else {
                    return Err(CliError::input(
                        "hardware needs either kind/rows/cols or n/edges",
                    ));
                };
                Ok(HardwareGraph::custom(
                    Graph::new(n, edges.iter().copied()).map_err(input)?,
                ))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingFile {
    pub hardware: HardwareBlock,
    pub chains: BTreeMap<usize, Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain_edges: Option<BTreeMap<usize, Vec<(usize, usize)>>>,
    /// Keyed `"u-v"` with `u < v`; value is `[qubit in T_u, qubit in T_v]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_assignment: Option<BTreeMap<String, (usize, usize)>>,
}

fn parse_edge_key(key: &str) -> Result<(usize, usize), CliError> {
    let bad = || {
        CliError::input(format!(
            "edge_assignment key '{key}' is not of the form u-v"
        ))
    };
    let (a, b) = key.split_once('-').ok_or_else(bad)?;
    let u: usize = a.trim().parse().map_err(|_| bad())?;
    let v: usize = b.trim().parse().map_err(|_| bad())?;
    Ok((u, v))
}

impl EmbeddingFile {
    pub fn from_embedding(e: &MinorEmbedding, hardware: HardwareBlock) -> Self {
        let n = e.logical().num_vertices();
        Self {
            hardware,
            chains: (0..n).map(|i| (i, e.tree(i).to_vec())).collect(),
            chain_edges: Some((0..n).map(|i| (i, e.tree_edges(i).to_vec())).collect()),
            edge_assignment: Some(
                e.logical()
                    .edges()
                    .iter()
                    .zip(e.edge_assignment())
                    .map(|(&(u, v), &c)| (format!("{u}-{v}"), c))
                    .collect(),
            ),
        }
    }

    fn trees(&self) -> Result<Vec<Vec<usize>>, CliError> {
        let n = self.chains.len();
        if let Some((&k, _)) = self.chains.iter().find(|(&k, _)| k >= n) {
            return Err(CliError::input(format!(
                "chains must be keyed 0..{n}, found key {k}"
            )));
        }
        Ok(self.chains.values().cloned().collect())
    }

    fn assignments(&self) -> Result<Option<Assignments>, CliError> {
        let Some(map) = &self.edge_assignment else {
            return Ok(None);
        };
        let mut out = BTreeMap::new();
        for (key, &(a, b)) in map {
            let (u, v) = parse_edge_key(key)?;
            let entry = if u < v {
                ((u, v), (a, b))
            } else {
                ((v, u), (b, a))
            };
            if out.insert(entry.0, entry.1).is_some() {
                return Err(CliError::input(format!(
                    "edge_assignment repeats edge {key}"
                )));
            }
        }
        Ok(Some(out))
    }

    /// Logical graph implied by the file alone: one vertex per chain, one
    /// edge per assignment entry.
    pub fn implied_logical(&self) -> Result<Graph, CliError> {
        let edges = self
            .assignments()?
            .map(|m| m.into_keys().collect::<Vec<_>>());
        Graph::new(self.chains.len(), edges.unwrap_or_default()).map_err(input)
    }

    /// Builds and validates the embedding of `logical`. Missing chain edges
    /// come from a breadth-first spanning tree; a missing assignment is
    /// derived deterministically.
    pub fn to_embedding(&self, logical: &Graph) -> Result<MinorEmbedding, CliError> {
        let hw = self.hardware.to_hardware()?;
        let trees = self.trees()?;
        if trees.len() != logical.num_vertices() {
            return Err(CliError::input(format!(
                "embedding has {} chains but the problem has {} vertices",
                trees.len(),
                logical.num_vertices()
            )));
        }
        let tree_edges: Vec<Vec<(usize, usize)>> = match &self.chain_edges {
            Some(map) => (0..trees.len())
                .map(|i| map.get(&i).cloned().unwrap_or_default())
                .collect(),
            None => trees
                .iter()
                .map(|t| spanning_tree_edges(hw.graph(), t))
                .collect(),
        };
        let e =
            match self.assignments()? {
                None => derive_edge_assignment(logical, hw.graph(), trees, tree_edges).map_err(
                    |err| match err {
                        Error::NotAnEmbedding(u, v) => CliError::input(format!(
                            "no hardware coupler joins the chains of logical edge {u}-{v}"
                        )),
                        other => input(other),
                    },
                )?,
                Some(map) => {
                    let mut assignment = Vec::with_capacity(logical.num_edges());
                    for &(u, v) in logical.edges() {
                        match map.get(&(u, v)) {
                            Some(&c) => assignment.push(c),
                            None => {
                                return Err(CliError::input(format!(
                                    "edge_assignment has no entry for logical edge {u}-{v}"
                                )))
                            }
                        }
                    }
                    if let Some((u, v)) = map.keys().find(|&&(u, v)| !logical.has_edge(u, v)) {
                        return Err(CliError::input(format!(
                            "edge_assignment entry {u}-{v} is not a logical edge"
                        )));
                    }
                    MinorEmbedding::from_parts(
                        logical.clone(),
                        hw.graph().clone(),
                        trees,
                        tree_edges,
                        assignment,
                    )
                    .map_err(input)?
                }
            };
        e.ensure_valid().map_err(input)?;
        Ok(e)
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::input(format!("cannot parse {}: {e}", path.display())))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    fs::write(path, to_json(value))
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn problem_round_trip_is_byte_stable() {
        let p = IsingProblem::from_terms(3, [(0, 0.1), (2, -1.5)], [(0, 1, 2.0), (1, 2, 1e-300)])
            .unwrap();
        let text = to_json(&ProblemFile::from_ising(&p));
        let back: ProblemFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_ising().unwrap(), p);
        assert_eq!(to_json(&back), text);
    }

    #[test]
    fn rejects_unordered_triples() {
        let f: ProblemFile =
            serde_json::from_str(r#"{"type":"ising","n":2,"linear":{},"quadratic":[[1,0,1.0]]}"#)
                .unwrap();
        assert_eq!(f.to_ising().unwrap_err().code, 2);
    }

    #[test]
    fn wmis_needs_all_weights_and_warns_on_quadratic() {
        let f: ProblemFile =
            serde_json::from_str(r#"{"type":"wmis","n":2,"linear":{"0":1.0},"edges":[[0,1]]}"#)
                .unwrap();
        assert!(f.to_wmis().is_err());
        let f: ProblemFile = serde_json::from_str(
            r#"{"type":"wmis","n":2,"linear":{"0":1.0,"1":2.0},"edges":[[0,1]],"quadratic":[[0,1,3.0]]}"#,
        )
        .unwrap();
        let (w, warning) = f.to_wmis().unwrap();
        assert_eq!(w.weights(), &[1.0, 2.0]);
        assert!(warning.is_some());
    }

    #[test]
    fn embedding_file_derives_missing_parts() {
        let f: EmbeddingFile = serde_json::from_str(
            r#"{"hardware":{"kind":"square","rows":2,"cols":3},
                "chains":{"0":[0,1,2],"1":[3],"2":[5]}}"#,
        )
        .unwrap();
        let g = Graph::new(3, [(0, 1), (0, 2)]).unwrap();
        let e = f.to_embedding(&g).unwrap();
        assert_eq!(e.tree_edges(0), &[(0, 1), (1, 2)]);
        assert_eq!(e.edge_assignment(), &[(0, 3), (2, 5)]);

        let written = EmbeddingFile::from_embedding(&e, f.hardware.clone());
        assert_eq!(written.implied_logical().unwrap(), g);
        assert_eq!(written.to_embedding(&g).unwrap(), e);
    }

    #[test]
    fn invalid_embedding_lists_violations() {
        let f: EmbeddingFile = serde_json::from_str(
            r#"{"hardware":{"kind":"square","rows":2,"cols":3},
                "chains":{"0":[0,2],"1":[3]},
                "chain_edges":{"0":[]},
                "edge_assignment":{"0-1":[0,3]}}"#,
        )
        .unwrap();
        let err = f.to_embedding(&Graph::path(2)).unwrap_err();
        assert_eq!(err.code, 2);
        assert!(err.message.contains("tree disconnected"), "{}", err.message);
    }

    #[test]
    fn hardware_block_round_trip() {
        let hw = make_hardware(LatticeKind::Extended, 4, 4).unwrap();
        let block = HardwareBlock::from_hardware(&hw);
        assert_eq!(block.edges.as_ref().unwrap().len(), 42);
        assert_eq!(block.to_hardware().unwrap(), hw);
        let custom = HardwareBlock {
            kind: None,
            rows: None,
            cols: None,
            n: Some(3),
            edges: Some(vec![(0, 1), (1, 2)]),
        };
        assert_eq!(custom.to_hardware().unwrap().graph(), &Graph::path(3));
    }
}
