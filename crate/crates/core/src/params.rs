//! Parameter setting for the embedded Ising problem.
//!
//! Given a valid [`MinorEmbedding`] of the logical graph and the logical
//! [`IsingProblem`], every physical qubit `i_k ∈ T_i` receives a share
//! `h'_{i_k}` of the logical bias (shares sum to `h_i`), every coupler
//! carrying a logical edge keeps `J_ij`, and every tree edge of `T_i` gets a
//! ferromagnetic strength `F < 0` large enough that all ground states keep
//! each tree aligned.
//!
//! Two sufficient bounds are provided:
//! - [`set_params_easy`]: `F < −(|h_i| + Σ_j |J_ij|)`, any bias split.
//! - [`set_params_tight`]: bias placed where the original edges attach,
//!   leaves discounted by `C_i / l_i`, and `F < −(l_i − 1)/l_i · C_i`, where
//!   `C_i = Σ_j |J_ij| − |h_i| ≥ 0` (see [`preprocess_fix`]).

use std::collections::BTreeMap;

use crate::embedding::MinorEmbedding;
use crate::error::{Error, Result};
use crate::model::{Graph, IsingProblem, SpinConfig};

/// Tolerance for the bias-conservation and custom-split sum checks.
pub const SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum ChainStrengthPolicy {
    /// `F = −(|h_i| + Σ|J_ij|) − margin`.
    Easy { margin: Option<f64> },
    /// `F = −(l_i − 1)/l_i · C_i − margin`.
    Tight { margin: Option<f64> },
    /// `F = −(l_i − 1)/l_i · C_i − g_i / 2`, one `g_i > 0` per logical vertex.
    GapTargeted { gaps: Vec<f64> },
}

/// Margin used when a policy leaves it unspecified: `1e−6 · max(1, bound)`.
pub fn default_margin(bound: f64) -> f64 {
    1e-6 * bound.max(1.0)
}

/// Caller-supplied chain strengths for [`set_params_custom_split`].
#[derive(Debug, Clone, PartialEq)]
pub enum ChainStrengths {
    Uniform(f64),
    PerVertex(Vec<f64>),
    /// Keyed by hardware coupler `(a, b)`, `a < b`.
    PerEdge(BTreeMap<(usize, usize), f64>),
}

/// `C_i = Σ_{j∈nbr(i)} |J_ij| − |h_i|`.
pub fn compute_c(p: &IsingProblem, i: usize) -> f64 {
    abs_coupling_sum(p, i) - p.h()[i].abs()
}

fn abs_coupling_sum(p: &IsingProblem, i: usize) -> f64 {
    p.couplings(i).map(|(_, j)| j.abs()).sum()
}

/// Magnitude of the easy bound `|h_i| + Σ_j |J_ij|`.
pub fn easy_bound(p: &IsingProblem, i: usize) -> f64 {
    p.h()[i].abs() + abs_coupling_sum(p, i)
}

/// Magnitude of the tight bound `(l_i − 1)/l_i · C_i`.
pub fn tight_bound(e: &MinorEmbedding, p: &IsingProblem, i: usize) -> f64 {
    let l = e.leaf_count(i) as f64;
    (l - 1.0) / l * compute_c(p, i)
}

/// `sign(0) = +1`.
fn sign(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Ising problem living on the qubits of an embedding, with the chain and
/// original-edge structure kept alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedIsing {
    problem: IsingProblem,
    physical: Vec<usize>,
    chain_edges: Vec<Vec<((usize, usize), f64)>>,
    original_edges: Vec<((usize, usize), f64)>,
    offset: f64,
    gap_targets: Option<Vec<f64>>,
    source: MinorEmbedding,
}

/// Sorted hardware vertices used by `e` and the embedded graph on them.
fn embedded_graph(e: &MinorEmbedding) -> Result<(Vec<usize>, Graph)> {
    let mut physical: Vec<usize> = e.trees().iter().flatten().copied().collect();
    physical.sort_unstable();
    let idx = |v: usize| physical.binary_search(&v).expect("tree vertex is physical");
    let mut edges = Vec::new();
    for i in 0..e.logical().num_vertices() {
        edges.extend(e.tree_edges(i).iter().map(|&(a, b)| (idx(a), idx(b))));
    }
    edges.extend(e.edge_assignment().iter().map(|&(a, b)| (idx(a), idx(b))));
    let graph = Graph::new(physical.len(), edges)?;
    Ok((physical, graph))
}

impl EmbeddedIsing {
    /// `bias[v]` is indexed by hardware vertex; `strength(i, edge)` gives the
    /// chain strength of each tree edge.
    fn assemble(
        e: &MinorEmbedding,
        p: &IsingProblem,
        bias: &BTreeMap<usize, f64>,
        strength: impl Fn(usize, (usize, usize)) -> f64,
        gap_targets: Option<Vec<f64>>,
    ) -> Result<Self> {
        let (physical, graph) = embedded_graph(e)?;
        let idx = |v: usize| physical.binary_search(&v).expect("tree vertex is physical");
        let h: Vec<f64> = physical.iter().map(|v| bias[v]).collect();
        let mut j = vec![0.0; graph.num_edges()];
        let mut chain_edges = Vec::with_capacity(e.logical().num_vertices());
        let mut offset = 0.0;
        for i in 0..e.logical().num_vertices() {
            let mut chain = Vec::new();
            for &edge in e.tree_edges(i) {
                let f = strength(i, edge);
                if !(f.is_finite() && f < 0.0) {
                    return Err(Error::NonNegativeChainStrength {
                        u: edge.0,
                        v: edge.1,
                        value: f,
                    });
                }
                let k = graph
                    .edge_index(idx(edge.0), idx(edge.1))
                    .expect("tree edge");
                j[k] = f;
                offset += f;
                chain.push((edge, f));
            }
            chain_edges.push(chain);
        }
        let mut original_edges = Vec::with_capacity(e.logical().num_edges());
        for (&coupler, &jl) in e.edge_assignment().iter().zip(p.j()) {
            let k = graph
                .edge_index(idx(coupler.0), idx(coupler.1))
                .expect("assigned coupler");
            j[k] = jl;
            original_edges.push((coupler, jl));
        }
        Ok(Self {
            problem: IsingProblem::new(graph, h, j)?,
            physical,
            chain_edges,
            original_edges,
            offset,
            gap_targets,
            source: e.clone(),
        })
    }

    /// Reattaches an embedded problem (e.g. one read from disk) to its
    /// embedding. Chain strengths and original couplings are read back from
    /// the problem's couplings.
    pub fn from_problem(
        source: MinorEmbedding,
        problem: IsingProblem,
        gap_targets: Option<Vec<f64>>,
    ) -> Result<Self> {
        source.ensure_valid()?;
        let (physical, graph) = embedded_graph(&source)?;
        if &graph != problem.graph() {
            return Err(Error::InvalidParameter(
                "embedded problem graph does not match the embedding".into(),
            ));
        }
        let idx = |v: usize| physical.binary_search(&v).expect("tree vertex is physical");
        let mut offset = 0.0;
        let chain_edges = (0..source.logical().num_vertices())
            .map(|i| {
                source
                    .tree_edges(i)
                    .iter()
                    .map(|&edge| {
                        let f = problem
                            .coupling(idx(edge.0), idx(edge.1))
                            .expect("tree edge");
                        offset += f;
                        (edge, f)
                    })
                    .collect()
            })
            .collect();
        let original_edges = source
            .edge_assignment()
            .iter()
            .map(|&c| (c, problem.coupling(idx(c.0), idx(c.1)).expect("coupler")))
            .collect();
        if let Some(g) = &gap_targets {
            check_gaps(g, source.logical().num_vertices())?;
        }
        Ok(Self {
            problem,
            physical,
            chain_edges,
            original_edges,
            offset,
            gap_targets,
            source,
        })
    }

    /// The embedded problem; vertex `k` is hardware qubit `physical()[k]`.
    pub fn problem(&self) -> &IsingProblem {
        &self.problem
    }

    pub fn physical(&self) -> &[usize] {
        &self.physical
    }

    pub fn index_of(&self, hardware_vertex: usize) -> Option<usize> {
        self.physical.binary_search(&hardware_vertex).ok()
    }

    pub fn bias(&self, hardware_vertex: usize) -> Option<f64> {
        self.index_of(hardware_vertex).map(|k| self.problem.h()[k])
    }

    /// Tree edges of `T_i` with their strengths.
    pub fn chain_edges(&self, i: usize) -> &[((usize, usize), f64)] {
        &self.chain_edges[i]
    }

    /// Coupler and `J` per logical edge, aligned with the logical edges.
    pub fn original_edges(&self) -> &[((usize, usize), f64)] {
        &self.original_edges
    }

    /// `Σ F` over every tree edge.
    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn gap_targets(&self) -> Option<&[f64]> {
        self.gap_targets.as_deref()
    }

    pub fn source(&self) -> &MinorEmbedding {
        &self.source
    }

    /// Whether every tree edge joins equal spins in `s` (embedded indexing).
    pub fn chains_aligned(&self, s: &SpinConfig) -> bool {
        self.chain_edges.iter().flatten().all(|&((a, b), _)| {
            let (a, b) = (self.index_of(a).unwrap(), self.index_of(b).unwrap());
            s.get(a) == s.get(b)
        })
    }

    /// Logical configuration read off aligned trees; `None` if any tree is
    /// misaligned.
    pub fn project(&self, s: &SpinConfig) -> Option<SpinConfig> {
        if !self.chains_aligned(s) {
            return None;
        }
        let spins = self
            .source
            .trees()
            .iter()
            .map(|t| s.get(self.index_of(t[0]).unwrap()))
            .collect();
        Some(SpinConfig::new(spins).expect("projected spins are ±1"))
    }

    /// Embedded configuration with every tree set to the logical spin.
    pub fn expand(&self, logical: &SpinConfig) -> SpinConfig {
        let mut spins = vec![1; self.physical.len()];
        for (i, t) in self.source.trees().iter().enumerate() {
            for &v in t {
                spins[self.index_of(v).unwrap()] = logical.get(i);
            }
        }
        SpinConfig::new(spins).expect("spins are ±1")
    }

    /// `Σ_{k ∈ T_i} h'_{i_k}` per logical vertex.
    pub fn bias_sums(&self) -> Vec<f64> {
        self.source
            .trees()
            .iter()
            .map(|t| t.iter().map(|&v| self.bias(v).unwrap()).sum())
            .collect()
    }
}

fn check_problem_matches(e: &MinorEmbedding, p: &IsingProblem) -> Result<()> {
    e.ensure_valid()?;
    if e.logical() != p.graph() {
        return Err(Error::InvalidParameter(
            "problem graph differs from the embedding's logical graph".into(),
        ));
    }
    Ok(())
}

fn check_margin(margin: Option<f64>) -> Result<()> {
    match margin {
        Some(m) if !(m.is_finite() && m > 0.0) => Err(Error::InvalidParameter(format!(
            "margin must be positive and finite, got {m}"
        ))),
        _ => Ok(()),
    }
}

fn check_gaps(gaps: &[f64], n: usize) -> Result<()> {
    if gaps.len() != n {
        return Err(Error::LengthMismatch {
            what: "gap targets",
            expected: n,
            found: gaps.len(),
        });
    }
    if let Some(g) = gaps.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "gap targets must be positive, got {g}"
        )));
    }
    Ok(())
}

/// Dispatches on the policy.
pub fn set_params(
    e: &MinorEmbedding,
    p: &IsingProblem,
    policy: &ChainStrengthPolicy,
) -> Result<EmbeddedIsing> {
    match policy {
        ChainStrengthPolicy::Easy { margin } => set_params_easy(e, p, *margin),
        _ => set_params_tight(e, p, policy),
    }
}

/// Easy bound with the logical bias split uniformly over the leaves of each
/// tree (a singleton carries all of it).
pub fn set_params_easy(
    e: &MinorEmbedding,
    p: &IsingProblem,
    margin: Option<f64>,
) -> Result<EmbeddedIsing> {
    check_problem_matches(e, p)?;
    check_margin(margin)?;
    let n = p.num_vertices();
    let mut bias = BTreeMap::new();
    let mut strengths = Vec::with_capacity(n);
    for i in 0..n {
        let leaves = e.leaves(i);
        let share = p.h()[i] / leaves.len() as f64;
        for &v in e.tree(i) {
            bias.insert(v, 0.0);
        }
        for &v in &leaves {
            bias.insert(v, share);
        }
        let bound = easy_bound(p, i);
        strengths.push(-bound - margin.unwrap_or_else(|| default_margin(bound)));
    }
    EmbeddedIsing::assemble(e, p, &bias, |i, _| strengths[i], None)
}

/// `Σ |J_ij|` over logical edges attached at each qubit of `T_i`.
fn attached_weight(e: &MinorEmbedding, p: &IsingProblem, i: usize) -> BTreeMap<usize, f64> {
    let mut w: BTreeMap<usize, f64> = e.tree(i).iter().map(|&v| (v, 0.0)).collect();
    for (phys, _, k) in e.attachments(i) {
        *w.get_mut(&phys).expect("attachment inside tree") += p.j()[k].abs();
    }
    w
}

/// Tight bound. Requires `C_i ≥ 0` for every logical vertex.
pub fn set_params_tight(
    e: &MinorEmbedding,
    p: &IsingProblem,
    policy: &ChainStrengthPolicy,
) -> Result<EmbeddedIsing> {
    check_problem_matches(e, p)?;
    let n = p.num_vertices();
    let negative: Vec<usize> = (0..n).filter(|&i| compute_c(p, i) < 0.0).collect();
    if !negative.is_empty() {
        return Err(Error::NegativeSlack(negative));
    }
    let gap_targets = match policy {
        ChainStrengthPolicy::Tight { margin } => {
            check_margin(*margin)?;
            None
        }
        ChainStrengthPolicy::GapTargeted { gaps } => {
            check_gaps(gaps, n)?;
            Some(gaps.clone())
        }
        ChainStrengthPolicy::Easy { .. } => {
            return Err(Error::InvalidParameter(
                "easy policy passed to the tight parameter setter".into(),
            ))
        }
    };

    let split = leaf_uniform_split(e, p);
    let bias = split_bias(e, p, &split);
    let strengths: Vec<f64> = (0..n)
        .map(|i| {
            let bound = tight_bound(e, p, i);
            match policy {
                ChainStrengthPolicy::Tight { margin } => {
                    -bound - margin.unwrap_or_else(|| default_margin(bound))
                }
                ChainStrengthPolicy::GapTargeted { gaps } => -bound - gaps[i] / 2.0,
                ChainStrengthPolicy::Easy { .. } => unreachable!(),
            }
        })
        .collect();
    EmbeddedIsing::assemble(e, p, &bias, |i, _| strengths[i], gap_targets)
}

/// The split of `C_i` used by the tight setter: `C_i / l_i` on every leaf
/// of `T_i`, zero elsewhere. Keys are `(logical vertex, hardware vertex)`.
pub fn leaf_uniform_split(e: &MinorEmbedding, p: &IsingProblem) -> BTreeMap<(usize, usize), f64> {
    let mut split = BTreeMap::new();
    for i in 0..p.num_vertices() {
        let leaves = e.leaves(i);
        let share = compute_c(p, i) / leaves.len() as f64;
        for &v in e.tree(i) {
            split.insert((i, v), 0.0);
        }
        for v in leaves {
            split.insert((i, v), share);
        }
    }
    split
}

/// `h'_{i_k} = sign(h_i) (Σ_{attached at i_k} |J_ij| − split[i, i_k])`.
fn split_bias(
    e: &MinorEmbedding,
    p: &IsingProblem,
    split: &BTreeMap<(usize, usize), f64>,
) -> BTreeMap<usize, f64> {
    let mut bias = BTreeMap::new();
    for i in 0..p.num_vertices() {
        let s = sign(p.h()[i]);
        for (v, w) in attached_weight(e, p, i) {
            let share = split.get(&(i, v)).copied().unwrap_or(0.0);
            bias.insert(v, s * (w - share));
        }
    }
    bias
}

/// Generalized split: `split[(i, i_k)]` distributes `C_i` over the qubits
/// of `T_i` (missing entries are zero) and the chain strengths are taken
/// verbatim. No sufficiency guarantee; verify the result.
pub fn set_params_custom_split(
    e: &MinorEmbedding,
    p: &IsingProblem,
    split: &BTreeMap<(usize, usize), f64>,
    strengths: &ChainStrengths,
) -> Result<EmbeddedIsing> {
    check_problem_matches(e, p)?;
    let n = p.num_vertices();
    for &(i, v) in split.keys() {
        if i >= n || !e.tree(i).contains(&v) {
            return Err(Error::InvalidParameter(format!(
                "split entry ({i}, {v}) is not a qubit of that tree"
            )));
        }
    }
    for i in 0..n {
        let sum: f64 = e
            .tree(i)
            .iter()
            .map(|&v| split.get(&(i, v)).copied().unwrap_or(0.0))
            .sum();
        let expected = compute_c(p, i);
        if (sum - expected).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidSplit {
                vertex: i,
                sum,
                expected,
            });
        }
    }
    if let ChainStrengths::PerVertex(v) = strengths {
        if v.len() != n {
            return Err(Error::LengthMismatch {
                what: "chain strengths",
                expected: n,
                found: v.len(),
            });
        }
    }
    let bias = split_bias(e, p, split);
    EmbeddedIsing::assemble(
        e,
        p,
        &bias,
        |i, edge| match strengths {
            ChainStrengths::Uniform(f) => *f,
            ChainStrengths::PerVertex(v) => v[i],
            ChainStrengths::PerEdge(m) => m.get(&edge).copied().unwrap_or(f64::NAN),
        },
        None,
    )
}

/// Per-vertex summary of a parameterization.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexParams {
    pub vertex: usize,
    pub c: f64,
    pub leaves: usize,
    pub tree_size: usize,
    /// Strongest (most negative) chain strength on the tree, if any edges.
    pub strength: Option<f64>,
}

pub fn vertex_params(emb: &EmbeddedIsing, p: &IsingProblem) -> Vec<VertexParams> {
    let e = emb.source();
    (0..p.num_vertices())
        .map(|i| VertexParams {
            vertex: i,
            c: compute_c(p, i),
            leaves: e.leaf_count(i),
            tree_size: e.tree(i).len(),
            strength: emb.chain_edges(i).iter().map(|&(_, f)| f).reduce(f64::min),
        })
        .collect()
}

/// Outcome of fixing vertices whose bias dominates all their couplings.
#[derive(Debug, Clone, PartialEq)]
pub struct Preprocessing {
    /// Forced spins, by original vertex.
    pub fixed: BTreeMap<usize, i8>,
    /// Remaining problem with fixed spins folded into neighbor biases;
    /// residual vertex `k` is original vertex `residual_vertices[k]`.
    pub residual: IsingProblem,
    pub residual_vertices: Vec<usize>,
    /// Energy contributed by the fixed spins, so that
    /// `E(s) = constant + E_residual(s restricted)` whenever `s` agrees with
    /// the fixed spins.
    pub constant: f64,
}

impl Preprocessing {
    /// Full configuration from a residual one plus the fixed spins.
    pub fn lift(&self, residual: &SpinConfig) -> SpinConfig {
        let n = self.fixed.len() + self.residual_vertices.len();
        let mut spins = vec![1; n];
        for (&v, &s) in &self.fixed {
            spins[v] = s;
        }
        for (k, &v) in self.residual_vertices.iter().enumerate() {
            spins[v] = residual.get(k);
        }
        SpinConfig::new(spins).expect("spins are ±1")
    }
}

/// Repeatedly fixes any vertex with `C_i < 0` to `−sign(h_i)`, folding
/// `J_ij s_i` into each remaining neighbor's bias, until every remaining
/// vertex has `C_i ≥ 0`. Lowest index first each round.
pub fn preprocess_fix(p: &IsingProblem) -> Result<Preprocessing> {
    let n = p.num_vertices();
    let mut h = p.h().to_vec();
    let mut active = vec![true; n];
    let mut fixed = BTreeMap::new();
    let mut constant = 0.0;
    loop {
        let next = (0..n).find(|&i| {
            active[i] && {
                let coupled: f64 = p
                    .couplings(i)
                    .filter(|&(j, _)| active[j])
                    .map(|(_, jv)| jv.abs())
                    .sum();
                coupled - h[i].abs() < 0.0
            }
        });
        let Some(i) = next else { break };
        // C_i < 0 implies |h_i| > 0
        let s: i8 = if h[i] > 0.0 { -1 } else { 1 };
        active[i] = false;
        fixed.insert(i, s);
        constant += h[i] * f64::from(s);
        for (j, jv) in p.couplings(i) {
            if active[j] {
                h[j] += jv * f64::from(s);
            }
        }
    }
    let residual_vertices: Vec<usize> = (0..n).filter(|&i| active[i]).collect();
    let graph = p.graph().induced(&residual_vertices)?;
    let rh = residual_vertices.iter().map(|&v| h[v]).collect();
    let rj = graph
        .edges()
        .iter()
        .map(|&(a, b)| {
            p.coupling(residual_vertices[a], residual_vertices[b])
                .expect("induced edge")
        })
        .collect();
    Ok(Preprocessing {
        fixed,
        residual: IsingProblem::new(graph, rh, rj)?,
        residual_vertices,
        constant,
    })
}
