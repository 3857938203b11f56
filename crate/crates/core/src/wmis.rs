//! Maximum (weighted) independent set as a QUBO, and its embedded Ising form.

use crate::embedding::{EmbeddingClass, MinorEmbedding};
use crate::error::{Error, Result};
use crate::model::{Graph, IsingProblem, QuboProblem, SpinConfig};
use crate::params::{
    compute_c, leaf_uniform_split, preprocess_fix, set_params_custom_split, tight_bound,
    ChainStrengths, EmbeddedIsing, Preprocessing,
};
use crate::transform::{qubo_to_ising, AffineLink};

#[derive(Debug, Clone, PartialEq)]
pub struct WmisInstance {
    graph: Graph,
    weights: Vec<f64>,
}

impl WmisInstance {
    pub fn new(graph: Graph, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != graph.num_vertices() {
            return Err(Error::LengthMismatch {
                what: "weights",
                expected: graph.num_vertices(),
                found: weights.len(),
            });
        }
        for (vertex, &weight) in weights.iter().enumerate() {
            if !weight.is_finite() {
                return Err(Error::NonFinite("weight"));
            }
            if weight <= 0.0 {
                return Err(Error::NonPositiveWeight { vertex, weight });
            }
        }
        Ok(Self { graph, weights })
    }

    /// All weights 1.
    pub fn unweighted(graph: Graph) -> Self {
        let n = graph.num_vertices();
        Self {
            graph,
            weights: vec![1.0; n],
        }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PenaltyRule {
    /// `J_ij = min(c_i, c_j) + δ`.
    StrictMinPlus(f64),
    /// The same `J` on every edge.
    Uniform(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WmisQubo {
    pub qubo: QuboProblem,
    /// `J_ij > min(c_i, c_j)` on every edge: maximizers are independent sets.
    pub strict: bool,
    /// `J_ij ≥ min(c_i, c_j)` on every edge: `max Y` is the optimum weight.
    pub value_guaranteed: bool,
}

pub fn wmis_to_qubo(w: &WmisInstance, rule: PenaltyRule) -> Result<WmisQubo> {
    let c = &w.weights;
    let j: Vec<f64> = match rule {
        PenaltyRule::StrictMinPlus(delta) => {
            if !(delta.is_finite() && delta > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "strict penalty needs δ > 0, got {delta}"
                )));
            }
            w.graph
                .edges()
                .iter()
                .map(|&(u, v)| c[u].min(c[v]) + delta)
                .collect()
        }
        PenaltyRule::Uniform(value) => vec![value; w.graph.num_edges()],
    };
    let mins = w.graph.edges().iter().map(|&(u, v)| c[u].min(c[v]));
    let strict = mins.clone().zip(&j).all(|(m, &jv)| jv > m);
    let value_guaranteed = mins.zip(&j).all(|(m, &jv)| jv >= m);
    Ok(WmisQubo {
        qubo: QuboProblem::new(w.graph.clone(), c.clone(), j)?,
        strict,
        value_guaranteed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndependentSetCheck {
    pub vertices: Vec<usize>,
    pub independent: bool,
    /// Edges with both endpoints selected.
    pub conflicts: Vec<(usize, usize)>,
    /// Sum of the linear coefficients over the selection.
    pub weight: f64,
}

/// Support of `x` checked for independence in the graph of `q`.
pub fn extract_independent_set(q: &QuboProblem, x: &[bool]) -> Result<IndependentSetCheck> {
    let n = q.num_vertices();
    if x.len() != n {
        return Err(Error::LengthMismatch {
            what: "assignment",
            expected: n,
            found: x.len(),
        });
    }
    let vertices: Vec<usize> = (0..n).filter(|&i| x[i]).collect();
    let conflicts: Vec<(usize, usize)> = q
        .graph()
        .edges()
        .iter()
        .copied()
        .filter(|&(u, v)| x[u] && x[v])
        .collect();
    Ok(IndependentSetCheck {
        weight: vertices.iter().map(|&i| q.c()[i]).sum(),
        independent: conflicts.is_empty(),
        vertices,
        conflicts,
    })
}

/// Embedded unweighted MIS Hamiltonian together with everything needed to
/// decode it.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedMis {
    /// Logical Ising form of the MIS QUBO (all vertices).
    pub logical: IsingProblem,
    pub link: AffineLink,
    /// Vertices forced before embedding (isolated ones join the set).
    pub preprocessing: Preprocessing,
    /// Parameterization of the residual problem on the restricted embedding.
    pub embedded: EmbeddedIsing,
    pub epsilon: f64,
}

impl EmbeddedMis {
    /// Independent set read off an embedded configuration, or `None` if a
    /// chain is broken.
    pub fn decode(&self, s: &SpinConfig) -> Option<Vec<usize>> {
        let residual = self.embedded.project(s)?;
        let full = self.preprocessing.lift(&residual);
        Some((0..full.len()).filter(|&i| full.get(i) > 0).collect())
    }
}

/// Unweighted MIS with `J = 1 + ε` on a chain embedding, all chain
/// strengths `−(1 + ε)`. Vertices with `C_i < 0` are fixed first and their
/// trees dropped.
pub fn build_embedded_mis(g: &Graph, e: &MinorEmbedding, epsilon: f64) -> Result<EmbeddedMis> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "ε must be positive, got {epsilon}"
        )));
    }
    if e.logical() != g {
        return Err(Error::InvalidParameter(
            "embedding is for a different logical graph".into(),
        ));
    }
    e.ensure_valid()?;
    if e.classify()? == EmbeddingClass::GeneralMinor {
        return Err(Error::NotChainEmbedding);
    }
    let j = 1.0 + epsilon;
    let wq = wmis_to_qubo(
        &WmisInstance::unweighted(g.clone()),
        PenaltyRule::Uniform(j),
    )?;
    let (logical, link) = qubo_to_ising(&wq.qubo)?;
    let preprocessing = preprocess_fix(&logical)?;
    let residual = &preprocessing.residual;
    let restricted = e.restrict(&preprocessing.residual_vertices)?;
    for i in 0..residual.num_vertices() {
        if compute_c(residual, i) >= 0.0 && tight_bound(&restricted, residual, i) >= j {
            return Err(Error::InvalidParameter(format!(
                "chain strength −(1+ε) does not exceed the bound for vertex {}",
                preprocessing.residual_vertices[i]
            )));
        }
    }
    let split = leaf_uniform_split(&restricted, residual);
    let embedded =
        set_params_custom_split(&restricted, residual, &split, &ChainStrengths::Uniform(-j))?;
    Ok(EmbeddedMis {
        logical,
        link,
        preprocessing,
        embedded,
        epsilon,
    })
}
