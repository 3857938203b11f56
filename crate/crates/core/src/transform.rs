//! Exact QUBO ⇄ Ising conversion and the two bit ⇄ spin conventions.
//!
//! Two conventions are kept apart on purpose:
//! - [`spins_from_bits`] / [`bits_from_spins`]: `x = 1 ↔ s = +1`, the
//!   variable change relating `Y` and `E`.
//! - [`basis_state_energy`]: `z = 0 ↔ s = +1`, the eigenvalue of the
//!   diagonal Hamiltonian on the computational basis state `|z⟩`.

use crate::error::Result;
use crate::model::{IsingProblem, QuboProblem, SpinConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkDirection {
    /// `Y(x) = offset + scale · E(s)`.
    QuboMaxToIsingMin,
    /// `E(s) = offset + scale · Y(x)`.
    IsingMinToQuboMax,
}

/// Affine relation between the objective of a source problem and the energy
/// (or objective) of its converted form, under `x_i = (s_i + 1) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineLink {
    pub scale: f64,
    pub offset: f64,
    pub direction: LinkDirection,
}

impl AffineLink {
    /// Maps a value of the converted problem back to the source problem.
    pub fn apply(&self, converted_value: f64) -> f64 {
        self.offset + self.scale * converted_value
    }
}

/// `Σ_{j ∈ nbr(i)} J_ij` for every vertex, summed in neighbor order.
fn incident_sums(graph: &crate::model::Graph, j: &[f64]) -> Vec<f64> {
    (0..graph.num_vertices())
        .map(|i| graph.incident(i).iter().map(|&(_, k)| j[k]).sum())
        .collect()
}

/// `h_i = Σ_{j∈nbr(i)} J_ij − 2 c_i`, `J` unchanged.
pub fn qubo_to_ising(q: &QuboProblem) -> Result<(IsingProblem, AffineLink)> {
    let sums = incident_sums(q.graph(), q.j());
    let h = sums.iter().zip(q.c()).map(|(s, c)| s - 2.0 * c).collect();
    let c_total: f64 = q.c().iter().sum();
    let j_total: f64 = q.j().iter().sum();
    let link = AffineLink {
        scale: -0.25,
        offset: 0.5 * c_total - 0.25 * j_total,
        direction: LinkDirection::QuboMaxToIsingMin,
    };
    let p = IsingProblem::new(q.graph().clone(), h, q.j().to_vec())?;
    Ok((p, link))
}

/// `c_i = (Σ_{j∈nbr(i)} J_ij − h_i) / 2`, `J` unchanged.
pub fn ising_to_qubo(p: &IsingProblem) -> Result<(QuboProblem, AffineLink)> {
    let sums = incident_sums(p.graph(), p.j());
    let c = sums.iter().zip(p.h()).map(|(s, h)| 0.5 * (s - h)).collect();
    let h_total: f64 = p.h().iter().sum();
    let j_total: f64 = p.j().iter().sum();
    // At x = 0 (all spins down) Y = 0 and E = ΣJ − Σh.
    let link = AffineLink {
        scale: -4.0,
        offset: j_total - h_total,
        direction: LinkDirection::IsingMinToQuboMax,
    };
    let q = QuboProblem::new(p.graph().clone(), c, p.j().to_vec())?;
    Ok((q, link))
}

pub fn spins_from_bits(x: &[bool]) -> SpinConfig {
    SpinConfig::new(x.iter().map(|&b| if b { 1 } else { -1 }).collect())
        .expect("spins are ±1 by construction")
}

pub fn bits_from_spins(s: &SpinConfig) -> Vec<bool> {
    s.spins().iter().map(|&v| v > 0).collect()
}

/// Eigenvalue of `Σ h_i σᶻ_i + Σ J_ij σᶻ_i σᶻ_j` on `|z_1 … z_n⟩`, i.e. the
/// energy at `s_i = (−1)^{z_i}`.
pub fn basis_state_energy(p: &IsingProblem, z: &[bool]) -> Result<f64> {
    let s = SpinConfig::new(z.iter().map(|&b| if b { -1 } else { 1 }).collect())
        .expect("spins are ±1 by construction");
    p.energy(&s)
}
