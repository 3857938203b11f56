//! Oracles and generators shared by the integration tests. The oracles
//! evaluate every configuration directly through the model's energy and
//! objective functions, independently of the Gray-code enumerator.

#![allow(dead_code)]

use std::collections::BTreeSet;

use minor_embed::embedding::{random_embedding, MinorEmbedding};
use minor_embed::model::{
    make_hardware, Graph, IsingProblem, LatticeKind, QuboProblem, SpinConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform multiple of 1/4 in `[lo, hi]`.
pub fn quarter<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let a = (lo * 4.0).ceil() as i64;
    let b = (hi * 4.0).floor() as i64;
    rng.gen_range(a..=b) as f64 / 4.0
}

/// Nonzero multiple of 1/4 in `[−2, 2]`.
pub fn coupling<R: Rng>(rng: &mut R) -> f64 {
    let k = rng.gen_range(1..=8) as f64 / 4.0;
    if rng.gen_bool(0.5) {
        k
    } else {
        -k
    }
}

pub fn random_graph<R: Rng>(rng: &mut R, n: usize, p: f64) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::new(n, edges).unwrap()
}

/// Dyadic couplings in `[−2, 2] \ {0}`; biases dyadic in `[−2, 2]` and, when
/// `nonnegative_slack`, also within `Σ|J_ij|` so that every `C_i ≥ 0`.
pub fn random_ising<R: Rng>(rng: &mut R, g: &Graph, nonnegative_slack: bool) -> IsingProblem {
    let j: Vec<f64> = (0..g.num_edges()).map(|_| coupling(rng)).collect();
    let h = (0..g.num_vertices())
        .map(|i| {
            let bound = if nonnegative_slack {
                let s: f64 = g.incident(i).iter().map(|&(_, k)| j[k].abs()).sum();
                s.min(2.0)
            } else {
                2.0
            };
            quarter(rng, -bound, bound)
        })
        .collect();
    IsingProblem::new(g.clone(), h, j).unwrap()
}

pub fn random_qubo<R: Rng>(rng: &mut R, n: usize) -> QuboProblem {
    let g = random_graph(rng, n, 0.5);
    let c = (0..n).map(|_| quarter(rng, -2.0, 2.0)).collect();
    let j = (0..g.num_edges()).map(|_| coupling(rng)).collect();
    QuboProblem::new(g, c, j).unwrap()
}

pub struct Instance {
    pub problem: IsingProblem,
    pub embedding: MinorEmbedding,
    pub hardware: String,
}

/// Random problems on random valid embeddings into small square and
/// extended grids: `n ∈ [2, max_n]` logical vertices, at most
/// `max_physical` qubits, at least one logical edge.
pub fn corpus(seed: u64, count: usize, max_n: usize, max_physical: usize) -> Vec<Instance> {
    let grids = [
        (LatticeKind::Square, 3, 4),
        (LatticeKind::Square, 4, 4),
        (LatticeKind::Extended, 3, 3),
        (LatticeKind::Extended, 3, 4),
        (LatticeKind::Extended, 4, 4),
    ];
    let mut rng = rng(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let (kind, rows, cols) = grids[rng.gen_range(0..grids.len())];
        let hw = make_hardware(kind, rows, cols).unwrap();
        let n = rng.gen_range(2..=max_n);
        let target = rng.gen_range(n..=max_physical);
        let Some(e) = random_embedding(hw.graph(), n, target, 0.75, &mut rng) else {
            continue;
        };
        if e.logical().num_edges() == 0 {
            continue;
        }
        let problem = random_ising(&mut rng, e.logical(), true);
        out.push(Instance {
            problem,
            embedding: e,
            hardware: format!("{kind:?} {rows}x{cols}"),
        });
    }
    out
}

/// All `2^n` energies by direct evaluation, in mask order.
pub fn all_energies(p: &IsingProblem) -> Vec<f64> {
    let n = p.num_vertices();
    (0..1u64 << n)
        .map(|m| p.energy(&SpinConfig::from_mask(n, m)).unwrap())
        .collect()
}

/// Minimum energy and every configuration within `tol` of it.
pub fn brute_ground(p: &IsingProblem, tol: f64) -> (f64, BTreeSet<SpinConfig>) {
    let n = p.num_vertices();
    let energies = all_energies(p);
    let min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let ground = energies
        .iter()
        .enumerate()
        .filter(|(_, &e)| e <= min + tol)
        .map(|(m, _)| SpinConfig::from_mask(n, m as u64))
        .collect();
    (min, ground)
}

/// Gap between the lowest energy and the next energy more than `tol` above
/// it; `None` if every state is within `tol` of the minimum.
pub fn brute_gap(p: &IsingProblem, tol: f64) -> Option<f64> {
    let energies = all_energies(p);
    let min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    energies
        .iter()
        .copied()
        .filter(|&e| e > min + tol)
        .reduce(f64::min)
        .map(|e| e - min)
}

/// Maximum of `Y` and all maximizers by direct evaluation.
pub fn brute_qubo_max(q: &QuboProblem) -> (f64, BTreeSet<Vec<bool>>) {
    let n = q.num_vertices();
    let xs: Vec<Vec<bool>> = (0..1u64 << n)
        .map(|m| (0..n).map(|i| m >> i & 1 == 1).collect())
        .collect();
    let values: Vec<f64> = xs.iter().map(|x| q.objective(x).unwrap()).collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let argmax = xs
        .into_iter()
        .zip(&values)
        .filter(|(_, &v)| v == max)
        .map(|(x, _)| x)
        .collect();
    (max, argmax)
}

/// Whether `x` has a short binary expansion (exactly representable with
/// plenty of headroom for sums).
pub fn is_dyadic(x: f64) -> bool {
    let scaled = x * 1024.0;
    x.is_finite() && scaled.fract() == 0.0 && scaled.abs() < 1e12
}

pub fn all_dyadic(p: &IsingProblem) -> bool {
    p.h().iter().chain(p.j()).all(|&v| is_dyadic(v))
}
