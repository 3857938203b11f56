//! Exhaustive oracle for small problems.
//!
//! States are visited in binary-reflected Gray-code order so each step flips
//! one spin and updates the energy in `O(deg)` from cached local fields. The
//! state space is split by fixing the top spins; partitions run on the rayon
//! pool (`RAYON_NUM_THREADS` overrides the thread count) and are merged in a
//! fixed order, so reports do not depend on scheduling.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::embedding::MinorEmbedding;
use crate::error::{Error, Result};
use crate::model::{IsingProblem, QuboProblem, SpinConfig};
use crate::params::{
    compute_c, easy_bound, leaf_uniform_split, set_params_custom_split, tight_bound,
    ChainStrengths, EmbeddedIsing,
};

pub const DEFAULT_MAX_SPINS: usize = 24;
pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_GROUND_STATE_CAP: usize = 1 << 16;
pub const DEFAULT_LEVEL_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumOptions {
    /// Energies within `tol` of a level's lowest member join that level.
    pub tol: f64,
    /// Refuse problems with more spins than this.
    pub max_spins: usize,
    /// Ground states materialized at most; the count is always exact.
    pub ground_state_cap: usize,
    /// Lowest distinct raw energies retained.
    pub level_cap: usize,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOLERANCE,
            max_spins: DEFAULT_MAX_SPINS,
            ground_state_cap: DEFAULT_GROUND_STATE_CAP,
            level_cap: DEFAULT_LEVEL_CAP,
        }
    }
}

impl SpectrumOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub energy: f64,
    pub multiplicity: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    /// Ascending distinct levels (the lowest `level_cap` of them).
    pub levels: Vec<Level>,
    /// Ground states in increasing mask order (bit `i` set ⇔ `s_i = +1`).
    pub ground_states: Vec<SpinConfig>,
    pub ground_state_count: u64,
    /// False when more than `ground_state_cap` ground states exist.
    pub ground_states_complete: bool,
    /// False when raw energies beyond `level_cap` were dropped; the last
    /// level's multiplicity may then be short.
    pub levels_complete: bool,
    pub state_count: u64,
}

impl SpectrumReport {
    pub fn min_energy(&self) -> f64 {
        self.levels[0].energy
    }

    /// `levels[1] − levels[0]`; `None` with a single level.
    pub fn gap(&self) -> Option<f64> {
        (self.levels.len() > 1).then(|| self.levels[1].energy - self.levels[0].energy)
    }
}

/// Total order on energies with `-0.0` folded into `0.0`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Incrementally updated Ising energy over a Gray-code walk.
struct IsingWalker<'a> {
    h: &'a [f64],
    adj: Vec<Vec<(usize, f64)>>,
}

impl<'a> IsingWalker<'a> {
    fn new(p: &'a IsingProblem) -> Self {
        let adj = (0..p.num_vertices())
            .map(|i| p.couplings(i).collect())
            .collect();
        Self { h: p.h(), adj }
    }

    /// Visits every state whose top bits (from `low` upward) equal `high`.
    fn walk(&self, high: u64, low: usize, mut visit: impl FnMut(u64, f64)) {
        let n = self.h.len();
        let mut mask = high << low;
        let mut s: Vec<f64> = (0..n)
            .map(|i| if mask >> i & 1 == 1 { 1.0 } else { -1.0 })
            .collect();
        let mut field: Vec<f64> = (0..n)
            .map(|i| self.h[i] + self.adj[i].iter().map(|&(j, w)| w * s[j]).sum::<f64>())
            .collect();
        let mut energy = 0.0;
        for i in 0..n {
            energy += self.h[i] * s[i];
            for &(j, w) in &self.adj[i] {
                if j > i {
                    energy += w * s[i] * s[j];
                }
            }
        }
        visit(mask, energy + 0.0);
        for t in 1u64..(1u64 << low) {
            let i = t.trailing_zeros() as usize;
            energy -= 2.0 * s[i] * field[i];
            s[i] = -s[i];
            for &(j, w) in &self.adj[i] {
                field[j] += 2.0 * w * s[i];
            }
            mask ^= 1 << i;
            visit(mask, energy + 0.0);
        }
    }
}

/// Incrementally updated QUBO objective over a Gray-code walk.
struct QuboWalker<'a> {
    c: &'a [f64],
    adj: Vec<Vec<(usize, f64)>>,
}

impl<'a> QuboWalker<'a> {
    fn new(q: &'a QuboProblem) -> Self {
        let adj = (0..q.num_vertices())
            .map(|i| {
                q.graph()
                    .incident(i)
                    .iter()
                    .map(|&(j, k)| (j, q.j()[k]))
                    .collect()
            })
            .collect();
        Self { c: q.c(), adj }
    }

    fn walk(&self, high: u64, low: usize, mut visit: impl FnMut(u64, f64)) {
        let n = self.c.len();
        let mut mask = high << low;
        let x = |m: u64, i: usize| m >> i & 1 == 1;
        // gain[i]: change in Y from switching x_i on, given the others
        let mut gain: Vec<f64> = (0..n)
            .map(|i| {
                self.c[i]
                    - self.adj[i]
                        .iter()
                        .filter(|&&(j, _)| x(mask, j))
                        .map(|&(_, w)| w)
                        .sum::<f64>()
            })
            .collect();
        let mut value = 0.0;
        for i in (0..n).filter(|&i| x(mask, i)) {
            value += self.c[i];
            for &(j, w) in &self.adj[i] {
                if j > i && x(mask, j) {
                    value -= w;
                }
            }
        }
        visit(mask, value + 0.0);
        for t in 1u64..(1u64 << low) {
            let i = t.trailing_zeros() as usize;
            let on = !x(mask, i);
            if on {
                value += gain[i];
            } else {
                value -= gain[i];
            }
            let delta = if on { -1.0 } else { 1.0 };
            for &(j, w) in &self.adj[i] {
                gain[j] += delta * w;
            }
            mask ^= 1 << i;
            visit(mask, value + 0.0);
        }
    }
}

/// Number of top bits fixed per partition.
fn partition_bits(n: usize) -> usize {
    n.saturating_sub(10).min(8)
}

fn run_partitions<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, usize) -> T + Sync,
{
    let k = partition_bits(n);
    let low = n - k;
    (0..1u64 << k)
        .into_par_iter()
        .map(|high| f(high, low))
        .collect()
}

/// Lowest `cap` distinct raw values with their counts.
struct LowestValues {
    counts: BTreeMap<Key, u64>,
    cap: usize,
    dropped: bool,
}

impl LowestValues {
    fn new(cap: usize) -> Self {
        Self {
            counts: BTreeMap::new(),
            cap: cap.max(1),
            dropped: false,
        }
    }

    fn add(&mut self, value: f64, count: u64) {
        if self.counts.len() >= self.cap {
            let (&last, _) = self.counts.last_key_value().expect("nonempty");
            if Key(value) > last {
                self.dropped = true;
                return;
            }
        }
        *self.counts.entry(Key(value)).or_insert(0) += count;
        if self.counts.len() > self.cap {
            self.counts.pop_last();
            self.dropped = true;
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.dropped |= other.dropped;
        for (k, c) in other.counts {
            self.add(k.0, c);
        }
        self
    }
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap || n >= 64 {
        return Err(Error::EnumerationCap { n, cap });
    }
    Ok(())
}

/// Groups ascending raw values into levels: each level starts at its lowest
/// member and absorbs values within `tol` of it.
fn cluster(values: &BTreeMap<Key, u64>, tol: f64) -> Vec<Level> {
    let mut levels: Vec<Level> = Vec::new();
    for (&Key(e), &count) in values {
        match levels.last_mut() {
            Some(l) if e - l.energy <= tol => l.multiplicity += count,
            _ => levels.push(Level {
                energy: e,
                multiplicity: count,
            }),
        }
    }
    levels
}

/// Collects masks whose value satisfies `keep`, up to `cap`, plus the total.
fn collect_masks(parts: Vec<(Vec<u64>, u64)>, cap: usize) -> (Vec<u64>, u64) {
    let mut all = Vec::new();
    let mut total = 0;
    for (masks, count) in parts {
        total += count;
        all.extend(masks);
    }
    all.sort_unstable();
    all.truncate(cap);
    (all, total)
}

pub fn enumerate_spectrum(p: &IsingProblem, opts: &SpectrumOptions) -> Result<SpectrumReport> {
    let n = p.num_vertices();
    check_cap(n, opts.max_spins)?;
    if opts.tol.is_nan() || opts.tol < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be non-negative, got {}",
            opts.tol
        )));
    }
    let walker = IsingWalker::new(p);

    let values = run_partitions(n, |high, low| {
        let mut acc = LowestValues::new(opts.level_cap);
        walker.walk(high, low, |_, e| acc.add(e, 1));
        acc
    })
    .into_iter()
    .reduce(LowestValues::merge)
    .expect("at least one partition");
    let levels = cluster(&values.counts, opts.tol);

    let threshold = levels[0].energy + opts.tol;
    let cap = opts.ground_state_cap;
    let parts = run_partitions(n, |high, low| {
        let mut masks = Vec::new();
        let mut count = 0u64;
        walker.walk(high, low, |m, e| {
            if e <= threshold {
                count += 1;
                if masks.len() < cap {
                    masks.push(m);
                }
            }
        });
        (masks, count)
    });
    let (masks, count) = collect_masks(parts, cap);

    Ok(SpectrumReport {
        levels,
        ground_states: masks
            .into_iter()
            .map(|m| SpinConfig::from_mask(n, m))
            .collect(),
        ground_state_count: count,
        ground_states_complete: count as usize <= cap,
        levels_complete: !values.dropped,
        state_count: 1u64 << n,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuboSolution {
    pub max_value: f64,
    /// Maximizers in increasing mask order (bit `i` set ⇔ `x_i = 1`).
    pub argmax: Vec<Vec<bool>>,
    pub argmax_count: u64,
    pub complete: bool,
}

/// Exhaustive maximum of `Y` by direct enumeration over bit vectors.
/// Assignments within `opts.tol` of the maximum count as maximizers.
pub fn solve_qubo_max(q: &QuboProblem, opts: &SpectrumOptions) -> Result<QuboSolution> {
    let n = q.num_vertices();
    check_cap(n, opts.max_spins)?;
    let walker = QuboWalker::new(q);
    let max_value = run_partitions(n, |high, low| {
        let mut best = f64::NEG_INFINITY;
        walker.walk(high, low, |_, y| best = best.max(y));
        best
    })
    .into_iter()
    .fold(f64::NEG_INFINITY, f64::max);

    let threshold = max_value - opts.tol;
    let cap = opts.ground_state_cap;
    let parts = run_partitions(n, |high, low| {
        let mut masks = Vec::new();
        let mut count = 0u64;
        walker.walk(high, low, |m, y| {
            if y >= threshold {
                count += 1;
                if masks.len() < cap {
                    masks.push(m);
                }
            }
        });
        (masks, count)
    });
    let (masks, count) = collect_masks(parts, cap);
    Ok(QuboSolution {
        max_value,
        argmax: masks
            .into_iter()
            .map(|m| (0..n).map(|i| m >> i & 1 == 1).collect())
            .collect(),
        argmax_count: count,
        complete: count as usize <= cap,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapCheck {
    pub min_target: f64,
    /// `min(min_i g_i, original gap)`.
    pub bound: f64,
    /// Embedded gap ≥ bound − tol.
    pub holds: bool,
    /// Embedded gap equals the bound within tol (diagnostic only).
    pub equality: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceReport {
    pub ok: bool,
    /// Every embedded ground state keeps all trees aligned.
    pub chains_aligned: bool,
    pub misaligned_ground_states: u64,
    /// Logical configurations of the aligned embedded ground states.
    pub projected_ground_states: Vec<SpinConfig>,
    pub original_ground_states: Vec<SpinConfig>,
    pub ground_states_match: bool,
    /// `min E_emb = min E + offset` within tol.
    pub offset_identity: bool,
    pub original_min: f64,
    pub embedded_min: f64,
    pub offset: f64,
    pub original_gap: Option<f64>,
    pub embedded_gap: Option<f64>,
    /// Present when the parameterization carries gap targets.
    pub gap_check: Option<GapCheck>,
    pub gap_bound_ok: bool,
}

impl CorrespondenceReport {
    pub fn failure_reasons(&self) -> Vec<String> {
        let mut reasons = Vec::new();
        if !self.chains_aligned {
            reasons.push(format!(
                "chain misalignment: {} embedded ground state(s) break a chain",
                self.misaligned_ground_states
            ));
        }
        if !self.ground_states_match {
            reasons.push("projected ground states differ from the original ground states".into());
        }
        if !self.offset_identity {
            reasons.push(format!(
                "offset identity fails: min E_emb = {} but min E + offset = {}",
                self.embedded_min,
                self.original_min + self.offset
            ));
        }
        if !self.gap_bound_ok {
            reasons.push("embedded gap below the targeted bound".into());
        }
        reasons
    }
}

/// Compares the ground states of `orig` with those of its embedding.
pub fn verify_correspondence(
    orig: &IsingProblem,
    emb: &EmbeddedIsing,
    opts: &SpectrumOptions,
) -> Result<CorrespondenceReport> {
    let so = enumerate_spectrum(orig, opts)?;
    let se = enumerate_spectrum(emb.problem(), opts)?;

    let mut misaligned = 0u64;
    let mut projected = BTreeSet::new();
    for s in &se.ground_states {
        match emb.project(s) {
            Some(l) => {
                projected.insert(l);
            }
            None => misaligned += 1,
        }
    }
    let complete = se.ground_states_complete && so.ground_states_complete;
    let chains_aligned = misaligned == 0;
    let original: BTreeSet<SpinConfig> = so.ground_states.iter().cloned().collect();
    let ground_states_match = if complete {
        projected == original && se.ground_state_count == so.ground_state_count
    } else {
        se.ground_state_count == so.ground_state_count
            && (!so.ground_states_complete || projected.is_subset(&original))
    };

    let offset = emb.offset();
    let offset_identity = (se.min_energy() - (so.min_energy() + offset)).abs() <= opts.tol;

    let gap_check = emb.gap_targets().map(|g| {
        let min_target = g.iter().copied().fold(f64::INFINITY, f64::min);
        let bound = so.gap().map_or(min_target, |og| og.min(min_target));
        let eg = se.gap().unwrap_or(f64::INFINITY);
        GapCheck {
            min_target,
            bound,
            holds: eg >= bound - opts.tol,
            equality: (eg - bound).abs() <= opts.tol,
        }
    });
    let gap_bound_ok = gap_check.as_ref().is_none_or(|c| c.holds);

    Ok(CorrespondenceReport {
        ok: chains_aligned && ground_states_match && offset_identity,
        chains_aligned,
        misaligned_ground_states: misaligned,
        projected_ground_states: projected.into_iter().collect(),
        original_ground_states: so.ground_states.clone(),
        ground_states_match,
        offset_identity,
        original_min: so.min_energy(),
        embedded_min: se.min_energy(),
        offset,
        original_gap: so.gap(),
        embedded_gap: se.gap(),
        gap_check,
        gap_bound_ok,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrengthThreshold {
    pub vertex: usize,
    /// Smallest probed `|F|` for which correspondence held.
    pub working: f64,
    /// Largest probed `|F|` for which it failed (0 if none failed).
    pub failing: f64,
    pub tight_bound: f64,
    pub easy_bound: f64,
}

/// Empirical chain-strength threshold per logical vertex: binary search on
/// a shared `|F|` over `T_i` (biases split as in the tight setter, other
/// trees held at the easy bound) until correspondence flips. Singleton
/// trees report `None`.
pub fn min_working_f(
    orig: &IsingProblem,
    e: &MinorEmbedding,
    resolution: f64,
    opts: &SpectrumOptions,
) -> Result<Vec<Option<StrengthThreshold>>> {
    if resolution.is_nan() || resolution <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "resolution must be positive, got {resolution}"
        )));
    }
    e.ensure_valid()?;
    let n = orig.num_vertices();
    check_cap(e.num_physical(), opts.max_spins)?;
    let split = leaf_uniform_split(e, orig);
    let safe: Vec<f64> = (0..n).map(|i| -(easy_bound(orig, i) + 1.0)).collect();

    let works = |i: usize, magnitude: f64| -> Result<bool> {
        let mut strengths = safe.clone();
        strengths[i] = -magnitude;
        let emb = set_params_custom_split(e, orig, &split, &ChainStrengths::PerVertex(strengths))?;
        Ok(verify_correspondence(orig, &emb, opts)?.ok)
    };

    (0..n)
        .map(|i| {
            if e.tree(i).len() == 1 {
                return Ok(None);
            }
            let mut hi = easy_bound(orig, i) + 1.0;
            let mut lo = 0.0;
            if !works(i, hi)? {
                return Err(Error::InvalidParameter(format!(
                    "correspondence fails for vertex {i} even at |F| = {hi}"
                )));
            }
            while hi - lo > resolution {
                let mid = 0.5 * (lo + hi);
                if works(i, mid)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let c = compute_c(orig, i);
            Ok(Some(StrengthThreshold {
                vertex: i,
                working: hi,
                failing: lo,
                tight_bound: if c >= 0.0 {
                    tight_bound(e, orig, i)
                } else {
                    f64::NAN
                },
                easy_bound: easy_bound(orig, i),
            }))
        })
        .collect()
}
