//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits nonzero if any failed.

mod common;

use std::collections::BTreeSet;
use std::panic::{self, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use minor_embed::embedding::{derive_edge_assignment, EmbeddingClass, MinorEmbedding};
use minor_embed::model::{make_hardware, Graph, IsingProblem, LatticeKind, SpinConfig};
use minor_embed::params::{
    compute_c, easy_bound, preprocess_fix, set_params, tight_bound, ChainStrengthPolicy,
    EmbeddedIsing,
};
use minor_embed::solve::{
    enumerate_spectrum, min_working_f, solve_qubo_max, verify_correspondence, SpectrumOptions,
};
use minor_embed::transform::{basis_state_energy, qubo_to_ising, spins_from_bits};
use minor_embed::wmis::{
    build_embedded_mis, extract_independent_set, wmis_to_qubo, PenaltyRule, WmisInstance,
};
use rand::Rng;

use common::*;

const LOOSE: f64 = 1e-9;

fn exact() -> SpectrumOptions {
    SpectrumOptions::with_tol(0.0)
}

/// Tolerance for an embedded instance: zero when every parameter is dyadic.
fn tolerance_for(emb: &EmbeddedIsing) -> f64 {
    if all_dyadic(emb.problem()) {
        0.0
    } else {
        LOOSE
    }
}

struct Tally {
    exact: usize,
    loose: usize,
}

/// Checks one parameterized instance against the direct oracle and returns
/// the tolerance used.
fn check_correspondence(orig: &IsingProblem, emb: &EmbeddedIsing, label: &str) -> f64 {
    let tol = tolerance_for(emb);
    let report = verify_correspondence(orig, emb, &SpectrumOptions::with_tol(tol)).unwrap();
    assert!(report.ok, "{label}: {:?}", report.failure_reasons());

    let (min, ground) = brute_ground(orig, tol);
    let (emb_min, emb_ground) = brute_ground(emb.problem(), tol);
    let projected: Option<BTreeSet<SpinConfig>> =
        emb_ground.iter().map(|s| emb.project(s)).collect();
    let projected = projected.unwrap_or_else(|| panic!("{label}: oracle found a broken chain"));
    assert_eq!(projected, ground, "{label}: oracle ground states differ");
    assert_eq!(emb_ground.len(), ground.len(), "{label}: not one-to-one");

    // offset identity against an independently summed ΣF
    let sum_f: f64 = (0..orig.num_vertices())
        .flat_map(|i| emb.chain_edges(i).iter().map(|&(_, f)| f))
        .sum();
    let diff = emb_min - min - sum_f;
    assert!(diff.abs() <= tol, "{label}: offset identity off by {diff}");
    tol
}

fn criterion_1() -> String {
    let start = Instant::now();
    let corpus = corpus(1, 200, 6, 14);
    let mut tally = Tally { exact: 0, loose: 0 };
    for (k, inst) in corpus.iter().enumerate() {
        let emb = set_params(
            &inst.embedding,
            &inst.problem,
            &ChainStrengthPolicy::Tight {
                margin: Some(1.0 / 16.0),
            },
        )
        .unwrap();
        let label = format!("instance {k} ({})", inst.hardware);
        match check_correspondence(&inst.problem, &emb, &label) {
            0.0 => tally.exact += 1,
            _ => tally.loose += 1,
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    format!(
        "200/200 ok ({} exact, {} with non-dyadic C/l at tol 1e-9), {:.2}s",
        tally.exact,
        tally.loose,
        elapsed.as_secs_f64()
    )
}

fn criterion_2() -> String {
    let corpus = corpus(1, 200, 6, 14);
    let mut tally = Tally { exact: 0, loose: 0 };
    let mut compared = 0;
    for (k, inst) in corpus.iter().enumerate() {
        let (e, p) = (&inst.embedding, &inst.problem);
        let margin = Some(1.0 / 16.0);
        let easy = set_params(e, p, &ChainStrengthPolicy::Easy { margin }).unwrap();
        let tight = set_params(e, p, &ChainStrengthPolicy::Tight { margin }).unwrap();
        match check_correspondence(p, &easy, &format!("instance {k}")) {
            0.0 => tally.exact += 1,
            _ => tally.loose += 1,
        }
        for i in 0..p.num_vertices() {
            // independent recomputation of both bounds
            let sum_j: f64 = p.couplings(i).map(|(_, j)| j.abs()).sum();
            let c = sum_j - p.h()[i].abs();
            let l = e.leaf_count(i) as f64;
            let easy_mag = p.h()[i].abs() + sum_j;
            let tight_mag = (l - 1.0) / l * c;
            assert_eq!(easy_bound(p, i), easy_mag);
            assert!((tight_bound(e, p, i) - tight_mag).abs() <= 1e-12);
            assert!(easy_mag >= tight_mag, "instance {k} vertex {i}");
            for (&(_, fe), &(_, ft)) in easy.chain_edges(i).iter().zip(tight.chain_edges(i)) {
                assert!(
                    fe.abs() >= ft.abs(),
                    "instance {k} vertex {i}: |F| easy < tight"
                );
                compared += 1;
            }
        }
    }
    format!(
        "200/200 ok ({} exact, {} at tol 1e-9); easy |F| >= tight |F| on all {compared} chain edges",
        tally.exact, tally.loose
    )
}

fn criterion_3() -> String {
    let corpus = corpus(1, 200, 6, 14);
    let mut cases = 0;
    let mut exact_cases = 0;
    for inst in &corpus {
        for policy in [
            ChainStrengthPolicy::Tight {
                margin: Some(1.0 / 16.0),
            },
            ChainStrengthPolicy::Easy {
                margin: Some(1.0 / 16.0),
            },
        ] {
            let emb = set_params(&inst.embedding, &inst.problem, &policy).unwrap();
            let tol = tolerance_for(&emb);
            let r = verify_correspondence(&inst.problem, &emb, &SpectrumOptions::with_tol(tol))
                .unwrap();
            assert!(r.ok);
            let (min, _) = brute_ground(&inst.problem, tol);
            let (emb_min, _) = brute_ground(emb.problem(), tol);
            let sum_f: f64 = emb
                .source()
                .trees()
                .iter()
                .enumerate()
                .flat_map(|(i, _)| emb.chain_edges(i).iter().map(|&(_, f)| f))
                .sum();
            if tol == 0.0 {
                assert_eq!(emb_min - min, sum_f);
                assert_eq!(r.embedded_min - r.original_min, emb.offset());
                exact_cases += 1;
            } else {
                assert!((emb_min - min - sum_f).abs() <= tol);
            }
            cases += 1;
        }
    }
    format!("{cases}/{cases} passing cases satisfy the identity ({exact_cases} bit-exact)")
}

fn criterion_4() -> String {
    let corpus = corpus(4, 100, 6, 14);
    let mut rng = rng(44);
    let mut equal = 0;
    let choices = [0.25, 0.5, 1.0];
    for (k, inst) in corpus.iter().enumerate() {
        let n = inst.problem.num_vertices();
        let gaps: Vec<f64> = (0..n).map(|_| choices[rng.gen_range(0..3)]).collect();
        let emb = set_params(
            &inst.embedding,
            &inst.problem,
            &ChainStrengthPolicy::GapTargeted { gaps: gaps.clone() },
        )
        .unwrap();
        let r =
            verify_correspondence(&inst.problem, &emb, &SpectrumOptions::with_tol(LOOSE)).unwrap();
        assert!(r.ok, "instance {k}");
        let min_g = gaps.iter().copied().fold(f64::INFINITY, f64::min);
        let orig_gap = brute_gap(&inst.problem, LOOSE);
        let emb_gap = brute_gap(emb.problem(), LOOSE).expect("embedded problem has two levels");
        let bound = orig_gap.map_or(min_g, |g| g.min(min_g));
        assert!(
            emb_gap >= bound - LOOSE,
            "instance {k}: embedded gap {emb_gap} < bound {bound}"
        );
        let check = r.gap_check.expect("gap targets recorded");
        assert!(check.holds);
        assert_eq!(check.bound, bound);
        if (emb_gap - bound).abs() <= LOOSE {
            equal += 1;
        }
    }
    format!("100/100 embedded gap >= min(min g, original gap) - 1e-9; equality diagnostic: {equal}/100 attain the bound")
}

fn criterion_5() -> String {
    let mut rng = rng(5);
    for k in 0..100 {
        let n = rng.gen_range(1..=10);
        let q = random_qubo(&mut rng, n);
        let (p, link) = qubo_to_ising(&q).unwrap();
        let max = solve_qubo_max(&q, &exact()).unwrap();
        let spectrum = enumerate_spectrum(&p, &exact()).unwrap();
        let (oracle_max, oracle_argmax) = brute_qubo_max(&q);
        assert_eq!(max.max_value, oracle_max, "instance {k}");
        assert_eq!(
            max.max_value,
            link.offset - 0.25 * spectrum.min_energy(),
            "instance {k}"
        );
        let argmax: BTreeSet<Vec<bool>> = max.argmax.iter().cloned().collect();
        assert_eq!(argmax, oracle_argmax, "instance {k}");
        let mapped: BTreeSet<SpinConfig> = argmax.iter().map(|x| spins_from_bits(x)).collect();
        let argmin: BTreeSet<SpinConfig> = spectrum.ground_states.iter().cloned().collect();
        assert_eq!(mapped.len(), argmax.len());
        assert_eq!(mapped, argmin, "instance {k}");
    }
    "100/100 max Y = offset - E_min/4 exactly; argmax and argmin in bijection".into()
}

fn criterion_6() -> String {
    let start = Instant::now();
    let w = WmisInstance::unweighted(Graph::complete(4));

    let boundary = wmis_to_qubo(&w, PenaltyRule::Uniform(1.0)).unwrap();
    let s = solve_qubo_max(&boundary.qubo, &exact()).unwrap();
    assert_eq!(s.max_value, 1.0);
    let dependent = s
        .argmax
        .iter()
        .filter(|x| {
            !extract_independent_set(&boundary.qubo, x)
                .unwrap()
                .independent
        })
        .count();
    assert!(dependent >= 1);
    assert!(!boundary.strict);

    let strict = wmis_to_qubo(&w, PenaltyRule::Uniform(1.25)).unwrap();
    let s2 = solve_qubo_max(&strict.qubo, &exact()).unwrap();
    assert_eq!(s2.max_value, 1.0);
    for x in &s2.argmax {
        let set = extract_independent_set(&strict.qubo, x).unwrap();
        assert!(set.independent && set.vertices.len() == 1);
    }
    assert_eq!(s2.argmax.len(), 4);
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(1));
    format!(
        "J=1: max Y=1 with {dependent} non-independent maximizers; J=1+1/4: max Y=1, 4 singleton maximizers; {:.3}s",
        elapsed.as_secs_f64()
    )
}

/// All maximum-weight independent sets by subset enumeration.
fn brute_wmis(w: &WmisInstance) -> (f64, BTreeSet<Vec<usize>>) {
    let n = w.graph().num_vertices();
    let mut best = 0.0;
    let mut sets = BTreeSet::new();
    for m in 0..1u64 << n {
        let set: Vec<usize> = (0..n).filter(|&i| m >> i & 1 == 1).collect();
        if w.graph()
            .edges()
            .iter()
            .any(|&(u, v)| m >> u & 1 == 1 && m >> v & 1 == 1)
        {
            continue;
        }
        let weight: f64 = set.iter().map(|&i| w.weights()[i]).sum();
        if weight > best {
            best = weight;
            sets.clear();
        }
        if weight == best {
            sets.insert(set);
        }
    }
    (best, sets)
}

fn criterion_7() -> String {
    let mut rng = rng(7);
    for k in 0..100 {
        let n = rng.gen_range(1..=10);
        let g = random_graph(&mut rng, n, 0.4);
        let weights = (0..n).map(|_| quarter(&mut rng, 0.25, 4.0)).collect();
        let w = WmisInstance::new(g, weights).unwrap();
        let min_w = w.weights().iter().copied().fold(f64::INFINITY, f64::min);
        let r = wmis_to_qubo(&w, PenaltyRule::StrictMinPlus(min_w / 4.0)).unwrap();
        assert!(r.strict);
        let s = solve_qubo_max(&r.qubo, &exact()).unwrap();
        let (best, sets) = brute_wmis(&w);
        assert_eq!(s.max_value, best, "instance {k}");
        let supports: BTreeSet<Vec<usize>> = s
            .argmax
            .iter()
            .map(|x| {
                let set = extract_independent_set(&r.qubo, x).unwrap();
                assert!(set.independent, "instance {k}");
                set.vertices
            })
            .collect();
        assert_eq!(supports, sets, "instance {k}");
    }
    "100/100 strict-rule optimum value and supports equal the independent-set oracle".into()
}

fn criterion_8() -> String {
    let eps = 0.25;
    // 3x3 square grid, qubits numbered row-major:
    //   0 1 2
    //   3 4 5
    //   6 7 8
    let hw = make_hardware(LatticeKind::Square, 3, 3).unwrap();
    let g = Graph::complete(4);
    let e = derive_edge_assignment(
        &g,
        hw.graph(),
        vec![vec![4], vec![0, 1, 2], vec![3, 6], vec![5, 7, 8]],
        vec![
            vec![],
            vec![(0, 1), (1, 2)],
            vec![(3, 6)],
            vec![(5, 8), (7, 8)],
        ],
    )
    .unwrap();
    assert_eq!(e.classify().unwrap(), EmbeddingClass::TopologicalMinor);

    // embedding conditions: endpoints carry >= 1 original edge, internal
    // qubits <= 1, and no qubit uses more than three couplers
    for i in 0..4 {
        let carried = |v: usize| e.attachments(i).iter().filter(|a| a.0 == v).count();
        let leaves = e.leaves(i);
        for &v in e.tree(i) {
            if leaves.contains(&v) {
                assert!(carried(v) >= 1, "endpoint {v} carries no edge");
            } else {
                assert!(carried(v) <= 1, "internal {v} carries two edges");
            }
        }
    }

    let m = build_embedded_mis(&g, &e, eps).unwrap();
    let emb = &m.embedded;
    assert!(emb.problem().graph().max_degree() <= 3);

    for i in 0..4 {
        assert_eq!(compute_c(&m.logical, i), 2.0, "C_{i}");
    }
    let six = [
        -(1.0 + eps),
        0.0,
        eps,
        1.0 + eps,
        1.0 + 2.0 * eps,
        1.0 + 3.0 * eps,
    ];
    let values: Vec<f64> = emb
        .problem()
        .h()
        .iter()
        .chain(emb.problem().j())
        .copied()
        .collect();
    for v in &values {
        assert!(six.contains(v), "parameter {v} outside the six-value set");
    }
    let distinct: BTreeSet<u64> = values.iter().map(|v| v.to_bits()).collect();

    let r = verify_correspondence(&m.logical, emb, &exact()).unwrap();
    assert!(r.ok);
    for s in &r.projected_ground_states {
        let set = m.decode(&emb.expand(s)).unwrap();
        assert_eq!(set.len(), 1);
    }
    format!(
        "{} parameters, all in the six-value set ({} distinct values realized); C_i = 2 for all 4 vertices",
        values.len(),
        distinct.len()
    )
}

fn criterion_9() -> String {
    let mut rng = rng(9);
    let mut fixed_total = 0;
    let mut k = 0;
    while k < 50 {
        let n = rng.gen_range(3..=10);
        let g = random_graph(&mut rng, n, 0.4);
        let base = random_ising(&mut rng, &g, false);
        // force one vertex to dominate its couplings
        let v = rng.gen_range(0..n);
        let sum_j: f64 = base.couplings(v).map(|(_, j)| j.abs()).sum();
        let mut h = base.h().to_vec();
        h[v] = (sum_j + quarter(&mut rng, 0.25, 2.0)) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let p = IsingProblem::new(g, h, base.j().to_vec()).unwrap();
        if (0..n).all(|i| compute_c(&p, i) >= 0.0) {
            continue;
        }
        k += 1;

        let pre = preprocess_fix(&p).unwrap();
        assert!(!pre.fixed.is_empty());
        let (min, ground) = brute_ground(&p, 0.0);
        for s in &ground {
            for (&v, &spin) in &pre.fixed {
                assert_eq!(s.get(v), spin, "instance {k}: fixed vertex {v} disagrees");
            }
        }
        for i in 0..pre.residual.num_vertices() {
            assert!(compute_c(&pre.residual, i) >= 0.0);
        }
        let (rmin, _) = brute_ground(&pre.residual, 0.0);
        assert_eq!(pre.constant + rmin, min);
        fixed_total += pre.fixed.len();
    }
    format!("50/50: {fixed_total} fixed spins agree with every global minimizer; residual C_i >= 0")
}

fn criterion_10() -> String {
    let mut rng = rng(10);
    let mut states = 0;
    for n in 1..=4 {
        for _ in 0..8 {
            let g = random_graph(&mut rng, n, 0.6);
            let p = random_ising(&mut rng, &g, false);
            for m in 0..1u64 << n {
                let z: Vec<bool> = (0..n).map(|i| m >> i & 1 == 1).collect();
                let s = |i: usize| if z[i] { -1.0 } else { 1.0 };
                let direct: f64 = (0..n).map(|i| p.h()[i] * s(i)).sum::<f64>()
                    + g.edges()
                        .iter()
                        .zip(p.j())
                        .map(|(&(u, v), j)| j * s(u) * s(v))
                        .sum::<f64>();
                assert_eq!(basis_state_energy(&p, &z).unwrap(), direct);
                states += 1;
            }
        }
    }
    format!("{states} basis states (n = 1..4) match the (-1)^z energy exactly")
}

/// Two logical vertices, `J = 1`, no biases. Vertex 0 is the chain a–b with
/// the logical edge on b; vertex 1 is the single qubit c.
fn negative_control_files(dir: &std::path::Path) {
    std::fs::write(
        dir.join("original.json"),
        r#"{"type":"ising","n":2,"linear":{},"quadratic":[[0,1,1.0]]}"#,
    )
    .unwrap();
    std::fs::write(
        dir.join("embedding.json"),
        r#"{"hardware":{"n":3,"edges":[[0,1],[1,2]]},
            "chains":{"0":[0,1],"1":[2]},
            "edge_assignment":{"0-1":[1,2]}}"#,
    )
    .unwrap();
}

fn run_cli(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_minor-embed"))
        .args(args)
        .output()
        .unwrap();
    let text =
        String::from_utf8_lossy(&out.stdout).to_string() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap_or(-1), text)
}

fn criterion_11() -> String {
    let dir = tempfile::tempdir().unwrap();
    negative_control_files(dir.path());
    let path = |name: &str| dir.path().join(name).to_string_lossy().to_string();

    // the tight bound for the chain is C/2 = 1/2
    let p = IsingProblem::from_terms(2, [], [(0, 1, 1.0)]).unwrap();
    let hw = Graph::path(3);
    let e = MinorEmbedding::from_parts(
        Graph::path(2),
        hw,
        vec![vec![0, 1], vec![2]],
        vec![vec![(0, 1)], vec![]],
        vec![(1, 2)],
    )
    .unwrap();
    let bound = tight_bound(&e, &p, 0);
    assert_eq!(bound, 0.5);

    let mut lines = Vec::new();
    for (k, (policy, expected)) in [("tight:1/16", 0), ("fixed:-0.25", 1), ("fixed:-0.01", 1)]
        .into_iter()
        .enumerate()
    {
        let out = path(&format!("embedded-{k}.json"));
        let (code, text) = run_cli(&[
            "set-params",
            "--problem",
            &path("original.json"),
            "--embedding",
            &path("embedding.json"),
            "--policy",
            policy,
            "--out",
            &out,
        ]);
        assert_eq!(code, 0, "{text}");
        let (code, text) = run_cli(&[
            "verify",
            "--original",
            &path("original.json"),
            "--embedded",
            &out,
        ]);
        assert_eq!(code, expected, "{policy}: {text}");
        if expected == 1 {
            assert!(text.contains("chain misalignment"), "{text}");
        }
        lines.push(format!("{policy} -> exit {code}"));
    }

    let threshold = min_working_f(&p, &e, 1.0 / 1024.0, &exact()).unwrap()[0]
        .clone()
        .unwrap();
    assert!(threshold.working > 0.5 && threshold.failing <= 0.5);
    format!(
        "bound |F| = 1/2; {}; empirical threshold in ({}, {}]",
        lines.join(", "),
        threshold.failing,
        threshold.working
    )
}

type Criterion = (&'static str, fn() -> String);

fn main() {
    let criteria: [Criterion; 11] = [
        ("1 correspondence, tight policy", criterion_1),
        ("2 correspondence, easy policy", criterion_2),
        ("3 offset identity", criterion_3),
        ("4 gap bound", criterion_4),
        ("5 qubo/ising equivalence", criterion_5),
        ("6 K4 penalty boundary", criterion_6),
        ("7 wmis oracle", criterion_7),
        ("8 six parameter values", criterion_8),
        ("9 preprocessing", criterion_9),
        ("10 basis-state energy", criterion_10),
        ("11 negative control", criterion_11),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, run) in criteria {
        match panic::catch_unwind(AssertUnwindSafe(run)) {
            Ok(detail) => println!("criterion {name}: PASS: {detail}"),
            Err(e) => {
                failed += 1;
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                println!("criterion {name}: FAIL: {msg}");
            }
        }
    }
    let _ = panic::take_hook();
    println!("{} of 11 criteria passed", 11 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
