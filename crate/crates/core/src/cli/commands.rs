use std::fmt;
use std::io::Write;
use std::path::Path;

use crate::embedding::{greedy_chain_embed_with, EmbeddingClass, MinorEmbedding};
use crate::error::Error;
use crate::model::{
    make_hardware, HardwareGraph, IsingProblem, LatticeKind, QuboProblem, SpinConfig,
};
use crate::params::{
    leaf_uniform_split, preprocess_fix, set_params, set_params_custom_split, vertex_params,
    ChainStrengthPolicy, ChainStrengths, EmbeddedIsing, Preprocessing,
};
use crate::solve::{
    enumerate_spectrum, solve_qubo_max, verify_correspondence, CorrespondenceReport,
    SpectrumOptions,
};
use crate::transform::{bits_from_spins, ising_to_qubo, qubo_to_ising};
use crate::wmis::{extract_independent_set, wmis_to_qubo, PenaltyRule, WmisInstance};

use super::format::{
    read_json, write_json, EmbeddingFile, HardwareBlock, ProblemFile, ProblemType,
};
use super::{
    CliError, Command, HardwareArgs, KindArg, PolicyArg, SolveArgs, TargetArg, EXIT_OK,
    EXIT_VERIFY_FAILED,
};

type Out<'a> = &'a mut dyn Write;
type CmdResult = Result<i32, CliError>;

pub(super) fn dispatch(command: Command, out: Out, err: Out) -> CmdResult {
    match command {
        Command::GenHardware {
            kind,
            rows,
            cols,
            out: path,
        } => gen_hardware(kind, rows, cols, &path, out),
        Command::Convert {
            input,
            to,
            out: path,
            penalty,
        } => convert(&input, to, &path, penalty, out, err),
        Command::Validate { embedding, problem } => validate(&embedding, problem.as_deref(), out),
        Command::Embed {
            problem,
            hardware,
            seed,
            attempts,
            out: path,
        } => embed(&problem, &hardware, seed, attempts, &path, out),
        Command::SetParams {
            problem,
            embedding,
            policy,
            preprocess,
            out: path,
        } => set_params_cmd(&problem, &embedding, &policy, preprocess, &path, out),
        Command::Solve {
            problem,
            solve,
            show,
            penalty,
        } => solve_cmd(&problem, &solve, show, penalty, out, err),
        Command::Verify {
            original,
            embedded,
            solve,
        } => verify(&original, &embedded, &solve, out),
        Command::Pipeline {
            problem,
            penalty,
            embedding,
            hardware,
            seed,
            policy,
            solve,
            out: path,
        } => pipeline(
            &problem,
            penalty,
            embedding.as_deref(),
            &hardware,
            seed,
            &policy,
            &solve,
            path.as_deref(),
            out,
            err,
        ),
    }
}

impl fmt::Display for PolicyArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        match self {
            PolicyArg::Standard(ChainStrengthPolicy::Easy { margin: None }) => write!(f, "easy"),
            PolicyArg::Standard(ChainStrengthPolicy::Easy { margin: Some(m) }) => {
                write!(f, "easy:{m}")
            }
            PolicyArg::Standard(ChainStrengthPolicy::Tight { margin: None }) => write!(f, "tight"),
            PolicyArg::Standard(ChainStrengthPolicy::Tight { margin: Some(m) }) => {
                write!(f, "tight:{m}")
            }
            PolicyArg::Standard(ChainStrengthPolicy::GapTargeted { gaps })
            | PolicyArg::Gap(gaps) => {
                write!(f, "gap:{}", list(gaps))
            }
            PolicyArg::Fixed(v) => write!(f, "fixed:{v}"),
        }
    }
}

fn lattice(kind: KindArg) -> LatticeKind {
    match kind {
        KindArg::Square => LatticeKind::Square,
        KindArg::Extended => LatticeKind::Extended,
    }
}

fn gen_hardware(kind: KindArg, rows: usize, cols: usize, path: &Path, out: Out) -> CmdResult {
    let hw = make_hardware(lattice(kind), rows, cols)?;
    write_json(path, &HardwareBlock::from_hardware(&hw))?;
    writeln!(
        out,
        "{} vertices, {} edges",
        hw.graph().num_vertices(),
        hw.graph().num_edges()
    )?;
    Ok(EXIT_OK)
}

fn hardware_from_args(args: &HardwareArgs) -> Result<HardwareGraph, CliError> {
    if let Some(path) = &args.hardware {
        let block: HardwareBlock = read_json(path)?;
        return block.to_hardware();
    }
    match (args.kind, args.rows, args.cols) {
        (Some(kind), Some(rows), Some(cols)) => Ok(make_hardware(lattice(kind), rows, cols)?),
        _ => Err(CliError::input(
            "hardware required: --hardware FILE or --kind K --rows R --cols C",
        )),
    }
}

/// `δ = min weight / 4`.
fn default_penalty(w: &WmisInstance) -> PenaltyRule {
    let min = w.weights().iter().copied().fold(f64::INFINITY, f64::min);
    PenaltyRule::StrictMinPlus(if min.is_finite() { min / 4.0 } else { 0.25 })
}

fn wmis_qubo(
    file: &ProblemFile,
    penalty: Option<PenaltyRule>,
    out: Out,
    err: Out,
) -> Result<(WmisInstance, QuboProblem), CliError> {
    let (w, warning) = file.to_wmis()?;
    if let Some(msg) = warning {
        writeln!(err, "warning: {msg}")?;
    }
    let rule = penalty.unwrap_or_else(|| default_penalty(&w));
    let r = wmis_to_qubo(&w, rule)?;
    if !r.strict {
        let what = if r.value_guaranteed {
            "J = min weight on some edge: optimum value guaranteed, independence not"
        } else {
            "J below min weight on some edge: neither value nor independence guaranteed"
        };
        writeln!(out, "warning: {what}")?;
    }
    Ok((w, r.qubo))
}

fn convert(
    input: &Path,
    to: TargetArg,
    path: &Path,
    penalty: Option<PenaltyRule>,
    out: Out,
    err: Out,
) -> CmdResult {
    let file: ProblemFile = read_json(input)?;
    let converted = match (file.kind, to) {
        (ProblemType::Ising, TargetArg::Qubo) => {
            let (q, link) = ising_to_qubo(&file.to_ising()?)?;
            ProblemFile {
                affine: Some(link.into()),
                ..ProblemFile::from_qubo(&q)
            }
        }
        (ProblemType::Qubo, TargetArg::Ising) => {
            let (p, link) = qubo_to_ising(&file.to_qubo()?)?;
            ProblemFile {
                affine: Some(link.into()),
                ..ProblemFile::from_ising(&p)
            }
        }
        (ProblemType::Wmis, TargetArg::Qubo) => {
            ProblemFile::from_qubo(&wmis_qubo(&file, penalty, out, err)?.1)
        }
        (ProblemType::Wmis, TargetArg::Ising) => {
            let (p, link) = qubo_to_ising(&wmis_qubo(&file, penalty, out, err)?.1)?;
            ProblemFile {
                affine: Some(link.into()),
                ..ProblemFile::from_ising(&p)
            }
        }
        (kind, _) => {
            return Err(CliError::input(format!(
                "input is already a {} problem",
                kind.name()
            )))
        }
    };
    write_json(path, &converted)?;
    writeln!(
        out,
        "{} -> {}: {} variables",
        file.kind.name(),
        converted.kind.name(),
        converted.n
    )?;
    if let Some(a) = &converted.affine {
        writeln!(
            out,
            "affine: scale {} offset {} ({})",
            a.scale, a.offset, a.direction
        )?;
    }
    Ok(EXIT_OK)
}

fn class_name(c: EmbeddingClass) -> &'static str {
    match c {
        EmbeddingClass::Subgraph => "subgraph",
        EmbeddingClass::TopologicalMinor => "topological-minor",
        EmbeddingClass::GeneralMinor => "general-minor",
    }
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items
        .into_iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn describe_embedding(e: &MinorEmbedding, out: Out) -> Result<(), CliError> {
    writeln!(
        out,
        "{} logical vertices, {} logical edges, {} qubits, class {}",
        e.logical().num_vertices(),
        e.logical().num_edges(),
        e.num_physical(),
        class_name(e.classify()?)
    )?;
    writeln!(
        out,
        "{:>6}  {:>6}  {:>6}  qubits",
        "vertex", "size", "leaves"
    )?;
    for i in 0..e.logical().num_vertices() {
        writeln!(
            out,
            "{:>6}  {:>6}  {:>6}  {}",
            i,
            e.tree(i).len(),
            e.leaf_count(i),
            join(e.tree(i))
        )?;
    }
    Ok(())
}

fn validate(embedding: &Path, problem: Option<&Path>, out: Out) -> CmdResult {
    let file: EmbeddingFile = read_json(embedding)?;
    let logical = match problem {
        Some(p) => read_json::<ProblemFile>(p)?.graph()?,
        None => file.implied_logical()?,
    };
    let e = file.to_embedding(&logical)?;
    write!(out, "valid: ")?;
    describe_embedding(&e, out)?;
    Ok(EXIT_OK)
}

fn embed(
    problem: &Path,
    hardware: &HardwareArgs,
    seed: u64,
    attempts: usize,
    path: &Path,
    out: Out,
) -> CmdResult {
    let logical = read_json::<ProblemFile>(problem)?.graph()?;
    let hw = hardware_from_args(hardware)?;
    let e = greedy_chain_embed_with(&logical, &hw, seed, attempts)?;
    write_json(
        path,
        &EmbeddingFile::from_embedding(&e, HardwareBlock::from_hardware(&hw)),
    )?;
    describe_embedding(&e, out)?;
    Ok(EXIT_OK)
}

fn parameterize(
    e: &MinorEmbedding,
    p: &IsingProblem,
    policy: &PolicyArg,
) -> Result<EmbeddedIsing, CliError> {
    let result = match policy {
        PolicyArg::Fixed(f) => set_params_custom_split(
            e,
            p,
            &leaf_uniform_split(e, p),
            &ChainStrengths::Uniform(*f),
        ),
        other => set_params(e, p, &other.resolve(p.num_vertices())?),
    };
    result.map_err(|err| match err {
        Error::NegativeSlack(v) => CliError::precondition(format!(
            "negative slack C_i < 0 at vertices {v:?}; rerun with --preprocess"
        )),
        other => other.into(),
    })
}

/// Optionally fixes negative-slack vertices, returning the problem and
/// embedding that remain.
fn reduce(
    p: &IsingProblem,
    e: &MinorEmbedding,
    preprocess: bool,
) -> Result<(IsingProblem, MinorEmbedding, Option<Preprocessing>), CliError> {
    if !preprocess {
        return Ok((p.clone(), e.clone(), None));
    }
    let pre = preprocess_fix(p)?;
    let restricted = e.restrict(&pre.residual_vertices)?;
    Ok((pre.residual.clone(), restricted, Some(pre)))
}

fn print_params(
    emb: &EmbeddedIsing,
    p: &IsingProblem,
    pre: Option<&Preprocessing>,
    out: Out,
) -> Result<(), CliError> {
    if let Some(pre) = pre {
        for (v, s) in &pre.fixed {
            writeln!(
                out,
                "fixed vertex {v} = {}",
                if *s > 0 { "+1" } else { "-1" }
            )?;
        }
    }
    writeln!(
        out,
        "{:>6}  {:>12}  {:>6}  {:>6}  {:>12}",
        "vertex", "C", "leaves", "size", "F"
    )?;
    for v in vertex_params(emb, p) {
        let original = pre.map_or(v.vertex, |pre| pre.residual_vertices[v.vertex]);
        let f = v
            .strength
            .map_or_else(|| "-".to_string(), |f| f.to_string());
        writeln!(
            out,
            "{:>6}  {:>12}  {:>6}  {:>6}  {:>12}",
            original, v.c, v.leaves, v.tree_size, f
        )?;
    }
    writeln!(out, "offset: {}", emb.offset())?;
    Ok(())
}

fn set_params_cmd(
    problem: &Path,
    embedding: &Path,
    policy: &PolicyArg,
    preprocess: bool,
    path: &Path,
    out: Out,
) -> CmdResult {
    let p = read_json::<ProblemFile>(problem)?.to_ising_like()?;
    let efile: EmbeddingFile = read_json(embedding)?;
    let e = efile.to_embedding(p.graph())?;
    let (residual, restricted, pre) = reduce(&p, &e, preprocess)?;
    let emb = parameterize(&restricted, &residual, policy)?;
    let file = ProblemFile::from_embedded(&emb, &policy.to_string(), &efile.hardware, pre.as_ref());
    write_json(path, &file)?;
    print_params(&emb, &residual, pre.as_ref(), out)?;
    Ok(EXIT_OK)
}

fn spectrum_options(args: &SolveArgs) -> SpectrumOptions {
    SpectrumOptions {
        tol: args.tol,
        max_spins: args.max_n,
        ..SpectrumOptions::default()
    }
}

fn bit_string(x: &[bool]) -> String {
    x.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Embedded problem and its embedding, rebuilt from the file metadata.
fn load_embedded(file: &ProblemFile) -> Result<EmbeddedIsing, CliError> {
    let meta = file
        .metadata
        .as_ref()
        .ok_or_else(|| CliError::input("problem has no embedding metadata"))?;
    let problem = file.to_ising()?;
    let logical = meta.embedding.implied_logical()?;
    let e = meta.embedding.to_embedding(&logical)?;
    let emb = EmbeddedIsing::from_problem(e, problem, meta.gaps.clone())?;
    if emb.physical() != meta.physical.as_slice() {
        return Err(CliError::input(
            "metadata physical list disagrees with the embedding",
        ));
    }
    Ok(emb)
}

fn solve_qubo_report(q: &QuboProblem, opts: &SpectrumOptions, show: usize, out: Out) -> CmdResult {
    let s = solve_qubo_max(q, opts)?;
    writeln!(out, "max value: {}", s.max_value)?;
    writeln!(out, "maximizers: {}", s.argmax_count)?;
    let mut dependent = 0;
    for x in &s.argmax {
        if !extract_independent_set(q, x)?.independent {
            dependent += 1;
        }
    }
    for x in s.argmax.iter().take(show) {
        let set = extract_independent_set(q, x)?;
        let note = if set.independent {
            String::new()
        } else {
            format!(
                "  not independent: {}",
                join(set.conflicts.iter().map(|(u, v)| format!("{u}-{v}")))
            )
        };
        writeln!(
            out,
            "  {}  support {{{}}}{note}",
            bit_string(x),
            join(&set.vertices)
        )?;
    }
    if dependent > 0 {
        writeln!(
            out,
            "note: {dependent} maximizer(s) have non-independent support"
        )?;
    }
    Ok(EXIT_OK)
}

fn solve_cmd(
    problem: &Path,
    args: &SolveArgs,
    show: usize,
    penalty: Option<PenaltyRule>,
    out: Out,
    err: Out,
) -> CmdResult {
    let file: ProblemFile = read_json(problem)?;
    let opts = spectrum_options(args);
    match file.kind {
        ProblemType::Qubo => solve_qubo_report(&file.to_qubo()?, &opts, show, out),
        ProblemType::Wmis => {
            let (_, q) = wmis_qubo(&file, penalty, out, err)?;
            solve_qubo_report(&q, &opts, show, out)
        }
        ProblemType::Ising => {
            let p = file.to_ising()?;
            let embedded = match &file.metadata {
                Some(_) => Some(load_embedded(&file)?),
                None => None,
            };
            let r = enumerate_spectrum(&p, &opts)?;
            writeln!(out, "spins: {}", p.num_vertices())?;
            writeln!(out, "min energy: {}", r.min_energy())?;
            match r.gap() {
                Some(g) => writeln!(out, "gap: {g}")?,
                None => writeln!(out, "gap: none")?,
            }
            if let Some(a) = file
                .affine
                .as_ref()
                .filter(|a| a.direction == "qubo_max_to_ising_min")
            {
                writeln!(
                    out,
                    "qubo max value: {}",
                    a.offset + a.scale * r.min_energy()
                )?;
            }
            writeln!(out, "ground states: {}", r.ground_state_count)?;
            for s in r.ground_states.iter().take(show) {
                match &embedded {
                    Some(emb) => match emb.project(s) {
                        Some(l) => writeln!(out, "  {s}  logical {l}")?,
                        None => writeln!(out, "  {s}  broken chain")?,
                    },
                    None => writeln!(out, "  {s}")?,
                }
            }
            Ok(EXIT_OK)
        }
    }
}

fn print_report(r: &CorrespondenceReport, out: Out) -> Result<(), CliError> {
    let yn = |b: bool| if b { "yes" } else { "no" };
    let gap = |g: Option<f64>| g.map_or_else(|| "none".to_string(), |g| g.to_string());
    writeln!(out, "original min energy: {}", r.original_min)?;
    writeln!(out, "embedded min energy: {}", r.embedded_min)?;
    writeln!(out, "offset: {}", r.offset)?;
    writeln!(out, "offset identity: {}", yn(r.offset_identity))?;
    writeln!(out, "chains aligned: {}", yn(r.chains_aligned))?;
    writeln!(
        out,
        "ground states: {} original, {} projected, match {}",
        r.original_ground_states.len(),
        r.projected_ground_states.len(),
        yn(r.ground_states_match)
    )?;
    writeln!(out, "original gap: {}", gap(r.original_gap))?;
    writeln!(out, "embedded gap: {}", gap(r.embedded_gap))?;
    if let Some(c) = &r.gap_check {
        writeln!(
            out,
            "gap bound: {} (min target {}), holds {}, equality {}",
            c.bound,
            c.min_target,
            yn(c.holds),
            yn(c.equality)
        )?;
    }
    if r.ok {
        writeln!(out, "result: ok")?;
    } else {
        writeln!(out, "result: FAILED")?;
        for reason in r.failure_reasons() {
            writeln!(out, "  {reason}")?;
        }
    }
    Ok(())
}

fn verify(original: &Path, embedded: &Path, args: &SolveArgs, out: Out) -> CmdResult {
    let orig: ProblemFile = read_json(original)?;
    let mut p = orig.to_ising_like()?;
    let efile: ProblemFile = read_json(embedded)?;
    let emb = load_embedded(&efile)?;
    let meta = efile.metadata.as_ref().expect("checked by load_embedded");
    if let Some(rv) = &meta.residual_vertices {
        let pre = preprocess_fix(&p)?;
        if &pre.residual_vertices != rv || pre.fixed != meta.fixed {
            return Err(CliError::input(
                "preprocessing the original does not reproduce the embedded file's fixed spins",
            ));
        }
        p = pre.residual;
    }
    if emb.source().logical() != p.graph() {
        return Err(CliError::input(
            "embedded problem was built for a different logical graph",
        ));
    }
    let r = verify_correspondence(&p, &emb, &spectrum_options(args))?;
    print_report(&r, out)?;
    Ok(if r.ok { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

#[allow(clippy::too_many_arguments)]
fn pipeline(
    problem: &Path,
    penalty: Option<PenaltyRule>,
    embedding: Option<&Path>,
    hardware: &HardwareArgs,
    seed: u64,
    policy: &PolicyArg,
    args: &SolveArgs,
    path: Option<&Path>,
    out: Out,
    err: Out,
) -> CmdResult {
    let file: ProblemFile = read_json(problem)?;
    let opts = spectrum_options(args);
    let (wmis, qubo) = match file.kind {
        ProblemType::Wmis => {
            let (w, q) = wmis_qubo(&file, penalty, out, err)?;
            writeln!(
                out,
                "wmis -> qubo: {} vertices, {} edges",
                q.num_vertices(),
                q.graph().num_edges()
            )?;
            (Some(w), Some(q))
        }
        ProblemType::Qubo => (None, Some(file.to_qubo()?)),
        ProblemType::Ising => (None, None),
    };
    let p = match &qubo {
        Some(q) => {
            let (p, link) = qubo_to_ising(q)?;
            writeln!(
                out,
                "qubo -> ising: scale {} offset {}",
                link.scale, link.offset
            )?;
            p
        }
        None => file.to_ising()?,
    };

    let pre = preprocess_fix(&p)?;
    let residual = &pre.residual;
    let (e, block) = match embedding {
        Some(epath) => {
            let efile: EmbeddingFile = read_json(epath)?;
            let e = efile.to_embedding(p.graph())?;
            (e.restrict(&pre.residual_vertices)?, efile.hardware)
        }
        None => {
            let hw = hardware_from_args(hardware)?;
            let e = greedy_chain_embed_with(
                residual.graph(),
                &hw,
                seed,
                crate::embedding::GREEDY_ATTEMPTS,
            )?;
            (e, HardwareBlock::from_hardware(&hw))
        }
    };
    write!(out, "embedding: ")?;
    describe_embedding(&e, out)?;

    let emb = parameterize(&e, residual, policy)?;
    print_params(&emb, residual, Some(&pre), out)?;
    if let Some(path) = path {
        write_json(
            path,
            &ProblemFile::from_embedded(&emb, &policy.to_string(), &block, Some(&pre)),
        )?;
    }

    let r = verify_correspondence(residual, &emb, &opts)?;
    print_report(&r, out)?;
    if !r.ok {
        return Ok(EXIT_VERIFY_FAILED);
    }

    // decode one embedded ground state back to the original variables
    let ground = emb.expand(&r.projected_ground_states[0]);
    let logical: SpinConfig = pre.lift(&emb.project(&ground).expect("aligned"));
    writeln!(out, "decoded: {logical}")?;
    let mut decoded_ok = true;
    if let Some(q) = &qubo {
        let x = bits_from_spins(&logical);
        let value = q.objective(&x)?;
        let best = solve_qubo_max(q, &opts)?.max_value;
        writeln!(out, "qubo value: {value} (optimum {best})")?;
        decoded_ok &= (value - best).abs() <= opts.tol;
        if wmis.is_some() {
            let set = extract_independent_set(q, &x)?;
            writeln!(
                out,
                "independent set: {{{}}} weight {} independent {}",
                join(&set.vertices),
                set.weight,
                if set.independent { "yes" } else { "no" }
            )?;
            decoded_ok &= set.independent;
        }
    } else {
        let value = p.energy(&logical)?;
        let best = enumerate_spectrum(&p, &opts)?.min_energy();
        writeln!(out, "energy: {value} (minimum {best})")?;
        decoded_ok &= (value - best).abs() <= opts.tol;
    }
    Ok(if decoded_ok {
        EXIT_OK
    } else {
        EXIT_VERIFY_FAILED
    })
}
