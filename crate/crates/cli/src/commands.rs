use std::collections::{BTreeMap, HashSet};
use std::f64::consts::PI;
use std::fs::{self, OpenOptions};
use std::io::Write;

use qwalk::coin::CoinPolicy;
use qwalk::ctqw::{detect_transfer_ct, CtParams, CtTransferReport, Spectrum, DEFAULT_DT};
use qwalk::decoherence::{
    arc_markov_walk, classical_walk, decohere_ct, decohere_walk, DensityMatrix, NoiseBasis, NoiseModel, CT_DT,
    TRACE_DRIFT_TOL,
};
use qwalk::dtqw::{
    detect_transfer_with, haar_states, ArcSpace, StepOperator, TransferParams, TransferReport, WalkState, LAMBDA,
    PST_TOL,
};
use qwalk::explorer::{
    enumerate_variants, interpolation_sweep, key_hex, pst_search, read_records, robustness_sweep, Perturbation,
    SearchParams, SearchRecord, ROBUST_STEP,
};
use qwalk::graph::{FamilySpec, Graph, GraphDoc, VertexPair};
use qwalk::linalg::{CVector, C64};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{pick, pick_list, CliError, FileConfig, InitSpec, Problems, DEFAULT_SAMPLES, DEFAULT_STEPS};
use crate::output::{self, num};
use crate::spec;
use crate::{Cli, Command, CtqwCmd, DecohereCmd, DtqwCmd, GraphCmd, InterpCmd, RobustCmd, SearchCmd, WalkArgs};

/// Largest accepted drift of a state's norm over a coined walk.
const NORM_TOL: f64 = 1e-9;
/// Largest accepted `‖A − VΛVᵀ‖` before a continuous walk is trusted.
const SPECTRUM_TOL: f64 = 1e-9;
const HERMITICITY_TOL: f64 = 1e-9;

pub fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(CliError::config("--workers must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(w).build_global().map_err(|e| CliError::config(e.to_string()))?;
    }
    let file = FileConfig::load(cli.config.as_deref())?;
    let seed = pick(cli.seed, file.seed, 0);
    match cli.command {
        Command::Graph(c) => graph(c, &file),
        Command::Dtqw(c) => dtqw(c, &file, seed),
        Command::Ctqw(c) => ctqw(c, &file),
        Command::Decohere(c) => decohere(c, &file, seed),
        Command::Search(c) => search(c, &file, seed),
        Command::Robust(c) => robust(c, &file, seed),
        Command::Interp(c) => interp(c, &file),
    }
}

fn graph(c: GraphCmd, file: &FileConfig) -> Result<(), CliError> {
    file.check_command("graph")?;
    let g = spec::parse(&c.spec.join(" "), None).and_then(|s| s.build()).map_err(CliError::config)?;
    let mut text = g.to_json();
    text.push('\n');
    output::emit_table(c.out.as_deref(), &text)
}

struct Walk {
    graph: Graph,
    pair: VertexPair,
    tracked: Vec<usize>,
}

fn resolve_walk(args: &WalkArgs, file: &FileConfig, p: &mut Problems) -> Option<Walk> {
    let Some(spec) = file.graph_spec(args.graph.as_deref()) else {
        p.push("graph: required (--graph or \"graph\" in the config)");
        return None;
    };
    let spec = p.check("graph", spec)?;
    let graph = p.check("graph", spec.build())?;
    let default = spec.default_pair();
    let pair =
        VertexPair::new(pick(args.source, file.source, default.source), pick(args.target, file.target, default.target));
    let mut ok = p.check("pair", pair.check(&graph)).is_some();
    let mut tracked = vec![pair.source];
    if pair.target != pair.source {
        tracked.push(pair.target);
    }
    for v in pick_list(&args.track, &file.track, Vec::new) {
        if v >= graph.n() {
            p.push(format!("track: vertex {v} out of range for a graph on {} vertices", graph.n()));
            ok = false;
        } else if !tracked.contains(&v) {
            tracked.push(v);
        }
    }
    ok.then_some(Walk { graph, pair, tracked })
}

fn vertex_header(first: &str, prefix: &str, tracked: &[usize]) -> Vec<String> {
    std::iter::once(first.to_string()).chain(tracked.iter().map(|v| format!("{prefix}v{v}"))).collect()
}

/// Coin states on the ports of `source` described by `init`.
fn coin_states(space: &ArcSpace, source: usize, init: &InitSpec, seed: u64) -> Result<Vec<Vec<C64>>, String> {
    let d = space.degree(source);
    if d == 0 {
        return Err(format!("source vertex {source} has no ports"));
    }
    Ok(match init {
        InitSpec::Equal => vec![vec![C64::new(1.0 / (d as f64).sqrt(), 0.0); d]],
        InitSpec::Basis(k) => {
            if *k >= d {
                return Err(format!("port {k} out of range for {d} ports"));
            }
            let mut v = vec![C64::new(0.0, 0.0); d];
            v[*k] = C64::new(1.0, 0.0);
            vec![v]
        }
        InitSpec::Haar { count, seed: own } => haar_states(d, *count, own.unwrap_or(seed))
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|psi| psi.iter().copied().collect())
            .collect(),
        InitSpec::Ports(ps) => {
            let mut v = vec![C64::new(0.0, 0.0); d];
            let mut seen = HashSet::new();
            for &(k, a) in ps {
                if k >= d {
                    return Err(format!("port {k} out of range for {d} ports"));
                }
                if !seen.insert(k) {
                    return Err(format!("port {k} given twice"));
                }
                v[k] = a;
            }
            let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > NORM_TOL {
                return Err(format!("port amplitudes have norm {norm}, expected 1"));
            }
            vec![v]
        }
    })
}

fn check_transfer_params(params: &TransferParams, p: &mut Problems) {
    if params.t_max == 0 {
        p.push("steps: must be at least 1");
    }
    if !(params.lambda > 0.0 && params.lambda <= 1.0) {
        p.push(format!("lambda: must lie in (0, 1] (got {})", params.lambda));
    }
    if !(params.pst_tol >= 0.0) {
        p.push(format!("pst_tol: must be non-negative (got {})", params.pst_tol));
    }
}

fn pairs(v: &[C64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

#[derive(Serialize)]
struct DtqwRun {
    coin_state: Vec<[f64; 2]>,
    report: TransferReport,
}

#[derive(Serialize)]
struct DtqwReport {
    graph: GraphDoc,
    policy: String,
    seed: u64,
    runs: Vec<DtqwRun>,
}

fn dtqw(c: DtqwCmd, file: &FileConfig, seed: u64) -> Result<(), CliError> {
    file.check_command("dtqw")?;
    let mut p = Problems::default();
    let walk = resolve_walk(&c.walk, file, &mut p);
    let policy = p.check("policy", file.policy(c.policy.as_deref()));
    let init = p.check("init", file.init(c.init.as_deref()));
    let params = TransferParams {
        t_max: pick(c.steps, file.steps, DEFAULT_STEPS),
        lambda: pick(c.lambda, file.lambda, LAMBDA),
        pst_tol: pick(c.pst_tol, file.pst_tol, PST_TOL),
        allow_off_source: false,
    };
    check_transfer_params(&params, &mut p);
    let op = match (&walk, &policy) {
        (Some(w), Some(pol)) => p.check("policy", StepOperator::new(&w.graph, pol)),
        _ => None,
    };
    let states = match (&walk, &op, &init) {
        (Some(w), Some(op), Some(init)) => p.check("init", coin_states(op.space(), w.pair.source, init, seed)),
        _ => None,
    };
    p.finish()?;
    let (walk, policy, op, states) = (walk.unwrap(), policy.unwrap(), op.unwrap(), states.unwrap());

    let results: Vec<(DtqwRun, Vec<Vec<f64>>)> = states
        .par_iter()
        .map(|coin| {
            let init = WalkState::at_vertex(op.space(), walk.pair.source, coin)?;
            let report = detect_transfer_with(&op, &init, walk.pair, &params)?;
            let series = tracked_series(&op, &init, &walk.tracked, params.t_max)?;
            Ok((DtqwRun { coin_state: pairs(coin), report }, series))
        })
        .collect::<Result<_, CliError>>()?;

    let multi = results.len() > 1;
    let mut header = vec!["step".to_string()];
    for k in 0..results.len() {
        let prefix = if multi { format!("s{k}_") } else { String::new() };
        header.extend(vertex_header("", &prefix, &walk.tracked).into_iter().skip(1));
    }
    let rows = (0..=params.t_max).map(|t| {
        std::iter::once(t.to_string()).chain(results.iter().flat_map(|(_, s)| s[t].iter().map(|&x| num(x)))).collect()
    });
    let csv = output::csv(&header, rows);
    let report = DtqwReport {
        graph: GraphDoc::from(&walk.graph),
        policy: policy.to_string(),
        seed,
        runs: results.into_iter().map(|(r, _)| r).collect(),
    };
    output::emit(walk_out(&c.walk, file), &csv, &output::json(&report)?)
}

fn walk_out<'a>(args: &'a WalkArgs, file: &'a FileConfig) -> Option<&'a std::path::Path> {
    args.out.as_deref().or(file.out.as_deref())
}

/// Probabilities at the tracked vertices for steps `0..=steps`, failing if
/// the norm drifts.
fn tracked_series(
    op: &StepOperator,
    init: &WalkState,
    tracked: &[usize],
    steps: usize,
) -> Result<Vec<Vec<f64>>, CliError> {
    let space = op.space();
    let mut amps: CVector = init.amplitudes.clone();
    let mut out = Vec::with_capacity(steps + 1);
    for t in 0..=steps {
        if t > 0 {
            amps = op.apply(&amps);
        }
        let state = WalkState::new(amps.clone());
        let drift = (state.norm() - 1.0).abs();
        if drift > NORM_TOL {
            return Err(CliError::Numerical(format!("norm drifted by {drift:e} at step {t}")));
        }
        out.push(tracked.iter().map(|&v| state.vertex_probability(space, v)).collect());
    }
    Ok(out)
}

#[derive(Serialize)]
struct CtqwReport {
    graph: GraphDoc,
    dt: f64,
    t_max: f64,
    spectrum_error: f64,
    report: CtTransferReport,
}

fn ctqw(c: CtqwCmd, file: &FileConfig) -> Result<(), CliError> {
    file.check_command("ctqw")?;
    let mut p = Problems::default();
    let walk = resolve_walk(&c.walk, file, &mut p);
    let params = CtParams {
        t_max: pick(c.t_max, file.t_max, CtParams::default().t_max),
        dt: pick(c.dt, file.dt, DEFAULT_DT),
        lambda: pick(c.lambda, file.lambda, LAMBDA),
        pst_tol: pick(c.pst_tol, file.pst_tol, PST_TOL),
    };
    if !(params.t_max > 0.0) {
        p.push(format!("t_max: must be positive (got {})", params.t_max));
    }
    if !(params.dt > 0.0 && params.dt <= params.t_max) {
        p.push(format!("dt: must lie in (0, t_max] (got {})", params.dt));
    }
    if !(params.lambda > 0.0 && params.lambda <= 1.0) {
        p.push(format!("lambda: must lie in (0, 1] (got {})", params.lambda));
    }
    p.finish()?;
    let walk = walk.unwrap();

    let spectrum = Spectrum::of(&walk.graph)?;
    let spectrum_error = spectrum.reconstruction_error(&walk.graph);
    if spectrum_error > SPECTRUM_TOL {
        return Err(CliError::Numerical(format!("eigendecomposition residual {spectrum_error:e}")));
    }
    if let Some(path) = &c.spectrum {
        output::write_file(path, &(spectrum.to_json() + "\n"))?;
    }
    let report = detect_transfer_ct(&walk.graph, walk.pair, &params)?;
    let rows: Vec<Vec<String>> = report
        .times
        .par_iter()
        .map(|&t| {
            std::iter::once(num(t))
                .chain(walk.tracked.iter().map(|&v| num(spectrum.amplitude(walk.pair.source, v, t).norm_sqr())))
                .collect()
        })
        .collect();
    let csv = output::csv(&vertex_header("t", "", &walk.tracked), rows);
    let report =
        CtqwReport { graph: GraphDoc::from(&walk.graph), dt: params.dt, t_max: params.t_max, spectrum_error, report };
    output::emit(walk_out(&c.walk, file), &csv, &output::json(&report)?)
}

#[derive(Serialize)]
struct RatePointReport {
    rate: f64,
    distribution: Vec<f64>,
    trace: f64,
    min_eigenvalue: f64,
}

#[derive(Serialize)]
struct DecohereReport {
    graph: GraphDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    policy: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    basis: Option<NoiseBasis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    time: Option<f64>,
    points: Vec<RatePointReport>,
    /// Full dephasing of single arcs: the Markov chain `|⟨b|U|a⟩|²` on arcs.
    #[serde(skip_serializing_if = "Option::is_none")]
    arc_markov: Option<Vec<f64>>,
    /// Simple random walk moving to a uniform incident edge.
    #[serde(skip_serializing_if = "Option::is_none")]
    simple_random_walk: Option<Vec<f64>>,
}

fn checked(rho: &DensityMatrix, rate: f64) -> Result<(), CliError> {
    let drift = (rho.trace() - 1.0).abs();
    if drift > TRACE_DRIFT_TOL {
        return Err(CliError::Numerical(format!("trace drifted by {drift:e} at rate {rate}")));
    }
    let min = rho.min_eigenvalue();
    if min < -TRACE_DRIFT_TOL {
        return Err(CliError::Numerical(format!("negative eigenvalue {min:e} at rate {rate}")));
    }
    let herm = rho.hermiticity_error();
    if herm > HERMITICITY_TOL {
        return Err(CliError::Numerical(format!("hermiticity error {herm:e} at rate {rate}")));
    }
    Ok(())
}

fn decohere(c: DecohereCmd, file: &FileConfig, seed: u64) -> Result<(), CliError> {
    file.check_command("decohere")?;
    let mut p = Problems::default();
    let walk = resolve_walk(&c.walk, file, &mut p);
    let time = c.time.or(file.time);
    let rates = pick_list(&c.rates, &file.rates, || (0..=10).map(|k| k as f64 / 10.0).collect());
    for &r in &rates {
        let ok = if time.is_some() { r >= 0.0 } else { (0.0..=1.0).contains(&r) };
        if !ok {
            p.push(format!("rates: {r} is out of range"));
        }
    }
    if rates.is_empty() {
        p.push("rates: at least one rate is required");
    }

    if let Some(t) = time {
        let dt = pick(c.dt, file.dt, CT_DT);
        if !(t >= 0.0) {
            p.push(format!("time: must be non-negative (got {t})"));
        }
        if !(dt > 0.0) {
            p.push(format!("dt: must be positive (got {dt})"));
        }
        p.finish()?;
        let walk = walk.unwrap();
        let mut start = CVector::zeros(walk.graph.n());
        start[walk.pair.source] = C64::new(1.0, 0.0);
        let rho0 = DensityMatrix::pure(&start);
        let points: Vec<RatePointReport> = rates
            .par_iter()
            .map(|&rate| {
                let rho = decohere_ct(&walk.graph, &rho0, rate, t, dt)?;
                checked(&rho, rate)?;
                Ok(RatePointReport {
                    rate,
                    distribution: rho.diagonal(),
                    trace: rho.trace(),
                    min_eigenvalue: rho.min_eigenvalue(),
                })
            })
            .collect::<Result<_, CliError>>()?;
        let report = DecohereReport {
            graph: GraphDoc::from(&walk.graph),
            policy: None,
            basis: None,
            steps: None,
            time: Some(t),
            points,
            arc_markov: None,
            simple_random_walk: None,
        };
        return emit_rates(&c.walk, file, &walk.tracked, &report);
    }

    let policy = p.check("policy", file.policy(c.policy.as_deref()));
    let init = p.check("init", file.init(c.init.as_deref()));
    let basis = p.check("basis", c.basis.as_deref().or(file.basis.as_deref()).unwrap_or("both").parse::<NoiseBasis>());
    let steps = pick(c.steps, file.steps, DEFAULT_STEPS);
    let op = match (&walk, &policy) {
        (Some(w), Some(pol)) => p.check("policy", StepOperator::new(&w.graph, pol)),
        _ => None,
    };
    let states = match (&walk, &op, &init) {
        (Some(w), Some(op), Some(init)) => p.check("init", coin_states(op.space(), w.pair.source, init, seed)),
        _ => None,
    };
    if states.as_ref().is_some_and(|s| s.len() != 1) {
        p.push("init: decoherence runs take a single initial state");
    }
    p.finish()?;
    let (walk, policy, op, basis) = (walk.unwrap(), policy.unwrap(), op.unwrap(), basis.unwrap());
    let init = WalkState::at_vertex(op.space(), walk.pair.source, &states.unwrap()[0])?;

    let points: Vec<RatePointReport> = rates
        .par_iter()
        .map(|&rate| {
            let rho = decohere_walk(&init, &op, &NoiseModel::new(basis, rate), steps)?
                .pop()
                .expect("walk includes the start");
            checked(&rho, rate)?;
            Ok(RatePointReport {
                rate,
                distribution: rho.vertex_marginals(op.space()),
                trace: rho.trace(),
                min_eigenvalue: rho.min_eigenvalue(),
            })
        })
        .collect::<Result<_, CliError>>()?;
    let start = DensityMatrix::pure(&init.amplitudes).vertex_marginals(op.space());
    let report = DecohereReport {
        graph: GraphDoc::from(&walk.graph),
        policy: Some(policy.to_string()),
        basis: Some(basis),
        steps: Some(steps),
        time: None,
        points,
        arc_markov: arc_markov_walk(&op, &init, steps).pop(),
        simple_random_walk: classical_walk(&walk.graph, &start, steps)?.pop(),
    };
    emit_rates(&c.walk, file, &walk.tracked, &report)
}

fn emit_rates(args: &WalkArgs, file: &FileConfig, tracked: &[usize], report: &DecohereReport) -> Result<(), CliError> {
    let rows = report
        .points
        .iter()
        .map(|pt| std::iter::once(num(pt.rate)).chain(tracked.iter().map(|&v| num(pt.distribution[v]))).collect());
    let csv = output::csv(&vertex_header("p", "", tracked), rows);
    output::emit(walk_out(args, file), &csv, &output::json(report)?)
}

fn search(c: SearchCmd, file: &FileConfig, seed: u64) -> Result<(), CliError> {
    file.check_command("search")?;
    let mut p = Problems::default();
    let base = pick(c.base, file.base, 4);
    let max_new = pick(c.max_new, file.max_new, 2);
    let names = pick_list(&c.policies, &file.policies, || vec!["O1".into(), "O2".into(), "O3".into()]);
    let policies: Vec<CoinPolicy> = names.iter().filter_map(|s| p.check("policies", s.parse::<CoinPolicy>())).collect();
    let params = SearchParams {
        samples: pick(c.samples, file.samples, DEFAULT_SAMPLES),
        t_max: pick(c.steps, file.steps, DEFAULT_STEPS),
        lambda: pick(c.lambda, file.lambda, LAMBDA),
        pst_tol: pick(c.pst_tol, file.pst_tol, PST_TOL),
        seed,
    };
    if params.samples == 0 {
        p.push("samples: must be at least 1");
    }
    check_transfer_params(
        &TransferParams {
            t_max: params.t_max,
            lambda: params.lambda,
            pst_tol: params.pst_tol,
            allow_off_source: false,
        },
        &mut p,
    );
    let variants = p.check("base", enumerate_variants(base, max_new));
    let out = c.out.as_deref().or(file.out.as_deref());
    let existing = match out {
        Some(path) if path.exists() => {
            let text = fs::read_to_string(path)?;
            p.check("out", read_records(&text)).unwrap_or_default()
        }
        _ => Vec::new(),
    };
    p.finish()?;
    let variants = variants.unwrap();

    let cells: HashSet<(String, String)> =
        variants.iter().flat_map(|v| policies.iter().map(move |pol| (key_hex(&v.key), pol.to_string()))).collect();
    let done: HashSet<(String, String)> = existing.iter().map(|r| (r.key.clone(), r.policy.clone())).collect();
    let fresh = match out {
        Some(path) => {
            let mut sink = OpenOptions::new().create(true).append(true).open(path)?;
            let records = pst_search(&variants, &policies, &params, &done, Some(&mut sink as &mut dyn Write))?;
            sink.flush()?;
            records
        }
        None => pst_search(&variants, &policies, &params, &done, None)?,
    };

    let mut records: Vec<SearchRecord> = existing
        .into_iter()
        .filter(|r| cells.contains(&(r.key.clone(), r.policy.clone())))
        .chain(fresh)
        .filter(|r| !c.pst_only || r.pst)
        .filter(|r| c.min_p.is_none_or(|m| r.best_p >= m))
        .collect();
    records.sort_by(|a, b| {
        b.best_p.total_cmp(&a.best_p).then_with(|| a.key.cmp(&b.key)).then_with(|| a.policy.cmp(&b.policy))
    });
    let mut text = String::new();
    for r in &records {
        text.push_str(&serde_json::to_string(r).map_err(|e| CliError::config(e.to_string()))?);
        text.push('\n');
    }
    output::stdout(&text)
}

fn robust(c: RobustCmd, file: &FileConfig, seed: u64) -> Result<(), CliError> {
    file.check_command("robust")?;
    let mut p = Problems::default();
    let ns = pick_list(&c.ns, &file.ns, || (3..=40).collect());
    let explicit = !c.deltas.is_empty()
        || !c.thetas.is_empty()
        || c.random
        || file.deltas.is_some()
        || file.thetas.is_some()
        || file.random.is_some();
    let (deltas, thetas, random) = if explicit {
        (
            pick_list(&c.deltas, &file.deltas, Vec::new),
            pick_list(&c.thetas, &file.thetas, Vec::new),
            c.random || file.random.unwrap_or(false),
        )
    } else {
        ((0..=10).map(|k| k as f64 / 10.0).collect(), (0..=16).map(|k| k as f64 * PI / 8.0).collect(), true)
    };
    let runs = pick(c.runs, file.runs, 1000);
    for &n in &ns {
        if n < 3 {
            p.push(format!("ns: cycle requires n ≥ 3 (got {n})"));
        }
    }
    if runs == 0 {
        p.push("runs: must be at least 1");
    }
    let mut perturbations: Vec<Perturbation> = Vec::new();
    perturbations.extend(deltas.iter().map(|&delta| Perturbation::Defect { delta, port: None }));
    perturbations.extend(thetas.iter().map(|&theta| Perturbation::Phase { theta, port: None }));
    if random {
        perturbations.push(Perturbation::RandomDefect);
    }
    if perturbations.is_empty() {
        p.push("perturbations: none selected");
    }
    p.finish()?;

    let cells = robustness_sweep(&ns, &perturbations, runs, seed)?;
    let header: Vec<String> = ["n", "perturbation", "value", "probability", "runs"].map(String::from).to_vec();
    let rows = cells.iter().map(|cell| {
        let (kind, value) = match cell.perturbation {
            Perturbation::Defect { delta, .. } => ("defect", num(delta)),
            Perturbation::Phase { theta, .. } => ("phase", num(theta)),
            Perturbation::RandomDefect => ("random_defect", String::new()),
        };
        vec![cell.n.to_string(), kind.into(), value, num(cell.probability), cell.runs.to_string()]
    });
    output::emit_table(c.out.as_deref().or(file.out.as_deref()), &output::csv(&header, rows))
}

fn interp(c: InterpCmd, file: &FileConfig) -> Result<(), CliError> {
    file.check_command("interp")?;
    let mut p = Problems::default();
    let from = c.from.as_deref().or(file.from.as_deref()).unwrap_or("k2k");
    let to = c.to.as_deref().or(file.to.as_deref()).unwrap_or("k2c");
    let ns = pick_list(&c.ns, &file.ns, || (3..=8).collect());
    let couplings = pick_list(&c.couplings, &file.couplings, || (0..=100).map(|k| k as f64 / 100.0).collect());
    let step = pick(c.steps, file.steps, ROBUST_STEP);
    for &cp in &couplings {
        if !(0.0..=1.0).contains(&cp) {
            p.push(format!("couplings: {cp} is outside [0, 1]"));
        }
    }
    let mut specs: BTreeMap<usize, (FamilySpec, FamilySpec)> = BTreeMap::new();
    for &n in &ns {
        let a = p.check("from", spec::parse_family(from, Some(n)));
        let b = p.check("to", spec::parse_family(to, Some(n)));
        if let (Some(a), Some(b)) = (a, b) {
            specs.insert(n, (a, b));
        }
    }
    p.finish()?;

    let first = |n: usize| specs[&n].0.clone();
    let second = |n: usize| specs[&n].1.clone();
    let points = interpolation_sweep((&first, &second), &couplings, &ns, step)?;
    let header: Vec<String> = ["n", "c", "probability"].map(String::from).to_vec();
    let rows = points.iter().map(|pt| vec![pt.n.to_string(), num(pt.coupling), num(pt.probability)]);
    output::emit_table(c.out.as_deref().or(file.out.as_deref()), &output::csv(&header, rows))
}
