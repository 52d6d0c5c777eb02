use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use nalgebra::DMatrix;
use serde::Serialize;

use fck::data::{load_dense, load_item_map, parse_transactions, parse_transactions_with_items, save_item_map};
use fck::io::{interactions_jsonl, log_tsv, parse_alpha, read_alpha, read_text, write_text};
use fck::objectives::{Basket, BasketSpec, Logistic, LogisticSpec, MatrixObjective, MatrixSpec};
use fck::path::{predict, run_path, PathConfig, PathResult};
use fck::screening::{dedup_atoms, screen};
use fck::solver::{ActiveDesign, DualObjective};
use fck::synth::{synth_planted, SynthConfig, SynthKind, DEFAULT_DENSITY};
use fck::{AtomicMatrix, DualWeights, FckError, FeatureSet, PenaltySchedule, PenaltyShape, PrimalModel, Result};
use fck::{ScreenConfig, ScreenMode, SolverConfig};

#[derive(Parser)]
#[command(name = "fck", version, about = "Sparse models over all multiplicative feature interactions")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Coverage model over transactions (nonnegative interaction weights).
    FitBasket(FitBasket),
    /// Sparse logistic regression over interactions.
    FitLogistic(FitLogistic),
    /// Multi-response regression with group and nuclear-norm penalties.
    FitMatrix(FitMatrix),
    /// One-shot screening at a supplied dual vector.
    Screen(ScreenCmd),
    /// Apply a saved model to new data.
    Predict(PredictCmd),
    /// Write a synthetic dataset with planted interactions.
    Synth(SynthCmd),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Transactions,
    Csv,
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "transactions")]
    format: Format,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Single base λ; without it a path is run.
    #[arg(long, conflicts_with = "path")]
    lambda: Option<f64>,
    #[arg(long)]
    path: bool,
    #[arg(long, default_value_t = 50)]
    n_lambdas: usize,
    #[arg(long, default_value_t = 1e-3)]
    min_ratio: f64,
    /// flat, geo:BASE or supergeo:BASE:EXP
    #[arg(long)]
    penalty: Option<PenaltyShape>,
    #[arg(long, default_value_t = 20)]
    max_order: usize,
    /// Drop atoms at least this similar to an earlier atom.
    #[arg(long)]
    dedup: Option<f64>,
    /// Child/parent similarity pruning; 0 disables it.
    #[arg(long, default_value_t = 0.5)]
    prune_child: f64,
    /// Recorded in the run summary; fitting itself is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 100)]
    max_outer: usize,
    #[arg(long, default_value_t = 500)]
    max_inner: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitBasket {
    #[command(flatten)]
    fit: FitArgs,
    #[arg(long, default_value_t = 10.0)]
    tau: f64,
    #[arg(long, default_value_t = 1e-3)]
    gamma: f64,
    /// Drop the nonnegativity constraint on the dual.
    #[arg(long)]
    unconstrained: bool,
}

#[derive(Args)]
struct FitLogistic {
    #[command(flatten)]
    fit: FitArgs,
    /// Labels in {0, 1}, one per row; required for transaction data.
    /// CSV data takes labels from its last column.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-2)]
    tau: f64,
}

#[derive(Args)]
struct FitMatrix {
    #[command(flatten)]
    fit: FitArgs,
    /// Number of trailing response columns in CSV data.
    #[arg(long, default_value_t = 1)]
    tasks: usize,
    /// Response rows (whitespace separated) for transaction data.
    #[arg(long)]
    targets: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-2)]
    eta: f64,
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    #[arg(long)]
    no_intercept: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Signed,
    Nonneg,
    Group,
}

#[derive(Args)]
struct ScreenCmd {
    #[command(flatten)]
    data: DataArgs,
    /// Dual vector, column-major for more than one task.
    #[arg(long)]
    alpha: PathBuf,
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value = "flat")]
    penalty: PenaltyShape,
    #[arg(long, value_enum, default_value = "signed")]
    mode: ModeArg,
    #[arg(long, default_value_t = 1)]
    tasks: usize,
    #[arg(long, default_value_t = 20)]
    max_order: usize,
    #[arg(long, default_value_t = 0.0)]
    prune_child: f64,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PredictCmd {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Item map for transaction data; defaults to items.json beside the model.
    #[arg(long)]
    items: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Basket,
    Logistic,
    Matrix,
}

#[derive(Args)]
struct SynthCmd {
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = 20)]
    d: usize,
    /// Planted set and weight, e.g. `0,1,2:5`; repeatable.
    #[arg(long = "plant")]
    plant: Vec<String>,
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_DENSITY)]
    density: f64,
    #[arg(long, default_value_t = 1)]
    tasks: usize,
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct RunSummary {
    objective: &'static str,
    seed: u64,
    n_rows: usize,
    n_atoms: usize,
    kept_atoms: usize,
    lambda_max: f64,
    points: usize,
    converged: bool,
    final_lambda: f64,
    final_active: usize,
    final_gap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pred_rank: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    retained_singulars: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    match run(cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("FCK_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| FckError::Config(format!("FCK_THREADS={v:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| FckError::Config(e.to_string()))
}

fn run(cmd: Cmd) -> Result<bool> {
    match cmd {
        Cmd::FitBasket(c) => fit_basket(c),
        Cmd::FitLogistic(c) => fit_logistic(c),
        Cmd::FitMatrix(c) => fit_matrix(c),
        Cmd::Screen(c) => screen_cmd(c).map(|_| true),
        Cmd::Predict(c) => predict_cmd(c).map(|_| true),
        Cmd::Synth(c) => synth_cmd(c).map(|_| true),
    }
}

/// Atoms plus whatever numeric columns trail them in a CSV file.
fn load(d: &DataArgs, response_cols: usize) -> Result<(AtomicMatrix, Option<DMatrix<f64>>)> {
    match d.format {
        Format::Transactions => {
            let text = read_text(&d.data)?;
            Ok((parse_transactions(&text)?, None))
        }
        Format::Csv => {
            let (a, y) = load_dense(&d.data, response_cols)?;
            Ok((a, Some(y)))
        }
    }
}

fn read_rows(path: &Path, n: usize, t: usize) -> Result<DMatrix<f64>> {
    let flat = read_alpha(path)?;
    if flat.len() != n * t {
        return Err(FckError::DimensionMismatch { expected: n * t, got: flat.len() });
    }
    Ok(DMatrix::from_row_slice(n, t, &flat))
}

struct Prepared {
    full: AtomicMatrix,
    reduced: AtomicMatrix,
    kept: Vec<usize>,
}

fn prepare(a: AtomicMatrix, dedup: Option<f64>) -> Result<Prepared> {
    match dedup {
        Some(sim) => {
            let (reduced, kept) = dedup_atoms(&a, sim)?;
            info!("dedup kept {} of {} atoms", kept.len(), a.n_cols());
            Ok(Prepared { full: a, reduced, kept })
        }
        None => {
            let kept = (0..a.n_cols()).collect();
            Ok(Prepared { reduced: a.clone(), full: a, kept })
        }
    }
}

fn remap(model: &PrimalModel, kept: &[usize], n_atoms: usize) -> Result<PrimalModel> {
    let rows = model
        .active
        .iter()
        .zip(&model.coefficients)
        .map(|(s, r)| Ok((FeatureSet::new(s.atoms().iter().map(|&k| kept[k as usize] as u32).collect())?, r.clone())))
        .collect::<Result<Vec<_>>>()?;
    Ok(PrimalModel::new(model.kind, n_atoms, rows, model.intercept.clone()))
}

fn fit<O: DualObjective>(
    name: &'static str,
    obj: &O,
    prep: &Prepared,
    args: &FitArgs,
    default_shape: PenaltyShape,
    rank: impl Fn(&PathResult) -> Result<Option<(usize, usize)>>,
) -> Result<bool> {
    let shape = args.penalty.unwrap_or(default_shape);
    let pcfg = PathConfig {
        n_lambdas: if args.lambda.is_some() { 1 } else { args.n_lambdas },
        lambda_min_ratio: args.min_ratio,
        shape,
        lambdas: args.lambda.map(|l| vec![l]),
    };
    let scfg = ScreenConfig {
        max_order: args.max_order,
        child_parent_prune: args.prune_child,
        mode: obj.screen_mode(),
        parallel: rayon::current_num_threads() > 1,
    };
    scfg.validate()?;
    let cfg = SolverConfig { kkt_tol: args.tol, max_outer: args.max_outer, max_inner: args.max_inner, ..SolverConfig::default() };
    cfg.validate()?;
    let a = &prep.reduced;
    let result = run_path(obj, a, &pcfg, &scfg, &cfg)?;
    for p in &result.points {
        info!("lambda {:.4e}: active {} gap {:.2e} converged {}", p.lambda, p.active_count, p.gap, p.converged);
        if !p.converged {
            warn!("lambda {:.4e} did not converge (gap {:.3e})", p.lambda, p.gap);
        }
    }
    let last = result.points.last().ok_or_else(|| FckError::Config("empty λ grid".into()))?;

    std::fs::create_dir_all(&args.out).map_err(|source| FckError::Io { path: args.out.clone(), source })?;
    let model = remap(&last.model, &prep.kept, prep.full.n_cols())?;
    model.save(args.out.join("model.json"))?;
    write_text(args.out.join("path.tsv"), &result.to_tsv())?;
    write_text(args.out.join("log.tsv"), &log_tsv(&result.log))?;
    let w = obj.screen_weights(&last.dual.to_dense());
    let mut final_screen = screen(a, &w, &PenaltySchedule::new(last.lambda, shape), &scfg)?;
    for e in final_screen.emitted.iter_mut() {
        e.set = FeatureSet::new(e.set.atoms().iter().map(|&k| prep.kept[k as usize] as u32).collect())?;
    }
    write_text(args.out.join("interactions.jsonl"), &interactions_jsonl(&final_screen, prep.full.items())?)?;
    if let Some(items) = prep.full.items() {
        save_item_map(items, args.out.join("items.json"))?;
    }
    let ranks = rank(&result)?;
    let summary = RunSummary {
        objective: name,
        seed: args.seed,
        n_rows: a.n_rows(),
        n_atoms: prep.full.n_cols(),
        kept_atoms: prep.kept.len(),
        lambda_max: result.lambda_max,
        points: result.points.len(),
        converged: result.all_converged(),
        final_lambda: last.lambda,
        final_active: last.active_count,
        final_gap: last.gap,
        pred_rank: ranks.map(|r| r.0),
        retained_singulars: ranks.map(|r| r.1),
    };
    let json = serde_json::to_string_pretty(&summary)?;
    write_text(args.out.join("summary.json"), &json)?;
    println!("{json}");
    Ok(summary.converged)
}

fn fit_basket(c: FitBasket) -> Result<bool> {
    let (a, _) = load(&c.fit.data, 0)?;
    let prep = prepare(a, c.fit.dedup)?;
    let obj = Basket::new(BasketSpec { tau: c.tau, gamma: c.gamma, nonneg_dual: !c.unconstrained }, &prep.reduced)?;
    fit("basket", &obj, &prep, &c.fit, PenaltyShape::Flat, |_| Ok(None))
}

fn fit_logistic(c: FitLogistic) -> Result<bool> {
    let (a, y) = load(&c.fit.data, 1)?;
    let labels = match (y, &c.labels) {
        (_, Some(p)) => read_alpha(p)?,
        (Some(y), None) => y.column(0).iter().copied().collect(),
        (None, None) => return Err(FckError::Config("transaction data needs --labels".into())),
    };
    let prep = prepare(a, c.fit.dedup)?;
    let obj = Logistic::new(LogisticSpec { labels, tau: c.tau }, &prep.reduced)?;
    fit("logistic", &obj, &prep, &c.fit, PenaltyShape::Geometric { base: 1.5 }, |_| Ok(None))
}

fn fit_matrix(c: FitMatrix) -> Result<bool> {
    let (a, y) = load(&c.fit.data, c.tasks)?;
    let responses = match (y, &c.targets) {
        (_, Some(p)) => read_rows(p, a.n_rows(), c.tasks)?,
        (Some(y), None) => y,
        (None, None) => return Err(FckError::Config("transaction data needs --targets".into())),
    };
    let prep = prepare(a, c.fit.dedup)?;
    let spec = MatrixSpec { responses, rho: c.rho, eta: c.eta, fit_intercept: !c.no_intercept };
    let obj = MatrixObjective::new(spec, &prep.reduced)?;
    let shape = PenaltyShape::SuperGeometric { base: 1.5, exponent: 1.5 };
    let a = &prep.reduced;
    let sched_shape = c.fit.penalty.unwrap_or(shape);
    fit("matrix", &obj, &prep, &c.fit, shape, |res| {
        let Some(last) = res.points.last() else { return Ok(None) };
        let sched = PenaltySchedule::new(last.lambda, sched_shape);
        let design = ActiveDesign::from_sets(a, &last.model.active, &sched)?;
        let r = obj.rank_report(&design, &last.dual.to_dense())?;
        Ok(Some((r.pred_rank, r.retained_singulars)))
    })
}

fn screen_cmd(c: ScreenCmd) -> Result<()> {
    let (a, _) = load(&c.data, 0)?;
    let alpha = parse_alpha(&read_text(&c.alpha)?)?;
    let w = DualWeights::from_alpha(&alpha, a.n_rows(), c.tasks)?;
    let mode = match c.mode {
        ModeArg::Signed => ScreenMode::Signed,
        ModeArg::Nonneg => ScreenMode::Nonneg,
        ModeArg::Group => ScreenMode::Group,
    };
    let cfg = ScreenConfig {
        max_order: c.max_order,
        child_parent_prune: c.prune_child,
        mode,
        parallel: rayon::current_num_threads() > 1,
    };
    let res = screen(&a, &w, &PenaltySchedule::new(c.lambda, c.penalty), &cfg)?;
    info!("emitted {} of {} explored", res.emitted.len(), res.explored_count);
    let text = interactions_jsonl(&res, a.items())?;
    match &c.out {
        Some(p) => write_text(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn predict_cmd(c: PredictCmd) -> Result<()> {
    let model = PrimalModel::load(&c.model)?;
    let a = match c.data.format {
        Format::Transactions => {
            let items_path = c.items.clone().unwrap_or_else(|| c.model.with_file_name("items.json"));
            let items = load_item_map(&items_path)?;
            let (a, unknown) = parse_transactions_with_items(&read_text(&c.data.data)?, &items)?;
            if !unknown.is_empty() {
                warn!("ignoring {} items absent from the training data", unknown.len());
            }
            a
        }
        Format::Csv => {
            let text = read_text(&c.data.data)?;
            let width = text.lines().next().map_or(0, |h| h.split(',').count());
            let extra = width.checked_sub(model.n_atoms).ok_or(FckError::DimensionMismatch { expected: model.n_atoms, got: width })?;
            fck::data::parse_dense(text.as_bytes(), extra)?.0
        }
    };
    let pred = predict(&model, &a)?;
    let n = a.n_rows();
    let t = model.n_tasks();
    let mut text = String::new();
    for i in 0..n {
        let row: Vec<String> = (0..t).map(|j| format!("{:.12e}", pred[j * n + i])).collect();
        text.push_str(&row.join("\t"));
        text.push('\n');
    }
    match &c.out {
        Some(p) => write_text(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_plant(s: &str) -> Result<(FeatureSet, f64)> {
    let bad = || FckError::Config(format!("planted set {s:?} is not ATOMS:WEIGHT"));
    let (atoms, weight) = s.split_once(':').ok_or_else(bad)?;
    let atoms: Vec<u32> = atoms.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?;
    Ok((FeatureSet::new(atoms)?, weight.trim().parse().map_err(|_| bad())?))
}

#[derive(Serialize)]
struct TruthEntry {
    atoms: Vec<u32>,
    weight: Vec<f64>,
}

fn synth_cmd(c: SynthCmd) -> Result<()> {
    let planted = c.plant.iter().map(|s| parse_plant(s)).collect::<Result<Vec<_>>>()?;
    let kind = match c.kind {
        KindArg::Basket => SynthKind::Basket,
        KindArg::Logistic => SynthKind::Logistic,
        KindArg::Matrix => SynthKind::Matrix { tasks: c.tasks, rank: c.rank },
    };
    let cfg = SynthConfig { seed: c.seed, n: c.n, d: c.d, planted, noise: c.noise, kind, density: c.density };
    let data = synth_planted(&cfg)?;
    let rows = data.a.to_dense_rows();
    let mut header: Vec<String> = (0..c.d).map(|k| format!("x{k}")).collect();
    let responses: Option<DMatrix<f64>> = match (&data.labels, &data.responses) {
        (Some(l), _) => {
            header.push("label".into());
            Some(DMatrix::from_column_slice(c.n, 1, l))
        }
        (None, Some(y)) => {
            header.extend((0..y.ncols()).map(|j| format!("y{j}")));
            Some(y.clone())
        }
        (None, None) => None,
    };
    std::fs::create_dir_all(&c.out).map_err(|source| FckError::Io { path: c.out.clone(), source })?;
    let mut wtr = csv::Writer::from_path(c.out.join("data.csv"))?;
    wtr.write_record(&header)?;
    for (i, r) in rows.iter().enumerate() {
        let mut rec: Vec<String> = r.iter().map(|v| format!("{v}")).collect();
        if let Some(y) = &responses {
            rec.extend(y.row(i).iter().map(|v| format!("{v}")));
        }
        wtr.write_record(&rec)?;
    }
    wtr.flush().map_err(|source| FckError::Io { path: c.out.join("data.csv"), source })?;
    let truth: Vec<TruthEntry> =
        data.truth.iter().map(|(s, w)| TruthEntry { atoms: s.atoms().to_vec(), weight: w.clone() }).collect();
    write_text(c.out.join("truth.json"), &serde_json::to_string_pretty(&truth)?)?;
    println!("wrote {} rows, {} atoms to {}", c.n, c.d, c.out.display());
    Ok(())
}
