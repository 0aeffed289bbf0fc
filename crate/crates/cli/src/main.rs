//! Command-line front door: synthetic-bundle generation, surrogate training,
//! attacks with evaluation, standalone evaluation of saved plans, and report
//! merging.
//!
//! Exit codes: 0 on success, 1 on compute failure, 2 on flag or parameter
//! errors. `LPGIA_THREADS` caps internal parallelism.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use lpgia_core::baselines::{baseline_attack, StrategySpec};
use lpgia_core::eval::{derive_eval_seeds, evaluate, reports_to_csv, AttackMode, EvalReport};
use lpgia_core::graph::{gen_csbm, load_bundle, save_bundle, CsbmParams, GraphBundle, Split};
use lpgia_core::injector::{AttackConfig, InjectionPlan};
use lpgia_core::propagation::smooth;
use lpgia_core::scoring::{target_labels, NodeScores, VictimPool};
use lpgia_core::surrogate::{
    build_ensemble, gcn_forward, save_checkpoint, train_bundle, SurrogateEnsemble, TrainConfig,
    Variant,
};
use lpgia_core::Error;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "lpgia", version, about = "Node-injection attacks on GNNs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic homophilous bundle directory.
    GenSynth(GenSynthArgs),
    /// Train one surrogate/victim model and save a checkpoint.
    Train(TrainArgs),
    /// Train an ensemble, run an attack, evaluate it, write all artifacts.
    Attack(AttackArgs),
    /// Evaluate a saved plan against victim models.
    Eval(EvalArgs),
    /// Merge report JSON files into one CSV summary.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenSynthArgs {
    #[arg(long, default_value_t = 300)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    classes: usize,
    #[arg(long, default_value_t = 30)]
    dim: usize,
    #[arg(long = "p-in", default_value_t = 0.04)]
    p_in: f64,
    #[arg(long = "p-out", default_value_t = 0.008)]
    p_out: f64,
    #[arg(long, default_value_t = 2.0)]
    mu: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct TrainFlags {
    #[arg(long, default_value_t = 16)]
    hidden: usize,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 0.5)]
    lr: f64,
    #[arg(long = "weight-decay", default_value_t = 5e-4)]
    weight_decay: f64,
    #[arg(long, default_value_t = 30)]
    patience: usize,
}

impl TrainFlags {
    fn to_config(&self) -> TrainConfig {
        TrainConfig {
            hidden: self.hidden,
            epochs: self.epochs,
            learning_rate: self.lr,
            weight_decay: self.weight_decay,
            patience: self.patience,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value = "gcn", value_parser = parse_variant)]
    variant: Variant,
    #[command(flatten)]
    train: TrainFlags,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Checkpoint path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AttackArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Output directory for plan, reports and manifest.
    #[arg(long)]
    out: PathBuf,
    /// Injection ratio relative to the original node count.
    #[arg(long, conflicts_with = "n_fake")]
    ratio: Option<f64>,
    /// Absolute number of injected nodes.
    #[arg(long = "n-fake")]
    n_fake: Option<usize>,
    #[arg(long, default_value_t = 0.9)]
    alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    #[arg(long = "nk", default_value_t = 10)]
    n_k: usize,
    /// Surrogate runs averaged into the linearized weights.
    #[arg(long, default_value_t = 20)]
    ensemble: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// node,cluster,feature strategy triple.
    #[arg(long, default_value = "ours,ours,ours")]
    strategy: String,
    /// Comma-separated victim models to evaluate.
    #[arg(long, default_value = "gcn", value_delimiter = ',', value_parser = parse_variant)]
    victims: Vec<Variant>,
    /// Comma-separated evaluation modes.
    #[arg(long, default_value = "evasion", value_delimiter = ',', value_parser = parse_mode)]
    modes: Vec<AttackMode>,
    /// Number of victim training seeds per report.
    #[arg(long = "eval-seeds", default_value_t = 10)]
    eval_seeds: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Smoothing iteration cap.
    #[arg(long, default_value_t = 50)]
    iters: usize,
    #[arg(long = "victim-pool", default_value = "non_train", value_parser = parse_pool)]
    victim_pool: VictimPool,
    /// Skip re-predicting and re-smoothing after each injected node.
    #[arg(long = "no-recompute-smooth")]
    no_recompute_smooth: bool,
    /// Surrogate variant for the ensemble.
    #[arg(long, default_value = "gcn", value_parser = parse_variant)]
    surrogate: Variant,
    /// Also write the per-node score table as scores.csv.
    #[arg(long = "dump-scores")]
    dump_scores: bool,
    #[command(flatten)]
    train: TrainFlags,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    plan: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "gcn", value_delimiter = ',', value_parser = parse_variant)]
    victims: Vec<Variant>,
    #[arg(long, default_value = "evasion", value_delimiter = ',', value_parser = parse_mode)]
    modes: Vec<AttackMode>,
    #[arg(long = "eval-seeds", default_value_t = 10)]
    eval_seeds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Strategy label recorded in the report rows.
    #[arg(long, default_value = "ours,ours,ours")]
    strategy: String,
    #[command(flatten)]
    train: TrainFlags,
}

#[derive(Args)]
struct ReportArgs {
    /// Report JSON files produced by `attack` or `eval`.
    #[arg(long, required = true, num_args = 1..)]
    inputs: Vec<PathBuf>,
    /// CSV output path.
    #[arg(long)]
    out: PathBuf,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    Variant::parse(s).ok_or_else(|| format!("unknown model '{s}' (expected gcn or sgc)"))
}

fn parse_mode(s: &str) -> Result<AttackMode, String> {
    AttackMode::parse(s).ok_or_else(|| format!("unknown mode '{s}'"))
}

fn parse_pool(s: &str) -> Result<VictimPool, String> {
    match s {
        "all" => Ok(VictimPool::All),
        "non_train" => Ok(VictimPool::NonTrain),
        "test_only" => Ok(VictimPool::TestOnly),
        _ => Err(format!("unknown victim pool '{s}'")),
    }
}

/// Full report file: the attack context plus one entry per victim x mode.
#[derive(Serialize, Deserialize)]
struct RunReport {
    toolkit_version: String,
    dataset: String,
    strategy: String,
    n_fake: usize,
    seed: u64,
    reports: Vec<EvalReport>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    toolkit_version: &'a str,
    command: &'a str,
    dataset: String,
    out: String,
    seed: u64,
    n_fake: usize,
    strategy: &'a str,
    victims: Vec<&'a str>,
    modes: Vec<&'a str>,
    eval_seeds: Vec<u64>,
    attack: &'a AttackConfig,
    train: TrainManifest,
    surrogate: &'a str,
}

#[derive(Serialize)]
struct TrainManifest {
    hidden: usize,
    epochs: usize,
    learning_rate: f64,
    weight_decay: f64,
    patience: usize,
}

impl TrainFlags {
    fn manifest(&self) -> TrainManifest {
        TrainManifest {
            hidden: self.hidden,
            epochs: self.epochs,
            learning_rate: self.lr,
            weight_decay: self.weight_decay,
            patience: self.patience,
        }
    }
}

/// Every subcommand records its resolved configuration next to its outputs
/// so a run can be replayed bit-exactly.
fn write_manifest_value(path: &Path, value: serde_json::Value) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(&value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_thread_pool() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e.downcast_ref::<Error>() {
                Some(Error::Config(_)) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn init_thread_pool() -> anyhow::Result<()> {
    if let Ok(raw) = std::env::var("LPGIA_THREADS") {
        let threads: usize = raw.parse().map_err(|_| {
            anyhow::anyhow!("LPGIA_THREADS must be a positive integer, got '{raw}'")
        })?;
        if threads == 0 {
            anyhow::bail!("LPGIA_THREADS must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::GenSynth(args) => cmd_gen_synth(args),
        Command::Train(args) => cmd_train(args),
        Command::Attack(args) => cmd_attack(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Report(args) => cmd_report(args),
    }
}

fn cmd_gen_synth(args: GenSynthArgs) -> anyhow::Result<()> {
    let g = gen_csbm(&CsbmParams {
        n: args.n,
        num_classes: args.classes,
        dim: args.dim,
        p_in: args.p_in,
        p_out: args.p_out,
        mu: args.mu,
        seed: args.seed,
    })?;
    save_bundle(&g, &args.out)?;
    write_manifest_value(
        &args.out.join("manifest.json"),
        serde_json::json!({
            "toolkit_version": VERSION,
            "command": "gen-synth",
            "n": args.n,
            "classes": args.classes,
            "dim": args.dim,
            "p_in": args.p_in,
            "p_out": args.p_out,
            "mu": args.mu,
            "seed": args.seed,
            "out": args.out.display().to_string(),
        }),
    )?;
    println!(
        "wrote {}: n={} m={} classes={} dim={} homophily={:.3}",
        args.out.display(),
        g.n(),
        g.m(),
        g.num_classes(),
        g.dim(),
        g.edge_homophily()
    );
    Ok(())
}

fn cmd_train(args: TrainArgs) -> anyhow::Result<()> {
    let g = load_bundle(&args.dataset)?;
    let cfg = args.train.to_config();
    let params = train_bundle(&g, args.variant, &cfg, args.seed)?;
    let z = gcn_forward(&params, &g)?;
    let pred = z.argmax_rows();
    let acc = |tag| {
        let mask = g.split_mask(tag);
        lpgia_core::eval::accuracy(&pred, g.labels(), &mask)
    };
    save_checkpoint(&params, &args.out)?;
    let mut manifest_path = args.out.as_os_str().to_owned();
    manifest_path.push(".manifest.json");
    write_manifest_value(
        Path::new(&manifest_path),
        serde_json::json!({
            "toolkit_version": VERSION,
            "command": "train",
            "dataset": args.dataset.display().to_string(),
            "variant": args.variant.as_str(),
            "seed": args.seed,
            "train": args.train.manifest(),
            "out": args.out.display().to_string(),
        }),
    )?;
    println!(
        "trained {} on {}: train={:.4} val={:.4} test={:.4} -> {}",
        args.variant.as_str(),
        args.dataset.display(),
        acc(Split::Train),
        acc(Split::Val),
        acc(Split::Test),
        args.out.display()
    );
    Ok(())
}

fn resolve_n_fake(
    g: &GraphBundle,
    ratio: Option<f64>,
    n_fake: Option<usize>,
) -> anyhow::Result<usize> {
    match (ratio, n_fake) {
        (_, Some(k)) => Ok(k),
        (Some(r), None) => {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::config(format!("ratio {r} outside [0, 1]")).into());
            }
            Ok((r * g.n() as f64).floor() as usize)
        }
        (None, None) => Err(Error::config("one of --ratio or --n-fake is required").into()),
    }
}

fn cmd_attack(args: AttackArgs) -> anyhow::Result<()> {
    let strategy = StrategySpec::parse(&args.strategy)?;
    let g = load_bundle(&args.dataset)?;
    let n_fake = resolve_n_fake(&g, args.ratio, args.n_fake)?;
    let train_cfg = args.train.to_config();
    let attack_cfg = AttackConfig {
        n_fake,
        alpha: args.alpha,
        beta: args.beta,
        n_k: args.n_k,
        ensemble_size: args.ensemble,
        seed: args.seed,
        victim_pool: args.victim_pool,
        recompute_smooth: !args.no_recompute_smooth,
        target_from_smoothed: true,
        max_iters: args.iters,
        tol: args.tol,
    };
    attack_cfg.validate()?;
    std::fs::create_dir_all(&args.out)?;

    println!(
        "training {} surrogate runs ({})...",
        args.ensemble,
        args.surrogate.as_str()
    );
    let ensemble = build_ensemble(&g, args.surrogate, args.ensemble, &train_cfg, args.seed)?;

    println!(
        "running attack [{}] with {n_fake} fake nodes...",
        strategy.name()
    );
    let plan = baseline_attack(&g, &ensemble, &attack_cfg, &strategy)?;
    if plan.fakes.len() < n_fake {
        eprintln!(
            "warning: candidate pool exhausted after {} of {n_fake} fake nodes; plan is partial",
            plan.fakes.len()
        );
    }
    println!(
        "plan: {} fake nodes, {} edges, feature budget {}",
        plan.fakes.len(),
        plan.total_victims(),
        plan.audit.delta_x
    );
    plan.save(&args.out.join("plan.json"))?;

    if args.dump_scores {
        let scores = recompute_scores(&g, &ensemble, &attack_cfg)?;
        std::fs::write(args.out.join("scores.csv"), scores.to_csv())?;
    }

    let eval_seeds = derive_eval_seeds(args.seed, args.eval_seeds);
    let mut reports = Vec::new();
    for &victim in &args.victims {
        for &mode in &args.modes {
            let report = evaluate(&g, &plan, mode, victim, &eval_seeds, &train_cfg)?;
            println!(
                "{}/{}: clean={:.4} attacked={:.4} drop={:.4}",
                victim.as_str(),
                mode.as_str(),
                report.clean_acc,
                report.attacked_acc,
                report.drop
            );
            reports.push(report);
        }
    }

    let run_report = RunReport {
        toolkit_version: VERSION.into(),
        dataset: args.dataset.display().to_string(),
        strategy: strategy.name(),
        n_fake: plan.fakes.len(),
        seed: args.seed,
        reports,
    };
    write_report_files(&run_report, &args.out)?;

    let manifest = Manifest {
        toolkit_version: VERSION,
        command: "attack",
        dataset: args.dataset.display().to_string(),
        out: args.out.display().to_string(),
        seed: args.seed,
        n_fake,
        strategy: &args.strategy,
        victims: args.victims.iter().map(Variant::as_str).collect(),
        modes: args.modes.iter().map(AttackMode::as_str).collect(),
        eval_seeds,
        attack: &attack_cfg,
        train: args.train.manifest(),
        surrogate: args.surrogate.as_str(),
    };
    let mut manifest_json = serde_json::to_string_pretty(&manifest)?;
    manifest_json.push('\n');
    std::fs::write(args.out.join("manifest.json"), manifest_json)?;
    Ok(())
}

/// Rebuild the clean-graph score table the attack starts from.
fn recompute_scores(
    g: &GraphBundle,
    ensemble: &SurrogateEnsemble,
    cfg: &AttackConfig,
) -> anyhow::Result<NodeScores> {
    let y = ensemble.z0.argmax_rows();
    let z_tilde = smooth(g, &ensemble.z0, cfg.alpha, cfg.max_iters, cfg.tol)?;
    let c_b = target_labels(&z_tilde, &y)?;
    Ok(NodeScores::compute(g, y, c_b, cfg.beta, cfg.victim_pool)?)
}

fn write_report_files(run_report: &RunReport, out: &Path) -> anyhow::Result<()> {
    let mut json = serde_json::to_string_pretty(run_report)?;
    json.push('\n');
    std::fs::write(out.join("report.json"), json)?;
    let rows: Vec<(String, &EvalReport)> = run_report
        .reports
        .iter()
        .map(|r| (run_report.strategy.clone(), r))
        .collect();
    std::fs::write(out.join("report.csv"), reports_to_csv(&rows))?;
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> anyhow::Result<()> {
    let g = load_bundle(&args.dataset)?;
    let plan = InjectionPlan::load(&args.plan)?;
    let train_cfg = args.train.to_config();
    std::fs::create_dir_all(&args.out)?;
    let eval_seeds = derive_eval_seeds(args.seed, args.eval_seeds);
    let mut reports = Vec::new();
    for &victim in &args.victims {
        for &mode in &args.modes {
            let report = evaluate(&g, &plan, mode, victim, &eval_seeds, &train_cfg)?;
            println!(
                "{}/{}: clean={:.4} attacked={:.4} drop={:.4}",
                victim.as_str(),
                mode.as_str(),
                report.clean_acc,
                report.attacked_acc,
                report.drop
            );
            reports.push(report);
        }
    }
    let run_report = RunReport {
        toolkit_version: VERSION.into(),
        dataset: args.dataset.display().to_string(),
        strategy: args.strategy.clone(),
        n_fake: plan.fakes.len(),
        seed: args.seed,
        reports,
    };
    write_report_files(&run_report, &args.out)?;
    write_manifest_value(
        &args.out.join("manifest.json"),
        serde_json::json!({
            "toolkit_version": VERSION,
            "command": "eval",
            "dataset": args.dataset.display().to_string(),
            "plan": args.plan.display().to_string(),
            "victims": args.victims.iter().map(Variant::as_str).collect::<Vec<_>>(),
            "modes": args.modes.iter().map(AttackMode::as_str).collect::<Vec<_>>(),
            "eval_seeds": eval_seeds,
            "seed": args.seed,
            "strategy": args.strategy,
            "train": args.train.manifest(),
            "out": args.out.display().to_string(),
        }),
    )?;
    Ok(())
}

fn cmd_report(args: ReportArgs) -> anyhow::Result<()> {
    let mut rows: Vec<(String, EvalReport)> = Vec::new();
    for path in &args.inputs {
        let run: RunReport = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        for report in run.reports {
            rows.push((run.strategy.clone(), report));
        }
    }
    let borrowed: Vec<(String, &EvalReport)> = rows.iter().map(|(s, r)| (s.clone(), r)).collect();
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(&args.out, reports_to_csv(&borrowed))?;
    println!("wrote {} ({} rows)", args.out.display(), borrowed.len());
    Ok(())
}
