//! Command-line front end: every workflow of the embedding toolkit with
//! reproducible configs and plot-ready CSV/JSON artifacts.
//!
//! Exit codes: 0 on success/pass, 1 when a verification fails, 2 on usage
//! or configuration errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use gbm_embed::chain::{self, ChainMode, ChainSpec, ChainTree};
use gbm_embed::dist::{GCalculus, TargetDistribution};
use gbm_embed::embed;
use gbm_embed::minimality::{
    kotani_test, minimality_report, DiffusionSpec, Expr, GChoice, ProcessModel, ReportConfig,
    StoppingRule,
};
use gbm_embed::paths::PathConfig;
use gbm_embed::timechange;

const TOOL: &str = "gbm-embed";
const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = TOOL, version, about = "Embeddings in geometric Brownian motion: \
two-barrier constructions, time changes, and minimality diagnostics")]
struct Cli {
    /// Worker threads for the Monte Carlo layers (0 = all cores). Results
    /// are byte-identical for any value.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Directory for output artifacts.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Embed a target law: sample the exit values and verify the law.
    EmbedDist(EmbedDistArgs),
    /// Embed a supermartingale chain and verify the joint path law.
    EmbedChain(EmbedChainArgs),
    /// Re-verify an existing samples CSV against a target law.
    Verify(VerifyArgs),
    /// Push a chain bounded below through the quadratic-variation clock and
    /// check the Brownian stopping-time bound.
    Timechange(TimechangeArgs),
    /// Grade the minimality conditions of a stopped process.
    Minimality(MinimalityArgs),
    /// Tabulate a scale function and classify the boundaries.
    ScaleFn(ScaleFnArgs),
    /// Martingale test for driftless noise coefficients.
    Kotani(KotaniArgs),
}

#[derive(Args)]
struct EmbedDistArgs {
    /// Distribution spec file (JSON: {"kind": "atoms"|"quantile", ...}).
    #[arg(long)]
    dist: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    /// analytic | pathwise
    #[arg(long, default_value = "analytic")]
    mode: String,
    #[arg(long, default_value_t = 1e-3)]
    delta: f64,
    #[arg(long, default_value_t = 1e4)]
    horizon: f64,
    #[arg(long, default_value_t = 0.01)]
    ks_threshold: f64,
    #[arg(long, default_value_t = 10)]
    bins: usize,
    /// Debug aid (pathwise mode): also write the first N simulated paths to
    /// paths.csv. Off by default.
    #[arg(long, default_value_t = 0)]
    dump_paths: usize,
}

#[derive(Args)]
struct EmbedChainArgs {
    /// Chain spec file (JSON: {"root": [{"prob", "node"}, ...]}).
    #[arg(long)]
    chain: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, default_value = "analytic")]
    mode: String,
    #[arg(long, default_value_t = 1e-3)]
    delta: f64,
    #[arg(long, default_value_t = 1e4)]
    horizon: f64,
    /// Pass threshold on the worst path-frequency deviation.
    #[arg(long, default_value_t = 0.01)]
    threshold: f64,
}

#[derive(Args)]
struct VerifyArgs {
    /// A samples CSV produced by embed-dist.
    #[arg(long)]
    samples: PathBuf,
    #[arg(long)]
    dist: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    ks_threshold: f64,
}

#[derive(Args)]
struct TimechangeArgs {
    /// Chain spec file; values may be negative but not below -c.
    #[arg(long)]
    chain: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 1e-3)]
    delta: f64,
    #[arg(long, default_value_t = 1e4)]
    horizon: f64,
    #[arg(long, default_value_t = 0.02)]
    ks_threshold: f64,
}

#[derive(Args)]
struct MinimalityArgs {
    /// diffusion | bm
    #[arg(long, default_value = "bm")]
    process: String,
    /// Drift expression (diffusion process).
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    mu: String,
    /// Diffusion coefficient expression.
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    sigma: String,
    /// Domain as "lower:upper"; inf / -inf allowed.
    #[arg(long, default_value = "-inf:inf", allow_hyphen_values = true)]
    domain: String,
    /// Reference/start point (diffusion) and scale normalization point.
    #[arg(long, default_value_t = 0.0)]
    x0: f64,
    /// Dimension of the Brownian process.
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Start point for multi-dimensional Brownian motion, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    start: Option<String>,
    /// Stopping rule: det:T | exit:LO:HI | hit:LEVEL | inflated:T:FACTOR
    #[arg(long, allow_hyphen_values = true)]
    stop: String,
    /// Transform: identity | scale | neg-scale | scale-oriented |
    /// power:DIM:P1,P2,... | log:P1,P2,...
    #[arg(long, default_value = "identity")]
    g: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 0.015625)]
    delta: f64,
    #[arg(long, default_value_t = 64.0)]
    horizon: f64,
    #[arg(long, default_value_t = 16)]
    obs_points: usize,
}

#[derive(Args)]
struct ScaleFnArgs {
    #[arg(long, allow_hyphen_values = true)]
    mu: String,
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    sigma: String,
    /// Reference point with s(c) = 0.
    #[arg(long, default_value_t = 0.0)]
    c: f64,
    /// Grid as "start:end:step".
    #[arg(long, allow_hyphen_values = true)]
    grid: String,
    #[arg(long, default_value = "-inf:inf", allow_hyphen_values = true)]
    domain: String,
}

#[derive(Args)]
struct KotaniArgs {
    /// Noise coefficient expression kappa(x).
    #[arg(long, allow_hyphen_values = true)]
    kappa: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) =
            rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global()
        {
            eprintln!("{TOOL}: failed to configure thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(passed) => {
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(msg) => {
            eprintln!("{TOOL}: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<bool, String> {
    std::fs::create_dir_all(&cli.out_dir)
        .map_err(|e| format!("out-dir {}: {e}", cli.out_dir.display()))?;
    match &cli.command {
        Command::EmbedDist(args) => embed_dist(cli, args),
        Command::EmbedChain(args) => embed_chain_cmd(cli, args),
        Command::Verify(args) => verify(cli, args),
        Command::Timechange(args) => timechange_cmd(cli, args),
        Command::Minimality(args) => minimality(cli, args),
        Command::ScaleFn(args) => scale_fn(cli, args),
        Command::Kotani(args) => kotani(cli, args),
    }
}

fn read_to_string(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn write_artifact(dir: &Path, name: &str, contents: &str) -> Result<(), String> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| format!("{}: {e}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn csv_header(config: &str) -> String {
    format!("# {TOOL} v{VERSION}\n# {config}\n")
}

fn json_report<T: Serialize>(config: serde_json::Value, body: &T) -> String {
    let mut root = json!({
        "tool": { "name": TOOL, "version": VERSION },
        "config": config,
    });
    let body = serde_json::to_value(body).expect("report serialization");
    root.as_object_mut()
        .unwrap()
        .insert("report".into(), body);
    let mut out = serde_json::to_string_pretty(&root).expect("report serialization");
    out.push('\n');
    out
}

fn parse_mode(mode: &str) -> Result<ChainMode, String> {
    match mode {
        "analytic" => Ok(ChainMode::Analytic),
        "pathwise" => Ok(ChainMode::Pathwise),
        other => Err(format!("mode: expected analytic or pathwise, got {other:?}")),
    }
}

fn embed_dist(cli: &Cli, args: &EmbedDistArgs) -> Result<bool, String> {
    let dist = TargetDistribution::from_json_str(&read_to_string(&args.dist)?)
        .map_err(|e| e.to_string())?;
    let calc = GCalculus::new(&dist).map_err(|e| e.to_string())?;
    let mode = parse_mode(&args.mode)?;
    let cfg = PathConfig { delta: args.delta, horizon: args.horizon, ..PathConfig::default() };
    let samples = match mode {
        ChainMode::Analytic => embed::sample_embedding(&dist, args.seed, args.n),
        ChainMode::Pathwise => {
            embed::sample_embedding_pathwise(&dist, args.seed, args.n, &cfg)
        }
    }
    .map_err(|e| e.to_string())?;

    let config_line = format!(
        "command=embed-dist dist={} seed={} n={} mode={} delta={} horizon={} ks_threshold={}",
        args.dist.display(),
        args.seed,
        args.n,
        args.mode,
        args.delta,
        args.horizon,
        args.ks_threshold
    );
    let csv = csv_header(&config_line) + &embed::render_csv(&samples);
    write_artifact(&cli.out_dir, "samples.csv", &csv)?;

    if args.dump_paths > 0 && mode == ChainMode::Pathwise {
        let mut dump = csv_header(&config_line) + "path,t,value\n";
        for i in 0..args.dump_paths.min(args.n) {
            let mut rng = gbm_embed::rng::Stream::new(args.seed, i as u64);
            let r = rng.uniform();
            let b = calc.barrier_pair(r).map_err(|e| e.to_string())?;
            let (_, path) =
                gbm_embed::paths::first_exit_traced(&mut rng, 1.0, b.alpha, b.beta, &cfg);
            for (t, v) in path.grid.iter().zip(&path.values) {
                dump.push_str(&format!("{i},{t},{v}\n"));
            }
        }
        write_artifact(&cli.out_dir, "paths.csv", &dump)?;
    }

    let censored = samples.iter().filter(|s| s.censored).count();
    if mode == ChainMode::Pathwise && censored as f64 > 0.001 * samples.len() as f64 {
        return Err(format!(
            "censoring rate {censored}/{} exceeds the 0.1% budget; extend --horizon",
            samples.len()
        ));
    }
    let fit = embed::verify_law(&samples, &dist, args.ks_threshold).map_err(|e| e.to_string())?;
    let config = json!({
        "command": "embed-dist",
        "dist": args.dist.display().to_string(),
        "seed": args.seed,
        "n": args.n,
        "mode": args.mode,
        "delta": args.delta,
        "horizon": args.horizon,
        "ks_threshold": args.ks_threshold,
    });
    write_artifact(&cli.out_dir, "fit.json", &json_report(config.clone(), &fit))?;
    let conditional =
        embed::verify_conditional_mean(&samples, &calc, args.bins).map_err(|e| e.to_string())?;
    write_artifact(
        &cli.out_dir,
        "conditional_mean.json",
        &json_report(config, &conditional),
    )?;
    println!(
        "law fit: ks = {:.6} (threshold {}), censored = {}, conditional-mean pass = {}",
        fit.ks,
        args.ks_threshold,
        censored,
        conditional.vacuous || conditional.pass
    );
    // The exit code follows the law fit; the conditional-mean report is a
    // supplementary artifact with its own pass flag.
    Ok(fit.pass)
}

fn embed_chain_cmd(cli: &Cli, args: &EmbedChainArgs) -> Result<bool, String> {
    let tree = ChainTree::from_json_str(&read_to_string(&args.chain)?)
        .map_err(|e| e.to_string())?;
    let spec = ChainSpec::new(&tree).map_err(|e| e.to_string())?;
    let mode = parse_mode(&args.mode)?;
    let cfg = PathConfig { delta: args.delta, horizon: args.horizon, ..PathConfig::default() };
    let samples =
        chain::embed_chain(&spec, args.seed, args.n, mode, &cfg).map_err(|e| e.to_string())?;
    let config_line = format!(
        "command=embed-chain chain={} seed={} n={} mode={} delta={} horizon={} threshold={}",
        args.chain.display(),
        args.seed,
        args.n,
        args.mode,
        args.delta,
        args.horizon,
        args.threshold
    );
    let csv = csv_header(&config_line) + &chain::render_csv(&samples);
    write_artifact(&cli.out_dir, "chain_samples.csv", &csv)?;
    let report =
        chain::verify_joint_law(&samples, &spec, args.threshold).map_err(|e| e.to_string())?;
    let config = json!({
        "command": "embed-chain",
        "chain": args.chain.display().to_string(),
        "seed": args.seed,
        "n": args.n,
        "mode": args.mode,
        "delta": args.delta,
        "horizon": args.horizon,
        "threshold": args.threshold,
    });
    write_artifact(&cli.out_dir, "joint_law.json", &json_report(config, &report))?;
    println!(
        "joint law: max deviation = {:.6} over {} paths (threshold {})",
        report.max_abs_deviation,
        report.paths.len(),
        args.threshold
    );
    Ok(report.pass)
}

fn verify(cli: &Cli, args: &VerifyArgs) -> Result<bool, String> {
    let dist = TargetDistribution::from_json_str(&read_to_string(&args.dist)?)
        .map_err(|e| e.to_string())?;
    let text = read_to_string(&args.samples)?;
    let mut ys = Vec::new();
    let mut censored = 0usize;
    let mut header: Option<Vec<String>> = None;
    for line in text.lines() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if header.is_none() {
            header = Some(line.split(',').map(|s| s.trim().to_string()).collect());
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        let head = header.as_ref().unwrap();
        let idx = |name: &str| {
            head.iter()
                .position(|h| h == name)
                .ok_or_else(|| format!("samples: missing column {name:?}"))
        };
        let y_idx = idx("y")?;
        let c_idx = idx("censored")?;
        let is_censored = cols.get(c_idx).map(|s| s.trim() == "true").unwrap_or(false);
        if is_censored {
            censored += 1;
            continue;
        }
        let raw = cols
            .get(y_idx)
            .ok_or_else(|| format!("samples: short row {line:?}"))?
            .trim();
        let y: f64 = if raw == "inf" {
            f64::INFINITY
        } else {
            raw.parse().map_err(|_| format!("samples: bad y value {raw:?}"))?
        };
        ys.push(y);
    }
    let samples: Vec<embed::EmbeddingSample> = ys
        .iter()
        .map(|&y| embed::EmbeddingSample {
            r: 0.0,
            eta: 0.0,
            alpha: 0.0,
            beta: 0.0,
            y,
            tau: None,
            censored: false,
        })
        .collect();
    let fit = embed::verify_law(&samples, &dist, args.ks_threshold).map_err(|e| e.to_string())?;
    let config = json!({
        "command": "verify",
        "samples": args.samples.display().to_string(),
        "dist": args.dist.display().to_string(),
        "ks_threshold": args.ks_threshold,
        "censored_rows_skipped": censored,
    });
    write_artifact(&cli.out_dir, "verify.json", &json_report(config, &fit))?;
    println!("ks = {:.6} over {} samples (threshold {})", fit.ks, fit.n, args.ks_threshold);
    Ok(fit.pass)
}

fn timechange_cmd(cli: &Cli, args: &TimechangeArgs) -> Result<bool, String> {
    let tree = ChainTree::from_json_str(&read_to_string(&args.chain)?)
        .map_err(|e| e.to_string())?;
    let cfg = PathConfig { delta: args.delta, horizon: args.horizon, ..PathConfig::default() };
    let samples = timechange::embed_and_bound(&tree, args.c, args.seed, args.n, &cfg)
        .map_err(|e| e.to_string())?;
    let summary =
        timechange::summarize(&samples, &tree, args.c, args.ks_threshold)
            .map_err(|e| e.to_string())?;
    #[derive(Serialize)]
    struct Replica<'a> {
        t: &'a [f64],
        h_hit: f64,
        w_at_t: &'a [f64],
        bound_ok: bool,
        censored: bool,
    }
    #[derive(Serialize)]
    struct Body<'a> {
        summary: &'a timechange::TimechangeReport,
        replicas: Vec<Replica<'a>>,
    }
    let body = Body {
        summary: &summary,
        replicas: samples
            .iter()
            .map(|s| Replica {
                t: &s.t,
                h_hit: s.h_hit,
                w_at_t: &s.w_at_t,
                bound_ok: s.bound_ok,
                censored: s.censored,
            })
            .collect(),
    };
    let config = json!({
        "command": "timechange",
        "chain": args.chain.display().to_string(),
        "c": args.c,
        "seed": args.seed,
        "n": args.n,
        "delta": args.delta,
        "horizon": args.horizon,
        "ks_threshold": args.ks_threshold,
    });
    write_artifact(&cli.out_dir, "timechange.json", &json_report(config, &body))?;
    println!(
        "bound violations: {} / {} replicas; W at T_1 ks = {:?}",
        summary.bound_violations, summary.replicas, summary.ks_w_t1
    );
    Ok(summary.pass)
}

fn parse_domain(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 2 {
        return Err(format!("domain: expected \"lower:upper\", got {s:?}"));
    }
    let parse = |p: &str| -> Result<f64, String> {
        match p {
            "inf" | "+inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            other => other.parse().map_err(|_| format!("domain: bad bound {other:?}")),
        }
    };
    Ok((parse(parts[0])?, parse(parts[1])?))
}

fn parse_stop(s: &str) -> Result<StoppingRule, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |p: &str| -> Result<f64, String> {
        p.parse().map_err(|_| format!("stop: bad number {p:?} in {s:?}"))
    };
    match parts.as_slice() {
        ["det", t] => Ok(StoppingRule::Deterministic { at: num(t)? }),
        ["exit", lo, hi] => Ok(StoppingRule::FirstExit { lower: num(lo)?, upper: num(hi)? }),
        ["hit", level] => Ok(StoppingRule::FirstHit { level: num(level)? }),
        ["inflated", t, f] => {
            Ok(StoppingRule::InflatedHit { observe_at: num(t)?, factor: num(f)? })
        }
        _ => Err(format!(
            "stop: expected det:T, exit:LO:HI, hit:LEVEL or inflated:T:FACTOR, got {s:?}"
        )),
    }
}

fn parse_points(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|p| p.trim().parse().map_err(|_| format!("bad coordinate {p:?}")))
        .collect()
}

fn parse_g(s: &str) -> Result<GChoice, String> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        ["identity"] => Ok(GChoice::Identity),
        ["scale"] => Ok(GChoice::Scale),
        ["neg-scale"] => Ok(GChoice::NegScale),
        ["scale-oriented"] => Ok(GChoice::ScaleOriented),
        ["power", dim, pole] => Ok(GChoice::PowerDecay {
            dim: dim.parse().map_err(|_| format!("g: bad dimension {dim:?}"))?,
            pole: parse_points(pole)?,
        }),
        ["log", pole] => Ok(GChoice::LogDistance { pole: parse_points(pole)? }),
        _ => Err(format!("g: unrecognized transform {s:?}")),
    }
}

fn minimality(cli: &Cli, args: &MinimalityArgs) -> Result<bool, String> {
    let process = match args.process.as_str() {
        "diffusion" => {
            let (lower, upper) = parse_domain(&args.domain)?;
            let mu = Expr::parse(&args.mu).map_err(|e| e.to_string())?;
            let sigma = Expr::parse(&args.sigma).map_err(|e| e.to_string())?;
            ProcessModel::Diffusion(
                DiffusionSpec::new(lower, upper, mu, sigma, args.x0)
                    .map_err(|e| e.to_string())?,
            )
        }
        "bm" => {
            let start = match &args.start {
                Some(s) => parse_points(s)?,
                None => vec![args.x0; args.dim],
            };
            ProcessModel::BrownianMotion { dim: args.dim, start }
        }
        other => return Err(format!("process: expected diffusion or bm, got {other:?}")),
    };
    let rule = parse_stop(&args.stop)?;
    let g = parse_g(&args.g)?;
    let cfg = ReportConfig {
        seed: args.seed,
        replicas: args.n,
        delta: args.delta,
        horizon: args.horizon,
        obs_points: args.obs_points,
        ..ReportConfig::default()
    };
    let report = minimality_report(&process, &rule, &g, &cfg).map_err(|e| e.to_string())?;
    let config = json!({
        "command": "minimality",
        "process": args.process,
        "mu": args.mu,
        "sigma": args.sigma,
        "domain": args.domain,
        "x0": args.x0,
        "dim": args.dim,
        "stop": args.stop,
        "g": args.g,
        "seed": args.seed,
        "n": args.n,
        "delta": args.delta,
        "horizon": args.horizon,
        "obs_points": args.obs_points,
    });
    write_artifact(&cli.out_dir, "minimality.json", &json_report(config, &report))?;
    println!(
        "overall: {:?} (a: {:?}, b: {:?}, c: {:?}, shortcut: {:?})",
        report.overall,
        report.condition_a.status,
        report.condition_b.status,
        report.condition_c.status,
        report.shortcut_used
    );
    Ok(true)
}

fn scale_fn(cli: &Cli, args: &ScaleFnArgs) -> Result<bool, String> {
    let parts: Vec<&str> = args.grid.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("grid: expected \"start:end:step\", got {:?}", args.grid));
    }
    let num = |p: &str| -> Result<f64, String> {
        p.parse().map_err(|_| format!("grid: bad number {p:?}"))
    };
    let (a, b, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
    if !(step > 0.0 && b > a) {
        return Err("grid: need end > start and step > 0".into());
    }
    let (lower, upper) = parse_domain(&args.domain)?;
    let mu = Expr::parse(&args.mu).map_err(|e| e.to_string())?;
    let sigma = Expr::parse(&args.sigma).map_err(|e| e.to_string())?;
    let spec =
        DiffusionSpec::new(lower, upper, mu, sigma, args.c).map_err(|e| e.to_string())?;
    let n = ((b - a) / step).round() as usize;
    let xs: Vec<f64> = (0..=n).map(|k| a + k as f64 * step).collect();
    let table = spec.scale_table(&xs).map_err(|e| e.to_string())?;
    let config_line = format!(
        "command=scale-fn mu={} sigma={} c={} grid={} domain={}",
        args.mu, args.sigma, args.c, args.grid, args.domain
    );
    let mut csv = csv_header(&config_line) + "x,s\n";
    for (x, s) in table.xs.iter().zip(&table.values) {
        csv.push_str(&format!("{x},{s}\n"));
    }
    write_artifact(&cli.out_dir, "scale.csv", &csv)?;
    let classification = spec.classify_boundaries().map_err(|e| e.to_string())?;
    let config = json!({
        "command": "scale-fn",
        "mu": args.mu,
        "sigma": args.sigma,
        "c": args.c,
        "grid": args.grid,
        "domain": args.domain,
    });
    write_artifact(&cli.out_dir, "boundaries.json", &json_report(config, &classification))?;
    println!("classification: {:?}", classification.verdict);
    Ok(true)
}

fn kotani(cli: &Cli, args: &KotaniArgs) -> Result<bool, String> {
    let kappa = Expr::parse(&args.kappa).map_err(|e| e.to_string())?;
    let report = kotani_test(&kappa).map_err(|e| e.to_string())?;
    let config = json!({ "command": "kotani", "kappa": args.kappa });
    let rendered = json_report(config, &report);
    print!("{rendered}");
    write_artifact(&cli.out_dir, "kotani.json", &rendered)?;
    Ok(true)
}
