//! Command-line front end: reproducible simulation, estimation, parameter
//! selection, benchmarking and verification experiments, all emitting CSV
//! tables plus a manifest sufficient to reproduce them bit-for-bit.
//!
//! Exit codes: 0 success, 2 validation error, 3 numerical failure; the
//! reason goes to stderr as a single machine-parseable line.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use spotvol::baselines::{PreAvgConfig, PreAvgEstimator, TwoScaleConfig};
use spotvol::estimator::estimate_path;
use spotvol::experiments::{
    adaptive_select_path, benchmark_sweep, empirical_day, BenchmarkConfig, SESSION_SECONDS,
};
use spotvol::ingest::{load_ticks, resample_last_tick, SessionSpec};
use spotvol::lemmas::run_lemma_suite;
use spotvol::metrics::{clt_check, CltCheckConfig, CltSpec, VarianceRegime};
use spotvol::path::{interior_grid, EstimatorConfig, PricePath, SpotVolPath};
use spotvol::plugins::{build_amise_inputs, PluginConfig};
use spotvol::selector::{select_params, SelectorOptions};
use spotvol::simulate::{add_noise, simulate, HestonParams, SimModel, Sv1fParams};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "spotvol", version, about = "Fourier spot-volatility toolkit")]
struct Cli {
    /// Plain-text `key = value` config file; command-line flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for path-level parallelism (results merge in a fixed
    /// order either way).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate price paths with noise and write per-path CSVs.
    Simulate(SimulateArgs),
    /// Estimate a spot-variance path from an observed session.
    Estimate(EstimateArgs),
    /// Adaptive selection of the cut-off pair (N, M) for one session.
    Select(SelectArgs),
    /// MISE/MIAE sweep over the (c, a) cut-off constants.
    Benchmark(BenchmarkArgs),
    /// Standardized-return normality study over a directory of daily tick files.
    Empirical(EmpiricalArgs),
    /// Monte Carlo check of a central limit theorem regime.
    Clt(CltArgs),
    /// Numerical verification of the kernel limit identities.
    KernelCheck(KernelCheckArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Model: sv1f | heston | const:<variance-per-day>
    #[arg(long, default_value = "sv1f")]
    model: String,
    /// Observations per session.
    #[arg(long)]
    n: Option<usize>,
    /// Session length in seconds.
    #[arg(long)]
    horizon: Option<f64>,
    /// Noise-to-signal ratio.
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long)]
    n_paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (defaults to $SPOTVOL_OUT_DIR or `.`).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    /// Input CSV with `timestamp,logprice` (or `timestamp,price`) columns.
    #[arg(long)]
    input: PathBuf,
    /// fourier | two-scale | preavg
    #[arg(long, default_value = "fourier")]
    method: String,
    /// Convolution cut-off N (fourier).
    #[arg(long)]
    n_cut: Option<usize>,
    /// Inversion cut-off M (fourier).
    #[arg(long)]
    m_cut: Option<usize>,
    /// Select (N, M) adaptively instead of passing them explicitly.
    #[arg(long)]
    adaptive: bool,
    /// Two-scale constants.
    #[arg(long)]
    c_k: Option<f64>,
    #[arg(long)]
    c_h: Option<f64>,
    /// Pre-averaging kernel bandwidth constant.
    #[arg(long)]
    c_m: Option<f64>,
    /// Evaluation grid step in seconds (interior points only).
    #[arg(long)]
    grid_step: Option<f64>,
    /// Truncate negative variance estimates at zero.
    #[arg(long)]
    clamp_negative: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    input: PathBuf,
    /// Selector box and optimisation overrides.
    #[arg(long)]
    n_lo: Option<f64>,
    #[arg(long)]
    n_hi: Option<f64>,
    #[arg(long)]
    m_lo: Option<f64>,
    #[arg(long)]
    m_hi: Option<f64>,
    /// Learning-rate constant c_λ (λ = c_λ/ξ̂; stable range ~[300, 700]).
    #[arg(long)]
    c_lambda: Option<f64>,
    /// Stopping threshold ϑ.
    #[arg(long)]
    threshold: Option<f64>,
    /// Iteration cap K.
    #[arg(long)]
    max_iters: Option<usize>,
    /// Write the objective trace here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Comma-separated models (sv1f, heston, const:<v>).
    #[arg(long, default_value = "sv1f,heston")]
    models: String,
    /// Comma-separated noise-to-signal ratios.
    #[arg(long, default_value = "1,2,3")]
    zetas: String,
    /// c sweep as lo:hi:step.
    #[arg(long, default_value = "1:10:1")]
    c_range: String,
    /// a sweep as lo:hi:step.
    #[arg(long, default_value = "0.1:0.5:0.1")]
    a_range: String,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    n_paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EmpiricalArgs {
    /// Directory of per-day tick CSVs (`timestamp,price`).
    #[arg(long)]
    data_dir: PathBuf,
    /// File listing days to skip (one name stem per line, ISO dates).
    #[arg(long)]
    exclusions: Option<PathBuf>,
    /// Return horizon in seconds.
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CltArgs {
    /// no-noise | no-noise-volvol | noisy | noisy-volvol
    #[arg(long, default_value = "noisy-volvol")]
    regime: String,
    /// const:<variance> | sv1f | heston
    #[arg(long, default_value = "const:1.0")]
    model: String,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long)]
    n_paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct KernelCheckArgs {
    /// Comma-separated kernel orders.
    #[arg(long, default_value = "4,8,16,32,64,128,256,512")]
    orders: String,
    /// Tolerance schedule factor: relative error must stay below factor/order.
    #[arg(long)]
    tolerance_factor: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    let config = match cli.config.as_deref().map(read_config).transpose() {
        Ok(map) => map.unwrap_or_default(),
        Err(e) => {
            eprintln!("error: validation: {e:#}");
            std::process::exit(2);
        }
    };
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args, &config),
        Command::Estimate(args) => cmd_estimate(args, &config),
        Command::Select(args) => cmd_select(args, &config),
        Command::Benchmark(args) => cmd_benchmark(args, &config),
        Command::Empirical(args) => cmd_empirical(args, &config),
        Command::Clt(args) => cmd_clt(args, &config),
        Command::KernelCheck(args) => cmd_kernel_check(args, &config),
    };
    if let Err(e) = result {
        let code = if e
            .downcast_ref::<spotvol::Error>()
            .map(|err| matches!(err, spotvol::Error::Numerical(_)))
            .unwrap_or(false)
        {
            eprintln!("error: numerical: {e:#}");
            3
        } else {
            eprintln!("error: validation: {e:#}");
            2
        };
        std::process::exit(code);
    }
}

type Config = BTreeMap<String, String>;

fn read_config(path: &Path) -> Result<Config> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let mut map = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("config line {} is not `key = value`", idx + 1))?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn cfg_parse<T: std::str::FromStr>(config: &Config, key: &str) -> Result<Option<T>> {
    match config.get(key) {
        None => Ok(None),
        Some(raw) => raw
            .parse::<T>()
            .map(Some)
            .map_err(|_| anyhow!("config key '{key}' has unparseable value '{raw}'")),
    }
}

/// CLI flag wins, then the config file, then the built-in default.
fn resolve<T: std::str::FromStr + Clone>(
    flag: Option<T>,
    config: &Config,
    key: &str,
    default: T,
) -> Result<T> {
    Ok(flag.or(cfg_parse(config, key)?).unwrap_or(default))
}

fn out_dir_default() -> PathBuf {
    std::env::var_os("SPOTVOL_OUT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

fn out_path(explicit: Option<PathBuf>, name: &str) -> PathBuf {
    explicit.unwrap_or_else(|| out_dir_default().join(name))
}

fn parse_model(spec: &str) -> Result<SimModel> {
    let spec = spec.trim();
    if let Some(v) = spec.strip_prefix("const:") {
        return Ok(SimModel::ConstVol {
            sigma2: v
                .parse()
                .map_err(|_| anyhow!("bad constant variance '{v}'"))?,
        });
    }
    match spec {
        "sv1f" => Ok(SimModel::Sv1f(Sv1fParams::default())),
        "heston" => Ok(SimModel::Heston(HestonParams::default())),
        other => bail!("unknown model '{other}' (expected sv1f | heston | const:<v>)"),
    }
}

fn parse_regime(name: &str) -> Result<VarianceRegime> {
    match name {
        "no-noise" => Ok(VarianceRegime::NoNoise),
        "no-noise-volvol" => Ok(VarianceRegime::NoNoiseVolOfVol),
        "noisy" => Ok(VarianceRegime::Noisy),
        "noisy-volvol" => Ok(VarianceRegime::NoisyVolOfVol),
        other => bail!("unknown regime '{other}'"),
    }
}

fn parse_list_f64(raw: &str) -> Result<Vec<f64>> {
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| anyhow!("bad number '{s}'"))
        })
        .collect()
}

fn parse_range(raw: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = raw.split(':').collect();
    if parts.len() != 3 {
        bail!("range '{raw}' must be lo:hi:step");
    }
    let lo: f64 = parts[0].parse().map_err(|_| anyhow!("bad range lo"))?;
    let hi: f64 = parts[1].parse().map_err(|_| anyhow!("bad range hi"))?;
    let step: f64 = parts[2].parse().map_err(|_| anyhow!("bad range step"))?;
    if !(step > 0.0 && hi >= lo) {
        bail!("range '{raw}' must have positive step and hi >= lo");
    }
    let mut out = Vec::new();
    let mut v = lo;
    while v <= hi + 1e-9 * step {
        out.push((v * 1e12).round() / 1e12);
        v += step;
    }
    Ok(out)
}

/// Manifest written alongside every command's outputs: resolved settings,
/// seed, artifact version and a digest per output file.
struct Manifest {
    command: String,
    entries: Vec<(String, String)>,
    files: Vec<(String, String)>,
}

impl Manifest {
    fn new(command: &str) -> Self {
        Manifest {
            command: command.to_string(),
            entries: Vec::new(),
            files: Vec::new(),
        }
    }

    fn set(&mut self, key: &str, value: impl std::fmt::Display) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    fn add_file(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path)?;
        let digest = Sha256::digest(&bytes);
        self.files.push((
            path.file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
            format!("{digest:x}"),
        ));
        Ok(())
    }

    fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(format!("{}_manifest.txt", self.command));
        let mut text = String::new();
        text.push_str(&format!("command = {}\n", self.command));
        text.push_str(&format!("artifact_version = {VERSION}\n"));
        for (k, v) in &self.entries {
            text.push_str(&format!("{k} = {v}\n"));
        }
        for (name, digest) in &self.files {
            text.push_str(&format!("sha256 {digest}  {name}\n"));
        }
        fs::write(&path, text)?;
        Ok(path)
    }
}

fn write_csv(path: &Path, comment_lines: &[String], header: &str, rows: &[String]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut file = fs::File::create(path)?;
    for line in comment_lines {
        writeln!(file, "# {line}")?;
    }
    writeln!(file, "{header}")?;
    for row in rows {
        writeln!(file, "{row}")?;
    }
    Ok(())
}

fn load_price_path(path: &Path) -> Result<PricePath> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
    };
    let ts_col = find("timestamp").ok_or_else(|| anyhow!("missing 'timestamp' column"))?;
    let (px_col, is_log) = if let Some(c) = find("logprice") {
        (c, true)
    } else if let Some(c) = find("price") {
        (c, false)
    } else {
        bail!("need a 'logprice' or 'price' column");
    };
    let mut ts = Vec::new();
    let mut lp = Vec::new();
    for row in reader.records() {
        let row = row?;
        let t: f64 = row
            .get(ts_col)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| anyhow!("bad timestamp in {}", path.display()))?;
        let p: f64 = row
            .get(px_col)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| anyhow!("bad price in {}", path.display()))?;
        ts.push(t);
        lp.push(if is_log { p } else { p.ln() });
    }
    let horizon = ts.last().copied().unwrap_or(0.0);
    Ok(PricePath::new(ts, lp, horizon)?)
}

fn write_path_csv(path: &Path, comments: &[String], pp: &PricePath) -> Result<()> {
    let rows: Vec<String> = pp
        .timestamps()
        .iter()
        .zip(pp.log_prices())
        .map(|(t, p)| format!("{t},{p}"))
        .collect();
    write_csv(path, comments, "timestamp,logprice", &rows)
}

fn write_var_csv(path: &Path, comments: &[String], vp: &SpotVolPath) -> Result<()> {
    let rows: Vec<String> = vp
        .grid
        .iter()
        .zip(&vp.values)
        .map(|(t, v)| format!("{t},{v}"))
        .collect();
    write_csv(path, comments, "timestamp,variance_per_day", &rows)
}

fn cmd_simulate(args: SimulateArgs, config: &Config) -> Result<()> {
    let model_name: String = resolve(Some(args.model.clone()), config, "model", args.model)?;
    let model = parse_model(&model_name)?;
    let n = resolve(args.n, config, "n", 23400usize)?;
    let horizon = resolve(args.horizon, config, "horizon", SESSION_SECONDS)?;
    let zeta = resolve(args.zeta, config, "zeta", 1.0f64)?;
    let n_paths = resolve(args.n_paths, config, "n_paths", 1usize)?;
    let seed = resolve(args.seed, config, "seed", 1u64)?;
    let dir = args.out_dir.unwrap_or_else(out_dir_default);
    fs::create_dir_all(&dir)?;

    let mut manifest = Manifest::new("simulate");
    manifest.set("model", &model_name);
    manifest.set("n", n);
    manifest.set("horizon_seconds", horizon);
    manifest.set("zeta", zeta);
    manifest.set("n_paths", n_paths);
    manifest.set("seed", seed);

    for i in 0..n_paths {
        let path_seed = seed.wrapping_add(i as u64);
        let sim = simulate(&model, n, horizon, path_seed)?;
        let noised = add_noise(&sim, zeta)?;
        let comments = vec![
            format!("model = {model_name}, seed = {path_seed}, zeta = {zeta}"),
            format!("xi = {}", noised.noise.xi),
            "units: timestamp seconds from open, variance per day".to_string(),
        ];
        manifest.set(&format!("path_{i:03}_xi"), noised.noise.xi);
        let clean = dir.join(format!("path_{i:03}_clean.csv"));
        let noisy = dir.join(format!("path_{i:03}_noisy.csv"));
        let truev = dir.join(format!("path_{i:03}_truevar.csv"));
        write_path_csv(&clean, &comments, &noised.clean)?;
        write_path_csv(&noisy, &comments, &noised.noisy)?;
        write_var_csv(&truev, &comments, &noised.true_var)?;
        manifest.add_file(&clean)?;
        manifest.add_file(&noisy)?;
        manifest.add_file(&truev)?;
    }
    let mpath = manifest.write(&dir)?;
    println!(
        "wrote {} files and {}",
        3 * n_paths,
        mpath.display()
    );
    Ok(())
}

fn cmd_estimate(args: EstimateArgs, config: &Config) -> Result<()> {
    let path = load_price_path(&args.input)?;
    let n = path.n_increments();
    let grid_step = resolve(args.grid_step, config, "grid_step", 60.0f64)?;
    let grid = interior_grid(path.horizon(), grid_step)?;
    let method: String = resolve(Some(args.method.clone()), config, "method", args.method)?;

    let mut manifest = Manifest::new("estimate");
    manifest.set("input", args.input.display());
    manifest.set("method", &method);
    manifest.set("grid_step_seconds", grid_step);

    let est = match method.as_str() {
        "fourier" => {
            let cfg = if args.adaptive {
                let (sel, _) = adaptive_select_path(&path)?;
                manifest.set("adaptive", "true");
                manifest.set("n_cut", sel.n_star);
                manifest.set("m_cut", sel.m_star);
                manifest.set("converged", sel.converged);
                EstimatorConfig::new(sel.n_star, sel.m_star)
            } else {
                let n_cut = resolve(args.n_cut, config, "n_cut", 0usize)?;
                let m_cut = resolve(args.m_cut, config, "m_cut", 0usize)?;
                if n_cut == 0 || m_cut == 0 {
                    bail!("fourier needs --n-cut and --m-cut, or --adaptive");
                }
                manifest.set("n_cut", n_cut);
                manifest.set("m_cut", m_cut);
                EstimatorConfig::new(n_cut, m_cut)
            };
            estimate_path(&path, &cfg, &grid)?
        }
        "two-scale" => {
            let d = TwoScaleConfig::default();
            let cfg = TwoScaleConfig {
                c_k: resolve(args.c_k, config, "ts_c_k", d.c_k)?,
                c_h: resolve(args.c_h, config, "ts_c_h", d.c_h)?,
            };
            manifest.set("ts_c_k", cfg.c_k);
            manifest.set("ts_c_h", cfg.c_h);
            manifest.set("lag_k", cfg.lag(n));
            let h_days = cfg.window_days(n);
            let t_max = (1.0 - h_days) * path.horizon();
            let values: Vec<f64> = grid
                .iter()
                .map(|t| spotvol::baselines::two_scale(&path, t.min(t_max), &cfg))
                .collect::<spotvol::Result<_>>()?;
            SpotVolPath::new(grid.clone(), values)?
        }
        "preavg" => {
            let d = PreAvgConfig::default();
            let cfg = PreAvgConfig {
                c_k: resolve(args.c_k, config, "pav_c_k", d.c_k)?,
                c_m: resolve(args.c_m, config, "pav_c_m", d.c_m)?,
            };
            manifest.set("pav_c_k", cfg.c_k);
            manifest.set("pav_c_m", cfg.c_m);
            manifest.set("window_k", cfg.window(n));
            let est = PreAvgEstimator::new(&path, &cfg)?;
            SpotVolPath::new(grid.clone(), est.estimate_grid(&grid, path.horizon())?)?
        }
        other => bail!("unknown method '{other}'"),
    };

    let negatives = est.negative_count();
    let est = if args.clamp_negative {
        est.clamped_nonnegative()
    } else {
        est
    };
    if negatives > 0 {
        eprintln!(
            "note: {negatives} negative variance estimates{}",
            if args.clamp_negative {
                " truncated at zero"
            } else {
                " left as-is (use --clamp-negative to truncate)"
            }
        );
    }
    manifest.set("negative_estimates", negatives);
    let out = out_path(args.out, "estimate.csv");
    let comments = vec![
        format!("method = {method}, n = {n}"),
        "units: timestamp seconds from open, variance per day".to_string(),
    ];
    write_var_csv(&out, &comments, &est)?;
    manifest.add_file(&out)?;
    manifest.write(out.parent().unwrap_or(Path::new(".")))?;
    println!("wrote {} ({} grid points)", out.display(), est.grid.len());
    Ok(())
}

fn cmd_select(args: SelectArgs, config: &Config) -> Result<()> {
    let path = load_price_path(&args.input)?;
    let estimates = build_amise_inputs(&path, &PluginConfig::default())?;
    let defaults = SelectorOptions::for_sample_size(path.n_increments());
    let opts = SelectorOptions {
        n_lo: resolve(args.n_lo, config, "n_lo", defaults.n_lo)?,
        n_hi: resolve(args.n_hi, config, "n_hi", defaults.n_hi)?,
        m_lo: resolve(args.m_lo, config, "m_lo", defaults.m_lo)?,
        m_hi: resolve(args.m_hi, config, "m_hi", defaults.m_hi)?,
        c_lambda: resolve(args.c_lambda, config, "c_lambda", defaults.c_lambda)?,
        learning_rate: None,
        threshold: resolve(args.threshold, config, "threshold", defaults.threshold)?,
        max_iters: resolve(args.max_iters, config, "max_iters", defaults.max_iters)?,
    };
    // plug-in overrides from the config file
    let mut inputs = estimates.inputs;
    if let Some(v) = cfg_parse::<f64>(config, "iv")? {
        inputs.iv = v;
    }
    if let Some(v) = cfg_parse::<f64>(config, "iq")? {
        inputs.iq = v;
    }
    if let Some(v) = cfg_parse::<f64>(config, "ivv")? {
        inputs.ivv = v;
    }
    if let Some(v) = cfg_parse::<f64>(config, "xi")? {
        inputs.xi = v;
    }
    let result = select_params(&inputs, &opts)?;

    println!(
        "selected N* = {}, M* = {} after {} iterations (converged: {})",
        result.n_star, result.m_star, result.iterations, result.converged
    );
    println!(
        "plug-ins: iv = {:.6e}, iq = {:.6e}, ivv = {:.6e}, xi = {:.6e}{}",
        inputs.iv,
        inputs.iq,
        inputs.ivv,
        inputs.xi,
        if estimates.clamped { " (floored)" } else { "" }
    );
    let out = out_path(args.out, "select_trace.csv");
    let rows: Vec<String> = result
        .objective_trace
        .iter()
        .enumerate()
        .map(|(k, v)| format!("{k},{v}"))
        .collect();
    let comments = vec![
        format!(
            "n_star = {}, m_star = {}, converged = {}",
            result.n_star, result.m_star, result.converged
        ),
        format!(
            "box = [{}, {}] x [{}, {}], c_lambda = {}, threshold = {}, max_iters = {}",
            opts.n_lo, opts.n_hi, opts.m_lo, opts.m_hi, opts.c_lambda, opts.threshold, opts.max_iters
        ),
        format!(
            "iv = {}, iq = {}, ivv = {}, xi = {}",
            inputs.iv, inputs.iq, inputs.ivv, inputs.xi
        ),
    ];
    write_csv(&out, &comments, "iteration,objective", &rows)?;
    let mut manifest = Manifest::new("select");
    manifest.set("input", args.input.display());
    manifest.set("n_star", result.n_star);
    manifest.set("m_star", result.m_star);
    manifest.add_file(&out)?;
    manifest.write(out.parent().unwrap_or(Path::new(".")))?;
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_benchmark(args: BenchmarkArgs, config: &Config) -> Result<()> {
    let model_names: String = resolve(Some(args.models.clone()), config, "models", args.models)?;
    let models = model_names
        .split(',')
        .map(|m| Ok((m.trim().to_string(), parse_model(m)?)))
        .collect::<Result<Vec<_>>>()?;
    let zetas = parse_list_f64(&resolve(
        Some(args.zetas.clone()),
        config,
        "zetas",
        args.zetas,
    )?)?;
    let cs = parse_range(&resolve(
        Some(args.c_range.clone()),
        config,
        "c_range",
        args.c_range,
    )?)?;
    let aas = parse_range(&resolve(
        Some(args.a_range.clone()),
        config,
        "a_range",
        args.a_range,
    )?)?;
    let cfg = BenchmarkConfig {
        models,
        zetas,
        cs,
        aas,
        n: resolve(args.n, config, "n", 23400usize)?,
        n_paths: resolve(args.n_paths, config, "n_paths", 200usize)?,
        grid_step_seconds: 60.0,
        seed: resolve(args.seed, config, "seed", 71u64)?,
    };
    let rows = benchmark_sweep(&cfg)?;
    let out = out_path(args.out, "benchmark.csv");
    let lines: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{}",
                r.model, r.zeta, r.c, r.a, r.mise, r.miae
            )
        })
        .collect();
    let comments = vec![
        format!(
            "n = {}, n_paths = {}, seed = {}, grid step 60s",
            cfg.n, cfg.n_paths, cfg.seed
        ),
        "N = floor(c sqrt(n)), M = floor(a sqrt(N)); errors per day".to_string(),
    ];
    write_csv(&out, &comments, "model,zeta,c,a,mise,miae", &lines)?;
    let mut manifest = Manifest::new("benchmark");
    manifest.set("n", cfg.n);
    manifest.set("n_paths", cfg.n_paths);
    manifest.set("seed", cfg.seed);
    manifest.add_file(&out)?;
    manifest.write(out.parent().unwrap_or(Path::new(".")))?;
    println!("wrote {} ({} rows)", out.display(), rows.len());
    Ok(())
}

fn cmd_empirical(args: EmpiricalArgs, config: &Config) -> Result<()> {
    let h = resolve(args.h, config, "h", 300.0f64)?;
    let excluded: Vec<String> = match &args.exclusions {
        None => Vec::new(),
        Some(p) => fs::read_to_string(p)
            .with_context(|| format!("cannot read exclusions {}", p.display()))?
            .lines()
            .map(|l| l.trim().to_string())
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect(),
    };
    let mut files: Vec<PathBuf> = fs::read_dir(&args.data_dir)
        .with_context(|| format!("cannot read {}", args.data_dir.display()))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().map(|x| x == "csv").unwrap_or(false))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no CSV day files in {}", args.data_dir.display());
    }
    let session = SessionSpec::default();
    let mut day_rows = Vec::new();
    let mut reports = Vec::new();
    for file in &files {
        let stem = file
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        if excluded.iter().any(|x| x == &stem) {
            continue;
        }
        let ticks = load_ticks(fs::File::open(file)?, &session)?;
        if !ticks.rejected.is_empty() {
            eprintln!(
                "note: {}: rejected {} rows (first at line {})",
                stem,
                ticks.rejected.len(),
                ticks.rejected[0].0
            );
        }
        let path = resample_last_tick(&ticks.records, &session)?;
        let report = empirical_day(&path, h)?;
        day_rows.push(format!(
            "{},{},{},{},{},{},{},{},{},{}",
            stem,
            report.n_star,
            report.m_star,
            report.n_returns,
            report.mean,
            report.variance,
            report.skewness,
            report.kurtosis,
            report.jb_stat,
            report.jb_pvalue
        ));
        reports.push(report);
    }
    if reports.is_empty() {
        bail!("all days excluded");
    }
    let out = out_path(args.out, "empirical_days.csv");
    let comments = vec![
        format!("h = {h}s, days = {}", reports.len()),
        "standardized log-returns on the adaptive Fourier variance path".to_string(),
    ];
    write_csv(
        &out,
        &comments,
        "day,n_star,m_star,n_returns,mean,variance,skewness,kurtosis,jb_stat,jb_pvalue",
        &day_rows,
    )?;

    // moment summary across days: average and standard deviation
    let nf = reports.len() as f64;
    let summary_stat = |f: &dyn Fn(&spotvol::experiments::DayReport) -> f64| {
        let mean = reports.iter().map(|r| f(r)).sum::<f64>() / nf;
        let var = reports.iter().map(|r| (f(r) - mean).powi(2)).sum::<f64>() / nf;
        (mean, var.sqrt())
    };
    let (m_mean, m_sd) = summary_stat(&|r| r.mean);
    let (v_mean, v_sd) = summary_stat(&|r| r.variance);
    let (s_mean, s_sd) = summary_stat(&|r| r.skewness);
    let (k_mean, k_sd) = summary_stat(&|r| r.kurtosis);
    let rejections = reports.iter().filter(|r| r.jb_pvalue < 0.05).count();
    let avg_p = reports.iter().map(|r| r.jb_pvalue).sum::<f64>() / nf;
    let summary_path = out
        .parent()
        .unwrap_or(Path::new("."))
        .join("empirical_summary.csv");
    write_csv(
        &summary_path,
        &[format!(
            "jb rejections at 5% level: {rejections}/{}; average p-value {avg_p}",
            reports.len()
        )],
        "statistic,average,std_dev",
        &[
            format!("mean,{m_mean},{m_sd}"),
            format!("variance,{v_mean},{v_sd}"),
            format!("skewness,{s_mean},{s_sd}"),
            format!("kurtosis,{k_mean},{k_sd}"),
        ],
    )?;
    let mut manifest = Manifest::new("empirical");
    manifest.set("h_seconds", h);
    manifest.set("days", reports.len());
    manifest.set("jb_rejections", rejections);
    manifest.add_file(&out)?;
    manifest.add_file(&summary_path)?;
    manifest.write(out.parent().unwrap_or(Path::new(".")))?;
    println!(
        "wrote {} and {} ({} days, {} JB rejections)",
        out.display(),
        summary_path.display(),
        reports.len(),
        rejections
    );
    Ok(())
}

fn cmd_clt(args: CltArgs, config: &Config) -> Result<()> {
    let regime_name: String = resolve(Some(args.regime.clone()), config, "regime", args.regime)?;
    let regime = parse_regime(&regime_name)?;
    let model_name: String = resolve(Some(args.model.clone()), config, "model", args.model)?;
    let cfg = CltCheckConfig {
        model: parse_model(&model_name)?,
        spec: CltSpec::new(
            regime,
            resolve(args.c, config, "c", 1.0f64)?,
            resolve(args.a, config, "a", 1.0f64)?,
        ),
        n: resolve(args.n, config, "n", 23400usize)?,
        zeta: resolve(args.zeta, config, "zeta", 1.0f64)?,
        n_paths: resolve(args.n_paths, config, "n_paths", 1000usize)?,
        seed: resolve(args.seed, config, "seed", 41u64)?,
    };
    let report = clt_check(&cfg)?;
    println!(
        "coverage95 = {:.4} (halved-variance control {:.4}), ks = {:.4}, jb p = {:.4}",
        report.coverage95, report.coverage95_halved, report.ks_stat, report.jb_pvalue
    );
    let out = out_path(args.out, "clt.csv");
    write_csv(
        &out,
        &[format!(
            "regime = {regime_name}, model = {model_name}, c = {}, a = {}, n = {}, zeta = {}, n_paths = {}, seed = {}",
            cfg.spec.c, cfg.spec.a, cfg.n, cfg.zeta, cfg.n_paths, cfg.seed
        )],
        "regime,model,c,a,n,zeta,n_paths,ks,jb_pvalue,coverage95,coverage95_halved,mean_z,var_z",
        &[format!(
            "{regime_name},{model_name},{},{},{},{},{},{},{},{},{},{},{}",
            cfg.spec.c,
            cfg.spec.a,
            cfg.n,
            cfg.zeta,
            cfg.n_paths,
            report.ks_stat,
            report.jb_pvalue,
            report.coverage95,
            report.coverage95_halved,
            report.mean_z,
            report.var_z
        )],
    )?;
    let mut manifest = Manifest::new("clt");
    manifest.set("regime", regime_name);
    manifest.set("seed", cfg.seed);
    manifest.add_file(&out)?;
    manifest.write(out.parent().unwrap_or(Path::new(".")))?;
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_kernel_check(args: KernelCheckArgs, config: &Config) -> Result<()> {
    let orders: Vec<usize> = resolve(
        Some(args.orders.clone()),
        config,
        "orders",
        args.orders,
    )?
    .split(',')
    .map(|s| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| anyhow!("bad order '{s}'"))
    })
    .collect::<Result<_>>()?;
    if orders.iter().any(|&o| o < 4) {
        bail!("orders must be at least 4");
    }
    let tol = resolve(args.tolerance_factor, config, "tolerance_factor", 10.0f64)?;
    let report = run_lemma_suite(&orders, tol);
    let out = out_path(args.out, "kernel_check.csv");
    let mut rows: Vec<String> = report
        .rows
        .iter()
        .map(|r| {
            format!(
                "{},{:?},{},{},{},{},{},{}",
                r.lemma, r.kind, r.order, r.observed, r.target, r.rel_error, r.tolerance, r.pass
            )
        })
        .collect();
    for (lemma, slope) in &report.convergence {
        rows.push(format!("{lemma},Convergence,,{slope},,,,"));
    }
    write_csv(
        &out,
        &[format!(
            "tolerance schedule: relative error <= {tol}/order; overall pass = {}",
            report.all_pass
        )],
        "lemma,kind,order,observed,target,rel_error,tolerance,pass",
        &rows,
    )?;
    let mut manifest = Manifest::new("kernel-check");
    manifest.set("orders", orders.iter().map(|o| o.to_string()).collect::<Vec<_>>().join(","));
    manifest.set("tolerance_factor", tol);
    manifest.set("all_pass", report.all_pass);
    manifest.add_file(&out)?;
    manifest.write(out.parent().unwrap_or(Path::new(".")))?;
    for row in report.rows.iter().filter(|r| !r.pass) {
        eprintln!(
            "note: failing lemma row {} at order {}: observed {} target {}",
            row.lemma, row.order, row.observed, row.target
        );
    }
    println!(
        "wrote {} ({} rows, all_pass = {})",
        out.display(),
        report.rows.len(),
        report.all_pass
    );
    if !report.all_pass {
        return Err(spotvol::Error::numerical("kernel lemma suite failed").into());
    }
    Ok(())
}
