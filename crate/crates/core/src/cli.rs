//! Command-line front-end: simulate fixtures, run discovery, fit patterns,
//! and score recovered patterns against a known truth.

use crate::error::{Error, Result};
use crate::fixtures;
use crate::graph::{MeasurementPattern, UndirectedGraph};
use crate::search::{discover_on_source, recovery_metrics, DiscoveryConfig, RunReport};
use crate::sem::{implied_covariance, sample, sample_covariance, CovMatrix, RNG_ALGORITHM};
use crate::tetrad::CovSource;
use crate::{dot, fit, textio};
use clap::{Args, Parser, Subcommand};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "tetram",
    version,
    about = "Discovery of impure measurement models from covariance matrices via vanishing tetrad constraints"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate data from a named fixture or a SEM file
    Simulate(SimulateArgs),
    /// Discover a measurement pattern from data, a covariance, or a SEM
    Discover(DiscoverArgs),
    /// Fit a measurement pattern to data or a covariance by maximum likelihood
    Fit(FitArgs),
    /// Score a pattern against the true generating SEM
    Eval(EvalArgs),
    /// List the bundled fixtures
    Fixtures,
}

#[derive(Args)]
struct SimulateArgs {
    /// fixture name (see `fixtures`) or path to a .sem file
    source: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// output directory (default: env TETRAM_OUT or `.`)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DiscoverArgs {
    /// input: .csv data, covariance text (with n= header), or .sem file
    input: PathBuf,
    /// force a mode for covariance inputs carrying a sample size
    #[arg(long, value_parser = ["auto", "population", "sample"], default_value = "auto")]
    mode: String,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    population_tol: Option<f64>,
    #[arg(long)]
    screening_alpha: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// greedy BIC bi-directed augmentation in sample mode
    #[arg(long)]
    bic_augment: Option<bool>,
    #[arg(long)]
    bonferroni: Option<bool>,
    /// worker threads for candidate fits (default: env TETRAM_THREADS or 1)
    #[arg(long)]
    threads: Option<usize>,
    /// key=value file with the same names as the flags; flags win
    #[arg(long)]
    config: Option<PathBuf>,
    /// replay a recorded auxiliary graph instead of running the initial pass
    #[arg(long)]
    initial_h: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// comma-separated outputs: dot,json,report
    #[arg(long, default_value = "dot,json,report")]
    emit: String,
}

#[derive(Args)]
struct FitArgs {
    /// pattern file (.json or text format)
    pattern: PathBuf,
    /// data CSV or covariance text with n
    data: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    pattern: PathBuf,
    truth_sem: PathBuf,
}

pub fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Discover(a) => cmd_discover(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Fixtures => {
            for name in fixtures::FIXTURE_NAMES {
                println!("{name}");
            }
            Ok(())
        }
    }
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("TETRAM_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn threads_from(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("TETRAM_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .unwrap_or(1)
    .max(1)
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    if a.n == 0 {
        return Err(Error::input("sample size must be >= 1"));
    }
    let sem = if fixtures::FIXTURE_NAMES.contains(&a.source.as_str()) {
        fixtures::validate_fixture(&a.source)?;
        fixtures::fixture_sem(&a.source)?
    } else if Path::new(&a.source).exists() {
        let text = fs::read_to_string(&a.source)?;
        textio::sem_from_text(&text)?
    } else {
        return Err(Error::input(format!(
            "unknown fixture or file `{}`; available fixtures: {}",
            a.source,
            fixtures::FIXTURE_NAMES.join(", ")
        )));
    };
    let dir = out_dir(a.out);
    fs::create_dir_all(&dir)?;
    let data = sample(&sem, a.n, a.seed)?;
    fs::write(dir.join("data.csv"), textio::data_to_csv(&data))?;
    fs::write(dir.join("truth.sem"), textio::sem_to_text(&sem))?;
    let cov = implied_covariance(&sem)?;
    fs::write(dir.join("implied.cov"), textio::cov_to_text(&cov))?;
    println!(
        "wrote {} rows x {} vars to {} (rng {RNG_ALGORITHM}, seed {})",
        a.n,
        data.p(),
        dir.display(),
        a.seed
    );
    Ok(())
}

fn parse_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path)?;
    let mut out = BTreeMap::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: ln + 1,
            msg: format!("expected key=value, got `{line}`"),
        })?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn cfg_get<T: std::str::FromStr>(file: &BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
    match file.get(key) {
        None => Ok(None),
        Some(v) => v
            .parse::<T>()
            .map(Some)
            .map_err(|_| Error::config(format!("bad value for `{key}`: `{v}`"))),
    }
}

fn build_config(a: &DiscoverArgs) -> Result<DiscoveryConfig> {
    let file = match &a.config {
        Some(p) => parse_config_file(p)?,
        None => BTreeMap::new(),
    };
    let d = DiscoveryConfig::default();
    let cfg = DiscoveryConfig {
        alpha: a.alpha.or(cfg_get(&file, "alpha")?).unwrap_or(d.alpha),
        population_tol: a
            .population_tol
            .or(cfg_get(&file, "population_tol")?)
            .unwrap_or(d.population_tol),
        min_clique_size: cfg_get(&file, "min_clique_size")?.unwrap_or(d.min_clique_size),
        use_bic_augmentation: a
            .bic_augment
            .or(cfg_get(&file, "bic_augment")?)
            .unwrap_or(d.use_bic_augmentation),
        bonferroni: a
            .bonferroni
            .or(cfg_get(&file, "bonferroni")?)
            .unwrap_or(d.bonferroni),
        seed: a.seed.or(cfg_get(&file, "seed")?).unwrap_or(d.seed),
        screening_alpha: a
            .screening_alpha
            .or(cfg_get(&file, "screening_alpha")?)
            .unwrap_or(d.screening_alpha),
        threads: threads_from(a.threads.or(cfg_get(&file, "threads")?)),
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Reads an input file as data, covariance or SEM, producing a covariance
/// source per the requested mode.
fn load_source(path: &Path, mode: &str, cfg: &DiscoveryConfig) -> Result<CovSource> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::input(format!("cannot read {}: {e}", path.display())))?;
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    let kind = if ext == "csv" {
        "csv"
    } else if ext == "sem"
        || text
            .lines()
            .next()
            .map(|l| l.starts_with("node "))
            .unwrap_or(false)
    {
        "sem"
    } else if text.starts_with("n=") || ext == "cov" {
        "cov"
    } else {
        "csv"
    };
    match kind {
        "csv" => {
            let data = textio::data_from_csv(&text)?;
            let cov = sample_covariance(&data)?;
            match mode {
                "population" => CovSource::population(cov, cfg.population_tol),
                _ => CovSource::sample_with(cov, cfg.alpha, cfg.bonferroni),
            }
        }
        "sem" => {
            let sem = textio::sem_from_text(&text)?;
            let cov = implied_covariance(&sem)?;
            CovSource::population(cov, cfg.population_tol)
        }
        _ => {
            let cov = textio::cov_from_text(&text)?;
            match (mode, cov.n) {
                ("population", _) => CovSource::population(cov, cfg.population_tol),
                (_, Some(_)) => CovSource::sample_with(cov, cfg.alpha, cfg.bonferroni),
                (_, None) => Err(Error::config(
                    "sample-mode discovery requires a covariance with an `n=<int>` header",
                )),
            }
        }
    }
}

fn parse_initial_h(path: &Path, src: &CovSource) -> Result<UndirectedGraph> {
    // one edge per line: `<a> -- <b>`; nodes never mentioned stay absent
    let text = fs::read_to_string(path)?;
    let mut h = UndirectedGraph::empty(src.dim());
    let mut mentioned = vec![false; src.dim()];
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            [a, "--", b] => {
                let ia = src.cov.var_index(a).ok_or_else(|| Error::Parse {
                    line: ln + 1,
                    msg: format!("unknown variable `{a}`"),
                })?;
                let ib = src.cov.var_index(b).ok_or_else(|| Error::Parse {
                    line: ln + 1,
                    msg: format!("unknown variable `{b}`"),
                })?;
                h.add_edge(ia, ib);
                mentioned[ia] = true;
                mentioned[ib] = true;
            }
            _ => {
                return Err(Error::Parse {
                    line: ln + 1,
                    msg: format!("expected `<a> -- <b>`, got `{line}`"),
                })
            }
        }
    }
    for (i, m) in mentioned.iter().enumerate() {
        if !m {
            h.remove_node(i);
        }
    }
    Ok(h)
}

fn render_report(
    report: &RunReport,
    cfg: &DiscoveryConfig,
    pattern: &MeasurementPattern,
) -> String {
    let mut out = String::new();
    out.push_str("discovery report\n");
    out.push_str(&format!("  mode: {}\n", report.mode));
    out.push_str(&format!(
        "  config: alpha={} population_tol={:.1e} min_clique_size={} bic_augment={} bonferroni={} seed={} screening_alpha={} threads={}\n",
        cfg.alpha,
        cfg.population_tol,
        cfg.min_clique_size,
        cfg.use_bic_augmentation,
        cfg.bonferroni,
        cfg.seed,
        cfg.screening_alpha,
        cfg.threads
    ));
    out.push_str(&format!("  rng: {}\n", report.rng_algorithm));
    out.push_str(&format!(
        "  dropped variables: {:?}\n",
        report.dropped_variables
    ));
    out.push_str(&format!(
        "  deleted (no holding quad): {:?}\n",
        report.deleted_in_step3
    ));
    out.push_str(&format!("  removed edges: {:?}\n", report.removed_edges));
    out.push_str(&format!("  cliques: {:?}\n", report.cliques));
    out.push_str(&format!("  merges: {:?}\n", report.merges));
    out.push_str(&format!(
        "  lemma-3 confirmations: {:?}\n",
        report.lemma3_confirmations
    ));
    out.push_str(&format!(
        "  lemma-4 supported: {:?}\n",
        report.lemma4_supported
    ));
    out.push_str(&format!(
        "  BIC-added edges: {:?}\n",
        report.bic_added_edges
    ));
    if !report.bic_skipped.is_empty() {
        out.push_str(&format!(
            "  BIC-skipped candidates: {:?}\n",
            report.bic_skipped
        ));
    }
    out.push_str(&format!(
        "  tetrad queries: {}   product queries: {}\n",
        report.tetrad_queries, report.product_queries
    ));
    for w in &report.warnings {
        out.push_str(&format!("  warning: {w}\n"));
    }
    out.push_str(&format!("  elapsed: {} ms\n", report.elapsed_ms));
    out.push_str(&format!(
        "  pattern: {} latents, {} observed, {} directed, {} bi-directed\n",
        pattern.latents().len(),
        pattern.observed().len(),
        pattern.directed_edges().count(),
        pattern.bidirected_edges().count()
    ));
    out
}

fn cmd_discover(a: DiscoverArgs) -> Result<()> {
    let cfg = build_config(&a)?;
    let src = load_source(&a.input, &a.mode, &cfg)?;
    let initial_h = match &a.initial_h {
        Some(p) => Some(parse_initial_h(p, &src)?),
        None => None,
    };
    let (pattern, report) = discover_on_source(&src, &cfg, initial_h)?;
    let dir = out_dir(a.out);
    fs::create_dir_all(&dir)?;
    let emits: Vec<&str> = a.emit.split(',').map(|s| s.trim()).collect();
    if emits.is_empty() {
        return Err(Error::config("at least one emit format is required"));
    }
    for e in &emits {
        match *e {
            "dot" => fs::write(dir.join("pattern.dot"), dot::pattern_to_dot(&pattern))?,
            "json" => fs::write(dir.join("pattern.json"), textio::pattern_to_json(&pattern)?)?,
            "report" => fs::write(
                dir.join("report.txt"),
                render_report(&report, &cfg, &pattern),
            )?,
            other => return Err(Error::config(format!("unknown emit format `{other}`"))),
        }
    }
    print!("{}", render_report(&report, &cfg, &pattern));
    Ok(())
}

fn load_pattern(path: &Path) -> Result<MeasurementPattern> {
    let text = fs::read_to_string(path)?;
    if text.trim_start().starts_with('{') {
        textio::pattern_from_json(&text)
    } else {
        textio::pattern_from_text(&text)
    }
}

fn cmd_fit(a: FitArgs) -> Result<()> {
    let pattern = load_pattern(&a.pattern)?;
    let text = fs::read_to_string(&a.data)?;
    let cov: CovMatrix = if text.starts_with("n=") {
        textio::cov_from_text(&text)?
    } else {
        let data = textio::data_from_csv(&text)?;
        sample_covariance(&data)?
    };
    if cov.n.is_none() {
        return Err(Error::config(
            "fitting requires a covariance with an `n=<int>` header",
        ));
    }
    let fitted = fit::fit_ml(&pattern, &cov)?;
    let report = fit::fit_report(&fitted, &pattern);
    if let Some(dir) = a.out {
        fs::create_dir_all(&dir)?;
        fs::write(dir.join("fit_report.txt"), &report)?;
    }
    print!("{report}");
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let pattern = load_pattern(&a.pattern)?;
    let sem = textio::sem_from_text(&fs::read_to_string(&a.truth_sem)?)?;
    let m = recovery_metrics(&pattern, &sem.graph)?;
    println!("recovery metrics");
    println!("  observed coverage: {:.4}", m.observed_coverage);
    println!("  cluster agreement: {:.4}", m.cluster_agreement);
    println!(
        "  confirmed-edge soundness: {:.4}",
        m.confirmed_edge_soundness
    );
    println!(
        "  directed edges: {} confirmed, {} unconfirmed",
        m.confirmed_directed, m.unconfirmed_directed
    );
    println!(
        "  bi-directed edges: {} confirmed, {} unconfirmed",
        m.confirmed_bidirected, m.unconfirmed_bidirected
    );
    Ok(())
}
