use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use twistkam::distortion::Verdict;
use twistkam::harness::{
    export, run_criteria, run_sweep, solve, AlphaSpec, ExperimentConfig, RecordStore, RunRecord, RunStatus,
    SolverDiagnostics, SweepGrid,
};
use twistkam::number_theory::KappaMachinery;
use twistkam::Error;

const EXIT_VIOLATED: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Parser)]
#[command(name = "twistkam", version, about = "Invariant-circle criteria for perturbed twist maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Continued-fraction table and kappa windows.
    Cf(ConfigArgs),
    /// Sampled symplectic and generating-function checks of the map.
    MapCheck {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// Solve the window configuration and extract its graph.
    Minconfig {
        #[command(flatten)]
        config: ConfigArgs,
        /// Write the `(x mod 1, y)` graph as CSV.
        #[arg(long)]
        graph: Option<PathBuf>,
    },
    /// Full pipeline: solve, tabulate distortion, evaluate criteria.
    Criteria {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
    },
    /// Run a grid of configurations into a record store, resuming if present.
    Sweep {
        /// TOML file with a `[base]` configuration and axis lists.
        grid: PathBuf,
        #[arg(long)]
        store: PathBuf,
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
    },
    /// Export stored records as JSON and CSV.
    Report {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Only this config hash (prefix match).
        #[arg(long)]
        hash: Option<String>,
    },
}

/// Every field of the experiment configuration; flags override the file.
#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named rotation number (`golden`, `silver`).
    #[arg(long, conflicts_with = "quotients")]
    alpha: Option<String>,
    /// Repeating partial quotients, e.g. `1,2`.
    #[arg(long, value_delimiter = ',')]
    quotients: Option<Vec<u64>>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    level: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long)]
    kappa_min: Option<i64>,
    #[arg(long)]
    kappa_max: Option<i64>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    chords: Option<usize>,
    #[arg(long)]
    pairs: Option<usize>,
    #[arg(long)]
    quadruples: Option<usize>,
    #[arg(long)]
    mixed_fraction: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Append the run record to this store.
    #[arg(long)]
    store: Option<PathBuf>,
    /// Write `run.json` and `run.csv` here.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl ConfigArgs {
    fn resolve(&self) -> twistkam::Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(a) = &self.alpha {
            c.alpha = AlphaSpec::Preset(a.clone());
        }
        if let Some(q) = &self.quotients {
            c.alpha = AlphaSpec::Quotients(q.clone());
        }
        macro_rules! set {
            ($($f:ident => $($path:ident).+),* $(,)?) => {
                $(if let Some(v) = self.$f.clone() { c.$($path).+ = v; })*
            };
        }
        set!(
            depth => depth, level => level, eps => eps, amplitude => amplitude,
            kappa_min => kappa_min, kappa_max => kappa_max, window => window, margin => margin,
            chords => budgets.chords, pairs => budgets.pairs, quadruples => budgets.quadruples,
            mixed_fraction => mixed_fraction, seeds => seeds,
        );
        if self.store.is_some() {
            c.store = self.store.clone();
        }
        if self.out_dir.is_some() {
            c.out_dir = self.out_dir.clone();
        }
        Ok(c)
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn exit_for(e: &Error) -> u8 {
    match e {
        Error::Infeasible(_) | Error::InvalidInput(_) | Error::InsufficientDepth { .. } | Error::Serde(_) => {
            EXIT_INFEASIBLE
        }
        _ => EXIT_INTERNAL,
    }
}

fn print_json<T: serde::Serialize>(v: &T) -> twistkam::Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn cf(args: &ConfigArgs) -> twistkam::Result<u8> {
    let c = args.resolve()?;
    let alpha = c.alpha()?;
    println!("alpha = {}", alpha.value_decimal(20));
    println!("{:>3} {:>4} {:>14} {:>14} {:>12} {:>5}", "n", "a_n", "p_n", "q_n", "|q_n alpha|", "phi");
    let km = KappaMachinery::new(&alpha);
    for n in 0..alpha.depth() {
        let phi = km.phi(n).map_or_else(|_| "-".to_string(), |v| v.to_string());
        println!(
            "{n:>3} {:>4} {:>14} {:>14} {:>12.5e} {phi:>5}",
            alpha.a(n)?,
            alpha.p(n)?,
            alpha.q(n)?,
            alpha.qalpha_norm(n)?
        );
    }
    println!("gamma0 = {}", km.gamma0());
    println!("{:>5} {:>7} {:>7} {:>7}", "kappa", "n_kappa", "N~", "N-");
    for k in c.kappa_min..=c.kappa_max {
        match km.windows(k) {
            Ok(w) => println!("{k:>5} {:>7} {:>7} {:>7}", w.n_kappa, w.n_tilde, w.n_bar),
            Err(e) => println!("{k:>5} {e}"),
        }
    }
    Ok(0)
}

fn map_check(args: &ConfigArgs, samples: usize) -> twistkam::Result<u8> {
    let c = args.resolve()?;
    let map = c.map()?;
    let check = map.self_check(samples, c.seeds.first().copied().unwrap_or(0));
    print_json(&check)?;
    let ok = check.det_deviation < 1e-12 && check.generating_deviation() < 1e-10;
    Ok(if ok { 0 } else { EXIT_VIOLATED })
}

fn minconfig(args: &ConfigArgs, graph: Option<&Path>) -> twistkam::Result<u8> {
    let c = args.resolve()?;
    c.validate()?;
    let conf = solve(&c)?;
    print_json(&SolverDiagnostics::of(&conf))?;
    if let Some(path) = graph {
        let g = conf.graph_extract()?;
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.to_string()))?;
        w.write_record(["x", "y"]).map_err(|e| Error::Io(e.to_string()))?;
        for (x, y) in &g.points {
            w.write_record([x.to_string(), y.to_string()]).map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        eprintln!("graph: {} points, holder exponent {:?}", g.points.len(), g.holder.exponent);
    }
    Ok(0)
}

fn record_exit(r: &RunRecord) -> u8 {
    match r.status {
        RunStatus::Rejected => match r.errors.first() {
            Some(e) if e.kind == "internal" => EXIT_INTERNAL,
            _ => EXIT_INFEASIBLE,
        },
        RunStatus::Partial => EXIT_INTERNAL,
        RunStatus::Complete => match r.verdict() {
            Some(Verdict::BoundedWithMargin) => 0,
            _ => EXIT_VIOLATED,
        },
    }
}

fn summarize(r: &RunRecord) {
    eprintln!("config {} status {:?}", &r.config_hash[..12], r.status);
    for e in &r.errors {
        eprintln!("  {:?} [{}]: {}", e.stage, e.kind, e.message);
    }
    if let Some(c) = &r.consensus {
        eprintln!("  criterion 1 {:?}, 2 {:?}, 3 {:?}", c.criterion1, c.criterion2, c.criterion3);
        for ((k, rv), ((_, s), (_, t))) in c.r.iter().zip(c.s.iter().zip(&c.t)) {
            eprintln!("  kappa {k}: R {rv:?} S {s:?} T {t:?}");
        }
        for b in &c.bands {
            eprintln!("  {} in [{:.4e}, {:.4e}] stable {}", b.name, b.min, b.max, b.stable);
        }
        eprintln!("  overall {:?}", c.overall);
    }
}

fn criteria(args: &ConfigArgs, workers: usize) -> twistkam::Result<u8> {
    let c = args.resolve()?;
    let rec = run_criteria(&c, workers)?;
    summarize(&rec);
    if let Some(dir) = &c.out_dir {
        export(&rec, dir, "run")?;
    }
    if let Some(path) = &c.store {
        RecordStore::open(path)?.append(&rec)?;
    }
    Ok(record_exit(&rec))
}

fn sweep(grid: &Path, store: &Path, workers: usize) -> twistkam::Result<u8> {
    let points = SweepGrid::load(grid)?.expand();
    let mut s = RecordStore::open(store)?;
    let summary = run_sweep(&points, &mut s, workers)?;
    eprintln!("sweep: {} run, {} resumed", summary.ran, summary.skipped);
    let mut code = 0;
    for c in &points {
        if let Some(r) = s.get(&c.hash())? {
            summarize(&r);
            code = code.max(record_exit(&r));
        }
    }
    Ok(code)
}

fn report(store: &Path, out_dir: &Path, hash: Option<&str>) -> twistkam::Result<u8> {
    let s = RecordStore::open(store)?;
    let mut n = 0;
    for h in s.hashes() {
        if hash.is_some_and(|p| !h.starts_with(p)) {
            continue;
        }
        if let Some(r) = s.get(h)? {
            export(&r, out_dir, &h[..16])?;
            n += 1;
        }
    }
    eprintln!("exported {n} record(s) to {}", out_dir.display());
    Ok(if n == 0 && hash.is_some() { EXIT_INFEASIBLE } else { 0 })
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Cf(a) => cf(a),
        Command::MapCheck { config, samples } => map_check(config, *samples),
        Command::Minconfig { config, graph } => minconfig(config, graph.as_deref()),
        Command::Criteria { config, workers } => criteria(config, *workers),
        Command::Sweep { grid, store, workers } => sweep(grid, store, *workers),
        Command::Report { store, out_dir, hash } => report(store, out_dir, hash.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}
