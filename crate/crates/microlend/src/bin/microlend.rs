//! Command-line entry point: run scenarios, expand sweeps, build pools, and
//! aggregate reports.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use microlend::config::{
    load_pool_request, load_report_request, load_scenario, ConfigFile, Profile,
};
use microlend::datagen::registry::pool_spec_by_name;
use microlend::datagen::{build_pool_named, export_pool_csv};
use microlend::error::Error;
use microlend::harness::{persist_results, run_scenario};

#[derive(Parser)]
#[command(
    name = "microlend",
    about = "Online policy-gradient lending experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one scenario config and write its result CSVs.
    Run(CommonArgs),
    /// Expand the config's [sweep] section into scenarios and run them all.
    Sweep(CommonArgs),
    /// Build or ingest an applicant pool and serialize it.
    Pool(CommonArgs),
    /// Aggregate summary CSVs into comparison tables.
    Report(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario / sweep / pool / report config file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: $MICROLEND_OUT or ./results).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Scale profile: quick (desk-sized) or paper (full-sized).
    #[arg(long, default_value = "quick")]
    profile: String,
    /// Worker threads for replications (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

impl CommonArgs {
    fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| {
            std::env::var_os("MICROLEND_OUT")
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("results"))
        })
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Parse { .. } => 2,
        Error::Io { .. } => 3,
        Error::Contract(_) | Error::DataIntegrity(_) | Error::DegenerateFit(_) => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => with_pool_threads(args, cmd_run),
        Command::Sweep(args) => with_pool_threads(args, cmd_sweep),
        Command::Pool(args) => with_pool_threads(args, cmd_pool),
        Command::Report(args) => with_pool_threads(args, cmd_report),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn with_pool_threads(
    args: &CommonArgs,
    run: impl FnOnce(&CommonArgs) -> Result<(), Error>,
) -> Result<(), Error> {
    if let Some(jobs) = args.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| Error::Config(format!("cannot configure {jobs} worker threads: {e}")))?;
    }
    run(args)
}

fn cmd_run(args: &CommonArgs) -> Result<(), Error> {
    let profile = Profile::parse(&args.profile)?;
    let file = ConfigFile::load(&args.config)?;
    let (cfg, _) = load_scenario(&file, profile, args.seed)?;
    let result = run_scenario(&cfg)?;
    let files = persist_results(&result, &args.out_dir())?;
    println!(
        "scenario '{}': {} algorithms x {} replications, wrote {} files to {}",
        cfg.name,
        cfg.algorithms.len(),
        cfg.replications,
        files.len(),
        args.out_dir().display()
    );
    Ok(())
}

fn cmd_sweep(args: &CommonArgs) -> Result<(), Error> {
    let profile = Profile::parse(&args.profile)?;
    let file = ConfigFile::load(&args.config)?;
    let (base, sweep) = load_scenario(&file, profile, args.seed)?;
    let sweep = sweep.ok_or_else(|| {
        Error::Config("sweep command needs a [sweep] section in the config".into())
    })?;
    let scenarios = sweep.expand(&base)?;
    let out_dir = args.out_dir();
    for cfg in &scenarios {
        let result = run_scenario(cfg)?;
        persist_results(&result, &out_dir)?;
        println!("scenario '{}' done", cfg.name);
    }
    println!(
        "sweep complete: {} scenarios in {}",
        scenarios.len(),
        out_dir.display()
    );
    Ok(())
}

fn cmd_pool(args: &CommonArgs) -> Result<(), Error> {
    let profile = Profile::parse(&args.profile)?;
    let file = ConfigFile::load(&args.config)?;
    let request = load_pool_request(&file, profile, args.seed)?;
    let spec = pool_spec_by_name(&request.spec_name)?;
    let pool = build_pool_named(&spec, request.size, request.seed, &request.spec_name)?;
    let out_dir = args.out_dir();
    export_pool_csv(&pool, &out_dir)?;
    println!(
        "pool '{}': {} samples, feature dim {}, written to {}",
        request.spec_name,
        pool.len(),
        pool.feature_dim(),
        out_dir.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// report: aggregate summary CSVs into per-(scenario, algorithm) tables
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct SummaryRow {
    scenario: String,
    algorithm: String,
    normalized_utility: Option<f64>,
    rise_time: Option<f64>,
}

fn parse_summary_file(path: &Path) -> Result<Vec<SummaryRow>, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::Parse {
            path: path.display().to_string(),
            row: 1,
            column: "-".into(),
            message: "empty summary file".into(),
        })?
        .split(',')
        .map(str::trim)
        .collect();
    let col = |name: &str| header.iter().position(|h| *h == name);
    let (Some(scenario_col), Some(algo_col)) = (col("scenario"), col("algorithm")) else {
        return Err(Error::Parse {
            path: path.display().to_string(),
            row: 1,
            column: "scenario/algorithm".into(),
            message: "missing required summary columns".into(),
        });
    };
    let norm_col = col("normalized_utility");
    let rise_col = col("rise_time");
    let mut rows = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        let get_f64 = |idx: Option<usize>| {
            idx.and_then(|i| cells.get(i))
                .and_then(|c| c.trim().parse::<f64>().ok())
        };
        rows.push(SummaryRow {
            scenario: cells[scenario_col].trim().to_string(),
            algorithm: cells[algo_col].trim().to_string(),
            normalized_utility: get_f64(norm_col),
            rise_time: get_f64(rise_col),
        });
    }
    Ok(rows)
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

fn write_comparison(
    rows: &[SummaryRow],
    value_of: impl Fn(&SummaryRow) -> Option<f64>,
    path: &Path,
) -> Result<(), Error> {
    use std::collections::BTreeMap;
    let mut groups: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for row in rows {
        if let Some(v) = value_of(row) {
            groups
                .entry((row.scenario.clone(), row.algorithm.clone()))
                .or_default()
                .push(v);
        }
    }
    let mut out = String::from("scenario,algorithm,count,mean,min,q1,median,q3,max\n");
    for ((scenario, algorithm), mut values) in groups {
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        out.push_str(&format!(
            "{scenario},{algorithm},{},{mean},{},{},{},{},{}\n",
            values.len(),
            values[0],
            quantile(&values, 0.25),
            quantile(&values, 0.5),
            quantile(&values, 0.75),
            values[values.len() - 1],
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn cmd_report(args: &CommonArgs) -> Result<(), Error> {
    let file = ConfigFile::load(&args.config)?;
    let request = load_report_request(&file)?;
    let mut rows = Vec::new();
    for dir in &request.inputs {
        let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        let mut paths: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.ends_with("__summary.csv"))
            })
            .collect();
        paths.sort();
        for path in paths {
            rows.extend(parse_summary_file(&path)?);
        }
    }
    if rows.is_empty() {
        return Err(Error::Config(
            "no summary rows found under the report inputs".into(),
        ));
    }
    let out_dir = args.out_dir();
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
    write_comparison(
        &rows,
        |r| r.normalized_utility,
        &out_dir.join("comparison_normalized_utility.csv"),
    )?;
    write_comparison(
        &rows,
        |r| r.rise_time,
        &out_dir.join("comparison_rise_time.csv"),
    )?;
    println!(
        "report: {} summary rows aggregated into {}",
        rows.len(),
        out_dir.display()
    );
    Ok(())
}
