use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use knnavg::experiment::runner::RECORDS_FILE;
use knnavg::experiment::{read_records, report, run_grid, run_single, Arm, ExperimentGrid, GaSettings, RunConfig, RunResult};
use knnavg::metrics::{DEFAULT_FRONT_SIZE, DEFAULT_REFERENCE};
use knnavg::problems::true_front;
use knnavg::stats::DEFAULT_ALPHA;
use knnavg::{Error, ZdtVariant};

const EXIT_CONTRACT: u8 = 1;
const EXIT_PARTIAL: u8 = 2;

#[derive(Parser)]
#[command(name = "knnavg", version, about = "kNN-averaged fitness for noisy multi-objective optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Execute an experiment grid, appending one record per run to DIR/runs.csv.
    Run(RunArgs),
    /// Execute one run and print its result as JSON.
    Single(SingleArgs),
    /// Compare every kNN setting against the baseline and write verdict tables.
    Report(ReportArgs),
    /// Print a sample of a problem's Pareto front as CSV.
    Front(FrontArgs),
    /// Print the per-evaluation history of a saved run as CSV.
    History(HistoryArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Grid definition (TOML). Without it the full default grid is used.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Maximum number of concurrent runs.
    #[arg(long, default_value_t = default_parallelism())]
    parallelism: usize,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Print the run count and exit.
    #[arg(long)]
    dry_run: bool,
    #[command(flatten)]
    overrides: GridOverrides,
}

/// Flags overriding individual grid fields; lists are comma-separated.
#[derive(Args)]
struct GridOverrides {
    #[arg(long, value_delimiter = ',')]
    problems: Option<Vec<ZdtVariant>>,
    #[arg(long, value_delimiter = ',')]
    n_vars: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    sigmas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pop_sizes: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    ks: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    max_dists: Option<Vec<f64>>,
    #[arg(long)]
    repetitions: Option<u32>,
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    #[arg(long)]
    crossover_prob: Option<f64>,
    #[arg(long)]
    mutation_prob: Option<f64>,
    #[arg(long)]
    eta_crossover: Option<f64>,
    #[arg(long)]
    eta_mutation: Option<f64>,
    #[arg(long, value_delimiter = ',', num_args = 2)]
    reference_point: Option<Vec<f64>>,
    #[arg(long)]
    front_size: Option<usize>,
    /// Also store each run's full result and history under DIR/runs/.
    #[arg(long)]
    save_runs: bool,
}

impl GridOverrides {
    fn apply(self, g: &mut ExperimentGrid) {
        macro_rules! set {
            ($($field:ident => $target:ident),*) => {
                $(if let Some(v) = self.$field { g.$target = v; })*
            };
        }
        set!(problems => problems, n_vars => n_vars, sigmas => sigmas, pop_sizes => pop_sizes,
             ks => ks, max_dists => max_dists, repetitions => repetitions,
             generations => generations, base_seed => base_seed, front_size => front_size);
        if let Some(v) = self.crossover_prob {
            g.ga.crossover_prob = v;
        }
        if let Some(v) = self.mutation_prob {
            g.ga.mutation_prob = v;
        }
        if let Some(v) = self.eta_crossover {
            g.ga.eta_crossover = v;
        }
        if let Some(v) = self.eta_mutation {
            g.ga.eta_mutation = v;
        }
        if let Some(r) = self.reference_point {
            g.reference_point = [r[0], r[1]];
        }
        if self.save_runs {
            g.save_runs = true;
        }
    }
}

#[derive(Args)]
struct SingleArgs {
    #[arg(long)]
    problem: ZdtVariant,
    #[arg(long)]
    n_vars: usize,
    #[arg(long)]
    sigma: f64,
    #[arg(long)]
    pop: usize,
    #[arg(long, default_value_t = 100)]
    gens: usize,
    /// Neighbour count; omit for the baseline (plain noisy evaluation).
    #[arg(long, requires = "max_dist")]
    k: Option<usize>,
    #[arg(long, requires = "k")]
    max_dist: Option<f64>,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = GaSettings::default().crossover_prob)]
    crossover_prob: f64,
    #[arg(long, default_value_t = GaSettings::default().mutation_prob)]
    mutation_prob: f64,
    #[arg(long, default_value_t = GaSettings::default().eta_crossover)]
    eta_crossover: f64,
    #[arg(long, default_value_t = GaSettings::default().eta_mutation)]
    eta_mutation: f64,
    #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = DEFAULT_REFERENCE)]
    reference_point: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_FRONT_SIZE)]
    front_size: usize,
    /// Leave the evaluation history out of the output.
    #[arg(long)]
    no_history: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory holding runs.csv (as written by `run`).
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    /// Where to write the tables; defaults to the input directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FrontArgs {
    #[arg(long)]
    problem: ZdtVariant,
    #[arg(long, default_value_t = DEFAULT_FRONT_SIZE)]
    count: usize,
}

#[derive(Args)]
struct HistoryArgs {
    /// A run file (JSON) written by `single` or by `run --save-runs`.
    #[arg(long = "in")]
    input: PathBuf,
}

fn default_parallelism() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn read_file(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_stdout(text: &str) -> Result<(), Error> {
    let mut out = io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|source| Error::Io {
            path: "<stdout>".into(),
            source,
        })
}

fn cmd_run(args: RunArgs) -> Result<ExitCode, Error> {
    let mut grid = match &args.config {
        Some(path) => ExperimentGrid::from_toml_str(&read_file(path)?)?,
        None => ExperimentGrid::default(),
    };
    args.overrides.apply(&mut grid);
    grid.validate()?;
    println!(
        "{} runs: {} cells x ({} kNN settings + 1 baseline) x {} repetitions ({} kNN, {} baseline)",
        grid.run_count(),
        grid.cell_count(),
        grid.ks.len() * grid.max_dists.len(),
        grid.repetitions,
        grid.knn_run_count(),
        grid.baseline_run_count(),
    );
    if args.dry_run {
        return Ok(ExitCode::SUCCESS);
    }
    let outcome = run_grid(&grid, args.parallelism, Some(&args.out))?;
    println!(
        "{} runs recorded in {} ({} resumed), {} failed",
        outcome.records.len(),
        args.out.join(RECORDS_FILE).display(),
        outcome.resumed,
        outcome.failures.len()
    );
    for f in &outcome.failures {
        eprintln!("run {} failed: {}", f.fingerprint, f.error);
    }
    Ok(if outcome.is_complete() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_PARTIAL)
    })
}

fn cmd_single(args: SingleArgs) -> Result<ExitCode, Error> {
    let arm = match (args.k, args.max_dist) {
        (Some(k), Some(max_dist)) => Arm::Knn { k, max_dist },
        _ => Arm::Baseline,
    };
    let config = RunConfig {
        problem: args.problem,
        n_vars: args.n_vars,
        sigma: args.sigma,
        pop_size: args.pop,
        generations: args.gens,
        arm,
        repetition: 0,
        seed: args.seed,
        ga: GaSettings {
            crossover_prob: args.crossover_prob,
            mutation_prob: args.mutation_prob,
            eta_crossover: args.eta_crossover,
            eta_mutation: args.eta_mutation,
        },
        reference_point: [args.reference_point[0], args.reference_point[1]],
        front_size: args.front_size,
    };
    let mut result = run_single(&config)?;
    if args.no_history {
        result.history = None;
    }
    write_stdout(&(result.to_json()? + "\n"))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_report(args: ReportArgs) -> Result<ExitCode, Error> {
    let path = args.input.join(RECORDS_FILE);
    let file = fs::File::open(&path).map_err(|source| Error::Io { path, source })?;
    let records = read_records(io::BufReader::new(file))?;
    let rep = report(&records, args.alpha)?;
    rep.write_to(args.out.as_deref().unwrap_or(&args.input))?;
    write_stdout(&rep.render())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_front(args: FrontArgs) -> Result<ExitCode, Error> {
    write_stdout(&true_front(args.problem, args.count)?.to_csv()?)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_history(args: HistoryArgs) -> Result<ExitCode, Error> {
    let run = RunResult::from_json(&read_file(&args.input)?)?;
    let mut buf = Vec::new();
    run.write_history_csv(&mut buf)?;
    write_stdout(&String::from_utf8_lossy(&buf))?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONTRACT)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Single(a) => cmd_single(a),
        Command::Report(a) => cmd_report(a),
        Command::Front(a) => cmd_front(a),
        Command::History(a) => cmd_history(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONTRACT)
        }
    }
}
