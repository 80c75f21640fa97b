//! Executing runs and grids.

use std::collections::HashSet;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::experiment::grid::{expand_grid, ExperimentGrid, RunConfig};
use crate::experiment::records::{read_records_prefix, RunRecord, RunResult};
use crate::metrics::evaluate_run;
use crate::nsga2::run_optimization;
use crate::problems::{NoiseSpec, NoisyProblem, ZdtProblem};
use crate::rng::RngStream;

pub const RECORDS_FILE: &str = "runs.csv";
pub const FAILURES_FILE: &str = "failures.csv";
pub const RUNS_DIR: &str = "runs";

/// Executes one run. The result is a pure function of `config` apart from
/// `duration_ms`.
pub fn run_single(config: &RunConfig) -> Result<RunResult> {
    let started = Instant::now();
    let problem = NoisyProblem::new(
        ZdtProblem::new(config.problem, config.n_vars)?,
        NoiseSpec::new(config.sigma)?,
    );
    let evaluator = config.arm.evaluator()?;
    let ga = config.ga_config()?;
    let mut rng = RngStream::new(config.seed);
    let run = run_optimization(&problem, &evaluator, &ga, &mut rng)?;
    let report = evaluate_run(&run.final_set, &problem, config.reference_point, config.front_size)?;
    Ok(RunResult {
        fingerprint: config.fingerprint(),
        config: config.clone(),
        seed: config.seed,
        final_set: run.final_set,
        report,
        trace: run.trace,
        duration_ms: started.elapsed().as_millis() as u64,
        history: Some(run.history),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    pub fingerprint: String,
    pub config: RunConfig,
    pub error: String,
}

#[derive(Debug, Default)]
pub struct GridOutcome {
    /// Records of every run in the grid that has completed, in expansion order.
    pub records: Vec<RunRecord>,
    pub failures: Vec<RunFailure>,
    /// Runs skipped because their records were already persisted.
    pub resumed: usize,
}

impl GridOutcome {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }
}

enum Message {
    Done(Box<RunResult>),
    Failed(RunFailure),
}

struct Sink {
    records: Option<csv::Writer<BufWriter<File>>>,
    failures: Option<BufWriter<File>>,
    runs_dir: Option<PathBuf>,
    dir: PathBuf,
}

impl Sink {
    fn open(dir: &Path, save_runs: bool) -> Result<(Self, Vec<RunRecord>)> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(RECORDS_FILE);
        let existing = match fs::read(&path) {
            Ok(bytes) => bytes,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(Error::io(&path, e)),
        };
        let (records, valid_end) = read_records_prefix(&existing);
        let file = OpenOptions::new()
            .create(true)
            .write(true)
            .truncate(false)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        // drop a torn trailing row left by an interrupted run
        file.set_len(valid_end).map_err(|e| Error::io(&path, e))?;
        let mut file = file;
        use std::io::Seek;
        file.seek(std::io::SeekFrom::End(0)).map_err(|e| Error::io(&path, e))?;
        let writer = csv::WriterBuilder::new()
            .has_headers(valid_end == 0)
            .from_writer(BufWriter::new(file));
        let runs_dir = if save_runs {
            let d = dir.join(RUNS_DIR);
            fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
            Some(d)
        } else {
            None
        };
        Ok((
            Self {
                records: Some(writer),
                failures: None,
                runs_dir,
                dir: dir.to_path_buf(),
            },
            records,
        ))
    }

    fn record(&mut self, result: &RunResult) -> Result<()> {
        if let Some(d) = &self.runs_dir {
            let path = d.join(format!("{}.json", result.fingerprint));
            fs::write(&path, result.to_json()?).map_err(|e| Error::io(&path, e))?;
        }
        if let Some(w) = &mut self.records {
            w.serialize(result.record())?;
            w.flush().map_err(|e| Error::io(self.dir.join(RECORDS_FILE), e))?;
        }
        Ok(())
    }

    fn failure(&mut self, failure: &RunFailure) -> Result<()> {
        let path = self.dir.join(FAILURES_FILE);
        if self.failures.is_none() {
            let file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(&path)
                .map_err(|e| Error::io(&path, e))?;
            self.failures = Some(BufWriter::new(file));
        }
        let w = self.failures.as_mut().expect("opened above");
        writeln!(w, "{},{:?}", failure.fingerprint, failure.error).map_err(|e| Error::io(&path, e))?;
        w.flush().map_err(|e| Error::io(&path, e))
    }
}

/// Runs every configuration of `grid` with at most `parallelism` runs in flight.
///
/// With `out_dir`, each completed run is appended to `runs.csv` as soon as it
/// finishes, and runs whose fingerprints are already recorded there are
/// skipped, so an interrupted grid can simply be restarted. Failed runs are
/// logged to `failures.csv` and do not stop the grid.
pub fn run_grid(grid: &ExperimentGrid, parallelism: usize, out_dir: Option<&Path>) -> Result<GridOutcome> {
    let configs = expand_grid(grid)?;
    let (mut sink, existing) = match out_dir {
        Some(dir) => {
            let (sink, existing) = Sink::open(dir, grid.save_runs)?;
            (Some(sink), existing)
        }
        None => (None, Vec::new()),
    };
    let done: HashSet<&str> = existing.iter().map(|r| r.fingerprint.as_str()).collect();
    let todo: Vec<&RunConfig> = configs
        .iter()
        .filter(|c| !done.contains(c.fingerprint().as_str()))
        .collect();
    let resumed = configs.len() - todo.len();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;

    let (tx, rx) = mpsc::channel::<Message>();
    let mut fresh: Vec<RunRecord> = Vec::with_capacity(todo.len());
    let mut failures = Vec::new();
    let sink_result = std::thread::scope(|scope| {
        let writer = scope.spawn(|| -> Result<()> {
            for msg in rx {
                match msg {
                    Message::Done(result) => {
                        if let Some(s) = sink.as_mut() {
                            s.record(&result)?;
                        }
                        fresh.push(result.record());
                    }
                    Message::Failed(f) => {
                        if let Some(s) = sink.as_mut() {
                            s.failure(&f)?;
                        }
                        failures.push(f);
                    }
                }
            }
            Ok(())
        });
        pool.install(|| {
            todo.par_iter().for_each_with(tx, |tx, config| {
                let msg = match run_single(config) {
                    Ok(mut result) => {
                        if !grid.save_runs {
                            result.history = None;
                        }
                        Message::Done(Box::new(result))
                    }
                    Err(e) => Message::Failed(RunFailure {
                        fingerprint: config.fingerprint(),
                        config: (*config).clone(),
                        error: e.to_string(),
                    }),
                };
                // the writer only hangs up after an i/o error, reported below
                let _ = tx.send(msg);
            });
        });
        writer.join().expect("result writer panicked")
    });
    sink_result?;

    let mut by_fp: std::collections::HashMap<String, RunRecord> = existing
        .into_iter()
        .chain(fresh)
        .map(|r| (r.fingerprint.clone(), r))
        .collect();
    let records = configs.iter().filter_map(|c| by_fp.remove(&c.fingerprint())).collect();
    let order: std::collections::HashMap<String, usize> =
        configs.iter().enumerate().map(|(i, c)| (c.fingerprint(), i)).collect();
    failures.sort_by_key(|f: &RunFailure| order.get(&f.fingerprint).copied());
    Ok(GridOutcome {
        records,
        failures,
        resumed,
    })
}
