//! Runs a validated experiment config and writes its output bundle.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use rfi_core::{
    fit_ols_table, sample_scm, scm, Dataset, LinearModel, PredictiveModel, RfiEngine, RfiOptions,
    RfiRecord, ScmGraph, SquaredError, Table, TestKind, TrainedSamplers,
};

use crate::config::{resolve, validate, DataSource, ExperimentConfig, ModelSource};
use crate::error::CliError;
use crate::svg;

pub const RESULTS_FILE: &str = "results.csv";
pub const DELTA_FILE: &str = "delta.csv";
pub const CHART_FILE: &str = "rfi.svg";
pub const MODEL_FILE: &str = "model.toml";
pub const MANIFEST_FILE: &str = "manifest.json";

pub const CI_LEVEL: f64 = 0.95;

const DELTA_HEADER: [&str; 8] = ["feature", "G", "N", "delta", "se", "estimate_G", "estimate_GN", "seed"];

/// Seeds for the data draw and the split, kept apart from the replication
/// streams, which use the config seed directly.
pub fn data_seed(seed: u64) -> u64 {
    mix(seed ^ 0xD1B5_4A32_D192_ED03)
}

pub fn split_seed(seed: u64) -> u64 {
    mix(seed ^ 0x8CB9_2BA7_2F3D_8DD7)
}

// splitmix64 finalizer
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaRecord {
    pub feature: String,
    pub given: Vec<String>,
    pub added: Vec<String>,
    pub delta: f64,
    pub se: f64,
    pub estimate_given: f64,
    pub estimate_extended: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub name: String,
    pub version: &'static str,
    pub config_hash: String,
    pub seed: u64,
    pub data_seed: u64,
    pub split_seed: u64,
    pub replications: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub baseline_risk: f64,
    pub jobs: usize,
    pub threads: usize,
    pub files: Vec<&'static str>,
    pub wall_time_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub output_dir: PathBuf,
    pub model: LinearModel,
    pub records: Vec<RfiRecord>,
    pub deltas: Vec<DeltaRecord>,
    pub manifest: Manifest,
}

/// Builds the dataset a config describes.
pub fn load_dataset(cfg: &ExperimentConfig, base: &Path) -> Result<Dataset, CliError> {
    let simulate = |graph: &ScmGraph, n: usize| -> Result<Dataset, CliError> {
        let table = sample_scm(graph, n, data_seed(cfg.seed))?;
        Ok(Dataset::with_random_split(table, &cfg.target, cfg.test_fraction, split_seed(cfg.seed))?)
    };
    match &cfg.data {
        DataSource::Builtin { graph, n } => {
            let g = scm::builtin(graph).ok_or_else(|| {
                CliError::Config(vec![crate::config::Diagnostic::new(
                    "data.graph",
                    format!("unknown bundled graph `{graph}`"),
                )])
            })?;
            simulate(&g, *n)
        }
        DataSource::Graph { path, n } => simulate(&ScmGraph::from_path(resolve(base, path))?, *n),
        DataSource::Csv { path, split_column } => {
            let table = Table::from_csv_path(resolve(base, path))?;
            Ok(match split_column {
                Some(col) => Dataset::with_split_column(table, &cfg.target, col)?,
                None => Dataset::with_random_split(table, &cfg.target, cfg.test_fraction, split_seed(cfg.seed))?,
            })
        }
    }
}

fn load_model(cfg: &ExperimentConfig, base: &Path, train: &Table) -> Result<LinearModel, CliError> {
    Ok(match &cfg.model {
        ModelSource::Ols => fit_ols_table(train, &cfg.features, &cfg.target)?,
        ModelSource::File { path } => LinearModel::load(resolve(base, path))?,
    })
}

enum JobOutcome {
    Single(RfiRecord),
    Delta(RfiRecord, DeltaRecord),
}

/// Validates and runs `cfg`, writing the bundle to its output directory.
/// Jobs run on a pool of `threads` workers (0 picks the default); results
/// keep the job order regardless. If a job fails, the records of every job
/// that succeeded are still written before the error is returned.
pub fn run_experiment(cfg: &ExperimentConfig, base: &Path, threads: usize) -> Result<RunOutput, CliError> {
    let started = Instant::now();
    let diagnostics = validate(cfg, base);
    if !diagnostics.is_empty() {
        return Err(CliError::Config(diagnostics));
    }
    let dataset = load_dataset(cfg, base)?;
    let train = dataset.train();
    let test = dataset.test();
    let model = load_model(cfg, base, &train)?;
    let samplers = TrainedSamplers::new(train.clone(), cfg.sampler.kind.into(), cfg.sampler.ridge());
    let loss = SquaredError;
    let engine = RfiEngine::new(&model as &dyn PredictiveModel, &loss, &test, &cfg.target)?;
    let options = RfiOptions {
        replications: cfg.replications,
        base_seed: cfg.seed,
        form: cfg.form.into(),
    };
    let test_kind: TestKind = cfg.test.into();
    let record = |est: &rfi_core::RfiEstimate| {
        RfiRecord::from_estimate(est, test_kind, cfg.alpha, cfg.max_permutations, CI_LEVEL)
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool");
    let outcomes: Vec<rfi_core::Result<JobOutcome>> = pool.install(|| {
        cfg.jobs
            .par_iter()
            .map(|job| match &job.extend {
                None => {
                    let sampler = rfi_core::SamplerFactory::build(&samplers, &job.feature, &job.given)?;
                    let est = engine.compute(&job.feature, &job.given, sampler.as_ref(), options)?;
                    Ok(JobOutcome::Single(record(&est)?))
                }
                Some(added) => {
                    let d = engine.compute_delta(&job.feature, &job.given, added, &samplers, options)?;
                    let delta = DeltaRecord {
                        feature: d.feature.clone(),
                        given: d.given.clone(),
                        added: d.added.clone(),
                        delta: d.value,
                        se: d.se,
                        estimate_given: d.base.point,
                        estimate_extended: d.extended.point,
                        seed: cfg.seed,
                    };
                    Ok(JobOutcome::Delta(record(&d.base)?, delta))
                }
            })
            .collect()
    });

    let mut records = Vec::new();
    let mut deltas = Vec::new();
    let mut failure = None;
    for (index, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(JobOutcome::Single(r)) => records.push(r),
            Ok(JobOutcome::Delta(r, d)) => {
                records.push(r);
                deltas.push(d);
            }
            Err(source) if failure.is_none() => {
                let job = &cfg.jobs[index];
                failure = Some(CliError::Job {
                    index,
                    feature: job.feature.clone(),
                    given: job.given.join(", "),
                    source,
                });
            }
            Err(_) => {}
        }
    }

    let out_dir = resolve(base, &cfg.output_dir);
    fs::create_dir_all(&out_dir).map_err(|source| io_error(&out_dir, source))?;
    let mut files = vec![RESULTS_FILE];
    write_file(&out_dir.join(RESULTS_FILE), |w| Ok(rfi_core::write_records_csv(w, &records)?))?;
    if cfg.jobs.iter().any(|j| j.extend.is_some()) {
        write_file(&out_dir.join(DELTA_FILE), |w| write_deltas_csv(w, &deltas))?;
        files.push(DELTA_FILE);
    }
    if let Some(err) = failure {
        return Err(err);
    }
    let title = format!("{}: RFI of `{}` (95% CI, {} test rows)", cfg.name, cfg.target, test.n_rows());
    let chart = svg::render_chart(&title, &records, cfg.alpha);
    write_file(&out_dir.join(CHART_FILE), |w| Ok(w.write_all(chart.as_bytes())?))?;
    model.save(out_dir.join(MODEL_FILE))?;
    files.extend([CHART_FILE, MODEL_FILE, MANIFEST_FILE]);

    let manifest = Manifest {
        name: cfg.name.clone(),
        version: env!("CARGO_PKG_VERSION"),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        data_seed: data_seed(cfg.seed),
        split_seed: split_seed(cfg.seed),
        replications: cfg.replications,
        n_train: train.n_rows(),
        n_test: test.n_rows(),
        baseline_risk: engine.baseline_risk(),
        jobs: cfg.jobs.len(),
        threads: pool.current_num_threads(),
        files,
        wall_time_seconds: started.elapsed().as_secs_f64(),
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(&out_dir.join(MANIFEST_FILE), |w| Ok(writeln!(w, "{json}")?))?;

    Ok(RunOutput {
        output_dir: out_dir,
        model,
        records,
        deltas,
        manifest,
    })
}

fn io_error(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_file(
    path: &Path,
    body: impl FnOnce(&mut std::io::BufWriter<fs::File>) -> Result<(), CliError>,
) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(|e| io_error(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    body(&mut w)?;
    w.flush().map_err(|e| io_error(path, e))
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

pub fn write_deltas_csv<W: Write>(mut w: W, deltas: &[DeltaRecord]) -> Result<(), CliError> {
    writeln!(w, "{}", DELTA_HEADER.join(","))?;
    for d in deltas {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            d.feature,
            d.given.join(";"),
            d.added.join(";"),
            d.delta,
            d.se,
            d.estimate_given,
            d.estimate_extended,
            d.seed
        )?;
    }
    Ok(())
}
