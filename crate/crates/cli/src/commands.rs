//! Experiment drivers behind the `run`, `affected-stats`, `scaling` and
//! `gen-batch` subcommands.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use serde::Serialize;

use dyncomm_core::batch::{self, TemporalReplay};
use dyncomm_core::{
    apply_batch, generate_random_batch, modularity, static_louvain, temporal_batches, Approach, AuxWeights,
    BatchSpec, BatchUpdate, Communities, DynamicResult, Graph, LouvainParams,
};

use crate::error::{CliError, Result};
use crate::formats::{load_matrix_market, load_temporal_edges, BatchFile, BatchRecord};

/// Relative tolerance of the carried `(K, Σ)` spot check.
pub const AUX_CHECK_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InputFormat {
    Mtx,
    Temporal,
}

#[derive(Clone, Debug)]
pub struct Config {
    pub input: PathBuf,
    pub format: InputFormat,
    /// Mirror `general` Matrix Market entries.
    pub symmetrize: bool,
    pub approaches: Vec<Approach>,
    pub batch_sizes: Vec<f64>,
    pub insertion_ratio: f64,
    pub reps: usize,
    pub seed: u64,
    pub workers: usize,
    pub params: LouvainParams,
    pub batch_file: Option<PathBuf>,
    pub static_refresh_every: Option<usize>,
    /// Compare carried `(K, Σ)` with a rescan every this many batches.
    pub check_every: usize,
}

impl Config {
    pub fn new(input: impl Into<PathBuf>) -> Self {
        Self {
            input: input.into(),
            format: InputFormat::Mtx,
            symmetrize: false,
            approaches: Approach::ALL.to_vec(),
            batch_sizes: vec![1e-4],
            insertion_ratio: 0.8,
            reps: 5,
            seed: 0,
            workers: 1,
            params: LouvainParams::default(),
            batch_file: None,
            static_refresh_every: None,
            check_every: 10,
        }
    }

    pub fn graph_name(&self) -> String {
        self.input.file_stem().map_or_else(|| "graph".to_string(), |s| s.to_string_lossy().into_owned())
    }

    fn validate(&self) -> Result<()> {
        if self.approaches.is_empty() {
            return Err(CliError::Usage("no approach selected".into()));
        }
        if self.batch_file.is_none() && self.batch_sizes.is_empty() {
            return Err(CliError::Usage("no batch size given".into()));
        }
        if let Some(&bad) = self.batch_sizes.iter().find(|f| !(**f > 0.0 && f.is_finite())) {
            return Err(CliError::Usage(format!("batch size {bad} must be a positive fraction")));
        }
        if !(0.0..=1.0).contains(&self.insertion_ratio) {
            return Err(CliError::Usage(format!("insertion ratio {} outside [0, 1]", self.insertion_ratio)));
        }
        if self.workers == 0 {
            return Err(CliError::Usage("worker count must be at least 1".into()));
        }
        if self.static_refresh_every == Some(0) {
            return Err(CliError::Usage("--static-refresh-every must be at least 1".into()));
        }
        if self.batch_file.is_some() && self.format == InputFormat::Temporal {
            return Err(CliError::Usage("--batch-file replays onto a Matrix Market graph only".into()));
        }
        self.params.validate().map_err(|e| CliError::Usage(e.to_string()))
    }
}

/// One row of the `run` output.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunRecord {
    pub graph_name: String,
    pub approach: String,
    pub batch_size_fraction: f64,
    pub batch_index: usize,
    pub elapsed_seconds: f64,
    pub modularity: f64,
    pub affected_count: usize,
    pub iterations: usize,
    pub passes: usize,
    pub workers: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AffectedRecord {
    pub graph_name: String,
    pub approach: String,
    pub batch_size_fraction: f64,
    pub batch_index: usize,
    pub vertex_count: usize,
    pub affected_count: usize,
    pub affected_fraction: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingRecord {
    pub graph_name: String,
    pub approach: String,
    pub workers: usize,
    pub batches: usize,
    pub geometric_mean_seconds: f64,
    pub speedup: f64,
}

pub fn geometric_mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    (values.iter().map(|v| v.max(f64::MIN_POSITIVE).ln()).sum::<f64>() / values.len() as f64).exp()
}

pub fn arithmetic_mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Where the batches of one sequence come from.
enum Steps {
    Random { fraction: f64, ratio: f64, seed: u64, count: usize },
    Recorded { records: Vec<BatchRecord>, seed: u64 },
    Temporal(Vec<BatchUpdate>),
}

struct Sequence {
    fraction: f64,
    base: Graph,
    steps: Steps,
}

impl Sequence {
    fn len(&self) -> usize {
        match &self.steps {
            Steps::Random { count, .. } => *count,
            Steps::Recorded { records, .. } => records.len(),
            Steps::Temporal(b) => b.len(),
        }
    }

    fn seed(&self, k: usize) -> u64 {
        match self.steps {
            Steps::Random { seed, .. } | Steps::Recorded { seed, .. } => seed.wrapping_add(k as u64),
            Steps::Temporal(_) => 0,
        }
    }

    fn batch(&self, k: usize, g: &Graph) -> Result<BatchUpdate> {
        match &self.steps {
            Steps::Random { fraction, ratio, .. } => {
                let spec = BatchSpec { size_fraction: *fraction, insertion_ratio: *ratio, seed: self.seed(k), repetitions: 1 };
                Ok(generate_random_batch(g, &spec)?)
            }
            Steps::Recorded { records, .. } => records[k].resolve(g),
            Steps::Temporal(batches) => Ok(batches[k].clone()),
        }
    }
}

fn load_sequences(config: &Config) -> Result<Vec<Sequence>> {
    match config.format {
        InputFormat::Mtx => {
            let base = load_matrix_market(&config.input, config.symmetrize)?;
            if let Some(path) = &config.batch_file {
                let file = BatchFile::load(path)?;
                let fraction = file.metadata.get("fraction").and_then(|f| f.parse().ok()).unwrap_or(0.0);
                let seed = file.metadata.get("seed").and_then(|f| f.parse().ok()).unwrap_or(config.seed);
                return Ok(vec![Sequence { fraction, base, steps: Steps::Recorded { records: file.batches, seed } }]);
            }
            Ok(config
                .batch_sizes
                .iter()
                .map(|&fraction| Sequence {
                    fraction,
                    base: base.clone(),
                    steps: Steps::Random {
                        fraction,
                        ratio: config.insertion_ratio,
                        seed: config.seed,
                        count: config.reps,
                    },
                })
                .collect())
        }
        InputFormat::Temporal => {
            let stream = load_temporal_edges(&config.input)?;
            config
                .batch_sizes
                .iter()
                .map(|&fraction| {
                    let TemporalReplay { base, batches, missing_batches, .. } = temporal_batches(&stream, fraction)?;
                    if missing_batches > 0 {
                        eprintln!(
                            "warning: {}: stream holds only {} full batches at fraction {fraction}",
                            config.input.display(),
                            batches.len()
                        );
                    }
                    Ok(Sequence { fraction, base, steps: Steps::Temporal(batches) })
                })
                .collect()
        }
    }
}

fn check_result(g: &Graph, approach: Approach, batch: usize, r: &DynamicResult, rescan: bool) -> Result<f64> {
    let n = g.vertex_count();
    r.communities
        .validate(n)
        .map_err(|e| CliError::Invariant(format!("{approach} batch {batch}: invalid membership: {e}")))?;
    let q = modularity(g, &r.communities)?;
    if !(-0.5..=1.0).contains(&q) {
        return Err(CliError::Invariant(format!("{approach} batch {batch}: modularity {q} outside [-0.5, 1]")));
    }
    if rescan {
        let fresh = AuxWeights::from_scratch(g, &r.communities)?;
        let diff = r.aux.max_relative_difference(&fresh);
        if diff > AUX_CHECK_TOLERANCE {
            return Err(CliError::Invariant(format!(
                "{approach} batch {batch}: carried weights differ from a rescan by {diff:e}"
            )));
        }
    }
    Ok(q)
}

/// Runs every configured sequence and hands each record, with the vertex
/// count of its snapshot, to `sink`.
///
/// Dynamic approaches start from a static run on the base graph (not
/// recorded) and carry `(C, K, Σ)` from batch to batch; `static` is rerun
/// from scratch on every snapshot.
pub fn run_records(config: &Config, mut sink: impl FnMut(RunRecord, usize) -> Result<()>) -> Result<()> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} workers: {e}", config.workers)))?;
    let sequences = load_sequences(config)?;
    let name = config.graph_name();
    for seq in sequences {
        let mut g = seq.base.clone();
        let mut state: BTreeMap<Approach, (Communities, AuxWeights)> = BTreeMap::new();
        if config.approaches.iter().any(|a| a.is_dynamic()) {
            let initial = pool.install(|| static_louvain(&g, &config.params))?;
            for &a in config.approaches.iter().filter(|a| a.is_dynamic()) {
                state.insert(a, (initial.communities.clone(), initial.aux.clone()));
            }
        }
        for k in 0..seq.len() {
            let b = seq.batch(k, &g)?;
            g = apply_batch(g, &b)?;
            let refresh = config.static_refresh_every.is_some_and(|e| (k + 1) % e == 0);
            let rescan = (k + 1) % config.check_every.max(1) == 0;
            for &approach in &config.approaches {
                let r = pool.install(|| match state.get(&approach) {
                    Some((c, aux)) if !refresh => approach.run(&g, &b, c, aux, &config.params),
                    _ => static_louvain(&g, &config.params),
                })?;
                let q = check_result(&g, approach, k, &r, rescan && approach.is_dynamic())?;
                let record = RunRecord {
                    graph_name: name.clone(),
                    approach: approach.to_string(),
                    batch_size_fraction: seq.fraction,
                    batch_index: k,
                    elapsed_seconds: r.stats.elapsed.as_secs_f64(),
                    modularity: q,
                    affected_count: r.stats.affected_count,
                    iterations: r.stats.iterations,
                    passes: r.stats.passes,
                    workers: config.workers,
                    seed: seq.seed(k),
                };
                sink(record, g.vertex_count())?;
                if approach.is_dynamic() {
                    state.insert(approach, (r.communities, r.aux));
                }
            }
        }
    }
    Ok(())
}

/// Writes one CSV row per approach and batch. Returns the row count.
pub fn cmd_run(config: &Config, out: impl Write) -> Result<usize> {
    let mut writer = csv::Writer::from_writer(out);
    let mut rows = 0;
    run_records(config, |r, _| {
        writer.serialize(&r)?;
        rows += 1;
        Ok(())
    })?;
    if rows == 0 {
        writer.write_record(RUN_HEADER)?;
    }
    writer.flush()?;
    Ok(rows)
}

pub const RUN_HEADER: [&str; 11] = [
    "graph_name",
    "approach",
    "batch_size_fraction",
    "batch_index",
    "elapsed_seconds",
    "modularity",
    "affected_count",
    "iterations",
    "passes",
    "workers",
    "seed",
];

/// Affected share of the vertices per batch, for `ds` and `df` only.
pub fn cmd_affected_stats(config: &Config, out: impl Write) -> Result<usize> {
    if let Some(a) = config
        .approaches
        .iter()
        .find(|a| !matches!(a, Approach::DeltaScreening | Approach::DynamicFrontier))
    {
        return Err(CliError::Usage(format!("affected-stats supports ds and df, not {a}")));
    }
    let mut writer = csv::Writer::from_writer(out);
    let mut rows = 0;
    run_records(config, |r, vertex_count| {
        writer.serialize(AffectedRecord {
            graph_name: r.graph_name,
            approach: r.approach,
            batch_size_fraction: r.batch_size_fraction,
            batch_index: r.batch_index,
            vertex_count,
            affected_count: r.affected_count,
            affected_fraction: r.affected_count as f64 / vertex_count as f64,
            seed: r.seed,
        })?;
        rows += 1;
        Ok(())
    })?;
    writer.flush()?;
    Ok(rows)
}

/// Geometric-mean runtime per worker count and speedup over one worker.
pub fn cmd_scaling(config: &Config, workers: &[usize], out: impl Write) -> Result<Vec<ScalingRecord>> {
    let doubling = workers.first() == Some(&1) && workers.windows(2).all(|w| w[1] == 2 * w[0]);
    if !doubling {
        return Err(CliError::Usage(format!("worker counts must double from 1, got {workers:?}")));
    }
    let mut times: BTreeMap<(String, usize), Vec<f64>> = BTreeMap::new();
    for &w in workers {
        let cfg = Config { workers: w, ..config.clone() };
        run_records(&cfg, |r, _| {
            times.entry((r.approach, w)).or_default().push(r.elapsed_seconds);
            Ok(())
        })?;
    }
    let name = config.graph_name();
    let mut records = Vec::new();
    for approach in &config.approaches {
        let key = approach.to_string();
        let base = geometric_mean(times.get(&(key.clone(), 1)).map_or(&[][..], Vec::as_slice));
        for &w in workers {
            let samples = times.get(&(key.clone(), w)).map_or(&[][..], Vec::as_slice);
            let mean = geometric_mean(samples);
            records.push(ScalingRecord {
                graph_name: name.clone(),
                approach: key.clone(),
                workers: w,
                batches: samples.len(),
                geometric_mean_seconds: mean,
                speedup: base / mean,
            });
        }
    }
    let mut writer = csv::Writer::from_writer(out);
    for r in &records {
        writer.serialize(r)?;
    }
    writer.flush()?;
    Ok(records)
}

/// Generates `config.reps` consecutive random batches at the first batch
/// size and writes them as a batch file.
pub fn cmd_gen_batch(config: &Config, out: impl Write) -> Result<usize> {
    let fraction = *config.batch_sizes.first().ok_or_else(|| CliError::Usage("no batch size given".into()))?;
    let mut g = load_matrix_market(&config.input, config.symmetrize)?;
    let mut file = BatchFile::default();
    file.metadata.insert("rng".into(), batch::RNG_NAME.into());
    file.metadata.insert("seed".into(), config.seed.to_string());
    file.metadata.insert("fraction".into(), fraction.to_string());
    file.metadata.insert("insertion_ratio".into(), config.insertion_ratio.to_string());
    for k in 0..config.reps {
        let spec = BatchSpec {
            size_fraction: fraction,
            insertion_ratio: config.insertion_ratio,
            seed: config.seed.wrapping_add(k as u64),
            repetitions: 1,
        };
        let b = generate_random_batch(&g, &spec)?;
        file.batches.push(BatchRecord::from_update(&b));
        g = apply_batch(g, &b)?;
    }
    file.write(out)?;
    Ok(file.batches.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn means() {
        assert!((geometric_mean(&[1.0, 4.0]) - 2.0).abs() < 1e-12);
        assert!((arithmetic_mean(&[1.0, 4.0]) - 2.5).abs() < 1e-12);
        assert!(geometric_mean(&[]).is_nan());
    }

    #[test]
    fn stale_weights_are_an_invariant_violation() {
        let g = dyncomm_core::synth::barbell();
        let mut r = static_louvain(&g, &LouvainParams::default()).unwrap();
        assert!(check_result(&g, Approach::DynamicFrontier, 9, &r, true).is_ok());
        r.aux.community_weight[0] += 1.0;
        let err = check_result(&g, Approach::DynamicFrontier, 9, &r, true).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(check_result(&g, Approach::DynamicFrontier, 9, &r, false).is_ok());
        r.communities = Communities::new(vec![9; 8]);
        assert_eq!(check_result(&g, Approach::DynamicFrontier, 9, &r, false).unwrap_err().exit_code(), 3);
    }

    #[test]
    fn config_rejects_bad_values() {
        let mut c = Config::new("g.mtx");
        c.batch_sizes = vec![0.0];
        assert!(matches!(c.validate(), Err(CliError::Usage(_))));
        let mut c = Config::new("g.mtx");
        c.workers = 0;
        assert!(matches!(c.validate(), Err(CliError::Usage(_))));
        assert_eq!(Config::new("/data/web-Google.mtx").graph_name(), "web-Google");
    }
}
