//! Pipeline runners: load, weight, cluster, evaluate and write results.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::config::{PipelineConfig, WeightStrategy};
use super::window::select_windows;
use crate::clustering::Clustering;
use crate::detect::{
    cluster_report, label_propagation, save_verdicts, write_cluster_report, Verdict,
};
use crate::distance::{HammingMetric, WeightVector};
use crate::error::{Error, Result, StageExt};
use crate::metrics::{
    best_row, cfr, cfr_u, clr, detection_metrics, impurity, performance_score, GridSearchRow,
    MetricsReport, Ratio,
};
use crate::recagglo::{derive_seed, rec_agglo_all, RecAggloParams, RecursionStats};
use crate::sample::draw_landmarks;
use crate::schema::{self, AttributeSchema, Dataset, Label};
use crate::synthgen::{generate, CampaignGroundTruth, GeneratorConfig};
use crate::weights::{cardinality_weights, label_weights, training_params, SimpsonProfile};

/// Runs `f` on a pool of `workers` threads (all cores when 0).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

pub fn load_schema(cfg: &PipelineConfig) -> Result<AttributeSchema> {
    match &cfg.schema {
        Some(p) => AttributeSchema::load(p),
        None => Ok(AttributeSchema::default_orders()),
    }
}

/// Loads and concatenates every configured input.
pub fn load_inputs(cfg: &PipelineConfig, schema: &AttributeSchema) -> Result<Dataset> {
    if cfg.inputs.is_empty() {
        return Err(Error::Config("no input given".into()));
    }
    let mut data: Option<Dataset> = None;
    for path in &cfg.inputs {
        let next = schema::load_csv(path, schema.clone(), &cfg.null_marker)?;
        data = Some(match data {
            None => next,
            Some(prev) => schema::merge(&prev, &next)?,
        });
    }
    Ok(data.expect("at least one input"))
}

/// Weights for clustering `data` under the configured strategy.
pub fn resolve_weights(cfg: &PipelineConfig, data: &Dataset) -> Result<WeightVector> {
    match cfg.weights {
        WeightStrategy::Unit => Ok(WeightVector::unit(data.schema().d())),
        WeightStrategy::Cardinality => cardinality_weights(data),
        WeightStrategy::File => {
            let path = cfg.weights_file.as_ref().expect("validated");
            WeightVector::load(path, data.schema())
        }
        WeightStrategy::Label => {
            let path = cfg.train_input.as_ref().expect("validated");
            let train = schema::load_csv(path, data.shared_schema(), &cfg.null_marker)?;
            Ok(label_weights(&train, &training_params(cfg.params.seed))?.0)
        }
    }
}

pub fn build_metric(cfg: &PipelineConfig, weights: WeightVector) -> HammingMetric {
    HammingMetric::new(weights, cfg.null_policy, cfg.normalization)
}

/// Everything one clustering run produces.
#[derive(Debug, Clone)]
pub struct ClusterOutcome {
    /// The clustered records; window records carry no label.
    pub data: Dataset,
    /// Evaluation labels of `data`.
    pub truth: Vec<Label>,
    /// Window membership of `data` when a window was configured.
    pub window: Option<Vec<bool>>,
    pub weights: WeightVector,
    /// Canonical clustering; cluster ids are positions in it.
    pub clustering: Clustering,
    pub stats: RecursionStats,
    pub verdicts: Option<Vec<Verdict>>,
    pub report: MetricsReport,
}

/// Metrics of `cl` against the evaluation labels.
pub fn evaluate(
    cl: &Clustering,
    truth: &[Label],
    window: Option<&[bool]>,
    verdicts: Option<&[Verdict]>,
) -> Result<MetricsReport> {
    let n = truth.len();
    let mut report = MetricsReport {
        impurity: impurity(cl, truth)?,
        cfr: cfr(cl, truth),
        cfr_u: window.map(|w| cfr_u(cl, truth, w)),
        clr: clr(cl, truth, window),
        cluster_count: cl.len(),
        singleton_count: cl.singleton_count(),
        record_count: n,
        ..Default::default()
    };
    if let (Some(w), Some(v)) = (window, verdicts) {
        let mut flagged = vec![false; n];
        for v in v {
            flagged[v.index] = v.flagged;
        }
        let sizes = cl.assignments(n);
        let clustered: Vec<bool> = sizes
            .iter()
            .map(|k| k.is_some_and(|k| cl.clusters()[k].len() >= 2))
            .collect();
        let pick = |xs: &[bool]| -> Vec<bool> {
            xs.iter()
                .zip(w)
                .filter(|(_, &w)| w)
                .map(|(&x, _)| x)
                .collect()
        };
        let window_truth: Vec<Label> = truth
            .iter()
            .zip(w)
            .filter(|(_, &w)| w)
            .map(|(&t, _)| t)
            .collect();
        report.detection = Some(detection_metrics(
            &pick(&flagged),
            &window_truth,
            &pick(&clustered),
        )?);
    }
    Ok(report)
}

/// Clusters an in-memory dataset under `cfg`: window selection, weights,
/// RecAgglo, label propagation and metrics. Wall time covers RecAgglo only.
pub fn cluster_dataset(cfg: &PipelineConfig, all: &Dataset) -> Result<ClusterOutcome> {
    cfg.validate().stage("config")?;
    let (data, truth, window) = match &cfg.window {
        Some(spec) => {
            let w = select_windows(all, spec).stage("window")?;
            (w.data, w.truth, Some(w.in_window))
        }
        None => (all.clone(), all.labels(), None),
    };
    if data.is_empty() {
        return Err(Error::InvalidParameter("no records to cluster".into())).stage("window");
    }
    let weights = resolve_weights(cfg, &data).stage("weights")?;
    let metric = build_metric(cfg, weights.clone());

    let start = Instant::now();
    let (clustering, stats) =
        with_workers(cfg.workers, || rec_agglo_all(&data, &metric, &cfg.params))
            .stage("cluster")?
            .stage("cluster")?;
    let wall = start.elapsed().as_secs_f64();

    let verdicts = cfg.detect.then(|| label_propagation(&clustering, &data));
    let mut report =
        evaluate(&clustering, &truth, window.as_deref(), verdicts.as_deref()).stage("metrics")?;
    report.wall_time_s = wall;
    Ok(ClusterOutcome {
        data,
        truth,
        window,
        weights,
        clustering,
        stats,
        verdicts,
        report,
    })
}

/// `record_id,cluster_id` for every clustered record in dataset order.
pub fn write_assignments<W: Write>(data: &Dataset, cl: &Clustering, writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "record_id,cluster_id")?;
    for (i, k) in cl.assignments(data.n()).into_iter().enumerate() {
        if let Some(k) = k {
            writeln!(w, "{},{k}", csv_field(&data.record(i).record_id))?;
        }
    }
    w.flush()?;
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::file(path, e))
}

fn output_dir(cfg: &PipelineConfig) -> Result<Option<PathBuf>> {
    match &cfg.output_dir {
        None => Ok(None),
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
            Ok(Some(dir.clone()))
        }
    }
}

/// Writes clusters.csv, metrics.txt, weights.txt, config.txt and, with
/// detection on, verdicts.csv and cluster_report.csv into `dir`.
pub fn write_outcome(cfg: &PipelineConfig, out: &ClusterOutcome, dir: &Path) -> Result<()> {
    write_assignments(
        &out.data,
        &out.clustering,
        create(&dir.join("clusters.csv"))?,
    )?;
    std::fs::write(dir.join("metrics.txt"), out.report.to_key_value())?;
    out.weights
        .save(dir.join("weights.txt"), out.data.schema())?;
    std::fs::write(dir.join("config.txt"), cfg.to_text())?;
    if let Some(v) = &out.verdicts {
        save_verdicts(v, &dir.join("verdicts.csv"))?;
        let rows = cluster_report(&out.clustering, &out.data, v);
        write_cluster_report(&rows, create(&dir.join("cluster_report.csv"))?)?;
    }
    Ok(())
}

/// Loads the inputs, clusters them and writes results when an output
/// directory is configured.
pub fn run_cluster(cfg: &PipelineConfig) -> Result<ClusterOutcome> {
    cfg.validate().stage("config")?;
    let schema = load_schema(cfg).stage("load")?;
    let data = load_inputs(cfg, &schema).stage("load")?;
    let out = cluster_dataset(cfg, &data)?;
    if let Some(dir) = output_dir(cfg).stage("write")? {
        write_outcome(cfg, &out, &dir).stage("write")?;
    }
    Ok(out)
}

fn value_or_zero(r: Ratio) -> f64 {
    r.value().unwrap_or(0.0)
}

/// Grid search over `grid_rho_s x grid_rho_mc` with one repetition per
/// input file. Rows come in `rho_s`-major order with averaged impurity,
/// CFR and time (undefined ratios count as 0) and performance scores.
pub fn run_grid_search(cfg: &PipelineConfig) -> Result<Vec<GridSearchRow>> {
    cfg.validate().stage("config")?;
    if cfg.grid_rho_s.len() * cfg.grid_rho_mc.len() < 2 {
        return Err(Error::Config(
            "grid search needs at least two grid points".into(),
        ));
    }
    let schema = load_schema(cfg).stage("load")?;
    let mut datasets = Vec::new();
    for path in &cfg.inputs {
        let single = PipelineConfig {
            inputs: vec![path.clone()],
            ..cfg.clone()
        };
        datasets.push(load_inputs(&single, &schema).stage("load")?);
    }
    if datasets.is_empty() {
        return Err(Error::Config("no input given".into())).stage("load");
    }
    grid_search_datasets(cfg, &datasets)
}

/// [`run_grid_search`] on in-memory datasets, one repetition each.
pub fn grid_search_datasets(
    cfg: &PipelineConfig,
    datasets: &[Dataset],
) -> Result<Vec<GridSearchRow>> {
    let mut rows: Vec<GridSearchRow> = Vec::new();
    for &rho_s in &cfg.grid_rho_s {
        for &rho_mc in &cfg.grid_rho_mc {
            let run_cfg = PipelineConfig {
                params: RecAggloParams {
                    rho_s,
                    rho_mc,
                    ..cfg.params
                },
                detect: false,
                ..cfg.clone()
            };
            let mut row = GridSearchRow {
                rho_mc,
                rho_s,
                impurity: 0.0,
                cfr: 0.0,
                time_s: 0.0,
                score: 0.0,
            };
            for data in datasets {
                let out = cluster_dataset(&run_cfg, data)?;
                row.impurity += value_or_zero(out.report.impurity);
                row.cfr += value_or_zero(out.report.cfr);
                row.time_s += out.report.wall_time_s;
            }
            let reps = datasets.len() as f64;
            row.impurity /= reps;
            row.cfr /= reps;
            row.time_s /= reps;
            rows.push(row);
        }
    }
    performance_score(&mut rows).stage("score")?;
    if let Some(dir) = output_dir(cfg).stage("write")? {
        write_grid(&rows, create(&dir.join("grid.csv"))?).stage("write")?;
    }
    Ok(rows)
}

pub fn write_grid<W: Write>(rows: &[GridSearchRow], writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    let best = best_row(rows);
    writeln!(w, "rho_s,rho_mc,impurity,cfr,time_s,score,best")?;
    for (i, r) in rows.iter().enumerate() {
        writeln!(
            w,
            "{},{},{:.6},{:.6},{:.3},{:.6},{}",
            r.rho_s,
            r.rho_mc,
            r.impurity,
            r.cfr,
            r.time_s,
            r.score,
            best == Some(i)
        )?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub size: usize,
    pub repeats: usize,
    pub mean_s: f64,
    pub min_s: f64,
    pub max_s: f64,
    /// `mean(size) / mean(size / 2)` when half the size was also measured.
    pub ratio_vs_half: Option<f64>,
}

/// Source records for the benchmark: the first input, or a synthetic
/// dataset as large as the largest size.
pub fn bench_source(cfg: &PipelineConfig) -> Result<Dataset> {
    if cfg.inputs.is_empty() {
        let max = cfg.bench_sizes.iter().copied().max().unwrap_or(0);
        let n = cfg.bench_synthetic_records.max(max);
        let gen = GeneratorConfig {
            seed: cfg.params.seed,
            ..GeneratorConfig::default().scaled_to(n)
        };
        Ok(generate(&gen, &load_schema(cfg)?)?.0)
    } else {
        let schema = load_schema(cfg)?;
        let first = PipelineConfig {
            inputs: cfg.inputs[..1].to_vec(),
            ..cfg.clone()
        };
        load_inputs(&first, &schema)
    }
}

/// Times RecAgglo on a seeded subsample of `source` per size, averaging
/// over `bench_repeats` runs with different seeds.
pub fn bench_datasets(cfg: &PipelineConfig, source: &Dataset) -> Result<Vec<BenchRow>> {
    if cfg.bench_repeats == 0 || cfg.bench_sizes.is_empty() {
        return Err(Error::Config(
            "bench needs sizes and at least one repetition".into(),
        ));
    }
    let mut rows: Vec<BenchRow> = Vec::new();
    for &size in &cfg.bench_sizes {
        if size > source.n() || size == 0 {
            return Err(Error::TooFewElements {
                needed: size,
                found: source.n(),
            })
            .stage("bench");
        }
        let mut pick = draw_landmarks(source.n(), size, derive_seed(cfg.params.seed, size as u64));
        pick.sort_unstable();
        let data = source.subset(&pick)?;
        let metric = build_metric(cfg, resolve_weights(cfg, &data).stage("weights")?);
        let mut times = Vec::with_capacity(cfg.bench_repeats);
        for r in 0..cfg.bench_repeats {
            let params = RecAggloParams {
                seed: derive_seed(cfg.params.seed, r as u64),
                ..cfg.params
            };
            let start = Instant::now();
            with_workers(cfg.workers, || rec_agglo_all(&data, &metric, &params))
                .stage("cluster")?
                .stage("cluster")?;
            times.push(start.elapsed().as_secs_f64());
        }
        let mean_s = times.iter().sum::<f64>() / times.len() as f64;
        let ratio_vs_half = (size % 2 == 0)
            .then(|| rows.iter().find(|r| r.size == size / 2))
            .flatten()
            .map(|half| mean_s / half.mean_s);
        rows.push(BenchRow {
            size,
            repeats: cfg.bench_repeats,
            mean_s,
            min_s: times.iter().copied().fold(f64::INFINITY, f64::min),
            max_s: times.iter().copied().fold(0.0, f64::max),
            ratio_vs_half,
        });
    }
    Ok(rows)
}

/// Scaling benchmark; writes bench.csv when an output directory is set.
pub fn run_scaling_bench(cfg: &PipelineConfig) -> Result<Vec<BenchRow>> {
    cfg.validate().stage("config")?;
    let source = bench_source(cfg).stage("load")?;
    let rows = bench_datasets(cfg, &source)?;
    if let Some(dir) = output_dir(cfg).stage("write")? {
        write_bench(&rows, create(&dir.join("bench.csv"))?).stage("write")?;
    }
    Ok(rows)
}

pub fn write_bench<W: Write>(rows: &[BenchRow], writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "size,repeats,mean_s,min_s,max_s,ratio_vs_half")?;
    for r in rows {
        let ratio = r.ratio_vs_half.map_or(String::new(), |x| format!("{x:.3}"));
        writeln!(
            w,
            "{},{},{:.3},{:.3},{:.3},{ratio}",
            r.size, r.repeats, r.mean_s, r.min_s, r.max_s
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Generates a synthetic dataset and writes data.csv, ground_truth.csv and
/// schema.txt into `dir`.
pub fn run_gen(
    gen: &GeneratorConfig,
    schema: &AttributeSchema,
    dir: &Path,
) -> Result<(Dataset, CampaignGroundTruth)> {
    let (data, truth) = generate(gen, schema).stage("generate")?;
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::file(dir, e))
        .stage("write")?;
    schema::save_csv(&data, dir.join("data.csv"), "").stage("write")?;
    truth.save(&dir.join("ground_truth.csv")).stage("write")?;
    let path = dir.join("schema.txt");
    std::fs::write(&path, schema.to_text())
        .map_err(|e| Error::file(&path, e))
        .stage("write")?;
    Ok((data, truth))
}

/// Trains weights on `train_input` (or the first input) with the
/// cardinality or label strategy and writes them to `path`.
pub fn run_weights_train(
    cfg: &PipelineConfig,
    strategy: WeightStrategy,
    path: &Path,
) -> Result<(WeightVector, Option<SimpsonProfile>)> {
    let schema = load_schema(cfg).stage("load")?;
    let source = cfg
        .train_input
        .clone()
        .or_else(|| cfg.inputs.first().cloned())
        .ok_or_else(|| Error::Config("no training input given".into()))?;
    let data = schema::load_csv(&source, schema, &cfg.null_marker).stage("load")?;
    let (weights, profile) = match strategy {
        WeightStrategy::Cardinality => (cardinality_weights(&data).stage("weights")?, None),
        WeightStrategy::Label => {
            let (w, p) =
                label_weights(&data, &training_params(cfg.params.seed)).stage("weights")?;
            (w, Some(p))
        }
        other => {
            return Err(Error::Config(format!(
                "weights-train supports cardinality and label, got {}",
                other.as_str()
            )))
        }
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::file(parent, e))?;
    }
    weights.save(path, data.schema()).stage("write")?;
    Ok((weights, profile))
}

/// Per-attribute Simpson means, advantages and weights as CSV.
pub fn write_profile<W: Write>(
    profile: &SimpsonProfile,
    weights: &WeightVector,
    schema: &AttributeSchema,
    writer: W,
) -> Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(
        w,
        "attribute,category,lambda_fraud,lambda_legit,lambda_mixed,adv_fl,adv_pm,weight"
    )?;
    let opt = |v: &Option<Vec<f64>>, i: usize| {
        v.as_ref().map_or(String::new(), |v| format!("{:.6}", v[i]))
    };
    for (i, a) in schema.attributes().iter().enumerate() {
        writeln!(
            w,
            "{},{},{:.6},{},{},{:.6},{:.6},{:.6}",
            a.id,
            a.category,
            profile.mean_fraud[i],
            opt(&profile.mean_legit, i),
            opt(&profile.mean_mixed, i),
            profile.adv_fl[i],
            profile.adv_pm[i],
            weights.as_slice()[i]
        )?;
    }
    w.flush()?;
    Ok(())
}
