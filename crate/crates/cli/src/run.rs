use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use fsbench_core::data::{stratified_split, DatasetManifest};
use fsbench_core::harness::{aggregate, run_curve, run_lasso_curve_with, AggregateReport, RuntimeRow};
use fsbench_core::llm::{
    llm_feature_scores, ChatProvider, ExchangeCache, HttpProvider, LlmError, LlmSelector, MockProvider, ProviderKind,
};
use fsbench_core::{Dataset, EvalCurve, FeatureScores, ForestParams, Method, Split};
use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Loaded;
use crate::error::{CliError, CliResult, ErrorKind};
use crate::methods::MethodSpec;

pub const CURVES_DIR: &str = "curves";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "report.csv";
pub const FAILURES_JSON: &str = "failures.json";
pub const TIMINGS_JSON: &str = "timings.json";

/// Scores from one selector run.
#[derive(Debug, Clone)]
pub struct MethodRun {
    pub scores: FeatureScores,
    /// Exchanges that reached a provider rather than the cache.
    pub provider_calls: usize,
}

/// Executes methods against a loaded configuration.
pub struct Runner<'a> {
    cfg: &'a Loaded,
    cache: Mutex<Option<Arc<ExchangeCache>>>,
    http: Mutex<HashMap<(String, String), Arc<dyn ChatProvider>>>,
}

impl<'a> Runner<'a> {
    pub fn new(cfg: &'a Loaded) -> Self {
        Self {
            cfg,
            cache: Mutex::new(None),
            http: Mutex::new(HashMap::new()),
        }
    }

    fn cache(&self) -> CliResult<Arc<ExchangeCache>> {
        let mut slot = self.cache.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(c) = slot.as_ref() {
            return Ok(c.clone());
        }
        let c = Arc::new(ExchangeCache::open(&self.cfg.run.cache_dir)?);
        *slot = Some(c.clone());
        Ok(c)
    }

    fn forest(&self, seed: u64) -> ForestParams {
        ForestParams { seed, ..self.cfg.run.forest }
    }

    pub fn select(&self, spec: &MethodSpec, ds: &Dataset, split: &Split, seed: u64) -> CliResult<MethodRun> {
        match spec {
            MethodSpec::Classical(m) => Ok(MethodRun {
                scores: m.run(ds, split, seed, &self.forest(seed))?,
                provider_calls: 0,
            }),
            MethodSpec::Llm { provider, model, pipeline } => {
                let mut pc = self.cfg.provider(provider)?.clone();
                if let Some(m) = model {
                    pc.model = m.clone();
                }
                let backend: Arc<dyn ChatProvider> = match &pc.kind {
                    ProviderKind::Mock { behavior } => Arc::new(
                        MockProvider::new(behavior.clone(), ds, split, self.forest(seed)).map_err(LlmError::from)?,
                    ),
                    ProviderKind::Http => {
                        let mut shared = self.http.lock().unwrap_or_else(|p| p.into_inner());
                        match shared.get(&(pc.name.clone(), pc.model.clone())) {
                            Some(p) => p.clone(),
                            None => {
                                let p: Arc<dyn ChatProvider> =
                                    Arc::new(HttpProvider::new(&pc).map_err(LlmError::from)?);
                                shared.insert((pc.name.clone(), pc.model.clone()), p.clone());
                                p
                            }
                        }
                    }
                };
                let mut selector = LlmSelector::new(pc, backend, Some(self.cache()?));
                selector.sample_rows = self.cfg.run.sample_rows;
                let run = llm_feature_scores(&selector, ds, split, *pipeline, seed)?;
                Ok(MethodRun {
                    scores: run.scores,
                    provider_calls: run.provider_calls,
                })
            }
        }
    }

    /// Selector run plus its downstream curve. LASSO is evaluated with an
    /// L1 downstream model, every other method with L2.
    pub fn curve(&self, spec: &MethodSpec, ds: &Dataset, split: &Split, seed: u64) -> CliResult<(EvalCurve, usize)> {
        let run = self.select(spec, ds, split, seed)?;
        let eval = self.cfg.eval_config(seed);
        let curve = match spec {
            MethodSpec::Classical(Method::Lasso) => run_lasso_curve_with(ds, split, &run.scores, &eval)?,
            _ => run_curve(ds, split, &run.scores, &eval)?,
        };
        Ok((curve, run.provider_calls))
    }
}

pub fn load_dataset(manifest: &DatasetManifest) -> CliResult<Dataset> {
    Ok(manifest.load()?)
}

/// File-name-safe form of a label.
pub fn slug(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect()
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::evaluation(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

pub(crate) fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::config(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

/// Runs one selector and writes its scores. Returns the written path.
pub fn cmd_select(
    cfg: &Loaded,
    method: &str,
    dataset: &str,
    seed: Option<u64>,
    out: Option<&Path>,
) -> CliResult<PathBuf> {
    let spec: MethodSpec = method.parse()?;
    cfg.check_method(&spec)?;
    let manifest = cfg.dataset(dataset)?;
    let seed = seed.unwrap_or(cfg.run.seeds[0]);
    let ds = load_dataset(manifest)?;
    let split = stratified_split(&ds, cfg.run.test_fraction, seed)?;
    let run = Runner::new(cfg).select(&spec, &ds, &split, seed)?;
    let path = out.map(Path::to_path_buf).unwrap_or_else(|| {
        cfg.run
            .output_dir
            .join("selections")
            .join(format!("{}__{}__seed{seed}.json", slug(&manifest.name), slug(&run.scores.method)))
    });
    write_json(&path, &run.scores)?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub method: String,
    pub dataset: String,
    pub seed: u64,
    pub kind: ErrorKind,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellTiming {
    pub method: String,
    pub dataset: String,
    pub seed: u64,
    pub selector_runtime_seconds: f64,
    pub eval_runtime_seconds: f64,
    pub provider_calls: usize,
}

/// Wall-clock and provider-call accounting; varies between runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub cells: Vec<CellTiming>,
    /// Mean AUROC against total selector runtime, per method.
    pub runtime: Vec<RuntimeRow>,
    pub provider_calls: usize,
}

#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub out_dir: PathBuf,
    pub curves: Vec<EvalCurve>,
    pub failures: Vec<CellFailure>,
    pub report: Option<AggregateReport>,
    pub provider_calls: usize,
}

/// Averages the curves of each (method, dataset) pair over seeds. Selected
/// sets and the chosen C come from the first seed.
pub fn mean_over_seeds(curves: &[EvalCurve]) -> Vec<EvalCurve> {
    let mut groups: IndexMap<(String, String), Vec<&EvalCurve>> = IndexMap::new();
    for c in curves {
        groups.entry((c.method.clone(), c.dataset.clone())).or_default().push(c);
    }
    groups
        .into_values()
        .map(|g| {
            let mut mean = g[0].clone();
            if g.len() > 1 {
                let n = g.len() as f64;
                for (i, p) in mean.points.iter_mut().enumerate() {
                    p.auroc = g.iter().map(|c| c.points[i].auroc).sum::<f64>() / n;
                }
                mean.selector_runtime_seconds = g.iter().map(|c| c.selector_runtime_seconds).sum::<f64>() / n;
                mean.eval_runtime_seconds = g.iter().map(|c| c.eval_runtime_seconds).sum::<f64>() / n;
            }
            mean
        })
        .collect()
}

fn clear_json(dir: &Path) -> CliResult<()> {
    let Ok(entries) = fs::read_dir(dir) else {
        return Ok(());
    };
    for e in entries.flatten() {
        let p = e.path();
        if p.extension().is_some_and(|x| x == "json") {
            fs::remove_file(&p).map_err(|e| CliError::config(format!("{}: {e}", p.display())))?;
        }
    }
    Ok(())
}

/// Every configured (method, dataset, seed) cell, its curve files, the
/// aggregate report, failures and timings. Fails with the class of the
/// first failed cell after writing everything that succeeded.
pub fn cmd_bench(cfg: &Loaded, out: Option<&Path>) -> CliResult<BenchOutcome> {
    if cfg.methods.is_empty() || cfg.datasets.is_empty() {
        return Err(CliError::config("configuration lists no methods or no datasets"));
    }
    let out_dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.run.output_dir.clone());
    let datasets = cfg.datasets.iter().map(load_dataset).collect::<CliResult<Vec<_>>>()?;
    let mut splits = Vec::new();
    for &seed in &cfg.run.seeds {
        for ds in &datasets {
            splits.push((seed, ds, stratified_split(ds, cfg.run.test_fraction, seed)?));
        }
    }
    let cells: Vec<(u64, &Dataset, &Split, &MethodSpec)> = splits
        .iter()
        .flat_map(|(seed, ds, split)| cfg.methods.iter().map(move |m| (*seed, *ds, split, m)))
        .collect();

    let runner = Runner::new(cfg);
    let results: Vec<CliResult<(EvalCurve, usize)>> = cells
        .par_iter()
        .map(|&(seed, ds, split, spec)| {
            tracing::info!(method = %spec, dataset = ds.name(), seed, "running");
            runner.curve(spec, ds, split, seed)
        })
        .collect();

    let curves_dir = out_dir.join(CURVES_DIR);
    clear_json(&curves_dir)?;
    let mut curves = Vec::new();
    let mut failures = Vec::new();
    let mut timings = Vec::new();
    let mut provider_calls = 0;
    for ((seed, ds, _, spec), result) in cells.iter().zip(results) {
        match result {
            Ok((curve, calls)) => {
                let name = format!("{}__{}__seed{seed}.json", slug(&curve.dataset), slug(&curve.method));
                write_json(&curves_dir.join(name), &curve)?;
                timings.push(CellTiming {
                    method: curve.method.clone(),
                    dataset: curve.dataset.clone(),
                    seed: *seed,
                    selector_runtime_seconds: curve.selector_runtime_seconds,
                    eval_runtime_seconds: curve.eval_runtime_seconds,
                    provider_calls: calls,
                });
                provider_calls += calls;
                curves.push(curve);
            }
            Err(e) => {
                tracing::error!(method = %spec, dataset = ds.name(), seed, "{e}");
                failures.push(CellFailure {
                    method: spec.to_string(),
                    dataset: ds.name().to_string(),
                    seed: *seed,
                    kind: e.kind,
                    message: e.message,
                });
            }
        }
    }
    write_json(&out_dir.join(FAILURES_JSON), &failures)?;

    let report = if curves.is_empty() {
        for p in [REPORT_JSON, REPORT_CSV] {
            let _ = fs::remove_file(out_dir.join(p));
        }
        None
    } else {
        let report = aggregate(&mean_over_seeds(&curves))?;
        write_json(&out_dir.join(REPORT_JSON), &report)?;
        write_text(&out_dir.join(REPORT_CSV), &report.to_csv())?;
        Some(report)
    };
    write_json(
        &out_dir.join(TIMINGS_JSON),
        &Timings {
            cells: timings,
            runtime: report.as_ref().map(|r| r.runtime.clone()).unwrap_or_default(),
            provider_calls,
        },
    )?;

    if let Some(first) = failures.first() {
        return Err(CliError::new(
            first.kind,
            format!(
                "{} of {} cells failed (first: {} on {}: {}); see {}",
                failures.len(),
                cells.len(),
                first.method,
                first.dataset,
                first.message,
                out_dir.join(FAILURES_JSON).display()
            ),
        ));
    }
    Ok(BenchOutcome {
        out_dir,
        curves,
        failures,
        report,
        provider_calls,
    })
}

/// One line per cached exchange.
pub fn cmd_cache_ls(cache_dir: &Path) -> CliResult<Vec<String>> {
    let cache = ExchangeCache::open(cache_dir)?;
    Ok(cache
        .list()?
        .into_iter()
        .map(|s| {
            format!(
                "{}\t{}\t{}\t{}\t{}\t{:.3}s",
                s.key,
                s.provider,
                s.model,
                s.kind,
                if s.valid { "valid" } else { "invalid" },
                s.latency_seconds
            )
        })
        .collect())
}

pub fn cmd_cache_clear(cache_dir: &Path) -> CliResult<usize> {
    Ok(ExchangeCache::open(cache_dir)?.clear()?)
}
