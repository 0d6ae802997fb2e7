//! Run configuration: one JSON file naming datasets, methods, seeds, grids
//! and provider settings. `${VAR}` anywhere in the text is replaced by the
//! environment variable before parsing.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use fsbench_core::data::DatasetManifest;
use fsbench_core::harness::EvalConfig;
use fsbench_core::llm::{MalformedKind, MockBehavior, ProviderConfig, ProviderKind};
use fsbench_core::models::DEFAULT_C_GRID;
use fsbench_core::{FitOptions, ForestParams};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::methods::MethodSpec;

pub const DEFAULT_CACHE_DIR: &str = ".fsbench-cache";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Dataset manifest files.
    pub datasets: Vec<PathBuf>,
    pub methods: Vec<String>,
    pub seeds: Vec<u64>,
    pub test_fraction: f64,
    pub c_grid: Vec<f64>,
    pub proportions: Vec<f64>,
    pub folds: usize,
    pub forest: ForestParams,
    pub fit: FitOptions,
    /// Provider definitions file; built-in mock providers need none.
    pub providers: Option<PathBuf>,
    pub output_dir: PathBuf,
    /// Exchange cache. Kept apart from results so clearing one leaves the
    /// other intact.
    pub cache_dir: PathBuf,
    pub sample_rows: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            datasets: Vec::new(),
            methods: Vec::new(),
            seeds: vec![7],
            test_fraction: 0.2,
            c_grid: DEFAULT_C_GRID.to_vec(),
            proportions: (1..=10).map(|i| i as f64 / 10.0).collect(),
            folds: 5,
            forest: ForestParams::default(),
            fit: FitOptions::default(),
            providers: None,
            output_dir: PathBuf::from("results"),
            cache_dir: PathBuf::from(DEFAULT_CACHE_DIR),
            sample_rows: fsbench_core::llm::DEFAULT_SAMPLE_ROWS,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProviderFile {
    providers: Vec<ProviderConfig>,
}

/// A validated configuration with every path resolved.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub run: RunConfig,
    pub datasets: Vec<DatasetManifest>,
    pub methods: Vec<MethodSpec>,
    pub providers: IndexMap<String, ProviderConfig>,
}

impl Loaded {
    pub fn eval_config(&self, seed: u64) -> EvalConfig {
        EvalConfig {
            folds: self.run.folds,
            c_grid: self.run.c_grid.clone(),
            proportions: self.run.proportions.clone(),
            fit: self.run.fit,
            seed,
        }
    }

    pub fn dataset(&self, name: &str) -> CliResult<&DatasetManifest> {
        self.datasets.iter().find(|d| d.name == name).ok_or_else(|| {
            let known: Vec<&str> = self.datasets.iter().map(|d| d.name.as_str()).collect();
            CliError::config(format!("unknown dataset `{name}`; configured: {}", known.join(", ")))
        })
    }

    pub fn provider(&self, name: &str) -> CliResult<&ProviderConfig> {
        self.providers.get(name).ok_or_else(|| {
            let known: Vec<&str> = self.providers.keys().map(String::as_str).collect();
            CliError::config(format!("unknown provider `{name}`; available: {}", known.join(", ")))
        })
    }

    /// Fails unless every LLM method names a usable provider.
    pub fn check_method(&self, spec: &MethodSpec) -> CliResult<()> {
        let MethodSpec::Llm { provider, .. } = spec else {
            return Ok(());
        };
        let cfg = self.provider(provider)?;
        if let ProviderKind::Http = cfg.kind {
            if cfg.endpoint.as_deref().is_none_or(str::is_empty) {
                return Err(CliError::config(format!("provider `{provider}` has no endpoint")));
            }
            if let Some(var) = &cfg.token_env {
                if std::env::var_os(var).is_none() {
                    return Err(CliError::config(format!("provider `{provider}`: token variable `{var}` is not set")));
                }
            }
        }
        Ok(())
    }
}

/// Replaces `${NAME}` with the JSON-escaped value of the variable.
pub fn interpolate(text: &str, lookup: impl Fn(&str) -> Option<String>) -> CliResult<String> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find("${") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let end = after
            .find('}')
            .ok_or_else(|| CliError::config("unterminated `${` in configuration"))?;
        let name = &after[..end];
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(CliError::config(format!("invalid variable name `{name}`")));
        }
        let value = lookup(name).ok_or_else(|| CliError::config(format!("environment variable `{name}` is not set")))?;
        let quoted = serde_json::to_string(&value).expect("strings serialize");
        out.push_str(&quoted[1..quoted.len() - 1]);
        rest = &after[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

fn read_interpolated(path: &Path) -> CliResult<String> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    interpolate(&text, |name| std::env::var(name).ok())
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Mock providers available without a providers file.
pub fn builtin_providers() -> IndexMap<String, ProviderConfig> {
    let mut out = IndexMap::new();
    out.insert("mock-rf".to_string(), ProviderConfig::mock(MockBehavior::RfOracle));
    for kind in MalformedKind::ALL {
        out.insert(
            format!("mock-malformed-{}", kind.name()),
            ProviderConfig::mock(MockBehavior::Malformed { kind }),
        );
    }
    out
}

fn check_grid(run: &RunConfig) -> CliResult<()> {
    if run.seeds.is_empty() {
        return Err(CliError::config("`seeds` is empty"));
    }
    if !(run.test_fraction > 0.0 && run.test_fraction < 1.0) {
        return Err(CliError::config(format!("`test_fraction` {} is outside (0, 1)", run.test_fraction)));
    }
    if run.c_grid.is_empty() || run.c_grid.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
        return Err(CliError::config("`c_grid` must hold positive finite values"));
    }
    if run.proportions.is_empty()
        || run.proportions.iter().any(|p| !(*p > 0.0 && *p <= 1.0))
        || run.proportions.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(CliError::config("`proportions` must be ascending values in (0, 1]"));
    }
    if run.folds < 2 {
        return Err(CliError::config("`folds` must be at least 2"));
    }
    if run.sample_rows == 0 {
        return Err(CliError::config("`sample_rows` must be positive"));
    }
    Ok(())
}

/// Parses a configuration from text. Relative paths resolve against `base`.
pub fn parse(text: &str, base: &Path) -> CliResult<Loaded> {
    let mut run: RunConfig = serde_json::from_str(text).map_err(|e| CliError::config(format!("configuration: {e}")))?;
    check_grid(&run)?;
    run.output_dir = resolve(base, &run.output_dir);
    run.cache_dir = resolve(base, &run.cache_dir);

    let mut providers = builtin_providers();
    if let Some(p) = &run.providers {
        let path = resolve(base, p);
        let file: ProviderFile = serde_json::from_str(&read_interpolated(&path)?)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        for mut cfg in file.providers {
            if let ProviderKind::Mock {
                behavior: MockBehavior::EchoFixture { path: fixture },
            } = &mut cfg.kind
            {
                *fixture = resolve(path.parent().unwrap_or(base), fixture);
            }
            providers.insert(cfg.name.clone(), cfg);
        }
    }

    let mut datasets = Vec::with_capacity(run.datasets.len());
    let mut names = HashSet::new();
    for p in &run.datasets {
        let manifest = DatasetManifest::from_file(&resolve(base, p)).map_err(|e| CliError::config(e.to_string()))?;
        if !manifest.path.is_file() {
            return Err(CliError::config(format!(
                "dataset `{}`: {} does not exist",
                manifest.name,
                manifest.path.display()
            )));
        }
        if !names.insert(manifest.name.clone()) {
            return Err(CliError::config(format!("dataset `{}` is listed twice", manifest.name)));
        }
        datasets.push(manifest);
    }

    let methods = run.methods.iter().map(|m| m.parse::<MethodSpec>()).collect::<CliResult<Vec<_>>>()?;
    let loaded = Loaded {
        run,
        datasets,
        methods,
        providers,
    };
    for m in &loaded.methods {
        loaded.check_method(m)?;
    }
    Ok(loaded)
}

pub fn load(path: &Path) -> CliResult<Loaded> {
    let text = read_interpolated(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse(&text, &base)
}
