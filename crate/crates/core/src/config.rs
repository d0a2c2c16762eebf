//! Application configuration: a TOML file, then `ARTCTX_*` environment
//! variables, then command-line flags, each layer overriding the previous.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateway::{BackendKind, GatewayConfig};
use crate::generate::GenerationConfig;
use crate::metrics::MetricConfig;
use crate::retriever::RetrieverConfig;

/// Environment variable naming the config file.
pub const CONFIG_ENV: &str = "ARTCTX_CONFIG";
pub const DEFAULT_BIND: &str = "127.0.0.1:8080";

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub graph: Option<PathBuf>,
    pub index: Option<PathBuf>,
    /// Directory whose `extraction.txt`, `concepts.txt`, ... replace the
    /// bundled prompts.
    pub prompts: Option<PathBuf>,
    /// Explanation template (TOML).
    pub template: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub bind: String,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind: DEFAULT_BIND.to_owned(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub gateway: GatewayConfig,
    pub retriever: RetrieverConfig,
    pub generation: GenerationConfig,
    pub metrics: MetricConfig,
    pub paths: PathsConfig,
    pub service: ServiceConfig,
}

/// Values that may come from the environment or from flags. `None` leaves
/// the lower layer untouched.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub graph: Option<PathBuf>,
    pub index: Option<PathBuf>,
    pub prompts: Option<PathBuf>,
    pub template: Option<PathBuf>,
    pub backend: Option<BackendKind>,
    pub endpoint: Option<String>,
    pub mock_fixtures: Option<PathBuf>,
    pub k_coarse: Option<usize>,
    pub k: Option<usize>,
    pub m: Option<usize>,
    pub lambda: Option<f64>,
    pub n_concepts: Option<usize>,
    pub bind: Option<String>,
}

fn parse_env<T: std::str::FromStr>(name: &str, value: Option<String>) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    value
        .map(|v| {
            v.trim()
                .parse::<T>()
                .map_err(|e| Error::Config(format!("{name}={v:?}: {e}")))
        })
        .transpose()
}

impl Overrides {
    /// Reads `ARTCTX_GRAPH`, `ARTCTX_INDEX`, `ARTCTX_PROMPTS`,
    /// `ARTCTX_TEMPLATE`, `ARTCTX_BACKEND`, `ARTCTX_ENDPOINT`,
    /// `ARTCTX_MOCK_FIXTURES`, `ARTCTX_K_COARSE`, `ARTCTX_K`, `ARTCTX_M`,
    /// `ARTCTX_LAMBDA`, `ARTCTX_CONCEPTS` and `ARTCTX_BIND`.
    pub fn from_env_with(get: impl Fn(&str) -> Option<String>) -> Result<Self> {
        let var = |suffix: &str| {
            let name = format!("ARTCTX_{suffix}");
            let value = get(&name).filter(|v| !v.trim().is_empty());
            (name, value)
        };
        let path = |suffix: &str| var(suffix).1.map(PathBuf::from);
        let backend = match var("BACKEND") {
            (_, None) => None,
            (name, Some(v)) => Some(match v.trim().to_ascii_lowercase().as_str() {
                "mock" => BackendKind::Mock,
                "remote" => BackendKind::Remote,
                other => return Err(Error::Config(format!("{name}={other:?}: expected mock or remote"))),
            }),
        };
        let (n, v) = var("K_COARSE");
        let k_coarse = parse_env(&n, v)?;
        let (n, v) = var("K");
        let k = parse_env(&n, v)?;
        let (n, v) = var("M");
        let m = parse_env(&n, v)?;
        let (n, v) = var("LAMBDA");
        let lambda = parse_env(&n, v)?;
        let (n, v) = var("CONCEPTS");
        let n_concepts = parse_env(&n, v)?;
        Ok(Overrides {
            graph: path("GRAPH"),
            index: path("INDEX"),
            prompts: path("PROMPTS"),
            template: path("TEMPLATE"),
            backend,
            endpoint: var("ENDPOINT").1,
            mock_fixtures: path("MOCK_FIXTURES"),
            k_coarse,
            k,
            m,
            lambda,
            n_concepts,
            bind: var("BIND").1,
        })
    }

    pub fn from_env() -> Result<Self> {
        Overrides::from_env_with(|k| std::env::var(k).ok())
    }

    pub fn apply(&self, config: &mut AppConfig) {
        fn set<T: Clone>(slot: &mut T, value: &Option<T>) {
            if let Some(v) = value {
                *slot = v.clone();
            }
        }
        fn set_opt<T: Clone>(slot: &mut Option<T>, value: &Option<T>) {
            if value.is_some() {
                slot.clone_from(value);
            }
        }
        set_opt(&mut config.paths.graph, &self.graph);
        set_opt(&mut config.paths.index, &self.index);
        set_opt(&mut config.paths.prompts, &self.prompts);
        set_opt(&mut config.paths.template, &self.template);
        set(&mut config.gateway.backend, &self.backend);
        set_opt(&mut config.gateway.endpoint, &self.endpoint);
        set_opt(&mut config.gateway.mock_fixtures, &self.mock_fixtures);
        set(&mut config.retriever.k_coarse, &self.k_coarse);
        set(&mut config.retriever.k, &self.k);
        set(&mut config.retriever.m, &self.m);
        set(&mut config.retriever.lambda, &self.lambda);
        set(&mut config.retriever.n_concepts, &self.n_concepts);
        set(&mut config.service.bind, &self.bind);
    }
}

impl AppConfig {
    /// Parses TOML; relative paths resolve against `base`.
    pub fn from_toml(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut config: AppConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(base) = base {
            let fix = |p: &mut Option<PathBuf>| {
                if let Some(path) = p {
                    if path.is_relative() {
                        *path = base.join(&*path);
                    }
                }
            };
            fix(&mut config.paths.graph);
            fix(&mut config.paths.index);
            fix(&mut config.paths.prompts);
            fix(&mut config.paths.template);
            fix(&mut config.gateway.mock_fixtures);
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        AppConfig::from_toml(&text, path.parent()).map_err(|e| e.context(format!("config {}", path.display())))
    }

    /// File (explicit path, else `ARTCTX_CONFIG`, else defaults), then
    /// environment, then flags. The result is validated.
    pub fn resolve_with(
        file: Option<&Path>,
        get_env: impl Fn(&str) -> Option<String>,
        flags: &Overrides,
    ) -> Result<Self> {
        let env_file = get_env(CONFIG_ENV).filter(|v| !v.trim().is_empty()).map(PathBuf::from);
        let mut config = match file.map(Path::to_path_buf).or(env_file) {
            Some(path) => AppConfig::load(&path)?,
            None => AppConfig::default(),
        };
        Overrides::from_env_with(&get_env)?.apply(&mut config);
        flags.apply(&mut config);
        config.validate()?;
        Ok(config)
    }

    pub fn resolve(file: Option<&Path>, flags: &Overrides) -> Result<Self> {
        AppConfig::resolve_with(file, |k| std::env::var(k).ok(), flags)
    }

    pub fn validate(&self) -> Result<()> {
        self.gateway.validate()?;
        self.retriever
            .validate()
            .map_err(|e| Error::Config(format!("retriever: {e}")))?;
        if !(self.metrics.beta > 0.0 && self.metrics.beta.is_finite()) {
            return Err(Error::Config("metrics.beta must be positive".into()));
        }
        if self.generation.prompt_char_budget == 0 {
            return Err(Error::Config("generation.prompt_char_budget must be positive".into()));
        }
        Ok(())
    }

    pub fn graph_path(&self) -> Result<&Path> {
        self.paths
            .graph
            .as_deref()
            .ok_or_else(|| Error::Config("no graph path: pass --graph, set ARTCTX_GRAPH or paths.graph".into()))
    }

    pub fn index_path(&self) -> Result<&Path> {
        self.paths
            .index
            .as_deref()
            .ok_or_else(|| Error::Config("no index path: pass --index, set ARTCTX_INDEX or paths.index".into()))
    }
}
