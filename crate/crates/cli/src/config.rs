//! Settings file plus environment overrides.
//!
//! Precedence: command-line flag, then environment, then the file, then
//! built-in defaults.

use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use pmr_core::llm::{GenerationConfig, TemplateSet, BUILTIN_VERSION};
use pmr_core::metrics::{Backend, BpeTokenizer, EmbeddingClient, MatcherConfig, TokenizerSpec};

pub const ENV_API_BASE: &str = "PMRKIT_API_BASE";
pub const ENV_API_KEY: &str = "PMRKIT_API_KEY";
pub const ENV_MODEL: &str = "PMRKIT_MODEL";
pub const ENV_EMBEDDING_URL: &str = "PMRKIT_EMBEDDING_URL";
pub const ENV_EMBEDDING_TOKEN: &str = "PMRKIT_EMBEDDING_TOKEN";
pub const ENV_CONFIG: &str = "PMRKIT_CONFIG";

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub generation: GenerationSection,
    #[serde(default)]
    pub matcher: MatcherSection,
    #[serde(default)]
    pub tokenizer: TokenizerSection,
    #[serde(default)]
    pub templates: TemplateSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationSection {
    pub api_base: Option<String>,
    pub api_key: Option<String>,
    pub model: Option<String>,
    pub temperature: Option<f64>,
    pub top_p: Option<f64>,
    pub top_k: Option<u32>,
    pub max_tokens: Option<u32>,
    pub max_attempts: Option<u32>,
    pub timeout_secs: Option<u64>,
    pub backoff_ms: Option<u64>,
    pub max_in_flight: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatcherSection {
    pub backend: Option<String>,
    pub threshold: Option<f64>,
    pub embedding_url: Option<String>,
    pub embedding_token: Option<String>,
    pub batch_size: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TokenizerSection {
    /// Path to a `merges.txt` table; heuristic counting without one.
    pub merges: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateSection {
    pub dir: Option<PathBuf>,
    pub version: Option<String>,
}

/// Reads the environment; swapped out in tests.
pub trait Env {
    fn var(&self, key: &str) -> Option<String>;
}

pub struct ProcessEnv;

impl Env for ProcessEnv {
    fn var(&self, key: &str) -> Option<String> {
        std::env::var(key).ok().filter(|v| !v.is_empty())
    }
}

impl FileConfig {
    /// `explicit`, else `$PMRKIT_CONFIG`, else `./pmrkit.toml` when present.
    pub fn locate(explicit: Option<&Path>, env: &dyn Env) -> Result<FileConfig> {
        let path = match explicit {
            Some(p) => Some(p.to_path_buf()),
            None => env.var(ENV_CONFIG).map(PathBuf::from).or_else(|| {
                let p = PathBuf::from("pmrkit.toml");
                p.is_file().then_some(p)
            }),
        };
        match path {
            None => Ok(FileConfig::default()),
            Some(p) => {
                let text =
                    std::fs::read_to_string(&p).with_context(|| format!("cannot read config {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("invalid config {}", p.display()))
            }
        }
    }

    pub fn generation(&self, env: &dyn Env) -> GenerationConfig {
        let g = &self.generation;
        let d = GenerationConfig::default();
        GenerationConfig {
            api_base: env.var(ENV_API_BASE).or_else(|| g.api_base.clone()).unwrap_or_default(),
            api_key: env.var(ENV_API_KEY).or_else(|| g.api_key.clone()),
            model: env.var(ENV_MODEL).or_else(|| g.model.clone()).unwrap_or_default(),
            temperature: g.temperature.unwrap_or(d.temperature),
            top_p: g.top_p.unwrap_or(d.top_p),
            top_k: g.top_k,
            max_tokens: g.max_tokens,
            max_attempts: g.max_attempts.unwrap_or(d.max_attempts),
            timeout: g.timeout_secs.map_or(d.timeout, Duration::from_secs),
            backoff: g.backoff_ms.map_or(d.backoff, Duration::from_millis),
        }
    }

    pub fn max_in_flight(&self) -> usize {
        self.generation.max_in_flight.unwrap_or(4)
    }

    pub fn matcher(&self, env: &dyn Env, backend: Option<&str>, threshold: Option<f64>) -> Result<MatcherConfig> {
        let m = &self.matcher;
        let name = backend.map(str::to_string).or_else(|| m.backend.clone()).unwrap_or_else(|| "lexical".into());
        let backend = match name.as_str() {
            "exact" => Backend::Exact,
            "lexical" => Backend::Lexical,
            "embedding" => {
                let Some(url) = env.var(ENV_EMBEDDING_URL).or_else(|| m.embedding_url.clone()) else {
                    bail!("the embedding backend needs {ENV_EMBEDDING_URL} or matcher.embedding_url");
                };
                let mut c =
                    EmbeddingClient::new(url, env.var(ENV_EMBEDDING_TOKEN).or_else(|| m.embedding_token.clone()));
                if let Some(b) = m.batch_size {
                    c.batch_size = b;
                }
                Backend::Embedding(c)
            }
            other => bail!("unknown matcher backend `{other}` (exact, lexical or embedding)"),
        };
        Ok(MatcherConfig::new(threshold.or(m.threshold).unwrap_or(0.7), backend)?)
    }

    pub fn tokenizer(&self, merges: Option<&Path>) -> Result<TokenizerSpec> {
        match merges.or(self.tokenizer.merges.as_deref()) {
            None => Ok(TokenizerSpec::Heuristic),
            Some(p) => Ok(TokenizerSpec::Bpe(BpeTokenizer::load(p)?)),
        }
    }

    pub fn templates(&self, dir: Option<&Path>, version: Option<&str>) -> Result<TemplateSet> {
        let version = version.or(self.templates.version.as_deref()).unwrap_or(BUILTIN_VERSION);
        match dir.or(self.templates.dir.as_deref()) {
            Some(d) => Ok(TemplateSet::load(d, version)?),
            None if version == BUILTIN_VERSION => Ok(TemplateSet::builtin()),
            None => bail!("template version `{version}` needs a template directory"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    struct MapEnv(HashMap<&'static str, &'static str>);

    impl Env for MapEnv {
        fn var(&self, key: &str) -> Option<String> {
            self.0.get(key).map(|v| v.to_string())
        }
    }

    #[test]
    fn environment_overrides_file() {
        let cfg: FileConfig =
            toml::from_str("[generation]\napi_base = \"http://file\"\nmodel = \"file-model\"\ntemperature = 0.5\n")
                .unwrap();
        let env = MapEnv(HashMap::from([(ENV_MODEL, "env-model"), (ENV_API_KEY, "k")]));
        let g = cfg.generation(&env);
        assert_eq!((g.api_base.as_str(), g.model.as_str(), g.temperature), ("http://file", "env-model", 0.5));
        assert_eq!(g.api_key.as_deref(), Some("k"));
        assert_eq!(g.top_p, 0.95);
    }

    #[test]
    fn matcher_selection() {
        let cfg = FileConfig::default();
        let env = MapEnv(HashMap::new());
        assert_eq!(cfg.matcher(&env, None, None).unwrap().backend.name(), "lexical");
        assert!(cfg.matcher(&env, Some("embedding"), None).is_err());
        assert!(cfg.matcher(&env, Some("fuzzy"), None).is_err());
        assert!(cfg.matcher(&env, Some("exact"), Some(1.2)).is_err());
        assert!(toml::from_str::<FileConfig>("[matcher]\nthresh = 1\n").is_err());
    }
}
