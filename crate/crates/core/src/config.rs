//! Flat `key = value` run configuration.
//!
//! Grammar: one `key = value` pair per line; blank lines and lines starting
//! with `#` are ignored; later assignments override earlier ones. Keys are
//! case-sensitive. The resolved configuration is echoed back in the same
//! grammar, so an echo can be fed to `--config` to reproduce a run.

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::fit::FitMethod;
use crate::ingest::{IngestMetric, IngestMode};
use crate::model::{ModelParams, ResponseCurve};
use crate::sim::{Metric, DEFAULT_MAX_AGENTS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {reason}")]
    InvalidValue { key: String, reason: String },
}

pub const KNOWN_KEYS: &[&str] = &[
    "p_l0",
    "p_d0",
    "p_r0",
    "p_s",
    "p_ref0",
    "E0",
    "T_max",
    "phi.variant",
    "phi.c",
    "phi.a",
    "extended_reactions",
    "seed",
    "replicates",
    "horizon",
    "max_agents",
    "flow",
    "metric",
    "method",
    "enum",
    "lifetime",
    "mode",
    "store",
    "bin_width",
    "out",
];

/// Ordered key-value assignments before resolution.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: Vec<(String, String)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut kv = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                text: line.to_string(),
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    text: line.to_string(),
                });
            }
            kv.set(key, value.trim())?;
        }
        Ok(kv)
    }

    /// Parses a `key=value` override.
    pub fn parse_assignment(s: &str) -> Result<(String, String), ConfigError> {
        let (k, v) = s.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: 0,
            text: s.to_string(),
        })?;
        Ok((k.trim().to_string(), v.trim().to_string()))
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey(key.to_string()));
        }
        self.entries.retain(|(k, _)| k != key);
        self.entries.push((key.to_string(), value.to_string()));
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.parse::<T>().map_err(|e| ConfigError::InvalidValue {
                    key: key.to_string(),
                    reason: format!("`{v}`: {e}"),
                })
            })
            .transpose()
    }
}

/// Everything a subcommand needs, resolved from defaults, config file and
/// overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    pub seed: u64,
    pub replicates: usize,
    pub horizon: u32,
    pub max_agents: usize,
    pub flow: bool,
    pub metric: Metric,
    pub method: FitMethod,
    pub enumerate: bool,
    pub lifetime: bool,
    pub mode: IngestMode,
    pub store: Option<PathBuf>,
    pub bin_width: f64,
    pub out: PathBuf,
}

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_REPLICATES: usize = 10_000;
pub const DEFAULT_HORIZON: u32 = 100;

impl Default for RunConfig {
    fn default() -> Self {
        Self::resolve(&KeyValues::default()).expect("defaults are valid")
    }
}

impl RunConfig {
    pub fn resolve(kv: &KeyValues) -> Result<Self, ConfigError> {
        let invalid = |key: &str, reason: String| ConfigError::InvalidValue {
            key: key.to_string(),
            reason,
        };

        let e0: u64 = kv.parsed("E0")?.unwrap_or(3);
        let c: Option<f64> = kv.parsed("phi.c")?;
        let a: Option<f64> = kv.parsed("phi.a")?;
        let variant = kv.get("phi.variant").unwrap_or("saturating");
        let phi = match variant {
            "saturating" => ResponseCurve::saturating(c.unwrap_or(e0 as f64)),
            "linear_capped" => ResponseCurve::linear_capped(c.unwrap_or(e0 as f64)),
            "constant" => ResponseCurve::constant(a.unwrap_or(1.0)),
            other => {
                return Err(invalid(
                    "phi.variant",
                    format!("`{other}` is not one of saturating, linear_capped, constant"),
                ))
            }
        }
        .map_err(|e| {
            let key = if variant == "constant" { "phi.a" } else { "phi.c" };
            invalid(key, e.to_string())
        })?;

        let params = ModelParams {
            p_l0: kv.parsed("p_l0")?.unwrap_or(0.3),
            p_d0: kv.parsed("p_d0")?.unwrap_or(0.0),
            p_r0: kv.parsed("p_r0")?.unwrap_or(0.2),
            p_s: kv.parsed("p_s")?.unwrap_or(0.0),
            e0,
            t_max: kv.parsed("T_max")?.unwrap_or(20),
            phi,
            extended_reactions: kv.parsed("extended_reactions")?.unwrap_or(false),
            p_ref0: kv.parsed("p_ref0")?,
        };
        params.validate().map_err(|e| match e {
            crate::error::ModelError::InvalidParameter { key, reason } => invalid(key, reason),
            other => invalid("params", other.to_string()),
        })?;

        let replicates: usize = kv.parsed("replicates")?.unwrap_or(DEFAULT_REPLICATES);
        if replicates == 0 {
            return Err(invalid("replicates", "must be >= 1".into()));
        }
        let horizon: u32 = kv.parsed("horizon")?.unwrap_or(DEFAULT_HORIZON);
        if horizon == 0 {
            return Err(invalid("horizon", "must be >= 1".into()));
        }
        let max_agents: usize = kv.parsed("max_agents")?.unwrap_or(DEFAULT_MAX_AGENTS);
        if max_agents == 0 {
            return Err(invalid("max_agents", "must be >= 1".into()));
        }
        let bin_width: f64 = kv.parsed("bin_width")?.unwrap_or(1.0);
        if !(bin_width.is_finite() && bin_width > 0.0) {
            return Err(invalid("bin_width", "must be > 0".into()));
        }

        Ok(Self {
            params,
            seed: kv.parsed("seed")?.unwrap_or(DEFAULT_SEED),
            replicates,
            horizon,
            max_agents,
            flow: kv.parsed("flow")?.unwrap_or(false),
            metric: kv.parsed("metric")?.unwrap_or(Metric::Likes),
            method: kv.parsed("method")?.unwrap_or(FitMethod::LeastSquares),
            enumerate: kv.parsed("enum")?.unwrap_or(false),
            lifetime: kv.parsed("lifetime")?.unwrap_or(false),
            mode: kv.parsed("mode")?.unwrap_or(IngestMode::Increments),
            store: kv.get("store").map(PathBuf::from),
            bin_width,
            out: kv.get("out").map_or_else(|| PathBuf::from("out"), PathBuf::from),
        })
    }

    pub fn ingest_metric(&self) -> Result<IngestMetric, ConfigError> {
        match self.metric {
            Metric::Likes => Ok(IngestMetric::Likes),
            Metric::Reposts => Ok(IngestMetric::Retweets),
            Metric::Lifetime => Err(ConfigError::InvalidValue {
                key: "metric".into(),
                reason: "ingest supports likes or reposts".into(),
            }),
        }
    }

    /// The resolved configuration in the flat grammar.
    pub fn echo(&self) -> String {
        let p = &self.params;
        let mut s = String::new();
        let mut put = |k: &str, v: &dyn fmt::Display| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("p_l0", &p.p_l0);
        put("p_d0", &p.p_d0);
        put("p_r0", &p.p_r0);
        put("p_s", &p.p_s);
        if let Some(r) = p.p_ref0 {
            put("p_ref0", &r);
        }
        put("E0", &p.e0);
        put("T_max", &p.t_max);
        put("phi.variant", &p.phi.variant_name());
        match p.phi {
            ResponseCurve::Saturating { c } | ResponseCurve::LinearCapped { c } => put("phi.c", &c),
            ResponseCurve::Constant { a } => put("phi.a", &a),
        }
        put("extended_reactions", &p.extended_reactions);
        put("seed", &self.seed);
        put("replicates", &self.replicates);
        put("horizon", &self.horizon);
        put("max_agents", &self.max_agents);
        put("flow", &self.flow);
        put("metric", &self.metric);
        put("method", &self.method);
        put("enum", &self.enumerate);
        put("lifetime", &self.lifetime);
        put("mode", &self.mode);
        if let Some(store) = &self.store {
            put("store", &store.display());
        }
        put("bin_width", &self.bin_width);
        put("out", &self.out.display());
        s
    }
}
