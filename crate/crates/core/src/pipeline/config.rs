use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Duration;

use serde::Serialize;

use crate::distractor::{JudgmentMode, SelectionConfig};
use crate::gateway::LiveConfig;
use crate::stem::StemConstraints;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportKind {
    Live,
    Replay,
}

impl FromStr for TransportKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "live" => Ok(TransportKind::Live),
            "replay" => Ok(TransportKind::Replay),
            other => Err(ConfigError(format!(
                "transport must be `live` or `replay`, got `{other}`"
            ))),
        }
    }
}

impl fmt::Display for TransportKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransportKind::Live => "live",
            TransportKind::Replay => "replay",
        })
    }
}

/// Everything a generation run needs. Every field can be set from a
/// `key=value` config file or the matching command-line flag, see
/// [`RunConfig::KEYS`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub wordlist_path: PathBuf,
    pub item_threshold: usize,
    pub seed: u64,
    pub stem_constraints: StemConstraints,
    pub stem_attempts: usize,
    pub stem_temperature: f64,
    pub stem_check: bool,
    pub selection: SelectionConfig,
    pub transport: TransportKind,
    pub transcript_path: Option<PathBuf>,
    pub record_path: Option<PathBuf>,
    pub output_path: PathBuf,
    pub log_path: PathBuf,
    pub parallelism: usize,
    pub no_timestamps: bool,
    pub live: LiveConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            wordlist_path: PathBuf::from("word_groups.csv"),
            item_threshold: 60,
            seed: 0,
            stem_constraints: StemConstraints::default(),
            stem_attempts: 3,
            stem_temperature: 0.7,
            stem_check: false,
            selection: SelectionConfig::default(),
            transport: TransportKind::Live,
            transcript_path: None,
            record_path: None,
            output_path: PathBuf::from("items.csv"),
            log_path: PathBuf::from("log.csv"),
            parallelism: 1,
            no_timestamps: false,
            live: LiveConfig::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .parse()
        .map_err(|_| ConfigError(format!("invalid value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(ConfigError(format!(
            "invalid boolean `{value}` for `{key}`"
        ))),
    }
}

impl RunConfig {
    pub const KEYS: [&'static str; 23] = [
        "wordlist",
        "threshold",
        "seed",
        "max_words",
        "domain",
        "forbid_initial",
        "stem_attempts",
        "stem_temperature",
        "stem_check",
        "pool_size",
        "max_rounds",
        "judgment_mode",
        "transport",
        "transcript",
        "record",
        "output",
        "log",
        "parallelism",
        "no_timestamps",
        "endpoint",
        "model",
        "api_key_var",
        "timeout_secs",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        match key {
            "wordlist" => self.wordlist_path = value.into(),
            "threshold" => self.item_threshold = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "max_words" => self.stem_constraints.max_words = parse(key, value)?,
            "domain" => self.stem_constraints.domain_label = value.to_string(),
            "forbid_initial" => {
                self.stem_constraints.forbid_initial_position = parse_bool(key, value)?
            }
            "stem_attempts" => self.stem_attempts = parse(key, value)?,
            "stem_temperature" => self.stem_temperature = parse(key, value)?,
            "stem_check" => self.stem_check = parse_bool(key, value)?,
            "pool_size" => self.selection.pool_size = parse(key, value)?,
            "max_rounds" => self.selection.max_rounds = parse(key, value)?,
            "judgment_mode" => {
                self.selection.mode = match value {
                    "batch" => JudgmentMode::Batch,
                    "sentence" => JudgmentMode::WholeSentence,
                    _ => {
                        return Err(ConfigError(format!(
                            "judgment_mode must be `batch` or `sentence`, got `{value}`"
                        )))
                    }
                }
            }
            "transport" => self.transport = value.parse()?,
            "transcript" => self.transcript_path = Some(value.into()),
            "record" => self.record_path = Some(value.into()),
            "output" => self.output_path = value.into(),
            "log" => self.log_path = value.into(),
            "parallelism" => self.parallelism = parse(key, value)?,
            "no_timestamps" => self.no_timestamps = parse_bool(key, value)?,
            "endpoint" => self.live.endpoint = value.to_string(),
            "model" => self.live.model = value.to_string(),
            "api_key_var" => self.live.api_key_var = value.to_string(),
            "timeout_secs" => self.live.timeout = Duration::from_secs(parse(key, value)?),
            _ => return Err(ConfigError(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Applies a `key=value` file. Blank lines and `#` comments are skipped.
    pub fn apply_file_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ConfigError(format!("config line {}: expected key=value", idx + 1))
            })?;
            self.set(key.trim(), value)
                .map_err(|e| ConfigError(format!("config line {}: {}", idx + 1, e.0)))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("threshold", self.item_threshold),
            ("stem_attempts", self.stem_attempts),
            ("pool_size", self.selection.pool_size),
            ("max_rounds", self.selection.max_rounds),
            ("parallelism", self.parallelism),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(ConfigError(format!("{name} must be positive")));
            }
        }
        self.stem_constraints.validate().map_err(ConfigError)?;
        if !(0.0..=2.0).contains(&self.stem_temperature) {
            return Err(ConfigError("stem_temperature must be within [0, 2]".into()));
        }
        if self.transport == TransportKind::Replay && self.transcript_path.is_none() {
            return Err(ConfigError(
                "replay transport needs a transcript file".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = RunConfig::default();
        assert_eq!(c.item_threshold, 60);
        assert_eq!(c.selection.pool_size, 10);
        assert_eq!(c.parallelism, 1);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn file_then_override() {
        let mut c = RunConfig::default();
        c.apply_file_text("# run\nthreshold = 5\nseed=42\ndomain=Academic English\n\ntransport=replay\ntranscript=t.jsonl\n")
            .unwrap();
        assert_eq!(c.item_threshold, 5);
        assert_eq!(c.seed, 42);
        assert_eq!(c.stem_constraints.domain_label, "Academic English");
        c.set("threshold", "7").unwrap();
        assert_eq!(c.item_threshold, 7);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn rejects_bad_input() {
        let mut c = RunConfig::default();
        assert!(c.apply_file_text("threshold").is_err());
        assert!(c.set("nonsense", "1").is_err());
        assert!(c.set("seed", "-1").is_err());
        assert!(c.set("stem_check", "maybe").is_err());
        c.set("threshold", "0").unwrap();
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.set("transport", "replay").unwrap();
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.set("max_words", "3").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn every_listed_key_is_settable() {
        let samples = [
            ("threshold", "1"),
            ("seed", "1"),
            ("max_words", "9"),
            ("stem_attempts", "1"),
            ("stem_temperature", "0"),
            ("pool_size", "1"),
            ("max_rounds", "1"),
            ("parallelism", "1"),
            ("forbid_initial", "false"),
            ("stem_check", "true"),
            ("no_timestamps", "true"),
            ("judgment_mode", "sentence"),
            ("transport", "live"),
            ("timeout_secs", "30"),
        ];
        for key in RunConfig::KEYS {
            let value = samples
                .iter()
                .find(|(k, _)| *k == key)
                .map_or("x", |(_, v)| *v);
            RunConfig::default()
                .set(key, value)
                .unwrap_or_else(|e| panic!("{key}: {e}"));
        }
    }
}
