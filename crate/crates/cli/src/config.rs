//! Flat `key = value` run configuration with flags > file > defaults precedence.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::error::CliError;

/// One configurable key.
pub struct KeySpec {
    pub name: &'static str,
    /// `None` marks a required key.
    pub default: Option<&'static str>,
    pub help: &'static str,
}

const fn key(name: &'static str, default: Option<&'static str>, help: &'static str) -> KeySpec {
    KeySpec {
        name,
        default,
        help,
    }
}

pub const COMMON_KEYS: &[KeySpec] = &[
    key("seed", Some("0"), "master seed for every random choice"),
    key(
        "threads",
        Some("0"),
        "worker threads, 0 for all cores (never affects results)",
    ),
    key(
        "timing",
        Some("record"),
        "record | omit wall-clock timings in artifacts",
    ),
];

pub const EXTRACT_KEYS: &[KeySpec] = &[
    key("manifest", None, "CSV manifest with path,label columns"),
    key("out", None, "output feature file"),
    key("side", Some("224"), "square resize side in pixels"),
];

pub const SPLIT_KEYS: &[KeySpec] = &[
    key("in", None, "input feature file"),
    key("ratio", Some("0.8"), "train fraction per class"),
    key("train_out", None, "train part output"),
    key("holdout_out", None, "holdout part output"),
];

pub const BALANCE_KEYS: &[KeySpec] = &[
    key("in", None, "input feature file"),
    key("out", None, "undersampled output"),
];

pub const TRAIN_KEYS: &[KeySpec] = &[
    key("features", None, "labelled training feature file"),
    key("out", None, "model output path"),
    key("base", Some("ada"), "lr | gnb | knn | dt | rf | ada"),
    key("refine", Some("gbdt-leaf"), "gbdt-leaf | gbdt-level | none"),
    key("tau", Some("0.8"), "confidence threshold in [0, 1.01]"),
    key("weighting", Some("none"), "none | balanced"),
    key(
        "refine_weighting",
        Some("inherit"),
        "inherit | none | balanced",
    ),
    key("refine_scope", Some("full"), "full | uncertain_only"),
    key(
        "balance",
        Some("off"),
        "on | off: undersample before training",
    ),
    key("epochs", Some("30"), "softmax head epochs"),
    key("batch_size", Some("32"), "softmax head batch size"),
    key("eta", Some("0.001"), "softmax head Adam learning rate"),
    key("knn_k", Some("5"), "neighbours for knn"),
    key("cart_max_depth", Some("12"), "dt depth limit, or none"),
    key("forest_trees", Some("100"), "rf tree count"),
    key(
        "forest_mtry",
        Some("auto"),
        "rf features per split, or auto",
    ),
    key("ada_estimators", Some("50"), "ada boosting rounds"),
    key("ada_depth", Some("1"), "ada weak learner depth"),
    key("gbdt_iters", Some("100"), "boosting iterations"),
    key("gbdt_learning_rate", Some("0.1"), "boosting shrinkage"),
    key("gbdt_max_leaves", Some("31"), "leaf-wise leaf budget"),
    key("gbdt_max_depth", Some("6"), "level-wise depth"),
    key("gbdt_lambda", Some("1"), "L2 leaf regularisation"),
    key("gbdt_min_hessian", Some("0.001"), "minimum child Hessian"),
    key("gbdt_bins", Some("256"), "histogram bins per feature"),
];

pub const EVAL_KEYS: &[KeySpec] = &[
    key("model", None, "model file"),
    key("features", None, "labelled feature file"),
    key(
        "report",
        None,
        "JSON report path; the matrix goes to <report>.cm.txt",
    ),
    key("tau", Some("model"), "threshold override, or model"),
];

pub const PREDICT_KEYS: &[KeySpec] = &[
    key("model", None, "model file"),
    key("features", None, "feature file, labels optional"),
    key("out", None, "prediction CSV path"),
    key("tau", Some("model"), "threshold override, or model"),
];

pub const SERVE_KEYS: &[KeySpec] = &[
    key("model", None, "model file"),
    key("addr", Some("127.0.0.1:8080"), "listen address"),
];

const ALL_KEYS: &[&[KeySpec]] = &[
    COMMON_KEYS,
    EXTRACT_KEYS,
    SPLIT_KEYS,
    BALANCE_KEYS,
    TRAIN_KEYS,
    EVAL_KEYS,
    PREDICT_KEYS,
    SERVE_KEYS,
];

/// Keys that never enter echoed configs because they cannot change results.
const NOT_ECHOED: &[&str] = &["threads"];

/// Parse a flat config file: one `key = value` per line, `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::usage(format!("config line {}: expected key = value", no + 1))
        })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(CliError::usage(format!(
                "config line {}: empty key",
                no + 1
            )));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(CliError::usage(format!(
                "config line {}: duplicate key {k:?}",
                no + 1
            )));
        }
    }
    Ok(out)
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    parse_config_text(&text)
}

/// Fully resolved settings for one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    /// Layer `flags` over `file` over the defaults in `keys`.
    ///
    /// A config file may be shared between commands, so it may carry keys of
    /// other commands; keys no command knows are rejected. Flags must belong
    /// to this command. Missing required keys are usage errors.
    pub fn resolve(
        keys: &[&[KeySpec]],
        file: &BTreeMap<String, String>,
        flags: &BTreeMap<String, String>,
    ) -> Result<Self, CliError> {
        let declared = |groups: &[&[KeySpec]], name: &str| {
            groups.iter().flat_map(|g| g.iter()).any(|k| k.name == name)
        };
        if let Some(name) = file.keys().find(|n| !declared(ALL_KEYS, n)) {
            return Err(CliError::usage(format!(
                "unknown setting {name:?} in config file"
            )));
        }
        if let Some(name) = flags.keys().find(|n| !declared(keys, n)) {
            return Err(CliError::usage(format!(
                "setting {name:?} does not apply to this command"
            )));
        }
        let mut values = BTreeMap::new();
        for spec in keys.iter().flat_map(|g| g.iter()) {
            let value = flags
                .get(spec.name)
                .or_else(|| file.get(spec.name))
                .cloned()
                .or_else(|| spec.default.map(str::to_string))
                .ok_or_else(|| {
                    CliError::usage(format!("missing required setting {:?}", spec.name))
                })?;
            values.insert(spec.name.to_string(), value);
        }
        Ok(RunConfig { values })
    }

    pub fn str(&self, key: &str) -> &str {
        self.values
            .get(key)
            .map(String::as_str)
            .unwrap_or_else(|| panic!("setting {key:?} is not declared"))
    }

    pub fn parse<T>(&self, key: &str) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        let raw = self.str(key);
        raw.parse()
            .map_err(|e| CliError::usage(format!("setting {key} = {raw:?}: {e}")))
    }

    /// `None` when the value equals `sentinel`.
    pub fn parse_or<T>(&self, key: &str, sentinel: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        if self.str(key) == sentinel {
            Ok(None)
        } else {
            self.parse(key).map(Some)
        }
    }

    pub fn switch(&self, key: &str) -> Result<bool, CliError> {
        match self.str(key) {
            "on" | "true" | "yes" => Ok(true),
            "off" | "false" | "no" => Ok(false),
            other => Err(CliError::usage(format!(
                "setting {key} = {other:?}: expected on or off"
            ))),
        }
    }

    pub fn timing_recorded(&self) -> Result<bool, CliError> {
        match self.str("timing") {
            "record" => Ok(true),
            "omit" => Ok(false),
            other => Err(CliError::usage(format!(
                "setting timing = {other:?}: expected record or omit"
            ))),
        }
    }

    /// Settings that describe the run's results, for embedding in artifacts.
    pub fn echo(&self) -> BTreeMap<String, String> {
        self.values
            .iter()
            .filter(|(k, _)| !NOT_ECHOED.contains(&k.as_str()))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn parses_comments_and_whitespace() {
        let text = "# run\nbase = rf\n\n  tau=0.7   # tighter\nrefine = gbdt-level\n";
        assert_eq!(
            parse_config_text(text).unwrap(),
            map(&[("base", "rf"), ("tau", "0.7"), ("refine", "gbdt-level")])
        );
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(parse_config_text("base rf").is_err());
        assert!(parse_config_text("= rf").is_err());
        assert!(parse_config_text("a = 1\na = 2").is_err());
    }

    #[test]
    fn flags_beat_file_beat_defaults() {
        let file = map(&[
            ("tau", "0.6"),
            ("base", "rf"),
            ("features", "f.fvec"),
            ("out", "m.json"),
        ]);
        let flags = map(&[("tau", "0.9")]);
        let cfg = RunConfig::resolve(&[COMMON_KEYS, TRAIN_KEYS], &file, &flags).unwrap();
        assert_eq!(cfg.str("tau"), "0.9");
        assert_eq!(cfg.str("base"), "rf");
        assert_eq!(cfg.str("refine"), "gbdt-leaf");
        assert!(!cfg.echo().contains_key("threads"));
        assert_eq!(cfg.echo()["seed"], "0");
    }

    #[test]
    fn unknown_and_missing_keys_are_usage_errors() {
        let e = RunConfig::resolve(
            &[COMMON_KEYS, BALANCE_KEYS],
            &map(&[("bogus", "1")]),
            &BTreeMap::new(),
        )
        .unwrap_err();
        assert_eq!(e.exit_code(), 1);
        let e = RunConfig::resolve(
            &[COMMON_KEYS, BALANCE_KEYS],
            &BTreeMap::new(),
            &map(&[("tau", "1")]),
        )
        .unwrap_err();
        assert_eq!(e.exit_code(), 1);
        let e = RunConfig::resolve(
            &[COMMON_KEYS, BALANCE_KEYS],
            &BTreeMap::new(),
            &map(&[("in", "a")]),
        )
        .unwrap_err();
        assert!(e.to_string().contains("out"));
    }

    #[test]
    fn shared_files_may_hold_other_commands_keys() {
        let file = map(&[("in", "a"), ("out", "b"), ("tau", "0.5"), ("base", "rf")]);
        let cfg =
            RunConfig::resolve(&[COMMON_KEYS, BALANCE_KEYS], &file, &BTreeMap::new()).unwrap();
        assert!(!cfg.echo().contains_key("tau"));
    }

    #[test]
    fn typed_accessors_validate() {
        let flags = map(&[
            ("in", "a"),
            ("out", "b"),
            ("seed", "x"),
            ("timing", "sometimes"),
        ]);
        let cfg =
            RunConfig::resolve(&[COMMON_KEYS, BALANCE_KEYS], &BTreeMap::new(), &flags).unwrap();
        assert!(cfg.parse::<u64>("seed").is_err());
        assert!(cfg.timing_recorded().is_err());
    }
}
