//! Configuration merging, error classes and report output.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

/// Failure classes, one per non-zero exit code.
#[derive(Debug)]
pub enum Failure {
    /// A certificate or property check failed.
    Verification(String),
    /// Bad flags, config or input files.
    Usage(String),
    /// A word or sample budget was exhausted.
    Budget(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Verification(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Budget(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Verification(m) | Failure::Usage(m) | Failure::Budget(m) => m,
        }
    }
}

impl From<monex::Error> for Failure {
    fn from(e: monex::Error) -> Self {
        match e {
            monex::Error::BudgetExceeded { .. } => Failure::Budget(e.to_string()),
            monex::Error::NoConvergence { .. } => Failure::Verification(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;

pub fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Reads the `[section]` table of a TOML config file.
pub fn load_section(path: Option<&Path>, section: &str) -> CliResult<Value> {
    let Some(path) = path else { return Ok(json!({})) };
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let table: toml::Table = text.parse().map_err(|e| usage(format!("{}: {e}", path.display())))?;
    match table.get(section) {
        None => Ok(json!({})),
        Some(v @ toml::Value::Table(_)) => serde_json::to_value(v).map_err(|e| usage(e.to_string())),
        Some(_) => Err(usage(format!("[{section}] must be a table"))),
    }
}

/// Config file values overridden by the flags that were given.
pub fn resolve<F: Serialize, R: DeserializeOwned>(flags: &F, file: Value) -> CliResult<R> {
    let mut merged = match file {
        Value::Object(m) => m,
        _ => serde_json::Map::new(),
    };
    if let Value::Object(f) = serde_json::to_value(flags).map_err(|e| usage(e.to_string()))? {
        merged.extend(f.into_iter().filter(|(_, v)| !v.is_null()));
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| usage(format!("config: {e}")))
}

pub fn word_budget_default() -> u64 {
    monex::word_budget_from_env()
}

/// First 16 hex digits of the SHA-256 of the canonical config.
pub fn config_hash(command: &str, config: &Value) -> String {
    let canonical = serde_json::to_string(&json!({ "command": command, "config": config })).expect("json");
    hex::encode(&Sha256::digest(canonical.as_bytes())[..8])
}

/// Writes `bytes` to `dir/name`, or to the first free `stem-N.ext` when a
/// different file already sits there. An identical file is left alone.
pub fn write_fresh(dir: &Path, stem: &str, ext: &str, bytes: &[u8]) -> CliResult<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| usage(format!("{}: {e}", dir.display())))?;
    for k in 1.. {
        let name = if k == 1 { format!("{stem}.{ext}") } else { format!("{stem}-{k}.{ext}") };
        let path = dir.join(name);
        match fs::read(&path) {
            Ok(existing) if existing == bytes => return Ok(path),
            Ok(_) => continue,
            Err(_) => {
                fs::write(&path, bytes).map_err(|e| usage(format!("{}: {e}", path.display())))?;
                return Ok(path);
            }
        }
    }
    unreachable!()
}

/// Sorted-key JSON report embedding the resolved config.
pub struct Report {
    pub command: &'static str,
    pub config: Value,
    pub hash: String,
}

impl Report {
    pub fn new(command: &'static str, config: &impl Serialize) -> CliResult<Self> {
        let config = serde_json::to_value(config).map_err(|e| usage(e.to_string()))?;
        let hash = config_hash(command, &config);
        Ok(Report { command, config, hash })
    }

    pub fn stem(&self) -> String {
        format!("{}-{}", self.command, self.hash)
    }

    pub fn write(&self, dir: &Path, result: Value) -> CliResult<PathBuf> {
        let doc = json!({
            "command": self.command,
            "config": self.config,
            "result": result,
            "version": env!("CARGO_PKG_VERSION"),
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("json");
        text.push('\n');
        write_fresh(dir, &self.stem(), "json", text.as_bytes())
    }
}

pub fn to_value(x: &impl Serialize) -> Value {
    serde_json::to_value(x).expect("serializable")
}

pub fn read_json(path: &Path) -> CliResult<Value> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// A document or the `result` field of a report wrapping it.
pub fn read_payload<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let v = read_json(path)?;
    let inner = match v {
        Value::Object(mut m) if m.contains_key("command") && m.contains_key("result") => m.remove("result").unwrap(),
        other => other,
    };
    serde_json::from_value(inner).map_err(|e| usage(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Serialize)]
    struct Flags {
        a: Option<u32>,
        b: Option<String>,
    }

    #[derive(Deserialize, Debug, PartialEq)]
    #[serde(default)]
    struct Cfg {
        a: u32,
        b: String,
    }

    impl Default for Cfg {
        fn default() -> Self {
            Cfg { a: 1, b: "x".into() }
        }
    }

    #[test]
    fn precedence() {
        let none = Flags { a: None, b: None };
        let r: Cfg = resolve(&none, json!({})).unwrap();
        assert_eq!(r, Cfg { a: 1, b: "x".into() });
        let r: Cfg = resolve(&none, json!({ "a": 5 })).unwrap();
        assert_eq!(r.a, 5);
        let r: Cfg = resolve(&Flags { a: Some(7), b: None }, json!({ "a": 5, "b": "y" })).unwrap();
        assert_eq!(r, Cfg { a: 7, b: "y".into() });
    }

    #[test]
    fn hash_depends_on_command_and_config() {
        let c = json!({ "a": 1 });
        assert_eq!(config_hash("walk", &c), config_hash("walk", &json!({ "a": 1 })));
        assert_ne!(config_hash("walk", &c), config_hash("forge", &c));
        assert_ne!(config_hash("walk", &c), config_hash("walk", &json!({ "a": 2 })));
        assert_eq!(config_hash("walk", &c).len(), 16);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(Failure::Verification(String::new()).exit_code(), 1);
        assert_eq!(usage("x").exit_code(), 2);
        assert_eq!(Failure::from(monex::Error::BudgetExceeded { needed: 2, budget: 1 }).exit_code(), 3);
    }
}
