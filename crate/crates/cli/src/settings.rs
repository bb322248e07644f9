//! Flag, config-file and default resolution.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use serde_json::{Map, Value};

use crate::CliError;

/// Values from a `key = value` file, consumed as the command asks for them.
pub struct Settings {
    file: BTreeMap<String, String>,
    used: Vec<String>,
    resolved: Map<String, Value>,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let mut file = BTreeMap::new();
        if let Some(p) = path {
            let f = std::fs::File::open(p).map_err(|e| CliError::io(format!("{}: {e}", p.display())))?;
            for (k, v) in covext::io::parse_config(std::io::BufReader::new(f))? {
                file.insert(k, v);
            }
        }
        Ok(Self { file, used: Vec::new(), resolved: Map::new() })
    }

    /// Flag value if given, else the config entry, else `default`.
    pub fn get<T>(&mut self, key: &str, flag: Option<T>, default: Option<T>) -> Result<T, CliError>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        self.used.push(key.to_string());
        let value = match (flag, self.file.get(key)) {
            (Some(v), _) => v,
            (None, Some(text)) => text
                .parse()
                .map_err(|e| CliError::usage(format!("config key {key:?}: cannot parse {text:?}: {e}")))?,
            (None, None) => default.ok_or_else(|| CliError::usage(format!("missing required setting --{key}")))?,
        };
        self.resolved.insert(key.to_string(), Value::String(value.to_string()));
        Ok(value)
    }

    /// Like [`get`](Self::get) for settings without a default.
    pub fn get_opt<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        if flag.is_none() && !self.file.contains_key(key) {
            self.used.push(key.to_string());
            return Ok(None);
        }
        self.get(key, flag, None).map(Some)
    }

    /// The resolved configuration as a JSON object; warns about config keys
    /// the command did not use.
    pub fn echo(&self, command: &str) -> Value {
        for k in self.file.keys() {
            if !self.used.contains(k) {
                log::warn!("config key {k:?} is not used by {command}");
            }
        }
        let mut obj = Map::new();
        obj.insert("event".into(), "config".into());
        obj.insert("command".into(), command.into());
        obj.insert("settings".into(), Value::Object(self.resolved.clone()));
        Value::Object(obj)
    }
}
