//! Config files: flat `key = value` text or a JSON object. Keys are
//! [`ScenarioConfig`] field names; list values are comma separated.

use std::fs;
use std::path::Path;

use serde_json::{Map, Value};

use crate::domain::ScenarioConfig;
use crate::error::{Error, Result};

/// Parses one textual value: JSON literal if possible, comma list, else a
/// bare string.
pub fn parse_value(raw: &str) -> Value {
    let raw = raw.trim();
    if let Ok(v) = serde_json::from_str::<Value>(raw) {
        return v;
    }
    if raw.contains(',') {
        return Value::Array(raw.split(',').map(parse_value).collect());
    }
    Value::String(raw.to_string())
}

/// Parses `key = value` lines. `#` starts a comment.
pub fn parse_key_values(text: &str) -> Result<Map<String, Value>> {
    let mut map = Map::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::ConfigParse {
            line: i + 1,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::ConfigParse {
                line: i + 1,
                message: "empty key".into(),
            });
        }
        map.insert(key.to_string(), parse_value(value));
    }
    Ok(map)
}

/// Parses a config document (JSON object or key/value text) into a map.
pub fn parse_document(text: &str) -> Result<Map<String, Value>> {
    if text.trim_start().starts_with('{') {
        match serde_json::from_str::<Value>(text)? {
            Value::Object(m) => Ok(m),
            _ => unreachable!("starts with a brace"),
        }
    } else {
        parse_key_values(text)
    }
}

/// Parses `key=value` override strings.
pub fn parse_overrides(items: &[String]) -> Result<Map<String, Value>> {
    parse_key_values(&items.join("\n"))
}

fn coerce(defaults: &Map<String, Value>, key: &str, value: Value) -> Value {
    match (defaults.get(key), value) {
        (Some(Value::Array(_)), v @ (Value::Number(_) | Value::String(_))) => Value::Array(vec![v]),
        (_, v) => v,
    }
}

/// Applies `entries` on top of `base`.
pub fn apply_entries(
    base: &ScenarioConfig,
    entries: &Map<String, Value>,
) -> Result<ScenarioConfig> {
    let defaults = match serde_json::to_value(ScenarioConfig::default())? {
        Value::Object(m) => m,
        _ => unreachable!(),
    };
    let mut merged = match serde_json::to_value(base)? {
        Value::Object(m) => m,
        _ => unreachable!(),
    };
    for (k, v) in entries {
        // `section.field` is accepted; only the field name matters.
        let field = k.rsplit('.').next().unwrap_or(k);
        if !defaults.contains_key(field) {
            return Err(Error::InvalidConfig(format!("unknown key `{k}`")));
        }
        merged.insert(field.to_string(), coerce(&defaults, field, v.clone()));
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| Error::InvalidConfig(e.to_string()))
}

pub fn load_config_text(text: &str) -> Result<ScenarioConfig> {
    apply_entries(&ScenarioConfig::default(), &parse_document(text)?)
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    load_config_text(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Distribution;

    #[test]
    fn key_values() {
        let c = load_config_text(
            "# scenario\ndistribution = uniform\nmulti_type_share = 0.5\nincremental_schedule = 3, 6, 9\nruns = 7\n",
        )
        .unwrap();
        assert_eq!(c.distribution, Distribution::Uniform);
        assert_eq!(c.multi_type_share, 0.5);
        assert_eq!(c.incremental_schedule, vec![3, 6, 9]);
        assert_eq!(c.runs, Some(7));
        assert_eq!(c.releases, 12);
    }

    #[test]
    fn scalar_schedule_is_a_list() {
        let c = load_config_text("incremental_schedule = 4").unwrap();
        assert_eq!(c.incremental_schedule, vec![4]);
    }

    #[test]
    fn json_documents() {
        let c = load_config_text(r#"{"cardinality_n": 25, "distribution": "pareto"}"#).unwrap();
        assert_eq!(c.cardinality_n, 25);
    }

    #[test]
    fn dotted_keys() {
        let c = load_config_text("workload.access_fraction = 0.2\nscenario.releases = 4").unwrap();
        assert_eq!((c.access_fraction, c.releases), (0.2, 4));
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(load_config_text("bogus = 1").is_err());
        assert!(matches!(
            load_config_text("no equals sign"),
            Err(Error::ConfigParse { line: 1, .. })
        ));
    }

    #[test]
    fn overrides_apply_last() {
        let base = load_config_text("releases = 5").unwrap();
        let o = parse_overrides(&["releases=3".into(), "master_seed=9".into()]).unwrap();
        let c = apply_entries(&base, &o).unwrap();
        assert_eq!((c.releases, c.master_seed), (3, 9));
    }
}
