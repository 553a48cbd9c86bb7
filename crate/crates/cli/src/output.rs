//! CSV tables and JSON sidecars.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};
use wnc::scenario::Scenario;

use crate::config::CliError;

pub struct Artifact<'a> {
    pub out: &'a Path,
    pub name: &'a str,
    pub command: &'a str,
    pub preset: Option<&'a str>,
    pub scenario: &'a Scenario,
    /// Columns identifying a sweep point, averaged over in the summary.
    pub keys: &'a [&'a str],
}

impl Artifact<'_> {
    fn path(&self, ext: &str) -> PathBuf {
        self.out.join(format!("{}.{ext}", self.name))
    }

    /// Writes `rows` as CSV and a sidecar with the resolved config and
    /// per-point means of the numeric columns.
    pub fn write<T: Serialize>(&self, rows: &[T], extra: Value) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(self.out)?;
        let csv_path = self.path("csv");
        let mut w = csv::Writer::from_path(&csv_path)?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;

        let values: Vec<Value> = rows.iter().map(serde_json::to_value).collect::<Result<_, _>>()?;
        let sidecar = json!({
            "command": self.command,
            "preset": self.preset,
            "seed": self.scenario.sim.seed,
            "config": self.scenario,
            "csv": csv_path.file_name().and_then(|n| n.to_str()),
            "rows": rows.len(),
            "summary": summarize(&values, self.keys),
            "extra": extra,
        });
        std::fs::write(self.path("json"), serde_json::to_string_pretty(&sidecar)? + "\n")?;
        Ok(csv_path)
    }
}

/// Key columns of one group and the running sum and count per column.
type Group = (Map<String, Value>, BTreeMap<String, (f64, usize)>);

/// Groups rows by `keys` and averages every other numeric column.
pub fn summarize(rows: &[Value], keys: &[&str]) -> Vec<Value> {
    let mut groups: BTreeMap<String, Group> = BTreeMap::new();
    for row in rows {
        let Value::Object(obj) = row else { continue };
        let key: Map<String, Value> =
            keys.iter().filter_map(|k| obj.get(*k).map(|v| (k.to_string(), v.clone()))).collect();
        let entry = groups.entry(Value::Object(key.clone()).to_string()).or_insert_with(|| (key, BTreeMap::new()));
        for (name, v) in obj {
            if keys.contains(&name.as_str()) || name == "seed" {
                continue;
            }
            if let Some(x) = v.as_f64() {
                let s = entry.1.entry(name.clone()).or_insert((0.0, 0));
                s.0 += x;
                s.1 += 1;
            }
        }
    }
    groups
        .into_values()
        .map(|(mut key, sums)| {
            for (name, (sum, n)) in sums {
                key.insert(format!("mean_{name}"), json!(sum / n as f64));
            }
            Value::Object(key)
        })
        .collect()
}
