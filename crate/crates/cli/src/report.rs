//! Run manifests and the JSON / CSV renderers.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::CliError;

/// Floats in reports are rounded to this many significant digits before
/// printing. State files bypass the rounding and keep full precision.
pub const REPORT_SIG_DIGITS: usize = 12;

/// Provenance block embedded in every report: the subcommand, its fully
/// resolved parameters, and enough environment to reproduce the run. Two runs
/// with identical manifests produce byte-identical documents.
#[derive(Serialize)]
pub struct Manifest {
    pub command: &'static str,
    pub parameters: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub version: &'static str,
    pub unix_time: u64,
}

pub fn manifest(command: &'static str, seed: Option<u64>, parameters: Value) -> Manifest {
    Manifest {
        command,
        parameters,
        seed,
        version: env!("CARGO_PKG_VERSION"),
        unix_time: unix_time(),
    }
}

/// Wall clock, unless SOURCE_DATE_EPOCH pins the timestamp (the usual
/// reproducible-output convention).
fn unix_time() -> u64 {
    if let Ok(text) = std::env::var("SOURCE_DATE_EPOCH") {
        if let Ok(t) = text.trim().parse::<u64>() {
            return t;
        }
    }
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.prec$e}", prec = REPORT_SIG_DIGITS - 1).parse().unwrap_or(x)
}

/// Rounds every float in the tree; integers pass through untouched.
fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if n.is_f64() {
                if let Some(r) = n.as_f64().and_then(|x| serde_json::Number::from_f64(round_sig(x))) {
                    *v = Value::Number(r);
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

fn envelope_value(manifest: &Manifest, data: &Value) -> Result<Value, CliError> {
    let manifest = serde_json::to_value(manifest)
        .map_err(|e| CliError::Io(format!("cannot serialize report: {e}")))?;
    let mut v = serde_json::json!({ "manifest": manifest, "data": data });
    round_value(&mut v);
    Ok(v)
}

pub fn render_json(manifest: &Manifest, data: &Value) -> Result<String, CliError> {
    let v = envelope_value(manifest, data)?;
    let mut text = serde_json::to_string_pretty(&v)
        .map_err(|e| CliError::Io(format!("cannot serialize report: {e}")))?;
    text.push('\n');
    Ok(text)
}

/// Long-format CSV: the manifest as leading comment lines, then one key,value
/// row per scalar in the data tree, keys dotted along the JSON path.
pub fn render_csv(manifest: &Manifest, data: &Value) -> Result<String, CliError> {
    let v = envelope_value(manifest, data)?;
    let m = &v["manifest"];

    let mut text = String::new();
    text.push_str(&format!("# command: {}\n", m["command"].as_str().unwrap_or("")));
    text.push_str(&format!("# version: {}\n", m["version"].as_str().unwrap_or("")));
    if let Some(seed) = m.get("seed").filter(|s| !s.is_null()) {
        text.push_str(&format!("# seed: {seed}\n"));
    }
    text.push_str(&format!("# unix_time: {}\n", m["unix_time"]));
    text.push_str(&format!("# parameters: {}\n", m["parameters"]));

    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Io(format!("cannot render csv: {e}"));
    w.write_record(["key", "value"]).map_err(fail)?;
    flatten("", &v["data"], &mut w)?;
    let bytes = w.into_inner().map_err(|e| CliError::Io(format!("cannot render csv: {e}")))?;
    text.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
    Ok(text)
}

fn flatten(prefix: &str, v: &Value, w: &mut csv::Writer<Vec<u8>>) -> Result<(), CliError> {
    let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    let fail = |e: csv::Error| CliError::Io(format!("cannot render csv: {e}"));
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                flatten(&join(k), x, w)?;
            }
        }
        Value::Array(items) => {
            for (i, x) in items.iter().enumerate() {
                flatten(&join(&i.to_string()), x, w)?;
            }
        }
        // Strings are written raw so the csv layer quotes them once.
        Value::String(s) => w.write_record([prefix, s]).map_err(fail)?,
        other => w.write_record([prefix, &other.to_string()]).map_err(fail)?,
    }
    Ok(())
}

pub fn emit(text: &str, output: Option<&Path>) -> Result<(), CliError> {
    match output {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(format!("cannot write report: {e}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_keeps_short_decimals_and_integers() {
        assert_eq!(round_sig(0.46875), 0.46875);
        assert_eq!(round_sig(0.0), 0.0);
        assert_eq!(round_sig(-2.5), -2.5);
        let mut v = serde_json::json!({ "a": [1u64, 0.123456789012345678, true], "b": "x" });
        round_value(&mut v);
        assert_eq!(v["a"][0], serde_json::json!(1));
        assert_eq!(v["a"][1], serde_json::json!(0.123456789012));
        assert_eq!(v["a"][2], serde_json::json!(true));
    }

    #[test]
    fn csv_flattens_nested_paths() {
        let m = manifest("moments", None, serde_json::json!({ "q": 0.3 }));
        let data = serde_json::json!({ "rows": [{ "item": "a,b", "p": 0.5 }] });
        let text = render_csv(&m, &data).unwrap();
        assert!(text.contains("# command: moments"));
        assert!(text.contains("key,value"));
        assert!(text.contains("rows.0.p,0.5"));
        // The comma inside the token forces quoting.
        assert!(text.contains("rows.0.item,\"a,b\""));
    }
}
