//! Report emission.
//!
//! Every JSON report carries the fully resolved configuration next to its
//! metrics and per-sample rows, so a run can be reproduced from nothing but
//! its own output. Serialization is deterministic: struct fields keep
//! declaration order and composed objects sort their keys.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::atomic_write;

/// Writes `{config, metrics, per_sample}` as pretty JSON.
pub fn write_json<C, M, S>(path: &Path, config: &C, metrics: &M, per_sample: &[S]) -> Result<()>
where
    C: Serialize,
    M: Serialize,
    S: Serialize,
{
    let doc = serde_json::json!({
        "config": config,
        "metrics": metrics,
        "per_sample": per_sample,
    });
    let mut bytes = serde_json::to_vec_pretty(&doc)
        .map_err(|e| Error::Format(format!("report serialization failed: {e}")))?;
    bytes.push(b'\n');
    atomic_write(path, &bytes)
}

/// Writes a flat CSV with the given header and pre-formatted rows.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::invalid(format!(
                "CSV row has {} fields, header has {}",
                row.len(),
                header.len()
            )));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[derive(Serialize)]
    struct DemoConfig {
        seed: u64,
        steps: usize,
    }

    #[test]
    fn json_reports_are_byte_deterministic() {
        let dir = tempdir().unwrap();
        let a = dir.path().join("a.json");
        let b = dir.path().join("b.json");
        let cfg = DemoConfig { seed: 7, steps: 20 };
        let metrics = serde_json::json!({"asr": 0.5, "n": 10});
        let rows = vec![serde_json::json!({"index": 0, "ok": true})];
        write_json(&a, &cfg, &metrics, &rows).unwrap();
        write_json(&b, &cfg, &metrics, &rows).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        let text = std::fs::read_to_string(&a).unwrap();
        assert!(text.contains("\"config\""));
        assert!(text.contains("\"per_sample\""));
    }

    #[test]
    fn csv_shape_is_validated() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        let rows = vec![vec!["1".into(), "a".into()]];
        write_csv(&path, &["id", "name"], &rows).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "id,name\n1,a\n"
        );
        assert!(write_csv(&path, &["only"], &rows).is_err());
    }

    #[test]
    fn no_partial_file_on_failure() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("missing-dir").join("x.csv");
        assert!(write_csv(&path, &["a"], &[]).is_err());
        assert!(!path.exists());
    }
}
