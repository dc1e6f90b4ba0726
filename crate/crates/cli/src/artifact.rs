//! On-disk artifacts: the fit document and the append-only run manifest.
//!
//! A fit document is self-contained: it embeds the training points and
//! the fitted heights, so evaluation, sampling, and re-normalization can
//! all run from the document alone. Documents are deterministic byte for
//! byte for a fixed seed and configuration; anything wall-clock shaped
//! lives only in the manifest.

use serde::{Deserialize, Serialize};
use std::io::Write as _;
use std::path::Path;

/// Version stamp written into every artifact this binary produces.
pub const ARTIFACT_VERSION: u32 = 1;

/// Result of a `fit` run, sufficient to reconstruct the fitted density.
#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FitDocument {
    pub schema_version: u32,
    /// Training points, one row per sample.
    pub points: Vec<Vec<f64>>,
    /// Fitted log-density heights at the training points; sums to zero.
    pub y: Vec<f64>,
    /// Certified log-likelihood; absent when the run died mid-loop.
    pub loglik: Option<f64>,
    /// Log normalizing constant of the fitted tent; absent on partial runs.
    pub log_partition: Option<f64>,
    pub iterations: usize,
    pub seed: u64,
    pub config: ConfigEcho,
    pub diagnostics: DiagnosticsDoc,
}

/// The knobs the fit actually ran with, echoed for reproducibility.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConfigEcho {
    pub epsilon: f64,
    pub delta: f64,
    pub tau: f64,
    pub max_iters: Option<usize>,
    pub walk_steps: Option<usize>,
    pub volume_backend: String,
}

/// Counters and accuracy figures from the ascent loop.
#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DiagnosticsDoc {
    pub proposals: u64,
    pub accepted: u64,
    /// Absent when no proposal was ever made (a run that died at step one).
    pub acceptance_rate: Option<f64>,
    pub projection_hits: u64,
    pub sampler_delta_required: f64,
    pub sampler_delta_used: f64,
    pub volume_delta_achieved: f64,
    pub certify_delta: f64,
}

impl From<&logcave_core::Diagnostics> for DiagnosticsDoc {
    fn from(d: &logcave_core::Diagnostics) -> Self {
        DiagnosticsDoc {
            proposals: d.proposals,
            accepted: d.accepted,
            acceptance_rate: d.acceptance_rate.is_finite().then_some(d.acceptance_rate),
            projection_hits: d.projection_hits,
            sampler_delta_required: d.sampler_delta_required,
            sampler_delta_used: d.sampler_delta_used,
            volume_delta_achieved: d.volume_delta_achieved,
            certify_delta: d.certify_delta,
        }
    }
}

/// Loads and validates a fit document.
pub fn load_document(path: &Path) -> Result<FitDocument, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("{}: cannot read file: {e}", path.display()))?;
    let doc: FitDocument = serde_json::from_str(&text)
        .map_err(|e| format!("{}: not a fit document: {e}", path.display()))?;
    if doc.schema_version != ARTIFACT_VERSION {
        return Err(format!(
            "{}: unsupported schemaVersion {} (this binary reads {})",
            path.display(),
            doc.schema_version,
            ARTIFACT_VERSION
        ));
    }
    if doc.y.len() != doc.points.len() {
        return Err(format!(
            "{}: {} heights for {} points",
            path.display(),
            doc.y.len(),
            doc.points.len()
        ));
    }
    Ok(doc)
}

/// Writes a fit document as pretty JSON with a trailing newline.
pub fn save_document(path: &Path, doc: &FitDocument) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(doc).expect("fit document serializes");
    text.push('\n');
    std::fs::write(path, text)
}

/// One line of the append-only run log.
///
/// Every invocation of the binary appends exactly one record, success or
/// failure. The destination defaults to `manifest.jsonl` in the working
/// directory and can be redirected with `LOGCAVE_MANIFEST`.
#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ManifestRecord {
    pub command: String,
    pub input: String,
    pub config: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub artifact_version: u32,
    pub wall_clock_ms: u64,
    pub outcome: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub acceptance_rate: Option<f64>,
}

/// Appends one record to the manifest file.
pub fn append_manifest(record: &ManifestRecord) -> std::io::Result<()> {
    let path = std::env::var("LOGCAVE_MANIFEST").unwrap_or_else(|_| "manifest.jsonl".to_string());
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    let line = serde_json::to_string(record).expect("manifest record serializes");
    writeln!(file, "{line}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_doc() -> FitDocument {
        FitDocument {
            schema_version: ARTIFACT_VERSION,
            points: vec![vec![0.0], vec![1.0]],
            y: vec![0.5, -0.5],
            loglik: Some(-0.25),
            log_partition: Some(0.125),
            iterations: 10,
            seed: 7,
            config: ConfigEcho {
                epsilon: 0.1,
                delta: 0.02,
                tau: 0.05,
                max_iters: Some(10_000),
                walk_steps: None,
                volume_backend: "grid".to_string(),
            },
            diagnostics: DiagnosticsDoc {
                proposals: 20,
                accepted: 10,
                acceptance_rate: Some(0.5),
                projection_hits: 0,
                sampler_delta_required: 0.001,
                sampler_delta_used: 0.02,
                volume_delta_achieved: 0.0,
                certify_delta: 0.002,
            },
        }
    }

    #[test]
    fn document_round_trips_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fit.json");
        let doc = sample_doc();
        save_document(&path, &doc).unwrap();
        let back = load_document(&path).unwrap();
        assert_eq!(back.y, doc.y);
        assert_eq!(back.points, doc.points);
        assert_eq!(back.loglik, doc.loglik);
        assert_eq!(back.seed, doc.seed);
    }

    #[test]
    fn document_uses_camel_case_keys() {
        let text = serde_json::to_string(&sample_doc()).unwrap();
        assert!(text.contains("\"schemaVersion\":1"), "got {text}");
        assert!(text.contains("\"logPartition\""));
        assert!(text.contains("\"acceptanceRate\""));
        assert!(!text.contains("schema_version"));
    }

    #[test]
    fn version_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fit.json");
        let mut doc = sample_doc();
        doc.schema_version = 99;
        save_document(&path, &doc).unwrap();
        let err = load_document(&path).unwrap_err();
        assert!(err.contains("schemaVersion 99"), "got {err}");
    }

    #[test]
    fn mismatched_heights_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fit.json");
        let mut doc = sample_doc();
        doc.y.push(0.0);
        save_document(&path, &doc).unwrap();
        assert!(load_document(&path).is_err());
    }
}
