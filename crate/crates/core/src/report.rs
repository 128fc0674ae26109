//! Post-hoc campaign reports rendered straight from the on-disk log.
//! Reading is the only side effect; re-running changes nothing.

use std::path::{Path, PathBuf};

use crate::campaign::CampaignLog;
use crate::storage::{load_log, StorageError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Csv,
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("campaign log at {0} has no iterations")]
    EmptyCampaign(PathBuf),
    #[error(transparent)]
    Storage(#[from] StorageError),
}

/// KL values carry 6 significant digits everywhere in a report.
fn format_kl(x: f64) -> String {
    format!("{x:.5e}")
}

fn ansatz_cell(tags: &[u8]) -> String {
    format!("{tags:?}")
}

struct Row {
    iteration: usize,
    ansatz: String,
    kl_mean: String,
    kl_min: String,
    kl_max: String,
    params: usize,
    depth: usize,
    seconds: String,
}

pub fn emit_report(log_dir: &Path, format: ReportFormat) -> Result<String, ReportError> {
    let (manifest, records) = load_log(log_dir)?;
    if records.is_empty() {
        return Err(ReportError::EmptyCampaign(log_dir.to_path_buf()));
    }

    let rows: Vec<Row> = records
        .iter()
        .zip(&manifest.iterations)
        .map(|(record, entry)| Row {
            iteration: record.iteration,
            ansatz: ansatz_cell(&record.spec.tags()),
            kl_mean: format_kl(record.kl_mean),
            kl_min: format_kl(record.kl_min),
            kl_max: format_kl(record.kl_max),
            params: record.feedback.ansatz_parameter_count,
            depth: record.feedback.ansatz_depth,
            seconds: format!("{:.3}", entry.seconds),
        })
        .collect();

    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            out.push_str("iteration,ansatz,kl_mean,kl_min,kl_max,params,depth,seconds\n");
            for r in &rows {
                out.push_str(&format!(
                    "{},\"{}\",{},{},{},{},{},{}\n",
                    r.iteration, r.ansatz, r.kl_mean, r.kl_min, r.kl_max, r.params, r.depth,
                    r.seconds
                ));
            }
        }
        ReportFormat::Table => {
            let ansatz_width = rows
                .iter()
                .map(|r| r.ansatz.len())
                .chain(std::iter::once("ansatz".len()))
                .max()
                .unwrap();
            out.push_str(&format!(
                "{:>9}  {:<aw$}  {:>11}  {:>11}  {:>11}  {:>6}  {:>5}  {:>9}\n",
                "iteration",
                "ansatz",
                "kl_mean",
                "kl_min",
                "kl_max",
                "params",
                "depth",
                "seconds",
                aw = ansatz_width,
            ));
            for r in &rows {
                out.push_str(&format!(
                    "{:>9}  {:<aw$}  {:>11}  {:>11}  {:>11}  {:>6}  {:>5}  {:>9}\n",
                    r.iteration,
                    r.ansatz,
                    r.kl_mean,
                    r.kl_min,
                    r.kl_max,
                    r.params,
                    r.depth,
                    r.seconds,
                    aw = ansatz_width,
                ));
            }
            let log = CampaignLog::from_records(records);
            let best = log.best.expect("non-empty log has a best entry");
            out.push_str(&format!(
                "best: iteration {}, ansatz {}, final KL {}, {} parameters, depth {}\n",
                best.iteration,
                ansatz_cell(&best.spec.tags()),
                format_kl(best.final_kl),
                best.parameter_count,
                best.depth,
            ));
        }
    }
    Ok(out)
}
