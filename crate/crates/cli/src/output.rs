//! CSV and JSON writers. All float formatting goes through the shortest
//! round-trip representation, so outputs are byte-deterministic.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use ocsm_core::RunRecord;

/// One CSV row of the run log.
#[derive(Debug, Serialize)]
struct CsvRow<'a> {
    run_id: &'a str,
    algorithm: &'a str,
    #[serde(rename = "T")]
    horizon: usize,
    #[serde(rename = "K")]
    block_size: usize,
    seed: u64,
    t: usize,
    block: usize,
    reward: f64,
    cum_reward: f64,
    lo_steps: u64,
    grad_evals: u64,
    comms: u64,
    alpha_regret: f64,
}

/// Write one record (one node) as a CSV file with the fixed schema.
pub fn write_record_csv(path: &Path, run_id: &str, record: &RunRecord) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    for (i, row) in record.rounds.iter().enumerate() {
        let regret = record.alpha_regret.get(i).copied().unwrap_or(f64::NAN);
        wtr.serialize(CsvRow {
            run_id,
            algorithm: &record.algorithm,
            horizon: record.horizon,
            block_size: record.block_size,
            seed: record.seed,
            t: row.t,
            block: row.block,
            reward: row.reward,
            cum_reward: row.cum_reward,
            lo_steps: row.counters.lo_steps,
            grad_evals: row.counters.grad_evals,
            comms: row.counters.comms,
            alpha_regret: regret,
        })?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut file =
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let text = serde_json::to_string_pretty(value)?;
    file.write_all(text.as_bytes())?;
    file.write_all(b"\n")?;
    Ok(())
}
