//! Report files:
//!
//! - `win_matrix_<scenario>_<round>.json`: a serialized [`WinMatrix`].
//! - `gains_<scenario>_<round>_<method>.csv`: `dataset,gain,p,filtered`.
//! - `curves_<scenario>_<dataset>.csv`: `strategy,round,mean,stderr`.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use super::{al_curves, methods_in, relative_gains, win_matrix};
use crate::al_loop::{Scenario, TrialRecord};
use crate::strategies::StrategyId;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOptions {
    /// Round for win matrices and gains; defaults per scenario.
    pub round: Option<usize>,
    pub win_p: f64,
    pub gain_p: f64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            round: None,
            win_p: 0.01,
            gain_p: 0.1,
        }
    }
}

fn write_csv(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes every report file for each scenario present in `records` and
/// returns the paths written, in order.
pub fn write_reports(records: &[TrialRecord], out_dir: &Path, opts: &ReportOptions) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let scenarios: BTreeSet<Scenario> = records.iter().map(|r| r.scenario).collect();
    let mut written = Vec::new();
    for scenario in scenarios {
        let round = opts.round.unwrap_or(scenario.default_report_round());

        let wm = win_matrix(records, scenario, round, opts.win_p);
        let path = out_dir.join(format!("win_matrix_{scenario}_{round}.json"));
        let mut json = serde_json::to_string_pretty(&wm)?;
        json.push('\n');
        fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
        written.push(path);

        for method in methods_in(records, scenario).into_iter().filter(|&m| m != StrategyId::Random) {
            let g = relative_gains(records, scenario, method, round, opts.gain_p);
            let path = out_dir.join(format!("gains_{scenario}_{round}_{method}.csv"));
            let rows = g
                .entries
                .into_iter()
                .map(|e| vec![e.dataset, e.gain.to_string(), e.p.to_string(), e.filtered.to_string()])
                .collect();
            write_csv(&path, &["dataset", "gain", "p", "filtered"], rows)?;
            written.push(path);
        }

        let datasets: BTreeSet<&str> = records
            .iter()
            .filter(|r| r.scenario == scenario)
            .map(|r| r.dataset_id.as_str())
            .collect();
        for dataset in datasets {
            let path = out_dir.join(format!("curves_{scenario}_{dataset}.csv"));
            let rows = al_curves(records, scenario, dataset, &[])
                .into_iter()
                .map(|c| vec![c.strategy.to_string(), c.round.to_string(), c.mean.to_string(), c.stderr.to_string()])
                .collect();
            write_csv(&path, &["strategy", "round", "mean", "stderr"], rows)?;
            written.push(path);
        }
    }
    Ok(written)
}
