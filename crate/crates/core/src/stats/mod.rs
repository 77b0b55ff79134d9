//! Benchmark statistics: Welch's t-test, pairwise win matrices, relative
//! gains over random sampling and per-round AL curves.

mod report;
mod special;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::al_loop::{Scenario, TrialRecord};
use crate::strategies::StrategyId;
use crate::{Error, Result};

pub use report::{write_reports, ReportOptions};
pub use special::{ln_gamma, reg_inc_beta, student_t_two_sided};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchResult {
    pub t: f64,
    pub df: f64,
    /// Two-sided.
    pub p: f64,
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

/// Welch's unequal-variance two-sample t-test.
///
/// With both variances zero the result is a tie (`p = 1`) when the means
/// agree and a certain difference (`p = 0`) otherwise.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "Welch's test needs at least 2 values per sample, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (variance(a) / na, variance(b) / nb);
    let se2 = va + vb;
    if se2 == 0.0 {
        let df = na + nb - 2.0;
        return Ok(if ma == mb {
            WelchResult { t: 0.0, df, p: 1.0 }
        } else {
            WelchResult {
                t: if ma > mb { f64::INFINITY } else { f64::NEG_INFINITY },
                df,
                p: 0.0,
            }
        });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    Ok(WelchResult {
        t,
        df,
        p: student_t_two_sided(t, df),
    })
}

/// Test accuracies per (dataset, strategy) at one scenario and round.
pub(crate) fn samples_at(
    records: &[TrialRecord],
    scenario: Scenario,
    round: usize,
) -> BTreeMap<String, BTreeMap<StrategyId, Vec<f64>>> {
    let mut out: BTreeMap<String, BTreeMap<StrategyId, Vec<(usize, f64)>>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.scenario == scenario && r.round == round) {
        out.entry(r.dataset_id.clone())
            .or_default()
            .entry(r.strategy_id)
            .or_default()
            .push((r.trial, r.test_accuracy));
    }
    out.into_iter()
        .map(|(d, by)| {
            let by = by
                .into_iter()
                .map(|(s, mut v)| {
                    v.sort_by_key(|&(t, _)| t);
                    (s, v.into_iter().map(|(_, a)| a).collect())
                })
                .collect();
            (d, by)
        })
        .collect()
}

fn methods_in(records: &[TrialRecord], scenario: Scenario) -> Vec<StrategyId> {
    let set: BTreeSet<StrategyId> = records
        .iter()
        .filter(|r| r.scenario == scenario)
        .map(|r| r.strategy_id)
        .collect();
    set.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WinEntry {
    pub wins: usize,
    /// Datasets where the pair differs significantly.
    pub decided: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinMatrix {
    pub scenario: Scenario,
    pub round: usize,
    pub p_threshold: f64,
    pub methods: Vec<StrategyId>,
    /// Datasets that reached `round` for every method.
    pub datasets: Vec<String>,
    /// `entries[i][j]`: how often method i beat method j; `None` on the
    /// diagonal.
    pub entries: Vec<Vec<Option<WinEntry>>>,
}

impl WinEntry {
    /// `"wins/decided"`, or an em-dash when nothing was decided.
    pub fn render(&self) -> String {
        if self.decided == 0 {
            "\u{2014}".to_string()
        } else {
            format!("{}/{}", self.wins, self.decided)
        }
    }
}

/// Pairwise wins at `round`: on each dataset, method i beats j when Welch's
/// test gives `p < p_threshold` and i has the higher mean. Datasets where
/// some method has no record at `round` are left out.
pub fn win_matrix(records: &[TrialRecord], scenario: Scenario, round: usize, p_threshold: f64) -> WinMatrix {
    let methods = methods_in(records, scenario);
    let m = methods.len();
    let mut wins = vec![vec![0usize; m]; m];
    let mut datasets = Vec::new();
    for (dataset, by) in samples_at(records, scenario, round) {
        if methods.iter().any(|s| !by.contains_key(s)) {
            continue;
        }
        datasets.push(dataset);
        for i in 0..m {
            for j in i + 1..m {
                let (a, b) = (&by[&methods[i]], &by[&methods[j]]);
                let Ok(w) = welch_t_test(a, b) else { continue };
                if w.p < p_threshold {
                    if mean(a) > mean(b) {
                        wins[i][j] += 1;
                    } else {
                        wins[j][i] += 1;
                    }
                }
            }
        }
    }
    let entries = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    (i != j).then(|| WinEntry {
                        wins: wins[i][j],
                        decided: wins[i][j] + wins[j][i],
                    })
                })
                .collect()
        })
        .collect();
    WinMatrix {
        scenario,
        round,
        p_threshold,
        methods,
        datasets,
        entries,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainEntry {
    pub dataset: String,
    /// `100 * (mean_method - mean_random) / mean_random`.
    pub gain: f64,
    pub p: f64,
    /// Whether the entry survives the p-value filter.
    pub filtered: bool,
}

/// Quartiles and 1.5·IQR whiskers for box rendering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainSummary {
    pub method: StrategyId,
    pub filter_p: f64,
    pub entries: Vec<GainEntry>,
    pub unfiltered_box: Option<BoxStats>,
    pub filtered_box: Option<BoxStats>,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn box_stats(values: &[f64]) -> Option<BoxStats> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let (q1, median, q3) = (quantile(&v, 0.25), quantile(&v, 0.5), quantile(&v, 0.75));
    let iqr = q3 - q1;
    let whisker_low = *v.iter().find(|&&x| x >= q1 - 1.5 * iqr).unwrap();
    let whisker_high = *v.iter().rev().find(|&&x| x <= q3 + 1.5 * iqr).unwrap();
    Some(BoxStats {
        q1,
        median,
        q3,
        whisker_low,
        whisker_high,
    })
}

/// Relative percent gain of `method` over random per dataset at `round`.
/// Datasets where random's mean accuracy is zero, or either method lacks
/// the round, are left out. Ties in Welch's test count as `p = 1`.
pub fn relative_gains(
    records: &[TrialRecord],
    scenario: Scenario,
    method: StrategyId,
    round: usize,
    filter_p: f64,
) -> GainSummary {
    let mut entries = Vec::new();
    for (dataset, by) in samples_at(records, scenario, round) {
        let (Some(m), Some(r)) = (by.get(&method), by.get(&StrategyId::Random)) else {
            continue;
        };
        let base = mean(r);
        if base <= 0.0 {
            continue;
        }
        let p = welch_t_test(m, r).map(|w| w.p).unwrap_or(1.0);
        entries.push(GainEntry {
            dataset,
            gain: 100.0 * (mean(m) - base) / base,
            p,
            filtered: p < filter_p,
        });
    }
    let all: Vec<f64> = entries.iter().map(|e| e.gain).collect();
    let kept: Vec<f64> = entries.iter().filter(|e| e.filtered).map(|e| e.gain).collect();
    GainSummary {
        method,
        filter_p,
        unfiltered_box: box_stats(&all),
        filtered_box: box_stats(&kept),
        entries,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub strategy: StrategyId,
    pub round: usize,
    pub mean: f64,
    /// Standard error of the mean over trials; 0 for a single trial.
    pub stderr: f64,
}

/// Mean test accuracy and its standard error per strategy and round on one
/// dataset. An empty `strategies` means every strategy present.
pub fn al_curves(records: &[TrialRecord], scenario: Scenario, dataset: &str, strategies: &[StrategyId]) -> Vec<CurvePoint> {
    let mut groups: BTreeMap<(StrategyId, usize), Vec<f64>> = BTreeMap::new();
    for r in records
        .iter()
        .filter(|r| r.scenario == scenario && r.dataset_id == dataset)
        .filter(|r| strategies.is_empty() || strategies.contains(&r.strategy_id))
    {
        groups.entry((r.strategy_id, r.round)).or_default().push(r.test_accuracy);
    }
    groups
        .into_iter()
        .map(|((strategy, round), v)| CurvePoint {
            strategy,
            round,
            mean: mean(&v),
            stderr: if v.len() < 2 { 0.0 } else { (variance(&v) / v.len() as f64).sqrt() },
        })
        .collect()
}
