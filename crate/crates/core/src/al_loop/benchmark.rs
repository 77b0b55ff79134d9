use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{mpsc, Arc, OnceLock};

use ndarray::Axis;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::oracle::audit;
use super::trial::{run_trial, TrialInputs, TrialOutput};
use super::{derive_seed, Scenario, TrialOptions, TrialRecord};
use crate::dataset::{make_split, Dataset, TrialSplit};
use crate::net::{ModelBundle, NetConfig};
use crate::scarf::pretrain;
use crate::strategies::StrategyId;
use crate::{Error, Result};

pub const LEDGER_FILE: &str = "ledger.jsonl";
pub const RECORDS_FILE: &str = "records.jsonl";

/// Output subdirectory of a pre-training arm.
pub fn arm_dir(pretrain: bool) -> &'static str {
    if pretrain {
        "pretrain"
    } else {
        "no_pretrain"
    }
}

/// One trial run of the grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub dataset_id: String,
    pub strategy_id: StrategyId,
    pub scenario: Scenario,
    pub pretrain: bool,
    pub trial: usize,
}

pub struct BenchmarkPlan {
    pub datasets: Vec<Dataset>,
    pub strategies: Vec<StrategyId>,
    pub scenarios: Vec<Scenario>,
    pub trials: usize,
    /// Pre-training arms to run (`false` = without, `true` = with).
    pub arms: Vec<bool>,
    pub master_seed: u64,
    pub workers: usize,
    pub options: TrialOptions,
}

impl BenchmarkPlan {
    /// Cells in grid order: dataset, scenario, arm, trial, strategy.
    pub fn cells(&self) -> Vec<CellKey> {
        let mut out = Vec::new();
        for ds in &self.datasets {
            for &scenario in &self.scenarios {
                for &pretrain in &self.arms {
                    for trial in 0..self.trials {
                        for &strategy_id in &self.strategies {
                            out.push(CellKey {
                                dataset_id: ds.id.clone(),
                                strategy_id,
                                scenario,
                                pretrain,
                                trial,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub key: CellKey,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchmarkSummary {
    pub executed: usize,
    /// Cells already in the ledger.
    pub skipped: usize,
    pub failures: Vec<CellFailure>,
    /// Label-access audit findings over all executed cells.
    pub audit_violations: usize,
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::io(path, e)),
    };
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(v) => out.push(v),
            // a torn final line from an interrupted write
            Err(e) => log::warn!("{}:{}: skipping unreadable line: {e}", path.display(), i + 1),
        }
    }
    Ok(out)
}

pub fn read_ledger(out_dir: &Path) -> Result<Vec<CellKey>> {
    read_jsonl(&out_dir.join(LEDGER_FILE))
}

pub fn read_records(path: &Path) -> Result<Vec<TrialRecord>> {
    read_jsonl(path)
}

fn record_key(r: &TrialRecord, pretrain: bool) -> CellKey {
    CellKey {
        dataset_id: r.dataset_id.clone(),
        strategy_id: r.strategy_id,
        scenario: r.scenario,
        pretrain,
        trial: r.trial,
    }
}

fn write_records(path: &Path, records: &[TrialRecord]) -> Result<()> {
    let tmp = path.with_extension("jsonl.tmp");
    {
        let mut w = BufWriter::new(File::create(&tmp).map_err(|e| Error::io(&tmp, e))?);
        for r in records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n").map_err(|e| Error::io(&tmp, e))?;
        }
        w.flush().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Keeps only records whose cell is in `keep`, ordered by `order`.
fn rewrite_records(path: &Path, pretrain: bool, keep: &HashSet<CellKey>, order: &HashMap<CellKey, usize>) -> Result<()> {
    if !path.exists() {
        return Ok(());
    }
    let mut records: Vec<TrialRecord> = read_records(path)?
        .into_iter()
        .filter(|r| keep.contains(&record_key(r, pretrain)))
        .collect();
    records.sort_by_key(|r| (order.get(&record_key(r, pretrain)).copied().unwrap_or(usize::MAX), r.round));
    write_records(path, &records)
}

fn append_line<T: Serialize>(file: &mut File, path: &Path, value: &T) -> Result<()> {
    let mut line = serde_json::to_vec(value)?;
    line.push(b'\n');
    file.write_all(&line).map_err(|e| Error::io(path, e))
}

fn open_append(path: &Path) -> Result<File> {
    OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))
}

type Pretrained = OnceLock<std::result::Result<Arc<ModelBundle>, String>>;

fn pretrain_backbone(ds: &Dataset, split: &TrialSplit, trial: usize, plan: &BenchmarkPlan) -> Result<ModelBundle> {
    let seed = derive_seed(plan.master_seed, &["pretrain", &ds.id, &trial.to_string()]);
    let net = NetConfig {
        n_classes: ds.n_classes,
        ..plan.options.net.clone()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = ModelBundle::init(ds.n_features(), &net, &mut rng)?;
    model.attach_pretrain_head(&net, &mut rng);
    let pool = ds.x.select(Axis(0), &split.train_idx);
    let out = pretrain(model, pool.view(), &ds.feature_groups, &plan.options.pretrain, derive_seed(seed, &["run"]))?;
    log::info!(
        "pre-trained {} trial {trial}: {} epochs, best {}",
        ds.id,
        out.epochs_run,
        out.best_epoch
    );
    Ok(out.model)
}

/// Runs every cell of `plan` not yet in `out_dir`'s ledger.
///
/// Records go to `out_dir/<arm>/records.jsonl` and finished cells to
/// `out_dir/ledger.jsonl`. Results are written in grid order by a single
/// writer, records first and ledger entry last, so records of a cell missing
/// from the ledger are discarded and re-run on resume. Splits depend only on
/// (dataset, trial) and seed sets on (dataset, scenario, trial), so every
/// strategy in a cell sees the same data.
pub fn run_benchmark(plan: &BenchmarkPlan, out_dir: &Path) -> Result<BenchmarkSummary> {
    if plan.trials == 0 || plan.strategies.is_empty() || plan.scenarios.is_empty() || plan.arms.is_empty() {
        return Err(Error::InvalidArgument("benchmark grid is empty".into()));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let cells = plan.cells();
    let order: HashMap<CellKey, usize> = cells.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
    let done: HashSet<CellKey> = read_ledger(out_dir)?.into_iter().collect();

    let mut record_paths: HashMap<bool, PathBuf> = HashMap::new();
    for &arm in &plan.arms {
        let dir = out_dir.join(arm_dir(arm));
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let path = dir.join(RECORDS_FILE);
        rewrite_records(&path, arm, &done, &order)?;
        record_paths.insert(arm, path);
    }

    let todo: Vec<(usize, CellKey)> = cells
        .iter()
        .cloned()
        .enumerate()
        .filter(|(_, k)| !done.contains(k))
        .collect();
    let mut summary = BenchmarkSummary {
        skipped: cells.len() - todo.len(),
        ..BenchmarkSummary::default()
    };
    log::info!("{} cells to run, {} already complete", todo.len(), summary.skipped);

    let datasets: HashMap<&str, &Dataset> = plan.datasets.iter().map(|d| (d.id.as_str(), d)).collect();
    let mut splits: HashMap<(String, usize), Result<TrialSplit>> = HashMap::new();
    let mut pretrained: HashMap<(String, usize), Pretrained> = HashMap::new();
    for (_, key) in &todo {
        let id = (key.dataset_id.clone(), key.trial);
        splits.entry(id.clone()).or_insert_with(|| {
            let seed = derive_seed(plan.master_seed, &["split", &key.dataset_id, &key.trial.to_string()]);
            make_split(datasets[key.dataset_id.as_str()], seed)
        });
        if key.pretrain {
            pretrained.entry(id).or_default();
        }
    }

    let run_cell = |key: &CellKey| -> Result<TrialOutput> {
        let ds = datasets[key.dataset_id.as_str()];
        let split = splits[&(key.dataset_id.clone(), key.trial)]
            .as_ref()
            .map_err(|e| Error::InvalidDataset(e.to_string()))?;
        let backbone = if key.pretrain {
            let slot = &pretrained[&(key.dataset_id.clone(), key.trial)];
            let got = slot.get_or_init(|| pretrain_backbone(ds, split, key.trial, plan).map(Arc::new).map_err(|e| e.to_string()));
            Some(got.clone().map_err(|e| Error::InvalidArgument(format!("pre-training failed: {e}")))?)
        } else {
            None
        };
        run_trial(&TrialInputs {
            dataset: ds,
            split,
            strategy: key.strategy_id,
            scenario: key.scenario.config(),
            trial: key.trial,
            master_seed: plan.master_seed,
            pretrained: backbone.as_deref(),
            options: &plan.options,
        })
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
    let ledger_path = out_dir.join(LEDGER_FILE);
    let mut ledger = open_append(&ledger_path)?;
    let mut files: HashMap<bool, File> = HashMap::new();
    for (&arm, path) in &record_paths {
        files.insert(arm, open_append(path)?);
    }

    let (tx, rx) = mpsc::channel::<(usize, Result<TrialOutput>)>();
    let write_result: Result<()> = std::thread::scope(|s| {
        s.spawn(|| {
            pool.install(|| {
                todo.par_iter().enumerate().for_each_with(tx, |tx, (slot, (_, key))| {
                    let _ = tx.send((slot, run_cell(key)));
                });
            })
        });
        let mut pending: BTreeMap<usize, Result<TrialOutput>> = BTreeMap::new();
        let mut next = 0;
        for (slot, res) in rx {
            pending.insert(slot, res);
            while let Some(res) = pending.remove(&next) {
                let key = &todo[next].1;
                next += 1;
                match res {
                    Ok(out) => {
                        let path = &record_paths[&key.pretrain];
                        let file = files.get_mut(&key.pretrain).unwrap();
                        for r in &out.records {
                            append_line(file, path, r)?;
                        }
                        file.flush().map_err(|e| Error::io(path, e))?;
                        append_line(&mut ledger, &ledger_path, key)?;
                        ledger.flush().map_err(|e| Error::io(&ledger_path, e))?;
                        let violations = audit(&out.log);
                        if !violations.is_empty() {
                            log::error!("label audit failed for {key:?}: {violations:?}");
                        }
                        summary.audit_violations += violations.len();
                        summary.executed += 1;
                        log::info!(
                            "done {} {} {} {} trial {} ({}/{})",
                            key.dataset_id,
                            key.strategy_id,
                            key.scenario,
                            arm_dir(key.pretrain),
                            key.trial,
                            next,
                            todo.len()
                        );
                    }
                    Err(e) => {
                        log::error!("cell {key:?} failed: {e}");
                        summary.failures.push(CellFailure {
                            key: key.clone(),
                            error: e.to_string(),
                        });
                    }
                }
            }
        }
        Ok(())
    });
    write_result?;

    // a resumed run appends out of grid order; restore the canonical order
    let complete: HashSet<CellKey> = read_ledger(out_dir)?.into_iter().collect();
    for (&arm, path) in &record_paths {
        rewrite_records(path, arm, &complete, &order)?;
    }
    Ok(summary)
}
