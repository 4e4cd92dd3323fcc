//! Experiment orchestration: seeded multi-run experiments, sweeps over one
//! axis with shared seeds, theory checks against saved checkpoints, and the
//! gradient-check harness. Outputs are per-run directories of CSV/JSON plus
//! binary checkpoints; aggregation happens after all runs complete, in
//! config order.

pub mod config;

use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;
use thiserror::Error;

pub use config::{
    ConfigFile, DatasetSection, ExperimentConfig, SweepAxis, SweepSection, TheorySection,
};

use crate::adversarial::{AdvMethod, NormOrder};
use crate::data::{DataError, DataSource};
use crate::engine::{train, CollapseDiagnostic, EngineError, TrainReport};
use crate::gradcheck::{grad_check, GradCheckReport};
use crate::metrics::{metrics_csv_header, metrics_csv_row, MetricsRecord};
use crate::nn::{load_params, save_params, NetworkSpec, NnError, ParamSet};
use crate::theory::{expansion_residual_sweep, ExpansionReport, TheoryError};

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Version tag of summary.json files.
pub const SUMMARY_VERSION: &str = "asgan_summary_v1";
/// Version tag of sweep.json/sweep.csv files.
pub const SWEEP_VERSION: &str = "asgan_sweep_v1";
/// Version tag of timing.csv files.
pub const TIMING_CSV_VERSION: &str = "asgan_timing_v1";
/// Sample indices from here on feed the theory oracle's held-out points.
const THEORY_INDEX_OFFSET: u64 = (1 << 62) + (1 << 61);

/// Run `f` over the items with up to `workers` threads. Results come back
/// in item order regardless of scheduling.
pub fn parallel_map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync,
{
    let workers = workers.max(1).min(items.len().max(1));
    if workers <= 1 {
        return items.iter().enumerate().map(|(i, t)| f(i, t)).collect();
    }
    let next = AtomicUsize::new(0);
    let results: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= items.len() {
                    break;
                }
                let r = f(i, &items[i]);
                *results[i].lock().unwrap() = Some(r);
            });
        }
    });
    results
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("worker completed"))
        .collect()
}

// ── Aggregation ──────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BestMetrics {
    pub mmd2: f64,
    pub frechet2d: f64,
    pub mode_coverage: Option<usize>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LastKMeans {
    pub k: usize,
    pub mmd2: f64,
    pub frechet2d: f64,
    pub mode_coverage: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct WallBreakdown {
    pub clean_ms: f64,
    pub craft_ms: f64,
    pub adv_ms: f64,
    pub gen_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub collapse: Option<CollapseDiagnostic>,
    pub mode_collapse_suspected: bool,
    pub resolved_attack_epsilon: f64,
    pub final_record: Option<MetricsRecord>,
    pub best: Option<BestMetrics>,
    pub last_k_mean: Option<LastKMeans>,
    pub wall: WallBreakdown,
    /// (craft + adv) / (clean + gen) step time.
    pub overhead_fraction: f64,
}

/// Medians across the non-collapsed seeds of a run.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MedianMetrics {
    pub mmd2: f64,
    pub frechet2d: f64,
    pub mode_coverage: Option<f64>,
    pub grad_l1_mean: f64,
    pub adv_accuracy: f64,
    pub std_accuracy: f64,
    pub std_accuracy_real: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub format_version: String,
    pub config: ExperimentConfig,
    pub per_seed: Vec<SeedSummary>,
    pub median_final: Option<MedianMetrics>,
    pub median_best_mmd2: Option<f64>,
    pub median_best_frechet2d: Option<f64>,
    pub median_last_k_mmd2: Option<f64>,
    pub median_last_k_frechet2d: Option<f64>,
    pub median_wall_total_ms: f64,
    pub median_overhead_fraction: f64,
    pub collapsed_seeds: usize,
}

pub fn median(values: &mut Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

fn median_of<T, F: Fn(&T) -> Option<f64>>(items: &[T], f: F) -> Option<f64> {
    let mut vals: Vec<f64> = items.iter().filter_map(&f).collect();
    median(&mut vals)
}

fn summarize_report(
    seed: u64,
    report: &TrainReport,
    last_k: usize,
) -> SeedSummary {
    let records = &report.records;
    let final_record = records.last().cloned();
    let best = if records.is_empty() {
        None
    } else {
        Some(BestMetrics {
            mmd2: records.iter().map(|r| r.mmd2).fold(f64::INFINITY, f64::min),
            frechet2d: records
                .iter()
                .map(|r| r.frechet2d)
                .fold(f64::INFINITY, f64::min),
            mode_coverage: records
                .iter()
                .filter_map(|r| r.mode_coverage)
                .max(),
        })
    };
    let last_k_mean = if records.is_empty() {
        None
    } else {
        let k = last_k.min(records.len());
        let tail = &records[records.len() - k..];
        let kf = k as f64;
        let cov: Vec<f64> = tail
            .iter()
            .filter_map(|r| r.mode_coverage.map(|c| c as f64))
            .collect();
        Some(LastKMeans {
            k,
            mmd2: tail.iter().map(|r| r.mmd2).sum::<f64>() / kf,
            frechet2d: tail.iter().map(|r| r.frechet2d).sum::<f64>() / kf,
            mode_coverage: if cov.is_empty() {
                None
            } else {
                Some(cov.iter().sum::<f64>() / cov.len() as f64)
            },
        })
    };
    let w = &report.state.wall;
    SeedSummary {
        seed,
        collapse: report.collapse.clone(),
        mode_collapse_suspected: report.mode_collapse_suspected,
        resolved_attack_epsilon: report.resolved_attack_epsilon,
        final_record,
        best,
        last_k_mean,
        wall: WallBreakdown {
            clean_ms: w.clean.as_secs_f64() * 1e3,
            craft_ms: w.craft.as_secs_f64() * 1e3,
            adv_ms: w.adv.as_secs_f64() * 1e3,
            gen_ms: w.gen.as_secs_f64() * 1e3,
            total_ms: w.total().as_secs_f64() * 1e3,
        },
        overhead_fraction: w.overhead_fraction(),
    }
}

// ── run ──────────────────────────────────────────────────────────────

/// Train one seed into `dir`: metrics.csv, timing.csv, and both network
/// checkpoints. Returns the per-seed summary.
pub fn run_seed(
    exp: &ExperimentConfig,
    data: &dyn DataSource,
    seed: u64,
    dir: &Path,
    last_k: usize,
) -> Result<SeedSummary, RunnerError> {
    fs::create_dir_all(dir)?;
    let mut train_cfg = exp.train.clone();
    train_cfg.seed = seed;

    let mut metrics_out = metrics_csv_header();
    let mut timing_out = format!(
        "# {TIMING_CSV_VERSION}\niter,wall_ms_clean,wall_ms_craft,wall_ms_adv,wall_ms_gen\n"
    );
    let report = train(&train_cfg, &exp.adv, data, &exp.eval, |rec, tim| {
        metrics_out.push_str(&metrics_csv_row(rec));
        timing_out.push_str(&format!(
            "{},{:.3},{:.3},{:.3},{:.3}\n",
            tim.iter, tim.wall_ms_clean, tim.wall_ms_craft, tim.wall_ms_adv, tim.wall_ms_gen
        ));
    })?;
    fs::write(dir.join("metrics.csv"), &metrics_out)?;
    fs::write(dir.join("timing.csv"), &timing_out)?;
    save_params(&dir.join("checkpoint_d.bin"), &report.state.d_params)?;
    save_params(&dir.join("checkpoint_g.bin"), &report.state.g_params)?;
    Ok(summarize_report(seed, &report, last_k))
}

/// Execute every seed of the experiment (up to `workers` concurrently) and
/// write `summary.json` in the output directory.
pub fn run(exp: &ExperimentConfig) -> Result<RunSummary, RunnerError> {
    run_with_last_k(exp, 5)
}

pub fn run_with_last_k(exp: &ExperimentConfig, last_k: usize) -> Result<RunSummary, RunnerError> {
    fs::create_dir_all(&exp.out_dir)?;
    let data = exp.dataset.build()?;
    let results = parallel_map(&exp.seeds, exp.workers, |_, &seed| {
        let dir = exp.out_dir.join(format!("seed_{seed}"));
        run_seed(exp, data.as_ref(), seed, &dir, last_k)
    });
    let mut per_seed = Vec::with_capacity(results.len());
    for r in results {
        per_seed.push(r?);
    }
    let summary = build_summary(exp, per_seed, last_k);
    let json = serde_json::to_string_pretty(&summary)?;
    fs::write(exp.out_dir.join("summary.json"), json)?;
    Ok(summary)
}

fn build_summary(exp: &ExperimentConfig, per_seed: Vec<SeedSummary>, _last_k: usize) -> RunSummary {
    let ok: Vec<&SeedSummary> = per_seed.iter().filter(|s| s.collapse.is_none()).collect();
    let median_final = if ok.iter().any(|s| s.final_record.is_some()) {
        Some(MedianMetrics {
            mmd2: median_of(&ok, |s| s.final_record.as_ref().map(|r| r.mmd2))
                .unwrap_or(f64::NAN),
            frechet2d: median_of(&ok, |s| s.final_record.as_ref().map(|r| r.frechet2d))
                .unwrap_or(f64::NAN),
            mode_coverage: median_of(&ok, |s| {
                s.final_record
                    .as_ref()
                    .and_then(|r| r.mode_coverage.map(|c| c as f64))
            }),
            grad_l1_mean: median_of(&ok, |s| s.final_record.as_ref().map(|r| r.grad_l1_mean))
                .unwrap_or(f64::NAN),
            adv_accuracy: median_of(&ok, |s| s.final_record.as_ref().map(|r| r.adv_accuracy))
                .unwrap_or(f64::NAN),
            std_accuracy: median_of(&ok, |s| s.final_record.as_ref().map(|r| r.std_accuracy))
                .unwrap_or(f64::NAN),
            std_accuracy_real: median_of(&ok, |s| {
                s.final_record.as_ref().map(|r| r.std_accuracy_real)
            })
            .unwrap_or(f64::NAN),
        })
    } else {
        None
    };
    let collapsed = per_seed.len() - ok.len();
    RunSummary {
        format_version: SUMMARY_VERSION.into(),
        config: exp.clone(),
        median_final,
        median_best_mmd2: median_of(&ok, |s| s.best.as_ref().map(|b| b.mmd2)),
        median_best_frechet2d: median_of(&ok, |s| s.best.as_ref().map(|b| b.frechet2d)),
        median_last_k_mmd2: median_of(&ok, |s| s.last_k_mean.as_ref().map(|l| l.mmd2)),
        median_last_k_frechet2d: median_of(&ok, |s| s.last_k_mean.as_ref().map(|l| l.frechet2d)),
        median_wall_total_ms: median_of(&ok, |s| Some(s.wall.total_ms)).unwrap_or(f64::NAN),
        median_overhead_fraction: median_of(&ok, |s| Some(s.overhead_fraction))
            .unwrap_or(f64::NAN),
        collapsed_seeds: collapsed,
        per_seed,
    }
}

// ── sweep ────────────────────────────────────────────────────────────

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub axis: String,
    pub value: String,
    pub median_final_mmd2: Option<f64>,
    pub median_final_frechet2d: Option<f64>,
    pub median_final_coverage: Option<f64>,
    pub median_best_mmd2: Option<f64>,
    pub median_best_frechet2d: Option<f64>,
    pub median_last_k_mmd2: Option<f64>,
    pub median_last_k_frechet2d: Option<f64>,
    pub median_wall_total_ms: f64,
    pub median_overhead_fraction: f64,
    pub collapsed_seeds: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub format_version: String,
    pub axis: String,
    pub last_k: usize,
    pub rows: Vec<SweepRow>,
}

fn method_name(m: AdvMethod) -> &'static str {
    match m {
        AdvMethod::None => "none",
        AdvMethod::Fgsm => "fgsm",
        AdvMethod::Pgd => "pgd",
        AdvMethod::Gaussian => "gaussian",
        AdvMethod::DoubleUpdate => "double_update",
    }
}

/// Run one config per axis value, all values sharing the experiment's seed
/// list, then aggregate into sweep.csv + sweep.json.
pub fn sweep(exp: &ExperimentConfig, section: &SweepSection) -> Result<SweepSummary, RunnerError> {
    let axis = section.parse_axis()?;
    fs::create_dir_all(&exp.out_dir)?;
    let mut rows = Vec::new();
    let (axis_name, variants): (&str, Vec<(String, ExperimentConfig)>) = match &axis {
        SweepAxis::Epsilon(values) => (
            "epsilon",
            values
                .iter()
                .enumerate()
                .map(|(i, &eps)| {
                    let mut e = exp.clone();
                    e.adv.epsilon = eps;
                    e.out_dir = exp.out_dir.join(format!("epsilon_{i:02}_{eps}"));
                    (format!("{eps}"), e)
                })
                .collect(),
        ),
        SweepAxis::Method(values) => (
            "method",
            values
                .iter()
                .enumerate()
                .map(|(i, &m)| {
                    let mut e = exp.clone();
                    e.adv.method = m;
                    e.out_dir = exp.out_dir.join(format!("method_{i:02}_{}", method_name(m)));
                    (method_name(m).to_string(), e)
                })
                .collect(),
        ),
        SweepAxis::PgdSteps(values) => (
            "pgd_steps",
            values
                .iter()
                .enumerate()
                .map(|(i, &k)| {
                    let mut e = exp.clone();
                    e.adv.method = AdvMethod::Pgd;
                    e.adv.pgd_steps = k;
                    e.out_dir = exp.out_dir.join(format!("pgd_steps_{i:02}_{k}"));
                    (format!("{k}"), e)
                })
                .collect(),
        ),
    };

    for (value, variant) in &variants {
        let summary = run_with_last_k(variant, section.last_k)?;
        rows.push(SweepRow {
            axis: axis_name.to_string(),
            value: value.clone(),
            median_final_mmd2: summary.median_final.as_ref().map(|m| m.mmd2),
            median_final_frechet2d: summary.median_final.as_ref().map(|m| m.frechet2d),
            median_final_coverage: summary.median_final.as_ref().and_then(|m| m.mode_coverage),
            median_best_mmd2: summary.median_best_mmd2,
            median_best_frechet2d: summary.median_best_frechet2d,
            median_last_k_mmd2: summary.median_last_k_mmd2,
            median_last_k_frechet2d: summary.median_last_k_frechet2d,
            median_wall_total_ms: summary.median_wall_total_ms,
            median_overhead_fraction: summary.median_overhead_fraction,
            collapsed_seeds: summary.collapsed_seeds,
        });
    }

    let summary = SweepSummary {
        format_version: SWEEP_VERSION.into(),
        axis: axis_name.to_string(),
        last_k: section.last_k,
        rows,
    };
    let mut csv = format!(
        "# {SWEEP_VERSION}\naxis,value,median_final_mmd2,median_final_frechet2d,\
median_final_coverage,median_best_mmd2,median_best_frechet2d,median_last_k_mmd2,\
median_last_k_frechet2d,median_wall_total_ms,median_overhead_fraction,collapsed_seeds\n"
    );
    let cell = |v: &Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in &summary.rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.axis,
            r.value,
            cell(&r.median_final_mmd2),
            cell(&r.median_final_frechet2d),
            cell(&r.median_final_coverage),
            cell(&r.median_best_mmd2),
            cell(&r.median_best_frechet2d),
            cell(&r.median_last_k_mmd2),
            cell(&r.median_last_k_frechet2d),
            r.median_wall_total_ms,
            r.median_overhead_fraction,
            r.collapsed_seeds
        ));
    }
    fs::write(exp.out_dir.join("sweep.csv"), csv)?;
    fs::write(
        exp.out_dir.join("sweep.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    Ok(summary)
}

// ── theory check ─────────────────────────────────────────────────────

/// Reconstruct a discriminator spec from checkpoint dimensions (hidden
/// layers carry the standard LeakyReLU slope).
pub fn discriminator_spec_from_params(params: &ParamSet) -> Result<NetworkSpec, RunnerError> {
    if params.layers.is_empty() {
        return Err(RunnerError::Config("checkpoint has no layers".into()));
    }
    let hidden: Vec<usize> = params.layers[..params.layers.len() - 1]
        .iter()
        .map(|l| l.out_dim)
        .collect();
    let spec = NetworkSpec::discriminator(params.layers[0].in_dim, &hidden);
    if !params.matches_spec(&spec) {
        return Err(RunnerError::Config(
            "checkpoint dimensions do not describe a discriminator MLP".into(),
        ));
    }
    Ok(spec)
}

/// Load a discriminator checkpoint, evaluate the expansion-residual sweep
/// on held-out real points for the requested norm order(s), and write the
/// reports as a JSON array.
pub fn theory_check(
    dataset: &DatasetSection,
    section: &TheorySection,
    checkpoint: &Path,
    out_path: &Path,
) -> Result<Vec<ExpansionReport>, RunnerError> {
    if !checkpoint.exists() {
        return Err(RunnerError::Config(format!(
            "checkpoint {} does not exist",
            checkpoint.display()
        )));
    }
    let params = load_params(checkpoint)?;
    let spec = discriminator_spec_from_params(&params)?;
    if spec.input_dim() > 3 {
        return Err(RunnerError::Config(format!(
            "theory oracle needs input dim <= 3, checkpoint has {}",
            spec.input_dim()
        )));
    }
    let data = dataset.build()?;
    let points = data.sample_batch(THEORY_INDEX_OFFSET, section.points);
    let orders: Vec<NormOrder> = match section.p.as_str() {
        "inf" => vec![NormOrder::LInf],
        "2" => vec![NormOrder::L2],
        "both" => vec![NormOrder::LInf, NormOrder::L2],
        other => {
            return Err(RunnerError::Config(format!(
                "theory.p '{other}' is not one of inf|2|both"
            )))
        }
    };
    let mut reports = Vec::new();
    for p in orders {
        reports.push(expansion_residual_sweep(
            &spec,
            &params,
            &points,
            p,
            &section.epsilons,
            section.grid_n,
        )?);
    }
    if let Some(dir) = out_path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(out_path, serde_json::to_string_pretty(&reports)?)?;
    Ok(reports)
}

// ── gradcheck ────────────────────────────────────────────────────────

#[derive(Debug, Serialize)]
pub struct GradcheckOutcome {
    pub reports: Vec<(String, GradCheckReport)>,
    pub threshold: f64,
    pub pass: bool,
}

/// Gradient-check the default generator and discriminator shapes.
pub fn run_gradcheck(seed: u64) -> Result<GradcheckOutcome, RunnerError> {
    let g = NetworkSpec::generator(16, &[128, 128], 2);
    let d = NetworkSpec::discriminator(2, &[128, 128]);
    let threshold = 1e-4;
    let mut reports = Vec::new();
    let mut pass = true;
    for (name, spec) in [("generator", g), ("discriminator", d)] {
        let report = grad_check(&spec, seed)?;
        pass &= report.max_rel_error <= threshold;
        reports.push((name.to_string(), report));
    }
    Ok(GradcheckOutcome {
        reports,
        threshold,
        pass,
    })
}

// ── report ───────────────────────────────────────────────────────────

/// Render the summaries under `dir` as plain text tables.
pub fn report(dir: &Path) -> Result<String, RunnerError> {
    let mut out = String::new();
    let sweep_path = dir.join("sweep.json");
    let summary_path = dir.join("summary.json");
    if sweep_path.exists() {
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&sweep_path)?)?;
        out.push_str(&format!(
            "sweep over {} (last_k = {})\n",
            v["axis"].as_str().unwrap_or("?"),
            v["last_k"]
        ));
        out.push_str(&format!(
            "{:>14} {:>14} {:>14} {:>10} {:>12} {:>10}\n",
            "value", "final_mmd2", "final_frechet", "coverage", "wall_ms", "collapsed"
        ));
        for row in v["rows"].as_array().into_iter().flatten() {
            out.push_str(&format!(
                "{:>14} {:>14} {:>14} {:>10} {:>12} {:>10}\n",
                row["value"].to_string().trim_matches('"'),
                trim_num(&row["median_final_mmd2"]),
                trim_num(&row["median_final_frechet2d"]),
                trim_num(&row["median_final_coverage"]),
                trim_num(&row["median_wall_total_ms"]),
                row["collapsed_seeds"]
            ));
        }
    } else if summary_path.exists() {
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&summary_path)?)?;
        out.push_str(&format!(
            "run: {} seeds, {} collapsed, median wall {} ms, overhead fraction {}\n",
            v["per_seed"].as_array().map(|a| a.len()).unwrap_or(0),
            v["collapsed_seeds"],
            trim_num(&v["median_wall_total_ms"]),
            trim_num(&v["median_overhead_fraction"]),
        ));
        if !v["median_final"].is_null() {
            let m = &v["median_final"];
            out.push_str(&format!(
                "median final: mmd2 {}, frechet2d {}, coverage {}, grad_l1 {}, adv_acc {}, std_acc(real) {}\n",
                trim_num(&m["mmd2"]),
                trim_num(&m["frechet2d"]),
                trim_num(&m["mode_coverage"]),
                trim_num(&m["grad_l1_mean"]),
                trim_num(&m["adv_accuracy"]),
                trim_num(&m["std_accuracy_real"]),
            ));
        }
        out.push_str(&format!(
            "{:>8} {:>12} {:>12} {:>10} {:>10} {:>12}\n",
            "seed", "final_mmd2", "frechet2d", "coverage", "adv_acc", "wall_ms"
        ));
        for s in v["per_seed"].as_array().into_iter().flatten() {
            let f = &s["final_record"];
            out.push_str(&format!(
                "{:>8} {:>12} {:>12} {:>10} {:>10} {:>12}\n",
                s["seed"],
                trim_num(&f["mmd2"]),
                trim_num(&f["frechet2d"]),
                trim_num(&f["mode_coverage"]),
                trim_num(&f["adv_accuracy"]),
                trim_num(&s["wall"]["total_ms"]),
            ));
        }
    } else {
        return Err(RunnerError::Config(format!(
            "no summary.json or sweep.json under {}",
            dir.display()
        )));
    }
    Ok(out)
}

fn trim_num(v: &serde_json::Value) -> String {
    match v.as_f64() {
        Some(x) => {
            if x == 0.0 {
                "0".into()
            } else if x.abs() >= 100.0 {
                format!("{x:.1}")
            } else {
                format!("{x:.5}")
            }
        }
        None => "-".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_map_preserves_order() {
        let items: Vec<u64> = (0..17).collect();
        let out = parallel_map(&items, 4, |i, &v| (i as u64) * 100 + v);
        for (i, &r) in out.iter().enumerate() {
            assert_eq!(r, (i as u64) * 100 + i as u64);
        }
    }

    #[test]
    fn median_conventions() {
        assert_eq!(median(&mut vec![3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&mut vec![4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&mut vec![]), None);
    }
}
