//! Subcommand bodies. Reports go to the writer handed in by [`crate::run`];
//! warnings go through `log`.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use log::warn;
use rhoagg::aggregation::{
    borda_aggregate, geometric_mean_aggregate, min_aggregate, reverse_geometric_aggregate, AggregateResult,
};
use rhoagg::correlation::spearman_multivariate;
use rhoagg::evaluation::{cross_validate, evaluate_method, evaluate_with_fold_weights, Method};
use rhoagg::imputation::{impute_optimal, ImputeMode, OptimizerConfig};
use rhoagg::ingest::{load_weights, parse_letor_agg, parse_ranking_csv, save_weights, Dataset, LetorOptions};
use rhoagg::learning::ExpertWeights;
use rhoagg::par::Exec;
use rhoagg::{Direction, RankMatrix};

use crate::{
    AggregateArgs, AggregateMethodArg, Cli, Command, EvalArgs, ImputeArgs, ImputeModeArg, NotConverged,
    TrainArgs,
};

pub fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let exec = cli.exec();
    match &cli.command {
        Command::Aggregate(a) => aggregate(a, out),
        Command::Train(a) => train(exec, a, out),
        Command::Eval(a) => eval(exec, a, out),
        Command::Impute(a) => impute(a, out),
        Command::Serve(a) => crate::server::serve(a),
    }
}

/// Multivariate rho of the columns, `None` when it is undefined (fewer than
/// two columns).
pub fn matrix_rho(m: &RankMatrix) -> Option<f64> {
    spearman_multivariate(m).ok().map(|r| r.rho)
}

/// A rank value in `(0, 1)` back on the `1..=n` position scale. Integers
/// print without a fraction so fully ranked tables round-trip.
fn position(value: f64, n: usize) -> String {
    let p = value * (n as f64 + 1.0);
    let r = p.round();
    if (p - r).abs() < 1e-9 {
        format!("{}", r as i64)
    } else {
        format!("{p}")
    }
}

fn emit(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => out.write_all(text.as_bytes()).map_err(Into::into),
    }
}

fn run_aggregate(m: &RankMatrix, method: AggregateMethodArg) -> rhoagg::Result<AggregateResult> {
    match method {
        AggregateMethodArg::Geomean => geometric_mean_aggregate(m),
        AggregateMethodArg::Borda => borda_aggregate(m),
        AggregateMethodArg::Min => min_aggregate(m),
        AggregateMethodArg::ReverseGeomean => reverse_geometric_aggregate(m),
    }
}

/// `item,raw_score,rank` rows, best first.
pub fn aggregate_csv(m: &RankMatrix, agg: &AggregateResult) -> String {
    let mut text = String::from("item,raw_score,rank\n");
    for id in agg.order(m.objects()) {
        let rank = agg.ranking.get(&id).expect("aggregate covers every object");
        let _ = writeln!(text, "{id},{},{}", agg.raw_scores[&id], position(rank, m.n()));
    }
    text
}

fn aggregate(a: &AggregateArgs, out: &mut dyn Write) -> Result<()> {
    let table = parse_ranking_csv(&a.input)?;
    let m = table.extended(a.direction.into())?;
    let agg = run_aggregate(&m, a.method)?;
    emit(a.out.as_deref(), &aggregate_csv(&m, &agg), out)?;
    match matrix_rho(&m) {
        Some(rho) => writeln!(out, "rho {rho}")?,
        None => writeln!(out, "rho undefined for a single source")?,
    }
    Ok(())
}

fn load_dataset(dir: &Path, strict: bool) -> Result<Dataset> {
    parse_letor_agg(dir, LetorOptions { strict }).with_context(|| format!("loading {}", dir.display()))
}

fn fold_file(dir: &Path, fold: usize) -> std::path::PathBuf {
    dir.join(format!("fold{fold}.json"))
}

fn train(exec: Exec, a: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let method = Method::from(a.method);
    if !method.needs_weights() {
        bail!("{method} has no weights to train");
    }
    let ds = load_dataset(&a.data, a.strict)?;
    std::fs::create_dir_all(&a.weights).with_context(|| format!("creating {}", a.weights.display()))?;
    for fold in 0..ds.folds.len() {
        let w = rhoagg::evaluation::train_fold(exec, &ds, fold, method.direction(), a.ridge)?;
        save_weights(&fold_file(&a.weights, fold + 1), &w)?;
        let weights: Vec<String> = w.weights.iter().map(|v| format!("{v:.6}")).collect();
        writeln!(
            out,
            "fold {}: weights [{}] bias {:.6}",
            fold + 1,
            weights.join(", "),
            w.bias
        )?;
    }
    Ok(())
}

/// Weights for every fold from a `train` directory or a single file.
fn fold_weights(path: &Path, folds: usize) -> Result<Vec<ExpertWeights>> {
    if path.is_dir() {
        (1..=folds)
            .map(|f| {
                let p = fold_file(path, f);
                load_weights(&p).with_context(|| format!("reading {}", p.display()))
            })
            .collect()
    } else {
        let w = load_weights(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(vec![w; folds])
    }
}

fn eval(exec: Exec, a: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let method = Method::from(a.method);
    let ds = load_dataset(&a.data, a.strict)?;
    let table = match (&a.weights, method.needs_weights()) {
        (Some(path), true) => {
            let ws = fold_weights(path, ds.folds.len())?;
            for w in &ws {
                if w.d() != ds.d() {
                    bail!("weights cover {} experts, the data has {}", w.d(), ds.d());
                }
            }
            evaluate_with_fold_weights(exec, &ds, method, &ws)?
        }
        (None, true) => cross_validate(exec, &ds, method, a.ridge)?.table,
        (_, false) => {
            if a.weights.is_some() {
                warn!("{method} ignores --weights");
            }
            evaluate_method(exec, &ds, method, None)?
        }
    };
    write!(out, "{method} ({:?})\n{table}", method.direction())?;
    if let Some(p) = &a.report {
        std::fs::write(p, table.to_csv()).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

/// Completed table as CSV with ranks on the `1..=n` scale.
pub fn rank_table_csv(m: &RankMatrix) -> String {
    let mut text = String::from("item");
    for e in m.experts() {
        let _ = write!(text, ",{e}");
    }
    text.push('\n');
    for (id, row) in m.objects().iter().zip(m.rows()) {
        text.push_str(id.as_str());
        for v in row {
            let _ = write!(text, ",{}", position(*v, m.n()));
        }
        text.push('\n');
    }
    text
}

fn impute(a: &ImputeArgs, out: &mut dyn Write) -> Result<()> {
    let table = parse_ranking_csv(&a.input)?;
    let direction: Direction = a.direction.into();
    let extended = table.extended(direction)?;
    let before = matrix_rho(&extended);
    let (completed, converged) = match a.mode {
        ImputeModeArg::Noninformative => (extended, None),
        ImputeModeArg::Max | ImputeModeArg::Min => {
            let mode = if a.mode == ImputeModeArg::Max {
                ImputeMode::Max
            } else {
                ImputeMode::Min
            };
            let mut cfg = OptimizerConfig::default();
            if let Some(it) = a.max_iters {
                cfg.max_iters = it;
            }
            if let Some(t) = a.tolerance {
                cfg.tolerance = t;
            }
            let (m, relaxed) = impute_optimal(&table.observed(direction)?, mode, &cfg)?;
            let status = (!relaxed.converged).then_some(relaxed.feasibility_residual);
            (m, Some(status))
        }
    };
    emit(a.out.as_deref(), &rank_table_csv(&completed), out)?;
    let fmt = |r: Option<f64>| r.map_or("undefined".to_string(), |v| v.to_string());
    writeln!(out, "rho before {}", fmt(before))?;
    writeln!(out, "rho after {}", fmt(matrix_rho(&completed)))?;
    if let Some(Some(residual)) = converged {
        warn!("best-found completion written; constraint residual {residual:.3e}");
        return Err(NotConverged { residual }.into());
    }
    Ok(())
}
