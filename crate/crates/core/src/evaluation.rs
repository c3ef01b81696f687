//! NDCG and rank-correlation metrics over held-out queries, and the
//! five-fold cross-validation loop.
//!
//! NDCG uses gain `2^grade - 1` and discount `log2(i + 1)`; a query without
//! relevant documents scores 0. Per-fold values average over queries and the
//! overall value averages the folds.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::aggregation::{borda_aggregate, geometric_mean_aggregate, AggregateResult};
use crate::correlation::{kendall_tau, spearman_bivariate};
use crate::error::{Error, Result};
use crate::ingest::letor::{Dataset, QueryInstance};
use crate::learning::{fit_weights_with, predict, ExpertWeights, TrainingSet};
use crate::par::{self, Exec};
use crate::rank::{Direction, ObjectId};

/// NDCG is reported at cutoffs `1..=NDCG_CUTOFFS`.
pub const NDCG_CUTOFFS: usize = 10;

fn gain(grade: i32) -> f64 {
    2f64.powi(grade) - 1.0
}

fn dcg(grades: impl Iterator<Item = i32>, k: usize) -> f64 {
    grades
        .take(k)
        .enumerate()
        .map(|(i, g)| gain(g) / ((i + 2) as f64).log2())
        .sum()
}

/// NDCG@k of `order` (best first) against graded relevance.
pub fn ndcg_at_k(order: &[ObjectId], relevance: &BTreeMap<ObjectId, i32>, k: usize) -> Result<f64> {
    Ok(ndcg_curve(order, relevance, k)?.pop().unwrap_or(0.0))
}

/// NDCG@1 through NDCG@k in one pass.
pub fn ndcg_curve(order: &[ObjectId], relevance: &BTreeMap<ObjectId, i32>, k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::invalid("NDCG cutoff must be at least 1"));
    }
    let grades = order
        .iter()
        .map(|id| {
            relevance
                .get(id)
                .copied()
                .ok_or_else(|| Error::invalid(format!("document `{id}` has no grade")))
        })
        .collect::<Result<Vec<i32>>>()?;
    let mut ideal: Vec<i32> = relevance.values().copied().collect();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    Ok((1..=k)
        .map(|c| {
            let idcg = dcg(ideal.iter().copied(), c);
            if idcg == 0.0 {
                0.0
            } else {
                dcg(grades.iter().copied(), c) / idcg
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Learned weights over top-extended lists.
    RagsTop,
    /// Learned weights over bottom-extended lists.
    RagsBottom,
    GeoMean,
    Borda,
}

impl Method {
    pub fn direction(self) -> Direction {
        match self {
            Method::RagsBottom => Direction::Bottom,
            _ => Direction::Top,
        }
    }

    pub fn needs_weights(self) -> bool {
        matches!(self, Method::RagsTop | Method::RagsBottom)
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rags_top" => Ok(Method::RagsTop),
            "rags_bottom" => Ok(Method::RagsBottom),
            "geomean" => Ok(Method::GeoMean),
            "borda" => Ok(Method::Borda),
            other => Err(Error::invalid(format!("unknown method `{other}`"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::RagsTop => "rags_top",
            Method::RagsBottom => "rags_bottom",
            Method::GeoMean => "geomean",
            Method::Borda => "borda",
        })
    }
}

/// Aggregates one query with `method`.
pub fn score_query(
    q: &QueryInstance,
    method: Method,
    weights: Option<&ExpertWeights>,
) -> Result<AggregateResult> {
    let m = q.extended(method.direction())?;
    match method {
        Method::RagsTop | Method::RagsBottom => {
            let w = weights.ok_or_else(|| Error::invalid(format!("{method} needs weights")))?;
            predict(&m, w)
        }
        Method::GeoMean => geometric_mean_aggregate(&m),
        Method::Borda => borda_aggregate(&m),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryMetrics {
    pub ndcg: Vec<f64>,
    /// `None` when the label or the prediction is constant.
    pub rho: Option<f64>,
    pub tau: Option<f64>,
}

fn defined(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::ZeroVariance(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Scores one query. Documents are ordered by consensus rank, ties by file
/// order.
pub fn evaluate_query(
    q: &QueryInstance,
    method: Method,
    weights: Option<&ExpertWeights>,
) -> Result<QueryMetrics> {
    let agg = score_query(q, method, weights)?;
    let order = agg.order(&q.docs);
    let label = q.label()?;
    Ok(QueryMetrics {
        ndcg: ndcg_curve(&order, &q.grades, NDCG_CUTOFFS)?,
        rho: defined(spearman_bivariate(&agg.ranking, &label))?,
        tau: defined(kendall_tau(&agg.ranking, &label))?,
    })
}

/// Metrics averaged over a set of queries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldMetrics {
    /// 1-based fold number; 0 for the overall mean.
    pub fold: usize,
    pub queries: usize,
    pub ndcg: Vec<f64>,
    pub rho: Option<f64>,
    pub tau: Option<f64>,
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, count) = values.flatten().fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

fn summarize(fold: usize, per_query: &[QueryMetrics]) -> FoldMetrics {
    let q = per_query.len();
    let ndcg = (0..NDCG_CUTOFFS)
        .map(|k| {
            if q == 0 {
                0.0
            } else {
                per_query.iter().map(|m| m.ndcg[k]).sum::<f64>() / q as f64
            }
        })
        .collect();
    FoldMetrics {
        fold,
        queries: q,
        ndcg,
        rho: mean_of(per_query.iter().map(|m| m.rho)),
        tau: mean_of(per_query.iter().map(|m| m.tau)),
    }
}

pub fn evaluate_queries(
    exec: Exec,
    fold: usize,
    queries: &[&QueryInstance],
    method: Method,
    weights: Option<&ExpertWeights>,
) -> Result<FoldMetrics> {
    if method.needs_weights() && weights.is_none() {
        return Err(Error::invalid(format!("{method} needs weights")));
    }
    let per_query = par::map(exec, queries, |q| evaluate_query(q, method, weights))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(fold, &per_query))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsTable {
    pub method: Method,
    pub direction: Direction,
    pub folds: Vec<FoldMetrics>,
    pub mean: FoldMetrics,
}

impl MetricsTable {
    fn from_folds(method: Method, folds: Vec<FoldMetrics>) -> Self {
        let f = folds.len();
        let ndcg = (0..NDCG_CUTOFFS)
            .map(|k| {
                if f == 0 {
                    0.0
                } else {
                    folds.iter().map(|m| m.ndcg[k]).sum::<f64>() / f as f64
                }
            })
            .collect();
        let mean = FoldMetrics {
            fold: 0,
            queries: folds.iter().map(|m| m.queries).sum(),
            ndcg,
            rho: mean_of(folds.iter().map(|m| m.rho)),
            tau: mean_of(folds.iter().map(|m| m.tau)),
        };
        MetricsTable {
            method,
            direction: method.direction(),
            folds,
            mean,
        }
    }

    /// One row per fold plus a `mean` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fold,queries");
        for k in 1..=NDCG_CUTOFFS {
            out.push_str(&format!(",ndcg@{k}"));
        }
        out.push_str(",rho,tau\n");
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        for m in self.folds.iter().chain(std::iter::once(&self.mean)) {
            let label = if m.fold == 0 {
                "mean".to_string()
            } else {
                m.fold.to_string()
            };
            out.push_str(&format!("{label},{}", m.queries));
            for v in &m.ndcg {
                out.push_str(&format!(",{v:.6}"));
            }
            out.push_str(&format!(",{},{}\n", opt(m.rho), opt(m.tau)));
        }
        out
    }
}

impl fmt::Display for MetricsTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<6}", "fold")?;
        for k in 1..=NDCG_CUTOFFS {
            write!(f, " {:>7}", format!("@{k}"))?;
        }
        writeln!(f, " {:>7} {:>7}", "rho", "tau")?;
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
        for m in self.folds.iter().chain(std::iter::once(&self.mean)) {
            let label = if m.fold == 0 {
                "mean".to_string()
            } else {
                m.fold.to_string()
            };
            write!(f, "{label:<6}")?;
            for v in &m.ndcg {
                write!(f, " {v:>7.4}")?;
            }
            writeln!(f, " {:>7} {:>7}", opt(m.rho), opt(m.tau))?;
        }
        Ok(())
    }
}

/// Extended expert matrices paired with label rankings.
pub fn training_set(
    expert_names: &[String],
    queries: &[&QueryInstance],
    direction: Direction,
) -> Result<TrainingSet> {
    let pairs = queries
        .iter()
        .map(|q| Ok((q.extended(direction)?, q.label()?)))
        .collect::<Result<Vec<_>>>()?;
    TrainingSet::new(expert_names.to_vec(), pairs)
}

/// Fits weights on the train split of fold `fold` (0-based).
pub fn train_fold(
    exec: Exec,
    dataset: &Dataset,
    fold: usize,
    direction: Direction,
    ridge: f64,
) -> Result<ExpertWeights> {
    let f = dataset
        .folds
        .get(fold)
        .ok_or_else(|| Error::invalid(format!("no fold {}", fold + 1)))?;
    let train = dataset.select(&f.train)?;
    fit_weights_with(
        exec,
        &training_set(&dataset.expert_names, &train, direction)?,
        ridge,
    )
}

/// Evaluates `method` on every fold's test split with fixed `weights`.
pub fn evaluate_method(
    exec: Exec,
    dataset: &Dataset,
    method: Method,
    weights: Option<&ExpertWeights>,
) -> Result<MetricsTable> {
    let folds = dataset
        .folds
        .iter()
        .enumerate()
        .map(|(i, f)| evaluate_queries(exec, i + 1, &dataset.select(&f.test)?, method, weights))
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricsTable::from_folds(method, folds))
}

/// Like [`evaluate_method`] with a separate set of weights per fold, as
/// produced by [`cross_validate`] or [`train_fold`].
pub fn evaluate_with_fold_weights(
    exec: Exec,
    dataset: &Dataset,
    method: Method,
    weights: &[ExpertWeights],
) -> Result<MetricsTable> {
    if weights.len() != dataset.folds.len() {
        return Err(Error::invalid(format!(
            "{} weight sets for {} folds",
            weights.len(),
            dataset.folds.len()
        )));
    }
    let folds = dataset
        .folds
        .iter()
        .zip(weights)
        .enumerate()
        .map(|(i, (f, w))| evaluate_queries(exec, i + 1, &dataset.select(&f.test)?, method, Some(w)))
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricsTable::from_folds(method, folds))
}

#[derive(Debug, Clone)]
pub struct CrossValidation {
    pub table: MetricsTable,
    /// Weights learned per fold; empty for training-free methods.
    pub weights: Vec<ExpertWeights>,
}

/// Trains on each fold's train split and scores its test split. The
/// validation split is not used.
pub fn cross_validate(exec: Exec, dataset: &Dataset, method: Method, ridge: f64) -> Result<CrossValidation> {
    if dataset.folds.is_empty() {
        return Err(Error::invalid("dataset has no folds"));
    }
    let mut folds = Vec::with_capacity(dataset.folds.len());
    let mut learned = Vec::new();
    for (i, f) in dataset.folds.iter().enumerate() {
        let w = if method.needs_weights() {
            Some(train_fold(exec, dataset, i, method.direction(), ridge)?)
        } else {
            None
        };
        let test = dataset.select(&f.test)?;
        folds.push(evaluate_queries(exec, i + 1, &test, method, w.as_ref())?);
        learned.extend(w);
    }
    Ok(CrossValidation {
        table: MetricsTable::from_folds(method, folds),
        weights: learned,
    })
}
