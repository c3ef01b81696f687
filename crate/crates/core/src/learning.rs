//! Least-squares expert weights on log-ranks.
//!
//! With `l(x)` the log of the label rank and `r_j(x)` the log of expert `j`'s
//! rank, the weights minimize `sum_x (l(x) - b - sum_j w_j r_j(x))^2` over
//! all training queries stacked together. The consensus for new data is the
//! ascending order of `b + sum_j w_j r_j(x)`, i.e. the weighted geometric
//! mean of the ranks.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::aggregation::{log_scores, AggregateMethod, AggregateResult};
use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::rank::{fractional_rank, ObjectId, Order, RankMatrix, Ranking};

pub const DEFAULT_RIDGE: f64 = 1e-8;

/// Learned weights. Serialized as `{expert_names, weights, bias}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertWeights {
    pub expert_names: Vec<String>,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl ExpertWeights {
    /// Equal unit weights, no bias.
    pub fn uniform(expert_names: Vec<String>) -> Self {
        let d = expert_names.len();
        ExpertWeights {
            expert_names,
            weights: vec![1.0; d],
            bias: 0.0,
        }
    }

    pub fn d(&self) -> usize {
        self.weights.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.len() != self.expert_names.len() {
            return Err(Error::Schema(format!(
                "{} weights for {} expert names",
                self.weights.len(),
                self.expert_names.len()
            )));
        }
        if !self.bias.is_finite() || self.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("weights".into()));
        }
        Ok(())
    }
}

/// Queries as (expert rank matrix, label ranking) pairs.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    expert_names: Vec<String>,
    queries: Vec<(RankMatrix, Ranking)>,
}

impl TrainingSet {
    pub fn new(expert_names: Vec<String>, queries: Vec<(RankMatrix, Ranking)>) -> Result<Self> {
        let d = expert_names.len();
        for (q, (m, label)) in queries.iter().enumerate() {
            if m.d() != d {
                return Err(Error::invalid(format!(
                    "query {q} has {} experts, expected {d}",
                    m.d()
                )));
            }
            if label.len() != m.n() || m.objects().iter().any(|o| !label.contains(o)) {
                return Err(Error::DomainMismatch);
            }
        }
        Ok(TrainingSet {
            expert_names,
            queries,
        })
    }

    pub fn expert_names(&self) -> &[String] {
        &self.expert_names
    }

    pub fn queries(&self) -> &[(RankMatrix, Ranking)] {
        &self.queries
    }

    pub fn rows(&self) -> usize {
        self.queries.iter().map(|(m, _)| m.n()).sum()
    }
}

/// Normal equations `(X'X, X'y)` with the bias as the last column.
#[derive(Clone)]
struct Gram {
    xtx: DMatrix<f64>,
    xty: DVector<f64>,
}

impl Gram {
    fn zeros(p: usize) -> Self {
        Gram {
            xtx: DMatrix::zeros(p, p),
            xty: DVector::zeros(p),
        }
    }

    fn add(mut self, other: Gram) -> Gram {
        self.xtx += other.xtx;
        self.xty += other.xty;
        self
    }
}

fn query_gram(m: &RankMatrix, label: &Ranking) -> Gram {
    let d = m.d();
    let mut g = Gram::zeros(d + 1);
    let mut x = DVector::zeros(d + 1);
    for (i, row) in m.rows().enumerate() {
        for (xj, v) in x.iter_mut().zip(row) {
            *xj = v.ln();
        }
        x[d] = 1.0;
        let y = label.get(&m.objects()[i]).expect("checked domain").ln();
        g.xtx.ger(1.0, &x, &x, 1.0);
        g.xty.axpy(y, &x, 1.0);
    }
    g
}

/// Fits weights and bias by least squares; `ridge` is added to the weight
/// diagonal only, never to the bias.
pub fn fit_weights(t: &TrainingSet, ridge: f64) -> Result<ExpertWeights> {
    fit_weights_with(Exec::default(), t, ridge)
}

pub fn fit_weights_with(exec: Exec, t: &TrainingSet, ridge: f64) -> Result<ExpertWeights> {
    if t.rows() == 0 {
        return Err(Error::invalid("empty training set"));
    }
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::invalid(format!("ridge must be non-negative, got {ridge}")));
    }
    let d = t.expert_names.len();
    // summed in query order so the result does not depend on thread count
    let mut g = par::map(exec, &t.queries, |(m, label)| query_gram(m, label))
        .into_iter()
        .fold(Gram::zeros(d + 1), Gram::add);
    for j in 0..d {
        g.xtx[(j, j)] += ridge;
    }
    let chol = g
        .xtx
        .cholesky()
        .ok_or_else(|| Error::Singular("normal equations are not positive definite".into()))?;
    let beta = chol.solve(&g.xty);
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::Singular("non-finite solution".into()));
    }
    Ok(ExpertWeights {
        expert_names: t.expert_names.clone(),
        weights: beta.rows(0, d).iter().copied().collect(),
        bias: beta[d],
    })
}

/// Sum of squared log-rank residuals of `w` over the training set.
pub fn training_error(t: &TrainingSet, w: &ExpertWeights) -> Result<f64> {
    let mut sse = 0.0;
    for (m, label) in &t.queries {
        let scores = log_scores(m, &w.weights)?;
        for (o, s) in m.objects().iter().zip(scores) {
            let y = label.get(o).ok_or(Error::DomainMismatch)?.ln();
            sse += (y - w.bias - s).powi(2);
        }
    }
    Ok(sse)
}

/// Predicted log-ranks `bias + sum_j w_j log(value_j)`, ranked ascending.
pub fn predict(m: &RankMatrix, w: &ExpertWeights) -> Result<AggregateResult> {
    let scores = log_scores(m, &w.weights)?
        .into_iter()
        .map(|s| s + w.bias)
        .collect();
    AggregateResult::from_scores(m.objects(), scores, AggregateMethod::Weighted)
}

/// Relevance grades to a ranking: higher grade, better rank.
pub fn label_to_ranking<I, K>(relevance: I) -> Result<Ranking>
where
    I: IntoIterator<Item = (K, f64)>,
    K: Into<ObjectId>,
{
    fractional_rank(relevance, Order::Descending)
}
