//! Consensus rankings.
//!
//! Ranking objects by the product of their normalized ranks (equivalently the
//! geometric mean) maximizes multivariate rho between the consensus and the
//! experts. Borda, the arithmetic mean, is kept as a baseline.
//!
//! Two "least concordant" aggregates exist. [`min_aggregate`] ranks by the
//! product of `1 - value`, which reverses the experts but only minimizes rho
//! when there is a single expert. [`reverse_geometric_aggregate`] ranks by
//! the product in descending order; by the rearrangement inequality it
//! attains the minimum for any number of experts.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learning::ExpertWeights;
use crate::rank::{fractional_rank, ObjectId, Order, RankMatrix, Ranking};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregateMethod {
    GeometricMean,
    Min,
    ReverseGeometric,
    Weighted,
    Borda,
}

/// A consensus ranking together with the scores it was ranked from.
///
/// Smaller scores are better; `ranking` is the ascending fractional rank of
/// `raw_scores`.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateResult {
    pub ranking: Ranking,
    pub raw_scores: BTreeMap<ObjectId, f64>,
    pub method: AggregateMethod,
}

impl AggregateResult {
    pub(crate) fn from_scores(
        objects: &[ObjectId],
        scores: Vec<f64>,
        method: AggregateMethod,
    ) -> Result<Self> {
        let ranking = fractional_rank(objects.iter().zip(scores.iter().copied()), Order::Ascending)?;
        Ok(AggregateResult {
            ranking,
            raw_scores: objects.iter().cloned().zip(scores).collect(),
            method,
        })
    }

    /// Objects from best to worst. Ties keep the order of `objects`.
    pub fn order(&self, objects: &[ObjectId]) -> Vec<ObjectId> {
        let mut out: Vec<ObjectId> = objects.to_vec();
        out.sort_by(|a, b| {
            let va = self.ranking.get(a).unwrap_or(f64::INFINITY);
            let vb = self.ranking.get(b).unwrap_or(f64::INFINITY);
            va.total_cmp(&vb)
        });
        out
    }
}

fn row_scores(m: &RankMatrix, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    m.rows().map(f).collect()
}

/// Product of each object's normalized ranks, ranked ascending.
pub fn geometric_mean_aggregate(m: &RankMatrix) -> Result<AggregateResult> {
    let scores = row_scores(m, |r| r.iter().product());
    AggregateResult::from_scores(m.objects(), scores, AggregateMethod::GeometricMean)
}

/// Product of `1 - value` per object, ranked ascending.
pub fn min_aggregate(m: &RankMatrix) -> Result<AggregateResult> {
    let scores = row_scores(m, |r| r.iter().map(|v| 1.0 - v).product());
    AggregateResult::from_scores(m.objects(), scores, AggregateMethod::Min)
}

/// Negated product of the ranks, ranked ascending: the largest product comes
/// first. Minimizes multivariate rho against the columns.
pub fn reverse_geometric_aggregate(m: &RankMatrix) -> Result<AggregateResult> {
    let scores = row_scores(m, |r| -r.iter().product::<f64>());
    AggregateResult::from_scores(m.objects(), scores, AggregateMethod::ReverseGeometric)
}

/// `sum_j w_j log(value_j)` per object. The bias is ignored: it shifts every
/// score equally. Negative weights invert that expert's influence.
pub fn weighted_aggregate(m: &RankMatrix, w: &ExpertWeights) -> Result<AggregateResult> {
    let scores = log_scores(m, &w.weights)?;
    AggregateResult::from_scores(m.objects(), scores, AggregateMethod::Weighted)
}

pub(crate) fn log_scores(m: &RankMatrix, weights: &[f64]) -> Result<Vec<f64>> {
    if weights.len() != m.d() {
        return Err(Error::invalid(format!(
            "{} weights for {} experts",
            weights.len(),
            m.d()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite()) {
        return Err(Error::NonFinite(format!("weight {w}")));
    }
    Ok(row_scores(m, |r| log_weighted_product(r, weights)))
}

/// `ln(prod_j v_j^w_j)` through a product whose binary exponent is carried
/// separately. Nothing underflows for large `d`, and rows with equal
/// products get bitwise equal scores, which a plain sum of logs does not
/// guarantee.
fn log_weighted_product(row: &[f64], weights: &[f64]) -> f64 {
    let mut mantissa = 1.0f64;
    let mut exponent = 0i64;
    for (v, w) in row.iter().zip(weights) {
        mantissa *= if *w == 1.0 { *v } else { v.powf(*w) };
        let (m, e) = split_exponent(mantissa);
        mantissa = m;
        exponent += e;
    }
    mantissa.ln() + exponent as f64 * std::f64::consts::LN_2
}

/// `x = m * 2^e` with `m` in `[0.5, 1)` for finite positive `x`.
fn split_exponent(x: f64) -> (f64, i64) {
    if !(x.is_finite() && x > 0.0) {
        return (x, 0);
    }
    if !x.is_normal() {
        let (m, e) = split_exponent(x * 2f64.powi(64));
        return (m, e - 64);
    }
    let bits = x.to_bits();
    let e = ((bits >> 52) & 0x7ff) as i64 - 1022;
    let m = f64::from_bits((bits & !(0x7ff << 52)) | (1022 << 52));
    (m, e)
}

/// Arithmetic mean of each object's ranks.
pub fn borda_aggregate(m: &RankMatrix) -> Result<AggregateResult> {
    let d = m.d() as f64;
    let scores = row_scores(m, |r| r.iter().sum::<f64>() / d);
    AggregateResult::from_scores(m.objects(), scores, AggregateMethod::Borda)
}
