//! Rank representations and the fractional rank generator.
//!
//! Every rank value lives in the open interval `(0, 1)`: position `p` out of
//! `n` is stored as `p / (n + 1)`, so `1 / (n + 1)` is the best item. Ties
//! share the average of the positions they occupy, which keeps the mean of a
//! complete ranking at exactly one half.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifier of a ranked object.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectId(String);

impl ObjectId {
    pub fn new(id: impl Into<String>) -> Self {
        ObjectId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ObjectId {
    fn from(s: &str) -> Self {
        ObjectId(s.to_owned())
    }
}

impl From<String> for ObjectId {
    fn from(s: String) -> Self {
        ObjectId(s)
    }
}

impl From<&ObjectId> for ObjectId {
    fn from(id: &ObjectId) -> Self {
        id.clone()
    }
}

/// Sort order applied to raw scores before ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    /// Smallest score gets the best (smallest) rank value.
    Ascending,
    /// Largest score gets the best rank value.
    Descending,
}

/// Which end of the full list a partial ranking describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Top,
    Bottom,
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "top" => Ok(Direction::Top),
            "bottom" => Ok(Direction::Bottom),
            other => Err(Error::invalid(format!("unknown direction `{other}`"))),
        }
    }
}

/// A map from objects to normalized rank values in `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Ranking {
    values: BTreeMap<ObjectId, f64>,
}

impl Ranking {
    /// Builds a ranking from explicit values; each must be finite and lie
    /// strictly between 0 and 1.
    pub fn from_values<I, K>(values: I) -> Result<Self>
    where
        I: IntoIterator<Item = (K, f64)>,
        K: Into<ObjectId>,
    {
        let mut map = BTreeMap::new();
        for (id, v) in values {
            let id = id.into();
            if !v.is_finite() {
                return Err(Error::NonFinite(id.to_string()));
            }
            if v <= 0.0 || v >= 1.0 {
                return Err(Error::invalid(format!(
                    "rank value {v} for `{id}` is outside (0, 1)"
                )));
            }
            if map.insert(id.clone(), v).is_some() {
                return Err(Error::invalid(format!("duplicate object `{id}`")));
            }
        }
        Ok(Ranking { values: map })
    }

    pub(crate) fn from_map_unchecked(values: BTreeMap<ObjectId, f64>) -> Self {
        Ranking { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, id: &ObjectId) -> Option<f64> {
        self.values.get(id).copied()
    }

    pub fn contains(&self, id: &ObjectId) -> bool {
        self.values.contains_key(id)
    }

    /// Entries in object-id order.
    pub fn iter(&self) -> impl ExactSizeIterator<Item = (&ObjectId, f64)> + '_ {
        self.values.iter().map(|(k, v)| (k, *v))
    }

    pub fn ids(&self) -> impl ExactSizeIterator<Item = &ObjectId> + '_ {
        self.values.keys()
    }

    pub fn domain(&self) -> BTreeSet<ObjectId> {
        self.values.keys().cloned().collect()
    }

    pub fn same_domain(&self, other: &Ranking) -> bool {
        self.len() == other.len() && self.values.keys().eq(other.values.keys())
    }

    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            return f64::NAN;
        }
        self.values.values().sum::<f64>() / self.values.len() as f64
    }

    /// Values listed in the order of `ids`; `None` if an id is absent.
    pub fn values_for<'a, I>(&self, ids: I) -> Option<Vec<f64>>
    where
        I: IntoIterator<Item = &'a ObjectId>,
    {
        ids.into_iter().map(|id| self.get(id)).collect()
    }

    /// Objects sorted best first; ties keep object-id order.
    pub fn best_first(&self) -> Vec<ObjectId> {
        let mut entries: Vec<_> = self.values.iter().collect();
        entries.sort_by(|a, b| a.1.total_cmp(b.1).then_with(|| a.0.cmp(b.0)));
        entries.into_iter().map(|(k, _)| k.clone()).collect()
    }

    pub(crate) fn map_values(&self, f: impl Fn(f64) -> f64) -> Ranking {
        Ranking {
            values: self.values.iter().map(|(k, v)| (k.clone(), f(*v))).collect(),
        }
    }
}

/// Average 1-based positions of `scores` sorted ascending. Equal scores share
/// the mean of the positions they span.
pub fn fractional_positions(scores: &[f64]) -> Vec<f64> {
    let n = scores.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut out = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && scores[idx[end]] == scores[idx[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &idx[start..end] {
            out[i] = avg;
        }
        start = end;
    }
    out
}

/// Normalized fractional ranks of a score vector: position / (n + 1).
pub fn normalized_ranks(scores: &[f64]) -> Vec<f64> {
    let denom = scores.len() as f64 + 1.0;
    fractional_positions(scores)
        .into_iter()
        .map(|p| p / denom)
        .collect()
}

/// The fractional rank generator.
///
/// Ranks `scores` in the requested order and normalizes by `n + 1`. Only the
/// ordering of the scores matters, so any strictly monotone transform of the
/// input yields the same ranking.
pub fn fractional_rank<I, K>(scores: I, order: Order) -> Result<Ranking>
where
    I: IntoIterator<Item = (K, f64)>,
    K: Into<ObjectId>,
{
    let mut ids = Vec::new();
    let mut vals = Vec::new();
    let mut seen = BTreeSet::new();
    for (id, v) in scores {
        let id = id.into();
        if !v.is_finite() {
            return Err(Error::NonFinite(id.to_string()));
        }
        if !seen.insert(id.clone()) {
            return Err(Error::invalid(format!("duplicate object `{id}`")));
        }
        ids.push(id);
        vals.push(match order {
            Order::Ascending => v,
            Order::Descending => -v,
        });
    }
    if ids.is_empty() {
        return Err(Error::invalid("cannot rank an empty score set"));
    }
    let ranks = normalized_ranks(&vals);
    Ok(Ranking::from_map_unchecked(ids.into_iter().zip(ranks).collect()))
}

/// Divides 1-based ranks by `n + 1`. Pre-averaged fractional ranks (e.g. 1.5)
/// are accepted as long as they stay within `1..=n`.
pub fn normalize_integer_ranks<I, K>(ranks: I) -> Result<Ranking>
where
    I: IntoIterator<Item = (K, f64)>,
    K: Into<ObjectId>,
{
    let entries: Vec<(ObjectId, f64)> = ranks.into_iter().map(|(k, r)| (k.into(), r)).collect();
    let n = entries.len();
    let denom = n as f64 + 1.0;
    let mut map = BTreeMap::new();
    for (id, r) in entries {
        if !r.is_finite() {
            return Err(Error::NonFinite(id.to_string()));
        }
        if r < 1.0 || r > n as f64 {
            return Err(Error::RankOutOfRange {
                object: id.to_string(),
                rank: r,
                n,
            });
        }
        if map.insert(id.clone(), r / denom).is_some() {
            return Err(Error::invalid(format!("duplicate object `{id}`")));
        }
    }
    Ok(Ranking::from_map_unchecked(map))
}

/// Inverts the order of a ranking: `v -> 1 - v`.
pub fn reverse(r: &Ranking) -> Ranking {
    r.map_values(|v| 1.0 - v)
}

/// A top-k or bottom-k list over a subset of a larger domain.
///
/// Values are the fractional ranks of the subset alone, normalized by the
/// subset size plus one.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialRanking {
    ranking: Ranking,
    direction: Direction,
    domain_size_hint: Option<usize>,
}

impl PartialRanking {
    pub fn new(ranking: Ranking, direction: Direction) -> Self {
        PartialRanking {
            ranking,
            direction,
            domain_size_hint: None,
        }
    }

    /// Builds the list from raw positions (1 = best). Positions need not be
    /// contiguous; shared positions become fractional ties.
    pub fn from_positions<I, K>(positions: I, direction: Direction) -> Result<Self>
    where
        I: IntoIterator<Item = (K, f64)>,
        K: Into<ObjectId>,
    {
        let entries: Vec<(ObjectId, f64)> = positions.into_iter().map(|(k, p)| (k.into(), p)).collect();
        for (id, p) in &entries {
            if !p.is_finite() {
                return Err(Error::NonFinite(id.to_string()));
            }
            if *p < 1.0 {
                return Err(Error::invalid(format!("position {p} for `{id}` is below 1")));
            }
        }
        let ranking = if entries.is_empty() {
            Ranking::default()
        } else {
            fractional_rank(entries, Order::Ascending)?
        };
        Ok(PartialRanking::new(ranking, direction))
    }

    pub fn with_domain_size(mut self, n: usize) -> Self {
        self.domain_size_hint = Some(n);
        self
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    pub fn ranking(&self) -> &Ranking {
        &self.ranking
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn domain_size_hint(&self) -> Option<usize> {
        self.domain_size_hint
    }

    pub fn len(&self) -> usize {
        self.ranking.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranking.is_empty()
    }

    /// Fractional 1-based positions within the subset (value times `k + 1`).
    pub fn positions(&self) -> impl Iterator<Item = (&ObjectId, f64)> + '_ {
        let scale = self.len() as f64 + 1.0;
        self.ranking.iter().map(move |(k, v)| (k, v * scale))
    }
}

/// A complete `n x d` table of normalized ranks: rows are objects, columns
/// are experts.
#[derive(Debug, Clone, PartialEq)]
pub struct RankMatrix {
    objects: Vec<ObjectId>,
    experts: Vec<String>,
    values: Vec<f64>,
}

impl RankMatrix {
    /// `values` is row-major with `objects.len()` rows and `experts.len()`
    /// columns.
    pub fn new(objects: Vec<ObjectId>, experts: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if values.len() != objects.len() * experts.len() {
            return Err(Error::invalid(format!(
                "expected {} values for a {}x{} matrix, got {}",
                objects.len() * experts.len(),
                objects.len(),
                experts.len(),
                values.len()
            )));
        }
        let unique: BTreeSet<&ObjectId> = objects.iter().collect();
        if unique.len() != objects.len() {
            return Err(Error::invalid("duplicate object in rank matrix"));
        }
        let d = experts.len();
        for (idx, v) in values.iter().enumerate() {
            if !v.is_finite() || *v <= 0.0 || *v >= 1.0 {
                return Err(Error::invalid(format!(
                    "cell ({}, {}) = {v} is outside (0, 1)",
                    objects[idx / d],
                    experts[idx % d]
                )));
            }
        }
        Ok(RankMatrix {
            objects,
            experts,
            values,
        })
    }

    /// Aligns full rankings as columns over `objects`.
    pub fn from_columns(objects: Vec<ObjectId>, experts: Vec<String>, columns: &[Ranking]) -> Result<Self> {
        if experts.len() != columns.len() {
            return Err(Error::invalid("expert names and columns differ in length"));
        }
        let d = columns.len();
        let mut values = vec![0.0; objects.len() * d];
        for (j, col) in columns.iter().enumerate() {
            if col.len() != objects.len() {
                return Err(Error::DomainMismatch);
            }
            for (i, id) in objects.iter().enumerate() {
                values[i * d + j] = col.get(id).ok_or(Error::DomainMismatch)?;
            }
        }
        RankMatrix::new(objects, experts, values)
    }

    /// Builds a matrix from integer-scale rank columns (`rank / (n + 1)`).
    pub fn from_integer_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let d = columns.len();
        let n = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::invalid("columns differ in length"));
        }
        let denom = n as f64 + 1.0;
        let mut values = vec![0.0; n * d];
        for (j, col) in columns.iter().enumerate() {
            for (i, r) in col.iter().enumerate() {
                values[i * d + j] = r / denom;
            }
        }
        let objects = (0..n).map(|i| ObjectId::new(format!("o{i}"))).collect();
        let experts = (0..d).map(|j| format!("e{j}")).collect();
        RankMatrix::new(objects, experts, values)
    }

    pub fn n(&self) -> usize {
        self.objects.len()
    }

    pub fn d(&self) -> usize {
        self.experts.len()
    }

    pub fn objects(&self) -> &[ObjectId] {
        &self.objects
    }

    pub fn experts(&self) -> &[String] {
        &self.experts
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.d() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.d();
        &self.values[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        let d = self.d().max(1);
        self.values.chunks(d).take(self.n())
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n()).map(|i| self.get(i, j)).collect()
    }

    pub fn column_ranking(&self, j: usize) -> Ranking {
        Ranking::from_map_unchecked(
            self.objects
                .iter()
                .enumerate()
                .map(|(i, id)| (id.clone(), self.get(i, j)))
                .collect(),
        )
    }

    /// Keeps only the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        if cols.iter().any(|&j| j >= self.d()) {
            return Err(Error::invalid("column index out of range"));
        }
        let mut values = Vec::with_capacity(self.n() * cols.len());
        for i in 0..self.n() {
            values.extend(cols.iter().map(|&j| self.get(i, j)));
        }
        Ok(RankMatrix {
            objects: self.objects.clone(),
            experts: cols.iter().map(|&j| self.experts[j].clone()).collect(),
            values,
        })
    }

    /// Appends `r` as an extra column named `name`.
    pub fn with_column(&self, name: impl Into<String>, r: &Ranking) -> Result<Self> {
        let col = r.values_for(&self.objects).ok_or(Error::DomainMismatch)?;
        if r.len() != self.n() {
            return Err(Error::DomainMismatch);
        }
        let d = self.d();
        let mut values = Vec::with_capacity(self.n() * (d + 1));
        for (i, c) in col.iter().enumerate() {
            values.extend_from_slice(self.row(i));
            values.push(*c);
        }
        let mut experts = self.experts.clone();
        experts.push(name.into());
        Ok(RankMatrix {
            objects: self.objects.clone(),
            experts,
            values,
        })
    }

    /// Every cell mapped through `v -> 1 - v`.
    pub fn reversed(&self) -> Self {
        RankMatrix {
            objects: self.objects.clone(),
            experts: self.experts.clone(),
            values: self.values.iter().map(|v| 1.0 - v).collect(),
        }
    }
}
