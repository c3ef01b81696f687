//! Completion of partial rankings to a common domain.
//!
//! The non-informative extension keeps the order of the ranked items,
//! rescales them by `r / r'` (ranked count over domain size) and puts every
//! unranked item on the single value `(r + r') / (2 r')`, the midpoint of the
//! unranked block. The mean of a fractional ranking stays at exactly one
//! half. The bottom-k variant applies the same map to the reversed list.
//!
//! [`optimal`] instead searches for the completion that maximizes or
//! minimizes multivariate rho.

pub mod optimal;

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::rank::{reverse, Direction, ObjectId, PartialRanking, RankMatrix, Ranking};

pub use optimal::{
    impute_optimal, impute_optimal_partials, ImputeMode, ObservedRanks, OptimizerConfig, RelaxedAssignment,
};

/// A partial ranking completed over the full domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionResult {
    pub ranking: Ranking,
    /// Objects that received the shared imputed value.
    pub imputed: BTreeSet<ObjectId>,
}

fn check_domain(p: &Ranking, full_domain: &[ObjectId]) -> Result<BTreeSet<ObjectId>> {
    let domain: BTreeSet<ObjectId> = full_domain.iter().cloned().collect();
    if domain.len() != full_domain.len() {
        return Err(Error::invalid("full domain lists an object twice"));
    }
    if let Some(id) = p.ids().find(|id| !domain.contains(*id)) {
        return Err(Error::invalid(format!(
            "ranked object `{id}` is not in the full domain"
        )));
    }
    Ok(domain)
}

fn extend_top(ranking: &Ranking, full_domain: &[ObjectId]) -> Result<ExtensionResult> {
    let domain = check_domain(ranking, full_domain)?;
    let r = ranking.len() as f64;
    let r_full = domain.len() as f64;
    if ranking.len() == domain.len() {
        return Ok(ExtensionResult {
            ranking: ranking.clone(),
            imputed: BTreeSet::new(),
        });
    }
    let scale = r / r_full;
    let fill = (r + r_full) / (2.0 * r_full);
    let mut imputed = BTreeSet::new();
    let values = domain
        .into_iter()
        .map(|id| match ranking.get(&id) {
            Some(v) => (id, scale * v),
            None => {
                imputed.insert(id.clone());
                (id, fill)
            }
        })
        .collect();
    Ok(ExtensionResult {
        ranking: Ranking::from_map_unchecked(values),
        imputed,
    })
}

/// Non-informative extension of a top-k list: unranked items sit below every
/// ranked one.
pub fn extend_noninformative(p: &PartialRanking, full_domain: &[ObjectId]) -> Result<ExtensionResult> {
    extend_top(p.ranking(), full_domain)
}

/// Dual extension for a bottom-k list: unranked items sit above every ranked
/// one.
pub fn extend_bottom(p: &PartialRanking, full_domain: &[ObjectId]) -> Result<ExtensionResult> {
    let ext = extend_top(&reverse(p.ranking()), full_domain)?;
    Ok(ExtensionResult {
        ranking: reverse(&ext.ranking),
        imputed: ext.imputed,
    })
}

/// Extends according to the list's own direction.
pub fn extend(p: &PartialRanking, full_domain: &[ObjectId]) -> Result<ExtensionResult> {
    match p.direction() {
        Direction::Top => extend_noninformative(p, full_domain),
        Direction::Bottom => extend_bottom(p, full_domain),
    }
}

/// Extends every expert over `full_domain` and aligns the results as columns
/// (in `full_domain` order). Experts are named `1..=d`; see
/// [`RankMatrix::with_expert_names`].
pub fn extend_all(experts: &[PartialRanking], full_domain: &[ObjectId]) -> Result<RankMatrix> {
    if experts.is_empty() {
        return Err(Error::invalid("no experts to extend"));
    }
    if experts.iter().all(PartialRanking::is_empty) {
        return Err(Error::invalid("no expert ranked any item"));
    }
    extend_columns(experts, full_domain)
}

/// Like [`extend_all`] but tolerates experts that ranked nothing: such a
/// column is the constant one half.
pub(crate) fn extend_columns(experts: &[PartialRanking], full_domain: &[ObjectId]) -> Result<RankMatrix> {
    if full_domain.is_empty() {
        return Err(Error::invalid("empty domain"));
    }
    let columns = experts
        .iter()
        .map(|p| extend(p, full_domain).map(|e| e.ranking))
        .collect::<Result<Vec<_>>>()?;
    let names = (1..=experts.len()).map(|j| j.to_string()).collect();
    RankMatrix::from_columns(full_domain.to_vec(), names, &columns)
}

impl RankMatrix {
    pub fn with_expert_names(self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.d() {
            return Err(Error::invalid(format!(
                "{} names for {} experts",
                names.len(),
                self.d()
            )));
        }
        let values: Vec<f64> = self.rows().flat_map(|r| r.iter().copied()).collect();
        RankMatrix::new(self.objects().to_vec(), names, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn ids(names: &[&str]) -> Vec<ObjectId> {
        names.iter().map(|s| ObjectId::from(*s)).collect()
    }

    fn partial(entries: &[(&str, f64)], dir: Direction) -> PartialRanking {
        PartialRanking::new(Ranking::from_values(entries.iter().cloned()).unwrap(), dir)
    }

    #[test]
    fn noninformative_examples() {
        let dom = ids(&["a", "b", "c", "d", "e"]);
        let p = partial(&[("a", 1.0 / 3.0), ("b", 2.0 / 3.0)], Direction::Top);
        let ext = extend_noninformative(&p, &dom).unwrap();
        assert_abs_diff_eq!(ext.ranking.get(&"a".into()).unwrap(), 2.0 / 15.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ext.ranking.get(&"b".into()).unwrap(), 4.0 / 15.0, epsilon = 1e-15);
        for o in ["c", "d", "e"] {
            assert_abs_diff_eq!(ext.ranking.get(&o.into()).unwrap(), 0.7, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(ext.ranking.mean(), 0.5, epsilon = 1e-15);
        assert_eq!(ext.imputed.len(), 3);

        let full = partial(&[("a", 0.25), ("b", 0.5), ("c", 0.75)], Direction::Top);
        let ext = extend_noninformative(&full, &ids(&["a", "b", "c"])).unwrap();
        assert_eq!(&ext.ranking, full.ranking());
        assert!(ext.imputed.is_empty());

        let single = partial(&[("a", 0.5)], Direction::Top);
        let ext = extend_noninformative(&single, &ids(&["a", "b", "c"])).unwrap();
        assert_abs_diff_eq!(ext.ranking.get(&"a".into()).unwrap(), 1.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ext.ranking.get(&"b".into()).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ext.ranking.mean(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn bottom_examples() {
        let dom = ids(&["a", "b", "c", "d", "e"]);
        let p = partial(&[("a", 1.0 / 3.0), ("b", 2.0 / 3.0)], Direction::Bottom);
        let ext = extend_bottom(&p, &dom).unwrap();
        assert_abs_diff_eq!(
            ext.ranking.get(&"a".into()).unwrap(),
            11.0 / 15.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            ext.ranking.get(&"b".into()).unwrap(),
            13.0 / 15.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(ext.ranking.get(&"c".into()).unwrap(), 0.3, epsilon = 1e-15);

        let full = partial(&[("a", 0.25), ("b", 0.5), ("c", 0.75)], Direction::Bottom);
        let ext = extend_bottom(&full, &ids(&["a", "b", "c"])).unwrap();
        for (id, v) in full.ranking().iter() {
            assert_abs_diff_eq!(ext.ranking.get(id).unwrap(), v, epsilon = 1e-15);
        }

        let single = partial(&[("a", 0.5)], Direction::Bottom);
        let ext = extend_bottom(&single, &ids(&["a", "b", "c"])).unwrap();
        assert_abs_diff_eq!(ext.ranking.get(&"a".into()).unwrap(), 5.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ext.ranking.get(&"c".into()).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_objects_outside_domain() {
        let p = partial(&[("z", 0.5)], Direction::Top);
        assert!(extend_noninformative(&p, &ids(&["a", "b"])).is_err());
        assert!(extend_bottom(&p, &ids(&["a", "b"])).is_err());
    }

    #[test]
    fn extend_all_examples() {
        let full = partial(&[("a", 0.25), ("b", 0.5), ("c", 0.75)], Direction::Top);
        let m = extend_all(std::slice::from_ref(&full), &ids(&["a", "b", "c"])).unwrap();
        assert_eq!(m.column(0), vec![0.25, 0.5, 0.75]);

        let e1 = partial(&[("a", 0.5)], Direction::Top);
        let e2 = partial(&[("b", 0.5)], Direction::Top);
        let m = extend_all(&[e1, e2], &ids(&["a", "b"])).unwrap();
        // known: (1/2)(1/2) = 1/4, constant: 3/4
        assert_eq!(m.column(0), vec![0.25, 0.75]);
        assert_eq!(m.column(1), vec![0.75, 0.25]);

        let empty = PartialRanking::new(Ranking::default(), Direction::Top);
        assert!(extend_all(&[empty.clone(), empty.clone()], &ids(&["a"])).is_err());
        assert!(extend_all(&[], &ids(&["a"])).is_err());
        let m = extend_columns(&[empty], &ids(&["a", "b"])).unwrap();
        assert_eq!(m.column(0), vec![0.5, 0.5]);
    }

    proptest! {
        #[test]
        fn consistent_and_mean_preserving(
            positions in prop::collection::vec(1u32..8, 0..12),
            extra in 0usize..10,
            bottom in any::<bool>(),
        ) {
            let dir = if bottom { Direction::Bottom } else { Direction::Top };
            let p = PartialRanking::from_positions(
                positions.iter().enumerate().map(|(i, p)| (format!("k{i:02}"), *p as f64)),
                dir,
            ).unwrap();
            let mut dom: Vec<ObjectId> = p.ranking().ids().cloned().collect();
            dom.extend((0..extra).map(|i| ObjectId::new(format!("u{i:02}"))));
            prop_assume!(!dom.is_empty());
            let ext = extend(&p, &dom).unwrap();
            if !p.is_empty() {
                prop_assert!((ext.ranking.mean() - 0.5).abs() < 1e-12);
            }
            for (x, vx) in p.ranking().iter() {
                for (y, vy) in p.ranking().iter() {
                    let (ex, ey) = (ext.ranking.get(x).unwrap(), ext.ranking.get(y).unwrap());
                    if vx < vy { prop_assert!(ex < ey); }
                    if vx == vy { prop_assert!(ex == ey); }
                }
                for u in &ext.imputed {
                    let eu = ext.ranking.get(u).unwrap();
                    let ex = ext.ranking.get(x).unwrap();
                    if bottom { prop_assert!(eu < ex); } else { prop_assert!(eu > ex); }
                }
            }
        }
    }
}
