//! Spearman's rho (bivariate and multivariate), Kendall's tau and the
//! reference concordance values of the copula bounds.
//!
//! Two estimators are exposed and they differ at finite `n`:
//!
//! * [`spearman_bivariate`] is the Pearson correlation of two rank vectors.
//! * [`spearman_multivariate`] is `h(d) * ((2^d / n) * sum_x prod_j R_j(x) - 1)`
//!   evaluated on normalized ranks.
//!
//! For two tie-free complete rankings they are related by
//! `multivariate = (n - 1) / (n + 1) * bivariate`.

use crate::error::{Error, Result};
use crate::rank::{RankMatrix, Ranking};

/// Multivariate rho together with the shape of the data it was computed on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationReport {
    pub rho: f64,
    pub d: usize,
    pub n: usize,
}

/// `(d + 1) / (2^d - (d + 1))`, the factor that calibrates the maximum of
/// multivariate rho to one.
pub fn normalization_h(d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::invalid(format!("h(d) needs d >= 2, got {d}")));
    }
    let d = d as f64;
    Ok((d + 1.0) / (d.exp2() - (d + 1.0)))
}

/// Pearson correlation of two equal-length samples.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DomainMismatch);
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::invalid("correlation needs at least two objects"));
    }
    let ma = a.iter().sum::<f64>() / n as f64;
    let mb = b.iter().sum::<f64>() / n as f64;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 {
        return Err(Error::ZeroVariance("first ranking"));
    }
    if sbb <= 0.0 {
        return Err(Error::ZeroVariance("second ranking"));
    }
    Ok(sab / (saa * sbb).sqrt())
}

fn aligned(r: &Ranking, s: &Ranking) -> Result<(Vec<f64>, Vec<f64>)> {
    if !r.same_domain(s) {
        return Err(Error::DomainMismatch);
    }
    // same key order in both maps
    Ok((
        r.iter().map(|(_, v)| v).collect(),
        s.iter().map(|(_, v)| v).collect(),
    ))
}

/// Bivariate Spearman's rho: the Pearson correlation of the rank values.
pub fn spearman_bivariate(r: &Ranking, s: &Ranking) -> Result<f64> {
    let (a, b) = aligned(r, s)?;
    pearson(&a, &b)
}

/// `1 - 6 * sum (R - S)^2 / (n (n^2 - 1))` on integer ranks. Only equal to
/// rho for tie-free permutations of `1..=n`.
pub fn spearman_squared_distance(r: &[usize], s: &[usize]) -> f64 {
    let n = r.len() as f64;
    let ssd: f64 = r
        .iter()
        .zip(s)
        .map(|(a, b)| {
            let d = *a as f64 - *b as f64;
            d * d
        })
        .sum();
    1.0 - 6.0 * ssd / (n * (n * n - 1.0))
}

/// `sum_x prod_j R_j(x)` over the rows of a matrix.
pub(crate) fn product_sum(m: &RankMatrix) -> f64 {
    m.rows().map(|row| row.iter().product::<f64>()).sum()
}

/// Multivariate rho from a precomputed product sum.
pub(crate) fn rho_from_product_sum(sum: f64, n: usize, d: usize) -> Result<f64> {
    let h = normalization_h(d)?;
    Ok(h * ((d as f64).exp2() / n as f64 * sum - 1.0))
}

/// Empirical multivariate Spearman's rho of the columns of `m`.
pub fn spearman_multivariate(m: &RankMatrix) -> Result<CorrelationReport> {
    let (n, d) = (m.n(), m.d());
    if d < 2 {
        return Err(Error::invalid(format!("multivariate rho needs d >= 2, got {d}")));
    }
    if n == 0 {
        return Err(Error::invalid("multivariate rho needs at least one object"));
    }
    let rho = rho_from_product_sum(product_sum(m), n, d)?;
    Ok(CorrelationReport { rho, d, n })
}

/// Kendall's tau-a on raw value vectors; tied pairs count as neither
/// concordant nor discordant.
pub fn kendall_tau_values(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DomainMismatch);
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::invalid("kendall tau needs at least two objects"));
    }
    let mut score: i64 = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            let s = (a[i] - a[j]).signum() * (b[i] - b[j]).signum();
            if a[i] != a[j] && b[i] != b[j] {
                score += s as i64;
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    Ok(score as f64 / pairs)
}

pub fn kendall_tau(r: &Ranking, s: &Ranking) -> Result<f64> {
    let (a, b) = aligned(r, s)?;
    kendall_tau_values(&a, &b)
}

/// Closed-form concordance values between the upper Frechet-Hoeffding bound
/// `M`, the independence copula `pi`, and the resulting floor on rho.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceConcordance {
    /// `Q(M, M) = 2^(d-1) - 1`
    pub q_mm: f64,
    /// `Q(M, pi) = (2^d - (d + 1)) / (d + 1)`, the reciprocal of `h(d)`.
    pub q_mpi: f64,
    /// `Q(pi, pi) = 0`
    pub q_pipi: f64,
    /// `max(-1, -h(d))`. Since `-1 <= Q(W, pi) <= 0`, rho never drops
    /// below `h(d) * Q(W, pi) >= -h(d)`; the floor tends to 0 as `d` grows.
    pub rho_floor: f64,
}

pub fn reference_concordance(d: usize) -> Result<ReferenceConcordance> {
    let h = normalization_h(d)?;
    let df = d as f64;
    Ok(ReferenceConcordance {
        q_mm: (df - 1.0).exp2() - 1.0,
        q_mpi: (df.exp2() - (df + 1.0)) / (df + 1.0),
        q_pipi: 0.0,
        rho_floor: (-h).max(-1.0),
    })
}

/// Decomposition `rho_n = rho_k + C` for top-k lists and the closed-form
/// interval for `C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopKBounds {
    pub rho_k: f64,
    pub c_lower: f64,
    pub c_upper: f64,
}

/// Bounds on multivariate rho over `n` items when all experts rank the same
/// `k` items at the top.
///
/// `topk` holds the `k` shared items with ranks normalized by `k + 1`. The
/// upper expression replaces the unknown tail by `sum_{i>k} i^d`, which is
/// the rearrangement maximum and therefore always valid. The lower
/// expression replaces it by `sum_{i>k} i^(d/2) (n + k + 1 - i)^(d/2)`; that
/// is the exact minimum for `d = 2`, but for `d >= 3` there are completions
/// that fall below it.
pub fn spearman_topk_bounds(topk: &RankMatrix, n: usize) -> Result<TopKBounds> {
    let (k, d) = (topk.n(), topk.d());
    if k > n {
        return Err(Error::invalid(format!("k = {k} exceeds n = {n}")));
    }
    if k == 0 {
        return Err(Error::invalid("top-k bounds need k >= 1"));
    }
    let rho_k = spearman_multivariate(topk)?.rho;
    let h = normalization_h(d)?;
    let df = d as f64;
    let (kf, nf) = (k as f64, n as f64);
    // S_k = sum_{i<=k} prod_j R_j(i) / (k + 1), with the rank values already normalized
    let s_k = product_sum(topk);
    // everything below is divided through by (n + 1)^d
    let scale = ((kf + 1.0) / (nf + 1.0)).powf(df);
    let head = (kf * scale - nf) * s_k;
    let mut tail_upper = 0.0;
    let mut tail_lower = 0.0;
    for i in (k + 1)..=n {
        let u = i as f64 / (nf + 1.0);
        let v = (kf - i as f64 + nf + 1.0) / (nf + 1.0);
        tail_upper += u.powf(df);
        tail_lower += u.powf(df / 2.0) * v.powf(df / 2.0);
    }
    let factor = df.exp2() * h / (nf * kf);
    Ok(TopKBounds {
        rho_k,
        c_lower: factor * (head + kf * tail_lower),
        c_upper: factor * (head + kf * tail_upper),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rank::normalize_integer_ranks;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ranking(ranks: &[f64]) -> Ranking {
        normalize_integer_ranks(ranks.iter().enumerate().map(|(i, r)| (format!("x{i}"), *r))).unwrap()
    }

    /// Direct evaluation of the multivariate formula on integer rank columns,
    /// written independently of the library path.
    fn rho_oracle(cols: &[Vec<usize>]) -> f64 {
        let d = cols.len();
        let n = cols[0].len();
        let h = (d as f64 + 1.0) / (2f64.powi(d as i32) - d as f64 - 1.0);
        let mut s = 0.0;
        for i in 0..n {
            let mut p = 1.0;
            for c in cols {
                p *= c[i] as f64 / (n as f64 + 1.0);
            }
            s += p;
        }
        h * (2f64.powi(d as i32) / n as f64 * s - 1.0)
    }

    #[test]
    fn h_values() {
        assert_eq!(normalization_h(2).unwrap(), 3.0);
        assert_eq!(normalization_h(3).unwrap(), 1.0);
        assert_eq!(normalization_h(4).unwrap(), 5.0 / 11.0);
        assert!(normalization_h(1).is_err());
        assert!(normalization_h(0).is_err());
    }

    #[test]
    fn bivariate_examples() {
        let r = ranking(&[1.0, 2.0, 3.0]);
        assert_abs_diff_eq!(spearman_bivariate(&r, &r).unwrap(), 1.0, epsilon = 1e-15);
        let s = ranking(&[3.0, 2.0, 1.0]);
        assert_abs_diff_eq!(spearman_bivariate(&r, &s).unwrap(), -1.0, epsilon = 1e-15);
        let s = ranking(&[2.0, 1.0, 3.0]);
        assert_abs_diff_eq!(spearman_bivariate(&r, &s).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(spearman_squared_distance(&[1, 2, 3], &[2, 1, 3]), 0.5);
    }

    #[test]
    fn bivariate_errors() {
        let r = ranking(&[1.0, 2.0, 3.0]);
        let other = Ranking::from_values([("y0", 0.25), ("y1", 0.5), ("y2", 0.75)]).unwrap();
        assert!(matches!(
            spearman_bivariate(&r, &other),
            Err(Error::DomainMismatch)
        ));
        let tied = ranking(&[2.0, 2.0, 2.0]);
        assert!(matches!(
            spearman_bivariate(&r, &tied),
            Err(Error::ZeroVariance(_))
        ));
    }

    #[test]
    fn multivariate_examples() {
        let up = vec![1, 2, 3];
        let down = vec![3, 2, 1];
        let m = RankMatrix::from_integer_columns(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]]).unwrap();
        assert_abs_diff_eq!(spearman_multivariate(&m).unwrap().rho, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(rho_oracle(&[up.clone(), up.clone()]), 0.5, epsilon = 1e-14);

        let m = RankMatrix::from_integer_columns(&[
            vec![1.0, 2.0, 3.0],
            vec![1.0, 2.0, 3.0],
            vec![1.0, 2.0, 3.0],
        ])
        .unwrap();
        assert_abs_diff_eq!(spearman_multivariate(&m).unwrap().rho, 0.5, epsilon = 1e-14);

        let m = RankMatrix::from_integer_columns(&[vec![1.0, 2.0, 3.0], vec![3.0, 2.0, 1.0]]).unwrap();
        assert_abs_diff_eq!(spearman_multivariate(&m).unwrap().rho, -0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(rho_oracle(&[up, down]), -0.5, epsilon = 1e-14);

        let single = RankMatrix::from_integer_columns(&[vec![1.0, 2.0]]).unwrap();
        assert!(spearman_multivariate(&single).is_err());
    }

    #[test]
    fn kendall_examples() {
        let r = ranking(&[1.0, 2.0, 3.0]);
        assert_abs_diff_eq!(kendall_tau(&r, &r).unwrap(), 1.0);
        assert_abs_diff_eq!(kendall_tau(&r, &ranking(&[3.0, 2.0, 1.0])).unwrap(), -1.0);
        assert_abs_diff_eq!(
            kendall_tau(&r, &ranking(&[2.0, 1.0, 3.0])).unwrap(),
            1.0 / 3.0,
            epsilon = 1e-15
        );
        let other = Ranking::from_values([("q", 0.5)]).unwrap();
        assert!(kendall_tau(&r, &other).is_err());
    }

    #[test]
    fn concordance_values() {
        let c2 = reference_concordance(2).unwrap();
        assert_eq!(c2.q_mm, 1.0);
        assert_abs_diff_eq!(c2.q_mpi, 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(c2.rho_floor, -1.0);
        let c3 = reference_concordance(3).unwrap();
        assert_eq!(c3.q_mm, 3.0);
        assert_eq!(c3.q_mpi, 1.0);
        assert_eq!(c3.q_pipi, 0.0);
        for d in 2..=20 {
            let c = reference_concordance(d).unwrap();
            assert_abs_diff_eq!(normalization_h(d).unwrap() * c.q_mpi, 1.0, epsilon = 1e-12);
        }
        assert!(reference_concordance(40).unwrap().rho_floor > -1e-9);
        let floors: Vec<f64> = (4..30)
            .map(|d| reference_concordance(d).unwrap().rho_floor)
            .collect();
        assert!(floors.windows(2).all(|w| w[0] < w[1]));
        assert!(reference_concordance(1).is_err());
    }

    #[test]
    fn upper_calibration_grows_with_n() {
        let mut prev = f64::NEG_INFINITY;
        for n in [10usize, 100, 1000] {
            for d in [2usize, 3, 5] {
                let col: Vec<f64> = (1..=n).map(|i| i as f64).collect();
                let m = RankMatrix::from_integer_columns(&vec![col; d]).unwrap();
                let rho = spearman_multivariate(&m).unwrap().rho;
                assert!(rho < 1.0);
                if d == 2 {
                    assert!(rho > prev);
                    prev = rho;
                }
            }
        }
        assert!(prev > 0.99);
    }

    /// Enumerates every completion of the top-k lists to `n` items: each
    /// expert places the remaining `n - k` items on positions `k+1..=n` in any
    /// order. Returns `rho_n - rho_k` for each completion.
    fn completion_gaps(topk: &[Vec<usize>], n: usize) -> Vec<f64> {
        fn perms(items: &[usize]) -> Vec<Vec<usize>> {
            if items.len() <= 1 {
                return vec![items.to_vec()];
            }
            let mut out = Vec::new();
            for i in 0..items.len() {
                let mut rest = items.to_vec();
                let x = rest.remove(i);
                for mut p in perms(&rest) {
                    p.insert(0, x);
                    out.push(p);
                }
            }
            out
        }
        let d = topk.len();
        let k = topk[0].len();
        let rho_k = rho_oracle(topk);
        let tail: Vec<usize> = ((k + 1)..=n).collect();
        let tail_perms = perms(&tail);
        // first expert's tail order can be fixed: only the row pairing matters
        let mut gaps = Vec::new();
        let mut idx = vec![0usize; d - 1];
        loop {
            let mut cols = Vec::with_capacity(d);
            let mut first = topk[0].clone();
            first.extend(&tail);
            cols.push(first);
            for j in 1..d {
                let mut c = topk[j].clone();
                c.extend(&tail_perms[idx[j - 1]]);
                cols.push(c);
            }
            gaps.push(rho_oracle(&cols) - rho_k);
            let mut pos = 0;
            loop {
                if pos == d - 1 {
                    return gaps;
                }
                idx[pos] += 1;
                if idx[pos] < tail_perms.len() {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
        }
    }

    fn topk_matrix(topk: &[Vec<usize>]) -> RankMatrix {
        let cols: Vec<Vec<f64>> = topk
            .iter()
            .map(|c| c.iter().map(|r| *r as f64).collect())
            .collect();
        RankMatrix::from_integer_columns(&cols).unwrap()
    }

    #[test]
    fn topk_full_list_has_zero_gap() {
        let topk = vec![vec![1, 2, 3], vec![2, 3, 1]];
        let b = spearman_topk_bounds(&topk_matrix(&topk), 3).unwrap();
        assert_abs_diff_eq!(b.c_lower, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.c_upper, 0.0, epsilon = 1e-15);
        assert!(spearman_topk_bounds(&topk_matrix(&topk), 2).is_err());
    }

    #[test]
    fn topk_bivariate_containment() {
        let topk = vec![vec![1, 2], vec![1, 2]];
        let b = spearman_topk_bounds(&topk_matrix(&topk), 4).unwrap();
        let gaps = completion_gaps(&topk, 4);
        assert_eq!(gaps.len(), 2);
        for g in gaps {
            assert!(g >= b.c_lower - 1e-12 && g <= b.c_upper + 1e-12, "{g} {b:?}");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.random_range(2..=7);
            let k = rng.random_range(1..n);
            let topk: Vec<Vec<usize>> = (0..2)
                .map(|_| {
                    let mut v: Vec<usize> = (1..=k).collect();
                    v.shuffle(&mut rng);
                    v
                })
                .collect();
            let b = spearman_topk_bounds(&topk_matrix(&topk), n).unwrap();
            assert!(b.c_lower <= b.c_upper);
            for g in completion_gaps(&topk, n) {
                assert!(g >= b.c_lower - 1e-12 && g <= b.c_upper + 1e-12);
            }
        }
    }

    #[test]
    fn topk_upper_bound_holds_for_higher_dimensions() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let d = rng.random_range(3..=4);
            let n = rng.random_range(2..=6);
            let k = rng.random_range(1..n);
            let topk: Vec<Vec<usize>> = (0..d)
                .map(|_| {
                    let mut v: Vec<usize> = (1..=k).collect();
                    v.shuffle(&mut rng);
                    v
                })
                .collect();
            let b = spearman_topk_bounds(&topk_matrix(&topk), n).unwrap();
            assert!(b.c_lower <= b.c_upper + 1e-15);
            assert_abs_diff_eq!(b.rho_k, rho_oracle(&topk), epsilon = 1e-12);
            let gaps = completion_gaps(&topk, n);
            let max_gap = gaps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(max_gap <= b.c_upper + 1e-12);
        }
    }

    #[test]
    fn topk_lower_expression_is_not_a_bound_for_three_experts() {
        // Tail {2,3,4}: rows 2*3*4, 3*4*2, 4*2*3 give a product sum of 72,
        // while the lower expression uses 8^1.5 + 9^1.5 + 8^1.5 = 72.25.
        let topk = vec![vec![1], vec![1], vec![1]];
        let b = spearman_topk_bounds(&topk_matrix(&topk), 4).unwrap();
        let min_gap = completion_gaps(&topk, 4)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        assert!(min_gap < b.c_lower);
    }

    proptest! {
        #[test]
        fn appendix_identity_and_bridge(n in 3usize..50, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut r: Vec<usize> = (1..=n).collect();
            let mut s = r.clone();
            r.shuffle(&mut rng);
            s.shuffle(&mut rng);
            let rr = ranking(&r.iter().map(|v| *v as f64).collect::<Vec<_>>());
            let ss = ranking(&s.iter().map(|v| *v as f64).collect::<Vec<_>>());
            let pearson_form = spearman_bivariate(&rr, &ss).unwrap();
            prop_assert!((pearson_form - spearman_squared_distance(&r, &s)).abs() < 1e-12);
            let m = RankMatrix::from_columns(
                rr.ids().cloned().collect(),
                vec!["r".into(), "s".into()],
                &[rr.clone(), ss.clone()],
            ).unwrap();
            let multi = spearman_multivariate(&m).unwrap().rho;
            let nf = n as f64;
            prop_assert!((multi - (nf - 1.0) / (nf + 1.0) * pearson_form).abs() < 1e-12);
            prop_assert!(multi <= 1.0);
        }

        #[test]
        fn label_invariance(n in 2usize..25, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let mk = |xs: &[f64], perm: &[usize], f: &dyn Fn(f64) -> f64| {
                crate::rank::fractional_rank(
                    (0..xs.len()).map(|i| (format!("{:03}", perm[i]), f(xs[i]))),
                    crate::rank::Order::Ascending,
                ).unwrap()
            };
            let ident: Vec<usize> = (0..n).collect();
            let mut perm = ident.clone();
            perm.shuffle(&mut rng);
            let id_f = |x: f64| x;
            let mono = |x: f64| x.exp() * 3.0 + 1.0;
            let rho0 = spearman_bivariate(&mk(&a, &ident, &id_f), &mk(&b, &ident, &id_f)).unwrap();
            let rho1 = spearman_bivariate(&mk(&a, &perm, &mono), &mk(&b, &perm, &mono)).unwrap();
            prop_assert!((rho0 - rho1).abs() < 1e-12);
            let t0 = kendall_tau(&mk(&a, &ident, &id_f), &mk(&b, &ident, &id_f)).unwrap();
            let t1 = kendall_tau(&mk(&a, &perm, &mono), &mk(&b, &perm, &mono)).unwrap();
            prop_assert!((t0 - t1).abs() < 1e-12);
        }

        #[test]
        fn multivariate_never_exceeds_one(
            cols in prop::collection::vec(prop::collection::vec(0.001f64..0.999, 5), 2..6)
        ) {
            // arbitrary (0,1) values, including non-rank ones, stay <= 1 only
            // for genuine rankings; check on re-ranked columns
            let ranked: Vec<Vec<f64>> = cols
                .iter()
                .map(|c| crate::rank::fractional_positions(c))
                .collect();
            let m = RankMatrix::from_integer_columns(&ranked).unwrap();
            prop_assert!(spearman_multivariate(&m).unwrap().rho <= 1.0);
        }
    }
}
