//! Bivariate maximum-likelihood estimation of one covariance entry from two
//! partially observed columns, optionally grouped by a class feature that
//! shares a common covariance across groups.
//!
//! Each row falls into one of three blocks for a given pair: both entries
//! observed (a complete pair), only the first observed, or only the second
//! observed. Group means use every observed value of the corresponding
//! marginal; the cross-product statistics `s11`, `s12`, `s22` use complete
//! pairs only, with deviations about those group means.

use serde::Serialize;

use crate::cubic;
use crate::data::MaskedColumn;
use crate::error::{Error, Result};

/// Fraction of `sqrt(sigma11 * sigma22)` that a case-deletion fallback is
/// clamped to when no admissible root exists.
pub const FALLBACK_CLAMP: f64 = 0.999;

/// Row-to-group assignment for a pair computation.
#[derive(Clone, Copy, Debug)]
pub enum Groups<'a> {
    /// Every row belongs to group 0.
    Single,
    /// Row `r` belongs to group `codes[r]`, with `codes[r] < count`.
    Coded { codes: &'a [u32], count: usize },
}

impl<'a> Groups<'a> {
    pub fn coded(codes: &'a [u32]) -> Self {
        let count = codes.iter().max().map_or(1, |&m| m as usize + 1);
        Groups::Coded { codes, count }
    }

    pub fn count(&self) -> usize {
        match self {
            Groups::Single => 1,
            Groups::Coded { count, .. } => *count,
        }
    }

    #[inline]
    pub fn of(&self, row: usize) -> usize {
        match self {
            Groups::Single => 0,
            Groups::Coded { codes, .. } => codes[row] as usize,
        }
    }

    fn check_len(&self, n: usize) -> Result<()> {
        match self {
            Groups::Coded { codes, .. } if codes.len() != n => Err(Error::ShapeMismatch {
                expected: (n, 1),
                found: (codes.len(), 1),
            }),
            _ => Ok(()),
        }
    }
}

/// Per-group counts and marginal means.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupStats {
    /// Rows with both entries observed (`m_g`).
    pub complete: usize,
    /// Rows with the first entry observed.
    pub observed_first: usize,
    /// Rows with the second entry observed.
    pub observed_second: usize,
    pub mean_first: Option<f64>,
    pub mean_second: Option<f64>,
}

/// Sufficient statistics for one feature pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairStats {
    pub groups: Vec<GroupStats>,
    /// Total complete pairs `A`.
    pub complete_pairs: usize,
    pub s11: f64,
    pub s12: f64,
    pub s22: f64,
}

fn check_pair_len(first: MaskedColumn<'_>, second: MaskedColumn<'_>, groups: Groups<'_>) -> Result<()> {
    if first.len() != second.len() {
        return Err(Error::ShapeMismatch {
            expected: (first.len(), 2),
            found: (second.len(), 2),
        });
    }
    groups.check_len(first.len())
}

pub fn compute_pair_stats(
    first: MaskedColumn<'_>,
    second: MaskedColumn<'_>,
    groups: Groups<'_>,
) -> Result<PairStats> {
    check_pair_len(first, second, groups)?;
    let g = groups.count();
    let mut sum1 = vec![0.0; g];
    let mut sum2 = vec![0.0; g];
    let mut stats = vec![
        GroupStats {
            complete: 0,
            observed_first: 0,
            observed_second: 0,
            mean_first: None,
            mean_second: None,
        };
        g
    ];
    for r in 0..first.len() {
        let k = groups.of(r);
        let a = first.get(r);
        let b = second.get(r);
        if let Some(x) = a {
            sum1[k] += x;
            stats[k].observed_first += 1;
        }
        if let Some(y) = b {
            sum2[k] += y;
            stats[k].observed_second += 1;
        }
        if a.is_some() && b.is_some() {
            stats[k].complete += 1;
        }
    }
    for (k, s) in stats.iter_mut().enumerate() {
        s.mean_first = (s.observed_first > 0).then(|| sum1[k] / s.observed_first as f64);
        s.mean_second = (s.observed_second > 0).then(|| sum2[k] / s.observed_second as f64);
    }
    let complete_pairs: usize = stats.iter().map(|s| s.complete).sum();
    if complete_pairs == 0 {
        return Err(Error::NoCompletePairs { first: 0, second: 1 });
    }
    let (mut s11, mut s12, mut s22) = (0.0, 0.0, 0.0);
    for r in 0..first.len() {
        if let (Some(x), Some(y)) = (first.get(r), second.get(r)) {
            let s = &stats[groups.of(r)];
            // complete rows imply both group means exist
            let dx = x - s.mean_first.unwrap_or(0.0);
            let dy = y - s.mean_second.unwrap_or(0.0);
            s11 += dx * dx;
            s12 += dx * dy;
            s22 += dy * dy;
        }
    }
    Ok(PairStats {
        groups: stats,
        complete_pairs,
        s11,
        s12,
        s22,
    })
}

/// Pooled within-group uncorrected variance: squared deviations about each
/// group's observed mean, summed over groups, divided by the total observed
/// count. With a single group this is the plain uncorrected variance.
pub fn pooled_variance(column: MaskedColumn<'_>, groups: Groups<'_>) -> Result<f64> {
    groups.check_len(column.len())?;
    let g = groups.count();
    let mut sum = vec![0.0; g];
    let mut count = vec![0usize; g];
    for r in 0..column.len() {
        if let Some(x) = column.get(r) {
            let k = groups.of(r);
            sum[k] += x;
            count[k] += 1;
        }
    }
    let total: usize = count.iter().sum();
    if total == 0 {
        return Err(Error::EmptyColumn {
            column: String::from("<pair>"),
        });
    }
    let mean: Vec<f64> = sum
        .iter()
        .zip(&count)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    let mut ss = 0.0;
    for r in 0..column.len() {
        if let Some(x) = column.get(r) {
            let d = x - mean[groups.of(r)];
            ss += d * d;
        }
    }
    Ok(ss / total as f64)
}

fn check_variances(sigma11: f64, sigma22: f64) -> Result<f64> {
    if !(sigma11 > 0.0 && sigma22 > 0.0) || !sigma11.is_finite() || !sigma22.is_finite() {
        return Err(Error::NonPositiveVariance { sigma11, sigma22 });
    }
    Ok((sigma11 * sigma22).sqrt())
}

/// Profile log-likelihood of `sigma12` with the additive constant dropped:
///
/// `-(A/2) log(v) - (s22 - 2 (s12/s11') s12 + (s12/s11')^2 s11) / (2 v)`,
/// where `v = sigma22 - sigma12^2 / sigma11` is the conditional variance of
/// the second feature given the first.
pub fn eta(sigma12: f64, stats: &PairStats, sigma11: f64, sigma22: f64) -> Result<f64> {
    let bound = check_variances(sigma11, sigma22)?;
    let beta = sigma12 / sigma11;
    let v = sigma22 - sigma12 * beta;
    if !(sigma12.abs() < bound) || !(v > 0.0) {
        return Err(Error::OutsideAdmissible { sigma12, bound });
    }
    let a = stats.complete_pairs as f64;
    let quad = stats.s22 - 2.0 * beta * stats.s12 + beta * beta * stats.s11;
    Ok(-0.5 * a * v.ln() - quad / (2.0 * v))
}

/// Coefficients `[c0, c1, c2, c3]` of the stationarity polynomial of `eta`:
/// `s12 s11' s22' + (s11' s22' A - s22 s11' - s11 s22') x + s12 x^2 - A x^3`
/// with `s11' = sigma11`, `s22' = sigma22`.
pub fn sigma12_polynomial(stats: &PairStats, sigma11: f64, sigma22: f64) -> [f64; 4] {
    let a = stats.complete_pairs as f64;
    [
        stats.s12 * sigma11 * sigma22,
        sigma11 * sigma22 * a - stats.s22 * sigma11 - stats.s11 * sigma22,
        stats.s12,
        -a,
    ]
}

/// Real roots of the stationarity polynomial that lie strictly inside
/// `(-sqrt(sigma11 sigma22), sqrt(sigma11 sigma22))`, ascending.
///
/// The cubic is solved in the correlation scale `t = sigma12 / sqrt(s11' s22')`,
/// where it becomes monic with coefficients of order one, then each root is
/// mapped back and polished once more on the unscaled polynomial.
pub fn solve_sigma12_cubic(stats: &PairStats, sigma11: f64, sigma22: f64) -> Result<Vec<f64>> {
    let bound = check_variances(sigma11, sigma22)?;
    if stats.complete_pairs == 0 {
        return Err(Error::NoCompletePairs { first: 0, second: 1 });
    }
    let a = stats.complete_pairs as f64;
    let rho = stats.s12 / (a * bound);
    let omega = (stats.s11 / sigma11 + stats.s22 / sigma22) / a;
    // t^3 - rho t^2 - (1 - omega) t - rho
    let scaled = [-rho, omega - 1.0, -rho, 1.0];
    let original = sigma12_polynomial(stats, sigma11, sigma22);
    let mut roots: Vec<f64> = cubic::real_roots(scaled)
        .into_iter()
        .map(|t| cubic::polish(&original, t * bound))
        .filter(|x| x.abs() < bound)
        .collect();
    roots.sort_by(|x, y| x.total_cmp(y));
    roots.dedup();
    Ok(roots)
}

/// Pooled uncorrected covariance over complete pairs, deviations about each
/// group's complete-pair means. `None` when fewer than two complete pairs.
pub fn case_deletion_sigma12(
    first: MaskedColumn<'_>,
    second: MaskedColumn<'_>,
    groups: Groups<'_>,
) -> Option<f64> {
    check_pair_len(first, second, groups).ok()?;
    let g = groups.count();
    let mut sum1 = vec![0.0; g];
    let mut sum2 = vec![0.0; g];
    let mut count = vec![0usize; g];
    for r in 0..first.len() {
        if let (Some(x), Some(y)) = (first.get(r), second.get(r)) {
            let k = groups.of(r);
            sum1[k] += x;
            sum2[k] += y;
            count[k] += 1;
        }
    }
    let total: usize = count.iter().sum();
    if total < 2 {
        return None;
    }
    let mut sp = 0.0;
    for r in 0..first.len() {
        if let (Some(x), Some(y)) = (first.get(r), second.get(r)) {
            let k = groups.of(r);
            let c = count[k] as f64;
            sp += (x - sum1[k] / c) * (y - sum2[k] / c);
        }
    }
    Some(sp / total as f64)
}

/// Picks the candidate closest to `case_deletion` (ties go to the larger
/// `eta`), or the candidate with the largest `eta` when there is no
/// case-deletion reference.
pub fn select_root(
    candidates: &[f64],
    case_deletion: Option<f64>,
    eta_fn: impl Fn(f64) -> f64,
) -> Result<f64> {
    let (&first, rest) = candidates.split_first().ok_or(Error::EmptyCandidates)?;
    let mut best = first;
    let mut best_eta = eta_fn(first);
    for &c in rest {
        let e = eta_fn(c);
        let better = match case_deletion {
            Some(cd) => {
                let (dc, db) = ((c - cd).abs(), (best - cd).abs());
                dc < db || (dc == db && e > best_eta)
            }
            None => e > best_eta,
        };
        if better {
            best = c;
            best_eta = e;
        }
    }
    Ok(best)
}

/// How the final root is picked when several admissible roots exist.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SelectionRule {
    /// Closest to the case-deletion estimate; falls back to largest `eta`
    /// when case deletion is undefined.
    #[default]
    NearestCaseDeletion,
    /// Largest `eta` regardless of case deletion.
    MaxEta,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RootSelection {
    pub candidates: Vec<f64>,
    pub eta_values: Vec<f64>,
    pub case_deletion: Option<f64>,
    pub chosen: f64,
}

/// Where a covariance entry came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sigma12Source {
    /// An admissible root of the stationarity polynomial.
    Root,
    /// No admissible root; case deletion clamped into the admissible interval.
    CaseDeletionFallback,
    /// No admissible root and no case deletion, no complete pairs, or a
    /// degenerate marginal variance.
    Zero,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairEstimate {
    pub sigma11: f64,
    pub sigma22: f64,
    pub sigma12: f64,
    pub source: Sigma12Source,
    pub selection: Option<RootSelection>,
}

/// Selects `sigma12` from precomputed statistics and marginal variances.
pub fn choose_sigma12(
    stats: &PairStats,
    sigma11: f64,
    sigma22: f64,
    case_deletion: Option<f64>,
    rule: SelectionRule,
) -> Result<(f64, Sigma12Source, Option<RootSelection>)> {
    let bound = check_variances(sigma11, sigma22)?;
    let candidates = solve_sigma12_cubic(stats, sigma11, sigma22)?;
    if candidates.is_empty() {
        return Ok(match case_deletion {
            Some(cd) => {
                let lim = FALLBACK_CLAMP * bound;
                (cd.clamp(-lim, lim), Sigma12Source::CaseDeletionFallback, None)
            }
            None => (0.0, Sigma12Source::Zero, None),
        });
    }
    let eta_of = |x: f64| eta(x, stats, sigma11, sigma22).unwrap_or(f64::NEG_INFINITY);
    let reference = match rule {
        SelectionRule::NearestCaseDeletion => case_deletion,
        SelectionRule::MaxEta => None,
    };
    let chosen = select_root(&candidates, reference, eta_of)?;
    let selection = RootSelection {
        eta_values: candidates.iter().map(|&c| eta_of(c)).collect(),
        candidates,
        case_deletion,
        chosen,
    };
    Ok((chosen, Sigma12Source::Root, Some(selection)))
}

/// Full per-pair pipeline: pooled marginal variances, sufficient statistics,
/// case deletion, cubic roots, and root selection with the fallback chain.
pub fn estimate_pair(
    first: MaskedColumn<'_>,
    second: MaskedColumn<'_>,
    groups: Groups<'_>,
    rule: SelectionRule,
) -> Result<PairEstimate> {
    check_pair_len(first, second, groups)?;
    let sigma11 = pooled_variance(first, groups)?;
    let sigma22 = pooled_variance(second, groups)?;
    let zero = |source| PairEstimate {
        sigma11,
        sigma22,
        sigma12: 0.0,
        source,
        selection: None,
    };
    if !(sigma11 > 0.0 && sigma22 > 0.0) {
        return Ok(zero(Sigma12Source::Zero));
    }
    let stats = match compute_pair_stats(first, second, groups) {
        Ok(s) => s,
        Err(Error::NoCompletePairs { .. }) => return Ok(zero(Sigma12Source::Zero)),
        Err(e) => return Err(e),
    };
    let cd = case_deletion_sigma12(first, second, groups);
    let (sigma12, source, selection) = choose_sigma12(&stats, sigma11, sigma22, cd, rule)?;
    Ok(PairEstimate {
        sigma11,
        sigma22,
        sigma12,
        source,
        selection,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn col<'a>(v: &'a [f64], m: &'a [bool]) -> MaskedColumn<'a> {
        MaskedColumn::new(v, m).unwrap()
    }

    fn stats(a: usize, s11: f64, s12: f64, s22: f64) -> PairStats {
        PairStats {
            groups: Vec::new(),
            complete_pairs: a,
            s11,
            s12,
            s22,
        }
    }

    #[test]
    fn pair_stats_complete_identical() {
        let v = [1.0, 2.0, 3.0];
        let m = [true; 3];
        let s = compute_pair_stats(col(&v, &m), col(&v, &m), Groups::Single).unwrap();
        assert_eq!(s.complete_pairs, 3);
        assert_eq!(s.groups[0].mean_first, Some(2.0));
        assert_eq!(s.groups[0].mean_second, Some(2.0));
        assert_eq!((s.s11, s.s12, s.s22), (2.0, 2.0, 2.0));
    }

    #[test]
    fn pair_stats_use_all_marginal_observations_for_means() {
        let x = [1.0, 2.0, 3.0, 10.0];
        let mx = [true, true, true, true];
        let y = [1.0, 2.0, 3.0, 0.0];
        let my = [true, true, true, false];
        let s = compute_pair_stats(col(&x, &mx), col(&y, &my), Groups::Single).unwrap();
        assert_eq!(s.complete_pairs, 3);
        assert_eq!(s.groups[0].mean_first, Some(4.0));
        assert_eq!(s.groups[0].mean_second, Some(2.0));
        // deviations about 4: -3, -2, -1
        assert_eq!(s.s11, 14.0);
        assert_eq!(s.s12, 3.0 + 0.0 - 1.0);
    }

    #[test]
    fn disjoint_supports_have_no_complete_pairs() {
        let x = [1.0, 2.0, 0.0, 0.0];
        let mx = [true, true, false, false];
        let y = [0.0, 0.0, 3.0, 4.0];
        let my = [false, false, true, true];
        let err = compute_pair_stats(col(&x, &mx), col(&y, &my), Groups::Single).unwrap_err();
        assert!(matches!(err, Error::NoCompletePairs { .. }));
    }

    #[test]
    fn groups_add_statistics() {
        let v = [1.0, 2.0, 4.0];
        let m = [true; 3];
        let single = compute_pair_stats(col(&v, &m), col(&v, &m), Groups::Single).unwrap();
        let vv = [1.0, 2.0, 4.0, 1.0, 2.0, 4.0];
        let mm = [true; 6];
        let codes = [0, 0, 0, 1, 1, 1];
        let two = compute_pair_stats(col(&vv, &mm), col(&vv, &mm), Groups::coded(&codes)).unwrap();
        assert_eq!(two.complete_pairs, 2 * single.complete_pairs);
        assert!((two.s11 - 2.0 * single.s11).abs() < 1e-12);
        assert!((two.s12 - 2.0 * single.s12).abs() < 1e-12);
        assert!((two.s22 - 2.0 * single.s22).abs() < 1e-12);
    }

    #[test]
    fn eta_at_zero() {
        let s = stats(7, 3.0, 1.2, 5.0);
        let got = eta(0.0, &s, 2.0, 1.5).unwrap();
        let want = -3.5 * 1.5f64.ln() - 5.0 / 3.0;
        assert!((got - want).abs() < 1e-14);
    }

    #[test]
    fn eta_is_even_when_s12_vanishes() {
        let s = stats(5, 4.0, 0.0, 4.0);
        for x in [0.1, 0.4, 0.9] {
            let a = eta(x, &s, 1.0, 1.0).unwrap();
            let b = eta(-x, &s, 1.0, 1.0).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn eta_rejects_inadmissible_arguments() {
        let s = stats(5, 4.0, 0.0, 4.0);
        assert!(matches!(eta(1.0, &s, 1.0, 1.0), Err(Error::OutsideAdmissible { .. })));
        assert!(matches!(eta(0.0, &s, 0.0, 1.0), Err(Error::NonPositiveVariance { .. })));
    }

    #[test]
    fn eta_matches_regression_residual_sum() {
        // eta is the conditional log-likelihood of the second feature given
        // the first over the complete pairs; sum it point by point.
        let x = [0.3, -1.2, 2.0, 0.7, -0.4, 1.1];
        let y = [1.0, -0.5, 1.7, 0.2, -1.1, 0.9];
        let m = [true; 6];
        let s = compute_pair_stats(col(&x, &m), col(&y, &m), Groups::Single).unwrap();
        let (mx, my) = (s.groups[0].mean_first.unwrap(), s.groups[0].mean_second.unwrap());
        let (s11, s22) = (0.8, 0.45);
        for c in [-0.5, -0.1, 0.0, 0.3, 0.55] {
            let v = s22 - c * c / s11;
            let beta = c / s11;
            let want: f64 = x
                .iter()
                .zip(&y)
                .map(|(xi, yi)| {
                    let e = (yi - my) - beta * (xi - mx);
                    -0.5 * v.ln() - e * e / (2.0 * v)
                })
                .sum();
            let got = eta(c, &s, s11, s22).unwrap();
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn odd_polynomial_has_root_zero() {
        let s = stats(4, 4.0, 0.0, 4.0);
        let roots = solve_sigma12_cubic(&s, 1.0, 1.0).unwrap();
        assert_eq!(roots.len(), 1);
        assert!(roots[0].abs() < 1e-15);
    }

    #[test]
    fn sample_covariance_is_a_root_on_complete_data() {
        let s = stats(10, 12.0, -4.5, 7.0);
        let (s11, s22) = (1.2, 0.7);
        let p = sigma12_polynomial(&s, s11, s22);
        let x = -0.45;
        assert!(cubic::eval_cubic(&p, x).abs() < 1e-14);
        let roots = solve_sigma12_cubic(&s, s11, s22).unwrap();
        assert_eq!(roots.len(), 1);
        assert!((roots[0] - x).abs() < 1e-14);
    }

    #[test]
    fn degenerate_leading_coefficient_is_an_error() {
        let s = stats(0, 0.0, 0.0, 0.0);
        assert!(matches!(
            solve_sigma12_cubic(&s, 1.0, 1.0),
            Err(Error::NoCompletePairs { .. })
        ));
    }

    #[test]
    fn case_deletion_examples() {
        let v = [1.0, 2.0, 3.0];
        let m = [true; 3];
        let cd = case_deletion_sigma12(col(&v, &m), col(&v, &m), Groups::Single).unwrap();
        assert!((cd - 2.0 / 3.0).abs() < 1e-15);

        let w = [-1.0, -2.0, -3.0];
        let cd = case_deletion_sigma12(col(&v, &m), col(&w, &m), Groups::Single).unwrap();
        assert!((cd + 2.0 / 3.0).abs() < 1e-15);

        let m1 = [true, false, false];
        assert_eq!(case_deletion_sigma12(col(&v, &m1), col(&v, &m), Groups::Single), None);
    }

    #[test]
    fn select_root_examples() {
        assert_eq!(select_root(&[0.1], Some(5.0), |_| 0.0).unwrap(), 0.1);
        assert_eq!(select_root(&[-0.5, 0.2, 0.6], Some(0.25), |_| 0.0).unwrap(), 0.2);
        assert!(matches!(select_root(&[], None, |_| 0.0), Err(Error::EmptyCandidates)));
        // equidistant candidates: larger eta wins
        assert_eq!(select_root(&[0.0, 0.4], Some(0.2), |x| x).unwrap(), 0.4);
        assert_eq!(select_root(&[0.0, 0.4], Some(0.2), |x| -x).unwrap(), 0.0);
    }

    #[test]
    fn eta_prefers_root_with_sign_of_s12() {
        let s = stats(20, 20.0, 3.0, 20.0);
        let r = 0.3;
        let plus = eta(r, &s, 1.0, 1.0).unwrap();
        let minus = eta(-r, &s, 1.0, 1.0).unwrap();
        assert!(plus > minus);
        let chosen = select_root(&[-r, r], None, |x| eta(x, &s, 1.0, 1.0).unwrap()).unwrap();
        assert_eq!(chosen, r);
    }

    #[test]
    fn pooled_variance_single_group_is_uncorrected() {
        let v = [1.0, 2.0, 3.0, 7.0];
        let m = [true, true, true, false];
        let got = pooled_variance(col(&v, &m), Groups::Single).unwrap();
        assert!((got - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn pooled_variance_two_groups_by_hand() {
        let v = [1.0, 3.0, 10.0, 14.0];
        let m = [true; 4];
        let codes = [0, 0, 1, 1];
        // deviations: +-1 and +-2 about their own group means
        let got = pooled_variance(col(&v, &m), Groups::coded(&codes)).unwrap();
        assert!((got - 10.0 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn estimate_pair_falls_back_to_zero_without_complete_pairs() {
        let x = [1.0, 2.0, 0.0, 0.0];
        let mx = [true, true, false, false];
        let y = [0.0, 0.0, 3.0, 4.0];
        let my = [false, false, true, true];
        let est = estimate_pair(col(&x, &mx), col(&y, &my), Groups::Single, SelectionRule::default())
            .unwrap();
        assert_eq!(est.sigma12, 0.0);
        assert_eq!(est.source, Sigma12Source::Zero);
    }

    #[test]
    fn proviso_boundary_is_handled() {
        // s12 = (s22 s11' + s11 s22') / (2 sqrt(s11' s22'))
        let (s11v, s22v): (f64, f64) = (1.0, 1.0);
        let (s11, s22): (f64, f64) = (3.0, 5.0);
        let s12 = (s22 * s11v + s11 * s22v) / (2.0 * (s11v * s22v).sqrt());
        let s = stats(6, s11, s12.min((s11 * s22).sqrt()), s22);
        let out = choose_sigma12(&s, s11v, s22v, None, SelectionRule::MaxEta).unwrap();
        assert!(out.0.abs() < 1.0);
        assert!(out.0.is_finite());
    }

    fn admissible_stats() -> impl Strategy<Value = (PairStats, f64, f64)> {
        (2usize..200, 0.1f64..10.0, 0.1f64..10.0, -0.99f64..0.99, 0.1f64..10.0, 0.1f64..10.0)
            .prop_map(|(a, v1, v2, corr, s11v, s22v)| {
                let s11 = a as f64 * v1;
                let s22 = a as f64 * v2;
                let s12 = corr * (s11 * s22).sqrt();
                (stats(a, s11, s12, s22), s11v, s22v)
            })
    }

    proptest! {
        #[test]
        fn roots_are_admissible_with_small_residual((s, v1, v2) in admissible_stats()) {
            let roots = solve_sigma12_cubic(&s, v1, v2).unwrap();
            let p = sigma12_polynomial(&s, v1, v2);
            let scale = p.iter().fold(1.0f64, |m, c| m.max(c.abs()));
            for r in roots {
                prop_assert!(r * r < v1 * v2);
                prop_assert!(cubic::eval_cubic(&p, r).abs() <= 1e-9 * scale);
            }
        }

        #[test]
        fn complete_data_root_is_sample_covariance((s, _v1, _v2) in admissible_stats()) {
            let a = s.complete_pairs as f64;
            let (v1, v2) = (s.s11 / a, s.s22 / a);
            let roots = solve_sigma12_cubic(&s, v1, v2).unwrap();
            let want = s.s12 / a;
            prop_assert_eq!(roots.len(), 1);
            prop_assert!((roots[0] - want).abs() <= 1e-10 * want.abs().max((v1 * v2).sqrt()));
        }

        #[test]
        fn proviso_perturbations_stay_finite(a in 2usize..50, s11 in 0.5f64..5.0, s22 in 0.5f64..5.0, eps in -1e-9f64..1e-9) {
            let (v1, v2) = (1.0, 1.0);
            let s12 = ((s22 * v1 + s11 * v2) / 2.0).min((s11 * s22).sqrt()) + eps;
            let st = stats(a, s11, s12.min((s11 * s22).sqrt()), s22);
            let (x, _, _) = choose_sigma12(&st, v1, v2, None, SelectionRule::MaxEta).unwrap();
            prop_assert!(x.is_finite() && x.abs() < 1.0);
        }
    }
}
