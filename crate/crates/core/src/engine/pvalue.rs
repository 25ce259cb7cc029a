use core::ops::Range;

use crate::math;
use crate::null_dist::{RxCMargins, RxcEnumerator, RxcNull, RxcSampler};
use crate::seed::{StreamKey, TAG_NULL_TABLE, TAG_POSTERIOR};
use crate::sum::NeumaierSum;
use crate::table::ContingencyTable;
use crate::{Error, Result};

use super::statistic::TableStatistic;

/// Exact significance level over an explicit sample space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactPValue {
    pub p_value: f64,
    pub qualifying_count: u64,
    pub space_size: u64,
}

#[inline]
fn at_least(score: f64, observed: f64) -> bool {
    // NaN never qualifies
    score >= observed
}

/// Null mass of the points scoring at least `observed`.
pub fn p_value_from_scores(null_probs: &[f64], scores: &[f64], observed: f64) -> Result<ExactPValue> {
    if null_probs.len() != scores.len() {
        return Err(Error::ShapeMismatch("one score per null probability"));
    }
    let mut mass = NeumaierSum::new();
    let mut qualifying = 0;
    for (&p, &s) in null_probs.iter().zip(scores) {
        if at_least(s, observed) {
            mass.add(p);
            qualifying += 1;
        }
    }
    Ok(ExactPValue {
        p_value: mass.value().clamp(0.0, 1.0),
        qualifying_count: qualifying,
        space_size: scores.len() as u64,
    })
}

/// `Σ_{n: T(n) ≥ T(observed)} Pr_H0(n)`. The statistic receives each point's
/// index so posterior statistics can derive per-point streams from it.
pub fn exact_p_value<P: PartialEq>(
    space: &[P],
    null_pmf: impl Fn(&P) -> f64,
    mut statistic: impl FnMut(usize, &P) -> Result<f64>,
    observed: &P,
) -> Result<ExactPValue> {
    let at = space.iter().position(|p| p == observed).ok_or(Error::ObservedNotInSpace)?;
    let mut scores = alloc::vec::Vec::with_capacity(space.len());
    for (i, p) in space.iter().enumerate() {
        scores.push(statistic(i, p)?);
    }
    let probs: alloc::vec::Vec<f64> = space.iter().map(null_pmf).collect();
    p_value_from_scores(&probs, &scores, scores[at])
}

/// Running totals of an enumerated test; shard tallies merged in shard order
/// reproduce the sequential pass.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnumerationTally {
    pub tables: u64,
    pub qualifying: u64,
    pub mass: NeumaierSum,
}

impl EnumerationTally {
    pub fn merge(&mut self, other: &EnumerationTally) {
        self.tables += other.tables;
        self.qualifying += other.qualifying;
        self.mass.merge(&other.mass);
    }

    pub fn p_value(&self) -> f64 {
        self.mass.value().clamp(0.0, 1.0)
    }
}

/// Tally over the tables of one enumeration shard.
pub fn tally_shard<T: PartialOrd>(
    enumerator: &RxcEnumerator,
    null: &RxcNull,
    first_row: &[u64],
    statistic: &mut impl FnMut(&[u64]) -> T,
    observed: &T,
) -> Result<EnumerationTally> {
    let mut tally = EnumerationTally::default();
    tally.tables = enumerator.visit_shard(first_row, |cells| {
        if statistic(cells) >= *observed {
            tally.qualifying += 1;
            tally.mass.add(null.pmf(cells));
        }
    })?;
    Ok(tally)
}

/// Exact test by walking every table with the observed margins.
pub fn exact_p_value_enumerated<T: PartialOrd>(
    margins: &RxCMargins,
    mut statistic: impl FnMut(&[u64]) -> T,
    observed: &ContingencyTable,
) -> Result<EnumerationTally> {
    if observed.shape() != margins.shape() || !margins.matches(observed.counts()) {
        return Err(Error::InvalidArgument("observed table does not have these margins"));
    }
    let target = statistic(observed.counts());
    let enumerator = RxcEnumerator::new(margins.clone());
    let null = RxcNull::new(margins.clone());
    let mut total = EnumerationTally::default();
    for row in enumerator.shards() {
        total.merge(&tally_shard(&enumerator, &null, &row, &mut statistic, &target)?);
    }
    Ok(total)
}

/// Monte Carlo significance level with its binomial standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McPValue {
    pub p_value: f64,
    pub std_error: f64,
    pub exceedances: u64,
    pub n_null: u64,
}

impl McPValue {
    pub fn from_counts(exceedances: u64, n_null: u64) -> Self {
        let p = exceedances as f64 / n_null as f64;
        McPValue {
            p_value: p,
            std_error: math::sqrt(p * (1.0 - p) / n_null as f64),
            exceedances,
            n_null,
        }
    }
}

/// Root key of the null tables for a master seed. Table `i` is drawn from
/// `key.child(i)`, its posterior draws from `key.child(i).child(TAG_POSTERIOR)`.
pub fn null_table_key(seed: u64) -> StreamKey {
    StreamKey::new(seed).child(TAG_NULL_TABLE)
}

/// Null tables in `range` whose statistic is at least `observed_stat`.
pub fn mc_exceedances(
    sampler: &RxcSampler,
    statistic: &TableStatistic,
    observed_stat: f64,
    key: StreamKey,
    range: Range<u64>,
) -> Result<u64> {
    let shape = sampler.margins().shape();
    statistic.check(&shape)?;
    let mut cells = alloc::vec![0; shape[0] * shape[1]];
    let mut hits = 0;
    for i in range {
        let k = key.child(i);
        sampler.sample_into(&mut k.rng(), &mut cells)?;
        let s = statistic.evaluate(&cells, &shape, k.child(TAG_POSTERIOR))?;
        hits += at_least(s, observed_stat) as u64;
    }
    Ok(hits)
}

pub fn mc_significance(
    margins: &RxCMargins,
    statistic: &TableStatistic,
    observed_stat: f64,
    n_null: u64,
    seed: u64,
) -> Result<McPValue> {
    if n_null == 0 {
        return Err(Error::InvalidArgument("n_null must be positive"));
    }
    let sampler = RxcSampler::new(margins.clone());
    let hits = mc_exceedances(&sampler, statistic, observed_stat, null_table_key(seed), 0..n_null)?;
    Ok(McPValue::from_counts(hits, n_null))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypotheses::Hypothesis;
    use crate::null_dist::rxc_enumerate;
    use crate::table::ConcordanceCounts;
    use alloc::vec;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    #[test]
    fn constant_statistic_gives_one() {
        let space: Vec<u32> = (0..5).collect();
        let p = exact_p_value(&space, |_| 0.2, |_, _| Ok(3.0), &2).unwrap();
        assert!((p.p_value - 1.0).abs() < 1e-15);
        assert_eq!(p.qualifying_count, 5);
        assert_eq!(exact_p_value(&space, |_| 0.2, |_, _| Ok(0.0), &9), Err(Error::ObservedNotInSpace));
    }

    #[test]
    fn two_by_two_diagonal() {
        let m = RxCMargins::new(vec![1, 1], vec![1, 1]).unwrap();
        let t = ContingencyTable::new(vec![1, 0, 0, 1], &[2, 2]).unwrap();
        let tally = exact_p_value_enumerated(&m, |c| c[0], &t).unwrap();
        assert!((tally.p_value() - 0.5).abs() < 1e-15);
        assert_eq!((tally.tables, tally.qualifying), (2, 1));
        let other = ContingencyTable::new(vec![2, 0, 0, 1], &[2, 2]).unwrap();
        assert!(exact_p_value_enumerated(&m, |c| c[0], &other).is_err());
    }

    #[test]
    fn observed_minus_infinity_gives_one() {
        let m = RxCMargins::new(vec![3, 4, 2], vec![2, 5, 2]).unwrap();
        let p = mc_significance(&m, &TableStatistic::GammaHat, f64::NEG_INFINITY, 200, 4).unwrap();
        assert_eq!(p.p_value, 1.0);
        assert_eq!(p.std_error, 0.0);
    }

    #[test]
    fn mc_matches_exact_on_a_small_space() {
        let t = ContingencyTable::new(vec![3, 1, 0, 1, 2, 2, 0, 1, 3], &[3, 3]).unwrap();
        let m = RxCMargins::of_table(&t).unwrap();
        let exact = exact_p_value_enumerated(&m, |c| ConcordanceCounts::from_cells(3, 3, c).gamma(), &t).unwrap();
        let observed = ConcordanceCounts::from_table(&t).unwrap().gamma().score();
        let n = 40_000;
        let mc = mc_significance(&m, &TableStatistic::GammaHat, observed, n, 17).unwrap();
        assert!(
            (mc.p_value - exact.p_value()).abs() < 4.0 * mc.std_error,
            "{} vs {}",
            mc.p_value,
            exact.p_value()
        );
        // splitting the null sample changes nothing
        let sampler = RxcSampler::new(m.clone());
        let key = null_table_key(17);
        let split: u64 = [0..7_000, 7_000..n]
            .into_iter()
            .map(|r| mc_exceedances(&sampler, &TableStatistic::GammaHat, observed, key, r).unwrap())
            .sum();
        assert_eq!(split, mc.exceedances);
    }

    #[test]
    fn posterior_statistic_is_a_function_of_the_null_index() {
        let m = RxCMargins::new(vec![4, 3], vec![3, 2, 2]).unwrap();
        let s = TableStatistic::Posterior {
            event: Hypothesis::Concordance,
            prior: 0.5,
            n_samples: 200,
        };
        let a = mc_significance(&m, &s, 0.6, 300, 2).unwrap();
        let b = mc_significance(&m, &s, 0.6, 300, 2).unwrap();
        assert_eq!(a, b);
        assert!(mc_significance(&m, &s, 0.6, 0, 2).is_err());
    }

    /// Materialize, sort by statistic, sum the prefix that reaches the
    /// observed value.
    fn sort_and_sum(m: &RxCMargins, observed: &[u64]) -> (f64, u64) {
        let (r, c) = (m.rows().len(), m.cols().len());
        let null = RxcNull::new(m.clone());
        let mut all: Vec<(crate::table::GammaStat, f64)> = Vec::new();
        rxc_enumerate(m, |cells| {
            all.push((ConcordanceCounts::from_cells(r, c, cells).gamma(), null.pmf(cells)))
        });
        all.sort_by(|a, b| b.0.cmp(&a.0));
        let target = ConcordanceCounts::from_cells(r, c, observed).gamma();
        let cut = all.iter().take_while(|(g, _)| *g >= target).count();
        let mass = crate::sum::compensated_sum(all[..cut].iter().map(|x| x.1));
        (mass, cut as u64)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn enumerated_matches_sort_and_sum(
            (shape, cells) in (1usize..5, 1usize..5)
                .prop_flat_map(|(r, c)| (Just([r, c]), proptest::collection::vec(0u64..4, r * c)))
        ) {
            let t = ContingencyTable::new(cells, &shape).unwrap();
            let m = RxCMargins::of_table(&t).unwrap();
            let (r, c) = (shape[0], shape[1]);
            let tally = exact_p_value_enumerated(&m, |x| ConcordanceCounts::from_cells(r, c, x).gamma(), &t).unwrap();
            let (mass, count) = sort_and_sum(&m, t.counts());
            prop_assert_eq!(tally.qualifying, count);
            prop_assert!((tally.p_value() - mass.min(1.0)).abs() < 1e-12);
        }

        #[test]
        fn p_value_is_monotone_in_the_observed_statistic(
            probs in proptest::collection::vec(0.0f64..1.0, 1..40),
            scores_seed in proptest::collection::vec(-3i32..4, 40),
            a in -4i32..5,
            b in -4i32..5,
        ) {
            let n = probs.len();
            let scores: Vec<f64> = scores_seed[..n].iter().map(|&s| s as f64).collect();
            let total: f64 = probs.iter().sum();
            let probs: Vec<f64> = probs.iter().map(|p| p / total.max(1e-300)).collect();
            let (lo, hi) = (a.min(b) as f64, a.max(b) as f64);
            let p_lo = p_value_from_scores(&probs, &scores, lo).unwrap();
            let p_hi = p_value_from_scores(&probs, &scores, hi).unwrap();
            prop_assert!(p_hi.p_value <= p_lo.p_value + 1e-15);
            prop_assert!(p_hi.qualifying_count <= p_lo.qualifying_count);
        }
    }
}
