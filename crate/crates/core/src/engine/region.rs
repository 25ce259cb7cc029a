use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::sum::NeumaierSum;
use crate::{Error, Result};

/// Slack on the level comparison so that exact fits like `0.1 + 0.2 ≤ 0.3`
/// survive rounding.
const LEVEL_SLACK: f64 = 1e-12;

/// Subset of a sample space indexed `0..len`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Region {
    members: Vec<bool>,
}

impl Region {
    pub fn empty(len: usize) -> Self {
        Region {
            members: vec![false; len],
        }
    }

    pub fn full(len: usize) -> Self {
        Region {
            members: vec![true; len],
        }
    }

    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut r = Region::empty(len);
        for i in indices {
            r.members[i] = true;
        }
        r
    }

    pub fn from_mask(members: Vec<bool>) -> Self {
        Region { members }
    }

    pub fn space_size(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.members.get(index).copied().unwrap_or(false)
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i)
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.members.iter().any(|&m| m)
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        self.indices().all(|i| other.contains(i))
    }

    pub fn insert(&mut self, index: usize) {
        self.members[index] = true;
    }

    /// Probability of the region under a pmf over the space.
    pub fn mass(&self, pmf: &[f64]) -> f64 {
        self.indices().map(|i| pmf[i]).collect::<NeumaierSum>().value()
    }
}

/// `p1 / p0` with `0/x = 0` (including `0/0`) and `x/0 = +∞` for `x > 0`.
pub fn posterior_ratio(p1: f64, p0: f64) -> f64 {
    if p1 == 0.0 {
        0.0
    } else if p0 == 0.0 {
        f64::INFINITY
    } else {
        p1 / p0
    }
}

/// Points whose ratio is at least `delta`.
pub fn bayes_region(ratios: &[f64], delta: f64) -> Region {
    Region::from_mask(ratios.iter().map(|&r| r >= delta).collect())
}

/// A level-α Bayes region and the smallest ratio it contains.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaRegion {
    pub region: Region,
    /// `None` when the region is empty.
    pub delta: Option<f64>,
    pub null_mass: f64,
}

fn descending(ratios: &[f64], indices: &mut [usize]) {
    // NaN sorts last, i.e. is never preferred
    let key = |i: usize| if ratios[i].is_nan() { f64::NEG_INFINITY } else { ratios[i] };
    indices.sort_by(|&a, &b| key(b).partial_cmp(&key(a)).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
}

/// Adds ratio-tied groups in descending order while the null mass stays
/// within α; a group that does not fit stops the scan, so the result is
/// always some `S^Bayes(δ)`.
fn greedy(null_probs: &[f64], ratios: &[f64], indices: &mut [usize], alpha: f64, region: &mut Region) -> (Option<f64>, f64) {
    descending(ratios, indices);
    let mut mass = NeumaierSum::new();
    let mut delta = None;
    let mut start = 0;
    while start < indices.len() {
        let r = ratios[indices[start]];
        if r.is_nan() {
            break;
        }
        let end = start + indices[start..].iter().take_while(|&&i| ratios[i] == r).count();
        let mut trial = mass;
        for &i in &indices[start..end] {
            trial.add(null_probs[i]);
        }
        if trial.value() > alpha + LEVEL_SLACK {
            break;
        }
        for &i in &indices[start..end] {
            region.insert(i);
        }
        mass = trial;
        delta = Some(r);
        start = end;
    }
    (delta, mass.value())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument("alpha must lie in [0, 1]"));
    }
    Ok(())
}

pub fn bayes_region_alpha(null_probs: &[f64], ratios: &[f64], alpha: f64) -> Result<AlphaRegion> {
    check_alpha(alpha)?;
    if null_probs.len() != ratios.len() {
        return Err(Error::ShapeMismatch("one ratio per null probability"));
    }
    let mut region = Region::empty(ratios.len());
    let mut indices: Vec<usize> = (0..ratios.len()).collect();
    let (delta, null_mass) = greedy(null_probs, ratios, &mut indices, alpha, &mut region);
    Ok(AlphaRegion {
        region,
        delta,
        null_mass,
    })
}

/// Union of per-partition level-α regions. `conditional_null[i]` is the null
/// probability of point `i` given its partition; points in no partition are
/// never rejected.
pub fn conditional_bayes_region(
    partitions: &[Vec<usize>],
    conditional_null: &[f64],
    ratios: &[f64],
    alpha: f64,
) -> Result<Region> {
    check_alpha(alpha)?;
    if conditional_null.len() != ratios.len() {
        return Err(Error::ShapeMismatch("one ratio per null probability"));
    }
    let mut seen = vec![false; ratios.len()];
    for part in partitions {
        for &i in part {
            if i >= ratios.len() {
                return Err(Error::InvalidArgument("partition index out of range"));
            }
            if core::mem::replace(&mut seen[i], true) {
                return Err(Error::OverlappingPartitions(i));
            }
        }
    }
    let mut region = Region::empty(ratios.len());
    for part in partitions {
        let mut indices = part.clone();
        greedy(conditional_null, ratios, &mut indices, alpha, &mut region);
    }
    Ok(region)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn threshold_examples() {
        let ratios = [0.1, 0.5, 1.0, 2.0, 9.0];
        assert_eq!(bayes_region(&ratios, 0.0), Region::full(5));
        assert!(bayes_region(&ratios, f64::INFINITY).is_empty());
        assert_eq!(bayes_region(&ratios, 1.0), Region::from_indices(5, [2, 3, 4]));
        let with_inf = [0.0, f64::INFINITY];
        assert_eq!(bayes_region(&with_inf, f64::INFINITY), Region::from_indices(2, [1]));
    }

    #[test]
    fn ratio_conventions() {
        assert_eq!(posterior_ratio(0.0, 0.0), 0.0);
        assert_eq!(posterior_ratio(0.0, 0.3), 0.0);
        assert_eq!(posterior_ratio(0.2, 0.0), f64::INFINITY);
        assert_eq!(posterior_ratio(0.3, 0.6), 0.5);
    }

    #[test]
    fn alpha_examples() {
        let null = [0.3, 0.3, 0.2, 0.2];
        let ratios = [4.0, 3.0, 2.0, 1.0];
        let r = bayes_region_alpha(&null, &ratios, 0.5).unwrap();
        assert_eq!(r.region, Region::from_indices(4, [0]));
        assert_eq!(r.delta, Some(4.0));
        assert!((r.null_mass - 0.3).abs() < 1e-15);

        let r = bayes_region_alpha(&null, &ratios, 1.0).unwrap();
        assert_eq!(r.region, Region::full(4));
        assert_eq!(r.delta, Some(1.0));

        let r = bayes_region_alpha(&null, &ratios, 0.0).unwrap();
        assert!(r.region.is_empty());
        assert_eq!(r.delta, None);

        // 0.1 + 0.2 rounds above 0.3
        let r = bayes_region_alpha(&[0.1, 0.2, 0.7], &[3.0, 2.0, 1.0], 0.3).unwrap();
        assert_eq!(r.region, Region::from_indices(3, [0, 1]));
        assert!(bayes_region_alpha(&null, &ratios, 1.5).is_err());
    }

    #[test]
    fn tied_groups_are_all_in_or_all_out() {
        let null = [0.2, 0.2, 0.2, 0.4];
        let ratios = [5.0, 2.0, 2.0, 1.0];
        let r = bayes_region_alpha(&null, &ratios, 0.5).unwrap();
        assert_eq!(r.region, Region::from_indices(4, [0]));
        let r = bayes_region_alpha(&null, &ratios, 0.6).unwrap();
        assert_eq!(r.region, Region::from_indices(4, [0, 1, 2]));
        assert_eq!(r.delta, Some(2.0));
    }

    #[test]
    fn conditional_examples() {
        let null = [0.3, 0.3, 0.2, 0.2];
        let ratios = [4.0, 3.0, 2.0, 1.0];
        let single = conditional_bayes_region(&[vec![0, 1, 2, 3]], &null, &ratios, 0.5).unwrap();
        assert_eq!(single, bayes_region_alpha(&null, &ratios, 0.5).unwrap().region);

        // the second partition has only zero ratios and excess mass
        let cond = [0.5, 0.5, 0.6, 0.4];
        let ratios = [3.0, 1.0, 0.0, 0.0];
        let r = conditional_bayes_region(&[vec![0, 1], vec![2, 3]], &cond, &ratios, 0.3).unwrap();
        assert!(r.is_empty());
        let r = conditional_bayes_region(&[vec![0, 1], vec![2, 3]], &cond, &ratios, 0.5).unwrap();
        assert_eq!(r, Region::from_indices(4, [0]));

        assert_eq!(
            conditional_bayes_region(&[vec![0, 1], vec![1, 2]], &cond, &ratios, 0.5),
            Err(Error::OverlappingPartitions(1))
        );
    }

    fn space() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..30).prop_flat_map(|n| {
            (
                proptest::collection::vec(0.0f64..1.0, n),
                // few distinct values to force ties
                proptest::collection::vec(0u8..6, n),
            )
                .prop_map(|(w, r)| {
                    let t: f64 = w.iter().sum::<f64>().max(1e-300);
                    let w = w.iter().map(|x| x / t).collect();
                    let r = r.iter().map(|&k| if k == 5 { f64::INFINITY } else { k as f64 * 0.7 }).collect();
                    (w, r)
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn nesting_and_level((null, ratios) in space(), a in 0.0f64..1.0, b in 0.0f64..1.0, d in 0.0f64..4.0, e in 0.0f64..4.0) {
            let (lo, hi) = (a.min(b), a.max(b));
            let small = bayes_region_alpha(&null, &ratios, lo).unwrap();
            let large = bayes_region_alpha(&null, &ratios, hi).unwrap();
            prop_assert!(small.region.is_subset(&large.region));
            prop_assert!(small.region.mass(&null) <= lo + 1e-12);
            prop_assert!(large.region.mass(&null) <= hi + 1e-12);
            // the level-α region is a threshold region
            if let Some(delta) = large.delta {
                prop_assert_eq!(&large.region, &bayes_region(&ratios, delta));
            }
            let (dl, dh) = (d.min(e), d.max(e));
            prop_assert!(bayes_region(&ratios, dh).is_subset(&bayes_region(&ratios, dl)));
        }

        #[test]
        fn conditional_regions_keep_the_level(
            (weights, ratios) in space(),
            cuts in proptest::collection::vec(any::<bool>(), 30),
            alpha in 0.0f64..1.0,
        ) {
            let n = weights.len();
            let mut parts: Vec<Vec<usize>> = vec![vec![]];
            for i in 0..n {
                if i > 0 && cuts[i] {
                    parts.push(vec![]);
                }
                parts.last_mut().unwrap().push(i);
            }
            // partition masses and within-partition conditional pmfs
            let mut cond = vec![0.0; n];
            let mut part_mass = vec![];
            for p in &parts {
                let m: f64 = p.iter().map(|&i| weights[i]).sum();
                part_mass.push(m);
                for &i in p {
                    cond[i] = if m > 0.0 { weights[i] / m } else { 1.0 / p.len() as f64 };
                }
            }
            let region = conditional_bayes_region(&parts, &cond, &ratios, alpha).unwrap();
            let mut overall = 0.0;
            for (p, m) in parts.iter().zip(&part_mass) {
                let within: f64 = p.iter().filter(|&&i| region.contains(i)).map(|&i| cond[i]).sum();
                prop_assert!(within <= alpha + 1e-12);
                overall += within * m;
            }
            prop_assert!(overall <= alpha + 1e-12);
        }
    }
}
