//! Compensated summation.

/// Neumaier's variant of Kahan summation.
///
/// Partial sums accumulated per shard and then merged in shard order give
/// results that agree with a single sequential pass to within a few ulps.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub const fn new() -> Self {
        NeumaierSum {
            sum: 0.0,
            compensation: 0.0,
        }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &NeumaierSum) {
        self.add(other.sum);
        self.add(other.compensation);
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl core::iter::FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<NeumaierSum>().value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_small_terms_lost_by_naive_summation() {
        let xs = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(xs), 2.0);
        assert_eq!(xs.iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn merge_matches_sequential() {
        let xs: alloc::vec::Vec<f64> = (1..=1000).map(|i| 1.0 / i as f64).collect();
        let whole = compensated_sum(xs.iter().copied());
        let mut a: NeumaierSum = xs[..300].iter().copied().collect();
        let b: NeumaierSum = xs[300..].iter().copied().collect();
        a.merge(&b);
        assert!((a.value() - whole).abs() <= 4.0 * f64::EPSILON * whole);
    }
}
