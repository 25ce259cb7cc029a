use alloc::vec::Vec;

use crate::math;
use crate::sum::NeumaierSum;

/// Lookup table of `ln k!` for `0 ≤ k ≤ max`.
#[derive(Clone, Debug)]
pub struct LnFactorials {
    table: Vec<f64>,
}

impl LnFactorials {
    pub fn new(max: u64) -> Self {
        let mut acc = NeumaierSum::new();
        let mut table = Vec::with_capacity(max as usize + 1);
        table.push(0.0);
        for k in 1..=max {
            acc.add(math::ln(k as f64));
            table.push(acc.value());
        }
        LnFactorials { table }
    }

    pub fn max(&self) -> u64 {
        self.table.len() as u64 - 1
    }

    /// Panics if `k` exceeds the table.
    #[inline]
    pub fn get(&self, k: u64) -> f64 {
        self.table[k as usize]
    }

    pub fn ln_choose(&self, n: u64, k: u64) -> f64 {
        if k > n {
            return f64::NEG_INFINITY;
        }
        self.get(n) - self.get(k) - self.get(n - k)
    }

    /// Log-probability of `x` successes in `k` draws without replacement from
    /// `m` successes and `n` failures; `-∞` outside the support.
    pub fn hypergeom_log_pmf(&self, x: u64, m: u64, n: u64, k: u64) -> f64 {
        if k > m + n || x > k || x > m || k - x > n {
            return f64::NEG_INFINITY;
        }
        self.ln_choose(m, x) + self.ln_choose(n, k - x) - self.ln_choose(m + n, k)
    }
}

/// Free-standing hypergeometric log-pmf; builds a table of size `m + n`.
pub fn hypergeom_log_pmf(x: u64, m: u64, n: u64, k: u64) -> f64 {
    LnFactorials::new(m + n).hypergeom_log_pmf(x, m, n, k)
}
