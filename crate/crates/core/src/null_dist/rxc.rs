use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Distribution, Hypergeometric};

use crate::math;
use super::LnFactorials;
use crate::table::ContingencyTable;
use crate::{Error, Result};

/// Row and column sums of an R×C table.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RxCMargins {
    rows: Vec<u64>,
    cols: Vec<u64>,
    total: u64,
}

impl RxCMargins {
    pub fn new(rows: Vec<u64>, cols: Vec<u64>) -> Result<Self> {
        if rows.is_empty() || cols.is_empty() {
            return Err(Error::ShapeMismatch("margins need at least one row and one column"));
        }
        let total: u64 = rows.iter().sum();
        if cols.iter().sum::<u64>() != total {
            return Err(Error::InconsistentMargins);
        }
        Ok(RxCMargins { rows, cols, total })
    }

    pub fn of_table(table: &ContingencyTable) -> Result<Self> {
        if !table.is_two_way() {
            return Err(Error::ShapeMismatch("expected a two-dimensional table"));
        }
        Self::new(table.row_sums().to_vec(), table.col_sums().to_vec())
    }

    pub fn rows(&self) -> &[u64] {
        &self.rows
    }

    pub fn cols(&self) -> &[u64] {
        &self.cols
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn shape(&self) -> [usize; 2] {
        [self.rows.len(), self.cols.len()]
    }

    /// Whether a row-major cell vector has exactly these margins.
    pub fn matches(&self, cells: &[u64]) -> bool {
        let c = self.cols.len();
        cells.len() == self.rows.len() * c
            && cells
                .chunks_exact(c)
                .zip(&self.rows)
                .all(|(row, &r)| row.iter().sum::<u64>() == r)
            && (0..c).all(|j| cells[j..].iter().step_by(c).sum::<u64>() == self.cols[j])
    }
}

/// Multivariate hypergeometric law of a table given both margins.
#[derive(Clone, Debug)]
pub struct RxcNull {
    margins: RxCMargins,
    lnfact: LnFactorials,
    log_const: f64,
}

impl RxcNull {
    pub fn new(margins: RxCMargins) -> Self {
        let lnfact = LnFactorials::new(margins.total);
        let log_const = margins.rows.iter().map(|&r| lnfact.get(r)).sum::<f64>()
            + margins.cols.iter().map(|&c| lnfact.get(c)).sum::<f64>()
            - lnfact.get(margins.total);
        RxcNull {
            margins,
            lnfact,
            log_const,
        }
    }

    pub fn margins(&self) -> &RxCMargins {
        &self.margins
    }

    pub fn ln_factorials(&self) -> &LnFactorials {
        &self.lnfact
    }

    /// `ln[Π r_i! Π c_j! / (n! Π N_ij!)]`; the caller guarantees the margins.
    #[inline]
    pub fn log_pmf(&self, cells: &[u64]) -> f64 {
        self.log_const - cells.iter().map(|&x| self.lnfact.get(x)).sum::<f64>()
    }

    pub fn pmf(&self, cells: &[u64]) -> f64 {
        math::exp(self.log_pmf(cells))
    }
}

pub fn rxc_log_pmf(table: &ContingencyTable) -> Result<f64> {
    let margins = RxCMargins::of_table(table)?;
    Ok(RxcNull::new(margins).log_pmf(table.counts()))
}

/// Calls `visit` once per vector `x` with `Σ x = total` and `x_j ≤ caps[j]`,
/// in lexicographic order.
fn bounded_compositions(total: u64, caps: &[u64], visit: &mut impl FnMut(&[u64])) {
    fn go(j: usize, left: u64, caps: &[u64], rest: &[u64], buf: &mut [u64], visit: &mut impl FnMut(&[u64])) {
        if j + 1 == caps.len() {
            buf[j] = left;
            visit(buf);
            return;
        }
        let lo = left.saturating_sub(rest[j + 1]);
        let hi = left.min(caps[j]);
        for x in lo..=hi {
            buf[j] = x;
            go(j + 1, left - x, caps, rest, buf, visit);
        }
    }
    // rest[j] = Σ_{k ≥ j} caps[k]
    let mut rest = vec![0; caps.len() + 1];
    for j in (0..caps.len()).rev() {
        rest[j] = rest[j + 1] + caps[j];
    }
    if caps.is_empty() || rest[0] < total {
        return;
    }
    let mut buf = vec![0; caps.len()];
    go(0, total, caps, &rest, &mut buf, visit);
}

/// Depth-first enumeration of all tables with given margins.
///
/// Work splits into shards, one per admissible first row; the shards are
/// listed in the order a sequential walk visits them, so shard results
/// merged in order reproduce the sequential result.
#[derive(Clone, Debug)]
pub struct RxcEnumerator {
    margins: RxCMargins,
}

struct Walk<'a, F> {
    rows: &'a [u64],
    c: usize,
    cells: Vec<u64>,
    col_rem: Vec<u64>,
    visit: F,
    count: u64,
}

impl<F: FnMut(&[u64])> Walk<'_, F> {
    fn row(&mut self, i: usize) {
        let r = self.rows.len();
        if i + 1 == r {
            self.cells[i * self.c..].copy_from_slice(&self.col_rem);
            (self.visit)(&self.cells);
            self.count += 1;
            return;
        }
        self.cell(i, 0, self.rows[i]);
    }

    fn cell(&mut self, i: usize, j: usize, left: u64) {
        let c = self.c;
        if j + 1 == c {
            self.cells[i * c + j] = left;
            self.col_rem[j] -= left;
            self.row(i + 1);
            self.col_rem[j] += left;
            return;
        }
        let rest: u64 = self.col_rem[j + 1..].iter().sum();
        let lo = left.saturating_sub(rest);
        let hi = left.min(self.col_rem[j]);
        for x in lo..=hi {
            self.cells[i * c + j] = x;
            self.col_rem[j] -= x;
            self.cell(i, j + 1, left - x);
            self.col_rem[j] += x;
        }
    }
}

impl RxcEnumerator {
    pub fn new(margins: RxCMargins) -> Self {
        RxcEnumerator { margins }
    }

    pub fn margins(&self) -> &RxCMargins {
        &self.margins
    }

    /// Admissible first rows, in visit order.
    pub fn shards(&self) -> Vec<Vec<u64>> {
        let mut out = Vec::new();
        bounded_compositions(self.margins.rows[0], &self.margins.cols, &mut |x| {
            out.push(x.to_vec())
        });
        out
    }

    /// Visits every table whose first row is `first_row`; returns the count.
    pub fn visit_shard(&self, first_row: &[u64], visit: impl FnMut(&[u64])) -> Result<u64> {
        let m = &self.margins;
        let c = m.cols.len();
        if first_row.len() != c
            || first_row.iter().sum::<u64>() != m.rows[0]
            || first_row.iter().zip(&m.cols).any(|(x, cap)| x > cap)
        {
            return Err(Error::InvalidArgument("not an admissible first row"));
        }
        let mut walk = Walk {
            rows: &m.rows,
            c,
            cells: vec![0; m.rows.len() * c],
            col_rem: m.cols.iter().zip(first_row).map(|(a, b)| a - b).collect(),
            visit,
            count: 0,
        };
        walk.cells[..c].copy_from_slice(first_row);
        if m.rows.len() == 1 {
            (walk.visit)(&walk.cells);
            return Ok(1);
        }
        walk.row(1);
        Ok(walk.count)
    }

    pub fn visit_all(&self, mut visit: impl FnMut(&[u64])) -> u64 {
        self.shards()
            .iter()
            .map(|row| {
                self.visit_shard(row, &mut visit)
                    .expect("shards are admissible by construction")
            })
            .sum()
    }
}

/// Visits every table with the given margins exactly once; returns the count.
pub fn rxc_enumerate(margins: &RxCMargins, visit: impl FnMut(&[u64])) -> u64 {
    RxcEnumerator::new(margins.clone()).visit_all(visit)
}

/// Number of `x` with `Σ x = total` and `0 ≤ x_j ≤ caps[j]`.
fn count_bounded_compositions(total: u64, caps: &[u64]) -> u128 {
    let t = total as usize;
    let mut ways = vec![0u128; t + 1];
    ways[0] = 1;
    for &cap in caps {
        // ways'[s] = Σ_{x=0..=min(cap,s)} ways[s-x], via a sliding window
        let mut next = vec![0u128; t + 1];
        let mut window = 0u128;
        for s in 0..=t {
            window += ways[s];
            if s > cap as usize {
                window -= ways[s - cap as usize - 1];
            }
            next[s] = window;
        }
        ways = next;
    }
    ways[t]
}

/// Number of tables with the given margins, by dynamic programming over the
/// remaining column sums after each row; no table is visited.
pub fn rxc_count(margins: &RxCMargins) -> u128 {
    let rows = &margins.rows;
    let cols = &margins.cols;
    if rows.len() == 1 {
        return 1;
    }
    // mixed-radix key of a column-remainder state
    let radix: Vec<u128> = cols.iter().map(|&c| c as u128 + 1).collect();
    let encode = |state: &[u64]| {
        state
            .iter()
            .zip(&radix)
            .fold(0u128, |acc, (&s, &b)| acc * b + s as u128)
    };
    let decode = |mut key: u128, out: &mut [u64]| {
        for j in (0..out.len()).rev() {
            out[j] = (key % radix[j]) as u64;
            key /= radix[j];
        }
    };
    let mut states: BTreeMap<u128, u128> = BTreeMap::new();
    states.insert(encode(cols), 1);
    let mut state = vec![0u64; cols.len()];
    let mut next_state = vec![0u64; cols.len()];
    // the last two rows are counted in closed form
    for &r in &rows[..rows.len() - 2] {
        let mut next = BTreeMap::new();
        for (&key, &n) in &states {
            decode(key, &mut state);
            bounded_compositions(r, &state, &mut |x| {
                for j in 0..x.len() {
                    next_state[j] = state[j] - x[j];
                }
                *next.entry(encode(&next_state)).or_insert(0) += n;
            });
        }
        states = next;
    }
    let penultimate = rows[rows.len() - 2];
    states
        .iter()
        .map(|(&key, &n)| {
            decode(key, &mut state);
            n * count_bounded_compositions(penultimate, &state)
        })
        .sum()
}

/// Exact sampler for the fixed-margins law: rows are filled in order, and
/// each cell is a hypergeometric draw given what remains of its row and of
/// the columns to its right.
#[derive(Clone, Debug)]
pub struct RxcSampler {
    margins: RxCMargins,
}

impl RxcSampler {
    pub fn new(margins: RxCMargins) -> Self {
        RxcSampler { margins }
    }

    pub fn margins(&self) -> &RxCMargins {
        &self.margins
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, cells: &mut [u64]) -> Result<()> {
        let m = &self.margins;
        let (r, c) = (m.rows.len(), m.cols.len());
        if cells.len() != r * c {
            return Err(Error::ShapeMismatch("cell buffer has the wrong length"));
        }
        let mut col_rem = m.cols.clone();
        for i in 0..r - 1 {
            let mut need = m.rows[i];
            let mut pool: u64 = col_rem.iter().sum();
            for j in 0..c - 1 {
                let feature = col_rem[j];
                let x = if need == 0 || feature == 0 {
                    0
                } else if need == pool {
                    feature
                } else if feature == pool {
                    need
                } else {
                    Hypergeometric::new(pool, feature, need)
                        .map_err(|_| Error::Sampler("hypergeometric parameters rejected"))?
                        .sample(rng)
                };
                cells[i * c + j] = x;
                col_rem[j] -= x;
                need -= x;
                pool -= feature;
            }
            cells[i * c + c - 1] = need;
            col_rem[c - 1] -= need;
        }
        cells[(r - 1) * c..].copy_from_slice(&col_rem);
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ContingencyTable> {
        let shape = self.margins.shape();
        let mut cells = vec![0; shape[0] * shape[1]];
        self.sample_into(rng, &mut cells)?;
        ContingencyTable::new(cells, &shape)
    }
}

pub fn rxc_sample<R: Rng + ?Sized>(margins: &RxCMargins, rng: &mut R) -> Result<ContingencyTable> {
    RxcSampler::new(margins.clone()).sample(rng)
}
