use alloc::vec;
use alloc::vec::Vec;
use core::ops::RangeInclusive;

use crate::math;
use super::LnFactorials;
use crate::table::ContingencyTable;
use crate::{Error, Result};

/// Row and column sums of one 2×2 stratum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StratumMargins {
    pub rows: [u64; 2],
    pub cols: [u64; 2],
}

impl StratumMargins {
    pub fn new(rows: [u64; 2], cols: [u64; 2]) -> Result<Self> {
        if rows[0] + rows[1] != cols[0] + cols[1] {
            return Err(Error::InconsistentMargins);
        }
        Ok(StratumMargins { rows, cols })
    }

    pub fn total(&self) -> u64 {
        self.rows[0] + self.rows[1]
    }

    /// Admissible values of the first cell.
    pub fn support(&self) -> RangeInclusive<u64> {
        self.cols[0].saturating_sub(self.rows[1])..=self.rows[0].min(self.cols[0])
    }

    /// The 2×2 layer whose first cell is `x`.
    pub fn layer(&self, x: u64) -> [u64; 4] {
        [
            x,
            self.rows[0] - x,
            self.cols[0] - x,
            self.rows[1] + x - self.cols[0],
        ]
    }
}

/// Margins of a stack of 2×2 tables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StratifiedMargins {
    strata: Vec<StratumMargins>,
}

impl StratifiedMargins {
    pub fn new(strata: Vec<StratumMargins>) -> Result<Self> {
        if strata.is_empty() {
            return Err(Error::InvalidArgument("at least one stratum is required"));
        }
        Ok(StratifiedMargins { strata })
    }

    pub fn from_table(table: &ContingencyTable) -> Result<Self> {
        if table.shape().len() != 3 || table.layer_dims() != (2, 2) {
            return Err(Error::ShapeMismatch("expected shape [K, 2, 2]"));
        }
        let strata = (0..table.n_layers())
            .map(|s| {
                let m = table.layer_margins(s);
                StratumMargins::new([m.rows[0], m.rows[1]], [m.cols[0], m.cols[1]])
            })
            .collect::<Result<_>>()?;
        Self::new(strata)
    }

    pub fn strata(&self) -> &[StratumMargins] {
        &self.strata
    }
}

/// A point of the conditional sample space: the first cell of every stratum.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StratifiedPoint(pub Vec<u64>);

/// Product of independent per-stratum hypergeometric laws.
#[derive(Clone, Debug)]
pub struct StratifiedNull {
    margins: StratifiedMargins,
    lnfact: LnFactorials,
}

impl StratifiedNull {
    pub fn new(margins: StratifiedMargins) -> Self {
        let max = margins.strata().iter().map(|s| s.total()).max().unwrap_or(0);
        StratifiedNull {
            lnfact: LnFactorials::new(max),
            margins,
        }
    }

    pub fn margins(&self) -> &StratifiedMargins {
        &self.margins
    }

    /// `-∞` for points outside the space.
    pub fn log_pmf(&self, point: &StratifiedPoint) -> f64 {
        if point.0.len() != self.margins.strata.len() {
            return f64::NEG_INFINITY;
        }
        self.margins
            .strata
            .iter()
            .zip(&point.0)
            .map(|(s, &x)| self.lnfact.hypergeom_log_pmf(x, s.rows[0], s.rows[1], s.cols[0]))
            .sum()
    }

    pub fn pmf(&self, point: &StratifiedPoint) -> f64 {
        math::exp(self.log_pmf(point))
    }

    /// Every point in lexicographic order of the per-stratum first cells.
    pub fn enumerate(&self) -> Vec<StratifiedPoint> {
        let ranges: Vec<RangeInclusive<u64>> =
            self.margins.strata.iter().map(|s| s.support()).collect();
        let size: usize = ranges.iter().map(|r| r.clone().count()).product();
        let mut points = Vec::with_capacity(size);
        let mut current: Vec<u64> = ranges.iter().map(|r| *r.start()).collect();
        if size == 0 {
            return points;
        }
        loop {
            points.push(StratifiedPoint(current.clone()));
            // odometer increment, last stratum fastest
            let mut s = ranges.len();
            loop {
                if s == 0 {
                    return points;
                }
                s -= 1;
                if current[s] < *ranges[s].end() {
                    current[s] += 1;
                    break;
                }
                current[s] = *ranges[s].start();
            }
        }
    }

    /// The full `[K, 2, 2]` table implied by a point.
    pub fn table_at(&self, point: &StratifiedPoint) -> Result<ContingencyTable> {
        if point.0.len() != self.margins.strata.len() {
            return Err(Error::ShapeMismatch("point has the wrong number of strata"));
        }
        let mut counts = vec![];
        for (s, &x) in self.margins.strata.iter().zip(&point.0) {
            if !s.support().contains(&x) {
                return Err(Error::InvalidArgument("point lies outside the sample space"));
            }
            counts.extend_from_slice(&s.layer(x));
        }
        ContingencyTable::new(counts, &[self.margins.strata.len(), 2, 2])
    }

    /// The point of a table with these margins.
    pub fn point_of(table: &ContingencyTable) -> Result<StratifiedPoint> {
        StratifiedMargins::from_table(table)?;
        Ok(StratifiedPoint(
            (0..table.n_layers()).map(|s| table.layer(s)[0]).collect(),
        ))
    }
}

pub fn stratified_null_pmf(point: &StratifiedPoint, margins: &StratifiedMargins) -> f64 {
    StratifiedNull::new(margins.clone()).pmf(point)
}

pub fn enumerate_stratified_space(margins: &StratifiedMargins) -> Vec<StratifiedPoint> {
    StratifiedNull::new(margins.clone()).enumerate()
}
