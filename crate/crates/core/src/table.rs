//! Contingency tables, cell-probability vectors and the functionals of a
//! probability vector that the discovery events are built from.
//!
//! Tables are either two-dimensional `[R, C]` or stratified `[K, R, C]`; in
//! both cases they are stored row-major as a stack of `R × C` layers, and the
//! row and column sums of each layer are computed once at construction.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::ops::{Add, Mul};

use crate::{Error, Result};

/// Allowed deviation of a probability vector's sum from one.
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LayerMargins {
    pub rows: Vec<u64>,
    pub cols: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ContingencyTable {
    shape: Vec<usize>,
    counts: Vec<u64>,
    total: u64,
    layers: Vec<LayerMargins>,
}

/// Splits a shape into `(layers, rows, cols)`.
fn layer_geometry(shape: &[usize]) -> Result<(usize, usize, usize)> {
    let (k, r, c) = match *shape {
        [r, c] => (1, r, c),
        [k, r, c] => (k, r, c),
        _ => return Err(Error::ShapeMismatch("tables have two or three dimensions")),
    };
    if k == 0 || r == 0 || c == 0 {
        return Err(Error::ShapeMismatch("every dimension must be at least 1"));
    }
    Ok((k, r, c))
}

impl ContingencyTable {
    pub fn new(counts: Vec<u64>, shape: &[usize]) -> Result<Self> {
        let (k, r, c) = layer_geometry(shape)?;
        if counts.len() != k * r * c {
            return Err(Error::ShapeMismatch("number of counts differs from the shape product"));
        }
        let layers = counts
            .chunks_exact(r * c)
            .map(|layer| LayerMargins {
                rows: layer.chunks_exact(c).map(|row| row.iter().sum()).collect(),
                cols: (0..c).map(|j| (0..r).map(|i| layer[i * c + j]).sum()).collect(),
            })
            .collect();
        let total = counts.iter().sum();
        Ok(ContingencyTable {
            shape: shape.to_vec(),
            counts,
            total,
            layers,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    /// Rows and columns of each layer.
    pub fn layer_dims(&self) -> (usize, usize) {
        let n = self.shape.len();
        (self.shape[n - 2], self.shape[n - 1])
    }

    pub fn layer(&self, index: usize) -> &[u64] {
        let (r, c) = self.layer_dims();
        &self.counts[index * r * c..(index + 1) * r * c]
    }

    pub fn layer_margins(&self, index: usize) -> &LayerMargins {
        &self.layers[index]
    }

    /// Row sums of a two-dimensional table (of the first layer otherwise).
    pub fn row_sums(&self) -> &[u64] {
        &self.layers[0].rows
    }

    pub fn col_sums(&self) -> &[u64] {
        &self.layers[0].cols
    }

    pub fn is_two_way(&self) -> bool {
        self.shape.len() == 2
    }
}

/// Checks raw signed counts against a shape and builds the table.
pub fn validate_table(raw_counts: &[i64], shape: &[usize]) -> Result<ContingencyTable> {
    let (k, r, c) = layer_geometry(shape)?;
    if raw_counts.len() != k * r * c {
        return Err(Error::ShapeMismatch("number of counts differs from the shape product"));
    }
    let counts = raw_counts
        .iter()
        .enumerate()
        .map(|(index, &value)| {
            u64::try_from(value).map_err(|_| Error::NegativeCount { index, value })
        })
        .collect::<Result<Vec<_>>>()?;
    ContingencyTable::new(counts, shape)
}

/// A point of the probability simplex over the cells of a table.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityVector {
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl ProbabilityVector {
    pub fn new(values: Vec<f64>, shape: &[usize]) -> Result<Self> {
        let (k, r, c) = layer_geometry(shape)?;
        if values.len() != k * r * c {
            return Err(Error::ShapeMismatch("number of values differs from the shape product"));
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::NotOnSimplex);
        }
        let sum = crate::sum::compensated_sum(values.iter().copied());
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::NotOnSimplex);
        }
        Ok(ProbabilityVector {
            shape: shape.to_vec(),
            values,
        })
    }

    /// Normalizes nonnegative weights onto the simplex.
    pub fn from_weights(weights: &[f64], shape: &[usize]) -> Result<Self> {
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::NotOnSimplex);
        }
        let sum = crate::sum::compensated_sum(weights.iter().copied());
        if !(sum > 0.0) {
            return Err(Error::NotOnSimplex);
        }
        let mut values: Vec<f64> = weights.iter().map(|w| w / sum).collect();
        // one more pass puts the sum within a couple of ulps of one
        let resum = crate::sum::compensated_sum(values.iter().copied());
        values.iter_mut().for_each(|v| *v /= resum);
        Self::new(values, shape)
    }

    pub fn uniform(shape: &[usize]) -> Result<Self> {
        let n: usize = shape.iter().product();
        Self::from_weights(&vec![1.0; n], shape)
    }

    /// The product distribution `π_ij = π_{i+} π_{+j}`.
    pub fn independence(row_probs: &[f64], col_probs: &[f64]) -> Result<Self> {
        let weights: Vec<f64> = row_probs
            .iter()
            .flat_map(|r| col_probs.iter().map(move |c| r * c))
            .collect();
        Self::from_weights(&weights, &[row_probs.len(), col_probs.len()])
    }

    /// Zero-filled buffer for samplers that normalize in place.
    pub(crate) fn buffer(shape: &[usize]) -> Self {
        ProbabilityVector {
            shape: shape.to_vec(),
            values: vec![0.0; shape.iter().product()],
        }
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    fn dims2(&self) -> Result<(usize, usize)> {
        match *self.shape {
            [r, c] => Ok((r, c)),
            _ => Err(Error::ShapeMismatch("expected a two-dimensional probability vector")),
        }
    }

    pub fn transpose(&self) -> Result<Self> {
        let (r, c) = self.dims2()?;
        let values = (0..c)
            .flat_map(|j| (0..r).map(move |i| (i, j)))
            .map(|(i, j)| self.values[i * c + j])
            .collect();
        Ok(ProbabilityVector {
            shape: vec![c, r],
            values,
        })
    }

    pub fn reverse_rows(&self) -> Result<Self> {
        let (_, c) = self.dims2()?;
        let values = self.values.rchunks_exact(c).flatten().copied().collect();
        Ok(ProbabilityVector {
            shape: self.shape.clone(),
            values,
        })
    }

    pub fn reverse_cols(&self) -> Result<Self> {
        let (_, c) = self.dims2()?;
        let values = self
            .values
            .chunks_exact(c)
            .flat_map(|row| row.iter().rev())
            .copied()
            .collect();
        Ok(ProbabilityVector {
            shape: self.shape.clone(),
            values,
        })
    }
}

/// Plug-in estimate `counts / total`.
pub fn plugin_probs(table: &ContingencyTable) -> Result<ProbabilityVector> {
    if table.total() == 0 {
        return Err(Error::EmptyTable);
    }
    let n = table.total() as f64;
    let values = table.counts().iter().map(|&x| x as f64 / n).collect();
    Ok(ProbabilityVector {
        shape: table.shape().to_vec(),
        values,
    })
}

/// Odds ratios of a `[2, 2, 2]` vector: the two conditional odds ratios
/// between the second and third variable given the first, and the marginal
/// odds ratio after collapsing the first variable. Values lie in `[0, ∞]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OddsRatioSet {
    pub given_x1: f64,
    pub given_x2: f64,
    pub marginal: f64,
}

/// `(a·d)/(b·c)` in the extended reals; only `0/0` is an error.
pub fn cross_product_ratio(a: f64, b: f64, c: f64, d: f64) -> Result<f64> {
    let num = a * d;
    let den = b * c;
    match (num == 0.0, den == 0.0) {
        (true, true) => Err(Error::IndeterminateOddsRatio),
        (_, true) => Ok(f64::INFINITY),
        _ => Ok(num / den),
    }
}

pub(crate) fn check_shape_222(shape: &[usize]) -> Result<()> {
    if shape != [2, 2, 2] {
        return Err(Error::ShapeMismatch("expected shape [2, 2, 2]"));
    }
    Ok(())
}

pub fn odds_ratios_222(p: &ProbabilityVector) -> Result<OddsRatioSet> {
    check_shape_222(p.shape())?;
    let v = p.values();
    let m = |jk: usize| v[jk] + v[4 + jk];
    Ok(OddsRatioSet {
        given_x1: cross_product_ratio(v[0], v[1], v[2], v[3])?,
        given_x2: cross_product_ratio(v[4], v[5], v[6], v[7])?,
        marginal: cross_product_ratio(m(0), m(1), m(2), m(3))?,
    })
}

/// Probabilities that a random pair of observations is concordant or
/// discordant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConcordancePair {
    pub concordant: f64,
    pub discordant: f64,
}

/// `(Σ_ij x_ij Σ_{h>i,k>j} x_hk, Σ_ij x_ij Σ_{h>i,k<j} x_hk)` in `O(R·C)`.
pub(crate) fn pair_sums<T>(rows: usize, cols: usize, cells: &[T]) -> (T, T)
where
    T: Copy + Default + Add<Output = T> + Mul<Output = T>,
{
    debug_assert_eq!(cells.len(), rows * cols);
    // column sums of all rows strictly below the current one
    let mut below = vec![T::default(); cols];
    let mut concordant = T::default();
    let mut discordant = T::default();
    for i in (0..rows).rev() {
        let row = &cells[i * cols..(i + 1) * cols];
        let mut left = T::default();
        for (j, &x) in row.iter().enumerate() {
            discordant = discordant + x * left;
            left = left + below[j];
        }
        let mut right = T::default();
        for (j, &x) in row.iter().enumerate().rev() {
            concordant = concordant + x * right;
            right = right + below[j];
        }
        for (b, &x) in below.iter_mut().zip(row) {
            *b = *b + x;
        }
    }
    (concordant, discordant)
}

pub fn concordance_probs(p: &ProbabilityVector) -> Result<ConcordancePair> {
    let (r, c) = p.dims2()?;
    let (cc, dd) = pair_sums(r, c, p.values());
    Ok(ConcordancePair {
        concordant: 2.0 * cc,
        discordant: 2.0 * dd,
    })
}

/// Kendall's gamma `(Π_C − Π_D)/(Π_C + Π_D)`.
pub fn gamma(p: &ProbabilityVector) -> Result<f64> {
    let pair = concordance_probs(p)?;
    let den = pair.concordant + pair.discordant;
    if den == 0.0 {
        return Err(Error::GammaUndefined);
    }
    Ok((pair.concordant - pair.discordant) / den)
}

/// Numbers of concordant and discordant pairs of observations in a table of
/// counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConcordanceCounts {
    pub concordant: u64,
    pub discordant: u64,
}

impl ConcordanceCounts {
    pub fn from_cells(rows: usize, cols: usize, cells: &[u64]) -> Self {
        let (concordant, discordant) = pair_sums(rows, cols, cells);
        ConcordanceCounts {
            concordant,
            discordant,
        }
    }

    pub fn from_table(table: &ContingencyTable) -> Result<Self> {
        if !table.is_two_way() {
            return Err(Error::ShapeMismatch("expected a two-dimensional table"));
        }
        let (r, c) = table.layer_dims();
        Ok(Self::from_cells(r, c, table.counts()))
    }

    pub fn gamma(&self) -> GammaStat {
        let den = self.concordant + self.discordant;
        if den == 0 {
            GammaStat::Undefined
        } else {
            GammaStat::Defined {
                num: self.concordant as i64 - self.discordant as i64,
                den,
            }
        }
    }
}

/// Sample gamma of a table as an exact rational. `Undefined` (no
/// concordant or discordant pairs) orders below every defined value.
#[derive(Clone, Copy, Debug)]
pub enum GammaStat {
    Undefined,
    Defined { num: i64, den: u64 },
}

impl GammaStat {
    pub fn to_f64(self) -> Option<f64> {
        match self {
            GammaStat::Undefined => None,
            GammaStat::Defined { num, den } => Some(num as f64 / den as f64),
        }
    }

    /// Real-valued score with `Undefined` mapped to `-∞`.
    pub fn score(self) -> f64 {
        self.to_f64().unwrap_or(f64::NEG_INFINITY)
    }
}

impl Ord for GammaStat {
    fn cmp(&self, other: &Self) -> Ordering {
        use GammaStat::*;
        match (*self, *other) {
            (Undefined, Undefined) => Ordering::Equal,
            (Undefined, Defined { .. }) => Ordering::Less,
            (Defined { .. }, Undefined) => Ordering::Greater,
            (Defined { num: a, den: b }, Defined { num: c, den: d }) => {
                (a as i128 * d as i128).cmp(&(c as i128 * b as i128))
            }
        }
    }
}

impl PartialOrd for GammaStat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for GammaStat {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for GammaStat {}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{DEATH_PENALTY, JOB_SATISFACTION};
    use proptest::prelude::*;

    fn job_table() -> ContingencyTable {
        ContingencyTable::new(JOB_SATISFACTION.to_vec(), &[4, 4]).unwrap()
    }

    #[test]
    fn validates_reference_tables() {
        let t1 = validate_table(&DEATH_PENALTY.map(|x| x as i64), &[2, 2, 2]).unwrap();
        assert_eq!(t1.total(), 326);
        assert_eq!(t1.layer_margins(0).rows, [151, 63]);
        assert_eq!(t1.layer_margins(0).cols, [30, 184]);
        assert_eq!(t1.layer_margins(1).rows, [9, 103]);
        assert_eq!(t1.layer_margins(1).cols, [6, 106]);
        let t2 = job_table();
        assert_eq!(t2.total(), 96);
        assert_eq!(t2.row_sums(), [20, 22, 33, 21]);
        assert_eq!(t2.col_sums(), [4, 13, 43, 36]);
        assert_eq!(validate_table(&[0, 0, 0, 0], &[2, 2]).unwrap().total(), 0);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(
            validate_table(&[1, -2, 3, 4], &[2, 2]),
            Err(Error::NegativeCount { index: 1, value: -2 })
        );
        assert!(matches!(
            validate_table(&[1, 2, 3], &[2, 2]),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(matches!(
            validate_table(&[1, 2], &[2]),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn plugin_probabilities() {
        let p = plugin_probs(&job_table()).unwrap();
        assert_eq!(p.values()[0], 1.0 / 96.0);
        let single = ContingencyTable::new(vec![7], &[1, 1]).unwrap();
        assert_eq!(plugin_probs(&single).unwrap().values(), [1.0]);
        let ones = ContingencyTable::new(vec![1; 4], &[2, 2]).unwrap();
        assert_eq!(plugin_probs(&ones).unwrap().values(), [0.25; 4]);
        let empty = ContingencyTable::new(vec![0; 4], &[2, 2]).unwrap();
        assert_eq!(plugin_probs(&empty), Err(Error::EmptyTable));
    }

    #[test]
    fn simplex_validation() {
        assert_eq!(
            ProbabilityVector::new(vec![0.5, 0.6], &[1, 2]),
            Err(Error::NotOnSimplex)
        );
        assert_eq!(
            ProbabilityVector::new(vec![-0.1, 1.1], &[1, 2]),
            Err(Error::NotOnSimplex)
        );
        assert!(ProbabilityVector::new(vec![0.25; 4], &[2, 2]).is_ok());
    }

    #[test]
    fn death_penalty_odds_ratios() {
        let t = ContingencyTable::new(DEATH_PENALTY.to_vec(), &[2, 2, 2]).unwrap();
        let or = odds_ratios_222(&plugin_probs(&t).unwrap()).unwrap();
        // 19·52/(132·11), 0·97/(9·6), 19·149/(141·17)
        assert!((or.given_x1 - 988.0 / 1452.0).abs() < 1e-12);
        assert!((or.given_x1 - 0.680).abs() < 5e-4);
        assert_eq!(or.given_x2, 0.0);
        assert!((or.marginal - 2831.0 / 2397.0).abs() < 1e-12);
        assert!((or.marginal - 1.181).abs() < 5e-4);
    }

    #[test]
    fn odds_ratio_edge_cases() {
        let u = ProbabilityVector::uniform(&[2, 2, 2]).unwrap();
        let or = odds_ratios_222(&u).unwrap();
        assert_eq!((or.given_x1, or.given_x2, or.marginal), (1.0, 1.0, 1.0));

        let p = ProbabilityVector::from_weights(&[1., 1., 1., 1., 0., 1., 1., 1.], &[2, 2, 2]).unwrap();
        assert_eq!(odds_ratios_222(&p).unwrap().given_x2, 0.0);

        let p = ProbabilityVector::from_weights(&[1., 0., 1., 1., 1., 1., 1., 1.], &[2, 2, 2]).unwrap();
        assert_eq!(odds_ratios_222(&p).unwrap().given_x1, f64::INFINITY);

        let p = ProbabilityVector::from_weights(&[0., 0., 1., 1., 1., 1., 1., 1.], &[2, 2, 2]).unwrap();
        assert_eq!(odds_ratios_222(&p), Err(Error::IndeterminateOddsRatio));

        let p = ProbabilityVector::uniform(&[2, 4]).unwrap();
        assert!(matches!(odds_ratios_222(&p), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn concordance_examples() {
        let p = ProbabilityVector::new(vec![0.5, 0.0, 0.0, 0.5], &[2, 2]).unwrap();
        let pair = concordance_probs(&p).unwrap();
        assert_eq!((pair.concordant, pair.discordant), (0.5, 0.0));
        assert_eq!(gamma(&p).unwrap(), 1.0);

        let u = ProbabilityVector::uniform(&[4, 4]).unwrap();
        let pair = concordance_probs(&u).unwrap();
        assert!((pair.concordant - pair.discordant).abs() < 1e-15);

        let p = ProbabilityVector::new(vec![0.5, 0.5, 0.0, 0.0], &[2, 2]).unwrap();
        assert_eq!(gamma(&p), Err(Error::GammaUndefined));
        let p = ProbabilityVector::uniform(&[2, 2, 2]).unwrap();
        assert!(matches!(concordance_probs(&p), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn job_satisfaction_gamma() {
        let p = plugin_probs(&job_table()).unwrap();
        let g = gamma(&p).unwrap();
        assert!((g - 0.221).abs() < 5e-4, "gamma = {g}");
        let counts = ConcordanceCounts::from_table(&job_table()).unwrap();
        // Π̂ = 2·pairs/N²
        let pair = concordance_probs(&p).unwrap();
        assert!((pair.concordant - 2.0 * counts.concordant as f64 / 9216.0).abs() < 1e-14);
        assert!((pair.discordant - 2.0 * counts.discordant as f64 / 9216.0).abs() < 1e-14);
        assert!((counts.gamma().to_f64().unwrap() - g).abs() < 1e-14);
    }

    #[test]
    fn gamma_stat_orders_exactly() {
        let a = GammaStat::Defined { num: 1, den: 3 };
        let b = GammaStat::Defined { num: 2, den: 6 };
        let c = GammaStat::Defined { num: -1, den: 1 };
        assert_eq!(a, b);
        assert!(c > GammaStat::Undefined);
        assert!(a > c);
        assert_eq!(GammaStat::Undefined.score(), f64::NEG_INFINITY);
    }

    /// Iterates over all ordered pairs of cells.
    fn brute_force_concordance(r: usize, c: usize, v: &[f64]) -> (f64, f64) {
        let (mut pc, mut pd) = (0.0, 0.0);
        for i in 0..r {
            for j in 0..c {
                for h in 0..r {
                    for k in 0..c {
                        let w = v[i * c + j] * v[h * c + k];
                        if (h > i && k > j) || (h < i && k < j) {
                            pc += w;
                        } else if (h > i && k < j) || (h < i && k > j) {
                            pd += w;
                        }
                    }
                }
            }
        }
        (pc, pd)
    }

    fn dirichlet_one(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(1e-9f64..1.0, n)
            .prop_map(|u| u.into_iter().map(|x| -x.ln()).collect())
    }

    fn simplex_point(r: usize, c: usize) -> impl Strategy<Value = ProbabilityVector> {
        dirichlet_one(r * c).prop_map(move |w| ProbabilityVector::from_weights(&w, &[r, c]).unwrap())
    }

    fn any_2d() -> impl Strategy<Value = ProbabilityVector> {
        (1usize..6, 1usize..6).prop_flat_map(|(r, c)| simplex_point(r, c))
    }

    proptest! {
        #[test]
        fn gamma_is_bounded(p in any_2d()) {
            if let Ok(g) = gamma(&p) {
                prop_assert!((-1.0..=1.0).contains(&g));
            }
        }

        #[test]
        fn gamma_symmetries(p in (2usize..6, 2usize..6).prop_flat_map(|(r, c)| simplex_point(r, c))) {
            let g = gamma(&p).unwrap();
            let t = gamma(&p.transpose().unwrap()).unwrap();
            let both = gamma(&p.reverse_rows().unwrap().reverse_cols().unwrap()).unwrap();
            let one = gamma(&p.reverse_rows().unwrap()).unwrap();
            prop_assert!((g - t).abs() < 1e-12);
            prop_assert!((g - both).abs() < 1e-12);
            prop_assert!((g + one).abs() < 1e-12);
        }

        #[test]
        fn gamma_vanishes_under_independence(
            rows in dirichlet_one(4),
            cols in dirichlet_one(3),
        ) {
            let rs: f64 = rows.iter().sum();
            let cs: f64 = cols.iter().sum();
            let rows: Vec<f64> = rows.iter().map(|x| x / rs).collect();
            let cols: Vec<f64> = cols.iter().map(|x| x / cs).collect();
            let p = ProbabilityVector::independence(&rows, &cols).unwrap();
            prop_assert!(gamma(&p).unwrap().abs() <= 1e-12);
        }

        #[test]
        fn concordance_matches_pairwise_oracle(p in simplex_point(3, 3)) {
            let pair = concordance_probs(&p).unwrap();
            let (pc, pd) = brute_force_concordance(3, 3, p.values());
            prop_assert!((pair.concordant - pc).abs() <= 1e-12);
            prop_assert!((pair.discordant - pd).abs() <= 1e-12);
            prop_assert!(pair.concordant + pair.discordant <= 1.0 + 1e-12);
        }

        #[test]
        fn integer_counts_match_oracle(cells in proptest::collection::vec(0u64..20, 12)) {
            let counts = ConcordanceCounts::from_cells(3, 4, &cells);
            let v: Vec<f64> = cells.iter().map(|&x| x as f64).collect();
            let (pc, pd) = brute_force_concordance(3, 4, &v);
            prop_assert_eq!(2 * counts.concordant, pc as u64);
            prop_assert_eq!(2 * counts.discordant, pd as u64);
        }
    }
}
