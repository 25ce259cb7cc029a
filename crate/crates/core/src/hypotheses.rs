//! Discovery and non-discovery events: decidable subsets of the simplex.
//!
//! Strict and inclusive inequalities are fixed per event: the Simpson
//! reversal is strict on all three odds ratios, while the ε-neighbourhood,
//! concordance and positive-dependence events are inclusive.


use crate::math;
use crate::table::{check_shape_222, odds_ratios_222, pair_sums, ProbabilityVector};
use crate::{Error, Result};

/// A named, deterministic boolean function of a probability vector.
pub trait EventPredicate {
    fn name(&self) -> &str;

    /// Rejects shapes the predicate is not defined on.
    fn check_shape(&self, _shape: &[usize]) -> Result<()> {
        Ok(())
    }

    /// Total on vectors of a supported shape; boundary points where the
    /// defining quantities are indeterminate evaluate to `false`.
    fn holds(&self, p: &ProbabilityVector) -> bool;
}

impl<E: EventPredicate + ?Sized> EventPredicate for &E {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn check_shape(&self, shape: &[usize]) -> Result<()> {
        (**self).check_shape(shape)
    }

    fn holds(&self, p: &ProbabilityVector) -> bool {
        (**self).holds(p)
    }
}

/// Band `[e^{-ε}, e^{ε}]` for an odds ratio, i.e. `|log θ| ≤ ε`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpsilonBand {
    epsilon: f64,
    lower: f64,
    upper: f64,
}

impl EpsilonBand {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidArgument("epsilon must be positive and finite"));
        }
        Ok(EpsilonBand {
            epsilon,
            lower: math::exp(-epsilon),
            upper: math::exp(epsilon),
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    #[inline]
    pub fn contains(&self, theta: f64) -> bool {
        self.lower <= theta && theta <= self.upper
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Hypothesis {
    /// Both conditional odds ratios below one, marginal odds ratio above one.
    Simpson,
    /// Both conditional log odds ratios within `±ε`.
    EpsilonNull(EpsilonBand),
    /// `Π_C ≥ Π_D`.
    Concordance,
    /// Conditional column distributions stochastically increasing in the row.
    PositiveDependence,
}

impl Hypothesis {
    pub fn epsilon_null(epsilon: f64) -> Result<Self> {
        EpsilonBand::new(epsilon).map(Hypothesis::EpsilonNull)
    }
}

fn check_two_way(shape: &[usize]) -> Result<()> {
    if shape.len() != 2 {
        return Err(Error::ShapeMismatch("expected a two-dimensional probability vector"));
    }
    Ok(())
}

fn simpson(p: &ProbabilityVector) -> bool {
    // indeterminate odds ratios leave the event false
    match odds_ratios_222(p) {
        Ok(or) => or.given_x1 < 1.0 && or.given_x2 < 1.0 && or.marginal > 1.0,
        Err(_) => false,
    }
}

fn epsilon_null(p: &ProbabilityVector, band: &EpsilonBand) -> bool {
    match odds_ratios_222(p) {
        Ok(or) => band.contains(or.given_x1) && band.contains(or.given_x2),
        Err(_) => false,
    }
}

fn concordance(rows: usize, cols: usize, v: &[f64]) -> bool {
    let (c, d) = pair_sums(rows, cols, v);
    c >= d
}

/// Adjacent-row comparison of conditional CDFs, cross-multiplied by the
/// (positive) row masses. `None` when a row has no mass.
fn positive_dependence(rows: usize, cols: usize, v: &[f64]) -> core::result::Result<bool, usize> {
    let mass = |i: usize| v[i * cols..(i + 1) * cols].iter().sum::<f64>();
    let mut upper_mass = mass(0);
    if upper_mass <= 0.0 {
        return Err(0);
    }
    let mut holds = true;
    for i in 0..rows - 1 {
        let lower_mass = mass(i + 1);
        if lower_mass <= 0.0 {
            return Err(i + 1);
        }
        let (upper, lower) = (&v[i * cols..(i + 1) * cols], &v[(i + 1) * cols..(i + 2) * cols]);
        let (mut cu, mut cl) = (0.0, 0.0);
        for j in 0..cols - 1 {
            cu += upper[j];
            cl += lower[j];
            if cu * lower_mass < cl * upper_mass {
                holds = false;
            }
        }
        upper_mass = lower_mass;
    }
    Ok(holds)
}

pub fn simpson_event(p: &ProbabilityVector) -> Result<bool> {
    check_shape_222(p.shape())?;
    Ok(simpson(p))
}

pub fn epsilon_null_event(p: &ProbabilityVector, epsilon: f64) -> Result<bool> {
    check_shape_222(p.shape())?;
    let band = EpsilonBand::new(epsilon)?;
    Ok(epsilon_null(p, &band))
}

pub fn concordance_event(p: &ProbabilityVector) -> Result<bool> {
    check_two_way(p.shape())?;
    Ok(concordance(p.shape()[0], p.shape()[1], p.values()))
}

pub fn positive_dependence_event(p: &ProbabilityVector) -> Result<bool> {
    check_two_way(p.shape())?;
    positive_dependence(p.shape()[0], p.shape()[1], p.values()).map_err(Error::ZeroRowMass)
}

impl EventPredicate for Hypothesis {
    fn name(&self) -> &str {
        match self {
            Hypothesis::Simpson => "simpson",
            Hypothesis::EpsilonNull(_) => "epsilon-null",
            Hypothesis::Concordance => "concordance",
            Hypothesis::PositiveDependence => "positive-dependence",
        }
    }

    fn check_shape(&self, shape: &[usize]) -> Result<()> {
        match self {
            Hypothesis::Simpson | Hypothesis::EpsilonNull(_) => check_shape_222(shape),
            Hypothesis::Concordance | Hypothesis::PositiveDependence => check_two_way(shape),
        }
    }

    #[inline]
    fn holds(&self, p: &ProbabilityVector) -> bool {
        let v = p.values();
        match self {
            Hypothesis::Simpson => simpson(p),
            Hypothesis::EpsilonNull(band) => epsilon_null(p, band),
            Hypothesis::Concordance => concordance(p.shape()[0], p.shape()[1], v),
            // zero row mass leaves the event false
            Hypothesis::PositiveDependence => {
                positive_dependence(p.shape()[0], p.shape()[1], v).unwrap_or(false)
            }
        }
    }
}

/// Complement of an event.
#[derive(Clone, Copy, Debug)]
pub struct Complement<E>(pub E);

impl<E: EventPredicate> EventPredicate for Complement<E> {
    fn name(&self) -> &str {
        "complement"
    }

    fn check_shape(&self, shape: &[usize]) -> Result<()> {
        self.0.check_shape(shape)
    }

    fn holds(&self, p: &ProbabilityVector) -> bool {
        !self.0.holds(p)
    }
}

/// The whole simplex.
#[derive(Clone, Copy, Debug)]
pub struct Always;

impl EventPredicate for Always {
    fn name(&self) -> &str {
        "always"
    }

    fn holds(&self, _p: &ProbabilityVector) -> bool {
        true
    }
}
