use alloc::vec::Vec;

use crate::sum::NeumaierSum;
use crate::{Error, Result};

use super::region::{posterior_ratio, Region};

const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Which event a parameter value belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Label {
    Null,
    Alternative,
    Neither,
}

/// Finitely many parameter values with prior weights, a finite sample space
/// and the likelihood `Pr(n | p)` of every point under every parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteModel {
    prior: Vec<f64>,
    likelihood: Vec<Vec<f64>>,
    labels: Vec<Label>,
}

fn is_distribution(p: &[f64]) -> bool {
    p.iter().all(|&x| x >= 0.0 && x.is_finite())
        && (p.iter().copied().collect::<NeumaierSum>().value() - 1.0).abs() <= NORMALIZATION_TOLERANCE
}

impl FiniteModel {
    pub fn new(prior: Vec<f64>, likelihood: Vec<Vec<f64>>, labels: Vec<Label>) -> Result<Self> {
        if prior.is_empty() || prior.len() != likelihood.len() || prior.len() != labels.len() {
            return Err(Error::InvalidModel("prior, likelihood and labels must have equal length"));
        }
        let points = likelihood[0].len();
        if points == 0 || likelihood.iter().any(|row| row.len() != points) {
            return Err(Error::InvalidModel("likelihood rows must share one sample space"));
        }
        if !is_distribution(&prior) {
            return Err(Error::InvalidModel("prior weights must sum to one"));
        }
        if !likelihood.iter().all(|row| is_distribution(row)) {
            return Err(Error::InvalidModel("each likelihood row must sum to one"));
        }
        Ok(FiniteModel {
            prior,
            likelihood,
            labels,
        })
    }

    pub fn n_params(&self) -> usize {
        self.prior.len()
    }

    pub fn n_points(&self) -> usize {
        self.likelihood[0].len()
    }

    /// `Pr(P ∈ label)`.
    pub fn event_mass(&self, label: Label) -> f64 {
        self.params(label).map(|k| self.prior[k]).collect::<NeumaierSum>().value()
    }

    fn params(&self, label: Label) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_params()).filter(move |&k| self.labels[k] == label)
    }

    /// `Pr(n, P ∈ label)`.
    fn joint(&self, label: Label, n: usize) -> f64 {
        self.params(label)
            .map(|k| self.prior[k] * self.likelihood[k][n])
            .collect::<NeumaierSum>()
            .value()
    }

    /// Prior predictive `Pr(n)`.
    pub fn marginal(&self, n: usize) -> f64 {
        (0..self.n_params())
            .map(|k| self.prior[k] * self.likelihood[k][n])
            .collect::<NeumaierSum>()
            .value()
    }

    /// `Pr(P ∈ label | n)`; zero at points of zero prior predictive mass.
    pub fn posterior(&self, label: Label, n: usize) -> f64 {
        let m = self.marginal(n);
        if m > 0.0 {
            self.joint(label, n) / m
        } else {
            0.0
        }
    }

    /// `Pr(n | P ∈ label)`.
    pub fn conditional_likelihood(&self, label: Label, n: usize) -> Result<f64> {
        let mass = self.event_mass(label);
        if mass <= 0.0 {
            return Err(match label {
                Label::Alternative => Error::EmptyDiscoveryEvent,
                _ => Error::EmptyNullEvent,
            });
        }
        Ok(self.joint(label, n) / mass)
    }

    /// `Pr(P ∈ 𝒫₁ | n) / Pr(P ∈ 𝒫₀ | n)` for every point.
    pub fn posterior_ratios(&self) -> Vec<f64> {
        (0..self.n_points())
            .map(|n| posterior_ratio(self.posterior(Label::Alternative, n), self.posterior(Label::Null, n)))
            .collect()
    }

    fn rejection_probability(&self, label: Label, region: &Region) -> Result<f64> {
        if region.space_size() != self.n_points() {
            return Err(Error::ShapeMismatch("region is over a different sample space"));
        }
        let mut total = NeumaierSum::new();
        for n in region.indices() {
            total.add(self.conditional_likelihood(label, n)?);
        }
        // an empty region still needs the event check
        self.conditional_likelihood(label, 0)?;
        Ok(total.value())
    }
}

/// `Pr(N ∈ S | P ∈ 𝒫₀)`.
pub fn mean_significance(model: &FiniteModel, region: &Region) -> Result<f64> {
    model.rejection_probability(Label::Null, region)
}

/// `Pr(N ∈ S | P ∈ 𝒫₁)`.
pub fn mean_power(model: &FiniteModel, region: &Region) -> Result<f64> {
    model.rejection_probability(Label::Alternative, region)
}

/// Expected loss with cost `lambda1` for rejecting under 𝒫₀ and `lambda2`
/// for accepting under 𝒫₁.
pub fn average_risk(model: &FiniteModel, region: &Region, lambda1: f64, lambda2: f64) -> Result<f64> {
    if !(lambda1 >= 0.0 && lambda2 >= 0.0) {
        return Err(Error::InvalidArgument("loss weights must be nonnegative"));
    }
    if region.space_size() != model.n_points() {
        return Err(Error::ShapeMismatch("region is over a different sample space"));
    }
    let mut risk = NeumaierSum::new();
    for n in 0..model.n_points() {
        let m = model.marginal(n);
        if region.contains(n) {
            risk.add(m * lambda1 * model.posterior(Label::Null, n));
        } else {
            risk.add(m * lambda2 * model.posterior(Label::Alternative, n));
        }
    }
    Ok(risk.value())
}

/// `Pr(n | 𝒫₁) / Pr(n | 𝒫₀)`.
pub fn bayes_factor(model: &FiniteModel, n: usize) -> Result<f64> {
    Ok(posterior_ratio(
        model.conditional_likelihood(Label::Alternative, n)?,
        model.conditional_likelihood(Label::Null, n)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::region::bayes_region;
    use crate::seed::StreamKey;
    use alloc::vec;
    use rand::{Rng, RngExt};

    fn normalized(w: Vec<f64>) -> Vec<f64> {
        let t: f64 = w.iter().sum();
        w.into_iter().map(|x| x / t).collect()
    }

    /// Random model with 2..=6 parameters, 1..=12 points, at least one null
    /// and one alternative parameter. Some likelihood entries are zero.
    fn random_model(rng: &mut impl Rng, max_points: usize) -> FiniteModel {
        let m = rng.random_range(2..=6);
        let points = rng.random_range(1..=max_points);
        let prior = normalized((0..m).map(|_| rng.random::<f64>() + 0.05).collect());
        let likelihood = (0..m)
            .map(|_| {
                let mut w: Vec<f64> = (0..points)
                    .map(|_| if rng.random::<f64>() < 0.2 { 0.0 } else { rng.random::<f64>() })
                    .collect();
                w[rng.random_range(0..points)] += 0.1;
                normalized(w)
            })
            .collect();
        let mut labels: Vec<Label> = (0..m)
            .map(|_| match rng.random_range(0..3) {
                0 => Label::Null,
                1 => Label::Alternative,
                _ => Label::Neither,
            })
            .collect();
        labels[0] = Label::Null;
        labels[1] = Label::Alternative;
        FiniteModel::new(prior, likelihood, labels).unwrap()
    }

    fn subset(points: usize, mask: u32) -> Region {
        Region::from_indices(points, (0..points).filter(|i| mask >> i & 1 == 1))
    }

    #[test]
    fn construction_is_validated() {
        let like = vec![vec![0.5, 0.5], vec![1.0, 0.0]];
        let labels = vec![Label::Null, Label::Alternative];
        assert!(FiniteModel::new(vec![0.5, 0.5], like.clone(), labels.clone()).is_ok());
        assert!(FiniteModel::new(vec![0.5, 0.6], like.clone(), labels.clone()).is_err());
        assert!(FiniteModel::new(vec![0.5, 0.5], vec![vec![0.5, 0.4], vec![1.0, 0.0]], labels.clone()).is_err());
        assert!(FiniteModel::new(vec![1.0], like, labels).is_err());
    }

    #[test]
    fn trivial_regions() {
        let mut rng = StreamKey::new(1).rng();
        let model = random_model(&mut rng, 8);
        let n = model.n_points();
        assert_eq!(mean_significance(&model, &Region::empty(n)).unwrap(), 0.0);
        assert_eq!(mean_power(&model, &Region::empty(n)).unwrap(), 0.0);
        assert!((mean_significance(&model, &Region::full(n)).unwrap() - 1.0).abs() < 1e-12);
        assert!((mean_power(&model, &Region::full(n)).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(average_risk(&model, &Region::full(n), 0.0, 0.0).unwrap(), 0.0);
        let misses = average_risk(&model, &Region::empty(n), 0.0, 2.5).unwrap();
        assert!((misses - 2.5 * model.event_mass(Label::Alternative)).abs() < 1e-12);

        let no_null = FiniteModel::new(vec![1.0], vec![vec![1.0]], vec![Label::Alternative]).unwrap();
        assert_eq!(mean_significance(&no_null, &Region::empty(1)), Err(Error::EmptyNullEvent));
        assert_eq!(mean_power(&FiniteModel::new(vec![1.0], vec![vec![1.0]], vec![Label::Null]).unwrap(), &Region::full(1)), Err(Error::EmptyDiscoveryEvent));
    }

    #[test]
    fn operating_characteristics_match_double_sums() {
        let mut rng = StreamKey::new(2).rng();
        for _ in 0..50 {
            let model = random_model(&mut rng, 6);
            let n = model.n_points();
            let region = subset(n, rng.random_range(0..1u32 << n));
            for label in [Label::Null, Label::Alternative] {
                let mut num = 0.0;
                let mut den = 0.0;
                for k in 0..model.n_params() {
                    if model.labels[k] == label {
                        den += model.prior[k];
                        num += model.prior[k] * region.indices().map(|i| model.likelihood[k][i]).sum::<f64>();
                    }
                }
                let got = match label {
                    Label::Null => mean_significance(&model, &region).unwrap(),
                    _ => mean_power(&model, &region).unwrap(),
                };
                assert!((got - num / den).abs() < 1e-12);
            }
        }
    }

    /// No subset beats a Bayes region in mean power without exceeding its
    /// mean significance; checked over every subset of every space.
    #[test]
    fn bayes_regions_are_mean_most_powerful() {
        let mut rng = StreamKey::new(3).rng();
        for _ in 0..100 {
            let model = random_model(&mut rng, 12);
            let n = model.n_points();
            let ratios = model.posterior_ratios();
            let sig: Vec<f64> = (0..n).map(|i| model.conditional_likelihood(Label::Null, i).unwrap()).collect();
            let pow: Vec<f64> = (0..n).map(|i| model.conditional_likelihood(Label::Alternative, i).unwrap()).collect();
            // operating characteristics of every subset
            let subsets: Vec<(f64, f64)> = (0..1u32 << n)
                .map(|mask| {
                    let (mut s, mut p) = (0.0, 0.0);
                    for i in 0..n {
                        if mask >> i & 1 == 1 {
                            s += sig[i];
                            p += pow[i];
                        }
                    }
                    (s, p)
                })
                .collect();
            let mut deltas: Vec<f64> = ratios.clone();
            deltas.push(0.0);
            deltas.push(rng.random::<f64>() * 3.0);
            for delta in deltas {
                let bayes = bayes_region(&ratios, delta);
                let s0 = mean_significance(&model, &bayes).unwrap();
                let p0 = mean_power(&model, &bayes).unwrap();
                for &(s, p) in &subsets {
                    if s <= s0 {
                        assert!(p <= p0 + 1e-12, "delta {delta}: power {p} > {p0} at significance {s} <= {s0}");
                    }
                }
            }
        }
    }

    #[test]
    fn bayes_regions_minimize_average_risk() {
        let mut rng = StreamKey::new(4).rng();
        for _ in 0..100 {
            let model = random_model(&mut rng, 10);
            let n = model.n_points();
            let (l1, l2) = (rng.random::<f64>() * 2.0 + 0.01, rng.random::<f64>() * 2.0 + 0.01);
            let bayes = bayes_region(&model.posterior_ratios(), l1 / l2);
            let best = average_risk(&model, &bayes, l1, l2).unwrap();
            for mask in 0..1u32 << n {
                let r = average_risk(&model, &subset(n, mask), l1, l2).unwrap();
                assert!(best <= r + 1e-12);
            }
        }
    }

    #[test]
    fn posterior_ratio_is_proportional_to_the_bayes_factor() {
        let mut rng = StreamKey::new(5).rng();
        for _ in 0..200 {
            let model = random_model(&mut rng, 12);
            let c = model.event_mass(Label::Alternative) / model.event_mass(Label::Null);
            let ratios = model.posterior_ratios();
            let factors: Vec<f64> = (0..model.n_points()).map(|i| bayes_factor(&model, i).unwrap()).collect();
            for i in 0..ratios.len() {
                if factors[i].is_finite() {
                    assert!((ratios[i] - c * factors[i]).abs() <= 1e-9 * ratios[i].max(1.0));
                } else {
                    assert_eq!(ratios[i], f64::INFINITY);
                }
                for j in 0..ratios.len() {
                    let (a, b) = (factors[i], factors[j]);
                    let clear = a.is_infinite() != b.is_infinite() || (a - b).abs() > 1e-9 * a.max(b);
                    if clear {
                        assert_eq!(a < b, ratios[i] < ratios[j]);
                    }
                }
            }
        }
    }
}
