//! Distributional checks of the samplers against exact probabilities.

use std::collections::HashMap;

use ctexact_core::null_dist::{rxc_enumerate, RxCMargins, RxcNull, RxcSampler, StratifiedMargins, StratifiedNull};
use ctexact_core::power::{importance_weights, weighted_resample, PowerStudyConfig, power_study};
use ctexact_core::seed::StreamKey;
use ctexact_core::{ContingencyTable, ProbabilityVector};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Pearson goodness-of-fit p-value, pooling cells with expected count < 5.
fn gof_p_value(observed: &[u64], expected: &[f64]) -> f64 {
    let (mut chi2, mut dof) = (0.0, 0usize);
    let (mut pool_o, mut pool_e) = (0.0, 0.0);
    for (&o, &e) in observed.iter().zip(expected) {
        if e < 5.0 {
            pool_o += o as f64;
            pool_e += e;
            continue;
        }
        chi2 += (o as f64 - e).powi(2) / e;
        dof += 1;
    }
    if pool_e > 0.0 {
        chi2 += (pool_o - pool_e).powi(2) / pool_e;
        dof += 1;
    }
    1.0 - ChiSquared::new((dof - 1) as f64).unwrap().cdf(chi2)
}

#[test]
fn rxc_sampler_matches_the_exact_pmf() {
    let m = RxCMargins::new(vec![4, 3, 5], vec![3, 6, 3]).unwrap();
    let null = RxcNull::new(m.clone());
    let mut index = HashMap::new();
    let mut probs = Vec::new();
    rxc_enumerate(&m, |cells| {
        index.insert(cells.to_vec(), probs.len());
        probs.push(null.pmf(cells));
    });
    let sampler = RxcSampler::new(m);
    let n = 200_000u64;
    let mut counts = vec![0u64; probs.len()];
    let mut cells = vec![0; 9];
    let key = StreamKey::new(21);
    for i in 0..n {
        sampler.sample_into(&mut key.child(i).rng(), &mut cells).unwrap();
        counts[index[&cells]] += 1;
    }
    let expected: Vec<f64> = probs.iter().map(|p| p * n as f64).collect();
    let p = gof_p_value(&counts, &expected);
    assert!(p > 1e-3, "goodness-of-fit p = {p}");
}

#[test]
fn stratified_points_match_independent_hypergeometric_draws() {
    // the per-stratum law is the 2×2 case of the R×C sampler
    let t = ContingencyTable::new(vec![3, 4, 2, 5, 6, 1, 2, 3], &[2, 2, 2]).unwrap();
    let strat = StratifiedNull::new(StratifiedMargins::from_table(&t).unwrap());
    let space = strat.enumerate();
    let samplers: Vec<RxcSampler> = strat
        .margins()
        .strata()
        .iter()
        .map(|s| RxcSampler::new(RxCMargins::new(s.rows.to_vec(), s.cols.to_vec()).unwrap()))
        .collect();
    let n = 100_000u64;
    let mut counts = vec![0u64; space.len()];
    let key = StreamKey::new(5);
    let mut cells = [0u64; 4];
    for i in 0..n {
        let point: Vec<u64> = samplers
            .iter()
            .enumerate()
            .map(|(s, sampler)| {
                sampler.sample_into(&mut key.child(i).child(s as u64).rng(), &mut cells).unwrap();
                cells[0]
            })
            .collect();
        counts[space.iter().position(|p| p.0 == point).unwrap()] += 1;
    }
    let expected: Vec<f64> = space.iter().map(|p| strat.pmf(p) * n as f64).collect();
    assert!(gof_p_value(&counts, &expected) > 1e-3);
}

#[test]
fn importance_resampling_recovers_the_truncated_multinomial() {
    let m = RxCMargins::new(vec![3, 4], vec![2, 3, 2]).unwrap();
    let alt = ProbabilityVector::new(vec![0.3, 0.1, 0.05, 0.05, 0.2, 0.3], &[2, 3]).unwrap();
    let mut space = Vec::new();
    rxc_enumerate(&m, |c| space.push(c.to_vec()));
    assert!(space.len() <= 100);

    // target: multinomial pmf normalized over the tables with these margins
    let lf = ctexact_core::null_dist::LnFactorials::new(m.total());
    let target: Vec<f64> = {
        let raw: Vec<f64> = space
            .iter()
            .map(|c| ctexact_core::power::multinomial_log_pmf(c, alt.values(), &lf).exp())
            .collect();
        let z: f64 = raw.iter().sum();
        raw.iter().map(|x| x / z).collect()
    };

    let sampler = RxcSampler::new(m.clone());
    let key = StreamKey::new(8);
    let n_prop = 200_000;
    let mut proposals = Vec::with_capacity(n_prop);
    let mut weights = Vec::with_capacity(n_prop);
    for i in 0..n_prop as u64 {
        let t = sampler.sample(&mut key.child(i).rng()).unwrap();
        weights.push(importance_weights(&t, &alt).unwrap());
        proposals.push(t.counts().to_vec());
    }
    let m_draws = 100_000;
    let picks = weighted_resample(&weights, m_draws, &mut StreamKey::new(9).rng()).unwrap();
    let mut freq = vec![0.0; space.len()];
    for i in picks {
        let at = space.iter().position(|c| *c == proposals[i]).unwrap();
        freq[at] += 1.0 / m_draws as f64;
    }
    let tv: f64 = 0.5 * freq.iter().zip(&target).map(|(a, b)| (a - b).abs()).sum::<f64>();
    assert!(tv < 0.02, "total variation {tv}");
}

#[test]
fn null_alternative_p_values_are_super_uniform() {
    let m = RxCMargins::new(vec![5, 6, 4], vec![4, 7, 4]).unwrap();
    let n = m.total() as f64;
    let rows: Vec<f64> = m.rows().iter().map(|&x| x as f64 / n).collect();
    let cols: Vec<f64> = m.cols().iter().map(|&x| x as f64 / n).collect();
    let alt = ProbabilityVector::independence(&rows, &cols).unwrap();
    let mut cfg = PowerStudyConfig::desk(m, alt, 13);
    cfg.n_proposals = 20_000;
    cfg.n_resample = 4_000;
    cfg.n_reference = 4_000;
    cfg.n_posterior = 200;
    // p-values are multiples of 1/n_reference, so `p < t + 1e-9` is `p ≤ t`
    let grid = [0.05, 0.1, 0.25, 0.5];
    cfg.alpha_grid = grid.iter().map(|t| t + 1e-9).collect();
    let s = power_study(&cfg).unwrap();
    for arm in [&s.gamma_hat, &s.posterior] {
        for (f, t) in arm.below.iter().zip(grid) {
            assert!(f.fraction <= t + 0.02, "{f:?}");
        }
        assert!((arm.mean - 0.5).abs() < 0.02, "mean p {}", arm.mean);
    }
}
