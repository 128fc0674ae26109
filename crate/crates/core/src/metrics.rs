//! Distribution-distance metrics recorded during training: KL divergence
//! (the optimization target of the search) and a two-sample Kolmogorov-
//! Smirnov statistic (logged only).

use crate::discriminator::PROB_CLAMP;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("distributions have different lengths: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("distribution carries no mass")]
    EmptyDistribution,
}

fn clamp_and_renormalize(dist: &[f64]) -> Result<Vec<f64>, MetricsError> {
    let clamped: Vec<f64> = dist.iter().map(|p| p.max(PROB_CLAMP)).collect();
    let total: f64 = clamped.iter().sum();
    if !total.is_finite() || total <= 0.0 {
        return Err(MetricsError::EmptyDistribution);
    }
    Ok(clamped.into_iter().map(|p| p / total).collect())
}

/// KL(p || q) = sum_k p_k ln(p_k / q_k), with both arguments clamped below
/// at 1e-12 and renormalized first. By convention `p` is the trained
/// distribution and `q` the target.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64, MetricsError> {
    if p.len() != q.len() {
        return Err(MetricsError::LengthMismatch(p.len(), q.len()));
    }
    let p = clamp_and_renormalize(p)?;
    let q = clamp_and_renormalize(q)?;
    Ok(p.iter()
        .zip(&q)
        .map(|(pk, qk)| pk * (pk / qk).ln())
        .sum())
}

/// Kolmogorov-Smirnov statistic: the largest absolute difference between the
/// two cumulative distributions over the grid. Inputs are normalized by
/// their sums; no clamping is applied.
pub fn ks_statistic(p: &[f64], q: &[f64]) -> Result<f64, MetricsError> {
    if p.len() != q.len() {
        return Err(MetricsError::LengthMismatch(p.len(), q.len()));
    }
    let sum_p: f64 = p.iter().sum();
    let sum_q: f64 = q.iter().sum();
    if sum_p <= 0.0 || sum_q <= 0.0 || !sum_p.is_finite() || !sum_q.is_finite() {
        return Err(MetricsError::EmptyDistribution);
    }
    let mut cdf_p = 0.0;
    let mut cdf_q = 0.0;
    let mut worst = 0.0f64;
    for (pk, qk) in p.iter().zip(q) {
        cdf_p += pk / sum_p;
        cdf_q += qk / sum_q;
        worst = worst.max((cdf_p - cdf_q).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kl_of_identical_distributions_is_zero() {
        let p = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn kl_point_mass_against_uniform() {
        let kl = kl_divergence(&[1.0, 0.0], &[0.5, 0.5]).unwrap();
        assert!((kl - std::f64::consts::LN_2).abs() < 1e-9);
    }

    #[test]
    fn kl_clamp_rule_worked_example() {
        // Uniform against a point mass: the zero target bin is clamped to
        // 1e-12 before the log, giving 0.5 ln 0.5 + 0.5 ln(0.5/1e-12).
        let kl = kl_divergence(&[0.5, 0.5], &[1.0, 0.0]).unwrap();
        let expected = 0.5 * 0.5f64.ln() + 0.5 * (0.5f64 / 1e-12).ln();
        assert!((kl - expected).abs() < 1e-9);
        assert!((kl - 13.12236337740433).abs() < 1e-9);
    }

    #[test]
    fn kl_length_mismatch() {
        assert_eq!(
            kl_divergence(&[1.0], &[0.5, 0.5]),
            Err(MetricsError::LengthMismatch(1, 2))
        );
    }

    #[test]
    fn ks_examples() {
        assert_eq!(ks_statistic(&[0.25; 4], &[0.25; 4]).unwrap(), 0.0);
        let full = ks_statistic(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((full - 1.0).abs() < 1e-15);
        // Unnormalized inputs are rescaled before comparison.
        assert_eq!(ks_statistic(&[2.0, 2.0], &[1.0, 1.0]).unwrap(), 0.0);
    }

    fn distribution_strategy(len: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0..1.0f64, len).prop_filter_map(
            "needs positive mass",
            |raw| {
                let total: f64 = raw.iter().sum();
                (total > 0.0).then(|| raw.iter().map(|v| v / total).collect())
            },
        )
    }

    proptest! {
        #[test]
        fn kl_is_nonnegative_and_zero_only_at_equality(
            (p, q) in (2..=16usize).prop_flat_map(|len| {
                (distribution_strategy(len), distribution_strategy(len))
            })
        ) {
            let kl = kl_divergence(&p, &q).unwrap();
            prop_assert!(kl >= 0.0);
            let p_norm = clamp_and_renormalize(&p).unwrap();
            let q_norm = clamp_and_renormalize(&q).unwrap();
            let equal_after_clamp = p_norm
                .iter()
                .zip(&q_norm)
                .all(|(a, b)| (a - b).abs() < 1e-15);
            if equal_after_clamp {
                prop_assert!(kl.abs() < 1e-12);
            } else {
                prop_assert!(kl > 0.0);
            }
        }

        #[test]
        fn ks_lies_in_unit_interval(
            (p, q) in (2..=16usize).prop_flat_map(|len| {
                (distribution_strategy(len), distribution_strategy(len))
            })
        ) {
            let ks = ks_statistic(&p, &q).unwrap();
            prop_assert!((0.0..=1.0).contains(&ks));
        }
    }
}
