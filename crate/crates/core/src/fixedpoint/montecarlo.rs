use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::quantize::{MagnitudeBasis, Realization};
use super::{sensitivity, Normalization};
use crate::error::{param, Result};
use crate::filter::GcfDesign;

pub const MIN_TRIALS: usize = 1000;
const CHUNK: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    /// Fraction of (trial, frequency) pairs with `|Delta|H|| <= y sigma_dh`.
    pub coverage: f64,
    pub y: f64,
    pub f_n: u32,
    pub trials: usize,
    pub points: usize,
    pub seed: u64,
    pub freqs: Vec<f64>,
    pub sigma_dh: Vec<f64>,
    pub empirical_mean: Vec<f64>,
    pub empirical_std: Vec<f64>,
    pub empirical_rms: Vec<f64>,
}

impl CoverageReport {
    /// Largest relative deviation of the empirical std from `sigma_dh`.
    pub fn max_std_deviation(&self) -> f64 {
        self.std_ratios().fold(0.0, |m, r| m.max((r - 1.0).abs()))
    }

    /// Fraction of points whose empirical std is within `tol` of the model.
    pub fn std_agreement(&self, tol: f64) -> f64 {
        let ok = self.std_ratios().filter(|r| (r - 1.0).abs() <= tol).count();
        ok as f64 / self.points.max(1) as f64
    }

    fn std_ratios(&self) -> impl Iterator<Item = f64> + '_ {
        self.empirical_std
            .iter()
            .zip(&self.sigma_dh)
            .map(|(e, s)| e / s)
    }
}

#[derive(Default)]
struct Partial {
    inside: u64,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

/// Perturbs every multiplier of the exact realization by an independent
/// uniform draw on `[-2^-f_n / 2, 2^-f_n / 2]` and measures the magnitude
/// error at `freqs`. Trial `t` draws from the ChaCha8 stream `t` of `seed`,
/// so the result does not depend on the thread count.
pub fn monte_carlo_coverage(
    design: &GcfDesign,
    f_n: u32,
    y: f64,
    trials: usize,
    seed: u64,
    freqs: &[f64],
) -> Result<CoverageReport> {
    if trials < MIN_TRIALS {
        return param(format!("need at least {MIN_TRIALS} trials, got {trials}"));
    }
    if !(y >= 0.0 && y.is_finite()) {
        return param(format!("y = {y} must be non-negative"));
    }
    if freqs.is_empty() {
        return param("no frequencies to evaluate");
    }
    let exact = Realization::exact(design);
    let base = exact.multipliers();
    let basis = MagnitudeBasis::new(&exact, freqs);
    let reference: Vec<f64> = (0..freqs.len()).map(|i| basis.magnitude(i, &base)).collect();

    let step = 2f64.powi(-(f_n.min(1023) as i32));
    let sigma_dm = step / 12f64.sqrt();
    let s = sensitivity(design, freqs, Normalization::UnitGain);
    let sigma_dh: Vec<f64> = s.s_t.iter().map(|v| sigma_dm * v.sqrt()).collect();
    let bound: Vec<f64> = sigma_dh.iter().map(|s| y * s).collect();

    let n = freqs.len();
    let chunks: Vec<Partial> = (0..trials.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = Partial {
                inside: 0,
                sum: vec![0.0; n],
                sum_sq: vec![0.0; n],
            };
            let mut perturbed = base.clone();
            for t in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(t as u64);
                for (p, b) in perturbed.iter_mut().zip(&base) {
                    *p = b + step * (rng.random::<f64>() - 0.5);
                }
                for i in 0..n {
                    let d = basis.magnitude(i, &perturbed) - reference[i];
                    if d.abs() <= bound[i] {
                        acc.inside += 1;
                    }
                    acc.sum[i] += d;
                    acc.sum_sq[i] += d * d;
                }
            }
            acc
        })
        .collect();

    let mut total = Partial {
        inside: 0,
        sum: vec![0.0; n],
        sum_sq: vec![0.0; n],
    };
    for c in &chunks {
        total.inside += c.inside;
        for i in 0..n {
            total.sum[i] += c.sum[i];
            total.sum_sq[i] += c.sum_sq[i];
        }
    }
    let tn = trials as f64;
    let empirical_mean: Vec<f64> = total.sum.iter().map(|s| s / tn).collect();
    let empirical_rms: Vec<f64> = total.sum_sq.iter().map(|s| (s / tn).sqrt()).collect();
    let empirical_std = total
        .sum_sq
        .iter()
        .zip(&empirical_mean)
        .map(|(sq, m)| ((sq - tn * m * m) / (tn - 1.0)).max(0.0).sqrt())
        .collect();

    Ok(CoverageReport {
        coverage: total.inside as f64 / (tn * n as f64),
        y,
        f_n,
        trials,
        points: n,
        seed,
        freqs: freqs.to_vec(),
        sigma_dh,
        empirical_mean,
        empirical_std,
        empirical_rms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::{GcfSpec, OPTIMAL_Q};

    fn design(pp: i32) -> GcfDesign {
        GcfDesign::new(GcfSpec::from_rho(16, pp, OPTIMAL_Q, 64.0).unwrap()).unwrap()
    }

    fn freqs() -> Vec<f64> {
        (0..40).map(|i| 0.01 + 0.48 * i as f64 / 39.0).collect()
    }

    #[test]
    fn rejects_too_few_trials() {
        assert!(monte_carlo_coverage(&design(-1), 7, 2.0, 999, 1, &freqs()).is_err());
    }

    #[test]
    fn deterministic_in_seed() {
        let a = monte_carlo_coverage(&design(1), 7, 2.0, 1000, 42, &freqs()).unwrap();
        let b = monte_carlo_coverage(&design(1), 7, 2.0, 1000, 42, &freqs()).unwrap();
        assert_eq!(a, b);
        let c = monte_carlo_coverage(&design(1), 7, 2.0, 1000, 43, &freqs()).unwrap();
        assert_ne!(a.empirical_std, c.empirical_std);
    }

    #[test]
    fn coverage_grows_with_y() {
        let d = design(-1);
        let lo = monte_carlo_coverage(&d, 8, 1e-6, 1000, 7, &freqs()).unwrap();
        let mid = monte_carlo_coverage(&d, 8, 1.0, 1000, 7, &freqs()).unwrap();
        let hi = monte_carlo_coverage(&d, 8, 3.0, 1000, 7, &freqs()).unwrap();
        assert!(lo.coverage < 0.01);
        assert!(lo.coverage < mid.coverage && mid.coverage < hi.coverage);
    }

    #[test]
    fn cascade_away_from_nulls_matches_model() {
        // Cascade derivatives share the phase of H, so away from the zeros
        // Delta|H| is Gaussian to first order with exactly sigma_dh.
        let d = design(-1);
        let f: Vec<f64> = (0..20).map(|i| 0.002 + 0.002 * i as f64).collect();
        let r = monte_carlo_coverage(&d, 14, 2.0, 4000, 3, &f).unwrap();
        assert!((r.coverage - 0.9545).abs() < 0.01, "{}", r.coverage);
        assert!(r.max_std_deviation() < 0.06, "{}", r.max_std_deviation());
    }

    #[test]
    fn bank_model_is_conservative() {
        // Only the in-phase part of each bank perturbation reaches |H|.
        let d = design(3);
        let f: Vec<f64> = (0..20).map(|i| 0.005 + 0.02 * i as f64).collect();
        let r = monte_carlo_coverage(&d, 12, 2.0, 2000, 3, &f).unwrap();
        assert!(r.coverage > 0.9545, "{}", r.coverage);
        assert!(r.empirical_std.iter().zip(&r.sigma_dh).all(|(e, s)| e < s));
    }
}
