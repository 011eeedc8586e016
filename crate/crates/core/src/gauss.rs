//! Raw-moment recursions for Gaussian densities.
//!
//! These closed-form recursions back the analytic moment source and the
//! test-side Wick oracles.

use std::collections::HashMap;

/// Raw moments `E[X^n]` of a 1D Gaussian with the given mean and variance,
/// for n = 0..=max_order. Recursion: `M_n = m M_{n-1} + (n-1) s M_{n-2}`.
pub fn raw_moments_1d(mean: f64, var: f64, max_order: u32) -> Vec<f64> {
    let n = max_order as usize;
    let mut m = vec![0.0; n + 1];
    m[0] = 1.0;
    if n >= 1 {
        m[1] = mean;
    }
    for k in 2..=n {
        m[k] = mean * m[k - 1] + (k as f64 - 1.0) * var * m[k - 2];
    }
    m
}

/// Raw moment `E[prod_i X_i^{a_i}]` of a multivariate Gaussian.
///
/// Gaussian integration by parts: picking any index i with `a_i > 0`,
/// `E[x_i prod] = mu_i E[a - e_i] + sum_j Sigma_ij (a_j - delta_ij) E[a - e_i - e_j]`.
pub struct GaussianMoments {
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
    cache: HashMap<Vec<u32>, f64>,
}

impl GaussianMoments {
    pub fn new(mean: Vec<f64>, cov: Vec<Vec<f64>>) -> Self {
        assert_eq!(mean.len(), cov.len());
        Self { mean, cov, cache: HashMap::new() }
    }

    pub fn moment(&mut self, powers: &[u32]) -> f64 {
        assert_eq!(powers.len(), self.mean.len());
        self.moment_rec(powers.to_vec())
    }

    fn moment_rec(&mut self, powers: Vec<u32>) -> f64 {
        if powers.iter().all(|&a| a == 0) {
            return 1.0;
        }
        if let Some(&v) = self.cache.get(&powers) {
            return v;
        }
        let i = powers.iter().position(|&a| a > 0).unwrap();
        let mut rest = powers.clone();
        rest[i] -= 1;
        let mut acc = self.mean[i] * self.moment_rec(rest.clone());
        for j in 0..powers.len() {
            let mult = rest[j] as f64;
            if mult > 0.0 && self.cov[i][j] != 0.0 {
                let mut lower = rest.clone();
                lower[j] -= 1;
                acc += self.cov[i][j] * mult * self.moment_rec(lower);
            }
        }
        self.cache.insert(powers, acc);
        acc
    }
}
