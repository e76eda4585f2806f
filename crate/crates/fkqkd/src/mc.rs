//! Monte-Carlo validation of the probabilistic steps behind the extension:
//! the Serfling sampling bound, and classical analogues of the
//! loss-thinning and error-inflation deviation arguments.
//!
//! These exercise exactly the binomial/sampling skeleton the security
//! statements rest on; the operator-level content is out of reach of a
//! classical simulation and is not claimed here.

use crate::concentration::{gamma_bin, gamma_serf};
use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution, Hypergeometric};

/// Outcome of one empirical check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McReport {
    pub trials: u64,
    pub violations: u64,
    pub empirical_rate: f64,
    /// The failure probability being tested (eps^2).
    pub claimed_bound: f64,
}

impl McReport {
    fn new(trials: u64, violations: u64, claimed_bound: f64) -> Self {
        Self {
            trials,
            violations,
            empirical_rate: violations as f64 / trials as f64,
            claimed_bound,
        }
    }

    /// Three-sigma slack over the claimed rate so the gate does not flake.
    pub fn pass(&self) -> bool {
        let sigma =
            (self.claimed_bound * (1.0 - self.claimed_bound) / self.trials as f64).sqrt();
        self.empirical_rate <= self.claimed_bound + 3.0 * sigma
    }
}

/// Random test/key partitions of a fixed error pattern: a violation is a
/// key-set error rate above the observed test rate plus the Serfling term.
pub fn verify_serfling(
    n_tot: u64,
    n_k: u64,
    error_pattern: &[bool],
    trials: u64,
    eps_ind_sq: f64,
    seed: u64,
) -> Result<McReport> {
    if error_pattern.len() as u64 != n_tot {
        return Err(Error::Domain(format!(
            "pattern length {} != n_tot {n_tot}",
            error_pattern.len()
        )));
    }
    if n_k == 0 || n_k >= n_tot {
        return Err(Error::Domain(
            "need n_K >= 1 and n_X = n_tot - n_K >= 1".into(),
        ));
    }
    if trials == 0 {
        return Err(Error::Domain("trials must be >= 1".into()));
    }
    let n_x = n_tot - n_k;
    let total_errors = error_pattern.iter().filter(|&&b| b).count() as u64;
    let gamma = gamma_serf(n_x, n_k, eps_ind_sq)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    // The partition is uniform, so the number of errors landing in the test
    // set is hypergeometric; the key-set count is the complement.
    let dist = Hypergeometric::new(n_tot, total_errors, n_x)
        .map_err(|e| Error::Domain(format!("hypergeometric: {e}")))?;
    let mut violations = 0u64;
    for _ in 0..trials {
        let test_errors = dist.sample(&mut rng);
        let key_errors = total_errors - test_errors;
        let e_test = test_errors as f64 / n_x as f64;
        let e_key = key_errors as f64 / n_k as f64;
        if e_key > e_test + gamma {
            violations += 1;
        }
    }
    Ok(McReport::new(trials, violations, eps_ind_sq))
}

/// Binomial thinning of a fixed count: a violation is the surviving count
/// falling below n_tilde (1 - delta2_bound - gamma).
pub fn verify_thinning(
    n_tilde: u64,
    delta2_true: f64,
    delta2_bound: f64,
    trials: u64,
    eps_dep2_sq: f64,
    seed: u64,
) -> Result<McReport> {
    if n_tilde == 0 || trials == 0 {
        return Err(Error::Domain("n_tilde and trials must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&delta2_true) || !(0.0..1.0).contains(&delta2_bound) {
        return Err(Error::Domain("thinning rates outside range".into()));
    }
    if delta2_true > delta2_bound {
        return Err(Error::Contract(format!(
            "delta2_true {delta2_true} exceeds the bound {delta2_bound}"
        )));
    }
    let gamma = gamma_bin(n_tilde, delta2_bound, eps_dep2_sq)?;
    let threshold = n_tilde as f64 * (1.0 - delta2_bound - gamma);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let keep = 1.0 - delta2_true;
    let mut violations = 0u64;
    for _ in 0..trials {
        let n = if keep >= 1.0 {
            n_tilde
        } else if keep <= 0.0 {
            0
        } else {
            Binomial::new(n_tilde, keep).expect("validated").sample(&mut rng)
        };
        if (n as f64) < threshold {
            violations += 1;
        }
    }
    Ok(McReport::new(trials, violations, eps_dep2_sq))
}

/// Coupled error inflation: independent errors n_ind ~ Bin(n_tilde, base_e)
/// plus extras n_extra ~ Bin(n_tilde, delta1_true), capped at n_tilde. A
/// violation is the inflated count exceeding
/// n_tilde (base_e + delta1_bound + gamma) while the independent count
/// stayed within n_tilde base_e.
pub fn verify_inflation(
    n_tilde: u64,
    base_e: f64,
    delta1_true: f64,
    delta1_bound: f64,
    trials: u64,
    eps_dep1_sq: f64,
    seed: u64,
) -> Result<McReport> {
    if n_tilde == 0 || trials == 0 {
        return Err(Error::Domain("n_tilde and trials must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&base_e) || !(0.0..=1.0).contains(&delta1_true) {
        return Err(Error::Domain("rates outside [0, 1]".into()));
    }
    if delta1_true > delta1_bound {
        return Err(Error::Contract(format!(
            "delta1_true {delta1_true} exceeds the bound {delta1_bound}"
        )));
    }
    if base_e + delta1_true > 1.0 {
        return Err(Error::Contract(format!(
            "base_e + delta1_true = {} exceeds 1",
            base_e + delta1_true
        )));
    }
    let gamma = if delta1_bound >= 1.0 {
        0.0
    } else {
        gamma_bin(n_tilde, delta1_bound, eps_dep1_sq)?
    };
    let dep_threshold = n_tilde as f64 * (base_e + delta1_bound + gamma);
    let ind_threshold = n_tilde as f64 * base_e;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha12Rng, p: f64| -> u64 {
        if p <= 0.0 {
            0
        } else if p >= 1.0 {
            n_tilde
        } else {
            Binomial::new(n_tilde, p).expect("validated").sample(rng)
        }
    };
    let mut violations = 0u64;
    for _ in 0..trials {
        let n_ind = draw(&mut rng, base_e);
        let n_extra = draw(&mut rng, delta1_true);
        let n_dep = (n_ind + n_extra).min(n_tilde);
        if (n_dep as f64) > dep_threshold && (n_ind as f64) <= ind_threshold {
            violations += 1;
        }
    }
    Ok(McReport::new(trials, violations, eps_dep1_sq))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pattern(n: usize, errors: usize) -> Vec<bool> {
        // Placement is irrelevant under a uniform partition.
        (0..n).map(|i| i < errors).collect()
    }

    #[test]
    fn serfling_all_zero_pattern_never_violates() {
        let p = pattern(100, 0);
        let r = verify_serfling(100, 50, &p, 1_000, 0.01, 1).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.pass());
    }

    #[test]
    fn serfling_thirty_percent_errors_passes() {
        let p = pattern(1_000, 300);
        let r = verify_serfling(1_000, 500, &p, 20_000, 0.01, 42).unwrap();
        assert!(r.pass(), "{r:?}");
    }

    #[test]
    fn serfling_contract_errors() {
        let p = pattern(100, 10);
        assert!(verify_serfling(100, 100, &p, 10, 0.01, 1).is_err());
        assert!(verify_serfling(100, 0, &p, 10, 0.01, 1).is_err());
        assert!(verify_serfling(100, 50, &p, 0, 0.01, 1).is_err());
        assert!(verify_serfling(99, 50, &p, 10, 0.01, 1).is_err());
    }

    #[test]
    fn thinning_degenerate_never_violates() {
        let r = verify_thinning(1_000, 0.0, 0.0, 5_000, 0.01, 3).unwrap();
        assert_eq!(r.violations, 0);
        let r = verify_thinning(1_000, 0.0, 0.2, 5_000, 0.01, 3).unwrap();
        assert_eq!(r.empirical_rate, 0.0);
    }

    #[test]
    fn thinning_at_bound_passes() {
        let r = verify_thinning(1_000, 0.1, 0.1, 20_000, 0.01, 9).unwrap();
        assert!(r.pass(), "{r:?}");
    }

    #[test]
    fn thinning_contract_error() {
        assert!(verify_thinning(1_000, 0.3, 0.1, 10, 0.01, 1).is_err());
    }

    #[test]
    fn inflation_zero_extra_never_violates() {
        let r = verify_inflation(1_000, 0.05, 0.0, 0.0, 5_000, 0.01, 5).unwrap();
        assert_eq!(r.violations, 0);
    }

    #[test]
    fn inflation_degenerate_full_error_rate() {
        let r = verify_inflation(1_000, 1.0, 0.0, 0.0, 1_000, 0.01, 5).unwrap();
        assert_eq!(r.violations, 0);
    }

    #[test]
    fn inflation_at_bound_passes() {
        let r = verify_inflation(1_000, 0.05, 0.1, 0.1, 20_000, 0.01, 11).unwrap();
        assert!(r.pass(), "{r:?}");
    }

    #[test]
    fn inflation_contract_errors() {
        assert!(verify_inflation(1_000, 0.05, 0.2, 0.1, 10, 0.01, 1).is_err());
        assert!(verify_inflation(1_000, 0.95, 0.1, 0.1, 10, 0.01, 1).is_err());
    }

    #[test]
    fn reports_are_deterministic() {
        let p = pattern(500, 100);
        let a = verify_serfling(500, 250, &p, 2_000, 0.01, 77).unwrap();
        let b = verify_serfling(500, 250, &p, 2_000, 0.01, 77).unwrap();
        assert_eq!(a, b);
        let a = verify_thinning(800, 0.1, 0.1, 2_000, 0.01, 77).unwrap();
        let b = verify_thinning(800, 0.1, 0.1, 2_000, 0.01, 77).unwrap();
        assert_eq!(a, b);
        let a = verify_inflation(800, 0.05, 0.1, 0.1, 2_000, 0.01, 77).unwrap();
        let b = verify_inflation(800, 0.05, 0.1, 0.1, 2_000, 0.01, 77).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tightness_probe_thinning() {
        // At delta2_true = delta2_bound the empirical rate sits inside
        // [0, eps^2]; informational, not gating.
        let r = verify_thinning(200, 0.2, 0.2, 50_000, 0.01, 13).unwrap();
        assert!(r.empirical_rate <= 0.01 + 3.0 * (0.01f64 * 0.99 / 50_000.0).sqrt());
    }
}
