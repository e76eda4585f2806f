//! Secret-key length via entropic-uncertainty plus leftover hashing, the
//! error-correction leakage model, and the composition of the failure
//! probability budget.

use crate::concentration::binary_entropy;
use crate::{Error, Result};

/// Component failure probabilities. The squared components feed the
/// phase-error estimation chain; eps_pa and eps_ev are the privacy
/// amplification and error verification parameters. Derived values:
/// eps_pe = sqrt(sum of active squared components), eps_sec = 2 eps_pe +
/// eps_pa, eps_corr = eps_ev.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecurityBudget {
    pub eps_ind_sq: f64,
    pub eps_dep1_sq: f64,
    pub eps_dep2_sq: f64,
    /// Present only for decoy sessions.
    pub eps_sp_sq: Option<f64>,
    pub eps_pa: f64,
    pub eps_ev: f64,
}

impl SecurityBudget {
    pub fn eps_pe(&self) -> f64 {
        let sum = self.eps_ind_sq
            + self.eps_dep1_sq
            + self.eps_dep2_sq
            + self.eps_sp_sq.unwrap_or(0.0);
        sum.sqrt()
    }

    pub fn eps_sec(&self) -> f64 {
        2.0 * self.eps_pe() + self.eps_pa
    }

    pub fn eps_corr(&self) -> f64 {
        self.eps_ev
    }
}

/// Equal split of the target parameters: eps_pa = eps_sec/2, eps_pe =
/// eps_sec/4, and the 3 (or 4, with decoy) squared components each get
/// eps_pe^2 / 3 (or / 4). Reconstructing eps_sec from the result is exact.
pub fn compose_budget(
    target_eps_sec: f64,
    target_eps_corr: f64,
    decoy: bool,
) -> Result<SecurityBudget> {
    for (name, v) in [
        ("eps_sec", target_eps_sec),
        ("eps_corr", target_eps_corr),
    ] {
        if !(v > 0.0 && v <= 1.0) {
            return Err(Error::Domain(format!("{name} target {v} outside (0, 1]")));
        }
    }
    let eps_pa = target_eps_sec / 2.0;
    let eps_pe = target_eps_sec / 4.0;
    let parts = if decoy { 4.0 } else { 3.0 };
    let comp = eps_pe * eps_pe / parts;
    Ok(SecurityBudget {
        eps_ind_sq: comp,
        eps_dep1_sq: comp,
        eps_dep2_sq: comp,
        eps_sp_sq: decoy.then_some(comp),
        eps_pa,
        eps_ev: target_eps_corr,
    })
}

/// Shared key-length formula:
/// max(0, floor( count (1 - h(rate)) - lambda_ec - 2 log2(1/(2 eps_pa))
///               - log2(2/eps_ev) )).
/// A phase-error bound of 1/2 or worse yields no key.
pub(crate) fn key_length_with_count(
    count: u64,
    rate_bound: f64,
    lambda_ec: f64,
    eps_pa: f64,
    eps_ev: f64,
) -> Result<u64> {
    if !(0.0..=1.0).contains(&rate_bound) {
        return Err(Error::Domain(format!(
            "rate_bound {rate_bound} outside [0, 1]"
        )));
    }
    for (name, v) in [("eps_pa", eps_pa), ("eps_ev", eps_ev)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::Domain(format!("{name} {v} outside (0, 1)")));
        }
    }
    if lambda_ec < 0.0 {
        return Err(Error::Domain(format!("lambda_ec {lambda_ec} negative")));
    }
    let secure = if rate_bound >= 0.5 {
        0.0
    } else {
        count as f64 * (1.0 - binary_entropy(rate_bound)?)
    };
    let pa_term = 2.0 * (1.0 / (2.0 * eps_pa)).log2();
    let ev_term = (2.0 / eps_ev).log2();
    let l = secure - lambda_ec - pa_term - ev_term;
    Ok(if l <= 0.0 { 0 } else { l.floor() as u64 })
}

/// Key length for a single-photon session keyed on the observed key-round
/// count.
pub fn key_length_eur(
    n_k: u64,
    rate_bound: f64,
    lambda_ec: f64,
    eps_pa: f64,
    eps_ev: f64,
) -> Result<u64> {
    key_length_with_count(n_k, rate_bound, lambda_ec, eps_pa, eps_ev)
}

/// Bits disclosed during error correction, modelled as f_EC n h(e_obs).
pub fn lambda_ec_model(n: u64, e_obs: f64, f_ec: f64) -> Result<f64> {
    if f_ec < 1.0 {
        return Err(Error::Domain(format!("f_ec {f_ec} below 1")));
    }
    Ok(f_ec * n as f64 * binary_entropy(e_obs)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_rate_gives_zero_key() {
        assert_eq!(key_length_eur(1_000_000, 0.5, 0.0, 1e-10, 1e-10).unwrap(), 0);
        assert_eq!(key_length_eur(1_000_000, 0.7, 0.0, 1e-10, 1e-10).unwrap(), 0);
        assert_eq!(key_length_eur(0, 0.01, 0.0, 1e-10, 1e-10).unwrap(), 0);
    }

    #[test]
    fn frozen_spot_value() {
        // Independent high-precision evaluation gives 605509.48... before
        // the floor.
        let l = key_length_eur(1_000_000, 0.03, 2e5, 1e-10, 1e-10).unwrap();
        assert_eq!(l, 605_509);
    }

    #[test]
    fn domain_errors() {
        assert!(key_length_eur(10, 1.4, 0.0, 1e-10, 1e-10).is_err());
        assert!(key_length_eur(10, 0.1, 0.0, 0.0, 1e-10).is_err());
        assert!(key_length_eur(10, 0.1, 0.0, 1e-10, 1.0).is_err());
        assert!(key_length_eur(10, 0.1, -5.0, 1e-10, 1e-10).is_err());
    }

    #[test]
    fn lambda_ec_values() {
        assert_eq!(lambda_ec_model(1_000_000, 0.0, 1.16).unwrap(), 0.0);
        let lam = lambda_ec_model(1_000_000, 0.02, 1.16).unwrap();
        assert!((lam - 164_071.02934851195).abs() < 1e-6, "lam = {lam}");
        assert!(lambda_ec_model(100, 0.1, 0.9).is_err());
    }

    #[test]
    fn budget_round_trip_exact() {
        for decoy in [false, true] {
            let b = compose_budget(1e-10, 1e-10, decoy).unwrap();
            assert!((b.eps_sec() - 1e-10).abs() / 1e-10 < 1e-12);
            assert_eq!(b.eps_corr(), 1e-10);
            assert_eq!(b.eps_pa, 5e-11);
            assert!((b.eps_pe() - 2.5e-11).abs() / 2.5e-11 < 1e-12);
            assert_eq!(b.eps_sp_sq.is_some(), decoy);
        }
    }

    #[test]
    fn budget_components_three_way() {
        let b = compose_budget(1e-10, 1e-10, false).unwrap();
        let pe = 2.5e-11f64;
        assert!((b.eps_ind_sq - pe * pe / 3.0).abs() < 1e-40);
        assert_eq!(b.eps_ind_sq, b.eps_dep1_sq);
        assert_eq!(b.eps_ind_sq, b.eps_dep2_sq);
    }

    #[test]
    fn budget_boundary_targets() {
        let b = compose_budget(1.0, 1.0, false).unwrap();
        assert!((b.eps_sec() - 1.0).abs() < 1e-15);
        assert!(b.eps_ind_sq <= 1.0);
        assert!(compose_budget(0.0, 1e-10, false).is_err());
        assert!(compose_budget(1e-10, 1.5, false).is_err());
    }

    #[test]
    fn key_length_monotonicity() {
        let mut prev = u64::MAX;
        for r in [0.0, 0.01, 0.05, 0.2, 0.4, 0.49] {
            let l = key_length_eur(1_000_000, r, 1000.0, 1e-10, 1e-10).unwrap();
            assert!(l <= prev);
            prev = l;
        }
        let mut prev = u64::MAX;
        for lam in [0.0, 1e3, 1e5, 5e5] {
            let l = key_length_eur(1_000_000, 0.03, lam, 1e-10, 1e-10).unwrap();
            assert!(l <= prev);
            prev = l;
        }
        let mut prev = 0;
        for n in [1_000u64, 10_000, 1_000_000] {
            let l = key_length_eur(n, 0.03, 10.0, 1e-10, 1e-10).unwrap();
            assert!(l >= prev);
            prev = l;
        }
    }

    #[test]
    fn eur_and_decoy_agree_at_equal_counts() {
        for (count, rate, lam) in [(1_000u64, 0.02, 50.0), (123_456, 0.11, 1e4)] {
            let a = key_length_eur(count, rate, lam, 1e-10, 1e-10).unwrap();
            let b = crate::decoy::key_length_decoy(count, rate, lam, 1e-10, 1e-10).unwrap();
            assert_eq!(a, b);
        }
    }
}
