//! Single-photon fibre-channel statistics (expected-value and Monte-Carlo),
//! the composed key-rate evaluation, and the basis-probability sweep
//! optimizer. Also fixes the CSV row schema used by the CLI.
//!
//! Channel model: system transmittance eta_sys = eta_det 10^(-alpha L / 10),
//! two-detector dark probability p_dark2 = 1 - (1 - p_dark)^2, detection
//! probability p_det = 1 - (1 - eta_sys)(1 - p_dark2), and error rate
//! e = (e_mis eta_sys + p_dark2 (1 - eta_sys) / 2) / p_det in both bases
//! (dark-count-only clicks land on a random bit).

use crate::bounds::{SerflingModel, TestStats};
use crate::detector::{delta_bounds, derived_extremes, DetectorSpec, MismatchParams};
use crate::extension::{extend_monotone_count, ExtensionInput};
use crate::key_length::{key_length_eur, lambda_ec_model, SecurityBudget};
use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution};

/// Fibre link and protocol parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSpec {
    pub length_km: f64,
    /// Loss coefficient in dB/km.
    pub alpha_db_per_km: f64,
    /// Per-detector dark-count probability per gate.
    pub p_dark: f64,
    /// Nominal detector efficiency.
    pub eta_det: f64,
    /// Misalignment error probability, in [0, 0.5].
    pub e_mis: f64,
    /// Total transmitted signals.
    pub n_total: u64,
    /// Key-basis choice probabilities, in (0, 1).
    pub p_za: f64,
    pub p_zb: f64,
    /// Error-correction inefficiency.
    pub f_ec: f64,
}

impl Default for ChannelSpec {
    fn default() -> Self {
        Self {
            length_km: 0.0,
            alpha_db_per_km: 0.2,
            p_dark: 1e-8,
            eta_det: 0.73,
            e_mis: 0.0,
            n_total: 1_000_000_000_000,
            p_za: 0.5,
            p_zb: 0.5,
            f_ec: 1.16,
        }
    }
}

impl ChannelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.length_km < 0.0 || self.alpha_db_per_km < 0.0 {
            return Err(Error::Domain("length and loss must be >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.p_dark) {
            return Err(Error::Domain(format!("p_dark {} outside [0, 1)", self.p_dark)));
        }
        if !(self.eta_det > 0.0 && self.eta_det <= 1.0) {
            return Err(Error::Domain(format!(
                "eta_det {} outside (0, 1]",
                self.eta_det
            )));
        }
        if !(0.0..=0.5).contains(&self.e_mis) {
            return Err(Error::Domain(format!("e_mis {} outside [0, 0.5]", self.e_mis)));
        }
        if self.n_total == 0 {
            return Err(Error::Domain("n_total must be >= 1".into()));
        }
        for (name, p) in [("p_za", self.p_za), ("p_zb", self.p_zb)] {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::Domain(format!("{name} {p} outside (0, 1)")));
            }
        }
        if self.f_ec < 1.0 {
            return Err(Error::Domain(format!("f_ec {} below 1", self.f_ec)));
        }
        Ok(())
    }

    pub fn eta_sys(&self) -> f64 {
        self.eta_det * 10f64.powf(-self.alpha_db_per_km * self.length_km / 10.0)
    }
}

/// Source-imperfection configuration; carried through config and audit for
/// forward compatibility, consumed by no bound in this toolkit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceSpec {
    /// State-preparation flaw magnitude, in [0, pi).
    pub delta_spf: f64,
    /// Bound on uncharacterised imperfections, >= 0.
    pub eps_side: f64,
}

impl Default for SourceSpec {
    fn default() -> Self {
        Self {
            delta_spf: 0.0,
            eps_side: 0.0,
        }
    }
}

impl SourceSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..std::f64::consts::PI).contains(&self.delta_spf) {
            return Err(Error::Domain(format!(
                "delta_spf {} outside [0, pi)",
                self.delta_spf
            )));
        }
        if self.eps_side < 0.0 {
            return Err(Error::Domain(format!("eps_side {} negative", self.eps_side)));
        }
        Ok(())
    }
}

/// Announced statistics of one session.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedStats {
    pub n_k: u64,
    pub test: TestStats,
    /// Key-basis error rate, feeding the error-correction leakage model.
    pub e_z_obs: f64,
}

/// Derived per-signal probabilities of the channel model.
fn click_model(spec: &ChannelSpec) -> (f64, f64) {
    let eta_sys = spec.eta_sys();
    let p_dark2 = 1.0 - (1.0 - spec.p_dark) * (1.0 - spec.p_dark);
    let p_det = 1.0 - (1.0 - eta_sys) * (1.0 - p_dark2);
    let e = if p_det > 0.0 {
        (spec.e_mis * eta_sys + 0.5 * p_dark2 * (1.0 - eta_sys)) / p_det
    } else {
        0.0
    };
    (p_det, e)
}

/// Expected-value statistics (counts rounded to nearest integer).
pub fn expected_stats(spec: &ChannelSpec) -> Result<ObservedStats> {
    spec.validate()?;
    let (p_det, e) = click_model(spec);
    let n = spec.n_total as f64;
    let n_k = (n * spec.p_za * spec.p_zb * p_det).round() as u64;
    let n_x = (n * (1.0 - spec.p_za) * (1.0 - spec.p_zb) * p_det).round() as u64;
    Ok(ObservedStats {
        n_k,
        test: TestStats::new(n_x, e)?,
        e_z_obs: e,
    })
}

/// Monte-Carlo statistics via binomial sampling of the same laws;
/// deterministic for a fixed seed. Capped at 10^9 signals.
pub fn sample_stats(spec: &ChannelSpec, seed: u64) -> Result<ObservedStats> {
    spec.validate()?;
    if spec.n_total > 1_000_000_000 {
        return Err(Error::Domain(
            "sample_stats is capped at 1e9 signals; use expected_stats".into(),
        ));
    }
    let (p_det, e) = click_model(spec);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let n = spec.n_total as f64;
    let sift_k = (n * spec.p_za * spec.p_zb).round() as u64;
    let sift_x = (n * (1.0 - spec.p_za) * (1.0 - spec.p_zb)).round() as u64;
    let draw = |rng: &mut ChaCha12Rng, n: u64, p: f64| -> u64 {
        if n == 0 || p <= 0.0 {
            0
        } else if p >= 1.0 {
            n
        } else {
            Binomial::new(n, p).expect("validated p").sample(rng)
        }
    };
    let n_k = draw(&mut rng, sift_k, p_det);
    let err_k = draw(&mut rng, n_k, e);
    let n_x = draw(&mut rng, sift_x, p_det);
    let err_x = draw(&mut rng, n_x, e);
    let e_x = if n_x > 0 { err_x as f64 / n_x as f64 } else { 0.0 };
    let e_z = if n_k > 0 { err_k as f64 / n_k as f64 } else { 0.0 };
    Ok(ObservedStats {
        n_k,
        test: TestStats::new(n_x, e_x)?,
        e_z_obs: e_z,
    })
}

/// Everything a key-rate evaluation produces, kept for audit output.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyRateResult {
    pub l: u64,
    pub rate: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub e_ph_bound: f64,
    pub gamma_dep1: f64,
    pub gamma_dep2: f64,
    pub n_k: u64,
    pub n_x: u64,
    pub e_x: f64,
    pub lambda_ec: f64,
    pub eps_sec: f64,
    pub eps_corr: f64,
    pub source: SourceSpec,
}

/// Composes the full pipeline at one parameter point: detector bounds,
/// expected channel statistics, the Serfling base bound extended through the
/// count-monotone closed form, leakage, and the key-length formula.
pub fn keyrate_point(
    ch: &ChannelSpec,
    det: &DetectorSpec,
    budget: &SecurityBudget,
    source: &SourceSpec,
) -> Result<KeyRateResult> {
    ch.validate()?;
    source.validate()?;
    let mismatch: MismatchParams = delta_bounds(&derived_extremes(det));
    let obs = expected_stats(ch)?;
    let zero_key = |mismatch: MismatchParams, obs: &ObservedStats| KeyRateResult {
        l: 0,
        rate: 0.0,
        delta1: mismatch.delta1,
        delta2: mismatch.delta2,
        e_ph_bound: 1.0,
        gamma_dep1: 0.0,
        gamma_dep2: 0.0,
        n_k: obs.n_k,
        n_x: obs.test.n_x,
        e_x: obs.test.e_x,
        lambda_ec: 0.0,
        eps_sec: budget.eps_sec(),
        eps_corr: budget.eps_corr(),
        source: *source,
    };
    if obs.n_k == 0 || obs.test.n_x == 0 {
        return Ok(zero_key(mismatch, &obs));
    }
    let model = SerflingModel::new(budget.eps_ind_sq)?;
    let ext = extend_monotone_count(&ExtensionInput {
        model: &model,
        stats: &obs.test,
        n_k: obs.n_k,
        mismatch,
        eps_dep1_sq: budget.eps_dep1_sq,
        eps_dep2_sq: budget.eps_dep2_sq,
    })?;
    let lambda_ec = lambda_ec_model(obs.n_k, obs.e_z_obs, ch.f_ec)?;
    let l = key_length_eur(
        obs.n_k,
        ext.rate_bound,
        lambda_ec,
        budget.eps_pa,
        budget.eps_ev,
    )?;
    Ok(KeyRateResult {
        l,
        rate: l as f64 / ch.n_total as f64,
        delta1: mismatch.delta1,
        delta2: mismatch.delta2,
        e_ph_bound: ext.rate_bound,
        gamma_dep1: ext.audit.gamma_dep1,
        gamma_dep2: ext.audit.gamma_dep2,
        n_k: obs.n_k,
        n_x: obs.test.n_x,
        e_x: obs.test.e_x,
        lambda_ec,
        eps_sec: budget.eps_sec(),
        eps_corr: budget.eps_corr(),
        source: *source,
    })
}

/// One emitted sweep row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub l_km: f64,
    pub p_za: f64,
    pub p_zb: f64,
    pub result: KeyRateResult,
}

/// For each distance, maximises the key rate over the basis probabilities on
/// a 0.05 grid, then refines at 0.01 around the coarse optimum. Ties break
/// toward the lexicographically smaller (p_za, p_zb).
pub fn sweep_optimize(
    template: &ChannelSpec,
    det: &DetectorSpec,
    budget: &SecurityBudget,
    source: &SourceSpec,
    l_grid: &[f64],
) -> Result<Vec<SweepRow>> {
    if l_grid.is_empty() {
        return Err(Error::Domain("empty distance grid".into()));
    }
    let mut rows = Vec::with_capacity(l_grid.len());
    for &l_km in l_grid {
        let eval = |p_za: f64, p_zb: f64| -> Result<KeyRateResult> {
            let ch = ChannelSpec {
                length_km: l_km,
                p_za,
                p_zb,
                ..*template
            };
            keyrate_point(&ch, det, budget, source)
        };
        // Coarse pass: 0.05 .. 0.95 in 0.05 steps on both axes.
        let mut best: Option<(f64, f64, KeyRateResult)> = None;
        for ia in 1..=19u32 {
            for ib in 1..=19u32 {
                let (pa, pb) = (ia as f64 * 0.05, ib as f64 * 0.05);
                let r = eval(pa, pb)?;
                let better = match &best {
                    None => true,
                    Some((_, _, b)) => r.rate > b.rate,
                };
                if better {
                    best = Some((pa, pb, r));
                }
            }
        }
        let (ca, cb, _) = best.clone().expect("non-empty grid");
        // Refinement pass: +/- 0.04 in 0.01 steps, clamped inside (0, 1).
        for da in -4i32..=4 {
            for db in -4i32..=4 {
                let pa = (ca + da as f64 * 0.01).clamp(0.01, 0.99);
                let pb = (cb + db as f64 * 0.01).clamp(0.01, 0.99);
                let r = eval(pa, pb)?;
                let b = &best.as_ref().expect("set").2;
                if r.rate > b.rate {
                    best = Some((pa, pb, r));
                }
            }
        }
        let (pa, pb, result) = best.expect("set");
        rows.push(SweepRow {
            l_km,
            p_za: pa,
            p_zb: pb,
            result,
        });
    }
    Ok(rows)
}

/// Fixed CSV schema shared by the `point` and `sweep` commands.
pub const CSV_HEADER: &str = "L_km,p_zA,p_zB,delta1,delta2,n_K,n_X,e_X,e_ph_bound,lambda_EC,l,rate,eps_sec,eps_corr";

/// Formats one row; floats carry 10 significant digits.
pub fn csv_row(row: &SweepRow) -> String {
    let f = |v: f64| format!("{v:.9e}");
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        f(row.l_km),
        f(row.p_za),
        f(row.p_zb),
        f(row.result.delta1),
        f(row.result.delta2),
        row.result.n_k,
        row.result.n_x,
        f(row.result.e_x),
        f(row.result.e_ph_bound),
        f(row.result.lambda_ec),
        row.result.l,
        f(row.result.rate),
        f(row.result.eps_sec),
        f(row.result.eps_corr),
    )
}

/// Parses a row back into its audit fields (schema round-trip).
pub fn parse_csv_row(line: &str) -> Result<SweepRow> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 14 {
        return Err(Error::Domain(format!(
            "expected 14 CSV fields, found {}",
            fields.len()
        )));
    }
    let pf = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|e| Error::Domain(format!("bad float {s:?}: {e}")))
    };
    let pu = |s: &str| -> Result<u64> {
        s.parse::<u64>()
            .map_err(|e| Error::Domain(format!("bad count {s:?}: {e}")))
    };
    Ok(SweepRow {
        l_km: pf(fields[0])?,
        p_za: pf(fields[1])?,
        p_zb: pf(fields[2])?,
        result: KeyRateResult {
            delta1: pf(fields[3])?,
            delta2: pf(fields[4])?,
            n_k: pu(fields[5])?,
            n_x: pu(fields[6])?,
            e_x: pf(fields[7])?,
            e_ph_bound: pf(fields[8])?,
            lambda_ec: pf(fields[9])?,
            l: pu(fields[10])?,
            rate: pf(fields[11])?,
            eps_sec: pf(fields[12])?,
            eps_corr: pf(fields[13])?,
            gamma_dep1: 0.0,
            gamma_dep2: 0.0,
            source: SourceSpec::default(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::key_length::compose_budget;

    fn default_setup() -> (ChannelSpec, DetectorSpec, SecurityBudget, SourceSpec) {
        let ch = ChannelSpec::default();
        let det = DetectorSpec::new(0.73, 1e-8, 0.0, 0.0).unwrap();
        let budget = compose_budget(1e-10, 1e-10, false).unwrap();
        (ch, det, budget, SourceSpec::default())
    }

    #[test]
    fn lossless_noiseless_expectations() {
        let spec = ChannelSpec {
            p_dark: 0.0,
            ..ChannelSpec::default()
        };
        let (p_det, e) = click_model(&spec);
        assert!((p_det - 0.73).abs() < 1e-15);
        assert_eq!(e, 0.0);
    }

    #[test]
    fn fifty_km_transmittance() {
        let spec = ChannelSpec {
            length_km: 50.0,
            ..ChannelSpec::default()
        };
        assert!((spec.eta_sys() - 0.073).abs() < 1e-15);
    }

    #[test]
    fn dark_count_only_errors_are_random() {
        let spec = ChannelSpec {
            length_km: 2000.0,
            p_dark: 1e-6,
            ..ChannelSpec::default()
        };
        let (_, e) = click_model(&spec);
        assert!((e - 0.5).abs() < 1e-3, "e = {e}");
    }

    #[test]
    fn expected_counts_scale_with_probabilities() {
        let spec = ChannelSpec {
            n_total: 1_000_000,
            p_za: 0.9,
            p_zb: 0.8,
            p_dark: 0.0,
            ..ChannelSpec::default()
        };
        let obs = expected_stats(&spec).unwrap();
        assert_eq!(obs.n_k, (1e6f64 * 0.9 * 0.8 * 0.73).round() as u64);
        assert_eq!(obs.test.n_x, (1e6f64 * 0.1 * 0.2 * 0.73).round() as u64);
    }

    #[test]
    fn sampling_is_deterministic_and_concentrates() {
        let spec = ChannelSpec {
            n_total: 100_000_000,
            ..ChannelSpec::default()
        };
        let a = sample_stats(&spec, 7).unwrap();
        let b = sample_stats(&spec, 7).unwrap();
        assert_eq!(a, b);
        let expect = expected_stats(&spec).unwrap();
        // 5-sigma band around the expected key-round count.
        let sift = (1e8f64 * 0.25).round();
        let p = expect.n_k as f64 / sift;
        let sigma = (sift * p * (1.0 - p)).sqrt();
        for seed in 0..100u64 {
            let s = sample_stats(&spec, seed).unwrap();
            assert!(
                (s.n_k as f64 - expect.n_k as f64).abs() <= 5.0 * sigma,
                "seed {seed}: {} vs {}",
                s.n_k,
                expect.n_k
            );
        }
    }

    #[test]
    fn sampling_rejects_oversized_n() {
        let spec = ChannelSpec {
            n_total: 10_000_000_000,
            ..ChannelSpec::default()
        };
        assert!(sample_stats(&spec, 1).is_err());
    }

    #[test]
    fn zero_detection_probability_zeroes_counts() {
        let spec = ChannelSpec {
            length_km: 3000.0,
            p_dark: 0.0,
            n_total: 1_000_000,
            ..ChannelSpec::default()
        };
        let s = sample_stats(&spec, 3).unwrap();
        // Transmittance 1e-60: detection is essentially impossible.
        assert_eq!(s.n_k, 0);
        assert_eq!(s.test.n_x, 0);
    }

    #[test]
    fn keyrate_positive_at_zero_distance() {
        let (ch, det, budget, src) = default_setup();
        let r = keyrate_point(&ch, &det, &budget, &src).unwrap();
        assert!(r.l > 0, "{r:?}");
        assert!(r.rate > 0.0);
        assert_eq!(r.delta1, 0.0);
        assert_eq!(r.delta2, 0.0);
        // Regression pin from the first verified run at the defaults
        // (L = 0, p_za = p_zb = 0.5).
        assert_eq!(r.l, 182_428_140_748, "{r:?}");
    }

    #[test]
    fn keyrate_zero_at_extreme_distance() {
        let (mut ch, det, budget, src) = default_setup();
        ch.length_km = 1000.0;
        let r = keyrate_point(&ch, &det, &budget, &src).unwrap();
        assert_eq!(r.l, 0, "{r:?}");
    }

    #[test]
    fn full_misalignment_kills_key() {
        let (mut ch, det, budget, src) = default_setup();
        ch.e_mis = 0.5;
        let r = keyrate_point(&ch, &det, &budget, &src).unwrap();
        assert_eq!(r.l, 0);
    }

    #[test]
    fn mismatch_penalty_nonpositive() {
        let (ch, det0, budget, src) = default_setup();
        let det5 = DetectorSpec::new(0.73, 1e-8, 0.05, 0.05).unwrap();
        for l_km in [0.0, 50.0, 100.0] {
            let ch = ChannelSpec {
                length_km: l_km,
                ..ch
            };
            let ideal = keyrate_point(&ch, &det0, &budget, &src).unwrap();
            let worse = keyrate_point(&ch, &det5, &budget, &src).unwrap();
            assert!(
                worse.rate <= ideal.rate,
                "L={l_km}: {} > {}",
                worse.rate,
                ideal.rate
            );
        }
    }

    #[test]
    fn rate_nonincreasing_in_distance_fixed_probabilities() {
        let (ch, det, budget, src) = default_setup();
        let mut prev = f64::INFINITY;
        for l_km in [0.0, 25.0, 50.0, 100.0, 150.0, 200.0] {
            let ch = ChannelSpec {
                length_km: l_km,
                ..ch
            };
            let r = keyrate_point(&ch, &det, &budget, &src).unwrap();
            assert!(r.rate <= prev);
            prev = r.rate;
        }
    }

    #[test]
    fn sweep_single_point_and_tiebreak() {
        let (ch, det, budget, src) = default_setup();
        let ch = ChannelSpec {
            n_total: 1_000_000,
            ..ch
        };
        let rows = sweep_optimize(&ch, &det, &budget, &src, &[0.0]).unwrap();
        assert_eq!(rows.len(), 1);
        // The refinement can only improve on the coarse optimum.
        let coarse = keyrate_point(
            &ChannelSpec {
                p_za: 0.5,
                p_zb: 0.5,
                ..ch
            },
            &det,
            &budget,
            &src,
        )
        .unwrap();
        assert!(rows[0].result.rate >= coarse.rate);
        assert!(sweep_optimize(&ch, &det, &budget, &src, &[]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let (ch, det, budget, src) = default_setup();
        let r = keyrate_point(&ch, &det, &budget, &src).unwrap();
        let row = SweepRow {
            l_km: 0.0,
            p_za: 0.5,
            p_zb: 0.5,
            result: r,
        };
        let line = csv_row(&row);
        let parsed = parse_csv_row(&line).unwrap();
        assert_eq!(parsed.result.n_k, row.result.n_k);
        assert_eq!(parsed.result.l, row.result.l);
        assert!((parsed.result.rate - row.result.rate).abs() <= 1e-9 * row.result.rate.abs());
        assert_eq!(CSV_HEADER.split(',').count(), line.split(',').count());
    }
}
