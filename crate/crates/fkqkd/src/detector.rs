//! Canonical detector model with tolerance intervals, and the upper bounds
//! on the mismatch parameters (delta1, delta2) it implies.
//!
//! Detector efficiencies and dark-count rates are only characterised to
//! relative tolerances; the bounds below consume just the worst-case
//! extremes, so no per-detector data model is kept.

use crate::{Error, Result};

/// Nominal detector parameters with relative tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorSpec {
    /// Nominal detection efficiency, in (0, 1].
    pub eta_det: f64,
    /// Nominal dark-count probability per gate, in [0, 1).
    pub d_det: f64,
    /// Relative efficiency tolerance, in [0, 1).
    pub tol_eta: f64,
    /// Relative dark-count tolerance, >= 0.
    pub tol_dc: f64,
}

impl DetectorSpec {
    pub fn new(eta_det: f64, d_det: f64, tol_eta: f64, tol_dc: f64) -> Result<Self> {
        if !(eta_det > 0.0 && eta_det <= 1.0) {
            return Err(Error::Domain(format!("eta_det {eta_det} outside (0, 1]")));
        }
        if !(0.0..1.0).contains(&d_det) {
            return Err(Error::Domain(format!("d_det {d_det} outside [0, 1)")));
        }
        if !(0.0..1.0).contains(&tol_eta) {
            return Err(Error::Domain(format!("tol_eta {tol_eta} outside [0, 1)")));
        }
        if tol_dc < 0.0 {
            return Err(Error::Domain(format!("tol_dc {tol_dc} negative")));
        }
        if eta_det * (1.0 + tol_eta) > 1.0 {
            return Err(Error::Domain(format!(
                "eta_det (1 + tol_eta) = {} exceeds 1",
                eta_det * (1.0 + tol_eta)
            )));
        }
        if d_det * (1.0 + tol_dc) >= 1.0 {
            return Err(Error::Domain(format!(
                "d_det (1 + tol_dc) = {} reaches 1",
                d_det * (1.0 + tol_dc)
            )));
        }
        Ok(Self {
            eta_det,
            d_det,
            tol_eta,
            tol_dc,
        })
    }
}

/// Worst-case dark-count extremes and efficiency ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorExtremes {
    pub d_max: f64,
    pub d_min: f64,
    pub r_eta: f64,
}

/// Mismatch parameters consumed by the bound extensions. delta1 may exceed 1
/// under these loose upper bounds; downstream evaluation handles vacuity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MismatchParams {
    pub delta1: f64,
    pub delta2: f64,
}

impl MismatchParams {
    /// Identical detectors: no mismatch.
    pub const ZERO: Self = Self {
        delta1: 0.0,
        delta2: 0.0,
    };

    pub fn new(delta1: f64, delta2: f64) -> Result<Self> {
        if delta1 < 0.0 {
            return Err(Error::Domain(format!("delta1 {delta1} negative")));
        }
        if !(0.0..=1.0).contains(&delta2) {
            return Err(Error::Domain(format!("delta2 {delta2} outside [0, 1]")));
        }
        Ok(Self { delta1, delta2 })
    }
}

/// Worst-case extremes implied by the tolerance intervals:
/// d_max = d (1 + tol_dc), d_min = d (1 - tol_dc) clamped at 0,
/// r_eta = (1 - tol_eta) / (1 + tol_eta).
pub fn derived_extremes(spec: &DetectorSpec) -> DetectorExtremes {
    DetectorExtremes {
        d_max: spec.d_det * (1.0 + spec.tol_dc),
        d_min: (spec.d_det * (1.0 - spec.tol_dc)).max(0.0),
        r_eta: (1.0 - spec.tol_eta) / (1.0 + spec.tol_eta),
    }
}

/// Upper bounds on (delta1, delta2) for the canonical model.
///
/// With click(d) = 1 - (1 - d)^2:
///   delta1 <= max{ (1 - click(d_min)/click(d_max)) d_max (2 - d_min) / click(d_min),
///                  4 |1 - sqrt(1 - (1 - d_min)^2 (1 - r_eta))| }
///   delta2 <= max{ 1 - click(d_min)/click(d_max), (1 - d_min)^2 (1 - r_eta) }
///
/// Both dark-count ratio terms are 0 when d_max = 0 (identical zero-dark
/// detectors have no dark-count-induced mismatch; continuous limit).
pub fn delta_bounds(ext: &DetectorExtremes) -> MismatchParams {
    let click_min = ext.d_min * (2.0 - ext.d_min); // 1 - (1 - d_min)^2
    let click_max = ext.d_max * (2.0 - ext.d_max);
    let (dc_term1, dc_term2) = if ext.d_max == 0.0 {
        (0.0, 0.0)
    } else {
        let one_minus_ratio = 1.0 - click_min / click_max;
        let t1 = if click_min == 0.0 {
            f64::INFINITY
        } else {
            one_minus_ratio * ext.d_max * (2.0 - ext.d_min) / click_min
        };
        (t1, one_minus_ratio)
    };
    let one_minus_dmin_sq = (1.0 - ext.d_min) * (1.0 - ext.d_min);
    let eta_term1 = 4.0 * (1.0 - (1.0 - one_minus_dmin_sq * (1.0 - ext.r_eta)).sqrt()).abs();
    let eta_term2 = one_minus_dmin_sq * (1.0 - ext.r_eta);
    MismatchParams {
        delta1: dc_term1.max(eta_term1),
        delta2: dc_term2.max(eta_term2),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_tolerance_extremes() {
        let spec = DetectorSpec::new(0.73, 1e-8, 0.0, 0.0).unwrap();
        let ext = derived_extremes(&spec);
        assert_eq!(ext.d_max, 1e-8);
        assert_eq!(ext.d_min, 1e-8);
        assert_eq!(ext.r_eta, 1.0);
    }

    #[test]
    fn five_percent_tolerance_extremes() {
        let spec = DetectorSpec::new(0.73, 1e-8, 0.05, 0.05).unwrap();
        let ext = derived_extremes(&spec);
        assert!((ext.d_max - 1.05e-8).abs() < 1e-23);
        assert!((ext.d_min - 0.95e-8).abs() < 1e-23);
        assert!((ext.r_eta - 19.0 / 21.0).abs() < 1e-15);
    }

    #[test]
    fn zero_dark_count_forces_zero_extremes() {
        let spec = DetectorSpec::new(0.5, 0.0, 0.1, 0.3).unwrap();
        let ext = derived_extremes(&spec);
        assert_eq!(ext.d_max, 0.0);
        assert_eq!(ext.d_min, 0.0);
        assert!((ext.r_eta - 9.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn identical_detectors_give_zero_mismatch() {
        let mm = delta_bounds(&DetectorExtremes {
            d_max: 1e-8,
            d_min: 1e-8,
            r_eta: 1.0,
        });
        assert_eq!(mm.delta1, 0.0);
        assert_eq!(mm.delta2, 0.0);
        let mm = delta_bounds(&DetectorExtremes {
            d_max: 0.0,
            d_min: 0.0,
            r_eta: 1.0,
        });
        assert_eq!(mm.delta1, 0.0);
        assert_eq!(mm.delta2, 0.0);
    }

    #[test]
    fn five_percent_mismatch_values() {
        // Frozen from independent high-precision evaluation: the efficiency
        // term dominates delta1, the dark-count ratio term dominates delta2.
        let mm = delta_bounds(&DetectorExtremes {
            d_max: 1.05e-8,
            d_min: 0.95e-8,
            r_eta: 19.0 / 21.0,
        });
        assert!((mm.delta1 - 0.19524107134987368).abs() < 1e-12, "{mm:?}");
        assert!((mm.delta2 - 0.09523809478571428).abs() < 1e-12, "{mm:?}");
    }

    #[test]
    fn zero_dark_mismatch_values() {
        let mm = delta_bounds(&DetectorExtremes {
            d_max: 0.0,
            d_min: 0.0,
            r_eta: 19.0 / 21.0,
        });
        let expect1 = 4.0 * (1.0 - (19.0f64 / 21.0).sqrt());
        assert!((mm.delta1 - expect1).abs() < 1e-15);
        assert!((mm.delta2 - 2.0 / 21.0).abs() < 1e-15);
    }

    #[test]
    fn monotone_sensitivity() {
        // Non-increasing in r_eta; non-decreasing in the dark-count spread.
        let mut prev = MismatchParams {
            delta1: f64::INFINITY,
            delta2: f64::INFINITY,
        };
        for r in [0.5, 0.7, 0.9, 0.95, 1.0] {
            let mm = delta_bounds(&DetectorExtremes {
                d_max: 1.2e-8,
                d_min: 0.8e-8,
                r_eta: r,
            });
            assert!(mm.delta1 <= prev.delta1 + 1e-15);
            assert!(mm.delta2 <= prev.delta2 + 1e-15);
            prev = mm;
        }
        let mut prev = MismatchParams::ZERO;
        for spread in [0.0, 0.1, 0.2, 0.4] {
            let mm = delta_bounds(&DetectorExtremes {
                d_max: 1e-6 * (1.0 + spread),
                d_min: 1e-6 * (1.0 - spread),
                r_eta: 0.95,
            });
            assert!(mm.delta1 >= prev.delta1 - 1e-15);
            assert!(mm.delta2 >= prev.delta2 - 1e-15);
            prev = mm;
        }
    }

    #[test]
    fn delta2_stays_below_one_on_sampled_domain() {
        for r in [0.1, 0.5, 0.9] {
            for (dmin, dmax) in [(1e-9, 1e-6), (1e-8, 1e-8), (0.01, 0.05)] {
                let mm = delta_bounds(&DetectorExtremes {
                    d_max: dmax,
                    d_min: dmin,
                    r_eta: r,
                });
                assert!(mm.delta2 < 1.0, "r={r} dmin={dmin} dmax={dmax}: {mm:?}");
            }
        }
    }

    #[test]
    fn spec_invariants_enforced() {
        assert!(DetectorSpec::new(2.0, 1e-8, 0.0, 0.0).is_err());
        assert!(DetectorSpec::new(0.8, 1e-8, 0.5, 0.0).is_err()); // eta (1+tol) > 1
        assert!(DetectorSpec::new(0.5, 0.6, 0.0, 0.9).is_err()); // d (1+tol) >= 1
        assert!(MismatchParams::new(-0.1, 0.0).is_err());
        assert!(MismatchParams::new(0.0, 1.5).is_err());
    }
}
