//! Pluggable phase-error-rate bounds, the ideal-source Serfling instance,
//! and the algebraic envelope machinery used by source-imperfection bounds
//! (the G+ function, its x-scaled product form, and numerical checks of
//! their monotonicity and continuity).

use crate::concentration::gamma_serf;
use crate::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Announced test-side statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct TestStats {
    /// Rounds in which both parties announced the test basis.
    pub n_x: u64,
    /// Observed error rate within those rounds.
    pub e_x: f64,
    /// Optional fine-grained per-setting counts (must sum to at most n_x).
    pub fine_grained: Option<Vec<u64>>,
}

impl TestStats {
    pub fn new(n_x: u64, e_x: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&e_x) {
            return Err(Error::Domain(format!("e_x {e_x} outside [0, 1]")));
        }
        Ok(Self {
            n_x,
            e_x,
            fine_grained: None,
        })
    }

    pub fn with_fine_grained(mut self, counts: Vec<u64>) -> Result<Self> {
        let sum: u64 = counts.iter().sum();
        if sum > self.n_x {
            return Err(Error::Domain(format!(
                "fine-grained counts sum {sum} exceeds n_x {}",
                self.n_x
            )));
        }
        self.fine_grained = Some(counts);
        Ok(self)
    }
}

/// A bound on the phase-error rate valid under basis-independent detection
/// efficiency, together with its failure probability and the monotonicity
/// flags the extension combinators can exploit.
///
/// `eval` must always return a value in [0, 1] (clamped). Flags must only be
/// set when the property is proven or verified for the concrete bound:
/// `rate_nonincreasing` says the rate bound does not increase with the key
/// count; `count_nondecreasing` says the implied error-count bound
/// (key count times rate) does not decrease with the key count.
pub trait PhaseErrorModel {
    fn eval(&self, stats: &TestStats, n_k: u64) -> f64;
    fn eps_ind_sq(&self) -> f64;
    fn rate_nonincreasing(&self) -> bool {
        false
    }
    fn count_nondecreasing(&self) -> bool {
        false
    }
}

/// Ideal-source bound from sampling without replacement:
/// observed test error rate plus the Serfling deviation term.
/// Both monotonicity properties hold analytically for this form.
#[derive(Debug, Clone, Copy)]
pub struct SerflingModel {
    pub eps_ind_sq: f64,
}

impl SerflingModel {
    pub fn new(eps_ind_sq: f64) -> Result<Self> {
        if !(eps_ind_sq > 0.0 && eps_ind_sq <= 1.0) {
            return Err(Error::Domain(format!(
                "eps_ind_sq {eps_ind_sq} outside (0, 1]"
            )));
        }
        Ok(Self { eps_ind_sq })
    }
}

impl PhaseErrorModel for SerflingModel {
    fn eval(&self, stats: &TestStats, n_k: u64) -> f64 {
        serfling_e00(stats, n_k, self.eps_ind_sq)
    }
    fn eps_ind_sq(&self) -> f64 {
        self.eps_ind_sq
    }
    fn rate_nonincreasing(&self) -> bool {
        true
    }
    fn count_nondecreasing(&self) -> bool {
        true
    }
}

/// Constant-rate model, mostly for tests and asymptotic checks. A constant
/// is trivially non-increasing and its count form trivially non-decreasing.
#[derive(Debug, Clone, Copy)]
pub struct ConstantModel {
    pub rate: f64,
    pub eps_ind_sq: f64,
}

impl PhaseErrorModel for ConstantModel {
    fn eval(&self, _stats: &TestStats, _n_k: u64) -> f64 {
        self.rate.clamp(0.0, 1.0)
    }
    fn eps_ind_sq(&self) -> f64 {
        self.eps_ind_sq
    }
    fn rate_nonincreasing(&self) -> bool {
        true
    }
    fn count_nondecreasing(&self) -> bool {
        true
    }
}

/// min(1, e_X + gamma_serf(n_X, n_K, eps_ind_sq)); a vacuous 1 when no test
/// rounds were announced.
pub fn serfling_e00(stats: &TestStats, n_k: u64, eps_ind_sq: f64) -> f64 {
    if stats.n_x == 0 || n_k == 0 {
        return 1.0;
    }
    match gamma_serf(stats.n_x, n_k, eps_ind_sq) {
        Ok(g) => (stats.e_x + g).min(1.0),
        Err(_) => 1.0,
    }
}

/// Algebraic envelope used by source-imperfection phase-error bounds:
/// y + (1 - z^2)(1 - 2y) + 2 sqrt(z^2 (1 - z^2) y (1 - y)) on the branch
/// 0 <= y < z^2 <= 1 with z > 0, and 1 otherwise.
pub fn g_plus(y: f64, z: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&y) {
        return Err(Error::Domain(format!("y {y} outside [0, 1]")));
    }
    Ok(g_plus_raw(y, z))
}

/// Branch logic without the y-domain check; y >= 1 or y < 0 simply falls
/// into the "otherwise" branch.
fn g_plus_raw(y: f64, z: f64) -> f64 {
    let z2 = z * z;
    if z > 0.0 && z2 <= 1.0 && y >= 0.0 && y < z2 {
        let rad = (z2 * (1.0 - z2) * y * (1.0 - y)).max(0.0);
        y + (1.0 - z2) * (1.0 - 2.0 * y) + 2.0 * rad.sqrt()
    } else {
        1.0
    }
}

/// x G+(y, 1 - a/(p(x+c))). Non-decreasing in x on its whole domain, which
/// is what lets count-form bounds built from it be extended. When
/// p(x+c) = 0 with a > 0 the envelope argument diverges to -inf and the
/// "otherwise" branch applies.
pub fn f_envelope(x: f64, y: f64, a: f64, c: f64, p: f64) -> Result<f64> {
    if x < 0.0 || a < 0.0 || c < 0.0 {
        return Err(Error::Domain(format!(
            "x {x}, a {a}, c {c} must be non-negative"
        )));
    }
    if !(0.0..=1.0).contains(&y) {
        return Err(Error::Domain(format!("y {y} outside [0, 1]")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("p {p} outside (0, 1)")));
    }
    Ok(f_envelope_raw(x, y, a, c, p))
}

fn f_envelope_raw(x: f64, y: f64, a: f64, c: f64, p: f64) -> f64 {
    let denom = p * (x + c);
    let z = if a == 0.0 {
        1.0
    } else if denom == 0.0 {
        f64::NEG_INFINITY
    } else {
        1.0 - a / denom
    };
    x * g_plus_raw(y, z)
}

/// Result of the sampled monotonicity and continuity check of the envelope
/// product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotoneReport {
    pub samples: u64,
    /// Smallest finite-difference slope seen.
    pub min_slope: f64,
    /// Slopes below -tolerance.
    pub violations: u64,
    pub boundary_checks: u64,
    pub boundary_violations: u64,
    pub max_boundary_gap: f64,
}

impl MonotoneReport {
    pub fn pass(&self) -> bool {
        self.violations == 0 && self.boundary_violations == 0
    }
}

/// Samples (x, y, a, c, p) from x, a, c in [0, 100], y in [0, 1],
/// p in [0.01, 0.99]; checks central finite differences of the envelope
/// product in x against -tolerance, and continuity across the two branch
/// boundaries (envelope argument hitting 0 and hitting sqrt(y)) with gap
/// budget 1e-6 (1 + x_b). Deterministic for a fixed seed.
pub fn verify_f_monotone(samples: u64, tolerance: f64, seed: u64) -> Result<MonotoneReport> {
    if samples == 0 {
        return Err(Error::Domain("samples must be >= 1".into()));
    }
    if tolerance <= 0.0 {
        return Err(Error::Domain("tolerance must be > 0".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut min_slope = f64::INFINITY;
    let mut violations = 0u64;
    let mut boundary_checks = 0u64;
    let mut boundary_violations = 0u64;
    let mut max_gap = 0.0f64;
    for _ in 0..samples {
        let x: f64 = rng.gen_range(0.0..100.0);
        let y: f64 = rng.gen_range(0.0..=1.0);
        let a: f64 = rng.gen_range(0.0..100.0);
        let c: f64 = rng.gen_range(0.0..100.0);
        let p: f64 = rng.gen_range(0.01..0.99);
        let h = (1e-6f64).max(1e-6 * x);
        let slope = if x >= h {
            (f_envelope_raw(x + h, y, a, c, p) - f_envelope_raw(x - h, y, a, c, p)) / (2.0 * h)
        } else {
            (f_envelope_raw(x + h, y, a, c, p) - f_envelope_raw(x, y, a, c, p)) / h
        };
        if slope < min_slope {
            min_slope = slope;
        }
        if slope < -tolerance {
            violations += 1;
        }
        // Branch boundaries for this parameter draw, where they fall at
        // positive x: envelope argument 0 at x_b = a/p - c, and sqrt(y) at
        // x_b = a/(p(1 - sqrt(y))) - c.
        let mut candidates = [f64::NAN; 2];
        if a > 0.0 {
            candidates[0] = a / p - c;
            let root = y.sqrt();
            if root < 1.0 {
                candidates[1] = a / (p * (1.0 - root)) - c;
            }
        }
        for xb in candidates {
            if xb.is_finite() && xb > 0.0 && xb <= 1e6 {
                let hb = 1e-9 * (1.0 + xb);
                let gap = (f_envelope_raw(xb - hb, y, a, c, p)
                    - f_envelope_raw(xb + hb, y, a, c, p))
                .abs();
                boundary_checks += 1;
                if gap > max_gap {
                    max_gap = gap;
                }
                if gap > 1e-6 * (1.0 + xb) {
                    boundary_violations += 1;
                }
            }
        }
    }
    Ok(MonotoneReport {
        samples,
        min_slope,
        violations,
        boundary_checks,
        boundary_violations,
        max_boundary_gap: max_gap,
    })
}

/// The two right-hand sides produced by concentration post-processing of an
/// envelope bound: the original form and the tightened form whose envelope
/// denominator is never smaller. `original` is `None` (vacuous; callers fall
/// back to the trivial count bound) when the error-fraction denominator
/// n1_det_lo - dev is not positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhsPair {
    pub original: Option<f64>,
    pub tightened: f64,
}

/// Evaluates both forms for abstract non-negative statistics:
/// n0_det_hi, n1_err_hi, n1_det_lo, nx1_hi with deviation allowance `dev`,
/// and sifting probabilities p_zc, p_xc.
pub fn bound_rhs_pair(
    n0_det_hi: f64,
    n1_err_hi: f64,
    n1_det_lo: f64,
    nx1_hi: f64,
    dev: f64,
    p_zc: f64,
    p_xc: f64,
) -> Result<RhsPair> {
    if n0_det_hi < 0.0 || n1_err_hi < 0.0 || n1_det_lo < 0.0 || nx1_hi < 0.0 || dev < 0.0 {
        return Err(Error::Domain("counts and dev must be non-negative".into()));
    }
    if !(p_xc > 0.0 && p_xc < 1.0) {
        return Err(Error::Domain(format!("p_xc {p_xc} outside (0, 1)")));
    }
    if !(0.0..=1.0).contains(&p_zc) {
        return Err(Error::Domain(format!("p_zc {p_zc} outside [0, 1]")));
    }
    let slack = n1_det_lo - dev;
    let a = 2.0 * p_zc * (nx1_hi + dev);
    let x = n0_det_hi + dev;
    let envelope = |y: f64, denom: f64| -> f64 {
        let z = if a == 0.0 {
            1.0
        } else if denom <= 0.0 {
            f64::NEG_INFINITY
        } else {
            1.0 - a / denom
        };
        x * g_plus_raw(y, z) + dev
    };
    let tightened_denom = p_xc * (n0_det_hi + dev + slack.max(0.0));
    let (original, y) = if slack > 0.0 {
        let y = (n1_err_hi + dev) / slack;
        let original_denom = p_xc * (n0_det_hi + n1_det_lo - dev);
        (Some(envelope(y, original_denom)), y)
    } else {
        // Error fraction undefined: the envelope falls back to 1.
        (None, f64::INFINITY)
    };
    Ok(RhsPair {
        original,
        tightened: envelope(y, tightened_denom),
    })
}
