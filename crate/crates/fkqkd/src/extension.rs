//! Lifts a phase-error-rate bound that assumes basis-independent detection
//! efficiency to one that tolerates a detection-efficiency mismatch
//! (delta1, delta2), at the cost of two extra failure-probability terms.
//!
//! Three routes are provided: exact enumeration over the inflated count
//! window, the closed form available when the count-form bound is
//! non-decreasing, and the simpler form available when the rate bound is
//! additionally non-increasing. The asymptotic limit is also exposed.

use crate::bounds::{PhaseErrorModel, TestStats};
use crate::concentration::gamma_bin;
use crate::detector::MismatchParams;
use crate::{Error, Result};

/// Hard cap on exact enumeration; above it the closed forms are required.
pub const ENUM_THRESHOLD: u64 = 1_000_000;

/// Inputs to an extension step.
pub struct ExtensionInput<'a> {
    pub model: &'a dyn PhaseErrorModel,
    pub stats: &'a TestStats,
    /// Observed key-round count, >= 1.
    pub n_k: u64,
    pub mismatch: MismatchParams,
    pub eps_dep1_sq: f64,
    pub eps_dep2_sq: f64,
}

impl<'a> ExtensionInput<'a> {
    fn validate(&self) -> Result<()> {
        if self.n_k == 0 {
            return Err(Error::Domain("n_k must be >= 1".into()));
        }
        for (name, v) in [
            ("eps_dep1_sq", self.eps_dep1_sq),
            ("eps_dep2_sq", self.eps_dep2_sq),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Domain(format!("{name} {v} outside (0, 1]")));
            }
        }
        Ok(())
    }
}

/// Which route produced an extended bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtensionMethod {
    General,
    MonotoneCount,
    MonotoneFull,
    Asymptotic,
}

/// Intermediate values kept for audit output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtensionAudit {
    pub gamma_dep1: f64,
    pub gamma_dep2: f64,
    /// Denominator 1 - delta2 - gamma_dep2.
    pub denom: f64,
    /// Upper end of the inflated count window, when defined.
    pub w_max: Option<u64>,
    /// Base bound evaluated at the observed key count.
    pub base_rate: f64,
    pub vacuous: bool,
}

/// An extended phase-error-rate bound and its failure probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtendedBound {
    /// Bound on the phase-error rate, clamped to [0, 1].
    pub rate_bound: f64,
    /// eps_ind^2 + eps_dep1^2 + eps_dep2^2.
    pub eps_pe_sq: f64,
    pub method: ExtensionMethod,
    pub audit: ExtensionAudit,
}

/// Largest count in the inflated window: floor(m / (1 - delta2 - gamma)).
/// `None` when the denominator is not positive; callers must then fall back
/// to the trivial bound of 1.
pub fn w_set_max(m: u64, delta2: f64, eps_dep2_sq: f64) -> Result<Option<u64>> {
    if m == 0 {
        return Err(Error::Domain("w_set_max requires m >= 1".into()));
    }
    let gamma = gamma_bin(m, delta2, eps_dep2_sq)?;
    let denom = 1.0 - delta2 - gamma;
    if denom <= 0.0 {
        return Ok(None);
    }
    let w = (m as f64 / denom).floor();
    Ok(Some(if w >= u64::MAX as f64 {
        u64::MAX
    } else {
        w as u64
    }))
}

struct Deviations {
    gamma1: f64,
    gamma2: f64,
    denom: f64,
}

fn deviations(n_k: u64, mm: MismatchParams, eps1: f64, eps2: f64) -> Result<Deviations> {
    // delta1 can exceed 1 under loose detector bounds; gamma_bin needs a
    // probability, and any delta1 >= 1 makes the bound vacuous anyway.
    let gamma1 = if mm.delta1 >= 1.0 {
        0.0
    } else {
        gamma_bin(n_k, mm.delta1, eps1)?
    };
    let gamma2 = gamma_bin(n_k, mm.delta2, eps2)?;
    Ok(Deviations {
        gamma1,
        gamma2,
        denom: 1.0 - mm.delta2 - gamma2,
    })
}

fn assemble(
    numerator_rate: f64,
    dev: &Deviations,
    input: &ExtensionInput,
    method: ExtensionMethod,
    w_max: Option<u64>,
) -> ExtendedBound {
    let base = input.model.eval(input.stats, input.n_k).clamp(0.0, 1.0);
    let vacuous = dev.denom <= 0.0;
    let rate = if vacuous {
        1.0
    } else {
        (numerator_rate + (input.mismatch.delta1 + dev.gamma1) / dev.denom).clamp(0.0, 1.0)
    };
    ExtendedBound {
        rate_bound: rate,
        eps_pe_sq: input.model.eps_ind_sq() + input.eps_dep1_sq + input.eps_dep2_sq,
        method,
        audit: ExtensionAudit {
            gamma_dep1: dev.gamma1,
            gamma_dep2: dev.gamma2,
            denom: dev.denom,
            w_max,
            base_rate: base,
            vacuous,
        },
    }
}

/// Exact enumeration of the extended bound:
/// max over n in the inflated window of n E(stats, n) / n_K, plus the
/// mismatch deviation term. Falls back to the count-monotone closed form
/// when the window exceeds the enumeration budget and the model's flag
/// allows it; errors otherwise rather than approximating.
pub fn extend_general(input: &ExtensionInput) -> Result<ExtendedBound> {
    input.validate()?;
    let dev = deviations(
        input.n_k,
        input.mismatch,
        input.eps_dep1_sq,
        input.eps_dep2_sq,
    )?;
    if dev.denom <= 0.0 {
        return Ok(assemble(0.0, &dev, input, ExtensionMethod::General, None));
    }
    let w_max_f = (input.n_k as f64 / dev.denom).floor();
    if w_max_f > ENUM_THRESHOLD as f64 {
        if input.model.count_nondecreasing() {
            return extend_monotone_count(input);
        }
        return Err(Error::EnumerationInfeasible(format!(
            "window of size {w_max_f} exceeds {ENUM_THRESHOLD} and the model declares no \
             count monotonicity"
        )));
    }
    let w_max = w_max_f as u64;
    // n = 0 contributes the defined product 0.
    let mut best = 0.0f64;
    for n in 1..=w_max {
        let v = n as f64 * input.model.eval(input.stats, n).clamp(0.0, 1.0);
        if v > best {
            best = v;
        }
    }
    Ok(assemble(
        best / input.n_k as f64,
        &dev,
        input,
        ExtensionMethod::General,
        Some(w_max),
    ))
}

/// Closed form when the count-form bound n E(stats, n) is non-decreasing:
/// the enumeration collapses to the window's upper end n*.
pub fn extend_monotone_count(input: &ExtensionInput) -> Result<ExtendedBound> {
    input.validate()?;
    if !input.model.count_nondecreasing() {
        return Err(Error::Contract(
            "extend_monotone_count requires the count-form monotonicity flag".into(),
        ));
    }
    let dev = deviations(
        input.n_k,
        input.mismatch,
        input.eps_dep1_sq,
        input.eps_dep2_sq,
    )?;
    if dev.denom <= 0.0 {
        return Ok(assemble(
            0.0,
            &dev,
            input,
            ExtensionMethod::MonotoneCount,
            None,
        ));
    }
    let n_star_f = (input.n_k as f64 / dev.denom).floor();
    let n_star = if n_star_f >= u64::MAX as f64 {
        u64::MAX
    } else {
        n_star_f as u64
    };
    let numerator =
        n_star_f * input.model.eval(input.stats, n_star).clamp(0.0, 1.0) / input.n_k as f64;
    Ok(assemble(
        numerator,
        &dev,
        input,
        ExtensionMethod::MonotoneCount,
        Some(n_star),
    ))
}

/// Simplest form when additionally the rate bound is non-increasing:
/// (E(stats, n_K) + delta1 + gamma1) / (1 - delta2 - gamma2).
pub fn extend_monotone_full(input: &ExtensionInput) -> Result<ExtendedBound> {
    input.validate()?;
    if !(input.model.count_nondecreasing() && input.model.rate_nonincreasing()) {
        return Err(Error::Contract(
            "extend_monotone_full requires both monotonicity flags".into(),
        ));
    }
    let dev = deviations(
        input.n_k,
        input.mismatch,
        input.eps_dep1_sq,
        input.eps_dep2_sq,
    )?;
    if dev.denom <= 0.0 {
        return Ok(assemble(
            0.0,
            &dev,
            input,
            ExtensionMethod::MonotoneFull,
            None,
        ));
    }
    let base = input.model.eval(input.stats, input.n_k).clamp(0.0, 1.0);
    // Trailing deviation term is added by assemble; only E/denom here.
    Ok(assemble(
        base / dev.denom,
        &dev,
        input,
        ExtensionMethod::MonotoneFull,
        None,
    ))
}

/// Asymptotic limit of the extension: min(1, (e + delta1) / (1 - delta2)),
/// and the trivial 1 once delta2 reaches 1.
pub fn asymptotic_extend(e: f64, delta1: f64, delta2: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&e) {
        return Err(Error::Domain(format!("rate {e} outside [0, 1]")));
    }
    if delta1 < 0.0 || delta2 < 0.0 {
        return Err(Error::Domain("mismatch parameters must be >= 0".into()));
    }
    if delta2 >= 1.0 {
        return Ok(1.0);
    }
    Ok(((e + delta1) / (1.0 - delta2)).min(1.0))
}
