//! Exact binomial-tail arithmetic and the finite-size deviation terms used
//! throughout the toolkit, plus binary entropy.
//!
//! All tail probabilities are evaluated in natural-log domain internally so
//! that trial counts up to 10^12 remain sound; public values are linear.

use crate::{Error, Result};

/// Ties at the threshold (tail exactly equal to eps_sq) count as satisfied.
const LOG_TIE_TOL: f64 = 1e-12;

/// Convergence tolerance of the incomplete-beta continued fraction.
const CF_TOL: f64 = 1e-15;
const CF_MAX_ITER: usize = 10_000_000;

/// Trial count, deviation probability and failure budget for a tail query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailQuery {
    pub n: u64,
    pub delta: f64,
    pub eps_sq: f64,
}

impl TailQuery {
    pub fn new(n: u64, delta: f64, eps_sq: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::Domain(format!("delta {delta} outside [0, 1]")));
        }
        if !(eps_sq > 0.0 && eps_sq <= 1.0) {
            return Err(Error::Domain(format!("eps_sq {eps_sq} outside (0, 1]")));
        }
        Ok(Self { n, delta, eps_sq })
    }

    /// Finite-size deviation for this query; requires n >= 1.
    pub fn deviation(&self) -> Result<f64> {
        gamma_bin(self.n, self.delta, self.eps_sq)
    }
}

/// Upper binomial tail P(X >= k) for X ~ Binomial(n, delta).
///
/// k <= 0 gives 1 (whole distribution) and k > n gives 0 (empty sum).
pub fn binomial_tail_ge(n: u64, k: i64, delta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::Domain(format!("delta {delta} outside [0, 1]")));
    }
    Ok(ln_tail_ge(n, k, delta).exp())
}

/// ln P(X >= k); -inf for an empty sum, 0 for the whole distribution.
fn ln_tail_ge(n: u64, k: i64, delta: f64) -> f64 {
    if k <= 0 {
        return 0.0;
    }
    let k = k as u64;
    if k > n {
        return f64::NEG_INFINITY;
    }
    if delta <= 0.0 {
        // X is identically 0 and k >= 1.
        return f64::NEG_INFINITY;
    }
    if delta >= 1.0 {
        // X is identically n >= k.
        return 0.0;
    }
    // P(X >= k) = I_delta(k, n - k + 1), the regularized incomplete beta.
    ln_beta_reg(k as f64, (n - k + 1) as f64, delta)
}

/// ln I_x(a, b) via the continued fraction, using the symmetry
/// I_x(a, b) = 1 - I_{1-x}(b, a) on the slow-converging side.
fn ln_beta_reg(a: f64, b: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && b > 0.0 && x > 0.0 && x < 1.0);
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_prefactor(a, b, x) + beta_cf(a, b, x).ln()
    } else {
        let lc = ln_prefactor(b, a, 1.0 - x) + beta_cf(b, a, 1.0 - x).ln();
        // ln(1 - e^lc); the complement is small on this branch, so the
        // result is near zero and absolute log accuracy is preserved.
        if lc >= 0.0 {
            f64::NEG_INFINITY
        } else {
            (-lc.exp()).ln_1p()
        }
    }
}

fn ln_prefactor(a: f64, b: f64, x: f64) -> f64 {
    a * x.ln() + b * (-x).ln_1p() - a.ln() - ln_beta(a, b)
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Lanczos approximation (g = 7, 9 terms); callers only use z >= 1.
fn ln_gamma(z: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    debug_assert!(z > 0.0);
    let z = z - 1.0;
    let mut acc = COEF[0];
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

/// Incomplete-beta continued fraction (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const FPMIN: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m_f = m as f64;
        let m2 = 2.0 * m_f;
        let aa = m_f * (b - m_f) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m_f) * (qab + m_f) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_TOL {
            break;
        }
    }
    h
}

/// Finite-size deviation term: the smallest x >= 0 such that the upper
/// binomial tail starting at floor(n (delta + x)) drops to eps_sq or below.
///
/// Computed as max(0, k*/n - delta) with k* = min { k : P(X >= k) <= eps_sq },
/// found by integer binary search on a log-domain tail evaluator. The result
/// lies in [0, 1 - delta + 1/n].
pub fn gamma_bin(n: u64, delta: f64, eps_sq: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("gamma_bin requires n >= 1".into()));
    }
    let q = TailQuery::new(n, delta, eps_sq)?;
    let kstar = search_kstar(q.n, q.delta, q.eps_sq);
    Ok((kstar as f64 / n as f64 - delta).max(0.0))
}

/// Smallest k in [0, n+1] with P(X >= k) <= eps_sq (ties satisfy).
fn search_kstar(n: u64, delta: f64, eps_sq: f64) -> u64 {
    let ln_eps = eps_sq.ln() + LOG_TIE_TOL;
    let accept = |k: u64| ln_tail_ge(n, k as i64, delta) <= ln_eps;
    if accept(0) {
        return 0;
    }
    // Hoeffding seed: P(X >= n delta + t) <= exp(-2 t^2 / n), so the tail at
    // ceil(n delta + sqrt(n ln(1/eps_sq) / 2)) + 1 is already small enough.
    // Keeps the binary search away from slow continued-fraction regions.
    let t = (n as f64 * (1.0 / eps_sq).ln() / 2.0).sqrt();
    let seed = (n as f64 * delta + t).ceil() as u64 + 1;
    let mut hi = if seed <= n && accept(seed) { seed } else { n + 1 };
    let mut lo = 0u64; // accept(0) is false here
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if accept(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Deviation term for sampling without replacement (Serfling-type):
/// sqrt( ln(1/eps_sq) (n_K + n_X)(n_X + 1) / (n_K n_X^2) ).
pub fn gamma_serf(n_x: u64, n_k: u64, eps_ind_sq: f64) -> Result<f64> {
    if n_x == 0 || n_k == 0 {
        return Err(Error::Domain("gamma_serf requires n_X, n_K >= 1".into()));
    }
    if !(eps_ind_sq > 0.0 && eps_ind_sq <= 1.0) {
        return Err(Error::Domain(format!(
            "eps_ind_sq {eps_ind_sq} outside (0, 1]"
        )));
    }
    let nx = n_x as f64;
    let nk = n_k as f64;
    let ln_term = -(eps_ind_sq.ln());
    Ok((ln_term * (nk + nx) * (nx + 1.0) / (nk * nx * nx)).sqrt())
}

/// Binary entropy in bits, with 0 log 0 = 0.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("probability {p} outside [0, 1]")));
    }
    if p == 0.0 || p == 1.0 {
        return Ok(0.0);
    }
    Ok(-p * p.log2() - (1.0 - p) * (1.0 - p).log2())
}
