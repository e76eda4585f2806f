//! Brute-force reference implementations used by the test suites.
//!
//! Everything here is exact rational arithmetic on big integers, evaluated by
//! direct enumeration. It shares no code with the log-domain production path
//! in [`crate::concentration`], so the two can be checked against each other.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Exact upper binomial tail P(X >= k) for X ~ Binomial(n, delta).
pub fn exact_tail_ge(n: u64, k: i64, delta: &BigRational) -> BigRational {
    if k <= 0 {
        return BigRational::one();
    }
    let k = k as u64;
    if k > n {
        return BigRational::zero();
    }
    let one = BigRational::one();
    let q = &one - delta;
    // term_i = C(n,i) delta^i (1-delta)^(n-i), built by the ratio recurrence
    // term_{i+1} = term_i * (n-i)/(i+1) * delta/(1-delta).
    let mut term = q.pow(n as i32);
    let mut sum = if k == 0 { term.clone() } else { BigRational::zero() };
    for i in 0..n {
        if q.is_zero() {
            // delta = 1: only the i = n term is nonzero.
            term = delta.pow(n as i32);
            sum = term;
            break;
        }
        term = term * BigRational::from(BigInt::from(n - i))
            / BigRational::from(BigInt::from(i + 1))
            * delta
            / &q;
        if i + 1 >= k {
            sum += term.clone();
        }
    }
    sum
}

/// Smallest integer k with P(X >= k) <= eps_sq, searched by enumeration.
/// Always exists in [0, n+1] since the empty tail is zero.
pub fn exact_kstar(n: u64, delta: &BigRational, eps_sq: &BigRational) -> u64 {
    for k in 0..=(n as i64 + 1) {
        if exact_tail_ge(n, k, delta) <= *eps_sq {
            return k as u64;
        }
    }
    unreachable!("empty tail is always <= eps_sq");
}

/// Oracle for the finite-size deviation term: max(0, k*/n - delta), exact,
/// returned as f64 at the end.
pub fn exact_gamma_bin(n: u64, delta: &BigRational, eps_sq: &BigRational) -> f64 {
    let kstar = exact_kstar(n, delta, eps_sq);
    let gamma = BigRational::new(BigInt::from(kstar), BigInt::from(n)) - delta;
    if gamma < BigRational::zero() {
        0.0
    } else {
        rational_to_f64(&gamma)
    }
}

/// Fast k* search for grid points delta = j/den, eps_sq = eps_num/eps_den.
///
/// Works on unreduced integer numerators over the common denominator den^n,
/// avoiding the per-operation GCD cost of [`BigRational`]. The comparison
/// `tail(k) <= eps_sq` becomes `eps_den * suffix_k <= eps_num * den^n`.
pub fn exact_kstar_grid(n: u64, j: u64, den: u64, eps_num: u64, eps_den: &BigInt) -> u64 {
    assert!(n >= 1 && j <= den && den > 0);
    let eps_lt_one = BigInt::from(eps_num) < *eps_den;
    if j == 0 {
        // Only the i = 0 term is nonzero: tail(0) = 1, tail(k >= 1) = 0.
        return if eps_lt_one { 1 } else { 0 };
    }
    if j == den {
        // All mass at i = n: tail(k) = 1 for every k <= n.
        return if eps_lt_one { n + 1 } else { 0 };
    }
    // Unreduced numerators term_i = C(n,i) j^i (den-j)^(n-i).
    let jj = BigInt::from(j);
    let qq = BigInt::from(den - j);
    let mut terms: Vec<BigInt> = Vec::with_capacity(n as usize + 1);
    let mut t = qq.pow(n as u32);
    terms.push(t.clone());
    for i in 0..n {
        t = t * BigInt::from(n - i) * &jj / (BigInt::from(i + 1) * &qq);
        terms.push(t.clone());
    }
    let rhs = BigInt::from(eps_num) * den_pow(den, n);
    // Suffix sums from the top; k* is the smallest k whose suffix fits.
    let mut suffix = BigInt::from(0u32);
    let mut kstar = n + 1;
    for k in (0..=n).rev() {
        suffix += &terms[k as usize];
        if eps_den * &suffix <= rhs {
            kstar = k;
        } else {
            break;
        }
    }
    kstar
}

fn den_pow(den: u64, n: u64) -> BigInt {
    BigInt::from(den).pow(n as u32)
}

/// Convenience constructor for a rational j/den.
pub fn ratio(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Nearest-f64 conversion for test assertions.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    num_traits::ToPrimitive::to_f64(r).expect("finite rational")
}
