//! Exact rational helpers shared by the integration tests.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Closed form for `P(2l)` over `[2K, 2n]`, in exact arithmetic.
pub fn closed_form_rational(half_white: u64, half_total: u64) -> Vec<BigRational> {
    let (kk, n) = (half_white, half_total);
    let l_max = kk.min(n - kk);
    let mut out = vec![BigRational::zero(); (2 * l_max + 1) as usize];
    for l in 0..=l_max {
        let num = binomial(n, kk - l)
            * binomial(n - kk + l, 2 * l)
            * factorial(2 * kk)
            * factorial(2 * n - 2 * kk)
            * (BigInt::one() << (2 * l));
        out[(2 * l) as usize] = BigRational::new(num, factorial(2 * n));
    }
    out
}

/// One rational recursion step from `white` to `white + 1` white balls.
pub fn recursion_step_rational(prev: &[BigRational], white: u64, total: u64) -> Vec<BigRational> {
    let blacks = BigInt::from(total - white);
    let len = (white + 1).min(total - white - 1) as usize + 1;
    (0..len)
        .map(|c| {
            let mut p = BigRational::zero();
            if c >= 1 {
                if let Some(q) = prev.get(c - 1) {
                    let w = BigRational::new(&blacks - BigInt::from(c - 1), blacks.clone());
                    p += q * w;
                }
            }
            if let Some(q) = prev.get(c + 1) {
                p += q * BigRational::new(BigInt::from(c + 1), blacks.clone());
            }
            p
        })
        .collect()
}

/// `wb` law of `[k, N]`: closed form for even `k`, one recursion step for odd `k`.
pub fn wb_law_closed_rational(k: u64, total: u64) -> Vec<BigRational> {
    if k.is_multiple_of(2) {
        closed_form_rational(k / 2, total / 2)
    } else {
        recursion_step_rational(&closed_form_rational(k / 2, total / 2), k - 1, total)
    }
}

/// `wb` law of `[k, N]` by recursion from the all-black set.
pub fn wb_law_recursive_rational(k: u64, total: u64) -> Vec<BigRational> {
    let mut p = vec![BigRational::one()];
    for w in 0..k {
        p = recursion_step_rational(&p, w, total);
    }
    p
}

pub fn double_factorial_odd(n: u64) -> BigInt {
    (1..=n)
        .step_by(2)
        .fold(BigInt::one(), |a, i| a * BigInt::from(i))
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap()
}

/// Trim trailing zeros so laws of different nominal length compare equal.
pub fn trimmed(mut v: Vec<BigRational>) -> Vec<BigRational> {
    while v.len() > 1 && v.last().is_some_and(|x| x.is_zero()) {
        v.pop();
    }
    v
}
