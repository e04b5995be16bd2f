//! Tail probabilities for the binomial, Chernoff and hypergeometric settings.
//!
//! Every other module goes through these functions when it needs a failure
//! probability or a confidence bound. Binomial tails are summed outward from
//! an anchor term whose logarithm is computed with the saddle-point
//! decomposition (`stirlerr` + `bd0`), which keeps full double precision for
//! trial counts far beyond what `ln Γ` differences can resolve.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A probability of failure, always inside `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct FailureProb(f64);

impl FailureProb {
    pub const ZERO: FailureProb = FailureProb(0.0);
    pub const ONE: FailureProb = FailureProb(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::InvalidArgument(format!(
                "failure probability {value} outside [0, 1]"
            )));
        }
        Ok(FailureProb(value))
    }

    /// Clamps `value` into `[0, 1]`. NaN maps to 1.
    pub fn clamped(value: f64) -> Self {
        if value.is_nan() {
            FailureProb(1.0)
        } else {
            FailureProb(value.clamp(0.0, 1.0))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Rejects the endpoints; the Chernoff and hypergeometric inversions need `0 < ξ < 1`.
    fn open_unit(self, what: &str) -> Result<f64> {
        if self.0 <= 0.0 || self.0 >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "{what} must lie strictly inside (0, 1), got {}",
                self.0
            )));
        }
        Ok(self.0)
    }
}

impl TryFrom<f64> for FailureProb {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        FailureProb::new(value)
    }
}

impl From<FailureProb> for f64 {
    fn from(p: FailureProb) -> f64 {
        p.0
    }
}

/// `B(M, p)`: `trials` independent draws with success probability `success_prob`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinomialSpec {
    pub trials: u64,
    pub success_prob: f64,
}

impl BinomialSpec {
    pub fn new(trials: u64, success_prob: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&success_prob) {
            return Err(Error::InvalidArgument(format!(
                "success probability {success_prob} outside [0, 1]"
            )));
        }
        Ok(BinomialSpec {
            trials,
            success_prob,
        })
    }

    fn mean(&self) -> f64 {
        self.trials as f64 * self.success_prob
    }
}

// ---------------------------------------------------------------------------
// Binomial pmf in log space
// ---------------------------------------------------------------------------

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// `ln n! - ln(sqrt(2πn) (n/e)^n)` for integer `n >= 1`.
const STIRLERR_SMALL: [f64; 16] = [
    0.0,
    0.081_061_466_795_327_26,
    0.041_340_695_955_409_3,
    0.027_677_925_684_998_34,
    0.020_790_672_103_765_093,
    0.016_644_691_189_821_192,
    0.013_876_128_823_070_748,
    0.011_896_709_945_891_77,
    0.010_411_265_261_972_096,
    0.009_255_462_182_712_733,
    0.008_330_563_433_362_87,
    0.007_573_675_487_951_841,
    0.006_942_840_107_209_53,
    0.006_408_994_188_004_207,
    0.005_951_370_112_758_848,
    0.005_554_733_551_962_801,
];

fn stirlerr(n: u64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15 {
        return STIRLERR_SMALL[n as usize];
    }
    let n = n as f64;
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance term `x ln(x/np) + np - x`, stable when `x ≈ np`.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        for j in 1..1000 {
            ej *= v2;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / np).ln() + np - x
    }
}

/// `ln P[X = x]` for `X ~ B(n, p)` with `0 < p < 1` and `q = 1 - p`.
pub(crate) fn ln_binom_pmf(x: u64, n: u64, p: f64, q: f64) -> f64 {
    if x > n {
        return f64::NEG_INFINITY;
    }
    let nf = n as f64;
    if x == 0 {
        if n == 0 {
            return 0.0;
        }
        return if p < 0.1 {
            -bd0(nf, nf * q) - nf * p
        } else {
            nf * q.ln()
        };
    }
    if x == n {
        return if q < 0.1 {
            -bd0(nf, nf * p) - nf * q
        } else {
            nf * p.ln()
        };
    }
    let xf = x as f64;
    let lc = stirlerr(n) - stirlerr(x) - stirlerr(n - x) - bd0(xf, nf * p) - bd0(nf - xf, nf * q);
    let lf = LN_2PI + xf.ln() + (-xf / nf).ln_1p();
    lc - 0.5 * lf
}

/// Neumaier-compensated accumulator.
#[derive(Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Relative size below which the remaining (geometrically shrinking) terms are dropped.
const TAIL_CUTOFF: f64 = 1e-18;

/// The tail is at most `(n + 1) e^{anchor}`; true when that is below the smallest subnormal.
fn underflows(anchor: f64, n: u64) -> bool {
    anchor + ((n as f64) + 1.0).ln() < -746.0
}

/// Iterations allowed for the continued fraction before falling back to summation.
const CF_MAX_ITER: usize = 2000;

/// Continued fraction `r` of the regularized incomplete beta for large parameters,
/// `I_x(a, b) = x^a y^b / B(a, b) · r` with `y = 1 - x` and `lambda = (a + b) y - b`
/// (the BFRAC form of Didonato and Morris). Passing `lambda` directly avoids the
/// cancellation that the textbook fraction suffers when `x` is close to `a/(a + b)`.
fn beta_frac(a: f64, b: f64, x: f64, y: f64, lambda: f64) -> Option<f64> {
    let c = 1.0 + lambda;
    let c0 = b / a;
    let c1 = 1.0 + 1.0 / a;
    let yp1 = y + 1.0;
    let (mut n, mut p, mut s) = (0.0, 1.0, a + 1.0);
    let (mut an, mut bn, mut anp1, mut bnp1) = (0.0, 1.0, 1.0, c / c1);
    let mut r = c1 / c;
    for _ in 0..CF_MAX_ITER {
        n += 1.0;
        let t = n / a;
        let w = n * (b - n) * x;
        let e = a / s;
        let alpha = (p * (p + c0) * e * e) * (w * x);
        let e = (1.0 + t) / (c1 + t + t);
        let beta = n + w / s + e * (c + n * yp1);
        p = 1.0 + t;
        s += 2.0;
        let t = alpha * an + beta * anp1;
        an = anp1;
        anp1 = t;
        let t = alpha * bn + beta * bnp1;
        bn = bnp1;
        bnp1 = t;
        let r0 = r;
        r = anp1 / bnp1;
        if !r.is_finite() {
            return None;
        }
        if (r - r0).abs() <= 2.0 * f64::EPSILON * r {
            return (r > 0.0).then_some(r);
        }
        an /= bnp1;
        bn /= bnp1;
        anp1 = r;
        bnp1 = 1.0;
    }
    None
}

/// `P[X <= k] / P[X = k]` for `k <= mode`: `I_q(n-k, k+1) = P[X = k] · p (n-k) · r`.
fn ratio_down(k: u64, n: u64, p: f64, q: f64) -> f64 {
    let (a, b) = ((n - k) as f64, (k + 1) as f64);
    let lambda = (n as f64 + 1.0) * p - b;
    match beta_frac(a, b, q, p, lambda) {
        Some(r) => p * a * r,
        None => series_down(k, n, p, q),
    }
}

/// `P[X >= k] / P[X = k]` for `k > mode`: `I_p(k, n-k+1) = P[X = k] · q k · r`.
fn ratio_up(k: u64, n: u64, p: f64, q: f64) -> f64 {
    let (a, b) = (k as f64, (n - k + 1) as f64);
    let lambda = a - (n as f64 + 1.0) * p;
    match beta_frac(a, b, p, q, lambda) {
        Some(r) => q * a * r,
        None => series_up(k, n, p, q),
    }
}

/// `P[X <= k]` for `k <= mode`.
fn sum_down(k: u64, n: u64, p: f64, q: f64) -> f64 {
    let anchor = ln_binom_pmf(k, n, p, q);
    if underflows(anchor, n) {
        return 0.0;
    }
    anchor.exp() * ratio_down(k, n, p, q)
}

/// `P[X >= k]` for `k > mode`.
fn sum_up(k: u64, n: u64, p: f64, q: f64) -> f64 {
    let anchor = ln_binom_pmf(k, n, p, q);
    if underflows(anchor, n) {
        return 0.0;
    }
    anchor.exp() * ratio_up(k, n, p, q)
}

/// `P[X <= k] / P[X = k]`, summing terms `l = k, k-1, …` in descending magnitude.
fn series_down(k: u64, n: u64, p: f64, q: f64) -> f64 {
    let ratio = q / p;
    let mut acc = CompensatedSum::default();
    acc.add(1.0);
    let mut term = 1.0;
    let mut l = k;
    while l > 0 {
        term *= l as f64 / (n - l + 1) as f64 * ratio;
        acc.add(term);
        if term < TAIL_CUTOFF * acc.total() {
            break;
        }
        l -= 1;
    }
    acc.total()
}

/// `P[X >= k] / P[X = k]`, summing terms `l = k, k+1, …` in descending magnitude.
fn series_up(k: u64, n: u64, p: f64, q: f64) -> f64 {
    let ratio = p / q;
    let mut acc = CompensatedSum::default();
    acc.add(1.0);
    let mut term = 1.0;
    let mut l = k;
    while l < n {
        term *= (n - l) as f64 / (l + 1) as f64 * ratio;
        acc.add(term);
        if term < TAIL_CUTOFF * acc.total() {
            break;
        }
        l += 1;
    }
    acc.total()
}

fn mode(n: u64, p: f64) -> u64 {
    (((n as f64) + 1.0) * p).floor().min(n as f64) as u64
}

/// `P[X <= k]` for `0 < p < 1`.
fn cdf_inner(k: u64, n: u64, p: f64) -> f64 {
    if k >= n {
        return 1.0;
    }
    let q = 1.0 - p;
    if k <= mode(n, p) {
        sum_down(k, n, p, q).min(1.0)
    } else {
        (1.0 - sum_up(k + 1, n, p, q)).max(0.0)
    }
}

/// `P[X >= k]` for `0 < p < 1`.
fn survival_inner(k: u64, n: u64, p: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    let q = 1.0 - p;
    if k > mode(n, p) {
        sum_up(k, n, p, q).min(1.0)
    } else {
        (1.0 - sum_down(k - 1, n, p, q)).max(0.0)
    }
}

/// Lower binomial tail `ξ_L(x; p, M) = P[X < x]` for `X ~ B(M, p)`.
pub fn binom_tail_below(threshold: u64, spec: &BinomialSpec) -> FailureProb {
    let BinomialSpec {
        trials: n,
        success_prob: p,
    } = *spec;
    if threshold == 0 {
        return FailureProb::ZERO;
    }
    if threshold > n {
        return FailureProb::ONE;
    }
    if p <= 0.0 {
        return FailureProb::ONE;
    }
    if p >= 1.0 {
        // X = M surely and threshold <= M here.
        return FailureProb::ZERO;
    }
    FailureProb::clamped(cdf_inner(threshold - 1, n, p))
}

/// Upper binomial tail `P[X >= x]` for `X ~ B(M, p)`.
pub fn binom_tail_at_least(threshold: u64, spec: &BinomialSpec) -> FailureProb {
    let BinomialSpec {
        trials: n,
        success_prob: p,
    } = *spec;
    if threshold == 0 {
        return FailureProb::ONE;
    }
    if threshold > n || p <= 0.0 {
        return FailureProb::ZERO;
    }
    if p >= 1.0 {
        return FailureProb::ONE;
    }
    FailureProb::clamped(survival_inner(threshold, n, p))
}

/// Smallest `m` with `P[X > m] <= ε` for `X ~ B(M, p)`.
pub fn binom_upper_quantile(spec: &BinomialSpec, eps: FailureProb) -> Result<u64> {
    let eps = eps.open_unit("quantile failure probability")?;
    let n = spec.trials;
    let p = spec.success_prob;
    if n == 0 || p <= 0.0 {
        return Ok(0);
    }
    if p >= 1.0 {
        return Ok(n);
    }
    // Predicate P[X > m] <= eps is monotone in m and true at m = n.
    let exceeds = |m: u64| survival_inner(m + 1, n, p) > eps;
    if !exceeds(0) {
        return Ok(0);
    }
    let (mut lo, mut hi) = (0u64, n);
    // Bracket around the mean first; most of the mass of work sits there.
    let sigma = (spec.mean() * (1.0 - p)).sqrt();
    let guess = (spec.mean() + 12.0 * sigma + 8.0).ceil();
    if guess < n as f64 {
        let g = guess as u64;
        if !exceeds(g) {
            hi = g;
        } else {
            lo = g;
        }
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if exceeds(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Largest `t` in `0..=upper` with `bound(t) <= budget`, for `bound` non-decreasing in `t`
/// with `bound(0) = 0`.
pub fn largest_threshold(upper: u64, budget: f64, bound: impl Fn(u64) -> f64) -> u64 {
    if bound(upper) <= budget {
        return upper;
    }
    itp_search(0, upper, 0.0, bound(upper), budget, &bound)
}

/// [`largest_threshold`] starting from an estimate `guess` of the answer, accurate to a
/// few multiples of `spread`. Far fewer evaluations when the estimate is good.
pub fn largest_threshold_near(
    upper: u64,
    budget: f64,
    guess: u64,
    spread: u64,
    bound: impl Fn(u64) -> f64,
) -> u64 {
    let v_upper = bound(upper);
    if v_upper <= budget {
        return upper;
    }
    let guess = guess.min(upper);
    let mut step = spread.max(1);
    let v = bound(guess);
    let (lo, v_lo, hi, v_hi) = if v <= budget {
        let (mut lo, mut v_lo) = (guess, v);
        loop {
            let t = lo.saturating_add(step).min(upper);
            let vt = if t == upper { v_upper } else { bound(t) };
            if vt > budget {
                break (lo, v_lo, t, vt);
            }
            (lo, v_lo) = (t, vt);
            step = step.saturating_mul(2);
        }
    } else {
        let (mut hi, mut v_hi) = (guess, v);
        loop {
            let t = hi.saturating_sub(step);
            let vt = if t == 0 { 0.0 } else { bound(t) };
            if vt <= budget {
                break (t, vt, hi, v_hi);
            }
            (hi, v_hi) = (t, vt);
            step = step.saturating_mul(2);
        }
    };
    itp_search(lo, hi, v_lo, v_hi, budget, &bound)
}

/// Binomial tails are close to Gaussian, so `√(-ln bound)` is nearly linear in `t`. The
/// search runs the ITP method (interpolate, truncate, project) on that quantity: never
/// more evaluations than bisection plus one, and far fewer on smooth tails.
fn itp_search(
    lo: u64,
    hi: u64,
    v_lo: f64,
    v_hi: f64,
    budget: f64,
    bound: &impl Fn(u64) -> f64,
) -> u64 {
    let scale = |b: f64| (-b.min(1.0).ln()).sqrt();
    let target = scale(budget);
    // Invariant: bound(lo) <= budget < bound(hi); g is non-increasing in t.
    let (mut lo, mut hi) = (lo, hi);
    let (mut g_lo, mut g_hi) = (scale(v_lo), scale(v_hi));
    let w0 = (hi - lo) as f64;
    let kappa1 = 0.2 / w0;
    // Integer resolution: stop at width 1, i.e. tolerance 1/2.
    let n_max = w0.log2().ceil() as i32 + 1;
    let mut j = 0;
    while hi - lo > 1 {
        let (a, b) = (lo as f64, hi as f64);
        let half = 0.5 * (a + b);
        let x = if g_lo.is_finite() && g_lo > g_hi {
            let x_f = a + (g_lo - target) / (g_lo - g_hi) * (b - a);
            let delta = kappa1 * (b - a) * (b - a);
            let sigma = (half - x_f).signum();
            let x_t = if delta <= (half - x_f).abs() {
                x_f + sigma * delta
            } else {
                half
            };
            let r = (0.5 * 2f64.powi(n_max - j) - 0.5 * (b - a)).max(0.0);
            if (x_t - half).abs() <= r {
                x_t
            } else {
                half - sigma * r
            }
        } else {
            half
        };
        let mid = (x.round().max(0.0) as u64).clamp(lo + 1, hi - 1);
        let v = bound(mid);
        if v <= budget {
            lo = mid;
            g_lo = scale(v);
        } else {
            hi = mid;
            g_hi = scale(v);
        }
        j += 1;
    }
    lo
}

/// Gaussian estimate of the largest `t` with `P[X < t] <= budget` for `X ~ B(M, p)`,
/// with the standard deviation as its spread.
pub fn binomial_threshold_guess(spec: &BinomialSpec, budget: f64) -> (u64, u64) {
    let sd = (spec.mean() * (1.0 - spec.success_prob)).sqrt();
    let z = (2.0 * (1.0 / budget.max(f64::MIN_POSITIVE)).ln()).sqrt();
    let guess = (spec.mean() - z * sd).max(0.0).floor() as u64;
    (guess, sd.ceil() as u64)
}

// ---------------------------------------------------------------------------
// Chernoff bounds (multiplicative form)
// ---------------------------------------------------------------------------

/// `ln[e^{-δ}/(1-δ)^{1-δ}] = -δ - (1-δ) ln(1-δ)` for `0 <= δ <= 1`.
fn lower_exponent(delta: f64) -> f64 {
    if delta < 1e-2 {
        // -Σ_{k>=2} δ^k / (k(k-1))
        let mut acc = 0.0;
        let mut pow = delta * delta;
        for k in 2..40u32 {
            let term = pow / f64::from(k * (k - 1));
            acc += term;
            if term < 1e-18 * acc {
                break;
            }
            pow *= delta;
        }
        -acc
    } else if delta >= 1.0 {
        -1.0
    } else {
        -delta - (1.0 - delta) * (-delta).ln_1p()
    }
}

/// `ln[e^{δ}/(1+δ)^{1+δ}] = δ - (1+δ) ln(1+δ)` for `δ >= 0`.
fn upper_exponent(delta: f64) -> f64 {
    if delta < 1e-2 {
        // Σ_{k>=2} (-1)^{k+1} δ^k / (k(k-1))
        let mut acc = 0.0;
        let mut pow = delta * delta;
        let mut sign = -1.0;
        for k in 2..40u32 {
            let term = pow / f64::from(k * (k - 1));
            acc += sign * term;
            if term < 1e-18 * acc.abs() {
                break;
            }
            pow *= delta;
            sign = -sign;
        }
        acc
    } else {
        delta - (1.0 + delta) * delta.ln_1p()
    }
}

/// Forward lower Chernoff tail `(e^{-δ}/(1-δ)^{1-δ})^E`.
pub fn chernoff_lower_tail(expected: f64, delta: f64) -> f64 {
    (expected * lower_exponent(delta)).exp()
}

/// Forward upper Chernoff tail `(e^{δ}/(1+δ)^{1+δ})^E`.
pub fn chernoff_upper_tail(expected: f64, delta: f64) -> f64 {
    (expected * upper_exponent(delta)).exp()
}

/// Bisection on a decreasing function `f` over `[lo, hi]` with `f(lo) >= 0 >= f(hi)`,
/// run until the bracket stops shrinking in double precision.
fn bisect_decreasing(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn check_nonneg(x: f64, what: &str) -> Result<()> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "{what} must be a finite non-negative number, got {x}"
        )));
    }
    Ok(())
}

const LOWER_DELTA_MAX: f64 = 1.0 - 1e-15;

/// `φ^L(E)`: the value the realised count stays above, except with probability `ξ`,
/// when its expectation is `E`.
pub fn chernoff_lower_from_expected(expected: f64, xi: FailureProb) -> Result<f64> {
    check_nonneg(expected, "expected value")?;
    let ln_xi = xi.open_unit("Chernoff failure probability")?.ln();
    if expected == 0.0 {
        return Ok(0.0);
    }
    if expected * lower_exponent(LOWER_DELTA_MAX) > ln_xi {
        // No δ < 1 reaches ξ: the bound degenerates to zero.
        return Ok(0.0);
    }
    let delta = bisect_decreasing(0.0, LOWER_DELTA_MAX, |d| {
        expected * lower_exponent(d) - ln_xi
    });
    Ok((1.0 - delta) * expected)
}

/// `φ^U(E)`: the value the realised count stays below, except with probability `ξ`.
pub fn chernoff_upper_from_expected(expected: f64, xi: FailureProb) -> Result<f64> {
    check_nonneg(expected, "expected value")?;
    let ln_xi = xi.open_unit("Chernoff failure probability")?.ln();
    if expected == 0.0 {
        return Ok(-2.0 * ln_xi);
    }
    let f = |d: f64| expected * upper_exponent(d) - ln_xi;
    let mut hi = 1.0;
    while f(hi) > 0.0 {
        hi *= 2.0;
    }
    let delta = bisect_decreasing(0.0, hi, f);
    Ok((1.0 + delta) * expected)
}

/// Confidence interval `(E_lo, E_hi)` for the expectation of a count observed as `X`.
///
/// `E_lo` is the expectation whose upper Chernoff point equals `X`, `E_hi` the one
/// whose lower Chernoff point equals `X`, both at failure probability `ξ`.
pub fn chernoff_expected_bounds_from_observed(
    observed: f64,
    xi: FailureProb,
) -> Result<(f64, f64)> {
    check_nonneg(observed, "observed count")?;
    let ln_xi = xi.open_unit("Chernoff failure probability")?.ln();
    if observed == 0.0 {
        return Ok((0.0, -ln_xi));
    }
    // E_lo = X/(1+δ) with E_lo·h(δ) = ln ξ; the left side is decreasing in δ.
    let lo_eq = |d: f64| observed / (1.0 + d) * upper_exponent(d) - ln_xi;
    let mut hi = 1.0;
    while lo_eq(hi) > 0.0 {
        hi *= 2.0;
    }
    let d_lo = bisect_decreasing(0.0, hi, lo_eq);
    let lower = observed / (1.0 + d_lo);

    // E_hi = X/(1-δ) with E_hi·g(δ) = ln ξ; decreasing in δ towards -∞ at δ → 1.
    let hi_eq = |d: f64| observed / (1.0 - d) * lower_exponent(d) - ln_xi;
    let d_hi = bisect_decreasing(0.0, LOWER_DELTA_MAX, hi_eq);
    let upper = observed / (1.0 - d_hi);
    Ok((lower, upper))
}

// ---------------------------------------------------------------------------
// Hypergeometric
// ---------------------------------------------------------------------------

/// Lower bound on the number of targets among `draws` items drawn without replacement
/// from a population of `population` containing `targets` targets:
/// `draws · (K/N − sqrt(−ln ξ_h / draws))`.
///
/// The deviation term is twice Hoeffding's exponent, so the bound holds with failure
/// probability at most `ξ_h²`. Not clamped; callers clamp to zero.
pub fn hypergeom_lower_count(
    targets: f64,
    population: f64,
    draws: f64,
    xi_h: FailureProb,
) -> Result<f64> {
    check_nonneg(targets, "target count")?;
    check_nonneg(population, "population")?;
    if targets > population {
        return Err(Error::InvalidArgument(format!(
            "target count {targets} exceeds population {population}"
        )));
    }
    if !(draws > 0.0) || draws > population {
        return Err(Error::InvalidArgument(format!(
            "draw count {draws} must lie in (0, {population}]"
        )));
    }
    let ln_xi = xi_h.open_unit("hypergeometric failure probability")?.ln();
    Ok(draws * (targets / population - (-ln_xi / draws).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(m: u64, p: f64) -> BinomialSpec {
        BinomialSpec::new(m, p).unwrap()
    }

    fn fp(x: f64) -> FailureProb {
        FailureProb::new(x).unwrap()
    }

    #[test]
    fn tail_below_examples() {
        assert_eq!(binom_tail_below(0, &spec(7, 0.3)).value(), 0.0);
        assert!((binom_tail_below(1, &spec(2, 0.5)).value() - 0.25).abs() < 1e-15);
        assert!((binom_tail_below(2, &spec(2, 0.5)).value() - 0.75).abs() < 1e-15);
        assert_eq!(binom_tail_below(3, &spec(2, 0.5)).value(), 1.0);
    }

    #[test]
    fn tail_degenerate_probabilities() {
        assert_eq!(binom_tail_below(1, &spec(10, 0.0)).value(), 1.0);
        assert_eq!(binom_tail_below(10, &spec(10, 1.0)).value(), 0.0);
        assert_eq!(binom_tail_below(11, &spec(10, 1.0)).value(), 1.0);
        assert_eq!(binom_tail_at_least(1, &spec(10, 0.0)).value(), 0.0);
    }

    #[test]
    fn pmf_matches_direct_product() {
        // C(20, 7) 0.3^7 0.7^13
        let direct = 77520.0 * 0.3f64.powi(7) * 0.7f64.powi(13);
        let got = ln_binom_pmf(7, 20, 0.3, 0.7).exp();
        assert!((got - direct).abs() < 1e-15 * direct.max(1e-300) * 10.0);
    }

    #[test]
    fn continued_fraction_matches_series() {
        let cases = [
            (1_000u64, 0.3, 3.0),
            (100_000, 0.25, 6.0),
            (10_000_000, 0.01, 9.0),
            (50, 0.5, 2.0),
            (1_000_000, 0.3, 0.3),
        ];
        for (n, p, z) in cases {
            let q = 1.0 - p;
            let mean = n as f64 * p;
            let sd = (mean * q).sqrt();
            let k = (mean - z * sd).floor() as u64;
            let (cf, series) = (ratio_down(k, n, p, q), series_down(k, n, p, q));
            assert!(
                (cf / series - 1.0).abs() < 1e-13,
                "down {n} {p}: {cf} vs {series}"
            );
            let k = (mean + z * sd).ceil() as u64;
            let (cf, series) = (ratio_up(k, n, p, q), series_up(k, n, p, q));
            assert!(
                (cf / series - 1.0).abs() < 1e-13,
                "up {n} {p}: {cf} vs {series}"
            );
        }
    }

    #[test]
    fn complementary_tails_sum_to_one() {
        let s = spec(1_000, 0.37);
        for x in [0u64, 200, 370, 371, 500, 1000, 1001] {
            let total = binom_tail_below(x, &s).value() + binom_tail_at_least(x, &s).value();
            assert!((total - 1.0).abs() < 1e-13, "x={x} total={total}");
        }
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(binom_upper_quantile(&spec(0, 0.3), fp(1e-9)).unwrap(), 0);
        assert_eq!(binom_upper_quantile(&spec(10, 0.0), fp(1e-9)).unwrap(), 0);
        let s = spec(100, 0.5);
        let m = binom_upper_quantile(&s, fp(0.5)).unwrap();
        assert!(binom_tail_at_least(m + 1, &s).value() <= 0.5);
        assert!(binom_tail_at_least(m, &s).value() > 0.5);
    }

    #[test]
    fn quantile_rejects_degenerate_eps() {
        assert!(binom_upper_quantile(&spec(10, 0.5), FailureProb::ZERO).is_err());
        assert!(binom_upper_quantile(&spec(10, 0.5), FailureProb::ONE).is_err());
    }

    #[test]
    fn largest_threshold_brackets() {
        let s = spec(500_000, 0.25);
        let t = largest_threshold(500_000, 1e-20, |x| 2.0 * binom_tail_below(x, &s).value());
        assert!(2.0 * binom_tail_below(t, &s).value() <= 1e-20);
        assert!(2.0 * binom_tail_below(t + 1, &s).value() > 1e-20);
    }

    #[test]
    fn chernoff_lower_examples() {
        assert_eq!(chernoff_lower_from_expected(0.0, fp(1e-5)).unwrap(), 0.0);
        let v = chernoff_lower_from_expected(1e6, fp(1.0 - 1e-15)).unwrap();
        assert!((v - 1e6).abs() < 1.0);
        let e = 1e6;
        let v = chernoff_lower_from_expected(e, fp(1e-20)).unwrap();
        let delta = 1.0 - v / e;
        let back = chernoff_lower_tail(e, delta);
        assert!((back / 1e-20 - 1.0).abs() < 1e-8, "back={back}");
        assert!(chernoff_lower_from_expected(-1.0, fp(0.5)).is_err());
    }

    #[test]
    fn chernoff_lower_degenerates_to_zero_for_tiny_expectation() {
        // ln(1e20) ≈ 46 > E, so no δ < 1 suffices.
        assert_eq!(chernoff_lower_from_expected(10.0, fp(1e-20)).unwrap(), 0.0);
    }

    #[test]
    fn chernoff_upper_examples() {
        let z = chernoff_upper_from_expected(0.0, fp(1e-20)).unwrap();
        assert!((z - 2.0 * 1e20f64.ln()).abs() < 1e-12);
        let v = chernoff_upper_from_expected(1e6, fp(1.0 - 1e-15)).unwrap();
        assert!((v - 1e6).abs() < 1.0);
        let v = chernoff_upper_from_expected(100.0, fp(1e-10)).unwrap();
        let back = chernoff_upper_tail(100.0, v / 100.0 - 1.0);
        assert!((back - 1e-10).abs() < 1e-20, "back={back}");
    }

    #[test]
    fn observed_bounds_round_trip() {
        let x = 1e6;
        let (lo, hi) = chernoff_expected_bounds_from_observed(x, fp(1e-20)).unwrap();
        assert!(lo < x && x < hi);
        let up = chernoff_upper_tail(lo, x / lo - 1.0);
        let down = chernoff_lower_tail(hi, 1.0 - x / hi);
        assert!((up / 1e-20 - 1.0).abs() < 1e-8);
        assert!((down / 1e-20 - 1.0).abs() < 1e-8);

        let (lo, hi) = chernoff_expected_bounds_from_observed(0.0, fp(0.1)).unwrap();
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0);

        let (lo, hi) = chernoff_expected_bounds_from_observed(5e5, fp(1.0 - 1e-15)).unwrap();
        assert!((lo - 5e5).abs() < 1.0 && (hi - 5e5).abs() < 1.0);
    }

    #[test]
    fn hypergeom_examples() {
        let v = hypergeom_lower_count(50_000.0, 100_000.0, 100_000.0, fp(1e-20)).unwrap();
        assert!((v - 47854.0).abs() < 0.5, "v={v}");
        let v = hypergeom_lower_count(3.0, 10.0, 6.0, fp(1.0 - 1e-16)).unwrap();
        assert!((v - 1.8).abs() < 1e-6);
        assert!(hypergeom_lower_count(0.0, 10.0, 5.0, fp(0.1)).unwrap() < 0.0);
        assert!(hypergeom_lower_count(11.0, 10.0, 5.0, fp(0.1)).is_err());
        assert!(hypergeom_lower_count(1.0, 10.0, 11.0, fp(0.1)).is_err());
    }

    #[test]
    fn failure_prob_validation() {
        assert!(FailureProb::new(1.5).is_err());
        assert!(FailureProb::new(-0.1).is_err());
        assert_eq!(FailureProb::clamped(3.0).value(), 1.0);
        assert_eq!(FailureProb::clamped(f64::NAN).value(), 1.0);
    }
}
