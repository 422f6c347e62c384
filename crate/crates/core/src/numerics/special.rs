//! Normal, chi and truncated-normal distribution functions.
//!
//! Everything is built on the complementary error function from `libm`, with
//! log-space upper tails so that far-tail quantities (large truncation points,
//! tiny p-values) stay accurate. Quantiles are found by bracketed root-finding
//! on the log-cdf of whichever tail is smaller.

use crate::error::{Error, Result};
use std::f64::consts::{FRAC_1_SQRT_2, LN_2, PI};

const LN_HALF: f64 = -LN_2;
// Above this point `erfc` is replaced by its asymptotic expansion.
const ASYMPTOTIC_CUTOFF: f64 = 35.0;

pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// `1 − Φ(x)` without cancellation.
pub fn std_normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// `ln(1 − Φ(x))`, finite for every finite `x`.
pub fn std_normal_log_sf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < -1.0 {
        return (-std_normal_cdf(x)).ln_1p();
    }
    if x < ASYMPTOTIC_CUTOFF {
        return std_normal_sf(x).ln();
    }
    if x == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    // Φ̄(x) = φ(x)/x · (1 − 1/x² + 3/x⁴ − 15/x⁶ + …)
    let r = 1.0 / (x * x);
    let mut term = 1.0;
    let mut series = 1.0;
    for k in 1..=6 {
        term *= -((2 * k - 1) as f64) * r;
        series += term;
    }
    -0.5 * x * x - x.ln() - 0.5 * (2.0 * PI).ln() + series.ln()
}

pub fn std_normal_quantile(p: f64) -> Result<f64> {
    check_probability(p)?;
    if p == 0.5 {
        return Ok(0.0);
    }
    if p < 0.5 {
        Ok(-normal_isf_ln(p.ln()))
    } else {
        Ok(normal_isf_ln((-p).ln_1p()))
    }
}

/// Inverse survival function: the `x` with `1 − Φ(x) = q`.
pub fn std_normal_isf(q: f64) -> Result<f64> {
    check_probability(q)?;
    Ok(normal_isf_ln(q.ln()))
}

/// Solves `ln Φ̄(x) = ln_q`. Accepts any `ln_q ≤ 0`, including values far
/// below the smallest representable probability.
pub(crate) fn normal_isf_ln(ln_q: f64) -> f64 {
    if ln_q.is_nan() {
        return f64::NAN;
    }
    if ln_q == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    if ln_q >= 0.0 {
        return f64::NEG_INFINITY;
    }
    if ln_q == LN_HALF {
        return 0.0;
    }
    if ln_q > LN_HALF {
        // Φ̄(x) = q  ⇔  Φ̄(−x) = 1 − q
        return -normal_isf_ln((-ln_q.exp_m1()).ln());
    }
    let mut hi = 1.0;
    while std_normal_log_sf(hi) > ln_q {
        hi *= 2.0;
    }
    solve_increasing(|x| ln_q - std_normal_log_sf(x), 0.0, hi)
}

/// Regularized lower incomplete gamma `P(l/2, x²/2)`; 0 for `x ≤ 0`.
pub fn chi_cdf(l: u32, x: f64) -> f64 {
    assert!(l >= 1, "chi distribution needs l >= 1");
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= 0.0 {
        return 0.0;
    }
    let y = 0.5 * x * x;
    match l {
        1 => libm::erf(x * FRAC_1_SQRT_2),
        2 => -(-y).exp_m1(),
        _ => {
            if y < 0.5 * l as f64 + 1.0 {
                chi_ln_cdf_series(l, y).exp()
            } else {
                -chi_ln_sf_closed(l, x).exp_m1()
            }
        }
    }
}

/// `1 − chi_cdf(l, x)` without cancellation.
pub fn chi_sf(l: u32, x: f64) -> f64 {
    assert!(l >= 1, "chi distribution needs l >= 1");
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= 0.0 {
        return 1.0;
    }
    let y = 0.5 * x * x;
    match l {
        1 => libm::erfc(x * FRAC_1_SQRT_2),
        2 => (-y).exp(),
        _ => {
            if y < 0.5 * l as f64 + 1.0 {
                -chi_ln_cdf_series(l, y).exp_m1()
            } else {
                chi_ln_sf_closed(l, x).exp()
            }
        }
    }
}

pub fn chi_quantile(l: u32, p: f64) -> Result<f64> {
    if l == 0 {
        return Err(Error::domain("chi distribution needs l >= 1"));
    }
    check_probability(p)?;
    if l == 1 {
        // χ₁ = |N(0,1)|
        return Ok(normal_isf_ln((-p).ln_1p() + LN_HALF));
    }
    let mut hi = (l as f64).sqrt() + 1.0;
    if p <= 0.5 {
        let target = p.ln();
        while chi_ln_cdf(l, hi) < target {
            hi *= 2.0;
        }
        Ok(solve_increasing(|x| chi_ln_cdf(l, x) - target, 0.0, hi))
    } else {
        let target = (-p).ln_1p();
        while chi_ln_sf(l, hi) > target {
            hi *= 2.0;
        }
        Ok(solve_increasing(|x| target - chi_ln_sf(l, x), 0.0, hi))
    }
}

fn chi_ln_cdf(l: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let y = 0.5 * x * x;
    if y < 0.5 * l as f64 + 1.0 {
        chi_ln_cdf_series(l, y)
    } else {
        (-chi_ln_sf_closed(l, x).exp()).ln_1p()
    }
}

fn chi_ln_sf(l: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let y = 0.5 * x * x;
    if y < 0.5 * l as f64 + 1.0 {
        (-chi_ln_cdf_series(l, y).exp()).ln_1p()
    } else {
        chi_ln_sf_closed(l, x)
    }
}

/// `ln P(a, y)` with `a = l/2` from the power series, valid for `y < a + 1`.
fn chi_ln_cdf_series(l: u32, y: f64) -> f64 {
    let a = 0.5 * l as f64;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= y / (a + k);
        sum += term;
        if term < f64::EPSILON * sum {
            break;
        }
        k += 1.0;
    }
    a * y.ln() - y - ln_gamma_half(l + 2) + sum.ln()
}

/// `ln Q(l/2, x²/2)` from the finite-sum closed forms, valid for `y ≥ a + 1`.
///
/// Even `l = 2m`:    `Q = e^{−y} Σ_{j<m} y^j / j!`.
/// Odd `l = 2m + 1`: `Q = erfc(√y) + e^{−y} Σ_{j<m} y^{j+1/2} / Γ(j + 3/2)`.
/// The sums are accumulated from their largest (last) term downwards so that
/// neither `e^{−y}` nor the powers of `y` need to be representable.
fn chi_ln_sf_closed(l: u32, x: f64) -> f64 {
    let y = 0.5 * x * x;
    let ln_y = y.ln();
    if l % 2 == 0 {
        let m = l / 2;
        let ln_top = (m - 1) as f64 * ln_y - ln_gamma_half(2 * m);
        let mut ratio = 1.0;
        let mut rel = 0.0;
        for j in (1..m).rev() {
            ratio *= j as f64 / y;
            rel += ratio;
        }
        -y + ln_top + (1.0 + rel).ln()
    } else {
        let m = (l - 1) / 2;
        let ln_erfc = LN_2 + std_normal_log_sf(x);
        if m == 0 {
            return ln_erfc;
        }
        let ln_top = (m as f64 - 0.5) * ln_y - ln_gamma_half(2 * m + 1);
        let mut ratio = 1.0;
        let mut rel = 0.0;
        for j in (1..m).rev() {
            ratio *= (j as f64 + 0.5) / y;
            rel += ratio;
        }
        let tail = (ln_erfc + y - ln_top).exp();
        -y + ln_top + (1.0 + rel + tail).ln()
    }
}

/// `ln Γ(k/2)` by exact recursion from `Γ(1) = 1` or `Γ(1/2) = √π`.
fn ln_gamma_half(k: u32) -> f64 {
    assert!(k >= 1);
    let (mut a, mut v) = if k % 2 == 0 {
        (1.0, 0.0)
    } else {
        (0.5, 0.5 * PI.ln())
    };
    let target = 0.5 * k as f64;
    while a < target {
        v += a.ln();
        a += 1.0;
    }
    v
}

/// `F^a(x) = (Φ(x) − Φ(a)) / (1 − Φ(a))` for `x ≥ a`.
pub fn truncated_normal_cdf(x: f64, a: f64) -> Result<f64> {
    check_truncation(x, a)?;
    if a == f64::NEG_INFINITY {
        return Ok(std_normal_cdf(x));
    }
    if x == a {
        return Ok(0.0);
    }
    if x > 0.0 {
        Ok(-(std_normal_log_sf(x) - std_normal_log_sf(a)).exp_m1())
    } else {
        Ok((std_normal_cdf(x) - std_normal_cdf(a)) / std_normal_sf(a))
    }
}

/// `1 − F^a(x)`, accurate deep in the upper tail.
pub fn truncated_normal_sf(x: f64, a: f64) -> Result<f64> {
    check_truncation(x, a)?;
    if a == f64::NEG_INFINITY {
        return Ok(std_normal_sf(x));
    }
    if x == a {
        return Ok(1.0);
    }
    Ok((std_normal_log_sf(x) - std_normal_log_sf(a)).exp().min(1.0))
}

fn check_truncation(x: f64, a: f64) -> Result<()> {
    if x.is_nan() || a.is_nan() || a == f64::INFINITY {
        return Err(Error::domain(format!(
            "truncated normal needs finite or -inf truncation point, got x={x}, a={a}"
        )));
    }
    if x < a {
        return Err(Error::domain(format!(
            "truncated normal evaluated below its truncation point ({x} < {a})"
        )));
    }
    Ok(())
}

fn check_probability(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("probability must lie in (0, 1), got {p}")))
    }
}

/// Root of an increasing function on `[lo, hi]` with `f(lo) < 0 < f(hi)`.
/// Illinois false position, falling back to bisection when an endpoint value
/// is infinite or the interpolant leaves the bracket.
fn solve_increasing(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    let mut fhi = f(hi);
    if flo >= 0.0 {
        return lo;
    }
    if fhi <= 0.0 {
        return hi;
    }
    let mut side = 0i8;
    for _ in 0..2000 {
        if hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()) + 1e-300 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let x = if flo.is_finite() && fhi.is_finite() {
            let x = (lo * fhi - hi * flo) / (fhi - flo);
            if x > lo && x < hi {
                x
            } else {
                mid
            }
        } else {
            mid
        };
        let fx = f(x);
        if fx == 0.0 {
            return x;
        }
        if fx < 0.0 {
            lo = x;
            flo = fx;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
    }
    if flo.abs() < fhi.abs() {
        lo
    } else {
        hi
    }
}
