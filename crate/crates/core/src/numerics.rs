//! Numerical kernel: bracketed root finding, the handful of special functions
//! the model needs, and central finite differences.
//!
//! Everything here is a pure function of its arguments.

use crate::error::{domain, Error, Result};

/// Interval `[lo, hi]` on which a root is sought.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(domain(format!("invalid bracket [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

fn eval_finite<F: Fn(f64) -> f64>(f: &F, x: f64) -> Result<f64> {
    let y = f(x);
    if y.is_finite() {
        Ok(y)
    } else {
        Err(Error::NonFinite { x })
    }
}

/// Bisection on a sign-changing bracket.
///
/// Terminates once the bracket is narrower than `tol` (or a point with
/// `f == 0` is hit) and returns the midpoint, so the result is within `tol`
/// of a root of `f` and depends only on the inputs.
pub fn find_root<F: Fn(f64) -> f64>(f: F, b: Bracket, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(domain(format!("tolerance must be positive, got {tol}")));
    }
    let (mut lo, mut hi) = (b.lo, b.hi);
    let mut f_lo = eval_finite(&f, lo)?;
    let f_hi = eval_finite(&f, hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoSignChange { lo, hi, f_lo, f_hi });
    }
    // 2000 halvings exhaust the f64 exponent range many times over.
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let f_mid = eval_finite(&f, mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

const COTH_SERIES_CROSSOVER: f64 = 1e-3;

/// Hyperbolic cotangent.
///
/// Below `|x| = 1e-3` the Laurent series `1/x + x/3 - x^3/45` is used.
pub fn coth(x: f64) -> Result<f64> {
    if x == 0.0 {
        return Err(domain("coth is singular at 0"));
    }
    if x.is_nan() {
        return Err(Error::NonFinite { x });
    }
    if x.abs() < COTH_SERIES_CROSSOVER {
        let x2 = x * x;
        return Ok(1.0 / x + x * (1.0 / 3.0 - x2 / 45.0));
    }
    Ok(1.0 / x.tanh())
}

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the Gamma function for `x > 0` (Lanczos, g = 7).
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain(format!("log_gamma requires finite x > 0, got {x}")));
    }
    if x == 1.0 || x == 2.0 {
        return Ok(0.0);
    }
    if x < 0.5 {
        // reflection: Γ(x)Γ(1-x) = π / sin(πx)
        let s = (std::f64::consts::PI * x).sin();
        return Ok((std::f64::consts::PI / s).ln() - log_gamma(1.0 - x)?);
    }
    let z = x - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    Ok(0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + acc.ln())
}

/// Same as [`log_gamma`] for arguments known to be valid (internal use).
pub(crate) fn ln_gamma_unchecked(x: f64) -> f64 {
    log_gamma(x).expect("log_gamma called with non-positive argument")
}

const RESCALE_THRESHOLD: f64 = 1e150;

/// Three-term recurrence for `L_n^{(k)}(x)` with `k >= 0`, rescaled on the
/// fly. Returns `(mantissa, ln_scale)` with value `mantissa * exp(ln_scale)`.
fn laguerre_recurrence(n: usize, k: f64, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut prev = 1.0;
    let mut cur = 1.0 + k - x;
    let mut ln_scale = 0.0;
    for j in 1..n {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + k - x) * cur - (jf + k) * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE_THRESHOLD {
            prev /= RESCALE_THRESHOLD;
            cur /= RESCALE_THRESHOLD;
            ln_scale += RESCALE_THRESHOLD.ln();
        }
    }
    (cur, ln_scale)
}

/// Defining series `Σ_i (-1)^i C(n+k, n-i) x^i / i!`, used when the upper
/// index is below `-n`.
fn laguerre_series(n: usize, k: i64, x: f64) -> f64 {
    let mut sum = 0.0;
    let mut x_pow_over_fact = 1.0;
    for i in 0..=n {
        if i > 0 {
            x_pow_over_fact *= x / i as f64;
        }
        // C(n+k, n-i) = Π_{l=1}^{n-i} (k + i + l) / l
        let mut binom = 1.0;
        for l in 1..=(n - i) {
            binom *= (k + i as i64 + l as i64) as f64 / l as f64;
        }
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * binom * x_pow_over_fact;
    }
    sum
}

/// Sign and log-magnitude of the generalized Laguerre polynomial
/// `L_n^{(k)}(x)` for integer `k` of either sign.
///
/// Returns `(0.0, -inf)` for an exact zero.
pub fn ln_laguerre_assoc(n: usize, k: i64, x: f64) -> (f64, f64) {
    let signed_log = |v: f64, ln_scale: f64| {
        if v == 0.0 {
            (0.0, f64::NEG_INFINITY)
        } else {
            (v.signum(), v.abs().ln() + ln_scale)
        }
    };
    if k >= 0 {
        let (v, s) = laguerre_recurrence(n, k as f64, x);
        return signed_log(v, s);
    }
    let j = (-k) as usize;
    if j <= n {
        // L_n^{(-j)}(x) = (-x)^j (n-j)!/n! L_{n-j}^{(j)}(x)
        if x == 0.0 {
            return (0.0, f64::NEG_INFINITY);
        }
        let (inner_sign, inner_ln) = {
            let (v, s) = laguerre_recurrence(n - j, j as f64, x);
            signed_log(v, s)
        };
        if inner_sign == 0.0 {
            return (0.0, f64::NEG_INFINITY);
        }
        let pow_sign = if j.is_multiple_of(2) { 1.0 } else { -x.signum() };
        let ln_abs = j as f64 * x.abs().ln() + ln_gamma_unchecked((n - j + 1) as f64)
            - ln_gamma_unchecked((n + 1) as f64)
            + inner_ln;
        return (pow_sign * inner_sign, ln_abs);
    }
    signed_log(laguerre_series(n, k, x), 0.0)
}

/// Generalized (associated) Laguerre polynomial `L_n^{(k)}(x)` for any integer `k`.
pub fn laguerre_assoc(n: usize, k: i64, x: f64) -> f64 {
    let (sign, ln_abs) = ln_laguerre_assoc(n, k, x);
    if sign == 0.0 {
        0.0
    } else {
        sign * ln_abs.exp()
    }
}

/// Central-difference stencil order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffOrder {
    Second,
    Fourth,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffConfig {
    pub step: f64,
    pub order: DiffOrder,
}

impl DiffConfig {
    pub fn new(step: f64, order: DiffOrder) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(domain(format!("difference step must be positive, got {step}")));
        }
        Ok(Self { step, order })
    }

    /// Fourth order with `step = max(1e-5, 1e-4 |x|)`.
    pub fn default_at(x: f64) -> Self {
        Self {
            step: (1e-4 * x.abs()).max(1e-5),
            order: DiffOrder::Fourth,
        }
    }

    /// Offsets (in units of `step`) and weights; the derivative estimate is
    /// `Σ w_i f(x + o_i h) / h`.
    pub fn stencil(&self) -> &'static [(f64, f64)] {
        match self.order {
            DiffOrder::Second => &[(-1.0, -0.5), (1.0, 0.5)],
            DiffOrder::Fourth => &[
                (-2.0, 1.0 / 12.0),
                (-1.0, -8.0 / 12.0),
                (1.0, 8.0 / 12.0),
                (2.0, -1.0 / 12.0),
            ],
        }
    }

    /// Half-width of the stencil.
    pub fn reach(&self) -> f64 {
        match self.order {
            DiffOrder::Second => self.step,
            DiffOrder::Fourth => 2.0 * self.step,
        }
    }
}

pub fn central_diff<F: Fn(f64) -> f64>(f: F, x: f64, cfg: DiffConfig) -> Result<f64> {
    let mut acc = 0.0;
    for &(offset, weight) in cfg.stencil() {
        let xi = x + offset * cfg.step;
        acc += weight * eval_finite(&f, xi)?;
    }
    Ok(acc / cfg.step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bisect_oracle(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        let s_lo = f(lo).signum();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid).signum() == s_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn linear_root() {
        let x = find_root(|x| x - 1.0, Bracket::new(0.0, 2.0).unwrap(), 1e-12).unwrap();
        assert!((x - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn disordered_equation_root() {
        let f = |x: f64| x - 0.5 * coth(x / 2.0).unwrap();
        let reference = bisect_oracle(f, 0.1, 5.0);
        let x = find_root(f, Bracket::new(0.1, 5.0).unwrap(), 1e-12).unwrap();
        assert!(x > 1.0 && x < 1.3, "{x}");
        assert!((x - reference).abs() <= 1e-12);
    }

    #[test]
    fn coth_root_is_half_ln3() {
        let x = find_root(|x| coth(x).unwrap() - 2.0, Bracket::new(0.1, 2.0).unwrap(), 1e-13)
            .unwrap();
        assert!((x - 0.5 * 3f64.ln()).abs() < 1e-12);
        assert!((x - 0.549_306).abs() < 1e-6);
    }

    #[test]
    fn root_errors() {
        let b = Bracket::new(2.0, 3.0).unwrap();
        assert!(matches!(find_root(|x| x - 1.0, b, 1e-9), Err(Error::NoSignChange { .. })));
        let b = Bracket::new(-1.0, 1.0).unwrap();
        assert!(matches!(
            find_root(|x| if x > 0.5 { f64::NAN } else { x }, b, 1e-9),
            Err(Error::NonFinite { .. })
        ));
        assert!(Bracket::new(1.0, 1.0).is_err());
    }

    #[test]
    fn root_is_stable_under_bracket_refinement() {
        let f = |x: f64| x.powi(3) - 2.0;
        let tol = 1e-10;
        let x = find_root(f, Bracket::new(0.0, 3.0).unwrap(), tol).unwrap();
        let again =
            find_root(f, Bracket::new(x - tol / 2.0, x + tol / 2.0).unwrap(), tol).unwrap();
        assert!((x - again).abs() <= tol);
    }

    #[test]
    fn coth_limits() {
        assert!((coth(20.0).unwrap() - 1.0).abs() <= 1e-15);
        let v = coth(1e-4).unwrap();
        let expected = 1e4 + 1e-4 / 3.0;
        assert!(((v - expected) / expected).abs() <= 1e-12);
        for x in [0.3, 1.0, 7.0] {
            assert_eq!(coth(-x).unwrap(), -coth(x).unwrap());
        }
        assert!(coth(0.0).is_err());
    }

    #[test]
    fn coth_matches_reciprocal_tanh() {
        let mut x: f64 = 1e-3;
        while x <= 30.0 {
            let direct = 1.0 / x.tanh();
            let ulp = f64::EPSILON * direct.abs();
            assert!((coth(x).unwrap() - direct).abs() <= 5.0 * ulp, "x = {x}");
            x *= 1.1;
        }
    }

    #[test]
    fn log_gamma_values() {
        assert_eq!(log_gamma(1.0).unwrap(), 0.0);
        let half = log_gamma(0.5).unwrap();
        assert!((half - 0.5 * std::f64::consts::PI.ln()).abs() < 1e-14);
        assert!((half - 0.572_364_942_9).abs() < 1e-10);
        assert!((log_gamma(6.0).unwrap() - 120f64.ln()).abs() < 1e-13);
        assert!((log_gamma(6.0).unwrap() - 4.787_491_742_8).abs() < 1e-10);
        assert!(log_gamma(0.0).is_err());
        assert!(log_gamma(-1.5).is_err());
    }

    #[test]
    fn log_gamma_relative_accuracy_on_integers_and_half_integers() {
        // ln (n-1)! by direct summation
        let mut ln_fact = 0.0;
        for n in 3..200u32 {
            ln_fact += ((n - 1) as f64).ln();
            let rel = (log_gamma(n as f64).unwrap() - ln_fact).abs() / ln_fact;
            assert!(rel <= 1e-12, "n = {n}: {rel}");
        }
        // Γ(n + 1/2) = (2n)! √π / (4^n n!)
        let mut ln_val = 0.5 * std::f64::consts::PI.ln();
        for n in 1..150u32 {
            ln_val += (n as f64 - 0.5).ln();
            let x = n as f64 + 0.5;
            let rel = (log_gamma(x).unwrap() - ln_val).abs() / ln_val.abs();
            assert!(rel <= 1e-12, "x = {x}: {rel}");
        }
        // Stirling with three correction terms at large argument
        let x = 1e6;
        let stirling = (x - 0.5) * f64::ln(x) - x + 0.5 * (2.0 * std::f64::consts::PI).ln()
            + 1.0 / (12.0 * x)
            - 1.0 / (360.0 * x * x * x);
        assert!(((log_gamma(x).unwrap() - stirling) / stirling).abs() <= 1e-12);
    }

    /// Explicit finite series, independent of the recurrence and the
    /// negative-index identity.
    fn laguerre_series_oracle(n: i64, k: i64, x: f64) -> f64 {
        let mut sum = 0.0;
        for i in 0..=n {
            let mut binom = 1.0;
            for l in 1..=(n - i) {
                binom *= (k + i + l) as f64 / l as f64;
            }
            let mut term = binom;
            for q in 1..=i {
                term *= x / q as f64;
            }
            sum += if i % 2 == 0 { term } else { -term };
        }
        sum
    }

    #[test]
    fn laguerre_examples() {
        for k in [-5, 0, 3] {
            for x in [0.0, 0.7, 4.0] {
                assert_eq!(laguerre_assoc(0, k, x), 1.0);
            }
        }
        assert!((laguerre_assoc(1, 2, 0.5) - 2.5).abs() < 1e-15);
        for x in [0.1, 1.0, 3.0] {
            let v = laguerre_assoc(2, -1, x);
            let o = laguerre_series_oracle(2, -1, x);
            assert!((v - o).abs() <= 1e-12, "x = {x}: {v} vs {o}");
        }
    }

    #[test]
    fn laguerre_matches_series_on_grid() {
        for n in 0..=10i64 {
            for k in -10..=10i64 {
                for x in [0.1, 1.0, 5.0] {
                    let v = laguerre_assoc(n as usize, k, x);
                    let o = laguerre_series_oracle(n, k, x);
                    let scale = o.abs().max(1e-300);
                    // exact zeros of the series (e.g. L_n^{(-j)} with j > n
                    // vanishing identically) are compared absolutely
                    let err = if o == 0.0 { v.abs() } else { (v - o).abs() / scale };
                    assert!(err <= 1e-10, "n={n} k={k} x={x}: {v} vs {o}");
                }
            }
        }
    }

    #[test]
    fn laguerre_large_degree_stays_finite() {
        let (sign, ln_abs) = ln_laguerre_assoc(600, 600, 0.3);
        assert!(sign != 0.0 && ln_abs.is_finite() && ln_abs > 300.0);
    }

    #[test]
    fn central_diff_examples() {
        let cfg = DiffConfig::new(1e-4, DiffOrder::Fourth).unwrap();
        assert!((central_diff(|x| x * x, 3.0, cfg).unwrap() - 6.0).abs() < 1e-7);
        assert!((central_diff(f64::sin, 0.0, cfg).unwrap() - 1.0).abs() < 1e-8);
        let cfg = DiffConfig::new(1e-5, DiffOrder::Fourth).unwrap();
        assert!((central_diff(f64::sqrt, 1.0, cfg).unwrap() - 0.5).abs() < 1e-9);
        let cfg2 = DiffConfig::new(1e-4, DiffOrder::Second).unwrap();
        assert!((central_diff(|x| x * x, 3.0, cfg2).unwrap() - 6.0).abs() < 1e-7);
        assert!(central_diff(|_| f64::INFINITY, 0.0, cfg).is_err());
        assert!(DiffConfig::new(0.0, DiffOrder::Second).is_err());
    }

    #[test]
    fn default_diff_config() {
        let c = DiffConfig::default_at(0.01);
        assert_eq!(c.step, 1e-5);
        assert_eq!(c.order, DiffOrder::Fourth);
        let c = DiffConfig::default_at(3.0);
        assert!((c.step - 3e-4).abs() < 1e-18);
    }

    #[test]
    fn fourth_order_error_scales_as_step_to_the_fourth() {
        let f = |x: f64| x.exp() * x.sin();
        let exact = |x: f64| x.exp() * (x.sin() + x.cos());
        let x0 = 0.7;
        let err = |h: f64| {
            let cfg = DiffConfig::new(h, DiffOrder::Fourth).unwrap();
            (central_diff(f, x0, cfg).unwrap() - exact(x0)).abs()
        };
        let ratio = err(1e-1) / err(1e-2);
        // one decade of step: ~1e4 reduction
        assert!(ratio > 5e3 && ratio < 2e4, "ratio = {ratio}");
    }

    proptest! {
        #[test]
        fn log_gamma_recurrence(x in 0.5f64..50.0) {
            let ratio = (log_gamma(x + 1.0).unwrap() - log_gamma(x).unwrap()).exp();
            prop_assert!(((ratio - x) / x).abs() <= 1e-10);
        }

        #[test]
        fn coth_is_odd(x in 1e-6f64..40.0) {
            prop_assert_eq!(coth(-x).unwrap(), -coth(x).unwrap());
        }
    }
}
