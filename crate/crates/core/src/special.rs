//! Special functions and series helpers.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::Result;
use crate::quadrature::{integrate_line, QuadConfig};

pub use statrs::function::gamma::{gamma, gamma_lr, ln_gamma};

/// Euler–Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

pub fn binomial_big(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc *= BigInt::from(n - i);
        acc /= BigInt::from(i + 1);
    }
    acc
}

const BERNOULLI_COUNT: usize = 72;

/// Bernoulli numbers `B_j^+` (the convention with `B_1 = +1/2`) as `f64`.
fn bernoulli_plus() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut b: Vec<BigRational> = Vec::with_capacity(BERNOULLI_COUNT);
        b.push(BigRational::one());
        for n in 1..BERNOULLI_COUNT as u32 {
            let mut acc = BigRational::zero();
            for (k, bk) in b.iter().enumerate() {
                acc += BigRational::from_integer(binomial_big(n + 1, k as u32)) * bk;
            }
            b.push(-acc / BigRational::from_integer(BigInt::from(n + 1)));
        }
        b[1] = -b[1].clone();
        b.iter().map(|r| r.to_f64().unwrap_or(f64::NAN)).collect()
    })
}

/// `S_p(n) / n^(p+1)` where `S_p(n) = 1^p + 2^p + ... + n^p`.
///
/// Small `n` are summed directly; larger `n` use Faulhaber's formula in
/// powers of `1/n`, which converges quickly once `n` exceeds `p`.
pub fn normalized_power_sum(p: u32, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    if n <= 64 || p as usize + 2 >= BERNOULLI_COUNT {
        return (1..=n).map(|k| (k as f64 / nf).powi(p as i32)).sum::<f64>() / nf;
    }
    let bern = bernoulli_plus();
    let mut sum = 0.0;
    let mut inv_pow = 1.0;
    for (j, b) in bern.iter().enumerate().take(p as usize + 1) {
        let term = binomial(p + 1, j as u32) * b * inv_pow;
        sum += term;
        if j > 2 && term.abs() < 1e-18 * sum.abs() && *b != 0.0 {
            break;
        }
        inv_pow /= nf;
    }
    sum / f64::from(p + 1)
}

/// Taylor coefficients of `((1 - e^{-w}) / w)^power` about `w = 0`.
pub fn phi_power_series(power: u32, terms: usize) -> Vec<f64> {
    let mut base = Vec::with_capacity(terms);
    let mut fact = 1.0;
    for i in 0..terms {
        fact *= (i + 1) as f64;
        base.push(if i % 2 == 0 { 1.0 } else { -1.0 } / fact);
    }
    let mut out = vec![0.0; terms];
    out[0] = 1.0;
    for _ in 0..power {
        let mut next = vec![0.0; terms];
        for (i, &a) in out.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in base.iter().enumerate().take(terms - i) {
                next[i + j] += a * b;
            }
        }
        out = next;
    }
    out
}

/// Evaluates a power series with coefficients `c` at `x` (Horner).
pub fn eval_series(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

/// `(1 - e^{-x}) / x`, equal to 1 at the origin.
pub fn phi(x: f64) -> f64 {
    if x.abs() < 1e-300 {
        1.0
    } else {
        -(-x).exp_m1() / x
    }
}

/// Spectral density of `E_α(-x^α)` as a mixture of exponentials `e^{-r x}`,
/// valid for `0 < α < 1`.
fn ml_spectral(alpha: f64, r: f64) -> f64 {
    let ra = r.powf(alpha);
    let (s, c) = (alpha * PI).sin_cos();
    s / PI * ra / r / (ra * ra + 2.0 * ra * c + 1.0)
}

fn ml_quad() -> QuadConfig {
    QuadConfig {
        abs_tol: 1e-15,
        rel_tol: 1e-12,
        max_subdivisions: 400,
    }
}

fn ml_series(alpha: f64, beta: f64, z: f64) -> f64 {
    let mut sum = 0.0;
    let mut zk = 1.0;
    for k in 0..400 {
        let term = zk / gamma(alpha * k as f64 + beta);
        sum += term;
        if k > 4 && term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
        zk *= z;
    }
    sum
}

/// `E_α(-y)` for `y >= 0` and `0 < α <= 1`.
///
/// This is the complementary distribution function of the Mittag-Leffler
/// law at `x = y^{1/α}`.
pub fn mittag_leffler_neg(alpha: f64, y: f64) -> Result<f64> {
    if alpha == 1.0 {
        return Ok((-y).exp());
    }
    if y < 1.0 {
        return Ok(ml_series(alpha, 1.0, -y));
    }
    let x = y.powf(1.0 / alpha);
    let g = |u: f64| {
        let r = u.exp();
        (-r * x).exp() * ml_spectral(alpha, r) * r
    };
    Ok(integrate_line(g, &[-x.ln(), 0.0], &ml_quad())?.value)
}

/// `1 - E_α(-y)`, the Mittag-Leffler distribution function at `x = y^{1/α}`,
/// without cancellation for small `y`.
pub fn mittag_leffler_neg_complement(alpha: f64, y: f64) -> Result<f64> {
    if alpha == 1.0 {
        return Ok(-(-y).exp_m1());
    }
    if y < 1.0 {
        return Ok(ml_series_from_one(alpha, y));
    }
    Ok(1.0 - mittag_leffler_neg(alpha, y)?)
}

fn ml_series_from_one(alpha: f64, y: f64) -> f64 {
    let mut sum = 0.0;
    let mut yk = 1.0;
    for k in 1..400 {
        yk *= -y;
        let term = -yk / gamma(alpha * k as f64 + 1.0);
        sum += term;
        if k > 4 && term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// Density of the Mittag-Leffler law with Laplace transform `1/(1+s^α)`,
/// `0 < α <= 1`.
pub fn mittag_leffler_density(alpha: f64, x: f64) -> Result<f64> {
    if x <= 0.0 {
        return Ok(0.0);
    }
    if alpha == 1.0 {
        return Ok((-x).exp());
    }
    let y = x.powf(alpha);
    if y < 1.0 {
        return Ok(x.powf(alpha - 1.0) * ml_series(alpha, alpha, -y));
    }
    let g = |u: f64| {
        let r = u.exp();
        (-r * x).exp() * ml_spectral(alpha, r) * r * r
    };
    Ok(integrate_line(g, &[-x.ln(), 0.0], &ml_quad())?.value)
}

/// Exponential integral `E_1(x)` for `x > 0`.
fn exp_integral_e1(x: f64) -> f64 {
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            term *= -x / k as f64;
            let add = -term / k as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        -EULER_GAMMA - x.ln() + sum
    } else {
        // Modified Lentz continued fraction.
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// `∫_0^z (e^v - 1) / v dv = Σ_{k>=1} z^k / (k·k!)`.
pub fn exp_ratio_integral(z: f64) -> f64 {
    if z == 0.0 {
        return 0.0;
    }
    if z > -2.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..2000 {
            term *= z / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        let x = -z;
        -(exp_integral_e1(x) + x.ln() + EULER_GAMMA)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_values() {
        let b = bernoulli_plus();
        assert_eq!(b[0], 1.0);
        assert_eq!(b[1], 0.5);
        assert!((b[2] - 1.0 / 6.0).abs() < 1e-16);
        assert_eq!(b[3], 0.0);
        assert!((b[4] + 1.0 / 30.0).abs() < 1e-16);
        assert!((b[12] + 691.0 / 2730.0).abs() < 1e-15);
    }

    #[test]
    fn power_sums_match_direct_summation() {
        for &n in &[65u64, 100, 1000, 12345] {
            for p in [0u32, 1, 2, 5, 17, 33] {
                let direct: f64 = (1..=n).map(|k| (k as f64 / n as f64).powi(p as i32)).sum::<f64>() / n as f64;
                let fast = normalized_power_sum(p, n);
                assert!((direct - fast).abs() <= 1e-13 * direct, "p={p} n={n}: {direct} vs {fast}");
            }
        }
    }

    #[test]
    fn phi_series_reproduces_function() {
        for power in 0..6 {
            let c = phi_power_series(power, 30);
            for &x in &[0.0, 0.1, 0.5, 1.0] {
                let exact = phi(x).powi(power as i32);
                assert!((eval_series(&c, x) - exact).abs() < 1e-14, "power {power} x {x}");
            }
        }
    }

    #[test]
    fn mittag_leffler_known_values() {
        // E_{1/2}(-y) = e^{y²} erfc(y); at y = 1 this is 0.4275835761558070.
        let v = mittag_leffler_neg(0.5, 1.0).unwrap();
        assert!((v - 0.427_583_576_155_807).abs() < 1e-11, "{v}");
        let v = mittag_leffler_neg(0.5, 3.0).unwrap();
        assert!((v - 0.179_001_151_181_389_95).abs() < 1e-11, "{v}");
        assert_eq!(mittag_leffler_neg(1.0, 2.0).unwrap(), (-2.0f64).exp());
    }

    #[test]
    fn mittag_leffler_series_and_integral_agree() {
        for &alpha in &[0.3, 0.6, 0.9] {
            let y: f64 = 0.95;
            let series = ml_series(alpha, 1.0, -y);
            let x = y.powf(1.0 / alpha);
            let g = |u: f64| {
                let r = u.exp();
                (-r * x).exp() * ml_spectral(alpha, r) * r
            };
            let integral = integrate_line(g, &[-x.ln(), 0.0], &ml_quad()).unwrap().value;
            assert!((series - integral).abs() < 1e-11, "alpha {alpha}");
        }
    }

    #[test]
    fn exp_ratio_integral_branches() {
        // Both branches at the switch point agree with direct quadrature.
        for &z in &[-5.0, -2.5, -1.0, 0.5, 3.0] {
            let q = crate::quadrature::integrate(
                |v: f64| if v == 0.0 { 1.0 } else { v.exp_m1() / v },
                0.0,
                z,
                &[],
                &QuadConfig::default().with_rel_tol(1e-13),
            )
            .unwrap()
            .value;
            assert!((exp_ratio_integral(z) - q).abs() < 1e-12, "z {z}");
        }
    }
}
