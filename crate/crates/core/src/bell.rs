//! Partial Bell polynomials and the cumulant/moment conversion.
//!
//! Raw moments are sums of partial Bell polynomials of the cumulants:
//! `μ'_n = Σ_{k=1}^n B_{n,k}(κ_1, ..., κ_{n-k+1})`. The polynomials are
//! evaluated with the recurrence
//! `B_{n,k} = Σ_j C(n-1, j-1) x_j B_{n-j,k-1}`, which costs `O(n^2 k)`
//! instead of enumerating set partitions.

use std::ops::{Add, Mul};

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::special;

/// Table `B[i][k]` for `0 <= k <= i <= n` built from `x_1..x_n` (`x[0]` is `x_1`).
///
/// Entries whose arguments would reach past `x.len()` are never touched
/// because `B_{i,k}` only uses `x_1..x_{i-k+1}`.
fn bell_table<T, B>(n: usize, x: &[T], binom: B) -> Vec<Vec<T>>
where
    T: Clone + Zero + One + Add<Output = T> + Mul<Output = T>,
    B: Fn(u32, u32) -> T,
{
    let mut table = vec![vec![T::zero(); n + 1]; n + 1];
    table[0][0] = T::one();
    for i in 1..=n {
        for k in 1..=i {
            let mut acc = T::zero();
            for j in 1..=(i - k + 1) {
                let prev = &table[i - j][k - 1];
                if prev.is_zero() {
                    continue;
                }
                acc = acc + binom((i - 1) as u32, (j - 1) as u32) * x[j - 1].clone() * prev.clone();
            }
            table[i][k] = acc;
        }
    }
    table
}

fn check_args(n: usize, k: usize, len: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::config(format!("partial Bell polynomial needs 1 <= k <= n, got n = {n}, k = {k}")));
    }
    if len != n - k + 1 {
        return Err(Error::config(format!(
            "B_{{{n},{k}}} takes {} arguments, got {len}",
            n - k + 1
        )));
    }
    Ok(())
}

/// `B_{n,k}(x_1, ..., x_{n-k+1})` in floating point.
pub fn partial_bell(n: usize, k: usize, x: &[f64]) -> Result<f64> {
    check_args(n, k, x.len())?;
    let mut padded = x.to_vec();
    padded.resize(n, 0.0);
    Ok(bell_table(n, &padded, special::binomial)[n][k])
}

/// `B_{n,k}` over arbitrary-precision integers.
pub fn partial_bell_exact(n: usize, k: usize, x: &[BigInt]) -> Result<BigInt> {
    check_args(n, k, x.len())?;
    let mut padded = x.to_vec();
    padded.resize(n, BigInt::zero());
    Ok(bell_table(n, &padded, special::binomial_big)[n][k].clone())
}

/// Raw moments `μ'_1..μ'_m` from cumulants `κ_1..κ_m`.
pub fn moments_from_cumulants(kappa: &[f64]) -> Vec<f64> {
    let n = kappa.len();
    let table = bell_table(n, kappa, special::binomial);
    (1..=n).map(|i| table[i][1..=i].iter().sum()).collect()
}

/// Cumulants `κ_1..κ_m` from raw moments `μ'_1..μ'_m`, via
/// `κ_n = μ'_n - Σ_{k=1}^{n-1} C(n-1, k-1) κ_k μ'_{n-k}`.
pub fn cumulants_from_moments(moments: &[f64]) -> Vec<f64> {
    let mut kappa: Vec<f64> = Vec::with_capacity(moments.len());
    for n in 1..=moments.len() {
        let mut value = moments[n - 1];
        for k in 1..n {
            value -= special::binomial((n - 1) as u32, (k - 1) as u32) * kappa[k - 1] * moments[n - k - 1];
        }
        kappa.push(value);
    }
    kappa
}
