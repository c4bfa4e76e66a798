//! Cumulants of the integrated process `X*(t) = ∫_0^t X(s) ds` and of the
//! partial-sum process `X+(t) = Σ_{i<=⌊t⌋} X(i)`.
//!
//! Both reduce to a marginal cumulant times a time factor that only depends
//! on the mixing measure:
//!
//! ```text
//! κ_{X*}^{(m)}(t) = κ_X^{(m)} · m · I_{m-1}(t)
//! κ_{X+}^{(m)}(t) = κ_X^{(m)} · J_{m-1}(t)
//! ```
//!
//! Each factor is available in two algebraically equivalent forms that are
//! evaluated along different numerical paths, so one can audit the other.

use std::fmt;
use std::io::Write;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::marginal::MarginalLaw;
use crate::mixing::MixingMeasure;
use crate::quadrature::{integrate, QuadConfig};
use crate::special;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregateKind {
    /// `X*(t) = ∫_0^t X(s) ds`.
    Integrated,
    /// `X+(t) = Σ_{i=1}^{⌊t⌋} X(i)`.
    PartialSum,
}

impl fmt::Display for AggregateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AggregateKind::Integrated => "integrated",
            AggregateKind::PartialSum => "partial_sum",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegratedForm {
    /// Exponential-sum expression with the constant `a_{m-1}`.
    #[default]
    Direct,
    /// Inner integral `∫_0^{ξt} (1 - e^{-w})^{m-1} dw` evaluated by quadrature.
    Kernel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PartialSumForm {
    /// Binomially expanded geometric sums, O(m) work per node.
    #[default]
    Expanded,
    /// The sum over `k < ⌊t⌋` carried out term by term, O(⌊t⌋) per node.
    Summed,
}

/// Which form each factor is computed with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Forms {
    pub integrated: IntegratedForm,
    pub partial_sum: PartialSumForm,
}

impl Forms {
    /// The other form for both factors.
    pub fn alternate(self) -> Self {
        Forms {
            integrated: match self.integrated {
                IntegratedForm::Direct => IntegratedForm::Kernel,
                IntegratedForm::Kernel => IntegratedForm::Direct,
            },
            partial_sum: match self.partial_sum {
                PartialSumForm::Expanded => PartialSumForm::Summed,
                PartialSumForm::Summed => PartialSumForm::Expanded,
            },
        }
    }
}

/// Largest `⌊t⌋` accepted by the summed partial-sum form.
pub const SUMMED_FORM_LIMIT: u64 = 100_000;

/// `a_{m-1} = Σ_{k=1}^{m-1} (-1)^k C(m-1, k) / k`, exactly.
///
/// This equals minus the harmonic number `H_{m-1}`.
pub fn a_coeff(m: u32) -> BigRational {
    let mut acc = BigRational::zero();
    for k in 1..m {
        let term = BigRational::new(special::binomial_big(m - 1, k), BigInt::from(k));
        if k % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc
}

/// `ε(a, b) = (1 - e^{-ab}) / b`, continuous at `b = 0`.
pub(crate) fn epsilon(a: f64, b: f64) -> f64 {
    a * special::phi(a * b)
}

/// `η(a, b) = e^{-b} (1 - e^{-ab}) / (1 - e^{-b})`, continuous at `b = 0`.
pub(crate) fn eta(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        return a;
    }
    (-b).exp() * (-a * b).exp_m1() / (-b).exp_m1()
}

const TAYLOR_TERMS: usize = 12;
const KERNEL_SPLIT: f64 = 50.0;
const SERIES_TERMS: usize = 32;
const SERIES_SWITCH: f64 = 0.5;

/// `F_m(x) / x^m` with `F_m(x) = ∫_0^x (1 - e^{-w})^{m-1} dw`.
struct IntegratedKernel {
    m: u32,
    taylor: Vec<f64>,
    binom: Vec<f64>,
    a: f64,
    tail_anchor: OnceLock<f64>,
}

impl IntegratedKernel {
    fn new(m: u32) -> Self {
        let taylor: Vec<f64> = special::phi_power_series(m - 1, TAYLOR_TERMS)
            .into_iter()
            .enumerate()
            .map(|(j, c)| c / (f64::from(m) + j as f64))
            .collect();
        IntegratedKernel {
            m,
            taylor,
            binom: (0..m).map(|k| special::binomial(m - 1, k)).collect(),
            a: a_coeff(m).to_f64().unwrap_or(f64::NAN),
            tail_anchor: OnceLock::new(),
        }
    }

    fn taylor_threshold(&self) -> f64 {
        f64::from(self.m) * 1e-2
    }

    fn series(&self, x: f64) -> f64 {
        special::eval_series(&self.taylor, x)
    }

    fn direct(&self, x: f64) -> f64 {
        if x < self.taylor_threshold() {
            return self.series(x);
        }
        let mut bracket = self.a + x;
        for k in 1..self.m {
            let kf = f64::from(k);
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            bracket += sign * self.binom[k as usize] * (-kf * x).exp() / kf;
        }
        bracket / x.powi(self.m as i32)
    }

    fn inner_quadrature(&self, x: f64) -> Result<f64> {
        let p = (self.m - 1) as i32;
        let cfg = QuadConfig {
            abs_tol: 1e-300,
            rel_tol: 1e-13,
            max_subdivisions: 200,
        };
        let breaks: Vec<f64> = if x > 1.0 { vec![1.0 / x, 4.0 / x] } else { vec![] };
        Ok(integrate(|v| epsilon(v, x).powi(p), 0.0, 1.0, &breaks, &cfg)?.value)
    }

    fn kernel(&self, x: f64) -> Result<f64> {
        if x < self.taylor_threshold() {
            return Ok(self.series(x));
        }
        if x <= KERNEL_SPLIT {
            return self.inner_quadrature(x);
        }
        // Beyond the split the integrand (1 - e^{-w})^{m-1} equals 1 to
        // within (m-1) e^{-50}.
        let f_split = match self.tail_anchor.get() {
            Some(v) => *v,
            None => {
                let v = self.inner_quadrature(KERNEL_SPLIT)? * KERNEL_SPLIT.powi(self.m as i32);
                *self.tail_anchor.get_or_init(|| v)
            }
        };
        Ok((f_split + (x - KERNEL_SPLIT)) / x.powi(self.m as i32))
    }
}

fn check_order(m: u32) -> Result<()> {
    if m == 0 {
        Err(Error::config("cumulant order must be at least 1"))
    } else {
        Ok(())
    }
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("time must be positive and finite, got {t}")))
    }
}

/// `I_{m-1}(t) = ∫ ∫_0^{ξt} (1 - e^{-w})^{m-1} dw ξ^{-m} π(dξ)`.
///
/// `I_0(t) = t` exactly. The integrand is `t^m G(tξ)` with
/// `G(x) = F_m(x) / x^m`; for `x` below `m/100` both forms use a Taylor
/// expansion of `G`, since the direct form cancels catastrophically there.
pub fn integrated_factor(mix: &MixingMeasure, m: u32, t: f64, form: IntegratedForm) -> Result<f64> {
    check_order(m)?;
    check_time(t)?;
    if m == 1 {
        return Ok(t);
    }
    let kernel = IntegratedKernel::new(m);
    let tm = t.powi(m as i32);
    let scales = [1.0 / t];
    match form {
        IntegratedForm::Direct => mix.expectation(|xi| tm * kernel.direct(t * xi), &scales),
        IntegratedForm::Kernel => {
            let failure: OnceLock<Error> = OnceLock::new();
            let value = mix.expectation(
                |xi| match kernel.kernel(t * xi) {
                    Ok(g) => tm * g,
                    Err(e) => {
                        let _ = failure.set(e);
                        f64::NAN
                    }
                },
                &scales,
            );
            match failure.into_inner() {
                Some(e) => Err(e),
                None => value,
            }
        }
    }
}

/// Integrand of `J_{m-1}` for the partial-sum form `n = ⌊t⌋`.
struct PartialSumKernel {
    m: u32,
    n: u64,
    binom: Vec<f64>,
    phi_m: Vec<f64>,
    power_sums: Vec<f64>,
}

impl PartialSumKernel {
    fn new(m: u32, n: u64) -> Self {
        let big_n = n - 1;
        PartialSumKernel {
            m,
            n,
            binom: (0..=m).map(|j| special::binomial(m, j)).collect(),
            phi_m: special::phi_power_series(m, SERIES_TERMS),
            power_sums: (0..SERIES_TERMS as u32)
                .map(|i| special::normalized_power_sum(m + i, big_n))
                .collect(),
        }
    }

    /// `[(1 - e^{-mξ}) Σ_{k<n} (1 - e^{-kξ})^m + (1 - e^{-nξ})^m] / (1 - e^{-ξ})^m`
    /// with the geometric sums written out binomially.
    fn expanded(&self, xi: f64) -> f64 {
        let nf = self.n as f64;
        if nf * xi < SERIES_SWITCH {
            return self.series(xi);
        }
        let mi = self.m as i32;
        let a = nf - 1.0;
        let mut sum = a;
        for j in 1..=self.m {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * self.binom[j as usize] * eta(a, f64::from(j) * xi);
        }
        let one_minus_q = -(-xi).exp_m1();
        let head = -(-f64::from(self.m) * xi).exp_m1() * sum;
        let last = (-(-nf * xi).exp_m1()).powi(mi);
        (head + last) / one_minus_q.powi(mi)
    }

    /// Power-sum expansion for `nξ < 1/2`, free of cancellation.
    fn series(&self, xi: f64) -> f64 {
        let mi = self.m as i32;
        let nf = self.n as f64;
        let big_n = nf - 1.0;
        let z = big_n * xi;
        let mut inner = 0.0;
        let mut zp = 1.0;
        for (d, u) in self.phi_m.iter().zip(&self.power_sums) {
            inner += d * zp * u;
            zp *= z;
        }
        let head = -(-f64::from(self.m) * xi).exp_m1() * big_n.powi(mi + 1) * inner;
        let last = (nf * special::phi(nf * xi)).powi(mi);
        (head + last) / special::phi(xi).powi(mi)
    }

    /// Same quantity with `r_k = (1 - e^{-kξ}) / (1 - e^{-ξ}) = Σ_{j<k} e^{-jξ}`
    /// accumulated term by term.
    fn summed(&self, xi: f64) -> f64 {
        let mi = self.m as i32;
        let q = (-xi).exp();
        let mut r: f64 = 1.0;
        let mut acc = 0.0;
        for _ in 1..self.n {
            acc += r.powi(mi);
            r = 1.0 + q * r;
        }
        -(-f64::from(self.m) * xi).exp_m1() * acc + r.powi(mi)
    }
}

/// `J_{m-1}(t)`, which depends on `t` only through `n = ⌊t⌋`.
///
/// `J_0(t) = ⌊t⌋` exactly. The summed form is rejected for `n` above
/// [`SUMMED_FORM_LIMIT`].
pub fn partial_sum_factor(mix: &MixingMeasure, m: u32, t: f64, form: PartialSumForm) -> Result<f64> {
    check_order(m)?;
    if !(t.is_finite() && t >= 1.0) {
        return Err(Error::domain(format!("partial sums need t >= 1, got {t}")));
    }
    let n = t.floor() as u64;
    if m == 1 {
        return Ok(n as f64);
    }
    let kernel = PartialSumKernel::new(m, n);
    let scales = [1.0 / n as f64];
    match form {
        PartialSumForm::Expanded => mix.expectation(|xi| kernel.expanded(xi), &scales),
        PartialSumForm::Summed => {
            if n > SUMMED_FORM_LIMIT {
                return Err(Error::Size(format!(
                    "summed form costs O(⌊t⌋) per node; ⌊t⌋ = {n} exceeds {SUMMED_FORM_LIMIT}"
                )));
            }
            mix.expectation(|xi| kernel.summed(xi), &scales)
        }
    }
}

/// The time factor for `kind` with the form chosen in `forms`.
pub fn factor(mix: &MixingMeasure, kind: AggregateKind, m: u32, t: f64, forms: Forms) -> Result<f64> {
    match kind {
        AggregateKind::Integrated => integrated_factor(mix, m, t, forms.integrated),
        AggregateKind::PartialSum => partial_sum_factor(mix, m, t, forms.partial_sum),
    }
}

fn combine(kind: AggregateKind, m: u32, kappa: f64, factor: f64) -> f64 {
    match kind {
        AggregateKind::Integrated => kappa * f64::from(m) * factor,
        AggregateKind::PartialSum => kappa * factor,
    }
}

/// `κ^{(m)}` of `X*(t)` or `X+(t)` with the default forms.
pub fn aggregate_cumulant(mix: &MixingMeasure, law: &MarginalLaw, kind: AggregateKind, m: u32, t: f64) -> Result<f64> {
    let kappa = law.cumulant(m)?;
    Ok(combine(kind, m, kappa, factor(mix, kind, m, t, Forms::default())?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Analytic,
    Empirical,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Analytic => "analytic",
            Method::Empirical => "empirical",
        })
    }
}

/// Cumulants `κ^{(m)}(t)` on an order × time grid.
///
/// `factors[i][j]` and `values[i][j]` belong to `orders[i]` and `times[j]`.
/// Empirical tables carry no factors (they are NaN) but do carry standard
/// errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CumulantTable {
    pub kind: AggregateKind,
    pub method: Method,
    pub orders: Vec<u32>,
    pub times: Vec<f64>,
    pub marginal_cumulants: Vec<f64>,
    pub factors: Vec<Vec<f64>>,
    pub values: Vec<Vec<f64>>,
    pub std_errors: Option<Vec<Vec<f64>>>,
}

pub(crate) fn validate_grid(orders: &[u32], times: &[f64]) -> Result<()> {
    if orders.is_empty() {
        return Err(Error::config("no cumulant orders requested"));
    }
    if orders.contains(&0) {
        return Err(Error::config("cumulant orders start at 1"));
    }
    if times.is_empty() {
        return Err(Error::config("empty time grid"));
    }
    if times.iter().any(|t| !t.is_finite() || *t <= 0.0) {
        return Err(Error::config("time grid must contain positive finite values"));
    }
    if times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config("time grid must be strictly increasing"));
    }
    Ok(())
}

impl CumulantTable {
    /// Analytic table, cells evaluated in parallel.
    pub fn analytic(
        mix: &MixingMeasure,
        law: &MarginalLaw,
        kind: AggregateKind,
        orders: &[u32],
        times: &[f64],
        forms: Forms,
    ) -> Result<Self> {
        validate_grid(orders, times)?;
        let marginal_cumulants = orders.iter().map(|&m| law.cumulant(m)).collect::<Result<Vec<_>>>()?;
        let cells: Vec<(usize, usize)> = (0..orders.len())
            .flat_map(|i| (0..times.len()).map(move |j| (i, j)))
            .collect();
        let computed = cells
            .par_iter()
            .map(|&(i, j)| factor(mix, kind, orders[i], times[j], forms))
            .collect::<Result<Vec<f64>>>()?;
        let mut factors = vec![vec![0.0; times.len()]; orders.len()];
        let mut values = factors.clone();
        for (&(i, j), f) in cells.iter().zip(computed) {
            factors[i][j] = f;
            values[i][j] = combine(kind, orders[i], marginal_cumulants[i], f);
        }
        Ok(CumulantTable {
            kind,
            method: Method::Analytic,
            orders: orders.to_vec(),
            times: times.to_vec(),
            marginal_cumulants,
            factors,
            values,
            std_errors: None,
        })
    }

    fn row(&self, m: u32) -> Option<usize> {
        self.orders.iter().position(|&o| o == m)
    }

    /// `κ^{(m)}(t_j)` for all grid times, if order `m` is in the table.
    pub fn values_for(&self, m: u32) -> Option<&[f64]> {
        self.row(m).map(|i| self.values[i].as_slice())
    }

    pub fn factors_for(&self, m: u32) -> Option<&[f64]> {
        self.row(m).map(|i| self.factors[i].as_slice())
    }

    pub fn std_errors_for(&self, m: u32) -> Option<&[f64]> {
        let i = self.row(m)?;
        self.std_errors.as_ref().map(|se| se[i].as_slice())
    }

    /// Writes `kind,m,t,factor,cumulant,method` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "kind,m,t,factor,cumulant,method")?;
        for (i, &m) in self.orders.iter().enumerate() {
            for (j, &t) in self.times.iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{:.16e},{:.16e},{:.16e},{}",
                    self.kind, m, t, self.factors[i][j], self.values[i][j], self.method
                )?;
            }
        }
        Ok(())
    }

    /// Largest relative discrepancy of the factors against another table on
    /// the same grid.
    pub fn max_relative_discrepancy(&self, other: &CumulantTable) -> Result<f64> {
        if self.orders != other.orders || self.times != other.times {
            return Err(Error::config("tables are on different grids"));
        }
        let mut worst: f64 = 0.0;
        for (a, b) in self.factors.iter().flatten().zip(other.factors.iter().flatten()) {
            let scale = a.abs().max(b.abs());
            if scale > 0.0 {
                worst = worst.max((a - b).abs() / scale);
            }
        }
        Ok(worst)
    }
}
