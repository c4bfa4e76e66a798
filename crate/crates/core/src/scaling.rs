//! Scaling exponents and the intermittency test.
//!
//! The cumulant scaling function `σ(m)` and the moment scaling function
//! `τ(q)` are limits of `log |κ^{(m)}(t)| / log t` and
//! `log E|Y(t)|^q / log t`. They are estimated here as least-squares slopes
//! on a log-log grid over a window far from the origin. A process is
//! intermittent when `τ(q)/q` strictly increases somewhere.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::bell;
use crate::cumulant_engine::{AggregateKind, CumulantTable, Method};
use crate::error::{Error, Result};

/// Default fit window `[10^3, 10^6]`.
pub const DEFAULT_WINDOW: Window = Window {
    t_min: 1e3,
    t_max: 1e6,
};
/// Default number of log-spaced grid points in the window.
pub const DEFAULT_POINTS: usize = 25;
/// Default tolerance on a fitted slope.
pub const SLOPE_TOLERANCE: f64 = 0.05;
/// Default tolerance on `τ(q)/q` comparisons.
pub const RATIO_TOLERANCE: f64 = 0.02;

const MIN_POINTS: usize = 5;
const MIN_DECADES: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Window {
    pub t_min: f64,
    pub t_max: f64,
}

impl Window {
    pub fn new(t_min: f64, t_max: f64) -> Result<Self> {
        if !(t_min > 0.0 && t_max > t_min && t_max.is_finite()) {
            return Err(Error::config(format!("invalid fit window [{t_min}, {t_max}]")));
        }
        Ok(Window { t_min, t_max })
    }

    fn contains(&self, t: f64) -> bool {
        // Grid points generated from the endpoints may be off by an ulp.
        t >= self.t_min * (1.0 - 1e-12) && t <= self.t_max * (1.0 + 1e-12)
    }
}

/// `count` points spaced evenly in `log t` from `min` to `max` inclusive.
///
/// Points are powers of ten, so a grid over whole decades hits every
/// decade exactly (which matters for `⌊t⌋`).
pub fn log_spaced(min: f64, max: f64, count: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && max >= min && max.is_finite()) {
        return Err(Error::config(format!("log grid needs 0 < min <= max, got [{min}, {max}]")));
    }
    match count {
        0 => Err(Error::config("log grid needs at least one point")),
        1 => Ok(vec![min]),
        _ => {
            let (a, b) = (min.log10(), max.log10());
            let step = (b - a) / (count - 1) as f64;
            Ok((0..count)
                .map(|i| match i {
                    0 => min,
                    _ if i == count - 1 => max,
                    _ => 10f64.powf(a + step * i as f64),
                })
                .collect())
        }
    }
}

/// Whether a fitted exponent is covered by a known asymptotic result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Guarantee {
    Unlabeled,
    Theoretical,
    OutsideGuarantee,
}

impl fmt::Display for Guarantee {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Guarantee::Unlabeled => "unlabeled",
            Guarantee::Theoretical => "theoretical",
            Guarantee::OutsideGuarantee => "outside theoretical guarantee",
        })
    }
}

/// One fitted exponent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitRow {
    /// The order `m` (cumulants) or exponent `q` (moments).
    pub exponent: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub r2: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub n_points: usize,
    pub guarantee: Guarantee,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitTarget {
    /// `σ(m)` from cumulants.
    Sigma,
    /// `τ(q)` from absolute moments.
    Tau,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    pub target: FitTarget,
    pub rows: Vec<FitRow>,
}

/// Slope, its standard error and R² of an ordinary least-squares line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_std_error: f64,
    pub r2: f64,
}

pub fn ols(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(Error::config("least squares needs at least two paired points"));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::config("least squares needs distinct abscissae"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let slope_std_error = if n > 2 { (sse / (nf - 2.0) / sxx).sqrt() } else { f64::NAN };
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok(LineFit {
        slope,
        intercept,
        slope_std_error,
        r2,
    })
}

/// `(ln t, ln |value|)` pairs inside a window, with the times they span.
type WindowPoints = (Vec<f64>, Vec<f64>, (f64, f64));

/// Log-log points of `|values|` restricted to the window.
fn window_points(
    times: &[f64],
    values: &[f64],
    window: Window,
    allow_negative: bool,
) -> Result<WindowPoints> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut span = (f64::INFINITY, f64::NEG_INFINITY);
    for (&t, &v) in times.iter().zip(values) {
        if !window.contains(t) {
            continue;
        }
        span = (span.0.min(t), span.1.max(t));
        if v == 0.0 || !v.is_finite() || (!allow_negative && v < 0.0) {
            return Err(Error::domain(format!("value {v} at t = {t} cannot be put on a log scale")));
        }
        x.push(t.ln());
        y.push(v.abs().ln());
    }
    if x.len() < MIN_POINTS {
        return Err(Error::config(format!(
            "fit window [{}, {}] holds {} grid points, at least {MIN_POINTS} are needed",
            window.t_min,
            window.t_max,
            x.len()
        )));
    }
    let decades = (x[x.len() - 1] - x[0]) / std::f64::consts::LN_10;
    if decades < MIN_DECADES - 1e-9 {
        return Err(Error::config(format!(
            "fit window points span {decades:.2} decades, at least {MIN_DECADES} are needed"
        )));
    }
    Ok((x, y, span))
}

fn fit_row(exponent: f64, times: &[f64], values: &[f64], window: Window, allow_negative: bool) -> Result<FitRow> {
    let (x, y, (t_min, t_max)) = window_points(times, values, window, allow_negative)?;
    let line = ols(&x, &y)?;
    Ok(FitRow {
        exponent,
        estimate: line.slope,
        std_error: line.slope_std_error,
        r2: line.r2,
        t_min,
        t_max,
        n_points: x.len(),
        guarantee: Guarantee::Unlabeled,
    })
}

/// Slope of `log |κ^{(m)}(t)|` against `log t` over the window.
pub fn fit_sigma(table: &CumulantTable, m: u32, window: Window) -> Result<FitRow> {
    let values = table
        .values_for(m)
        .ok_or_else(|| Error::config(format!("order {m} is not in the cumulant table")))?;
    fit_row(f64::from(m), &table.times, values, window, true)
}

/// `σ̂(m)` for several orders.
pub fn fit_sigmas(table: &CumulantTable, orders: &[u32], window: Window) -> Result<ScalingFit> {
    Ok(ScalingFit {
        target: FitTarget::Sigma,
        rows: orders.iter().map(|&m| fit_sigma(table, m, window)).collect::<Result<_>>()?,
    })
}

/// `E|Y(t)|^q` on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentTable {
    pub kind: AggregateKind,
    pub method: Method,
    pub exponents: Vec<f64>,
    pub times: Vec<f64>,
    /// `values[i][j]` is `E|Y(times[j])|^exponents[i]`.
    pub values: Vec<Vec<f64>>,
    pub std_errors: Option<Vec<Vec<f64>>>,
    /// Per exponent: true when the Monte Carlo estimate is dominated by rare
    /// events and should not be read as an estimate of the limit.
    pub mc_unreliable: Vec<bool>,
}

impl MomentTable {
    /// Even absolute moments from an analytic cumulant table by the Bell
    /// polynomial conversion. The table must hold every order `1..=max q`.
    pub fn from_cumulants(table: &CumulantTable, exponents: &[u32]) -> Result<Self> {
        if exponents.is_empty() {
            return Err(Error::config("no moment exponents requested"));
        }
        if let Some(q) = exponents.iter().find(|q| **q == 0 || **q % 2 == 1) {
            return Err(Error::Unsupported(format!(
                "E|Y|^{q} is not a polynomial in the cumulants; only positive even exponents are available analytically"
            )));
        }
        let top = *exponents.iter().max().expect("non-empty");
        let rows: Vec<&[f64]> = (1..=top)
            .map(|m| {
                table
                    .values_for(m)
                    .ok_or_else(|| Error::config(format!("cumulant table lacks order {m}, needed for moments up to {top}")))
            })
            .collect::<Result<_>>()?;
        let mut values = vec![Vec::with_capacity(table.times.len()); exponents.len()];
        for j in 0..table.times.len() {
            let kappa: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            let moments = bell::moments_from_cumulants(&kappa);
            for (i, &q) in exponents.iter().enumerate() {
                values[i].push(moments[q as usize - 1]);
            }
        }
        Ok(MomentTable {
            kind: table.kind,
            method: table.method,
            exponents: exponents.iter().map(|&q| f64::from(q)).collect(),
            times: table.times.clone(),
            values,
            std_errors: None,
            mc_unreliable: vec![false; exponents.len()],
        })
    }

    fn row(&self, q: f64) -> Option<usize> {
        self.exponents.iter().position(|&e| e == q)
    }

    pub fn values_for(&self, q: f64) -> Option<&[f64]> {
        self.row(q).map(|i| self.values[i].as_slice())
    }

    pub fn std_errors_for(&self, q: f64) -> Option<&[f64]> {
        let i = self.row(q)?;
        self.std_errors.as_ref().map(|se| se[i].as_slice())
    }

    /// Rows `kind,q,t,moment,stderr,method,mc_unreliable`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "kind,q,t,moment,stderr,method,mc_unreliable")?;
        for (i, &q) in self.exponents.iter().enumerate() {
            for (j, &t) in self.times.iter().enumerate() {
                let se = self.std_errors.as_ref().map_or(f64::NAN, |s| s[i][j]);
                writeln!(
                    out,
                    "{},{},{:.16e},{:.16e},{:.16e},{},{}",
                    self.kind, q, t, self.values[i][j], se, self.method, self.mc_unreliable[i]
                )?;
            }
        }
        Ok(())
    }
}

/// Slope of `log E|Y(t)|^q` against `log t` over the window.
pub fn fit_tau(moments: &MomentTable, q: f64, window: Window) -> Result<FitRow> {
    let values = moments
        .values_for(q)
        .ok_or_else(|| Error::config(format!("exponent {q} is not in the moment table")))?;
    fit_row(q, &moments.times, values, window, false)
}

/// `τ̂(q)` for several exponents.
pub fn fit_taus(moments: &MomentTable, exponents: &[f64], window: Window) -> Result<ScalingFit> {
    Ok(ScalingFit {
        target: FitTarget::Tau,
        rows: exponents.iter().map(|&q| fit_tau(moments, q, window)).collect::<Result<_>>()?,
    })
}

/// Smallest even integer strictly greater than `2α`.
pub fn q_star(alpha: f64) -> u32 {
    2 * (alpha.floor() as u32 + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoreticalTau {
    Value(f64),
    /// Below `q*` the asymptotic result makes no statement.
    Unknown,
}

/// `τ(q) = q - α` for `q >= q*(α)`.
pub fn theoretical_tau(q: f64, alpha: f64) -> TheoreticalTau {
    if q >= f64::from(q_star(alpha)) {
        TheoreticalTau::Value(q - alpha)
    } else {
        TheoreticalTau::Unknown
    }
}

/// Theoretical cumulant exponent `σ(m) = m - α`, asserted only for `m > α + 1`.
pub fn theoretical_sigma(m: u32, alpha: f64) -> Option<f64> {
    let mf = f64::from(m);
    (mf > alpha + 1.0).then_some(mf - alpha)
}

impl ScalingFit {
    /// Marks each row as inside or outside the range where `α` determines
    /// the exponent.
    pub fn label_guarantees(&mut self, alpha: f64) {
        for row in &mut self.rows {
            let covered = match self.target {
                FitTarget::Sigma => theoretical_sigma(row.exponent as u32, alpha).is_some(),
                FitTarget::Tau => matches!(theoretical_tau(row.exponent, alpha), TheoreticalTau::Value(_)),
            };
            row.guarantee = if covered {
                Guarantee::Theoretical
            } else {
                Guarantee::OutsideGuarantee
            };
        }
    }

    pub fn estimates(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.exponent, r.estimate)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Intermittent,
    NotIntermittent,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Intermittent => "intermittent",
            Verdict::NotIntermittent => "not-intermittent",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Compares `τ̂(q)/q` across exponents.
///
/// Intermittent if some `p < r` has `τ̂(p)/p + tol < τ̂(r)/r`; not
/// intermittent if all ratios agree within `tol`; inconclusive otherwise
/// and whenever fewer than two exponents are available.
pub fn intermittency_test(fit: &ScalingFit, tol: f64) -> Verdict {
    let mut pts = fit.estimates();
    if pts.len() < 2 {
        return Verdict::Inconclusive;
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let ratios: Vec<f64> = pts.iter().map(|(q, t)| t / q).collect();
    let increasing = (0..ratios.len()).any(|i| ((i + 1)..ratios.len()).any(|j| ratios[i] + tol < ratios[j]));
    if increasing {
        return Verdict::Intermittent;
    }
    let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    if hi - lo <= tol {
        Verdict::NotIntermittent
    } else {
        Verdict::Inconclusive
    }
}

/// Checks that `τ̂` is convex in `q` and `τ̂(q)/q` is non-decreasing, both
/// within `tol`.
pub fn convexity_check(fit: &ScalingFit, tol: f64) -> Result<bool> {
    let mut pts = fit.estimates();
    if pts.len() < 3 {
        return Err(Error::config("convexity check needs at least three exponents"));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let convex = pts.windows(3).all(|w| {
        let left = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
        let right = (w[2].1 - w[1].1) / (w[2].0 - w[1].0);
        right - left >= -tol
    });
    let ratios_nondecreasing = pts.windows(2).all(|w| w[1].1 / w[1].0 >= w[0].1 / w[0].0 - tol);
    Ok(convex && ratios_nondecreasing)
}

/// Writes `q,estimate,stderr,r2,t_min,t_max,n_points,verdict,guarantee` rows.
pub fn write_fit_csv<W: Write>(fit: &ScalingFit, verdict: Verdict, mut out: W) -> std::io::Result<()> {
    writeln!(out, "q,estimate,stderr,r2,t_min,t_max,n_points,verdict,guarantee")?;
    for r in &fit.rows {
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{}",
            r.exponent, r.estimate, r.std_error, r.r2, r.t_min, r.t_max, r.n_points, verdict, r.guarantee
        )?;
    }
    Ok(())
}

/// Writes one `log_t log_value` file per series into `dir`, named
/// `{prefix}_{label}.dat`, and returns the paths.
pub fn write_plot_data(dir: &Path, prefix: &str, series: &[(String, &[f64], &[f64])]) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::with_capacity(series.len());
    for (label, times, values) in series {
        let path = dir.join(format!("{prefix}_{label}.dat"));
        let mut file = std::io::BufWriter::new(std::fs::File::create(&path)?);
        writeln!(file, "# log_t log_value")?;
        for (t, v) in times.iter().zip(values.iter()) {
            if *v != 0.0 && v.is_finite() {
                writeln!(file, "{:.16e} {:.16e}", t.ln(), v.abs().ln())?;
            }
        }
        file.flush()?;
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit_of(pairs: &[(f64, f64)], target: FitTarget) -> ScalingFit {
        ScalingFit {
            target,
            rows: pairs
                .iter()
                .map(|&(q, e)| FitRow {
                    exponent: q,
                    estimate: e,
                    std_error: 0.0,
                    r2: 1.0,
                    t_min: 1e3,
                    t_max: 1e6,
                    n_points: 25,
                    guarantee: Guarantee::Unlabeled,
                })
                .collect(),
        }
    }

    fn synthetic_table(orders: &[u32], exps: &[f64], c: f64) -> CumulantTable {
        let times = log_spaced(1e3, 1e6, 25).unwrap();
        let values: Vec<Vec<f64>> = exps.iter().map(|b| times.iter().map(|t| c * t.powf(*b)).collect()).collect();
        CumulantTable {
            kind: AggregateKind::Integrated,
            method: Method::Analytic,
            orders: orders.to_vec(),
            times,
            marginal_cumulants: vec![1.0; orders.len()],
            factors: values.clone(),
            values,
            std_errors: None,
        }
    }

    #[test]
    fn q_star_and_theory() {
        assert_eq!(q_star(0.6), 2);
        assert_eq!(q_star(1.0), 4);
        assert_eq!(q_star(0.999), 2);
        assert_eq!(q_star(1.5), 4);
        assert_eq!(theoretical_tau(4.0, 0.6), TheoreticalTau::Value(4.0 - 0.6));
        assert_eq!(theoretical_tau(1.0, 0.6), TheoreticalTau::Unknown);
        assert_eq!(theoretical_sigma(2, 1.0), None);
    }

    #[test]
    fn exact_power_laws_are_recovered() {
        let table = synthetic_table(&[2, 3], &[1.37, -0.4], 3.5);
        for (m, b) in [(2, 1.37), (3, -0.4)] {
            let row = fit_sigma(&table, m, DEFAULT_WINDOW).unwrap();
            assert!((row.estimate - b).abs() < 1e-10);
            assert!((row.r2 - 1.0).abs() < 1e-12);
            assert_eq!(row.n_points, 25);
        }
    }

    #[test]
    fn negative_cumulants_use_absolute_values() {
        let table = synthetic_table(&[3], &[2.5], -2.0);
        assert!((fit_sigma(&table, 3, DEFAULT_WINDOW).unwrap().estimate - 2.5).abs() < 1e-10);
    }

    #[test]
    fn window_rules() {
        let table = synthetic_table(&[2], &[1.0], 1.0);
        assert!(matches!(fit_sigma(&table, 2, Window::new(1e3, 1.1e3).unwrap()), Err(Error::Config(_))));
        assert!(matches!(fit_sigma(&table, 2, Window::new(1e3, 5e4).unwrap()), Err(Error::Config(_))));
        assert!(fit_sigma(&table, 2, Window::new(1e3, 1e5).unwrap()).is_ok());
        let mut zero = table.clone();
        zero.values[0][3] = 0.0;
        match fit_sigma(&zero, 2, DEFAULT_WINDOW) {
            Err(Error::Domain(msg)) => assert!(msg.contains("t = ")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn moments_via_bell() {
        // κ_2 = t, κ_4 = t^{1.5}: E Y^4 = κ_4 + 3 κ_2^2.
        let times = log_spaced(1e3, 1e6, 25).unwrap();
        let table = CumulantTable {
            kind: AggregateKind::Integrated,
            method: Method::Analytic,
            orders: vec![1, 2, 3, 4],
            marginal_cumulants: vec![0.0; 4],
            factors: vec![vec![0.0; 25]; 4],
            values: vec![
                vec![0.0; 25],
                times.clone(),
                vec![0.0; 25],
                times.iter().map(|t| t.powf(1.5)).collect(),
            ],
            times: times.clone(),
            std_errors: None,
        };
        let m = MomentTable::from_cumulants(&table, &[2, 4]).unwrap();
        assert_eq!(m.values_for(2.0).unwrap()[0], 1e3);
        let t = times[7];
        assert!((m.values_for(4.0).unwrap()[7] - (t.powf(1.5) + 3.0 * t * t)).abs() < 1e-6 * t * t);
        assert!(matches!(MomentTable::from_cumulants(&table, &[3]), Err(Error::Unsupported(_))));
        assert!(MomentTable::from_cumulants(&table, &[6]).is_err());
        let fit = fit_tau(&m, 2.0, DEFAULT_WINDOW).unwrap();
        assert!((fit.estimate - 1.0).abs() < 1e-10);
    }

    #[test]
    fn intermittency_examples() {
        let h = 0.7;
        assert_eq!(intermittency_test(&fit_of(&[(2.0, 2.0 * h), (4.0, 4.0 * h)], FitTarget::Tau), 0.02), Verdict::NotIntermittent);
        assert_eq!(intermittency_test(&fit_of(&[(2.0, 1.4), (4.0, 3.4)], FitTarget::Tau), 0.1), Verdict::Intermittent);
        assert_eq!(intermittency_test(&fit_of(&[(2.0, 1.4)], FitTarget::Tau), 0.1), Verdict::Inconclusive);
        // A decrease larger than tol is neither.
        assert_eq!(intermittency_test(&fit_of(&[(2.0, 2.0), (4.0, 3.0)], FitTarget::Tau), 0.1), Verdict::Inconclusive);
    }

    #[test]
    fn convexity_examples() {
        let linear = fit_of(&[(2.0, 1.4), (4.0, 3.4), (6.0, 5.4)], FitTarget::Tau);
        assert!(convexity_check(&linear, 0.05).unwrap());
        let bad_ratio = fit_of(&[(2.0, 1.4), (4.0, 2.0), (6.0, 3.4)], FitTarget::Tau);
        assert!(!convexity_check(&bad_ratio, 0.05).unwrap());
        let concave = fit_of(&[(2.0, 1.0), (4.0, 3.0), (6.0, 3.5)], FitTarget::Tau);
        assert!(!convexity_check(&concave, 0.05).unwrap());
        assert!(convexity_check(&fit_of(&[(2.0, 1.0), (4.0, 2.0)], FitTarget::Tau), 0.05).is_err());
    }

    #[test]
    fn guarantee_labels() {
        let mut fit = fit_of(&[(1.0, 0.9), (2.0, 1.4)], FitTarget::Tau);
        fit.label_guarantees(0.6);
        assert_eq!(fit.rows[0].guarantee, Guarantee::OutsideGuarantee);
        assert_eq!(fit.rows[1].guarantee, Guarantee::Theoretical);
        let mut csv = Vec::new();
        write_fit_csv(&fit, Verdict::Inconclusive, &mut csv).unwrap();
        assert!(String::from_utf8(csv).unwrap().contains("outside theoretical guarantee"));
    }

    #[test]
    fn log_grid() {
        let g = log_spaced(1e3, 1e6, 4).unwrap();
        assert_eq!(g[0], 1e3);
        assert_eq!(g[3], 1e6);
        assert!((g[1] - 1e4).abs() < 1e-8);
        assert!(log_spaced(0.0, 1.0, 3).is_err());
    }

    #[test]
    fn plot_files() {
        let dir = std::env::temp_dir().join(format!("supou-plot-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let t = [1.0, std::f64::consts::E];
        let v = [1.0, 2.0];
        let paths = write_plot_data(&dir, "sigma", &[("m2".to_string(), &t[..], &v[..])]).unwrap();
        let text = std::fs::read_to_string(&paths[0]).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().nth(2).unwrap().starts_with("1.0000000000000000e0 6.93"));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
