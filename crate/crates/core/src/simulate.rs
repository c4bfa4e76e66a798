//! Monte Carlo simulation of discrete superpositions of OU-type processes.
//!
//! Each component `k` is an OU process with rate `λ_k` whose background
//! driving Lévy process is compound Poisson, so the skeleton `X(iΔ)` can be
//! generated exactly: between grid points the state decays by `e^{-λΔ}` and
//! every jump at time `s` enters with weight `e^{-λ(t+Δ-s)}`. A Gamma(ν, c)
//! marginal is reproduced by jumps at rate `λν` with Exp(c) sizes; in a
//! superposition, component `k` gets rate `λ_k p_k ν`.
//!
//! Replica `r` draws from its own ChaCha stream `(seed, r)`, so ensembles are
//! bit-identical for a given seed no matter how many threads run them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma};
use rayon::prelude::*;
use serde::Serialize;

use crate::cumulant_engine::{validate_grid, AggregateKind, CumulantTable, Method};
use crate::error::{Error, Result};
use crate::marginal::{JumpLaw, MarginalKind, MarginalLaw};
use crate::mixing::MixingMeasure;
use crate::scaling::MomentTable;

/// Neglected mixing mass above which a truncation warning is recorded.
pub const TRUNCATION_WARNING_MASS: f64 = 1e-10;
/// Neglected share of the variance allowed when choosing `K` automatically.
pub const AUTO_TRUNCATION_MASS: f64 = 1e-3;
/// Largest number of superposed components.
pub const MAX_COMPONENTS: usize = 10_000;
/// Largest number of stored skeleton values (replicas × points).
pub const MAX_STORED_VALUES: usize = 200_000_000;
/// Groups used by the grouped jackknife.
pub const JACKKNIFE_GROUPS: usize = 100;
/// Highest moment exponent not flagged as Monte Carlo unreliable.
pub const RELIABLE_MOMENT_LIMIT: f64 = 4.0;

/// A background driving Lévy process that can be simulated exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Bdlp {
    Zero,
    /// Jumps at `intensity` per unit of BDLP time.
    CompoundPoisson { intensity: f64, jump: JumpLaw },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Start {
    /// Draw `X(0)` from the stationary law of the component.
    Stationary,
    Fixed(f64),
}

fn draw_jump<R: Rng + ?Sized>(jump: &JumpLaw, rng: &mut R) -> f64 {
    match *jump {
        JumpLaw::Exponential { rate } => Exp::new(rate).expect("validated jump rate").sample(rng),
        JumpLaw::Deterministic { size } => size,
    }
}

/// A draw from `∫_0^∞ e^{-s} dL(s)`, the stationary law of the component.
fn stationary_draw<R: Rng + ?Sized>(bdlp: &Bdlp, rng: &mut R) -> Result<f64> {
    match bdlp {
        Bdlp::Zero => Ok(0.0),
        Bdlp::CompoundPoisson { intensity, jump } => match jump {
            JumpLaw::Exponential { rate } => {
                let g = Gamma::new(*intensity, 1.0 / rate).map_err(|e| Error::config(e.to_string()))?;
                Ok(g.sample(rng))
            }
            JumpLaw::Deterministic { size } => {
                let gaps = Exp::new(*intensity).map_err(|e| Error::config(e.to_string()))?;
                let mut s = gaps.sample(rng);
                let mut x = 0.0;
                // e^{-42} is below the double-precision resolution of the sum.
                while s < 42.0 {
                    x += size * (-s).exp();
                    s += gaps.sample(rng);
                }
                Ok(x)
            }
        },
    }
}

fn validate_bdlp(bdlp: &Bdlp) -> Result<()> {
    if let Bdlp::CompoundPoisson { intensity, jump } = bdlp {
        let ok = intensity.is_finite()
            && *intensity > 0.0
            && match jump {
                JumpLaw::Exponential { rate } => rate.is_finite() && *rate > 0.0,
                JumpLaw::Deterministic { size } => size.is_finite() && *size > 0.0,
            };
        if !ok {
            return Err(Error::config(format!("invalid compound Poisson BDLP {bdlp:?}")));
        }
    }
    Ok(())
}

/// Exact skeleton `X(0), X(Δ), ..., X(nΔ)` of one OU-type component.
pub fn ou_component_path<R: Rng + ?Sized>(
    rate: f64,
    bdlp: Bdlp,
    start: Start,
    step: f64,
    n_steps: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(rate.is_finite() && rate > 0.0 && step.is_finite() && step > 0.0) {
        return Err(Error::config(format!("rate and step must be positive, got {rate} and {step}")));
    }
    validate_bdlp(&bdlp)?;
    let mut x = match start {
        Start::Fixed(x0) => x0,
        Start::Stationary => stationary_draw(&bdlp, rng)?,
    };
    let decay = (-rate * step).exp();
    let mut path = Vec::with_capacity(n_steps + 1);
    path.push(x);
    match bdlp {
        Bdlp::Zero => {
            for _ in 0..n_steps {
                x *= decay;
                path.push(x);
            }
        }
        Bdlp::CompoundPoisson { intensity, jump } => {
            let arrivals = Exp::new(rate * intensity).map_err(|e| Error::config(e.to_string()))?;
            let mut next = arrivals.sample(rng);
            for i in 1..=n_steps {
                let end = i as f64 * step;
                x *= decay;
                while next <= end {
                    x += draw_jump(&jump, rng) * (-rate * (end - next)).exp();
                    next += arrivals.sample(rng);
                }
                path.push(x);
            }
        }
    }
    Ok(path)
}

/// Everything needed to simulate a superposition ensemble.
#[derive(Debug, Clone)]
pub struct SimConfig {
    /// Degenerate or discrete.
    pub mixing: MixingMeasure,
    /// Gamma or compound-Poisson driven, optionally centered.
    pub marginal: MarginalLaw,
    pub horizon: f64,
    pub step: f64,
    pub replicas: usize,
    pub seed: u64,
    /// Number of atoms kept; `None` keeps the fewest atoms whose neglected
    /// mass is below [`AUTO_TRUNCATION_MASS`].
    pub truncation: Option<usize>,
}

/// Seed of one replica: stream `stream` of the ChaCha generator keyed by `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SeedRecord {
    pub replica: usize,
    pub seed: u64,
    pub stream: u64,
}

/// The random number generator used for replica `replica`.
pub fn replica_rng(seed: u64, replica: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica as u64);
    rng
}

/// Simulated superposition trajectories.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathEnsemble {
    pub step: f64,
    pub horizon: f64,
    /// `paths[r][i]` is `X(iΔ)` in replica `r`.
    pub paths: Vec<Vec<f64>>,
    pub rates: Vec<f64>,
    pub weights: Vec<f64>,
    pub seeds: Vec<SeedRecord>,
    /// Mixing mass dropped by truncation, before renormalization.
    pub truncated_mass: f64,
    pub warnings: Vec<String>,
}

impl PathEnsemble {
    pub fn replicas(&self) -> usize {
        self.paths.len()
    }

    pub fn times(&self) -> Vec<f64> {
        let n = self.paths.first().map_or(0, Vec::len);
        (0..n).map(|i| i as f64 * self.step).collect()
    }

    /// Raw paths as `replica,t,x` rows. Output grows with replicas × points.
    pub fn write_paths_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "replica,t,x")?;
        for (r, path) in self.paths.iter().enumerate() {
            for (i, x) in path.iter().enumerate() {
                writeln!(out, "{r},{:.16e},{:.16e}", i as f64 * self.step, x)?;
            }
        }
        Ok(())
    }
}

fn component_bdlp(marginal: &MarginalLaw) -> Result<(f64, JumpLaw)> {
    match *marginal.kind() {
        MarginalKind::Gamma { shape, rate } => Ok((shape, JumpLaw::Exponential { rate })),
        MarginalKind::CompoundPoissonDriven { jump, intensity } => Ok((intensity, jump)),
        _ => Err(Error::Unsupported(
            "simulation needs a Gamma or compound-Poisson driven marginal; other BDLPs have no exact scheme here".into(),
        )),
    }
}

fn steps_for(horizon: f64, step: f64) -> Result<usize> {
    if !(step.is_finite() && step > 0.0 && horizon.is_finite() && horizon >= step) {
        return Err(Error::config(format!("need 0 < step <= horizon, got step {step}, horizon {horizon}")));
    }
    Ok((horizon / step * (1.0 + 1e-12)).floor() as usize)
}

/// Kept atoms, renormalized weights and the dropped mass.
fn truncate(mixing: &MixingMeasure, truncation: Option<usize>) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let (rates, weights) = mixing.atoms().ok_or_else(|| {
        Error::Unsupported("simulation needs a degenerate or discrete mixing measure".into())
    })?;
    let prior = match mixing {
        MixingMeasure::Discrete(d) => d.discarded_mass(),
        _ => 0.0,
    };
    let keep = match truncation {
        Some(0) => return Err(Error::config("truncation must keep at least one component")),
        Some(k) => k.min(rates.len()),
        None => {
            let mut remaining: f64 = weights.iter().sum();
            let mut k = 0;
            while k < weights.len() && remaining >= AUTO_TRUNCATION_MASS {
                remaining -= weights[k];
                k += 1;
            }
            k.max(1)
        }
    };
    if keep > MAX_COMPONENTS {
        return Err(Error::Size(format!("{keep} components exceed the limit of {MAX_COMPONENTS}")));
    }
    let kept: f64 = weights[..keep].iter().sum();
    let dropped = (1.0 - kept).max(0.0) * (1.0 - prior) + prior;
    let rates = rates[..keep].to_vec();
    let weights: Vec<f64> = weights[..keep].iter().map(|w| w / kept).collect();
    Ok((rates, weights, dropped))
}

/// Simulates `cfg.replicas` independent superposition paths.
pub fn superposition_path(cfg: &SimConfig) -> Result<PathEnsemble> {
    if cfg.replicas == 0 {
        return Err(Error::config("need at least one replica"));
    }
    let n_steps = steps_for(cfg.horizon, cfg.step)?;
    if cfg.replicas.saturating_mul(n_steps + 1) > MAX_STORED_VALUES {
        return Err(Error::Size(format!(
            "{} replicas × {} points exceed the storage limit of {MAX_STORED_VALUES} values",
            cfg.replicas,
            n_steps + 1
        )));
    }
    let (nu, jump) = component_bdlp(&cfg.marginal)?;
    let (rates, weights, dropped) = truncate(&cfg.mixing, cfg.truncation)?;
    let mut warnings = Vec::new();
    if dropped > TRUNCATION_WARNING_MASS {
        warnings.push(format!(
            "truncation to {} components drops mixing mass {dropped:.3e} before renormalization",
            rates.len()
        ));
    }
    let shift = if cfg.marginal.is_centered() {
        cfg.marginal.with_centering(false).cumulant(1)?
    } else {
        0.0
    };
    let paths = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(cfg.seed, r);
            let mut total = vec![-shift; n_steps + 1];
            for (&rate, &w) in rates.iter().zip(&weights) {
                if w == 0.0 {
                    continue;
                }
                let bdlp = Bdlp::CompoundPoisson { intensity: w * nu, jump };
                let path = ou_component_path(rate, bdlp, Start::Stationary, cfg.step, n_steps, &mut rng)?;
                for (acc, x) in total.iter_mut().zip(path) {
                    *acc += x;
                }
            }
            Ok(total)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PathEnsemble {
        step: cfg.step,
        horizon: cfg.horizon,
        paths,
        rates,
        weights,
        seeds: (0..cfg.replicas)
            .map(|r| SeedRecord {
                replica: r,
                seed: cfg.seed,
                stream: r as u64,
            })
            .collect(),
        truncated_mass: dropped,
        warnings,
    })
}

/// Aggregated paths `Y(t_j)` per replica.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregatePaths {
    pub kind: AggregateKind,
    pub times: Vec<f64>,
    /// `values[r][j]` is `Y(times[j])` in replica `r`.
    pub values: Vec<Vec<f64>>,
}

/// `X*(t)` by the trapezoidal rule on the skeleton, or `X+(t)` at integer
/// times (which needs `1/Δ` to be an integer).
pub fn aggregate_path(ens: &PathEnsemble, kind: AggregateKind) -> Result<AggregatePaths> {
    let n = ens.paths.first().map_or(0, Vec::len);
    match kind {
        AggregateKind::Integrated => {
            let half = 0.5 * ens.step;
            let values = ens
                .paths
                .iter()
                .map(|p| {
                    let mut acc = 0.0;
                    let mut out = Vec::with_capacity(n);
                    out.push(0.0);
                    for w in p.windows(2) {
                        acc += half * (w[0] + w[1]);
                        out.push(acc);
                    }
                    out
                })
                .collect();
            Ok(AggregatePaths {
                kind,
                times: ens.times(),
                values,
            })
        }
        AggregateKind::PartialSum => {
            let per_unit = (1.0 / ens.step).round();
            if per_unit < 1.0 || (per_unit * ens.step - 1.0).abs() > 1e-9 {
                return Err(Error::config(format!(
                    "partial sums sample integer times, so 1/step must be an integer; step = {}",
                    ens.step
                )));
            }
            let stride = per_unit as usize;
            let units = (n - 1) / stride;
            let values = ens
                .paths
                .iter()
                .map(|p| {
                    let mut acc = 0.0;
                    let mut out = Vec::with_capacity(units + 1);
                    out.push(0.0);
                    for i in 1..=units {
                        acc += p[i * stride];
                        out.push(acc);
                    }
                    out
                })
                .collect();
            Ok(AggregatePaths {
                kind,
                times: (0..=units).map(|i| i as f64).collect(),
                values,
            })
        }
    }
}

fn grid_indices(times: &[f64], subgrid: &[f64]) -> Result<Vec<usize>> {
    subgrid
        .iter()
        .map(|&t| {
            times
                .iter()
                .position(|&s| (s - t).abs() <= 1e-9 * t.abs().max(1.0))
                .ok_or_else(|| Error::config(format!("t = {t} is not on the simulated grid")))
        })
        .collect()
}

/// Grouped jackknife: the estimate from all data and its standard error.
///
/// `stat` maps a set of per-group sufficient statistics (already summed)
/// to an estimate; `groups` holds one summary per group.
fn grouped_jackknife<S, F>(groups: &[S], combine: impl Fn(&[&S]) -> S, stat: F) -> (f64, f64)
where
    F: Fn(&S) -> f64,
{
    let all: Vec<&S> = groups.iter().collect();
    let full = stat(&combine(&all));
    let g = groups.len();
    if g < 2 {
        return (full, f64::NAN);
    }
    let leave_out: Vec<f64> = (0..g)
        .map(|skip| {
            let rest: Vec<&S> = groups.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, s)| s).collect();
            stat(&combine(&rest))
        })
        .collect();
    let mean = leave_out.iter().sum::<f64>() / g as f64;
    let var = leave_out.iter().map(|v| (v - mean).powi(2)).sum::<f64>() * (g as f64 - 1.0) / g as f64;
    (full, var.sqrt())
}

fn group_ranges(n: usize) -> Vec<std::ops::Range<usize>> {
    let g = JACKKNIFE_GROUPS.min(n);
    (0..g).map(|i| (i * n / g)..((i + 1) * n / g)).collect()
}

/// Unbiased k-statistics `k_1..k_4` of a sample.
pub fn k_statistics(sample: &[f64]) -> [f64; 4] {
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in sample {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let k2 = n / (n - 1.0) * m2;
    let k3 = n * n / ((n - 1.0) * (n - 2.0)) * m3;
    let k4 = n * n * ((n + 1.0) * m4 - 3.0 * (n - 1.0) * m2 * m2) / ((n - 1.0) * (n - 2.0) * (n - 3.0));
    [mean, k2, k3, k4]
}

fn column(values: &[Vec<f64>], j: usize, rows: std::ops::Range<usize>) -> impl Iterator<Item = f64> + '_ {
    values[rows].iter().map(move |r| r[j])
}

/// `E|Y(t)|^q` by ensemble averages with grouped-jackknife standard errors.
/// Exponents above 4 are flagged as Monte Carlo unreliable.
pub fn empirical_moments(agg: &AggregatePaths, exponents: &[f64], subgrid: &[f64]) -> Result<MomentTable> {
    if exponents.is_empty() || exponents.iter().any(|q| !(*q > 0.0)) {
        return Err(Error::config("moment exponents must be positive"));
    }
    let r = agg.values.len();
    if r < 2 {
        return Err(Error::InsufficientReplicas { needed: 2, have: r });
    }
    let idx = grid_indices(&agg.times, subgrid)?;
    let ranges = group_ranges(r);
    let mut values = vec![Vec::with_capacity(idx.len()); exponents.len()];
    let mut errors = values.clone();
    for (qi, &q) in exponents.iter().enumerate() {
        for &j in &idx {
            let groups: Vec<(f64, f64)> = ranges
                .iter()
                .map(|g| (column(&agg.values, j, g.clone()).map(|y| y.abs().powf(q)).sum(), g.len() as f64))
                .collect();
            let (est, se) = grouped_jackknife(
                &groups,
                |parts| parts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1)),
                |s| s.0 / s.1,
            );
            values[qi].push(est);
            errors[qi].push(se);
        }
    }
    Ok(MomentTable {
        kind: agg.kind,
        method: Method::Empirical,
        exponents: exponents.to_vec(),
        times: subgrid.to_vec(),
        values,
        std_errors: Some(errors),
        mc_unreliable: exponents.iter().map(|&q| q > RELIABLE_MOMENT_LIMIT).collect(),
    })
}

/// k-statistic estimates of `κ^{(m)}(t)` for `m <= 4`, with grouped
/// jackknife standard errors. Orders 3 and 4 need at least 30 replicas.
pub fn empirical_cumulants(agg: &AggregatePaths, orders: &[u32], subgrid: &[f64]) -> Result<CumulantTable> {
    validate_grid(orders, subgrid)?;
    if let Some(m) = orders.iter().find(|m| **m > 4) {
        return Err(Error::Unsupported(format!("k-statistics are provided up to order 4, got {m}")));
    }
    let r = agg.values.len();
    let needed = if orders.iter().any(|m| *m >= 3) { 30 } else { 4 };
    if r < needed {
        return Err(Error::InsufficientReplicas { needed, have: r });
    }
    let idx = grid_indices(&agg.times, subgrid)?;
    let ranges = group_ranges(r);
    let mut values = vec![Vec::with_capacity(idx.len()); orders.len()];
    let mut errors = values.clone();
    for &j in &idx {
        let groups: Vec<Vec<f64>> = ranges.iter().map(|g| column(&agg.values, j, g.clone()).collect()).collect();
        for (oi, &m) in orders.iter().enumerate() {
            let (est, se) = grouped_jackknife(
                &groups,
                |parts| parts.iter().flat_map(|p| p.iter().copied()).collect(),
                |sample| k_statistics(sample)[m as usize - 1],
            );
            values[oi].push(est);
            errors[oi].push(se);
        }
    }
    Ok(CumulantTable {
        kind: agg.kind,
        method: Method::Empirical,
        orders: orders.to_vec(),
        times: subgrid.to_vec(),
        marginal_cumulants: vec![f64::NAN; orders.len()],
        factors: vec![vec![f64::NAN; subgrid.len()]; orders.len()],
        values,
        std_errors: Some(errors),
    })
}

/// One lag of the empirical autocorrelation function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AutocorrelationEstimate {
    pub lag: f64,
    pub estimate: f64,
    pub std_error: f64,
}

#[derive(Clone, Copy, Default)]
struct LagSums {
    n: f64,
    s1: f64,
    s2: f64,
    pairs: f64,
    cross: f64,
}

/// Autocorrelation of the skeleton at the given lags, pooling all times and
/// replicas under stationarity. Standard errors come from a grouped
/// jackknife over replicas.
pub fn empirical_autocorrelation(ens: &PathEnsemble, lags: &[f64]) -> Result<Vec<AutocorrelationEstimate>> {
    let r = ens.replicas();
    if r < 2 {
        return Err(Error::InsufficientReplicas { needed: 2, have: r });
    }
    let n = ens.paths[0].len();
    let ranges = group_ranges(r);
    lags.iter()
        .map(|&lag| {
            let h = (lag / ens.step).round();
            if !(h >= 0.0) || (h * ens.step - lag).abs() > 1e-9 * lag.max(1.0) || h as usize >= n {
                return Err(Error::config(format!("lag {lag} is not a multiple of the step within the horizon")));
            }
            let h = h as usize;
            let groups: Vec<LagSums> = ranges
                .iter()
                .map(|g| {
                    let mut s = LagSums::default();
                    for p in &ens.paths[g.clone()] {
                        for (i, &x) in p.iter().enumerate() {
                            s.n += 1.0;
                            s.s1 += x;
                            s.s2 += x * x;
                            if i + h < n {
                                s.pairs += 1.0;
                                s.cross += x * p[i + h];
                            }
                        }
                    }
                    s
                })
                .collect();
            let (estimate, std_error) = grouped_jackknife(
                &groups,
                |parts| {
                    parts.iter().fold(LagSums::default(), |a, p| LagSums {
                        n: a.n + p.n,
                        s1: a.s1 + p.s1,
                        s2: a.s2 + p.s2,
                        pairs: a.pairs + p.pairs,
                        cross: a.cross + p.cross,
                    })
                },
                |s| {
                    let mean = s.s1 / s.n;
                    (s.cross / s.pairs - mean * mean) / (s.s2 / s.n - mean * mean)
                },
            );
            Ok(AutocorrelationEstimate { lag, estimate, std_error })
        })
        .collect()
}
