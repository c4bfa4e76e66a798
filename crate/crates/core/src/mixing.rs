//! Mixing measures: the distribution `π` of mean-reversion rates.
//!
//! The Laplace transform of `π` is the correlation function of the supOU
//! process, and its mass near the origin (regular variation with index `α`)
//! decides how slowly correlations decay. All measures are probability
//! measures on `(0, ∞)` and are immutable after construction.
//!
//! Integrals against continuous measures are evaluated in the coordinate
//! `s = ln ξ`. A density behaving like `ξ^{α-1}` at the origin turns into the
//! exponentially decaying `e^{α s}`, and the characteristic scale of an
//! integrand such as `e^{-τ ξ}` becomes a shift `s ≈ -ln τ`, which is passed
//! to the integrator as an anchor.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_line, QuadConfig};
use crate::special;

/// A measure density on `(0, ∞)`.
pub type DensityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Finitely many atoms `λ_k` with probabilities `p_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    rates: Vec<f64>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
    tail_index: Option<f64>,
    tail_scale: Option<f64>,
    discarded_mass: f64,
}

impl DiscreteMeasure {
    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Mass removed by truncating a countable rule before renormalization.
    pub fn discarded_mass(&self) -> f64 {
        self.discarded_mass
    }
}

/// An absolutely continuous measure given by a user density.
#[derive(Clone)]
pub struct DensityMeasure {
    density: DensityFn,
    tail_index: f64,
    tail_scale: f64,
}

impl fmt::Debug for DensityMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityMeasure")
            .field("tail_index", &self.tail_index)
            .field("tail_scale", &self.tail_scale)
            .finish_non_exhaustive()
    }
}

/// How a countably infinite atom rule is cut down to finitely many atoms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    /// Keep exactly this many atoms.
    Atoms(usize),
    /// Keep the fewest atoms whose discarded mass is below the bound.
    TailMass(f64),
}

/// Hard cap on the number of atoms a truncation may produce.
pub const MAX_ATOMS: usize = 5_000_000;

#[derive(Debug, Clone)]
pub enum MixingMeasure {
    /// Point mass at `rate`: a single OU-type process.
    Degenerate { rate: f64 },
    Discrete(DiscreteMeasure),
    /// Gamma(α, 1) with density `ξ^{α-1} e^{-ξ} / Γ(α)`; `r(τ) = (1+τ)^{-α}`.
    GammaMixing { alpha: f64 },
    /// Mittag-Leffler law with `r(τ) = 1 / (1 + τ^α)`.
    MittagLeffler { alpha: f64 },
    Density(DensityMeasure),
}

/// Result of an inverse-moment integral, which may diverge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InverseMoment {
    Finite(f64),
    Divergent,
}

impl InverseMoment {
    pub fn value(self) -> Option<f64> {
        match self {
            InverseMoment::Finite(v) => Some(v),
            InverseMoment::Divergent => None,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::config(format!("{name} must be a positive finite number, got {v}")))
    }
}

fn cumulative(weights: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

/// Hurwitz-type tail `Σ_{k>K} k^{-s}` for `s > 1`.
fn zeta_tail(s: f64, k: usize) -> f64 {
    const SWITCH: usize = 1000;
    if k < SWITCH {
        let head: f64 = ((k + 1)..=SWITCH).map(|j| (j as f64).powf(-s)).sum();
        return head + zeta_tail(s, SWITCH);
    }
    // Euler–Maclaurin from K to infinity.
    let kf = k as f64;
    kf.powf(1.0 - s) / (s - 1.0) - 0.5 * kf.powf(-s) + s / 12.0 * kf.powf(-s - 1.0)
        - s * (s + 1.0) * (s + 2.0) / 720.0 * kf.powf(-s - 3.0)
}

impl MixingMeasure {
    pub fn degenerate(rate: f64) -> Result<Self> {
        Ok(MixingMeasure::Degenerate {
            rate: positive("rate", rate)?,
        })
    }

    /// Finite atoms with probabilities summing to one (within 1e-9).
    pub fn discrete(rates: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!("discrete weights sum to {total}, not 1")));
        }
        Self::discrete_proportional(rates, weights)
    }

    /// Finite atoms with weights proportional to `weights`.
    pub fn discrete_proportional(rates: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if rates.is_empty() || rates.len() != weights.len() {
            return Err(Error::config("discrete measure needs equally many rates and weights (at least one)"));
        }
        for &r in &rates {
            positive("atom rate", r)?;
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::config("discrete weights must be nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::config("discrete weights have zero total mass"));
        }
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        Ok(MixingMeasure::Discrete(DiscreteMeasure {
            cumulative: cumulative(&weights),
            rates,
            weights,
            tail_index: None,
            tail_scale: None,
            discarded_mass: 0.0,
        }))
    }

    /// Countable superposition with `λ_k = rate / k` and `p_k ∝ k^{-(1+α)}`,
    /// truncated and renormalized.
    pub fn zeta_rule(rate: f64, alpha: f64, truncation: Truncation) -> Result<Self> {
        let rate = positive("rate", rate)?;
        let alpha = positive("alpha", alpha)?;
        let s = 1.0 + alpha;
        let zeta = zeta_tail(s, 0);
        let atoms = match truncation {
            Truncation::Atoms(k) if (1..=MAX_ATOMS).contains(&k) => k,
            Truncation::Atoms(k) => {
                return Err(Error::config(format!("atom count must lie in 1..={MAX_ATOMS}, got {k}")))
            }
            Truncation::TailMass(eps) => {
                let eps = positive("tail mass bound", eps)?;
                // Tail mass ~ K^{-α} / (α ζ(1+α)).
                let guess = (1.0 / (eps * alpha * zeta)).powf(1.0 / alpha).ceil();
                if !(guess <= MAX_ATOMS as f64) {
                    return Err(Error::Size(format!(
                        "reaching tail mass {eps:e} with α = {alpha} needs about {guess:e} atoms (cap {MAX_ATOMS})"
                    )));
                }
                let mut k = (guess as usize).max(1);
                while k > 1 && zeta_tail(s, k - 1) / zeta <= eps {
                    k -= 1;
                }
                while zeta_tail(s, k) / zeta > eps {
                    k += 1;
                }
                k
            }
        };
        let rates: Vec<f64> = (1..=atoms).map(|k| rate / k as f64).collect();
        let raw: Vec<f64> = (1..=atoms).map(|k| (k as f64).powf(-s) / zeta).collect();
        let kept: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / kept).collect();
        Ok(MixingMeasure::Discrete(DiscreteMeasure {
            cumulative: cumulative(&weights),
            rates,
            weights,
            tail_index: Some(alpha),
            tail_scale: Some(rate.powf(-alpha) / (alpha * zeta)),
            discarded_mass: zeta_tail(s, atoms) / zeta,
        }))
    }

    pub fn gamma(alpha: f64) -> Result<Self> {
        Ok(MixingMeasure::GammaMixing {
            alpha: positive("alpha", alpha)?,
        })
    }

    /// Mittag-Leffler mixing. Only `0 < α <= 1` defines a probability
    /// measure; `1 < α < 2` is accepted for the closed-form correlation
    /// curve alone.
    pub fn mittag_leffler(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::config(format!("Mittag-Leffler alpha must lie in (0, 2), got {alpha}")));
        }
        Ok(MixingMeasure::MittagLeffler { alpha })
    }

    /// A density on `(0, ∞)` with `π((0, x]) ~ tail_scale · x^tail_index`
    /// as `x → 0`. The density must integrate to one within 1e-8.
    pub fn density(density: DensityFn, tail_index: f64, tail_scale: f64) -> Result<Self> {
        let m = DensityMeasure {
            density,
            tail_index: positive("tail_index", tail_index)?,
            tail_scale: positive("tail_scale", tail_scale)?,
        };
        let measure = MixingMeasure::Density(m);
        let mass = measure.expectation(|_| 1.0, &[])?;
        if (mass - 1.0).abs() > 1e-8 {
            return Err(Error::config(format!("density integrates to {mass}, not 1")));
        }
        Ok(measure)
    }

    /// Regular-variation index of `π` at the origin, when there is one.
    pub fn tail_index(&self) -> Option<f64> {
        match self {
            MixingMeasure::Degenerate { .. } => None,
            MixingMeasure::Discrete(d) => d.tail_index,
            MixingMeasure::GammaMixing { alpha } | MixingMeasure::MittagLeffler { alpha } => Some(*alpha),
            MixingMeasure::Density(d) => Some(d.tail_index),
        }
    }

    /// The constant `c` in `π((0, x]) ~ c · x^α`.
    pub fn tail_scale(&self) -> Option<f64> {
        match self {
            MixingMeasure::Degenerate { .. } => None,
            MixingMeasure::Discrete(d) => d.tail_scale,
            MixingMeasure::GammaMixing { alpha } | MixingMeasure::MittagLeffler { alpha } => {
                Some(1.0 / special::gamma(1.0 + alpha))
            }
            MixingMeasure::Density(d) => Some(d.tail_scale),
        }
    }

    /// Atoms of a purely atomic measure.
    pub fn atoms(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            MixingMeasure::Degenerate { rate } => Some((vec![*rate], vec![1.0])),
            MixingMeasure::Discrete(d) => Some((d.rates.clone(), d.weights.clone())),
            _ => None,
        }
    }

    fn require_probability(&self) -> Result<()> {
        if let MixingMeasure::MittagLeffler { alpha } = self {
            if *alpha > 1.0 {
                return Err(Error::Unsupported(format!(
                    "1/(1+τ^α) with α = {alpha} > 1 is not completely monotone, so no mixing \
                     probability measure exists; only its closed-form correlation is available"
                )));
            }
        }
        Ok(())
    }

    /// Density of `π` in the coordinate `s = ln ξ`, i.e. `p(e^s) e^s`.
    fn log_density(&self, s: f64) -> f64 {
        match self {
            MixingMeasure::GammaMixing { alpha } => (alpha * s - s.exp() - special::ln_gamma(*alpha)).exp(),
            MixingMeasure::MittagLeffler { alpha } => {
                let x = s.exp();
                special::mittag_leffler_density(*alpha, x).map_or(f64::NAN, |d| d * x)
            }
            MixingMeasure::Density(d) => {
                let x = s.exp();
                (d.density)(x) * x
            }
            MixingMeasure::Degenerate { .. } | MixingMeasure::Discrete(_) => 0.0,
        }
    }

    /// `∫ f(ξ) π(dξ)` with the default tolerances.
    ///
    /// `scales` are values of `ξ` around which `f` changes character (for
    /// `e^{-τξ}` that is `1/τ`); they seed the adaptive partition.
    pub fn expectation<F: Fn(f64) -> f64>(&self, f: F, scales: &[f64]) -> Result<f64> {
        self.expectation_with(f, scales, &QuadConfig::default())
    }

    pub fn expectation_with<F: Fn(f64) -> f64>(&self, f: F, scales: &[f64], cfg: &QuadConfig) -> Result<f64> {
        match self {
            MixingMeasure::Degenerate { rate } => Ok(f(*rate)),
            MixingMeasure::Discrete(d) => Ok(d.rates.iter().zip(&d.weights).map(|(&r, &w)| w * f(r)).sum()),
            _ => {
                self.require_probability()?;
                let mut anchors: Vec<f64> = scales
                    .iter()
                    .filter(|x| x.is_finite() && **x > 0.0)
                    .map(|x| x.ln())
                    .collect();
                anchors.push(0.0);
                if let MixingMeasure::GammaMixing { alpha } = self {
                    anchors.push(alpha.max(1.0).ln() + 1.0);
                }
                let g = |s: f64| {
                    let w = self.log_density(s);
                    if w == 0.0 {
                        0.0
                    } else {
                        w * f(s.exp())
                    }
                };
                // Report failures in the original coordinate ξ = e^s.
                integrate_line(g, &anchors, cfg).map(|r| r.value).map_err(|e| match e {
                    Error::Quadrature {
                        value,
                        abs_error,
                        worst_lo,
                        worst_hi,
                    } => Error::Quadrature {
                        value,
                        abs_error,
                        worst_lo: worst_lo.exp(),
                        worst_hi: worst_hi.exp(),
                    },
                    other => other,
                })
            }
        }
    }

    /// Closed-form correlation `r(τ)` where one is known.
    pub fn closed_form_correlation(&self, tau: f64) -> Option<f64> {
        match self {
            MixingMeasure::Degenerate { rate } => Some((-rate * tau).exp()),
            MixingMeasure::Discrete(d) => Some(d.rates.iter().zip(&d.weights).map(|(&r, &w)| w * (-r * tau).exp()).sum()),
            MixingMeasure::GammaMixing { alpha } => Some((1.0 + tau).powf(-alpha)),
            MixingMeasure::MittagLeffler { alpha } => Some(1.0 / (1.0 + tau.powf(*alpha))),
            MixingMeasure::Density(_) => None,
        }
    }

    /// Correlation function `r(τ) = ∫ e^{-τξ} π(dξ)`, closed form when known.
    pub fn correlation(&self, tau: f64) -> Result<f64> {
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(Error::domain(format!("lag must be finite and nonnegative, got {tau}")));
        }
        match self.closed_form_correlation(tau) {
            Some(r) => Ok(r),
            None => self.correlation_quadrature(tau),
        }
    }

    /// Correlation function evaluated by quadrature against `π`.
    pub fn correlation_quadrature(&self, tau: f64) -> Result<f64> {
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(Error::domain(format!("lag must be finite and nonnegative, got {tau}")));
        }
        let scales = if tau > 0.0 { vec![1.0 / tau] } else { vec![] };
        self.expectation(|x| (-tau * x).exp(), &scales)
    }

    /// `π((0, x])`.
    pub fn cdf_near_zero(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::domain(format!("x must be positive, got {x}")));
        }
        match self {
            MixingMeasure::Degenerate { rate } => Ok(if *rate <= x { 1.0 } else { 0.0 }),
            MixingMeasure::Discrete(d) => Ok(d.rates.iter().zip(&d.weights).filter(|(r, _)| **r <= x).map(|(_, w)| w).sum()),
            MixingMeasure::GammaMixing { alpha } => Ok(special::gamma_lr(*alpha, x)),
            MixingMeasure::MittagLeffler { alpha } => {
                self.require_probability()?;
                special::mittag_leffler_neg_complement(*alpha, x.powf(*alpha))
            }
            MixingMeasure::Density(_) => self.expectation(|xi| if xi <= x { 1.0 } else { 0.0 }, &[x]),
        }
    }

    /// `∫_{lower}^∞ ξ^{-power} π(dξ)`.
    ///
    /// With `lower = 0` and `power >= α` the integral diverges at the origin
    /// and [`InverseMoment::Divergent`] is returned.
    pub fn inverse_moment_integral(&self, power: u32, lower: f64) -> Result<InverseMoment> {
        if !(lower >= 0.0) {
            return Err(Error::domain(format!("lower limit must be nonnegative, got {lower}")));
        }
        let p = f64::from(power);
        match self {
            MixingMeasure::Degenerate { rate } => Ok(InverseMoment::Finite(if *rate >= lower { rate.powf(-p) } else { 0.0 })),
            MixingMeasure::Discrete(d) => Ok(InverseMoment::Finite(
                d.rates
                    .iter()
                    .zip(&d.weights)
                    .filter(|(r, _)| **r >= lower)
                    .map(|(r, w)| w * r.powf(-p))
                    .sum(),
            )),
            _ => {
                self.require_probability()?;
                let alpha = self.tail_index().expect("continuous measures carry a tail index");
                if lower == 0.0 && p >= alpha {
                    return Ok(InverseMoment::Divergent);
                }
                if let (MixingMeasure::GammaMixing { alpha }, true) = (self, lower == 0.0) {
                    return Ok(InverseMoment::Finite(
                        (special::ln_gamma(alpha - p) - special::ln_gamma(*alpha)).exp(),
                    ));
                }
                let scales: Vec<f64> = if lower > 0.0 { vec![lower] } else { vec![] };
                let v = self.expectation(|x| if x >= lower { x.powf(-p) } else { 0.0 }, &scales)?;
                Ok(InverseMoment::Finite(v))
            }
        }
    }

    /// Draws one rate from `π`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        match self {
            MixingMeasure::Degenerate { rate } => Ok(*rate),
            MixingMeasure::Discrete(d) => {
                let u: f64 = rng.random::<f64>() * d.cumulative[d.cumulative.len() - 1];
                let idx = d.cumulative.partition_point(|&c| c <= u).min(d.rates.len() - 1);
                Ok(d.rates[idx])
            }
            MixingMeasure::GammaMixing { alpha } => {
                let g = Gamma::new(*alpha, 1.0).map_err(|e| Error::config(e.to_string()))?;
                Ok(g.sample(rng))
            }
            MixingMeasure::MittagLeffler { .. } => Err(Error::Unsupported(
                "sampling the Mittag-Leffler mixing measure is not provided".into(),
            )),
            MixingMeasure::Density(_) => Err(Error::Unsupported("sampling a user density is not provided".into())),
        }
    }
}

/// Reference correlation `E_a(-τ^γ)` (a Mittag-Leffler function, not the
/// Mittag-Leffler distribution). Its mixing measure is not constructed.
pub fn mittag_leffler_function_correlation(a: f64, gamma: f64, tau: f64) -> Result<f64> {
    if !(a > 0.0 && a <= 1.0 && gamma > 0.0 && gamma < 1.0) {
        return Err(Error::config("reference curve needs 0 < a <= 1 and 0 < γ < 1"));
    }
    special::mittag_leffler_neg(a, tau.powf(gamma))
}
