//! Selfdecomposable marginal laws.
//!
//! A [`MarginalLaw`] is the stationary one-dimensional law of the supOU
//! process. It supplies the cumulant generating function `K(u) = log E e^{uX}`
//! on the real axis, cumulants of every order, and the cumulant function of
//! the background driving Lévy process (BDLP), `K_L(u) = u K'(u)`.
//!
//! Every law here has a CGF that is analytic in a disc around the origin,
//! which is what the cumulant formulas need. Laws without that property
//! (Student t, for instance) are not representable.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadConfig};
use crate::special;

/// Jump-size distribution of a compound Poisson BDLP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JumpLaw {
    Exponential { rate: f64 },
    Deterministic { size: f64 },
}

impl JumpLaw {
    /// `E[J^m]`.
    pub fn moment(&self, m: u32) -> f64 {
        match *self {
            JumpLaw::Exponential { rate } => special::gamma(f64::from(m) + 1.0) / rate.powi(m as i32),
            JumpLaw::Deterministic { size } => size.powi(m as i32),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MarginalKind {
    Gaussian { variance: f64 },
    Gamma { shape: f64, rate: f64 },
    InverseGaussian { delta: f64, gamma: f64 },
    /// Normal inverse Gaussian with `|beta| < alpha`.
    Nig { alpha: f64, beta: f64, delta: f64, mu: f64 },
    /// Stationary law of an OU process whose BDLP is compound Poisson with
    /// the given jump rate per unit (BDLP) time.
    CompoundPoissonDriven { jump: JumpLaw, intensity: f64 },
}

/// A marginal law, optionally shifted to mean zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarginalLaw {
    kind: MarginalKind,
    centered: bool,
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::config(format!("{name} must be a positive finite number, got {v}")))
    }
}

/// Coefficients of `d^m/du^m (γ² - 2u)^{1/2} = c_m (γ² - 2u)^{1/2 - m}`.
fn ig_root_coefficients(order: u32) -> Vec<f64> {
    let mut c = vec![1.0];
    for m in 0..order {
        // d/du (γ²-2u)^{1/2-m} = (1/2 - m)(-2)(γ²-2u)^{-1/2-m}
        let next = c[m as usize] * (2.0 * f64::from(m) - 1.0);
        c.push(next);
    }
    c
}

/// `P_m` in `d^m/dy^m (a² - y²)^{1/2} = P_m(y) (a² - y²)^{1/2 - m}`, as
/// coefficient vectors in `y`, for `m = 0..=order`.
fn nig_root_polynomials(a2: f64, order: u32) -> Vec<Vec<f64>> {
    let mut polys = vec![vec![1.0]];
    for m in 0..order as usize {
        let p = &polys[m];
        // P_{m+1} = P_m' (a² - y²) + (2m - 1) y P_m
        let mut next = vec![0.0; p.len() + 1];
        for (k, &c) in p.iter().enumerate().skip(1) {
            let d = c * k as f64;
            next[k - 1] += d * a2;
            next[k + 1] -= d;
        }
        for (k, &c) in p.iter().enumerate() {
            next[k + 1] += (2.0 * m as f64 - 1.0) * c;
        }
        polys.push(next);
    }
    polys
}

fn horner(p: &[f64], y: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, &c| acc * y + c)
}

impl MarginalLaw {
    pub fn gaussian(variance: f64) -> Result<Self> {
        Ok(Self::uncentered(MarginalKind::Gaussian {
            variance: positive("variance", variance)?,
        }))
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        Ok(Self::uncentered(MarginalKind::Gamma {
            shape: positive("shape", shape)?,
            rate: positive("rate", rate)?,
        }))
    }

    pub fn inverse_gaussian(delta: f64, gamma: f64) -> Result<Self> {
        Ok(Self::uncentered(MarginalKind::InverseGaussian {
            delta: positive("delta", delta)?,
            gamma: positive("gamma", gamma)?,
        }))
    }

    pub fn nig(alpha: f64, beta: f64, delta: f64, mu: f64) -> Result<Self> {
        let alpha = positive("alpha", alpha)?;
        if !(beta.is_finite() && beta.abs() < alpha) {
            return Err(Error::config(format!(
                "NIG needs |beta| < alpha for an analytic CGF, got beta = {beta}, alpha = {alpha}"
            )));
        }
        if !mu.is_finite() {
            return Err(Error::config("NIG mu must be finite"));
        }
        Ok(Self::uncentered(MarginalKind::Nig {
            alpha,
            beta,
            delta: positive("delta", delta)?,
            mu,
        }))
    }

    pub fn compound_poisson_driven(jump: JumpLaw, intensity: f64) -> Result<Self> {
        match jump {
            JumpLaw::Exponential { rate } => positive("jump rate", rate)?,
            JumpLaw::Deterministic { size } => positive("jump size", size)?,
        };
        Ok(Self::uncentered(MarginalKind::CompoundPoissonDriven {
            jump,
            intensity: positive("intensity", intensity)?,
        }))
    }

    fn uncentered(kind: MarginalKind) -> Self {
        MarginalLaw { kind, centered: false }
    }

    /// The same law shifted to mean zero.
    pub fn centered(self) -> Self {
        MarginalLaw { centered: true, ..self }
    }

    pub fn with_centering(self, centered: bool) -> Self {
        MarginalLaw { centered, ..self }
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    pub fn kind(&self) -> &MarginalKind {
        &self.kind
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self.kind, MarginalKind::Gaussian { .. })
    }

    /// Radius of the largest disc around 0 on which the CGF is analytic.
    pub fn radius_of_analyticity(&self) -> f64 {
        match self.kind {
            MarginalKind::Gaussian { .. } => f64::INFINITY,
            MarginalKind::Gamma { rate, .. } => rate,
            MarginalKind::InverseGaussian { gamma, .. } => 0.5 * gamma * gamma,
            MarginalKind::Nig { alpha, beta, .. } => alpha - beta.abs(),
            MarginalKind::CompoundPoissonDriven { jump, .. } => match jump {
                JumpLaw::Exponential { rate } => rate,
                JumpLaw::Deterministic { .. } => f64::INFINITY,
            },
        }
    }

    fn check_domain(&self, u: f64) -> Result<()> {
        let r = self.radius_of_analyticity();
        if u.is_finite() && u.abs() < r {
            Ok(())
        } else {
            Err(Error::domain(format!("|u| = {} is outside the analyticity radius {r}", u.abs())))
        }
    }

    fn raw_mean(&self) -> f64 {
        match self.kind {
            MarginalKind::Gaussian { .. } => 0.0,
            MarginalKind::Gamma { shape, rate } => shape / rate,
            MarginalKind::InverseGaussian { delta, gamma } => delta / gamma,
            MarginalKind::Nig { alpha, beta, delta, mu } => mu + delta * beta / (alpha * alpha - beta * beta).sqrt(),
            MarginalKind::CompoundPoissonDriven { jump, intensity } => intensity * jump.moment(1),
        }
    }

    fn shift(&self) -> f64 {
        if self.centered {
            self.raw_mean()
        } else {
            0.0
        }
    }

    /// `K(u) = log E e^{uX}` for `|u|` below the analyticity radius.
    pub fn cgf(&self, u: f64) -> Result<f64> {
        self.check_domain(u)?;
        let raw = match self.kind {
            MarginalKind::Gaussian { variance } => 0.5 * variance * u * u,
            MarginalKind::Gamma { shape, rate } => -shape * (-u / rate).ln_1p(),
            MarginalKind::InverseGaussian { delta, gamma } => delta * (gamma - (gamma * gamma - 2.0 * u).sqrt()),
            MarginalKind::Nig { alpha, beta, delta, mu } => {
                let a2 = alpha * alpha;
                mu * u + delta * ((a2 - beta * beta).sqrt() - (a2 - (beta + u) * (beta + u)).sqrt())
            }
            MarginalKind::CompoundPoissonDriven { jump, intensity } => match jump {
                JumpLaw::Exponential { rate } => -intensity * (-u / rate).ln_1p(),
                JumpLaw::Deterministic { size } => intensity * special::exp_ratio_integral(size * u),
            },
        };
        Ok(raw - self.shift() * u)
    }

    /// `K'(u)`, including the centering shift.
    pub fn cgf_derivative(&self, u: f64) -> Result<f64> {
        self.check_domain(u)?;
        let raw = match self.kind {
            MarginalKind::Gaussian { variance } => variance * u,
            MarginalKind::Gamma { shape, rate } => shape / (rate - u),
            MarginalKind::InverseGaussian { delta, gamma } => delta / (gamma * gamma - 2.0 * u).sqrt(),
            MarginalKind::Nig { alpha, beta, delta, mu } => {
                let y = beta + u;
                mu + delta * y / (alpha * alpha - y * y).sqrt()
            }
            MarginalKind::CompoundPoissonDriven { jump, intensity } => match jump {
                JumpLaw::Exponential { rate } => intensity / (rate - u),
                JumpLaw::Deterministic { size } => {
                    let z = size * u;
                    if z == 0.0 {
                        intensity * size
                    } else {
                        intensity * size * z.exp_m1() / z
                    }
                }
            },
        };
        Ok(raw - self.shift())
    }

    /// Cumulant generating function of the BDLP, `u K'(u)`.
    pub fn bdlp_cgf(&self, u: f64) -> Result<f64> {
        Ok(u * self.cgf_derivative(u)?)
    }

    /// The `m`-th cumulant `K^{(m)}(0)`.
    pub fn cumulant(&self, m: u32) -> Result<f64> {
        if m == 0 {
            return Err(Error::config("cumulant order must be at least 1"));
        }
        if m == 1 {
            return Ok(self.raw_mean() - self.shift());
        }
        let mf = f64::from(m);
        Ok(match self.kind {
            MarginalKind::Gaussian { variance } => {
                if m == 2 {
                    variance
                } else {
                    0.0
                }
            }
            MarginalKind::Gamma { shape, rate } => (special::ln_gamma(mf) + shape.ln() - mf * rate.ln()).exp(),
            MarginalKind::InverseGaussian { delta, gamma } => {
                let c = ig_root_coefficients(m)[m as usize];
                -delta * c * gamma.powf(1.0 - 2.0 * mf)
            }
            MarginalKind::Nig { alpha, beta, delta, .. } => {
                let a2 = alpha * alpha;
                let p = &nig_root_polynomials(a2, m)[m as usize];
                -delta * horner(p, beta) * (a2 - beta * beta).powf(0.5 - mf)
            }
            MarginalKind::CompoundPoissonDriven { jump, intensity } => intensity * jump.moment(m) / mf,
        })
    }

    /// Cumulants of orders `1..=max_order`.
    pub fn cumulants(&self, max_order: u32) -> Result<Vec<f64>> {
        (1..=max_order).map(|m| self.cumulant(m)).collect()
    }
}

/// Checks `K(u) = ∫_0^∞ K_L(e^{-s} u) ds` numerically.
///
/// The integral is truncated at `S` where the neglected tail is provably
/// below `tol / 2`: for `|v| <= |u|`, `|K_L(v)| <= |v| L` with `L` the
/// largest `|K'|` on `[-|u|, |u|]`, so the tail is at most `L |u| e^{-S}`.
pub fn verify_bdlp_integral(law: &MarginalLaw, u: f64, tol: f64) -> Result<bool> {
    if !(tol > 0.0) {
        return Err(Error::config("tolerance must be positive"));
    }
    let target = law.cgf(u)?;
    if u == 0.0 {
        return Ok(target == 0.0);
    }
    let a = u.abs();
    let lipschitz = law
        .cgf_derivative(-a)?
        .abs()
        .max(law.cgf_derivative(a)?.abs());
    let horizon = (2.0 * lipschitz * a / tol).ln().max(1.0);
    let cfg = QuadConfig::default().with_abs_tol(0.25 * tol).with_rel_tol(1e-12);
    let integrand = |s: f64| law.bdlp_cgf((-s).exp() * u).unwrap_or(f64::NAN);
    let result = integrate(integrand, 0.0, horizon, &[1.0, 5.0], &cfg)?;
    Ok((result.value - target).abs() <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ig(delta: f64, gamma: f64) -> MarginalLaw {
        MarginalLaw::inverse_gaussian(delta, gamma).unwrap()
    }

    fn all_variants() -> Vec<MarginalLaw> {
        vec![
            MarginalLaw::gaussian(1.3).unwrap(),
            MarginalLaw::gamma(2.0, 1.5).unwrap(),
            ig(1.0, 2.0),
            MarginalLaw::nig(2.0, 0.5, 1.2, -0.3).unwrap(),
            MarginalLaw::compound_poisson_driven(JumpLaw::Exponential { rate: 2.0 }, 1.5).unwrap(),
            MarginalLaw::compound_poisson_driven(JumpLaw::Deterministic { size: 0.7 }, 2.0).unwrap(),
        ]
    }

    #[test]
    fn cgf_examples() {
        assert_eq!(ig(1.0, 1.0).cgf(0.0).unwrap(), 0.0);
        assert_eq!(MarginalLaw::gaussian(2.0).unwrap().cgf(3.0).unwrap(), 9.0);
        assert!((ig(1.0, 2.0).cgf(1.0).unwrap() - (2.0 - 2f64.sqrt())).abs() < 1e-15);
        assert!(matches!(ig(1.0, 2.0).cgf(2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn cumulant_examples() {
        let g = MarginalLaw::gaussian(2.5).unwrap();
        assert_eq!(g.cumulant(4).unwrap(), 0.0);
        assert_eq!(g.cumulant(2).unwrap(), 2.5);
        let c = ig(1.0, 1.0).cumulants(3).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-15 && (c[1] - 1.0).abs() < 1e-15 && (c[2] - 3.0).abs() < 1e-15);
        let n = MarginalLaw::nig(2.0, 0.0, 1.0, 0.0).unwrap();
        assert!((n.cumulant(2).unwrap() - 0.5).abs() < 1e-15);
        assert!((n.cumulant(4).unwrap() - 0.375).abs() < 1e-15);
        assert_eq!(n.cumulant(3).unwrap(), 0.0);
        assert!((MarginalLaw::gamma(3.0, 2.0).unwrap().cumulant(2).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn bdlp_examples() {
        for law in all_variants() {
            assert_eq!(law.bdlp_cgf(0.0).unwrap(), 0.0);
        }
        assert_eq!(MarginalLaw::gaussian(1.0).unwrap().bdlp_cgf(2.0).unwrap(), 4.0);
        assert!((ig(1.0, 2.0).bdlp_cgf(1.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn exponential_jumps_reproduce_gamma() {
        let cp = MarginalLaw::compound_poisson_driven(JumpLaw::Exponential { rate: 2.0 }, 1.5).unwrap();
        let g = MarginalLaw::gamma(1.5, 2.0).unwrap();
        for m in 1..=8 {
            let (a, b) = (cp.cumulant(m).unwrap(), g.cumulant(m).unwrap());
            assert!((a - b).abs() <= 1e-13 * b);
        }
        assert!((cp.cgf(0.7).unwrap() - g.cgf(0.7).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn centering_removes_the_mean_only() {
        for law in all_variants() {
            let c = law.centered();
            assert!(c.cumulant(1).unwrap().abs() < 1e-14);
            for m in 2..=5 {
                assert_eq!(c.cumulant(m).unwrap(), law.cumulant(m).unwrap());
            }
            let u = 0.1 * law.radius_of_analyticity().min(1.0);
            let shift = law.cumulant(1).unwrap() * u;
            assert!((c.cgf(u).unwrap() - (law.cgf(u).unwrap() - shift)).abs() < 1e-14);
        }
    }

    /// Central-difference stencil for the `m`-th derivative at 0 with step `h`.
    fn central_difference(f: &dyn Fn(f64) -> f64, m: u32, h: f64) -> f64 {
        // Σ_k (-1)^k C(m,k) f((m/2 - k) h) / h^m
        let half = f64::from(m) / 2.0;
        let mut acc = 0.0;
        for k in 0..=m {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * special::binomial(m, k) * f((half - f64::from(k)) * h);
        }
        acc / h.powi(m as i32)
    }

    #[test]
    fn cumulants_match_richardson_finite_differences() {
        for law in all_variants() {
            let radius = law.radius_of_analyticity().min(2.0);
            for m in 1..=6u32 {
                let f = |u: f64| law.cgf(u).unwrap();
                let h = 0.08 * radius;
                let d: Vec<f64> = (0..3).map(|j| central_difference(&f, m, h / f64::from(1 << j))).collect();
                let r1 = (4.0 * d[1] - d[0]) / 3.0;
                let r2 = (4.0 * d[2] - d[1]) / 3.0;
                let extrapolated = (16.0 * r2 - r1) / 15.0;
                let exact = law.cumulant(m).unwrap();
                let scale = exact.abs().max(law.cumulant(2).unwrap().abs() * radius.powi(2 - m as i32) * 1e-3);
                assert!(
                    (extrapolated - exact).abs() <= 1e-5 * scale,
                    "{law:?} m={m}: fd {extrapolated} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn even_cumulants_are_positive() {
        for law in all_variants().into_iter().filter(|l| !l.is_gaussian()) {
            for m in (2..=10).step_by(2) {
                assert!(law.cumulant(m).unwrap() > 0.0, "{law:?} m={m}");
            }
        }
    }

    #[test]
    fn bdlp_identity_holds_on_a_grid() {
        for law in all_variants() {
            let half = 0.5 * law.radius_of_analyticity().min(4.0);
            for k in -4..=4 {
                let u = half * f64::from(k) / 4.0;
                assert!(verify_bdlp_integral(&law, u, 1e-8).unwrap(), "{law:?} u={u}");
                assert!(verify_bdlp_integral(&law.centered(), u, 1e-8).unwrap(), "{law:?} u={u}");
            }
        }
    }

    #[test]
    fn bdlp_examples_from_the_catalogue() {
        assert!(verify_bdlp_integral(&MarginalLaw::gaussian(1.0).unwrap(), 1.0, 1e-8).unwrap());
        assert!(verify_bdlp_integral(&ig(1.0, 2.0), 1.0, 1e-8).unwrap());
        assert!(verify_bdlp_integral(&MarginalLaw::gamma(2.0, 1.0).unwrap(), 0.5, 1e-8).unwrap());
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(MarginalLaw::nig(1.0, 1.0, 1.0, 0.0).is_err());
        assert!(MarginalLaw::gamma(-1.0, 1.0).is_err());
        assert!(MarginalLaw::gaussian(0.0).is_err());
        assert!(MarginalLaw::gamma(1.0, 1.0).unwrap().cumulant(0).is_err());
    }
}
