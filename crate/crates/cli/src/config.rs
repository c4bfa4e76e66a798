//! Run configuration: parsing, defaults and conversion into library types.
//!
//! A configuration is a TOML or JSON document. Files ending in `.json` are
//! read as JSON, everything else as TOML. Unknown keys are rejected at
//! every level, including inside `parameters` tables.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use supou::cumulant_engine::AggregateKind;
use supou::marginal::{JumpLaw, MarginalLaw};
use supou::mixing::{MixingMeasure, Truncation};
use supou::scaling::{log_spaced, Window};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindSpec {
    Integrated,
    PartialSum,
}

impl From<KindSpec> for AggregateKind {
    fn from(k: KindSpec) -> Self {
        match k {
            KindSpec::Integrated => AggregateKind::Integrated,
            KindSpec::PartialSum => AggregateKind::PartialSum,
        }
    }
}

/// `{ kind, parameters }` for a mixing measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    pub kind: String,
    #[serde(default)]
    pub parameters: Map<String, Value>,
}

/// `{ kind, parameters, centered }` for a marginal law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarginalSpec {
    pub kind: String,
    #[serde(default)]
    pub parameters: Map<String, Value>,
    #[serde(default = "yes")]
    pub centered: bool,
}

fn yes() -> bool {
    true
}

/// A log-spaced grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        Ok(log_spaced(self.min, self.max, self.count)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrelationSpec {
    pub grid: GridSpec,
    /// Prepends a `τ = 0` row.
    pub include_zero: bool,
}

impl Default for CorrelationSpec {
    fn default() -> Self {
        CorrelationSpec {
            grid: GridSpec { min: 1e-2, max: 1e3, count: 50 },
            include_zero: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub t_min: f64,
    pub t_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSpec {
    pub mixing: MeasureSpec,
    pub marginal: MarginalSpec,
    pub kind: KindSpec,
    pub horizon: f64,
    pub step: f64,
    pub replicas: usize,
    /// Atoms kept from a countable superposition. Omit for automatic truncation.
    pub truncation: Option<usize>,
    /// Times at which cumulants of the aggregate are estimated.
    pub times: Vec<f64>,
    /// Cumulant orders to estimate, at most 4.
    pub orders: Vec<u32>,
    /// Lags of the autocorrelation estimate.
    pub lags: Vec<f64>,
    /// Also writes every raw path. The file holds replicas × (horizon/step + 1) rows.
    pub write_paths: bool,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        SimulationSpec {
            mixing: MeasureSpec {
                kind: "degenerate".into(),
                parameters: params(&[("rate", 1.0)]),
            },
            marginal: MarginalSpec {
                kind: "gamma".into(),
                parameters: params(&[("shape", 1.0), ("rate", 1.0)]),
                centered: true,
            },
            kind: KindSpec::PartialSum,
            horizon: 100.0,
            step: 0.1,
            replicas: 1000,
            truncation: None,
            times: vec![10.0, 50.0, 100.0],
            orders: vec![2, 3, 4],
            lags: vec![1.0, 2.0, 5.0],
            write_paths: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceSpec {
    /// Allowed deviation of a fitted slope from its theoretical value.
    pub slope: f64,
    /// Allowed spread of `τ̂(q)/q` before the test calls it increasing.
    pub ratio: f64,
    /// Relative error of quadrature against closed-form correlations.
    pub correlation: f64,
    /// Relative error of the first-order anchors `I_0(t) = t`, `J_0(t) = ⌊t⌋`.
    pub anchors: f64,
    /// Relative agreement of the two integrated forms.
    pub integrated_forms: f64,
    /// Relative agreement of the two partial-sum forms.
    pub partial_sum_forms: f64,
    /// Allowed distance of Monte Carlo estimates, in standard errors.
    pub monte_carlo_sigmas: f64,
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        ToleranceSpec {
            slope: supou::scaling::SLOPE_TOLERANCE,
            ratio: supou::scaling::RATIO_TOLERANCE,
            correlation: 1e-8,
            anchors: 1e-12,
            integrated_forms: 1e-7,
            partial_sum_forms: 1e-9,
            monte_carlo_sigmas: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySpec {
    /// Tail index of the Gamma mixing measure used by the scaling checks.
    pub alpha: f64,
    /// Tail index the scaling checks compare against. Defaults to `alpha`;
    /// setting it to a wrong value is a negative control.
    pub alpha_claim: Option<f64>,
    /// Replicas of the Monte Carlo check.
    pub replicas: usize,
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec {
            alpha: 0.6,
            alpha_claim: None,
            replicas: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// Output directory. Without one, the main table goes to standard output.
    pub out: Option<PathBuf>,
    pub kind: KindSpec,
    /// Cumulant orders for `cumulants` and `scaling`.
    pub orders: Vec<u32>,
    /// Even moment exponents for `scaling`. Empty means `q*` and `q* + 2`.
    pub exponents: Vec<u32>,
    /// Recomputes the cumulant table with the alternate forms and reports
    /// the largest discrepancy.
    pub cross_form: bool,
    pub mixing: MeasureSpec,
    pub marginal: MarginalSpec,
    /// Time grid of `cumulants` and `scaling`.
    pub grid: GridSpec,
    /// Fit window of `scaling`.
    pub window: WindowSpec,
    pub correlation: CorrelationSpec,
    pub simulation: SimulationSpec,
    pub tolerance: ToleranceSpec,
    pub verify: VerifySpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            out: None,
            kind: KindSpec::Integrated,
            orders: vec![2, 3, 4, 5],
            exponents: Vec::new(),
            cross_form: false,
            mixing: MeasureSpec {
                kind: "gamma".into(),
                parameters: params(&[("alpha", 0.6)]),
            },
            marginal: MarginalSpec {
                kind: "inverse_gaussian".into(),
                parameters: params(&[("delta", 1.0), ("gamma", 1.0)]),
                centered: true,
            },
            grid: GridSpec {
                min: 1e3,
                max: 1e6,
                count: supou::scaling::DEFAULT_POINTS,
            },
            window: WindowSpec {
                t_min: supou::scaling::DEFAULT_WINDOW.t_min,
                t_max: supou::scaling::DEFAULT_WINDOW.t_max,
            },
            correlation: CorrelationSpec::default(),
            simulation: SimulationSpec::default(),
            tolerance: ToleranceSpec::default(),
            verify: VerifySpec::default(),
        }
    }
}

fn params(pairs: &[(&str, f64)]) -> Map<String, Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), Value::from(*v))).collect()
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let parsed = if is_json {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        let cfg: RunConfig = parsed.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks everything that can be checked without computing.
    pub fn validate(&self) -> Result<(), CliError> {
        build_mixing(&self.mixing)?;
        build_marginal(&self.marginal)?;
        build_mixing(&self.simulation.mixing)?;
        build_marginal(&self.simulation.marginal)?;
        self.fit_window()?;
        if self.orders.is_empty() {
            return Err(CliError::Config("`orders` is empty".into()));
        }
        if let Some(q) = self.exponents.iter().find(|q| **q == 0 || **q % 2 == 1) {
            return Err(CliError::Config(format!("moment exponents must be even and positive, got {q}")));
        }
        if let Some(claim) = self.verify.alpha_claim {
            if !(claim.is_finite() && claim > 0.0) {
                return Err(CliError::Config(format!("verify.alpha_claim must be positive, got {claim}")));
            }
        }
        Ok(())
    }

    pub fn fit_window(&self) -> Result<Window, CliError> {
        Ok(Window::new(self.window.t_min, self.window.t_max)?)
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string_pretty(self).map_err(|e| CliError::Failure(e.to_string()))
    }
}

fn parameters<T: DeserializeOwned>(kind: &str, map: &Map<String, Value>) -> Result<T, CliError> {
    serde_json::from_value(Value::Object(map.clone()))
        .map_err(|e| CliError::Config(format!("parameters of `{kind}`: {e}")))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Rate {
    rate: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Alpha {
    alpha: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Atoms {
    rates: Vec<f64>,
    weights: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Zeta {
    rate: f64,
    alpha: f64,
    atoms: Option<usize>,
    tail_mass: Option<f64>,
}

pub fn build_mixing(spec: &MeasureSpec) -> Result<MixingMeasure, CliError> {
    let p = &spec.parameters;
    let kind = spec.kind.as_str();
    let measure = match kind {
        "degenerate" => MixingMeasure::degenerate(parameters::<Rate>(kind, p)?.rate),
        "discrete" => {
            let a: Atoms = parameters(kind, p)?;
            MixingMeasure::discrete(a.rates, a.weights)
        }
        "zeta" => {
            let z: Zeta = parameters(kind, p)?;
            let truncation = match (z.atoms, z.tail_mass) {
                (Some(k), None) => Truncation::Atoms(k),
                (None, Some(eps)) => Truncation::TailMass(eps),
                (None, None) => Truncation::TailMass(1e-6),
                (Some(_), Some(_)) => {
                    return Err(CliError::Config("zeta: give `atoms` or `tail_mass`, not both".into()))
                }
            };
            MixingMeasure::zeta_rule(z.rate, z.alpha, truncation)
        }
        "gamma" => MixingMeasure::gamma(parameters::<Alpha>(kind, p)?.alpha),
        "mittag_leffler" => MixingMeasure::mittag_leffler(parameters::<Alpha>(kind, p)?.alpha),
        other => {
            return Err(CliError::Config(format!(
                "unknown mixing measure kind `{other}`; expected degenerate, discrete, zeta, gamma or mittag_leffler"
            )))
        }
    };
    Ok(measure?)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Variance {
    variance: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GammaLaw {
    shape: f64,
    rate: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InverseGaussian {
    delta: f64,
    gamma: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Nig {
    alpha: f64,
    beta: f64,
    delta: f64,
    #[serde(default)]
    mu: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
enum JumpSpec {
    Exponential { rate: f64 },
    Deterministic { size: f64 },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CompoundPoisson {
    intensity: f64,
    jump: JumpSpec,
}

pub fn build_marginal(spec: &MarginalSpec) -> Result<MarginalLaw, CliError> {
    let p = &spec.parameters;
    let kind = spec.kind.as_str();
    let law = match kind {
        "gaussian" => MarginalLaw::gaussian(parameters::<Variance>(kind, p)?.variance),
        "gamma" => {
            let g: GammaLaw = parameters(kind, p)?;
            MarginalLaw::gamma(g.shape, g.rate)
        }
        "inverse_gaussian" => {
            let g: InverseGaussian = parameters(kind, p)?;
            MarginalLaw::inverse_gaussian(g.delta, g.gamma)
        }
        "nig" => {
            let n: Nig = parameters(kind, p)?;
            MarginalLaw::nig(n.alpha, n.beta, n.delta, n.mu)
        }
        "compound_poisson" => {
            let c: CompoundPoisson = parameters(kind, p)?;
            let jump = match c.jump {
                JumpSpec::Exponential { rate } => JumpLaw::Exponential { rate },
                JumpSpec::Deterministic { size } => JumpLaw::Deterministic { size },
            };
            MarginalLaw::compound_poisson_driven(jump, c.intensity)
        }
        "student" | "student_t" | "t" => {
            return Err(CliError::Config(
                "the Student t law is not supported: its cumulant generating function is not analytic \
                 in a neighbourhood of the origin, so its cumulants of high order do not exist"
                    .into(),
            ))
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown marginal kind `{other}`; expected gaussian, gamma, inverse_gaussian, nig or compound_poisson"
            )))
        }
    };
    Ok(law?.with_centering(spec.centered))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_roundtrip_through_toml_and_json() {
        let cfg = RunConfig::default();
        let toml_text = cfg.to_toml().unwrap();
        assert_eq!(toml::from_str::<RunConfig>(&toml_text).unwrap(), cfg);
        let json_text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&json_text).unwrap(), cfg);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("sed = 3").is_err());
        assert!(toml::from_str::<RunConfig>("[grid]\nmin = 1.0\nmax = 10.0\ncount = 5\nstep = 2").is_err());
        let spec = MeasureSpec {
            kind: "gamma".into(),
            parameters: params(&[("alpha", 0.5), ("beta", 1.0)]),
        };
        assert!(matches!(build_mixing(&spec), Err(CliError::Config(_))));
    }

    #[test]
    fn partial_files_keep_defaults() {
        let cfg: RunConfig = toml::from_str("seed = 9\n[mixing]\nkind = \"degenerate\"\nparameters = { rate = 2.0 }").unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.orders, RunConfig::default().orders);
        assert!(matches!(build_mixing(&cfg.mixing).unwrap(), MixingMeasure::Degenerate { rate } if rate == 2.0));
    }

    #[test]
    fn jumps_and_student() {
        let cp: MarginalSpec = toml::from_str(
            "kind = \"compound_poisson\"\ncentered = false\n[parameters]\nintensity = 2.0\njump = { kind = \"exponential\", rate = 1.0 }",
        )
        .unwrap();
        let law = build_marginal(&cp).unwrap();
        assert!((law.cumulant(1).unwrap() - 2.0).abs() < 1e-15);
        let student = MarginalSpec {
            kind: "student".into(),
            parameters: Map::new(),
            centered: true,
        };
        match build_marginal(&student) {
            Err(CliError::Config(msg)) => assert!(msg.contains("analytic")),
            other => panic!("expected a configuration error, got {other:?}"),
        }
    }
}
