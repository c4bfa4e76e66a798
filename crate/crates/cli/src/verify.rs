//! The `verify` pipeline: the headline scaling result and its supporting
//! checks, each reported with the tolerance it was held to.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{json, Value};
use supou::cumulant_engine::{
    aggregate_cumulant, integrated_factor, partial_sum_factor, AggregateKind, CumulantTable, Forms, IntegratedForm,
    PartialSumForm,
};
use supou::marginal::MarginalLaw;
use supou::mixing::MixingMeasure;
use supou::scaling::{
    fit_sigmas, fit_taus, intermittency_test, log_spaced, q_star, MomentTable, Window, DEFAULT_POINTS,
};
use supou::simulate::{aggregate_path, empirical_autocorrelation, empirical_cumulants, superposition_path, SimConfig};

use crate::config::RunConfig;
use crate::output::{pretty, Output};
use crate::{CliError, Format};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub check_id: String,
    pub description: String,
    pub expected: Value,
    pub observed: Value,
    pub tolerance: f64,
    pub pass: bool,
}

fn numeric(id: impl Into<String>, description: impl Into<String>, expected: f64, observed: f64, tolerance: f64) -> Check {
    Check {
        check_id: id.into(),
        description: description.into(),
        expected: json!(expected),
        observed: json!(observed),
        tolerance,
        pass: (observed - expected).abs() <= tolerance,
    }
}

fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn reference_measures() -> Result<Vec<(&'static str, MixingMeasure)>, CliError> {
    Ok(vec![
        ("degenerate(1)", MixingMeasure::degenerate(1.0)?),
        ("discrete(3 atoms)", MixingMeasure::discrete(vec![0.5, 1.0, 2.0], vec![0.2, 0.5, 0.3])?),
        ("gamma(0.5)", MixingMeasure::gamma(0.5)?),
        ("gamma(1.5)", MixingMeasure::gamma(1.5)?),
    ])
}

fn anchors(cfg: &RunConfig) -> Result<Check, CliError> {
    let mut worst: f64 = 0.0;
    for (_, mix) in reference_measures()? {
        for t in [0.5, 1.0, 7.3, 1e3] {
            worst = worst.max(relative_error(integrated_factor(&mix, 1, t, IntegratedForm::Direct)?, t));
            if t >= 1.0 {
                let j = partial_sum_factor(&mix, 1, t, PartialSumForm::Expanded)?;
                worst = worst.max(relative_error(j, t.floor()));
            }
        }
    }
    Ok(numeric(
        "A1",
        "first-order factors: I_0(t) = t and J_0(t) = floor(t), largest relative error",
        0.0,
        worst,
        cfg.tolerance.anchors,
    ))
}

fn correlation(cfg: &RunConfig) -> Result<Check, CliError> {
    let alpha = cfg.verify.alpha;
    let mix = MixingMeasure::gamma(alpha)?;
    let mut worst: f64 = 0.0;
    for tau in log_spaced(1e-2, 1e3, 50)? {
        worst = worst.max(relative_error(mix.correlation_quadrature(tau)?, (1.0 + tau).powf(-alpha)));
    }
    Ok(numeric(
        "A2",
        format!("Gamma mixing correlation by quadrature against (1+τ)^(-{alpha}), largest relative error"),
        0.0,
        worst,
        cfg.tolerance.correlation,
    ))
}

fn kinds() -> [(AggregateKind, &'static str); 2] {
    [(AggregateKind::Integrated, "integrated"), (AggregateKind::PartialSum, "partial_sum")]
}

fn cumulant_slopes(cfg: &RunConfig, times: &[f64], window: Window) -> Result<Vec<Check>, CliError> {
    let alpha = cfg.verify.alpha;
    let claim = cfg.verify.alpha_claim.unwrap_or(alpha);
    let mix = MixingMeasure::gamma(alpha)?;
    let law = MarginalLaw::inverse_gaussian(1.0, 1.0)?.centered();
    let orders = [2, 3, 4, 5];
    let mut checks = Vec::new();
    for (kind, name) in kinds() {
        let table = CumulantTable::analytic(&mix, &law, kind, &orders, times, Forms::default())?;
        let fit = fit_sigmas(&table, &orders, window)?;
        for row in &fit.rows {
            let m = row.exponent;
            checks.push(numeric(
                format!("A3.{name}.m{m}"),
                format!("{name} aggregate, Gamma({alpha}) mixing, centred IG(1,1): fitted σ({m}) against m - α"),
                m - claim,
                row.estimate,
                cfg.tolerance.slope,
            ));
        }
    }
    Ok(checks)
}

fn moment_slopes(cfg: &RunConfig, times: &[f64], window: Window) -> Result<Vec<Check>, CliError> {
    let alpha = cfg.verify.alpha;
    let claim = cfg.verify.alpha_claim.unwrap_or(alpha);
    let mix = MixingMeasure::gamma(alpha)?;
    let law = MarginalLaw::inverse_gaussian(1.0, 1.0)?.centered();
    let q0 = q_star(alpha);
    let qs = [q0, q0 + 2];
    let orders: Vec<u32> = (1..=q0 + 2).collect();
    let mut checks = Vec::new();
    for (kind, name) in kinds() {
        let table = CumulantTable::analytic(&mix, &law, kind, &orders, times, Forms::default())?;
        let moments = MomentTable::from_cumulants(&table, &qs)?;
        let fit = fit_taus(&moments, &qs.map(f64::from), window)?;
        for row in &fit.rows {
            let q = row.exponent;
            checks.push(numeric(
                format!("A4.{name}.q{q}"),
                format!("{name} aggregate: fitted τ({q}) from Bell-converted moments against q - α"),
                q - claim,
                row.estimate,
                cfg.tolerance.slope,
            ));
        }
        let verdict = intermittency_test(&fit, cfg.tolerance.ratio);
        checks.push(Check {
            check_id: format!("A4.{name}.verdict"),
            description: format!("{name} aggregate: τ(q)/q increases between q = {} and q = {}", qs[0], qs[1]),
            expected: json!("intermittent"),
            observed: json!(verdict.to_string()),
            tolerance: cfg.tolerance.ratio,
            pass: verdict.to_string() == "intermittent",
        });
    }
    Ok(checks)
}

fn negative_controls(cfg: &RunConfig, times: &[f64], window: Window) -> Result<Vec<Check>, CliError> {
    let kind = AggregateKind::Integrated;
    let mut checks = Vec::new();

    let ou = MixingMeasure::degenerate(1.0)?;
    let ig = MarginalLaw::inverse_gaussian(1.0, 1.0)?.centered();
    let table = CumulantTable::analytic(&ou, &ig, kind, &[1, 2, 3, 4], times, Forms::default())?;
    for row in fit_sigmas(&table, &[2, 3, 4], window)?.rows {
        checks.push(numeric(
            format!("A5.degenerate.m{}", row.exponent),
            format!("single OU process: fitted σ({}) is linear growth", row.exponent),
            1.0,
            row.estimate,
            cfg.tolerance.slope,
        ));
    }
    let verdict_check = |id: &str, description: &str, table: &CumulantTable| -> Result<Check, CliError> {
        let moments = MomentTable::from_cumulants(table, &[2, 4])?;
        let verdict = intermittency_test(&fit_taus(&moments, &[2.0, 4.0], window)?, cfg.tolerance.ratio);
        Ok(Check {
            check_id: id.into(),
            description: description.into(),
            expected: json!("not-intermittent"),
            observed: json!(verdict.to_string()),
            tolerance: cfg.tolerance.ratio,
            pass: verdict.to_string() == "not-intermittent",
        })
    };
    checks.push(verdict_check("A5.degenerate.verdict", "single OU process: τ(q)/q is flat", &table)?);

    let gaussian = MarginalLaw::gaussian(1.0)?;
    let table = CumulantTable::analytic(&MixingMeasure::gamma(0.5)?, &gaussian, kind, &[1, 2, 3, 4], times, Forms::default())?;
    checks.push(verdict_check(
        "A5.gaussian.verdict",
        "Gaussian marginal with Gamma(0.5) mixing: τ(q)/q is flat",
        &table,
    )?);
    Ok(checks)
}

fn form_equivalence(cfg: &RunConfig) -> Result<Vec<Check>, CliError> {
    let (mut worst_i, mut worst_j): (f64, f64) = (0.0, 0.0);
    for (_, mix) in reference_measures()? {
        for m in 2..=5 {
            for t in [1.0, 10.0, 1e3] {
                let direct = integrated_factor(&mix, m, t, IntegratedForm::Direct)?;
                let kernel = integrated_factor(&mix, m, t, IntegratedForm::Kernel)?;
                worst_i = worst_i.max(relative_error(direct, kernel));
                let expanded = partial_sum_factor(&mix, m, t, PartialSumForm::Expanded)?;
                let summed = partial_sum_factor(&mix, m, t, PartialSumForm::Summed)?;
                worst_j = worst_j.max(relative_error(expanded, summed));
            }
        }
    }
    Ok(vec![
        numeric(
            "A6.integrated",
            "direct and kernel forms of I_{m-1}(t), m = 2..5, t in {1, 10, 1000}, largest relative gap",
            0.0,
            worst_i,
            cfg.tolerance.integrated_forms,
        ),
        numeric(
            "A6.partial_sum",
            "expanded and summed forms of J_{m-1}(t), m = 2..5, t in {1, 10, 1000}, largest relative gap",
            0.0,
            worst_j,
            cfg.tolerance.partial_sum_forms,
        ),
    ])
}

fn monte_carlo(cfg: &RunConfig) -> Result<Vec<Check>, CliError> {
    let sim = SimConfig {
        mixing: MixingMeasure::degenerate(1.0)?,
        marginal: MarginalLaw::gamma(1.0, 1.0)?.centered(),
        horizon: 50.0,
        step: 0.1,
        replicas: cfg.verify.replicas,
        seed: cfg.seed,
        truncation: None,
    };
    let ensemble = superposition_path(&sim)?;
    let agg = aggregate_path(&ensemble, AggregateKind::PartialSum)?;
    let times = [10.0, 50.0];
    let table = empirical_cumulants(&agg, &[2], &times)?;
    let se = table.std_errors_for(2).expect("empirical standard errors");
    let k = cfg.tolerance.monte_carlo_sigmas;
    let mut checks = Vec::new();
    for (j, &t) in times.iter().enumerate() {
        let analytic = aggregate_cumulant(&sim.mixing, &sim.marginal, AggregateKind::PartialSum, 2, t)?;
        let z = (table.values[0][j] - analytic) / se[j];
        checks.push(Check {
            check_id: format!("A7.kappa2.t{t}"),
            description: format!(
                "Monte Carlo κ_2 of the partial sum at t = {t} ({} replicas), distance in standard errors",
                sim.replicas
            ),
            expected: json!(analytic),
            observed: json!({ "estimate": table.values[0][j], "std_error": se[j], "z": z }),
            tolerance: k,
            pass: z.abs() <= k,
        });
    }
    let acf = empirical_autocorrelation(&ensemble, &[1.0])?[0];
    let analytic = (-1.0f64).exp();
    let z = (acf.estimate - analytic) / acf.std_error;
    checks.push(Check {
        check_id: "A7.autocorrelation.lag1".into(),
        description: "Monte Carlo lag-1 autocorrelation against e^(-1), distance in standard errors".into(),
        expected: json!(analytic),
        observed: json!({ "estimate": acf.estimate, "std_error": acf.std_error, "z": z }),
        tolerance: k,
        pass: z.abs() <= k,
    });
    Ok(checks)
}

pub fn checks(cfg: &RunConfig) -> Result<Vec<Check>, CliError> {
    let window = cfg.fit_window()?;
    let times = log_spaced(window.t_min, window.t_max, DEFAULT_POINTS)?;
    let mut all = vec![anchors(cfg)?, correlation(cfg)?];
    all.extend(cumulant_slopes(cfg, &times, window)?);
    all.extend(moment_slopes(cfg, &times, window)?);
    all.extend(negative_controls(cfg, &times, window)?);
    all.extend(form_equivalence(cfg)?);
    all.extend(monte_carlo(cfg)?);
    Ok(all)
}

fn report(checks: &[Check]) -> String {
    let mut text = String::new();
    for c in checks {
        writeln!(
            text,
            "{} {:<28} expected {} observed {} tolerance {:e}  {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.check_id,
            c.expected,
            c.observed,
            c.tolerance,
            c.description
        )
        .unwrap();
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    writeln!(text, "{} of {} checks passed", checks.len() - failed, checks.len()).unwrap();
    text
}

pub fn run(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let checks = checks(cfg)?;
    let text = report(&checks);
    let doc = json!({ "checks": checks, "pass": checks.iter().all(|c| c.pass) });
    match (out.dir(), out.format) {
        (Some(_), _) => {
            print!("{text}");
            out.artifact("verify.json", pretty(&doc)?.as_bytes())?;
            out.artifact("verify.txt", text.as_bytes())?;
        }
        (None, Format::Json) => println!("{}", pretty(&doc)?),
        (None, Format::Csv) => print!("{text}"),
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    if failed > 0 {
        return Err(CliError::Failure(format!("{failed} of {} checks failed", checks.len())));
    }
    Ok(())
}
