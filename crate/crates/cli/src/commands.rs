use std::fmt::Write as _;
use std::io::Write as _;

use serde_json::json;
use supou::cumulant_engine::{aggregate_cumulant, AggregateKind, CumulantTable, Forms};
use supou::mixing::MixingMeasure;
use supou::scaling::{
    fit_sigmas, fit_taus, intermittency_test, q_star, write_plot_data, FitTarget, MomentTable, ScalingFit, Verdict,
};
use supou::simulate::{aggregate_path, empirical_autocorrelation, empirical_cumulants, superposition_path, SimConfig};
use supou::Error;

use crate::config::{build_marginal, build_mixing, RunConfig};
use crate::output::{num, pretty, to_json, Output};
use crate::{CliError, Format};

pub fn print_config(cfg: &RunConfig, format: Format) -> Result<(), CliError> {
    let text = match format {
        Format::Csv => cfg.to_toml()?,
        Format::Json => pretty(&to_json(cfg)?)?,
    };
    writeln!(std::io::stdout().lock(), "{}", text.trim_end())?;
    Ok(())
}

pub fn correlation(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let mix = build_mixing(&cfg.mixing)?;
    let mut taus = cfg.correlation.grid.points()?;
    if cfg.correlation.include_zero {
        taus.insert(0, 0.0);
    }
    let mut csv = String::from("tau,quadrature,closed_form\n");
    let mut rows = Vec::with_capacity(taus.len());
    for &tau in &taus {
        // A Mittag-Leffler correlation with α > 1 has no mixing measure to integrate against.
        let quadrature = match mix.correlation_quadrature(tau) {
            Ok(r) => Some(r),
            Err(Error::Unsupported(_)) => None,
            Err(e) => return Err(e.into()),
        };
        let closed = mix.closed_form_correlation(tau);
        let cell = |v: Option<f64>| v.map(num).unwrap_or_default();
        writeln!(csv, "{},{},{}", num(tau), cell(quadrature), cell(closed)).unwrap();
        rows.push(json!({ "tau": tau, "quadrature": quadrature, "closed_form": closed }));
    }
    out.table("correlation", &csv, &json!(rows))
}

pub fn cumulants(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let mix = build_mixing(&cfg.mixing)?;
    let law = build_marginal(&cfg.marginal)?;
    let times = cfg.grid.points()?;
    let kind = cfg.kind.into();
    let table = CumulantTable::analytic(&mix, &law, kind, &cfg.orders, &times, Forms::default())?;
    let mut buf = Vec::new();
    table.write_csv(&mut buf)?;
    let mut csv = String::from_utf8(buf).expect("CSV is ASCII");
    let mut doc = json!({ "table": to_json(&table)? });
    if cfg.cross_form {
        let forms = Forms::default().alternate();
        let other = CumulantTable::analytic(&mix, &law, kind, &cfg.orders, &times, forms)?;
        let gap = table.max_relative_discrepancy(&other)?;
        writeln!(csv, "# cross_form_max_relative_discrepancy,{}", num(gap)).unwrap();
        doc["cross_form_max_relative_discrepancy"] = json!(gap);
    }
    out.table("cumulants", &csv, &doc)
}

/// Default exponents: `q*` and `q* + 2` for the mixing tail index, or 2 and
/// 4 when the measure has none.
fn exponents(cfg: &RunConfig, mix: &MixingMeasure) -> Vec<u32> {
    if !cfg.exponents.is_empty() {
        return cfg.exponents.clone();
    }
    let q = mix.tail_index().map_or(2, q_star);
    vec![q, q + 2]
}

fn fit_rows(csv: &mut String, fit: &ScalingFit, verdict: Verdict) {
    let target = match fit.target {
        FitTarget::Sigma => "sigma",
        FitTarget::Tau => "tau",
    };
    for r in &fit.rows {
        writeln!(
            csv,
            "{target},{},{},{},{},{},{},{},{},{}",
            r.exponent,
            num(r.estimate),
            num(r.std_error),
            num(r.r2),
            num(r.t_min),
            num(r.t_max),
            r.n_points,
            verdict,
            r.guarantee
        )
        .unwrap();
    }
}

pub fn scaling(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let mix = build_mixing(&cfg.mixing)?;
    let law = build_marginal(&cfg.marginal)?;
    let window = cfg.fit_window()?;
    let times = cfg.grid.points()?;
    let kind: AggregateKind = cfg.kind.into();
    let qs = exponents(cfg, &mix);
    let top = *qs.iter().max().expect("at least one exponent");

    // Orders with a zero marginal cumulant have a zero aggregate cumulant
    // and no slope.
    let mut sigma_orders = Vec::new();
    for &m in &cfg.orders {
        if law.cumulant(m)? == 0.0 {
            eprintln!("note: κ_{m} of the marginal is zero; order {m} is left out of the σ fit");
        } else {
            sigma_orders.push(m);
        }
    }
    let mut all_orders: Vec<u32> = (1..=top).chain(sigma_orders.iter().copied()).collect();
    all_orders.sort_unstable();
    all_orders.dedup();

    let table = CumulantTable::analytic(&mix, &law, kind, &all_orders, &times, Forms::default())?;
    let moments = MomentTable::from_cumulants(&table, &qs)?;
    let qs_f: Vec<f64> = qs.iter().map(|&q| f64::from(q)).collect();
    let mut tau_fit = fit_taus(&moments, &qs_f, window)?;
    let mut sigma_fit = if sigma_orders.is_empty() {
        ScalingFit { target: FitTarget::Sigma, rows: Vec::new() }
    } else {
        fit_sigmas(&table, &sigma_orders, window)?
    };
    if let Some(alpha) = mix.tail_index() {
        tau_fit.label_guarantees(alpha);
        sigma_fit.label_guarantees(alpha);
    }
    let verdict = intermittency_test(&tau_fit, cfg.tolerance.ratio);

    let mut csv = String::from("target,q,estimate,stderr,r2,t_min,t_max,n_points,verdict,guarantee\n");
    fit_rows(&mut csv, &sigma_fit, verdict);
    fit_rows(&mut csv, &tau_fit, verdict);
    writeln!(csv, "# verdict,{verdict}").unwrap();
    let doc = json!({ "sigma": to_json(&sigma_fit)?, "tau": to_json(&tau_fit)?, "verdict": verdict });
    out.table("scaling", &csv, &doc)?;

    if let Some(dir) = out.dir() {
        println!("verdict: {verdict}");
        let cumulant_series: Vec<(String, &[f64], &[f64])> = sigma_orders
            .iter()
            .map(|&m| (format!("m{m}"), times.as_slice(), table.values_for(m).expect("fitted order")))
            .collect();
        let moment_series: Vec<(String, &[f64], &[f64])> = qs
            .iter()
            .map(|&q| (format!("q{q}"), times.as_slice(), moments.values_for(f64::from(q)).expect("fitted exponent")))
            .collect();
        for path in write_plot_data(dir, "cumulant", &cumulant_series)?
            .into_iter()
            .chain(write_plot_data(dir, "moment", &moment_series)?)
        {
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(())
}

pub fn simulate(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let spec = &cfg.simulation;
    if spec.write_paths && out.dir().is_none() {
        return Err(CliError::Config("simulation.write_paths needs an output directory".into()));
    }
    let sim = SimConfig {
        mixing: build_mixing(&spec.mixing)?,
        marginal: build_marginal(&spec.marginal)?,
        horizon: spec.horizon,
        step: spec.step,
        replicas: spec.replicas,
        seed: cfg.seed,
        truncation: spec.truncation,
    };
    let kind: AggregateKind = spec.kind.into();
    let ensemble = superposition_path(&sim)?;
    for w in &ensemble.warnings {
        eprintln!("warning: {w}");
    }
    let agg = aggregate_path(&ensemble, kind)?;
    let empirical = empirical_cumulants(&agg, &spec.orders, &spec.times)?;
    let autocorrelation = empirical_autocorrelation(&ensemble, &spec.lags)?;

    // Analytic values refer to the superposition actually simulated, after truncation.
    let simulated = MixingMeasure::discrete_proportional(ensemble.rates.clone(), ensemble.weights.clone())?;
    let se = empirical.std_errors.as_ref().expect("empirical tables carry standard errors");

    let mut csv = String::from("statistic,order,t,empirical,std_error,analytic,z\n");
    let mut rows = Vec::new();
    for (i, &m) in empirical.orders.iter().enumerate() {
        for (j, &t) in empirical.times.iter().enumerate() {
            let analytic = aggregate_cumulant(&simulated, &sim.marginal, kind, m, t)?;
            let (est, err) = (empirical.values[i][j], se[i][j]);
            let z = (est - analytic) / err;
            writeln!(csv, "cumulant,{m},{},{},{},{},{}", num(t), num(est), num(err), num(analytic), num(z)).unwrap();
            rows.push(json!({ "statistic": "cumulant", "order": m, "t": t, "empirical": est,
                              "std_error": err, "analytic": analytic, "z": z }));
        }
    }
    for a in &autocorrelation {
        let analytic = simulated.correlation(a.lag)?;
        let z = (a.estimate - analytic) / a.std_error;
        writeln!(
            csv,
            "autocorrelation,,{},{},{},{},{}",
            num(a.lag),
            num(a.estimate),
            num(a.std_error),
            num(analytic),
            num(z)
        )
        .unwrap();
        rows.push(json!({ "statistic": "autocorrelation", "order": null, "t": a.lag, "empirical": a.estimate,
                          "std_error": a.std_error, "analytic": analytic, "z": z }));
    }
    writeln!(
        csv,
        "# seed,{},replicas,{},truncated_mass,{}",
        cfg.seed,
        ensemble.replicas(),
        num(ensemble.truncated_mass)
    )
    .unwrap();
    let doc = json!({
        "summary": rows,
        "seed": cfg.seed,
        "replicas": ensemble.replicas(),
        "truncated_mass": ensemble.truncated_mass,
        "warnings": ensemble.warnings,
    });
    out.table("simulation", &csv, &doc)?;

    let mut ledger = String::from("replica,seed,stream\n");
    for s in &ensemble.seeds {
        writeln!(ledger, "{},{},{}", s.replica, s.seed, s.stream).unwrap();
    }
    out.artifact("seeds.csv", ledger.as_bytes())?;
    if spec.write_paths {
        let mut buf = Vec::new();
        ensemble.write_paths_csv(&mut buf)?;
        out.artifact("paths.csv", &buf)?;
    }
    Ok(())
}
