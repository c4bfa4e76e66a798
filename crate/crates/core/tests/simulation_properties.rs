use supou::cumulant_engine::{aggregate_cumulant, AggregateKind};
use supou::marginal::MarginalLaw;
use supou::mixing::MixingMeasure;
use supou::simulate::{aggregate_path, empirical_autocorrelation, empirical_cumulants, superposition_path, SimConfig};

fn config(replicas: usize, horizon: f64) -> SimConfig {
    SimConfig {
        mixing: MixingMeasure::discrete(vec![0.5, 1.0, 2.0], vec![0.2, 0.5, 0.3]).unwrap(),
        marginal: MarginalLaw::gamma(2.0, 1.0).unwrap().centered(),
        horizon,
        step: 0.1,
        replicas,
        seed: 11,
        truncation: None,
    }
}

#[test]
fn skeleton_is_stationary() {
    let cfg = config(4000, 40.0);
    let ens = superposition_path(&cfg).unwrap();
    let n = ens.paths[0].len() - 1;
    let variance = cfg.marginal.cumulant(2).unwrap();
    for idx in [n / 4, n / 2, n] {
        let xs: Vec<f64> = ens.paths.iter().map(|p| p[idx]).collect();
        let r = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / r;
        let c2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (r - 1.0);
        let c4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / r;
        let se_mean = (c2 / r).sqrt();
        let se_var = ((c4 - c2 * c2) / r).sqrt();
        assert!(mean.abs() <= 3.0 * se_mean, "t = {}: mean {mean} ± {se_mean}", idx as f64 * cfg.step);
        assert!((c2 - variance).abs() <= 3.0 * se_var, "t = {}: variance {c2} ± {se_var}", idx as f64 * cfg.step);
    }
}

#[test]
fn autocorrelation_matches_the_mixing_measure() {
    let cfg = config(2000, 40.0);
    let ens = superposition_path(&cfg).unwrap();
    for est in empirical_autocorrelation(&ens, &[1.0, 2.0, 5.0]).unwrap() {
        let exact = cfg.mixing.correlation(est.lag).unwrap();
        assert!(
            (est.estimate - exact).abs() <= 3.0 * est.std_error,
            "lag {}: {} ± {} vs {exact}",
            est.lag,
            est.estimate,
            est.std_error
        );
    }
}

#[test]
fn partial_sum_variance_matches_the_engine() {
    let cfg = config(4000, 100.0);
    let ens = superposition_path(&cfg).unwrap();
    let agg = aggregate_path(&ens, AggregateKind::PartialSum).unwrap();
    let times = [10.0, 50.0, 100.0];
    let table = empirical_cumulants(&agg, &[2], &times).unwrap();
    let se = table.std_errors_for(2).unwrap();
    for (j, &t) in times.iter().enumerate() {
        let exact = aggregate_cumulant(&cfg.mixing, &cfg.marginal, AggregateKind::PartialSum, 2, t).unwrap();
        let est = table.values[0][j];
        assert!((est - exact).abs() <= 3.0 * se[j], "t = {t}: {est} ± {} vs {exact}", se[j]);
    }
}

#[test]
fn ensembles_do_not_depend_on_the_worker_count() {
    let cfg = config(64, 5.0);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| superposition_path(&cfg).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(8));
}
