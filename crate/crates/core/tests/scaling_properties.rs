use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use supou::bell::{cumulants_from_moments, moments_from_cumulants};
use supou::cumulant_engine::{AggregateKind, CumulantTable, Forms};
use supou::marginal::{JumpLaw, MarginalLaw};
use supou::mixing::MixingMeasure;
use supou::scaling::{
    fit_sigmas, fit_taus, intermittency_test, log_spaced, q_star, MomentTable, Verdict, DEFAULT_WINDOW,
    RATIO_TOLERANCE,
};

fn grid() -> Vec<f64> {
    log_spaced(1e3, 1e6, 25).unwrap()
}

fn table(mix: &MixingMeasure, law: &MarginalLaw, kind: AggregateKind, top: u32) -> CumulantTable {
    let orders: Vec<u32> = (1..=top).collect();
    CumulantTable::analytic(mix, law, kind, &orders, &grid(), Forms::default()).unwrap()
}

fn verdict(t: &CumulantTable, qs: &[u32]) -> Verdict {
    let moments = MomentTable::from_cumulants(t, qs).unwrap();
    let qs: Vec<f64> = qs.iter().map(|&q| f64::from(q)).collect();
    intermittency_test(&fit_taus(&moments, &qs, DEFAULT_WINDOW).unwrap(), RATIO_TOLERANCE)
}

#[test]
fn cumulant_moment_roundtrip_on_random_vectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let m = rng.random_range(1..=8);
        let kappa: Vec<f64> = (0..m).map(|_| rng.random_range(-5.0..5.0)).collect();
        let back = cumulants_from_moments(&moments_from_cumulants(&kappa));
        // Moments reach 1e7 here, so errors are measured against the size of
        // the terms being cancelled: the moments built from |κ|.
        let abs: Vec<f64> = kappa.iter().map(|k| k.abs()).collect();
        let scale = moments_from_cumulants(&abs);
        for ((a, b), s) in back.iter().zip(&kappa).zip(&scale) {
            assert!((a - b).abs() <= 1e-10 * (1.0 + s), "{kappa:?} -> {back:?}");
        }
    }
}

#[test]
fn integrated_and_partial_sum_slopes_agree() {
    let law = MarginalLaw::inverse_gaussian(1.0, 1.0).unwrap().centered();
    for alpha in [0.4, 0.6, 0.9] {
        let mix = MixingMeasure::gamma(alpha).unwrap();
        let a = fit_sigmas(&table(&mix, &law, AggregateKind::Integrated, 4), &[2, 3, 4], DEFAULT_WINDOW).unwrap();
        let b = fit_sigmas(&table(&mix, &law, AggregateKind::PartialSum, 4), &[2, 3, 4], DEFAULT_WINDOW).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert!((x.estimate - y.estimate).abs() <= 0.05, "α={alpha} m={}", x.exponent);
        }
    }
}

#[test]
fn a_single_ou_process_grows_linearly() {
    let law = MarginalLaw::gamma(2.0, 1.0).unwrap().centered();
    for rate in [0.5, 1.0, 3.0] {
        let mix = MixingMeasure::degenerate(rate).unwrap();
        for kind in [AggregateKind::Integrated, AggregateKind::PartialSum] {
            let t = table(&mix, &law, kind, 6);
            for row in fit_sigmas(&t, &[2, 3, 4, 5, 6], DEFAULT_WINDOW).unwrap().rows {
                assert!((row.estimate - 1.0).abs() <= 0.05, "λ={rate} {kind} m={}: {}", row.exponent, row.estimate);
            }
            assert_eq!(verdict(&t, &[2, 4]), Verdict::NotIntermittent);
        }
    }
}

#[test]
fn long_memory_with_non_gaussian_marginals_is_intermittent() {
    let laws = [
        MarginalLaw::inverse_gaussian(1.0, 1.0).unwrap(),
        MarginalLaw::gamma(0.5, 2.0).unwrap(),
        MarginalLaw::nig(2.0, 0.5, 1.0, 0.0).unwrap(),
        MarginalLaw::compound_poisson_driven(JumpLaw::Deterministic { size: 1.0 }, 3.0).unwrap(),
    ];
    for alpha in [0.3, 0.6, 0.9] {
        let mix = MixingMeasure::gamma(alpha).unwrap();
        let q = q_star(alpha);
        for law in laws {
            let law = law.centered();
            for kind in [AggregateKind::Integrated, AggregateKind::PartialSum] {
                let t = table(&mix, &law, kind, q + 2);
                assert_eq!(verdict(&t, &[q, q + 2]), Verdict::Intermittent, "α={alpha} {law:?} {kind}");
            }
        }
    }
}

#[test]
fn gaussian_marginals_are_never_intermittent() {
    let law = MarginalLaw::gaussian(2.0).unwrap();
    for alpha in [0.3, 0.5, 0.9, 1.5] {
        let mix = MixingMeasure::gamma(alpha).unwrap();
        let t = table(&mix, &law, AggregateKind::Integrated, 6);
        let fit = fit_taus(&MomentTable::from_cumulants(&t, &[2, 4, 6]).unwrap(), &[2.0, 4.0, 6.0], DEFAULT_WINDOW)
            .unwrap();
        let sigma2 = fit.rows[0].estimate;
        for row in &fit.rows {
            assert!((row.estimate - row.exponent / 2.0 * sigma2).abs() < 1e-6, "α={alpha}");
        }
        assert_eq!(intermittency_test(&fit, RATIO_TOLERANCE), Verdict::NotIntermittent);
        if alpha > 1.0 {
            // Integrable correlations give diffusive growth.
            assert!((sigma2 - 1.0).abs() <= 0.05, "σ(2) = {sigma2}");
        }
    }
}
