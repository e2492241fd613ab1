use phasemix::distributions::ExitLaw;
use phasemix::inference::{log_likelihood, InformationScenario};
use phasemix::matcore::Matrix;
use phasemix::presets::{
    birth_death, exponential, marshall_olkin, BirthDeathParams, ExponentialParams,
    MarshallOlkinParams,
};
use phasemix::simulator::{
    estimate, estimate_diag_mass, estimate_surv, estimate_surv_uni, sample_indexed, SimConfig,
};
use phasemix::{ClosedSetFamily, Error, MixtureModel};

fn within(est: f64, se: f64, want: f64) -> bool {
    (est - want).abs() <= 3.0 * se.max(1e-300)
}

/// Asymptotic Kolmogorov p-value with the usual small-sample correction.
fn ks_p_value(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    let d = sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    let series: f64 = (1..=100)
        .map(|k| {
            let k = k as f64;
            let sign = if k as u64 % 2 == 1 { 1.0 } else { -1.0 };
            sign * (-2.0 * k * k * lambda * lambda).exp()
        })
        .sum();
    (2.0 * series).clamp(0.0, 1.0)
}

#[test]
fn holding_time_is_exponential() {
    let a = 1.3;
    let q = Matrix::from_rows(&[vec![-a, a], vec![0.0, 0.0]]).unwrap();
    let model = MixtureModel::new(vec![q], vec![1.0, 0.0], vec![vec![1.0; 2]]).unwrap();
    let cfg = SimConfig::new(100_000, 11);
    let mut sample: Vec<f64> = (0..cfg.n_paths)
        .map(|i| sample_indexed(&model, &cfg, i).absorption().unwrap())
        .collect();
    let p = ks_p_value(&mut sample, |x| 1.0 - (-a * x).exp());
    assert!(p > 0.01, "KS p-value {p}");
}

#[test]
fn regimes_are_drawn_with_the_prior() {
    let (model, _) = birth_death(&BirthDeathParams::default()).unwrap();
    let cfg = SimConfig::new(100_000, 3);
    let s = InformationScenario::no_information(0.0).unwrap();
    let e = estimate(&model, &s, &cfg, |p| Some(p.regime as f64)).unwrap();
    assert!(within(e.estimate, e.stderr, 0.5), "{e:?}");
}

#[test]
fn runs_are_reproducible_and_thread_independent() {
    let (model, family) = birth_death(&BirthDeathParams::default()).unwrap();
    let s = InformationScenario::no_information(0.0).unwrap();
    let cfg = SimConfig::new(20_000, 99);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| estimate_surv(&model, &family, &s, &[1.0, 2.0], &cfg).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(1));
    assert_eq!(
        sample_indexed(&model, &cfg, 7),
        sample_indexed(&model, &cfg, 7)
    );
    let other = estimate_surv(
        &model,
        &family,
        &s,
        &[1.0, 2.0],
        &SimConfig::new(20_000, 100),
    )
    .unwrap();
    assert_ne!(one.estimate, other.estimate);
}

#[test]
fn standard_error_shrinks_like_root_n() {
    let (model, _) = birth_death(&BirthDeathParams::default()).unwrap();
    let s = InformationScenario::no_information(0.0).unwrap();
    let scaled: Vec<f64> = [10_000u64, 100_000, 1_000_000]
        .iter()
        .map(|&n| {
            let e = estimate_surv_uni(&model, &s, 2.0, &SimConfig::new(n, 17)).unwrap();
            e.stderr * (n as f64).sqrt()
        })
        .collect();
    for x in &scaled {
        assert!((x / scaled[2] - 1.0).abs() < 0.2, "{scaled:?}");
    }
}

#[test]
fn exponential_mixture_never_exits_together() {
    let (model, family) = exponential(&ExponentialParams::default()).unwrap();
    let e = estimate_diag_mass(&model, &family, &SimConfig::new(100_000, 1)).unwrap();
    assert_eq!(e.estimate, 0.0);
}

#[test]
fn common_shock_mass() {
    let (a1, a2, a3) = (1.0, 2.0, 0.5);
    let p = MarshallOlkinParams {
        a: [a1, a2, a3],
        b: [a1, a2, a3],
        ..Default::default()
    };
    let (model, family) = marshall_olkin(&p).unwrap();
    let e = estimate_diag_mass(&model, &family, &SimConfig::new(200_000, 2)).unwrap();
    assert!(within(e.estimate, e.stderr, a3 / (a1 + a2 + a3)), "{e:?}");
    // the two-speed mixture agrees with the singular part of its law
    let (model, family) = marshall_olkin(&MarshallOlkinParams::default()).unwrap();
    let e = estimate_diag_mass(&model, &family, &SimConfig::new(200_000, 2)).unwrap();
    let law = ExitLaw::new(
        &model,
        &family,
        &InformationScenario::no_information(0.0).unwrap(),
    )
    .unwrap();
    assert!(
        within(e.estimate, e.stderr, law.singular_surv_biv(0.0).unwrap()),
        "{e:?}"
    );
}

#[test]
fn nested_sets_exit_together_only_through_the_shared_jump() {
    // Γ_1 = {Δ} ⊂ Γ_2 = {2, Δ}: a tie needs the direct jump 1 → Δ
    let (r, x) = (1.2, 0.8);
    let q = Matrix::from_rows(&[vec![-(r + x), r, x], vec![0.0, -1.0, 1.0], vec![0.0; 3]]).unwrap();
    let model = MixtureModel::new(vec![q], vec![1.0, 0.0, 0.0], vec![vec![1.0; 3]]).unwrap();
    let family = ClosedSetFamily::new(2, vec![vec![2], vec![1, 2]]).unwrap();
    let e = estimate_diag_mass(&model, &family, &SimConfig::new(100_000, 4)).unwrap();
    assert!(within(e.estimate, e.stderr, x / (r + x)), "{e:?}");
}

#[test]
fn degenerate_times_give_the_start_mass() {
    let (model, family) = birth_death(&BirthDeathParams::default()).unwrap();
    let cfg = SimConfig::new(50_000, 8);
    let core = InformationScenario::current_only(2, 1.0).unwrap();
    let e = estimate_surv(&model, &family, &core, &[1.0, 1.0], &cfg).unwrap();
    assert_eq!(e.estimate, 1.0);
    let inside = InformationScenario::current_only(3, 1.0).unwrap();
    let e = estimate_surv(&model, &family, &inside, &[1.0, 1.0], &cfg).unwrap();
    assert_eq!(e.estimate, 0.0);
}

#[test]
fn single_regime_matches_the_phase_type_law() {
    let (bd, family) = birth_death(&BirthDeathParams::default()).unwrap();
    let model =
        MixtureModel::new(vec![bd.q(0).clone()], bd.pi0().to_vec(), vec![vec![1.0; 6]]).unwrap();
    let s = InformationScenario::no_information(0.0).unwrap();
    let law = ExitLaw::new(&model, &family, &s).unwrap();
    let cfg = SimConfig::new(200_000, 21);
    for x in [0.5, 1.5, 4.0] {
        let e = estimate_surv_uni(&model, &s, x, &cfg).unwrap();
        assert!(
            within(e.estimate, e.stderr, law.surv_uni(x).unwrap()),
            "{x}: {e:?}"
        );
    }
}

#[test]
fn true_regime_is_more_likely_on_average() {
    let (model, _) = birth_death(&BirthDeathParams::default()).unwrap();
    let cfg = SimConfig::new(10_000, 31);
    let mut total = 0.0;
    for i in 0..cfg.n_paths {
        let path = sample_indexed(&model, &cfg, i);
        let rec = path.record().unwrap();
        let own = log_likelihood(&rec, model.q(path.regime), rec.last())
            .unwrap()
            .unwrap();
        let other = log_likelihood(&rec, model.q(1 - path.regime), rec.last())
            .unwrap()
            .unwrap();
        total += own - other;
    }
    assert!(total / cfg.n_paths as f64 > 0.0);
}

#[test]
fn conditioning_on_an_impossible_state_is_reported() {
    let (model, _) = exponential(&ExponentialParams::default()).unwrap();
    // every path starts in state 1, so state 2 is never occupied at t = 0
    let s = InformationScenario::current_only(1, 0.0).unwrap();
    let err = estimate_surv_uni(&model, &s, 1.0, &SimConfig::new(20_000, 1)).unwrap_err();
    assert!(
        matches!(err, Error::InfeasibleConditioning { .. }),
        "{err:?}"
    );
}
