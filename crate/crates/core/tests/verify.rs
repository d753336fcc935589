use std::sync::Arc;

use qrbsde_core::verify::models::{american_put, linear_martingale, pure_quadratic};
use qrbsde_core::verify::*;
use qrbsde_core::*;

fn settings(x0: f64, structure: Structure) -> SuiteSettings {
    SuiteSettings {
        t0: 0.0,
        x0,
        n_steps: 200,
        structure,
        n_space: 400,
        n_time: 400,
        x_radius: None,
        seed: 1,
        tolerances: Tolerances::default(),
    }
}

#[test]
fn report_status_follows_metric() {
    assert!(PropertyReport::measured("a", ReportKind::Exact, 0.0, 0.0).passed());
    assert!(!PropertyReport::measured("a", ReportKind::Exact, 1e-9, 1e-10).passed());
    assert!(!PropertyReport::measured("a", ReportKind::Exact, f64::NAN, 1.0).passed());
    let table = render_table(&[PropertyReport::inconclusive(
        "b",
        ReportKind::Convergence,
        1.0,
        "why",
    )]);
    assert!(table.contains("inconclusive"));
}

#[test]
fn comparison_examples() {
    let sm = pure_quadratic(1.0).unwrap();
    let lat = build_lattice(&sm.model, 0.0, sm.x0, 100, Structure::Binomial).unwrap();
    let p = sm.model.parameter_set();
    let r = comparison_experiment(&lat, &p, &p).unwrap();
    assert_eq!((r.status, r.metric), (Status::Pass, 0.0));

    let xi = p.terminal.clone();
    let up = ParameterSet::new(
        Arc::new(move |x| xi(x) + 0.5),
        p.obstacle.clone(),
        p.generator.clone(),
    );
    let r = comparison_experiment(&lat, &p, &up).unwrap();
    assert_eq!((r.status, r.metric), (Status::Pass, 0.0));

    let lower = p.with_generator(p.generator.shifted(-1.0));
    let r = comparison_experiment(&lat, &lower, &p).unwrap();
    assert_eq!((r.status, r.metric), (Status::Pass, 0.0));

    let r = comparison_experiment(&lat, &up, &p).unwrap();
    assert_eq!(r.status, Status::Inconclusive);
}

#[test]
fn fifty_random_pairs_are_exactly_ordered() {
    let sm = american_put(GeneratorSpec::zero()).unwrap();
    let lat = build_lattice(&sm.model, 0.0, sm.x0, 100, Structure::Trinomial).unwrap();
    let pairs = random_ordered_pairs(2024, 50).unwrap();
    for (p1, p2) in &pairs {
        let r = comparison_experiment(&lat, p1, p2).unwrap();
        assert_eq!(r.status, Status::Pass, "{}", r.detail);
        assert_eq!(r.metric, 0.0);
    }
}

#[test]
fn stability_examples() {
    let sm = american_put(GeneratorSpec::quadratic(1.0).unwrap()).unwrap();
    let lat = build_lattice(&sm.model, 0.0, sm.x0, 100, Structure::Trinomial).unwrap();
    let base = sm.model.parameter_set();
    let zero: Vec<_> = [1, 2, 4, 8].iter().map(|&n| (n, base.clone())).collect();
    let o = stability_experiment(&lat, &base, &zero, 1e-3).unwrap();
    assert!(o.sup_errors.iter().all(|&e| e == 0.0));
    assert!(o.exp_statistics.iter().all(|&e| (e - 1.0).abs() <= 1e-14));

    let pert: Vec<_> = [1, 2, 4, 8]
        .iter()
        .map(|&n| (n, one_over_n(&base, n)))
        .collect();
    let o = stability_experiment(&lat, &base, &pert, 1e-3).unwrap();
    assert!(o.rate.passed());
    for w in o.sup_errors.windows(2) {
        assert!(w[1] < w[0]);
    }
    for w in o.exp_statistics.windows(2) {
        assert!(w[1] < w[0]);
    }
    // the path supremum includes T, where the gap is exactly 1/n
    assert!(o.exp_statistics[3] >= (1.0f64 / 8.0).exp() - 1e-12);
}

#[test]
fn markov_examples() {
    let sm = pure_quadratic(1.0).unwrap();
    for s in [1.0, 0.0, 0.5] {
        let r = markov_property_check(&sm.model, 0.0, sm.x0, s, 50, Structure::Binomial).unwrap();
        assert!(r.passed(), "s={s}: {}", r.metric);
    }
    let sm = american_put(GeneratorSpec::quadratic(1.0).unwrap()).unwrap();
    let r = markov_property_check(&sm.model, 0.0, sm.x0, 0.3, 50, Structure::Trinomial).unwrap();
    assert!(r.metric <= 1e-10);
    assert!(markov_property_check(&sm.model, 0.0, sm.x0, 0.33, 50, Structure::Trinomial).is_err());
}

#[test]
fn cross_validation_examples() {
    let sm = linear_martingale().unwrap();
    let s = settings(sm.x0, Structure::Binomial);
    let (r, pde) = cross_validate(
        &sm.model,
        &s.probe_points(&sm.model),
        200,
        Structure::Binomial,
        &s.grid(&sm.model).unwrap(),
        1e-3,
    )
    .unwrap();
    assert!(r.passed(), "{r:?}");
    assert!(pde.is_some());

    let sm = american_put(GeneratorSpec::zero()).unwrap();
    let s = settings(sm.x0, Structure::Trinomial);
    let (r, _) = cross_validate(
        &sm.model,
        &s.probe_points(&sm.model),
        200,
        Structure::Trinomial,
        &s.grid(&sm.model).unwrap(),
        0.02,
    )
    .unwrap();
    assert!(r.passed(), "{r:?}");

    let sm = pure_quadratic(1.0).unwrap();
    let s = settings(sm.x0, Structure::Binomial);
    let (r, _) = cross_validate(
        &sm.model,
        &s.probe_points(&sm.model),
        200,
        Structure::Binomial,
        &s.grid(&sm.model).unwrap(),
        0.02,
    )
    .unwrap();
    assert!(r.passed(), "{r:?}");
}

#[test]
fn suite_on_put_with_quadratic_driver() {
    let sm = american_put(GeneratorSpec::quadratic(1.0).unwrap()).unwrap();
    let reports = property_suite(&sm.model, &settings(sm.x0, Structure::Trinomial)).unwrap();
    for r in &reports {
        assert!(r.passed(), "{r:?}");
    }
    assert!(reports.iter().any(|r| r.name == "cole-hopf"));
    let again = property_suite(&sm.model, &settings(sm.x0, Structure::Trinomial)).unwrap();
    assert_eq!(
        serde_json::to_string(&reports).unwrap(),
        serde_json::to_string(&again).unwrap()
    );
}

#[test]
fn tolerance_overrides() {
    let mut map = std::collections::BTreeMap::new();
    map.insert("markov".to_string(), 1e-8);
    assert_eq!(Tolerances::from_map(&map).unwrap().markov, 1e-8);
    map.insert("bogus".to_string(), 1.0);
    assert!(Tolerances::from_map(&map).is_err());
}
