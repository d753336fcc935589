mod common;

use common::model;
use qrbsde_core::lattice::{ks_distance_to_lattice, moment_check};
use qrbsde_core::*;

#[test]
fn lattice_law_matches_euler_paths() {
    let m = model(
        "const:c=0.1",
        "const:c=0.5",
        0.5,
        |x| x,
        "none",
        GeneratorSpec::zero(),
    );
    let paths = simulate_forward(&m, 0.0, 0.2, 200, 100_000, 17).unwrap();
    for structure in [Structure::Binomial, Structure::Trinomial] {
        let lat = build_lattice(&m, 0.0, 0.2, 200, structure).unwrap();
        let ks = ks_distance_to_lattice(&lat, &paths.terminal());
        assert!(ks <= 0.02, "{structure:?}: {ks}");
    }
}

#[test]
fn doob_bound_shape() {
    let m = model(
        "zero",
        "const:c=1",
        1.0,
        |x| x,
        "none",
        GeneratorSpec::zero(),
    );
    let e = simulate_forward(&m, 0.0, 0.0, 200, 100_000, 5).unwrap();
    let r = moment_check(&e, &m, 1.0).unwrap();
    // E[sup |B|²] <= 4 (s − t), with a 1.5 safety factor
    assert!(r.sup_sq_ratio <= 4.0 * 1.5);
    assert!(r.sup_sq_ratio > 1.0);
    assert!(r.exp_moment.is_finite() && !r.overflow);
    assert!(r.implied_c_tilde >= 1.0);
    assert!(!r.bound_violated(r.implied_c_tilde * 1.000001));
}

#[test]
fn sup_ratio_on_quarter_horizon() {
    let mut m = model(
        "zero",
        "const:c=1",
        1.0,
        |x| x,
        "none",
        GeneratorSpec::zero(),
    );
    m.horizon = 0.25;
    let e = simulate_forward(&m, 0.0, 0.0, 100, 100_000, 8).unwrap();
    let r = moment_check(&e, &m, 1.0).unwrap();
    assert!(
        r.sup_sq_ratio > 0.5 && r.sup_sq_ratio < 4.0,
        "{}",
        r.sup_sq_ratio
    );
}
