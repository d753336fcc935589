#![allow(clippy::needless_range_loop)]

mod common;

use approx::assert_abs_diff_eq;
use common::{binomial, Lcg};
use qrbsde_core::lattice::NodeId;
use qrbsde_core::stopping::{
    dominating_supermartingale_gap, enumerate_stopping_times, enumeration_oracle,
};
use qrbsde_core::*;

fn generators() -> Vec<GeneratorSpec> {
    vec![
        GeneratorSpec::zero(),
        GeneratorSpec::quadratic(1.0).unwrap(),
        GeneratorSpec::neg_quadratic(1.0).unwrap(),
    ]
}

fn random_reward(lat: &RecombiningLattice, rng: &mut Lcg) -> RewardProcess {
    let n = lat.n_steps();
    let running = (0..n)
        .map(|i| (0..lat.width(i)).map(|_| rng.next()).collect())
        .collect();
    let terminal = (0..lat.width(n)).map(|_| rng.next()).collect();
    RewardProcess::new(lat, running, terminal).unwrap()
}

#[test]
fn enumeration_counts() {
    assert_eq!(
        enumerate_stopping_times(&binomial(1, 0.0)).unwrap().len(),
        2
    );
    let lat = binomial(2, 0.0);
    let rules = enumerate_stopping_times(&lat).unwrap();
    assert_eq!(rules.len(), 8);
    for tau in &rules {
        let hits = tau.hit_nodes(&lat);
        assert!(!hits.is_empty());
        // every root path meets exactly one stopping node
        let mass: f64 = hits
            .iter()
            .map(|h| reach_without_stopping(&lat, tau, *h))
            .sum();
        assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-12);
    }
    assert!(matches!(
        enumerate_stopping_times(&binomial(6, 0.0)),
        Err(Error::EnumerationTooLarge { .. })
    ));
}

fn reach_without_stopping(
    lat: &RecombiningLattice,
    tau: &LatticeStoppingTime,
    target: NodeId,
) -> f64 {
    let mut mass = vec![1.0];
    for i in 0..target.step {
        let mut next = vec![0.0; lat.width(i + 1)];
        for j in 0..lat.width(i) {
            if tau.stops_at(i, j) {
                continue;
            }
            for (c, p, _) in lat.children(i, j) {
                next[c] += mass[j] * p;
            }
        }
        mass = next;
    }
    mass[target.index]
}

#[test]
fn brute_force_optimality_all_small_trees() {
    let mut rng = Lcg(7);
    for n in 1..=5 {
        let lat = binomial(n, 0.0);
        for g in generators() {
            for _ in 0..3 {
                let reward = random_reward(&lat, &mut rng);
                let nu = LatticeStoppingTime::at_root(&lat);
                let r = enumeration_oracle(&lat, &g, &reward, &nu).unwrap();
                assert!(r.gap <= 1e-10, "n={n} {}: gap {}", g.label(), r.gap);
                assert!(r.max_excess <= 1e-10);
                assert!(r.tau_star_gap <= 1e-10);
            }
        }
    }
}

#[test]
fn optimal_stop_from_later_nu() {
    let mut rng = Lcg(99);
    let lat = binomial(4, 0.0);
    let g = GeneratorSpec::quadratic(1.0).unwrap();
    let reward = random_reward(&lat, &mut rng);
    let nu = LatticeStoppingTime::at_step(&lat, 2).unwrap();
    let r = enumeration_oracle(&lat, &g, &reward, &nu).unwrap();
    assert_eq!(r.best.len(), 3);
    assert!(r.gap <= 1e-10 && r.tau_star_gap <= 1e-10);
    let opt = optimal_stop(&lat, &g, &reward, &nu).unwrap();
    assert!(opt.tau_star_nodes.iter().all(|h| h.step >= 2));
}

#[test]
fn constant_reward_stops_immediately() {
    let lat = binomial(3, 0.0);
    let reward = RewardProcess::new(
        &lat,
        vec![vec![0.4], vec![0.4; 2], vec![0.4; 3]],
        vec![0.4; 4],
    )
    .unwrap();
    let opt = optimal_stop(
        &lat,
        &GeneratorSpec::zero(),
        &reward,
        &LatticeStoppingTime::at_root(&lat),
    )
    .unwrap();
    assert_eq!(opt.root_value(), 0.4);
    assert_eq!(opt.tau_star_nodes, vec![NodeId { step: 0, index: 0 }]);
}

#[test]
fn g_evaluate_examples() {
    let lat = binomial(4, 0.0);
    let mut rng = Lcg(3);
    let xi: Vec<f64> = (0..5).map(|_| rng.next()).collect();
    let tau = LatticeStoppingTime::terminal(&lat);
    let payoff: Vec<Vec<Option<f64>>> = (0..=4)
        .map(|i| {
            if i == 4 {
                xi.iter().map(|&v| Some(v)).collect()
            } else {
                vec![None; i + 1]
            }
        })
        .collect();
    let y = g_evaluate(&lat, &GeneratorSpec::zero(), &tau, &payoff).unwrap();
    let probs = lat.node_probabilities();
    let mean: f64 = probs[4].iter().zip(&xi).map(|(p, v)| p * v).sum();
    assert_abs_diff_eq!(y[0][0], mean, epsilon = 1e-14);

    // stop immediately
    let nu = LatticeStoppingTime::at_step(&lat, 2).unwrap();
    let pay: Vec<Vec<Option<f64>>> = (0..=4)
        .map(|i| {
            (0..=i)
                .map(|j| nu.stops_at(i, j).then_some(0.1 * (i + j) as f64))
                .collect()
        })
        .collect();
    let y = g_evaluate(&lat, &GeneratorSpec::quadratic(1.0).unwrap(), &nu, &pay).unwrap();
    for j in 0..3 {
        assert_eq!(y[2][j], 0.1 * (2 + j) as f64);
    }

    // translation invariance
    let g = GeneratorSpec::quadratic(1.0).unwrap();
    let shifted: Vec<Vec<Option<f64>>> = payoff
        .iter()
        .map(|r| r.iter().map(|v| v.map(|x| x + 0.3)).collect())
        .collect();
    let a = g_evaluate(&lat, &g, &tau, &payoff).unwrap();
    let b = g_evaluate(&lat, &g, &tau, &shifted).unwrap();
    assert_abs_diff_eq!(b[0][0] - a[0][0], 0.3, epsilon = 1e-14);
}

#[test]
fn g_evaluate_rejects_misplaced_payoff() {
    let lat = binomial(2, 0.0);
    let tau = LatticeStoppingTime::terminal(&lat);
    let bad = vec![vec![Some(1.0)], vec![None, None], vec![Some(0.0); 3]];
    assert!(matches!(
        g_evaluate(&lat, &GeneratorSpec::zero(), &tau, &bad),
        Err(Error::PayoffMismatch {
            expected: "undefined",
            ..
        })
    ));
    let missing = vec![
        vec![None],
        vec![None, None],
        vec![Some(0.0), None, Some(0.0)],
    ];
    assert!(matches!(
        g_evaluate(&lat, &GeneratorSpec::zero(), &tau, &missing),
        Err(Error::PayoffMismatch {
            expected: "defined",
            ..
        })
    ));
}

fn terminal_payoff(lat: &RecombiningLattice, xi: &[f64]) -> Vec<Vec<Option<f64>>> {
    let n = lat.n_steps();
    (0..=n)
        .map(|i| {
            if i == n {
                xi.iter().map(|&v| Some(v)).collect()
            } else {
                vec![None; lat.width(i)]
            }
        })
        .collect()
}

#[test]
fn g_evaluation_properties() {
    let lat = binomial(5, 0.0);
    let mut rng = Lcg(11);
    for g in generators() {
        for _ in 0..20 {
            let xi: Vec<f64> = (0..6).map(|_| rng.next()).collect();
            let tau = LatticeStoppingTime::terminal(&lat);
            let full = g_evaluate(&lat, &g, &tau, &terminal_payoff(&lat, &xi)).unwrap();

            // monotonicity
            let bigger: Vec<f64> = xi.iter().map(|v| v + 0.2 * rng.next()).collect();
            let up = g_evaluate(&lat, &g, &tau, &terminal_payoff(&lat, &bigger)).unwrap();
            for i in 0..=5 {
                for j in 0..=i {
                    assert!(full[i][j] <= up[i][j]);
                }
            }

            // time consistency through an intermediate deterministic time
            let nu2 = LatticeStoppingTime::at_step(&lat, 3).unwrap();
            let inner: Vec<Vec<Option<f64>>> = (0..=5)
                .map(|i| {
                    (0..=i)
                        .map(|j| nu2.stops_at(i, j).then(|| full[i][j]))
                        .collect()
                })
                .collect();
            let outer = g_evaluate(&lat, &g, &nu2, &inner).unwrap();
            assert_abs_diff_eq!(outer[0][0], full[0][0], epsilon = 1e-12);
            assert_abs_diff_eq!(outer[1][1], full[1][1], epsilon = 1e-12);
        }
    }
}

#[test]
fn zero_one_law_on_disjoint_subtrees() {
    // node (2,0) reaches terminal nodes 0..=2, node (2,2) reaches 2..=4
    let lat = binomial(4, 0.0);
    let mut rng = Lcg(5);
    for g in generators() {
        let xi: Vec<f64> = (0..5).map(|_| rng.next()).collect();
        let tau = LatticeStoppingTime::terminal(&lat);
        let full = g_evaluate(&lat, &g, &tau, &terminal_payoff(&lat, &xi)).unwrap();
        let masked: Vec<f64> = xi
            .iter()
            .enumerate()
            .map(|(k, v)| if k <= 2 { *v } else { 0.0 })
            .collect();
        let y = g_evaluate(&lat, &g, &tau, &terminal_payoff(&lat, &masked)).unwrap();
        assert_eq!(y[2][0], full[2][0]);
        let masked: Vec<f64> = xi
            .iter()
            .enumerate()
            .map(|(k, v)| if k <= 1 { *v } else { 0.0 })
            .collect();
        let y = g_evaluate(&lat, &g, &tau, &terminal_payoff(&lat, &masked)).unwrap();
        assert_eq!(y[2][2], 0.0);
    }
}

#[test]
fn smallest_dominating_supermartingale() {
    let lat = binomial(5, 0.0);
    let mut rng = Lcg(21);
    for g in generators() {
        let reward = random_reward(&lat, &mut rng);
        let opt = optimal_stop(&lat, &g, &reward, &LatticeStoppingTime::at_root(&lat)).unwrap();
        assert!(dominating_supermartingale_gap(&lat, &g, &reward, &opt.y).unwrap() <= 1e-12);
        for i in 0..=5 {
            for j in 0..=i {
                let mut y = opt.y.clone();
                y[i][j] -= 1e-6;
                assert!(dominating_supermartingale_gap(&lat, &g, &reward, &y).unwrap() > 0.0);
            }
        }
    }
}
