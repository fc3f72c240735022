use fairpc_core::oracle::{grid_oracle_2d, random_oracle};
use fairpc_core::solvers::{brent_two_group, dual_gradient, dual_objective, frank_wolfe, primal_value, q_function};
use fairpc_core::{synth, DualWeights, GramSet, SolverConfig};
use nalgebra::{DMatrix, DVector};

/// `random_oracle` over 10⁶ samples with seed 42 (and 2000 refinement rounds)
/// on the three diagonal groups; frozen from a run of the oracle.
const THREE_GROUP_ORACLE_Z: f64 = 1.000_000_000_000_000_4;

fn three_group() -> GramSet {
    let d = |a: f64, b: f64, c: f64| DMatrix::from_diagonal(&DVector::from_column_slice(&[a, b, c]));
    GramSet::from_grams(vec![d(2.0, 1.0, 0.0), d(0.0, 2.0, 1.0), d(1.0, 0.0, 2.0)]).unwrap()
}

fn weights(w: Vec<f64>) -> DualWeights {
    DualWeights::new(w).unwrap()
}

#[test]
fn weak_duality_on_random_instances() {
    let mut rng = synth::rng(100);
    for case in 0..60 {
        let k = 2 + case % 4;
        let n = 2 + case % 5;
        let gs = synth::random_gram_set(&mut rng, k, n);
        let best_primal = (0..200)
            .map(|_| primal_value(&gs, &synth::random_unit(&mut rng, n)).unwrap().0)
            .fold(f64::INFINITY, f64::min);
        for _ in 0..20 {
            let (g, _, _) = dual_objective(&gs, &weights(synth::random_simplex(&mut rng, k))).unwrap();
            assert!(g <= best_primal + 1e-9, "case {case}: g {g} > z {best_primal}");
        }
    }
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = synth::rng(5);
    let step = 1e-5;
    for case in 0..10 {
        let k = 2 + case % 4;
        let gs = synth::random_gram_set(&mut rng, k, 3 + case % 4);
        for _ in 0..5 {
            let mu = synth::random_interior_simplex(&mut rng, k, 0.05);
            let (_, v, _) = dual_objective(&gs, &weights(mu.clone())).unwrap();
            let grad = dual_gradient(&gs, &v).unwrap();
            // Tangent directions e_i − e_j keep the weights on the simplex.
            for i in 0..k {
                for j in 0..k {
                    if i == j {
                        continue;
                    }
                    let shifted = |t: f64| {
                        let mut m = mu.clone();
                        m[i] += t;
                        m[j] -= t;
                        dual_objective(&gs, &weights(m)).unwrap().0
                    };
                    let fd = (shifted(step) - shifted(-step)) / (2.0 * step);
                    let analytic = grad[i] - grad[j];
                    let scale = analytic.abs().max(fd.abs()).max(1.0);
                    assert!((fd - analytic).abs() <= 1e-5 * scale, "case {case}: fd {fd} vs {analytic}");
                }
            }
        }
    }
}

#[test]
fn dual_is_concave_along_segments() {
    let mut rng = synth::rng(6);
    for case in 0..30 {
        let k = 2 + case % 3;
        let gs = synth::random_gram_set(&mut rng, k, 4);
        let a = synth::random_simplex(&mut rng, k);
        let b = synth::random_simplex(&mut rng, k);
        let g = |t: f64| {
            let m: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (1.0 - t) * x + t * y).collect();
            dual_objective(&gs, &weights(m)).unwrap().0
        };
        for i in 1..10 {
            let t = i as f64 / 10.0;
            let chord = (1.0 - t) * g(0.0) + t * g(1.0);
            assert!(g(t) >= chord - 1e-10, "case {case} t {t}");
        }
    }
}

#[test]
fn q_changes_sign_at_most_once() {
    let mut rng = synth::rng(7);
    let mut tested = 0;
    while tested < 100 {
        let gs = synth::random_gram_set(&mut rng, 2, 2 + tested % 5);
        let mut signs = Vec::new();
        let mut degenerate = false;
        for i in 0..100 {
            let mu = i as f64 / 99.0;
            let c = gs.weighted_sum(&[mu, 1.0 - mu]);
            let eig = fairpc_core::eig::symmetric_eigen(&c, 1e-12, 10_000).unwrap();
            if eig.values[0] - eig.values[1] < 1e-8 * eig.values[0] {
                degenerate = true;
                break;
            }
            let (q, _) = q_function(&gs, mu).unwrap();
            if q.abs() > 1e-12 {
                signs.push(q > 0.0);
            }
        }
        if degenerate {
            continue;
        }
        let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
        assert!(changes <= 1, "instance {tested}: {changes} sign changes");
        // q(μ) = h1 − h2 at v(μ) with C(μ) = μS1 + (1−μ)S2 is non-increasing.
        if changes == 1 {
            assert!(signs[0] && !signs[signs.len() - 1]);
        }
        tested += 1;
    }
}

#[test]
fn two_group_solutions_equalize_and_close_the_gap() {
    let mut rng = synth::rng(8);
    for case in 0..50 {
        let gs = synth::random_gram_set(&mut rng, 2, 2 + case % 5);
        let r = brent_two_group(&gs, &SolverConfig::default()).unwrap();
        let z = r.primal_value();
        let scale = z.max(1.0);
        assert!(r.duality_gap().abs() <= 1e-6 * scale, "case {case}: gap {}", r.duality_gap());
        let mu = r.mu.as_slice()[0];
        if mu > 0.0 && mu < 1.0 {
            assert!((r.h[0] - r.h[1]).abs() <= 1e-6 * scale, "case {case}: h {:?}", r.h);
        }
    }
}

#[test]
fn scaling_all_grams_scales_values_not_directions() {
    let mut rng = synth::rng(9);
    for case in 0..20 {
        let gs = synth::random_gram_set(&mut rng, 2, 3 + case % 3);
        let base = brent_two_group(&gs, &SolverConfig::default()).unwrap();
        let scaled = brent_two_group(&gs.scaled(7.5).unwrap(), &SolverConfig::default()).unwrap();
        assert!((scaled.primal_value() - 7.5 * base.primal_value()).abs() <= 1e-9 * scaled.primal_value().max(1.0));
        assert!((scaled.mu.as_slice()[0] - base.mu.as_slice()[0]).abs() <= 1e-8);
        assert!(scaled.v.dot(&base.v).abs() >= 1.0 - 1e-8);
    }
}

#[test]
fn dual_bounds_sandwich_the_oracle() {
    let mut rng = synth::rng(10);
    for case in 0..12 {
        let n = 2 + case % 3;
        let gs = synth::random_gram_set(&mut rng, 2, n);
        let r = brent_two_group(&gs, &SolverConfig::default()).unwrap();
        let (z_oracle, _) = if n == 2 {
            grid_oracle_2d(&gs, 1_000_000).unwrap()
        } else {
            random_oracle(&gs, 20_000, 500, case as u64).unwrap()
        };
        assert!(r.dual_value <= z_oracle + 1e-9, "case {case}");
        assert!(r.primal_value() <= z_oracle + 1e-6, "case {case}: {} vs {z_oracle}", r.primal_value());
        if n == 2 {
            assert!((r.primal_value() - z_oracle).abs() <= 1e-4);
        }
    }
}

#[test]
fn oracle_reproduces_the_pinned_three_group_reference() {
    let (z, v) = random_oracle(&three_group(), 1_000_000, 2000, 42).unwrap();
    assert!((z - THREE_GROUP_ORACLE_Z).abs() <= 1e-12, "{z:e}");
    let x = 1.0 / 3f64.sqrt();
    assert!(v.iter().all(|c| (c.abs() - x).abs() < 1e-6));
}

#[test]
fn frank_wolfe_meets_the_pinned_three_group_reference() {
    let r = frank_wolfe(&three_group(), &SolverConfig::default()).unwrap();
    assert!(r.duality_gap() >= -1e-8);
    assert!(r.dual_value <= r.primal_value());
    assert!(r.dual_value <= THREE_GROUP_ORACLE_Z + 1e-9);
    assert!((r.primal_value() - THREE_GROUP_ORACLE_Z).abs() <= 1e-6, "z = {}", r.primal_value());
    assert!((r.dual_value - THREE_GROUP_ORACLE_Z).abs() <= 1e-3, "g = {}", r.dual_value);
}

#[test]
fn brent_matches_the_grid_oracle_on_the_equal_spectrum_pair() {
    let gs = GramSet::from_grams(vec![
        DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 1.0]),
        DMatrix::from_row_slice(2, 2, &[2.5, 1.5, 1.5, 2.5]),
    ])
    .unwrap();
    let (z_grid, v_grid) = grid_oracle_2d(&gs, 1_000_000).unwrap();
    // S2 is S1 rotated by 45°, so h1 = 3 sin²θ and h2 = 3 sin²(θ − 45°) cross at 22.5°.
    let closed_form = 3.0 * 22.5f64.to_radians().sin().powi(2);
    assert!((z_grid - closed_form).abs() <= 1e-10);
    let r = brent_two_group(&gs, &SolverConfig::default()).unwrap();
    assert!((r.primal_value() - z_grid).abs() <= 1e-4);
    assert!((r.mu.as_slice()[0] - 0.5).abs() <= 1e-6);
    assert!(r.v.dot(&v_grid).abs() >= 1.0 - 1e-8);
}
