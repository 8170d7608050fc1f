mod common;

use common::{channel, channels, dominated, SinrOracle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use walras_miso::economy::{
    contract_curve, contract_curve_branches, core_bounds, indifference_good1_of_good2, indifference_good2_of_good1,
    sample_contract_curve, tangency_residual, utility_goods, Allocation,
};
use walras_miso::Link;

#[test]
fn utility_matches_beam_oracle() {
    for (ch, g) in channels(0.0, 2, 10) {
        let oracle = SinrOracle::new(&ch);
        for k in Link::BOTH {
            let (lo, lt) = (g.lambda_mrt(k), g.lambda_mrt(k.other()));
            for i in 0..=50 {
                for j in 0..=50 {
                    let (own, other) = (lo * i as f64 / 50.0, lt * j as f64 / 50.0);
                    let u = utility_goods(k, own, other, &g).unwrap();
                    let o = oracle.utility(k, own, other);
                    assert!((u - o).abs() <= 1e-12 * u.max(1.0), "{k} {i} {j}: {u} vs {o}");
                }
            }
        }
    }
}

#[test]
fn indifference_inverts_utility() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for (_, g) in channels(0.0, 6, 10) {
        for k in Link::BOTH {
            let (lo, lt) = (g.lambda_mrt(k), g.lambda_mrt(k.other()));
            let mut checked = 0;
            while checked < 100 {
                let own = lo * rng.random_range(0.01..1.0);
                let other = lt * rng.random_range(0.0..1.0);
                let phi = utility_goods(k, own, other, &g).unwrap();
                let y = indifference_good2_of_good1(k, own, phi, &g).unwrap();
                assert!((y - other).abs() <= 1e-9, "other good: {y} vs {other}");
                assert!((utility_goods(k, own, y, &g).unwrap() - phi).abs() <= 1e-9 * phi.max(1.0));
                let x = indifference_good1_of_good2(k, other, phi, &g).unwrap();
                assert!((x - own).abs() <= 1e-8, "own good: {x} vs {own}");
                checked += 1;
            }
        }
    }
}

#[test]
fn indifference_curves_are_convex() {
    for (_, g) in channels(0.0, 10, 20) {
        let nash = [
            utility_goods(Link::One, g.lambda_mrt(Link::One), 0.0, &g).unwrap(),
            utility_goods(Link::Two, g.lambda_mrt(Link::Two), 0.0, &g).unwrap(),
        ];
        for (i, k) in Link::BOTH.into_iter().enumerate() {
            let lo = g.lambda_mrt(k);
            let top = utility_goods(k, lo, g.lambda_mrt(k.other()), &g).unwrap();
            for scale in [0.0, 0.3, 0.7] {
                let phi = nash[i] + scale * (top - nash[i]);
                let pts: Vec<f64> = (0..101)
                    .filter_map(|j| indifference_good2_of_good1(k, lo * (0.01 + 0.99 * j as f64 / 100.0), phi, &g).ok())
                    .collect();
                // the in-box samples of a level above Nash form one contiguous run
                assert!(pts.len() >= 3, "level {scale} of link {k}");
                for w in pts.windows(3) {
                    assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-9);
                }
            }
        }
    }
}

#[test]
fn contract_curve_matches_pareto_oracle() {
    for (ch, g) in channels(0.0, 1, 5) {
        let oracle = SinrOracle::new(&ch);
        let x22 = 0.5 * g.lambda_mrt(Link::Two);
        let x11 = contract_curve(x22, &g).unwrap();
        let level = oracle.sinr(x11, x22).1;
        let step = g.lambda_mrt(Link::One) / 2000.0;
        let expected = oracle.pareto_lambda1(level, 2001);
        assert!((x11 - expected).abs() <= 2.0 * step, "{x11} vs {expected}");
    }
}

#[test]
fn curve_is_monotone_and_tangent() {
    for (_, g) in channels(0.0, 40, 20) {
        let curve = sample_contract_curve(&g, 1000).unwrap();
        assert_eq!(curve.len(), 1000);
        for w in curve.windows(2) {
            assert!(w[1].sinr.phi2 > w[0].sinr.phi2);
            assert!(w[1].sinr.phi1 < w[0].sinr.phi1);
        }
        for p in &curve {
            assert!(p.residual <= 1e-7, "residual {}", p.residual);
        }
    }
}

#[test]
fn curve_is_undominated_by_region_grid() {
    for (ch, g) in channels(0.0, 77, 3) {
        let grid = SinrOracle::new(&ch).grid(401);
        for p in sample_contract_curve(&g, 1000).unwrap() {
            assert!(!dominated((p.sinr.phi1, p.sinr.phi2), &grid, 1e-9));
        }
    }
}

#[test]
fn at_most_one_qualifying_root() {
    for (_, g) in channels(0.0, 55, 100) {
        for x22 in walras_miso::economy::curve_x22_grid(&g, 1000) {
            assert_eq!(contract_curve_branches(x22, &g).unwrap().len(), 1);
        }
    }
}

#[test]
fn folds_keep_every_branch_on_the_boundary() {
    // at high SNR the boundary can fold; every reported branch is tangent and undominated
    let mut folded = 0;
    for (ch, g) in channels(10.0, 42, 1000) {
        let curve = sample_contract_curve(&g, 300).unwrap();
        if curve.len() == 300 {
            continue;
        }
        folded += 1;
        let grid = SinrOracle::new(&ch).grid(301);
        for p in &curve {
            assert!(p.residual <= 1e-7);
            assert!(!dominated((p.sinr.phi1, p.sinr.phi2), &grid, 1e-9));
        }
    }
    assert!(folded > 0);
}

#[test]
fn curve_moves_toward_zero_forcing_with_snr() {
    let mean_x11 = |snr: f64| {
        let mut sum = 0.0;
        for (_, g) in channels(snr, 3, 50) {
            let l1 = g.lambda_mrt(Link::One);
            let curve = sample_contract_curve(&g, 200).unwrap();
            sum += curve.iter().map(|p| p.alloc.x11 / l1).sum::<f64>() / curve.len() as f64;
        }
        sum / 50.0
    };
    let (low, mid, high) = (mean_x11(-10.0), mean_x11(0.0), mean_x11(10.0));
    assert!(high < mid && mid < low, "{low} {mid} {high}");
}

#[test]
fn core_bounds_dominate_nash_and_match_grid_search() {
    for (_, g) in channels(0.0, 90, 100) {
        let b = core_bounds(&g).unwrap();
        let nash = Allocation::endowment(&g).sinr(&g).unwrap();
        assert!(b.phi1_core >= nash.phi1 && b.phi2_core >= nash.phi2);

        let at1 = b.alloc_at_phi1_core.sinr(&g).unwrap();
        assert!((at1.phi1 - b.phi1_core).abs() <= 1e-12 * b.phi1_core);
        assert!((at1.phi2 - nash.phi2).abs() <= 1e-6);
        let at2 = b.alloc_at_phi2_core.sinr(&g).unwrap();
        assert!((at2.phi2 - b.phi2_core).abs() <= 1e-12 * b.phi2_core);
        assert!((at2.phi1 - nash.phi1).abs() <= 1e-6);

        // grid search: best value over the Pareto samples in the core
        let curve = sample_contract_curve(&g, 1000).unwrap();
        let core: Vec<_> = curve
            .iter()
            .filter(|p| p.sinr.phi1 >= nash.phi1 && p.sinr.phi2 >= nash.phi2)
            .collect();
        let best1 = core.iter().map(|p| p.sinr.phi1).fold(f64::NEG_INFINITY, f64::max);
        let best2 = core.iter().map(|p| p.sinr.phi2).fold(f64::NEG_INFINITY, f64::max);
        assert!(best1 <= b.phi1_core * (1.0 + 1e-12) && best2 <= b.phi2_core * (1.0 + 1e-12));
        // one sample spacing along the curve bounds the grid-search shortfall
        let gap = |f: &dyn Fn(&walras_miso::economy::CurvePoint) -> f64| {
            curve.windows(2).map(|w| (f(&w[1]) - f(&w[0])).abs()).fold(0.0, f64::max)
        };
        assert!(b.phi1_core - best1 <= gap(&|p| p.sinr.phi1));
        assert!(b.phi2_core - best2 <= gap(&|p| p.sinr.phi2));
    }
}

#[test]
fn tangency_detects_points_off_the_curve() {
    let (_, g) = channel(0.0, 19);
    let x22 = 0.4 * g.lambda_mrt(Link::Two);
    let x11 = contract_curve(x22, &g).unwrap();
    let on = Allocation::from_box_coords(x11, x22, &g).unwrap();
    assert!(tangency_residual(&on, &g).unwrap() <= 1e-7);
    let shifted = if x11 + 0.05 < g.lambda_mrt(Link::One) { x11 + 0.05 } else { x11 - 0.05 };
    let off = Allocation::from_box_coords(shifted, x22, &g).unwrap();
    assert!(tangency_residual(&off, &g).unwrap() > 1e-3);
}
